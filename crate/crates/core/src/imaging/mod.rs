//! Frames, camera response handling and exposedness weighting.

pub mod crf;
pub mod exposedness;
pub mod frame;

pub use crf::ResponseCurve;
pub use exposedness::{phi_of_code, phi_weight, well_exposed_mask, ExposednessWeights, ExposureKind};
pub use frame::{
    apply_response, boosted_value, exposure_boost, inverse_response, unboost_value, IrradianceFrame, LdrFrame,
};
