//! Low-rank background and sparse foreground support of a frame window.

pub mod completion;
pub mod decompose;
pub mod maxflow;
pub mod mrf;

pub use completion::{complete_background, residual_sigma, svt, Completion, CompletionParams};
pub use decompose::{decompose, nuclear_norm, objective, observed, DecomposeParams, Decomposition, WeightRule};
pub use mrf::{support_energy, update_support, Grid, MrfWeights, SupportPrior};
