//! Run configuration as a flat `key = value` file.

use crate::error::{Error, Result};
use crate::imaging::ResponseCurve;
use crate::kernel::RegressionConfig;
use crate::lowrank::{CompletionParams, DecomposeParams, SupportPrior, WeightRule};
use crate::motion::FlowParams;
use crate::pipeline::{LowRankDomain, SynthesisConfig};
use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

/// The configuration file shipped with the crate; parses to `RunConfig::default()`.
pub const DEFAULT_CONFIG: &str = include_str!("../../data/default.conf");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// β and γ follow the residual noise level of each iteration.
    Scaled,
    /// β and γ are used as given.
    Fixed,
}

/// Every tunable of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub completion_iters: usize,
    pub completion_tol: f64,
    pub max_rank: usize,
    pub weight_rule: RuleKind,
    /// Foreground cost; multiplies σ̂² under the scaled rule.
    pub beta: f64,
    /// Smoothness strength; multiplies β under the scaled rule.
    pub gamma: f64,
    pub sigma_floor: f64,
    pub w_s: f64,
    pub w_t: f64,
    pub outer_iters: usize,
    pub support_prior: SupportPrior,
    pub debias: bool,
    /// Overrides the threshold stored in the response file.
    pub z_th: Option<u16>,
    pub tikhonov: f64,
    pub steering_reg: f64,
    pub kappa: f64,
    /// Side of the regression block, odd.
    pub block_size: usize,
    pub bfgs_iters: usize,
    pub grad_tol: f64,
    pub levels: usize,
    pub boost_gamma: f64,
    pub lowrank_domain: LowRankDomain,
    pub flow_smoothness: f64,
    pub flow_sor_iters: usize,
    pub flow_relaxation: f64,
    pub flow_levels: usize,
    pub flow_warps: usize,
    pub seed: u64,
}

pub const KEYS: &[&str] = &[
    "alpha",
    "completion_iters",
    "completion_tol",
    "max_rank",
    "weight_rule",
    "beta",
    "gamma",
    "sigma_floor",
    "w_s",
    "w_t",
    "outer_iters",
    "support_prior",
    "debias",
    "z_th",
    "tikhonov",
    "steering_reg",
    "kappa",
    "block_size",
    "bfgs_iters",
    "grad_tol",
    "levels",
    "boost_gamma",
    "lowrank_domain",
    "flow_smoothness",
    "flow_sor_iters",
    "flow_relaxation",
    "flow_levels",
    "flow_warps",
    "seed",
];

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_synthesis(&SynthesisConfig::default(), 7)
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{}: cannot parse {:?}", key, value)))
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options.iter().find(|(name, _)| *name == value).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        Error::Config(format!("{}: {:?} is not one of {}", key, value, names.join(", ")))
    })
}

const RULES: &[(&str, RuleKind)] = &[("scaled", RuleKind::Scaled), ("fixed", RuleKind::Fixed)];
const PRIORS: &[(&str, SupportPrior)] = &[("pairwise", SupportPrior::Pairwise), ("linear", SupportPrior::Linear)];
const DOMAINS: &[(&str, LowRankDomain)] = &[("gamma", LowRankDomain::Gamma), ("linear", LowRankDomain::Linear)];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], v: T) -> &'static str {
    options.iter().find(|(_, o)| *o == v).map(|(n, _)| *n).expect("every variant is named")
}

fn show(v: impl Display) -> String {
    v.to_string()
}

impl RunConfig {
    pub fn from_synthesis(c: &SynthesisConfig, seed: u64) -> Self {
        let d = &c.decompose;
        let (weight_rule, beta, gamma, sigma_floor) = match d.rule {
            WeightRule::Scaled {
                beta_per_var,
                gamma_per_beta,
                sigma_floor,
            } => (RuleKind::Scaled, beta_per_var, gamma_per_beta, sigma_floor),
            WeightRule::Fixed { beta, gamma } => (RuleKind::Fixed, beta, gamma, 0.0),
        };
        RunConfig {
            alpha: d.completion.alpha,
            completion_iters: d.completion.max_iters,
            completion_tol: d.completion.tol,
            max_rank: d.completion.max_rank,
            weight_rule,
            beta,
            gamma,
            sigma_floor,
            w_s: d.w_s,
            w_t: d.w_t,
            outer_iters: d.outer_iters,
            support_prior: d.prior,
            debias: d.debias,
            z_th: None,
            tikhonov: c.regression.tikhonov,
            steering_reg: c.regression.steering_reg,
            kappa: c.regression.kappa,
            block_size: 2 * c.regression.block_radius + 1,
            bfgs_iters: c.regression.bfgs_iters,
            grad_tol: c.regression.grad_tol,
            levels: c.levels,
            boost_gamma: c.gamma,
            lowrank_domain: c.domain,
            flow_smoothness: c.flow.smoothness,
            flow_sor_iters: c.flow.sor_iters,
            flow_relaxation: c.flow.relaxation,
            flow_levels: c.flow.levels,
            flow_warps: c.flow.warps,
            seed,
        }
    }

    /// Pipeline settings; fails on any invalid value.
    pub fn synthesis(&self) -> Result<SynthesisConfig> {
        if self.block_size < 3 || self.block_size.is_multiple_of(2) {
            return Err(Error::Config(format!("block_size must be odd and at least 3, got {}", self.block_size)));
        }
        let rule = match self.weight_rule {
            RuleKind::Scaled => WeightRule::Scaled {
                beta_per_var: self.beta,
                gamma_per_beta: self.gamma,
                sigma_floor: self.sigma_floor,
            },
            RuleKind::Fixed => {
                if !(self.beta > 0.0) || !(self.gamma >= 0.0) {
                    return Err(Error::Config("fixed rule needs beta > 0 and gamma >= 0".into()));
                }
                WeightRule::Fixed {
                    beta: self.beta,
                    gamma: self.gamma,
                }
            }
        };
        if !(self.completion_tol > 0.0) || !(self.grad_tol > 0.0) {
            return Err(Error::Config("completion_tol and grad_tol must be positive".into()));
        }
        if self.bfgs_iters == 0 {
            return Err(Error::Config("bfgs_iters must be at least 1".into()));
        }
        let config = SynthesisConfig {
            levels: self.levels,
            gamma: self.boost_gamma,
            regression: RegressionConfig {
                block_radius: self.block_size / 2,
                tikhonov: self.tikhonov,
                steering_reg: self.steering_reg,
                kappa: self.kappa,
                bfgs_iters: self.bfgs_iters,
                grad_tol: self.grad_tol,
            },
            decompose: DecomposeParams {
                completion: CompletionParams {
                    alpha: self.alpha,
                    max_iters: self.completion_iters,
                    tol: self.completion_tol,
                    max_rank: self.max_rank,
                },
                w_s: self.w_s,
                w_t: self.w_t,
                rule,
                outer_iters: self.outer_iters,
                prior: self.support_prior,
                debias: self.debias,
            },
            flow: FlowParams {
                smoothness: self.flow_smoothness,
                sor_iters: self.flow_sor_iters,
                relaxation: self.flow_relaxation,
                levels: self.flow_levels,
                warps: self.flow_warps,
            },
            domain: self.lowrank_domain,
        };
        config.validate()?;
        Ok(config)
    }

    /// The response curve with this run's threshold applied.
    pub fn response(&self, crf: &ResponseCurve) -> Result<ResponseCurve> {
        match self.z_th {
            Some(z) => crf.with_threshold(z),
            None => Ok(crf.clone()),
        }
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "alpha" => show(self.alpha),
            "completion_iters" => show(self.completion_iters),
            "completion_tol" => show(self.completion_tol),
            "max_rank" => show(self.max_rank),
            "weight_rule" => name_of(RULES, self.weight_rule).into(),
            "beta" => show(self.beta),
            "gamma" => show(self.gamma),
            "sigma_floor" => show(self.sigma_floor),
            "w_s" => show(self.w_s),
            "w_t" => show(self.w_t),
            "outer_iters" => show(self.outer_iters),
            "support_prior" => name_of(PRIORS, self.support_prior).into(),
            "debias" => show(self.debias),
            "z_th" => self.z_th.map_or_else(|| "auto".into(), show),
            "tikhonov" => show(self.tikhonov),
            "steering_reg" => show(self.steering_reg),
            "kappa" => show(self.kappa),
            "block_size" => show(self.block_size),
            "bfgs_iters" => show(self.bfgs_iters),
            "grad_tol" => show(self.grad_tol),
            "levels" => show(self.levels),
            "boost_gamma" => show(self.boost_gamma),
            "lowrank_domain" => name_of(DOMAINS, self.lowrank_domain).into(),
            "flow_smoothness" => show(self.flow_smoothness),
            "flow_sor_iters" => show(self.flow_sor_iters),
            "flow_relaxation" => show(self.flow_relaxation),
            "flow_levels" => show(self.flow_levels),
            "flow_warps" => show(self.flow_warps),
            "seed" => show(self.seed),
            _ => return None,
        })
    }

    /// Sets one key from its text form. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "alpha" => self.alpha = parse_value(key, v)?,
            "completion_iters" => self.completion_iters = parse_value(key, v)?,
            "completion_tol" => self.completion_tol = parse_value(key, v)?,
            "max_rank" => self.max_rank = parse_value(key, v)?,
            "weight_rule" => self.weight_rule = choice(key, v, RULES)?,
            "beta" => self.beta = parse_value(key, v)?,
            "gamma" => self.gamma = parse_value(key, v)?,
            "sigma_floor" => self.sigma_floor = parse_value(key, v)?,
            "w_s" => self.w_s = parse_value(key, v)?,
            "w_t" => self.w_t = parse_value(key, v)?,
            "outer_iters" => self.outer_iters = parse_value(key, v)?,
            "support_prior" => self.support_prior = choice(key, v, PRIORS)?,
            "debias" => self.debias = parse_value(key, v)?,
            "z_th" => self.z_th = if v == "auto" { None } else { Some(parse_value(key, v)?) },
            "tikhonov" => self.tikhonov = parse_value(key, v)?,
            "steering_reg" => self.steering_reg = parse_value(key, v)?,
            "kappa" => self.kappa = parse_value(key, v)?,
            "block_size" => self.block_size = parse_value(key, v)?,
            "bfgs_iters" => self.bfgs_iters = parse_value(key, v)?,
            "grad_tol" => self.grad_tol = parse_value(key, v)?,
            "levels" => self.levels = parse_value(key, v)?,
            "boost_gamma" => self.boost_gamma = parse_value(key, v)?,
            "lowrank_domain" => self.lowrank_domain = choice(key, v, DOMAINS)?,
            "flow_smoothness" => self.flow_smoothness = parse_value(key, v)?,
            "flow_sor_iters" => self.flow_sor_iters = parse_value(key, v)?,
            "flow_relaxation" => self.flow_relaxation = parse_value(key, v)?,
            "flow_levels" => self.flow_levels = parse_value(key, v)?,
            "flow_warps" => self.flow_warps = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {:?}", key))),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {:?} is not key=value", o)))?;
            self.set(k.trim(), v)?;
        }
        self.synthesis().map(|_| ())
    }

    /// Starts from the defaults; keys may appear at most once. `#` starts a comment.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {:?}", n + 1, k)));
            }
            config
                .set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, e)))?;
        }
        config.synthesis()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Every key, one per line, in a form `parse` reads back unchanged.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{} = {}\n", k, self.get(k).expect("listed keys are known")))
            .collect()
    }
}
