//! Pipeline hyperparameters.
//!
//! Values come from, in increasing precedence: built-in defaults, a TOML
//! config file, command line flags. Every key is optional in the file.
//!
//! ```toml
//! t_w = -18.0
//! min_sessions = 100
//! sigma = 50
//! rho = 3.0
//! tau = 0.5
//! t_i = 0.0001
//! top_k = 1000
//! t_p = 0.1
//! t_n = 0.005
//! min_pos = 10
//! min_neg = 300
//! smoothing = { numerator = 1.0, denominator = 30.0 }
//! session_bounds = { min = 5, max = 20 }
//! max_malformed_fraction = 0.01
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SessionBounds;
use crate::error::{Error, Result};
use crate::graph::{DEFAULT_MIN_SESSIONS, DEFAULT_T_W};
use crate::phase1::Phase1Params;
use crate::phase2::{Smoothing, SplitParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub t_w: f64,
    pub min_sessions: u64,
    pub sigma: usize,
    pub rho: f64,
    pub tau: f64,
    pub t_i: f64,
    pub top_k: usize,
    pub t_p: f64,
    pub t_n: f64,
    pub min_pos: u64,
    pub min_neg: u64,
    pub smoothing: Smoothing,
    pub session_bounds: Bounds,
    /// Share of sessions-file lines that may be invalid UTF-8 before the
    /// run is aborted.
    pub max_malformed_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let p1 = Phase1Params::default();
        let split = SplitParams::default();
        let bounds = SessionBounds::default();
        PipelineConfig {
            t_w: DEFAULT_T_W,
            min_sessions: DEFAULT_MIN_SESSIONS,
            sigma: p1.sigma,
            rho: p1.rho,
            tau: p1.tau,
            t_i: p1.t_i,
            top_k: p1.top_k,
            t_p: split.t_p,
            t_n: split.t_n,
            min_pos: split.min_pos_sessions,
            min_neg: split.min_neg_sessions,
            smoothing: Smoothing::default(),
            session_bounds: Bounds {
                min: bounds.min,
                max: bounds.max,
            },
            max_malformed_fraction: 0.01,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn phase1(&self) -> Phase1Params {
        Phase1Params {
            sigma: self.sigma,
            rho: self.rho,
            tau: self.tau,
            t_i: self.t_i,
            top_k: self.top_k,
        }
    }

    pub fn split(&self) -> SplitParams {
        SplitParams {
            t_p: self.t_p,
            t_n: self.t_n,
            min_pos_sessions: self.min_pos,
            min_neg_sessions: self.min_neg,
        }
    }

    pub fn session_bounds(&self) -> SessionBounds {
        SessionBounds {
            min: self.session_bounds.min,
            max: self.session_bounds.max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_w.is_finite() {
            return Err(Error::Config("t_w must be finite".into()));
        }
        if self.min_sessions < 1 {
            return Err(Error::Config("min_sessions must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.max_malformed_fraction) {
            return Err(Error::Config(
                "max_malformed_fraction must be in [0, 1]".into(),
            ));
        }
        self.phase1().validate()?;
        self.split().validate()?;
        self.smoothing.validate()?;
        self.session_bounds().validate()
    }
}
