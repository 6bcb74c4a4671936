//! Synaptic resource to weight mapping.
//!
//! Plasticity never touches weights directly; it moves the resource `W`, and
//! the effective weight is re-derived through one of two functions:
//!
//! * classic: `w_min + (w_max - w_min) * max(W, 0) / (w_max - w_min + max(W, 0))`,
//!   saturating towards `w_max` and never reaching it;
//! * linear: `W` clamped into `[w_min, w_max]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Classic,
    Linear,
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceKind::Classic => "classic",
            ResourceKind::Linear => "linear",
        })
    }
}

impl FromStr for ResourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(ResourceKind::Classic),
            "linear" => Ok(ResourceKind::Linear),
            other => Err(Error::Config(format!(
                "resource_fn must be classic or linear, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceFunctionConfig {
    pub kind: ResourceKind,
    pub w_min: f64,
    pub w_max: f64,
}

impl ResourceFunctionConfig {
    pub fn new(kind: ResourceKind, w_min: f64, w_max: f64) -> Result<Self> {
        let cfg = Self { kind, w_min, w_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_min.is_finite() && self.w_max.is_finite()) || self.w_min >= self.w_max {
            return Err(Error::Config(format!(
                "need finite w_min < w_max, got w_min={} w_max={}",
                self.w_min, self.w_max
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn weight(&self, resource: f64) -> f64 {
        match self.kind {
            ResourceKind::Classic => weight_classic(resource, self),
            ResourceKind::Linear => weight_linear(resource, self),
        }
    }
}

#[inline]
pub fn weight_classic(resource: f64, cfg: &ResourceFunctionConfig) -> f64 {
    let span = cfg.w_max - cfg.w_min;
    let r = resource.max(0.0);
    cfg.w_min + span * r / (span + r)
}

#[inline]
pub fn weight_linear(resource: f64, cfg: &ResourceFunctionConfig) -> f64 {
    resource.max(cfg.w_min).min(cfg.w_max)
}
