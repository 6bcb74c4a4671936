//! Flat `key = value` configuration files.
//!
//! `#` starts a comment, blank lines are ignored, keys may appear at most
//! once, and unknown keys are rejected. Floats are written in Rust's
//! shortest round-trip form, so parse -> write -> parse is lossless.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::NetworkConfig;

/// Environment variable that overrides `data_dir`.
pub const DATA_DIR_ENV: &str = "COLSNN_DATA_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub n_runs: usize,
    /// Seeded shuffle of the training order (file order otherwise).
    pub shuffle: bool,
    /// Use only the first `train_limit` training images (0 = all).
    pub train_limit: usize,
    /// Use only the first `test_limit` test images (0 = all).
    pub test_limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            data_dir: None,
            out_dir: PathBuf::from("runs/default"),
            n_runs: 1,
            shuffle: false,
            train_limit: 0,
            test_limit: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (key, value) in pairs(text)? {
            if !cfg.set(&key, &value)? && !set_network(&mut cfg.network, &key, &value)? {
                return Err(Error::Config(format!("unknown key {key:?}")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        Ok(())
    }

    /// Applies `COLSNN_DATA_DIR` if set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            self.data_dir = Some(PathBuf::from(dir));
        }
        self
    }

    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "data_dir" => {
                self.data_dir = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            "n_runs" => self.n_runs = parse_value(key, value)?,
            "shuffle" => self.shuffle = parse_value(key, value)?,
            "train_limit" => self.train_limit = parse_value(key, value)?,
            "test_limit" => self.test_limit = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn to_text(&self) -> String {
        let mut out = network_to_text(&self.network);
        let data_dir = self
            .data_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "data_dir = {data_dir}");
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(out, "n_runs = {}", self.n_runs);
        let _ = writeln!(out, "shuffle = {}", self.shuffle);
        let _ = writeln!(out, "train_limit = {}", self.train_limit);
        let _ = writeln!(out, "test_limit = {}", self.test_limit);
        out
    }
}

pub fn network_to_text(c: &NetworkConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("n_columns", c.n_columns.to_string());
    kv("n_micro", c.n_micro.to_string());
    kv("n_inputs", c.n_inputs.to_string());
    kv("tau_v", format!("{:?}", c.tau_v));
    kv("resource_fn", c.resource_fn.kind.to_string());
    kv("w_min", format!("{:?}", c.resource_fn.w_min));
    kv("w_max", format!("{:?}", c.resource_fn.w_max));
    kv("d_reward", format!("{:?}", c.d_reward));
    kv("d_punish", format!("{:?}", c.d_punish));
    kv("init_mode", c.init_mode.to_string());
    kv("init_scale", format!("{:?}", c.init_scale));
    kv("seed", c.seed.to_string());
    kv("eligibility_gated", c.eligibility_gated.to_string());
    kv("rew_dedup", c.rew_dedup.to_string());
    kv("reset_between_images", c.reset_between_images.to_string());
    out
}

pub fn network_from_text(text: &str) -> Result<NetworkConfig> {
    let mut cfg = NetworkConfig::default();
    for (key, value) in pairs(text)? {
        if !set_network(&mut cfg, &key, &value)? {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Sets one network key; `Ok(false)` if the key is not a network key.
pub fn set_network(c: &mut NetworkConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "n_columns" => c.n_columns = parse_value(key, value)?,
        "n_micro" => c.n_micro = parse_value(key, value)?,
        "n_inputs" => c.n_inputs = parse_value(key, value)?,
        "tau_v" => c.tau_v = parse_value(key, value)?,
        "resource_fn" => c.resource_fn.kind = value.parse()?,
        "w_min" => c.resource_fn.w_min = parse_value(key, value)?,
        "w_max" => c.resource_fn.w_max = parse_value(key, value)?,
        "d_reward" => c.d_reward = parse_value(key, value)?,
        "d_punish" => c.d_punish = parse_value(key, value)?,
        "init_mode" => c.init_mode = value.parse()?,
        "init_scale" => c.init_scale = parse_value(key, value)?,
        "seed" => c.seed = parse_value(key, value)?,
        "eligibility_gated" => c.eligibility_gated = parse_value(key, value)?,
        "rew_dedup" => c.rew_dedup = parse_value(key, value)?,
        "reset_between_images" => c.reset_between_images = parse_value(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            ))
        })?;
        let key = key.trim().to_string();
        if !seen.insert(key.clone()) {
            return Err(Error::Config(format!(
                "line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::InitMode;
    use crate::resource::ResourceKind;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_defaults() {
        let cfg = RunConfig::parse(
            "# sweep winner\n\
             resource_fn = classic   # saturating\n\
             tau_v = 12.5\n\
             \n\
             init_mode = zero\n\
             data_dir = /data/mnist\n\
             n_runs = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.network.resource_fn.kind, ResourceKind::Classic);
        assert_eq!(cfg.network.tau_v, 12.5);
        assert_eq!(cfg.network.init_mode, InitMode::Zero);
        assert_eq!(cfg.data_dir.as_deref(), Some(Path::new("/data/mnist")));
        assert_eq!(cfg.n_runs, 10);
        assert_eq!(cfg.network.d_reward, NetworkConfig::default().d_reward);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(RunConfig::parse("learning_rate = 0.1").is_err());
        assert!(RunConfig::parse("tau_v = 1\ntau_v = 2").is_err());
        assert!(RunConfig::parse("tau_v").is_err());
        assert!(RunConfig::parse("tau_v = fast").is_err());
        assert!(RunConfig::parse("w_min = 1\nw_max = 0.5").is_err());
        assert!(RunConfig::parse("n_runs = 0").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            tau in 0.1f64..100.0, lo in -1.0f64..0.0, span in 1e-6f64..2.0,
            d in 1e-6f64..0.1, scale in 0.0f64..1.0, seed in any::<u64>(),
            classic in any::<bool>(), zero in any::<bool>(), flags in any::<[bool; 4]>(),
            n_runs in 1usize..20, limit in 0usize..60_000,
        ) {
            let mut cfg = RunConfig::default();
            cfg.network.tau_v = tau;
            cfg.network.resource_fn.kind = if classic { ResourceKind::Classic } else { ResourceKind::Linear };
            cfg.network.resource_fn.w_min = lo;
            cfg.network.resource_fn.w_max = lo + span;
            cfg.network.d_reward = d;
            cfg.network.d_punish = d * 0.5;
            cfg.network.init_mode = if zero { InitMode::Zero } else { InitMode::Random };
            cfg.network.init_scale = scale;
            cfg.network.seed = seed;
            cfg.network.eligibility_gated = flags[0];
            cfg.network.rew_dedup = flags[1];
            cfg.network.reset_between_images = flags[2];
            cfg.shuffle = flags[3];
            cfg.n_runs = n_runs;
            cfg.train_limit = limit;
            cfg.data_dir = flags[0].then(|| PathBuf::from("/tmp/mnist"));

            let text = cfg.to_text();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
