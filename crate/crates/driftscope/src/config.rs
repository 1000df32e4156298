//! Optional TOML/JSON configuration file. Values set on the command line
//! win over the file, which wins over built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::formats::Format;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub min_support: Option<f64>,
    pub max_len: Option<usize>,
    pub bins: Option<usize>,
    pub window: Option<usize>,
    pub tau_t: Option<f64>,
    pub min_count: Option<u64>,
    pub metric: Option<String>,
    pub prune_t: Option<f64>,
    pub top: Option<usize>,
    pub seed: Option<u64>,
    pub p_max: Option<f64>,
    pub n_exp: Option<usize>,
    pub n_batches: Option<usize>,
    pub batch_size: Option<usize>,
    pub tree_depth: Option<usize>,
    pub label_noise: Option<f64>,
    pub drift_center: Option<f64>,
    pub drift_width: Option<f64>,
    pub supports: Option<Vec<f64>>,
    pub baselines: Option<Vec<String>>,
    pub format: Option<Format>,
}

impl FileConfig {
    /// Parses `.json` as JSON and anything else as TOML.
    pub fn load(path: &Path) -> AppResult<FileConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| AppError::usage(format!("{}: {e}", path.display())))
    }

    pub fn load_opt(path: Option<&Path>) -> AppResult<FileConfig> {
        path.map(FileConfig::load)
            .transpose()
            .map(Option::unwrap_or_default)
    }
}

/// Flag, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn check(ok: bool, msg: impl FnOnce() -> String) -> AppResult<()> {
    if ok {
        Ok(())
    } else {
        Err(AppError::usage(msg()))
    }
}

pub fn check_fraction(name: &str, v: f64, allow_zero: bool) -> AppResult<()> {
    let lower_ok = if allow_zero { v >= 0.0 } else { v > 0.0 };
    check(lower_ok && v <= 1.0, || {
        let lo = if allow_zero { "[0" } else { "(0" };
        format!("{name} must lie in {lo}, 1], got {v}")
    })
}
