//! Optional TOML config file. Values here sit between CLI flags and built-in defaults.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_star: Option<f64>,
    pub alpha_inf: Option<f64>,
    pub schedule: Option<String>,
    pub ramp_time: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    pub init_amplitude: Option<f64>,
    pub record_stride: Option<usize>,
    pub capture_check_stride: Option<usize>,
    pub integrator: Option<String>,
    pub b5_enumeration_cap: Option<usize>,
    pub max_retries: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::Error::new(UsageError(format!("config {}: {e}", path.display()))))
    }
}

/// Marks errors that should exit with the usage status.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// First present value: CLI flag, then config file, then default.
pub fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None::<i32>, None, 3), 3);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
        let c: FileConfig = toml::from_str("beta = 2.0\nseed = 7\nschedule = \"tanh\"").unwrap();
        assert_eq!((c.beta, c.seed, c.schedule.as_deref()), (Some(2.0), Some(7), Some("tanh")));
    }
}
