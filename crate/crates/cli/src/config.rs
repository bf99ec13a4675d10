//! `--config` files: defaults for flags not given on the command line.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub werner_p: Option<f64>,
    pub mode_overlap: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub n0: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"seed": 1, "sed": 2}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"noise": {"p": 0.9}}"#).is_err());
        let c: RunConfig =
            serde_json::from_str(r#"{"seed": 3, "noise": {"werner_p": 0.9}, "format": "csv"}"#)
                .unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.noise.werner_p, Some(0.9));
        assert_eq!(c.format, Some(Format::Csv));
    }
}
