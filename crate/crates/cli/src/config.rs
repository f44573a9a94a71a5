use std::path::Path;

use serde::Deserialize;
use sfiegarch::data::Partial;
use sfiegarch::forecast::EMethod;
use sfiegarch::ModelFile;

use crate::error::CliError;

/// Optional JSON file supplying defaults; command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub model: Option<ModelFile>,
    pub sim: SimConfig,
    pub fit: FitSection,
    pub forecast: ForecastSection,
    pub acov: AcovSection,
    pub spectrum: SpectrumSection,
    pub diag: DiagSection,
    pub evaluate: EvaluateSection,
    pub ingest: IngestSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: Option<usize>,
    pub burn_in: Option<usize>,
    pub truncation: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub column: Option<String>,
    pub s: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub fixed_d: Option<f64>,
    pub nu: Option<f64>,
    pub ar_lags: Option<Vec<usize>>,
    pub ma_lags: Option<Vec<usize>>,
    pub include_mean: Option<bool>,
    pub elimination_level: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub column: Option<String>,
    pub horizon: Option<usize>,
    pub method: Option<EMethod>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcovSection {
    pub max_lag: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagSection {
    pub column: Option<String>,
    pub lags: Option<Vec<usize>>,
    pub fitted_params: Option<usize>,
    pub nu_grid: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub horizon: Option<usize>,
    pub hac_lags: Option<usize>,
    pub n_fit: Option<usize>,
    pub lags: Option<Vec<usize>>,
    pub fitted_params: Option<usize>,
    pub nu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub block: Option<usize>,
    pub partial: Option<Partial>,
    pub scale: Option<f64>,
    pub frequency: Option<String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
