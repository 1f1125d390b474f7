//! Experiment configuration file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use irsa_core::energy::{AnalyticOptions, ExpectationMode, LossForm, ZeroReplicaRule};
use irsa_core::{DegreeDistribution, FrameConfig, Scheme, SweepSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub frame: FrameSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    /// Slots per frame.
    pub n: usize,
    /// `Λ_r` for `r = 0, 1, ...`.
    pub lambda: Vec<f64>,
    #[serde(default = "one")]
    pub power: f64,
    #[serde(default = "one")]
    pub packet_duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub loads: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Include standard IRSA rows.
    pub standard: bool,
    /// First-part lengths of the two-step rows.
    pub alphas: Vec<usize>,
    /// Worker threads, 0 for all cores.
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogSource {
    #[default]
    Builtin,
    Enumerate,
    File,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub mode: ExpectationMode,
    pub form: LossForm,
    pub zero_replicas: ZeroReplicaRule,
    pub catalog: CatalogSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog_path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

fn one() -> f64 {
    1.0
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            loads: (1..=9).map(|i| i as f64 / 10.0).collect(),
            trials: 10_000,
            seed: 1,
            standard: true,
            alphas: vec![100, 150],
            workers: 0,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            frame: FrameSection {
                n: 200,
                lambda: vec![0.0, 0.0, 0.0, 1.0],
                power: 1.0,
                packet_duration: 1.0,
            },
            sweep: SweepSection::default(),
            analysis: AnalysisSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json` (the echo written
    /// into JSON results).
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            // a full result file carries the config under "config"
            let value = match value.get("config") {
                Some(config) => config.clone(),
                None => value,
            };
            serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))
        } else {
            Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn distribution(&self) -> anyhow::Result<DegreeDistribution> {
        DegreeDistribution::base(self.frame.lambda.clone()).context("frame.lambda")
    }

    pub fn frame_config(&self) -> anyhow::Result<FrameConfig> {
        let dist = self.distribution()?;
        let alpha = self.frame.n.max(dist.r_max());
        let config = FrameConfig::new(self.frame.n, 0, alpha, dist)
            .and_then(|c| c.with_energy(self.frame.power, self.frame.packet_duration))
            .context("frame")?;
        Ok(config)
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        let mut schemes = Vec::new();
        if self.sweep.standard {
            schemes.push(Scheme::Standard);
        }
        schemes.extend(self.sweep.alphas.iter().map(|&alpha| Scheme::TwoStep { alpha }));
        schemes
    }

    pub fn sweep_spec(&self) -> anyhow::Result<SweepSpec> {
        let spec = SweepSpec {
            base: self.frame_config()?,
            loads: self.sweep.loads.clone(),
            trials: self.sweep.trials,
            seed: self.sweep.seed,
            schemes: self.schemes(),
            workers: self.sweep.workers,
        };
        spec.validate().context("sweep")?;
        Ok(spec)
    }

    pub fn analytic_options(&self) -> AnalyticOptions {
        AnalyticOptions {
            mode: self.analysis.mode,
            form: self.analysis.form,
            zero_replicas: self.analysis.zero_replicas,
        }
    }

    /// Checks everything a run needs before any work starts.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.sweep_spec()?;
        if self.analysis.catalog == CatalogSource::File && self.analysis.catalog_path.is_none() {
            bail!("analysis.catalog = \"file\" needs analysis.catalog_path");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT_FILE: &str = include_str!("../../../configs/default.toml");

    #[test]
    fn default_file_matches_defaults() {
        let config = ExperimentConfig::from_toml(DEFAULT_FILE).unwrap();
        assert_eq!(config, ExperimentConfig::default());
        config.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut config = ExperimentConfig::default();
        config.analysis.catalog = CatalogSource::File;
        config.analysis.catalog_path = Some("table.toml".into());
        config.analysis.mode = ExpectationMode::PaperMarginal;
        config.output.format = Format::Json;
        config.sweep.loads = vec![0.05, 0.75, 1.0 / 3.0];
        let back = ExperimentConfig::from_toml(&config.to_toml()).unwrap();
        assert_eq!(back, config);
        let json = serde_json::to_string(&config).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), config);
    }

    #[test]
    fn unknown_key_reports_location() {
        let err = ExperimentConfig::from_toml("[frame]\nn = 200\nlambda = [0, 0, 0, 1]\nslots = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("slots") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn sections_default() {
        let config = ExperimentConfig::from_toml("[frame]\nn = 50\nlambda = [0, 0, 1]\n").unwrap();
        assert_eq!(config.sweep, SweepSection::default());
        assert_eq!(config.frame.power, 1.0);
    }

    #[test]
    fn invalid_runs_are_rejected() {
        let mut config = ExperimentConfig::default();
        config.sweep.trials = 0;
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.sweep.alphas = vec![2];
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.sweep.loads = vec![0.1, -0.2];
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.frame.lambda = vec![0.0, 0.5, 0.5];
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.analysis.catalog = CatalogSource::File;
        assert!(config.validate().is_err());
    }

    #[test]
    fn scheme_order() {
        let schemes = ExperimentConfig::default().schemes();
        assert_eq!(
            schemes,
            vec![Scheme::Standard, Scheme::TwoStep { alpha: 100 }, Scheme::TwoStep { alpha: 150 }]
        );
    }
}
