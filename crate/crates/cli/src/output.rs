//! Result rows and their CSV / JSON encodings.

use std::io::Write;

use irsa_core::energy::{ExpectationMode, LossForm};
use irsa_core::{LoadPointStats, Report, Scheme};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};

/// One simulated (scheme, alpha, G) point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimRow {
    pub scheme: &'static str,
    pub alpha: usize,
    #[serde(rename = "G")]
    pub load: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(rename = "E_mean")]
    pub energy: f64,
    #[serde(rename = "E_ci95")]
    pub energy_ci95: f64,
    #[serde(rename = "E_first")]
    pub energy_first: f64,
    #[serde(rename = "E_second")]
    pub energy_second: f64,
    pub plr: f64,
    pub plr_ci95: f64,
    pub throughput: f64,
    pub eta: f64,
}

impl SimRow {
    pub fn from_stats(s: &LoadPointStats) -> Self {
        SimRow {
            scheme: s.scheme.name(),
            alpha: s.scheme.alpha(s.n),
            load: s.load,
            trials: s.trials,
            seed: s.seed,
            energy: s.energy_mean(),
            energy_ci95: s.energy_ci95(),
            energy_first: s.energy_first(),
            energy_second: s.energy_second(),
            plr: s.plr(),
            plr_ci95: s.plr_ci95(),
            throughput: s.throughput(),
            eta: s.eta(),
        }
    }
}

/// One analytic point; the simulation columns plus the model settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticRow {
    pub scheme: &'static str,
    pub alpha: usize,
    #[serde(rename = "G")]
    pub load: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(rename = "E_mean")]
    pub energy: f64,
    #[serde(rename = "E_ci95")]
    pub energy_ci95: f64,
    #[serde(rename = "E_first")]
    pub energy_first: f64,
    #[serde(rename = "E_second")]
    pub energy_second: f64,
    pub plr: f64,
    pub plr_ci95: f64,
    pub throughput: f64,
    pub eta: f64,
    pub mode: ExpectationMode,
    pub form: LossForm,
    pub clamped_flag: bool,
    pub regime_warning: bool,
    /// `Γ_t`; JSON only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
}

impl AnalyticRow {
    pub fn from_report(r: &Report, scheme: Scheme, seed: u64) -> Self {
        AnalyticRow {
            scheme: match scheme {
                Scheme::Standard => "analytic-standard",
                Scheme::TwoStep { .. } => "analytic",
            },
            alpha: r.alpha,
            load: r.load,
            trials: 0,
            seed,
            energy: r.energy,
            energy_ci95: 0.0,
            energy_first: r.energy_first,
            energy_second: r.energy_second,
            plr: r.plr.value,
            plr_ci95: 0.0,
            throughput: r.throughput(),
            eta: r.eta,
            mode: r.options.mode,
            form: r.options.form,
            clamped_flag: r.clamped(),
            regime_warning: r.regime_warning(),
            gamma: Some(r.gamma.coeffs().to_vec()),
        }
    }
}

#[derive(Serialize)]
struct Document<'a, R> {
    version: &'static str,
    timestamp: String,
    command: &'a str,
    config: &'a ExperimentConfig,
    rows: &'a [R],
}

/// Plain decimal text; `Display` for floats never uses an exponent.
fn cell(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => u.to_string(),
            (_, Some(i), _) => i.to_string(),
            (_, _, Some(f)) => f.to_string(),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}

/// Writes `rows` as CSV, or as a JSON document carrying the config echo.
pub fn write_rows<R: Serialize, W: Write>(
    out: W,
    format: Format,
    command: &str,
    config: &ExperimentConfig,
    rows: &[R],
) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for (i, row) in rows.iter().enumerate() {
                let serde_json::Value::Object(fields) = serde_json::to_value(row)? else {
                    anyhow::bail!("row is not a record");
                };
                if i == 0 {
                    w.write_record(fields.keys())?;
                }
                w.write_record(fields.values().map(cell))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = Document {
                version: env!("CARGO_PKG_VERSION"),
                timestamp: timestamp(),
                command,
                config,
                rows,
            };
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> SimRow {
        SimRow {
            scheme: "two-step",
            alpha: 100,
            load: 0.1,
            trials: 10,
            seed: 7,
            energy: 1.9,
            energy_ci95: 0.01,
            energy_first: 1.5,
            energy_second: 0.4,
            plr: 1e-7,
            plr_ci95: 0.0,
            throughput: 0.1,
            eta: 0.05,
        }
    }

    #[test]
    fn csv_header_and_plain_decimals() {
        let mut buf = Vec::new();
        write_rows(&mut buf, Format::Csv, "simulate", &ExperimentConfig::default(), &[row()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scheme,alpha,G,trials,seed,E_mean,E_ci95,E_first,E_second,plr,plr_ci95,throughput,eta"
        );
        assert_eq!(lines.next().unwrap(), "two-step,100,0.1,10,7,1.9,0.01,1.5,0.4,0.0000001,0,0.1,0.05");
    }

    #[test]
    fn json_document_echoes_config() {
        let mut buf = Vec::new();
        let config = ExperimentConfig::default();
        write_rows(&mut buf, Format::Json, "simulate", &config, &[row()]).unwrap();
        let doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(doc["rows"][0]["E_mean"], 1.9);
        let echo: ExperimentConfig = serde_json::from_value(doc["config"].clone()).unwrap();
        assert_eq!(echo, config);
    }
}
