//! Human-readable tables and their JSON twins.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use heading_bss::separation::IterationDiagnostics;
use heading_bss::evaluation::SingleEvaluation;
use heading_bss::{EstimatedDirection, EvalReport, MethodParams, Normalization, SeparationResult};
use serde::Serialize;

/// Text goes to `path`, JSON next to it with a `.json` extension (or `.txt`
/// for the text when `path` itself ends in `.json`).
pub fn sidecar_paths(path: &Path) -> (PathBuf, PathBuf) {
    if path.extension().is_some_and(|e| e == "json") {
        (path.with_extension("txt"), path.to_path_buf())
    } else {
        (path.to_path_buf(), path.with_extension("json"))
    }
}

pub fn write_pair<T: Serialize>(path: &Path, text: &str, doc: &T) -> Result<(PathBuf, PathBuf)> {
    let (txt, json) = sidecar_paths(path);
    fs::write(&txt, text).with_context(|| format!("writing {}", txt.display()))?;
    let mut body = serde_json::to_string_pretty(doc)?;
    body.push('\n');
    fs::write(&json, body).with_context(|| format!("writing {}", json.display()))?;
    Ok((txt, json))
}

/// Three significant digits, the precision of the Monte Carlo tables.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mut exp = x.abs().log10().floor() as i32;
    // Rounding may carry into a new leading digit (9.996 -> 10.0).
    if (x.abs() / 10f64.powi(exp) * 100.0).round() >= 1000.0 {
        exp += 1;
    }
    let decimals = (2 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Serialize)]
pub struct SeparationDoc<'a> {
    pub input: String,
    pub channels: usize,
    pub samples: usize,
    pub params: &'a MethodParams,
    pub whitening_transform: &'a [Vec<f64>],
    pub directions: &'a [EstimatedDirection],
    pub iterations: &'a [IterationDiagnostics],
}

impl<'a> SeparationDoc<'a> {
    pub fn new(input: &Path, result: &'a SeparationResult, params: &'a MethodParams) -> Self {
        Self {
            input: input.display().to_string(),
            channels: result.estimates.channels(),
            samples: result.estimates.samples(),
            params,
            whitening_transform: &result.whitened.transform,
            directions: &result.directions,
            iterations: &result.iterations,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = self.params;
        writeln!(s, "input: {}", self.input).unwrap();
        writeln!(s, "method: {}  v_th: {}  alpha: {}", p.method, p.v_th, p.alpha).unwrap();
        writeln!(s, "channels: {}  samples: {}", self.channels, self.samples).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "iter | accepted | v_max | epsilon | support | residual energy | direction").unwrap();
        for (d, it) in self.directions.iter().zip(self.iterations) {
            let eps = it.epsilon.map_or_else(|| "-".to_owned(), |e| format!("{e:.6}"));
            let dir: Vec<String> = d.unit_vector.iter().map(|v| format!("{v:+.6}")).collect();
            writeln!(
                s,
                "{} | {} | {:.6e} | {} | {} | {:.6e} | [{}]",
                it.iteration,
                it.accepted_headings,
                it.v_max,
                eps,
                it.support_size,
                it.residual_energy,
                dir.join(", ")
            )
            .unwrap();
        }
        s
    }
}

#[derive(Debug, Serialize)]
pub struct PairDoc {
    pub source: usize,
    pub estimate: usize,
    pub sign: f64,
    pub correlation: f64,
    pub rms_tot: f64,
    pub rms_max: f64,
}

#[derive(Debug, Serialize)]
pub struct EvaluationDoc {
    pub actual: String,
    pub estimates: String,
    pub normalization: Normalization,
    pub pairs: Vec<PairDoc>,
}

impl EvaluationDoc {
    /// Source and estimate numbers are 1-based, like the CSV columns.
    pub fn new(actual: &Path, estimates: &Path, normalization: Normalization, ev: &SingleEvaluation) -> Self {
        let a = &ev.association;
        let pairs = (0..a.permutation.len())
            .map(|r| PairDoc {
                source: r + 1,
                estimate: a.permutation[r] + 1,
                sign: a.signs[r],
                correlation: a.correlations[r],
                rms_tot: ev.metrics[r].total,
                rms_max: ev.metrics[r].max,
            })
            .collect();
        Self {
            actual: actual.display().to_string(),
            estimates: estimates.display().to_string(),
            normalization,
            pairs,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "actual: {}", self.actual).unwrap();
        writeln!(s, "estimates: {}", self.estimates).unwrap();
        writeln!(s, "normalization: {:?}", self.normalization).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "source | estimate | sign | correlation | RMS_tot | RMS_max").unwrap();
        for p in &self.pairs {
            writeln!(
                s,
                "{} | {} | {:+} | {:.6} | {:.6e} | {:.6e}",
                p.source, p.estimate, p.sign, p.correlation, p.rms_tot, p.rms_max
            )
            .unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Max,
    Tot,
}

#[derive(Debug, Serialize)]
pub struct MonteCarloRow {
    pub params: MethodParams,
    pub total_runs: usize,
    pub failed_runs: usize,
    pub failure_rate: f64,
    /// `None` when every run failed.
    pub report: Option<EvalReport>,
    pub first_failure: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct MonteCarloDoc {
    pub scenario: String,
    pub noise_sd: f64,
    pub master_seed: u64,
    pub sets: usize,
    pub runs_per_set: usize,
    pub normalization: Normalization,
    pub metric: Metric,
    pub sources: usize,
    pub rows: Vec<MonteCarloRow>,
}

impl MonteCarloDoc {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let metric = match self.metric {
            Metric::Max => "RMS_max",
            Metric::Tot => "RMS_tot",
        };
        writeln!(s, "scenario: {}", self.scenario).unwrap();
        writeln!(
            s,
            "noise sd {}, seed {}, {} sets x {} runs, {:?} normalization",
            self.noise_sd, self.master_seed, self.sets, self.runs_per_set, self.normalization
        )
        .unwrap();
        writeln!(s, "mean {metric} x 1e3 over sets (sd across sets in brackets)").unwrap();
        writeln!(s).unwrap();
        let heads: Vec<String> = (1..=self.sources).map(|i| format!("source {i}")).collect();
        writeln!(s, "method | v_th | alpha | {} | failure rate", heads.join(" | ")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = match &row.report {
                Some(r) => r
                    .sources
                    .iter()
                    .map(|src| {
                        let st = match self.metric {
                            Metric::Max => src.rms_max_stats,
                            Metric::Tot => src.rms_tot_stats,
                        };
                        format!("{} ({})", sig3(st.mean * 1e3), sig3(st.sd * 1e3))
                    })
                    .collect(),
                None => vec!["n/a".to_owned(); self.sources],
            };
            writeln!(
                s,
                "{} | {} | {} | {} | {:.1}%",
                row.params.method,
                row.params.v_th,
                row.params.alpha,
                cells.join(" | "),
                row.failure_rate * 100.0
            )
            .unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_digits() {
        assert_eq!(sig3(7.2412), "7.24");
        assert_eq!(sig3(26.81), "26.8");
        assert_eq!(sig3(0.4951), "0.495");
        assert_eq!(sig3(0.0), "0");
        assert_eq!(sig3(9.996), "10.0");
        assert_eq!(sig3(123.4), "123");
        assert_eq!(sig3(-0.0123), "-0.0123");
    }

    #[test]
    fn sidecars() {
        let (t, j) = sidecar_paths(Path::new("out/report.txt"));
        assert_eq!((t.to_str().unwrap(), j.to_str().unwrap()), ("out/report.txt", "out/report.json"));
        let (t, j) = sidecar_paths(Path::new("r.json"));
        assert_eq!((t.to_str().unwrap(), j.to_str().unwrap()), ("r.txt", "r.json"));
    }
}
