//! Matching estimates to true sources and measuring RMS estimation error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BssError, Result};
use crate::model::{normalize_rms, MethodParams, SignalMatrix};
use crate::separation::separate;
use crate::simgen::{derived_seed, Scenario};

/// How sources and estimates are scaled before they are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Unit root-mean-square per channel.
    #[default]
    Rms,
    /// Unit Euclidean norm per channel (`Σ x² = 1`). Errors come out
    /// `1/sqrt(L)` times the `Rms` figures. Monte Carlo tables use this scale.
    Energy,
}

impl Normalization {
    pub fn apply(&self, signal: &SignalMatrix) -> Result<SignalMatrix> {
        let unit = normalize_rms(signal)?;
        match self {
            Normalization::Rms => Ok(unit),
            Normalization::Energy => {
                let k = 1.0 / (signal.samples() as f64).sqrt();
                unit.map_rows(|_, row| Ok(row.iter().map(|v| v * k).collect()))
            }
        }
    }
}

/// Source-to-estimate pairing found by greedy elimination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Association {
    /// `permutation[r]` is the estimate matched to source `r`.
    pub permutation: Vec<usize>,
    /// Sign of the matched correlation, `+1.0` or `-1.0`.
    pub signs: Vec<f64>,
    pub correlations: Vec<f64>,
}

/// Pearson correlation; zero when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

pub fn correlation_matrix(actual: &SignalMatrix, estimates: &SignalMatrix) -> Vec<Vec<f64>> {
    actual
        .rows()
        .map(|s| estimates.rows().map(|e| pearson(s, e)).collect())
        .collect()
}

/// Repeatedly pairs the source and estimate with the largest `|c_rs|`
/// among those still unmatched. Ties go to the lowest `(r, s)`.
pub fn associate(actual: &SignalMatrix, estimates: &SignalMatrix) -> Result<Association> {
    let n = actual.channels();
    if estimates.channels() != n {
        return Err(BssError::DimensionMismatch {
            expected: n,
            found: estimates.channels(),
        });
    }
    if estimates.samples() != actual.samples() {
        return Err(BssError::DimensionMismatch {
            expected: actual.samples(),
            found: estimates.samples(),
        });
    }
    Ok(associate_matrix(&correlation_matrix(actual, estimates)))
}

/// Greedy elimination on a precomputed square correlation matrix.
pub fn associate_matrix(c: &[Vec<f64>]) -> Association {
    let n = c.len();
    let mut row_free = vec![true; n];
    let mut col_free = vec![true; n];
    let mut permutation = vec![0; n];
    let mut signs = vec![1.0; n];
    let mut correlations = vec![0.0; n];
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for r in (0..n).filter(|&r| row_free[r]) {
            for s in (0..n).filter(|&s| col_free[s]) {
                if best.is_none_or(|(br, bs)| c[r][s].abs() > c[br][bs].abs()) {
                    best = Some((r, s));
                }
            }
        }
        let (r, s) = best.expect("free row and column remain");
        row_free[r] = false;
        col_free[s] = false;
        permutation[r] = s;
        signs[r] = if c[r][s] < 0.0 { -1.0 } else { 1.0 };
        correlations[r] = c[r][s];
    }
    Association {
        permutation,
        signs,
        correlations,
    }
}

/// `s_r[n] - sign * est[n]`, so an inverted estimate is compared with its negation.
pub fn pointwise_error(actual: &[f64], estimate: &[f64], sign: f64) -> Vec<f64> {
    actual
        .iter()
        .zip(estimate)
        .map(|(s, e)| if sign < 0.0 { s + e } else { s - e })
        .collect()
}

/// Error rows of every source, ordered by source index.
pub fn aligned_errors(actual: &SignalMatrix, estimates: &SignalMatrix, assoc: &Association) -> Vec<Vec<f64>> {
    (0..actual.channels())
        .map(|r| pointwise_error(actual.row(r), estimates.row(assoc.permutation[r]), assoc.signs[r]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmsMetrics {
    pub per_sample: Vec<f64>,
    pub total: f64,
    pub max: f64,
}

/// Running `Σ_q ε_q[n]²` for one source.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorAccumulator {
    sum_sq: Vec<f64>,
    runs: usize,
}

impl ErrorAccumulator {
    pub fn new(samples: usize) -> Self {
        Self {
            sum_sq: vec![0.0; samples],
            runs: 0,
        }
    }

    pub fn add(&mut self, errors: &[f64]) {
        for (acc, e) in self.sum_sq.iter_mut().zip(errors) {
            *acc += e * e;
        }
        self.runs += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.runs += other.runs;
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// `None` before any run has been added.
    pub fn metrics(&self) -> Option<RmsMetrics> {
        if self.runs == 0 {
            return None;
        }
        let q = self.runs as f64;
        let per_sample: Vec<f64> = self.sum_sq.iter().map(|s| (s / q).sqrt()).collect();
        let total = (per_sample.iter().map(|v| v * v).sum::<f64>() / per_sample.len() as f64).sqrt();
        let max = per_sample.iter().copied().fold(0.0, f64::max);
        Some(RmsMetrics { per_sample, total, max })
    }
}

/// RMS over runs at each sample, then its quadratic mean and maximum over samples.
pub fn rms_metrics(errors: &[Vec<f64>]) -> Result<RmsMetrics> {
    let first = errors.first().ok_or(BssError::InvalidParameter {
        name: "errors",
        reason: "need at least one run".into(),
    })?;
    let mut acc = ErrorAccumulator::new(first.len());
    for e in errors {
        if e.len() != first.len() {
            return Err(BssError::DimensionMismatch {
                expected: first.len(),
                found: e.len(),
            });
        }
        acc.add(e);
    }
    Ok(acc.metrics().expect("at least one run"))
}

/// Normalizes both sides, associates and reports per-source errors for a single separation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleEvaluation {
    pub association: Association,
    pub metrics: Vec<RmsMetrics>,
}

pub fn evaluate(actual: &SignalMatrix, estimates: &SignalMatrix, normalization: Normalization) -> Result<SingleEvaluation> {
    if actual.channels() != estimates.channels() {
        return Err(BssError::DimensionMismatch {
            expected: actual.channels(),
            found: estimates.channels(),
        });
    }
    let a = normalization.apply(actual)?;
    let e = normalization.apply(estimates)?;
    let association = associate(&a, &e)?;
    let metrics = aligned_errors(&a, &e, &association)
        .into_iter()
        .map(|err| rms_metrics(&[err]))
        .collect::<Result<_>>()?;
    Ok(SingleEvaluation { association, metrics })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub sets: usize,
    pub runs_per_set: usize,
    pub master_seed: u64,
    pub normalization: Normalization,
}

/// Mean and sample standard deviation across Monte Carlo sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetStatistic {
    pub mean: f64,
    pub sd: f64,
}

impl SetStatistic {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceReport {
    /// `RMS[n]` pooled over every successful run.
    pub rms_per_sample: Vec<f64>,
    pub rms_tot: f64,
    pub rms_max: f64,
    /// Per-set `RMS_tot`, for sets with at least one successful run.
    pub set_rms_tot: Vec<f64>,
    pub set_rms_max: Vec<f64>,
    pub rms_tot_stats: SetStatistic,
    pub rms_max_stats: SetStatistic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub params: MethodParams,
    pub config: MonteCarloConfig,
    pub total_runs: usize,
    pub failed_runs: usize,
    /// Failure count per set.
    pub set_failures: Vec<usize>,
    pub sources: Vec<SourceReport>,
    /// Text of the first failure seen, if any.
    pub first_failure: Option<String>,
}

impl EvalReport {
    pub fn failure_rate(&self) -> f64 {
        self.failed_runs as f64 / self.total_runs as f64
    }
}

type RunOutcome = std::result::Result<Vec<Vec<f64>>, BssError>;

fn single_run(scenario: &Scenario, actual: &SignalMatrix, params: &MethodParams, seed: u64, norm: Normalization) -> RunOutcome {
    let mixtures = scenario.noisy_mixtures(seed)?;
    let result = separate(&mixtures, params)?;
    let estimates = norm.apply(&result.estimates)?;
    let assoc = associate(actual, &estimates)?;
    Ok(aligned_errors(actual, &estimates, &assoc))
}

/// Repeated noisy separations of `scenario`.
///
/// Run `k` (counting across all sets) draws its noise from seed
/// `master_seed + k`. Runs execute in parallel, but errors are accumulated in
/// run order so the report does not depend on scheduling. Failed runs are
/// counted and left out of the RMS figures.
pub fn monte_carlo(scenario: &Scenario, params: &MethodParams, config: &MonteCarloConfig) -> Result<EvalReport> {
    params.validate()?;
    if config.sets == 0 || config.runs_per_set == 0 {
        return Err(BssError::InvalidParameter {
            name: "sets/runs",
            reason: "need at least one set and one run per set".into(),
        });
    }
    let actual = config.normalization.apply(&scenario.sources)?;
    let n_src = actual.channels();
    let l = actual.samples();

    let mut pooled: Vec<ErrorAccumulator> = vec![ErrorAccumulator::new(l); n_src];
    let mut set_tot: Vec<Vec<f64>> = vec![Vec::new(); n_src];
    let mut set_max: Vec<Vec<f64>> = vec![Vec::new(); n_src];
    let mut set_failures = Vec::with_capacity(config.sets);
    let mut first_failure = None;

    for set in 0..config.sets {
        let base = (set * config.runs_per_set) as u64;
        let outcomes: Vec<RunOutcome> = (0..config.runs_per_set as u64)
            .into_par_iter()
            .map(|k| single_run(scenario, &actual, params, derived_seed(config.master_seed, base + k), config.normalization))
            .collect();

        let mut acc: Vec<ErrorAccumulator> = vec![ErrorAccumulator::new(l); n_src];
        let mut failures = 0;
        for outcome in outcomes {
            match outcome {
                Ok(errors) => {
                    for (a, e) in acc.iter_mut().zip(&errors) {
                        a.add(e);
                    }
                }
                Err(e) => {
                    failures += 1;
                    first_failure.get_or_insert_with(|| e.to_string());
                }
            }
        }
        set_failures.push(failures);
        for (r, a) in acc.iter().enumerate() {
            if let Some(m) = a.metrics() {
                set_tot[r].push(m.total);
                set_max[r].push(m.max);
            }
            pooled[r].merge(a);
        }
    }

    let total_runs = config.sets * config.runs_per_set;
    let failed_runs: usize = set_failures.iter().sum();
    if failed_runs == total_runs {
        return Err(BssError::AllRunsFailed { runs: total_runs });
    }

    let sources = (0..n_src)
        .map(|r| {
            let m = pooled[r].metrics().expect("some run succeeded");
            SourceReport {
                rms_per_sample: m.per_sample,
                rms_tot: m.total,
                rms_max: m.max,
                rms_tot_stats: SetStatistic::from_values(&set_tot[r]),
                rms_max_stats: SetStatistic::from_values(&set_max[r]),
                set_rms_tot: std::mem::take(&mut set_tot[r]),
                set_rms_max: std::mem::take(&mut set_max[r]),
            }
        })
        .collect();

    Ok(EvalReport {
        params: *params,
        config: *config,
        total_runs,
        failed_runs,
        set_failures,
        sources,
        first_failure,
    })
}
