//! Direction estimation, projection and deflation.

use serde::Serialize;

use crate::clustering::{cluster_headings, Cluster};
use crate::error::{BssError, Result};
use crate::headings::{dot, norm, HeadingSet};
use crate::model::{Method, MethodParams, SignalMatrix};
use crate::whitening::{gram_schmidt_whiten, WhitenedData};

/// Weighted headings shorter than this are treated as cancelled out.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Unit direction in whitened space attributed to one source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatedDirection {
    pub unit_vector: Vec<f64>,
    /// Number of headings that contributed (1 for MHC).
    pub support_size: usize,
}

/// Per-iteration bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub accepted_headings: usize,
    pub v_max: f64,
    /// Adjacency threshold used by the Global method; `None` for MHC.
    pub epsilon: Option<f64>,
    pub support_size: usize,
    /// `Σ_n |z'[n]|²` left after this iteration's deflation.
    pub residual_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    /// One row per extracted source, in extraction order.
    pub estimates: SignalMatrix,
    pub directions: Vec<EstimatedDirection>,
    pub iterations: Vec<IterationDiagnostics>,
    pub whitened: WhitenedData,
    pub residual: SignalMatrix,
}

/// Magnitude-weighted average of a cluster's velocities.
///
/// Members pointing away from the largest member are flipped first, since
/// clustering on `|r_i|` lets antiparallel traversals of one source line in.
pub fn weighted_average_heading(cluster: &Cluster) -> Result<EstimatedDirection> {
    let members = &cluster.member_velocities;
    let Some(dim) = members.first().map(Vec::len) else {
        return Err(BssError::EmptyCluster);
    };
    let magnitudes: Vec<f64> = members.iter().map(|v| norm(v)).collect();
    let reference = magnitudes
        .iter()
        .enumerate()
        .fold(0, |best, (j, &m)| if m > magnitudes[best] { j } else { best });

    let mut weighted = vec![0.0; dim];
    let mut weight_sq = 0.0;
    for (v, &m) in members.iter().zip(&magnitudes) {
        let sign = if dot(v, &members[reference]) < 0.0 { -1.0 } else { 1.0 };
        for (acc, x) in weighted.iter_mut().zip(v) {
            *acc += m * sign * x;
        }
        weight_sq += m * m;
    }
    if weight_sq == 0.0 {
        return Err(BssError::DegenerateCluster);
    }
    weighted.iter_mut().for_each(|x| *x /= weight_sq);
    let len = norm(&weighted);
    if len < DEGENERATE_NORM {
        return Err(BssError::DegenerateCluster);
    }
    Ok(EstimatedDirection {
        unit_vector: weighted.iter().map(|x| x / len).collect(),
        support_size: members.len(),
    })
}

/// Minimum Heading Change: among consecutive accepted heading pairs, the one
/// whose sign-folded change `min(|r[n] - r[n-1]|, |r[n] + r[n-1]|)` is
/// smallest. Returns the later heading of that pair; ties keep the earliest.
pub fn mhc_find_direction(headings: &HeadingSet) -> Result<EstimatedDirection> {
    let mut best: Option<(f64, usize)> = None;
    for n in 1..headings.len() {
        if !(headings.accepted[n] && headings.accepted[n - 1]) {
            continue;
        }
        let (a, b) = (&headings.headings[n], &headings.headings[n - 1]);
        let (mut minus, mut plus) = (0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            minus += (x - y) * (x - y);
            plus += (x + y) * (x + y);
        }
        let change = minus.min(plus).sqrt();
        if best.is_none_or(|(c, _)| change < c) {
            best = Some((change, n));
        }
    }
    let (_, n) = best.ok_or(BssError::NoConsecutivePair)?;
    Ok(EstimatedDirection {
        unit_vector: headings.headings[n].clone(),
        support_size: 1,
    })
}

/// `s[n] = R · e[n]`.
pub fn project_source(data: &SignalMatrix, direction: &EstimatedDirection) -> Result<Vec<f64>> {
    let r = &direction.unit_vector;
    if r.len() != data.channels() {
        return Err(BssError::DimensionMismatch {
            expected: data.channels(),
            found: r.len(),
        });
    }
    let mut out = vec![0.0; data.samples()];
    for (row, &w) in data.rows().zip(r) {
        for (o, x) in out.iter_mut().zip(row) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// `z'[n] = e[n] - s[n] R`.
pub fn deflate(data: &SignalMatrix, direction: &EstimatedDirection, source: &[f64]) -> Result<SignalMatrix> {
    let r = &direction.unit_vector;
    if r.len() != data.channels() {
        return Err(BssError::DimensionMismatch {
            expected: data.channels(),
            found: r.len(),
        });
    }
    if source.len() != data.samples() {
        return Err(BssError::DimensionMismatch {
            expected: data.samples(),
            found: source.len(),
        });
    }
    data.map_rows(|c, row| Ok(row.iter().zip(source).map(|(x, s)| x - s * r[c]).collect()))
}

fn find_direction(
    data: &SignalMatrix,
    params: &MethodParams,
    iteration: usize,
) -> Result<(EstimatedDirection, HeadingSet, Option<f64>)> {
    let headings = HeadingSet::from_signal(data, params.v_th)?;
    match params.method {
        Method::Global => {
            let wrap = |cause| BssError::ClusterFormationFailed {
                iteration,
                cause: Box::new(cause),
            };
            let (cluster, tables) = cluster_headings(&headings, params.alpha).map_err(wrap)?;
            let dir = weighted_average_heading(&cluster).map_err(wrap)?;
            Ok((dir, headings, Some(tables.epsilon)))
        }
        Method::Mhc => {
            let dir = mhc_find_direction(&headings).map_err(|cause| BssError::HeadingSearchFailed {
                iteration,
                cause: Box::new(cause),
            })?;
            Ok((dir, headings, None))
        }
    }
}

/// Whitens the mixtures once, then extracts one source per channel by
/// repeatedly finding a direction, projecting and deflating. The velocity
/// threshold is re-evaluated on each deflated residual.
pub fn separate(mixtures: &SignalMatrix, params: &MethodParams) -> Result<SeparationResult> {
    params.validate()?;
    let whitened = gram_schmidt_whiten(mixtures)?;
    let n = whitened.components.channels();
    let l = whitened.components.samples();

    let mut data = whitened.components.clone();
    let mut estimates = Vec::with_capacity(n * l);
    let mut directions = Vec::with_capacity(n);
    let mut iterations = Vec::with_capacity(n);

    for iteration in 1..=n {
        let (direction, headings, epsilon) = find_direction(&data, params, iteration)?;
        let source = project_source(&data, &direction)?;
        data = deflate(&data, &direction, &source)?;
        iterations.push(IterationDiagnostics {
            iteration,
            accepted_headings: headings.accepted_count(),
            v_max: headings.v_max,
            epsilon,
            support_size: direction.support_size,
            residual_energy: data.energy(),
        });
        estimates.extend(source);
        directions.push(direction);
    }

    Ok(SeparationResult {
        estimates: SignalMatrix::from_parts(n, l, estimates, mixtures.sample_rate_hz()),
        directions,
        iterations,
        whitened,
        residual: data,
    })
}
