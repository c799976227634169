//! Phase-space velocities, unit headings and the velocity acceptance test.
//!
//! Heading index `n` (0-based here) refers to the step from sample `n` to
//! sample `n + 1`, so a signal of `L` samples yields `L - 1` headings.

use crate::error::{BssError, Result};
use crate::model::SignalMatrix;

pub type Vector = Vec<f64>;

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Velocities, headings and acceptance mask for one pass over the data.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadingSet {
    pub velocities: Vec<Vector>,
    /// Unit headings; the zero vector where the velocity is zero.
    pub headings: Vec<Vector>,
    /// `true` where the velocity is exactly zero and no heading exists.
    pub zero_mask: Vec<bool>,
    pub accepted: Vec<bool>,
    /// Largest Euclidean velocity norm over all headings.
    pub v_max: f64,
}

impl HeadingSet {
    pub fn from_signal(signal: &SignalMatrix, v_th: f64) -> Result<Self> {
        Ok(Self::from_velocities(compute_velocities(signal)?, v_th))
    }

    pub fn from_velocities(velocities: Vec<Vector>, v_th: f64) -> Self {
        let (headings, zero_mask) = normalize_headings(&velocities);
        let accepted = apply_velocity_threshold(&velocities, v_th);
        let v_max = velocities.iter().map(|v| norm(v)).fold(0.0, f64::max);
        Self {
            velocities,
            headings,
            zero_mask,
            accepted,
            v_max,
        }
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.velocities.first().map_or(0, Vec::len)
    }

    /// Heading indices that passed the threshold, ascending.
    pub fn accepted_indices(&self) -> Vec<usize> {
        self.accepted
            .iter()
            .enumerate()
            .filter_map(|(n, &a)| a.then_some(n))
            .collect()
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }
}

/// `v[n] = e[n + 1] - e[n]` for every adjacent pair of samples.
pub fn compute_velocities(whitened: &SignalMatrix) -> Result<Vec<Vector>> {
    let l = whitened.samples();
    if l < 2 {
        return Err(BssError::TooShort { samples: l });
    }
    let n = whitened.channels();
    Ok((1..l)
        .map(|t| (0..n).map(|c| whitened.get(c, t) - whitened.get(c, t - 1)).collect())
        .collect())
}

/// Unit headings plus a mask of zero-velocity indices.
pub fn normalize_headings(velocities: &[Vector]) -> (Vec<Vector>, Vec<bool>) {
    velocities
        .iter()
        .map(|v| {
            let m = norm(v);
            if m > 0.0 {
                (v.iter().map(|x| x / m).collect(), false)
            } else {
                (vec![0.0; v.len()], true)
            }
        })
        .unzip()
}

/// Accepts `v[n]` when its largest absolute component reaches `v_th` times
/// the largest Euclidean velocity norm. Zero velocities are never accepted.
pub fn apply_velocity_threshold(velocities: &[Vector], v_th: f64) -> Vec<bool> {
    let v_max = velocities.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let cut = v_th * v_max;
    velocities
        .iter()
        .map(|v| {
            let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            peak > 0.0 && peak >= cut
        })
        .collect()
}
