//! Gram-Schmidt whitening of mixture channels.
//!
//! Channels are orthogonalised in index order with respect to the sample
//! inner product `(1/L) Σ a[n] b[n]` and each residual is scaled to unit rms.
//! No mean is removed: the phase-plot geometry relies on raw channels.

use crate::error::{BssError, Result};
use crate::model::{rms, sample_inner, SignalMatrix};

/// Residuals whose rms falls below this fraction of the input channel's rms
/// are treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Whitened components together with the transform that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedData {
    /// The `e_i[n]`, one unit-rms row per input channel.
    pub components: SignalMatrix,
    /// Row-major `N x N` lower-triangular matrix `W` with `components = W * input`.
    pub transform: Vec<Vec<f64>>,
}

impl WhitenedData {
    /// Maps whitened-domain rows back to the input domain by solving the
    /// lower-triangular system `W x = y` for every sample.
    pub fn unwhiten(&self, whitened: &SignalMatrix) -> Result<SignalMatrix> {
        let n = self.transform.len();
        if whitened.channels() != n {
            return Err(BssError::DimensionMismatch {
                expected: n,
                found: whitened.channels(),
            });
        }
        let l = whitened.samples();
        let mut out = vec![0.0; n * l];
        for t in 0..l {
            for i in 0..n {
                let mut acc = whitened.get(i, t);
                for k in 0..i {
                    acc -= self.transform[i][k] * out[k * l + t];
                }
                out[i * l + t] = acc / self.transform[i][i];
            }
        }
        Ok(SignalMatrix::from_parts(n, l, out, whitened.sample_rate_hz()))
    }
}

/// Whitens `mixtures` channel by channel.
///
/// Each residual is projected against the existing basis twice (classical
/// "twice is enough" reorthogonalisation) so the output stays orthogonal to
/// working precision even for nearly collinear channels.
pub fn gram_schmidt_whiten(mixtures: &SignalMatrix) -> Result<WhitenedData> {
    mixtures.validate()?;
    let n = mixtures.channels();
    let l = mixtures.samples();

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut transform: Vec<Vec<f64>> = Vec::with_capacity(n);

    for (i, z) in mixtures.rows().enumerate() {
        let z_rms = rms(z);
        if z_rms == 0.0 {
            return Err(BssError::ZeroChannel { channel: i });
        }
        let mut residual = z.to_vec();
        let mut coef = vec![0.0; n];
        coef[i] = 1.0;

        for _pass in 0..2 {
            for (e_k, w_k) in basis.iter().zip(&transform) {
                let c = sample_inner(&residual, e_k);
                if c == 0.0 {
                    continue;
                }
                for (r, e) in residual.iter_mut().zip(e_k) {
                    *r -= c * e;
                }
                for (a, w) in coef.iter_mut().zip(w_k) {
                    *a -= c * w;
                }
            }
        }

        let r_rms = rms(&residual);
        if r_rms < RANK_TOLERANCE * z_rms {
            return Err(BssError::RankDeficient { channel: i });
        }
        residual.iter_mut().for_each(|v| *v /= r_rms);
        coef.iter_mut().for_each(|v| *v /= r_rms);
        basis.push(residual);
        transform.push(coef);
    }

    let data = basis.into_iter().flatten().collect();
    Ok(WhitenedData {
        components: SignalMatrix::from_parts(n, l, data, mixtures.sample_rate_hz()),
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn apply(w: &[Vec<f64>], x: &SignalMatrix) -> Vec<Vec<f64>> {
        (0..w.len())
            .map(|i| {
                (0..x.samples())
                    .map(|t| (0..x.channels()).map(|k| w[i][k] * x.get(k, t)).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn orthonormal_input_is_fixed_point() {
        let z = SignalMatrix::from_rows(vec![vec![1.0, 1.0, -1.0, -1.0], vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        let w = gram_schmidt_whiten(&z).unwrap();
        assert_eq!(w.components, z);
        assert_eq!(w.transform, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn proportional_rows_are_rank_deficient() {
        let z = SignalMatrix::from_rows(vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(gram_schmidt_whiten(&z), Err(BssError::RankDeficient { channel: 1 }));
    }

    #[test]
    fn zero_channel_rejected() {
        let z = SignalMatrix::from_rows(vec![vec![0.0, 0.0, 0.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(gram_schmidt_whiten(&z), Err(BssError::ZeroChannel { channel: 0 }));
    }

    #[test]
    fn two_by_two_hand_case() {
        // Hand projection: rms(z1) = 1/sqrt2, e1 = [sqrt2, 0];
        // <z2, e1> = 1/sqrt2, residual = [0, 1], e2 = [0, sqrt2].
        let z = SignalMatrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let w = gram_schmidt_whiten(&z).unwrap();
        let s2 = 2f64.sqrt();
        assert_relative_eq!(w.components.get(0, 0), s2, epsilon = 1e-15);
        assert_relative_eq!(w.components.get(0, 1), 0.0, epsilon = 1e-15);
        assert_relative_eq!(w.components.get(1, 0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(w.components.get(1, 1), s2, epsilon = 1e-15);
        assert_relative_eq!(sample_inner(w.components.row(0), w.components.row(1)), 0.0, epsilon = 1e-15);
        assert_eq!(w.transform[0][1], 0.0);
    }

    fn mixture_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (2usize..5).prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0f64..10.0, n * 24)))
    }

    proptest! {
        #[test]
        fn whitening_invariants((n, data) in mixture_strategy()) {
            let z = SignalMatrix::from_channel_major(n, 24, data).unwrap();
            let Ok(w) = gram_schmidt_whiten(&z) else { return Ok(()); };
            let e = &w.components;
            for i in 0..n {
                prop_assert!((rms(e.row(i)) - 1.0).abs() < 1e-12);
                for j in 0..i {
                    prop_assert!(sample_inner(e.row(i), e.row(j)).abs() < 1e-10);
                    prop_assert_eq!(w.transform[j][i], 0.0);
                }
            }
            let we = apply(&w.transform, &z);
            for (i, row) in we.iter().enumerate() {
                for (t, v) in row.iter().enumerate() {
                    prop_assert!((v - e.get(i, t)).abs() < 1e-10);
                }
            }
            let back = w.unwhiten(e).unwrap();
            let scale = z.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in back.data().iter().zip(z.data()) {
                prop_assert!((a - b).abs() <= 1e-8 * scale);
            }
        }
    }
}
