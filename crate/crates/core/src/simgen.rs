//! Synthetic sparse sources, linear mixing and additive Gaussian noise.
//!
//! All randomness comes from ChaCha8 seeded with a 64-bit integer, so a seed
//! fixes the output bit for bit on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BssError, Result};
use crate::model::{MixingMatrix, SignalMatrix};

/// Truncated Gaussian pulse `a exp(-(t - t0)² / 2σ²)` for `|t - t0| <= 4σ`, else 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSourceSpec {
    pub amplitude: f64,
    pub center_s: f64,
    pub width_s: f64,
}

impl GaussianSourceSpec {
    pub const SUPPORT_WIDTHS: f64 = 4.0;

    pub fn value_at(&self, t: f64) -> f64 {
        let d = t - self.center_s;
        if d.abs() > Self::SUPPORT_WIDTHS * self.width_s {
            0.0
        } else {
            self.amplitude * (-(d * d) / (2.0 * self.width_s * self.width_s)).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sd: f64,
    pub seed: u64,
}

/// Standard normal deviates by the Box-Muller transform. Both outputs of
/// each transform are used, cosine branch first.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(radius * theta.sin());
        radius * theta.cos()
    }
}

/// Number of samples in `[0, duration)` at `sample_rate_hz`, tolerating the
/// rounding in products such as `0.2 * 250`.
pub fn sample_count(sample_rate_hz: f64, duration_s: f64) -> usize {
    let exact = duration_s * sample_rate_hz;
    let nearest = exact.round();
    if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        exact.ceil() as usize
    }
}

pub fn generate_gaussian_sources(
    specs: &[GaussianSourceSpec],
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<SignalMatrix> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(BssError::InvalidParameter {
            name: "sample_rate_hz",
            reason: format!("must be positive, got {sample_rate_hz}"),
        });
    }
    if let Some(bad) = specs.iter().find(|s| s.width_s.is_nan() || s.width_s <= 0.0) {
        return Err(BssError::InvalidParameter {
            name: "width_s",
            reason: format!("must be positive, got {}", bad.width_s),
        });
    }
    let l = sample_count(sample_rate_hz, duration_s);
    let rows = specs
        .iter()
        .map(|s| (0..l).map(|n| s.value_at(n as f64 / sample_rate_hz)).collect())
        .collect();
    SignalMatrix::from_rows(rows)?.with_sample_rate(sample_rate_hz)
}

/// Two uniform `[0, 1)` sources of `length` samples each, padded to
/// `length + shift`: source 1 is followed by `shift` zeros, source 2 is
/// preceded by them. Source 1 is drawn in full before source 2.
pub fn generate_shifted_uniform_sources(length: usize, shift: usize, seed: u64) -> Result<SignalMatrix> {
    if shift > length {
        return Err(BssError::InvalidParameter {
            name: "shift",
            reason: format!("shift {shift} exceeds length {length}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = length + shift;
    let mut s1 = vec![0.0; total];
    let mut s2 = vec![0.0; total];
    for v in &mut s1[..length] {
        *v = rng.gen::<f64>();
    }
    for v in &mut s2[shift..] {
        *v = rng.gen::<f64>();
    }
    SignalMatrix::from_rows(vec![s1, s2])
}

/// `z = A s`.
pub fn mix(sources: &SignalMatrix, mixing: &MixingMatrix) -> Result<SignalMatrix> {
    if mixing.cols() != sources.channels() {
        return Err(BssError::DimensionMismatch {
            expected: mixing.cols(),
            found: sources.channels(),
        });
    }
    let l = sources.samples();
    let mut data = vec![0.0; mixing.rows() * l];
    for (i, out) in data.chunks_exact_mut(l).enumerate() {
        for (j, src) in sources.rows().enumerate() {
            let a = mixing.get(i, j);
            for (o, s) in out.iter_mut().zip(src) {
                *o += a * s;
            }
        }
    }
    SignalMatrix::from_channel_major(mixing.rows(), l, data)?.with_sample_rate(sources.sample_rate_hz())
}

/// Smallest peak contribution `min_ij max_n |A_ij s_j[n]|` of any source to any mixture.
pub fn compute_r(sources: &SignalMatrix, mixing: &MixingMatrix) -> Result<f64> {
    if mixing.cols() != sources.channels() {
        return Err(BssError::DimensionMismatch {
            expected: mixing.cols(),
            found: sources.channels(),
        });
    }
    let peaks: Vec<f64> = sources.rows().map(peak_magnitude).collect();
    compute_r_from_peaks(&peaks, mixing)
}

/// Same statistic from per-source peak magnitudes, for sources whose true
/// peak is known analytically (a sampled Gaussian can miss its crest).
pub fn compute_r_from_peaks(peaks: &[f64], mixing: &MixingMatrix) -> Result<f64> {
    if mixing.cols() != peaks.len() {
        return Err(BssError::DimensionMismatch {
            expected: mixing.cols(),
            found: peaks.len(),
        });
    }
    let mut r = f64::INFINITY;
    for i in 0..mixing.rows() {
        for (j, p) in peaks.iter().enumerate() {
            r = r.min((mixing.get(i, j) * p).abs());
        }
    }
    Ok(r)
}

fn peak_magnitude(row: &[f64]) -> f64 {
    row.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Adds i.i.d. zero-mean Gaussian noise of standard deviation `sd`, filled
/// channel by channel in sample order.
pub fn add_noise(mixtures: &SignalMatrix, noise: &NoiseSpec) -> Result<SignalMatrix> {
    if !(noise.sd >= 0.0 && noise.sd.is_finite()) {
        return Err(BssError::InvalidParameter {
            name: "sd",
            reason: format!("must be non-negative, got {}", noise.sd),
        });
    }
    if noise.sd == 0.0 {
        return Ok(mixtures.clone());
    }
    let mut g = GaussianStream::new(noise.seed);
    let data = mixtures.data().iter().map(|v| v + noise.sd * g.next_standard()).collect();
    SignalMatrix::from_channel_major(mixtures.channels(), mixtures.samples(), data)?
        .with_sample_rate(mixtures.sample_rate_hz())
}

/// Seed of Monte Carlo run `run_index`: `master + run_index`, wrapping.
pub fn derived_seed(master_seed: u64, run_index: u64) -> u64 {
    master_seed.wrapping_add(run_index)
}

/// Known sources, their mixing and a noise level: everything needed to
/// regenerate noisy mixtures for any seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub sources: SignalMatrix,
    pub mixing: MixingMatrix,
    pub noise_sd: f64,
    /// Peak magnitude of each source, used for the R statistic.
    pub peaks: Vec<f64>,
    clean: SignalMatrix,
}

impl Scenario {
    pub fn new(sources: SignalMatrix, mixing: MixingMatrix, noise_sd: f64) -> Result<Self> {
        let clean = mix(&sources, &mixing)?;
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(BssError::InvalidParameter {
                name: "noise_sd",
                reason: format!("must be non-negative, got {noise_sd}"),
            });
        }
        let peaks = sources.rows().map(peak_magnitude).collect();
        Ok(Self {
            sources,
            mixing,
            noise_sd,
            peaks,
            clean,
        })
    }

    /// Gaussian-pulse scenario; the R statistic uses the pulse amplitudes
    /// rather than the sampled maxima.
    pub fn gaussian(
        specs: &[GaussianSourceSpec],
        sample_rate_hz: f64,
        duration_s: f64,
        mixing: MixingMatrix,
        noise_sd: f64,
    ) -> Result<Self> {
        let sources = generate_gaussian_sources(specs, sample_rate_hz, duration_s)?;
        let mut scenario = Self::new(sources, mixing, noise_sd)?;
        scenario.peaks = specs.iter().map(|s| s.amplitude.abs()).collect();
        Ok(scenario)
    }

    /// The standard two-pulse example: sources 1 and 2 of the
    /// truncated-Gaussian family at 250 Hz over 0.2 s (50 samples).
    pub fn example1(noise_sd: f64) -> Result<Self> {
        Self::gaussian(
            &EXAMPLE1_SOURCES,
            250.0,
            0.2,
            MixingMatrix::from_rows(example1_mixing())?,
            noise_sd,
        )
    }

    pub fn clean_mixtures(&self) -> &SignalMatrix {
        &self.clean
    }

    pub fn noisy_mixtures(&self, seed: u64) -> Result<SignalMatrix> {
        add_noise(
            &self.clean,
            &NoiseSpec {
                sd: self.noise_sd,
                seed,
            },
        )
    }

    pub fn r_statistic(&self) -> Result<f64> {
        compute_r_from_peaks(&self.peaks, &self.mixing)
    }
}

pub const EXAMPLE1_SOURCES: [GaussianSourceSpec; 2] = [
    GaussianSourceSpec {
        amplitude: 1.0,
        center_s: 0.1,
        width_s: 0.0125,
    },
    GaussianSourceSpec {
        amplitude: 0.1,
        center_s: 0.026,
        width_s: 0.00625,
    },
];

pub fn example1_mixing() -> Vec<Vec<f64>> {
    vec![vec![1.3, 2.0], vec![1.0, 2.85]]
}

pub fn section2_mixing() -> Vec<Vec<f64>> {
    vec![vec![0.799, -0.498], vec![-0.373, -0.133]]
}
