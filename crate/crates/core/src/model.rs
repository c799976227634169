//! Shared signal containers and parameter types.

use serde::{Deserialize, Serialize};

use crate::error::{BssError, Result};

/// `N` channels by `L` samples of real-valued time series, stored channel-major.
///
/// The same container holds mixtures, whitened components, sources and
/// estimates. Every entry is finite and there are at least two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    channels: usize,
    samples: usize,
    data: Vec<f64>,
    sample_rate_hz: f64,
}

impl SignalMatrix {
    /// Builds a matrix from one `Vec` per channel.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let channels = rows.len();
        if channels == 0 {
            return Err(BssError::NoChannels);
        }
        let samples = rows[0].len();
        if rows.iter().any(|r| r.len() != samples) {
            return Err(BssError::RaggedRows);
        }
        let data = rows.into_iter().flatten().collect();
        Self::from_channel_major(channels, samples, data)
    }

    /// Builds a matrix from a flat channel-major buffer of `channels * samples` values.
    pub fn from_channel_major(channels: usize, samples: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(BssError::NoChannels);
        }
        if data.len() != channels * samples {
            return Err(BssError::DimensionMismatch {
                expected: channels * samples,
                found: data.len(),
            });
        }
        let m = Self {
            channels,
            samples,
            data,
            sample_rate_hz: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    /// Construction path for buffers produced by arithmetic on already valid
    /// matrices. Shape is trusted; finiteness is still checked in debug builds.
    pub(crate) fn from_parts(channels: usize, samples: usize, data: Vec<f64>, sample_rate_hz: f64) -> Self {
        debug_assert_eq!(data.len(), channels * samples);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            channels,
            samples,
            data,
            sample_rate_hz,
        }
    }

    pub fn with_sample_rate(mut self, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(BssError::InvalidParameter {
                name: "sample_rate_hz",
                reason: format!("must be positive and finite, got {sample_rate_hz}"),
            });
        }
        self.sample_rate_hz = sample_rate_hz;
        Ok(self)
    }

    /// Checks every invariant: at least one channel, `L >= 2`, all entries finite.
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(BssError::NoChannels);
        }
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(BssError::NonFinite {
                channel: pos / self.samples.max(1),
                sample: pos % self.samples.max(1),
            });
        }
        if self.samples < 2 {
            return Err(BssError::TooShort {
                samples: self.samples,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn samples(&self) -> usize {
        self.samples
    }

    #[inline]
    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    #[inline]
    pub fn row(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.samples..(channel + 1) * self.samples]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.samples)
    }

    #[inline]
    pub fn get(&self, channel: usize, sample: usize) -> f64 {
        self.data[channel * self.samples + sample]
    }

    /// The `N`-vector of all channels at one sample instant.
    pub fn sample_vector(&self, sample: usize) -> Vec<f64> {
        (0..self.channels).map(|c| self.get(c, sample)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Sum of squares over every entry.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Applies `f` to each channel, producing a matrix of the same shape.
    pub(crate) fn map_rows<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> Result<Vec<f64>>,
    {
        let mut data = Vec::with_capacity(self.data.len());
        for (c, row) in self.rows().enumerate() {
            let out = f(c, row)?;
            debug_assert_eq!(out.len(), self.samples);
            data.extend(out);
        }
        Ok(Self::from_parts(self.channels, self.samples, data, self.sample_rate_hz))
    }
}

/// Population root-mean-square (divisor `L`).
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Sample inner product `(1/L) Σ a[n] b[n]`.
pub fn sample_inner(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Rescales every channel to unit rms.
pub fn normalize_rms(signal: &SignalMatrix) -> Result<SignalMatrix> {
    signal.map_rows(|c, row| {
        let r = rms(row);
        if r == 0.0 {
            return Err(BssError::ZeroChannel { channel: c });
        }
        Ok(row.iter().map(|v| v / r).collect())
    })
}

/// Square or rectangular matrix of mixing coefficients, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MixingMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl MixingMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(BssError::NoChannels);
        }
        let cols = rows[0].len();
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(BssError::RaggedRows);
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(BssError::InvalidParameter {
                name: "mixing",
                reason: "entries must be finite".into(),
            });
        }
        Ok(Self {
            rows: n_rows,
            cols,
            entries,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks_exact(self.cols).map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for MixingMatrix {
    type Error = BssError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<MixingMatrix> for Vec<Vec<f64>> {
    fn from(m: MixingMatrix) -> Self {
        m.to_rows()
    }
}

/// Which direction finder drives each deflation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Cluster all headings of one source and take their weighted average.
    Global,
    /// Minimum Heading Change: a single heading where consecutive headings agree best.
    Mhc,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Global => f.write_str("Global"),
            Method::Mhc => f.write_str("MHC"),
        }
    }
}

/// Tuning knobs shared by both methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    /// Velocity acceptance threshold, `0 < v_th < 1`.
    pub v_th: f64,
    /// Scale of the sorted-heading adjacency threshold, `0 < alpha <= 1`.
    pub alpha: f64,
    pub method: Method,
}

impl MethodParams {
    pub fn new(method: Method, v_th: f64, alpha: f64) -> Result<Self> {
        let p = Self { v_th, alpha, method };
        p.validate()?;
        Ok(p)
    }

    pub fn global(v_th: f64) -> Result<Self> {
        Self::new(Method::Global, v_th, 1.0)
    }

    pub fn mhc(v_th: f64) -> Result<Self> {
        Self::new(Method::Mhc, v_th, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_th > 0.0 && self.v_th < 1.0) {
            return Err(BssError::InvalidParameter {
                name: "v_th",
                reason: format!("must lie in (0, 1), got {}", self.v_th),
            });
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(BssError::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0, 1], got {}", self.alpha),
            });
        }
        Ok(())
    }
}
