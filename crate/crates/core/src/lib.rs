//! Blind separation of sparse, uncorrelated sources from linear mixtures.
//!
//! Mixtures are whitened by Gram-Schmidt, then sources are extracted one at
//! a time. At each step the phase-space velocity vectors `e[n] - e[n-1]` are
//! normalised to headings; headings belonging to a single active source are
//! found either by clustering them across the whole record (the Global
//! method) or by locating the steadiest pair of consecutive headings (the
//! Minimum Heading Change method). The estimated direction is projected out
//! and the residual deflated before the next source is sought.
//!
//! ```
//! use heading_bss::{separate, MethodParams, Scenario};
//!
//! let scenario = Scenario::example1(0.0).unwrap();
//! let result = separate(scenario.clean_mixtures(), &MethodParams::global(0.4).unwrap()).unwrap();
//! assert_eq!(result.estimates.channels(), 2);
//! ```

pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod headings;
pub mod model;
pub mod separation;
pub mod simgen;
pub mod whitening;

pub use clustering::{cluster_headings, cluster_with_epsilon, Cluster, ClusterTables, Run, SortedComponent};
pub use error::{BssError, Result};
pub use evaluation::{
    associate, evaluate, monte_carlo, Association, EvalReport, MonteCarloConfig, Normalization, RmsMetrics,
};
pub use headings::HeadingSet;
pub use model::{normalize_rms, rms, Method, MethodParams, MixingMatrix, SignalMatrix};
pub use separation::{separate, EstimatedDirection, SeparationResult};
pub use simgen::{GaussianSourceSpec, NoiseSpec, Scenario};
pub use whitening::{gram_schmidt_whiten, WhitenedData};
