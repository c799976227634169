use thiserror::Error;

/// Errors produced anywhere in the separation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BssError {
    #[error("signal contains a non-finite value at channel {channel}, sample {sample}")]
    NonFinite { channel: usize, sample: usize },

    #[error("signal has {samples} samples; at least 2 are required")]
    TooShort { samples: usize },

    #[error("signal has no channels")]
    NoChannels,

    #[error("channel {channel} is identically zero")]
    ZeroChannel { channel: usize },

    #[error("channel {channel} is linearly dependent on earlier channels")]
    RankDeficient { channel: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rows have unequal lengths")]
    RaggedRows,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("only {found} accepted headings; at least 2 are needed to sort")]
    TooFewHeadings { found: usize },

    #[error("no adjacent pair of sorted heading components lies within epsilon")]
    NoRunFound,

    #[error("no heading survives the cross-component AND")]
    EmptyCluster,

    #[error("cluster members cancel; weighted heading has zero length")]
    DegenerateCluster,

    #[error("no two consecutive headings are both accepted")]
    NoConsecutivePair,

    #[error("unable to form a heading cluster at iteration {iteration}: {cause}")]
    ClusterFormationFailed {
        iteration: usize,
        cause: Box<BssError>,
    },

    #[error("minimum heading change search failed at iteration {iteration}: {cause}")]
    HeadingSearchFailed {
        iteration: usize,
        cause: Box<BssError>,
    },

    #[error("all {runs} Monte Carlo runs failed")]
    AllRunsFailed { runs: usize },
}

pub type Result<T> = std::result::Result<T, BssError>;
