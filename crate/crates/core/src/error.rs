use thiserror::Error;

/// What an embedding pipeline needs from a truncated universal space before it
/// can succeed. Carried by [`Error::TruncationTooSmall`] so callers can retry.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct TruncationRequirement {
    /// Number of blocks the truncation must contain.
    pub blocks: usize,
    /// Minimum per-level width (CU) or copy count (PU) of the hosting blocks.
    pub width: usize,
    /// Total point count of the smallest truncation that satisfies the above.
    pub points: u128,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty space: at least one point is required")]
    EmptySpace,

    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),

    #[error("malformed distance matrix: {0}")]
    Structure(String),

    #[error("invalid distance value {value}: {reason}")]
    InvalidDistance { value: f64, reason: &'static str },

    #[error("invalid distance set {values:?}: {reason}")]
    InvalidDistanceSet { values: Vec<u64>, reason: &'static str },

    #[error("distance {value} between `{a}` and `{b}` is not in the declared distance set")]
    DistanceNotInSet { value: u64, a: String, b: String },

    #[error("radius must be positive")]
    NonPositiveRadius,

    #[error("{what}: size {size} exceeds the guard of {limit}")]
    GuardExceeded {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("map is not total: source point {0} has no image")]
    MapNotTotal(usize),

    #[error("map target {target} is out of range for a space with {len} points")]
    MapOutOfRange { target: usize, len: usize },

    #[error("partition does not match the space: {0}")]
    PartitionMismatch(String),

    #[error("annulus hypothesis violated: point `{point}` sits at distance {distance} from the basepoint, which is neither within the first radius nor one of the radii")]
    AnnulusHypothesis { point: String, distance: u64 },

    #[error("radii must be strictly increasing and positive: {0:?}")]
    BadRadii(Vec<u64>),

    #[error("width exhausted at level {level}: {classes} classes but width {width}")]
    WidthExhausted {
        level: u64,
        classes: usize,
        width: usize,
    },

    #[error("address has {found} digits, expected {expected}")]
    AddressLength { expected: usize, found: usize },

    #[error("address digit {digit} at position {position} is outside 1..={width}")]
    AddressDigit {
        position: usize,
        digit: usize,
        width: usize,
    },

    #[error("truncation too small; increase to at least {} blocks of width {} ({} points)", .0.blocks, .0.width, .0.points)]
    TruncationTooSmall(TruncationRequirement),

    #[error("truncation cap exceeded: a host needs {required} points, cap is {cap}")]
    TruncationCap { required: u128, cap: u128 },

    #[error("coset capacity shortfall at level {level}: {required} classes need distinct cosets but the index is {capacity}")]
    CapacityShortfall {
        level: u64,
        required: usize,
        capacity: u128,
    },

    #[error("chain truncation too small: a translation of norm above {required} is needed, top level is {top}")]
    ChainTooShort { required: u64, top: u64 },

    #[error("element with coordinate {coordinate} lies outside the chain truncation (max cutoff {max_cutoff})")]
    OutsideTruncation { coordinate: u32, max_cutoff: u32 },

    #[error("invalid subgroup chain: {0}")]
    InvalidChain(String),

    #[error("{0}")]
    Invalid(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
