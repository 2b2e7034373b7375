use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Item, topic and slot indices are stored zero-based and displayed one-based.
#[derive(Debug, Error)]
pub enum Error {
    #[error("topic distribution does not sum to 1 (sum = {0})")]
    DistributionSum(f64),
    #[error("topic distribution entry {} out of range: {value}", .index + 1)]
    DistributionEntry { index: usize, value: f64 },
    #[error("CTR out of range for item {}: {value}", .item + 1)]
    CtrOutOfRange { item: usize, value: f64 },
    #[error("list length L = {slots} exceeds number of items N = {items}")]
    TooManySlots { slots: usize, items: usize },
    #[error("item {} refers to unknown topic {} (instance has {n_topics} topics)", .item + 1, .topic + 1)]
    UnknownTopic { item: usize, topic: usize, n_topics: usize },
    #[error("instance shape mismatch: {0}")]
    Shape(String),
    #[error("unknown item {}", .0 + 1)]
    UnknownItem(usize),
    #[error("duplicate item {} in list", .0 + 1)]
    DuplicateItem(usize),
    #[error("slot {} out of range for list of length {len}", .slot + 1)]
    SlotOutOfRange { slot: usize, len: usize },
    #[error("requested length {requested} exceeds number of items {items}")]
    LengthTooLarge { requested: usize, items: usize },
    #[error("brute force over {0} subsets exceeds the enumeration guard")]
    TooManyCombinations(u128),
    #[error("item {} belongs to the optimal list", .0 + 1)]
    ItemIsOptimal(usize),
    #[error("delta too large: KL arguments cross for item {} ({lower} >= {upper})", .item + 1)]
    DeltaTooLarge { item: usize, lower: f64, upper: f64 },
    #[error("round index must be at least 1")]
    ZeroRound,
    #[error("invalid precondition: {0}")]
    Precondition(String),
    #[error("unknown policy '{0}'")]
    UnknownPolicy(String),
    #[error("inconsistent action tag: {0}")]
    InconsistentTag(String),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("empty click log")]
    EmptyLog,
    #[error("abandonment rate must lie in [0, 1), got {0}")]
    AbandonmentRate(f64),
    #[error("malformed click log line {line}: {reason}")]
    MalformedLog { line: usize, reason: String },
    #[error("instance file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
