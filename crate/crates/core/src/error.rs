use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("category set is empty")]
    EmptyCategorySet,
    #[error("duplicate category `{0}`")]
    DuplicateCategory(String),
    #[error("category `{0}` is not in the evaluation category set")]
    UnknownCategory(String),
    #[error("distributions are defined over different category sets")]
    CategoryMismatch,
    #[error("invalid probability mass: {0}")]
    InvalidMass(String),
    #[error("infinite divergence: target assigns zero mass to category `{0}`")]
    InfiniteDivergence(String),
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("value {0} is outside [0, 1]")]
    OutOfUnitRange(f64),
    #[error("interpolation weight {0} is outside [0, 1]")]
    InvalidWeight(f64),
    #[error("relevant set is empty")]
    EmptyRelevantSet,
    #[error("no category mapping for documents: {}", .0.join(", "))]
    UnmappedDocuments(Vec<String>),
    #[error("invalid category source: {0}")]
    InvalidSource(String),
    #[error("invalid target distribution: {0}")]
    InvalidTarget(String),
    #[error("no relevant documents")]
    NoRelevantDocuments,
    #[error("system `{0}` has no evaluable topics")]
    NoEvaluableTopics(String),
    #[error("duplicate system tag `{0}`")]
    DuplicateSystem(String),
    #[error(
        "normalization needs at least two runs, got {0} (use raw-only output for a single run)"
    )]
    TooFewRuns(usize),
    #[error("run entries carry inconsistent system tags `{expected}` and `{found}`")]
    InconsistentTag { expected: String, found: String },
    #[error("duplicate entry for topic `{topic}`, document `{doc}`")]
    DuplicateEntry { topic: String, doc: String },
    #[error("invalid rank {0}: ranks start at 1")]
    InvalidRank(u32),
    #[error("rankings are over different system tags")]
    TagMismatch,
    #[error("tag `{0}` appears more than once in a ranking")]
    DuplicateTag(String),
    #[error("need at least two items to correlate, got {0}")]
    TooFewItems(usize),
    #[error("a ranking is constant; tau-b is undefined")]
    ConstantRanking,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
