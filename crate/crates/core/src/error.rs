use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid key parameters: need 1 <= K <= P, got K = {k}, P = {p}")]
    InvalidTheta { k: u32, p: u32 },

    #[error("node count must be at least 1")]
    EmptyGraph,

    #[error("node set must be non-empty")]
    EmptyNodeSet,

    #[error("node index {index} out of range for a graph on {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("node {0} listed more than once")]
    DuplicateNode(usize),

    #[error("node set covers every node, its complement is empty")]
    EmptyComplement,

    #[error("tree has {tree} vertices but node set has {set}")]
    TreeSizeMismatch { tree: usize, set: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid key ring: {0}")]
    InvalidRing(String),

    #[error("precondition violated: {0}")]
    Domain(String),

    #[error("{needed} exceeds the budget of {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
}

impl Error {
    /// Budget errors are resource limits rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
