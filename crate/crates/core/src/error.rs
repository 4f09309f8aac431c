use thiserror::Error;

pub type Result<T, E = CrystalError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrystalError {
    #[error("chain length {n} outside [{min}, {max}]")]
    ChainLength { n: usize, min: usize, max: usize },
    #[error("unrecognized spin symbol {0:?}")]
    BadSymbol(char),
    #[error("malformed label text {0:?}")]
    BadLabelText(String),
    #[error("labels (2J3={two_j3}, 2J={two_j:?}) do not describe any word")]
    InvalidLabels { two_j3: i32, two_j: Vec<i32> },
    #[error("words of different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("operator index out of range: {0}")]
    OperatorIndex(String),
    #[error("position {position} outside 1..={n}")]
    Position { position: usize, n: usize },
    #[error("basis index {index} outside 0..{dim}")]
    StateIndex { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("invalid horizon T = {0}")]
    Horizon(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no stable horizon found below T = {cap:e}; use the infinite-time average")]
    HorizonCap { cap: f64 },
    #[error("fit under-determined: {used} positive points, {needed} required")]
    UnderDetermined { used: usize, needed: usize },
}
