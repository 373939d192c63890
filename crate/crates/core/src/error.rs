use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("EmptyInput: no rows")]
    EmptyInput,
    #[error("DuplicatePair: ({state}, {action}) appears more than once")]
    DuplicatePair { state: String, action: String },
    #[error("DanglingTarget: ({state}, {action}) leads to unknown state {target}")]
    DanglingTarget {
        state: String,
        action: String,
        target: String,
    },
    #[error("NonFiniteCost: ({state}, {action})")]
    NonFiniteCost { state: String, action: String },
    #[error("NoAdmissibleAction: no admissible control at {}", .0.join(", "))]
    NoAdmissibleAction(Vec<String>),
    #[error("bad grid: {0}")]
    BadGrid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error("discount factor {0} is not in (0, 1)")]
    BadDiscount(f64),
    #[error("MaxIterExceeded: residual {residual:e} above {target:e} after {iterations} iterations")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        target: f64,
    },
    #[error("value function has {got} entries, system has {expected} states")]
    SizeMismatch { expected: usize, got: usize },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("InadmissibleControl: action {action} not available at state {state} (t = {time})")]
    InadmissibleControl {
        state: String,
        action: usize,
        time: usize,
    },
    #[error("BasisMismatch: {0}")]
    BasisMismatch(String),
    #[error("EmptySet: Hausdorff distance needs nonempty sets")]
    EmptySet,
    #[error("discount factor {0} is not in (0, 1)")]
    BadDiscount(f64),
    #[error("empty control sequence")]
    EmptyControls,
    #[error("basis needs at least one function")]
    EmptyBasis,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("NumericalFailure: {0}")]
    NumericalFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("Infeasible: occupation-measure LP has no feasible point (model violates viability)")]
    Infeasible,
    #[error("occupation-measure LP reported unbounded")]
    Unbounded,
    #[error("unknown state index {0}")]
    UnknownState(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TauberianError {
    #[error("SigmaMismatch: supplied sigma {supplied} but sequence average is {actual}")]
    SigmaMismatch { supplied: f64, actual: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("InternalError: {0}")]
    Internal(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}
