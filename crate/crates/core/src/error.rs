use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {value} lies outside the basis domain [{start}, {end}]")]
    OutOfDomain { value: f64, start: f64, end: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("window of {window} samples does not fit an axis of {len} samples")]
    WindowTooLarge { window: usize, len: usize },

    #[error("feature column for `{feature}` and basis {basis} has zero norm")]
    DegenerateColumn { feature: String, basis: usize },

    #[error("response vector is identically zero")]
    ZeroResponse,

    #[error("sparsity level {k} exceeds the number of groups {groups}")]
    SparsityTooLarge { k: usize, groups: usize },

    #[error("exhaustive search over {count} supports exceeds the budget of {budget}")]
    CombinatorialBudget { count: u128, budget: u128 },

    #[error("selection window L = {window} must be smaller than K_max = {k_max}")]
    SelectionWindow { window: usize, k_max: usize },

    #[error("R_1 = 0: the single-group candidate already fits exactly")]
    DegenerateResidual,

    #[error("solution became non-finite at t = {time}")]
    BlowUp { time: f64 },

    #[error("coefficient truth is identically zero on the evaluation region")]
    ZeroDenominator,

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}
