use thiserror::Error;

/// Errors raised while building systems or running the pressure pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid weight function: {0}")]
    InvalidWeight(String),

    #[error("invalid control word: {0}")]
    InvalidWord(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("malformed transition table: {0}")]
    MalformedTable(String),

    #[error("empty interior: at least one state must be interior")]
    EmptyInterior,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("margin {margin} is not admissible (must be positive and below the smallest half-width {limit})")]
    InadmissibleMargin { margin: f64, limit: f64 },

    #[error("sampling interval must be positive, got {0}")]
    NonPositiveTimeStep(f64),

    #[error("matrix exponential did not converge")]
    ExponentialDiverged,

    #[error("eigenvalue iteration did not converge")]
    EigenvaluesDiverged,

    #[error("box verification requires an affine step map")]
    BoxModeRequiresAffine,

    #[error("horizon must be at least {min}, got {got}")]
    InvalidHorizon { min: usize, got: usize },

    #[error("word budget {budget} is smaller than the alphabet size {alphabet}")]
    BudgetTooSmall { budget: usize, alphabet: usize },

    #[error("no spanning family exists at n = {n}")]
    Infeasible { n: usize },

    #[error("word family is not spanning: {uncovered} element(s) uncovered")]
    NotSpanning { uncovered: usize },

    #[error("epsilon ladder is invalid: {0}")]
    InvalidLadder(String),

    #[error("system kinds differ: {0}")]
    KindMismatch(String),

    #[error("macro alphabet of size {size} exceeds the limit {limit}")]
    AlphabetBlowUp { size: usize, limit: usize },

    #[error("invalid conjugacy: {0}")]
    InvalidConjugacy(String),

    #[error("point is not an equilibrium (residual {residual:.3e})")]
    NotEquilibrium { residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
