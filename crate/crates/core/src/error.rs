//! Error types, one enum per module plus a crate-level wrapper.
//!
//! Every message is prefixed with the owning module so downstream drivers can
//! surface module-qualified codes without re-parsing.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error("symbol: coefficient list must be nonempty")]
    EmptyCoefficients,
    #[error("symbol: leading coefficient a_{order} must be nonzero")]
    ZeroLeadingCoefficient { order: usize },
    #[error("symbol: operation undefined for order m = 0")]
    OrderZero,
    #[error(
        "symbol: tail too short: audit frequency {xi_max} does not clear the largest root modulus {root_bound}"
    )]
    TailTooShort { xi_max: f64, root_bound: f64 },
    #[error("symbol: audit grid needs at least {min} samples (got {got})")]
    AuditTooCoarse { min: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum SobolevError {
    #[error("sobolev: window must satisfy w_lo < w_hi (got [{w_lo}, {w_hi}])")]
    InvalidWindow { w_lo: f64, w_hi: f64 },
    #[error("sobolev: sample count must be a power of two >= 16 (got {n})")]
    InvalidSampleCount { n: usize },
    #[error("sobolev: sobolev index must be finite")]
    NonFiniteIndex,
    #[error("sobolev: grid functions live on different grids")]
    GridMismatch,
    #[error("sobolev: closure of the inner interval must sit inside the open outer interval")]
    CutoffNesting,
    #[error("sobolev: interval must be bounded with positive length (got ({lo}, {hi}))")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("sobolev: window does not contain the interval with positive margin")]
    WindowTooTight,
    #[error("sobolev: exhaustion depth {depth} is not resolvable on this grid")]
    ExhaustionResolution { depth: usize },
    #[error("sobolev: exhaustion level {index} out of range 1..={count}")]
    LevelOutOfRange { index: usize, count: usize },
}

#[derive(Debug, Error)]
pub enum MollifyError {
    #[error("mollify: mollifier support (-1/{index}, 1/{index}) is under-resolved on this grid")]
    Resolution { index: usize },
    #[error("mollify: distributional derivative order must be at least 1")]
    ZeroOrder,
    #[error("mollify: derivative order {order} exceeds the construction bound {bound}")]
    OrderBound { order: usize, bound: usize },
    #[error("mollify: exhaustion must be built with the closure distance rule")]
    ClosureRuleRequired,
    #[error("mollify: window margin {margin} is too small for mollifier halfwidth {halfwidth}")]
    PaddingTooSmall { margin: f64, halfwidth: f64 },
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
}

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("spectra: dirichlet graph domain requires order m = 2 (got m = {m})")]
    DirichletOrder { m: usize },
    #[error("spectra: theorem hypothesis failed: {0}")]
    HypothesisFailure(String),
    #[error("spectra: consistency alarm: {0}")]
    ConsistencyAlarm(String),
    #[error("spectra: paired tables carry different lambda samples")]
    SampleMismatch,
    #[error("spectra: interval must be bounded with positive length (got ({lo}, {hi}))")]
    UnboundedInterval { lo: f64, hi: f64 },
    #[error("spectra: function is not compactly supported inside the interval (edge mass {edge})")]
    SupportViolation { edge: f64 },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Mollify(#[from] MollifyError),
}

/// Crate-level error, a sum of the per-module enums.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Mollify(#[from] MollifyError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}
