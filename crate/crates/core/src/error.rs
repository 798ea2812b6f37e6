//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// `H` was called with supra-threshold input; the caller must route to `J`.
    #[error("supra-threshold input: U(phi) + eps = {total} > 1 (use J instead of H)")]
    SupraThreshold { total: f64 },

    /// `H` with negative effective strength would push the potential below reset.
    #[error("inverse interaction below reset: U(phi) - eps = {total} < 0")]
    BelowReset { total: f64 },

    /// `J` was called with sub-threshold input (negative charge surplus).
    #[error("negative charge surplus: zeta = {zeta} < 0 (use H instead of J)")]
    NegativeSurplus { zeta: f64 },

    /// A partial reset returned a value at or above threshold.
    #[error("partial reset lands at or above threshold: R(zeta) = {reset} >= 1")]
    ResetAboveThreshold { reset: f64 },

    /// A step inside a shift/interaction chain failed; `index` is 0-based.
    #[error("chain step {index}: {source}")]
    ChainStep {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter {name} = {value}: requires {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// Total input to some oscillator reaches the threshold gap, which allows
    /// self-sustained avalanches.
    #[error("coupling safety bound violated: row {row} sums to {sum} >= 1")]
    CouplingUnsafe { row: usize, sum: f64 },

    #[error("avalanche did not terminate within {max} generations")]
    AvalancheRunaway { max: usize },

    #[error("oscillator {osc} is not in the triggering set of the first avalanche")]
    RefNotTriggering { osc: usize },

    #[error("oscillator {osc} did not fire again within {limit} firing maps")]
    Livelock { osc: usize, limit: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Root bracketing failed; the parameters are outside the regime where a
    /// solution is guaranteed.
    #[error("no sign change for {name} on ({lo}, {hi})")]
    NoBracket { name: &'static str, lo: f64, hi: f64 },

    #[error("state is not a fixed point of the return map: residual {residual:e}")]
    NotFixedPoint { residual: f64 },

    /// Closed-form table classification and the numeric scan disagree.
    #[error("classification conflict for {family} on {property}: table says {table}, scan says {scan}")]
    ClassifyConflict {
        family: &'static str,
        property: &'static str,
        table: bool,
        scan: bool,
    },

    /// Cluster invariance bounds require an icpd or dcpd rise function.
    #[error("bounds not applicable: rise function is neither icpd nor dcpd")]
    BoundsNotApplicable,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
