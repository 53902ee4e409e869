//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A rational literal could not be parsed (accepted forms: `p/q`,
    /// integer, decimal).
    #[error("cannot parse `{0}` as a rational number")]
    InvalidRational(String),

    /// Type grids need `gamma >= 2` (so every type is strictly between
    /// consecutive integers) and at least one type.
    #[error("invalid type grid: gamma={gamma}, m={m} (need gamma >= 2, m >= 1)")]
    InvalidTypeGrid { gamma: u64, m: usize },

    /// A type index fell outside the grid.
    #[error("type index {index} out of range for a grid of {m} types")]
    TypeIndexOutOfRange { index: usize, m: usize },

    /// The round-up identity `ceil(theta * n) = ceil(theta) * n` only holds
    /// for `n < gamma`; larger multipliers signal a misconfigured pairing of
    /// grids.
    #[error("round-up identity requires n < gamma (n={n}, gamma={gamma})")]
    CeilIdentityOutOfRange { n: u64, gamma: u64 },

    /// A quantity fell outside the contract grid `{{0..b}}`.
    #[error("quantity {q} outside the contract grid 0..={b}")]
    QuantityOutOfRange { q: u64, b: u64 },

    /// The contract grid needs `b >= 1`.
    #[error("invalid quantity grid: b={0} (need b >= 1)")]
    InvalidQuantityGrid(u64),

    /// An explicit value table must cover exactly `{{0..b}}`.
    #[error("value table has {got} entries but the quantity grid needs {need}")]
    ValueTableLength { got: usize, need: usize },

    /// A difference quotient was requested outside its defined range.
    #[error("difference at q={q} undefined: valid range is {lo}..={hi}")]
    DiffOutOfRange { q: u64, lo: u64, hi: u64 },

    /// A value function failed validation where validity is required.
    #[error("value function fails required properties: {0}")]
    InvalidValueFunction(String),

    /// A belief vector was malformed (wrong length, negative entries, bad
    /// total mass, or empty support).
    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    /// Virtual costs exist only for supported types.
    #[error("type index {0} has zero probability; virtual cost needs a supported type")]
    UnsupportedType(usize),

    /// Conditioning requires positive mass on the target set.
    #[error("conditioning on a zero-probability type set")]
    ZeroMassConditioning,

    /// A requested index range was malformed or out of bounds.
    #[error("invalid index range: {0}")]
    InvalidRange(String),

    /// A support assignment failed a structural admissibility check.
    #[error("support assignment rejected: {0}")]
    InfeasibleSupport(String),

    /// The tail-sum identity is only defined for cross-ratio-consistent
    /// belief pairs.
    #[error("belief pair fails cross-ratio equality; tail-sum identity undefined")]
    NotCrossRatioConsistent,

    /// Chosen menu quantities must strictly decrease over supported types
    /// (trailing zero-quantity rows excepted).
    #[error("menu quantities not strictly decreasing: {0}")]
    MonotonicityFailure(String),

    /// The closed-form rent disagreed with the direct payoff evaluation,
    /// which can only happen if the transfer recursion is inconsistent.
    #[error(
        "rent closed form {closed_form} disagrees with direct utility {direct} \
         for type index {type_index}: transfer recursion inconsistent"
    )]
    RentMismatch {
        type_index: usize,
        closed_form: String,
        direct: String,
    },

    /// The exhaustive search space exceeded the desk-scale guard.
    #[error("oracle search space (b+1)^(2k) = {size} exceeds the guard {limit}")]
    OracleTooLarge { size: u128, limit: u128 },

    /// The rationalizing-belief test needs at least one strategy entry.
    #[error("empty strategy-entry set for the rationalizing-belief test")]
    EmptyEntrySet,

    /// A linear program behaved impossibly for this problem class.
    #[error("linear program failed: {0}")]
    LpFailure(String),

    /// Scenario-level validation failed.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A message that forced types must reach admits no valid belief
    /// support; the elimination state is internally inconsistent.
    #[error("message {message} admits no valid support for its forced types")]
    NoFeasibleSupport { message: String },

    /// The elimination loop hit the level cap before reaching a fixed point.
    #[error("no fixed point within {0} elimination levels")]
    NoConvergence(u32),

    /// An internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    /// Underlying I/O failure (scenario files, artifact output).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Scenario file did not parse as JSON.
    #[error("scenario parse error: {0}")]
    Json(#[from] serde_json::Error),
}
