use thiserror::Error;

/// Errors produced by model construction, integration and analysis.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A scalar parameter or index is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidRange(String),

    /// The payment-probability matrix violates a structural requirement.
    #[error("inconsistent payment probabilities: {0}")]
    InconsistentPayments(String),

    /// A diagonal transition probability went negative: the exchanged amount is
    /// too large for the income gaps.
    #[error(
        "negative diagonal transition probability for class {class} against partner {partner} \
         (value {value:.6e}): exchange amount S = {exchange_amount} violates the stability \
         bound S < min class gap = {min_gap}"
    )]
    NegativeDiagonal {
        class: usize,
        partner: usize,
        value: f64,
        exchange_amount: f64,
        min_gap: f64,
    },

    /// A target mean income cannot be represented on the given income grid.
    #[error("target mean income {mu} lies outside the attainable range [{min}, {max}]")]
    InfeasibleMeanIncome { mu: f64, min: f64, max: f64 },

    /// A class-fraction vector fails validation (length, sign or normalization).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The integration left the admissible region.
    #[error("integration blew up at t = {t}: x[{class}] = {value:.6e}")]
    BlowUp { t: f64, class: usize, value: f64 },

    /// A trajectory is too short for the requested comparison delay.
    #[error("trajectory span {span} is shorter than the comparison delay {xi}")]
    SpanTooShort { span: f64, xi: f64 },

    /// A convergence threshold was never attained along the series.
    #[error("threshold {eps:.3e} never reached; series minimum is {min:.3e}")]
    ThresholdNotReached { eps: f64, min: f64 },

    /// Too few data points for a requested fit or search.
    #[error("{context}: need at least {need} points, have {have}")]
    InsufficientPoints {
        context: String,
        need: usize,
        have: usize,
    },

    /// A bisection bracket does not straddle the sought transition.
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
