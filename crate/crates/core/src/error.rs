use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("argument has a nonzero constant term; re-center before composing")]
    Recentering,
    #[error("not a unit: {0}")]
    NonUnit(String),
    #[error("order error: {0}")]
    Order(String),
    #[error("order budget exceeded: {0}")]
    OrderBudget(String),
    #[error("non-regular at base point: {0}")]
    NonRegular(String),
    #[error("empty relation")]
    EmptyRelation,
    #[error("delta chain error: {0}")]
    Chain(String),
    #[error("argument is not in tilde form: {0}")]
    Tilde(String),
    #[error("lift does not project onto its argument: {0}")]
    Lift(String),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("closure error: {0}")]
    Closure(String),
    #[error("symbol not of constant rank: {0}")]
    NotConstantRank(String),
    #[error("connection is not flat: {0}")]
    NotFlat(String),
    #[error("beta compatibility violated: {0}")]
    BetaCompatibility(String),
}

pub type Result<T> = std::result::Result<T, Error>;
