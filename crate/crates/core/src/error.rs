use thiserror::Error;

/// Failures raised by the region, optimizer and simulator layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The receiver deficit cannot be covered by the RF energy the
    /// transmitters are able to deliver.
    #[error("infeasible energy: {0}")]
    InfeasibleEnergy(String),

    /// Minimum rates cannot be sustained within the average power budgets.
    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    /// No power vector on the search grid satisfies the minimum rates.
    #[error("infeasible minimum rates: {0}")]
    InfeasibleMinRate(String),

    /// A transmit cost `lambda_s(i) - lambda_r * h(i)` is non-positive and the
    /// search hit its power cap.
    #[error("unbounded objective: {0}")]
    UnboundedObjective(String),

    #[error("no fixed point: {0}")]
    NoFixedPoint(String),

    #[error("dual search did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
