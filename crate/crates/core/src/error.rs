use std::fmt;

use thiserror::Error;

/// A single violated parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A rate that must be strictly positive was not (or was not finite).
    NonPositiveRate(&'static str),
    /// The vertical-transmission fraction lies outside the open interval (0, 1).
    POutOfRange(f64),
    /// `b <= mu(0)`: the disease-free population cannot grow from small sizes.
    BirthBelowBaselineMortality { b: f64, mu0: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveRate(name) => write!(f, "`{name}` must be a finite value > 0"),
            Violation::POutOfRange(p) => write!(f, "`p` must lie in (0, 1), got {p}"),
            Violation::BirthBelowBaselineMortality { b, mu0 } => {
                write!(f, "birth rate b={b} must exceed baseline mortality mu(0)={mu0}")
            }
        }
    }
}

/// Every constraint violated by a raw parameter bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(Violations),
    #[error("total population must be positive, got N={0}")]
    ZeroPopulation(f64),
    #[error("state is off the simplex: |S+I+R-1| = {0:e}")]
    SimplexViolation(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("mortality inverse undefined for rate {y} (must exceed mu(0)={mu0})")]
    InverseOutOfRange { y: f64, mu0: f64 },
    #[error("Lyapunov function undefined at I={0} (requires I > 0)")]
    DomainError(f64),
    #[error("no endemic equilibrium exists (R0 <= 1)")]
    NoEndemicState,
    #[error("step size underflow at t={t} (h={h:e})")]
    StepFailure { t: f64, h: f64 },
    #[error("exceeded {0} integration steps")]
    MaxStepsExceeded(usize),
    #[error("invalid integration spec: {0}")]
    InvalidSpec(String),
    #[error("certification region has zero area")]
    RegionEmpty,
    #[error("every sweep point was invalid")]
    AllPointsInvalid,
}

pub type Result<T> = std::result::Result<T, Error>;
