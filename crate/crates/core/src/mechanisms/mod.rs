//! The four allocation mechanisms. Each is a pure function of the market
//! (and, for the randomized ones, a [`Seed`]).

mod da;
mod rm;
mod rsd;
mod ttc;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::assignment::AssignmentError;
use crate::model::{Allocation, Market, ModelError};
use crate::seed::Seed;

pub use da::deferred_acceptance;
pub use rm::{rank_cost_matrix, rank_minimizing, RankProblem};
pub use rsd::{dictator_order, random_serial_dictatorship};
pub use ttc::top_trading_cycles;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechanismKind {
    /// Student-proposing deferred acceptance.
    Da,
    /// Top trading cycles.
    Ttc,
    /// Random serial dictatorship.
    Rsd,
    /// Rank-minimizing.
    Rm,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 4] = [
        MechanismKind::Rm,
        MechanismKind::Ttc,
        MechanismKind::Da,
        MechanismKind::Rsd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Da => "DA",
            MechanismKind::Ttc => "TTC",
            MechanismKind::Rsd => "RSD",
            MechanismKind::Rm => "RM",
        }
    }

    /// RSD and RM draw randomness from the seed; DA and TTC ignore it.
    pub fn is_randomized(self) -> bool {
        matches!(self, MechanismKind::Rsd | MechanismKind::Rm)
    }

    /// Whether the mechanism reads school priorities.
    pub fn uses_priorities(self) -> bool {
        matches!(self, MechanismKind::Da | MechanismKind::Ttc)
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown mechanism {0:?} (expected DA, TTC, RSD or RM)")]
pub struct ParseMechanismError(pub String);

impl FromStr for MechanismKind {
    type Err = ParseMechanismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DA" => Ok(MechanismKind::Da),
            "TTC" => Ok(MechanismKind::Ttc),
            "RSD" => Ok(MechanismKind::Rsd),
            "RM" => Ok(MechanismKind::Rm),
            _ => Err(ParseMechanismError(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MechanismError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("assignment solver failed: {0}")]
    Solver(#[from] AssignmentError),
}

pub(crate) fn ensure_valid(market: &Market) -> Result<(), MechanismError> {
    let violations = market.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ModelError::InvalidMarket(violations).into())
    }
}

/// Runs `kind` on `market`. The seed is ignored by DA and TTC.
pub fn run_mechanism(
    kind: MechanismKind,
    market: &Market,
    seed: Seed,
) -> Result<Allocation, MechanismError> {
    match kind {
        MechanismKind::Da => deferred_acceptance(market),
        MechanismKind::Ttc => top_trading_cycles(market),
        MechanismKind::Rsd => random_serial_dictatorship(market, seed),
        MechanismKind::Rm => rank_minimizing(market, seed),
    }
}
