use std::fmt;

use serde::{Deserialize, Serialize};

/// The standing assumptions a finite game instance is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// Uniform total-variation contraction of the transition kernel (`delta < 1`).
    Ergodicity,
    /// Every transition probability is at least the positivity threshold.
    Positivity,
    /// Bounded density ratio across states (`kappa < inf`).
    DensityRatio,
    /// Additive transitions: `P(.|x,a,b) = P1(.|x,a) + P2(.|x,b)`.
    AdditiveTransitions,
    /// Costs separable in the two action variables.
    SeparableCosts,
}

impl Assumption {
    /// Label used in reports and error messages.
    pub fn label(self) -> &'static str {
        match self {
            Assumption::Ergodicity => "Assumption 2(i)",
            Assumption::Positivity => "Assumption 2(ii)",
            Assumption::DensityRatio => "Assumption 4 (kappa)",
            Assumption::AdditiveTransitions => "Assumption 4.1 (ARAT transitions)",
            Assumption::SeparableCosts => "Assumption 4.2 (ARAT costs)",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("transition row (x={x}, a={a}, b={b}) sums to {sum}, expected 1")]
    RowSum {
        x: usize,
        a: usize,
        b: usize,
        sum: f64,
    },

    #[error("invalid entry in {table}: {detail}")]
    InvalidEntry { table: &'static str, detail: String },

    #[error(
        "{}: kappa infinite, P({y}|x={x_prime},a={a},b={b}) = 0 while P({y}|x={x},a={a},b={b}) > 0",
        Assumption::DensityRatio
    )]
    KappaInfinite {
        x: usize,
        x_prime: usize,
        a: usize,
        b: usize,
        y: usize,
    },

    #[error("strategy row {state} is not a probability vector ({detail})")]
    NotSimplex { state: usize, detail: String },

    #[error("infeasible min_prob {min_prob}: min_prob * n_states = {total} must be < 1")]
    InfeasibleMinProb { min_prob: f64, total: f64 },

    #[error("{assumption}: {detail}")]
    Arat {
        assumption: Assumption,
        detail: String,
    },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("strategy grid has {pairs} pairs, limit is {limit}")]
    GridTooLarge { pairs: u128, limit: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty vector")]
    EmptyVector,
}

impl Error {
    /// The assumption this error reports as violated, if any.
    pub fn assumption(&self) -> Option<Assumption> {
        match self {
            Error::KappaInfinite { .. } => Some(Assumption::DensityRatio),
            Error::Arat { assumption, .. } => Some(*assumption),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
