use serde::{Deserialize, Serialize};

use super::{Dims, GameInstance};
use crate::error::{Assumption, Error, Result};

/// Tolerance for ARAT reconstruction of the full tables.
pub const ARAT_TOL: f64 = 1e-12;

/// Additive-reward, additive-transition decomposition of a game.
///
/// `p1[x][a]` and `p2[x][b]` are substochastic vectors over next states whose
/// sum is the full transition row; `c11 + c12` and `c21 + c22` are the two
/// players' costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AratStructure {
    pub p1: Vec<Vec<Vec<f64>>>,
    pub p2: Vec<Vec<Vec<f64>>>,
    pub c11: Vec<Vec<f64>>,
    pub c21: Vec<Vec<f64>>,
    pub c12: Vec<Vec<f64>>,
    pub c22: Vec<Vec<f64>>,
}

impl AratStructure {
    /// Dimensions implied by the tables, after checking they are rectangular.
    pub fn dims(&self) -> Result<Dims> {
        let states = self.p1.len();
        let actions_a = self.p1.first().map_or(0, Vec::len);
        let actions_b = self.p2.first().map_or(0, Vec::len);
        let d = Dims::new(states, actions_a, actions_b);
        self.check_shape(&d)?;
        Ok(d)
    }

    pub(crate) fn check_shape(&self, d: &Dims) -> Result<()> {
        let bad = |what: &str| Err(Error::Dimension(format!("arat.{what} has the wrong shape")));
        let kernel_ok = |t: &Vec<Vec<Vec<f64>>>, k: usize| {
            t.len() == d.states
                && t.iter()
                    .all(|r| r.len() == k && r.iter().all(|v| v.len() == d.states))
        };
        let cost_ok =
            |t: &Vec<Vec<f64>>, k: usize| t.len() == d.states && t.iter().all(|r| r.len() == k);
        if d.states == 0 || d.actions_a == 0 || d.actions_b == 0 {
            return bad("p1/p2");
        }
        if !kernel_ok(&self.p1, d.actions_a) {
            return bad("p1");
        }
        if !kernel_ok(&self.p2, d.actions_b) {
            return bad("p2");
        }
        for (name, t, k) in [
            ("c11", &self.c11, d.actions_a),
            ("c21", &self.c21, d.actions_a),
            ("c12", &self.c12, d.actions_b),
            ("c22", &self.c22, d.actions_b),
        ] {
            if !cost_ok(t, k) {
                return bad(name);
            }
        }
        Ok(())
    }
}

/// Index tuples where an attached ARAT decomposition fails to reproduce the
/// full tables within [`ARAT_TOL`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AratViolations {
    /// `(x, a, b, y)` where `p1 + p2` differs from the transition entry.
    pub transition: Vec<(usize, usize, usize, usize)>,
    /// `(player, x, a, b)` where the separable parts do not add up to the cost.
    pub cost: Vec<(u8, usize, usize, usize)>,
    /// Negative entries in `p1`/`p2`.
    pub negative: usize,
}

impl AratViolations {
    pub fn is_empty(&self) -> bool {
        self.transition.is_empty() && self.cost.is_empty() && self.negative == 0
    }
}

/// Checks the decomposition attached to `instance` entrywise. Returns `None`
/// when the instance carries no decomposition.
pub fn arat_violations(instance: &GameInstance) -> Option<AratViolations> {
    let arat = instance.arat()?;
    let negative = arat
        .p1
        .iter()
        .chain(&arat.p2)
        .flatten()
        .flatten()
        .filter(|v| **v < 0.0)
        .count();
    let mut out = AratViolations {
        negative,
        ..Default::default()
    };
    for (x, a, b) in instance.tuples() {
        let row = instance.transition_row(x, a, b);
        for (y, p) in row.iter().enumerate() {
            if (arat.p1[x][a][y] + arat.p2[x][b][y] - p).abs() > ARAT_TOL {
                out.transition.push((x, a, b, y));
            }
        }
        let c1 = arat.c11[x][a] + arat.c12[x][b];
        let c2 = arat.c21[x][a] + arat.c22[x][b];
        if (c1 - instance.cost(super::Player::One, x, a, b)).abs() > ARAT_TOL {
            out.cost.push((1, x, a, b));
        }
        if (c2 - instance.cost(super::Player::Two, x, a, b)).abs() > ARAT_TOL {
            out.cost.push((2, x, a, b));
        }
    }
    Some(out)
}

/// Builds the full game from its additive parts and attaches the parts.
pub fn assemble_from_arat(
    arat: AratStructure,
    theta: f64,
    anchor_state: usize,
) -> Result<GameInstance> {
    let d = arat.dims()?;
    let negative = arat
        .p1
        .iter()
        .chain(&arat.p2)
        .flatten()
        .flatten()
        .any(|v| !v.is_finite() || *v < 0.0);
    if negative {
        return Err(Error::Arat {
            assumption: Assumption::AdditiveTransitions,
            detail: "p1 and p2 must be nonnegative".into(),
        });
    }
    let mut transition = Vec::with_capacity(d.states * d.actions_a * d.actions_b * d.states);
    let mut cost1 = Vec::with_capacity(d.states * d.actions_a * d.actions_b);
    let mut cost2 = Vec::with_capacity(cost1.capacity());
    for x in 0..d.states {
        for a in 0..d.actions_a {
            for b in 0..d.actions_b {
                let start = transition.len();
                transition.extend(arat.p1[x][a].iter().zip(&arat.p2[x][b]).map(|(p, q)| p + q));
                let sum: f64 = transition[start..].iter().sum();
                if (sum - 1.0).abs() > ARAT_TOL {
                    return Err(Error::Arat {
                        assumption: Assumption::AdditiveTransitions,
                        detail: format!("p1[{x}][{a}] + p2[{x}][{b}] sums to {sum}"),
                    });
                }
                cost1.push(arat.c11[x][a] + arat.c12[x][b]);
                cost2.push(arat.c21[x][a] + arat.c22[x][b]);
            }
        }
    }
    GameInstance::new(d, transition, cost1, cost2, theta, anchor_state)?.with_arat(arat)
}
