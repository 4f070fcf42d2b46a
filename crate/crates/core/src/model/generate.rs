use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{assemble_from_arat, AratStructure, Dims, GameInstance};
use crate::error::{Error, Result};

/// Parameters for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub dims: Dims,
    /// Floor on every transition probability.
    pub min_prob: f64,
    /// Generate from additive parts and attach them.
    pub arat: bool,
    /// Costs are drawn from `[0, c_bar]`.
    pub c_bar: f64,
    pub theta: f64,
}

impl RandomSpec {
    pub fn new(seed: u64, dims: Dims) -> Self {
        Self {
            seed,
            dims,
            min_prob: 0.02,
            arat: false,
            c_bar: 1.0,
            theta: 1.0,
        }
    }
}

/// A probability vector with every entry at least `floor`.
fn floored_simplex(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    let free = 1.0 - floor * n as f64;
    w.iter().map(|w| floor + free * w / total).collect()
}

/// Draws a reproducible instance satisfying every validation invariant.
/// With `spec.arat`, the instance is assembled from random additive parts.
pub fn random_instance(spec: &RandomSpec) -> Result<GameInstance> {
    let d = spec.dims;
    if d.states == 0 || d.actions_a == 0 || d.actions_b == 0 {
        return Err(Error::Dimension("dimensions must be positive".into()));
    }
    let total = spec.min_prob * d.states as f64;
    if !(spec.min_prob > 0.0) || total >= 1.0 {
        return Err(Error::InfeasibleMinProb {
            min_prob: spec.min_prob,
            total,
        });
    }
    if !(spec.c_bar >= 0.0 && spec.c_bar.is_finite()) {
        return Err(Error::InvalidParameter(format!("c_bar = {}", spec.c_bar)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let anchor = 0;

    if spec.arat {
        // Both parts have entries >= min_prob times their mass, and the masses
        // add to one, so every combined entry is >= min_prob.
        let mut p1 = Vec::with_capacity(d.states);
        let mut p2 = Vec::with_capacity(d.states);
        for _ in 0..d.states {
            let share: f64 = rng.gen_range(0.2..0.8);
            p1.push(
                (0..d.actions_a)
                    .map(|_| {
                        floored_simplex(&mut rng, d.states, spec.min_prob)
                            .into_iter()
                            .map(|p| share * p)
                            .collect()
                    })
                    .collect::<Vec<Vec<f64>>>(),
            );
            p2.push(
                (0..d.actions_b)
                    .map(|_| {
                        floored_simplex(&mut rng, d.states, spec.min_prob)
                            .into_iter()
                            .map(|p| (1.0 - share) * p)
                            .collect()
                    })
                    .collect::<Vec<Vec<f64>>>(),
            );
        }
        let half = 0.5 * spec.c_bar;
        let mut table = |k: usize| -> Vec<Vec<f64>> {
            (0..d.states)
                .map(|_| (0..k).map(|_| half * rng.gen::<f64>()).collect())
                .collect()
        };
        let c11 = table(d.actions_a);
        let c21 = table(d.actions_a);
        let c12 = table(d.actions_b);
        let c22 = table(d.actions_b);
        let arat = AratStructure {
            p1,
            p2,
            c11,
            c21,
            c12,
            c22,
        };
        return assemble_from_arat(arat, spec.theta, anchor);
    }

    let rows = d.states * d.actions_a * d.actions_b;
    let mut transition = Vec::with_capacity(rows * d.states);
    for _ in 0..rows {
        transition.extend(floored_simplex(&mut rng, d.states, spec.min_prob));
    }
    let cost1 = (0..rows).map(|_| spec.c_bar * rng.gen::<f64>()).collect();
    let cost2 = (0..rows).map(|_| spec.c_bar * rng.gen::<f64>()).collect();
    GameInstance::new(d, transition, cost1, cost2, spec.theta, anchor)
}
