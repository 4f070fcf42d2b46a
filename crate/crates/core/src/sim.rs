//! Trajectory sampling and Monte Carlo estimates of the finite-horizon growth.
//!
//! Every path `i` draws from its own ChaCha stream (`seed`, stream `i`), so
//! results do not depend on how paths are scheduled across threads.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GameInstance, Player, StationaryStrategy};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// Length `n + 1`.
    pub states: Vec<usize>,
    pub actions_a: Vec<usize>,
    pub actions_b: Vec<usize>,
    /// Running sums of `c_1` and `c_2`, length `n + 1` starting at zero.
    pub cost_sums: [Vec<f64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Sampler tables built once per (instance, pair).
struct Sampler<'a> {
    instance: &'a GameInstance,
    phi: Vec<WeightedIndex<f64>>,
    psi: Vec<WeightedIndex<f64>>,
    next: Vec<WeightedIndex<f64>>,
}

impl<'a> Sampler<'a> {
    fn new(
        instance: &'a GameInstance,
        phi: &StationaryStrategy,
        psi: &StationaryStrategy,
    ) -> Result<Self> {
        let n = instance.n_states();
        phi.check_shape(n, instance.n_actions(Player::One), "Phi")?;
        psi.check_shape(n, instance.n_actions(Player::Two), "Psi")?;
        let table = |rows: Vec<&[f64]>| -> Vec<WeightedIndex<f64>> {
            rows.into_iter()
                .map(|r| WeightedIndex::new(r).expect("validated probability rows"))
                .collect()
        };
        Ok(Self {
            instance,
            phi: table(phi.rows().iter().map(Vec::as_slice).collect()),
            psi: table(psi.rows().iter().map(Vec::as_slice).collect()),
            next: table(
                instance
                    .tuples()
                    .map(|(x, a, b)| instance.transition_row(x, a, b))
                    .collect(),
            ),
        })
    }

    #[inline]
    fn step(&self, rng: &mut ChaCha8Rng, x: usize) -> (usize, usize, usize) {
        let a = self.phi[x].sample(rng);
        let b = self.psi[x].sample(rng);
        let d = self.instance.dims();
        let y = self.next[(x * d.actions_a + a) * d.actions_b + b].sample(rng);
        (a, b, y)
    }

    /// `theta * sum c_i` along one path of length `n`.
    fn exponent(&self, player: Player, x0: usize, n: usize, seed: u64, path: u64) -> f64 {
        let mut rng = path_rng(seed, path);
        let mut x = x0;
        let mut total = 0.0;
        for _ in 0..n {
            let (a, b, y) = self.step(&mut rng, x);
            total += self.instance.cost(player, x, a, b);
            x = y;
        }
        self.instance.theta() * total
    }
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn check_start(instance: &GameInstance, x0: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if x0 >= instance.n_states() {
        return Err(Error::Dimension(format!("start state {x0} out of range")));
    }
    Ok(())
}

/// Samples `n` steps from `x0`: actions independently from `Phi(x)` and
/// `Psi(x)`, then the next state from `P(.|x,a,b)`.
pub fn sample_path(
    instance: &GameInstance,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    x0: usize,
    n: usize,
    seed: u64,
) -> Result<Trajectory> {
    check_start(instance, x0, n)?;
    let sampler = Sampler::new(instance, phi, psi)?;
    let mut rng = path_rng(seed, 0);
    let mut t = Trajectory {
        states: Vec::with_capacity(n + 1),
        actions_a: Vec::with_capacity(n),
        actions_b: Vec::with_capacity(n),
        cost_sums: [vec![0.0], vec![0.0]],
    };
    t.states.push(x0);
    let mut x = x0;
    for _ in 0..n {
        let (a, b, y) = sampler.step(&mut rng, x);
        for p in [Player::One, Player::Two] {
            let s = t.cost_sums[p.index()].last().unwrap() + instance.cost(p, x, a, b);
            t.cost_sums[p.index()].push(s);
        }
        t.actions_a.push(a);
        t.actions_b.push(b);
        t.states.push(y);
        x = y;
    }
    Ok(t)
}

/// Estimates `(1/n) ln E_x[exp(theta sum_{t<n} c_i)]` from `n_paths`
/// independent paths as `(1/n) (logsumexp(S) - ln N)`.
///
/// The standard error comes from the delta method on the log of the sample
/// mean of `exp(S - max S)`. The estimator is biased low (Jensen).
#[allow(clippy::too_many_arguments)]
pub fn mc_cost_estimate(
    instance: &GameInstance,
    player: Player,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    x: usize,
    n: usize,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_start(instance, x, n)?;
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
    }
    let sampler = Sampler::new(instance, phi, psi)?;
    let exponents: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sampler.exponent(player, x, n, seed, i))
        .collect();

    let lse = log_sum_exp(exponents.iter().copied());
    let count = n_paths as f64;
    let value = (lse - count.ln()) / n as f64;

    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = exponents.iter().map(|s| (s - shift).exp()).collect();
    let mean = w.iter().sum::<f64>() / count;
    let std_error = if n_paths > 1 {
        let var = w.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (count - 1.0);
        var.sqrt() / (mean * count.sqrt()) / n as f64
    } else {
        0.0
    };
    Ok(McEstimate {
        value,
        std_error,
        n_paths,
        horizon: n,
        seed,
    })
}
