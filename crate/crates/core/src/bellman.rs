//! The risk-sensitive Bellman operators and relative value iteration.
//!
//! For player 2 against a fixed `Phi` the operator is
//!
//! ```text
//! (T v)(x) = min_b ln sum_a Phi(a|x) e^{theta c2(x,a,b)} sum_y e^{v(y)} P(y|x,a,b)
//! ```
//!
//! and symmetrically for player 1 against a fixed `Psi`. The objective inside
//! the minimum is the logarithm of a functional linear in the player's own
//! mixed action, so the infimum over mixed actions is attained at a pure one.
//! The operator is a contraction in the span seminorm; relative value
//! iteration anchored at `x0` solves `rho + v = T v` with `v(x0) = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GameInstance, Player, StationaryStrategy};
use crate::numeric::{log_sum_exp, max_of, min_of, span_unchecked};
use crate::transforms::{self, check_mix, weighted_pairs};

/// Absolute tolerance under which two action values count as tied.
pub const TIE_TOL: f64 = 1e-10;

/// Span seminorm `max(v) - min(v)`.
pub fn span(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(span_unchecked(v))
}

/// `ln sum_y e^{v(y)} row(y)`, shifted by `max(v)` for stability.
#[inline]
fn log_expectation(row: &[f64], v: &[f64], shift: f64) -> f64 {
    let s: f64 = row.iter().zip(v).map(|(p, v)| p * (v - shift).exp()).sum();
    s.ln() + shift
}

/// Direct form of the bracketed objective:
/// `c_hat_i(x,phi,psi) + ln ∫ e^v dP_hat_i(.|x,phi,psi)`, which equals
/// `ln sum_{a,b} phi(a) psi(b) e^{theta c_i(x,a,b)} sum_y e^{v(y)} P(y|x,a,b)`.
pub fn direct_objective(
    instance: &GameInstance,
    player: Player,
    x: usize,
    phi: &[f64],
    psi: &[f64],
    v: &[f64],
) -> Result<f64> {
    check_mix(instance, x, phi, psi)?;
    check_values(instance, v)?;
    Ok(objective_unchecked(
        instance,
        player,
        x,
        phi,
        psi,
        v,
        max_of(v),
    ))
}

fn objective_unchecked(
    instance: &GameInstance,
    player: Player,
    x: usize,
    phi: &[f64],
    psi: &[f64],
    v: &[f64],
    shift: f64,
) -> f64 {
    let theta = instance.theta();
    log_sum_exp(weighted_pairs(phi, psi).map(|(a, b, lw)| {
        lw + theta * instance.cost(player, x, a, b)
            + log_expectation(instance.transition_row(x, a, b), v, shift)
    }))
}

fn check_values(instance: &GameInstance, v: &[f64]) -> Result<()> {
    if v.len() != instance.n_states() {
        return Err(Error::Dimension(format!(
            "value vector has {} entries, instance has {} states",
            v.len(),
            instance.n_states()
        )));
    }
    if v.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "value vector must be finite".into(),
        ));
    }
    Ok(())
}

/// Entropy-dual form of the objective: `c_hat + ∫ v dmu* - I(mu*, P_hat)` at
/// the maximizing twisted measure `mu*`.
pub fn dual_value(
    instance: &GameInstance,
    player: Player,
    x: usize,
    phi: &[f64],
    psi: &[f64],
    v: &[f64],
) -> Result<f64> {
    check_values(instance, v)?;
    let eval = transforms::normalized_kernel(instance, player, x, phi, psi)?;
    let mu = transforms::twisted_measure(&eval.p_hat, v)?;
    Ok(eval.c_hat + transforms::dual_objective(&eval.p_hat, v, &mu))
}

/// Result of one operator application.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorOutput {
    /// `(T v)(x)`.
    pub values: Vec<f64>,
    /// Objective of every pure own action, per state.
    pub action_values: Vec<Vec<f64>>,
    /// Pure actions within [`TIE_TOL`] of the minimum, ascending.
    pub argmins: Vec<Vec<usize>>,
}

/// Value of each pure own action at state `x` against the opponent's mix.
pub(crate) fn state_action_values(
    instance: &GameInstance,
    player: Player,
    x: usize,
    opponent_mix: &[f64],
    v: &[f64],
) -> Vec<f64> {
    let shift = max_of(v);
    let theta = instance.theta();
    let own = instance.n_actions(player);
    (0..own)
        .map(|k| {
            log_sum_exp(
                opponent_mix
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(j, w)| {
                        let (a, b) = match player {
                            Player::One => (k, j),
                            Player::Two => (j, k),
                        };
                        w.ln()
                            + theta * instance.cost(player, x, a, b)
                            + log_expectation(instance.transition_row(x, a, b), v, shift)
                    }),
            )
        })
        .collect()
}

fn tied(values: &[f64]) -> Vec<usize> {
    let best = min_of(values);
    values
        .iter()
        .enumerate()
        .filter(|(_, q)| **q - best <= TIE_TOL)
        .map(|(i, _)| i)
        .collect()
}

/// Applies `T` (player 2, opponent `Phi`) or `U` (player 1, opponent `Psi`).
pub fn apply_operator(
    instance: &GameInstance,
    player: Player,
    opponent: &StationaryStrategy,
    v: &[f64],
) -> Result<OperatorOutput> {
    opponent.check_shape(
        instance.n_states(),
        instance.n_actions(player.opponent()),
        "opponent",
    )?;
    check_values(instance, v)?;
    Ok(apply_unchecked(instance, player, opponent, v))
}

fn apply_unchecked(
    instance: &GameInstance,
    player: Player,
    opponent: &StationaryStrategy,
    v: &[f64],
) -> OperatorOutput {
    let n = instance.n_states();
    let mut values = Vec::with_capacity(n);
    let mut action_values = Vec::with_capacity(n);
    let mut argmins = Vec::with_capacity(n);
    for x in 0..n {
        let q = state_action_values(instance, player, x, opponent.row(x), v);
        values.push(min_of(&q));
        argmins.push(tied(&q));
        action_values.push(q);
    }
    OperatorOutput {
        values,
        action_values,
        argmins,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop once `span(v_{k+1} - v_k) < tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

impl SolveOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive and max_iter nonzero, got {} / {}",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

/// Solution of one player's optimality equation against a fixed opponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub player: Player,
    /// Optimal risk-sensitive ergodic value against the opponent.
    pub rho: f64,
    /// Relative values, `v[anchor] = 0`.
    pub v: Vec<f64>,
    /// Lowest-index minimizing pure action per state.
    pub selector: Vec<usize>,
    pub tied_actions: Vec<Vec<usize>>,
    pub action_values: Vec<Vec<f64>>,
    /// `span(v_{k+1} - v_k)` at termination.
    pub residual: f64,
    /// `max_x |(T v)(x) - v(x) - rho|` at the returned `v`.
    pub equation_residual: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub span_history: Vec<f64>,
}

struct Iterate {
    rho: f64,
    v: Vec<f64>,
    residual: f64,
    iterations: usize,
    history: Vec<f64>,
}

/// `v <- step(v) - step(v)(anchor)` until successive iterates differ by less
/// than `tol` in span.
fn relative_value_iteration<F>(
    anchor: usize,
    mut v: Vec<f64>,
    opts: &SolveOptions,
    mut step: F,
) -> Result<Iterate>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let a0 = v[anchor];
    v.iter_mut().for_each(|x| *x -= a0);
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_iter {
        let tv = step(&v);
        let rho = tv[anchor];
        let next: Vec<f64> = tv.iter().map(|t| t - rho).collect();
        let diff: Vec<f64> = next.iter().zip(&v).map(|(a, b)| a - b).collect();
        residual = span_unchecked(&diff);
        history.push(residual);
        v = next;
        if residual < opts.tol {
            return Ok(Iterate {
                rho,
                v,
                residual,
                iterations: k,
                history,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Solves `rho + v = T v`, `v(x0) = 0` by relative value iteration from `v = 0`.
pub fn solve_optimality(
    instance: &GameInstance,
    player: Player,
    opponent: &StationaryStrategy,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    solve_optimality_from(
        instance,
        player,
        opponent,
        &vec![0.0; instance.n_states()],
        opts,
    )
}

pub fn solve_optimality_from(
    instance: &GameInstance,
    player: Player,
    opponent: &StationaryStrategy,
    v0: &[f64],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    opts.check()?;
    instance.require_finite_kappa()?;
    opponent.check_shape(
        instance.n_states(),
        instance.n_actions(player.opponent()),
        "opponent",
    )?;
    check_values(instance, v0)?;
    let it = relative_value_iteration(instance.anchor_state(), v0.to_vec(), opts, |v| {
        (0..instance.n_states())
            .map(|x| {
                min_of(&state_action_values(
                    instance,
                    player,
                    x,
                    opponent.row(x),
                    v,
                ))
            })
            .collect()
    })?;
    let out = apply_unchecked(instance, player, opponent, &it.v);
    let equation_residual = out
        .values
        .iter()
        .zip(&it.v)
        .map(|(t, v)| (t - v - it.rho).abs())
        .fold(0.0, f64::max);
    Ok(SolveResult {
        player,
        rho: it.rho,
        selector: out.argmins.iter().map(|s| s[0]).collect(),
        tied_actions: out.argmins,
        action_values: out.action_values,
        v: it.v,
        residual: it.residual,
        equation_residual,
        iterations: it.iterations,
        span_history: it.history,
    })
}

/// Relative value iteration with both strategies frozen: the degenerate
/// one-action case of [`solve_optimality`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPairValue {
    pub rho: f64,
    pub v: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn solve_fixed_pair(
    instance: &GameInstance,
    player: Player,
    phi: &StationaryStrategy,
    psi: &StationaryStrategy,
    opts: &SolveOptions,
) -> Result<FixedPairValue> {
    opts.check()?;
    instance.require_finite_kappa()?;
    phi.check_shape(instance.n_states(), instance.n_actions(Player::One), "Phi")?;
    psi.check_shape(instance.n_states(), instance.n_actions(Player::Two), "Psi")?;
    let n = instance.n_states();
    let it = relative_value_iteration(instance.anchor_state(), vec![0.0; n], opts, |v| {
        let shift = max_of(v);
        (0..n)
            .map(|x| objective_unchecked(instance, player, x, phi.row(x), psi.row(x), v, shift))
            .collect()
    })?;
    Ok(FixedPairValue {
        rho: it.rho,
        v: it.v,
        residual: it.residual,
        iterations: it.iterations,
    })
}

/// Largest observed `span(T v1 - T v2) / span(v1 - v2)` over `n_pairs`
/// random pairs with entries in `[0, span_cap]`.
pub fn measured_contraction(
    instance: &GameInstance,
    player: Player,
    opponent: &StationaryStrategy,
    n_pairs: usize,
    span_cap: f64,
    seed: u64,
) -> Result<f64> {
    if n_pairs == 0 || !(span_cap > 0.0) {
        return Err(Error::InvalidParameter(
            "need n_pairs >= 1 and span_cap > 0".into(),
        ));
    }
    opponent.check_shape(
        instance.n_states(),
        instance.n_actions(player.opponent()),
        "opponent",
    )?;
    let n = instance.n_states();
    if n == 1 {
        // every function on one state is constant
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| span_cap * rng.gen::<f64>()).collect()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..n_pairs {
        let (v1, v2, denom) = loop {
            let v1 = sample(&mut rng);
            let v2 = sample(&mut rng);
            let d: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a - b).collect();
            let s = span_unchecked(&d);
            if s > 0.0 {
                break (v1, v2, s);
            }
        };
        let t1 = apply_unchecked(instance, player, opponent, &v1).values;
        let t2 = apply_unchecked(instance, player, opponent, &v2).values;
        let d: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a - b).collect();
        worst = worst.max(span_unchecked(&d) / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, Dims};

    fn zero_cost(n: usize) -> GameInstance {
        let t: Vec<f64> = (0..n * 4).flat_map(|_| vec![1.0 / n as f64; n]).collect();
        GameInstance::new(
            Dims::new(n, 2, 2),
            t,
            vec![0.0; n * 4],
            vec![0.0; n * 4],
            1.0,
            0,
        )
        .unwrap()
    }

    /// One state, separable player-2 cost `c21(a) + c22(b)`.
    fn one_state() -> GameInstance {
        let c21 = [0.2, 0.7];
        let c22 = [0.9, 0.3, 0.6];
        let c2: Vec<f64> = (0..2)
            .flat_map(|a| c22.iter().map(move |b| c21[a] + b))
            .collect();
        GameInstance::new(Dims::new(1, 2, 3), vec![1.0; 6], vec![0.1; 6], c2, 1.0, 0).unwrap()
    }

    #[test]
    fn span_cases() {
        assert_eq!(span(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(span(&[3.0, -1.0, 0.0]).unwrap(), 4.0);
        assert!(matches!(span(&[]), Err(Error::EmptyVector)));
    }

    #[test]
    fn zero_cost_operator_is_zero() {
        let g = zero_cost(3);
        let out = apply_operator(
            &g,
            Player::Two,
            &StationaryStrategy::uniform(3, 2),
            &[0.0; 3],
        )
        .unwrap();
        assert!(out.values.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(out.argmins[0], vec![0, 1]);
    }

    #[test]
    fn zero_cost_solve_takes_one_iteration() {
        let g = zero_cost(3);
        let r = solve_optimality(
            &g,
            Player::One,
            &StationaryStrategy::uniform(3, 2),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(r.rho, 0.0);
        assert_eq!(r.v, vec![0.0; 3]);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn one_state_closed_form() {
        let g = one_state();
        let phi = StationaryStrategy::new(vec![vec![0.3, 0.7]]).unwrap();
        // T v = v + min_b ln sum_a phi(a) e^{c2(a,b)}
        let v = [1.7];
        let out = apply_operator(&g, Player::Two, &phi, &v).unwrap();
        let expect = |b: usize| -> f64 {
            (0..2)
                .map(|a| phi.row(0)[a] * g.cost(Player::Two, 0, a, b).exp())
                .sum::<f64>()
                .ln()
        };
        let best = (0..3).map(expect).fold(f64::INFINITY, f64::min);
        assert!((out.values[0] - (1.7 + best)).abs() < 1e-14);
        assert_eq!(out.argmins[0], vec![1]);
        let r = solve_optimality(&g, Player::Two, &phi, &SolveOptions::default()).unwrap();
        assert!((r.rho - best).abs() < 1e-14);
        assert_eq!(r.v, vec![0.0]);
        assert_eq!(r.selector, vec![1]);
    }

    #[test]
    fn g2_operator_at_zero_matches_log_normalizer() {
        let g = fixtures::g2();
        let u = StationaryStrategy::uniform(2, 2);
        let out = apply_operator(&g, Player::Two, &u, &[0.0, 0.0]).unwrap();
        for x in 0..2 {
            let brute = (0..2)
                .map(|b| {
                    (0..2)
                        .map(|a| {
                            0.5 * g.cost(Player::Two, x, a, b).exp()
                                * g.transition_row(x, a, b).iter().sum::<f64>()
                        })
                        .sum::<f64>()
                        .ln()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((out.values[x] - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_at_zero_is_log_normalizer() {
        let g = fixtures::g2();
        let (phi, psi) = ([0.2, 0.8], [0.6, 0.4]);
        let d = dual_value(&g, Player::One, 1, &phi, &psi, &[0.0, 0.0]).unwrap();
        let c_hat = transforms::log_normalizer(&g, Player::One, 1, &phi, &psi).unwrap();
        assert!((d - c_hat).abs() < 1e-15);
        let direct = direct_objective(&g, Player::One, 1, &phi, &psi, &[0.4, -1.3]).unwrap();
        let dual = dual_value(&g, Player::One, 1, &phi, &psi, &[0.4, -1.3]).unwrap();
        assert!((direct - dual).abs() < 1e-12);
    }

    #[test]
    fn anchoring_and_residuals() {
        let g = fixtures::g2();
        let u = StationaryStrategy::uniform(2, 2);
        for player in [Player::One, Player::Two] {
            let r = solve_optimality(&g, player, &u, &SolveOptions::default()).unwrap();
            assert_eq!(r.v[g.anchor_state()], 0.0);
            assert!(r.residual < 1e-12);
            assert!(r.equation_residual < 1e-11);
            assert!(span(&r.v).unwrap() <= 1.5f64.ln() + 3.0);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = fixtures::g2();
        let opts = SolveOptions {
            tol: 1e-12,
            max_iter: 2,
        };
        let err = solve_optimality(&g, Player::Two, &StationaryStrategy::uniform(2, 2), &opts)
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 2, .. }));
    }

    #[test]
    fn rejects_infinite_kappa() {
        let g = GameInstance::new(
            Dims::new(2, 1, 1),
            vec![1.0, 0.0, 0.5, 0.5],
            vec![0.0; 2],
            vec![0.0; 2],
            1.0,
            0,
        )
        .unwrap();
        let err = solve_optimality(
            &g,
            Player::One,
            &StationaryStrategy::uniform(2, 1),
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("kappa"));
    }

    #[test]
    fn contraction_with_state_free_kernel_is_zero() {
        // same next-state law everywhere, costs vary
        let n = 3;
        let row = [0.2, 0.5, 0.3];
        let t: Vec<f64> = (0..n * 4).flat_map(|_| row).collect();
        let c: Vec<f64> = (0..n * 4).map(|i| (i % 5) as f64 * 0.1).collect();
        let g = GameInstance::new(Dims::new(n, 2, 2), t, c.clone(), c, 1.0, 0).unwrap();
        let alpha = measured_contraction(
            &g,
            Player::Two,
            &StationaryStrategy::uniform(n, 2),
            50,
            5.0,
            3,
        )
        .unwrap();
        assert!(alpha < 1e-12, "{alpha}");
    }

    #[test]
    fn contraction_on_g2_is_below_one() {
        let g = fixtures::g2();
        let a = measured_contraction(
            &g,
            Player::Two,
            &StationaryStrategy::uniform(2, 2),
            500,
            5.0,
            11,
        )
        .unwrap();
        assert!(a > 0.0 && a < 1.0, "{a}");
    }
}
