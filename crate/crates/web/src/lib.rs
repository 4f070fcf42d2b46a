//! WebAssembly bindings for the browser demo. Every export takes and returns
//! JSON text; errors come back as a thrown string.

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use rsgame::bellman::{solve_optimality, SolveOptions};
use rsgame::io::{instance_to_json, parse_instance};
use rsgame::model::fixtures;
use rsgame::nash::{best_response_dynamics, verify_certificate, DynamicsOptions};
use rsgame::sim::{mc_cost_estimate, sample_path};
use rsgame::spectral::{ergodic_cost, finite_horizon_growth_all};
use rsgame::{GameInstance, Player, StationaryStrategy};

fn load(instance: &str) -> Result<GameInstance, String> {
    parse_instance(instance).map_err(|e| e.to_string())
}

fn uniform_pair(g: &GameInstance) -> (StationaryStrategy, StationaryStrategy) {
    let n = g.n_states();
    (
        StationaryStrategy::uniform(n, g.n_actions(Player::One)),
        StationaryStrategy::uniform(n, g.n_actions(Player::Two)),
    )
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// The two-state reference game as an instance document.
#[wasm_bindgen(js_name = g2Instance)]
pub fn g2_instance() -> String {
    instance_to_json(&fixtures::g2())
}

#[derive(Serialize)]
struct CurvePoint {
    theta: f64,
    /// Ergodic costs of the uniform pair.
    j1: f64,
    j2: f64,
    /// Best-response values against the uniform opponent.
    rho1: f64,
    rho2: f64,
}

/// Risk sensitivity sweep: values of the uniform pair and of each player's
/// best response against it, for `steps` values of theta on a log grid.
#[wasm_bindgen(js_name = riskCurve)]
pub fn risk_curve(
    instance: &str,
    theta_min: f64,
    theta_max: f64,
    steps: usize,
) -> Result<String, String> {
    if !(theta_min > 0.0 && theta_max >= theta_min) || steps < 2 {
        return Err("need 0 < theta_min <= theta_max and at least 2 steps".into());
    }
    let base = load(instance)?;
    let (phi, psi) = uniform_pair(&base);
    let opts = SolveOptions::default();
    let ratio = (theta_max / theta_min).ln();
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let theta = theta_min * (ratio * k as f64 / (steps - 1) as f64).exp();
        let g = base.clone().with_theta(theta).map_err(|e| e.to_string())?;
        let err = |e: rsgame::Error| e.to_string();
        out.push(CurvePoint {
            theta,
            j1: ergodic_cost(&g, Player::One, &phi, &psi).map_err(err)?,
            j2: ergodic_cost(&g, Player::Two, &phi, &psi).map_err(err)?,
            rho1: solve_optimality(&g, Player::One, &psi, &opts)
                .map_err(err)?
                .rho,
            rho2: solve_optimality(&g, Player::Two, &phi, &opts)
                .map_err(err)?
                .rho,
        });
    }
    json(&out)
}

#[derive(Serialize)]
struct DynamicsView {
    gap_history: Vec<f64>,
    phi: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
    j1: f64,
    j2: f64,
    eps1: f64,
    eps2: f64,
    rounds: usize,
    converged: bool,
    verified: bool,
    cycle_period: Option<usize>,
}

/// Runs damped best-response dynamics from the uniform pair.
#[wasm_bindgen(js_name = nashDynamics)]
pub fn nash_dynamics(
    instance: &str,
    beta: f64,
    eps: f64,
    max_rounds: usize,
) -> Result<String, String> {
    let g = load(instance)?;
    let opts = DynamicsOptions {
        beta,
        eps_target: eps,
        max_rounds,
        ..Default::default()
    };
    let out = best_response_dynamics(&g, uniform_pair(&g), &opts).map_err(|e| e.to_string())?;
    let c = &out.certificate;
    json(&DynamicsView {
        verified: verify_certificate(&g, c, eps),
        gap_history: out.gap_history.clone(),
        phi: c.phi.rows().to_vec(),
        psi: c.psi.rows().to_vec(),
        j1: c.j1,
        j2: c.j2,
        eps1: c.eps1,
        eps2: c.eps2,
        rounds: c.rounds,
        converged: c.converged,
        cycle_period: out.cycle.map(|c| c.period),
    })
}

#[derive(Serialize)]
struct SimulationView {
    player: Player,
    exact: f64,
    estimate: f64,
    std_error: f64,
    ergodic_cost: f64,
    /// Running `(1/t) theta sum c` along one sample path.
    path_average: Vec<f64>,
}

/// Monte Carlo estimate of the finite-horizon growth under the uniform
/// pair, next to the exact value, for both players. The seed is 32-bit so
/// that JavaScript can pass a plain number.
#[wasm_bindgen(js_name = simulate)]
pub fn simulate(
    instance: &str,
    start: usize,
    horizon: usize,
    paths: usize,
    seed: u32,
) -> Result<String, String> {
    let g = load(instance)?;
    let (phi, psi) = uniform_pair(&g);
    let err = |e: rsgame::Error| e.to_string();
    let path = sample_path(&g, &phi, &psi, start, horizon, seed.into()).map_err(err)?;
    let mut views = Vec::new();
    for player in [Player::One, Player::Two] {
        let est = mc_cost_estimate(&g, player, &phi, &psi, start, horizon, paths, seed.into())
            .map_err(err)?;
        let exact = finite_horizon_growth_all(&g, player, &phi, &psi, horizon).map_err(err)?[start];
        let sums = &path.cost_sums[player.index()];
        views.push(SimulationView {
            player,
            exact,
            estimate: est.value,
            std_error: est.std_error,
            ergodic_cost: ergodic_cost(&g, player, &phi, &psi).map_err(err)?,
            path_average: (1..sums.len())
                .map(|t| g.theta() * sums[t] / t as f64)
                .collect(),
        });
    }
    json(&views)
}
