//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsgame::bellman::{
    direct_objective, dual_value, measured_contraction, solve_fixed_pair, solve_optimality, span,
    SolveOptions,
};
use rsgame::model::{
    compute_delta, compute_kappa, fixtures, random_instance, validate, AratStructure, Dims,
    RandomSpec,
};
use rsgame::nash::{best_response_dynamics, brute_force_nash, verify_certificate, DynamicsOptions};
use rsgame::sim::mc_cost_estimate;
use rsgame::spectral::{
    ergodic_cost, finite_horizon_growth_all, perron_value, twisted_matrix, PERRON_TOL,
};
use rsgame::transforms::{dual_objective, normalized_kernel, twisted_measure};
use rsgame::{Assumption, Error, GameInstance, Player, StationaryStrategy};

const CORPUS_SIZE: u64 = 200;

// criterion 1
const ORACLE_HORIZON: usize = 2000;
const ORACLE_FH_TOL: f64 = 1e-5;
const ORACLE_RVI_TOL: f64 = 1e-8;
const BUDGET_1: Duration = Duration::from_secs(30);
// criterion 2
const CONTRACTION_SPAN: f64 = 5.0;
const CONTRACTION_PAIRS: usize = 500;
const SOLVE_RESIDUAL: f64 = 1e-12;
const SPAN_SLACK: f64 = 1e-9;
const BUDGET_2: Duration = Duration::from_secs(60);
// criterion 3
const DUAL_POINTS: usize = 1000;
const DUAL_TOL: f64 = 1e-10;
const DUAL_COMPETITORS: usize = 10_000;
const BUDGET_3: Duration = Duration::from_secs(20);
// criterion 4
const BR_CASES: usize = 100;
const BR_DEVIATIONS: usize = 50;
const BR_TOL: f64 = 1e-8;
// criterion 5
const NASH_RANDOM: u64 = 20;
const NASH_EPS: f64 = 1e-6;
const BRUTE_GRID: f64 = 0.05;
const BRUTE_EPS: f64 = 0.05;
const BUDGET_5: Duration = Duration::from_secs(120);
// criterion 6
const PURE_INSTANCES: u64 = 20;
const PURE_SAMPLES: usize = 1000;
const PURE_TOL: f64 = 1e-12;
// criterion 7
const MC_HORIZON: usize = 50;
const MC_PATHS: usize = 10_000;
const MC_REPS: u64 = 100;
const MC_MIN_HITS: usize = 95;
const MC_SIGMAS: f64 = 3.0;
const BUDGET_7: Duration = Duration::from_secs(60);
// criterion 8
const G2_DELTA: f64 = 0.4;
const G2_KAPPA: f64 = 1.5;
const G2_EXACT_TOL: f64 = 1e-12;

fn corpus_instance(seed: u64) -> GameInstance {
    let s = seed as usize;
    let dims = Dims::new(1 + s % 6, 1 + (s / 6) % 4, 1 + (s / 24) % 4);
    let spec = RandomSpec {
        arat: seed % 2 == 1,
        ..RandomSpec::new(seed, dims)
    };
    random_instance(&spec).expect("corpus instance")
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let t: f64 = w.iter().sum();
    w.iter().map(|w| w / t).collect()
}

fn random_strategy(rng: &mut ChaCha8Rng, n: usize, k: usize) -> StationaryStrategy {
    StationaryStrategy::new((0..n).map(|_| random_simplex(rng, k)).collect()).unwrap()
}

fn random_pair(rng: &mut ChaCha8Rng, g: &GameInstance) -> (StationaryStrategy, StationaryStrategy) {
    let n = g.n_states();
    (
        random_strategy(rng, n, g.n_actions(Player::One)),
        random_strategy(rng, n, g.n_actions(Player::Two)),
    )
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn within(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (
        t <= budget,
        format!("{:.2}s of {}s", t.as_secs_f64(), budget.as_secs()),
    )
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let opts = SolveOptions::default();
    let (mut worst_fh, mut worst_rvi, mut worst_bound, mut worst_extrap) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut fh_fail = 0;
    let mut errors = Vec::new();
    for seed in 0..CORPUS_SIZE {
        let g = corpus_instance(seed);
        let (phi, psi) = random_pair(&mut rng, &g);
        for player in [Player::One, Player::Two] {
            let q = twisted_matrix(&g, player, &phi, &psi).unwrap();
            let perron = perron_value(&q, PERRON_TOL).unwrap();
            let fh = finite_horizon_growth_all(&g, player, &phi, &psi, ORACLE_HORIZON).unwrap();
            let fh2 =
                finite_horizon_growth_all(&g, player, &phi, &psi, 2 * ORACLE_HORIZON).unwrap();
            let lw: Vec<f64> = perron.eigenvector.iter().map(|w| w.ln()).collect();
            let bound = span(&lw).unwrap() / ORACLE_HORIZON as f64;
            for (f, f2) in fh.iter().zip(&fh2) {
                let gap = (f - perron.log_radius).abs();
                worst_fh = worst_fh.max(gap);
                if gap > ORACLE_FH_TOL {
                    fh_fail += 1;
                }
                // the exact bracket r^n w(x)/max w <= (Q^n 1)(x) <= r^n w(x)/min w
                worst_bound = worst_bound.max(gap - bound);
                worst_extrap = worst_extrap.max((2.0 * f2 - f - perron.log_radius).abs());
            }
            match solve_fixed_pair(&g, player, &phi, &psi, &opts) {
                Ok(r) => worst_rvi = worst_rvi.max((r.rho - perron.log_radius).abs()),
                Err(e) => errors.push(format!("seed {seed}: {e}")),
            }
        }
    }
    let (fast, time) = within(start, BUDGET_1);
    let passed = fh_fail == 0 && worst_rvi <= ORACLE_RVI_TOL && errors.is_empty() && fast;
    verdict(
        passed,
        format!(
            "max |J - fh({ORACLE_HORIZON})| = {worst_fh:.3e} (tol {ORACLE_FH_TOL:.0e}, {fh_fail} start states over); \
             max |rho_rvi - J| = {worst_rvi:.3e} (tol {ORACLE_RVI_TOL:.0e}); solver errors {}; {time}\n    \
             info: excess over eigenvector bracket span(ln w)/n = {worst_bound:.3e}; \
             |2 fh(2n) - fh(n) - J| = {worst_extrap:.3e}",
            errors.len()
        ),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let opts = SolveOptions::default();
    let (mut worst_alpha, mut worst_residual, mut worst_excess) =
        (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut bad = Vec::new();
    for seed in 0..CORPUS_SIZE {
        let g = corpus_instance(seed);
        let d = validate(&g).unwrap();
        let (phi, psi) = random_pair(&mut rng, &g);
        for (player, opponent) in [(Player::One, &psi), (Player::Two, &phi)] {
            let alpha = measured_contraction(
                &g,
                player,
                opponent,
                CONTRACTION_PAIRS,
                CONTRACTION_SPAN,
                seed,
            )
            .unwrap();
            worst_alpha = worst_alpha.max(alpha);
            if alpha >= 1.0 {
                bad.push(format!("seed {seed} alpha {alpha}"));
            }
            match solve_optimality(&g, player, opponent, &opts) {
                Ok(s) => {
                    worst_residual = worst_residual.max(s.residual);
                    let excess = span(&s.v).unwrap() - d.span_bound;
                    worst_excess = worst_excess.max(excess);
                    if s.residual >= SOLVE_RESIDUAL || excess > SPAN_SLACK {
                        bad.push(format!(
                            "seed {seed} residual {} span excess {excess}",
                            s.residual
                        ));
                    }
                }
                Err(e) => bad.push(format!("seed {seed}: {e}")),
            }
        }
    }
    let (fast, time) = within(start, BUDGET_2);
    verdict(
        bad.is_empty() && fast,
        format!(
            "max alpha(M={CONTRACTION_SPAN}) = {worst_alpha:.4}; max residual = {worst_residual:.2e}; \
             max span(v*) - L = {worst_excess:.3}; violations {:?}; {time}",
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst_gap, mut beaten) = (0.0f64, 0);
    for k in 0..DUAL_POINTS {
        let g = corpus_instance(k as u64 % CORPUS_SIZE);
        let n = g.n_states();
        let x = rng.gen_range(0..n);
        let phi = random_simplex(&mut rng, g.n_actions(Player::One));
        let psi = random_simplex(&mut rng, g.n_actions(Player::Two));
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let player = if k % 2 == 0 { Player::One } else { Player::Two };
        let direct = direct_objective(&g, player, x, &phi, &psi, &v).unwrap();
        let dual = dual_value(&g, player, x, &phi, &psi, &v).unwrap();
        worst_gap = worst_gap.max((direct - dual).abs());

        let p_hat = normalized_kernel(&g, player, x, &phi, &psi).unwrap().p_hat;
        let mu = twisted_measure(&p_hat, &v).unwrap();
        let best = dual_objective(&p_hat, &v, &mu);
        let beats_all = (0..DUAL_COMPETITORS)
            .all(|_| dual_objective(&p_hat, &v, &random_simplex(&mut rng, n)) <= best);
        if !beats_all {
            beaten += 1;
        }
    }
    let (fast, time) = within(start, BUDGET_3);
    verdict(
        worst_gap <= DUAL_TOL && beaten == 0 && fast,
        format!(
            "max |direct - dual| = {worst_gap:.2e} (tol {DUAL_TOL:.0e}); twisted measure beaten in {beaten}/{DUAL_POINTS} trials; {time}"
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let opts = SolveOptions::default();
    let (mut worst_below, mut worst_at) = (f64::NEG_INFINITY, 0.0f64);
    for k in 0..BR_CASES {
        let g = corpus_instance(k as u64 * 2);
        let n = g.n_states();
        let phi = random_strategy(&mut rng, n, g.n_actions(Player::One));
        let sol = solve_optimality(&g, Player::Two, &phi, &opts).unwrap();
        for _ in 0..BR_DEVIATIONS {
            let dev = random_strategy(&mut rng, n, g.n_actions(Player::Two));
            let j = ergodic_cost(&g, Player::Two, &phi, &dev).unwrap();
            worst_below = worst_below.max(sol.rho - j);
        }
        let pure = StationaryStrategy::pure(g.n_actions(Player::Two), &sol.selector);
        let j = ergodic_cost(&g, Player::Two, &phi, &pure).unwrap();
        worst_at = worst_at.max((j - sol.rho).abs());
    }
    verdict(
        worst_below <= BR_TOL && worst_at <= BR_TOL,
        format!(
            "max (rho* - J2(Phi, Psi')) = {worst_below:.2e}; max |J2(Phi, selector) - rho*| = {worst_at:.2e} (tol {BR_TOL:.0e})"
        ),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut instances = vec![("G2".to_string(), fixtures::g2())];
    for s in 0..NASH_RANDOM {
        let spec = RandomSpec {
            arat: true,
            ..RandomSpec::new(5000 + s, Dims::new(2, 2, 2))
        };
        instances.push((
            format!("arat seed {}", 5000 + s),
            random_instance(&spec).unwrap(),
        ));
    }
    let opts = DynamicsOptions {
        eps_target: NASH_EPS,
        ..Default::default()
    };
    let mut worst_dyn = 0.0f64;
    let mut dyn_fail = Vec::new();
    let mut brute_fail = Vec::new();
    let mut min_survivors = usize::MAX;
    for (name, g) in &instances {
        let n = g.n_states();
        let init = (
            StationaryStrategy::uniform(n, g.n_actions(Player::One)),
            StationaryStrategy::uniform(n, g.n_actions(Player::Two)),
        );
        let dynamics_ok = match best_response_dynamics(g, init, &opts) {
            Ok(out) => {
                worst_dyn = worst_dyn.max(out.certificate.max_gap());
                out.certificate.converged && verify_certificate(g, &out.certificate, NASH_EPS)
            }
            Err(_) => false,
        };
        let brute = brute_force_nash(g, BRUTE_GRID, BRUTE_EPS, &SolveOptions::default()).unwrap();
        min_survivors = min_survivors.min(brute.certificates.len());
        let brute_ok = !brute.certificates.is_empty()
            && brute.certificates.iter().all(|c| c.max_gap() <= BRUTE_EPS);
        if !dynamics_ok {
            dyn_fail.push(name.clone());
        }
        if !brute_ok {
            brute_fail.push(name.clone());
        }
    }
    let (fast, time) = within(start, BUDGET_5);
    // a dynamics failure is tolerated only where brute force certifies existence
    let tolerated = dyn_fail.iter().all(|n| !brute_fail.contains(n));
    verdict(
        tolerated && brute_fail.is_empty() && fast,
        format!(
            "{} instances; dynamics max gap {worst_dyn:.2e} (target {NASH_EPS:.0e}), not certified on {:?}; \
             brute force grid {BRUTE_GRID} empty on {:?}, fewest survivors {min_survivors}; {time}",
            instances.len(),
            dyn_fail,
            brute_fail
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for k in 0..PURE_INSTANCES {
        let g = corpus_instance(3 + 10 * k);
        let n = g.n_states();
        let kb = g.n_actions(Player::Two);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for x in 0..n {
            let phi = random_simplex(&mut rng, g.n_actions(Player::One));
            let pure_min = (0..kb)
                .map(|b| {
                    let mut e = vec![0.0; kb];
                    e[b] = 1.0;
                    direct_objective(&g, Player::Two, x, &phi, &e, &v).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            for _ in 0..PURE_SAMPLES {
                let psi = random_simplex(&mut rng, kb);
                let mixed = direct_objective(&g, Player::Two, x, &phi, &psi, &v).unwrap();
                worst = worst.max(pure_min - mixed);
                checked += 1;
            }
        }
    }
    verdict(
        worst <= PURE_TOL,
        format!(
            "{checked} mixed points; max (pure min - mixed) = {worst:.2e} (tol {PURE_TOL:.0e})"
        ),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let g = fixtures::g2();
    let u = StationaryStrategy::uniform(2, 2);
    let exact = finite_horizon_growth_all(&g, Player::One, &u, &u, MC_HORIZON).unwrap()[0];
    let mut hits = 0;
    let mut bias = 0.0;
    for rep in 0..MC_REPS {
        let e = mc_cost_estimate(&g, Player::One, &u, &u, 0, MC_HORIZON, MC_PATHS, rep).unwrap();
        if (e.value - exact).abs() <= MC_SIGMAS * e.std_error {
            hits += 1;
        }
        bias += e.value - exact;
    }
    let (fast, time) = within(start, BUDGET_7);
    verdict(
        hits >= MC_MIN_HITS && fast,
        format!(
            "{hits}/{MC_REPS} estimates within {MC_SIGMAS} standard errors (need {MC_MIN_HITS}); mean bias {:.2e}; {time}",
            bias / MC_REPS as f64
        ),
    )
}

fn fails_with(g: &GameInstance, assumption: Assumption) -> Result<String, String> {
    match validate(g) {
        Err(e) => match e.assumption() {
            Some(a) if a == assumption => Ok(e.to_string()),
            _ => Err(format!("wrong error {e}")),
        },
        Ok(d) => match d.check(assumption) {
            Some(c) if !c.passed => Ok(format!("{}: {}", c.label, c.detail)),
            _ => Err(format!("{} not flagged", assumption.label())),
        },
    }
}

fn criterion_8() -> Verdict {
    let g2 = fixtures::g2();
    let mut notes = Vec::new();
    let mut ok = true;

    let mut t = g2.transition_flat().to_vec();
    t[0] += t[1];
    t[1] = 0.0;
    let zero = GameInstance::new(
        g2.dims(),
        t,
        g2.cost_flat(Player::One).to_vec(),
        g2.cost_flat(Player::Two).to_vec(),
        1.0,
        0,
    )
    .unwrap();
    match fails_with(&zero, Assumption::DensityRatio) {
        Ok(m) => {
            let names_kappa =
                m.contains("kappa") && matches!(validate(&zero), Err(Error::KappaInfinite { .. }));
            ok &= names_kappa;
            notes.push(format!("zero entry -> \"{m}\""));
        }
        Err(m) => {
            ok = false;
            notes.push(m);
        }
    }

    // actions steer to disjoint states; the density ratio across states stays 1
    let mut t = Vec::new();
    for _x in 0..2 {
        for a in 0..2 {
            for _b in 0..2 {
                t.extend(if a == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
            }
        }
    }
    let disjoint =
        GameInstance::new(Dims::new(2, 2, 2), t, vec![0.1; 8], vec![0.2; 8], 1.0, 0).unwrap();
    match fails_with(&disjoint, Assumption::Ergodicity) {
        Ok(m) => {
            ok &= compute_delta(&disjoint) == 1.0;
            notes.push(format!("disjoint supports -> \"{m}\""));
        }
        Err(m) => {
            ok = false;
            notes.push(m);
        }
    }

    let mut arat: AratStructure = fixtures::g2_arat();
    arat.p1[0][0][0] += 0.05;
    let broken_t = g2.clone().with_arat(arat).unwrap();
    let mut arat = fixtures::g2_arat();
    arat.c21[1][0] += 0.05;
    let broken_c = g2.clone().with_arat(arat).unwrap();
    for (g, a) in [
        (&broken_t, Assumption::AdditiveTransitions),
        (&broken_c, Assumption::SeparableCosts),
    ] {
        match fails_with(g, a) {
            Ok(m) => notes.push(format!("broken ARAT -> \"{m}\"")),
            Err(m) => {
                ok = false;
                notes.push(m);
            }
        }
    }

    // independent enumeration over pure tuples
    let tuples: Vec<_> = g2.tuples().collect();
    let mut delta = 0.0f64;
    let mut kappa = 1.0f64;
    for &(x, a, b) in &tuples {
        for &(x2, a2, b2) in &tuples {
            let (p, q) = (g2.transition_row(x, a, b), g2.transition_row(x2, a2, b2));
            delta = delta.max(0.5 * p.iter().zip(q).map(|(p, q)| (p - q).abs()).sum::<f64>());
            if a == a2 && b == b2 {
                kappa = p.iter().zip(q).map(|(p, q)| p / q).fold(kappa, f64::max);
            }
        }
    }
    let d = validate(&g2).unwrap();
    let g2_ok = d.passed()
        && d.delta == delta
        && d.kappa == kappa
        && d.delta == compute_delta(&g2)
        && d.kappa == compute_kappa(&g2)
        && (d.delta - G2_DELTA).abs() <= G2_EXACT_TOL
        && (d.kappa - G2_KAPPA).abs() <= G2_EXACT_TOL;
    ok &= g2_ok;
    notes.push(format!(
        "G2 {} with delta = {} and kappa = {}",
        if d.passed() { "PASS" } else { "FAIL" },
        d.delta,
        d.kappa
    ));
    verdict(ok, notes.join("; "))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", criterion_1),
        ("contraction and convergence", criterion_2),
        ("dual representation", criterion_3),
        ("best-response optimality", criterion_4),
        ("Nash at desk scale", criterion_5),
        ("mixed-to-pure reduction", criterion_6),
        ("simulation consistency", criterion_7),
        ("assumption validators", criterion_8),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        println!(
            "criterion {} [{}] {name}: {}",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.passed {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
