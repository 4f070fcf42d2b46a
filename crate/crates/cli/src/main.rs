use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rsgame::bellman::{solve_fixed_pair, solve_optimality, SolveOptions};
use rsgame::io::{
    instance_digest, instance_to_json, parse_instance, to_json, FormatError, StrategySpec,
};
use rsgame::model::{
    random_instance, validate_with, Dims, RandomSpec, ValidationOptions, DEFAULT_MIN_PROB,
};
use rsgame::nash::{best_response_dynamics, brute_force_nash, verify_certificate, DynamicsOptions};
use rsgame::sim::mc_cost_estimate;
use rsgame::spectral::{finite_horizon_growth_all, perron_value, twisted_matrix, PERRON_TOL};
use rsgame::{GameInstance, Player, StationaryStrategy};

const TOOL: &str = "rsgame";

#[derive(Parser, Serialize)]
#[command(
    name = "rsgame",
    version,
    about = "Risk-sensitive ergodic stochastic games: solve, certify, simulate"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Override the instance's risk parameter.
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Check the standing assumptions and report delta, kappa and the span bound.
    Validate(ValidateArgs),
    /// Solve one player's optimality equation against a fixed opponent.
    Solve(SolveArgs),
    /// Evaluate a strategy pair: spectral, finite-horizon and Monte Carlo values.
    Eval(EvalArgs),
    /// Search for an epsilon-Nash pair by damped best-response dynamics.
    Nash(NashArgs),
    /// Certify every pair on a strategy grid.
    Brute(BruteArgs),
    /// Write a random instance.
    Gen(GenArgs),
}

#[derive(Args, Serialize)]
struct SolverFlags {
    #[arg(long, default_value_t = SolveOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolveOptions::default().max_iter)]
    max_iter: usize,
}

impl SolverFlags {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_PROB)]
    min_prob: f64,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = parse_player)]
    player: Player,
    /// Opponent strategy file, or `uniform`.
    #[arg(long)]
    opponent: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Player 1 strategy file, or `uniform`.
    #[arg(long)]
    phi: PathBuf,
    /// Player 2 strategy file, or `uniform`.
    #[arg(long)]
    psi: PathBuf,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    /// Add Monte Carlo estimates from this start state.
    #[arg(long)]
    mc: bool,
    #[arg(long, default_value_t = 0)]
    start: usize,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Serialize)]
struct NashArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = DynamicsOptions::default().eps_target)]
    eps: f64,
    #[arg(long, default_value_t = DynamicsOptions::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = DynamicsOptions::default().tau0)]
    tau0: f64,
    #[arg(long, default_value_t = DynamicsOptions::default().tau_min)]
    tau_min: f64,
    #[arg(long, default_value_t = DynamicsOptions::default().anneal_rounds)]
    anneal_rounds: usize,
    #[arg(long, default_value_t = DynamicsOptions::default().max_rounds)]
    rounds: usize,
    /// Use pure best responses instead of logit smoothing.
    #[arg(long)]
    no_smoothing: bool,
    /// Skip the Newton refinement after the dynamics.
    #[arg(long)]
    no_polish: bool,
    /// Initial player 1 strategy (default uniform).
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Initial player 2 strategy (default uniform).
    #[arg(long)]
    psi: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Serialize)]
struct BruteArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    grid: f64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    states: usize,
    #[arg(long, default_value_t = 2)]
    actions_a: usize,
    #[arg(long, default_value_t = 2)]
    actions_b: usize,
    #[arg(long, default_value_t = RandomSpec::new(0, Dims::new(1, 1, 1)).min_prob)]
    min_prob: f64,
    #[arg(long, default_value_t = RandomSpec::new(0, Dims::new(1, 1, 1)).c_bar)]
    c_bar: f64,
    /// Generate from additive parts and include them in the file.
    #[arg(long)]
    arat: bool,
}

fn parse_player(s: &str) -> Result<Player, String> {
    match s {
        "1" => Ok(Player::One),
        "2" => Ok(Player::Two),
        _ => Err(format!("player must be 1 or 2, got {s}")),
    }
}

enum Failure {
    /// Assumption violated or iteration did not converge.
    Verdict(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verdict(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verdict(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<rsgame::Error> for Failure {
    fn from(e: rsgame::Error) -> Self {
        match e {
            e if e.assumption().is_some() => Failure::Verdict(e.to_string()),
            e @ rsgame::Error::NonConvergence { .. } => Failure::Verdict(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn format_failure(path: &Path, e: FormatError) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn load_instance(path: &Path, theta: Option<f64>) -> Result<GameInstance, Failure> {
    let g = parse_instance(&read(path)?).map_err(|e| format_failure(path, e))?;
    match theta {
        Some(t) => Ok(g.with_theta(t)?),
        None => Ok(g),
    }
}

fn load_strategy(
    path: &Path,
    g: &GameInstance,
    owner: Player,
) -> Result<StationaryStrategy, Failure> {
    let spec = if path.as_os_str() == "uniform" {
        StrategySpec::Uniform
    } else {
        StrategySpec::parse(&read(path)?).map_err(|e| format_failure(path, e))?
    };
    spec.resolve(g, owner)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    instance_digest: String,
    flags: &'a Cli,
    wall_clock_seconds: f64,
    result: R,
}

struct Run<'a> {
    cli: &'a Cli,
    started: Instant,
}

impl Run<'_> {
    fn emit<R: Serialize>(
        &self,
        command: &'static str,
        g: &GameInstance,
        result: R,
    ) -> Result<(), Failure> {
        let report = Report {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            instance_digest: instance_digest(g),
            flags: self.cli,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            result,
        };
        self.write(&to_json(&report))
    }

    fn write(&self, text: &str) -> Result<(), Failure> {
        match &self.cli.output {
            Some(p) => fs::write(p, format!("{text}\n"))
                .map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
            None => {
                let mut out = std::io::stdout().lock();
                match writeln!(out, "{text}") {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                        Err(Failure::Io(format!("stdout: {e}")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }
}

#[derive(Serialize)]
struct PlayerEval {
    player: Player,
    /// Log Perron root of the twisted matrix.
    ergodic_cost: f64,
    perron_iterations: usize,
    /// Relative value iteration with both strategies frozen.
    fixed_pair_rho: f64,
    finite_horizon_growth: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<rsgame::sim::McEstimate>,
}

#[derive(Serialize)]
struct NashReport {
    #[serde(flatten)]
    outcome: rsgame::nash::DynamicsOutcome,
    verified: bool,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    }
    let r = Run {
        cli,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Validate(a) => {
            let g = load_instance(&a.instance, cli.theta)?;
            let d = validate_with(
                &g,
                &ValidationOptions {
                    min_prob: a.min_prob,
                },
            )?;
            r.emit("validate", &g, &d)?;
            let failed: Vec<String> = d
                .failures()
                .map(|c| format!("{}: {}", c.label, c.detail))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verdict(failed.join("\n")))
            }
        }
        Command::Solve(a) => {
            let g = load_instance(&a.instance, cli.theta)?;
            let opp = load_strategy(&a.opponent, &g, a.player.opponent())?;
            let s = solve_optimality(&g, a.player, &opp, &a.solver.options())?;
            r.emit("solve", &g, &s)
        }
        Command::Eval(a) => {
            let g = load_instance(&a.instance, cli.theta)?;
            let phi = load_strategy(&a.phi, &g, Player::One)?;
            let psi = load_strategy(&a.psi, &g, Player::Two)?;
            let mut out = Vec::new();
            for player in [Player::One, Player::Two] {
                let perron = perron_value(&twisted_matrix(&g, player, &phi, &psi)?, PERRON_TOL)?;
                let fixed = solve_fixed_pair(&g, player, &phi, &psi, &a.solver.options())?;
                let monte_carlo = if a.mc {
                    Some(mc_cost_estimate(
                        &g, player, &phi, &psi, a.start, a.horizon, a.paths, a.seed,
                    )?)
                } else {
                    None
                };
                out.push(PlayerEval {
                    player,
                    ergodic_cost: perron.log_radius,
                    perron_iterations: perron.iterations,
                    fixed_pair_rho: fixed.rho,
                    finite_horizon_growth: finite_horizon_growth_all(
                        &g, player, &phi, &psi, a.horizon,
                    )?,
                    monte_carlo,
                });
            }
            r.emit("eval", &g, &out)
        }
        Command::Nash(a) => {
            let g = load_instance(&a.instance, cli.theta)?;
            let n = g.n_states();
            let phi = match &a.phi {
                Some(p) => load_strategy(p, &g, Player::One)?,
                None => StationaryStrategy::uniform(n, g.n_actions(Player::One)),
            };
            let psi = match &a.psi {
                Some(p) => load_strategy(p, &g, Player::Two)?,
                None => StationaryStrategy::uniform(n, g.n_actions(Player::Two)),
            };
            let opts = DynamicsOptions {
                beta: a.beta,
                smoothing: !a.no_smoothing,
                tau0: a.tau0,
                tau_min: a.tau_min,
                anneal_rounds: a.anneal_rounds,
                max_rounds: a.rounds,
                eps_target: a.eps,
                polish: !a.no_polish,
                solve: a.solver.options(),
            };
            let outcome = best_response_dynamics(&g, (phi, psi), &opts)?;
            let verified = verify_certificate(&g, &outcome.certificate, a.eps);
            let ok = outcome.certificate.converged && verified;
            let gap = outcome.certificate.max_gap();
            r.emit("nash", &g, NashReport { outcome, verified })?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Verdict(format!(
                    "no certified {}-Nash pair within {} rounds (best max gap {gap:e})",
                    a.eps, a.rounds
                )))
            }
        }
        Command::Brute(a) => {
            let g = load_instance(&a.instance, cli.theta)?;
            let report = brute_force_nash(&g, a.grid, a.eps, &a.solver.options())?;
            let empty = report.certificates.is_empty();
            r.emit("brute", &g, &report)?;
            if empty {
                Err(Failure::Verdict(format!(
                    "no pair on grid {} has max gap <= {}",
                    a.grid, a.eps
                )))
            } else {
                Ok(())
            }
        }
        Command::Gen(a) => {
            let spec = RandomSpec {
                seed: a.seed,
                dims: Dims::new(a.states, a.actions_a, a.actions_b),
                min_prob: a.min_prob,
                arat: a.arat,
                c_bar: a.c_bar,
                theta: cli.theta.unwrap_or(1.0),
            };
            let g = random_instance(&spec)?;
            r.write(&instance_to_json(&g))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
