//! Command-line front end for the `stakemech` library.
//!
//! Five subcommands cover the library's surfaces: `thresholds` prints the
//! analytic share thresholds and fork break-even points, `solve` builds a
//! game and reports its pure-strategy equilibria, `simulate` runs a Monte
//! Carlo share sweep, `patient` tabulates the patient-coalition value
//! recursion against its coarse aggregate, and `fork-diff` inspects a fork
//! fixture or resolves it with chosen champions.
//!
//! Every command is a pure function of its flags: identical invocations
//! produce byte-identical output. Exit codes: `0` success, `2` flag or
//! domain errors (bad values, unsupported configurations), `1` internal
//! failures (I/O, solver invariant violations).

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

use stakemech::agents::{AgentPolicy, AttackVariant, AttackerPolicy};
use stakemech::analytics::{
    blanket_deterrence, coarse_recursion_value, threshold_row, PatientDp, ThresholdRow,
};
use stakemech::exec;
use stakemech::fork::{resolve_fork_alloc, resolve_fork_tx, AllocOutcome};
use stakemech::ledger::{diff_forks, fixtures, Fork, ForkSide, TokenAllocation};
use stakemech::sim::{
    self, report, run_sweep, PolicyMode, Scenario, SweepConfig, SweepResult,
};
use stakemech::solver::{
    build_bft_game, build_fork_alloc_game, build_fork_tx_game, solve, BftGameSpec, BuildError,
    SolveError, SolveOptions,
};
use stakemech::sr::{FineSchedule, RoundParams, SeatVisibility};

/// Coalition id used for every attacker the CLI constructs.
const CLI_COALITION: u32 = 0;

// --- Errors and output -------------------------------------------------------

/// A failed invocation, split by whose fault it is.
#[derive(Debug, Error)]
pub enum CliError {
    /// The flags describe something invalid or unsupported. Exit code 2.
    #[error("{0}")]
    Domain(String),
    /// The toolkit itself failed (I/O, violated invariants). Exit code 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

/// What a successful invocation produced.
#[derive(Debug)]
pub struct Output {
    /// Complete stdout text, trailing newline included.
    pub stdout: String,
    /// Files written (CSV plus manifest), for callers that track artifacts.
    pub files: Vec<PathBuf>,
}

impl Output {
    fn text(stdout: String) -> Output {
        Output {
            stdout,
            files: Vec::new(),
        }
    }
}

// --- Flag model ----------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "stakemech",
    version,
    about = "Deterministic laboratory for fine-backed consensus mechanisms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic share thresholds, quorum comparisons, and fork break-even shares.
    Thresholds(ThresholdsArgs),
    /// Build a commit-round or fork game and report its equilibria.
    Solve(SolveArgs),
    /// Monte Carlo share sweep with an empirical profitability threshold.
    Simulate(SimulateArgs),
    /// Patient-coalition dispute values: exact recursion vs coarse aggregate.
    Patient(PatientArgs),
    /// Show a fork fixture's content diff, or resolve it with chosen champions.
    ForkDiff(ForkDiffArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned columns for reading.
    Table,
    /// Comma-separated values for machines.
    Csv,
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    /// Block reward R; comma-separate several values to get several rows.
    #[arg(long = "R", value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    pub reward: Vec<f64>,
    /// Fine F; comma-separate several values.
    #[arg(long = "F", value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    pub fine: Vec<f64>,
    /// Distortion value theta; comma-separate several values.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [2.0])]
    pub theta: Vec<f64>,
    /// Chain-scale multiplier k (fork analysis); comma-separate several values.
    #[arg(long = "k", value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    pub scale: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveScenario {
    /// Commit-round game over a node population.
    Bft,
    /// Per-transaction fork dispute game on a fixture.
    ForkTx,
    /// Whole-allocation naming game on a fixture.
    ForkAlloc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VisibilityArg {
    Informed,
    Blind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureArg {
    /// A spend is present on one branch and deleted on the other.
    DoubleSpend,
    /// The fork inserts an earlier conflicting spend instead.
    PreSpend,
    /// Same content, different timestamps: nothing to dispute.
    Accidental,
}

impl FixtureArg {
    fn build(self) -> Fork {
        match self {
            FixtureArg::DoubleSpend => fixtures::double_spend_fork(),
            FixtureArg::PreSpend => fixtures::pre_spend_fork(),
            FixtureArg::Accidental => fixtures::accidental_fork(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    A,
    B,
}

impl From<SideArg> for ForkSide {
    fn from(s: SideArg) -> ForkSide {
        match s {
            SideArg::A => ForkSide::A,
            SideArg::B => ForkSide::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversaryArg {
    /// Branch A's champion is the attacker.
    A,
    /// Branch B's champion is the attacker.
    B,
    /// Both champions are honest.
    None,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub scenario: SolveScenario,

    /// Population size (bft).
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Node ids controlled by the coalition (bft), e.g. `--attackers 0,2`.
    #[arg(long, value_delimiter = ',')]
    pub attackers: Vec<usize>,
    #[arg(long, value_enum, default_value_t = VisibilityArg::Informed)]
    pub visibility: VisibilityArg,
    /// Fix the round-0 pair as `proposer,confirmer` instead of a chance draw (bft).
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(usize, usize)>,

    /// Block reward R.
    #[arg(long = "R", default_value_t = 1.0)]
    pub reward: f64,
    /// Fine F (constant schedule).
    #[arg(long = "F", default_value_t = 1.0)]
    pub fine: f64,
    /// Coalition distortion value theta.
    #[arg(long, default_value_t = 2.0)]
    pub theta: f64,
    /// Honest utility H for a truthful outcome (needs H > D > 0).
    #[arg(long = "H", default_value_t = 2.0)]
    pub honest_utility: f64,
    /// Honest disutility D for a distorted outcome.
    #[arg(long = "D", default_value_t = 1.0)]
    pub honest_disutility: f64,
    /// Coalition's strict-but-tiny aversion to burned value, breaking
    /// ties toward non-burn outcomes. Must stay positive.
    #[arg(long, default_value_t = 1e-6)]
    pub burn_aversion: f64,

    /// Fork fixture to build the dispute game over (fork-tx / fork-alloc).
    #[arg(long, value_enum, default_value_t = FixtureArg::PreSpend)]
    pub fixture: FixtureArg,
    /// Which branch is the honestly-extended one (fork games).
    #[arg(long, value_enum, default_value_t = SideArg::A)]
    pub true_side: SideArg,
    /// Which champion plays the attacker (fork games).
    #[arg(long, value_enum, default_value_t = AdversaryArg::B)]
    pub adversary: AdversaryArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyModeArg {
    Forced,
    Adaptive,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One of: bft_informed, bft_blind, bft_patient, fork_tx, fork_alloc.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    /// Population size; defaults to the scenario's natural size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "R", default_value_t = 1.0)]
    pub reward: f64,
    #[arg(long = "F", default_value_t = 1.0)]
    pub fine: f64,
    #[arg(long, default_value_t = 2.0)]
    pub theta: f64,
    /// Chain-scale multiplier k (fork scenarios).
    #[arg(long = "k", default_value_t = 1.0)]
    pub scale: f64,
    /// Share grid as `lo:hi:step`, inclusive.
    #[arg(long = "s-grid", default_value = "0:1:0.025")]
    pub s_grid: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u32,
    /// Master seed; every point derives its own stream from it.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyModeArg::Forced)]
    pub policy_mode: PolicyModeArg,
    /// Round cap for dispute processes (patient scenario).
    #[arg(long, default_value_t = 64)]
    pub max_rounds: u32,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Also write the sweep as CSV here, with a manifest beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker-thread cap for the sweep (default: the rayon default).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PatientArgs {
    /// Maximum coalition seats a in the tabulated states.
    #[arg(long, default_value_t = 4)]
    pub attackers: u32,
    /// Maximum honest seats h in the tabulated states.
    #[arg(long, default_value_t = 4)]
    pub honest: u32,
    #[arg(long = "R", default_value_t = 1.0)]
    pub reward: f64,
    #[arg(long = "F", default_value_t = 2.0)]
    pub fine: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForkMode {
    /// List common and disputed content.
    Diff,
    /// Resolve transaction by transaction and print the dispute trace.
    Tx,
    /// Resolve by whole-allocation naming and print the dispute trace.
    Alloc,
}

#[derive(Debug, Args)]
pub struct ForkDiffArgs {
    #[arg(long, value_enum)]
    pub fixture: FixtureArg,
    #[arg(long, value_enum, default_value_t = ForkMode::Diff)]
    pub mode: ForkMode,
    /// Fine F posted by each side on escalation.
    #[arg(long = "F", default_value_t = 1.0)]
    pub fine: f64,
    /// Which branch is the honestly-extended one (resolution modes).
    #[arg(long, value_enum, default_value_t = SideArg::A)]
    pub true_side: SideArg,
    /// Which champion plays the attacker (resolution modes).
    #[arg(long, value_enum, default_value_t = AdversaryArg::None)]
    pub adversary: AdversaryArg,
    /// Coalition distortion value theta for an attacking champion.
    #[arg(long, default_value_t = 2.0)]
    pub theta: f64,
    /// Seed for the alloc mode's asserter draw.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

// --- Flag parsing helpers ------------------------------------------------------

fn parse_pair(text: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err("expected `proposer,confirmer`".into());
    }
    let p = parts[0].trim().parse().map_err(|e| format!("proposer: {e}"))?;
    let c = parts[1].trim().parse().map_err(|e| format!("confirmer: {e}"))?;
    Ok((p, c))
}

fn parse_scenario(text: &str) -> Result<Scenario, String> {
    text.parse()
}

/// Parses `lo:hi:step` into an inclusive grid.
fn parse_s_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Domain(format!("--s-grid {text:?}: {msg}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected `lo:hi:step`".into()));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(e.to_string()))?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(bad("bounds and step must be finite".into()));
    }
    if step <= 0.0 {
        return Err(bad("step must be positive".into()));
    }
    if hi < lo {
        return Err(bad("upper bound precedes lower bound".into()));
    }
    Ok(sim::grid(lo, hi, step))
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Domain(msg.into()))
    }
}

// --- Dispatch ------------------------------------------------------------------

/// Runs one parsed invocation. The entry point for both `main` and tests.
pub fn dispatch(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Thresholds(args) => run_thresholds(&args),
        Command::Solve(args) => run_solve(&args).map(|(_, out)| out),
        Command::Simulate(args) => run_simulate(&args).map(|(_, out)| out),
        Command::Patient(args) => run_patient(&args),
        Command::ForkDiff(args) => run_fork_diff(&args),
    }
}

/// Parses `argv`-style arguments and dispatches them; usage errors come back
/// as [`CliError::Domain`] so tests can drive the full pipeline in-process.
pub fn run_from<I, T>(args: I) -> Result<Output, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Domain(e.to_string()))?;
    dispatch(cli)
}

// --- thresholds ------------------------------------------------------------------

const THRESHOLDS_HEADER: [&str; 11] = [
    "R",
    "F",
    "theta",
    "k",
    "informed_threshold",
    "blind_threshold",
    "beats_bft_informed",
    "beats_bft_blind",
    "fork_s_low",
    "fork_s_high",
    "precondition",
];

fn threshold_cells(row: &ThresholdRow) -> Vec<String> {
    vec![
        fmt_exact(row.r),
        fmt_exact(row.f),
        fmt_exact(row.theta),
        fmt_exact(row.k),
        fmt_exact(row.thr_informed),
        fmt_exact(row.thr_blind),
        row.beats_bft_informed.to_string(),
        row.beats_bft_blind.to_string(),
        row.fork_s_low.map(fmt_exact).unwrap_or_default(),
        row.fork_s_high.map(fmt_exact).unwrap_or_default(),
        row.precondition.to_string(),
    ]
}

fn run_thresholds(args: &ThresholdsArgs) -> Result<Output, CliError> {
    for (name, values, positive) in [
        ("--R", &args.reward, true),
        ("--F", &args.fine, false),
        ("--theta", &args.theta, false),
        ("--k", &args.scale, true),
    ] {
        for &v in values {
            require(v.is_finite(), format!("{name} must be finite, got {v}"))?;
            if positive {
                require(v > 0.0, format!("{name} must be positive, got {v}"))?;
            } else {
                require(v >= 0.0, format!("{name} must be non-negative, got {v}"))?;
            }
        }
    }

    let mut rows = Vec::new();
    for &r in &args.reward {
        for &f in &args.fine {
            for &theta in &args.theta {
                for &k in &args.scale {
                    rows.push(threshold_cells(&threshold_row(r, f, theta, k)));
                }
            }
        }
    }
    let text = match args.format {
        Format::Csv => render_csv(&THRESHOLDS_HEADER, &rows),
        Format::Table => render_table(&THRESHOLDS_HEADER, &rows),
    };
    Ok(Output::text(text))
}

// --- solve -----------------------------------------------------------------------

/// Result of `solve`: the report is returned alongside the rendered output so
/// in-process callers (the acceptance suite) can check fields structurally.
pub struct Solved {
    pub tree: stakemech::solver::GameTree,
    pub report: stakemech::solver::SolveReport,
}

fn fork_champions(
    adversary: AdversaryArg,
    theta: f64,
    burn_aversion: f64,
) -> (AgentPolicy, AgentPolicy) {
    let honest = || AgentPolicy::honest(sim::scenarios::HONEST_H, sim::scenarios::HONEST_D);
    let attacker = || {
        AgentPolicy::Attacker(AttackerPolicy {
            coalition: CLI_COALITION,
            theta,
            burn_aversion,
            variant: AttackVariant::OneShotInformed,
        })
    };
    match adversary {
        AdversaryArg::A => (attacker(), honest()),
        AdversaryArg::B => (honest(), attacker()),
        AdversaryArg::None => (honest(), honest()),
    }
}

/// Builds and solves the game described by `args`. Public because the
/// acceptance suite inspects the structured report, not the rendering.
pub fn run_solve(args: &SolveArgs) -> Result<(Option<Solved>, Output), CliError> {
    for (name, v) in [
        ("--R", args.reward),
        ("--F", args.fine),
        ("--theta", args.theta),
        ("--burn-aversion", args.burn_aversion),
    ] {
        require(v.is_finite() && v >= 0.0, format!("{name} must be finite and non-negative"))?;
    }
    require(args.reward > 0.0, "--R must be positive")?;

    let tree = match args.scenario {
        SolveScenario::Bft => {
            require(
                args.honest_utility > args.honest_disutility && args.honest_disutility > 0.0,
                "honest preferences need --H > --D > 0",
            )?;
            for &id in &args.attackers {
                require(
                    id < args.n,
                    format!("--attackers names node {id}, but --n is {}", args.n),
                )?;
            }
            if let Some((p, c)) = args.pair {
                require(p < args.n && c < args.n && p != c, "--pair needs two distinct node ids below --n")?;
            }
            let policies: Vec<AgentPolicy> = (0..args.n)
                .map(|i| {
                    if args.attackers.contains(&i) {
                        AgentPolicy::Attacker(AttackerPolicy {
                            coalition: CLI_COALITION,
                            theta: args.theta,
                            burn_aversion: args.burn_aversion,
                            variant: AttackVariant::OneShotInformed,
                        })
                    } else {
                        AgentPolicy::honest(args.honest_utility, args.honest_disutility)
                    }
                })
                .collect();
            let spec = BftGameSpec {
                policies: &policies,
                params: RoundParams {
                    reward: args.reward,
                    fine_schedule: FineSchedule::Constant(args.fine),
                },
                visibility: match args.visibility {
                    VisibilityArg::Informed => SeatVisibility::Informed,
                    VisibilityArg::Blind => SeatVisibility::Blind,
                },
                fixed_pair: args.pair,
            };
            build_bft_game(&spec).map_err(build_error)?
        }
        SolveScenario::ForkTx | SolveScenario::ForkAlloc => {
            let fork = args.fixture.build();
            let (a, b) = fork_champions(args.adversary, args.theta, args.burn_aversion);
            let true_side = args.true_side.into();
            match args.scenario {
                SolveScenario::ForkTx => build_fork_tx_game(&fork, args.fine, true_side, &a, &b),
                _ => build_fork_alloc_game(&fork, args.fine, true_side, &a, &b),
            }
            .map_err(build_error)?
        }
    };

    let mut text = format!(
        "game: {} nodes, {} information sets, {} blocks\n",
        tree.nodes.len(),
        tree.info_sets.len(),
        tree.blocks.len()
    );
    match solve(&tree, &SolveOptions::default()) {
        Ok(report) => {
            text.push_str(&report.render(&tree));
            if !report.outcome_unique {
                text.push_str("per-equilibrium outcomes:\n");
                for (i, strat) in report.equilibria.iter().enumerate() {
                    let (_, dist) = tree.evaluate(tree.root, strat);
                    let parts: Vec<String> = dist
                        .iter()
                        .map(|((label, round, _), p)| format!("{label}@r{round}={p:.4}"))
                        .collect();
                    let _ = writeln!(text, "  [{i}] {}", parts.join(" "));
                }
            }
            Ok((Some(Solved { tree, report }), Output::text(text)))
        }
        Err(SolveError::NoPureEquilibrium) => {
            text.push_str("no pure-strategy equilibrium under the stage structure\n");
            Ok((None, Output::text(text)))
        }
        Err(e @ SolveError::TooManyCandidates { .. }) => Err(CliError::Domain(e.to_string())),
        Err(e @ SolveError::Unsupported(_)) => Err(CliError::Internal(e.to_string())),
    }
}

fn build_error(e: BuildError) -> CliError {
    match e {
        BuildError::PopulationTooLarge { .. } | BuildError::Unsupported(_) => {
            CliError::Domain(e.to_string())
        }
        BuildError::Internal(_) => CliError::Internal(e.to_string()),
    }
}

// --- simulate ---------------------------------------------------------------------

/// Builds the [`SweepConfig`] described by `args` (exposed for tests).
pub fn sweep_config(args: &SimulateArgs) -> Result<SweepConfig, CliError> {
    let mut config = SweepConfig::new(args.scenario);
    if let Some(n) = args.n {
        config.n = n;
    }
    config.reward = args.reward;
    config.fine = args.fine;
    config.theta = args.theta;
    config.scale = args.scale;
    config.s_grid = parse_s_grid(&args.s_grid)?;
    config.trials = args.trials;
    config.master_seed = args.seed;
    config.policy_mode = match args.policy_mode {
        PolicyModeArg::Forced => PolicyMode::Forced,
        PolicyModeArg::Adaptive => PolicyMode::Adaptive,
    };
    config.max_rounds = args.max_rounds;
    config.validate().map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(config)
}

fn sweep_table(result: &SweepResult) -> String {
    let cfg = &result.config;
    let mut out = format!(
        "scenario={} n={} R={} F={} theta={} k={} trials={} seed={} mode={}\n",
        cfg.scenario,
        cfg.n,
        fmt_exact(cfg.reward),
        fmt_exact(cfg.fine),
        fmt_exact(cfg.theta),
        fmt_exact(cfg.scale),
        cfg.trials,
        cfg.master_seed,
        match cfg.policy_mode {
            PolicyMode::Forced => "forced",
            PolicyMode::Adaptive => "adaptive",
        },
    );
    let header = [
        "s",
        "coalition",
        "attack_rate",
        "success_rate",
        "mean_payoff",
        "stderr",
        "mean_rounds",
        "degenerate",
    ];
    let rows: Vec<Vec<String>> = result
        .points
        .iter()
        .map(|p| {
            vec![
                format!("{:.4}", p.s),
                p.coalition.to_string(),
                format!("{:.4}", p.attack_rate),
                format!("{:.4}", p.success_rate),
                format!("{:+.6}", p.mean_payoff),
                format!("{:.6}", p.stderr_payoff),
                format!("{:.3}", p.mean_rounds),
                if p.degenerate { "yes".into() } else { String::new() },
            ]
        })
        .collect();
    out.push_str(&render_table(&header, &rows));
    match result.threshold {
        Some(t) => {
            let _ = writeln!(out, "empirical threshold: {t}");
        }
        None => out.push_str("empirical threshold: none located\n"),
    }
    out
}

/// Runs the sweep described by `args` (exposed for tests and acceptance).
pub fn run_simulate(args: &SimulateArgs) -> Result<(SweepResult, Output), CliError> {
    let config = sweep_config(args)?;
    let result = exec::with_thread_limit(args.jobs, || run_sweep(&config))
        .map_err(|e| CliError::Domain(e.to_string()))?;

    let mut stdout = match args.format {
        Format::Csv => report::sweep_csv(&result),
        Format::Table => sweep_table(&result),
    };
    let mut files = Vec::new();
    if let Some(path) = &args.out {
        let csv = report::sweep_csv(&result);
        let manifest = report::sweep_manifest(&result);
        report::write_csv_with_manifest(path, &csv, &manifest)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        let manifest_path = report::manifest_path(path);
        let _ = writeln!(stdout, "wrote: {}", path.display());
        let _ = writeln!(stdout, "wrote: {}", manifest_path.display());
        files.push(path.clone());
        files.push(manifest_path);
    }
    Ok((result, Output { stdout, files }))
}

// --- patient ---------------------------------------------------------------------

fn run_patient(args: &PatientArgs) -> Result<Output, CliError> {
    require(
        args.attackers <= 200 && args.honest <= 200,
        "state space capped at 200 seats per side",
    )?;
    for (name, v) in [("--R", args.reward), ("--F", args.fine), ("--theta", args.theta)] {
        require(v.is_finite() && v >= 0.0, format!("{name} must be finite and non-negative"))?;
    }
    require(args.reward > 0.0, "--R must be positive")?;

    let dp = PatientDp::solve(args.attackers, args.honest, args.reward, args.fine, args.theta);
    let overrides = BTreeMap::new();
    let header = [
        "attackers",
        "honest",
        "value",
        "coarse_value",
        "abs_difference",
        "proposer_continues",
        "confirmer_continues",
    ];
    let mut rows = Vec::new();
    for a in 0..=args.attackers {
        for h in 0..=args.honest {
            let exact = dp.value(a, h);
            // The aggregate recursion divides by the population size, so the
            // empty state has no coarse value.
            let coarse = coarse_recursion_value(a, h, args.reward, args.fine, args.theta, &overrides).ok();
            let seated = a >= 1 && h >= 1;
            rows.push(vec![
                a.to_string(),
                h.to_string(),
                fmt_exact(exact),
                coarse.map(fmt_exact).unwrap_or_default(),
                coarse.map(|c| fmt_exact((exact - c).abs())).unwrap_or_default(),
                if seated { dp.proposer_continues(a, h).to_string() } else { String::new() },
                if seated { dp.confirmer_continues(a, h).to_string() } else { String::new() },
            ]);
        }
    }
    let mut text = match args.format {
        Format::Csv => render_csv(&header, &rows),
        Format::Table => render_table(&header, &rows),
    };
    if args.format == Format::Table {
        let _ = writeln!(
            text,
            "blanket deterrence (F > 1.5*theta): {}",
            blanket_deterrence(args.theta, args.fine)
        );
    }
    Ok(Output::text(text))
}

// --- fork-diff -------------------------------------------------------------------

fn balances_line(state: &TokenAllocation) -> String {
    let parts: Vec<String> = state
        .balances
        .iter()
        .map(|(account, balance)| format!("{account}={balance}"))
        .collect();
    parts.join(" ")
}

fn run_fork_diff(args: &ForkDiffArgs) -> Result<Output, CliError> {
    require(
        args.fine.is_finite() && args.fine >= 0.0,
        "--F must be finite and non-negative",
    )?;
    require(
        args.theta.is_finite() && args.theta >= 0.0,
        "--theta must be finite and non-negative",
    )?;
    let fork = args.fixture.build();
    let (mut a, mut b) = fork_champions(args.adversary, args.theta, 0.0);

    match args.mode {
        ForkMode::Diff => {
            let diff = diff_forks(&fork).map_err(|e| CliError::Internal(e.to_string()))?;
            let header = ["item", "status", "timestamp", "sender", "receiver", "amount"];
            let mut rows = Vec::new();
            for c in &diff.common {
                rows.push(vec![
                    c.tx.id.clone(),
                    "common".into(),
                    c.confirmed_timestamp.to_string(),
                    c.tx.sender.clone(),
                    c.tx.receiver.clone(),
                    c.tx.amount.to_string(),
                ]);
            }
            for (side, tx) in diff.disputed_in_order() {
                rows.push(vec![
                    tx.id.clone(),
                    format!("only_{}", side.to_string().to_lowercase()),
                    tx.timestamp.to_string(),
                    tx.sender.clone(),
                    tx.receiver.clone(),
                    tx.amount.to_string(),
                ]);
            }
            let text = match args.format {
                Format::Csv => render_csv(&header, &rows),
                Format::Table => render_table(&header, &rows),
            };
            Ok(Output::text(text))
        }
        ForkMode::Tx => {
            let res = resolve_fork_tx(&fork, args.fine, &mut a, &mut b)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let trace = report::fork_trace_csv(&res.trace);
            let text = match args.format {
                Format::Csv => trace,
                Format::Table => {
                    let mut out = trace;
                    let _ = writeln!(out, "retained: {}", res.retained.join(" "));
                    let _ = writeln!(out, "discarded: {}", res.discarded.join(" "));
                    let _ = writeln!(out, "voided: {}", res.voided.join(" "));
                    let _ = writeln!(
                        out,
                        "fines: collected={} refunded={} burned={}",
                        fmt_exact(res.fines_collected),
                        fmt_exact(res.fines_refunded),
                        fmt_exact(res.fines_burned)
                    );
                    let _ = writeln!(
                        out,
                        "payoffs: A={} B={}",
                        fmt_exact(res.payoffs[&ForkSide::A]),
                        fmt_exact(res.payoffs[&ForkSide::B])
                    );
                    let _ = writeln!(out, "final state: {}", balances_line(&res.final_state));
                    out
                }
            };
            Ok(Output::text(text))
        }
        ForkMode::Alloc => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(args.seed);
            let res = resolve_fork_alloc(&fork, args.fine, args.true_side.into(), &mut a, &mut b, &mut rng)
                .map_err(domain_or_internal)?;
            let trace = report::fork_trace_csv(&res.trace);
            let text = match args.format {
                Format::Csv => trace,
                Format::Table => {
                    let mut out = trace;
                    let _ = writeln!(
                        out,
                        "named: A->{} B->{}",
                        res.named[&ForkSide::A],
                        res.named[&ForkSide::B]
                    );
                    let outcome = match res.outcome {
                        AllocOutcome::Confirmed(side) => format!("confirmed_{side}").to_lowercase(),
                        AllocOutcome::Burned { tokens_burned } => {
                            format!("burned ({tokens_burned} tokens)")
                        }
                    };
                    let _ = writeln!(out, "outcome: {outcome}");
                    let _ = writeln!(
                        out,
                        "payoffs: A={} B={}",
                        fmt_exact(res.payoffs[&ForkSide::A]),
                        fmt_exact(res.payoffs[&ForkSide::B])
                    );
                    let _ = writeln!(out, "final state: {}", balances_line(&res.final_state));
                    out
                }
            };
            Ok(Output::text(text))
        }
    }
}

/// Unequal branch lengths are a property of the requested fixture/mode combo
/// (a user choice); anything else from the ledger is a bug here.
fn domain_or_internal(e: stakemech::ledger::LedgerError) -> CliError {
    match e {
        stakemech::ledger::LedgerError::LengthToleranceExceeded { .. } => {
            CliError::Domain(format!("allocation naming needs equal branch lengths: {e}"))
        }
        other => CliError::Internal(other.to_string()),
    }
}

// --- Rendering -------------------------------------------------------------------

/// Shortest exact decimal for `x` (`Display` round-trips f64 exactly).
fn fmt_exact(x: f64) -> String {
    format!("{x}")
}

fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let separators: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let mut out = String::new();
    let mut emit = |cells: Vec<&str>| {
        let line: Vec<String> = cells
            .iter()
            .zip(widths.iter().copied())
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    emit(header.to_vec());
    emit(separators.iter().map(|s| s.as_str()).collect());
    for row in rows {
        emit(row.iter().map(|s| s.as_str()).collect());
    }
    out
}
