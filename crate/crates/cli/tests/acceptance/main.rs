//! End-to-end acceptance suite. Runs eight independent criteria covering
//! the commit-round equilibria, the solver-vs-enumeration cross-check, the
//! Monte Carlo thresholds, the closed-form comparisons, the fork break-even
//! analysis, the fork fixtures under both resolution mechanisms, the
//! patient-coalition recursion, and CLI determinism.
//!
//! One verdict line is printed per criterion; the process exits nonzero if
//! any of them fails. Criteria with documented runtime budgets enforce them
//! as part of the verdict.

mod oracle;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use stakemech::agents::{AgentPolicy, AttackVariant, AttackerPolicy};
use stakemech::analytics::{
    beats_bft_blind, beats_bft_informed, fork_attack_profit, fork_profitability,
    profitable_share_interval, PatientDp,
};
use stakemech::fork::{resolve_fork_alloc, resolve_fork_tx, AllocOutcome};
use stakemech::ledger::{final_allocations, fixtures, Fork, ForkSide};
use stakemech::solver::{
    build_bft_game, build_fork_alloc_game, build_fork_tx_game, solve, BftGameSpec, BuildError,
    GameTree, SolveOptions,
};
use stakemech::sr::{FineSchedule, RoundParams, SeatVisibility};
use stakemech_cli::{run_simulate, run_solve, Cli, Command, SimulateArgs, SolveArgs};

type Criterion = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("one-shot commit equilibria", criterion_1),
        ("solver vs exhaustive enumeration", criterion_2),
        ("Monte Carlo share thresholds", criterion_3),
        ("quorum comparison booleans", criterion_4),
        ("fork break-even shares", criterion_5),
        ("fork fixtures under both mechanisms", criterion_6),
        ("patient-coalition recursion", criterion_7),
        ("CLI determinism", criterion_8),
    ];
    let mut all_ok = true;
    for (i, (what, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let dt = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(Ok(detail)) => println!("criterion {n}: PASS ({dt:.1}s) — {what}: {detail}"),
            Ok(Err(why)) => {
                all_ok = false;
                println!("criterion {n}: FAIL ({dt:.1}s) — {what}: {why}");
            }
            Err(payload) => {
                all_ok = false;
                let why = payload
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| payload.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic with non-string payload".into());
                println!("criterion {n}: FAIL ({dt:.1}s) — {what}: panicked: {why}");
            }
        }
    }
    if !all_ok {
        std::process::exit(1);
    }
}

// --- argv helpers -------------------------------------------------------------

fn parse_cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("stakemech").chain(args.iter().copied()))
        .expect("suite argv must parse")
}

fn solve_args(args: &[&str]) -> SolveArgs {
    match parse_cli(args).command {
        Command::Solve(a) => a,
        _ => unreachable!("solve argv"),
    }
}

fn simulate_args(args: &[&str]) -> SimulateArgs {
    match parse_cli(args).command {
        Command::Simulate(a) => a,
        _ => unreachable!("simulate argv"),
    }
}

// --- criterion 1: every small commit game ends in a unique truthful commit ------

/// For n in 2..=6, every single-attacker placement, and all 27 combinations
/// of (R, F, theta) over {0.5, 1, 2}, `solve --scenario bft` must report a
/// unique equilibrium outcome: a round-0 truthful commit with no fines.
/// Budget: 60 seconds for all 540 games.
fn criterion_1() -> Result<String, String> {
    let t0 = Instant::now();
    let grid = [0.5, 1.0, 2.0];
    let mut games = 0u32;
    for n in 2..=6usize {
        for attacker in 0..n {
            for r in grid {
                for f in grid {
                    for theta in grid {
                        let at = format!("n={n} attacker={attacker} R={r} F={f} theta={theta}");
                        let args = solve_args(&[
                            "solve",
                            "--scenario",
                            "bft",
                            "--n",
                            &n.to_string(),
                            "--attackers",
                            &attacker.to_string(),
                            "--R",
                            &r.to_string(),
                            "--F",
                            &f.to_string(),
                            "--theta",
                            &theta.to_string(),
                        ]);
                        let (solved, _) =
                            run_solve(&args).map_err(|e| format!("{at}: {e}"))?;
                        let report = solved.ok_or(format!("{at}: no equilibrium"))?.report;
                        if !report.outcome_unique {
                            return Err(format!("{at}: outcome not unique"));
                        }
                        if report.outcome.len() != 1 {
                            return Err(format!("{at}: mixed outcome {:?}", report.outcome));
                        }
                        let ((label, round, fines_q), p) =
                            report.outcome.iter().next().expect("one entry");
                        if label != "commit:truth" || *round != 0 || *fines_q != 0 {
                            return Err(format!(
                                "{at}: outcome {label} at round {round} with fines key {fines_q}"
                            ));
                        }
                        if (p - 1.0).abs() > 1e-9 {
                            return Err(format!("{at}: outcome probability {p}"));
                        }
                        games += 1;
                    }
                }
            }
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    if dt >= 60.0 {
        return Err(format!("{games} games solved but took {dt:.1}s (budget 60s)"));
    }
    Ok(format!(
        "{games}/540 games: unique fine-free truthful commit ({dt:.1}s, budget 60s)"
    ))
}

// --- criterion 2: backward induction agrees with exhaustive enumeration ---------

/// On every generated tree with at most 10^4 pure strategy profiles, the
/// solver's equilibrium outcome set must equal the one found by enumerating
/// all profiles against an independently written equilibrium predicate.
/// Budget: 5 minutes.
fn criterion_2() -> Result<String, String> {
    let t0 = Instant::now();
    let honest = AgentPolicy::honest(2.0, 1.0);
    let attacker = AgentPolicy::Attacker(AttackerPolicy {
        coalition: 0,
        theta: 2.0,
        burn_aversion: 1e-6,
        variant: AttackVariant::OneShotInformed,
    });
    let params = || RoundParams {
        reward: 1.0,
        fine_schedule: FineSchedule::Constant(1.0),
    };

    let mut games: Vec<(String, GameTree)> = Vec::new();
    for visibility in [SeatVisibility::Informed, SeatVisibility::Blind] {
        let seatings: [(&str, Vec<AgentPolicy>); 3] = [
            ("honest pair", vec![honest.clone(), honest.clone()]),
            ("attacker first", vec![attacker.clone(), honest.clone()]),
            ("attacker second", vec![honest.clone(), attacker.clone()]),
        ];
        for (tag, policies) in seatings {
            let spec = BftGameSpec {
                policies: &policies,
                params: params(),
                visibility,
                fixed_pair: None,
            };
            let tree = build_bft_game(&spec)
                .map_err(|e| format!("commit game ({visibility:?}, {tag}): {e}"))?;
            games.push((format!("commit {visibility:?} {tag}"), tree));
        }
    }
    let forks: [(&str, Fork); 2] = [
        ("double-spend", fixtures::double_spend_fork()),
        ("pre-spend", fixtures::pre_spend_fork()),
    ];
    for (name, fork) in &forks {
        let tx = build_fork_tx_game(fork, 1.0, ForkSide::A, &honest, &attacker)
            .map_err(|e| format!("{name} tx game: {e}"))?;
        games.push((format!("{name} tx"), tx));
        let tx_hh = build_fork_tx_game(fork, 1.0, ForkSide::A, &honest, &honest)
            .map_err(|e| format!("{name} tx honest-pair game: {e}"))?;
        games.push((format!("{name} tx honest pair"), tx_hh));
        let alloc = build_fork_alloc_game(fork, 1.0, ForkSide::A, &honest, &attacker)
            .map_err(|e| format!("{name} alloc game: {e}"))?;
        games.push((format!("{name} alloc"), alloc));
    }
    let accidental = fixtures::accidental_fork();
    let ac_tx = build_fork_tx_game(&accidental, 1.0, ForkSide::A, &honest, &honest)
        .map_err(|e| format!("accidental tx game: {e}"))?;
    games.push(("accidental tx".into(), ac_tx));

    let mut total_profiles: u128 = 0;
    for (name, tree) in &games {
        let profiles = oracle::profile_count(tree);
        if profiles > 10_000 {
            return Err(format!(
                "{name}: {profiles} profiles exceeds the 10^4 enumeration bound"
            ));
        }
        total_profiles += profiles;
        let report =
            solve(tree, &SolveOptions::default()).map_err(|e| format!("{name}: solver: {e}"))?;
        let mut orc = oracle::Oracle::new(tree);
        let solver_set: BTreeSet<String> = report
            .equilibria
            .iter()
            .map(|e| orc.outcome_string(e))
            .collect();
        let oracle_set = orc.equilibrium_outcome_set(1e-9);
        if oracle_set.is_empty() {
            return Err(format!("{name}: enumeration found no equilibria"));
        }
        if solver_set != oracle_set {
            return Err(format!(
                "{name}: solver outcomes {solver_set:?} != enumerated outcomes {oracle_set:?}"
            ));
        }
    }

    // Boundary: a blind game with a multi-node coalition has distributed
    // team information and must be refused, not silently mis-modeled.
    let both = vec![attacker.clone(), attacker.clone()];
    let spec = BftGameSpec {
        policies: &both,
        params: params(),
        visibility: SeatVisibility::Blind,
        fixed_pair: None,
    };
    match build_bft_game(&spec) {
        Err(BuildError::Unsupported(_)) => {}
        other => {
            return Err(format!(
                "blind multi-node coalition should be Unsupported, got {other:?}"
            ))
        }
    }

    let dt = t0.elapsed().as_secs_f64();
    if dt >= 300.0 {
        return Err(format!("agreement verified but took {dt:.1}s (budget 300s)"));
    }
    Ok(format!(
        "{} games, {total_profiles} profiles enumerated: outcome sets identical",
        games.len()
    ))
}

// --- criterion 3: Monte Carlo thresholds match the closed forms -----------------

/// Sweeping the coalition share at (R=1, F=1, theta=2) with n=1000, a 0.01
/// grid, and 10^5 trials per point must locate the profitability threshold
/// within 0.02 of 1/2 for informed seats and within 0.02 of sqrt(1/2) for
/// blind seats. Budget: 10 minutes per sweep.
fn criterion_3() -> Result<String, String> {
    let sweep = |scenario: &str| -> Result<(f64, f64), String> {
        let t0 = Instant::now();
        let args = simulate_args(&[
            "simulate",
            "--scenario",
            scenario,
            "--n",
            "1000",
            "--R",
            "1",
            "--F",
            "1",
            "--theta",
            "2",
            "--s-grid",
            "0:1:0.01",
            "--trials",
            "100000",
        ]);
        let (result, _) = run_simulate(&args).map_err(|e| format!("{scenario}: {e}"))?;
        let threshold = result
            .threshold
            .ok_or(format!("{scenario}: no sign change found on the grid"))?;
        Ok((threshold, t0.elapsed().as_secs_f64()))
    };

    let (informed, dt_informed) = sweep("bft_informed")?;
    if (informed - 0.5).abs() > 0.02 {
        return Err(format!("informed threshold {informed} is not within 0.02 of 0.5"));
    }
    if dt_informed >= 600.0 {
        return Err(format!("informed sweep took {dt_informed:.0}s (budget 600s)"));
    }
    let target_blind = 0.5f64.sqrt();
    let (blind, dt_blind) = sweep("bft_blind")?;
    if (blind - target_blind).abs() > 0.02 {
        return Err(format!(
            "blind threshold {blind} is not within 0.02 of {target_blind:.4}"
        ));
    }
    if dt_blind >= 600.0 {
        return Err(format!("blind sweep took {dt_blind:.0}s (budget 600s)"));
    }
    Ok(format!(
        "informed {informed:.3} vs 0.500 ({dt_informed:.0}s), blind {blind:.3} vs {target_blind:.4} ({dt_blind:.0}s), both within 0.02"
    ))
}

// --- criterion 4: quorum comparisons equal their closed forms -------------------

/// Over the 20^3 grid (R, F, theta) = (i, j, k) * 0.25, the comparison
/// booleans must equal `R + F > theta/2` (informed) and `R + F > theta/8`
/// (blind), checked in exact integer arithmetic on the quarter-step grid.
fn criterion_4() -> Result<String, String> {
    let mut cells = 0u32;
    for i in 1..=20u32 {
        for j in 1..=20u32 {
            for k in 1..=20u32 {
                let (r, f, theta) = (i as f64 * 0.25, j as f64 * 0.25, k as f64 * 0.25);
                // R + F > theta/2  <=>  2(i + j) > k on the integer grid.
                let expect_informed = 2 * (i + j) > k;
                // R + F > theta/8  <=>  8(i + j) > k.
                let expect_blind = 8 * (i + j) > k;
                if beats_bft_informed(r, f, theta) != expect_informed {
                    return Err(format!(
                        "informed comparison wrong at R={r} F={f} theta={theta}"
                    ));
                }
                if beats_bft_blind(r, f, theta) != expect_blind {
                    return Err(format!("blind comparison wrong at R={r} F={f} theta={theta}"));
                }
                cells += 1;
            }
        }
    }
    Ok(format!(
        "{cells} grid cells match exact integer arithmetic, boundary cells included"
    ))
}

// --- criterion 5: fork break-even share matches independent bisection -----------

/// `s_low` must agree to 1e-9 with a bisection of the profit function on
/// 1000 sampled parameter points; the landmark points (k=1, R=1, theta=1,
/// F=0.75) -> 1/2 and F=1 -> 1 must be exact; and the profitability
/// precondition boundary F = (kR+theta)^2 / (4kR) must be detected exactly.
fn criterion_5() -> Result<String, String> {
    // Landmarks, exact in f64.
    let half = fork_profitability(1.0, 0.75, 1.0, 1.0)
        .ok_or("F=0.75 landmark: profitability missing")?;
    if half.s_low != 0.5 {
        return Err(format!("F=0.75 landmark: s_low = {}, want exactly 0.5", half.s_low));
    }
    let unit = fork_profitability(1.0, 1.0, 1.0, 1.0).ok_or("F=1 landmark: profitability missing")?;
    if unit.s_low != 1.0 || unit.s_high != 1.0 {
        return Err(format!(
            "F=1 landmark: roots ({}, {}), want exactly (1, 1)",
            unit.s_low, unit.s_high
        ));
    }
    // At the boundary the break-even interval is a single point, so no share
    // is strictly profitable; one ulp above it, the precondition fails.
    if profitable_share_interval(1.0, 1.0, 1.0, 1.0).is_some() {
        return Err("boundary F=1: strictly profitable interval should be empty".into());
    }
    if fork_profitability(1.0, 1.0 + f64::EPSILON, 1.0, 1.0).is_some() {
        return Err("one ulp above the boundary should fail the precondition".into());
    }

    // Random sample: compare s_low with a from-scratch bisection of the
    // profit function between zero share and the vertex of its quadratic
    // factor (profit is negative at tiny shares and positive at the vertex
    // whenever the precondition holds strictly).
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let mut max_err = 0.0f64;
    for sample in 0..1000 {
        let r = 0.1 + 2.9 * rng.gen::<f64>();
        let theta = 0.1 + 2.9 * rng.gen::<f64>();
        let k = 0.1 + 2.9 * rng.gen::<f64>();
        let boundary = (k * r + theta) * (k * r + theta) / (4.0 * k * r);
        let f = (0.01 + 0.97 * rng.gen::<f64>()) * boundary;
        let roots = fork_profitability(r, f, theta, k)
            .ok_or(format!("sample {sample}: precondition unexpectedly failed"))?;
        let mut lo = 1e-12;
        let mut hi = (theta + k * r) / (2.0 * k * r);
        if !(fork_attack_profit(lo, r, f, theta, k) < 0.0
            && fork_attack_profit(hi, r, f, theta, k) > 0.0)
        {
            return Err(format!("sample {sample}: bisection bracket has no sign change"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fork_attack_profit(mid, r, f, theta, k) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let err = (roots.s_low - hi).abs();
        if err > 1e-9 {
            return Err(format!(
                "sample {sample} (R={r}, F={f}, theta={theta}, k={k}): s_low={} but bisection={hi}, error {err:e}",
                roots.s_low
            ));
        }
        max_err = max_err.max(err);
    }
    Ok(format!(
        "1000 samples agree with bisection (max error {max_err:.1e}); landmarks 1/2 and 1 exact; boundary exact"
    ))
}

// --- criterion 6: fork fixtures under both mechanisms ---------------------------

/// Double-spend: both mechanisms must keep the honest content in every one
/// of 10^5 resolutions. Pre-spend: the per-transaction mechanism must be
/// *vulnerable* (the earlier conflicting spend lands and voids the original
/// payment) while the whole-allocation mechanism stays immune. The
/// equilibrium reports must say the same.
fn criterion_6() -> Result<String, String> {
    const TRIALS: u32 = 100_000;
    let fine = 1.0;
    let honest = || AgentPolicy::honest(2.0, 1.0);
    let attacker = || {
        AgentPolicy::Attacker(AttackerPolicy {
            coalition: 0,
            theta: 2.0,
            burn_aversion: 1e-6,
            variant: AttackVariant::OneShotInformed,
        })
    };

    // Double-spend: branch A holds the payment, the attacker champions B.
    let ds = fixtures::double_spend_fork();
    let ds_truth = final_allocations(&ds.chain_a).map_err(|e| e.to_string())?;
    for trial in 0..TRIALS {
        let res = resolve_fork_tx(&ds, fine, &mut honest(), &mut attacker())
            .map_err(|e| format!("double-spend tx trial {trial}: {e}"))?;
        let ok = res.retained.len() == 1
            && res.retained[0] == "t-spend"
            && res.discarded.is_empty()
            && res.voided.is_empty()
            && res.final_state == ds_truth;
        if !ok {
            return Err(format!(
                "double-spend tx trial {trial}: payment not preserved (retained {:?}, discarded {:?}, voided {:?})",
                res.retained, res.discarded, res.voided
            ));
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(2026);
    for trial in 0..TRIALS {
        let res = resolve_fork_alloc(&ds, fine, ForkSide::A, &mut honest(), &mut attacker(), &mut rng)
            .map_err(|e| format!("double-spend alloc trial {trial}: {e}"))?;
        if res.outcome != AllocOutcome::Confirmed(ForkSide::A) || res.final_state != ds_truth {
            return Err(format!(
                "double-spend alloc trial {trial}: dishonest branch not rejected ({:?})",
                res.outcome
            ));
        }
    }

    // Pre-spend: the earlier conflicting spend looks valid transaction by
    // transaction, so the tx mechanism must land it and void the original
    // payment (the vulnerability); the alloc mechanism must not.
    let ps = fixtures::pre_spend_fork();
    let ps_truth = final_allocations(&ps.chain_a).map_err(|e| e.to_string())?;
    let ps_goal = final_allocations(&ps.chain_b).map_err(|e| e.to_string())?;
    if ps_goal == ps_truth {
        return Err("pre-spend fixture degenerate: both branches agree".into());
    }
    for trial in 0..TRIALS {
        let res = resolve_fork_tx(&ps, fine, &mut honest(), &mut attacker())
            .map_err(|e| format!("pre-spend tx trial {trial}: {e}"))?;
        let orig_removed = res.voided.iter().chain(&res.discarded).any(|t| t == "orig");
        let vulnerable = res.retained.iter().any(|t| t == "pre")
            && orig_removed
            && res.final_state == ps_goal;
        if !vulnerable {
            return Err(format!(
                "pre-spend tx trial {trial}: expected the attack to succeed, got retained {:?}, final {:?}",
                res.retained, res.final_state
            ));
        }
    }
    for trial in 0..TRIALS {
        let res = resolve_fork_alloc(&ps, fine, ForkSide::A, &mut honest(), &mut attacker(), &mut rng)
            .map_err(|e| format!("pre-spend alloc trial {trial}: {e}"))?;
        if res.outcome != AllocOutcome::Confirmed(ForkSide::A) || res.final_state != ps_truth {
            return Err(format!(
                "pre-spend alloc trial {trial}: dishonest branch not rejected ({:?})",
                res.outcome
            ));
        }
    }

    // Equilibrium reports on the same four games.
    let expect = |name: &str, tree: GameTree, prefix: &str| -> Result<(), String> {
        let report =
            solve(&tree, &SolveOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        if !report.outcome_unique {
            return Err(format!("{name}: equilibrium outcome not unique"));
        }
        if report.outcome.len() != 1 {
            return Err(format!("{name}: mixed outcome {:?}", report.outcome));
        }
        let (label, _, _) = report.outcome.keys().next().expect("one entry");
        if !label.starts_with(prefix) {
            return Err(format!("{name}: outcome {label}, want {prefix}*"));
        }
        Ok(())
    };
    let (h, a) = (honest(), attacker());
    expect(
        "double-spend tx equilibrium",
        build_fork_tx_game(&ds, fine, ForkSide::A, &h, &a).map_err(|e| e.to_string())?,
        "resolve:truth",
    )?;
    expect(
        "double-spend alloc equilibrium",
        build_fork_alloc_game(&ds, fine, ForkSide::A, &h, &a).map_err(|e| e.to_string())?,
        "confirm:truth",
    )?;
    expect(
        "pre-spend tx equilibrium",
        build_fork_tx_game(&ps, fine, ForkSide::A, &h, &a).map_err(|e| e.to_string())?,
        "resolve:goal",
    )?;
    expect(
        "pre-spend alloc equilibrium",
        build_fork_alloc_game(&ps, fine, ForkSide::A, &h, &a).map_err(|e| e.to_string())?,
        "confirm:truth",
    )?;

    Ok(format!(
        "double-spend defended and pre-spend contrast shown over 4x{TRIALS} resolutions; equilibria agree"
    ))
}

// --- criterion 7: patient-coalition recursion -----------------------------------

/// V(1,1) = R/2 and V(2,0) = R + theta exactly; V is monotone nondecreasing
/// in theta and nonincreasing in F across all states with a + h <= 20; and a
/// lone coalition proposer facing the last honest node never holds the
/// dispute when (x+1) * theta < F.
fn criterion_7() -> Result<String, String> {
    for (r, f, theta) in [(1.0, 1.0, 2.0), (0.7, 1.3, 0.9), (2.0, 0.5, 0.25)] {
        let dp = PatientDp::solve(2, 2, r, f, theta);
        if dp.value(1, 1) != 0.5 * r {
            return Err(format!(
                "V(1,1) = {} at (R={r}, F={f}, theta={theta}), want exactly R/2",
                dp.value(1, 1)
            ));
        }
        if dp.value(2, 0) != r + theta {
            return Err(format!(
                "V(2,0) = {} at (R={r}, F={f}, theta={theta}), want exactly R+theta",
                dp.value(2, 0)
            ));
        }
    }

    let mut comparisons = 0u32;
    let mut check_ladder = |tables: &[PatientDp], direction: f64, what: &str| -> Result<(), String> {
        for pair in tables.windows(2) {
            for a in 0..=20u32 {
                for h in 0..=(20 - a) {
                    let step = (pair[1].value(a, h) - pair[0].value(a, h)) * direction;
                    if step < -1e-12 {
                        return Err(format!(
                            "V({a},{h}) not monotone in {what}: {} then {}",
                            pair[0].value(a, h),
                            pair[1].value(a, h)
                        ));
                    }
                    comparisons += 1;
                }
            }
        }
        Ok(())
    };
    let theta_ladder: Vec<PatientDp> = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&theta| PatientDp::solve(20, 20, 1.0, 1.5, theta))
        .collect();
    check_ladder(&theta_ladder, 1.0, "theta (nondecreasing)")?;
    let fine_ladder: Vec<PatientDp> = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&f| PatientDp::solve(20, 20, 1.0, f, 2.0))
        .collect();
    check_ladder(&fine_ladder, -1.0, "F (nonincreasing)")?;

    let mut deterred = 0u32;
    for ti in 1..=10u32 {
        for fi in 1..=10u32 {
            let theta = ti as f64 * 0.1;
            let f = fi as f64 * 0.5;
            let dp = PatientDp::solve(10, 1, 1.0, f, theta);
            for x in 1..=10u32 {
                if (x as f64 + 1.0) * theta < f {
                    deterred += 1;
                    if dp.proposer_continues(x, 1) {
                        return Err(format!(
                            "proposer holds the dispute at (x={x}, 1) despite (x+1)theta < F (theta={theta}, F={f})"
                        ));
                    }
                }
            }
        }
    }
    Ok(format!(
        "exact values at 3 parameter sets; {comparisons} monotonicity comparisons; {deterred} deterred states avoid the dispute"
    ))
}

// --- criterion 8: CLI determinism ------------------------------------------------

/// Every invocation run twice with identical flags and seed must produce
/// byte-identical stdout, stderr, and files; the sweep must also not depend
/// on the worker-thread count.
fn criterion_8() -> Result<String, String> {
    let bin = env!("CARGO_BIN_EXE_stakemech");
    let run = |args: &[&str]| -> Result<std::process::Output, String> {
        std::process::Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| format!("spawning {args:?}: {e}"))
    };

    let invocations: &[&[&str]] = &[
        &["thresholds", "--R", "0.5,1,2", "--F", "0.5,1", "--theta", "1,2", "--k", "0.5,1", "--format", "csv"],
        &["solve", "--scenario", "bft", "--n", "3", "--attackers", "1", "--R", "1", "--F", "1", "--theta", "2"],
        &["solve", "--scenario", "bft", "--n", "2", "--attackers", "0", "--visibility", "blind"],
        &["solve", "--scenario", "fork-tx", "--fixture", "pre-spend"],
        &["solve", "--scenario", "fork-alloc", "--fixture", "double-spend"],
        &["simulate", "--scenario", "bft_informed", "--n", "50", "--s-grid", "0:1:0.1", "--trials", "2000", "--seed", "123", "--format", "csv"],
        &["simulate", "--scenario", "fork_alloc", "--s-grid", "0:1:0.25", "--trials", "500", "--seed", "9", "--format", "csv"],
        &["patient", "--attackers", "6", "--honest", "6", "--theta", "2", "--F", "1", "--format", "csv"],
        &["fork-diff", "--fixture", "pre-spend", "--mode", "alloc", "--adversary", "b", "--seed", "42"],
        &["fork-diff", "--fixture", "double-spend", "--mode", "tx"],
    ];
    for args in invocations {
        let first = run(args)?;
        let second = run(args)?;
        if !first.status.success() {
            return Err(format!(
                "{args:?} failed ({:?}): {}",
                first.status.code(),
                String::from_utf8_lossy(&first.stderr)
            ));
        }
        if first.status.code() != second.status.code()
            || first.stdout != second.stdout
            || first.stderr != second.stderr
        {
            return Err(format!("{args:?} differs between two identical runs"));
        }
    }

    // File outputs: identical bytes when written from two separate runs
    // (different directories, same flags and seed).
    let base = std::env::temp_dir().join(format!("stakemech-acceptance-{}", std::process::id()));
    let sweep_out = |dir: &std::path::Path| -> Result<(), String> {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        let csv = dir.join("sweep.csv");
        let out = run(&[
            "simulate", "--scenario", "bft_blind", "--n", "60", "--s-grid", "0.4:0.9:0.1",
            "--trials", "3000", "--seed", "11", "--out",
            csv.to_str().expect("temp path is utf-8"),
        ])?;
        if !out.status.success() {
            return Err(format!(
                "sweep with --out failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(())
    };
    let (dir1, dir2) = (base.join("r1"), base.join("r2"));
    sweep_out(&dir1)?;
    sweep_out(&dir2)?;
    for file in ["sweep.csv", "sweep.manifest.json"] {
        let a = std::fs::read(dir1.join(file)).map_err(|e| format!("{file}: {e}"))?;
        let b = std::fs::read(dir2.join(file)).map_err(|e| format!("{file}: {e}"))?;
        if a != b {
            return Err(format!("{file} differs between two identical runs"));
        }
    }
    let _ = std::fs::remove_dir_all(&base);

    // Aggregation must not depend on the worker-thread count.
    let sweep = ["simulate", "--scenario", "bft_informed", "--n", "50", "--s-grid", "0:1:0.1",
        "--trials", "2000", "--seed", "123", "--format", "csv"];
    let jobs1 = run(&[&sweep[..], &["--jobs", "1"][..]].concat())?;
    let jobs2 = run(&[&sweep[..], &["--jobs", "2"][..]].concat())?;
    if !jobs1.status.success() || jobs1.stdout != jobs2.stdout {
        return Err("sweep output depends on --jobs".into());
    }

    Ok(format!(
        "{} invocations byte-identical across runs; --out files identical; --jobs invariant",
        invocations.len()
    ))
}
