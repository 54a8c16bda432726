//! Per-scenario trial accounting and the sweep driver.
//!
//! [`run_sweep`] walks the share grid in parallel (one task per grid point;
//! see [`crate::exec`]) while each point's trials run sequentially on the
//! point's own RNG stream, so results are bit-identical at any thread
//! count. The `*_point` functions define what one trial is for each
//! [`Scenario`]; their payoff accounting is documented on the scenario
//! variants.

use super::seed::point_rng;
use super::stats::{locate_threshold, Accumulator};
use super::{PointStats, PolicyMode, Scenario, SimError, SweepConfig, SweepResult};
use crate::agents::{
    AgentPolicy, AttackVariant, AttackerPolicy, CoalitionId, MessageContext, Script, Seat,
};
use crate::analytics::PatientDp;
use crate::exec;
use crate::fork::resolve_fork_tx;
use crate::ledger::{final_allocations, fixtures, ForkSide};
use crate::sr::{
    run_round_with_pair, run_until_commit, FineSchedule, Message, RoundParams, SeatVisibility,
};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Chain-quality utilities for honest nodes in simulations (`H > D > 0`).
pub const HONEST_H: f64 = 2.0;
pub const HONEST_D: f64 = 1.0;
/// Id of the single simulated coalition.
pub const COALITION: CoalitionId = 0;

/// Runs every grid point of `config` and locates the empirical threshold.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, SimError> {
    config.validate()?;
    let points = exec::map_indexed(config.s_grid.len(), |i| {
        let s = config.s_grid[i];
        let mut rng = point_rng(config.master_seed, config.scenario.stream(), i as u64);
        run_point(config, s, &mut rng)
    });
    let threshold = locate_threshold(&points);
    Ok(SweepResult {
        config: config.clone(),
        points,
        threshold,
    })
}

fn run_point(config: &SweepConfig, s: f64, rng: &mut ChaCha12Rng) -> PointStats {
    match config.scenario {
        Scenario::BftInformed => bft_informed_point(config, s, rng),
        Scenario::BftBlind => bft_blind_point(config, s, rng),
        Scenario::BftPatient => bft_patient_point(config, s, rng),
        Scenario::ForkTx => fork_tx_point(config, s, rng),
        Scenario::ForkAlloc => fork_alloc_point(config, s, rng),
    }
}

/// Coalition size whose *conditioned* partner share `(c - 1)/(n - 1)`
/// realizes `s` (used when a trial conditions on a coalition proposer).
fn conditioned_size(s: f64, n: usize) -> usize {
    1 + ((s * (n - 1) as f64).round() as usize).min(n - 1)
}

/// Coalition size whose population share `c/n` realizes `s`.
fn population_size(s: f64, n: usize) -> usize {
    ((s * n as f64).round() as usize).min(n)
}

/// `c` coalition nodes (ids `0..c`) followed by honest nodes.
fn round_policies(c: usize, n: usize, theta: f64, variant: &AttackVariant) -> Vec<AgentPolicy> {
    (0..n)
        .map(|i| {
            if i < c {
                AgentPolicy::Attacker(AttackerPolicy {
                    coalition: COALITION,
                    theta,
                    burn_aversion: 0.0,
                    variant: variant.clone(),
                })
            } else {
                AgentPolicy::honest(HONEST_H, HONEST_D)
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn finish_point(
    s: f64,
    coalition: usize,
    trials: u32,
    attacks: u32,
    successes: u32,
    payoff: &Accumulator,
    mean_rounds: f64,
    degenerate: bool,
) -> PointStats {
    let t = trials as f64;
    PointStats {
        s,
        coalition,
        trials,
        attack_rate: attacks as f64 / t,
        success_rate: successes as f64 / t,
        mean_payoff: payoff.mean(),
        stderr_payoff: payoff.stderr(),
        mean_rounds,
        degenerate,
    }
}

/// Informed commit round conditioned on a coalition proposer: confirmer is a
/// confederate with probability `(c - 1)/(n - 1)`, which the size mapping
/// pins to the grid share. Payoff: coalition tokens + theta on a preferred
/// commit, minus the honest proposer baseline `R`.
fn bft_informed_point(cfg: &SweepConfig, s: f64, rng: &mut ChaCha12Rng) -> PointStats {
    let n = cfg.n;
    let c = conditioned_size(s, n);
    let degenerate = c == n;
    let params = RoundParams {
        reward: cfg.reward,
        fine_schedule: FineSchedule::Constant(cfg.fine),
    };
    let mut policies = round_policies(c, n, cfg.theta, &AttackVariant::OneShotInformed);
    let active: Vec<usize> = (0..n).collect();
    let forced = cfg.policy_mode == PolicyMode::Forced;
    let goal = Message::Preferred(COALITION);

    let mut payoff = Accumulator::default();
    let (mut attacks, mut successes) = (0u32, 0u32);
    for _ in 0..cfg.trials {
        let proposer = rng.gen_range(0..c);
        let mut confirmer = rng.gen_range(0..n - 1);
        if confirmer >= proposer {
            confirmer += 1;
        }
        let r = run_round_with_pair(
            &params,
            &mut policies,
            &active,
            0,
            SeatVisibility::Informed,
            forced,
            proposer,
            confirmer,
        );
        let tokens: f64 = r
            .payoffs
            .iter()
            .filter(|(&node, _)| node < c)
            .map(|(_, &flow)| flow)
            .sum();
        let success = r.committed == Some(goal);
        let utility = tokens + if success { cfg.theta } else { 0.0 };
        payoff.push(utility - cfg.reward);
        if success || !r.matched {
            attacks += 1;
        }
        if success {
            successes += 1;
        }
    }
    finish_point(s, c, cfg.trials, attacks, successes, &payoff, 1.0, degenerate)
}

/// Stylized blind commit round: one staked attack whose two seats are
/// independent population draws. See [`Scenario::BftBlind`].
fn bft_blind_point(cfg: &SweepConfig, s: f64, rng: &mut ChaCha12Rng) -> PointStats {
    let n = cfg.n;
    let c = population_size(s, n);
    let degenerate = c == 0 || c == n;

    // Whether the coalition's own blind rule switches on at this share
    // (consulting the real policy so the rule cannot drift).
    let mut probe = AgentPolicy::Attacker(AttackerPolicy {
        coalition: COALITION,
        theta: cfg.theta,
        burn_aversion: 0.0,
        variant: AttackVariant::OneShotBlind,
    });
    let ctx = MessageContext {
        seat: Seat::Proposer,
        reward: cfg.reward,
        fine: cfg.fine,
        coalition_share: c as f64 / n as f64,
        partner_in_coalition: None,
        attackers_remaining: c as u32,
        honest_remaining: (n - c) as u32,
        forced_attack: cfg.policy_mode == PolicyMode::Forced,
    };
    let attacking = probe.block_message(&ctx) != Message::Truth;

    let mut payoff = Accumulator::default();
    let (mut attacks, mut successes) = (0u32, 0u32);
    for _ in 0..cfg.trials {
        if !attacking {
            payoff.push(0.0);
            continue;
        }
        attacks += 1;
        let proposer_friendly = rng.gen_range(0..n) < c;
        let confirmer_friendly = rng.gen_range(0..n) < c;
        let success = proposer_friendly && confirmer_friendly;
        let utility = if success {
            successes += 1;
            cfg.reward + cfg.theta
        } else {
            -cfg.fine
        };
        payoff.push(utility - cfg.reward);
    }
    finish_point(s, c, cfg.trials, attacks, successes, &payoff, 1.0, degenerate)
}

/// Full dispute processes under the exact backward-induction policy.
/// Payoff: raw coalition utility per dispute (no baseline).
fn bft_patient_point(cfg: &SweepConfig, s: f64, rng: &mut ChaCha12Rng) -> PointStats {
    let n = cfg.n;
    let c = population_size(s, n);
    let degenerate = c == 0 || c == n;
    let params = RoundParams {
        reward: cfg.reward,
        fine_schedule: FineSchedule::Constant(cfg.fine),
    };
    let plan = PatientDp::solve(c as u32, (n - c) as u32, cfg.reward, cfg.fine, cfg.theta);
    let mut policies = round_policies(c, n, cfg.theta, &AttackVariant::Patient(plan));
    let goal = Message::Preferred(COALITION);

    let mut payoff = Accumulator::default();
    let mut rounds = Accumulator::default();
    let (mut attacks, mut successes) = (0u32, 0u32);
    for _ in 0..cfg.trials {
        let res = run_until_commit(
            &params,
            &mut policies,
            SeatVisibility::Informed,
            cfg.max_rounds,
            rng,
        );
        let tokens: f64 = res
            .total_payoffs
            .iter()
            .filter(|(&node, _)| node < c)
            .map(|(_, &flow)| flow)
            .sum();
        let success = res.committed == Some(goal);
        let utility = tokens + if success { cfg.theta } else { 0.0 };
        payoff.push(utility);
        rounds.push(res.rounds.len() as f64);
        if success || res.rounds.iter().any(|r| !r.matched) {
            attacks += 1;
        }
        if success {
            successes += 1;
        }
    }
    finish_point(
        s,
        c,
        cfg.trials,
        attacks,
        successes,
        &payoff,
        rounds.mean(),
        degenerate,
    )
}

/// A scripted champion with decisions drawn uniformly at random — the fuzz
/// adversary for fork-resolution trials.
pub fn random_script<R: Rng>(rng: &mut R, entries: usize) -> AgentPolicy {
    let mut script = Script::default();
    for _ in 0..entries {
        script.confirm_invalid.push(rng.gen_bool(0.5));
        script.assert_tx.push(rng.gen_bool(0.5));
        script.name_chain.push(if rng.gen_bool(0.5) {
            ForkSide::A
        } else {
            ForkSide::B
        });
        script.assert_alloc.push(rng.gen_bool(0.5));
    }
    AgentPolicy::Scripted(script)
}

/// Randomized-adversary fuzz of per-transaction fork resolution on the
/// pre-spend fixture. See [`Scenario::ForkTx`].
fn fork_tx_point(cfg: &SweepConfig, s: f64, rng: &mut ChaCha12Rng) -> PointStats {
    let fork = fixtures::pre_spend_fork();
    let goal_state = final_allocations(&fork.chain_b).expect("fixture branch B replays");

    let mut payoff = Accumulator::default();
    let mut items = Accumulator::default();
    let (mut attacks, mut successes) = (0u32, 0u32);
    for _ in 0..cfg.trials {
        let mut honest = AgentPolicy::honest(HONEST_H, HONEST_D);
        let mut adversary = random_script(rng, 4);
        let res = resolve_fork_tx(&fork, cfg.fine, &mut honest, &mut adversary)
            .expect("fixture fork resolves");
        payoff.push(res.payoffs[&ForkSide::B]);
        items.push(res.trace.len() as f64);
        if res.trace.iter().any(|d| d.disputed) {
            attacks += 1;
        }
        if res.final_state == goal_state {
            successes += 1;
        }
    }
    finish_point(
        s,
        0,
        cfg.trials,
        attacks,
        successes,
        &payoff,
        items.mean(),
        false,
    )
}

/// Stylized allocation-naming staking trial whose expected payoff equals the
/// cubic attack-profit curve. See [`Scenario::ForkAlloc`].
fn fork_alloc_point(cfg: &SweepConfig, s: f64, rng: &mut ChaCha12Rng) -> PointStats {
    let n = cfg.n;
    let c = population_size(s, n);
    let degenerate = c == 0 || c == n;
    let share = c as f64 / n as f64;
    let chain_reward = cfg.scale * cfg.reward;
    let stake = share * chain_reward;

    let mut payoff = Accumulator::default();
    let (mut attacks, mut successes) = (0u32, 0u32);
    for _ in 0..cfg.trials {
        let staked = rng.gen_range(0..n) < c;
        let utility = if staked {
            attacks += 1;
            let confirmed = rng.gen_range(0..n) < c;
            if confirmed {
                successes += 1;
                -cfg.fine + chain_reward + cfg.theta
            } else {
                -cfg.fine + stake
            }
        } else {
            stake
        };
        payoff.push(utility - stake);
    }
    finish_point(s, c, cfg.trials, attacks, successes, &payoff, 1.0, degenerate)
}
