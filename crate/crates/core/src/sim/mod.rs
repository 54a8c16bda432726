//! Monte-Carlo sweeps over coalition share for the commit-round and
//! fork-resolution mechanisms.
//!
//! A sweep fixes mechanism parameters and walks an ascending grid of
//! coalition shares `s`. Each grid point runs `trials` independent trials on
//! its own deterministic RNG stream (see [`seed`]), so a sweep's output is a
//! pure function of its [`SweepConfig`] — identical at any thread count and
//! across runs. Points aggregate into [`PointStats`] rows plus an optional
//! empirical profitability threshold: the midpoint of the first grid
//! interval on which the mean attacker surplus changes sign.
//!
//! What one *trial* is — and what `mean_payoff` therefore measures — is
//! scenario-specific; see the [`Scenario`] variants. Rendering to CSV (with
//! a JSON manifest capturing the generating configuration) lives in
//! [`report`].

pub mod report;
pub mod scenarios;
pub mod seed;
pub mod stats;

pub use report::{
    fork_trace_csv, manifest_path, round_trace_csv, sweep_csv, sweep_manifest,
    write_csv_with_manifest,
};
pub use scenarios::run_sweep;
pub use seed::{mix_seed, point_rng};
pub use stats::{locate_threshold, Accumulator};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Which mechanism and payoff accounting a sweep exercises.
///
/// Every scenario reports, per grid point, the rate of attempted attacks,
/// the rate of *successful* attacks (distorted content committed or
/// confirmed), and a mean payoff whose zero crossing is the empirical
/// profitability threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// One informed-visibility commit round per trial, conditioned on the
    /// coalition holding the proposer seat: the proposer is drawn uniformly
    /// from the coalition and the confirmer uniformly from everyone else, so
    /// at grid share `s` the confirmer is a confederate with probability
    /// `s` exactly (the coalition size is chosen as `1 + round(s (n-1))`).
    /// The payoff sample is the coalition's token flow for the round, plus
    /// `theta` if its preferred content committed, minus the reward `R` an
    /// honest proposer seat would have earned.
    BftInformed,
    /// Stylized blind commit round: the coalition stakes an attack whose two
    /// seats are filled by independent population draws (each a confederate
    /// with probability `c/n`). The attack pays `R + theta` when both seats
    /// fall to the coalition and forfeits the fine `F` otherwise; the payoff
    /// sample subtracts the honest baseline `R`. Its expectation is
    /// `s^2 (R + theta + F) - (R + F)`, so the mean crosses zero at
    /// `sqrt((R + F) / (R + theta + F))`.
    BftBlind,
    /// Full dispute processes (rounds repeat after failed challenges, seats
    /// excluded pairwise) with the coalition playing the exact
    /// backward-induction dispute policy. The payoff sample is the
    /// coalition's raw utility per dispute — total token flow plus `theta`
    /// on a preferred commit — with no baseline subtracted. `policy_mode`
    /// has no effect here: the patient policy always follows its own rule.
    BftPatient,
    /// Fuzz of per-transaction fork resolution on the pre-spend fixture: an
    /// honest champion defends the original branch while a randomized
    /// scripted champion plays the pre-spending branch. The payoff sample is
    /// the adversary's net token flow (fines and refunds); `success_rate` is
    /// the fraction of trials resolving to the adversary's final state. The
    /// grid share is ignored (each point is an independent fuzz stream).
    ForkTx,
    /// Stylized allocation-naming staking trial: with probability `c/n` the
    /// coalition stakes an attack (paying the fine `F`) that yields
    /// `k R + theta` if a second independent draw also lands in the
    /// coalition and the forked-branch stake `s k R` otherwise; the payoff
    /// sample subtracts the honest stake `s k R`. Its expectation equals the
    /// cubic attack-profit curve `s (-k R s^2 + (theta + k R) s - F)`.
    ForkAlloc,
}

impl Scenario {
    /// Stable per-scenario RNG stream id. Part of the reproducibility
    /// contract: a published result is keyed by (master seed, stream, grid
    /// index), so these ids are frozen.
    pub fn stream(self) -> u64 {
        match self {
            Scenario::BftInformed => 1,
            Scenario::BftBlind => 2,
            Scenario::BftPatient => 3,
            Scenario::ForkTx => 4,
            Scenario::ForkAlloc => 5,
        }
    }

    /// Snake-case name used in CSV output and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::BftInformed => "bft_informed",
            Scenario::BftBlind => "bft_blind",
            Scenario::BftPatient => "bft_patient",
            Scenario::ForkTx => "fork_tx",
            Scenario::ForkAlloc => "fork_alloc",
        }
    }

    /// All scenarios, in stream-id order.
    pub const ALL: [Scenario; 5] = [
        Scenario::BftInformed,
        Scenario::BftBlind,
        Scenario::BftPatient,
        Scenario::ForkTx,
        Scenario::ForkAlloc,
    ];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Scenario, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|sc| sc.name()).collect();
                format!("unknown scenario `{s}` (expected one of: {})", names.join(", "))
            })
    }
}

/// Whether attackers follow their policy's own attack rule or attack
/// unconditionally.
///
/// `Forced` is the measurement mode: the payoff curve is sampled on both
/// sides of the profitability threshold, so its zero crossing can be
/// located. `Adaptive` lets the policies decide, showing where they actually
/// switch on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    Forced,
    Adaptive,
}

/// Full specification of a sweep. A sweep's results are a pure function of
/// this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scenario: Scenario,
    /// Population size: nodes in the commit-round draw pool, or stakers in
    /// the fork scenarios.
    pub n: usize,
    /// Proposer reward `R`.
    pub reward: f64,
    /// Base fine `F` (constant schedule).
    pub fine: f64,
    /// Coalition's utility `theta` for a distorted commit/confirmation.
    pub theta: f64,
    /// Chain-scale multiplier `k` (fork scenarios only).
    pub scale: f64,
    /// Coalition shares to test; strictly ascending, within `[0, 1]`.
    pub s_grid: Vec<f64>,
    /// Trials per grid point.
    pub trials: u32,
    /// Master seed; combined with the scenario stream and grid index to
    /// derive each point's RNG.
    pub master_seed: u64,
    pub policy_mode: PolicyMode,
    /// Round cap for dispute processes (patient scenario).
    pub max_rounds: u32,
}

impl SweepConfig {
    /// Defaults: `R = 1`, `F = 1`, `theta = 2`, `k = 1`, shares `0..=1` in
    /// steps of `0.025`, 10 000 trials per point, master seed 7, forced
    /// attacks. The population is 41 for the conditioned informed scenario
    /// (so `(c - 1)/(n - 1)` hits the grid exactly), 10 for the patient
    /// scenario (dispute processes are costlier), and 40 otherwise.
    pub fn new(scenario: Scenario) -> SweepConfig {
        let n = match scenario {
            Scenario::BftInformed => 41,
            Scenario::BftPatient => 10,
            _ => 40,
        };
        SweepConfig {
            scenario,
            n,
            reward: 1.0,
            fine: 1.0,
            theta: 2.0,
            scale: 1.0,
            s_grid: grid(0.0, 1.0, 0.025),
            trials: 10_000,
            master_seed: 7,
            policy_mode: PolicyMode::Forced,
            max_rounds: 64,
        }
    }

    /// Checks the configuration; [`run_sweep`] calls this first.
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n < 2 {
            return err(format!("population must have at least two nodes, got {}", self.n));
        }
        if self.s_grid.is_empty() {
            return err("share grid is empty".into());
        }
        if !self
            .s_grid
            .iter()
            .all(|s| s.is_finite() && (0.0..=1.0).contains(s))
        {
            return err("every share must lie in [0, 1]".into());
        }
        if !self.s_grid.windows(2).all(|w| w[0] < w[1]) {
            return err("share grid must be strictly ascending".into());
        }
        if self.trials == 0 {
            return err("each grid point needs at least one trial".into());
        }
        if !(self.reward.is_finite() && self.reward > 0.0) {
            return err(format!("reward must be finite and positive, got {}", self.reward));
        }
        for (name, v) in [
            ("fine", self.fine),
            ("theta", self.theta),
            ("scale", self.scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.max_rounds == 0 {
            return err("max_rounds must be positive".into());
        }
        Ok(())
    }
}

/// Inclusive ascending grid from `lo` to `hi` in `step` increments (the last
/// point may fall short of `hi` when the span is not a multiple of `step`).
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0, "grid step must be positive");
    assert!(hi >= lo, "grid upper bound must not precede the lower bound");
    let mut points = Vec::new();
    for i in 0.. {
        let x = lo + step * i as f64;
        if x > hi + 1e-9 {
            break;
        }
        points.push(x.min(hi));
    }
    points
}

/// Aggregated results for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointStats {
    /// Grid share this point was asked to realize.
    pub s: f64,
    /// Integer coalition size actually used.
    pub coalition: usize,
    pub trials: u32,
    /// Fraction of trials in which the coalition attempted an attack.
    pub attack_rate: f64,
    /// Fraction of trials in which distorted content was committed or
    /// confirmed.
    pub success_rate: f64,
    /// Mean attacker surplus per trial (accounting per [`Scenario`]).
    pub mean_payoff: f64,
    /// Standard error of `mean_payoff`.
    pub stderr_payoff: f64,
    /// Mean rounds (or dispute items) per trial.
    pub mean_rounds: f64,
    /// Boundary point (empty or all-coalition population) excluded from
    /// threshold location.
    pub degenerate: bool,
}

/// A completed sweep: the generating configuration, one row per grid point,
/// and the located threshold, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub points: Vec<PointStats>,
    /// Midpoint of the first grid interval where `mean_payoff` changes
    /// sign, skipping degenerate points.
    pub threshold: Option<f64>,
}

/// Errors surfaced by the sweep driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
}
