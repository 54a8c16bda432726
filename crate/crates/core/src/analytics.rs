//! Closed-form analysis of the fine-backed commit mechanism.
//!
//! Everything in this module is deterministic arithmetic — no randomness, no
//! simulation. It provides:
//!
//! * coalition-share thresholds below which a one-shot distortion attack is
//!   unprofitable, for informed and blind attackers, together with exact
//!   comparisons against a one-third quorum bound;
//! * profitability analysis of staking-cost fork attacks (quadratic profit
//!   curve, break-even shares, precondition for any profitable share);
//! * a value recursion for a *patient* coalition that can afford to lose
//!   repeated dispute rounds (fines plus exclusion) waiting to draw an
//!   all-coalition pair, with the induced per-seat dispute policy;
//! * a coarser aggregate recursion for the same quantity kept for
//!   comparison, plus deterrence conditions on the fine level.
//!
//! These functions serve as reference values for the Monte Carlo harness and
//! the game solver: simulated thresholds are validated against
//! [`informed_share_threshold`] / [`blind_share_threshold`], and simulated
//! patient-coalition payoffs against [`PatientDp`].

use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from recursive value computations.
#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("value recursion reached an empty population")]
    EmptyPopulation,
}

// --- One-shot attack thresholds ----------------------------------------------

/// Minimum coalition share for a one-shot attack to beat honest play when
/// the coalition *knows* which nodes it controls: an attack pays off only if
/// `s (R + theta) - (1 - s) F > R`, i.e. `s > (R + F) / (R + theta + F)`.
pub fn informed_share_threshold(r: f64, f: f64, theta: f64) -> f64 {
    (r + f) / (r + theta + f)
}

/// Minimum coalition share for a *blind* coalition, whose members cannot
/// tell whether the partner seat is friendly: a distorted commit needs both
/// seats friendly (probability `s^2`), so the threshold is the square root
/// of the informed one.
pub fn blind_share_threshold(r: f64, f: f64, theta: f64) -> f64 {
    informed_share_threshold(r, f, theta).sqrt()
}

/// Whether the informed threshold strictly exceeds the classical one-third
/// quorum bound. Algebraically `(R+F)/(R+theta+F) > 1/3  ⇔  R + F > theta/2`;
/// the comparison is implemented in the rearranged exact form so boundary
/// grids evaluate without rounding surprises.
pub fn beats_bft_informed(r: f64, f: f64, theta: f64) -> bool {
    r + f > theta / 2.0
}

/// Whether the blind threshold strictly exceeds one third:
/// `sqrt((R+F)/(R+theta+F)) > 1/3  ⇔  R + F > theta/8`.
pub fn beats_bft_blind(r: f64, f: f64, theta: f64) -> bool {
    r + f > theta / 8.0
}

// --- Fork attack profitability -----------------------------------------------

/// Expected profit of a staking fork attack at coalition share `s`, relative
/// to honest staking income, with chain reward scale `k`:
///
/// `profit(s) = s (-kR s^2 + (theta + kR) s - F)`
///
/// The attack stakes the coalition's share on a forked branch: it forfeits
/// honest income, wins the distortion payoff only when the coalition also
/// confirms, and pays the fine `F` when caught.
pub fn fork_attack_profit(s: f64, r: f64, f: f64, theta: f64, k: f64) -> f64 {
    s * (-k * r * s * s + (theta + k * r) * s - f)
}

/// Break-even shares of the fork attack. Present iff the precondition
/// `(kR + theta)^2 >= 4 F kR` holds (otherwise the quadratic factor has no
/// real roots and no share is profitable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForkProfitability {
    /// Smaller root of the quadratic factor: the lowest share at which the
    /// attack breaks even. May exceed 1 when only infeasible shares break
    /// even.
    pub s_low: f64,
    /// Larger root, clipped to the feasible share bound 1.
    pub s_high: f64,
}

/// Solves the quadratic factor of [`fork_attack_profit`] for its roots.
/// Returns `None` when the precondition `(kR + theta)^2 >= 4 F kR` fails.
/// Requires `k > 0` and `r > 0`.
pub fn fork_profitability(r: f64, f: f64, theta: f64, k: f64) -> Option<ForkProfitability> {
    debug_assert!(k > 0.0 && r > 0.0, "fork analysis needs positive k and R");
    let b = theta + k * r;
    let disc = b * b - 4.0 * f * k * r;
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    let s_low = (b - sqrt_disc) / (2.0 * k * r);
    let s_high = ((b + sqrt_disc) / (2.0 * k * r)).min(1.0);
    Some(ForkProfitability { s_low, s_high })
}

/// Open interval of *strictly* profitable feasible shares, or `None` when no
/// feasible share is strictly profitable (precondition fails, or the
/// interval collapses after clipping to `s <= 1`).
pub fn profitable_share_interval(r: f64, f: f64, theta: f64, k: f64) -> Option<(f64, f64)> {
    let roots = fork_profitability(r, f, theta, k)?;
    if roots.s_low < roots.s_high && roots.s_low < 1.0 {
        Some((roots.s_low, roots.s_high))
    } else {
        None
    }
}

// --- Patient coalition value recursion -----------------------------------------

/// Expected coalition value of the patient dispute strategy, by exact
/// backward induction over the without-replacement pair draw.
///
/// State `(a, h)`: `a` coalition and `h` honest nodes still eligible for
/// seat draws. Each round draws an ordered (proposer, confirmer) pair
/// without replacement:
///
/// * both coalition — commit the distorted block: value `R + theta`;
/// * coalition proposer, honest confirmer — the proposer picks the best of
///   proposing truth (`R`), attacking then conceding in the challenge
///   (`R - F`), or holding the dispute so both seats are fined and
///   excluded (`-F + V(a-1, h-1)`);
/// * honest proposer, coalition confirmer — the confirmer picks the best of
///   confirming truth (`0`) or disrupting and being excluded
///   (`-F + V(a-1, h-1)`);
/// * both honest — truth commits, the coalition gets `0`.
///
/// Terminal states: `V = 0` when `a = 0` or fewer than two nodes remain;
/// `V = R + theta` when `h = 0` and `a >= 2` (the next pair is certainly
/// all-coalition).
#[derive(Debug, Clone)]
pub struct PatientDp {
    pub reward: f64,
    pub fine: f64,
    pub theta: f64,
    /// `values[a][h]` for `a <= max_attackers`, `h <= max_honest`.
    values: Vec<Vec<f64>>,
}

impl PatientDp {
    /// Tabulates `V(a, h)` for all `a <= max_attackers`, `h <= max_honest`.
    pub fn solve(max_attackers: u32, max_honest: u32, reward: f64, fine: f64, theta: f64) -> PatientDp {
        let mut values = vec![vec![0.0f64; max_honest as usize + 1]; max_attackers as usize + 1];
        for a in 0..=max_attackers as usize {
            for h in 0..=max_honest as usize {
                values[a][h] = if a == 0 || a + h < 2 {
                    0.0
                } else if h == 0 {
                    reward + theta
                } else {
                    // a >= 1, h >= 1, a + h >= 2: draw an ordered pair.
                    let (af, hf) = (a as f64, h as f64);
                    let denom = (af + hf) * (af + hf - 1.0);
                    let v_next = values[a - 1][h - 1];
                    let p_both_coalition = af * (af - 1.0) / denom;
                    let p_coalition_proposer = af * hf / denom;
                    let p_coalition_confirmer = hf * af / denom;
                    let proposer_best = reward.max(reward - fine).max(-fine + v_next);
                    let confirmer_best = 0.0f64.max(-fine + v_next);
                    p_both_coalition * (reward + theta)
                        + p_coalition_proposer * proposer_best
                        + p_coalition_confirmer * confirmer_best
                }
            }
        }
        PatientDp {
            reward,
            fine,
            theta,
            values,
        }
    }

    /// `V(a, h)`. Panics if outside the tabulated range.
    pub fn value(&self, attackers: u32, honest: u32) -> f64 {
        self.values[attackers as usize][honest as usize]
    }

    /// Whether a coalition proposer facing an *honest* confirmer at state
    /// `(a, h)` (with `h >= 1`) prefers holding the dispute through the
    /// challenge over proposing truth: `-F + V(a-1, h-1) > R`, strictly.
    pub fn proposer_continues(&self, attackers: u32, honest: u32) -> bool {
        assert!(attackers >= 1 && honest >= 1, "needs one seat of each kind");
        -self.fine + self.value(attackers - 1, honest - 1) > self.reward
    }

    /// Whether a coalition confirmer facing an honest proposer at state
    /// `(a, h)` (with `h >= 1`) prefers disrupting over confirming truth:
    /// `-F + V(a-1, h-1) > 0`, strictly.
    pub fn confirmer_continues(&self, attackers: u32, honest: u32) -> bool {
        assert!(attackers >= 1 && honest >= 1, "needs one seat of each kind");
        -self.fine + self.value(attackers - 1, honest - 1) > 0.0
    }
}

/// Coarser aggregate recursion for the patient-coalition value, kept for
/// comparison with [`PatientDp`]. It weights each seat by the population
/// share `a / (a + h)` at every level *independently* — as if seats were
/// drawn with replacement — and nets the fine against the continuation value
/// inside the proposer's max:
///
/// `V(a,h) = (a/n) * ( max{ (a/n)(R+theta) - (h/n)(F - V(a-1,h-1)), R }
///                    + (h/n) * max{ V(a-1,h-1) - F, 0 } )`,  `n = a + h`.
///
/// Base cases fall back to the exact recursion's terminals (`0` when `a = 0`
/// or fewer than two nodes remain, `R + theta` when `h = 0`); entries in
/// `overrides` take precedence at any state. Calling with `a + h = 0` is a
/// domain error (the aggregate weights divide by the population); a
/// continuation that would empty the pool contributes value `0` without
/// recursing.
pub fn coarse_recursion_value(
    attackers: u32,
    honest: u32,
    reward: f64,
    fine: f64,
    theta: f64,
    overrides: &BTreeMap<(u32, u32), f64>,
) -> Result<f64, AnalyticsError> {
    if let Some(&v) = overrides.get(&(attackers, honest)) {
        return Ok(v);
    }
    if attackers + honest == 0 {
        return Err(AnalyticsError::EmptyPopulation);
    }
    if attackers == 0 || attackers + honest < 2 {
        return Ok(0.0);
    }
    if honest == 0 {
        return Ok(reward + theta);
    }
    let (af, hf) = (attackers as f64, honest as f64);
    let n = af + hf;
    let v_next = if attackers == 1 && honest == 1 {
        0.0
    } else {
        coarse_recursion_value(attackers - 1, honest - 1, reward, fine, theta, overrides)?
    };
    let proposer_term = ((af / n) * (reward + theta) - (hf / n) * (fine - v_next)).max(reward);
    let confirmer_term = (hf / n) * (v_next - fine).max(0.0);
    Ok((af / n) * (proposer_term + confirmer_term))
}

/// Side-by-side evaluation of the exact pair-draw recursion and the coarse
/// aggregate recursion at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueComparison {
    pub attackers: u32,
    pub honest: u32,
    pub exact: f64,
    pub coarse: f64,
}

impl ValueComparison {
    pub fn abs_difference(&self) -> f64 {
        (self.exact - self.coarse).abs()
    }
}

/// Computes both recursions at `(attackers, honest)` with shared parameters.
pub fn compare_patient_values(
    attackers: u32,
    honest: u32,
    reward: f64,
    fine: f64,
    theta: f64,
) -> Result<ValueComparison, AnalyticsError> {
    let dp = PatientDp::solve(attackers, honest, reward, fine, theta);
    let coarse = coarse_recursion_value(attackers, honest, reward, fine, theta, &BTreeMap::new())?;
    Ok(ValueComparison {
        attackers,
        honest,
        exact: dp.value(attackers, honest),
        coarse,
    })
}

// --- Deterrence conditions ------------------------------------------------------

/// Fine level that deters a coalition of `x + 1` nodes from grinding down a
/// single remaining honest node: requires `(x + 1) * theta < F`, strictly.
pub fn penultimate_deterrence(x: u32, theta: f64, fine: f64) -> bool {
    (x as f64 + 1.0) * theta < fine
}

/// Blanket sufficient condition covering every coalition size when fines
/// escalate at least linearly: `F > (3/2) * theta`, strictly.
pub fn blanket_deterrence(theta: f64, fine: f64) -> bool {
    fine > 1.5 * theta
}

// --- Threshold summary rows -------------------------------------------------------

/// One row of the threshold summary table produced by the CLI: share
/// thresholds, quorum comparisons, and fork break-even shares for a single
/// parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub r: f64,
    pub f: f64,
    pub theta: f64,
    pub k: f64,
    pub thr_informed: f64,
    pub thr_blind: f64,
    pub beats_bft_informed: bool,
    pub beats_bft_blind: bool,
    /// Break-even shares; `None` when the fork precondition fails.
    pub fork_s_low: Option<f64>,
    pub fork_s_high: Option<f64>,
    /// Whether `(kR + theta)^2 >= 4 F kR` holds.
    pub precondition: bool,
}

/// Evaluates every analytic quantity at one parameter point.
pub fn threshold_row(r: f64, f: f64, theta: f64, k: f64) -> ThresholdRow {
    let roots = fork_profitability(r, f, theta, k);
    ThresholdRow {
        r,
        f,
        theta,
        k,
        thr_informed: informed_share_threshold(r, f, theta),
        thr_blind: blind_share_threshold(r, f, theta),
        beats_bft_informed: beats_bft_informed(r, f, theta),
        beats_bft_blind: beats_bft_blind(r, f, theta),
        fork_s_low: roots.map(|x| x.s_low),
        fork_s_high: roots.map(|x| x.s_high),
        precondition: roots.is_some(),
    }
}
