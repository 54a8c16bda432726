//! The fine-backed commit round: a proposer and a confirmer are drawn at
//! random, independently report the next block, and matching reports commit.
//!
//! A mismatch fines both seats and opens a *challenge* stage in which the
//! proposer may send one revision; a revision matching the confirmer's
//! original report commits it (the confirmer's fine is refunded, the
//! proposer's is burned), anything else burns both fines and excludes both
//! nodes from further draws. The process then repeats with a fresh pair and
//! the fine level given by the [`FineSchedule`].
//!
//! Payoffs recorded here are *token flows only* — rewards, fines, refunds.
//! Private attack utilities and chain-quality preferences live in the agent
//! and scenario layers.

use crate::agents::{AgentPolicy, MessageContext, NodeId, Seat};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Content of a block report. The mechanism never inspects content; it only
/// compares reports for equality of meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    /// The honest continuation of the chain.
    Truth,
    /// The distorted block promoted by the given coalition.
    Preferred(u32),
    /// A freshly fabricated block nobody else has seen. Every `Fresh` is a
    /// distinct object, so it matches nothing — not even another `Fresh`.
    Fresh,
}

impl Message {
    /// Report equality as the mechanism sees it.
    pub fn matches(&self, other: &Message) -> bool {
        match (self, other) {
            (Message::Truth, Message::Truth) => true,
            (Message::Preferred(i), Message::Preferred(j)) => i == j,
            _ => false,
        }
    }
}

impl std::fmt::Display for Message {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Message::Truth => write!(f, "truth"),
            Message::Preferred(k) => write!(f, "preferred({k})"),
            Message::Fresh => write!(f, "fresh"),
        }
    }
}

/// Fine level as a function of the 0-based dispute round index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineSchedule {
    /// The same fine every round.
    Constant(f64),
    /// `base + step * round`.
    Linear { base: f64, step: f64 },
    /// `base * factor^round`.
    Geometric { base: f64, factor: f64 },
}

impl FineSchedule {
    pub fn fine(&self, round: u32) -> f64 {
        match *self {
            FineSchedule::Constant(f) => f,
            FineSchedule::Linear { base, step } => base + step * round as f64,
            FineSchedule::Geometric { base, factor } => base * factor.powi(round as i32),
        }
    }
}

/// Parameters of the commit mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundParams {
    /// Reward paid to the proposer on a commit.
    pub reward: f64,
    pub fine_schedule: FineSchedule,
}

/// How much each seat can observe when deciding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeatVisibility {
    /// Seats know whether the partner belongs to their coalition.
    Informed,
    /// Seats cannot tell friend from stranger.
    Blind,
}

/// Outcome of a single proposer/confirmer round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    /// 0-based index within the enclosing dispute process.
    pub round: u32,
    pub proposer: NodeId,
    pub confirmer: NodeId,
    /// Whether the initial reports matched.
    pub matched: bool,
    /// Whether the challenge stage was reached.
    pub challenged: bool,
    /// Content committed this round; `None` means both seats were excluded.
    pub committed: Option<Message>,
    /// Token flows per node (reward, fines, refunds) for this round.
    pub payoffs: BTreeMap<NodeId, f64>,
    pub fines_collected: f64,
    pub fines_refunded: f64,
    pub fines_burned: f64,
}

/// Outcome of running rounds until something commits (or the pool empties).
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessResult {
    pub rounds: Vec<RoundResult>,
    /// Content finally committed, or `None` if the pool was exhausted.
    pub committed: Option<Message>,
    /// Token flows summed across all rounds.
    pub total_payoffs: BTreeMap<NodeId, f64>,
    /// True when fewer than two nodes remained before any commit.
    pub exhausted: bool,
}

fn draw_pair<R: Rng>(rng: &mut R, active: &[NodeId]) -> (NodeId, NodeId) {
    assert!(active.len() >= 2, "a round needs at least two active nodes");
    let i = rng.gen_range(0..active.len());
    let mut j = rng.gen_range(0..active.len() - 1);
    if j >= i {
        j += 1;
    }
    (active[i], active[j])
}

/// Whether `partner` is friendly from `decider`'s perspective: for a
/// coalition member, membership in the *same* coalition; for anyone else,
/// membership in any coalition (the honest policies ignore the field).
fn friendly(decider: &AgentPolicy, partner: &AgentPolicy) -> bool {
    match decider.coalition() {
        Some(k) => partner.coalition() == Some(k),
        None => partner.coalition().is_some(),
    }
}

#[allow(clippy::too_many_arguments)]
fn message_context(
    policies: &[AgentPolicy],
    active: &[NodeId],
    me: NodeId,
    partner: NodeId,
    seat: Seat,
    reward: f64,
    fine: f64,
    visibility: SeatVisibility,
    forced_attack: bool,
) -> MessageContext {
    let attackers = active
        .iter()
        .filter(|&&n| policies[n].coalition().is_some())
        .count() as u32;
    let honest = active.len() as u32 - attackers;
    MessageContext {
        seat,
        reward,
        fine,
        coalition_share: attackers as f64 / active.len() as f64,
        partner_in_coalition: match visibility {
            SeatVisibility::Informed => Some(friendly(&policies[me], &policies[partner])),
            SeatVisibility::Blind => None,
        },
        attackers_remaining: attackers,
        honest_remaining: honest,
        forced_attack,
    }
}

/// Runs one round with the pair drawn uniformly without replacement from
/// `active` (proposer first). `round` selects the fine level and is recorded
/// in the result.
#[allow(clippy::too_many_arguments)]
pub fn run_round<R: Rng>(
    params: &RoundParams,
    policies: &mut [AgentPolicy],
    active: &[NodeId],
    round: u32,
    visibility: SeatVisibility,
    forced_attack: bool,
    rng: &mut R,
) -> RoundResult {
    let (proposer, confirmer) = draw_pair(rng, active);
    run_round_with_pair(
        params,
        policies,
        active,
        round,
        visibility,
        forced_attack,
        proposer,
        confirmer,
    )
}

/// [`run_round`] with the pair fixed by the caller (used by scenarios that
/// condition on the pair composition, and by tests).
#[allow(clippy::too_many_arguments)]
pub fn run_round_with_pair(
    params: &RoundParams,
    policies: &mut [AgentPolicy],
    active: &[NodeId],
    round: u32,
    visibility: SeatVisibility,
    forced_attack: bool,
    proposer: NodeId,
    confirmer: NodeId,
) -> RoundResult {
    assert_ne!(proposer, confirmer, "seats must be distinct nodes");
    let fine = params.fine_schedule.fine(round);
    let reward = params.reward;

    let p_ctx = message_context(
        policies, active, proposer, confirmer, Seat::Proposer, reward, fine, visibility,
        forced_attack,
    );
    let c_ctx = message_context(
        policies, active, confirmer, proposer, Seat::Confirmer, reward, fine, visibility,
        forced_attack,
    );
    let m_p = policies[proposer].block_message(&p_ctx);
    let m_c = policies[confirmer].block_message(&c_ctx);

    let mut payoffs: BTreeMap<NodeId, f64> = BTreeMap::new();
    payoffs.insert(proposer, 0.0);
    payoffs.insert(confirmer, 0.0);

    if m_p.matches(&m_c) {
        *payoffs.get_mut(&proposer).unwrap() += reward;
        return RoundResult {
            round,
            proposer,
            confirmer,
            matched: true,
            challenged: false,
            committed: Some(m_c),
            payoffs,
            fines_collected: 0.0,
            fines_refunded: 0.0,
            fines_burned: 0.0,
        };
    }

    // Mismatch: fine both seats, then let the proposer revise once.
    *payoffs.get_mut(&proposer).unwrap() -= fine;
    *payoffs.get_mut(&confirmer).unwrap() -= fine;
    let revision = policies[proposer].challenge_message(&p_ctx);

    if revision.matches(&m_c) {
        // Agreement restored: commit the confirmer's report. The confirmer
        // is made whole; the proposer keeps the reward net of its fine.
        *payoffs.get_mut(&proposer).unwrap() += reward;
        *payoffs.get_mut(&confirmer).unwrap() += fine;
        RoundResult {
            round,
            proposer,
            confirmer,
            matched: false,
            challenged: true,
            committed: Some(m_c),
            payoffs,
            fines_collected: 2.0 * fine,
            fines_refunded: fine,
            fines_burned: fine,
        }
    } else {
        RoundResult {
            round,
            proposer,
            confirmer,
            matched: false,
            challenged: true,
            committed: None,
            payoffs,
            fines_collected: 2.0 * fine,
            fines_refunded: 0.0,
            fines_burned: 2.0 * fine,
        }
    }
}

/// Repeats rounds — excluding both seats after each failed challenge — until
/// some content commits, the active pool drops below two, or `max_rounds`
/// is hit.
pub fn run_until_commit<R: Rng>(
    params: &RoundParams,
    policies: &mut [AgentPolicy],
    visibility: SeatVisibility,
    max_rounds: u32,
    rng: &mut R,
) -> ProcessResult {
    let mut active: Vec<NodeId> = (0..policies.len()).collect();
    let mut rounds = Vec::new();
    let mut total_payoffs: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut committed = None;
    let mut exhausted = false;

    for round in 0..max_rounds {
        if active.len() < 2 {
            exhausted = true;
            break;
        }
        let result = run_round(params, policies, &active, round, visibility, false, rng);
        for (&node, &flow) in &result.payoffs {
            *total_payoffs.entry(node).or_insert(0.0) += flow;
        }
        let done = result.committed.is_some();
        if !done {
            active.retain(|&n| n != result.proposer && n != result.confirmer);
        }
        committed = result.committed;
        rounds.push(result);
        if done {
            break;
        }
    }
    if committed.is_none() && active.len() < 2 {
        exhausted = true;
    }
    ProcessResult {
        rounds,
        committed,
        total_payoffs,
        exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AttackVariant, AttackerPolicy, Script};
    use crate::analytics::PatientDp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn params(reward: f64, fine: f64) -> RoundParams {
        RoundParams {
            reward,
            fine_schedule: FineSchedule::Constant(fine),
        }
    }

    fn honest() -> AgentPolicy {
        AgentPolicy::honest(2.0, 1.0)
    }

    fn forced_attacker() -> AgentPolicy {
        AgentPolicy::Attacker(AttackerPolicy {
            coalition: 0,
            theta: 1.0,
            burn_aversion: 1e-6,
            variant: AttackVariant::OneShotInformed,
        })
    }

    #[test]
    fn message_matching_rules() {
        assert!(Message::Truth.matches(&Message::Truth));
        assert!(Message::Preferred(0).matches(&Message::Preferred(0)));
        assert!(!Message::Preferred(0).matches(&Message::Preferred(1)));
        assert!(!Message::Truth.matches(&Message::Preferred(0)));
        // Every fabricated block is distinct: Fresh matches nothing.
        assert!(!Message::Fresh.matches(&Message::Fresh));
        assert!(!Message::Fresh.matches(&Message::Truth));
    }

    #[test]
    fn fine_schedules() {
        assert_eq!(FineSchedule::Constant(1.5).fine(7), 1.5);
        let lin = FineSchedule::Linear { base: 1.0, step: 0.5 };
        assert_eq!(lin.fine(0), 1.0);
        assert_eq!(lin.fine(3), 2.5);
        let geo = FineSchedule::Geometric { base: 1.0, factor: 2.0 };
        assert_eq!(geo.fine(0), 1.0);
        assert_eq!(geo.fine(3), 8.0);
    }

    #[test]
    fn honest_pair_commits_truth_with_reward() {
        let mut policies = vec![honest(), honest()];
        let r = run_round_with_pair(
            &params(1.0, 1.0), &mut policies, &[0, 1], 0,
            SeatVisibility::Informed, false, 0, 1,
        );
        assert!(r.matched);
        assert_eq!(r.committed, Some(Message::Truth));
        assert_eq!(r.payoffs[&0], 1.0);
        assert_eq!(r.payoffs[&1], 0.0);
        assert_eq!(r.fines_collected, 0.0);
    }

    #[test]
    fn held_dispute_burns_both_fines_and_commits_nothing() {
        let mut policies = vec![forced_attacker(), honest()];
        let r = run_round_with_pair(
            &params(1.0, 1.5), &mut policies, &[0, 1], 0,
            SeatVisibility::Informed, true, 0, 1,
        );
        assert!(!r.matched && r.challenged);
        assert_eq!(r.committed, None);
        assert_eq!(r.payoffs[&0], -1.5);
        assert_eq!(r.payoffs[&1], -1.5);
        assert_eq!(r.fines_burned, 3.0);
        assert_eq!(r.fines_refunded, 0.0);
    }

    #[test]
    fn successful_challenge_commits_the_confirmers_report() {
        // Scripted proposer opens with a distortion, then concedes.
        let script = AgentPolicy::Scripted(Script {
            block_messages: vec![Message::Preferred(0)],
            challenge_messages: vec![Message::Truth],
            ..Script::default()
        });
        let mut policies = vec![script, honest()];
        let r = run_round_with_pair(
            &params(1.0, 0.5), &mut policies, &[0, 1], 0,
            SeatVisibility::Informed, false, 0, 1,
        );
        assert!(!r.matched && r.challenged);
        assert_eq!(r.committed, Some(Message::Truth));
        assert_eq!(r.payoffs[&0], 0.5); // R - F
        assert_eq!(r.payoffs[&1], 0.0); // fined then refunded
        assert_eq!(r.fines_collected, 1.0);
        assert_eq!(r.fines_refunded, 0.5);
        assert_eq!(r.fines_burned, 0.5);
    }

    #[test]
    fn below_threshold_one_shot_plays_truth_and_commits() {
        // Share 1/2 is below the informed threshold 2/3 at R=F=theta=1.
        let mut policies = vec![forced_attacker(), honest()];
        let r = run_round_with_pair(
            &params(1.0, 1.0), &mut policies, &[0, 1], 0,
            SeatVisibility::Informed, false, 0, 1,
        );
        assert_eq!(r.committed, Some(Message::Truth));
        assert_eq!(r.fines_collected, 0.0);
    }

    #[test]
    fn fines_accounting_balances() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for trial in 0..200u64 {
            let mut policies = vec![forced_attacker(), honest(), honest(), forced_attacker()];
            let active: Vec<NodeId> = (0..policies.len()).collect();
            let r = run_round(
                &params(1.0, 2.0), &mut policies, &active, 0,
                SeatVisibility::Informed, trial % 2 == 0, &mut rng,
            );
            assert!(
                (r.fines_collected - (r.fines_refunded + r.fines_burned)).abs() < 1e-12,
                "fines must be refunded or burned"
            );
            assert!(active.contains(&r.proposer) && active.contains(&r.confirmer));
            assert_ne!(r.proposer, r.confirmer);
        }
    }

    #[test]
    fn pair_draw_reaches_every_ordered_pair() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let active = [0usize, 1, 2];
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..10_000 {
            seen.insert(draw_pair(&mut rng, &active));
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn patient_majority_coalition_always_commits_distortion() {
        // (a=3, h=1) with R=1, F=0.5, theta=1: every pair composition leads
        // to the distorted commit within two rounds.
        let plan = PatientDp::solve(4, 4, 1.0, 0.5, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..100 {
            let mut policies = vec![
                AgentPolicy::Attacker(AttackerPolicy {
                    coalition: 0,
                    theta: 1.0,
                    burn_aversion: 1e-6,
                    variant: AttackVariant::Patient(plan.clone()),
                }),
                AgentPolicy::Attacker(AttackerPolicy {
                    coalition: 0,
                    theta: 1.0,
                    burn_aversion: 1e-6,
                    variant: AttackVariant::Patient(plan.clone()),
                }),
                AgentPolicy::Attacker(AttackerPolicy {
                    coalition: 0,
                    theta: 1.0,
                    burn_aversion: 1e-6,
                    variant: AttackVariant::Patient(plan.clone()),
                }),
                honest(),
            ];
            let result = run_until_commit(
                &params(1.0, 0.5), &mut policies, SeatVisibility::Informed, 16, &mut rng,
            );
            assert_eq!(result.committed, Some(Message::Preferred(0)));
            assert!(result.rounds.len() <= 2);
            assert!(!result.exhausted);
        }
    }

    #[test]
    fn deterred_patient_coalition_commits_truth_immediately() {
        // (a=2, h=2) with R=1, F=2, theta=1: the continuation is not worth a
        // fine on either seat, so the first round commits truth.
        let plan = PatientDp::solve(4, 4, 1.0, 2.0, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut policies = vec![
                AgentPolicy::Attacker(AttackerPolicy {
                    coalition: 0,
                    theta: 1.0,
                    burn_aversion: 1e-6,
                    variant: AttackVariant::Patient(plan.clone()),
                }),
                AgentPolicy::Attacker(AttackerPolicy {
                    coalition: 0,
                    theta: 1.0,
                    burn_aversion: 1e-6,
                    variant: AttackVariant::Patient(plan.clone()),
                }),
                honest(),
                honest(),
            ];
            let result = run_until_commit(
                &params(1.0, 2.0), &mut policies, SeatVisibility::Informed, 16, &mut rng,
            );
            // Unless both seats land on coalition nodes (who then win), the
            // round is an immediate truthful commit.
            assert_eq!(result.rounds.len(), 1);
            let both_coalition = policies[result.rounds[0].proposer].coalition().is_some()
                && policies[result.rounds[0].confirmer].coalition().is_some();
            if both_coalition {
                assert_eq!(result.committed, Some(Message::Preferred(0)));
            } else {
                assert_eq!(result.committed, Some(Message::Truth));
            }
        }
    }
}
