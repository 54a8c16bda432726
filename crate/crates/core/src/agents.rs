//! Behavioral policies for the nodes participating in commit rounds and
//! fork-dispute procedures.
//!
//! Policies are deliberately *pure*: every decision is a deterministic
//! function of the decision context, so replications are reproducible and
//! all randomness stays in the harness (seat draws, chance moves, random
//! script generation). Three families are provided:
//!
//! * [`AgentPolicy::Honest`] nodes report truthfully everywhere and escalate
//!   disputes exactly when the disputed content fails verification;
//! * [`AgentPolicy::Attacker`] nodes pursue a coalition's distorted content,
//!   either as one-shot expected-value maximizers (informed or blind) or as
//!   a patient coalition playing the exact dispute-value recursion
//!   ([`PatientDp`]);
//! * [`AgentPolicy::Scripted`] nodes replay fixed decision sequences, used to
//!   fuzz the dispute mechanisms with arbitrary (including irrational)
//!   behavior.

use crate::analytics::PatientDp;
use crate::ledger::ForkSide;
use crate::sr::Message;

/// Index of a node within a scenario population.
pub type NodeId = usize;
/// Identifier of a coalition; all members promote the same distorted content.
pub type CoalitionId = u32;

/// Which seat of a commit round a decision is made from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seat {
    Proposer,
    Confirmer,
}

/// Context for choosing a commit-round message (initial or challenge stage).
#[derive(Debug, Clone, Copy)]
pub struct MessageContext {
    pub seat: Seat,
    /// Commit reward R.
    pub reward: f64,
    /// Fine level F in force for this round.
    pub fine: f64,
    /// Coalition share `s` of the drawing population (common knowledge).
    pub coalition_share: f64,
    /// Partner seat's coalition membership when seats are informed;
    /// `None` when the draw is blind.
    pub partner_in_coalition: Option<bool>,
    /// Remaining coalition nodes eligible for seat draws.
    pub attackers_remaining: u32,
    /// Remaining honest nodes eligible for seat draws.
    pub honest_remaining: u32,
    /// Harness override: attackers send their distorted message
    /// unconditionally (used to measure payoffs on both sides of a
    /// profitability threshold). Honest agents ignore it.
    pub forced_attack: bool,
}

/// Context for a per-transaction dispute decision (either role).
#[derive(Debug, Clone, Copy)]
pub struct TxDisputeContext {
    /// Whether the disputed transaction verifies against the resolved
    /// content accumulated so far.
    pub tx_valid_in_context: bool,
}

/// Context for naming a branch in the allocation-dispute procedure.
#[derive(Debug, Clone, Copy)]
pub struct ChainNamingContext {
    /// The honestly-extended branch.
    pub true_side: ForkSide,
    /// Branch the agent's coalition promotes; equals `true_side` for honest
    /// agents.
    pub goal_side: ForkSide,
    /// Whether the opposing node belongs to the same coalition.
    pub opponent_in_same_coalition: bool,
}

/// Context for the assert-or-concede decision after branch namings disagree.
#[derive(Debug, Clone, Copy)]
pub struct AllocAssertContext {
    pub true_side: ForkSide,
    /// The branch the opposing node named; conceding confirms it.
    pub opponent_named: ForkSide,
}

/// How an attacking coalition plays commit rounds.
#[derive(Debug, Clone)]
pub enum AttackVariant {
    /// Attacks iff the one-shot expected value beats honest play, knowing
    /// which nodes the coalition controls: `s (R + theta) - (1 - s) F > R`.
    OneShotInformed,
    /// Same decision, but a distorted commit needs both seats friendly:
    /// `s^2 (R + theta) - (1 - s^2) F > R`.
    OneShotBlind,
    /// Plays the exact backward-induction dispute policy, paying fines to
    /// stay in the draw pool when the continuation value warrants it.
    Patient(PatientDp),
}

/// Parameters of an attacking node.
#[derive(Debug, Clone)]
pub struct AttackerPolicy {
    pub coalition: CoalitionId,
    /// Utility of getting the distorted content committed/confirmed.
    pub theta: f64,
    /// Strict-but-tiny aversion to burned value (tokens or fines), used by
    /// the game builders' utility model to rank otherwise-equal outcomes
    /// toward the non-burn one. Simulation payoffs are token-exact and
    /// never include it.
    pub burn_aversion: f64,
    pub variant: AttackVariant,
}

/// Fixed decision sequences for a scripted node. Each sequence is consumed
/// front to back and repeats its last entry once only one remains; querying
/// an empty sequence panics (a script authoring error).
#[derive(Debug, Clone, Default)]
pub struct Script {
    pub block_messages: Vec<Message>,
    pub challenge_messages: Vec<Message>,
    pub confirm_invalid: Vec<bool>,
    pub assert_tx: Vec<bool>,
    pub name_chain: Vec<ForkSide>,
    pub assert_alloc: Vec<bool>,
}

fn script_next<T: Clone>(kind: &str, seq: &mut Vec<T>) -> T {
    assert!(!seq.is_empty(), "scripted agent has no `{kind}` entries");
    if seq.len() > 1 {
        seq.remove(0)
    } else {
        seq[0].clone()
    }
}

/// A node's complete behavioral rule.
#[derive(Debug, Clone)]
pub enum AgentPolicy {
    /// Truthful node with chain-quality preferences `H > D > 0`: utility
    /// `+H` when the true chain prevails, `-D` when a distorted one does.
    Honest {
        true_chain_utility: f64,
        false_chain_disutility: f64,
    },
    Attacker(AttackerPolicy),
    Scripted(Script),
}

impl AgentPolicy {
    /// Honest policy; enforces `H > D > 0`.
    pub fn honest(true_chain_utility: f64, false_chain_disutility: f64) -> AgentPolicy {
        assert!(
            true_chain_utility > false_chain_disutility && false_chain_disutility > 0.0,
            "honest preferences require H > D > 0"
        );
        AgentPolicy::Honest {
            true_chain_utility,
            false_chain_disutility,
        }
    }

    pub fn coalition(&self) -> Option<CoalitionId> {
        match self {
            AgentPolicy::Attacker(a) => Some(a.coalition),
            _ => None,
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, AgentPolicy::Honest { .. })
    }

    /// Message sent from a commit-round seat, before seeing the partner's.
    pub fn block_message(&mut self, ctx: &MessageContext) -> Message {
        match self {
            AgentPolicy::Honest { .. } => Message::Truth,
            AgentPolicy::Scripted(s) => script_next("block_messages", &mut s.block_messages),
            AgentPolicy::Attacker(a) => {
                if ctx.forced_attack || attacker_distorts(a, ctx) {
                    Message::Preferred(a.coalition)
                } else {
                    Message::Truth
                }
            }
        }
    }

    /// Revision sent by the proposer at the challenge stage, after the
    /// initial messages mismatched.
    pub fn challenge_message(&mut self, ctx: &MessageContext) -> Message {
        match self {
            AgentPolicy::Honest { .. } => Message::Truth,
            AgentPolicy::Scripted(s) => {
                script_next("challenge_messages", &mut s.challenge_messages)
            }
            AgentPolicy::Attacker(a) => match &a.variant {
                // A one-shot attack is a commitment: its expected-value
                // calculation already charges the full fine on failure, so
                // the attacker does not concede at the challenge stage.
                AttackVariant::OneShotInformed | AttackVariant::OneShotBlind => {
                    Message::Preferred(a.coalition)
                }
                AttackVariant::Patient(plan) => {
                    let friendly = ctx.partner_in_coalition
                        .expect("patient policy requires informed seats");
                    // Holding the dispute burns the (already-sunk) fine and
                    // moves play to the post-exclusion state; conceding
                    // commits truth for the reward.
                    let next = plan.value(
                        ctx.attackers_remaining.saturating_sub(1),
                        ctx.honest_remaining.saturating_sub(1),
                    );
                    if friendly || next > ctx.reward {
                        Message::Preferred(a.coalition)
                    } else {
                        Message::Truth
                    }
                }
            },
        }
    }

    /// Dispute-opening decision by the node *lacking* a transaction: `true`
    /// escalates (claims the transaction invalid, both nodes fined), `false`
    /// accepts it into the resolved content.
    pub fn confirm_tx_invalid(&mut self, ctx: &TxDisputeContext) -> bool {
        match self {
            AgentPolicy::Honest { .. } => !ctx.tx_valid_in_context,
            AgentPolicy::Scripted(s) => script_next("confirm_invalid", &mut s.confirm_invalid),
            // Escalating a transaction that verifies is futile against an
            // asserting holder (it stays and the fine is lost), while a
            // transaction that fails verification is voided at application
            // time regardless — so the profit-maximizing rule coincides
            // with the honest one.
            AgentPolicy::Attacker(_) => !ctx.tx_valid_in_context,
        }
    }

    /// Holder's decision after an escalated transaction dispute: `true`
    /// asserts the transaction (it is retained, both fines burned), `false`
    /// withdraws it (it is discarded, the challenger refunded).
    pub fn assert_tx(&mut self, ctx: &TxDisputeContext) -> bool {
        match self {
            AgentPolicy::Honest { .. } => ctx.tx_valid_in_context,
            AgentPolicy::Scripted(s) => script_next("assert_tx", &mut s.assert_tx),
            // Asserting a transaction that would be voided anyway burns the
            // challenger's fine for no gain; asserting a verifying one keeps
            // the coalition's content alive. Again identical to honest play.
            AgentPolicy::Attacker(_) => ctx.tx_valid_in_context,
        }
    }

    /// Branch named as correct in the allocation-dispute procedure.
    pub fn name_chain(&mut self, ctx: &ChainNamingContext) -> ForkSide {
        match self {
            AgentPolicy::Honest { .. } => ctx.true_side,
            AgentPolicy::Scripted(s) => script_next("name_chain", &mut s.name_chain),
            AgentPolicy::Attacker(_) => {
                if ctx.opponent_in_same_coalition {
                    // A friendly opponent names the same branch: the
                    // distorted allocation is confirmed without fines.
                    ctx.goal_side
                } else {
                    // Against independent opposition, disagreeing costs a
                    // fine and ends in a token burn or the true branch —
                    // never the goal branch — so concede upfront.
                    ctx.true_side
                }
            }
        }
    }

    /// Assert-or-concede decision after branch namings disagree: `true`
    /// insists on the disagreement (disputed allocations are burned),
    /// `false` concedes (the opponent's named branch is confirmed).
    pub fn assert_alloc(&mut self, ctx: &AllocAssertContext) -> bool {
        match self {
            // Concede only when the opponent named the true branch;
            // otherwise a burn is preferred to confirming a distortion.
            AgentPolicy::Honest { .. } => ctx.opponent_named != ctx.true_side,
            AgentPolicy::Scripted(s) => script_next("assert_alloc", &mut s.assert_alloc),
            // Asserting can only burn the disputed tokens, never confirm
            // the goal branch, and burns are ranked strictly worst.
            AgentPolicy::Attacker(_) => false,
        }
    }
}

/// One-shot distortion decision: expected value of attacking at coalition
/// share `s` (success probability `s` informed, `s^2` blind) against the
/// sure reward `R` for honest play. Strict inequality: indifference plays
/// honest. The patient variant instead consults its tabulated policy.
fn attacker_distorts(a: &AttackerPolicy, ctx: &MessageContext) -> bool {
    match &a.variant {
        AttackVariant::OneShotInformed => {
            let s = ctx.coalition_share;
            s * (ctx.reward + a.theta) - (1.0 - s) * ctx.fine > ctx.reward
        }
        AttackVariant::OneShotBlind => {
            let p = ctx.coalition_share * ctx.coalition_share;
            p * (ctx.reward + a.theta) - (1.0 - p) * ctx.fine > ctx.reward
        }
        AttackVariant::Patient(plan) => {
            let friendly = ctx.partner_in_coalition
                .expect("patient policy requires informed seats");
            if friendly {
                return true;
            }
            match ctx.seat {
                Seat::Proposer => {
                    plan.proposer_continues(ctx.attackers_remaining, ctx.honest_remaining)
                }
                Seat::Confirmer => {
                    plan.confirmer_continues(ctx.attackers_remaining, ctx.honest_remaining)
                }
            }
        }
    }
}
