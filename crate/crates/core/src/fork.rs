//! Fork resolution by fine-backed disputes, in two flavors.
//!
//! **Per-transaction disputes** ([`resolve_fork_tx`]): the diff between the
//! branches is processed one disputed transaction at a time, in timestamp
//! order. The node whose branch *lacks* a transaction is asked to accept it
//! or escalate; escalation fines both nodes and puts the holder on the spot
//! to assert (transaction retained, both fines burned) or withdraw it
//! (transaction discarded, the challenger refunded). Retained content is
//! finally replayed in timestamp order with failing transactions voided.
//!
//! **Whole-allocation disputes** ([`resolve_fork_alloc`]): both nodes name
//! the branch they consider correct. Agreement confirms it outright;
//! disagreement fines both, and a coin flip picks one node to either insist
//! (the contested balances are burned) or concede (the opponent's named
//! branch is confirmed). Requires equal-length branches.
//!
//! Payoffs recorded here are token flows for the two disputing nodes only;
//! interpreting an outcome as an attack success or failure is left to the
//! caller.

use crate::agents::{AgentPolicy, AllocAssertContext, ChainNamingContext, TxDisputeContext};
use crate::ledger::{
    diff_forks, resolve_content, Chain, Fork, ForkSide, LedgerError, TokenAllocation, Transaction,
    TxId,
};
use rand::Rng;
use std::collections::BTreeMap;

/// What kind of item a dispute record refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisputeKind {
    Transaction,
    Allocation,
}

impl std::fmt::Display for DisputeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DisputeKind::Transaction => write!(f, "tx"),
            DisputeKind::Allocation => write!(f, "alloc"),
        }
    }
}

/// One dispute event, suitable for a trace table.
#[derive(Debug, Clone, PartialEq)]
pub struct DisputeRecord {
    /// Transaction id, or the contested accounts joined with `+`.
    pub item: String,
    pub kind: DisputeKind,
    /// Whether the dispute was escalated beyond the initial query.
    pub disputed: bool,
    /// The side that made the assert-or-withdraw decision, if any.
    pub asserter: Option<ForkSide>,
    /// `retained`, `discarded`, `confirmed_a`, `confirmed_b`, or `burned`.
    pub resolution: String,
    pub fines_burned: f64,
}

/// Outcome of per-transaction fork resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct TxResolution {
    /// Common prefix plus one block of resolved post-fork content.
    pub chain: Chain,
    /// Disputed transactions kept by their dispute outcome.
    pub retained: Vec<TxId>,
    /// Disputed transactions withdrawn under escalation.
    pub discarded: Vec<TxId>,
    /// Transactions kept by disputes (or common) but void at replay time.
    pub voided: Vec<TxId>,
    pub final_state: TokenAllocation,
    pub trace: Vec<DisputeRecord>,
    /// Token flows of the two disputing nodes (fines and refunds).
    pub payoffs: BTreeMap<ForkSide, f64>,
    pub fines_collected: f64,
    pub fines_refunded: f64,
    pub fines_burned: f64,
}

/// Resolves a fork transaction-by-transaction. `node_a` champions branch A
/// (it holds A's transactions and is queried about B's), and vice versa.
/// Deterministic: no chance moves are involved.
pub fn resolve_fork_tx(
    fork: &Fork,
    fine: f64,
    node_a: &mut AgentPolicy,
    node_b: &mut AgentPolicy,
) -> Result<TxResolution, LedgerError> {
    let diff = diff_forks(fork)?;
    let base = fork.ancestor_state();
    // Content already agreed on: every common transaction, at its earlier
    // observed timestamp.
    let mut accepted: Vec<Transaction> = diff
        .common
        .iter()
        .map(|c| {
            let mut tx = c.tx.clone();
            tx.timestamp = c.confirmed_timestamp;
            tx
        })
        .collect();

    let mut trace = Vec::new();
    let mut retained = Vec::new();
    let mut discarded = Vec::new();
    let mut payoffs: BTreeMap<ForkSide, f64> = [(ForkSide::A, 0.0), (ForkSide::B, 0.0)].into();
    let (mut collected, mut refunded, mut burned) = (0.0, 0.0, 0.0);

    for (holder_side, tx) in diff.disputed_in_order() {
        let asker_side = holder_side.other();
        // Validity in context: against the resolved content that precedes
        // this transaction in (timestamp, id) order.
        let preceding: Vec<Transaction> = accepted
            .iter()
            .filter(|t| (t.timestamp, &t.id) < (tx.timestamp, &tx.id))
            .cloned()
            .collect();
        let state = resolve_content(&base, preceding).final_state;
        let ctx = TxDisputeContext {
            tx_valid_in_context: crate::ledger::validate_transaction(tx, &state),
        };

        let (asker, holder) = match holder_side {
            ForkSide::A => (&mut *node_b, &mut *node_a),
            ForkSide::B => (&mut *node_a, &mut *node_b),
        };

        if !asker.confirm_tx_invalid(&ctx) {
            // Accepted on sight: retained without fines.
            accepted.push(tx.clone());
            retained.push(tx.id.clone());
            trace.push(DisputeRecord {
                item: tx.id.clone(),
                kind: DisputeKind::Transaction,
                disputed: false,
                asserter: None,
                resolution: "retained".into(),
                fines_burned: 0.0,
            });
            continue;
        }

        // Escalated: both nodes post a fine.
        collected += 2.0 * fine;
        *payoffs.get_mut(&asker_side).unwrap() -= fine;
        *payoffs.get_mut(&holder_side).unwrap() -= fine;

        if holder.assert_tx(&ctx) {
            // Holder insists: the transaction stands, all fines burn.
            burned += 2.0 * fine;
            accepted.push(tx.clone());
            retained.push(tx.id.clone());
            trace.push(DisputeRecord {
                item: tx.id.clone(),
                kind: DisputeKind::Transaction,
                disputed: true,
                asserter: Some(holder_side),
                resolution: "retained".into(),
                fines_burned: 2.0 * fine,
            });
        } else {
            // Holder withdraws: the challenger is made whole.
            burned += fine;
            refunded += fine;
            *payoffs.get_mut(&asker_side).unwrap() += fine;
            discarded.push(tx.id.clone());
            trace.push(DisputeRecord {
                item: tx.id.clone(),
                kind: DisputeKind::Transaction,
                disputed: true,
                asserter: Some(holder_side),
                resolution: "discarded".into(),
                fines_burned: fine,
            });
        }
    }

    // Replay everything kept, voiding what no longer verifies, and package
    // the result as the common prefix plus a single resolution block.
    let resolved = resolve_content(&base, accepted);
    let prefix: Vec<(String, Vec<Transaction>)> = fork
        .chain_a
        .blocks
        .iter()
        .take(fork.common_ancestor_height as usize)
        .map(|b| (b.proposer.clone(), b.transactions.clone()))
        .collect();
    let mut batches = prefix;
    if !resolved.applied.is_empty() {
        batches.push(("resolution".into(), resolved.applied.clone()));
    }
    let chain = Chain::from_batches(fork.chain_a.genesis_endowment.clone(), batches)?;

    Ok(TxResolution {
        chain,
        retained,
        discarded,
        voided: resolved.voided,
        final_state: resolved.final_state,
        trace,
        payoffs,
        fines_collected: collected,
        fines_refunded: refunded,
        fines_burned: burned,
    })
}

/// Final outcome of a whole-allocation dispute.
#[derive(Debug, Clone, PartialEq)]
pub enum AllocOutcome {
    /// One branch's allocation was confirmed.
    Confirmed(ForkSide),
    /// The namings disagreed and the asserter insisted: every contested
    /// account keeps only the balance both branches agree on; the rest is
    /// burned.
    Burned { tokens_burned: u64 },
}

/// Outcome of whole-allocation fork resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocResolution {
    pub outcome: AllocOutcome,
    /// Final balances under the outcome.
    pub final_state: TokenAllocation,
    pub named: BTreeMap<ForkSide, ForkSide>,
    pub trace: Vec<DisputeRecord>,
    /// Token flows of the two disputing nodes (fines only; allocation
    /// balances are accounted in `final_state`).
    pub payoffs: BTreeMap<ForkSide, f64>,
    pub fines_burned: f64,
}

/// Resolves a fork by branch naming. Both branches must have equal length.
/// `true_side` is the honestly-extended branch (ground truth known to the
/// harness and to honest nodes); an attacking node promotes the other one.
pub fn resolve_fork_alloc<R: Rng>(
    fork: &Fork,
    fine: f64,
    true_side: ForkSide,
    node_a: &mut AgentPolicy,
    node_b: &mut AgentPolicy,
    rng: &mut R,
) -> Result<AllocResolution, LedgerError> {
    if fork.chain_a.len() != fork.chain_b.len() {
        return Err(LedgerError::LengthToleranceExceeded {
            diff: fork.length_difference(),
            tolerance: 0,
        });
    }
    let alloc_a = crate::ledger::final_allocations(&fork.chain_a)?;
    let alloc_b = crate::ledger::final_allocations(&fork.chain_b)?;
    let contested = alloc_a.differing_accounts(&alloc_b);
    let item = contested.iter().cloned().collect::<Vec<_>>().join("+");

    let same_coalition = match (node_a.coalition(), node_b.coalition()) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    };
    let goal = |policy: &AgentPolicy| {
        if policy.coalition().is_some() {
            true_side.other()
        } else {
            true_side
        }
    };
    let ctx_a = ChainNamingContext {
        true_side,
        goal_side: goal(node_a),
        opponent_in_same_coalition: same_coalition,
    };
    let ctx_b = ChainNamingContext {
        true_side,
        goal_side: goal(node_b),
        opponent_in_same_coalition: same_coalition,
    };
    let named_a = node_a.name_chain(&ctx_a);
    let named_b = node_b.name_chain(&ctx_b);
    let named: BTreeMap<ForkSide, ForkSide> =
        [(ForkSide::A, named_a), (ForkSide::B, named_b)].into();
    let mut payoffs: BTreeMap<ForkSide, f64> = [(ForkSide::A, 0.0), (ForkSide::B, 0.0)].into();

    if named_a == named_b {
        let side = named_a;
        let final_state = if side == ForkSide::A { alloc_a } else { alloc_b };
        return Ok(AllocResolution {
            outcome: AllocOutcome::Confirmed(side),
            final_state,
            named,
            trace: vec![DisputeRecord {
                item,
                kind: DisputeKind::Allocation,
                disputed: false,
                asserter: None,
                resolution: format!("confirmed_{}", side.to_string().to_lowercase()),
                fines_burned: 0.0,
            }],
            payoffs,
            fines_burned: 0.0,
        });
    }

    // Disagreement: both nodes forfeit a fine, and a coin flip decides who
    // must either insist or concede.
    *payoffs.get_mut(&ForkSide::A).unwrap() -= fine;
    *payoffs.get_mut(&ForkSide::B).unwrap() -= fine;
    let asserter_side = if rng.gen_bool(0.5) { ForkSide::A } else { ForkSide::B };
    let opponent_named = named[&asserter_side.other()];
    let ctx = AllocAssertContext {
        true_side,
        opponent_named,
    };
    let asserter = match asserter_side {
        ForkSide::A => &mut *node_a,
        ForkSide::B => &mut *node_b,
    };

    let (outcome, final_state, resolution) = if asserter.assert_alloc(&ctx) {
        // Contested balances are burned down to the agreed amount.
        let mut balances = alloc_a.balances.clone();
        for account in alloc_b.balances.keys() {
            balances.entry(account.clone()).or_insert(0);
        }
        let mut burned_tokens = 0u64;
        for (account, balance) in balances.iter_mut() {
            let agreed = alloc_a.balance(account).min(alloc_b.balance(account));
            burned_tokens += *balance - agreed;
            *balance = agreed;
        }
        (
            AllocOutcome::Burned {
                tokens_burned: burned_tokens,
            },
            TokenAllocation { balances },
            "burned".to_string(),
        )
    } else {
        let side = opponent_named;
        let state = if side == ForkSide::A { alloc_a } else { alloc_b };
        (
            AllocOutcome::Confirmed(side),
            state,
            format!("confirmed_{}", side.to_string().to_lowercase()),
        )
    };

    Ok(AllocResolution {
        outcome,
        final_state,
        named,
        trace: vec![DisputeRecord {
            item,
            kind: DisputeKind::Allocation,
            disputed: true,
            asserter: Some(asserter_side),
            resolution,
            fines_burned: 2.0 * fine,
        }],
        payoffs,
        fines_burned: 2.0 * fine,
    })
}
