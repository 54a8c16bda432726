//! Minimal account-based ledger model: transactions, blocks, chains, forks.
//!
//! The model is deliberately free of cryptography — signatures are a boolean
//! flag and blocks reference parents by height — because everything built on
//! top of it (dispute mechanisms, game trees, Monte Carlo scenarios) only
//! needs the *economic* content of a chain: who paid whom, in what order, and
//! whether a spend was covered. Two transactions are considered equivalent
//! when they agree on id, sender, receiver, and amount; timestamps are
//! gossip metadata and never participate in equivalence.
//!
//! Chains are loadable from a small JSON fixture format (see
//! [`Chain::from_fixture_json`]) and the [`fixtures`] submodule builds the
//! canonical fork scenarios used across the test suite and CLI examples.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Account identifier. Plain strings keep fixtures human-readable.
pub type Account = String;
/// Transaction identifier, unique within a chain.
pub type TxId = String;

/// Errors produced by chain validation, fork construction, and diffing.
#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("duplicate transaction id {0}")]
    DuplicateTxId(TxId),
    #[error("transaction {id} overdraws {sender}: balance {balance}, amount {amount}")]
    Uncovered {
        id: TxId,
        sender: Account,
        balance: u64,
        amount: u64,
    },
    #[error("transaction {0} has an invalid signature")]
    BadSignature(TxId),
    #[error("block at height {height} does not extend height {expected_parent}")]
    BrokenParentLink { height: u64, expected_parent: u64 },
    #[error("chains do not share a common prefix")]
    NoCommonPrefix,
    #[error("chains are identical after the common prefix; nothing to resolve")]
    IdenticalChains,
    #[error("fork length difference {diff} exceeds tolerance {tolerance}")]
    LengthToleranceExceeded { diff: u64, tolerance: u64 },
    #[error("transaction id {0} appears on both branches with different content")]
    ConflictingTxId(TxId),
    #[error("fixture parse error: {0}")]
    Fixture(String),
}

/// A signed transfer of tokens between two accounts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub sender: Account,
    pub receiver: Account,
    pub amount: u64,
    /// Wall-clock ordering hint; *not* part of transaction identity.
    pub timestamp: u64,
    /// Stand-in for signature verification.
    pub signature_valid: bool,
}

impl Transaction {
    /// Equivalence ignores the timestamp: two observations of the same
    /// transfer may carry different gossip timestamps.
    pub fn equivalent(&self, other: &Transaction) -> bool {
        self.id == other.id
            && self.sender == other.sender
            && self.receiver == other.receiver
            && self.amount == other.amount
    }
}

/// Reference from a block to its predecessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockParent {
    /// The block extends the genesis state directly.
    Genesis,
    /// The block extends the block at this height.
    Height(u64),
}

/// An ordered batch of transactions appended by one proposer.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// 1-based height; the genesis state sits at height 0.
    pub height: u64,
    pub parent: BlockParent,
    pub proposer: String,
    pub transactions: Vec<Transaction>,
}

/// Final (or intermediate) balances per account.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenAllocation {
    pub balances: BTreeMap<Account, u64>,
}

impl TokenAllocation {
    pub fn balance(&self, account: &str) -> u64 {
        self.balances.get(account).copied().unwrap_or(0)
    }

    pub fn total_supply(&self) -> u64 {
        self.balances.values().sum()
    }

    /// Accounts whose balances differ between `self` and `other`.
    pub fn differing_accounts(&self, other: &TokenAllocation) -> BTreeSet<Account> {
        let keys: BTreeSet<&Account> =
            self.balances.keys().chain(other.balances.keys()).collect();
        keys.into_iter()
            .filter(|k| self.balance(k) != other.balance(k))
            .cloned()
            .collect()
    }
}

/// A block sequence rooted in a genesis endowment.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub genesis_endowment: BTreeMap<Account, u64>,
    /// Blocks at heights `1..=blocks.len()`, in order.
    pub blocks: Vec<Block>,
}

/// Checks a single transaction against a balance snapshot: the signature
/// must verify and the sender's balance must cover the amount.
pub fn validate_transaction(tx: &Transaction, state: &TokenAllocation) -> bool {
    tx.signature_valid && state.balance(&tx.sender) >= tx.amount
}

impl Chain {
    /// Builds a chain from per-block transaction batches, assigning heights
    /// and parent links, and validates it.
    pub fn from_batches(
        genesis_endowment: BTreeMap<Account, u64>,
        batches: Vec<(String, Vec<Transaction>)>,
    ) -> Result<Chain, LedgerError> {
        let blocks = batches
            .into_iter()
            .enumerate()
            .map(|(i, (proposer, transactions))| Block {
                height: i as u64 + 1,
                parent: if i == 0 {
                    BlockParent::Genesis
                } else {
                    BlockParent::Height(i as u64)
                },
                proposer,
                transactions,
            })
            .collect();
        let chain = Chain {
            genesis_endowment,
            blocks,
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Full structural and economic validation: contiguous heights and parent
    /// links, unique transaction ids, valid signatures, and every spend
    /// covered by the sender's balance at that point.
    pub fn validate(&self) -> Result<(), LedgerError> {
        let mut state = TokenAllocation {
            balances: self.genesis_endowment.clone(),
        };
        let mut seen = BTreeSet::new();
        for (i, block) in self.blocks.iter().enumerate() {
            let expected_height = i as u64 + 1;
            let expected_parent = expected_height - 1;
            let parent_ok = match block.parent {
                BlockParent::Genesis => expected_parent == 0,
                BlockParent::Height(h) => h == expected_parent,
            };
            if block.height != expected_height || !parent_ok {
                return Err(LedgerError::BrokenParentLink {
                    height: block.height,
                    expected_parent,
                });
            }
            for tx in &block.transactions {
                if !seen.insert(tx.id.clone()) {
                    return Err(LedgerError::DuplicateTxId(tx.id.clone()));
                }
                if !tx.signature_valid {
                    return Err(LedgerError::BadSignature(tx.id.clone()));
                }
                apply_transfer(&mut state, tx)?;
            }
        }
        Ok(())
    }

    /// Number of non-genesis blocks.
    pub fn len(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Balances after replaying blocks `1..=height`.
    pub fn allocations_at(&self, height: u64) -> Result<TokenAllocation, LedgerError> {
        let mut state = TokenAllocation {
            balances: self.genesis_endowment.clone(),
        };
        for block in self.blocks.iter().take(height as usize) {
            for tx in &block.transactions {
                apply_transfer(&mut state, tx)?;
            }
        }
        Ok(state)
    }

    /// Transactions appearing strictly after `height`, in block order.
    pub fn transactions_after(&self, height: u64) -> Vec<&Transaction> {
        self.blocks
            .iter()
            .skip(height as usize)
            .flat_map(|b| b.transactions.iter())
            .collect()
    }
}

fn apply_transfer(state: &mut TokenAllocation, tx: &Transaction) -> Result<(), LedgerError> {
    let balance = state.balance(&tx.sender);
    if balance < tx.amount {
        return Err(LedgerError::Uncovered {
            id: tx.id.clone(),
            sender: tx.sender.clone(),
            balance,
            amount: tx.amount,
        });
    }
    *state.balances.entry(tx.sender.clone()).or_insert(0) -= tx.amount;
    *state.balances.entry(tx.receiver.clone()).or_insert(0) += tx.amount;
    Ok(())
}

/// Replays `1..=blocks.len()`; errors identify the first offending
/// transaction (uncovered spend) if the chain is economically invalid.
pub fn final_allocations(chain: &Chain) -> Result<TokenAllocation, LedgerError> {
    chain.allocations_at(chain.len())
}

/// Two competing branches sharing a common prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Fork {
    pub chain_a: Chain,
    pub chain_b: Chain,
    /// Highest block height (0 = genesis only) at which the chains agree.
    pub common_ancestor_height: u64,
    /// Maximum permitted difference in branch lengths.
    pub length_tolerance: u64,
}

impl Fork {
    /// Validates both chains, locates the common ancestor, and checks the
    /// branches actually diverge and stay within the length tolerance.
    pub fn new(chain_a: Chain, chain_b: Chain, length_tolerance: u64) -> Result<Fork, LedgerError> {
        chain_a.validate()?;
        chain_b.validate()?;
        if chain_a.genesis_endowment != chain_b.genesis_endowment {
            return Err(LedgerError::NoCommonPrefix);
        }
        let mut ancestor = 0;
        for (x, y) in chain_a.blocks.iter().zip(chain_b.blocks.iter()) {
            if x == y {
                ancestor += 1;
            } else {
                break;
            }
        }
        let (len_a, len_b) = (chain_a.len(), chain_b.len());
        if len_a == len_b && ancestor == len_a {
            return Err(LedgerError::IdenticalChains);
        }
        let diff = len_a.abs_diff(len_b);
        if diff > length_tolerance {
            return Err(LedgerError::LengthToleranceExceeded {
                diff,
                tolerance: length_tolerance,
            });
        }
        Ok(Fork {
            chain_a,
            chain_b,
            common_ancestor_height: ancestor,
            length_tolerance,
        })
    }

    /// Difference between branch lengths.
    pub fn length_difference(&self) -> u64 {
        self.chain_a.len().abs_diff(self.chain_b.len())
    }

    /// Balance snapshot at the common ancestor (identical on both branches).
    pub fn ancestor_state(&self) -> TokenAllocation {
        self.chain_a
            .allocations_at(self.common_ancestor_height)
            .expect("validated chain prefix replays cleanly")
    }
}

/// A transaction present on both branches, confirmed at the earlier of the
/// two observed timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonTx {
    pub tx: Transaction,
    /// Minimum of the two branch timestamps.
    pub confirmed_timestamp: u64,
}

/// Result of [`diff_forks`]: post-ancestor transactions sorted into the
/// agreed set and the per-branch disputed sets. The three id sets are
/// pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForkDiff {
    /// On both branches (equivalent content), ordered by confirmed timestamp.
    pub common: Vec<CommonTx>,
    /// Only on branch A, ordered by (timestamp, id).
    pub disputed_a: Vec<Transaction>,
    /// Only on branch B, ordered by (timestamp, id).
    pub disputed_b: Vec<Transaction>,
}

impl ForkDiff {
    /// All disputed transactions tagged with the branch holding them,
    /// ordered by (timestamp, id) — the processing order used by the
    /// per-transaction dispute mechanism.
    pub fn disputed_in_order(&self) -> Vec<(ForkSide, &Transaction)> {
        let mut all: Vec<(ForkSide, &Transaction)> = self
            .disputed_a
            .iter()
            .map(|t| (ForkSide::A, t))
            .chain(self.disputed_b.iter().map(|t| (ForkSide::B, t)))
            .collect();
        all.sort_by(|(_, x), (_, y)| (x.timestamp, &x.id).cmp(&(y.timestamp, &y.id)));
        all
    }
}

/// Which branch of a fork a node or transaction belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ForkSide {
    A,
    B,
}

impl ForkSide {
    pub fn other(self) -> ForkSide {
        match self {
            ForkSide::A => ForkSide::B,
            ForkSide::B => ForkSide::A,
        }
    }
}

impl std::fmt::Display for ForkSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ForkSide::A => write!(f, "A"),
            ForkSide::B => write!(f, "B"),
        }
    }
}

/// Splits post-ancestor transactions into common and per-branch disputed
/// sets. Transactions match by equivalence (timestamp ignored); a common
/// transaction is confirmed at the minimum of its two observed timestamps.
/// An id appearing on both branches with *different* content is a malformed
/// fork and rejected.
pub fn diff_forks(fork: &Fork) -> Result<ForkDiff, LedgerError> {
    let h = fork.common_ancestor_height;
    let txs_a = fork.chain_a.transactions_after(h);
    let txs_b = fork.chain_b.transactions_after(h);
    let by_id_b: BTreeMap<&TxId, &Transaction> = txs_b.iter().map(|t| (&t.id, *t)).collect();

    let mut diff = ForkDiff::default();
    for tx in &txs_a {
        match by_id_b.get(&tx.id) {
            Some(other) if tx.equivalent(other) => diff.common.push(CommonTx {
                tx: (*tx).clone(),
                confirmed_timestamp: tx.timestamp.min(other.timestamp),
            }),
            Some(_) => return Err(LedgerError::ConflictingTxId(tx.id.clone())),
            None => diff.disputed_a.push((*tx).clone()),
        }
    }
    let ids_a: BTreeSet<&TxId> = txs_a.iter().map(|t| &t.id).collect();
    for tx in &txs_b {
        if !ids_a.contains(&tx.id) {
            diff.disputed_b.push((*tx).clone());
        }
    }
    diff.common
        .sort_by(|x, y| (x.confirmed_timestamp, &x.tx.id).cmp(&(y.confirmed_timestamp, &y.tx.id)));
    diff.disputed_a
        .sort_by(|x, y| (x.timestamp, &x.id).cmp(&(y.timestamp, &y.id)));
    diff.disputed_b
        .sort_by(|x, y| (x.timestamp, &x.id).cmp(&(y.timestamp, &y.id)));
    Ok(diff)
}

/// Content of a resolved ledger: transactions applied in timestamp order on
/// top of a base state, with any transaction that no longer verifies
/// (bad signature or uncovered spend, e.g. because an earlier retained
/// transaction drained the sender) voided rather than applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedContent {
    /// Transactions that applied cleanly, in (timestamp, id) order.
    pub applied: Vec<Transaction>,
    /// Transactions retained by dispute outcomes but void at application time.
    pub voided: Vec<TxId>,
    pub final_state: TokenAllocation,
}

/// Applies `txs` to `base` in (timestamp, id) order, voiding anything that
/// fails [`validate_transaction`] against the evolving state.
pub fn resolve_content(base: &TokenAllocation, txs: Vec<Transaction>) -> ResolvedContent {
    let mut ordered = txs;
    ordered.sort_by(|x, y| (x.timestamp, &x.id).cmp(&(y.timestamp, &y.id)));
    let mut state = base.clone();
    let mut applied = Vec::new();
    let mut voided = Vec::new();
    for tx in ordered {
        if validate_transaction(&tx, &state) {
            apply_transfer(&mut state, &tx).expect("validated transfer applies");
            applied.push(tx);
        } else {
            voided.push(tx.id);
        }
    }
    ResolvedContent {
        applied,
        voided,
        final_state: state,
    }
}

// --- JSON fixture format ----------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ChainFixture {
    genesis_endowment: BTreeMap<Account, u64>,
    blocks: Vec<BlockFixture>,
}

#[derive(Serialize, Deserialize)]
struct BlockFixture {
    proposer: String,
    txs: Vec<Transaction>,
}

impl Chain {
    /// Parses and validates a chain from the JSON fixture schema:
    /// `{"genesis_endowment": {...}, "blocks": [{"proposer": ..., "txs": [...]}]}`.
    pub fn from_fixture_json(json: &str) -> Result<Chain, LedgerError> {
        let fixture: ChainFixture =
            serde_json::from_str(json).map_err(|e| LedgerError::Fixture(e.to_string()))?;
        Chain::from_batches(
            fixture.genesis_endowment,
            fixture
                .blocks
                .into_iter()
                .map(|b| (b.proposer, b.txs))
                .collect(),
        )
    }

    /// Serializes back to the fixture schema (round-trips with
    /// [`Chain::from_fixture_json`]).
    pub fn to_fixture_json(&self) -> String {
        let fixture = ChainFixture {
            genesis_endowment: self.genesis_endowment.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockFixture {
                    proposer: b.proposer.clone(),
                    txs: b.transactions.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&fixture).expect("fixture serializes")
    }
}

// --- Canonical test forks ----------------------------------------------------

/// Canonical fork scenarios shared by tests, benchmarks, and CLI examples.
/// Branch A is always the honestly-extended chain.
pub mod fixtures {
    use super::*;

    fn tx(id: &str, sender: &str, receiver: &str, amount: u64, timestamp: u64) -> Transaction {
        Transaction {
            id: id.into(),
            sender: sender.into(),
            receiver: receiver.into(),
            amount,
            timestamp,
            signature_valid: true,
        }
    }

    /// Deletion attack: the attacker paid a merchant on chain A and proposes
    /// a branch B identical except that the payment never happened. The
    /// unrelated transfer `t-keep` appears on both branches with different
    /// gossip timestamps.
    ///
    /// Disputed: `t-spend` (A only). Attack goal: remove `t-spend`.
    pub fn double_spend_fork() -> Fork {
        let genesis: BTreeMap<Account, u64> =
            [("attacker".into(), 10), ("merchant".into(), 0), ("peer".into(), 12)].into();
        let common = vec![tx("c1", "peer", "merchant", 2, 10)];
        let chain_a = Chain::from_batches(
            genesis.clone(),
            vec![
                ("n1".into(), common.clone()),
                (
                    "n2".into(),
                    vec![
                        tx("t-spend", "attacker", "merchant", 7, 20),
                        tx("t-keep", "peer", "attacker", 1, 22),
                    ],
                ),
            ],
        )
        .expect("fixture chain A is valid");
        let chain_b = Chain::from_batches(
            genesis,
            vec![
                ("n1".into(), common),
                ("n3".into(), vec![tx("t-keep", "peer", "attacker", 1, 21)]),
            ],
        )
        .expect("fixture chain B is valid");
        Fork::new(chain_a, chain_b, 1).expect("fixture fork is well-formed")
    }

    /// Pre-spend attack: chain A holds the original payment
    /// `orig: charles -> alice 7`; branch B instead contains an
    /// *earlier-timestamped* transfer `pre: charles -> bob 7` of the same
    /// tokens, so retaining `pre` makes `orig` an overdraft.
    ///
    /// Disputed: `pre` (B only, earlier) then `orig` (A only). Attack goal:
    /// void the original payment by getting `pre` retained.
    pub fn pre_spend_fork() -> Fork {
        let genesis: BTreeMap<Account, u64> = [
            ("charles".into(), 10),
            ("alice".into(), 0),
            ("bob".into(), 0),
            ("dana".into(), 5),
        ]
        .into();
        let common = vec![tx("c1", "dana", "charles", 1, 5)];
        let chain_a = Chain::from_batches(
            genesis.clone(),
            vec![
                ("n1".into(), common.clone()),
                ("n2".into(), vec![tx("orig", "charles", "alice", 7, 20)]),
            ],
        )
        .expect("fixture chain A is valid");
        let chain_b = Chain::from_batches(
            genesis,
            vec![
                ("n1".into(), common),
                ("n4".into(), vec![tx("pre", "charles", "bob", 7, 12)]),
            ],
        )
        .expect("fixture chain B is valid");
        Fork::new(chain_a, chain_b, 1).expect("fixture fork is well-formed")
    }

    /// Latency fork: branch B simply has not seen the latest block yet.
    /// Disputed: `t1` (A only); both holders are honest.
    pub fn accidental_fork() -> Fork {
        let genesis: BTreeMap<Account, u64> = [("alice".into(), 10), ("bob".into(), 0)].into();
        let common = vec![tx("c1", "alice", "bob", 2, 5)];
        let chain_a = Chain::from_batches(
            genesis.clone(),
            vec![
                ("n1".into(), common.clone()),
                ("n2".into(), vec![tx("t1", "alice", "bob", 3, 11)]),
            ],
        )
        .expect("fixture chain A is valid");
        let chain_b = Chain::from_batches(genesis, vec![("n1".into(), common)])
            .expect("fixture chain B is valid");
        Fork::new(chain_a, chain_b, 1).expect("fixture fork is well-formed")
    }
}
