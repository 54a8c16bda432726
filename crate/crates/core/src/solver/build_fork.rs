//! Builds the extensive-form games behind the two fork-resolution
//! procedures, so the solver can check that the simulated behavioral rules
//! (see [`crate::fork`]) are actually equilibrium play.
//!
//! Both games are perfect-information: every decision node is its own
//! singleton information set, marked reactive, and the whole game is one
//! stage block, so the solver degrades to plain backward induction plus the
//! global best-response audit.
//!
//! **Transaction dispute game.** Disputed transactions are processed in
//! (timestamp, id) order. For each, the side lacking it either accepts it
//! or escalates (fining both sides); on escalation the holder either
//! asserts (transaction kept, both fines burn) or withdraws (transaction
//! dropped, challenger refunded). After the last dispute the kept set is
//! replayed from the common ancestor, voiding whatever no longer verifies —
//! matching [`crate::fork::resolve_fork_tx`] exactly. Terminal utilities
//! compare the replayed state with the true branch's final state and with
//! the attack branch's: honest nodes gain their truth utility on the former
//! and pay their distortion disutility on the latter; a coalition gains its
//! distortion premium on the latter.
//!
//! **Whole-allocation game.** Each side publicly names a branch, second
//! mover seeing the first (the naming order is fixed A then B; honest play
//! is unaffected and it keeps the game perfect-information). Agreement
//! confirms the named branch. Disagreement fines both, and a fair coin
//! picks one side that must either assert — burning every contested balance
//! down to the amount both branches agree on — or concede to the opponent's
//! naming. Coalition players carry their burn aversion as a utility term on
//! burn terminals (`-aversion x tokens burned`); honest players rank burn
//! strictly between truth and distortion, at zero.

use super::build_bft::assign_players;
use super::tree::{
    ActionLabel, Block, GameTree, InfoSet, InfoSetId, Layer, Node, NodeKind, NodeRef, Outcome,
    PlayerId, PlayerKind, PlayerSpec,
};
use super::BuildError;
use crate::agents::AgentPolicy;
use crate::ledger::{
    diff_forks, final_allocations, resolve_content, validate_transaction, Fork, ForkSide,
    TokenAllocation, Transaction,
};

/// Most disputed transactions the exact game will model (3^8 leaves).
pub const MAX_TX_DISPUTES: usize = 8;

struct ForkPlayers {
    players: Vec<PlayerSpec>,
    /// Player controlling side A, then side B.
    side_player: [PlayerId; 2],
}

fn fork_players(
    policy_a: &AgentPolicy,
    policy_b: &AgentPolicy,
) -> Result<ForkPlayers, BuildError> {
    let (players, node_player) = assign_players(&[policy_a.clone(), policy_b.clone()])?;
    Ok(ForkPlayers {
        players,
        side_player: [node_player[0], node_player[1]],
    })
}

fn player_of(fp: &ForkPlayers, side: ForkSide) -> PlayerId {
    match side {
        ForkSide::A => fp.side_player[0],
        ForkSide::B => fp.side_player[1],
    }
}

/// Chain-preference utility increments for a resolved state: `is_truth` /
/// `is_goal` say whether it equals the true branch's final state or the
/// attack branch's.
fn state_delta(players: &[PlayerSpec], is_truth: bool, is_goal: bool) -> Vec<f64> {
    let mut delta = vec![0.0; players.len()];
    for (pid, player) in players.iter().enumerate() {
        match player.kind {
            PlayerKind::Honest {
                true_chain_utility,
                false_chain_disutility,
            } => {
                if is_truth {
                    delta[pid] += true_chain_utility;
                } else if is_goal {
                    delta[pid] -= false_chain_disutility;
                }
            }
            PlayerKind::Coalition { theta, .. } => {
                if is_goal {
                    delta[pid] += theta;
                }
            }
        }
    }
    delta
}

/// Builds the transaction-dispute game over `fork`. `true_side` is the
/// honestly-extended branch; the other branch is the (potential) attack
/// whose final state serves as the distortion target.
pub fn build_fork_tx_game(
    fork: &Fork,
    fine: f64,
    true_side: ForkSide,
    policy_a: &AgentPolicy,
    policy_b: &AgentPolicy,
) -> Result<GameTree, BuildError> {
    let diff = diff_forks(fork)
        .map_err(|e| BuildError::Unsupported(format!("fork content cannot be diffed: {e}")))?;
    let disputes: Vec<(ForkSide, Transaction)> = diff
        .disputed_in_order()
        .into_iter()
        .map(|(side, tx)| (side, tx.clone()))
        .collect();
    if disputes.len() > MAX_TX_DISPUTES {
        return Err(BuildError::Unsupported(format!(
            "{} disputed transactions exceed the exact-game limit of {MAX_TX_DISPUTES}",
            disputes.len()
        )));
    }
    let fp = fork_players(policy_a, policy_b)?;
    let truth_state = final_allocations(side_chain(fork, true_side))
        .map_err(|e| BuildError::Unsupported(format!("true branch does not verify: {e}")))?;
    let goal_state = final_allocations(side_chain(fork, true_side.other()))
        .map_err(|e| BuildError::Unsupported(format!("attack branch does not verify: {e}")))?;
    // Common content enters the replay at its earlier observed timestamp,
    // exactly as the resolution procedure applies it.
    let common: Vec<Transaction> = diff
        .common
        .iter()
        .map(|c| {
            let mut tx = c.tx.clone();
            tx.timestamp = c.confirmed_timestamp;
            tx
        })
        .collect();

    let mut b = TxBuilder {
        fine,
        disputes: &disputes,
        common: &common,
        base: fork.ancestor_state(),
        truth_state,
        goal_state,
        fp: &fp,
        nodes: Vec::new(),
        info_sets: Vec::new(),
    };
    let n_players = fp.players.len();
    let root = b.next(0, 0, 0.0, String::new(), vec![0.0; n_players]);
    let TxBuilder {
        nodes, info_sets, ..
    } = b;
    let tree = GameTree {
        players: fp.players,
        nodes,
        info_sets,
        blocks: vec![Block {
            entry: root,
            label: "transaction disputes".into(),
        }],
        root,
    };
    tree.validate().map_err(BuildError::Internal)?;
    Ok(tree)
}

fn side_chain(fork: &Fork, side: ForkSide) -> &crate::ledger::Chain {
    match side {
        ForkSide::A => &fork.chain_a,
        ForkSide::B => &fork.chain_b,
    }
}

struct TxBuilder<'a> {
    fine: f64,
    disputes: &'a [(ForkSide, Transaction)],
    common: &'a [Transaction],
    base: TokenAllocation,
    truth_state: TokenAllocation,
    goal_state: TokenAllocation,
    fp: &'a ForkPlayers,
    nodes: Vec<Node>,
    info_sets: Vec<InfoSet>,
}

impl<'a> TxBuilder<'a> {
    fn push_node(&mut self, node: Node) -> NodeRef {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn singleton_set(
        &mut self,
        key: String,
        player: PlayerId,
        actions: Vec<ActionLabel>,
        truthful: Option<usize>,
        member: NodeRef,
    ) -> InfoSetId {
        self.info_sets.push(InfoSet {
            player,
            actions,
            members: vec![member],
            layer: Layer::Reactive,
            block: 0,
            truthful,
            key,
        });
        self.info_sets.len() - 1
    }

    /// Whether dispute `idx`'s transaction verifies against the content
    /// that precedes it in (timestamp, id) order, given the disputes in
    /// `kept` were retained — the same context the behavioral resolution
    /// hands its policies, so the truthful action markers match honest play.
    fn context_valid(&self, idx: usize, kept: u64) -> bool {
        let (_, tx) = &self.disputes[idx];
        let mut accepted: Vec<Transaction> = self.common.to_vec();
        for (i, (_, earlier)) in self.disputes.iter().enumerate().take(idx) {
            if kept & (1 << i) != 0 {
                accepted.push(earlier.clone());
            }
        }
        accepted.retain(|t| (t.timestamp, &t.id) < (tx.timestamp, &tx.id));
        let state = resolve_content(&self.base, accepted).final_state;
        validate_transaction(tx, &state)
    }

    /// Builds the position before dispute `idx`, with `kept` the bitmask of
    /// earlier disputes whose transaction was retained, `burned` the fines
    /// burned so far, and `delta` this position's entry payoff increments
    /// (refunds from the step just taken). `hist` uniquely names the path.
    fn next(&mut self, idx: usize, kept: u64, burned: f64, hist: String, delta: Vec<f64>) -> NodeRef {
        if idx == self.disputes.len() {
            return self.terminal(kept, burned, delta);
        }
        let (holder_side, tx) = &self.disputes[idx];
        let asker_side = holder_side.other();
        let asker = player_of(self.fp, asker_side);
        let holder = player_of(self.fp, *holder_side);
        let zero = vec![0.0; self.fp.players.len()];
        // Honest play accepts/asserts a verifying transaction and
        // escalates/withdraws a failing one; both menus put the verifying
        // response first, so one index marks the truthful action on each.
        let truthful = Some(if self.context_valid(idx, kept) { 0 } else { 1 });

        let accept = self.next(idx + 1, kept | (1 << idx), burned, format!("{hist}a"), zero.clone());

        let keep = self.next(
            idx + 1,
            kept | (1 << idx),
            burned + 2.0 * self.fine,
            format!("{hist}ea"),
            zero.clone(),
        );
        let mut refund = zero.clone();
        refund[asker] += self.fine;
        let drop = self.next(
            idx + 1,
            kept,
            burned + self.fine,
            format!("{hist}ew"),
            refund,
        );
        let mut fined = zero;
        fined[asker] -= self.fine;
        fined[holder] -= self.fine;
        let hold_node = self.push_node(Node {
            kind: NodeKind::Decision {
                info_set: 0,
                edges: vec![keep, drop],
            },
            delta: fined,
        });
        let hold_set = self.singleton_set(
            format!("hold:{}:{hist}e", tx.id),
            holder,
            vec![ActionLabel::AssertTx, ActionLabel::WithdrawTx],
            truthful,
            hold_node,
        );
        if let NodeKind::Decision { info_set, .. } = &mut self.nodes[hold_node].kind {
            *info_set = hold_set;
        }

        let ask_node = self.push_node(Node {
            kind: NodeKind::Decision {
                info_set: 0,
                edges: vec![accept, hold_node],
            },
            delta,
        });
        let ask_set = self.singleton_set(
            format!("ask:{}:{hist}", tx.id),
            asker,
            vec![ActionLabel::AcceptTx, ActionLabel::EscalateTx],
            truthful,
            ask_node,
        );
        if let NodeKind::Decision { info_set, .. } = &mut self.nodes[ask_node].kind {
            *info_set = ask_set;
        }
        ask_node
    }

    fn terminal(&mut self, kept: u64, burned: f64, mut delta: Vec<f64>) -> NodeRef {
        let mut txs: Vec<Transaction> = self.common.to_vec();
        for (i, (_, tx)) in self.disputes.iter().enumerate() {
            if kept & (1 << i) != 0 {
                txs.push(tx.clone());
            }
        }
        let final_state = resolve_content(&self.base, txs).final_state;
        let is_truth = final_state == self.truth_state;
        let is_goal = !is_truth && final_state == self.goal_state;
        let class = if is_truth {
            "truth"
        } else if is_goal {
            "goal"
        } else {
            "other"
        };
        let state = state_delta(&self.fp.players, is_truth, is_goal);
        for (d, s) in delta.iter_mut().zip(state) {
            *d += s;
        }
        // Coalition burn aversion covers burned fines here just as it
        // covers burned tokens in the allocation game: paths that torch
        // value are strictly worse than otherwise-equal clean ones.
        for (pid, player) in self.fp.players.iter().enumerate() {
            if let PlayerKind::Coalition { burn_aversion, .. } = player.kind {
                delta[pid] -= burn_aversion * burned;
            }
        }
        self.push_node(Node {
            kind: NodeKind::Terminal(Outcome {
                label: format!("resolve:{class}:kept={kept:x}"),
                round: 0,
                fines_burned: burned,
            }),
            delta,
        })
    }
}

/// Builds the whole-allocation naming game over `fork` (branches must have
/// equal length). `true_side` is the honestly-extended branch; an attacking
/// player's distortion target is the other one.
pub fn build_fork_alloc_game(
    fork: &Fork,
    fine: f64,
    true_side: ForkSide,
    policy_a: &AgentPolicy,
    policy_b: &AgentPolicy,
) -> Result<GameTree, BuildError> {
    if fork.chain_a.len() != fork.chain_b.len() {
        return Err(BuildError::Unsupported(format!(
            "allocation naming requires equal branch lengths (difference {})",
            fork.length_difference()
        )));
    }
    let fp = fork_players(policy_a, policy_b)?;
    let alloc_a = final_allocations(&fork.chain_a)
        .map_err(|e| BuildError::Unsupported(format!("branch A does not verify: {e}")))?;
    let alloc_b = final_allocations(&fork.chain_b)
        .map_err(|e| BuildError::Unsupported(format!("branch B does not verify: {e}")))?;

    // Burned outcome: every account keeps what both branches agree on.
    let mut agreed = alloc_a.balances.clone();
    for account in alloc_b.balances.keys() {
        agreed.entry(account.clone()).or_insert(0);
    }
    let mut tokens_burned = 0u64;
    for (account, balance) in agreed.iter_mut() {
        let min = alloc_a.balance(account).min(alloc_b.balance(account));
        tokens_burned += *balance - min;
        *balance = min;
    }

    let n_players = fp.players.len();
    let zero = vec![0.0; n_players];
    let mut nodes: Vec<Node> = Vec::new();
    let mut info_sets: Vec<InfoSet> = Vec::new();

    let confirm = |side: ForkSide, fp: &ForkPlayers| -> Node {
        let is_truth = side == true_side;
        let delta = state_delta(&fp.players, is_truth, !is_truth);
        Node {
            kind: NodeKind::Terminal(Outcome {
                label: format!("confirm:{}", if is_truth { "truth" } else { "goal" }),
                round: 0,
                fines_burned: 0.0,
            }),
            delta,
        }
    };
    let burn_terminal = |fp: &ForkPlayers| -> Node {
        let mut delta = vec![0.0; fp.players.len()];
        for (pid, player) in fp.players.iter().enumerate() {
            if let PlayerKind::Coalition { burn_aversion, .. } = player.kind {
                delta[pid] -= burn_aversion * tokens_burned as f64;
            }
        }
        Node {
            kind: NodeKind::Terminal(Outcome {
                label: format!("burn:{tokens_burned}"),
                round: 0,
                fines_burned: 2.0 * fine,
            }),
            delta,
        }
    };

    let name_actions = vec![
        ActionLabel::Name(ForkSide::A),
        ActionLabel::Name(ForkSide::B),
    ];
    let truthful_name = name_actions
        .iter()
        .position(|a| *a == ActionLabel::Name(true_side));

    // Built bottom-up: for each (name_a, name_b) disagreement, a chance coin
    // picks the asserter, who asserts (burn) or concedes (opponent's naming).
    let mut b_nodes_by_name_a: Vec<NodeRef> = Vec::new();
    for name_a in [ForkSide::A, ForkSide::B] {
        let mut b_edges: Vec<NodeRef> = Vec::new();
        for name_b in [ForkSide::A, ForkSide::B] {
            let child = if name_a == name_b {
                nodes.push(confirm(name_a, &fp));
                nodes.len() - 1
            } else {
                let mut coin_edges = Vec::new();
                for asserter_side in [ForkSide::A, ForkSide::B] {
                    let opponent_named = match asserter_side {
                        ForkSide::A => name_b,
                        ForkSide::B => name_a,
                    };
                    nodes.push(burn_terminal(&fp));
                    let burn_child = nodes.len() - 1;
                    nodes.push(confirm(opponent_named, &fp));
                    let concede_child = nodes.len() - 1;
                    nodes.push(Node {
                        kind: NodeKind::Decision {
                            info_set: 0,
                            edges: vec![burn_child, concede_child],
                        },
                        delta: zero.clone(),
                    });
                    let assert_node = nodes.len() - 1;
                    info_sets.push(InfoSet {
                        player: player_of(&fp, asserter_side),
                        actions: vec![ActionLabel::AssertAlloc, ActionLabel::Concede],
                        members: vec![assert_node],
                        layer: Layer::Reactive,
                        block: 0,
                        truthful: None,
                        key: format!("assert:{asserter_side}:a={name_a}:b={name_b}"),
                    });
                    let set = info_sets.len() - 1;
                    if let NodeKind::Decision { info_set, .. } = &mut nodes[assert_node].kind {
                        *info_set = set;
                    }
                    coin_edges.push((0.5, assert_node));
                }
                let mut fined = zero.clone();
                fined[fp.side_player[0]] -= fine;
                fined[fp.side_player[1]] -= fine;
                nodes.push(Node {
                    kind: NodeKind::Chance(coin_edges),
                    delta: fined,
                });
                nodes.len() - 1
            };
            b_edges.push(child);
        }
        nodes.push(Node {
            kind: NodeKind::Decision {
                info_set: 0,
                edges: b_edges,
            },
            delta: zero.clone(),
        });
        let b_node = nodes.len() - 1;
        info_sets.push(InfoSet {
            player: fp.side_player[1],
            actions: name_actions.clone(),
            members: vec![b_node],
            layer: Layer::Reactive,
            block: 0,
            truthful: truthful_name,
            key: format!("name:B:saw={name_a}"),
        });
        let set = info_sets.len() - 1;
        if let NodeKind::Decision { info_set, .. } = &mut nodes[b_node].kind {
            *info_set = set;
        }
        b_nodes_by_name_a.push(b_node);
    }

    nodes.push(Node {
        kind: NodeKind::Decision {
            info_set: 0,
            edges: b_nodes_by_name_a,
        },
        delta: zero,
    });
    let root = nodes.len() - 1;
    info_sets.push(InfoSet {
        player: fp.side_player[0],
        actions: name_actions,
        members: vec![root],
        layer: Layer::Reactive,
        block: 0,
        truthful: truthful_name,
        key: "name:A".into(),
    });
    let set = info_sets.len() - 1;
    if let NodeKind::Decision { info_set, .. } = &mut nodes[root].kind {
        *info_set = set;
    }

    let tree = GameTree {
        players: fp.players,
        nodes,
        info_sets,
        blocks: vec![Block {
            entry: root,
            label: "allocation naming".into(),
        }],
        root,
    };
    tree.validate().map_err(BuildError::Internal)?;
    Ok(tree)
}
