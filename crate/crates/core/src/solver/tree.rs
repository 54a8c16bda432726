//! Arena representation of the extensive-form games solved by this crate.
//!
//! Games are stored as rooted DAGs rather than trees: positions that are
//! strategically identical across histories (same surviving roster, same
//! stage) share one subgraph, which keeps multi-round commit games tractable.
//! To make sharing sound, payoffs are stored as per-node *increments*: a
//! path's total utility is the sum of `delta` over its nodes, so a shared
//! continuation contributes the same amounts no matter how play arrived
//! there. Strategies are therefore functions of the shared position, not of
//! the full history (a Markov restriction, matching how the accompanying
//! Monte Carlo policies behave).
//!
//! Decision nodes are grouped into information sets; each set carries the
//! acting player, the common action menu, a *layer* tag separating
//! simultaneous stage moves from reactive ones, and the id of the block (a
//! stage subgame) it belongs to. The solver in [`super::spe`] consumes the
//! block structure; builders in [`super::build_bft`] and
//! [`super::build_fork`] produce it.

use crate::agents::CoalitionId;
use crate::ledger::ForkSide;
use crate::sr::Message;
use std::collections::BTreeMap;

pub type NodeRef = usize;
pub type InfoSetId = usize;
pub type PlayerId = usize;
pub type ActionId = usize;
pub type BlockId = usize;

/// Utility parameters of a solver-level player. A coalition is one player
/// controlling the seats of all its member nodes (it deviates jointly).
#[derive(Debug, Clone, PartialEq)]
pub enum PlayerKind {
    Honest {
        true_chain_utility: f64,
        false_chain_disutility: f64,
    },
    Coalition {
        coalition: CoalitionId,
        theta: f64,
        burn_aversion: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSpec {
    pub name: String,
    pub kind: PlayerKind,
    /// Population node indices this player controls.
    pub member_nodes: Vec<usize>,
}

/// What an action means, for reporting and truthful-tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionLabel {
    /// Report this content from a commit-round seat.
    Send(Message),
    /// Accept a disputed transaction into the resolved content.
    AcceptTx,
    /// Claim a disputed transaction invalid (fines both nodes).
    EscalateTx,
    /// Insist on an escalated transaction (retained, fines burn).
    AssertTx,
    /// Withdraw an escalated transaction (discarded, challenger refunded).
    WithdrawTx,
    /// Name this branch as the correct chain.
    Name(ForkSide),
    /// Insist after a naming disagreement (contested balances burn).
    AssertAlloc,
    /// Concede after a naming disagreement (opponent's branch confirmed).
    Concede,
}

impl std::fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActionLabel::Send(m) => write!(f, "send:{m}"),
            ActionLabel::AcceptTx => write!(f, "accept"),
            ActionLabel::EscalateTx => write!(f, "escalate"),
            ActionLabel::AssertTx => write!(f, "assert"),
            ActionLabel::WithdrawTx => write!(f, "withdraw"),
            ActionLabel::Name(side) => write!(f, "name:{side}"),
            ActionLabel::AssertAlloc => write!(f, "assert"),
            ActionLabel::Concede => write!(f, "concede"),
        }
    }
}

/// Semantic description of a terminal position. `fines_burned` is the total
/// burned along the (shared) path to this terminal — with position sharing
/// it is still well-defined, because every history reaching a shared
/// terminal burns the same schedule of fines.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// e.g. `commit:truth`, `commit:preferred(0)`, `exhausted`,
    /// `confirmed_a`, `burned`, or a resolved-balances digest.
    pub label: String,
    /// Commit-round index for staged games, 0 for one-shot games.
    pub round: u32,
    pub fines_burned: f64,
}

impl Outcome {
    /// Hashable identity with fines quantized to 1e-9.
    pub fn key(&self) -> (String, u32, i64) {
        (
            self.label.clone(),
            self.round,
            (self.fines_burned * 1e9).round() as i64,
        )
    }
}

/// Probability distribution over outcomes, keyed by [`Outcome::key`].
pub type OutcomeDist = BTreeMap<(String, u32, i64), f64>;

/// Merges `addition` into `acc` with weight `w`.
pub fn dist_accumulate(acc: &mut OutcomeDist, addition: &OutcomeDist, w: f64) {
    for (k, p) in addition {
        *acc.entry(k.clone()).or_insert(0.0) += w * p;
    }
}

/// Distribution equality within `tol`, over the union of supports.
pub fn dist_close(a: &OutcomeDist, b: &OutcomeDist, tol: f64) -> bool {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter().all(|k| {
        (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs() <= tol
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Mixes over children with fixed probabilities (summing to 1).
    Chance(Vec<(f64, NodeRef)>),
    /// A move of `info_set`'s player; `edges[a]` follows action `a` of the
    /// set's menu.
    Decision {
        info_set: InfoSetId,
        edges: Vec<NodeRef>,
    },
    Terminal(Outcome),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Per-player utility accrued on *entering* this node.
    pub delta: Vec<f64>,
}

/// Simultaneity layer of an information set within its block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    /// Part of the block's simultaneous stage profile.
    Simultaneous,
    /// Best response derived given the stage profile and beliefs. A
    /// reactive set may pool only chance moves and *other players'*
    /// simultaneous actions; everything it pools is spanned by its members.
    Reactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoSet {
    pub player: PlayerId,
    pub actions: Vec<ActionLabel>,
    pub members: Vec<NodeRef>,
    pub layer: Layer,
    pub block: BlockId,
    /// The honest/truthful action, used only to pick a representative when
    /// several equilibria produce identical outcomes.
    pub truthful: Option<ActionId>,
    /// Human-readable identity for reports.
    pub key: String,
}

/// A stage subgame: the information sets solved together as one unit. The
/// solver processes blocks leaf-most first, so every edge leaving a block
/// lands on a terminal, a chance anchor of an already-solved block, or an
/// already-solved node.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Node at which the block is entered from above.
    pub entry: NodeRef,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTree {
    pub players: Vec<PlayerSpec>,
    pub nodes: Vec<Node>,
    pub info_sets: Vec<InfoSet>,
    pub blocks: Vec<Block>,
    pub root: NodeRef,
}

/// A pure strategy: one action per information set.
pub type Strategy = Vec<ActionId>;

impl GameTree {
    /// Longest distance from each node to a terminal. Also serves as the
    /// acyclicity check: panics on a cycle.
    pub fn heights(&self) -> Vec<u32> {
        let mut heights = vec![u32::MAX; self.nodes.len()];
        // Iterative DFS with an explicit stack to avoid recursion limits.
        fn visit(nodes: &[Node], heights: &mut [u32], start: NodeRef) {
            let mut stack = vec![(start, false)];
            while let Some((n, expanded)) = stack.pop() {
                if heights[n] != u32::MAX && !expanded {
                    continue;
                }
                let children: Vec<NodeRef> = match &nodes[n].kind {
                    NodeKind::Terminal(_) => vec![],
                    NodeKind::Chance(edges) => edges.iter().map(|(_, c)| *c).collect(),
                    NodeKind::Decision { edges, .. } => edges.clone(),
                };
                if expanded {
                    heights[n] = children
                        .iter()
                        .map(|&c| heights[c].checked_add(1).expect("cycle in game graph"))
                        .max()
                        .unwrap_or(0);
                } else {
                    stack.push((n, true));
                    for c in children {
                        if heights[c] == u32::MAX {
                            stack.push((c, false));
                        }
                    }
                }
            }
        }
        visit(&self.nodes, &mut heights, self.root);
        heights
    }

    /// Solve order: block indices sorted leaf-most first (by the maximum
    /// height of their member nodes).
    pub fn solve_order(&self) -> Vec<BlockId> {
        let heights = self.heights();
        let mut block_height = vec![0u32; self.blocks.len()];
        for set in &self.info_sets {
            for &m in &set.members {
                if heights[m] != u32::MAX {
                    block_height[set.block] = block_height[set.block].max(heights[m]);
                }
            }
        }
        let mut order: Vec<BlockId> = (0..self.blocks.len()).collect();
        order.sort_by_key(|&b| block_height[b]);
        order
    }

    /// Structural sanity checks: edge/menu arity, delta arity, chance
    /// probabilities, member/block consistency. Builders call this before
    /// returning a game.
    pub fn validate(&self) -> Result<(), String> {
        let n_players = self.players.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.delta.len() != n_players {
                return Err(format!("node {i}: delta arity {} != players {n_players}", node.delta.len()));
            }
            match &node.kind {
                NodeKind::Chance(edges) => {
                    if edges.is_empty() {
                        return Err(format!("node {i}: chance node without edges"));
                    }
                    let total: f64 = edges.iter().map(|(p, _)| *p).sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(format!("node {i}: chance probabilities sum to {total}"));
                    }
                    for (_, c) in edges {
                        if *c >= self.nodes.len() {
                            return Err(format!("node {i}: dangling edge"));
                        }
                    }
                }
                NodeKind::Decision { info_set, edges } => {
                    let set = self
                        .info_sets
                        .get(*info_set)
                        .ok_or_else(|| format!("node {i}: dangling info set"))?;
                    if edges.len() != set.actions.len() {
                        return Err(format!(
                            "node {i}: {} edges for a {}-action menu",
                            edges.len(),
                            set.actions.len()
                        ));
                    }
                    if !set.members.contains(&i) {
                        return Err(format!("node {i}: not listed in its info set"));
                    }
                    for c in edges {
                        if *c >= self.nodes.len() {
                            return Err(format!("node {i}: dangling edge"));
                        }
                    }
                }
                NodeKind::Terminal(_) => {}
            }
        }
        for (s, set) in self.info_sets.iter().enumerate() {
            if set.members.is_empty() {
                return Err(format!("info set {s}: no members"));
            }
            if set.player >= n_players {
                return Err(format!("info set {s}: dangling player"));
            }
            if set.block >= self.blocks.len() {
                return Err(format!("info set {s}: dangling block"));
            }
            if let Some(t) = set.truthful {
                if t >= set.actions.len() {
                    return Err(format!("info set {s}: truthful action out of range"));
                }
            }
            for &m in &set.members {
                match &self.nodes[m].kind {
                    NodeKind::Decision { info_set, .. } if *info_set == s => {}
                    _ => return Err(format!("info set {s}: member {m} is not its decision node")),
                }
            }
        }
        // Heights double as the cycle check.
        let _ = self.heights();
        Ok(())
    }

    /// Expected per-player values and outcome distribution from `node`
    /// under a pure strategy (one action per info set). Values include the
    /// deltas of `node` itself. Intended for small games and tests; the
    /// solver keeps its own memoized evaluation.
    pub fn evaluate(&self, node: NodeRef, strategy: &Strategy) -> (Vec<f64>, OutcomeDist) {
        let mut memo: BTreeMap<NodeRef, (Vec<f64>, OutcomeDist)> = BTreeMap::new();
        self.eval_memo(node, strategy, &mut memo)
    }

    fn eval_memo(
        &self,
        node: NodeRef,
        strategy: &Strategy,
        memo: &mut BTreeMap<NodeRef, (Vec<f64>, OutcomeDist)>,
    ) -> (Vec<f64>, OutcomeDist) {
        if let Some(hit) = memo.get(&node) {
            return hit.clone();
        }
        let mut value = self.nodes[node].delta.clone();
        let mut dist = OutcomeDist::new();
        match &self.nodes[node].kind {
            NodeKind::Terminal(outcome) => {
                dist.insert(outcome.key(), 1.0);
            }
            NodeKind::Chance(edges) => {
                for (p, child) in edges.clone() {
                    let (v, d) = self.eval_memo(child, strategy, memo);
                    for (acc, x) in value.iter_mut().zip(&v) {
                        *acc += p * x;
                    }
                    dist_accumulate(&mut dist, &d, p);
                }
            }
            NodeKind::Decision { info_set, edges } => {
                let child = edges[strategy[*info_set]];
                let (v, d) = self.eval_memo(child, strategy, memo);
                for (acc, x) in value.iter_mut().zip(&v) {
                    *acc += x;
                }
                dist = d;
            }
        }
        memo.insert(node, (value.clone(), dist.clone()));
        (value, dist)
    }
}
