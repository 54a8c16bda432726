//! Builds the extensive-form commit-round game for a small population.
//!
//! The game starts (by default) with a chance draw of an ordered
//! proposer/confirmer pair, both seats report simultaneously, a mismatch
//! fines both and gives the proposer one revision, and a failed revision
//! excludes the pair and moves play to the next round's draw over the
//! surviving roster — exactly the mechanics of [`crate::sr`]. Positions are
//! keyed by the surviving roster, so all histories reaching the same roster
//! share one subgraph (see [`super::tree`] on why that is sound).
//!
//! Players: each honest node is its own player; each coalition is a *single*
//! player controlling all its member seats, so joint deviations by the
//! coalition are part of the equilibrium requirement. Honest players can
//! report the true block or a fabricated one, but never a coalition's
//! distorted block — that content is coalition-private until committed.
//!
//! Information sets encode who can see what:
//! * informed seats know the partner's identity (and hence allegiance), but
//!   initial reports are simultaneous: the confirmer's set pools the
//!   proposer's report — unless both seats belong to the same player, who
//!   remembers its own proposal;
//! * the challenge set pools the confirmer's report (again, unless the same
//!   player controls both seats);
//! * blind seats see only the surviving roster: one set per (roster, node)
//!   pools partner identity and role alike. Blind games with multi-node
//!   coalitions are rejected — a team that cannot share what its members
//!   observe cannot be modeled as one rational player.

use super::tree::{
    ActionLabel, Block, BlockId, GameTree, InfoSet, InfoSetId, Layer, Node, NodeKind, NodeRef,
    Outcome, PlayerId, PlayerKind, PlayerSpec,
};
use super::BuildError;
use crate::agents::AgentPolicy;
use crate::sr::{Message, RoundParams, SeatVisibility};
use std::collections::HashMap;

/// Largest population the solver accepts; beyond this the stage-game
/// enumeration stops being interactive.
pub const MAX_POPULATION: usize = 6;

/// Specification of a commit game to build.
#[derive(Debug, Clone)]
pub struct BftGameSpec<'a> {
    /// Population policies; utility parameters are read from them. Honest
    /// and attacker policies only (the solver models rational play, so
    /// scripted agents have no place here; an attacker's one-shot/patient
    /// variant tag is likewise irrelevant).
    pub policies: &'a [AgentPolicy],
    pub params: RoundParams,
    pub visibility: SeatVisibility,
    /// Root the game at this (proposer, confirmer) pair instead of a chance
    /// draw; later rounds draw normally.
    pub fixed_pair: Option<(usize, usize)>,
}

struct Builder<'a> {
    spec: &'a BftGameSpec<'a>,
    players: Vec<PlayerSpec>,
    node_player: Vec<PlayerId>,
    nodes: Vec<Node>,
    info_sets: Vec<InfoSet>,
    blocks: Vec<Block>,
    set_index: HashMap<String, InfoSetId>,
    block_index: HashMap<String, BlockId>,
    anchors: HashMap<u64, NodeRef>,
    n0: usize,
}

pub fn build_bft_game(spec: &BftGameSpec) -> Result<GameTree, BuildError> {
    let n = spec.policies.len();
    if !(2..=MAX_POPULATION).contains(&n) {
        return Err(BuildError::PopulationTooLarge {
            n,
            max: MAX_POPULATION,
        });
    }
    let (players, node_player) = assign_players(spec.policies)?;
    if spec.visibility == SeatVisibility::Blind {
        for p in &players {
            if matches!(p.kind, PlayerKind::Coalition { .. }) && p.member_nodes.len() > 1 {
                return Err(BuildError::Unsupported(
                    "blind games with multi-node coalitions (distributed team information)".into(),
                ));
            }
        }
    }
    if let Some((p, c)) = spec.fixed_pair {
        if p == c || p >= n || c >= n {
            return Err(BuildError::Unsupported(format!(
                "fixed pair ({p}, {c}) is not two distinct population nodes"
            )));
        }
    }

    let mut b = Builder {
        spec,
        players,
        node_player,
        nodes: Vec::new(),
        info_sets: Vec::new(),
        blocks: Vec::new(),
        set_index: HashMap::new(),
        block_index: HashMap::new(),
        anchors: HashMap::new(),
        n0: n,
    };
    let full: u64 = (1 << n) - 1;
    let root = match spec.fixed_pair {
        Some((p, c)) => b.pair_entry(full, p, c),
        None => b.anchor(full),
    };
    let tree = GameTree {
        players: b.players,
        nodes: b.nodes,
        info_sets: b.info_sets,
        blocks: b.blocks,
        root,
    };
    tree.validate().map_err(BuildError::Internal)?;
    Ok(tree)
}

/// Maps population nodes to solver players: one player per honest node, one
/// per coalition (controlling every member seat).
pub(super) fn assign_players(
    policies: &[AgentPolicy],
) -> Result<(Vec<PlayerSpec>, Vec<PlayerId>), BuildError> {
    let mut players: Vec<PlayerSpec> = Vec::new();
    let mut by_coalition: HashMap<u32, PlayerId> = HashMap::new();
    let mut node_player = Vec::with_capacity(policies.len());
    for (i, policy) in policies.iter().enumerate() {
        let pid = match policy {
            AgentPolicy::Honest {
                true_chain_utility,
                false_chain_disutility,
            } => {
                players.push(PlayerSpec {
                    name: format!("node{i}"),
                    kind: PlayerKind::Honest {
                        true_chain_utility: *true_chain_utility,
                        false_chain_disutility: *false_chain_disutility,
                    },
                    member_nodes: vec![i],
                });
                players.len() - 1
            }
            AgentPolicy::Attacker(a) => match by_coalition.get(&a.coalition) {
                Some(&pid) => {
                    let existing = &players[pid];
                    if existing.kind
                        != (PlayerKind::Coalition {
                            coalition: a.coalition,
                            theta: a.theta,
                            burn_aversion: a.burn_aversion,
                        })
                    {
                        return Err(BuildError::Unsupported(format!(
                            "coalition {} members disagree on utility parameters",
                            a.coalition
                        )));
                    }
                    players[pid].member_nodes.push(i);
                    pid
                }
                None => {
                    players.push(PlayerSpec {
                        name: format!("coalition{}", a.coalition),
                        kind: PlayerKind::Coalition {
                            coalition: a.coalition,
                            theta: a.theta,
                            burn_aversion: a.burn_aversion,
                        },
                        member_nodes: vec![i],
                    });
                    by_coalition.insert(a.coalition, players.len() - 1);
                    players.len() - 1
                }
            },
            AgentPolicy::Scripted(_) => {
                return Err(BuildError::Unsupported(
                    "scripted agents have no rational-play model to solve".into(),
                ))
            }
        };
        node_player.push(pid);
    }
    Ok((players, node_player))
}

impl<'a> Builder<'a> {
    fn menu(&self, node: usize) -> Vec<Message> {
        match &self.players[self.node_player[node]].kind {
            PlayerKind::Honest { .. } => vec![Message::Truth, Message::Fresh],
            PlayerKind::Coalition { coalition, .. } => {
                vec![Message::Truth, Message::Preferred(*coalition), Message::Fresh]
            }
        }
    }

    fn round_of(&self, roster: u64) -> u32 {
        ((self.n0 - roster.count_ones() as usize) / 2) as u32
    }

    /// Total fines burned on the way to `roster`: every completed round
    /// excluded one pair and burned both its fines.
    fn burned_before(&self, roster: u64) -> f64 {
        (0..self.round_of(roster))
            .map(|j| 2.0 * self.spec.params.fine_schedule.fine(j))
            .sum()
    }

    fn zero_delta(&self) -> Vec<f64> {
        vec![0.0; self.players.len()]
    }

    /// Utility increments when `content` commits: proposer reward, an
    /// optional confirmer refund, and everyone's chain-quality terms.
    fn commit_delta(&self, proposer: usize, content: Message, refund: Option<(usize, f64)>) -> Vec<f64> {
        let mut delta = self.zero_delta();
        delta[self.node_player[proposer]] += self.spec.params.reward;
        if let Some((c, amount)) = refund {
            delta[self.node_player[c]] += amount;
        }
        for (pid, player) in self.players.iter().enumerate() {
            match (&player.kind, content) {
                (PlayerKind::Honest { true_chain_utility, .. }, Message::Truth) => {
                    delta[pid] += true_chain_utility;
                }
                (PlayerKind::Honest { false_chain_disutility, .. }, Message::Preferred(_)) => {
                    delta[pid] -= false_chain_disutility;
                }
                (PlayerKind::Coalition { coalition, theta, .. }, Message::Preferred(k))
                    if *coalition == k =>
                {
                    delta[pid] += theta;
                }
                _ => {}
            }
        }
        delta
    }

    fn push_node(&mut self, node: Node) -> NodeRef {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Fetches or creates the info set under `key`; appends `member`.
    #[allow(clippy::too_many_arguments)]
    fn member_of(
        &mut self,
        key: String,
        player: PlayerId,
        actions: Vec<ActionLabel>,
        layer: Layer,
        block: BlockId,
        truthful: Option<usize>,
        member: NodeRef,
    ) -> InfoSetId {
        if let Some(&id) = self.set_index.get(&key) {
            self.info_sets[id].members.push(member);
            debug_assert_eq!(self.info_sets[id].actions, actions);
            return id;
        }
        self.info_sets.push(InfoSet {
            player,
            actions,
            members: vec![member],
            layer,
            block,
            truthful,
            key: key.clone(),
        });
        let id = self.info_sets.len() - 1;
        self.set_index.insert(key, id);
        id
    }

    /// Chance anchor for a surviving roster: draws an ordered pair, or
    /// terminates when fewer than two nodes remain.
    fn anchor(&mut self, roster: u64) -> NodeRef {
        if let Some(&node) = self.anchors.get(&roster) {
            return node;
        }
        let active: Vec<usize> = (0..self.n0).filter(|i| roster & (1 << i) != 0).collect();
        let node = if active.len() < 2 {
            let outcome = Outcome {
                label: "exhausted".into(),
                round: self.round_of(roster),
                fines_burned: self.burned_before(roster),
            };
            self.push_node(Node {
                kind: NodeKind::Terminal(outcome),
                delta: self.zero_delta(),
            })
        } else {
            // Reserve the chance node index before building children so
            // children cannot collide with it, then fill in the edges.
            let placeholder = self.push_node(Node {
                kind: NodeKind::Chance(vec![]),
                delta: self.zero_delta(),
            });
            self.anchors.insert(roster, placeholder);
            let prob = 1.0 / (active.len() * (active.len() - 1)) as f64;
            let mut edges = Vec::new();
            for &p in &active {
                for &c in &active {
                    if p != c {
                        edges.push((prob, self.pair_entry(roster, p, c)));
                    }
                }
            }
            self.nodes[placeholder].kind = NodeKind::Chance(edges);
            return placeholder;
        };
        self.anchors.insert(roster, node);
        node
    }

    /// Index of `Send(Truth)` within a menu.
    fn truth_index(menu: &[Message]) -> Option<usize> {
        menu.iter().position(|m| *m == Message::Truth)
    }

    fn pair_entry(&mut self, roster: u64, p: usize, c: usize) -> NodeRef {
        let round = self.round_of(roster);
        let fine = self.spec.params.fine_schedule.fine(round);
        let p_menu = self.menu(p);
        let c_menu = self.menu(c);
        let p_owner = self.node_player[p];
        let c_owner = self.node_player[c];
        let same_owner = p_owner == c_owner;
        let blind = self.spec.visibility == SeatVisibility::Blind;

        // Block identity: one per pair when informed, one per roster when
        // blind (the blind stage profile spans the whole draw).
        let block_key = if blind {
            format!("state r{roster:02x}")
        } else {
            format!("pair {p}->{c} r{roster:02x}")
        };
        let block = self.block_for(&block_key, roster, blind);

        let mut p_edges = Vec::new();
        for &m_p in &p_menu {
            let mut c_edges = Vec::new();
            for &m_c in &c_menu {
                let child = if m_p.matches(&m_c) {
                    let outcome = Outcome {
                        label: format!("commit:{m_c}"),
                        round,
                        fines_burned: self.burned_before(roster),
                    };
                    let delta = self.commit_delta(p, m_c, None);
                    self.push_node(Node {
                        kind: NodeKind::Terminal(outcome),
                        delta,
                    })
                } else {
                    self.challenge_node(roster, p, c, m_p, m_c, fine, block, same_owner, blind)
                };
                c_edges.push(child);
            }
            let c_node = self.push_node(Node {
                kind: NodeKind::Decision { info_set: 0, edges: c_edges },
                delta: self.zero_delta(),
            });
            let (c_key, c_layer) = if blind {
                (format!("b1:r{roster:02x}:n{c}"), Layer::Simultaneous)
            } else if same_owner {
                (format!("ic:r{roster:02x}:{p}->{c}:after{m_p}"), Layer::Reactive)
            } else {
                (format!("ic:r{roster:02x}:{p}->{c}"), Layer::Simultaneous)
            };
            let c_set = self.member_of(
                c_key,
                c_owner,
                c_menu.iter().map(|&m| ActionLabel::Send(m)).collect(),
                c_layer,
                block,
                Self::truth_index(&c_menu),
                c_node,
            );
            if let NodeKind::Decision { info_set, .. } = &mut self.nodes[c_node].kind {
                *info_set = c_set;
            }
            p_edges.push(c_node);
        }

        let p_node = self.push_node(Node {
            kind: NodeKind::Decision { info_set: 0, edges: p_edges },
            delta: self.zero_delta(),
        });
        let p_key = if blind {
            format!("b1:r{roster:02x}:n{p}")
        } else {
            format!("ip:r{roster:02x}:{p}->{c}")
        };
        let p_set = self.member_of(
            p_key,
            p_owner,
            p_menu.iter().map(|&m| ActionLabel::Send(m)).collect(),
            Layer::Simultaneous,
            block,
            Self::truth_index(&p_menu),
            p_node,
        );
        if let NodeKind::Decision { info_set, .. } = &mut self.nodes[p_node].kind {
            *info_set = p_set;
        }
        if self.blocks[block].entry == usize::MAX {
            self.blocks[block].entry = p_node;
        }
        p_node
    }

    /// Mismatch position: both seats are fined on entry, then the proposer
    /// revises once. A matching revision commits the confirmer's report and
    /// refunds the confirmer; anything else excludes the pair.
    #[allow(clippy::too_many_arguments)]
    fn challenge_node(
        &mut self,
        roster: u64,
        p: usize,
        c: usize,
        m_p: Message,
        m_c: Message,
        fine: f64,
        block: BlockId,
        same_owner: bool,
        blind: bool,
    ) -> NodeRef {
        let round = self.round_of(roster);
        let p_menu = self.menu(p);
        let next_roster = roster & !(1 << p) & !(1 << c);
        let burn_child = self.anchor(next_roster);

        let mut edges = Vec::new();
        for &revision in &p_menu {
            let child = if revision.matches(&m_c) {
                let outcome = Outcome {
                    label: format!("commit:{m_c}"),
                    round,
                    // The proposer's fine is not refunded: it burns.
                    fines_burned: self.burned_before(roster) + fine,
                };
                let delta = self.commit_delta(p, m_c, Some((c, fine)));
                self.push_node(Node {
                    kind: NodeKind::Terminal(outcome),
                    delta,
                })
            } else {
                burn_child
            };
            edges.push(child);
        }

        let mut delta = self.zero_delta();
        delta[self.node_player[p]] -= fine;
        delta[self.node_player[c]] -= fine;
        let node = self.push_node(Node {
            kind: NodeKind::Decision { info_set: 0, edges },
            delta,
        });
        let key = if blind {
            format!("bch:r{roster:02x}:p{p}:after{m_p}")
        } else if same_owner {
            format!("ch:r{roster:02x}:{p}->{c}:after{m_p}:saw{m_c}")
        } else {
            format!("ch:r{roster:02x}:{p}->{c}:after{m_p}")
        };
        let set = self.member_of(
            key,
            self.node_player[p],
            p_menu.iter().map(|&m| ActionLabel::Send(m)).collect(),
            Layer::Reactive,
            block,
            Self::truth_index(&p_menu),
            node,
        );
        if let NodeKind::Decision { info_set, .. } = &mut self.nodes[node].kind {
            *info_set = set;
        }
        node
    }

    fn block_for(&mut self, key: &str, roster: u64, blind: bool) -> BlockId {
        if let Some(&id) = self.block_index.get(key) {
            return id;
        }
        // A blind stage spans the whole draw, so its entry is the roster's
        // chance anchor (already reserved when we are called from under it).
        // Informed stages — and a blind fixed-pair root, which has no
        // anchor — are entered at the proposer node, which does not exist
        // yet; leave a sentinel for `pair_entry` to patch.
        let entry = match (blind, self.anchors.get(&roster)) {
            (true, Some(&anchor)) => anchor,
            _ => usize::MAX,
        };
        self.blocks.push(Block {
            entry,
            label: key.to_string(),
        });
        let id = self.blocks.len() - 1;
        self.block_index.insert(key.to_string(), id);
        id
    }
}
