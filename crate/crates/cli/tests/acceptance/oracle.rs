//! Independent cross-check for the stage solver: enumerate *every* pure
//! strategy profile of a game tree and keep the ones that satisfy the
//! solution concept, re-derived here directly from the definitions.
//!
//! Nothing in this module reuses solver code. Evaluation, reach weights,
//! and the equilibrium predicate are all written from scratch against the
//! tree data model, so an agreement between this enumeration and the
//! solver's backward induction is meaningful evidence that both are right.
//!
//! The predicate mirrors the documented solution concept:
//!
//! 1. **Reactive rationality** — at every reactive information set, the
//!    chosen action maximizes the owner's expected continuation value under
//!    beliefs induced from the block entry (chance probabilities times the
//!    other players' strategy consistency; the owner's own edges count 1;
//!    unreached sets fall back to chance-only weights).
//! 2. **Stage rationality** — within each block, no owner of simultaneous
//!    sets can gain by jointly re-picking those sets, reactive play held
//!    fixed, measured at the block entry.
//! 3. **Global rationality** — no player can gain at the root by jointly
//!    re-picking *all* of their information sets (exact best response,
//!    maximized over the player's full pure strategy space).
//! 4. **Honest tie-breaking** — an honest player indifferent between the
//!    truthful action and something else plays the truthful action, at both
//!    layers. This is part of the solution concept: it eliminates babbling
//!    profiles sustained purely by indifference.

use stakemech::solver::tree::{
    dist_accumulate, GameTree, InfoSetId, Layer, NodeKind, NodeRef, OutcomeDist, PlayerId,
    PlayerKind, Strategy,
};
use std::collections::{BTreeSet, HashMap};

/// Number of pure strategy profiles of the tree, as a product of menu sizes.
pub fn profile_count(tree: &GameTree) -> u128 {
    tree.info_sets
        .iter()
        .map(|s| s.actions.len() as u128)
        .fold(1u128, |acc, m| acc.saturating_mul(m))
}

/// Exhaustive enumerator with memoized best-response values.
pub struct Oracle<'t> {
    tree: &'t GameTree,
    /// Simultaneous sets per block.
    stage_sets: Vec<Vec<InfoSetId>>,
    /// All reactive sets.
    reactive_sets: Vec<InfoSetId>,
    /// Exact best-response value per (player, everyone-else's profile).
    br_memo: HashMap<(PlayerId, Vec<usize>), f64>,
}

impl<'t> Oracle<'t> {
    pub fn new(tree: &'t GameTree) -> Oracle<'t> {
        let mut stage_sets = vec![Vec::new(); tree.blocks.len()];
        let mut reactive_sets = Vec::new();
        for (s, set) in tree.info_sets.iter().enumerate() {
            match set.layer {
                Layer::Simultaneous => stage_sets[set.block].push(s),
                Layer::Reactive => reactive_sets.push(s),
            }
        }
        Oracle {
            tree,
            stage_sets,
            reactive_sets,
            br_memo: HashMap::new(),
        }
    }

    /// Canonical strings of the outcome distributions of all equilibria
    /// found by exhaustive enumeration.
    pub fn equilibrium_outcome_set(&mut self, tol: f64) -> BTreeSet<String> {
        let menus: Vec<usize> = self.tree.info_sets.iter().map(|s| s.actions.len()).collect();
        let mut outcomes = BTreeSet::new();
        let mut profile: Strategy = vec![0; menus.len()];
        loop {
            if self.is_equilibrium(&profile, tol) {
                outcomes.insert(self.outcome_string(&profile));
            }
            // Advance the odometer.
            let mut k = 0;
            loop {
                if k == menus.len() {
                    return outcomes;
                }
                profile[k] += 1;
                if profile[k] < menus[k] {
                    break;
                }
                profile[k] = 0;
                k += 1;
            }
        }
    }

    /// Canonical string of the root outcome distribution under `profile`,
    /// quantized so fp noise cannot split identical distributions.
    pub fn outcome_string(&self, profile: &Strategy) -> String {
        let mut memo = HashMap::new();
        let dist = self.eval_dist(profile, self.tree.root, &mut memo);
        render_dist(&dist)
    }

    /// The full predicate described in the module docs.
    pub fn is_equilibrium(&mut self, profile: &Strategy, tol: f64) -> bool {
        self.reactive_rational(profile, tol)
            && self.stage_rational(profile, tol)
            && self.globally_rational(profile, tol)
    }

    // --- condition 1 + reactive half of condition 4 ---------------------------

    fn reactive_rational(&self, profile: &Strategy, tol: f64) -> bool {
        for &s in &self.reactive_sets {
            let set = &self.tree.info_sets[s];
            let entry = self.tree.blocks[set.block].entry;
            let weights = if set.members.len() == 1 {
                vec![1.0]
            } else {
                let w = self.reach_weights(profile, entry, s, true);
                if w.iter().sum::<f64>() > 0.0 {
                    w
                } else {
                    self.reach_weights(profile, entry, s, false)
                }
            };
            let mut memo = HashMap::new();
            let q: Vec<f64> = (0..set.actions.len())
                .map(|a| {
                    set.members
                        .iter()
                        .zip(&weights)
                        .filter(|(_, &w)| w > 0.0)
                        .map(|(&m, &w)| {
                            let child = match &self.tree.nodes[m].kind {
                                NodeKind::Decision { edges, .. } => edges[a],
                                _ => unreachable!("members are decision nodes"),
                            };
                            w * self.eval_values(profile, child, &mut memo)[set.player]
                        })
                        .sum()
                })
                .collect();
            let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if q[profile[s]] < best - tol {
                return false;
            }
            // Honest ties break toward the truthful action.
            if let (PlayerKind::Honest { .. }, Some(t)) =
                (&self.tree.players[set.player].kind, set.truthful)
            {
                if profile[s] != t && q[t] >= best - tol {
                    return false;
                }
            }
        }
        true
    }

    // --- condition 2 + stage half of condition 4 -------------------------------

    fn stage_rational(&self, profile: &Strategy, tol: f64) -> bool {
        for (block, sets) in self.stage_sets.iter().enumerate() {
            if sets.is_empty() {
                continue;
            }
            let entry = self.tree.blocks[block].entry;
            let mut memo = HashMap::new();
            let value = self.eval_values(profile, entry, &mut memo);

            // Honest owners must not be strictly indifferent about playing
            // the truthful stage action: if switching one set to truthful
            // loses nothing, the profile that actually plays it supersedes
            // this one.
            for &s in sets {
                let set = &self.tree.info_sets[s];
                let (PlayerKind::Honest { .. }, Some(t)) =
                    (&self.tree.players[set.player].kind, set.truthful)
                else {
                    continue;
                };
                if profile[s] == t {
                    continue;
                }
                let mut switched = profile.clone();
                switched[s] = t;
                let mut sw_memo = HashMap::new();
                let sw = self.eval_values(&switched, entry, &mut sw_memo);
                if sw[set.player] >= value[set.player] - tol {
                    return false;
                }
            }

            // Joint stage deviations per owner.
            let mut owners: Vec<PlayerId> =
                sets.iter().map(|&s| self.tree.info_sets[s].player).collect();
            owners.sort_unstable();
            owners.dedup();
            for owner in owners {
                let own: Vec<InfoSetId> = sets
                    .iter()
                    .copied()
                    .filter(|&s| self.tree.info_sets[s].player == owner)
                    .collect();
                let mut better = false;
                self.for_each_assignment(&own, &mut |assignment| {
                    if better || assignment.iter().zip(&own).all(|(&a, &s)| a == profile[s]) {
                        return;
                    }
                    let mut deviated = profile.clone();
                    for (&a, &s) in assignment.iter().zip(&own) {
                        deviated[s] = a;
                    }
                    let mut dev_memo = HashMap::new();
                    let dev = self.eval_values(&deviated, entry, &mut dev_memo);
                    if dev[owner] > value[owner] + tol {
                        better = true;
                    }
                });
                if better {
                    return false;
                }
            }
        }
        true
    }

    // --- condition 3 ------------------------------------------------------------

    fn globally_rational(&mut self, profile: &Strategy, tol: f64) -> bool {
        let mut memo = HashMap::new();
        let value = self.eval_values(profile, self.tree.root, &mut memo);
        for (player, &v) in value.iter().enumerate() {
            if self.best_response_value(profile, player) > v + tol {
                return false;
            }
        }
        true
    }

    /// Exact best response: maximize the player's root value over all joint
    /// assignments of their own sets, everyone else fixed. Memoized on the
    /// others' profile, which is all the value depends on.
    fn best_response_value(&mut self, profile: &Strategy, player: PlayerId) -> f64 {
        let own: Vec<InfoSetId> = (0..self.tree.info_sets.len())
            .filter(|&s| self.tree.info_sets[s].player == player)
            .collect();
        let mut key: Vec<usize> = profile.clone();
        for &s in &own {
            key[s] = usize::MAX;
        }
        if let Some(&hit) = self.br_memo.get(&(player, key.clone())) {
            return hit;
        }
        let tree = self.tree;
        let root = tree.root;
        let mut best = f64::NEG_INFINITY;
        let mut candidate = profile.clone();
        self.for_each_assignment(&own, &mut |assignment| {
            for (&a, &s) in assignment.iter().zip(&own) {
                candidate[s] = a;
            }
            let mut memo = HashMap::new();
            let v = eval_values_in(tree, &candidate, root, &mut memo)[player];
            if v > best {
                best = v;
            }
        });
        self.br_memo.insert((player, key), best);
        best
    }

    /// Calls `f` with every joint action assignment of `sets` (odometer).
    fn for_each_assignment(&self, sets: &[InfoSetId], f: &mut impl FnMut(&[usize])) {
        let menus: Vec<usize> = sets
            .iter()
            .map(|&s| self.tree.info_sets[s].actions.len())
            .collect();
        let mut counter = vec![0usize; sets.len()];
        loop {
            f(&counter);
            let mut k = 0;
            loop {
                if k == sets.len() {
                    return;
                }
                counter[k] += 1;
                if counter[k] < menus[k] {
                    break;
                }
                counter[k] = 0;
                k += 1;
            }
        }
    }

    // --- evaluation -------------------------------------------------------------

    fn eval_values(
        &self,
        profile: &Strategy,
        node: NodeRef,
        memo: &mut HashMap<NodeRef, Vec<f64>>,
    ) -> Vec<f64> {
        eval_values_in(self.tree, profile, node, memo)
    }

    fn eval_dist(
        &self,
        profile: &Strategy,
        node: NodeRef,
        memo: &mut HashMap<NodeRef, OutcomeDist>,
    ) -> OutcomeDist {
        if let Some(hit) = memo.get(&node) {
            return hit.clone();
        }
        let mut dist = OutcomeDist::new();
        match &self.tree.nodes[node].kind {
            NodeKind::Terminal(outcome) => {
                dist.insert(outcome.key(), 1.0);
            }
            NodeKind::Chance(edges) => {
                for (p, child) in edges {
                    let d = self.eval_dist(profile, *child, memo);
                    dist_accumulate(&mut dist, &d, *p);
                }
            }
            NodeKind::Decision { info_set, edges } => {
                dist = self.eval_dist(profile, edges[profile[*info_set]], memo);
            }
        }
        memo.insert(node, dist.clone());
        dist
    }

    /// Reach weight of each member of `set_id`, walking down from `entry`:
    /// chance edges multiply by probability, other players' decisions follow
    /// their strategy (weight 1 on the played edge, 0 elsewhere), the owner's
    /// own decisions count every edge with weight 1. The walk stops at
    /// members. With `use_sigma = false` the strategy filter is dropped
    /// (chance-only fallback for sets unreached under the profile).
    fn reach_weights(
        &self,
        profile: &Strategy,
        entry: NodeRef,
        set_id: InfoSetId,
        use_sigma: bool,
    ) -> Vec<f64> {
        let set = &self.tree.info_sets[set_id];
        let owner = set.player;
        let member_pos: HashMap<NodeRef, usize> = set
            .members
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, i))
            .collect();
        let mut weights = vec![0.0; set.members.len()];
        // Path-sum recursion: every root-to-member path contributes the
        // product of its edge weights. Revisiting shared nodes is fine; the
        // graphs here are small.
        struct Walk<'a> {
            tree: &'a GameTree,
            profile: &'a Strategy,
            member_pos: &'a HashMap<NodeRef, usize>,
            owner: PlayerId,
            use_sigma: bool,
        }
        impl Walk<'_> {
            fn go(&self, weights: &mut [f64], node: NodeRef, w: f64) {
                if w == 0.0 {
                    return;
                }
                if let Some(&pos) = self.member_pos.get(&node) {
                    weights[pos] += w;
                    return;
                }
                match &self.tree.nodes[node].kind {
                    NodeKind::Terminal(_) => {}
                    NodeKind::Chance(edges) => {
                        for (p, child) in edges {
                            self.go(weights, *child, w * p);
                        }
                    }
                    NodeKind::Decision { info_set, edges } => {
                        if self.tree.info_sets[*info_set].player == self.owner || !self.use_sigma {
                            for &child in edges {
                                self.go(weights, child, w);
                            }
                        } else {
                            self.go(weights, edges[self.profile[*info_set]], w);
                        }
                    }
                }
            }
        }
        Walk {
            tree: self.tree,
            profile,
            member_pos: &member_pos,
            owner,
            use_sigma,
        }
        .go(&mut weights, entry, 1.0);
        weights
    }
}

/// Per-player expected values of `node` under a pure profile (free function
/// so the best-response closure can use it while `self` is borrowed).
fn eval_values_in(
    tree: &GameTree,
    profile: &Strategy,
    node: NodeRef,
    memo: &mut HashMap<NodeRef, Vec<f64>>,
) -> Vec<f64> {
    if let Some(hit) = memo.get(&node) {
        return hit.clone();
    }
    let mut value = tree.nodes[node].delta.clone();
    match &tree.nodes[node].kind {
        NodeKind::Terminal(_) => {}
        NodeKind::Chance(edges) => {
            for (p, child) in edges {
                let v = eval_values_in(tree, profile, *child, memo);
                for (acc, x) in value.iter_mut().zip(&v) {
                    *acc += p * x;
                }
            }
        }
        NodeKind::Decision { info_set, edges } => {
            let v = eval_values_in(tree, profile, edges[profile[*info_set]], memo);
            for (acc, x) in value.iter_mut().zip(&v) {
                *acc += x;
            }
        }
    }
    memo.insert(node, value.clone());
    value
}

/// Canonical rendering of an outcome distribution with probabilities
/// quantized to 1e-9 (entries rounding to zero are dropped).
pub fn render_dist(dist: &OutcomeDist) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for ((label, round, fines_q), p) in dist {
        let pq = (p * 1e9).round() as i64;
        if pq == 0 {
            continue;
        }
        write!(out, "{label}|r{round}|f{fines_q}={pq};").unwrap();
    }
    out
}
