//! Pure-strategy equilibrium search over [`super::tree::GameTree`].
//!
//! The solver finds every pure strategy profile that is both sequentially
//! rational stage by stage and an ex-ante Nash equilibrium, in two phases:
//!
//! 1. **Stage sweep.** Blocks are processed leaf-most first. Within a
//!    block, all combinations of the simultaneous-layer actions are
//!    enumerated; for each, the reactive-layer sets are assigned best
//!    responses by backward induction under beliefs consistent with the
//!    stage profile (reactive ties branch into separate candidates; sets
//!    that the profile never reaches get chance-only beliefs). A candidate
//!    survives if no player can gain by jointly re-picking the actions of
//!    all its simultaneous sets in the block — reactive assignments are
//!    reused unchanged, which is exact here: a reactive set is keyed by its
//!    owner's own earlier actions, so the owner's deviation lands on a set
//!    whose assigned action is already a best response to the *others'*
//!    unchanged strategies, and others cannot observe the deviation within
//!    the stage. Each survivor extends the partial solution; partials whose
//!    (value, outcome) fingerprints agree at every solved block entry are
//!    merged, so payoff-irrelevant indifference does not multiply.
//!
//!    Honest players break exact payoff ties toward their truthful action —
//!    at reactive sets the tied branch keeps only the truthful action, and a
//!    stage candidate is discarded when an honest set plays a non-truthful
//!    action that merely ties the truthful switch. This tie preference is
//!    part of the solution concept, not presentation: it eliminates babbling
//!    profiles sustained solely by honest indifference (for example, an
//!    honest confirmer reporting an unmatchable fresh block because, given a
//!    garbage proposal, truth earns no more). Coalition ties are resolved by
//!    burn aversion inside the utilities where the mechanism intends it;
//!    remaining coalition ties branch and are reported, never broken.
//!
//! 2. **Global audit.** Each completed profile is checked player by player
//!    against *every* pure deviation, by dynamic programming: a forward
//!    pass computes reach weights that follow the others' strategy and
//!    chance (the player's own edges count one each — sound because every
//!    information set in these games pools only same-position histories, so
//!    a player's own earlier choices scale all members of a set equally and
//!    cancel from its beliefs); the player's sets are then re-optimized
//!    deepest first. A profile survives only if no player's best response
//!    beats its equilibrium value. Failing every candidate is reported as
//!    [`SolveError::NoPureEquilibrium`] — never papered over.
//!
//! Among surviving equilibria, the report selects the one with the most
//! truthful honest actions (then lexicographically least), and says whether
//! the outcome distribution — and the strategy itself — was unique.

use super::tree::{
    dist_close, ActionId, GameTree, InfoSetId, Layer, NodeKind, NodeRef, OutcomeDist, PlayerId,
    PlayerKind, Strategy,
};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Most coexisting partial solutions; exceeded means the game has too
    /// much payoff-relevant indifference to enumerate exactly.
    pub max_candidates: usize,
    /// Payoff comparisons treat differences within this as ties.
    pub tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_candidates: 256,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    /// No pure strategy profile survived both phases.
    #[error("the game has no pure-strategy equilibrium under the stage structure")]
    NoPureEquilibrium,
    /// Payoff-relevant ties multiplied beyond the candidate budget.
    #[error("more than {limit} equilibrium candidates; raise max_candidates to enumerate")]
    TooManyCandidates { limit: usize },
    /// The tree violates a structural assumption of the solver.
    #[error("unsupported game structure: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Every surviving equilibrium (one representative per merged family).
    pub equilibria: Vec<Strategy>,
    /// The selected representative: most truthful honest actions, then
    /// lexicographically least.
    pub selected: Strategy,
    /// Expected utility per player at the root under `selected`.
    pub root_values: Vec<f64>,
    /// Outcome distribution at the root under `selected`.
    pub outcome: OutcomeDist,
    /// All equilibria induce this same outcome distribution.
    pub outcome_unique: bool,
    /// Exactly one equilibrium strategy survived, with no merged variants.
    pub strategy_unique: bool,
}

/// A partially solved game: choices for the sets of solved blocks, plus
/// memoized evaluations of the territory those choices pin down.
#[derive(Debug, Clone)]
struct Partial {
    choices: Vec<Option<ActionId>>,
    memo: HashMap<NodeRef, (Vec<f64>, OutcomeDist)>,
}

pub fn solve(tree: &GameTree, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    tree.validate().map_err(SolveError::Unsupported)?;
    let heights = tree.heights();
    let order = tree.solve_order();

    // Partition each block's sets into the simultaneous stage profile and
    // the reactive responses, the latter deepest-first for backward induction.
    let mut block_sets: Vec<(Vec<InfoSetId>, Vec<InfoSetId>)> =
        vec![(Vec::new(), Vec::new()); tree.blocks.len()];
    for (s, set) in tree.info_sets.iter().enumerate() {
        match set.layer {
            Layer::Simultaneous => block_sets[set.block].0.push(s),
            Layer::Reactive => block_sets[set.block].1.push(s),
        }
    }
    let set_height = |s: InfoSetId| -> u32 {
        tree.info_sets[s]
            .members
            .iter()
            .map(|&m| heights[m])
            .filter(|&h| h != u32::MAX)
            .max()
            .unwrap_or(0)
    };
    for (_, l2) in block_sets.iter_mut() {
        l2.sort_by_key(|&s| (set_height(s), s));
    }

    let mut partials = vec![Partial {
        choices: vec![None; tree.info_sets.len()],
        memo: HashMap::new(),
    }];
    let mut merged_any = false;
    let mut solved_entries: Vec<NodeRef> = Vec::new();

    for &b in &order {
        let (l1, l2) = &block_sets[b];
        let mut next: Vec<Partial> = Vec::new();
        for partial in &partials {
            let candidates = solve_block(tree, &heights, b, l1, l2, partial, opts)?;
            for assignment in candidates {
                let mut child = partial.clone();
                for (s, a) in &assignment {
                    child.choices[*s] = Some(*a);
                }
                finalize(tree, &mut child, tree.blocks[b].entry);
                next.push(child);
                if next.len() > opts.max_candidates {
                    return Err(SolveError::TooManyCandidates {
                        limit: opts.max_candidates,
                    });
                }
            }
        }
        solved_entries.push(tree.blocks[b].entry);
        solved_entries.sort_unstable();
        solved_entries.dedup();

        // Merge partials that are indistinguishable at every solved entry:
        // they play on identically from here.
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut deduped: Vec<Partial> = Vec::new();
        for partial in next {
            let sig = fingerprint(&partial, &solved_entries);
            if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(sig) {
                slot.insert(deduped.len());
                deduped.push(partial);
            } else {
                merged_any = true;
            }
        }
        if deduped.is_empty() {
            return Err(SolveError::NoPureEquilibrium);
        }
        partials = deduped;
    }

    // Global audit: keep profiles no player can beat with any pure deviation.
    let mut equilibria: Vec<Strategy> = Vec::new();
    for partial in &partials {
        let strategy: Strategy = partial
            .choices
            .iter()
            .map(|c| c.expect("all blocks solved"))
            .collect();
        let (values, _) = tree.evaluate(tree.root, &strategy);
        let mut beaten = false;
        for (i, &value) in values.iter().enumerate() {
            let br = best_response_value(tree, &heights, &strategy, i);
            if br > value + opts.tolerance {
                beaten = true;
                break;
            }
        }
        if !beaten {
            equilibria.push(strategy);
        }
    }
    if equilibria.is_empty() {
        return Err(SolveError::NoPureEquilibrium);
    }

    // Selection: most truthful honest actions, then lexicographic order.
    let truthful_score = |s: &Strategy| -> usize {
        tree.info_sets
            .iter()
            .enumerate()
            .filter(|(idx, set)| {
                matches!(tree.players[set.player].kind, PlayerKind::Honest { .. })
                    && set.truthful == Some(s[*idx])
            })
            .count()
    };
    let selected = equilibria
        .iter()
        .max_by(|a, b| {
            truthful_score(a)
                .cmp(&truthful_score(b))
                .then_with(|| b.cmp(a)) // lexicographically least wins ties
        })
        .expect("nonempty")
        .clone();
    let (root_values, outcome) = tree.evaluate(tree.root, &selected);
    let outcome_unique = equilibria.iter().all(|e| {
        let (_, d) = tree.evaluate(tree.root, e);
        dist_close(&d, &outcome, opts.tolerance)
    });
    let strategy_unique = equilibria.len() == 1 && !merged_any;

    Ok(SolveReport {
        equilibria,
        selected,
        root_values,
        outcome,
        outcome_unique,
        strategy_unique,
    })
}

/// Quantized (values, outcomes) fingerprint of a partial at the solved
/// block entries.
fn fingerprint(partial: &Partial, entries: &[NodeRef]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for &entry in entries {
        let (values, dist) = partial
            .memo
            .get(&entry)
            .expect("solved entries are finalized");
        write!(out, "@{entry}[").unwrap();
        for v in values {
            write!(out, "{};", (v * 1e9).round() as i64).unwrap();
        }
        out.push(']');
        for (k, p) in dist {
            write!(out, "{}|{}|{}={};", k.0, k.1, k.2, (p * 1e9).round() as i64).unwrap();
        }
    }
    out
}

/// Evaluates `node` under the partial's committed choices, memoizing every
/// node visited — called once a block is committed, so the whole subtree is
/// choice-complete.
fn finalize(tree: &GameTree, partial: &mut Partial, entry: NodeRef) {
    fn rec(
        tree: &GameTree,
        choices: &[Option<ActionId>],
        memo: &mut HashMap<NodeRef, (Vec<f64>, OutcomeDist)>,
        node: NodeRef,
    ) -> (Vec<f64>, OutcomeDist) {
        if let Some(hit) = memo.get(&node) {
            return hit.clone();
        }
        let mut value = tree.nodes[node].delta.clone();
        let mut dist = OutcomeDist::new();
        match &tree.nodes[node].kind {
            NodeKind::Terminal(outcome) => {
                dist.insert(outcome.key(), 1.0);
            }
            NodeKind::Chance(edges) => {
                for (p, child) in edges {
                    let (v, d) = rec(tree, choices, memo, *child);
                    for (acc, x) in value.iter_mut().zip(&v) {
                        *acc += p * x;
                    }
                    super::tree::dist_accumulate(&mut dist, &d, *p);
                }
            }
            NodeKind::Decision { info_set, edges } => {
                let a = choices[*info_set].expect("finalized subtree has all choices");
                let (v, d) = rec(tree, choices, memo, edges[a]);
                for (acc, x) in value.iter_mut().zip(&v) {
                    *acc += x;
                }
                dist = d;
            }
        }
        memo.insert(node, (value.clone(), dist.clone()));
        (value, dist)
    }
    let mut memo = std::mem::take(&mut partial.memo);
    rec(tree, &partial.choices, &mut memo, entry);
    partial.memo = memo;
}

/// Per-player expected value of `node` under overlay + committed choices.
/// The local memo must be scoped to one overlay.
fn eval_overlay(
    tree: &GameTree,
    partial: &Partial,
    overlay: &BTreeMap<InfoSetId, ActionId>,
    local: &mut HashMap<NodeRef, Vec<f64>>,
    node: NodeRef,
) -> Vec<f64> {
    if let Some((v, _)) = partial.memo.get(&node) {
        return v.clone();
    }
    if let Some(hit) = local.get(&node) {
        return hit.clone();
    }
    let mut value = tree.nodes[node].delta.clone();
    match &tree.nodes[node].kind {
        NodeKind::Terminal(_) => {}
        NodeKind::Chance(edges) => {
            for (p, child) in edges {
                let v = eval_overlay(tree, partial, overlay, local, *child);
                for (acc, x) in value.iter_mut().zip(&v) {
                    *acc += p * x;
                }
            }
        }
        NodeKind::Decision { info_set, edges } => {
            let a = overlay
                .get(info_set)
                .copied()
                .or(partial.choices[*info_set])
                .expect("evaluation reached an unassigned information set");
            let v = eval_overlay(tree, partial, overlay, local, edges[a]);
            for (acc, x) in value.iter_mut().zip(&v) {
                *acc += x;
            }
        }
    }
    local.insert(node, value.clone());
    value
}

/// Reach weights of the members of `set_id` from the block entry: chance
/// probabilities times consistency with the other players' stage actions;
/// the owner's own edges each count 1 (all members share the same own
/// history, so this cancels in normalization). `use_sigma = false` drops
/// the others' consistency factor (chance-only fallback for unreached sets).
fn member_weights(
    tree: &GameTree,
    heights: &[u32],
    partial: &Partial,
    overlay: &BTreeMap<InfoSetId, ActionId>,
    entry: NodeRef,
    set_id: InfoSetId,
    use_sigma: bool,
) -> Vec<f64> {
    let set = &tree.info_sets[set_id];
    let owner = set.player;
    let member_pos: HashMap<NodeRef, usize> = set
        .members
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, i))
        .collect();
    let mut weights = vec![0.0; set.members.len()];
    // Weight flows down the DAG; nodes can be reached repeatedly with
    // different weights, so accumulate per node instead of recursing per
    // path (the graphs are small, but paths need not be).
    let mut pending: BTreeMap<NodeRef, f64> = BTreeMap::new();
    pending.insert(entry, 1.0);
    // Process highest-first so all inflow is gathered before a node flows on.
    while let Some((&node, _)) = pending.iter().max_by_key(|(&n, _)| (heights[n], n)) {
        let w = pending.remove(&node).unwrap();
        if w == 0.0 {
            continue;
        }
        if let Some(&pos) = member_pos.get(&node) {
            weights[pos] += w;
            continue;
        }
        match &tree.nodes[node].kind {
            NodeKind::Terminal(_) => {}
            NodeKind::Chance(edges) => {
                for (p, child) in edges {
                    *pending.entry(*child).or_insert(0.0) += w * p;
                }
            }
            NodeKind::Decision { info_set, edges } => {
                let their = &tree.info_sets[*info_set];
                if their.player == owner || !use_sigma {
                    for child in edges {
                        *pending.entry(*child).or_insert(0.0) += w;
                    }
                } else {
                    let a = overlay
                        .get(info_set)
                        .copied()
                        .or(partial.choices[*info_set]);
                    match a {
                        Some(a) => *pending.entry(edges[a]).or_insert(0.0) += w,
                        // A sibling reactive set not yet assigned: its
                        // subtree belongs to a different branch of the draw
                        // and cannot hold members of this set, so it carries
                        // no weight. Debug builds verify that assumption.
                        None => {
                            debug_assert!(
                                !edges.iter().any(|&e| subtree_intersects(tree, e, &member_pos)),
                                "unassigned foreign set above members of {set_id}"
                            );
                        }
                    }
                }
            }
        }
    }
    weights
}

/// Whether any node of `targets` is reachable from `node` (debug-build
/// backing for the pruning in [`member_weights`]).
#[cfg_attr(not(debug_assertions), allow(dead_code))]
fn subtree_intersects(
    tree: &GameTree,
    node: NodeRef,
    targets: &HashMap<NodeRef, usize>,
) -> bool {
    let mut stack = vec![node];
    let mut seen = vec![false; tree.nodes.len()];
    while let Some(n) = stack.pop() {
        if seen[n] {
            continue;
        }
        seen[n] = true;
        if targets.contains_key(&n) {
            return true;
        }
        match &tree.nodes[n].kind {
            NodeKind::Terminal(_) => {}
            NodeKind::Chance(edges) => stack.extend(edges.iter().map(|(_, c)| *c)),
            NodeKind::Decision { edges, .. } => stack.extend(edges.iter().copied()),
        }
    }
    false
}

/// The truthful action of `set_id` when its owner is honest, else None.
/// Honest players break payoff ties toward this action; it is part of the
/// solution concept (coalition ties are resolved by burn aversion in the
/// utilities or else reported, never broken silently).
fn honest_truthful(tree: &GameTree, set_id: InfoSetId) -> Option<ActionId> {
    let set = &tree.info_sets[set_id];
    match tree.players[set.player].kind {
        PlayerKind::Honest { .. } => set.truthful,
        PlayerKind::Coalition { .. } => None,
    }
}

/// Enumerates the block's stage profiles, derives reactive best responses,
/// and returns every assignment that survives the joint-deviation check.
fn solve_block(
    tree: &GameTree,
    heights: &[u32],
    block: usize,
    l1: &[InfoSetId],
    l2: &[InfoSetId],
    partial: &Partial,
    opts: &SolveOptions,
) -> Result<Vec<BTreeMap<InfoSetId, ActionId>>, SolveError> {
    let entry = tree.blocks[block].entry;
    let mut survivors: Vec<BTreeMap<InfoSetId, ActionId>> = Vec::new();

    // Owners of stage sets, for the deviation check.
    let mut owners: Vec<PlayerId> = l1.iter().map(|&s| tree.info_sets[s].player).collect();
    owners.sort_unstable();
    owners.dedup();

    let mut profile = vec![0usize; l1.len()];
    loop {
        // Current stage profile -> overlay.
        let mut base: BTreeMap<InfoSetId, ActionId> = BTreeMap::new();
        for (k, &s) in l1.iter().enumerate() {
            base.insert(s, profile[k]);
        }

        // Derive reactive responses deepest-first, branching on ties.
        let mut branches: Vec<BTreeMap<InfoSetId, ActionId>> = vec![base];
        for &s in l2 {
            let set = &tree.info_sets[s];
            let mut extended: Vec<BTreeMap<InfoSetId, ActionId>> = Vec::new();
            for overlay in &branches {
                let weights = if set.members.len() == 1 {
                    vec![1.0]
                } else {
                    let w = member_weights(tree, heights, partial, overlay, entry, s, true);
                    if w.iter().sum::<f64>() > 0.0 {
                        w
                    } else {
                        member_weights(tree, heights, partial, overlay, entry, s, false)
                    }
                };
                let mut best = f64::NEG_INFINITY;
                let mut q = Vec::with_capacity(set.actions.len());
                // One memo serves every action: the overlay fixes all
                // deeper choices, actions only select the child.
                let mut local = HashMap::new();
                for a in 0..set.actions.len() {
                    let mut total = 0.0;
                    for (pos, &m) in set.members.iter().enumerate() {
                        if weights[pos] == 0.0 {
                            continue;
                        }
                        let child = match &tree.nodes[m].kind {
                            NodeKind::Decision { edges, .. } => edges[a],
                            _ => unreachable!("members are decision nodes"),
                        };
                        let v = eval_overlay(tree, partial, overlay, &mut local, child);
                        total += weights[pos] * v[set.player];
                    }
                    best = best.max(total);
                    q.push(total);
                }
                let mut tied: Vec<ActionId> = (0..q.len())
                    .filter(|&a| q[a] >= best - opts.tolerance)
                    .collect();
                // Honest ties break toward the truthful action: it is part
                // of the solution concept, not just presentation, so the
                // non-truthful indifferent branches are not equilibria here.
                if tied.len() > 1 && honest_truthful(tree, s).is_some_and(|t| tied.contains(&t)) {
                    tied = vec![honest_truthful(tree, s).unwrap()];
                }
                for a in tied {
                    let mut next = overlay.clone();
                    next.insert(s, a);
                    extended.push(next);
                    if extended.len() > opts.max_candidates {
                        return Err(SolveError::TooManyCandidates {
                            limit: opts.max_candidates,
                        });
                    }
                }
            }
            branches = extended;
        }

        // Joint-deviation check per stage-set owner.
        'candidate: for overlay in branches {
            let mut local = HashMap::new();
            let value = eval_overlay(tree, partial, &overlay, &mut local, entry);
            // Honest stage choices must break ties toward the truthful
            // action: a candidate whose honest set plays something else
            // while the truthful switch loses nothing is refined away (its
            // truthful counterpart is enumerated separately).
            for &s in l1.iter() {
                let Some(t) = honest_truthful(tree, s) else {
                    continue;
                };
                if overlay[&s] == t {
                    continue;
                }
                let mut switched = overlay.clone();
                switched.insert(s, t);
                let mut sw_local = HashMap::new();
                let sw_value = eval_overlay(tree, partial, &switched, &mut sw_local, entry);
                let player = tree.info_sets[s].player;
                if sw_value[player] >= value[player] - opts.tolerance {
                    continue 'candidate;
                }
            }
            for &player in &owners {
                let own: Vec<InfoSetId> = l1
                    .iter()
                    .copied()
                    .filter(|&s| tree.info_sets[s].player == player)
                    .collect();
                let mut dev = vec![0usize; own.len()];
                loop {
                    let mut deviated = overlay.clone();
                    let mut same = true;
                    for (k, &s) in own.iter().enumerate() {
                        if deviated[&s] != dev[k] {
                            same = false;
                        }
                        deviated.insert(s, dev[k]);
                    }
                    if !same {
                        let mut dev_local = HashMap::new();
                        let dev_value =
                            eval_overlay(tree, partial, &deviated, &mut dev_local, entry);
                        if dev_value[player] > value[player] + opts.tolerance {
                            continue 'candidate;
                        }
                    }
                    // Advance the deviation counter.
                    let mut k = 0;
                    loop {
                        if k == own.len() {
                            break;
                        }
                        dev[k] += 1;
                        if dev[k] < tree.info_sets[own[k]].actions.len() {
                            break;
                        }
                        dev[k] = 0;
                        k += 1;
                    }
                    if k == own.len() {
                        break;
                    }
                }
            }
            survivors.push(overlay);
            if survivors.len() > opts.max_candidates {
                return Err(SolveError::TooManyCandidates {
                    limit: opts.max_candidates,
                });
            }
        }

        // Advance the stage profile counter.
        let mut k = 0;
        loop {
            if k == l1.len() {
                return Ok(survivors);
            }
            profile[k] += 1;
            if profile[k] < tree.info_sets[l1[k]].actions.len() {
                break;
            }
            profile[k] = 0;
            k += 1;
        }
    }
}

/// Value of player `i`'s best response against the rest of `strategy`,
/// computed by belief-weighted dynamic programming (exact for these games;
/// see the module docs).
fn best_response_value(
    tree: &GameTree,
    heights: &[u32],
    strategy: &Strategy,
    i: PlayerId,
) -> f64 {
    // Forward reach weights: chance probability times others' strategy
    // consistency; own edges count 1 each.
    let mut order: Vec<NodeRef> = (0..tree.nodes.len())
        .filter(|&n| heights[n] != u32::MAX)
        .collect();
    order.sort_by_key(|&n| std::cmp::Reverse(heights[n]));
    let mut weight = vec![0.0; tree.nodes.len()];
    weight[tree.root] = 1.0;
    for &node in &order {
        let w = weight[node];
        if w == 0.0 {
            continue;
        }
        match &tree.nodes[node].kind {
            NodeKind::Terminal(_) => {}
            NodeKind::Chance(edges) => {
                for (p, child) in edges {
                    weight[*child] += w * p;
                }
            }
            NodeKind::Decision { info_set, edges } => {
                if tree.info_sets[*info_set].player == i {
                    for child in edges {
                        weight[*child] += w;
                    }
                } else {
                    weight[edges[strategy[*info_set]]] += w;
                }
            }
        }
    }

    // Own sets deepest-first; assign belief-weighted best actions.
    let set_height = |s: InfoSetId| -> u32 {
        tree.info_sets[s]
            .members
            .iter()
            .map(|&m| heights[m])
            .filter(|&h| h != u32::MAX)
            .max()
            .unwrap_or(0)
    };
    let mut own_sets: Vec<InfoSetId> = (0..tree.info_sets.len())
        .filter(|&s| tree.info_sets[s].player == i)
        .collect();
    own_sets.sort_by_key(|&s| (set_height(s), s));

    let mut br: HashMap<InfoSetId, ActionId> = HashMap::new();
    let mut memo: HashMap<NodeRef, f64> = HashMap::new();

    fn eval_i(
        tree: &GameTree,
        strategy: &Strategy,
        br: &HashMap<InfoSetId, ActionId>,
        i: PlayerId,
        memo: &mut HashMap<NodeRef, f64>,
        node: NodeRef,
    ) -> f64 {
        if let Some(&hit) = memo.get(&node) {
            return hit;
        }
        let mut value = tree.nodes[node].delta[i];
        match &tree.nodes[node].kind {
            NodeKind::Terminal(_) => {}
            NodeKind::Chance(edges) => {
                for (p, child) in edges {
                    value += p * eval_i(tree, strategy, br, i, memo, *child);
                }
            }
            NodeKind::Decision { info_set, edges } => {
                let a = if tree.info_sets[*info_set].player == i {
                    *br.get(info_set)
                        .expect("deeper own sets are assigned first")
                } else {
                    strategy[*info_set]
                };
                value += eval_i(tree, strategy, br, i, memo, edges[a]);
            }
        }
        memo.insert(node, value);
        value
    }

    for s in own_sets {
        let set = &tree.info_sets[s];
        let total: f64 = set.members.iter().map(|&m| weight[m]).sum();
        let mut best = (f64::NEG_INFINITY, 0usize);
        for a in 0..set.actions.len() {
            let mut q = 0.0;
            for &m in &set.members {
                let wm = if total > 0.0 { weight[m] } else { 1.0 };
                if wm == 0.0 {
                    continue;
                }
                let child = match &tree.nodes[m].kind {
                    NodeKind::Decision { edges, .. } => edges[a],
                    _ => unreachable!("members are decision nodes"),
                };
                q += wm * eval_i(tree, strategy, &br, i, &mut memo, child);
            }
            if q > best.0 {
                best = (q, a);
            }
        }
        br.insert(s, best.1);
        // Entries above this set may now be stale only if they passed
        // through it — impossible: deeper sets are strictly below.
    }
    eval_i(tree, strategy, &br, i, &mut memo, tree.root)
}

/// Human-readable multi-line report.
impl SolveReport {
    pub fn render(&self, tree: &GameTree) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(
            out,
            "equilibria: {} ({}, {})",
            self.equilibria.len(),
            if self.outcome_unique {
                "outcome unique"
            } else {
                "outcomes differ"
            },
            if self.strategy_unique {
                "strategy unique"
            } else {
                "strategy not unique"
            }
        )
        .unwrap();
        writeln!(out, "players:").unwrap();
        for (i, p) in tree.players.iter().enumerate() {
            writeln!(out, "  [{i}] {} = {:.6}", p.name, self.root_values[i]).unwrap();
        }
        writeln!(out, "outcome distribution:").unwrap();
        for ((label, round, fines_q), prob) in &self.outcome {
            writeln!(
                out,
                "  {label} (round {round}, fines burned {:.3}): {:.6}",
                *fines_q as f64 / 1e9,
                prob
            )
            .unwrap();
        }
        writeln!(out, "selected strategy:").unwrap();
        for (s, set) in tree.info_sets.iter().enumerate() {
            writeln!(
                out,
                "  {} [{}] -> {}",
                set.key,
                tree.players[set.player].name,
                set.actions[self.selected[s]]
            )
            .unwrap();
        }
        out
    }
}
