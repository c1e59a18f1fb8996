//! Split search, surrogate search, breadth-first growth, and reduced-error
//! pruning.

use std::collections::VecDeque;

use super::{
    argmax_class, node_probs, prior_weight, route_row, weighted_impurity, CartError, Node,
    PruneMeasure, Side, SplitRule, Surrogate, Tree, TreeData, TreeParams,
};
use crate::dataset::{RawValue, VariableKind};

/// Candidate splits must beat this impurity decrease; ΔI values within this
/// tolerance of each other are treated as tied and resolved by variable
/// order, then smaller threshold / lexicographically smaller category subset.
const MIN_DECREASE: f64 = 1e-12;

/// Exhaustive categorical enumeration up to this many observed categories
/// (2^11 − 1 = 2047 candidate subsets at the cap); beyond it categories are
/// ordered by class probability and only prefix splits are scanned.
const EXHAUSTIVE_CATEGORY_LIMIT: usize = 12;

struct SplitEval<'a> {
    priors: &'a [f64],
    root: &'a [u32],
    known: Vec<u32>,
    impurity_known: f64,
    weight_known: f64,
}

impl<'a> SplitEval<'a> {
    fn new(priors: &'a [f64], root: &'a [u32], known: Vec<u32>) -> Option<SplitEval<'a>> {
        let weight_known = prior_weight(&known, priors, root);
        if weight_known <= 0.0 {
            return None;
        }
        let impurity_known = weighted_impurity(&known, priors, root);
        Some(SplitEval {
            priors,
            root,
            known,
            impurity_known,
            weight_known,
        })
    }

    /// ΔI = i(t) − p_L·i(t_L) − p_R·i(t_R) over the rows with the candidate
    /// variable known; `None` when a side would be empty.
    fn decrease(&self, left: &[u32]) -> Option<f64> {
        let mut right = vec![0u32; left.len()];
        let mut n_left = 0u64;
        let mut n_right = 0u64;
        for j in 0..left.len() {
            right[j] = self.known[j] - left[j];
            n_left += left[j] as u64;
            n_right += right[j] as u64;
        }
        if n_left == 0 || n_right == 0 {
            return None;
        }
        let p_left = prior_weight(left, self.priors, self.root) / self.weight_known;
        let p_right = prior_weight(&right, self.priors, self.root) / self.weight_known;
        Some(
            self.impurity_known
                - p_left * weighted_impurity(left, self.priors, self.root)
                - p_right * weighted_impurity(&right, self.priors, self.root),
        )
    }
}

struct Candidate {
    rule: SplitRule,
    decrease: f64,
}

fn better(candidate: &Candidate, best: &Option<Candidate>) -> bool {
    match best {
        None => true,
        Some(b) => {
            if candidate.decrease > b.decrease + MIN_DECREASE {
                true
            } else if candidate.decrease >= b.decrease - MIN_DECREASE {
                candidate.rule.tie_break_less(&b.rule)
            } else {
                false
            }
        }
    }
}

fn numeric_candidate(
    var: usize,
    data: &TreeData,
    rows: &[usize],
    priors: &[f64],
    root: &[u32],
) -> Option<Candidate> {
    let mut pairs: Vec<(f64, usize)> = rows
        .iter()
        .filter_map(|&i| match data.rows[i][var] {
            RawValue::Num(x) => Some((x, data.targets[i])),
            _ => None,
        })
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut known = vec![0u32; data.n_classes];
    for &(_, t) in &pairs {
        known[t] += 1;
    }
    let eval = SplitEval::new(priors, root, known)?;

    let mut left = vec![0u32; data.n_classes];
    let mut best: Option<Candidate> = None;
    for i in 0..pairs.len() - 1 {
        left[pairs[i].1] += 1;
        if pairs[i + 1].0 > pairs[i].0 {
            let threshold = 0.5 * (pairs[i].0 + pairs[i + 1].0);
            if let Some(decrease) = eval.decrease(&left) {
                if decrease > MIN_DECREASE {
                    let candidate = Candidate {
                        rule: SplitRule::Numeric { var, threshold },
                        decrease,
                    };
                    if better(&candidate, &best) {
                        best = Some(candidate);
                    }
                }
            }
        }
    }
    best
}

/// Per-category class counts over the known rows, plus the list of observed
/// category indices.
fn category_counts(
    var: usize,
    data: &TreeData,
    rows: &[usize],
) -> (Vec<Vec<u32>>, Vec<u16>) {
    let n_cats = data.n_categories(var);
    let mut counts = vec![vec![0u32; data.n_classes]; n_cats];
    for &i in rows {
        if let RawValue::Cat(c) = data.rows[i][var] {
            counts[c as usize][data.targets[i]] += 1;
        }
    }
    let observed: Vec<u16> = (0..n_cats as u16)
        .filter(|&c| counts[c as usize].iter().any(|&x| x > 0))
        .collect();
    (counts, observed)
}

fn sum_counts(counts: &[Vec<u32>], cats: impl Iterator<Item = u16>, n_classes: usize) -> Vec<u32> {
    let mut total = vec![0u32; n_classes];
    for c in cats {
        for j in 0..n_classes {
            total[j] += counts[c as usize][j];
        }
    }
    total
}

fn categorical_candidate(
    var: usize,
    data: &TreeData,
    rows: &[usize],
    priors: &[f64],
    root: &[u32],
) -> Option<Candidate> {
    let (counts, observed) = category_counts(var, data, rows);
    let m = observed.len();
    if m < 2 {
        return None;
    }
    let known = sum_counts(&counts, observed.iter().copied(), data.n_classes);
    let eval = SplitEval::new(priors, root, known.clone())?;

    let mut best: Option<Candidate> = None;
    let consider = |left_cats: Vec<u16>, left: &[u32], best: &mut Option<Candidate>| {
        if let Some(decrease) = eval.decrease(left) {
            if decrease > MIN_DECREASE {
                let candidate = Candidate {
                    rule: SplitRule::Categorical { var, left_cats },
                    decrease,
                };
                if better(&candidate, best) {
                    *best = Some(candidate);
                }
            }
        }
    };

    if m <= EXHAUSTIVE_CATEGORY_LIMIT {
        // Every partition appears exactly once with the side containing the
        // smallest observed category on the left — which is also the
        // lexicographically smaller of the two complementary subsets.
        let full = (1u64 << (m - 1)) - 1;
        for mask in 0..full {
            let mut left_cats = vec![observed[0]];
            for bit in 0..m - 1 {
                if mask & (1 << bit) != 0 {
                    left_cats.push(observed[bit + 1]);
                }
            }
            let left = sum_counts(&counts, left_cats.iter().copied(), data.n_classes);
            consider(left_cats, &left, &mut best);
        }
    } else {
        // Order categories by the prior-weighted probability of the
        // reference class, then scan prefix splits.
        let reference = if data.n_classes == 2 {
            1
        } else {
            argmax_class(&node_probs(&known, priors, root).expect("matching lengths"))
        };
        let mut scored: Vec<(f64, u16)> = observed
            .iter()
            .map(|&c| {
                let probs = node_probs(&counts[c as usize], priors, root).expect("lengths");
                (probs[reference], c)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for k in 1..m {
            let mut left_cats: Vec<u16> = scored[..k].iter().map(|&(_, c)| c).collect();
            left_cats.sort_unstable();
            let left = sum_counts(&counts, left_cats.iter().copied(), data.n_classes);
            consider(left_cats, &left, &mut best);
        }
    }
    best
}

/// Searches every variable for the split maximizing the prior-weighted
/// impurity decrease.
///
/// Returns `None` when a stopping rule fires first (node too small in count
/// or fraction, depth at the cap, node budget exhausted) or when no
/// candidate decreases impurity. Rows with the candidate variable unknown
/// are excluded from that variable's evaluation.
#[allow(clippy::too_many_arguments)]
pub fn best_split(
    data: &TreeData,
    rows: &[usize],
    params: &TreeParams,
    priors: &[f64],
    root_counts: &[u32],
    train_n: usize,
    depth: usize,
    nodes_in_tree: usize,
) -> Option<(SplitRule, f64)> {
    if rows.len() < params.min_node_n {
        return None;
    }
    if (rows.len() as f64) < params.min_node_fraction * train_n as f64 {
        return None;
    }
    if depth >= params.max_depth {
        return None;
    }
    if nodes_in_tree + 2 > params.max_nodes {
        return None;
    }

    let mut best: Option<Candidate> = None;
    for var in 0..data.variables.len() {
        let candidate = match data.variables[var].kind {
            VariableKind::Numeric => numeric_candidate(var, data, rows, priors, root_counts),
            VariableKind::Categorical(_) => {
                categorical_candidate(var, data, rows, priors, root_counts)
            }
        };
        if let Some(c) = candidate {
            if better(&c, &best) {
                best = Some(c);
            }
        }
    }
    best.map(|c| (c.rule, c.decrease))
}

/// Finds up to `k` surrogate splits mimicking the primary's routing.
///
/// Agreement is the fraction of node rows, known on both variables, that a
/// candidate routes to the same side as the primary; only candidates beating
/// the majority-rule baseline `max(p_L, p_R)` are kept, best agreement
/// first (ties → earlier variable).
pub fn find_surrogates(
    data: &TreeData,
    rows: &[usize],
    primary: &SplitRule,
    k: usize,
) -> Vec<Surrogate> {
    if k == 0 {
        return Vec::new();
    }
    let routed: Vec<(usize, Side)> = rows
        .iter()
        .filter_map(|&i| primary.route(&data.rows[i]).map(|s| (i, s)))
        .collect();
    let n_known = routed.len();
    if n_known == 0 {
        return Vec::new();
    }
    let left_total = routed.iter().filter(|(_, s)| *s == Side::Left).count();
    let baseline = left_total.max(n_known - left_total) as f64 / n_known as f64;

    let mut found: Vec<Surrogate> = Vec::new();
    for var in 0..data.variables.len() {
        if var == primary.var() {
            continue;
        }
        let candidate = match data.variables[var].kind {
            VariableKind::Numeric => numeric_surrogate(var, data, &routed),
            VariableKind::Categorical(_) => categorical_surrogate(var, data, &routed),
        };
        if let Some(s) = candidate {
            if s.agreement > baseline {
                found.push(s);
            }
        }
    }
    found.sort_by(|a, b| {
        b.agreement
            .total_cmp(&a.agreement)
            .then(a.rule.var().cmp(&b.rule.var()))
    });
    found.truncate(k);
    found
}

fn numeric_surrogate(var: usize, data: &TreeData, routed: &[(usize, Side)]) -> Option<Surrogate> {
    let mut pairs: Vec<(f64, Side)> = routed
        .iter()
        .filter_map(|&(i, side)| match data.rows[i][var] {
            RawValue::Num(x) => Some((x, side)),
            _ => None,
        })
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len() as f64;
    let total_left = pairs.iter().filter(|(_, s)| *s == Side::Left).count();
    let total_right = pairs.len() - total_left;

    let mut best: Option<(f64, f64, bool)> = None; // (agreement, threshold, reversed)
    let mut prefix_left = 0usize;
    let mut prefix_right = 0usize;
    for i in 0..pairs.len() - 1 {
        match pairs[i].1 {
            Side::Left => prefix_left += 1,
            Side::Right => prefix_right += 1,
        }
        if pairs[i + 1].0 > pairs[i].0 {
            let threshold = 0.5 * (pairs[i].0 + pairs[i + 1].0);
            let aligned = (prefix_left + (total_right - prefix_right)) as f64 / n;
            let (agreement, reversed) = if aligned >= 1.0 - aligned {
                (aligned, false)
            } else {
                (1.0 - aligned, true)
            };
            let replace = match best {
                None => true,
                Some((a, t, _)) => {
                    agreement > a + f64::EPSILON
                        || ((agreement - a).abs() <= f64::EPSILON && threshold < t)
                }
            };
            if replace {
                best = Some((agreement, threshold, reversed));
            }
        }
    }
    best.map(|(agreement, threshold, reversed)| Surrogate {
        rule: SplitRule::Numeric { var, threshold },
        agreement,
        reversed,
    })
}

fn categorical_surrogate(
    var: usize,
    data: &TreeData,
    routed: &[(usize, Side)],
) -> Option<Surrogate> {
    let n_cats = data.n_categories(var);
    let mut left_counts = vec![0usize; n_cats];
    let mut right_counts = vec![0usize; n_cats];
    let mut n_both = 0usize;
    for &(i, side) in routed {
        if let RawValue::Cat(c) = data.rows[i][var] {
            n_both += 1;
            match side {
                Side::Left => left_counts[c as usize] += 1,
                Side::Right => right_counts[c as usize] += 1,
            }
        }
    }
    if n_both == 0 {
        return None;
    }
    let observed: Vec<u16> = (0..n_cats as u16)
        .filter(|&c| left_counts[c as usize] + right_counts[c as usize] > 0)
        .collect();
    if observed.len() < 2 {
        return None;
    }

    // Per-category majority assignment maximizes agreement; ties go right.
    let mut left_cats: Vec<u16> = observed
        .iter()
        .copied()
        .filter(|&c| left_counts[c as usize] > right_counts[c as usize])
        .collect();
    let gain = |c: u16| left_counts[c as usize] as i64 - right_counts[c as usize] as i64;
    if left_cats.is_empty() {
        // forced: move the least-costly category left to keep the subset
        // proper and nonempty
        let c = *observed
            .iter()
            .max_by_key(|&&c| (gain(c), std::cmp::Reverse(c)))
            .expect("observed nonempty");
        left_cats.push(c);
    } else if left_cats.len() == observed.len() {
        let c = *observed
            .iter()
            .min_by_key(|&&c| (gain(c), c))
            .expect("observed nonempty");
        left_cats.retain(|&x| x != c);
    }

    let matches: usize = observed
        .iter()
        .map(|&c| {
            if left_cats.binary_search(&c).is_ok() {
                left_counts[c as usize]
            } else {
                right_counts[c as usize]
            }
        })
        .sum();
    Some(Surrogate {
        rule: SplitRule::Categorical { var, left_cats },
        agreement: matches as f64 / n_both as f64,
        reversed: false,
    })
}

fn tally(data: &TreeData, rows: &[usize]) -> Vec<u32> {
    let mut counts = vec![0u32; data.n_classes];
    for &i in rows {
        counts[data.targets[i]] += 1;
    }
    counts
}

/// Grows a tree breadth-first until every frontier node hits a stopping rule.
pub fn grow(data: &TreeData, params: &TreeParams) -> Result<Tree, CartError> {
    if data.rows.is_empty() {
        return Err(CartError::EmptyTraining);
    }
    if data.rows.len() != data.targets.len() {
        return Err(CartError::ShapeMismatch(format!(
            "{} rows but {} targets",
            data.rows.len(),
            data.targets.len()
        )));
    }
    for row in data.rows {
        if row.len() != data.variables.len() {
            return Err(CartError::ShapeMismatch(format!(
                "row has {} values but the schema has {} variables",
                row.len(),
                data.variables.len()
            )));
        }
    }
    if let Some(&t) = data.targets.iter().find(|&&t| t >= data.n_classes) {
        return Err(CartError::TargetOutOfRange {
            index: t,
            n_classes: data.n_classes,
        });
    }
    params.validate(data.n_classes)?;
    let priors = params.priors.resolve(data.n_classes)?;
    let train_n = data.rows.len();
    let root_counts = tally(data, &(0..train_n).collect::<Vec<_>>());

    let blank = |depth: usize| Node {
        depth,
        class_counts: Vec::new(),
        predicted: 0,
        primary: None,
        decrease: 0.0,
        surrogates: Vec::new(),
        majority_left: true,
        children: None,
    };

    let mut nodes = vec![blank(0)];
    let mut queue: VecDeque<(usize, Vec<usize>)> = VecDeque::new();
    queue.push_back((0, (0..train_n).collect()));

    while let Some((idx, rows)) = queue.pop_front() {
        let counts = tally(data, &rows);
        let probs = node_probs(&counts, &priors, &root_counts)?;
        nodes[idx].class_counts = counts;
        nodes[idx].predicted = argmax_class(&probs);

        let depth = nodes[idx].depth;
        let split = best_split(
            data,
            &rows,
            params,
            &priors,
            &root_counts,
            train_n,
            depth,
            nodes.len(),
        );
        let Some((rule, decrease)) = split else {
            continue;
        };

        let surrogates = find_surrogates(data, &rows, &rule, params.n_surrogates);
        let known_left = rows
            .iter()
            .filter(|&&i| rule.route(&data.rows[i]) == Some(Side::Left))
            .count();
        let known_right = rows
            .iter()
            .filter(|&&i| rule.route(&data.rows[i]) == Some(Side::Right))
            .count();
        let majority_left = known_left >= known_right;

        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        for &i in &rows {
            match route_row(&rule, &surrogates, majority_left, &data.rows[i]) {
                Side::Left => left_rows.push(i),
                Side::Right => right_rows.push(i),
            }
        }
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let left_idx = nodes.len();
        nodes.push(blank(depth + 1));
        let right_idx = nodes.len();
        nodes.push(blank(depth + 1));

        let node = &mut nodes[idx];
        node.primary = Some(rule);
        node.decrease = decrease;
        node.surrogates = surrogates;
        node.majority_left = majority_left;
        node.children = Some((left_idx, right_idx));

        queue.push_back((left_idx, left_rows));
        queue.push_back((right_idx, right_rows));
    }

    Ok(Tree {
        variables: data.variables.to_vec(),
        n_classes: data.n_classes,
        priors,
        root_counts,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneReport {
    pub prune_rows: usize,
    pub nodes_before: usize,
    pub nodes_after: usize,
    /// True when the prune set was empty and the tree was left untouched.
    pub empty_prune_set: bool,
}

/// Reduced-error pruning: working bottom-up, collapses every internal node
/// whose subtree misclassifies at least as many prune rows as the node
/// predicting alone would. The result is the smallest subtree minimizing
/// prune-set misclassifications; pruning can therefore never increase them.
///
/// An empty prune set returns the tree unchanged with a warning flag (the
/// ≥ rule would otherwise collapse everything on no evidence).
pub fn prune(tree: &Tree, prune_data: &TreeData, measure: PruneMeasure) -> (Tree, PruneReport) {
    let PruneMeasure::MisclassificationError = measure;
    assert_eq!(prune_data.n_classes, tree.n_classes, "class count mismatch");
    let n = prune_data.rows.len();
    if n == 0 {
        return (
            tree.clone(),
            PruneReport {
                prune_rows: 0,
                nodes_before: tree.n_nodes(),
                nodes_after: tree.n_nodes(),
                empty_prune_set: true,
            },
        );
    }

    // Count per node: rows reaching it, and rows it would misclassify as a leaf.
    let mut err_leaf = vec![0usize; tree.n_nodes()];
    for (row, &target) in prune_data.rows.iter().zip(prune_data.targets) {
        assert_eq!(row.len(), tree.variables.len(), "row arity mismatch");
        let mut at = 0;
        loop {
            let node = &tree.nodes[at];
            if target != node.predicted {
                err_leaf[at] += 1;
            }
            match (&node.primary, node.children) {
                (Some(primary), Some((l, r))) => {
                    at = match route_row(primary, &node.surrogates, node.majority_left, row) {
                        Side::Left => l,
                        Side::Right => r,
                    };
                }
                _ => break,
            }
        }
    }

    // Children always index after their parent, so a reverse scan is
    // bottom-up.
    let mut err_best = vec![0usize; tree.n_nodes()];
    let mut collapse = vec![false; tree.n_nodes()];
    for idx in (0..tree.n_nodes()).rev() {
        match tree.nodes[idx].children {
            None => err_best[idx] = err_leaf[idx],
            Some((l, r)) => {
                let subtree = err_best[l] + err_best[r];
                if subtree >= err_leaf[idx] {
                    collapse[idx] = true;
                    err_best[idx] = err_leaf[idx];
                } else {
                    err_best[idx] = subtree;
                }
            }
        }
    }

    // Rebuild breadth-first, dropping everything under collapsed nodes.
    let mut nodes = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back(0usize);
    let mut pending: VecDeque<usize> = VecDeque::new(); // indices into `nodes` awaiting children fix-up
    while let Some(old_idx) = queue.pop_front() {
        let old = &tree.nodes[old_idx];
        let mut node = old.clone();
        if collapse[old_idx] || old.is_leaf() {
            node.primary = None;
            node.decrease = 0.0;
            node.surrogates = Vec::new();
            node.children = None;
        }
        let new_idx = nodes.len();
        nodes.push(node);
        if let Some(parent) = pending.pop_front() {
            // fix up: parents enqueue twice (left then right)
            let (l, r) = nodes[parent].children.expect("parent has children");
            if l == usize::MAX {
                nodes[parent].children = Some((new_idx, r));
            } else {
                nodes[parent].children = Some((l, new_idx));
            }
        }
        if nodes[new_idx].children.is_some() {
            let (l, r) = tree.nodes[old_idx].children.expect("internal node");
            nodes[new_idx].children = Some((usize::MAX, usize::MAX));
            queue.push_back(l);
            pending.push_back(new_idx);
            queue.push_back(r);
            pending.push_back(new_idx);
        }
    }

    let report = PruneReport {
        prune_rows: n,
        nodes_before: tree.n_nodes(),
        nodes_after: nodes.len(),
        empty_prune_set: false,
    };
    (
        Tree {
            variables: tree.variables.clone(),
            n_classes: tree.n_classes,
            priors: tree.priors.clone(),
            root_counts: tree.root_counts.clone(),
            nodes,
        },
        report,
    )
}
