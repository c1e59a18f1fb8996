//! Classification trees with prior-weighted Gini splits, surrogate splits,
//! and reduced-error pruning.
//!
//! Node probabilities are prior-weighted: with priors `π` and root class
//! counts `N_j`, a node with counts `n_j` has `p(j|t) ∝ π_j · n_j / N_j`.
//! Under equal priors this deliberately rebalances rare classes — a node
//! whose share of fatal rows exceeds the root share votes fatal even when
//! fatals are a small minority of its rows.
//!
//! Unknown values never block a row: at a split, a row missing the primary
//! variable routes by the first surrogate whose variable is known, and
//! failing all surrogates it follows the majority side recorded at training
//! time.

mod grow;
mod text;

pub use grow::{best_split, find_surrogates, grow, prune, PruneReport};
pub use text::{tree_from_text, tree_to_text};

use crate::dataset::{EncodedDataset, RawValue, VariableInfo, VariableKind};

/// Class priors used when weighting node probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Priors {
    /// `1/J` per class regardless of the training distribution.
    Equal,
    /// Explicit per-class priors; must sum to 1.
    Custom(Vec<f64>),
}

impl Priors {
    pub fn resolve(&self, n_classes: usize) -> Result<Vec<f64>, CartError> {
        match self {
            Priors::Equal => Ok(vec![1.0 / n_classes as f64; n_classes]),
            Priors::Custom(p) => {
                if p.len() != n_classes {
                    return Err(CartError::BadPriors(format!(
                        "expected {n_classes} priors, got {}",
                        p.len()
                    )));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > 1e-12 || p.iter().any(|&x| x < 0.0) {
                    return Err(CartError::BadPriors(format!(
                        "priors must be non-negative and sum to 1, got sum {sum}"
                    )));
                }
                Ok(p.clone())
            }
        }
    }
}

/// Error measure used by reduced-error pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneMeasure {
    /// Count of prune-set rows a node (or subtree) misclassifies.
    #[default]
    MisclassificationError,
}

/// Growth and pruning controls.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    /// Nodes with fewer rows than this are never split.
    pub min_node_n: usize,
    /// Nodes holding less than this fraction of the training rows are never
    /// split.
    pub min_node_fraction: f64,
    /// Global cap on the number of nodes (root included).
    pub max_nodes: usize,
    /// Maximum node depth; the root is depth 0, so nodes at this depth stay
    /// leaves.
    pub max_depth: usize,
    /// Surrogate splits retained per internal node.
    pub n_surrogates: usize,
    pub priors: Priors,
    pub prune_measure: PruneMeasure,
}

impl Default for TreeParams {
    fn default() -> TreeParams {
        TreeParams {
            min_node_n: 5,
            min_node_fraction: 0.05,
            max_nodes: 1000,
            max_depth: 32,
            n_surrogates: 5,
            priors: Priors::Equal,
            prune_measure: PruneMeasure::MisclassificationError,
        }
    }
}

impl TreeParams {
    pub fn validate(&self, n_classes: usize) -> Result<(), CartError> {
        if self.min_node_n < 1 {
            return Err(CartError::BadParams("min_node_n must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.min_node_fraction) {
            return Err(CartError::BadParams(
                "min_node_fraction must lie in [0, 1)".into(),
            ));
        }
        if self.max_depth < 1 {
            return Err(CartError::BadParams("max_depth must be at least 1".into()));
        }
        if self.max_nodes < 1 {
            return Err(CartError::BadParams("max_nodes must be at least 1".into()));
        }
        self.priors.resolve(n_classes).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A routing question asked of one variable.
///
/// Numeric rules send `value ≤ threshold` left; categorical rules send
/// members of `left_cats` (sorted category indices) left. A rule answers
/// `None` when the variable is unknown.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    Numeric { var: usize, threshold: f64 },
    Categorical { var: usize, left_cats: Vec<u16> },
}

impl SplitRule {
    pub fn var(&self) -> usize {
        match self {
            SplitRule::Numeric { var, .. } => *var,
            SplitRule::Categorical { var, .. } => *var,
        }
    }

    pub fn route(&self, row: &[RawValue]) -> Option<Side> {
        match self {
            SplitRule::Numeric { var, threshold } => match row[*var] {
                RawValue::Num(x) => Some(if x <= *threshold { Side::Left } else { Side::Right }),
                RawValue::Missing => None,
                RawValue::Cat(_) => None,
            },
            SplitRule::Categorical { var, left_cats } => match row[*var] {
                RawValue::Cat(c) => Some(if left_cats.binary_search(&c).is_ok() {
                    Side::Left
                } else {
                    Side::Right
                }),
                RawValue::Missing => None,
                RawValue::Num(_) => None,
            },
        }
    }

    /// Orders candidates for deterministic tie-breaking: variable first, then
    /// smaller threshold / lexicographically smaller category subset.
    fn tie_break_key(&self) -> (usize, u8, f64, &[u16]) {
        match self {
            SplitRule::Numeric { var, threshold } => (*var, 0, *threshold, &[]),
            SplitRule::Categorical { var, left_cats } => (*var, 1, 0.0, left_cats),
        }
    }

    pub(crate) fn tie_break_less(&self, other: &SplitRule) -> bool {
        let (va, ka, ta, ca) = self.tie_break_key();
        let (vb, kb, tb, cb) = other.tie_break_key();
        (va, ka).cmp(&(vb, kb)).then(ta.total_cmp(&tb)).then(ca.cmp(cb))
            == std::cmp::Ordering::Less
    }
}

/// A stand-in split used when the primary variable is unknown. `reversed`
/// means the rule's left answer routes the row right (numeric surrogates can
/// track the primary in either direction).
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub rule: SplitRule,
    /// Fraction of rows (known on both variables) routed to the same side as
    /// the primary split.
    pub agreement: f64,
    pub reversed: bool,
}

impl Surrogate {
    pub fn route(&self, row: &[RawValue]) -> Option<Side> {
        self.rule
            .route(row)
            .map(|s| if self.reversed { s.flip() } else { s })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub depth: usize,
    /// Training rows per class at this node.
    pub class_counts: Vec<u32>,
    /// Class maximizing the prior-weighted probability (ties → lower class).
    pub predicted: usize,
    pub primary: Option<SplitRule>,
    /// Impurity decrease ΔI of the primary split; 0 for leaves.
    pub decrease: f64,
    pub surrogates: Vec<Surrogate>,
    /// Fallback side for rows where the primary and every surrogate are
    /// unknown.
    pub majority_left: bool,
    /// `(left, right)` node indices; `None` for leaves.
    pub children: Option<(usize, usize)>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn n_rows(&self) -> u32 {
        self.class_counts.iter().sum()
    }
}

/// A grown (and possibly pruned) classification tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub variables: Vec<VariableInfo>,
    pub n_classes: usize,
    pub priors: Vec<f64>,
    /// Training class counts at the root, the denominator of the
    /// prior-weighting.
    pub root_counts: Vec<u32>,
    /// Breadth-first node storage; `nodes[0]` is the root and children always
    /// have larger indices than their parent.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

/// Borrowed training view: raw rows, integer targets, and the variable
/// schema the rows index into.
#[derive(Debug, Clone, Copy)]
pub struct TreeData<'a> {
    pub variables: &'a [VariableInfo],
    pub rows: &'a [Vec<RawValue>],
    pub targets: &'a [usize],
    pub n_classes: usize,
}

impl<'a> TreeData<'a> {
    pub fn from_dataset(ds: &'a EncodedDataset) -> TreeData<'a> {
        TreeData {
            variables: &ds.variables,
            rows: &ds.raw,
            targets: &ds.targets,
            n_classes: ds.n_classes,
        }
    }

    pub fn n_categories(&self, var: usize) -> usize {
        match &self.variables[var].kind {
            VariableKind::Numeric => 0,
            VariableKind::Categorical(c) => c.len(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CartError {
    #[error("cannot grow a tree from zero rows")]
    EmptyTraining,
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("invalid priors: {0}")]
    BadPriors(String),
    #[error("invalid tree parameters: {0}")]
    BadParams(String),
    #[error("target {index} out of range for {n_classes} classes")]
    TargetOutOfRange { index: usize, n_classes: usize },
    #[error("unreadable tree text: {0}")]
    ParseTree(String),
}

/// Prior-weighted class probabilities at a node.
///
/// `p(j) ∝ priors[j] · counts[j] / root_counts[j]`, renormalized. Classes
/// with a zero root count must be absent from the node (they contribute
/// nothing). All-zero weight (an empty node) yields the uniform distribution.
pub fn node_probs(
    counts: &[u32],
    priors: &[f64],
    root_counts: &[u32],
) -> Result<Vec<f64>, CartError> {
    if counts.len() != priors.len() || counts.len() != root_counts.len() {
        return Err(CartError::ShapeMismatch(format!(
            "counts/priors/root_counts lengths differ: {}/{}/{}",
            counts.len(),
            priors.len(),
            root_counts.len()
        )));
    }
    let mut weights = vec![0.0; counts.len()];
    let mut total = 0.0;
    for j in 0..counts.len() {
        if root_counts[j] > 0 {
            weights[j] = priors[j] * counts[j] as f64 / root_counts[j] as f64;
            total += weights[j];
        }
    }
    if total <= 0.0 {
        return Ok(vec![1.0 / counts.len() as f64; counts.len()]);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Gini impurity `1 − Σ p²` of a probability vector.
pub fn gini(probs: &[f64]) -> f64 {
    1.0 - probs.iter().map(|p| p * p).sum::<f64>()
}

/// Total prior-weighted mass of a count vector (the `p(t)` numerator used in
/// split evaluation).
pub(crate) fn prior_weight(counts: &[u32], priors: &[f64], root_counts: &[u32]) -> f64 {
    let mut total = 0.0;
    for j in 0..counts.len() {
        if root_counts[j] > 0 {
            total += priors[j] * counts[j] as f64 / root_counts[j] as f64;
        }
    }
    total
}

pub(crate) fn weighted_impurity(counts: &[u32], priors: &[f64], root_counts: &[u32]) -> f64 {
    gini(&node_probs(counts, priors, root_counts).expect("matching lengths"))
}

pub(crate) fn argmax_class(probs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = j;
        }
    }
    best
}

/// Routes one row through a node's primary split, surrogates, and majority
/// fallback, in that order.
pub(crate) fn route_row(
    primary: &SplitRule,
    surrogates: &[Surrogate],
    majority_left: bool,
    row: &[RawValue],
) -> Side {
    if let Some(side) = primary.route(row) {
        return side;
    }
    for s in surrogates {
        if let Some(side) = s.route(row) {
            return side;
        }
    }
    if majority_left {
        Side::Left
    } else {
        Side::Right
    }
}

/// Leaf class for one row. The walk is total: unknown values fall back to
/// surrogates and then to the recorded majority side, so every row reaches a
/// leaf.
pub fn predict(tree: &Tree, row: &[RawValue]) -> usize {
    assert_eq!(
        row.len(),
        tree.variables.len(),
        "row arity does not match the tree's variable schema"
    );
    let mut at = 0;
    loop {
        let node = &tree.nodes[at];
        match (&node.primary, node.children) {
            (Some(primary), Some((l, r))) => {
                at = match route_row(primary, &node.surrogates, node.majority_left, row) {
                    Side::Left => l,
                    Side::Right => r,
                }
            }
            _ => return node.predicted,
        }
    }
}

pub fn predict_batch(tree: &Tree, rows: &[Vec<RawValue>]) -> Vec<usize> {
    rows.iter().map(|r| predict(tree, r)).collect()
}

/// Per-variable importance: each internal node credits its impurity decrease
/// ΔI to the primary variable and `ΔI · agreement` to each surrogate's
/// variable, summed over the tree and normalized so the largest score is 100
/// (all zeros for a tree that never splits).
pub fn importance(tree: &Tree) -> Vec<f64> {
    let mut scores = vec![0.0; tree.variables.len()];
    for node in &tree.nodes {
        let Some(primary) = &node.primary else {
            continue;
        };
        scores[primary.var()] += node.decrease;
        for s in &node.surrogates {
            scores[s.rule.var()] += node.decrease * s.agreement;
        }
    }
    let max = scores.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for s in &mut scores {
            *s *= 100.0 / max;
        }
    }
    scores
}
