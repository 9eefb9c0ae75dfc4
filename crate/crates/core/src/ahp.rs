//! Analytic hierarchy process: pairwise judgments, priority vectors,
//! consistency ratios and hierarchic synthesis of global criterion weights.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Saaty's random consistency index for n = 1..=10.
pub const RANDOM_INDEX: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];

/// CR above this produces a warning (never an error).
pub const CR_WARNING_THRESHOLD: f64 = 0.1;

const RECIPROCAL_TOLERANCE: f64 = 1e-9;
const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AhpError {
    #[error("matrix must be square with at least one row; got {rows} rows with lengths {lengths:?}")]
    NotSquare { rows: usize, lengths: Vec<usize> },
    #[error("expected {expected} upper-triangle judgments for a {n}x{n} matrix, got {got}")]
    UpperTriangleLength { n: usize, expected: usize, got: usize },
    #[error("entry ({i},{j}) = {value} is not a positive finite ratio")]
    NonPositive { i: usize, j: usize, value: f64 },
    #[error("diagonal entry ({0},{0}) must be 1")]
    Diagonal(usize),
    #[error("entries ({i},{j}) = {a_ij} and ({j},{i}) = {a_ji} are not reciprocal")]
    NotReciprocal { i: usize, j: usize, a_ij: f64, a_ji: f64 },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("no random index is tabulated for n = {0}")]
    NoRandomIndex(usize),
    #[error("criterion `{id}`: {source}")]
    Node { id: String, source: Box<AhpError> },
    #[error("invalid hierarchy: {0}")]
    Hierarchy(String),
}

/// Positive reciprocal matrix of ratio judgments.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl PairwiseMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(AhpError::NotSquare { rows: n, lengths: rows.iter().map(Vec::len).collect() });
        }
        let m = PairwiseMatrix { n, data: rows.into_iter().flatten().collect() };
        m.validate()?;
        Ok(m)
    }

    /// Rebuilds the full matrix from the row-major strict upper triangle.
    pub fn from_upper(n: usize, judgments: &[f64]) -> Result<Self, AhpError> {
        let expected = n * n.saturating_sub(1) / 2;
        if n == 0 || judgments.len() != expected {
            return Err(AhpError::UpperTriangleLength { n, expected, got: judgments.len() });
        }
        let mut data = vec![1.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let v = judgments[k];
                if !(v.is_finite() && v > 0.0) {
                    return Err(AhpError::NonPositive { i, j, value: v });
                }
                data[i * n + j] = v;
                data[j * n + i] = 1.0 / v;
                k += 1;
            }
        }
        Ok(PairwiseMatrix { n, data })
    }

    /// The perfectly consistent matrix a_ij = w_i / w_j.
    pub fn from_weights(w: &[f64]) -> Result<Self, AhpError> {
        let n = w.len();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(if i == j { 1.0 } else { w[i] / w[j] });
            }
        }
        let m = PairwiseMatrix { n, data };
        m.validate()?;
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        PairwiseMatrix { n, data: vec![1.0; n * n] }
    }

    fn validate(&self) -> Result<(), AhpError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                if !(v.is_finite() && v > 0.0) {
                    return Err(AhpError::NonPositive { i, j, value: v });
                }
            }
            if self.get(i, i) != 1.0 {
                return Err(AhpError::Diagonal(i));
            }
            for j in i + 1..n {
                let (a_ij, a_ji) = (self.get(i, j), self.get(j, i));
                if (a_ij * a_ji - 1.0).abs() > RECIPROCAL_TOLERANCE {
                    return Err(AhpError::NotReciprocal { i, j, a_ij, a_ji });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Rows and columns reordered so that new index k is old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        PairwiseMatrix { n, data }
    }

    /// Judgments off the 1..9 Saaty grid (and its reciprocals).
    pub fn off_grid_notes(&self) -> Vec<String> {
        let on_grid = |v: f64| {
            let r = if v >= 1.0 { v } else { 1.0 / v };
            (1..=9).any(|k| (r - k as f64).abs() < 1e-9)
        };
        let mut notes = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = self.get(i, j);
                if !on_grid(v) {
                    notes.push(format!("judgment ({i},{j}) = {v} is off the Saaty 1..9 scale"));
                }
            }
        }
        notes
    }

    fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prioritization {
    #[default]
    Eigenvector,
    GeometricMean,
}

/// Principal right eigenvector, normalized to sum 1, by power iteration.
pub fn derive_weights(m: &PairwiseMatrix) -> Result<Vec<f64>, AhpError> {
    power_iteration(m).map(|(w, _)| w)
}

pub fn derive_weights_with(m: &PairwiseMatrix, method: Prioritization) -> Result<Vec<f64>, AhpError> {
    match method {
        Prioritization::Eigenvector => derive_weights(m),
        Prioritization::GeometricMean => Ok(geometric_mean_weights(m)),
    }
}

/// Row geometric means, normalized.
pub fn geometric_mean_weights(m: &PairwiseMatrix) -> Vec<f64> {
    let n = m.dim();
    let g: Vec<f64> = (0..n)
        .map(|i| ((0..n).map(|j| m.get(i, j).ln()).sum::<f64>() / n as f64).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Returns the normalized eigenvector and the eigenvalue estimate Σ(Aw)_i.
fn power_iteration(m: &PairwiseMatrix) -> Result<(Vec<f64>, f64), AhpError> {
    let n = m.dim();
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERATIONS {
        let av = m.mul_vec(&v);
        let s: f64 = av.iter().sum();
        let next: Vec<f64> = av.iter().map(|x| x / s).collect();
        residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if residual < POWER_TOLERANCE {
            let lambda: f64 = m.mul_vec(&v).iter().sum();
            return Ok((v, lambda));
        }
    }
    Err(AhpError::NonConvergence { iterations: POWER_MAX_ITERATIONS, residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub lambda_max: f64,
    pub ci: f64,
    /// `+∞` when the random index is zero but CI is not.
    pub cr: f64,
}

impl Consistency {
    pub fn is_acceptable(&self) -> bool {
        self.cr <= CR_WARNING_THRESHOLD
    }
}

pub fn random_index(n: usize) -> Option<f64> {
    RANDOM_INDEX.get(n.checked_sub(1)?).copied()
}

pub fn consistency_ratio(m: &PairwiseMatrix) -> Result<Consistency, AhpError> {
    let n = m.dim();
    let ri = random_index(n).ok_or(AhpError::NoRandomIndex(n))?;
    if n == 1 {
        return Ok(Consistency { lambda_max: 1.0, ci: 0.0, cr: 0.0 });
    }
    let (_, lambda) = power_iteration(m)?;
    // Perron: lambda_max >= n for positive reciprocal matrices.
    let lambda_max = lambda.max(n as f64);
    let ci = (lambda_max - n as f64) / (n as f64 - 1.0);
    let cr = if ri == 0.0 {
        if ci < 1e-9 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ci / ri
    };
    Ok(Consistency { lambda_max, ci, cr })
}

/// Monte Carlo estimate of the random index: mean CI of random reciprocal
/// matrices whose upper entries are drawn uniformly from the 17-value
/// Saaty scale {1/9, …, 1/2, 1, 2, …, 9}.
pub fn estimate_random_index(n: usize, samples: usize, seed: u64) -> Result<f64, AhpError> {
    if n < 3 {
        return Ok(0.0);
    }
    let scale: Vec<f64> = (2..=9).rev().map(|k| 1.0 / k as f64).chain((1..=9).map(f64::from)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut upper = vec![0.0; n * (n - 1) / 2];
    for _ in 0..samples {
        upper.iter_mut().for_each(|u| *u = scale[rng.gen_range(0..scale.len())]);
        let m = PairwiseMatrix::from_upper(n, &upper)?;
        let (_, lambda) = power_iteration(&m)?;
        total += (lambda - n as f64) / (n as f64 - 1.0);
    }
    Ok(total / samples as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    Branch,
    Quantitative,
    Qualitative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionNode {
    pub id: String,
    pub label: String,
    pub kind: CriterionKind,
    pub children: Vec<CriterionNode>,
    /// Judgments over `children`; branch nodes only.
    pub matrix: Option<PairwiseMatrix>,
}

impl CriterionNode {
    pub fn leaf(id: &str, label: &str, kind: CriterionKind) -> Self {
        CriterionNode { id: id.into(), label: label.into(), kind, children: vec![], matrix: None }
    }

    pub fn branch(id: &str, label: &str, children: Vec<CriterionNode>, matrix: PairwiseMatrix) -> Self {
        CriterionNode { id: id.into(), label: label.into(), kind: CriterionKind::Branch, children, matrix: Some(matrix) }
    }

    pub fn is_leaf(&self) -> bool {
        self.kind != CriterionKind::Branch
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy {
    root: CriterionNode,
}

impl Hierarchy {
    pub fn new(root: CriterionNode) -> Result<Self, AhpError> {
        let mut seen = HashSet::new();
        check_node(&root, &mut seen)?;
        Ok(Hierarchy { root })
    }

    pub fn root(&self) -> &CriterionNode {
        &self.root
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&CriterionNode> {
        fn walk<'a>(n: &'a CriterionNode, out: &mut Vec<&'a CriterionNode>) {
            if n.is_leaf() {
                out.push(n);
            }
            n.children.iter().for_each(|c| walk(c, out));
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn find(&self, id: &str) -> Option<&CriterionNode> {
        fn walk<'a>(n: &'a CriterionNode, id: &str) -> Option<&'a CriterionNode> {
            if n.id == id {
                return Some(n);
            }
            n.children.iter().find_map(|c| walk(c, id))
        }
        walk(&self.root, id)
    }
}

fn check_node(node: &CriterionNode, seen: &mut HashSet<String>) -> Result<(), AhpError> {
    if node.id.is_empty() {
        return Err(AhpError::Hierarchy("criterion with empty id".into()));
    }
    if !seen.insert(node.id.clone()) {
        return Err(AhpError::Hierarchy(format!("duplicate criterion id `{}`", node.id)));
    }
    match node.kind {
        CriterionKind::Branch => {
            if node.children.len() < 2 {
                return Err(AhpError::Hierarchy(format!("branch `{}` needs at least two children", node.id)));
            }
            let dim = node.matrix.as_ref().map(PairwiseMatrix::dim);
            if dim != Some(node.children.len()) {
                return Err(AhpError::Hierarchy(format!(
                    "branch `{}` has {} children but a matrix of dimension {:?}",
                    node.id,
                    node.children.len(),
                    dim
                )));
            }
        }
        _ => {
            if !node.children.is_empty() || node.matrix.is_some() {
                return Err(AhpError::Hierarchy(format!("leaf `{}` cannot carry children or judgments", node.id)));
            }
        }
    }
    node.children.iter().try_for_each(|c| check_node(c, seen))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeWeight {
    pub id: String,
    pub local_weight: f64,
    pub global_weight: f64,
    pub leaf: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeConsistency {
    pub id: String,
    #[serde(flatten)]
    pub consistency: Consistency,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    /// Every node in depth-first order.
    pub nodes: Vec<NodeWeight>,
    pub consistency: Vec<NodeConsistency>,
}

impl Synthesis {
    pub fn leaf_weights(&self) -> impl Iterator<Item = (&str, f64)> {
        self.nodes.iter().filter(|n| n.leaf).map(|n| (n.id.as_str(), n.global_weight))
    }

    pub fn global_weight(&self, id: &str) -> Option<f64> {
        self.nodes.iter().find(|n| n.id == id).map(|n| n.global_weight)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.consistency
            .iter()
            .filter(|c| !c.consistency.is_acceptable())
            .map(|c| format!("criterion `{}`: consistency ratio {:.3} exceeds {CR_WARNING_THRESHOLD}", c.id, c.consistency.cr))
            .collect()
    }
}

/// Global weight of every node: product of local weights along the root path.
pub fn synthesize(h: &Hierarchy, method: Prioritization) -> Result<Synthesis, AhpError> {
    let mut out = Synthesis { nodes: vec![], consistency: vec![] };
    visit(h.root(), 1.0, 1.0, method, &mut out)?;
    Ok(out)
}

fn visit(node: &CriterionNode, local: f64, global: f64, method: Prioritization, out: &mut Synthesis) -> Result<(), AhpError> {
    out.nodes.push(NodeWeight { id: node.id.clone(), local_weight: local, global_weight: global, leaf: node.is_leaf() });
    let Some(matrix) = &node.matrix else {
        return Ok(());
    };
    let annotate = |e: AhpError| AhpError::Node { id: node.id.clone(), source: Box::new(e) };
    let weights = derive_weights_with(matrix, method).map_err(annotate)?;
    let consistency = consistency_ratio(matrix).map_err(annotate)?;
    out.consistency.push(NodeConsistency { id: node.id.clone(), consistency, notes: matrix.off_grid_notes() });
    for (child, w) in node.children.iter().zip(weights) {
        visit(child, w, global * w, method, out)?;
    }
    Ok(())
}

/// Convenience for tests and demos: a random reciprocal matrix on the Saaty scale.
pub fn random_saaty_matrix<R: Rng>(n: usize, rng: &mut R) -> PairwiseMatrix {
    let upper: Vec<f64> = (0..n * (n - 1) / 2)
        .map(|_| {
            let k = rng.gen_range(1..=9) as f64;
            if rng.gen_bool(0.5) {
                k
            } else {
                1.0 / k
            }
        })
        .collect();
    PairwiseMatrix::from_upper(n, &upper).expect("positive judgments")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn uniform_matrix_gives_uniform_weights() {
        let w = derive_weights(&PairwiseMatrix::identity(3)).unwrap();
        assert!(close(&w, &[1.0 / 3.0; 3], 1e-15));
    }

    #[test]
    fn consistent_matrix_recovers_weights() {
        let m = PairwiseMatrix::from_weights(&[0.5, 0.3, 0.2]).unwrap();
        assert!(close(&derive_weights(&m).unwrap(), &[0.5, 0.3, 0.2], 1e-9));
        let scaled = PairwiseMatrix::from_weights(&[5.0, 3.0, 2.0]).unwrap();
        assert!(close(&derive_weights(&scaled).unwrap(), &[0.5, 0.3, 0.2], 1e-9));
    }

    #[test]
    fn two_by_two_closed_form() {
        // w = (a/(1+a), 1/(1+a)) for [[1, a], [1/a, 1]].
        let m = PairwiseMatrix::from_upper(2, &[3.0]).unwrap();
        assert_eq!(derive_weights(&m).unwrap(), vec![0.75, 0.25]);
        let c = consistency_ratio(&m).unwrap();
        assert_eq!(c.cr, 0.0);
    }

    #[test]
    fn invalid_matrices() {
        assert!(matches!(
            PairwiseMatrix::new(vec![vec![1.0, 2.0], vec![0.4, 1.0]]),
            Err(AhpError::NotReciprocal { i: 0, j: 1, .. })
        ));
        assert!(matches!(PairwiseMatrix::new(vec![vec![1.0, -2.0], vec![-0.5, 1.0]]), Err(AhpError::NonPositive { .. })));
        assert!(matches!(PairwiseMatrix::new(vec![vec![2.0]]), Err(AhpError::Diagonal(0))));
        assert!(matches!(PairwiseMatrix::new(vec![vec![1.0, 2.0]]), Err(AhpError::NotSquare { .. })));
        assert!(matches!(PairwiseMatrix::from_upper(3, &[1.0]), Err(AhpError::UpperTriangleLength { .. })));
    }

    #[test]
    fn off_grid_judgments_are_noted_not_rejected() {
        let m = PairwiseMatrix::from_upper(3, &[2.5, 1.0 / 3.0, 7.0]).unwrap();
        let notes = m.off_grid_notes();
        assert_eq!(notes.len(), 1);
        assert!(notes[0].contains("2.5"));
    }

    #[test]
    fn inconsistent_matrix_has_positive_cr() {
        // A > B, B > C, C > A.
        let m = PairwiseMatrix::from_upper(3, &[5.0, 1.0 / 5.0, 5.0]).unwrap();
        let c = consistency_ratio(&m).unwrap();
        assert!(c.lambda_max > 3.0);
        assert!(c.cr > CR_WARNING_THRESHOLD);
    }

    #[test]
    fn geometric_mean_agrees_on_consistent_input() {
        let m = PairwiseMatrix::from_weights(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(close(&geometric_mean_weights(&m), &[0.1, 0.2, 0.3, 0.4], 1e-12));
    }

    #[test]
    fn random_index_lookup() {
        assert_eq!(random_index(3), Some(0.58));
        assert_eq!(random_index(11), None);
        let m = PairwiseMatrix::identity(11);
        assert_eq!(consistency_ratio(&m), Err(AhpError::NoRandomIndex(11)));
    }

    #[test]
    fn synthesize_product_rule() {
        let leaves = vec![
            CriterionNode::leaf("a", "a", CriterionKind::Quantitative),
            CriterionNode::leaf("b", "b", CriterionKind::Quantitative),
        ];
        let first = CriterionNode::branch("x", "x", leaves, PairwiseMatrix::identity(2));
        let second = CriterionNode::leaf("c", "c", CriterionKind::Qualitative);
        let root = CriterionNode::branch("root", "root", vec![first, second], PairwiseMatrix::from_upper(2, &[1.5]).unwrap());
        let h = Hierarchy::new(root).unwrap();
        let s = synthesize(&h, Prioritization::Eigenvector).unwrap();
        let got: Vec<(&str, f64)> = s.leaf_weights().collect();
        assert_eq!(got.len(), 3);
        assert!(close(&got.iter().map(|x| x.1).collect::<Vec<_>>(), &[0.3, 0.3, 0.4], 1e-12));
        assert_eq!(h.leaves().iter().map(|n| n.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
    }

    #[test]
    fn hierarchy_validation() {
        let leaf = |id: &str| CriterionNode::leaf(id, id, CriterionKind::Quantitative);
        let dup = CriterionNode::branch("r", "r", vec![leaf("a"), leaf("a")], PairwiseMatrix::identity(2));
        assert!(matches!(Hierarchy::new(dup), Err(AhpError::Hierarchy(_))));
        let wrong_dim = CriterionNode::branch("r", "r", vec![leaf("a"), leaf("b")], PairwiseMatrix::identity(3));
        assert!(matches!(Hierarchy::new(wrong_dim), Err(AhpError::Hierarchy(_))));
        let single = CriterionNode::branch("r", "r", vec![leaf("a")], PairwiseMatrix::identity(1));
        assert!(matches!(Hierarchy::new(single), Err(AhpError::Hierarchy(_))));
        // A lone leaf is a valid (degenerate) hierarchy with weight 1.
        let h = Hierarchy::new(leaf("only")).unwrap();
        let s = synthesize(&h, Prioritization::Eigenvector).unwrap();
        assert_eq!(s.leaf_weights().collect::<Vec<_>>(), vec![("only", 1.0)]);
    }
}
