//! Weighted directed graphs, the advection and consensus operators, and the
//! graph families on which the advection operator reduces to classical finite
//! difference stencils.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single directed edge `source -> target` carrying a real weight.
///
/// Weights may be negative; the central-difference and second-order upwind
/// graphs require negative weights to reproduce their stencils.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// A weighted directed graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    node_labels: Option<Vec<String>>,
}

/// Which operator a [`LinearOperator`] matrix realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// `L_adv = D_out - A_in`; generates conservative flow `du/dt = -L u`.
    Advection,
    /// `L_cons = D_in - A_in`; the diffusion-like counterpart.
    Consensus,
    /// `(M + M^T) / 2` of some operator.
    SymmetrizedAverage,
}

/// A dense square matrix realizing a graph operator, with its dimension
/// pinned to the originating graph's node count.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<f64>,
    kind: OperatorKind,
    node_count: usize,
}

impl LinearOperator {
    pub fn new(matrix: DMatrix<f64>, kind: OperatorKind) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        let node_count = matrix.nrows();
        Self {
            matrix,
            kind,
            node_count,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }
}

impl DirectedGraph {
    /// Build a validated graph from an edge list.
    ///
    /// Rejects out-of-range indices, self-loops, duplicate `(source, target)`
    /// pairs, and non-finite weights. Edge order is preserved.
    pub fn from_edge_list(edges: Vec<Edge>, node_count: usize) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            for &index in &[e.source, e.target] {
                if index >= node_count {
                    return Err(Error::IndexOutOfRange { index, node_count });
                }
            }
            if e.source == e.target {
                return Err(Error::SelfLoop(e.source));
            }
            if !e.weight.is_finite() {
                return Err(Error::NonFiniteWeight {
                    from: e.source,
                    to: e.target,
                    weight: e.weight,
                });
            }
            if !seen.insert((e.source, e.target)) {
                return Err(Error::DuplicateEdge {
                    from: e.source,
                    to: e.target,
                });
            }
        }
        Ok(Self {
            node_count,
            edges,
            node_labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.node_count);
        self.node_labels = Some(labels);
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_labels(&self) -> Option<&[String]> {
        self.node_labels.as_deref()
    }

    /// Total signed weight leaving each node.
    pub fn out_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.node_count];
        for e in &self.edges {
            deg[e.source] += e.weight;
        }
        deg
    }

    /// Total signed weight entering each node.
    pub fn in_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.node_count];
        for e in &self.edges {
            deg[e.target] += e.weight;
        }
        deg
    }

    /// The advection operator `L_adv = D_out - A_in`.
    ///
    /// Sign convention: the dynamics are `du/dt = -L_adv u`. For an edge
    /// `j -> i` with weight `w`, row `i` picks up `-w` in column `j` and the
    /// diagonal entry `(j, j)` accumulates `+w`, so every column sums to zero.
    pub fn advection_operator(&self) -> LinearOperator {
        let n = self.node_count;
        let mut m = DMatrix::zeros(n, n);
        for e in &self.edges {
            m[(e.source, e.source)] += e.weight;
            m[(e.target, e.source)] -= e.weight;
        }
        LinearOperator::new(m, OperatorKind::Advection)
    }

    /// The consensus operator `L_cons = D_in - A_in`.
    ///
    /// Same off-diagonal as the advection operator; the diagonal holds total
    /// incoming weight instead of outgoing.
    pub fn consensus_operator(&self) -> LinearOperator {
        let n = self.node_count;
        let mut m = DMatrix::zeros(n, n);
        for e in &self.edges {
            m[(e.target, e.target)] += e.weight;
            m[(e.target, e.source)] -= e.weight;
        }
        LinearOperator::new(m, OperatorKind::Consensus)
    }

    /// True iff every node's total incoming weight equals its total outgoing
    /// weight to within `tol`. Balanced graphs are exactly those on which
    /// `L_adv = L_cons`.
    pub fn is_balanced(&self, tol: f64) -> bool {
        let out = self.out_degrees();
        let inn = self.in_degrees();
        out.iter()
            .zip(inn.iter())
            .all(|(o, i)| (o - i).abs() <= tol)
    }
}

/// The named graph families used throughout the experiments.
///
/// Line-like families are laid out left to right by node index, with open
/// boundaries: the backward/skip edges are simply omitted where the neighbor
/// does not exist. All parameters are checked by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphFamily {
    /// Consecutive edges `i -> i+1` with weight `v/dx` (first-order upwind).
    UpwindLine { n: usize, v: f64, dx: f64 },
    /// Paired edges `i -> i+1` at `v/(2dx)` and `i+1 -> i` at `-v/(2dx)`
    /// (second-order central difference).
    CentralLine { n: usize, v: f64, dx: f64 },
    /// Next-neighbor edges at `2v/dx` plus skip edges `i -> i+2` at
    /// `-v/(2dx)` (second-order linear upwind differencing).
    LudLine { n: usize, v: f64, dx: f64 },
    /// Interleaved half-index nodes: skip-forward edges `i -> i+2` at
    /// `v/(3dx)` and backward edges `i -> i-1` at `-4v/(3dx)`.
    NonUniformLine { n: usize, v: f64, dx: f64 },
    /// Upwind line closed by one returning edge `n-1 -> 0` (periodic).
    Loop { n: usize, v: f64, dx: f64 },
    /// Two upwind lanes merging into one; the post-merge lane carries
    /// weight `2v/dx`.
    Intersection { n: usize, v: f64, dx: f64 },
    /// All leaves directed into center node 0, unit weight.
    Star { n: usize },
    /// All ordered pairs, unit weight.
    Complete { n: usize },
}

impl GraphFamily {
    pub fn node_count(&self) -> usize {
        match *self {
            GraphFamily::UpwindLine { n, .. }
            | GraphFamily::CentralLine { n, .. }
            | GraphFamily::LudLine { n, .. }
            | GraphFamily::NonUniformLine { n, .. }
            | GraphFamily::Loop { n, .. }
            | GraphFamily::Intersection { n, .. }
            | GraphFamily::Star { n }
            | GraphFamily::Complete { n } => n,
        }
    }

    fn validate(&self) -> Result<()> {
        let check_line = |n: usize, v: f64, dx: f64| -> Result<()> {
            if n < 3 {
                return Err(Error::InvalidFamilyParams(format!(
                    "line-like families need n >= 3, got {n}"
                )));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(Error::InvalidFamilyParams(format!(
                    "velocity must be finite and nonzero, got {v}"
                )));
            }
            if dx <= 0.0 || !dx.is_finite() {
                return Err(Error::InvalidFamilyParams(format!(
                    "spatial step must be finite and positive, got {dx}"
                )));
            }
            Ok(())
        };
        match *self {
            GraphFamily::UpwindLine { n, v, dx }
            | GraphFamily::CentralLine { n, v, dx }
            | GraphFamily::LudLine { n, v, dx }
            | GraphFamily::NonUniformLine { n, v, dx }
            | GraphFamily::Loop { n, v, dx }
            | GraphFamily::Intersection { n, v, dx } => check_line(n, v, dx),
            GraphFamily::Star { n } | GraphFamily::Complete { n } => {
                if n < 2 {
                    Err(Error::InvalidFamilyParams(format!(
                        "star and complete families need n >= 2, got {n}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Generate the named family. Deterministic: identical parameters produce
/// identical edge lists.
pub fn generate(family: GraphFamily) -> Result<DirectedGraph> {
    family.validate()?;
    let edge = |source, target, weight| Edge {
        source,
        target,
        weight,
    };
    match family {
        GraphFamily::UpwindLine { n, v, dx } => {
            let w = v / dx;
            let edges = (0..n - 1).map(|i| edge(i, i + 1, w)).collect();
            DirectedGraph::from_edge_list(edges, n)
        }
        GraphFamily::CentralLine { n, v, dx } => {
            let w = v / (2.0 * dx);
            let mut edges = Vec::with_capacity(2 * (n - 1));
            for i in 0..n - 1 {
                edges.push(edge(i, i + 1, w));
                edges.push(edge(i + 1, i, -w));
            }
            DirectedGraph::from_edge_list(edges, n)
        }
        GraphFamily::LudLine { n, v, dx } => {
            let w_near = 2.0 * v / dx;
            let w_skip = -v / (2.0 * dx);
            let mut edges = Vec::new();
            for i in 0..n - 1 {
                edges.push(edge(i, i + 1, w_near));
                if i + 2 < n {
                    edges.push(edge(i, i + 2, w_skip));
                }
            }
            DirectedGraph::from_edge_list(edges, n)
        }
        GraphFamily::NonUniformLine { n, v, dx } => {
            let w_fwd = v / (3.0 * dx);
            let w_back = -4.0 * v / (3.0 * dx);
            let mut edges = Vec::new();
            for i in 0..n {
                if i + 2 < n {
                    edges.push(edge(i, i + 2, w_fwd));
                }
                if i >= 1 {
                    edges.push(edge(i, i - 1, w_back));
                }
            }
            let labels = (0..n)
                .map(|i| {
                    if i % 2 == 0 {
                        format!("u_{}", i / 2)
                    } else {
                        format!("u_{}/2", i)
                    }
                })
                .collect();
            Ok(DirectedGraph::from_edge_list(edges, n)?.with_labels(labels))
        }
        GraphFamily::Loop { n, v, dx } => {
            let w = v / dx;
            let mut edges: Vec<Edge> = (0..n - 1).map(|i| edge(i, i + 1, w)).collect();
            edges.push(edge(n - 1, 0, w));
            DirectedGraph::from_edge_list(edges, n)
        }
        GraphFamily::Intersection { n, v, dx } => {
            let w = v / dx;
            // One post-merge lane (about a third of the nodes) fed by two
            // inflow lanes that split the rest.
            let tail = (n / 3).max(1);
            let branches = n - tail;
            let a = branches.div_ceil(2);
            let b = branches - a;
            let merge = a + b;
            let mut edges = Vec::new();
            for i in 0..a {
                let target = if i + 1 < a { i + 1 } else { merge };
                edges.push(edge(i, target, w));
            }
            for j in 0..b {
                let target = if j + 1 < b { a + j + 1 } else { merge };
                edges.push(edge(a + j, target, w));
            }
            for t in merge..n - 1 {
                edges.push(edge(t, t + 1, 2.0 * w));
            }
            DirectedGraph::from_edge_list(edges, n)
        }
        GraphFamily::Star { n } => {
            let edges = (1..n).map(|i| edge(i, 0, 1.0)).collect();
            DirectedGraph::from_edge_list(edges, n)
        }
        GraphFamily::Complete { n } => {
            let mut edges = Vec::with_capacity(n * (n - 1));
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        edges.push(edge(i, j, 1.0));
                    }
                }
            }
            DirectedGraph::from_edge_list(edges, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3() -> DirectedGraph {
        DirectedGraph::from_edge_list(
            vec![
                Edge {
                    source: 0,
                    target: 1,
                    weight: 1.0,
                },
                Edge {
                    source: 1,
                    target: 2,
                    weight: 1.0,
                },
            ],
            3,
        )
        .unwrap()
    }

    #[test]
    fn from_edge_list_accepts_path() {
        let g = path3();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn from_edge_list_rejects_duplicate() {
        let err = DirectedGraph::from_edge_list(
            vec![
                Edge {
                    source: 0,
                    target: 1,
                    weight: 1.0,
                },
                Edge {
                    source: 0,
                    target: 1,
                    weight: 2.0,
                },
            ],
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
    }

    #[test]
    fn from_edge_list_rejects_self_loop() {
        let err = DirectedGraph::from_edge_list(
            vec![Edge {
                source: 0,
                target: 0,
                weight: 1.0,
            }],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SelfLoop(0)));
    }

    #[test]
    fn from_edge_list_rejects_bad_index_and_nan() {
        let err = DirectedGraph::from_edge_list(
            vec![Edge {
                source: 0,
                target: 5,
                weight: 1.0,
            }],
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { .. }));
        let err = DirectedGraph::from_edge_list(
            vec![Edge {
                source: 0,
                target: 1,
                weight: f64::NAN,
            }],
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteWeight { .. }));
    }

    #[test]
    fn advection_operator_upwind_line() {
        let l = path3().advection_operator();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 0.0],
        );
        assert_eq!(l.matrix(), &expected);
    }

    #[test]
    fn advection_operator_empty_graph_is_zero() {
        let g = DirectedGraph::from_edge_list(vec![], 2).unwrap();
        assert_eq!(g.advection_operator().matrix(), &DMatrix::zeros(2, 2));
        assert_eq!(g.consensus_operator().matrix(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn advection_operator_loop_is_circulant() {
        let g = generate(GraphFamily::Loop {
            n: 4,
            v: 1.0,
            dx: 1.0,
        })
        .unwrap();
        let l = g.advection_operator();
        let m = l.matrix();
        for j in 0..4 {
            assert_abs_diff_eq!(m[(j, j)], 1.0);
            assert_abs_diff_eq!(m[((j + 1) % 4, j)], -1.0);
            assert_abs_diff_eq!(m.column(j).sum(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn consensus_operator_upwind_line() {
        let l = path3().consensus_operator();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0],
        );
        assert_eq!(l.matrix(), &expected);
    }

    #[test]
    fn is_balanced_examples() {
        let loop_g = generate(GraphFamily::Loop {
            n: 7,
            v: 2.0,
            dx: 0.5,
        })
        .unwrap();
        assert!(loop_g.is_balanced(0.0));
        assert!(!path3().is_balanced(1e-12));
        // the central line is balanced at every interior node; the open
        // boundary leaves the two end nodes unbalanced
        let central = generate(GraphFamily::CentralLine {
            n: 9,
            v: 1.0,
            dx: 0.25,
        })
        .unwrap();
        let out = central.out_degrees();
        let inn = central.in_degrees();
        for i in 1..8 {
            assert!((out[i] - inn[i]).abs() <= 1e-12, "interior node {i}");
        }
        assert!(!central.is_balanced(1e-12));
    }

    #[test]
    fn upwind_line_edges() {
        let g = generate(GraphFamily::UpwindLine {
            n: 3,
            v: 1.0,
            dx: 1.0,
        })
        .unwrap();
        assert_eq!(
            g.edges(),
            &[
                Edge {
                    source: 0,
                    target: 1,
                    weight: 1.0
                },
                Edge {
                    source: 1,
                    target: 2,
                    weight: 1.0
                },
            ]
        );
    }

    #[test]
    fn central_line_interior_stencil() {
        let (v, dx) = (1.5, 0.2);
        let g = generate(GraphFamily::CentralLine { n: 8, v, dx }).unwrap();
        let l = g.advection_operator();
        let m = l.matrix();
        let c = v / (2.0 * dx);
        for i in 1..7 {
            // row of -L_adv is [+v/2dx, 0, -v/2dx]
            assert_abs_diff_eq!(-m[(i, i - 1)], c, epsilon = 1e-14);
            assert_abs_diff_eq!(-m[(i, i)], 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(-m[(i, i + 1)], -c, epsilon = 1e-14);
        }
    }

    #[test]
    fn lud_line_interior_stencil() {
        let (v, dx) = (1.0, 0.1);
        let g = generate(GraphFamily::LudLine { n: 10, v, dx }).unwrap();
        let m = g.advection_operator().matrix().clone();
        let c = v / (2.0 * dx);
        for i in 2..8 {
            // du_i/dt = v(-u_{i-2} + 4u_{i-1} - 3u_i)/(2dx)
            assert_abs_diff_eq!(-m[(i, i - 2)], -c, epsilon = 1e-12);
            assert_abs_diff_eq!(-m[(i, i - 1)], 4.0 * c, epsilon = 1e-12);
            assert_abs_diff_eq!(-m[(i, i)], -3.0 * c, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_uniform_line_interior_stencil() {
        let (v, dx) = (1.0, 1.0);
        let g = generate(GraphFamily::NonUniformLine { n: 9, v, dx }).unwrap();
        let m = g.advection_operator().matrix().clone();
        // du_i/dt = -v(4/3 u_{i+1/2} - u_i - 1/3 u_{i-1})/dx at interior node i
        for i in 2..7 {
            assert_abs_diff_eq!(-m[(i, i - 2)], v / (3.0 * dx), epsilon = 1e-12);
            assert_abs_diff_eq!(-m[(i, i)], v / dx, epsilon = 1e-12);
            assert_abs_diff_eq!(-m[(i, i + 1)], -4.0 * v / (3.0 * dx), epsilon = 1e-12);
        }
        let labels = g.node_labels().unwrap();
        assert_eq!(labels[0], "u_0");
        assert_eq!(labels[1], "u_1/2");
        assert_eq!(labels[2], "u_1");
    }

    #[test]
    fn intersection_merge_node_weight() {
        let (v, dx) = (1.0, 0.5);
        let g = generate(GraphFamily::Intersection { n: 9, v, dx }).unwrap();
        // exactly two in-edges of weight v/dx converge on the merge node, and
        // every post-merge edge carries 2v/dx
        let post_merge: Vec<_> = g
            .edges()
            .iter()
            .filter(|e| (e.weight - 2.0 * v / dx).abs() < 1e-14)
            .collect();
        assert!(!post_merge.is_empty());
        let merge = post_merge[0].source;
        let in_edges: Vec<_> = g.edges().iter().filter(|e| e.target == merge).collect();
        assert_eq!(in_edges.len(), 2);
        assert!(in_edges.iter().all(|e| (e.weight - v / dx).abs() < 1e-14));
    }

    #[test]
    fn star_and_complete_shapes() {
        let star = generate(GraphFamily::Star { n: 5 }).unwrap();
        assert_eq!(star.edges().len(), 4);
        assert!(star.edges().iter().all(|e| e.target == 0 && e.weight == 1.0));
        let complete = generate(GraphFamily::Complete { n: 4 }).unwrap();
        assert_eq!(complete.edges().len(), 12);
    }

    #[test]
    fn generate_rejects_bad_params() {
        assert!(generate(GraphFamily::UpwindLine {
            n: 2,
            v: 1.0,
            dx: 1.0
        })
        .is_err());
        assert!(generate(GraphFamily::Loop {
            n: 5,
            v: 0.0,
            dx: 1.0
        })
        .is_err());
        assert!(generate(GraphFamily::LudLine {
            n: 5,
            v: 1.0,
            dx: -1.0
        })
        .is_err());
    }

    #[test]
    fn generate_is_deterministic() {
        let f = GraphFamily::Intersection {
            n: 12,
            v: 2.0,
            dx: 0.25,
        };
        assert_eq!(generate(f).unwrap(), generate(f).unwrap());
    }
}
