//! Weighted directed graphs and the matrices derived from them.
//!
//! Input is a plain edge list, one `src,dst[,weight]` per line (comma or tab
//! separated, `#` starts a comment). Node labels are arbitrary strings that are
//! remapped to dense indices in order of first appearance; the label table
//! travels with the graph so that reports can name nodes the way the input did.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: String, dst: String },
    #[error("self-loop on node {node}")]
    SelfLoop { node: String },
    #[error("line {line}: edge weight must be positive, got {weight}")]
    NonPositiveWeight { line: usize, weight: f64 },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Simple weighted digraph: no self-loops, no parallel edges, positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<Edge>,
    labels: Vec<String>,
}

impl WeightedDigraph {
    /// Builds a graph from index triples, labelling nodes `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    pub fn with_labels(labels: Vec<String>, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let n = labels.len();
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out = Vec::with_capacity(edges.len());
        for (k, &(s, d, w)) in edges.iter().enumerate() {
            if s >= n || d >= n {
                return Err(GraphError::Invalid(format!("edge {k} references node outside [0, {n})")));
            }
            if s == d {
                return Err(GraphError::SelfLoop { node: labels[s].clone() });
            }
            if !w.is_finite() {
                return Err(GraphError::Invalid(format!("edge {k} has non-finite weight")));
            }
            if w <= 0.0 {
                return Err(GraphError::NonPositiveWeight { line: k + 1, weight: w });
            }
            if !seen.insert((s, d)) {
                return Err(GraphError::DuplicateEdge { src: labels[s].clone(), dst: labels[d].clone() });
            }
            out.push(Edge { src: NodeId(s), dst: NodeId(d), weight: w });
        }
        Ok(Self { n, edges: out, labels })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id.0]
    }

    /// Weight of `src -> dst`, if the edge exists.
    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        self.edges.iter().find(|e| e.src.0 == src && e.dst.0 == dst).map(|e| e.weight)
    }

    /// Out-degree `d_i = sum_j w_ij`.
    pub fn out_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.src.0] += e.weight;
        }
        d
    }

    pub fn adjacency(&self) -> AdjacencyMatrix {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.src.0, e.dst.0)] = e.weight;
        }
        AdjacencyMatrix(a)
    }

    /// Canonical edge list: one `src,dst,weight` line per edge, sorted by
    /// label pair, weights in shortest round-trip form.
    pub fn to_edge_list(&self) -> String {
        let mut lines: Vec<(&str, &str, f64)> = self
            .edges
            .iter()
            .map(|e| (self.labels[e.src.0].as_str(), self.labels[e.dst.0].as_str(), e.weight))
            .collect();
        lines.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = String::new();
        for (s, d, w) in lines {
            let _ = writeln!(out, "{s},{d},{w:?}");
        }
        out
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            labels: self.labels.clone(),
            edges: self.edges.iter().map(|e| JsonEdge { src: e.src.0, dst: e.dst.0, weight: e.weight }).collect(),
        }
    }

    /// Weakly connected components, each sorted ascending; components ordered
    /// by their smallest node.
    pub fn weak_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.src.0), find(&mut parent, e.dst.0));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }
}

/// JSON form of a graph: `{edges, labels, n}` (keys emitted sorted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<JsonEdge>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonEdge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl TryFrom<GraphJson> for WeightedDigraph {
    type Error = GraphError;

    fn try_from(j: GraphJson) -> Result<Self, GraphError> {
        if j.labels.len() != j.n {
            return Err(GraphError::Invalid(format!("n = {} but {} labels given", j.n, j.labels.len())));
        }
        let mut seen = HashSet::new();
        for l in &j.labels {
            if !seen.insert(l.as_str()) {
                return Err(GraphError::Invalid(format!("duplicate label {l:?}")));
            }
        }
        let triples: Vec<_> = j.edges.iter().map(|e| (e.src, e.dst, e.weight)).collect();
        WeightedDigraph::with_labels(j.labels, &triples)
    }
}

/// Parses the JSON graph form produced by [`WeightedDigraph::to_json`].
pub fn graph_from_json(text: &str) -> Result<WeightedDigraph, GraphError> {
    let j: GraphJson =
        serde_json::from_str(text).map_err(|e| GraphError::Parse { line: e.line(), message: e.to_string() })?;
    WeightedDigraph::try_from(j)
}

/// Parses edge-list text.
pub fn parse_edge_list(text: &str) -> Result<WeightedDigraph, GraphError> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split([',', '\t']).map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("expected 2 or 3 fields, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(GraphError::Parse { line: line_no, message: "empty node label".into() });
        }
        let weight = match fields.get(2) {
            None => 1.0,
            Some(w) => w
                .parse::<f64>()
                .map_err(|_| GraphError::Parse { line: line_no, message: format!("bad weight {w:?}") })?,
        };
        if !weight.is_finite() {
            return Err(GraphError::Parse { line: line_no, message: "weight is not finite".into() });
        }
        if fields[0] == fields[1] {
            return Err(GraphError::SelfLoop { node: fields[0].to_string() });
        }
        if weight <= 0.0 {
            return Err(GraphError::NonPositiveWeight { line: line_no, weight });
        }
        let mut intern = |label: &str| -> usize {
            if let Some(&i) = index.get(label) {
                return i;
            }
            let i = labels.len();
            labels.push(label.to_string());
            index.insert(label.to_string(), i);
            i
        };
        let s = intern(fields[0]);
        let d = intern(fields[1]);
        if !seen.insert((s, d)) {
            return Err(GraphError::DuplicateEdge { src: labels[s].clone(), dst: labels[d].clone() });
        }
        edges.push((s, d, weight));
    }
    if edges.is_empty() {
        return Err(GraphError::Parse { line: text.lines().count(), message: "no edges".into() });
    }
    WeightedDigraph::with_labels(labels, &edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<WeightedDigraph, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| GraphError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_edge_list(&text)
}

/// `A[i][j] = w_ij` for each edge, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix(pub DMatrix<f64>);

/// Diagonal of out-degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeMatrix(pub DVector<f64>);

impl DegreeMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.0)
    }
}

/// `L = D - A`. Rows sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(pub DMatrix<f64>);

impl LaplacianMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> f64 {
        self.0.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    }
}

pub fn build_matrices(g: &WeightedDigraph) -> (AdjacencyMatrix, DegreeMatrix, LaplacianMatrix) {
    let a = g.adjacency();
    let d = DVector::from_vec(g.out_degrees());
    let mut l = -a.0.clone();
    for i in 0..g.n {
        l[(i, i)] = d[i];
    }
    let l = LaplacianMatrix(l);
    debug_assert!(l.max_row_sum() <= 1e-12 * d.iter().fold(1.0, |m: f64, x| m.max(*x)));
    (a, DegreeMatrix(d), l)
}

pub fn laplacian(g: &WeightedDigraph) -> LaplacianMatrix {
    build_matrices(g).2
}

/// Reconstructs a graph from a Laplacian (`w_ij = -L_ij` for `i != j`).
/// Entries whose magnitude is at most `zero_tol` are treated as absent.
pub fn graph_from_laplacian(l: &DMatrix<f64>, zero_tol: f64) -> Result<WeightedDigraph, GraphError> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(GraphError::Invalid("Laplacian must be square".into()));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && l[(i, j)].abs() > zero_tol {
                edges.push((i, j, -l[(i, j)]));
            }
        }
    }
    WeightedDigraph::from_edges(n, &edges)
}
