//! Symmetrizability, the `L = L0 + LI` split, and the mode basis of `L0`.
//!
//! A digraph is symmetrizable when there are positive node weights `m` with
//! `m_i w_ij = m_j w_ji` on every edge. Then `S0 = M^{1/2} L0 M^{-1/2}` is
//! symmetric and its orthonormal eigenbasis `P` gives the mode coordinates
//! `psi = P^T M^{1/2} x`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::graph::{build_matrices, LaplacianMatrix, NodeId, WeightedDigraph};
use crate::linalg::{complexify, CMatrix, CVector};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("not symmetrizable: edge {src} -> {dst} has no reverse link")]
    OneWayEdge { src: String, dst: String },
    #[error("not symmetrizable: detailed balance fails on {src} <-> {dst} (relative residual {residual:e})")]
    CycleInconsistent { src: String, dst: String, residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver failure: {0}")]
    NumericalFailure(String),
    #[error("operation needs a symmetrizable graph but the one-way part is nonzero")]
    NotSymmetrizable,
}

/// Why a graph failed the symmetrizability check, with the offending edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    OneWayEdge { src: NodeId, dst: NodeId },
    CycleInconsistent { src: NodeId, dst: NodeId, residual: f64 },
}

/// Positive node weights with `m_i w_ij = m_j w_ji`; each weakly connected
/// component is scaled so that its smallest weight is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizationWeights(pub DVector<f64>);

impl SymmetrizationWeights {
    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn sqrt(&self) -> DVector<f64> {
        self.0.map(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> DVector<f64> {
        self.0.map(|m| 1.0 / m.sqrt())
    }
}

/// Returns the first violation found, scanning one-way edges first.
pub fn find_violation(g: &WeightedDigraph, tol: f64) -> Result<SymmetrizationWeights, Violation> {
    let n = g.node_count();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        w[(e.src.0, e.dst.0)] = e.weight;
    }
    for e in g.edges() {
        if w[(e.dst.0, e.src.0)] == 0.0 {
            return Err(Violation::OneWayEdge { src: e.src, dst: e.dst });
        }
    }

    // Every edge is reciprocal here, so weak components coincide with the
    // components of the undirected reciprocal graph. Propagate along a BFS
    // tree from the smallest node of each component.
    let mut m = vec![0.0; n];
    let mut nbrs = vec![Vec::new(); n];
    for e in g.edges() {
        nbrs[e.src.0].push(e.dst.0);
    }
    for comp in g.weak_components() {
        let root = comp[0];
        m[root] = 1.0;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for &j in &nbrs[i] {
                if m[j] == 0.0 {
                    m[j] = m[i] * w[(i, j)] / w[(j, i)];
                    queue.push_back(j);
                }
            }
        }
        let min = comp.iter().map(|&i| m[i]).fold(f64::INFINITY, f64::min);
        for &i in &comp {
            m[i] /= min;
        }
    }

    for e in g.edges() {
        let (i, j) = (e.src.0, e.dst.0);
        if i > j {
            continue;
        }
        let fwd = m[i] * w[(i, j)];
        let back = m[j] * w[(j, i)];
        let residual = (fwd - back).abs() / fwd.max(back);
        if residual > tol {
            return Err(Violation::CycleInconsistent { src: e.src, dst: e.dst, residual });
        }
    }
    Ok(SymmetrizationWeights(DVector::from_vec(m)))
}

pub fn check_symmetrizable(g: &WeightedDigraph, tol: f64) -> Result<SymmetrizationWeights, SymmetryError> {
    find_violation(g, tol).map_err(|v| match v {
        Violation::OneWayEdge { src, dst } => {
            SymmetryError::OneWayEdge { src: g.label(src).to_string(), dst: g.label(dst).to_string() }
        }
        Violation::CycleInconsistent { src, dst, residual } => {
            SymmetryError::CycleInconsistent { src: g.label(src).to_string(), dst: g.label(dst).to_string(), residual }
        }
    })
}

/// Left null vector of `L` (`m^T L = 0`) from the SVD of `L^T`, scaled to a
/// positive vector with minimum 1. Meaningful for connected graphs; used as a
/// cross-check of the tree propagation.
pub fn left_null_vector(l: &DMatrix<f64>) -> DVector<f64> {
    let svd = l.transpose().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (k, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, bv), (k, &s)| if s < bv { (k, s) } else { (bk, bv) });
    let mut v: DVector<f64> = v_t.row(k).transpose();
    if v.sum() < 0.0 {
        v = -v;
    }
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    v / min
}

/// `L = L0 + LI` with `L0` symmetrizable by `m` and `LI` a one-way graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSplit {
    pub l0: LaplacianMatrix,
    pub li: LaplacianMatrix,
    pub m: SymmetrizationWeights,
    /// True when the whole graph was symmetrizable and `LI = 0`.
    pub symmetrizable: bool,
}

impl LaplacianSplit {
    pub fn full(&self) -> DMatrix<f64> {
        &self.l0.0 + &self.li.0
    }

    pub fn one_way_is_zero(&self) -> bool {
        self.li.0.iter().all(|&x| x == 0.0)
    }
}

/// Splits `L`. Symmetrizable graphs keep `L0 = L`; otherwise `m = 1` and each
/// node pair contributes `min(w_ij, w_ji)` symmetrically to `L0` with the
/// excess on the heavier direction going to `LI`.
pub fn decompose_laplacian(g: &WeightedDigraph, tol: f64) -> LaplacianSplit {
    let n = g.node_count();
    let (_, _, l) = build_matrices(g);
    if let Ok(m) = check_symmetrizable(g, tol) {
        return LaplacianSplit { l0: l, li: LaplacianMatrix(DMatrix::zeros(n, n)), m, symmetrizable: true };
    }
    let a = g.adjacency().0;
    let mut a0 = DMatrix::<f64>::zeros(n, n);
    let mut ai = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w0 = a[(i, j)].min(a[(j, i)]);
            a0[(i, j)] = w0;
            ai[(i, j)] = a[(i, j)] - w0;
        }
    }
    let lap = |adj: &DMatrix<f64>| {
        let mut out = -adj.clone();
        for i in 0..n {
            out[(i, i)] = adj.row(i).sum();
        }
        out
    };
    let l0 = lap(&a0);
    // LI is taken as the exact remainder so that L0 + LI reproduces L.
    let li = &l.0 - &l0;
    LaplacianSplit {
        l0: LaplacianMatrix(l0),
        li: LaplacianMatrix(li),
        m: SymmetrizationWeights::uniform(n),
        symmetrizable: false,
    }
}

/// Eigen-system of `S0 = M^{1/2} L0 M^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub s0: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Columns are the orthonormal eigenvectors `v_mu`.
    pub basis: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Λ0 = diag(λ)`.
    pub fn lambda0(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.eigenvalues)
    }
}

pub fn symmetric_form(l0: &LaplacianMatrix, m: &SymmetrizationWeights) -> DMatrix<f64> {
    let (sq, isq) = (m.sqrt(), m.inv_sqrt());
    let n = l0.dim();
    DMatrix::from_fn(n, n, |i, j| sq[i] * l0.0[(i, j)] * isq[j])
}

/// Flips each eigenvector so that its first component of largest magnitude is
/// positive.
fn fix_sign(v: &mut DVector<f64>) {
    let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let lead = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap_or(0);
    if v[lead] < 0.0 {
        v.neg_mut();
    }
}

pub fn symmetrize(l0: &LaplacianMatrix, m: &SymmetrizationWeights) -> Result<SpectralDecomposition, SymmetryError> {
    let n = l0.dim();
    if m.0.len() != n {
        return Err(SymmetryError::DimensionMismatch { expected: n, got: m.0.len() });
    }
    let s0 = symmetric_form(l0, m);
    if s0.iter().all(|&x| x == 0.0) {
        return Ok(SpectralDecomposition { s0, eigenvalues: DVector::zeros(n), basis: DMatrix::identity(n, n) });
    }
    let scale = s0.norm().max(1.0);
    let asym = (&s0 - s0.transpose()).norm();
    if asym > 1e-10 * scale {
        return Err(SymmetryError::NumericalFailure(format!(
            "M^(1/2) L0 M^(-1/2) is not symmetric (asymmetry {asym:e}); weights do not symmetrize L0"
        )));
    }
    let sym = (&s0 + s0.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
        .ok_or_else(|| SymmetryError::NumericalFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut basis = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        fix_sign(&mut v);
        basis.set_column(col, &v);
    }
    Ok(SpectralDecomposition { s0, eigenvalues, basis })
}

/// `psi = P^T M^{1/2} x`.
pub fn to_modes(x: &CVector, sd: &SpectralDecomposition, m: &SymmetrizationWeights) -> Result<CVector, SymmetryError> {
    check_dims(x.len(), sd, m)?;
    let sq = m.sqrt();
    let scaled = CVector::from_fn(x.len(), |i, _| x[i] * sq[i]);
    Ok(complexify(&sd.basis.transpose()) * scaled)
}

/// `x = M^{-1/2} P psi`.
pub fn from_modes(
    psi: &CVector,
    sd: &SpectralDecomposition,
    m: &SymmetrizationWeights,
) -> Result<CVector, SymmetryError> {
    check_dims(psi.len(), sd, m)?;
    let isq = m.inv_sqrt();
    let y = complexify(&sd.basis) * psi;
    Ok(CVector::from_fn(y.len(), |i, _| y[i] * isq[i]))
}

fn check_dims(len: usize, sd: &SpectralDecomposition, m: &SymmetrizationWeights) -> Result<(), SymmetryError> {
    let n = sd.dim();
    if len != n {
        return Err(SymmetryError::DimensionMismatch { expected: n, got: len });
    }
    if m.0.len() != n {
        return Err(SymmetryError::DimensionMismatch { expected: n, got: m.0.len() });
    }
    Ok(())
}

/// `P^T (M^{1/2} X M^{-1/2}) P` for any node-domain matrix `X`.
pub fn conjugate_to_modes(
    x: &DMatrix<f64>,
    sd: &SpectralDecomposition,
    m: &SymmetrizationWeights,
) -> Result<DMatrix<f64>, SymmetryError> {
    let n = sd.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(SymmetryError::DimensionMismatch { expected: n, got: x.nrows() });
    }
    if m.0.len() != n {
        return Err(SymmetryError::DimensionMismatch { expected: n, got: m.0.len() });
    }
    let (sq, isq) = (m.sqrt(), m.inv_sqrt());
    let inner = DMatrix::from_fn(n, n, |i, j| sq[i] * x[(i, j)] * isq[j]);
    Ok(sd.basis.transpose() * inner * &sd.basis)
}

/// `Λ_I = P^T (M^{1/2} LI M^{-1/2}) P`.
pub fn mode_interaction_matrix(
    li: &LaplacianMatrix,
    sd: &SpectralDecomposition,
    m: &SymmetrizationWeights,
) -> Result<DMatrix<f64>, SymmetryError> {
    conjugate_to_modes(&li.0, sd, m)
}

/// Everything the downstream modules need from a graph in one pass.
#[derive(Debug, Clone)]
pub struct ModeModel {
    pub laplacian: LaplacianMatrix,
    pub split: LaplacianSplit,
    pub spectral: SpectralDecomposition,
    pub lambda_i: DMatrix<f64>,
}

impl ModeModel {
    pub fn from_graph(g: &WeightedDigraph, tol: f64) -> Result<Self, SymmetryError> {
        let (_, _, laplacian) = build_matrices(g);
        let split = decompose_laplacian(g, tol);
        let spectral = symmetrize(&split.l0, &split.m)?;
        let lambda_i = mode_interaction_matrix(&split.li, &spectral, &split.m)?;
        Ok(Self { laplacian, split, spectral, lambda_i })
    }

    /// `Λ = Λ0 + Λ_I`.
    pub fn lambda(&self) -> DMatrix<f64> {
        self.spectral.lambda0() + &self.lambda_i
    }

    pub fn lambda_complex(&self) -> CMatrix {
        complexify(&self.lambda())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn g(n: usize, e: &[(usize, usize, f64)]) -> WeightedDigraph {
        WeightedDigraph::from_edges(n, e).unwrap()
    }

    #[test]
    fn symmetric_pair_weights() {
        let m = check_symmetrizable(&g(2, &[(0, 1, 1.0), (1, 0, 1.0)]), DEFAULT_TOL).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn asymmetric_pair_weights() {
        // m_2 = m_1 * w12 / w21 = 2; residual |1*2 - 2*1| = 0
        let m = check_symmetrizable(&g(2, &[(0, 1, 2.0), (1, 0, 1.0)]), DEFAULT_TOL).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn one_way_rejected() {
        let err = check_symmetrizable(&g(2, &[(0, 1, 1.0)]), DEFAULT_TOL).unwrap_err();
        assert_eq!(err, SymmetryError::OneWayEdge { src: "0".into(), dst: "1".into() });
    }

    #[test]
    fn inconsistent_cycle_rejected() {
        // Triangle with ratios 2,2,2 around the cycle: product 8 != 1.
        let gr = g(3, &[(0, 1, 2.0), (1, 0, 1.0), (1, 2, 2.0), (2, 1, 1.0), (2, 0, 2.0), (0, 2, 1.0)]);
        assert!(matches!(check_symmetrizable(&gr, DEFAULT_TOL), Err(SymmetryError::CycleInconsistent { .. })));
    }

    #[test]
    fn weights_normalized_per_component() {
        let gr = g(4, &[(0, 1, 1.0), (1, 0, 3.0), (2, 3, 5.0), (3, 2, 1.0)]);
        let m = check_symmetrizable(&gr, DEFAULT_TOL).unwrap();
        // m1 = m0/3 -> scaled (3, 1); m3 = 5 m2 -> (1, 5)
        assert_eq!(m.as_slice(), &[3.0, 1.0, 1.0, 5.0]);
    }

    #[test]
    fn left_null_vector_agrees_with_propagation() {
        let gr = g(3, &[(0, 1, 2.0), (1, 0, 1.0), (1, 2, 0.5), (2, 1, 1.5)]);
        let m = check_symmetrizable(&gr, DEFAULT_TOL).unwrap();
        let v = left_null_vector(&build_matrices(&gr).2 .0);
        assert!((v - &m.0).amax() < 1e-10);
    }

    #[test]
    fn split_cases() {
        let sym = g(3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 2.0), (2, 1, 2.0)]);
        let s = decompose_laplacian(&sym, DEFAULT_TOL);
        assert!(s.symmetrizable && s.one_way_is_zero());

        let one = g(2, &[(0, 1, 1.0)]);
        let s = decompose_laplacian(&one, DEFAULT_TOL);
        assert!(s.l0.0.iter().all(|&x| x == 0.0));
        assert_eq!(s.li.0, build_matrices(&one).2 .0);
    }

    #[test]
    fn split_ring_with_weak_reverse() {
        let ring = g(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (1, 0, 0.5), (2, 1, 0.5), (0, 2, 0.5)]);
        let s = decompose_laplacian(&ring, DEFAULT_TOL);
        // Hand-applied min rule: 0.5 both ways in L0, 0.5 forward in LI.
        let l0 = DMatrix::from_row_slice(3, 3, &[1.0, -0.5, -0.5, -0.5, 1.0, -0.5, -0.5, -0.5, 1.0]);
        let li = DMatrix::from_row_slice(3, 3, &[0.5, -0.5, 0.0, 0.0, 0.5, -0.5, -0.5, 0.0, 0.5]);
        assert_eq!(s.l0.0, l0);
        assert_eq!(s.li.0, li);
        assert_eq!(s.full(), build_matrices(&ring).2 .0);
        assert!(!s.symmetrizable);
    }

    #[test]
    fn symmetrize_pair() {
        let l0 = LaplacianMatrix(DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));
        let sd = symmetrize(&l0, &SymmetrizationWeights::uniform(2)).unwrap();
        let r = 0.5f64.sqrt();
        assert!((sd.eigenvalues[0]).abs() < 1e-12 && (sd.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!((sd.basis.column(0) - DVector::from_vec(vec![r, r])).amax() < 1e-12);
        assert!((sd.basis.column(1) - DVector::from_vec(vec![r, -r])).amax() < 1e-12);
    }

    #[test]
    fn symmetrize_zero_is_identity() {
        let sd = symmetrize(&LaplacianMatrix(DMatrix::zeros(3, 3)), &SymmetrizationWeights::uniform(3)).unwrap();
        assert_eq!(sd.basis, DMatrix::identity(3, 3));
        assert!(sd.eigenvalues.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn symmetrize_weighted_pair() {
        let gr = g(2, &[(0, 1, 2.0), (1, 0, 1.0)]);
        let m = check_symmetrizable(&gr, DEFAULT_TOL).unwrap();
        let sd = symmetrize(&build_matrices(&gr).2, &m).unwrap();
        let r2 = 2f64.sqrt();
        let want = DMatrix::from_row_slice(2, 2, &[2.0, -r2, -r2, 1.0]);
        assert!((&sd.s0 - want).amax() < 1e-14);
        assert!(sd.eigenvalues[0].abs() < 1e-12 && (sd.eigenvalues[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetrize_rejects_wrong_weights() {
        let gr = g(2, &[(0, 1, 2.0), (1, 0, 1.0)]);
        let err = symmetrize(&build_matrices(&gr).2, &SymmetrizationWeights::uniform(2));
        assert!(matches!(err, Err(SymmetryError::NumericalFailure(_))));
    }

    #[test]
    fn mode_round_trip_examples() {
        let l0 = LaplacianMatrix(DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));
        let m = SymmetrizationWeights::uniform(2);
        let sd = symmetrize(&l0, &m).unwrap();
        let x = CVector::from_vec(vec![c(1.0), c(0.0)]);
        let psi = to_modes(&x, &sd, &m).unwrap();
        let r = 0.5f64.sqrt();
        assert!((psi[0] - c(r)).norm() < 1e-14 && (psi[1] - c(r)).norm() < 1e-14);
        let zero = to_modes(&CVector::zeros(2), &sd, &m).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
        assert!(matches!(to_modes(&CVector::zeros(3), &sd, &m), Err(SymmetryError::DimensionMismatch { .. })));
    }

    #[test]
    fn unit_mode_maps_to_scaled_eigenvector() {
        let gr = g(2, &[(0, 1, 2.0), (1, 0, 1.0)]);
        let m = check_symmetrizable(&gr, DEFAULT_TOL).unwrap();
        let sd = symmetrize(&build_matrices(&gr).2, &m).unwrap();
        let e1 = CVector::from_vec(vec![c(0.0), c(1.0)]);
        let x = from_modes(&e1, &sd, &m).unwrap();
        for i in 0..2 {
            let want = sd.basis[(i, 1)] / m.0[i].sqrt();
            assert!((x[i] - c(want)).norm() < 1e-14);
        }
    }

    #[test]
    fn one_way_only_lambda_i_is_l() {
        let gr = g(2, &[(0, 1, 1.0)]);
        let mm = ModeModel::from_graph(&gr, DEFAULT_TOL).unwrap();
        assert_eq!(mm.spectral.basis, DMatrix::identity(2, 2));
        assert_eq!(mm.lambda_i, mm.laplacian.0);
        let none = ModeModel::from_graph(&g(2, &[(0, 1, 1.0), (1, 0, 1.0)]), DEFAULT_TOL).unwrap();
        assert!(none.lambda_i.iter().all(|&x| x == 0.0));
    }
}
