//! The 2n-dimensional fundamental equation `i dx̂/dt = Ĥ x̂`.
//!
//! States are interleaved, `(x⁺_1, x⁻_1, x⁺_2, x⁻_2, ...)`, so that node `i`
//! owns the 2×2 block at rows/columns `2i, 2i+1`. Two operators are built:
//!
//! * the spectral one, `Ĥ = H ⊗ diag(1, -1)`, a true square root of
//!   `L̂ = L ⊗ E` that is dense whenever `H` is;
//! * the structured one, `Ĥ = H_d ⊗ diag(1, -1) - H_a ⊗ X` with the nilpotent
//!   `X = ½[[1, 1], [-1, -1]]`, `H_d = diag(√d_i)` and `H_a = H_d⁻¹ A`. Its
//!   off-diagonal blocks sit exactly on the links of the graph. It no longer
//!   squares to `L̂`, but the branch sum `x⁺ + x⁻` obeys `s̈ = -L s`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{evolve_linear, DynamicsError, Trajectory, TrajectoryMeta};
use crate::graph::{build_matrices, WeightedDigraph};
use crate::linalg::{c, complexify, kron, CMatrix, CVector, I};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoubledError {
    #[error("node {label} (index {index}) has zero out-degree; add an outgoing link or drop the sink")]
    ZeroDegreeNode { index: usize, label: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// `diag(1, -1)`.
pub fn sign_factor() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// `½[[1, 1], [-1, -1]]`, squares to zero.
pub fn nilpotent_factor() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.5), c(-0.5), c(-0.5)])
}

pub fn unit2() -> CMatrix {
    CMatrix::identity(2, 2)
}

/// `[[0, 1], [1, 0]]`.
pub fn swap_factor() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

/// Interleaved 2n-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubledVector(pub CVector);

impl DoubledVector {
    pub fn interleave(plus: &CVector, minus: &CVector) -> Result<Self, DoubledError> {
        if plus.len() != minus.len() {
            return Err(DoubledError::DimensionMismatch { expected: plus.len(), got: minus.len() });
        }
        let n = plus.len();
        Ok(Self(CVector::from_fn(2 * n, |k, _| if k % 2 == 0 { plus[k / 2] } else { minus[k / 2] })))
    }

    pub fn node_count(&self) -> usize {
        self.0.len() / 2
    }

    pub fn plus(&self) -> CVector {
        CVector::from_fn(self.node_count(), |i, _| self.0[2 * i])
    }

    pub fn minus(&self) -> CVector {
        CVector::from_fn(self.node_count(), |i, _| self.0[2 * i + 1])
    }

    /// `(I ⊗ (1, 1)) x̂ = x⁺ + x⁻`.
    pub fn branch_sum(&self) -> CVector {
        branch_sum(&self.0)
    }
}

pub fn branch_sum(v: &CVector) -> CVector {
    CVector::from_fn(v.len() / 2, |i, _| v[2 * i] + v[2 * i + 1])
}

/// `L̂ = L ⊗ E`.
pub fn kron_laplacian(l: &DMatrix<f64>) -> CMatrix {
    kron(&complexify(l), &unit2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Spectral,
    Structured,
}

/// Kronecker ingredients of a doubled operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Factors {
    Spectral { h: CMatrix },
    Structured(SparseFactors),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubledOperator {
    pub matrix: CMatrix,
    pub kind: OperatorKind,
    pub factors: Factors,
}

impl DoubledOperator {
    pub fn node_count(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn squared(&self) -> CMatrix {
        &self.matrix * &self.matrix
    }
}

/// `Ĥ = H ⊗ diag(1, -1)`.
pub fn hat_h_spectral(h: &CMatrix) -> DoubledOperator {
    DoubledOperator {
        matrix: kron(h, &sign_factor()),
        kind: OperatorKind::Spectral,
        factors: Factors::Spectral { h: h.clone() },
    }
}

/// `H_d = diag(√d_i)` and `H_a = H_d⁻¹ A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFactors {
    pub hd: DVector<f64>,
    pub ha: DMatrix<f64>,
}

impl SparseFactors {
    pub fn node_count(&self) -> usize {
        self.hd.len()
    }

    pub fn hd_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.hd)
    }

    /// `H_d²`, the degree matrix.
    pub fn degree(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.hd.map(|x| x * x))
    }

    /// `H_d H_a`, the adjacency matrix.
    pub fn adjacency(&self) -> DMatrix<f64> {
        self.hd_matrix() * &self.ha
    }

    /// `H_d² - H_d H_a`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree() - self.adjacency()
    }
}

pub fn sparse_factors(g: &WeightedDigraph) -> Result<SparseFactors, DoubledError> {
    let (a, d, _) = build_matrices(g);
    if let Some(i) = d.0.iter().position(|&x| x <= 0.0) {
        return Err(DoubledError::ZeroDegreeNode { index: i, label: g.labels()[i].clone() });
    }
    let hd = d.0.map(f64::sqrt);
    let n = g.node_count();
    let ha = DMatrix::from_fn(n, n, |i, j| a.0[(i, j)] / hd[i]);
    Ok(SparseFactors { hd, ha })
}

/// `Ĥ = H_d ⊗ diag(1, -1) - H_a ⊗ ½[[1, 1], [-1, -1]]`.
pub fn hat_h_structured(f: &SparseFactors) -> DoubledOperator {
    let matrix = kron(&complexify(&f.hd_matrix()), &sign_factor()) - kron(&complexify(&f.ha), &nilpotent_factor());
    DoubledOperator { matrix, kind: OperatorKind::Structured, factors: Factors::Structured(f.clone()) }
}

/// `pattern[i][j]` is true when the 2×2 block `(i, j)`, `i != j`, has an entry
/// of magnitude above `tol`. Diagonal blocks are reported false.
pub fn offdiag_block_pattern(m: &CMatrix, tol: f64) -> Vec<Vec<bool>> {
    let n = m.nrows() / 2;
    (0..n)
        .map(|i| {
            (0..n).map(|j| i != j && (0..2).any(|p| (0..2).any(|q| m[(2 * i + p, 2 * j + q)].norm() > tol))).collect()
        })
        .collect()
}

/// Off-diagonal nonzero pattern of a real matrix.
pub fn offdiag_pattern(a: &DMatrix<f64>) -> Vec<Vec<bool>> {
    let n = a.nrows();
    (0..n).map(|i| (0..n).map(|j| i != j && a[(i, j)] != 0.0).collect()).collect()
}

/// True when every off-diagonal block of `Ĥ` is nonzero exactly where the
/// graph has a link.
pub fn sparsity_match(op: &DoubledOperator, a: &DMatrix<f64>) -> bool {
    offdiag_block_pattern(&op.matrix, 0.0) == offdiag_pattern(a)
}

/// The three terms of `Ĥ² = T_D - T_sym - T_mix` for the structured operator:
/// `H_d² ⊗ E`, `(H_d H_a + H_a H_d) ⊗ ½E` and
/// `(H_d H_a - H_a H_d) ⊗ ½[[0, 1], [1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredExpansion {
    pub term_d: CMatrix,
    pub term_sym: CMatrix,
    pub term_mix: CMatrix,
}

impl SquaredExpansion {
    pub fn combined(&self) -> CMatrix {
        &self.term_d - &self.term_sym - &self.term_mix
    }
}

pub fn hat_h_squared_expansion(f: &SparseFactors) -> SquaredExpansion {
    let hd = f.hd_matrix();
    let dha = &hd * &f.ha;
    let had = &f.ha * &hd;
    let half = c(0.5);
    SquaredExpansion {
        term_d: kron(&complexify(&f.degree()), &unit2()),
        term_sym: kron(&complexify(&(&dha + &had)), &(unit2() * half)),
        term_mix: kron(&complexify(&(&dha - &had)), &(swap_factor() * half)),
    }
}

/// Solves `i dx̂/dt = Ĥ x̂` on a uniform grid.
pub fn integrate_doubled(
    op: &DoubledOperator,
    x0: &DoubledVector,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, DoubledError> {
    let generator = &op.matrix * -I;
    Ok(evolve_linear(&generator, &x0.0, t_end, dt, "expm-doubled")?)
}

/// Branch sums `s(t) = x⁺(t) + x⁻(t)` of a doubled trajectory.
pub fn summed_trajectory(traj: &Trajectory) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: traj.states.iter().map(branch_sum).collect(),
        velocities: None,
        meta: TrajectoryMeta { integrator: format!("{}+sum", traj.meta.integrator), ..traj.meta.clone() },
    }
}

/// Initial condition whose branch sum starts at `(x0, v0)`:
/// `x± = ½(x0 ± i H_d⁻¹ v0)`.
pub fn lift_initial_conditions(
    f: &SparseFactors,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
) -> Result<DoubledVector, DoubledError> {
    let n = f.node_count();
    for len in [x0.len(), v0.len()] {
        if len != n {
            return Err(DoubledError::DimensionMismatch { expected: n, got: len });
        }
    }
    if let Some(i) = f.hd.iter().position(|&h| h <= 0.0) {
        return Err(DoubledError::ZeroDegreeNode { index: i, label: i.to_string() });
    }
    let plus = CVector::from_fn(n, |i, _| (c(x0[i]) + I * (v0[i] / f.hd[i])) * 0.5);
    let minus = CVector::from_fn(n, |i, _| (c(x0[i]) - I * (v0[i] / f.hd[i])) * 0.5);
    DoubledVector::interleave(&plus, &minus)
}

/// `‖(I ⊗ (1,1)) Ĥ² x̂ - L x‖ / max(1, ‖L x‖)` with `x = (I ⊗ (1,1)) x̂`.
pub fn projection_identity_check(f: &SparseFactors, xhat: &DoubledVector) -> Result<f64, DoubledError> {
    let n = f.node_count();
    if xhat.0.len() != 2 * n {
        return Err(DoubledError::DimensionMismatch { expected: 2 * n, got: xhat.0.len() });
    }
    let op = hat_h_structured(f);
    let lhs = branch_sum(&(op.squared() * &xhat.0));
    let rhs = complexify(&f.laplacian()) * xhat.branch_sum();
    Ok((lhs - &rhs).norm() / rhs.norm().max(1.0))
}

/// Centered-difference residual of `s̈ = -L s`, relative to `max(1, ‖L s‖)`.
pub fn summed_wave_residual(summed: &Trajectory, l: &DMatrix<f64>) -> f64 {
    crate::dynamics::second_order_residual(summed, &complexify(l))
}

/// Why `Ĥ² = L̂` cannot hold with a nilpotent off-diagonal factor, checked
/// numerically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibilityReport {
    /// `‖X²‖_F`.
    pub x_squared_norm: f64,
    pub det_x: f64,
    /// `X` singular, so no `Y` has `XY = YX = E`.
    pub x_invertible: bool,
    /// `‖Y² - E‖_F` for `Y = diag(1, -1)`.
    pub y_squared_minus_e: f64,
    /// `‖XY - E‖_F` for the same `Y`.
    pub xy_minus_e: f64,
    pub relaxed_conditions_hold: bool,
}

pub fn infeasibility_witness() -> InfeasibilityReport {
    let x = nilpotent_factor();
    let y = sign_factor();
    let e = unit2();
    let x2 = (&x * &x).norm();
    let det = x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)];
    let y2 = (&y * &y - &e).norm();
    InfeasibilityReport {
        x_squared_norm: x2,
        det_x: det.re,
        x_invertible: det.norm() != 0.0,
        y_squared_minus_e: y2,
        xy_minus_e: (&x * &y - &e).norm(),
        relaxed_conditions_hold: x2 == 0.0 && y2 == 0.0,
    }
}
