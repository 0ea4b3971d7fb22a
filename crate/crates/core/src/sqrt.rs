//! Principal matrix square roots and the operator bundle `Ω, Ω0, Ω_I, H, H0, H_I`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{c, complexify, max_imag, CMatrix};
use crate::symmetry::{ModeModel, SpectralDecomposition, SymmetrizationWeights};

/// Eigenvalues with `|λ| <= ZERO_EIG_REL * ‖A‖_F` are treated as exact zeros.
pub const ZERO_EIG_REL: f64 = 1e-10;
/// Required accuracy of `R² = A`, relative Frobenius.
pub const SQRT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqrtError {
    #[error("square root undefined: eigenvalue {re}{im:+}i {reason}")]
    SqrtUndefined { re: f64, im: f64, reason: String },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// Principal square root by complex Schur form `A = Q T Q^H` followed by the
/// Björck–Hammarling column recurrence on the triangular factor.
///
/// Fails on eigenvalues on the open negative real axis and on zero
/// eigenvalues that are not semisimple.
pub fn principal_sqrt(a: &CMatrix) -> Result<CMatrix, SqrtError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "principal_sqrt needs a square matrix");
    let scale = a.norm();
    if n == 0 || scale == 0.0 {
        return Ok(CMatrix::zeros(n, n));
    }
    if !scale.is_finite() {
        return Err(SqrtError::NumericalFailure("matrix has non-finite entries".into()));
    }
    let schur = a
        .clone()
        .try_schur(f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| SqrtError::NumericalFailure("complex Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let zero_tol = ZERO_EIG_REL * scale;

    let mut u = CMatrix::zeros(n, n);
    for j in 0..n {
        let lam = t[(j, j)];
        if lam.norm() <= zero_tol {
            u[(j, j)] = c(0.0);
        } else if lam.re < 0.0 && lam.im.abs() <= zero_tol {
            return Err(SqrtError::SqrtUndefined {
                re: lam.re,
                im: lam.im,
                reason: "lies on the negative real axis".into(),
            });
        } else {
            u[(j, j)] = lam.sqrt();
        }
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let denom = u[(i, i)] + u[(j, j)];
            if denom.norm() == 0.0 {
                // Both diagonal entries are zero eigenvalues: a square root
                // exists only if the coupling vanishes.
                if s.norm() > SQRT_TOL * scale {
                    return Err(SqrtError::SqrtUndefined {
                        re: 0.0,
                        im: 0.0,
                        reason: "is a defective zero eigenvalue".into(),
                    });
                }
                u[(i, j)] = c(0.0);
            } else {
                u[(i, j)] = s / denom;
            }
        }
    }
    let r = &q * u * q.adjoint();
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SqrtError::NumericalFailure("square root has non-finite entries".into()));
    }
    let res = (&r * &r - a).norm() / scale;
    if res > SQRT_TOL {
        return Err(SqrtError::NumericalFailure(format!("square root residual {res:e} exceeds {SQRT_TOL:e}")));
    }
    Ok(r)
}

/// Where a bundle came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub symmetrizable: bool,
    pub weights: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Square-root operators in mode and node coordinates. All stored complex.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    pub lambda: CMatrix,
    pub omega: CMatrix,
    pub omega0: CMatrix,
    pub omega_i: CMatrix,
    pub h: CMatrix,
    pub h0: CMatrix,
    pub h_i: CMatrix,
    /// `‖H_I² - L_I‖_F`; nonzero in general since `H_I` is not a root of `L_I`.
    pub h_i_square_gap: f64,
    pub provenance: Provenance,
}

/// `M^{-1/2} P X P^T M^{1/2}`: mode-domain operator back to node coordinates.
pub fn to_node_domain(x: &CMatrix, sd: &SpectralDecomposition, m: &SymmetrizationWeights) -> CMatrix {
    let p = complexify(&sd.basis);
    let inner = &p * x * p.transpose();
    let (sq, isq) = (m.sqrt(), m.inv_sqrt());
    let n = sd.dim();
    CMatrix::from_fn(n, n, |i, j| inner[(i, j)] * isq[i] * sq[j])
}

pub fn build_bundle(
    sd: &SpectralDecomposition,
    lambda_i: &DMatrix<f64>,
    m: &SymmetrizationWeights,
    li: &DMatrix<f64>,
) -> Result<OperatorBundle, SqrtError> {
    let lambda = complexify(&(sd.lambda0() + lambda_i));
    let omega = principal_sqrt(&lambda)?;
    let zero_tol = ZERO_EIG_REL * lambda.norm();
    let roots = DVector::from_iterator(
        sd.dim(),
        sd.eigenvalues.iter().map(|&l| if l <= zero_tol { c(0.0) } else { c(l.sqrt()) }),
    );
    let omega0 = CMatrix::from_diagonal(&roots);
    let omega_i = &omega - &omega0;
    let h = to_node_domain(&omega, sd, m);
    let h0 = to_node_domain(&omega0, sd, m);
    let h_i = &h - &h0;
    let h_i_square_gap = (&h_i * &h_i - complexify(li)).norm();
    Ok(OperatorBundle {
        lambda,
        omega,
        omega0,
        omega_i,
        h,
        h0,
        h_i,
        h_i_square_gap,
        provenance: Provenance {
            symmetrizable: lambda_i.iter().all(|&x| x == 0.0),
            weights: m.as_slice().to_vec(),
            eigenvalues: sd.eigenvalues.as_slice().to_vec(),
        },
    })
}

impl OperatorBundle {
    pub fn from_model(model: &ModeModel) -> Result<Self, SqrtError> {
        build_bundle(&model.spectral, &model.lambda_i, &model.split.m, &model.split.li.0)
    }

    /// `‖H² - L‖_F / max(1, ‖L‖_F)`.
    pub fn h_residual(&self, l: &DMatrix<f64>) -> f64 {
        let lc = complexify(l);
        (&self.h * &self.h - &lc).norm() / lc.norm().max(1.0)
    }

    /// Largest imaginary part in `Ω`.
    pub fn omega_imag(&self) -> f64 {
        max_imag(&self.omega)
    }
}

/// `‖Ω² - Λ‖_F / max(1, ‖Λ‖_F)`.
pub fn sqrt_residual(bundle: &OperatorBundle) -> f64 {
    (&bundle.omega * &bundle.omega - &bundle.lambda).norm() / bundle.lambda.norm().max(1.0)
}

/// Count of entries with magnitude above `tol`.
pub fn nnz(m: &CMatrix, tol: f64) -> usize {
    m.iter().filter(|z| z.norm() > tol).count()
}

/// Row-major `[re, im]` dump used by `--dump-operators`.
pub fn matrix_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z: &Complex64| [z.re, z.im]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedDigraph;
    use crate::linalg::I;
    use crate::symmetry::DEFAULT_TOL;

    fn cm(n: usize, v: &[f64]) -> CMatrix {
        complexify(&DMatrix::from_row_slice(n, n, v))
    }

    // Denman–Beavers iteration; converges to the principal root for
    // matrices without eigenvalues on the closed negative real axis.
    fn denman_beavers(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let mut y = a.clone();
        let mut z = CMatrix::identity(n, n);
        for _ in 0..60 {
            let yi = y.clone().try_inverse().unwrap();
            let zi = z.clone().try_inverse().unwrap();
            let y2 = (&y + zi) * c(0.5);
            let z2 = (&z + yi) * c(0.5);
            y = y2;
            z = z2;
        }
        y
    }

    #[test]
    fn diagonal_root() {
        let r = principal_sqrt(&cm(2, &[0.0, 0.0, 0.0, 2.0])).unwrap();
        assert!((r - cm(2, &[0.0, 0.0, 0.0, 2f64.sqrt()])).norm() < 1e-14);
    }

    #[test]
    fn pair_laplacian_root() {
        let l = cm(2, &[1.0, -1.0, -1.0, 1.0]);
        let r = principal_sqrt(&l).unwrap();
        assert!((r - &l * c(0.5f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn rotation_root() {
        let r = principal_sqrt(&cm(2, &[0.0, -1.0, 1.0, 0.0])).unwrap();
        let want = cm(2, &[1.0, -1.0, 1.0, 1.0]) * c(0.5f64.sqrt());
        assert!((r - want).norm() < 1e-14);
    }

    #[test]
    fn agrees_with_denman_beavers_on_nonnormal() {
        let a = CMatrix::from_row_slice(
            3,
            3,
            &[c(4.0), c(1.0), I * 2.0, c(0.0), c(2.0) + I, c(3.0), c(0.5), c(0.0), c(1.0)],
        );
        let r = principal_sqrt(&a).unwrap();
        let db = denman_beavers(&a);
        assert!((&r - db).norm() < 1e-10);
        // Spectral mapping: eigenvalues of the root lie in the right half-plane.
        let ev = r.clone().schur().eigenvalues().unwrap();
        assert!(ev.iter().all(|z| z.re >= 0.0));
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let err = principal_sqrt(&cm(2, &[-1.0, 0.0, 0.0, 1.0])).unwrap_err();
        assert!(matches!(err, SqrtError::SqrtUndefined { re, .. } if re < 0.0));
    }

    #[test]
    fn defective_zero_rejected() {
        let err = principal_sqrt(&cm(2, &[0.0, 1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, SqrtError::SqrtUndefined { .. }));
    }

    #[test]
    fn semisimple_double_zero_ok() {
        // Two disconnected pairs: zero eigenvalue of multiplicity two.
        let l = cm(4, &[1., -1., 0., 0., -1., 1., 0., 0., 0., 0., 2., -2., 0., 0., -1., 1.]);
        let r = principal_sqrt(&l).unwrap();
        assert!((&r * &r - &l).norm() < 1e-10);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(principal_sqrt(&CMatrix::zeros(3, 3)).unwrap(), CMatrix::zeros(3, 3));
    }

    fn bundle_for(g: &WeightedDigraph) -> (ModeModel, OperatorBundle) {
        let model = ModeModel::from_graph(g, DEFAULT_TOL).unwrap();
        let b = OperatorBundle::from_model(&model).unwrap();
        (model, b)
    }

    #[test]
    fn symmetrizable_bundle() {
        let g = WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let (model, b) = bundle_for(&g);
        assert!(b.omega_i.norm() < 1e-14);
        assert!((&b.h - &b.h0).norm() < 1e-14);
        let want = complexify(&model.laplacian.0) * c(0.5f64.sqrt());
        assert!((&b.h - want).norm() < 1e-12);
        assert!(b.h_residual(&model.laplacian.0) < 1e-10);
        assert!(sqrt_residual(&b) <= 1e-15);
    }

    #[test]
    fn ring_bundle_is_complex_and_exact() {
        let g = WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let (model, b) = bundle_for(&g);
        assert!(sqrt_residual(&b) <= 1e-8);
        assert!(b.h_residual(&model.laplacian.0) <= 1e-7);
        // Real input, but the root has genuinely complex spectrum.
        let ev = b.h.clone().schur().eigenvalues().unwrap();
        assert!(ev.iter().any(|z| z.im.abs() > 0.1));
        // No reciprocal pair: L0 = 0, so H_I = H squares back to LI = L.
        assert!(b.h_i_square_gap < 1e-8);
        assert!(!b.provenance.symmetrizable);
    }

    #[test]
    fn mixed_graph_interaction_root_does_not_square_to_li() {
        let g = WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let (_, b) = bundle_for(&g);
        assert!(b.h_i_square_gap > 1e-3);
    }

    #[test]
    fn square_root_of_sparse_path_is_dense() {
        let edges: Vec<_> = (0..4).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]).collect();
        let g = WeightedDigraph::from_edges(5, &edges).unwrap();
        let (model, b) = bundle_for(&g);
        let l = complexify(&model.laplacian.0);
        assert!(nnz(&b.h, 1e-9) > nnz(&l, 1e-9));
        // Symmetrizable: Ω is real diagonal with non-negative entries.
        assert!(max_imag(&b.omega) < 1e-12);
        for i in 0..5 {
            for j in 0..5 {
                let z = b.omega[(i, j)];
                if i == j {
                    assert!(z.re >= -1e-12);
                } else {
                    assert!(z.norm() < 1e-10);
                }
            }
        }
    }
}
