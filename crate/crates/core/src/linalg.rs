//! Dense complex matrix helpers shared by the operator modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(c)
}

pub fn complexify_vec(v: &DVector<f64>) -> CVector {
    v.map(c)
}

/// Largest imaginary part magnitude over all entries.
pub fn max_imag(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `‖a - b‖_F / max(1, ‖b‖_F)`.
pub fn rel_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub fn sup_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

// Padé coefficients b_0..b_m for degrees 3, 5, 7, 9, 13 and the matching
// 1-norm thresholds below which each degree reaches double precision.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539_398_330_063_23e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3..13 chosen from the 1-norm.
///
/// Returns `None` if the Padé denominator is singular or the result is not
/// finite.
pub fn expm(a: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Some(CMatrix::zeros(0, 0));
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return None;
    }
    let id = CMatrix::identity(n, n);
    let a2 = a * a;

    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            // Even powers A^0, A^2, A^4, ...
            let mut pow = vec![id.clone(), a2.clone()];
            while pow.len() <= m / 2 {
                let next = pow.last().unwrap() * &a2;
                pow.push(next);
            }
            let mut u = CMatrix::zeros(n, n);
            let mut v = CMatrix::zeros(n, n);
            for (k, p) in pow.iter().enumerate() {
                v += p * c(coeffs[2 * k]);
                u += p * c(coeffs[2 * k + 1]);
            }
            let u = a * u;
            return pade_solve(&u, &v);
        }
    }

    let s = if norm > THETA13 { (norm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let scaled = a * c(2f64.powi(-s));
    let b = &PADE13;
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]));
    let u = &scaled * (inner_u + &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + &id * c(b[1]));
    let inner_v = &a6 * (&a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]));
    let v = inner_v + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + &id * c(b[0]);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(r)
    } else {
        None
    }
}

fn pade_solve(u: &CMatrix, v: &CMatrix) -> Option<CMatrix> {
    let p = v + u;
    let q = v - u;
    let r = q.lu().solve(&p)?;
    r.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Plain Taylor series with many terms, evaluated after enough halvings
    // that the series converges quickly; independent of the Padé path.
    fn taylor_expm(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let s = 8;
        let scaled = a * c(2f64.powi(-s));
        let mut term = CMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &scaled * c(1.0 / k as f64);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn sample(n: usize, scale: f64, seed: u64) -> CMatrix {
        let mut state = seed;
        CMatrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let re = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let im = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            Complex64::new(re, im) * scale
        })
    }

    #[test]
    fn expm_matches_taylor_oracle_across_degrees() {
        for (k, scale) in [1e-3, 0.05, 0.3, 0.8, 2.0, 10.0].into_iter().enumerate() {
            let a = sample(5, scale, 7 + k as u64);
            let got = expm(&a).unwrap();
            let want = taylor_expm(&a);
            let err = (&got - &want).norm() / want.norm();
            assert!(err < 1e-12, "scale {scale}: {err}");
        }
    }

    #[test]
    fn expm_diagonal_and_rotation() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), I * -(2f64.sqrt())]));
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert!((e[(1, 1)] - (I * -(2f64.sqrt())).exp()).norm() < 1e-15);
        // exp of [[0,-t],[t,0]] is a rotation by t
        let t = 1.3;
        let r = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-t), c(t), c(0.0)]);
        let e = expm(&r).unwrap();
        assert!((e[(0, 0)] - c(t.cos())).norm() < 1e-14);
        assert!((e[(1, 0)] - c(t.sin())).norm() < 1e-14);
    }

    #[test]
    fn kron_index_formula() {
        let a = sample(3, 1.0, 1);
        let b = sample(2, 1.0, 2);
        let k = kron(&a, &b);
        for i in 0..3 {
            for j in 0..3 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(2 * i + p, 2 * j + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }
}
