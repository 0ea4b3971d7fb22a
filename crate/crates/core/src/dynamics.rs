//! Time evolution on networks: the second-order wave equation `ẍ = -L x`, the
//! first-order fundamental equations `±i ψ̇ = Ω ψ`, the interaction-picture
//! product form, oscillation energy and the divergence indicator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{graph_from_laplacian, LaplacianMatrix, WeightedDigraph};
use crate::linalg::{c, complexify, expm, sup_norm, CMatrix, CVector, I};
use crate::sqrt::ZERO_EIG_REL;
use crate::symmetry::{
    decompose_laplacian, find_violation, symmetric_form, symmetrize, LaplacianSplit, SpectralDecomposition,
    SymmetrizationWeights, SymmetryError,
};

/// State magnitude beyond which an integration is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;
/// Growth rates above this are reported as divergent.
pub const GROWTH_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid time grid: t_end = {t_end}, dt = {dt}")]
    InvalidGrid { t_end: f64, dt: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trajectories are on different time grids")]
    GridMismatch,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// Which of the two fundamental equations: `+i ψ̇ = Ωψ` or `-i ψ̇ = Ωψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub integrator: String,
    pub dt: f64,
    /// Time at which the state left `DIVERGENCE_BOUND`; the trajectory stops there.
    pub diverged_at: Option<f64>,
}

/// States on a uniform grid `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    /// First derivatives, for second-order integrations.
    pub velocities: Option<Vec<CVector>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn dt(&self) -> f64 {
        self.meta.dt
    }

    pub fn last(&self) -> &CVector {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn diverged(&self) -> bool {
        self.meta.diverged_at.is_some()
    }

    /// Largest `‖a(t) - b(t)‖_∞` over the common prefix of both grids.
    pub fn sup_gap(&self, other: &Trajectory) -> f64 {
        self.states.iter().zip(&other.states).map(|(a, b)| sup_norm(&(a - b))).fold(0.0, f64::max)
    }

    pub fn map_states(&self, f: impl Fn(&CVector) -> CVector, integrator: &str) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(f).collect(),
            velocities: None,
            meta: TrajectoryMeta { integrator: integrator.into(), ..self.meta.clone() },
        }
    }
}

pub fn grid_steps(t_end: f64, dt: f64) -> Result<usize, DynamicsError> {
    if !(dt.is_finite() && t_end.is_finite() && dt > 0.0 && t_end >= 0.0) {
        return Err(DynamicsError::InvalidGrid { t_end, dt });
    }
    let steps = (t_end / dt).round();
    if steps > 1e8 {
        return Err(DynamicsError::InvalidGrid { t_end, dt });
    }
    Ok(steps as usize)
}

fn finite(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Classical RK4 on `(x, ẋ)` for `ẍ = -L x`.
pub fn integrate_wave(
    l: &DMatrix<f64>,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError> {
    let n = l.nrows();
    for len in [x0.len(), v0.len(), l.ncols()] {
        if len != n {
            return Err(DynamicsError::DimensionMismatch { expected: n, got: len });
        }
    }
    let steps = grid_steps(t_end, dt)?;
    let mut x = x0.clone();
    let mut v = v0.clone();
    let mut times = vec![0.0];
    let mut states = vec![complexify_v(&x)];
    let mut vels = vec![complexify_v(&v)];
    let mut diverged_at = None;
    let accel = |x: &DVector<f64>| -(l * x);
    for k in 1..=steps {
        let k1x = v.clone();
        let k1v = accel(&x);
        let k2x = &v + &k1v * (dt / 2.0);
        let k2v = accel(&(&x + &k1x * (dt / 2.0)));
        let k3x = &v + &k2v * (dt / 2.0);
        let k3v = accel(&(&x + &k2x * (dt / 2.0)));
        let k4x = &v + &k3v * dt;
        let k4v = accel(&(&x + &k3x * dt));
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        let t = k as f64 * dt;
        if x.iter().chain(v.iter()).any(|z| !z.is_finite()) {
            return Err(DynamicsError::NonFinite { t });
        }
        times.push(t);
        states.push(complexify_v(&x));
        vels.push(complexify_v(&v));
        if x.amax() > DIVERGENCE_BOUND {
            diverged_at = Some(t);
            break;
        }
    }
    Ok(Trajectory {
        times,
        states,
        velocities: Some(vels),
        meta: TrajectoryMeta { integrator: "rk4".into(), dt, diverged_at },
    })
}

fn complexify_v(v: &DVector<f64>) -> CVector {
    v.map(c)
}

/// `E(t) = ½ (ẋᵀ M ẋ + xᵀ M L x)` along a wave trajectory. Conserved when `L`
/// is symmetrized by `m`.
pub fn wave_energy(traj: &Trajectory, l: &DMatrix<f64>, m: &SymmetrizationWeights) -> Vec<f64> {
    let vels = traj.velocities.as_ref().expect("wave trajectories carry velocities");
    let ml = DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| m.0[i] * l[(i, j)]);
    traj.states
        .iter()
        .zip(vels)
        .map(|(x, v)| {
            let xr = x.map(|z| z.re);
            let vr = v.map(|z| z.re);
            let kinetic: f64 = vr.iter().zip(m.0.iter()).map(|(a, w)| w * a * a).sum();
            0.5 * (kinetic + xr.dot(&(&ml * &xr)))
        })
        .collect()
}

/// `max_k |E_k - E_0| / E_0` (absolute when `E_0 = 0`).
pub fn relative_drift(energy: &[f64]) -> f64 {
    let e0 = energy.first().copied().unwrap_or(0.0);
    let worst = energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    if e0.abs() > 0.0 {
        worst / e0.abs()
    } else {
        worst
    }
}

/// Steps `ψ_{k+1} = exp(G dt) ψ_k` with the propagator from scaling and squaring.
pub fn evolve_linear(
    generator: &CMatrix,
    psi0: &CVector,
    t_end: f64,
    dt: f64,
    integrator: &str,
) -> Result<Trajectory, DynamicsError> {
    let n = generator.nrows();
    if psi0.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: psi0.len() });
    }
    let steps = grid_steps(t_end, dt)?;
    let prop = expm(&(generator * c(dt)))
        .ok_or_else(|| DynamicsError::NumericalFailure("matrix exponential overflow".into()))?;
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    let mut diverged_at = None;
    let mut psi = psi0.clone();
    for k in 1..=steps {
        psi = &prop * psi;
        let t = k as f64 * dt;
        if !finite(&psi) {
            diverged_at = Some(t);
            break;
        }
        times.push(t);
        states.push(psi.clone());
        if sup_norm(&psi) > DIVERGENCE_BOUND {
            diverged_at = Some(t);
            break;
        }
    }
    Ok(Trajectory {
        times,
        states,
        velocities: None,
        meta: TrajectoryMeta { integrator: integrator.into(), dt, diverged_at },
    })
}

/// Solves `±i ψ̇ = Ω ψ`, i.e. `ψ(t) = exp(∓iΩt) ψ(0)`.
pub fn integrate_fundamental(
    omega: &CMatrix,
    psi0: &CVector,
    sign: Sign,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError> {
    let generator = omega * (I * -sign.value());
    evolve_linear(&generator, psi0, t_end, dt, "expm")
}

/// `max_k ‖(ψ_{k+1} - 2ψ_k + ψ_{k-1})/dt² + Λψ_k‖ / max(1, ‖Λψ_k‖)` over
/// interior grid points.
pub fn second_order_residual(traj: &Trajectory, lambda: &CMatrix) -> f64 {
    let dt2 = traj.dt() * traj.dt();
    traj.states
        .windows(3)
        .map(|w| {
            let lp = lambda * &w[1];
            let acc = (&w[2] - &w[1] * c(2.0) + &w[0]) / c(dt2);
            (acc + &lp).norm() / lp.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// `max_k ‖±i (ψ_{k+1} - ψ_{k-1})/(2dt) - Ωψ_k‖ / max(1, ‖Ωψ_k‖)`.
pub fn first_order_residual(traj: &Trajectory, omega: &CMatrix, sign: Sign) -> f64 {
    let factor = I * sign.value() / (2.0 * traj.dt());
    traj.states
        .windows(3)
        .map(|w| {
            let op = omega * &w[1];
            ((&w[2] - &w[0]) * factor - &op).norm() / op.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Pointwise `c⁺ψ⁺(t) + c⁻ψ⁻(t)`.
pub fn superpose(
    plus: &Trajectory,
    minus: &Trajectory,
    c_plus: Complex64,
    c_minus: Complex64,
) -> Result<Trajectory, DynamicsError> {
    if plus.times != minus.times || plus.dt() != minus.dt() {
        return Err(DynamicsError::GridMismatch);
    }
    if plus.dim() != minus.dim() {
        return Err(DynamicsError::DimensionMismatch { expected: plus.dim(), got: minus.dim() });
    }
    let states = plus.states.iter().zip(&minus.states).map(|(a, b)| a * c_plus + b * c_minus).collect();
    Ok(Trajectory {
        times: plus.times.clone(),
        states,
        velocities: None,
        meta: TrajectoryMeta {
            integrator: "superposition".into(),
            dt: plus.dt(),
            diverged_at: plus.meta.diverged_at.or(minus.meta.diverged_at),
        },
    })
}

/// Diagonal of the free propagator `Ψ0^±(t) = diag(exp(∓i ω_μ t))`.
pub fn free_propagator(freqs: &CVector, sign: Sign, t: f64) -> CVector {
    freqs.map(|w| (I * w * (-sign.value() * t)).exp())
}

/// `max ‖Ψ0(-t)Ψ0(t) - I‖` and `max ‖Ψ0^±(-t) - Ψ0^∓(t)‖` over the given times.
pub fn free_propagator_identity_gap(freqs: &CVector, sign: Sign, times: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in times {
        let fwd = free_propagator(freqs, sign, t);
        let back = free_propagator(freqs, sign, -t);
        let other = free_propagator(freqs, sign.flip(), t);
        for k in 0..freqs.len() {
            worst = worst.max((back[k] * fwd[k] - c(1.0)).norm());
            worst = worst.max((back[k] - other[k]).norm());
        }
    }
    worst
}

/// Interaction-picture solution `ψ(t) = Ψ0(t) ψ_I(t)` with `Ψ0(0) = I`.
///
/// `ψ_I` follows `±i ψ̇_I = Ψ0(-t) Ω_I Ψ0(t) ψ_I`, integrated by RK4; the
/// returned pair is `(ψ, ψ_I)`.
pub fn product_form_solve(
    omega0: &CMatrix,
    omega_i: &CMatrix,
    psi_i0: &CVector,
    sign: Sign,
    t_end: f64,
    dt: f64,
) -> Result<(Trajectory, Trajectory), DynamicsError> {
    let n = omega0.nrows();
    for len in [omega0.ncols(), omega_i.nrows(), omega_i.ncols(), psi_i0.len()] {
        if len != n {
            return Err(DynamicsError::DimensionMismatch { expected: n, got: len });
        }
    }
    let off_diag = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .map(|(i, j)| omega0[(i, j)].norm())
        .fold(0.0, f64::max);
    if off_diag > 0.0 {
        return Err(DynamicsError::NumericalFailure("Ω0 must be diagonal".into()));
    }
    let steps = grid_steps(t_end, dt)?;
    let freqs = omega0.diagonal();
    let s = sign.value();
    let rhs = |t: f64, y: &CVector| -> CVector {
        let fwd = free_propagator(&freqs, sign, t);
        let back = free_propagator(&freqs, sign, -t);
        let w = y.component_mul(&fwd);
        let z = omega_i * w;
        z.component_mul(&back) * (I * -s)
    };
    let mut y = psi_i0.clone();
    let mut times = vec![0.0];
    let mut inter = vec![y.clone()];
    let mut full = vec![y.clone()];
    let mut diverged_at = None;
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = c(dt);
        let k1 = rhs(t, &y);
        let k2 = rhs(t + dt / 2.0, &(&y + &k1 * (h / 2.0)));
        let k3 = rhs(t + dt / 2.0, &(&y + &k2 * (h / 2.0)));
        let k4 = rhs(t + dt, &(&y + &k3 * h));
        y += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * (h / 6.0);
        let t1 = (k + 1) as f64 * dt;
        if !finite(&y) {
            return Err(DynamicsError::NonFinite { t: t1 });
        }
        times.push(t1);
        full.push(y.component_mul(&free_propagator(&freqs, sign, t1)));
        inter.push(y.clone());
        if sup_norm(&y) > DIVERGENCE_BOUND {
            diverged_at = Some(t1);
            break;
        }
    }
    let meta = TrajectoryMeta { integrator: "interaction-rk4".into(), dt, diverged_at };
    Ok((
        Trajectory { times: times.clone(), states: full, velocities: None, meta: meta.clone() },
        Trajectory { times, states: inter, velocities: None, meta },
    ))
}

/// Complex amplitude per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalAmplitudes(pub Vec<Complex64>);

impl ModalAmplitudes {
    /// Equal unit amplitude in every mode.
    pub fn unit(n: usize) -> Self {
        Self(vec![c(1.0); n])
    }

    pub fn single(n: usize, mode: usize, amp: Complex64) -> Self {
        let mut a = vec![c(0.0); n];
        a[mode] = amp;
        Self(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub total: f64,
    pub per_node: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_series: Option<Vec<f64>>,
}

impl EnergyReport {
    /// Index of the largest per-node energy (first on ties).
    pub fn argmax(&self) -> Option<usize> {
        self.per_node
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &e)| match best {
                Some((_, b)) if b >= e => best,
                _ => Some((i, e)),
            })
            .map(|(i, _)| i)
    }
}

/// Modal oscillation energy `½ Σ λ_μ |a_μ|²`, shared out to nodes by the
/// squared eigenvector components.
pub fn node_energy(
    split: &LaplacianSplit,
    sd: &SpectralDecomposition,
    amps: &ModalAmplitudes,
) -> Result<EnergyReport, DynamicsError> {
    if !split.one_way_is_zero() {
        return Err(SymmetryError::NotSymmetrizable.into());
    }
    let n = sd.dim();
    if amps.0.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: amps.0.len() });
    }
    let mut per_node = vec![0.0; n];
    let mut total = 0.0;
    for mu in 0..n {
        let weight = 0.5 * sd.eigenvalues[mu].max(0.0) * amps.0[mu].norm_sqr();
        total += weight;
        for (i, e) in per_node.iter_mut().enumerate() {
            let v = sd.basis[(i, mu)];
            *e += weight * v * v;
        }
    }
    Ok(EnergyReport { total, per_node, time_series: None })
}

/// Node energies under unit amplitude in every mode.
pub fn degree_centrality_energy(g: &WeightedDigraph, tol: f64) -> Result<EnergyReport, DynamicsError> {
    let split = decompose_laplacian(g, tol);
    if !split.one_way_is_zero() {
        return Err(SymmetryError::NotSymmetrizable.into());
    }
    let sd = symmetrize(&split.l0, &split.m)?;
    node_energy(&split, &sd, &ModalAmplitudes::unit(g.node_count()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlamingIndicator {
    pub growth_rate: f64,
    /// `[re, im]` of the eigenvalue of `L` whose root has the largest imaginary part.
    pub worst_eigenvalue: [f64; 2],
    pub verdict: Verdict,
}

/// Eigenvalues of `L`. Symmetrizable Laplacians go through the symmetric
/// form, so their spectrum comes back exactly real.
pub fn laplacian_eigenvalues(l: &DMatrix<f64>) -> Result<Vec<Complex64>, DynamicsError> {
    if l.is_empty() {
        return Ok(Vec::new());
    }
    if let Ok(g) = graph_from_laplacian(l, 0.0) {
        if let Ok(m) = find_violation(&g, crate::symmetry::DEFAULT_TOL) {
            let s0 = symmetric_form(&LaplacianMatrix(l.clone()), &m);
            let sym = (&s0 + s0.transpose()) * 0.5;
            return Ok(sym.symmetric_eigenvalues().iter().map(|&x| c(x)).collect());
        }
    }
    let ev = complexify(l)
        .try_schur(f64::EPSILON, 100 * l.nrows().max(10))
        .ok_or_else(|| DynamicsError::NumericalFailure("Schur iteration did not converge".into()))?
        .eigenvalues()
        .ok_or_else(|| DynamicsError::NumericalFailure("no eigenvalues from Schur form".into()))?;
    Ok(ev.iter().copied().collect())
}

/// `max |Im √λ|` over the eigenvalues of `L` (principal branch).
pub fn flaming_indicator(l: &DMatrix<f64>) -> Result<FlamingIndicator, DynamicsError> {
    let ev = laplacian_eigenvalues(l)?;
    let zero_tol = ZERO_EIG_REL * l.norm();
    let mut best: Option<(f64, Complex64)> = None;
    for lam in ev {
        let rate = if lam.norm() <= zero_tol { 0.0 } else { lam.sqrt().im.abs() };
        let better = match best {
            None => true,
            Some((r, b)) => rate > r || (rate == r && lam.norm() > b.norm()),
        };
        if better {
            best = Some((rate, lam));
        }
    }
    let (growth_rate, worst) = best.unwrap_or((0.0, c(0.0)));
    Ok(FlamingIndicator {
        growth_rate,
        worst_eigenvalue: [worst.re, worst.im],
        verdict: if growth_rate > GROWTH_THRESHOLD { Verdict::Divergent } else { Verdict::Stable },
    })
}

/// Least-squares slope of `log ‖x(t)‖` over grid points with `t ∈ [from, to]`.
pub fn log_norm_slope(traj: &Trajectory, from: f64, to: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= from && **t <= to)
        .map(|(t, s)| (*t, s.norm().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(cov / var)
}
