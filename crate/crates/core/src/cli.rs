//! `netosc` command line.
//!
//! Every subcommand reads one edge list (`verify` accepts several) and prints a
//! JSON report; trajectory commands print CSV instead with `--format csv`.
//! Errors go to standard error as a single JSON line and map to exit codes
//! 1 (usage), 2 (input), 3 (numerical) and 4 (model violation).

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::doubled::{
    hat_h_spectral, hat_h_squared_expansion, hat_h_structured, integrate_doubled, kron_laplacian,
    lift_initial_conditions, projection_identity_check, sparse_factors, sparsity_match, summed_trajectory,
    summed_wave_residual, DoubledVector,
};
use crate::dynamics::{
    first_order_residual, flaming_indicator, free_propagator_identity_gap, integrate_fundamental, integrate_wave,
    laplacian_eigenvalues, node_energy, product_form_solve, relative_drift, second_order_residual, wave_energy,
    ModalAmplitudes, Sign, Trajectory, DEFAULT_DT, DEFAULT_T_END,
};
use crate::graph::{build_matrices, load_edge_list, WeightedDigraph};
use crate::linalg::{complexify, rel_residual, CVector};
use crate::report::{complex_pair, matrix_rows, to_canonical_json, trajectory_csv};
use crate::sqrt::{matrix_pairs, nnz, sqrt_residual, OperatorBundle};
use crate::symmetry::{find_violation, to_modes, ModeModel, Violation, DEFAULT_TOL};
use crate::{exit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    #[value(name = "+", alias = "plus")]
    Plus,
    #[value(name = "-", alias = "minus")]
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorArg {
    Structured,
    Spectral,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Edge-list file (`src,dst[,weight]` per line).
    #[arg(long, short)]
    pub input: PathBuf,
    /// End of the time grid.
    #[arg(long, default_value_t = DEFAULT_T_END)]
    pub t_end: f64,
    /// Grid step.
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    /// Relative tolerance for detailed balance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// CSV applies to trajectory commands only.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct InitialState {
    /// Initial positions, comma separated (default: unit impulse on node 0).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Initial velocities, comma separated (default: zero).
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Graph statistics and the node label table.
    Info(Common),
    /// Symmetrizability check and weights.
    Check(Common),
    /// Split into symmetrizable and one-way Laplacians.
    Decompose(Common),
    /// Eigen-system of the symmetrized part and the spectrum of L.
    Spectrum(Common),
    /// Square-root operators and their residuals.
    Sqrt {
        #[command(flatten)]
        common: Common,
        /// Include every operator matrix as row-major [re, im] pairs.
        #[arg(long)]
        dump_operators: bool,
    },
    /// Integrate the wave equation with RK4.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: InitialState,
    },
    /// Integrate one fundamental equation in mode coordinates.
    Fundamental {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "+", allow_hyphen_values = true)]
        sign: SignArg,
        /// Initial node state mapped to modes (default: unit impulse on node 0).
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
    },
    /// Interaction-picture product-form solution.
    ProductForm {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "+", allow_hyphen_values = true)]
        sign: SignArg,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
    },
    /// Doubled-space equation with lifted initial conditions.
    Doubled {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: InitialState,
        #[arg(long, value_enum, default_value_t = OperatorArg::Structured)]
        operator: OperatorArg,
    },
    /// Per-node oscillation energy.
    Centrality {
        #[command(flatten)]
        common: Common,
        /// Modal amplitudes, comma separated (default: all 1).
        #[arg(long, allow_hyphen_values = true)]
        amplitudes: Option<String>,
    },
    /// Divergence indicator from the spectrum of L.
    Flaming(Common),
    /// Identity checks on one or more graphs.
    Verify {
        /// Edge-list files; each is checked independently.
        #[arg(long, short, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_T_END)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Parser)]
#[command(name = "netosc", version, about = "Oscillation dynamics on directed networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Validated run parameters shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub command: String,
    pub t_end: f64,
    pub dt: f64,
    pub tol: f64,
    pub format: Format,
    pub seed: u64,
}

impl RunConfig {
    fn new(command: &str, input: PathBuf, t_end: f64, dt: f64, tol: f64, format: Format, seed: u64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Usage(format!("--dt must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::Usage(format!("--t-end must be non-negative, got {t_end}")));
        }
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::Usage(format!("--tol must be non-negative, got {tol}")));
        }
        Ok(Self { input, command: command.into(), t_end, dt, tol, format, seed })
    }

    fn from_common(command: &str, c: &Common) -> Result<Self> {
        Self::new(command, c.input.clone(), c.t_end, c.dt, c.tol, c.format, c.seed)
    }

    /// As [`RunConfig::from_common`] for commands without a trajectory.
    fn report_only(command: &str, c: &Common) -> Result<Self> {
        if c.format == Format::Csv {
            return Err(Error::Usage(format!("{command} has no CSV output")));
        }
        Self::from_common(command, c)
    }
}

/// Parses and runs; prints to stdout/stderr and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return exit::OK;
            }
            let msg = e.to_string();
            let summary = msg
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .collect::<Vec<_>>()
                .join(" ");
            eprintln!("{}", error_line("usage", exit::USAGE, &summary));
            return exit::USAGE;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            exit::OK
        }
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), e.exit_code(), &e.to_string()));
            e.exit_code()
        }
    }
}

fn error_line(kind: &str, code: i32, message: &str) -> String {
    json!({ "error": kind, "code": code, "message": message }).to_string()
}

fn parse_vector(text: &str, n: usize, what: &str) -> Result<DVector<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Usage(format!("{what}: expected comma-separated numbers")))?;
    if vals.len() != n {
        return Err(Error::Usage(format!("{what}: expected {n} values, got {}", vals.len())));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage(format!("{what}: values must be finite")));
    }
    Ok(DVector::from_vec(vals))
}

fn impulse(n: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    if n > 0 {
        v[0] = 1.0;
    }
    v
}

fn initial(init: &InitialState, n: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    let x0 = match &init.x0 {
        Some(s) => parse_vector(s, n, "--x0")?,
        None => impulse(n),
    };
    let v0 = match &init.v0 {
        Some(s) => parse_vector(s, n, "--v0")?,
        None => DVector::zeros(n),
    };
    Ok((x0, v0))
}

fn load(cfg: &RunConfig) -> Result<WeightedDigraph> {
    Ok(load_edge_list(&cfg.input)?)
}

fn states_json(s: &CVector) -> Vec<[f64; 2]> {
    s.iter().map(|z| complex_pair(*z)).collect()
}

fn violation_json(g: &WeightedDigraph, v: &Violation) -> serde_json::Value {
    match v {
        Violation::OneWayEdge { src, dst } => json!({
            "kind": "one_way_edge", "src": g.label(*src), "dst": g.label(*dst)
        }),
        Violation::CycleInconsistent { src, dst, residual } => json!({
            "kind": "cycle_inconsistent", "src": g.label(*src), "dst": g.label(*dst), "residual": residual
        }),
    }
}

fn trajectory_summary(tr: &Trajectory) -> serde_json::Value {
    json!({
        "steps": tr.len().saturating_sub(1),
        "dt": tr.meta.dt,
        "t_final": tr.times.last().copied().unwrap_or(0.0),
        "integrator": tr.meta.integrator,
        "diverged_at": tr.meta.diverged_at,
        "final_state": states_json(tr.last()),
    })
}

/// Runs a parsed command and returns what would go to stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Info(c) => cmd_info(&RunConfig::report_only("info", c)?),
        Command::Check(c) => cmd_check(&RunConfig::report_only("check", c)?, false),
        Command::Decompose(c) => cmd_check(&RunConfig::report_only("decompose", c)?, true),
        Command::Spectrum(c) => cmd_spectrum(&RunConfig::report_only("spectrum", c)?),
        Command::Sqrt { common, dump_operators } => cmd_sqrt(&RunConfig::report_only("sqrt", common)?, *dump_operators),
        Command::Simulate { common, init } => cmd_simulate(&RunConfig::from_common("simulate", common)?, init),
        Command::Fundamental { common, sign, x0 } => {
            cmd_fundamental(&RunConfig::from_common("fundamental", common)?, (*sign).into(), x0.as_deref())
        }
        Command::ProductForm { common, sign, x0 } => {
            cmd_product_form(&RunConfig::from_common("product-form", common)?, (*sign).into(), x0.as_deref())
        }
        Command::Doubled { common, init, operator } => {
            cmd_doubled(&RunConfig::from_common("doubled", common)?, init, *operator)
        }
        Command::Centrality { common, amplitudes } => {
            cmd_centrality(&RunConfig::report_only("centrality", common)?, amplitudes.as_deref())
        }
        Command::Flaming(c) => cmd_flaming(&RunConfig::report_only("flaming", c)?),
        Command::Verify { input, t_end, dt, tol, seed } => {
            let cfgs = input
                .iter()
                .map(|p| RunConfig::new("verify", p.clone(), *t_end, *dt, *tol, Format::Json, *seed))
                .collect::<Result<Vec<_>>>()?;
            cmd_verify(&cfgs)
        }
    }
}

fn cmd_info(cfg: &RunConfig) -> Result<String> {
    let g = load(cfg)?;
    let deg = g.out_degrees();
    let sinks: Vec<&str> =
        deg.iter().enumerate().filter(|(_, &d)| d == 0.0).map(|(i, _)| g.labels()[i].as_str()).collect();
    let (_, _, l) = build_matrices(&g);
    Ok(to_canonical_json(&json!({
        "n": g.node_count(),
        "edge_count": g.edges().len(),
        "labels": g.labels(),
        "graph": g.to_json(),
        "out_degrees": deg,
        "sinks": sinks,
        "weak_components": g.weak_components().len(),
        "laplacian_max_row_sum": l.max_row_sum(),
    })))
}

fn cmd_check(cfg: &RunConfig, with_split: bool) -> Result<String> {
    let g = load(cfg)?;
    let (weights, violations) = match find_violation(&g, cfg.tol) {
        Ok(m) => (Some(m.as_slice().to_vec()), vec![]),
        Err(v) => (None, vec![violation_json(&g, &v)]),
    };
    let mut out = json!({
        "symmetrizable": weights.is_some(),
        "m": weights,
        "violations": violations,
        "labels": g.labels(),
    });
    if with_split {
        let split = crate::symmetry::decompose_laplacian(&g, cfg.tol);
        out["m"] = json!(split.m.as_slice());
        out["split"] = json!({ "L0": matrix_rows(&split.l0.0), "LI": matrix_rows(&split.li.0) });
    }
    Ok(to_canonical_json(&out))
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<String> {
    let g = load(cfg)?;
    let model = ModeModel::from_graph(&g, cfg.tol)?;
    let ev = laplacian_eigenvalues(&model.laplacian.0)?;
    Ok(to_canonical_json(&json!({
        "labels": g.labels(),
        "symmetrizable": model.split.symmetrizable,
        "m": model.split.m.as_slice(),
        "eigenvalues": model.spectral.eigenvalues.as_slice(),
        "basis": matrix_rows(&model.spectral.basis),
        "s0": matrix_rows(&model.spectral.s0),
        "lambda_i": matrix_rows(&model.lambda_i),
        "laplacian_eigenvalues": ev.iter().map(|z| complex_pair(*z)).collect::<Vec<_>>(),
    })))
}

fn cmd_sqrt(cfg: &RunConfig, dump: bool) -> Result<String> {
    let g = load(cfg)?;
    let model = ModeModel::from_graph(&g, cfg.tol)?;
    let b = OperatorBundle::from_model(&model)?;
    let l = &model.laplacian.0;
    let mut out = json!({
        "labels": g.labels(),
        "sqrt_residual": sqrt_residual(&b),
        "h_residual": b.h_residual(l),
        "omega_max_imag": b.omega_imag(),
        "h_i_square_gap": b.h_i_square_gap,
        "nnz_h": nnz(&b.h, 1e-9),
        "nnz_l": nnz(&complexify(l), 1e-9),
        "provenance": b.provenance,
    });
    if dump {
        out["operators"] = json!({
            "Lambda": matrix_pairs(&b.lambda),
            "Omega": matrix_pairs(&b.omega),
            "Omega0": matrix_pairs(&b.omega0),
            "OmegaI": matrix_pairs(&b.omega_i),
            "H": matrix_pairs(&b.h),
            "H0": matrix_pairs(&b.h0),
            "HI": matrix_pairs(&b.h_i),
        });
    }
    Ok(to_canonical_json(&out))
}

fn cmd_simulate(cfg: &RunConfig, init: &InitialState) -> Result<String> {
    let g = load(cfg)?;
    let (x0, v0) = initial(init, g.node_count())?;
    let (_, _, l) = build_matrices(&g);
    let tr = integrate_wave(&l.0, &x0, &v0, cfg.t_end, cfg.dt)?;
    if cfg.format == Format::Csv {
        return Ok(trajectory_csv(&tr));
    }
    let mut out = json!({ "labels": g.labels(), "trajectory": trajectory_summary(&tr) });
    if let Ok(m) = find_violation(&g, cfg.tol) {
        out["energy_drift"] =
            json!(relative_drift(&wave_energy(&tr, &l.0, &crate::symmetry::SymmetrizationWeights(m.0))));
    }
    Ok(to_canonical_json(&out))
}

fn mode_initial(model: &ModeModel, x0: Option<&str>) -> Result<CVector> {
    let n = model.spectral.dim();
    let x = match x0 {
        Some(s) => parse_vector(s, n, "--x0")?,
        None => impulse(n),
    };
    Ok(to_modes(&x.map(|v| Complex64::new(v, 0.0)), &model.spectral, &model.split.m)?)
}

fn cmd_fundamental(cfg: &RunConfig, sign: Sign, x0: Option<&str>) -> Result<String> {
    let g = load(cfg)?;
    let model = ModeModel::from_graph(&g, cfg.tol)?;
    let b = OperatorBundle::from_model(&model)?;
    let psi0 = mode_initial(&model, x0)?;
    let tr = integrate_fundamental(&b.omega, &psi0, sign, cfg.t_end, cfg.dt)?;
    if cfg.format == Format::Csv {
        return Ok(trajectory_csv(&tr));
    }
    Ok(to_canonical_json(&json!({
        "labels": g.labels(),
        "sign": sign,
        "psi0": states_json(&psi0),
        "trajectory": trajectory_summary(&tr),
        "second_order_residual": second_order_residual(&tr, &b.lambda),
        "first_order_residual": first_order_residual(&tr, &b.omega, sign),
    })))
}

fn cmd_product_form(cfg: &RunConfig, sign: Sign, x0: Option<&str>) -> Result<String> {
    let g = load(cfg)?;
    let model = ModeModel::from_graph(&g, cfg.tol)?;
    let b = OperatorBundle::from_model(&model)?;
    let psi0 = mode_initial(&model, x0)?;
    let (psi, _inter) = product_form_solve(&b.omega0, &b.omega_i, &psi0, sign, cfg.t_end, cfg.dt)?;
    if cfg.format == Format::Csv {
        return Ok(trajectory_csv(&psi));
    }
    let direct = integrate_fundamental(&b.omega, &psi0, sign, cfg.t_end, cfg.dt)?;
    Ok(to_canonical_json(&json!({
        "labels": g.labels(),
        "sign": sign,
        "trajectory": trajectory_summary(&psi),
        "sup_gap_vs_exponential": psi.sup_gap(&direct),
        "free_propagator_gap": free_propagator_identity_gap(&b.omega0.diagonal(), sign, &psi.times),
    })))
}

fn cmd_doubled(cfg: &RunConfig, init: &InitialState, which: OperatorArg) -> Result<String> {
    let g = load(cfg)?;
    let (x0, v0) = initial(init, g.node_count())?;
    let (a, _, l) = build_matrices(&g);
    let f = sparse_factors(&g)?;
    let op = match which {
        OperatorArg::Structured => hat_h_structured(&f),
        OperatorArg::Spectral => {
            let model = ModeModel::from_graph(&g, cfg.tol)?;
            hat_h_spectral(&OperatorBundle::from_model(&model)?.h)
        }
    };
    let lifted = lift_initial_conditions(&f, &x0, &v0)?;
    let tr = integrate_doubled(&op, &lifted, cfg.t_end, cfg.dt)?;
    let summed = summed_trajectory(&tr);
    if cfg.format == Format::Csv {
        return Ok(trajectory_csv(&summed));
    }
    let wave = integrate_wave(&l.0, &x0, &v0, cfg.t_end, cfg.dt)?;
    Ok(to_canonical_json(&json!({
        "labels": g.labels(),
        "operator": op.kind,
        "sparsity_match": sparsity_match(&op, &a.0),
        "lifted_initial": states_json(&lifted.0),
        "summed": trajectory_summary(&summed),
        "wave_residual": summed_wave_residual(&summed, &l.0),
        "recovery_gap": summed.sup_gap(&wave),
    })))
}

fn cmd_centrality(cfg: &RunConfig, amps: Option<&str>) -> Result<String> {
    let g = load(cfg)?;
    let model = ModeModel::from_graph(&g, cfg.tol)?;
    let n = g.node_count();
    let amps = match amps {
        Some(s) => {
            ModalAmplitudes(parse_vector(s, n, "--amplitudes")?.iter().map(|&a| Complex64::new(a, 0.0)).collect())
        }
        None => ModalAmplitudes::unit(n),
    };
    let rep = node_energy(&model.split, &model.spectral, &amps)?;
    Ok(to_canonical_json(&json!({
        "labels": g.labels(),
        "total": rep.total,
        "per_node": rep.per_node,
        "argmax": rep.argmax().map(|i| g.labels()[i].clone()),
    })))
}

fn cmd_flaming(cfg: &RunConfig) -> Result<String> {
    let g = load(cfg)?;
    let (_, _, l) = build_matrices(&g);
    let f = flaming_indicator(&l.0)?;
    Ok(to_canonical_json(&f))
}

/// Per-graph identity checks behind `verify`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub input: String,
    pub n: usize,
    pub sparsity_match: bool,
    /// `Ĥ²` against its block expansion.
    #[serde(rename = "eq19_residual")]
    pub expansion_residual: f64,
    /// Wave-equation residual of the summed doubled trajectory from a random start.
    #[serde(rename = "eq22_residual")]
    pub summed_wave_residual: f64,
    /// Worst projection-identity residual over 100 random doubled vectors.
    #[serde(rename = "eq26_residual")]
    pub projection_residual: f64,
    /// Sup-norm gap between the lifted doubled solution and the wave solution.
    #[serde(rename = "theorem1_gap")]
    pub recovery_gap: f64,
    pub sqrt_residual: f64,
    pub h_residual: f64,
    pub spectral_hat_residual: f64,
    pub structured_square_gap: f64,
    pub regular: bool,
    pub growth_rate: f64,
}

fn random_complex(rng: &mut StdRng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn conformance(g: &WeightedDigraph, cfg: &RunConfig, seed: u64) -> Result<ConformanceReport> {
    let n = g.node_count();
    let mut rng = StdRng::seed_from_u64(seed);
    let (a, d, l) = build_matrices(g);
    let model = ModeModel::from_graph(g, cfg.tol)?;
    let bundle = OperatorBundle::from_model(&model)?;
    let f = sparse_factors(g)?;
    let op = hat_h_structured(&f);
    let sq = op.squared();
    let lhat = kron_laplacian(&l.0);

    let expansion_residual = rel_residual(&hat_h_squared_expansion(&f).combined(), &sq);

    let x0 = DoubledVector(random_complex(&mut rng, 2 * n));
    let tr = integrate_doubled(&op, &x0, cfg.t_end, cfg.dt)?;
    let summed_residual = summed_wave_residual(&summed_trajectory(&tr), &l.0);

    let mut projection_residual: f64 = 0.0;
    for _ in 0..100 {
        let xh = DoubledVector(random_complex(&mut rng, 2 * n));
        projection_residual = projection_residual.max(projection_identity_check(&f, &xh)?);
    }

    let xs = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let vs = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let lifted = lift_initial_conditions(&f, &xs, &vs)?;
    let doubled = summed_trajectory(&integrate_doubled(&op, &lifted, cfg.t_end, cfg.dt)?);
    let wave = integrate_wave(&l.0, &xs, &vs, cfg.t_end, cfg.dt)?;
    let recovery_gap = doubled.sup_gap(&wave);

    let first = d.0.get(0).copied().unwrap_or(0.0);
    Ok(ConformanceReport {
        input: cfg.input.display().to_string(),
        n,
        sparsity_match: sparsity_match(&op, &a.0),
        expansion_residual,
        summed_wave_residual: summed_residual,
        projection_residual,
        recovery_gap,
        sqrt_residual: sqrt_residual(&bundle),
        h_residual: bundle.h_residual(&l.0),
        spectral_hat_residual: rel_residual(&hat_h_spectral(&bundle.h).squared(), &lhat),
        structured_square_gap: (&sq - &lhat).norm(),
        regular: d.0.iter().all(|&x| x == first),
        growth_rate: flaming_indicator(&l.0)?.growth_rate,
    })
}

fn thread_pool() -> Option<rayon::ThreadPool> {
    let cap = std::env::var("NETOSC_THREADS").ok()?.parse::<usize>().ok()?;
    rayon::ThreadPoolBuilder::new().num_threads(cap.max(1)).build().ok()
}

fn cmd_verify(cfgs: &[RunConfig]) -> Result<String> {
    let work = || -> Vec<Result<ConformanceReport>> {
        cfgs.par_iter()
            .enumerate()
            .map(|(k, cfg)| {
                let g = load(cfg)?;
                conformance(&g, cfg, cfg.seed.wrapping_add(k as u64))
            })
            .collect()
    };
    let results = match thread_pool() {
        Some(pool) => pool.install(work),
        None => work(),
    };
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    if reports.len() == 1 {
        Ok(to_canonical_json(&reports[0]))
    } else {
        Ok(to_canonical_json(&reports))
    }
}
