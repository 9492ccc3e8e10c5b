//! Multiplier recovery from `(ProblemDef, Trajectory)` alone.
//!
//! The discretized conditions become the convex program
//! `min ‖M z‖²` over `z ≥ 0`, `wᵀz = 1` (see [`RecoveryProgram`]). Products
//! `ŝ·dη` are removed by weighting jump-direction generators, and `p` is
//! linear in `z` through a backward trapezoidal recursion. The program is
//! solved by projected gradient from several random seeds followed by an
//! active-set NNLS polish; every recovered certificate is then handed to the
//! independent checker in [`crate::lmp`].

mod program;
mod solver;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry;
use crate::lmp::{self, JumpVector, LmpError, MultiplierSet, Report, Support, Tolerances};
use crate::measures::{BVFunction, SignedMeasure};
use crate::par;
use crate::problem::{ProblemDef, ProblemError, Trajectory};

pub use program::{build_program, ProgramDims, RecoveryProgram, Unknown};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Lmp(#[from] LmpError),
    #[error("grid too coarse: D unresolvable")]
    GridTooCoarse,
    #[error("empty jump-direction set inside D on cell {cell} (tolerance mismatch)")]
    EmptyGenerators { cell: usize },
    #[error("singular adjoint step on cell {cell}")]
    Singular { cell: usize },
    #[error("certificate does not fit the program: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOptions {
    pub delta: f64,
    pub eps: f64,
    /// `λ_k` is fixed to 0 where `G < −δ_slack`; default `1e-6·max(1, max|G|)`.
    pub delta_slack: Option<f64>,
    pub seeds: usize,
    pub max_iter: usize,
    pub seed_base: u64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { delta: 1e-8, eps: 1e-8, delta_slack: None, seeds: 3, max_iter: 300, seed_base: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// Normalized: `ν = 1`.
    pub certificate: MultiplierSet,
    /// `‖M z‖²` at the returned point.
    pub objective: f64,
    /// `max_j |min(z_j, ∇_j − μ w_j)|`.
    pub kkt: f64,
    /// Index of the winning seed; `None` for a kept warm start.
    pub seed: Option<usize>,
    pub dims: ProgramDims,
    pub z: Vec<f64>,
    /// False when a warm start was returned unchanged.
    pub moved: bool,
}

const KKT_TOL: f64 = 1e-9;

/// KKT residual of `min ‖Mz‖²` on the weighted simplex at a feasible `z`.
pub fn kkt_residual(program: &RecoveryProgram, z: &[f64]) -> f64 {
    let zv = DVector::from_column_slice(z);
    let mz = &program.matrix * &zv;
    let q = program.matrix.tr_mul(&mz) * 2.0;
    let mu = 2.0 * mz.norm_squared() / program.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>();
    z.iter()
        .zip(q.iter())
        .zip(&program.weights)
        .map(|((zj, qj), wj)| zj.min(qj - mu * wj).abs())
        .fold(0.0, f64::max)
}

fn polish(program: &RecoveryProgram, z: &[f64]) -> Vec<f64> {
    let (rows, nz) = program.matrix.shape();
    let mut a = program.matrix.clone().resize_vertically(rows + 1, 0.0);
    for (j, w) in program.weights.iter().enumerate() {
        a[(rows, j)] = *w;
    }
    let mut b = DVector::zeros(rows + 1);
    b[rows] = 1.0;
    let s = 1.0 / (1.0 + program.objective(z));
    let start: Vec<f64> = z.iter().map(|v| s * v).collect();
    let mut out = solver::Nnls::new(&a, &b).solve(&start);
    debug_assert_eq!(out.len(), nz);
    let wz: f64 = out.iter().zip(&program.weights).map(|(v, w)| v * w).sum();
    if wz > 0.0 {
        out.iter_mut().for_each(|v| *v /= wz);
        out
    } else {
        z.to_vec()
    }
}

fn run_seed(program: &RecoveryProgram, opts: &RecoveryOptions, seed: usize) -> (Vec<f64>, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed_base.wrapping_add(seed as u64));
    let raw: Vec<f64> = (0..program.unknowns.len()).map(|_| rng.gen::<f64>()).collect();
    let z0 = solver::project_weighted_simplex(&raw, &program.weights);
    let z = solver::projected_gradient(&program.matrix, &program.weights, z0, opts.max_iter);
    let z = polish(program, &z);
    let obj = program.objective(&z);
    let kkt = kkt_residual(program, &z);
    log::debug!("seed {seed}: objective {obj:.3e}, kkt {kkt:.3e}");
    (z, obj, kkt)
}

/// Solves the program from `opts.seeds` random feasible starts and keeps the
/// best; ties go to the lowest seed index.
pub fn solve(program: &RecoveryProgram, opts: &RecoveryOptions) -> Result<RecoveryResult, RecoveryError> {
    let runs = par::map_indices(opts.seeds.max(1), |s| run_seed(program, opts, s));
    let (best, (z, objective, kkt)) = runs
        .into_iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.total_cmp(&b.1))
        .expect("at least one seed");
    finish(program, z, objective, kkt, Some(best), true)
}

/// Solves from a feasible warm start; a start that already meets the KKT
/// tolerance is returned unchanged.
pub fn solve_from(
    program: &RecoveryProgram,
    z0: &[f64],
    opts: &RecoveryOptions,
) -> Result<RecoveryResult, RecoveryError> {
    if z0.len() != program.unknowns.len() {
        return Err(RecoveryError::Encode(format!("start has {} entries for {} unknowns", z0.len(), program.unknowns.len())));
    }
    let kkt0 = kkt_residual(program, z0);
    if kkt0 <= KKT_TOL {
        return finish(program, z0.to_vec(), program.objective(z0), kkt0, None, false);
    }
    let z = solver::projected_gradient(&program.matrix, &program.weights, z0.to_vec(), opts.max_iter);
    let z = polish(program, &z);
    let (obj, kkt) = (program.objective(&z), kkt_residual(program, &z));
    finish(program, z, obj, kkt, None, true)
}

fn finish(
    program: &RecoveryProgram,
    z: Vec<f64>,
    objective: f64,
    kkt: f64,
    seed: Option<usize>,
    moved: bool,
) -> Result<RecoveryResult, RecoveryError> {
    if kkt > KKT_TOL {
        log::warn!("KKT residual {kkt:.3e} above {KKT_TOL:.0e}");
    }
    let certificate = decode(program, &z)?;
    Ok(RecoveryResult { certificate, objective, kkt, seed, dims: program.dims(), z, moved })
}

/// Assembles the certificate for a program point `z`.
pub fn decode(program: &RecoveryProgram, z: &[f64]) -> Result<MultiplierSet, RecoveryError> {
    let grid = program.grid.clone();
    let lambda: Vec<f64> = program.lambda_index.iter().map(|i| i.map_or(0.0, |i| z[i])).collect();
    let density: Vec<f64> = program.density_index.iter().map(|i| i.map_or(0.0, |i| z[i])).collect();
    let mut atoms = vec![0.0; grid.num_nodes()];
    let mut s = std::collections::BTreeMap::new();
    for (k, idx) in program.atom_index.iter().enumerate() {
        let c: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
        let a: f64 = c.iter().sum();
        if a > 0.0 {
            atoms[k] = a;
            s.insert(Support::Atom(k), JumpVector::Weights(c.iter().map(|v| v / a).collect()));
        }
    }
    for (k, e) in density.iter().enumerate() {
        if *e > 0.0 {
            s.insert(Support::Cell(k), JumpVector::Weights(vec![1.0]));
        }
    }
    let eta = SignedMeasure::nonnegative(grid.clone(), atoms, density).map_err(LmpError::from)?;
    let zv = DVector::from_column_slice(z);
    let node_values: Vec<Vec<f64>> = program.p_left.iter().map(|pl| pl.tr_mul(&zv).as_slice().to_vec()).collect();
    let jumps: Vec<Vec<f64>> = program
        .p_right
        .iter()
        .zip(&program.p_left)
        .map(|(pr, pl)| (pr - pl).tr_mul(&zv).as_slice().to_vec())
        .collect();
    let p = BVFunction::from_left_limits(grid, node_values, jumps).map_err(LmpError::from)?;
    Ok(MultiplierSet::new(z[0], lambda, eta, s, p)?)
}

/// Maps a certificate onto program unknowns, normalized to `wᵀz = 1`.
///
/// Explicit `ŝ` vectors are converted to generator weights by projecting
/// onto the generator hull.
pub fn encode(program: &RecoveryProgram, ms: &MultiplierSet) -> Result<Vec<f64>, RecoveryError> {
    let grid = &program.grid;
    if ms.grid() != grid {
        return Err(RecoveryError::Encode("certificate grid differs from the program grid".into()));
    }
    let mut z = vec![0.0; program.unknowns.len()];
    z[0] = ms.alpha0;
    for (k, l) in ms.lambda.iter().enumerate() {
        match program.lambda_index[k] {
            Some(i) => z[i] = *l,
            None if *l != 0.0 => return Err(RecoveryError::Encode(format!("lambda is nonzero on inactive cell {k}"))),
            None => {}
        }
    }
    for (k, a) in ms.eta.atoms().iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let gens = &program.node_generators[k];
        if gens.is_empty() {
            return Err(RecoveryError::Encode(format!("atom at node {k} outside D")));
        }
        let weights = match ms.s.get(&Support::Atom(k)) {
            Some(JumpVector::Weights(w)) if w.len() == gens.len() => w.clone(),
            Some(JumpVector::Vector(v)) => {
                geometry::dist_to_convex_hull(v, gens).map_err(|e| RecoveryError::Encode(e.to_string()))?.1
            }
            _ => return Err(RecoveryError::Encode(format!("no usable s at node {k}"))),
        };
        for (i, w) in program.atom_index[k].iter().zip(weights) {
            z[*i] = a * w;
        }
    }
    for (k, e) in ms.eta.density().iter().enumerate() {
        if *e == 0.0 {
            continue;
        }
        match program.density_index[k] {
            Some(i) => z[i] = *e,
            None => return Err(RecoveryError::Encode(format!("density on cell {k} outside D"))),
        }
    }
    let wz: f64 = z.iter().zip(&program.weights).map(|(v, w)| v * w).sum();
    if wz <= 0.0 || z.iter().any(|v| *v < 0.0) {
        return Err(RecoveryError::Encode("certificate is not a nonnegative nontrivial point".into()));
    }
    Ok(z.into_iter().map(|v| v / wz).collect())
}

/// Tolerances used to cross-check a recovered certificate.
pub fn validation_tolerances(program: &RecoveryProgram, opts: &RecoveryOptions) -> Tolerances {
    Tolerances { slackness: program.delta_slack.max(1e-7), ..Tolerances::default() }.with_phase(opts.delta, opts.eps)
}

/// Runs the independent checker on a recovered certificate.
pub fn cross_validate(p: &ProblemDef, tr: &Trajectory, ms: &MultiplierSet, tol: &Tolerances) -> Report {
    lmp::check_certificate(p, tr, ms, tol)
}

/// A solved program together with its independent check.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub result: RecoveryResult,
    pub report: Report,
}

impl Recovery {
    /// Accepted iff the checker passes.
    pub fn certified(&self) -> bool {
        self.report.passed()
    }
}

/// Build, solve, and cross-validate in one call.
pub fn recover(p: &ProblemDef, tr: &Trajectory, opts: &RecoveryOptions) -> Result<Recovery, RecoveryError> {
    let program = build_program(p, tr, opts)?;
    let result = solve(&program, opts)?;
    let tol = validation_tolerances(&program, opts);
    let report = cross_validate(p, tr, &result.certificate, &tol);
    Ok(Recovery { result, report })
}
