use nalgebra::{DMatrix, DVector};

use crate::geometry::{self, ContactSet};
use crate::lmp::{CellSamples, SideSample};
use crate::problem::{ProblemDef, ProblemError, TimeGrid, Trajectory};

use super::{RecoveryError, RecoveryOptions};

/// One nonnegative unknown of the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Alpha0,
    Lambda { cell: usize },
    /// Weight of generator `generator` in the atom of `dη` at `node`.
    Atom { node: usize, generator: usize },
    /// Density of `dη` on `cell`, with `ŝ = G_x` along the cell.
    Density { cell: usize },
}

/// Sizes of an assembled program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ProgramDims {
    pub unknowns: usize,
    /// Objective rows, excluding the normalization.
    pub rows: usize,
    pub lambda_cells: usize,
    pub atom_unknowns: usize,
    pub density_unknowns: usize,
    pub contact_nodes: usize,
}

/// `min ‖M z‖²` subject to `z ≥ 0`, `wᵀz = 1`.
///
/// `z` collects `α0`, the active `λ_k`, and generator weights for `dη`; `p`
/// is affine (here linear) in `z` through the backward trapezoidal recursion
/// from `p(t1+) = α0 J_x1`.
#[derive(Debug, Clone)]
pub struct RecoveryProgram {
    pub(crate) grid: TimeGrid,
    pub(crate) unknowns: Vec<Unknown>,
    pub(crate) weights: Vec<f64>,
    pub(crate) matrix: DMatrix<f64>,
    /// `p(τ_k−)` as `unknowns × n` coefficient matrices.
    pub(crate) p_left: Vec<DMatrix<f64>>,
    /// `p(τ_k+)`.
    pub(crate) p_right: Vec<DMatrix<f64>>,
    pub(crate) contact: ContactSet,
    pub(crate) node_generators: Vec<Vec<Vec<f64>>>,
    pub(crate) lambda_index: Vec<Option<usize>>,
    pub(crate) density_index: Vec<Option<usize>>,
    pub(crate) atom_index: Vec<Vec<usize>>,
    pub(crate) delta_slack: f64,
}

impl RecoveryProgram {
    pub fn dims(&self) -> ProgramDims {
        let count = |f: fn(&Unknown) -> bool| self.unknowns.iter().filter(|u| f(u)).count();
        ProgramDims {
            unknowns: self.unknowns.len(),
            rows: self.matrix.nrows(),
            lambda_cells: count(|u| matches!(u, Unknown::Lambda { .. })),
            atom_unknowns: count(|u| matches!(u, Unknown::Atom { .. })),
            density_unknowns: count(|u| matches!(u, Unknown::Density { .. })),
            contact_nodes: self.contact.num_nodes(),
        }
    }

    pub fn unknowns(&self) -> &[Unknown] {
        &self.unknowns
    }

    pub fn contact_set(&self) -> &ContactSet {
        &self.contact
    }

    /// Normalization weights: `wᵀz = α0 + ‖λ‖₁ + ∫dη`.
    pub fn normalization(&self) -> &[f64] {
        &self.weights
    }

    pub fn delta_slack(&self) -> f64 {
        self.delta_slack
    }

    /// `‖M z‖²`.
    pub fn objective(&self, z: &[f64]) -> f64 {
        (&self.matrix * DVector::from_column_slice(z)).norm_squared()
    }
}

fn outer_add(target: &mut DMatrix<f64>, row: usize, v: &[f64], scale: f64) {
    for (j, vj) in v.iter().enumerate() {
        target[(row, j)] += scale * vj;
    }
}

fn jacobian(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, rows.first().map_or(0, Vec::len), |i, j| rows[i][j])
}

fn g_scale(cells: &[CellSamples]) -> f64 {
    cells.iter().flat_map(|c| [c.a.g, c.mid.g, c.b.g]).fold(1.0_f64, |a, g| a.max(g.abs()))
}

/// Assembles the program for `(p, tr)` at phase tolerances `δ, ε`.
pub fn build_program(
    p: &ProblemDef,
    tr: &Trajectory,
    opts: &RecoveryOptions,
) -> Result<RecoveryProgram, RecoveryError> {
    let grid = tr.grid().clone();
    let (n, m) = (p.n(), p.m());
    let cells = CellSamples::collect(p, tr)?;
    let contact = geometry::contact_set(p, tr, opts.delta, opts.eps)?;
    if grid.num_cells() < 3 && contact.intervals().iter().any(|(a, b)| a == b) {
        return Err(RecoveryError::GridTooCoarse);
    }
    let delta_slack = opts.delta_slack.unwrap_or(1e-6 * g_scale(&cells));

    let mut unknowns = vec![Unknown::Alpha0];
    let mut weights = vec![1.0];
    let mut lambda_index = vec![None; grid.num_cells()];
    for (k, c) in cells.iter().enumerate() {
        if c.a.g >= -delta_slack && c.b.g >= -delta_slack {
            lambda_index[k] = Some(unknowns.len());
            unknowns.push(Unknown::Lambda { cell: k });
            weights.push(grid.step(k));
        }
    }
    let mut node_generators = vec![Vec::new(); grid.num_nodes()];
    let mut atom_index = vec![Vec::new(); grid.num_nodes()];
    for k in 0..grid.num_nodes() {
        if !contact.contains_node(k) {
            continue;
        }
        let gens = geometry::jump_directions_at_node(p, tr, k, opts.delta, opts.eps).map_err(ProblemError::from)?;
        for l in 0..gens.len() {
            atom_index[k].push(unknowns.len());
            unknowns.push(Unknown::Atom { node: k, generator: l });
            weights.push(1.0);
        }
        node_generators[k] = gens.generators;
    }
    let mut density_index = vec![None; grid.num_cells()];
    for k in 0..grid.num_cells() {
        if !contact.contains_cell(k) {
            continue;
        }
        let gens = geometry::jump_directions_mid(p, tr, k, opts.delta, opts.eps).map_err(ProblemError::from)?;
        if gens.is_empty() {
            return Err(RecoveryError::EmptyGenerators { cell: k });
        }
        density_index[k] = Some(unknowns.len());
        unknowns.push(Unknown::Density { cell: k });
        weights.push(grid.step(k));
    }
    let nz = unknowns.len();

    let last = grid.last();
    let (x0, x1) = (tr.state(0), tr.state(last));
    let jx0 = p.eval_j_x0(x0, x1).map_err(ProblemError::from)?;
    let jx1 = p.eval_j_x1(x0, x1).map_err(ProblemError::from)?;

    let mut p_left = vec![DMatrix::zeros(nz, n); grid.num_nodes()];
    let mut p_right = vec![DMatrix::zeros(nz, n); grid.num_nodes()];
    outer_add(&mut p_right[last], 0, &jx1, 1.0);
    let id = DMatrix::<f64>::identity(n, n);
    for k in (0..=last).rev() {
        let mut left = p_right[k].clone();
        for (l, &idx) in atom_index[k].iter().enumerate() {
            outer_add(&mut left, idx, &node_generators[k][l], 1.0);
        }
        p_left[k] = left;
        if k == 0 {
            break;
        }
        let cell = k - 1;
        let h = grid.step(cell);
        let c = &cells[cell];
        let fa = jacobian(&c.a.f_x);
        let fb = jacobian(&c.b.f_x);
        let mut rhs = &p_left[k] * (&id + &fb * (0.5 * h));
        let gsum: Vec<f64> = c.a.g_x.iter().zip(&c.b.g_x).map(|(a, b)| a + b).collect();
        if let Some(idx) = lambda_index[cell] {
            outer_add(&mut rhs, idx, &gsum, 0.5 * h);
        }
        if let Some(idx) = density_index[cell] {
            outer_add(&mut rhs, idx, &gsum, 0.5 * h);
        }
        let inv = (&id - &fa * (0.5 * h)).try_inverse().ok_or(RecoveryError::Singular { cell })?;
        p_right[cell] = rhs * inv;
    }

    let rows = 3 * grid.num_cells() * m + n;
    let mut matrix = DMatrix::zeros(rows, nz);
    let mut r = 0;
    for (k, c) in cells.iter().enumerate() {
        let h = grid.step(k);
        let p_mid = (&p_right[k] + &p_left[k + 1]) * 0.5;
        let sides: [(&SideSample, &DMatrix<f64>, f64); 3] = [
            (&c.a, &p_right[k], (h / 6.0).sqrt()),
            (&c.mid, &p_mid, (4.0 * h / 6.0).sqrt()),
            (&c.b, &p_left[k + 1], (h / 6.0).sqrt()),
        ];
        for (s, pm, wt) in sides {
            let fu = jacobian(&s.f_u);
            let coef = pm * fu;
            for l in 0..m {
                for j in 0..nz {
                    matrix[(r, j)] = wt * coef[(j, l)];
                }
                if let Some(idx) = lambda_index[k] {
                    matrix[(r, idx)] += wt * s.g_u[l];
                }
                r += 1;
            }
        }
    }
    for i in 0..n {
        for j in 0..nz {
            matrix[(r, j)] = p_left[0][(j, i)];
        }
        matrix[(r, 0)] += jx0[i];
        r += 1;
    }
    debug_assert_eq!(r, rows);

    Ok(RecoveryProgram {
        grid,
        unknowns,
        weights,
        matrix,
        p_left,
        p_right,
        contact,
        node_generators,
        lambda_index,
        density_index,
        atom_index,
        delta_slack,
    })
}
