//! Closure in measure of a piecewise-smooth control, the relaxed phase set
//! `N_{δ,ε}(G)`, the contact set `D`, jump-direction sets, and Euclidean
//! distance to a convex hull.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ExprError;
use crate::measures::norm;
use crate::par;
use crate::problem::{ProblemDef, ProblemError, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("empty generator set")]
    EmptyGenerators,
    #[error("dimension mismatch: point has {point}, generator {index} has {generator}")]
    Dimension { point: usize, index: usize, generator: usize },
}

/// The finite set `clm(û)(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClmValue {
    pub t: f64,
    pub points: Vec<Vec<f64>>,
}

/// `clm(û)(t)` for the representable control class: `{û(t)}` at continuity
/// times, `{û(t−), û(t+)}` at declared jumps, the one-sided value at `t0`, `t1`.
/// Times outside the horizon are clamped to it.
pub fn clm_at(tr: &Trajectory, t: f64) -> ClmValue {
    let grid = tr.grid();
    let tc = t.clamp(grid.t0(), grid.t1());
    if let Some(k) = grid.node_index(tc) {
        return clm_at_node(tr, k);
    }
    ClmValue { t: tc, points: vec![tr.control_at(tc).expect("time clamped to the horizon")] }
}

/// `clm(û)(τ_k)` at a grid node.
pub fn clm_at_node(tr: &Trajectory, k: usize) -> ClmValue {
    let grid = tr.grid();
    let t = grid.node(k);
    let points = if k == 0 {
        vec![tr.cell_control(0).start().to_vec()]
    } else if k == grid.last() {
        vec![tr.cell_control(k - 1).end().to_vec()]
    } else if let Some(j) = tr.jump_at(k) {
        vec![j.left.clone(), j.right.clone()]
    } else {
        vec![tr.cell_control(k).start().to_vec()]
    };
    ClmValue { t, points }
}

/// Whether `(x, u) ∈ N_{δ,ε}(G) = {−δ ≤ G ≤ 0, ‖G_u‖₂ ≤ ε}`.
pub fn in_phase_set(
    p: &ProblemDef,
    x: &[f64],
    u: &[f64],
    delta: f64,
    eps: f64,
) -> Result<bool, ExprError> {
    let g = p.eval_g(x, u)?;
    if !(-delta..=0.0).contains(&g) {
        return Ok(false);
    }
    Ok(norm(&p.eval_g_u(x, u)?) <= eps)
}

/// Grid-resolution contact set: flagged nodes and the maximal closed
/// intervals `[first, last]` (node indices) they form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    flags: Vec<bool>,
    intervals: Vec<(usize, usize)>,
}

impl ContactSet {
    pub fn from_flags(flags: Vec<bool>) -> Self {
        let mut intervals = Vec::new();
        let mut start = None;
        for (k, &f) in flags.iter().enumerate() {
            match (f, start) {
                (true, None) => start = Some(k),
                (false, Some(s)) => {
                    intervals.push((s, k - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            intervals.push((s, flags.len() - 1));
        }
        ContactSet { flags, intervals }
    }

    pub fn contains_node(&self, k: usize) -> bool {
        self.flags[k]
    }

    /// A cell lies in `D` when both of its end nodes do.
    pub fn contains_cell(&self, cell: usize) -> bool {
        self.flags[cell] && self.flags[cell + 1]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    /// `self ⊆ other`, nodewise.
    pub fn is_subset_of(&self, other: &ContactSet) -> bool {
        self.flags.iter().zip(&other.flags).all(|(a, b)| !a || *b)
    }
}

/// Flags every node where some point of `clm(ŵ)` lies in `N_{δ,ε}(G)`.
pub fn contact_set(
    p: &ProblemDef,
    tr: &Trajectory,
    delta: f64,
    eps: f64,
) -> Result<ContactSet, ProblemError> {
    p.check_compatible(tr)?;
    let flags = par::try_map_indices(tr.grid().num_nodes(), |k| {
        let clm = clm_at_node(tr, k);
        for u in &clm.points {
            if in_phase_set(p, tr.state(k), u, delta, eps)? {
                return Ok(true);
            }
        }
        Ok::<_, ExprError>(false)
    })?;
    Ok(ContactSet::from_flags(flags))
}

/// The generators `G_x(x̂(t), u)` of `S_{δ,ε}` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDirectionSet {
    pub t: f64,
    pub generators: Vec<Vec<f64>>,
}

impl JumpDirectionSet {
    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }
}

fn directions_from(
    p: &ProblemDef,
    x: &[f64],
    clm: ClmValue,
    delta: f64,
    eps: f64,
) -> Result<JumpDirectionSet, ExprError> {
    let mut generators: Vec<Vec<f64>> = Vec::new();
    for u in &clm.points {
        if in_phase_set(p, x, u, delta, eps)? {
            let gx = p.eval_g_x(x, u)?;
            if !generators.contains(&gx) {
                generators.push(gx);
            }
        }
    }
    Ok(JumpDirectionSet { t: clm.t, generators })
}

/// `S_{δ,ε}(x̂(t), clm(û)(t))`; exact duplicates are merged.
pub fn jump_directions(
    p: &ProblemDef,
    tr: &Trajectory,
    t: f64,
    delta: f64,
    eps: f64,
) -> Result<JumpDirectionSet, ExprError> {
    let clm = clm_at(tr, t);
    let x = tr.state_at(clm.t).expect("time clamped to the horizon");
    directions_from(p, &x, clm, delta, eps)
}

/// Jump directions at node `k`.
pub fn jump_directions_at_node(
    p: &ProblemDef,
    tr: &Trajectory,
    k: usize,
    delta: f64,
    eps: f64,
) -> Result<JumpDirectionSet, ExprError> {
    directions_from(p, tr.state(k), clm_at_node(tr, k), delta, eps)
}

/// Jump directions at the midpoint of `cell`.
pub fn jump_directions_mid(
    p: &ProblemDef,
    tr: &Trajectory,
    cell: usize,
    delta: f64,
    eps: f64,
) -> Result<JumpDirectionSet, ExprError> {
    let clm = ClmValue { t: tr.grid().midpoint(cell), points: vec![tr.control_mid(cell)] };
    directions_from(p, &tr.state_mid(cell), clm, delta, eps)
}

const FW_TOL: f64 = 1e-10;
const FW_MAX_ITER: usize = 100_000;

/// `min ‖Σ w_i v_i − s‖₂` over the probability simplex, with a minimizing `w`.
///
/// Exact face enumeration for at most `dim + 2` generators (and at most 12),
/// away-step Frank–Wolfe otherwise.
pub fn dist_to_convex_hull(
    s: &[f64],
    generators: &[Vec<f64>],
) -> Result<(f64, Vec<f64>), GeometryError> {
    if generators.is_empty() {
        return Err(GeometryError::EmptyGenerators);
    }
    for (index, g) in generators.iter().enumerate() {
        if g.len() != s.len() {
            return Err(GeometryError::Dimension { point: s.len(), index, generator: g.len() });
        }
    }
    let r = generators.len();
    if r <= s.len() + 2 && r <= 12 {
        Ok(hull_exact(s, generators))
    } else {
        Ok(hull_frank_wolfe(s, generators))
    }
}

fn combine(generators: &[Vec<f64>], w: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (g, wi) in generators.iter().zip(w) {
        for (o, gi) in out.iter_mut().zip(g) {
            *o += wi * gi;
        }
    }
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// Every subset is projected onto its affine hull; the projection is kept when
// its barycentric weights are nonnegative. The optimum lies in the relative
// interior of some face, where it coincides with that face's projection.
fn hull_exact(s: &[f64], generators: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let r = generators.len();
    let dim = s.len();
    let mut best = (f64::INFINITY, vec![0.0; r]);
    for mask in 1u32..(1u32 << r) {
        let idx: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
        let base = &generators[idx[0]];
        let mut weights = vec![0.0; r];
        if idx.len() == 1 {
            weights[idx[0]] = 1.0;
        } else {
            let cols = idx.len() - 1;
            let a = DMatrix::from_fn(dim, cols, |i, j| generators[idx[j + 1]][i] - base[i]);
            let b = DVector::from_fn(dim, |i, _| s[i] - base[i]);
            let Ok(sol) = a.svd(true, true).solve(&b, 1e-12) else { continue };
            let rest: f64 = sol.iter().sum();
            if sol.iter().any(|v| *v < -1e-12) || rest > 1.0 + 1e-12 {
                continue;
            }
            weights[idx[0]] = (1.0 - rest).max(0.0);
            for (j, v) in sol.iter().enumerate() {
                weights[idx[j + 1]] = v.max(0.0);
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        let d = dist(&combine(generators, &weights, dim), s);
        if d < best.0 - 1e-15 {
            best = (d, weights);
        }
    }
    best
}

fn hull_frank_wolfe(s: &[f64], generators: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let r = generators.len();
    let dim = s.len();
    let mut w = vec![0.0; r];
    let start = (0..r)
        .min_by(|&a, &b| dist(&generators[a], s).total_cmp(&dist(&generators[b], s)))
        .unwrap_or(0);
    w[start] = 1.0;
    let mut y = generators[start].clone();
    for _ in 0..FW_MAX_ITER {
        let resid: Vec<f64> = y.iter().zip(s).map(|(a, b)| a - b).collect();
        let grad: Vec<f64> = generators.iter().map(|g| g.iter().zip(&resid).map(|(a, b)| a * b).sum()).collect();
        let wy: f64 = y.iter().zip(&resid).map(|(a, b)| a * b).sum();
        let (fw, fw_val) = grad.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, g)| if *g < acc.1 { (i, *g) } else { acc });
        let (aw, aw_val) = grad
            .iter()
            .enumerate()
            .filter(|(i, _)| w[*i] > 0.0)
            .fold((0, f64::NEG_INFINITY), |acc, (i, g)| if *g > acc.1 { (i, *g) } else { acc });
        let gap = wy - fw_val;
        if gap <= FW_TOL {
            break;
        }
        let (dir, max_step, toward, away) = if gap >= aw_val - wy {
            let d: Vec<f64> = generators[fw].iter().zip(&y).map(|(g, yi)| g - yi).collect();
            (d, 1.0, Some(fw), None)
        } else {
            let d: Vec<f64> = y.iter().zip(&generators[aw]).map(|(yi, g)| yi - g).collect();
            let wa: f64 = w[aw];
            (d, wa / (1.0 - wa).max(f64::MIN_POSITIVE), None, Some(aw))
        };
        let dd: f64 = dir.iter().map(|v| v * v).sum();
        if dd == 0.0 {
            break;
        }
        let step = (-(resid.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>()) / dd).clamp(0.0, max_step);
        if let Some(i) = toward {
            w.iter_mut().for_each(|v| *v *= 1.0 - step);
            w[i] += step;
        }
        if let Some(i) = away {
            w.iter_mut().for_each(|v| *v *= 1.0 + step);
            w[i] -= step;
            if w[i] < 1e-15 {
                w[i] = 0.0;
            }
        }
        for (yi, d) in y.iter_mut().zip(&dir) {
            *yi += step * d;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    (dist(&combine(generators, &w, dim), s), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CellControl, ControlJump, TimeGrid};

    #[test]
    fn hull_distance_examples() {
        let (d, w) = dist_to_convex_hull(&[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((d - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
        let (d, w) = dist_to_convex_hull(&[3.0, -1.0], &[vec![3.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(w, vec![1.0, 0.0]);
        assert!(dist_to_convex_hull(&[0.0], &[]).is_err());
    }

    #[test]
    fn frank_wolfe_matches_exact() {
        let gens: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let a = i as f64 * 0.7;
                vec![a.cos() + 2.0, a.sin()]
            })
            .collect();
        for s in [[0.0, 0.0], [2.0, 0.1], [5.0, 3.0]] {
            let (d_fw, _) = hull_frank_wolfe(&s, &gens);
            let (d_ex, _) = hull_exact(&s, &gens);
            assert!((d_fw - d_ex).abs() < 1e-6, "{d_fw} vs {d_ex}");
        }
    }

    #[test]
    fn clm_sizes() {
        let grid = TimeGrid::uniform(0.0, 1.0, 4).unwrap();
        let cells = vec![
            CellControl::Constant(vec![1.0]),
            CellControl::Constant(vec![1.0]),
            CellControl::Constant(vec![-1.0]),
            CellControl::Constant(vec![-1.0]),
        ];
        let jump = ControlJump { node: 2, left: vec![1.0], right: vec![-1.0] };
        let tr = Trajectory::new(grid, vec![vec![0.0]; 5], cells, vec![jump]).unwrap();
        assert_eq!(clm_at(&tr, 0.5).points, vec![vec![1.0], vec![-1.0]]);
        assert_eq!(clm_at(&tr, 0.0).points, vec![vec![1.0]]);
        assert_eq!(clm_at(&tr, 1.0).points, vec![vec![-1.0]]);
        assert_eq!(clm_at(&tr, 0.6).points, vec![vec![-1.0]]);
    }

    #[test]
    fn phase_set_membership() {
        let p = ProblemDef::parse(2, 1, 0.0, 1.0, &["x2", "u1"], "0.5*u1^2 - x2", "x1_1").unwrap();
        assert!(in_phase_set(&p, &[0.0, 0.02], &[0.1], 0.02, 0.1).unwrap());
        assert!(!in_phase_set(&p, &[0.0, 0.02], &[0.1], 0.02, 0.05).unwrap());
        let p1 = ProblemDef::parse(1, 1, 0.0, 1.0, &["u1"], "0.5*u1^2 - x1 + 1", "x0_1*x1_1").unwrap();
        assert!(in_phase_set(&p1, &[1.0], &[0.0], 0.0, 0.0).unwrap());
        assert!(!in_phase_set(&p1, &[2.0], &[0.0], 0.5, 0.5).unwrap());
    }

    #[test]
    fn contact_set_intervals() {
        let c = ContactSet::from_flags(vec![false, true, true, false, true]);
        assert_eq!(c.intervals(), &[(1, 2), (4, 4)]);
        assert!(c.contains_cell(1));
        assert!(!c.contains_cell(2));
        assert!(ContactSet::from_flags(vec![false; 3]).is_empty());
    }
}
