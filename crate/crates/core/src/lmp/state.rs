use crate::measures::{NodeSampled, SignedMeasure};
use crate::problem::{ProblemDef, ProblemError, Trajectory};

use super::check::{adjoint_residual, CellSamples};
use super::pontryagin::row_times;
use super::{JumpVector, LmpError, MultiplierSet, Support};

/// A pure state constraint `G = g(x)` rewritten with `dμ = λ dt + dη`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedStateForm {
    pub mu: SignedMeasure,
    /// Residual of `−dp = H_x dt + g′(x̂) dμ`.
    pub adjoint_residual: f64,
    /// `∫ |g(x̂)| dμ`.
    pub slackness: f64,
}

fn require_state_constraint(p: &ProblemDef) -> Result<(), LmpError> {
    if p.is_pure_state_constraint() {
        Ok(())
    } else {
        Err(LmpError::NotStateConstraint)
    }
}

/// Merges `λ dt + dη` into one measure and evaluates the merged adjoint
/// equation and slackness.
pub fn merge_state_constraint(
    p: &ProblemDef,
    tr: &Trajectory,
    ms: &MultiplierSet,
) -> Result<MergedStateForm, LmpError> {
    require_state_constraint(p)?;
    if ms.grid() != tr.grid() {
        return Err(LmpError::Certificate("certificate grid differs from the trajectory grid".into()));
    }
    let grid = tr.grid();
    let density: Vec<f64> = ms.lambda.iter().zip(ms.eta.density()).map(|(l, e)| l + e).collect();
    let mu = SignedMeasure::new(grid.clone(), ms.eta.atoms().to_vec(), density)?;

    let cells = CellSamples::collect(p, tr)?;
    let n = p.n();
    let mut left = vec![vec![0.0; n]; grid.num_nodes()];
    let mut right = left.clone();
    for (k, c) in cells.iter().enumerate() {
        right[k] = row_times(&ms.p.right_limit(k), &c.a.f_x);
        left[k + 1] = row_times(ms.p.left_limit(k + 1), &c.b.f_x);
    }
    left[0] = right[0].clone();
    right[grid.last()] = left[grid.last()].clone();
    let ac = NodeSampled::from_sides(left, right);

    let gx: Vec<Vec<f64>> = tr
        .states()
        .iter()
        .map(|x| p.eval_g_x(x, &vec![0.0; p.m()]))
        .collect::<Result<_, _>>()
        .map_err(ProblemError::from)?;
    let g: Vec<f64> = tr
        .states()
        .iter()
        .map(|x| p.eval_g(x, &vec![0.0; p.m()]))
        .collect::<Result<_, _>>()
        .map_err(ProblemError::from)?;
    let phi = NodeSampled::continuous(gx);
    let (adjoint_residual, _) = adjoint_residual(&ms.p, &ac, &[(&phi, &mu)])?;

    let atoms: f64 = mu.atoms().iter().zip(&g).map(|(a, gk)| a * gk.abs()).sum();
    let cells_part: f64 = (0..grid.num_cells())
        .map(|k| 0.5 * grid.step(k) * mu.density()[k] * (g[k].abs() + g[k + 1].abs()))
        .sum();
    Ok(MergedStateForm { mu, adjoint_residual, slackness: atoms + cells_part })
}

/// The certificate with `ŝ = g′(x̂)` on every support element of `dη`.
pub fn with_state_directions(p: &ProblemDef, ms: &MultiplierSet) -> Result<MultiplierSet, LmpError> {
    require_state_constraint(p)?;
    let mut out = ms.clone();
    out.s.clear();
    for (k, _) in ms.eta.sparse_atoms() {
        out.s.insert(Support::Atom(k), JumpVector::Weights(vec![1.0]));
    }
    for (k, e) in ms.eta.density().iter().enumerate() {
        if *e != 0.0 {
            out.s.insert(Support::Cell(k), JumpVector::Weights(vec![1.0]));
        }
    }
    Ok(out)
}
