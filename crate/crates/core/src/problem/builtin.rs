//! The two analytic examples with their optimal processes and multipliers.
//!
//! Example 1: `J = x(t0)·x(t1) → min`, `ẋ = u`, `G = u²/2 − x + 1 ≤ 0`. The
//! only admissible process is `x ≡ 1, u ≡ 0`; every time is a contact time
//! and the multipliers are two unit atoms of `dη` at the endpoints.
//!
//! Example 2: state `(y, x)`, `ẏ = x`, `ẋ = u`, `G = u²/2 − x ≤ 0` on
//! `[−T, T]`, cost `y(T) − y(−T) − (m/2)(x(−T) + x(T))`. With `b = T − m` the
//! optimum rests at `x = u = 0` on `[−b, b]` and follows `x = (t ∓ b)²/2` on
//! the boundary arcs.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::{CellControl, ProblemDef, ProblemError, TimeGrid, Trajectory};
use crate::lmp::{JumpVector, MultiplierSet, Support};
use crate::measures::{BVFunction, SignedMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    Ex1,
    Ex2,
}

impl FromStr for Example {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ex1" => Ok(Example::Ex1),
            "ex2" => Ok(Example::Ex2),
            other => Err(ProblemError::Params(format!("unknown example `{other}` (expected ex1 or ex2)"))),
        }
    }
}

/// How `λ + η̇ = 1` is split on `D` in Example 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContactSplit {
    /// `(λ, η̇) = (1/2, 1/2)`.
    #[default]
    Half,
    /// `(λ, η̇) = (0, 1)`.
    EtaOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleParams {
    /// Horizon of Example 1.
    pub t0: f64,
    pub t1: f64,
    /// Half-horizon `T` of Example 2.
    pub big_t: f64,
    /// Arc length `m` of Example 2.
    pub m: f64,
    pub cells: usize,
    pub split: ContactSplit,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams { t0: 0.0, t1: 1.0, big_t: 1.0, m: 0.5, cells: 100, split: ContactSplit::Half }
    }
}

impl ExampleParams {
    pub fn ex1(t0: f64, t1: f64, cells: usize) -> Self {
        ExampleParams { t0, t1, cells, ..Default::default() }
    }

    pub fn ex2(big_t: f64, m: f64, cells: usize) -> Self {
        ExampleParams { big_t, m, cells, ..Default::default() }
    }

    pub fn with_split(mut self, split: ContactSplit) -> Self {
        self.split = split;
        self
    }
}

/// Problem, optimal trajectory, and a certificate for it.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub problem: ProblemDef,
    pub trajectory: Trajectory,
    pub certificate: MultiplierSet,
}

pub fn builtin_example(name: Example, params: &ExampleParams) -> Result<Fixture, ProblemError> {
    match name {
        Example::Ex1 => ex1(params),
        Example::Ex2 => ex2(params),
    }
}

fn invalid(e: impl std::fmt::Display) -> ProblemError {
    ProblemError::Params(e.to_string())
}

fn ex1(params: &ExampleParams) -> Result<Fixture, ProblemError> {
    let (t0, t1, n) = (params.t0, params.t1, params.cells);
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(invalid(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    if n < 2 {
        return Err(invalid("need at least 2 cells"));
    }
    let problem = ProblemDef::parse(1, 1, t0, t1, &["u1"], "0.5*u1^2 - x1 + 1", "x0_1*x1_1")?;
    let grid = TimeGrid::uniform(t0, t1, n)?;
    let trajectory = Trajectory::new(
        grid.clone(),
        vec![vec![1.0]; n + 1],
        vec![CellControl::Constant(vec![0.0]); n],
        vec![],
    )?;

    let eta = SignedMeasure::from_sparse(grid.clone(), &[(0, 1.0), (n, 1.0)], vec![0.0; n]).map_err(invalid)?;
    let mut node_values = vec![vec![0.0]; n + 1];
    node_values[0] = vec![-1.0];
    let mut atoms = vec![vec![0.0]; n + 1];
    atoms[0] = vec![1.0];
    atoms[n] = vec![1.0];
    let p = BVFunction::from_left_limits(grid, node_values, atoms).map_err(invalid)?;
    let s = BTreeMap::from([
        (Support::Atom(0), JumpVector::Vector(vec![-1.0])),
        (Support::Atom(n), JumpVector::Vector(vec![-1.0])),
    ]);
    let certificate = MultiplierSet::new(1.0, vec![0.0; n], eta, s, p).map_err(invalid)?;
    Ok(Fixture { problem, trajectory, certificate })
}

/// Cells on each boundary arc for a total of `cells`, keeping `±b` on nodes.
fn ex2_arc_cells(big_t: f64, m: f64, cells: usize) -> usize {
    let arc = (cells as f64 * m / (2.0 * big_t)).round() as usize;
    arc.clamp(1, (cells - 1) / 2)
}

fn ex2(params: &ExampleParams) -> Result<Fixture, ProblemError> {
    let (big_t, m, n) = (params.big_t, params.m, params.cells);
    if !(big_t.is_finite() && big_t > 0.0) {
        return Err(invalid(format!("need T > 0, got {big_t}")));
    }
    if !(m.is_finite() && m > 0.0 && m < big_t) {
        return Err(invalid(format!("need 0 < m < T, got m = {m}, T = {big_t}")));
    }
    if n < 3 {
        return Err(invalid("need at least 3 cells"));
    }
    let b = big_t - m;
    let j = format!("x1_1 - x0_1 - {}*(x0_2 + x1_2)", m / 2.0);
    let problem = ProblemDef::parse(2, 1, -big_t, big_t, &["x2", "u1"], "0.5*u1^2 - x2", &j)?;
    let arc = ex2_arc_cells(big_t, m, n);
    let grid = TimeGrid::piecewise_uniform(&[-big_t, -b, b, big_t], &[arc, n - 2 * arc, arc])?;

    let offset = |t: f64| {
        if t <= -b {
            t + b
        } else if t >= b {
            t - b
        } else {
            0.0
        }
    };
    let state = |t: f64| {
        let d = offset(t);
        let x = 0.5 * d.powi(2);
        let y = if t <= -b {
            (d.powi(3) + m.powi(3)) / 6.0
        } else {
            m.powi(3) / 6.0 + d.powi(3) / 6.0
        };
        vec![y, x]
    };
    let trajectory = Trajectory::from_fns(grid.clone(), state, |t| vec![offset(t)])?;

    let in_d = |k: usize| grid.node(k) >= -b && grid.node(k + 1) <= b;
    let lambda_d = match params.split {
        ContactSplit::Half => 0.5,
        ContactSplit::EtaOnly => 0.0,
    };
    let cells = grid.num_cells();
    let lambda: Vec<f64> = (0..cells).map(|k| if in_d(k) { lambda_d } else { 0.5 }).collect();
    let density: Vec<f64> = (0..cells).map(|k| if in_d(k) { 1.0 - lambda_d } else { 0.0 }).collect();
    let eta = SignedMeasure::nonnegative(grid.clone(), vec![0.0; grid.num_nodes()], density).map_err(invalid)?;
    let s = (0..cells)
        .filter(|&k| in_d(k))
        .map(|k| (Support::Cell(k), JumpVector::Vector(vec![0.0, -1.0])))
        .collect();
    let node_values = grid.nodes().iter().map(|&t| vec![1.0, -0.5 * offset(t)]).collect();
    let p = BVFunction::from_left_limits(grid.clone(), node_values, vec![vec![0.0, 0.0]; grid.num_nodes()])
        .map_err(invalid)?;
    let certificate = MultiplierSet::new(1.0, lambda, eta, s, p).map_err(invalid)?;
    Ok(Fixture { problem, trajectory, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::endpoint_cost;

    #[test]
    fn parameter_domains() {
        assert!(builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 0.0, 400)).is_err());
        assert!(builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 1.0, 400)).is_err());
        assert!(builtin_example(Example::Ex1, &ExampleParams::ex1(1.0, 1.0, 10)).is_err());
        assert!("ex3".parse::<Example>().is_err());
    }

    #[test]
    fn example_two_cost_and_breakpoints() {
        let fx = builtin_example(Example::Ex2, &ExampleParams::ex2(1.0, 0.5, 400)).unwrap();
        let j = endpoint_cost(&fx.problem, &fx.trajectory).unwrap();
        assert!((j + 0.5_f64.powi(3) / 6.0).abs() < 1e-12);
        let g = fx.trajectory.grid();
        assert!(g.node_index(-0.5).is_some() && g.node_index(0.5).is_some());
    }
}
