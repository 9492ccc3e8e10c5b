//! Problem data, candidate trajectories, and the built-in analytic fixtures.

pub mod builtin;
mod grid;
mod trajectory;

use thiserror::Error;

use crate::expr::{self, Binding, Expr, ExprError, Scope, Var};
use crate::par;

pub use builtin::{builtin_example, ContactSplit, Example, ExampleParams, Fixture};
pub use grid::TimeGrid;
pub use trajectory::{CellControl, ControlJump, NodeSide, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid problem: {0}")]
    Definition(String),
    #[error("in `{field}`: {source}")]
    Parse { field: String, source: ExprError },
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error("evaluation failed in cell {cell}: {source}")]
    CellEval { cell: usize, source: ExprError },
    #[error("evaluation failed: {0}")]
    Eval(#[from] ExprError),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Partial derivatives of the problem data, built once by symbolic differentiation.
#[derive(Debug, Clone)]
pub struct Derivatives {
    /// `f_x[i][j] = ∂f_i/∂x_j`.
    pub f_x: Vec<Vec<Expr>>,
    /// `f_u[i][l] = ∂f_i/∂u_l`.
    pub f_u: Vec<Vec<Expr>>,
    pub g_x: Vec<Expr>,
    pub g_u: Vec<Expr>,
    pub j_x0: Vec<Expr>,
    pub j_x1: Vec<Expr>,
}

/// Problem P: minimize `J(x(t0), x(t1))` subject to `ẋ = f(x, u)` and one
/// mixed constraint `G(x, u) ≤ 0` on a fixed horizon.
#[derive(Debug, Clone)]
pub struct ProblemDef {
    n: usize,
    m: usize,
    t0: f64,
    t1: f64,
    f: Vec<Expr>,
    g: Expr,
    j: Expr,
    sources: Sources,
    derivs: Derivatives,
}

/// The textual form the problem was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sources {
    pub f: Vec<String>,
    pub g: String,
    pub j: String,
}

impl ProblemDef {
    /// Parses and validates a problem from expression sources.
    pub fn parse(
        n: usize,
        m: usize,
        t0: f64,
        t1: f64,
        f: &[&str],
        g: &str,
        j: &str,
    ) -> Result<Self, ProblemError> {
        let scope = Scope { n, m };
        let parse_field = |field: String, src: &str| {
            expr::parse(src, scope).map_err(|source| ProblemError::Parse { field, source })
        };
        let f_exprs = f
            .iter()
            .enumerate()
            .map(|(i, s)| parse_field(format!("f[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?;
        let g_expr = parse_field("G".into(), g)?;
        let j_expr = parse_field("J".into(), j)?;
        let sources = Sources {
            f: f.iter().map(|s| s.to_string()).collect(),
            g: g.to_string(),
            j: j.to_string(),
        };
        Self::from_exprs(n, m, t0, t1, f_exprs, g_expr, j_expr, sources)
    }

    #[allow(clippy::too_many_arguments)]
    fn from_exprs(
        n: usize,
        m: usize,
        t0: f64,
        t1: f64,
        f: Vec<Expr>,
        g: Expr,
        j: Expr,
        sources: Sources,
    ) -> Result<Self, ProblemError> {
        if n == 0 || m == 0 {
            return Err(ProblemError::Definition("n and m must be positive".into()));
        }
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(ProblemError::Definition(format!("need t0 < t1, got [{t0}, {t1}]")));
        }
        if f.len() != n {
            return Err(ProblemError::Definition(format!(
                "f has {} components, expected n = {n}",
                f.len()
            )));
        }
        for (i, fi) in f.iter().enumerate() {
            if fi.depends_on(Var::is_endpoint) {
                return Err(ProblemError::Definition(format!(
                    "f[{i}] references endpoint variables"
                )));
            }
        }
        if g.depends_on(Var::is_endpoint) {
            return Err(ProblemError::Definition("G references endpoint variables".into()));
        }
        if j.depends_on(|v| !v.is_endpoint()) {
            return Err(ProblemError::Definition(
                "J may only reference endpoint variables x0_k, x1_k".into(),
            ));
        }
        let derivs = Derivatives {
            f_x: f.iter().map(|fi| (0..n).map(|k| fi.diff(Var::X(k))).collect()).collect(),
            f_u: f.iter().map(|fi| (0..m).map(|l| fi.diff(Var::U(l))).collect()).collect(),
            g_x: (0..n).map(|k| g.diff(Var::X(k))).collect(),
            g_u: (0..m).map(|l| g.diff(Var::U(l))).collect(),
            j_x0: (0..n).map(|k| j.diff(Var::X0(k))).collect(),
            j_x1: (0..n).map(|k| j.diff(Var::X1(k))).collect(),
        };
        Ok(ProblemDef { n, m, t0, t1, f, g, j, sources, derivs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn dynamics(&self) -> &[Expr] {
        &self.f
    }

    pub fn constraint(&self) -> &Expr {
        &self.g
    }

    pub fn cost(&self) -> &Expr {
        &self.j
    }

    pub fn sources(&self) -> &Sources {
        &self.sources
    }

    pub fn derivatives(&self) -> &Derivatives {
        &self.derivs
    }

    /// True when `G` does not reference any control variable.
    pub fn is_pure_state_constraint(&self) -> bool {
        !self.g.depends_on(|v| matches!(v, Var::U(_)))
    }

    pub fn eval_f(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, ExprError> {
        let b = Binding::running(x, u);
        self.f.iter().map(|e| e.eval(&b)).collect()
    }

    pub fn eval_g(&self, x: &[f64], u: &[f64]) -> Result<f64, ExprError> {
        self.g.eval(&Binding::running(x, u))
    }

    pub fn eval_g_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, ExprError> {
        eval_all(&self.derivs.g_x, &Binding::running(x, u))
    }

    pub fn eval_g_u(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, ExprError> {
        eval_all(&self.derivs.g_u, &Binding::running(x, u))
    }

    /// Jacobian `∂f/∂x` as rows `f_i`.
    pub fn eval_f_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>, ExprError> {
        let b = Binding::running(x, u);
        self.derivs.f_x.iter().map(|row| eval_all(row, &b)).collect()
    }

    /// Jacobian `∂f/∂u` as rows `f_i`.
    pub fn eval_f_u(&self, x: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>, ExprError> {
        let b = Binding::running(x, u);
        self.derivs.f_u.iter().map(|row| eval_all(row, &b)).collect()
    }

    pub fn eval_j(&self, x0: &[f64], x1: &[f64]) -> Result<f64, ExprError> {
        self.j.eval(&Binding::endpoints(x0, x1))
    }

    pub fn eval_j_x0(&self, x0: &[f64], x1: &[f64]) -> Result<Vec<f64>, ExprError> {
        eval_all(&self.derivs.j_x0, &Binding::endpoints(x0, x1))
    }

    pub fn eval_j_x1(&self, x0: &[f64], x1: &[f64]) -> Result<Vec<f64>, ExprError> {
        eval_all(&self.derivs.j_x1, &Binding::endpoints(x0, x1))
    }

    /// Checks that a trajectory matches this problem's dimensions and horizon.
    pub fn check_compatible(&self, tr: &Trajectory) -> Result<(), ProblemError> {
        if tr.n() != self.n || tr.m() != self.m {
            return Err(ProblemError::Trajectory(format!(
                "trajectory dimensions (n={}, m={}) do not match problem (n={}, m={})",
                tr.n(),
                tr.m(),
                self.n,
                self.m
            )));
        }
        let g = tr.grid();
        let scale = 1.0 + self.t0.abs().max(self.t1.abs());
        if (g.t0() - self.t0).abs() > 1e-12 * scale || (g.t1() - self.t1).abs() > 1e-12 * scale {
            return Err(ProblemError::Trajectory(format!(
                "grid spans [{}, {}] but the horizon is [{}, {}]",
                g.t0(),
                g.t1(),
                self.t0,
                self.t1
            )));
        }
        Ok(())
    }
}

fn eval_all(exprs: &[Expr], b: &Binding<'_>) -> Result<Vec<f64>, ExprError> {
    exprs.iter().map(|e| e.eval(b)).collect()
}

/// Per-cell trapezoidal defect
/// `x(τ_{k+1}) − x(τ_k) − h_k/2 · (f(w(τ_k⁺)) + f(w(τ_{k+1}⁻)))`.
pub fn dynamics_defect(p: &ProblemDef, tr: &Trajectory) -> Result<Vec<Vec<f64>>, ProblemError> {
    p.check_compatible(tr)?;
    let grid = tr.grid();
    par::try_map_indices(grid.num_cells(), |k| {
        let cell_err = |source| ProblemError::CellEval { cell: k, source };
        let fa = p.eval_f(tr.state(k), tr.cell_control(k).start()).map_err(cell_err)?;
        let fb = p.eval_f(tr.state(k + 1), tr.cell_control(k).end()).map_err(cell_err)?;
        let h = grid.step(k);
        Ok((0..p.n())
            .map(|i| tr.state(k + 1)[i] - tr.state(k)[i] - 0.5 * h * (fa[i] + fb[i]))
            .collect())
    })
}

/// `J(x(t0), x(t1))`.
pub fn endpoint_cost(p: &ProblemDef, tr: &Trajectory) -> Result<f64, ProblemError> {
    p.check_compatible(tr)?;
    Ok(p.eval_j(tr.state(0), tr.state(tr.grid().last()))?)
}
