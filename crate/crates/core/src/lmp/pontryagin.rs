use crate::expr::ExprError;
use crate::problem::ProblemDef;

/// `H(x, u, p) = p·f(x, u)` and `H̄ = H + λ G` with their gradients. The
/// partial derivatives come from the problem's symbolic derivatives; `p` is a
/// row vector.
#[derive(Debug, Clone, Copy)]
pub struct Pontryagin<'a> {
    problem: &'a ProblemDef,
}

/// `p · M` for a matrix given as rows `M[i][·]`.
pub(crate) fn row_times(p: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut out = vec![0.0; cols];
    for (pi, row) in p.iter().zip(rows) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += pi * r;
        }
    }
    out
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

impl<'a> Pontryagin<'a> {
    pub fn new(problem: &'a ProblemDef) -> Self {
        Pontryagin { problem }
    }

    pub fn problem(&self) -> &ProblemDef {
        self.problem
    }

    pub fn h(&self, x: &[f64], u: &[f64], p: &[f64]) -> Result<f64, ExprError> {
        let f = self.problem.eval_f(x, u)?;
        Ok(p.iter().zip(&f).map(|(a, b)| a * b).sum())
    }

    pub fn h_x(&self, x: &[f64], u: &[f64], p: &[f64]) -> Result<Vec<f64>, ExprError> {
        Ok(row_times(p, &self.problem.eval_f_x(x, u)?))
    }

    pub fn h_u(&self, x: &[f64], u: &[f64], p: &[f64]) -> Result<Vec<f64>, ExprError> {
        Ok(row_times(p, &self.problem.eval_f_u(x, u)?))
    }

    pub fn hbar(&self, x: &[f64], u: &[f64], p: &[f64], lambda: f64) -> Result<f64, ExprError> {
        Ok(self.h(x, u, p)? + lambda * self.problem.eval_g(x, u)?)
    }

    pub fn hbar_x(&self, x: &[f64], u: &[f64], p: &[f64], lambda: f64) -> Result<Vec<f64>, ExprError> {
        let mut out = self.h_x(x, u, p)?;
        axpy(lambda, &self.problem.eval_g_x(x, u)?, &mut out);
        Ok(out)
    }

    pub fn hbar_u(&self, x: &[f64], u: &[f64], p: &[f64], lambda: f64) -> Result<Vec<f64>, ExprError> {
        let mut out = self.h_u(x, u, p)?;
        axpy(lambda, &self.problem.eval_g_u(x, u)?, &mut out);
        Ok(out)
    }

    /// Human-readable `H̄` in terms of `p1..pn` and `lambda`.
    pub fn describe(&self) -> String {
        let terms: Vec<String> = self
            .problem
            .dynamics()
            .iter()
            .enumerate()
            .map(|(i, f)| format!("p{}*({f})", i + 1))
            .collect();
        format!("{} + lambda*({})", terms.join(" + "), self.problem.constraint())
    }
}
