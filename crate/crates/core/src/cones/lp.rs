//! Dense two-phase simplex with Bland's rule.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// `min cᵀx` subject to linear rows; variables are nonnegative unless
/// marked free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    cost: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;
const REFRESH: usize = 32;

impl LinearProgram {
    pub fn new(n: usize) -> Self {
        LinearProgram { n, cost: vec![0.0; n], free: vec![false; n], rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn minimize(&mut self, cost: Vec<f64>) -> &mut Self {
        assert_eq!(cost.len(), self.n);
        self.cost = cost;
        self
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.free[j] = true;
        self
    }

    pub fn add_row(&mut self, coef: Vec<f64>, cmp: Cmp, rhs: f64) -> &mut Self {
        assert_eq!(coef.len(), self.n);
        self.rows.push((coef, cmp, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome {
        // Column layout: structural (free vars split), slacks/surpluses, artificials.
        let mut col_of = Vec::with_capacity(self.n);
        let mut ns = 0;
        for j in 0..self.n {
            col_of.push(ns);
            ns += if self.free[j] { 2 } else { 1 };
        }
        let m = self.rows.len();
        let n_slack = self.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let mut rows = Vec::with_capacity(m);
        for (coef, cmp, rhs) in &self.rows {
            let mut expanded = vec![0.0; ns];
            for (j, c) in coef.iter().enumerate() {
                expanded[col_of[j]] = *c;
                if self.free[j] {
                    expanded[col_of[j] + 1] = -c;
                }
            }
            let (mut cmp, mut rhs) = (*cmp, *rhs);
            if rhs < 0.0 {
                expanded.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                cmp = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
            }
            rows.push((expanded, cmp, rhs));
        }
        let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let total = ns + n_slack + n_art;
        let rhs_col = total;
        let mut t = vec![vec![0.0; total + 1]; m];
        let mut basis = vec![0; m];
        let (mut s_idx, mut a_idx) = (ns, ns + n_slack);
        for (i, (coef, cmp, rhs)) in rows.into_iter().enumerate() {
            t[i][..ns].copy_from_slice(&coef);
            t[i][rhs_col] = rhs;
            match cmp {
                Cmp::Le => {
                    t[i][s_idx] = 1.0;
                    basis[i] = s_idx;
                    s_idx += 1;
                }
                Cmp::Ge => {
                    t[i][s_idx] = -1.0;
                    s_idx += 1;
                    t[i][a_idx] = 1.0;
                    basis[i] = a_idx;
                    a_idx += 1;
                }
                Cmp::Eq => {
                    t[i][a_idx] = 1.0;
                    basis[i] = a_idx;
                    a_idx += 1;
                }
            }
        }
        let first_art = ns + n_slack;
        let mut tab = Tableau { t, basis, rhs: rhs_col };

        if n_art > 0 {
            let mut c1 = vec![0.0; total];
            c1[first_art..].iter_mut().for_each(|c| *c = 1.0);
            let allowed = vec![true; total];
            match tab.run(&c1, &allowed) {
                Some(v) => {
                    let scale = 1.0 + tab.t.iter().map(|r| r[rhs_col].abs()).fold(0.0, f64::max);
                    if v > 1e-9 * scale {
                        return LpOutcome::Infeasible;
                    }
                }
                None => return LpOutcome::Infeasible,
            }
            // Pivot zero-level artificials out of the basis where possible.
            for i in 0..m {
                if tab.basis[i] >= first_art {
                    if let Some(j) = (0..first_art).find(|&j| tab.t[i][j].abs() > 1e-9) {
                        tab.pivot(i, j, None);
                    }
                }
            }
        }

        let mut c2 = vec![0.0; total];
        for j in 0..self.n {
            c2[col_of[j]] = self.cost[j];
            if self.free[j] {
                c2[col_of[j] + 1] = -self.cost[j];
            }
        }
        let allowed: Vec<bool> = (0..total).map(|j| j < first_art).collect();
        let Some(value) = tab.run(&c2, &allowed) else {
            return LpOutcome::Unbounded;
        };
        let mut full = vec![0.0; total];
        for (i, &b) in tab.basis.iter().enumerate() {
            full[b] = tab.t[i][rhs_col];
        }
        let x = (0..self.n)
            .map(|j| if self.free[j] { full[col_of[j]] - full[col_of[j] + 1] } else { full[col_of[j]] })
            .collect();
        LpOutcome::Optimal { x, value }
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    rhs: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, d: Option<&mut Vec<f64>>) {
        let pv = self.t[r][c];
        self.t[r].iter_mut().for_each(|v| *v /= pv);
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                row.iter_mut().zip(&prow).for_each(|(v, p)| *v -= f * p);
                row[c] = 0.0;
            }
        }
        if let Some(d) = d {
            let f = d[c];
            if f != 0.0 {
                d.iter_mut().zip(&prow).for_each(|(v, p)| *v -= f * p);
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = c.iter().copied().chain(std::iter::once(0.0)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                d.iter_mut().zip(&self.t[i]).for_each(|(v, t)| *v -= cb * t);
            }
        }
        d
    }

    /// Minimum-ratio row; near-ties go to the largest pivot element, then
    /// the smallest basic index.
    fn leaving_row(&self, enter: usize) -> Option<usize> {
        let colmax = self.t.iter().map(|r| r[enter]).fold(0.0, f64::max);
        let tol = PIVOT_TOL.max(1e-9 * colmax);
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in self.t.iter().enumerate() {
            let a = row[enter];
            if a <= tol {
                continue;
            }
            let ratio = row[self.rhs].max(0.0) / a;
            let better = match leave {
                None => true,
                Some((l, best)) => {
                    let band = 1e-12 * (1.0 + best.abs());
                    let al = self.t[l][enter];
                    ratio < best - band
                        || (ratio <= best + band && (a > al * (1.0 + 1e-9) || (a >= al && self.basis[i] < self.basis[l])))
                }
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        leave.map(|(r, _)| r)
    }

    /// Minimizes `cᵀx` from the current basis; `None` when unbounded.
    fn run(&mut self, c: &[f64], allowed: &[bool]) -> Option<f64> {
        let total = c.len();
        // Reduced costs with the objective value (negated) in the last slot.
        let mut d = self.reduced_costs(c);
        let mut fresh = true;
        for it in 0..MAX_PIVOTS {
            if it % REFRESH == 0 && !fresh {
                d = self.reduced_costs(c);
            }
            let Some(enter) = (0..total).find(|&j| allowed[j] && d[j] < -COST_TOL) else {
                if fresh {
                    return Some(-d[total]);
                }
                d = self.reduced_costs(c);
                fresh = true;
                continue;
            };
            let Some(r) = self.leaving_row(enter) else {
                if fresh {
                    return None;
                }
                d = self.reduced_costs(c);
                fresh = true;
                continue;
            };
            self.pivot(r, enter, Some(&mut d));
            fresh = false;
        }
        log::warn!("simplex pivot limit reached");
        Some(-self.reduced_costs(c)[total])
    }
}
