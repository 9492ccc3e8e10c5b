//! Projected gradient on the weighted simplex and a Lawson–Hanson
//! nonnegative least-squares polish.

use nalgebra::{DMatrix, DVector};

/// Euclidean projection onto `{z ≥ 0, wᵀz = 1}` for positive `w`.
pub(crate) fn project_weighted_simplex(v: &[f64], w: &[f64]) -> Vec<f64> {
    let phi = |theta: f64| -> f64 { v.iter().zip(w).map(|(vi, wi)| wi * (vi - theta * wi).max(0.0)).sum() };
    let w2: f64 = w.iter().map(|x| x * x).sum();
    let ratios = v.iter().zip(w).map(|(vi, wi)| vi / wi);
    let mut lo = ratios.clone().fold(f64::INFINITY, f64::min) - 1.0 / w2;
    let mut hi = ratios.fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    let mut z: Vec<f64> = v.iter().zip(w).map(|(vi, wi)| (vi - lo * wi).max(0.0)).collect();
    let s: f64 = z.iter().zip(w).map(|(a, b)| a * b).sum();
    if s > 0.0 {
        z.iter_mut().for_each(|x| *x /= s);
    }
    z
}

/// Projected gradient with Armijo backtracking for `min ‖M z‖²` on the
/// weighted simplex.
pub(crate) fn projected_gradient(m: &DMatrix<f64>, w: &[f64], z0: Vec<f64>, max_iter: usize) -> Vec<f64> {
    let f = |z: &DVector<f64>| (m * z).norm_squared();
    let mut z = DVector::from_vec(z0);
    let mut fz = f(&z);
    let mut step = 1.0 / (2.0 * m.norm_squared()).max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        let grad = m.tr_mul(&(m * &z)) * 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = z.clone() - &grad * step;
            let cand = DVector::from_vec(project_weighted_simplex(trial.as_slice(), w));
            let fc = f(&cand);
            let decrease = grad.dot(&(&cand - &z));
            if fc <= fz + 1e-4 * decrease {
                let moved = (&cand - &z).norm();
                z = cand;
                fz = fc;
                accepted = moved > 1e-15;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    z.as_slice().to_vec()
}

/// Lawson–Hanson NNLS for `min ‖A x − b‖²`, `x ≥ 0`, on column-normalized
/// `A` with a precomputed Gram matrix. The Cholesky factor of the passive
/// Gram block is kept up to date by appending columns and by Givens
/// rotations on deletion; solves use semi-normal equations with one
/// refinement step against `A` itself.
pub(crate) struct Nnls {
    a: DMatrix<f64>,
    b: DVector<f64>,
    scale: Vec<f64>,
    gram: DMatrix<f64>,
    atb: DVector<f64>,
}

struct Factor {
    cols: Vec<usize>,
    r: DMatrix<f64>,
}

impl Factor {
    fn new(cap: usize) -> Self {
        Factor { cols: Vec::new(), r: DMatrix::zeros(cap, cap) }
    }

    fn len(&self) -> usize {
        self.cols.len()
    }

    /// Appends column `j`; returns false (and leaves the factor unchanged)
    /// when `j` is numerically dependent on the current columns.
    fn push(&mut self, gram: &DMatrix<f64>, j: usize) -> bool {
        let k = self.len();
        let mut col = vec![0.0; k];
        for i in 0..k {
            let mut v = gram[(self.cols[i], j)];
            for (l, c) in col.iter().enumerate().take(i) {
                v -= self.r[(l, i)] * c;
            }
            col[i] = v / self.r[(i, i)];
        }
        let rho2 = gram[(j, j)] - col.iter().map(|c| c * c).sum::<f64>();
        if rho2 <= 1e-12 * gram[(j, j)] {
            return false;
        }
        for (i, c) in col.into_iter().enumerate() {
            self.r[(i, k)] = c;
        }
        self.r[(k, k)] = rho2.sqrt();
        self.cols.push(j);
        true
    }

    /// Removes the column at position `q`.
    fn remove(&mut self, q: usize) {
        let k = self.len();
        for c in q..k - 1 {
            for i in 0..=c + 1 {
                self.r[(i, c)] = self.r[(i, c + 1)];
            }
        }
        for i in 0..k {
            self.r[(i, k - 1)] = 0.0;
        }
        for j in q..k - 1 {
            let (a, b) = (self.r[(j, j)], self.r[(j + 1, j)]);
            let h = a.hypot(b);
            if h == 0.0 {
                continue;
            }
            let (c, s) = (a / h, b / h);
            for col in j..k - 1 {
                let (x, y) = (self.r[(j, col)], self.r[(j + 1, col)]);
                self.r[(j, col)] = c * x + s * y;
                self.r[(j + 1, col)] = -s * x + c * y;
            }
            self.r[(j + 1, j)] = 0.0;
        }
        for c in 0..k {
            self.r[(k - 1, c)] = 0.0;
        }
        self.cols.remove(q);
    }

    /// Solves `RᵀR s = rhs`.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut y = rhs.to_vec();
        for i in 0..k {
            let mut v = y[i];
            for l in 0..i {
                v -= self.r[(l, i)] * y[l];
            }
            y[i] = v / self.r[(i, i)];
        }
        for i in (0..k).rev() {
            let mut v = y[i];
            for l in i + 1..k {
                v -= self.r[(i, l)] * y[l];
            }
            y[i] = v / self.r[(i, i)];
        }
        y
    }
}

const GRAD_TOL: f64 = 1e-13;

impl Nnls {
    pub(crate) fn new(a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let scale: Vec<f64> = a
            .column_iter()
            .map(|c| {
                let n = c.norm();
                if n > 0.0 {
                    1.0 / n
                } else {
                    0.0
                }
            })
            .collect();
        let mut a = a.clone();
        for (j, s) in scale.iter().enumerate() {
            a.column_mut(j).scale_mut(*s);
        }
        let gram = a.tr_mul(&a);
        let atb = a.tr_mul(b);
        Nnls { a, b: b.clone(), scale, gram, atb }
    }

    fn passive_solve(&self, f: &Factor) -> Vec<f64> {
        let rhs: Vec<f64> = f.cols.iter().map(|&j| self.atb[j]).collect();
        let mut s = f.solve(&rhs);
        let mut resid = self.b.clone();
        for (&j, sj) in f.cols.iter().zip(&s) {
            resid.axpy(-sj, &self.a.column(j), 1.0);
        }
        let corr: Vec<f64> = f.cols.iter().map(|&j| self.a.column(j).dot(&resid)).collect();
        for (si, d) in s.iter_mut().zip(f.solve(&corr)) {
            *si += d;
        }
        s
    }

    /// Solves from a nonnegative starting point given in the original
    /// (unscaled) variables; returns the solution in the original variables.
    pub(crate) fn solve(&self, start: &[f64]) -> Vec<f64> {
        let nz = self.gram.ncols();
        let mut x = vec![0.0; nz];
        let mut f = Factor::new(nz);
        for (j, v) in start.iter().enumerate() {
            if *v > 0.0 && self.scale[j] > 0.0 && f.push(&self.gram, j) {
                x[j] = v / self.scale[j];
            }
        }
        let mut excluded = vec![false; nz];
        for j in 0..nz {
            if self.scale[j] == 0.0 {
                excluded[j] = true;
            }
        }
        self.settle(&mut x, &mut f, &mut excluded);
        for _ in 0..3 * nz + 10 {
            let gx = &self.gram * DVector::from_column_slice(&x);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..nz {
                if x[j] > 0.0 || excluded[j] || f.cols.contains(&j) {
                    continue;
                }
                let wj = self.atb[j] - gx[j];
                if wj > GRAD_TOL && best.is_none_or(|(_, b)| wj > b) {
                    best = Some((j, wj));
                }
            }
            let Some((j, _)) = best else { break };
            if !f.push(&self.gram, j) {
                excluded[j] = true;
                continue;
            }
            self.settle(&mut x, &mut f, &mut excluded);
        }
        x.iter().zip(&self.scale).map(|(v, s)| v * s).collect()
    }

    // Inner loop: move toward the passive least-squares solution until it is
    // strictly positive, dropping columns that hit zero.
    fn settle(&self, x: &mut [f64], f: &mut Factor, excluded: &mut [bool]) {
        loop {
            if f.len() == 0 {
                return;
            }
            let s = self.passive_solve(f);
            if s.iter().all(|v| *v > 0.0) {
                for (&j, v) in f.cols.iter().zip(&s) {
                    x[j] = *v;
                }
                return;
            }
            let mut alpha = 1.0_f64;
            for (&j, sj) in f.cols.iter().zip(&s) {
                if *sj <= 0.0 {
                    let denom = x[j] - sj;
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (&j, sj) in f.cols.iter().zip(&s) {
                x[j] += alpha * (sj - x[j]);
            }
            let mut q = 0;
            let mut removed = false;
            while q < f.len() {
                let j = f.cols[q];
                if x[j] <= 1e-300 {
                    x[j] = 0.0;
                    f.remove(q);
                    removed = true;
                } else {
                    q += 1;
                }
            }
            if removed {
                excluded.iter_mut().for_each(|e| *e = false);
            } else {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_simplex() {
        let w = [1.0, 2.0, 0.5];
        let z = project_weighted_simplex(&[3.0, -1.0, 0.2], &w);
        let s: f64 = z.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(z.iter().all(|v| *v >= 0.0));
        let z = project_weighted_simplex(&[0.5, 0.25, 0.0], &w);
        assert!((z[0] - 0.5).abs() < 1e-12 && (z[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn nnls_small_problem() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[1.0, -1.0, 0.0]);
        let x = Nnls::new(&a, &b).solve(&[0.0, 0.0]);
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn factor_delete_matches_refactor() {
        let a = DMatrix::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 + if i == j { 2.0 } else { 0.0 });
        let gram = a.tr_mul(&a);
        let mut f = Factor::new(4);
        for j in 0..4 {
            assert!(f.push(&gram, j));
        }
        f.remove(1);
        let rhs = [1.0, 2.0, 3.0];
        let s = f.solve(&rhs);
        let idx = [0, 2, 3];
        let sub = DMatrix::from_fn(3, 3, |i, j| gram[(idx[i], idx[j])]);
        let expect = sub.lu().solve(&DVector::from_row_slice(&rhs)).unwrap();
        for i in 0..3 {
            assert!((s[i] - expect[i]).abs() < 1e-9);
        }
    }
}
