//! Left-continuous BV functions, Radon measures made of node atoms plus a
//! piecewise-constant density, and Stieltjes integration over node-aligned
//! closed intervals.
//!
//! Conventions:
//! - `v(τ_k)` is the left limit `v(τ_k − 0)`; `v(t0 − 0)` is the node value at `τ_0`.
//! - `∫_{[a,b]} dμ` includes atoms at both `a` and `b`, so that
//!   `∫_{[a,b]} dp = p(b + 0) − p(a − 0)`.

use thiserror::Error;

use crate::problem::TimeGrid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("bounds [{a}, {b}] are not node indices with a <= b <= {last}")]
    Bounds { a: usize, b: usize, last: usize },
    #[error("{what}: expected length {expected}, got {got}")]
    Length { what: &'static str, expected: usize, got: usize },
    #[error("{0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("measure flagged nonnegative has negative mass")]
    Negative,
    #[error("left-continuity violated: node value at t0 differs from the exterior left value")]
    LeftContinuity,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Scalar Radon measure on the grid: atoms at nodes plus a density per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    grid: TimeGrid,
    atoms: Vec<f64>,
    density: Vec<f64>,
    nonnegative: bool,
}

impl SignedMeasure {
    pub fn new(grid: TimeGrid, atoms: Vec<f64>, density: Vec<f64>) -> Result<Self, MeasureError> {
        if atoms.len() != grid.num_nodes() {
            return Err(MeasureError::Length {
                what: "atoms",
                expected: grid.num_nodes(),
                got: atoms.len(),
            });
        }
        if density.len() != grid.num_cells() {
            return Err(MeasureError::Length {
                what: "density",
                expected: grid.num_cells(),
                got: density.len(),
            });
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite("atoms"));
        }
        if density.iter().any(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite("density"));
        }
        Ok(SignedMeasure { grid, atoms, density, nonnegative: false })
    }

    /// Like [`SignedMeasure::new`] but rejects negative atoms or density.
    pub fn nonnegative(
        grid: TimeGrid,
        atoms: Vec<f64>,
        density: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        let mut m = SignedMeasure::new(grid, atoms, density)?;
        if m.atoms.iter().chain(&m.density).any(|v| *v < 0.0) {
            return Err(MeasureError::Negative);
        }
        m.nonnegative = true;
        Ok(m)
    }

    pub fn zero(grid: TimeGrid) -> Self {
        let (n, c) = (grid.num_nodes(), grid.num_cells());
        SignedMeasure { grid, atoms: vec![0.0; n], density: vec![0.0; c], nonnegative: true }
    }

    /// Builds a measure from sparse `(node, weight)` atoms and a density.
    pub fn from_sparse(
        grid: TimeGrid,
        atoms: &[(usize, f64)],
        density: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        let mut dense = vec![0.0; grid.num_nodes()];
        for &(k, w) in atoms {
            let slot = dense.get_mut(k).ok_or(MeasureError::Bounds {
                a: k,
                b: k,
                last: grid.last(),
            })?;
            *slot += w;
        }
        SignedMeasure::new(grid, dense, density)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn atom(&self, node: usize) -> f64 {
        self.atoms[node]
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn is_flagged_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Nonzero atoms as `(node, weight)`.
    pub fn sparse_atoms(&self) -> Vec<(usize, f64)> {
        self.atoms.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(k, w)| (k, *w)).collect()
    }

    /// Mass of a single cell's absolutely continuous part.
    pub fn cell_mass(&self, cell: usize) -> f64 {
        self.density[cell] * self.grid.step(cell)
    }

    /// `∫_{[t0,t1]} dμ`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().sum::<f64>() + (0..self.grid.num_cells()).map(|k| self.cell_mass(k)).sum::<f64>()
    }

    /// `‖dμ‖ = Σ|atom| + Σ|density|·h`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.abs()).sum::<f64>()
            + (0..self.grid.num_cells()).map(|k| self.cell_mass(k).abs()).sum::<f64>()
    }

    /// Mass of the negative part.
    pub fn negative_mass(&self) -> f64 {
        self.atoms.iter().map(|a| (-a).max(0.0)).sum::<f64>()
            + (0..self.grid.num_cells()).map(|k| (-self.cell_mass(k)).max(0.0)).sum::<f64>()
    }

    pub fn scaled(&self, c: f64) -> SignedMeasure {
        SignedMeasure {
            grid: self.grid.clone(),
            atoms: self.atoms.iter().map(|a| a * c).collect(),
            density: self.density.iter().map(|d| d * c).collect(),
            nonnegative: self.nonnegative && c >= 0.0,
        }
    }

    pub fn plus(&self, other: &SignedMeasure) -> Result<SignedMeasure, MeasureError> {
        if self.grid != other.grid {
            return Err(MeasureError::Dimension("measures live on different grids".into()));
        }
        Ok(SignedMeasure {
            grid: self.grid.clone(),
            atoms: self.atoms.iter().zip(&other.atoms).map(|(a, b)| a + b).collect(),
            density: self.density.iter().zip(&other.density).map(|(a, b)| a + b).collect(),
            nonnegative: self.nonnegative && other.nonnegative,
        })
    }
}

/// Row-vector valued left-continuous BV function on the grid, linear inside
/// each cell between `v(τ_k + 0)` and `v(τ_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct BVFunction {
    grid: TimeGrid,
    node_values: Vec<Vec<f64>>,
    atoms: Vec<Vec<f64>>,
}

impl BVFunction {
    /// `node_values[k]` are left limits; `node_values[0]` must equal `exterior_left`.
    pub fn new(
        grid: TimeGrid,
        exterior_left: Vec<f64>,
        node_values: Vec<Vec<f64>>,
        atoms: Vec<Vec<f64>>,
    ) -> Result<Self, MeasureError> {
        let dim = exterior_left.len();
        if node_values.len() != grid.num_nodes() {
            return Err(MeasureError::Length {
                what: "node_values",
                expected: grid.num_nodes(),
                got: node_values.len(),
            });
        }
        if atoms.len() != grid.num_nodes() {
            return Err(MeasureError::Length {
                what: "atoms",
                expected: grid.num_nodes(),
                got: atoms.len(),
            });
        }
        if node_values.iter().chain(&atoms).any(|v| v.len() != dim) {
            return Err(MeasureError::Dimension(format!("all values must have length {dim}")));
        }
        if node_values.iter().chain(&atoms).chain(std::iter::once(&exterior_left)).flatten().any(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite("BV function"));
        }
        let scale = 1.0 + exterior_left.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if exterior_left.iter().zip(&node_values[0]).any(|(a, b)| (a - b).abs() > 1e-12 * scale) {
            return Err(MeasureError::LeftContinuity);
        }
        Ok(BVFunction { grid, node_values, atoms })
    }

    /// Builds the function from left limits and jumps; `p(t0−)` is `node_values[0]`.
    pub fn from_left_limits(
        grid: TimeGrid,
        node_values: Vec<Vec<f64>>,
        atoms: Vec<Vec<f64>>,
    ) -> Result<Self, MeasureError> {
        let ext = node_values.first().cloned().unwrap_or_default();
        BVFunction::new(grid, ext, node_values, atoms)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.node_values[0].len()
    }

    pub fn node_values(&self) -> &[Vec<f64>] {
        &self.node_values
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    /// `v(τ_k − 0) = v(τ_k)`.
    pub fn left_limit(&self, k: usize) -> &[f64] {
        &self.node_values[k]
    }

    /// `v(τ_k + 0)`.
    pub fn right_limit(&self, k: usize) -> Vec<f64> {
        self.node_values[k].iter().zip(&self.atoms[k]).map(|(v, a)| v + a).collect()
    }

    /// `[v](τ_k) = v(τ_k + 0) − v(τ_k − 0)`.
    pub fn jump(&self, k: usize) -> &[f64] {
        &self.atoms[k]
    }

    pub fn exterior_left(&self) -> &[f64] {
        &self.node_values[0]
    }

    pub fn exterior_right(&self) -> Vec<f64> {
        self.right_limit(self.grid.last())
    }

    /// Value at the cell midpoint.
    pub fn mid(&self, cell: usize) -> Vec<f64> {
        self.right_limit(cell)
            .iter()
            .zip(&self.node_values[cell + 1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Left-continuous evaluation at any `t ∈ [t0, t1]`.
    pub fn at(&self, t: f64) -> Option<Vec<f64>> {
        if let Some(k) = self.grid.node_index(t) {
            return Some(self.node_values[k].clone());
        }
        let k = self.grid.cell_of(t)?;
        let w = (t - self.grid.node(k)) / self.grid.step(k);
        let a = self.right_limit(k);
        Some(a.iter().zip(&self.node_values[k + 1]).map(|(a, b)| a + w * (b - a)).collect())
    }

    /// Total variation using the Euclidean norm of each increment.
    pub fn total_variation(&self) -> f64 {
        let jumps: f64 = self.atoms.iter().map(|a| norm(a)).sum();
        let cells: f64 = (0..self.grid.num_cells())
            .map(|k| {
                let a = self.right_limit(k);
                let d: Vec<f64> = self.node_values[k + 1].iter().zip(&a).map(|(b, a)| b - a).collect();
                norm(&d)
            })
            .sum();
        jumps + cells
    }

    pub fn scaled(&self, c: f64) -> BVFunction {
        let s = |rows: &[Vec<f64>]| rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        BVFunction { grid: self.grid.clone(), node_values: s(&self.node_values), atoms: s(&self.atoms) }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrand sampled at the grid: one-sided limits at every node plus an
/// optional value at the node itself.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSampled {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    point: Vec<Option<Vec<f64>>>,
}

impl NodeSampled {
    /// A function continuous at every node.
    pub fn continuous(values: Vec<Vec<f64>>) -> Self {
        let point = vec![None; values.len()];
        NodeSampled { left: values.clone(), right: values, point }
    }

    pub fn constant(grid: &TimeGrid, value: Vec<f64>) -> Self {
        NodeSampled::continuous(vec![value; grid.num_nodes()])
    }

    /// `left[k] = φ(τ_k − 0)`, `right[k] = φ(τ_k + 0)`. Exterior entries
    /// `left[0]` and `right[N]` are only used as fallbacks.
    pub fn from_sides(left: Vec<Vec<f64>>, right: Vec<Vec<f64>>) -> Self {
        let point = vec![None; left.len()];
        NodeSampled { left, right, point }
    }

    /// Sets the value taken at the node itself, used against an atom there.
    pub fn with_point(mut self, node: usize, value: Vec<f64>) -> Self {
        self.point[node] = Some(value);
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.left.len()
    }

    pub fn dim(&self) -> usize {
        self.left.first().map_or(0, Vec::len)
    }

    /// Value paired with an atom at `k`, and whether the pairing was
    /// convention-sensitive (φ jumps at `k` and has no point value).
    pub fn at_atom(&self, k: usize) -> (Vec<f64>, bool) {
        if let Some(v) = &self.point[k] {
            return (v.clone(), false);
        }
        let last = self.left.len() - 1;
        if k == 0 {
            return (self.right[0].clone(), false);
        }
        if k == last {
            return (self.left[last].clone(), false);
        }
        if self.left[k] == self.right[k] {
            (self.left[k].clone(), false)
        } else {
            let avg = self.left[k].iter().zip(&self.right[k]).map(|(a, b)| 0.5 * (a + b)).collect();
            (avg, true)
        }
    }

    fn cell_trapezoid(&self, cell: usize, density: f64, h: f64) -> Vec<f64> {
        self.right[cell]
            .iter()
            .zip(&self.left[cell + 1])
            .map(|(a, b)| 0.5 * h * (a + b) * density)
            .collect()
    }
}

/// Result of a Stieltjes integral, with the atom nodes where the pairing
/// convention mattered.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesValue {
    pub value: Vec<f64>,
    pub sensitive_nodes: Vec<usize>,
}

fn check_phi(phi: &NodeSampled, mu: &SignedMeasure) -> Result<(), MeasureError> {
    if phi.num_nodes() != mu.grid.num_nodes() {
        return Err(MeasureError::Length {
            what: "integrand samples",
            expected: mu.grid.num_nodes(),
            got: phi.num_nodes(),
        });
    }
    Ok(())
}

/// `∫_{[τ_a, τ_b]} φ dμ`, atoms at both ends included, trapezoid on the density.
pub fn stieltjes_integral(
    phi: &NodeSampled,
    mu: &SignedMeasure,
    a: usize,
    b: usize,
) -> Result<StieltjesValue, MeasureError> {
    let last = mu.grid.last();
    if a > b || b > last {
        return Err(MeasureError::Bounds { a, b, last });
    }
    check_phi(phi, mu)?;
    let mut value = vec![0.0; phi.dim()];
    let mut sensitive_nodes = Vec::new();
    for k in a..=b {
        let w = mu.atoms[k];
        if w != 0.0 {
            let (v, sensitive) = phi.at_atom(k);
            if sensitive {
                sensitive_nodes.push(k);
            }
            for (acc, vi) in value.iter_mut().zip(&v) {
                *acc += w * vi;
            }
        }
    }
    for cell in a..b {
        let d = mu.density[cell];
        if d != 0.0 {
            for (acc, vi) in value.iter_mut().zip(phi.cell_trapezoid(cell, d, mu.grid.step(cell))) {
                *acc += vi;
            }
        }
    }
    Ok(StieltjesValue { value, sensitive_nodes })
}

/// Running integrals from `t0`: for every node `k`, the pair
/// (`∫_{[t0, τ_k)}`, `∫_{[t0, τ_k]}`), plus the convention-sensitive nodes.
pub fn stieltjes_prefix(
    phi: &NodeSampled,
    mu: &SignedMeasure,
) -> Result<(Vec<(Vec<f64>, Vec<f64>)>, Vec<usize>), MeasureError> {
    check_phi(phi, mu)?;
    let dim = phi.dim();
    let mut acc = vec![0.0; dim];
    let mut out = Vec::with_capacity(mu.grid.num_nodes());
    let mut sensitive = Vec::new();
    for k in 0..mu.grid.num_nodes() {
        if k > 0 {
            let d = mu.density[k - 1];
            if d != 0.0 {
                for (a, v) in acc.iter_mut().zip(phi.cell_trapezoid(k - 1, d, mu.grid.step(k - 1))) {
                    *a += v;
                }
            }
        }
        let before = acc.clone();
        let w = mu.atoms[k];
        if w != 0.0 {
            let (v, s) = phi.at_atom(k);
            if s {
                sensitive.push(k);
            }
            for (a, vi) in acc.iter_mut().zip(&v) {
                *a += w * vi;
            }
        }
        out.push((before, acc.clone()));
    }
    Ok((out, sensitive))
}

/// `p` with `p(t0−) = base`, `[p] = atoms of dμ`, and AC part `∫ density`.
pub fn cumulative(mu: &SignedMeasure, base: f64) -> BVFunction {
    let grid = mu.grid.clone();
    let mut node_values = Vec::with_capacity(grid.num_nodes());
    let mut v = base;
    node_values.push(vec![v]);
    for k in 0..grid.num_cells() {
        v += mu.atoms[k] + mu.cell_mass(k);
        node_values.push(vec![v]);
    }
    let atoms = mu.atoms.iter().map(|a| vec![*a]).collect();
    BVFunction { grid, node_values, atoms }
}

/// `‖dμ‖`.
pub fn total_variation(mu: &SignedMeasure) -> f64 {
    mu.total_variation()
}
