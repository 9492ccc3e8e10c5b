//! Multiplier certificates for the local minimum principle and the checker
//! that verifies them condition by condition.

mod check;
mod pontryagin;
mod report;
mod state;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::measures::{BVFunction, MeasureError, SignedMeasure};
use crate::problem::{ProblemError, TimeGrid};

pub use check::{
    check_adjoint, check_certificate, check_jump_inclusion, check_nontriviality,
    check_signs_slackness, check_stationarity, check_transversality, CellSamples, SideSample,
};
pub use pontryagin::Pontryagin;
pub use report::{Diagnostics, NormalizedSummary, Report, ReportEntry, Verdict};
pub use state::{merge_state_constraint, with_state_directions, MergedStateForm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmpError {
    #[error("invalid certificate: {0}")]
    Certificate(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("the constraint depends on the control; the state-constraint form needs G = g(x)")]
    NotStateConstraint,
}

/// Where an entry of `ŝ` lives: an atom of `dη` at a node, or the density of
/// `dη` on a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Support {
    Atom(usize),
    Cell(usize),
}

/// `ŝ` on one support element: an explicit row vector, or convex weights over
/// the local jump-direction generators.
///
/// On a cell the control has a single branch, so weights there have length 1
/// and `ŝ` follows `G_x` along the cell.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpVector {
    Vector(Vec<f64>),
    Weights(Vec<f64>),
}

/// Certificate `(α0, λ, dη, ŝ, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSet {
    pub alpha0: f64,
    /// Density of `λ` per cell.
    pub lambda: Vec<f64>,
    pub eta: SignedMeasure,
    pub s: BTreeMap<Support, JumpVector>,
    pub p: BVFunction,
}

impl MultiplierSet {
    pub fn new(
        alpha0: f64,
        lambda: Vec<f64>,
        eta: SignedMeasure,
        s: BTreeMap<Support, JumpVector>,
        p: BVFunction,
    ) -> Result<Self, LmpError> {
        let grid = p.grid();
        if eta.grid() != grid {
            return Err(LmpError::Certificate("eta and p live on different grids".into()));
        }
        if lambda.len() != grid.num_cells() {
            return Err(LmpError::Certificate(format!(
                "lambda has {} entries for {} cells",
                lambda.len(),
                grid.num_cells()
            )));
        }
        if !alpha0.is_finite() || lambda.iter().any(|v| !v.is_finite()) {
            return Err(LmpError::Certificate("alpha0 and lambda must be finite".into()));
        }
        for (key, v) in &s {
            let ok = match *key {
                Support::Atom(k) => k < grid.num_nodes(),
                Support::Cell(k) => k < grid.num_cells(),
            };
            if !ok {
                return Err(LmpError::Certificate(format!("s entry {key:?} is off the grid")));
            }
            let vals = match v {
                JumpVector::Vector(x) | JumpVector::Weights(x) => x,
            };
            if vals.iter().any(|x| !x.is_finite()) {
                return Err(LmpError::Certificate(format!("s entry {key:?} is not finite")));
            }
        }
        Ok(MultiplierSet { alpha0, lambda, eta, s, p })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.p.grid()
    }

    /// `‖λ‖₁ = Σ |λ_k| h_k`.
    pub fn lambda_l1(&self) -> f64 {
        let g = self.grid();
        self.lambda.iter().enumerate().map(|(k, l)| l.abs() * g.step(k)).sum()
    }

    /// `ν = α0 + ‖λ‖₁ + ∫dη`.
    pub fn nu(&self) -> f64 {
        self.alpha0 + self.lambda_l1() + self.eta.total_mass()
    }

    /// Multiplies every multiplier by `c`; weights in `ŝ` are unchanged.
    pub fn scaled(&self, c: f64) -> MultiplierSet {
        MultiplierSet {
            alpha0: self.alpha0 * c,
            lambda: self.lambda.iter().map(|l| l * c).collect(),
            eta: self.eta.scaled(c),
            s: self.s.clone(),
            p: self.p.scaled(c),
        }
    }

    /// The certificate divided by `ν`, or `None` when `ν ≤ 0`.
    pub fn normalized(&self) -> Option<MultiplierSet> {
        let nu = self.nu();
        (nu > 0.0).then(|| self.scaled(1.0 / nu))
    }
}

/// Tolerances for the phase set and the per-condition verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// `δ` in `N_{δ,ε}(G)`.
    pub delta: f64,
    /// `ε` in `N_{δ,ε}(G)`.
    pub eps: f64,
    /// Signs, support, inclusion, transversality.
    pub structural: f64,
    pub slackness: f64,
    /// Integral residuals pass below `max(integral_floor, integral_factor · h · scale)`.
    pub integral_factor: f64,
    pub integral_floor: f64,
    /// Fixed integral threshold, replacing the grid-scaled one.
    pub integral_override: Option<f64>,
    /// Lower bound for `ν`.
    pub positive: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            delta: 1e-8,
            eps: 1e-8,
            structural: 1e-7,
            slackness: 1e-7,
            integral_factor: 10.0,
            integral_floor: 1e-7,
            integral_override: None,
            positive: 1e-8,
        }
    }
}

impl Tolerances {
    /// Defaults for trajectories obtained numerically.
    pub fn numerical() -> Self {
        Tolerances { delta: 1e-6, eps: 1e-6, ..Tolerances::default() }
    }

    pub fn with_phase(mut self, delta: f64, eps: f64) -> Self {
        self.delta = delta;
        self.eps = eps;
        self
    }
}
