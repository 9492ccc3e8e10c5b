//! Approximate separation of polyhedral cones.
//!
//! A cone is given on the predual side by generators: `H = cone{g_j}` and
//! `Ω̄ = {x : ⟨g_j, x⟩ ≥ 0 ∀j}`, so `H* = Ω̄` by construction. One cone may
//! be closed; the others are open (`Ω = int Ω̄`) and carry an interior point
//! `x⁰`. The intersection of the cones is empty exactly when there are
//! `h_i ∈ H_i` with `Σ_{open} ⟨x⁰_i, h_i⟩ = 1` and `‖Σ h_i‖` arbitrarily
//! small; both sides are decided by linear programming.

pub mod lp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use lp::{Cmp, LinearProgram, LpOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("cone {cone} has no generators")]
    NoGenerators { cone: usize },
    #[error("cone {cone}: expected dimension {expected}, found {found}")]
    Dimension { cone: usize, expected: usize, found: usize },
    #[error("cone {cone}: x0 is not strictly interior (⟨g_{generator}, x0⟩ = {value})")]
    NotInterior { cone: usize, generator: usize, value: f64 },
    #[error("open cone {cone} needs an interior point x0")]
    MissingInteriorPoint { cone: usize },
    #[error("invalid cone family: {0}")]
    Layout(String),
    #[error("section is unbounded: x0 is not interior to the dual side")]
    Unbounded,
    #[error("linear program failed: {0}")]
    Solver(String),
}

/// `H = cone{g_j}` with its induced cone `Ω̄ = H*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyCone {
    pub generators: Vec<Vec<f64>>,
    pub open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl PolyCone {
    /// Validates dimensions and, when given, strict interiority of `x0`.
    pub fn new(generators: Vec<Vec<f64>>, open: bool, x0: Option<Vec<f64>>) -> Result<Self, ConeError> {
        let c = PolyCone { generators, open, x0 };
        c.validate(0)?;
        Ok(c)
    }

    pub fn closed(generators: Vec<Vec<f64>>) -> Result<Self, ConeError> {
        Self::new(generators, false, None)
    }

    pub fn open_with(generators: Vec<Vec<f64>>, x0: Vec<f64>) -> Result<Self, ConeError> {
        Self::new(generators, true, Some(x0))
    }

    pub fn dim(&self) -> usize {
        self.generators.first().map_or(0, Vec::len)
    }

    fn validate(&self, cone: usize) -> Result<(), ConeError> {
        let d = self.dim();
        if self.generators.is_empty() || d == 0 {
            return Err(ConeError::NoGenerators { cone });
        }
        for g in &self.generators {
            if g.len() != d {
                return Err(ConeError::Dimension { cone, expected: d, found: g.len() });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(ConeError::Layout(format!("cone {cone} has a non-finite generator")));
            }
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                return Err(ConeError::Dimension { cone, expected: d, found: x0.len() });
            }
            for (generator, g) in self.generators.iter().enumerate() {
                let value = dot(g, x0);
                if value <= 0.0 {
                    return Err(ConeError::NotInterior { cone, generator, value });
                }
            }
        }
        Ok(())
    }

    /// `x ∈ Ω̄`, or `x ∈ Ω` for an open cone.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.generators.iter().all(|g| {
            let v = dot(g, x);
            if self.open {
                v > 0.0
            } else {
                v >= 0.0
            }
        })
    }

    /// The same cone with every generator scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> PolyCone {
        PolyCone {
            generators: self.generators.iter().map(|g| g.iter().map(|v| v * c).collect()).collect(),
            open: self.open,
            x0: self.x0.clone(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// Checks the family: common dimension, at most one closed cone, at least
/// one open cone. Returns the dimension.
fn validate_family(cones: &[PolyCone]) -> Result<usize, ConeError> {
    let first = cones.first().ok_or_else(|| ConeError::Layout("no cones".into()))?;
    let d = first.dim();
    for (i, c) in cones.iter().enumerate() {
        c.validate(i)?;
        if c.dim() != d {
            return Err(ConeError::Dimension { cone: i, expected: d, found: c.dim() });
        }
    }
    let closed = cones.iter().filter(|c| !c.open).count();
    if closed > 1 {
        return Err(ConeError::Layout(format!("{closed} closed cones; at most one is allowed")));
    }
    if closed == cones.len() {
        return Err(ConeError::Layout("at least one open cone is required".into()));
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intersection {
    pub nonempty: bool,
    /// `t*` of `max t` s.t. closed generators `≥ 0`, open generators `≥ t`, `‖x‖∞ ≤ 1`.
    pub margin: f64,
    pub witness: Option<Vec<f64>>,
}

const MARGIN_TOL: f64 = 1e-12;

/// Decides whether the closed cone meets every open cone.
pub fn intersection_nonempty(cones: &[PolyCone]) -> Result<Intersection, ConeError> {
    let d = validate_family(cones)?;
    let t = d;
    let mut lp = LinearProgram::new(d + 1);
    let mut cost = vec![0.0; d + 1];
    cost[t] = -1.0;
    lp.minimize(cost);
    for j in 0..=d {
        lp.set_free(j);
    }
    for c in cones {
        for g in &c.generators {
            let mut row = g.clone();
            row.push(if c.open { -1.0 } else { 0.0 });
            lp.add_row(row, Cmp::Ge, 0.0);
        }
    }
    for i in 0..=d {
        let mut row = vec![0.0; d + 1];
        row[i] = 1.0;
        lp.add_row(row.clone(), Cmp::Le, 1.0);
        if i < d {
            lp.add_row(row, Cmp::Ge, -1.0);
        }
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let margin = x[t];
            let nonempty = margin > MARGIN_TOL;
            Ok(Intersection { nonempty, margin, witness: nonempty.then(|| x[..d].to_vec()) })
        }
        other => Err(ConeError::Solver(format!("{other:?}"))),
    }
}

/// Separating functionals `h_i = Σ_j μ_ij g_ij`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Separation {
    /// LP optimum of `‖Σ h_i‖₁`.
    pub value: f64,
    pub success: bool,
    pub h: Vec<Vec<f64>>,
    /// Generator coefficients `μ_ij ≥ 0`.
    pub coefficients: Vec<Vec<f64>>,
}

/// Finds `h_i ∈ H_i` with `Σ_{open} ⟨x⁰_i, h_i⟩ = 1` minimizing
/// `‖Σ h_i‖₁`; succeeds when the optimum is below `eps`.
pub fn approx_separate(cones: &[PolyCone], eps: f64) -> Result<Separation, ConeError> {
    let d = validate_family(cones)?;
    if !(eps > 0.0) {
        return Err(ConeError::Layout(format!("eps must be positive, got {eps}")));
    }
    let mut offsets = Vec::with_capacity(cones.len());
    let mut nmu = 0;
    for (i, c) in cones.iter().enumerate() {
        if c.open && c.x0.is_none() {
            return Err(ConeError::MissingInteriorPoint { cone: i });
        }
        offsets.push(nmu);
        nmu += c.generators.len();
    }
    let nv = nmu + d;
    let mut lp = LinearProgram::new(nv);
    let mut cost = vec![0.0; nv];
    cost[nmu..].iter_mut().for_each(|c| *c = 1.0);
    lp.minimize(cost);
    let mut norm_row = vec![0.0; nv];
    for (i, c) in cones.iter().enumerate() {
        if let (true, Some(x0)) = (c.open, &c.x0) {
            for (j, g) in c.generators.iter().enumerate() {
                norm_row[offsets[i] + j] = dot(x0, g);
            }
        }
    }
    lp.add_row(norm_row, Cmp::Eq, 1.0);
    for k in 0..d {
        let mut pos = vec![0.0; nv];
        for (i, c) in cones.iter().enumerate() {
            for (j, g) in c.generators.iter().enumerate() {
                pos[offsets[i] + j] = g[k];
            }
        }
        let neg: Vec<f64> = pos.iter().map(|v| -v).collect();
        let (mut pos, mut neg) = (pos, neg);
        pos[nmu + k] = -1.0;
        neg[nmu + k] = -1.0;
        lp.add_row(pos, Cmp::Le, 0.0);
        lp.add_row(neg, Cmp::Le, 0.0);
    }
    let (x, _) = match lp.solve() {
        LpOutcome::Optimal { x, value } => (x, value),
        other => return Err(ConeError::Solver(format!("{other:?}"))),
    };
    let mut coefficients = Vec::with_capacity(cones.len());
    let mut h = Vec::with_capacity(cones.len());
    for (i, c) in cones.iter().enumerate() {
        let mu: Vec<f64> = x[offsets[i]..offsets[i] + c.generators.len()].iter().map(|v| v.max(0.0)).collect();
        let mut hi = vec![0.0; d];
        for (m, g) in mu.iter().zip(&c.generators) {
            hi.iter_mut().zip(g).for_each(|(a, b)| *a += m * b);
        }
        coefficients.push(mu);
        h.push(hi);
    }
    let mut sum = vec![0.0; d];
    for hi in &h {
        sum.iter_mut().zip(hi).for_each(|(a, b)| *a += b);
    }
    let value = l1(&sum);
    Ok(Separation { value, success: value < eps, h, coefficients })
}

/// The two-cone case (`Ω̄_0` closed, `Ω_1` open) as its own program:
/// `h_0 ∈ H_0`, `h_1 ∈ H_1`, `⟨x⁰_1, h_1⟩ = 1`, minimize `‖h_0 + h_1‖₁`.
pub fn separate_two(closed: &PolyCone, open: &PolyCone, eps: f64) -> Result<Separation, ConeError> {
    closed.validate(0)?;
    open.validate(1)?;
    if closed.open || !open.open {
        return Err(ConeError::Layout("expected one closed and one open cone".into()));
    }
    let x0 = open.x0.as_ref().ok_or(ConeError::MissingInteriorPoint { cone: 1 })?;
    let d = closed.dim();
    if open.dim() != d {
        return Err(ConeError::Dimension { cone: 1, expected: d, found: open.dim() });
    }
    let (r0, r1) = (closed.generators.len(), open.generators.len());
    // Variables: a (r0), b (r1), then d pairs (u⁺, u⁻) with h_0 + h_1 = u⁺ − u⁻.
    let nv = r0 + r1 + 2 * d;
    let mut lp = LinearProgram::new(nv);
    let mut cost = vec![0.0; nv];
    cost[r0 + r1..].iter_mut().for_each(|c| *c = 1.0);
    lp.minimize(cost);
    let mut norm = vec![0.0; nv];
    for (j, g) in open.generators.iter().enumerate() {
        norm[r0 + j] = dot(x0, g);
    }
    lp.add_row(norm, Cmp::Eq, 1.0);
    for k in 0..d {
        let mut row = vec![0.0; nv];
        for (j, g) in closed.generators.iter().enumerate() {
            row[j] = g[k];
        }
        for (j, g) in open.generators.iter().enumerate() {
            row[r0 + j] = g[k];
        }
        row[r0 + r1 + 2 * k] = -1.0;
        row[r0 + r1 + 2 * k + 1] = 1.0;
        lp.add_row(row, Cmp::Eq, 0.0);
    }
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        other => return Err(ConeError::Solver(format!("{other:?}"))),
    };
    let combine = |gens: &[Vec<f64>], mu: &[f64]| {
        let mut h = vec![0.0; d];
        for (m, g) in mu.iter().zip(gens) {
            h.iter_mut().zip(g).for_each(|(a, b)| *a += m * b);
        }
        h
    };
    let (a, b) = (x[..r0].to_vec(), x[r0..r0 + r1].to_vec());
    let h0 = combine(&closed.generators, &a);
    let h1 = combine(&open.generators, &b);
    let value = h0.iter().zip(&h1).map(|(p, q)| (p + q).abs()).sum();
    Ok(Separation { value, success: value < eps, h: vec![h0, h1], coefficients: vec![a, b] })
}

/// `Sec H = {h ∈ H : ⟨x⁰, h⟩ = 1}` and its `‖·‖₁` bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionBound {
    pub bound: f64,
    pub empty: bool,
}

/// Bounds `‖h‖₁` over the section of `H` at `x⁰`. Unboundedness of any
/// coordinate LP means `x⁰` is not interior and is an input error.
pub fn sec_bounded(cone: &PolyCone, x0: &[f64]) -> Result<SectionBound, ConeError> {
    cone.validate(0)?;
    let d = cone.dim();
    if x0.len() != d {
        return Err(ConeError::Dimension { cone: 0, expected: d, found: x0.len() });
    }
    let r = cone.generators.len();
    for k in 0..d {
        for sign in [1.0, -1.0] {
            let mut lp = LinearProgram::new(r);
            lp.minimize(cone.generators.iter().map(|g| -sign * g[k]).collect());
            lp.add_row(cone.generators.iter().map(|g| dot(x0, g)).collect(), Cmp::Eq, 1.0);
            match lp.solve() {
                LpOutcome::Optimal { .. } => {}
                LpOutcome::Infeasible => return Ok(SectionBound { bound: 0.0, empty: true }),
                LpOutcome::Unbounded => return Err(ConeError::Unbounded),
            }
        }
    }
    // A bounded section is the polytope spanned by g_j / ⟨x⁰, g_j⟩.
    let bound = cone
        .generators
        .iter()
        .filter_map(|g| {
            let s = dot(x0, g);
            (s > 0.0).then(|| l1(g) / s)
        })
        .fold(0.0, f64::max);
    Ok(SectionBound { bound, empty: false })
}

/// Signed distance-like margin of the family: the best, over faces of the
/// unit `∞`-ball, of the smallest normalized generator value. Positive when
/// all cones share an interior direction, negative when they are strictly
/// apart, and near zero when they touch only along faces.
pub fn signed_margin(cones: &[PolyCone]) -> Result<f64, ConeError> {
    let d = validate_family(cones)?;
    let gens: Vec<Vec<f64>> = cones
        .iter()
        .flat_map(|c| c.generators.iter())
        .filter_map(|g| {
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            (n > 0.0).then(|| g.iter().map(|v| v / n).collect())
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for face in 0..2 * d {
        let (axis, sign) = (face / 2, if face % 2 == 0 { 1.0 } else { -1.0 });
        let mut lp = LinearProgram::new(d + 1);
        let mut cost = vec![0.0; d + 1];
        cost[d] = -1.0;
        lp.minimize(cost);
        for j in 0..=d {
            lp.set_free(j);
        }
        for g in &gens {
            let mut row = g.clone();
            row.push(-1.0);
            lp.add_row(row, Cmp::Ge, 0.0);
        }
        for i in 0..d {
            let mut row = vec![0.0; d + 1];
            row[i] = 1.0;
            if i == axis {
                lp.add_row(row, Cmp::Eq, sign);
            } else {
                lp.add_row(row.clone(), Cmp::Le, 1.0);
                lp.add_row(row, Cmp::Ge, -1.0);
            }
        }
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => best = best.max(x[d]),
            other => return Err(ConeError::Solver(format!("{other:?}"))),
        }
    }
    Ok(best)
}

/// Instances with `|signed_margin| ≤ DEGENERATE_BAND` are not adjudicated.
pub const DEGENERATE_BAND: f64 = 1e-9;

/// A random family: one closed cone and one to three open cones around
/// random centers, in dimension 2 to 6 with 1 to 5 generators each. Half of
/// the families put the last center near the opposite of the first.
pub fn random_instance(seed: u64) -> Vec<PolyCone> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(2..=6);
    let count = rng.gen_range(2..=4);
    let unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.1 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    };
    let mut centers: Vec<Vec<f64>> = (0..count).map(|_| unit(&mut rng)).collect();
    if rng.gen_bool(0.5) {
        let noise = unit(&mut rng);
        let c: Vec<f64> = centers[0].iter().zip(&noise).map(|(a, b)| -a + 0.05 * b).collect();
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        centers[count - 1] = c.into_iter().map(|x| x / n).collect();
    }
    centers
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let r = rng.gen_range(1..=5);
            let mut gens = Vec::with_capacity(r);
            while gens.len() < r {
                let noise = unit(&mut rng);
                let g: Vec<f64> = c.iter().zip(&noise).map(|(a, b)| a + 0.6 * b).collect();
                let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if dot(&g, &c) > 0.1 * gn {
                    gens.push(g);
                }
            }
            let open = i > 0;
            PolyCone { generators: gens, open, x0: open.then_some(c) }
        })
        .collect()
}

/// Rejection-sampling oracle: whether any of `samples` random directions
/// lies in every cone.
pub fn sample_intersection(cones: &[PolyCone], samples: usize, seed: u64) -> Option<Vec<f64>> {
    let d = cones.first()?.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        x.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        if cones.iter().all(|c| c.contains(&x)) {
            return Some(x);
        }
    }
    None
}
