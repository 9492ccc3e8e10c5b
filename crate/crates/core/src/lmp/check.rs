use crate::geometry::{self, ContactSet};
use crate::measures::{norm, stieltjes_prefix, NodeSampled, SignedMeasure};
use crate::par;
use crate::problem::{dynamics_defect, NodeSide, ProblemDef, ProblemError, Trajectory};

use super::pontryagin::row_times;
use super::{
    Diagnostics, JumpVector, LmpError, MultiplierSet, NormalizedSummary, Report, ReportEntry,
    Support, Tolerances,
};

/// Problem data evaluated at one point of the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SideSample {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub g: f64,
    pub g_x: Vec<f64>,
    pub g_u: Vec<f64>,
    pub f_x: Vec<Vec<f64>>,
    pub f_u: Vec<Vec<f64>>,
}

impl SideSample {
    pub fn eval(p: &ProblemDef, x: &[f64], u: &[f64]) -> Result<Self, crate::expr::ExprError> {
        Ok(SideSample {
            x: x.to_vec(),
            u: u.to_vec(),
            g: p.eval_g(x, u)?,
            g_x: p.eval_g_x(x, u)?,
            g_u: p.eval_g_u(x, u)?,
            f_x: p.eval_f_x(x, u)?,
            f_u: p.eval_f_u(x, u)?,
        })
    }
}

/// Samples at `τ_k⁺`, the midpoint, and `τ_{k+1}⁻` of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSamples {
    pub a: SideSample,
    pub mid: SideSample,
    pub b: SideSample,
}

impl CellSamples {
    /// Evaluates every cell of `tr`, in parallel when enabled.
    pub fn collect(p: &ProblemDef, tr: &Trajectory) -> Result<Vec<CellSamples>, ProblemError> {
        p.check_compatible(tr)?;
        par::try_map_indices(tr.grid().num_cells(), |k| {
            let err = |source| ProblemError::CellEval { cell: k, source };
            let (xa, ua) = tr.at_side(NodeSide::Right(k));
            let (xb, ub) = tr.at_side(NodeSide::Left(k + 1));
            Ok(CellSamples {
                a: SideSample::eval(p, xa, ua).map_err(err)?,
                mid: SideSample::eval(p, &tr.state_mid(k), &tr.control_mid(k)).map_err(err)?,
                b: SideSample::eval(p, xb, ub).map_err(err)?,
            })
        })
    }
}

struct Ctx<'a> {
    p: &'a ProblemDef,
    tr: &'a Trajectory,
    ms: &'a MultiplierSet,
    tol: &'a Tolerances,
    cells: Vec<CellSamples>,
}

impl<'a> Ctx<'a> {
    fn new(
        p: &'a ProblemDef,
        tr: &'a Trajectory,
        ms: &'a MultiplierSet,
        tol: &'a Tolerances,
    ) -> Result<Self, LmpError> {
        if ms.grid() != tr.grid() {
            return Err(LmpError::Certificate("certificate grid differs from the trajectory grid".into()));
        }
        if ms.p.dim() != p.n() {
            return Err(LmpError::Certificate(format!(
                "p has dimension {}, expected n = {}",
                ms.p.dim(),
                p.n()
            )));
        }
        let cells = CellSamples::collect(p, tr)?;
        Ok(Ctx { p, tr, ms, tol, cells })
    }

    fn n(&self) -> usize {
        self.p.n()
    }

    /// `H_x + λ G_x` at both sides of every cell.
    fn ac_integrand(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nodes = self.tr.grid().num_nodes();
        let mut left = vec![vec![0.0; self.n()]; nodes];
        let mut right = left.clone();
        for (k, c) in self.cells.iter().enumerate() {
            let lam = self.ms.lambda[k];
            let pa = self.ms.p.right_limit(k);
            let pb = self.ms.p.left_limit(k + 1);
            right[k] = hbar_x(&c.a, &pa, lam);
            left[k + 1] = hbar_x(&c.b, pb, lam);
        }
        left[0] = right[0].clone();
        let last = nodes - 1;
        right[last] = left[last].clone();
        (left, right)
    }

    fn integral_scale(&self) -> f64 {
        let (l, r) = self.ac_integrand();
        l.iter().chain(&r).map(|v| norm(v)).fold(1.0, f64::max)
    }

    fn integral_threshold(&self) -> f64 {
        self.tol.integral_override.unwrap_or_else(|| {
            self.tol
                .integral_floor
                .max(self.tol.integral_factor * self.tr.grid().max_step() * self.integral_scale())
        })
    }

    fn node_generators(&self, k: usize) -> Result<Vec<Vec<f64>>, LmpError> {
        let set = geometry::jump_directions_at_node(self.p, self.tr, k, self.tol.delta, self.tol.eps)
            .map_err(ProblemError::from)?;
        Ok(set.generators)
    }

    fn mid_generators(&self, cell: usize) -> Result<Vec<Vec<f64>>, LmpError> {
        let set = geometry::jump_directions_mid(self.p, self.tr, cell, self.tol.delta, self.tol.eps)
            .map_err(ProblemError::from)?;
        Ok(set.generators)
    }

    /// `ŝ` as a node-sampled integrand against `dη`, plus the support
    /// elements where it could not be formed.
    fn s_integrand(&self) -> Result<(NodeSampled, Vec<String>), LmpError> {
        let n = self.n();
        let grid = self.tr.grid();
        let mut problems = Vec::new();
        let mut left = vec![vec![0.0; n]; grid.num_nodes()];
        let mut right = left.clone();
        for k in 0..grid.num_cells() {
            if self.ms.eta.density()[k] == 0.0 {
                continue;
            }
            let c = &self.cells[k];
            match self.ms.s.get(&Support::Cell(k)) {
                Some(JumpVector::Vector(v)) if v.len() == n => {
                    right[k] = v.clone();
                    left[k + 1] = v.clone();
                }
                Some(JumpVector::Weights(w)) if w.len() == 1 => {
                    right[k] = c.a.g_x.iter().map(|g| w[0] * g).collect();
                    left[k + 1] = c.b.g_x.iter().map(|g| w[0] * g).collect();
                }
                Some(_) => problems.push(format!("s on cell {k} has the wrong length")),
                None => problems.push(format!("s missing on cell {k}")),
            }
        }
        left[0] = right[0].clone();
        let last = grid.last();
        right[last] = left[last].clone();
        let mut phi = NodeSampled::from_sides(left, right);
        for (k, _) in self.ms.eta.sparse_atoms() {
            let value = match self.ms.s.get(&Support::Atom(k)) {
                Some(JumpVector::Vector(v)) if v.len() == n => v.clone(),
                Some(JumpVector::Weights(c)) => {
                    let gens = self.node_generators(k)?;
                    if gens.len() == c.len() {
                        let mut v = vec![0.0; n];
                        for (ci, g) in c.iter().zip(&gens) {
                            for (vi, gi) in v.iter_mut().zip(g) {
                                *vi += ci * gi;
                            }
                        }
                        v
                    } else {
                        problems.push(format!(
                            "s weights at node {k} do not match the {} local generators",
                            gens.len()
                        ));
                        vec![0.0; n]
                    }
                }
                Some(_) => {
                    problems.push(format!("s at node {k} has the wrong length"));
                    vec![0.0; n]
                }
                None => {
                    problems.push(format!("s missing at node {k}"));
                    vec![0.0; n]
                }
            };
            phi = phi.with_point(k, value);
        }
        Ok((phi, problems))
    }
}

fn hbar_x(s: &SideSample, p: &[f64], lambda: f64) -> Vec<f64> {
    let mut v = row_times(p, &s.f_x);
    for (vi, g) in v.iter_mut().zip(&s.g_x) {
        *vi += lambda * g;
    }
    v
}

fn hbar_u(s: &SideSample, p: &[f64], lambda: f64) -> Vec<f64> {
    let mut v = row_times(p, &s.f_u);
    for (vi, g) in v.iter_mut().zip(&s.g_u) {
        *vi += lambda * g;
    }
    v
}

/// Largest `‖r‖` over both sides of every node, where
/// `r(t) = p(t) − p(t0−) + ∫_{t0}^{t} a dτ + ∫_{[t0,t]} φ dμ` summed over `pairs`.
pub(crate) fn adjoint_residual(
    p: &crate::measures::BVFunction,
    ac: &NodeSampled,
    pairs: &[(&NodeSampled, &SignedMeasure)],
) -> Result<(f64, Vec<usize>), LmpError> {
    let grid = p.grid();
    let lebesgue = SignedMeasure::new(grid.clone(), vec![0.0; grid.num_nodes()], vec![1.0; grid.num_cells()])?;
    let (ac_prefix, _) = stieltjes_prefix(ac, &lebesgue)?;
    let mut prefixes = Vec::with_capacity(pairs.len());
    let mut sensitive = Vec::new();
    for (phi, mu) in pairs {
        let (pre, s) = stieltjes_prefix(phi, mu)?;
        sensitive.extend(s);
        prefixes.push(pre);
    }
    let base = p.exterior_left();
    let mut worst = 0.0_f64;
    for k in 0..grid.num_nodes() {
        let mut r_left: Vec<f64> = p.left_limit(k).iter().zip(base).map(|(a, b)| a - b).collect();
        let mut r_right: Vec<f64> = p.right_limit(k).iter().zip(base).map(|(a, b)| a - b).collect();
        for i in 0..r_left.len() {
            r_left[i] += ac_prefix[k].0[i];
            r_right[i] += ac_prefix[k].1[i];
            for pre in &prefixes {
                r_left[i] += pre[k].0[i];
                r_right[i] += pre[k].1[i];
            }
        }
        worst = worst.max(norm(&r_left)).max(norm(&r_right));
    }
    sensitive.sort_unstable();
    sensitive.dedup();
    Ok((worst, sensitive))
}

fn signs_slackness(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>, LmpError> {
    let ms = ctx.ms;
    let tol = ctx.tol;
    let grid = ctx.tr.grid();
    let lambda_neg = ms.lambda.iter().map(|l| (-l).max(0.0)).fold(0.0, f64::max);
    let slack: f64 = ctx
        .cells
        .iter()
        .enumerate()
        .map(|(k, c)| ms.lambda[k].abs() * c.a.g.abs().max(c.b.g.abs()) * grid.step(k))
        .sum();
    let d = geometry::contact_set(ctx.p, ctx.tr, tol.delta, tol.eps)?;
    Ok(vec![
        ReportEntry::new("alpha0_sign", (-ms.alpha0).max(0.0), tol.structural),
        ReportEntry::new("lambda_sign", lambda_neg, tol.structural),
        ReportEntry::new("eta_sign", ms.eta.negative_mass(), tol.structural),
        ReportEntry::new("slackness", slack, tol.slackness),
        ReportEntry::new("eta_support", mass_outside(&ms.eta, &d), tol.structural),
    ])
}

fn mass_outside(eta: &SignedMeasure, d: &ContactSet) -> f64 {
    let atoms: f64 = eta.atoms().iter().enumerate().filter(|(k, _)| !d.contains_node(*k)).map(|(_, w)| w.abs()).sum();
    let cells: f64 = (0..eta.grid().num_cells())
        .filter(|k| !d.contains_cell(*k))
        .map(|k| eta.cell_mass(k).abs())
        .sum();
    atoms + cells
}

fn simplex_violation(w: &[f64]) -> f64 {
    let neg = w.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    neg.max((w.iter().sum::<f64>() - 1.0).abs())
}

fn jump_inclusion(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>, LmpError> {
    let ms = ctx.ms;
    let n = ctx.n();
    let grid = ctx.tr.grid();
    let mut worst = 0.0_f64;
    let mut outside = 0.0;
    let mut issues = Vec::new();
    let mut score = |key: Support, gens: Vec<Vec<f64>>, mass: f64, issues: &mut Vec<String>| {
        if gens.is_empty() {
            outside += mass.abs();
            return;
        }
        let r = match ms.s.get(&key) {
            Some(JumpVector::Vector(v)) if v.len() == n => {
                geometry::dist_to_convex_hull(v, &gens).map(|(d, _)| d).unwrap_or(f64::INFINITY)
            }
            Some(JumpVector::Weights(w)) if w.len() == gens.len() => simplex_violation(w),
            Some(_) => {
                issues.push(format!("s on {key:?} has the wrong length"));
                f64::INFINITY
            }
            None => {
                issues.push(format!("s missing on {key:?}"));
                f64::INFINITY
            }
        };
        worst = worst.max(r);
    };
    for (k, w) in ms.eta.sparse_atoms() {
        score(Support::Atom(k), ctx.node_generators(k)?, w, &mut issues);
    }
    let mut sampled_cells = 0;
    for k in 0..grid.num_cells() {
        if ms.eta.density()[k] != 0.0 {
            sampled_cells += 1;
            score(Support::Cell(k), ctx.mid_generators(k)?, ms.eta.cell_mass(k), &mut issues);
        }
    }
    let mut inclusion = ReportEntry::new("jump_inclusion", worst, ctx.tol.structural);
    if !issues.is_empty() {
        inclusion = inclusion.with_note(issues.join("; "));
    } else if sampled_cells > 0 {
        inclusion = inclusion.with_note(format!(
            "{sampled_cells} density cells sampled at midpoints; any failing sample fails the line"
        ));
    }
    Ok(vec![inclusion, ReportEntry::new("jump_support", outside, ctx.tol.structural)])
}

fn adjoint(ctx: &Ctx<'_>) -> Result<(ReportEntry, Vec<usize>), LmpError> {
    let (left, right) = ctx.ac_integrand();
    let ac = NodeSampled::from_sides(left, right);
    let (phi, problems) = ctx.s_integrand()?;
    let (res, sensitive) = adjoint_residual(&ctx.ms.p, &ac, &[(&phi, &ctx.ms.eta)])?;
    let mut entry = ReportEntry::new("adjoint", res, ctx.integral_threshold());
    if !problems.is_empty() {
        entry = entry.with_note(format!("s treated as 0 where unusable: {}", problems.join("; ")));
    }
    Ok((entry, sensitive))
}

fn transversality(ctx: &Ctx<'_>) -> Result<ReportEntry, LmpError> {
    let tr = ctx.tr;
    let (x0, x1) = (tr.state(0), tr.state(tr.grid().last()));
    let a0 = ctx.ms.alpha0;
    let jx0 = ctx.p.eval_j_x0(x0, x1).map_err(ProblemError::from)?;
    let jx1 = ctx.p.eval_j_x1(x0, x1).map_err(ProblemError::from)?;
    let left: Vec<f64> = ctx.ms.p.exterior_left().iter().zip(&jx0).map(|(p, j)| p + a0 * j).collect();
    let right: Vec<f64> = ctx.ms.p.exterior_right().iter().zip(&jx1).map(|(p, j)| p - a0 * j).collect();
    Ok(ReportEntry::new("transversality", norm(&left) + norm(&right), ctx.tol.structural))
}

fn stationarity(ctx: &Ctx<'_>) -> (ReportEntry, f64) {
    let grid = ctx.tr.grid();
    let mut sup = 0.0_f64;
    let mut l1 = 0.0;
    for (k, c) in ctx.cells.iter().enumerate() {
        let lam = ctx.ms.lambda[k];
        let ra = norm(&hbar_u(&c.a, &ctx.ms.p.right_limit(k), lam));
        let rm = norm(&hbar_u(&c.mid, &ctx.ms.p.mid(k), lam));
        let rb = norm(&hbar_u(&c.b, ctx.ms.p.left_limit(k + 1), lam));
        sup = sup.max(ra).max(rm).max(rb);
        l1 += grid.step(k) / 6.0 * (ra + 4.0 * rm + rb);
    }
    (ReportEntry::new("stationarity", sup, ctx.integral_threshold()).with_value(l1), l1)
}

fn nontriviality(ms: &MultiplierSet, tol: &Tolerances) -> ReportEntry {
    let nu = ms.nu();
    ReportEntry::new("nontriviality", (tol.positive - nu).max(0.0), 0.0).with_value(nu)
}

fn failed(name: &str, tolerance: f64, err: &LmpError) -> ReportEntry {
    ReportEntry::new(name, f64::INFINITY, tolerance).with_note(err.to_string())
}

/// Signs of `α0`, `λ`, `dη`; complementary slackness `Σ |λ_k|·max|G|·h_k`;
/// mass of `dη` outside `D`.
pub fn check_signs_slackness(
    ms: &MultiplierSet,
    p: &ProblemDef,
    tr: &Trajectory,
    tol: &Tolerances,
) -> Result<Vec<ReportEntry>, LmpError> {
    signs_slackness(&Ctx::new(p, tr, ms, tol)?)
}

/// `ν = α0 + ‖λ‖₁ + ∫dη ≥ tol.positive`; `ν` is stored as the entry value.
pub fn check_nontriviality(ms: &MultiplierSet, tol: &Tolerances) -> ReportEntry {
    nontriviality(ms, tol)
}

/// Distance of `ŝ` to `conv S_{δ,ε}` on every support element of `dη`
/// (`jump_inclusion`) and the `dη` mass where `S_{δ,ε}` is empty (`jump_support`).
pub fn check_jump_inclusion(
    ms: &MultiplierSet,
    p: &ProblemDef,
    tr: &Trajectory,
    tol: &Tolerances,
) -> Result<Vec<ReportEntry>, LmpError> {
    jump_inclusion(&Ctx::new(p, tr, ms, tol)?)
}

/// Integral form of `−dp = H_x dt + λ G_x dt + ŝ dη`, checked on both sides of
/// every node.
pub fn check_adjoint(
    ms: &MultiplierSet,
    p: &ProblemDef,
    tr: &Trajectory,
    tol: &Tolerances,
) -> Result<ReportEntry, LmpError> {
    Ok(adjoint(&Ctx::new(p, tr, ms, tol)?)?.0)
}

/// `‖p(t0−) + α0 J_x0‖ + ‖p(t1+) − α0 J_x1‖`.
pub fn check_transversality(
    ms: &MultiplierSet,
    p: &ProblemDef,
    tr: &Trajectory,
    tol: &Tolerances,
) -> Result<ReportEntry, LmpError> {
    transversality(&Ctx::new(p, tr, ms, tol)?)
}

/// Sup of `‖H_u + λ G_u‖` over both sides and the midpoint of every cell;
/// the Simpson L1 norm is stored as the entry value.
pub fn check_stationarity(
    ms: &MultiplierSet,
    p: &ProblemDef,
    tr: &Trajectory,
    tol: &Tolerances,
) -> Result<ReportEntry, LmpError> {
    Ok(stationarity(&Ctx::new(p, tr, ms, tol)?).0)
}

const STRUCTURAL: [&str; 5] = ["alpha0_sign", "lambda_sign", "eta_sign", "slackness", "eta_support"];

/// Runs every check and assembles the report; a failing sub-check becomes a
/// failed entry instead of aborting the others.
pub fn check_certificate(
    p: &ProblemDef,
    tr: &Trajectory,
    ms: &MultiplierSet,
    tol: &Tolerances,
) -> Report {
    let mut diagnostics = Diagnostics {
        nu: ms.nu(),
        h_max: tr.grid().max_step(),
        ..Diagnostics::default()
    };
    diagnostics.normalized = ms.normalized().map(|n| NormalizedSummary {
        alpha0: n.alpha0,
        lambda_l1: n.lambda_l1(),
        eta_mass: n.eta.total_mass(),
    });
    match dynamics_defect(p, tr) {
        Ok(d) => {
            diagnostics.dynamics_defect_max = Some(d.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs())));
        }
        Err(e) => diagnostics.notes.push(format!("dynamics defect unavailable: {e}")),
    }
    let ctx = match Ctx::new(p, tr, ms, tol) {
        Ok(ctx) => ctx,
        Err(e) => {
            let mut entries: Vec<ReportEntry> = STRUCTURAL.iter().map(|n| failed(n, tol.structural, &e)).collect();
            entries.push(nontriviality(ms, tol));
            for n in ["jump_inclusion", "jump_support", "adjoint", "transversality", "stationarity"] {
                entries.push(failed(n, tol.structural, &e));
            }
            return Report { entries, diagnostics };
        }
    };
    diagnostics.integral_scale = ctx.integral_scale();
    let mut entries = Vec::with_capacity(11);
    match signs_slackness(&ctx) {
        Ok(e) => entries.extend(e),
        Err(e) => entries.extend(STRUCTURAL.iter().map(|n| failed(n, tol.structural, &e))),
    }
    entries.push(nontriviality(ms, tol));
    match jump_inclusion(&ctx) {
        Ok(e) => entries.extend(e),
        Err(e) => {
            entries.push(failed("jump_inclusion", tol.structural, &e));
            entries.push(failed("jump_support", tol.structural, &e));
        }
    }
    match adjoint(&ctx) {
        Ok((e, sensitive)) => {
            entries.push(e);
            diagnostics.convention_sensitive_nodes = sensitive;
        }
        Err(e) => entries.push(failed("adjoint", ctx.integral_threshold(), &e)),
    }
    entries.push(transversality(&ctx).unwrap_or_else(|e| failed("transversality", tol.structural, &e)));
    let (stat, l1) = stationarity(&ctx);
    diagnostics.stationarity_l1 = Some(l1);
    entries.push(stat);
    for (k, _) in ms.eta.sparse_atoms() {
        if tr.jump_at(k).is_some() && !diagnostics.convention_sensitive_nodes.contains(&k) {
            diagnostics.convention_sensitive_nodes.push(k);
        }
    }
    diagnostics.convention_sensitive_nodes.sort_unstable();
    if !diagnostics.convention_sensitive_nodes.is_empty() {
        diagnostics.notes.push(
            "atoms of eta at control jumps pair with the certificate's own s value there".into(),
        );
    }
    Report { entries, diagnostics }
}
