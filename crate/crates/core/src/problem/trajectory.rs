use serde::{Deserialize, Serialize};

use super::{ProblemError, TimeGrid};

/// Control on one grid cell: a constant, or samples spaced uniformly across
/// the closed cell and joined linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellControl {
    Constant(Vec<f64>),
    Samples { samples: Vec<Vec<f64>> },
}

impl CellControl {
    pub fn linear(start: Vec<f64>, end: Vec<f64>) -> Self {
        CellControl::Samples { samples: vec![start, end] }
    }

    pub fn dim(&self) -> usize {
        self.start().len()
    }

    /// Value at the left end of the cell, `u(τ_k⁺)`.
    pub fn start(&self) -> &[f64] {
        match self {
            CellControl::Constant(c) => c,
            CellControl::Samples { samples } => &samples[0],
        }
    }

    /// Value at the right end of the cell, `u(τ_{k+1}⁻)`.
    pub fn end(&self) -> &[f64] {
        match self {
            CellControl::Constant(c) => c,
            CellControl::Samples { samples } => &samples[samples.len() - 1],
        }
    }

    /// Value at relative position `theta ∈ [0, 1]` inside the cell.
    pub fn at(&self, theta: f64) -> Vec<f64> {
        match self {
            CellControl::Constant(c) => c.clone(),
            CellControl::Samples { samples } => {
                let segs = samples.len() - 1;
                let s = theta.clamp(0.0, 1.0) * segs as f64;
                let i = (s.floor() as usize).min(segs - 1);
                let w = s - i as f64;
                samples[i]
                    .iter()
                    .zip(&samples[i + 1])
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
        }
    }

    fn validate(&self, cell: usize, m: usize) -> Result<(), ProblemError> {
        let bad = |msg: String| ProblemError::Trajectory(format!("u_cells[{cell}]: {msg}"));
        let rows: &[Vec<f64>] = match self {
            CellControl::Constant(c) => std::slice::from_ref(c),
            CellControl::Samples { samples } => {
                if samples.len() < 2 {
                    return Err(bad("a sampled control needs at least 2 samples".into()));
                }
                samples
            }
        };
        for r in rows {
            if r.len() != m {
                return Err(bad(format!("expected {m} components, got {}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite value".into()));
            }
        }
        Ok(())
    }
}

/// Declared control discontinuity at an interior node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlJump {
    pub node: usize,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// One side of a node: `Right(k)` is `τ_k⁺` (start of cell k), `Left(k)` is
/// `τ_k⁻` (end of cell k−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSide {
    Left(usize),
    Right(usize),
}

/// Candidate process on a grid: continuous piecewise-linear state and a
/// piecewise-smooth control with finitely many declared jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    x: Vec<Vec<f64>>,
    u_cells: Vec<CellControl>,
    jumps: Vec<ControlJump>,
    jump_at: Vec<Option<usize>>,
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-9 * (1.0 + p.abs().max(q.abs())))
}

impl Trajectory {
    pub fn new(
        grid: TimeGrid,
        x: Vec<Vec<f64>>,
        u_cells: Vec<CellControl>,
        mut jumps: Vec<ControlJump>,
    ) -> Result<Self, ProblemError> {
        let bad = |msg: String| Err(ProblemError::Trajectory(msg));
        if x.len() != grid.num_nodes() {
            return bad(format!("x has {} samples for {} nodes", x.len(), grid.num_nodes()));
        }
        let n = x[0].len();
        if n == 0 {
            return bad("state dimension is zero".into());
        }
        for (k, xk) in x.iter().enumerate() {
            if xk.len() != n {
                return bad(format!("x[{k}] has {} components, expected {n}", xk.len()));
            }
            if xk.iter().any(|v| !v.is_finite()) {
                return bad(format!("x[{k}] is not finite"));
            }
        }
        if u_cells.len() != grid.num_cells() {
            return bad(format!(
                "u_cells has {} entries for {} cells",
                u_cells.len(),
                grid.num_cells()
            ));
        }
        let m = u_cells[0].dim();
        if m == 0 {
            return bad("control dimension is zero".into());
        }
        for (k, c) in u_cells.iter().enumerate() {
            c.validate(k, m)?;
        }
        jumps.sort_by_key(|j| j.node);
        let mut jump_at = vec![None; grid.num_nodes()];
        for (i, j) in jumps.iter().enumerate() {
            if j.node == 0 || j.node >= grid.last() {
                return bad(format!("jump at node {} is not an interior node", j.node));
            }
            if jump_at[j.node].is_some() {
                return bad(format!("duplicate jump at node {}", j.node));
            }
            if j.left.len() != m || j.right.len() != m {
                return bad(format!("jump at node {} has wrong dimension", j.node));
            }
            if !close(&j.left, u_cells[j.node - 1].end()) || !close(&j.right, u_cells[j.node].start())
            {
                return bad(format!(
                    "jump at node {} disagrees with the adjacent cell controls",
                    j.node
                ));
            }
            if j.left == j.right {
                return bad(format!("jump at node {} has equal sides", j.node));
            }
            jump_at[j.node] = Some(i);
        }
        for k in 1..grid.last() {
            if jump_at[k].is_none() && !close(u_cells[k - 1].end(), u_cells[k].start()) {
                return bad(format!("control is discontinuous at node {k} without a declared jump"));
            }
        }
        Ok(Trajectory { grid, x, u_cells, jumps, jump_at })
    }

    /// Builds a trajectory from functions of time, sampling the control
    /// linearly on every cell.
    pub fn from_fns(
        grid: TimeGrid,
        x: impl Fn(f64) -> Vec<f64>,
        u: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self, ProblemError> {
        let xs = grid.nodes().iter().map(|&t| x(t)).collect();
        let cells = (0..grid.num_cells())
            .map(|k| CellControl::linear(u(grid.node(k)), u(grid.node(k + 1))))
            .collect();
        Trajectory::new(grid, xs, cells, vec![])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.x[0].len()
    }

    pub fn m(&self) -> usize {
        self.u_cells[0].dim()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn state(&self, node: usize) -> &[f64] {
        &self.x[node]
    }

    pub fn cell_controls(&self) -> &[CellControl] {
        &self.u_cells
    }

    pub fn cell_control(&self, cell: usize) -> &CellControl {
        &self.u_cells[cell]
    }

    pub fn jumps(&self) -> &[ControlJump] {
        &self.jumps
    }

    pub fn jump_at(&self, node: usize) -> Option<&ControlJump> {
        self.jump_at[node].map(|i| &self.jumps[i])
    }

    /// Linear interpolation of the state.
    pub fn state_at(&self, t: f64) -> Option<Vec<f64>> {
        let k = self.grid.cell_of(t)?;
        let w = (t - self.grid.node(k)) / self.grid.step(k);
        Some(self.x[k].iter().zip(&self.x[k + 1]).map(|(a, b)| a + w * (b - a)).collect())
    }

    pub fn state_mid(&self, cell: usize) -> Vec<f64> {
        self.x[cell].iter().zip(&self.x[cell + 1]).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn control_mid(&self, cell: usize) -> Vec<f64> {
        self.u_cells[cell].at(0.5)
    }

    /// `(x, u)` at one side of a node.
    pub fn at_side(&self, side: NodeSide) -> (&[f64], &[f64]) {
        match side {
            NodeSide::Right(k) => (&self.x[k], self.u_cells[k].start()),
            NodeSide::Left(k) => (&self.x[k], self.u_cells[k - 1].end()),
        }
    }

    /// Control at time `t` strictly inside a cell.
    pub fn control_at(&self, t: f64) -> Option<Vec<f64>> {
        let k = self.grid.cell_of(t)?;
        let theta = (t - self.grid.node(k)) / self.grid.step(k);
        Some(self.u_cells[k].at(theta))
    }

    /// Returns a copy with every state sample shifted by `delta`.
    pub fn shifted_state(&self, delta: &[f64]) -> Trajectory {
        let mut out = self.clone();
        for xk in &mut out.x {
            for (v, d) in xk.iter_mut().zip(delta) {
                *v += d;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::uniform(0.0, 1.0, 4).unwrap()
    }

    #[test]
    fn undeclared_discontinuity_rejected() {
        let cells = vec![
            CellControl::Constant(vec![1.0]),
            CellControl::Constant(vec![1.0]),
            CellControl::Constant(vec![-1.0]),
            CellControl::Constant(vec![-1.0]),
        ];
        let x = vec![vec![0.0]; 5];
        assert!(Trajectory::new(grid(), x.clone(), cells.clone(), vec![]).is_err());
        let jump = ControlJump { node: 2, left: vec![1.0], right: vec![-1.0] };
        let tr = Trajectory::new(grid(), x, cells, vec![jump]).unwrap();
        assert!(tr.jump_at(2).is_some());
        assert!(tr.jump_at(1).is_none());
    }

    #[test]
    fn jump_must_match_cells_and_be_interior() {
        let cells = vec![CellControl::Constant(vec![0.0]); 4];
        let x = vec![vec![0.0]; 5];
        let edge = ControlJump { node: 0, left: vec![0.0], right: vec![1.0] };
        assert!(Trajectory::new(grid(), x.clone(), cells.clone(), vec![edge]).is_err());
        let wrong = ControlJump { node: 2, left: vec![0.0], right: vec![1.0] };
        assert!(Trajectory::new(grid(), x, cells, vec![wrong]).is_err());
    }

    #[test]
    fn sampled_cells_interpolate() {
        let c = CellControl::Samples { samples: vec![vec![0.0], vec![2.0], vec![0.0]] };
        assert_eq!(c.at(0.25), vec![1.0]);
        assert_eq!(c.at(0.5), vec![2.0]);
        assert_eq!(c.at(1.0), vec![0.0]);
        assert_eq!(c.start(), &[0.0]);
    }

    #[test]
    fn cell_control_json_forms() {
        let c: CellControl = serde_json::from_str("[1.5, 2]").unwrap();
        assert_eq!(c, CellControl::Constant(vec![1.5, 2.0]));
        let c: CellControl = serde_json::from_str(r#"{"samples": [[0], [1]]}"#).unwrap();
        assert_eq!(c, CellControl::linear(vec![0.0], vec![1.0]));
    }
}
