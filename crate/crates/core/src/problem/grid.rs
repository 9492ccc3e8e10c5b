use super::ProblemError;

/// Strictly increasing time nodes `t0 = τ_0 < … < τ_N = t1` with `N ≥ 2` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self, ProblemError> {
        if nodes.len() < 3 {
            return Err(ProblemError::Grid(format!(
                "need at least 2 cells (3 nodes), got {} nodes",
                nodes.len()
            )));
        }
        if let Some(k) = nodes.iter().position(|t| !t.is_finite()) {
            return Err(ProblemError::Grid(format!("node {k} is not finite")));
        }
        if let Some(k) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ProblemError::Grid(format!(
                "nodes not strictly increasing at {k}: {} >= {}",
                nodes[k],
                nodes[k + 1]
            )));
        }
        Ok(TimeGrid { nodes })
    }

    pub fn uniform(t0: f64, t1: f64, cells: usize) -> Result<Self, ProblemError> {
        let h = (t1 - t0) / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|k| t0 + h * k as f64).collect();
        if let Some(last) = nodes.last_mut() {
            *last = t1;
        }
        TimeGrid::new(nodes)
    }

    /// Concatenates uniform pieces over consecutive breakpoints.
    pub fn piecewise_uniform(breaks: &[f64], cells: &[usize]) -> Result<Self, ProblemError> {
        if breaks.len() != cells.len() + 1 {
            return Err(ProblemError::Grid("breakpoint/cell count mismatch".into()));
        }
        let mut nodes = vec![breaks[0]];
        for (i, &c) in cells.iter().enumerate() {
            if c == 0 {
                return Err(ProblemError::Grid(format!("piece {i} has no cells")));
            }
            let (a, b) = (breaks[i], breaks[i + 1]);
            let h = (b - a) / c as f64;
            nodes.extend((1..c).map(|k| a + h * k as f64));
            nodes.push(b);
        }
        TimeGrid::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Index of the last node.
    pub fn last(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t1(&self) -> f64 {
        self.nodes[self.last()]
    }

    pub fn step(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        0.5 * (self.nodes[cell] + self.nodes[cell + 1])
    }

    pub fn max_step(&self) -> f64 {
        (0..self.num_cells()).map(|k| self.step(k)).fold(0.0, f64::max)
    }

    /// Exact node index for `t`, if `t` is a node.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        self.nodes.binary_search_by(|x| x.total_cmp(&t)).ok()
    }

    /// Cell containing `t` (the last cell for `t = t1`).
    pub fn cell_of(&self, t: f64) -> Option<usize> {
        if !(self.t0()..=self.t1()).contains(&t) {
            return None;
        }
        let k = self.nodes.partition_point(|&x| x <= t);
        Some(k.saturating_sub(1).min(self.num_cells() - 1))
    }
}
