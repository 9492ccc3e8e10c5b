#![allow(dead_code)]

//! Independent oracles shared by the integration and acceptance tests.

use lmpkit::problem::{CellControl, ControlJump, TimeGrid, Trajectory};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Smallest distance from `s` to `Σ w_i g_i` over the simplex grid with
/// weights in multiples of `1/k`.
pub fn brute_hull_distance(s: &[f64], gens: &[Vec<f64>], k: usize) -> f64 {
    let r = gens.len();
    let last = &gens[r - 1];
    // Along the innermost axis the squared distance is a quadratic in the
    // weight of the second-to-last generator, so each grid point costs O(1).
    let mut best = f64::INFINITY;
    let mut w = vec![0usize; r.saturating_sub(2)];
    let k = k.max(1);
    loop {
        let used: usize = w.iter().sum();
        if used <= k {
            let mut base = last.clone();
            for (wi, g) in w.iter().zip(gens) {
                let c = *wi as f64 / k as f64;
                for ((b, gv), lv) in base.iter_mut().zip(g).zip(last) {
                    *b += c * (gv - lv);
                }
            }
            let a: Vec<f64> = base.iter().zip(s).map(|(b, sv)| b - sv).collect();
            if r == 1 {
                return norm(&a);
            }
            let dir: Vec<f64> = gens[r - 2].iter().zip(last).map(|(g, l)| g - l).collect();
            let (a0, a1, a2) = (dot(&a, &a), 2.0 * dot(&a, &dir), dot(&dir, &dir));
            for j in 0..=(k - used) {
                let t = j as f64 / k as f64;
                let d2 = a0 + t * (a1 + t * a2);
                if d2 < best {
                    best = d2;
                }
            }
        }
        // Odometer over the leading weights.
        let mut i = 0;
        loop {
            if i == w.len() {
                return best.max(0.0).sqrt();
            }
            w[i] += 1;
            if w.iter().sum::<usize>() <= k {
                break;
            }
            w[i] = 0;
            i += 1;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Random source text over `x1, x2, u1` whose every subexpression stays
/// inside the evaluation domain and is differentiable almost everywhere.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    let leaf = |rng: &mut ChaCha8Rng| -> String {
        match rng.gen_range(0..5) {
            0 => "x1".into(),
            1 => "x2".into(),
            2 => "u1".into(),
            _ => ["0.5", "2", "1.5", "3", "0.25"][rng.gen_range(0..5)].into(),
        }
    };
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng);
    }
    let mut sub = || random_expr(rng, depth - 1);
    let a = sub();
    let b = sub();
    match rng.gen_range(0..13) {
        0 => format!("({a}) + ({b})"),
        1 => format!("({a}) - ({b})"),
        2 | 3 => format!("({a}) * ({b})"),
        4 => format!("({a}) / (1 + ({b})^2)"),
        5 => format!("-({a})"),
        6 => format!("({a})^{}", rng.gen_range(2..=3)),
        7 => format!("(1.5 + sin({a}))^-1"),
        8 => format!("sin({a})"),
        9 => format!("cos({a})"),
        10 => format!("exp(0.5*sin({a}))"),
        11 => format!("log(1 + ({a})^2)"),
        _ => format!("sqrt(2 + cos({a}))"),
    }
}

/// Five-point central difference.
pub fn derivative_fd(f: impl Fn(f64) -> Option<f64>, x: f64) -> Option<f64> {
    let h = 1e-3 * (1.0 + x.abs());
    let (a, b, c, d) = (f(x - 2.0 * h)?, f(x - h)?, f(x + h)?, f(x + 2.0 * h)?);
    Some((a - 8.0 * b + 8.0 * c - d) / (12.0 * h))
}

/// A trajectory on a random nonuniform grid with a smooth control plus
/// up to `max_jumps` declared jumps.
pub fn random_jump_trajectory(rng: &mut ChaCha8Rng, max_jumps: usize) -> (Trajectory, Vec<usize>) {
    let cells = rng.gen_range(8..40);
    let mut nodes = vec![0.0];
    for _ in 0..cells {
        let last = *nodes.last().unwrap();
        nodes.push(last + rng.gen_range(0.02..0.2));
    }
    let grid = TimeGrid::new(nodes).unwrap();
    let m = rng.gen_range(1..=3);
    let phase: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..6.0)).collect();
    let count = rng.gen_range(0..=max_jumps.min(cells - 1));
    let mut jump_nodes: Vec<usize> = Vec::new();
    while jump_nodes.len() < count {
        let k = rng.gen_range(1..cells);
        if !jump_nodes.contains(&k) {
            jump_nodes.push(k);
        }
    }
    jump_nodes.sort_unstable();
    let sizes: Vec<Vec<f64>> = jump_nodes
        .iter()
        .map(|_| (0..m).map(|_| rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect())
        .collect();
    // Value at `t` with every jump at nodes `< upto` (by node index) applied.
    let value = |t: f64, upto: usize| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let smooth = (t * (1.0 + i as f64) + phase[i]).sin();
                let offset: f64 =
                    jump_nodes.iter().zip(&sizes).filter(|(k, _)| **k < upto).map(|(_, s)| s[i]).sum();
                smooth + offset
            })
            .collect()
    };
    let u_cells = (0..cells)
        .map(|k| CellControl::linear(value(grid.node(k), k + 1), value(grid.node(k + 1), k + 1)))
        .collect();
    let jumps = jump_nodes
        .iter()
        .map(|&k| ControlJump { node: k, left: value(grid.node(k), k), right: value(grid.node(k), k + 1) })
        .collect();
    let x = grid.nodes().iter().map(|t| vec![t.cos()]).collect();
    (Trajectory::new(grid, x, u_cells, jumps).unwrap(), jump_nodes)
}
