//! Transportation simplex: northwest-corner start, MODI potentials, Bland's rule.
//!
//! The basis is kept as a spanning tree of `n + m - 1` cells of the bipartite
//! row/column graph. Degenerate (zero-flow) basic cells are kept in the tree,
//! which makes the potentials well defined at every pivot; Bland's rule on both
//! the entering and the leaving choice rules out cycling.

use crate::error::{Error, Result};

pub(crate) struct SimplexSolution {
    /// Row-major `n x m` flows.
    pub flows: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub pivots: usize,
}

pub(crate) fn transportation_simplex(
    cost: &[f64],
    n: usize,
    m: usize,
    supply: &[f64],
    demand: &[f64],
) -> Result<SimplexSolution> {
    let mut flows = vec![0.0; n * m];
    let mut basic = vec![false; n * m];

    // northwest corner
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].min(d[j]).max(0.0);
        flows[i * m + j] = x;
        basic[i * m + j] = true;
        s[i] -= x;
        d[j] -= x;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if i == n - 1 {
            j += 1;
        } else if j == m - 1 || s[i] < d[j] {
            i += 1;
        } else {
            j += 1;
        }
    }

    let scale = cost.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
    let eps = 1e-12 * scale;
    let max_pivots = 50 * n * m + 1000;
    let mut pivots = 0;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];

    loop {
        let adj = adjacency(&basic, n, m);
        potentials(&adj, cost, n, m, &mut u, &mut v);

        // Bland: first improving cell in row-major order
        let entering = (0..n * m).find(|&k| !basic[k] && cost[k] - u[k / m] - v[k % m] < -eps);
        let Some(enter) = entering else {
            break;
        };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::PivotLimit(max_pivots));
        }

        let (ei, ej) = (enter / m, enter % m);
        // tree path from column ej to row ei; nodes 0..n rows, n..n+m columns
        let path = tree_path(&adj, n + ej, ei, n + m);
        // consecutive node pairs are basic cells; signs alternate starting with '-'
        let cells: Vec<usize> = path
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let (r, c) = if a < n { (a, b - n) } else { (b, a - n) };
                r * m + c
            })
            .collect();
        let mut leave = usize::MAX;
        let mut theta = f64::INFINITY;
        for (idx, &cell) in cells.iter().enumerate() {
            if idx % 2 == 0 {
                let f = flows[cell];
                if f < theta || (f == theta && cell < leave) {
                    theta = f;
                    leave = cell;
                }
            }
        }
        flows[enter] = theta;
        for (idx, &cell) in cells.iter().enumerate() {
            if idx % 2 == 0 {
                flows[cell] -= theta;
            } else {
                flows[cell] += theta;
            }
        }
        flows[leave] = 0.0;
        basic[leave] = false;
        basic[enter] = true;
    }

    for f in flows.iter_mut() {
        if *f < 0.0 {
            *f = 0.0;
        }
    }
    Ok(SimplexSolution {
        flows,
        u,
        v,
        pivots,
    })
}

fn adjacency(basic: &[bool], n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n + m];
    for (k, &b) in basic.iter().enumerate() {
        if b {
            let (r, c) = (k / m, k % m);
            adj[r].push(n + c);
            adj[n + c].push(r);
        }
    }
    adj
}

/// `u_i + v_j = c_ij` on basic cells, normalized by `u_0 = 0`.
fn potentials(adj: &[Vec<usize>], cost: &[f64], n: usize, m: usize, u: &mut [f64], v: &mut [f64]) {
    let mut seen = vec![false; n + m];
    let mut stack = vec![0usize];
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = stack.pop() {
        for &next in &adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            if node < n {
                let c = next - n;
                v[c] = cost[node * m + c] - u[node];
            } else {
                let c = node - n;
                u[next] = cost[next * m + c] - v[c];
            }
            stack.push(next);
        }
    }
}

fn tree_path(adj: &[Vec<usize>], from: usize, to: usize, nodes: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; nodes];
    let mut queue = std::collections::VecDeque::new();
    parent[from] = from;
    queue.push_back(from);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &next in &adj[node] {
            if parent[next] == usize::MAX {
                parent[next] = node;
                queue.push_back(next);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    path
}
