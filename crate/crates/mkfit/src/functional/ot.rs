use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::measure::nearest_sites;

/// Largest number of spanning trees the oracle will enumerate.
const MAX_TREES: f64 = 1e7;

/// Exact `W_p^p` between the atoms and their nearest-site pushforward.
///
/// Every vertex of the transportation polytope is carried by a spanning tree
/// of the complete bipartite graph, so enumerating trees and solving each by
/// leaf peeling visits all basic feasible solutions.
pub fn ot_oracle(atoms: &[Point2], weights: &[f64], sites: &[Point2], p: f64) -> Result<f64> {
    if atoms.is_empty() || sites.is_empty() || atoms.len() != weights.len() {
        return Err(Error::arg("oracle needs atoms, matching weights and sites"));
    }
    let mut demand = vec![0.0; sites.len()];
    for (j, w) in nearest_sites(atoms, sites).into_iter().zip(weights) {
        demand[j] += w;
    }
    let used: Vec<usize> = (0..sites.len()).filter(|&j| demand[j] > 0.0).collect();
    let (n, m) = (atoms.len(), used.len());
    let trees = (m as f64).powi(n as i32 - 1) * (n as f64).powi(m as i32 - 1);
    if trees > MAX_TREES {
        return Err(Error::arg(format!("{n} atoms x {m} sites is too large for exhaustive enumeration")));
    }
    let cost: Vec<f64> = (0..n * m).map(|e| atoms[e / m].dist(sites[used[e % m]]).powf(p)).collect();
    // nodes 0..n are atoms, n..n+m are sites; supply positive, demand negative
    let mut balance: Vec<f64> = weights.to_vec();
    balance.extend(used.iter().map(|&j| -demand[j]));

    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(n + m - 1);
    let parent: Vec<usize> = (0..n + m).collect();
    enumerate(0, n, m, &parent, &mut chosen, &mut |tree| {
        if let Some(c) = tree_cost(tree, n, m, &balance, &cost) {
            best = best.min(c);
        }
    });
    Ok(best)
}

fn find(parent: &[usize], mut x: usize) -> usize {
    while parent[x] != x {
        x = parent[x];
    }
    x
}

fn enumerate(next: usize, n: usize, m: usize, parent: &[usize], chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    let need = n + m - 1 - chosen.len();
    if need == 0 {
        visit(chosen);
        return;
    }
    if n * m - next < need {
        return;
    }
    let (a, b) = (next / m, n + next % m);
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let mut p2 = parent.to_vec();
        p2[ra] = rb;
        chosen.push(next);
        enumerate(next + 1, n, m, &p2, chosen, visit);
        chosen.pop();
    }
    enumerate(next + 1, n, m, parent, chosen, visit);
}

/// Flow on a spanning tree fixed by the balances; `None` if some flow is negative.
fn tree_cost(tree: &[usize], n: usize, m: usize, balance: &[f64], cost: &[f64]) -> Option<f64> {
    let nodes = n + m;
    let mut deg = vec![0usize; nodes];
    for &e in tree {
        deg[e / m] += 1;
        deg[n + e % m] += 1;
    }
    let mut bal = balance.to_vec();
    let mut alive = vec![true; tree.len()];
    let mut total = 0.0;
    for _ in 0..tree.len() {
        let (k, leaf) = tree
            .iter()
            .enumerate()
            .filter(|(k, _)| alive[*k])
            .find_map(|(k, &e)| {
                let (a, b) = (e / m, n + e % m);
                if deg[a] == 1 {
                    Some((k, a))
                } else if deg[b] == 1 {
                    Some((k, b))
                } else {
                    None
                }
            })?;
        let e = tree[k];
        let (a, b) = (e / m, n + e % m);
        // flow from atom a to site b
        let flow = if leaf == a { bal[a] } else { -bal[b] };
        if flow < -1e-12 {
            return None;
        }
        bal[a] -= flow;
        bal[b] += flow;
        deg[a] -= 1;
        deg[b] -= 1;
        alive[k] = false;
        total += flow.max(0.0) * cost[e];
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_instances() {
        let atoms = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)];
        assert_eq!(ot_oracle(&atoms, &[0.5, 0.5], &atoms, 2.0).unwrap(), 0.0);
        let v = ot_oracle(&[Point2::new(1.0, 1.0)], &[1.0], &[Point2::ZERO], 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_large_instances() {
        let pts: Vec<Point2> = (0..12).map(|i| Point2::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let w = vec![1.0 / 12.0; 12];
        assert!(ot_oracle(&pts, &w, &pts, 2.0).is_err());
    }
}
