//! The six node kernels.
//!
//! PageRank and Katz use edge weights. Betweenness, closeness, degree and
//! in-degree use the unweighted skeleton, since entrainment weights are
//! affinities rather than lengths. Normalizations keep every kernel except
//! Katz inside `[0, 1]`:
//!
//! * betweenness: ordered-pair count / `(n-1)(n-2)`;
//! * closeness: Wasserman–Faust over incoming distances,
//!   `(r / (n-1)) * (r / sum of distances)` with `r` the nodes that reach `u`;
//! * degree: `(in + out) / (2(n-1))`;
//! * in-degree: `in / (n-1)`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::EntrainmentGraph;

pub const PAGERANK_DAMPING: f64 = 0.85;
/// L1 change between power iterations at which PageRank stops.
pub const PAGERANK_TOLERANCE: f64 = 1e-10;
const KATZ_TOLERANCE: f64 = 1e-13;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelVector {
    pub pagerank: f64,
    pub betweenness: f64,
    pub closeness: f64,
    pub degree: f64,
    pub in_degree: f64,
    pub katz: f64,
}

impl KernelVector {
    pub const NAMES: [&'static str; 6] = ["pagerank", "betweenness", "closeness", "degree", "in_degree", "katz"];

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.pagerank,
            self.betweenness,
            self.closeness,
            self.degree,
            self.in_degree,
            self.katz,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        KernelVector {
            pagerank: a[0],
            betweenness: a[1],
            closeness: a[2],
            degree: a[3],
            in_degree: a[4],
            katz: a[5],
        }
    }
}

/// Weighted PageRank by power iteration. Dangling nodes spread their mass
/// uniformly.
pub fn pagerank(g: &EntrainmentGraph) -> Vec<f64> {
    let n = g.node_count();
    let adj = g.adjacency();
    let out_w: Vec<f64> = adj.iter().map(|row| row.iter().sum()).collect();
    let teleport = (1.0 - PAGERANK_DAMPING) / n as f64;
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        let dangling: f64 = (0..n).filter(|&u| out_w[u] == 0.0).map(|u| x[u]).sum();
        for (v, nv) in next.iter_mut().enumerate() {
            let inflow: f64 = (0..n)
                .filter(|&u| adj[u][v] > 0.0)
                .map(|u| x[u] * adj[u][v] / out_w[u])
                .sum();
            *nv = teleport + PAGERANK_DAMPING * (inflow + dangling / n as f64);
        }
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if delta < PAGERANK_TOLERANCE {
            break;
        }
    }
    x
}

/// Brandes' algorithm on the unweighted skeleton.
pub fn betweenness(g: &EntrainmentGraph) -> Vec<f64> {
    let n = g.node_count();
    let succ: Vec<Vec<usize>> = (0..n).map(|u| g.out_neighbors(u).collect()).collect();
    let mut cb = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &succ[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    if n > 2 {
        let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
        cb.iter_mut().for_each(|c| *c *= scale);
    } else {
        cb.iter_mut().for_each(|c| *c = 0.0);
    }
    cb
}

/// Hop distances from every node to `target` (reverse BFS).
fn distances_to(g: &EntrainmentGraph, target: usize) -> Vec<Option<usize>> {
    let n = g.node_count();
    let mut dist = vec![None; n];
    dist[target] = Some(0);
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued nodes have a distance");
        for u in g.in_neighbors(v) {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

pub fn closeness(g: &EntrainmentGraph) -> Vec<f64> {
    let n = g.node_count();
    (0..n)
        .map(|u| {
            let dist = distances_to(g, u);
            let (reach, total) = dist
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != u)
                .filter_map(|(_, d)| *d)
                .fold((0usize, 0usize), |(r, t), d| (r + 1, t + d));
            if total == 0 || n < 2 {
                0.0
            } else {
                let r = reach as f64;
                (r / total as f64) * (r / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn degree(g: &EntrainmentGraph) -> Vec<f64> {
    let n = g.node_count();
    (0..n)
        .map(|u| {
            let d = g.in_neighbors(u).count() + g.out_neighbors(u).count();
            d as f64 / (2 * (n - 1)) as f64
        })
        .collect()
}

pub fn in_degree(g: &EntrainmentGraph) -> Vec<f64> {
    let n = g.node_count();
    (0..n)
        .map(|u| g.in_neighbors(u).count() as f64 / (n - 1) as f64)
        .collect()
}

/// Largest eigenvalue modulus of the weighted adjacency matrix.
pub fn spectral_radius(g: &EntrainmentGraph) -> f64 {
    // A nonnegative matrix with an acyclic skeleton is nilpotent.
    if is_acyclic(g) {
        return 0.0;
    }
    let n = g.node_count();
    let adj = g.adjacency();
    let m = DMatrix::from_fn(n, n, |i, j| adj[i][j]);
    match m.clone().try_schur(f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_estimate(m),
    }
}

fn is_acyclic(g: &EntrainmentGraph) -> bool {
    let n = g.node_count();
    let mut indeg: Vec<usize> = (0..n).map(|v| g.in_neighbors(v).count()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(u) = ready.pop() {
        seen += 1;
        for v in g.out_neighbors(u) {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(v);
            }
        }
    }
    seen == n
}

/// `||A^(2^k)||^(1/2^k)` by repeated squaring with rescaling.
fn gelfand_estimate(mut m: DMatrix<f64>) -> f64 {
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..40 {
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        m /= norm;
        log_scale += norm.ln() / power;
        m = &m * &m;
        power *= 2.0;
    }
    (log_scale + m.norm().ln() / power).exp()
}

/// `min(0.1, 0.9 / spectral radius)`.
pub fn katz_attenuation(g: &EntrainmentGraph) -> f64 {
    let rho = spectral_radius(g);
    if rho > 0.0 {
        (0.9 / rho).min(0.1)
    } else {
        0.1
    }
}

/// Unnormalized weighted Katz centrality `x = alpha * A^T x + 1`, solved by
/// fixed-point iteration.
pub fn katz(g: &EntrainmentGraph) -> Vec<f64> {
    let n = g.node_count();
    let adj = g.adjacency();
    let alpha = katz_attenuation(g);
    let mut x = vec![1.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        for (v, nv) in next.iter_mut().enumerate() {
            *nv = 1.0 + alpha * (0..n).map(|u| adj[u][v] * x[u]).sum::<f64>();
        }
        let delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if delta < KATZ_TOLERANCE {
            break;
        }
    }
    x
}

/// Kernel vectors of every node, in node order.
pub fn kernel_vectors(g: &EntrainmentGraph) -> Vec<KernelVector> {
    let pr = pagerank(g);
    let bc = betweenness(g);
    let cc = closeness(g);
    let dc = degree(g);
    let ic = in_degree(g);
    let kc = katz(g);
    (0..g.node_count())
        .map(|i| KernelVector {
            pagerank: pr[i],
            betweenness: bc[i],
            closeness: cc[i],
            degree: dc[i],
            in_degree: ic[i],
            katz: kc[i],
        })
        .collect()
}

pub fn kernel_vector(g: &EntrainmentGraph, node: usize) -> KernelVector {
    kernel_vectors(g)[node]
}

/// Component-wise mean over all nodes, edge-less ones included.
pub fn team_vector(g: &EntrainmentGraph) -> KernelVector {
    let vs = kernel_vectors(g);
    let mut acc = [0.0; 6];
    for v in &vs {
        for (a, x) in acc.iter_mut().zip(v.as_array()) {
            *a += x;
        }
    }
    KernelVector::from_array(acc.map(|a| a / vs.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::super::Edge;
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> EntrainmentGraph {
        EntrainmentGraph::new(
            (0..n).map(|i| format!("n{i}")).collect(),
            edges
                .iter()
                .map(|&(from, to, weight)| Edge { from, to, weight })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_node_mutual_pagerank() {
        let g = graph(2, &[(0, 1, 0.3), (1, 0, 0.3)]);
        let pr = pagerank(&g);
        assert!((pr[0] - 0.5).abs() < 1e-12 && (pr[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn directed_path() {
        // a -> b -> c: b is on the only shortest path of the ordered pair
        // (a, c), one of (n-1)(n-2) = 2 ordered pairs.
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(betweenness(&g), [0.0, 0.5, 0.0]);
        // incoming: a unreachable; b reached by a at 1; c by b at 1, a at 2.
        let c = closeness(&g);
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 0.5).abs() < 1e-15);
        assert!((c[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(degree(&g), [0.25, 0.5, 0.25]);
        assert_eq!(in_degree(&g), [0.0, 0.5, 0.5]);
    }

    #[test]
    fn isolated_node() {
        let g = graph(3, &[(0, 1, 0.5), (1, 0, 0.5)]);
        let v = kernel_vector(&g, 2);
        assert_eq!(v.degree, 0.0);
        assert_eq!(v.in_degree, 0.0);
        assert_eq!(v.closeness, 0.0);
        assert_eq!(v.betweenness, 0.0);
        assert_eq!(v.katz, 1.0);
        assert!(v.pagerank > 0.0);
    }

    #[test]
    fn empty_graph_is_uniform() {
        let g = graph(4, &[]);
        for v in kernel_vectors(&g) {
            assert!((v.pagerank - 0.25).abs() < 1e-15);
            assert_eq!(v.katz, 1.0);
            assert_eq!(v.degree, 0.0);
        }
        assert_eq!(katz_attenuation(&g), 0.1);
    }

    #[test]
    fn katz_two_cycle_closed_form() {
        // x0 = 1 + a w x1, x1 = 1 + a w x0  =>  x = 1 / (1 - a w)
        let w = 0.8;
        let g = graph(2, &[(0, 1, w), (1, 0, w)]);
        assert!((spectral_radius(&g) - w).abs() < 1e-12);
        let k = katz(&g);
        let expect = 1.0 / (1.0 - 0.1 * w);
        assert!((k[0] - expect).abs() < 1e-12 && (k[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn katz_attenuation_shrinks_for_heavy_graphs() {
        let g = graph(2, &[(0, 1, 20.0), (1, 0, 20.0)]);
        assert!((katz_attenuation(&g) - 0.9 / 20.0).abs() < 1e-12);
        let k = katz(&g);
        assert!((k[0] - 10.0).abs() < 1e-9, "{}", k[0]);
    }

    #[test]
    fn team_vector_averages_nodes() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let tv = team_vector(&g);
        assert!((tv.betweenness - 0.5 / 3.0).abs() < 1e-15);
        assert!((tv.pagerank - 1.0 / 3.0).abs() < 1e-9);
    }
}
