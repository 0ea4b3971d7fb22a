//! Seeded graph families for sweeps and tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::WeightedDigraph;

/// Directed ring `0 -> 1 -> ... -> n-1 -> 0`, unit weights.
pub fn ring(n: usize) -> WeightedDigraph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    WeightedDigraph::from_edges(n, &edges).expect("ring is simple")
}

/// Undirected path (both directions), unit weights.
pub fn path(n: usize) -> WeightedDigraph {
    let edges: Vec<_> = (0..n.saturating_sub(1)).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]).collect();
    WeightedDigraph::from_edges(n, &edges).expect("path is simple")
}

/// Node 0 linked both ways to `leaves` leaves, unit weights.
pub fn star(leaves: usize) -> WeightedDigraph {
    let edges: Vec<_> = (1..=leaves).flat_map(|j| [(0, j, 1.0), (j, 0, 1.0)]).collect();
    WeightedDigraph::from_edges(leaves + 1, &edges).expect("star is simple")
}

pub fn complete(n: usize) -> WeightedDigraph {
    let edges: Vec<_> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, 1.0))).collect();
    WeightedDigraph::from_edges(n, &edges).expect("complete graph is simple")
}

/// Erdős–Rényi style digraph: each ordered pair linked with probability `p`,
/// weights uniform in `[w_lo, w_hi)`.
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, p: f64, w_lo: f64, w_hi: f64) -> WeightedDigraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(w_lo..w_hi)));
            }
        }
    }
    WeightedDigraph::from_edges(n, &edges).expect("generated graph is simple")
}

/// As [`random_digraph`], then gives every sink one random outgoing link.
pub fn random_digraph_no_sinks<R: Rng>(rng: &mut R, n: usize, p: f64, w_lo: f64, w_hi: f64) -> WeightedDigraph {
    assert!(n >= 2);
    let g = random_digraph(rng, n, p, w_lo, w_hi);
    let mut edges: Vec<_> = g.edges().iter().map(|e| (e.src.0, e.dst.0, e.weight)).collect();
    let deg = g.out_degrees();
    for (i, &d) in deg.iter().enumerate() {
        if d == 0.0 {
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            edges.push((i, j, rng.random_range(w_lo..w_hi)));
        }
    }
    WeightedDigraph::from_edges(n, &edges).expect("generated graph is simple")
}

/// Connected detailed-balance graph: a random spanning tree plus extra pairs
/// with probability `p`, symmetric base weights `s_ij` and node weights `m`
/// in `[0.2, 5)`, so that `w_ij = s_ij / m_i` and `m_i w_ij = m_j w_ji`.
/// Returns the graph and the sampled `m`.
pub fn detailed_balance_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> (WeightedDigraph, Vec<f64>) {
    let m: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = std::collections::BTreeSet::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        pairs.insert((parent.min(child), parent.max(child)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                pairs.insert((i, j));
            }
        }
    }
    let mut edges = Vec::new();
    for (i, j) in pairs {
        let s = rng.random_range(0.1..2.0);
        edges.push((i, j, s / m[i]));
        edges.push((j, i, s / m[j]));
    }
    (WeightedDigraph::from_edges(n, &edges).expect("generated graph is simple"), m)
}

/// Adds a link without its reverse: a new `i -> j` between an unlinked pair,
/// or, if every pair is linked, drops one direction of an existing pair.
pub fn inject_one_way<R: Rng>(rng: &mut R, g: &WeightedDigraph) -> WeightedDigraph {
    let n = g.node_count();
    let mut edges: Vec<_> = g.edges().iter().map(|e| (e.src.0, e.dst.0, e.weight)).collect();
    let linked = |a: usize, b: usize| edges.iter().any(|&(s, d, _)| (s, d) == (a, b) || (s, d) == (b, a));
    let free: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && !linked(i, j)).collect();
    if let Some(&(i, j)) = free.get(rng.random_range(0..free.len().max(1))) {
        edges.push((i, j, rng.random_range(0.1..2.0)));
    } else {
        let k = rng.random_range(0..edges.len());
        edges.swap_remove(k);
    }
    WeightedDigraph::from_edges(n, &edges).expect("modified graph is simple")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{check_symmetrizable, DEFAULT_TOL};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn families_shapes() {
        assert_eq!(ring(3).edges().len(), 3);
        assert_eq!(path(5).edges().len(), 8);
        assert_eq!(star(3).out_degrees(), vec![3.0, 1.0, 1.0, 1.0]);
        assert_eq!(complete(4).edges().len(), 12);
    }

    #[test]
    fn detailed_balance_is_symmetrizable_and_connected() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let (g, _) = detailed_balance_graph(&mut rng, 8, 0.2);
            assert_eq!(g.weak_components().len(), 1);
            assert!(check_symmetrizable(&g, DEFAULT_TOL).is_ok());
            let bad = inject_one_way(&mut rng, &g);
            assert!(check_symmetrizable(&bad, DEFAULT_TOL).is_err());
        }
    }

    #[test]
    fn no_sinks() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..20 {
            let g = random_digraph_no_sinks(&mut rng, 6, 0.1, 0.5, 1.5);
            assert!(g.out_degrees().iter().all(|&d| d > 0.0));
        }
    }
}
