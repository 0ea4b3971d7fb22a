use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use netosc::doubled::{hat_h_structured, projection_identity_check, sparse_factors, sparsity_match, DoubledVector};
use netosc::graph::{build_matrices, graph_from_json, parse_edge_list};
use netosc::linalg::CVector;
use netosc::report::to_canonical_json;
use netosc::symmetry::{check_symmetrizable, decompose_laplacian, from_modes, to_modes, ModeModel, DEFAULT_TOL};
use netosc::WeightedDigraph;

/// Simple digraph on up to `n_max` nodes with weights in `[0.1, 3)`.
fn digraph(n_max: usize) -> impl Strategy<Value = WeightedDigraph> {
    (2..=n_max).prop_flat_map(|n| {
        proptest::collection::vec(proptest::option::weighted(0.35, 0.1f64..3.0), n * n).prop_map(move |cells| {
            let edges: Vec<_> = cells
                .iter()
                .enumerate()
                .filter_map(|(k, w)| w.map(|w| (k / n, k % n, w)))
                .filter(|&(i, j, _)| i != j)
                .collect();
            WeightedDigraph::from_edges(n, &edges).unwrap()
        })
    })
}

/// As [`digraph`], with a ring added so that every out-degree is positive.
fn digraph_no_sinks(n_max: usize) -> impl Strategy<Value = WeightedDigraph> {
    digraph(n_max).prop_map(|g| {
        let n = g.node_count();
        let mut edges: Vec<_> = g.edges().iter().map(|e| (e.src.0, e.dst.0, e.weight)).collect();
        for i in 0..n {
            let j = (i + 1) % n;
            if g.weight(i, j).is_none() {
                edges.push((i, j, 0.5));
            }
        }
        WeightedDigraph::from_edges(n, &edges).unwrap()
    })
}

/// Detailed-balance graph with its generating node weights.
fn balanced(n_max: usize) -> impl Strategy<Value = (WeightedDigraph, Vec<f64>)> {
    (2..=n_max).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.2f64..5.0, n),
            proptest::collection::vec(0.1f64..2.0, n - 1),
            proptest::collection::vec(proptest::option::weighted(0.3, 0.1f64..2.0), n * n),
        )
            .prop_map(move |(m, chain, extra)| {
                let mut edges = Vec::new();
                let mut link = |i: usize, j: usize, s: f64| {
                    edges.push((i, j, s / m[i]));
                    edges.push((j, i, s / m[j]));
                };
                for (i, &s) in chain.iter().enumerate() {
                    link(i, i + 1, s);
                }
                for i in 0..n {
                    for j in i + 2..n {
                        if let Some(s) = extra[i * n + j] {
                            link(i, j, s);
                        }
                    }
                }
                (WeightedDigraph::from_edges(n, &edges).unwrap(), m.clone())
            })
    })
}

fn complex_vec(len: usize) -> impl Strategy<Value = CVector> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| CVector::from_iterator(v.len(), v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

proptest! {
    #[test]
    fn laplacian_annihilates_constants(g in digraph(12)) {
        let (a, d, l) = build_matrices(&g);
        let ones = DVector::from_element(g.node_count(), 1.0);
        prop_assert!((&l.0 * ones).amax() <= 1e-12);
        prop_assert_eq!(&l.0, &(d.to_dense() - &a.0));
    }

    #[test]
    fn edge_list_round_trip(g in digraph(10)) {
        prop_assume!(!g.edges().is_empty());
        let text = g.to_edge_list();
        let back = parse_edge_list(&text).unwrap();
        prop_assert_eq!(back.to_edge_list(), text);
    }

    #[test]
    fn json_round_trip(g in digraph(10)) {
        let text = serde_json::to_string(&g.to_json()).unwrap();
        let back = graph_from_json(&text).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn canonical_json_is_deterministic(g in digraph(8)) {
        prop_assert_eq!(to_canonical_json(&g.to_json()), to_canonical_json(&g.to_json()));
    }

    #[test]
    fn detailed_balance_recovers_weights((g, m) in balanced(10)) {
        let rec = check_symmetrizable(&g, DEFAULT_TOL).unwrap();
        let scale = m[0] / rec.0[0];
        for (r, want) in rec.0.iter().zip(&m) {
            prop_assert!((r * scale - want).abs() <= 1e-9 * want);
        }
        prop_assert!(rec.0.min() >= 1.0 - 1e-12);
        for e in g.edges() {
            let (i, j) = (e.src.0, e.dst.0);
            let back = g.weight(j, i).unwrap();
            prop_assert!((rec.0[i] * e.weight - rec.0[j] * back).abs() <= 1e-9 * rec.0[i] * e.weight);
        }
    }

    #[test]
    fn split_reassembles_laplacian(g in digraph(10)) {
        let split = decompose_laplacian(&g, DEFAULT_TOL);
        let l = build_matrices(&g).2 .0;
        prop_assert!((split.full() - &l).amax() <= 1e-15 * l.amax().max(1.0));
        let ones = DVector::from_element(g.node_count(), 1.0);
        prop_assert!((&split.li.0 * &ones).amax() <= 1e-12);
        prop_assert!((&split.l0.0 * ones).amax() <= 1e-12);
    }

    #[test]
    fn mode_coordinates_round_trip(g in digraph(10), seed in complex_vec(10)) {
        let model = ModeModel::from_graph(&g, DEFAULT_TOL).unwrap();
        let n = g.node_count();
        let x = seed.rows(0, n).into_owned();
        let psi = to_modes(&x, &model.spectral, &model.split.m).unwrap();
        let back = from_modes(&psi, &model.spectral, &model.split.m).unwrap();
        prop_assert!((back - &x).norm() <= 1e-10 * x.norm().max(1.0));
    }

    #[test]
    fn structured_operator_follows_links(g in digraph_no_sinks(12)) {
        let f = sparse_factors(&g).unwrap();
        prop_assert!(sparsity_match(&hat_h_structured(&f), &build_matrices(&g).0 .0));
    }

    #[test]
    fn projection_identity_holds(g in digraph_no_sinks(10), v in complex_vec(20)) {
        let f = sparse_factors(&g).unwrap();
        let n = g.node_count();
        let xh = DoubledVector(v.rows(0, 2 * n).into_owned());
        prop_assert!(projection_identity_check(&f, &xh).unwrap() <= 1e-10);
    }
}
