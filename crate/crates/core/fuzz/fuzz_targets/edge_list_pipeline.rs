#![no_main]

use libfuzzer_sys::fuzz_target;
use netosc::doubled::{hat_h_structured, sparse_factors, sparsity_match};
use netosc::graph::build_matrices;
use netosc::sqrt::OperatorBundle;
use netosc::symmetry::{ModeModel, DEFAULT_TOL};

// Small parsed graphs run through the whole operator pipeline; errors are
// fine, panics are not.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(g) = netosc::parse_edge_list(text) else { return };
    if g.node_count() > 12 || g.edges().iter().any(|e| !(1e-3..=1e3).contains(&e.weight)) {
        return;
    }
    let (a, _, l) = build_matrices(&g);
    let _ = netosc::dynamics::flaming_indicator(&l.0);
    if let Ok(model) = ModeModel::from_graph(&g, DEFAULT_TOL) {
        let _ = OperatorBundle::from_model(&model);
    }
    if let Ok(f) = sparse_factors(&g) {
        assert!(sparsity_match(&hat_h_structured(&f), &a.0));
    }
});
