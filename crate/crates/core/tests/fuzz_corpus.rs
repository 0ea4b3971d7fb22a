//! Replays the fuzz corpus seeds, plus seeded byte mutations of them, through
//! the same assertions as the fuzz targets. Runs on a stable toolchain.

use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use netosc::doubled::{hat_h_structured, sparse_factors, sparsity_match};
use netosc::graph::{build_matrices, graph_from_json};
use netosc::sqrt::OperatorBundle;
use netosc::symmetry::{ModeModel, DEFAULT_TOL};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

fn mutate(rng: &mut StdRng, base: &[u8]) -> Vec<u8> {
    let mut out = base.to_vec();
    for _ in 0..rng.random_range(1..4) {
        let pos = rng.random_range(0..=out.len());
        match rng.random_range(0..3) {
            0 if pos < out.len() => {
                out.remove(pos);
            }
            1 => out.insert(pos, b",\n\t#.0123456789-eabc{}[]\":"[rng.random_range(0..25)]),
            _ if pos < out.len() => out[pos] = rng.random(),
            _ => {}
        }
    }
    out
}

fn inputs(target: &str, per_seed: usize) -> Vec<Vec<u8>> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut all = Vec::new();
    for s in seeds(target) {
        for _ in 0..per_seed {
            all.push(mutate(&mut rng, &s));
        }
        all.push(s);
    }
    all
}

fn edge_list_case(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = netosc::parse_edge_list(text) {
        let plain = g.labels().iter().all(|l| !l.contains([',', '\t', '#']) && l.trim() == l);
        if plain && !g.edges().is_empty() {
            let again = netosc::parse_edge_list(&g.to_edge_list()).expect("canonical form parses");
            assert_eq!(again.to_edge_list(), g.to_edge_list());
        }
    }
}

fn json_case(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = graph_from_json(text) {
        let back = serde_json::to_string(&g.to_json()).unwrap();
        assert_eq!(graph_from_json(&back).unwrap(), g);
    }
}

fn pipeline_case(data: &[u8]) {
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
}

#[test]
fn edge_list_seeds() {
    inputs("parse_edge_list", 300).iter().for_each(|d| edge_list_case(d));
}

#[test]
fn json_seeds() {
    inputs("graph_from_json", 300).iter().for_each(|d| json_case(d));
}

#[test]
fn pipeline_seeds() {
    inputs("edge_list_pipeline", 100).iter().for_each(|d| pipeline_case(d));
}
