#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = netosc::graph::graph_from_json(text) {
        let back = serde_json::to_string(&g.to_json()).expect("serializes");
        assert_eq!(netosc::graph::graph_from_json(&back).expect("own output parses"), g);
    }
});
