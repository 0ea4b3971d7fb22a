#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = netosc::parse_edge_list(text) {
        // Labels containing separators cannot survive a round trip; everything else must.
        let plain = g.labels().iter().all(|l| !l.contains([',', '\t', '#']) && l.trim() == l);
        if plain && !g.edges().is_empty() {
            let again = netosc::parse_edge_list(&g.to_edge_list()).expect("canonical form parses");
            assert_eq!(again.to_edge_list(), g.to_edge_list());
        }
    }
});
