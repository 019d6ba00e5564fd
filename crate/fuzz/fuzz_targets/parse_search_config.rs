#![no_main]
use libfuzzer_sys::fuzz_target;

use latt::formats::{emit_search_config, parse_search_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_search_config(text) {
        let canon = emit_search_config(&cfg);
        assert_eq!(parse_search_config(&canon).expect("canonical form rejected"), cfg);
    }
});
