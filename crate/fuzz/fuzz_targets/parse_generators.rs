#![no_main]
use libfuzzer_sys::fuzz_target;

use latt::formats::{emit_generators_file, parse_generators_file};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(gens) = parse_generators_file(text) {
        let dim = gens.first().map(|g| g.rows()).unwrap_or(1);
        let canon = emit_generators_file(dim, &gens);
        assert_eq!(parse_generators_file(&canon).expect("canonical form rejected"), gens);
    }
});
