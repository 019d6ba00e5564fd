#![no_main]
use libfuzzer_sys::fuzz_target;

use latt::formats::{emit_isometry_file, parse_isometry_file};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_isometry_file(text) {
        let canon = emit_isometry_file(&m);
        assert_eq!(parse_isometry_file(&canon).expect("canonical form rejected"), m);
    }
});
