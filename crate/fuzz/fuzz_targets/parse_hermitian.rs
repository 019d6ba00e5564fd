#![no_main]
use libfuzzer_sys::fuzz_target;

use latt::formats::{emit_hermitian_file, parse_hermitian_file};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = parse_hermitian_file(text) {
        let canon = emit_hermitian_file(&h);
        let back = parse_hermitian_file(&canon).expect("canonical form rejected");
        assert_eq!(emit_hermitian_file(&back), canon);
    }
});
