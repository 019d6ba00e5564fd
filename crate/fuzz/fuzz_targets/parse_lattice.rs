#![no_main]
use libfuzzer_sys::fuzz_target;

use latt::formats::{emit_lattice_file, parse_lattice_file};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(l) = parse_lattice_file(text) {
        // anything accepted must survive a canonical round trip
        let canon = emit_lattice_file(&l);
        let back = parse_lattice_file(&canon).expect("canonical form rejected");
        assert_eq!(back.basis(), l.basis());
        assert_eq!(back.ambient_form(), l.ambient_form());
        assert_eq!(back.label, l.label);
        assert_eq!(emit_lattice_file(&back), canon);
    }
});
