//! Regenerates everything under fixtures/. Run from anywhere:
//!
//! ```text
//! cargo run --release -p latt --example gen_fixtures
//! ```
//!
//! Every file is rebuilt from the library's own constructors, self-checked,
//! and written in canonical form, so a diff after a rerun means the
//! constructors changed.

use std::path::{Path, PathBuf};

use latt::disc::discriminant_group;
use latt::enumerate::{coset_minimum, coset_short_vectors, minimum, EnumOptions};
use latt::error::Result;
use latt::formats::{
    emit_isometry_file, emit_lattice_file, emit_search_config, parse_isometry_file,
    parse_lattice_file, SearchConfigFile,
};
use latt::isom::{is_isometric, Isometry};
use latt::lattice::{lattice_sum_vectors, Lattice};
use latt::mat::{IntMatrix, RatMatrix};
use latt::rat::{rat, Rational};
use latt::search::Pinning;
use latt::stdlat::{an, d16_plus, dn, e8, e8_e8, leech};

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn write_lattice(dir: &Path, name: &str, l: &Lattice) {
    let l = l.clone().with_label(name);
    let text = emit_lattice_file(&l);
    let back = parse_lattice_file(&text).expect(name);
    assert!(back.same_lattice(&l), "{name} does not survive a round trip");
    assert_eq!(back.label.as_deref(), Some(name));
    std::fs::write(dir.join(format!("{name}.lat")), text).expect(name);
    println!("wrote {name}.lat");
}

/// Representative of minimal norm among the nonzero discriminant classes,
/// with that norm.
fn dual_min_rep(l: &Lattice) -> (Vec<Rational>, Rational) {
    let opts = EnumOptions::default();
    let d = discriminant_group(l).unwrap();
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for cls in d.all_classes() {
        if cls.iter().all(|c| c == &num_bigint::BigInt::from(0)) {
            continue;
        }
        let rep = d.representative(&cls);
        let m = coset_minimum(l, &rep, &opts).unwrap();
        let r = coset_short_vectors(l, &rep, &m, &opts).unwrap();
        let (x, _) = &r.vectors[0];
        let xr: Vec<Rational> = x.iter().map(|c| Rational::from(c.clone())).collect();
        let off = l.vector_from_coords(&xr);
        let v: Vec<Rational> = rep.iter().zip(off.iter()).map(|(a, b)| a + b).collect();
        match &best {
            None => best = Some((m, v)),
            Some((bm, _)) if m < *bm => best = Some((m, v)),
            _ => {}
        }
    }
    let (m, v) = best.unwrap();
    (v, m)
}

/// E8 built by gluing two copies of A4 along a diagonal line of their
/// discriminant groups.
fn glued_e8() -> Lattice {
    let a4 = an(4);
    let (rep, _) = dual_min_rep(&a4);
    let d = discriminant_group(&a4).unwrap();
    let joined = a4.orthogonal_sum(&a4);
    for u in 1..5u8 {
        let right = d.representative(&[u.into()]);
        let mut v = rep.clone();
        v.extend(right);
        let cand = lattice_sum_vectors(&joined, &[v]).unwrap();
        if cand.is_integral() && cand.is_even() && cand.is_unimodular() {
            return cand;
        }
    }
    panic!("no even unimodular glue of two A4 blocks found");
}

/// Coxeter element of A4 in its simple-root basis: the product of the four
/// simple reflections. Order 5 and fixed-point free.
fn a4_coxeter() -> IntMatrix {
    let a4 = an(4);
    let g = a4.gram();
    let mut c = RatMatrix::identity(4);
    for i in 0..4 {
        // Reflection in the i-th simple root, acting on row coordinates:
        // x maps to x - (x, b_i) b_i.
        let mut s = RatMatrix::identity(4);
        for j in 0..4 {
            *s.at_mut(j, i) = if j == i {
                rat(1, 1) - g.at(j, i)
            } else {
                -g.at(j, i).clone()
            };
        }
        c = c.mul(&s);
    }
    let ci = c.to_int().unwrap();
    let mut pw = RatMatrix::identity(4);
    for _ in 0..5 {
        pw = pw.mul(&c);
    }
    assert_eq!(pw, RatMatrix::identity(4), "Coxeter element order is not 5");
    Isometry::automorphism(&a4, ci.clone()).expect("Coxeter element is not an isometry");
    ci
}

/// Order-5 automorphism of the standard E8 basis, transported from the
/// diagonal Coxeter action on the glued model.
fn e8_order5_sigma(e8_std: &Lattice) -> Result<IntMatrix> {
    let opts = EnumOptions::default();
    let glued = glued_e8();
    let c = a4_coxeter().to_rat();
    // Both A4 blocks live in their own coordinates, so the ambient action
    // is the block diagonal.
    let ambient = c.block_diag(&c);
    let b = glued.basis();
    let s_glued = b.mul(&ambient).mul(&b.inverse()?).to_int()?;
    let sigma_glued = Isometry::automorphism(&glued, s_glued)?;

    let w = is_isometric(e8_std, &glued, &opts)?
        .expect("glued lattice is not isometric to E8");
    let wr = w.matrix().to_rat();
    let s_std = wr
        .mul(&sigma_glued.matrix().to_rat())
        .mul(&wr.inverse()?)
        .to_int()?;
    Isometry::automorphism(e8_std, s_std.clone())?;

    let mut pw = RatMatrix::identity(8);
    for _ in 0..5 {
        pw = pw.mul(&s_std.to_rat());
    }
    assert_eq!(pw, RatMatrix::identity(8), "transported order is not 5");
    Ok(s_std)
}

fn main() {
    let dir = fixtures_dir();
    std::fs::create_dir_all(&dir).unwrap();

    write_lattice(&dir, "z2", &Lattice::zn(2));
    write_lattice(&dir, "z4", &Lattice::zn(4));
    write_lattice(&dir, "z8", &Lattice::zn(8));
    write_lattice(&dir, "a2", &an(2));
    write_lattice(&dir, "a3", &an(3));
    write_lattice(&dir, "a4", &an(4));
    write_lattice(&dir, "d4", &dn(4));
    write_lattice(&dir, "d8", &dn(8));
    write_lattice(&dir, "e8", &e8());
    write_lattice(&dir, "d16plus", &d16_plus());
    write_lattice(&dir, "e8e8", &e8_e8());
    write_lattice(&dir, "leech", &leech());

    let a4 = an(4);
    let (rep, m) = dual_min_rep(&a4);
    assert_eq!(m, rat(4, 5), "A4 dual minimum changed");
    let cfg = SearchConfigFile {
        p: 5,
        glue_rank: 1,
        target: rat(2, 1),
        left: "a4.lat".into(),
        right: "a4.lat".into(),
        frame: vec![rep],
        gram: vec![vec![m]],
        pinning: Some(Pinning::TryAll),
        reorder: None,
        stabilizers: Some(true),
        require_extremal: None,
        symmetry: None,
        compare: Some("e8.lat".into()),
    };
    std::fs::write(dir.join("a4a4.cfg"), emit_search_config(&cfg)).unwrap();
    println!("wrote a4a4.cfg");

    for (name, p) in [("h1_p3.herm", 3u64), ("h1_p5.herm", 5u64)] {
        let mut one = vec![num_bigint::BigInt::from(0); (p - 1) as usize];
        one[0] = 1.into();
        let h = latt::autotype::CyclotomicMatrix::new(p, 1, vec![one]).unwrap();
        let text = latt::formats::emit_hermitian_file(&h);
        assert!(latt::formats::parse_hermitian_file(&text).is_ok());
        std::fs::write(dir.join(name), text).unwrap();
        println!("wrote {name}");
    }

    let e8_std = e8().with_label("e8");
    let sigma = e8_order5_sigma(&e8_std).unwrap();
    let text = emit_isometry_file(&sigma);
    assert_eq!(parse_isometry_file(&text).unwrap(), sigma);
    std::fs::write(dir.join("e8_order5.iso"), text).unwrap();
    println!("wrote e8_order5.iso");

    let opts = EnumOptions::default();
    let glued = glued_e8();
    assert_eq!(minimum(&glued, &opts).unwrap(), rat(2, 1));
    println!("fixtures complete");
}
