//! End-to-end runs of the `latt` binary against the checked-in fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use latt::enumerate::{minimum, EnumOptions};
use latt::formats::parse_lattice_file;
use latt::lattice::Lattice;
use latt::stdlat::an;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn latt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latt"))
        .args(args)
        .env_remove("LATT_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn assert_line(text: &str, line: &str) {
    assert!(
        text.lines().any(|l| l == line),
        "missing line `{line}` in:\n{text}"
    );
}

fn parse_stdout_lattice(out: &Output) -> Lattice {
    assert_eq!(out.status.code(), Some(0), "stderr: {:?}", out.stderr);
    parse_lattice_file(&stdout_of(out)).expect("stdout is a lattice file")
}

#[test]
fn min_reports_e8_invariants() {
    let out = latt(&["min", fixture("e8.lat").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_line(&text, "command min");
    assert_line(&text, "minimum 2");
    assert_line(&text, "kissing 240");
    assert_line(&text, "determinant 1");
    assert_line(&text, "status ok");
}

#[test]
fn glue_search_finds_one_orbit_matching_e8() {
    let out = latt(&["glue-search", fixture("a4a4.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_line(&text, "orbits 1");
    assert_line(&text, "isometric to e8 fixture: true");
    assert_line(&text, "status ok");

    // Byte stability: an identical rerun reproduces the report exactly.
    let again = latt(&["glue-search", fixture("a4a4.cfg").to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn type_command_reports_order5_block_type() {
    let out = latt(&[
        "type",
        fixture("e8.lat").to_str().unwrap(),
        "--sigma",
        fixture("e8_order5.iso").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_line(&text, "type 5-(2,0)-0");
    assert_line(&text, "fixed-rank 0");
    assert_line(&text, "index 1");
}

#[test]
fn trace_lattice_p3_is_a2() {
    let out = latt(&[
        "trace-lattice",
        fixture("h1_p3.herm").to_str().unwrap(),
        "--p",
        "3",
        "--scale",
        "1",
    ]);
    let l = parse_stdout_lattice(&out);
    assert_eq!(l.gram(), an(2).gram());

    let mismatch = latt(&[
        "trace-lattice",
        fixture("h1_p3.herm").to_str().unwrap(),
        "--p",
        "5",
        "--scale",
        "1",
    ]);
    assert_eq!(mismatch.status.code(), Some(1));
}

#[test]
fn dual_then_lll_preserves_the_lattice() {
    let out = latt(&["dual", fixture("a4.lat").to_str().unwrap()]);
    let d = parse_stdout_lattice(&out);
    assert!(d.same_lattice(&an(4).dual()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a4dual.lat");
    std::fs::write(&path, stdout_of(&out)).unwrap();
    let out = latt(&["lll", path.to_str().unwrap()]);
    let r = parse_stdout_lattice(&out);
    assert!(r.same_lattice(&an(4).dual()));
}

#[test]
fn neighbor_of_z4_is_unimodular() {
    let out = latt(&["neighbor", fixture("z4.lat").to_str().unwrap(), "--p", "2"]);
    let n = parse_stdout_lattice(&out);
    assert!(n.is_integral());
    assert_eq!(n.determinant().to_string(), "1");
    assert_eq!(
        minimum(&n, &EnumOptions::default()).unwrap().to_string(),
        "1"
    );

    let out = latt(&[
        "neighbor",
        fixture("z4.lat").to_str().unwrap(),
        "--p",
        "2",
        "--witness",
        "1 1 1 1",
    ]);
    let n = parse_stdout_lattice(&out);
    assert_eq!(n.determinant().to_string(), "1");

    let bad = latt(&[
        "neighbor",
        fixture("z4.lat").to_str().unwrap(),
        "--p",
        "2",
        "--witness",
        "1 1",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn shortvecs_lists_sign_classes() {
    let out = latt(&[
        "shortvecs",
        fixture("a2.lat").to_str().unwrap(),
        "--bound",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_line(&text, "kissing 6");
    assert_line(&text, "vectors 3");
    assert_eq!(text.lines().filter(|l| l.starts_with("vector 2 ")).count(), 3);
}

#[test]
fn aut_generators_feed_group_sublattice() {
    let dir = tempfile::tempdir().unwrap();
    let gens = dir.path().join("a2.gen");
    let out = latt(&[
        "aut",
        fixture("a2.lat").to_str().unwrap(),
        "--emit-gens",
        gens.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_line(&stdout_of(&out), "order 12");

    let out = latt(&[
        "group-sublattice",
        fixture("a2.lat").to_str().unwrap(),
        "--gens",
        gens.to_str().unwrap(),
    ]);
    let s = parse_stdout_lattice(&out);
    assert!(an(2).contains_lattice(&s));
    assert_eq!(s.rank(), 2);
}

#[test]
fn genus_walk_reports_inert_prime_as_single_class() {
    let out = latt(&["genus-walk", fixture("a2.lat").to_str().unwrap(), "--p", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_line(&text, "classes 1");
    assert_line(&text, "edges 0");
    assert_line(&text, "complete true");
}

#[test]
fn iso_command_answers_both_ways() {
    let yes = latt(&[
        "iso",
        fixture("e8.lat").to_str().unwrap(),
        fixture("e8.lat").to_str().unwrap(),
    ]);
    assert_line(&stdout_of(&yes), "isometric true");

    let no = latt(&[
        "iso",
        fixture("d16plus.lat").to_str().unwrap(),
        fixture("e8e8.lat").to_str().unwrap(),
    ]);
    assert_eq!(no.status.code(), Some(0));
    assert_line(&stdout_of(&no), "isometric false");
}

#[test]
fn exit_codes_separate_failure_modes() {
    // Usage error from clap.
    let usage = latt(&["min"]);
    assert_eq!(usage.status.code(), Some(1));

    // Missing file.
    let missing = latt(&["min", fixture("missing.lat").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));

    // Malformed file.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.lat");
    std::fs::write(&bad, "latt-lattice 1\ndim 1\n").unwrap();
    let parse = latt(&["min", bad.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(1));

    // Budget exhaustion.
    let budget = Command::new(env!("CARGO_BIN_EXE_latt"))
        .args(["min", fixture("leech.lat").to_str().unwrap()])
        .env("LATT_BUDGET", "5")
        .output()
        .unwrap();
    assert_eq!(budget.status.code(), Some(2));

    // Truncated walk exits 2 with a report.
    let partial = latt(&[
        "genus-walk",
        fixture("z8.lat").to_str().unwrap(),
        "--p",
        "2",
        "--max-classes",
        "1",
    ]);
    assert_eq!(partial.status.code(), Some(2));
    assert_line(&stdout_of(&partial), "status incomplete");

    // Help is not an error.
    let help = latt(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
}
