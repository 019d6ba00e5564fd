//! Command-line front end. Lattice-producing commands (dual, lll, neighbor,
//! trace-lattice, group-sublattice) write a lattice file to stdout so runs
//! compose; everything else writes a `latt-report 1` block with a fixed key
//! order, byte-stable for fixed inputs and a fixed job count.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 budget exhausted or a
//! partial result (stopped early, truncated walk), 3 a result failed its
//! own postcondition re-check.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_traits::Signed;

use latt::autotype::decompose;
use latt::disc::discriminant_group;
use latt::enumerate::{enumerate_short, kissing_number, minimum, EnumOptions};
use latt::error::{Error, Result};
use latt::formats::{
    build_search_config, emit_generators_file, emit_lattice_file, load_lattice,
    parse_generators_file, parse_hermitian_file, parse_isometry_file, parse_rational,
    parse_search_config,
};
use latt::isom::{
    automorphism_group, group_difference_sublattice, is_isometric, is_isometric_with_symmetry,
    Isometry,
};
use latt::lattice::{lattice_sum, Lattice};
use latt::lll::{default_delta, lll_reduce};
use latt::neighbor::{first_admissible_witness, genus_walk, neighbor_step, WalkLimits};
use latt::rat::Rational;
use latt::search::{run_search_controlled, RunControl};

#[derive(Parser)]
#[command(name = "latt", version, about = "Exact arithmetic lattice toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimum norm and kissing number
    Min { file: PathBuf },
    /// All vectors of norm at most a bound, up to sign
    Shortvecs {
        file: PathBuf,
        /// Norm bound, a positive rational
        #[arg(long)]
        bound: String,
    },
    /// Dual lattice
    Dual { file: PathBuf },
    /// LLL-reduced basis of the same lattice
    Lll { file: PathBuf },
    /// Discriminant group structure
    Disc { file: PathBuf },
    /// Automorphism group order via backtracking
    Aut {
        file: PathBuf,
        /// Truncate the backtracking depth to vectors of this norm
        #[arg(long)]
        depth_norm: Option<String>,
        /// Write the generators found to this file
        #[arg(long)]
        emit_gens: Option<PathBuf>,
    },
    /// Test two lattices for isometry
    Iso { left: PathBuf, right: PathBuf },
    /// Fixed/cyclotomic type of a prime-order automorphism
    Type {
        file: PathBuf,
        /// Isometry file holding the automorphism
        #[arg(long)]
        sigma: PathBuf,
    },
    /// Trace lattice of a Hermitian matrix over a prime cyclotomic field
    TraceLattice {
        hfile: PathBuf,
        /// Prime, cross-checked against the matrix file
        #[arg(long)]
        p: u64,
        /// Scale factor applied to the trace form, a positive rational
        #[arg(long)]
        scale: String,
    },
    /// Glue-vector overlattice search from a configuration file
    GlueSearch {
        config: PathBuf,
        /// Resume from this checkpoint file (and keep writing to it)
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Write checkpoints to this file
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Parallel branch width
        #[arg(long)]
        jobs: Option<usize>,
        /// Stop after this many anchor branches (leaves a resumable checkpoint)
        #[arg(long)]
        stop_after_branches: Option<usize>,
    },
    /// One Kneser neighbor step
    Neighbor {
        file: PathBuf,
        #[arg(long)]
        p: u64,
        /// Witness vector, ambient rational coordinates separated by spaces;
        /// found by enumeration when omitted
        #[arg(long)]
        witness: Option<String>,
    },
    /// Closure of the p-neighbor relation from a seed lattice
    GenusWalk {
        file: PathBuf,
        #[arg(long)]
        p: u64,
        /// Parallel frontier width
        #[arg(long)]
        jobs: Option<usize>,
        /// Stop once this many classes are known
        #[arg(long)]
        max_classes: Option<usize>,
        /// Stop after this many neighbor steps
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Sublattice spanned by the differences x - x*g over the generators
    GroupSublattice {
        file: PathBuf,
        /// Generators file
        #[arg(long)]
        gens: PathBuf,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(1);
                }
            }
        }
    };
    // Output is buffered so a failing run never emits a partial report.
    let mut out = String::new();
    match run(&cli.cmd, &mut out) {
        Ok(code) => {
            use std::io::Write;
            let mut stdout = std::io::stdout();
            let _ = stdout.write_all(out.as_bytes());
            let _ = stdout.flush();
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("latt: error: {e}");
            std::process::exit(match e {
                Error::BudgetExhausted { .. } => 2,
                Error::Verification(_) => 3,
                _ => 1,
            });
        }
    }
}

fn rational_arg(name: &str, tok: &str) -> Result<Rational> {
    parse_rational(tok).map_err(|_| Error::Input(format!("invalid --{name} value `{tok}`")))
}

fn header(out: &mut String, command: &str) {
    let _ = writeln!(out, "latt-report 1");
    let _ = writeln!(out, "command {command}");
}

fn describe(out: &mut String, l: &Lattice) {
    if let Some(label) = &l.label {
        let _ = writeln!(out, "label {label}");
    }
    let _ = writeln!(out, "rank {}", l.rank());
    let _ = writeln!(out, "determinant {}", l.determinant());
}

fn status(out: &mut String, ok: bool) -> i32 {
    let _ = writeln!(out, "status {}", if ok { "ok" } else { "incomplete" });
    if ok {
        0
    } else {
        2
    }
}

fn verify(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Verification(format!("re-check failed: {what}")))
    }
}

fn run(cmd: &Cmd, out: &mut String) -> Result<i32> {
    let opts = EnumOptions::default();
    match cmd {
        Cmd::Min { file } => {
            let l = load_lattice(file)?;
            let (min, kissing) = kissing_number(&l, &opts)?;
            verify(minimum(&l, &opts)? == min, "minimum re-enumeration")?;
            header(out, "min");
            describe(out, &l);
            let _ = writeln!(out, "minimum {min}");
            let _ = writeln!(out, "kissing {kissing}");
            Ok(status(out, true))
        }
        Cmd::Shortvecs { file, bound } => {
            let l = load_lattice(file)?;
            let bound = rational_arg("bound", bound)?;
            let rep = enumerate_short(&l, &bound, &opts)?;
            for (coords, norm) in &rep.vectors {
                let xr: Vec<Rational> =
                    coords.iter().map(|c| Rational::from(c.clone())).collect();
                verify(&l.norm(&l.vector_from_coords(&xr)) == norm, "listed norm")?;
            }
            header(out, "shortvecs");
            describe(out, &l);
            let _ = writeln!(out, "bound {bound}");
            match &rep.minimum {
                Some(m) => {
                    let _ = writeln!(out, "minimum {m}");
                }
                None => {
                    let _ = writeln!(out, "minimum none");
                }
            }
            let _ = writeln!(out, "kissing {}", rep.kissing);
            let _ = writeln!(out, "vectors {}", rep.vectors.len());
            for (coords, norm) in &rep.vectors {
                let cs: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "vector {norm} {}", cs.join(" "));
            }
            Ok(status(out, true))
        }
        Cmd::Dual { file } => {
            let l = load_lattice(file)?;
            let mut d = l.dual();
            verify(d.dual().same_lattice(&l), "double dual")?;
            d.label = l.label.as_ref().map(|s| format!("{s} dual"));
            let _ = write!(out, "{}", emit_lattice_file(&d));
            Ok(0)
        }
        Cmd::Lll { file } => {
            let l = load_lattice(file)?;
            let (r, u) = lll_reduce(&l, &default_delta())?;
            verify(r.same_lattice(&l), "reduced lattice equality")?;
            verify(
                u.to_rat().mul(l.basis()) == *r.basis(),
                "reduction transform",
            )?;
            let _ = write!(out, "{}", emit_lattice_file(&r));
            Ok(0)
        }
        Cmd::Disc { file } => {
            let l = load_lattice(file)?;
            let dg = discriminant_group(&l)?;
            let det = l.determinant();
            verify(
                Rational::from(dg.order()) == det,
                "group order equals determinant",
            )?;
            header(out, "disc");
            describe(out, &l);
            let _ = writeln!(out, "order {}", dg.order());
            let orders = dg.orders();
            let _ = writeln!(out, "factors {}", orders.len());
            let toks: Vec<String> = orders.iter().map(|o| o.to_string()).collect();
            let _ = writeln!(out, "invariants {}", toks.join(" "));
            Ok(status(out, true))
        }
        Cmd::Aut {
            file,
            depth_norm,
            emit_gens,
        } => {
            let l = load_lattice(file)?;
            let depth = depth_norm
                .as_ref()
                .map(|s| rational_arg("depth-norm", s))
                .transpose()?;
            let g = automorphism_group(&l, depth.as_ref(), &opts)?;
            for gen in g.generators() {
                Isometry::automorphism(&l, gen.matrix().clone())
                    .map_err(|_| Error::Verification("re-check failed: generator".into()))?;
            }
            if let Some(path) = emit_gens {
                let mats: Vec<_> = g.generators().iter().map(|i| i.matrix().clone()).collect();
                std::fs::write(path, emit_generators_file(l.rank(), &mats))?;
            }
            header(out, "aut");
            describe(out, &l);
            if let Some(d) = &depth {
                let _ = writeln!(out, "depth-norm {d}");
            }
            let _ = writeln!(out, "order {}", g.order());
            let _ = writeln!(out, "generators {}", g.generators().len());
            Ok(status(out, true))
        }
        Cmd::Iso { left, right } => {
            let a = load_lattice(left)?;
            let b = load_lattice(right)?;
            let witness = is_isometric(&a, &b, &opts)?;
            if let Some(iso) = &witness {
                Isometry::witness(&a, &b, iso.matrix().clone())
                    .map_err(|_| Error::Verification("re-check failed: isometry witness".into()))?;
            }
            header(out, "iso");
            let _ = writeln!(out, "isometric {}", witness.is_some());
            Ok(status(out, true))
        }
        Cmd::Type { file, sigma } => {
            let l = load_lattice(file)?;
            let text = std::fs::read_to_string(sigma)?;
            let m = parse_isometry_file(&text)?;
            let iso = Isometry::automorphism(&l, m)?;
            let dec = decompose(&l, &iso)?;
            let ty = dec.ty();
            let p = ty.p as usize;
            verify(
                dec.fixed().rank() == ty.d && dec.image().rank() == ty.z * (p - 1),
                "rank split",
            )?;
            verify(ty.d + ty.z * (p - 1) == l.rank(), "rank sum")?;
            let expected = BigInt::from(ty.p).pow(ty.s as u32);
            let sum = if dec.fixed().rank() == 0 {
                dec.image().clone()
            } else if dec.image().rank() == 0 {
                dec.fixed().clone()
            } else {
                lattice_sum(dec.fixed(), dec.image())?
            };
            verify(
                sum.index_in(&l).as_ref() == Some(&expected),
                "glue index p^s",
            )?;
            header(out, "type");
            describe(out, &l);
            let _ = writeln!(out, "type {ty}");
            let _ = writeln!(out, "fixed-rank {}", ty.d);
            let _ = writeln!(out, "image-rank {}", ty.z * (p - 1));
            let _ = writeln!(out, "index {expected}");
            Ok(status(out, true))
        }
        Cmd::TraceLattice { hfile, p, scale } => {
            let text = std::fs::read_to_string(hfile)?;
            let h = parse_hermitian_file(&text)?;
            if h.p() != *p {
                return Err(Error::Input(format!(
                    "--p {} does not match the file's prime {}",
                    p,
                    h.p()
                )));
            }
            let scale = rational_arg("scale", scale)?;
            if !scale.is_positive() {
                return Err(Error::Input("--scale must be positive".into()));
            }
            let t = latt::autotype::hermitian_trace_lattice(&h, &scale)?;
            let _ = write!(out, "{}", emit_lattice_file(&t));
            Ok(0)
        }
        Cmd::GlueSearch {
            config,
            resume,
            checkpoint,
            jobs,
            stop_after_branches,
        } => {
            let text = std::fs::read_to_string(config)?;
            let cfgf = parse_search_config(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", config.display())))?;
            let base = config.parent().unwrap_or_else(|| Path::new("."));
            let (mut sc, compare) = build_search_config(&cfgf, base)?;
            if let Some(j) = jobs {
                sc = sc.with_jobs(*j);
            }
            let control = RunControl {
                checkpoint_path: checkpoint.as_deref().or(resume.as_deref()),
                resume_from: resume.as_deref(),
                stop_after_branches: *stop_after_branches,
            };
            let res = run_search_controlled(&sc, &control, None)?;
            for f in &res.lattices {
                verify(minimum(&f.lattice, &opts)? == f.minimum, "orbit minimum")?;
                verify(f.minimum >= *sc.target_min(), "orbit meets target")?;
            }
            header(out, "glue-search");
            let _ = writeln!(out, "digest {}", sc.digest());
            let _ = writeln!(out, "branches {}", res.stats.branches);
            let _ = writeln!(out, "nodes {}", res.stats.nodes);
            let _ = writeln!(out, "raw-found {}", res.stats.raw_found);
            let _ = writeln!(out, "infeasible {}", res.infeasible);
            let _ = writeln!(out, "orbits {}", res.lattices.len());
            for (i, f) in res.lattices.iter().enumerate() {
                let _ = write!(
                    out,
                    "orbit {i} minimum {} kissing {} determinant {} times-found {}",
                    f.minimum,
                    f.kissing,
                    f.lattice.determinant(),
                    f.times_found
                );
                match &f.stabilizer_order {
                    Some(s) => {
                        let _ = writeln!(out, " stabilizer {s}");
                    }
                    None => {
                        let _ = writeln!(out);
                    }
                }
                if let Some(c) = &compare {
                    let name = c.label.clone().unwrap_or_else(|| "compare".into());
                    let same = is_isometric_with_symmetry(&f.lattice, c, None, &opts)?.is_some();
                    let _ = writeln!(out, "isometric to {name} fixture: {same}");
                }
            }
            let complete = !res.stopped_early && res.exhausted_branches.is_empty();
            Ok(status(out, complete))
        }
        Cmd::Neighbor { file, p, witness } => {
            let l = load_lattice(file)?;
            let v = match witness {
                Some(s) => {
                    let toks: Vec<&str> = s.split_whitespace().collect();
                    if toks.len() != l.ambient_dim() {
                        return Err(Error::Input(format!(
                            "--witness has {} coordinates, ambient dimension is {}",
                            toks.len(),
                            l.ambient_dim()
                        )));
                    }
                    toks.iter()
                        .map(|t| rational_arg("witness", t))
                        .collect::<Result<Vec<_>>>()?
                }
                None => first_admissible_witness(&l, *p, &opts)?,
            };
            let mut step = neighbor_step(&l, &v, *p)?;
            step.result.label = l.label.as_ref().map(|s| format!("{s} {p}-neighbor"));
            let _ = write!(out, "{}", emit_lattice_file(&step.result));
            Ok(0)
        }
        Cmd::GenusWalk {
            file,
            p,
            jobs,
            max_classes,
            max_steps,
        } => {
            let l = load_lattice(file)?;
            let limits = WalkLimits {
                max_classes: *max_classes,
                max_steps: *max_steps,
                jobs: jobs.unwrap_or(1),
            };
            let w = genus_walk(&l, *p, &limits, &opts)?;
            header(out, "genus-walk");
            describe(out, &l);
            let _ = writeln!(out, "p {p}");
            let _ = writeln!(out, "classes {}", w.classes.len());
            for (i, c) in w.classes.iter().enumerate() {
                let (min, kissing) = kissing_number(c, &opts)?;
                let _ = writeln!(
                    out,
                    "class {i} minimum {min} kissing {kissing} determinant {} aut {}",
                    c.determinant(),
                    w.aut_orders[i]
                );
            }
            let _ = writeln!(out, "edges {}", w.edges.len());
            for (a, b) in &w.edges {
                let _ = writeln!(out, "edge {a} {b}");
            }
            let _ = writeln!(out, "mass {}", w.mass);
            let _ = writeln!(out, "p-divides-det {}", w.p_divides_det);
            let _ = writeln!(out, "complete {}", w.complete);
            Ok(status(out, w.complete))
        }
        Cmd::GroupSublattice { file, gens } => {
            let l = load_lattice(file)?;
            let text = std::fs::read_to_string(gens)?;
            let mats = parse_generators_file(&text)?;
            let isos = mats
                .into_iter()
                .map(|m| Isometry::automorphism(&l, m))
                .collect::<Result<Vec<_>>>()?;
            let s = group_difference_sublattice(&l, &isos)?;
            if s.rank() == 0 {
                return Err(Error::Input(
                    "difference sublattice is zero; nothing to write".into(),
                ));
            }
            verify(l.contains_lattice(&s), "containment in the source")?;
            let _ = write!(out, "{}", emit_lattice_file(&s));
            Ok(0)
        }
    }
}
