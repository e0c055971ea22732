//! `perfcx` command-line front end. Every subcommand writes a JSON artifact
//! (stdout, or `--out`) and a short text summary on stderr. Exit status is
//! 0 when every check passed, 1 when a check failed, 2 on bad input.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use perfcx::complex::{FMod, GComplex, GComplexJson};
use perfcx::group::GroupModel;
use perfcx::lab::{build_vy, lab_report, tangent_space, Y};
use perfcx::perfection::{perfect, random_seed, resolve_seed, PipelineTrace, SeedShape};
use perfcx::resolution::{cup_table, group_cohomology, hyper_ext};
use perfcx::ring::{weierstrass, weierstrass_divide, AMat, Elem, Poly, Ring, Series};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "perfcx", version, about = "Exact homological algebra over truncated group algebras")]
struct Cli {
    /// Write the JSON artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gamma {
    /// `Z_2 x Z/2`.
    #[value(name = "Z2xZ2")]
    Z2xZ2,
    /// `Z_2 x Z/2 x Z/3`.
    #[value(name = "Z2xZ2xZ3")]
    Z2xZ2xZ3,
    /// Metabelian model with `w1`, `sigma`, one `w2`.
    #[value(name = "caseB")]
    CaseB,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Single,
    Surjective,
    TwoTerm,
    ThreeTerm,
}

impl From<Shape> for SeedShape {
    fn from(s: Shape) -> SeedShape {
        match s {
            Shape::Single => SeedShape::Single,
            Shape::Surjective => SeedShape::Surjective,
            Shape::TwoTerm => SeedShape::TwoTerm,
            Shape::ThreeTerm => SeedShape::ThreeTerm,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimensions of H^s(Gamma, F_2) with trivial action.
    Cohomology {
        #[arg(long, value_enum, default_value = "Z2xZ2")]
        gamma: Gamma,
        #[arg(long, default_value_t = 3)]
        max: usize,
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value_t = 3)]
        ell: u64,
    },
    /// Cup products of the Kummer classes of l, -1, -l.
    CupTable {
        #[arg(long, default_value_t = 3)]
        ell: u64,
        #[arg(long, default_value_t = 3)]
        level: u32,
    },
    /// Ext^1(V_y, V_y) for every y.
    Ext1 {
        #[arg(long, default_value_t = 3)]
        ell: u64,
        #[arg(long, default_value_t = 3)]
        level: u32,
    },
    /// Tangent spaces over k[eps], compared with Ext^1.
    Tangent {
        #[arg(long, default_value_t = 3)]
        ell: u64,
        #[arg(long, default_value_t = 3)]
        level: u32,
    },
    /// Lift classes over a test ring and the versality check.
    VersalCheck {
        /// `l`, `-1` or `-l`; all three if omitted.
        #[arg(long)]
        y: Option<String>,
        /// Test ring name; every default test ring if omitted.
        #[arg(long)]
        ring: Option<String>,
        #[arg(long, default_value_t = 3)]
        ell: u64,
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value_t = 1 << 22)]
        budget: u64,
    },
    /// Runs the perfection pipeline on a complex of free modules over the
    /// truncated group ring, or on a random seed resolved into one.
    Perfect {
        /// A complex in the GComplex schema; its terms must be free over `A[Gamma_L]`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        n1: Option<i32>,
        /// Degree from which the input's cohomology is genuine (default `n1`).
        #[arg(long, allow_negative_numbers = true)]
        exact_from: Option<i32>,
        #[arg(long, default_value = "F2")]
        ring: String,
        #[arg(long, value_enum, default_value = "Z2xZ2")]
        gamma: Gamma,
        #[arg(long, default_value_t = 2)]
        level: u32,
        #[arg(long, default_value_t = 3)]
        ell: u64,
        #[arg(long, value_enum, default_value = "two-term")]
        shape: Shape,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the trace alone here, for `verify-trace`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Replays a pipeline trace.
    VerifyTrace { path: PathBuf },
    /// Factors a power series as distinguished polynomial times unit.
    Weierstrass {
        #[arg(long)]
        ring: String,
        /// Coefficients, low degree first, comma separated (e.g. `2,u,1`).
        #[arg(long, allow_hyphen_values = true)]
        series: String,
        /// Precision; by default enough for the factorisation to be determined.
        #[arg(long)]
        precision: Option<usize>,
        /// Also divide this series by the input.
        #[arg(long, allow_hyphen_values = true)]
        divide: Option<String>,
    },
}

/// Result of a subcommand: the artifact, a summary, and whether its checks held.
struct Report {
    json: Value,
    summary: String,
    ok: bool,
}

fn report(json: impl Serialize, summary: String, ok: bool) -> Result<Report> {
    Ok(Report { json: serde_json::to_value(json)?, summary, ok })
}

fn debug(msg: impl AsRef<str>) {
    if std::env::var("PERFCX_LOG").map_or(false, |v| v == "debug") {
        eprintln!("[debug] {}", msg.as_ref());
    }
}

/// Test rings by name: the defaults, plus `Z/2^m` and `F2[x]/(x^n)`.
fn ring_by_name(name: &str) -> Result<Ring> {
    if let Some(r) = Ring::default_test_rings().into_iter().find(|r| r.name() == name) {
        return Ok(r);
    }
    if let Some(q) = name.strip_prefix("Z/").and_then(|s| s.parse::<u64>().ok()) {
        if q.is_power_of_two() && q > 1 {
            return Ok(Ring::zq(2, q.trailing_zeros())?);
        }
    }
    if let Some(rest) = name.strip_prefix("F2[") {
        if let Some((var, tail)) = rest.split_once("]/(") {
            if let Some(n) = tail.strip_prefix(&format!("{var}^")).and_then(|t| t.strip_suffix(')')).and_then(|t| t.parse().ok()) {
                return Ok(Ring::truncated_poly(2, 1, var, n)?);
            }
        }
    }
    let known: Vec<String> = Ring::default_test_rings().iter().map(|r| r.name().to_string()).collect();
    bail!("unknown ring '{name}' (known: {}, Z/2^m, F2[x]/(x^n))", known.join(", "))
}

fn group(gamma: Gamma, level: u32, ell: u64) -> Result<GroupModel> {
    Ok(match gamma {
        Gamma::Z2xZ2 => GroupModel::z2_times_z2(level),
        Gamma::Z2xZ2xZ3 => GroupModel::z2_times_z2(level).times_cyclic(3, "z1")?,
        Gamma::CaseB => GroupModel::case_b(2, ell, 1, 1, level, &[level], &[])?,
    })
}

fn parse_elem(ring: &Ring, s: &str) -> Result<Elem> {
    let vars: Vec<&str> = ring.vars().iter().map(|v| v.as_str()).collect();
    let p = Poly::parse(s.trim(), &vars).map_err(|e| anyhow!("coefficient '{s}': {e}"))?;
    let vals: Vec<Elem> = (0..vars.len()).map(|i| ring.var(i)).collect();
    Ok(ring.eval(&p, &vals))
}

fn parse_series(ring: &Ring, s: &str, precision: Option<usize>) -> Result<Series> {
    let cs = s.split(',').map(|c| parse_elem(ring, c)).collect::<Result<Vec<_>>>()?;
    // enough precision to pin down the factorisation
    let n = cs.iter().position(|c| ring.is_unit(c)).unwrap_or(0);
    let t = precision.unwrap_or_else(|| (cs.len() + n * ring.nilpotency()).max(n * (ring.nilpotency() + 1))).max(1);
    Ok(Series::from_elems(ring, t, &cs))
}

fn fmt_series(s: &Series) -> Vec<String> {
    s.c.iter().map(|c| s.ring.fmt_elem(c)).collect()
}

fn ys(y: &Option<String>) -> Result<Vec<Y>> {
    Ok(match y {
        Some(s) => vec![Y::parse(s)?],
        None => Y::ALL.to_vec(),
    })
}

fn run(cmd: Cmd) -> Result<Report> {
    match cmd {
        Cmd::Cohomology { gamma, max, level, ell } => {
            let g = group(gamma, level, ell)?;
            let k = Ring::zq(2, 1)?;
            let ids = vec![AMat::identity(&k, 1); g.ngens()];
            let dims = group_cohomology(&g, &FMod::free(&k, 1, &ids), max)?;
            let summary = dims.iter().enumerate().map(|(s, d)| format!("H^{s}: {d}")).collect::<Vec<_>>().join("  ");
            report(json!({ "group": g.spec(), "dims": dims }), summary, true)
        }
        Cmd::CupTable { ell, level } => {
            let t = cup_table(ell, level)?;
            let mut lines = vec![format!("H^2 basis: {}", t.h2_basis.join(", "))];
            for p in &t.products {
                lines.push(format!("{} . {} = {:?}  inflated {}  hilbert {}", p.left, p.right, p.vector, p.inflated, p.hilbert_symbol));
            }
            // every inflated product must match its Hilbert symbol
            let ok = t.products.iter().all(|p| (p.inflated == 1) == (p.hilbert_symbol == -1));
            report(&t, lines.join("\n"), ok)
        }
        Cmd::Ext1 { ell, level } => {
            let mut out = vec![];
            let mut lines = vec![];
            for y in Y::ALL {
                let p = build_vy(y, ell, level)?;
                let e = hyper_ext(&p.base, &p.base, 1, 2)?;
                lines.push(format!("{y}: dim Ext^1 = {}", e.log_size));
                out.push(json!({ "y": y, "ext": e }));
            }
            report(out, lines.join("\n"), true)
        }
        Cmd::Tangent { ell, level } => {
            let mut out = vec![];
            for y in Y::ALL {
                out.push(tangent_space(&build_vy(y, ell, level)?)?);
            }
            let summary = out.iter().map(|r| format!("{}: {} classes, dim {}, Ext^1 {}", r.y, r.count, r.dimension, r.ext1_dimension)).collect::<Vec<_>>().join("\n");
            let ok = out.iter().all(|r| r.agrees);
            report(out, summary, ok)
        }
        Cmd::VersalCheck { y, ring, ell, level, budget } => {
            let rings = match ring {
                Some(n) => vec![ring_by_name(&n)?],
                None => Ring::default_test_rings(),
            };
            let mut out = vec![];
            let mut lines = vec![];
            let mut ok = true;
            for y in ys(&y)? {
                let p = build_vy(y, ell, level)?;
                for r in &rings {
                    let t = Instant::now();
                    let rep = lab_report(&p, r, budget)?;
                    debug(format!("{y}/{} in {:.1?}", r.name(), t.elapsed()));
                    let v = &rep.versality;
                    ok &= v.surjective && v.proflat_exact;
                    lines.push(format!(
                        "{y} / {}: {} classes, surjective {}, bijective {}, non-proflat {}",
                        r.name(),
                        rep.class_count,
                        v.surjective,
                        v.bijective,
                        v.non_proflat.len()
                    ));
                    out.push(rep);
                }
            }
            report(out, lines.join("\n"), ok)
        }
        Cmd::Perfect { input, n1, exact_from, ring, gamma, level, ell, shape, seed, trace } => {
            let (p, n1, exact_from, source) = match input {
                Some(path) => {
                    let j: GComplexJson = serde_json::from_str(&std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?)
                        .context("input is not a GComplex")?;
                    let c = GComplex::from_json(&j).map_err(|e| anyhow!("input complex: {e}"))?;
                    let n1 = n1.ok_or_else(|| anyhow!("--n1 is required with --input"))?;
                    (c, n1, exact_from.unwrap_or(n1), json!({ "input": path }))
                }
                None => {
                    let r = ring_by_name(&ring)?;
                    let g = group(gamma, level, ell)?;
                    let s = random_seed(&r, &g, shape.into(), &mut ChaCha8Rng::seed_from_u64(seed))?;
                    let seed_json = s.complex.to_json();
                    let (c, ef) = resolve_seed(&s)?;
                    (c, n1.unwrap_or(s.n1), exact_from.unwrap_or(ef), json!({ "seed": seed, "shape": SeedShape::from(shape), "complex": seed_json }))
                }
            };
            let t = Instant::now();
            let out = perfect(&p, n1, exact_from)?;
            debug(format!("pipeline in {:.1?}", t.elapsed()));
            let verified = out.trace.verify();
            if let Some(path) = trace {
                write_atomic(&path, &out.trace.to_json())?;
            }
            let ranks = out.ranks();
            let summary = format!(
                "A-ranks {:?}, support {:?} in [{}, {}], {} legs, trace {}",
                ranks,
                out.support(),
                out.n1,
                out.n2,
                out.trace.legs.len(),
                match &verified {
                    Ok(()) => "verified".to_string(),
                    Err(e) => format!("FAILED: {e}"),
                }
            );
            let j = json!({
                "source": source,
                "resolved": p.to_json(),
                "exactFrom": exact_from,
                "n1": out.n1,
                "n2": out.n2,
                "ranks": ranks,
                "support": out.support(),
                "ideal": out.ideal,
                "complex": out.complex.to_json(),
                "trace": out.trace,
            });
            report(j, summary, verified.is_ok())
        }
        Cmd::VerifyTrace { path } => {
            let s = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let t = PipelineTrace::from_json(&s)?;
            match t.verify() {
                Ok(()) => report(json!({ "verified": true, "legs": t.legs.len() }), format!("{} legs verified", t.legs.len()), true),
                Err(e) => {
                    let leg = match &e {
                        perfcx::perfection::TraceError::Leg { leg, .. } => Some(*leg),
                        _ => None,
                    };
                    report(json!({ "verified": false, "failingLeg": leg, "error": e.to_string() }), format!("verification failed: {e}"), false)
                }
            }
        }
        Cmd::Weierstrass { ring, series, precision, divide } => {
            let r = ring_by_name(&ring)?;
            let f = parse_series(&r, &series, precision)?;
            let w = weierstrass(&f)?;
            // u is only determined to its own precision
            let p = w.u.trunc();
            let ok_factor = w.h.with_trunc(p).mul(&w.u) == f.with_trunc(p);
            let mut j = json!({
                "ring": r.name(),
                "precision": f.trunc(),
                "degree": w.n,
                "h": fmt_series(&w.h),
                "u": fmt_series(&w.u),
                "verified": ok_factor,
            });
            let mut summary = format!("f = h u with deg h = {}; h = {:?}", w.n, fmt_series(&w.h));
            let mut ok = ok_factor;
            if let Some(g) = divide {
                let g = parse_series(&r, &g, Some(f.trunc()))?;
                let (q, rem) = weierstrass_divide(&g, &f)?;
                let t = g.trunc().min(f.trunc());
                let ok_div = q.with_trunc(t).mul(&f.with_trunc(t)).add(&rem.with_trunc(t)) == g.with_trunc(t);
                j["division"] = json!({ "q": fmt_series(&q), "r": fmt_series(&rem), "verified": ok_div });
                summary.push_str(&format!("\ng = q f + r with r = {:?}", fmt_series(&rem)));
                ok &= ok_div;
            }
            report(j, summary, ok)
        }
    }
}

/// Writes through a temporary file so readers never see half an artifact.
fn write_atomic(path: &Path, s: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, s).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(r) => {
            let body = serde_json::to_string_pretty(&r.json).expect("serialisable") + "\n";
            let written = match &cli.out {
                Some(p) => write_atomic(p, &body),
                None => std::io::stdout().write_all(body.as_bytes()).map_err(Into::into),
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            eprintln!("{}", r.summary);
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
