//! End-to-end acceptance run: one PASS/FAIL line per criterion, each with
//! its own wall-clock budget.

use perfcx::complex::FMod;
use perfcx::group::{GroupModel, NormalForm};
use perfcx::lab::{build_vy, enumerate_lifts, inflation_check, raw_cross_check, tangent_space, verify_versality, Y};
use perfcx::perfection::{perfect, random_seed, resolve_seed, PerfectionError, PipelineTrace, SeedShape};
use perfcx::resolution::{cup_table, group_cohomology};
use perfcx::ring::{weierstrass, weierstrass_divide, AMat, Ring, Series};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

const ELL: u64 = 3;
const BUDGET: [u64; 9] = [5, 30, 300, 600, 900, 1200, 60, 60, 600];

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c1_cohomology() -> Outcome {
    let k = Ring::zq(2, 1).unwrap();
    let group = GroupModel::z2_times_z2(3);
    let ids = vec![AMat::identity(&k, 1); group.ngens()];
    let m = FMod::free(&k, 1, &ids);
    match group_cohomology(&group, &m, 3) {
        Ok(d) => ok(d == [1, 2, 2, 2], format!("dims {d:?}")),
        Err(e) => ok(false, e.to_string()),
    }
}

fn c2_cup_table() -> Outcome {
    let t = match cup_table(ELL, 3) {
        Ok(t) => t,
        Err(e) => return ok(false, e.to_string()),
    };
    let get = |a: &str, b: &str| t.products.iter().find(|p| p.left == a && p.right == b).cloned();
    let (Some(ll), Some(lm), Some(lml)) = (get("h_l", "h_l"), get("h_l", "h_-1"), get("h_l", "h_-l")) else {
        return ok(false, "missing products");
    };
    // h_l.h_-l vanishes after inflation to the Galois group, where the
    // inflation is the Hilbert symbol; in H^2(Gamma) it is the sum of the other two
    let pass = ll.nonzero
        && lm.nonzero
        && ll.vector != lm.vector
        && ll.inflated == 1
        && lm.inflated == 1
        && lml.inflated == 0
        && ll.restricted_to_w2 == 1
        && lm.restricted_to_w2 == 0;
    ok(
        pass,
        format!(
            "l.l={:?} l.-1={:?} l.-l={:?}; inflated {}, {}, {}",
            ll.vector, lm.vector, lml.vector, ll.inflated, lm.inflated, lml.inflated
        ),
    )
}

fn c3_ext1() -> Outcome {
    let mut parts = vec![];
    let mut pass = true;
    for (y, bound) in [(Y::Ell, 3), (Y::MinusEll, 3), (Y::MinusOne, 4)] {
        match build_vy(y, ELL, 3).map_err(|e| e.to_string()).and_then(|p| tangent_space(&p).map_err(|e| e.to_string())) {
            Ok(r) => {
                pass &= r.ext1_dimension >= bound && r.agrees;
                parts.push(format!("{y}: ext1={} tangent={}", r.ext1_dimension, r.dimension));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{y}: {e}"));
            }
        }
    }
    ok(pass, parts.join(", "))
}

fn c4_tangent_counts() -> Outcome {
    let de = Ring::dual_numbers(2).unwrap();
    let z4 = Ring::zq(2, 2).unwrap();
    let mut parts = vec![];
    let mut pass = true;
    for (y, want) in [(Y::Ell, 8), (Y::MinusEll, 8), (Y::MinusOne, 16)] {
        let p = build_vy(y, ELL, 3).unwrap();
        let n = enumerate_lifts(&p, &de, 1 << 20).map(|c| c.class_count()).unwrap_or(0);
        pass &= n == want && n.is_power_of_two();
        let mut raw = vec![];
        for r in [&de, &z4] {
            match raw_cross_check(&p, r, 1 << 22) {
                Ok(x) => {
                    pass &= x.classes == x.normal_form_classes && x.unmatched == 0 && x.normal_forms_contained;
                    raw.push(format!("{}:{}={}", r.name(), x.classes, x.normal_form_classes));
                }
                Err(e) => {
                    pass = false;
                    raw.push(format!("{}: {e}", r.name()));
                }
            }
        }
        parts.push(format!("{y}: {n} (raw {})", raw.join(" ")));
    }
    ok(pass, parts.join(", "))
}

fn c5_versality() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    for y in Y::ALL {
        let p = build_vy(y, ELL, 3).unwrap();
        for ring in Ring::default_test_rings() {
            let v = match enumerate_lifts(&p, &ring, 1 << 22).map_err(|e| e.to_string()).and_then(|c| verify_versality(&p, &c).map(|v| (c, v)).map_err(|e| e.to_string())) {
                Ok(x) => x,
                Err(e) => {
                    pass = false;
                    parts.push(format!("{y}/{}: {e}", ring.name()));
                    continue;
                }
            };
            let (classes, v) = v;
            pass &= v.surjective;
            if ring.name() == Ring::dual_numbers(2).unwrap().name() {
                pass &= v.bijective;
            }
            if y == Y::Ell && ring.name() == "F2[u]/(u^3)" {
                let witness = v.non_proflat.iter().any(|w| w.morphism.is_some() && !w.hit_by_proflat);
                pass &= witness;
                parts.push(format!("l/{}: {} classes, non-proflat witness {}", ring.name(), classes.class_count(), witness));
            }
        }
    }
    ok(pass, if parts.is_empty() { "no witness ring".into() } else { parts.join(", ") })
}

struct PerfRun {
    ranks: Vec<(i32, usize)>,
    verified: bool,
    free: bool,
    in_support: bool,
}

fn perf_once(ring: &Ring, group: &GroupModel, shape: SeedShape, seed: u64) -> Result<PerfRun, PerfectionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_seed(ring, group, shape, &mut rng)?;
    let (p, exact_from) = resolve_seed(&s)?;
    let out = perfect(&p, s.n1, exact_from)?;
    // replay from the serialised form, as a consumer would
    let verified = out.trace.verify().is_ok() && PipelineTrace::from_json(&out.trace.to_json()).map_or(false, |t| t.verify().is_ok());
    let fc = out.complex.to_fcomplex();
    let free = out.complex.validate().is_ok() && fc.terms.iter().all(|t| t.is_a_free(ring));
    let in_support = out.support().map_or(true, |(a, b)| a >= out.n1 && b <= out.n2);
    Ok(PerfRun { ranks: out.ranks().into_iter().filter(|r| r.1 > 0).collect(), verified, free, in_support })
}

/// Runs one seed at two levels; `Ok(all four properties)`.
fn perf_pair(ring: &Ring, groups: &[GroupModel; 2], shape: SeedShape, seed: u64) -> Result<(bool, bool), PerfectionError> {
    let a = perf_once(ring, &groups[0], shape, seed)?;
    let b = perf_once(ring, &groups[1], shape, seed)?;
    let abc = a.verified && b.verified && a.free && b.free && a.in_support && b.in_support;
    Ok((abc, a.ranks == b.ranks))
}

fn c6_perfection() -> Outcome {
    let f2 = Ring::zq(2, 1).unwrap();
    let de = Ring::dual_numbers(2).unwrap();
    let za = |l| GroupModel::z2_times_z2(l);
    let za3 = |l| GroupModel::z2_times_z2(l).times_cyclic(3, "z1").unwrap();
    let zb = |l| GroupModel::case_b(2, ELL, 1, 1, l, &[l], &[]).unwrap();
    let two_degree_a = [SeedShape::Single, SeedShape::Surjective, SeedShape::TwoTerm];
    let two_degree_b = [SeedShape::Single, SeedShape::Surjective];
    let mut jobs: Vec<(&str, &Ring, [GroupModel; 2], SeedShape, u64)> = vec![];
    for s in 0..2 {
        for &sh in &two_degree_a {
            jobs.push(("A", &f2, [za(2), za(3)], sh, s));
            jobs.push(("A", &de, [za(2), za(3)], sh, s));
        }
    }
    for &sh in &two_degree_a {
        jobs.push(("A+Z/3", &f2, [za3(2), za3(3)], sh, 7));
    }
    for s in 0..4 {
        for &sh in &two_degree_b {
            jobs.push(("B", &f2, [zb(2), zb(3)], sh, s));
        }
    }
    let (mut good, mut fails) = (0, vec![]);
    for (name, ring, groups, shape, seed) in &jobs {
        match perf_pair(ring, groups, *shape, *seed) {
            Ok((true, true)) => good += 1,
            Ok((abc, stable)) => fails.push(format!("{name}/{}/{shape:?}/{seed}: abc={abc} stable={stable}", ring.name())),
            Err(e) => fails.push(format!("{name}/{}/{shape:?}/{seed}: {e}", ring.name())),
        }
    }
    // outside the two-degree family: reported, not scored
    let (mut three_ok, mut three_stable) = (0, 0);
    for s in 0..4 {
        if let Ok((abc, stable)) = perf_pair(&f2, &[za(2), za(3)], SeedShape::ThreeTerm, s) {
            three_ok += abc as usize;
            three_stable += stable as usize;
        }
    }
    let mut section_failed = 0;
    let mut b_multi = 0;
    for s in 0..3 {
        for sh in [SeedShape::TwoTerm, SeedShape::ThreeTerm] {
            b_multi += 1;
            if let Err(PerfectionError::SectionFailed(_)) = perf_once(&f2, &zb(2), sh, s) {
                section_failed += 1;
            }
        }
    }
    let n = jobs.len();
    ok(
        n >= 20 && good == n,
        format!(
            "{good}/{n} complexes in two adjacent degrees pass (a)-(d){}; informational: case-A three-term (a)-(c) {three_ok}/4, rank-stable {three_stable}/4; case-B multi-degree SectionFailed {section_failed}/{b_multi}",
            if fails.is_empty() { String::new() } else { format!(" [{}]", fails.join("; ")) }
        ),
    )
}

fn c7_weierstrass() -> Outcome {
    let rings = [Ring::zq(2, 2).unwrap(), Ring::truncated_poly(2, 1, "u", 3).unwrap(), Ring::zq(2, 3).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut recovered, mut divided, mut total) = (0, 0, 0);
    for r in &rings {
        let (m, units, all) = (r.max_ideal_elements(), r.units(), r.elements());
        for _ in 0..100 {
            total += 1;
            let n = rng.gen_range(1..4);
            let t = n * (r.nilpotency() + 1) + 2;
            let mut h = Series::zero(r, t);
            for i in 0..n {
                h.c[i] = m[rng.gen_range(0..m.len())].clone();
            }
            h.c[n] = r.one();
            let mut u = Series::zero(r, t);
            u.c[0] = units[rng.gen_range(0..units.len())].clone();
            for i in 1..t {
                u.c[i] = all[rng.gen_range(0..all.len())].clone();
            }
            if let Ok(w) = weierstrass(&h.mul(&u)) {
                if w.n == n && w.h == h.with_trunc(n + 1) && w.u == u.with_trunc(w.u.trunc()) {
                    recovered += 1;
                }
            }
            // division by the distinguished h itself, against a random g
            let mut g = Series::zero(r, t);
            for i in 0..t {
                g.c[i] = all[rng.gen_range(0..all.len())].clone();
            }
            let f = h.mul(&u);
            if let Ok((q, rem)) = weierstrass_divide(&g, &f) {
                if q.mul(&f).add(&rem) == g && rem.c[n..].iter().all(|a| r.is_zero(a)) {
                    divided += 1;
                }
            }
        }
    }
    ok(recovered == total && divided == total, format!("recovered {recovered}/{total}, division {divided}/{total}"))
}

fn c8_normal_form() -> Outcome {
    let r = Ring::zq(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let els = r.elements();
    let mut good = 0;
    let mut total = 0;
    for (l1, l2) in [(1, 3), (2, 4)] {
        let g = GroupModel::case_b(2, ELL, 1, 1, l1, &[l2], &[]).unwrap();
        for right in [false, true] {
            let nf = match NormalForm::new(&r, &g, 1, right) {
                Ok(nf) => nf,
                Err(e) => return ok(false, e.to_string()),
            };
            for _ in 0..250 {
                total += 1;
                let x: Vec<_> = (0..g.order()).map(|_| els[rng.gen_range(0..els.len())].clone()).collect();
                if nf.from_normal_form(&nf.to_normal_form(&x)) == x {
                    good += 1;
                }
            }
        }
    }
    ok(good == total && total >= 1000, format!("{good}/{total} round trips at levels (1,3) and (2,4)"))
}

fn c9_inflation() -> Outcome {
    let rings = Ring::default_test_rings();
    let mut pass = true;
    let mut parts = vec![];
    for y in Y::ALL {
        let p = build_vy(y, ELL, 3).unwrap();
        match inflation_check(&p, 3, &rings, 1 << 22) {
            Ok(r) => {
                pass &= r.agree;
                parts.push(format!("{y}: {:?}", r.rows.iter().map(|x| (x.base_count, x.extended_count)).collect::<Vec<_>>()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{y}: {e}"));
            }
        }
    }
    ok(pass, parts.join(", "))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("group cohomology of Z2 x Z/2", c1_cohomology),
        ("cup-product table", c2_cup_table),
        ("Ext^1 against tangent dimensions", c3_ext1),
        ("tangent counts over k[eps]", c4_tangent_counts),
        ("versality", c5_versality),
        ("perfection pipeline", c6_perfection),
        ("Weierstrass suite", c7_weierstrass),
        ("normal-form round trip", c8_normal_form),
        ("inflation with Z/3", c9_inflation),
    ];
    let mut failed = vec![];
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let took = t.elapsed();
        let budget = Duration::from_secs(BUDGET[i]);
        let pass = o.pass && took <= budget;
        println!(
            "{} [{}] {name}: {} ({:.1}s / {}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64(),
            BUDGET[i]
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
