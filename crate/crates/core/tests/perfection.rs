use perfcx::group::GroupModel;
use perfcx::perfection::{perfect, random_seed, resolve_seed, Perfected, PipelineTrace, SeedShape, TraceError};
use perfcx::ring::Ring;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run(ring: &Ring, group: &GroupModel, shape: SeedShape, seed: u64) -> Perfected {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_seed(ring, group, shape, &mut rng).unwrap();
    let (p, exact_from) = resolve_seed(&s).unwrap();
    perfect(&p, s.n1, exact_from).unwrap()
}

fn f2() -> Ring {
    Ring::zq(2, 1).unwrap()
}

#[test]
fn output_is_a_free_and_bounded() {
    let k = f2();
    let out = run(&k, &GroupModel::z2_times_z2(2), SeedShape::TwoTerm, 0);
    out.trace.verify().unwrap();
    assert!(out.complex.validate().is_ok());
    assert!(out.complex.to_fcomplex().terms.iter().all(|t| t.is_a_free(&k)));
    if let Some((a, b)) = out.support() {
        assert!(a >= out.n1 && b <= out.n2);
    }
    assert_eq!(out.trace.legs.first().map(|l| l.from.clone()), Some(out.trace.input.clone()));
}

#[test]
fn single_module_is_its_own_perfection() {
    // a free A-module in one degree should come back with the same A-rank
    let k = f2();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_seed(&k, &GroupModel::z2_times_z2(2), SeedShape::Single, &mut rng).unwrap();
    let rank = s.complex.rank(0);
    let (p, ef) = resolve_seed(&s).unwrap();
    let out = perfect(&p, s.n1, ef).unwrap();
    let total: usize = out.ranks().iter().map(|r| r.1).sum();
    assert!(total >= rank);
    assert_eq!(out.support().map(|s| s.1), Some(0));
}

#[test]
fn trace_survives_json() {
    let out = run(&f2(), &GroupModel::z2_times_z2(2), SeedShape::Surjective, 1);
    let back = PipelineTrace::from_json(&out.trace.to_json()).unwrap();
    assert_eq!(back, out.trace);
    back.verify().unwrap();
}

#[test]
fn tampered_map_names_its_leg() {
    let out = run(&f2(), &GroupModel::z2_times_z2(2), SeedShape::TwoTerm, 0);
    let mut t = out.trace.clone();
    let (k, leg) = t.legs.iter_mut().enumerate().find(|(_, l)| l.maps.iter().any(|m| !m.entries.is_empty())).unwrap();
    let m = leg.maps.iter_mut().find(|m| !m.entries.is_empty()).unwrap();
    m.entries[0] ^= 1;
    match t.verify() {
        Err(TraceError::Leg { leg, .. }) => assert_eq!(leg, k),
        other => panic!("expected a leg failure, got {other:?}"),
    }
}

#[test]
fn tampered_complex_fails_its_hash() {
    let out = run(&f2(), &GroupModel::z2_times_z2(2), SeedShape::TwoTerm, 0);
    let mut t = out.trace.clone();
    let h = t.legs[0].to.clone();
    t.complexes.get_mut(&h).unwrap().lo += 1;
    assert!(matches!(t.verify(), Err(TraceError::Leg { leg: 0, .. })));
}

#[test]
fn case_b_records_its_ideal() {
    let g = GroupModel::case_b(2, 3, 1, 1, 2, &[2], &[]).unwrap();
    let out = run(&f2(), &g, SeedShape::Surjective, 2);
    out.trace.verify().unwrap();
    assert!(out.ideal.is_some());
}

#[test]
fn rejects_empty_range() {
    let k = f2();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let s = random_seed(&k, &GroupModel::z2_times_z2(2), SeedShape::Single, &mut rng).unwrap();
    let (p, ef) = resolve_seed(&s).unwrap();
    assert!(perfect(&p, p.hi() + 1, ef).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn every_trace_verifies(seed in 0u64..1000, shape in 0usize..3) {
        let shape = [SeedShape::Single, SeedShape::Surjective, SeedShape::TwoTerm][shape];
        let out = run(&f2(), &GroupModel::z2_times_z2(2), shape, seed);
        prop_assert!(out.trace.verify().is_ok());
        prop_assert!(out.complex.to_fcomplex().terms.iter().all(|t| t.is_a_free(&f2())));
    }

    #[test]
    fn seeds_are_level_independent(seed in 0u64..1000) {
        let k = f2();
        let a = random_seed(&k, &GroupModel::z2_times_z2(2), SeedShape::TwoTerm, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = random_seed(&k, &GroupModel::z2_times_z2(3), SeedShape::TwoTerm, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a.complex.diffs, b.complex.diffs);
    }
}

fn lift_of_v_l(ring: &Ring, pick: impl Fn(&perfcx::lab::QuasiLift) -> bool) -> perfcx::complex::GComplex {
    let p = perfcx::lab::build_vy(perfcx::lab::Y::Ell, 3, 3).unwrap();
    let classes = perfcx::lab::enumerate_lifts(&p, ring, 1 << 22).unwrap();
    classes.reps.iter().map(|&i| &classes.lifts[i]).find(|l| pick(l)).unwrap().complex.clone()
}

fn u_cubed() -> Ring {
    Ring::truncated_poly(2, 1, "u", 3).unwrap()
}

#[test]
fn strictly_perfect_input_is_returned_unchanged() {
    let r = u_cubed();
    let v = lift_of_v_l(&r, |l| !r.is_zero(&l.lambda));
    let out = perfect(&v, -1, -1).unwrap();
    assert!(out.trace.legs.is_empty());
    out.trace.verify().unwrap();
    assert_eq!(out.ranks(), vec![(-1, 2), (0, 2)]);
}

#[test]
fn resolved_lift_of_v_l_comes_back_a_free() {
    use perfcx::perfection::Seed;
    // not minimal: only the Euler characteristic of the ranks is forced
    for (ring, nonzero_lambda) in [(f2(), false), (u_cubed(), true)] {
        let v = lift_of_v_l(&ring, |l| ring.is_zero(&l.lambda) != nonzero_lambda);
        let (res, exact_from) = resolve_seed(&Seed { complex: v, n1: -1 }).unwrap();
        let out = perfect(&res, -1, exact_from).unwrap();
        out.trace.verify().unwrap();
        assert!(out.complex.to_fcomplex().terms.iter().all(|t| t.is_a_free(&ring)));
        let ranks: Vec<usize> = out.ranks().into_iter().filter(|r| r.1 > 0).map(|r| r.1).collect();
        assert_eq!(ranks.len(), 2);
        assert!(ranks[0] == ranks[1] && ranks[0] >= 2, "{ranks:?}");
    }
}
