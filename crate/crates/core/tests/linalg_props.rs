use perfcx::linalg::*;
use proptest::prelude::*;

fn modulus() -> impl Strategy<Value = Modulus> {
    prop_oneof![
        Just(Modulus::new(2, 1).unwrap()),
        Just(Modulus::new(2, 2).unwrap()),
        Just(Modulus::new(2, 3).unwrap()),
        Just(Modulus::new(3, 1).unwrap()),
        Just(Modulus::new(3, 2).unwrap()),
    ]
}

fn small_mat() -> impl Strategy<Value = Mat> {
    (modulus(), 0usize..4, 1usize..4).prop_flat_map(|(md, r, c)| {
        proptest::collection::vec(0..md.q(), r * c)
            .prop_map(move |d| Mat { md, rows: r, cols: c, data: d })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn howell_preserves_span(m in small_mat()) {
        let h = howell(&m);
        prop_assert_eq!(span_elements(&m), span_elements(&h.matrix));
        prop_assert_eq!(h.log_size() as usize,
            (span_elements(&m).len() as f64).log(m.md.p() as f64).round() as usize);
    }

    #[test]
    fn howell_is_canonical(m in small_mat(), seed in any::<u64>()) {
        // any generating set of the same span gives the same form
        let h = howell(&m);
        let md = m.md;
        let mut rows = m.row_vecs();
        let mut s = seed;
        if !rows.is_empty() {
            for _ in 0..3 {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let i = (s >> 33) as usize % rows.len();
                let j = (s >> 13) as usize % rows.len();
                let k = (s >> 45) % md.q();
                if i != j {
                    let rj = rows[j].clone();
                    for (x, y) in rows[i].iter_mut().zip(rj) { *x = md.add(*x, md.mul(k, y)); }
                }
            }
            rows.reverse();
        }
        let h2 = Howell::of_rows(md, m.cols, rows);
        prop_assert_eq!(h, h2);
    }

    #[test]
    fn kernel_matches_brute_force(m in small_mat()) {
        let k = kernel(&m);
        let md = m.md;
        let total = md.q().pow(m.rows as u32);
        let mut count = 0u64;
        for code in 0..total {
            let mut x = vec![0u64; m.rows];
            let mut c = code;
            for xi in x.iter_mut() { *xi = c % md.q(); c /= md.q(); }
            let zero = m.apply(&x).iter().all(|&v| v == 0);
            if zero { count += 1; }
            prop_assert_eq!(zero, k.contains(&x));
        }
        prop_assert_eq!(count, md.p().pow(k.log_size()));
    }

    #[test]
    fn solve_agrees_with_span(m in small_mat(), b in proptest::collection::vec(0u64..27, 3)) {
        let md = m.md;
        let b: Vec<u64> = b.iter().take(m.cols).map(|&x| md.red(x)).chain(std::iter::repeat(0)).take(m.cols).collect();
        let in_span = span_elements(&m).contains(&b);
        match solve(&m, &b).unwrap() {
            Some(x) => { prop_assert!(in_span); prop_assert_eq!(m.apply(&x), b); }
            None => prop_assert!(!in_span),
        }
    }

    #[test]
    fn quotient_order_matches(m in small_mat()) {
        let h = howell(&m);
        let q = quotient_structure(&h, m.cols);
        let order: u64 = q.iter().product();
        let total = m.md.q().pow(m.cols as u32);
        prop_assert_eq!(order * span_elements(&m).len() as u64, total);
    }

    #[test]
    fn intersection_matches_sets(a in small_mat(), seed in proptest::collection::vec(any::<u64>(), 12)) {
        let md = a.md;
        let rows: Vec<Vec<u64>> = seed.chunks(a.cols).take(2).map(|c| c.iter().map(|&x| md.red(x)).collect()).filter(|r: &Vec<u64>| r.len() == a.cols).collect();
        let b = Mat::from_rows(md, a.cols, &rows);
        let (ha, hb) = (howell(&a), howell(&b));
        let i = ha.intersect(&hb);
        let sa = span_elements(&a);
        let sb = span_elements(&b);
        let expect: std::collections::BTreeSet<_> = sa.intersection(&sb).cloned().collect();
        prop_assert_eq!(span_elements(&i.matrix), expect);
    }

    #[test]
    fn reduce_is_canonical(m in small_mat(), v in proptest::collection::vec(0u64..27, 3), w in proptest::collection::vec(0u64..27, 3)) {
        let md = m.md;
        let n = m.cols;
        let v: Vec<u64> = (0..n).map(|i| md.red(v[i])).collect();
        let h = howell(&m);
        // v + (span element) reduces to the same thing
        let coeffs: Vec<u64> = (0..m.rows).map(|i| md.red(w[i % 3])).collect();
        let s = m.apply(&coeffs);
        let v2: Vec<u64> = v.iter().zip(&s).map(|(&a, &b)| md.add(a, b)).collect();
        prop_assert_eq!(h.reduce(&v), h.reduce(&v2));
    }
}
