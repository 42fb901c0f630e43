use std::collections::BTreeSet;

use proptest::prelude::*;
use smallvec::SmallVec;

use pdcrys::chart::{Chart, FrobLift, LaurentPoly};
use pdcrys::pdhopf::{idx_zero, Flavor, PDPoly};
use pdcrys::ring::{howell, kernel, smith, Elem, Ring, RingMatrix};

fn ring_params() -> impl Strategy<Value = (u64, u32, u32)> {
    (prop::sample::select(vec![2u64, 3, 5, 7]), 1u32..=4, 1u32..=3)
}

fn elem(r: &Ring, raw: &[i64]) -> Elem {
    r.from_coords(&raw[..r.s() as usize])
}

fn small_ring() -> impl Strategy<Value = Ring> {
    prop::sample::select(vec![(2u64, 1u32), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)])
        .prop_map(|(p, n)| Ring::zp(p, n))
}

fn matrix(r: Ring, rows: usize, cols: usize, raw: &[i64]) -> RingMatrix {
    let rows_v: Vec<Vec<i64>> = (0..rows).map(|i| raw[i * cols..(i + 1) * cols].to_vec()).collect();
    RingMatrix::from_ints(r, &rows_v)
}

fn poly(r: Ring, d: usize, terms: &[(i32, i32, i64)]) -> LaurentPoly {
    let mut f = LaurentPoly::zero(r, d);
    for &(a, b, c) in terms {
        let e: SmallVec<[i32; 4]> = [a, b][..d].iter().copied().collect();
        f.add_term(e, r.from_int(c));
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sigma_is_a_ring_automorphism((p, n, s) in ring_params(), a in prop::collection::vec(-50i64..50, 3), b in prop::collection::vec(-50i64..50, 3)) {
        let r = Ring::new(p, n, s).unwrap();
        let (x, y) = (elem(&r, &a), elem(&r, &b));
        prop_assert_eq!(r.sigma(r.add(x, y)), r.add(r.sigma(x), r.sigma(y)));
        prop_assert_eq!(r.sigma(r.mul(x, y)), r.mul(r.sigma(x), r.sigma(y)));
        prop_assert_eq!(r.sigma_pow(x, s), x);
    }

    #[test]
    fn p_divide_inverts_multiplication_by_p((p, n, s) in ring_params(), a in prop::collection::vec(-50i64..50, 3)) {
        let r = Ring::new(p, n, s).unwrap();
        let up = r.at_level(n + 1);
        let x = elem(&r, &a);
        let px = up.mul(up.lift_from(x, &r), up.p_pow(1));
        prop_assert_eq!(r.p_divide(px, &up).unwrap(), x);
        let unit = up.add(px, 1);
        prop_assert!(r.p_divide(unit, &up).is_err());
    }

    #[test]
    fn inverse_of_units((p, n, s) in ring_params(), a in prop::collection::vec(-50i64..50, 3)) {
        let r = Ring::new(p, n, s).unwrap();
        let x = elem(&r, &a);
        match r.inv(x) {
            Ok(y) => prop_assert_eq!(r.mul(x, y), 1),
            Err(_) => prop_assert!(r.val(x) > 0),
        }
    }

    #[test]
    fn smith_transforms_are_inverse(r in small_ring(), rows in 1usize..=4, cols in 1usize..=4, raw in prop::collection::vec(-20i64..20, 16)) {
        let a = matrix(r, rows, cols, &raw);
        let sm = smith(&a);
        prop_assert_eq!(sm.p.mul(&sm.p_inv).unwrap(), RingMatrix::identity(r, rows));
        prop_assert_eq!(sm.q.mul(&sm.q_inv).unwrap(), RingMatrix::identity(r, cols));
        let d = sm.p.mul(&a).unwrap().mul(&sm.q).unwrap();
        for i in 0..rows {
            for j in 0..cols {
                let want = if i == j {
                    let e = sm.diag[i];
                    if e >= r.n() { 0 } else { r.p_pow(e) }
                } else {
                    0
                };
                prop_assert_eq!(d.get(i, j), want);
            }
        }
    }

    #[test]
    fn howell_matches_enumeration(r in small_ring(), rows in 1usize..=3, cols in 1usize..=3, raw in prop::collection::vec(0i64..27, 9), probe in prop::collection::vec(0i64..27, 3)) {
        prop_assume!(r.modulus() <= 9);
        let q = r.modulus();
        let a = matrix(r, rows, cols, &raw);
        let mut span = BTreeSet::new();
        let total = q.pow(rows as u32);
        for code in 0..total {
            let mut c = code;
            let x: Vec<u64> = (0..rows).map(|_| { let v = c % q; c /= q; v }).collect();
            let y: Vec<u64> = (0..cols).map(|j| (0..rows).map(|i| x[i] * a.get(i, j)).sum::<u64>() % q).collect();
            span.insert(y);
        }
        let h = howell(&a);
        prop_assert_eq!(r.p().pow(h.length()), span.len() as u64);
        let v: Vec<u64> = probe[..cols].iter().map(|&x| x as u64 % q).collect();
        prop_assert_eq!(h.contains(&v), span.contains(&v));
        for g in kernel(&a) {
            prop_assert!((0..rows).all(|i| (0..cols).map(|j| a.get(i, j) * g[j]).sum::<u64>() % q == 0));
        }
    }

    #[test]
    fn laurent_polynomials_form_a_ring(a in prop::collection::vec((-3i32..4, -3i32..4, -30i64..30), 0..5), b in prop::collection::vec((-3i32..4, -3i32..4, -30i64..30), 0..5), c in prop::collection::vec((-3i32..4, -3i32..4, -30i64..30), 0..5)) {
        let r = Ring::zp(5, 2);
        let (f, g, h) = (poly(r, 2, &a), poly(r, 2, &b), poly(r, 2, &c));
        prop_assert_eq!(f.mul(&g), g.mul(&f));
        prop_assert_eq!(f.mul(&g).mul(&h), f.mul(&g.mul(&h)));
        prop_assert_eq!(f.mul(&g.add(&h)), f.mul(&g).add(&f.mul(&h)));
        // Leibniz rule
        prop_assert_eq!(f.mul(&g).derive(0), f.derive(0).mul(&g).add(&f.mul(&g.derive(0))));
    }

    #[test]
    fn frobenius_lift_is_multiplicative(corr in prop::collection::vec((0i32..3, 0i32..1, -30i64..30), 0..3), a in prop::collection::vec((0i32..4, 0i32..1, -30i64..30), 0..4), b in prop::collection::vec((0i32..4, 0i32..1, -30i64..30), 0..4)) {
        let r = Ring::zp(3, 2);
        let ch = Chart::affine(r, 1);
        let up = r.at_level(3);
        let f = FrobLift::from_corrections(&ch, &[poly(up, 1, &corr)]).unwrap();
        let (x, y) = (poly(r, 1, &a), poly(r, 1, &b));
        prop_assert_eq!(f.apply(&x.mul(&y)).unwrap(), f.apply(&x).unwrap().mul(&f.apply(&y).unwrap()));
        prop_assert_eq!(f.apply(&x.add(&y)).unwrap(), f.apply(&x).unwrap().add(&f.apply(&y).unwrap()));
    }

    #[test]
    fn divided_powers_multiply_by_binomials(i in 0u32..6, j in 0u32..6) {
        let r = Ring::zp(3, 3);
        let gi = PDPoly::basis(Flavor::P, r, 1, SmallVec::from_elem(i, 1));
        let gj = PDPoly::basis(Flavor::P, r, 1, SmallVec::from_elem(j, 1));
        let prod = gi.mul(&gj).unwrap();
        let want = PDPoly::basis(Flavor::P, r, 1, SmallVec::from_elem(i + j, 1)).scale(r.binom((i + j) as u64, i as u64));
        prop_assert_eq!(prod, want);
        let one = PDPoly::basis(Flavor::P, r, 1, idx_zero(1));
        prop_assert_eq!(gi.mul(&one).unwrap(), gi);
    }
}
