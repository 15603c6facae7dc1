mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use spencer_core::exact_series::{multi_index_enum, q, MultiIndex, Series};
use spencer_core::jet_space::*;
use spencer_core::Error;

const T: i32 = 7;

fn mi(e: &[u32]) -> MultiIndex {
    MultiIndex(e.to_vec())
}

fn exp_y(t: i32) -> Series {
    let mut s = Series::zero(2, t);
    let mut f = q(1);
    for k in 0..=t as u32 {
        if k > 0 {
            f /= q(k as i64);
        }
        s.add_term(&mi(&[0, k]), f.clone());
    }
    s
}

#[test]
fn holonomic_lift_examples() {
    let z = Series::zero(2, T);
    let y = Series::var(2, T, 1);
    let l = holonomic_lift(&[z.clone(), y.clone()], 1).unwrap();
    assert_eq!(l.get(1, &mi(&[0, 0])), &y);
    assert!(l.get(1, &mi(&[1, 0])).is_zero());
    assert_eq!(l.get(1, &mi(&[0, 1])), &Series::one(2, T));
    assert!(l.comps[0].iter().all(|s| s.is_zero()));

    assert!(holonomic_lift(&[z.clone(), z.clone()], 3).unwrap().is_zero());

    let xe = &Series::var(2, T, 0) * &exp_y(T);
    let l = holonomic_lift(&[z.clone(), xe.clone()], 1).unwrap();
    assert_eq!(l.get(1, &mi(&[0, 0])), &xe);
    assert_eq!(l.get(1, &mi(&[1, 0])), &exp_y(T));
    assert_eq!(l.get(1, &mi(&[0, 1])), &xe);
}

#[test]
fn holonomic_lift_respects_the_budget() {
    let th = vec![Series::var(2, 3, 0), Series::zero(2, 3)];
    assert!(matches!(holonomic_lift(&th, 4), Err(Error::OrderBudget(_))));
}

#[test]
fn spencer_operator_examples() {
    let mut r = rng(31);
    let th = field(&mut r, 2, 4, T);
    for d in holonomic_lift(&th, 1).unwrap().spencer_d().unwrap() {
        assert!(d.is_zero());
    }

    let xi = JetSection::unit(2, 1, 1, &mi(&[0, 1]), Series::one(2, T));
    let d = xi.spencer_d().unwrap();
    assert!(d[0].is_zero());
    assert_eq!(d[1], JetSection::unit(2, 0, 1, &mi(&[0, 0]), Series::constant(2, T, q(-1))));

    // X₂ = f^{2,0} + βf^{1,1} + β²f^{0,2} with β = β(x)
    let beta = Series::from_terms(2, T, [(mi(&[0, 0]), q(2)), (mi(&[1, 0]), q(1)), (mi(&[3, 0]), q(-1))]);
    let mut x2 = JetSection::zero(2, 2, 2, T);
    x2.set(1, &mi(&[2, 0]), Series::one(2, T));
    x2.set(1, &mi(&[1, 1]), beta.clone());
    x2.set(1, &mi(&[0, 2]), beta.pow(2));
    let dx = &x2.spencer_d().unwrap()[0];
    let mut want = JetSection::zero(2, 2, 1, T);
    want.set(1, &mi(&[1, 0]), Series::constant(2, T, q(-1)));
    want.set(1, &mi(&[0, 1]), beta.scale(&q(-1)));
    assert_eq!(dx, &want);
}

#[test]
fn spencer_operator_needs_positive_order() {
    let xi = JetSection::zero(2, 2, 0, T);
    assert!(matches!(xi.spencer_d(), Err(Error::Order(_))));
}

#[test]
fn projection_and_beta_examples() {
    let y = Series::var(2, T, 1);
    let l = holonomic_lift(&[Series::zero(2, T), y.clone()], 1).unwrap();
    let p = l.project(0).unwrap();
    assert_eq!(p.order, 0);
    assert_eq!(p.get(1, &mi(&[0, 0])), &y);

    let mut r = rng(32);
    let v = field(&mut r, 2, 2, T);
    let th = field(&mut r, 2, 2, T);
    let cs = CheckedSection::new(v.clone(), holonomic_lift(&th, 0).unwrap());
    let b = beta(&cs);
    for i in 0..2 {
        assert_eq!(b[i], &v[i] + &th[i]);
    }

    let mut x2 = JetSection::zero(2, 2, 2, T);
    x2.set(1, &mi(&[2, 0]), Series::one(2, T));
    x2.set(1, &mi(&[1, 1]), Series::var(2, T, 0));
    assert!(x2.project(1).unwrap().is_zero());
    assert!(matches!(x2.project(3), Err(Error::Order(_))));
}

#[test]
fn projections_compose_and_beta_recovers_the_field() {
    let mut r = rng(33);
    for _ in 0..5 {
        let xi = jet(&mut r, 2, 4, T);
        for m in 0..=4 {
            for l in 0..=m {
                assert_eq!(xi.project(m).unwrap().project(l).unwrap(), xi.project(l).unwrap());
            }
        }
        let th = field(&mut r, 2, 3, T);
        let cs = CheckedSection::vertical(holonomic_lift(&th, 3).unwrap());
        assert_eq!(cs.beta(), th);
    }
}

#[test]
fn leibniz_rule_for_spencer_operator() {
    let mut r = rng(34);
    for k in 1..=3 {
        let xi = jet(&mut r, 2, k, T);
        let f = poly(&mut r, 2, 3, T, 4, true);
        let lhs = xi.mul_series(&f).spencer_d().unwrap();
        let d = xi.spencer_d().unwrap();
        let low = xi.project(k - 1).unwrap();
        for j in 0..2 {
            let rhs = low.mul_series(&f.derive(j)).add(&d[j].mul_series(&f));
            assert_eq!(lhs[j], rhs);
        }
    }
}

#[test]
fn spencer_operator_squares_to_zero() {
    let mut r = rng(35);
    for (n, k) in [(2, 2), (2, 3), (3, 2), (2, 4)] {
        let xi = jet(&mut r, n, k, T);
        let d1 = JetForm::from_zero_form(xi).spencer_d().unwrap();
        assert!(d1.spencer_d().unwrap().is_zero());

        // ω ⊗ ξ with ω a random 1-form
        let xi = jet(&mut r, n, k, T);
        let coeffs: BTreeMap<Vec<usize>, Series> =
            (0..n).map(|j| (vec![j], poly(&mut r, n, 3, T, 3, true))).collect();
        let w = form_tensor(&coeffs, 1, &xi);
        assert!(w.spencer_d().unwrap().spencer_d().unwrap().is_zero());
    }
}

#[test]
fn multi_index_enumeration() {
    assert_eq!(multi_index_enum(2, 1), vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
    assert_eq!(multi_index_enum(1, 3).len(), 4);
    for k in 0..6 {
        assert_eq!(JetSection::zero(2, 2, k, T).indices().len(), (k + 1) * (k + 2) / 2);
    }
}

fn arb_field(n: usize, t: i32) -> impl Strategy<Value = Vec<Series>> {
    let idx = multi_index_enum(n, 4);
    let len = idx.len();
    proptest::collection::vec(proptest::collection::vec((0..len, -3i64..=3), 0..5), n).prop_map(move |cs| {
        cs.into_iter()
            .map(|terms| {
                let mut s = Series::zero(n, t);
                for (i, c) in terms {
                    s.add_term(&idx[i], q(c));
                }
                s
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn holonomic_sections_are_spencer_closed(th in arb_field(2, T), k in 1usize..=4) {
        let l = holonomic_lift(&th, k).unwrap();
        for d in l.spencer_d().unwrap() {
            prop_assert!(d.is_zero());
        }
        prop_assert_eq!(l.order_zero(), th);
    }

    #[test]
    fn spencer_operator_is_linear(a in arb_field(2, T), b in arb_field(2, T)) {
        let xa = holonomic_lift(&a, 2).unwrap().lift_zero(3);
        let xb = holonomic_lift(&b, 2).unwrap().lift_zero(3);
        let lhs = xa.add(&xb).spencer_d().unwrap();
        let da = xa.spencer_d().unwrap();
        let db = xb.spencer_d().unwrap();
        for j in 0..2 {
            prop_assert_eq!(&lhs[j], &da[j].add(&db[j]));
        }
    }
}
