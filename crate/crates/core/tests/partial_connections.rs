mod common;

use common::*;
use rand_chacha::ChaCha8Rng;
use spencer_core::bracket_calculus::third_bracket;
use spencer_core::exact_series::{multi_index_enum, q, MultiIndex, Series};
use spencer_core::jet_groupoid::GroupoidSection;
use spencer_core::jet_space::{CheckedSection, JetSection};
use spencer_core::lie_equations::{relation, EquationSpec, LinearLieEquation};
use spencer_core::partial_connections::*;
use spencer_core::Error;

const T: i32 = 6;

fn mi(e: &[u32]) -> MultiIndex {
    MultiIndex(e.to_vec())
}

/// Random ω(∂_a) for the fiber directions `ys`, compatible with β_*.
fn random_omega(r: &mut ChaCha8Rng, n: usize, ys: &[usize], k: usize) -> PartialConnectionData {
    let omega = ys
        .iter()
        .map(|&a| {
            let mut w = JetSection::zero(n, n, k + 1, T);
            for &i in ys {
                for al in multi_index_enum(n, k + 1).into_iter().skip(1) {
                    w.set(i, &al, poly(r, n, 2, T, 2, true));
                }
            }
            w.set(a, &MultiIndex::zero(n), Series::one(n, T));
            w
        })
        .collect();
    PartialConnectionData::new(n, ys.to_vec(), omega).unwrap()
}

/// Random element of H ⊕ J^kV.
fn random_section(r: &mut ChaCha8Rng, n: usize, ys: &[usize], k: usize) -> CheckedSection {
    let h = (0..n)
        .map(|i| if ys.contains(&i) { Series::zero(n, T) } else { poly(r, n, 2, T, 3, true) })
        .collect();
    let mut v = JetSection::zero(n, n, k, T);
    for &i in ys {
        for al in multi_index_enum(n, k) {
            v.set(i, &al, poly(r, n, 2, T, 2, true));
        }
    }
    CheckedSection::new(h, v)
}

fn dy_jet(n: usize, y: usize, k: usize, c: Series) -> CheckedSection {
    CheckedSection::vertical(JetSection::unit(n, k, y, &MultiIndex::zero(n), c))
}

#[test]
fn trivial_connection_examples() {
    let conn = PartialConnectionData::trivial(2, 2, vec![1], 2, T);
    let s = dy_jet(2, 1, 1, Series::one(2, T));
    assert!(conn.nabla(0, &s).unwrap().is_zero());

    let hx = Series::from_terms(2, T, [(mi(&[0, 0]), q(2)), (mi(&[3, 0]), q(-1))]);
    assert!(conn.nabla(0, &dy_jet(2, 1, 1, hx)).unwrap().is_zero());

    let y = Series::var(2, T, 1);
    assert_eq!(conn.nabla(0, &dy_jet(2, 1, 1, y)).unwrap(), s);
}

#[test]
fn rejects_incompatible_forms() {
    let mut w = JetSection::zero(2, 2, 2, T);
    w.set(1, &mi(&[0, 0]), Series::constant(2, T, q(2)));
    assert!(matches!(
        PartialConnectionData::new(2, vec![1], vec![w]),
        Err(Error::BetaCompatibility(_))
    ));
    let mut w = JetSection::zero(2, 2, 2, T);
    w.set(1, &mi(&[0, 0]), Series::one(2, T));
    w.set(0, &mi(&[1, 0]), Series::one(2, T));
    assert!(matches!(
        PartialConnectionData::new(2, vec![1], vec![w]),
        Err(Error::BetaCompatibility(_))
    ));
}

#[test]
fn leibniz_rule() {
    let mut r = rng(11);
    for (n, ys, k) in [(2, vec![1], 1), (2, vec![1], 2), (3, vec![1, 2], 1)] {
        let conn = random_omega(&mut r, n, &ys, k);
        let cs = random_section(&mut r, n, &ys, k);
        let f = poly(&mut r, n, 2, T, 4, true);
        for (a, &ya) in ys.iter().enumerate() {
            let lhs = conn.nabla(a, &cs.mul_series(&f)).unwrap();
            let rhs = cs.mul_series(&f.derive(ya)).add(&conn.nabla(a, &cs).unwrap().mul_series(&f));
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn one_fiber_direction_is_flat() {
    let mut r = rng(12);
    let conn = random_omega(&mut r, 2, &[1], 2);
    let (c, flat) = curvature_flatness(&conn).unwrap();
    assert!(flat);
    assert!(c.components.is_empty());
}

#[test]
fn product_connection_in_two_fiber_directions_is_flat() {
    let conn = PartialConnectionData::trivial(3, 3, vec![1, 2], 2, T);
    assert!(conn.is_flat().unwrap());
}

#[test]
fn perturbed_connection_has_curvature() {
    let k = 1;
    let mut wz = JetSection::unit(3, k + 1, 2, &mi(&[0, 0, 0]), Series::one(3, T));
    // y·ζ with ζ the top-order jet p^y_{(0,2,0)}
    wz.set(1, &mi(&[0, 2, 0]), Series::var(3, T, 1));
    let wy = JetSection::unit(3, k + 1, 1, &mi(&[0, 0, 0]), Series::one(3, T));
    let conn = PartialConnectionData::new(3, vec![1, 2], vec![wy, wz]).unwrap();
    let c = conn.curvature().unwrap();
    assert!(!c.is_flat());
    let cyz = c.get(0, 1).unwrap();
    assert_eq!(cyz.get(1, &mi(&[0, 2, 0])), &Series::one(3, T));
    assert_eq!(c.get(1, 0).unwrap(), cyz.neg());
    let b = random_section(&mut rng(13), 3, &[1, 2], k);
    assert!(matches!(conn.parallel_extend(&b), Err(Error::NotFlat(_))));
}

#[test]
fn commutator_of_covariant_derivatives_is_curvature() {
    let mut r = rng(14);
    for k in [1, 2] {
        let conn = random_omega(&mut r, 3, &[1, 2], k);
        let cs = random_section(&mut r, 3, &[1, 2], k);
        let c = conn.curvature().unwrap().get(0, 1).unwrap();
        let ab = conn.nabla(0, &conn.nabla(1, &cs).unwrap()).unwrap();
        let ba = conn.nabla(1, &conn.nabla(0, &cs).unwrap()).unwrap();
        let lhs = ab.sub(&ba);
        let rhs = third_bracket(&CheckedSection::tilde(c), &cs, None).unwrap();
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn parallel_extension_of_trivial_connection_is_constant() {
    let conn = PartialConnectionData::trivial(2, 2, vec![1], 2, T);
    let u = Series::from_terms(2, T, [(mi(&[1, 0]), q(1)), (mi(&[2, 0]), q(3))]);
    let qx = Series::from_terms(2, T, [(mi(&[0, 0]), q(1)), (mi(&[1, 0]), q(-2))]);
    let b = CheckedSection::new(
        vec![u.clone(), Series::zero(2, T)],
        JetSection::unit(2, 1, 1, &mi(&[0, 0]), qx.clone()),
    );
    assert_eq!(conn.parallel_extend(&b).unwrap(), b);
    let one = dy_jet(2, 1, 1, Series::one(2, T));
    assert_eq!(parallel_extend(&conn, &one).unwrap(), one);
}

#[test]
fn parallel_extension_solves_the_transport_equation() {
    let mut r = rng(15);
    for (n, ys, k) in [(2, vec![1], 1), (2, vec![1], 2), (3, vec![2], 1)] {
        let conn = random_omega(&mut r, n, &ys, k);
        let b = random_section(&mut r, n, &ys, k);
        let ext = conn.parallel_extend(&b).unwrap();
        assert!(ext.trunc() >= 3);
        for a in 0..ys.len() {
            assert!(conn.nabla(a, &ext).unwrap().is_zero());
        }
        let rb = b.vertical.map(|s| s.restrict_zero(&ys));
        assert_eq!(ext.vertical.map(|s| s.restrict_zero(&ys)), rb);
        // same boundary data, different off-N values: same extension
        let shifted = CheckedSection::new(
            b.horizontal.clone(),
            rb.add(&b.vertical.sub(&rb).mul_series(&Series::var(n, T, ys[0]))),
        );
        assert_eq!(conn.parallel_extend(&shifted).unwrap(), ext);
    }
}

#[test]
fn parallel_extension_in_two_fiber_directions() {
    let conn = PartialConnectionData::trivial(3, 3, vec![1, 2], 2, T);
    let mut r = rng(16);
    let b = random_section(&mut r, 3, &[1, 2], 1);
    let ext = conn.parallel_extend(&b).unwrap();
    for a in 0..2 {
        assert!(conn.nabla(a, &ext).unwrap().is_zero());
    }
}

#[test]
fn extension_stays_in_the_equation() {
    // R = {p10 = 0} on ∂/∂y over the (x, y)-plane
    let r1 = LinearLieEquation::build(EquationSpec {
        n_base: 2,
        n_vars: 2,
        order: 1,
        trunc: T,
        ambient: vec![1],
        fiber_vars: vec![1],
        relations: vec![relation(vec![(1, mi(&[1, 0]), Series::one(2, T))])],
    })
    .unwrap();
    let r2 = r1.prolong().unwrap();
    let mut r = rng(17);
    let mut w = JetSection::zero(2, 2, 2, T);
    w.set(1, &mi(&[0, 0]), Series::one(2, T));
    w.set(1, &mi(&[0, 1]), poly(&mut r, 2, 2, T, 3, true));
    w.set(1, &mi(&[0, 2]), poly(&mut r, 2, 2, T, 3, true));
    assert!(r2.contains(&w).unwrap());
    let conn = PartialConnectionData::new(2, vec![1], vec![w]).unwrap();
    let mut xi = JetSection::zero(2, 2, 1, T);
    xi.set(1, &mi(&[0, 0]), Series::from_terms(2, T, [(mi(&[1, 0]), q(1)), (mi(&[2, 0]), q(1))]));
    xi.set(1, &mi(&[0, 1]), Series::from_terms(2, T, [(mi(&[0, 0]), q(2)), (mi(&[1, 0]), q(-1))]));
    let u = Series::from_terms(2, T, [(mi(&[0, 0]), q(1)), (mi(&[1, 0]), q(1))]);
    let b = CheckedSection::new(vec![u, Series::zero(2, T)], xi);
    assert!(r1.contains(&b.vertical).unwrap());
    let ext = conn.parallel_extend(&b).unwrap();
    assert!(ext.vertical.get(1, &mi(&[0, 0])).depends_on(1));
    assert!(r1.contains(&ext.vertical).unwrap());
}

#[test]
fn product_family_induces_the_trivial_connection() {
    // σ_t = j^{k+1} of (x, y) ↦ (x, y + t), t the last variable
    let f = vec![Series::var(3, T, 0), &Series::var(3, T, 1) + &Series::var(3, T, 2)];
    let fam = GroupoidSection::holonomic(&f, 2).unwrap();
    let w = omega_from_flow(&fam);
    let conn = PartialConnectionData::new(2, vec![1], vec![w]).unwrap();
    assert_eq!(conn, PartialConnectionData::trivial(2, 2, vec![1], 2, T));
}
