mod common;

use common::*;
use spencer_core::exact_series::{q, MultiIndex, Series};
use spencer_core::jet_groupoid::*;
use spencer_core::jet_space::{holonomic_lift, CheckedSection, JetForm, JetSection};

const T: i32 = 6;

fn one_var(c: &[(u32, i64)], t: i32) -> Series {
    Series::from_terms(1, t, c.iter().map(|&(e, v)| (MultiIndex(vec![e]), q(v))))
}

#[test]
fn composes_two_jets_of_polynomial_maps() {
    let g = GroupoidSection::holonomic(&[one_var(&[(1, 1), (3, 1)], T)], 2).unwrap();
    let f = GroupoidSection::holonomic(&[one_var(&[(1, 1), (2, 1)], T)], 2).unwrap();
    let gf = g.compose(&f).unwrap();
    let u = MultiIndex(vec![1]);
    let uu = MultiIndex(vec![2]);
    // at the origin the 2-jet of g∘f = u + u² + 3u³ + ... is u + u²
    assert_eq!(gf.fiber_jet(0, &u).constant_term(), q(1));
    assert_eq!(gf.fiber_jet(0, &uu).constant_term(), q(2));
    let direct = GroupoidSection::holonomic(&[one_var(&[(1, 1), (2, 1), (3, 1), (4, 3), (5, 3), (6, 1)], T)], 2).unwrap();
    assert_eq!(gf, direct);
}

#[test]
fn groupoid_axioms_on_random_sections() {
    let mut r = rng(1);
    for _ in 0..5 {
        let a = section(&mut r, 2, 2, T);
        let b = section(&mut r, 2, 2, T);
        let c = section(&mut r, 2, 2, T);
        let id = GroupoidSection::identity(2, 2, 2, T);
        assert_eq!(id.compose(&a).unwrap(), a);
        assert_eq!(a.compose(&id).unwrap(), a);
        let lhs = a.compose(&b).unwrap().compose(&c).unwrap();
        let rhs = a.compose(&b.compose(&c).unwrap()).unwrap();
        assert!(lhs.trunc() >= 3);
        assert_eq!(lhs, rhs);
        let ai = a.inverse().unwrap();
        let e1 = a.compose(&ai).unwrap();
        let e2 = ai.compose(&a).unwrap();
        assert!(e1.trunc() >= 3);
        assert_eq!(e1, id);
        assert_eq!(e2, id);
    }
}

#[test]
fn spencer_operator_of_holonomic_sections_vanishes() {
    let mut r = rng(2);
    for _ in 0..5 {
        let f = diffeo(&mut r, 2, T);
        let s = GroupoidSection::holonomic(&f, 3).unwrap();
        assert!(s.nonlinear_spencer_d().unwrap().is_zero());
    }
}

#[test]
fn one_variable_order_one_example() {
    let s = GroupoidSection::from_jets(
        vec![one_var(&[(1, 1)], T)],
        &{
            let mut j = JetSection::zero(1, 1, 1, T);
            j.set(0, &MultiIndex(vec![1]), one_var(&[(0, 1), (1, 1)], T));
            j
        },
    )
    .unwrap();
    let d = s.nonlinear_spencer_d().unwrap();
    let expect = one_var(&[(1, -1), (2, 1), (3, -1), (4, 1), (5, -1), (6, 1)], T);
    assert_eq!(d.0[0].get(0, &MultiIndex(vec![0])), &expect);
}

#[test]
fn cocycle_and_inverse_laws() {
    let mut r = rng(3);
    for _ in 0..4 {
        let s = section(&mut r, 2, 2, T);
        let sp = section(&mut r, 2, 2, T);
        let lhs = sp.compose(&s).unwrap().nonlinear_spencer_d().unwrap();
        let rhs = s.nonlinear_spencer_d().unwrap().add(&s.pull_form(&sp.nonlinear_spencer_d().unwrap()).unwrap());
        assert_eq!(lhs, rhs);
        let di = s.inverse().unwrap().nonlinear_spencer_d().unwrap();
        assert_eq!(di, s.push_form(&s.nonlinear_spencer_d().unwrap()).unwrap().neg());
    }
}

#[test]
fn curvature_of_spencer_operator_vanishes() {
    let mut r = rng(4);
    for _ in 0..4 {
        let s = section(&mut r, 2, 3, T);
        let u = s.nonlinear_spencer_d().unwrap();
        let c = d1_curvature(&u).unwrap();
        assert!(c.is_zero(), "{:?}", c.comps.values().next().unwrap().comps[0][0]);
    }
}

#[test]
fn linearization_gives_linear_operator() {
    let mut r = rng(5);
    for _ in 0..4 {
        let xi = jet(&mut r, 2, 2, T);
        let fam = linear_family(&xi).unwrap();
        let lin = t_linear_part(&fam.nonlinear_spencer_d().unwrap());
        let d: Vec<JetSection> = xi
            .spencer_d()
            .unwrap()
            .into_iter()
            .map(|s| s.map(|c| c.embed(3, &[0, 1])))
            .collect();
        assert_eq!(lin, SpencerOneForm(d));
    }
}

#[test]
fn action_of_holonomic_section_pushes_fields() {
    let mut r = rng(6);
    let f = diffeo(&mut r, 2, T);
    let s = GroupoidSection::holonomic(&f, 2).unwrap();
    let v = field(&mut r, 2, 2, T);
    let th = field(&mut r, 2, 2, T);
    let got = s.act(&CheckedSection::new(v.clone(), holonomic_lift(&th, 1).unwrap())).unwrap();
    let finv = spencer_core::exact_series::reversion_system(&f, 2).unwrap();
    let push = |w: &[Series]| -> Vec<Series> {
        (0..2)
            .map(|i| {
                let mut acc = Series::zero(2, T);
                for j in 0..2 {
                    acc = &acc + &(&f[i].derive(j) * &w[j]);
                }
                acc.compose(&finv).unwrap()
            })
            .collect()
    };
    assert_eq!(got.horizontal, push(&v));
    assert_eq!(got.vertical, holonomic_lift(&push(&th), 1).unwrap());
}

#[test]
fn action_is_equivariant() {
    let mut r = rng(7);
    for _ in 0..3 {
        let s = section(&mut r, 2, 3, T);
        let a = checked(&mut r, 2, 2, T);
        let b = checked(&mut r, 2, 2, T);
        let lhs = spencer_core::bracket_calculus::first_bracket(&s.act(&a).unwrap(), &s.act(&b).unwrap()).unwrap();
        let br = spencer_core::bracket_calculus::first_bracket(&a, &b).unwrap();
        let rhs = s.project(2).unwrap().act(&br).unwrap();
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn horizontal_action_splits_through_spencer_operator() {
    let mut r = rng(8);
    let s = section(&mut r, 2, 2, T);
    let v = field(&mut r, 2, 2, T);
    let zero = JetSection::zero(2, 2, 1, T);
    let whole = s.act(&CheckedSection::new(v.clone(), zero)).unwrap();
    let d = s.nonlinear_spencer_d().unwrap();
    let mut iv = d.0[0].mul_series(&v[0]);
    iv = iv.add(&d.0[1].mul_series(&v[1]));
    let vert = s.act_vertical(&iv).unwrap();
    assert_eq!(whole.vertical, vert);
}

#[test]
fn d1_of_linear_operator_is_minus_bracket() {
    let mut r = rng(9);
    let xi = jet(&mut r, 2, 3, T);
    let u = SpencerOneForm(xi.spencer_d().unwrap());
    let c = d1_curvature(&u).unwrap();
    let dd = JetForm::from_one_form(u.0.clone()).spencer_d().unwrap();
    assert!(dd.is_zero());
    let br = spencer_core::bracket_calculus::algebraic_bracket(&u.0[0], &u.0[1]).unwrap();
    assert_eq!(c.comps[&vec![0, 1]], br.neg());
}

fn plane_eq(t: i32, terms: Vec<(MultiIndex, Series)>) -> spencer_core::lie_equations::LinearLieEquation {
    use spencer_core::lie_equations::{relation, EquationSpec, LinearLieEquation};
    LinearLieEquation::build(EquationSpec {
        n_base: 2,
        n_vars: 2,
        order: 1,
        trunc: t,
        ambient: vec![1],
        fiber_vars: vec![1],
        relations: vec![relation(terms.into_iter().map(|(a, s)| (1, a, s)).collect())],
    })
    .unwrap()
}

fn mi2(a: u32, b: u32) -> MultiIndex {
    MultiIndex(vec![a, b])
}

/// {p01 = b p10}
fn case2_eq(t: i32, b: &Series) -> spencer_core::lie_equations::LinearLieEquation {
    plane_eq(t, vec![(mi2(0, 1), Series::one(2, t)), (mi2(1, 0), b.scale(&q(-1)))])
}

#[test]
fn pushforward_examples() {
    let r = plane_eq(T, vec![(mi2(1, 0), Series::one(2, T))]);
    let id = GroupoidSection::identity(2, 2, 2, T);
    assert!(pushforward_equation(&id, &r).unwrap().same_as(&r).unwrap());

    let phi = vec![Series::var(2, T, 0), &Series::var(2, T, 1) + &Series::var(2, T, 0)];
    let s = GroupoidSection::holonomic(&phi, 2).unwrap();
    let pushed = pushforward_equation(&s, &r).unwrap();
    // θ(x, y − x) has θ_x = −θ_y
    let want = plane_eq(T, vec![(mi2(1, 0), Series::one(2, T)), (mi2(0, 1), Series::one(2, T))]);
    assert!(pushed.same_as(&want).unwrap());
    // sampled solutions: pushforwards of θ(y)∂/∂y
    let th = vec![Series::zero(2, T), &Series::var(2, T, 1).pow(2) + &Series::var(2, T, 1)];
    let moved = s.act(&CheckedSection::vertical(holonomic_lift(&th, 1).unwrap())).unwrap();
    assert!(pushed.contains(&moved.vertical).unwrap());
    // x-reparametrizations keep it
    let psi = vec![&Series::var(2, T, 0) + &Series::var(2, T, 0).pow(2), Series::var(2, T, 1)];
    let s2 = GroupoidSection::holonomic(&psi, 2).unwrap();
    assert!(pushforward_equation(&s2, &r).unwrap().same_as(&r).unwrap());

    let mut g = rng(10);
    let b = &Series::var(2, T, 0) + &poly(&mut g, 2, 3, T, 3, false);
    let r2 = case2_eq(T, &b);
    let s = section(&mut g, 2, 2, T);
    let there = pushforward_equation(&s, &r2).unwrap();
    let back = pushforward_equation(&s.inverse().unwrap(), &there).unwrap();
    assert!(back.same_as(&r2).unwrap());
}

#[test]
fn isomorphism_verifier_accepts_the_identity() {
    let b = &Series::var(2, T, 0) + &Series::var(2, T, 0).pow(2);
    let r = case2_eq(T, &b);
    let id = GroupoidSection::identity(2, 2, 2, T);
    let n = TransversalData { fiber_vars: vec![1], phi: vec![Series::var(2, T, 0), Series::zero(2, T)] };
    let rep = verify_formal_isomorphism(&id, &r, &r, &n).unwrap();
    assert!(rep.all_pass());
    assert!(rep.witness_direction.is_none());
}

#[test]
fn isomorphism_verifier_accepts_a_reparametrization() {
    // F = j²(h(x), y) carries {p01 = b p10} to {p01 = (b∘g/g′) p10}, g = h⁻¹
    let x = Series::var(2, T, 0);
    let h = &x + &x.pow(2);
    let b = x.pow(2);
    let h1 = Series::from_terms(1, T, [(MultiIndex(vec![1]), q(1)), (MultiIndex(vec![2]), q(1))]);
    let g1 = h1.invert(spencer_core::exact_series::InvertMode::Reversion).unwrap();
    let g = g1.compose(&[x.clone()]).unwrap();
    let bp = &b.compose(&[g.clone(), Series::var(2, T, 1)]).unwrap() * &g.derive(0).reciprocal().unwrap();
    // the ratio to b is a unit: β = c·b
    assert_eq!(bp.valuation(), b.valuation());
    let r = case2_eq(T, &b);
    let rp = case2_eq(T, &bp);
    let f = GroupoidSection::holonomic(&[h.clone(), Series::var(2, T, 1)], 2).unwrap();
    let n = TransversalData { fiber_vars: vec![1], phi: vec![h, Series::zero(2, T)] };
    let rep = verify_formal_isomorphism(&f, &r, &rp, &n).unwrap();
    assert!(rep.restricts_to_phi);
    assert!(rep.pushes_r_to_rp);
    assert!(rep.spencer_in_r);

    let wrong = TransversalData { fiber_vars: vec![1], phi: vec![x.clone(), Series::zero(2, T)] };
    assert!(!verify_formal_isomorphism(&f, &r, &rp, &wrong).unwrap().restricts_to_phi);
    assert!(!verify_formal_isomorphism(&f, &r, &r, &n).unwrap().pushes_r_to_rp);
}

#[test]
fn isomorphism_verifier_flags_a_perturbed_section() {
    let r = case2_eq(T, &Series::var(2, T, 0));
    let mut jets = GroupoidSection::identity(2, 2, 2, T).jets();
    jets.set(1, &mi2(1, 1), Series::var(2, T, 0));
    let f = GroupoidSection::from_jets(vec![Series::var(2, T, 0), Series::var(2, T, 1)], &jets).unwrap();
    let n = TransversalData { fiber_vars: vec![1], phi: vec![Series::var(2, T, 0), Series::zero(2, T)] };
    let rep = verify_formal_isomorphism(&f, &r, &r, &n).unwrap();
    assert!(rep.restricts_to_phi);
    assert!(!rep.spencer_in_r);
    assert!(rep.witness_direction.is_some());
    assert!(rep.witness_residuals.iter().any(|s| !s.is_zero()));
}

#[test]
fn isomorphism_verifier_rejects_non_fibered_maps() {
    let r = case2_eq(T, &Series::var(2, T, 0));
    let f = GroupoidSection::holonomic(&[&Series::var(2, T, 0) + &Series::var(2, T, 1), Series::var(2, T, 1)], 2).unwrap();
    let n = TransversalData { fiber_vars: vec![1], phi: vec![Series::var(2, T, 0), Series::zero(2, T)] };
    assert!(matches!(
        verify_formal_isomorphism(&f, &r, &r, &n),
        Err(spencer_core::Error::ChartMismatch(_))
    ));
}
