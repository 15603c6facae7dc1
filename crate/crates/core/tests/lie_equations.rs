mod common;

use common::*;
use rand_chacha::ChaCha8Rng;
use spencer_core::bracket_calculus::algebraic_bracket;
use spencer_core::exact_series::{q, MultiIndex, Series};
use spencer_core::jet_space::JetSection;
use spencer_core::lie_equations::*;
use spencer_core::spencer_symbols::{symbol_vector, SymbolSpace};
use spencer_core::Error;

const T: i32 = 7;

fn mi(e: &[u32]) -> MultiIndex {
    MultiIndex(e.to_vec())
}

fn c(v: i64) -> Series {
    Series::constant(2, T, q(v))
}

fn x() -> Series {
    Series::var(2, T, 0)
}

/// Relation on the ∂/∂y component with terms (α, coefficient).
fn rel(terms: &[(&[u32], Series)]) -> Relation {
    relation(terms.iter().map(|(a, s)| (1, mi(a), s.clone())).collect())
}

fn plane(order: usize, relations: Vec<Relation>) -> Result<LinearLieEquation, Error> {
    LinearLieEquation::build(EquationSpec {
        n_base: 2,
        n_vars: 2,
        order,
        trunc: T,
        ambient: vec![1],
        fiber_vars: vec![1],
        relations,
    })
}

fn case1() -> LinearLieEquation {
    plane(1, vec![rel(&[(&[1, 0], c(1))])]).unwrap()
}

/// {p01 = x^m p10}
fn case2(m: u32) -> LinearLieEquation {
    plane(1, vec![rel(&[(&[0, 1], c(1)), (&[1, 0], x().pow(m).scale(&q(-1)))])]).unwrap()
}

fn line(k: usize, a: &[u32]) -> SymbolSpace {
    SymbolSpace::new(2, k, vec![symbol_vector(2, k, &[(1, mi(a), q(1))])])
}

/// Random combination of spanning sections with polynomial coefficients.
fn random_member(r: &mut ChaCha8Rng, e: &LinearLieEquation) -> JetSection {
    let mut s = JetSection::zero(2, 2, e.order, T);
    for g in e.spanning_sections() {
        s = s.add(&g.mul_series(&poly(r, 2, 2, T, 3, true)));
    }
    s
}

#[test]
fn build_examples() {
    let r = case1();
    assert_eq!(r.fiber_dim(), 2);
    assert_eq!(r.rows.len(), 1);
    let beta = &x() + &x().pow(2).scale(&q(3));
    let r = plane(1, vec![rel(&[(&[0, 1], c(1)), (&[1, 0], beta.scale(&q(-1)))])]).unwrap();
    assert_eq!(r.fiber_dim(), 2);

    let dup = plane(1, vec![rel(&[(&[1, 0], c(1))]), rel(&[(&[1, 0], c(2))])]).unwrap();
    assert_eq!(dup.rows.len(), 1);
    assert!(dup.same_as(&case1()).unwrap());

    assert!(matches!(plane(1, vec![rel(&[(&[1, 0], c(0))])]), Err(Error::EmptyRelation)));
    assert!(matches!(plane(1, vec![rel(&[])]), Err(Error::EmptyRelation)));
}

#[test]
fn build_rejects_rank_drop_at_origin() {
    assert!(matches!(plane(1, vec![rel(&[(&[1, 0], x())])]), Err(Error::NonRegular(_))));
    assert!(matches!(plane(1, vec![rel(&[(&[2, 0], c(1))])]), Err(Error::Order(_))));
    let bad = relation(vec![(0, mi(&[0, 0]), c(1))]);
    assert!(matches!(plane(1, vec![bad]), Err(Error::Dimension(_))));
}

#[test]
fn prolongation_examples() {
    let r2 = case1().prolong().unwrap();
    assert_eq!(r2.order, 2);
    assert_eq!(r2.fiber_dim(), 3);
    let want = plane(
        2,
        vec![rel(&[(&[1, 0], c(1))]), rel(&[(&[2, 0], c(1))]), rel(&[(&[1, 1], c(1))])],
    )
    .unwrap();
    assert!(r2.same_as(&want).unwrap());

    let r2 = case2(1).prolong().unwrap();
    let want = plane(
        2,
        vec![
            rel(&[(&[0, 1], c(1)), (&[1, 0], x().scale(&q(-1)))]),
            rel(&[(&[1, 1], c(1)), (&[1, 0], c(-1)), (&[2, 0], x().scale(&q(-1)))]),
            rel(&[(&[0, 2], c(1)), (&[1, 1], x().scale(&q(-1)))]),
        ],
    )
    .unwrap();
    assert!(r2.same_as(&want).unwrap());

    let full = LinearLieEquation::full(2, 2, 1, T, vec![1], vec![1]);
    let full2 = full.prolong().unwrap();
    assert!(full2.same_as(&LinearLieEquation::full(2, 2, 2, T, vec![1], vec![1])).unwrap());
    assert_eq!(full2.fiber_dim(), 6);
}

#[test]
fn prolongation_needs_series_budget() {
    let r = LinearLieEquation::build(EquationSpec {
        n_base: 2,
        n_vars: 2,
        order: 1,
        trunc: 0,
        ambient: vec![1],
        fiber_vars: vec![1],
        relations: vec![relation(vec![(1, mi(&[1, 0]), Series::one(2, 0))])],
    })
    .unwrap();
    assert!(matches!(r.prolong(), Err(Error::OrderBudget(_))));
}

#[test]
fn symbol_examples() {
    assert!(case1().symbol().unwrap().same_as(&line(1, &[0, 1])));
    let beta = &x() + &x().pow(3);
    let r = plane(1, vec![rel(&[(&[0, 1], c(1)), (&[1, 0], beta.scale(&q(-1)))])]).unwrap();
    assert!(r.symbol().unwrap().same_as(&line(1, &[1, 0])));
    let g2 = case1().prolong().unwrap().symbol().unwrap();
    assert_eq!(g2.dim(), 1);
    assert!(g2.same_as(&line(2, &[0, 2])));
}

#[test]
fn lie_closure_examples() {
    assert!(case1().check_lie_closure().unwrap().closed);
    assert!(LinearLieEquation::full(2, 2, 1, T, vec![1], vec![1]).check_lie_closure().unwrap().closed);
    for m in 0..3 {
        assert!(case2(m).check_lie_closure().unwrap().closed);
    }
}

#[test]
fn non_closed_system_has_a_witness() {
    // {p10 = p00} is not closed under the bracket
    let r = plane(1, vec![rel(&[(&[1, 0], c(1)), (&[0, 0], c(-1))])]).unwrap();
    let rep = r.check_lie_closure().unwrap();
    assert!(!rep.closed);
    let w = rep.witness.unwrap();
    let next = r.prolong().unwrap();
    assert!(next.contains(&w.first).unwrap());
    assert!(next.contains(&w.second).unwrap());
    let br = algebraic_bracket(&w.first, &w.second).unwrap();
    assert_eq!(br, w.bracket);
    assert!(!r.contains(&br).unwrap());
    assert!(w.residuals.iter().any(|s| !s.is_zero()));
}

#[test]
fn integrability_examples() {
    let rep = case1().check_formal_integrability(3).unwrap();
    assert_eq!(rep.verdict, Verdict::FormallyIntegrable);
    assert!(rep.steps.iter().all(|s| s.surjective));
    assert!(rep.acyclicity.two_acyclic);
    for m in 0..=3 {
        let rep = case2(m).check_formal_integrability(3).unwrap();
        assert_eq!(rep.verdict, Verdict::FormallyIntegrable, "m = {m}");
        assert_eq!(rep.symbol_dims(), vec![1, 1, 1, 1]);
    }
    let full = LinearLieEquation::full(2, 2, 1, T, vec![1], vec![1]);
    assert_eq!(full.check_formal_integrability(3).unwrap().verdict, Verdict::FormallyIntegrable);
    assert_eq!(Verdict::FormallyIntegrable.to_string(), "formally_integrable");
}

#[test]
fn projection_failure_is_not_integrable() {
    // {p10 = 0, p01 = x p00}: the prolongation forces p00 = 0
    let r = plane(
        1,
        vec![rel(&[(&[1, 0], c(1))]), rel(&[(&[0, 1], c(1)), (&[0, 0], x().scale(&q(-1)))])],
    )
    .unwrap();
    assert_eq!(r.fiber_dim(), 1);
    let rep = r.check_formal_integrability(3).unwrap();
    assert_eq!(rep.verdict, Verdict::NotFormallyIntegrable);
    assert!(!rep.steps.last().unwrap().surjective);
}

#[test]
fn intransitivity_examples() {
    assert!(case1().check_intransitive().unwrap());
    assert!(case2(2).check_intransitive().unwrap());
    let r = plane(1, vec![rel(&[(&[0, 0], c(1))])]).unwrap();
    assert!(!r.check_intransitive().unwrap());
    let mixed = LinearLieEquation::build(EquationSpec {
        n_base: 2,
        n_vars: 2,
        order: 1,
        trunc: T,
        ambient: vec![0, 1],
        fiber_vars: vec![1],
        relations: vec![relation(vec![(1, mi(&[1, 0]), c(1)), (0, mi(&[0, 1]), c(1))])],
    })
    .unwrap();
    assert!(!mixed.check_intransitive().unwrap());
}

#[test]
fn prolongation_is_consistent_with_the_spencer_operator() {
    let mut r = rng(71);
    for e in [case1(), case2(1), case2(2)] {
        let next = e.prolong().unwrap();
        for _ in 0..4 {
            let xi = random_member(&mut r, &next);
            assert!(next.contains(&xi).unwrap());
            assert!(e.contains(&xi.project(1).unwrap()).unwrap());
            for d in xi.spencer_d().unwrap() {
                assert!(e.contains(&d).unwrap());
            }
            // a top-order perturbation keeps π ξ in R; membership in R² is
            // then equivalent to D ξ ∈ T*⊗R
            let mut bumped = xi.clone();
            bumped.set(1, &mi(&[1, 1]), &xi.get(1, &mi(&[1, 1])).clone() + &poly(&mut r, 2, 2, T, 2, true));
            let d_in = bumped.spencer_d().unwrap().iter().all(|d| e.contains(d).unwrap());
            assert_eq!(next.contains(&bumped).unwrap(), d_in);
        }
    }
}

#[test]
fn fiber_dimensions_add_up() {
    for e in [case1(), case2(1), case2(3)] {
        let mut cur = e.clone();
        for _ in 0..3 {
            let next = cur.prolong().unwrap();
            assert!(projection_onto(&next, &cur));
            assert_eq!(next.fiber_dim(), cur.fiber_dim() + next.symbol().unwrap().dim());
            cur = next;
        }
    }
}

#[test]
fn plane_family_symbols_are_lines() {
    let mut cur = case2(2);
    for l in 1..=5 {
        assert_eq!(cur.order, l);
        assert_eq!(cur.symbol().unwrap().dim(), 1);
        cur = cur.prolong().unwrap();
    }
}

#[test]
fn spanning_sections_lie_in_the_equation() {
    for e in [case1(), case2(2), case1().prolong().unwrap()] {
        let gens = e.spanning_sections();
        assert_eq!(gens.len(), e.fiber_dim());
        for g in &gens {
            assert!(e.contains(g).unwrap());
        }
    }
}
