//! First, second and third brackets on checked jet sections.

use num::Zero;

use crate::error::{Error, Result};
use crate::exact_series::{multi_index_enum, MultiIndex, Series, Q};
use crate::jet_space::{vector_bracket, CheckedSection, JetSection};

/// Pointwise bracket {X, Y} of two order-k jets, an order k−1 jet.
///
/// {X,Y}^i_γ = Σ_{δ≤γ} C(γ,δ) Σ_j (X^j_δ Y^i_{γ−δ+e_j} − Y^j_δ X^i_{γ−δ+e_j}).
pub fn algebraic_bracket(x: &JetSection, y: &JetSection) -> Result<JetSection> {
    if x.order != y.order {
        return Err(Error::Order(format!(
            "bracket of jets of orders {} and {}",
            x.order, y.order
        )));
    }
    if x.order == 0 {
        return Err(Error::Order("algebraic bracket needs order at least 1".into()));
    }
    let n = x.n_base;
    let k1 = x.order - 1;
    let mut out = JetSection::zero(n, x.n_vars(), k1, x.trunc().min(y.trunc()));
    let gammas = multi_index_enum(n, k1);
    for gamma in &gammas {
        let deltas: Vec<MultiIndex> = gammas.iter().filter(|d| MultiIndex::le(d, gamma)).cloned().collect();
        for i in 0..n {
            let mut acc = out.get(i, gamma).clone();
            for delta in &deltas {
                let c = Q::from_integer(gamma.binomial(delta));
                let rest = gamma.minus(delta).unwrap();
                for j in 0..n {
                    let idx = rest.plus_unit(j);
                    let t = &(x.get(j, delta) * y.get(i, &idx)) - &(y.get(j, delta) * x.get(i, &idx));
                    if !t.is_zero() {
                        acc = &acc + &t.scale(&c);
                    }
                }
            }
            out.set(i, gamma, acc);
        }
    }
    Ok(out)
}

/// The same bracket computed through Taylor-polynomial representatives:
/// θ^i(h) = Σ X^i_α h^α/α!, bracket as vector fields, then re-extract the jet.
/// Inputs are point values `x[i][rank α]`.
pub fn algebraic_bracket_representative(x: &[Vec<Q>], y: &[Vec<Q>], n: usize, k: usize) -> Vec<Vec<Q>> {
    let idx = multi_index_enum(n, k);
    let t = 2 * k as i32 + 2;
    let rep = |v: &[Vec<Q>]| -> Vec<Series> {
        v.iter()
            .map(|c| {
                Series::from_terms(
                    n,
                    t,
                    idx.iter()
                        .enumerate()
                        .map(|(r, a)| (a.clone(), &c[r] / Q::from_integer(a.factorial()))),
                )
            })
            .collect()
    };
    let br = vector_bracket(&rep(x), &rep(y));
    let low = multi_index_enum(n, k.saturating_sub(1));
    br.iter()
        .map(|s| {
            low.iter()
                .map(|a| s.coeff(a) * Q::from_integer(a.factorial()))
                .collect()
        })
        .collect()
}

fn check_orders(a: &CheckedSection, b: &CheckedSection) -> Result<()> {
    if a.order() != b.order() {
        return Err(Error::Order(format!(
            "bracket of sections of orders {} and {}",
            a.order(),
            b.order()
        )));
    }
    if a.order() == 0 {
        return Err(Error::Order("first bracket needs order at least 1".into()));
    }
    Ok(())
}

/// [[v+ξ, w+η]]_k = [v,w] + i(v)Dη − i(w)Dξ + {ξ,η}.
pub fn first_bracket(a: &CheckedSection, b: &CheckedSection) -> Result<CheckedSection> {
    check_orders(a, b)?;
    let h = vector_bracket(&a.horizontal, &b.horizontal);
    let mut v = algebraic_bracket(&a.vertical, &b.vertical)?;
    if a.horizontal.iter().any(|s| !s.is_zero()) {
        v = v.add(&b.vertical.spencer_d_along(&a.horizontal)?);
    }
    if b.horizontal.iter().any(|s| !s.is_zero()) {
        v = v.sub(&a.vertical.spencer_d_along(&b.horizontal)?);
    }
    Ok(CheckedSection::new(h, v))
}

fn check_tilde(a: &CheckedSection, what: &str) -> Result<()> {
    if !a.is_tilde() {
        return Err(Error::Tilde(format!("{what}: horizontal part differs from β_* of the jet")));
    }
    Ok(())
}

fn check_lift(lift: &JetSection, target: &JetSection, what: &str) -> Result<()> {
    if lift.order != target.order + 1 || &lift.project(target.order)? != target {
        return Err(Error::Lift(what.to_string()));
    }
    Ok(())
}

/// ⟪ξ̃, η̃⟫_k for tilde sections, computed with explicit order-(k+1) lifts.
pub fn second_bracket(
    a: &CheckedSection,
    b: &CheckedSection,
    lifts: Option<(&JetSection, &JetSection)>,
) -> Result<CheckedSection> {
    if a.order() != b.order() {
        return Err(Error::Order("second bracket of different orders".into()));
    }
    check_tilde(a, "first argument")?;
    check_tilde(b, "second argument")?;
    let k = a.order();
    let (la, lb) = match lifts {
        Some((x, y)) => {
            check_lift(x, &a.vertical, "first lift")?;
            check_lift(y, &b.vertical, "second lift")?;
            (x.clone(), y.clone())
        }
        None => (a.vertical.lift_zero(k + 1), b.vertical.lift_zero(k + 1)),
    };
    let r = first_bracket(
        &CheckedSection::new(a.horizontal.clone(), la),
        &CheckedSection::new(b.horizontal.clone(), lb),
    )?;
    Ok(r)
}

/// ⦀ξ̃_{k+1}, η̌_k⦀_k = [[ξ̃_{k+1}, η̌_{k+1}]]_{k+1} for any lift η̌_{k+1}.
pub fn third_bracket(
    a: &CheckedSection,
    b: &CheckedSection,
    lift: Option<&JetSection>,
) -> Result<CheckedSection> {
    if a.order() != b.order() + 1 {
        return Err(Error::Order(format!(
            "third bracket expects orders k+1 and k, got {} and {}",
            a.order(),
            b.order()
        )));
    }
    check_tilde(a, "first argument")?;
    let lb = match lift {
        Some(l) => {
            check_lift(l, &b.vertical, "lift of second argument")?;
            l.clone()
        }
        None => b.vertical.lift_zero(a.order()),
    };
    first_bracket(a, &CheckedSection::new(b.horizontal.clone(), lb))
}

/// Convenience: rational point values of a jet section at the origin, per component.
pub fn point_values(x: &JetSection) -> Vec<Vec<Q>> {
    x.comps
        .iter()
        .map(|c| c.iter().map(|s| s.constant_term()).collect())
        .collect()
}

/// Jet section with constant coefficients from point values.
pub fn from_point_values(v: &[Vec<Q>], n: usize, k: usize, n_vars: usize, trunc: i32) -> JetSection {
    let mut s = JetSection::zero(n, n_vars, k, trunc);
    for (i, c) in v.iter().enumerate() {
        for (a, val) in multi_index_enum(n, k).iter().zip(c) {
            if !val.is_zero() {
                s.set(i, a, Series::constant(n_vars, trunc, val.clone()));
            }
        }
    }
    s
}
