//! Partial connections along a coordinate distribution V, given by a
//! V*-valued jet form ω with β_*(ω(w)) = w.

use crate::bracket_calculus::{algebraic_bracket, second_bracket, third_bracket};
use crate::error::{Error, Result};
use crate::exact_series::{multi_index_enum, MultiIndex, Series};
use crate::jet_groupoid::GroupoidSection;
use crate::jet_space::{CheckedSection, JetSection};

#[derive(Clone, Debug, PartialEq)]
pub struct PartialConnectionData {
    pub n_base: usize,
    pub fiber_vars: Vec<usize>,
    /// ω(∂/∂y_a), one jet section of order k+1 per fiber direction.
    pub omega: Vec<JetSection>,
}

/// Curvature components C_ab for a < b, as jet sections of order k+1.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub components: Vec<((usize, usize), JetSection)>,
}

impl Curvature {
    pub fn is_flat(&self) -> bool {
        self.components.iter().all(|(_, c)| c.is_zero())
    }

    pub fn get(&self, a: usize, b: usize) -> Option<JetSection> {
        if a == b {
            return None;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let c = self.components.iter().find(|(p, _)| *p == (lo, hi))?.1.clone();
        Some(if a < b { c } else { c.neg() })
    }
}

impl PartialConnectionData {
    pub fn new(n_base: usize, fiber_vars: Vec<usize>, omega: Vec<JetSection>) -> Result<Self> {
        if omega.len() != fiber_vars.len() {
            return Err(Error::Dimension(format!(
                "{} fiber directions but {} connection forms",
                fiber_vars.len(),
                omega.len()
            )));
        }
        let order = omega.first().map(|w| w.order).unwrap_or(1);
        if order == 0 {
            return Err(Error::Order("connection forms need order at least 1".into()));
        }
        let zero = MultiIndex::zero(n_base);
        for (w, &ya) in omega.iter().zip(&fiber_vars) {
            if w.n_base != n_base || w.order != order {
                return Err(Error::Dimension("connection forms of mismatched shape".into()));
            }
            for i in 0..n_base {
                let v = w.get(i, &zero);
                let want = if i == ya {
                    Series::one(v.n_vars(), v.trunc())
                } else {
                    Series::zero(v.n_vars(), v.trunc())
                };
                if *v != want {
                    return Err(Error::BetaCompatibility(format!(
                        "order-zero part of ω(∂/∂x{ya}) is not ∂/∂x{ya}"
                    )));
                }
                if !fiber_vars.contains(&i) && w.comps[i].iter().any(|s| !s.is_zero()) {
                    return Err(Error::BetaCompatibility(format!(
                        "ω(∂/∂x{ya}) has a component along the non-fiber direction {i}"
                    )));
                }
            }
        }
        Ok(PartialConnectionData {
            n_base,
            fiber_vars,
            omega,
        })
    }

    /// ω(∂_a) = j^{k+1}∂_a for every fiber direction.
    pub fn trivial(n_base: usize, n_vars: usize, fiber_vars: Vec<usize>, order: usize, trunc: i32) -> Self {
        let omega = fiber_vars
            .iter()
            .map(|&a| {
                JetSection::unit(n_base, order, a, &MultiIndex::zero(n_base), Series::one(n_vars, trunc))
            })
            .collect();
        PartialConnectionData {
            n_base,
            fiber_vars,
            omega,
        }
    }

    /// Order k of the sections the connection acts on.
    pub fn order(&self) -> usize {
        self.omega[0].order - 1
    }

    pub fn tilde(&self, a: usize) -> CheckedSection {
        CheckedSection::tilde(self.omega[a].clone())
    }

    fn check_argument(&self, cs: &CheckedSection) -> Result<()> {
        if cs.order() != self.order() || cs.n_base() != self.n_base {
            return Err(Error::Order(format!(
                "connection of order {} applied to a section of order {}",
                self.order(),
                cs.order()
            )));
        }
        for i in 0..self.n_base {
            if self.fiber_vars.contains(&i) {
                if !cs.horizontal[i].is_zero() {
                    return Err(Error::Dimension(format!("horizontal part has a fiber component {i}")));
                }
            } else if cs.vertical.comps[i].iter().any(|s| !s.is_zero()) {
                return Err(Error::Dimension(format!("jet part has a non-fiber component {i}")));
            }
        }
        Ok(())
    }

    /// ∇_{∂_a}(u + ξ) = ⦀ω̃(∂_a), u + ξ⦀_k.
    pub fn nabla(&self, a: usize, cs: &CheckedSection) -> Result<CheckedSection> {
        self.check_argument(cs)?;
        third_bracket(&self.tilde(a), cs, None)
    }

    /// C_ab = ⟪ω̃_a, ω̃_b⟫_{k+1}; with coordinate directions this is i(∂_a∧∂_b) of ½⟪ω̃,ω̃⟫.
    pub fn curvature(&self) -> Result<Curvature> {
        let mut components = Vec::new();
        let m = self.fiber_vars.len();
        for a in 0..m {
            for b in a + 1..m {
                let c = second_bracket(&self.tilde(a), &self.tilde(b), None)?;
                components.push(((a, b), c.vertical));
            }
        }
        Ok(Curvature { components })
    }

    pub fn is_flat(&self) -> Result<bool> {
        Ok(self.curvature()?.is_flat())
    }

    /// The jet part of ∂_aΞ forced by ∇_a(U + Ξ) = 0, given U independent of V.
    fn transport_rhs(&self, a: usize, u: &[Series], xi: &JetSection) -> Result<JetSection> {
        let k = self.order();
        let n = self.n_base;
        let w = &self.omega[a];
        let ya = self.fiber_vars[a];
        let lifted = xi.lift_zero(k + 1);
        let mut rhs = w.spencer_d_along(u)?.sub(&algebraic_bracket(w, &lifted)?);
        for i in 0..n {
            for g in multi_index_enum(n, k) {
                let s = rhs.get(i, &g) + lifted.get(i, &g.plus_unit(ya));
                rhs.set(i, &g, s);
            }
        }
        Ok(rhs)
    }

    /// The unique U + Ξ with ∇(U + Ξ) = 0 restricting to `boundary` on {y = 0}.
    pub fn parallel_extend(&self, boundary: &CheckedSection) -> Result<CheckedSection> {
        self.check_argument(boundary)?;
        let curv = self.curvature()?;
        if let Some(((a, b), c)) = curv.components.iter().find(|(_, c)| !c.is_zero()) {
            let wit = c
                .comps
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().map(move |(r, s)| (i, r, s)))
                .find(|(_, _, s)| !s.is_zero())
                .map(|(i, r, s)| format!("component {i}, jet index {r}: {s}"))
                .unwrap_or_default();
            return Err(Error::NotFlat(format!(
                "curvature on (∂x{}, ∂x{}) is nonzero at {wit}",
                self.fiber_vars[*a], self.fiber_vars[*b]
            )));
        }
        let ys = &self.fiber_vars;
        let u: Vec<Series> = boundary.horizontal.iter().map(|s| s.restrict_zero(ys)).collect();
        let xi0 = boundary.vertical.map(|s| s.restrict_zero(ys));
        let t = boundary.trunc().max(self.omega[0].trunc());
        let mut xi = xi0.clone();
        for _ in 0..=t.max(0) {
            let mut next = xi0.clone();
            for (a, &ya) in ys.iter().enumerate() {
                let rhs = self.transport_rhs(a, &u, &xi)?;
                let earlier = &ys[..a];
                next = next.add(&rhs.map(|s| s.restrict_zero(earlier).integrate(ya)));
            }
            if next == xi && next.trunc() >= xi.trunc() {
                xi = next;
                break;
            }
            xi = next;
        }
        Ok(CheckedSection::new(u, xi))
    }
}

/// ω(∂/∂t) = d/dt F_t at t = 0, for a family F_t of sections with F_0 = id
/// carrying t as its last series variable.
pub fn omega_from_flow(family: &GroupoidSection) -> JetSection {
    let jets = family.jets();
    let tv = jets.n_vars() - 1;
    jets.map(|s| drop_last_var(&s.coeff_in_var(tv, 1)))
}

fn drop_last_var(s: &Series) -> Series {
    let n = s.n_vars() - 1;
    Series::from_terms(
        n,
        s.trunc(),
        s.terms()
            .into_iter()
            .map(|(e, c)| (MultiIndex(e.0[..n].to_vec()), c)),
    )
}

pub fn nabla_apply(conn: &PartialConnectionData, cs: &CheckedSection, direction: usize) -> Result<CheckedSection> {
    conn.nabla(direction, cs)
}

pub fn curvature_flatness(conn: &PartialConnectionData) -> Result<(Curvature, bool)> {
    let c = conn.curvature()?;
    let flat = c.is_flat();
    Ok((c, flat))
}

pub fn parallel_extend(conn: &PartialConnectionData, boundary: &CheckedSection) -> Result<CheckedSection> {
    conn.parallel_extend(boundary)
}
