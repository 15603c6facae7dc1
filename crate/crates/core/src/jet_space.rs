//! Sections of J^kT in derivative coordinates, projections, holonomic lifts
//! and the linear Spencer operator.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact_series::{index_rank, multi_index_enum, MultiIndex, Series, Q};

/// A section of J^kT: `comps[i][rank(α)]` is the series of ∂^α θ^i.
///
/// Coefficient series may carry extra trailing parameter variables beyond the
/// `n_base` coordinates; those are never differentiated.
#[derive(Clone, Debug, PartialEq)]
pub struct JetSection {
    pub n_base: usize,
    pub order: usize,
    pub comps: Vec<Vec<Series>>,
}

impl JetSection {
    pub fn zero(n_base: usize, n_vars: usize, order: usize, trunc: i32) -> Self {
        let m = multi_index_enum(n_base, order).len();
        JetSection {
            n_base,
            order,
            comps: vec![vec![Series::zero(n_vars, trunc); m]; n_base],
        }
    }

    /// Jet with a single coordinate `p^i_α = c` and all others zero.
    pub fn unit(n_base: usize, order: usize, i: usize, alpha: &MultiIndex, c: Series) -> Self {
        let mut s = Self::zero(n_base, c.n_vars(), order, c.trunc());
        s.set(i, alpha, c);
        s
    }

    pub fn indices(&self) -> Vec<MultiIndex> {
        multi_index_enum(self.n_base, self.order)
    }

    pub fn n_vars(&self) -> usize {
        self.comps[0][0].n_vars()
    }

    pub fn trunc(&self) -> i32 {
        self.comps.iter().flatten().map(|s| s.trunc()).min().unwrap()
    }

    pub fn get(&self, i: usize, alpha: &MultiIndex) -> &Series {
        &self.comps[i][index_rank(alpha)]
    }

    /// Coordinate value, zero beyond the order of the section.
    pub fn get_or_zero(&self, i: usize, alpha: &MultiIndex) -> Series {
        if alpha.order() as usize > self.order {
            Series::zero(self.n_vars(), self.trunc())
        } else {
            self.get(i, alpha).clone()
        }
    }

    pub fn set(&mut self, i: usize, alpha: &MultiIndex, s: Series) {
        let r = index_rank(alpha);
        self.comps[i][r] = s;
    }

    pub fn map(&self, f: impl Fn(&Series) -> Series) -> Self {
        JetSection {
            n_base: self.n_base,
            order: self.order,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(&f).collect())
                .collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(&Series, &Series) -> Series) -> Self {
        assert_eq!(self.n_base, other.n_base);
        assert_eq!(self.order, other.order, "jet order mismatch");
        JetSection {
            n_base: self.n_base,
            order: self.order,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(x, y)).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a)
    }

    pub fn mul_series(&self, f: &Series) -> Self {
        self.map(|a| a * f)
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.map(|a| a.scale(c))
    }

    pub fn truncate(&self, t: i32) -> Self {
        self.map(|a| a.truncate(t))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(|s| s.is_zero())
    }

    /// π_l: forget coordinates of order above `l`.
    pub fn project(&self, l: usize) -> Result<Self> {
        if l > self.order {
            return Err(Error::Order(format!(
                "cannot project a jet of order {} to order {l}",
                self.order
            )));
        }
        let m = multi_index_enum(self.n_base, l).len();
        Ok(JetSection {
            n_base: self.n_base,
            order: l,
            comps: self.comps.iter().map(|c| c[..m].to_vec()).collect(),
        })
    }

    /// Extension to a higher order with zero new coordinates.
    pub fn lift_zero(&self, order: usize) -> Self {
        let mut out = JetSection::zero(self.n_base, self.n_vars(), order, self.trunc());
        for (i, c) in self.comps.iter().enumerate() {
            for (r, s) in c.iter().enumerate() {
                out.comps[i][r] = s.clone();
            }
        }
        out
    }

    /// Order-zero part θ(x) as a vector field.
    pub fn order_zero(&self) -> Vec<Series> {
        self.comps.iter().map(|c| c[0].clone()).collect()
    }

    /// Coordinate values at the origin, components outer and indices inner.
    pub fn value_at_zero(&self) -> Vec<Q> {
        self.comps
            .iter()
            .flatten()
            .map(|s| s.constant_term())
            .collect()
    }

    /// Coefficientwise partial derivative in a base direction.
    pub fn derive(&self, j: usize) -> Self {
        self.map(|a| a.derive(j))
    }

    /// Substitution of the coefficients (e.g. restriction to a transversal).
    pub fn compose(&self, args: &[Series]) -> Result<Self> {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().map(|s| s.compose(args)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(JetSection {
            n_base: self.n_base,
            order: self.order,
            comps,
        })
    }

    /// i(∂_j)Dξ, the Spencer operator in one direction.
    pub fn spencer_d_dir(&self, j: usize) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::Order("Spencer operator needs order at least 1".into()));
        }
        let k1 = self.order - 1;
        let idx = multi_index_enum(self.n_base, k1);
        let comps = self
            .comps
            .iter()
            .map(|c| {
                idx.iter()
                    .enumerate()
                    .map(|(r, a)| &c[r].derive(j) - &c[index_rank(&a.plus_unit(j))])
                    .collect()
            })
            .collect();
        Ok(JetSection {
            n_base: self.n_base,
            order: k1,
            comps,
        })
    }

    /// Dξ as the list of its values on the coordinate directions.
    pub fn spencer_d(&self) -> Result<Vec<JetSection>> {
        (0..self.n_base).map(|j| self.spencer_d_dir(j)).collect()
    }

    /// i(v)Dξ for a vector field v.
    pub fn spencer_d_along(&self, v: &[Series]) -> Result<Self> {
        let mut acc: Option<JetSection> = None;
        for (j, vj) in v.iter().enumerate() {
            let t = self.spencer_d_dir(j)?.mul_series(vj);
            acc = Some(match acc {
                None => t,
                Some(a) => a.add(&t),
            });
        }
        acc.ok_or_else(|| Error::Dimension("empty vector field".into()))
    }
}

/// j^kθ: all derivatives of θ up to order k.
pub fn holonomic_lift(theta: &[Series], k: usize) -> Result<JetSection> {
    let n = theta.len();
    if n == 0 {
        return Err(Error::Dimension("empty vector field".into()));
    }
    let t = theta.iter().map(|s| s.trunc()).min().unwrap();
    if k as i32 > t {
        return Err(Error::OrderBudget(format!(
            "lift of order {k} from series known to order {t}"
        )));
    }
    let idx = multi_index_enum(n, k);
    let comps = theta
        .iter()
        .map(|th| idx.iter().map(|a| th.derive_multi(a)).collect())
        .collect();
    Ok(JetSection {
        n_base: n,
        order: k,
        comps,
    })
}

/// T ⊕ J^kT: a vector field plus a jet section.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckedSection {
    pub horizontal: Vec<Series>,
    pub vertical: JetSection,
}

impl CheckedSection {
    pub fn new(horizontal: Vec<Series>, vertical: JetSection) -> Self {
        assert_eq!(horizontal.len(), vertical.n_base);
        CheckedSection {
            horizontal,
            vertical,
        }
    }

    pub fn vertical(xi: JetSection) -> Self {
        let h = vec![Series::zero(xi.n_vars(), xi.trunc()); xi.n_base];
        CheckedSection::new(h, xi)
    }

    pub fn order(&self) -> usize {
        self.vertical.order
    }

    pub fn n_base(&self) -> usize {
        self.vertical.n_base
    }

    /// Element of the tilde subspace: horizontal part equal to β_* of the jet.
    pub fn tilde(xi: JetSection) -> Self {
        CheckedSection::new(xi.order_zero(), xi)
    }

    pub fn is_tilde(&self) -> bool {
        self.horizontal == self.vertical.order_zero()
    }

    /// β_*(v + ξ) = v + ξ_0.
    pub fn beta(&self) -> Vec<Series> {
        self.horizontal
            .iter()
            .zip(self.vertical.order_zero())
            .map(|(a, b)| a + &b)
            .collect()
    }

    pub fn project(&self, l: usize) -> Result<Self> {
        Ok(CheckedSection::new(
            self.horizontal.clone(),
            self.vertical.project(l)?,
        ))
    }

    pub fn add(&self, o: &Self) -> Self {
        CheckedSection::new(
            self.horizontal
                .iter()
                .zip(&o.horizontal)
                .map(|(a, b)| a + b)
                .collect(),
            self.vertical.add(&o.vertical),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        CheckedSection::new(
            self.horizontal
                .iter()
                .zip(&o.horizontal)
                .map(|(a, b)| a - b)
                .collect(),
            self.vertical.sub(&o.vertical),
        )
    }

    pub fn mul_series(&self, f: &Series) -> Self {
        CheckedSection::new(
            self.horizontal.iter().map(|a| a * f).collect(),
            self.vertical.mul_series(f),
        )
    }

    pub fn scale(&self, c: &Q) -> Self {
        CheckedSection::new(
            self.horizontal.iter().map(|a| a.scale(c)).collect(),
            self.vertical.scale(c),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.horizontal.iter().all(|s| s.is_zero()) && self.vertical.is_zero()
    }

    pub fn trunc(&self) -> i32 {
        self.horizontal
            .iter()
            .map(|s| s.trunc())
            .chain(std::iter::once(self.vertical.trunc()))
            .min()
            .unwrap()
    }
}

/// Projection π_l of a jet section.
pub fn project_jet(xi: &JetSection, l: usize) -> Result<JetSection> {
    xi.project(l)
}

/// β_* of a checked section.
pub fn beta(cs: &CheckedSection) -> Vec<Series> {
    cs.beta()
}

/// Derivative v(f) of a function along a vector field.
pub fn lie_derivative(v: &[Series], f: &Series) -> Series {
    let mut acc = Series::zero(f.n_vars(), f.trunc());
    for (j, vj) in v.iter().enumerate() {
        acc = &acc + &(vj * &f.derive(j));
    }
    acc
}

/// Bracket of vector fields [v, w]^i = v(w^i) − w(v^i).
pub fn vector_bracket(v: &[Series], w: &[Series]) -> Vec<Series> {
    v.iter()
        .zip(w)
        .map(|(vi, wi)| &lie_derivative(v, wi) - &lie_derivative(w, vi))
        .collect()
}

/// Sign and sorted position of inserting `j` into the increasing tuple `set`.
pub fn wedge_insert(j: usize, set: &[usize]) -> Option<(Vec<usize>, bool)> {
    if set.contains(&j) {
        return None;
    }
    let pos = set.iter().filter(|&&s| s < j).count();
    let mut out = set.to_vec();
    out.insert(pos, j);
    Some((out, pos % 2 == 0))
}

/// Increasing `r`-tuples from `0..n`.
pub fn sorted_tuples(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// A differential form of degree `degree` with values in jets of fixed order,
/// stored on increasing index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct JetForm {
    pub degree: usize,
    pub comps: BTreeMap<Vec<usize>, JetSection>,
}

impl JetForm {
    pub fn zero(n_base: usize, n_vars: usize, degree: usize, order: usize, trunc: i32) -> Self {
        let comps = sorted_tuples(n_base, degree)
            .into_iter()
            .map(|t| (t, JetSection::zero(n_base, n_vars, order, trunc)))
            .collect();
        JetForm { degree, comps }
    }

    pub fn from_zero_form(xi: JetSection) -> Self {
        let mut comps = BTreeMap::new();
        comps.insert(vec![], xi);
        JetForm { degree: 0, comps }
    }

    pub fn from_one_form(u: Vec<JetSection>) -> Self {
        let comps = u.into_iter().enumerate().map(|(j, s)| (vec![j], s)).collect();
        JetForm { degree: 1, comps }
    }

    pub fn as_one_form(&self) -> Vec<JetSection> {
        assert_eq!(self.degree, 1);
        self.comps.values().cloned().collect()
    }

    fn any(&self) -> &JetSection {
        self.comps.values().next().expect("form on a positive-dimensional base")
    }

    pub fn order(&self) -> usize {
        self.any().order
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|s| s.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        JetForm {
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .map(|(k, v)| (k.clone(), v.add(&o.comps[k])))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        JetForm {
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .map(|(k, v)| (k.clone(), v.sub(&o.comps[k])))
                .collect(),
        }
    }

    pub fn trunc(&self) -> i32 {
        self.comps.values().map(|s| s.trunc()).min().unwrap()
    }

    /// Exterior Spencer operator D(dx^I ⊗ u_I) = Σ_j dx^j ∧ dx^I ⊗ D_j u_I.
    pub fn spencer_d(&self) -> Result<JetForm> {
        if self.comps.is_empty() {
            // degree above the base dimension
            return Ok(JetForm {
                degree: self.degree + 1,
                comps: BTreeMap::new(),
            });
        }
        let s = self.any();
        let n = s.n_base;
        let mut out = JetForm::zero(n, s.n_vars(), self.degree + 1, s.order.saturating_sub(1), s.trunc());
        if s.order == 0 {
            return Err(Error::Order("Spencer operator needs order at least 1".into()));
        }
        for (set, u) in &self.comps {
            for j in 0..n {
                if let Some((target, positive)) = wedge_insert(j, set) {
                    let d = u.spencer_d_dir(j)?;
                    let cur = out.comps.get_mut(&target).unwrap();
                    *cur = if positive { cur.add(&d) } else { cur.sub(&d) };
                }
            }
        }
        Ok(out)
    }
}

/// Tensor product of a scalar form (function coefficients on tuples) with a jet section.
pub fn form_tensor(
    coeffs: &BTreeMap<Vec<usize>, Series>,
    degree: usize,
    xi: &JetSection,
) -> JetForm {
    let n = xi.n_base;
    let mut out = JetForm::zero(n, xi.n_vars(), degree, xi.order, xi.trunc());
    for (set, c) in coeffs {
        out.comps.insert(set.clone(), xi.mul_series(c));
    }
    out
}

/// Constant jet `Σ c_(i,α) p^i_α` with rational entries.
pub fn constant_jet(n_base: usize, n_vars: usize, order: usize, trunc: i32, values: &[(usize, MultiIndex, Q)]) -> JetSection {
    let mut s = JetSection::zero(n_base, n_vars, order, trunc);
    for (i, a, c) in values {
        let cur = s.get(*i, a).clone();
        s.set(*i, a, &cur + &Series::constant(n_vars, trunc, c.clone()));
    }
    s
}

/// The constant jet j^k ∂/∂x_i (raw coordinate p^i_0 = 1).
pub fn coordinate_field_jet(n_base: usize, n_vars: usize, order: usize, trunc: i32, i: usize) -> JetSection {
    constant_jet(n_base, n_vars, order, trunc, &[(i, MultiIndex::zero(n_base), Q::one())])
}

pub fn is_zero_q(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_zero())
}
