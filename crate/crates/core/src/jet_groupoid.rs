//! Invertible sections of the jet groupoid at the formal level.
//!
//! A section σ of order k over a centered chart is stored as its target map
//! f(x) together with the displacement polynomial P_x(h), so that a
//! representative of σ(x) is x + h ↦ f(x) + P_x(h).

use num::Zero;

use crate::bracket_calculus::algebraic_bracket;
use crate::error::{Error, Result};
use crate::exact_series::{invert_series_matrix, multi_index_enum, reversion_system, MultiIndex, Series, Q};
use crate::fiber_poly::{compose_poly, invert_poly_matrix, jacobian_h, mat_vec, reverse, HPoly};
use crate::jet_space::{CheckedSection, JetForm, JetSection};
use crate::lie_equations::{coordinates, EquationSpec, LinearLieEquation};

#[derive(Clone, Debug, PartialEq)]
pub struct GroupoidSection {
    pub n_base: usize,
    pub order: usize,
    pub base_map: Vec<Series>,
    /// Displacement polynomials P^i_x(h) of degree `order`, no constant term.
    pub fiber: Vec<HPoly>,
    pub source_chart: String,
    pub target_chart: String,
}

/// A one-form with values in jets: the value on each coordinate direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpencerOneForm(pub Vec<JetSection>);

impl SpencerOneForm {
    pub fn order(&self) -> usize {
        self.0[0].order
    }

    pub fn add(&self, o: &Self) -> Self {
        SpencerOneForm(self.0.iter().zip(&o.0).map(|(a, b)| a.add(b)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        SpencerOneForm(self.0.iter().zip(&o.0).map(|(a, b)| a.sub(b)).collect())
    }

    pub fn neg(&self) -> Self {
        SpencerOneForm(self.0.iter().map(|a| a.neg()).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|a| a.is_zero())
    }

    pub fn project(&self, l: usize) -> Result<Self> {
        Ok(SpencerOneForm(self.0.iter().map(|a| a.project(l)).collect::<Result<_>>()?))
    }

    pub fn to_form(&self) -> JetForm {
        JetForm::from_one_form(self.0.clone())
    }
}

fn params(nv: usize, n: usize, t: i32) -> Vec<Series> {
    (n..nv).map(|i| Series::var(nv, t, i)).collect()
}

fn with_params(mut args: Vec<Series>, nv: usize, n: usize) -> Vec<Series> {
    let t = args.iter().map(|s| s.trunc()).min().unwrap();
    args.extend(params(nv, n, t));
    args
}

fn factorial_q(a: &MultiIndex) -> Q {
    Q::from_integer(a.factorial())
}

/// Raw jets of a vector of polynomials, components outer.
fn poly_jets(p: &[HPoly], order: usize) -> JetSection {
    let n = p[0].n_h;
    let mut s = JetSection::zero(n, p[0].n_vars(), order, p.iter().map(|x| x.trunc()).min().unwrap());
    for (i, pi) in p.iter().enumerate() {
        for a in multi_index_enum(n, order) {
            s.set(i, &a, pi.raw(&a));
        }
    }
    s
}

/// Taylor polynomial Σ ξ_α h^α/α! of each component of a jet.
fn jet_poly(xi: &JetSection, deg: usize) -> Vec<HPoly> {
    let n = xi.n_base;
    (0..n)
        .map(|i| {
            let mut p = HPoly::zero(n, deg, xi.n_vars(), xi.trunc());
            for a in multi_index_enum(n, xi.order.min(deg)) {
                p.set_raw(&a, xi.get(i, &a).clone());
            }
            p
        })
        .collect()
}

impl GroupoidSection {
    fn checked(self) -> Result<Self> {
        if self.base_map.len() != self.n_base || self.fiber.len() != self.n_base {
            return Err(Error::Dimension("section components do not match the base dimension".into()));
        }
        if self.base_map.iter().any(|s| !s.constant_term().is_zero()) {
            return Err(Error::Recentering);
        }
        if self.order == 0 {
            return Ok(self);
        }
        let lin: Vec<Vec<Q>> = self
            .fiber
            .iter()
            .map(|p| {
                (0..self.n_base)
                    .map(|j| p.get(&MultiIndex::unit(self.n_base, j)).constant_term())
                    .collect()
            })
            .collect();
        if crate::linalg::rank(&lin) < self.n_base {
            return Err(Error::NotInvertible("linear part of the section is singular at the origin".into()));
        }
        Ok(self)
    }

    pub fn n_vars(&self) -> usize {
        self.base_map[0].n_vars()
    }

    pub fn trunc(&self) -> i32 {
        self.base_map
            .iter()
            .map(|s| s.trunc())
            .chain(self.fiber.iter().map(|p| p.trunc()))
            .min()
            .unwrap()
    }

    pub fn identity(n: usize, n_vars: usize, order: usize, trunc: i32) -> Self {
        GroupoidSection {
            n_base: n,
            order,
            base_map: (0..n).map(|i| Series::var(n_vars, trunc, i)).collect(),
            fiber: (0..n).map(|i| HPoly::var(n, order, i, n_vars, trunc)).collect(),
            source_chart: "M".into(),
            target_chart: "M".into(),
        }
    }

    /// j^k f for a map f with f(0) = 0.
    pub fn holonomic(f: &[Series], order: usize) -> Result<Self> {
        let n = f.len();
        let t = f.iter().map(|s| s.trunc()).min().unwrap();
        if order as i32 > t {
            return Err(Error::OrderBudget(format!("jet of order {order} from series known to order {t}")));
        }
        let fiber = f
            .iter()
            .map(|fi| {
                let mut p = HPoly::zero(n, order, fi.n_vars(), t);
                for a in multi_index_enum(n, order).into_iter().skip(1) {
                    p.set_raw(&a, fi.derive_multi(&a));
                }
                p
            })
            .collect();
        GroupoidSection {
            n_base: n,
            order,
            base_map: f.to_vec(),
            fiber,
            source_chart: "M".into(),
            target_chart: "M".into(),
        }
        .checked()
    }

    /// Section from its target map and raw fiber jets s^i_α (|α| ≥ 1 entries used).
    pub fn from_jets(base_map: Vec<Series>, jets: &JetSection) -> Result<Self> {
        let n = jets.n_base;
        let fiber = (0..n)
            .map(|i| {
                let mut p = HPoly::zero(n, jets.order, jets.n_vars(), jets.trunc());
                for a in multi_index_enum(n, jets.order).into_iter().skip(1) {
                    p.set_raw(&a, jets.get(i, &a).clone());
                }
                p
            })
            .collect();
        GroupoidSection {
            n_base: n,
            order: jets.order,
            base_map,
            fiber,
            source_chart: "M".into(),
            target_chart: "M".into(),
        }
        .checked()
    }

    pub fn with_charts(mut self, source: &str, target: &str) -> Self {
        self.source_chart = source.into();
        self.target_chart = target.into();
        self
    }

    /// Raw jets with the target map in the order-zero slot.
    pub fn jets(&self) -> JetSection {
        let mut s = poly_jets(&self.fiber, self.order);
        for (i, f) in self.base_map.iter().enumerate() {
            s.set(i, &MultiIndex::zero(self.n_base), f.clone());
        }
        s
    }

    pub fn fiber_jet(&self, i: usize, alpha: &MultiIndex) -> Series {
        self.fiber[i].raw(alpha)
    }

    pub fn project(&self, l: usize) -> Result<Self> {
        if l > self.order {
            return Err(Error::Order(format!("cannot project a section of order {} to {l}", self.order)));
        }
        Ok(GroupoidSection {
            fiber: self.fiber.iter().map(|p| p.with_deg(l)).collect(),
            order: l,
            ..self.clone()
        })
    }

    pub fn truncate(&self, t: i32) -> Self {
        GroupoidSection {
            base_map: self.base_map.iter().map(|s| s.truncate(t)).collect(),
            fiber: self.fiber.iter().map(|p| p.map(|s| s.truncate(t))).collect(),
            ..self.clone()
        }
    }

    pub fn is_holonomic(&self) -> Result<bool> {
        Ok(*self == GroupoidSection::holonomic(&self.base_map, self.order)?)
    }

    /// Arguments for substituting x ↦ f(x) into coefficient series.
    fn base_args(&self) -> Vec<Series> {
        with_params(self.base_map.clone(), self.n_vars(), self.n_base)
    }

    /// Arguments for substituting x ↦ f⁻¹(x).
    fn inverse_args(&self) -> Result<Vec<Series>> {
        let g = reversion_system(&self.base_map, self.n_base)
            .map_err(|_| Error::NotInvertible("target map has singular linear part".into()))?;
        Ok(with_params(g, self.n_vars(), self.n_base))
    }

    /// self ∘ b: first b, then self.
    pub fn compose(&self, b: &GroupoidSection) -> Result<Self> {
        if b.target_chart != self.source_chart {
            return Err(Error::ChartMismatch(format!(
                "target chart {} of the first factor differs from source chart {}",
                b.target_chart, self.source_chart
            )));
        }
        if self.order != b.order || self.n_base != b.n_base {
            return Err(Error::Order("composition of sections of different orders".into()));
        }
        let args = b.base_args();
        let base_map = self
            .base_map
            .iter()
            .map(|s| s.compose(&args))
            .collect::<Result<Vec<_>>>()?;
        let moved: Vec<HPoly> = self
            .fiber
            .iter()
            .map(|p| p.compose_coeffs(&args))
            .collect::<Result<_>>()?;
        let fiber = moved
            .iter()
            .map(|p| compose_poly(p, &b.fiber))
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupoidSection {
            n_base: self.n_base,
            order: self.order,
            base_map,
            fiber,
            source_chart: b.source_chart.clone(),
            target_chart: self.target_chart.clone(),
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        let args = self.inverse_args()?;
        let q = reverse(&self.fiber)?;
        let fiber = q
            .iter()
            .map(|p| p.compose_coeffs(&args))
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupoidSection {
            n_base: self.n_base,
            order: self.order,
            base_map: args[..self.n_base].to_vec(),
            fiber,
            source_chart: self.target_chart.clone(),
            target_chart: self.source_chart.clone(),
        })
    }

    fn df(&self) -> Vec<Vec<Series>> {
        self.base_map
            .iter()
            .map(|f| (0..self.n_base).map(|j| f.derive(j)).collect())
            .collect()
    }

    /// 𝒟σ for a section of order k+1, a one-form with values in J^k.
    pub fn nonlinear_spencer_d(&self) -> Result<SpencerOneForm> {
        if self.order == 0 {
            return Err(Error::Order("nonlinear Spencer operator needs order at least 1".into()));
        }
        let n = self.n_base;
        let k = self.order - 1;
        let jac: Vec<Vec<HPoly>> = jacobian_h(&self.fiber)
            .into_iter()
            .map(|r| r.into_iter().map(|p| p.with_deg(k)).collect())
            .collect();
        let jinv = invert_poly_matrix(&jac)?;
        let df = self.df();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let rhs: Vec<HPoly> = (0..n)
                .map(|i| {
                    let c = HPoly::constant(n, k, df[i][j].clone());
                    c.add(&self.fiber[i].derive_x(j).with_deg(k))
                })
                .collect();
            let w = mat_vec(&jinv, &rhs);
            let mut s = poly_jets(&w, k);
            let z = MultiIndex::zero(n);
            let cur = s.get(j, &z).clone();
            s.set(j, &z, &cur - &Series::one(cur.n_vars(), cur.trunc()));
            out.push(s);
        }
        Ok(SpencerOneForm(out))
    }

    /// σ_*(v + ξ) for σ of order k+1 acting on a checked section of order k.
    pub fn act(&self, cs: &CheckedSection) -> Result<CheckedSection> {
        let k = cs.order();
        if self.order != k + 1 {
            return Err(Error::Order(format!(
                "a section of order {} acts on jets of order {}, got {k}",
                self.order,
                self.order.saturating_sub(1)
            )));
        }
        let n = self.n_base;
        let nv = self.n_vars();
        let t = self.trunc().min(cs.trunc());
        let p_low: Vec<HPoly> = self.fiber.iter().map(|p| p.with_deg(k)).collect();
        let qinv = if k == 0 {
            (0..n).map(|i| HPoly::var(n, 0, i, nv, t)).collect()
        } else {
            reverse(&p_low)?
        };
        let df = self.df();
        let v = &cs.horizontal;
        let dfv: Vec<Series> = (0..n)
            .map(|i| {
                let mut acc = Series::zero(nv, t);
                for j in 0..n {
                    acc = &acc + &(&df[i][j] * &v[j]);
                }
                acc
            })
            .collect();
        let dp: Vec<Vec<HPoly>> = jacobian_h(&self.fiber)
            .into_iter()
            .map(|r| r.into_iter().map(|p| p.with_deg(k)).collect())
            .collect();
        let xi = jet_poly(&cs.vertical, k);
        let shifted: Vec<HPoly> = (0..n)
            .map(|j| xi[j].sub(&HPoly::constant(n, k, v[j].clone())))
            .collect();
        let transport = mat_vec(&dp, &shifted);
        let y: Vec<HPoly> = (0..n)
            .map(|i| {
                let mut acc = HPoly::constant(n, k, dfv[i].clone()).add(&transport[i]);
                for j in 0..n {
                    if !v[j].is_zero() {
                        acc = acc.add(&self.fiber[i].derive_x(j).with_deg(k).mul_series(&v[j]));
                    }
                }
                acc
            })
            .collect();
        let y_new = y
            .iter()
            .map(|p| compose_poly(p, &qinv))
            .collect::<Result<Vec<_>>>()?;
        let args = self.inverse_args()?;
        let vertical = poly_jets(&y_new, k).compose(&args)?;
        let horizontal = dfv.iter().map(|s| s.compose(&args)).collect::<Result<Vec<_>>>()?;
        Ok(CheckedSection::new(horizontal, vertical))
    }

    pub fn act_vertical(&self, xi: &JetSection) -> Result<JetSection> {
        Ok(self.act(&CheckedSection::vertical(xi.clone()))?.vertical)
    }

    /// σ_* of a jet-valued one-form: (σ_*u)(w) = σ_*(u(f⁻¹_* w)).
    pub fn push_form(&self, u: &SpencerOneForm) -> Result<SpencerOneForm> {
        let n = self.n_base;
        let dfi = invert_series_matrix(&self.df())
            .map_err(|_| Error::NotInvertible("target map has singular linear part".into()))?;
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let mut z = u.0[0].mul_series(&dfi[0][j]);
            for l in 1..n {
                z = z.add(&u.0[l].mul_series(&dfi[l][j]));
            }
            out.push(self.act_vertical(&z)?);
        }
        Ok(SpencerOneForm(out))
    }

    /// σ⁻¹_* of a jet-valued one-form.
    pub fn pull_form(&self, u: &SpencerOneForm) -> Result<SpencerOneForm> {
        self.inverse()?.push_form(u)
    }
}

pub fn jet_compose(a: &GroupoidSection, b: &GroupoidSection) -> Result<GroupoidSection> {
    a.compose(b)
}

pub fn jet_invert(a: &GroupoidSection) -> Result<GroupoidSection> {
    a.inverse()
}

pub fn nonlinear_spencer_d(sigma: &GroupoidSection) -> Result<SpencerOneForm> {
    sigma.nonlinear_spencer_d()
}

pub fn groupoid_action(sigma: &GroupoidSection, cs: &CheckedSection) -> Result<CheckedSection> {
    sigma.act(cs)
}

/// 𝒟₁u = Du − ½[u,u], a two-form with values in jets of one order less.
pub fn d1_curvature(u: &SpencerOneForm) -> Result<JetForm> {
    if u.order() == 0 {
        return Err(Error::Order("curvature operator needs order at least 1".into()));
    }
    let mut out = u.to_form().spencer_d()?;
    let n = u.0.len();
    for a in 0..n {
        for b in a + 1..n {
            let br = algebraic_bracket(&u.0[a], &u.0[b])?;
            let cur = out.comps.get_mut(&vec![a, b]).unwrap();
            *cur = cur.sub(&br);
        }
    }
    Ok(out)
}

/// Section x ↦ x + tξ₀, P = h + tΣ ξ_α h^α/α!, with t appended as the last
/// series variable. Its t-linear part is ξ.
pub fn linear_family(xi: &JetSection) -> Result<GroupoidSection> {
    let n = xi.n_base;
    let nv = xi.n_vars() + 1;
    let t = xi.trunc();
    let map: Vec<usize> = (0..xi.n_vars()).collect();
    let tv = Series::var(nv, t, nv - 1);
    let lift = |s: &Series| &s.embed(nv, &map) * &tv;
    let base_map = (0..n)
        .map(|i| &Series::var(nv, t, i) + &lift(&xi.comps[i][0]))
        .collect();
    let fiber = (0..n)
        .map(|i| {
            let mut p = HPoly::var(n, xi.order, i, nv, t);
            for a in multi_index_enum(n, xi.order).into_iter().skip(1) {
                let cur = p.get(&a);
                let add = lift(xi.get(i, &a)).scale(&factorial_q(&a).recip());
                p.set(&a, &cur + &add);
            }
            p
        })
        .collect();
    Ok(GroupoidSection {
        n_base: n,
        order: xi.order,
        base_map,
        fiber,
        source_chart: "M".into(),
        target_chart: "M".into(),
    })
}

/// F_*(R): ξ' lies in the result iff F⁻¹_* ξ' lies in R.
pub fn pushforward_equation(sigma: &GroupoidSection, r: &LinearLieEquation) -> Result<LinearLieEquation> {
    let k = r.order;
    if sigma.order < k + 1 {
        return Err(Error::Order(format!(
            "pushing an equation of order {k} needs a section of order {}",
            k + 1
        )));
    }
    let s = sigma.project(k + 1)?;
    let sinv = s.inverse()?;
    let n = r.n_base;
    let nv = r.n_vars;
    let t = r.trunc.min(s.trunc());
    let all: Vec<usize> = (0..n).collect();
    let coords = coordinates(n, k, &all);
    let images: Vec<JetSection> = coords
        .iter()
        .map(|c| {
            let e = JetSection::unit(n, k, c.comp, &c.alpha, Series::one(nv, t));
            sinv.act_vertical(&e)
        })
        .collect::<Result<_>>()?;
    let back = sinv.base_args();
    let mut rows: Vec<Vec<Series>> = Vec::new();
    for i in 0..n {
        if r.ambient.contains(&i) {
            continue;
        }
        for a in multi_index_enum(n, k) {
            let row = images
                .iter()
                .map(|img| img.get(i, &a).compose(&back))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
    }
    for rel in &r.rows {
        let row = images
            .iter()
            .map(|img| {
                let mut acc = Series::zero(nv, t);
                for (c, coef) in rel.iter().enumerate() {
                    if coef.is_zero() {
                        continue;
                    }
                    let co = &r.coords[c];
                    acc = &acc + &(coef * img.get(co.comp, &co.alpha));
                }
                acc.compose(&back)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let spec = EquationSpec {
        n_base: n,
        n_vars: nv,
        order: k,
        trunc: t,
        ambient: all,
        fiber_vars: r.fiber_vars.clone(),
        relations: vec![],
    };
    let full = LinearLieEquation::from_dense(spec, rows)?;
    Ok(restrict_ambient(&full, &r.ambient).unwrap_or(full))
}

/// Drops components whose jets are all forced to vanish, if every such
/// coordinate is a pivot of a row with no other entry.
pub fn restrict_ambient(r: &LinearLieEquation, keep: &[usize]) -> Option<LinearLieEquation> {
    let drop: Vec<usize> = (0..r.coords.len())
        .filter(|&c| !keep.contains(&r.coords[c].comp))
        .collect();
    let mut drop_rows = Vec::new();
    for &c in &drop {
        let pos = r.pivots.iter().position(|&p| p == c)?;
        let row = &r.rows[pos];
        if row.iter().enumerate().any(|(j, s)| j != c && !s.is_zero()) {
            return None;
        }
        drop_rows.push(pos);
    }
    let kept_cols: Vec<usize> = (0..r.coords.len()).filter(|c| !drop.contains(c)).collect();
    let rows = r
        .rows
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop_rows.contains(i))
        .map(|(_, row)| kept_cols.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let mut ambient = keep.to_vec();
    ambient.sort();
    let spec = EquationSpec {
        n_base: r.n_base,
        n_vars: r.n_vars,
        order: r.order,
        trunc: r.trunc,
        ambient,
        fiber_vars: r.fiber_vars.clone(),
        relations: vec![],
    };
    LinearLieEquation::from_dense(spec, rows).ok()
}

/// The transversal N = {fiber coordinates = 0} and the expected map φ on it.
#[derive(Clone, Debug)]
pub struct TransversalData {
    pub fiber_vars: Vec<usize>,
    /// φ on the transversal coordinates; entries for fiber coordinates are ignored.
    pub phi: Vec<Series>,
}

#[derive(Clone, Debug)]
pub struct FormalIsoReport {
    pub restricts_to_phi: bool,
    pub pushes_r_to_rp: bool,
    pub spencer_in_r: bool,
    /// First direction j with i(∂_j)𝒟F ∉ R.
    pub witness_direction: Option<usize>,
    pub witness_residuals: Vec<Series>,
}

impl FormalIsoReport {
    pub fn all_pass(&self) -> bool {
        self.restricts_to_phi && self.pushes_r_to_rp && self.spencer_in_r
    }
}

/// Checks the hypotheses of the formal isomorphism criterion for a candidate F.
pub fn verify_formal_isomorphism(
    f: &GroupoidSection,
    r: &LinearLieEquation,
    rp: &LinearLieEquation,
    n_data: &TransversalData,
) -> Result<FormalIsoReport> {
    let n = f.n_base;
    if r.n_base != n || rp.n_base != n || n_data.phi.len() != n {
        return Err(Error::ChartMismatch("dimensions of F, R, R' and N disagree".into()));
    }
    if f.order < r.order + 1 {
        return Err(Error::Order(format!(
            "F must have order at least {}, got {}",
            r.order + 1,
            f.order
        )));
    }
    let transversal: Vec<usize> = (0..n).filter(|i| !n_data.fiber_vars.contains(i)).collect();
    for &i in &transversal {
        if n_data.fiber_vars.iter().any(|&y| f.base_map[i].depends_on(y)) {
            return Err(Error::ChartMismatch(format!(
                "component {i} of the target map depends on fiber coordinates; F does not respect the fibration"
            )));
        }
    }
    let on_n = |s: &Series| s.restrict_zero(&n_data.fiber_vars);
    let restricts_to_phi = (0..n).all(|i| {
        let got = on_n(&f.base_map[i]);
        if transversal.contains(&i) {
            got == on_n(&n_data.phi[i])
        } else {
            got.is_zero()
        }
    });
    let pushed = pushforward_equation(f, r)?;
    let pushes_r_to_rp = pushed.same_as(rp)?;
    let d = f.project(r.order + 1)?.nonlinear_spencer_d()?;
    let mut witness_direction = None;
    let mut witness_residuals = Vec::new();
    for (j, dj) in d.0.iter().enumerate() {
        let res = r.residuals(dj)?;
        if res.iter().any(|s| !s.is_zero()) {
            witness_direction = Some(j);
            witness_residuals = res;
            break;
        }
    }
    Ok(FormalIsoReport {
        restricts_to_phi,
        pushes_r_to_rp,
        spencer_in_r: witness_direction.is_none(),
        witness_direction,
        witness_residuals,
    })
}

/// Coefficient of t¹ of a one-form whose series carry t as their last variable.
pub fn t_linear_part(u: &SpencerOneForm) -> SpencerOneForm {
    SpencerOneForm(
        u.0.iter()
            .map(|s| {
                let tv = s.n_vars() - 1;
                s.map(|c| c.coeff_in_var(tv, 1))
            })
            .collect(),
    )
}
