//! Truncated intransitive Lie algebras on a transversal N = {fiber vars = 0},
//! and the classification of first order equations in the plane with a
//! one-dimensional symbol.

use num::{One, Zero};

use crate::bracket_calculus::first_bracket;
use crate::error::{Error, Result};
use crate::exact_series::{invert_series_matrix, multi_index_enum, q, MultiIndex, Series, Q};
use crate::jet_space::{holonomic_lift, CheckedSection, JetSection};
use crate::lie_equations::{relation, EquationSpec, LinearLieEquation};
use crate::linalg::{rank, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub label: String,
    pub section: CheckedSection,
}

/// One structure-function row: ⟦gens[i], gens[j]⟧ = Σ coeffs[t]·targets[t].
#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub i: usize,
    pub j: usize,
    pub coeffs: Vec<Series>,
}

#[derive(Clone, Debug)]
pub struct TruncatedIntransitiveAlgebra {
    pub transversal_vars: Vec<usize>,
    pub fiber_vars: Vec<usize>,
    pub order: usize,
    pub generators: Vec<Generator>,
    /// Order j−1 generators the brackets are expanded in.
    pub targets: Vec<Generator>,
    pub table: Vec<TableEntry>,
}

impl TruncatedIntransitiveAlgebra {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.label == label)
    }

    /// Coefficients of ⟦a, b⟧ over the targets; antisymmetric in (a, b).
    pub fn bracket(&self, a: usize, b: usize) -> Vec<Series> {
        if a == b {
            let s = &self.generators[a].section;
            return vec![Series::zero(s.vertical.n_vars(), s.trunc()); self.targets.len()];
        }
        let (lo, hi, sign) = if a < b { (a, b, false) } else { (b, a, true) };
        let e = self.table.iter().find(|e| e.i == lo && e.j == hi).expect("table covers all pairs");
        if sign {
            e.coeffs.iter().map(|s| -s).collect()
        } else {
            e.coeffs.clone()
        }
    }

    /// Coefficient of target `t` in ⟦a, b⟧, by labels.
    pub fn coefficient(&self, a: &str, b: &str, t: &str) -> Option<Series> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        let it = self.targets.iter().position(|g| g.label == t)?;
        Some(self.bracket(ia, ib)[it].clone())
    }
}

fn transversal_vars(r: &LinearLieEquation) -> Vec<usize> {
    (0..r.n_base).filter(|i| !r.fiber_vars.contains(i)).collect()
}

fn restrict(s: &JetSection, ys: &[usize]) -> JetSection {
    s.map(|c| c.restrict_zero(ys))
}

/// Sections of R^j along N spanning L_j: prolonging when j ≥ k, projecting
/// and keeping independent ones when j < k.
pub fn restrict_to_transversal(r: &LinearLieEquation, j: usize) -> Result<Vec<JetSection>> {
    if !r.check_intransitive()? {
        return Err(Error::Dimension("equation is not intransitive over its distribution".into()));
    }
    let sections = if j >= r.order {
        r.prolong_times(j - r.order)?.spanning_sections()
    } else {
        let mut kept: Vec<JetSection> = Vec::new();
        let mut vals: Matrix = Vec::new();
        for s in r.spanning_sections() {
            let p = s.project(j)?;
            let mut trial = vals.clone();
            trial.push(point_vector(&p));
            if rank(&trial) > vals.len() {
                vals = trial;
                kept.push(p);
            }
        }
        kept
    };
    Ok(sections.iter().map(|s| restrict(s, &r.fiber_vars)).collect())
}

fn point_vector(s: &JetSection) -> Vec<Q> {
    s.comps.iter().flatten().map(|c| c.constant_term()).collect()
}

/// Horizontal derivations ∂/∂x_i|_N followed by the sections of L_j.
pub fn algebra_generators(r: &LinearLieEquation, j: usize) -> Result<Vec<Generator>> {
    let xs = transversal_vars(r);
    let mut gens = Vec::new();
    let n = r.n_base;
    for (c, &x) in xs.iter().enumerate() {
        let h = (0..n)
            .map(|i| if i == x { Series::one(r.n_vars, r.trunc) } else { Series::zero(r.n_vars, r.trunc) })
            .collect();
        let label = if xs.len() == 1 { "Y-1".to_string() } else { format!("Y-1.{c}") };
        gens.push(Generator {
            label,
            section: CheckedSection::new(h, JetSection::zero(n, r.n_vars, j, r.trunc)),
        });
    }
    for (c, s) in restrict_to_transversal(r, j)?.into_iter().enumerate() {
        gens.push(Generator {
            label: format!("Y{c}"),
            section: CheckedSection::vertical(s),
        });
    }
    Ok(gens)
}

struct Solver {
    rows: Vec<(usize, MultiIndex)>,
    inverse: Vec<Vec<Series>>,
}

impl Solver {
    fn new(targets: &[JetSection], ys: &[usize]) -> Result<Self> {
        let Some(first) = targets.first() else {
            return Ok(Solver { rows: vec![], inverse: vec![] });
        };
        let mut rows = Vec::new();
        let mut vals: Matrix = Vec::new();
        for &i in ys {
            for a in multi_index_enum(first.n_base, first.order) {
                let v: Vec<Q> = targets.iter().map(|t| t.get(i, &a).constant_term()).collect();
                let mut trial = vals.clone();
                trial.push(v);
                if rank(&trial) > vals.len() {
                    vals = trial;
                    rows.push((i, a));
                }
            }
        }
        if rows.len() < targets.len() {
            return Err(Error::NonRegular("generators are dependent at the base point".into()));
        }
        let m: Vec<Vec<Series>> = rows
            .iter()
            .map(|(i, a)| targets.iter().map(|t| t.get(*i, a).clone()).collect())
            .collect();
        Ok(Solver {
            inverse: invert_series_matrix(&m)?,
            rows,
        })
    }

    fn solve(&self, rhs: &JetSection) -> Vec<Series> {
        let b: Vec<Series> = self.rows.iter().map(|(i, a)| rhs.get(*i, a).clone()).collect();
        self.inverse
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&b)
                    .fold(Series::zero(rhs.n_vars(), rhs.trunc()), |acc, (m, v)| &acc + &(m * v))
            })
            .collect()
    }
}

/// Expands every pairwise first bracket of the order-j generators in the
/// order-(j−1) generators.
pub fn bracket_table(r: &LinearLieEquation, j: usize) -> Result<TruncatedIntransitiveAlgebra> {
    if j == 0 {
        return Err(Error::Order("brackets need generators of order at least 1".into()));
    }
    let gens = algebra_generators(r, j)?;
    let xs = transversal_vars(r);
    let ys = r.fiber_vars.clone();
    let nh = xs.len();
    let mut targets: Vec<Generator> = gens[..nh]
        .iter()
        .map(|g| Ok(Generator { label: g.label.clone(), section: g.section.project(j - 1)? }))
        .collect::<Result<_>>()?;
    let mut vals: Matrix = Vec::new();
    for g in &gens[nh..] {
        let p = g.section.project(j - 1)?;
        let mut trial = vals.clone();
        trial.push(point_vector(&p.vertical));
        if rank(&trial) > vals.len() {
            vals = trial;
            targets.push(Generator { label: g.label.clone(), section: p });
        }
    }
    let vert: Vec<JetSection> = targets[nh..].iter().map(|g| g.section.vertical.clone()).collect();
    let solver = Solver::new(&vert, &ys)?;

    let mut table = Vec::new();
    for a in 0..gens.len() {
        for b in a + 1..gens.len() {
            let br = first_bracket(&gens[a].section, &gens[b].section)?;
            let mut coeffs: Vec<Series> = xs.iter().map(|&x| br.horizontal[x].clone()).collect();
            coeffs.extend(solver.solve(&br.vertical));
            let mut rebuilt = targets[0].section.scale(&Q::zero());
            for (c, t) in coeffs.iter().zip(&targets) {
                rebuilt = rebuilt.add(&t.section.mul_series(c));
            }
            let resid = br.sub(&rebuilt);
            if !resid.is_zero() {
                let wit = resid
                    .vertical
                    .comps
                    .iter()
                    .flatten()
                    .chain(resid.horizontal.iter())
                    .find(|s| !s.is_zero())
                    .map(|s| s.to_string())
                    .unwrap_or_default();
                return Err(Error::Closure(format!(
                    "[[{}, {}]] leaves the span of the order {} generators; residual {wit}",
                    gens[a].label,
                    gens[b].label,
                    j - 1
                )));
            }
            table.push(TableEntry { i: a, j: b, coeffs });
        }
    }
    Ok(TruncatedIntransitiveAlgebra {
        transversal_vars: xs,
        fiber_vars: ys,
        order: j,
        generators: gens,
        targets,
        table,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaneCase {
    Case1,
    Case2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneClassification {
    pub case: PlaneCase,
    /// Valuation of b/a in x; `None` when b vanishes to the known order.
    pub valuation: Option<u32>,
    /// Normal form coefficient β(x); zero in Case 1.
    pub beta: Series,
    /// Order to which the verdict is known.
    pub precision: i32,
}

/// Classifies the symbol line spanned by A f^{1,0} + B f^{0,1} over the
/// (x, y)-plane, with V = ∂/∂y and N = {y = 0}.
pub fn classify_plane_rank1(a: &Series, b: &Series) -> Result<PlaneClassification> {
    if a.n_vars() != 2 || b.n_vars() != 2 {
        return Err(Error::Dimension("plane classification needs series in (x, y)".into()));
    }
    if a.constant_term().is_zero() && b.constant_term().is_zero() {
        return Err(Error::NotConstantRank("A(0,0) = B(0,0) = 0".into()));
    }
    let a0 = a.restrict_zero(&[1]);
    let b0 = b.restrict_zero(&[1]);
    let t = a0.trunc().min(b0.trunc());
    if !b0.constant_term().is_zero() {
        return Ok(PlaneClassification {
            case: PlaneCase::Case1,
            valuation: Some(0),
            beta: Series::zero(2, t),
            precision: t,
        });
    }
    let ratio = &b0 * &a0.reciprocal()?;
    let valuation = ratio.valuation();
    let beta = match valuation {
        Some(v) => Series::monomial(2, t, &MultiIndex(vec![v, 0]), Q::one()),
        None => Series::zero(2, t),
    };
    Ok(PlaneClassification {
        case: PlaneCase::Case2,
        valuation,
        beta,
        precision: t,
    })
}

/// (A, B) for a first order equation on ∂/∂y in the plane with one relation
/// c₁₀p₁₀ + c₀₁p₀₁ + c₀₀p₀₀ = 0: the symbol is spanned by −c₀₁f^{1,0} + c₁₀f^{0,1}.
pub fn plane_symbol_generator(r: &LinearLieEquation) -> Result<(Series, Series)> {
    if r.n_base != 2 || r.order != 1 || r.fiber_vars != vec![1] || r.rows.len() != 1 {
        return Err(Error::Dimension(
            "expected one first order relation on ∂/∂y over the plane".into(),
        ));
    }
    let row = &r.rows[0];
    let at = |a: [u32; 2]| {
        r.coords
            .iter()
            .position(|c| c.comp == 1 && c.alpha.0 == a)
            .map(|p| row[p].clone())
            .unwrap_or_else(|| Series::zero(r.n_vars, r.trunc))
    };
    Ok((-&at([0, 1]), at([1, 0])))
}

/// The normal form R' of a classification: p₁₀ = 0 in Case 1, p₀₁ = β p₁₀ in Case 2.
pub fn normal_form_equation(c: &PlaneClassification, trunc: i32) -> Result<LinearLieEquation> {
    let p10 = MultiIndex(vec![1, 0]);
    let p01 = MultiIndex(vec![0, 1]);
    let rel = match c.case {
        PlaneCase::Case1 => relation(vec![(1, p10, Series::one(2, trunc))]),
        PlaneCase::Case2 => relation(vec![
            (1, p01, Series::one(2, trunc)),
            (1, p10, -&c.beta.truncate(trunc)),
        ]),
    };
    LinearLieEquation::build(EquationSpec {
        n_base: 2,
        n_vars: 2,
        order: 1,
        trunc,
        ambient: vec![1],
        fiber_vars: vec![1],
        relations: vec![rel],
    })
}

/// θ(x e^y), θ(x^{k-1}/((k-1)y x^{k-1} - 1)), θ(x) or θ(y), following the
/// normal form; `theta` is a series in one variable.
pub fn solution_family(c: &PlaneClassification, theta: &Series) -> Result<Series> {
    let t = c.precision.min(theta.trunc());
    let x = Series::var(2, t, 0);
    let y = Series::var(2, t, 1);
    let arg = match (&c.case, c.valuation) {
        (PlaneCase::Case1, _) => y,
        (PlaneCase::Case2, None) => x,
        (PlaneCase::Case2, Some(1)) => {
            let mut s = Series::zero(2, t);
            let mut fact = Q::one();
            for m in 0..t.max(0) as u32 {
                if m > 0 {
                    fact *= q(m as i64);
                }
                s.add_term(&MultiIndex(vec![1, m]), fact.recip());
            }
            s
        }
        (PlaneCase::Case2, Some(k)) if k >= 2 => {
            let xk = x.pow(k - 1);
            let den = &(&xk * &y).scale(&q(k as i64 - 1)) - &Series::one(2, t);
            &xk * &den.reciprocal()?
        }
        (PlaneCase::Case2, Some(_)) => {
            return Err(Error::Dimension("Case 2 needs a positive valuation".into()));
        }
    };
    theta.compose(&[arg])
}

/// Whether j^k Θ satisfies every relation of R.
pub fn check_solution_family(r: &LinearLieEquation, theta: &[Series]) -> Result<bool> {
    if theta.len() != r.n_base {
        return Err(Error::Dimension("field has the wrong number of components".into()));
    }
    r.contains(&holonomic_lift(theta, r.order)?)
}
