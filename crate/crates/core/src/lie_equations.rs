//! Linear Lie equations as relation systems on jet coordinates.

use std::fmt;

use num::{One, Zero};

use crate::bracket_calculus::algebraic_bracket;
use crate::error::{Error, Result};
use crate::exact_series::{multi_index_enum, MultiIndex, Series, Q};
use crate::jet_space::JetSection;
use crate::linalg::{kernel, rank, Matrix};
use crate::spencer_symbols::{symbol_vector, two_acyclicity, AcyclicityReport, SymbolSpace};

/// Jet coordinate p^comp_alpha.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coord {
    pub comp: usize,
    pub alpha: MultiIndex,
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.alpha.0.iter().map(|x| x.to_string()).collect();
        write!(f, "p{}[{}]", self.comp, a.join(","))
    }
}

/// Jet coordinates of order at most `k` over `comps`, indices outer.
pub fn coordinates(n_base: usize, k: usize, comps: &[usize]) -> Vec<Coord> {
    multi_index_enum(n_base, k)
        .into_iter()
        .flat_map(|a| {
            comps.iter().map(move |&c| Coord {
                comp: c,
                alpha: a.clone(),
            })
        })
        .collect()
}

/// Linear relation Σ c·p with series coefficients, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub terms: Vec<(Coord, Series)>,
}

/// A linear PDE system on jets of order `order`.
///
/// Relations are kept in solved form: each row has coefficient 1 on its pivot
/// coordinate and 0 on every other pivot.
#[derive(Clone, Debug)]
pub struct LinearLieEquation {
    pub n_base: usize,
    pub n_vars: usize,
    pub order: usize,
    pub trunc: i32,
    /// Components whose jets are coordinates of the ambient space.
    pub ambient: Vec<usize>,
    /// The distribution V, as coordinate directions.
    pub fiber_vars: Vec<usize>,
    pub coords: Vec<Coord>,
    pub rows: Vec<Vec<Series>>,
    pub pivots: Vec<usize>,
}

/// Description of an equation before normalization.
#[derive(Clone, Debug)]
pub struct EquationSpec {
    pub n_base: usize,
    pub n_vars: usize,
    pub order: usize,
    pub trunc: i32,
    pub ambient: Vec<usize>,
    pub fiber_vars: Vec<usize>,
    pub relations: Vec<Relation>,
}

/// Row reduction over the series ring with unit pivots, highest-order
/// coordinates preferred. Leftover nonzero rows mean the rank at the origin is
/// below the generic rank.
pub fn reduce_rows(rows: Vec<Vec<Series>>, ncols: usize) -> Result<(Vec<Vec<Series>>, Vec<usize>)> {
    let mut rows = rows;
    let mut used = vec![false; rows.len()];
    let mut order: Vec<(usize, usize)> = Vec::new();
    for col in (0..ncols).rev() {
        let Some(r) = (0..rows.len()).find(|&r| !used[r] && rows[r][col].is_unit()) else {
            continue;
        };
        let inv = rows[r][col].reciprocal()?;
        rows[r] = rows[r].iter().map(|s| s * &inv).collect();
        let piv = rows[r].clone();
        for (s, row) in rows.iter_mut().enumerate() {
            if s == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (c, e) in row.iter_mut().enumerate() {
                if !piv[c].is_zero() {
                    *e = &*e - &(&f * &piv[c]);
                }
            }
        }
        used[r] = true;
        order.push((r, col));
    }
    for (r, row) in rows.iter().enumerate() {
        if !used[r] && row.iter().any(|s| !s.is_zero()) {
            return Err(Error::NonRegular(
                "a relation has no unit coefficient after reduction; the rank drops at the origin".into(),
            ));
        }
    }
    let out_rows = order.iter().map(|&(r, _)| rows[r].clone()).collect();
    let pivots = order.iter().map(|&(_, c)| c).collect();
    Ok((out_rows, pivots))
}

fn values_at_zero(rows: &[Vec<Series>]) -> Matrix {
    rows.iter()
        .map(|r| r.iter().map(|s| s.constant_term()).collect())
        .collect()
}

impl LinearLieEquation {
    pub fn build(spec: EquationSpec) -> Result<Self> {
        let mut ambient = spec.ambient.clone();
        ambient.sort();
        ambient.dedup();
        let coords = coordinates(spec.n_base, spec.order, &ambient);
        let mut rows = Vec::new();
        for rel in &spec.relations {
            let mut row = vec![Series::zero(spec.n_vars, spec.trunc); coords.len()];
            let mut nonzero = false;
            for (c, s) in &rel.terms {
                if c.alpha.order() as usize > spec.order {
                    return Err(Error::Order(format!(
                        "coordinate {c} exceeds the equation order {}",
                        spec.order
                    )));
                }
                let Some(pos) = coords.iter().position(|x| x == c) else {
                    return Err(Error::Dimension(format!(
                        "coordinate {c} is not in the ambient components"
                    )));
                };
                row[pos] = &row[pos] + s;
                nonzero |= !s.is_zero();
            }
            if !nonzero || row.iter().all(|s| s.is_zero()) {
                return Err(Error::EmptyRelation);
            }
            rows.push(row);
        }
        Self::from_rows(spec, coords, rows)
    }

    fn from_rows(spec: EquationSpec, coords: Vec<Coord>, rows: Vec<Vec<Series>>) -> Result<Self> {
        let (rows, pivots) = reduce_rows(rows, coords.len())?;
        let mut ambient = spec.ambient;
        ambient.sort();
        ambient.dedup();
        Ok(LinearLieEquation {
            n_base: spec.n_base,
            n_vars: spec.n_vars,
            order: spec.order,
            trunc: spec.trunc,
            ambient,
            fiber_vars: spec.fiber_vars,
            coords,
            rows,
            pivots,
        })
    }

    /// The equation with no relations: all of J^k over the ambient components.
    pub fn full(n_base: usize, n_vars: usize, order: usize, trunc: i32, ambient: Vec<usize>, fiber_vars: Vec<usize>) -> Self {
        Self::build(EquationSpec {
            n_base,
            n_vars,
            order,
            trunc,
            ambient,
            fiber_vars,
            relations: vec![],
        })
        .expect("empty relation system")
    }

    pub fn spec_like(&self, order: usize) -> EquationSpec {
        EquationSpec {
            n_base: self.n_base,
            n_vars: self.n_vars,
            order,
            trunc: self.trunc,
            ambient: self.ambient.clone(),
            fiber_vars: self.fiber_vars.clone(),
            relations: vec![],
        }
    }

    /// Rebuilds from dense rows over [`Self::coords`]-style coordinates of the given order.
    pub fn from_dense(spec: EquationSpec, rows: Vec<Vec<Series>>) -> Result<Self> {
        let coords = coordinates(spec.n_base, spec.order, &spec.ambient);
        let rows: Vec<Vec<Series>> = rows.into_iter().filter(|r| r.iter().any(|s| !s.is_zero())).collect();
        Self::from_rows(spec, coords, rows)
    }

    pub fn relations(&self) -> Vec<Relation> {
        self.rows
            .iter()
            .map(|r| Relation {
                terms: r
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| !s.is_zero())
                    .map(|(c, s)| (self.coords[c].clone(), s.clone()))
                    .collect(),
            })
            .collect()
    }

    pub fn coord_index(&self, c: &Coord) -> Option<usize> {
        self.coords.iter().position(|x| x == c)
    }

    /// dim R(0).
    pub fn fiber_dim(&self) -> usize {
        self.coords.len() - rank(&values_at_zero(&self.rows))
    }

    /// Basis of R(0) in [`Self::coords`] coordinates.
    pub fn fiber_at_zero(&self) -> Vec<Vec<Q>> {
        if self.rows.is_empty() {
            return (0..self.coords.len())
                .map(|i| (0..self.coords.len()).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
                .collect();
        }
        kernel(&values_at_zero(&self.rows), self.coords.len())
    }

    /// R^{k+1}: the relations together with all their total derivatives.
    pub fn prolong(&self) -> Result<Self> {
        if self.rows.iter().flatten().any(|s| s.trunc() < 1) {
            return Err(Error::OrderBudget(
                "relation coefficients are not known to order 1".into(),
            ));
        }
        let k1 = self.order + 1;
        let coords = coordinates(self.n_base, k1, &self.ambient);
        let pos = |c: &Coord| coords.iter().position(|x| x == c).unwrap();
        let mut rows = Vec::new();
        for row in &self.rows {
            let mut base = vec![Series::zero(self.n_vars, self.trunc); coords.len()];
            for (c, s) in row.iter().enumerate() {
                base[pos(&self.coords[c])] = s.clone();
            }
            rows.push(base);
            for j in 0..self.n_base {
                let mut d = vec![Series::zero(self.n_vars, self.trunc); coords.len()];
                for (c, s) in row.iter().enumerate() {
                    if s.is_zero() {
                        continue;
                    }
                    let co = &self.coords[c];
                    let p = pos(co);
                    d[p] = &d[p] + &s.derive(j);
                    let up = Coord {
                        comp: co.comp,
                        alpha: co.alpha.plus_unit(j),
                    };
                    let pu = pos(&up);
                    d[pu] = &d[pu] + s;
                }
                rows.push(d);
            }
        }
        let rows = rows.into_iter().filter(|r| r.iter().any(|s| !s.is_zero())).collect();
        Self::from_rows(self.spec_like(k1), coords, rows)
    }

    pub fn prolong_times(&self, times: usize) -> Result<Self> {
        let mut r = self.clone();
        for _ in 0..times {
            r = r.prolong()?;
        }
        Ok(r)
    }

    fn top_columns(&self) -> Vec<usize> {
        (0..self.coords.len())
            .filter(|&c| self.coords[c].alpha.order() as usize == self.order)
            .collect()
    }

    /// g^k at the origin, in the f basis of S^kT*⊗T.
    pub fn symbol(&self) -> Result<SymbolSpace> {
        let top = self.top_columns();
        let sub: Vec<Vec<Series>> = self
            .rows
            .iter()
            .map(|r| top.iter().map(|&c| r[c].clone()).collect())
            .filter(|r: &Vec<Series>| r.iter().any(|s| !s.is_zero()))
            .collect();
        reduce_rows(sub.clone(), top.len()).map_err(|_| {
            Error::NonRegular("the symbol changes rank at the origin".into())
        })?;
        let m: Matrix = values_at_zero(&sub);
        let ker = if m.is_empty() {
            (0..top.len())
                .map(|i| (0..top.len()).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
                .collect()
        } else {
            kernel(&m, top.len())
        };
        let vectors = ker
            .iter()
            .map(|v| {
                let entries: Vec<(usize, MultiIndex, Q)> = top
                    .iter()
                    .zip(v)
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(&c, x)| (self.coords[c].comp, self.coords[c].alpha.clone(), x.clone()))
                    .collect();
                symbol_vector(self.n_base, self.order, &entries)
            })
            .collect::<Vec<_>>();
        Ok(SymbolSpace::new(self.n_base, self.order, vectors))
    }

    /// Generators of the module of sections: one per free coordinate.
    pub fn spanning_sections(&self) -> Vec<JetSection> {
        let free: Vec<usize> = (0..self.coords.len())
            .filter(|c| !self.pivots.contains(c))
            .collect();
        free.iter()
            .map(|&f| {
                let mut s = JetSection::zero(self.n_base, self.n_vars, self.order, self.trunc);
                let c = &self.coords[f];
                s.set(c.comp, &c.alpha, Series::one(self.n_vars, self.trunc));
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    if !row[f].is_zero() {
                        let pc = &self.coords[p];
                        s.set(pc.comp, &pc.alpha, -&row[f]);
                    }
                }
                s
            })
            .collect()
    }

    /// Free coordinates in the order used by [`Self::spanning_sections`].
    pub fn free_coords(&self) -> Vec<Coord> {
        (0..self.coords.len())
            .filter(|c| !self.pivots.contains(c))
            .map(|c| self.coords[c].clone())
            .collect()
    }

    /// Values of each relation on a section; all zero iff the section lies in R.
    pub fn residuals(&self, xi: &JetSection) -> Result<Vec<Series>> {
        if xi.order < self.order {
            return Err(Error::Order("section order below equation order".into()));
        }
        let mut out = Vec::new();
        for i in 0..self.n_base {
            if !self.ambient.contains(&i) {
                for a in multi_index_enum(self.n_base, self.order) {
                    let s = xi.get(i, &a);
                    if !s.is_zero() {
                        out.push(s.clone());
                    }
                }
            }
        }
        for row in &self.rows {
            let mut acc = Series::zero(xi.n_vars(), xi.trunc());
            for (c, s) in row.iter().enumerate() {
                if s.is_zero() {
                    continue;
                }
                let co = &self.coords[c];
                acc = &acc + &(s * xi.get(co.comp, &co.alpha));
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn contains(&self, xi: &JetSection) -> Result<bool> {
        Ok(self.residuals(xi)?.iter().all(|s| s.is_zero()))
    }

    /// Whether both systems define the same module of sections.
    pub fn same_as(&self, other: &LinearLieEquation) -> Result<bool> {
        if self.order != other.order {
            return Ok(false);
        }
        for s in other.spanning_sections() {
            if !self.contains(&s)? {
                return Ok(false);
            }
        }
        for s in self.spanning_sections() {
            if !other.contains(&s)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Def. (ii) of a Lie equation: [[R^{k+1}, R^{k+1}]] ⊂ R^k.
    pub fn check_lie_closure(&self) -> Result<ClosureReport> {
        let next = self.prolong()?;
        let gens = next.spanning_sections();
        for a in 0..gens.len() {
            for b in a + 1..gens.len() {
                let br = algebraic_bracket(&gens[a], &gens[b])?;
                let res = self.residuals(&br)?;
                if res.iter().any(|s| !s.is_zero()) {
                    return Ok(ClosureReport {
                        closed: false,
                        witness: Some(ClosureWitness {
                            first: gens[a].clone(),
                            second: gens[b].clone(),
                            bracket: br,
                            residuals: res,
                        }),
                    });
                }
            }
        }
        Ok(ClosureReport {
            closed: true,
            witness: None,
        })
    }

    /// R ⊂ J^kV and π_0(R) = J^0V.
    pub fn check_intransitive(&self) -> Result<bool> {
        for s in self.spanning_sections() {
            for i in 0..self.n_base {
                if self.fiber_vars.contains(&i) {
                    continue;
                }
                if s.comps[i].iter().any(|c| !c.is_zero()) {
                    return Ok(false);
                }
            }
        }
        let fiber = self.fiber_at_zero();
        let zero = MultiIndex::zero(self.n_base);
        let rows: Matrix = fiber
            .iter()
            .map(|v| {
                self.fiber_vars
                    .iter()
                    .map(|&i| {
                        self.coords
                            .iter()
                            .position(|c| c.comp == i && c.alpha == zero)
                            .map(|p| v[p].clone())
                            .unwrap_or_else(Q::zero)
                    })
                    .collect()
            })
            .collect();
        Ok(!rows.is_empty() && rank(&rows) == self.fiber_vars.len())
    }

    /// Decides formal integrability by surjectivity of the projections plus
    /// 2-acyclicity of the symbol, following prolongations up to `depth`.
    pub fn check_formal_integrability(&self, depth: usize) -> Result<IntegrabilityReport> {
        let g = self.symbol()?;
        let acyc = two_acyclicity(&g, depth)?;
        let mut steps = Vec::new();
        let mut cur = self.clone();
        let mut all_onto = true;
        for _ in 0..depth.max(1) {
            let next = cur.prolong()?;
            let onto = projection_onto(&next, &cur);
            steps.push(StepReport {
                order: next.order,
                fiber_dim: next.fiber_dim(),
                symbol_dim: next.symbol()?.dim(),
                surjective: onto,
            });
            if !onto {
                all_onto = false;
                break;
            }
            cur = next;
        }
        let verdict = if !all_onto {
            Verdict::NotFormallyIntegrable
        } else if acyc.two_acyclic {
            Verdict::FormallyIntegrable
        } else {
            Verdict::Inconclusive(depth)
        };
        Ok(IntegrabilityReport {
            order: self.order,
            fiber_dim: self.fiber_dim(),
            symbol_dim: g.dim(),
            steps,
            acyclicity: acyc,
            verdict,
        })
    }

    pub fn format_relation(&self, row: usize, names: &[String], comp_names: &[String]) -> String {
        let mut parts = Vec::new();
        for (c, s) in self.rows[row].iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            let co = &self.coords[c];
            let a: Vec<String> = co.alpha.0.iter().map(|x| x.to_string()).collect();
            let cname = comp_names.get(co.comp).cloned().unwrap_or_else(|| co.comp.to_string());
            let coord = format!("p{}[{}]", cname, a.join(","));
            let coef = s.format_with(names);
            if coef == "1" {
                parts.push(coord);
            } else if coef.contains(' ') {
                parts.push(format!("({coef})*{coord}"));
            } else {
                parts.push(format!("{coef}*{coord}"));
            }
        }
        format!("{} = 0", parts.join(" + "))
    }
}

/// π_k(R^{k+1}(0)) = R^k(0)?
pub fn projection_onto(next: &LinearLieEquation, cur: &LinearLieEquation) -> bool {
    let fiber = next.fiber_at_zero();
    let idx: Vec<usize> = cur
        .coords
        .iter()
        .map(|c| next.coord_index(c).unwrap())
        .collect();
    let proj: Matrix = fiber
        .iter()
        .map(|v| idx.iter().map(|&i| v[i].clone()).collect())
        .collect();
    let r = if proj.is_empty() { 0 } else { rank(&proj) };
    r == cur.fiber_dim()
}

pub fn equation_build(spec: EquationSpec) -> Result<LinearLieEquation> {
    LinearLieEquation::build(spec)
}

pub fn prolong_equation(r: &LinearLieEquation) -> Result<LinearLieEquation> {
    r.prolong()
}

pub fn equation_symbol(r: &LinearLieEquation) -> Result<SymbolSpace> {
    r.symbol()
}

#[derive(Clone, Debug)]
pub struct ClosureWitness {
    pub first: JetSection,
    pub second: JetSection,
    pub bracket: JetSection,
    pub residuals: Vec<Series>,
}

#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub closed: bool,
    pub witness: Option<ClosureWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    FormallyIntegrable,
    NotFormallyIntegrable,
    Inconclusive(usize),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::FormallyIntegrable => write!(f, "formally_integrable"),
            Verdict::NotFormallyIntegrable => write!(f, "not_formally_integrable"),
            Verdict::Inconclusive(d) => write!(f, "inconclusive(depth {d})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepReport {
    pub order: usize,
    pub fiber_dim: usize,
    pub symbol_dim: usize,
    pub surjective: bool,
}

#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    pub order: usize,
    pub fiber_dim: usize,
    pub symbol_dim: usize,
    pub steps: Vec<StepReport>,
    pub acyclicity: AcyclicityReport,
    pub verdict: Verdict,
}

impl IntegrabilityReport {
    /// Symbol dimensions g^k, g^{k+1}, … along the computed prolongations.
    pub fn symbol_dims(&self) -> Vec<usize> {
        std::iter::once(self.symbol_dim)
            .chain(self.steps.iter().map(|s| s.symbol_dim))
            .collect()
    }
}

/// Builds a relation from `(comp, α, coefficient)` triples.
pub fn relation(terms: Vec<(usize, MultiIndex, Series)>) -> Relation {
    Relation {
        terms: terms
            .into_iter()
            .map(|(c, a, s)| (Coord { comp: c, alpha: a }, s))
            .collect(),
    }
}
