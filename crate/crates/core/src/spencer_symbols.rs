//! Symbol spaces g^k ⊂ S^kT*⊗T, the δ map and δ-cohomology.
//!
//! S^kT*⊗T is coordinatized by the basis f^α_l (|α| = k), components outer,
//! multi-indices inner in graded order. A jet with the single raw derivative
//! p^l_α = 1 corresponds to f^α_l.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact_series::{monomial_count, multi_index_enum, MultiIndex, Q};
use crate::jet_space::{sorted_tuples, wedge_insert};
use crate::linalg::{in_span, kernel, rank, span_basis, Matrix};

/// Basis element f^α_l.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolIndex {
    pub comp: usize,
    pub alpha: MultiIndex,
}

/// Homogeneous multi-indices of order exactly `k`.
pub fn homogeneous(n: usize, k: usize) -> Vec<MultiIndex> {
    let all = multi_index_enum(n, k);
    let start = if k == 0 { 0 } else { monomial_count(n, k as i64 - 1) };
    all[start..].to_vec()
}

/// Ordered basis {f^α_l : |α| = k, l = 0..n}.
pub fn symbol_basis(n: usize, k: usize) -> Vec<SymbolIndex> {
    let h = homogeneous(n, k);
    (0..n)
        .flat_map(|l| {
            h.iter().map(move |a| SymbolIndex {
                comp: l,
                alpha: a.clone(),
            })
        })
        .collect()
}

/// Basis of S^kT* ⊗ span(∂_l) for a single component.
pub fn symbol_basis_component(n: usize, k: usize, l: usize) -> Vec<SymbolIndex> {
    symbol_basis(n, k).into_iter().filter(|s| s.comp == l).collect()
}

pub fn symbol_dim(n: usize, k: i64) -> usize {
    if k < 0 {
        return 0;
    }
    n * homogeneous(n, k as usize).len()
}

fn position(n: usize, k: usize, comp: usize, alpha: &MultiIndex) -> usize {
    let h = homogeneous(n, k);
    comp * h.len() + h.iter().position(|a| a == alpha).unwrap()
}

/// Basis of ∧^rT* ⊗ S^kT* ⊗ T as (form tuple, symbol index), tuples outer.
pub fn form_symbol_basis(n: usize, r: usize, k: i64) -> Vec<(Vec<usize>, SymbolIndex)> {
    if k < 0 || r > n {
        return vec![];
    }
    let sb = symbol_basis(n, k as usize);
    sorted_tuples(n, r)
        .into_iter()
        .flat_map(|t| sb.iter().map(move |s| (t.clone(), s.clone())))
        .collect()
}

fn form_symbol_dim(n: usize, r: usize, k: i64) -> usize {
    if k < 0 || r > n {
        return 0;
    }
    sorted_tuples(n, r).len() * symbol_dim(n, k)
}

fn form_position(n: usize, k: usize, tuple: &[usize], comp: usize, alpha: &MultiIndex, r: usize) -> usize {
    let tuples = sorted_tuples(n, r);
    let ti = tuples.iter().position(|t| t == tuple).unwrap();
    ti * symbol_dim(n, k as i64) + position(n, k, comp, alpha)
}

/// Matrix of δ: ∧^r⊗S^k⊗T → ∧^{r+1}⊗S^{k−1}⊗T,
/// δ(e^I⊗f^α_l) = −Σ_i e^i∧e^I ⊗ f^{α−e_i}_l.
pub fn delta_matrix(n: usize, r: usize, k: usize) -> Matrix {
    let src = form_symbol_basis(n, r, k as i64);
    let rows = form_symbol_dim(n, r + 1, k as i64 - 1);
    let mut m = vec![vec![Q::zero(); src.len()]; rows];
    if k == 0 {
        return m;
    }
    for (c, (tuple, s)) in src.iter().enumerate() {
        for i in 0..n {
            let Some(lower) = s.alpha.minus_unit(i) else {
                continue;
            };
            let Some((t2, positive)) = wedge_insert(i, tuple) else {
                continue;
            };
            let row = form_position(n, k - 1, &t2, s.comp, &lower, r + 1);
            if positive {
                m[row][c] -= Q::one();
            } else {
                m[row][c] += Q::one();
            }
        }
    }
    m
}

/// δ applied to a coordinate vector of ∧^r⊗S^k⊗T.
pub fn delta_map(n: usize, r: usize, k: usize, v: &[Q]) -> Vec<Q> {
    let m = delta_matrix(n, r, k);
    crate::linalg::mat_vec(&m, v)
}

/// Pointwise subspace of S^kT*⊗T given by a basis in the f coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSpace {
    pub n_base: usize,
    pub order: usize,
    pub basis: Vec<Vec<Q>>,
}

impl SymbolSpace {
    pub fn new(n_base: usize, order: usize, vectors: Vec<Vec<Q>>) -> Self {
        let amb = symbol_dim(n_base, order as i64);
        for v in &vectors {
            assert_eq!(v.len(), amb, "symbol vector length");
        }
        SymbolSpace {
            n_base,
            order,
            basis: span_basis(&vectors),
        }
    }

    pub fn full(n_base: usize, order: usize) -> Self {
        let d = symbol_dim(n_base, order as i64);
        let vectors = (0..d)
            .map(|i| (0..d).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
            .collect();
        SymbolSpace::new(n_base, order, vectors)
    }

    pub fn zero(n_base: usize, order: usize) -> Self {
        SymbolSpace::new(n_base, order, vec![])
    }

    /// Full symbol of the components in `comps` only.
    pub fn full_components(n_base: usize, order: usize, comps: &[usize]) -> Self {
        let sb = symbol_basis(n_base, order);
        let d = sb.len();
        let vectors = (0..d)
            .filter(|&i| comps.contains(&sb[i].comp))
            .map(|i| (0..d).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
            .collect();
        SymbolSpace::new(n_base, order, vectors)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        symbol_dim(self.n_base, self.order as i64)
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        in_span(&self.basis, v)
    }

    pub fn same_as(&self, other: &SymbolSpace) -> bool {
        self.order == other.order && crate::linalg::same_span(&self.basis, &other.basis)
    }

    /// Vectors annihilating the subspace.
    pub fn annihilator(&self) -> Vec<Vec<Q>> {
        kernel(&self.basis, self.ambient_dim())
    }

    /// Basis of ∧^r T* ⊗ self inside ∧^r⊗S^k⊗T.
    pub fn form_basis(&self, r: usize) -> Vec<Vec<Q>> {
        let n = self.n_base;
        let tuples = sorted_tuples(n, r);
        let sd = self.ambient_dim();
        let total = tuples.len() * sd;
        let mut out = Vec::new();
        for ti in 0..tuples.len() {
            for b in &self.basis {
                let mut v = vec![Q::zero(); total];
                v[ti * sd..(ti + 1) * sd].clone_from_slice(b);
                out.push(v);
            }
        }
        out
    }
}

/// Symbol of the element with top-order coefficients `(l, α) ↦ c`.
pub fn symbol_vector(n: usize, k: usize, entries: &[(usize, MultiIndex, Q)]) -> Vec<Q> {
    let mut v = vec![Q::zero(); symbol_dim(n, k as i64)];
    for (l, a, c) in entries {
        v[position(n, k, *l, a)] += c;
    }
    v
}

/// First prolongation g^{k+1} = {ξ : δξ ∈ T*⊗g^k}.
pub fn symbol_prolong(g: &SymbolSpace) -> SymbolSpace {
    let n = g.n_base;
    let k = g.order;
    let d = delta_matrix(n, 0, k + 1);
    let ann = g.annihilator();
    let sd = g.ambient_dim();
    let mut cond: Matrix = Vec::new();
    for i in 0..n {
        for w in &ann {
            let row: Vec<Q> = (0..d[0].len())
                .map(|c| (0..sd).map(|s| &w[s] * &d[i * sd + s][c]).sum())
                .collect();
            cond.push(row);
        }
    }
    let cols = symbol_dim(n, k as i64 + 1);
    let basis = if cond.is_empty() {
        SymbolSpace::full(n, k + 1).basis
    } else {
        kernel(&cond, cols)
    };
    SymbolSpace::new(n, k + 1, basis)
}

/// Rank of S^{k+1}T*⊗T → T*⊗(S^kT*⊗T / g^k) used by [`symbol_prolong`].
pub fn prolongation_constraint_rank(g: &SymbolSpace) -> usize {
    let full = symbol_dim(g.n_base, g.order as i64 + 1);
    full - symbol_prolong(g).dim()
}

/// Dimensions, δ ranks and cohomology of a δ-subcomplex.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaCohomology {
    pub slot_dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub cohomology: Vec<usize>,
}

impl DeltaCohomology {
    pub fn exact_at(&self, slots: &[usize]) -> bool {
        slots.iter().all(|&j| self.cohomology[j] == 0)
    }
}

/// Cohomology of 0 → ∧^{r0}⊗slots[0] → ∧^{r0+1}⊗slots[1] → … where each slot
/// has order one less than the previous. The last slot maps into the full
/// ∧^{r0+len}⊗γ. Entry j of the result is the cohomology at slot j.
pub fn delta_cohomology(slots: &[SymbolSpace], r0: usize) -> Result<DeltaCohomology> {
    if slots.is_empty() {
        return Ok(DeltaCohomology {
            slot_dims: vec![],
            ranks: vec![],
            cohomology: vec![],
        });
    }
    let n = slots[0].n_base;
    for w in slots.windows(2) {
        if w[1].order + 1 != w[0].order {
            return Err(Error::Chain("slot orders must decrease by one".into()));
        }
    }
    let mut dims = Vec::new();
    let mut ranks = Vec::new();
    for (j, g) in slots.iter().enumerate() {
        let r = r0 + j;
        let basis = g.form_basis(r);
        dims.push(basis.len());
        if g.order == 0 || basis.is_empty() || r + 1 > n {
            ranks.push(0);
            continue;
        }
        let dm = delta_matrix(n, r, g.order);
        let images: Vec<Vec<Q>> = basis.iter().map(|b| crate::linalg::mat_vec(&dm, b)).collect();
        if let Some(next) = slots.get(j + 1) {
            let target = next.form_basis(r + 1);
            for im in &images {
                if !in_span(&target, im) {
                    return Err(Error::Chain(format!(
                        "δ does not map slot {j} into slot {}",
                        j + 1
                    )));
                }
            }
        }
        ranks.push(rank(&images));
    }
    let cohomology = (0..slots.len())
        .map(|j| {
            let ker = dims[j] - ranks[j];
            let im = if j == 0 { 0 } else { ranks[j - 1] };
            ker - im
        })
        .collect();
    Ok(DeltaCohomology {
        slot_dims: dims,
        ranks,
        cohomology,
    })
}

/// Cohomology of the full sequence 0 → γ^k → T*⊗γ^{k−1} → … → ∧^n⊗γ^{k−n} → 0.
pub fn full_symbol_sequence(n: usize, k: usize) -> Result<DeltaCohomology> {
    let slots: Vec<SymbolSpace> = (0..=n.min(k))
        .map(|j| SymbolSpace::full(n, k - j))
        .collect();
    delta_cohomology(&slots, 0)
}

/// Result of the 2-acyclicity test up to a finite prolongation depth.
#[derive(Clone, Debug, PartialEq)]
pub struct AcyclicityReport {
    pub prolonged_dims: Vec<usize>,
    pub per_l: Vec<(usize, DeltaCohomology)>,
    pub two_acyclic: bool,
}

/// Checks exactness of 0→g^{k+l}→T*⊗g^{k+l−1}→∧²⊗g^{k+l−2}→∧³⊗γ^{k+l−3}
/// for 2 ≤ l ≤ max(2, depth).
pub fn two_acyclicity(g: &SymbolSpace, depth: usize) -> Result<AcyclicityReport> {
    let lmax = depth.max(2);
    let mut chain = vec![g.clone()];
    for _ in 0..lmax {
        let next = symbol_prolong(chain.last().unwrap());
        chain.push(next);
    }
    let mut per_l = Vec::new();
    let mut ok = true;
    for l in 2..=lmax {
        let slots = vec![chain[l].clone(), chain[l - 1].clone(), chain[l - 2].clone()];
        let c = delta_cohomology(&slots, 0)?;
        // the last slot maps into the full ∧³⊗γ, so all three positions count
        if !c.exact_at(&[0, 1, 2]) {
            ok = false;
        }
        per_l.push((l, c));
    }
    Ok(AcyclicityReport {
        prolonged_dims: chain.iter().map(|s| s.dim()).collect(),
        per_l,
        two_acyclic: ok,
    })
}
