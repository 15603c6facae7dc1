//! Polynomials in fiber displacements h with series coefficients in x,
//! truncated at a fixed h-degree.

use crate::error::{Error, Result};
use crate::exact_series::{invert_series_matrix, table, MultiIndex, Series, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct HPoly {
    pub n_h: usize,
    pub deg: usize,
    /// Taylor coefficients (of h^α, not derivatives), graded order.
    pub c: Vec<Series>,
}

fn count(n: usize, d: usize) -> usize {
    crate::exact_series::monomial_count(n, d as i64)
}

impl HPoly {
    pub fn zero(n_h: usize, deg: usize, n_vars: usize, trunc: i32) -> Self {
        HPoly {
            n_h,
            deg,
            c: vec![Series::zero(n_vars, trunc); count(n_h, deg)],
        }
    }

    pub fn constant(n_h: usize, deg: usize, s: Series) -> Self {
        let mut p = Self::zero(n_h, deg, s.n_vars(), s.trunc());
        p.c[0] = s;
        p
    }

    pub fn var(n_h: usize, deg: usize, i: usize, n_vars: usize, trunc: i32) -> Self {
        let mut p = Self::zero(n_h, deg, n_vars, trunc);
        if deg >= 1 {
            p.set(&MultiIndex::unit(n_h, i), Series::one(n_vars, trunc));
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.c[0].n_vars()
    }

    pub fn trunc(&self) -> i32 {
        self.c.iter().map(|s| s.trunc()).min().unwrap()
    }

    pub fn get(&self, a: &MultiIndex) -> Series {
        if a.order() as usize > self.deg {
            return Series::zero(self.n_vars(), self.trunc());
        }
        let t = table(self.n_h, self.deg);
        self.c[t.rank_of(&a.0).unwrap()].clone()
    }

    pub fn set(&mut self, a: &MultiIndex, s: Series) {
        if a.order() as usize > self.deg {
            return;
        }
        let t = table(self.n_h, self.deg);
        let r = t.rank_of(&a.0).unwrap();
        self.c[r] = s;
    }

    /// Raw derivative ∂_h^α at h = 0.
    pub fn raw(&self, a: &MultiIndex) -> Series {
        self.get(a).scale(&Q::from_integer(a.factorial()))
    }

    pub fn set_raw(&mut self, a: &MultiIndex, s: Series) {
        let f = Q::from_integer(a.factorial());
        self.set(a, s.scale(&f.recip()));
    }

    pub fn with_deg(&self, deg: usize) -> Self {
        let mut p = Self::zero(self.n_h, deg, self.n_vars(), self.trunc());
        let m = self.c.len().min(p.c.len());
        p.c[..m].clone_from_slice(&self.c[..m]);
        p
    }

    pub fn map(&self, f: impl Fn(&Series) -> Series) -> Self {
        HPoly {
            n_h: self.n_h,
            deg: self.deg,
            c: self.c.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(&Series) -> Result<Series>) -> Result<Self> {
        Ok(HPoly {
            n_h: self.n_h,
            deg: self.deg,
            c: self.c.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.deg, o.deg);
        HPoly {
            n_h: self.n_h,
            deg: self.deg,
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.deg, o.deg);
        HPoly {
            n_h: self.n_h,
            deg: self.deg,
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul_series(&self, s: &Series) -> Self {
        self.map(|a| a * s)
    }

    pub fn scale(&self, q: &Q) -> Self {
        self.map(|a| a.scale(q))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.deg, o.deg);
        let t = table(self.n_h, self.deg);
        let mut out = Self::zero(self.n_h, self.deg, self.n_vars(), self.trunc().min(o.trunc()));
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let room = self.deg - t.degs[i] as usize;
            for j in 0..count(self.n_h, room) {
                let b = &o.c[j];
                if b.is_zero() {
                    continue;
                }
                let k = t.product(i, j);
                out.c[k] = &out.c[k] + &(a * b);
            }
        }
        out
    }

    pub fn constant_term(&self) -> Series {
        self.c[0].clone()
    }

    pub fn has_zero_constant(&self) -> bool {
        self.c[0].is_zero()
    }

    /// ∂/∂h_i, degree stays the same (top coefficients become zero).
    pub fn derive_h(&self, i: usize) -> Self {
        let t = table(self.n_h, self.deg);
        let mut out = Self::zero(self.n_h, self.deg, self.n_vars(), self.trunc());
        for (r, s) in self.c.iter().enumerate() {
            let e = &t.exps[r];
            if e.0[i] == 0 || s.is_zero() {
                continue;
            }
            let d = e.minus_unit(i).unwrap();
            let rd = t.rank_of(&d.0).unwrap();
            out.c[rd] = &out.c[rd] + &s.scale(&Q::from_integer(e.0[i].into()));
        }
        out
    }

    /// Coefficientwise derivative in the base variable `j`.
    pub fn derive_x(&self, j: usize) -> Self {
        self.map(|s| s.derive(j))
    }

    /// Coefficientwise substitution x ↦ args.
    pub fn compose_coeffs(&self, args: &[Series]) -> Result<Self> {
        self.try_map(|s| s.compose(args))
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|s| s.is_zero())
    }
}

/// p(q_1(h), …, q_m(h)) for polynomials `q` without constant term.
pub fn compose_poly(p: &HPoly, q: &[HPoly]) -> Result<HPoly> {
    if q.len() != p.n_h {
        return Err(Error::Dimension("composition arity".into()));
    }
    let deg = q[0].deg;
    let n_h = q[0].n_h;
    for qi in q {
        if !qi.has_zero_constant() {
            return Err(Error::Recentering);
        }
    }
    let t = table(p.n_h, p.deg);
    let nv = p.n_vars();
    let tr = p.trunc().min(q.iter().map(|x| x.trunc()).min().unwrap());
    let mut out = HPoly::zero(n_h, deg, nv, tr);
    let mut powers: Vec<Option<HPoly>> = vec![None; p.c.len()];
    let mut one = HPoly::zero(n_h, deg, nv, tr);
    one.c[0] = Series::one(nv, tr);
    powers[0] = Some(one);
    for (i, c) in p.c.iter().enumerate() {
        let e = &t.exps[i];
        if e.order() as usize > deg {
            break;
        }
        if i > 0 {
            let j = e.0.iter().position(|&a| a > 0).unwrap();
            let prev = t.rank_of(&e.minus_unit(j).unwrap().0).unwrap();
            let pw = powers[prev].as_ref().unwrap().mul(&q[j]);
            powers[i] = Some(pw);
        }
        if !c.is_zero() {
            out = out.add(&powers[i].as_ref().unwrap().mul_series(c));
        }
    }
    Ok(out)
}

/// Vector of n polynomials in n variables.
pub type VecPoly = Vec<HPoly>;

pub fn vec_compose(p: &[HPoly], q: &[HPoly]) -> Result<VecPoly> {
    p.iter().map(|pi| compose_poly(pi, q)).collect()
}

/// Linear part as a series matrix L[i][j] = coefficient of h_j in p_i.
pub fn linear_part(p: &[HPoly]) -> Vec<Vec<Series>> {
    let n = p[0].n_h;
    p.iter()
        .map(|pi| (0..n).map(|j| pi.get(&MultiIndex::unit(n, j))).collect())
        .collect()
}

/// Inverse of a polynomial map without constant term, truncated at its degree.
pub fn reverse(p: &[HPoly]) -> Result<VecPoly> {
    let n = p.len();
    let deg = p[0].deg;
    let nv = p[0].n_vars();
    let tr = p.iter().map(|x| x.trunc()).min().unwrap();
    for pi in p {
        if !pi.has_zero_constant() {
            return Err(Error::Recentering);
        }
    }
    let l_inv = invert_series_matrix(&linear_part(p))
        .map_err(|_| Error::NotInvertible("singular linear part".into()))?;
    let nonlinear: VecPoly = p
        .iter()
        .map(|pi| {
            let mut r = pi.clone();
            for j in 0..n {
                r.set(&MultiIndex::unit(n, j), Series::zero(nv, tr));
            }
            r
        })
        .collect();
    let h: VecPoly = (0..n).map(|i| HPoly::var(n, deg, i, nv, tr)).collect();
    let apply_linv = |v: &VecPoly| -> VecPoly {
        (0..n)
            .map(|i| {
                let mut acc = HPoly::zero(n, deg, nv, tr);
                for j in 0..n {
                    acc = acc.add(&v[j].mul_series(&l_inv[i][j]));
                }
                acc
            })
            .collect()
    };
    let mut r = apply_linv(&h);
    for _ in 1..deg {
        let nr = vec_compose(&nonlinear, &r)?;
        let rhs: VecPoly = h.iter().zip(&nr).map(|(a, b)| a.sub(b)).collect();
        r = apply_linv(&rhs);
    }
    Ok(r)
}

/// Inverse of a square matrix of polynomials whose constant part is invertible.
pub fn invert_poly_matrix(m: &[Vec<HPoly>]) -> Result<Vec<Vec<HPoly>>> {
    let n = m.len();
    let deg = m[0][0].deg;
    let n_h = m[0][0].n_h;
    let nv = m[0][0].n_vars();
    let tr = m.iter().flatten().map(|x| x.trunc()).min().unwrap();
    let c0: Vec<Vec<Series>> = m
        .iter()
        .map(|r| r.iter().map(|p| p.constant_term()).collect())
        .collect();
    let c0_inv = invert_series_matrix(&c0).map_err(|_| Error::NotInvertible("singular linear part".into()))?;
    let c0p: Vec<Vec<HPoly>> = c0_inv
        .iter()
        .map(|r| r.iter().map(|s| HPoly::constant(n_h, deg, s.clone())).collect())
        .collect();
    // M = C0 (I + N), N = C0⁻¹(M − C0) has no constant term; M⁻¹ = Σ (−N)^m C0⁻¹
    let rest: Vec<Vec<HPoly>> = m
        .iter()
        .map(|r| {
            r.iter()
                .map(|p| {
                    let mut q = p.clone();
                    q.c[0] = Series::zero(nv, tr);
                    q
                })
                .collect()
        })
        .collect();
    let nmat = mat_mul(&c0p, &rest);
    let neg_n: Vec<Vec<HPoly>> = nmat
        .iter()
        .map(|r| r.iter().map(|p| p.scale(&-Q::from_integer(1.into()))).collect())
        .collect();
    let ident: Vec<Vec<HPoly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        HPoly::constant(n_h, deg, Series::one(nv, tr))
                    } else {
                        HPoly::zero(n_h, deg, nv, tr)
                    }
                })
                .collect()
        })
        .collect();
    let mut sum = ident.clone();
    let mut pw = ident;
    for _ in 0..deg {
        pw = mat_mul(&pw, &neg_n);
        sum = mat_add(&sum, &pw);
    }
    Ok(mat_mul(&sum, &c0p))
}

pub fn mat_mul(a: &[Vec<HPoly>], b: &[Vec<HPoly>]) -> Vec<Vec<HPoly>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = a[i][0].mul(&b[0][j]);
                    for l in 1..k {
                        acc = acc.add(&a[i][l].mul(&b[l][j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn mat_add(a: &[Vec<HPoly>], b: &[Vec<HPoly>]) -> Vec<Vec<HPoly>> {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.add(y)).collect())
        .collect()
}

pub fn mat_vec(a: &[Vec<HPoly>], v: &[HPoly]) -> VecPoly {
    a.iter()
        .map(|row| {
            let mut acc = row[0].mul(&v[0]);
            for l in 1..v.len() {
                acc = acc.add(&row[l].mul(&v[l]));
            }
            acc
        })
        .collect()
}

/// Jacobian matrix ∂p_i/∂h_j.
pub fn jacobian_h(p: &[HPoly]) -> Vec<Vec<HPoly>> {
    let n = p[0].n_h;
    p.iter()
        .map(|pi| (0..n).map(|j| pi.derive_h(j)).collect())
        .collect()
}
