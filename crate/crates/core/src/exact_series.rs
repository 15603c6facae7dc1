//! Truncated multivariate power series with exact rational coefficients.
//!
//! Coefficients are stored densely in graded order, so the monomials of degree
//! at most `t` always form a prefix. Each series carries its own precision
//! `trunc`: coefficients of order `<= trunc` are exact, everything above is
//! unknown.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exponent vector of a monomial or a derivative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = vec![0; n];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn plus_unit(&self, j: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[j] += 1;
        MultiIndex(v)
    }

    pub fn minus_unit(&self, j: usize) -> Option<MultiIndex> {
        if self.0[j] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(MultiIndex(v))
    }

    pub fn minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut v = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if b > a {
                return None;
            }
            v.push(a - b);
        }
        Some(MultiIndex(v))
    }

    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// α! = Π αᵢ!
    pub fn factorial(&self) -> BigInt {
        let mut r = BigInt::one();
        for &a in &self.0 {
            for k in 2..=a {
                r *= BigInt::from(k);
            }
        }
        r
    }

    /// Multinomial binomial C(self, sub) = Π C(selfᵢ, subᵢ).
    pub fn binomial(&self, sub: &MultiIndex) -> BigInt {
        let mut r = BigInt::one();
        for (&a, &b) in self.0.iter().zip(&sub.0) {
            r *= binomial(a, b);
        }
        r
    }
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Number of monomials in `n` variables of degree at most `k`.
pub fn monomial_count(n: usize, k: i64) -> usize {
    if k < 0 {
        return 0;
    }
    let k = k as u64;
    let mut r: u64 = 1;
    for i in 1..=n as u64 {
        r = r * (k + i) / i;
    }
    r as usize
}

/// Graded enumeration of monomials with cached products.
pub struct MonomialTable {
    pub n: usize,
    pub cap: usize,
    pub exps: Vec<MultiIndex>,
    pub degs: Vec<u32>,
    rank: HashMap<Vec<u32>, usize>,
    prod: Vec<Vec<u32>>,
}

fn push_degree(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == n {
        prefix.push(d);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for a in (0..=d).rev() {
        prefix.push(a);
        push_degree(n, d - a, prefix, out);
        prefix.pop();
    }
}

impl MonomialTable {
    fn build(n: usize, cap: usize) -> Self {
        let mut exps = Vec::new();
        if n == 0 {
            exps.push(MultiIndex(vec![]));
        } else {
            for d in 0..=cap as u32 {
                push_degree(n, d, &mut Vec::new(), &mut exps);
            }
        }
        let degs: Vec<u32> = exps.iter().map(|e| e.order()).collect();
        let rank: HashMap<Vec<u32>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.0.clone(), i)).collect();
        let mut prod = Vec::with_capacity(exps.len());
        for (i, a) in exps.iter().enumerate() {
            let room = cap as i64 - degs[i] as i64;
            let m = if n == 0 { 1 } else { monomial_count(n, room) };
            let row: Vec<u32> = (0..m)
                .map(|j| rank[&a.plus(&exps[j]).0] as u32)
                .collect();
            prod.push(row);
        }
        MonomialTable {
            n,
            cap,
            exps,
            degs,
            rank,
            prod,
        }
    }

    pub fn rank_of(&self, e: &[u32]) -> Option<usize> {
        self.rank.get(e).copied()
    }

    pub fn count(&self, k: i64) -> usize {
        if self.n == 0 {
            return if k >= 0 { 1 } else { 0 };
        }
        monomial_count(self.n, k)
    }

    /// Index of the product of monomials `i` and `j` (requires degree sum within cap).
    #[inline]
    pub fn product(&self, i: usize, j: usize) -> usize {
        self.prod[i][j] as usize
    }
}

type TableCache = RwLock<HashMap<usize, Arc<MonomialTable>>>;

fn cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared monomial table for `n` variables covering degrees up to at least `deg`.
pub fn table(n: usize, deg: usize) -> Arc<MonomialTable> {
    if let Some(t) = cache().read().unwrap().get(&n) {
        if t.cap >= deg {
            return t.clone();
        }
    }
    let mut w = cache().write().unwrap();
    if let Some(t) = w.get(&n) {
        if t.cap >= deg {
            return t.clone();
        }
    }
    let old = w.get(&n).map(|t| t.cap).unwrap_or(0);
    let t = Arc::new(MonomialTable::build(n, deg.max(old).max(4)));
    w.insert(n, t.clone());
    t
}

/// Graded enumeration of all multi-indices of order at most `k` in `n` variables.
pub fn multi_index_enum(n: usize, k: usize) -> Vec<MultiIndex> {
    let t = table(n, k);
    t.exps[..t.count(k as i64)].to_vec()
}

/// Position of `alpha` in [`multi_index_enum`] order.
pub fn index_rank(alpha: &MultiIndex) -> usize {
    let t = table(alpha.len(), alpha.order() as usize);
    t.rank_of(&alpha.0).expect("multi-index within table")
}

#[derive(Clone, Debug, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Scale,
}

#[derive(Clone, Debug, Copy, PartialEq, Eq)]
pub enum InvertMode {
    Reciprocal,
    Reversion,
}

/// A germ at the origin known to order `trunc`.
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    n_vars: usize,
    trunc: i32,
    coeffs: Vec<Q>,
}

pub type Series = TruncatedSeries;

impl TruncatedSeries {
    pub fn zero(n_vars: usize, trunc: i32) -> Self {
        let len = monomial_count_n(n_vars, trunc);
        TruncatedSeries {
            n_vars,
            trunc,
            coeffs: vec![Q::zero(); len],
        }
    }

    pub fn constant(n_vars: usize, trunc: i32, c: Q) -> Self {
        let mut s = Self::zero(n_vars, trunc);
        if trunc >= 0 {
            s.coeffs[0] = c;
        }
        s
    }

    pub fn one(n_vars: usize, trunc: i32) -> Self {
        Self::constant(n_vars, trunc, Q::one())
    }

    pub fn var(n_vars: usize, trunc: i32, i: usize) -> Self {
        Self::monomial(n_vars, trunc, &MultiIndex::unit(n_vars, i), Q::one())
    }

    pub fn monomial(n_vars: usize, trunc: i32, e: &MultiIndex, c: Q) -> Self {
        let mut s = Self::zero(n_vars, trunc);
        s.add_term(e, c);
        s
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, Q)>>(
        n_vars: usize,
        trunc: i32,
        terms: I,
    ) -> Self {
        let mut s = Self::zero(n_vars, trunc);
        for (e, c) in terms {
            s.add_term(&e, c);
        }
        s
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn trunc(&self) -> i32 {
        self.trunc
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    fn tab(&self) -> Arc<MonomialTable> {
        table(self.n_vars, self.trunc.max(0) as usize)
    }

    /// Adds `c·x^e`; terms above the precision are dropped.
    pub fn add_term(&mut self, e: &MultiIndex, c: Q) {
        assert_eq!(e.len(), self.n_vars, "monomial arity");
        if e.order() as i32 > self.trunc || c.is_zero() {
            return;
        }
        let r = index_rank(e);
        self.coeffs[r] += c;
    }

    pub fn coeff(&self, e: &MultiIndex) -> Q {
        if e.order() as i32 > self.trunc {
            return Q::zero();
        }
        self.coeffs[index_rank(e)].clone()
    }

    pub fn constant_term(&self) -> Q {
        self.coeffs.first().cloned().unwrap_or_else(Q::zero)
    }

    /// Nonzero terms in graded order.
    pub fn terms(&self) -> Vec<(MultiIndex, Q)> {
        let t = self.tab();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (t.exps[i].clone(), c.clone()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_unit(&self) -> bool {
        !self.constant_term().is_zero()
    }

    /// Lowest order of a nonzero term, or `None` if zero to the known precision.
    pub fn valuation(&self) -> Option<u32> {
        let t = self.tab();
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|i| t.degs[i])
    }

    fn val_or_past(&self) -> i64 {
        self.valuation()
            .map(|v| v as i64)
            .unwrap_or(self.trunc as i64 + 1)
    }

    /// Lowers the precision to `t` (never raises it).
    pub fn truncate(&self, t: i32) -> Self {
        let t = t.min(self.trunc);
        let len = monomial_count_n(self.n_vars, t);
        TruncatedSeries {
            n_vars: self.n_vars,
            trunc: t,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    /// Declares the series exact up to order `t` by padding with zeros.
    /// Only valid for data known to be a polynomial of degree `<= self.trunc`.
    pub fn extend_exact(&self, t: i32) -> Self {
        if t <= self.trunc {
            return self.truncate(t);
        }
        let mut s = Self::zero(self.n_vars, t);
        s.coeffs[..self.coeffs.len()].clone_from_slice(&self.coeffs);
        s
    }

    /// Same germ with every coefficient of order `> t` discarded but declared exact.
    pub fn polynomial_part(&self, t: i32) -> Self {
        let mut s = self.clone();
        let t2 = self.tab();
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            if t2.degs[i] as i32 > t {
                *c = Q::zero();
            }
        }
        s
    }

    pub fn scale(&self, c: &Q) -> Self {
        TruncatedSeries {
            n_vars: self.n_vars,
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    fn check_arity(&self, other: &Self) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::Dimension(format!(
                "series in {} and {} variables",
                self.n_vars, other.n_vars
            )));
        }
        Ok(())
    }

    fn add_impl(&self, other: &Self, sign: bool) -> Self {
        assert_eq!(self.n_vars, other.n_vars, "series arity mismatch");
        let t = self.trunc.min(other.trunc);
        let len = monomial_count_n(self.n_vars, t);
        let coeffs = (0..len)
            .map(|i| {
                if sign {
                    &self.coeffs[i] + &other.coeffs[i]
                } else {
                    &self.coeffs[i] - &other.coeffs[i]
                }
            })
            .collect();
        TruncatedSeries {
            n_vars: self.n_vars,
            trunc: t,
            coeffs,
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        assert_eq!(self.n_vars, other.n_vars, "series arity mismatch");
        let (va, vb) = (self.val_or_past(), other.val_or_past());
        let exact = (self.trunc as i64 + vb).min(other.trunc as i64 + va);
        let t = exact.min(self.trunc.max(other.trunc) as i64) as i32;
        let mut out = Self::zero(self.n_vars, t);
        if t < 0 {
            return out;
        }
        let tab = table(self.n_vars, t as usize);
        let la = monomial_count_n(self.n_vars, t).min(self.coeffs.len());
        for i in 0..la {
            let a = &self.coeffs[i];
            if a.is_zero() {
                continue;
            }
            let room = t as i64 - tab.degs[i] as i64;
            let lb = monomial_count_n(self.n_vars, room as i32).min(other.coeffs.len());
            let row = &tab.prod[i];
            for j in 0..lb {
                let b = &other.coeffs[j];
                if b.is_zero() {
                    continue;
                }
                out.coeffs[row[j] as usize] += a * b;
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = Self::one(self.n_vars, self.trunc);
        for _ in 0..k {
            r = &r * self;
        }
        r
    }

    /// Formal partial derivative; the precision drops by one.
    pub fn derive(&self, var: usize) -> Self {
        assert!(var < self.n_vars, "derivative variable out of range");
        let t = self.trunc - 1;
        let mut out = Self::zero(self.n_vars, t);
        if t < 0 {
            return out;
        }
        let tab = self.tab();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = &tab.exps[i];
            if e.0[var] == 0 {
                continue;
            }
            let d = e.minus_unit(var).unwrap();
            let r = tab.rank_of(&d.0).unwrap();
            out.coeffs[r] += c * q(e.0[var] as i64);
        }
        out
    }

    pub fn derive_multi(&self, alpha: &MultiIndex) -> Self {
        let mut s = self.clone();
        for (v, &a) in alpha.0.iter().enumerate() {
            for _ in 0..a {
                s = s.derive(v);
            }
        }
        s
    }

    /// Antiderivative vanishing on `x_var = 0`; the precision rises by one.
    pub fn integrate(&self, var: usize) -> Self {
        let t = self.trunc + 1;
        let mut out = Self::zero(self.n_vars, t);
        let tab = table(self.n_vars, t.max(0) as usize);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = tab.exps[i].plus_unit(var);
            let r = tab.rank_of(&e.0).unwrap();
            out.coeffs[r] += c / q(e.0[var] as i64);
        }
        out
    }

    /// Coefficient of `x_var^power`, as a series not depending on `x_var`.
    pub fn coeff_in_var(&self, var: usize, power: u32) -> Self {
        let t = self.trunc - power as i32;
        let mut out = Self::zero(self.n_vars, t);
        if t < 0 {
            return out;
        }
        let tab = self.tab();
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = &tab.exps[i];
            if c.is_zero() || e.0[var] != power {
                continue;
            }
            let mut d = e.clone();
            d.0[var] = 0;
            out.add_term(&d, c.clone());
        }
        out
    }

    /// Substitution `self(args)`; every argument must vanish at the origin.
    pub fn compose(&self, args: &[Series]) -> Result<Self> {
        if args.len() != self.n_vars {
            return Err(Error::Dimension(format!(
                "composition of a series in {} variables with {} arguments",
                self.n_vars,
                args.len()
            )));
        }
        if args.is_empty() {
            return Err(Error::Dimension("composition without arguments".into()));
        }
        let m = args[0].n_vars;
        for a in args {
            if a.n_vars != m {
                return Err(Error::Dimension("composition arguments differ in arity".into()));
            }
            if !a.constant_term().is_zero() {
                return Err(Error::Recentering);
            }
        }
        let vmin = args.iter().map(|a| a.val_or_past()).min().unwrap().max(1);
        let from_f = (self.trunc as i64 + 1) * vmin - 1;
        let from_args = args.iter().map(|a| a.trunc as i64).min().unwrap();
        let cap = args
            .iter()
            .map(|a| a.trunc)
            .chain(std::iter::once(self.trunc))
            .max()
            .unwrap() as i64;
        let t = from_f.min(from_args).min(cap) as i32;
        let args: Vec<Series> = args.iter().map(|a| a.truncate(t)).collect();
        let mut out = Self::zero(m, t);
        if t < 0 || self.trunc < 0 {
            return Ok(out);
        }
        let tab = self.tab();
        let mut powers: HashMap<usize, Series> = HashMap::new();
        powers.insert(0, Series::one(m, t));
        for (i, c) in self.coeffs.iter().enumerate() {
            if i == 0 {
                out = &out + &Series::constant(m, t, c.clone());
                continue;
            }
            let e = &tab.exps[i];
            if (e.order() as i64) * vmin > t as i64 {
                break;
            }
            let j = e.0.iter().position(|&a| a > 0).unwrap();
            let prev = tab.rank_of(&e.minus_unit(j).unwrap().0).unwrap();
            let p = &powers[&prev] * &args[j];
            if !c.is_zero() {
                out = &out + &p.scale(c);
            }
            powers.insert(i, p);
        }
        Ok(out)
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn reciprocal(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::NonUnit("zero constant term".into()));
        }
        let inv0 = c0.recip();
        let n = self.n_vars;
        let t = self.trunc;
        // 1/(c0(1 - u)) = (1 + u + u² + ...)/c0 with u = 1 - a/c0
        let u = &Series::one(n, t) - &self.scale(&inv0);
        let mut r = Series::one(n, t);
        let mut p = Series::one(n, t);
        for _ in 0..t.max(0) {
            p = &p * &u;
            if p.is_zero() {
                break;
            }
            r = &r + &p;
        }
        Ok(r.scale(&inv0))
    }

    pub fn invert(&self, mode: InvertMode) -> Result<Self> {
        match mode {
            InvertMode::Reciprocal => self.reciprocal(),
            InvertMode::Reversion => {
                let v = reversion_system(std::slice::from_ref(self), 1)?;
                Ok(v.into_iter().next().unwrap())
            }
        }
    }

    /// Rewrites the series with variables permuted/embedded: variable `i` of
    /// `self` becomes variable `map[i]` of an `n_new`-variable series.
    pub fn embed(&self, n_new: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.n_vars);
        let mut out = Self::zero(n_new, self.trunc);
        for (e, c) in self.terms() {
            let mut d = vec![0; n_new];
            for (i, &a) in e.0.iter().enumerate() {
                d[map[i]] += a;
            }
            out.add_term(&MultiIndex(d), c);
        }
        out
    }

    /// Sets the listed variables to zero.
    pub fn restrict_zero(&self, vars: &[usize]) -> Self {
        let mut out = Self::zero(self.n_vars, self.trunc);
        for (e, c) in self.terms() {
            if vars.iter().all(|&v| e.0[v] == 0) {
                out.add_term(&e, c);
            }
        }
        out
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms().iter().any(|(e, _)| e.0[var] > 0)
    }

    pub fn format_with(&self, names: &[String]) -> String {
        let terms = self.terms();
        if terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (e, c)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono: Vec<String> = e
                .0
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| {
                    let name = names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
                    if p == 1 {
                        name
                    } else {
                        format!("{name}^{p}")
                    }
                })
                .collect();
            if mono.is_empty() {
                s.push_str(&a.to_string());
            } else if a.is_one() {
                s.push_str(&mono.join("*"));
            } else {
                s.push_str(&format!("{}*{}", a, mono.join("*")));
            }
        }
        s
    }
}

fn monomial_count_n(n: usize, t: i32) -> usize {
    if n == 0 {
        return if t >= 0 { 1 } else { 0 };
    }
    monomial_count(n, t as i64)
}

/// Checked ring operation; errors on mismatched arity.
pub fn series_arith(a: &Series, b: &Series, op: ArithOp) -> Result<Series> {
    a.check_arity(b)?;
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Scale => {
            if b.terms().iter().any(|(e, _)| e.order() > 0) {
                return Err(Error::Dimension("scale factor is not a constant".into()));
            }
            a.scale(&b.constant_term())
        }
    })
}

/// Equality on the common precision.
impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        if self.n_vars != other.n_vars {
            return false;
        }
        let len = self.coeffs.len().min(other.coeffs.len());
        self.coeffs[..len] == other.coeffs[..len]
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        self.add_impl(rhs, true)
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        self.add_impl(rhs, false)
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.mul_impl(rhs)
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(&-Q::one())
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, rhs: Series) -> Series {
        &self + &rhs
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, rhs: Series) -> Series {
        &self - &rhs
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, rhs: Series) -> Series {
        &self * &rhs
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        -&self
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O({})", self.format_with(&[]), self.trunc + 1)
    }
}

/// Square matrix of series, inverted by elimination with unit pivots.
pub fn invert_series_matrix(m: &[Vec<Series>]) -> Result<Vec<Vec<Series>>> {
    let n = m.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let nv = m[0][0].n_vars();
    let t = m.iter().flatten().map(|s| s.trunc()).max().unwrap();
    let mut a: Vec<Vec<Series>> = m.to_vec();
    let mut inv: Vec<Vec<Series>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Series::one(nv, t)
                    } else {
                        Series::zero(nv, t)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .find(|&r| a[r][col].is_unit())
            .ok_or_else(|| Error::NonUnit("singular linear part".into()))?;
        a.swap(col, p);
        inv.swap(col, p);
        let r = a[col][col].reciprocal()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col || a[row][col].is_zero() {
                continue;
            }
            let f = a[row][col].clone();
            for j in 0..n {
                a[row][j] = &a[row][j] - &(&f * &a[col][j]);
                inv[row][j] = &inv[row][j] - &(&f * &inv[col][j]);
            }
        }
    }
    Ok(inv)
}

/// Inverse of the map `x ↦ f(x)` in the first `n_base` variables.
///
/// Remaining variables are parameters carried through unchanged. Solved by
/// Newton iteration, doubling the exact order at every step.
pub fn reversion_system(f: &[Series], n_base: usize) -> Result<Vec<Series>> {
    if f.len() != n_base {
        return Err(Error::Dimension("reversion needs a square system".into()));
    }
    let nv = f[0].n_vars();
    if nv < n_base {
        return Err(Error::Dimension("fewer variables than equations".into()));
    }
    for s in f {
        if !s.constant_term().is_zero() {
            return Err(Error::Recentering);
        }
    }
    let t = f.iter().map(|s| s.trunc()).min().unwrap();
    let jac: Vec<Vec<Series>> = f
        .iter()
        .map(|fi| (0..n_base).map(|j| fi.derive(j)).collect())
        .collect();
    let lin0: Vec<Vec<Series>> = jac
        .iter()
        .map(|row| row.iter().map(|s| Series::constant(nv, t, s.constant_term())).collect())
        .collect();
    let l_inv = invert_series_matrix(&lin0)?;
    let y: Vec<Series> = (0..n_base).map(|i| Series::var(nv, t, i)).collect();
    let params: Vec<Series> = (n_base..nv).map(|i| Series::var(nv, t, i)).collect();
    let mut g: Vec<Series> = (0..n_base)
        .map(|i| {
            let mut s = Series::zero(nv, t);
            for j in 0..n_base {
                s = &s + &(&l_inv[i][j] * &y[j]);
            }
            s
        })
        .collect();
    let mut exact = 1i64;
    loop {
        let mut args = g.clone();
        args.extend(params.iter().cloned());
        let resid: Vec<Series> = f
            .iter()
            .zip(&y)
            .map(|(fi, yi)| Ok(&fi.compose(&args)?.extend_exact(t) - yi))
            .collect::<Result<_>>()?;
        if resid.iter().all(|r| r.is_zero()) || exact > 2 * (t as i64 + 1) {
            break;
        }
        let jg: Vec<Vec<Series>> = jac
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| Ok(s.extend_exact(t).compose(&args)?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let ji = invert_series_matrix(&jg)?;
        g = (0..n_base)
            .map(|i| {
                let mut s = g[i].clone();
                for j in 0..n_base {
                    s = &s - &(&ji[i][j] * &resid[j]);
                }
                s.extend_exact(t)
            })
            .collect();
        exact *= 2;
    }
    Ok(g.into_iter().map(|s| s.truncate(t)).collect())
}
