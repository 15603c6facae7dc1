//! Exact linear algebra over the rationals.

use num::{One, Zero};

use crate::exact_series::Q;

pub type Matrix = Vec<Vec<Q>>;

pub fn zeros(rows: usize, cols: usize) -> Matrix {
    vec![vec![Q::zero(); cols]; rows]
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of the right kernel `{v : m v = 0}`.
pub fn kernel(m: &Matrix, cols: usize) -> Vec<Vec<Q>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

/// Row-reduced basis of the span of `vectors`.
pub fn span_basis(vectors: &[Vec<Q>]) -> Vec<Vec<Q>> {
    if vectors.is_empty() {
        return vec![];
    }
    let mut a = vectors.to_vec();
    let r = rref(&mut a).len();
    a.truncate(r);
    a
}

pub fn mat_vec(m: &Matrix, v: &[Q]) -> Vec<Q> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn transpose(m: &Matrix, cols: usize) -> Matrix {
    (0..cols)
        .map(|j| m.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Whether two families span the same subspace.
pub fn same_span(a: &[Vec<Q>], b: &[Vec<Q>]) -> bool {
    let ra = span_basis(a).len();
    let rb = span_basis(b).len();
    let mut both = a.to_vec();
    both.extend(b.iter().cloned());
    let rab = span_basis(&both).len();
    ra == rb && ra == rab
}

/// Whether `v` lies in the span of `basis`.
pub fn in_span(basis: &[Vec<Q>], v: &[Q]) -> bool {
    let r = span_basis(basis).len();
    let mut both = basis.to_vec();
    both.push(v.to_vec());
    span_basis(&both).len() == r
}
