#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use spencer_core::exact_series::{multi_index_enum, MultiIndex, Series, Q};
use spencer_core::fiber_poly::HPoly;
use spencer_core::jet_groupoid::GroupoidSection;
use spencer_core::jet_space::{CheckedSection, JetSection};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_q(r: &mut ChaCha8Rng) -> Q {
    let n: i64 = r.gen_range(-3..=3);
    let d: i64 = r.gen_range(1..=2);
    Q::new(n.into(), d.into())
}

/// Random polynomial of degree ≤ `deg` with a few nonzero terms.
pub fn poly(r: &mut ChaCha8Rng, n: usize, deg: usize, t: i32, terms: usize, with_constant: bool) -> Series {
    let idx = multi_index_enum(n, deg);
    let mut s = Series::zero(n, t);
    for _ in 0..terms {
        let a = &idx[r.gen_range(0..idx.len())];
        if !with_constant && a.order() == 0 {
            continue;
        }
        s.add_term(a, small_q(r));
    }
    s
}

pub fn field(r: &mut ChaCha8Rng, n: usize, deg: usize, t: i32) -> Vec<Series> {
    (0..n).map(|_| poly(r, n, deg, t, 4, true)).collect()
}

pub fn jet(r: &mut ChaCha8Rng, n: usize, k: usize, t: i32) -> JetSection {
    let mut s = JetSection::zero(n, n, k, t);
    for i in 0..n {
        for a in multi_index_enum(n, k) {
            s.set(i, &a, poly(r, n, 2, t, 2, true));
        }
    }
    s
}

pub fn checked(r: &mut ChaCha8Rng, n: usize, k: usize, t: i32) -> CheckedSection {
    CheckedSection::new(field(r, n, 2, t), jet(r, n, k, t))
}

/// Diffeomorphism germ fixing the origin: identity plus small linear shear plus quadratic terms.
pub fn diffeo(r: &mut ChaCha8Rng, n: usize, t: i32) -> Vec<Series> {
    (0..n)
        .map(|i| {
            let mut s = Series::var(n, t, i);
            for j in 0..n {
                if j > i {
                    s.add_term(&MultiIndex::unit(n, j), small_q(r));
                }
            }
            &s + &nonlinear(r, n, t)
        })
        .collect()
}

fn nonlinear(r: &mut ChaCha8Rng, n: usize, t: i32) -> Series {
    let idx = multi_index_enum(n, 3);
    let mut s = Series::zero(n, t);
    for _ in 0..3 {
        let a = &idx[r.gen_range(0..idx.len())];
        if a.order() >= 2 {
            s.add_term(a, small_q(r));
        }
    }
    s
}

/// Random invertible (generally non-holonomic) section of order k.
pub fn section(r: &mut ChaCha8Rng, n: usize, k: usize, t: i32) -> GroupoidSection {
    let f = diffeo(r, n, t);
    let mut jets = JetSection::zero(n, n, k, t);
    for i in 0..n {
        for a in multi_index_enum(n, k).into_iter().skip(1) {
            let mut s = poly(r, n, 2, t, 2, a.order() > 1);
            if a.order() == 1 {
                let j = a.0.iter().position(|&e| e == 1).unwrap();
                let c = s.constant_term();
                s = &s - &Series::constant(n, t, c);
                if j == i {
                    s = &s + &Series::one(n, t);
                } else if j > i {
                    s = &s + &Series::constant(n, t, small_q(r));
                }
            }
            jets.set(i, &a, s);
        }
    }
    GroupoidSection::from_jets(f, &jets).expect("invertible random section")
}

pub fn hpoly_var(n: usize, deg: usize, i: usize, t: i32) -> HPoly {
    HPoly::var(n, deg, i, n, t)
}
