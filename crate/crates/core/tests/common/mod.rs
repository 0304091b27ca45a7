#![allow(dead_code)]

use bott::iso::GradedIso;
use bott::moves::{MoveKind, MoveSeq};
use bott::ring::{product2, BottMatrix, Class2};
use num_bigint::BigInt;
use rand::Rng;

pub fn matrix(rows: &[&[i64]]) -> BottMatrix {
    BottMatrix::from_rows(rows).unwrap()
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, bound: i64) -> BottMatrix {
    let rows: Vec<Vec<i64>> = (1..=n)
        .map(|i| (1..i).map(|_| rng.gen_range(-bound..=bound)).collect())
        .collect();
    BottMatrix::from_rows(&rows).unwrap()
}

/// Random `v ∈ F_{j-1}` with `v (beta_j - v) = 0`, if one turns up.
pub fn random_twist_vector<R: Rng>(
    rng: &mut R,
    b: &BottMatrix,
    j: usize,
    tries: usize,
) -> Option<Class2> {
    let n = b.n();
    let beta = b.alpha(j);
    for _ in 0..tries {
        let mut v = Class2::zero(n);
        for k in 1..j {
            v.set(k, BigInt::from(rng.gen_range(-2i64..=2)));
        }
        if v.is_zero() {
            continue;
        }
        if product2(&v, &(&beta - &v), b).is_zero() {
            return Some(v);
        }
    }
    None
}

/// One random admissible move on `b`, if any is found.
pub fn random_move<R: Rng>(rng: &mut R, b: &BottMatrix) -> Option<MoveKind> {
    let n = b.n();
    if n < 2 {
        return None;
    }
    for _ in 0..20 {
        if rng.gen_bool(0.5) {
            let j = rng.gen_range(1..n);
            if b.entry(j + 1, j) == &BigInt::from(0) {
                return Some(MoveKind::Switch { j });
            }
        } else {
            let j = rng.gen_range(2..=n);
            if let Some(v) = random_twist_vector(rng, b, j, 30) {
                return Some(MoveKind::Twist { j, v });
            }
        }
    }
    None
}

pub fn random_moves<R: Rng>(rng: &mut R, start: &BottMatrix, len: usize) -> MoveSeq {
    let mut seq = MoveSeq::empty(start);
    for _ in 0..len {
        if let Some(kind) = random_move(rng, &seq.end) {
            seq.perform(&kind).unwrap();
        }
    }
    seq
}

/// `g ∘ id ∘ f` for random move chains `f: A0 -> A` and `g: A -> B`.
pub fn scrambled_iso<R: Rng>(rng: &mut R, a: &BottMatrix, len: usize) -> GradedIso {
    let g = random_moves(rng, a, len);
    let back = random_moves(rng, a, len).inverse().unwrap();
    GradedIso::compose(&g.composite, &back.composite).unwrap()
}

pub mod strategies {
    use bott::ring::{BottMatrix, Class2};
    use proptest::prelude::*;

    /// Strictly lower-triangular matrices with `1 <= n <= max_n`.
    pub fn bott_matrix(max_n: usize, bound: i64) -> impl Strategy<Value = BottMatrix> {
        (1..=max_n).prop_flat_map(move |n| {
            proptest::collection::vec(-bound..=bound, n * (n - 1) / 2).prop_map(move |flat| {
                let mut it = flat.into_iter();
                let rows: Vec<Vec<i64>> = (1..=n)
                    .map(|i| (1..i).map(|_| it.next().unwrap()).collect())
                    .collect();
                BottMatrix::from_rows(&rows).unwrap()
            })
        })
    }

    pub fn class2(n: usize, bound: i64) -> impl Strategy<Value = Class2> {
        proptest::collection::vec(-bound..=bound, n).prop_map(|v| Class2::from_i64(&v))
    }
}
