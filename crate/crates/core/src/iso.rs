//! Graded ring isomorphisms between Bott rings.
//!
//! Cohomology of a Bott manifold is generated in degree two, so an
//! isomorphism is fully described by the integer matrix `C` with
//! `phi(x_i) = sum_j c_ij y_j`. Construction validates that `C` is
//! unimodular and respects every relation `x_i^2 = alpha_i x_i`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::ring::{product2, BottMatrix, Class2, CohClass, Half};
use crate::structure::{decompose_tower, DecompositionTower};

/// Default coefficient bound for [`search_isos`].
pub const DEFAULT_SEARCH_BOUND: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedIso {
    source: BottMatrix,
    target: BottMatrix,
    matrix: IntMatrix,
}

impl GradedIso {
    /// Validates `C` as an isomorphism `H*(B(source)) -> H*(B(target))`.
    pub fn new(source: BottMatrix, target: BottMatrix, matrix: IntMatrix) -> Result<Self> {
        validate(&source, &target, &matrix)?;
        Ok(GradedIso {
            source,
            target,
            matrix,
        })
    }

    pub fn identity(a: &BottMatrix) -> Self {
        GradedIso {
            source: a.clone(),
            target: a.clone(),
            matrix: IntMatrix::identity(a.n()),
        }
    }

    pub fn source(&self) -> &BottMatrix {
        &self.source
    }

    pub fn target(&self) -> &BottMatrix {
        &self.target
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// `phi(x_i)`.
    pub fn image(&self, i: usize) -> Class2 {
        self.matrix.row(i)
    }

    /// Linear extension on degree two.
    pub fn apply2(&self, c: &Class2) -> Class2 {
        self.matrix.left_apply(c)
    }

    /// Multiplicative extension to classes of any degree.
    pub fn apply(&self, c: &CohClass) -> Result<CohClass> {
        if *c.context().as_ref() != self.source {
            return Err(Error::ContextMismatch);
        }
        let ctx = Arc::new(self.target.clone());
        let images: Vec<CohClass> = (1..=self.n())
            .map(|i| CohClass::from_class2(ctx.clone(), &self.image(i)))
            .collect();
        let mut out = CohClass::zero(ctx.clone());
        for (m, coeff) in c.terms() {
            let mut term = CohClass::one(ctx.clone());
            for &i in m.indices() {
                term = term.multiply(&images[i - 1])?;
            }
            out = out.add(&term.scale(coeff))?;
        }
        Ok(out)
    }

    /// `g ∘ f`.
    pub fn compose(g: &GradedIso, f: &GradedIso) -> Result<GradedIso> {
        if f.target != g.source {
            return Err(Error::ContextMismatch);
        }
        GradedIso::new(f.source.clone(), g.target.clone(), f.matrix.mul(&g.matrix))
    }

    pub fn inverse(&self) -> Result<GradedIso> {
        let inv = self.matrix.inverse().ok_or_else(|| Error::NotUnimodular {
            det: self.matrix.det(),
        })?;
        GradedIso::new(self.target.clone(), self.source.clone(), inv)
    }

    /// Whether `phi(F_k(A)) ⊂ F_k(B)`.
    pub fn is_stable(&self, k: usize) -> bool {
        let n = self.n();
        (1..=k.min(n)).all(|i| (k + 1..=n).all(|j| self.matrix.get(i, j).is_zero()))
    }

    /// `n` when `phi` preserves every `F_k` (lower-triangular `C`);
    /// otherwise the largest `k < n` with `phi` k-stable.
    pub fn max_stable(&self) -> usize {
        let n = self.n();
        if self.matrix.is_lower_triangular() {
            return n;
        }
        (0..n).rev().find(|&k| self.is_stable(k)).unwrap_or(0)
    }
}

fn validate(source: &BottMatrix, target: &BottMatrix, matrix: &IntMatrix) -> Result<()> {
    let n = source.n();
    if target.n() != n || matrix.n() != n {
        return Err(Error::Shape(format!(
            "source has n={}, target n={}, matrix {}x{}",
            n,
            target.n(),
            matrix.n(),
            matrix.n()
        )));
    }
    let det = matrix.det();
    if !det.abs().is_one() {
        return Err(Error::NotUnimodular { det });
    }
    for i in 1..=n {
        let img = matrix.row(i);
        let img_alpha = matrix.left_apply(&source.alpha(i));
        let residue = product2(&img, &(&img - &img_alpha), target);
        if !residue.is_zero() {
            return Err(Error::RelationViolated {
                index: i,
                residue: residue.to_string(),
            });
        }
    }
    Ok(())
}

/// The permutation and scalars with `phi(2x_i - alpha_i) = eps_i (2y_σ(i) - β_σ(i))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaEps {
    /// `sigma[i-1] = σ(i)`, 1-based.
    pub sigma: Vec<usize>,
    pub eps: Vec<Half>,
}

impl SigmaEps {
    pub fn sigma(&self, i: usize) -> usize {
        self.sigma[i - 1]
    }

    pub fn eps_times_2(&self) -> Vec<BigInt> {
        self.eps.iter().map(|e| e.twice().clone()).collect()
    }
}

/// `2x_i - alpha_i`.
pub fn sq_generator(a: &BottMatrix, i: usize) -> Class2 {
    &Class2::basis(a.n(), i).scale(&BigInt::from(2)) - &a.alpha(i)
}

/// Reads off `σ` and `ε` for `phi`, checking the exact identity and that
/// levels are preserved.
pub fn extract_sigma_eps(
    phi: &GradedIso,
    tower_a: &DecompositionTower,
    tower_b: &DecompositionTower,
) -> Result<SigmaEps> {
    if tower_a.source() != phi.source() || tower_b.source() != phi.target() {
        return Err(Error::ContextMismatch);
    }
    let n = phi.n();
    let mut sigma = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        let z = phi.apply2(&sq_generator(phi.source(), i));
        let s = z.height();
        let fail = |reason: String| Error::ExtractionFailure { index: i, reason };
        if s == 0 {
            return Err(fail("image is zero".into()));
        }
        let e2 = z.coeff(s).clone();
        let expected = sq_generator(phi.target(), s).scale(&e2);
        if z.scale(&BigInt::from(2)) != expected {
            return Err(fail(format!(
                "image {z} is not a multiple of 2y_{s} - beta_{s}"
            )));
        }
        if used[s] {
            return Err(fail(format!("sigma is not injective at {s}")));
        }
        used[s] = true;
        let (la, lb) = (tower_a.index_level(i), tower_b.index_level(s));
        if la != lb {
            return Err(fail(format!(
                "level {la} of x_{i} differs from level {lb} of y_{s}"
            )));
        }
        sigma.push(s);
        eps.push(Half::from_twice(e2));
    }
    Ok(SigmaEps { sigma, eps })
}

/// All isomorphisms with `|c_ij| <= bound`, in ascending order of `C`.
///
/// Rows are chosen one at a time. For row `i` the image of `2x_i - alpha_i`
/// must be a half-integer multiple of some `2y_s - beta_s` with `y_s` at the
/// level of `x_i` and `s` not yet used; only those candidates are tried.
pub fn search_isos(a: &BottMatrix, b: &BottMatrix, bound: u32) -> Vec<GradedIso> {
    let n = a.n();
    if b.n() != n {
        return Vec::new();
    }
    let levels = match (decompose_tower(a), decompose_tower(b)) {
        (Ok(ta), Ok(tb)) => Some((
            (1..=n).map(|i| ta.index_level(i)).collect::<Vec<_>>(),
            (1..=n).map(|i| tb.index_level(i)).collect::<Vec<_>>(),
        )),
        _ => None,
    };
    let search = PrunedSearch {
        a,
        b,
        bound: BigInt::from(bound),
        levels,
        gens: (1..=n).map(|s| sq_generator(b, s)).collect(),
    };
    let first = search.candidates(1, &[], &vec![false; n + 1]);
    let found: Vec<Vec<IntMatrix>> = first
        .into_par_iter()
        .map(|(s, row)| {
            let mut used = vec![false; n + 1];
            used[s] = true;
            let mut rows = vec![row];
            let mut out = Vec::new();
            search.descend(&mut rows, &mut used, &mut out);
            out
        })
        .collect();
    collect_isos(a, b, found.into_iter().flatten())
}

struct PrunedSearch<'a> {
    a: &'a BottMatrix,
    b: &'a BottMatrix,
    bound: BigInt,
    levels: Option<(Vec<usize>, Vec<usize>)>,
    gens: Vec<Class2>,
}

impl PrunedSearch<'_> {
    fn image_of_alpha(&self, i: usize, rows: &[Class2]) -> Class2 {
        let n = self.a.n();
        let mut out = Class2::zero(n);
        for j in 1..i {
            let c = self.a.entry(i, j);
            if !c.is_zero() {
                out = &out + &rows[j - 1].scale(c);
            }
        }
        out
    }

    fn candidates(&self, i: usize, rows: &[Class2], used: &[bool]) -> Vec<(usize, Class2)> {
        let n = self.a.n();
        let phi_alpha = self.image_of_alpha(i, rows);
        let two_phi_alpha = phi_alpha.scale(&BigInt::from(2));
        let four = BigInt::from(4);
        let mut out = Vec::new();
        for s in 1..=n {
            if used[s] {
                continue;
            }
            if let Some((la, lb)) = &self.levels {
                if la[i - 1] != lb[s - 1] {
                    continue;
                }
            }
            // 4 phi(x_i) = 2 phi(alpha_i) + e (2y_s - beta_s), e = 2 eps != 0,
            // and the y_s coefficient (phi_alpha_s + e)/2 stays within bound.
            let centre = phi_alpha.coeff(s);
            let twice_bound: BigInt = &self.bound * 2;
            let lo = -&twice_bound - centre;
            let hi = &twice_bound - centre;
            let mut e = lo;
            while e <= hi {
                if !e.is_zero() {
                    let numer = &two_phi_alpha + &self.gens[s - 1].scale(&e);
                    if let Some(row) = numer.div_exact(&four) {
                        if row.coeffs().iter().all(|c| c.abs() <= self.bound)
                            && product2(&row, &(&row - &phi_alpha), self.b).is_zero()
                        {
                            out.push((s, row));
                        }
                    }
                }
                e += 1;
            }
        }
        out
    }

    fn descend(&self, rows: &mut Vec<Class2>, used: &mut [bool], out: &mut Vec<IntMatrix>) {
        let n = self.a.n();
        let i = rows.len() + 1;
        if i > n {
            let m = IntMatrix::from_class_rows(rows).expect("square");
            if m.det().abs().is_one() {
                out.push(m);
            }
            return;
        }
        for (s, row) in self.candidates(i, rows, used) {
            used[s] = true;
            rows.push(row);
            self.descend(rows, used, out);
            rows.pop();
            used[s] = false;
        }
    }
}

/// Unpruned search: every row in `[-bound, bound]^n` satisfying its
/// relation, then the determinant check. Exponential; an oracle for
/// [`search_isos`] on small instances.
pub fn search_isos_exhaustive(a: &BottMatrix, b: &BottMatrix, bound: u32) -> Vec<GradedIso> {
    let n = a.n();
    if b.n() != n {
        return Vec::new();
    }
    let box_points = all_vectors(n, bound as i64);
    let mut out = Vec::new();
    let mut rows = Vec::new();
    exhaustive_descend(a, b, &box_points, &mut rows, &mut out);
    collect_isos(a, b, out.into_iter())
}

fn exhaustive_descend(
    a: &BottMatrix,
    b: &BottMatrix,
    box_points: &[Class2],
    rows: &mut Vec<Class2>,
    out: &mut Vec<IntMatrix>,
) {
    let n = a.n();
    let i = rows.len() + 1;
    if i > n {
        let m = IntMatrix::from_class_rows(rows).expect("square");
        if m.det().abs().is_one() {
            out.push(m);
        }
        return;
    }
    let mut phi_alpha = Class2::zero(n);
    for j in 1..i {
        phi_alpha = &phi_alpha + &rows[j - 1].scale(a.entry(i, j));
    }
    for cand in box_points {
        if product2(cand, &(cand - &phi_alpha), b).is_zero() {
            rows.push(cand.clone());
            exhaustive_descend(a, b, box_points, rows, out);
            rows.pop();
        }
    }
}

pub(crate) fn all_vectors(n: usize, bound: i64) -> Vec<Class2> {
    let mut out = Vec::new();
    let mut cur = vec![-bound; n];
    loop {
        out.push(Class2::from_i64(&cur));
        let mut p = 0;
        loop {
            if p == n {
                return out;
            }
            if cur[p] < bound {
                cur[p] += 1;
                break;
            }
            cur[p] = -bound;
            p += 1;
        }
    }
}

fn collect_isos(
    a: &BottMatrix,
    b: &BottMatrix,
    found: impl Iterator<Item = IntMatrix>,
) -> Vec<GradedIso> {
    let unique: BTreeSet<IntMatrix> = found.collect();
    unique
        .into_iter()
        .map(|m| {
            GradedIso::new(a.clone(), b.clone(), m).expect("search only yields valid isomorphisms")
        })
        .collect()
}

/// Search bound from `BOTT_SEARCH_BOUND`, falling back to the default.
pub fn search_bound_from_env() -> u32 {
    std::env::var("BOTT_SEARCH_BOUND")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SEARCH_BOUND)
}
