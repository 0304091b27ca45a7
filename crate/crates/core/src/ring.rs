//! Exact arithmetic in `H*(B_n(A)) = Z[x_1..x_n] / (x_i^2 - alpha_i x_i)`.
//!
//! Indices are 1-based everywhere in the public surface. A class of degree
//! two is a plain coefficient vector ([`Class2`]); classes of arbitrary
//! degree ([`CohClass`]) carry their ring as context and are kept in normal
//! form on the square-free monomial basis.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

static ZERO: BigInt = BigInt::ZERO;

/// Strictly lower-triangular integer matrix defining a Bott tower.
///
/// Row `i` stores `a_{i,1}, ..., a_{i,i-1}`; every other entry is zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BottMatrix {
    rows: Vec<Vec<BigInt>>,
}

impl BottMatrix {
    pub fn new(n: usize, rows: Vec<Vec<BigInt>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("a Bott matrix needs n >= 1".into()));
        }
        if rows.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} rows, got {}",
                rows.len()
            )));
        }
        for (idx, row) in rows.iter().enumerate() {
            if row.len() != idx {
                return Err(Error::Shape(format!(
                    "row {} must have {} entries, got {}",
                    idx + 1,
                    idx,
                    row.len()
                )));
            }
        }
        Ok(BottMatrix { rows })
    }

    /// Builds a matrix from small integer rows; `n` is the number of rows.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| BigInt::from(v)).collect())
            .collect::<Vec<_>>();
        BottMatrix::new(rows.len(), rows)
    }

    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "a Bott matrix needs n >= 1");
        BottMatrix {
            rows: (0..n).map(|i| vec![BigInt::zero(); i]).collect(),
        }
    }

    /// The j-stage tower whose first column is all ones below the diagonal.
    pub fn h_matrix(j: usize) -> Self {
        let mut m = BottMatrix::zero(j);
        for row in m.rows.iter_mut().skip(1) {
            row[0] = BigInt::one();
        }
        m
    }

    /// Block-diagonal sum; the result is the matrix of the product tower.
    pub fn block_diagonal(blocks: &[BottMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.n()).sum();
        let mut m = BottMatrix::zero(n);
        let mut offset = 0;
        for b in blocks {
            for i in 1..=b.n() {
                for j in 1..i {
                    m.rows[offset + i - 1][offset + j - 1] = b.entry(i, j).clone();
                }
            }
            offset += b.n();
        }
        m
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `a_ij`, zero whenever `j >= i`.
    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        assert!(
            i >= 1 && i <= self.n() && j >= 1 && j <= self.n(),
            "index out of range"
        );
        if j < i {
            &self.rows[i - 1][j - 1]
        } else {
            &ZERO
        }
    }

    pub(crate) fn set_entry(&mut self, i: usize, j: usize, value: BigInt) {
        assert!(j < i, "only strictly lower entries can be set");
        self.rows[i - 1][j - 1] = value;
    }

    /// Stored entries of row `i`: `a_{i,1}, ..., a_{i,i-1}`.
    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.rows[i - 1]
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    /// `alpha_i = sum_j a_ij x_j` as a degree-2 class.
    pub fn alpha(&self, i: usize) -> Class2 {
        let mut coeffs = vec![BigInt::zero(); self.n()];
        coeffs[..i - 1].clone_from_slice(&self.rows[i - 1]);
        Class2(coeffs)
    }

    /// Whether `alpha_i^2 = 0` in this ring.
    pub fn alpha_square_zero(&self, i: usize) -> bool {
        let a = self.alpha(i);
        product2(&a, &a, self).is_zero()
    }

    /// Upper-left `k x k` block.
    pub fn sub_hat(&self, k: usize) -> Result<BottMatrix> {
        self.check_split(k)?;
        Ok(BottMatrix {
            rows: self.rows[..k].to_vec(),
        })
    }

    /// Lower-right `(n-k) x (n-k)` block: `a_bar_ij = a_{i+k, j+k}`.
    pub fn sub_bar(&self, k: usize) -> Result<BottMatrix> {
        self.check_split(k)?;
        Ok(BottMatrix {
            rows: self.rows[k..].iter().map(|r| r[k..].to_vec()).collect(),
        })
    }

    fn check_split(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.n() {
            return Err(Error::Range {
                index: k,
                expected: format!("1 <= k < {}", self.n()),
            });
        }
        Ok(())
    }
}

impl fmt::Display for BottMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (idx, row) in self.rows.iter().enumerate() {
            if idx > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// A degree-2 class `sum t_i x_i`, stored as its coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Class2(Vec<BigInt>);

impl Class2 {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        Class2(coeffs)
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Class2(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(n: usize) -> Self {
        Class2(vec![BigInt::zero(); n])
    }

    /// The generator `x_i`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut c = Class2::zero(n);
        c.0[i - 1] = BigInt::one();
        c
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn coeff(&self, i: usize) -> &BigInt {
        &self.0[i - 1]
    }

    pub fn set(&mut self, i: usize, value: BigInt) {
        self.0[i - 1] = value;
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// Smallest `k` with the class in `span{x_1..x_k}`; zero for the zero class.
    pub fn height(&self) -> usize {
        self.0
            .iter()
            .rposition(|c| !c.is_zero())
            .map_or(0, |p| p + 1)
    }

    /// Keeps the coefficients of `x_{k+1}, ..., x_n`.
    pub fn drop_lower(&self, k: usize) -> Class2 {
        let mut c = self.clone();
        for v in c.0.iter_mut().take(k) {
            v.set_zero();
        }
        c
    }

    /// Keeps the coefficients of `x_1, ..., x_k`.
    pub fn keep_lower(&self, k: usize) -> Class2 {
        let mut c = self.clone();
        for v in c.0.iter_mut().skip(k) {
            v.set_zero();
        }
        c
    }

    /// Gcd of the coefficients (zero for the zero class).
    pub fn content(&self) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|c| c.is_even())
    }

    /// Exact division by an integer, if every coefficient is divisible.
    pub fn div_exact(&self, d: &BigInt) -> Option<Class2> {
        if d.is_zero() {
            return None;
        }
        let mut out = Vec::with_capacity(self.n());
        for c in &self.0 {
            let (q, r) = c.div_rem(d);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(Class2(out))
    }

    /// Coefficients reduced into `{0, 1}`.
    pub fn mod2(&self) -> Vec<u8> {
        self.0.iter().map(|c| u8::from(c.is_odd())).collect()
    }

    pub fn scale(&self, s: &BigInt) -> Class2 {
        Class2(self.0.iter().map(|c| c * s).collect())
    }
}

impl Add for &Class2 {
    type Output = Class2;
    fn add(self, rhs: &Class2) -> Class2 {
        assert_eq!(self.n(), rhs.n(), "length mismatch");
        Class2(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Class2 {
    type Output = Class2;
    fn sub(self, rhs: &Class2) -> Class2 {
        assert_eq!(self.n(), rhs.n(), "length mismatch");
        Class2(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Class2 {
    type Output = Class2;
    fn neg(self) -> Class2 {
        Class2(self.0.iter().map(|a| -a).collect())
    }
}

impl Mul<&Class2> for &BigInt {
    type Output = Class2;
    fn mul(self, rhs: &Class2) -> Class2 {
        rhs.scale(self)
    }
}

impl fmt::Display for Class2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            if !a.is_one() {
                write!(f, "{a}")?;
            }
            write!(f, "x{}", idx + 1)?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// A half-integer scalar, stored as twice its value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Half {
    twice: BigInt,
}

impl Half {
    pub fn from_twice(twice: BigInt) -> Self {
        Half { twice }
    }

    pub fn twice(&self) -> &BigInt {
        &self.twice
    }

    pub fn is_integral(&self) -> bool {
        self.twice.is_even()
    }

    pub fn is_zero(&self) -> bool {
        self.twice.is_zero()
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_even() {
            write!(f, "{}", &self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Degree-2 class with coefficients in `(1/2)Z`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HalfClass2 {
    numerators: Class2,
    denominator: u8,
}

impl HalfClass2 {
    pub fn integral(c: Class2) -> Self {
        HalfClass2 {
            numerators: c,
            denominator: 1,
        }
    }

    /// `c / 2`, normalised to denominator 1 when possible.
    pub fn half_of(c: Class2) -> Self {
        HalfClass2::from_ratio(&c, &BigInt::from(2)).expect("division by two is dyadic")
    }

    /// `c / d` when the result has denominator 1 or 2.
    pub fn from_ratio(c: &Class2, d: &BigInt) -> Option<Self> {
        if let Some(q) = c.div_exact(d) {
            return Some(HalfClass2::integral(q));
        }
        let doubled = c.scale(&BigInt::from(2));
        doubled.div_exact(d).map(|numerators| HalfClass2 {
            numerators,
            denominator: 2,
        })
    }

    pub fn denominator(&self) -> u8 {
        self.denominator
    }

    pub fn numerators(&self) -> &Class2 {
        &self.numerators
    }

    /// Twice this class, always integral.
    pub fn doubled(&self) -> Class2 {
        if self.denominator == 2 {
            self.numerators.clone()
        } else {
            self.numerators.scale(&BigInt::from(2))
        }
    }

    /// The class itself when it is integral.
    pub fn to_integral(&self) -> Result<Class2> {
        if self.denominator == 1 {
            Ok(self.numerators.clone())
        } else {
            Err(Error::NotIntegral(format!("({})/2", self.numerators)))
        }
    }
}

/// A degree-4 class on the basis `{x_j x_i}_{j<i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Degree4 {
    n: usize,
    coeffs: Vec<BigInt>,
}

impl Degree4 {
    pub fn zero(n: usize) -> Self {
        Degree4 {
            n,
            coeffs: vec![BigInt::zero(); n * n.saturating_sub(1) / 2],
        }
    }

    fn slot(j: usize, i: usize) -> usize {
        debug_assert!(j < i);
        (i - 1) * (i - 2) / 2 + (j - 1)
    }

    /// Coefficient of `x_j x_i`; the order of the two indices is irrelevant.
    pub fn coeff(&self, j: usize, i: usize) -> &BigInt {
        let (lo, hi) = if j < i { (j, i) } else { (i, j) };
        assert!(lo < hi, "degree-4 basis has no squares");
        &self.coeffs[Self::slot(lo, hi)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Nonzero terms as `((j, i), coefficient)` with `j < i`, in basis order.
    pub fn terms(&self) -> Vec<((usize, usize), BigInt)> {
        let mut out = Vec::new();
        for i in 2..=self.n {
            for j in 1..i {
                let c = &self.coeffs[Self::slot(j, i)];
                if !c.is_zero() {
                    out.push(((j, i), c.clone()));
                }
            }
        }
        out
    }

    fn add_at(&mut self, j: usize, i: usize, v: BigInt) {
        self.coeffs[Self::slot(j, i)] += v;
    }
}

impl Sub for &Degree4 {
    type Output = Degree4;
    fn sub(self, rhs: &Degree4) -> Degree4 {
        Degree4 {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Display for Degree4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, ((j, i), c)) in terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*x{j}x{i}")?;
        }
        Ok(())
    }
}

/// Product of two degree-2 classes in the ring of `a`.
///
/// The coefficient of `x_j x_i` (`j < i`) is `u_i w_i a_ij + u_i w_j + u_j w_i`.
pub fn product2(u: &Class2, w: &Class2, a: &BottMatrix) -> Degree4 {
    let n = a.n();
    assert!(
        u.n() == n && w.n() == n,
        "class length does not match the ring"
    );
    let mut out = Degree4::zero(n);
    for i in 2..=n {
        let ui = u.coeff(i);
        let wi = w.coeff(i);
        let uw = ui * wi;
        for j in 1..i {
            let mut c = u.coeff(j) * wi + ui * w.coeff(j);
            let aij = a.entry(i, j);
            if !aij.is_zero() && !uw.is_zero() {
                c += &uw * aij;
            }
            if !c.is_zero() {
                out.add_at(j, i, c);
            }
        }
    }
    out
}

/// Square-free monomial `x_{i_1} ... x_{i_d}` with `i_1 < ... < i_d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    /// Sorts and deduplicates; panics on repeated indices.
    pub fn from_indices(indices: &[usize]) -> Self {
        let mut v = indices.to_vec();
        v.sort_unstable();
        let len = v.len();
        v.dedup();
        assert_eq!(len, v.len(), "monomial must be square-free");
        Monomial(v)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Number of generators (half the cohomological degree).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

// Graded, then lexicographic.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A formal polynomial in `x_1..x_n` before reduction, keyed by exponent vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: BigInt) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i - 1] = 1;
        let mut p = Polynomial::zero(n);
        p.add_term(e, BigInt::one());
        p
    }

    pub fn linear(c: &Class2) -> Self {
        let n = c.n();
        let mut p = Polynomial::zero(n);
        for i in 1..=n {
            if !c.coeff(i).is_zero() {
                let mut e = vec![0; n];
                e[i - 1] = 1;
                p.add_term(e, c.coeff(i).clone());
            }
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: BigInt) {
        assert_eq!(exponents.len(), self.n, "exponent vector length");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exponents) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigInt)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    /// Formal product, no reduction.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.n, BigInt::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }
}

/// Element of `H*(B_n(A))` in normal form on square-free monomials.
#[derive(Clone, Debug)]
pub struct CohClass {
    ctx: Arc<BottMatrix>,
    terms: BTreeMap<Monomial, BigInt>,
}

impl PartialEq for CohClass {
    fn eq(&self, other: &Self) -> bool {
        self.same_context(other) && self.terms == other.terms
    }
}

impl Eq for CohClass {}

impl CohClass {
    pub fn zero(ctx: Arc<BottMatrix>) -> Self {
        CohClass {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ctx: Arc<BottMatrix>) -> Self {
        let mut c = CohClass::zero(ctx);
        c.terms.insert(Monomial::one(), BigInt::one());
        c
    }

    pub fn generator(ctx: Arc<BottMatrix>, i: usize) -> Self {
        let mut c = CohClass::zero(ctx);
        c.terms.insert(Monomial(vec![i]), BigInt::one());
        c
    }

    pub fn from_class2(ctx: Arc<BottMatrix>, c: &Class2) -> Self {
        assert_eq!(ctx.n(), c.n(), "class length does not match the ring");
        let mut out = CohClass::zero(ctx);
        for i in 1..=c.n() {
            if !c.coeff(i).is_zero() {
                out.terms.insert(Monomial(vec![i]), c.coeff(i).clone());
            }
        }
        out
    }

    pub fn context(&self) -> &Arc<BottMatrix> {
        &self.ctx
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigInt> {
        &self.terms
    }

    pub fn coeff(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The component spanned by monomials with `d` generators.
    pub fn homogeneous(&self, d: usize) -> CohClass {
        CohClass {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.len() == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// The degree-2 part as a coefficient vector.
    pub fn to_class2(&self) -> Class2 {
        let mut c = Class2::zero(self.ctx.n());
        for (m, v) in &self.terms {
            if m.len() == 1 {
                c.set(m.0[0], v.clone());
            }
        }
        c
    }

    pub fn same_context(&self, other: &CohClass) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) || *self.ctx == *other.ctx
    }

    fn check_context(&self, other: &CohClass) -> Result<()> {
        if self.same_context(other) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn add(&self, other: &CohClass) -> Result<CohClass> {
        self.check_context(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &CohClass) -> Result<CohClass> {
        self.add(&other.scale(&-BigInt::one()))
    }

    pub fn scale(&self, s: &BigInt) -> CohClass {
        if s.is_zero() {
            return CohClass::zero(self.ctx.clone());
        }
        CohClass {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Normal-form product.
    pub fn multiply(&self, other: &CohClass) -> Result<CohClass> {
        self.check_context(other)?;
        let n = self.ctx.n();
        let mut raw = Polynomial::zero(n);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut e = vec![0u32; n];
                for &i in m1.0.iter().chain(&m2.0) {
                    e[i - 1] += 1;
                }
                raw.add_term(e, c1 * c2);
            }
        }
        Ok(reduce(&raw, &self.ctx))
    }

    pub fn pow(&self, k: u32) -> CohClass {
        let mut out = CohClass::one(self.ctx.clone());
        for _ in 0..k {
            out = out.multiply(self).expect("same context");
        }
        out
    }
}

impl fmt::Display for CohClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for i in &m.0 {
                write!(f, "*x{i}")?;
            }
        }
        Ok(())
    }
}

/// Rewrites `x_i^2 -> alpha_i x_i` until every monomial is square-free.
///
/// The largest repeated index is always rewritten first. Each rewrite lowers
/// that exponent and only raises exponents of smaller indices, so the
/// process terminates.
pub fn reduce(raw: &Polynomial, ctx: &Arc<BottMatrix>) -> CohClass {
    assert_eq!(
        raw.n(),
        ctx.n(),
        "polynomial lives in a different number of variables"
    );
    let mut out = CohClass::zero(ctx.clone());
    // Keys are reversed exponent vectors so that pop_last takes the term
    // with the largest top exponent first and merges like terms early.
    let mut work: BTreeMap<Vec<u32>, BigInt> = raw
        .terms()
        .map(|(e, c)| (e.iter().rev().copied().collect(), c.clone()))
        .collect();
    let n = ctx.n();
    while let Some((rev, coeff)) = work.pop_last() {
        if coeff.is_zero() {
            continue;
        }
        // position in `rev` of the largest index with exponent >= 2
        match rev.iter().position(|&e| e >= 2) {
            None => {
                let indices = rev
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e == 1)
                    .map(|(p, _)| n - p)
                    .collect::<Vec<_>>();
                out.add_term(Monomial::from_indices(&indices), coeff);
            }
            Some(p) => {
                let i = n - p;
                let mut base = rev.clone();
                base[p] -= 1;
                for (j0, a) in ctx.row(i).iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    let mut e = base.clone();
                    e[n - (j0 + 1)] += 1;
                    *work.entry(e).or_insert_with(BigInt::zero) += &coeff * a;
                }
            }
        }
    }
    out
}

/// Smallest `k` with `c` in `F_k`; zero for the zero class.
pub fn height(c: &Class2) -> usize {
    c.height()
}
