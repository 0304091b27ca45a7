//! Height reduction, stability raising and certified stabilization.
//!
//! [`key_step`] lowers the height of `phi(x_{k+1})` by moves on the target,
//! [`raise_stability`] repeats it (detouring through the source when the
//! last entry is odd) until `phi` is `(k+1)`-stable, and [`stabilize_full`]
//! iterates that until the isomorphism is `(n-2)`-stable. Every identity the
//! construction relies on is re-checked as it runs; a failed check surfaces
//! as `ContractViolation` or `ProofPathViolation`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::iso::GradedIso;
use crate::json::{CertificateDoc, IsoDoc, MoveSeqDoc, CERTIFICATE_SCHEMA_VERSION};
use crate::moves::{MoveKind, MoveSeq};
use crate::ring::{product2, BottMatrix, Class2, Half, HalfClass2};
use crate::structure::{decompose_tower, same_block, same_block_in};

/// `phi(x_{k+1}) = eps (2y_ell - beta_bar_ell) + w` with `w ∈ F_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    AlreadyStable,
    Split { ell: usize, eps: Half, w: Class2 },
}

/// Splits `phi(x_{k+1})` for a `k`-stable `phi`.
pub fn decompose_xk(phi: &GradedIso, k: usize) -> Result<Decomposition> {
    let n = phi.n();
    if k >= n {
        return Err(Error::Range {
            index: k,
            expected: format!("k < {n}"),
        });
    }
    if !phi.is_stable(k) {
        return Err(Error::ContractViolation(format!(
            "isomorphism is not {k}-stable"
        )));
    }
    let img = phi.image(k + 1);
    let ell = img.height();
    if ell == k + 1 {
        return Ok(Decomposition::AlreadyStable);
    }
    if ell <= k {
        return Err(Error::DecompositionInconsistent(format!(
            "phi(x_{}) = {img} lies in F_{k}",
            k + 1
        )));
    }
    let b = phi.target();
    let e2 = img.coeff(ell).clone();
    for j in k + 1..ell {
        let lhs = img.coeff(j) * 2;
        let rhs = -(&e2 * b.entry(ell, j));
        if lhs != rhs {
            return Err(Error::DecompositionInconsistent(format!(
                "coefficient of y_{j} in phi(x_{}) is {}, expected -({e2}/2)*{}",
                k + 1,
                img.coeff(j),
                b.entry(ell, j)
            )));
        }
    }
    Ok(Decomposition::Split {
        ell,
        eps: Half::from_twice(e2),
        w: img.keep_lower(k),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepCase {
    Zero,
    Even,
    Odd,
}

/// Record of one height reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyStepTrace {
    pub k: usize,
    pub ell: usize,
    /// `b_{ell, ell-1}` of the target before the step.
    pub p: BigInt,
    pub eps: Half,
    pub w: Class2,
    pub u: HalfClass2,
    pub case: StepCase,
    /// Target-side moves; `moves.composite` is the `g` of the step.
    pub moves: MoveSeq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyStep {
    pub trace: KeyStepTrace,
    /// `g ∘ phi`.
    pub phi_new: GradedIso,
}

fn violation(msg: String) -> Error {
    Error::ContractViolation(msg)
}

/// Lowers the height of `phi(x_{k+1})` by moves on the target.
pub fn key_step(phi: &GradedIso, k: usize) -> Result<KeyStep> {
    let (ell, eps, w) = match decompose_xk(phi, k)? {
        Decomposition::AlreadyStable => {
            return Err(violation(format!(
                "phi(x_{}) already lies in F_{}",
                k + 1,
                k + 1
            )));
        }
        Decomposition::Split { ell, eps, w } => (ell, eps, w),
    };
    let b = phi.target();
    let n = b.n();
    let e2 = eps.twice();
    let beta_ell = b.alpha(ell);
    let bar_ell = beta_ell.drop_lower(k);
    let phi_alpha = phi.apply2(&phi.source().alpha(k + 1));

    // u = (-2w + phi(alpha_{k+1})) / eps
    let u_num = (&phi_alpha - &w.scale(&BigInt::from(2))).scale(&BigInt::from(2));
    let u = HalfClass2::from_ratio(&u_num, e2)
        .ok_or_else(|| violation(format!("u = ({u_num})/({e2}) has denominator above 2")))?;
    let u2 = u.doubled();
    let four_diff = (&beta_ell - &bar_ell).scale(&BigInt::from(4));
    if four_diff != u2 {
        return Err(violation(format!(
            "beta_{ell} differs from beta_bar_{ell} + u/2"
        )));
    }
    let two_bar = bar_ell.scale(&BigInt::from(2));
    if !product2(&bar_ell, &(&two_bar + &u2), b).is_zero() {
        return Err(violation(format!(
            "beta_bar_{ell} (beta_bar_{ell} + u) is nonzero"
        )));
    }

    let p = b.entry(ell, ell - 1).clone();
    let mut g = MoveSeq::empty(b);
    let case = if p.is_zero() {
        g.perform(&MoveKind::Switch { j: ell - 1 })?;
        StepCase::Zero
    } else {
        let bar_prev = b.alpha(ell - 1).drop_lower(k);
        let y_prev = Class2::basis(n, ell - 1);
        let expected = (&y_prev.scale(&BigInt::from(2)) - &bar_prev).scale(&p);
        if two_bar != expected {
            return Err(violation(format!(
                "beta_bar_{ell} is not {p} (y_{} - beta_bar_{}/2)",
                ell - 1,
                ell - 1
            )));
        }
        if p.is_even() {
            let v = y_prev.scale(&(&p / 2));
            if !product2(&v, &(&beta_ell - &v), b).is_zero() {
                return Err(violation(format!("v = {v} fails v (beta_{ell} - v) = 0")));
            }
            g.perform(&MoveKind::Twist { j: ell, v })?;
            if !g.end.entry(ell, ell - 1).is_zero() {
                return Err(violation(format!(
                    "twist left b'_({ell},{}) nonzero",
                    ell - 1
                )));
            }
            g.perform(&MoveKind::Switch { j: ell - 1 })?;
            StepCase::Even
        } else {
            if ell <= k + 2 {
                return Err(Error::OddAtBoundary { ell, k });
            }
            let v = bar_prev.div_exact(&BigInt::from(2)).ok_or_else(|| {
                violation(format!(
                    "beta_bar_{} = {bar_prev} is not divisible by 2",
                    ell - 1
                ))
            })?;
            let beta_prev = b.alpha(ell - 1);
            let lhs = (&beta_prev - &bar_prev).scale(&(&p * 2));
            if lhs != -&u2 {
                return Err(violation(format!(
                    "beta_{} differs from beta_bar_{} - u/p",
                    ell - 1,
                    ell - 1
                )));
            }
            let pv2 = v.scale(&(&p * 2));
            if !product2(&v, &(&pv2 - &u2), b).is_zero() {
                return Err(violation(format!("v (v - u/p) is nonzero for v = {v}")));
            }
            g.perform(&MoveKind::Twist { j: ell - 1, v })?;
            for j in k + 1..ell - 1 {
                if !g.end.entry(ell - 1, j).is_zero() {
                    return Err(violation(format!(
                        "twist left b'_({},{j}) nonzero",
                        ell - 1
                    )));
                }
            }
            let entry = g.end.entry(ell, ell - 2).clone();
            if !entry.is_zero() {
                return Err(violation(format!(
                    "b'_({ell},{}) = {entry}, expected 0",
                    ell - 2
                )));
            }
            g.perform(&MoveKind::Switch { j: ell - 2 })?;
            g.perform(&MoveKind::Switch { j: ell - 1 })?;
            StepCase::Odd
        }
    };

    let phi_new = GradedIso::compose(&g.composite, phi)?;
    let new_height = phi_new.image(k + 1).height();
    if new_height >= ell {
        return Err(violation(format!(
            "height of phi(x_{}) went from {ell} to {new_height}",
            k + 1
        )));
    }
    if !g.composite.is_stable(k) || !phi_new.is_stable(k) {
        return Err(violation(format!("step broke {k}-stability")));
    }
    let cutoff = if case == StepCase::Odd {
        ell - 2
    } else {
        ell - 1
    };
    for i in 1..cutoff {
        if g.end.row(i) != b.row(i) {
            return Err(violation(format!(
                "row {i} changed below the cutoff {cutoff}"
            )));
        }
    }
    Ok(KeyStep {
        trace: KeyStepTrace {
            k,
            ell,
            p,
            eps,
            w,
            u,
            case,
            moves: g,
        },
        phi_new,
    })
}

/// Facts the odd branch of [`raise_stability`] relies on, as observed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddBoundary {
    /// Target matrix when `phi(x_{k+1})` reached height `k+2`.
    pub target: BottMatrix,
    /// Source matrix when the image of `y'_{k+1}` reached height `k+3`,
    /// if it did.
    pub source_at_k3: Option<BottMatrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RaiseTrace {
    pub k: usize,
    pub target_steps: Vec<KeyStepTrace>,
    /// Steps applied to the inverse isomorphism, with source and target
    /// exchanged.
    pub source_steps: Vec<KeyStepTrace>,
    pub odd_boundary: Option<OddBoundary>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raise {
    /// Moves from `A'` to `A`.
    pub f: MoveSeq,
    /// Moves from `B` to `B'`.
    pub g: MoveSeq,
    /// `g ∘ phi ∘ f`.
    pub phi_new: GradedIso,
    pub trace: RaiseTrace,
}

fn proof_path(msg: String) -> Error {
    Error::ProofPathViolation(msg)
}

fn step_cap(n: usize) -> usize {
    n * (n + 2)
}

struct Budget {
    used: usize,
    cap: usize,
}

impl Budget {
    fn spend(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.cap {
            return Err(Error::NonTermination {
                steps: self.used - 1,
            });
        }
        Ok(())
    }
}

/// Makes a `k`-stable `phi` with `k = max_stable(phi)` at least `(k+1)`-stable.
pub fn raise_stability(phi: &GradedIso, k: usize) -> Result<Raise> {
    let mut budget = Budget {
        used: 0,
        cap: step_cap(phi.n()),
    };
    raise_with_budget(phi, k, &mut budget)
}

fn raise_with_budget(phi: &GradedIso, k: usize, budget: &mut Budget) -> Result<Raise> {
    let n = phi.n();
    let a = phi.source().clone();
    let b = phi.target().clone();
    let mut trace = RaiseTrace {
        k,
        target_steps: Vec::new(),
        source_steps: Vec::new(),
        odd_boundary: None,
    };
    if k >= n || !phi.is_stable(k) {
        return Err(violation(format!(
            "isomorphism is not {k}-stable with k < {n}"
        )));
    }
    if phi.is_stable(k + 1) {
        return Ok(Raise {
            f: MoveSeq::empty(&a),
            g: MoveSeq::empty(&b),
            phi_new: phi.clone(),
            trace,
        });
    }
    if phi.max_stable() != k {
        return Err(violation(format!(
            "k = {k} is not the largest stable index {}",
            phi.max_stable()
        )));
    }

    let mut g = MoveSeq::empty(&b);
    let mut cur = phi.clone();
    let mut ell = cur.image(k + 1).height();
    while ell > k + 2 {
        budget.spend()?;
        let step = key_step(&cur, k)?;
        g.append(&step.trace.moves)?;
        cur = step.phi_new;
        let next = cur.image(k + 1).height();
        if next >= ell {
            return Err(proof_path(format!("height did not drop: {ell} -> {next}")));
        }
        ell = next;
        trace.target_steps.push(step.trace);
    }
    if ell != k + 2 {
        return Err(proof_path(format!(
            "height {ell} after target steps, expected {}",
            k + 2
        )));
    }

    let p = g.end.entry(k + 2, k + 1).clone();
    if p.is_even() {
        budget.spend()?;
        let step = key_step(&cur, k)?;
        g.append(&step.trace.moves)?;
        cur = step.phi_new;
        trace.target_steps.push(step.trace);
        return finish(&a, g, cur, k, trace);
    }

    // b'_{k+2,k+1} odd: detour through the source.
    let b_now = g.end.clone();
    let tower = decompose_tower(&b_now)?;
    if tower.index_level(k + 1) != tower.index_level(k + 2) {
        return Err(proof_path(format!(
            "y'_{} and y'_{} sit at different levels",
            k + 1,
            k + 2
        )));
    }
    if !same_block_in(&b_now, &tower, k + 1, k + 2) {
        return Err(proof_path(format!(
            "{} and {} are not in one block of B'",
            k + 1,
            k + 2
        )));
    }
    let mut boundary = OddBoundary {
        target: b_now,
        source_at_k3: None,
    };

    let mut psi = cur.inverse()?;
    let mut h = MoveSeq::empty(&a);
    let x_next = Class2::basis(n, k + 1);
    let row_k1: Vec<BigInt> = a.row(k + 1).to_vec();
    let mut ell_a = psi.image(k + 1).height();
    while ell_a >= k + 3 {
        if ell_a == k + 3 {
            let a_now = h.end.clone();
            if !a_now.entry(k + 3, k + 2).is_even() {
                return Err(proof_path(format!("a'_({},{}) is odd", k + 3, k + 2)));
            }
            if !same_block(&a_now, k + 1, k + 3) {
                return Err(proof_path(format!(
                    "{} and {} are not in one block of A'",
                    k + 1,
                    k + 3
                )));
            }
            boundary.source_at_k3 = Some(a_now);
        }
        budget.spend()?;
        let step = key_step(&psi, k)?;
        h.append(&step.trace.moves)?;
        psi = step.phi_new;
        if h.end.row(k + 1) != row_k1.as_slice() {
            return Err(proof_path(format!("source row {} changed", k + 1)));
        }
        if h.composite.image(k + 1) != x_next {
            return Err(proof_path(format!("source moves moved x_{}", k + 1)));
        }
        let next = psi.image(k + 1).height();
        if next >= ell_a {
            return Err(proof_path(format!(
                "source height did not drop: {ell_a} -> {next}"
            )));
        }
        ell_a = next;
        trace.source_steps.push(step.trace);
    }
    if ell_a != k + 2 {
        return Err(proof_path(format!(
            "source height {ell_a}, expected {}",
            k + 2
        )));
    }
    trace.odd_boundary = Some(boundary);

    let f = h.inverse()?;
    let phi_new = GradedIso::compose(&cur, &f.composite)?;
    if phi_new != psi.inverse()? {
        return Err(proof_path(
            "source detour does not invert the tracked map".into(),
        ));
    }
    if !phi_new.is_stable(k + 2) {
        return Err(proof_path(format!(
            "odd branch ended below {}-stability",
            k + 2
        )));
    }
    Ok(Raise {
        f,
        g,
        phi_new,
        trace,
    })
}

fn finish(
    a: &BottMatrix,
    g: MoveSeq,
    cur: GradedIso,
    k: usize,
    trace: RaiseTrace,
) -> Result<Raise> {
    if !cur.is_stable(k + 1) {
        return Err(proof_path(format!(
            "final key step left phi not {}-stable",
            k + 1
        )));
    }
    Ok(Raise {
        f: MoveSeq::empty(a),
        g,
        phi_new: cur,
        trace,
    })
}

/// An `(n-2)`-stable isomorphism `phi' = g ∘ phi ∘ f` with the move chains
/// realizing `f` and `g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizationCertificate {
    pub a: BottMatrix,
    pub b: BottMatrix,
    pub phi: GradedIso,
    /// From `A'` to `A`.
    pub f_seq: MoveSeq,
    /// From `B` to `B'`.
    pub g_seq: MoveSeq,
    pub phi_prime: GradedIso,
    pub k_final: usize,
}

impl StabilizationCertificate {
    pub fn to_doc(&self) -> CertificateDoc {
        CertificateDoc {
            schema_version: CERTIFICATE_SCHEMA_VERSION,
            a: (&self.a).into(),
            b: (&self.b).into(),
            phi: IsoDoc::from(&self.phi),
            f_seq: MoveSeqDoc::from(&self.f_seq),
            g_seq: MoveSeqDoc::from(&self.g_seq),
            phi_prime: IsoDoc::from(&self.phi_prime),
            k_final: self.k_final,
        }
    }

    /// Total number of moves on both sides.
    pub fn move_count(&self) -> usize {
        self.f_seq.len() + self.g_seq.len()
    }
}

pub fn stabilize_full(phi: &GradedIso) -> Result<StabilizationCertificate> {
    stabilize_traced(phi).map(|(cert, _)| cert)
}

/// [`stabilize_full`] together with the trace of every raise.
pub fn stabilize_traced(phi: &GradedIso) -> Result<(StabilizationCertificate, Vec<RaiseTrace>)> {
    let n = phi.n();
    let mut budget = Budget {
        used: 0,
        cap: step_cap(n),
    };
    let mut cur = phi.clone();
    let mut k = cur.max_stable();
    let mut fs: Vec<MoveSeq> = Vec::new();
    let mut g_seq = MoveSeq::empty(phi.target());
    let mut traces = Vec::new();
    while k + 2 < n {
        if traces.len() >= n {
            return Err(Error::NonTermination { steps: budget.used });
        }
        let raise = raise_with_budget(&cur, k, &mut budget)?;
        let next = raise.phi_new.max_stable();
        if next <= k {
            return Err(proof_path(format!("stability did not increase past {k}")));
        }
        g_seq.append(&raise.g)?;
        fs.push(raise.f);
        traces.push(raise.trace);
        cur = raise.phi_new;
        k = next;
    }
    let mut f_seq = MoveSeq::empty(cur.source());
    for f in fs.iter().rev() {
        f_seq.append(f)?;
    }
    let expected = GradedIso::compose(
        &g_seq.composite,
        &GradedIso::compose(phi, &f_seq.composite)?,
    )?;
    if expected != cur {
        return Err(violation(
            "accumulated moves do not reproduce the final isomorphism".into(),
        ));
    }
    let cert = StabilizationCertificate {
        a: phi.source().clone(),
        b: phi.target().clone(),
        phi: phi.clone(),
        f_seq,
        g_seq,
        phi_prime: cur,
        k_final: k,
    };
    Ok((cert, traces))
}

/// Re-checks a serialized certificate from scratch; the error names the
/// first failed check.
pub fn verify_certificate(doc: &CertificateDoc) -> std::result::Result<(), String> {
    if doc.schema_version != CERTIFICATE_SCHEMA_VERSION {
        return Err(format!(
            "schema_version {} is not {CERTIFICATE_SCHEMA_VERSION}",
            doc.schema_version
        ));
    }
    let a = doc.a.to_matrix().map_err(|e| format!("A: {e}"))?;
    let b = doc.b.to_matrix().map_err(|e| format!("B: {e}"))?;
    let n = a.n();
    let phi_c = doc.phi.to_matrix().map_err(|e| format!("phi: {e}"))?;
    let phi = GradedIso::new(a.clone(), b.clone(), phi_c).map_err(|e| format!("phi: {e}"))?;
    let f = doc.f_seq.rebuild().map_err(|e| format!("f_seq: {e}"))?;
    let g = doc.g_seq.rebuild().map_err(|e| format!("g_seq: {e}"))?;
    if f.end != a {
        return Err("f_seq does not end at A".into());
    }
    if g.start != b {
        return Err("g_seq does not start at B".into());
    }
    let pp = doc
        .phi_prime
        .to_matrix()
        .map_err(|e| format!("phi_prime: {e}"))?;
    let phi_prime = GradedIso::new(f.start.clone(), g.end.clone(), pp)
        .map_err(|e| format!("phi_prime: {e}"))?;
    let inner = GradedIso::compose(&phi, &f.composite).map_err(|e| format!("phi ∘ f: {e}"))?;
    let expected =
        GradedIso::compose(&g.composite, &inner).map_err(|e| format!("g ∘ phi ∘ f: {e}"))?;
    if expected != phi_prime {
        return Err("phi_prime differs from g ∘ phi ∘ f".into());
    }
    let k = phi_prime.max_stable();
    if doc.k_final != k {
        return Err(format!(
            "k_final is {} but phi_prime is maximally {k}-stable",
            doc.k_final
        ));
    }
    if k + 2 < n {
        return Err(format!("k_final = {k} is below n - 2 = {}", n - 2));
    }
    Ok(())
}
