//! Switching and twisting: matrix rewrites that come with an induced
//! isomorphism of cohomology rings, and chains of them.
//!
//! Every constructed move validates its induced isomorphism from scratch,
//! so a move that exists is a move whose ring-level claim has been checked.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::iso::GradedIso;
use crate::matrix::IntMatrix;
use crate::ring::{product2, BottMatrix, Class2};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    /// Exchange stages `j` and `j+1`.
    Switch { j: usize },
    /// Replace `beta_j` by `beta_j - 2v`.
    Twist { j: usize, v: Class2 },
}

impl MoveKind {
    pub fn j(&self) -> usize {
        match self {
            MoveKind::Switch { j } | MoveKind::Twist { j, .. } => *j,
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveKind::Switch { j } => write!(f, "switch(j={j})"),
            MoveKind::Twist { j, v } => write!(f, "twist(j={j}, v={v})"),
        }
    }
}

/// One realizable move together with its induced isomorphism
/// `H*(B(before)) -> H*(B(after))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub before: BottMatrix,
    pub after: BottMatrix,
    pub induced: GradedIso,
}

impl Move {
    /// Performs `kind` on `before`.
    pub fn perform(before: &BottMatrix, kind: &MoveKind) -> Result<Move> {
        match kind {
            MoveKind::Switch { j } => switch(before, *j),
            MoveKind::Twist { j, v } => twist(before, *j, v),
        }
    }

    /// The move undoing this one, starting from `after`.
    pub fn inverse(&self) -> Result<Move> {
        match &self.kind {
            MoveKind::Switch { j } => switch(&self.after, *j),
            MoveKind::Twist { j, v } => twist(&self.after, *j, &-v),
        }
    }
}

/// Exchanges rows and columns `j` and `j+1`; needs `b_{j+1,j} = 0`.
pub fn switch(b: &BottMatrix, j: usize) -> Result<Move> {
    let n = b.n();
    if j == 0 || j >= n {
        return Err(Error::Range {
            index: j,
            expected: format!("1 <= j < {n}"),
        });
    }
    let entry = b.entry(j + 1, j);
    if !entry.is_zero() {
        return Err(Error::SwitchBlocked {
            j,
            entry: entry.clone(),
        });
    }
    let swap = |i: usize| match i {
        i if i == j => j + 1,
        i if i == j + 1 => j,
        i => i,
    };
    let mut after = BottMatrix::zero(n);
    for i in 2..=n {
        for k in 1..i {
            let v = b.entry(swap(i), swap(k));
            if !v.is_zero() {
                after.set_entry(i, k, v.clone());
            }
        }
    }
    let mut c = IntMatrix::zero(n);
    for i in 1..=n {
        c.set(i, swap(i), BigInt::one());
    }
    let induced = GradedIso::new(b.clone(), after.clone(), c).map_err(|e| {
        Error::ContractViolation(format!("switch at {j} induced no isomorphism: {e}"))
    })?;
    Ok(Move {
        kind: MoveKind::Switch { j },
        before: b.clone(),
        after,
        induced,
    })
}

/// Twists stage `j` by `v ∈ F_{j-1}` with `v (beta_j - v) = 0`.
///
/// Rows below `j` are kept, row `j` becomes `beta_j - 2v`, and each row
/// `i > j` becomes `beta_i + b_ij v`. The induced isomorphism fixes every
/// generator except `y_j -> y'_j + v`.
pub fn twist(b: &BottMatrix, j: usize, v: &Class2) -> Result<Move> {
    let n = b.n();
    if j == 0 || j > n {
        return Err(Error::Range {
            index: j,
            expected: format!("1 <= j <= {n}"),
        });
    }
    if v.n() != n {
        return Err(Error::TwistInvalid(format!(
            "v has {} coefficients, expected {n}",
            v.n()
        )));
    }
    if v.height() >= j {
        return Err(Error::TwistInvalid(format!(
            "v = {v} is not in F_{}",
            j - 1
        )));
    }
    let beta_j = b.alpha(j);
    let residue = product2(v, &(&beta_j - v), b);
    if !residue.is_zero() {
        return Err(Error::TwistInvalid(format!(
            "v (beta_{j} - v) = {residue}, expected 0"
        )));
    }
    let mut after = b.clone();
    let two_v = v.scale(&BigInt::from(2));
    for k in 1..j {
        after.set_entry(j, k, b.entry(j, k) - two_v.coeff(k));
    }
    for i in j + 1..=n {
        let bij = b.entry(i, j);
        if bij.is_zero() {
            continue;
        }
        for k in 1..j {
            after.set_entry(i, k, b.entry(i, k) + bij * v.coeff(k));
        }
    }
    let mut c = IntMatrix::identity(n);
    for k in 1..j {
        c.set(j, k, v.coeff(k).clone());
    }
    let induced = GradedIso::new(b.clone(), after.clone(), c).map_err(|e| {
        Error::ContractViolation(format!("twist at {j} induced no isomorphism: {e}"))
    })?;
    Ok(Move {
        kind: MoveKind::Twist { j, v: v.clone() },
        before: b.clone(),
        after,
        induced,
    })
}

/// A chain of moves from `start` to `end`; `composite` is the composition
/// of all induced isomorphisms, as a map `H*(B(start)) -> H*(B(end))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveSeq {
    pub start: BottMatrix,
    pub moves: Vec<Move>,
    pub end: BottMatrix,
    pub composite: GradedIso,
}

impl MoveSeq {
    pub fn empty(start: &BottMatrix) -> Self {
        MoveSeq {
            start: start.clone(),
            moves: Vec::new(),
            end: start.clone(),
            composite: GradedIso::identity(start),
        }
    }

    /// Rebuilds a chain from its move kinds, validating every step.
    pub fn from_kinds(start: &BottMatrix, kinds: &[MoveKind]) -> Result<Self> {
        let mut seq = MoveSeq::empty(start);
        for kind in kinds {
            seq.perform(kind)?;
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn kinds(&self) -> Vec<MoveKind> {
        self.moves.iter().map(|m| m.kind.clone()).collect()
    }

    /// Performs `kind` on the current end and appends it.
    pub fn perform(&mut self, kind: &MoveKind) -> Result<&Move> {
        let mv = Move::perform(&self.end, kind)?;
        self.push(mv)?;
        Ok(self.moves.last().expect("just pushed"))
    }

    pub fn push(&mut self, mv: Move) -> Result<()> {
        if mv.before != self.end {
            return Err(Error::ContextMismatch);
        }
        self.composite = GradedIso::compose(&mv.induced, &self.composite)?;
        self.end = mv.after.clone();
        self.moves.push(mv);
        Ok(())
    }

    pub fn append(&mut self, other: &MoveSeq) -> Result<()> {
        for mv in &other.moves {
            self.push(mv.clone())?;
        }
        Ok(())
    }

    /// The chain of inverse moves from `end` back to `start`.
    pub fn inverse(&self) -> Result<MoveSeq> {
        let mut out = MoveSeq::empty(&self.end);
        for mv in self.moves.iter().rev() {
            out.push(mv.inverse()?)?;
        }
        Ok(out)
    }
}

/// Re-verifies a chain from scratch: linkage, every move recomputed from
/// its `before` matrix and kind, and the composite.
pub fn replay(seq: &MoveSeq) -> std::result::Result<(), String> {
    let mut current = seq.start.clone();
    let mut composite = GradedIso::identity(&seq.start);
    for (idx, mv) in seq.moves.iter().enumerate() {
        let step = idx + 1;
        if mv.before != current {
            return Err(format!(
                "move {step} ({}) does not start where move {idx} ended",
                mv.kind
            ));
        }
        let fresh = Move::perform(&mv.before, &mv.kind)
            .map_err(|e| format!("move {step} ({}) is not admissible: {e}", mv.kind))?;
        if fresh.after != mv.after {
            return Err(format!(
                "move {step} ({}) records a wrong result matrix",
                mv.kind
            ));
        }
        if fresh.induced != mv.induced {
            return Err(format!(
                "move {step} ({}) records a wrong induced isomorphism",
                mv.kind
            ));
        }
        composite = GradedIso::compose(&fresh.induced, &composite)
            .map_err(|e| format!("move {step}: composition failed: {e}"))?;
        current = fresh.after;
    }
    if current != seq.end {
        return Err("recorded end matrix differs from the replayed one".into());
    }
    if composite != seq.composite {
        return Err("recorded composite differs from the replayed one".into());
    }
    Ok(())
}
