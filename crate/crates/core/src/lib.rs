//! Integral cohomology rings of Bott manifolds and certified stabilization
//! of graded ring isomorphisms between them.
//!
//! A Bott tower of height `n` is encoded by a strictly lower-triangular
//! integer matrix ([`BottMatrix`]). Its cohomology ring is
//! `Z[x_1..x_n] / (x_i^2 - alpha_i x_i)` with `alpha_i = sum_j a_ij x_j`.
//! The modules build up from exact ring arithmetic ([`ring`]) through
//! isomorphisms ([`iso`]), the switch and twist moves ([`moves`]) and the
//! ℚ-trivial tower ([`structure`]) to the stabilization procedure
//! ([`stabilize`]) that rewrites any isomorphism into an `(n-1)`- or
//! `(n-2)`-stable one with a replayable certificate.

pub mod cli;
pub mod error;
pub mod iso;
pub mod json;
pub mod matrix;
pub mod moves;
pub mod ring;
pub mod stabilize;
pub mod structure;

pub use error::{Error, Result};
pub use iso::{extract_sigma_eps, search_isos, GradedIso, SigmaEps};
pub use matrix::IntMatrix;
pub use moves::{replay, switch, twist, Move, MoveKind, MoveSeq};
pub use ring::{BottMatrix, Class2, CohClass, Half, HalfClass2};
pub use stabilize::{stabilize_full, verify_certificate, StabilizationCertificate};
pub use structure::{decompose_tower, DecompositionTower};
