//! Elliptic translate-sum functions on complex tori.
//!
//! This crate builds and analyzes the meromorphic functions `b_{tau,p}` on a
//! complex torus `C/Λ`: the unique function (up to scale) with simple poles at
//! `p` and `p - tau` whose `n` translates by an order-`n` torsion `tau` sum to
//! zero. Around that central object it provides
//!
//! - exact lattice/torsion arithmetic ([`torus`]),
//! - Jacobi-theta based Weierstrass zeta/P numerics ([`theta`]),
//! - construction, evaluation and zero-finding for `b_{tau,p}` ([`bfunc`]),
//! - exact `SL2(Z/n)` transvection group theory ([`torsion_group`]),
//! - singularity classification of the arrangement of translated curves
//!   cut out by a finite torsion subgroup ([`arrangement`]),
//! - the numerical verification suite backing all of the above ([`verify`]).
//!
//! All floating-point tolerances are collected in [`tol::Tolerances`]; every
//! numeric routine takes the policy explicitly or uses the defaults.

pub mod arrangement;
pub mod bfunc;
pub mod error;
pub mod theta;
pub mod tol;
pub mod torsion_group;
pub mod torus;
pub mod verify;

mod zeros;

pub use error::Error;
pub use tol::Tolerances;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
