//! Exact-arithmetic verification of Korn compatibility for nonconforming
//! finite elements.
//!
//! Everything on the verification path is computed over arbitrary-precision
//! rationals: polynomial calculus, integration over simplices and boxes,
//! space dimensions (always computed as exact ranks, never assumed),
//! unisolvence determinants, jump moments, and kernel intersections.
//! Floating point appears only in the optional Korn-constant estimator.

pub mod dofs;
pub mod geometry;
pub mod korn;
pub mod linalg;
pub mod poly;
pub mod rational;
pub mod registry;
pub mod sharpness;
pub mod spaces;

mod error;
pub use error::Error;

pub use rational::Q;
