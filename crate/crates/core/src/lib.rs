//! Collocation boundary elements for the exterior Neumann problem of the
//! Laplacian in the lower half-space `x_d < 0`, with a small cavity
//! `C = z + eps * B` held strictly below the plane.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: fundamental solution, Neumann function and the four boundary kernels.
//! * [`geometry`]: triangulated closed surfaces, OFF import and cavity placement.
//! * [`assembly`]: dense collocation matrices for `S, K, K*, S~, D, D~, D~*`.
//! * [`linalg`]: dense LU, nonsymmetric Hessenberg/QR eigenvalues, symmetric 3x3 eigenvalues.
//! * [`solve`]: the trace equation and the free-space exterior problem, with
//!   interchangeable solver strategies looked up by name.
//! * [`field`]: evaluation of `u` through the Neumann-function representation.
//! * [`asymptotics`]: auxiliary traces, polarization tensor and the two-term expansion.
//! * [`spectral`]: spectrum of `K* + D~*` and its inclusion checks.

pub mod assembly;
pub mod asymptotics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod solve;
pub mod spectral;

pub use error::{HbemError, Result};
