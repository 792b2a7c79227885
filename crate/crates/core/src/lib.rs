//! Frames of Gaussian wavepackets with parabolic scaling.
//!
//! Packets are `φ_{j,k,λ}(x) = 8^{j/2} φ(A_{j,k} x - λ)` with `A_{j,k} = D_j R_{2πk/2^j}`
//! and `D_j = diag(4^j, 2^j)`, plus coarse translates `φ₀(x - λ)`. All computations
//! work on the frequency side, where windows are finite sums of Gaussians.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod kv;
mod linalg;
pub mod criterion;
pub mod transform;
pub mod wavefront;
pub mod window;

pub use error::{Error, Result};
