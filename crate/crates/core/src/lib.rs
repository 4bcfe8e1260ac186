//! Geodesic flow of the right-invariant Sobolev `H^k` metrics on the group
//! of orientation-preserving diffeomorphisms of the circle.
//!
//! The crate provides a pseudospectral discretization of the Lagrangian
//! geodesic system on `Diff(T)`, `T = R/Z`:
//!
//! ```text
//!   phi_dot = v,    v_dot = F_k(phi, v),
//!   F_k(phi, v) = (A_k^{-1} B_k (v o phi^{-1})) o phi,
//! ```
//!
//! with `A_k = sum_{j<=k} (-1)^j d_x^{2j}` and
//! `B_k(u) = -2 u' A_k u + A_k(u u') - u A_k u'`. The case `k = 1` is the
//! Camassa-Holm equation in Lagrangian form; `k = 0` reduces to inviscid
//! Burgers and is kept only as a cross-validation oracle.
//!
//! Modules:
//! - [`spectral`]: periodic grid, Fourier analysis/synthesis, multipliers,
//!   dealiased products, trigonometric interpolation.
//! - [`diffeo`]: circle diffeomorphisms `phi = id + f`, composition and
//!   monotone numerical inversion, chart normalization.
//! - [`operators`]: `A_k`, `A_k^{-1}`, `B_k`, the conjugated derivatives
//!   `D^n(phi, v)`, the conjugated operator, the transported momentum
//!   density, and the `H^k` energy.
//! - [`geodesic`]: fixed-step RK4 integration of the Lagrangian system,
//!   Eulerian read-out, invariant monitors, Burgers characteristic oracle.
//! - [`expmap`]: Riemannian exponential map, its directional derivative,
//!   and the local logarithm by damped Gauss-Newton shooting.
//! - [`io`]: CSV persistence for fields, spectra, and diffeomorphisms.

pub mod diffeo;
pub mod expmap;
pub mod geodesic;
pub mod io;
pub mod operators;
pub mod spectral;

mod error;

pub use error::{Error, Result};
