//! Numerical kernels for a small laboratory of incompressible-flow experiments:
//! pseudospectral 2D Euler/Navier–Stokes, 1D vortex-stretching models, the
//! axisymmetric fundamental model, self-similar profile solvers, the scaled
//! Biot–Savart expansion, nilpotent pressureless flows and streamline geometry.

pub mod axisym;
pub mod banded;
pub mod chebyshev;
pub mod elliptic;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod grid;
pub mod interp;
pub mod models1d;
pub mod pressureless;
pub mod quad;
pub mod radial;
pub mod selfsimilar;
pub mod spectral2d;
pub mod stats;

pub use error::{Error, Result};
