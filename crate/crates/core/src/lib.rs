//! Water waves around a floating half-cylinder: harmonic extensions,
//! Hilbert transforms and Dirichlet-to-Neumann maps on the half-plane and on
//! the exterior of the disk, plus the coupled wave/heave evolution.

pub mod cauchy;
pub mod cli_io;
pub mod coupling;
pub mod error;
pub mod grid_space;
pub mod halfplane;
pub mod linalg;
pub mod omega_dtn;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
