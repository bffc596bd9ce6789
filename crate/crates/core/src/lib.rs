//! fermibox: a spectral laboratory for the density-matrix NLS dynamics of
//! fermions near the Fermi sea on a discretized periodic box.
//!
//! The dynamical unknown is the perturbation Q = γ − Π_μ^- of a density
//! matrix γ from the Fermi-sea projector, evolving under
//! i∂_t Q = [−Δ + ρ_Q, Π_μ^- + Q] with the delta pair interaction. The crate
//! provides the operator algebra (Schatten and Hilbert–Schmidt Sobolev
//! norms, relative kinetic energy), three solvers (kernel RK4, Duhamel/Picard
//! fixed point, coupled-orbital split-step), conservation and inequality
//! diagnostics, space-time estimate scans, and the frequency-cutoff
//! approximation scheme — all on exact finite mode lattices.

pub mod error;
pub mod grid;
pub mod linalg;
pub mod transform;
pub mod report;
pub mod kernel;
pub mod dynamics;
pub mod energy;
pub mod strichartz;
pub mod approx;
pub mod container;
pub mod config;
pub mod cli;

/// Default band radius for the Π_2^± splitting (|ξ| ≤ 2 vs |ξ| > 2).
pub const BAND_RADIUS: f64 = 2.0;

/// Default η for the (d=3, α=1) density-regularity exponent.
pub const ETA_DEFAULT: f64 = 0.05;

/// Gap below (d−1)/2 used for α₁ in the boundary regime α = (d−1)/2.
pub const ALPHA1_BOUNDARY_GAP: f64 = 0.05;

pub use error::{Error, Result};
pub use grid::{build_grid, GridSpec, MultiplierMask};
pub use kernel::{density, DensityField, KernelOperator};
