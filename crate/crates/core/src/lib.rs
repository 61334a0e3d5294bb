//! Numerical laboratory for pulses carrying transverse orbital angular momentum.
//!
//! - [`grid`]: sampling grid, vortex synthesis, superposition, overlaps, projections.
//! - [`polarization`]: Jones calculus and Stokes parameters on vector fields.
//! - [`entangled`]: charge-polarization entangled vector beams and their local polarization.
//! - [`instruments`]: interferometric visibility, polarization analyzer, x-omega
//!   spectrometer and charge estimation.
//! - [`io`]: field dumps, PGM images, CSV and JSON reports.

pub mod entangled;
pub mod error;
pub mod grid;
pub mod instruments;
pub mod io;
pub mod polarization;

pub use error::{Error, Result};
pub use grid::{
    inner_product, intensity_map, make_grid, phase_map, project_xy, superpose, synthesize_mode,
    total_power, GridSpec, Mode, ScalarField, StovParams,
};
pub use polarization::{JonesMatrix, JonesVector, Ket, StokesSample, VectorField};
