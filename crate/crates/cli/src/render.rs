//! Panel rendering and line diagnostics shared by the commands.
//!
//! Images put `u` on the vertical axis with `+u` at the top and `w` (or Omega)
//! running left to right.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{s, Array2};
use serde::Serialize;
use stov_core::io::{write_image, write_image_scaled, write_report, ImageDepth};
use stov_core::polarization::StokesSample;
use stov_core::{intensity_map, phase_map, ScalarField};

use crate::error::Result;

/// Reverses the row order so that the largest `u` is the top raster row.
pub fn display(image: &Array2<f64>) -> Array2<f64> {
    image.slice(s![..;-1, ..]).to_owned()
}

pub fn write_pgm(dir: &Path, name: &str, image: &Array2<f64>) -> Result<()> {
    write_image(&display(image), &dir.join(name), ImageDepth::Eight)?;
    Ok(())
}

/// Phase mapped linearly from `(-pi, pi]` onto `(0, 1]`; undefined samples are black.
pub fn phase_image(f: &ScalarField) -> Array2<f64> {
    phase_map(f).mapv(|p| p.map_or(0.0, |p| (p + PI) / (2.0 * PI)))
}

pub fn write_phase_pgm(dir: &Path, name: &str, f: &ScalarField) -> Result<()> {
    write_image_scaled(
        &display(&phase_image(f)),
        &dir.join(name),
        ImageDepth::Eight,
        1.0,
    )?;
    Ok(())
}

pub fn write_intensity_pgm(dir: &Path, name: &str, f: &ScalarField) -> Result<()> {
    write_pgm(dir, name, &intensity_map(f))
}

/// Signed map rendered with zero at mid-gray and `+-scale` at the ends.
pub fn write_signed_pgm(dir: &Path, name: &str, image: &Array2<f64>, scale: f64) -> Result<()> {
    let shifted = if scale > 0.0 {
        image.mapv(|v| ((v / scale + 1.0) / 2.0).clamp(0.0, 1.0))
    } else {
        image.mapv(|_| 0.5)
    };
    write_image_scaled(&display(&shifted), &dir.join(name), ImageDepth::Eight, 1.0)?;
    Ok(())
}

/// Writes `s0` plus the three signed Stokes maps, all on the `s0` peak scale.
pub fn write_stokes_pgms(dir: &Path, prefix: &str, maps: &Array2<StokesSample>) -> Result<()> {
    let s0 = maps.mapv(|s| s.s0);
    let peak = s0.iter().copied().fold(0.0, f64::max);
    write_pgm(dir, &format!("{prefix}_s0.pgm"), &s0)?;
    write_signed_pgm(dir, &format!("{prefix}_s1.pgm"), &maps.mapv(|s| s.s1), peak)?;
    write_signed_pgm(dir, &format!("{prefix}_s2.pgm"), &maps.mapv(|s| s.s2), peak)?;
    write_signed_pgm(dir, &format!("{prefix}_s3.pgm"), &maps.mapv(|s| s.s3), peak)
}

pub fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, record: &T) -> Result<()> {
    write_report(record, &dir.join(name))?;
    Ok(())
}

/// Field intensity along the `u = 0` line, one value per `w` sample.
///
/// On odd grids that line is a sample row. On even grids it falls midway between
/// the two central rows and the amplitude there is their average.
pub fn u0_line_intensity(f: &ScalarField) -> Vec<f64> {
    let n = f.grid.n_u;
    if n % 2 == 1 {
        f.values.row(n / 2).iter().map(|v| v.norm_sqr()).collect()
    } else {
        let (a, b) = (f.values.row(n / 2 - 1), f.values.row(n / 2));
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| ((x + y) * 0.5).norm_sqr())
            .collect()
    }
}

/// Field intensity along the `w = 0` line, one value per `u` sample.
pub fn w0_line_intensity(f: &ScalarField) -> Vec<f64> {
    let n = f.grid.n_w;
    if n % 2 == 1 {
        f.values
            .column(n / 2)
            .iter()
            .map(|v| v.norm_sqr())
            .collect()
    } else {
        let (a, b) = (f.values.column(n / 2 - 1), f.values.column(n / 2));
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| ((x + y) * 0.5).norm_sqr())
            .collect()
    }
}

/// Largest value on a line relative to the field's peak intensity.
pub fn line_fraction(line: &[f64], f: &ScalarField) -> f64 {
    let peak = f.peak_intensity();
    let max = line.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        max / peak
    } else {
        0.0
    }
}

/// `|u|` of the brightest row of an `n_u x n_y` projection.
pub fn brightest_row_offset(projection: &Array2<f64>, u_axis: &[f64]) -> f64 {
    let row_peak = |i: usize| projection.row(i).iter().copied().fold(0.0, f64::max);
    let best = (0..projection.nrows())
        .max_by(|&a, &b| row_peak(a).total_cmp(&row_peak(b)))
        .unwrap_or(0);
    u_axis[best].abs()
}
