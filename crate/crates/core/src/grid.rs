//! Sampling grid and scalar spatiotemporal vortex fields.
//!
//! Fields live on the normalized plane `(u, w) = (x / x0, z' / (eta * z'0))`, where
//! `z' = z - v_g t` is the co-moving longitudinal coordinate. The y-dependence of the
//! pulse is a separable Gaussian and is carried as a width only; see [`project_xy`].
//!
//! Phase convention: `Phi = atan2(w, u)`, so `Phi = 0` along `+u` (twelve o'clock in the
//! x-z' plane) and `Phi = pi/2` along `+w` (three o'clock).

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest sample count accepted along either axis.
pub const MIN_SAMPLES: usize = 8;

/// Relative amplitude below which a sample is treated as a phase singularity.
pub const PHASE_FLOOR: f64 = 1e-15;

/// Cell-centered sampling of the normalized `(u, w)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_u: usize,
    pub n_w: usize,
    pub u_half: f64,
    pub w_half: f64,
}

/// Builds a validated grid. Both counts must be at least [`MIN_SAMPLES`].
pub fn make_grid(n_u: usize, n_w: usize, u_half: f64, w_half: f64) -> Result<GridSpec> {
    GridSpec::new(n_u, n_w, u_half, w_half)
}

fn centered(index: usize, n: usize, step: f64) -> f64 {
    // (i + 1/2 - n/2) is exact in binary, so mirrored samples are exact negatives.
    (index as f64 + 0.5 - n as f64 / 2.0) * step
}

impl GridSpec {
    pub fn new(n_u: usize, n_w: usize, u_half: f64, w_half: f64) -> Result<Self> {
        if n_u < MIN_SAMPLES || n_w < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "sample counts must be >= {MIN_SAMPLES}, got {n_u}x{n_w}"
            )));
        }
        if !(u_half.is_finite() && u_half > 0.0 && w_half.is_finite() && w_half > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half extents must be positive and finite, got {u_half}:{w_half}"
            )));
        }
        Ok(Self {
            n_u,
            n_w,
            u_half,
            w_half,
        })
    }

    pub fn du(&self) -> f64 {
        2.0 * self.u_half / self.n_u as f64
    }

    pub fn dw(&self) -> f64 {
        2.0 * self.w_half / self.n_w as f64
    }

    /// Area element of the Riemann sums used for norms and inner products.
    pub fn cell_area(&self) -> f64 {
        self.du() * self.dw()
    }

    pub fn u(&self, i: usize) -> f64 {
        centered(i, self.n_u, self.du())
    }

    pub fn w(&self, j: usize) -> f64 {
        centered(j, self.n_w, self.dw())
    }

    pub fn u_coords(&self) -> Vec<f64> {
        (0..self.n_u).map(|i| self.u(i)).collect()
    }

    pub fn w_coords(&self) -> Vec<f64> {
        (0..self.n_w).map(|j| self.w(j)).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_u, self.n_w)
    }

    pub fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i < self.n_u && j < self.n_w {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                i,
                j,
                n_u: self.n_u,
                n_w: self.n_w,
            })
        }
    }
}

/// How the vortex is imprinted on the Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Amplitude-weighted `(u + i sgn(q) w)^|q|` vortex.
    #[default]
    Canonical,
    /// Pure phase imprint `exp(i q Phi)`, as written by a phase-only modulator.
    PhaseOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(Mode::Canonical),
            "phase_only" | "phase-only" => Ok(Mode::PhaseOnly),
            other => Err(Error::InvalidParam(format!(
                "unknown mode '{other}' (expected canonical or phase_only)"
            ))),
        }
    }
}

/// Parameters of a single t-OAM pulse.
///
/// `t0`, `omega0` and `vg` are informational; the simulation works in normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StovParams {
    pub q: i32,
    pub eta: f64,
    pub mode: Mode,
    pub y0: f64,
    pub t0: f64,
    pub omega0: f64,
    pub vg: f64,
}

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const CARRIER_WAVELENGTH: f64 = 1030e-9;

impl Default for StovParams {
    fn default() -> Self {
        Self {
            q: 0,
            eta: 1.0,
            mode: Mode::Canonical,
            y0: 1.0,
            t0: 1.0,
            omega0: 2.0 * PI * SPEED_OF_LIGHT / CARRIER_WAVELENGTH,
            vg: SPEED_OF_LIGHT,
        }
    }
}

impl StovParams {
    pub fn with_charge(q: i32) -> Self {
        Self {
            q,
            ..Self::default()
        }
    }

    pub fn charge(self, q: i32) -> Self {
        Self { q, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("eta", self.eta)?;
        positive("y0", self.y0)?;
        positive("t0", self.t0)?;
        positive("omega0", self.omega0)?;
        positive("vg", self.vg)
    }
}

/// Where a field came from. Carried through superpositions and written to dumps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default)]
    pub labels: Vec<String>,
}

/// Complex envelope sampled on a [`GridSpec`], plus its separable y-width.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Array2<Complex64>,
    pub y0: f64,
    pub meta: FieldMeta,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec, y0: f64) -> Self {
        Self {
            grid,
            values: Array2::zeros(grid.shape()),
            y0,
            meta: FieldMeta::default(),
        }
    }

    pub fn from_values(
        grid: GridSpec,
        values: Array2<Complex64>,
        y0: f64,
        meta: FieldMeta,
    ) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::InvalidGrid(format!(
                "values are {:?}, grid is {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        if !(y0.is_finite() && y0 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "y0 must be positive, got {y0}"
            )));
        }
        Ok(Self {
            grid,
            values,
            y0,
            meta,
        })
    }

    pub fn same_support(&self, other: &ScalarField) -> bool {
        self.grid == other.grid && self.y0 == other.y0
    }

    pub fn ensure_same_support(&self, other: &ScalarField) -> Result<()> {
        if self.same_support(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn total_power(&self) -> f64 {
        total_power(self)
    }

    /// Rescales to unit L2 norm. A zero field is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let power = self.total_power();
        if power > 0.0 {
            let scale = power.sqrt().recip();
            self.values.mapv_inplace(|v| v * scale);
        }
        self
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * c);
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v.conj());
        out
    }

    pub fn peak_intensity(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
    }

    /// Intensity-weighted mean of `u`. Equal to the u-centroid of the x-y projection.
    pub fn centroid_u(&self) -> f64 {
        let mut weighted = 0.0;
        let mut total = 0.0;
        for ((i, _), v) in self.values.indexed_iter() {
            let p = v.norm_sqr();
            weighted += self.grid.u(i) * p;
            total += p;
        }
        if total > 0.0 {
            weighted / total
        } else {
            0.0
        }
    }
}

/// Gaussian pulse envelope `exp(-u^2 - eta^2 w^2)` in the normalized plane.
///
/// `w` is measured in units of `eta * z'0`, so the envelope width along `w` is `1/eta`.
fn envelope(u: f64, w: f64, eta: f64) -> f64 {
    (-u * u - eta * eta * w * w).exp()
}

fn vortex_factor(u: f64, w: f64, q: i32, mode: Mode) -> Complex64 {
    match mode {
        Mode::Canonical => {
            let sign = f64::from(q.signum());
            let base = Complex64::new(u, sign * w);
            (0..q.unsigned_abs()).fold(Complex64::new(1.0, 0.0), |acc, _| acc * base)
        }
        Mode::PhaseOnly => {
            let phi = w.atan2(u);
            let (s, c) = (f64::from(q) * phi).sin_cos();
            Complex64::new(c, s)
        }
    }
}

/// Synthesizes an L2-normalized t-OAM pulse of charge `params.q`.
pub fn synthesize_mode(params: &StovParams, grid: &GridSpec) -> Result<ScalarField> {
    params.validate()?;
    let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let (u, w) = (grid.u(i), grid.w(j));
        vortex_factor(u, w, params.q, params.mode) * envelope(u, w, params.eta)
    });
    let meta = FieldMeta {
        mode: Some(params.mode),
        q: Some(params.q),
        eta: Some(params.eta),
        labels: vec![format!("q={}", params.q)],
    };
    Ok(ScalarField::from_values(*grid, values, params.y0, meta)?.normalized())
}

/// Pointwise linear combination. Deliberately not renormalized.
pub fn superpose(terms: &[(&ScalarField, Complex64)]) -> Result<ScalarField> {
    let (first, _) = terms.first().ok_or(Error::Empty("superposition terms"))?;
    let mut out = ScalarField::zeros(first.grid, first.y0);
    for (field, coeff) in terms {
        first.ensure_same_support(field)?;
        out.values
            .zip_mut_with(&field.values, |acc, v| *acc += v * coeff);
        out.meta.labels.push(format!(
            "({:+}{:+}i)*[{}]",
            coeff.re,
            coeff.im,
            field.meta.labels.join(",")
        ));
    }
    out.meta.mode = first.meta.mode;
    out.meta.eta = first.meta.eta;
    Ok(out)
}

/// `<f, g> = sum conj(f) g du dw`, conjugate-linear in `f`.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> Result<Complex64> {
    f.ensure_same_support(g)?;
    let sum = f
        .values
        .iter()
        .zip(g.values.iter())
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b);
    Ok(sum * f.grid.cell_area())
}

pub fn intensity_map(f: &ScalarField) -> Array2<f64> {
    f.values.mapv(|v| v.norm_sqr())
}

/// Phase in `(-pi, pi]`; `None` where `|value|` is below [`PHASE_FLOOR`] of the peak amplitude.
pub fn phase_map(f: &ScalarField) -> Array2<Option<f64>> {
    let floor = PHASE_FLOOR * f.peak_intensity().sqrt();
    f.values.mapv(|v| {
        let amp = v.norm();
        if amp <= floor || amp == 0.0 {
            None
        } else {
            let phase = v.arg();
            Some(if phase <= -PI { PI } else { phase })
        }
    })
}

pub fn total_power(f: &ScalarField) -> f64 {
    f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.cell_area()
}

/// Cell-centered y samples used by [`project_xy`].
pub fn y_coords(n_y: usize, y_half: f64) -> Vec<f64> {
    let dy = 2.0 * y_half / n_y as f64;
    (0..n_y).map(|k| centered(k, n_y, dy)).collect()
}

/// Time-integrated x-y image, as recorded by a slow beam profiler.
///
/// `I(u, y) = (sum_w |f(u, w)|^2 dw) * exp(-2 y^2 / y0^2)`, shape `n_u x n_y`.
pub fn project_xy(f: &ScalarField, n_y: usize, y_half: f64) -> Result<Array2<f64>> {
    if n_y < MIN_SAMPLES {
        return Err(Error::InvalidParam(format!(
            "n_y must be >= {MIN_SAMPLES}, got {n_y}"
        )));
    }
    if !(y_half.is_finite() && y_half > 0.0) {
        return Err(Error::InvalidParam(format!(
            "y_half must be positive, got {y_half}"
        )));
    }
    let dw = f.grid.dw();
    let column: Vec<f64> = f
        .values
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|v| v.norm_sqr()).sum::<f64>() * dw)
        .collect();
    let y_profile: Vec<f64> = y_coords(n_y, y_half)
        .into_iter()
        .map(|y| (-2.0 * y * y / (f.y0 * f.y0)).exp())
        .collect();
    Ok(Array2::from_shape_fn((f.grid.n_u, n_y), |(i, k)| {
        column[i] * y_profile[k]
    }))
}

/// Net phase winding (in units of 2 pi) along the rectangular ring of grid cells
/// `margin` samples in from the grid border. Phase steps are wrapped to `(-pi, pi]`.
pub fn winding_number(f: &ScalarField, margin: usize) -> Result<f64> {
    let (n_u, n_w) = f.grid.shape();
    if 2 * margin + 2 > n_u.min(n_w) {
        return Err(Error::InvalidParam(format!(
            "margin {margin} leaves no loop on a {n_u}x{n_w} grid"
        )));
    }
    let (lo_i, hi_i, lo_j, hi_j) = (margin, n_u - 1 - margin, margin, n_w - 1 - margin);
    // Counterclockwise in (u, w): +u -> +w -> -u -> -w.
    let mut path = Vec::with_capacity(2 * (hi_i - lo_i + hi_j - lo_j));
    path.extend((lo_j..hi_j).map(|j| (hi_i, j)));
    path.extend((lo_i + 1..=hi_i).rev().map(|i| (i, hi_j)));
    path.extend((lo_j + 1..=hi_j).rev().map(|j| (lo_i, j)));
    path.extend((lo_i..hi_i).map(|i| (i, lo_j)));
    let mut total = 0.0;
    for k in 0..path.len() {
        let a = f.values[path[k]];
        let b = f.values[path[(k + 1) % path.len()]];
        total += (b * a.conj()).arg();
    }
    Ok(total / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn default_grid() -> GridSpec {
        make_grid(256, 256, 4.0, 4.0).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = make_grid(8, 8, 4.0, 4.0).unwrap();
        assert_eq!(g.du(), 1.0);
        assert_eq!(g.dw(), 1.0);
        assert_eq!(g.u(0), -3.5);
        assert_eq!(default_grid().du(), 0.03125);

        let odd = make_grid(9, 8, 4.0, 4.0).unwrap();
        assert!(odd.u_coords().contains(&0.0));
        assert!(!odd.w_coords().contains(&0.0));
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(make_grid(7, 8, 4.0, 4.0).is_err());
        assert!(make_grid(8, 0, 4.0, 4.0).is_err());
        assert!(make_grid(8, 8, 0.0, 4.0).is_err());
        assert!(make_grid(8, 8, 4.0, -1.0).is_err());
        assert!(make_grid(8, 8, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn coordinates_are_mirror_exact() {
        let g = make_grid(256, 200, 4.0, 3.0).unwrap();
        for i in 0..g.n_u {
            assert_eq!(g.u(i), -g.u(g.n_u - 1 - i));
        }
        for j in 0..g.n_w {
            assert_eq!(g.w(j), -g.w(g.n_w - 1 - j));
        }
    }

    #[test]
    fn gaussian_is_real_positive_and_centered() {
        let g = make_grid(64, 64, 4.0, 4.0).unwrap();
        let f = synthesize_mode(&StovParams::with_charge(0), &g).unwrap();
        assert!(f.values.iter().all(|v| v.im == 0.0 && v.re > 0.0));
        let peak = f.peak_intensity();
        assert_eq!(f.values[[31, 31]].norm_sqr(), peak);
        assert_abs_diff_eq!(f.total_power(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn canonical_charge_one_phase_and_parity() {
        // 9-point grid with extent 4.5 puts samples at integer coordinates.
        let g = make_grid(9, 9, 4.5, 4.5).unwrap();
        let f = synthesize_mode(&StovParams::with_charge(1), &g).unwrap();
        let idx = |x: f64| ((x + 4.5) - 0.5) as usize;
        assert_abs_diff_eq!(f.values[[idx(1.0), idx(0.0)]].arg(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            f.values[[idx(0.0), idx(1.0)]].arg(),
            PI / 2.0,
            epsilon = 1e-15
        );
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(f.values[[i, j]], -f.values[[8 - i, 8 - j]]);
            }
        }
    }

    #[test]
    fn superpose_examples() {
        let g = make_grid(64, 64, 4.0, 4.0).unwrap();
        let f = synthesize_mode(&StovParams::with_charge(2), &g).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = superpose(&[(&f, one), (&f, -one)]).unwrap();
        assert!(zero.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        let double = superpose(&[(&f, one), (&f, one)]).unwrap();
        assert_abs_diff_eq!(double.total_power(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn superpose_rejects_mismatch() {
        let a = synthesize_mode(
            &StovParams::default(),
            &make_grid(16, 16, 4.0, 4.0).unwrap(),
        )
        .unwrap();
        let b = synthesize_mode(
            &StovParams::default(),
            &make_grid(16, 16, 3.0, 4.0).unwrap(),
        )
        .unwrap();
        let one = Complex64::new(1.0, 0.0);
        assert!(matches!(
            superpose(&[(&a, one), (&b, one)]),
            Err(Error::GridMismatch)
        ));
        assert!(matches!(superpose(&[]), Err(Error::Empty(_))));
        let mut c = a.clone();
        c.y0 = 2.0;
        assert!(inner_product(&a, &c).is_err());
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let g = make_grid(32, 32, 4.0, 4.0).unwrap();
        let f = synthesize_mode(&StovParams::with_charge(0), &g).unwrap();
        let wide = StovParams {
            eta: 1.5,
            ..StovParams::default()
        };
        let h = synthesize_mode(&wide, &g).unwrap();
        let c = Complex64::new(0.3, 0.7);
        let lhs = inner_product(&f.scaled(c), &h).unwrap();
        let rhs = c.conj() * inner_product(&f, &h).unwrap();
        assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn phase_map_of_gaussian_is_zero() {
        let f = synthesize_mode(
            &StovParams::default(),
            &make_grid(32, 32, 4.0, 4.0).unwrap(),
        )
        .unwrap();
        assert!(phase_map(&f).iter().all(|p| *p == Some(0.0)));
    }

    #[test]
    fn phase_map_flags_zeros_and_stays_in_half_open_range() {
        let g = make_grid(33, 33, 4.0, 4.0).unwrap();
        let f = synthesize_mode(&StovParams::with_charge(1), &g).unwrap();
        let phases = phase_map(&f);
        assert_eq!(phases[[16, 16]], None);
        for p in phases.iter().flatten() {
            assert!(*p > -PI && *p <= PI);
        }
        // The -u axis sits exactly on the branch cut.
        assert_eq!(phases[[0, 16]], Some(PI));
        let zero = ScalarField::zeros(g, 1.0);
        assert!(phase_map(&zero).iter().all(Option::is_none));
    }

    #[test]
    fn total_power_scales_quadratically() {
        let f = synthesize_mode(
            &StovParams::with_charge(3),
            &make_grid(64, 64, 4.0, 4.0).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            f.scaled(Complex64::new(2.0, 0.0)).total_power(),
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn projection_rejects_small_y_grid() {
        let f = synthesize_mode(
            &StovParams::default(),
            &make_grid(16, 16, 4.0, 4.0).unwrap(),
        )
        .unwrap();
        assert!(project_xy(&f, 4, 2.0).is_err());
        assert!(project_xy(&f, 16, 0.0).is_err());
    }

    #[test]
    fn gaussian_projection_peaks_at_center() {
        let f = synthesize_mode(
            &StovParams::default(),
            &make_grid(32, 32, 4.0, 4.0).unwrap(),
        )
        .unwrap();
        let img = project_xy(&f, 33, 3.0).unwrap();
        let (arg, _) =
            img.indexed_iter().fold(
                ((0, 0), 0.0),
                |best, (ix, v)| if *v > best.1 { (ix, *v) } else { best },
            );
        assert!(arg.0 == 15 || arg.0 == 16);
        assert_eq!(arg.1, 16);
    }

    #[test]
    fn winding_matches_charge() {
        let g = make_grid(64, 64, 4.0, 4.0).unwrap();
        for q in -3..=3 {
            for mode in [Mode::Canonical, Mode::PhaseOnly] {
                let params = StovParams {
                    mode,
                    ..StovParams::with_charge(q)
                };
                let f = synthesize_mode(&params, &g).unwrap();
                assert_abs_diff_eq!(
                    winding_number(&f, 16).unwrap(),
                    f64::from(q),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn rejects_invalid_params() {
        let g = make_grid(16, 16, 4.0, 4.0).unwrap();
        let bad = StovParams {
            eta: 0.0,
            ..StovParams::default()
        };
        assert!(synthesize_mode(&bad, &g).is_err());
        assert!("spiral".parse::<Mode>().is_err());
        assert_eq!("phase_only".parse::<Mode>().unwrap(), Mode::PhaseOnly);
    }
}
