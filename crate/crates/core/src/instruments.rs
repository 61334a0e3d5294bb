//! Virtual measurement devices: power meter, phase-scan interferometer, polarization
//! analyzer, x-omega imaging spectrometer, charge estimator and reference comparison.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::entangled::Parity;
use crate::error::{Error, Result};
use crate::grid::{inner_product, project_xy, superpose, ScalarField};
use crate::polarization::{apply_jones, linear_polarizer, waveplate, VectorField, WaveplateKind};

/// Sum with its exact rounding error (Knuth's TwoSum).
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `(p_max - p_min) / (p_max + p_min)`, evaluated with compensated arithmetic so the
/// result is the correctly rounded ratio of the given inputs in practice.
pub fn visibility(p_max: f64, p_min: f64) -> Result<f64> {
    if !(p_max.is_finite() && p_min.is_finite()) || p_min < 0.0 || p_max < p_min {
        return Err(Error::InvalidParam(format!(
            "visibility needs p_max >= p_min >= 0, got {p_max}, {p_min}"
        )));
    }
    let sum = p_max + p_min;
    if sum <= 0.0 {
        return Err(Error::UndefinedVisibility { p_max, p_min });
    }
    let (num, num_err) = two_sum(p_max, -p_min);
    let (den, den_err) = two_sum(p_max, p_min);
    let q = num / den;
    let residual = (-q).mul_add(den, num) + num_err - q * den_err;
    Ok(q + residual / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityResult {
    pub v: f64,
    pub p_max: f64,
    pub p_min: f64,
    pub phase_at_max: f64,
    /// Sampled `(phase, power)` pairs.
    pub scan: Vec<(f64, f64)>,
}

pub const MIN_SCAN_PHASES: usize = 8;

/// Scans the relative phase of `f + e^{i phi} g` and records the power.
///
/// Extrema come from the exact model `P(phi) = |f|^2 + |g|^2 + 2|<f,g>| cos(phi + arg<f,g>)`,
/// so they do not depend on `n_phases`.
pub fn phase_scan(f: &ScalarField, g: &ScalarField, n_phases: usize) -> Result<VisibilityResult> {
    if n_phases < MIN_SCAN_PHASES {
        return Err(Error::InvalidParam(format!(
            "phase scan needs at least {MIN_SCAN_PHASES} phases, got {n_phases}"
        )));
    }
    let overlap = inner_product(f, g)?;
    let scan = (0..n_phases)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_phases as f64;
            let sum = superpose(&[
                (f, Complex64::new(1.0, 0.0)),
                (g, Complex64::from_polar(1.0, phi)),
            ])?;
            Ok((phi, sum.total_power()))
        })
        .collect::<Result<Vec<_>>>()?;
    let base = f.total_power() + g.total_power();
    let swing = 2.0 * overlap.norm();
    let (p_max, p_min) = (base + swing, (base - swing).max(0.0));
    Ok(VisibilityResult {
        v: visibility(p_max, p_min)?,
        p_max,
        p_min,
        phase_at_max: (-overlap.arg()).rem_euclid(2.0 * PI),
        scan,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolScanResult {
    pub angles: Vec<f64>,
    pub powers: Vec<f64>,
    pub v: f64,
}

/// Fast axis of the quarter-wave plate ahead of the analyzer.
pub const DEFAULT_ANALYZER_QWP: f64 = FRAC_PI_4;
pub const DEFAULT_ANALYZER_LP: f64 = 0.0;
pub const MIN_ANALYZER_ANGLES: usize = 8;

/// Beam-integrated power behind QWP(`qwp_angle`) -> HWP(theta) -> LP(`lp_angle`)
/// for each HWP angle theta.
pub fn polarization_analyzer(
    vf: &VectorField,
    qwp_angle: f64,
    hwp_angles: &[f64],
    lp_angle: f64,
) -> Result<PolScanResult> {
    if hwp_angles.is_empty() {
        return Err(Error::Empty("analyzer angles"));
    }
    if hwp_angles.len() < MIN_ANALYZER_ANGLES {
        return Err(Error::InvalidParam(format!(
            "analyzer needs at least {MIN_ANALYZER_ANGLES} angles, got {}",
            hwp_angles.len()
        )));
    }
    let qwp = waveplate(WaveplateKind::Quarter, qwp_angle);
    let lp = linear_polarizer(lp_angle);
    let powers: Vec<f64> = hwp_angles
        .iter()
        .map(|&theta| {
            let chain = lp * waveplate(WaveplateKind::Half, theta) * qwp;
            apply_jones(&chain, vf).total_power()
        })
        .collect();
    let p_max = powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_min = powers.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PolScanResult {
        angles: hwp_angles.to_vec(),
        v: visibility(p_max, p_min.max(0.0))?,
        powers,
    })
}

/// `n` HWP angles evenly covering `[0, pi)`.
pub fn analyzer_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / n as f64).collect()
}

/// Zero-padding factor of the spectrometer transform. Finer frequency bins resolve the
/// dark lines of high-charge pulses without changing the total spectral power.
pub const DEFAULT_OVERSAMPLE: usize = 8;

/// Spatial-spectral intensity `|F(u, Omega)|^2 / (2 pi)` with
/// `F(u, Omega) = sum_w f(u, w) e^{-i Omega w} dw`.
///
/// With this scaling `sum I du dOmega` equals the field power.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub intensity: Array2<f64>,
    pub u_axis: Vec<f64>,
    /// Offset from the carrier, centered: bin `N/2` is zero.
    pub omega_axis: Vec<f64>,
    pub du: f64,
    pub d_omega: f64,
}

impl Spectrogram {
    pub fn total_power(&self) -> f64 {
        self.intensity.sum() * self.du * self.d_omega
    }

    pub fn peak(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Incoherent sum of two spectrograms on the same axes.
    pub fn add(&self, other: &Spectrogram) -> Result<Spectrogram> {
        if self.intensity.dim() != other.intensity.dim()
            || self.du != other.du
            || self.d_omega != other.d_omega
        {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        out.intensity += &other.intensity;
        Ok(out)
    }

    /// Columns with `|Omega| <= limit`.
    pub fn crop_omega(&self, limit: f64) -> Spectrogram {
        let keep: Vec<usize> = self
            .omega_axis
            .iter()
            .enumerate()
            .filter(|(_, o)| o.abs() <= limit)
            .map(|(k, _)| k)
            .collect();
        let intensity = Array2::from_shape_fn((self.u_axis.len(), keep.len()), |(i, c)| {
            self.intensity[[i, keep[c]]]
        });
        Spectrogram {
            intensity,
            u_axis: self.u_axis.clone(),
            omega_axis: keep.iter().map(|&k| self.omega_axis[k]).collect(),
            du: self.du,
            d_omega: self.d_omega,
        }
    }
}

pub fn spectrometer(f: &ScalarField) -> Spectrogram {
    spectrometer_with(f, DEFAULT_OVERSAMPLE)
}

/// Fourier transform along `w` of every `u` row, zero-padded by `oversample`.
pub fn spectrometer_with(f: &ScalarField, oversample: usize) -> Spectrogram {
    let grid = f.grid;
    let n = grid.n_w * oversample.max(1);
    let dw = grid.dw();
    let d_omega = 2.0 * PI / (n as f64 * dw);
    let half = n / 2;
    let omega_axis: Vec<f64> = (0..n).map(|k| (k as f64 - half as f64) * d_omega).collect();
    let w0 = grid.w(0);

    // Centering the bins: e^{-i Omega_k j dw} = e^{-2 pi i k j / n} e^{2 pi i half j / n}.
    let shift: Vec<Complex64> = (0..grid.n_w)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * ((half * j) % n) as f64 / n as f64))
        .collect();
    let post: Vec<Complex64> = omega_axis
        .iter()
        .map(|o| Complex64::from_polar(dw, -o * w0))
        .collect();

    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    let mut intensity = Array2::zeros((grid.n_u, n));
    for (row, mut out) in f.values.rows().into_iter().zip(intensity.rows_mut()) {
        buffer.fill(Complex64::new(0.0, 0.0));
        for (j, v) in row.iter().enumerate() {
            buffer[j] = v * shift[j];
        }
        fft.process(&mut buffer);
        for (k, o) in out.iter_mut().enumerate() {
            *o = (buffer[k] * post[k]).norm_sqr() / (2.0 * PI);
        }
    }
    Spectrogram {
        intensity,
        u_axis: grid.u_coords(),
        omega_axis,
        du: grid.du(),
        d_omega,
    }
}

/// Polarization-blind spectrogram of a vector field: `|S|^2 + |P|^2`.
pub fn spectrometer_vector(vf: &VectorField) -> Result<Spectrogram> {
    spectrometer(&vf.s_field).add(&spectrometer(&vf.p_field))
}

/// Samples below this fraction of the profile peak form a dark region.
pub const DARK_FRACTION: f64 = 0.10;
/// Two dark regions are distinct only if a maximum at least this bright separates them.
pub const SEPARATION_FRACTION: f64 = 0.30;
/// Local maxima dimmer than this fraction of the peak are tails, not lobes.
pub const LOBE_FLOOR: f64 = 0.01;
/// |correlation| below which the helicity is reported as indeterminate.
pub const SIGN_THRESHOLD: f64 = 0.05;
/// |correlation| at which the helicity call reaches full confidence.
pub const SIGN_FULL_CONFIDENCE: f64 = 0.20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeEstimate {
    pub magnitude: u32,
    /// +1, -1 or 0 (indeterminate).
    pub sign: i32,
    pub confidence: f64,
    pub dark_regions: u32,
    /// Intensity-weighted covariance of centered `(u, Omega)`.
    pub covariance: f64,
    /// `covariance / sqrt(var_u var_Omega)`.
    pub correlation: f64,
}

impl ChargeEstimate {
    pub fn signed_charge(&self) -> i32 {
        self.sign * self.magnitude as i32
    }
}

struct Moments {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

fn moments(sp: &Spectrogram) -> Option<Moments> {
    let total = sp.intensity.sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let (mut mu, mut mo) = (0.0, 0.0);
    for ((i, k), v) in sp.intensity.indexed_iter() {
        mu += v * sp.u_axis[i];
        mo += v * sp.omega_axis[k];
    }
    mu /= total;
    mo /= total;
    let mut c = [[0.0; 2]; 2];
    for ((i, k), v) in sp.intensity.indexed_iter() {
        let (du, dom) = (sp.u_axis[i] - mu, sp.omega_axis[k] - mo);
        c[0][0] += v * du * du;
        c[0][1] += v * du * dom;
        c[1][1] += v * dom * dom;
    }
    for row in &mut c {
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    c[1][0] = c[0][1];
    Some(Moments {
        mean: [mu, mo],
        cov: c,
    })
}

/// Unit eigenvector of the larger eigenvalue of a symmetric 2x2 matrix.
fn principal_axis(c: &[[f64; 2]; 2]) -> [f64; 2] {
    let (a, b, d) = (c[0][0], c[0][1], c[1][1]);
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    [theta.cos(), theta.sin()]
}

fn bilinear(sp: &Spectrogram, u: f64, omega: f64) -> Option<f64> {
    let fi = (u - sp.u_axis[0]) / sp.du;
    let fk = (omega - sp.omega_axis[0]) / sp.d_omega;
    let (n_u, n_o) = sp.intensity.dim();
    if !(fi >= 0.0 && fk >= 0.0) || fi > (n_u - 1) as f64 || fk > (n_o - 1) as f64 {
        return None;
    }
    let (i0, k0) = (
        (fi.floor() as usize).min(n_u - 2),
        (fk.floor() as usize).min(n_o - 2),
    );
    let (a, b) = (fi - i0 as f64, fk - k0 as f64);
    let m = &sp.intensity;
    Some(
        m[[i0, k0]] * (1.0 - a) * (1.0 - b)
            + m[[i0 + 1, k0]] * a * (1.0 - b)
            + m[[i0, k0 + 1]] * (1.0 - a) * b
            + m[[i0 + 1, k0 + 1]] * a * b,
    )
}

/// Intensity along the line through `origin` in direction `dir`, out to the grid edge.
fn line_profile(sp: &Spectrogram, origin: [f64; 2], dir: [f64; 2]) -> Vec<f64> {
    let step = 0.25 * sp.du.min(sp.d_omega);
    let sample = |t: f64| bilinear(sp, origin[0] + t * dir[0], origin[1] + t * dir[1]);
    let mut back = Vec::new();
    let mut t = -step;
    while let Some(v) = sample(t) {
        back.push(v);
        t -= step;
    }
    back.reverse();
    let mut t = 0.0;
    while let Some(v) = sample(t) {
        back.push(v);
        t += step;
    }
    back
}

struct DarkCount {
    regions: u32,
    depth: f64,
    separation: f64,
}

/// Counts dark regions between lobes of a 1D profile.
fn count_dark_regions(profile: &[f64]) -> DarkCount {
    let peak = profile.iter().copied().fold(0.0, f64::max);
    let mut full = DarkCount {
        regions: 0,
        depth: 1.0,
        separation: 1.0,
    };
    if peak.is_nan() || peak <= 0.0 || profile.len() < 3 {
        return full;
    }
    // Lobes: local maxima above the floor (plateaus count once).
    let mut lobes = Vec::new();
    let mut k = 1;
    while k + 1 < profile.len() {
        if profile[k] > profile[k - 1] {
            let mut end = k;
            while end + 1 < profile.len() && profile[end + 1] == profile[k] {
                end += 1;
            }
            let falls = end + 1 >= profile.len() || profile[end + 1] < profile[k];
            if falls && profile[k] >= LOBE_FLOOR * peak {
                lobes.push(k);
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    // Dark gaps between consecutive lobes.
    let mut gaps: Vec<(usize, f64)> = Vec::new();
    for pair in lobes.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let (arg, min) =
            profile[lo..=hi]
                .iter()
                .enumerate()
                .fold((lo, f64::INFINITY), |acc, (o, v)| {
                    if *v < acc.1 {
                        (lo + o, *v)
                    } else {
                        acc
                    }
                });
        if min < DARK_FRACTION * peak {
            gaps.push((arg, min));
        }
    }
    // Merge dark gaps that are not separated by a bright enough maximum.
    let mut merged: Vec<(usize, f64)> = Vec::new();
    for gap in gaps {
        if let Some(last) = merged.last_mut() {
            let between = profile[last.0..=gap.0].iter().copied().fold(0.0, f64::max);
            if between < SEPARATION_FRACTION * peak {
                if gap.1 < last.1 {
                    *last = gap;
                }
                continue;
            }
            full.separation = full
                .separation
                .min((between / (2.0 * SEPARATION_FRACTION * peak)).min(1.0));
        }
        merged.push(gap);
    }
    for (_, min) in &merged {
        full.depth = full.depth.min(1.0 - min / (DARK_FRACTION * peak));
    }
    full.regions = merged.len() as u32;
    full
}

/// Reads charge magnitude and helicity off an x-omega spectrogram.
///
/// The magnitude counts dark regions along the principal intensity axis through the
/// centroid. The sign is the sign of the `(u, Omega)` covariance: with the `e^{-i Omega w}`
/// kernel a positive charge tilts its lobes toward `+u, +Omega`.
pub fn estimate_charge(sp: &Spectrogram) -> Result<ChargeEstimate> {
    let m = moments(sp).ok_or(Error::InvalidParam("spectrogram has no power".into()))?;
    let axis = principal_axis(&m.cov);
    let dark = count_dark_regions(&line_profile(sp, m.mean, axis));
    let covariance = m.cov[0][1];
    let spread = (m.cov[0][0] * m.cov[1][1]).sqrt();
    let correlation = if spread > 0.0 {
        covariance / spread
    } else {
        0.0
    };
    let sign = if correlation.abs() < SIGN_THRESHOLD {
        0
    } else {
        correlation.signum() as i32
    };
    let sign_confidence = (correlation.abs() / SIGN_FULL_CONFIDENCE).min(1.0);
    Ok(ChargeEstimate {
        magnitude: dark.regions,
        sign,
        confidence: dark
            .depth
            .min(dark.separation)
            .min(sign_confidence)
            .clamp(0.0, 1.0),
        dark_regions: dark.regions,
        covariance,
        correlation,
    })
}

/// Interferes `test` with a known-charge `reference` and images the result.
///
/// Returns the time-projected x-y image (`n_u x n_y`) and total power of
/// `test +- reference`.
pub fn reference_compare(
    test: &ScalarField,
    reference: &ScalarField,
    parity: Parity,
    n_y: usize,
    y_half: f64,
) -> Result<(Array2<f64>, f64)> {
    let sum = superpose(&[
        (test, Complex64::new(1.0, 0.0)),
        (reference, Complex64::new(parity.sign(), 0.0)),
    ])?;
    Ok((project_xy(&sum, n_y, y_half)?, sum.total_power()))
}
