//! Jones calculus on vector fields.
//!
//! Jones vectors are ordered `(s, p)`: `s` is the x-axis (S = V) component and `p` the
//! y-axis (P = H) component. Element angles are measured from the x-axis,
//! counterclockwise looking along +z. Stokes parameters follow the same basis:
//! `s1 = |p|^2 - |s|^2`, `s2 = D - A`, `s3 = R - L`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub s: Complex64,
    pub p: Complex64,
}

impl JonesVector {
    pub const fn new(s: Complex64, p: Complex64) -> Self {
        Self { s, p }
    }

    pub fn intensity(&self) -> f64 {
        self.s.norm_sqr() + self.p.norm_sqr()
    }

    pub fn normalized(self) -> Self {
        let n = self.intensity().sqrt();
        if n == 0.0 {
            self
        } else {
            Self::new(self.s / n, self.p / n)
        }
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.s.conj() * other.s + self.p.conj() * other.p
    }

    /// `|<a|b>| / (|a| |b|)`: 1 when the two states agree up to a global phase.
    pub fn alignment(&self, other: &JonesVector) -> f64 {
        let norms = (self.intensity() * other.intensity()).sqrt();
        if norms == 0.0 {
            0.0
        } else {
            self.inner(other).norm() / norms
        }
    }

    pub fn stokes(&self) -> StokesSample {
        StokesSample::from_components(self.s, self.p)
    }
}

/// Named polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ket {
    S,
    P,
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Ket {
    pub const ALL: [Ket; 8] = [
        Ket::S,
        Ket::P,
        Ket::H,
        Ket::V,
        Ket::D,
        Ket::A,
        Ket::R,
        Ket::L,
    ];

    pub fn vector(self) -> JonesVector {
        ket(self)
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Ket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "S" | "s" => Ket::S,
            "P" | "p" => Ket::P,
            "H" | "h" => Ket::H,
            "V" | "v" => Ket::V,
            "D" | "d" => Ket::D,
            "A" | "a" => Ket::A,
            "R" | "r" => Ket::R,
            "L" | "l" => Ket::L,
            other => {
                return Err(Error::InvalidParam(format!(
                    "unknown polarization label '{other}' (expected one of S,P,H,V,D,A,R,L)"
                )))
            }
        })
    }
}

/// Normalized Jones vector for a named state: `H = P`, `V = S`, `D/A ~ P +- S`,
/// `R/L ~ P +- iS`.
pub fn ket(label: Ket) -> JonesVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let ih = Complex64::new(0.0, FRAC_1_SQRT_2);
    match label {
        Ket::S | Ket::V => JonesVector::new(ONE, ZERO),
        Ket::P | Ket::H => JonesVector::new(ZERO, ONE),
        Ket::D => JonesVector::new(h, h),
        Ket::A => JonesVector::new(-h, h),
        Ket::R => JonesVector::new(ih, h),
        Ket::L => JonesVector::new(-ih, h),
    }
}

/// 2x2 complex matrix acting on `(s, p)`; `m[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix {
    pub m: [[Complex64; 2]; 2],
}

impl JonesMatrix {
    pub const IDENTITY: JonesMatrix = JonesMatrix {
        m: [[ONE, ZERO], [ZERO, ONE]],
    };

    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn rotation(angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        let (c, s) = (Complex64::new(cos, 0.0), Complex64::new(sin, 0.0));
        Self::new([[c, -s], [s, c]])
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Self::new([[a, ZERO], [ZERO, b]])
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self::new([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        let m = &self.m;
        JonesVector::new(m[0][0] * v.s + m[0][1] * v.p, m[1][0] * v.s + m[1][1] * v.p)
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    /// `max |M M^dagger - I|` entrywise.
    pub fn unitarity_error(&self) -> f64 {
        (*self * self.dagger()).max_abs_diff(&Self::IDENTITY)
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        JonesMatrix::new(out)
    }
}

impl Mul<JonesVector> for JonesMatrix {
    type Output = JonesVector;

    fn mul(self, rhs: JonesVector) -> JonesVector {
        self.apply(&rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveplateKind {
    Half,
    Quarter,
}

impl WaveplateKind {
    fn retardance(self) -> f64 {
        match self {
            WaveplateKind::Half => PI,
            WaveplateKind::Quarter => FRAC_PI_2,
        }
    }
}

fn rotated(diag: JonesMatrix, angle: f64) -> JonesMatrix {
    JonesMatrix::rotation(angle) * diag * JonesMatrix::rotation(-angle)
}

/// Retarder with its fast axis at `fast_axis_angle` radians from x:
/// `R(a) diag(1, e^{i retardance}) R(-a)`.
pub fn waveplate(kind: WaveplateKind, fast_axis_angle: f64) -> JonesMatrix {
    let phase = Complex64::from_polar(1.0, kind.retardance());
    rotated(JonesMatrix::diag(ONE, phase), fast_axis_angle)
}

pub fn linear_polarizer(axis_angle: f64) -> JonesMatrix {
    rotated(JonesMatrix::diag(ONE, ZERO), axis_angle)
}

/// Local Stokes parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StokesSample {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesSample {
    pub fn from_components(s: Complex64, p: Complex64) -> Self {
        let cross = p.conj() * s;
        Self {
            s0: s.norm_sqr() + p.norm_sqr(),
            s1: p.norm_sqr() - s.norm_sqr(),
            s2: 2.0 * cross.re,
            s3: 2.0 * cross.im,
        }
    }

    pub fn polarized_intensity(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn degree_of_polarization(&self) -> f64 {
        if self.s0 == 0.0 {
            0.0
        } else {
            self.polarized_intensity() / self.s0
        }
    }

    /// Orientation of the polarization ellipse, radians from the x-axis in `(-pi/2, pi/2]`.
    pub fn linear_angle(&self) -> f64 {
        0.5 * self.s2.atan2(-self.s1)
    }

    pub fn normalized(&self) -> [f64; 3] {
        if self.s0 == 0.0 {
            [0.0; 3]
        } else {
            [self.s1 / self.s0, self.s2 / self.s0, self.s3 / self.s0]
        }
    }

    fn accumulate(&mut self, other: &StokesSample, weight: f64) {
        self.s0 += other.s0 * weight;
        self.s1 += other.s1 * weight;
        self.s2 += other.s2 * weight;
        self.s3 += other.s3 * weight;
    }
}

/// Transverse vector field: S- and P-polarized scalar components on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub s_field: ScalarField,
    pub p_field: ScalarField,
}

impl VectorField {
    pub fn new(s_field: ScalarField, p_field: ScalarField) -> Result<Self> {
        s_field.ensure_same_support(&p_field)?;
        Ok(Self { s_field, p_field })
    }

    /// `scalar (x) pol`: uniform polarization across the beam.
    pub fn from_ket(scalar: &ScalarField, pol: JonesVector) -> Self {
        Self {
            s_field: scalar.scaled(pol.s),
            p_field: scalar.scaled(pol.p),
        }
    }

    pub fn total_power(&self) -> f64 {
        self.s_field.total_power() + self.p_field.total_power()
    }

    pub fn local(&self, i: usize, j: usize) -> Result<JonesVector> {
        self.s_field.grid.check_index(i, j)?;
        Ok(JonesVector::new(
            self.s_field.values[[i, j]],
            self.p_field.values[[i, j]],
        ))
    }

    /// Pointwise `|s|^2 + |p|^2`.
    pub fn intensity(&self) -> Array2<f64> {
        let mut out = self.s_field.values.mapv(|v| v.norm_sqr());
        out.zip_mut_with(&self.p_field.values, |acc, v| *acc += v.norm_sqr());
        out
    }

    pub fn peak_intensity(&self) -> f64 {
        self.intensity().iter().copied().fold(0.0, f64::max)
    }
}

/// Applies `m` at every grid point.
pub fn apply_jones(m: &JonesMatrix, vf: &VectorField) -> VectorField {
    let mut out = vf.clone();
    let [[a, b], [c, d]] = m.m;
    ndarray::Zip::from(&mut out.s_field.values)
        .and(&mut out.p_field.values)
        .for_each(|s, p| {
            let (s0, p0) = (*s, *p);
            *s = a * s0 + b * p0;
            *p = c * s0 + d * p0;
        });
    out
}

pub fn stokes_at(vf: &VectorField, i: usize, j: usize) -> Result<StokesSample> {
    Ok(vf.local(i, j)?.stokes())
}

/// Local Stokes parameters at every grid point.
pub fn stokes_maps(vf: &VectorField) -> Array2<StokesSample> {
    let mut out = Array2::from_elem(vf.s_field.grid.shape(), StokesSample::default());
    ndarray::Zip::from(&mut out)
        .and(&vf.s_field.values)
        .and(&vf.p_field.values)
        .for_each(|o, s, p| *o = StokesSample::from_components(*s, *p));
    out
}

/// Stokes parameters integrated over `w` for each `u` row (incoherent time average).
pub fn time_averaged_stokes_profile(vf: &VectorField) -> Vec<StokesSample> {
    let dw = vf.s_field.grid.dw();
    vf.s_field
        .values
        .rows()
        .into_iter()
        .zip(vf.p_field.values.rows())
        .map(|(s_row, p_row)| {
            let mut acc = StokesSample::default();
            for (s, p) in s_row.iter().zip(p_row.iter()) {
                acc.accumulate(&StokesSample::from_components(*s, *p), dw);
            }
            acc
        })
        .collect()
}

/// Beam-integrated Stokes parameters (sum over the whole grid with `du dw` weights).
pub fn integrated_stokes(vf: &VectorField) -> StokesSample {
    let du = vf.s_field.grid.du();
    let mut acc = StokesSample::default();
    for row in time_averaged_stokes_profile(vf) {
        acc.accumulate(&row, du);
    }
    acc
}
