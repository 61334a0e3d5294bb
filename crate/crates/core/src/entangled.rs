//! Charge-polarization mode-entangled vector beams, `|+q>|R> + e^{i delta} |-q>|L>`,
//! and the closed-form local polarization they carry.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{synthesize_mode, GridSpec, ScalarField, StovParams, PHASE_FLOOR};
use crate::polarization::{ket, JonesVector, Ket, VectorField};

/// Polarization of one term, either a named ket or an explicit Jones vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermPolarization {
    Named(Ket),
    Explicit(JonesVector),
}

impl TermPolarization {
    pub fn vector(&self) -> JonesVector {
        match self {
            TermPolarization::Named(k) => ket(*k),
            TermPolarization::Explicit(v) => *v,
        }
    }
}

impl From<Ket> for TermPolarization {
    fn from(k: Ket) -> Self {
        TermPolarization::Named(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateTerm {
    pub q: i32,
    pub pol: TermPolarization,
    pub coeff: Complex64,
}

impl StateTerm {
    pub fn new(q: i32, pol: impl Into<TermPolarization>, coeff: Complex64) -> Self {
        Self {
            q,
            pol: pol.into(),
            coeff,
        }
    }

    pub fn unit(q: i32, pol: impl Into<TermPolarization>) -> Self {
        Self::new(q, pol, Complex64::new(1.0, 0.0))
    }
}

/// Terms of a charge-polarization state. `delta` multiplies the second term by `e^{i delta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangledStateSpec {
    pub terms: Vec<StateTerm>,
    pub delta: f64,
    pub params: StovParams,
}

impl EntangledStateSpec {
    /// `|+q>|R> + e^{i delta} |-q>|L>`.
    pub fn circular_pair(q: i32, delta: f64, params: StovParams) -> Self {
        Self {
            terms: vec![StateTerm::unit(q, Ket::R), StateTerm::unit(-q, Ket::L)],
            delta,
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Empty("entangled state terms"));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParam(format!(
                "delta must be finite, got {}",
                self.delta
            )));
        }
        for t in &self.terms {
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) || t.coeff.norm() == 0.0 {
                return Err(Error::InvalidParam(format!(
                    "term coefficient must be finite and nonzero, got {}",
                    t.coeff
                )));
            }
            let pol = t.pol.vector();
            if !(pol.intensity().is_finite() && pol.intensity() > 0.0) {
                return Err(Error::InvalidParam(
                    "term polarization is a zero vector".into(),
                ));
            }
        }
        self.params.validate()
    }

    /// Coefficient of term `k`, including the relative phase on the second term.
    pub fn effective_coeff(&self, k: usize) -> Complex64 {
        let c = self.terms[k].coeff;
        if k == 1 {
            c * Complex64::from_polar(1.0, self.delta)
        } else {
            c
        }
    }
}

/// Builds the vector field `sum_k c_k mode(q_k) (x) pol_k`. Not renormalized.
pub fn realize(spec: &EntangledStateSpec, grid: &GridSpec) -> Result<VectorField> {
    spec.validate()?;
    let mut s = ScalarField::zeros(*grid, spec.params.y0);
    let mut p = ScalarField::zeros(*grid, spec.params.y0);
    for (k, term) in spec.terms.iter().enumerate() {
        let mode = synthesize_mode(&spec.params.charge(term.q), grid)?;
        let c = spec.effective_coeff(k);
        let pol = term.pol.vector();
        let (cs, cp) = (c * pol.s, c * pol.p);
        s.values.zip_mut_with(&mode.values, |acc, v| *acc += v * cs);
        p.values.zip_mut_with(&mode.values, |acc, v| *acc += v * cp);
        let label = format!("q={}:{:?}", term.q, term.pol);
        s.meta.labels.push(label.clone());
        p.meta.labels.push(label);
    }
    for f in [&mut s, &mut p] {
        f.meta.mode = Some(spec.params.mode);
        f.meta.eta = Some(spec.params.eta);
    }
    VectorField::new(s, p)
}

/// Relative phase class of a two-term superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    InPhase,
    OutOfPhase,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::InPhase => 1.0,
            Parity::OutOfPhase => -1.0,
        }
    }

    pub fn delta(self) -> f64 {
        match self {
            Parity::InPhase => 0.0,
            Parity::OutOfPhase => PI,
        }
    }

    /// Classifies a relative phase; `None` unless it is 0 or pi (mod 2 pi) within `tol`.
    pub fn from_phase(phase: f64, tol: f64) -> Option<Self> {
        let r = phase.rem_euclid(2.0 * PI);
        if r.min(2.0 * PI - r) <= tol {
            Some(Parity::InPhase)
        } else if (r - PI).abs() <= tol {
            Some(Parity::OutOfPhase)
        } else {
            None
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" | "in_phase" | "+" => Ok(Parity::InPhase),
            "out" | "out_of_phase" | "-" => Ok(Parity::OutOfPhase),
            other => Err(Error::InvalidParam(format!(
                "unknown parity '{other}' (expected in or out)"
            ))),
        }
    }
}

/// Local polarization of `|+1>|R> +- |-1>|L>` at spatiotemporal angle `phi`.
///
/// In phase: `cos(phi) P - sin(phi) S`. Out of phase: `sin(phi) P + cos(phi) S`.
/// Global phases are dropped.
pub fn analytic_polarization(phi: f64, parity: Parity) -> JonesVector {
    let (sin, cos) = phi.rem_euclid(2.0 * PI).sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    match parity {
        Parity::InPhase => JonesVector::new(re(-sin), re(cos)),
        Parity::OutOfPhase => JonesVector::new(re(cos), re(sin)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub w: f64,
    pub phi: f64,
    /// `None` when the sample sits on a near-zero of the field.
    pub alignment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub parity: Parity,
    pub charge: i32,
    /// True for |q| != 1, where the closed form is applied with `q * phi`.
    pub extrapolated: bool,
    pub points: Vec<OraclePoint>,
    pub checked: usize,
    pub flagged: usize,
    pub min_alignment: f64,
}

impl OracleReport {
    pub fn all_aligned(&self, tol: f64) -> bool {
        self.points
            .iter()
            .filter_map(|p| p.alignment)
            .all(|a| a >= 1.0 - tol)
    }
}

/// Identifies `|+q>|R> + c |-q>|L>` with `c` real up to sign; returns `(q, parity)`.
fn circular_family(spec: &EntangledStateSpec) -> Result<(i32, Parity)> {
    let reject = |why: &str| {
        Err(Error::InvalidParam(format!(
            "oracle check needs a two-term |+q>|R> +- |-q>|L> state: {why}"
        )))
    };
    let [first, second] = spec.terms.as_slice() else {
        return reject("expected exactly two terms");
    };
    if first.q <= 0 || second.q != -first.q {
        return reject("charges must be +q then -q with q > 0");
    }
    let tol = 1e-12;
    if first.pol.vector().alignment(&ket(Ket::R)) < 1.0 - tol
        || second.pol.vector().alignment(&ket(Ket::L)) < 1.0 - tol
    {
        return reject("polarizations must be R then L");
    }
    // Express each term on the unit-normalized R and L kets, including any phase
    // carried by an explicit polarization vector.
    let c1 = spec.effective_coeff(0) * ket(Ket::R).inner(&first.pol.vector());
    let c2 = spec.effective_coeff(1) * ket(Ket::L).inner(&second.pol.vector());
    if ((c1.norm() - c2.norm()) / c1.norm()).abs() > 1e-12 {
        return reject("terms must have equal weight");
    }
    match Parity::from_phase((c2 / c1).arg(), 1e-9) {
        Some(parity) => Ok((first.q, parity)),
        None => reject("relative phase must be 0 or pi"),
    }
}

/// Compares the realized local polarization with [`analytic_polarization`] at each sample.
pub fn oracle_check(
    spec: &EntangledStateSpec,
    grid: &GridSpec,
    samples: &[(usize, usize)],
) -> Result<OracleReport> {
    let (q, parity) = circular_family(spec)?;
    let vf = realize(spec, grid)?;
    let floor = PHASE_FLOOR * vf.peak_intensity().sqrt();
    let mut points = Vec::with_capacity(samples.len());
    for &(i, j) in samples {
        let local = vf.local(i, j)?;
        let (u, w) = (grid.u(i), grid.w(j));
        let phi = w.atan2(u);
        let alignment = if local.intensity().sqrt() <= floor {
            None
        } else {
            Some(analytic_polarization(f64::from(q) * phi, parity).alignment(&local))
        };
        points.push(OraclePoint {
            i,
            j,
            u,
            w,
            phi,
            alignment,
        });
    }
    let checked = points.iter().filter(|p| p.alignment.is_some()).count();
    let min_alignment = points
        .iter()
        .filter_map(|p| p.alignment)
        .fold(f64::INFINITY, f64::min);
    Ok(OracleReport {
        parity,
        charge: q,
        extrapolated: q != 1,
        checked,
        flagged: points.len() - checked,
        min_alignment: if checked == 0 {
            f64::NAN
        } else {
            min_alignment
        },
        points,
    })
}

/// Coefficients of the state over charge x {R, L}: one row per distinct charge,
/// in ascending order of charge.
pub fn coefficient_matrix(spec: &EntangledStateSpec) -> (Vec<i32>, Vec<[Complex64; 2]>) {
    let mut charges: Vec<i32> = spec.terms.iter().map(|t| t.q).collect();
    charges.sort_unstable();
    charges.dedup();
    let (r, l) = (ket(Ket::R), ket(Ket::L));
    let mut rows = vec![[Complex64::new(0.0, 0.0); 2]; charges.len()];
    for (k, term) in spec.terms.iter().enumerate() {
        let row = charges
            .binary_search(&term.q)
            .expect("charge collected above");
        let c = spec.effective_coeff(k);
        let pol = term.pol.vector();
        rows[row][0] += c * r.inner(&pol);
        rows[row][1] += c * l.inner(&pol);
    }
    (charges, rows)
}

/// Singular values of the coefficient matrix, largest first.
pub fn schmidt_coefficients(spec: &EntangledStateSpec) -> [f64; 2] {
    let (_, rows) = coefficient_matrix(spec);
    // Gram matrix G = M^dagger M is 2x2 Hermitian.
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for row in &rows {
        for a in 0..2 {
            for b in 0..2 {
                g[a][b] += row[a].conj() * row[b];
            }
        }
    }
    let tr = g[0][0].re + g[1][1].re;
    let det = g[0][0].re * g[1][1].re - g[0][1].norm_sqr();
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let hi = (tr / 2.0 + disc).max(0.0);
    let lo = (tr / 2.0 - disc).max(0.0);
    [hi.sqrt(), lo.sqrt()]
}

/// Number of singular values above `rel_tol` times the largest: 2 for an entangled
/// charge-polarization state, 1 for a separable one.
pub fn schmidt_rank(spec: &EntangledStateSpec, rel_tol: f64) -> usize {
    let sv = schmidt_coefficients(spec);
    if sv[0] == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * sv[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::polarization::stokes_maps;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn small_grid() -> GridSpec {
        make_grid(32, 32, 4.0, 4.0).unwrap()
    }

    #[test]
    fn single_term_is_uniformly_right_circular() {
        let spec = EntangledStateSpec {
            terms: vec![StateTerm::unit(1, Ket::R)],
            delta: 0.0,
            params: StovParams::default(),
        };
        let vf = realize(&spec, &small_grid()).unwrap();
        for st in stokes_maps(&vf).iter().filter(|s| s.s0 > 1e-20) {
            assert_abs_diff_eq!(st.s3 / st.s0, 1.0, epsilon = 1e-12);
        }
    }

    /// Expands `e^{iPhi}(P + iS) +- e^{-iPhi}(P - iS)` in Cartesian form.
    #[test]
    fn circular_pair_components_are_cartesian() {
        let grid = small_grid();
        let g = synthesize_mode(&StovParams::default(), &grid).unwrap();
        for (delta, s_of, p_of) in [
            (
                0.0,
                (|_u: f64, w: f64| -w) as fn(f64, f64) -> f64,
                (|u: f64, _w: f64| u) as fn(f64, f64) -> f64,
            ),
            (PI, |u, _w| u, |_u, w| w),
        ] {
            let spec = EntangledStateSpec::circular_pair(1, delta, StovParams::default());
            let vf = realize(&spec, &grid).unwrap();
            // Common complex scale fixed from one reference sample.
            let (i0, j0) = (26, 20);
            let (u0, w0) = (grid.u(i0), grid.w(j0));
            let scale = vf.p_field.values[[i0, j0]] / (p_of(u0, w0) * g.values[[i0, j0]].re);
            for i in 0..grid.n_u {
                for j in 0..grid.n_w {
                    let (u, w) = (grid.u(i), grid.w(j));
                    let env = g.values[[i, j]].re;
                    let want_s = scale * s_of(u, w) * env;
                    let want_p = scale * p_of(u, w) * env;
                    assert_abs_diff_eq!(
                        (vf.s_field.values[[i, j]] - want_s).norm(),
                        0.0,
                        epsilon = 1e-12
                    );
                    assert_abs_diff_eq!(
                        (vf.p_field.values[[i, j]] - want_p).norm(),
                        0.0,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    /// Every tabulated case, as named kets, compared projectively.
    #[test]
    fn analytic_polarization_matches_table() {
        use Parity::*;
        let table = [
            (InPhase, 0.0, Ket::P),
            (InPhase, FRAC_PI_2, Ket::S),
            (InPhase, PI, Ket::P),
            (InPhase, 3.0 * FRAC_PI_2, Ket::S),
            (InPhase, FRAC_PI_4, Ket::A),
            (InPhase, -FRAC_PI_4, Ket::D),
            (InPhase, 3.0 * FRAC_PI_4, Ket::D),
            (InPhase, -3.0 * FRAC_PI_4, Ket::A),
            (OutOfPhase, 0.0, Ket::S),
            (OutOfPhase, FRAC_PI_2, Ket::P),
            (OutOfPhase, PI, Ket::S),
            (OutOfPhase, 3.0 * FRAC_PI_2, Ket::P),
            (OutOfPhase, FRAC_PI_4, Ket::D),
            (OutOfPhase, -FRAC_PI_4, Ket::A),
            (OutOfPhase, 3.0 * FRAC_PI_4, Ket::A),
            (OutOfPhase, -3.0 * FRAC_PI_4, Ket::D),
        ];
        for (parity, phi, want) in table {
            let got = analytic_polarization(phi, parity);
            assert_abs_diff_eq!(got.alignment(&ket(want)), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(got.intensity(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_polarization_is_periodic() {
        for k in 0..16 {
            let phi = k as f64 * 0.41;
            for parity in [Parity::InPhase, Parity::OutOfPhase] {
                let a = analytic_polarization(phi, parity);
                let b = analytic_polarization(phi + 2.0 * PI, parity);
                assert_abs_diff_eq!(a.alignment(&b), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn oracle_check_flags_the_singularity() {
        let grid = make_grid(33, 33, 4.0, 4.0).unwrap();
        let spec = EntangledStateSpec::circular_pair(1, 0.0, StovParams::default());
        let report = oracle_check(&spec, &grid, &[(16, 16), (20, 5), (3, 30)]).unwrap();
        assert_eq!(report.flagged, 1);
        assert_eq!(report.checked, 2);
        assert!(report.points[0].alignment.is_none());
        assert!(report.all_aligned(1e-9));
        assert!(!report.extrapolated);
    }

    #[test]
    fn oracle_check_rejects_other_families() {
        let grid = small_grid();
        let mut spec = EntangledStateSpec::circular_pair(1, 0.5, StovParams::default());
        assert!(oracle_check(&spec, &grid, &[(1, 1)]).is_err());
        spec.delta = 0.0;
        spec.terms[1].pol = Ket::R.into();
        assert!(oracle_check(&spec, &grid, &[(1, 1)]).is_err());
        let single = EntangledStateSpec {
            terms: vec![StateTerm::unit(1, Ket::R)],
            ..spec
        };
        assert!(oracle_check(&single, &grid, &[(1, 1)]).is_err());
    }

    #[test]
    fn oracle_check_out_of_range_sample() {
        let spec = EntangledStateSpec::circular_pair(1, 0.0, StovParams::default());
        assert!(oracle_check(&spec, &small_grid(), &[(40, 0)]).is_err());
    }

    #[test]
    fn higher_charge_is_labeled_extrapolation() {
        let grid = small_grid();
        let spec = EntangledStateSpec::circular_pair(2, PI, StovParams::default());
        let samples: Vec<_> = (0..32)
            .step_by(3)
            .flat_map(|i| (0..32).step_by(5).map(move |j| (i, j)))
            .collect();
        let report = oracle_check(&spec, &grid, &samples).unwrap();
        assert!(report.extrapolated);
        assert!(report.all_aligned(1e-9), "min {}", report.min_alignment);
    }

    #[test]
    fn realize_validates_terms() {
        let grid = small_grid();
        let empty = EntangledStateSpec {
            terms: vec![],
            delta: 0.0,
            params: StovParams::default(),
        };
        assert!(matches!(realize(&empty, &grid), Err(Error::Empty(_))));
        let zero = EntangledStateSpec {
            terms: vec![StateTerm::new(1, Ket::R, Complex64::new(0.0, 0.0))],
            ..empty.clone()
        };
        assert!(realize(&zero, &grid).is_err());
        let nan = EntangledStateSpec {
            terms: vec![StateTerm::new(1, Ket::R, Complex64::new(f64::NAN, 0.0))],
            ..empty
        };
        assert!(realize(&nan, &grid).is_err());
    }

    #[test]
    fn rank_witness() {
        let params = StovParams::default();
        let entangled = EntangledStateSpec::circular_pair(1, 0.0, params);
        assert_eq!(schmidt_rank(&entangled, 1e-9), 2);
        let sv = schmidt_coefficients(&entangled);
        assert_abs_diff_eq!(sv[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sv[1], 1.0, epsilon = 1e-12);

        let mut collapsed = entangled.clone();
        collapsed.terms[1].pol = Ket::R.into();
        assert_eq!(schmidt_rank(&collapsed, 1e-9), 1);

        let same_charge = EntangledStateSpec {
            terms: vec![StateTerm::unit(1, Ket::R), StateTerm::unit(1, Ket::L)],
            delta: 0.3,
            params,
        };
        assert_eq!(schmidt_rank(&same_charge, 1e-9), 1);
    }

    #[test]
    fn parity_parsing_and_classification() {
        assert_eq!("in".parse::<Parity>().unwrap(), Parity::InPhase);
        assert_eq!("out".parse::<Parity>().unwrap(), Parity::OutOfPhase);
        assert!("sideways".parse::<Parity>().is_err());
        assert_eq!(Parity::from_phase(2.0 * PI, 1e-12), Some(Parity::InPhase));
        assert_eq!(Parity::from_phase(-PI, 1e-12), Some(Parity::OutOfPhase));
        assert_eq!(Parity::from_phase(1.0, 1e-12), None);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let mut spec = EntangledStateSpec::circular_pair(1, PI, StovParams::default());
        spec.terms.push(StateTerm::new(
            2,
            TermPolarization::Explicit(ket(Ket::D)),
            Complex64::new(0.5, -0.25),
        ));
        let text = serde_json::to_string(&spec).unwrap();
        let back: EntangledStateSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
