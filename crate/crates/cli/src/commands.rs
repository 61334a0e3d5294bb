//! Field synthesis and measurement commands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use stov_core::entangled::{
    coefficient_matrix, oracle_check, realize, schmidt_coefficients, schmidt_rank,
    EntangledStateSpec, OracleReport, StateTerm,
};
use stov_core::instruments::{
    analyzer_angles, estimate_charge, phase_scan, polarization_analyzer, spectrometer,
    spectrometer_vector, ChargeEstimate, PolScanResult, Spectrogram, VisibilityResult,
};
use stov_core::io::{write_csv, write_field, Convention, FieldData};
use stov_core::polarization::{
    integrated_stokes, stokes_maps, time_averaged_stokes_profile, StokesSample,
};
use stov_core::{
    grid::winding_number, inner_product, project_xy, superpose, synthesize_mode, GridSpec, Ket,
    ScalarField, VectorField,
};

use crate::checks::Check;
use crate::config::{parse_charge, RunConfig, RunSummary};
use crate::error::{CliError, Result};
use crate::render::{
    write_intensity_pgm, write_json, write_pgm, write_phase_pgm, write_stokes_pgms,
};

/// Samples along `y` for x-y projections.
pub const N_Y: usize = 128;
pub const Y_HALF: f64 = 3.0;
/// Relative phases sampled by the interferometer scans.
pub const SCAN_PHASES: usize = 64;
/// HWP angles sampled by the analyzer scans.
pub const ANALYZER_ANGLES: usize = 64;
/// Spectrograms are cropped to `|Omega| <= SPECTRAL_WINDOW * eta` for display.
pub const SPECTRAL_WINDOW: f64 = 8.0;

/// Output directory of a command and the checks it evaluated.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub(crate) fn plain(dir: PathBuf) -> Self {
        Self {
            dir,
            checks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarTerm {
    pub q: i32,
    pub coeff: Complex64,
}

fn parse_coeff(amp: Option<&str>, phase: Option<&str>, term: &str) -> Result<Complex64> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Arg(format!("term '{term}': '{t}': {e}")))
    };
    let amp = amp.map(num).transpose()?.unwrap_or(1.0);
    let phase = phase.map(num).transpose()?.unwrap_or(0.0);
    Ok(Complex64::from_polar(amp, phase))
}

/// `Q[:AMP[:PHASE]]`, comma separated.
pub fn parse_scalar_terms(s: &str) -> Result<Vec<ScalarTerm>> {
    s.split(',')
        .map(|term| {
            let mut parts = term.split(':');
            let q = parse_charge(parts.next().unwrap_or("")).map_err(CliError::Arg)?;
            let coeff = parse_coeff(parts.next(), parts.next(), term)?;
            if parts.next().is_some() {
                return Err(CliError::Arg(format!(
                    "term '{term}': expected Q[:AMP[:PHASE]]"
                )));
            }
            Ok(ScalarTerm { q, coeff })
        })
        .collect()
}

/// `Q:KET[:AMP[:PHASE]]`, comma separated, e.g. `+1:R,-1:L`.
pub fn parse_vector_terms(s: &str) -> Result<Vec<StateTerm>> {
    s.split(',')
        .map(|term| {
            let mut parts = term.split(':');
            let q = parse_charge(parts.next().unwrap_or("")).map_err(CliError::Arg)?;
            let ket: Ket = parts
                .next()
                .ok_or_else(|| CliError::Arg(format!("term '{term}': expected Q:KET")))?
                .parse()?;
            let coeff = parse_coeff(parts.next(), parts.next(), term)?;
            if parts.next().is_some() {
                return Err(CliError::Arg(format!(
                    "term '{term}': expected Q:KET[:AMP[:PHASE]]"
                )));
            }
            Ok(StateTerm::new(q, ket, coeff))
        })
        .collect()
}

/// Vector state from `--terms`, else the config file, else `default_terms`.
/// `--delta` overrides the state's relative phase.
pub fn resolve_state(
    cfg: &RunConfig,
    terms: Option<&str>,
    delta: Option<f64>,
    default_terms: &str,
) -> Result<EntangledStateSpec> {
    let mut spec = match (terms, &cfg.state) {
        (Some(t), _) => EntangledStateSpec {
            terms: parse_vector_terms(t)?,
            delta: 0.0,
            params: cfg.params(0),
        },
        (None, Some(state)) => state.clone(),
        (None, None) => EntangledStateSpec {
            terms: parse_vector_terms(default_terms)?,
            delta: 0.0,
            params: cfg.params(0),
        },
    };
    if let Some(d) = delta {
        spec.delta = d;
    }
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
pub(crate) struct Header<'a> {
    command: &'a str,
    run: RunSummary,
    convention: Convention,
}

pub(crate) fn header<'a>(command: &'a str, cfg: &RunConfig) -> Header<'a> {
    Header {
        command,
        run: cfg.summary(),
        convention: Convention::default(),
    }
}

pub(crate) fn charge_tag(q: i32) -> String {
    match q.signum() {
        -1 => format!("m{}", -q),
        1 => format!("p{q}"),
        _ => "0".into(),
    }
}

fn winding_margin(grid: &GridSpec) -> usize {
    grid.n_u.min(grid.n_w) / 8
}

/// Grid sample nearest to `(u, w)`.
pub fn nearest_index(grid: &GridSpec, u: f64, w: f64) -> (usize, usize) {
    let idx = |x: f64, d: f64, n: usize| {
        let k = (x / d + n as f64 / 2.0 - 0.5).round();
        k.clamp(0.0, (n - 1) as f64) as usize
    };
    (idx(u, grid.du(), grid.n_u), idx(w, grid.dw(), grid.n_w))
}

/// Samples on three rings in the eight principal directions.
pub fn ring_samples(grid: &GridSpec) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in [0.5, 1.0, 1.5] {
        for k in 0..8 {
            let phi = PI * k as f64 / 4.0;
            out.push(nearest_index(grid, r * phi.cos(), r * phi.sin()));
        }
    }
    out
}

#[derive(Serialize)]
struct SynthReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    q: i32,
    power: f64,
    peak_intensity: f64,
    winding_number: f64,
    files: Vec<String>,
}

pub fn cmd_synth(cfg: &RunConfig, q: i32) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let dir = cfg.command_dir("synth")?;
    let f = synthesize_mode(&cfg.params(q), &grid)?;
    let tag = charge_tag(q);
    let files = vec![
        format!("field_{tag}.json"),
        format!("field_{tag}.bin"),
        format!("xz_{tag}.pgm"),
        format!("phase_{tag}.pgm"),
        format!("xy_{tag}.pgm"),
    ];
    write_field(&FieldData::Scalar(f.clone()), &dir.join(&files[0]))?;
    write_intensity_pgm(&dir, &files[2], &f)?;
    write_phase_pgm(&dir, &files[3], &f)?;
    write_pgm(&dir, &files[4], &project_xy(&f, N_Y, Y_HALF)?)?;
    let report = SynthReport {
        header: header("synth", cfg),
        q,
        power: f.total_power(),
        peak_intensity: f.peak_intensity(),
        winding_number: winding_number(&f, winding_margin(&grid))?,
        files,
    };
    write_json(&dir, &format!("report_{tag}.json"), &report)?;
    Ok(Outcome::plain(dir))
}

#[derive(Serialize)]
struct SuperposeReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    terms: Vec<ScalarTerm>,
    delta: f64,
    power: f64,
    centroid_u: f64,
    /// `|<term_a, term_b>|` between the normalized single-charge modes.
    overlaps: Vec<Vec<f64>>,
}

/// Sum of the terms with `e^{i delta}` applied to every term after the first.
pub fn build_superposition(
    cfg: &RunConfig,
    grid: &GridSpec,
    terms: &[ScalarTerm],
    delta: f64,
) -> Result<(ScalarField, Vec<ScalarField>)> {
    if terms.is_empty() {
        return Err(CliError::Arg("no superposition terms".into()));
    }
    let modes = terms
        .iter()
        .map(|t| synthesize_mode(&cfg.params(t.q), grid))
        .collect::<stov_core::Result<Vec<_>>>()?;
    let shift = Complex64::from_polar(1.0, delta);
    let weighted: Vec<(&ScalarField, Complex64)> = modes
        .iter()
        .zip(terms)
        .enumerate()
        .map(|(k, (m, t))| (m, if k == 0 { t.coeff } else { t.coeff * shift }))
        .collect();
    Ok((superpose(&weighted)?, modes))
}

pub fn cmd_superpose(cfg: &RunConfig, terms: &str, delta: f64) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let terms = parse_scalar_terms(terms)?;
    let dir = cfg.command_dir("superpose")?;
    let (sum, modes) = build_superposition(cfg, &grid, &terms, delta)?;
    let overlaps = modes
        .iter()
        .map(|a| {
            modes
                .iter()
                .map(|b| Ok(inner_product(a, b)?.norm()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    write_field(&FieldData::Scalar(sum.clone()), &dir.join("field.json"))?;
    write_intensity_pgm(&dir, "xz.pgm", &sum)?;
    write_phase_pgm(&dir, "phase.pgm", &sum)?;
    write_pgm(&dir, "xy.pgm", &project_xy(&sum, N_Y, Y_HALF)?)?;
    let report = SuperposeReport {
        header: header("superpose", cfg),
        terms,
        delta,
        power: sum.total_power(),
        centroid_u: sum.centroid_u(),
        overlaps,
    };
    write_json(&dir, "report.json", &report)?;
    Ok(Outcome::plain(dir))
}

#[derive(Serialize)]
struct EntangleReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    state: &'a EntangledStateSpec,
    power: f64,
    schmidt_coefficients: [f64; 2],
    schmidt_rank: usize,
    coefficient_charges: Vec<i32>,
    integrated_stokes: StokesSample,
    oracle: Option<OracleReport>,
    oracle_note: Option<String>,
}

pub fn cmd_entangle(cfg: &RunConfig, terms: Option<&str>, delta: Option<f64>) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let spec = resolve_state(cfg, terms, delta, "+1:R,-1:L")?;
    let dir = cfg.command_dir("entangle")?;
    let vf = realize(&spec, &grid)?;
    write_field(&FieldData::Vector(vf.clone()), &dir.join("field.json"))?;
    write_pgm(&dir, "intensity.pgm", &vf.intensity())?;
    write_stokes_pgms(&dir, "stokes", &stokes_maps(&vf))?;
    write_stokes_profile(&dir, "stokes_profile.csv", &vf)?;
    let (oracle, oracle_note) = match oracle_check(&spec, &grid, &ring_samples(&grid)) {
        Ok(report) => (Some(report), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = EntangleReport {
        header: header("entangle", cfg),
        state: &spec,
        power: vf.total_power(),
        schmidt_coefficients: schmidt_coefficients(&spec),
        schmidt_rank: schmidt_rank(&spec, 1e-9),
        coefficient_charges: coefficient_matrix(&spec).0,
        integrated_stokes: integrated_stokes(&vf),
        oracle,
        oracle_note,
    };
    write_json(&dir, "report.json", &report)?;
    Ok(Outcome::plain(dir))
}

/// Per-row time-averaged Stokes parameters as CSV.
pub fn write_stokes_profile(dir: &Path, name: &str, vf: &VectorField) -> Result<()> {
    let profile = time_averaged_stokes_profile(vf);
    let u = vf.s_field.grid.u_coords();
    let col = |f: fn(&StokesSample) -> f64| profile.iter().map(f).collect::<Vec<_>>();
    let (s0, s1, s2, s3) = (col(|s| s.s0), col(|s| s.s1), col(|s| s.s2), col(|s| s.s3));
    write_csv(
        &[
            ("u", &u),
            ("s0", &s0),
            ("s1", &s1),
            ("s2", &s2),
            ("s3", &s3),
        ],
        &dir.join(name),
    )?;
    Ok(())
}

/// Default pairs: identical, neighbouring and opposite charges up to |q| = 2.
pub const DEFAULT_PAIRS: &str = "0:0,1:1,0:1,0:-1,1:-1,0:2,1:-2,2:-2";

pub fn parse_pairs(s: &str) -> Result<Vec<(i32, i32)>> {
    s.split(',')
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| CliError::Arg(format!("pair '{p}': expected A:B")))?;
            let (a, b) = (
                parse_charge(a).map_err(CliError::Arg)?,
                parse_charge(b).map_err(CliError::Arg)?,
            );
            if a.abs() > 3 || b.abs() > 3 {
                return Err(CliError::Arg(format!(
                    "pair '{p}': charges must lie in [-3, 3]"
                )));
            }
            Ok((a, b))
        })
        .collect()
}

#[derive(Serialize)]
pub struct PairReport {
    pub q_a: i32,
    pub q_b: i32,
    pub overlap: Complex64,
    pub visibility: VisibilityResult,
    pub power_in_phase: f64,
    pub power_out_of_phase: f64,
}

#[derive(Serialize)]
struct OrthogonalityReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    pairs: Vec<PairReport>,
    charges: Vec<i32>,
    /// `|<q_a, q_b>|` over all charges in `charges`.
    overlap_matrix: Vec<Vec<f64>>,
}

/// Interferes `|q_a>` with `|q_b>`, writing panels into `dir/pair_<a>_<b>`.
pub fn run_pair(
    cfg: &RunConfig,
    grid: &GridSpec,
    dir: &Path,
    q_a: i32,
    q_b: i32,
) -> Result<PairReport> {
    let f = synthesize_mode(&cfg.params(q_a), grid)?;
    let g = synthesize_mode(&cfg.params(q_b), grid)?;
    let sub = dir.join(format!("pair_{}_{}", charge_tag(q_a), charge_tag(q_b)));
    std::fs::create_dir_all(&sub).map_err(|source| CliError::Io {
        path: sub.display().to_string(),
        source,
    })?;
    let one = Complex64::new(1.0, 0.0);
    let plus = superpose(&[(&f, one), (&g, one)])?;
    let minus = superpose(&[(&f, one), (&g, -one)])?;
    write_intensity_pgm(&sub, "xz_in.pgm", &plus)?;
    write_intensity_pgm(&sub, "xz_out.pgm", &minus)?;
    write_pgm(&sub, "xy_in.pgm", &project_xy(&plus, N_Y, Y_HALF)?)?;
    write_pgm(&sub, "xy_out.pgm", &project_xy(&minus, N_Y, Y_HALF)?)?;
    let visibility = phase_scan(&f, &g, SCAN_PHASES)?;
    let (phases, powers): (Vec<f64>, Vec<f64>) = visibility.scan.iter().copied().unzip();
    write_csv(
        &[("phase", &phases), ("power", &powers)],
        &sub.join("scan.csv"),
    )?;
    let report = PairReport {
        q_a,
        q_b,
        overlap: inner_product(&f, &g)?,
        visibility,
        power_in_phase: plus.total_power(),
        power_out_of_phase: minus.total_power(),
    };
    write_json(&sub, "report.json", &report)?;
    Ok(report)
}

pub fn cmd_orthogonality(cfg: &RunConfig, pairs: &str) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let pairs = parse_pairs(pairs)?;
    let dir = cfg.command_dir("orthogonality")?;
    let reports = pairs
        .iter()
        .map(|&(a, b)| run_pair(cfg, &grid, &dir, a, b))
        .collect::<Result<Vec<_>>>()?;
    let charges: Vec<i32> = (-3..=3).collect();
    let modes = charges
        .iter()
        .map(|&q| synthesize_mode(&cfg.params(q), &grid))
        .collect::<stov_core::Result<Vec<_>>>()?;
    let overlap_matrix = modes
        .iter()
        .map(|a| {
            modes
                .iter()
                .map(|b| Ok(inner_product(a, b)?.norm()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let report = OrthogonalityReport {
        header: header("orthogonality", cfg),
        pairs: reports,
        charges,
        overlap_matrix,
    };
    write_json(&dir, "summary.json", &report)?;
    Ok(Outcome::plain(dir))
}

#[derive(Serialize)]
struct PolscanReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    state: &'a EntangledStateSpec,
    qwp_angle_deg: f64,
    lp_angle_deg: f64,
    scan: PolScanResult,
}

pub fn cmd_polscan(
    cfg: &RunConfig,
    terms: Option<&str>,
    delta: Option<f64>,
    n_angles: usize,
    qwp_deg: f64,
    lp_deg: f64,
) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let spec = resolve_state(cfg, terms, delta, "+1:R")?;
    let dir = cfg.command_dir("polscan")?;
    let vf = realize(&spec, &grid)?;
    let angles = analyzer_angles(n_angles);
    let scan = polarization_analyzer(&vf, qwp_deg.to_radians(), &angles, lp_deg.to_radians())?;
    write_csv(
        &[("angle", &scan.angles), ("power", &scan.powers)],
        &dir.join("scan.csv"),
    )?;
    let report = PolscanReport {
        header: header("polscan", cfg),
        state: &spec,
        qwp_angle_deg: qwp_deg,
        lp_angle_deg: lp_deg,
        scan,
    };
    write_json(&dir, "report.json", &report)?;
    Ok(Outcome::plain(dir))
}

/// How the spectrometer's helicity call relates to the charge.
pub const SIGN_CALIBRATION: &str =
    "kernel exp(-i Omega w); positive (u, Omega) covariance <=> q > 0";

#[derive(Serialize)]
pub struct SpectrumReport {
    pub estimate: ChargeEstimate,
    pub field_power: f64,
    pub spectral_power: f64,
    pub parseval_rel_error: f64,
    pub sign_calibration: &'static str,
}

impl SpectrumReport {
    pub fn new(sp: &Spectrogram, field_power: f64) -> Result<Self> {
        let spectral_power = sp.total_power();
        Ok(Self {
            estimate: estimate_charge(sp)?,
            field_power,
            spectral_power,
            parseval_rel_error: (spectral_power - field_power).abs() / field_power,
            sign_calibration: SIGN_CALIBRATION,
        })
    }
}

/// Writes the display crop of a spectrogram.
pub fn write_spectrogram(dir: &Path, name: &str, sp: &Spectrogram, eta: f64) -> Result<()> {
    let crop = sp.crop_omega(SPECTRAL_WINDOW * eta);
    write_pgm(dir, name, &crop.intensity)
}

#[derive(Serialize)]
struct SpectrometerReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    q: Option<i32>,
    state: Option<&'a EntangledStateSpec>,
    spectrum: SpectrumReport,
}

pub fn cmd_spectrometer(
    cfg: &RunConfig,
    q: Option<i32>,
    terms: Option<&str>,
    delta: Option<f64>,
) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let vector = terms.is_some() || (q.is_none() && cfg.state.is_some());
    let dir = cfg.command_dir("spectrometer")?;
    let (sp, power, state) = if vector {
        let spec = resolve_state(cfg, terms, delta, "+1:R,-1:L")?;
        let vf = realize(&spec, &grid)?;
        (spectrometer_vector(&vf)?, vf.total_power(), Some(spec))
    } else {
        let f = synthesize_mode(&cfg.params(q.unwrap_or(1)), &grid)?;
        (spectrometer(&f), f.total_power(), None)
    };
    write_spectrogram(&dir, "spectrogram.pgm", &sp, cfg.eta)?;
    let report = SpectrometerReport {
        header: header("spectrometer", cfg),
        q: if vector { None } else { Some(q.unwrap_or(1)) },
        state: state.as_ref(),
        spectrum: SpectrumReport::new(&sp, power)?,
    };
    write_json(&dir, "report.json", &report)?;
    Ok(Outcome::plain(dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_terms() {
        let t = parse_scalar_terms("0,+1:2,\u{2212}1:1:3.14159").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[1].q, 1);
        assert_eq!(t[1].coeff, Complex64::new(2.0, 0.0));
        assert_eq!(t[2].q, -1);
        assert!((t[2].coeff.re + 1.0).abs() < 1e-5);
        assert!(parse_scalar_terms("1:2:3:4").is_err());
        assert!(parse_scalar_terms("a").is_err());
    }

    #[test]
    fn vector_terms() {
        let t = parse_vector_terms("+1:R,-1:L").unwrap();
        assert_eq!((t[0].q, t[1].q), (1, -1));
        assert!(parse_vector_terms("+1:Q").is_err());
        assert!(parse_vector_terms("+1").is_err());
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pairs("0:1,1:-1").unwrap(), vec![(0, 1), (1, -1)]);
        assert_eq!(parse_pairs(DEFAULT_PAIRS).unwrap().len(), 8);
        assert!(parse_pairs("0:4").is_err());
        assert!(parse_pairs("01").is_err());
    }

    #[test]
    fn delta_flag_overrides_state() {
        let cfg = RunConfig::default();
        let spec = resolve_state(&cfg, None, Some(PI), "+1:R,-1:L").unwrap();
        assert_eq!(spec.delta, PI);
        assert_eq!(spec.terms.len(), 2);
    }

    #[test]
    fn ring_samples_hit_principal_directions() {
        let grid = GridSpec::new(257, 257, 4.0, 4.0).unwrap();
        for (k, &(i, j)) in ring_samples(&grid)[8..16].iter().enumerate() {
            let phi = grid.w(j).atan2(grid.u(i));
            let want = PI * k as f64 / 4.0;
            let diff = (phi - want).rem_euclid(2.0 * PI);
            assert!(diff.min(2.0 * PI - diff) < 1e-12, "k={k}");
        }
    }
}
