//! Figure reproduction with embedded quantitative checks.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;
use stov_core::entangled::{realize, EntangledStateSpec, Parity};
use stov_core::instruments::{
    analyzer_angles, polarization_analyzer, reference_compare, spectrometer, spectrometer_vector,
    PolScanResult, DEFAULT_ANALYZER_LP, DEFAULT_ANALYZER_QWP,
};
use stov_core::io::write_csv;
use stov_core::polarization::stokes_maps;
use stov_core::{project_xy, superpose, synthesize_mode, GridSpec, Ket, ScalarField, VectorField};

use crate::checks::{failures, Check};
use crate::commands::{
    charge_tag, header, write_spectrogram, write_stokes_profile, Header, Outcome, SpectrumReport,
    ANALYZER_ANGLES, N_Y, Y_HALF,
};
use crate::config::RunConfig;
use crate::error::Result;
use crate::render::{
    brightest_row_offset, line_fraction, u0_line_intensity, w0_line_intensity, write_intensity_pgm,
    write_json, write_pgm, write_phase_pgm, write_stokes_pgms,
};

#[derive(Serialize)]
struct FigureReport<'a, T: Serialize> {
    #[serde(flatten)]
    header: Header<'a>,
    panels: T,
    checks: &'a [Check],
    all_passed: bool,
}

fn finish<T: Serialize>(
    cfg: &RunConfig,
    name: &'static str,
    dir: std::path::PathBuf,
    panels: T,
    checks: Vec<Check>,
) -> Result<Outcome> {
    let report = FigureReport {
        header: header(name, cfg),
        panels,
        checks: &checks,
        all_passed: failures(&checks).is_empty(),
    };
    write_json(&dir, "report.json", &report)?;
    Ok(Outcome { dir, checks })
}

fn parity_tag(parity: Parity) -> &'static str {
    match parity {
        Parity::InPhase => "in",
        Parity::OutOfPhase => "out",
    }
}

/// `f + g` or `f - g`.
pub fn interfere(f: &ScalarField, g: &ScalarField, parity: Parity) -> Result<ScalarField> {
    Ok(superpose(&[
        (f, Complex64::new(1.0, 0.0)),
        (g, Complex64::new(parity.sign(), 0.0)),
    ])?)
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyPanel {
    pub family: &'static str,
    pub q_a: i32,
    pub q_b: i32,
    pub parity: Parity,
    pub power: f64,
    pub centroid_u: f64,
    /// Peak intensity on the `u = 0` line over the field peak.
    pub u0_line_fraction: f64,
    /// Peak intensity on the `w = 0` line over the field peak.
    pub w0_line_fraction: f64,
    /// `|u|` of the brightest row of the x-y projection.
    pub xy_peak_abs_u: f64,
}

/// The three two-charge families of the superposition figure.
pub const FIG2_FAMILIES: [(&str, i32, i32); 3] =
    [("identical", 1, 1), ("zero_one", 0, 1), ("opposite", 1, -1)];

#[derive(Serialize)]
struct Fig2Panels {
    single_modes: Vec<i32>,
    families: Vec<FamilyPanel>,
}

pub fn family_panel(
    grid: &GridSpec,
    family: &'static str,
    (q_a, q_b): (i32, i32),
    parity: Parity,
    sum: &ScalarField,
) -> Result<FamilyPanel> {
    let projection = project_xy(sum, N_Y, Y_HALF)?;
    Ok(FamilyPanel {
        family,
        q_a,
        q_b,
        parity,
        power: sum.total_power(),
        centroid_u: sum.centroid_u(),
        u0_line_fraction: line_fraction(&u0_line_intensity(sum), sum),
        w0_line_fraction: line_fraction(&w0_line_intensity(sum), sum),
        xy_peak_abs_u: brightest_row_offset(&projection, &grid.u_coords()),
    })
}

/// Phase maps and x-z' / x-y intensities of single modes and of the superposition families.
pub fn cmd_fig2(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let dir = cfg.command_dir("fig2")?;
    let single_modes = vec![-2, -1, 0, 1, 2];
    for &q in &single_modes {
        let f = synthesize_mode(&cfg.params(q), &grid)?;
        let tag = charge_tag(q);
        write_phase_pgm(&dir, &format!("phase_{tag}.pgm"), &f)?;
        write_intensity_pgm(&dir, &format!("xz_{tag}.pgm"), &f)?;
    }

    let mut families = Vec::new();
    for (family, q_a, q_b) in FIG2_FAMILIES {
        let f = synthesize_mode(&cfg.params(q_a), &grid)?;
        let g = synthesize_mode(&cfg.params(q_b), &grid)?;
        for parity in [Parity::InPhase, Parity::OutOfPhase] {
            let sum = interfere(&f, &g, parity)?;
            let tag = format!("{family}_{}", parity_tag(parity));
            write_phase_pgm(&dir, &format!("phase_{tag}.pgm"), &sum)?;
            write_intensity_pgm(&dir, &format!("xz_{tag}.pgm"), &sum)?;
            write_pgm(
                &dir,
                &format!("xy_{tag}.pgm"),
                &project_xy(&sum, N_Y, Y_HALF)?,
            )?;
            families.push(family_panel(&grid, family, (q_a, q_b), parity, &sum)?);
        }
    }

    let panel = |family: &str, parity: Parity| {
        families
            .iter()
            .find(|p| p.family == family && p.parity == parity)
            .expect("every family is rendered in both parities")
    };
    let half_step = 0.5 * grid.du() * (1.0 + 1e-9);
    let (zero_in, zero_out) = (
        panel("zero_one", Parity::InPhase),
        panel("zero_one", Parity::OutOfPhase),
    );
    let checks = vec![
        Check::near(
            "identical_in_phase_power",
            panel("identical", Parity::InPhase).power,
            4.0,
            1e-9,
        ),
        Check::at_most(
            "identical_out_of_phase_power",
            panel("identical", Parity::OutOfPhase).power,
            1e-12,
        ),
        Check::holds(
            "zero_one_centroid_sign_flip",
            zero_in.centroid_u * zero_out.centroid_u,
            zero_in.centroid_u * zero_out.centroid_u < 0.0,
            "< 0 (product of in/out centroids)",
        ),
        Check::at_most(
            "opposite_in_phase_u0_line",
            panel("opposite", Parity::InPhase).u0_line_fraction,
            1e-12,
        ),
        Check::at_most(
            "opposite_out_of_phase_w0_line",
            panel("opposite", Parity::OutOfPhase).w0_line_fraction,
            1e-12,
        ),
        Check::at_most(
            "opposite_out_of_phase_xy_peak_abs_u",
            panel("opposite", Parity::OutOfPhase).xy_peak_abs_u,
            half_step,
        ),
    ];
    finish(
        cfg,
        "fig2",
        dir,
        Fig2Panels {
            single_modes,
            families,
        },
        checks,
    )
}

/// Largest `|P(theta) - P(theta + pi/2)|` relative to the scan peak. Needs `4 | n`.
pub fn period_deviation(scan: &PolScanResult) -> f64 {
    let n = scan.powers.len();
    let peak = scan.powers.iter().copied().fold(0.0, f64::max);
    (0..n)
        .map(|k| (scan.powers[k] - scan.powers[(k + n / 2) % n]).abs())
        .fold(0.0, f64::max)
        / peak
}

fn arg_extreme(values: &[f64], max: bool) -> usize {
    let cmp = |a: &&f64, b: &&f64| a.total_cmp(b);
    let it = values.iter().enumerate();
    if max {
        it.max_by(|a, b| cmp(&a.1, &b.1)).map_or(0, |(k, _)| k)
    } else {
        it.min_by(|a, b| cmp(&a.1, &b.1)).map_or(0, |(k, _)| k)
    }
}

/// Offset between the maximum of `a` and the minimum of `b`, folded into `[0, pi/4]`.
pub fn interleave_offset(a: &PolScanResult, b: &PolScanResult) -> f64 {
    let d = (a.angles[arg_extreme(&a.powers, true)] - b.angles[arg_extreme(&b.powers, false)])
        .rem_euclid(FRAC_PI_2);
    d.min(FRAC_PI_2 - d)
}

#[derive(Serialize)]
struct Eta2Control {
    eta: f64,
    v_default_chain: f64,
    v_qwp_at_zero: f64,
    note: &'static str,
}

#[derive(Serialize)]
struct MeasuredReference {
    plus_one_r: f64,
    minus_one_l: f64,
    entangled: f64,
}

#[derive(Serialize)]
struct Fig3Panels {
    qwp_angle: f64,
    lp_angle: f64,
    v_plus_one_r: f64,
    v_minus_one_l: f64,
    v_entangled_in_phase: f64,
    v_entangled_out_of_phase: f64,
    interleave_offset: f64,
    eta2_control: Eta2Control,
    experimental_reference: MeasuredReference,
}

pub fn entangled_pair(
    cfg: &RunConfig,
    grid: &GridSpec,
    q: i32,
    parity: Parity,
) -> Result<VectorField> {
    let spec = EntangledStateSpec::circular_pair(q, parity.delta(), cfg.params(0));
    Ok(realize(&spec, grid)?)
}

/// Analyzer scans of single-ket beams and of the entangled beam, plus its Stokes maps.
pub fn cmd_fig3(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let dir = cfg.command_dir("fig3")?;
    let angles = analyzer_angles(ANALYZER_ANGLES);
    let scan = |vf: &VectorField| {
        polarization_analyzer(vf, DEFAULT_ANALYZER_QWP, &angles, DEFAULT_ANALYZER_LP)
    };

    let plus_r = VectorField::from_ket(&synthesize_mode(&cfg.params(1), &grid)?, Ket::R.vector());
    let minus_l = VectorField::from_ket(&synthesize_mode(&cfg.params(-1), &grid)?, Ket::L.vector());
    let ent_in = entangled_pair(cfg, &grid, 1, Parity::InPhase)?;
    let ent_out = entangled_pair(cfg, &grid, 1, Parity::OutOfPhase)?;
    let (s_r, s_l, s_in, s_out) = (
        scan(&plus_r)?,
        scan(&minus_l)?,
        scan(&ent_in)?,
        scan(&ent_out)?,
    );
    write_csv(
        &[
            ("angle", &angles),
            ("plus_one_r", &s_r.powers),
            ("minus_one_l", &s_l.powers),
            ("entangled_in_phase", &s_in.powers),
            ("entangled_out_of_phase", &s_out.powers),
        ],
        &dir.join("analyzer.csv"),
    )?;

    // Width-asymmetric control, reported for information.
    let eta2_cfg = RunConfig {
        eta: 2.0,
        ..cfg.clone()
    };
    let ent_eta2 = entangled_pair(&eta2_cfg, &grid, 1, Parity::InPhase)?;
    let e2_default = scan(&ent_eta2)?;
    let e2_qwp0 = polarization_analyzer(&ent_eta2, 0.0, &angles, DEFAULT_ANALYZER_LP)?;
    write_csv(
        &[
            ("angle", &angles),
            ("default_chain", &e2_default.powers),
            ("qwp_at_zero", &e2_qwp0.powers),
        ],
        &dir.join("analyzer_eta2.csv"),
    )?;

    write_pgm(&dir, "intensity_plus_one_r.pgm", &plus_r.intensity())?;
    write_pgm(&dir, "intensity_minus_one_l.pgm", &minus_l.intensity())?;
    for (tag, vf) in [("in", &ent_in), ("out", &ent_out)] {
        write_pgm(
            &dir,
            &format!("intensity_entangled_{tag}.pgm"),
            &vf.intensity(),
        )?;
        write_stokes_pgms(&dir, &format!("stokes_entangled_{tag}"), &stokes_maps(vf))?;
        write_stokes_profile(&dir, &format!("stokes_profile_{tag}.csv"), vf)?;
    }

    let offset = interleave_offset(&s_r, &s_l);
    let step = PI / ANALYZER_ANGLES as f64;
    let checks = vec![
        Check::at_least("v_plus_one_r", s_r.v, 0.999),
        Check::at_least("v_minus_one_l", s_l.v, 0.999),
        Check::at_most("interleave_offset", offset, 0.5 * step),
        Check::at_most("period_deviation_plus_one_r", period_deviation(&s_r), 1e-10),
        Check::at_most(
            "period_deviation_minus_one_l",
            period_deviation(&s_l),
            1e-10,
        ),
        Check::at_most("v_entangled_in_phase", s_in.v, 1e-6),
        Check::at_most("v_entangled_out_of_phase", s_out.v, 1e-6),
    ];
    let panels = Fig3Panels {
        qwp_angle: DEFAULT_ANALYZER_QWP,
        lp_angle: DEFAULT_ANALYZER_LP,
        v_plus_one_r: s_r.v,
        v_minus_one_l: s_l.v,
        v_entangled_in_phase: s_in.v,
        v_entangled_out_of_phase: s_out.v,
        interleave_offset: offset,
        eta2_control: Eta2Control {
            eta: 2.0,
            v_default_chain: e2_default.v,
            v_qwp_at_zero: e2_qwp0.v,
            note: "the default chain measures the beam-integrated s2 and s3 only, which vanish \
                   for this state at every eta; the width asymmetry shows up in s1, seen with \
                   the QWP at 0",
        },
        experimental_reference: MeasuredReference {
            plus_one_r: 0.89,
            minus_one_l: 0.85,
            entangled: 0.05,
        },
    };
    finish(cfg, "fig3", dir, panels, checks)
}

#[derive(Serialize)]
struct SpectrumPanel {
    label: String,
    q: i32,
    entangled: bool,
    spectrum: SpectrumReport,
}

#[derive(Serialize)]
pub struct ReferencePanel {
    pub test_q: i32,
    pub reference_q: i32,
    pub parity: Parity,
    pub power: f64,
    pub u0_line_fraction: f64,
    pub xy_peak_abs_u: f64,
}

#[derive(Serialize)]
struct Fig4Panels {
    spectra: Vec<SpectrumPanel>,
    references: Vec<ReferencePanel>,
}

/// Charge of the reference beam.
pub const REFERENCE_CHARGE: i32 = 1;

/// Spectrograms and charge estimates of single-charge and entangled beams, and the
/// reference-beam comparison panels.
pub fn cmd_fig4(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.validate()?;
    let dir = cfg.command_dir("fig4")?;
    let mut spectra = Vec::new();
    let mut checks = Vec::new();

    for q in [1, -1, 2, -2, 3, -3] {
        let f = synthesize_mode(&cfg.params(q), &grid)?;
        let sp = spectrometer(&f);
        let label = format!("q_{}", charge_tag(q));
        write_spectrogram(&dir, &format!("spectrogram_{label}.pgm"), &sp, cfg.eta)?;
        let spectrum = SpectrumReport::new(&sp, f.total_power())?;
        checks.push(Check::equals(
            format!("{label}_magnitude"),
            i64::from(spectrum.estimate.magnitude),
            i64::from(q.abs()),
        ));
        checks.push(Check::equals(
            format!("{label}_sign"),
            i64::from(spectrum.estimate.sign),
            i64::from(q.signum()),
        ));
        checks.push(Check::at_least(
            format!("{label}_confidence"),
            spectrum.estimate.confidence,
            0.9,
        ));
        checks.push(Check::at_most(
            format!("{label}_parseval"),
            spectrum.parseval_rel_error,
            1e-9,
        ));
        spectra.push(SpectrumPanel {
            label,
            q,
            entangled: false,
            spectrum,
        });
    }
    for q in 1..=3 {
        let vf = entangled_pair(cfg, &grid, q, Parity::InPhase)?;
        let sp = spectrometer_vector(&vf)?;
        let label = format!("entangled_{q}");
        write_spectrogram(&dir, &format!("spectrogram_{label}.pgm"), &sp, cfg.eta)?;
        let spectrum = SpectrumReport::new(&sp, vf.total_power())?;
        checks.push(Check::equals(
            format!("{label}_magnitude"),
            i64::from(spectrum.estimate.magnitude),
            i64::from(q),
        ));
        checks.push(Check::equals(
            format!("{label}_sign"),
            i64::from(spectrum.estimate.sign),
            0,
        ));
        checks.push(Check::at_most(
            format!("{label}_parseval"),
            spectrum.parseval_rel_error,
            1e-9,
        ));
        spectra.push(SpectrumPanel {
            label,
            q,
            entangled: true,
            spectrum,
        });
    }

    let reference = synthesize_mode(&cfg.params(REFERENCE_CHARGE), &grid)?;
    let mut references = Vec::new();
    let u_axis = grid.u_coords();
    for test_q in [1, -1] {
        let test = synthesize_mode(&cfg.params(test_q), &grid)?;
        for parity in [Parity::InPhase, Parity::OutOfPhase] {
            let (image, power) = reference_compare(&test, &reference, parity, N_Y, Y_HALF)?;
            let name = format!("reference_{}_{}", charge_tag(test_q), parity_tag(parity));
            write_pgm(&dir, &format!("{name}.pgm"), &image)?;
            let sum = interfere(&test, &reference, parity)?;
            references.push(ReferencePanel {
                test_q,
                reference_q: REFERENCE_CHARGE,
                parity,
                power,
                u0_line_fraction: line_fraction(&u0_line_intensity(&sum), &sum),
                xy_peak_abs_u: brightest_row_offset(&image, &u_axis),
            });
        }
    }
    let r = |q: i32, parity: Parity| {
        references
            .iter()
            .find(|p| p.test_q == q && p.parity == parity)
            .expect("all reference panels are rendered")
    };
    let half_step = 0.5 * grid.du() * (1.0 + 1e-9);
    checks.extend([
        Check::near(
            "reference_same_in_power",
            r(1, Parity::InPhase).power,
            4.0,
            1e-9,
        ),
        Check::at_most(
            "reference_same_out_power",
            r(1, Parity::OutOfPhase).power,
            1e-12,
        ),
        Check::near(
            "reference_opposite_in_power",
            r(-1, Parity::InPhase).power,
            2.0,
            1e-9,
        ),
        Check::near(
            "reference_opposite_out_power",
            r(-1, Parity::OutOfPhase).power,
            2.0,
            1e-9,
        ),
        Check::at_most(
            "reference_opposite_in_u0_line",
            r(-1, Parity::InPhase).u0_line_fraction,
            1e-12,
        ),
        Check::at_least(
            "reference_opposite_out_u0_line",
            r(-1, Parity::OutOfPhase).u0_line_fraction,
            0.5,
        ),
        Check::at_most(
            "reference_opposite_out_xy_peak_abs_u",
            r(-1, Parity::OutOfPhase).xy_peak_abs_u,
            half_step,
        ),
    ]);
    finish(
        cfg,
        "fig4",
        dir,
        Fig4Panels {
            spectra,
            references,
        },
        checks,
    )
}
