//! Acceptance gate: one criterion per test, each printing a single
//! "[PASS] criterion N" line (visible with `--nocapture`). Assertions carry
//! the measured values, so a failure line identifies the criterion and the
//! offending number.
//!
//! Criteria 3-6 share a desk-scale 2.4 x 2.4 x 3.4 um domain at 25 nm cells;
//! criterion 7 runs the shipped full-size configs as-is.

use std::path::PathBuf;
use std::time::Instant;

use once_cell::sync::Lazy;

use nanowire::emission::{figure_of_merit_z, EmissionReport, EmitterSpectrum};
use nanowire::fab;
use nanowire::fdtd::{
    analytic_dipole_power, bulk_reference_power, DipoleSource, PolarizationClass,
    SceneGeometry, SimulationConfig,
};
use nanowire::sweep::{
    self, EmissionRunner, OutputKind, PipelineSettings, RowOutcome, SweepAxis, SweepPlan,
};
use nanowire::waveguide::{solve_modes, v_parameter, WaveguideSpec};

fn pass(n: u32, msg: &str) {
    println!("[PASS] criterion {n}: {msg}");
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Desk-scale wire scene shared by criteria 3-6: 2 um wire on a diamond
/// substrate, emitter at the wire midpoint.
fn wire_scene() -> SimulationConfig {
    SimulationConfig {
        cell_size_nm: 25.0,
        domain_extent_um: [2.4, 2.4, 3.4],
        pml_cells: 8,
        time_steps: 4000,
        courant_factor: 0.5,
        geometry: SceneGeometry {
            wire_diameter_nm: Some(200.0),
            wire_height_um: Some(2.0),
            wire_center_xy_um: None,
            substrate_top_um: Some(0.6),
            substrate_index: 2.43,
            wire_index: 2.43,
            background_index: 1.0,
        },
        source: DipoleSource {
            position_um: [1.2, 1.2, 1.6],
            orientation: [1.0, 0.0, 0.0],
            polarization: PolarizationClass::S,
            center_wavelength_nm: 637.0,
            bandwidth_nm: 100.0,
            amplitude: 1.0,
        },
        monitors: vec![],
        record_wavelengths_nm: vec![637.0],
    }
}

/// Matching unstructured reference: the same emitter 100 nm below a flat
/// diamond/air interface, same domain and grid.
fn bulk_scene() -> SimulationConfig {
    let mut cfg = wire_scene();
    cfg.geometry.wire_diameter_nm = None;
    cfg.geometry.wire_height_um = None;
    cfg.geometry.substrate_top_um = Some(1.7);
    cfg
}

const FOM_WAVELENGTHS: [f64; 5] = [637.0, 672.75, 708.5, 744.25, 780.0];

fn fom_plan(base: SimulationConfig) -> SweepPlan {
    SweepPlan {
        axes: vec![
            SweepAxis {
                parameter: "wavelength_nm".into(),
                values: FOM_WAVELENGTHS.to_vec(),
            },
            SweepAxis {
                parameter: "polarization".into(),
                values: vec![0.0, 1.0],
            },
        ],
        base,
        outputs: vec![OutputKind::Eta, OutputKind::Enhancement],
        job_budget: 64,
    }
}

/// (wavelength x polarization) emission grids of the wire and bulk scenes,
/// shared by criteria 4 and 6. The two scenes place the emitter at the same
/// grid point, so the homogeneous-diamond references are computed once.
static FOM_GRIDS: Lazy<(Vec<EmissionReport>, Vec<EmissionReport>)> = Lazy::new(|| {
    // An axial dipole under the flat interface radiates mostly sideways, so
    // the far plane's rim field is a large fraction of its peak; relax the
    // aperture guard (eta only integrates the interior NA cone anyway).
    let mut settings = PipelineSettings::default();
    settings.far_field.edge_tolerance = 0.9;
    let runner = EmissionRunner::new(vec![OutputKind::Eta, OutputKind::Enhancement], settings);
    let mut grids = Vec::new();
    for base in [wire_scene(), bulk_scene()] {
        let plan = fom_plan(base);
        let result = sweep::execute(&plan, 1, &runner).expect("fom sweep executes");
        assert!(
            result.failures().is_empty(),
            "fom sweep failures: {:?}",
            result.failures()
        );
        grids.push(sweep::emission_reports(&result).expect("reports reconstruct"));
    }
    let bulk = grids.pop().unwrap();
    let wire = grids.pop().unwrap();
    (wire, bulk)
});

fn find_report(reports: &[EmissionReport], lambda_nm: f64, pol: PolarizationClass) -> &EmissionReport {
    reports
        .iter()
        .find(|r| (r.wavelength * 1e9 - lambda_nm).abs() < 0.5 && r.polarization == pol)
        .expect("grid point present")
}

#[test]
fn criterion_1_single_mode_window() {
    let t0 = Instant::now();
    let spec = WaveguideSpec::new(200e-9, 2.43, 1.0, 637e-9).unwrap();
    let v = v_parameter(&spec);
    assert!((v - 2.185).abs() <= 0.005, "V = {v}");
    let modes = solve_modes(&spec, 3).unwrap();
    assert_eq!(modes.len(), 1, "modes at d=200: {}", modes.len());

    let spec400 = WaveguideSpec::new(400e-9, 2.43, 1.0, 637e-9).unwrap();
    let modes400 = solve_modes(&spec400, 3).unwrap();
    let mut families: Vec<String> = modes400.iter().map(|m| m.family.to_string()).collect();
    families.sort();
    families.dedup();
    assert!(
        families.len() >= 2,
        "families at d=400: {families:?}"
    );
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "mode solves took {elapsed:.3} s");
    pass(
        1,
        &format!(
            "single mode at d=200 nm (V = {v:.4}), {} modes in {} families at d=400 nm, {elapsed:.3} s",
            modes400.len(),
            families.len()
        ),
    );
}

#[test]
fn criterion_2_fdtd_power_oracle() {
    let vacuum = |cells_per_lambda: f64, steps: u32| {
        let mut cfg = wire_scene();
        cfg.geometry = SceneGeometry::homogeneous(1.0);
        cfg.cell_size_nm = 637.0 / cells_per_lambda;
        cfg.domain_extent_um = [2.0, 2.0, 2.0];
        cfg.time_steps = steps;
        cfg.source.position_um = [1.0, 1.0, 1.0];
        cfg
    };
    let err_at = |cfg: &SimulationConfig| {
        let p = bulk_reference_power(cfg, 1.0).unwrap()[0];
        let p_ref =
            analytic_dipole_power(&cfg.source, cfg.dt(), cfg.time_steps, 1.0, 637e-9);
        (p - p_ref).abs() / p_ref
    };
    let err20 = err_at(&vacuum(20.0, 1400));
    assert!(err20 < 0.05, "lambda/20 error {err20:.4}");
    let err40 = err_at(&vacuum(40.0, 2800));
    assert!(err40 < err20, "lambda/40 error {err40:.4} vs {err20:.4}");

    let mut small = vacuum(25.48, 2600);
    small.cell_size_nm = 25.0;
    small.domain_extent_um = [1.6, 1.6, 1.6];
    small.source.position_um = [0.8, 0.8, 0.8];
    let p_vac = bulk_reference_power(&small, 1.0).unwrap()[0];
    let p_dia = bulk_reference_power(&small, 2.43).unwrap()[0];
    let ratio = p_dia / p_vac;
    assert!(
        (ratio - 2.43).abs() <= 0.12,
        "diamond/vacuum power ratio {ratio:.4}"
    );
    pass(
        2,
        &format!(
            "vacuum power error {:.2}% at lambda/20, {:.2}% at lambda/40; n ratio {ratio:.3}",
            err20 * 100.0,
            err40 * 100.0
        ),
    );
}

#[test]
fn criterion_3_diameter_sweep_alpha_window() {
    let plan = SweepPlan {
        axes: vec![SweepAxis {
            parameter: "wire_diameter_nm".into(),
            values: (0..11).map(|i| 100.0 + 20.0 * i as f64).collect(),
        }],
        base: wire_scene(),
        outputs: vec![OutputKind::Alpha],
        job_budget: 16,
    };
    let runner = EmissionRunner::new(vec![OutputKind::Alpha], PipelineSettings::default());
    let result = sweep::execute(&plan, 1, &runner).unwrap();
    assert!(result.failures().is_empty(), "{:?}", result.failures());
    let curve: Vec<(f64, f64)> = result
        .rows
        .iter()
        .map(|row| match &row.outcome {
            RowOutcome::Ok { data } => (row.values[0], data["alpha"]),
            RowOutcome::Failed { error } => panic!("row failed: {error}"),
        })
        .collect();
    for &(d, alpha) in &curve {
        if (180.0..=230.0).contains(&d) {
            assert!(alpha >= 0.75, "alpha({d} nm) = {alpha:.4}");
        }
    }
    let (d_max, a_max) = curve
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!(
        (180.0..=230.0).contains(&d_max),
        "alpha maximum {a_max:.4} at d = {d_max} nm"
    );
    let table: Vec<String> = curve
        .iter()
        .map(|(d, a)| format!("{d:.0}:{a:.3}"))
        .collect();
    pass(
        3,
        &format!("alpha max {a_max:.3} at {d_max:.0} nm; curve {}", table.join(" ")),
    );
}

#[test]
fn criterion_4_collection_improvement() {
    let (wire, bulk) = &*FOM_GRIDS;
    let eta_ws = find_report(wire, 637.0, PolarizationClass::S).eta;
    let eta_wp = find_report(wire, 637.0, PolarizationClass::P).eta;
    let eta_bs = find_report(bulk, 637.0, PolarizationClass::S).eta;
    let eta_bp = find_report(bulk, 637.0, PolarizationClass::P).eta;
    assert!(eta_bs > 0.0 && eta_bp > 0.0, "bulk eta {eta_bs} / {eta_bp}");
    let ratio_s = eta_ws / eta_bs;
    let ratio_p = eta_wp / eta_bp;
    assert!(ratio_s >= 5.0, "s ratio {ratio_s:.2} ({eta_ws:.4}/{eta_bs:.4})");
    assert!(ratio_p >= 20.0, "p ratio {ratio_p:.2} ({eta_wp:.4}/{eta_bp:.4})");
    pass(
        4,
        &format!(
            "eta ratios at NA 0.95: s {ratio_s:.1} ({eta_ws:.3} vs {eta_bs:.4}), \
             p {ratio_p:.1} ({eta_wp:.3} vs {eta_bp:.5})"
        ),
    );
}

/// Best-fit oscillation period of samples (z, y) by scanning the period and
/// solving the linear a + b cos + c sin fit at each candidate.
fn fit_period(samples: &[(f64, f64)], p_lo: f64, p_hi: f64) -> f64 {
    let mut best = (f64::INFINITY, p_lo);
    let n = samples.len() as f64;
    let mut p = p_lo;
    while p <= p_hi {
        let k = 2.0 * std::f64::consts::PI / p;
        // Normal equations for y ~ a + b cos(kz) + c sin(kz).
        let mut m = [[0.0f64; 3]; 3];
        let mut rhs = [0.0f64; 3];
        for &(z, y) in samples {
            let basis = [1.0, (k * z).cos(), (k * z).sin()];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += basis[i] * basis[j];
                }
                rhs[i] += basis[i] * y;
            }
        }
        // Gaussian elimination, 3x3.
        for col in 0..3 {
            let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
            m.swap(col, piv);
            rhs.swap(col, piv);
            for row in col + 1..3 {
                let f = m[row][col] / m[col][col];
                for j in col..3 {
                    m[row][j] -= f * m[col][j];
                }
                rhs[row] -= f * rhs[col];
            }
        }
        let mut coef = [0.0f64; 3];
        for row in (0..3).rev() {
            let mut acc = rhs[row];
            for j in row + 1..3 {
                acc -= m[row][j] * coef[j];
            }
            coef[row] = acc / m[row][row];
        }
        let residual: f64 = samples
            .iter()
            .map(|&(z, y)| {
                let fit = coef[0] + coef[1] * (k * z).cos() + coef[2] * (k * z).sin();
                (y - fit).powi(2)
            })
            .sum::<f64>()
            / n;
        if residual < best.0 {
            best = (residual, p);
        }
        p += p_hi * 1e-3;
    }
    best.1
}

#[test]
fn criterion_5_enhancement_band_and_period() {
    let base = wire_scene();
    let positions: Vec<f64> = (0..16).map(|i| 1.0 + 0.05 * i as f64).collect();
    let plan = SweepPlan {
        axes: vec![SweepAxis {
            parameter: "dipole_z_um".into(),
            values: positions.clone(),
        }],
        base: base.clone(),
        outputs: vec![],
        job_budget: 32,
    };
    // E = P(z) / P_bulk with one shared homogeneous-diamond denominator:
    // the reference power does not depend on the dipole position.
    let p_bulk = bulk_reference_power(&base, 2.43).unwrap()[0];
    let runner = EmissionRunner::new(vec![], PipelineSettings::default());
    let result = sweep::execute(&plan, 1, &runner).unwrap();
    assert!(result.failures().is_empty(), "{:?}", result.failures());
    let curve: Vec<(f64, f64)> = result
        .rows
        .iter()
        .map(|row| match &row.outcome {
            RowOutcome::Ok { data } => (row.values[0] * 1e-6, data["total_power"] / p_bulk),
            RowOutcome::Failed { error } => panic!("row failed: {error}"),
        })
        .collect();
    for &(z, e) in &curve {
        assert!(
            (0.5..=1.3).contains(&e),
            "E({:.0} nm) = {e:.4} outside [0.5, 1.3]",
            z * 1e9
        );
    }
    let fitted = fit_period(&curve, 120e-9, 400e-9);
    let spec = WaveguideSpec::new(200e-9, 2.43, 1.0, 637e-9).unwrap();
    let n_eff = solve_modes(&spec, 1).unwrap()[0].n_eff;
    let expected = 637e-9 / (2.0 * n_eff);
    let rel = (fitted - expected).abs() / expected;
    assert!(
        rel <= 0.10,
        "period {:.1} nm vs lambda/(2 n_eff) = {:.1} nm ({:.1}%)",
        fitted * 1e9,
        expected * 1e9,
        rel * 100.0
    );
    let e_min = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let e_max = curve.iter().map(|c| c.1).fold(0.0, f64::max);
    pass(
        5,
        &format!(
            "E(z) in [{e_min:.3}, {e_max:.3}], period {:.1} nm vs {:.1} nm ({:.1}% off)",
            fitted * 1e9,
            expected * 1e9,
            rel * 100.0
        ),
    );
}

#[test]
fn criterion_6_figure_of_merit() {
    let (wire, bulk) = &*FOM_GRIDS;
    let spectrum = EmitterSpectrum::flat_default();
    let z_wire = figure_of_merit_z(wire, &spectrum).unwrap();
    let z_bulk = figure_of_merit_z(bulk, &spectrum).unwrap();
    assert!(
        (0.15..=0.45).contains(&z_wire),
        "Z_wire = {z_wire:.4} outside [0.15, 0.45]"
    );
    assert!(z_bulk > 0.0, "Z_bulk = {z_bulk:.5}");
    let ratio = z_wire / z_bulk;
    assert!(ratio >= 5.0, "Z ratio {ratio:.2} (Z_wire {z_wire:.4}, Z_bulk {z_bulk:.5})");
    pass(
        6,
        &format!(
            "Z_wire = {z_wire:.3}, Z_bulk = {z_bulk:.4}, ratio {ratio:.1} over {} wavelengths",
            FOM_WAVELENGTHS.len()
        ),
    );
}

#[test]
fn criterion_7_energy_conservation_on_shipped_configs() {
    let mut lines = Vec::new();
    for name in ["fig1_wire.json", "fig1_bulk.json"] {
        let text = std::fs::read_to_string(configs_dir().join(name)).unwrap();
        let config = SimulationConfig::from_json(&text).unwrap();
        let mut outputs = vec![OutputKind::Eta, OutputKind::FarField];
        if config.geometry.wire_diameter_nm.is_some() {
            outputs.push(OutputKind::Alpha);
        }
        let out = sweep::run_emission_job(&config, &outputs, &PipelineSettings::default())
            .unwrap();
        let mut worst_box: f64 = 0.0;
        let mut worst_ff: f64 = 0.0;
        for (li, &wl) in out.wavelengths.iter().enumerate() {
            let box_err = (out.audit_ratio[li] - 1.0).abs();
            assert!(
                box_err <= 0.03,
                "{name}: box audit off by {:.2}% at {:.0} nm",
                box_err * 100.0,
                wl * 1e9
            );
            worst_box = worst_box.max(box_err);
            let ff = out.reports[li]
                .far_field
                .as_ref()
                .expect("far field requested");
            let hemi = ff.hemispherical_integral();
            let ff_err = (hemi - ff.plane_flux).abs() / ff.plane_flux;
            assert!(
                ff_err <= 0.02,
                "{name}: far-field integral off by {:.2}% at {:.0} nm",
                ff_err * 100.0,
                wl * 1e9
            );
            worst_ff = worst_ff.max(ff_err);
        }
        lines.push(format!(
            "{name} worst box {:.2}%, worst far-field {:.2}%",
            worst_box * 100.0,
            worst_ff * 100.0
        ));
    }
    pass(7, &lines.join("; "));
}

#[test]
fn criterion_8_fab_tables() {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let records =
        fab::ingest_table(&std::fs::read_to_string(data.join("table1.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 8);
    for r in &records {
        if let (Some(printed), Ok(taper)) = (r.printed_taper_deg, fab::taper_angle(&r.outcome)) {
            let tol = fab::taper_tolerance_deg(&r.recipe.label);
            assert!(
                (taper.degrees - printed).abs() <= tol,
                "row {}: {:.2} vs printed {printed}",
                r.recipe.label,
                taper.degrees
            );
        }
    }
    let rates =
        fab::ingest_rate_table(&std::fs::read_to_string(data.join("table2.csv")).unwrap())
            .unwrap();
    let computed: Vec<f64> = rates
        .iter()
        .map(|r| fab::etch_rate(r.height_nm(), r.etch_time_min).unwrap())
        .collect();
    assert_eq!(computed, vec![200.0, 190.0, 220.0, 240.0]);

    let au = match fab::selectivity(200.0, 25.0).unwrap() {
        fab::Selectivity::Finite(v) => v,
        other => panic!("unexpected {other:?}"),
    };
    assert_eq!(au, 8.0);
    let fox = match fab::selectivity(200.0, 10.0).unwrap() {
        fab::Selectivity::Finite(v) => v,
        other => panic!("unexpected {other:?}"),
    };
    assert!(fox >= 20.0, "FOx selectivity {fox}");
    pass(
        8,
        &format!("taper rows within tolerance, rates {computed:?}, Au selectivity {au}, FOx {fox}"),
    );
}

#[test]
fn criterion_9_sweep_determinism() {
    let mut base = wire_scene();
    base.domain_extent_um = [1.6, 1.6, 2.2];
    base.geometry.wire_height_um = Some(1.4);
    base.geometry.substrate_top_um = Some(0.4);
    base.source.position_um = [0.8, 0.8, 1.1];
    base.time_steps = 400;
    let plan = SweepPlan {
        axes: vec![SweepAxis {
            parameter: "wire_diameter_nm".into(),
            values: vec![180.0, 220.0],
        }],
        base,
        outputs: vec![OutputKind::Alpha],
        job_budget: 8,
    };
    let run = |workers: usize| {
        let runner =
            EmissionRunner::new(vec![OutputKind::Alpha], PipelineSettings::default());
        let result = sweep::execute(&plan, workers, &runner).unwrap();
        serde_json::to_string(&result.rows).unwrap()
    };
    let serial = run(1);
    let parallel = run(4);
    let repeat = run(1);
    assert_eq!(serial, parallel, "1-worker vs 4-worker rows differ");
    assert_eq!(serial, repeat, "repeated run differs");
    pass(9, "rows byte-identical across 1 vs 4 workers and repeated runs");
}
