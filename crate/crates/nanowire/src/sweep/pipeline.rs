//! Single-scene emission pipeline: places the standard monitors, runs the
//! structure and bulk-reference simulations, and reduces them to per-
//! wavelength coupling, collection, and enhancement figures.

use std::collections::HashMap;
use std::sync::Mutex;

use thiserror::Error;

use crate::emission::{
    collection_eta, coupling_alpha, enhancement_factor, far_field_with_options, EmissionError,
    EmissionReport, FarFieldMap, FarFieldOptions,
};
use crate::fdtd::{
    bulk_reference_power, flux, run_with_source_box, Axis, FdtdError, MonitorSpec,
    PolarizationClass, SimulationConfig,
};
use crate::waveguide::{solve_modes, WaveguideError, WaveguideSpec};

use super::{JobRunner, OutputKind, RowData};

const COUPLING_MONITOR_UP: &str = "__pl_coupling_up";
const COUPLING_MONITOR_DOWN: &str = "__pl_coupling_down";
const TOP_MONITOR: &str = "__pl_top";
const AUDIT_MONITOR: &str = "__pl_audit";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("scene not suitable for the pipeline: {0}")]
    BadGeometry(String),
    #[error(transparent)]
    Fdtd(#[from] FdtdError),
    #[error(transparent)]
    Emission(#[from] EmissionError),
    #[error(transparent)]
    Waveguide(#[from] WaveguideError),
}

#[derive(Debug, Clone)]
pub struct PipelineSettings {
    /// Collection NA for eta.
    pub numerical_aperture: f64,
    /// Reference medium for the enhancement denominator; defaults to the
    /// index at the emitter when absent.
    pub bulk_index: Option<f64>,
    /// Axial distance of the coupling cross-sections from the dipole, um.
    pub coupling_offset_um: f64,
    /// Minimum clearance of the coupling planes from the wire facets, um.
    pub facet_guard_um: f64,
    /// Height of the far-field plane above the top facet, um.
    pub far_plane_clearance_um: f64,
    pub far_field: FarFieldOptions,
    /// Adds a domain-sized flux box for the conservation audit.
    pub audit: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            numerical_aperture: 0.95,
            bulk_index: None,
            coupling_offset_um: 0.35,
            facet_guard_um: 0.15,
            far_plane_clearance_um: 0.3,
            far_field: FarFieldOptions {
                // Totals are renormalized by the known dipole power, so a
                // softly truncated aperture is acceptable here.
                edge_tolerance: 0.25,
                ..FarFieldOptions::default()
            },
            audit: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub wavelengths: Vec<f64>,
    pub reports: Vec<EmissionReport>,
    /// Total dipole power per wavelength (source-box flux).
    pub total_power: Vec<f64>,
    /// Bulk-reference power per wavelength, when enhancement was requested.
    pub bulk_power: Option<Vec<f64>>,
    /// Domain-box flux over total power per wavelength; 1 when balanced.
    pub audit_ratio: Vec<f64>,
    pub converged: bool,
}

fn wants(outputs: &[OutputKind], kind: OutputKind) -> bool {
    outputs.contains(&kind)
}

fn needs_far_field(outputs: &[OutputKind]) -> bool {
    wants(outputs, OutputKind::Eta)
        || wants(outputs, OutputKind::FarField)
        || wants(outputs, OutputKind::Z)
}

fn needs_alpha(outputs: &[OutputKind]) -> bool {
    wants(outputs, OutputKind::Alpha)
}

fn needs_enhancement(outputs: &[OutputKind]) -> bool {
    wants(outputs, OutputKind::Enhancement) || wants(outputs, OutputKind::Z)
}

struct SceneLayout {
    wire_center_um: [f64; 2],
    wire_diameter_nm: f64,
    wire_base_um: f64,
    wire_top_um: f64,
}

fn wire_layout(config: &SimulationConfig) -> Result<SceneLayout, PipelineError> {
    let g = &config.geometry;
    let (d_nm, h_um) = match (g.wire_diameter_nm, g.wire_height_um) {
        (Some(d), Some(h)) => (d, h),
        _ => {
            return Err(PipelineError::BadGeometry(
                "coupling output needs a wire in the scene".into(),
            ))
        }
    };
    let base = g.substrate_top_um.unwrap_or(0.0);
    let center = g.wire_center_xy_um.unwrap_or([
        config.domain_extent_um[0] / 2.0,
        config.domain_extent_um[1] / 2.0,
    ]);
    Ok(SceneLayout {
        wire_center_um: center,
        wire_diameter_nm: d_nm,
        wire_base_um: base,
        wire_top_um: base + h_um,
    })
}

/// Attaches the pipeline monitors to a copy of the config.
fn instrument(
    config: &SimulationConfig,
    outputs: &[OutputKind],
    settings: &PipelineSettings,
) -> Result<SimulationConfig, PipelineError> {
    let mut cfg = config.clone();
    if cfg.monitors.iter().any(|m| m.name().starts_with("__pl_")) {
        return Err(PipelineError::BadGeometry(
            "monitor names starting with __pl_ are reserved".into(),
        ));
    }
    let dipole_z = cfg.source.position_um[2];

    if needs_alpha(outputs) {
        let layout = wire_layout(&cfg)?;
        let z_up = dipole_z + settings.coupling_offset_um;
        let z_down = dipole_z - settings.coupling_offset_um;
        if z_up > layout.wire_top_um - settings.facet_guard_um
            || z_down < layout.wire_base_um + settings.facet_guard_um
        {
            return Err(PipelineError::BadGeometry(format!(
                "coupling planes at z = {z_down:.3} / {z_up:.3} um violate the \
                 facet guard of {} um",
                settings.facet_guard_um
            )));
        }
        // Wide enough to capture the evanescent tail of the guided mode.
        let half_span = layout.wire_diameter_nm * 5e-4 + 0.4;
        let min_um = [
            layout.wire_center_um[0] - half_span,
            layout.wire_center_um[1] - half_span,
        ];
        let max_um = [
            layout.wire_center_um[0] + half_span,
            layout.wire_center_um[1] + half_span,
        ];
        cfg.monitors.push(MonitorSpec::Plane {
            name: COUPLING_MONITOR_UP.into(),
            normal: Axis::Z,
            position_um: z_up,
            min_um,
            max_um,
            sign: 1.0,
        });
        cfg.monitors.push(MonitorSpec::Plane {
            name: COUPLING_MONITOR_DOWN.into(),
            normal: Axis::Z,
            position_um: z_down,
            min_um,
            max_um,
            sign: -1.0,
        });
    }

    if needs_far_field(outputs) {
        let z_plane = if cfg.geometry.wire_diameter_nm.is_some() {
            wire_layout(&cfg)?.wire_top_um + settings.far_plane_clearance_um
        } else {
            dipole_z + settings.far_plane_clearance_um
        };
        cfg.monitors.push(MonitorSpec::Plane {
            name: TOP_MONITOR.into(),
            normal: Axis::Z,
            position_um: z_plane,
            min_um: [0.0, 0.0],
            max_um: [cfg.domain_extent_um[0], cfg.domain_extent_um[1]],
            sign: 1.0,
        });
    }

    if settings.audit {
        // Domain-sized closed box just inside the PML clearance.
        let m = (cfg.pml_cells as f64 + 3.0) * cfg.cell_size_nm * 1e-3;
        cfg.monitors.push(MonitorSpec::Box {
            name: AUDIT_MONITOR.into(),
            min_um: [m, m, m],
            max_um: [
                cfg.domain_extent_um[0] - m,
                cfg.domain_extent_um[1] - m,
                cfg.domain_extent_um[2] - m,
            ],
        });
    }
    Ok(cfg)
}

fn emitter_index(config: &SimulationConfig) -> f64 {
    let p = config.source.position_um;
    config
        .geometry
        .eps_rel_at(p[0] * 1e-6, p[1] * 1e-6, p[2] * 1e-6, config.extent())
        .sqrt()
}

/// Runs the instrumented scene (and the matching bulk reference when needed)
/// and reduces the monitors to one report per record wavelength.
pub fn run_emission_job(
    config: &SimulationConfig,
    outputs: &[OutputKind],
    settings: &PipelineSettings,
) -> Result<PipelineOutput, PipelineError> {
    run_emission_job_with_bulk(config, outputs, settings, None)
}

fn run_emission_job_with_bulk(
    config: &SimulationConfig,
    outputs: &[OutputKind],
    settings: &PipelineSettings,
    bulk_override: Option<Vec<f64>>,
) -> Result<PipelineOutput, PipelineError> {
    let cfg = instrument(config, outputs, settings)?;
    let out = run_with_source_box(&cfg)?;
    let total_power = out.source_box_power.clone();
    let wavelengths = out.wavelengths.clone();

    let find = |name: &str| out.monitors.iter().find(|m| m.name == name);
    let bulk_power = if needs_enhancement(outputs) {
        Some(match bulk_override {
            Some(p) => p,
            None => {
                let n_ref = settings.bulk_index.unwrap_or_else(|| emitter_index(&cfg));
                bulk_reference_power(&cfg, n_ref)?
            }
        })
    } else {
        None
    };

    let sigma = match cfg.source.polarization {
        PolarizationClass::S => 0.0,
        PolarizationClass::P => std::f64::consts::FRAC_PI_2,
    };
    let layout = if needs_alpha(outputs) {
        Some(wire_layout(&cfg)?)
    } else {
        None
    };

    let mut reports = Vec::with_capacity(wavelengths.len());
    let mut audit_ratio = Vec::with_capacity(wavelengths.len());
    for (li, &wl) in wavelengths.iter().enumerate() {
        let total = total_power[li];
        if !(total > 0.0) {
            return Err(PipelineError::BadGeometry(format!(
                "non-positive dipole power {total} at {:.1} nm",
                wl * 1e9
            )));
        }

        let mut alpha = 0.0;
        if let Some(layout) = &layout {
            let spec = WaveguideSpec {
                diameter: layout.wire_diameter_nm * 1e-9,
                core_index: cfg.geometry.wire_index,
                clad_index: cfg.geometry.background_index,
                wavelength: wl,
            };
            let modes = solve_modes(&spec, 1)?;
            let mode = modes
                .iter()
                .max_by(|a, b| a.n_eff.total_cmp(&b.n_eff))
                .ok_or_else(|| {
                    PipelineError::BadGeometry(format!(
                        "no guided mode at d = {} nm, lambda = {:.1} nm",
                        layout.wire_diameter_nm,
                        wl * 1e9
                    ))
                })?;
            let center = [
                layout.wire_center_um[0] * 1e-6,
                layout.wire_center_um[1] * 1e-6,
            ];
            for name in [COUPLING_MONITOR_UP, COUPLING_MONITOR_DOWN] {
                let monitor = find(name).expect("coupling monitor installed");
                alpha += coupling_alpha(monitor, mode, wl, total, center)?;
            }
            alpha = alpha.clamp(0.0, 1.0);
        }

        let mut eta = 0.0;
        let mut ff_map: Option<FarFieldMap> = None;
        if needs_far_field(outputs) {
            let monitor = find(TOP_MONITOR).expect("far-field monitor installed");
            let ff = far_field_with_options(monitor, wl, total, &settings.far_field)?;
            eta = collection_eta(&ff, settings.numerical_aperture)?;
            if wants(outputs, OutputKind::FarField) {
                ff_map = Some(ff);
            }
        }

        let enhancement = match &bulk_power {
            Some(bulk) => enhancement_factor(total, bulk[li])?,
            None => 1.0,
        };

        audit_ratio.push(match find(AUDIT_MONITOR) {
            Some(monitor) => flux(monitor, wl)? / total,
            None => 1.0,
        });

        reports.push(EmissionReport {
            wavelength: wl,
            polarization: cfg.source.polarization,
            sigma,
            alpha,
            eta,
            enhancement,
            total_power: total,
            far_field: ff_map,
        });
    }

    Ok(PipelineOutput {
        wavelengths,
        reports,
        total_power,
        bulk_power,
        audit_ratio,
        converged: out.converged,
    })
}

/// Sweep adapter around the pipeline. Bulk references are cached across
/// jobs because a diameter sweep shares one source and grid.
pub struct EmissionRunner {
    pub outputs: Vec<OutputKind>,
    pub settings: PipelineSettings,
    bulk_cache: Mutex<HashMap<String, Vec<f64>>>,
}

impl EmissionRunner {
    pub fn new(outputs: Vec<OutputKind>, settings: PipelineSettings) -> Self {
        EmissionRunner {
            outputs,
            settings,
            bulk_cache: Mutex::new(HashMap::new()),
        }
    }

    fn bulk_for(&self, config: &SimulationConfig) -> Result<Vec<f64>, PipelineError> {
        let n_ref = self
            .settings
            .bulk_index
            .unwrap_or_else(|| emitter_index(config));
        let mut key_cfg = config.clone();
        key_cfg.geometry = crate::fdtd::SceneGeometry::homogeneous(n_ref);
        key_cfg.monitors = vec![];
        let key = key_cfg.to_json();
        if let Some(hit) = self.bulk_cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let power = bulk_reference_power(config, n_ref)?;
        self.bulk_cache
            .lock()
            .unwrap()
            .insert(key, power.clone());
        Ok(power)
    }
}

impl JobRunner for EmissionRunner {
    fn run(&self, config: &SimulationConfig) -> Result<RowData, String> {
        let bulk = if needs_enhancement(&self.outputs) {
            Some(self.bulk_for(config).map_err(|e| e.to_string())?)
        } else {
            None
        };
        let out = run_emission_job_with_bulk(config, &self.outputs, &self.settings, bulk)
            .map_err(|e| e.to_string())?;
        let mut data = RowData::new();
        let single = out.wavelengths.len() == 1;
        for (li, &wl) in out.wavelengths.iter().enumerate() {
            let key = |base: &str| {
                if single {
                    base.to_string()
                } else {
                    format!("{base}_{}", wl * 1e9)
                }
            };
            let r = &out.reports[li];
            if needs_alpha(&self.outputs) {
                data.insert(key("alpha"), r.alpha);
            }
            if needs_far_field(&self.outputs) {
                data.insert(key("eta"), r.eta);
            }
            if needs_enhancement(&self.outputs) {
                data.insert(key("enhancement"), r.enhancement);
            }
            data.insert(key("total_power"), r.total_power);
            data.insert(key("audit_ratio"), out.audit_ratio[li]);
        }
        data.insert("converged".into(), if out.converged { 1.0 } else { 0.0 });
        Ok(data)
    }
}
