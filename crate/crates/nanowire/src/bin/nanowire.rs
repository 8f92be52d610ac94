//! Command-line front end for the nanowire toolkit.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure (instability,
//! unconverged run, failed sweep jobs).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nanowire::emission::{figure_of_merit_z, reports_to_csv, EmitterSpectrum};
use nanowire::fab;
use nanowire::fdtd::SimulationConfig;
use nanowire::sweep::{
    self, EmissionRunner, OutputKind, PipelineSettings, SweepPlan, SweepResult,
};
use nanowire::waveguide::{solve_modes, v_parameter, WaveguideSpec};

const WORKERS_ENV: &str = "NANOWIRE_WORKERS";

#[derive(Parser)]
#[command(
    name = "nanowire",
    about = "Diamond nanowire single-photon-source design toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the guided modes of a circular step-index wire.
    Modes(ModesArgs),
    /// Run one FDTD scene and reduce it to emission metrics.
    Simulate(SimulateArgs),
    /// Execute a parameter-sweep plan over a worker pool.
    Sweep(SweepArgs),
    /// Reduce wire and bulk sweeps to the spectrally averaged figure of
    /// merit Z.
    Fom(FomArgs),
    /// Analyze etch-process tables: rates, taper angles, selectivities.
    Fab(FabArgs),
}

#[derive(Args)]
struct ModesArgs {
    /// Wire diameter in nm.
    #[arg(long)]
    diameter_nm: f64,
    /// Free-space wavelength in nm.
    #[arg(long)]
    wavelength_nm: f64,
    /// Core refractive index.
    #[arg(long, default_value_t = 2.43)]
    core_index: f64,
    /// Cladding refractive index.
    #[arg(long, default_value_t = 1.0)]
    clad_index: f64,
    /// Highest azimuthal order to scan.
    #[arg(long, default_value_t = 3)]
    max_order: u32,
    /// Write the radial field profile of the fundamental mode as CSV.
    #[arg(long)]
    profile_csv: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Preset {
    /// 25 nm cells.
    Coarse,
    /// 13 nm cells; time steps rescaled to keep the physical duration.
    Fine,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and far-field tables.
    #[arg(long)]
    out: PathBuf,
    /// Resolution preset applied on top of the config.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Config overrides as dotted-path=JSON-value, e.g.
    /// --set source.amplitude=2.0 --set time_steps=800.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Skip the far-field reduction (coupling and power only).
    #[arg(long)]
    no_far_field: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep plan (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Result directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to $NANOWIRE_WORKERS or 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Re-run only failed or missing rows of an existing directory.
    #[arg(long)]
    resume: bool,
    /// Resolution preset applied to the plan's base config.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct FomArgs {
    /// Completed (wavelength x polarization) sweep of the wire scene.
    #[arg(long)]
    wire_dir: PathBuf,
    /// Completed matching sweep of the bulk reference scene.
    #[arg(long)]
    bulk_dir: PathBuf,
    /// Emitter spectrum CSV (wavelength_nm,weight); flat NV band if absent.
    #[arg(long)]
    spectrum: Option<PathBuf>,
}

#[derive(Args)]
struct FabArgs {
    /// Etch-recipe/outcome table (CSV).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Etch-rate table (CSV).
    #[arg(long)]
    rates: Option<PathBuf>,
    /// Cross-check recomputed taper angles against the printed column.
    #[arg(long)]
    validate: bool,
}

/// Input problems exit 1, numerical failures exit 2.
enum CliError {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Input(e.into())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Modes(args) => cmd_modes(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Fom(args) => cmd_fom(&args),
        Command::Fab(args) => cmd_fab(&args),
    };
    if let Err(e) = result {
        let (code, err) = match &e {
            CliError::Input(err) => (e.code(), err),
            CliError::Numerical(err) => (e.code(), err),
        };
        eprintln!("error: {err:#}");
        std::process::exit(code);
    }
}

/// Written next to the primary outputs so identical inputs stay
/// byte-identical: the timestamp lives here, never in result files.
#[derive(serde::Serialize)]
struct RunManifest {
    subcommand: String,
    config_path: String,
    output_dir: String,
    overrides: Vec<String>,
    workers: usize,
    preset: Option<String>,
    created_utc: String,
}

impl RunManifest {
    fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(input)?;
        std::fs::write(
            dir.join("run_manifest.json"),
            serde_json::to_string_pretty(self).map_err(input)?,
        )
        .map_err(input)
    }
}

fn preset_name(p: Option<Preset>) -> Option<String> {
    p.map(|p| {
        match p {
            Preset::Coarse => "coarse",
            Preset::Fine => "fine",
        }
        .to_string()
    })
}

fn cmd_modes(args: &ModesArgs) -> Result<(), CliError> {
    let spec = WaveguideSpec::new(
        args.diameter_nm * 1e-9,
        args.core_index,
        args.clad_index,
        args.wavelength_nm * 1e-9,
    )
    .map_err(input)?;
    let v = v_parameter(&spec);
    let modes = solve_modes(&spec, args.max_order).map_err(input)?;
    println!(
        "d = {} nm, lambda = {} nm, n_core = {}, n_clad = {}",
        args.diameter_nm, args.wavelength_nm, args.core_index, args.clad_index
    );
    println!("V = {v:.4}");
    println!("guided modes: {}", modes.len());
    println!("family  m  radial  n_eff");
    for m in &modes {
        println!(
            "{:<6} {:>2}  {:>6}  {:.6}",
            m.family.to_string(),
            m.azimuthal_order,
            m.radial_index,
            m.n_eff
        );
    }
    if let Some(path) = &args.profile_csv {
        let fundamental = modes
            .iter()
            .max_by(|a, b| a.n_eff.total_cmp(&b.n_eff))
            .ok_or_else(|| input(anyhow!("no guided mode to profile")))?;
        let mut csv = String::from("r_nm,e_r,e_phi,e_z,h_r,h_phi,h_z\n");
        for s in &fundamental.radial_profile {
            let f = &s.fields;
            csv.push_str(&format!(
                "{:.4},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                s.r * 1e9,
                f.e_r.norm(),
                f.e_phi.norm(),
                f.e_z.norm(),
                f.h_r.norm(),
                f.h_phi.norm(),
                f.h_z.norm()
            ));
        }
        std::fs::write(path, csv).map_err(input)?;
        println!("profile written to {}", path.display());
    }
    Ok(())
}

/// Applies a dotted-path JSON override; every path segment must exist.
fn apply_override(root: &mut serde_json::Value, spec: &str) -> anyhow::Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override {spec:?} is not KEY=VALUE"))?;
    let value: serde_json::Value = serde_json::from_str(raw)
        .with_context(|| format!("override value {raw:?} is not valid JSON"))?;
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        let next = match node {
            serde_json::Value::Object(map) => map
                .get_mut(*seg)
                .ok_or_else(|| anyhow!("config has no key {path:?} (at {seg:?})"))?,
            serde_json::Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| anyhow!("{seg:?} is not an array index in {path:?}"))?;
                items
                    .get_mut(idx)
                    .ok_or_else(|| anyhow!("index {idx} out of bounds in {path:?}"))?
            }
            _ => bail!("config path {path:?} descends into a scalar at {seg:?}"),
        };
        if last {
            *next = value;
            return Ok(());
        }
        node = next;
    }
    unreachable!("empty override path rejected by split")
}

fn apply_preset(config: &mut SimulationConfig, preset: Preset) {
    let target = match preset {
        Preset::Coarse => 25.0,
        Preset::Fine => 13.0,
    };
    // Keep the simulated physical duration: dt scales with the cell size.
    let scale = config.cell_size_nm / target;
    config.time_steps = (config.time_steps as f64 * scale).ceil() as u32;
    config.cell_size_nm = target;
}

fn load_config(
    path: &Path,
    overrides: &[String],
    preset: Option<Preset>,
) -> Result<SimulationConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(input)?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(input)?;
    for o in overrides {
        apply_override(&mut value, o).map_err(input)?;
    }
    let mut config: SimulationConfig =
        serde_json::from_value(value).map_err(input)?;
    if let Some(p) = preset {
        apply_preset(&mut config, p);
    }
    config.validate().map_err(input)?;
    Ok(config)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = load_config(&args.config, &args.overrides, args.preset)?;
    RunManifest {
        subcommand: "simulate".into(),
        config_path: args.config.display().to_string(),
        output_dir: args.out.display().to_string(),
        overrides: args.overrides.clone(),
        workers: 1,
        preset: preset_name(args.preset),
        created_utc: chrono::Utc::now().to_rfc3339(),
    }
    .write(&args.out)?;

    let mut outputs = vec![OutputKind::Enhancement];
    if config.geometry.wire_diameter_nm.is_some() {
        outputs.push(OutputKind::Alpha);
    }
    if !args.no_far_field {
        outputs.push(OutputKind::Eta);
        outputs.push(OutputKind::FarField);
    }
    let settings = PipelineSettings::default();
    let out = sweep::run_emission_job(&config, &outputs, &settings)
        .map_err(|e| CliError::Numerical(e.into()))?;

    std::fs::write(args.out.join("report.csv"), reports_to_csv(&out.reports))
        .map_err(input)?;
    let mut slim = out.reports.clone();
    for (li, report) in slim.iter_mut().enumerate() {
        if let Some(ff) = report.far_field.take() {
            let name = format!("far_field_{:.0}nm.csv", out.wavelengths[li] * 1e9);
            std::fs::write(args.out.join(name), ff.to_csv()).map_err(input)?;
            let hemi = ff.hemispherical_integral();
            let plane_err = if ff.plane_flux > 0.0 {
                (hemi - ff.plane_flux).abs() / ff.plane_flux
            } else {
                f64::INFINITY
            };
            println!(
                "far-field audit at {:.1} nm: hemisphere/plane = {:.4} ({:+.2}%)",
                out.wavelengths[li] * 1e9,
                hemi / ff.plane_flux,
                plane_err * 100.0
            );
        }
    }
    std::fs::write(
        args.out.join("report.json"),
        serde_json::to_string_pretty(&slim).map_err(input)?,
    )
    .map_err(input)?;

    for (li, &wl) in out.wavelengths.iter().enumerate() {
        let r = &out.reports[li];
        println!(
            "lambda = {:.1} nm: alpha = {:.4}, eta = {:.4}, enhancement = {:.4}, \
             P = {:.4e} W, box audit = {:.4}",
            wl * 1e9,
            r.alpha,
            r.eta,
            r.enhancement,
            r.total_power,
            out.audit_ratio[li]
        );
    }
    if !out.converged {
        return Err(CliError::Numerical(anyhow!(
            "fields did not decay below the convergence threshold; \
             increase time_steps"
        )));
    }
    println!("reports written to {}", args.out.display());
    Ok(())
}

fn worker_count(requested: Option<usize>) -> usize {
    requested
        .or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1)
        .max(1)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.plan)
        .with_context(|| format!("cannot read plan {}", args.plan.display()))
        .map_err(input)?;
    let mut plan: SweepPlan = serde_json::from_str(&text).map_err(input)?;
    if let Some(p) = args.preset {
        apply_preset(&mut plan.base, p);
    }
    plan.validate().map_err(input)?;
    let workers = worker_count(args.workers);

    RunManifest {
        subcommand: "sweep".into(),
        config_path: args.plan.display().to_string(),
        output_dir: args.out.display().to_string(),
        overrides: vec![],
        workers,
        preset: preset_name(args.preset),
        created_utc: chrono::Utc::now().to_rfc3339(),
    }
    .write(&args.out)?;

    let runner = EmissionRunner::new(plan.outputs.clone(), PipelineSettings::default());
    let result: SweepResult = if args.resume {
        let previous = sweep::load(&args.out).map_err(input)?;
        if previous.is_complete() && previous.provenance.plan_hash == plan.hash() {
            println!(
                "{} already complete ({} rows); nothing to do",
                args.out.display(),
                previous.rows.len()
            );
            return Ok(());
        }
        sweep::resume(&plan, &previous, workers, &runner).map_err(input)?
    } else {
        sweep::execute(&plan, workers, &runner).map_err(input)?
    };

    sweep::persist(&result, &args.out).map_err(input)?;
    let failures = result.failures();
    println!(
        "{} rows ({} failed) written to {}",
        result.rows.len(),
        failures.len(),
        args.out.display()
    );
    if !failures.is_empty() {
        for (index, error) in &failures {
            eprintln!("row {index}: {error}");
        }
        return Err(CliError::Numerical(anyhow!(
            "{} of {} sweep jobs failed; re-run with --resume after fixing",
            failures.len(),
            result.rows.len()
        )));
    }
    Ok(())
}

fn cmd_fom(args: &FomArgs) -> Result<(), CliError> {
    let spectrum = match &args.spectrum {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read spectrum {}", path.display()))
                .map_err(input)?;
            EmitterSpectrum::from_csv(&text).map_err(input)?
        }
        None => EmitterSpectrum::flat_default(),
    };
    let mut values = Vec::new();
    for (label, dir) in [("Z_wire", &args.wire_dir), ("Z_bulk", &args.bulk_dir)] {
        let result = sweep::load(dir).map_err(input)?;
        let reports = sweep::emission_reports(&result).map_err(input)?;
        let z = figure_of_merit_z(&reports, &spectrum).map_err(input)?;
        println!("{label} = {z:.4}");
        values.push(z);
    }
    if values[1] > 0.0 {
        println!("ratio  = {:.2}", values[0] / values[1]);
    }
    Ok(())
}

fn cmd_fab(args: &FabArgs) -> Result<(), CliError> {
    if args.table.is_none() && args.rates.is_none() {
        return Err(input(anyhow!("pass --table and/or --rates")));
    }
    let mut validation_failed = false;
    if let Some(path) = &args.table {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read table {}", path.display()))
            .map_err(input)?;
        let records = fab::ingest_table(&text).map_err(input)?;
        let report = fab::report(&records).map_err(input)?;
        print!("{}", report.to_text());
        if args.validate {
            for row in &report.rows {
                if row.taper_matches_printed == Some(false) {
                    eprintln!(
                        "validation: recomputed taper for {} deviates beyond {} deg",
                        row.label,
                        fab::taper_tolerance_deg(&row.label)
                    );
                    validation_failed = true;
                }
            }
        }
    }
    if let Some(path) = &args.rates {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read rate table {}", path.display()))
            .map_err(input)?;
        let records = fab::ingest_rate_table(&text).map_err(input)?;
        println!("material  rate[nm/min]");
        for r in &records {
            let rate = fab::etch_rate(r.height_nm(), r.etch_time_min).map_err(input)?;
            println!("{:<8}  {:.1}", r.diamond_type, rate);
        }
    }
    if validation_failed {
        return Err(input(anyhow!("fab table validation failed")));
    }
    if args.validate {
        println!("validation passed");
    }
    Ok(())
}
