//! Parameter-sweep orchestration: cartesian job grids over a base scene,
//! deterministic worker-pool execution, and directory persistence with
//! provenance hashing and resume support.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fdtd::{PolarizationClass, SimulationConfig};

mod pipeline;

pub use pipeline::{run_emission_job, EmissionRunner, PipelineError, PipelineOutput, PipelineSettings};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_JOB_BUDGET: usize = 4096;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("job budget exceeded: {jobs} jobs > budget {budget}")]
    BudgetExceeded { jobs: usize, budget: usize },
    #[error("unknown sweep parameter {0:?}")]
    UnknownParameter(String),
    #[error("corrupt sweep archive: {0}")]
    Corrupt(String),
    #[error("archive format version {found} is newer than supported {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Fdtd(#[from] crate::fdtd::FdtdError),
}

/// Output quantities a sweep can request per job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Alpha,
    Eta,
    Enhancement,
    FarField,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    /// One of: wire_diameter_nm, wavelength_nm, dipole_z_um, polarization.
    pub parameter: String,
    pub values: Vec<f64>,
}

fn default_budget() -> usize {
    DEFAULT_JOB_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub axes: Vec<SweepAxis>,
    pub base: SimulationConfig,
    pub outputs: Vec<OutputKind>,
    #[serde(default = "default_budget")]
    pub job_budget: usize,
}

/// Applies one swept parameter onto a config.
pub fn apply_parameter(
    config: &mut SimulationConfig,
    name: &str,
    value: f64,
) -> Result<(), SweepError> {
    match name {
        "wire_diameter_nm" => config.geometry.wire_diameter_nm = Some(value),
        "wavelength_nm" => {
            config.source.center_wavelength_nm = value;
            config.record_wavelengths_nm = vec![value];
        }
        "dipole_z_um" => config.source.position_um[2] = value,
        "polarization" => {
            if value == 0.0 {
                config.source.orientation = [1.0, 0.0, 0.0];
                config.source.polarization = PolarizationClass::S;
            } else if value == 1.0 {
                config.source.orientation = [0.0, 0.0, 1.0];
                config.source.polarization = PolarizationClass::P;
            } else {
                return Err(SweepError::InvalidPlan(format!(
                    "polarization axis values must be 0 (s) or 1 (p), got {value}"
                )));
            }
        }
        other => return Err(SweepError::UnknownParameter(other.to_string())),
    }
    Ok(())
}

impl SweepPlan {
    pub fn job_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Axis values of job `index`, first axis varying slowest.
    pub fn job_values(&self, index: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.axes.len());
        let mut rem = index;
        let mut stride = self.job_count();
        for axis in &self.axes {
            stride /= axis.values.len();
            out.push(axis.values[rem / stride]);
            rem %= stride;
        }
        out
    }

    pub fn job_config(&self, index: usize) -> Result<SimulationConfig, SweepError> {
        let mut cfg = self.base.clone();
        for (axis, value) in self.axes.iter().zip(self.job_values(index)) {
            apply_parameter(&mut cfg, &axis.parameter, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.is_empty() {
            return Err(SweepError::InvalidPlan("need at least one axis".into()));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(SweepError::InvalidPlan(format!(
                    "axis {} has no values",
                    axis.parameter
                )));
            }
        }
        let jobs = self.job_count();
        if jobs > self.job_budget {
            return Err(SweepError::BudgetExceeded {
                jobs,
                budget: self.job_budget,
            });
        }
        for i in 0..jobs {
            self.job_config(i)?;
        }
        Ok(())
    }

    /// Canonical provenance hash over the serialized plan.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plan serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Uniform diameter grid at a fixed wavelength and polarization.
pub fn plan_diameter_sweep(
    base: &SimulationConfig,
    d_min_nm: f64,
    d_max_nm: f64,
    steps: usize,
    wavelength_nm: f64,
    polarization: PolarizationClass,
) -> Result<SweepPlan, SweepError> {
    if steps == 0 {
        return Err(SweepError::InvalidPlan("need at least one step".into()));
    }
    if steps > 1 && !(d_min_nm < d_max_nm) {
        return Err(SweepError::InvalidPlan(format!(
            "need d_min < d_max, got {d_min_nm} and {d_max_nm}"
        )));
    }
    let values: Vec<f64> = if steps == 1 {
        vec![d_min_nm]
    } else {
        (0..steps)
            .map(|i| d_min_nm + (d_max_nm - d_min_nm) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let mut base = base.clone();
    apply_parameter(&mut base, "wavelength_nm", wavelength_nm)?;
    let pol_value = match polarization {
        PolarizationClass::S => 0.0,
        PolarizationClass::P => 1.0,
    };
    apply_parameter(&mut base, "polarization", pol_value)?;
    let plan = SweepPlan {
        axes: vec![SweepAxis {
            parameter: "wire_diameter_nm".into(),
            values,
        }],
        base,
        outputs: vec![OutputKind::Alpha],
        job_budget: DEFAULT_JOB_BUDGET,
    };
    plan.validate()?;
    Ok(plan)
}

/// One job's scalar results, keyed by output name.
pub type RowData = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RowOutcome {
    Ok { data: RowData },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<f64>,
    pub outcome: RowOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub plan_hash: String,
    pub code_version: String,
    /// RFC 3339 timestamp; excluded from the determinism contract.
    pub created_utc: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub format_version: u32,
    pub plan: SweepPlan,
    pub provenance: Provenance,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> Vec<(usize, &str)> {
        self.rows
            .iter()
            .filter_map(|r| match &r.outcome {
                RowOutcome::Failed { error } => Some((r.index, error.as_str())),
                RowOutcome::Ok { .. } => None,
            })
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.plan.job_count() && self.failures().is_empty()
    }
}

/// Executes one sweep job; implementations must be deterministic functions
/// of the config for the concurrency-invariance contract to hold.
pub trait JobRunner: Sync {
    fn run(&self, config: &SimulationConfig) -> Result<RowData, String>;
}

impl<F> JobRunner for F
where
    F: Fn(&SimulationConfig) -> Result<RowData, String> + Sync,
{
    fn run(&self, config: &SimulationConfig) -> Result<RowData, String> {
        self(config)
    }
}

fn provenance_for(plan: &SweepPlan) -> Provenance {
    Provenance {
        plan_hash: plan.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        created_utc: chrono::Utc::now().to_rfc3339(),
    }
}

fn run_indices(
    plan: &SweepPlan,
    indices: &[usize],
    workers: usize,
    runner: &dyn JobRunner,
) -> Vec<SweepRow> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; indices.len()]);
    let workers = workers.clamp(1, indices.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let slot = next.fetch_add(1, Ordering::SeqCst);
                if slot >= indices.len() {
                    break;
                }
                let index = indices[slot];
                let outcome = match plan.job_config(index) {
                    Ok(cfg) => match runner.run(&cfg) {
                        Ok(data) => RowOutcome::Ok { data },
                        Err(error) => RowOutcome::Failed { error },
                    },
                    Err(e) => RowOutcome::Failed {
                        error: e.to_string(),
                    },
                };
                let row = SweepRow {
                    index,
                    values: plan.job_values(index),
                    outcome,
                };
                slots.lock().unwrap()[slot] = Some(row);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("all jobs completed"))
        .collect()
}

/// Runs every job of the plan over a worker pool. Failed jobs are recorded
/// in their rows, never dropped, and never abort the sweep; row order is
/// the planned order regardless of completion order.
pub fn execute(
    plan: &SweepPlan,
    workers: usize,
    runner: &dyn JobRunner,
) -> Result<SweepResult, SweepError> {
    plan.validate()?;
    let indices: Vec<usize> = (0..plan.job_count()).collect();
    let rows = run_indices(plan, &indices, workers, runner);
    Ok(SweepResult {
        format_version: FORMAT_VERSION,
        plan: plan.clone(),
        provenance: provenance_for(plan),
        rows,
    })
}

/// Re-runs only failed or missing rows of a previous result for the same
/// plan, keeping completed rows untouched.
pub fn resume(
    plan: &SweepPlan,
    previous: &SweepResult,
    workers: usize,
    runner: &dyn JobRunner,
) -> Result<SweepResult, SweepError> {
    plan.validate()?;
    if previous.provenance.plan_hash != plan.hash() {
        return Err(SweepError::InvalidPlan(
            "previous result was produced by a different plan".into(),
        ));
    }
    let mut kept: BTreeMap<usize, SweepRow> = BTreeMap::new();
    for row in &previous.rows {
        if matches!(row.outcome, RowOutcome::Ok { .. }) {
            kept.insert(row.index, row.clone());
        }
    }
    let missing: Vec<usize> = (0..plan.job_count())
        .filter(|i| !kept.contains_key(i))
        .collect();
    for row in run_indices(plan, &missing, workers, runner) {
        kept.insert(row.index, row);
    }
    Ok(SweepResult {
        format_version: FORMAT_VERSION,
        plan: plan.clone(),
        provenance: provenance_for(plan),
        rows: kept.into_values().collect(),
    })
}

/// Rebuilds per-(wavelength, polarization) emission reports from the rows of
/// a completed sweep, for the figure-of-merit integral. Each job must record
/// a single wavelength (the keys are unsuffixed then). Failed rows are
/// rejected: Z over a grid with holes would silently skew the integral.
pub fn emission_reports(
    result: &SweepResult,
) -> Result<Vec<crate::emission::EmissionReport>, SweepError> {
    let mut reports = Vec::with_capacity(result.rows.len());
    for row in &result.rows {
        let data = match &row.outcome {
            RowOutcome::Ok { data } => data,
            RowOutcome::Failed { error } => {
                return Err(SweepError::InvalidPlan(format!(
                    "row {} failed ({error}); resume the sweep before reducing it",
                    row.index
                )))
            }
        };
        let cfg = result.plan.job_config(row.index)?;
        if cfg.record_wavelengths_nm.len() != 1 {
            return Err(SweepError::InvalidPlan(
                "emission_reports needs single-wavelength jobs".into(),
            ));
        }
        let sigma = match cfg.source.polarization {
            PolarizationClass::S => 0.0,
            PolarizationClass::P => std::f64::consts::FRAC_PI_2,
        };
        reports.push(crate::emission::EmissionReport {
            wavelength: cfg.record_wavelengths_nm[0] * 1e-9,
            polarization: cfg.source.polarization,
            sigma,
            alpha: data.get("alpha").copied().unwrap_or(0.0),
            eta: data.get("eta").copied().unwrap_or(0.0),
            enhancement: data.get("enhancement").copied().unwrap_or(1.0),
            total_power: data.get("total_power").copied().unwrap_or(1.0),
            far_field: None,
        });
    }
    Ok(reports)
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    index: usize,
    values: Vec<f64>,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    file: Option<String>,
    /// SHA-256 of the row payload, guarding against truncation.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    checksum: Option<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    plan: SweepPlan,
    provenance: Provenance,
    rows: Vec<ManifestRow>,
}

/// Persists a result as a directory: manifest.json plus per-row CSV files.
pub fn persist(result: &SweepResult, dir: &Path) -> Result<(), SweepError> {
    std::fs::create_dir_all(dir.join("rows"))?;
    let mut rows = Vec::with_capacity(result.rows.len());
    for row in &result.rows {
        let entry = match &row.outcome {
            RowOutcome::Ok { data } => {
                let file = format!("rows/row_{:05}.csv", row.index);
                let mut csv = String::from("key,value\n");
                for (k, v) in data {
                    csv.push_str(&format!("{k},{v}\n"));
                }
                std::fs::write(dir.join(&file), &csv)?;
                ManifestRow {
                    index: row.index,
                    values: row.values.clone(),
                    status: "ok".into(),
                    error: None,
                    checksum: Some(sha256_hex(csv.as_bytes())),
                    file: Some(file),
                }
            }
            RowOutcome::Failed { error } => ManifestRow {
                index: row.index,
                values: row.values.clone(),
                status: "failed".into(),
                error: Some(error.clone()),
                checksum: None,
                file: None,
            },
        };
        rows.push(entry);
    }
    let manifest = Manifest {
        format_version: result.format_version,
        plan: result.plan.clone(),
        provenance: result.provenance.clone(),
        rows,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Loads a persisted result; rejects newer formats and corrupt archives.
pub fn load(dir: &Path) -> Result<SweepResult, SweepError> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| SweepError::Corrupt(format!("cannot read manifest: {e}")))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| SweepError::Corrupt(format!("manifest does not parse: {e}")))?;
    if manifest.format_version > FORMAT_VERSION {
        return Err(SweepError::VersionMismatch {
            found: manifest.format_version,
            supported: FORMAT_VERSION,
        });
    }
    let mut rows = Vec::with_capacity(manifest.rows.len());
    for entry in manifest.rows {
        let outcome = match entry.status.as_str() {
            "ok" => {
                let file = entry.file.ok_or_else(|| {
                    SweepError::Corrupt(format!("row {} lacks a data file", entry.index))
                })?;
                let csv = std::fs::read_to_string(dir.join(&file)).map_err(|e| {
                    SweepError::Corrupt(format!("row file {file} unreadable: {e}"))
                })?;
                match &entry.checksum {
                    Some(expect) if *expect != sha256_hex(csv.as_bytes()) => {
                        return Err(SweepError::Corrupt(format!(
                            "row file {file} fails its checksum"
                        )))
                    }
                    Some(_) => {}
                    None => {
                        return Err(SweepError::Corrupt(format!(
                            "row {} lacks a checksum",
                            entry.index
                        )))
                    }
                }
                let mut data = RowData::new();
                for (n, line) in csv.lines().enumerate() {
                    if n == 0 {
                        if line != "key,value" {
                            return Err(SweepError::Corrupt(format!(
                                "row file {file} has a bad header"
                            )));
                        }
                        continue;
                    }
                    let (k, v) = line.split_once(',').ok_or_else(|| {
                        SweepError::Corrupt(format!("row file {file} line {}", n + 1))
                    })?;
                    let value: f64 = v.parse().map_err(|_| {
                        SweepError::Corrupt(format!("row file {file} line {}", n + 1))
                    })?;
                    data.insert(k.to_string(), value);
                }
                RowOutcome::Ok { data }
            }
            "failed" => RowOutcome::Failed {
                error: entry.error.unwrap_or_else(|| "unknown".into()),
            },
            other => {
                return Err(SweepError::Corrupt(format!(
                    "row {} has unknown status {other:?}",
                    entry.index
                )))
            }
        };
        rows.push(SweepRow {
            index: entry.index,
            values: entry.values,
            outcome,
        });
    }
    Ok(SweepResult {
        format_version: manifest.format_version,
        plan: manifest.plan,
        provenance: manifest.provenance,
        rows,
    })
}
