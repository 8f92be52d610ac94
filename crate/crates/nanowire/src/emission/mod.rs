//! Post-processing of frequency-domain monitor data into emission metrics:
//! guided-mode coupling, far fields, collection efficiency, emission-rate
//! enhancement, the Fabry-Perot axial model, and the integrated figure of
//! merit Z.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fdtd::{MonitorData, PlaneData, PolarizationClass};
use crate::numerics::{integrate_1d, NumericsError, QuadratureGrid};
use crate::waveguide::{solve_modes, GuidedMode, WaveguideSpec};
use crate::Z0;


#[derive(Debug, Error)]
pub enum EmissionError {
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("aperture too small: boundary field is {edge_ratio:.3} of the maximum (limit {limit})")]
    ApertureTooSmall { edge_ratio: f64, limit: f64 },
    #[error("insufficient report grid: {0}")]
    InsufficientGrid(String),
    #[error("invalid emitter spectrum: {0}")]
    InvalidSpectrum(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Fdtd(#[from] crate::fdtd::FdtdError),
    #[error(transparent)]
    Waveguide(#[from] crate::waveguide::WaveguideError),
}

/// Far-field power density on the upward hemisphere, on a uniform midpoint
/// (theta, phi) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldMap {
    pub n_theta: usize,
    pub n_phi: usize,
    pub wavelength: f64,
    /// Reference power used as the denominator of eta (total dipole power).
    pub total_power: f64,
    /// Power through the source plane along +normal, for audits.
    pub plane_flux: f64,
    /// dP/dOmega, row-major [theta][phi].
    pub dp_domega: Vec<f64>,
}

impl FarFieldMap {
    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / self.n_theta as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / self.n_phi as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.dp_domega[i * self.n_phi + j]
    }

    fn bin_solid_angle(&self, i: usize) -> f64 {
        let dtheta = std::f64::consts::FRAC_PI_2 / self.n_theta as f64;
        let dphi = 2.0 * std::f64::consts::PI / self.n_phi as f64;
        self.theta(i).sin() * dtheta * dphi
    }

    /// Power integrated over the polar cap theta <= theta_max.
    pub fn integral_within(&self, theta_max: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_theta {
            if self.theta(i) > theta_max {
                break;
            }
            let dw = self.bin_solid_angle(i);
            for j in 0..self.n_phi {
                acc += self.at(i, j) * dw;
            }
        }
        acc
    }

    /// Power integrated over the full upward hemisphere.
    pub fn hemispherical_integral(&self) -> f64 {
        self.integral_within(std::f64::consts::FRAC_PI_2 + 1.0)
    }

    /// Polar-plot-ready table: theta_rad, phi_rad, dp_domega.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_rad,phi_rad,dp_domega\n");
        for i in 0..self.n_theta {
            for j in 0..self.n_phi {
                out.push_str(&format!(
                    "{:.9e},{:.9e},{:.9e}\n",
                    self.theta(i),
                    self.phi(j),
                    self.at(i, j)
                ));
            }
        }
        out
    }
}

/// Tuning knobs for the angular-spectrum projection.
#[derive(Debug, Clone)]
pub struct FarFieldOptions {
    /// Maximum allowed boundary |E| relative to the plane maximum.
    pub edge_tolerance: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// FFT size override; defaults to 16x the plane extent, >= 2048.
    pub fft_size: Option<usize>,
}

impl Default for FarFieldOptions {
    fn default() -> Self {
        FarFieldOptions {
            edge_tolerance: 0.01,
            n_theta: 90,
            n_phi: 180,
            fft_size: None,
        }
    }
}

fn wavelength_index(monitor: &MonitorData, wavelength: f64) -> Result<usize, EmissionError> {
    monitor
        .wavelengths
        .iter()
        .position(|&w| (w - wavelength).abs() <= 1e-9 * wavelength)
        .ok_or_else(|| EmissionError::BadInput(format!("wavelength {wavelength} m not recorded")))
}

fn single_plane(monitor: &MonitorData) -> Result<&PlaneData, EmissionError> {
    if monitor.is_box || monitor.faces.len() != 1 {
        return Err(EmissionError::BadInput(format!(
            "monitor {} is not a single plane",
            monitor.name
        )));
    }
    Ok(&monitor.faces[0])
}

/// Upward far field of a horizontal plane monitor by the angular-spectrum
/// method: zero-padded 2D Fourier transform of the tangential E field,
/// propagating components mapped onto the hemisphere.
pub fn far_field(
    monitor: &MonitorData,
    wavelength: f64,
    total_power: f64,
) -> Result<FarFieldMap, EmissionError> {
    far_field_with_options(monitor, wavelength, total_power, &FarFieldOptions::default())
}

pub fn far_field_with_options(
    monitor: &MonitorData,
    wavelength: f64,
    total_power: f64,
    opts: &FarFieldOptions,
) -> Result<FarFieldMap, EmissionError> {
    let li = wavelength_index(monitor, wavelength)?;
    let plane = single_plane(monitor)?;
    if plane.normal != crate::fdtd::Axis::Z || plane.sign != 1.0 {
        return Err(EmissionError::BadInput(
            "far field requires an upward z-normal plane".into(),
        ));
    }
    let (n1, n2) = (plane.n1, plane.n2);
    let ex = &plane.e1[li];
    let ey = &plane.e2[li];

    // Aperture check: the field must have decayed at the plane boundary.
    let amp = |f: usize| (ex[f].norm_sqr() + ey[f].norm_sqr()).sqrt();
    let mut max_amp = 0.0f64;
    let mut edge_amp = 0.0f64;
    for p in 0..n1 {
        for q in 0..n2 {
            let a = amp(p * n2 + q);
            max_amp = max_amp.max(a);
            if p == 0 || q == 0 || p == n1 - 1 || q == n2 - 1 {
                edge_amp = edge_amp.max(a);
            }
        }
    }
    if max_amp == 0.0 {
        return Err(EmissionError::BadInput("plane fields are all zero".into()));
    }
    let edge_ratio = edge_amp / max_amp;
    if edge_ratio > opts.edge_tolerance {
        return Err(EmissionError::ApertureTooSmall {
            edge_ratio,
            limit: opts.edge_tolerance,
        });
    }

    let n_fft = opts
        .fft_size
        .unwrap_or_else(|| (16 * n1.max(n2)).next_power_of_two().max(2048));
    if n_fft < n1.max(n2) {
        return Err(EmissionError::BadInput(format!(
            "fft size {n_fft} smaller than plane extent"
        )));
    }
    // Spectra A(kx, ky) = sum E exp(+i k.r) delta^2, origin at plane center.
    // The +i kernel matches the e^{+i w t} phasor convention of the running
    // DFT, under which upward waves carry exp(-i k.r).
    let a_x = angular_spectrum(ex, n1, n2, n_fft, plane.delta);
    let a_y = angular_spectrum(ey, n1, n2, n_fft, plane.delta);

    let k0 = 2.0 * std::f64::consts::PI / wavelength;
    let dk = 2.0 * std::f64::consts::PI / (n_fft as f64 * plane.delta);
    let mut map = FarFieldMap {
        n_theta: opts.n_theta,
        n_phi: opts.n_phi,
        wavelength,
        total_power,
        plane_flux: plane.flux_at(li),
        dp_domega: vec![0.0; opts.n_theta * opts.n_phi],
    };
    let norm = k0 * k0 / (8.0 * std::f64::consts::PI * std::f64::consts::PI * Z0);
    for i in 0..opts.n_theta {
        let theta = map.theta(i);
        let (st, ct) = (theta.sin(), theta.cos());
        for j in 0..opts.n_phi {
            let phi = map.phi(j);
            let kx = k0 * st * phi.cos();
            let ky = k0 * st * phi.sin();
            let ax = sample_spectrum(&a_x, n_fft, kx / dk, ky / dk);
            let ay = sample_spectrum(&a_y, n_fft, kx / dk, ky / dk);
            // Longitudinal component from the divergence constraint; the
            // cos^2 theta factor keeps it finite at grazing angles.
            let transverse = ax.norm_sqr() + ay.norm_sqr();
            let axial = (ax * kx + ay * ky).norm_sqr() / (k0 * k0);
            map.dp_domega[i * opts.n_phi + j] = norm * (ct * ct * transverse + axial);
        }
    }
    Ok(map)
}

/// Zero-padded 2D Fourier transform with the +i kernel, field origin at the
/// plane center, output indexed by wrapped integer wavenumbers.
fn angular_spectrum(
    field: &[Complex64],
    n1: usize,
    n2: usize,
    n_fft: usize,
    delta: f64,
) -> Vec<Complex64> {
    let mut grid = vec![Complex64::new(0.0, 0.0); n_fft * n_fft];
    let c1 = (n1 / 2) as isize;
    let c2 = (n2 / 2) as isize;
    let wrap = |v: isize| v.rem_euclid(n_fft as isize) as usize;
    for p in 0..n1 {
        let ip = wrap(p as isize - c1);
        for q in 0..n2 {
            let iq = wrap(q as isize - c2);
            grid[ip * n_fft + iq] = field[p * n2 + q];
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(n_fft);
    // Rows.
    for row in grid.chunks_mut(n_fft) {
        fft.process(row);
    }
    // Columns via transpose.
    let mut col = vec![Complex64::new(0.0, 0.0); n_fft];
    for j in 0..n_fft {
        for i in 0..n_fft {
            col[i] = grid[i * n_fft + j];
        }
        fft.process(&mut col);
        for i in 0..n_fft {
            grid[i * n_fft + j] = col[i];
        }
    }
    let scale = delta * delta;
    for v in &mut grid {
        *v *= scale;
    }
    grid
}

/// Bilinear interpolation on the wrapped wavenumber grid; u, v in units of
/// the grid spacing dk.
fn sample_spectrum(grid: &[Complex64], n_fft: usize, u: f64, v: f64) -> Complex64 {
    let n = n_fft as isize;
    let wrap = |x: isize| x.rem_euclid(n) as usize;
    let (u0, v0) = (u.floor(), v.floor());
    let (fu, fv) = (u - u0, v - v0);
    let (i0, j0) = (u0 as isize, v0 as isize);
    let g = |i: isize, j: isize| grid[wrap(i) * n_fft + wrap(j)];
    g(i0, j0) * ((1.0 - fu) * (1.0 - fv))
        + g(i0 + 1, j0) * (fu * (1.0 - fv))
        + g(i0, j0 + 1) * ((1.0 - fu) * fv)
        + g(i0 + 1, j0 + 1) * (fu * fv)
}

/// Fraction of the reference power collected by a lens of the given
/// numerical aperture looking down the +z axis.
pub fn collection_eta(ff: &FarFieldMap, numerical_aperture: f64) -> Result<f64, EmissionError> {
    if !(numerical_aperture > 0.0 && numerical_aperture <= 1.0) {
        return Err(EmissionError::BadInput(format!(
            "numerical aperture must be in (0, 1], got {numerical_aperture}"
        )));
    }
    if !(ff.total_power > 0.0) {
        return Err(EmissionError::BadInput("non-positive reference power".into()));
    }
    let theta_c = numerical_aperture.asin();
    Ok((ff.integral_within(theta_c) / ff.total_power).clamp(0.0, 1.0))
}

/// Guided-mode power fraction: overlap of the simulated tangential fields
/// against the normalized mode profile, summed over both degenerate
/// polarizations and both axial directions (one per monitor face, using the
/// face's sign). `wire_center` locates the wire axis in plane coordinates.
pub fn coupling_alpha(
    monitor: &MonitorData,
    mode: &GuidedMode,
    wavelength: f64,
    total_power: f64,
    wire_center: [f64; 2],
) -> Result<f64, EmissionError> {
    let li = wavelength_index(monitor, wavelength)?;
    if (mode.wavelength() - wavelength).abs() > 1e-9 * wavelength {
        return Err(EmissionError::BadInput(
            "mode solved at a different wavelength".into(),
        ));
    }
    if !(total_power > 0.0) {
        return Err(EmissionError::BadInput("non-positive total power".into()));
    }
    if monitor.faces.is_empty() {
        return Err(EmissionError::BadInput("monitor has no faces".into()));
    }
    let mut guided = 0.0;
    for face in &monitor.faces {
        if face.normal != crate::fdtd::Axis::Z {
            return Err(EmissionError::BadInput(
                "coupling plane must be a wire cross-section (z-normal)".into(),
            ));
        }
        let backward = face.sign < 0.0;
        // Degenerate pair: the fundamental pattern and its 90-degree rotation.
        for orientation in [0.0, std::f64::consts::FRAC_PI_2] {
            guided += projected_power(face, li, mode, orientation, backward, wire_center);
        }
    }
    Ok((guided / total_power).clamp(0.0, 1.0))
}

/// |c|^2 / P_mode with c the cross-flux overlap on the face grid and P_mode
/// the mode's discrete flux on the same grid, so self-projection is exact.
fn projected_power(
    face: &PlaneData,
    li: usize,
    mode: &GuidedMode,
    orientation: f64,
    backward: bool,
    wire_center: [f64; 2],
) -> f64 {
    let area = face.delta * face.delta;
    let mut overlap = Complex64::new(0.0, 0.0);
    let mut p_mode = 0.0;
    for p in 0..face.n1 {
        for q in 0..face.n2 {
            let f = p * face.n2 + q;
            let [x, y] = face.face_center(p, q);
            let [mex, mey, _, mhx, mhy, _] =
                mode.cartesian_fields(x - wire_center[0], y - wire_center[1], orientation, backward);
            let (se1, se2) = (face.e1[li][f], face.e2[li][f]);
            let (sh1, sh2) = (face.h1[li][f], face.h2[li][f]);
            overlap += (se1 * mhy.conj() - se2 * mhx.conj())
                + (mex.conj() * sh2 - mey.conj() * sh1);
            p_mode += (mex * mhy.conj() - mey * mhx.conj()).re;
        }
    }
    let c = overlap * 0.25 * area;
    let p_mode = (0.5 * p_mode * area).abs();
    if p_mode <= 0.0 {
        return 0.0;
    }
    c.norm_sqr() / p_mode
}

/// E = P_structure / P_bulk; the classical power ratio equals the rate ratio.
pub fn enhancement_factor(structure_power: f64, bulk_power: f64) -> Result<f64, EmissionError> {
    if !(bulk_power > 0.0) {
        return Err(EmissionError::BadInput(format!(
            "bulk power must be positive, got {bulk_power}"
        )));
    }
    Ok(structure_power / bulk_power)
}

/// Two-mirror interference model of the emission-rate modulation versus the
/// emitter's axial position z in [0, h]: mirrors at the bottom facet (into
/// the substrate) and the top facet (into air), round-trip phase 2 beta z.
pub fn fabry_perot_model(
    r_bottom: f64,
    r_top: f64,
    beta: f64,
    height: f64,
    positions: &[f64],
) -> Vec<(f64, f64)> {
    let phase = |d: f64| Complex64::from_polar(1.0, -2.0 * beta * d);
    let denom = Complex64::new(1.0, 0.0) - r_bottom * r_top * phase(height);
    positions
        .iter()
        .map(|&z| {
            let num = (Complex64::new(1.0, 0.0) + r_bottom * phase(z))
                * (Complex64::new(1.0, 0.0) + r_top * phase(height - z));
            (z, (num / denom).re)
        })
        .collect()
}

/// Fabry-Perot axial profile for the fundamental mode of the given wire:
/// solves the mode, derives both facet reflectivities, and evaluates the
/// two-mirror model at the requested positions.
pub fn fabry_perot_profile(
    spec: &WaveguideSpec,
    wire_height: f64,
    substrate_index: f64,
    positions: &[f64],
) -> Result<Vec<(f64, f64)>, EmissionError> {
    let modes = solve_modes(spec, 1)?;
    let mode = modes
        .first()
        .ok_or_else(|| EmissionError::BadInput("no guided mode for this wire".into()))?;
    let n_eff = mode.n_eff;
    let r_top = (n_eff - 1.0) / (n_eff + 1.0);
    let r_bottom = (n_eff - substrate_index) / (n_eff + substrate_index);
    Ok(fabry_perot_model(r_bottom, r_top, mode.beta(), wire_height, positions))
}

/// Emitter weight function on the working band, linearly interpolated
/// between samples and zero outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpectrum {
    /// Sorted sample wavelengths in meters.
    pub wavelengths: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EmitterSpectrum {
    pub fn new(wavelengths: Vec<f64>, weights: Vec<f64>) -> Result<Self, EmissionError> {
        if wavelengths.len() < 2 || wavelengths.len() != weights.len() {
            return Err(EmissionError::InvalidSpectrum(
                "need at least two (wavelength, weight) samples".into(),
            ));
        }
        if !wavelengths.windows(2).all(|w| w[0] < w[1]) {
            return Err(EmissionError::InvalidSpectrum(
                "wavelengths must be strictly increasing".into(),
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(EmissionError::InvalidSpectrum(
                "weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(EmissionError::InvalidSpectrum("all weights are zero".into()));
        }
        Ok(EmitterSpectrum {
            wavelengths,
            weights,
        })
    }

    /// Flat weight across the working band: the least-informative choice.
    pub fn flat_default() -> Self {
        EmitterSpectrum {
            wavelengths: vec![637e-9, 780e-9],
            weights: vec![1.0, 1.0],
        }
    }

    pub fn weight_at(&self, wavelength: f64) -> f64 {
        let xs = &self.wavelengths;
        if wavelength < xs[0] || wavelength > *xs.last().unwrap() {
            return 0.0;
        }
        let i = xs.partition_point(|&x| x <= wavelength).min(xs.len() - 1);
        let (i0, i1) = if i == 0 { (0, 1) } else { (i - 1, i) };
        let t = (wavelength - xs[i0]) / (xs[i1] - xs[i0]);
        self.weights[i0] * (1.0 - t) + self.weights[i1] * t
    }

    pub fn band(&self) -> (f64, f64) {
        (self.wavelengths[0], *self.wavelengths.last().unwrap())
    }

    /// Parses a "wavelength_nm,weight" CSV (header optional).
    pub fn from_csv(text: &str) -> Result<Self, EmissionError> {
        let mut wl = Vec::new();
        let mut wt = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("wavelength")) {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| {
                EmissionError::InvalidSpectrum(format!("line {}: expected two columns", i + 1))
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    EmissionError::InvalidSpectrum(format!("line {}: bad number {s:?}", i + 1))
                })
            };
            wl.push(parse(a)? * 1e-9);
            wt.push(parse(b)?);
        }
        EmitterSpectrum::new(wl, wt)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("wavelength_nm,weight\n");
        for (w, g) in self.wavelengths.iter().zip(&self.weights) {
            out.push_str(&format!("{},{}\n", w * 1e9, g));
        }
        out
    }
}

/// Emission metrics for one (wavelength, polarization) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionReport {
    pub wavelength: f64,
    pub polarization: PolarizationClass,
    /// Polarization angle: 0 for s, pi/2 for p.
    pub sigma: f64,
    pub alpha: f64,
    pub eta: f64,
    pub enhancement: f64,
    pub total_power: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub far_field: Option<FarFieldMap>,
}

impl EmissionReport {
    pub fn validate(&self) -> Result<(), EmissionError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(EmissionError::BadInput(format!("alpha {} not in [0,1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(EmissionError::BadInput(format!("eta {} not in [0,1]", self.eta)));
        }
        if !(self.enhancement > 0.0) {
            return Err(EmissionError::BadInput(format!(
                "enhancement {} must be positive",
                self.enhancement
            )));
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str =
        "wavelength_nm,polarization,sigma_rad,alpha,eta,enhancement,total_power";

    pub fn csv_row(&self) -> String {
        let pol = match self.polarization {
            PolarizationClass::S => "s",
            PolarizationClass::P => "p",
        };
        format!(
            "{},{pol},{},{},{},{},{}",
            self.wavelength * 1e9,
            self.sigma,
            self.alpha,
            self.eta,
            self.enhancement,
            self.total_power
        )
    }
}

/// Renders a set of reports as a CSV table.
pub fn reports_to_csv(reports: &[EmissionReport]) -> String {
    let mut out = String::from(EmissionReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

struct SpBasis {
    wavelengths: Vec<f64>,
    /// E_s * eta_s per wavelength.
    fs: Vec<f64>,
    /// E_p * eta_p per wavelength.
    fp: Vec<f64>,
}

fn sp_basis(reports: &[EmissionReport]) -> Result<SpBasis, EmissionError> {
    let mut wavelengths: Vec<f64> = reports.iter().map(|r| r.wavelength).collect();
    wavelengths.sort_by(f64::total_cmp);
    wavelengths.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);
    if wavelengths.len() < 2 {
        return Err(EmissionError::InsufficientGrid(
            "need reports at two or more wavelengths".into(),
        ));
    }
    let mut fs = Vec::with_capacity(wavelengths.len());
    let mut fp = Vec::with_capacity(wavelengths.len());
    for &w in &wavelengths {
        let find = |pol: PolarizationClass| {
            reports
                .iter()
                .find(|r| {
                    r.polarization == pol && (r.wavelength - w).abs() <= 1e-12 * w
                })
                .ok_or_else(|| {
                    EmissionError::InsufficientGrid(format!(
                        "missing {pol:?} report at {} nm",
                        w * 1e9
                    ))
                })
        };
        let s = find(PolarizationClass::S)?;
        let p = find(PolarizationClass::P)?;
        fs.push(s.enhancement * s.eta);
        fp.push(p.enhancement * p.eta);
    }
    Ok(SpBasis {
        wavelengths,
        fs,
        fp,
    })
}

fn lerp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let i = xs.partition_point(|&v| v <= x);
    let (i0, i1) = (i - 1, i);
    let t = (x - xs[i0]) / (xs[i1] - xs[i0]);
    ys[i0] * (1.0 - t) + ys[i1] * t
}

const Z_QUAD_NODES: usize = 64;

/// Figure of merit Z: the spectrum- and polarization-averaged product of
/// enhancement and collection efficiency. The dipole at polarization angle
/// sigma splits incoherently into s and p with weights cos^2 and sin^2.
pub fn figure_of_merit_z(
    reports: &[EmissionReport],
    spectrum: &EmitterSpectrum,
) -> Result<f64, EmissionError> {
    let basis = sp_basis(reports)?;
    let (lo, hi) = (basis.wavelengths[0], *basis.wavelengths.last().unwrap());
    let lambda_grid = QuadratureGrid::gauss_legendre(Z_QUAD_NODES, lo, hi)?;
    let sigma_grid = QuadratureGrid::gauss_legendre(Z_QUAD_NODES, 0.0, 2.0 * std::f64::consts::PI)?;

    let numerator = integrate_1d(
        |lambda| {
            let g0 = spectrum.weight_at(lambda);
            if g0 == 0.0 {
                return 0.0;
            }
            let fs = lerp_table(&basis.wavelengths, &basis.fs, lambda);
            let fp = lerp_table(&basis.wavelengths, &basis.fp, lambda);
            let inner = integrate_1d(
                |sigma| sigma.cos().powi(2) * fs + sigma.sin().powi(2) * fp,
                &sigma_grid,
            )
            .unwrap_or(f64::NAN);
            g0 * inner
        },
        &lambda_grid,
    )?;
    let denominator = integrate_1d(|lambda| spectrum.weight_at(lambda), &lambda_grid)?;
    if !(denominator > 0.0) {
        return Err(EmissionError::InvalidSpectrum(
            "spectrum vanishes on the report band".into(),
        ));
    }
    Ok(numerator / (2.0 * std::f64::consts::PI * denominator))
}

/// Same quantity with the polarization integral reduced in closed form:
/// the sigma average of cos^2/sin^2 weights is 1/2 each.
pub fn figure_of_merit_z_closed_form(
    reports: &[EmissionReport],
    spectrum: &EmitterSpectrum,
) -> Result<f64, EmissionError> {
    let basis = sp_basis(reports)?;
    let (lo, hi) = (basis.wavelengths[0], *basis.wavelengths.last().unwrap());
    let lambda_grid = QuadratureGrid::gauss_legendre(Z_QUAD_NODES, lo, hi)?;
    let numerator = integrate_1d(
        |lambda| {
            let g0 = spectrum.weight_at(lambda);
            let fs = lerp_table(&basis.wavelengths, &basis.fs, lambda);
            let fp = lerp_table(&basis.wavelengths, &basis.fp, lambda);
            g0 * 0.5 * (fs + fp)
        },
        &lambda_grid,
    )?;
    let denominator = integrate_1d(|lambda| spectrum.weight_at(lambda), &lambda_grid)?;
    if !(denominator > 0.0) {
        return Err(EmissionError::InvalidSpectrum(
            "spectrum vanishes on the report band".into(),
        ));
    }
    Ok(numerator / denominator)
}
