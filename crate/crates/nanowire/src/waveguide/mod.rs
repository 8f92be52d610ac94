//! Exact guided-mode theory of the step-index circular dielectric waveguide.
//!
//! Modes are roots of the full-vectorial characteristic equation for the
//! two-layer cylinder (core index n1, infinite cladding n2):
//!
//! ```text
//! (F1 + F2) (n1^2 F1 + n2^2 F2) = m^2 n_eff^2 (1/u^2 + 1/w^2)^2
//! F1 = J'_m(u) / (u J_m(u)),  F2 = K'_m(w) / (w K_m(w))
//! u = k0 a sqrt(n1^2 - n_eff^2),  w = k0 a sqrt(n_eff^2 - n2^2)
//! ```
//!
//! The weakly-guiding LP approximation is deliberately not used: the
//! diamond/air contrast is far too high for it.

mod fields;

pub use fields::FieldSextet;

use crate::numerics::{bessel_deriv, bessel_j, bessel_k, BesselKind, NumericsError};
use crate::{C0, EPS0, MU0};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WaveguideError {
    #[error("invalid waveguide spec: {0}")]
    InvalidSpec(String),
    #[error("mode solver resolution failure: {0}")]
    SolverResolution(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Step-index cylinder geometry and operating wavelength (SI meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideSpec {
    pub diameter: f64,
    pub core_index: f64,
    pub clad_index: f64,
    pub wavelength: f64,
}

impl WaveguideSpec {
    pub fn new(
        diameter: f64,
        core_index: f64,
        clad_index: f64,
        wavelength: f64,
    ) -> Result<Self, WaveguideError> {
        let spec = Self {
            diameter,
            core_index,
            clad_index,
            wavelength,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), WaveguideError> {
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(WaveguideError::InvalidSpec(format!(
                "diameter must be > 0, got {}",
                self.diameter
            )));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(WaveguideError::InvalidSpec(format!(
                "wavelength must be > 0, got {}",
                self.wavelength
            )));
        }
        if !(self.core_index > self.clad_index && self.clad_index >= 1.0) {
            return Err(WaveguideError::InvalidSpec(format!(
                "need core_index > clad_index >= 1, got n1={}, n2={}",
                self.core_index, self.clad_index
            )));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.diameter / 2.0
    }

    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }
}

/// Normalized frequency V = (pi d / lambda) sqrt(n1^2 - n2^2).
pub fn v_parameter(spec: &WaveguideSpec) -> f64 {
    std::f64::consts::PI * spec.diameter / spec.wavelength
        * (spec.core_index.powi(2) - spec.clad_index.powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeFamily {
    HE,
    EH,
    TE,
    TM,
}

impl std::fmt::Display for ModeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModeFamily::HE => "HE",
            ModeFamily::EH => "EH",
            ModeFamily::TE => "TE",
            ModeFamily::TM => "TM",
        };
        write!(f, "{s}")
    }
}

/// One radial sample of the field envelopes (azimuthal factors stripped).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSample {
    pub r: f64,
    pub fields: FieldSextet,
}

/// A solved guided mode, power-normalized to 1 W through the cross-section.
///
/// Azimuthal convention for the stored orientation: E_z, E_r, H_phi vary as
/// cos(m phi); E_phi, H_z, H_r vary as sin(m phi). The degenerate partner of
/// an m >= 1 mode is this pattern rotated by pi/(2m).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuidedMode {
    pub spec: WaveguideSpec,
    pub family: ModeFamily,
    pub azimuthal_order: u32,
    pub radial_index: u32,
    pub n_eff: f64,
    /// Exact excess t = n_eff - n2. Kept separately because near cutoff t can
    /// be smaller than the f64 resolution of n_eff around n2.
    excess: f64,
    /// Ez amplitude in the core (V/m) after normalization.
    amp_e: f64,
    /// Hz amplitude in the core (A/m) after normalization.
    amp_h: f64,
    pub radial_profile: Vec<RadialSample>,
}

/// Number of stored radial profile samples.
pub const PROFILE_SAMPLES: usize = 512;
/// Default number of uniform scan samples over (n2, n1).
pub const DEFAULT_SCAN: usize = 4096;

struct Dispersion {
    spec: WaveguideSpec,
    m: u32,
}

impl Dispersion {
    /// u and w from the excess t = n_eff - n2. Working in t keeps near-cutoff
    /// roots representable: t can be far below f64 resolution of n_eff itself.
    fn uw(&self, t: f64) -> (f64, f64) {
        let k0a = self.spec.k0() * self.spec.radius();
        let q = t * (2.0 * self.spec.clad_index + t);
        let u = k0a
            * (self.spec.core_index.powi(2) - self.spec.clad_index.powi(2) - q)
                .max(0.0)
                .sqrt();
        let w = k0a * q.max(0.0).sqrt();
        (u, w)
    }

    fn f1(&self, u: f64) -> f64 {
        let jd = bessel_deriv(BesselKind::J, self.m, u).unwrap_or(f64::NAN);
        let j = bessel_j(self.m, u).unwrap_or(f64::NAN);
        jd / (u * j)
    }

    fn f2(&self, w: f64) -> f64 {
        let kd = bessel_deriv(BesselKind::K, self.m, w).unwrap_or(f64::NAN);
        let k = bessel_k(self.m, w).unwrap_or(f64::NAN);
        kd / (w * k)
    }

    /// Characteristic function of `family` in the excess variable t.
    fn eval(&self, family: ModeFamily, t: f64) -> f64 {
        let (u, w) = self.uw(t);
        if u <= 0.0 || w <= 0.0 {
            return f64::NAN;
        }
        let n_eff = self.spec.clad_index + t;
        let n1sq = self.spec.core_index.powi(2);
        let n2sq = self.spec.clad_index.powi(2);
        let f1 = self.f1(u);
        let f2 = self.f2(w);
        match family {
            ModeFamily::TE => f1 + f2,
            ModeFamily::TM => n1sq * f1 + n2sq * f2,
            ModeFamily::HE | ModeFamily::EH => {
                let m = self.m as f64;
                let s = 1.0 / (u * u) + 1.0 / (w * w);
                let r = m * m * n_eff * n_eff * s * s;
                let disc = ((n1sq - n2sq) * f2).powi(2) + 4.0 * n1sq * r;
                let root = disc.sqrt();
                if family == ModeFamily::EH {
                    return f1 - (-(n1sq + n2sq) * f2 + root) / (2.0 * n1sq);
                }
                // HE branch: -(n1^2+n2^2) F2 - sqrt(disc) cancels
                // catastrophically for small w. Rationalize with
                // a - sqrt(b) = (a^2 - b) / (a + sqrt(b)) and use the exact
                // recurrence F2 = -(m/w^2 + K_{m-1}/(w K_m)), which turns the
                // difference into a product free of cancellation. The key
                // stable piece is m t / w^2 = m / ((k0 a)^2 (2 n2 + t)).
                let n2 = self.spec.clad_index;
                let k0a = self.spec.k0() * self.spec.radius();
                let g = bessel_k(self.m.saturating_sub(1), w).unwrap_or(f64::NAN)
                    / (w * bessel_k(self.m, w).unwrap_or(f64::NAN));
                let p = 1.0 / (w * w);
                let h = 1.0 / (u * u);
                let a = (n1sq + n2sq) * (m * p + g);
                let m_pt = m / (k0a * k0a * (2.0 * n2 + t));
                let first = -m_pt + n2 * g - m * n_eff * h;
                let second = n2 * (m * p + g) + m * n_eff * (p + h);
                let branch = 4.0 * n1sq * first * second / (2.0 * n1sq * (a + root));
                f1 - branch
            }
        }
    }
}

/// Root whose |f| exceeds this after bisection is a pole of the
/// characteristic function (a zero of J_m), not a mode.
const POLE_REJECT: f64 = 1e2;

/// Finds all roots of the characteristic function for one family, returned
/// as excess values t = n_eff - n2, ascending.
fn scan_family(
    disp: &Dispersion,
    family: ModeFamily,
    scan_samples: usize,
) -> Result<Vec<f64>, WaveguideError> {
    let hi = disp.spec.core_index - disp.spec.clad_index - 1e-12;
    if hi <= 0.0 {
        return Ok(Vec::new());
    }
    let f = |t: f64| disp.eval(family, t);
    let step = hi / scan_samples.max(8) as f64;
    let mut roots = scan_and_bisect(&f, step, hi, scan_samples)?;
    // HE_11 has no cutoff: near V = 0 its root sits exponentially close to
    // t = 0, far below the linear scan step. If the linear scan saw no HE_1
    // root at all, sweep the first cell on a logarithmic grid in t.
    if roots.is_empty() && family == ModeFamily::HE && disp.m == 1 {
        let mut grid = Vec::with_capacity(800);
        let mut t = 1e-40;
        while t < step {
            grid.push(t);
            t *= 1.15;
        }
        grid.push(step);
        let mut extra = Vec::new();
        let mut prev = f(grid[0]);
        for pair in grid.windows(2) {
            let v = f(pair[1]);
            if prev.is_finite() && v.is_finite() && prev * v < 0.0 {
                let root = bisect_log(&f, pair[0], pair[1]);
                if f(root).abs() < POLE_REJECT {
                    extra.push(root);
                }
            }
            prev = v;
        }
        extra.append(&mut roots);
        roots = extra;
    }
    Ok(roots)
}

/// Bisection in log space for roots spanning many orders of magnitude in t.
fn bisect_log<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    (lo * hi).sqrt()
}

fn scan_and_bisect<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<f64>, WaveguideError> {
    let n = samples.max(8);
    let step = (hi - lo) / n as f64;
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..=n {
        let x = if i == n { hi } else { lo + i as f64 * step };
        let fx = f(x);
        if f_prev.is_finite() && fx.is_finite() && f_prev * fx < 0.0 {
            // Subdivide the cell: it may hold several roots and/or poles.
            let sub = 32;
            let mut sx_prev = x_prev;
            let mut sf_prev = f_prev;
            for jj in 1..=sub {
                let sx = x_prev + (x - x_prev) * jj as f64 / sub as f64;
                let sf = f(sx);
                if sf_prev.is_finite() && sf.is_finite() && sf_prev * sf < 0.0 {
                    let root = bisect_to(f, sx_prev, sx);
                    if f(root).abs() < POLE_REJECT {
                        roots.push(root);
                    }
                }
                sx_prev = sx;
                sf_prev = sf;
            }
        }
        x_prev = x;
        f_prev = fx;
    }
    // Two modes inside one subdivided cell would be unresolved ambiguity.
    for pair in roots.windows(2) {
        if pair[1] - pair[0] < step / 16.0 {
            return Err(WaveguideError::SolverResolution(format!(
                "roots at {} and {} closer than the scan step; increase scan resolution",
                pair[0], pair[1]
            )));
        }
    }
    Ok(roots)
}

fn bisect_to<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves all guided modes with azimuthal order <= `max_order`, sorted by
/// descending effective index.
pub fn solve_modes(spec: &WaveguideSpec, max_order: u32) -> Result<Vec<GuidedMode>, WaveguideError> {
    solve_modes_with_scan(spec, max_order, DEFAULT_SCAN)
}

pub fn solve_modes_with_scan(
    spec: &WaveguideSpec,
    max_order: u32,
    scan_samples: usize,
) -> Result<Vec<GuidedMode>, WaveguideError> {
    spec.validate()?;
    let mut modes = Vec::new();
    for m in 0..=max_order {
        let disp = Dispersion { spec: *spec, m };
        let families: &[ModeFamily] = if m == 0 {
            &[ModeFamily::TE, ModeFamily::TM]
        } else {
            &[ModeFamily::HE, ModeFamily::EH]
        };
        for &family in families {
            let mut roots = scan_family(&disp, family, scan_samples)?;
            roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (idx, &t) in roots.iter().enumerate() {
                modes.push(GuidedMode::construct(spec, family, m, idx as u32 + 1, t)?);
            }
        }
    }
    modes.sort_by(|a, b| b.excess.partial_cmp(&a.excess).unwrap());
    Ok(modes)
}

impl GuidedMode {
    fn construct(
        spec: &WaveguideSpec,
        family: ModeFamily,
        m: u32,
        radial_index: u32,
        excess: f64,
    ) -> Result<Self, WaveguideError> {
        let mut mode = GuidedMode {
            spec: *spec,
            family,
            azimuthal_order: m,
            radial_index,
            n_eff: spec.clad_index + excess,
            excess,
            amp_e: 0.0,
            amp_h: 0.0,
            radial_profile: Vec::new(),
        };
        let (ae, ah) = mode.raw_amplitudes()?;
        mode.amp_e = ae;
        mode.amp_h = ah;
        let p = mode.cross_section_power();
        if !(p.is_finite() && p > 0.0) {
            return Err(WaveguideError::SolverResolution(format!(
                "non-positive modal power {p} for {family}{m},{radial_index}"
            )));
        }
        let s = 1.0 / p.sqrt();
        mode.amp_e *= s;
        mode.amp_h *= s;
        mode.radial_profile = mode.sample_profile();
        Ok(mode)
    }

    /// Unnormalized (A, B) = (Ez, Hz) core amplitudes from the boundary match.
    fn raw_amplitudes(&self) -> Result<(f64, f64), WaveguideError> {
        match self.family {
            ModeFamily::TE => Ok((0.0, 1.0)),
            ModeFamily::TM => Ok((1.0, 0.0)),
            ModeFamily::HE | ModeFamily::EH => {
                let disp = Dispersion {
                    spec: self.spec,
                    m: self.azimuthal_order,
                };
                let (u, w) = disp.uw(self.excess);
                let f1 = disp.f1(u);
                let f2 = disp.f2(w);
                let m = self.azimuthal_order as f64;
                let k0 = self.spec.k0();
                let beta = self.n_eff * k0;
                let omega = k0 * C0;
                let s = 1.0 / (u * u) + 1.0 / (w * w);
                if (f1 + f2).abs() > 1e-12 {
                    let b_over_a = -beta * m * s / (omega * MU0 * (f1 + f2));
                    Ok((1.0, b_over_a))
                } else {
                    let e1 = EPS0 * self.spec.core_index.powi(2);
                    let e2 = EPS0 * self.spec.clad_index.powi(2);
                    let a_over_b = -beta * m * s / (omega * (e1 * f1 + e2 * f2));
                    Ok((a_over_b, 1.0))
                }
            }
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.spec.wavelength
    }

    /// Exact n_eff - n2, resolvable even when the mode is barely guided.
    pub fn n_eff_excess(&self) -> f64 {
        self.excess
    }

    /// Propagation constant beta (rad/m).
    pub fn beta(&self) -> f64 {
        self.n_eff * self.spec.k0()
    }
}

/// Modal amplitude reflection at a wire/air end facet, estimated by the
/// effective-index Fresnel formula r = (n_eff - n_out) / (n_eff + n_out).
pub fn facet_reflectivity(mode: &GuidedMode) -> f64 {
    facet_reflectivity_into(mode.n_eff, 1.0)
}

/// Same estimate against an arbitrary outside index (wire base on substrate).
pub fn facet_reflectivity_into(n_eff: f64, n_outside: f64) -> f64 {
    (n_eff - n_outside) / (n_eff + n_outside)
}

#[cfg(test)]
mod tests;
