//! Frequency-domain field monitors: plane and closed-box surfaces that
//! accumulate a running DFT of the tangential E and H fields, collocated to
//! face centers, plus flux evaluation and CSV / binary export.

use std::io::Write as _;

use byteorder::{LittleEndian, WriteBytesExt};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FdtdError;

pub const BINARY_MAGIC: &[u8; 4] = b"NWEM";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// Tangential axes in cyclic order, so that t1 x t2 = normal.
    pub fn tangentials(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

fn default_sign() -> f64 {
    1.0
}

/// Monitor surface in physical coordinates (micrometers, domain-local).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MonitorSpec {
    Plane {
        name: String,
        normal: Axis,
        position_um: f64,
        /// Rectangle bounds on the two tangential axes, cyclic order.
        min_um: [f64; 2],
        max_um: [f64; 2],
        /// +1 counts power along +normal, -1 along -normal.
        #[serde(default = "default_sign")]
        sign: f64,
    },
    Box {
        name: String,
        min_um: [f64; 3],
        max_um: [f64; 3],
    },
}

impl MonitorSpec {
    pub fn name(&self) -> &str {
        match self {
            MonitorSpec::Plane { name, .. } | MonitorSpec::Box { name, .. } => name,
        }
    }
}

/// A plane resolved onto the grid. Faces are indexed (p, q) over the two
/// tangential axes; face (p, q) is centered at ((p+1/2)Δ, (q+1/2)Δ) on the
/// integer plane `k` along the normal.
#[derive(Debug, Clone)]
pub struct GridPlane {
    pub normal: Axis,
    pub sign: f64,
    pub k: usize,
    pub p0: usize,
    pub p1: usize,
    pub q0: usize,
    pub q1: usize,
}

impl GridPlane {
    pub fn n1(&self) -> usize {
        self.p1 - self.p0
    }

    pub fn n2(&self) -> usize {
        self.q1 - self.q0
    }

    pub fn faces(&self) -> usize {
        self.n1() * self.n2()
    }

    /// Collocates the four tangential components onto face centers.
    /// `e` and `h` are the component arrays ordered [x, y, z]; `strides` are
    /// the flat-index strides per axis.
    pub fn collocate(
        &self,
        e: [&[f64]; 3],
        h: [&[f64]; 3],
        strides: [usize; 3],
        scratch: &mut PlaneScratch,
    ) {
        let (t1, t2) = self.normal.tangentials();
        let sn = strides[self.normal.index()];
        let s1 = strides[t1.index()];
        let s2 = strides[t2.index()];
        let e1a = e[t1.index()];
        let e2a = e[t2.index()];
        let h1a = h[t1.index()];
        let h2a = h[t2.index()];
        let base0 = self.k * sn;
        let mut f = 0usize;
        for p in self.p0..self.p1 {
            let row = base0 + p * s1;
            for q in self.q0..self.q1 {
                let c = row + q * s2;
                // E_t1 sits at +1/2 along t1; average along t2.
                scratch.e1[f] = 0.5 * (e1a[c] + e1a[c + s2]);
                // E_t2 sits at +1/2 along t2; average along t1.
                scratch.e2[f] = 0.5 * (e2a[c] + e2a[c + s1]);
                // H_t1 sits at +1/2 along t2 and normal; average along t1
                // and across the normal to land on the integer plane.
                scratch.h1[f] =
                    0.25 * (h1a[c] + h1a[c + s1] + h1a[c - sn] + h1a[c + s1 - sn]);
                scratch.h2[f] =
                    0.25 * (h2a[c] + h2a[c + s2] + h2a[c - sn] + h2a[c + s2 - sn]);
                f += 1;
            }
        }
    }
}

/// Per-step collocation buffer, reused across wavelengths.
pub struct PlaneScratch {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

impl PlaneScratch {
    pub fn new(faces: usize) -> Self {
        PlaneScratch {
            e1: vec![0.0; faces],
            e2: vec![0.0; faces],
            h1: vec![0.0; faces],
            h2: vec![0.0; faces],
        }
    }
}

/// A monitor resolved onto the grid: one plane, or six outward box faces.
#[derive(Debug, Clone)]
pub struct ResolvedMonitor {
    pub name: String,
    pub is_box: bool,
    pub planes: Vec<GridPlane>,
}

/// Accumulated frequency-domain fields for one plane.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlaneData {
    pub normal: Axis,
    pub sign: f64,
    /// Integer grid plane along the normal.
    pub plane_index: usize,
    /// Face-range origin (p0, q0) on the tangential axes.
    pub origin: [usize; 2],
    pub n1: usize,
    pub n2: usize,
    pub delta: f64,
    /// Row-major [p][q] complex fields, one vector per wavelength.
    pub e1: Vec<Vec<Complex64>>,
    pub e2: Vec<Vec<Complex64>>,
    pub h1: Vec<Vec<Complex64>>,
    pub h2: Vec<Vec<Complex64>>,
}

impl PlaneData {
    pub fn new(plane: &GridPlane, n_wavelengths: usize, delta: f64) -> Self {
        let faces = plane.faces();
        let zeros = || vec![vec![Complex64::new(0.0, 0.0); faces]; n_wavelengths];
        PlaneData {
            normal: plane.normal,
            sign: plane.sign,
            plane_index: plane.k,
            origin: [plane.p0, plane.q0],
            n1: plane.n1(),
            n2: plane.n2(),
            delta,
            e1: zeros(),
            e2: zeros(),
            h1: zeros(),
            h2: zeros(),
        }
    }

    /// DFT update: adds `value * phase` for every face, with separate phases
    /// for E (integer time step) and H (half step).
    pub fn accumulate(&mut self, li: usize, scratch: &PlaneScratch, pe: Complex64, ph: Complex64) {
        let axpy = |dst: &mut [Complex64], src: &[f64], p: Complex64| {
            for (d, &v) in dst.iter_mut().zip(src) {
                d.re += v * p.re;
                d.im += v * p.im;
            }
        };
        axpy(&mut self.e1[li], &scratch.e1, pe);
        axpy(&mut self.e2[li], &scratch.e2, pe);
        axpy(&mut self.h1[li], &scratch.h1, ph);
        axpy(&mut self.h2[li], &scratch.h2, ph);
    }

    /// Signed power through this plane at wavelength index `li`.
    pub fn flux_at(&self, li: usize) -> f64 {
        let mut acc = 0.0;
        for f in 0..self.n1 * self.n2 {
            let e1 = self.e1[li][f];
            let e2 = self.e2[li][f];
            let h1 = self.h1[li][f];
            let h2 = self.h2[li][f];
            acc += (e1 * h2.conj() - e2 * h1.conj()).re;
        }
        0.5 * self.sign * acc * self.delta * self.delta
    }

    /// Physical face-center coordinates on the tangential axes, in meters.
    pub fn face_center(&self, p: usize, q: usize) -> [f64; 2] {
        [
            (self.origin[0] + p) as f64 * self.delta + 0.5 * self.delta,
            (self.origin[1] + q) as f64 * self.delta + 0.5 * self.delta,
        ]
    }
}

/// Recorded output of one monitor: a single plane, or six box faces.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MonitorData {
    pub name: String,
    pub is_box: bool,
    pub wavelengths: Vec<f64>,
    pub faces: Vec<PlaneData>,
}

impl MonitorData {
    fn wavelength_index(&self, wavelength: f64) -> Result<usize, FdtdError> {
        self.wavelengths
            .iter()
            .position(|&w| (w - wavelength).abs() <= 1e-12 * wavelength.abs().max(1.0))
            .ok_or(FdtdError::UnknownWavelength(wavelength))
    }

    /// CSV export: one row per (wavelength, face, component) sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "face,wavelength_m,t1_m,t2_m,re_e1,im_e1,re_e2,im_e2,re_h1,im_h1,re_h2,im_h2\n",
        );
        for (fi, face) in self.faces.iter().enumerate() {
            for (li, &w) in self.wavelengths.iter().enumerate() {
                for p in 0..face.n1 {
                    for q in 0..face.n2 {
                        let f = p * face.n2 + q;
                        let [t1, t2] = face.face_center(p, q);
                        let e1 = face.e1[li][f];
                        let e2 = face.e2[li][f];
                        let h1 = face.h1[li][f];
                        let h2 = face.h2[li][f];
                        out.push_str(&format!(
                            "{fi},{w:.9e},{t1:.9e},{t2:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                            e1.re, e1.im, e2.re, e2.im, h1.re, h1.im, h2.re, h2.im
                        ));
                    }
                }
            }
        }
        out
    }

    /// Compact binary export with a versioned header: magic "NWEM",
    /// version u32, then little-endian u32 dimensions and f64 payload.
    pub fn to_binary(&self) -> Result<Vec<u8>, FdtdError> {
        let mut buf = Vec::new();
        buf.write_all(BINARY_MAGIC)?;
        buf.write_u32::<LittleEndian>(BINARY_VERSION)?;
        buf.write_u32::<LittleEndian>(self.faces.len() as u32)?;
        buf.write_u32::<LittleEndian>(self.wavelengths.len() as u32)?;
        for &w in &self.wavelengths {
            buf.write_f64::<LittleEndian>(w)?;
        }
        for face in &self.faces {
            buf.write_u32::<LittleEndian>(face.normal.index() as u32)?;
            buf.write_u32::<LittleEndian>(face.plane_index as u32)?;
            buf.write_u32::<LittleEndian>(face.n1 as u32)?;
            buf.write_u32::<LittleEndian>(face.n2 as u32)?;
            buf.write_f64::<LittleEndian>(face.sign)?;
            buf.write_f64::<LittleEndian>(face.delta)?;
            for arr in [&face.e1, &face.e2, &face.h1, &face.h2] {
                for lam in arr {
                    for z in lam {
                        buf.write_f64::<LittleEndian>(z.re)?;
                        buf.write_f64::<LittleEndian>(z.im)?;
                    }
                }
            }
        }
        Ok(buf)
    }
}

/// Power through the monitor at the given wavelength: plane flux along its
/// sign convention, or the outward sum over a box's six faces.
pub fn flux(monitor: &MonitorData, wavelength: f64) -> Result<f64, FdtdError> {
    let li = monitor.wavelength_index(wavelength)?;
    Ok(monitor.faces.iter().map(|f| f.flux_at(li)).sum())
}

/// Resolves monitor specs onto grid indices, enforcing the PML clearance.
pub fn resolve_monitors(
    specs: &[MonitorSpec],
    dims: [usize; 3],
    npml: usize,
    delta: f64,
    wavelengths: &[f64],
) -> Result<Vec<ResolvedMonitor>, FdtdError> {
    if wavelengths.is_empty() {
        return Err(FdtdError::InvalidConfig(
            "record_wavelengths_nm must not be empty".into(),
        ));
    }
    specs
        .iter()
        .map(|spec| resolve_one(spec, dims, npml, delta))
        .collect()
}

fn resolve_one(
    spec: &MonitorSpec,
    dims: [usize; 3],
    npml: usize,
    delta: f64,
) -> Result<ResolvedMonitor, FdtdError> {
    let err = |msg: String| FdtdError::Monitor(spec.name().to_string(), msg);
    // Integer grid planes must keep >= 2 cells between the plane (and its
    // collocation stencil) and the PML region.
    let k_lo = npml + 2;
    let k_hi = |n: usize| n - 1 - npml - 2;
    // Face index p spans cells; collocation touches nodes p and p+1.
    let clamp_faces =
        |min_um: f64, max_um: f64, n: usize| -> Result<(usize, usize), FdtdError> {
            let lo = ((min_um * 1e-6 / delta).round() as i64).max(k_lo as i64) as usize;
            let hi = ((max_um * 1e-6 / delta).round() as i64).min(k_hi(n) as i64) as usize;
            if hi <= lo {
                return Err(err(format!(
                    "empty tangential range [{min_um}, {max_um}] um after PML clearance"
                )));
            }
            Ok((lo, hi))
        };
    let resolve_plane = |normal: Axis,
                         position_um: f64,
                         min_um: [f64; 2],
                         max_um: [f64; 2],
                         sign: f64|
     -> Result<GridPlane, FdtdError> {
        let n = dims[normal.index()];
        let k = (position_um * 1e-6 / delta).round() as i64;
        if k < k_lo as i64 || k > k_hi(n) as i64 {
            return Err(err(format!(
                "plane at {position_um} um lies within 2 cells of the PML"
            )));
        }
        let (t1, t2) = normal.tangentials();
        let (p0, p1) = clamp_faces(min_um[0], max_um[0], dims[t1.index()])?;
        let (q0, q1) = clamp_faces(min_um[1], max_um[1], dims[t2.index()])?;
        Ok(GridPlane {
            normal,
            sign,
            k: k as usize,
            p0,
            p1,
            q0,
            q1,
        })
    };

    match spec {
        MonitorSpec::Plane {
            name,
            normal,
            position_um,
            min_um,
            max_um,
            sign,
        } => {
            if sign.abs() != 1.0 {
                return Err(err("plane sign must be +1 or -1".into()));
            }
            let plane = resolve_plane(*normal, *position_um, *min_um, *max_um, *sign)?;
            Ok(ResolvedMonitor {
                name: name.clone(),
                is_box: false,
                planes: vec![plane],
            })
        }
        MonitorSpec::Box { name, min_um, max_um } => {
            let mut planes = Vec::with_capacity(6);
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let (t1, t2) = axis.tangentials();
                let tmin = [min_um[t1.index()], min_um[t2.index()]];
                let tmax = [max_um[t1.index()], max_um[t2.index()]];
                // Outward orientation: -normal on the low face, +normal high.
                planes.push(resolve_plane(axis, min_um[axis.index()], tmin, tmax, -1.0)?);
                planes.push(resolve_plane(axis, max_um[axis.index()], tmin, tmax, 1.0)?);
            }
            // A closed box requires matching face extents after clamping.
            for pair in planes.chunks(2) {
                if pair[0].k >= pair[1].k {
                    return Err(err("box has zero thickness along an axis".into()));
                }
            }
            Ok(ResolvedMonitor {
                name: name.clone(),
                is_box: true,
                planes,
            })
        }
    }
}
