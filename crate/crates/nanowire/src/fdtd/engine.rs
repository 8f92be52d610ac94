//! Leapfrog time stepping: curl updates over the whole grid, CPML corrective
//! passes over the boundary slabs, soft dipole current injection, and running
//! DFT accumulation on the monitors.

use num_complex::Complex64;

use super::grid::FdtdDomain;
use super::monitor::{Axis, MonitorData, PlaneData, PlaneScratch, ResolvedMonitor};
use super::FdtdError;
use crate::{EPS0, MU0, Z0};

/// Result of one simulation run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// User-requested monitors, in config order.
    pub monitors: Vec<MonitorData>,
    /// Closed box around the source, installed automatically.
    pub source_box: MonitorData,
    /// Outward power through the source box, per record wavelength.
    pub source_box_power: Vec<f64>,
    pub wavelengths: Vec<f64>,
    /// DFT of the driving current moment I(w) dl, per record wavelength.
    pub source_spectrum: Vec<Complex64>,
    /// True if the field energy decayed below 1e-6 of its peak.
    pub converged: bool,
    pub peak_energy: f64,
    pub final_energy: f64,
    pub dt: f64,
    pub steps: u32,
}

/// Convolutional PML state for one (component, axis) pair: two slabs of
/// (npml + 1) layers each, indexed by local layer and the two full axes.
struct Slab {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Slab {
    fn new(len: usize) -> Self {
        Slab {
            lo: vec![0.0; len],
            hi: vec![0.0; len],
        }
    }
}

struct LivePlane {
    data: PlaneData,
    scratch: PlaneScratch,
}

pub fn run(domain: &FdtdDomain) -> Result<RunOutput, FdtdError> {
    let (nx, ny, nz) = (domain.nx, domain.ny, domain.nz);
    let n = nx * ny * nz;
    let (sx, sy) = (ny * nz, nz);
    let delta = domain.delta;
    let dt = domain.dt;
    let dh = dt / (MU0 * delta);
    let steps = domain.config.time_steps;
    let wavelengths = domain.config.record_wavelengths();
    let nl = wavelengths.len();
    let omegas: Vec<f64> = wavelengths
        .iter()
        .map(|&w| 2.0 * std::f64::consts::PI * crate::C0 / w)
        .collect();

    let mut ex = vec![0.0f64; n];
    let mut ey = vec![0.0f64; n];
    let mut ez = vec![0.0f64; n];
    let mut hx = vec![0.0f64; n];
    let mut hy = vec![0.0f64; n];
    let mut hz = vec![0.0f64; n];

    let npml = domain.pml[0].npml;
    let nlay = npml + 1;
    let x_len = nlay * ny * nz;
    let y_len = nx * nlay * nz;
    let z_len = nx * ny * nlay;
    // psi arrays named by the component they correct and the stretch axis.
    let mut psi_eyx = Slab::new(x_len);
    let mut psi_ezx = Slab::new(x_len);
    let mut psi_hyx = Slab::new(x_len);
    let mut psi_hzx = Slab::new(x_len);
    let mut psi_exy = Slab::new(y_len);
    let mut psi_ezy = Slab::new(y_len);
    let mut psi_hxy = Slab::new(y_len);
    let mut psi_hzy = Slab::new(y_len);
    let mut psi_exz = Slab::new(z_len);
    let mut psi_eyz = Slab::new(z_len);
    let mut psi_hxz = Slab::new(z_len);
    let mut psi_hyz = Slab::new(z_len);

    let mut live: Vec<(usize, LivePlane)> = Vec::new();
    let all_monitors: Vec<&ResolvedMonitor> = domain
        .monitors
        .iter()
        .chain(std::iter::once(&domain.source_box))
        .collect();
    for (mi, mon) in all_monitors.iter().enumerate() {
        for plane in &mon.planes {
            live.push((
                mi,
                LivePlane {
                    data: PlaneData::new(plane, nl, delta),
                    scratch: PlaneScratch::new(plane.faces()),
                },
            ));
        }
    }

    let planes: Vec<&super::monitor::GridPlane> = all_monitors
        .iter()
        .flat_map(|m| m.planes.iter())
        .collect();

    let mut source_spectrum = vec![Complex64::new(0.0, 0.0); nl];
    let source_scale = domain.config.source.amplitude.abs() * dt / (EPS0 * delta.powi(3));
    let limit = 1e12 * source_scale;
    let mut peak_energy = 0.0f64;

    let cbx = &domain.cb_x;
    let cby = &domain.cb_y;
    let cbz = &domain.cb_z;
    let px = &domain.pml[0];
    let py = &domain.pml[1];
    let pz = &domain.pml[2];

    for step in 0..steps {
        // --- H update to time (step + 1/2) dt ---
        for i in 0..nx - 1 {
            for j in 0..ny - 1 {
                let row = (i * ny + j) * nz;
                for k in 0..nz - 1 {
                    let c = row + k;
                    hx[c] += dh * ((ey[c + 1] - ey[c]) - (ez[c + sy] - ez[c]));
                    hy[c] += dh * ((ez[c + sx] - ez[c]) - (ex[c + 1] - ex[c]));
                    hz[c] += dh * ((ex[c + sy] - ex[c]) - (ey[c + sx] - ey[c]));
                }
            }
        }
        // CPML H corrections, x stretch (half positions).
        for (lo, range) in [(true, 0..npml), (false, px.p_hi..nx - 1)] {
            for i in range {
                let (b, a) = (px.b_h[i], px.a_h[i]);
                let li = if lo { i } else { i - px.p_hi };
                for j in 0..ny - 1 {
                    let row = (i * ny + j) * nz;
                    let srow = (li * ny + j) * nz;
                    for k in 0..nz - 1 {
                        let c = row + k;
                        let s = srow + k;
                        let (pyx, pzx) = if lo {
                            (&mut psi_hyx.lo[s], &mut psi_hzx.lo[s])
                        } else {
                            (&mut psi_hyx.hi[s], &mut psi_hzx.hi[s])
                        };
                        *pyx = b * *pyx + a * (ez[c + sx] - ez[c]);
                        *pzx = b * *pzx + a * (ey[c + sx] - ey[c]);
                        hy[c] += dh * *pyx;
                        hz[c] -= dh * *pzx;
                    }
                }
            }
        }
        // CPML H corrections, y stretch.
        for (lo, range) in [(true, 0..npml), (false, py.p_hi..ny - 1)] {
            for j in range {
                let (b, a) = (py.b_h[j], py.a_h[j]);
                let lj = if lo { j } else { j - py.p_hi };
                for i in 0..nx - 1 {
                    let row = (i * ny + j) * nz;
                    let srow = (i * nlay + lj) * nz;
                    for k in 0..nz - 1 {
                        let c = row + k;
                        let s = srow + k;
                        let (pxy, pzy) = if lo {
                            (&mut psi_hxy.lo[s], &mut psi_hzy.lo[s])
                        } else {
                            (&mut psi_hxy.hi[s], &mut psi_hzy.hi[s])
                        };
                        *pxy = b * *pxy + a * (ez[c + sy] - ez[c]);
                        *pzy = b * *pzy + a * (ex[c + sy] - ex[c]);
                        hx[c] -= dh * *pxy;
                        hz[c] += dh * *pzy;
                    }
                }
            }
        }
        // CPML H corrections, z stretch.
        for (lo, range) in [(true, 0..npml), (false, pz.p_hi..nz - 1)] {
            for k in range {
                let (b, a) = (pz.b_h[k], pz.a_h[k]);
                let lk = if lo { k } else { k - pz.p_hi };
                for i in 0..nx - 1 {
                    for j in 0..ny - 1 {
                        let c = (i * ny + j) * nz + k;
                        let s = (i * ny + j) * nlay + lk;
                        let (pxz, pyz) = if lo {
                            (&mut psi_hxz.lo[s], &mut psi_hyz.lo[s])
                        } else {
                            (&mut psi_hxz.hi[s], &mut psi_hyz.hi[s])
                        };
                        *pxz = b * *pxz + a * (ey[c + 1] - ey[c]);
                        *pyz = b * *pyz + a * (ex[c + 1] - ex[c]);
                        hx[c] += dh * *pxz;
                        hy[c] -= dh * *pyz;
                    }
                }
            }
        }

        // --- E update to time (step + 1) dt ---
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                let row = (i * ny + j) * nz;
                for k in 1..nz - 1 {
                    let c = row + k;
                    ex[c] += cbx[c] * ((hz[c] - hz[c - sy]) - (hy[c] - hy[c - 1]));
                    ey[c] += cby[c] * ((hx[c] - hx[c - 1]) - (hz[c] - hz[c - sx]));
                    ez[c] += cbz[c] * ((hy[c] - hy[c - sx]) - (hx[c] - hx[c - sy]));
                }
            }
        }
        // CPML E corrections, x stretch (integer positions).
        for (lo, range) in [(true, 1..npml), (false, px.p_hi + 1..nx - 1)] {
            for i in range {
                let (b, a) = (px.b_e[i], px.a_e[i]);
                let li = if lo { i } else { i - px.p_hi };
                for j in 1..ny - 1 {
                    let row = (i * ny + j) * nz;
                    let srow = (li * ny + j) * nz;
                    for k in 1..nz - 1 {
                        let c = row + k;
                        let s = srow + k;
                        let (pyx, pzx) = if lo {
                            (&mut psi_eyx.lo[s], &mut psi_ezx.lo[s])
                        } else {
                            (&mut psi_eyx.hi[s], &mut psi_ezx.hi[s])
                        };
                        *pyx = b * *pyx + a * (hz[c] - hz[c - sx]);
                        *pzx = b * *pzx + a * (hy[c] - hy[c - sx]);
                        ey[c] -= cby[c] * *pyx;
                        ez[c] += cbz[c] * *pzx;
                    }
                }
            }
        }
        // CPML E corrections, y stretch.
        for (lo, range) in [(true, 1..npml), (false, py.p_hi + 1..ny - 1)] {
            for j in range {
                let (b, a) = (py.b_e[j], py.a_e[j]);
                let lj = if lo { j } else { j - py.p_hi };
                for i in 1..nx - 1 {
                    let row = (i * ny + j) * nz;
                    let srow = (i * nlay + lj) * nz;
                    for k in 1..nz - 1 {
                        let c = row + k;
                        let s = srow + k;
                        let (pxy, pzy) = if lo {
                            (&mut psi_exy.lo[s], &mut psi_ezy.lo[s])
                        } else {
                            (&mut psi_exy.hi[s], &mut psi_ezy.hi[s])
                        };
                        *pxy = b * *pxy + a * (hz[c] - hz[c - sy]);
                        *pzy = b * *pzy + a * (hx[c] - hx[c - sy]);
                        ex[c] += cbx[c] * *pxy;
                        ez[c] -= cbz[c] * *pzy;
                    }
                }
            }
        }
        // CPML E corrections, z stretch.
        for (lo, range) in [(true, 1..npml), (false, pz.p_hi + 1..nz - 1)] {
            for k in range {
                let (b, a) = (pz.b_e[k], pz.a_e[k]);
                let lk = if lo { k } else { k - pz.p_hi };
                for i in 1..nx - 1 {
                    for j in 1..ny - 1 {
                        let c = (i * ny + j) * nz + k;
                        let s = (i * ny + j) * nlay + lk;
                        let (pxz, pyz) = if lo {
                            (&mut psi_exz.lo[s], &mut psi_eyz.lo[s])
                        } else {
                            (&mut psi_exz.hi[s], &mut psi_eyz.hi[s])
                        };
                        *pxz = b * *pxz + a * (hy[c] - hy[c - 1]);
                        *pyz = b * *pyz + a * (hx[c] - hx[c - 1]);
                        ex[c] -= cbx[c] * *pxz;
                        ey[c] += cby[c] * *pyz;
                    }
                }
            }
        }

        // --- Soft current source at time (step + 1/2) dt ---
        let t_half = (step as f64 + 0.5) * dt;
        let idl = domain.config.source.current_moment(t_half);
        if idl != 0.0 {
            let scale = idl / (delta * delta);
            for node in &domain.source_nodes {
                match node.component {
                    Axis::X => ex[node.index] -= cbx[node.index] * node.weight * scale,
                    Axis::Y => ey[node.index] -= cby[node.index] * node.weight * scale,
                    Axis::Z => ez[node.index] -= cbz[node.index] * node.weight * scale,
                }
            }
        }

        // --- Running DFT: E at (step + 1) dt, H at (step + 1/2) dt ---
        let t_e = (step as f64 + 1.0) * dt;
        let mut pe = Vec::with_capacity(nl);
        let mut ph = Vec::with_capacity(nl);
        for (li, &w) in omegas.iter().enumerate() {
            pe.push(Complex64::from_polar(dt, -w * t_e));
            ph.push(Complex64::from_polar(dt, -w * t_half));
            source_spectrum[li] += Complex64::from_polar(idl * dt, -w * t_half);
        }
        for ((_, lp), plane) in live.iter_mut().zip(planes.iter()) {
            plane.collocate(
                [&ex, &ey, &ez],
                [&hx, &hy, &hz],
                [sx, sy, 1],
                &mut lp.scratch,
            );
            for li in 0..nl {
                lp.data.accumulate(li, &lp.scratch, pe[li], ph[li]);
            }
        }

        // --- Stability and energy audit ---
        if step % 50 == 49 || step + 1 == steps {
            let energy = field_energy(&ex, &ey, &ez, &hx, &hy, &hz);
            if !energy.is_finite() || max_abs(&ex).max(max_abs(&ey)).max(max_abs(&ez)) > limit {
                return Err(FdtdError::Unstable {
                    step,
                    max_e: max_abs(&ex).max(max_abs(&ey)).max(max_abs(&ez)),
                    limit,
                });
            }
            peak_energy = peak_energy.max(energy);
        }
    }

    let final_energy = field_energy(&ex, &ey, &ez, &hx, &hy, &hz);
    let converged = peak_energy > 0.0 && final_energy <= 1e-6 * peak_energy;

    // Assemble per-monitor outputs in config order; the source box is last.
    let mut grouped: Vec<MonitorData> = all_monitors
        .iter()
        .map(|m| MonitorData {
            name: m.name.clone(),
            is_box: m.is_box,
            wavelengths: wavelengths.clone(),
            faces: Vec::new(),
        })
        .collect();
    for (mi, lp) in live {
        grouped[mi].faces.push(lp.data);
    }
    let source_box = grouped.pop().expect("source box present");
    let source_box_power: Vec<f64> = (0..nl)
        .map(|li| source_box.faces.iter().map(|f| f.flux_at(li)).sum())
        .collect();

    Ok(RunOutput {
        monitors: grouped,
        source_box,
        source_box_power,
        wavelengths,
        source_spectrum,
        converged,
        peak_energy,
        final_energy,
        dt,
        steps,
    })
}

/// Energy-like norm used for convergence and stability checks; H is weighted
/// by the wave impedance so both terms share units.
fn field_energy(ex: &[f64], ey: &[f64], ez: &[f64], hx: &[f64], hy: &[f64], hz: &[f64]) -> f64 {
    let sum_sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    sum_sq(ex) + sum_sq(ey) + sum_sq(ez) + Z0 * Z0 * (sum_sq(hx) + sum_sq(hy) + sum_sq(hz))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}
