//! Domain construction: permittivity rasterization with dielectric smoothing,
//! CPML profile tables, source coupling weights, and monitor resolution.

use super::monitor::{resolve_monitors, Axis, MonitorSpec, ResolvedMonitor};
use super::{FdtdError, SimulationConfig, CELL_BUDGET};
use crate::{EPS0, Z0};

/// One E-node injection point for the dipole current.
#[derive(Debug, Clone, Copy)]
pub struct SourceNode {
    pub component: Axis,
    pub index: usize,
    /// CIC weight times the orientation component.
    pub weight: f64,
}

/// Per-axis CPML profile tables. `b`/`a` follow the convolutional recursion
/// psi_n = b psi_{n-1} + a d, with kappa = 1 and zero alpha. `_e` entries are
/// sampled at integer grid positions, `_h` at half positions.
#[derive(Debug, Clone)]
pub struct PmlProfile {
    pub b_e: Vec<f64>,
    pub a_e: Vec<f64>,
    pub b_h: Vec<f64>,
    pub a_h: Vec<f64>,
    pub npml: usize,
    /// Integer grid line of the high-side PML interface.
    pub p_hi: usize,
}

/// A built simulation domain: rasterized material arrays plus everything the
/// engine needs to run.
pub struct FdtdDomain {
    pub config: SimulationConfig,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub delta: f64,
    pub dt: f64,
    /// Update coefficient dt / (eps * delta) at each E-component node.
    pub cb_x: Vec<f64>,
    pub cb_y: Vec<f64>,
    pub cb_z: Vec<f64>,
    pub pml: [PmlProfile; 3],
    pub source_nodes: Vec<SourceNode>,
    pub monitors: Vec<ResolvedMonitor>,
    /// Auto-installed closed box around the source, outward-oriented.
    pub source_box: ResolvedMonitor,
}

impl FdtdDomain {
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    pub fn build(config: &SimulationConfig) -> Result<Self, FdtdError> {
        config.validate()?;
        let delta = config.delta();
        let ext = config.extent();
        let nx = (ext[0] / delta).round() as usize + 1;
        let ny = (ext[1] / delta).round() as usize + 1;
        let nz = (ext[2] / delta).round() as usize + 1;
        let cells = nx * ny * nz;
        if cells > CELL_BUDGET {
            return Err(FdtdError::MemoryBudget {
                cells,
                budget: CELL_BUDGET,
            });
        }
        let npml = config.pml_cells as usize;
        for (n, name) in [(nx, "x"), (ny, "y"), (nz, "z")] {
            if n < 2 * npml + 8 {
                return Err(FdtdError::InvalidConfig(format!(
                    "domain too small along {name} for {npml} PML cells"
                )));
            }
        }
        check_structure_clear_of_pml(config, npml, delta, [nx, ny, nz])?;

        let (cb_x, cb_y, cb_z) = rasterize(config, nx, ny, nz, delta);
        let dt = config.dt();
        let pml = [
            PmlProfile::new(nx, npml, delta, dt),
            PmlProfile::new(ny, npml, delta, dt),
            PmlProfile::new(nz, npml, delta, dt),
        ];
        let source_nodes = source_nodes(config, [nx, ny, nz], delta)?;
        let wavelengths = config.record_wavelengths();
        let monitors = resolve_monitors(
            &config.monitors,
            [nx, ny, nz],
            npml,
            delta,
            &wavelengths,
        )?;
        let source_box = source_box_monitor(config, [nx, ny, nz], npml, delta, &wavelengths)?;

        Ok(FdtdDomain {
            config: config.clone(),
            nx,
            ny,
            nz,
            delta,
            dt,
            cb_x,
            cb_y,
            cb_z,
            pml,
            source_nodes,
            monitors,
            source_box,
        })
    }

    /// Relative permittivity at an Ex node, recovered from the coefficient.
    pub fn eps_rel_x(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dt / (self.cb_x[self.idx(i, j, k)] * self.delta * EPS0)
    }
}

fn check_structure_clear_of_pml(
    config: &SimulationConfig,
    npml: usize,
    delta: f64,
    dims: [usize; 3],
) -> Result<(), FdtdError> {
    let g = &config.geometry;
    if let (Some(d_nm), Some(h_um)) = (g.wire_diameter_nm, g.wire_height_um) {
        let ext = config.extent();
        let [cx, cy] = g
            .wire_center_xy_um
            .map(|c| [c[0] * 1e-6, c[1] * 1e-6])
            .unwrap_or([ext[0] / 2.0, ext[1] / 2.0]);
        let r = d_nm * 1e-9 / 2.0;
        let base = g.substrate_top_um.unwrap_or(0.0) * 1e-6;
        let top = base + h_um * 1e-6;
        let pml_m = npml as f64 * delta;
        let hi = |n: usize| (n - 1) as f64 * delta - pml_m;
        if cx - r < pml_m || cx + r > hi(dims[0]) || cy - r < pml_m || cy + r > hi(dims[1]) {
            return Err(FdtdError::InvalidConfig(
                "wire cross-section extends into the PML".into(),
            ));
        }
        if top > hi(dims[2]) || base < pml_m {
            return Err(FdtdError::InvalidConfig(
                "wire extends into the z PML".into(),
            ));
        }
    }
    Ok(())
}

/// Cell-centered relative permittivity by 3x3x3 subsampling (volume average),
/// then edge values as the mean of the four cells sharing each E edge.
fn rasterize(
    config: &SimulationConfig,
    nx: usize,
    ny: usize,
    nz: usize,
    delta: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = &config.geometry;
    let ext = config.extent();
    let dt = config.dt();
    let n_cells = nx * ny * nz;
    let cidx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;

    let uniform = g.wire_diameter_nm.is_none() && g.substrate_top_um.is_none();
    let mut cell_eps = vec![g.background_index.powi(2); n_cells];
    if !uniform {
        const SUB: usize = 3;
        let offsets: Vec<f64> = (0..SUB)
            .map(|s| (s as f64 + 0.5) / SUB as f64 - 0.5)
            .collect();
        for i in 0..nx {
            let xc = (i as f64 + 0.5) * delta;
            for j in 0..ny {
                let yc = (j as f64 + 0.5) * delta;
                for k in 0..nz {
                    let zc = (k as f64 + 0.5) * delta;
                    let mut acc = 0.0;
                    for &ox in &offsets {
                        for &oy in &offsets {
                            for &oz in &offsets {
                                acc += g.eps_rel_at(
                                    xc + ox * delta,
                                    yc + oy * delta,
                                    zc + oz * delta,
                                    ext,
                                );
                            }
                        }
                    }
                    cell_eps[cidx(i, j, k)] = acc / (SUB * SUB * SUB) as f64;
                }
            }
        }
    }

    // The edge at (i+1/2, j, k) for Ex borders cells (i, j-1..j, k-1..k);
    // out-of-range neighbors clamp to the edge cell.
    let cl = |v: usize| v.saturating_sub(1);
    let mut cb_x = vec![0.0; n_cells];
    let mut cb_y = vec![0.0; n_cells];
    let mut cb_z = vec![0.0; n_cells];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let at = |ii: usize, jj: usize, kk: usize| {
                    cell_eps[cidx(ii.min(nx - 1), jj.min(ny - 1), kk.min(nz - 1))]
                };
                let ex = 0.25
                    * (at(i, j, k) + at(i, cl(j), k) + at(i, j, cl(k)) + at(i, cl(j), cl(k)));
                let ey = 0.25
                    * (at(i, j, k) + at(cl(i), j, k) + at(i, j, cl(k)) + at(cl(i), j, cl(k)));
                let ez = 0.25
                    * (at(i, j, k) + at(cl(i), j, k) + at(i, cl(j), k) + at(cl(i), cl(j), k));
                let c = cidx(i, j, k);
                cb_x[c] = dt / (ex * EPS0 * delta);
                cb_y[c] = dt / (ey * EPS0 * delta);
                cb_z[c] = dt / (ez * EPS0 * delta);
            }
        }
    }
    (cb_x, cb_y, cb_z)
}

impl PmlProfile {
    /// Cubic-graded conductivity, sigma_max = 0.8 (m+1) / (Z0 delta), m = 3.
    fn new(n: usize, npml: usize, delta: f64, dt: f64) -> Self {
        let sigma_max = 0.8 * 4.0 / (Z0 * delta);
        let p_lo = npml as f64;
        let p_hi = (n - 1 - npml) as f64;
        let profile = |xi: f64| -> (f64, f64) {
            let depth = if xi < p_lo {
                (p_lo - xi) / npml as f64
            } else if xi > p_hi {
                (xi - p_hi) / npml as f64
            } else {
                0.0
            };
            let sigma = sigma_max * depth.powi(3);
            let b = (-sigma * dt / EPS0).exp();
            (b, b - 1.0)
        };
        let mut b_e = vec![1.0; n];
        let mut a_e = vec![0.0; n];
        let mut b_h = vec![1.0; n];
        let mut a_h = vec![0.0; n];
        for i in 0..n {
            let (b, a) = profile(i as f64);
            b_e[i] = b;
            a_e[i] = a;
            let (b, a) = profile(i as f64 + 0.5);
            b_h[i] = b;
            a_h[i] = a;
        }
        PmlProfile {
            b_e,
            a_e,
            b_h,
            a_h,
            npml,
            p_hi: n - 1 - npml,
        }
    }
}

/// Cloud-in-cell weights: the point dipole is split over the 8 nearest nodes
/// of each driven E-component lattice, preserving the total current moment
/// and keeping symmetric placements symmetric.
fn source_nodes(
    config: &SimulationConfig,
    dims: [usize; 3],
    delta: f64,
) -> Result<Vec<SourceNode>, FdtdError> {
    let src = &config.source;
    let pos: Vec<f64> = src.position_um.iter().map(|p| p * 1e-6).collect();
    let npml = config.pml_cells as usize;
    for a in 0..3 {
        let lo = (npml + 2) as f64 * delta;
        let hi = (dims[a] - 3 - npml) as f64 * delta;
        if pos[a] < lo || pos[a] > hi {
            return Err(FdtdError::InvalidConfig(format!(
                "source position along axis {a} is inside or too close to the PML"
            )));
        }
    }
    let mut nodes = Vec::new();
    let [ny, nz] = [dims[1], dims[2]];
    let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
    for (axis, comp) in [(0usize, Axis::X), (1, Axis::Y), (2, Axis::Z)] {
        let o = src.orientation[axis];
        if o == 0.0 {
            continue;
        }
        // Component lattice offset: half cell along its own axis.
        let mut u = [pos[0] / delta, pos[1] / delta, pos[2] / delta];
        u[axis] -= 0.5;
        let base = [u[0].floor(), u[1].floor(), u[2].floor()];
        let frac = [u[0] - base[0], u[1] - base[1], u[2] - base[2]];
        for di in 0..2 {
            for dj in 0..2 {
                for dk in 0..2 {
                    let w = [
                        if di == 0 { 1.0 - frac[0] } else { frac[0] },
                        if dj == 0 { 1.0 - frac[1] } else { frac[1] },
                        if dk == 0 { 1.0 - frac[2] } else { frac[2] },
                    ];
                    let weight = o * w[0] * w[1] * w[2];
                    if weight.abs() < 1e-15 {
                        continue;
                    }
                    nodes.push(SourceNode {
                        component: comp,
                        index: idx(
                            base[0] as usize + di,
                            base[1] as usize + dj,
                            base[2] as usize + dk,
                        ),
                        weight,
                    });
                }
            }
        }
    }
    Ok(nodes)
}

/// Closed outward box centered on the source for total-power bookkeeping.
fn source_box_monitor(
    config: &SimulationConfig,
    dims: [usize; 3],
    npml: usize,
    delta: f64,
    wavelengths: &[f64],
) -> Result<ResolvedMonitor, FdtdError> {
    let pos = config.source.position_um;
    let half_cells = 8.0;
    let h = half_cells * delta * 1e6;
    let mut min_um = [0.0; 3];
    let mut max_um = [0.0; 3];
    for a in 0..3 {
        let lo_lim = (npml + 2) as f64 * delta * 1e6;
        let hi_lim = ((dims[a] - 1 - npml) as f64 * delta - 2.0 * delta) * 1e6;
        min_um[a] = (pos[a] - h).max(lo_lim);
        max_um[a] = (pos[a] + h).min(hi_lim);
    }
    let spec = MonitorSpec::Box {
        name: "__source_box".into(),
        min_um,
        max_um,
    };
    let mut resolved = resolve_monitors(&[spec], dims, npml, delta, wavelengths)?;
    Ok(resolved.pop().expect("source box resolves"))
}
