//! Analytic field evaluation and power normalization for guided modes.

use super::{GuidedMode, RadialSample, PROFILE_SAMPLES};
use crate::numerics::{bessel_deriv, bessel_j, bessel_k, BesselKind, QuadratureGrid};
use crate::{C0, EPS0, MU0};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex field components in cylindrical coordinates at one point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldSextet {
    pub e_r: Complex64,
    pub e_phi: Complex64,
    pub e_z: Complex64,
    pub h_r: Complex64,
    pub h_phi: Complex64,
    pub h_z: Complex64,
}

impl FieldSextet {
    pub const ZERO: FieldSextet = FieldSextet {
        e_r: Complex64::new(0.0, 0.0),
        e_phi: Complex64::new(0.0, 0.0),
        e_z: Complex64::new(0.0, 0.0),
        h_r: Complex64::new(0.0, 0.0),
        h_phi: Complex64::new(0.0, 0.0),
        h_z: Complex64::new(0.0, 0.0),
    };

    /// Axial Poynting density S_z = Re(E_r H_phi* - E_phi H_r*) / 2.
    pub fn poynting_z(&self) -> f64 {
        0.5 * (self.e_r * self.h_phi.conj() - self.e_phi * self.h_r.conj()).re
    }

    /// |E|^2 over all three components.
    pub fn e_intensity(&self) -> f64 {
        self.e_r.norm_sqr() + self.e_phi.norm_sqr() + self.e_z.norm_sqr()
    }
}

impl GuidedMode {
    /// Evaluates the analytic mode fields at radius `r` and azimuth `phi`.
    ///
    /// J-type interior, K-type exterior; fields carry the e^{i(wt - beta z)}
    /// convention with the z-dependence stripped.
    pub fn profile(&self, r: f64, phi: f64) -> FieldSextet {
        let m = self.azimuthal_order;
        let mf = m as f64;
        let env = self.radial_envelope(r);
        let (c, s) = ((mf * phi).cos(), (mf * phi).sin());
        FieldSextet {
            e_r: env.e_r * c,
            e_phi: env.e_phi * s,
            e_z: env.e_z * c,
            h_r: env.h_r * s,
            h_phi: env.h_phi * c,
            h_z: env.h_z * s,
        }
    }

    /// Radial envelopes with the cos/sin azimuthal factors stripped.
    pub(crate) fn radial_envelope(&self, r: f64) -> FieldSextet {
        let spec = &self.spec;
        let a = spec.radius();
        let m = self.azimuthal_order;
        let mf = m as f64;
        let k0 = spec.k0();
        let beta = self.beta();
        let omega = k0 * C0;
        let jneg = Complex64::new(0.0, -1.0);

        let q = self.n_eff_excess() * (2.0 * spec.clad_index + self.n_eff_excess());
        let kappa =
            k0 * (spec.core_index.powi(2) - spec.clad_index.powi(2) - q).max(0.0).sqrt();
        let gamma = k0 * q.max(0.0).sqrt();
        let u = kappa * a;
        let w = gamma * a;

        // Amplitude of Ez/Hz radial function and its derivative, plus the
        // signed transverse wavenumber squared and local permittivity.
        let (rad, drad, s_signed, eps) = if r <= a {
            let rr = (bessel_j(m, kappa * r)).unwrap_or(0.0);
            let dr = kappa * bessel_deriv(BesselKind::J, m, kappa * r).unwrap_or(0.0);
            (rr, dr, kappa * kappa, EPS0 * spec.core_index.powi(2))
        } else {
            // Continuity scale for the exterior K-type solution.
            let q = bessel_j(m, u).unwrap_or(0.0) / bessel_k(m, w).unwrap_or(1.0);
            let rr = q * bessel_k(m, gamma * r).unwrap_or(0.0);
            let dr = q * gamma * bessel_deriv(BesselKind::K, m, gamma * r).unwrap_or(0.0);
            (rr, dr, -gamma * gamma, EPS0 * spec.clad_index.powi(2))
        };

        let a_e = self.amp_e;
        let b_h = self.amp_h;
        // m/r * R(r): finite at the axis since R ~ r^m; clamp the division.
        let m_over_r_rad = if m == 0 {
            0.0
        } else if r <= a {
            let r_safe = r.max(1e-9 * a);
            mf / r_safe * bessel_j(m, kappa * r_safe).unwrap_or(0.0)
        } else {
            mf / r * rad
        };

        let inv_s = 1.0 / s_signed;
        let e_r = jneg * inv_s * (beta * a_e * drad + omega * MU0 * b_h * m_over_r_rad);
        let e_phi = -jneg * inv_s * (beta * a_e * m_over_r_rad + omega * MU0 * b_h * drad);
        let h_r = jneg * inv_s * (beta * b_h * drad + omega * eps * a_e * m_over_r_rad);
        let h_phi = jneg * inv_s * (beta * b_h * m_over_r_rad + omega * eps * a_e * drad);

        FieldSextet {
            e_r,
            e_phi,
            e_z: Complex64::new(a_e * rad, 0.0),
            h_r,
            h_phi,
            h_z: Complex64::new(b_h * rad, 0.0),
        }
    }

    /// Cartesian field components at (x, y) relative to the wire axis, with
    /// the mode pattern rotated by `orientation` radians. `backward` flips
    /// the propagation direction (transverse H and axial E change sign).
    pub fn cartesian_fields(
        &self,
        x: f64,
        y: f64,
        orientation: f64,
        backward: bool,
    ) -> [Complex64; 6] {
        let r = (x * x + y * y).sqrt();
        let phi_lab = y.atan2(x);
        let phi = phi_lab - orientation;
        let f = self.profile(r, phi);
        let (cp, sp) = (phi.cos(), phi.sin());
        // Polar -> Cartesian in the rotated frame.
        let ex_r = f.e_r * cp - f.e_phi * sp;
        let ey_r = f.e_r * sp + f.e_phi * cp;
        let hx_r = f.h_r * cp - f.h_phi * sp;
        let hy_r = f.h_r * sp + f.h_phi * cp;
        // Rotate vectors back to the lab frame.
        let (co, so) = (orientation.cos(), orientation.sin());
        let ex = ex_r * co - ey_r * so;
        let ey = ex_r * so + ey_r * co;
        let mut hx = hx_r * co - hy_r * so;
        let mut hy = hx_r * so + hy_r * co;
        let mut ez = f.e_z;
        let hz = f.h_z;
        if backward {
            hx = -hx;
            hy = -hy;
            ez = -ez;
        }
        [ex, ey, ez, hx, hy, hz]
    }

    /// Power carried through the full cross-section (W).
    pub(crate) fn cross_section_power(&self) -> f64 {
        let a = self.spec.radius();
        let q = self.n_eff_excess() * (2.0 * self.spec.clad_index + self.n_eff_excess());
        let gamma = self.spec.k0() * q.max(1e-300).sqrt();
        let tail = (30.0 / gamma).min(1e6 * a);
        let phi_factor = if self.azimuthal_order == 0 {
            2.0 * std::f64::consts::PI
        } else {
            std::f64::consts::PI
        };
        // With the fixed cos/sin azimuthal structure the phi integral of S_z
        // is exactly pi (or 2 pi for m = 0) times the radial envelope product.
        let radial = |grid: &QuadratureGrid| -> f64 {
            grid.nodes()
                .iter()
                .zip(grid.weights())
                .map(|(&r, &wt)| {
                    let env = self.radial_envelope(r);
                    let sz = 0.5
                        * ((env.e_r * env.h_phi.conj()).re - (env.e_phi * env.h_r.conj()).re);
                    wt * sz * r
                })
                .sum()
        };
        let inner = QuadratureGrid::gauss_legendre(128, 0.0, a).unwrap();
        let outer = QuadratureGrid::gauss_legendre(256, a, a + tail).unwrap();
        phi_factor * (radial(&inner) + radial(&outer))
    }

    pub(crate) fn sample_profile(&self) -> Vec<RadialSample> {
        let r_max = 3.0 * self.spec.diameter;
        (0..PROFILE_SAMPLES)
            .map(|i| {
                let r = r_max * i as f64 / (PROFILE_SAMPLES - 1) as f64;
                RadialSample {
                    r,
                    fields: self.radial_envelope(r),
                }
            })
            .collect()
    }

    /// Simpson integration of the axial Poynting flux of the stored profile.
    pub fn stored_profile_power(&self) -> f64 {
        let phi_factor = if self.azimuthal_order == 0 {
            2.0 * std::f64::consts::PI
        } else {
            std::f64::consts::PI
        };
        let f: Vec<f64> = self
            .radial_profile
            .iter()
            .map(|s| {
                let env = &s.fields;
                let sz =
                    0.5 * ((env.e_r * env.h_phi.conj()).re - (env.e_phi * env.h_r.conj()).re);
                sz * s.r
            })
            .collect();
        let n = f.len();
        let h = self.radial_profile[1].r - self.radial_profile[0].r;
        // Composite Simpson; trailing interval (even sample count) by trapezoid.
        let mut acc = 0.0;
        let pairs = (n - 1) / 2;
        for p in 0..pairs {
            let i = 2 * p;
            acc += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
        }
        if (n - 1) % 2 == 1 {
            acc += h / 2.0 * (f[n - 2] + f[n - 1]);
        }
        phi_factor * acc
    }

    /// Writes the sampled profile as CSV over an (r, phi) grid: radius,
    /// azimuth, then real/imaginary parts of all six components.
    pub fn write_profile_csv<W: std::io::Write>(
        &self,
        out: W,
        n_phi: usize,
    ) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "r_m", "phi_rad", "er_re", "er_im", "ephi_re", "ephi_im", "ez_re", "ez_im", "hr_re",
            "hr_im", "hphi_re", "hphi_im", "hz_re", "hz_im",
        ])?;
        let n_phi = n_phi.max(1);
        for ip in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * ip as f64 / n_phi as f64;
            for s in &self.radial_profile {
                let f = self.profile(s.r, phi);
                wtr.write_record(
                    [
                        s.r,
                        phi,
                        f.e_r.re,
                        f.e_r.im,
                        f.e_phi.re,
                        f.e_phi.im,
                        f.e_z.re,
                        f.e_z.im,
                        f.h_r.re,
                        f.h_r.im,
                        f.h_phi.re,
                        f.h_phi.im,
                        f.h_z.re,
                        f.h_z.im,
                    ]
                    .map(|v| format!("{v:e}")),
                )?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn family_label(&self) -> String {
        format!(
            "{}{}{}",
            self.family, self.azimuthal_order, self.radial_index
        )
    }
}
