//! Bessel functions J_n and K_n for small integer orders.
//!
//! J uses a power series for |x| <= 12 and Miller's normalized downward
//! recurrence above that. K uses the standard small-argument series for
//! K0/K1 (asymptotic expansion beyond x = 8) and stable upward recurrence
//! for higher orders. Orders above 10 are out of scope.

use super::NumericsError;

const MAX_ORDER: u32 = 10;
const MAX_ARG_J: f64 = 1e4;
const EULER_GAMMA: f64 = 0.5772156649015328606;

/// Which Bessel family a derivative refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J,
    K,
}

/// Bessel function of the first kind, J_n(x), for n <= 10 and 0 <= x <= 1e4.
pub fn bessel_j(order: u32, x: f64) -> Result<f64, NumericsError> {
    if order > MAX_ORDER {
        return Err(NumericsError::OrderTooLarge(order, MAX_ORDER));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(NumericsError::Domain(format!("bessel_j needs x >= 0, got {x}")));
    }
    if x > MAX_ARG_J {
        return Err(NumericsError::Domain(format!(
            "bessel_j supports x <= {MAX_ARG_J}, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(if order == 0 { 1.0 } else { 0.0 });
    }
    if x <= 12.0 {
        Ok(j_series(order, x))
    } else {
        Ok(j_miller(order, x))
    }
}

/// Modified Bessel function of the second kind, K_n(x), for n <= 10 and x > 0.
pub fn bessel_k(order: u32, x: f64) -> Result<f64, NumericsError> {
    if order > MAX_ORDER {
        return Err(NumericsError::OrderTooLarge(order, MAX_ORDER));
    }
    if !x.is_finite() || x <= 0.0 {
        return Err(NumericsError::Domain(format!("bessel_k needs x > 0, got {x}")));
    }
    let (k0, k1) = k01(x);
    Ok(match order {
        0 => k0,
        1 => k1,
        _ => {
            // K_{n+1} = K_{n-1} + (2n/x) K_n, stable upward.
            let mut km = k0;
            let mut k = k1;
            for n in 1..order {
                let next = km + (2.0 * n as f64 / x) * k;
                km = k;
                k = next;
                if !k.is_finite() {
                    break;
                }
            }
            k
        }
    })
}

/// Derivative of J_n or K_n via the three-term recurrence forms
/// J'_n = (J_{n-1} - J_{n+1}) / 2 and K'_n = -(K_{n-1} + K_{n+1}) / 2.
pub fn bessel_deriv(kind: BesselKind, order: u32, x: f64) -> Result<f64, NumericsError> {
    match kind {
        BesselKind::J => {
            if order == 0 {
                // J_{-1} = -J_1
                Ok(-bessel_j(1, x)?)
            } else {
                Ok((bessel_j(order - 1, x)? - bessel_j(order + 1, x)?) / 2.0)
            }
        }
        BesselKind::K => {
            if order == 0 {
                // K_{-1} = K_1
                Ok(-bessel_k(1, x)?)
            } else {
                Ok(-(bessel_k(order - 1, x)? + bessel_k(order + 1, x)?) / 2.0)
            }
        }
    }
}

fn j_series(order: u32, x: f64) -> f64 {
    let n = order as f64;
    // term_0 = (x/2)^n / n!
    let half = x / 2.0;
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (n + kf));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() + 1e-300 {
            break;
        }
    }
    sum
}

/// Miller's algorithm: unnormalized downward recurrence, normalized by
/// J_0 + 2*(J_2 + J_4 + ...) = 1.
fn j_miller(order: u32, x: f64) -> f64 {
    let start = {
        let m = x + 24.0 * x.cbrt() + 24.0;
        let mut m = m as usize + order as usize;
        if m % 2 == 1 {
            m += 1;
        }
        m
    };
    let mut j_next = 0.0_f64; // J_{k+2}
    let mut j = 1e-300_f64; // J_{k+1}, seeded at J_start
    let mut norm = if start % 2 == 0 { 2.0 * j } else { 0.0 };
    let mut result = 0.0_f64;
    for k in (0..start).rev() {
        let jk = (2.0 * (k as f64 + 1.0) / x) * j - j_next;
        j_next = j;
        j = jk; // now holds J_k
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * j;
        }
        if k as u32 == order {
            result = j;
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            j_next *= s;
            norm *= s;
            result *= s;
        }
    }
    norm += j; // J_0 term
    result / norm
}

fn i01_series(x: f64) -> (f64, f64) {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut i0 = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        i0 += term;
        if term < 1e-18 * i0 {
            break;
        }
    }
    // I1 = (x/2) * sum_k q^k / (k! (k+1)!)
    let mut term = 1.0;
    let mut s = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        s += term;
        if term < 1e-18 * s {
            break;
        }
    }
    (i0, (x / 2.0) * s)
}

fn k01(x: f64) -> (f64, f64) {
    if x <= 8.0 {
        let (i0, i1) = i01_series(x);
        let lg = (x / 2.0).ln();
        let q = x * x / 4.0;

        // K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k q^k / (k!)^2
        let mut term = 1.0;
        let mut h = 0.0;
        let mut s0 = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * kf);
            h += 1.0 / kf;
            s0 += term * h;
            if term * h < 1e-18 * (s0.abs() + 1.0) {
                break;
            }
        }
        let k0 = -(lg + EULER_GAMMA) * i0 + s0;

        // K1 = 1/x + ln(x/2) I1 - (x/4) sum_k [psi(k+1)+psi(k+2)] q^k / (k!(k+1)!)
        let mut term = 1.0;
        let mut hk = 0.0; // H_k
        let mut s1 = (-2.0 * EULER_GAMMA + 1.0) * term; // k = 0: psi(1)+psi(2)
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * (kf + 1.0));
            hk += 1.0 / kf;
            let psi_sum = -2.0 * EULER_GAMMA + 2.0 * hk + 1.0 / (kf + 1.0);
            s1 += term * psi_sum;
            if term * (psi_sum.abs() + 1.0) < 1e-18 * (s1.abs() + 1.0) {
                break;
            }
        }
        let k1 = 1.0 / x + lg * i1 - (x / 4.0) * s1;
        (k0, k1)
    } else {
        (k_asymptotic(0, x), k_asymptotic(1, x))
    }
}

fn k_asymptotic(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64) * (order as f64);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..40 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if term.abs() >= prev {
            break; // asymptotic series started diverging
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent plain power-series evaluation of J_n, 40 terms.
    fn j_series_oracle(n: u32, x: f64) -> f64 {
        let mut t = 1.0;
        for k in 1..=n {
            t *= x / 2.0 / k as f64;
        }
        let mut s = t;
        for k in 1..40 {
            t *= -(x * x / 4.0) / (k as f64 * (n as f64 + k as f64));
            s += t;
        }
        s
    }

    /// I_n by series, used only for the Wronskian cross-check of K.
    fn i_series_oracle(n: u32, x: f64) -> f64 {
        let mut t = 1.0;
        for k in 1..=n {
            t *= x / 2.0 / k as f64;
        }
        let mut s = t;
        for k in 1..60 {
            t *= (x * x / 4.0) / (k as f64 * (n as f64 + k as f64));
            s += t;
        }
        s
    }

    #[test]
    fn j_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn j_reference_values() {
        assert_abs_diff_eq!(bessel_j(0, 1.0).unwrap(), 0.7651976865579666, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_j(1, 1.0).unwrap(), 0.4400505857449335, epsilon = 1e-12);
    }

    #[test]
    fn j_first_zero_of_j0() {
        // Oracle: bisection on the independent series evaluation of J0.
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if j_series_oracle(0, lo) * j_series_oracle(0, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x_star = 0.5 * (lo + hi);
        assert_abs_diff_eq!(x_star, 2.404825, epsilon = 1e-5);
        assert_abs_diff_eq!(bessel_j(0, x_star).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn j_matches_series_oracle_across_switchover() {
        for n in 0..=10u32 {
            for &x in &[0.3, 1.7, 5.0, 9.5, 11.9, 12.1, 13.0] {
                let got = bessel_j(n, x).unwrap();
                assert_abs_diff_eq!(got, j_series_oracle(n, x), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn j_large_argument_sanity() {
        // |J_n(x)| <= sqrt(2/(pi x)) (1 + o(1)) for large x; just bound it.
        for &x in &[50.0, 400.0, 1e4] {
            let v = bessel_j(0, x).unwrap();
            assert!(v.is_finite() && v.abs() < 1.0, "J0({x}) = {v}");
        }
    }

    #[test]
    fn j_domain_errors() {
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(11, 1.0).is_err());
        assert!(bessel_j(0, 2e4).is_err());
    }

    #[test]
    fn k_reference_values() {
        assert_abs_diff_eq!(bessel_k(0, 1.0).unwrap(), 0.42102443824070834, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_k(1, 1.0).unwrap(), 0.6019072301972346, epsilon = 1e-12);
    }

    #[test]
    fn k_monotone_decreasing_in_x() {
        let a = bessel_k(0, 1.0).unwrap();
        let b = bessel_k(0, 2.0).unwrap();
        assert!(a > b && b > 0.0);
    }

    #[test]
    fn k_order_monotonicity() {
        for &x in &[0.05, 0.3, 1.0, 4.0, 9.0, 25.0] {
            assert!(bessel_k(1, x).unwrap() > bessel_k(0, x).unwrap());
        }
    }

    #[test]
    fn k_asymptotic_at_20() {
        // K0(x) ~ sqrt(pi/(2x)) e^{-x} (1 - 1/(8x) + 9/(2(8x)^2) - ...)
        let x = 20.0_f64;
        let asym = (std::f64::consts::PI / (2.0 * x)).sqrt()
            * (-x).exp()
            * (1.0 - 1.0 / (8.0 * x) + 9.0 / (2.0 * (8.0 * x).powi(2))
                - 225.0 / (6.0 * (8.0 * x).powi(3)));
        let got = bessel_k(0, x).unwrap();
        assert!((got - asym).abs() / asym.abs() < 1e-6);
    }

    #[test]
    fn k_wronskian_identity() {
        // I_n K_{n+1} + I_{n+1} K_n = 1/x
        for n in 0..=6u32 {
            for &x in &[0.2, 0.9, 2.5, 6.0, 7.9, 8.1, 15.0] {
                let lhs = i_series_oracle(n, x) * bessel_k(n + 1, x).unwrap()
                    + i_series_oracle(n + 1, x) * bessel_k(n, x).unwrap();
                assert_abs_diff_eq!(lhs, 1.0 / x, epsilon = 1e-9 * (1.0 / x));
            }
        }
    }

    #[test]
    fn k_domain_errors() {
        assert!(bessel_k(0, 0.0).is_err());
        assert!(bessel_k(0, -2.0).is_err());
        assert!(bessel_k(11, 1.0).is_err());
    }

    #[test]
    fn deriv_identities() {
        let x = 1.0;
        assert_abs_diff_eq!(
            bessel_deriv(BesselKind::J, 0, x).unwrap(),
            -bessel_j(1, x).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            bessel_deriv(BesselKind::K, 0, x).unwrap(),
            -bessel_k(1, x).unwrap(),
            epsilon = 1e-14
        );
        assert_eq!(bessel_deriv(BesselKind::J, 0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn deriv_matches_central_difference() {
        let h = 1e-6;
        for n in 0..=5u32 {
            for &x in &[0.8, 3.3, 14.0] {
                let d = bessel_deriv(BesselKind::J, n, x).unwrap();
                let fd = (bessel_j(n, x + h).unwrap() - bessel_j(n, x - h).unwrap()) / (2.0 * h);
                assert_abs_diff_eq!(d, fd, epsilon = 1e-6);
                let d = bessel_deriv(BesselKind::K, n, x).unwrap();
                let fd = (bessel_k(n, x + h).unwrap() - bessel_k(n, x - h).unwrap()) / (2.0 * h);
                assert_abs_diff_eq!(d, fd, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn turan_inequality() {
        // J_{n+1}(x) J_{n-1}(x) <= J_n(x)^2 on (0, first zero of J_n).
        let first_zero = [2.404825, 3.831706, 5.135622, 6.380162];
        for n in 1..=3u32 {
            let z = first_zero[n as usize];
            for i in 1..=100 {
                let x = z * i as f64 / 101.0;
                let jm = bessel_j(n - 1, x).unwrap();
                let j = bessel_j(n, x).unwrap();
                let jp = bessel_j(n + 1, x).unwrap();
                assert!(jp * jm <= j * j + 1e-15, "Turan fails at n={n}, x={x}");
            }
        }
    }
}
