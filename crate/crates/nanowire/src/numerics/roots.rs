//! Sign-change root bracketing on an interval: uniform scan plus bisection.

use super::NumericsError;

/// A finite open interval with lo < hi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, NumericsError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(NumericsError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

const BISECTION_TOL: f64 = 1e-10;

/// Finds all sign-change roots of `f` on the interval by a uniform scan with
/// `scan_samples` cells followed by bisection to 1e-10, sorted ascending.
///
/// A scan cell that still shows more than one sign change when subdivided
/// 16-fold is reported as ambiguous, signaling the caller to refine.
pub fn find_roots<F: Fn(f64) -> f64>(
    f: F,
    interval: &Interval,
    max_roots: usize,
    scan_samples: usize,
) -> Result<Vec<f64>, NumericsError> {
    let n = scan_samples.max(2);
    let step = interval.width() / n as f64;
    let mut roots = Vec::new();
    let mut x_prev = interval.lo;
    let mut f_prev = f(x_prev);
    for i in 1..=n {
        let x = if i == n { interval.hi } else { interval.lo + i as f64 * step };
        let fx = f(x);
        if f_prev == 0.0 {
            push_root(&mut roots, x_prev, max_roots)?;
        } else if f_prev * fx < 0.0 {
            // Guard against multiple roots hiding inside one scan cell.
            if sign_changes(&f, x_prev, x, 16) > 1 {
                return Err(NumericsError::AmbiguousRoots(0.5 * (x_prev + x)));
            }
            let root = bisect(&f, x_prev, x);
            push_root(&mut roots, root, max_roots)?;
        }
        x_prev = x;
        f_prev = fx;
    }
    if f_prev == 0.0 {
        push_root(&mut roots, x_prev, max_roots)?;
    }
    Ok(roots)
}

fn push_root(roots: &mut Vec<f64>, root: f64, max_roots: usize) -> Result<(), NumericsError> {
    roots.push(root);
    if roots.len() > max_roots {
        return Err(NumericsError::TooManyRoots { max: max_roots });
    }
    Ok(())
}

fn sign_changes<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> usize {
    let mut count = 0;
    let mut prev = f(lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if prev * v < 0.0 {
            count += 1;
        }
        if v != 0.0 {
            prev = v;
        }
    }
    count
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > BISECTION_TOL {
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
