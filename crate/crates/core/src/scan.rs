//! Scan-and-polish maximization of smooth functions over an interval.
//!
//! The dual functions appearing in the certificates oscillate on the scale
//! of one array beamwidth, so a dense scan locates candidate lobes and a
//! golden-section refinement polishes each candidate.

use crate::array::Interval;

/// Golden-section maximization of `f` on `[lo, hi]`.
pub fn refine_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f(xm))
}

/// Global maximum of `f` over `interval`: dense scan at `num_points`
/// followed by golden-section polish around every local maximum that is
/// within `keep_frac` of the raw scan peak.
pub fn scan_max(
    f: &dyn Fn(f64) -> f64,
    interval: Interval,
    num_points: usize,
    polish_iters: usize,
) -> (f64, f64) {
    let n = num_points.max(3);
    let step = interval.length() / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|k| f(interval.lo + step * k as f64)).collect();
    let raw_peak = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let keep = raw_peak - 1e-3 * raw_peak.abs().max(1e-300);

    let mut best = (interval.lo, values[0]);
    let mut consider = |theta: f64, value: f64| {
        if value > best.1 {
            best = (theta, value);
        }
    };
    for k in 0..n {
        let is_local_max = (k == 0 || values[k] >= values[k - 1])
            && (k == n - 1 || values[k] >= values[k + 1]);
        if !is_local_max || values[k] < keep {
            continue;
        }
        let lo = interval.lo + step * (k.saturating_sub(1)) as f64;
        let hi = (interval.lo + step * (k + 1) as f64).min(interval.hi);
        let (theta, value) = refine_max(f, lo, hi, polish_iters);
        consider(theta, value);
        consider(interval.lo + step * k as f64, values[k]);
    }
    best
}

/// All polished local maxima of `f`, strongest first.
pub fn local_maxima(
    f: &dyn Fn(f64) -> f64,
    interval: Interval,
    num_points: usize,
    polish_iters: usize,
) -> Vec<(f64, f64)> {
    let n = num_points.max(3);
    let step = interval.length() / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|k| f(interval.lo + step * k as f64)).collect();
    let mut peaks = Vec::new();
    for k in 0..n {
        let is_local_max = (k == 0 || values[k] > values[k - 1])
            && (k == n - 1 || values[k] >= values[k + 1]);
        if !is_local_max {
            continue;
        }
        let lo = interval.lo + step * (k.saturating_sub(1)) as f64;
        let hi = (interval.lo + step * (k + 1) as f64).min(interval.hi);
        let (theta, value) = refine_max(f, lo, hi, polish_iters);
        peaks.push((theta, value));
    }
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_global_max_of_shifted_cosine() {
        let f = |x: f64| (x - 0.7).cos();
        let (x, v) = scan_max(&f, Interval::new(-3.0, 3.0), 101, 60);
        // position accuracy of a derivative-free search is ~sqrt(eps)
        assert!((x - 0.7).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn local_maxima_of_two_lobes() {
        let f = |x: f64| (-(x - 1.0).powi(2)).exp() + 0.5 * (-(x + 2.5).powi(2)).exp();
        let peaks = local_maxima(&f, Interval::new(-5.0, 5.0), 401, 50);
        assert!(peaks.len() >= 2);
        assert!((peaks[0].0 - 1.0).abs() < 1e-4);
        assert!((peaks[1].0 + 2.5).abs() < 1e-4);
    }
}
