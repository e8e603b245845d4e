//! Complex polynomial root finding (Durand-Kerner iteration).
//!
//! Used by the peak-counting check, where the candidate peaks of the array
//! spectrum appear as near-double roots of a trigonometric polynomial on the
//! unit circle. Clustered double roots are resolved to ~sqrt(eps), which is
//! ample because every candidate is re-polished against the spectrum itself.

use crate::linalg::C64;

/// Evaluate `p(z)` with coefficients in ascending degree order.
pub fn eval(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// All roots of the polynomial with ascending coefficients `coeffs`.
/// Leading coefficients smaller than `1e-14 * max|c|` are trimmed.
pub fn roots(coeffs: &[C64]) -> Vec<C64> {
    let maxc = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if maxc == 0.0 {
        return Vec::new();
    }
    let mut trimmed: Vec<C64> = coeffs.to_vec();
    while let Some(last) = trimmed.last() {
        if last.norm() < 1e-14 * maxc && trimmed.len() > 1 {
            trimmed.pop();
        } else {
            break;
        }
    }
    let degree = trimmed.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = trimmed[degree];
    let monic: Vec<C64> = trimmed.iter().map(|c| c / lead).collect();

    // initial guesses spread on a circle whose radius tracks the root scale
    let radius = monic[0].norm().powf(1.0 / degree as f64).clamp(0.5, 2.0);
    let mut zs: Vec<C64> = (0..degree)
        .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4))
        .collect();

    for _ in 0..600 {
        let mut worst = 0.0f64;
        for i in 0..degree {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..degree {
                if i != j {
                    denom *= zs[i] - zs[j];
                }
            }
            if denom.norm() == 0.0 {
                // nudge coincident iterates apart
                zs[i] += C64::new(1e-8, 1e-8);
                continue;
            }
            let w = eval(&monic, zs[i]) / denom;
            zs[i] -= w;
            worst = worst.max(w.norm() / zs[i].norm().max(1.0));
        }
        if worst < 1e-14 {
            break;
        }
    }
    zs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn simple_roots_recovered() {
        // (z - 1)(z - 2j)(z + 0.5) = z^3 + (-0.5 - 2j) z^2 + (-0.5 - j) z + (0 + j)
        let r1 = c(1.0, 0.0);
        let r2 = c(0.0, 2.0);
        let r3 = c(-0.5, 0.0);
        let coeffs = vec![
            -r1 * r2 * r3,
            r1 * r2 + r1 * r3 + r2 * r3,
            -(r1 + r2 + r3),
            c(1.0, 0.0),
        ];
        let mut found = roots(&coeffs);
        found.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let mut expected = [r3, r2, r1];
        expected.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (f, e) in found.iter().zip(expected.iter()) {
            assert!((f - e).norm() < 1e-10, "{f} vs {e}");
        }
    }

    #[test]
    fn double_root_located_to_sqrt_eps() {
        // (z - 0.7)^2 (z + 1)
        let coeffs = vec![c(0.49, 0.0), c(-0.91, 0.0), c(-0.4, 0.0), c(1.0, 0.0)];
        let found = roots(&coeffs);
        let near = found.iter().filter(|z| (*z - c(0.7, 0.0)).norm() < 1e-6).count();
        assert_eq!(near, 2);
    }
}
