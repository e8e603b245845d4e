//! Consistency tests for the continuous estimator.
//!
//! A true scenario is consistent when the noiseless estimate reproduces the
//! true positions exactly, which holds iff the dual bound
//!
//! ```text
//! ||a^H(theta) (P_perp D diag(Gamma beta) - A (A^H A)^{-1}) Xi^{1/2}||_2 <= 1
//! ```
//!
//! holds for every `theta`. Support points attain the bound exactly by
//! construction. For the half-wavelength ULA with two sources separated by
//! `delta/m`, the large-`m` limit of the bound is expressed through the
//! kernels `F_a(x) = (e^{jx} - 1)/(jx)`, `G_a = F_a'`, `H_a = -G_a'`, and a
//! numerical search over the scaled separation `delta` locates the
//! resolution threshold.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{Interval, Manifold, SparseRepresentation};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, inverse, pivoted_cholesky, solve_real, vec_norm, C64};
use crate::perturbation::{build_expansion, PerturbationExpansion};
use crate::scan::scan_max;

/// Outcome of a finite-`m` consistency scan.
#[derive(Debug, Clone)]
pub struct ConsistencyVerdict {
    pub consistent: bool,
    /// Position where the left side of the bound is largest.
    pub worst_theta: f64,
    pub worst_value: f64,
    /// `1 - worst_value`; support points sit at 0 by construction.
    pub margin: f64,
}

/// Equality tolerance at support points, where the bound is active.
pub const SUPPORT_EQUALITY_TOL: f64 = 1e-6;

/// The matrix `M = (P_perp D diag(Gamma beta) - A (A^H A)^{-1}) Xi^{1/2}`
/// whose rowspace norm is the consistency bound.
fn consistency_matrix(exp: &PerturbationExpansion) -> Array2<C64> {
    let n = exp.order();
    let m = exp.a.nrows();
    // D * diag(gamma_i beta_i)
    let mut dd0 = Array2::<C64>::zeros((m, n));
    for i in 0..n {
        let w = exp.gamma[i] * exp.beta[i];
        for r in 0..m {
            dd0[[r, i]] = exp.d[[r, i]] * w;
        }
    }
    let p_dd0 = exp.project_perp(&dd0);
    let a_pinv = exp.a.dot(&exp.gram_inv); // A (A^H A)^{-1}
    let diff = &p_dd0 - &a_pinv;
    diff.dot(&exp.xi_sqrt())
}

/// Left side of the consistency bound as a function of `theta`.
pub fn consistency_lhs<'a>(
    manifold: &'a dyn Manifold,
    exp: &PerturbationExpansion,
) -> impl Fn(f64) -> f64 + 'a {
    let mat = consistency_matrix(exp);
    let m = manifold.num_sensors();
    move |theta: f64| {
        let mut buf = vec![C64::new(0.0, 0.0); m];
        manifold.fill_steering(theta, &mut buf);
        let mut total = 0.0;
        for j in 0..mat.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..m {
                acc += buf[r].conj() * mat[[r, j]];
            }
            total += acc.norm_sqr();
        }
        total.sqrt()
    }
}

/// Scan the consistency bound over the whole domain.
pub fn check_consistency(
    manifold: &dyn Manifold,
    truth: &SparseRepresentation,
    scan_fineness: f64,
) -> Result<ConsistencyVerdict> {
    let exp = build_expansion(manifold, truth)?;
    let dom = manifold.domain();
    let fineness = if scan_fineness > 0.0 {
        scan_fineness
    } else {
        std::f64::consts::PI / (64.0 * manifold.num_sensors() as f64)
    };
    let points = ((dom.length() / (2.0 * fineness)).ceil() as usize + 1).max(128);
    let f = consistency_lhs(manifold, &exp);
    let (worst_theta, worst_value) = scan_max(&f, dom, points, 60);
    Ok(ConsistencyVerdict {
        consistent: worst_value <= 1.0 + SUPPORT_EQUALITY_TOL,
        worst_theta,
        worst_value,
        margin: 1.0 - worst_value,
    })
}

/// Values of the bound on a uniform grid, for margin-curve output.
pub fn consistency_curve(
    manifold: &dyn Manifold,
    truth: &SparseRepresentation,
    num_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let exp = build_expansion(manifold, truth)?;
    let dom = manifold.domain();
    let f = consistency_lhs(manifold, &exp);
    let n = num_points.max(2);
    Ok((0..n)
        .map(|k| {
            let theta = dom.lo + dom.length() * k as f64 / (n - 1) as f64;
            (theta, f(theta))
        })
        .collect())
}

/// `F_a(x) = (e^{jx} - 1)/(jx)`, `G_a = F_a'`, `H_a = -G_a'`, evaluated with
/// a series fallback near zero where the closed forms cancel.
pub fn kernel_f(x: f64) -> C64 {
    if x.abs() < 0.1 {
        series(x, 0)
    } else {
        let e = C64::from_polar(1.0, x);
        (e - 1.0) / C64::new(0.0, x)
    }
}

pub fn kernel_g(x: f64) -> C64 {
    if x.abs() < 0.1 {
        series(x, 1)
    } else {
        let e = C64::from_polar(1.0, x);
        let jx = C64::new(0.0, x);
        // d/dx [(e^{jx}-1)/(jx)] = -j [e^{jx}(jx - 1) + 1] / x^2
        C64::new(0.0, -1.0) * (e * (jx - 1.0) + 1.0) / (x * x)
    }
}

pub fn kernel_h(x: f64) -> C64 {
    if x.abs() < 0.1 {
        series(x, 2)
    } else {
        let e = C64::from_polar(1.0, x);
        let jx = C64::new(0.0, x);
        // H = -G' = -j e^{jx}/x - 2j [e^{jx}(jx-1) + 1]/x^3
        C64::new(0.0, -1.0) * e / x - C64::new(0.0, 2.0) * (e * (jx - 1.0) + 1.0) / (x * x * x)
    }
}

/// Taylor series of `F_a` (`order` = 0), `G_a` (1), or `H_a` (2):
/// `F_a(x) = sum_k (jx)^k / (k+1)!`.
fn series(x: f64, order: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let j = C64::new(0.0, 1.0);
    let mut jk = C64::new(1.0, 0.0); // j^k
    let mut factorial = 1.0f64; // (k+1)!
    let mut xpow;
    for k in 0..16usize {
        factorial *= (k + 1) as f64;
        let term = match order {
            0 => {
                xpow = x.powi(k as i32);
                jk * xpow / factorial
            }
            1 => {
                if k == 0 {
                    jk * 0.0
                } else {
                    xpow = x.powi(k as i32 - 1);
                    jk * (k as f64) * xpow / factorial
                }
            }
            _ => {
                if k < 2 {
                    jk * 0.0
                } else {
                    xpow = x.powi(k as i32 - 2);
                    -jk * (k * (k - 1)) as f64 * xpow / factorial
                }
            }
        };
        acc += term;
        jk *= j;
    }
    acc
}

/// The 2x2 asymptotic kernel matrices for scaled separation `delta`.
#[derive(Debug, Clone)]
pub struct AsymptoticKernels {
    pub delta: f64,
    pub f_mat: Array2<C64>,
    pub g_mat: Array2<C64>,
    pub h_mat: Array2<C64>,
}

pub fn asymptotic_kernels(delta: f64) -> AsymptoticKernels {
    let f_mat = ndarray::array![
        [kernel_f(0.0), kernel_f(delta)],
        [kernel_f(-delta), kernel_f(0.0)]
    ];
    let g_mat = ndarray::array![
        [kernel_g(0.0), kernel_g(delta)],
        [kernel_g(-delta), kernel_g(0.0)]
    ];
    let h_mat = ndarray::array![
        [kernel_h(0.0), kernel_h(delta)],
        [kernel_h(-delta), kernel_h(0.0)]
    ];
    AsymptoticKernels {
        delta,
        f_mat,
        g_mat,
        h_mat,
    }
}

/// Scan configuration for the asymptotic bound.
#[derive(Debug, Clone)]
pub struct DprimeScan {
    pub half_range: f64,
    pub points: usize,
}

impl Default for DprimeScan {
    fn default() -> Self {
        Self {
            half_range: 8.0 * std::f64::consts::PI,
            points: 4096,
        }
    }
}

/// Worst value of the asymptotic consistency bound over the offset scan.
/// Values at the two support offsets equal 1 by construction.
pub fn asymptotic_consistency_margin(
    delta: f64,
    xi: &Array2<C64>,
    scan: &DprimeScan,
) -> Result<f64> {
    let kernels = asymptotic_kernels(delta);
    let f_inv = inverse(&kernels.f_mat).map_err(|_| Error::SingularInteraction {
        cond: f64::INFINITY,
    })?;

    // R_a = Re[(H - G^H F^{-1} G) (.) Xi^T]
    let schur = &kernels.h_mat - &adjoint(&kernels.g_mat).dot(&f_inv).dot(&kernels.g_mat);
    let mut r_a = Array2::<f64>::zeros((2, 2));
    for i in 0..2 {
        for k in 0..2 {
            r_a[[i, k]] = (schur[[i, k]] * xi[[k, i]]).re;
        }
    }
    for i in 0..2 {
        for k in 0..i {
            let s = 0.5 * (r_a[[i, k]] + r_a[[k, i]]);
            r_a[[i, k]] = s;
            r_a[[k, i]] = s;
        }
    }

    // beta_a = R_a^{-1} Re[stack_i(g_{a,i}^H F^{-1} xi_i)]
    let mut stack = Array2::<f64>::zeros((2, 1));
    for i in 0..2 {
        // g_{a,i} is column i of G; xi_i is column i of Xi
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..2 {
            for q in 0..2 {
                acc += kernels.g_mat[[p, i]].conj() * f_inv[[p, q]] * xi[[q, i]];
            }
        }
        stack[[i, 0]] = acc.re;
    }
    let beta_a = solve_real(&r_a, &stack).map_err(|_| Error::SingularInteraction {
        cond: f64::INFINITY,
    })?;

    let xi_sqrt = pivoted_cholesky(xi, 1e-14);
    let g_f_inv_g = f_inv.dot(&kernels.g_mat); // F^{-1} G

    let lhs = |s: f64| -> f64 {
        let f_vec = [kernel_f(-s), kernel_f(delta - s)];
        let g_vec = [kernel_g(-s), kernel_g(delta - s)];
        // row = (g - f F^{-1} G) D_a - f F^{-1}
        let mut row = [C64::new(0.0, 0.0); 2];
        for k in 0..2 {
            let mut fg = C64::new(0.0, 0.0);
            let mut ff = C64::new(0.0, 0.0);
            for p in 0..2 {
                fg += f_vec[p] * g_f_inv_g[[p, k]];
                ff += f_vec[p] * f_inv[[p, k]];
            }
            row[k] = (g_vec[k] - fg) * beta_a[[k, 0]] - ff;
        }
        let mut out = vec![C64::new(0.0, 0.0); xi_sqrt.ncols()];
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                acc += row[k] * xi_sqrt[[k, j]];
            }
            *o = acc;
        }
        vec_norm(&out)
    };

    let interval = Interval::new(-scan.half_range, scan.half_range + delta);
    let (_, worst) = scan_max(&lhs, interval, scan.points, 50);
    Ok(worst)
}

/// Proposition-style pass/fail of the asymptotic bound.
pub fn asymptotic_consistency_test(delta: f64, xi: &Array2<C64>, scan: &DprimeScan) -> bool {
    match asymptotic_consistency_margin(delta, xi, scan) {
        Ok(worst) => worst <= 1.0 + SUPPORT_EQUALITY_TOL,
        Err(_) => false,
    }
}

/// Reproducible sampler of unit-diagonal Hermitian PSD matrices
/// `Xi = U U^H` with unit-norm rows `U` (2 x snapshots).
#[derive(Debug, Clone)]
pub struct XiSampler {
    pub seed: u64,
    pub snapshots: usize,
    pub count: usize,
}

impl Default for XiSampler {
    fn default() -> Self {
        Self {
            seed: 7,
            snapshots: 1,
            count: 200,
        }
    }
}

impl XiSampler {
    pub fn draw_all(&self) -> Vec<Array2<C64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = StandardNormal;
        (0..self.count)
            .map(|_| {
                let mut u = Array2::<C64>::zeros((2, self.snapshots));
                for i in 0..2 {
                    let mut norm_sq = 0.0;
                    for tt in 0..self.snapshots {
                        let re: f64 = normal.sample(&mut rng);
                        let im: f64 = normal.sample(&mut rng);
                        u[[i, tt]] = C64::new(re, im);
                        norm_sq += u[[i, tt]].norm_sqr();
                    }
                    let norm = norm_sq.sqrt();
                    for tt in 0..self.snapshots {
                        u[[i, tt]] /= norm;
                    }
                }
                u.dot(&adjoint(&u))
            })
            .collect()
    }
}

/// Record of one bisection step of the threshold search.
#[derive(Debug, Clone)]
pub struct ThresholdStep {
    pub delta: f64,
    pub passed: bool,
    pub worst_margin: f64,
}

/// Bisect the scaled separation `delta` for the smallest value at which the
/// asymptotic bound passes for every sampled `Xi`. Also verifies empirical
/// monotonicity on the probed ladder (a pass at `delta` should persist at
/// larger separations for the same samples).
pub fn resolution_threshold_search(
    sampler: &XiSampler,
    tol: f64,
    scan: &DprimeScan,
) -> Result<(f64, Vec<ThresholdStep>)> {
    let xis = sampler.draw_all();
    let evaluate = |delta: f64| -> ThresholdStep {
        let mut worst = f64::NEG_INFINITY;
        let mut passed = true;
        for xi in &xis {
            match asymptotic_consistency_margin(delta, xi, scan) {
                Ok(value) => {
                    worst = worst.max(value);
                    if value > 1.0 + SUPPORT_EQUALITY_TOL {
                        passed = false;
                    }
                }
                Err(_) => {
                    passed = false;
                    worst = f64::INFINITY;
                }
            }
        }
        ThresholdStep {
            delta,
            passed,
            worst_margin: worst - 1.0,
        }
    };

    let pi = std::f64::consts::PI;
    let mut lo = 1.2 * pi;
    let mut hi = 4.0 * pi;
    let mut steps = Vec::new();
    let lo_step = evaluate(lo);
    let hi_step = evaluate(hi);
    if lo_step.passed {
        return Err(Error::InvalidConfig(format!(
            "threshold bracket broken: delta = {lo:.3} already passes"
        )));
    }
    if !hi_step.passed {
        return Err(Error::InvalidConfig(format!(
            "threshold bracket broken: delta = {hi:.3} still fails"
        )));
    }
    steps.push(lo_step);
    steps.push(hi_step);
    while hi - lo > tol.max(1e-4) {
        let mid = 0.5 * (lo + hi);
        let step = evaluate(mid);
        if step.passed {
            hi = mid;
        } else {
            lo = mid;
        }
        steps.push(step);
    }
    Ok((hi, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{AngleUnit, UlaElectrical};
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ones_xi() -> Array2<C64> {
        array![[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(1.0, 0.0)]]
    }

    #[test]
    fn kernel_limits() {
        assert!((kernel_f(1e-9) - c(1.0, 0.0)).norm() < 1e-8);
        assert!((kernel_g(0.0) - c(0.0, 0.5)).norm() < 1e-14);
        assert!((kernel_h(0.0) - c(1.0 / 3.0, 0.0)).norm() < 1e-14);
        // conjugate symmetry
        for &x in &[0.3, 1.7, 9.4] {
            assert!((kernel_f(-x) - kernel_f(x).conj()).norm() < 1e-13);
        }
        // series and closed form agree across the switch point
        for &x in &[0.05, 0.0999, 0.1001, 0.2] {
            let series_f = series(x, 0);
            let closed = (C64::from_polar(1.0, x) - 1.0) / c(0.0, x);
            assert!((series_f - closed).norm() < 1e-13);
        }
    }

    #[test]
    fn kernel_derivative_identities() {
        let h = 1e-6;
        for &x in &[0.4, 1.3, 2.9, 7.1] {
            let fd_g = (kernel_f(x + h) - kernel_f(x - h)) / c(2.0 * h, 0.0);
            assert!((fd_g - kernel_g(x)).norm() < 1e-8);
            let fd_h = -(kernel_g(x + h) - kernel_g(x - h)) / c(2.0 * h, 0.0);
            assert!((fd_h - kernel_h(x)).norm() < 1e-8);
        }
    }

    #[test]
    fn single_source_is_consistent() {
        let ula = UlaElectrical::new(15);
        let truth = SparseRepresentation::new(
            vec![0.37],
            array![[c(1.0, 0.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let verdict = check_consistency(&ula, &truth, 0.0).unwrap();
        assert!(verdict.consistent, "worst {}", verdict.worst_value);
        // away from the source the bound has positive margin
        let exp = build_expansion(&ula, &truth).unwrap();
        let f = consistency_lhs(&ula, &exp);
        assert!(f(0.37 + 1.0) < 1.0 - 1e-3);
        assert!((f(0.37) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_source_verdicts_straddle_the_resolution_limit() {
        let m = 15;
        let ula = UlaElectrical::new(m);
        let wide = 4.0 * std::f64::consts::PI / m as f64;
        let narrow = 0.5 * std::f64::consts::PI / m as f64;
        for (dphi, expect) in [(wide, true), (narrow, false)] {
            let truth = SparseRepresentation::new(
                vec![0.0, dphi],
                array![[c(1.0, 0.0)], [c(1.0, 0.0)]],
                AngleUnit::Electrical,
            )
            .unwrap();
            let verdict = check_consistency(&ula, &truth, 0.0).unwrap();
            assert_eq!(
                verdict.consistent, expect,
                "dphi = {dphi}: worst {}",
                verdict.worst_value
            );
        }
    }

    #[test]
    fn bound_attains_one_at_support() {
        let m = 15;
        let ula = UlaElectrical::new(m);
        let dphi = 4.0 * std::f64::consts::PI / m as f64;
        let truth = SparseRepresentation::new(
            vec![0.0, dphi],
            array![[c(1.0, 0.0)], [c(0.0, 1.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let exp = build_expansion(&ula, &truth).unwrap();
        let f = consistency_lhs(&ula, &exp);
        assert!((f(0.0) - 1.0).abs() < 1e-9);
        assert!((f(dphi) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn asymptotic_test_matches_proposition_bullets() {
        let scan = DprimeScan::default();
        let xi = ones_xi();
        assert!(asymptotic_consistency_test(4.0 * std::f64::consts::PI, &xi, &scan));
        assert!(!asymptotic_consistency_test(0.5 * std::f64::consts::PI, &xi, &scan));
    }

    #[test]
    fn asymptotic_bound_is_one_at_supports() {
        let xi = ones_xi();
        let scan = DprimeScan::default();
        let delta = 3.0 * std::f64::consts::PI;
        // the scan includes the support offsets, so the worst value is >= 1
        let worst = asymptotic_consistency_margin(delta, &xi, &scan).unwrap();
        assert!(worst >= 1.0 - 1e-9);
    }

    #[test]
    fn xi_sampler_is_reproducible_and_unit_diagonal() {
        let sampler = XiSampler {
            seed: 42,
            snapshots: 2,
            count: 5,
        };
        let a = sampler.draw_all();
        let b = sampler.draw_all();
        for (x, y) in a.iter().zip(b.iter()) {
            for (u, v) in x.iter().zip(y.iter()) {
                assert_eq!(u, v);
            }
        }
        for xi in &a {
            for i in 0..2 {
                assert!((xi[[i, i]] - c(1.0, 0.0)).norm() < 1e-12);
            }
            assert!(xi[[0, 1]].norm() <= 1.0 + 1e-12);
        }
    }
}
