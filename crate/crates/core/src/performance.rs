//! Regularization selection and closed-form performance predictors.
//!
//! For a pure, consistent scenario the smallest regularization that keeps
//! the estimated cardinality correct is, to first order, the maximum over
//! off-support positions of a per-position quantity `Lambda(theta)` that
//! solves a scalar quadratic. Its two first moments drive the bias and
//! covariance predictors:
//!
//! ```text
//! bias = E(lambda) beta
//! cov  = 1/2 Gamma^{-1} R^{-1} Re[B_p^H C B_p (.) Xi^T] R^{-1} Gamma^{-1}
//!        + Var(lambda) beta beta^T,     B_p = P_perp D
//! ```
//!
//! For a large half-wavelength ULA with white noise the moments follow the
//! extreme-value asymptotics of the sampled spectrum maxima.

use ndarray::{Array1, Array2};

use crate::array::{Manifold, NoiseModel};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, vec_norm, C64};
use crate::perturbation::PerturbationExpansion;
use crate::scan::scan_max;

/// Euler-Mascheroni constant: mean of a standard Gumbel variable.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Empirical Gumbel-mean replacement that fits the continuous-search
/// regularization better than the sampled-maximum theory.
pub const EMPIRICAL_GAMMA: f64 = 1.3;

/// Provenance of a pair of regularization moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    /// Extreme-value asymptotics with the Gumbel mean `0.5772...`.
    GumbelTheory,
    /// Extreme-value asymptotics with the empirically fitted mean.
    EmpiricalFit,
    /// Monte Carlo estimate from per-draw optimal values.
    MonteCarlo,
    /// Caller-supplied values.
    User,
}

/// First and second moments of the selected regularization.
#[derive(Debug, Clone)]
pub struct LambdaMoments {
    pub mean: f64,
    pub mean_square: f64,
    pub gamma_expectation: f64,
    pub source: MomentSource,
}

impl LambdaMoments {
    pub fn variance(&self) -> f64 {
        (self.mean_square - self.mean * self.mean).max(0.0)
    }
}

/// Closed-form bias and covariance prediction for the position estimates.
#[derive(Debug, Clone)]
pub struct PerformancePrediction {
    pub bias: Array1<f64>,
    pub covariance: Array2<f64>,
    pub lambda_moments: LambdaMoments,
    pub sigma: f64,
}

impl PerformancePrediction {
    /// Per-component mean squared error `bias^2 + variance`.
    pub fn mse(&self) -> Array1<f64> {
        Array1::from_iter(
            (0..self.bias.len()).map(|i| self.bias[i] * self.bias[i] + self.covariance[[i, i]]),
        )
    }
}

/// Per-position smallest feasible regularization `Lambda(theta)`:
/// the positive root of `(1 - ||d||^2) x^2 - 2 Re<c,d> x - ||c||^2 = 0`,
/// where `c` collects the constant part and `d` the part linear in the
/// regularization. Infinite when `||d|| >= 1`.
fn lambda_of_quadratic(c: &[C64], d: &[C64]) -> f64 {
    let c_sq = c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let d_sq = d.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let cross: f64 = c.iter().zip(d).map(|(ci, di)| (ci * di.conj()).re).sum();
    let lead = 1.0 - d_sq;
    if lead <= 0.0 {
        return f64::INFINITY;
    }
    let disc = (cross * cross + lead * c_sq).max(0.0).sqrt();
    if cross <= 0.0 {
        // stable form avoiding cancellation
        if disc - cross == 0.0 {
            0.0
        } else {
            c_sq / (disc - cross)
        }
    } else {
        (cross + disc) / lead
    }
}

/// Matrices whose steering projections give `c(theta)` and `d(theta)`.
struct LambdaScanOperands {
    c_mat: Array2<C64>,
    d_mat: Array2<C64>,
}

fn lambda_scan_operands(
    exp: &PerturbationExpansion,
    noise_sample: &Array2<C64>,
) -> Result<LambdaScanOperands> {
    let n = exp.order();
    let t = exp.u.ncols();
    if noise_sample.nrows() != exp.a.nrows() || noise_sample.ncols() != t {
        return Err(Error::DimensionMismatch(format!(
            "noise sample is {}x{}, expected {}x{}",
            noise_sample.nrows(),
            noise_sample.ncols(),
            exp.a.nrows(),
            t
        )));
    }
    let delta = exp.delta_from_noise(noise_sample)?;
    // D diag(Gamma delta) U and D diag(Gamma beta) U
    let weighted = |w: &dyn Fn(usize) -> f64| -> Array2<C64> {
        let mut out = Array2::<C64>::zeros((exp.a.nrows(), t));
        for i in 0..n {
            let wi = w(i);
            for tt in 0..t {
                let coef = exp.u[[i, tt]] * wi;
                for r in 0..exp.a.nrows() {
                    let upd = exp.d[[r, i]] * coef;
                    out[[r, tt]] += upd;
                }
            }
        }
        out
    };
    let b_delta = weighted(&|i| exp.gamma[i] * delta[i]);
    let b_beta = weighted(&|i| exp.gamma[i] * exp.beta[i]);

    // c = P_perp (N - D diag(Gamma delta) U)
    let c_mat = exp.project_perp(&(noise_sample - &b_delta));
    // d = A (A^H A)^{-1} U - P_perp D diag(Gamma beta) U
    let au = exp.a.dot(&exp.gram_inv).dot(&exp.u);
    let d_mat = &au - &exp.project_perp(&b_beta);
    Ok(LambdaScanOperands { c_mat, d_mat })
}

/// Exclusion radius around support points where the first-order quadratic
/// degenerates (the bound is active there by construction).
fn support_exclusion(manifold: &dyn Manifold) -> f64 {
    manifold.domain().length() / (2.0 * manifold.num_sensors() as f64)
}

/// Smallest regularization keeping the cardinality correct, to first order:
/// `max_{theta not near support} Lambda(theta)` with a scan-and-polish
/// search. Errors when no finite value exists (inconsistent scenario).
pub fn optimal_lambda_exact(
    exp: &PerturbationExpansion,
    manifold: &dyn Manifold,
    noise_sample: &Array2<C64>,
    scan_fineness: f64,
) -> Result<f64> {
    let ops = lambda_scan_operands(exp, noise_sample)?;
    let m = manifold.num_sensors();
    let t = exp.u.ncols();
    let dom = manifold.domain();
    let exclusion = support_exclusion(manifold);
    let thetas = exp.thetas.clone();
    let lambda_at = move |theta: f64| -> f64 {
        if thetas.iter().any(|&th| (theta - th).abs() < exclusion) {
            return 0.0;
        }
        let mut buf = vec![C64::new(0.0, 0.0); m];
        manifold.fill_steering(theta, &mut buf);
        let mut c = vec![C64::new(0.0, 0.0); t];
        let mut d = vec![C64::new(0.0, 0.0); t];
        for tt in 0..t {
            let mut ca = C64::new(0.0, 0.0);
            let mut da = C64::new(0.0, 0.0);
            for r in 0..m {
                ca += buf[r].conj() * ops.c_mat[[r, tt]];
                da += buf[r].conj() * ops.d_mat[[r, tt]];
            }
            c[tt] = ca;
            d[tt] = da;
        }
        lambda_of_quadratic(&c, &d)
    };
    let fineness = if scan_fineness > 0.0 {
        scan_fineness
    } else {
        std::f64::consts::PI / (8.0 * m as f64)
    };
    let points = ((dom.length() / fineness).ceil() as usize + 1).max(256);
    let (_, best) = scan_max(&lambda_at, dom, points, 50);
    if !best.is_finite() {
        return Err(Error::InconsistentScenario);
    }
    Ok(best)
}

/// Large-`m` approximation: the global maximum of `||a^H(theta) N||_2`.
pub fn lambda_approx(manifold: &dyn Manifold, noise_sample: &Array2<C64>, scan_fineness: f64) -> f64 {
    let m = manifold.num_sensors();
    let t = noise_sample.ncols();
    let dom = manifold.domain();
    let f = |theta: f64| {
        let mut buf = vec![C64::new(0.0, 0.0); m];
        manifold.fill_steering(theta, &mut buf);
        let mut z = vec![C64::new(0.0, 0.0); t];
        for (tt, zt) in z.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..m {
                acc += buf[r].conj() * noise_sample[[r, tt]];
            }
            *zt = acc;
        }
        vec_norm(&z)
    };
    let fineness = if scan_fineness > 0.0 {
        scan_fineness
    } else {
        std::f64::consts::PI / (8.0 * m as f64)
    };
    let points = ((dom.length() / fineness).ceil() as usize + 1).max(256);
    let (_, best) = scan_max(&f, dom, points, 50);
    best
}

/// Extreme-value moments of the regularization for a large white-noise ULA:
///
/// ```text
/// E(lambda^2) = sigma^2 m (ln m + (T-1) ln ln m + E(gamma) - ln (T-1)!)
/// E(lambda)   = sigma sqrt(m ln m) {1 + [(T-1) ln ln m + E(gamma)
///               - ln (T-1)!] / (2 ln m)}
/// ```
///
/// Valid when `T = o(ln m / ln ln m)`; the regime flag reports violations.
pub fn extreme_value_moments(
    m: usize,
    t: usize,
    sigma: f64,
    gamma_expectation: f64,
) -> Result<(LambdaMoments, bool)> {
    if m < 3 {
        return Err(Error::InvalidConfig(
            "extreme-value moments need m >= 3 (ln ln m must be positive)".into(),
        ));
    }
    if t < 1 {
        return Err(Error::InvalidConfig("need at least one snapshot".into()));
    }
    let mf = m as f64;
    let ln_m = mf.ln();
    let ln_ln_m = ln_m.ln();
    let ln_t_fact: f64 = (1..t).map(|k| (k as f64).ln()).sum();
    let correction = (t as f64 - 1.0) * ln_ln_m + gamma_expectation - ln_t_fact;
    let mean_square = sigma * sigma * mf * (ln_m + correction);
    let mean = sigma * (mf * ln_m).sqrt() * (1.0 + correction / (2.0 * ln_m));
    let regime_ok = (t as f64) < ln_m / ln_ln_m;
    let source = if (gamma_expectation - EULER_GAMMA).abs() < 1e-12 {
        MomentSource::GumbelTheory
    } else if (gamma_expectation - EMPIRICAL_GAMMA).abs() < 1e-12 {
        MomentSource::EmpiricalFit
    } else {
        MomentSource::User
    };
    Ok((
        LambdaMoments {
            mean,
            mean_square,
            gamma_expectation,
            source,
        },
        regime_ok,
    ))
}

/// Monte Carlo moments of the per-draw optimal regularization. Preferred at
/// small `m`, where the extreme-value expansion has not set in.
pub fn monte_carlo_lambda_moments(
    exp: &PerturbationExpansion,
    manifold: &dyn Manifold,
    noise: &NoiseModel,
    trials: usize,
    scan_fineness: f64,
) -> Result<LambdaMoments> {
    use rayon::prelude::*;
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let m = manifold.num_sensors();
    let t = exp.u.ncols();
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let n = noise.with_stream(trial).draw(m, t);
            optimal_lambda_exact(exp, manifold, &n, scan_fineness)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / trials as f64;
    let mean_square = values.iter().map(|v| v * v).sum::<f64>() / trials as f64;
    Ok(LambdaMoments {
        mean,
        mean_square,
        gamma_expectation: f64::NAN,
        source: MomentSource::MonteCarlo,
    })
}

/// Closed-form bias/covariance prediction at a consistent pure scenario.
pub fn predict_performance(
    exp: &PerturbationExpansion,
    noise: &NoiseModel,
    moments: &LambdaMoments,
) -> Result<PerformancePrediction> {
    let n = exp.order();
    let m = exp.a.nrows();
    let c_mat = noise.covariance_matrix(m);

    // B_p = P_perp D; first term 1/2 G^{-1} R^{-1} Re[B_p^H C B_p (.) Xi^T] R^{-1} G^{-1}
    let b_p = exp.project_perp(&exp.d);
    let core = adjoint(&b_p).dot(&c_mat).dot(&b_p);
    let mut inner = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for k in 0..n {
            inner[[i, k]] = 0.5 * (core[[i, k]] * exp.xi[[k, i]]).re;
        }
    }
    let scaled = |mat: &Array2<f64>| -> Array2<f64> {
        // G^{-1} R^{-1} mat R^{-1} G^{-1}
        let mut left = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for p in 0..n {
                    acc += exp.r_inv[[i, p]] * mat[[p, k]];
                }
                left[[i, k]] = acc / exp.gamma[i];
            }
        }
        let mut out = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for p in 0..n {
                    acc += left[[i, p]] * exp.r_inv[[p, k]];
                }
                out[[i, k]] = acc / exp.gamma[k];
            }
        }
        out
    };
    let mut covariance = scaled(&inner);
    let var_lambda = moments.variance();
    for i in 0..n {
        for k in 0..n {
            covariance[[i, k]] += var_lambda * exp.beta[i] * exp.beta[k];
        }
    }
    // exact symmetrization
    for i in 0..n {
        for k in 0..i {
            let s = 0.5 * (covariance[[i, k]] + covariance[[k, i]]);
            covariance[[i, k]] = s;
            covariance[[k, i]] = s;
        }
    }
    let bias = exp.beta.mapv(|b| b * moments.mean);
    Ok(PerformancePrediction {
        bias,
        covariance,
        lambda_moments: moments.clone(),
        sigma: noise.sigma(),
    })
}

/// Test-oracle-grade bisection of the per-position feasibility problem;
/// kept public so the oracle can stay independent of the quadratic route.
pub fn optimal_lambda_bisection(
    exp: &PerturbationExpansion,
    manifold: &dyn Manifold,
    noise_sample: &Array2<C64>,
    scan_fineness: f64,
) -> Result<f64> {
    let ops = lambda_scan_operands(exp, noise_sample)?;
    let m = manifold.num_sensors();
    let t = exp.u.ncols();
    let dom = manifold.domain();
    let exclusion = support_exclusion(manifold);
    let fineness = if scan_fineness > 0.0 {
        scan_fineness
    } else {
        std::f64::consts::PI / (8.0 * m as f64)
    };
    let points = ((dom.length() / fineness).ceil() as usize + 1).max(256);

    // feasibility of a given lambda: sup_theta ||c(theta) + lambda d(theta)||
    // (support neighborhoods excluded, scan with polish) stays below lambda
    let thetas = exp.thetas.clone();
    let feasible = |lambda: f64| -> bool {
        let dual = |theta: f64| -> f64 {
            if thetas.iter().any(|&th| (theta - th).abs() < exclusion) {
                return f64::NEG_INFINITY;
            }
            let mut buf = vec![C64::new(0.0, 0.0); m];
            manifold.fill_steering(theta, &mut buf);
            let mut total = 0.0;
            for tt in 0..t {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..m {
                    acc += buf[r].conj()
                        * (ops.c_mat[[r, tt]] + ops.d_mat[[r, tt]] * lambda);
                }
                total += acc.norm_sqr();
            }
            total.sqrt()
        };
        let (_, worst) = scan_max(&dual, dom, points, 60);
        worst <= lambda
    };

    let mut hi = 1.0;
    let mut grow = 0;
    while !feasible(hi) {
        hi *= 4.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::InconsistentScenario);
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{AngleUnit, SparseRepresentation, UlaElectrical};
    use crate::perturbation::build_expansion;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_source_setup(m: usize) -> (UlaElectrical, PerturbationExpansion) {
        let ula = UlaElectrical::new(m);
        let dphi = 4.0 * std::f64::consts::PI / m as f64;
        let truth = SparseRepresentation::new(
            vec![0.0, dphi],
            array![[c(1.0, 0.0)], [c(1.0, 0.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let exp = build_expansion(&ula, &truth).unwrap();
        (ula, exp)
    }

    #[test]
    fn zero_noise_gives_zero_lambda() {
        let (ula, exp) = two_source_setup(15);
        let zero = Array2::<C64>::zeros((15, 1));
        let lambda = optimal_lambda_exact(&exp, &ula, &zero, 0.0).unwrap();
        assert!(lambda.abs() < 1e-14);
    }

    #[test]
    fn positive_scaling_is_exact() {
        let (ula, exp) = two_source_setup(15);
        let n = NoiseModel::white(1e-3, 77).draw(15, 1);
        let l1 = optimal_lambda_exact(&exp, &ula, &n, 0.0).unwrap();
        let l2 = optimal_lambda_exact(&exp, &ula, &n.mapv(|z| z * 2.0), 0.0).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-10 * l1);
    }

    #[test]
    fn lambda_approx_matched_filter_peak() {
        let m = 16;
        let ula = UlaElectrical::new(m);
        let theta0 = 0.91;
        let a = crate::array::steering_vector(&ula, theta0).unwrap();
        let v = c(0.3, -1.1);
        let n = Array2::from_shape_fn((m, 1), |(i, _)| a[i] * v);
        let peak = lambda_approx(&ula, &n, 0.0);
        assert!((peak - m as f64 * v.norm()).abs() < 1e-9 * peak);
    }

    #[test]
    fn extreme_value_moment_formulas() {
        let (mom, ok) = extreme_value_moments(512, 1, 1.0, EULER_GAMMA).unwrap();
        assert!(ok);
        let expected = 512.0f64.ln() + EULER_GAMMA;
        assert!((mom.mean_square / 512.0 - expected).abs() < 1e-12);
        assert_eq!(mom.source, MomentSource::GumbelTheory);

        // sigma scaling: mean ~ sigma, mean_square ~ sigma^2
        let (m2, _) = extreme_value_moments(512, 1, 2.0, EULER_GAMMA).unwrap();
        assert!((m2.mean - 2.0 * mom.mean).abs() < 1e-12);
        assert!((m2.mean_square - 4.0 * mom.mean_square).abs() < 1e-9);

        assert!(extreme_value_moments(2, 1, 1.0, EULER_GAMMA).is_err());
        // T too large for the regime
        let (_, ok) = extreme_value_moments(16, 8, 1.0, EULER_GAMMA).unwrap();
        assert!(!ok);
    }

    #[test]
    fn prediction_scales_with_sigma() {
        let (_, exp) = two_source_setup(15);
        let sigma = 1e-3;
        let (mom1, _) = extreme_value_moments(15, 1, sigma, EMPIRICAL_GAMMA).unwrap();
        let noise1 = NoiseModel::white(sigma, 0);
        let p1 = predict_performance(&exp, &noise1, &mom1).unwrap();

        let (mom2, _) = extreme_value_moments(15, 1, 2.0 * sigma, EMPIRICAL_GAMMA).unwrap();
        let noise2 = NoiseModel::white(2.0 * sigma, 0);
        let p2 = predict_performance(&exp, &noise2, &mom2).unwrap();

        for i in 0..2 {
            assert!((p2.bias[i] - 2.0 * p1.bias[i]).abs() < 1e-12 * p1.bias[i].abs());
            for k in 0..2 {
                assert!(
                    (p2.covariance[[i, k]] - 4.0 * p1.covariance[[i, k]]).abs()
                        < 1e-10 * p1.covariance[[i, k]].abs().max(1e-30)
                );
            }
        }
    }

    #[test]
    fn single_source_prediction_has_no_bias() {
        let ula = UlaElectrical::new(12);
        let truth = SparseRepresentation::new(
            vec![0.3],
            array![[c(1.0, 0.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let exp = build_expansion(&ula, &truth).unwrap();
        let sigma = 1e-3;
        let (mom, _) = extreme_value_moments(12, 1, sigma, EMPIRICAL_GAMMA).unwrap();
        let noise = NoiseModel::white(sigma, 0);
        let p = predict_performance(&exp, &noise, &mom).unwrap();
        assert!(p.bias[0].abs() < 1e-14);
        // covariance reduces to the NLLS term sigma^2/(2 gamma^2 R)
        let expected = sigma * sigma / (2.0 * exp.gamma[0] * exp.gamma[0] * exp.r[[0, 0]]);
        assert!((p.covariance[[0, 0]] - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn covariance_is_psd() {
        let (_, exp) = two_source_setup(15);
        let sigma = 1e-3;
        let (mom, _) = extreme_value_moments(15, 1, sigma, EMPIRICAL_GAMMA).unwrap();
        let noise = NoiseModel::white(sigma, 0);
        let p = predict_performance(&exp, &noise, &mom).unwrap();
        let ev = crate::linalg::sym_eigenvalues(&p.covariance);
        let trace: f64 = (0..2).map(|i| p.covariance[[i, i]]).sum();
        assert!(ev.iter().all(|&v| v >= -1e-12 * trace));
    }

    #[test]
    fn quadratic_root_properties() {
        // ||c + x d|| = x with d = 0 reduces to x = ||c||
        let c_vec = [c(3.0, 4.0)];
        let d_vec = [c(0.0, 0.0)];
        assert!((lambda_of_quadratic(&c_vec, &d_vec) - 5.0).abs() < 1e-12);
        // ||d|| >= 1 is infeasible
        let d_big = [c(1.0, 0.0)];
        assert!(lambda_of_quadratic(&c_vec, &d_big).is_infinite());
        // c = 0 gives zero
        let zero = [c(0.0, 0.0)];
        let d_half = [c(0.5, 0.0)];
        assert_eq!(lambda_of_quadratic(&zero, &d_half), 0.0);
    }
}
