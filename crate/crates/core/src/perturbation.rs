//! First-order perturbation expansion of the continuous estimator around a
//! noiseless solution.
//!
//! For a pure scenario (the estimate keeps the noiseless cardinality for all
//! sufficiently small `lambda`), the position shift decomposes as
//! `Delta theta = delta + lambda * beta`, where `delta` is the classical
//! first-order NLLS error driven by the data perturbation and `beta` is the
//! deterministic contribution of the penalty. Both are built from
//!
//! ```text
//! Xi = U U^H,  U = Gamma^{-1} S
//! R  = Re[ D^H P_perp D  (.) Xi^T ]
//! ```
//!
//! with `P_perp` the projector onto the orthogonal complement of the range
//! of `A(theta)` and `D` the columnwise steering derivative matrix.

use ndarray::{Array1, Array2};

use crate::array::{build_matrices, Manifold, SparseRepresentation};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, condition_1norm, inverse, pivoted_cholesky, solve_real, C64};
use crate::matio::TextDoc;

/// Expansion data at a fixed (true/noiseless) support.
#[derive(Debug, Clone)]
pub struct PerturbationExpansion {
    /// Expansion point: the support positions.
    pub thetas: Vec<f64>,
    /// Unit-row amplitude directions `U = Gamma^{-1} S` (n x T).
    pub u: Array2<C64>,
    /// `Xi = U U^H` (n x n), unit diagonal.
    pub xi: Array2<C64>,
    /// Interaction matrix `R` (n x n, symmetric).
    pub r: Array2<f64>,
    /// Penalty-induced shift direction (n).
    pub beta: Array1<f64>,
    /// Row norms `gamma_i` of the amplitudes (n).
    pub gamma: Array1<f64>,
    /// Orthogonal projector `P_perp = I - A (A^H A)^{-1} A^H` (m x m).
    pub p_perp: Array2<C64>,
    /// Basis matrix `A(theta)` (m x n).
    pub a: Array2<C64>,
    /// Derivative matrix `D(theta)` (m x n).
    pub d: Array2<C64>,
    /// `(A^H A)^{-1}` (n x n).
    pub gram_inv: Array2<C64>,
    /// `R^{-1}` (n x n).
    pub r_inv: Array2<f64>,
    /// 1-norm condition estimate of `R`.
    pub r_condition: f64,
}

/// Condition threshold beyond which the expansion is treated as invalid
/// (sources at or below the resolution limit).
pub const R_CONDITION_LIMIT: f64 = 1e12;

/// Build the expansion at an irreducible truth with full-rank basis.
pub fn build_expansion(
    manifold: &dyn Manifold,
    truth: &SparseRepresentation,
) -> Result<PerturbationExpansion> {
    let n = truth.order();
    if n == 0 {
        return Err(Error::InvalidConfig(
            "expansion needs at least one source".into(),
        ));
    }
    let drop_tol = 0.0;
    if !truth.is_irreducible(drop_tol) {
        return Err(Error::InvalidConfig(
            "truth must be irreducible (no zero amplitude rows)".into(),
        ));
    }
    let m = manifold.num_sensors();
    let basis = build_matrices(manifold, &truth.thetas)?;
    let a = basis.a;
    let d = basis.d;

    let gram = adjoint(&a).dot(&a);
    let gram_inv = inverse(&gram).map_err(|_| Error::RankDeficient { cond: f64::INFINITY })?;

    // P_perp = I - A (A^H A)^{-1} A^H
    let proj = a.dot(&gram_inv).dot(&adjoint(&a));
    let mut p_perp = proj.mapv(|z| -z);
    for i in 0..m {
        p_perp[[i, i]] += C64::new(1.0, 0.0);
    }

    let gamma = truth.row_norms();
    let u = truth.unit_rows();
    let xi = u.dot(&adjoint(&u));

    // R = Re[D^H P_perp D (.) Xi^T], symmetrized so R = R^T holds exactly
    let dpd = adjoint(&d).dot(&p_perp).dot(&d);
    let mut r = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for k in 0..n {
            r[[i, k]] = (dpd[[i, k]] * xi[[k, i]]).re;
        }
    }
    for i in 0..n {
        for k in 0..i {
            let s = 0.5 * (r[[i, k]] + r[[k, i]]);
            r[[i, k]] = s;
            r[[k, i]] = s;
        }
    }

    let r_condition = condition_1norm(&r);
    if !r_condition.is_finite() || r_condition > R_CONDITION_LIMIT {
        return Err(Error::SingularInteraction { cond: r_condition });
    }
    let r_inv = {
        let eye = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { 0.0 });
        solve_real(&r, &eye)?
    };

    // beta = Gamma^{-1} R^{-1} Re[ stack_i( d_i^H A (A^H A)^{-1} xi_i ) ]
    let m_mat = adjoint(&d).dot(&a).dot(&gram_inv); // n x n
    let mut stack = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            acc += m_mat[[i, k]] * xi[[k, i]];
        }
        stack[i] = acc.re;
    }
    let mut beta = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            acc += r_inv[[i, k]] * stack[k];
        }
        beta[i] = acc / gamma[i];
    }

    Ok(PerturbationExpansion {
        thetas: truth.thetas.clone(),
        u,
        xi,
        r,
        beta,
        gamma,
        p_perp,
        a,
        d,
        gram_inv,
        r_inv,
        r_condition,
    })
}

impl PerturbationExpansion {
    pub fn order(&self) -> usize {
        self.thetas.len()
    }

    /// A square root factor `M` with `M M^H = Xi` (pivoted Cholesky; any
    /// factor is equivalent because only norms `||v^H M||` are consumed).
    pub fn xi_sqrt(&self) -> Array2<C64> {
        pivoted_cholesky(&self.xi, 1e-14)
    }

    /// Apply `P_perp` to a matrix without forming the projector product.
    pub fn project_perp(&self, v: &Array2<C64>) -> Array2<C64> {
        let ah_v = adjoint(&self.a).dot(v);
        let coef = self.gram_inv.dot(&ah_v);
        v - &self.a.dot(&coef)
    }

    /// First-order position error induced by a data perturbation:
    /// `delta = Gamma^{-1} R^{-1} Re[ stack_i( d_i^H P_perp dX U_i^H ) ]`.
    pub fn delta_from_noise(&self, dx: &Array2<C64>) -> Result<Array1<f64>> {
        let n = self.order();
        let t = self.u.ncols();
        if dx.nrows() != self.a.nrows() || dx.ncols() != t {
            return Err(Error::DimensionMismatch(format!(
                "dX is {}x{}, expected {}x{}",
                dx.nrows(),
                dx.ncols(),
                self.a.nrows(),
                t
            )));
        }
        let pdx = self.project_perp(dx); // m x T
        let dh_pdx = adjoint(&self.d).dot(&pdx); // n x T
        let mut stack = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for tt in 0..t {
                acc += dh_pdx[[i, tt]] * self.u[[i, tt]].conj();
            }
            stack[i] = acc.re;
        }
        let mut delta = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.r_inv[[i, k]] * stack[k];
            }
            delta[i] = acc / self.gamma[i];
        }
        Ok(delta)
    }

    /// Predicted position shift `delta(dX) + lambda * beta`.
    pub fn predicted_theta_shift(&self, lambda: f64, dx: &Array2<C64>) -> Result<Array1<f64>> {
        let delta = self.delta_from_noise(dx)?;
        Ok(&delta + &(self.beta.mapv(|b| b * lambda)))
    }

    /// Predicted amplitude shift
    /// `Delta S = (A^H A)^{-1} [A^H (dX - D dQ U) - lambda U]`, with
    /// `dQ = diag(Gamma * predicted position shift)`.
    pub fn predicted_amplitude_shift(&self, lambda: f64, dx: &Array2<C64>) -> Result<Array2<C64>> {
        let n = self.order();
        let t = self.u.ncols();
        let shift = self.predicted_theta_shift(lambda, dx)?;
        // D * dQ * U where dQ = diag(gamma_i * shift_i)
        let mut bdu = Array2::<C64>::zeros((self.a.nrows(), t));
        for i in 0..n {
            let w = self.gamma[i] * shift[i];
            for tt in 0..t {
                let coef = self.u[[i, tt]] * w;
                for r in 0..self.a.nrows() {
                    let upd = self.d[[r, i]] * coef;
                    bdu[[r, tt]] += upd;
                }
            }
        }
        let inner = dx - &bdu;
        let mut rhs = adjoint(&self.a).dot(&inner);
        for i in 0..n {
            for tt in 0..t {
                let upd = self.u[[i, tt]] * lambda;
                rhs[[i, tt]] -= upd;
            }
        }
        Ok(self.gram_inv.dot(&rhs))
    }

    /// Dump the expansion quantities to the text interchange format.
    pub fn to_text(&self) -> String {
        let mut doc = TextDoc::new();
        doc.push_scalar("n", self.order() as f64)
            .push_vector("theta", &self.thetas)
            .push_vector("gamma", self.gamma.as_slice().unwrap())
            .push_vector("beta", self.beta.as_slice().unwrap())
            .push_cmatrix("Xi", &self.xi)
            .push_cmatrix("R", &self.r.mapv(|v| C64::new(v, 0.0)))
            .push_scalar("r_condition", self.r_condition);
        doc.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{AngleUnit, NoiseModel, UlaElectrical};
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_source_truth(m: usize) -> (UlaElectrical, SparseRepresentation) {
        let ula = UlaElectrical::new(m);
        let dphi = 4.0 * std::f64::consts::PI / m as f64;
        let truth = SparseRepresentation::new(
            vec![0.0, dphi],
            array![[c(1.0, 0.0)], [c(1.0, 0.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        (ula, truth)
    }

    #[test]
    fn single_source_beta_is_zero() {
        let ula = UlaElectrical::new(8);
        let truth = SparseRepresentation::new(
            vec![0.35],
            array![[c(1.3, -0.4)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let exp = build_expansion(&ula, &truth).unwrap();
        assert_eq!(exp.order(), 1);
        assert!((exp.xi[[0, 0]] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(exp.beta[0].abs() < 1e-10, "beta = {}", exp.beta[0]);
    }

    #[test]
    fn two_source_beta_is_antisymmetric() {
        let (ula, truth) = two_source_truth(15);
        let exp = build_expansion(&ula, &truth).unwrap();
        assert!(
            (exp.beta[0] + exp.beta[1]).abs() < 1e-10 * exp.beta[0].abs().max(1e-30),
            "beta = {:?}",
            exp.beta
        );
        assert!(exp.beta[0].abs() > 0.0);
    }

    #[test]
    fn xi_diagonal_and_r_symmetry_exact() {
        let (ula, truth) = two_source_truth(12);
        let exp = build_expansion(&ula, &truth).unwrap();
        for i in 0..2 {
            assert!((exp.xi[[i, i]] - c(1.0, 0.0)).norm() < 1e-15);
        }
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(exp.r[[i, k]], exp.r[[k, i]]);
            }
        }
    }

    #[test]
    fn projector_is_idempotent_and_annihilates_basis() {
        let (ula, truth) = two_source_truth(10);
        let exp = build_expansion(&ula, &truth).unwrap();
        let pp = exp.p_perp.dot(&exp.p_perp);
        let mut worst = 0.0f64;
        for (x, y) in pp.iter().zip(exp.p_perp.iter()) {
            worst = worst.max((x - y).norm());
        }
        assert!(worst < 1e-12);
        let pa = exp.p_perp.dot(&exp.a);
        assert!(pa.iter().map(|z| z.norm()).fold(0.0f64, f64::max) < 1e-12);
        // Hermitian
        let ph = adjoint(&exp.p_perp);
        for (x, y) in ph.iter().zip(exp.p_perp.iter()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn delta_is_linear_and_annihilated_on_range() {
        let (ula, truth) = two_source_truth(9);
        let exp = build_expansion(&ula, &truth).unwrap();
        let zero = Array2::<C64>::zeros((9, 1));
        let d0 = exp.delta_from_noise(&zero).unwrap();
        assert!(d0.iter().all(|&v| v == 0.0));

        // dX in the range of A is annihilated
        let coef = array![[c(0.7, -0.2)], [c(-0.3, 0.9)]];
        let in_range = exp.a.dot(&coef);
        let dr = exp.delta_from_noise(&in_range).unwrap();
        assert!(dr.iter().all(|&v| v.abs() < 1e-12));

        // real-linearity
        let n1 = NoiseModel::white(1.0, 21).draw(9, 1);
        let n2 = NoiseModel::white(1.0, 22).draw(9, 1);
        let (a, b) = (1.7, -0.45);
        let combo = n1.mapv(|z| z * a) + n2.mapv(|z| z * b);
        let dc = exp.delta_from_noise(&combo).unwrap();
        let d1 = exp.delta_from_noise(&n1).unwrap();
        let d2 = exp.delta_from_noise(&n2).unwrap();
        for i in 0..2 {
            let lin = a * d1[i] + b * d2[i];
            assert!((dc[i] - lin).abs() < 1e-12 * lin.abs().max(1e-12));
        }
    }

    #[test]
    fn shift_scales_linearly_in_noise_and_lambda() {
        let (ula, truth) = two_source_truth(11);
        let exp = build_expansion(&ula, &truth).unwrap();
        let dx = NoiseModel::white(1.0, 5).draw(11, 1);
        let lambda = 0.3;
        let s1 = exp.predicted_theta_shift(lambda, &dx).unwrap();
        let alpha = 2.5;
        let s2 = exp
            .predicted_theta_shift(alpha * lambda, &dx.mapv(|z| z * alpha))
            .unwrap();
        for i in 0..2 {
            assert!((s2[i] - alpha * s1[i]).abs() < 1e-12 * s1[i].abs().max(1e-12));
        }
        let zero = Array2::<C64>::zeros((11, 1));
        let s0 = exp.predicted_theta_shift(0.0, &zero).unwrap();
        assert!(s0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn xi_sqrt_factor_reconstructs() {
        let ula = UlaElectrical::new(8);
        // rank-deficient Xi: T=1 with two sources gives rank-1 Xi
        let truth = SparseRepresentation::new(
            vec![0.1, 1.2],
            array![[c(1.0, 0.0)], [c(0.0, 1.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let exp = build_expansion(&ula, &truth).unwrap();
        let f = exp.xi_sqrt();
        assert_eq!(f.ncols(), 1);
        let rec = f.dot(&adjoint(&f));
        for (x, y) in rec.iter().zip(exp.xi.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn near_coincident_sources_are_rejected() {
        let ula = UlaElectrical::new(8);
        let truth = SparseRepresentation::new(
            vec![0.5, 0.5 + 1e-9],
            array![[c(1.0, 0.0)], [c(1.0, 0.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        match build_expansion(&ula, &truth) {
            Err(Error::SingularInteraction { .. }) | Err(Error::RankDeficient { .. }) => {}
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn single_source_amplitude_shrink_matches_grid_closed_form() {
        let m = 8;
        let ula = UlaElectrical::new(m);
        let truth = SparseRepresentation::new(
            vec![0.4],
            array![[c(1.0, 0.0)]],
            AngleUnit::Electrical,
        )
        .unwrap();
        let exp = build_expansion(&ula, &truth).unwrap();
        let lambda = 0.05;
        let zero = Array2::<C64>::zeros((m, 1));
        let ds = exp.predicted_amplitude_shift(lambda, &zero).unwrap();
        // grid closed form: s0 (1 - lambda / (m |s0|)) => shift = -lambda/m * u
        let expected = -lambda / m as f64;
        assert!((ds[[0, 0]] - c(expected, 0.0)).norm() < 1e-12);
    }
}
