//! Continuous (off-grid) group-LASSO estimation with optimality
//! certification.
//!
//! The estimate minimizes `0.5 ||X - A(theta) S||_F^2 + lambda ||S||_{1,2}`
//! jointly over the amplitude matrix and a finite, irreducible set of
//! continuous positions. A candidate `(theta_hat, S_hat)` with residual
//! `Nhat = X - A(theta_hat) S_hat` is a global minimum exactly when
//!
//! ```text
//! A^H(theta_hat) Nhat = lambda Gamma^{-1} S_hat
//! max_theta ||a^H(theta) Nhat||_2 <= lambda
//! ```
//!
//! The solver itself is refine-and-polish: a grid solve seeds the support,
//! atoms are then polished by damped Newton steps on the stationarity
//! equation `Re(d^H(theta_i) Nhat U_i^H) = 0`, amplitudes are re-solved by
//! row-wise exact minimization, and a dense rescan of the dual function
//! inserts atoms wherever `||a^H(theta) Nhat||_2` still exceeds `lambda`.
//! Only the certificate decides acceptance.

use ndarray::Array2;

use crate::array::{Interval, Manifold, SparseRepresentation, UlaElectrical};
use crate::error::{Error, Result};
use crate::grid_lasso::{solve_group_lasso, Grid, SolverOptions};
use crate::linalg::{fro_norm, row_norms, vec_norm, C64};
use crate::matio::TextDoc;
use crate::poly;
use crate::scan::{local_maxima, refine_max, scan_max};

/// Optimality certificate of a continuous solution.
#[derive(Debug, Clone)]
pub struct ClassCertificate {
    /// `max_theta ||a^H(theta) Nhat||_2` over the verification scan.
    pub dual_peak: f64,
    /// Location of the dual peak.
    pub dual_peak_theta: f64,
    /// Worst active-row alignment deviation `||a^H N - lambda S_i/gamma_i||`.
    pub alignment_error: f64,
    /// Worst `|Re(d^H(theta_i) Nhat U_i^H)| / ||d(theta_i)||`.
    pub stationarity_error: f64,
    pub lambda: f64,
    pub tol: f64,
    pub passed: bool,
}

/// A certified continuous solution.
#[derive(Debug, Clone)]
pub struct ClassSolution {
    pub representation: SparseRepresentation,
    pub lambda: f64,
    pub residual: Array2<C64>,
    pub certificate: ClassCertificate,
}

impl ClassSolution {
    pub fn order(&self) -> usize {
        self.representation.order()
    }

    pub fn support(&self) -> &[f64] {
        &self.representation.thetas
    }

    /// Serialize the solution together with its certificate.
    pub fn to_text(&self, m: usize) -> String {
        let mut doc = TextDoc::new();
        doc.push_scalar("m", m as f64)
            .push_scalar("n", self.order() as f64)
            .push_scalar("T", self.representation.snapshots() as f64)
            .push_scalar("lambda", self.lambda)
            .push_vector("theta", &self.representation.thetas)
            .push_cmatrix("S_hat", &self.representation.amplitudes)
            .push_cmatrix("N_hat", &self.residual)
            .push_scalar("cert_dual_peak", self.certificate.dual_peak)
            .push_scalar("cert_dual_peak_theta", self.certificate.dual_peak_theta)
            .push_scalar("cert_alignment_error", self.certificate.alignment_error)
            .push_scalar("cert_stationarity_error", self.certificate.stationarity_error)
            .push_scalar("cert_tol", self.certificate.tol)
            .push_scalar("cert_passed", if self.certificate.passed { 1.0 } else { 0.0 });
        doc.to_string()
    }
}

/// Options for [`solve_class`].
#[derive(Debug, Clone)]
pub struct ClassOptions {
    /// Number of points in the initial uniform grid (0 = automatic `8m+1`).
    pub initial_grid: usize,
    /// Verification-scan fineness; 0 = automatic `pi / (64 m)`.
    pub verify_fineness: f64,
    /// Relative certification tolerance.
    pub tol: f64,
    /// Rows below `row_drop_factor * ||X||_F` are removed.
    pub row_drop_factor: f64,
    /// Outer refinement rounds before giving up.
    pub max_rounds: usize,
    /// Newton iterations per atom polish.
    pub newton_iters: usize,
    /// Atoms closer than this are merged.
    pub merge_tol: f64,
    /// Dual violations above `lambda * (1 + insertion_rel)` trigger insertion.
    pub insertion_rel: f64,
}

impl Default for ClassOptions {
    fn default() -> Self {
        Self {
            initial_grid: 0,
            verify_fineness: 0.0,
            tol: 1e-8,
            row_drop_factor: 1e-10,
            max_rounds: 60,
            newton_iters: 50,
            merge_tol: 1e-7,
            insertion_rel: 1e-9,
        }
    }
}

impl ClassOptions {
    fn grid_points(&self, m: usize) -> usize {
        if self.initial_grid > 0 {
            self.initial_grid.max(3)
        } else {
            (8 * m + 1).max(65)
        }
    }

    fn fineness(&self, m: usize) -> f64 {
        if self.verify_fineness > 0.0 {
            self.verify_fineness
        } else {
            std::f64::consts::PI / (64.0 * m as f64)
        }
    }
}

/// Working state of the continuous refinement.
struct Working {
    thetas: Vec<f64>,
    s: Array2<C64>,        // k x T
    a: Array2<C64>,        // m x k, kept in sync with thetas
    residual: Array2<C64>, // X - A S
    m_norm: f64,           // ||a(theta)||^2 (constant over the manifold)
}

impl Working {
    fn new(manifold: &dyn Manifold, x: &Array2<C64>, thetas: Vec<f64>, s: Array2<C64>) -> Self {
        let m = manifold.num_sensors();
        let a = steering_cols(manifold, &thetas);
        let residual = x - &a.dot(&s);
        Self {
            thetas,
            s,
            a,
            residual,
            m_norm: m as f64,
        }
    }

    fn order(&self) -> usize {
        self.thetas.len()
    }

    /// One exact block-minimization sweep over all rows; returns the largest
    /// row change.
    fn bcd_sweep(&mut self, lambda: f64) -> f64 {
        let t = self.s.ncols();
        let m = self.a.nrows();
        let mut worst = 0.0f64;
        for i in 0..self.order() {
            let mut z = vec![C64::new(0.0, 0.0); t];
            for (tt, zt) in z.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..m {
                    acc += self.a[[r, i]].conj() * self.residual[[r, tt]];
                }
                *zt = acc + self.s[[i, tt]] * self.m_norm;
            }
            let znorm = vec_norm(&z);
            let shrink = if znorm > lambda {
                (1.0 - lambda / znorm) / self.m_norm
            } else {
                0.0
            };
            let mut change_sq = 0.0;
            for tt in 0..t {
                let new = z[tt] * shrink;
                let delta = new - self.s[[i, tt]];
                if delta.norm_sqr() > 0.0 {
                    for r in 0..m {
                        let upd = self.a[[r, i]] * delta;
                        self.residual[[r, tt]] -= upd;
                    }
                }
                change_sq += delta.norm_sqr();
                self.s[[i, tt]] = new;
            }
            worst = worst.max(change_sq.sqrt());
        }
        worst
    }

    /// Joint per-atom refit: move `theta_i` to the local maximum of the
    /// matched-filter norm `||a^H(theta) r_i||_2` on the residual-plus-atom
    /// data `r_i`, then re-solve the amplitude row in closed form. Updating
    /// both together avoids the slow limit cycle an alternating
    /// position/amplitude scheme falls into near convergence. The optimal
    /// row is aligned with `a^H(theta) r_i`, so the stationarity equation
    /// `Re(d^H(theta_i) Nhat U_i^H) = 0` holds at the refit point.
    /// Returns the position change.
    fn refit_atom(&mut self, manifold: &dyn Manifold, i: usize, lambda: f64, iters: usize) -> f64 {
        let t = self.s.ncols();
        let m = self.a.nrows();
        let dom = manifold.domain();
        // r_i = residual + a_i S_i
        let mut r_i = self.residual.clone();
        for tt in 0..t {
            for r in 0..m {
                let upd = self.a[[r, i]] * self.s[[i, tt]];
                r_i[[r, tt]] += upd;
            }
        }
        let mut abuf = vec![C64::new(0.0, 0.0); m];
        let mut dbuf = vec![C64::new(0.0, 0.0); m];
        let mut d2buf = vec![C64::new(0.0, 0.0); m];
        // q(theta) = ||a^H(theta) r_i||^2 and its two derivatives
        let quality = |theta: f64, abuf: &mut Vec<C64>| -> f64 {
            manifold.fill_steering(theta, abuf);
            let mut q = 0.0;
            for tt in 0..t {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..m {
                    acc += abuf[r].conj() * r_i[[r, tt]];
                }
                q += acc.norm_sqr();
            }
            q
        };
        let grad_hess = |theta: f64,
                         abuf: &mut Vec<C64>,
                         dbuf: &mut Vec<C64>,
                         d2buf: &mut Vec<C64>|
         -> (f64, f64) {
            manifold.fill_steering(theta, abuf);
            manifold.fill_derivative(theta, dbuf);
            manifold.fill_second_derivative(theta, d2buf);
            let mut g = 0.0f64;
            let mut h = 0.0f64;
            for tt in 0..t {
                let mut za = C64::new(0.0, 0.0);
                let mut zd = C64::new(0.0, 0.0);
                let mut zd2 = C64::new(0.0, 0.0);
                for r in 0..m {
                    za += abuf[r].conj() * r_i[[r, tt]];
                    zd += dbuf[r].conj() * r_i[[r, tt]];
                    zd2 += d2buf[r].conj() * r_i[[r, tt]];
                }
                g += 2.0 * (zd * za.conj()).re;
                h += 2.0 * (zd2 * za.conj()).re + 2.0 * zd.norm_sqr();
            }
            (g, h)
        };
        let start = self.thetas[i];
        let mut theta = start;
        let mut qcur = quality(theta, &mut abuf);
        let scale = fro_norm(&r_i).powi(2) * self.m_norm;
        // phase 1: damped ascent with value backtracking (robust globally)
        for _ in 0..iters {
            let (g, h) = grad_hess(theta, &mut abuf, &mut dbuf, &mut d2buf);
            if g.abs() <= 1e-15 * scale.max(1e-300) {
                break;
            }
            let mut step = if h < 0.0 {
                -g / h
            } else {
                g.signum() * dom.length() / (8.0 * self.m_norm)
            };
            let mut accepted = false;
            for _ in 0..40 {
                let cand = dom.clamp(theta + step);
                let qcand = quality(cand, &mut abuf);
                if qcand >= qcur {
                    theta = cand;
                    qcur = qcand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
                if step.abs() < 1e-18 * dom.length() {
                    break;
                }
            }
            if !accepted {
                break;
            }
        }
        // phase 2: Newton on q' with |q'| acceptance; resolves the position
        // past the floating-point plateau of q itself
        for _ in 0..iters {
            let (g, h) = grad_hess(theta, &mut abuf, &mut dbuf, &mut d2buf);
            if g.abs() <= 1e-16 * scale.max(1e-300) || h >= 0.0 {
                break;
            }
            let mut step = -g / h;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = dom.clamp(theta + step);
                if cand == theta {
                    break;
                }
                let (gc, _) = grad_hess(cand, &mut abuf, &mut dbuf, &mut d2buf);
                if gc.abs() < g.abs() {
                    theta = cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        // closed-form row update at the refit position
        manifold.fill_steering(theta, &mut abuf);
        let mut z = vec![C64::new(0.0, 0.0); t];
        for (tt, zt) in z.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..m {
                acc += abuf[r].conj() * r_i[[r, tt]];
            }
            *zt = acc;
        }
        let znorm = vec_norm(&z);
        let shrink = if znorm > lambda {
            (1.0 - lambda / znorm) / self.m_norm
        } else {
            0.0
        };
        for tt in 0..t {
            self.s[[i, tt]] = z[tt] * shrink;
        }
        for r in 0..m {
            self.a[[r, i]] = abuf[r];
        }
        // residual rebuilt exactly from r_i, no incremental drift
        for tt in 0..t {
            for r in 0..m {
                self.residual[[r, tt]] = r_i[[r, tt]] - self.a[[r, i]] * self.s[[i, tt]];
            }
        }
        self.thetas[i] = theta;
        (theta - start).abs()
    }

    /// Drop numerically dead rows; returns true if anything changed.
    fn drop_dead_rows(&mut self, manifold: &dyn Manifold, x: &Array2<C64>, drop_tol: f64) -> bool {
        let gammas = row_norms(&self.s);
        let keep: Vec<usize> = (0..self.order()).filter(|&i| gammas[i] > drop_tol).collect();
        if keep.len() == self.order() {
            return false;
        }
        self.retain(manifold, x, &keep);
        true
    }

    /// Merge atoms closer than `merge_tol` (amplitude rows add up).
    fn merge_close_atoms(&mut self, manifold: &dyn Manifold, x: &Array2<C64>, merge_tol: f64) -> bool {
        let k = self.order();
        if k < 2 {
            return false;
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| self.thetas[a].partial_cmp(&self.thetas[b]).unwrap());
        let mut merged_any = false;
        let mut absorbed = vec![false; k];
        for w in 0..k - 1 {
            let i = order[w];
            let j = order[w + 1];
            if absorbed[i] || absorbed[j] {
                continue;
            }
            if (self.thetas[i] - self.thetas[j]).abs() < merge_tol {
                let (gi, gj) = {
                    let g = row_norms(&self.s);
                    (g[i], g[j])
                };
                let target = if gi >= gj { i } else { j };
                let source = if gi >= gj { j } else { i };
                for tt in 0..self.s.ncols() {
                    let add = self.s[[source, tt]];
                    self.s[[target, tt]] += add;
                }
                absorbed[source] = true;
                merged_any = true;
            }
        }
        if merged_any {
            let keep: Vec<usize> = (0..k).filter(|&i| !absorbed[i]).collect();
            self.retain(manifold, x, &keep);
        }
        merged_any
    }

    fn retain(&mut self, manifold: &dyn Manifold, x: &Array2<C64>, keep: &[usize]) {
        let t = self.s.ncols();
        let thetas: Vec<f64> = keep.iter().map(|&i| self.thetas[i]).collect();
        let mut s = Array2::zeros((keep.len(), t));
        for (new_i, &old_i) in keep.iter().enumerate() {
            for tt in 0..t {
                s[[new_i, tt]] = self.s[[old_i, tt]];
            }
        }
        *self = Working::new(manifold, x, thetas, s);
    }

    fn insert_atom(&mut self, manifold: &dyn Manifold, x: &Array2<C64>, theta: f64) {
        let t = self.s.ncols();
        let mut thetas = self.thetas.clone();
        thetas.push(theta);
        let mut s = Array2::zeros((self.order() + 1, t));
        for i in 0..self.order() {
            for tt in 0..t {
                s[[i, tt]] = self.s[[i, tt]];
            }
        }
        *self = Working::new(manifold, x, thetas, s);
    }

    /// Worst scaled stationarity violation over active atoms.
    fn stationarity_error(&self, manifold: &dyn Manifold) -> f64 {
        let t = self.s.ncols();
        let m = self.a.nrows();
        let gammas = row_norms(&self.s);
        let mut dbuf = vec![C64::new(0.0, 0.0); m];
        let mut worst = 0.0f64;
        for i in 0..self.order() {
            if gammas[i] == 0.0 {
                continue;
            }
            manifold.fill_derivative(self.thetas[i], &mut dbuf);
            let dnorm = vec_norm(&dbuf).max(1e-300);
            let mut val = 0.0;
            for tt in 0..t {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..m {
                    acc += dbuf[r].conj() * self.residual[[r, tt]];
                }
                val += (acc * (self.s[[i, tt]] / gammas[i]).conj()).re;
            }
            worst = worst.max(val.abs() / dnorm);
        }
        worst
    }

    /// Worst alignment deviation over active atoms.
    fn alignment_error(&self, lambda: f64) -> f64 {
        let t = self.s.ncols();
        let m = self.a.nrows();
        let gammas = row_norms(&self.s);
        let mut worst = 0.0f64;
        for i in 0..self.order() {
            if gammas[i] == 0.0 {
                continue;
            }
            let mut err = 0.0;
            for tt in 0..t {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..m {
                    acc += self.a[[r, i]].conj() * self.residual[[r, tt]];
                }
                err += (acc - self.s[[i, tt]] * (lambda / gammas[i])).norm_sqr();
            }
            worst = worst.max(err.sqrt());
        }
        worst
    }
}

fn steering_cols(manifold: &dyn Manifold, thetas: &[f64]) -> Array2<C64> {
    let m = manifold.num_sensors();
    let mut a = Array2::zeros((m, thetas.len()));
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (j, &theta) in thetas.iter().enumerate() {
        manifold.fill_steering(theta, &mut buf);
        for (i, &v) in buf.iter().enumerate() {
            a[[i, j]] = v;
        }
    }
    a
}

/// Dual function `||a^H(theta) Nhat||_2` as a closure over a residual.
fn dual_value(manifold: &dyn Manifold, residual: &Array2<C64>, theta: f64, buf: &mut Vec<C64>) -> f64 {
    manifold.fill_steering(theta, buf);
    let mut total = 0.0;
    for tt in 0..residual.ncols() {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..residual.nrows() {
            acc += buf[r].conj() * residual[[r, tt]];
        }
        total += acc.norm_sqr();
    }
    total.sqrt()
}

/// Solve the continuous problem at regularization `lambda`.
pub fn solve_class(
    x: &Array2<C64>,
    manifold: &dyn Manifold,
    lambda: f64,
    opts: &ClassOptions,
) -> Result<ClassSolution> {
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig("lambda must be positive".into()));
    }
    let m = manifold.num_sensors();
    if x.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, manifold has {m} sensors",
            x.nrows()
        )));
    }
    let t = x.ncols();
    let dom = manifold.domain();
    let drop_tol = opts.row_drop_factor * fro_norm(x).max(1e-300);

    // seed from a grid solve; the seed only has to be roughly right, the
    // continuous stage owns the certificate, so a stalled grid iterate is
    // acceptable here
    let grid = Grid::uniform(dom, opts.grid_points(m));
    let mut solver_opts = SolverOptions::default();
    solver_opts.tol = 1e-4;
    solver_opts.max_sweeps = 4_000;
    solver_opts.row_drop_factor = opts.row_drop_factor;
    let seed = match solve_group_lasso(x, &grid, manifold, lambda, &solver_opts) {
        Ok(sol) => sol,
        Err(Error::GridSolverStalled { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let support = seed.support.clone();
    let thetas: Vec<f64> = support.iter().map(|&(_, th)| th).collect();
    let mut s = Array2::zeros((thetas.len(), t));
    for (new_i, &(gi, _)) in support.iter().enumerate() {
        for tt in 0..t {
            s[[new_i, tt]] = seed.s_hat[[gi, tt]];
        }
    }
    let mut work = Working::new(manifold, x, thetas, s);

    let scan_points = ((dom.length() / (2.0 * opts.fineness(m))).ceil() as usize + 1).max(64);
    let mut last_violation = (f64::NAN, f64::INFINITY);
    for _round in 0..opts.max_rounds {
        // alternate polishing and amplitude re-solves until stationary
        for _ in 0..200 {
            let mut moved = 0.0f64;
            for i in 0..work.order() {
                moved = moved.max(work.refit_atom(manifold, i, lambda, opts.newton_iters));
            }
            for _ in 0..50 {
                if work.bcd_sweep(lambda) < 1e-15 * fro_norm(x).max(1e-300) {
                    break;
                }
            }
            work.drop_dead_rows(manifold, x, drop_tol);
            work.merge_close_atoms(manifold, x, opts.merge_tol);
            let stat = work.stationarity_error(manifold);
            let align = work.alignment_error(lambda);
            if moved < 1e-14 * dom.length()
                && stat <= 0.05 * opts.tol * lambda
                && align <= 0.05 * opts.tol * lambda
            {
                break;
            }
        }

        // rescan the dual function for violations
        let residual = work.residual.clone();
        let f = |theta: f64| {
            let mut local = vec![C64::new(0.0, 0.0); m];
            dual_value(manifold, &residual, theta, &mut local)
        };
        let (peak_theta, peak) = scan_max(&f, dom, scan_points, 60);
        if peak <= lambda * (1.0 + opts.insertion_rel) {
            // candidate is certified by construction; produce the report
            let unit = manifold.angle_unit();
            let representation = SparseRepresentation::new(
                work.thetas.clone(),
                work.s.clone(),
                unit,
            )?;
            let certificate = certify(&work, manifold, lambda, opts, peak_theta, peak);
            if certificate.passed {
                return Ok(ClassSolution {
                    representation,
                    lambda,
                    residual: work.residual.clone(),
                    certificate,
                });
            }
            last_violation = (peak_theta, peak);
        } else {
            last_violation = (peak_theta, peak);
            // insert an atom at the violating peak unless it collides with an
            // existing one (then the inner loop simply has not converged yet)
            let collides = work
                .thetas
                .iter()
                .any(|&th| (th - peak_theta).abs() < opts.merge_tol);
            if !collides {
                work.insert_atom(manifold, x, peak_theta);
            }
        }
    }
    Err(Error::CertificationFailed {
        rounds: opts.max_rounds,
        theta: last_violation.0,
        violation: last_violation.1,
        alignment: work.alignment_error(lambda),
        stationarity: work.stationarity_error(manifold),
        lambda,
    })
}

fn certify(
    work: &Working,
    manifold: &dyn Manifold,
    lambda: f64,
    opts: &ClassOptions,
    peak_theta: f64,
    peak: f64,
) -> ClassCertificate {
    let alignment_error = work.alignment_error(lambda);
    let stationarity_error = work.stationarity_error(manifold);
    let passed = peak <= lambda * (1.0 + opts.tol)
        && alignment_error <= opts.tol * lambda
        && stationarity_error <= opts.tol * lambda;
    ClassCertificate {
        dual_peak: peak,
        dual_peak_theta: peak_theta,
        alignment_error,
        stationarity_error,
        lambda,
        tol: opts.tol,
        passed,
    }
}

/// Evaluate the optimality certificate for an arbitrary candidate.
pub fn verify_class_optimality(
    candidate: &ClassSolution,
    x: &Array2<C64>,
    manifold: &dyn Manifold,
    tol: f64,
) -> Result<ClassCertificate> {
    let rep = &candidate.representation;
    let m = manifold.num_sensors();
    if x.nrows() != m {
        return Err(Error::DimensionMismatch("X rows != sensors".into()));
    }
    let work = Working::new(manifold, x, rep.thetas.clone(), rep.amplitudes.clone());
    let dom = manifold.domain();
    let fineness = ClassOptions::default().fineness(m);
    let scan_points = ((dom.length() / (2.0 * fineness)).ceil() as usize + 1).max(64);
    let residual = work.residual.clone();
    let f = |theta: f64| {
        let mut local = vec![C64::new(0.0, 0.0); m];
        dual_value(manifold, &residual, theta, &mut local)
    };
    let (peak_theta, peak) = scan_max(&f, dom, scan_points, 60);
    let lambda = candidate.lambda;
    let alignment_error = work.alignment_error(lambda);
    let stationarity_error = work.stationarity_error(manifold);
    let passed = peak <= lambda * (1.0 + tol)
        && alignment_error <= tol * lambda
        && stationarity_error <= tol * lambda;
    Ok(ClassCertificate {
        dual_peak: peak,
        dual_peak_theta: peak_theta,
        alignment_error,
        stationarity_error,
        lambda,
        tol,
        passed,
    })
}

/// Remove rows with `gamma_i <= drop_tol` together with their positions.
pub fn reduce_representation(rep: &SparseRepresentation, drop_tol: f64) -> SparseRepresentation {
    let gammas = rep.row_norms();
    let keep: Vec<usize> = (0..rep.order()).filter(|&i| gammas[i] > drop_tol).collect();
    let thetas: Vec<f64> = keep.iter().map(|&i| rep.thetas[i]).collect();
    let t = rep.snapshots();
    let mut amps = Array2::zeros((keep.len(), t));
    for (new_i, &old_i) in keep.iter().enumerate() {
        for tt in 0..t {
            amps[[new_i, tt]] = rep.amplitudes[[old_i, tt]];
        }
    }
    SparseRepresentation {
        thetas,
        amplitudes: amps,
        unit: rep.unit,
    }
}

/// Asymmetric support distance `max_{a in A} min_{b in B} |a - b|`.
/// Empty `A` gives 0 by convention; empty `B` with nonempty `A` gives
/// infinity.
pub fn set_distance(theta1: &[f64], theta2: &[f64]) -> f64 {
    if theta1.is_empty() {
        return 0.0;
    }
    if theta2.is_empty() {
        return f64::INFINITY;
    }
    theta1
        .iter()
        .map(|&a| {
            theta2
                .iter()
                .map(|&b| (a - b).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Worst-case distance from a domain point to its nearest grid point.
pub fn grid_fineness(grid: &Grid, domain: Interval) -> f64 {
    let pts = grid.points();
    let mut worst = (pts[0] - domain.lo).max(domain.hi - pts[pts.len() - 1]).max(0.0);
    for w in pts.windows(2) {
        worst = worst.max(0.5 * (w[1] - w[0]));
    }
    worst
}

/// Report of the peak-counting properness check.
#[derive(Debug, Clone)]
pub struct MaxCountReport {
    pub count: usize,
    pub locations: Vec<f64>,
    /// True when the polynomial route was ambiguous and the dense scan
    /// decided the result.
    pub used_fallback: bool,
}

/// Count the global maxima of `f(phi) = ||a^H(phi) Z||_2` for a ULA by
/// locating the unit-circle double roots of the associated polynomial; falls
/// back to a dense scan with local refinement when root multiplicities are
/// numerically ambiguous.
pub fn properness_max_count(z: &Array2<C64>, ula: &UlaElectrical) -> Result<MaxCountReport> {
    let m = ula.m;
    if z.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "Z has {} rows, array has {m} sensors",
            z.nrows()
        )));
    }
    if fro_norm(z) == 0.0 {
        return Err(Error::InvalidConfig("Z must be nonzero".into()));
    }
    let t_mat = {
        let zh = crate::linalg::adjoint(z);
        z.dot(&zh)
    };
    // diagonal sums: alpha in 0..=2(m-1) collects the (j - i = alpha - m + 1)
    // diagonal of Z Z^H
    let mut t_alpha = vec![C64::new(0.0, 0.0); 2 * m - 1];
    for i in 0..m {
        for j in 0..m {
            let alpha = (j as isize - i as isize + m as isize - 1) as usize;
            t_alpha[alpha] += t_mat[[i, j]];
        }
    }
    let spectrum = |phi: f64| {
        let mut buf = vec![C64::new(0.0, 0.0); m];
        ula.fill_steering(phi, &mut buf);
        let mut total = 0.0;
        for tt in 0..z.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..m {
                acc += buf[r].conj() * z[[r, tt]];
            }
            total += acc.norm_sqr();
        }
        total
    };
    let dom = ula.domain();
    let scan_points = (64 * m).max(4096);
    let (_, lambda_peak) = scan_max(&spectrum, dom, scan_points, 80);

    // S(z) = sum_alpha T_alpha z^alpha - lambda_peak z^{m-1}
    let mut coeffs = t_alpha.clone();
    coeffs[m - 1] -= C64::new(lambda_peak, 0.0);

    let coeff_scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let t_scale = t_alpha.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if coeff_scale < 1e-12 * t_scale {
        return Err(Error::InvalidConfig(
            "spectrum is numerically flat; peak counting is undefined".into(),
        ));
    }

    let peak_tol = 1e-9;
    let mut used_fallback = false;
    let mut locations = polynomial_peaks(&coeffs, &spectrum, lambda_peak, dom, peak_tol);
    let scan_locs = scan_peaks(&spectrum, lambda_peak, dom, scan_points, peak_tol);
    if locations.len() != scan_locs.len() {
        used_fallback = true;
        locations = scan_locs;
    }
    Ok(MaxCountReport {
        count: locations.len(),
        locations,
        used_fallback,
    })
}

fn polynomial_peaks(
    coeffs: &[C64],
    spectrum: &dyn Fn(f64) -> f64,
    lambda_peak: f64,
    dom: Interval,
    peak_tol: f64,
) -> Vec<f64> {
    let roots = poly::roots(coeffs);
    let mut candidates: Vec<f64> = Vec::new();
    for z in roots {
        if (z.norm() - 1.0).abs() > 1e-4 {
            continue;
        }
        // F(phi) = S(z)/z^{m-1} + lambda at z = e^{-j phi}
        let phi = -z.arg();
        if !dom.contains(phi) {
            continue;
        }
        // polish on the spectrum itself
        let half = dom.length() * 1e-4;
        let (phi, val) = refine_max(
            spectrum,
            dom.clamp(phi - half),
            dom.clamp(phi + half),
            60,
        );
        if val >= lambda_peak * (1.0 - peak_tol) {
            candidates.push(phi);
        }
    }
    cluster(candidates)
}

fn scan_peaks(
    spectrum: &dyn Fn(f64) -> f64,
    lambda_peak: f64,
    dom: Interval,
    scan_points: usize,
    peak_tol: f64,
) -> Vec<f64> {
    let peaks = local_maxima(spectrum, dom, scan_points, 60);
    let kept: Vec<f64> = peaks
        .into_iter()
        .filter(|&(_, v)| v >= lambda_peak * (1.0 - peak_tol))
        .map(|(phi, _)| phi)
        .collect();
    cluster(kept)
}

fn cluster(mut phis: Vec<f64>) -> Vec<f64> {
    phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for phi in phis {
        match out.last() {
            Some(&last) if (phi - last).abs() < 1e-6 => {}
            _ => out.push(phi),
        }
    }
    // the ULA spectrum is 2*pi periodic: +pi and -pi describe the same peak
    if out.len() >= 2 {
        let first = out[0];
        let last = out[out.len() - 1];
        if (first + std::f64::consts::PI).abs() < 1e-6
            && (last - std::f64::consts::PI).abs() < 1e-6
        {
            out.pop();
        }
    }
    out
}
