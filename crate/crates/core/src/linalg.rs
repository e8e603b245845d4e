//! Small dense linear algebra over complex matrices.
//!
//! Everything here targets the small systems that appear in the estimators
//! (support sizes up to a few dozen); partial-pivot LU and pivoted Cholesky
//! are ample at these sizes and keep the crate free of external LAPACK
//! bindings.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    let (r, c) = a.dim();
    Array2::from_shape_fn((c, r), |(i, j)| a[[j, i]].conj())
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean norm of a complex row/vector slice.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// 2-norms of the rows of a complex matrix.
pub fn row_norms(a: &Array2<C64>) -> Array1<f64> {
    Array1::from_iter(
        a.rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()),
    )
}

/// Inner product `sum_i conj(a_i) b_i`.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

/// LU factorization with partial pivoting, in place. Returns the pivot
/// permutation or an error when a pivot falls below `tiny`.
fn lu_decompose(a: &mut Array2<C64>) -> Result<Vec<usize>> {
    let n = a.nrows();
    let mut piv: Vec<usize> = (0..n).collect();
    let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    let tiny = scale * 1e-300;
    for k in 0..n {
        let mut p = k;
        let mut best = a[[k, k]].norm();
        for i in k + 1..n {
            let v = a[[i, k]].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tiny {
            return Err(Error::RankDeficient { cond: f64::INFINITY });
        }
        if p != k {
            piv.swap(p, k);
            for j in 0..n {
                let tmp = a[[k, j]];
                a[[k, j]] = a[[p, j]];
                a[[p, j]] = tmp;
            }
        }
        let pivot = a[[k, k]];
        for i in k + 1..n {
            let factor = a[[i, k]] / pivot;
            a[[i, k]] = factor;
            for j in k + 1..n {
                let sub = factor * a[[k, j]];
                a[[i, j]] -= sub;
            }
        }
    }
    Ok(piv)
}

fn lu_solve_one(lu: &Array2<C64>, piv: &[usize], b: &Array1<C64>) -> Array1<C64> {
    let n = lu.nrows();
    let mut x = Array1::from_iter(piv.iter().map(|&p| b[p]));
    for i in 1..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= lu[[i, j]] * x[j];
        }
        x[i] = acc;
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= lu[[i, j]] * x[j];
        }
        x[i] = acc / lu[[i, i]];
    }
    x
}

/// Solve `A X = B` for square complex `A`.
pub fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve: A is {}x{}, B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let mut lu = a.clone();
    let piv = lu_decompose(&mut lu)?;
    let mut out = Array2::zeros(b.dim());
    for j in 0..b.ncols() {
        let col = b.column(j).to_owned();
        let x = lu_solve_one(&lu, &piv, &col);
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

/// Inverse of a square complex matrix.
pub fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let eye = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    solve(a, &eye)
}

/// Solve `A X = B` for square real `A`.
pub fn solve_real(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let ac = a.mapv(|x| C64::new(x, 0.0));
    let bc = b.mapv(|x| C64::new(x, 0.0));
    Ok(solve(&ac, &bc)?.mapv(|z| z.re))
}

/// Inverse of a square real matrix.
pub fn inverse_real(a: &Array2<f64>) -> Result<Array2<f64>> {
    Ok(inverse(&a.mapv(|x| C64::new(x, 0.0)))?.mapv(|z| z.re))
}

/// 1-norm condition estimate of a real matrix via its explicit inverse.
pub fn condition_1norm(a: &Array2<f64>) -> f64 {
    let norm1 = |m: &Array2<f64>| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    };
    match inverse_real(a) {
        Ok(inv) => norm1(a) * norm1(&inv),
        Err(_) => f64::INFINITY,
    }
}

/// Pivoted Cholesky factor of a Hermitian PSD matrix: returns `M` (n x r)
/// with `M M^H ~= A`, where `r` is the numerical rank at `tol` relative to
/// the largest diagonal entry.
pub fn pivoted_cholesky(a: &Array2<C64>, tol: f64) -> Array2<C64> {
    let n = a.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    let mut l = Array2::<C64>::zeros((n, n));
    let mut perm: Vec<usize> = (0..n).collect();
    let thresh = diag.iter().cloned().fold(0.0f64, f64::max) * tol;
    let mut rank = 0;
    for k in 0..n {
        // pivot on the largest remaining diagonal
        let (p, &dmax) = diag[k..]
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .map(|(i, d)| (i + k, d))
            .unwrap();
        if dmax <= thresh {
            break;
        }
        perm.swap(k, p);
        diag.swap(k, p);
        for j in 0..k {
            let tmp = l[[k, j]];
            l[[k, j]] = l[[p, j]];
            l[[p, j]] = tmp;
        }
        let lkk = dmax.sqrt();
        l[[k, k]] = C64::new(lkk, 0.0);
        for i in k + 1..n {
            let mut v = a[[perm[i], perm[k]]];
            for j in 0..k {
                v -= l[[i, j]] * l[[k, j]].conj();
            }
            let lik = v / lkk;
            l[[i, k]] = lik;
            diag[i] -= lik.norm_sqr();
        }
        rank = k + 1;
    }
    // undo the row permutation and truncate to the numerical rank
    let mut out = Array2::<C64>::zeros((n, rank));
    for i in 0..n {
        for j in 0..rank {
            out[[perm[i], j]] = l[[i, j]];
        }
    }
    out
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        let scale = (0..n).map(|i| m[[i, i]].abs()).fold(1e-300, f64::max);
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = array![[c(2.0, 1.0), c(0.0, -1.0)], [c(1.0, 0.0), c(3.0, 0.5)]];
        let x_true = array![[c(1.0, -2.0)], [c(0.5, 0.25)]];
        let b = a.dot(&x_true);
        let x = solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(x_true.iter()) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        let b = array![[c(1.0, 0.0)], [c(1.0, 0.0)]];
        assert!(solve(&a, &b).is_err());
    }

    #[test]
    fn pivoted_cholesky_reconstructs_low_rank() {
        // rank-1 PSD matrix u u^H
        let u = [c(1.0, 0.0), c(0.6, -0.8), c(-0.3, 0.4)];
        let a = Array2::from_shape_fn((3, 3), |(i, j)| u[i] * u[j].conj());
        let m = pivoted_cholesky(&a, 1e-12);
        assert_eq!(m.ncols(), 1);
        let rec = m.dot(&adjoint(&m));
        for (x, y) in rec.iter().zip(a.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobi_eigenvalues_match_analytic() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let ev = sym_eigenvalues(&a);
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
    }
}
