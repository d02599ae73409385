//! Small dense linear algebra over a generic scalar.
//!
//! Everything in this crate works on matrices of a few rows and columns
//! (inputs `m <= 10`, constraints `p <= 12`), so the routines below favor
//! robustness and determinism over asymptotics: partial-pivot LU, Cholesky,
//! cyclic Jacobi for symmetric eigenvalues, one-sided Jacobi for singular
//! values, and Lawson-Hanson nonnegative least squares.

use crate::scalar::{dot, norm2, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// A^T x without materializing the transpose.
    pub fn tr_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j] += self[(i, j)] * x[i];
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Sub-matrix with the given row indices, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Mat<T> {
        let mut out = Mat::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solve `a x = b` by LU with partial pivoting. `None` if numerically singular.
pub fn lu_solve<T: Real>(a: &Mat<T>, b: &[T]) -> Option<Vec<T>> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(b.len(), a.rows);
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = a.max_abs().max(T::one());
    let tiny = scale * T::epsilon() * T::of(n.max(1) as f64 * 8.0);
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[(i, k)].abs() > lu[(piv, k)].abs() {
                piv = i;
            }
        }
        if lu[(piv, k)].abs() <= tiny {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= lu[(i, j)] * x[j];
        }
        x[i] = s / lu[(i, i)];
    }
    Some(x)
}

/// Cholesky factor L (lower) of a symmetric positive definite matrix.
/// `None` when a pivot drops below `tol`.
pub fn cholesky<T: Real>(a: &Mat<T>, tol: T) -> Option<Mat<T>> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= tol {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solve `a x = b` given the Cholesky factor of `a`.
pub fn cholesky_solve<T: Real>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        for j in 0..i {
            let v = y[j];
            y[i] -= l[(i, j)] * v;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let v = y[j];
            y[i] -= l[(j, i)] * v;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of the second return value.
pub fn sym_eigen<T: Real>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    let tol = m.max_abs().max(T::one()) * T::epsilon() * T::of(n.max(1) as f64);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() <= tol {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::of(2.0) * m[(p, q)]);
                let t = {
                    let s = if theta >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    s / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(T, Vec<T>)> = (0..n).map(|i| (m[(i, i)], v.col(i))).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let vals = pairs.iter().map(|p| p.0).collect();
    let mut vecs = Mat::zeros(n, n);
    for (j, (_, col)) in pairs.iter().enumerate() {
        for i in 0..n {
            vecs[(i, j)] = col[i];
        }
    }
    (vals, vecs)
}

/// Thin SVD `a = u diag(sigma) v^T` by one-sided Jacobi.
/// Singular values come back in descending order; `u` is rows x k and
/// `v` is cols x k with `k = min(rows, cols)`.
pub struct Svd<T> {
    pub u: Mat<T>,
    pub sigma: Vec<T>,
    pub v: Mat<T>,
}

pub fn svd<T: Real>(a: &Mat<T>) -> Svd<T> {
    if a.rows < a.cols {
        let s = svd(&a.transpose());
        return Svd {
            u: s.v,
            sigma: s.sigma,
            v: s.u,
        };
    }
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = Mat::identity(n);
    let tol = T::epsilon() * T::of(m.max(1) as f64);
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let cp = w.col(p);
                let cq = w.col(q);
                let app = dot(&cp, &cp);
                let aqq = dot(&cq, &cq);
                let apq = dot(&cp, &cq);
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    s / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut trips: Vec<(T, Vec<T>, Vec<T>)> = (0..n)
        .map(|j| {
            let cj = w.col(j);
            let s = norm2(&cj);
            let uj = if s > T::zero() {
                cj.iter().map(|&x| x / s).collect()
            } else {
                vec![T::zero(); m]
            };
            (s, uj, v.col(j))
        })
        .collect();
    trips.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let sigma: Vec<T> = trips.iter().map(|t| t.0).collect();
    let mut u = Mat::zeros(m, n);
    let mut vv = Mat::zeros(n, n);
    for (j, (_, uj, vj)) in trips.iter().enumerate() {
        for i in 0..m {
            u[(i, j)] = uj[i];
        }
        for i in 0..n {
            vv[(i, j)] = vj[i];
        }
    }
    Svd { u, sigma, v: vv }
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn rank<T: Real>(a: &Mat<T>, rel_tol: T) -> usize {
    if a.rows == 0 || a.cols == 0 {
        return 0;
    }
    let s = svd(a).sigma;
    let smax = s[0];
    if smax == T::zero() {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Minimum-norm least-squares solution of `a x ~ b` via the SVD, with
/// singular values below `rcond * sigma_max` treated as zero.
pub fn lstsq<T: Real>(a: &Mat<T>, b: &[T], rcond: T) -> Vec<T> {
    assert_eq!(b.len(), a.rows);
    let s = svd(a);
    let k = s.sigma.len();
    let smax = s.sigma.first().copied().unwrap_or(T::zero());
    let cut = rcond * smax;
    let mut x = vec![T::zero(); a.cols];
    for j in 0..k {
        if s.sigma[j] <= cut || s.sigma[j] == T::zero() {
            continue;
        }
        let uj = s.u.col(j);
        let coef = dot(&uj, b) / s.sigma[j];
        for i in 0..a.cols {
            x[i] += coef * s.v[(i, j)];
        }
    }
    x
}

/// Lawson-Hanson nonnegative least squares: minimize ||a x - b|| over x >= 0.
pub fn nnls<T: Real>(a: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = a.cols;
    let mut x = vec![T::zero(); n];
    let mut passive = vec![false; n];
    let rcond = T::of(1e-12);
    // entry threshold per column: a gradient is significant relative to the
    // column scale times the residual scale (columns may differ by many
    // orders of magnitude)
    let col_norms: Vec<T> = (0..n).map(|j| norm2(&a.col(j))).collect();
    let sqrt_eps = T::epsilon().sqrt();
    for _outer in 0..(8 * n.max(2)) {
        let resid = vsub_vec(b, &a.matvec(&x));
        let rn = norm2(&resid);
        let grad = a.tr_matvec(&resid);
        let mut best: Option<(usize, T)> = None;
        for j in 0..n {
            let tol = sqrt_eps * col_norms[j] * rn;
            if !passive[j]
                && grad[j] > tol
                && col_norms[j] > T::zero()
                && best.is_none_or(|(_, g)| grad[j] / col_norms[j] > g)
            {
                best = Some((j, grad[j] / col_norms[j]));
            }
        }
        let Some((enter, _)) = best else { break };
        passive[enter] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let ap = select_cols(a, &idx);
            let z = lstsq(&ap, b, rcond);
            if z.iter().all(|&v| v > T::zero()) {
                x = vec![T::zero(); n];
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = T::one();
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= T::zero() {
                    let d = x[j] - z[k];
                    if d > T::zero() {
                        alpha = alpha.min(x[j] / d);
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] = x[j] + alpha * (z[k] - x[j]);
            }
            let mut dropped = false;
            let drop_tol = T::of(1e-14) * (T::one() + norm2(&x));
            for &j in &idx {
                if x[j] <= drop_tol {
                    x[j] = T::zero();
                    passive[j] = false;
                    dropped = true;
                }
            }
            if !dropped {
                // numerical stall: accept clipped iterate
                for v in x.iter_mut() {
                    *v = v.max(T::zero());
                }
                break;
            }
        }
    }
    x
}

fn vsub_vec<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

fn select_cols<T: Real>(a: &Mat<T>, idx: &[usize]) -> Mat<T> {
    let mut out = Mat::zeros(a.rows, idx.len());
    for i in 0..a.rows {
        for (k, &j) in idx.iter().enumerate() {
            out[(i, k)] = a[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn lu_solves_small_system() {
        let a = mat(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let x = lu_solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(lu_solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn cholesky_round_trip() {
        let a = mat(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = cholesky(&a, 1e-12).unwrap();
        let x = cholesky_solve(&l, &[8.0, 7.0]);
        let ax = a.matvec(&x);
        assert!((ax[0] - 8.0).abs() < 1e-12 && (ax[1] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues_of_diagonalizable() {
        let a = mat(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (vals, _) = sym_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn svd_rank_detects_dependence() {
        // rows 1 and 2 are parallel
        let a = mat(&[&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(rank(&a, 1e-9), 2);
        let s = svd(&a).sigma;
        assert!(s[2] < 1e-12);
    }

    #[test]
    fn robinson_active_gradients_have_rank_three() {
        // frozen from hand elimination of the four active rows at the origin
        let a = mat(&[
            &[0.0, -1.0, 1.0, 0.0],
            &[0.0, 1.0, 1.0, 0.0],
            &[-1.0, 0.0, 1.0, 0.0],
            &[1.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(rank(&a, 1e-9), 3);
    }

    #[test]
    fn lstsq_minimum_norm_on_rank_deficient() {
        let a = mat(&[&[1.0, 1.0]]);
        let x = lstsq(&a, &[2.0], 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_clips_negative_component() {
        // unconstrained solution is (-1, 2); NNLS must find x >= 0
        let a = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let x = nnls(&a, &[-1.0, 2.0]);
        assert!(x[0].abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_solves_degenerate_stationarity() {
        // A^T lambda = (0,0,1,0) with the Robinson origin gradients: any
        // nonnegative combination with lambda1=lambda2, lambda3=lambda4,
        // sum = 1 works; check residual is tiny and lambda >= 0.
        let at = mat(&[
            &[0.0, 0.0, -1.0, 1.0],
            &[-1.0, 1.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0, 1.0],
            &[0.0, 0.0, 0.0, 0.0],
        ]);
        let target = [0.0, 0.0, 1.0, 0.0];
        let lam = nnls(&at, &target);
        assert!(lam.iter().all(|&l| l >= 0.0));
        let r = vsub_vec(&target, &at.matvec(&lam));
        assert!(norm2(&r) < 1e-10, "residual {:?}", r);
    }
}
