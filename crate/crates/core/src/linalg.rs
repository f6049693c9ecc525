//! Dense complex linear algebra: eigenvalues of general matrices by the
//! shifted QR iteration, singular value estimates by power iteration, and
//! an unrestarted GMRES. nalgebra supplies storage and LU factorization;
//! the eigen solver is implemented here because the discrete multi-trace
//! operators are complex and non-normal.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("QR iteration failed to converge")]
    NoConvergence,
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("GMRES stalled at relative residual {0:.3e}")]
    GmresStalled(f64),
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// In-place Householder reduction to upper Hessenberg form (similarity).
fn hessenberg(a: &mut CMat) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut xnorm = 0.0f64;
        for i in k + 1..n {
            xnorm += a[(i, k)].norm_sqr();
        }
        let xnorm = xnorm.sqrt();
        if xnorm < 1e-300 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        // v = x + phase * |x| e1, normalized
        let mut v = vec![ZERO; n];
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // A <- (I - 2 v v^H) A
        for j in k..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += v[i].conj() * a[(i, j)];
            }
            s *= 2.0;
            for i in k + 1..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // A <- A (I - 2 v v^H)
        for i in 0..n {
            let mut s = ZERO;
            for j in k + 1..n {
                s += a[(i, j)] * v[j];
            }
            s *= 2.0;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j].conj();
            }
        }
    }
}

/// Complex Givens rotation `[c, s; -conj(s), c]` (real `c`) zeroing `y`
/// against `x`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if rho < 1e-300 {
        return (1.0, ZERO);
    }
    if x.norm() < 1e-300 {
        return (0.0, ONE);
    }
    ((x.norm()) / rho, (x / x.norm()) * y.conj() / rho)
}

/// Eigenvalues of a general complex matrix: Hessenberg reduction followed
/// by the explicit single-shift QR iteration with Wilkinson shifts.
pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let mut iter = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[(0, 0)]);
            hi = 0;
            continue;
        }
        // deflation scan from the bottom of the active block; the
        // tolerance relaxes slowly on stubborn windows (clusters of
        // defective eigenvalues leave noise-level couplings that shifted
        // QR cannot reduce further)
        let tol = f64::EPSILON * 2f64.powi((iter as i32 / 10).min(40));
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(lo, lo - 1)].norm() <= tol * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eigs.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        if lo == hi - 2 {
            // 2x2 window: closed form. Avoids stalling when both
            // off-diagonal entries sit just above the deflation threshold
            // and the Wilkinson shift is pure rounding noise.
            let (p, q) = (hi - 2, hi - 1);
            let (aa, bb, cc, dd) = (h[(p, p)], h[(p, q)], h[(q, p)], h[(q, q)]);
            let tr = aa + dd;
            let disc = (tr * tr - 4.0 * (aa * dd - bb * cc)).sqrt();
            eigs.push(0.5 * (tr + disc));
            eigs.push(0.5 * (tr - disc));
            hi -= 2;
            iter = 0;
            continue;
        }
        iter += 1;
        // generous cap: the relaxed deflation tolerance needs a few
        // hundred iterations to clear noise-level couplings in defective
        // clusters
        if iter > 30 * (hi - lo) + 400 {
            return Err(LinalgError::NoConvergence);
        }
        // Wilkinson shift from the trailing 2x2 block
        let (p, q) = (hi - 2, hi - 1);
        let (aa, bb, cc, dd) = (h[(p, p)], h[(p, q)], h[(q, p)], h[(q, q)]);
        let shift = if iter.is_multiple_of(12) {
            // exceptional shift to break limit cycles
            dd + Complex64::new(cc.norm() + bb.norm(), 0.0)
        } else {
            let tr = aa + dd;
            let disc = (tr * tr - 4.0 * (aa * dd - bb * cc)).sqrt();
            let mu1 = 0.5 * (tr + disc);
            let mu2 = 0.5 * (tr - disc);
            if (mu1 - dd).norm() < (mu2 - dd).norm() {
                mu1
            } else {
                mu2
            }
        };
        for i in lo..hi {
            h[(i, i)] -= shift;
        }
        // QR by Givens on the decoupled window, then RQ
        let mut rots = Vec::with_capacity(hi - lo - 1);
        for k in lo..hi - 1 {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..hi {
                let (u, v) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = c * u + s * v;
                h[(k + 1, j)] = -s.conj() * u + c * v;
            }
            rots.push((c, s));
        }
        for (k, (c, s)) in (lo..hi - 1).zip(rots) {
            for i in lo..(k + 2).min(hi) {
                let (u, v) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = c * u + s.conj() * v;
                h[(i, k + 1)] = -s * u + c * v;
            }
        }
        for i in lo..hi {
            h[(i, i)] += shift;
        }
    }
    Ok(eigs)
}

/// Relative eigenpair residual `|A v - lambda v| / |v|` with `v` obtained
/// by one pass of shifted inverse iteration.
pub fn eigen_residual(a: &CMat, lambda: Complex64) -> Result<f64, LinalgError> {
    let n = a.nrows();
    let scale = a.norm();
    let shift = lambda + Complex64::new(1e-10 * scale.max(1.0), 0.0);
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut v = CVec::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64).sin(), 0.3));
    for _ in 0..3 {
        let w = lu.solve(&v).ok_or(LinalgError::Singular)?;
        let nw = w.norm();
        if !nw.is_finite() || nw == 0.0 {
            return Err(LinalgError::Singular);
        }
        v = w / Complex64::new(nw, 0.0);
    }
    Ok((a * &v - v.scale(1.0) * lambda).norm() / v.norm())
}

fn start_vector(n: usize) -> CVec {
    CVec::from_fn(n, |i, _| {
        Complex64::new(0.7 + ((3 * i + 1) as f64).sin(), 0.2 + ((7 * i + 2) as f64).cos())
    })
}

/// Largest singular value by power iteration on `A^H A`.
pub fn max_singular_value(a: &CMat) -> f64 {
    let mut v = start_vector(a.ncols());
    v /= Complex64::new(v.norm(), 0.0);
    let mut sigma = 0.0f64;
    for _ in 0..200 {
        let w = a.adjoint() * (a * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        let done = (next - sigma).abs() <= 1e-12 * next;
        sigma = next;
        v = w / Complex64::new(nw, 0.0);
        if done {
            break;
        }
    }
    sigma
}

/// Spectral (operator 2-) norm.
pub fn spectral_norm(a: &CMat) -> f64 {
    max_singular_value(a)
}

/// Smallest singular value by inverse power iteration, using LU solves
/// with `A` and `A^H`.
pub fn min_singular_value(a: &CMat) -> Result<f64, LinalgError> {
    let lu = a.clone().lu();
    let lu_h = a.adjoint().lu();
    let mut v = start_vector(a.ncols());
    v /= Complex64::new(v.norm(), 0.0);
    let mut rho = 0.0f64;
    for _ in 0..200 {
        let x = lu.solve(&v).ok_or(LinalgError::Singular)?;
        let w = lu_h.solve(&x).ok_or(LinalgError::Singular)?;
        let nw = w.norm();
        if !nw.is_finite() {
            return Err(LinalgError::Singular);
        }
        if nw == 0.0 {
            return Ok(0.0);
        }
        let done = (nw - rho).abs() <= 1e-12 * nw;
        rho = nw;
        v = w / Complex64::new(nw, 0.0);
        if done {
            break;
        }
    }
    // rho estimates the largest eigenvalue of (A^H A)^{-1}
    Ok(1.0 / rho.sqrt())
}

/// Unrestarted GMRES for a matrix-free operator. Returns the solution and
/// the relative residual history.
pub fn gmres<F: Fn(&CVec) -> CVec>(
    op: F,
    b: &CVec,
    tol: f64,
    max_iter: usize,
) -> Result<(CVec, Vec<f64>), LinalgError> {
    let n = b.len();
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok((CVec::zeros(n), vec![0.0]));
    }
    let m = max_iter.min(n);
    let mut basis: Vec<CVec> = vec![b / Complex64::new(bnorm, 0.0)];
    // Hessenberg of the Arnoldi relation, updated by Givens to triangular
    let mut r: Vec<Vec<Complex64>> = Vec::new();
    let mut rots: Vec<(f64, Complex64)> = Vec::new();
    let mut g = vec![Complex64::new(bnorm, 0.0)];
    let mut history = vec![1.0f64];
    let mut converged = false;
    for j in 0..m {
        let mut w = op(&basis[j]);
        let mut col = vec![ZERO; j + 2];
        for (i, q) in basis.iter().enumerate() {
            let hij = q.dotc(&w);
            col[i] = hij;
            w -= q * hij;
        }
        let hj1 = w.norm();
        col[j + 1] = Complex64::new(hj1, 0.0);
        // apply previous rotations to the new column
        for (i, (c, s)) in rots.iter().enumerate() {
            let (u, v) = (col[i], col[i + 1]);
            col[i] = *c * u + *s * v;
            col[i + 1] = -s.conj() * u + *c * v;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        let u = col[j];
        col[j] = c * u + s * col[j + 1];
        col[j + 1] = ZERO;
        rots.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s.conj() * gj);
        r.push(col);
        let rel = g[j + 1].norm() / bnorm;
        history.push(rel);
        if rel < tol {
            converged = true;
            break;
        }
        if hj1 < 1e-300 {
            break;
        }
        basis.push(w / Complex64::new(hj1, 0.0));
    }
    let k = r.len();
    if !converged && history[k] >= tol {
        return Err(LinalgError::GmresStalled(history[k]));
    }
    // back substitution
    let mut y = vec![ZERO; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            s -= r[jj][i] * yj;
        }
        y[i] = s / r[i][i];
    }
    let mut x = CVec::zeros(n);
    for (i, yi) in y.iter().enumerate() {
        x += &basis[i] * *yi;
    }
    Ok((x, history))
}
