//! Smallest eigenpair of a symmetric pencil `A x = λ B x` (`B` positive definite).
//!
//! A shift `σ` below the spectrum is located with Cholesky definiteness tests
//! (and bisection when a failing shift brackets it), then shift-invert
//! subspace iteration with Rayleigh–Ritz extraction converges the lowest pair.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandedCholesky, Ordering};
use crate::error::{Error, Result};
use crate::math::{abs, dot_slice, norm_slice, sqrt};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub block: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { block: 8, tol: 1e-10, max_iter: 400 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub shift: f64,
    pub factorizations: usize,
}

/// Ratio scale of the pencil, used to size trial shifts.
fn pencil_scale(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    let da = a.diagonal();
    let db = b.diagonal();
    let s = da.iter().zip(&db).filter(|(_, &y)| y > 0.0).map(|(x, y)| abs(*x) / y).fold(0.0, f64::max);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn shifted(a: &CsrMatrix, b: &CsrMatrix, sigma: f64) -> CsrMatrix {
    CsrMatrix::combination(&[(1.0, a), (-sigma, b)])
}

/// Finds `σ ≤ λ_min` with `A − σB` positive definite, as tight as cheap bisection allows.
fn lower_shift(a: &CsrMatrix, b: &CsrMatrix, ord: &Ordering, count: &mut usize) -> Result<(f64, BandedCholesky)> {
    let s = pencil_scale(a, b);
    let mut sigma = -1e-7 * s;
    let mut fail: Option<f64> = None;
    let mut ok = None;
    for _ in 0..60 {
        *count += 1;
        match BandedCholesky::factor(&shifted(a, b, sigma), ord) {
            Ok(ch) => {
                ok = Some((sigma, ch));
                break;
            }
            Err(_) => {
                fail = Some(sigma);
                sigma = if sigma > -1e-3 * s { -1e-3 * s } else { 4.0 * sigma };
            }
        }
    }
    let (mut lo, mut ch) = ok.ok_or(Error::EigenNonConvergence { iterations: 60, residual: f64::INFINITY })?;
    // every diagonal ratio is a Rayleigh quotient, hence an upper bound
    let rayleigh = a.diagonal().iter().zip(b.diagonal()).filter(|(_, y)| *y > 0.0).map(|(x, y)| x / y).fold(f64::INFINITY, f64::min);
    let bound = match fail {
        Some(f) => Some(f.min(rayleigh)),
        None if rayleigh.is_finite() => Some(rayleigh),
        None => None,
    };
    if let Some(mut hi) = bound {
        for _ in 0..60 {
            if hi - lo <= 1e-3 * abs(lo).max(abs(hi)) + 1e-9 * s {
                break;
            }
            let mid = 0.5 * (lo + hi);
            *count += 1;
            match BandedCholesky::factor(&shifted(a, b, mid), ord) {
                Ok(c) => {
                    lo = mid;
                    ch = c;
                }
                Err(_) => hi = mid,
            }
        }
    }
    Ok((lo, ch))
}

/// Deterministic pseudo-random start vectors.
fn start_block(n: usize, p: usize) -> Vec<Vec<f64>> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    (0..p)
        .map(|_| {
            (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect()
        })
        .collect()
}

/// Orthonormalizes `ys` in the `B` inner product (modified Gram–Schmidt, twice).
/// Nearly dependent columns are dropped.
fn b_orthonormalize(ys: &mut Vec<Vec<f64>>, b: &CsrMatrix) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(ys.len());
    let mut bout: Vec<Vec<f64>> = Vec::with_capacity(ys.len());
    for y in ys.drain(..) {
        let mut y = y;
        let n0 = sqrt(dot_slice(&y, &b.mul_vec(&y)));
        if !(n0 > 0.0) {
            continue;
        }
        for _ in 0..2 {
            for (q, bq) in out.iter().zip(&bout) {
                let c = dot_slice(bq, &y);
                y.iter_mut().zip(q).for_each(|(yi, qi)| *yi -= c * qi);
            }
        }
        let by = b.mul_vec(&y);
        let nrm = sqrt(dot_slice(&y, &by));
        if nrm > 1e-10 * n0 {
            y.iter_mut().for_each(|v| *v /= nrm);
            out.push(y);
            bout.push(by.into_iter().map(|v| v / nrm).collect());
        }
    }
    *ys = out;
}

/// Smallest eigenpair of `A x = λ B x`. The vector is `B`-normalized.
pub fn smallest_generalized(a: &CsrMatrix, b: &CsrMatrix, ord: &Ordering, opts: EigenOptions) -> Result<EigenPair> {
    let n = a.nrows;
    if n == 0 {
        return Err(Error::Dimension { expected: 1, got: 0 });
    }
    let mut factorizations = 0;
    let (sigma, ch) = lower_shift(a, b, ord, &mut factorizations)?;
    let p = opts.block.min(n).max(1);
    let mut x = start_block(n, p);
    // backward-error residual: ‖Ax − λBx‖ / ((‖A‖ + |λ|‖B‖)‖x‖)
    let a_scale = a.max_abs();
    let b_scale = b.max_abs();
    let mut last_res = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mut y: Vec<Vec<f64>> = x.iter().map(|xi| ch.solve(&b.mul_vec(xi))).collect();
        b_orthonormalize(&mut y, b);
        let m = y.len();
        let ay: Vec<Vec<f64>> = y.iter().map(|yi| a.mul_vec(yi)).collect();
        let mut proj = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = dot_slice(&y[i], &ay[j]);
                proj[i * m + j] = v;
                proj[j * m + i] = v;
            }
        }
        let (vals, vecs) = jacobi_eigen(&proj, m);
        x = (0..m)
            .map(|k| {
                let mut v = vec![0.0; n];
                for i in 0..m {
                    let c = vecs[i * m + k];
                    v.iter_mut().zip(&y[i]).for_each(|(vi, yi)| *vi += c * yi);
                }
                v
            })
            .collect();
        let lam = vals[0];
        let ax = a.mul_vec(&x[0]);
        let bx = b.mul_vec(&x[0]);
        let r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - lam * q).collect();
        let denom = (a_scale + abs(lam) * b_scale) * norm_slice(&x[0]);
        let res = if denom > 0.0 { norm_slice(&r) / denom } else { 0.0 };
        last_res = res;
        if res < opts.tol {
            return Ok(EigenPair { value: lam, vector: x.swap_remove(0), iterations: it, residual: res, shift: sigma, factorizations });
        }
    }
    Err(Error::EigenNonConvergence { iterations: opts.max_iter, residual: last_res })
}

/// Cyclic Jacobi eigen-decomposition of a dense symmetric `n × n` row-major matrix.
/// Returns ascending eigenvalues and the eigenvector matrix (columns, row-major storage).
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i * n + i] * a[i * n + i];
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off <= 1e-30 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 { 1.0 / (theta + sqrt(1.0 + theta * theta)) } else { -1.0 / (-theta + sqrt(1.0 + theta * theta)) };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap_or(core::cmp::Ordering::Equal));
    let vals = idx.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new, &old) in idx.iter().enumerate() {
        for k in 0..n {
            vecs[k * n + new] = v[k * n + old];
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;

    fn tridiag(n: usize, d: f64, o: f64) -> CsrMatrix {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, d);
            if i + 1 < n {
                t.push(i, i + 1, o);
                t.push(i + 1, i, o);
            }
        }
        t.into_csr()
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let (vals, vecs) = jacobi_eigen(&a, 3);
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i * 3 + j] * vecs[j * 3 + k]).sum();
                assert!((av - vals[k] * vecs[i * 3 + k]).abs() < 1e-12);
            }
        }
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
    }

    #[test]
    fn discrete_laplacian_lowest_mode() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2cos(kπ/(n+1))
        let n = 60;
        let a = tridiag(n, 2.0, -1.0);
        let b = tridiag(n, 1.0, 0.0);
        let ord = Ordering::rcm(&a);
        let e = smallest_generalized(&a, &b, &ord, EigenOptions::default()).unwrap();
        let exact = 2.0 - 2.0 * (core::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((e.value - exact).abs() < 1e-10 * exact.max(1.0), "{} vs {}", e.value, exact);
    }

    #[test]
    fn negative_spectrum_is_bracketed() {
        let n = 40;
        let a = CsrMatrix::combination(&[(1.0, &tridiag(n, 2.0, -1.0)), (-50.0, &tridiag(n, 1.0, 0.0))]);
        let b = tridiag(n, 1.0, 0.0);
        let ord = Ordering::rcm(&a);
        let e = smallest_generalized(&a, &b, &ord, EigenOptions::default()).unwrap();
        let exact = 2.0 - 2.0 * (core::f64::consts::PI / (n as f64 + 1.0)).cos() - 50.0;
        assert!((e.value - exact).abs() < 1e-9);
        assert!(e.shift <= e.value);
    }
}
