//! Quadrature rules on the reference triangle and the unit interval.
//!
//! Triangle rules are returned in barycentric coordinates with weights summing
//! to one, so an integral over a physical triangle is `area * Σ wᵢ f(xᵢ)`.

use alloc::vec::Vec;

use crate::math::{abs, cos, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Symmetric 6-point rule, exact for polynomials of degree 4.
pub fn triangle_deg4() -> [TriPoint; 6] {
    const A1: f64 = 0.445_948_490_915_964_886_32;
    const W1: f64 = 0.223_381_589_678_011_465_70;
    const A2: f64 = 0.091_576_213_509_770_743_46;
    const W2: f64 = 0.109_951_743_655_321_867_64;
    let p = |a: f64, b: f64, c: f64, w: f64| TriPoint { bary: [a, b, c], weight: w };
    [
        p(1.0 - 2.0 * A1, A1, A1, W1),
        p(A1, 1.0 - 2.0 * A1, A1, W1),
        p(A1, A1, 1.0 - 2.0 * A1, W1),
        p(1.0 - 2.0 * A2, A2, A2, W2),
        p(A2, 1.0 - 2.0 * A2, A2, W2),
        p(A2, A2, 1.0 - 2.0 * A2, W2),
    ]
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if abs(dx) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Collapsed (Duffy) tensor Gauss rule with `n²` points; exact for degree `2n − 2`.
pub fn triangle_collapsed(n: usize) -> Vec<TriPoint> {
    let g = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let xi = u;
            let eta = v * (1.0 - u);
            out.push(TriPoint { bary: [1.0 - xi - eta, xi, eta], weight: 2.0 * wu * wv * (1.0 - u) });
        }
    }
    out
}
