//! Direct solvers for sparse matrices stored as bands after a
//! reverse Cuthill–McKee renumbering.
//!
//! [`BandedLu`] handles general (indefinite, nonsymmetric) systems such as the
//! saddle-point matrices; [`BandedCholesky`] handles symmetric positive
//! definite ones and doubles as a definiteness test.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, sqrt};
use crate::sparse::CsrMatrix;

/// A symmetric permutation. `perm[new] = old`, `inv[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    pub perm: Vec<usize>,
    pub inv: Vec<usize>,
}

impl Ordering {
    pub fn identity(n: usize) -> Self {
        let perm: Vec<usize> = (0..n).collect();
        Self { inv: perm.clone(), perm }
    }

    /// Reverse Cuthill–McKee ordering of the structurally symmetrized graph of `a`.
    pub fn rcm(a: &CsrMatrix) -> Self {
        let n = a.nrows;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, _) in a.row(i) {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        loop {
            // lowest-degree unvisited node seeds the next component
            let seed = match (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) {
                Some(s) => s,
                None => break,
            };
            let start = pseudo_peripheral(seed, &adj, &degree, &visited);
            let mut queue = VecDeque::new();
            visited[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
                nb.sort_unstable_by_key(|&w| (degree[w], w));
                for w in nb {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order.reverse();
        let mut inv = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        Self { perm: order, inv }
    }

    /// Lower and upper bandwidth of `a` under this ordering.
    pub fn bandwidths(&self, a: &CsrMatrix) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..a.nrows {
            let pi = self.inv[i];
            for (j, _) in a.row(i) {
                let pj = self.inv[j];
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
            }
        }
        (kl, ku)
    }
}

fn bfs_levels(start: usize, adj: &[Vec<usize>], blocked: &[bool]) -> (usize, Vec<usize>) {
    let mut depth = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::new();
    depth[start] = 0;
    queue.push_back(start);
    let mut last_level = Vec::new();
    let mut max_d = 0;
    while let Some(v) = queue.pop_front() {
        if depth[v] > max_d {
            max_d = depth[v];
            last_level.clear();
        }
        last_level.push(v);
        for &w in &adj[v] {
            if !blocked[w] && depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (max_d, last_level)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize], blocked: &[bool]) -> usize {
    let mut v = seed;
    let (mut ecc, mut last) = bfs_levels(v, adj, blocked);
    for _ in 0..8 {
        let cand = *last.iter().min_by_key(|&&w| (degree[w], w)).unwrap();
        let (e, l) = bfs_levels(cand, adj, blocked);
        if e > ecc {
            v = cand;
            ecc = e;
            last = l;
        } else {
            break;
        }
    }
    v
}

/// LU factorization with partial pivoting of a band matrix, LAPACK `gbtrf` layout.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
    ordering: Ordering,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix, ordering: &Ordering) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Dimension { expected: a.nrows, got: a.ncols });
        }
        let n = a.nrows;
        let (kl, ku) = ordering.bandwidths(a);
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        for i in 0..n {
            let pi = ordering.inv[i];
            for (j, v) in a.row(i) {
                let pj = ordering.inv[j];
                ab[pj * ldab + kv + pi - pj] += v;
            }
        }
        let mut ipiv = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0;
            let mut best = abs(ab[col + kv]);
            for p in 1..=km {
                let v = abs(ab[col + kv + p]);
                if v > best {
                    best = v;
                    jp = p;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv + j - c;
                    ab.swap(base, base + jp);
                }
            }
            let pivot = ab[col + kv];
            for p in 1..=km {
                ab[col + kv + p] /= pivot;
            }
            for c in (j + 1)..=ju {
                let base = c * ldab + kv + j - c;
                let ajc = ab[base];
                if ajc != 0.0 {
                    for p in 1..=km {
                        ab[base + p] -= ab[col + kv + p] * ajc;
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, ldab, ab, ipiv, ordering: ordering.clone() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.ordering.perm[k]]).collect();
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let xj = x[j];
            if xj != 0.0 {
                let col = j * self.ldab + kv;
                for q in 1..=km {
                    x[j + q] -= self.ab[col + q] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * self.ldab;
            x[j] /= self.ab[col + kv];
            let xj = x[j];
            if xj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    x[i] -= self.ab[col + kv + i - j] * xj;
                }
            }
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.ordering.perm[k]] = x[k];
        }
        out
    }
}

/// Cholesky factorization `A = L Lᵀ` of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    kd: usize,
    ab: Vec<f64>,
    ordering: Ordering,
}

impl BandedCholesky {
    /// Fails with [`Error::Singular`] when a non-positive pivot appears, i.e.
    /// when `a` is not positive definite.
    pub fn factor(a: &CsrMatrix, ordering: &Ordering) -> Result<Self> {
        let n = a.nrows;
        let (kl, ku) = ordering.bandwidths(a);
        let kd = kl.max(ku);
        let ld = kd + 1;
        let mut ab = vec![0.0; ld * n];
        for i in 0..n {
            let pi = ordering.inv[i];
            for (j, v) in a.row(i) {
                let pj = ordering.inv[j];
                if pi >= pj {
                    ab[pj * ld + pi - pj] += v;
                }
            }
        }
        for j in 0..n {
            let col = j * ld;
            let ajj = ab[col];
            if !(ajj > 0.0) {
                return Err(Error::Singular(j));
            }
            let ljj = sqrt(ajj);
            ab[col] = ljj;
            let kn = kd.min(n - 1 - j);
            for r in 1..=kn {
                ab[col + r] /= ljj;
            }
            for c in 1..=kn {
                let lc = ab[col + c];
                if lc != 0.0 {
                    let tcol = (j + c) * ld;
                    for r in c..=kn {
                        ab[tcol + r - c] -= ab[col + r] * lc;
                    }
                }
            }
        }
        Ok(Self { n, kd, ab, ordering: ordering.clone() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ld = self.kd + 1;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.ordering.perm[k]]).collect();
        for j in 0..n {
            let col = j * ld;
            x[j] /= self.ab[col];
            let xj = x[j];
            let kn = self.kd.min(n - 1 - j);
            for r in 1..=kn {
                x[j + r] -= self.ab[col + r] * xj;
            }
        }
        for j in (0..n).rev() {
            let col = j * ld;
            let kn = self.kd.min(n - 1 - j);
            let mut s = x[j];
            for r in 1..=kn {
                s -= self.ab[col + r] * x[j + r];
            }
            x[j] = s / self.ab[col];
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.ordering.perm[k]] = x[k];
        }
        out
    }
}
