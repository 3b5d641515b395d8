//! Reduced velocity–pressure systems
//!
//! ```text
//! [ A   Bᵀ ] [ r ]   [ f ]
//! [ B   0  ] [ p ] = [ g ]
//! ```
//!
//! with `A` on the constrained velocity space and `B` the reduced divergence.
//! When no segment fixes the pressure level one pressure dof is removed and
//! the pressure is returned with zero mean.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandedLu, Ordering};
use crate::error::Result;
use crate::forms::DiscreteSystem;
use crate::math::{max_abs, norm_slice, sqrt};
use crate::spaces::DofMap;
use crate::sparse::{CsrMatrix, Triplets};

#[derive(Debug, Clone)]
pub struct Saddle {
    n_red: usize,
    /// Active index of each pressure dof.
    pidx: Vec<Option<usize>>,
    n_pa: usize,
    /// Reduced divergence, full pressure rows.
    pub b_red: CsrMatrix,
    /// `∫ λᵢ` per pressure dof, for mean removal.
    pweights: Vec<f64>,
    pinned: bool,
    ordering: Ordering,
    /// Relative residual above which iterative refinement kicks in.
    pub linear_tol: f64,
}

impl Saddle {
    pub fn new(sys: &DiscreteSystem, map: &DofMap) -> Self {
        let n_red = map.n_reduced();
        let np = map.n_pressure();
        let mut pidx = vec![None; np];
        let mut n_pa = 0;
        for (i, slot) in pidx.iter_mut().enumerate() {
            if map.pressure_pin != Some(i) {
                *slot = Some(n_pa);
                n_pa += 1;
            }
        }
        let b_red = map.reduce_cols(&sys.div);
        let mut pweights = vec![0.0; np];
        for el in &sys.assembler.elements {
            for k in 0..3 {
                pweights[el.nodes[k]] += el.area / 3.0;
            }
        }
        let template = map.reduce(&sys.assembler.zero_velocity_matrix());
        let mut s = Self { n_red, pidx, n_pa, b_red, pweights, pinned: map.pressure_pin.is_some(), ordering: Ordering::identity(0), linear_tol: 1e-12 };
        s.ordering = Ordering::rcm(&s.assemble(&template));
        s
    }

    pub fn n_reduced(&self) -> usize {
        self.n_red
    }

    fn assemble(&self, a: &CsrMatrix) -> CsrMatrix {
        let n = self.n_red + self.n_pa;
        let mut t = Triplets::with_capacity(n, n, a.nnz() + 2 * self.b_red.nnz());
        for i in 0..a.nrows {
            for (j, v) in a.row(i) {
                t.push(i, j, v);
            }
        }
        for q in 0..self.b_red.nrows {
            if let Some(pq) = self.pidx[q] {
                for (j, v) in self.b_red.row(q) {
                    t.push(self.n_red + pq, j, v);
                    t.push(j, self.n_red + pq, v);
                }
            }
        }
        t.into_csr()
    }

    /// Factors the system for the reduced velocity block `a`.
    pub fn factor(&self, a: &CsrMatrix) -> Result<SaddleFactor<'_>> {
        let k = self.assemble(a);
        let lu = BandedLu::factor(&k, &self.ordering)?;
        Ok(SaddleFactor { saddle: self, matrix: k, lu })
    }
}

pub struct SaddleFactor<'a> {
    saddle: &'a Saddle,
    matrix: CsrMatrix,
    lu: BandedLu,
}

impl SaddleFactor<'_> {
    /// Solves with velocity right-hand side `f` (reduced) and divergence
    /// right-hand side `g` (one entry per pressure dof). Returns the reduced
    /// velocity and the full pressure vector.
    pub fn solve(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let s = self.saddle;
        let n = s.n_red + s.n_pa;
        let mut rhs = vec![0.0; n];
        rhs[..s.n_red].copy_from_slice(f);
        for (q, idx) in s.pidx.iter().enumerate() {
            if let Some(pq) = idx {
                rhs[s.n_red + pq] = g[q];
            }
        }
        let mut x = self.lu.solve(&rhs);
        let scale = max_abs(&rhs).max(1e-300);
        for _ in 0..3 {
            let r: Vec<f64> = self.matrix.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| b - a).collect();
            if norm_slice(&r) <= s.linear_tol * scale * sqrt(n as f64) {
                break;
            }
            let dx = self.lu.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        }
        let u = x[..s.n_red].to_vec();
        let mut p = vec![0.0; s.pidx.len()];
        for (q, idx) in s.pidx.iter().enumerate() {
            if let Some(pq) = idx {
                p[q] = x[s.n_red + pq];
            }
        }
        if s.pinned {
            let area: f64 = s.pweights.iter().sum();
            let mean = p.iter().zip(&s.pweights).map(|(a, w)| a * w).sum::<f64>() / area;
            p.iter_mut().for_each(|v| *v -= mean);
        }
        (u, p)
    }
}
