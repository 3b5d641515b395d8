//! Assembly of the bilinear, trilinear and linear forms.
//!
//! All velocity matrices live on the full P2 velocity space (before
//! constraints) and share one sparsity pattern, so they can be combined
//! cheaply. Boundary terms use the edge frames of [`Frames`]; in the plane
//! the shape-operator pairing `(Sṽ, ũ)` is `∫ k (v·τ)(u·τ)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Datum, MatrixFn, ProblemData};
use crate::error::{Error, Result};
use crate::geometry::{Frame, Frames, Mesh, Segment};
use crate::math::{add, scale, sq, sqrt, sub, Vec2};
use crate::quadrature::{gauss_legendre, triangle_collapsed, triangle_deg4, TriPoint};
use crate::spaces::{DofMap, Variant};
use crate::sparse::CsrMatrix;

/// Geometry and P2 basis of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub nodes: [usize; 6],
    pub verts: [Vec2; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub glam: [Vec2; 3],
}

impl Element {
    fn new(map: &DofMap, t: usize) -> Self {
        let nodes = map.tri_nodes[t];
        let verts = [map.node_coords[nodes[0]], map.node_coords[nodes[1]], map.node_coords[nodes[2]]];
        let area2 = crate::math::cross(sub(verts[1], verts[0]), sub(verts[2], verts[0]));
        let mut glam = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            glam[i] = [(verts[j][1] - verts[k][1]) / area2, (verts[k][0] - verts[j][0]) / area2];
        }
        Self { nodes, verts, area: 0.5 * area2, glam }
    }

    pub fn point(&self, l: [f64; 3]) -> Vec2 {
        add(add(scale(l[0], self.verts[0]), scale(l[1], self.verts[1])), scale(l[2], self.verts[2]))
    }

    pub fn basis(l: [f64; 3]) -> [f64; 6] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }

    pub fn grads(&self, l: [f64; 3]) -> [Vec2; 6] {
        let g = &self.glam;
        let v = |i: usize| scale(4.0 * l[i] - 1.0, g[i]);
        let m = |i: usize, j: usize| scale(4.0, add(scale(l[i], g[j]), scale(l[j], g[i])));
        [v(0), v(1), v(2), m(0, 1), m(1, 2), m(2, 0)]
    }

    /// Value and gradient (`grad[c][d] = ∂_d u_c`) of a velocity field at `l`.
    pub fn eval(&self, u: &[f64], l: [f64; 3]) -> (Vec2, [[f64; 2]; 2]) {
        let phi = Self::basis(l);
        let gp = self.grads(l);
        let mut v = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for a in 0..6 {
            let n = self.nodes[a];
            for c in 0..2 {
                let uc = u[2 * n + c];
                v[c] += uc * phi[a];
                g[c][0] += uc * gp[a][0];
                g[c][1] += uc * gp[a][1];
            }
        }
        (v, g)
    }

    pub fn eval_pressure(&self, p: &[f64], l: [f64; 3]) -> f64 {
        l[0] * p[self.nodes[0]] + l[1] * p[self.nodes[1]] + l[2] * p[self.nodes[2]]
    }
}

/// Shared sparsity pattern of the velocity matrices and of the divergence matrix.
#[derive(Debug, Clone)]
pub struct Assembler {
    pub elements: Vec<Element>,
    velocity: CsrMatrix,
    slots: Vec<u32>,
    pressure: CsrMatrix,
    pslots: Vec<u32>,
}

impl Assembler {
    pub fn new(map: &DofMap) -> Self {
        let elements: Vec<Element> = (0..map.tri_nodes.len()).map(|t| Element::new(map, t)).collect();
        let nv = map.n_velocity();
        let np = map.n_pressure();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nv];
        let mut prows: Vec<Vec<usize>> = vec![Vec::new(); np];
        for el in &elements {
            let dofs = dofs(el);
            for &i in &dofs {
                rows[i].extend_from_slice(&dofs);
            }
            for &v in &el.nodes[..3] {
                prows[v].extend_from_slice(&dofs);
            }
        }
        let velocity = pattern(rows, nv);
        let pressure = pattern(prows, nv);
        let mut slots = Vec::with_capacity(144 * elements.len());
        let mut pslots = Vec::with_capacity(36 * elements.len());
        for el in &elements {
            let dofs = dofs(el);
            for &i in &dofs {
                for &j in &dofs {
                    slots.push(index_of(&velocity, i, j) as u32);
                }
            }
            for &v in &el.nodes[..3] {
                for &j in &dofs {
                    pslots.push(index_of(&pressure, v, j) as u32);
                }
            }
        }
        Self { elements, velocity, slots, pressure, pslots }
    }

    pub fn zero_velocity_matrix(&self) -> CsrMatrix {
        self.velocity.clone()
    }

    /// Sums `local(element, point, weight·area)` 12×12 blocks over all elements.
    fn volume<F>(&self, rule: &[TriPoint], mut local: F) -> CsrMatrix
    where
        F: FnMut(&Element, [f64; 3], f64, &mut [[f64; 12]; 12]),
    {
        let mut m = self.velocity.clone();
        let mut block = [[0.0; 12]; 12];
        for (t, el) in self.elements.iter().enumerate() {
            block.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = 0.0));
            for q in rule {
                local(el, q.bary, q.weight * el.area, &mut block);
            }
            let s = &self.slots[144 * t..144 * (t + 1)];
            for i in 0..12 {
                for j in 0..12 {
                    m.vals[s[12 * i + j] as usize] += block[i][j];
                }
            }
        }
        m
    }

    fn add_at(&self, m: &mut CsrMatrix, i: usize, j: usize, v: f64) {
        let k = index_of(m, i, j);
        m.vals[k] += v;
    }
}

fn dofs(el: &Element) -> [usize; 12] {
    let mut d = [0; 12];
    for a in 0..6 {
        d[2 * a] = 2 * el.nodes[a];
        d[2 * a + 1] = 2 * el.nodes[a] + 1;
    }
    d
}

fn pattern(mut rows: Vec<Vec<usize>>, ncols: usize) -> CsrMatrix {
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    for r in rows.iter_mut() {
        r.sort_unstable();
        r.dedup();
        cols.extend_from_slice(r);
        row_ptr.push(cols.len());
    }
    let nnz = cols.len();
    CsrMatrix { nrows: rows.len(), ncols, row_ptr, cols, vals: vec![0.0; nnz] }
}

fn index_of(m: &CsrMatrix, i: usize, j: usize) -> usize {
    let r = m.row_ptr[i]..m.row_ptr[i + 1];
    r.start + m.cols[r].binary_search(&j).expect("entry outside the assembly pattern")
}

/// Quadratic trace basis on a boundary edge at parameter `t` (nodes: start, end, midpoint).
pub fn edge_basis(t: f64) -> [f64; 3] {
    [(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)]
}

/// Gauss points on a boundary edge: parameter, physical point, frame, `weight · length`.
pub fn edge_points(mesh: &Mesh, frames: &Frames, e: usize, n: usize) -> Vec<(f64, Vec2, Frame, f64)> {
    let [a, b] = mesh.boundary[e].nodes;
    let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
    let len = mesh.edge_length(e);
    gauss_legendre(n)
        .into_iter()
        .map(|(t, w)| (t, add(scale(1.0 - t, pa), scale(t, pb)), frames.at(mesh, e, t), w * len))
        .collect()
}

fn edge_nodes(mesh: &Mesh, map: &DofMap, e: usize) -> [usize; 3] {
    let [a, b] = mesh.boundary[e].nodes;
    [a, b, map.edge_mid[e]]
}

/// Boundary integrand kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTerm {
    /// `∫ k v·u`
    Curvature,
    /// `∫ k (v·τ)(u·τ)`
    Shape,
    /// `∫ (α v)·u`
    Friction,
}

/// One weighted boundary contribution of the principal form.
#[derive(Debug, Clone)]
pub struct BoundaryPiece {
    pub segment: Segment,
    pub term: BoundaryTerm,
    pub coeff: f64,
    pub matrix: CsrMatrix,
}

/// Coefficients of the boundary terms of the principal form.
pub fn boundary_terms(variant: Variant, nu: f64, friction: bool) -> Vec<(Segment, BoundaryTerm, f64)> {
    let mut out = match variant {
        Variant::ProblemI => vec![
            (Segment::G2, BoundaryTerm::Curvature, 2.0 * nu),
            (Segment::G3, BoundaryTerm::Shape, 2.0 * nu),
            (Segment::G7, BoundaryTerm::Curvature, nu),
        ],
        Variant::ProblemII => vec![
            (Segment::G2, BoundaryTerm::Curvature, nu),
            (Segment::G3, BoundaryTerm::Shape, nu),
            (Segment::G5, BoundaryTerm::Shape, -nu),
        ],
    };
    if friction {
        out.push((Segment::G5, BoundaryTerm::Friction, 2.0));
    }
    out
}

/// Assembled operators of one problem on one mesh.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub variant: Variant,
    pub nu: f64,
    pub assembler: Assembler,
    /// `(v, u)`
    pub mass: CsrMatrix,
    /// `(∇v, ∇u)`
    pub stiffness: CsrMatrix,
    /// `2 (ε(v), ε(u))`
    pub strain: CsrMatrix,
    /// `−(q, div v)`, pressure rows.
    pub div: CsrMatrix,
    pub boundary: Vec<BoundaryPiece>,
    /// Volume part plus all boundary pieces.
    pub principal: CsrMatrix,
}

impl DiscreteSystem {
    pub fn assemble(mesh: &Mesh, frames: &Frames, map: &DofMap, nu: f64, alpha: Option<&MatrixFn>) -> Result<Self> {
        if frames.edges.len() != mesh.boundary.len() {
            return Err(Error::MissingFrame(frames.edges.len().min(mesh.boundary.len())));
        }
        let asm = Assembler::new(map);
        let rule = triangle_deg4();
        let mass = asm.volume(&rule, |_, l, w, b| {
            let phi = Element::basis(l);
            for a in 0..6 {
                for c in 0..6 {
                    let v = w * phi[a] * phi[c];
                    b[2 * a][2 * c] += v;
                    b[2 * a + 1][2 * c + 1] += v;
                }
            }
        });
        let stiffness = asm.volume(&rule, |el, l, w, b| {
            let g = el.grads(l);
            for a in 0..6 {
                for c in 0..6 {
                    let v = w * (g[a][0] * g[c][0] + g[a][1] * g[c][1]);
                    b[2 * a][2 * c] += v;
                    b[2 * a + 1][2 * c + 1] += v;
                }
            }
        });
        // row (a, c), column (b, d): δ_cd ∇φa·∇φb + ∂_c φb ∂_d φa
        let strain = asm.volume(&rule, |el, l, w, blk| {
            let g = el.grads(l);
            for a in 0..6 {
                for bb in 0..6 {
                    let gg = g[a][0] * g[bb][0] + g[a][1] * g[bb][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let delta = if c == d { gg } else { 0.0 };
                            blk[2 * a + c][2 * bb + d] += w * (delta + g[bb][c] * g[a][d]);
                        }
                    }
                }
            }
        });
        let mut div = asm.pressure.clone();
        for (t, el) in asm.elements.iter().enumerate() {
            let s = &asm.pslots[36 * t..36 * (t + 1)];
            for q in &rule {
                let g = el.grads(q.bary);
                let w = q.weight * el.area;
                for i in 0..3 {
                    for bb in 0..6 {
                        for d in 0..2 {
                            div.vals[s[12 * i + 2 * bb + d] as usize] -= w * q.bary[i] * g[bb][d];
                        }
                    }
                }
            }
        }
        let mut boundary = Vec::new();
        for (seg, term, coeff) in boundary_terms(map.variant, nu, alpha.is_some()) {
            if !mesh.has_segment(seg) {
                continue;
            }
            let matrix = boundary_matrix(&asm, mesh, frames, map, seg, term, alpha)?;
            boundary.push(BoundaryPiece { segment: seg, term, coeff, matrix });
        }
        let volume = match map.variant {
            Variant::ProblemI => &strain,
            Variant::ProblemII => &stiffness,
        };
        let mut terms: Vec<(f64, &CsrMatrix)> = vec![(nu, volume)];
        for p in &boundary {
            terms.push((p.coeff, &p.matrix));
        }
        let principal = CsrMatrix::combination(&terms);
        Ok(Self { variant: map.variant, nu, assembler: asm, mass, stiffness, strain, div, boundary, principal })
    }

    /// H¹ Gram matrix `(∇v, ∇u) + (v, u)`.
    pub fn h1_gram(&self) -> CsrMatrix {
        CsrMatrix::combination(&[(1.0, &self.stiffness), (1.0, &self.mass)])
    }

    /// Volume part of the principal form: `ν·2(ε, ε)` or `ν(∇, ∇)`.
    pub fn volume_form(&self) -> CsrMatrix {
        match self.variant {
            Variant::ProblemI => self.strain.scaled(self.nu),
            Variant::ProblemII => self.stiffness.scaled(self.nu),
        }
    }

    /// `C₁(w)`: `⟨(w·∇)v, u⟩`.
    pub fn convection_transport(&self, w: &[f64]) -> CsrMatrix {
        let rule = triangle_deg4();
        self.assembler.volume(&rule, |el, l, wt, b| {
            let (wv, _) = el.eval(w, l);
            let phi = Element::basis(l);
            let g = el.grads(l);
            for a in 0..6 {
                for bb in 0..6 {
                    let v = wt * phi[a] * (wv[0] * g[bb][0] + wv[1] * g[bb][1]);
                    b[2 * a][2 * bb] += v;
                    b[2 * a + 1][2 * bb + 1] += v;
                }
            }
        })
    }

    /// `C₂(w)`: `⟨(v·∇)w, u⟩`.
    pub fn convection_reaction(&self, w: &[f64]) -> CsrMatrix {
        let rule = triangle_deg4();
        self.assembler.volume(&rule, |el, l, wt, b| {
            let (_, gw) = el.eval(w, l);
            let phi = Element::basis(l);
            for a in 0..6 {
                for bb in 0..6 {
                    let pp = wt * phi[a] * phi[bb];
                    for c in 0..2 {
                        for d in 0..2 {
                            b[2 * a + c][2 * bb + d] += pp * gw[c][d];
                        }
                    }
                }
            }
        })
    }

    /// Both convection matrices `(C₁(w), C₂(w))`.
    pub fn convection(&self, w: &[f64]) -> (CsrMatrix, CsrMatrix) {
        (self.convection_transport(w), self.convection_reaction(w))
    }

    /// `∫ g·u` for a body force `g`.
    pub fn volume_functional(&self, g: &dyn Fn(Vec2) -> Vec2) -> Vec<f64> {
        let n = self.mass.nrows;
        let mut out = vec![0.0; n];
        let rule = triangle_deg4();
        for el in &self.assembler.elements {
            for q in &rule {
                let f = g(el.point(q.bary));
                let w = q.weight * el.area;
                let phi = Element::basis(q.bary);
                for a in 0..6 {
                    out[2 * el.nodes[a]] += w * phi[a] * f[0];
                    out[2 * el.nodes[a] + 1] += w * phi[a] * f[1];
                }
            }
        }
        out
    }

    /// `∫_{Γs} g(x, frame)·u`.
    pub fn boundary_functional(&self, mesh: &Mesh, frames: &Frames, map: &DofMap, seg: Segment, g: &dyn Fn(Vec2, &Frame) -> Vec2) -> Vec<f64> {
        let mut out = vec![0.0; self.mass.nrows];
        for e in 0..mesh.boundary.len() {
            if mesh.boundary[e].label != seg {
                continue;
            }
            let nodes = edge_nodes(mesh, map, e);
            for (t, p, f, w) in edge_points(mesh, frames, e, 3) {
                let v = g(p, &f);
                let phi = edge_basis(t);
                for a in 0..3 {
                    out[2 * nodes[a]] += w * phi[a] * v[0];
                    out[2 * nodes[a] + 1] += w * phi[a] * v[1];
                }
            }
        }
        out
    }

    /// Data functional `⟨f, u⟩ + Σ ⟨φᵢ, u_n⟩ + Σ ⟨φᵢ, u⟩` at time `t`.
    pub fn data_functional(&self, mesh: &Mesh, frames: &Frames, map: &DofMap, data: &ProblemData, t: f64) -> Result<Vec<f64>> {
        let mut out = match &data.f {
            Some(f) => self.volume_functional(&|p| f(p, t)),
            None => vec![0.0; self.mass.nrows],
        };
        for s in Segment::ALL {
            let Some(d) = data.phi(s) else { continue };
            if !mesh.has_segment(s) {
                return Err(Error::AbsentSegment(s));
            }
            let b = match d {
                Datum::Scalar(g) => self.boundary_functional(mesh, frames, map, s, &|p, fr| scale(g(p, t), fr.normal)),
                Datum::Vector(g) => self.boundary_functional(mesh, frames, map, s, &|p, _| g(p, t)),
            };
            out.iter_mut().zip(&b).for_each(|(o, v)| *o += v);
        }
        Ok(out)
    }

    /// `√(uᵀ M u)`.
    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        sqrt(self.mass.bilinear(u, u).max(0.0))
    }

    /// `√(uᵀ (K + M) u)`.
    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        sqrt((self.mass.bilinear(u, u) + self.stiffness.bilinear(u, u)).max(0.0))
    }

    /// `‖ε(u)‖²`.
    pub fn strain_energy(&self, u: &[f64]) -> f64 {
        0.5 * self.strain.bilinear(u, u)
    }
}

fn boundary_matrix(
    asm: &Assembler,
    mesh: &Mesh,
    frames: &Frames,
    map: &DofMap,
    seg: Segment,
    term: BoundaryTerm,
    alpha: Option<&MatrixFn>,
) -> Result<CsrMatrix> {
    let mut m = asm.zero_velocity_matrix();
    for e in 0..mesh.boundary.len() {
        if mesh.boundary[e].label != seg {
            continue;
        }
        if e >= frames.edges.len() {
            return Err(Error::MissingFrame(e));
        }
        let nodes = edge_nodes(mesh, map, e);
        for (t, p, f, w) in edge_points(mesh, frames, e, 3) {
            let phi = edge_basis(t);
            let coef: [[f64; 2]; 2] = match term {
                BoundaryTerm::Curvature => [[f.curvature, 0.0], [0.0, f.curvature]],
                BoundaryTerm::Shape => {
                    let tau = f.tangent;
                    [[f.curvature * tau[0] * tau[0], f.curvature * tau[0] * tau[1]], [f.curvature * tau[1] * tau[0], f.curvature * tau[1] * tau[1]]]
                }
                BoundaryTerm::Friction => alpha.map_or([[0.0; 2]; 2], |a| a(p)),
            };
            for a in 0..3 {
                for b in 0..3 {
                    let pp = w * phi[a] * phi[b];
                    for c in 0..2 {
                        for d in 0..2 {
                            if coef[c][d] != 0.0 {
                                asm.add_at(&mut m, 2 * nodes[a] + c, 2 * nodes[b] + d, pp * coef[c][d]);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Errors `‖u_h − v‖_{L²}` and `‖∇(u_h − v)‖_{L²}` against an exact field,
/// integrated with a high-order collapsed rule on the mesh.
pub fn velocity_errors(sys: &DiscreteSystem, u: &[f64], exact: &dyn Fn(Vec2) -> (Vec2, [[f64; 2]; 2])) -> (f64, f64) {
    let rule = triangle_collapsed(5);
    let (mut l2, mut h1) = (0.0, 0.0);
    for el in &sys.assembler.elements {
        for q in &rule {
            let (v, g) = el.eval(u, q.bary);
            let (ve, ge) = exact(el.point(q.bary));
            let w = q.weight * el.area;
            l2 += w * (sq(v[0] - ve[0]) + sq(v[1] - ve[1]));
            for c in 0..2 {
                for d in 0..2 {
                    h1 += w * sq(g[c][d] - ge[c][d]);
                }
            }
        }
    }
    (sqrt(l2), sqrt(h1))
}

/// `‖p_h − p‖_{L²}` after removing the mean difference.
pub fn pressure_error(sys: &DiscreteSystem, p: &[f64], exact: &dyn Fn(Vec2) -> f64) -> f64 {
    let rule = triangle_collapsed(4);
    let (mut area, mut mean) = (0.0, 0.0);
    for el in &sys.assembler.elements {
        for q in &rule {
            let w = q.weight * el.area;
            area += w;
            mean += w * (el.eval_pressure(p, q.bary) - exact(el.point(q.bary)));
        }
    }
    mean /= area;
    let mut e = 0.0;
    for el in &sys.assembler.elements {
        for q in &rule {
            let w = q.weight * el.area;
            e += w * sq(el.eval_pressure(p, q.bary) - exact(el.point(q.bary)) - mean);
        }
    }
    sqrt(e)
}
