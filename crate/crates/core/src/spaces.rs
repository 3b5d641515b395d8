//! Taylor–Hood P2/P1 spaces and the essential boundary constraints.
//!
//! Velocity nodes are the mesh vertices followed by edge midpoints; the
//! velocity dof of component `c` at node `i` is `2i + c`. Pressure dofs are
//! the vertices. Essential conditions are eliminated through a reduction
//! operator `T` with orthonormal columns: a full velocity vector is
//! `u = T r + g`, where `g` carries prescribed values.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Frame, Frames, Mesh, Segment};
use crate::math::{abs, add, cross, dot, norm, scale, sqrt, Vec2};
use crate::sparse::{CsrMatrix, Triplets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Strain (symmetric gradient) form.
    ProblemI,
    /// Gradient form.
    ProblemII,
}

/// What a segment fixes at its velocity nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Essential {
    None,
    Full,
    Tangential,
    Normal,
}

pub fn essential(variant: Variant, s: Segment) -> Essential {
    match s.get() {
        1 => Essential::Full,
        2 | 4 => Essential::Tangential,
        3 | 5 => Essential::Normal,
        7 if variant == Variant::ProblemI => Essential::Tangential,
        _ => Essential::None,
    }
}

/// Segments on which the normal stress is natural, so the pressure level is fixed.
pub fn pressure_segment(s: Segment) -> bool {
    matches!(s.get(), 2 | 4 | 6 | 7)
}

/// Constraint state of one velocity node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Free,
    /// Both components prescribed.
    Fixed,
    /// `u·dir` prescribed; the component along `(dir₁, −dir₀)` is free.
    /// The pair is stored in the rotated basis `Q = [[d₀, d₁], [d₁, −d₀]]`.
    Rotated { dir: Vec2 },
}

/// Classification of a single velocity dof.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Free,
    FixedZero,
    FixedValue,
    RotatedPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Request {
    seg: Segment,
    kind: Essential,
    frame: Frame,
}

impl Request {
    fn dir(&self) -> Vec2 {
        match self.kind {
            Essential::Tangential => self.frame.tangent,
            _ => self.frame.normal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub variant: Variant,
    pub n_vertices: usize,
    /// Velocity node coordinates (vertices, then edge midpoints).
    pub node_coords: Vec<Vec2>,
    /// Per triangle: three vertices, then midpoints of edges 01, 12, 20.
    pub tri_nodes: Vec<[usize; 6]>,
    /// Midpoint node of each boundary edge.
    pub edge_mid: Vec<usize>,
    pub node_kind: Vec<NodeKind>,
    /// Reduced column and coefficient of every velocity dof (`None` when fixed).
    tcol: Vec<Option<(usize, f64)>>,
    n_reduced: usize,
    requests: Vec<Vec<Request>>,
    /// Pressure dof removed to fix the pressure level, if any.
    pub pressure_pin: Option<usize>,
}

/// Directions closer than this (in `|sin|`) count as parallel.
const PARALLEL_TOL: f64 = 1e-6;

impl DofMap {
    pub fn build(mesh: &Mesh, frames: &Frames, variant: Variant) -> Result<Self> {
        let nv = mesh.n_nodes();
        let mut node_coords = mesh.nodes.clone();
        let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut tri_nodes = Vec::with_capacity(mesh.triangles.len());
        for tri in &mesh.triangles {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                m[k] = *edge_ids.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    node_coords.push(scale(0.5, add(mesh.nodes[i], mesh.nodes[j])));
                    node_coords.len() - 1
                });
            }
            tri_nodes.push([tri[0], tri[1], tri[2], m[0], m[1], m[2]]);
        }
        let n_nodes = node_coords.len();
        let edge_mid: Vec<usize> = mesh
            .boundary
            .iter()
            .map(|e| {
                let [a, b] = e.nodes;
                edge_ids[&(a.min(b), a.max(b))]
            })
            .collect();

        let mut requests: Vec<Vec<Request>> = vec![Vec::new(); n_nodes];
        for (e, edge) in mesh.boundary.iter().enumerate() {
            let kind = essential(variant, edge.label);
            if kind == Essential::None {
                continue;
            }
            if frames.edges.len() <= e {
                return Err(Error::MissingFrame(e));
            }
            let ef = &frames.edges[e];
            let ends = [(edge.nodes[0], ef.end_frames[0]), (edge.nodes[1], ef.end_frames[1]), (edge_mid[e], frames.at(mesh, e, 0.5))];
            for (node, frame) in ends {
                requests[node].push(Request { seg: edge.label, kind, frame });
            }
        }

        let mut node_kind = vec![NodeKind::Free; n_nodes];
        let mut tcol = vec![None; 2 * n_nodes];
        let mut n_reduced = 0;
        for i in 0..n_nodes {
            let kind = classify(&requests[i]);
            node_kind[i] = kind;
            match kind {
                NodeKind::Free => {
                    tcol[2 * i] = Some((n_reduced, 1.0));
                    tcol[2 * i + 1] = Some((n_reduced + 1, 1.0));
                    n_reduced += 2;
                }
                NodeKind::Fixed => {}
                NodeKind::Rotated { dir } => {
                    tcol[2 * i] = Some((n_reduced, dir[1]));
                    tcol[2 * i + 1] = Some((n_reduced, -dir[0]));
                    n_reduced += 1;
                }
            }
        }
        let pressure_pin = if mesh.boundary.iter().any(|e| pressure_segment(e.label)) { None } else { Some(0) };
        Ok(Self { variant, n_vertices: nv, node_coords, tri_nodes, edge_mid, node_kind, tcol, n_reduced, requests, pressure_pin })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.node_coords.len()
    }

    pub fn n_reduced(&self) -> usize {
        self.n_reduced
    }

    pub fn n_pressure(&self) -> usize {
        self.n_vertices
    }

    pub fn dof_kinds(&self, prescribed: Option<&[f64]>) -> Vec<DofKind> {
        let mut out = Vec::with_capacity(self.n_velocity());
        for (i, k) in self.node_kind.iter().enumerate() {
            for c in 0..2 {
                out.push(match k {
                    NodeKind::Free => DofKind::Free,
                    NodeKind::Rotated { .. } => DofKind::RotatedPair,
                    NodeKind::Fixed => match prescribed {
                        Some(g) if g[2 * i + c] != 0.0 => DofKind::FixedValue,
                        _ => DofKind::FixedZero,
                    },
                });
            }
        }
        out
    }

    /// Reduction operator `T` as a sparse matrix.
    pub fn reduction(&self) -> CsrMatrix {
        let mut t = Triplets::new(self.n_velocity(), self.n_reduced);
        for (i, c) in self.tcol.iter().enumerate() {
            if let Some((j, v)) = c {
                t.push(i, *j, *v);
            }
        }
        t.into_csr()
    }

    /// `T r + g`.
    pub fn expand(&self, r: &[f64], g: Option<&[f64]>) -> Vec<f64> {
        let mut u = match g {
            Some(g) => g.to_vec(),
            None => vec![0.0; self.n_velocity()],
        };
        for (i, c) in self.tcol.iter().enumerate() {
            if let Some((j, v)) = c {
                u[i] += v * r[*j];
            }
        }
        u
    }

    /// `Tᵀ u`: restriction of a functional, or coordinates of a constrained field.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n_reduced];
        for (i, c) in self.tcol.iter().enumerate() {
            if let Some((j, v)) = c {
                r[*j] += v * u[i];
            }
        }
        r
    }

    /// `Tᵀ A T` for a velocity–velocity matrix.
    pub fn reduce(&self, a: &CsrMatrix) -> CsrMatrix {
        let mut t = Triplets::with_capacity(self.n_reduced, self.n_reduced, a.nnz());
        for i in 0..a.nrows {
            if let Some((ri, ti)) = self.tcol[i] {
                for (j, v) in a.row(i) {
                    if let Some((rj, tj)) = self.tcol[j] {
                        t.push(ri, rj, ti * v * tj);
                    }
                }
            }
        }
        t.into_csr()
    }

    /// `B T` for a matrix acting on velocities from the right.
    pub fn reduce_cols(&self, b: &CsrMatrix) -> CsrMatrix {
        let mut t = Triplets::with_capacity(b.nrows, self.n_reduced, b.nnz());
        for i in 0..b.nrows {
            for (j, v) in b.row(i) {
                if let Some((rj, tj)) = self.tcol[j] {
                    t.push(i, rj, v * tj);
                }
            }
        }
        t.into_csr()
    }

    /// Norm of the constrained components of a full velocity vector
    /// (`|u|` at fixed nodes, `|u·dir|` at rotated ones), relative to `g` if given.
    pub fn constraint_violation(&self, u: &[f64], g: Option<&[f64]>) -> f64 {
        let mut s = 0.0;
        for (i, k) in self.node_kind.iter().enumerate() {
            let mut w = [u[2 * i], u[2 * i + 1]];
            if let Some(g) = g {
                w = [w[0] - g[2 * i], w[1] - g[2 * i + 1]];
            }
            match k {
                NodeKind::Free => {}
                NodeKind::Fixed => s += dot(w, w),
                NodeKind::Rotated { dir } => s += dot(w, *dir) * dot(w, *dir),
            }
        }
        sqrt(s)
    }

    /// Full velocity vector carrying the prescribed traces at constrained
    /// nodes (zero elsewhere). `h1` is the full velocity on Γ1, `h4` the
    /// tangential component on Γ4 and `h5` the normal component on Γ5;
    /// every other essential condition is homogeneous.
    pub fn prescribed(&self, h1: &dyn Fn(Vec2) -> Vec2, h4: &dyn Fn(Vec2) -> f64, h5: &dyn Fn(Vec2) -> f64) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.n_velocity()];
        for (i, reqs) in self.requests.iter().enumerate() {
            if reqs.is_empty() {
                continue;
            }
            let p = self.node_coords[i];
            let value = |r: &Request| -> f64 {
                match r.seg.get() {
                    4 => h4(p),
                    5 => h5(p),
                    _ => 0.0,
                }
            };
            let v: Vec2 = match self.node_kind[i] {
                NodeKind::Free => continue,
                NodeKind::Rotated { dir } => {
                    let r0 = &reqs[0];
                    let s0 = if dot(r0.dir(), dir) < 0.0 { -1.0 } else { 1.0 };
                    scale(s0 * value(r0), dir)
                }
                NodeKind::Fixed => {
                    if reqs.iter().any(|r| r.kind == Essential::Full) {
                        h1(p)
                    } else {
                        // two most transversal directional constraints
                        let mut best = (0, 1, 0.0);
                        for a in 0..reqs.len() {
                            for b in (a + 1)..reqs.len() {
                                let c = abs(cross(reqs[a].dir(), reqs[b].dir()));
                                if c > best.2 {
                                    best = (a, b, c);
                                }
                            }
                        }
                        let (ra, rb) = (&reqs[best.0], &reqs[best.1]);
                        let (da, db) = (ra.dir(), rb.dir());
                        let (ga, gb) = (value(ra), value(rb));
                        let det = cross(da, db);
                        [(ga * db[1] - gb * da[1]) / det, (da[0] * gb - db[0] * ga) / det]
                    }
                }
            };
            for r in reqs {
                let mismatch = match r.kind {
                    Essential::Full => norm([v[0] - h1(p)[0], v[1] - h1(p)[1]]),
                    _ => abs(dot(v, r.dir()) - value(r)),
                };
                if mismatch > 1e-9 * (1.0 + norm(v)) {
                    return Err(Error::InconsistentTraces { node: i, mismatch });
                }
            }
            g[2 * i] = v[0];
            g[2 * i + 1] = v[1];
        }
        Ok(g)
    }

    /// Nodal interpolant of a vector field.
    pub fn interpolate(&self, f: &dyn Fn(Vec2) -> Vec2) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.n_velocity());
        for &p in &self.node_coords {
            let v = f(p);
            u.push(v[0]);
            u.push(v[1]);
        }
        u
    }

    /// P1 interpolant of a scalar on the pressure space.
    pub fn interpolate_pressure(&self, f: &dyn Fn(Vec2) -> f64) -> Vec<f64> {
        self.node_coords[..self.n_vertices].iter().map(|&p| f(p)).collect()
    }
}

fn classify(reqs: &[Request]) -> NodeKind {
    if reqs.is_empty() {
        return NodeKind::Free;
    }
    if reqs.iter().any(|r| r.kind == Essential::Full) {
        return NodeKind::Fixed;
    }
    let d0 = reqs[0].dir();
    if reqs.iter().all(|r| abs(cross(r.dir(), d0)) < PARALLEL_TOL) {
        NodeKind::Rotated { dir: d0 }
    } else {
        NodeKind::Fixed
    }
}

/// Velocity and pressure coefficients on a [`DofMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl Field {
    pub fn zeros(map: &DofMap) -> Self {
        Self { velocity: vec![0.0; map.n_velocity()], pressure: vec![0.0; map.n_pressure()] }
    }

    pub fn matches(&self, map: &DofMap) -> bool {
        self.velocity.len() == map.n_velocity() && self.pressure.len() == map.n_pressure()
    }

    pub fn node_velocity(&self, i: usize) -> Vec2 {
        [self.velocity[2 * i], self.velocity[2 * i + 1]]
    }
}
