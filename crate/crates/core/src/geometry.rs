//! Meshes, boundary segments `Γ1..Γ7`, analytic boundary curves and
//! boundary frames (outward normal, tangent, curvature).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{abs, add, atan2, cos, cross, dot, norm, normalize, perp, round, scale, sin, sub, Vec2, PI};

/// Boundary segment label, `1..=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment(u8);

impl Segment {
    pub const G1: Segment = Segment(1);
    pub const G2: Segment = Segment(2);
    pub const G3: Segment = Segment(3);
    pub const G4: Segment = Segment(4);
    pub const G5: Segment = Segment(5);
    pub const G6: Segment = Segment(6);
    pub const G7: Segment = Segment(7);
    pub const ALL: [Segment; 7] = [Self::G1, Self::G2, Self::G3, Self::G4, Self::G5, Self::G6, Self::G7];

    pub fn new(label: i64) -> Result<Self> {
        if (1..=7).contains(&label) {
            Ok(Segment(label as u8))
        } else {
            Err(Error::Label(label))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub(crate) fn idx(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Γ{}", self.0)
    }
}

/// Outward normal, tangent `τ = perp(n)` and curvature `k = div n` at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub normal: Vec2,
    pub tangent: Vec2,
    pub curvature: f64,
}

impl Frame {
    pub fn from_normal(normal: Vec2, curvature: f64) -> Self {
        Self { normal, tangent: perp(normal), curvature }
    }
}

/// A regular parametrized curve with two derivatives.
pub trait AnalyticBoundary {
    fn point(&self, s: f64) -> Vec2;
    fn d1(&self, s: f64) -> Vec2;
    fn d2(&self, s: f64) -> Vec2;
    fn range(&self) -> (f64, f64);
    /// Parameter of the curve point nearest to `p` (locally).
    fn project(&self, p: Vec2) -> f64;

    /// Frame with normal on the right of the direction of travel, flipped when
    /// `outward_sign` is negative. Curvature follows the normal.
    fn frame(&self, s: f64, outward_sign: f64) -> Result<Frame> {
        let d1 = self.d1(s);
        let speed = norm(d1);
        if !(speed > 1e-14) {
            return Err(Error::DegenerateCurve(s));
        }
        let t = scale(1.0 / speed, d1);
        let n0 = [t[1], -t[0]];
        let kappa = cross(d1, self.d2(s)) / (speed * speed * speed);
        let sg = if outward_sign < 0.0 { -1.0 } else { 1.0 };
        Ok(Frame::from_normal(scale(sg, n0), sg * kappa))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve {
    /// Counterclockwise circle, `s ∈ [0, 2π)`.
    Circle { center: Vec2, radius: f64 },
    /// Straight line through `a` (s = 0) and `b` (s = 1).
    Line { a: Vec2, b: Vec2 },
}

impl AnalyticBoundary for Curve {
    fn point(&self, s: f64) -> Vec2 {
        match *self {
            Curve::Circle { center, radius } => add(center, [radius * cos(s), radius * sin(s)]),
            Curve::Line { a, b } => add(a, scale(s, sub(b, a))),
        }
    }

    fn d1(&self, s: f64) -> Vec2 {
        match *self {
            Curve::Circle { radius, .. } => [-radius * sin(s), radius * cos(s)],
            Curve::Line { a, b } => sub(b, a),
        }
    }

    fn d2(&self, s: f64) -> Vec2 {
        match *self {
            Curve::Circle { radius, .. } => [-radius * cos(s), -radius * sin(s)],
            Curve::Line { .. } => [0.0, 0.0],
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Curve::Circle { .. } => (0.0, 2.0 * PI),
            Curve::Line { .. } => (0.0, 1.0),
        }
    }

    fn project(&self, p: Vec2) -> f64 {
        match *self {
            Curve::Circle { center, .. } => {
                let d = sub(p, center);
                atan2(d[1], d[0])
            }
            Curve::Line { a, b } => {
                let d = sub(b, a);
                dot(sub(p, a), d) / dot(d, d)
            }
        }
    }
}

impl Curve {
    pub fn distance(&self, p: Vec2) -> f64 {
        norm(sub(p, self.point(self.project(p))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Oriented so that the domain lies on the left.
    pub nodes: [usize; 2],
    pub label: Segment,
    pub triangle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Vec2>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Analytic descriptions of curved segments.
    pub curves: Vec<(Segment, Curve)>,
}

impl Mesh {
    /// Validates and orients the input. Boundary edges may be listed in either direction.
    pub fn new(nodes: Vec<Vec2>, triangles: Vec<[usize; 3]>, boundary: Vec<([usize; 2], i64)>) -> Result<Self> {
        let n = nodes.len();
        let mut owner: BTreeMap<(usize, usize), (usize, usize, [usize; 2])> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Topology(format!("triangle {t} references a missing node")));
            }
            let [a, b, c] = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
            let area2 = cross(sub(b, a), sub(c, a));
            if !(area2 > 0.0) {
                return Err(Error::Topology(format!("triangle {t} is not counterclockwise (signed area {:e})", 0.5 * area2)));
            }
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                let e = owner.entry(key).or_insert((0, t, [i, j]));
                e.0 += 1;
                if e.0 > 2 {
                    return Err(Error::Topology(format!("edge ({i}, {j}) is shared by more than two triangles")));
                }
            }
        }
        let mut listed: BTreeMap<(usize, usize), Segment> = BTreeMap::new();
        let mut out = Vec::with_capacity(boundary.len());
        for &([i, j], label) in &boundary {
            let seg = Segment::new(label)?;
            let key = (i.min(j), i.max(j));
            if listed.insert(key, seg).is_some() {
                return Err(Error::Topology(format!("boundary edge ({i}, {j}) is listed twice")));
            }
            match owner.get(&key) {
                Some(&(1, t, dir)) => out.push(BoundaryEdge { nodes: dir, label: seg, triangle: t }),
                Some(_) => return Err(Error::Topology(format!("boundary edge ({i}, {j}) is interior"))),
                None => return Err(Error::Topology(format!("boundary edge ({i}, {j}) is dangling"))),
            }
        }
        for (key, &(count, _, _)) in &owner {
            if count == 1 && !listed.contains_key(key) {
                return Err(Error::Topology(format!("boundary edge ({}, {}) carries no label", key.0, key.1)));
            }
        }
        Ok(Self { nodes, triangles, boundary: out, curves: Vec::new() })
    }

    pub fn with_curve(mut self, seg: Segment, curve: Curve) -> Self {
        self.curves.push((seg, curve));
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * cross(sub(b, a), sub(c, a))
    }

    pub fn has_segment(&self, s: Segment) -> bool {
        self.boundary.iter().any(|e| e.label == s)
    }

    pub fn segments(&self) -> Vec<Segment> {
        Segment::ALL.iter().copied().filter(|&s| self.has_segment(s)).collect()
    }

    /// Largest edge length.
    pub fn h(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                h = h.max(norm(sub(self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]])));
            }
        }
        h
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.boundary[e].nodes;
        norm(sub(self.nodes[b], self.nodes[a]))
    }

    /// Unit outward normal of the straight boundary edge.
    pub fn edge_normal(&self, e: usize) -> Vec2 {
        let [a, b] = self.boundary[e].nodes;
        let d = normalize(sub(self.nodes[b], self.nodes[a]));
        [d[1], -d[0]]
    }

    /// Analytic curve registered for the edge's segment, nearest one if several.
    pub fn edge_curve(&self, e: usize) -> Option<&Curve> {
        let edge = &self.boundary[e];
        let mid = scale(0.5, add(self.nodes[edge.nodes[0]], self.nodes[edge.nodes[1]]));
        self.curves
            .iter()
            .filter(|(s, _)| *s == edge.label)
            .map(|(_, c)| c)
            .min_by(|a, b| a.distance(mid).partial_cmp(&b.distance(mid)).unwrap_or(core::cmp::Ordering::Equal))
    }

    /// Red refinement: every triangle split into four. Boundary midpoints on
    /// analytic curves are projected onto the curve.
    pub fn refine(&self) -> Result<Mesh> {
        let mut nodes = self.nodes.clone();
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut bmid: BTreeMap<(usize, usize), Vec2> = BTreeMap::new();
        for e in 0..self.boundary.len() {
            let [a, b] = self.boundary[e].nodes;
            if let Some(c) = self.edge_curve(e) {
                let m = scale(0.5, add(self.nodes[a], self.nodes[b]));
                bmid.insert((a.min(b), a.max(b)), c.point(c.project(m)));
            }
        }
        let mut midpoint = |i: usize, j: usize, nodes: &mut Vec<Vec2>| -> usize {
            let key = (i.min(j), i.max(j));
            *mid.entry(key).or_insert_with(|| {
                let p = bmid.get(&key).copied().unwrap_or_else(|| scale(0.5, add(nodes[i], nodes[j])));
                nodes.push(p);
                nodes.len() - 1
            })
        };
        let mut tris = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            tris.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut bnd = Vec::with_capacity(2 * self.boundary.len());
        for e in &self.boundary {
            let [a, b] = e.nodes;
            let m = midpoint(a, b, &mut nodes);
            bnd.push(([a, m], e.label.get() as i64));
            bnd.push(([m, b], e.label.get() as i64));
        }
        let mut out = Mesh::new(nodes, tris, bnd)?;
        out.curves = self.curves.clone();
        Ok(out)
    }
}

/// Frame data attached to a boundary node (diagnostic average at corners).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub node_id: usize,
    pub normal: Vec2,
    pub tangent: Vec2,
    pub curvature: f64,
    /// Segment change or sharp turn: edge frames differ on either side.
    pub corner: bool,
}

/// Frame data attached to a boundary edge, used by edge quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFrame {
    pub normal: Vec2,
    /// Normals and curvatures at the two end nodes as seen from this edge.
    pub end_frames: [Frame; 2],
    pub curve: Option<Curve>,
    /// Sign turning the curve's right-hand normal outward.
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    pub nodes: Vec<BoundaryFrame>,
    pub edges: Vec<EdgeFrame>,
    index: Vec<Option<usize>>,
}

/// Turning angle above which a boundary vertex is treated as a corner.
pub const CORNER_ANGLE: f64 = PI / 3.0;

impl Frames {
    pub fn node(&self, id: usize) -> Option<&BoundaryFrame> {
        self.index.get(id).copied().flatten().map(|k| &self.nodes[k])
    }

    /// Frame at the point `(1 − t) a + t b` of boundary edge `e`.
    pub fn at(&self, mesh: &Mesh, e: usize, t: f64) -> Frame {
        let ef = &self.edges[e];
        match ef.curve {
            Some(c) => {
                let [a, b] = mesh.boundary[e].nodes;
                let p = add(scale(1.0 - t, mesh.nodes[a]), scale(t, mesh.nodes[b]));
                // regularity was checked when the frames were built
                c.frame(c.project(p), ef.orientation).unwrap_or(Frame::from_normal(ef.normal, 0.0))
            }
            None => {
                let k = (1.0 - t) * ef.end_frames[0].curvature + t * ef.end_frames[1].curvature;
                Frame::from_normal(ef.normal, k)
            }
        }
    }
}

/// Builds node and edge frames. Analytic curves registered on the mesh take
/// precedence; elsewhere normals are bisectors of adjacent edge normals and
/// curvature is the turning angle over half the adjacent edge lengths.
pub fn build_frames(mesh: &Mesh) -> Result<Frames> {
    let n = mesh.n_nodes();
    let mut incoming = vec![usize::MAX; n];
    let mut outgoing = vec![usize::MAX; n];
    for (e, edge) in mesh.boundary.iter().enumerate() {
        let [a, b] = edge.nodes;
        if outgoing[a] != usize::MAX || incoming[b] != usize::MAX {
            return Err(Error::Topology(format!("boundary is not a manifold curve at edge {e}")));
        }
        outgoing[a] = e;
        incoming[b] = e;
    }
    let mut edges: Vec<EdgeFrame> = Vec::with_capacity(mesh.boundary.len());
    for e in 0..mesh.boundary.len() {
        let normal = mesh.edge_normal(e);
        let curve = mesh.edge_curve(e).copied();
        let mut orientation = 1.0;
        let placeholder = Frame::from_normal(normal, 0.0);
        let mut end_frames = [placeholder; 2];
        if let Some(c) = curve {
            let [a, b] = mesh.boundary[e].nodes;
            let mid = scale(0.5, add(mesh.nodes[a], mesh.nodes[b]));
            let f = c.frame(c.project(mid), 1.0)?;
            if dot(f.normal, normal) < 0.0 {
                orientation = -1.0;
            }
            for (k, &v) in [a, b].iter().enumerate() {
                end_frames[k] = c.frame(c.project(mesh.nodes[v]), orientation)?;
            }
        }
        edges.push(EdgeFrame { normal, end_frames, curve, orientation });
    }
    let mut nodes = Vec::new();
    let mut index = vec![None; n];
    for v in 0..n {
        let (ei, eo) = (incoming[v], outgoing[v]);
        if ei == usize::MAX && eo == usize::MAX {
            continue;
        }
        if ei == usize::MAX || eo == usize::MAX {
            return Err(Error::Topology(format!("boundary is open at node {v}")));
        }
        let (pi, po) = (mesh.boundary[ei].nodes[0], mesh.boundary[eo].nodes[1]);
        let d1 = sub(mesh.nodes[v], mesh.nodes[pi]);
        let d2 = sub(mesh.nodes[po], mesh.nodes[v]);
        let turn = atan2(cross(d1, d2), dot(d1, d2));
        let same = mesh.boundary[ei].label == mesh.boundary[eo].label;
        let corner = !same || abs(turn) > CORNER_ANGLE;
        let shared_curve = match (edges[ei].curve, edges[eo].curve) {
            (Some(a), Some(b)) if same && a == b => Some(a),
            _ => None,
        };
        let (normal, curvature) = if let Some(c) = shared_curve {
            let f = c.frame(c.project(mesh.nodes[v]), edges[eo].orientation)?;
            (f.normal, f.curvature)
        } else {
            let bis = normalize(add(edges[ei].normal, edges[eo].normal));
            let k = if corner { 0.0 } else { turn / (0.5 * (norm(d1) + norm(d2))) };
            (bis, k)
        };
        if shared_curve.is_none() {
            // polygonal edge ends: smooth nodes share the bisector, corners keep the edge normal
            let end_k = if corner { 0.0 } else { curvature };
            if edges[ei].curve.is_none() {
                let n = if corner { edges[ei].normal } else { normal };
                edges[ei].end_frames[1] = Frame::from_normal(n, end_k);
            }
            if edges[eo].curve.is_none() {
                let n = if corner { edges[eo].normal } else { normal };
                edges[eo].end_frames[0] = Frame::from_normal(n, end_k);
            }
        }
        index[v] = Some(nodes.len());
        nodes.push(BoundaryFrame { node_id: v, normal, tangent: perp(normal), curvature, corner });
    }
    Ok(Frames { nodes, edges, index })
}

/// Test geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `[0,1]²`; sides bottom, right, top, left.
    UnitSquare,
    /// Unit disk; one side, or two (upper half `y ≥ 0`, lower half).
    Disk,
    /// `inner < r < 1`; sides outer, inner.
    Annulus { inner: f64 },
    /// `[0,length] × [0,1]`; sides bottom, right (outlet), top, left (inlet).
    Channel { length: f64 },
}

impl Shape {
    pub fn side_count(&self) -> usize {
        match self {
            Shape::UnitSquare | Shape::Channel { .. } => 4,
            Shape::Disk => 2,
            Shape::Annulus { .. } => 2,
        }
    }
}

/// Labels per side of a [`Shape`]. A single label applies to every side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlan {
    pub sides: Vec<Segment>,
}

impl SegmentPlan {
    pub fn uniform(s: Segment) -> Self {
        Self { sides: vec![s] }
    }

    pub fn sides(sides: &[Segment]) -> Self {
        Self { sides: sides.to_vec() }
    }

    fn side(&self, k: usize) -> Segment {
        if self.sides.len() == 1 {
            self.sides[0]
        } else {
            self.sides[k.min(self.sides.len() - 1)]
        }
    }
}

pub fn generate_mesh(shape: Shape, resolution: usize, plan: &SegmentPlan) -> Result<Mesh> {
    if resolution == 0 {
        return Err(Error::InvalidData("resolution must be at least 1".into()));
    }
    if plan.sides.is_empty() || (plan.sides.len() != 1 && plan.sides.len() != shape.side_count()) {
        return Err(Error::InvalidData(format!("segment plan needs 1 or {} labels", shape.side_count())));
    }
    match shape {
        Shape::UnitSquare => rectangle(1.0, 1.0, resolution, resolution, plan),
        Shape::Channel { length } => {
            if !(length > 0.0) {
                return Err(Error::InvalidData("channel length must be positive".into()));
            }
            let nx = (round(length * resolution as f64) as usize).max(1);
            rectangle(length, 1.0, nx, resolution, plan)
        }
        Shape::Disk => disk(resolution, plan),
        Shape::Annulus { inner } => {
            if !(inner > 0.0 && inner < 1.0) {
                return Err(Error::InvalidData("annulus inner radius must lie in (0, 1)".into()));
            }
            annulus(inner, resolution, plan)
        }
    }
}

fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize, plan: &SegmentPlan) -> Result<Mesh> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    let mut bnd = Vec::new();
    let lab = |k: usize| plan.side(k).get() as i64;
    for i in 0..nx {
        bnd.push(([id(i, 0), id(i + 1, 0)], lab(0)));
        bnd.push(([id(i + 1, ny), id(i, ny)], lab(2)));
    }
    for j in 0..ny {
        bnd.push(([id(nx, j), id(nx, j + 1)], lab(1)));
        bnd.push(([id(0, j + 1), id(0, j)], lab(3)));
    }
    Mesh::new(nodes, tris, bnd)
}

fn disk(n: usize, plan: &SegmentPlan) -> Result<Mesh> {
    // ring i carries 6i nodes at radius i/n
    let mut nodes = vec![[0.0, 0.0]];
    let mut start = vec![0usize];
    for i in 1..=n {
        start.push(nodes.len());
        let m = 6 * i;
        let r = i as f64 / n as f64;
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            nodes.push([r * cos(th), r * sin(th)]);
        }
    }
    let mut tris = Vec::new();
    for j in 0..6 {
        tris.push([0, start[1] + j, start[1] + (j + 1) % 6]);
    }
    for i in 2..=n {
        let (mi, mo) = (6 * (i - 1), 6 * i);
        let (si, so) = (start[i - 1], start[i]);
        let (mut a, mut b) = (0usize, 0usize);
        while a < mi || b < mo {
            let ta = (a + 1) as f64 / mi as f64;
            let tb = (b + 1) as f64 / mo as f64;
            if b < mo && (a >= mi || tb <= ta) {
                tris.push([si + a % mi, so + b, so + (b + 1) % mo]);
                b += 1;
            } else {
                tris.push([si + a % mi, so + b % mo, si + (a + 1) % mi]);
                a += 1;
            }
        }
    }
    let outer = start[n];
    let m = 6 * n;
    let mut bnd = Vec::with_capacity(m);
    for j in 0..m {
        let (p, q) = (outer + j, outer + (j + 1) % m);
        let side = if plan.sides.len() > 1 && nodes[p][1] + nodes[q][1] < 0.0 { 1 } else { 0 };
        bnd.push(([p, q], plan.side(side).get() as i64));
    }
    let mut mesh = Mesh::new(nodes, tris, bnd)?;
    let circle = Curve::Circle { center: [0.0, 0.0], radius: 1.0 };
    for s in mesh.segments() {
        mesh.curves.push((s, circle));
    }
    Ok(mesh)
}

fn annulus(inner: f64, n: usize, plan: &SegmentPlan) -> Result<Mesh> {
    let nr = n;
    let mid = 0.5 * (1.0 + inner);
    let nt = (round(2.0 * PI * mid / ((1.0 - inner) / nr as f64)) as usize).max(6);
    let id = |i: usize, j: usize| i * nt + j % nt;
    let mut nodes = Vec::with_capacity((nr + 1) * nt);
    for i in 0..=nr {
        let r = inner + (1.0 - inner) * i as f64 / nr as f64;
        for j in 0..nt {
            let th = 2.0 * PI * j as f64 / nt as f64;
            nodes.push([r * cos(th), r * sin(th)]);
        }
    }
    let mut tris = Vec::with_capacity(2 * nr * nt);
    for i in 0..nr {
        for j in 0..nt {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    let mut bnd = Vec::new();
    for j in 0..nt {
        bnd.push(([id(nr, j), id(nr, j + 1)], plan.side(0).get() as i64));
        bnd.push(([id(0, j + 1), id(0, j)], plan.side(1).get() as i64));
    }
    let mut mesh = Mesh::new(nodes, tris, bnd)?;
    mesh.curves.push((plan.side(0), Curve::Circle { center: [0.0, 0.0], radius: 1.0 }));
    mesh.curves.push((plan.side(1), Curve::Circle { center: [0.0, 0.0], radius: inner }));
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts() {
        let m = generate_mesh(Shape::UnitSquare, 2, &SegmentPlan::uniform(Segment::G1)).unwrap();
        assert_eq!((m.nodes.len(), m.triangles.len(), m.boundary.len()), (9, 8, 8));
    }

    #[test]
    fn flipped_triangle_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = Mesh::new(nodes, vec![[0, 2, 1]], vec![([0, 1], 1), ([1, 2], 1), ([2, 0], 1)]);
        assert!(matches!(r, Err(Error::Topology(_))));
    }

    #[test]
    fn unlabeled_boundary_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = Mesh::new(nodes, vec![[0, 1, 2]], vec![([0, 1], 1), ([1, 2], 1)]);
        assert!(matches!(r, Err(Error::Topology(_))));
    }

    #[test]
    fn label_out_of_range() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = Mesh::new(nodes, vec![[0, 1, 2]], vec![([0, 1], 1), ([1, 2], 9), ([2, 0], 1)]);
        assert_eq!(r, Err(Error::Label(9)));
    }

    #[test]
    fn circle_frames_are_exact() {
        for n in [2, 5] {
            let m = generate_mesh(Shape::Disk, n, &SegmentPlan::uniform(Segment::G2)).unwrap();
            let f = build_frames(&m).unwrap();
            for bf in &f.nodes {
                assert!((bf.curvature - 1.0).abs() < 1e-12);
                let p = m.nodes[bf.node_id];
                assert!((norm(p) - 1.0).abs() < 1e-12);
                assert!((bf.normal[0] - p[0]).abs() < 1e-12 && (bf.normal[1] - p[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn annulus_inner_curvature_is_negative() {
        let m = generate_mesh(Shape::Annulus { inner: 0.5 }, 3, &SegmentPlan::sides(&[Segment::G1, Segment::G3])).unwrap();
        let f = build_frames(&m).unwrap();
        for bf in &f.nodes {
            let r = norm(m.nodes[bf.node_id]);
            let want = if r < 0.75 { -2.0 } else { 1.0 };
            assert!((bf.curvature - want).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn square_corners_flagged() {
        let plan = SegmentPlan::sides(&[Segment::G1, Segment::G7, Segment::G1, Segment::G1]);
        let m = generate_mesh(Shape::UnitSquare, 4, &plan).unwrap();
        let f = build_frames(&m).unwrap();
        let corners = f.nodes.iter().filter(|b| b.corner).count();
        assert_eq!(corners, 4);
        for bf in f.nodes.iter().filter(|b| !b.corner) {
            assert_eq!(bf.curvature, 0.0);
        }
    }

    #[test]
    fn refinement_keeps_disk_boundary_on_circle() {
        let m = generate_mesh(Shape::Disk, 2, &SegmentPlan::uniform(Segment::G3)).unwrap().refine().unwrap();
        for e in &m.boundary {
            assert!((norm(m.nodes[e.nodes[0]]) - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.triangles.len(), 4 * 6 * 4);
    }
}
