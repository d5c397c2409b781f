//! Square-lattice approximations of doubly connected domains.
//!
//! A domain is specified by two disjoint Jordan curves (outer and inner) and a
//! marked boundary start point with an access direction. The graph has a
//! vertex for every lattice point of `delta * Z^2` inside the domain and for
//! every intersection of the boundary with a lattice edge; edges are the
//! sub-segments of lattice edges whose open interior lies in the domain. Two
//! boundary vertices are never adjacent. Circles are intersected exactly;
//! polygons by segment tests with a snap tolerance.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("degenerate domain specification: {0}")]
    DegenerateSpec(String),
    #[error("no lattice path from the start vertex to the target boundary")]
    Disconnected,
}

pub type Result<T> = std::result::Result<T, GridError>;

/// Geometric snap tolerance: lattice points closer than this to a boundary
/// curve are treated as boundary vertices.
pub const SNAP: f64 = 1e-12;

/// Vertex classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    /// Interior vertex (lattice point strictly inside the domain).
    Interior,
    /// On the boundary component carrying the start point (or on a slit grown
    /// from it).
    StartBoundary,
    /// On the target boundary component.
    TargetBoundary,
}

/// A boundary curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Curve {
    Circle { center: [f64; 2], radius: f64 },
    Polygon(Vec<[f64; 2]>),
}

impl Curve {
    /// Unsigned distance from `p` to the curve.
    fn distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Curve::Circle { center, radius } => {
                (((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius).abs()
            }
            Curve::Polygon(pts) => {
                let mut d = f64::INFINITY;
                let n = pts.len();
                for i in 0..n {
                    d = d.min(point_segment_distance(p, pts[i], pts[(i + 1) % n]));
                }
                d
            }
        }
    }

    /// Whether `p` lies in the bounded Jordan interior of the curve.
    fn encloses(&self, p: [f64; 2]) -> bool {
        match self {
            Curve::Circle { center, radius } => {
                (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) < radius * radius
            }
            Curve::Polygon(pts) => {
                // ray casting along +x
                let n = pts.len();
                let mut inside = false;
                for i in 0..n {
                    let (a, b) = (pts[i], pts[(i + 1) % n]);
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if x > p[0] {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Parameters `t` in (0,1) where the segment `a + t (b - a)` crosses the curve.
    fn crossings(&self, a: [f64; 2], b: [f64; 2]) -> Vec<f64> {
        let mut ts = Vec::new();
        match self {
            Curve::Circle { center, radius } => {
                let d = [b[0] - a[0], b[1] - a[1]];
                let f = [a[0] - center[0], a[1] - center[1]];
                let qa = d[0] * d[0] + d[1] * d[1];
                let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
                let qc = f[0] * f[0] + f[1] * f[1] - radius * radius;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc > 0.0 {
                    let s = disc.sqrt();
                    for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
                        if t > 1e-9 && t < 1.0 - 1e-9 {
                            ts.push(t);
                        }
                    }
                }
            }
            Curve::Polygon(pts) => {
                let n = pts.len();
                for i in 0..n {
                    let (p, q) = (pts[i], pts[(i + 1) % n]);
                    if let Some(t) = segment_intersection_t(a, b, p, q) {
                        if t > 1e-9 && t < 1.0 - 1e-9 {
                            ts.push(t);
                        }
                    }
                }
            }
        }
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        ts
    }

    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Curve::Circle { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Curve::Polygon(pts) => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in pts {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
        }
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
}

/// Intersection parameter on segment `ab` with segment `pq`, if any.
fn segment_intersection_t(a: [f64; 2], b: [f64; 2], p: [f64; 2], q: [f64; 2]) -> Option<f64> {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [q[0] - p[0], q[1] - p[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    if denom.abs() < 1e-300 {
        return None;
    }
    let ap = [p[0] - a[0], p[1] - a[1]];
    let t = (ap[0] * s[1] - ap[1] * s[0]) / denom;
    let u = (ap[0] * r[1] - ap[1] * r[0]) / denom;
    if (-1e-12..=1.0 + 1e-12).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Which boundary component carries the marked start point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartSide {
    Outer,
    Inner,
}

/// A doubly connected domain with a marked boundary start point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub outer: Curve,
    pub inner: Curve,
    pub start_point: [f64; 2],
    /// Direction of the access segment, pointing into the domain.
    pub access: [f64; 2],
    pub start_side: StartSide,
}

impl DomainSpec {
    /// The standard annulus `e^{-p} < |z| < 1` with start at 1 on the unit circle.
    pub fn annulus(p: f64) -> Self {
        Self {
            outer: Curve::Circle { center: [0.0, 0.0], radius: 1.0 },
            inner: Curve::Circle { center: [0.0, 0.0], radius: (-p).exp() },
            start_point: [1.0, 0.0],
            access: [-1.0, 0.0],
            start_side: StartSide::Outer,
        }
    }

    fn inside(&self, p: [f64; 2]) -> bool {
        self.outer.encloses(p) && !self.inner.encloses(p)
    }
}

/// How the vertex set is indexed geometrically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GeometryKind {
    /// Subgraph of `delta * Z^2` plus boundary intersection vertices.
    Planar { delta: f64 },
    /// Periodic cylinder lattice with `n` columns and height `p`.
    Cylinder { n: usize, p: f64 },
    /// Hand-built graph (tests, fixtures); no lattice structure.
    Abstract,
}

/// A quadrilateral lattice face with all four corners and sides present.
#[derive(Debug, Clone, Serialize)]
pub struct Face {
    /// Lower-left lattice coordinate.
    pub key: (i64, i64),
    /// Corner vertices: lower-left, lower-right, upper-right, upper-left.
    pub corners: [u32; 4],
}

/// Directed dual edge between two faces, crossing one primal edge. The
/// conjugate increment across it is `phi(plus) - phi(minus)` for the potential
/// `phi` being conjugated.
#[derive(Debug, Clone, Copy)]
pub struct DualEdge {
    pub from: u32,
    pub to: u32,
    pub plus: u32,
    pub minus: u32,
    /// Primal edge crossed (used to exclude crossings of boundary-boundary edges).
    pub crossing: (u32, u32),
}

#[derive(Debug)]
pub struct Topo {
    pub positions: Vec<[f64; 2]>,
    adj_off: Vec<u32>,
    adj: Vec<u32>,
    pub lattice: Vec<Option<(i64, i64)>>,
    pub lattice_index: HashMap<(i64, i64), u32>,
    pub geometry: GeometryKind,
    pub faces: Vec<Face>,
    pub face_index: HashMap<(i64, i64), u32>,
    pub dual_edges: Vec<DualEdge>,
}

impl Topo {
    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[self.adj_off[v] as usize..self.adj_off[v + 1] as usize]
    }
    pub fn degree(&self, v: usize) -> usize {
        (self.adj_off[v + 1] - self.adj_off[v]) as usize
    }
}

/// The lattice graph of a domain, with a vertex partition into interior,
/// start-side boundary and target boundary.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    pub topo: Arc<Topo>,
    labels: Vec<Label>,
    pub start_vertex: Option<usize>,
    pub marked_vertex: Option<usize>,
}

impl LatticeDomain {
    pub fn n_vertices(&self) -> usize {
        self.topo.n_vertices()
    }
    pub fn neighbors(&self, v: usize) -> &[u32] {
        self.topo.neighbors(v)
    }
    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }
    pub fn position(&self, v: usize) -> [f64; 2] {
        self.topo.positions[v]
    }
    pub fn delta(&self) -> f64 {
        match self.topo.geometry {
            GeometryKind::Planar { delta } => delta,
            GeometryKind::Cylinder { n, .. } => 2.0 * std::f64::consts::PI / n as f64,
            GeometryKind::Abstract => 1.0,
        }
    }

    pub fn vertices_with(&self, label: Label) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.labels[v] == label).collect()
    }
    /// Start-side boundary vertices (the E-set).
    pub fn start_set(&self) -> Vec<usize> {
        self.vertices_with(Label::StartBoundary)
    }
    /// Target boundary vertices (the F-set).
    pub fn target_set(&self) -> Vec<usize> {
        self.vertices_with(Label::TargetBoundary)
    }

    /// Relabel a path prefix as start-side boundary (a grown slit). The graph
    /// itself is untouched: absorbed vertices keep their edges, matching the
    /// walk semantics of absorption.
    pub fn with_slit(&self, prefix: &[usize]) -> LatticeDomain {
        let mut labels = self.labels.clone();
        for &v in prefix {
            labels[v] = Label::StartBoundary;
        }
        LatticeDomain {
            topo: Arc::clone(&self.topo),
            labels,
            start_vertex: self.start_vertex,
            marked_vertex: self.marked_vertex,
        }
    }

    /// Build from an explicit edge list (tests, fixtures).
    pub fn from_graph(
        positions: Vec<[f64; 2]>,
        edges: &[(usize, usize)],
        labels: Vec<Label>,
        start_vertex: Option<usize>,
    ) -> LatticeDomain {
        let n = positions.len();
        assert_eq!(labels.len(), n);
        let topo = build_topo(positions, edges, vec![None; n], GeometryKind::Abstract);
        LatticeDomain { topo: Arc::new(topo), labels, start_vertex, marked_vertex: None }
    }

    /// Nearest vertex (by Euclidean distance) with the given label filter.
    pub fn nearest_vertex<F: Fn(Label) -> bool>(&self, p: [f64; 2], keep: F) -> Option<usize> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for v in 0..self.n_vertices() {
            if !keep(self.labels[v]) {
                continue;
            }
            let q = self.position(v);
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = Some(v);
            }
        }
        best
    }

    /// Snap a polyline (e.g. a continuum trace) to a lattice vertex path:
    /// nearest interior vertices joined by grid staircase steps.
    pub fn snap_polyline(&self, pts: &[[f64; 2]]) -> Vec<usize> {
        let delta = self.delta();
        let mut out: Vec<usize> = Vec::new();
        for p in pts {
            let v = match self.nearest_vertex(*p, |l| l == Label::Interior) {
                Some(v) => v,
                None => continue,
            };
            if out.last() == Some(&v) {
                continue;
            }
            if let Some(&prev) = out.last() {
                // staircase between lattice coordinates
                if let (Some((i0, j0)), Some((i1, j1))) =
                    (self.topo.lattice[prev], self.topo.lattice[v])
                {
                    let mut i = i0;
                    let mut j = j0;
                    while i != i1 || j != j1 {
                        if i != i1 {
                            i += (i1 - i).signum();
                        } else {
                            j += (j1 - j).signum();
                        }
                        if let Some(w) = self.lattice_vertex(i, j) {
                            if out.last() != Some(&w) {
                                out.push(w);
                            }
                        } else {
                            break;
                        }
                    }
                    let _ = delta;
                    continue;
                }
            }
            out.push(v);
        }
        out
    }

    pub fn lattice_vertex(&self, i: i64, j: i64) -> Option<usize> {
        // linear scan avoided: lattice index map lives in the topo
        self.topo.lattice_index.get(&(i, j)).map(|&v| v as usize)
    }

    /// JSON document for inspection and fixtures.
    pub fn to_json(&self) -> serde_json::Value {
        let verts: Vec<serde_json::Value> = (0..self.n_vertices())
            .map(|v| {
                let p = self.position(v);
                serde_json::json!({ "id": v, "x": p[0], "y": p[1], "label": self.labels[v] })
            })
            .collect();
        let mut edges = Vec::new();
        for v in 0..self.n_vertices() {
            for &w in self.neighbors(v) {
                if (w as usize) > v {
                    edges.push(serde_json::json!([v, w]));
                }
            }
        }
        serde_json::json!({
            "delta": self.delta(),
            "start_vertex": self.start_vertex,
            "marked_vertex": self.marked_vertex,
            "vertices": verts,
            "edges": edges,
        })
    }
}

fn lattice_index_build(lattice: &[Option<(i64, i64)>]) -> HashMap<(i64, i64), u32> {
    let mut m = HashMap::new();
    for (v, c) in lattice.iter().enumerate() {
        if let Some(c) = c {
            m.insert(*c, v as u32);
        }
    }
    m
}

fn build_topo(
    positions: Vec<[f64; 2]>,
    edges: &[(usize, usize)],
    lattice: Vec<Option<(i64, i64)>>,
    geometry: GeometryKind,
) -> Topo {
    let n = positions.len();
    let mut deg = vec![0u32; n];
    for &(u, v) in edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let mut adj_off = vec![0u32; n + 1];
    for v in 0..n {
        adj_off[v + 1] = adj_off[v] + deg[v];
    }
    let mut adj = vec![0u32; adj_off[n] as usize];
    let mut fill = adj_off.clone();
    for &(u, v) in edges {
        adj[fill[u] as usize] = v as u32;
        fill[u] += 1;
        adj[fill[v] as usize] = u as u32;
        fill[v] += 1;
    }
    // sorted neighbor lists make edge lookups and iteration deterministic
    for v in 0..n {
        adj[adj_off[v] as usize..adj_off[v + 1] as usize].sort_unstable();
    }
    let lattice_index = lattice_index_build(&lattice);
    let mut topo = Topo {
        positions,
        adj_off,
        adj,
        lattice,
        geometry,
        faces: Vec::new(),
        face_index: HashMap::new(),
        dual_edges: Vec::new(),
        lattice_index,
    };
    build_faces(&mut topo);
    topo
}

fn has_edge(topo: &Topo, u: u32, v: u32) -> bool {
    topo.neighbors(u as usize).binary_search(&v).is_ok()
}

/// Enumerate unit lattice squares with all four corners and all four sides in
/// the graph, and the dual adjacency between them.
fn build_faces(topo: &mut Topo) {
    if !matches!(topo.geometry, GeometryKind::Planar { .. }) {
        return;
    }
    let mut face_index: HashMap<(i64, i64), u32> = HashMap::new();
    topo.face_index.clear();
    let mut keys: Vec<(i64, i64)> = topo.lattice.iter().flatten().copied().collect();
    keys.sort_unstable();
    for &(i, j) in &keys {
        let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
        let vs: Option<Vec<u32>> = c.iter().map(|k| topo.lattice_index.get(k).copied()).collect();
        let Some(vs) = vs else { continue };
        let sides_ok = has_edge(topo, vs[0], vs[1])
            && has_edge(topo, vs[1], vs[2])
            && has_edge(topo, vs[2], vs[3])
            && has_edge(topo, vs[3], vs[0]);
        if !sides_ok {
            continue;
        }
        let idx = topo.faces.len() as u32;
        topo.faces.push(Face { key: (i, j), corners: [vs[0], vs[1], vs[2], vs[3]] });
        face_index.insert((i, j), idx);
    }
    // dual edges: +x crossing the shared vertical side, +y crossing the shared
    // horizontal side; conjugate increment is phi(plus) - phi(minus).
    let faces = topo.faces.clone();
    for f in &faces {
        let (i, j) = f.key;
        let here = face_index[&(i, j)];
        if let Some(&right) = face_index.get(&(i + 1, j)) {
            // crossing edge ((i+1,j),(i+1,j+1)); increment phi(bottom) - phi(top)
            let bottom = topo.lattice_index[&(i + 1, j)];
            let top = topo.lattice_index[&(i + 1, j + 1)];
            topo.dual_edges.push(DualEdge {
                from: here,
                to: right,
                plus: bottom,
                minus: top,
                crossing: (bottom, top),
            });
        }
        if let Some(&up) = face_index.get(&(i, j + 1)) {
            // crossing edge ((i,j+1),(i+1,j+1)); increment phi(right) - phi(left)
            let left = topo.lattice_index[&(i, j + 1)];
            let right_v = topo.lattice_index[&(i + 1, j + 1)];
            topo.dual_edges.push(DualEdge {
                from: here,
                to: up,
                plus: right_v,
                minus: left,
                crossing: (left, right_v),
            });
        }
    }
    topo.face_index = face_index;
}

/// Build the lattice approximation of a domain at mesh `delta`.
pub fn build_lattice(spec: &DomainSpec, delta: f64) -> Result<LatticeDomain> {
    if !(delta > 0.0) {
        return Err(GridError::DegenerateSpec(format!("delta = {delta}")));
    }
    let (lo, hi) = spec.outer.bounding_box();
    let imin = (lo[0] / delta).floor() as i64 - 1;
    let imax = (hi[0] / delta).ceil() as i64 + 1;
    let jmin = (lo[1] / delta).floor() as i64 - 1;
    let jmax = (hi[1] / delta).ceil() as i64 + 1;

    let pos = |i: i64, j: i64| [i as f64 * delta, j as f64 * delta];

    // classify lattice points: None = outside, Some(label)
    let classify = |p: [f64; 2]| -> Option<Label> {
        if spec.outer.distance(p) < SNAP {
            return Some(boundary_label(spec, StartSide::Outer));
        }
        if spec.inner.distance(p) < SNAP {
            return Some(boundary_label(spec, StartSide::Inner));
        }
        if spec.inside(p) {
            Some(Label::Interior)
        } else {
            None
        }
    };

    let mut positions: Vec<[f64; 2]> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut lattice: Vec<Option<(i64, i64)>> = Vec::new();
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();

    for j in jmin..=jmax {
        for i in imin..=imax {
            let p = pos(i, j);
            if let Some(l) = classify(p) {
                index.insert((i, j), positions.len());
                positions.push(p);
                labels.push(l);
                lattice.push(Some((i, j)));
            }
        }
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let push_edge = |edges: &mut Vec<(usize, usize)>, labels: &[Label], u: usize, v: usize| {
        // boundary vertices are never adjacent to each other
        if labels[u] != Label::Interior && labels[v] != Label::Interior {
            return;
        }
        edges.push((u, v));
    };

    // scan lattice edges in +x and +y direction
    for j in jmin..=jmax {
        for i in imin..=imax {
            let a = pos(i, j);
            for (di, dj) in [(1i64, 0i64), (0, 1)] {
                let b = pos(i + di, j + dj);
                let ia = index.get(&(i, j)).copied();
                let ib = index.get(&(i + di, j + dj)).copied();
                let mut cuts = spec.outer.crossings(a, b);
                cuts.extend(spec.inner.crossings(a, b));
                cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
                // drop crossings that duplicate an on-curve lattice endpoint
                cuts.retain(|&t| {
                    let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let near_a = ia.is_some_and(|u| dist2(q, positions[u]) < (SNAP * 10.0).powi(2));
                    let near_b = ib.is_some_and(|u| dist2(q, positions[u]) < (SNAP * 10.0).powi(2));
                    !(near_a || near_b)
                });

                if cuts.is_empty() {
                    if let (Some(u), Some(v)) = (ia, ib) {
                        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                        if spec.inside(mid) {
                            push_edge(&mut edges, &labels, u, v);
                        }
                    }
                    continue;
                }

                // vertices along the edge: a?, crossings..., b?
                let mut stations: Vec<(f64, usize)> = Vec::new();
                if let Some(u) = ia {
                    stations.push((0.0, u));
                }
                for &t in &cuts {
                    let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let on_outer = spec.outer.distance(q) < spec.inner.distance(q);
                    let side = if on_outer { StartSide::Outer } else { StartSide::Inner };
                    let id = positions.len();
                    positions.push(q);
                    labels.push(boundary_label(spec, side));
                    lattice.push(None);
                    stations.push((t, id));
                }
                if let Some(u) = ib {
                    stations.push((1.0, u));
                }
                for w in stations.windows(2) {
                    let (t0, u) = w[0];
                    let (t1, v) = w[1];
                    let tm = (t0 + t1) / 2.0;
                    let mid = [a[0] + tm * (b[0] - a[0]), a[1] + tm * (b[1] - a[1])];
                    if spec.inside(mid) {
                        push_edge(&mut edges, &labels, u, v);
                    }
                }
            }
        }
    }

    let n = positions.len();
    let topo = build_topo(positions, &edges, lattice, GeometryKind::Planar { delta });
    let mut dom = LatticeDomain {
        topo: Arc::new(topo),
        labels,
        start_vertex: None,
        marked_vertex: None,
    };
    if n == 0 {
        return Err(GridError::MeshTooCoarse("no vertices".into()));
    }

    // locate the marked boundary vertex and its interior access neighbor
    let start_label = boundary_label(spec, spec.start_side);
    let marked = dom
        .nearest_vertex(spec.start_point, |l| l == start_label)
        .filter(|&v| dist2(dom.position(v), spec.start_point) < (delta / 2.0).powi(2))
        .ok_or_else(|| GridError::MeshTooCoarse("no boundary vertex near the start point".into()))?;
    let mut best: Option<(f64, usize)> = None;
    for &w in dom.neighbors(marked) {
        let w = w as usize;
        if dom.label(w) != Label::Interior {
            continue;
        }
        let d = [
            dom.position(w)[0] - dom.position(marked)[0],
            dom.position(w)[1] - dom.position(marked)[1],
        ];
        let dot = d[0] * spec.access[0] + d[1] * spec.access[1];
        if best.map_or(true, |(b, _)| dot > b) {
            best = Some((dot, w));
        }
    }
    let start = best
        .filter(|(dot, _)| *dot > 0.0)
        .map(|(_, w)| w)
        .ok_or_else(|| GridError::MeshTooCoarse("marked vertex has no interior access neighbor".into()))?;
    dom.marked_vertex = Some(marked);
    dom.start_vertex = Some(start);
    Ok(dom)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn boundary_label(spec: &DomainSpec, side: StartSide) -> Label {
    if side == spec.start_side {
        Label::StartBoundary
    } else {
        Label::TargetBoundary
    }
}

/// Keep exactly the union of lattice paths from the start vertex to boundary
/// vertices whose interior vertices stay inside the domain: the interior
/// component of the start vertex plus adjacent boundary vertices.
pub fn prune_reachable(dom: &LatticeDomain) -> Result<LatticeDomain> {
    let start = dom.start_vertex.ok_or(GridError::Disconnected)?;
    let n = dom.n_vertices();
    let mut keep = vec![false; n];
    let mut stack = vec![start];
    keep[start] = true;
    while let Some(v) = stack.pop() {
        for &w in dom.neighbors(v) {
            let w = w as usize;
            if keep[w] || dom.label(w) != Label::Interior {
                continue;
            }
            keep[w] = true;
            stack.push(w);
        }
    }
    // boundary vertices adjacent to the kept interior stay
    for v in 0..n {
        if dom.label(v) != Label::Interior && !keep[v] {
            if dom.neighbors(v).iter().any(|&w| keep[w as usize] && dom.label(w as usize) == Label::Interior) {
                keep[v] = true;
            }
        }
    }
    if !dom.target_set().iter().any(|&v| keep[v]) {
        return Err(GridError::Disconnected);
    }

    let mut remap = vec![usize::MAX; n];
    let mut positions = Vec::new();
    let mut labels = Vec::new();
    let mut lattice = Vec::new();
    for v in 0..n {
        if keep[v] {
            remap[v] = positions.len();
            positions.push(dom.position(v));
            labels.push(dom.label(v));
            lattice.push(dom.topo.lattice[v]);
        }
    }
    let mut edges = Vec::new();
    for v in 0..n {
        if !keep[v] {
            continue;
        }
        for &w in dom.neighbors(v) {
            let w = w as usize;
            if keep[w] && w > v {
                edges.push((remap[v], remap[w]));
            }
        }
    }
    let geometry = match dom.topo.geometry {
        GeometryKind::Planar { delta } => GeometryKind::Planar { delta },
        GeometryKind::Cylinder { n, p } => GeometryKind::Cylinder { n, p },
        GeometryKind::Abstract => GeometryKind::Abstract,
    };
    let topo = build_topo(positions, &edges, lattice, geometry);
    Ok(LatticeDomain {
        topo: Arc::new(topo),
        labels,
        start_vertex: dom.start_vertex.map(|v| remap[v]),
        marked_vertex: dom.marked_vertex.map(|v| remap[v]).filter(|&v| v != usize::MAX),
    })
}

/// Periodic cylinder lattice approximating `(R / 2 pi Z) x (0, p)`: columns at
/// angles `2 pi k / n`, rows at heights `2 pi m / n` for `0 <= m <= floor(pn/2pi)`,
/// plus the top boundary row at height `p`. Vertices are adjacent when their
/// cylinder distance is at most `2 pi / n`; boundary rows are the two label
/// sets, and every boundary vertex has a unique interior neighbor.
pub fn build_cylinder(n: usize, p: f64) -> Result<LatticeDomain> {
    let tau = 2.0 * std::f64::consts::PI;
    if !(p > 0.0) || n == 0 {
        return Err(GridError::DegenerateSpec(format!("n = {n}, p = {p}")));
    }
    if (n as f64) <= tau / p {
        return Err(GridError::MeshTooCoarse(format!("need n > 2 pi / p = {}", tau / p)));
    }
    let h = tau / n as f64;
    let m_max = (p / h).floor() as usize;
    if ((p / h) - (p / h).floor()).abs() < 1e-12 {
        return Err(GridError::DegenerateSpec(
            "p is an exact multiple of the mesh; top boundary row coincides with a lattice row".into(),
        ));
    }
    let mut positions = Vec::new();
    let mut labels = Vec::new();
    // rows m = 0 (bottom boundary), 1..=m_max interior, top boundary row at p
    let vid = |k: usize, m: usize| m * n + k;
    for m in 0..=m_max {
        for k in 0..n {
            positions.push([h * (k as f64 + 1.0), h * m as f64]);
            labels.push(if m == 0 { Label::StartBoundary } else { Label::Interior });
        }
    }
    let top0 = positions.len();
    for k in 0..n {
        positions.push([h * (k as f64 + 1.0), p]);
        labels.push(Label::TargetBoundary);
    }
    let mut edges = Vec::new();
    for m in 1..=m_max {
        for k in 0..n {
            // horizontal wrap within interior rows
            edges.push((vid(k, m), vid((k + 1) % n, m)));
        }
    }
    for m in 0..m_max {
        for k in 0..n {
            edges.push((vid(k, m), vid(k, m + 1)));
        }
    }
    // top boundary row connects straight down to the last interior row
    for k in 0..n {
        edges.push((top0 + k, vid(k, m_max)));
    }
    let nv = positions.len();
    let topo = build_topo(positions, &edges, vec![None; nv], GeometryKind::Cylinder { n, p });
    Ok(LatticeDomain {
        topo: Arc::new(topo),
        labels,
        start_vertex: Some(vid(0, 1)),
        marked_vertex: Some(vid(0, 0)),
    })
}
