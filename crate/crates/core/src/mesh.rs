//! Triangulations of the closed unit disk.
//!
//! Level `L` places `N = 2^L` concentric rings of radii `k/N`; ring `k` carries
//! `6k` vertices at angles `2πj/(6k)`, so every level contains the previous
//! one and the boundary ring has `6·2^L` vertices at exact angles.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_LEVEL: u32 = 10;

/// Per-triangle P1 geometry.
#[derive(Debug, Clone, Copy)]
pub struct TriGeom {
    pub area: f64,
    /// Gradients of the three barycentric coordinate functions.
    pub grads: [[f64; 2]; 3],
    /// `area · <grad_k, grad_l>`; the element stiffness matrix.
    pub stiffness: [[f64; 3]; 3],
}

#[derive(Debug, Clone)]
pub struct DiskMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    level: u32,
    edges: Vec<[usize; 2]>,
    edge_lookup: HashMap<(usize, usize), usize>,
    tri_edges: Vec<[usize; 3]>,
    geometry: Vec<TriGeom>,
    on_boundary: Vec<bool>,
    one_rings: Vec<Vec<usize>>,
    vertex_triangles: Vec<Vec<usize>>,
    locator: Locator,
}

fn ring_start(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        1 + 3 * k * (k - 1)
    }
}

/// The structured ring mesh of the given level.
pub fn build_disk_mesh(level: u32) -> Result<DiskMesh> {
    if level > MAX_LEVEL {
        return Err(Error::LevelTooLarge { level, max: MAX_LEVEL });
    }
    let rings = 1usize << level;
    let mut vertices = vec![[0.0, 0.0]];
    for k in 1..=rings {
        let r = k as f64 / rings as f64;
        let count = 6 * k;
        for j in 0..count {
            let t = 2.0 * PI * j as f64 / count as f64;
            vertices.push([r * t.cos(), r * t.sin()]);
        }
    }
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for k in 0..rings {
        let inner = |i: usize| -> usize {
            if k == 0 {
                0
            } else {
                ring_start(k) + i % (6 * k)
            }
        };
        let outer = |j: usize| -> usize { ring_start(k + 1) + j % (6 * (k + 1)) };
        for s in 0..6 {
            for i in 0..=k {
                triangles.push([inner(s * k + i), outer(s * (k + 1) + i), outer(s * (k + 1) + i + 1)]);
            }
            for i in 0..k {
                triangles.push([inner(s * k + i), outer(s * (k + 1) + i + 1), inner(s * k + i + 1)]);
            }
        }
    }
    let boundary = (ring_start(rings)..ring_start(rings) + 6 * rings).collect();
    DiskMesh::from_parts(vertices, triangles, boundary, level)
}

impl DiskMesh {
    /// Assemble and validate a mesh from raw arrays.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<usize>,
        level: u32,
    ) -> Result<Self> {
        let nv = vertices.len();
        if triangles.iter().flatten().any(|&i| i >= nv) || boundary.iter().any(|&i| i >= nv) {
            return Err(Error::Invalid("vertex index out of range".into()));
        }
        for &b in &boundary {
            let [x, y] = vertices[b];
            if ((x * x + y * y).sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!("boundary vertex {b} is off the unit circle")));
            }
        }
        let mut turned = 0.0;
        for w in 0..boundary.len() {
            let [x0, y0] = vertices[boundary[w]];
            let [x1, y1] = vertices[boundary[(w + 1) % boundary.len()]];
            let step = (x0 * y1 - y0 * x1).atan2(x0 * x1 + y0 * y1);
            if step <= 0.0 {
                return Err(Error::Invalid("boundary loop is not monotone in angle".into()));
            }
            turned += step;
        }
        if boundary.len() < 3 || (turned - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::Invalid("boundary loop must wind once around the disk".into()));
        }

        let mut geometry = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let g = tri_geometry(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(g.area > 0.0) {
                return Err(Error::Invalid(format!("triangle {t} is degenerate or clockwise")));
            }
            geometry.push(g);
        }

        let mut edges = Vec::new();
        let mut edge_lookup = HashMap::new();
        let mut edge_uses: Vec<usize> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_uses.push(0);
                    edges.len() - 1
                });
                edge_uses[e] += 1;
                te[k] = e;
            }
            tri_edges.push(te);
        }
        if edge_uses.iter().any(|&u| u > 2) {
            return Err(Error::Invalid("mesh is not edge-manifold".into()));
        }
        let euler = nv as i64 - edges.len() as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(Error::Invalid(format!("Euler characteristic {euler}, expected 1")));
        }

        let mut on_boundary = vec![false; nv];
        for &b in &boundary {
            on_boundary[b] = true;
        }
        for (e, &[a, b]) in edges.iter().enumerate() {
            if edge_uses[e] == 1 && !(on_boundary[a] && on_boundary[b]) {
                return Err(Error::Invalid("open edge not on the boundary loop".into()));
            }
        }

        let mut vertex_triangles = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }
        let one_rings = (0..nv)
            .map(|v| ordered_one_ring(v, &vertex_triangles[v], &triangles, on_boundary[v]))
            .collect::<Result<Vec<_>>>()?;

        let locator = Locator::new(&vertices, &triangles, level);
        Ok(Self {
            vertices,
            triangles,
            boundary,
            level,
            edges,
            edge_lookup,
            tri_edges,
            geometry,
            on_boundary,
            one_rings,
            vertex_triangles,
            locator,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_vertices()).filter(move |&v| !self.on_boundary[v])
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn geometry(&self, t: usize) -> &TriGeom {
        &self.geometry[t]
    }

    /// Neighbours of `v` in counterclockwise order. For boundary vertices the
    /// chain is open and starts at the boundary neighbour.
    pub fn one_ring(&self, v: usize) -> &[usize] {
        &self.one_rings[v]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.edges.len() as i64 + self.num_triangles() as i64
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[tri[k]];
                let a = self.vertices[tri[(k + 1) % 3]];
                let b = self.vertices[tri[(k + 2) % 3]];
                let u = [a[0] - p[0], a[1] - p[1]];
                let w = [b[0] - p[0], b[1] - p[1]];
                let ang = (u[0] * w[1] - u[1] * w[0]).atan2(u[0] * w[0] + u[1] * w[1]);
                best = best.min(ang.abs());
            }
        }
        best
    }

    /// Vertices with `|v| >= inner_radius`.
    pub fn annulus_band(&self, inner_radius: f64) -> Result<Vec<usize>> {
        if !(inner_radius > 0.0 && inner_radius < 1.0) {
            return Err(Error::Invalid(format!("inner radius {inner_radius} not in (0, 1)")));
        }
        Ok((0..self.num_vertices())
            .filter(|&v| norm(self.vertices[v]) >= inner_radius)
            .collect())
    }

    /// Images of every vertex under the disk automorphism.
    pub fn mobius_pullback(&self, mobius: &Mobius) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|&p| mobius.apply(p)).collect()
    }

    /// Containing triangle and barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        self.locator.locate(p, &self.vertices, &self.triangles, &self.geometry)
    }

    /// Like `locate`, but points in the sliver between the boundary polygon
    /// and the unit circle are pulled onto the nearest boundary edge.
    pub fn locate_clamped(&self, p: [f64; 2]) -> Result<(usize, [f64; 3])> {
        if let Some(hit) = self.locate(p) {
            return Ok(hit);
        }
        if norm(p) > 1.0 + 1e-9 {
            return Err(Error::OutsideDomain { x: p[0], y: p[1] });
        }
        let b = &self.boundary;
        let mut best = (f64::INFINITY, p);
        for w in 0..b.len() {
            let (a, c) = (self.vertices[b[w]], self.vertices[b[(w + 1) % b.len()]]);
            let d = [c[0] - a[0], c[1] - a[1]];
            let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]))
                .clamp(0.0, 1.0);
            let proj = [a[0] + t * d[0], a[1] + t * d[1]];
            let dd = dist(p, proj);
            if dd < best.0 {
                best = (dd, proj);
            }
        }
        self.locator
            .locate_with_slack(best.1, &self.vertices, &self.triangles, &self.geometry, 1e-9)
            .ok_or(Error::OutsideDomain { x: p[0], y: p[1] })
    }

    /// Plain-text export: header `qpmesh v1 V T B`, then `v`, `t`, `b` lines.
    pub fn to_qpmesh(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "qpmesh v1 {} {} {}",
            self.num_vertices(),
            self.num_triangles(),
            self.boundary.len()
        );
        for [x, y] in &self.vertices {
            let _ = writeln!(s, "v {x:?} {y:?}");
        }
        for [i, j, k] in &self.triangles {
            let _ = writeln!(s, "t {i} {j} {k}");
        }
        for b in &self.boundary {
            let _ = writeln!(s, "b {b}");
        }
        s
    }

    pub fn from_qpmesh(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, reason: "empty file".into() })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "qpmesh" || h[1] != "v1" {
            return Err(Error::Parse { line: 1, reason: "expected header `qpmesh v1 V T B`".into() });
        }
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse { line: 1, reason: e.to_string() })
        };
        let (nv, nt, nb) = (count(h[2])?, count(h[3])?, count(h[4])?);
        let mut vertices = Vec::with_capacity(nv);
        let mut triangles = Vec::with_capacity(nt);
        let mut boundary = Vec::with_capacity(nb);
        for (i, line) in lines {
            let lineno = i + 1;
            let perr = |reason: String| Error::Parse { line: lineno, reason };
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or("");
            let rest: Vec<&str> = it.collect();
            match (tag, rest.len()) {
                ("v", 2) => {
                    let x = rest[0].parse::<f64>().map_err(|e| perr(e.to_string()))?;
                    let y = rest[1].parse::<f64>().map_err(|e| perr(e.to_string()))?;
                    vertices.push([x, y]);
                }
                ("t", 3) => {
                    let mut tri = [0usize; 3];
                    for (slot, tok) in tri.iter_mut().zip(&rest) {
                        *slot = tok.parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?;
                    }
                    triangles.push(tri);
                }
                ("b", 1) => boundary
                    .push(rest[0].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?),
                _ => return Err(perr(format!("unexpected line `{line}`"))),
            }
        }
        if vertices.len() != nv || triangles.len() != nt || boundary.len() != nb {
            return Err(Error::Parse { line: 1, reason: "record counts disagree with header".into() });
        }
        let level = level_for_boundary_count(nb).unwrap_or(0);
        Self::from_parts(vertices, triangles, boundary, level)
    }
}

fn level_for_boundary_count(b: usize) -> Option<u32> {
    (0..=MAX_LEVEL).find(|&l| 6usize << l == b)
}

/// Level of the structured mesh with `v` vertices, if any.
pub fn level_for_vertex_count(v: usize) -> Option<u32> {
    (0..=MAX_LEVEL).find(|&l| {
        let n = 1usize << l;
        1 + 3 * n * (n + 1) == v
    })
}

fn ordered_one_ring(
    v: usize,
    star: &[usize],
    triangles: &[[usize; 3]],
    boundary: bool,
) -> Result<Vec<usize>> {
    // Each star triangle, rotated so v comes first, contributes a CCW step a -> b.
    let mut next = HashMap::new();
    let mut has_pred = HashMap::new();
    for &t in star {
        let tri = triangles[t];
        let k = tri.iter().position(|&x| x == v).expect("star triangle contains vertex");
        let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
        next.insert(a, b);
        has_pred.insert(b, true);
    }
    let start = if boundary {
        match next.keys().copied().filter(|a| !has_pred.contains_key(a)).min() {
            Some(s) => s,
            None => return Err(Error::Invalid(format!("boundary vertex {v} has a closed star"))),
        }
    } else {
        match next.keys().copied().min() {
            Some(s) => s,
            None => return Err(Error::Invalid(format!("vertex {v} has no triangles"))),
        }
    };
    let mut ring = vec![start];
    let mut cur = start;
    while let Some(&n) = next.get(&cur) {
        if n == start {
            break;
        }
        ring.push(n);
        cur = n;
        if ring.len() > star.len() + 1 {
            return Err(Error::Invalid(format!("vertex {v} has a non-manifold star")));
        }
    }
    let expected = if boundary { star.len() + 1 } else { star.len() };
    if ring.len() != expected {
        return Err(Error::Invalid(format!("vertex {v} star is not a single fan")));
    }
    Ok(ring)
}

pub(crate) fn tri_geometry(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> TriGeom {
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = 0.5 * det;
    let ps = [p0, p1, p2];
    let mut grads = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = ps[(k + 1) % 3];
        let b = ps[(k + 2) % 3];
        // Rotated opposite edge over twice the area.
        grads[k] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    }
    let mut stiffness = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            stiffness[k][l] = area * (grads[k][0] * grads[l][0] + grads[k][1] * grads[l][1]);
        }
    }
    TriGeom { area, grads, stiffness }
}

pub(crate) fn norm(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Disk automorphism `z ↦ e^{iθ}(z − a)/(1 − ā z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    a: Complex64,
    rotation: Complex64,
}

impl Mobius {
    pub fn new(a: [f64; 2], theta: f64) -> Result<Self> {
        let a = Complex64::new(a[0], a[1]);
        if a.norm() >= 1.0 {
            return Err(Error::MobiusParameter(a.norm()));
        }
        Ok(Self { a, rotation: Complex64::from_polar(1.0, theta) })
    }

    pub fn identity() -> Self {
        Self { a: Complex64::new(0.0, 0.0), rotation: Complex64::new(1.0, 0.0) }
    }

    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        self.rotation * (z - self.a) / (Complex64::new(1.0, 0.0) - self.a.conj() * z)
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let w = self.apply_complex(Complex64::new(p[0], p[1]));
        [w.re, w.im]
    }

    /// Solving for z gives `e^{-iθ}(w − b)/(1 − b̄ w)` with `b = −a e^{iθ}`.
    pub fn inverse(&self) -> Self {
        Self { a: -self.a * self.rotation, rotation: self.rotation.conj() }
    }

    pub fn parameter(&self) -> [f64; 2] {
        [self.a.re, self.a.im]
    }

    pub fn rotation_angle(&self) -> f64 {
        self.rotation.arg()
    }
}

#[derive(Debug, Clone)]
struct Locator {
    cells: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(vertices: &[[f64; 2]], triangles: &[[usize; 3]], level: u32) -> Self {
        let cells = (4usize << level.min(8)).max(4);
        let mut buckets = vec![Vec::new(); cells * cells];
        let cell_of = |x: f64| -> usize {
            (((x + 1.0) * 0.5 * cells as f64).floor().max(0.0) as usize).min(cells - 1)
        };
        for (t, tri) in triangles.iter().enumerate() {
            let xs = tri.map(|v| vertices[v][0]);
            let ys = tri.map(|v| vertices[v][1]);
            let (x0, x1) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            for cy in cell_of(y0 - 1e-9)..=cell_of(y1 + 1e-9) {
                for cx in cell_of(x0 - 1e-9)..=cell_of(x1 + 1e-9) {
                    buckets[cy * cells + cx].push(t);
                }
            }
        }
        Self { cells, buckets }
    }

    fn locate(
        &self,
        p: [f64; 2],
        vertices: &[[f64; 2]],
        triangles: &[[usize; 3]],
        geometry: &[TriGeom],
    ) -> Option<(usize, [f64; 3])> {
        self.locate_with_slack(p, vertices, triangles, geometry, 1e-12)
    }

    fn locate_with_slack(
        &self,
        p: [f64; 2],
        vertices: &[[f64; 2]],
        triangles: &[[usize; 3]],
        geometry: &[TriGeom],
        slack: f64,
    ) -> Option<(usize, [f64; 3])> {
        if !(p[0].abs() <= 1.0 + 1e-9 && p[1].abs() <= 1.0 + 1e-9) {
            return None;
        }
        let cell_of = |x: f64| -> usize {
            (((x + 1.0) * 0.5 * self.cells as f64).floor().max(0.0) as usize).min(self.cells - 1)
        };
        let bucket = &self.buckets[cell_of(p[1]) * self.cells + cell_of(p[0])];
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in bucket {
            let tri = triangles[t];
            let g = &geometry[t];
            let o = vertices[tri[0]];
            let d = [p[0] - o[0], p[1] - o[1]];
            let l1 = g.grads[1][0] * d[0] + g.grads[1][1] * d[1];
            let l2 = g.grads[2][0] * d[0] + g.grads[2][1] * d[1];
            let bary = [1.0 - l1 - l2, l1, l2];
            let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= -slack && best.map_or(true, |(_, _, w)| worst > w) {
                best = Some((t, bary, worst));
            }
        }
        best.map(|(t, b, _)| (t, b))
    }
}
