//! Structural diagnostics: branch vertices from matching holonomy, continuous
//! decomposition of the graph near the boundary, conformality defect and the
//! boundary oscillation estimate.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aq::{metric_g, optimal_matching_unchecked, separation, sq_dist, support_multiplicity, QValue};
use crate::error::{Error, Result};
use crate::field::QField;
use crate::mesh::{dist, norm};
use crate::perm;

/// Vertices with `|v|` at least this radius form the outer band.
pub const OUTER_BAND: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchVertex {
    pub vertex: usize,
    pub position: [f64; 2],
    pub monodromy: Vec<usize>,
    pub cycle_type: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchComponent {
    pub vertices: Vec<usize>,
    /// Member closest to the component's centroid.
    pub representative: usize,
    pub position: [f64; 2],
    /// Holonomy around the outline of the component's star.
    pub monodromy: Vec<usize>,
    pub cycle_type: Vec<usize>,
    /// Whether transport around the component swaps sheets that end on
    /// different boundary clusters. `None` when the outer band does not split.
    pub connecting: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub branch_vertices: Vec<BranchVertex>,
    pub components: Vec<BranchComponent>,
    /// Number of connected clusters of branch vertices.
    pub count: usize,
    /// No branch vertex lies in the outer band.
    pub annulus_clear: bool,
    /// Boundary vertices touching a triangle with nontrivial holonomy.
    pub boundary_warnings: Vec<usize>,
    /// Holonomy along the boundary loop.
    pub boundary_monodromy: Vec<usize>,
    /// The connecting label is a single-field surrogate.
    pub connecting_is_heuristic: bool,
}

fn degenerate(v: &QValue) -> bool {
    let scale = v.coords().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    separation(v) <= 1e-9 * (1.0 + scale)
}

/// Holonomy along a closed vertex loop. Vertices whose value has a repeated
/// point are skipped, since matchings through them are ambiguous.
pub fn loop_holonomy(field: &QField, cycle: &[usize]) -> Vec<usize> {
    let kept: Vec<usize> = cycle.iter().copied().filter(|&v| !degenerate(field.value(v))).collect();
    let q = field.q();
    if kept.len() < 2 {
        return perm::identity(q);
    }
    let mut chain = perm::identity(q);
    for w in 0..kept.len() {
        let (a, b) = (kept[w], kept[(w + 1) % kept.len()]);
        let step = if field.mesh().edge_index(a, b).is_some() {
            field.edge_perm(a, b)
        } else {
            optimal_matching_unchecked(field.value(a), field.value(b)).perm
        };
        chain = perm::then(&chain, &step);
    }
    chain
}

/// Outline of the union of the stars of `vertices`, as a closed vertex loop.
fn star_outline(field: &QField, vertices: &[usize]) -> Option<Vec<usize>> {
    let mesh = field.mesh();
    let mut tris: Vec<usize> = vertices.iter().flat_map(|&v| mesh.vertex_triangles(v).iter().copied()).collect();
    tris.sort_unstable();
    tris.dedup();
    let mut directed = HashMap::new();
    for &t in &tris {
        let tri = mesh.triangles()[t];
        for k in 0..3 {
            directed.insert((tri[k], tri[(k + 1) % 3]), ());
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) && next.insert(a, b).is_some() {
            return None;
        }
    }
    let start = *next.keys().min()?;
    let mut outline = vec![start];
    let mut cur = start;
    loop {
        cur = *next.get(&cur)?;
        if cur == start {
            break;
        }
        outline.push(cur);
        if outline.len() > next.len() {
            return None;
        }
    }
    (outline.len() == next.len()).then_some(outline)
}

pub fn detect_branches(field: &QField) -> BranchReport {
    let mesh = field.mesh();
    let interior: Vec<usize> = mesh.interior_vertices().collect();
    let holonomies: Vec<Vec<usize>> = interior
        .par_iter()
        .map(|&v| loop_holonomy(field, mesh.one_ring(v)))
        .collect();
    let branch_vertices: Vec<BranchVertex> = interior
        .iter()
        .zip(holonomies)
        .filter(|(_, h)| !perm::is_identity(h))
        .map(|(&v, h)| BranchVertex {
            vertex: v,
            position: mesh.vertex(v),
            cycle_type: perm::cycle_type(&h),
            monodromy: h,
        })
        .collect();

    // Connected clusters along mesh edges.
    let listed: HashMap<usize, usize> = branch_vertices.iter().enumerate().map(|(i, b)| (b.vertex, i)).collect();
    let mut label = vec![usize::MAX; branch_vertices.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..branch_vertices.len() {
        if label[i] != usize::MAX {
            continue;
        }
        let c = clusters.len();
        let mut stack = vec![i];
        label[i] = c;
        let mut members = Vec::new();
        while let Some(j) = stack.pop() {
            let v = branch_vertices[j].vertex;
            members.push(v);
            for &u in mesh.one_ring(v) {
                if let Some(&k) = listed.get(&u) {
                    if label[k] == usize::MAX {
                        label[k] = c;
                        stack.push(k);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    let split = boundary_clusters(field);
    let components = clusters
        .into_iter()
        .map(|members| {
            let cx = members.iter().map(|&v| mesh.vertex(v)[0]).sum::<f64>() / members.len() as f64;
            let cy = members.iter().map(|&v| mesh.vertex(v)[1]).sum::<f64>() / members.len() as f64;
            let representative = *members
                .iter()
                .min_by(|&&a, &&b| {
                    dist(mesh.vertex(a), [cx, cy])
                        .partial_cmp(&dist(mesh.vertex(b), [cx, cy]))
                        .expect("finite coordinates")
                })
                .expect("cluster is nonempty");
            let monodromy = match star_outline(field, &members) {
                Some(outline) => loop_holonomy(field, &outline),
                None => {
                    let i = listed[&representative];
                    branch_vertices[i].monodromy.clone()
                }
            };
            let connecting = split.as_ref().map(|s| is_connecting(field, s, representative));
            BranchComponent {
                cycle_type: perm::cycle_type(&monodromy),
                vertices: members,
                representative,
                position: mesh.vertex(representative),
                monodromy,
                connecting,
            }
        })
        .collect::<Vec<_>>();

    let mut boundary_warnings: Vec<usize> = field
        .branch_adjacent_triangles()
        .into_iter()
        .flat_map(|t| mesh.triangles()[t])
        .filter(|&v| mesh.is_boundary(v))
        .collect();
    boundary_warnings.sort_unstable();
    boundary_warnings.dedup();

    let annulus_clear = branch_vertices.iter().all(|b| norm(b.position) < OUTER_BAND);
    BranchReport {
        count: components.len(),
        branch_vertices,
        components,
        annulus_clear,
        boundary_warnings,
        boundary_monodromy: loop_holonomy(field, mesh.boundary_loop()),
        connecting_is_heuristic: true,
    }
}

/// Outer-band decomposition used to label sheets by boundary cluster.
struct BandSplit {
    /// Component of each (band vertex, slot).
    labels: HashMap<(usize, usize), usize>,
    band: Vec<usize>,
}

fn boundary_clusters(field: &QField) -> Option<BandSplit> {
    let band = field.mesh().annulus_band(OUTER_BAND).ok()?;
    let min_sep = band.iter().map(|&v| separation(field.value(v))).fold(f64::INFINITY, f64::min);
    if !(min_sep.is_finite() && min_sep > 0.0) {
        return None;
    }
    let dec = decompose_graph(field, &band, 0.5 * min_sep).ok()?;
    if dec.components.len() < 2 {
        return None;
    }
    let mut labels = HashMap::new();
    for (c, comp) in dec.components.iter().enumerate() {
        for (i, &v) in band.iter().enumerate() {
            for &s in &comp.slots[i] {
                labels.insert((v, s), c);
            }
        }
    }
    Some(BandSplit { labels, band })
}

fn is_connecting(field: &QField, split: &BandSplit, rep: usize) -> bool {
    let mesh = field.mesh();
    let p = mesh.vertex(rep);
    let dir = if norm(p) < 1e-12 { [1.0, 0.0] } else { [p[0] / norm(p), p[1] / norm(p)] };
    let target = [0.95 * dir[0], 0.95 * dir[1]];
    let base = *split
        .band
        .iter()
        .min_by(|&&a, &&b| {
            dist(mesh.vertex(a), target)
                .partial_cmp(&dist(mesh.vertex(b), target))
                .expect("finite coordinates")
        })
        .expect("band is nonempty");
    let ring: Vec<[f64; 2]> = if mesh.is_boundary(rep) {
        return false;
    } else {
        mesh.one_ring(rep).iter().map(|&v| mesh.vertex(v)).collect()
    };
    let h = mesh.max_edge_length() / 4.0;
    let mut path = Vec::new();
    let push_segment = |a: [f64; 2], b: [f64; 2], path: &mut Vec<[f64; 2]>| {
        let steps = ((dist(a, b) / h).ceil() as usize).max(1);
        for k in 0..steps {
            let t = k as f64 / steps as f64;
            path.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    };
    let b0 = mesh.vertex(base);
    push_segment(b0, ring[0], &mut path);
    for w in 0..ring.len() {
        push_segment(ring[w], ring[(w + 1) % ring.len()], &mut path);
    }
    push_segment(ring[0], b0, &mut path);
    path.push(b0);
    let Ok(restricted) = field.restrict_to_path(&path) else {
        return false;
    };
    let start = &restricted.values[0];
    let to_vertex = optimal_matching_unchecked(start, field.value(base)).perm;
    let label = |i: usize| split.labels.get(&(base, to_vertex[i])).copied();
    (0..field.q()).any(|i| label(i) != label(restricted.chain[i]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphComponent {
    pub multiplicity: usize,
    /// Slots of this component at each region vertex, in region order.
    pub slots: Vec<Vec<usize>>,
    /// The sub-field's values at each region vertex.
    pub values: Vec<QValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDecomposition {
    pub region: Vec<usize>,
    pub components: Vec<GraphComponent>,
    /// Smallest distance between points of different components.
    pub gap: f64,
}

/// Split the graph over `region` into continuous pieces separated by more
/// than `alpha`. Points on neighbouring vertices are joined when their edge
/// matching pairs them within `alpha / 3`.
pub fn decompose_graph(field: &QField, region: &[usize], alpha: f64) -> Result<GraphDecomposition> {
    if !(alpha > 0.0) {
        return Err(Error::Invalid("alpha must be positive".into()));
    }
    let q = field.q();
    let mesh = field.mesh();
    let mut region = region.to_vec();
    region.sort_unstable();
    region.dedup();
    if region.is_empty() {
        return Err(Error::Invalid("empty region".into()));
    }
    let pos: HashMap<usize, usize> = region.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    for &v in &region {
        let atoms = support_multiplicity(field.value(v), 0.0);
        if atoms.len() != q {
            return Err(Error::Hypothesis {
                vertex: v,
                reason: format!("support has {} distinct points, expected {q}", atoms.len()),
            });
        }
    }

    let mut parent: Vec<usize> = (0..region.len() * q).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let join = alpha / 3.0;
    let mut cross_edges = Vec::new();
    for &[a, b] in mesh.edges() {
        let (Some(&ia), Some(&ib)) = (pos.get(&a), pos.get(&b)) else {
            continue;
        };
        let p = field.edge_perm(a, b);
        for i in 0..q {
            let d = sq_dist(field.value(a).point(i), field.value(b).point(p[i])).sqrt();
            if d < join {
                let (x, y) = (find(&mut parent, ia * q + i), find(&mut parent, ib * q + p[i]));
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
        cross_edges.push((a, b));
    }

    let mut comp_of = vec![0usize; region.len() * q];
    let mut roots: Vec<usize> = Vec::new();
    for k in 0..region.len() * q {
        let r = find(&mut parent, k);
        comp_of[k] = match roots.iter().position(|&x| x == r) {
            Some(c) => c,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
    }

    let mut components: Vec<GraphComponent> = (0..roots.len())
        .map(|_| GraphComponent { multiplicity: 0, slots: vec![Vec::new(); region.len()], values: Vec::new() })
        .collect();
    for (i, _) in region.iter().enumerate() {
        for s in 0..q {
            components[comp_of[i * q + s]].slots[i].push(s);
        }
    }
    for (c, comp) in components.iter_mut().enumerate() {
        let m = comp.slots[0].len();
        if let Some(i) = comp.slots.iter().position(|s| s.len() != m || m == 0) {
            return Err(Error::Hypothesis {
                vertex: region[i],
                reason: format!("component {c} changes multiplicity"),
            });
        }
        comp.multiplicity = m;
        comp.values = region
            .iter()
            .enumerate()
            .map(|(i, &v)| field.value(v).permuted(&comp.slots[i]))
            .map(|v| QValue::new(m, v.n(), v.coords()[..m * v.n()].to_vec()).expect("sub-value shape"))
            .collect();
    }

    // Gap: closest points of different components, at a vertex or across an edge.
    let mut gap = f64::INFINITY;
    let mut gap_at = region[0];
    let consider = |a: usize, b: usize, gap: &mut f64, gap_at: &mut usize| {
        let (ia, ib) = (pos[&a], pos[&b]);
        for i in 0..q {
            for j in 0..q {
                if comp_of[ia * q + i] != comp_of[ib * q + j] {
                    let d = sq_dist(field.value(a).point(i), field.value(b).point(j)).sqrt();
                    if d < *gap {
                        *gap = d;
                        *gap_at = a;
                    }
                }
            }
        }
    };
    for &v in &region {
        consider(v, v, &mut gap, &mut gap_at);
    }
    for &(a, b) in &cross_edges {
        consider(a, b, &mut gap, &mut gap_at);
    }
    if components.len() > 1 && gap <= alpha {
        return Err(Error::Hypothesis {
            vertex: gap_at,
            reason: format!("components only {gap:.3e} apart, need more than {alpha:.3e}"),
        });
    }
    Ok(GraphDecomposition { region, components, gap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalityReport {
    pub per_triangle: Vec<f64>,
    /// Area-weighted total defect.
    pub total: f64,
    /// `total / energy²`; zero for constant fields.
    pub normalized: f64,
}

/// Per-sheet defect `(|∂x|² − |∂y|²)² + 4<∂x, ∂y>²`, area weighted.
pub fn conformality_residual(field: &QField) -> ConformalityReport {
    let mesh = field.mesh();
    let per_triangle: Vec<f64> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let area = mesh.geometry(t).area;
            field
                .sheet_selection(t)
                .sheets
                .iter()
                .map(|s| {
                    let (e, f, g) = s.first_fundamental_form();
                    area * ((e - g) * (e - g) + 4.0 * f * f)
                })
                .sum()
        })
        .collect();
    let total: f64 = per_triangle.iter().sum();
    let energy = field.dirichlet_energy();
    let normalized = if energy > 0.0 { total / (energy * energy) } else { 0.0 };
    ConformalityReport { per_triangle, total, normalized }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub delta: f64,
    pub arc_length: f64,
    /// Right-hand side of the estimate for a unit-energy field.
    pub bound: f64,
    /// Worst mean chord distance over the sweep, after normalizing energy.
    pub max_mean_chord: f64,
    pub max_ratio: f64,
    pub arcs: usize,
}

const OSC_ARCS: usize = 64;
const OSC_LINES: usize = 32;

/// Area of `{|y| ≤ δ sin(Δθ/2), δ² ≤ x² + y² ≤ 1, x > 0}`.
pub fn oscillation_region_area(delta: f64, arc_length: f64) -> f64 {
    let h = delta * (0.5 * arc_length).sin();
    let prim = |a: f64, y: f64| 0.5 * (y * (a * a - y * y).max(0.0).sqrt() + a * a * (y / a).clamp(-1.0, 1.0).asin());
    2.0 * (prim(1.0, h) - prim(delta, h))
}

/// Sweep arcs of angular length `arc_length` around the circle and compare
/// the mean distance between the field on the inner circle of radius `delta`
/// and on the unit circle, along horizontal chords, with the bound.
pub fn oscillation_check(field: &QField, delta: f64, arc_length: f64) -> Result<OscillationReport> {
    if !(delta > 0.5 && delta < 1.0) {
        return Err(Error::Invalid(format!("delta {delta} not in (1/2, 1)")));
    }
    if !(arc_length > 0.0 && arc_length <= PI / 2.0) {
        return Err(Error::Invalid(format!("arc length {arc_length} not in (0, π/2]")));
    }
    let area = oscillation_region_area(delta, arc_length);
    let bound = area.sqrt() / (2.0 * (0.5 * arc_length).sin() * delta);
    let energy = field.dirichlet_energy();
    if energy == 0.0 {
        return Ok(OscillationReport { delta, arc_length, bound, max_mean_chord: 0.0, max_ratio: 0.0, arcs: OSC_ARCS });
    }
    let scale = energy.sqrt();
    let h = delta * (0.5 * arc_length).sin();
    let chords = (0..OSC_ARCS)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let phi = 2.0 * PI * k as f64 / OSC_ARCS as f64;
            let (c, s) = (phi.cos(), phi.sin());
            let rot = |x: f64, y: f64| [c * x - s * y, s * x + c * y];
            let mut total = 0.0;
            for j in 0..OSC_LINES {
                let y = -h + 2.0 * h * (j as f64 + 0.5) / OSC_LINES as f64;
                let inner = rot((delta * delta - y * y).sqrt(), y);
                let outer = rot((1.0 - y * y).sqrt(), y);
                total += metric_g(&field.evaluate(inner)?, &field.evaluate(outer)?)?;
            }
            Ok(total / OSC_LINES as f64 / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_mean_chord = chords.into_iter().fold(0.0, f64::max);
    Ok(OscillationReport {
        delta,
        arc_length,
        bound,
        max_mean_chord,
        max_ratio: max_mean_chord / bound,
        arcs: OSC_ARCS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_disk_mesh;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn mesh(level: u32) -> Arc<crate::mesh::DiskMesh> {
        Arc::new(build_disk_mesh(level).unwrap())
    }

    fn roots(w: Complex64) -> QValue {
        QValue::from_points(&[[w.re, w.im], [-w.re, -w.im]]).unwrap()
    }

    #[test]
    fn constant_field_has_no_branches() {
        let f = QField::constant(mesh(3), &QValue::repeated(2, &[0.0, 1.0])).unwrap();
        let r = detect_branches(&f);
        assert_eq!(r.count, 0);
        assert!(r.branch_vertices.is_empty());
        assert!(perm::is_identity(&r.boundary_monodromy));
    }

    #[test]
    fn sqrt_field_has_one_branch_cluster_at_origin() {
        let m = mesh(4);
        let f = QField::from_fn(m.clone(), |p| roots(Complex64::new(p[0], p[1]).sqrt())).unwrap();
        let r = detect_branches(&f);
        assert_eq!(r.count, 1);
        let c = &r.components[0];
        assert_eq!(c.cycle_type, vec![2]);
        assert!(norm(c.position) <= m.max_edge_length());
        assert_eq!(r.boundary_monodromy, vec![1, 0]);
        assert!(r.annulus_clear);
    }

    #[test]
    fn variety_field_has_two_branch_clusters() {
        let m = mesh(4);
        let f = QField::from_fn(m.clone(), |p| {
            let z = Complex64::new(p[0], p[1]);
            roots((z * z - 0.25).sqrt())
        })
        .unwrap();
        let r = detect_branches(&f);
        assert_eq!(r.count, 2, "{:?}", r.components);
        for c in &r.components {
            assert_eq!(c.cycle_type, vec![2]);
            assert!((c.position[0].abs() - 0.5).abs() <= m.max_edge_length());
            assert!(c.position[1].abs() <= m.max_edge_length());
            assert_eq!(c.connecting, Some(true));
        }
        assert!(perm::is_identity(&r.boundary_monodromy));
    }

    #[test]
    fn decomposition_examples() {
        let m = mesh(4);
        let two = QValue::from_points(&[[0.0, 0.0], [3.0, 0.0]]).unwrap();
        let f = QField::constant(m.clone(), &two).unwrap();
        let all: Vec<usize> = (0..m.num_vertices()).collect();
        let d = decompose_graph(&f, &all, 1.0).unwrap();
        assert_eq!(d.components.len(), 2);
        assert!(d.components.iter().all(|c| c.multiplicity == 1));

        let s = QField::from_fn(m.clone(), |p| roots(Complex64::new(p[0], p[1]).sqrt())).unwrap();
        let band: Vec<usize> = (0..m.num_vertices()).filter(|&v| norm(m.vertex(v)) > 0.5).collect();
        let d = decompose_graph(&s, &band, 0.3).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].multiplicity, 2);

        let v = QField::from_fn(m.clone(), |p| {
            let z = Complex64::new(p[0], p[1]);
            roots((z * z - 0.25).sqrt())
        })
        .unwrap();
        let band: Vec<usize> = (0..m.num_vertices()).filter(|&v| norm(m.vertex(v)) > 0.9).collect();
        let d = decompose_graph(&v, &band, 0.5).unwrap();
        assert_eq!(d.components.len(), 2);
        for (i, &x) in d.region.iter().enumerate() {
            let union = d.components[0].values[i].union(&d.components[1].values[i]).unwrap();
            assert!(metric_g(&union, v.value(x)).unwrap() < 1e-15);
        }
        // Whole disk includes the double points at ±1/2.
        assert!(matches!(decompose_graph(&v, &all, 0.5), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn conformality_examples() {
        let m = mesh(3);
        let id = QField::from_fn(m.clone(), |p| QValue::new(1, 2, p.to_vec()).unwrap()).unwrap();
        assert!(conformality_residual(&id).normalized < 1e-12);
        let aniso = QField::from_fn(m, |p| QValue::new(1, 2, vec![p[0], 2.0 * p[1]]).unwrap()).unwrap();
        assert!(conformality_residual(&aniso).normalized > 0.1);
    }

    #[test]
    fn oscillation_examples() {
        let m = mesh(4);
        let c = QField::constant(m.clone(), &QValue::repeated(1, &[2.0])).unwrap();
        assert_eq!(oscillation_check(&c, 0.9, PI / 8.0).unwrap().max_ratio, 0.0);
        let x = QField::from_fn(m, |p| QValue::new(1, 1, vec![p[0]]).unwrap()).unwrap();
        let r = oscillation_check(&x, 0.9, PI / 8.0).unwrap();
        assert!(r.max_ratio > 0.0 && r.max_ratio <= 1.1, "{r:?}");
        assert!(oscillation_check(&x, 0.4, PI / 8.0).is_err());
    }

    #[test]
    fn region_area_matches_direct_quadrature() {
        let (delta, arc) = (0.9, PI / 8.0);
        let h = delta * (arc / 2.0).sin();
        let n = 20000;
        let mut s = 0.0;
        for i in 0..n {
            let y = -h + 2.0 * h * (i as f64 + 0.5) / n as f64;
            s += ((1.0 - y * y).sqrt() - (delta * delta - y * y).sqrt()) * 2.0 * h / n as f64;
        }
        assert!((oscillation_region_area(delta, arc) - s).abs() < 1e-9);
    }
}
