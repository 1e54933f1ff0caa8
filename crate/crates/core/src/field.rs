//! Discrete Q-valued functions: a `QValue` per vertex, a sheet matching per
//! edge, and P1 sheets on every triangle.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::aq::{optimal_matching_unchecked, pairing_cost, sq_dist, Matching, QValue};
use crate::error::{Error, Result};
use crate::mesh::{level_for_vertex_count, DiskMesh};
use crate::perm;

/// How a triangle's three corner slots were tied into sheets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignChoice {
    /// The three edge matchings compose to the identity.
    Consistent,
    /// Holonomy is nontrivial; the matching on edge (2,0) was ignored.
    DropEdge20,
    /// Holonomy is nontrivial; the matching on edge (0,1) was ignored.
    DropEdge01,
    /// Holonomy is nontrivial; the matching on edge (1,2) was ignored.
    DropEdge12,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `slots[k][s]` is the slot at corner `k` that belongs to sheet `s`.
    pub slots: [Vec<usize>; 3],
    pub choice: AlignChoice,
}

impl Alignment {
    pub fn branch_adjacent(&self) -> bool {
        self.choice != AlignChoice::Consistent
    }
}

/// One affine sheet on a triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSheet {
    pub corners: [Vec<f64>; 3],
    /// Row `d` holds the gradient of output coordinate `d`.
    pub jacobian: Vec<[f64; 2]>,
}

impl AffineSheet {
    /// Entries of `JᵀJ`: `(|∂x|², <∂x, ∂y>, |∂y|²)`.
    pub fn first_fundamental_form(&self) -> (f64, f64, f64) {
        let mut e = (0.0, 0.0, 0.0);
        for g in &self.jacobian {
            e.0 += g[0] * g[0];
            e.1 += g[0] * g[1];
            e.2 += g[1] * g[1];
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheetSelection {
    pub triangle: usize,
    pub sheets: Vec<AffineSheet>,
    pub branch_adjacent: bool,
}

#[derive(Debug, Clone)]
pub struct QField {
    mesh: Arc<DiskMesh>,
    q: usize,
    n: usize,
    values: Vec<QValue>,
    matchings: Vec<Matching>,
    frozen: Vec<bool>,
}

/// Matching tolerance used when checking that a stored permutation is still
/// optimal.
const MATCH_SLACK: f64 = 1e-9;

impl QField {
    pub fn new(mesh: Arc<DiskMesh>, values: Vec<QValue>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::Invalid(format!(
                "{} values for a mesh with {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        let (q, n) = (values[0].q(), values[0].n());
        for v in &values {
            if v.q() != q {
                return Err(Error::MultiplicityMismatch { left: q, right: v.q() });
            }
            if v.n() != n {
                return Err(Error::DimensionMismatch { left: n, right: v.n() });
            }
        }
        let ne = mesh.edges().len();
        let mut field = Self {
            mesh,
            q,
            n,
            values,
            matchings: vec![Matching::identity(q); ne],
            frozen: vec![false; ne],
        };
        field.refresh_matchings();
        Ok(field)
    }

    pub fn from_fn<F>(mesh: Arc<DiskMesh>, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> QValue + Sync,
    {
        let values = mesh.vertices().par_iter().map(|&p| f(p)).collect();
        Self::new(mesh, values)
    }

    pub fn constant(mesh: Arc<DiskMesh>, value: &QValue) -> Result<Self> {
        let values = vec![value.clone(); mesh.num_vertices()];
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &DiskMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<DiskMesh> {
        &self.mesh
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[QValue] {
        &self.values
    }

    pub fn value(&self, v: usize) -> &QValue {
        &self.values[v]
    }

    /// Replace all values and recompute every unfrozen matching.
    pub fn set_values(&mut self, values: Vec<QValue>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Invalid("value count changed".into()));
        }
        if let Some(v) = values.iter().find(|v| v.q() != self.q || v.n() != self.n) {
            return Err(Error::MultiplicityMismatch { left: self.q, right: v.q() });
        }
        self.values = values;
        self.refresh_matchings();
        Ok(())
    }

    pub fn refresh_matchings(&mut self) {
        let edges = self.mesh.edges();
        let values = &self.values;
        let fresh: Vec<Option<Matching>> = (0..edges.len())
            .into_par_iter()
            .map(|e| {
                if self.frozen[e] {
                    None
                } else {
                    let [a, b] = edges[e];
                    Some(optimal_matching_unchecked(&values[a], &values[b]))
                }
            })
            .collect();
        for (e, m) in fresh.into_iter().enumerate() {
            if let Some(m) = m {
                self.matchings[e] = m;
            } else {
                let [a, b] = edges[e];
                self.matchings[e].cost = pairing_cost(&values[a], &values[b], &self.matchings[e].perm);
            }
        }
    }

    /// Matching stored on edge `e`, oriented from the lower to the higher
    /// vertex index.
    pub fn edge_matching(&self, e: usize) -> &Matching {
        &self.matchings[e]
    }

    pub fn is_frozen(&self, e: usize) -> bool {
        self.frozen[e]
    }

    /// Pin edge `a`-`b` to the matching that sends slot `i` at `a` to slot
    /// `perm[i]` at `b`.
    pub fn freeze_edge(&mut self, a: usize, b: usize, perm_ab: &[usize]) -> Result<()> {
        let e = self
            .mesh
            .edge_index(a, b)
            .ok_or_else(|| Error::Invalid(format!("no edge between {a} and {b}")))?;
        if perm_ab.len() != self.q || !perm::is_permutation(perm_ab) {
            return Err(Error::Invalid("frozen matching is not a permutation".into()));
        }
        let p = if a < b { perm_ab.to_vec() } else { perm::inverse(perm_ab) };
        let [lo, hi] = self.mesh.edges()[e];
        let cost = pairing_cost(&self.values[lo], &self.values[hi], &p);
        self.matchings[e] = Matching { perm: p, cost };
        self.frozen[e] = true;
        Ok(())
    }

    pub fn unfreeze_all(&mut self) {
        self.frozen.iter_mut().for_each(|f| *f = false);
        self.refresh_matchings();
    }

    /// Unfrozen edges whose stored matching is not optimal.
    pub fn invalid_matchings(&self) -> Vec<usize> {
        let edges = self.mesh.edges();
        (0..edges.len())
            .filter(|&e| {
                if self.frozen[e] {
                    return false;
                }
                let [a, b] = edges[e];
                let best = optimal_matching_unchecked(&self.values[a], &self.values[b]).cost;
                let stored = pairing_cost(&self.values[a], &self.values[b], &self.matchings[e].perm);
                stored > best + MATCH_SLACK * (1.0 + best)
            })
            .collect()
    }

    /// Permutation carrying slot `i` at `a` to slot `p[i]` at `b`.
    pub fn edge_perm(&self, a: usize, b: usize) -> Vec<usize> {
        let e = self.mesh.edge_index(a, b).expect("vertices share an edge");
        if a < b {
            self.matchings[e].perm.clone()
        } else {
            perm::inverse(&self.matchings[e].perm)
        }
    }

    fn slot_point(&self, v: usize, slot: usize) -> &[f64] {
        self.values[v].point(slot)
    }

    /// Energy of triangle `t` when its sheets are tied by `slots`.
    pub fn alignment_energy(&self, t: usize, slots: &[Vec<usize>; 3]) -> f64 {
        let tri = self.mesh.triangles()[t];
        let k = &self.mesh.geometry(t).stiffness;
        let mut e = 0.0;
        for s in 0..self.q {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let d = sq_dist(self.slot_point(tri[a], slots[a][s]), self.slot_point(tri[b], slots[b][s]));
                e -= k[a][b] * d;
            }
        }
        e
    }

    /// Sheet structure on `t`. Consistent matchings are used as is; otherwise
    /// the cheapest of the three drop-one-edge alignments is chosen, with ties
    /// resolved in the order (2,0), (0,1), (1,2).
    pub fn triangle_alignment(&self, t: usize) -> Alignment {
        let [v0, v1, v2] = self.mesh.triangles()[t];
        let p01 = self.edge_perm(v0, v1);
        let p12 = self.edge_perm(v1, v2);
        let p20 = self.edge_perm(v2, v0);
        let q = self.q;
        let a = {
            let s1: Vec<usize> = (0..q).map(|s| p01[s]).collect();
            let s2: Vec<usize> = s1.iter().map(|&j| p12[j]).collect();
            [perm::identity(q), s1, s2]
        };
        let consistent = (0..q).all(|s| p20[a[2][s]] == s);
        if consistent {
            return Alignment { slots: a, choice: AlignChoice::Consistent };
        }
        let b = {
            let s2: Vec<usize> = (0..q).map(|s| p12[s]).collect();
            let s0: Vec<usize> = s2.iter().map(|&j| p20[j]).collect();
            [s0, perm::identity(q), s2]
        };
        let c = {
            let s0: Vec<usize> = (0..q).map(|s| p20[s]).collect();
            let s1: Vec<usize> = s0.iter().map(|&j| p01[j]).collect();
            [s0, s1, perm::identity(q)]
        };
        let mut best = (self.alignment_energy(t, &a), a, AlignChoice::DropEdge20);
        for (slots, choice) in [(b, AlignChoice::DropEdge01), (c, AlignChoice::DropEdge12)] {
            let e = self.alignment_energy(t, &slots);
            if e < best.0 {
                best = (e, slots, choice);
            }
        }
        Alignment { slots: best.1, choice: best.2 }
    }

    pub fn configuration(&self) -> Vec<Alignment> {
        (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| self.triangle_alignment(t))
            .collect()
    }

    pub fn branch_adjacent_triangles(&self) -> Vec<usize> {
        self.configuration()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.branch_adjacent())
            .map(|(t, _)| t)
            .collect()
    }

    pub fn triangle_energy(&self, t: usize) -> f64 {
        let al = self.triangle_alignment(t);
        self.alignment_energy(t, &al.slots)
    }

    pub fn triangle_energies(&self) -> Vec<f64> {
        (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| self.triangle_energy(t))
            .collect()
    }

    /// Discrete Dirichlet energy, the integral of the squared Frobenius norm
    /// of the sheet gradients.
    pub fn dirichlet_energy(&self) -> f64 {
        self.triangle_energies().iter().sum()
    }

    /// Energy of the current values under a fixed configuration.
    pub fn energy_with(&self, config: &[Alignment]) -> f64 {
        let per: Vec<f64> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| self.alignment_energy(t, &config[t].slots))
            .collect();
        per.iter().sum()
    }

    fn selection_from(&self, t: usize, al: &Alignment) -> SheetSelection {
        let tri = self.mesh.triangles()[t];
        let g = self.mesh.geometry(t);
        let sheets = (0..self.q)
            .map(|s| {
                let corners = [0, 1, 2].map(|k| self.slot_point(tri[k], al.slots[k][s]).to_vec());
                let jacobian = (0..self.n)
                    .map(|d| {
                        // Differences against corner 0, so constant sheets are exactly flat.
                        let mut row = [0.0; 2];
                        for k in 1..3 {
                            let dx = corners[k][d] - corners[0][d];
                            row[0] += dx * g.grads[k][0];
                            row[1] += dx * g.grads[k][1];
                        }
                        row
                    })
                    .collect();
                AffineSheet { corners, jacobian }
            })
            .collect();
        SheetSelection { triangle: t, sheets, branch_adjacent: al.branch_adjacent() }
    }

    pub fn sheet_selection(&self, t: usize) -> SheetSelection {
        self.selection_from(t, &self.triangle_alignment(t))
    }

    fn sum_over_sheets<F>(&self, f: F) -> f64
    where
        F: Fn(&AffineSheet) -> f64 + Sync,
    {
        let per: Vec<f64> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let sel = self.sheet_selection(t);
                let area = self.mesh.geometry(t).area;
                sel.sheets.iter().map(|s| area * f(s)).sum::<f64>()
            })
            .collect();
        per.iter().sum()
    }

    /// Area of the image counted with multiplicity.
    pub fn mv_area(&self) -> f64 {
        self.sum_over_sheets(|s| {
            let (e, f, g) = s.first_fundamental_form();
            (e * g - f * f).max(0.0).sqrt()
        })
    }

    /// Area of the graph of `x ↦ λ F(x)` counted with multiplicity.
    pub fn graph_mass(&self, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        self.sum_over_sheets(|s| {
            let (e, f, g) = s.first_fundamental_form();
            ((1.0 + l2 * e) * (1.0 + l2 * g) - l2 * l2 * f * f).max(0.0).sqrt()
        })
    }

    /// Value at an arbitrary point of the closed disk.
    pub fn evaluate(&self, p: [f64; 2]) -> Result<QValue> {
        let (t, bary) = self.mesh.locate_clamped(p)?;
        let al = self.triangle_alignment(t);
        let tri = self.mesh.triangles()[t];
        let mut coords = vec![0.0; self.q * self.n];
        for s in 0..self.q {
            let x0 = self.slot_point(tri[0], al.slots[0][s]);
            let x1 = self.slot_point(tri[1], al.slots[1][s]);
            let x2 = self.slot_point(tri[2], al.slots[2][s]);
            for d in 0..self.n {
                coords[s * self.n + d] = x0[d] + bary[1] * (x1[d] - x0[d]) + bary[2] * (x2[d] - x0[d]);
            }
        }
        QValue::new(self.q, self.n, coords)
    }

    /// Sample the field along a polyline and chain optimal matchings between
    /// consecutive samples.
    pub fn restrict_to_path(&self, path: &[[f64; 2]]) -> Result<PathRestriction> {
        if path.is_empty() {
            return Err(Error::Invalid("empty path".into()));
        }
        let values = path.iter().map(|&p| self.evaluate(p)).collect::<Result<Vec<_>>>()?;
        let mut steps = Vec::with_capacity(values.len().saturating_sub(1));
        let mut chain = perm::identity(self.q);
        for w in values.windows(2) {
            let m = optimal_matching_unchecked(&w[0], &w[1]);
            chain = perm::then(&chain, &m.perm);
            steps.push(m);
        }
        Ok(PathRestriction { values, steps, chain })
    }

    /// Translate every sheet by the single-valued vertex function `g`.
    ///
    /// Stored matchings survive because the cross terms against `g` do not
    /// depend on the permutation.
    pub fn shift_field(&self, g: &[Vec<f64>]) -> Result<QField> {
        if g.len() != self.values.len() {
            return Err(Error::Invalid("shift needs one vector per vertex".into()));
        }
        let values = self
            .values
            .iter()
            .zip(g)
            .map(|(v, d)| v.translated(d))
            .collect::<Result<Vec<_>>>()?;
        let edges = self.mesh.edges();
        let mut matchings = self.matchings.clone();
        for (e, m) in matchings.iter_mut().enumerate() {
            let [a, b] = edges[e];
            m.cost = pairing_cost(&values[a], &values[b], &m.perm);
            if !self.frozen[e] {
                let best = optimal_matching_unchecked(&values[a], &values[b]);
                debug_assert!(m.cost <= best.cost + 1e-7 * (1.0 + best.cost), "shift broke a matching");
                if m.cost > best.cost + 1e-7 * (1.0 + best.cost) {
                    *m = best;
                }
            }
        }
        Ok(QField {
            mesh: self.mesh.clone(),
            q: self.q,
            n: self.n,
            values,
            matchings,
            frozen: self.frozen.clone(),
        })
    }

    /// Plain-text form: `qpfield v1`, then one `q n x1 y1 ...` line per vertex.
    pub fn to_qpfield(&self) -> String {
        let mut s = String::from("qpfield v1\n");
        for v in &self.values {
            let _ = write!(s, "{} {}", v.q(), v.n());
            for x in v.coords() {
                let _ = write!(s, " {x:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_qpfield(text: &str, mesh: Arc<DiskMesh>) -> Result<Self> {
        Self::new(mesh, parse_qpfield(text)?)
    }
}

/// Parse the vertex values of a `qpfield v1` file.
pub fn parse_qpfield(text: &str) -> Result<Vec<QValue>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "qpfield v1" => {}
        _ => return Err(Error::Parse { line: 1, reason: "expected header `qpfield v1`".into() }),
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        let perr = |reason: String| Error::Parse { line: i + 1, reason };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 {
            return Err(perr("expected `q n coords...`".into()));
        }
        let q: usize = toks[0].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?;
        let n: usize = toks[1].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?;
        let coords = toks[2..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| perr(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        values.push(QValue::new(q, n, coords).map_err(|e| perr(e.to_string()))?);
    }
    if values.is_empty() {
        return Err(Error::Parse { line: 1, reason: "no vertex values".into() });
    }
    Ok(values)
}

/// Structured mesh level matching a field file, if the vertex count fits one.
pub fn infer_level(values: &[QValue]) -> Option<u32> {
    level_for_vertex_count(values.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRestriction {
    pub values: Vec<QValue>,
    pub steps: Vec<Matching>,
    /// Slot reached at the last sample by each starting slot.
    pub chain: Vec<usize>,
}
