//! Plateau problem for Q-valued disks: the boundary parameterizations of
//! several curves are optimized together with the inner Dirichlet minimum.
//!
//! Each curve `i` with multiplicity `k` is parameterized over a `k`-fold
//! wrapped circle whose `k·B` knots are the `k`-th roots of the mesh
//! boundary angles. Knot `w + m·B` carries the root `(θ_w + 2πm)/k`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::aq::QValue;
use crate::error::{Error, Result};
use crate::field::QField;
use crate::lab::variety_boundary_curve;
use crate::mesh::{DiskMesh, Mobius};
use crate::solver::{solve_dirichlet, solve_from, SolveOptions, SolveReport};

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closest distance between segments `[p1, q1]` and `[p2, q2]` in any dimension.
pub fn segment_distance(p1: &[f64], q1: &[f64], p2: &[f64], q2: &[f64]) -> f64 {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let (a, e, f) = (dot(&d1, &d1), dot(&d2, &d2), dot(&d2, &r));
    let eps = 1e-300;
    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = dot(&d1, &r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let gap: Vec<f64> = (0..p1.len()).map(|k| p1[k] + s * d1[k] - p2[k] - t * d2[k]).collect();
    dot(&gap, &gap).sqrt()
}

fn closest_on_segment(p: &[f64], a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let d = sub(b, a);
    let dd = dot(&d, &d);
    let t = if dd > 0.0 { (dot(&sub(p, a), &d) / dd).clamp(0.0, 1.0) } else { 0.0 };
    let c: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x + t * y).collect();
    let dist = dot(&sub(p, &c), &sub(p, &c)).sqrt();
    (c, dist)
}

/// Closed simple polyline with an arclength parameter rescaled to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanCurve {
    samples: Vec<Vec<f64>>,
    lnr_radius: f64,
    /// `cumulative[j]` is the arclength up to sample `j`; the last entry is
    /// the total length.
    cumulative: Vec<f64>,
}

impl JordanCurve {
    pub fn new(samples: Vec<Vec<f64>>, lnr_radius: f64) -> Result<Self> {
        let m = samples.len();
        if m < 3 {
            return Err(Error::Invalid("a closed curve needs at least 3 samples".into()));
        }
        let n = samples[0].len();
        if n == 0 || samples.iter().any(|p| p.len() != n || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Invalid("curve samples must be finite points of one dimension".into()));
        }
        if !(lnr_radius > 0.0) {
            return Err(Error::Invalid("retraction radius must be positive".into()));
        }
        let mut cumulative = vec![0.0];
        for j in 0..m {
            let d = sub(&samples[(j + 1) % m], &samples[j]);
            let len = dot(&d, &d).sqrt();
            if len == 0.0 {
                return Err(Error::Invalid(format!("repeated curve sample at {j}")));
            }
            cumulative.push(cumulative[j] + len);
        }
        let curve = Self { samples, lnr_radius, cumulative };
        let tol = 1e-12 * curve.length();
        for i in 0..m {
            for j in i + 2..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let (a0, a1) = (&curve.samples[i], &curve.samples[(i + 1) % m]);
                let (b0, b1) = (&curve.samples[j], &curve.samples[(j + 1) % m]);
                if segment_distance(a0, a1, b0, b1) <= tol {
                    return Err(Error::Invalid(format!("curve segments {i} and {j} intersect")));
                }
            }
        }
        Ok(curve)
    }

    /// Circle of the given radius in the plane of the first two coordinates,
    /// shifted by `center`.
    pub fn circle(center: &[f64], radius: f64, samples: usize) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::Invalid("circle needs at least two coordinates".into()));
        }
        let pts = (0..samples)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / samples as f64;
                let mut p = center.to_vec();
                p[0] += radius * t.cos();
                p[1] += radius * t.sin();
                p
            })
            .collect();
        Self::new(pts, 0.25 * radius)
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn lnr_radius(&self) -> f64 {
        self.lnr_radius
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    fn locate(&self, tau: f64) -> (usize, f64) {
        let s = (tau / (2.0 * PI)).rem_euclid(1.0) * self.length();
        let j = match self.cumulative.binary_search_by(|c| c.partial_cmp(&s).expect("finite")) {
            Ok(j) => j,
            Err(j) => j - 1,
        }
        .min(self.samples.len() - 1);
        let seg = self.cumulative[j + 1] - self.cumulative[j];
        let u = (s - self.cumulative[j]) / seg;
        // A parameter that rounds to just below a corner belongs to the next segment.
        if u > 1.0 - 1e-9 {
            ((j + 1) % self.samples.len(), 0.0)
        } else {
            (j, u)
        }
    }

    /// Point at parameter `tau`, periodic in `2π`, proportional to arclength.
    pub fn point_at(&self, tau: f64) -> Vec<f64> {
        let (j, u) = self.locate(tau);
        let a = &self.samples[j];
        let b = &self.samples[(j + 1) % self.samples.len()];
        a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect()
    }

    /// Derivative of `point_at` with respect to `tau` (one-sided at samples).
    pub fn tangent_at(&self, tau: f64) -> Vec<f64> {
        let (j, _) = self.locate(tau);
        let a = &self.samples[j];
        let b = &self.samples[(j + 1) % self.samples.len()];
        let seg = self.cumulative[j + 1] - self.cumulative[j];
        let scale = self.length() / (2.0 * PI * seg);
        b.iter().zip(a).map(|(y, x)| (y - x) * scale).collect()
    }

    pub fn distance_to(&self, p: &[f64]) -> f64 {
        self.nearest(p).1
    }

    fn nearest(&self, p: &[f64]) -> (Vec<f64>, f64) {
        let m = self.samples.len();
        (0..m)
            .map(|j| closest_on_segment(p, &self.samples[j], &self.samples[(j + 1) % m]))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
            .expect("nonempty")
    }

    /// Nearest-point projection, defined within the retraction radius.
    pub fn retract(&self, p: &[f64]) -> Option<Vec<f64>> {
        let (c, d) = self.nearest(p);
        (d <= self.lnr_radius).then_some(c)
    }

    pub fn distance_to_curve(&self, other: &JordanCurve) -> f64 {
        let (m, k) = (self.samples.len(), other.samples.len());
        let mut best = f64::INFINITY;
        for i in 0..m {
            for j in 0..k {
                let d = segment_distance(
                    &self.samples[i],
                    &self.samples[(i + 1) % m],
                    &other.samples[j],
                    &other.samples[(j + 1) % k],
                );
                best = best.min(d);
            }
        }
        best
    }
}

/// Nondecreasing `τ` given by increments between consecutive knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneParam {
    pub increments: Vec<f64>,
    pub offset: f64,
}

impl MonotoneParam {
    /// Equal increments: `τ` is the knot angle itself.
    pub fn identity(knots: usize) -> Self {
        Self { increments: vec![2.0 * PI / knots as f64; knots], offset: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.increments.is_empty() {
            return Err(Error::Invalid("empty parameterization".into()));
        }
        if self.increments.iter().any(|&x| !(x >= -1e-12) || !x.is_finite()) || !self.offset.is_finite() {
            return Err(Error::Invalid("increments must be finite and nonnegative".into()));
        }
        let sum: f64 = self.increments.iter().sum();
        if (sum - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::Invalid(format!("increments sum to {sum}, not 2π")));
        }
        Ok(())
    }

    /// `τ` at every knot.
    pub fn values(&self) -> Vec<f64> {
        let mut t = self.offset;
        self.increments
            .iter()
            .map(|&d| {
                let v = t;
                t += d;
                v
            })
            .collect()
    }
}

/// Euclidean projection onto `{x ≥ 0, Σx = total}`.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - total) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProblem {
    pub curves: Vec<JordanCurve>,
    pub multiplicities: Vec<usize>,
    pub params: Vec<MonotoneParam>,
    /// Curves held by the three-point condition.
    pub pinned: Vec<bool>,
}

impl BoundaryProblem {
    /// Identity parameterizations for a boundary loop of `boundary_count`
    /// vertices, with the first curve pinned.
    pub fn new(curves: Vec<JordanCurve>, multiplicities: Vec<usize>, boundary_count: usize) -> Result<Self> {
        let params = multiplicities.iter().map(|&k| MonotoneParam::identity(k * boundary_count)).collect();
        let mut pinned = vec![false; curves.len()];
        if let Some(p) = pinned.first_mut() {
            *p = true;
        }
        let p = Self { curves, multiplicities, params, pinned };
        p.validate()?;
        Ok(p)
    }

    pub fn q(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.curves[0].dim()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.curves.len();
        if k == 0 {
            return Err(Error::Invalid("at least one curve is required".into()));
        }
        if self.multiplicities.len() != k || self.params.len() != k || self.pinned.len() != k {
            return Err(Error::Invalid("one multiplicity, parameterization and pin flag per curve".into()));
        }
        if self.multiplicities.iter().any(|&m| m == 0) {
            return Err(Error::Invalid("multiplicities must be positive".into()));
        }
        let n = self.dim();
        if self.curves.iter().any(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { left: n, right: self.curves.iter().map(|c| c.dim()).find(|&d| d != n).unwrap_or(n) });
        }
        for p in &self.params {
            p.validate()?;
        }
        let max_r = self.curves.iter().map(|c| c.lnr_radius).fold(0.0, f64::max);
        for i in 0..k {
            for j in i + 1..k {
                let d = self.curves[i].distance_to_curve(&self.curves[j]);
                if d <= 2.0 * max_r {
                    return Err(Error::Invalid(format!(
                        "curves {i} and {j} are {d:.3e} apart, within twice the retraction radius {max_r}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_mesh(&self, mesh: &DiskMesh) -> Result<()> {
        let b = mesh.boundary_loop().len();
        for (i, p) in self.params.iter().enumerate() {
            if p.increments.len() != self.multiplicities[i] * b {
                return Err(Error::Invalid(format!(
                    "curve {i} has {} increments, expected {} for {b} boundary vertices",
                    p.increments.len(),
                    self.multiplicities[i] * b
                )));
            }
        }
        Ok(())
    }

    /// Pinned curves keep their offset and the sums over three equal knot
    /// blocks, which fixes `τ` at three knot angles.
    fn pin_blocks(&self, i: usize) -> Option<[(usize, usize, f64); 3]> {
        if !self.pinned[i] {
            return None;
        }
        let inc = &self.params[i].increments;
        let len = inc.len();
        let cuts = [0, len / 3, 2 * len / 3, len];
        Some([0, 1, 2].map(|b| (cuts[b], cuts[b + 1], inc[cuts[b]..cuts[b + 1]].iter().sum())))
    }
}

/// Boundary values in loop order: the union over curves of the images of the
/// `k`-th roots of each boundary angle.
pub fn boundary_trace(problem: &BoundaryProblem, mesh: &DiskMesh) -> Result<Vec<QValue>> {
    problem.validate()?;
    problem.check_mesh(mesh)?;
    let b = mesh.boundary_loop().len();
    let taus: Vec<Vec<f64>> = problem.params.iter().map(|p| p.values()).collect();
    (0..b)
        .map(|w| {
            let mut pts = Vec::with_capacity(problem.q());
            for (i, curve) in problem.curves.iter().enumerate() {
                for m in 0..problem.multiplicities[i] {
                    pts.push(curve.point_at(taus[i][w + m * b]));
                }
            }
            QValue::from_points(&pts)
        })
        .collect()
}

/// Gradient of the Dirichlet energy with respect to every boundary slot
/// point, under the field's current configuration.
fn boundary_point_gradient(field: &QField) -> Vec<Vec<Vec<f64>>> {
    let mesh = field.mesh();
    let (q, n) = (field.q(), field.n());
    let mut pos = vec![usize::MAX; mesh.num_vertices()];
    for (w, &v) in mesh.boundary_loop().iter().enumerate() {
        pos[v] = w;
    }
    let mut grad = vec![vec![vec![0.0; n]; q]; mesh.boundary_loop().len()];
    let config = field.configuration();
    for (t, al) in config.iter().enumerate() {
        let tri = mesh.triangles()[t];
        if tri.iter().all(|&v| pos[v] == usize::MAX) {
            continue;
        }
        let k = &mesh.geometry(t).stiffness;
        for s in 0..q {
            for (a, c) in [(0, 1), (1, 2), (2, 0)] {
                let xa = field.value(tri[a]).point(al.slots[a][s]);
                let xc = field.value(tri[c]).point(al.slots[c][s]);
                for (me, x_me, x_other) in [(a, xa, xc), (c, xc, xa)] {
                    let w = pos[tri[me]];
                    if w == usize::MAX {
                        continue;
                    }
                    let g = &mut grad[w][al.slots[me][s]];
                    for d in 0..n {
                        g[d] -= 2.0 * k[a][c] * (x_me[d] - x_other[d]);
                    }
                }
            }
        }
    }
    grad
}

/// Derivatives with respect to the increments and the offset of curve `i`.
fn param_gradient(problem: &BoundaryProblem, field: &QField, i: usize) -> (Vec<f64>, f64) {
    let b = field.mesh().boundary_loop().len();
    let point_grad = boundary_point_gradient(field);
    let slot_base: usize = problem.multiplicities[..i].iter().sum();
    let taus = problem.params[i].values();
    let k = problem.multiplicities[i];
    let mut dtau = vec![0.0; k * b];
    for w in 0..b {
        // Boundary slots keep the trace order: curve blocks, then roots.
        for m in 0..k {
            let j = w + m * b;
            dtau[j] = dot(&point_grad[w][slot_base + m], &problem.curves[i].tangent_at(taus[j]));
        }
    }
    let offset_grad: f64 = dtau.iter().sum();
    let mut inc_grad = vec![0.0; dtau.len()];
    let mut suffix = 0.0;
    for l in (0..dtau.len()).rev() {
        inc_grad[l] = suffix;
        suffix += dtau[l];
    }
    (inc_grad, offset_grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientMode {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauOptions {
    pub outer_iters: usize,
    /// Stop when an outer cycle lowers the energy by less than this fraction.
    pub tol: f64,
    pub gradient: GradientMode,
    pub fd_step: f64,
    pub max_backtracks: usize,
    /// Evaluations spent by the golden-section fallback.
    pub golden_evals: usize,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        Self {
            outer_iters: 40,
            tol: 1e-6,
            gradient: GradientMode::Analytic,
            fd_step: 1e-5,
            max_backtracks: 8,
            golden_evals: 8,
        }
    }
}

struct Evaluator<'a> {
    mesh: Arc<DiskMesh>,
    inner: &'a SolveOptions,
}

impl Evaluator<'_> {
    /// Minimize again after replacing the boundary values, warm-started at
    /// `field`.
    fn eval(&self, field: &QField, problem: &BoundaryProblem) -> Result<(QField, f64)> {
        let trace = boundary_trace(problem, &self.mesh)?;
        let mut values = field.values().to_vec();
        for (w, &v) in self.mesh.boundary_loop().iter().enumerate() {
            values[v] = trace[w].clone();
        }
        let mut next = field.clone();
        next.unfreeze_all();
        next.set_values(values)?;
        let (solved, report) = solve_from(next, self.inner)?;
        Ok((solved, report.final_energy))
    }
}

fn with_param(problem: &BoundaryProblem, i: usize, param: MonotoneParam) -> BoundaryProblem {
    let mut p = problem.clone();
    p.params[i] = param;
    p
}

/// Projected step of size `s` against the gradient.
fn stepped(problem: &BoundaryProblem, i: usize, grad: &(Vec<f64>, f64), s: f64) -> MonotoneParam {
    let cur = &problem.params[i];
    let raw: Vec<f64> = cur.increments.iter().zip(&grad.0).map(|(x, g)| x - s * g).collect();
    match problem.pin_blocks(i) {
        Some(blocks) => {
            let mut inc = vec![0.0; raw.len()];
            for (a, b, total) in blocks {
                inc[a..b].copy_from_slice(&project_simplex(&raw[a..b], total));
            }
            MonotoneParam { increments: inc, offset: cur.offset }
        }
        None => {
            let inc = project_simplex(&raw, 2.0 * PI);
            MonotoneParam { increments: inc, offset: cur.offset - s * grad.1 }
        }
    }
}

fn fd_gradient(
    ev: &Evaluator,
    problem: &BoundaryProblem,
    field: &QField,
    energy: f64,
    i: usize,
    h: f64,
) -> Result<(Vec<f64>, f64)> {
    let cur = &problem.params[i];
    let mut g = vec![0.0; cur.increments.len()];
    for l in 0..g.len() {
        let mut p = cur.clone();
        p.increments[l] += h;
        let (_, e) = ev.eval_unchecked(field, &with_param(problem, i, p))?;
        g[l] = (e - energy) / h;
    }
    let mut p = cur.clone();
    p.offset += h;
    let (_, e) = ev.eval_unchecked(field, &with_param(problem, i, p))?;
    Ok((g, (e - energy) / h))
}

impl Evaluator<'_> {
    /// Like `eval`, without requiring the increments to sum to `2π`.
    fn eval_unchecked(&self, field: &QField, problem: &BoundaryProblem) -> Result<(QField, f64)> {
        let b = self.mesh.boundary_loop().len();
        let taus: Vec<Vec<f64>> = problem.params.iter().map(|p| p.values()).collect();
        let mut values = field.values().to_vec();
        for (w, &v) in self.mesh.boundary_loop().iter().enumerate() {
            let mut pts = Vec::with_capacity(problem.q());
            for (i, curve) in problem.curves.iter().enumerate() {
                for m in 0..problem.multiplicities[i] {
                    pts.push(curve.point_at(taus[i][w + m * b]));
                }
            }
            values[v] = QValue::from_points(&pts)?;
        }
        let mut next = field.clone();
        next.unfreeze_all();
        next.set_values(values)?;
        let (solved, report) = solve_from(next, self.inner)?;
        Ok((solved, report.final_energy))
    }
}

/// Gradient of the inner minimum with respect to curve `i`'s parameters.
pub fn parameter_gradient(
    problem: &BoundaryProblem,
    field: &QField,
    i: usize,
    mode: GradientMode,
    opts: &SolveOptions,
    fd_step: f64,
) -> Result<(Vec<f64>, f64)> {
    match mode {
        GradientMode::Analytic => Ok(param_gradient(problem, field, i)),
        GradientMode::FiniteDifference => {
            let inner = SolveOptions { restarts: 1, annealing: false, ..opts.clone() };
            let ev = Evaluator { mesh: field.mesh_arc().clone(), inner: &inner };
            fd_gradient(&ev, problem, field, field.dirichlet_energy(), i, fd_step)
        }
    }
}

/// Minimize the Dirichlet energy jointly over the field and the monotone
/// boundary parameterizations.
pub fn solve_plateau(
    problem: BoundaryProblem,
    mesh: Arc<DiskMesh>,
    opts: &SolveOptions,
) -> Result<(QField, BoundaryProblem, SolveReport)> {
    solve_plateau_with(problem, mesh, opts, &PlateauOptions::default())
}

pub fn solve_plateau_with(
    mut problem: BoundaryProblem,
    mesh: Arc<DiskMesh>,
    opts: &SolveOptions,
    popts: &PlateauOptions,
) -> Result<(QField, BoundaryProblem, SolveReport)> {
    opts.validate()?;
    problem.validate()?;
    problem.check_mesh(&mesh)?;
    let trace = boundary_trace(&problem, &mesh)?;
    let (mut field, initial) = solve_dirichlet(mesh.clone(), &trace, opts)?;
    let mut energy = initial.final_energy;
    let mut history = vec![energy];
    let inner = SolveOptions { restarts: 1, annealing: false, ..opts.clone() };
    let ev = Evaluator { mesh: mesh.clone(), inner: &inner };
    let k = problem.curves.len();
    let mut scales = vec![None::<f64>; k];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..popts.outer_iters {
        iterations += 1;
        let start = energy;
        for i in 0..k {
            let grad = match popts.gradient {
                GradientMode::Analytic => param_gradient(&problem, &field, i),
                GradientMode::FiniteDifference => fd_gradient(&ev, &problem, &field, energy, i, popts.fd_step)?,
            };
            let gmax = grad.0.iter().fold(grad.1.abs(), |m, g| m.max(g.abs()));
            if gmax == 0.0 {
                continue;
            }
            let knot = 2.0 * PI / problem.params[i].increments.len() as f64;
            let s0 = *scales[i].get_or_insert(0.5 * knot / gmax);
            let mut s = s0;
            let mut accepted = None;
            for _ in 0..=popts.max_backtracks {
                let cand = with_param(&problem, i, stepped(&problem, i, &grad, s));
                let moved: f64 = problem.params[i]
                    .increments
                    .iter()
                    .zip(&cand.params[i].increments)
                    .zip(&grad.0)
                    .map(|((a, b), g)| (a - b) * g)
                    .sum::<f64>()
                    + (problem.params[i].offset - cand.params[i].offset) * grad.1;
                let (f, e) = ev.eval(&field, &cand)?;
                if e <= energy - 1e-4 * moved && e < energy {
                    accepted = Some((f, e, cand));
                    break;
                }
                s *= 0.5;
            }
            if accepted.is_none() {
                accepted = golden_fallback(&ev, &problem, &field, energy, i, &grad, s0, popts.golden_evals)?;
                s = s0 * 0.25;
            } else {
                s *= 2.0;
            }
            scales[i] = Some(s);
            if let Some((f, e, cand)) = accepted {
                field = f;
                energy = e;
                problem = cand;
            }
        }
        history.push(energy);
        if start - energy <= popts.tol * start {
            converged = true;
            break;
        }
    }
    let report = SolveReport {
        final_energy: energy,
        iterations,
        restart_index: initial.restart_index,
        converged,
        energy_history: history,
        restart_energies: initial.restart_energies,
        annealing_accepted: initial.annealing_accepted,
        seed: opts.seed,
    };
    Ok((field, problem, report))
}

/// Golden-section search on the step length; used when backtracking finds
/// no sufficient decrease.
#[allow(clippy::too_many_arguments)]
fn golden_fallback(
    ev: &Evaluator,
    problem: &BoundaryProblem,
    field: &QField,
    energy: f64,
    i: usize,
    grad: &(Vec<f64>, f64),
    s_max: f64,
    evals: usize,
) -> Result<Option<(QField, f64, BoundaryProblem)>> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, s_max);
    let mut best: Option<(QField, f64, BoundaryProblem)> = None;
    let probe = |s: f64, best: &mut Option<(QField, f64, BoundaryProblem)>| -> Result<f64> {
        let cand = with_param(problem, i, stepped(problem, i, grad, s));
        let (f, e) = ev.eval(field, &cand)?;
        if e < energy && best.as_ref().map_or(true, |b| e < b.1) {
            *best = Some((f, e, cand));
        }
        Ok(e)
    };
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = probe(x1, &mut best)?;
    let mut f2 = probe(x2, &mut best)?;
    for _ in 2..evals {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = probe(x1, &mut best)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = probe(x2, &mut best)?;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrappedVerdict {
    pub curve: usize,
    /// Longest knot-angle arc over which `τ` moves by at most the tolerance.
    pub max_constant_arc: f64,
    pub threshold: f64,
    pub wrapped: bool,
}

/// Knots are equally spaced on the wrapped circle, `2π/len` apart.
pub fn wrapped_check(problem: &BoundaryProblem, tol: f64) -> Vec<WrappedVerdict> {
    problem
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let len = p.increments.len();
            let h = 2.0 * PI / len as f64;
            // Longest cyclic run of knot steps whose increments add up to at most tol.
            let mut longest = 0usize;
            let mut sum = 0.0;
            let mut start = 0;
            for end in 0..2 * len {
                sum += p.increments[end % len];
                while sum > tol && start <= end {
                    sum -= p.increments[start % len];
                    start += 1;
                }
                longest = longest.max((end + 1 - start).min(len));
            }
            let threshold = 2.0 * PI / problem.multiplicities[i] as f64;
            let arc = longest as f64 * h;
            WrappedVerdict { curve: i, max_constant_arc: arc, threshold, wrapped: arc < threshold - 1e-12 }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeoVerdict {
    pub curve: usize,
    pub min_increment: f64,
    pub homeomorphism: bool,
}

pub fn boundary_homeo_check(problem: &BoundaryProblem, tol: f64) -> Vec<HomeoVerdict> {
    problem
        .params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let len = p.increments.len() as f64;
            let min_increment = p.increments.iter().copied().fold(f64::INFINITY, f64::min);
            let total: f64 = p.increments.iter().sum();
            let full = (total - 2.0 * PI).abs() < 1e-9;
            HomeoVerdict { curve: i, min_increment, homeomorphism: full && min_increment >= tol / len }
        })
        .collect()
}

/// Energy of the field composed with a disk automorphism, before and after
/// relaxing it with its new boundary values held fixed.
pub fn mobius_quotient_check(field: &QField, mobius: &Mobius, opts: &SolveOptions) -> Result<(f64, f64, f64)> {
    let mesh = field.mesh_arc().clone();
    let pulled = mesh
        .vertices()
        .iter()
        .map(|&p| field.evaluate(mobius.apply(p)))
        .collect::<Result<Vec<_>>>()?;
    let pulled = QField::new(mesh, pulled)?;
    let before = pulled.dirichlet_energy();
    let inner = SolveOptions { restarts: 1, annealing: false, ..opts.clone() };
    let (_, report) = solve_from(pulled, &inner)?;
    Ok((field.dirichlet_energy(), before, report.final_energy))
}

/// JSON problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub curves: Vec<CurveSpec>,
    pub multiplicities: Vec<usize>,
    /// Declared total multiplicity; checked against the sum when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<MonotoneParam>>,
    /// Indices of pinned curves; the first curve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pins: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub points: Vec<Vec<f64>>,
    pub lnr_radius: f64,
}

impl ProblemSpec {
    pub fn into_problem(self, boundary_count: usize) -> Result<BoundaryProblem> {
        let total: usize = self.multiplicities.iter().sum();
        if let Some(q) = self.q {
            if q != total {
                return Err(Error::MultiplicityMismatch { left: total, right: q });
            }
        }
        let curves = self
            .curves
            .into_iter()
            .map(|c| JordanCurve::new(c.points, c.lnr_radius))
            .collect::<Result<Vec<_>>>()?;
        let mut problem = BoundaryProblem::new(curves, self.multiplicities, boundary_count)?;
        if let Some(params) = self.params {
            problem.params = params;
        }
        if let Some(pins) = self.pins {
            problem.pinned = vec![false; problem.curves.len()];
            for i in pins {
                *problem
                    .pinned
                    .get_mut(i)
                    .ok_or_else(|| Error::Invalid(format!("pin refers to missing curve {i}")))? = true;
            }
        }
        problem.validate()?;
        Ok(problem)
    }

    pub fn from_problem(problem: &BoundaryProblem) -> Self {
        Self {
            curves: problem
                .curves
                .iter()
                .map(|c| CurveSpec { points: c.samples.clone(), lnr_radius: c.lnr_radius })
                .collect(),
            multiplicities: problem.multiplicities.clone(),
            q: Some(problem.q()),
            params: Some(problem.params.clone()),
            pins: Some((0..problem.pinned.len()).filter(|&i| problem.pinned[i]).collect()),
        }
    }
}

/// Circle of radius `r` in the plane, traversed once.
pub fn circle_problem(radius: f64, samples: usize, boundary_count: usize) -> Result<BoundaryProblem> {
    let c = JordanCurve::circle(&[0.0, 0.0], radius, samples)?;
    BoundaryProblem::new(vec![c], vec![1], boundary_count)
}

/// Two unit circles in parallel planes of `R³`, `separation` apart.
pub fn parallel_circles_problem(separation: f64, samples: usize, boundary_count: usize) -> Result<BoundaryProblem> {
    let a = JordanCurve::circle(&[0.0, 0.0, 0.0], 1.0, samples)?;
    let b = JordanCurve::circle(&[0.0, 0.0, separation], 1.0, samples)?;
    BoundaryProblem::new(vec![a, b], vec![1, 1], boundary_count)
}

/// The two boundary curves of the variety `w² = z² − 1/4` over the unit
/// circle, as curves in `R⁴`.
pub fn variety_problem(samples: usize, boundary_count: usize) -> Result<BoundaryProblem> {
    let curves = (0..2)
        .map(|s| JordanCurve::new(variety_boundary_curve(s, samples), 0.25))
        .collect::<Result<Vec<_>>>()?;
    BoundaryProblem::new(curves, vec![1, 1], boundary_count)
}
