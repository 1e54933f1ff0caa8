//! Discrete Dirichlet problem for Q-valued functions.
//!
//! Alternating minimization: with the per-triangle sheet configuration held
//! fixed the energy is a quadratic form in the interior slot values, coupled
//! across vertices through the configuration's slot permutations. Solving it
//! and re-deriving the configuration from optimal matchings never raises the
//! energy for Q = 2; for larger Q a non-descending step is rejected.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aq::{metric_g, QValue};
use crate::error::{Error, Result};
use crate::field::{Alignment, QField};
use crate::linalg::{conjugate_gradient, CsrMatrix};
use crate::mesh::DiskMesh;
use crate::perm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_outer_iters: usize,
    pub energy_tol: f64,
    /// Matchings are re-derived every this many outer iterations.
    pub matching_refresh: usize,
    pub restarts: usize,
    pub seed: u64,
    pub annealing: bool,
    /// Number of Metropolis proposals when annealing.
    pub anneal_steps: usize,
    /// Standard deviation of the restart perturbation, relative to the
    /// spread of the boundary data.
    pub init_noise: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 500,
            energy_tol: 1e-9,
            matching_refresh: 1,
            restarts: 4,
            seed: 0,
            annealing: false,
            anneal_steps: 24,
            init_noise: 0.1,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.matching_refresh == 0 || self.restarts == 0 {
            return Err(Error::Invalid("iteration counts and restarts must be positive".into()));
        }
        if !(self.energy_tol > 0.0 && self.energy_tol <= 1e-2) {
            return Err(Error::Invalid(format!("energy_tol {} not in (0, 1e-2]", self.energy_tol)));
        }
        if !(self.init_noise >= 0.0) {
            return Err(Error::Invalid("init_noise must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub final_energy: f64,
    pub iterations: usize,
    pub restart_index: usize,
    pub converged: bool,
    pub energy_history: Vec<f64>,
    pub restart_energies: Vec<f64>,
    pub annealing_accepted: usize,
    pub seed: u64,
}

const CG_TOL: f64 = 1e-13;

/// Map from vertices to rows of the slot system.
struct Unknowns {
    row: Vec<Option<usize>>,
    count: usize,
}

impl Unknowns {
    fn new(mesh: &DiskMesh) -> Self {
        let mut row = vec![None; mesh.num_vertices()];
        let mut count = 0;
        for v in mesh.interior_vertices() {
            row[v] = Some(count);
            count += 1;
        }
        Self { row, count }
    }
}

/// Minimize the quadratic energy of `config` over the interior slot values,
/// warm-starting from the field's current values.
pub fn solve_configuration(field: &QField, config: &[Alignment]) -> Vec<QValue> {
    let mesh = field.mesh();
    let (q, n) = (field.q(), field.n());
    let unknowns = Unknowns::new(mesh);
    let dim = unknowns.count * q;
    if dim == 0 {
        return field.values().to_vec();
    }
    let idx = |v: usize, s: usize| unknowns.row[v].map(|r| r * q + s);

    let mut triplets = Vec::with_capacity(mesh.num_triangles() * q * 12);
    let mut rhs = vec![vec![0.0; dim]; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = &mesh.geometry(t).stiffness;
        let slots = &config[t].slots;
        for s in 0..q {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let w = -k[a][b];
                let (va, sa, vb, sb) = (tri[a], slots[a][s], tri[b], slots[b][s]);
                match (idx(va, sa), idx(vb, sb)) {
                    (Some(i), Some(j)) => {
                        triplets.push((i, i, w));
                        triplets.push((j, j, w));
                        triplets.push((i, j, -w));
                        triplets.push((j, i, -w));
                    }
                    (Some(i), None) => {
                        triplets.push((i, i, w));
                        let x = field.value(vb).point(sb);
                        for d in 0..n {
                            rhs[d][i] += w * x[d];
                        }
                    }
                    (None, Some(j)) => {
                        triplets.push((j, j, w));
                        let x = field.value(va).point(sa);
                        for d in 0..n {
                            rhs[d][j] += w * x[d];
                        }
                    }
                    (None, None) => {}
                }
            }
        }
    }
    let a = CsrMatrix::from_triplets(dim, triplets);
    let max_iters = 20 * dim + 200;
    let solutions: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|d| {
            let mut x = vec![0.0; dim];
            for v in mesh.interior_vertices() {
                let r = unknowns.row[v].expect("interior row");
                for s in 0..q {
                    x[r * q + s] = field.value(v).point(s)[d];
                }
            }
            let out = conjugate_gradient(&a, &rhs[d], &mut x, CG_TOL, max_iters);
            debug_assert!(out.relative_residual < 1e-8, "slot system failed to converge");
            x
        })
        .collect();

    let mut values = field.values().to_vec();
    for v in mesh.interior_vertices() {
        let r = unknowns.row[v].expect("interior row");
        let c = values[v].coords_mut();
        for s in 0..q {
            for d in 0..n {
                c[s * n + d] = solutions[d][r * q + s];
            }
        }
    }
    values
}

/// Discrete harmonic extension of single-valued boundary data given in
/// boundary-loop order.
pub fn harmonic_extension(mesh: Arc<DiskMesh>, boundary: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let b = mesh.boundary_loop();
    if boundary.len() != b.len() {
        return Err(Error::Invalid(format!(
            "{} boundary values for a loop of {}",
            boundary.len(),
            b.len()
        )));
    }
    let n = boundary[0].len();
    let mut values = vec![QValue::repeated(1, &vec![0.0; n]); mesh.num_vertices()];
    for (w, &v) in b.iter().enumerate() {
        if boundary[w].len() != n {
            return Err(Error::DimensionMismatch { left: n, right: boundary[w].len() });
        }
        values[v] = QValue::new(1, n, boundary[w].clone())?;
    }
    let field = QField::new(mesh, values)?;
    let config = field.configuration();
    Ok(solve_configuration(&field, &config)
        .into_iter()
        .map(|v| v.coords().to_vec())
        .collect())
}

struct RelaxOutcome {
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Alternating minimization from the field's current state.
fn relax(field: &mut QField, opts: &SolveOptions, max_iters: usize) -> RelaxOutcome {
    let mut energy = field.dirichlet_energy();
    let mut history = vec![energy];
    let mut config = field.configuration();
    for it in 1..=max_iters {
        if energy == 0.0 {
            return RelaxOutcome { history, iterations: it - 1, converged: true };
        }
        let values = solve_configuration(field, &config);
        let mut candidate = field.clone();
        candidate
            .set_values(values)
            .expect("solver preserves multiplicity and dimension");
        let refresh = it % opts.matching_refresh == 0;
        let cand_energy = if refresh {
            candidate.dirichlet_energy()
        } else {
            candidate.energy_with(&config)
        };
        if cand_energy > energy * (1.0 + 1e-13) {
            // Re-derived configuration is worse than the frozen one; stop here.
            return RelaxOutcome { history, iterations: it, converged: true };
        }
        let decrease = (energy - cand_energy) / energy;
        *field = candidate;
        energy = cand_energy;
        history.push(energy);
        if refresh {
            config = field.configuration();
            if decrease < opts.energy_tol {
                return RelaxOutcome { history, iterations: it, converged: true };
            }
        }
    }
    RelaxOutcome { history, iterations: max_iters, converged: false }
}

/// Compose one sheet transposition onto every edge crossed by `[p0, p1]`
/// and freeze those edges.
fn apply_cut(field: &mut QField, p0: [f64; 2], p1: [f64; 2], rng: &mut ChaCha8Rng) -> bool {
    let q = field.q();
    let i = rng.gen_range(0..q);
    let mut j = rng.gen_range(0..q - 1);
    if j >= i {
        j += 1;
    }
    let mut swap = perm::identity(q);
    swap.swap(i, j);
    let mesh = field.mesh_arc().clone();
    let mut any = false;
    for &[a, b] in mesh.edges() {
        if mesh.is_boundary(a) && mesh.is_boundary(b) {
            continue;
        }
        if segments_cross(p0, p1, mesh.vertex(a), mesh.vertex(b)) {
            let p = perm::then(&field.edge_perm(a, b), &swap);
            field.freeze_edge(a, b, &p).expect("edge exists");
            any = true;
        }
    }
    any
}

#[derive(Debug, Clone, Copy)]
enum Proposal {
    /// Random segment through the disk: creates a pair of branch points.
    Cut,
    /// Short segment out of a branch triangle: moves one branch point by
    /// about the given distance.
    Move(f64),
}

fn propose(field: &mut QField, kind: Proposal, rng: &mut ChaCha8Rng) -> bool {
    if field.q() < 2 {
        return false;
    }
    match kind {
        Proposal::Cut => {
            let point = |rng: &mut ChaCha8Rng| {
                let r = 0.9 * rng.gen::<f64>().sqrt();
                let t = 2.0 * PI * rng.gen::<f64>();
                [r * t.cos(), r * t.sin()]
            };
            let (p0, p1) = (point(rng), point(rng));
            apply_cut(field, p0, p1, rng)
        }
        Proposal::Move(dist) => {
            let branch = field.branch_adjacent_triangles();
            if branch.is_empty() {
                return false;
            }
            let t = branch[rng.gen_range(0..branch.len())];
            let mesh = field.mesh_arc().clone();
            let tri = mesh.triangles()[t];
            let p0 = [0, 1].map(|d| tri.iter().map(|&v| mesh.vertex(v)[d]).sum::<f64>() / 3.0);
            let len = dist * rng.gen_range(0.5..1.5);
            let ang = 2.0 * PI * rng.gen::<f64>();
            let p1 = [p0[0] + len * ang.cos(), p0[1] + len * ang.sin()];
            if p1[0].hypot(p1[1]) > 0.95 {
                return false;
            }
            apply_cut(field, p0, p1, rng)
        }
    }
}

fn segments_cross(p0: [f64; 2], p1: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let orient = |u: [f64; 2], v: [f64; 2], w: [f64; 2]| {
        (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])
    };
    let d1 = orient(p0, p1, a);
    let d2 = orient(p0, p1, b);
    let d3 = orient(a, b, p0);
    let d4 = orient(a, b, p1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

struct RestartResult {
    field: QField,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
    accepted: usize,
}

/// Metropolis search over sheet topologies. Each proposal is solved with
/// its frozen matchings, then relaxed freely. The temperature starts at
/// `t0_frac` times the energy and falls linearly; zero makes it greedy.
fn anneal(
    field: QField,
    energy: f64,
    opts: &SolveOptions,
    rng: &mut ChaCha8Rng,
    steps: usize,
    t0_frac: f64,
    pick: impl Fn(&mut ChaCha8Rng) -> Proposal,
) -> (QField, f64, usize) {
    let mut best = (field.clone(), energy);
    let mut current = (field, energy);
    let mut accepted = 0;
    if energy == 0.0 {
        return (best.0, best.1, 0);
    }
    let t0 = t0_frac * energy;
    let inner = SolveOptions { energy_tol: opts.energy_tol.max(1e-7), ..opts.clone() };
    for k in 0..steps {
        let temperature = t0 * (1.0 - k as f64 / steps as f64);
        let mut proposal = current.0.clone();
        let kind = pick(rng);
        if !propose(&mut proposal, kind, rng) {
            continue;
        }
        let config = proposal.configuration();
        let values = solve_configuration(&proposal, &config);
        proposal.unfreeze_all();
        proposal.set_values(values).expect("same shape");
        relax(&mut proposal, &inner, opts.max_outer_iters);
        let e = proposal.dirichlet_energy();
        let u: f64 = rng.gen();
        let take = e <= current.1 || (temperature > 0.0 && u < (-(e - current.1) / temperature).exp());
        if take {
            accepted += 1;
            current = (proposal, e);
            if e < best.1 {
                best = current.clone();
            }
        }
    }
    (best.0, best.1, accepted)
}

fn boundary_scale(boundary: &[QValue]) -> f64 {
    let n = boundary[0].n();
    let mut mean = vec![0.0; n];
    let mut count = 0.0;
    for v in boundary {
        for p in v.points() {
            for d in 0..n {
                mean[d] += p[d];
            }
            count += 1.0;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = 0.0;
    for v in boundary {
        for p in v.points() {
            var += p.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>();
        }
    }
    (var / count).sqrt()
}

/// Interior vertices copy the nearest boundary value; restart `r > 0` adds
/// Gaussian noise.
pub fn initial_values(
    mesh: &DiskMesh,
    boundary: &[QValue],
    restart: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<QValue> {
    let b = mesh.boundary_loop();
    let scale = noise * boundary_scale(boundary);
    let mut values = vec![boundary[0].clone(); mesh.num_vertices()];
    for (w, &v) in b.iter().enumerate() {
        values[v] = boundary[w].clone();
    }
    for v in mesh.interior_vertices() {
        let p = mesh.vertex(v);
        let mut nearest = (f64::INFINITY, 0);
        for (w, &bv) in b.iter().enumerate() {
            let c = mesh.vertex(bv);
            let d = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            if d < nearest.0 {
                nearest = (d, w);
            }
        }
        let mut val = boundary[nearest.1].clone();
        if restart > 0 && scale > 0.0 {
            for x in val.coords_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x += scale * z;
            }
        }
        values[v] = val;
    }
    values
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((restart as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

const ANNEAL_T0: f64 = 0.02;
/// Annealing with a fine target mesh starts on this level.
const COARSE_LEVEL: u32 = 3;
/// Greedy branch moves after each refinement.
const REFINE_MOVES: usize = 8;

fn mixed(rng: &mut ChaCha8Rng, h: f64) -> Proposal {
    if rng.gen::<bool>() {
        Proposal::Cut
    } else {
        Proposal::Move(2.0 * h)
    }
}

/// True for meshes produced by `build_disk_mesh` at their level.
fn is_ring_mesh(mesh: &DiskMesh) -> bool {
    let n = 1usize << mesh.level();
    mesh.num_vertices() == 1 + 3 * n * (n + 1)
        && mesh.boundary_loop().len() == 6 * n
        && mesh.vertex(0) == [0.0, 0.0]
        && mesh.vertex(mesh.boundary_loop()[0]) == [1.0, 0.0]
}

/// Anneal on a coarse ring mesh, then interpolate level by level and let
/// greedy branch moves settle the branch points on each finer mesh.
fn run_multilevel(
    mesh: &Arc<DiskMesh>,
    boundary: &[QValue],
    restart: usize,
    opts: &SolveOptions,
    rng: &mut ChaCha8Rng,
) -> Result<RestartResult> {
    let top = mesh.level();
    let subsample = |level: u32| -> Vec<QValue> {
        let stride = 1usize << (top - level);
        boundary.iter().step_by(stride).cloned().collect()
    };
    let coarse = Arc::new(crate::mesh::build_disk_mesh(COARSE_LEVEL)?);
    let b0 = subsample(COARSE_LEVEL);
    let init = initial_values(&coarse, &b0, restart, opts.init_noise, rng);
    let mut field = QField::new(coarse, init)?;
    let mut out = relax(&mut field, opts, opts.max_outer_iters);
    let h = field.mesh().max_edge_length();
    let e = field.dirichlet_energy();
    let (f, _, mut accepted) = anneal(field, e, opts, rng, opts.anneal_steps, ANNEAL_T0, |rng| mixed(rng, h));
    field = f;
    for level in COARSE_LEVEL + 1..=top {
        let fine = if level == top { mesh.clone() } else { Arc::new(crate::mesh::build_disk_mesh(level)?) };
        let bl = subsample(level);
        let mut values = fine
            .vertices()
            .iter()
            .map(|&p| field.evaluate(p))
            .collect::<Result<Vec<_>>>()?;
        for (w, &v) in fine.boundary_loop().iter().enumerate() {
            values[v] = bl[w].clone();
        }
        let mut next = QField::new(fine, values)?;
        out = relax(&mut next, opts, opts.max_outer_iters);
        let h = next.mesh().max_edge_length();
        let e = next.dirichlet_energy();
        let (f, best_e, acc) = anneal(next, e, opts, rng, REFINE_MOVES, 0.0, |_| Proposal::Move(1.5 * h));
        if best_e < e {
            out.history.push(best_e);
        }
        accepted += acc;
        field = f;
    }
    Ok(RestartResult { field, history: out.history, iterations: out.iterations, converged: out.converged, accepted })
}

fn run_from(mut field: QField, opts: &SolveOptions, rng: &mut ChaCha8Rng) -> RestartResult {
    let out = relax(&mut field, opts, opts.max_outer_iters);
    let mut history = out.history;
    let mut accepted = 0;
    if opts.annealing && field.q() > 1 {
        let e = *history.last().expect("history is nonempty");
        let h = field.mesh().max_edge_length();
        let (best, best_e, acc) = anneal(field, e, opts, rng, opts.anneal_steps, ANNEAL_T0, |rng| mixed(rng, h));
        field = best;
        accepted = acc;
        if best_e < e {
            history.push(best_e);
        }
    }
    RestartResult { field, history, iterations: out.iterations, converged: out.converged, accepted }
}

fn check_boundary(mesh: &DiskMesh, boundary: &[QValue]) -> Result<()> {
    if boundary.len() != mesh.boundary_loop().len() {
        return Err(Error::Invalid(format!(
            "{} boundary values for a loop of {}",
            boundary.len(),
            mesh.boundary_loop().len()
        )));
    }
    let (q, n) = (boundary[0].q(), boundary[0].n());
    for v in boundary {
        if v.q() != q {
            return Err(Error::MultiplicityMismatch { left: q, right: v.q() });
        }
        if v.n() != n {
            return Err(Error::DimensionMismatch { left: n, right: v.n() });
        }
    }
    Ok(())
}

/// Dirichlet minimizer for boundary values given in boundary-loop order.
/// The best restart wins; ties go to the lowest restart index.
pub fn solve_dirichlet(
    mesh: Arc<DiskMesh>,
    boundary: &[QValue],
    opts: &SolveOptions,
) -> Result<(QField, SolveReport)> {
    opts.validate()?;
    check_boundary(&mesh, boundary)?;
    let multilevel =
        opts.annealing && boundary[0].q() > 1 && mesh.level() > COARSE_LEVEL && is_ring_mesh(&mesh);
    let results: Vec<RestartResult> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(opts.seed, r);
            if multilevel {
                return run_multilevel(&mesh, boundary, r, opts, &mut rng);
            }
            let init = initial_values(&mesh, boundary, r, opts.init_noise, &mut rng);
            let field = QField::new(mesh.clone(), init).expect("boundary shapes checked");
            Ok(run_from(field, opts, &mut rng))
        })
        .collect::<Result<_>>()?;
    Ok(pick_best(results, opts.seed))
}

/// Continue minimizing from an existing field (boundary values are those
/// already stored on the boundary loop).
pub fn solve_from(field: QField, opts: &SolveOptions) -> Result<(QField, SolveReport)> {
    opts.validate()?;
    let mut rng = restart_rng(opts.seed, 0);
    let mut field = field;
    field.unfreeze_all();
    Ok(pick_best(vec![run_from(field, opts, &mut rng)], opts.seed))
}

fn pick_best(results: Vec<RestartResult>, seed: u64) -> (QField, SolveReport) {
    let energies: Vec<f64> = results
        .iter()
        .map(|r| *r.history.last().expect("history is nonempty"))
        .collect();
    let mut best = 0;
    for (i, &e) in energies.iter().enumerate() {
        if e < energies[best] {
            best = i;
        }
    }
    let r = results.into_iter().nth(best).expect("at least one restart");
    let report = SolveReport {
        final_energy: energies[best],
        iterations: r.iterations,
        restart_index: best,
        converged: r.converged,
        energy_history: r.history,
        restart_energies: energies,
        annealing_accepted: r.accepted,
        seed,
    };
    (r.field, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub center: [f64; 2],
    pub radius: f64,
    pub ball_energy: f64,
    pub bound: f64,
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub entries: Vec<DecayEntry>,
    pub max_ratio: f64,
    pub slack: f64,
}

pub const DECAY_SLACK: f64 = 0.05;

/// Compare the energy in small balls against `r^{2/Q}` times the total.
pub fn check_energy_decay(field: &QField, centers: &[[f64; 2]], radii: &[f64]) -> Result<DecayReport> {
    let mesh = field.mesh();
    let per = field.triangle_energies();
    let total: f64 = per.iter().sum();
    let mut entries = Vec::new();
    for &c in centers {
        for &r in radii {
            if !(r > 0.0 && r < 1.0 - c[0].hypot(c[1])) {
                return Err(Error::Invalid(format!("ball of radius {r} at {c:?} leaves the disk")));
            }
            let mut ball = 0.0;
            for (t, tri) in mesh.triangles().iter().enumerate() {
                if per[t] == 0.0 {
                    continue;
                }
                let g = mesh.geometry(t);
                let pts = tri.map(|v| mesh.vertex(v));
                let inside = disk_triangle_area(c, r, pts);
                ball += per[t] * inside / g.area;
            }
            let bound = r.powf(2.0 / field.q() as f64) * total;
            let ratio = if ball == 0.0 { 0.0 } else { ball / bound };
            entries.push(DecayEntry {
                center: c,
                radius: r,
                ball_energy: ball,
                bound,
                ratio,
                flagged: ratio > 1.0 + DECAY_SLACK,
            });
        }
    }
    let max_ratio = entries.iter().map(|e| e.ratio).fold(0.0, f64::max);
    Ok(DecayReport { entries, max_ratio, slack: DECAY_SLACK })
}

/// Area of the intersection of the disk `B_r(c)` with a counterclockwise triangle.
pub fn disk_triangle_area(c: [f64; 2], r: f64, tri: [[f64; 2]; 3]) -> f64 {
    let p = tri.map(|v| [v[0] - c[0], v[1] - c[1]]);
    let mut area = 0.0;
    for k in 0..3 {
        area += origin_wedge_area(p[k], p[(k + 1) % 3], r);
    }
    area
}

/// Signed area of `B_r(0)` intersected with the triangle `(0, a, b)`.
fn origin_wedge_area(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let cross = |u: [f64; 2], v: [f64; 2]| u[0] * v[1] - u[1] * v[0];
    let dotp = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    let sector = |u: [f64; 2], v: [f64; 2]| 0.5 * r * r * cross(u, v).atan2(dotp(u, v));
    let r2 = r * r;
    if dotp(a, a) <= r2 && dotp(b, b) <= r2 {
        return 0.5 * cross(a, b);
    }
    let d = [b[0] - a[0], b[1] - a[1]];
    let qa = dotp(d, d);
    if qa == 0.0 {
        return 0.0;
    }
    let qb = dotp(a, d);
    let qc = dotp(a, a) - r2;
    let disc = qb * qb - qa * qc;
    if disc <= 0.0 {
        return sector(a, b);
    }
    let s = disc.sqrt();
    let t1 = (-qb - s) / qa;
    let t2 = (-qb + s) / qa;
    if t2 <= 0.0 || t1 >= 1.0 {
        return sector(a, b);
    }
    let (u1, u2) = (t1.max(0.0), t2.min(1.0));
    let p1 = [a[0] + u1 * d[0], a[1] + u1 * d[1]];
    let p2 = [a[0] + u2 * d[0], a[1] + u2 * d[1]];
    let mut area = 0.5 * cross(p1, p2);
    if t1 > 0.0 {
        area += sector(a, p1);
    }
    if t2 < 1.0 {
        area += sector(p2, b);
    }
    area
}

/// Largest sampled ratio `G(F(x), F(y)) / |x − y|^{1/Q}` over pairs in the
/// disk of radius `inner_radius` closer than `(1 − inner_radius)/2`.
pub fn check_holder_modulus(field: &QField, inner_radius: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(inner_radius > 0.0 && inner_radius < 1.0) {
        return Err(Error::Invalid(format!("inner radius {inner_radius} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_gap = 0.5 * (1.0 - inner_radius);
    let exponent = 1.0 / field.q() as f64;
    let mut pairs = Vec::with_capacity(samples);
    while pairs.len() < samples {
        let r = inner_radius * rng.gen::<f64>().sqrt();
        let t = 2.0 * PI * rng.gen::<f64>();
        let x = [r * t.cos(), r * t.sin()];
        let d = max_gap * rng.gen::<f64>();
        let phi = 2.0 * PI * rng.gen::<f64>();
        let y = [x[0] + d * phi.cos(), x[1] + d * phi.sin()];
        if d > 0.0 && y[0].hypot(y[1]) <= inner_radius {
            pairs.push((x, y, d));
        }
    }
    let ratios = pairs
        .par_iter()
        .map(|&(x, y, d)| -> Result<f64> {
            let g = metric_g(&field.evaluate(x)?, &field.evaluate(y)?)?;
            Ok(g / d.powf(exponent))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_disk_mesh;
    use num_complex::Complex64;

    fn mesh(level: u32) -> Arc<DiskMesh> {
        Arc::new(build_disk_mesh(level).unwrap())
    }

    fn boundary_of(mesh: &DiskMesh, f: impl Fn([f64; 2]) -> QValue) -> Vec<QValue> {
        mesh.boundary_loop().iter().map(|&v| f(mesh.vertex(v))).collect()
    }

    #[test]
    fn wedge_area_matches_full_and_empty_cases() {
        let tri = [[-0.1, -0.1], [0.1, -0.1], [0.0, 0.1]];
        assert!((disk_triangle_area([0.0, 0.0], 1.0, tri) - 0.02).abs() < 1e-15);
        assert!(disk_triangle_area([5.0, 5.0], 1.0, tri).abs() < 1e-15);
        let big = [[-10.0, -10.0], [10.0, -10.0], [0.0, 10.0]];
        assert!((disk_triangle_area([0.0, 0.0], 1.0, big) - PI).abs() < 1e-12);
        // Half disk cut by a chord through the center.
        let half = [[-5.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
        assert!((disk_triangle_area([0.0, 0.0], 1.0, half) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_real_part_gives_pi() {
        let m = mesh(4);
        let b = boundary_of(&m, |p| QValue::new(1, 1, vec![p[0]]).unwrap());
        let (f, rep) = solve_dirichlet(m, &b, &SolveOptions { restarts: 1, ..Default::default() }).unwrap();
        assert!(rep.converged);
        assert!((rep.final_energy - PI).abs() / PI < 0.01);
        for (v, p) in f.mesh().vertices().iter().enumerate() {
            assert!((f.value(v).point(0)[0] - p[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn separated_constants_are_reproduced() {
        let m = mesh(3);
        let c = QValue::from_points(&[[0.0, 0.0], [5.0, 1.0]]).unwrap();
        let b = vec![c.clone(); m.boundary_loop().len()];
        let (f, rep) = solve_dirichlet(m, &b, &SolveOptions::default()).unwrap();
        assert!(rep.final_energy < 1e-20, "{}", rep.final_energy);
        for v in f.values() {
            assert!(metric_g(v, &c).unwrap() < 1e-9);
        }
    }

    #[test]
    fn history_never_increases_and_is_deterministic() {
        let m = mesh(3);
        let b = boundary_of(&m, |p| {
            let w = Complex64::new(p[0], p[1]).sqrt();
            QValue::from_points(&[[w.re, w.im], [-w.re, -w.im]]).unwrap()
        });
        let opts = SolveOptions { restarts: 3, seed: 11, ..Default::default() };
        let (_, r1) = solve_dirichlet(m.clone(), &b, &opts).unwrap();
        let (_, r2) = solve_dirichlet(m, &b, &opts).unwrap();
        assert_eq!(r1, r2);
        for w in r1.energy_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn decay_of_linear_map_at_origin_is_area_ratio() {
        let m = mesh(4);
        let f = QField::from_fn(m.clone(), |p| QValue::new(1, 1, vec![p[0]]).unwrap()).unwrap();
        let rep = check_energy_decay(&f, &[[0.0, 0.0]], &[0.5]).unwrap();
        let expect = PI / m.area();
        assert!((rep.entries[0].ratio - expect).abs() < 1e-12);
        assert!(check_energy_decay(&f, &[[0.6, 0.0]], &[0.5]).is_err());
        let c = QField::constant(m, &QValue::repeated(2, &[1.0])).unwrap();
        assert_eq!(check_energy_decay(&c, &[[0.0, 0.0]], &[0.5]).unwrap().max_ratio, 0.0);
    }

    #[test]
    fn holder_modulus_of_linear_and_constant_fields() {
        let m = mesh(3);
        let f = QField::from_fn(m.clone(), |p| QValue::new(1, 1, vec![p[0]]).unwrap()).unwrap();
        let c = check_holder_modulus(&f, 0.5, 200, 3).unwrap();
        assert!(c > 0.0 && c <= 1.0 + 1e-12);
        let k = QField::constant(m, &QValue::repeated(2, &[1.0])).unwrap();
        assert_eq!(check_holder_modulus(&k, 0.5, 50, 3).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_options_and_boundary() {
        let m = mesh(1);
        let b = vec![QValue::repeated(1, &[0.0]); 3];
        assert!(solve_dirichlet(m.clone(), &b, &SolveOptions::default()).is_err());
        let opts = SolveOptions { energy_tol: 0.5, ..Default::default() };
        let b = vec![QValue::repeated(1, &[0.0]); m.boundary_loop().len()];
        assert!(solve_dirichlet(m, &b, &opts).is_err());
    }
}
