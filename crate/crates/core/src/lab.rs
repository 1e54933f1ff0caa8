//! Analytic generators for the two-sheeted variety `w² = z² − c`, its
//! explicit boundary selections, graph-mass relations and the shifted
//! degenerate example.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aq::{metric_g, QValue};
use crate::error::{Error, Result};
use crate::field::QField;
use crate::mesh::DiskMesh;
use crate::solver::{harmonic_extension, solve_dirichlet, SolveOptions};

/// The relation `w² = z² − c` over the disk of the given radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarietySpec {
    pub degree: usize,
    pub c: f64,
    pub radius: f64,
}

impl Default for VarietySpec {
    fn default() -> Self {
        Self { degree: 2, c: 0.25, radius: 1.0 }
    }
}

impl VarietySpec {
    pub fn new(c: f64) -> Result<Self> {
        let s = Self { c, ..Self::default() };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree != 2 {
            return Err(Error::Invalid("only the quadratic relation is supported".into()));
        }
        if self.c == 0.0 {
            return Err(Error::Invalid("c = 0 makes w² − z² reducible".into()));
        }
        if !(self.c.abs().sqrt() < self.radius) {
            return Err(Error::Invalid(format!("branch points ±√{} leave the domain", self.c)));
        }
        Ok(())
    }

    /// Branch points `±√c`.
    pub fn branch_points(&self) -> [[f64; 2]; 2] {
        let r = Complex64::new(self.c, 0.0).sqrt();
        [[r.re, r.im], [-r.re, -r.im]]
    }

    /// The two roots at `z`, principal square root first.
    pub fn roots(&self, z: Complex64) -> [Complex64; 2] {
        let w = (z * z - self.c).sqrt();
        [w, -w]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarietyTarget {
    /// Values `w` in `R²`.
    Plane,
    /// Graph points `(z, w)` in `R⁴`.
    Graph,
}

fn c2(w: Complex64) -> [f64; 2] {
    [w.re, w.im]
}

pub fn variety_value(spec: &VarietySpec, z: Complex64, target: VarietyTarget) -> QValue {
    let [a, b] = spec.roots(z);
    let pts: Vec<Vec<f64>> = match target {
        VarietyTarget::Plane => vec![c2(a).to_vec(), c2(b).to_vec()],
        VarietyTarget::Graph => vec![vec![z.re, z.im, a.re, a.im], vec![z.re, z.im, b.re, b.im]],
    };
    QValue::from_points(&pts).expect("two points of equal dimension")
}

/// Root multiset at every vertex; sheets are tied by matchings only.
pub fn sample_variety(spec: &VarietySpec, mesh: Arc<DiskMesh>, target: VarietyTarget) -> Result<QField> {
    spec.validate()?;
    QField::from_fn(mesh, |p| variety_value(spec, Complex64::new(p[0], p[1]), target))
}

/// Third components of the explicit boundary selection, in the closed form
/// with modulus `(1 + 1/16 − cos 2θ / 2)^{1/4}` and half the `atan2` phase.
pub fn boundary_selection_formulas(theta: f64) -> [Complex64; 2] {
    let modulus = (1.0 + 1.0 / 16.0 - (2.0 * theta).cos() / 2.0).powf(0.25);
    let phase = (2.0 * theta).sin().atan2((2.0 * theta).cos() - 0.25) / 2.0;
    let f1 = Complex64::from_polar(modulus, phase);
    let f2 = Complex64::from_polar(modulus, phase + PI);
    [f1, f2]
}

/// The glued continuous selection: the first formula on `(−π/2, π/2]`,
/// the second on `(π/2, 3π/2]`, and the reverse for the other sheet.
pub fn glued_boundary_selection(theta: f64) -> [Complex64; 2] {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > 1.5 * PI {
        t -= 2.0 * PI;
    }
    let [f1, f2] = boundary_selection_formulas(t);
    if t <= 0.5 * PI {
        [f1, f2]
    } else {
        [f2, f1]
    }
}

/// Boundary curve `θ ↦ (e^{iθ}, g_i(θ))` in `R⁴`, sampled at `m` angles.
pub fn variety_boundary_curve(sheet: usize, m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            let g = glued_boundary_selection(t)[sheet];
            vec![t.cos(), t.sin(), g.re, g.im]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub grid: usize,
    /// Angles where the real parts agree.
    pub re_equal: Vec<f64>,
    /// Angles where the imaginary parts agree.
    pub im_equal: Vec<f64>,
    /// Angles where a difference flips sign through a jump of the formulas
    /// rather than through zero.
    pub re_jumps: Vec<f64>,
    pub im_jumps: Vec<f64>,
}

const ZERO_TOL: f64 = 1e-9;
const JUMP_TOL: f64 = 0.05;

fn scan_difference(grid: usize, diff: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let angles: Vec<f64> = (0..grid).map(|j| 2.0 * PI * j as f64 / grid as f64).collect();
    let d: Vec<f64> = angles.iter().map(|&t| diff(t)).collect();
    let mut equal = Vec::new();
    let mut jumps = Vec::new();
    for j in 0..grid {
        if d[j].abs() < ZERO_TOL {
            equal.push(angles[j]);
        }
    }
    for j in 0..grid {
        let k = (j + 1) % grid;
        if d[j].abs() >= ZERO_TOL && d[k].abs() >= ZERO_TOL && d[j].signum() != d[k].signum() {
            let mid = if k == 0 { angles[j] + PI / grid as f64 } else { 0.5 * (angles[j] + angles[k]) };
            if (d[j] - d[k]).abs() < JUMP_TOL {
                equal.push(mid);
            } else {
                jumps.push(mid);
            }
        }
    }
    equal.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    (equal, jumps)
}

/// Where the real and imaginary parts of the two explicit selections agree
/// on a uniform grid over `[0, 2π)`.
pub fn crossing_scan(grid: usize) -> CrossingReport {
    let (re_equal, re_jumps) = scan_difference(grid, |t| {
        let [a, b] = boundary_selection_formulas(t);
        a.re - b.re
    });
    let (im_equal, im_jumps) = scan_difference(grid, |t| {
        let [a, b] = boundary_selection_formulas(t);
        a.im - b.im
    });
    CrossingReport { grid, re_equal, im_equal, re_jumps, im_jumps }
}

/// Largest jump of the glued selection across `angle` at offset `eps`.
pub fn glued_jump(angle: f64, eps: f64) -> f64 {
    let lo = glued_boundary_selection(angle - eps);
    let hi = glued_boundary_selection(angle + eps);
    (lo[0] - hi[0]).norm().max((lo[1] - hi[1]).norm())
}

/// CSV of the real and imaginary parts of both explicit selections.
pub fn selection_csv(samples: usize) -> String {
    let mut s = String::from("theta,re_f1,im_f1,re_f2,im_f2\n");
    for j in 0..samples {
        let t = 2.0 * PI * j as f64 / samples as f64;
        let [a, b] = boundary_selection_formulas(t);
        let _ = writeln!(s, "{t:.9},{:.12},{:.12},{:.12},{:.12}", a.re, a.im, b.re, b.im);
    }
    s
}

/// Line plot of two curves over `[0, 2π)` as a standalone SVG document.
pub fn selection_svg(samples: usize, imaginary: bool) -> String {
    let (w, h, pad) = (640.0, 320.0, 40.0);
    let sx = |t: f64| pad + (w - 2.0 * pad) * t / (2.0 * PI);
    let sy = |v: f64| h / 2.0 - (h / 2.0 - pad) * v / 1.5;
    let mut paths = [String::new(), String::new()];
    for j in 0..=samples {
        let t = 2.0 * PI * j as f64 / samples as f64;
        let pair = boundary_selection_formulas(t);
        for (k, path) in paths.iter_mut().enumerate() {
            let v = if imaginary { pair[k].im } else { pair[k].re };
            let cmd = if j == 0 { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2},{:.2} ", sx(t), sy(v));
        }
    }
    let label = if imaginary { "Im" } else { "Re" };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray"/>"#,
        sy(0.0),
        w - pad,
        sy(0.0)
    );
    for (k, color) in ["steelblue", "firebrick"].iter().enumerate() {
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, paths[k].trim_end());
    }
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="20" font-family="sans-serif" font-size="14">{label} of sheet 1 (blue) and sheet 2 (red), theta in [0, 2pi)</text>"#
    );
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassAsymptotics {
    pub lambdas: Vec<f64>,
    /// `(graph_mass(λ) − Q|Ω|)/λ²` for each λ.
    pub ratios: Vec<f64>,
    pub extrapolated: f64,
    pub half_energy: f64,
    pub relative_error: f64,
}

/// Rescaled excess graph mass for decreasing `λ` (each half the previous)
/// and its Richardson extrapolation from the two smallest.
pub fn mass_asymptotics(field: &QField, lambdas: &[f64]) -> Result<MassAsymptotics> {
    if lambdas.len() < 2 || lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Invalid("need at least two positive lambdas".into()));
    }
    let base = field.q() as f64 * field.mesh().area();
    let ratios: Vec<f64> = lambdas.iter().map(|&l| (field.graph_mass(l) - base) / (l * l)).collect();
    let k = ratios.len();
    let extrapolated = (4.0 * ratios[k - 1] - ratios[k - 2]) / 3.0;
    let half_energy = field.dirichlet_energy() / 2.0;
    let relative_error = if half_energy > 0.0 { (extrapolated - half_energy).abs() / half_energy } else { extrapolated.abs() };
    Ok(MassAsymptotics { lambdas: lambdas.to_vec(), ratios, extrapolated, half_energy, relative_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Every sheet has a full-rank differential on every triangle.
    pub locally_injective: bool,
}

/// Image area plus domain area against the unit-scale graph mass.
pub fn lemma_mass_check(field: &QField, slack: f64) -> MassCheck {
    let lhs = field.mv_area() + field.mesh().area();
    let rhs = field.graph_mass(1.0);
    let locally_injective = (0..field.mesh().num_triangles()).all(|t| {
        field.sheet_selection(t).sheets.iter().all(|s| {
            let (e, f, g) = s.first_fundamental_form();
            e * g - f * f > 0.0
        })
    });
    MassCheck { lhs, rhs, holds: lhs <= rhs + slack, locally_injective }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub energy_base: f64,
    pub energy_shift: f64,
    pub energy_shifted: f64,
    /// `|Dir(F + f) − Dir(F) − 2 Dir(f)| / Dir(F + f)`.
    pub identity_relative_error: f64,
    /// Largest `G` distance between the boundary values and `{2 g₁, 0}`.
    pub trace_error: f64,
    pub witness_vertex: Option<usize>,
    pub witness_position: Option<[f64; 2]>,
    /// Distance from the origin to the support at the witness.
    pub witness_distance: f64,
    pub vertices_off_origin: usize,
}

pub const WITNESS_DISTANCE: f64 = 0.01;

fn single_valued_energy(mesh: Arc<DiskMesh>, values: &[Vec<f64>]) -> Result<f64> {
    let vals = values
        .iter()
        .map(|x| QValue::new(1, x.len(), x.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(QField::new(mesh, vals)?.dirichlet_energy())
}

/// The shifted variety `F + f`, with `f` the harmonic extension of the
/// glued boundary sheet, and its checks.
pub fn build_degenerate_example(mesh: Arc<DiskMesh>) -> Result<(QField, DegeneracyReport)> {
    let spec = VarietySpec::default();
    let base = sample_variety(&spec, mesh.clone(), VarietyTarget::Plane)?;
    let g1: Vec<Vec<f64>> = mesh
        .boundary_loop()
        .iter()
        .map(|&v| {
            let p = mesh.vertex(v);
            c2(glued_boundary_selection(p[1].atan2(p[0]))[0]).to_vec()
        })
        .collect();
    let shift = harmonic_extension(mesh.clone(), &g1)?;
    let shifted = base.shift_field(&shift)?;

    let energy_base = base.dirichlet_energy();
    let energy_shift = single_valued_energy(mesh.clone(), &shift)?;
    let energy_shifted = shifted.dirichlet_energy();
    let identity_relative_error = (energy_shifted - energy_base - 2.0 * energy_shift).abs() / energy_shifted;

    let mut trace_error = 0.0f64;
    for (w, &v) in mesh.boundary_loop().iter().enumerate() {
        let expect = QValue::from_points(&[[2.0 * g1[w][0], 2.0 * g1[w][1]], [0.0, 0.0]])?;
        trace_error = trace_error.max(metric_g(shifted.value(v), &expect)?);
    }

    let mut witness: Option<(usize, f64)> = None;
    let mut off = 0;
    for v in mesh.interior_vertices() {
        let d = shifted
            .value(v)
            .points()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        if d > WITNESS_DISTANCE {
            off += 1;
            if witness.map_or(true, |(_, best)| d > best) {
                witness = Some((v, d));
            }
        }
    }
    let report = DegeneracyReport {
        energy_base,
        energy_shift,
        energy_shifted,
        identity_relative_error,
        trace_error,
        witness_vertex: witness.map(|w| w.0),
        witness_position: witness.map(|w| mesh.vertex(w.0)),
        witness_distance: witness.map_or(0.0, |w| w.1),
        vertices_off_origin: off,
    };
    Ok((shifted, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfShiftReport {
    pub energy_minimizer: f64,
    pub energy_half: f64,
    pub energy_result: f64,
    /// `|Dir(G − h/2) − Dir(G) + 2 Dir(h/2)| / Dir(G)`.
    pub identity_relative_error: f64,
    /// Largest `|Σ points|` over vertices of `G − h/2`.
    pub max_vertex_sum: f64,
}

/// Solve with trace `{2 g₁, 0}` and subtract half the harmonic extension of
/// the trace sum.
pub fn half_shift_check(mesh: Arc<DiskMesh>, opts: &SolveOptions) -> Result<(QField, HalfShiftReport)> {
    let g1: Vec<[f64; 2]> = mesh
        .boundary_loop()
        .iter()
        .map(|&v| {
            let p = mesh.vertex(v);
            c2(glued_boundary_selection(p[1].atan2(p[0]))[0])
        })
        .collect();
    let boundary = g1
        .iter()
        .map(|g| QValue::from_points(&[[2.0 * g[0], 2.0 * g[1]], [0.0, 0.0]]))
        .collect::<Result<Vec<_>>>()?;
    let (minimizer, _) = solve_dirichlet(mesh.clone(), &boundary, opts)?;
    let trace_sum: Vec<Vec<f64>> = g1.iter().map(|g| vec![2.0 * g[0], 2.0 * g[1]]).collect();
    let h = harmonic_extension(mesh.clone(), &trace_sum)?;
    let minus_half: Vec<Vec<f64>> = h.iter().map(|x| x.iter().map(|c| -0.5 * c).collect()).collect();
    let result = minimizer.shift_field(&minus_half)?;
    let energy_minimizer = minimizer.dirichlet_energy();
    let energy_half = single_valued_energy(mesh, &minus_half)?;
    let energy_result = result.dirichlet_energy();
    let identity_relative_error = (energy_result - energy_minimizer + 2.0 * energy_half).abs() / energy_minimizer;
    let max_vertex_sum = result
        .values()
        .iter()
        .map(|v| v.sum().iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok((result, HalfShiftReport { energy_minimizer, energy_half, energy_result, identity_relative_error, max_vertex_sum }))
}

/// Named boundary data evaluated at a point of the unit circle.
pub fn builtin_value(name: &str, p: [f64; 2]) -> Result<QValue> {
    let z = Complex64::new(p[0], p[1]);
    Ok(match name {
        "sqrt-z" => {
            let w = z.sqrt();
            QValue::from_points(&[c2(w), c2(-w)])?
        }
        "re-z" => QValue::new(1, 1, vec![p[0]])?,
        "identity" => QValue::new(1, 2, p.to_vec())?,
        "two-constants" => QValue::from_points(&[[0.0, 0.0], [2.0, 0.0]])?,
        "variety" => variety_value(&VarietySpec::default(), z, VarietyTarget::Plane),
        other => return Err(Error::Invalid(format!("unknown builtin boundary `{other}`"))),
    })
}

/// Named boundary data in boundary-loop order.
pub fn builtin_boundary(name: &str, mesh: &DiskMesh) -> Result<Vec<QValue>> {
    mesh.boundary_loop().iter().map(|&v| builtin_value(name, mesh.vertex(v))).collect()
}

/// Smallest distance between the two glued boundary curves in `R⁴`.
pub fn glued_curve_distance(grid: usize) -> f64 {
    let a = variety_boundary_curve(0, grid);
    let b = variety_boundary_curve(1, grid);
    let mut best = f64::INFINITY;
    for p in &a {
        for q in &b {
            let d: f64 = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.min(d);
        }
    }
    best.sqrt()
}

pub const BUILTIN_BOUNDARIES: [&str; 5] = ["sqrt-z", "re-z", "identity", "two-constants", "variety"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_disk_mesh;

    #[test]
    fn formula_examples() {
        let [f1, f2] = boundary_selection_formulas(0.0);
        assert!((f1 - Complex64::new(3f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
        assert!((f2 + f1).norm() < 1e-15);
        let [g1, _] = boundary_selection_formulas(PI / 2.0);
        assert!((g1 - Complex64::new(0.0, 5f64.sqrt() / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn formula_modulus_matches_root_modulus() {
        for j in 0..100 {
            let t = 2.0 * PI * j as f64 / 100.0;
            let direct = (Complex64::from_polar(1.0, 2.0 * t) - 0.25).norm();
            let printed = 1.0 + 1.0 / 16.0 - (2.0 * t).cos() / 2.0;
            assert!((direct * direct - printed).abs() < 1e-14);
        }
    }

    #[test]
    fn selections_are_the_roots() {
        let spec = VarietySpec::default();
        for j in 0..360 {
            let t = 2.0 * PI * j as f64 / 360.0;
            let roots = spec.roots(Complex64::from_polar(1.0, t));
            let f = boundary_selection_formulas(t);
            let g = glued_boundary_selection(t);
            let as_q = |p: [Complex64; 2]| QValue::from_points(&[c2(p[0]), c2(p[1])]).unwrap();
            assert!(metric_g(&as_q(roots), &as_q(f)).unwrap() < 1e-12);
            assert!(metric_g(&as_q(roots), &as_q(g)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn glued_selection_is_continuous() {
        for a in [PI / 2.0, 1.5 * PI, -PI / 2.0] {
            assert!(glued_jump(a, 1e-12) < 1e-9, "jump at {a}");
        }
        let [g, _] = glued_boundary_selection(0.0);
        assert_eq!(g, boundary_selection_formulas(0.0)[0]);
        // g₁ is the branch e^{iθ}·√(1 − e^{−2iθ}/4), continuous on the circle.
        for j in 0..1000 {
            let t = 2.0 * PI * j as f64 / 1000.0;
            let e = Complex64::from_polar(1.0, t);
            let expect = e * (1.0 - e.conj() * e.conj() / 4.0).sqrt();
            assert!((glued_boundary_selection(t)[0] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn crossing_conditions() {
        let r = crossing_scan(10_000);
        let close = |xs: &[f64], want: &[f64]| {
            xs.len() == want.len() && xs.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-3)
        };
        assert!(close(&r.re_equal, &[PI / 2.0, 1.5 * PI]), "{:?}", r.re_equal);
        assert!(close(&r.im_equal, &[0.0, PI]), "{:?}", r.im_equal);
        assert!(r.re_jumps.is_empty());
    }

    #[test]
    fn variety_spec_guards() {
        assert!(VarietySpec::new(0.0).is_err());
        assert!(VarietySpec::new(1.5).is_err());
        assert!(VarietySpec::new(-0.2).is_ok());
        let s = VarietySpec::default();
        let one = variety_value(&s, Complex64::new(1.0, 0.0), VarietyTarget::Plane);
        let want = QValue::from_points(&[[3f64.sqrt() / 2.0, 0.0], [-(3f64.sqrt()) / 2.0, 0.0]]).unwrap();
        assert!(metric_g(&one, &want).unwrap() < 1e-15);
        let half = variety_value(&s, Complex64::new(0.5, 0.0), VarietyTarget::Plane);
        assert_eq!(half, QValue::repeated(2, &[0.0, 0.0]));
        assert_eq!(variety_value(&s, Complex64::new(0.3, 0.1), VarietyTarget::Graph).n(), 4);
    }

    #[test]
    fn sampled_boundary_matches_formulas() {
        let m = Arc::new(build_disk_mesh(3).unwrap());
        let f = sample_variety(&VarietySpec::default(), m.clone(), VarietyTarget::Plane).unwrap();
        for &v in m.boundary_loop() {
            let p = m.vertex(v);
            let pair = boundary_selection_formulas(p[1].atan2(p[0]).rem_euclid(2.0 * PI));
            let q = QValue::from_points(&[c2(pair[0]), c2(pair[1])]).unwrap();
            assert!(metric_g(f.value(v), &q).unwrap() < 1e-9);
        }
    }

    #[test]
    fn constant_field_mass() {
        let m = Arc::new(build_disk_mesh(3).unwrap());
        let f = QField::constant(m.clone(), &QValue::repeated(2, &[1.0, 0.0])).unwrap();
        assert!((f.graph_mass(0.7) - 2.0 * m.area()).abs() < 1e-12);
        let chk = lemma_mass_check(&f, 1e-9);
        assert!(chk.holds);
        assert!((chk.lhs - m.area()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_example_small_mesh() {
        let m = Arc::new(build_disk_mesh(3).unwrap());
        let (_, r) = build_degenerate_example(m).unwrap();
        assert!(r.identity_relative_error < 1e-10);
        assert!(r.trace_error < 1e-9);
        assert!(r.witness_distance > WITNESS_DISTANCE);
    }

    #[test]
    fn glued_curves_are_disjoint() {
        // The sheets never meet on the circle: |g₁|² = |e^{2iθ} − 1/4| ≥ 3/4.
        let d = glued_curve_distance(720);
        assert!(d > 0.5, "{d}");
    }

    #[test]
    fn svg_and_csv_shapes() {
        let csv = selection_csv(8);
        assert_eq!(csv.lines().count(), 9);
        let svg = selection_svg(16, true);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
