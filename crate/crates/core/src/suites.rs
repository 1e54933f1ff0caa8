//! Named verification suites. Each returns a list of checks with the
//! measured value and its threshold, plus any data files it produced.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{decompose_graph, detect_branches, oscillation_check, OscillationReport};
use crate::aq::{metric_g, QValue};
use crate::error::{Error, Result};
use crate::field::QField;
use crate::lab::*;
use crate::mesh::{build_disk_mesh, DiskMesh, Mobius};
use crate::solver::{check_energy_decay, solve_dirichlet, DecayReport, SolveOptions};

pub const SUITES: [&str; 5] = ["sqrt-variety", "degeneracy", "mass-formula", "metric-oracle", "conformal-invariance"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="`, `">="`, `"<"`, `">"` or `"=="`.
    pub relation: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: "<=".into(), passed: value <= threshold }
    }

    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: "<".into(), passed: value < threshold }
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: ">".into(), passed: value > threshold }
    }

    pub fn equals(name: &str, value: f64, expected: f64) -> Self {
        Self { name: name.into(), value, threshold: expected, relation: "==".into(), passed: value == expected }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self::equals(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    #[serde(skip)]
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub level: u32,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

impl SuiteReport {
    fn new(suite: &str, level: u32, seed: u64) -> Self {
        Self { suite: suite.into(), level, seed, passed: true, checks: vec![], notes: vec![], artifacts: vec![] }
    }

    fn push(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }
}

/// Level used when none is given on the command line.
pub fn default_level(suite: &str) -> u32 {
    match suite {
        "mass-formula" | "conformal-invariance" => 5,
        _ => 4,
    }
}

pub fn run_suite(name: &str, level: u32, seed: u64) -> Result<SuiteReport> {
    match name {
        "sqrt-variety" => sqrt_variety(level, seed),
        "degeneracy" => degeneracy(level, seed),
        "mass-formula" => mass_formula(level, seed),
        "metric-oracle" => metric_oracle(seed, 500),
        "conformal-invariance" => conformal_invariance(level, seed, 0.3),
        other => Err(Error::Invalid(format!("unknown suite `{other}`; expected one of {SUITES:?}"))),
    }
}

fn mesh(level: u32) -> Result<Arc<DiskMesh>> {
    Ok(Arc::new(build_disk_mesh(level)?))
}

fn pair(p: [Complex64; 2]) -> QValue {
    QValue::from_points(&[[p[0].re, p[0].im], [p[1].re, p[1].im]]).expect("two planar points")
}

pub fn sqrt_variety(level: u32, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("sqrt-variety", level, seed);
    let spec = VarietySpec::default();

    let mut modulus_err = 0.0f64;
    let mut roots_err = 0.0f64;
    for j in 0..1000 {
        let t = 2.0 * PI * j as f64 / 1000.0;
        let direct = (Complex64::from_polar(1.0, 2.0 * t) - 0.25).norm();
        modulus_err = modulus_err.max((direct * direct - (1.0 + 1.0 / 16.0 - (2.0 * t).cos() / 2.0)).abs());
        let roots = pair(spec.roots(Complex64::from_polar(1.0, t)));
        roots_err = roots_err.max(metric_g(&roots, &pair(boundary_selection_formulas(t)))?);
        roots_err = roots_err.max(metric_g(&roots, &pair(glued_boundary_selection(t)))?);
    }
    rep.push(Check::at_most("modulus_transcription", modulus_err, 1e-12));
    rep.push(Check::at_most("selections_are_roots", roots_err, 1e-12));

    let [f1, _] = boundary_selection_formulas(0.0);
    rep.push(Check::at_most("f1_at_0", (f1 - Complex64::new(3f64.sqrt() / 2.0, 0.0)).norm(), 1e-15));
    let [f1, _] = boundary_selection_formulas(PI / 2.0);
    rep.push(Check::at_most("f1_at_half_pi", (f1 - Complex64::new(0.0, 5f64.sqrt() / 2.0)).norm(), 1e-15));

    let jump = [PI / 2.0, 1.5 * PI].iter().map(|&a| glued_jump(a, 1e-12)).fold(0.0, f64::max);
    rep.push(Check::below("glued_jump", jump, 1e-9));
    rep.push(Check::above("glued_curve_distance", glued_curve_distance(2000), 0.0));

    let scan = crossing_scan(10_000);
    let matches = |xs: &[f64], want: &[f64]| {
        xs.len() == want.len() && xs.iter().zip(want).all(|(a, b)| (a - b).abs() < 2.0 * PI / 10_000.0)
    };
    rep.push(Check::flag("re_equal_at_pm_half_pi", matches(&scan.re_equal, &[PI / 2.0, 1.5 * PI])));
    rep.push(Check::flag("im_equal_at_0_pi", matches(&scan.im_equal, &[0.0, PI])));
    rep.push(Check::equals("re_jumps", scan.re_jumps.len() as f64, 0.0));
    rep.notes.push(format!("imaginary-part discontinuities of the formulas at {:?}", scan.im_jumps));

    let m = mesh(level)?;
    let field = sample_variety(&spec, m.clone(), VarietyTarget::Plane)?;
    let mut trace_err = 0.0f64;
    for &v in m.boundary_loop() {
        let p = m.vertex(v);
        let t = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
        trace_err = trace_err.max(metric_g(field.value(v), &pair(boundary_selection_formulas(t)))?);
    }
    rep.push(Check::at_most("sampled_trace_matches_formulas", trace_err, 1e-9));

    let branches = detect_branches(&field);
    rep.push(Check::equals("branch_count", branches.count as f64, 2.0));
    let edge = m.max_edge_length();
    for target in spec.branch_points() {
        let d = branches
            .components
            .iter()
            .map(|c| (c.position[0] - target[0]).hypot(c.position[1] - target[1]))
            .fold(f64::INFINITY, f64::min);
        rep.push(Check::at_most(&format!("branch_near_{:+.2}", target[0]), d, edge));
    }
    let band = m.annulus_band(0.9)?;
    match decompose_graph(&field, &band, 0.5) {
        Ok(d) => {
            rep.push(Check::equals("band_components", d.components.len() as f64, 2.0));
            rep.push(Check::flag("band_multiplicities_one", d.components.iter().all(|c| c.multiplicity == 1)));
        }
        Err(e) => {
            rep.notes.push(format!("band decomposition failed: {e}"));
            rep.push(Check::flag("band_decomposition", false));
        }
    }

    rep.artifacts.push(Artifact { name: "selections.csv".into(), contents: selection_csv(1000) });
    rep.artifacts.push(Artifact { name: "selection_re.svg".into(), contents: selection_svg(1000, false) });
    rep.artifacts.push(Artifact { name: "selection_im.svg".into(), contents: selection_svg(1000, true) });
    Ok(rep)
}

pub fn degeneracy(level: u32, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("degeneracy", level, seed);
    let m = mesh(level)?;
    let (_, d) = build_degenerate_example(m.clone())?;
    rep.push(Check::at_most("shift_identity_relative_error", d.identity_relative_error, 1e-10));
    rep.push(Check::at_most("trace_error", d.trace_error, 1e-9));
    rep.push(Check::above("witness_distance", d.witness_distance, WITNESS_DISTANCE));
    if let (Some(v), Some(p)) = (d.witness_vertex, d.witness_position) {
        rep.notes.push(format!("witness vertex {v} at ({:.6}, {:.6})", p[0], p[1]));
    }
    rep.notes.push(format!("{} interior vertices keep the origin off the support", d.vertices_off_origin));

    let opts = SolveOptions { seed, ..SolveOptions::default() };
    let (_, h) = half_shift_check(m, &opts)?;
    rep.push(Check::at_most("half_shift_identity_relative_error", h.identity_relative_error, 1e-10));
    rep.push(Check::at_most("half_shift_symmetric", h.max_vertex_sum, 1e-8));
    Ok(rep)
}

pub fn mass_formula(level: u32, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("mass-formula", level, seed);
    let m = mesh(level)?;
    let variety = sample_variety(&VarietySpec::default(), m.clone(), VarietyTarget::Plane)?;
    let asym = mass_asymptotics(&variety, &[0.1, 0.05, 0.025])?;
    rep.push(Check::below("richardson_relative_error", asym.relative_error, 0.05));
    rep.notes.push(format!("rescaled excess mass {:?} -> {:.6}, half energy {:.6}", asym.ratios, asym.extrapolated, asym.half_energy));

    let unit = variety.graph_mass(1.0);
    let predicted = 2.0 * m.area() + variety.dirichlet_energy() / 2.0;
    rep.push(Check::below("variety_mass_identity", (unit - predicted).abs() / predicted, 0.02));

    let fields = [
        ("constant", QField::constant(m.clone(), &QValue::repeated(2, &[1.0, -1.0]))?),
        ("identity", QField::from_fn(m.clone(), |p| QValue::new(1, 2, p.to_vec()).expect("planar point"))?),
        ("sqrt-z", QField::from_fn(m.clone(), |p| builtin_value("sqrt-z", p).expect("builtin"))?),
        ("variety", variety),
    ];
    for (name, f) in &fields {
        let c = lemma_mass_check(f, 1e-9);
        rep.push(Check::at_most(&format!("lemma_{name}"), c.lhs - c.rhs, 1e-9));
    }
    Ok(rep)
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    if q == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(q - 1) {
        for pos in 0..q {
            let mut next = p.clone();
            next.insert(pos, q - 1);
            out.push(next);
        }
    }
    out
}

fn brute_force_metric(a: &QValue, b: &QValue, perms: &[Vec<usize>]) -> f64 {
    perms
        .iter()
        .map(|p| {
            (0..a.q())
                .map(|i| a.point(i).iter().zip(b.point(p[i])).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

pub fn metric_oracle(seed: u64, pairs: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("metric-oracle", 0, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for q in 2..=6 {
        let perms = permutations(q);
        for n in 1..=3 {
            let mut worst = 0.0f64;
            for _ in 0..pairs {
                let mut draw = || {
                    let c: Vec<f64> = (0..q * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    QValue::new(q, n, c)
                };
                let (a, b) = (draw()?, draw()?);
                let fast = metric_g(&a, &b)?;
                let slow = brute_force_metric(&a, &b, &perms);
                worst = worst.max((fast - slow).abs() / slow.max(f64::MIN_POSITIVE));
            }
            rep.push(Check::at_most(&format!("q{q}_n{n}_relative_error"), worst, 1e-12));
        }
    }
    Ok(rep)
}

pub fn conformal_invariance(level: u32, seed: u64, a: f64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("conformal-invariance", level, seed);
    let m = mesh(level)?;
    let mobius = Mobius::new([a, 0.0], 0.0)?;
    let opts = SolveOptions { seed, annealing: true, ..SolveOptions::default() };
    for name in ["sqrt-z", "identity"] {
        let (base, pulled) = mobius_energy_pair(&m, name, &mobius, &opts)?;
        rep.push(Check::below(&format!("{name}_relative_change"), (pulled - base).abs() / base, 0.01));
        rep.notes.push(format!("{name}: energy {base:.6}, pulled back {pulled:.6}"));
    }
    Ok(rep)
}

/// Dirichlet energies for a builtin boundary and for the same data composed
/// with a disk automorphism.
pub fn mobius_energy_pair(mesh: &Arc<DiskMesh>, builtin: &str, mobius: &Mobius, opts: &SolveOptions) -> Result<(f64, f64)> {
    let plain = builtin_boundary(builtin, mesh)?;
    let pulled = mesh
        .boundary_loop()
        .iter()
        .map(|&v| builtin_value(builtin, mobius.apply(mesh.vertex(v))))
        .collect::<Result<Vec<_>>>()?;
    let (_, r0) = solve_dirichlet(mesh.clone(), &plain, opts)?;
    let (_, r1) = solve_dirichlet(mesh.clone(), &pulled, opts)?;
    Ok((r0.final_energy, r1.final_energy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerDiagnostics {
    pub decay: DecayReport,
    pub oscillation: OscillationReport,
}

pub const DECAY_RADII: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
pub const OSC_DELTA: f64 = 0.9;
pub const OSC_ARC: f64 = PI / 8.0;

/// Energy decay in balls around a few centres and boundary oscillation.
pub fn minimizer_diagnostics(field: &QField) -> Result<MinimizerDiagnostics> {
    let centers: [[f64; 2]; 5] = [[0.0, 0.0], [0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]];
    let mut entries = Vec::new();
    let mut max_ratio = 0.0f64;
    let mut slack = 0.0;
    for c in centers {
        let radii: Vec<f64> = DECAY_RADII.iter().copied().filter(|&r| r < 1.0 - c[0].hypot(c[1])).collect();
        let r = check_energy_decay(field, &[c], &radii)?;
        max_ratio = max_ratio.max(r.max_ratio);
        slack = r.slack;
        entries.extend(r.entries);
    }
    let decay = DecayReport { entries, max_ratio, slack };
    let oscillation = oscillation_check(field, OSC_DELTA, OSC_ARC)?;
    Ok(MinimizerDiagnostics { decay, oscillation })
}
