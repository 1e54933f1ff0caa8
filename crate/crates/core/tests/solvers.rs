use std::f64::consts::PI;
use std::sync::Arc;

use qp_core::lab::builtin_boundary;
use qp_core::plateau::*;
use qp_core::solver::*;
use qp_core::*;

fn mesh(level: u32) -> Arc<DiskMesh> {
    Arc::new(build_disk_mesh(level).unwrap())
}

fn coords(f: &QField) -> Vec<f64> {
    f.values().iter().flat_map(|v| v.coords().to_vec()).collect()
}

#[test]
fn energy_history_never_increases() {
    let m = mesh(4);
    let b = builtin_boundary("sqrt-z", &m).unwrap();
    for annealing in [false, true] {
        let opts = SolveOptions { annealing, restarts: 2, ..Default::default() };
        let (_, r) = solve_dirichlet(m.clone(), &b, &opts).unwrap();
        assert!(r.energy_history.windows(2).all(|w| w[1] <= w[0]), "{:?}", r.energy_history);
        assert_eq!(r.final_energy, *r.energy_history.last().unwrap());
    }
}

#[test]
fn single_valued_solve_is_the_harmonic_extension() {
    let m = mesh(4);
    let b = builtin_boundary("re-z", &m).unwrap();
    let (f, _) = solve_dirichlet(m.clone(), &b, &SolveOptions::default()).unwrap();
    let raw: Vec<Vec<f64>> = b.iter().map(|v| v.coords().to_vec()).collect();
    let h = harmonic_extension(m, &raw).unwrap();
    for (v, x) in f.values().iter().zip(&h) {
        assert!((v.coords()[0] - x[0]).abs() < 1e-10);
    }
}

#[test]
fn single_valued_solve_is_linear() {
    let m = mesh(4);
    let one = |f: &dyn Fn([f64; 2]) -> f64| -> Vec<QValue> {
        m.boundary_loop().iter().map(|&v| QValue::new(1, 1, vec![f(m.vertex(v))]).unwrap()).collect()
    };
    let a = one(&|p| p[0] * p[0] - 0.3 * p[1]);
    let b = one(&|p| (3.0 * p[1]).sin());
    let ab = one(&|p| p[0] * p[0] - 0.3 * p[1] + (3.0 * p[1]).sin());
    let opts = SolveOptions { restarts: 1, ..Default::default() };
    let fa = coords(&solve_dirichlet(m.clone(), &a, &opts).unwrap().0);
    let fb = coords(&solve_dirichlet(m.clone(), &b, &opts).unwrap().0);
    let fab = coords(&solve_dirichlet(m.clone(), &ab, &opts).unwrap().0);
    for i in 0..fa.len() {
        assert!((fa[i] + fb[i] - fab[i]).abs() < 1e-10);
    }
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let m = mesh(4);
    let b = builtin_boundary("variety", &m).unwrap();
    let opts = SolveOptions { annealing: true, restarts: 3, seed: 11, ..Default::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| solve_dirichlet(m.clone(), &b, &opts).unwrap())
    };
    let (f1, r1) = run(1);
    let (f3, r3) = run(3);
    assert_eq!(r1, r3);
    assert_eq!(f1.to_qpfield(), f3.to_qpfield());
}

fn ellipse_problem(b: usize) -> BoundaryProblem {
    let pts = (0..8 * b)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / (8 * b) as f64;
            vec![1.3 * t.cos(), 0.8 * t.sin()]
        })
        .collect();
    BoundaryProblem::new(vec![JordanCurve::new(pts, 0.2).unwrap()], vec![1], b).unwrap()
}

#[test]
fn plateau_improves_on_the_arclength_parameterization() {
    let m = mesh(4);
    let problem = ellipse_problem(m.boundary_loop().len());
    let trace = boundary_trace(&problem, &m).unwrap();
    assert!(trace.iter().all(|v| v.q() == problem.q()));
    let opts = SolveOptions { restarts: 1, ..Default::default() };
    let (_, fixed) = solve_dirichlet(m.clone(), &trace, &opts).unwrap();
    let (field, solved, r) = solve_plateau(problem, m.clone(), &opts).unwrap();
    assert!(r.energy_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.final_energy <= fixed.final_energy);
    // Twice the enclosed area bounds the energy of any spanning disk from below.
    assert!(r.final_energy >= 2.0 * PI * 1.3 * 0.8 * 0.98);
    assert!(boundary_homeo_check(&solved, 1e-6)[0].homeomorphism);
    assert!(wrapped_check(&solved, 1e-9)[0].wrapped);

    let mobius = Mobius::new([0.2, -0.1], 0.3).unwrap();
    let (e0, _, relaxed) = mobius_quotient_check(&field, &mobius, &opts).unwrap();
    assert!((relaxed - e0).abs() / e0 < 0.01, "{e0} vs {relaxed}");
}

#[test]
fn doubly_wrapped_circle_trace_has_two_points() {
    let m = mesh(3);
    let b = m.boundary_loop().len();
    let c = JordanCurve::circle(&[0.0, 0.0], 1.0, 4 * b).unwrap();
    let problem = BoundaryProblem::new(vec![c], vec![2], b).unwrap();
    let trace = boundary_trace(&problem, &m).unwrap();
    assert!(trace.iter().all(|v| v.q() == 2));
    let (_, r) = solve_dirichlet(m, &trace, &SolveOptions::default()).unwrap();
    assert!((r.final_energy - 2.0 * PI).abs() / (2.0 * PI) < 0.05);
}

#[test]
fn parallel_circles_decouple() {
    let m = mesh(4);
    let b = m.boundary_loop().len();
    let problem = parallel_circles_problem(10.0, 4 * b, b).unwrap();
    let (_, _, r) = solve_plateau(problem, m, &SolveOptions { restarts: 1, ..Default::default() }).unwrap();
    assert!((r.final_energy - 4.0 * PI).abs() / (4.0 * PI) < 0.03);
}

#[test]
fn problem_validation() {
    let a = JordanCurve::circle(&[0.0, 0.0], 1.0, 64).unwrap();
    let b = JordanCurve::circle(&[0.1, 0.0], 1.0, 64).unwrap();
    assert!(BoundaryProblem::new(vec![a.clone(), b], vec![1, 1], 48).is_err());
    assert!(BoundaryProblem::new(vec![a.clone()], vec![0], 48).is_err());
    assert!(BoundaryProblem::new(vec![a.clone()], vec![1, 1], 48).is_err());
    let p = BoundaryProblem::new(vec![a], vec![1], 48).unwrap();
    assert!(boundary_trace(&p, &build_disk_mesh(2).unwrap()).is_err());
}
