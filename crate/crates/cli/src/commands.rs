use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use qp_core::analysis::{conformality_residual, decompose_graph, detect_branches, BranchReport};
use qp_core::field::{infer_level, parse_qpfield};
use qp_core::lab::{builtin_boundary, BUILTIN_BOUNDARIES};
use qp_core::plateau::{
    boundary_homeo_check, circle_problem, parallel_circles_problem, solve_plateau_with, variety_problem, wrapped_check,
    GradientMode, HomeoVerdict, PlateauOptions, ProblemSpec, WrappedVerdict,
};
use qp_core::solver::{harmonic_extension, solve_dirichlet, SolveOptions, SolveReport};
use qp_core::suites::{default_level, minimizer_diagnostics, run_suite, MinimizerDiagnostics, SuiteReport};
use qp_core::{build_disk_mesh, DiskMesh, QField, QValue};

use crate::report::{read_input, render, sha256_hex, OutDir};
use crate::{BuiltinProblem, Cli, Command, Failure, Gradient, SolverArgs};

pub fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Mesh { level } => mesh(cli, *level),
        Command::Dirichlet { level, boundary, boundary_file, solver } => {
            dirichlet(cli, *level, boundary.as_deref(), boundary_file.as_deref(), solver)
        }
        Command::Plateau { level, problem, builtin, radius, separation, oversample, outer_iters, gradient, solver } => {
            let source = match (problem, builtin) {
                (Some(p), None) => PlateauInput::File(p),
                (None, Some(b)) => PlateauInput::Builtin { kind: *b, radius: *radius, separation: *separation, oversample: *oversample },
                _ => return Err(Failure::invalid("plateau needs exactly one of --problem or --builtin")),
            };
            let popts = PlateauOptions {
                outer_iters: *outer_iters,
                gradient: match gradient {
                    Gradient::Analytic => GradientMode::Analytic,
                    Gradient::FiniteDifference => GradientMode::FiniteDifference,
                },
                ..PlateauOptions::default()
            };
            plateau(cli, *level, source, popts, solver)
        }
        Command::Verify { suite, level } => verify(cli, suite, *level),
        Command::Analyze { field, mesh, band, alpha } => analyze(cli, field, mesh.as_deref(), *band, *alpha),
    }
}

fn emit(out: &OutDir, name: &str, report: &str) -> Result<(), Failure> {
    out.write(name, report)?;
    print!("{report}");
    Ok(())
}

/// Input files enter the config by name and content hash, so the report does
/// not depend on where the file happens to live.
#[derive(Serialize)]
struct InputRef {
    name: String,
    sha256: String,
}

fn input(path: &Path) -> Result<(InputRef, String), Failure> {
    let (abs, text) = read_input(path)?;
    let name = abs.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((InputRef { name, sha256: sha256_hex(text.as_bytes()) }, text))
}

fn solve_options(seed: u64, a: &SolverArgs) -> Result<SolveOptions, Failure> {
    let opts = SolveOptions {
        max_outer_iters: a.max_iters,
        energy_tol: a.tol,
        restarts: a.restarts,
        seed,
        annealing: a.anneal,
        anneal_steps: a.anneal_steps,
        ..SolveOptions::default()
    };
    opts.validate()?;
    Ok(opts)
}

#[derive(Serialize)]
struct BranchSummary {
    count: usize,
    positions: Vec<[f64; 2]>,
    cycle_types: Vec<Vec<usize>>,
}

fn branch_summary(b: &BranchReport) -> BranchSummary {
    BranchSummary {
        count: b.count,
        positions: b.components.iter().map(|c| c.position).collect(),
        cycle_types: b.components.iter().map(|c| c.cycle_type.clone()).collect(),
    }
}

#[derive(Serialize)]
struct SolveSummary {
    energy: f64,
    iterations: usize,
    converged: bool,
    restart_index: usize,
    restart_energies: Vec<f64>,
    annealing_accepted: usize,
    energy_history: Vec<f64>,
}

impl From<&SolveReport> for SolveSummary {
    fn from(r: &SolveReport) -> Self {
        Self {
            energy: r.final_energy,
            iterations: r.iterations,
            converged: r.converged,
            restart_index: r.restart_index,
            restart_energies: r.restart_energies.clone(),
            annealing_accepted: r.annealing_accepted,
            energy_history: r.energy_history.clone(),
        }
    }
}

fn mesh(cli: &Cli, level: u32) -> Result<u8, Failure> {
    let m = build_disk_mesh(level)?;
    let out = OutDir::create(&cli.out_dir)?;
    #[derive(Serialize)]
    struct Config {
        level: u32,
    }
    #[derive(Serialize)]
    struct Summary {
        file: String,
        vertices: usize,
        triangles: usize,
        edges: usize,
        boundary_vertices: usize,
        euler_characteristic: i64,
        area: f64,
        max_edge_length: f64,
        min_angle: f64,
    }
    let file = format!("mesh-L{level}.qpmesh");
    out.write(&file, &m.to_qpmesh())?;
    let summary = Summary {
        file,
        vertices: m.num_vertices(),
        triangles: m.num_triangles(),
        edges: m.edges().len(),
        boundary_vertices: m.boundary_loop().len(),
        euler_characteristic: m.euler_characteristic(),
        area: m.area(),
        max_edge_length: m.max_edge_length(),
        min_angle: m.min_angle(),
    };
    let report = render("mesh", cli.seed, level, &Config { level }, summary)?;
    emit(&out, &format!("mesh-L{level}.json"), &report)?;
    Ok(0)
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum BoundarySource {
    Builtin(String),
    File(InputRef),
}

fn dirichlet(
    cli: &Cli,
    level: u32,
    builtin: Option<&str>,
    file: Option<&Path>,
    args: &SolverArgs,
) -> Result<u8, Failure> {
    let opts = solve_options(cli.seed, args)?;
    let m = Arc::new(build_disk_mesh(level)?);
    let (source, boundary) = match (builtin, file) {
        (Some(name), None) => {
            if !BUILTIN_BOUNDARIES.contains(&name) {
                return Err(Failure::invalid(format!("unknown builtin boundary `{name}`; expected one of {BUILTIN_BOUNDARIES:?}")));
            }
            (BoundarySource::Builtin(name.into()), builtin_boundary(name, &m)?)
        }
        (None, Some(path)) => {
            let (r, text) = input(path)?;
            let values = parse_qpfield(&text)?;
            if values.len() != m.boundary_loop().len() {
                return Err(Failure::invalid(format!(
                    "boundary file has {} values, the level-{level} boundary has {} vertices",
                    values.len(),
                    m.boundary_loop().len()
                )));
            }
            (BoundarySource::File(r), values)
        }
        _ => return Err(Failure::invalid("dirichlet needs exactly one of --boundary or --boundary-file")),
    };
    let out = OutDir::create(&cli.out_dir)?;
    let (field, rep) = solve_dirichlet(m.clone(), &boundary, &opts)?;

    let linear_solve_energy = if field.q() == 1 {
        let raw: Vec<Vec<f64>> = boundary.iter().map(|v| v.coords().to_vec()).collect();
        let h = harmonic_extension(m.clone(), &raw)?;
        let n = field.n();
        let values = h.into_iter().map(|x| QValue::new(1, n, x)).collect::<qp_core::Result<Vec<_>>>()?;
        Some(QField::new(m.clone(), values)?.dirichlet_energy())
    } else {
        None
    };

    #[derive(Serialize)]
    struct Config<'a> {
        level: u32,
        boundary: BoundarySource,
        solver: &'a SolveOptions,
    }
    #[derive(Serialize)]
    struct Summary {
        field_file: &'static str,
        q: usize,
        n: usize,
        #[serde(flatten)]
        solve: SolveSummary,
        mv_area: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        linear_solve_energy: Option<f64>,
        branches: BranchSummary,
    }
    out.write("dirichlet.qpfield", &field.to_qpfield())?;
    let summary = Summary {
        field_file: "dirichlet.qpfield",
        q: field.q(),
        n: field.n(),
        solve: (&rep).into(),
        mv_area: field.mv_area(),
        linear_solve_energy,
        branches: branch_summary(&detect_branches(&field)),
    };
    let config = Config { level, boundary: source, solver: &opts };
    let report = render("dirichlet", cli.seed, level, &config, summary)?;
    emit(&out, "dirichlet.json", &report)?;
    Ok(0)
}

enum PlateauInput<'a> {
    File(&'a Path),
    Builtin { kind: BuiltinProblem, radius: f64, separation: f64, oversample: usize },
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum ProblemSource {
    File(InputRef),
    Circle { radius: f64, samples: usize },
    Variety { samples: usize },
    ParallelCircles { separation: f64, samples: usize },
}

fn plateau(cli: &Cli, level: u32, source: PlateauInput, popts: PlateauOptions, args: &SolverArgs) -> Result<u8, Failure> {
    let opts = solve_options(cli.seed, args)?;
    let m = Arc::new(build_disk_mesh(level)?);
    let b = m.boundary_loop().len();
    let (source, problem) = match source {
        PlateauInput::File(path) => {
            let (r, text) = input(path)?;
            let spec: ProblemSpec =
                serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("problem file: {e}")))?;
            (ProblemSource::File(r), spec.into_problem(b)?)
        }
        PlateauInput::Builtin { kind, radius, separation, oversample } => {
            if oversample == 0 {
                return Err(Failure::invalid("--oversample must be positive"));
            }
            let samples = oversample * b;
            match kind {
                BuiltinProblem::Circle => (ProblemSource::Circle { radius, samples }, circle_problem(radius, samples, b)?),
                BuiltinProblem::Variety => (ProblemSource::Variety { samples }, variety_problem(samples, b)?),
                BuiltinProblem::ParallelCircles => (
                    ProblemSource::ParallelCircles { separation, samples },
                    parallel_circles_problem(separation, samples, b)?,
                ),
            }
        }
    };
    let out = OutDir::create(&cli.out_dir)?;
    let (field, solved, rep) = solve_plateau_with(problem, m, &opts, &popts)?;

    #[derive(Serialize)]
    struct Config<'a> {
        level: u32,
        problem: ProblemSource,
        plateau: &'a PlateauOptions,
        solver: &'a SolveOptions,
    }
    #[derive(Serialize)]
    struct Summary {
        field_file: &'static str,
        problem_file: &'static str,
        q: usize,
        multiplicities: Vec<usize>,
        #[serde(flatten)]
        solve: SolveSummary,
        conformality: f64,
        homeomorphism: Vec<HomeoVerdict>,
        wrapped: Vec<WrappedVerdict>,
        branches: BranchSummary,
    }
    out.write("plateau.qpfield", &field.to_qpfield())?;
    let spec = serde_json::to_string_pretty(&ProblemSpec::from_problem(&solved)).map_err(|e| Failure::invalid(e.to_string()))?;
    out.write("plateau-problem.json", &(spec + "\n"))?;
    let summary = Summary {
        field_file: "plateau.qpfield",
        problem_file: "plateau-problem.json",
        q: solved.q(),
        multiplicities: solved.multiplicities.clone(),
        solve: (&rep).into(),
        conformality: conformality_residual(&field).normalized,
        homeomorphism: boundary_homeo_check(&solved, 1e-6),
        wrapped: wrapped_check(&solved, 1e-9),
        branches: branch_summary(&detect_branches(&field)),
    };
    let config = Config { level, problem: source, plateau: &popts, solver: &opts };
    let report = render("plateau", cli.seed, level, &config, summary)?;
    emit(&out, "plateau.json", &report)?;
    Ok(0)
}

fn verify(cli: &Cli, suite: &str, level: Option<u32>) -> Result<u8, Failure> {
    let level = level.unwrap_or_else(|| default_level(suite));
    let rep: SuiteReport = run_suite(suite, level, cli.seed)?;
    let out = OutDir::create(&cli.out_dir)?;
    let mut files = Vec::new();
    for a in &rep.artifacts {
        let name = format!("{suite}-{}", a.name);
        out.write(&name, &a.contents)?;
        files.push(name);
    }
    #[derive(Serialize)]
    struct Config<'a> {
        suite: &'a str,
        level: u32,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        suite: &'a SuiteReport,
        files: Vec<String>,
    }
    let summary = Summary { suite: &rep, files };
    let report = render("verify", cli.seed, level, &Config { suite, level }, summary)?;
    emit(&out, &format!("verify-{suite}.json"), &report)?;
    for c in rep.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} = {} (want {} {})", c.name, c.value, c.relation, c.threshold);
    }
    Ok(if rep.passed { 0 } else { 1 })
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum Decomposition {
    Split { components: usize, multiplicities: Vec<usize>, single_valued: bool, gap: f64 },
    Failed { reason: String },
}

fn analyze(cli: &Cli, field_path: &Path, mesh_path: Option<&Path>, band: f64, alpha: f64) -> Result<u8, Failure> {
    let (field_ref, text) = input(field_path)?;
    let values = parse_qpfield(&text)?;
    let (mesh_ref, m) = match mesh_path {
        Some(p) => {
            let (r, t) = input(p)?;
            (Some(r), DiskMesh::from_qpmesh(&t)?)
        }
        None => {
            let level = infer_level(&values).ok_or_else(|| {
                Failure::invalid(format!("{} vertex values match no mesh level; pass --mesh", values.len()))
            })?;
            (None, build_disk_mesh(level)?)
        }
    };
    let level = m.level();
    let m = Arc::new(m);
    let band_vertices = m.annulus_band(band)?;
    let field = QField::new(m, values)?;

    let branches = detect_branches(&field);
    let conf = conformality_residual(&field);
    let decomposition = match decompose_graph(&field, &band_vertices, alpha) {
        Ok(d) => Decomposition::Split {
            components: d.components.len(),
            multiplicities: d.components.iter().map(|c| c.multiplicity).collect(),
            single_valued: d.components.iter().all(|c| c.multiplicity == 1),
            gap: d.gap,
        },
        Err(e) => Decomposition::Failed { reason: e.to_string() },
    };
    let (diagnostics, diagnostics_error) = match minimizer_diagnostics(&field) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };

    #[derive(Serialize)]
    struct Config {
        field: InputRef,
        #[serde(skip_serializing_if = "Option::is_none")]
        mesh: Option<InputRef>,
        band: f64,
        alpha: f64,
    }
    #[derive(Serialize)]
    struct Conformality {
        total: f64,
        normalized: f64,
    }
    #[derive(Serialize)]
    struct Summary {
        q: usize,
        n: usize,
        vertices: usize,
        energy: f64,
        mv_area: f64,
        branches: BranchReport,
        conformality: Conformality,
        band_decomposition: Decomposition,
        #[serde(skip_serializing_if = "Option::is_none")]
        diagnostics: Option<MinimizerDiagnostics>,
        #[serde(skip_serializing_if = "Option::is_none")]
        diagnostics_error: Option<String>,
    }
    let summary = Summary {
        q: field.q(),
        n: field.n(),
        vertices: field.values().len(),
        energy: field.dirichlet_energy(),
        mv_area: field.mv_area(),
        branches,
        conformality: Conformality { total: conf.total, normalized: conf.normalized },
        band_decomposition: decomposition,
        diagnostics,
        diagnostics_error,
    };
    let out = OutDir::create(&cli.out_dir)?;
    let config = Config { field: field_ref, mesh: mesh_ref, band, alpha };
    let report = render("analyze", cli.seed, level, &config, summary)?;
    emit(&out, "analyze.json", &report)?;
    Ok(0)
}
