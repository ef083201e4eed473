//! Batch front-end: configuration, run orchestration and file emission.

pub mod config;
pub mod expr;
pub mod output;
pub mod table;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

pub use config::{F0Spec, Mode, RunConfig};

use crate::error::{Error, Result};
use crate::estimates::{
    apriori_report, feasibility_alexandrov, gradient_bound_alexandrov, AlexandrovGradientCheck, AprioriReport,
    Feasibility, Status,
};
use crate::hypersurface::{geometry_from_radial, GeometryField, RadialField};
use crate::properties::symfun_suite;
use crate::solver::{
    continuation_solve, smooth_perturbations, uniqueness_probe_from, ContinuationConfig, SolveReport, UniquenessReport,
};
use crate::sphere_grid::{GridMode, ScalarField, SphereGrid};
use crate::steiner::{parallel_shell_volume, steiner_decompose, SteinerFit};
use crate::symfun::binomial;

/// Sup-norm agreement demanded of perturbed restarts in `validate`.
pub const UNIQUENESS_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub mode: GridMode,
    pub dim: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub nodes: usize,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    pub validator: &'static str,
    pub anchor: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub anchor: String,
    pub observed: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheck {
    pub rows: Vec<CheckRow>,
    pub passed: bool,
}

/// Everything a run reports. Field order is the key order in `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: &'static str,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub grid: GridInfo,
    pub f0: String,
    pub continuation: ContinuationConfig,
    pub feasibility: Option<Feasibility>,
    pub solve: Option<SolveReport>,
    pub apriori: Option<AprioriReport>,
    pub alexandrov_gradient: Option<AlexandrovGradientCheck>,
    pub uniqueness: Option<UniquenessReport>,
    pub steiner: Option<SteinerFit>,
    pub self_check: Option<SelfCheck>,
    pub anchors: Vec<Anchor>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

const ANCHOR_CONTINUATION: Anchor = Anchor {
    validator: "continuation",
    anchor: "continuity method: geodesic sphere at t = 0 deformed to the prescribed measure at t = 1",
};
const ANCHOR_APRIORI: Anchor = Anchor {
    validator: "apriori",
    anchor: "a priori estimates: C0 bracket, gradient and curvature bounds of admissible solutions",
};
const ANCHOR_FEASIBILITY: Anchor = Anchor {
    validator: "feasibility",
    anchor: "Alexandrov problem: inf f > 1 suffices, max f < 1 admits no solution",
};
const ANCHOR_ALEX_GRADIENT: Anchor = Anchor {
    validator: "alexandrov-gradient",
    anchor: "Alexandrov problem gradient estimate: |grad gamma~| < 1/phi^2 at its maximum",
};
const ANCHOR_UNIQUENESS: Anchor = Anchor {
    validator: "uniqueness",
    anchor: "uniqueness of the admissible solution",
};
const ANCHOR_STEINER: Anchor = Anchor {
    validator: "steiner",
    anchor: "Steiner-type formula: parallel volume = sum_r l_{n+1-r}(t) Phi_r",
};
const ANCHOR_SELF_CHECK: Anchor = Anchor {
    validator: "self-check",
    anchor: "round-sphere identities, Steiner closed forms and symmetric-function inequalities",
};

/// Machine-readable error category.
pub fn category(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::Domain(_) => "config",
        Error::Infeasible(_) => "infeasible",
        Error::Stall { .. } => "stall",
        Error::Io(_) => "io",
        Error::Inadmissible { .. } => "inadmissible",
        Error::NonConvergence { .. } => "nonconvergence",
        Error::Safeguard { .. } => "safeguard",
        Error::Singular(_) => "singular",
        Error::FocalCrossing { .. } => "focal-crossing",
        Error::Fit(_) => "fit",
        Error::Numeric(_) => "numeric",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Infeasible(_) => 3,
        Error::Stall { .. } => 4,
        Error::Io(_) => 5,
        _ => 1,
    }
}

pub fn build_grid(cfg: &RunConfig) -> Result<Arc<SphereGrid>> {
    let grid = match cfg.grid.mode {
        GridMode::FullS2 => SphereGrid::full_s2(cfg.grid.n_theta, cfg.grid.n_phi.unwrap_or(0))?,
        GridMode::Axisymmetric => SphereGrid::axisymmetric(cfg.n, cfg.grid.n_theta)?,
    };
    Ok(Arc::new(grid))
}

pub fn load_f0(cfg: &RunConfig, grid: &SphereGrid) -> Result<ScalarField> {
    let f = match &cfg.f0 {
        F0Spec::Constant(c) => vec![*c; grid.len()],
        F0Spec::Expression { expr, .. } => grid.sample(|t, p| expr.eval(t, p)),
        F0Spec::Table(_) => {
            let path = cfg.table_path().expect("table spec");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            table::table_to_field(&table::parse_table(&text)?, grid)?
        }
    };
    if grid.mode() == GridMode::Axisymmetric {
        if let F0Spec::Expression { expr, .. } = &cfg.f0 {
            if expr.depends_on_phi() {
                return Err(Error::Config("axisymmetric grids need an f0 independent of phi".into()));
            }
        }
    }
    if let Some(i) = f.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!(
            "f0 must be positive and finite; node {i} (theta = {}, phi = {}) has {}",
            grid.theta()[i],
            grid.phi()[i],
            f[i]
        )));
    }
    Ok(f)
}

fn grid_info(grid: &SphereGrid) -> GridInfo {
    GridInfo {
        mode: grid.mode(),
        dim: grid.dim(),
        n_theta: grid.n_theta(),
        n_phi: grid.n_phi(),
        nodes: grid.len(),
        h: grid.h(),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

struct Solved {
    solution: RadialField,
    geom: GeometryField,
    report: SolveReport,
}

fn solve(cfg: &RunConfig, grid: Arc<SphereGrid>, f0: &[f64]) -> Result<Solved> {
    let (solution, report) = continuation_solve(grid, f0, &cfg.continuation)?;
    let geom = geometry_from_radial(&solution)?;
    Ok(Solved { solution, geom, report })
}

/// Executes one run and writes its files into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let grid = build_grid(cfg)?;
    let mut report = RunReport {
        mode: cfg.mode.name(),
        n: cfg.n,
        k: cfg.k,
        seed: cfg.seed,
        grid: grid_info(&grid),
        f0: cfg.f0.describe(),
        continuation: cfg.continuation.clone(),
        feasibility: None,
        solve: None,
        apriori: None,
        alexandrov_gradient: None,
        uniqueness: None,
        steiner: None,
        self_check: None,
        anchors: Vec::new(),
        passed: true,
    };
    let mut summary = Vec::new();
    let mut solved = None;

    if cfg.mode == Mode::SphereTest {
        let check = self_check(cfg.seed)?;
        for row in &check.rows {
            summary.push(format!(
                "{:<34} {:>12.4e} {:>12.4e}  {}",
                row.name,
                row.observed,
                row.bound,
                if row.passed { "PASS" } else { "FAIL" }
            ));
        }
        report.passed = check.passed;
        report.self_check = Some(check);
        report.anchors.push(ANCHOR_SELF_CHECK);
    } else {
        let needs_solve = !(cfg.mode == Mode::Steiner && cfg.steiner_body.is_some());
        let f0 = if needs_solve { Some(load_f0(cfg, &grid)?) } else { None };
        if let Some(f0) = &f0 {
            if cfg.k == cfg.n {
                report.feasibility = Some(feasibility_alexandrov(f0));
                report.anchors.push(ANCHOR_FEASIBILITY);
            }
            let s = solve(cfg, grid.clone(), f0)?;
            report.anchors.push(ANCHOR_CONTINUATION);
            let ap = apriori_report(&s.solution, &s.geom, f0, cfg.n, cfg.k)?;
            report.anchors.push(ANCHOR_APRIORI);
            report.passed &= ap.passed();
            summary.push(format!(
                "solved: rho in [{:.10}, {:.10}], residual {:.3e}, admissible {}",
                s.solution.min(),
                s.solution.max(),
                s.report.final_residual,
                s.report.admissible
            ));
            if cfg.k == cfg.n {
                let chk = gradient_bound_alexandrov(&s.solution)?;
                report.passed &= chk.status != Status::Fail;
                report.alexandrov_gradient = Some(chk);
                report.anchors.push(ANCHOR_ALEX_GRADIENT);
            }
            if cfg.mode == Mode::Validate {
                let perts = smooth_perturbations(&grid, cfg.validate.perturbations, cfg.validate.amplitude, cfg.seed);
                let u = uniqueness_probe_from(&s.solution, f0, &cfg.continuation, &perts, UNIQUENESS_TOL)?;
                summary.push(format!("uniqueness: {} restarts, unique {}", u.runs.len(), u.unique));
                report.passed &= u.unique;
                report.uniqueness = Some(u);
                report.anchors.push(ANCHOR_UNIQUENESS);
            }
            report.apriori = Some(ap);
            report.solve = Some(s.report.clone());
            solved = Some(s);
        }
        if cfg.mode == Mode::Steiner {
            let geom = match (&cfg.steiner_body, &solved) {
                (Some(body), _) => {
                    let r = RadialField::from_fn(grid.clone(), |t, p| body.eval(t, p))?;
                    geometry_from_radial(&r)?
                }
                (None, Some(s)) => s.geom.clone(),
                (None, None) => unreachable!("steiner runs either solve or use a body"),
            };
            let fit = steiner_decompose(&geom, None, &cfg.steiner.t_samples)?;
            summary.push(format!("steiner: max relative fit error {:.3e}", fit.max_rel_err));
            report.steiner = Some(fit);
            report.anchors.push(ANCHOR_STEINER);
        }
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut files = Vec::new();
    if let Some(s) = &solved {
        if cfg.output.csv {
            write_file(
                out_dir,
                "solution.csv",
                &output::solution_csv(&s.solution, &s.geom, cfg.k),
                &mut files,
            )?;
        }
        if cfg.output.mesh {
            let hyp = output::surface_obj(&s.solution, output::MeshChannel::Hyperboloid)?;
            let ball = output::surface_obj(&s.solution, output::MeshChannel::PoincareBall)?;
            write_file(out_dir, "mesh_hyperboloid.obj", &hyp, &mut files)?;
            write_file(out_dir, "mesh_poincare.obj", &ball, &mut files)?;
        }
    }
    if let (Some(fit), true) = (&report.steiner, cfg.output.csv) {
        write_file(out_dir, "steiner.csv", &output::steiner_csv(fit)?, &mut files)?;
    }
    if cfg.output.report {
        let mut json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
        json.push('\n');
        write_file(out_dir, "report.json", &json, &mut files)?;
    }
    Ok(RunOutcome { report, files, summary })
}

fn row(name: &str, anchor: &str, observed: f64, bound: f64) -> CheckRow {
    CheckRow {
        name: name.into(),
        anchor: anchor.into(),
        observed,
        bound,
        passed: observed <= bound,
    }
}

/// The `sphere-test` battery: closed-form geometry of round spheres, exact
/// solves on axisymmetric grids, Steiner closed forms, the infeasibility
/// gate and a reduced symmetric-function suite.
pub fn self_check(seed: u64) -> Result<SelfCheck> {
    let mut rows = Vec::new();
    let (s1, c1) = (1.0f64.sinh(), 1.0f64.cosh());

    let grid = Arc::new(SphereGrid::full_s2(32, 64)?);
    let round = RadialField::constant(grid.clone(), 1.0)?;
    let geom = geometry_from_radial(&round)?;
    let coth = c1 / s1;
    let kappa_err = geom
        .nodes()
        .iter()
        .flat_map(|g| g.kappa.values().iter().map(|k| (k - coth).abs()))
        .fold(0.0, f64::max);
    rows.push(row(
        "round sphere kappa = coth 1",
        "radial graph geometry",
        kappa_err,
        1e-10,
    ));
    let eq_err = geom
        .nodes()
        .iter()
        .map(|g| (g.area_el * g.sigma(1) - 2.0f64.sinh()).abs())
        .fold(0.0, f64::max);
    rows.push(row(
        "round sphere area*sigma_1 = sinh 2",
        "constant solution identity",
        eq_err,
        1e-10,
    ));

    let axi = Arc::new(SphereGrid::axisymmetric(2, 256)?);
    for k in 1..=2 {
        let f = binomial(2, k) * c1.powi(k as i32) * s1.powi(2 - k as i32);
        let (sol, _) = continuation_solve(axi.clone(), &vec![f; axi.len()], &ContinuationConfig::with_k(k))?;
        let err = sol.rho().iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        rows.push(row(
            &format!("round solve k={k} sup|rho-1|"),
            "continuity method",
            err,
            1e-8,
        ));
    }

    let small = Arc::new(SphereGrid::full_s2(16, 32)?);
    let geom = geometry_from_radial(&RadialField::constant(small, 1.0)?)?;
    let shell = parallel_shell_volume(&geom, 0.5, None)?;
    let exact = PI * (3.0f64.sinh() - 2.0f64.sinh() - 1.0);
    rows.push(row(
        "shell volume t=0.5 (relative)",
        "Steiner-type formula",
        ((shell - exact) / exact).abs(),
        1e-6,
    ));
    let ts: Vec<f64> = (1..=6).map(|i| 0.1 * i as f64).collect();
    let fit = steiner_decompose(&geom, None, &ts)?;
    let closed = [4.0 * PI * c1 * c1, 8.0 * PI * s1 * c1, 4.0 * PI * s1 * s1];
    let fit_err = fit
        .phis_fit
        .iter()
        .zip(closed)
        .map(|(a, e)| ((a - e) / e).abs())
        .fold(0.0, f64::max);
    rows.push(row("Steiner fit vs closed form", "Steiner-type formula", fit_err, 1e-4));

    let gate = continuation_solve(axi.clone(), &vec![0.9; axi.len()], &ContinuationConfig::with_k(2));
    rows.push(row(
        "k=n f0=0.9 rejected as infeasible",
        "Alexandrov problem nonexistence",
        if matches!(gate, Err(Error::Infeasible(_))) {
            0.0
        } else {
            1.0
        },
        0.0,
    ));

    let suite = symfun_suite(6, 2000, seed)?;
    let worst = |f: fn(&crate::properties::CaseReport) -> f64| suite.iter().map(f).fold(0.0, f64::max);
    rows.push(row(
        "Maclaurin inequality",
        "Maclaurin inequality",
        worst(|c| c.maclaurin),
        crate::properties::MACLAURIN_TOL,
    ));
    rows.push(row(
        "two-index minor identity",
        "minor identity",
        worst(|c| c.minor_identity),
        crate::properties::MINOR_IDENTITY_TOL,
    ));
    rows.push(row(
        "concavity of sigma_k^(1/k)",
        "concavity",
        worst(|c| c.concavity.max(c.quotient_concavity)),
        crate::properties::CONCAVITY_TOL,
    ));
    let ellip = suite.iter().map(|c| c.ellipticity_min).fold(f64::INFINITY, f64::min);
    rows.push(CheckRow {
        name: "ellipticity min eigenvalue ratio".into(),
        anchor: "ellipticity of dsigma_k/dW on the cone".into(),
        observed: ellip,
        bound: 0.0,
        passed: ellip > 0.0,
    });
    let passed = rows.iter().all(|r| r.passed);
    Ok(SelfCheck { rows, passed })
}
