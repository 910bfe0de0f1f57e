//! Named benchmark scenarios and table emission.
//!
//! Every quantitative table of the benchmark suite is encoded here as a named
//! [`Scenario`]; [`run_scenario`] produces its [`BenchmarkRow`]s and
//! [`rows_to_csv`] / [`rows_to_markdown`] render them. Runs are fully
//! deterministic: the same configuration yields byte-identical output.
//!
//! The registry covers
//!
//! * `main2d` — the Gaussian-source directional convection test over the
//!   mesh-refinement family, with all seven methods on the Ne = 45 mesh;
//! * `inactive` / `active` — manufactured `sin(πx)sin(πy)` verification in
//!   the sub- and supercritical Péclet regimes;
//! * `nist-uniform-2` / `nist-uniform-3` — the exponential boundary-layer
//!   problem with exact solution `ℓ(x)ℓ(y)` at ε = 10⁻² and 10⁻³;
//! * `nist-shishkin-2` — the same problem on layer-adapted Shishkin meshes;
//! * `eps-sweep` — the layer problem on a fixed Ne = 64 grid for
//!   ε ∈ {10⁻¹, …, 10⁻⁵};
//! * `few-shot` — capped activation-update studies with
//!   distance-to-converged reporting;
//! * `direction` / `rhs` — convection-direction and right-hand-side
//!   sensitivity of all seven methods;
//! * `sensitivity` — (γ_min, γ_max, κ), ω, warm-start, and iteration-cap
//!   sweeps of the adaptive method;
//! * `fixed-ref` — frozen activation built from the interpolated fine
//!   reference, compared against the coupled solve;
//! * `1d` — the reduced one-dimensional benchmark (ε = 10⁻³, β = 1,
//!   Ne = 80) where upwinding and the streamline method coincide.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::adsc::{
    solve_adsc, stabilization_matrix, AdscMode, AdscParams, WarmStart,
};
use crate::grid::{
    build_shishkin_mesh, build_uniform_mesh, detector_count, discrete_l2_norm,
    discrete_linf_norm, extrema_violation, interpolate_to_coarse, total_variation,
    DiagnosticsRow, GridFunction, Mesh2D,
};
use crate::lfa::{modal_set, rayleigh_rho_stab};
use crate::operators::{
    assemble_galerkin, assemble_lps, assemble_source, assemble_supg, cip_stabilization,
    exact_solution_field, lps_stabilization, solve_afc, supg_stabilization,
    upwind_stabilization, ProblemSpec, SourceSpec, AFC_DEFAULT_ITERATIONS,
};
use crate::sparse::{self, SparseOperator, DEFAULT_SOLVE_TOL};
use crate::{Error, Result};

pub mod one_dim;

/// Default fine-reference resolution (`Pe_h < 1` for the main problem).
pub const DEFAULT_N_REF: usize = 264;
/// Secondary fine-reference resolution for the consistency self-check.
pub const SELF_CHECK_N_REF: usize = 360;
/// Default detector threshold as a fraction of `‖U_ref‖∞`.
pub const DEFAULT_DETECTOR_THRESHOLD_FACTOR: f64 = 1e-6;

/// The main benchmark convection direction `(1, 0.6)/√1.36`.
pub fn main_beta() -> [f64; 2] {
    let norm = 1.36f64.sqrt();
    [1.0 / norm, 0.6 / norm]
}

/// The layer-problem convection direction `(1/2, √3/2)` (unit length).
pub fn nist_beta() -> [f64; 2] {
    [0.5, 3.0f64.sqrt() / 2.0]
}

/// The main two-dimensional problem: ε = 2·10⁻³, β = (1, 0.6)/√1.36, and a
/// unit Gaussian source of width σ = 0.07 centered at (0.5, 0.5).
pub fn main_problem() -> ProblemSpec {
    ProblemSpec::new(
        2e-3,
        main_beta(),
        SourceSpec::Gaussian {
            center: (0.5, 0.5),
            sigma: 0.07,
            amplitude: 1.0,
        },
    )
    .expect("valid benchmark parameters")
}

/// The exponential-layer problem with exact solution `ℓ(x)ℓ(y)`.
pub fn nist_problem(eps: f64) -> ProblemSpec {
    ProblemSpec::new(eps, nist_beta(), SourceSpec::NistLayer { eps })
        .expect("valid benchmark parameters")
}

/// Discretizations a scenario can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Centered Galerkin baseline.
    Galerkin,
    /// First-order coordinate upwinding.
    Upwind,
    /// Streamline (SUPG) stabilization with rhs correction.
    Supg,
    /// CIP-type second-difference penalty.
    Cip,
    /// LPS-type fluctuation penalty with rhs correction.
    Lps,
    /// AFC-inspired nonlinear edge limiter.
    Afc,
    /// Adaptive directional sparse correction.
    Adsc,
}

impl Method {
    /// All methods, in reporting order.
    pub const ALL: [Method; 7] = [
        Method::Galerkin,
        Method::Upwind,
        Method::Supg,
        Method::Cip,
        Method::Lps,
        Method::Afc,
        Method::Adsc,
    ];

    /// Stable lowercase name used in table rows and the CLI.
    pub fn name(self) -> &'static str {
        match self {
            Method::Galerkin => "galerkin",
            Method::Upwind => "upwind",
            Method::Supg => "supg",
            Method::Cip => "cip",
            Method::Lps => "lps",
            Method::Afc => "afc",
            Method::Adsc => "adsc",
        }
    }

    fn rank(self) -> usize {
        Method::ALL.iter().position(|&m| m == self).expect("listed")
    }
}

/// How a scenario obtains its reference solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSpec {
    /// Centered Galerkin solve on a fine uniform `n_ref × n_ref` mesh,
    /// restricted to the benchmark mesh by bilinear interpolation.
    FineGrid {
        /// Fine-mesh interval count.
        n_ref: usize,
    },
    /// Analytic samples of the problem's exact solution.
    ExactFormula,
}

/// A solved fine-grid reference, restrictable to any coarse benchmark mesh.
#[derive(Debug, Clone)]
pub struct FineReference {
    fine: GridFunction,
}

impl FineReference {
    /// Solve the centered scheme on the uniform `n_ref × n_ref` mesh.
    pub fn solve(spec: &ProblemSpec, n_ref: usize) -> Result<Self> {
        let mesh = build_uniform_mesh(n_ref)?;
        let a = assemble_galerkin(&mesh, spec);
        let f = assemble_source(&mesh, spec);
        let (u, _) = sparse::solve(&a, &f, DEFAULT_SOLVE_TOL)?;
        Ok(Self {
            fine: GridFunction::new(mesh, u)?,
        })
    }

    /// The fine-grid field itself.
    pub fn fine(&self) -> &GridFunction {
        &self.fine
    }

    /// Bilinear restriction to `target`'s interior nodes.
    pub fn restrict(&self, target: &Arc<Mesh2D>) -> Result<GridFunction> {
        interpolate_to_coarse(&self.fine, target)
    }
}

/// Reference field for one benchmark mesh.
pub fn compute_reference(
    spec: &ProblemSpec,
    reference: ReferenceSpec,
    target: &Arc<Mesh2D>,
) -> Result<GridFunction> {
    match reference {
        ReferenceSpec::ExactFormula => exact_solution_field(target, spec).ok_or_else(|| {
            Error::InvalidArgument(
                "exact-formula reference requires a source family with an exact solution".into(),
            )
        }),
        ReferenceSpec::FineGrid { n_ref } => {
            FineReference::solve(spec, n_ref)?.restrict(target)
        }
    }
}

/// Consistency self-check of the fine-grid reference: the discrete L²
/// difference of two fine solves (`n_ref_a`, `n_ref_b`) after restriction to
/// `target`.
pub fn reference_self_check(
    spec: &ProblemSpec,
    n_ref_a: usize,
    n_ref_b: usize,
    target: &Arc<Mesh2D>,
) -> Result<f64> {
    let a = FineReference::solve(spec, n_ref_a)?.restrict(target)?;
    let b = FineReference::solve(spec, n_ref_b)?.restrict(target)?;
    Ok(l2_distance(&a, &b))
}

/// Discrete L² norm of `a − b` (shared mesh).
pub fn l2_distance(a: &GridFunction, b: &GridFunction) -> f64 {
    let diff: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| x - y)
        .collect();
    discrete_l2_norm(&GridFunction::new(a.mesh().clone(), diff).expect("same mesh"))
}

/// Execution options shared by every scenario.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Parameters of the adaptive method (sweeps override per run).
    pub adsc: AdscParams,
    /// Detector threshold as a fraction of `‖U_ref‖∞`.
    pub detector_threshold_factor: f64,
    /// Extra `key=value` pairs echoed into the CSV header (applied overrides).
    pub echo: Vec<(String, String)>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            adsc: AdscParams::default(),
            detector_threshold_factor: DEFAULT_DETECTOR_THRESHOLD_FACTOR,
            echo: Vec::new(),
        }
    }
}

impl RunOptions {
    /// The full configuration echo: canonical parameters first, then any
    /// user-supplied override pairs, in a fixed order.
    pub fn config_echo(&self) -> Vec<(String, String)> {
        let p = &self.adsc;
        let mut out: Vec<(String, String)> = vec![
            ("gamma_min".into(), p.gamma_min.to_string()),
            ("gamma_max".into(), p.gamma_max.to_string()),
            ("kappa".into(), p.kappa.to_string()),
            ("omega".into(), p.omega.to_string()),
            ("delta_h".into(), p.delta_h.to_string()),
            ("eta_det".into(), p.eta_det.to_string()),
            ("activation_tol".into(), p.activation_tol.to_string()),
            ("max_iterations".into(), p.max_iterations.to_string()),
            (
                "detector_threshold_factor".into(),
                self.detector_threshold_factor.to_string(),
            ),
        ];
        out.extend(self.echo.iter().cloned());
        out
    }
}

/// One table row: a method on a mesh, with its diagnostics.
#[derive(Debug, Clone)]
pub struct BenchmarkRow {
    /// Scenario label; sweeps append their point as `name:key=value`.
    pub scenario: String,
    /// Method label (`galerkin`, `upwind`, …, or `upwind-supg` in 1D).
    pub method: String,
    /// Intervals per direction.
    pub ne: usize,
    /// Largest mesh step.
    pub h: f64,
    /// Mesh Péclet number `|β| h / (2ε)` built from the largest step.
    pub pe: f64,
    /// Error and oscillation diagnostics against the scenario reference.
    pub diagnostics: DiagnosticsRow,
    /// Inter-level L² convergence rate against the previous row of the same
    /// scenario and method.
    pub rate: Option<f64>,
    /// Iteration count, for the iterative methods.
    pub iterations: Option<usize>,
    /// Final relative activation variation of the adaptive loop.
    pub final_variation: Option<f64>,
    /// Distance to a designated baseline run (few-shot and fixed-reference
    /// scenarios; `0` for the baseline itself).
    pub distance: Option<f64>,
    /// Error message when the solve failed (diagnostics are NaN).
    pub failed: Option<String>,
}

impl BenchmarkRow {
    fn failed(scenario: &str, method: &str, mesh: &Mesh2D, pe: f64, message: String) -> Self {
        BenchmarkRow {
            scenario: scenario.to_string(),
            method: method.to_string(),
            ne: mesh.x.num_intervals(),
            h: mesh_h_max(mesh),
            pe,
            diagnostics: DiagnosticsRow {
                l2_error: f64::NAN,
                linf_error: f64::NAN,
                tv: f64::NAN,
                e_ext: f64::NAN,
                detector_count: 0,
                rho_stab_mean: None,
            },
            rate: None,
            iterations: None,
            final_variation: None,
            distance: None,
            failed: Some(message),
        }
    }
}

fn mesh_h_max(mesh: &Mesh2D) -> f64 {
    mesh.x
        .steps()
        .iter()
        .chain(mesh.y.steps())
        .fold(0.0f64, |m, &s| m.max(s))
}

/// Outcome of one discretization on one mesh.
#[derive(Debug, Clone)]
pub struct MethodRun {
    /// Discrete solution.
    pub solution: GridFunction,
    /// Added stabilization matrix (`None` for the plain Galerkin scheme).
    pub stabilization: Option<SparseOperator>,
    /// Iterations, for the iterative methods.
    pub iterations: Option<usize>,
    /// Final relative activation variation (adaptive method only).
    pub final_variation: Option<f64>,
}

/// Assemble and solve one method on one mesh.
pub fn run_method(
    method: Method,
    mesh: &Arc<Mesh2D>,
    spec: &ProblemSpec,
    f: &[f64],
    adsc: &AdscParams,
) -> Result<MethodRun> {
    let plain = |solution: GridFunction, stabilization: Option<SparseOperator>| MethodRun {
        solution,
        stabilization,
        iterations: None,
        final_variation: None,
    };
    match method {
        Method::Galerkin => {
            let a = assemble_galerkin(mesh, spec);
            let (u, _) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
            Ok(plain(GridFunction::new(mesh.clone(), u)?, None))
        }
        Method::Upwind => {
            let s = upwind_stabilization(mesh, spec)?;
            let a = assemble_galerkin(mesh, spec).add(&s)?;
            let (u, _) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
            Ok(plain(GridFunction::new(mesh.clone(), u)?, Some(s)))
        }
        Method::Supg => {
            let (a, rhs) = assemble_supg(mesh, spec, f)?;
            let s = supg_stabilization(mesh, spec)?;
            let (u, _) = sparse::solve(&a, &rhs, DEFAULT_SOLVE_TOL)?;
            Ok(plain(GridFunction::new(mesh.clone(), u)?, Some(s)))
        }
        Method::Cip => {
            let s = cip_stabilization(mesh, spec)?;
            let a = assemble_galerkin(mesh, spec).add(&s)?;
            let (u, _) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
            Ok(plain(GridFunction::new(mesh.clone(), u)?, Some(s)))
        }
        Method::Lps => {
            let (a, rhs) = assemble_lps(mesh, spec, f)?;
            let s = lps_stabilization(mesh, spec)?;
            let (u, _) = sparse::solve(&a, &rhs, DEFAULT_SOLVE_TOL)?;
            Ok(plain(GridFunction::new(mesh.clone(), u)?, Some(s)))
        }
        Method::Afc => {
            let r = solve_afc(mesh, spec, f, AFC_DEFAULT_ITERATIONS)?;
            Ok(MethodRun {
                solution: r.solution,
                stabilization: Some(r.stabilization),
                iterations: Some(r.iterations_used),
                final_variation: None,
            })
        }
        Method::Adsc => {
            let r = solve_adsc(mesh, spec, f, adsc, AdscMode::Coupled)?;
            let s = stabilization_matrix(
                mesh,
                spec,
                adsc,
                &r.activation.chi_x,
                &r.activation.chi_y,
            )?;
            Ok(MethodRun {
                solution: r.solution,
                stabilization: Some(s),
                iterations: Some(r.iterations_used),
                final_variation: Some(r.final_variation),
            })
        }
    }
}

/// Diagnostics of a solution against a reference field on the same mesh.
///
/// `stabilization` feeds the stabilized modal indicator; it is skipped on
/// nonuniform meshes, where the interior modal analysis does not apply.
pub fn diagnostics_for(
    solution: &GridFunction,
    reference: &GridFunction,
    spec: &ProblemSpec,
    stabilization: Option<&SparseOperator>,
    threshold_factor: f64,
) -> Result<DiagnosticsRow> {
    let mesh = solution.mesh();
    let diff: Vec<f64> = solution
        .values()
        .iter()
        .zip(reference.values())
        .map(|(&u, &r)| u - r)
        .collect();
    let diff = GridFunction::new(mesh.clone(), diff)?;
    let threshold = threshold_factor * discrete_linf_norm(reference);
    let rho_stab_mean = if mesh.is_uniform() && mesh.x.num_intervals() == mesh.y.num_intervals() {
        let modal = modal_set(spec.eps, spec.beta, mesh.x.num_intervals())?;
        let n = mesh.num_interior();
        let zero;
        let s = match stabilization {
            Some(s) => s,
            None => {
                zero = SparseOperator::from_triplets(n, n, &[])?;
                &zero
            }
        };
        Some(rayleigh_rho_stab(s, &modal)?)
    } else {
        None
    };
    Ok(DiagnosticsRow {
        l2_error: discrete_l2_norm(&diff),
        linf_error: discrete_linf_norm(&diff),
        tv: total_variation(solution),
        e_ext: extrema_violation(solution, reference).total,
        detector_count: detector_count(solution, spec.beta, threshold),
        rho_stab_mean,
    })
}

/// Fill the `rate` column: `log(e₁/e₂)/log(h₁/h₂)` between consecutive rows
/// of the same scenario and method (in list order).
pub fn fill_rates(rows: &mut [BenchmarkRow]) {
    for i in 1..rows.len() {
        let (prev, cur) = {
            let (a, b) = rows.split_at_mut(i);
            (&a[i - 1], &mut b[0])
        };
        if prev.scenario != cur.scenario || prev.method != cur.method {
            continue;
        }
        let (e1, e2) = (prev.diagnostics.l2_error, cur.diagnostics.l2_error);
        if !(e1.is_finite() && e2.is_finite()) || e1 <= 0.0 || e2 <= 0.0 || prev.h == cur.h {
            continue;
        }
        cur.rate = Some((e1 / e2).ln() / (prev.h / cur.h).ln());
    }
}

/// One mesh level of a table scenario: the mesh and the methods to run on it.
struct Level {
    mesh: Arc<Mesh2D>,
    methods: Vec<Method>,
}

/// A generic multi-level, multi-method table run.
struct TableRun {
    label: String,
    problem: ProblemSpec,
    levels: Vec<Level>,
    reference: ReferenceSpec,
}

impl TableRun {
    fn uniform(
        label: &str,
        problem: ProblemSpec,
        nes: &[usize],
        methods: &[Method],
        reference: ReferenceSpec,
    ) -> Result<Self> {
        let levels = nes
            .iter()
            .map(|&ne| {
                Ok(Level {
                    mesh: build_uniform_mesh(ne)?,
                    methods: methods.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: label.to_string(),
            problem,
            levels,
            reference,
        })
    }

    fn run(&self, opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
        let fine = match self.reference {
            ReferenceSpec::FineGrid { n_ref } => Some(FineReference::solve(&self.problem, n_ref)?),
            ReferenceSpec::ExactFormula => None,
        };
        let mut rows = Vec::new();
        for level in &self.levels {
            let mesh = &level.mesh;
            let reference = match &fine {
                Some(fine) => fine.restrict(mesh)?,
                None => compute_reference(&self.problem, self.reference, mesh)?,
            };
            let f = assemble_source(mesh, &self.problem);
            let pe = self.problem.mesh_peclet(mesh);
            for &method in &level.methods {
                match run_method(method, mesh, &self.problem, &f, &opts.adsc) {
                    Ok(run) => {
                        let diagnostics = diagnostics_for(
                            &run.solution,
                            &reference,
                            &self.problem,
                            run.stabilization.as_ref(),
                            opts.detector_threshold_factor,
                        )?;
                        rows.push(BenchmarkRow {
                            scenario: self.label.clone(),
                            method: method.name().to_string(),
                            ne: mesh.x.num_intervals(),
                            h: mesh_h_max(mesh),
                            pe,
                            diagnostics,
                            rate: None,
                            iterations: run.iterations,
                            final_variation: run.final_variation,
                            distance: None,
                            failed: None,
                        });
                    }
                    Err(e) => rows.push(BenchmarkRow::failed(
                        &self.label,
                        method.name(),
                        mesh,
                        pe,
                        e.to_string(),
                    )),
                }
            }
        }
        // Stable ordering key (scenario, method, Ne): method-major so that
        // consecutive rows of one method form its refinement family.
        rows.sort_by_key(|r| {
            let rank = Method::ALL
                .iter()
                .position(|m| m.name() == r.method)
                .unwrap_or(usize::MAX);
            (r.scenario.clone(), rank, r.ne)
        });
        fill_rates(&mut rows);
        Ok(rows)
    }
}

/// A named benchmark scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Registry name (the CLI argument).
    pub name: &'static str,
    /// One-line description shown by `list`.
    pub summary: &'static str,
    kind: ScenarioKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScenarioKind {
    Main2d,
    Inactive,
    Active,
    NistUniform2,
    NistUniform3,
    NistShishkin2,
    EpsSweep,
    FewShot,
    Direction,
    Rhs,
    Sensitivity,
    FixedRef,
    OneDim,
}

/// All registered scenarios, in reporting order.
pub fn registry() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "main2d",
            summary: "Gaussian-source directional test, all methods, mesh family Ne=30..120",
            kind: ScenarioKind::Main2d,
        },
        Scenario {
            name: "inactive",
            summary: "manufactured sin-sin solution, subcritical Pe (adaptive method inactive)",
            kind: ScenarioKind::Inactive,
        },
        Scenario {
            name: "active",
            summary: "manufactured sin-sin solution, supercritical Pe (active correction)",
            kind: ScenarioKind::Active,
        },
        Scenario {
            name: "nist-uniform-2",
            summary: "exponential-layer problem, eps=1e-2, uniform meshes",
            kind: ScenarioKind::NistUniform2,
        },
        Scenario {
            name: "nist-uniform-3",
            summary: "exponential-layer problem, eps=1e-3, uniform meshes",
            kind: ScenarioKind::NistUniform3,
        },
        Scenario {
            name: "nist-shishkin-2",
            summary: "exponential-layer problem, eps=1e-2, Shishkin meshes",
            kind: ScenarioKind::NistShishkin2,
        },
        Scenario {
            name: "eps-sweep",
            summary: "layer problem on a fixed Ne=64 grid, eps from 1e-1 down to 1e-5",
            kind: ScenarioKind::EpsSweep,
        },
        Scenario {
            name: "few-shot",
            summary: "capped activation updates (5, 10, uncapped) over the mesh family",
            kind: ScenarioKind::FewShot,
        },
        Scenario {
            name: "direction",
            summary: "convection-direction sensitivity: beta = (1,0), (1,1)/sqrt2, (2,1)/sqrt5",
            kind: ScenarioKind::Direction,
        },
        Scenario {
            name: "rhs",
            summary: "right-hand-side sensitivity: narrow Gaussian and double source",
            kind: ScenarioKind::Rhs,
        },
        Scenario {
            name: "sensitivity",
            summary: "parameter bounds, relaxation, warm starts, and iteration caps",
            kind: ScenarioKind::Sensitivity,
        },
        Scenario {
            name: "fixed-ref",
            summary: "activation frozen from the interpolated fine reference vs coupled run",
            kind: ScenarioKind::FixedRef,
        },
        Scenario {
            name: "1d",
            summary: "reduced one-dimensional benchmark (eps=1e-3, beta=1, Ne=80)",
            kind: ScenarioKind::OneDim,
        },
    ]
}

/// Look up a scenario by registry name.
pub fn find(name: &str) -> Option<Scenario> {
    registry().into_iter().find(|s| s.name == name)
}

impl Scenario {
    /// Run this scenario with the given options.
    pub fn run(&self, opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
        run_scenario(self, opts)
    }
}

/// Run a scenario: one row per (method, mesh level), deterministic for a
/// fixed configuration. A failed solve flags its row and the run continues.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    match scenario.kind {
        ScenarioKind::Main2d => run_main2d(opts),
        ScenarioKind::Inactive => TableRun::uniform(
            "inactive",
            ProblemSpec::new(1.0, main_beta(), SourceSpec::ManufacturedSine)?,
            &[20, 40, 80, 160],
            &[Method::Galerkin, Method::Adsc],
            ReferenceSpec::ExactFormula,
        )?
        .run(opts),
        ScenarioKind::Active => TableRun::uniform(
            "active",
            ProblemSpec::new(2e-3, main_beta(), SourceSpec::ManufacturedSine)?,
            &[30, 45, 60, 90, 120],
            &[Method::Galerkin, Method::Adsc],
            ReferenceSpec::ExactFormula,
        )?
        .run(opts),
        ScenarioKind::NistUniform2 => TableRun::uniform(
            "nist-uniform-2",
            nist_problem(1e-2),
            &[30, 45, 60, 90, 120],
            &[Method::Galerkin, Method::Upwind, Method::Supg, Method::Adsc],
            ReferenceSpec::ExactFormula,
        )?
        .run(opts),
        ScenarioKind::NistUniform3 => TableRun::uniform(
            "nist-uniform-3",
            nist_problem(1e-3),
            &[30, 45, 60, 90, 120],
            &[Method::Galerkin, Method::Upwind, Method::Supg, Method::Adsc],
            ReferenceSpec::ExactFormula,
        )?
        .run(opts),
        ScenarioKind::NistShishkin2 => run_nist_shishkin(opts),
        ScenarioKind::EpsSweep => run_eps_sweep(opts),
        ScenarioKind::FewShot => few_shot_study(
            &main_problem(),
            &[30, 45, 60, 90, 120],
            &[5, 10],
            ReferenceSpec::FineGrid { n_ref: DEFAULT_N_REF },
            opts,
        ),
        ScenarioKind::Direction => run_direction(opts),
        ScenarioKind::Rhs => run_rhs(opts),
        ScenarioKind::Sensitivity => sensitivity_sweep(&SensitivityGrid::default(), opts),
        ScenarioKind::FixedRef => run_fixed_ref(opts),
        ScenarioKind::OneDim => one_dim::run(opts),
    }
}

fn run_main2d(opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let all = Method::ALL.to_vec();
    let family = vec![Method::Galerkin, Method::Supg, Method::Adsc];
    let levels = [30usize, 45, 60, 90, 120]
        .iter()
        .map(|&ne| {
            Ok(Level {
                mesh: build_uniform_mesh(ne)?,
                methods: if ne == 45 { all.clone() } else { family.clone() },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TableRun {
        label: "main2d".to_string(),
        problem: main_problem(),
        levels,
        reference: ReferenceSpec::FineGrid { n_ref: DEFAULT_N_REF },
    }
    .run(opts)
}

fn run_nist_shishkin(opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let eps = 1e-2;
    let levels = [30usize, 60, 90, 120]
        .iter()
        .map(|&ne| {
            Ok(Level {
                mesh: build_shishkin_mesh(ne, eps)?,
                methods: vec![Method::Galerkin, Method::Upwind, Method::Supg, Method::Adsc],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TableRun {
        label: "nist-shishkin-2".to_string(),
        problem: nist_problem(eps),
        levels,
        reference: ReferenceSpec::ExactFormula,
    }
    .run(opts)
}

fn run_eps_sweep(opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let sweep: [(f64, &str); 5] = [
        (1e-1, "1e-1"),
        (1e-2, "1e-2"),
        (1e-3, "1e-3"),
        (1e-4, "1e-4"),
        (1e-5, "1e-5"),
    ];
    let mut rows = Vec::new();
    for (eps, tag) in sweep {
        let label = format!("eps-sweep:eps={tag}");
        let mut sub = TableRun::uniform(
            &label,
            nist_problem(eps),
            &[64],
            &[Method::Galerkin, Method::Upwind, Method::Supg, Method::Adsc],
            ReferenceSpec::ExactFormula,
        )?
        .run(opts)?;
        rows.append(&mut sub);
    }
    Ok(rows)
}

fn run_direction(opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let sqrt2 = 2.0f64.sqrt();
    let sqrt5 = 5.0f64.sqrt();
    let directions: [([f64; 2], &str); 3] = [
        ([1.0, 0.0], "1-0"),
        ([1.0 / sqrt2, 1.0 / sqrt2], "1-1"),
        ([2.0 / sqrt5, 1.0 / sqrt5], "2-1"),
    ];
    let mut rows = Vec::new();
    for (beta, tag) in directions {
        let problem = ProblemSpec::new(
            2e-3,
            beta,
            SourceSpec::Gaussian {
                center: (0.5, 0.5),
                sigma: 0.07,
                amplitude: 1.0,
            },
        )?;
        let label = format!("direction:beta={tag}");
        let mut sub = TableRun::uniform(
            &label,
            problem,
            &[45],
            &Method::ALL,
            ReferenceSpec::FineGrid { n_ref: DEFAULT_N_REF },
        )?
        .run(opts)?;
        rows.append(&mut sub);
    }
    Ok(rows)
}

fn run_rhs(opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let sources: [(SourceSpec, &str); 2] = [
        (
            SourceSpec::Gaussian {
                center: (0.5, 0.5),
                sigma: 0.035,
                amplitude: 1.0,
            },
            "narrow-gaussian",
        ),
        (
            SourceSpec::DoubleGaussian {
                centers: [(0.35, 0.35), (0.65, 0.65)],
                sigma: 0.07,
                amplitude: 1.0,
            },
            "double-source",
        ),
    ];
    let mut rows = Vec::new();
    for (source, tag) in sources {
        let problem = ProblemSpec::new(2e-3, main_beta(), source)?;
        let label = format!("rhs:{tag}");
        let mut sub = TableRun::uniform(
            &label,
            problem,
            &[45],
            &Method::ALL,
            ReferenceSpec::FineGrid { n_ref: DEFAULT_N_REF },
        )?
        .run(opts)?;
        rows.append(&mut sub);
    }
    Ok(rows)
}

/// Run the adaptive method with capped activation updates over a mesh family
/// and report the distance `‖U_cap − U_conv‖_{0,h}` to the uncapped run.
///
/// Emits one block of rows per cap (labeled `…:cap=<k>`) followed by the
/// uncapped baseline block (`…:uncapped`, distance exactly zero).
pub fn few_shot_study(
    problem: &ProblemSpec,
    nes: &[usize],
    caps: &[usize],
    reference: ReferenceSpec,
    opts: &RunOptions,
) -> Result<Vec<BenchmarkRow>> {
    let fine = match reference {
        ReferenceSpec::FineGrid { n_ref } => Some(FineReference::solve(problem, n_ref)?),
        ReferenceSpec::ExactFormula => None,
    };
    struct LevelRun {
        mesh: Arc<Mesh2D>,
        reference: GridFunction,
        f: Vec<f64>,
        pe: f64,
        baseline: crate::adsc::AdscResult,
    }
    let mut levels = Vec::new();
    for &ne in nes {
        let mesh = build_uniform_mesh(ne)?;
        let reference_field = match &fine {
            Some(fine) => fine.restrict(&mesh)?,
            None => compute_reference(problem, reference, &mesh)?,
        };
        let f = assemble_source(&mesh, problem);
        let pe = problem.mesh_peclet(&mesh);
        let baseline = solve_adsc(&mesh, problem, &f, &opts.adsc, AdscMode::Coupled)?;
        levels.push(LevelRun {
            mesh,
            reference: reference_field,
            f,
            pe,
            baseline,
        });
    }
    let mut rows = Vec::new();
    let mut push_run = |label: String,
                        level: &LevelRun,
                        result: &crate::adsc::AdscResult,
                        distance: f64|
     -> Result<()> {
        let s = stabilization_matrix(
            &level.mesh,
            problem,
            &opts.adsc,
            &result.activation.chi_x,
            &result.activation.chi_y,
        )?;
        let diagnostics = diagnostics_for(
            &result.solution,
            &level.reference,
            problem,
            Some(&s),
            opts.detector_threshold_factor,
        )?;
        rows.push(BenchmarkRow {
            scenario: label,
            method: Method::Adsc.name().to_string(),
            ne: level.mesh.x.num_intervals(),
            h: mesh_h_max(&level.mesh),
            pe: level.pe,
            diagnostics,
            rate: None,
            iterations: Some(result.iterations_used),
            final_variation: Some(result.final_variation),
            distance: Some(distance),
            failed: None,
        });
        Ok(())
    };
    for &cap in caps {
        for level in &levels {
            let mut params = opts.adsc;
            params.few_shot_cap = Some(cap);
            let result = solve_adsc(&level.mesh, problem, &level.f, &params, AdscMode::Coupled)?;
            let distance = l2_distance(&result.solution, &level.baseline.solution);
            push_run(format!("few-shot:cap={cap}"), level, &result, distance)?;
        }
    }
    for level in &levels {
        push_run("few-shot:uncapped".to_string(), level, &level.baseline, 0.0)?;
    }
    Ok(rows)
}

/// The parameter grid of the `sensitivity` scenario.
#[derive(Debug, Clone)]
pub struct SensitivityGrid {
    /// `(γ_min, γ_max, κ)` triples.
    pub bounds: Vec<(f64, f64, f64)>,
    /// Relaxation weights ω.
    pub omegas: Vec<f64>,
    /// Warm-start variants.
    pub warm_starts: Vec<WarmStart>,
    /// Hard iteration caps.
    pub iteration_caps: Vec<usize>,
}

impl Default for SensitivityGrid {
    fn default() -> Self {
        Self {
            bounds: vec![
                (0.08, 0.25, 2.0),
                (0.10, 0.30, 1.5),
                (0.10, 0.30, 2.0),
                (0.12, 0.35, 2.0),
            ],
            omegas: vec![0.20, 0.35, 0.50, 0.75, 1.00],
            warm_starts: vec![
                WarmStart::Galerkin,
                WarmStart::Zero,
                WarmStart::CoarseGrid,
                WarmStart::Upwind,
            ],
            iteration_caps: vec![100, 300, 500, 1000],
        }
    }
}

fn warm_start_tag(start: WarmStart) -> &'static str {
    match start {
        WarmStart::Galerkin => "galerkin",
        WarmStart::Zero => "zero",
        WarmStart::Upwind => "upwind",
        WarmStart::CoarseGrid => "coarse",
    }
}

/// Sweep the adaptive method's parameters on the main problem (Ne = 45):
/// one run per (γ_min, γ_max, κ) triple, relaxation weight, warm start, and
/// iteration cap.
pub fn sensitivity_sweep(grid: &SensitivityGrid, opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let problem = main_problem();
    let mesh = build_uniform_mesh(45)?;
    let reference =
        FineReference::solve(&problem, DEFAULT_N_REF)?.restrict(&mesh)?;
    let f = assemble_source(&mesh, &problem);
    let pe = problem.mesh_peclet(&mesh);
    let mut rows = Vec::new();
    let mut run_point = |label: String, params: AdscParams| -> Result<()> {
        match solve_adsc(&mesh, &problem, &f, &params, AdscMode::Coupled) {
            Ok(result) => {
                let s = stabilization_matrix(
                    &mesh,
                    &problem,
                    &params,
                    &result.activation.chi_x,
                    &result.activation.chi_y,
                )?;
                let diagnostics = diagnostics_for(
                    &result.solution,
                    &reference,
                    &problem,
                    Some(&s),
                    opts.detector_threshold_factor,
                )?;
                rows.push(BenchmarkRow {
                    scenario: label,
                    method: Method::Adsc.name().to_string(),
                    ne: 45,
                    h: mesh_h_max(&mesh),
                    pe,
                    diagnostics,
                    rate: None,
                    iterations: Some(result.iterations_used),
                    final_variation: Some(result.final_variation),
                    distance: None,
                    failed: None,
                });
            }
            Err(e) => rows.push(BenchmarkRow::failed(
                &label,
                Method::Adsc.name(),
                &mesh,
                pe,
                e.to_string(),
            )),
        }
        Ok(())
    };
    for &(gamma_min, gamma_max, kappa) in &grid.bounds {
        let mut params = opts.adsc;
        params.gamma_min = gamma_min;
        params.gamma_max = gamma_max;
        params.kappa = kappa;
        run_point(
            format!("sensitivity:gamma={gamma_min}-{gamma_max}-{kappa}"),
            params,
        )?;
    }
    for &omega in &grid.omegas {
        let mut params = opts.adsc;
        params.omega = omega;
        run_point(format!("sensitivity:omega={omega}"), params)?;
    }
    for &start in &grid.warm_starts {
        let mut params = opts.adsc;
        params.warm_start = start;
        run_point(format!("sensitivity:start={}", warm_start_tag(start)), params)?;
    }
    for &cap in &grid.iteration_caps {
        let mut params = opts.adsc;
        params.max_iterations = cap;
        run_point(format!("sensitivity:cap={cap}"), params)?;
    }
    Ok(rows)
}

fn run_fixed_ref(opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let problem = main_problem();
    let mesh = build_uniform_mesh(45)?;
    let reference =
        FineReference::solve(&problem, DEFAULT_N_REF)?.restrict(&mesh)?;
    let f = assemble_source(&mesh, &problem);
    let pe = problem.mesh_peclet(&mesh);
    let coupled = solve_adsc(&mesh, &problem, &f, &opts.adsc, AdscMode::Coupled)?;
    let frozen = solve_adsc(
        &mesh,
        &problem,
        &f,
        &opts.adsc,
        AdscMode::FixedReference(&reference),
    )?;
    let mut rows = Vec::new();
    for (label, result, iterations, distance) in [
        (
            "fixed-ref:frozen",
            &frozen,
            None,
            l2_distance(&frozen.solution, &coupled.solution),
        ),
        (
            "fixed-ref:coupled",
            &coupled,
            Some(coupled.iterations_used),
            0.0,
        ),
    ] {
        let s = stabilization_matrix(
            &mesh,
            &problem,
            &opts.adsc,
            &result.activation.chi_x,
            &result.activation.chi_y,
        )?;
        let diagnostics = diagnostics_for(
            &result.solution,
            &reference,
            &problem,
            Some(&s),
            opts.detector_threshold_factor,
        )?;
        rows.push(BenchmarkRow {
            scenario: label.to_string(),
            method: Method::Adsc.name().to_string(),
            ne: 45,
            h: mesh_h_max(&mesh),
            pe,
            diagnostics,
            rate: None,
            iterations,
            final_variation: iterations.map(|_| result.final_variation),
            distance: Some(distance),
            failed: None,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Render rows as CSV: `# key=value` header lines, one column-header line,
/// then one line per row with floats at 17 significant digits. The fixed
/// column order is `scenario, method, Ne, h, Pe, l2, linf, tv, e_ext, det,
/// rho_stab, rate, iterations, final_variation`; a trailing `distance`
/// column appears when any row carries one. Optional values render as empty
/// fields, failed solves as `nan`.
pub fn rows_to_csv(rows: &[BenchmarkRow], echo: &[(String, String)]) -> String {
    let with_distance = rows.iter().any(|r| r.distance.is_some());
    let mut out = String::new();
    for (key, value) in echo {
        let _ = writeln!(out, "# {key}={value}");
    }
    out.push_str("scenario,method,Ne,h,Pe,l2,linf,tv,e_ext,det,rho_stab,rate,iterations,final_variation");
    if with_distance {
        out.push_str(",distance");
    }
    out.push('\n');
    for r in rows {
        let d = &r.diagnostics;
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.method,
            r.ne,
            fmt_float(r.h),
            fmt_float(r.pe),
            fmt_float(d.l2_error),
            fmt_float(d.linf_error),
            fmt_float(d.tv),
            fmt_float(d.e_ext),
            d.detector_count,
            fmt_opt_float(d.rho_stab_mean),
            fmt_opt_float(r.rate),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            fmt_opt_float(r.final_variation),
        );
        if with_distance {
            out.push(',');
            out.push_str(&fmt_opt_float(r.distance));
        }
        out.push('\n');
    }
    out
}

fn fmt_short(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else if x.abs() >= 0.01 && x.abs() < 1000.0 {
        format!("{x:.4}")
    } else {
        format!("{x:.3e}")
    }
}

/// Render rows as a readable markdown table (values rounded to a few
/// significant digits; the CSV carries full precision).
pub fn rows_to_markdown(title: &str, summary: &str, rows: &[BenchmarkRow]) -> String {
    let with_distance = rows.iter().any(|r| r.distance.is_some());
    let mut out = format!("## {title}\n\n{summary}\n\n");
    out.push_str("| scenario | method | Ne | h | Pe | L2 | Linf | TV | E_ext | Det | rho_stab | rate | iters | final_var |");
    if with_distance {
        out.push_str(" distance |");
    }
    out.push('\n');
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|---|---|");
    if with_distance {
        out.push_str("---|");
    }
    out.push('\n');
    for r in rows {
        let d = &r.diagnostics;
        let method = match &r.failed {
            Some(_) => format!("{} (failed)", r.method),
            None => r.method.clone(),
        };
        let _ = write!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.scenario,
            method,
            r.ne,
            fmt_short(r.h),
            fmt_short(r.pe),
            fmt_short(d.l2_error),
            fmt_short(d.linf_error),
            fmt_short(d.tv),
            fmt_short(d.e_ext),
            d.detector_count,
            d.rho_stab_mean.map(fmt_short).unwrap_or_default(),
            r.rate.map(fmt_short).unwrap_or_default(),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            r.final_variation.map(fmt_short).unwrap_or_default(),
        );
        if with_distance {
            let _ = write!(out, " {} |", r.distance.map(fmt_short).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

/// Write `<dir>/<name>.csv` and `<dir>/<name>.md` for a scenario's rows and
/// return both paths. Creates `dir` if needed.
pub fn write_outputs(
    dir: &Path,
    scenario: &Scenario,
    rows: &[BenchmarkRow],
    opts: &RunOptions,
) -> io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let mut echo = vec![("scenario".to_string(), scenario.name.to_string())];
    echo.extend(opts.config_echo());
    let csv_path = dir.join(format!("{}.csv", scenario.name));
    std::fs::write(&csv_path, rows_to_csv(rows, &echo))?;
    let md_path = dir.join(format!("{}.md", scenario.name));
    std::fs::write(&md_path, rows_to_markdown(scenario.name, scenario.summary, rows))?;
    Ok((csv_path, md_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn registry_names_are_unique_and_findable() {
        let names: Vec<&str> = registry().iter().map(|s| s.name).collect();
        let expected = [
            "main2d",
            "inactive",
            "active",
            "nist-uniform-2",
            "nist-uniform-3",
            "nist-shishkin-2",
            "eps-sweep",
            "few-shot",
            "direction",
            "rhs",
            "sensitivity",
            "fixed-ref",
            "1d",
        ];
        assert_eq!(names, expected);
        for name in expected {
            assert!(find(name).is_some(), "{name} not found");
        }
        assert!(find("nope").is_none());
    }

    #[test]
    fn inactive_scenario_matches_recorded_errors_and_rates() {
        let rows = find("inactive").unwrap().run(&RunOptions::default()).unwrap();
        assert_eq!(rows.len(), 8);
        let expected = [1.039e-3, 2.594e-4, 6.484e-5, 1.621e-5];
        for method in ["galerkin", "adsc"] {
            let sub: Vec<&BenchmarkRow> =
                rows.iter().filter(|r| r.method == method).collect();
            assert_eq!(sub.len(), 4);
            for (row, want) in sub.iter().zip(expected) {
                assert_relative_eq!(row.diagnostics.l2_error, want, max_relative = 1e-2);
            }
            for row in &sub[1..] {
                let rate = row.rate.expect("refinement rate");
                assert!((rate - 2.0).abs() <= 0.05, "rate {rate} not second order");
            }
        }
        // Subcritical Péclet: the adaptive correction vanishes and the rows
        // coincide with the centered baseline bit for bit.
        let gal: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.method == "galerkin").collect();
        let adsc: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.method == "adsc").collect();
        for (g, a) in gal.iter().zip(&adsc) {
            assert_eq!(g.diagnostics.l2_error.to_bits(), a.diagnostics.l2_error.to_bits());
            assert_eq!(g.diagnostics.tv.to_bits(), a.diagnostics.tv.to_bits());
        }
    }

    #[test]
    fn active_galerkin_error_at_ne30_matches_recorded_value() {
        let run = TableRun::uniform(
            "active",
            ProblemSpec::new(2e-3, main_beta(), SourceSpec::ManufacturedSine).unwrap(),
            &[30],
            &[Method::Galerkin],
            ReferenceSpec::ExactFormula,
        )
        .unwrap()
        .run(&RunOptions::default())
        .unwrap();
        assert_relative_eq!(run[0].diagnostics.l2_error, 9.076e-4, max_relative = 1e-2);
    }

    #[test]
    fn nist_eps3_galerkin_extrema_violation_at_ne30() {
        let run = TableRun::uniform(
            "nist",
            nist_problem(1e-3),
            &[30],
            &[Method::Galerkin],
            ReferenceSpec::ExactFormula,
        )
        .unwrap()
        .run(&RunOptions::default())
        .unwrap();
        assert_relative_eq!(run[0].diagnostics.e_ext, 2.200, max_relative = 2e-2);
    }

    #[test]
    fn eps_sweep_is_inactive_at_large_diffusion() {
        let rows = run_eps_sweep(&RunOptions::default()).unwrap();
        let at = |tag: &str, method: &str| -> &BenchmarkRow {
            rows.iter()
                .find(|r| r.scenario == format!("eps-sweep:eps={tag}") && r.method == method)
                .unwrap()
        };
        // Pe_max < 1 at eps = 1e-1 and 1e-2: identical to the centered scheme.
        for tag in ["1e-1", "1e-2"] {
            let g = at(tag, "galerkin");
            let a = at(tag, "adsc");
            assert!(g.pe < 1.0);
            assert_eq!(g.diagnostics.l2_error.to_bits(), a.diagnostics.l2_error.to_bits());
        }
        // Small diffusion: extrema control holds while the centered scheme
        // violates the exact range.
        for tag in ["1e-3", "1e-4", "1e-5"] {
            let g = at(tag, "galerkin");
            let a = at(tag, "adsc");
            assert!(a.diagnostics.e_ext < 1e-12, "adsc E_ext {}", a.diagnostics.e_ext);
            assert!(g.diagnostics.e_ext > 1e-2, "galerkin E_ext {}", g.diagnostics.e_ext);
        }
    }

    #[test]
    fn few_shot_cap_at_convergence_has_zero_distance() {
        let rows = few_shot_study(
            &main_problem(),
            &[30],
            &[1000],
            ReferenceSpec::FineGrid { n_ref: 120 },
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        // Cap far above the convergence point reproduces the baseline run.
        assert_eq!(rows[0].distance, Some(0.0));
        assert_eq!(rows[1].scenario, "few-shot:uncapped");
        assert_eq!(rows[1].distance, Some(0.0));
        assert_eq!(rows[0].iterations, rows[1].iterations);
    }

    #[test]
    fn reference_self_check_is_small_on_nested_grids() {
        let coarse = build_uniform_mesh(16).unwrap();
        let problem = ProblemSpec::new(0.5, main_beta(), SourceSpec::ManufacturedSine).unwrap();
        let diff = reference_self_check(&problem, 64, 96, &coarse).unwrap();
        assert!(diff < 1e-3, "self-check difference {diff}");
    }

    #[test]
    fn csv_output_is_stable_and_carries_the_fixed_columns() {
        let rows = TableRun::uniform(
            "inactive",
            ProblemSpec::new(1.0, main_beta(), SourceSpec::ManufacturedSine).unwrap(),
            &[20, 40],
            &[Method::Galerkin],
            ReferenceSpec::ExactFormula,
        )
        .unwrap()
        .run(&RunOptions::default())
        .unwrap();
        let echo = vec![("scenario".to_string(), "inactive".to_string())];
        let a = rows_to_csv(&rows, &echo);
        let b = rows_to_csv(&rows, &echo);
        assert_eq!(a, b, "emission must be deterministic");
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some("# scenario=inactive"));
        assert_eq!(
            lines.next(),
            Some("scenario,method,Ne,h,Pe,l2,linf,tv,e_ext,det,rho_stab,rate,iterations,final_variation")
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("inactive,galerkin,20,"));
        // Second row of the same method carries the inter-level rate.
        let second = lines.next().unwrap();
        let rate_field = second.split(',').nth(11).unwrap();
        let rate: f64 = rate_field.parse().unwrap();
        assert_abs_diff_eq!(rate, 2.0, epsilon = 0.05);
        let markdown = rows_to_markdown("inactive", "summary", &rows);
        assert!(markdown.contains("| inactive | galerkin | 20 |"));
    }
}
