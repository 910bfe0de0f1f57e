//! The ADSC correction (Adaptive Directional Sparse Correction):
//! directional detectors, activation transfer, the saturating γ-law, edge
//! diffusion coefficients, and the monotone activation iteration.
//!
//! The correction is `S = D_xᵀW_xD_x + D_yᵀW_yD_y` with nonnegative
//! edge weights `αˣ_e = |β₁| h_e (γ₀ + γ₁ η_Pe χˣ_e)` (y analogous): a
//! baseline first-order edge diffusion plus a detector-driven boost, active
//! only where the mesh Péclet number exceeds one.

use std::sync::Arc;

use crate::grid::{self, GridFunction, Mesh2D};
use crate::operators::{
    assemble_galerkin, assemble_source, assemble_upwind, edge_diffusion, edge_steps, Direction,
    ProblemSpec,
};
use crate::sparse::{self, SolveReport, SparseOperator, DEFAULT_SOLVE_TOL};
use crate::{Error, Result};

/// Nodal activation threshold used for the reported active-node count.
pub const ACTIVE_NODE_THRESHOLD: f64 = 1e-3;

/// Which directional detector drives the activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    /// Lipschitz score `Θ` composed with the saturation `t ↦ t/(t+η_det)`.
    Regularized,
    /// Binary indicator of a directional sign change.
    Sharp,
}

/// How nodal activation is transferred to edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    /// `χˣ_{i+1/2,j} = (χ_ij + χ_{i+1,j})/2`, reading zero outside.
    Averaged,
    /// Componentwise maximum of the two endpoint values.
    Max,
}

/// Initial iterate for the coupled activation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStart {
    /// Centered Galerkin solve (the default).
    Galerkin,
    /// Zero field.
    Zero,
    /// First-order coordinate-upwind solve.
    Upwind,
    /// Galerkin solve on the `⌊Ne/2⌋` mesh, prolonged bilinearly.
    CoarseGrid,
}

/// Parameters of the ADSC method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdscParams {
    /// Lower γ bound (baseline strength floor).
    pub gamma_min: f64,
    /// Upper γ bound (saturation value).
    pub gamma_max: f64,
    /// Detector-boost multiplier `γ₁ = κ γ₀`, `κ ≥ 1`.
    pub kappa: f64,
    /// Relaxation weight `ω ∈ (0, 1]` of the activation loop.
    pub omega: f64,
    /// Detector normalization floor `δ_h > 0`.
    pub delta_h: f64,
    /// Saturation scale `η_det > 0` of the activation map.
    pub eta_det: f64,
    /// Stopping tolerance on the relative activation change.
    pub activation_tol: f64,
    /// Hard cap on activation iterations.
    pub max_iterations: usize,
    /// Optional few-shot cap (overrides `max_iterations` when smaller).
    pub few_shot_cap: Option<usize>,
    /// Detector variant.
    pub detector_kind: DetectorKind,
    /// Edge-transfer variant.
    pub transfer_kind: TransferKind,
    /// Warm start of the coupled loop.
    pub warm_start: WarmStart,
}

impl Default for AdscParams {
    fn default() -> Self {
        Self {
            gamma_min: 0.08,
            gamma_max: 0.25,
            kappa: 2.0,
            omega: 0.35,
            delta_h: 1e-12,
            eta_det: 5e-2,
            activation_tol: 1e-8,
            max_iterations: 1000,
            few_shot_cap: None,
            detector_kind: DetectorKind::Regularized,
            transfer_kind: TransferKind::Averaged,
            warm_start: WarmStart::Galerkin,
        }
    }
}

impl AdscParams {
    /// Check the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.gamma_min && self.gamma_min <= self.gamma_max) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= gamma_min <= gamma_max, got ({}, {})",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "omega must lie in (0, 1], got {}",
                self.omega
            )));
        }
        if !(self.kappa >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be >= 1, got {}",
                self.kappa
            )));
        }
        if !(self.delta_h > 0.0) || !(self.eta_det > 0.0) {
            return Err(Error::InvalidArgument(
                "delta_h and eta_det must be positive".into(),
            ));
        }
        if !(self.activation_tol >= 0.0) {
            return Err(Error::InvalidArgument("activation_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// Nodal and per-edge activation values, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationField {
    /// Nodal activation χ.
    pub chi: Vec<f64>,
    /// x-edge activation (layout of [`assemble_edge_difference`] x-rows).
    ///
    /// [`assemble_edge_difference`]: crate::operators::assemble_edge_difference
    pub chi_x: Vec<f64>,
    /// y-edge activation.
    pub chi_y: Vec<f64>,
}

/// Outcome of an ADSC solve.
#[derive(Debug, Clone)]
pub struct AdscResult {
    /// Final fixed-activation solution.
    pub solution: GridFunction,
    /// Frozen activation.
    pub activation: ActivationField,
    /// Activation iterations performed (0 for the fixed modes).
    pub iterations_used: usize,
    /// Relative activation change at the last update.
    pub final_variation: f64,
    /// Unweighted nodal activation sum Σχ.
    pub activation_mass: f64,
    /// Number of nodes with `χ > 1e-3`.
    pub active_node_count: usize,
    /// Report of the final fixed-activation linear solve.
    pub solve_report: SolveReport,
    /// Whether the loop reached the activation tolerance (fixed modes: true).
    pub converged: bool,
}

/// How the activation is obtained.
#[derive(Debug, Clone, Copy)]
pub enum AdscMode<'a> {
    /// Full detector–solve coupling with monotone updates.
    Coupled,
    /// Skip the loop; use this nodal activation as-is.
    FixedActivation(&'a [f64]),
    /// Build the activation once from this reference field, then freeze it.
    FixedReference(&'a GridFunction),
}

/// Backward and forward directional differences `(D⁻_β U, D⁺_β U)` at every
/// interior node, in lexicographic order.
///
/// With `β_r⁺ = max(β_r, 0)` and `β_r⁻ = min(β_r, 0)`:
///
/// ```text
/// D⁻_β U = β₁⁺ D⁻ₓU + β₁⁻ D⁺ₓU + β₂⁺ D⁻ᵧU + β₂⁻ D⁺ᵧU   (upwind side)
/// D⁺_β U = β₁⁺ D⁺ₓU + β₁⁻ D⁻ₓU + β₂⁺ D⁺ᵧU + β₂⁻ D⁻ᵧU   (downwind side)
/// ```
///
/// One-sided differences use the local steps and read zero boundary values,
/// so every interior node has both differences.
pub fn directional_differences(u: &GridFunction, beta: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let mesh = u.mesh().clone();
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let hx = mesh.x.steps();
    let hy = mesh.y.steps();
    let b1p = beta[0].max(0.0);
    let b1m = beta[0].min(0.0);
    let b2p = beta[1].max(0.0);
    let b2m = beta[1].min(0.0);
    let mut d_minus = vec![0.0; nx * ny];
    let mut d_plus = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = mesh.index(i, j);
            let c = u.get(i, j);
            let dxm = (c - u.global(i, j + 1)) / hx[i];
            let dxp = (u.global(i + 2, j + 1) - c) / hx[i + 1];
            let dym = (c - u.global(i + 1, j)) / hy[j];
            let dyp = (u.global(i + 1, j + 2) - c) / hy[j + 1];
            d_minus[k] = b1p * dxm + b1m * dxp + b2p * dym + b2m * dyp;
            d_plus[k] = b1p * dxp + b1m * dxm + b2p * dyp + b2m * dym;
        }
    }
    (d_minus, d_plus)
}

/// Normalized directional non-monotonicity score
/// `Θ = 2[−D⁻D⁺]₊ / ((D⁻)² + (D⁺)² + δ_h) ∈ [0, 1)`.
pub fn theta_score(u: &GridFunction, beta: [f64; 2], delta_h: f64) -> GridFunction {
    let (d_minus, d_plus) = directional_differences(u, beta);
    let values = d_minus
        .iter()
        .zip(&d_plus)
        .map(|(&a, &b)| 2.0 * (-(a * b)).max(0.0) / (a * a + b * b + delta_h))
        .collect();
    GridFunction::new(u.mesh().clone(), values).expect("same mesh")
}

/// Saturating activation `χ = Θ/(Θ + η_det)` nodewise.
pub fn activation(theta: &GridFunction, eta_det: f64) -> Vec<f64> {
    theta.values().iter().map(|&t| t / (t + eta_det)).collect()
}

/// Sharp activation `χ = 1{D⁻_β U · D⁺_β U < 0}`.
pub fn sharp_activation(u: &GridFunction, beta: [f64; 2]) -> Vec<f64> {
    let (d_minus, d_plus) = directional_differences(u, beta);
    d_minus
        .iter()
        .zip(&d_plus)
        .map(|(&a, &b)| if a * b < 0.0 { 1.0 } else { 0.0 })
        .collect()
}

/// Nodal activation of a solution field under the configured detector.
pub fn nodal_activation(u: &GridFunction, beta: [f64; 2], params: &AdscParams) -> Vec<f64> {
    match params.detector_kind {
        DetectorKind::Regularized => activation(&theta_score(u, beta, params.delta_h), params.eta_det),
        DetectorKind::Sharp => sharp_activation(u, beta),
    }
}

/// Transfer nodal activation to x- and y-edges (layouts of
/// [`crate::operators::assemble_edge_difference`]). An edge combines the
/// activations of its adjacent interior nodes; a boundary-adjacent edge has
/// only one and takes that value unchanged, so a saturated activation next
/// to an outflow layer keeps its full strength on the last edge instead of
/// being halved against a fictitious zero.
pub fn edge_transfer(chi: &[f64], mesh: &Mesh2D, kind: TransferKind) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let ne_x = mesh.x.num_intervals();
    let ne_y = mesh.y.num_intervals();
    let at = |i: usize, j: usize| chi[j * nx + i];
    let combine = |l: Option<f64>, r: Option<f64>| match (l, r) {
        (Some(l), Some(r)) => match kind {
            TransferKind::Averaged => 0.5 * (l + r),
            TransferKind::Max => l.max(r),
        },
        (Some(v), None) | (None, Some(v)) => v,
        (None, None) => 0.0,
    };
    let mut chi_x = Vec::with_capacity(ny * ne_x);
    for j in 0..ny {
        for e in 0..ne_x {
            let left = (e >= 1).then(|| at(e - 1, j));
            let right = (e < ne_x - 1).then(|| at(e, j));
            chi_x.push(combine(left, right));
        }
    }
    let mut chi_y = Vec::with_capacity(nx * ne_y);
    for e in 0..ne_y {
        for i in 0..nx {
            let lower = (e >= 1).then(|| at(i, e - 1));
            let upper = (e < ne_y - 1).then(|| at(i, e));
            chi_y.push(combine(lower, upper));
        }
    }
    (chi_x, chi_y)
}

/// The saturating parameter law: for `Pe ≤ 1` returns `(0, 0, 0)`; otherwise
/// `γ₀ = γ_min + (γ_max − γ_min)(Pe − 1)/(Pe + 1)`, `γ₁ = κγ₀`,
/// `η_Pe = 1 − 1/Pe`.
pub fn gamma_law(pe: f64, params: &AdscParams) -> (f64, f64, f64) {
    if pe <= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let gamma0 =
            params.gamma_min + (params.gamma_max - params.gamma_min) * (pe - 1.0) / (pe + 1.0);
        (gamma0, params.kappa * gamma0, 1.0 - 1.0 / pe)
    }
}

/// Per-edge diffusion coefficients `αˣ_e = |β₁| h_e (γ₀ + γ₁ η_Pe χˣ_e)`
/// (y analogous). A uniform mesh evaluates the γ-law once at the global mesh
/// Péclet number; a layer-adapted mesh evaluates it per edge at
/// `Pe_e = |β| h_e/(2ε)`, so sub-critical edges receive no diffusion.
pub fn edge_coefficients(
    mesh: &Mesh2D,
    spec: &ProblemSpec,
    params: &AdscParams,
    chi_x: &[f64],
    chi_y: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let beta_norm = spec.beta_norm();
    let global = if mesh.is_uniform() {
        Some(gamma_law(spec.mesh_peclet(mesh), params))
    } else {
        None
    };
    let coeff = |abs_beta_r: f64, h_e: f64, chi_e: f64| {
        let (g0, g1, eta) = match global {
            Some(g) => g,
            None => gamma_law(beta_norm * h_e / (2.0 * spec.eps), params),
        };
        abs_beta_r * h_e * (g0 + g1 * eta * chi_e)
    };
    let wx = edge_steps(mesh, Direction::X)
        .iter()
        .zip(chi_x)
        .map(|(&h, &c)| coeff(spec.beta[0].abs(), h, c))
        .collect();
    let wy = edge_steps(mesh, Direction::Y)
        .iter()
        .zip(chi_y)
        .map(|(&h, &c)| coeff(spec.beta[1].abs(), h, c))
        .collect();
    (wx, wy)
}

/// Assemble the ADSC correction `S = D_xᵀW_xD_x + D_yᵀW_yD_y` for a given
/// edge activation.
pub fn stabilization_matrix(
    mesh: &Mesh2D,
    spec: &ProblemSpec,
    params: &AdscParams,
    chi_x: &[f64],
    chi_y: &[f64],
) -> Result<SparseOperator> {
    let (wx, wy) = edge_coefficients(mesh, spec, params, chi_x, chi_y);
    edge_diffusion(mesh, &wx, &wy)
}

fn warm_start_field(
    mesh: &Arc<Mesh2D>,
    spec: &ProblemSpec,
    f: &[f64],
    kh: &SparseOperator,
    kind: WarmStart,
) -> Result<Vec<f64>> {
    match kind {
        WarmStart::Zero => Ok(vec![0.0; mesh.num_interior()]),
        WarmStart::Galerkin => Ok(sparse::solve(kh, f, DEFAULT_SOLVE_TOL)?.0),
        WarmStart::Upwind => {
            let a = assemble_upwind(mesh, spec)?;
            Ok(sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?.0)
        }
        WarmStart::CoarseGrid => {
            let ne = mesh.x.num_intervals();
            if !mesh.is_uniform() || mesh.y.num_intervals() != ne || ne < 4 {
                return Err(Error::InvalidArgument(
                    "coarse-grid warm start needs a square uniform mesh with Ne >= 4".into(),
                ));
            }
            let coarse = grid::build_uniform_mesh(ne / 2)?;
            let a = assemble_galerkin(&coarse, spec);
            let fc = assemble_source(&coarse, spec);
            let (uc, _) = sparse::solve(&a, &fc, DEFAULT_SOLVE_TOL)?;
            let coarse_field = GridFunction::new(coarse, uc)?;
            Ok(grid::resample(&coarse_field, mesh)?.into_values())
        }
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solve the ADSC-stabilized system.
///
/// Coupled mode runs the monotone activation iteration: each pass detects on
/// the current iterate, updates `χ⁽ᵐ⁾ = χ⁽ᵐ⁻¹⁾ ∨ χ(U⁽ᵐ⁻¹⁾)`, and — unless the
/// relative change `‖χ⁽ᵐ⁾−χ⁽ᵐ⁻¹⁾‖∞ / ‖χ⁽ᵐ⁾‖∞` has fallen to
/// `activation_tol` — solves with the updated activation and relaxes
/// `U⁽ᵐ⁾ = (1−ω)U⁽ᵐ⁻¹⁾ + ωŨ`. An all-zero activation never counts as
/// converged, so a zero warm start proceeds past its empty first detection.
/// If the iteration cap is reached the result is flagged unconverged. In
/// every mode the returned solution comes from one final unrelaxed solve
/// with the frozen activation.
pub fn solve_adsc(
    mesh: &Arc<Mesh2D>,
    spec: &ProblemSpec,
    f: &[f64],
    params: &AdscParams,
    mode: AdscMode,
) -> Result<AdscResult> {
    solve_adsc_observed(mesh, spec, f, params, mode, &mut |_, _| {})
}

/// [`solve_adsc`] with an observer invoked after every coupled activation
/// update as `observer(iteration, chi)` — the hook the structural property
/// suite uses to verify monotonicity of the real loop.
pub fn solve_adsc_observed(
    mesh: &Arc<Mesh2D>,
    spec: &ProblemSpec,
    f: &[f64],
    params: &AdscParams,
    mode: AdscMode,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Result<AdscResult> {
    params.validate()?;
    let n = mesh.num_interior();
    if f.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} for {} unknowns",
            f.len(),
            n
        )));
    }
    let kh = assemble_galerkin(mesh, spec);
    let mut iterations_used = 0usize;
    let mut final_variation = 0.0f64;
    let mut converged = true;

    let chi: Vec<f64> = match mode {
        AdscMode::FixedActivation(chi) => {
            if chi.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "activation length {} for {} nodes",
                    chi.len(),
                    n
                )));
            }
            chi.to_vec()
        }
        AdscMode::FixedReference(u_ref) => {
            if u_ref.mesh().num_interior() != n {
                return Err(Error::DimensionMismatch(
                    "reference field lives on a different mesh".into(),
                ));
            }
            nodal_activation(u_ref, spec.beta, params)
        }
        AdscMode::Coupled => {
            let mut u = warm_start_field(mesh, spec, f, &kh, params.warm_start)?;
            let mut chi = vec![0.0f64; n];
            let cap = params
                .few_shot_cap
                .map_or(params.max_iterations, |c| c.min(params.max_iterations));
            converged = false;
            for m in 1..=cap {
                let field = GridFunction::new(mesh.clone(), u.clone())?;
                let detected = nodal_activation(&field, spec.beta, params);
                let chi_new: Vec<f64> = chi
                    .iter()
                    .zip(&detected)
                    .map(|(&old, &new)| old.max(new))
                    .collect();
                let diff: Vec<f64> = chi_new
                    .iter()
                    .zip(&chi)
                    .map(|(&a, &b)| a - b)
                    .collect();
                let scale = linf(&chi_new);
                // An all-zero activation (e.g. the first pass of a zero warm
                // start, before any solve has produced a field to detect on)
                // must not count as converged.
                let delta = if scale > 0.0 {
                    linf(&diff) / scale
                } else {
                    f64::INFINITY
                };
                chi = chi_new;
                observer(m, &chi);
                iterations_used = m;
                final_variation = delta;
                if delta <= params.activation_tol {
                    converged = true;
                    break;
                }
                let (chi_x, chi_y) = edge_transfer(&chi, mesh, params.transfer_kind);
                let s = stabilization_matrix(mesh, spec, params, &chi_x, &chi_y)?;
                let a = kh.add(&s)?;
                let (u_tilde, _) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
                for (ui, ti) in u.iter_mut().zip(&u_tilde) {
                    *ui = (1.0 - params.omega) * *ui + params.omega * ti;
                }
            }
            chi
        }
    };

    // Final unrelaxed solve with the frozen activation.
    let (chi_x, chi_y) = edge_transfer(&chi, mesh, params.transfer_kind);
    let s = stabilization_matrix(mesh, spec, params, &chi_x, &chi_y)?;
    let a = kh.add(&s)?;
    let (u, solve_report) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
    let activation_mass = chi.iter().sum();
    let active_node_count = chi.iter().filter(|&&c| c > ACTIVE_NODE_THRESHOLD).count();
    Ok(AdscResult {
        solution: GridFunction::new(mesh.clone(), u)?,
        activation: ActivationField { chi, chi_x, chi_y },
        iterations_used,
        final_variation,
        activation_mass,
        active_node_count,
        solve_report,
        converged,
    })
}
