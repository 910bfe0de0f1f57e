//! The reduced one-dimensional benchmark: `−εu″ + βu′ = f` on `(0, 1)` with
//! homogeneous Dirichlet ends, centered three-point discretization on a
//! uniform grid.
//!
//! In one dimension the first-order upwind scheme and the streamline method
//! coincide — the streamline term `τβ²DᵀD` with `τ = h/(2|β|)` is exactly
//! the upwind edge diffusion `|β|h/2·DᵀD` — so the table carries a single
//! `upwind-supg` row. The adaptive correction runs the same coupled
//! activation loop as the two-dimensional solver, reduced to one direction.
//!
//! The benchmark instance is ε = 10⁻³, β = 1, Ne = 80 (Pe = 6.25), a unit
//! Gaussian source of width σ = 0.05 at x = 1/2, and a centered solve on
//! the nested Ne = 1280 grid as reference.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::adsc::{gamma_law, AdscParams};
use crate::grid::DiagnosticsRow;
use crate::lfa::regularization_floor;
use crate::sparse::{self, triple_product, SparseOperator, DEFAULT_SOLVE_TOL};
use crate::{Error, Result};

use super::{BenchmarkRow, RunOptions};

/// Intervals of the benchmark grid.
pub const NE: usize = 80;
/// Diffusion coefficient.
pub const EPS: f64 = 1e-3;
/// Convection coefficient.
pub const BETA: f64 = 1.0;
/// Source width σ.
pub const SIGMA: f64 = 0.03;
/// Fine-reference intervals (a nested refinement of the benchmark grid).
pub const N_REF: usize = 1280;

/// Centered system matrix on `ne` intervals (`ne − 1` interior unknowns):
/// tridiagonal `ε/h²·(−1, 2, −1) + β/(2h)·(−1, 0, +1)`.
pub fn system_matrix(ne: usize, eps: f64, beta: f64) -> Result<SparseOperator> {
    if ne < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 intervals, got {ne}"
        )));
    }
    let n = ne - 1;
    let h = 1.0 / ne as f64;
    let diag = 2.0 * eps / (h * h);
    let lower = -eps / (h * h) - beta / (2.0 * h);
    let upper = -eps / (h * h) + beta / (2.0 * h);
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, lower));
        }
        t.push((i, i, diag));
        if i + 1 < n {
            t.push((i, i + 1, upper));
        }
    }
    SparseOperator::from_triplets(n, n, &t)
}

/// Scaled edge-difference operator `ne × (ne − 1)`: row `e` holds
/// `(U_{e+1} − U_e)/h` for the edge between global nodes `e` and `e + 1`,
/// reading zero boundary values.
pub fn edge_difference(ne: usize) -> Result<SparseOperator> {
    let n = ne - 1;
    let h = 1.0 / ne as f64;
    let mut t = Vec::with_capacity(2 * ne);
    for e in 0..ne {
        if e >= 1 {
            t.push((e, e - 1, -1.0 / h));
        }
        if e < n {
            t.push((e, e, 1.0 / h));
        }
    }
    SparseOperator::from_triplets(ne, n, &t)
}

/// Unit Gaussian source `exp(−(x − 1/2)²/σ²)` of width [`SIGMA`], sampled at
/// the interior nodes.
pub fn gaussian_source(ne: usize) -> Vec<f64> {
    let h = 1.0 / ne as f64;
    (1..ne)
        .map(|g| {
            let d = g as f64 * h - 0.5;
            (-d * d / (SIGMA * SIGMA)).exp()
        })
        .collect()
}

/// Backward and forward directional differences along `β` at every interior
/// node, with zero boundary values (the one-dimensional counterpart of the
/// two-dimensional directional detector input).
pub fn directional_differences(u: &[f64], h: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let at = |i: isize| {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            u[i as usize]
        }
    };
    let bp = beta.max(0.0);
    let bm = beta.min(0.0);
    let mut d_minus = Vec::with_capacity(n);
    let mut d_plus = Vec::with_capacity(n);
    for i in 0..n as isize {
        let dxm = (at(i) - at(i - 1)) / h;
        let dxp = (at(i + 1) - at(i)) / h;
        d_minus.push(bp * dxm + bm * dxp);
        d_plus.push(bp * dxp + bm * dxm);
    }
    (d_minus, d_plus)
}

/// Regularized nodal activation `χ = Θ/(Θ + η_det)` with
/// `Θ = 2[−D⁻D⁺]₊ / ((D⁻)² + (D⁺)² + δ_h)`.
pub fn nodal_activation(u: &[f64], h: f64, beta: f64, params: &AdscParams) -> Vec<f64> {
    let (d_minus, d_plus) = directional_differences(u, h, beta);
    d_minus
        .iter()
        .zip(&d_plus)
        .map(|(&a, &b)| {
            let theta = 2.0 * (-(a * b)).max(0.0) / (a * a + b * b + params.delta_h);
            theta / (theta + params.eta_det)
        })
        .collect()
}

/// Averaged transfer of nodal activation to the `ne` edges. Interior edges
/// average their two adjacent nodes; the two boundary-adjacent edges take
/// their single neighbor's value unchanged.
pub fn edge_activation(chi: &[f64], ne: usize) -> Vec<f64> {
    (0..ne)
        .map(|e| match (e >= 1, e < ne - 1) {
            (true, true) => 0.5 * (chi[e - 1] + chi[e]),
            (true, false) => chi[e - 1],
            (false, true) => chi[e],
            (false, false) => 0.0,
        })
        .collect()
}

/// Adaptive correction `S = Dᵀ diag(α) D` with per-edge coefficients
/// `α_e = |β| h (γ₀ + γ₁ η_Pe χ_e)` under the saturating γ-law at the grid
/// Péclet number.
pub fn stabilization(
    ne: usize,
    eps: f64,
    beta: f64,
    params: &AdscParams,
    chi_edges: &[f64],
) -> Result<SparseOperator> {
    let h = 1.0 / ne as f64;
    let pe = beta.abs() * h / (2.0 * eps);
    let (g0, g1, eta) = gamma_law(pe, params);
    let weights: Vec<f64> = chi_edges
        .iter()
        .map(|&chi| beta.abs() * h * (g0 + g1 * eta * chi))
        .collect();
    let d = edge_difference(ne)?;
    triple_product(&d.transpose(), &weights, &d)
}

/// The combined upwind/streamline correction `|β|h/2 · DᵀD` and the
/// stabilized matrix `K + S`.
pub fn upwind_supg_system(ne: usize, eps: f64, beta: f64) -> Result<(SparseOperator, SparseOperator)> {
    let h = 1.0 / ne as f64;
    let d = edge_difference(ne)?;
    let weights = vec![beta.abs() * h / 2.0; ne];
    let s = triple_product(&d.transpose(), &weights, &d)?;
    let a = system_matrix(ne, eps, beta)?.add(&s)?;
    Ok((a, s))
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Outcome of the one-dimensional adaptive solve.
#[derive(Debug, Clone)]
pub struct OneDimAdsc {
    /// Final fixed-activation solution.
    pub solution: Vec<f64>,
    /// Frozen correction matrix.
    pub stabilization: SparseOperator,
    /// Activation iterations performed.
    pub iterations_used: usize,
    /// Relative activation change at the last update.
    pub final_variation: f64,
    /// Whether the loop reached the activation tolerance.
    pub converged: bool,
}

/// The coupled activation loop, reduced to one dimension: each pass applies
/// a monotone activation update from the regularized detector on the current
/// iterate and, until the relative activation change reaches the tolerance,
/// solves with the updated activation and relaxes; one final unrelaxed solve
/// uses the frozen activation.
///
/// The reduction always uses the regularized detector, averaged edge
/// transfer, and a centered warm start; the γ-bounds, κ, ω, tolerance, and
/// iteration caps of `params` all apply.
pub fn solve_adsc_1d(
    ne: usize,
    eps: f64,
    beta: f64,
    f: &[f64],
    params: &AdscParams,
) -> Result<OneDimAdsc> {
    params.validate()?;
    let n = ne - 1;
    if f.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} for {} unknowns",
            f.len(),
            n
        )));
    }
    let h = 1.0 / ne as f64;
    let k = system_matrix(ne, eps, beta)?;
    let (mut u, _) = sparse::solve(&k, f, DEFAULT_SOLVE_TOL)?;
    let mut chi = vec![0.0f64; n];
    let mut iterations_used = 0usize;
    let mut final_variation = 0.0f64;
    let mut converged = false;
    let cap = params
        .few_shot_cap
        .map_or(params.max_iterations, |c| c.min(params.max_iterations));
    for m in 1..=cap {
        let detected = nodal_activation(&u, h, beta, params);
        let chi_new: Vec<f64> = chi
            .iter()
            .zip(&detected)
            .map(|(&old, &new)| old.max(new))
            .collect();
        let diff: Vec<f64> = chi_new.iter().zip(&chi).map(|(&a, &b)| a - b).collect();
        let scale = linf(&chi_new);
        // An all-zero activation must not count as converged; see the
        // two-dimensional loop for the rationale.
        let delta = if scale > 0.0 {
            linf(&diff) / scale
        } else {
            f64::INFINITY
        };
        chi = chi_new;
        iterations_used = m;
        final_variation = delta;
        if delta <= params.activation_tol {
            converged = true;
            break;
        }
        let s = stabilization(ne, eps, beta, params, &edge_activation(&chi, ne))?;
        let a = k.add(&s)?;
        let (u_tilde, _) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
        for (ui, ti) in u.iter_mut().zip(&u_tilde) {
            *ui = (1.0 - params.omega) * *ui + params.omega * ti;
        }
    }
    let s = stabilization(ne, eps, beta, params, &edge_activation(&chi, ne))?;
    let a = k.add(&s)?;
    let (solution, _) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
    Ok(OneDimAdsc {
        solution,
        stabilization: s,
        iterations_used,
        final_variation,
        converged,
    })
}

/// Centered solve on the nested fine grid (`n_ref` a multiple of `ne`),
/// restricted to the coarse interior nodes by exact nodal extraction.
pub fn reference(ne: usize, n_ref: usize, eps: f64, beta: f64) -> Result<Vec<f64>> {
    if n_ref % ne != 0 || n_ref <= ne {
        return Err(Error::InvalidArgument(format!(
            "reference grid {n_ref} must be a proper nested refinement of {ne}"
        )));
    }
    let ratio = n_ref / ne;
    let k = system_matrix(n_ref, eps, beta)?;
    let f = gaussian_source(n_ref);
    let (fine, _) = sparse::solve(&k, &f, DEFAULT_SOLVE_TOL)?;
    Ok((1..ne).map(|g| fine[ratio * g - 1]).collect())
}

/// Stabilized modal indicator on the uniform 1D grid: the mean of
/// `|b|/(a + floor + δ(θ))` over the dominant modes of the centered symbol
/// `(a, b)`, where `δ` is the translation-averaged periodic symbol of `s`
/// and the floor grows with the nearest-neighbor diffusion the stencil
/// carries — the one-dimensional counterpart of the two-dimensional
/// indicator. With `s = 0` this is the plain dominant-mode mean of
/// `|b|/(a + δ₀)`.
pub fn rho_stab_1d(s: &SparseOperator, ne: usize, eps: f64, beta: f64) -> Result<f64> {
    let n = ne - 1;
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, grid has {} unknowns",
            s.nrows(),
            s.ncols(),
            n
        )));
    }
    let h = 1.0 / ne as f64;
    let symbol = |theta: f64| {
        let a = 2.0 * eps / (h * h) * (1.0 - theta.cos());
        let b = beta / h * theta.sin();
        (a, b)
    };
    let delta0 = regularization_floor(eps, ne, 1);
    let theta: Vec<f64> = (1..=n).map(|k| k as f64 * PI / ne as f64).collect();
    let dominant: Vec<bool> = theta
        .iter()
        .map(|&t| {
            let (a, b) = symbol(t);
            b.abs() / (a + delta0) > 1.0
        })
        .collect();
    let count = dominant.iter().filter(|&&d| d).count();
    if count == 0 {
        return Ok(0.0);
    }

    // Translation-averaged stencil: mean entry per offset, averaging over
    // every row where the offset stays inside the index range.
    let mut offset_sums: BTreeMap<isize, f64> = BTreeMap::new();
    for (row, col, value) in s.entries() {
        *offset_sums.entry(col as isize - row as isize).or_insert(0.0) += value;
    }
    let stencil: Vec<(isize, f64)> = offset_sums
        .into_iter()
        .map(|(d, sum)| (d, sum / (n as isize - d.abs()) as f64))
        .collect();
    let neighbor_mean = stencil
        .iter()
        .filter(|(d, _)| d.abs() == 1)
        .map(|&(_, v)| v)
        .sum::<f64>()
        / 2.0;
    let w = (-h * h * neighbor_mean).max(0.0);
    let floor = 2.0 * (ne as f64 + 2.0) * (eps + w);

    let mut sum = 0.0;
    for (&t, &dom) in theta.iter().zip(&dominant) {
        if !dom {
            continue;
        }
        let delta: f64 = stencil
            .iter()
            .map(|&(d, v)| v * (d as f64 * t).cos())
            .sum();
        let (a, b) = symbol(t);
        sum += b.abs() / (a + floor + delta);
    }
    Ok(sum / count as f64)
}

fn diagnostics_1d(
    u: &[f64],
    reference: &[f64],
    ne: usize,
    eps: f64,
    beta: f64,
    s: &SparseOperator,
    threshold_factor: f64,
) -> Result<DiagnosticsRow> {
    let h = 1.0 / ne as f64;
    let l2_error = (h * u
        .iter()
        .zip(reference)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>())
    .sqrt();
    let linf_error = u
        .iter()
        .zip(reference)
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    let tv = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    // Range violation with the boundary's zero value included in both ranges.
    let min = |v: &[f64]| v.iter().fold(0.0f64, |m, &x| m.min(x));
    let max = |v: &[f64]| v.iter().fold(0.0f64, |m, &x| m.max(x));
    let undershoot = (min(reference) - min(u)).max(0.0);
    let overshoot = (max(u) - max(reference)).max(0.0);
    let threshold = threshold_factor * linf(reference);
    let (d_minus, d_plus) = directional_differences(u, h, beta);
    let detector_count = d_minus
        .iter()
        .zip(&d_plus)
        .filter(|(a, b)| *a * *b < 0.0 && a.abs() > threshold && b.abs() > threshold)
        .count();
    Ok(DiagnosticsRow {
        l2_error,
        linf_error,
        tv,
        e_ext: undershoot + overshoot,
        detector_count,
        rho_stab_mean: Some(rho_stab_1d(s, ne, eps, beta)?),
    })
}

/// Run the reduced benchmark: `galerkin`, `upwind-supg`, and `adsc` rows on
/// the Ne = 80 grid against the nested Ne = 1280 centered reference.
pub fn run(opts: &RunOptions) -> Result<Vec<BenchmarkRow>> {
    let h = 1.0 / NE as f64;
    let pe = BETA.abs() * h / (2.0 * EPS);
    let f = gaussian_source(NE);
    let u_ref = reference(NE, N_REF, EPS, BETA)?;
    let k = system_matrix(NE, EPS, BETA)?;
    let n = NE - 1;
    let empty = SparseOperator::from_triplets(n, n, &[])?;

    let row = |method: &str,
               u: &[f64],
               s: &SparseOperator,
               iterations: Option<usize>,
               final_variation: Option<f64>|
     -> Result<BenchmarkRow> {
        Ok(BenchmarkRow {
            scenario: "1d".to_string(),
            method: method.to_string(),
            ne: NE,
            h,
            pe,
            diagnostics: diagnostics_1d(
                u,
                &u_ref,
                NE,
                EPS,
                BETA,
                s,
                opts.detector_threshold_factor,
            )?,
            rate: None,
            iterations,
            final_variation,
            distance: None,
            failed: None,
        })
    };

    let (u_gal, _) = sparse::solve(&k, &f, DEFAULT_SOLVE_TOL)?;
    let (a_up, s_up) = upwind_supg_system(NE, EPS, BETA)?;
    let (u_up, _) = sparse::solve(&a_up, &f, DEFAULT_SOLVE_TOL)?;
    let adsc = solve_adsc_1d(NE, EPS, BETA, &f, &opts.adsc)?;

    Ok(vec![
        row("galerkin", &u_gal, &empty, None, None)?,
        row("upwind-supg", &u_up, &s_up, None, None)?,
        row(
            "adsc",
            &adsc.solution,
            &adsc.stabilization,
            Some(adsc.iterations_used),
            Some(adsc.final_variation),
        )?,
    ])
}
