//! Interior local-Fourier-analysis diagnostics: the discrete modal symbol,
//! convection-dominance indicators, the modal-balance parameter rule, the
//! reference modal operator, and symbol-footprint sampling.
//!
//! On a uniform mesh the interior five-point stencil acts on the tensor
//! sine modes diagonally with symbol `λ = a + ib`,
//! `a = (2ε/h²)(2 − cosθ₁ − cosθ₂)`, `b = (β₁ sinθ₁ + β₂ sinθ₂)/h`.
//! The per-mode dominance ratio is `ρ = |b|/(a + δ₀)` with the
//! low-frequency floor δ₀ of [`regularization_floor`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::grid::{build_uniform_mesh, GridFunction, Mesh2D};
use crate::sparse::SparseOperator;
use crate::{Error, Result};

/// Interior symbol of the centered discretization at one frequency pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symbol {
    /// Diffusive real part, positive on `(0,π)²`.
    pub a: f64,
    /// Convective imaginary part.
    pub b: f64,
}

impl Symbol {
    /// Dominance ratio `ρ = |b|/a`.
    pub fn rho(&self) -> f64 {
        self.b.abs() / self.a
    }

    /// Modulus `|λ| = √(a² + b²)`.
    pub fn modulus(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Evaluate the interior symbol at frequency `θ = (θ₁, θ₂)`.
pub fn symbol(eps: f64, beta: [f64; 2], h: f64, theta: (f64, f64)) -> Symbol {
    let (t1, t2) = theta;
    Symbol {
        a: 2.0 * eps / (h * h) * (2.0 - t1.cos() - t2.cos()),
        b: (beta[0] * t1.sin() + beta[1] * t2.sin()) / h,
    }
}

/// Full modal diagnostic for a uniform `Ne × Ne` mesh: the ρ-map over the
/// sine frequencies `θ_p = pπ/Ne`, the strict dominant set `{ρ > 1}`, and
/// the directional balance weights `B`.
///
/// Matrices are stored row-major with `p` fastest: entry `(p, q)` lives at
/// [`ModalSet::index`]`(p, q)` for `p, q ∈ 1..=N`, `N = Ne − 1`.
#[derive(Debug, Clone)]
pub struct ModalSet {
    /// Number of mesh intervals per direction.
    pub ne: usize,
    /// Diffusion coefficient the set was built for.
    pub eps: f64,
    /// Convection field the set was built for.
    pub beta: [f64; 2],
    /// Frequencies `θ_p = pπ/Ne`, `p = 1..=N`.
    pub theta: Vec<f64>,
    /// Low-frequency regularization floor `δ₀ = 4ε(Ne + 2)` added to the
    /// diffusive symbol before forming ratios; see [`regularization_floor`].
    pub delta_floor: f64,
    /// Dominance ratios `ρ_pq = |b_pq| / (a_pq + δ₀) ≥ 0`.
    pub rho: Vec<f64>,
    /// Strict dominance mask `ρ_pq > 1`.
    pub dominant_mask: Vec<bool>,
    /// Mean of ρ over the dominant set (0 if the set is empty).
    pub mean_rho_gal: f64,
    /// Balance weights `B_pq = (|β₁|r_p + |β₂|r_q) / (|β|(r_p + r_q))`,
    /// `r = 1 − cosθ`; all zero when `|β| = 0`.
    pub balance: Vec<f64>,
    /// Mean of `B` over the dominant set (0 if the set is empty).
    pub balance_mean: f64,
}

impl ModalSet {
    /// Linear index of mode `(p, q)`, both 1-based.
    pub fn index(&self, p: usize, q: usize) -> usize {
        let n = self.ne - 1;
        debug_assert!((1..=n).contains(&p) && (1..=n).contains(&q));
        (q - 1) * n + (p - 1)
    }

    /// Number of interior modes per direction, `N = Ne − 1`.
    pub fn modes_per_direction(&self) -> usize {
        self.ne - 1
    }

    /// Size of the dominant set.
    pub fn dominant_count(&self) -> usize {
        self.dominant_mask.iter().filter(|&&m| m).count()
    }

    /// Total number of modes `N²`.
    pub fn total_modes(&self) -> usize {
        (self.ne - 1) * (self.ne - 1)
    }
}

/// Low-frequency regularization floor for dominance ratios on a mesh with
/// `ne` intervals per direction in `dim` space dimensions:
/// `δ₀ = 2·dim·eps·(ne + 2)`.
///
/// The raw ratio `|b|/a` diverges as `θ → 0` for any fixed `Pe_h`, which
/// would let physically harmless near-constant modes dominate the mean.
/// Adding a floor of the order of the diffusive symbol at the grid scale
/// (`2·dim·eps/h`, evaluated with the slightly inflated interval count
/// `ne + 2` so the floor also covers the two boundary intervals) keeps the
/// indicator focused on genuinely convection-dominated frequencies.
pub fn regularization_floor(eps: f64, ne: usize, dim: usize) -> f64 {
    2.0 * dim as f64 * eps * (ne as f64 + 2.0)
}

/// Build the [`ModalSet`] of the centered discretization with diffusion
/// `eps` and convection `beta` on the uniform `Ne × Ne` mesh.
pub fn modal_set(eps: f64, beta: [f64; 2], ne: usize) -> Result<ModalSet> {
    if ne < 2 {
        return Err(Error::InvalidArgument(format!(
            "modal set needs at least 2 intervals, got {ne}"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "diffusion coefficient must be positive and finite, got {eps}"
        )));
    }
    let n = ne - 1;
    let h = 1.0 / ne as f64;
    let beta_norm = beta[0].hypot(beta[1]);
    let theta: Vec<f64> = (1..=n).map(|p| p as f64 * PI / ne as f64).collect();
    let r: Vec<f64> = theta.iter().map(|t| 1.0 - t.cos()).collect();
    let delta_floor = regularization_floor(eps, ne, 2);

    let mut rho = Vec::with_capacity(n * n);
    let mut dominant_mask = Vec::with_capacity(n * n);
    let mut balance = Vec::with_capacity(n * n);
    for q in 0..n {
        for p in 0..n {
            let s = symbol(eps, beta, h, (theta[p], theta[q]));
            let rho_pq = s.b.abs() / (s.a + delta_floor);
            rho.push(rho_pq);
            dominant_mask.push(rho_pq > 1.0);
            let b_pq = if beta_norm == 0.0 {
                0.0
            } else {
                (beta[0].abs() * r[p] + beta[1].abs() * r[q]) / (beta_norm * (r[p] + r[q]))
            };
            balance.push(b_pq);
        }
    }

    let count = dominant_mask.iter().filter(|&&m| m).count();
    let dominant_mean = |values: &[f64]| -> f64 {
        if count == 0 {
            0.0
        } else {
            values
                .iter()
                .zip(&dominant_mask)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| v)
                .sum::<f64>()
                / count as f64
        }
    };
    let mean_rho_gal = dominant_mean(&rho);
    let balance_mean = dominant_mean(&balance);

    Ok(ModalSet {
        ne,
        eps,
        beta,
        theta,
        delta_floor,
        rho,
        dominant_mask,
        mean_rho_gal,
        balance,
        balance_mean,
    })
}

/// The modal-balance parameter rule: `raw = max(ρ̄ − ρ_target, 0)/(2·Pe_h·B̄)`
/// and its projection onto `[γ_min, γ_max]`. Returns `(raw, projected)`.
/// An empty dominant set (B̄ = 0) yields `raw = 0`.
pub fn gamma0_balance(
    modal: &ModalSet,
    pe_h: f64,
    rho_target: f64,
    gamma_min: f64,
    gamma_max: f64,
) -> (f64, f64) {
    let excess = (modal.mean_rho_gal - rho_target).max(0.0);
    let raw = if excess == 0.0 || modal.balance_mean == 0.0 || pe_h == 0.0 {
        0.0
    } else {
        excess / (2.0 * pe_h * modal.balance_mean)
    };
    (raw, raw.clamp(gamma_min, gamma_max))
}

/// The orthonormal tensor sine mode `φ_pq` on the uniform `Ne × Ne` mesh:
/// `φ_pq(i, j) = (2/Ne) sin(ipπ/Ne) sin(jqπ/Ne)` at interior node `(i, j)`
/// (1-based), so `⟨φ_pq, φ_rs⟩ = δ_pr δ_qs` in the Euclidean inner product.
pub fn sine_mode(ne: usize, p: usize, q: usize) -> Result<GridFunction> {
    let n = ne.saturating_sub(1);
    if !(1..=n).contains(&p) || !(1..=n).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "mode ({p}, {q}) outside 1..={n}"
        )));
    }
    let mesh = build_uniform_mesh(ne)?;
    Ok(sine_mode_on(&mesh, p, q))
}

fn sine_mode_on(mesh: &Arc<Mesh2D>, p: usize, q: usize) -> GridFunction {
    let ne = mesh.x.num_intervals();
    let scale = 2.0 / ne as f64;
    let freq = PI / ne as f64;
    let values = (0..mesh.num_interior())
        .map(|k| {
            let i = k % mesh.nx() + 1;
            let j = k / mesh.nx() + 1;
            scale * (i as f64 * p as f64 * freq).sin() * (j as f64 * q as f64 * freq).sin()
        })
        .collect();
    GridFunction::new(mesh.clone(), values).expect("matching mesh")
}

/// Stabilized dominance indicator: the mean over the dominant set of
/// `|b_pq| / (a_pq + δ₀(S) + δ_pq(S))`.
///
/// Both shifts are read off the translation-averaged stencil of `S`
/// (entries averaged by grid offset, so a constant-coefficient operator
/// reproduces its interior stencil exactly):
/// * `δ_pq(S)` is the stencil's periodic symbol at frequency `(θ_p, θ_q)`,
///   the per-mode energy the stabilization adds;
/// * `δ₀(S)` is the regularization floor recomputed with the stabilized
///   diffusion, `2(Ne+2)(2ε + w₁ + w₂)`, where `w_r ≥ 0` is the effective
///   diffusion the stencil carries on the direction-`r` nearest-neighbor
///   offsets — so the floor grows exactly as it would for a viscous method
///   with diffusion `ε + w_r` in direction `r`.
///
/// With `S = 0` both shifts vanish and the result is
/// [`ModalSet::mean_rho_gal`]. An empty dominant set yields `0`.
pub fn rayleigh_rho_stab(s: &SparseOperator, modal: &ModalSet) -> Result<f64> {
    let n = modal.modes_per_direction();
    if s.nrows() != n * n || s.ncols() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, modal set has {} unknowns",
            s.nrows(),
            s.ncols(),
            n * n
        )));
    }
    let count = modal.dominant_count();
    if count == 0 {
        return Ok(0.0);
    }
    let h = 1.0 / modal.ne as f64;

    // Translation-averaged stencil: mean entry per grid offset, averaging
    // over every row where the offset stays inside the index box.
    let mut offset_sums: BTreeMap<(isize, isize), f64> = BTreeMap::new();
    for (row, col, value) in s.entries() {
        let di = (col % n) as isize - (row % n) as isize;
        let dj = (col / n) as isize - (row / n) as isize;
        *offset_sums.entry((di, dj)).or_insert(0.0) += value;
    }
    let n_i = n as isize;
    let stencil: Vec<((isize, isize), f64)> = offset_sums
        .into_iter()
        .map(|((di, dj), sum)| {
            let positions = ((n_i - di.abs()) * (n_i - dj.abs())) as f64;
            ((di, dj), sum / positions)
        })
        .collect();

    let neighbor_mean = |offset: (isize, isize)| -> f64 {
        stencil
            .iter()
            .filter(|(k, _)| *k == offset || (*k == (-offset.0, -offset.1)))
            .map(|&(_, v)| v)
            .sum::<f64>()
            / 2.0
    };
    let w1 = (-h * h * neighbor_mean((1, 0))).max(0.0);
    let w2 = (-h * h * neighbor_mean((0, 1))).max(0.0);
    let floor = 2.0 * (modal.ne as f64 + 2.0) * (2.0 * modal.eps + w1 + w2);

    let mut sum = 0.0;
    for q in 1..=n {
        for p in 1..=n {
            if !modal.dominant_mask[modal.index(p, q)] {
                continue;
            }
            let (t1, t2) = (modal.theta[p - 1], modal.theta[q - 1]);
            let delta: f64 = stencil
                .iter()
                .map(|&((di, dj), v)| v * (di as f64 * t1 + dj as f64 * t2).cos())
                .sum();
            let sym = symbol(modal.eps, modal.beta, h, (t1, t2));
            sum += sym.b.abs() / (sym.a + floor + delta);
        }
    }
    Ok(sum / count as f64)
}

/// Apply the rectified reference operator modally: expand `f` in sine modes,
/// divide each coefficient by the symbol modulus `|λ_pq|`, and reconstruct.
/// Diagnostic only.
pub fn reference_modal_solve(modal: &ModalSet, f: &GridFunction) -> Result<GridFunction> {
    let n = modal.modes_per_direction();
    let mesh = f.mesh();
    if mesh.nx() != n || mesh.ny() != n || mesh.uniform_step().is_none() {
        return Err(Error::DimensionMismatch(format!(
            "field interior is {}x{} (uniform: {}), modal set expects uniform {n}x{n}",
            mesh.nx(),
            mesh.ny(),
            mesh.is_uniform(),
        )));
    }
    let ne = modal.ne;
    let h = 1.0 / ne as f64;
    // Tensorized one-directional sine transform table s[p-1][i-1].
    let freq = PI / ne as f64;
    let table: Vec<Vec<f64>> = (1..=n)
        .map(|p| (1..=n).map(|i| ((i * p) as f64 * freq).sin()).collect())
        .collect();
    let scale = 2.0 / ne as f64;

    // Forward transform, x then y: f̂_pq = Σ_ij f_ij φ_pq(i,j).
    let mut gx = vec![0.0; n * n]; // gx[p-1 + (j-1)*n] = Σ_i s_pi f_ij
    for j in 0..n {
        for p in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += table[p][i] * f.values()[j * n + i];
            }
            gx[j * n + p] = acc;
        }
    }
    let mut coeff = vec![0.0; n * n]; // coeff[(q-1)*n + (p-1)] = f̂_pq
    for q in 0..n {
        for p in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += table[q][j] * gx[j * n + p];
            }
            coeff[q * n + p] = scale * acc;
        }
    }

    // Divide by |λ| per mode.
    for q in 0..n {
        for p in 0..n {
            let sym = symbol(modal.eps, modal.beta, h, (modal.theta[p], modal.theta[q]));
            coeff[q * n + p] /= sym.modulus();
        }
    }

    // Inverse transform (same kernel), y then x.
    let mut gy = vec![0.0; n * n]; // gy[(q-1) + (i-1)*n]? keep symmetric order
    for q in 0..n {
        for i in 0..n {
            let mut acc = 0.0;
            for p in 0..n {
                acc += table[p][i] * coeff[q * n + p];
            }
            gy[q * n + i] = acc;
        }
    }
    let mut values = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let mut acc = 0.0;
            for q in 0..n {
                acc += table[q][j] * gy[q * n + i];
            }
            values[j * n + i] = scale * acc;
        }
    }
    GridFunction::new(mesh.clone(), values)
}

/// Per-mode rectification coefficient `α* = ε(√(1 + ρ²) − 1)`. Diagnostic
/// only; diverges linearly in ρ.
pub fn alpha_star(eps: f64, rho: f64) -> f64 {
    eps * ((1.0 + rho * rho).sqrt() - 1.0)
}

/// One sampled point of the symbol footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintPoint {
    /// Frequency θ₁.
    pub theta1: f64,
    /// Frequency θ₂.
    pub theta2: f64,
    /// Real part of the symbol.
    pub a: f64,
    /// Imaginary part of the symbol.
    pub b: f64,
    /// Jacobian `J(θ) = (2ε/h³)(β₂ sinθ₁ cosθ₂ − β₁ sinθ₂ cosθ₁)` of the
    /// frequency-to-symbol map, for the nonempty-interior check.
    pub jacobian: f64,
}

/// Sample the symbol footprint `{(a(θ), b(θ)) : θ ∈ (0,π)²}` on a
/// `grid_density × grid_density` interior frequency grid, together with the
/// Jacobian of the map.
pub fn footprint_sample(
    eps: f64,
    beta: [f64; 2],
    h: f64,
    grid_density: usize,
) -> Result<Vec<FootprintPoint>> {
    if grid_density == 0 {
        return Err(Error::InvalidArgument(
            "footprint needs at least one sample per direction".into(),
        ));
    }
    if !(h > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(
            "footprint needs positive h and eps".into(),
        ));
    }
    let step = PI / (grid_density as f64 + 1.0);
    let scale = 2.0 * eps / (h * h * h);
    let mut points = Vec::with_capacity(grid_density * grid_density);
    for k2 in 1..=grid_density {
        let t2 = k2 as f64 * step;
        for k1 in 1..=grid_density {
            let t1 = k1 as f64 * step;
            let s = symbol(eps, beta, h, (t1, t2));
            let jacobian =
                scale * (beta[1] * t1.sin() * t2.cos() - beta[0] * t2.sin() * t1.cos());
            points.push(FootprintPoint {
                theta1: t1,
                theta2: t2,
                a: s.a,
                b: s.b,
                jacobian,
            });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adsc::{solve_adsc, stabilization_matrix, AdscMode, AdscParams};
    use crate::operators::{
        assemble_source, edge_diffusion, edge_steps, galerkin_diffusion, Direction, ProblemSpec,
        SourceSpec,
    };
    use crate::sparse::{self, SparseOperator, DEFAULT_SOLVE_TOL};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const MAIN_BETA: [f64; 2] = [0.8574929257125442, 0.5144957554275265];

    #[test]
    fn symbol_closed_form_values() {
        // β = 0 puts the symbol on the real axis.
        for &theta in &[(0.3, 2.0), (1.0, 1.0), (2.9, 0.1)] {
            assert_eq!(symbol(0.5, [0.0, 0.0], 0.1, theta).b, 0.0);
        }
        // θ = (π/2, π/2), ε = 1, h = 0.1: a = 400, b = 10(β₁+β₂).
        let s = symbol(1.0, [0.3, 0.4], 0.1, (PI / 2.0, PI / 2.0));
        assert_abs_diff_eq!(s.a, 400.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.b, 7.0, epsilon = 1e-12);
        // 1D slice β = (β, 0), θ = (π/2, 0): ρ equals the mesh Péclet number.
        let (eps, beta, h) = (2e-3, 1.7, 0.05);
        let s = symbol(eps, [beta, 0.0], h, (PI / 2.0, 0.0));
        assert_abs_diff_eq!(s.rho(), beta * h / (2.0 * eps), epsilon = 1e-12);
    }

    #[test]
    fn symbol_identity_on_periodic_stencil() {
        // Applying the interior five-point stencil to the complex exponential
        // exp(i(rθ₁+sθ₂)) on a periodic wrap reproduces (a+ib)·mode.
        let (eps, beta, h) = (3e-3, [0.6, -0.8], 1.0 / 32.0);
        let m = 32usize; // periodic grid points per direction
        for &(k1, k2) in &[(1usize, 1usize), (5, 9), (13, 3)] {
            let theta = (2.0 * PI * k1 as f64 / m as f64, 2.0 * PI * k2 as f64 / m as f64);
            let s = symbol(eps, beta, h, theta);
            // Evaluate the stencil at node (r, s) = (0, 0) of the periodic grid.
            let mode = |r: i64, t: i64| {
                let phase = theta.0 * r as f64 + theta.1 * t as f64;
                (phase.cos(), phase.sin())
            };
            let add = |acc: (f64, f64), w: f64, v: (f64, f64)| (acc.0 + w * v.0, acc.1 + w * v.1);
            let mut acc = (0.0, 0.0);
            acc = add(acc, 4.0 * eps / (h * h), mode(0, 0));
            acc = add(acc, -eps / (h * h), mode(1, 0));
            acc = add(acc, -eps / (h * h), mode(-1, 0));
            acc = add(acc, -eps / (h * h), mode(0, 1));
            acc = add(acc, -eps / (h * h), mode(0, -1));
            acc = add(acc, beta[0] / (2.0 * h), mode(1, 0));
            acc = add(acc, -beta[0] / (2.0 * h), mode(-1, 0));
            acc = add(acc, beta[1] / (2.0 * h), mode(0, 1));
            acc = add(acc, -beta[1] / (2.0 * h), mode(0, -1));
            // Expected (a+ib)·1 at the origin node.
            let scale = s.a.hypot(s.b).max(1.0);
            assert!((acc.0 - s.a).abs() / scale < 1e-10, "real part at {theta:?}");
            assert!((acc.1 - s.b).abs() / scale < 1e-10, "imag part at {theta:?}");
        }
    }

    #[test]
    fn modal_set_reproduces_main_test_diagnostics() {
        let modal = modal_set(2e-3, MAIN_BETA, 45).unwrap();
        assert_eq!(modal.total_modes(), 1936);
        assert_eq!(modal.dominant_count(), 1775);
        assert!(
            (modal.mean_rho_gal - 3.878).abs() / 3.878 < 5e-3,
            "mean rho {}",
            modal.mean_rho_gal
        );
        assert!(
            (modal.balance_mean - 0.686).abs() / 0.686 < 1e-2,
            "mean B {}",
            modal.balance_mean
        );
    }

    #[test]
    fn dominant_set_shrinks_with_diffusion() {
        let counts: Vec<usize> = [1e-3, 1e-2, 1e-1, 1.0]
            .iter()
            .map(|&eps| modal_set(eps, MAIN_BETA, 32).unwrap().dominant_count())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
        assert_eq!(*counts.last().unwrap(), 0);
    }

    #[test]
    fn balance_collapses_for_axis_aligned_convection() {
        let modal = modal_set(1e-3, [1.0, 0.0], 12).unwrap();
        let n = modal.modes_per_direction();
        for q in 1..=n {
            for p in 1..=n {
                let rp = 1.0 - modal.theta[p - 1].cos();
                let rq = 1.0 - modal.theta[q - 1].cos();
                assert_abs_diff_eq!(
                    modal.balance[modal.index(p, q)],
                    rp / (rp + rq),
                    epsilon = 1e-14
                );
            }
        }
        // |β| = 0: empty dominant set and zero balance by convention.
        let modal = modal_set(1e-3, [0.0, 0.0], 12).unwrap();
        assert_eq!(modal.dominant_count(), 0);
        assert!(modal.balance.iter().all(|&b| b == 0.0));
        assert_eq!(modal.mean_rho_gal, 0.0);
    }

    #[test]
    fn gamma0_balance_matches_calibration_rows() {
        // raw = max(ρ̄ − 1, 0)/(2 Pe B̄) on the main problem family.
        for &(ne, expected) in &[(45usize, 0.378), (120, 0.456)] {
            let modal = modal_set(2e-3, MAIN_BETA, ne).unwrap();
            let pe = (1.0 / ne as f64) / (2.0 * 2e-3);
            let (raw, projected) = gamma0_balance(&modal, pe, 1.0, 0.08, 0.25);
            assert!(
                (raw - expected).abs() / expected < 1e-2,
                "Ne={ne}: raw {raw} vs {expected}"
            );
            assert_eq!(projected, 0.25, "raw exceeds the admissible band");
        }
        // ρ̄ below target: zero raw, floor projection.
        let modal = modal_set(1.0, MAIN_BETA, 16).unwrap();
        let (raw, projected) = gamma0_balance(&modal, 0.5, 1.0, 0.08, 0.25);
        assert_eq!(raw, 0.0);
        assert_eq!(projected, 0.08);
    }

    #[test]
    fn sine_modes_are_orthonormal() {
        let ne = 8;
        let n = ne - 1;
        let modes: Vec<GridFunction> = (1..=n)
            .flat_map(|q| (1..=n).map(move |p| (p, q)))
            .map(|(p, q)| sine_mode(ne, p, q).unwrap())
            .collect();
        for (k, phi) in modes.iter().enumerate() {
            for (l, psi) in modes.iter().enumerate() {
                let dot: f64 = phi
                    .values()
                    .iter()
                    .zip(psi.values())
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!(
                    (dot - expected).abs() < 1e-12,
                    "modes {k},{l}: inner product {dot}"
                );
            }
        }
    }

    #[test]
    fn sine_mode_is_a_laplacian_eigenvector() {
        let ne = 10;
        let h = 1.0 / ne as f64;
        let mesh = build_uniform_mesh(ne).unwrap();
        let lap = galerkin_diffusion(&mesh, 1.0);
        for &(p, q) in &[(1usize, 1usize), (3, 7), (9, 2)] {
            let phi = sine_mode(ne, p, q).unwrap();
            let lam = 2.0 / (h * h)
                * (2.0 - (p as f64 * PI / ne as f64).cos() - (q as f64 * PI / ne as f64).cos());
            let applied = lap.apply(phi.values());
            for (out, val) in applied.iter().zip(phi.values()) {
                assert!(
                    (out - lam * val).abs() <= 1e-10 * lam.max(1.0),
                    "mode ({p},{q})"
                );
            }
        }
    }

    #[test]
    fn rayleigh_shift_with_scaled_identity() {
        // S = cI has a pure-diagonal stencil: the symbol shift is exactly c
        // at every frequency and the floor stays at its Galerkin value.
        let modal = modal_set(2e-3, MAIN_BETA, 16).unwrap();
        let n = modal.modes_per_direction();
        let h = 1.0 / 16.0;
        let c = 37.5;
        let s = SparseOperator::identity(n * n).scale(c);
        let got = rayleigh_rho_stab(&s, &modal).unwrap();
        let mut expected = 0.0;
        for q in 1..=n {
            for p in 1..=n {
                if modal.dominant_mask[modal.index(p, q)] {
                    let sym = symbol(2e-3, MAIN_BETA, h, (modal.theta[p - 1], modal.theta[q - 1]));
                    expected += sym.b.abs() / (sym.a + modal.delta_floor + c);
                }
            }
        }
        expected /= modal.dominant_count() as f64;
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);

        // S = 0 reduces to the plain dominant mean.
        let zero = SparseOperator::identity(n * n).scale(0.0);
        let got = rayleigh_rho_stab(&zero, &modal).unwrap();
        assert_abs_diff_eq!(got, modal.mean_rho_gal, epsilon = 1e-12);
    }

    #[test]
    fn rayleigh_recovers_upwind_table_value() {
        // First-order upwinding on the main problem: the stabilized
        // dominance mean drops from 3.878 to 0.811.
        let ne = 45;
        let mesh = build_uniform_mesh(ne).unwrap();
        let wx: Vec<f64> = edge_steps(&mesh, Direction::X)
            .iter()
            .map(|&he| MAIN_BETA[0].abs() * he / 2.0)
            .collect();
        let wy: Vec<f64> = edge_steps(&mesh, Direction::Y)
            .iter()
            .map(|&he| MAIN_BETA[1].abs() * he / 2.0)
            .collect();
        let s = edge_diffusion(&mesh, &wx, &wy).unwrap();
        let modal = modal_set(2e-3, MAIN_BETA, ne).unwrap();
        let got = rayleigh_rho_stab(&s, &modal).unwrap();
        assert!(
            (got - 0.811).abs() / 0.811 < 2e-2,
            "upwind stabilized mean {got}"
        );
    }

    #[test]
    fn rayleigh_recovers_adsc_table_value() {
        // The converged adaptive correction on the main problem lands
        // between upwinding (0.811) and the unstabilized mean (3.878).
        let ne = 45;
        let mesh = build_uniform_mesh(ne).unwrap();
        let spec = ProblemSpec::new(
            2e-3,
            MAIN_BETA,
            SourceSpec::Gaussian {
                center: (0.5, 0.5),
                sigma: 0.07,
                amplitude: 1.0,
            },
        )
        .unwrap();
        let f = assemble_source(&mesh, &spec);
        let params = AdscParams::default();
        let result = solve_adsc(&mesh, &spec, &f, &params, AdscMode::Coupled).unwrap();
        assert!(result.converged);
        let s = stabilization_matrix(
            &mesh,
            &spec,
            &params,
            &result.activation.chi_x,
            &result.activation.chi_y,
        )
        .unwrap();
        let modal = modal_set(2e-3, MAIN_BETA, ne).unwrap();
        let got = rayleigh_rho_stab(&s, &modal).unwrap();
        assert!(
            (got - 1.123).abs() / 1.123 < 5e-2,
            "adaptive stabilized mean {got}"
        );
    }

    #[test]
    fn modal_solve_divides_single_modes() {
        let ne = 8;
        let modal = modal_set(5e-3, [0.3, 0.9], ne).unwrap();
        let h = 1.0 / ne as f64;
        let (p, q) = (2usize, 5usize);
        let phi = sine_mode(ne, p, q).unwrap();
        let out = reference_modal_solve(&modal, &phi).unwrap();
        let lam = symbol(5e-3, [0.3, 0.9], h, (modal.theta[p - 1], modal.theta[q - 1])).modulus();
        for (o, v) in out.values().iter().zip(phi.values()) {
            assert!((o - v / lam).abs() < 1e-10);
        }
    }

    #[test]
    fn modal_solve_without_convection_is_laplacian_solve() {
        let ne = 10;
        let eps = 0.7;
        let modal = modal_set(eps, [0.0, 0.0], ne).unwrap();
        let mesh = build_uniform_mesh(ne).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        let f: Vec<f64> = (0..mesh.num_interior())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let field = GridFunction::new(mesh.clone(), f.clone()).unwrap();
        let modal_u = reference_modal_solve(&modal, &field).unwrap();
        let lap = galerkin_diffusion(&mesh, eps);
        let (direct_u, _) = sparse::solve(&lap, &f, DEFAULT_SOLVE_TOL).unwrap();
        for (a, b) in modal_u.values().iter().zip(&direct_u) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn alpha_star_closed_forms() {
        assert_eq!(alpha_star(0.3, 0.0), 0.0);
        assert_abs_diff_eq!(alpha_star(1.0, 1.0), 2.0f64.sqrt() - 1.0, epsilon = 1e-14);
        // Linear divergence: α*/ρ → ε.
        let eps = 2e-3;
        assert_abs_diff_eq!(alpha_star(eps, 1e8) / 1e8, eps, epsilon = 1e-10);
    }

    #[test]
    fn footprint_stays_in_the_symbol_band() {
        let (eps, h) = (2e-3, 1.0 / 45.0);
        let points = footprint_sample(eps, MAIN_BETA, h, 64).unwrap();
        assert_eq!(points.len(), 64 * 64);
        let bound = 8.0 * eps / (h * h);
        assert!(points.iter().all(|p| p.a > 0.0 && p.a < bound));
        // β = 0 collapses onto the real axis.
        let real = footprint_sample(eps, [0.0, 0.0], h, 16).unwrap();
        assert!(real.iter().all(|p| p.b == 0.0 && p.jacobian == 0.0));
        // β = (1, 0): J(θ₁, π/2) = −(2ε/h³) cosθ₁ ≠ 0 for small θ₁.
        let dens = 63; // odd density puts a sample row exactly at θ₂ = π/2
        let axis = footprint_sample(eps, [1.0, 0.0], h, dens).unwrap();
        let mid = axis
            .iter()
            .find(|p| (p.theta2 - PI / 2.0).abs() < 1e-12 && p.theta1 < 0.1)
            .expect("sample at (small, mid) frequency");
        let expected = -(2.0 * eps / (h * h * h)) * mid.theta1.cos();
        assert_abs_diff_eq!(mid.jacobian, expected, epsilon = 1e-9);
    }
}
