//! Assembly of every discretization in the suite.
//!
//! The base scheme is the centered five-point operator for
//! `−ε Δu + β·∇u` with homogeneous Dirichlet data. On a uniform mesh its
//! stencil is
//!
//! ```text
//! K_h U = (ε/h²)(4U_ij − U_{i±1,j} − U_{i,j±1})
//!       + (β₁/2h)(U_{i+1,j} − U_{i−1,j}) + (β₂/2h)(U_{i,j+1} − U_{i,j−1});
//! ```
//!
//! on a nonuniform tensor mesh the standard 3-point second difference and the
//! wide centered first difference `(U_{i+1} − U_{i−1})/(h_i + h_{i+1})` are
//! used per axis. Comparator stabilizations (coordinate upwinding, SUPG,
//! CIP-type, LPS-type, AFC-inspired) are assembled on top of the same base
//! operator, each exposing its added symmetric-PSD matrix for modal
//! diagnostics.

use std::sync::Arc;

use crate::adsc;
use crate::grid::{GridFunction, Mesh1D, Mesh2D};
use crate::sparse::{self, triple_product, SparseOperator, DEFAULT_SOLVE_TOL};
use crate::{Error, Result};

/// CIP-type penalty strength, selected once on the main benchmark.
pub const CIP_GAMMA: f64 = 0.030;
/// LPS-type stabilization strength.
pub const LPS_GAMMA: f64 = 1.0;
/// AFC-inspired limiter strength.
pub const AFC_THETA: f64 = 1.0;
/// Default number of AFC limiting passes.
pub const AFC_DEFAULT_ITERATIONS: usize = 80;

/// A coordinate direction of the tensor mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// x (the fast index).
    X,
    /// y (the slow index).
    Y,
}

/// Right-hand-side families used by the benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// `amplitude · exp(−((x−xc)² + (y−yc)²)/σ²)`.
    Gaussian {
        /// Center `(xc, yc)`.
        center: (f64, f64),
        /// Width σ > 0.
        sigma: f64,
        /// Peak amplitude.
        amplitude: f64,
    },
    /// Sum of two Gaussians with a shared width and amplitude.
    DoubleGaussian {
        /// The two centers.
        centers: [(f64, f64); 2],
        /// Shared width σ > 0.
        sigma: f64,
        /// Shared peak amplitude.
        amplitude: f64,
    },
    /// Manufactured right-hand side for the exact solution
    /// `u = sin(πx)sin(πy)`.
    ManufacturedSine,
    /// Manufactured right-hand side for the exact layered solution
    /// `u = ℓ(x)ℓ(y)` with `ℓ(t) = t − (e^{(t−1)/ε} − e^{−1/ε})/(1 − e^{−1/ε})`.
    /// The layer width is governed by this `eps` (normally equal to the
    /// problem's diffusion).
    NistLayer {
        /// Layer parameter of `ℓ`.
        eps: f64,
    },
}

/// A constant-coefficient convection–diffusion problem on `(0,1)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    /// Diffusion ε > 0.
    pub eps: f64,
    /// Convection field β = (β₁, β₂).
    pub beta: [f64; 2],
    /// Right-hand-side family.
    pub source: SourceSpec,
}

impl ProblemSpec {
    /// Validated constructor (`eps > 0`, finite `beta`, `σ > 0`).
    pub fn new(eps: f64, beta: [f64; 2], source: SourceSpec) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        if !beta[0].is_finite() || !beta[1].is_finite() {
            return Err(Error::InvalidArgument("beta must be finite".into()));
        }
        match source {
            SourceSpec::Gaussian { sigma, .. } | SourceSpec::DoubleGaussian { sigma, .. }
                if !(sigma > 0.0) =>
            {
                return Err(Error::InvalidArgument(format!(
                    "Gaussian sigma must be positive, got {sigma}"
                )));
            }
            SourceSpec::NistLayer { eps: leps } if !(leps > 0.0) => {
                return Err(Error::InvalidArgument(format!(
                    "layer eps must be positive, got {leps}"
                )));
            }
            _ => {}
        }
        Ok(Self { eps, beta, source })
    }

    /// `|β|`.
    pub fn beta_norm(&self) -> f64 {
        self.beta[0].hypot(self.beta[1])
    }

    /// Mesh Péclet number `|β| h / (2ε)` with `h` the largest step of the
    /// mesh (the step itself on a uniform mesh).
    pub fn mesh_peclet(&self, mesh: &Mesh2D) -> f64 {
        let h = mesh
            .x
            .steps()
            .iter()
            .chain(mesh.y.steps())
            .fold(0.0f64, |m, &s| m.max(s));
        self.beta_norm() * h / (2.0 * self.eps)
    }

    /// Whether the source family carries an exact solution.
    pub fn has_exact_solution(&self) -> bool {
        matches!(
            self.source,
            SourceSpec::ManufacturedSine | SourceSpec::NistLayer { .. }
        )
    }

    /// Exact solution value at `(x, y)`, when the source family defines one.
    pub fn exact_at(&self, x: f64, y: f64) -> Option<f64> {
        match self.source {
            SourceSpec::ManufacturedSine => {
                Some((std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin())
            }
            SourceSpec::NistLayer { eps } => Some(layer_l(x, eps) * layer_l(y, eps)),
            _ => None,
        }
    }
}

/// Layer function `ℓ(t) = t − (e^{(t−1)/ε} − e^{−1/ε})/(1 − e^{−1/ε})`;
/// `ℓ(0) = ℓ(1) = 0`.
fn layer_l(t: f64, eps: f64) -> f64 {
    let e_full = (-1.0 / eps).exp();
    t - (((t - 1.0) / eps).exp() - e_full) / (1.0 - e_full)
}

/// `ℓ'(t) = 1 − e^{(t−1)/ε}/(ε(1 − e^{−1/ε}))`.
fn layer_lp(t: f64, eps: f64) -> f64 {
    let e_full = (-1.0 / eps).exp();
    1.0 - ((t - 1.0) / eps).exp() / (eps * (1.0 - e_full))
}

/// `ℓ''(t) = −e^{(t−1)/ε}/(ε²(1 − e^{−1/ε}))`.
fn layer_lpp(t: f64, eps: f64) -> f64 {
    let e_full = (-1.0 / eps).exp();
    -((t - 1.0) / eps).exp() / (eps * eps * (1.0 - e_full))
}

fn source_value(spec: &ProblemSpec, x: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    match &spec.source {
        SourceSpec::Gaussian {
            center,
            sigma,
            amplitude,
        } => gaussian(x, y, *center, *sigma, *amplitude),
        SourceSpec::DoubleGaussian {
            centers,
            sigma,
            amplitude,
        } => {
            gaussian(x, y, centers[0], *sigma, *amplitude)
                + gaussian(x, y, centers[1], *sigma, *amplitude)
        }
        SourceSpec::ManufacturedSine => {
            let (sx, cx) = (PI * x).sin_cos();
            let (sy, cy) = (PI * y).sin_cos();
            2.0 * PI * PI * spec.eps * sx * sy
                + spec.beta[0] * PI * cx * sy
                + spec.beta[1] * PI * sx * cy
        }
        SourceSpec::NistLayer { eps } => {
            let (l_x, l_y) = (layer_l(x, *eps), layer_l(y, *eps));
            let (lp_x, lp_y) = (layer_lp(x, *eps), layer_lp(y, *eps));
            let (lpp_x, lpp_y) = (layer_lpp(x, *eps), layer_lpp(y, *eps));
            -spec.eps * (lpp_x * l_y + l_x * lpp_y)
                + spec.beta[0] * lp_x * l_y
                + spec.beta[1] * l_x * lp_y
        }
    }
}

fn gaussian(x: f64, y: f64, center: (f64, f64), sigma: f64, amplitude: f64) -> f64 {
    let dx = x - center.0;
    let dy = y - center.1;
    amplitude * (-(dx * dx + dy * dy) / (sigma * sigma)).exp()
}

/// Sample the problem's source at every interior node.
pub fn assemble_source(mesh: &Arc<Mesh2D>, spec: &ProblemSpec) -> Vec<f64> {
    GridFunction::from_fn(mesh.clone(), |x, y| source_value(spec, x, y)).into_values()
}

/// Sample the exact solution at every interior node, when one exists.
pub fn exact_solution_field(mesh: &Arc<Mesh2D>, spec: &ProblemSpec) -> Option<GridFunction> {
    if spec.has_exact_solution() {
        Some(GridFunction::from_fn(mesh.clone(), |x, y| {
            spec.exact_at(x, y).expect("exact solution checked above")
        }))
    } else {
        None
    }
}

/// One axis' second-difference contribution (`−ε ∂²/∂x²` or `−ε ∂²/∂y²`).
fn diffusion_triplets(
    mesh: &Mesh2D,
    dir: Direction,
    eps: f64,
    out: &mut Vec<(usize, usize, f64)>,
) {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let (axis, stride) = match dir {
        Direction::X => (&mesh.x, 1usize),
        Direction::Y => (&mesh.y, nx),
    };
    let along = axis.num_interior();
    let across = if matches!(dir, Direction::X) { ny } else { nx };
    for a in 0..across {
        for k in 0..along {
            let row = match dir {
                Direction::X => mesh.index(k, a),
                Direction::Y => mesh.index(a, k),
            };
            if let Some(h) = axis.uniform_step() {
                let s = eps / (h * h);
                out.push((row, row, 2.0 * s));
                if k > 0 {
                    out.push((row, row - stride, -s));
                }
                if k + 1 < along {
                    out.push((row, row + stride, -s));
                }
            } else {
                let h_lo = axis.steps()[k];
                let h_hi = axis.steps()[k + 1];
                let scale = 2.0 * eps / (h_lo + h_hi);
                out.push((row, row, scale * (1.0 / h_lo + 1.0 / h_hi)));
                if k > 0 {
                    out.push((row, row - stride, -scale / h_lo));
                }
                if k + 1 < along {
                    out.push((row, row + stride, -scale / h_hi));
                }
            }
        }
    }
}

/// One axis' centered first-difference contribution with coefficient `c`:
/// `c·(U_{k+1} − U_{k−1})/(2h)` on a uniform axis, and the wide centered
/// difference `c·(U_{k+1} − U_{k−1})/(h_k + h_{k+1})` on a nonuniform one.
fn convection_triplets(
    mesh: &Mesh2D,
    dir: Direction,
    c: f64,
    out: &mut Vec<(usize, usize, f64)>,
) {
    if c == 0.0 {
        return;
    }
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let (axis, stride) = match dir {
        Direction::X => (&mesh.x, 1usize),
        Direction::Y => (&mesh.y, nx),
    };
    let along = axis.num_interior();
    let across = if matches!(dir, Direction::X) { ny } else { nx };
    for a in 0..across {
        for k in 0..along {
            let row = match dir {
                Direction::X => mesh.index(k, a),
                Direction::Y => mesh.index(a, k),
            };
            let w = if let Some(h) = axis.uniform_step() {
                c / (2.0 * h)
            } else {
                c / (axis.steps()[k] + axis.steps()[k + 1])
            };
            if k + 1 < along {
                out.push((row, row + stride, w));
            }
            if k > 0 {
                out.push((row, row - stride, -w));
            }
        }
    }
}

/// The convection part `β₁G_x + β₂G_y` of the base operator (`G_x`, `G_y`
/// centered gradients with Dirichlet data) — also the streamline operator
/// `D_β` used by SUPG and LPS.
pub fn galerkin_convection(mesh: &Mesh2D, beta: [f64; 2]) -> SparseOperator {
    let n = mesh.num_interior();
    let mut t = Vec::with_capacity(4 * n);
    convection_triplets(mesh, Direction::X, beta[0], &mut t);
    convection_triplets(mesh, Direction::Y, beta[1], &mut t);
    SparseOperator::from_triplets(n, n, &t).expect("stencil indices in range")
}

/// The diffusion part `−ε Δ_h` of the base operator.
pub fn galerkin_diffusion(mesh: &Mesh2D, eps: f64) -> SparseOperator {
    let n = mesh.num_interior();
    let mut t = Vec::with_capacity(5 * n);
    diffusion_triplets(mesh, Direction::X, eps, &mut t);
    diffusion_triplets(mesh, Direction::Y, eps, &mut t);
    SparseOperator::from_triplets(n, n, &t).expect("stencil indices in range")
}

/// The centered base operator `K_h = −ε Δ_h + β·∇_h`.
pub fn assemble_galerkin(mesh: &Mesh2D, spec: &ProblemSpec) -> SparseOperator {
    let n = mesh.num_interior();
    let mut t = Vec::with_capacity(9 * n);
    diffusion_triplets(mesh, Direction::X, spec.eps, &mut t);
    diffusion_triplets(mesh, Direction::Y, spec.eps, &mut t);
    convection_triplets(mesh, Direction::X, spec.beta[0], &mut t);
    convection_triplets(mesh, Direction::Y, spec.beta[1], &mut t);
    SparseOperator::from_triplets(n, n, &t).expect("stencil indices in range")
}

/// Number of directed edges the edge-difference operator produces.
pub fn edge_count(mesh: &Mesh2D, dir: Direction) -> usize {
    match dir {
        Direction::X => mesh.ny() * mesh.x.num_intervals(),
        Direction::Y => mesh.nx() * mesh.y.num_intervals(),
    }
}

/// Forward edge-difference operator with factor `1/h_e`: maps interior
/// values to all `Ne` edges of each node row (x) or node column (y),
/// boundary-adjacent edges reading the Dirichlet zero.
///
/// Edge layout: x-edge `e ∈ 0..Ne_x` of interior row `j` has index
/// `j·Ne_x + e`; y-edge `e ∈ 0..Ne_y` of interior column `i` has index
/// `e·nx + i`. Edge `e` joins axis nodes `e` and `e+1` and carries step
/// `h_e = steps[e]`.
pub fn assemble_edge_difference(mesh: &Mesh2D, dir: Direction) -> SparseOperator {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let rows = edge_count(mesh, dir);
    let mut t = Vec::with_capacity(2 * rows);
    match dir {
        Direction::X => {
            let ne = mesh.x.num_intervals();
            for j in 0..ny {
                for e in 0..ne {
                    let row = j * ne + e;
                    let inv_h = 1.0 / mesh.x.steps()[e];
                    if e + 1 <= nx {
                        t.push((row, mesh.index(e, j), inv_h));
                    }
                    if e >= 1 {
                        t.push((row, mesh.index(e - 1, j), -inv_h));
                    }
                }
            }
        }
        Direction::Y => {
            let ne = mesh.y.num_intervals();
            for e in 0..ne {
                for i in 0..nx {
                    let row = e * nx + i;
                    let inv_h = 1.0 / mesh.y.steps()[e];
                    if e + 1 <= ny {
                        t.push((row, mesh.index(i, e), inv_h));
                    }
                    if e >= 1 {
                        t.push((row, mesh.index(i, e - 1), -inv_h));
                    }
                }
            }
        }
    }
    SparseOperator::from_triplets(rows, mesh.num_interior(), &t).expect("edge indices in range")
}

/// Per-edge steps `h_e` in the same layout as [`assemble_edge_difference`].
pub fn edge_steps(mesh: &Mesh2D, dir: Direction) -> Vec<f64> {
    match dir {
        Direction::X => {
            let ne = mesh.x.num_intervals();
            (0..mesh.ny())
                .flat_map(|_| mesh.x.steps().iter().copied())
                .take(mesh.ny() * ne)
                .collect()
        }
        Direction::Y => {
            let nx = mesh.nx();
            mesh.y
                .steps()
                .iter()
                .flat_map(|&h| std::iter::repeat(h).take(nx))
                .collect()
        }
    }
}

/// Build `D_xᵀ W_x D_x + D_yᵀ W_y D_y` from per-edge weights.
pub fn edge_diffusion(mesh: &Mesh2D, wx: &[f64], wy: &[f64]) -> Result<SparseOperator> {
    let dx = assemble_edge_difference(mesh, Direction::X);
    let dy = assemble_edge_difference(mesh, Direction::Y);
    let sx = triple_product(&dx.transpose(), wx, &dx)?;
    let sy = triple_product(&dy.transpose(), wy, &dy)?;
    sx.add(&sy)
}

/// Coordinate-upwinding stabilization `D_xᵀ(|β₁|h_e/2)D_x + D_yᵀ(|β₂|h_e/2)D_y`.
pub fn upwind_stabilization(mesh: &Mesh2D, spec: &ProblemSpec) -> Result<SparseOperator> {
    let wx: Vec<f64> = edge_steps(mesh, Direction::X)
        .iter()
        .map(|&h| spec.beta[0].abs() * h / 2.0)
        .collect();
    let wy: Vec<f64> = edge_steps(mesh, Direction::Y)
        .iter()
        .map(|&h| spec.beta[1].abs() * h / 2.0)
        .collect();
    edge_diffusion(mesh, &wx, &wy)
}

/// First-order coordinate upwinding `K_h + D_xᵀ(|β₁|h/2)D_x + D_yᵀ(|β₂|h/2)D_y`.
pub fn assemble_upwind(mesh: &Mesh2D, spec: &ProblemSpec) -> Result<SparseOperator> {
    assemble_galerkin(mesh, spec).add(&upwind_stabilization(mesh, spec)?)
}

/// SUPG stabilization parameter `τ = h/(2|β|)` with `h` the largest step;
/// `None` when `|β| = 0` (the correction degenerates).
pub fn supg_tau(mesh: &Mesh2D, spec: &ProblemSpec) -> Option<f64> {
    let bn = spec.beta_norm();
    if bn == 0.0 {
        return None;
    }
    let h = mesh
        .x
        .steps()
        .iter()
        .chain(mesh.y.steps())
        .fold(0.0f64, |m, &s| m.max(s));
    Some(h / (2.0 * bn))
}

/// SUPG streamline correction `τ D_βᵀ D_β` (zero matrix when `|β| = 0`).
pub fn supg_stabilization(mesh: &Mesh2D, spec: &ProblemSpec) -> Result<SparseOperator> {
    let n = mesh.num_interior();
    match supg_tau(mesh, spec) {
        None => SparseOperator::from_triplets(n, n, &[]),
        Some(tau) => {
            let d_beta = galerkin_convection(mesh, spec.beta);
            triple_product(&d_beta.transpose(), &vec![tau; n], &d_beta)
        }
    }
}

/// SUPG system `A = K_h + τ D_βᵀD_β`, `rhs = f + τ D_βᵀ f`; returns the
/// Galerkin pair unchanged when `|β| = 0`.
pub fn assemble_supg(
    mesh: &Mesh2D,
    spec: &ProblemSpec,
    f: &[f64],
) -> Result<(SparseOperator, Vec<f64>)> {
    let kh = assemble_galerkin(mesh, spec);
    match supg_tau(mesh, spec) {
        None => Ok((kh, f.to_vec())),
        Some(tau) => {
            let a = kh.add(&supg_stabilization(mesh, spec)?)?;
            let d_beta_t = galerkin_convection(mesh, spec.beta).transpose();
            let correction = d_beta_t.apply(f);
            let rhs = f
                .iter()
                .zip(&correction)
                .map(|(&fi, &ci)| fi + tau * ci)
                .collect();
            Ok((a, rhs))
        }
    }
}

/// Centered second-difference matrix `(1, −2, 1)/h²` along one axis with
/// Dirichlet data (uniform meshes only).
fn second_difference(mesh: &Mesh2D, dir: Direction) -> Result<SparseOperator> {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let (axis, stride) = match dir {
        Direction::X => (&mesh.x, 1usize),
        Direction::Y => (&mesh.y, nx),
    };
    let h = axis.uniform_step().ok_or_else(|| {
        Error::InvalidArgument("second_difference requires a uniform axis".into())
    })?;
    let s = 1.0 / (h * h);
    let along = axis.num_interior();
    let across = if matches!(dir, Direction::X) { ny } else { nx };
    let n = mesh.num_interior();
    let mut t = Vec::with_capacity(3 * n);
    for a in 0..across {
        for k in 0..along {
            let row = match dir {
                Direction::X => mesh.index(k, a),
                Direction::Y => mesh.index(a, k),
            };
            t.push((row, row, -2.0 * s));
            if k > 0 {
                t.push((row, row - stride, s));
            }
            if k + 1 < along {
                t.push((row, row + stride, s));
            }
        }
    }
    SparseOperator::from_triplets(n, n, &t)
}

/// CIP-type penalty `γ_CIP |β| h³ (L_xxᵀL_xx + L_yyᵀL_yy)` (uniform meshes).
pub fn cip_stabilization(mesh: &Mesh2D, spec: &ProblemSpec) -> Result<SparseOperator> {
    let h = mesh.uniform_step().ok_or_else(|| {
        Error::InvalidArgument("CIP-type stabilization requires a uniform mesh".into())
    })?;
    let n = mesh.num_interior();
    let lxx = second_difference(mesh, Direction::X)?;
    let lyy = second_difference(mesh, Direction::Y)?;
    let w = vec![CIP_GAMMA * spec.beta_norm() * h * h * h; n];
    let sx = triple_product(&lxx.transpose(), &w, &lxx)?;
    let sy = triple_product(&lyy.transpose(), &w, &lyy)?;
    sx.add(&sy)
}

/// CIP-type operator `A_Gal + γ_CIP|β|h³(L_xxᵀL_xx + L_yyᵀL_yy)`.
pub fn assemble_cip(mesh: &Mesh2D, spec: &ProblemSpec) -> Result<SparseOperator> {
    assemble_galerkin(mesh, spec).add(&cip_stabilization(mesh, spec)?)
}

/// 1D smoothing mass `T = tridiag(1/4, 1/2, 1/4)` along one axis.
fn smoothing_triplets(mesh: &Mesh2D, dir: Direction, out: &mut Vec<(usize, usize, f64)>) {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let (along, stride, across) = match dir {
        Direction::X => (nx, 1usize, ny),
        Direction::Y => (ny, nx, nx),
    };
    for a in 0..across {
        for k in 0..along {
            let row = match dir {
                Direction::X => mesh.index(k, a),
                Direction::Y => mesh.index(a, k),
            };
            out.push((row, row, 0.5));
            if k > 0 {
                out.push((row, row - stride, 0.25));
            }
            if k + 1 < along {
                out.push((row, row + stride, 0.25));
            }
        }
    }
}

/// LPS coarse-space projector `P = T⊗T` (tensor product of the 1D smoothers).
pub fn lps_projector(mesh: &Mesh2D) -> SparseOperator {
    let n = mesh.num_interior();
    let mut tx = Vec::with_capacity(3 * n);
    smoothing_triplets(mesh, Direction::X, &mut tx);
    let mut ty = Vec::with_capacity(3 * n);
    smoothing_triplets(mesh, Direction::Y, &mut ty);
    let px = SparseOperator::from_triplets(n, n, &tx).expect("stencil indices in range");
    let py = SparseOperator::from_triplets(n, n, &ty).expect("stencil indices in range");
    py.matmul(&px).expect("square operators conform")
}

/// LPS fluctuation filter `H = I − P`.
pub fn lps_fluctuation(mesh: &Mesh2D) -> SparseOperator {
    let n = mesh.num_interior();
    SparseOperator::identity(n)
        .add(&lps_projector(mesh).scale(-1.0))
        .expect("same shape")
}

/// LPS-type stabilization `γ_LPS τ (HD_β)ᵀ(HD_β)` (zero when `|β| = 0`).
pub fn lps_stabilization(mesh: &Mesh2D, spec: &ProblemSpec) -> Result<SparseOperator> {
    let n = mesh.num_interior();
    match supg_tau(mesh, spec) {
        None => SparseOperator::from_triplets(n, n, &[]),
        Some(tau) => {
            let hd = lps_fluctuation(mesh).matmul(&galerkin_convection(mesh, spec.beta))?;
            triple_product(&hd.transpose(), &vec![LPS_GAMMA * tau; n], &hd)
        }
    }
}

/// LPS-type system `A = A_Gal + γ_LPS τ(HD_β)ᵀ(HD_β)`,
/// `rhs = f + γ_LPS τ(HD_β)ᵀ(Hf)`.
pub fn assemble_lps(
    mesh: &Mesh2D,
    spec: &ProblemSpec,
    f: &[f64],
) -> Result<(SparseOperator, Vec<f64>)> {
    let kh = assemble_galerkin(mesh, spec);
    match supg_tau(mesh, spec) {
        None => Ok((kh, f.to_vec())),
        Some(tau) => {
            let h_filter = lps_fluctuation(mesh);
            let hd = h_filter.matmul(&galerkin_convection(mesh, spec.beta))?;
            let a = kh.add(&triple_product(
                &hd.transpose(),
                &vec![LPS_GAMMA * tau; mesh.num_interior()],
                &hd,
            )?)?;
            let hf = h_filter.apply(f);
            let correction = hd.transpose().apply(&hf);
            let rhs = f
                .iter()
                .zip(&correction)
                .map(|(&fi, &ci)| fi + LPS_GAMMA * tau * ci)
                .collect();
            Ok((a, rhs))
        }
    }
}

/// Result of the AFC-inspired nonlinear iteration.
///
/// Beyond the solution itself this carries the final edge-diffusion matrix
/// (for modal diagnostics) and the pass count actually run.
#[derive(Debug, Clone)]
pub struct AfcResult {
    /// Final iterate.
    pub solution: GridFunction,
    /// Final assembled edge-diffusion correction.
    pub stabilization: SparseOperator,
    /// Number of limiting passes performed.
    pub iterations_used: usize,
}

/// AFC-inspired edge-diffusion comparator: starting from the Galerkin
/// solution, each pass rebuilds the sharp directional detector from the
/// current iterate (max edge transfer), assembles
/// `α_r = θ_AFC |β_r| h_e/2 · χʳ` edge diffusion, and re-solves without
/// relaxation.
pub fn solve_afc(
    mesh: &Arc<Mesh2D>,
    spec: &ProblemSpec,
    f: &[f64],
    iterations: usize,
) -> Result<AfcResult> {
    let kh = assemble_galerkin(mesh, spec);
    let n = mesh.num_interior();
    let (mut u, _) = sparse::solve(&kh, f, DEFAULT_SOLVE_TOL)?;
    let hx = edge_steps(mesh, Direction::X);
    let hy = edge_steps(mesh, Direction::Y);
    let mut stabilization = SparseOperator::from_triplets(n, n, &[])?;
    for _ in 0..iterations {
        let field = GridFunction::new(mesh.clone(), u)?;
        let chi = adsc::sharp_activation(&field, spec.beta);
        let (chi_x, chi_y) = adsc::edge_transfer(&chi, mesh, adsc::TransferKind::Max);
        let wx: Vec<f64> = chi_x
            .iter()
            .zip(&hx)
            .map(|(&c, &h)| AFC_THETA * spec.beta[0].abs() * h / 2.0 * c)
            .collect();
        let wy: Vec<f64> = chi_y
            .iter()
            .zip(&hy)
            .map(|(&c, &h)| AFC_THETA * spec.beta[1].abs() * h / 2.0 * c)
            .collect();
        stabilization = edge_diffusion(mesh, &wx, &wy)?;
        let a = kh.add(&stabilization)?;
        let (next, _) = sparse::solve(&a, f, DEFAULT_SOLVE_TOL)?;
        u = next;
    }
    Ok(AfcResult {
        solution: GridFunction::new(mesh.clone(), u)?,
        stabilization,
        iterations_used: iterations,
    })
}

/// Convenience: build both meshes' 1D operators for tests wanting an
/// effectively one-dimensional strip (one interior row).
#[doc(hidden)]
pub fn strip_mesh(ne_x: usize) -> Result<Arc<Mesh2D>> {
    Ok(Arc::new(Mesh2D {
        x: Mesh1D::uniform(ne_x)?,
        y: Mesh1D::uniform(2)?,
    }))
}
