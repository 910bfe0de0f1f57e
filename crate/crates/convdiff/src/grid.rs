//! Tensor-product meshes on (0,1)², grid functions, discrete norms, and
//! oscillation diagnostics.
//!
//! Conventions used throughout the crate:
//!
//! * A 1D mesh with `Ne` intervals has nodes `x_0 = 0 < x_1 < … < x_Ne = 1`
//!   and `Ne − 1` interior nodes.
//! * Interior unknowns of a 2D mesh are ordered lexicographically, row-major
//!   with the x-index fastest: `index(i, j) = j * nx + i` for
//!   `i ∈ 0..nx`, `j ∈ 0..ny`.
//! * Homogeneous Dirichlet data: boundary values are identically zero, so a
//!   [`GridFunction`] stores interior values only and reads as zero on the
//!   boundary (see [`GridFunction::global`]).

use std::sync::Arc;

use crate::{Error, Result};

/// Metadata about a Shishkin mesh (per axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShishkinInfo {
    /// Transition-point parameter `τ = min(1/2, 2 ε ln Ne)`.
    pub tau: f64,
    /// Coarse step `(1 − τ) / (Ne/2)` on `[0, 1 − τ]`.
    pub h_coarse: f64,
    /// Fine step `τ / (Ne/2)` on `[1 − τ, 1]`.
    pub h_fine: f64,
}

/// One axis of a tensor mesh on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    steps: Vec<f64>,
    uniform_h: Option<f64>,
    shishkin: Option<ShishkinInfo>,
}

impl Mesh1D {
    /// Uniform mesh with `ne ≥ 2` intervals of width `1/ne`.
    pub fn uniform(ne: usize) -> Result<Self> {
        if ne < 2 {
            return Err(Error::InvalidArgument(format!(
                "uniform mesh needs at least 2 intervals, got {ne}"
            )));
        }
        let h = 1.0 / ne as f64;
        let nodes: Vec<f64> = (0..=ne).map(|i| i as f64 / ne as f64).collect();
        let steps = diff(&nodes);
        Ok(Self {
            nodes,
            steps,
            uniform_h: Some(h),
            shishkin: None,
        })
    }

    /// Shishkin mesh for a boundary layer at `x = 1`: `ne/2` equal intervals
    /// on `[0, 1 − τ]` and `ne/2` on `[1 − τ, 1]`, with
    /// `τ = min(1/2, 2 ε ln ne)`. Requires even `ne ≥ 2` and `eps > 0`.
    pub fn shishkin(ne: usize, eps: f64) -> Result<Self> {
        if ne < 2 || ne % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "Shishkin mesh needs an even interval count >= 2, got {ne}"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Shishkin mesh needs eps > 0, got {eps}"
            )));
        }
        let half = ne / 2;
        let tau = (0.5f64).min(2.0 * eps * (ne as f64).ln());
        let split = 1.0 - tau;
        let mut nodes = Vec::with_capacity(ne + 1);
        for i in 0..half {
            nodes.push(i as f64 / half as f64 * split);
        }
        // Count down to the right endpoint so x_{ne} = 1 exactly.
        for k in (0..=half).rev() {
            nodes.push(1.0 - k as f64 / half as f64 * tau);
        }
        let steps = diff(&nodes);
        Ok(Self {
            nodes,
            steps,
            uniform_h: None,
            shishkin: Some(ShishkinInfo {
                tau,
                h_coarse: split / half as f64,
                h_fine: tau / half as f64,
            }),
        })
    }

    /// Number of intervals `Ne`.
    pub fn num_intervals(&self) -> usize {
        self.steps.len()
    }

    /// Number of interior nodes `Ne − 1`.
    pub fn num_interior(&self) -> usize {
        self.steps.len() - 1
    }

    /// All nodes `x_0 … x_Ne`, including both boundary nodes.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Interval widths `h_e = x_{e+1} − x_e` for `e ∈ 0..Ne`.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// `Some(h)` when the mesh was built uniform.
    pub fn uniform_step(&self) -> Option<f64> {
        self.uniform_h
    }

    /// Shishkin metadata, when the mesh was built by [`Mesh1D::shishkin`].
    pub fn shishkin_info(&self) -> Option<ShishkinInfo> {
        self.shishkin
    }

    /// Coordinate of interior node `k ∈ 0..Ne−1` (that is, node `k + 1`).
    pub fn interior_coord(&self, k: usize) -> f64 {
        self.nodes[k + 1]
    }

    /// Cell weight `(h_k + h_{k+1}) / 2` of interior node `k`, the length of
    /// its dual cell.
    pub fn cell_weight(&self, k: usize) -> f64 {
        0.5 * (self.steps[k] + self.steps[k + 1])
    }
}

fn diff(nodes: &[f64]) -> Vec<f64> {
    nodes.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Tensor-product mesh on `(0,1)²`.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    /// x-axis mesh.
    pub x: Mesh1D,
    /// y-axis mesh.
    pub y: Mesh1D,
}

/// Uniform `ne × ne` tensor mesh.
pub fn build_uniform_mesh(ne: usize) -> Result<Arc<Mesh2D>> {
    Ok(Arc::new(Mesh2D {
        x: Mesh1D::uniform(ne)?,
        y: Mesh1D::uniform(ne)?,
    }))
}

/// Shishkin `ne × ne` tensor mesh with layers at `x = 1` and `y = 1`.
pub fn build_shishkin_mesh(ne: usize, eps: f64) -> Result<Arc<Mesh2D>> {
    Ok(Arc::new(Mesh2D {
        x: Mesh1D::shishkin(ne, eps)?,
        y: Mesh1D::shishkin(ne, eps)?,
    }))
}

impl Mesh2D {
    /// Interior node count in x.
    pub fn nx(&self) -> usize {
        self.x.num_interior()
    }

    /// Interior node count in y.
    pub fn ny(&self) -> usize {
        self.y.num_interior()
    }

    /// Total number of interior unknowns.
    pub fn num_interior(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Lexicographic index of interior node `(i, j)`, x fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    /// `Some(h)` when both axes are uniform with the same step.
    pub fn uniform_step(&self) -> Option<f64> {
        match (self.x.uniform_step(), self.y.uniform_step()) {
            (Some(hx), Some(hy)) if hx == hy => Some(hx),
            _ => None,
        }
    }

    /// Whether both axes were built uniform.
    pub fn is_uniform(&self) -> bool {
        self.x.uniform_step().is_some() && self.y.uniform_step().is_some()
    }

    /// Coordinates `(x, y)` of interior node `(i, j)`.
    pub fn interior_coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.interior_coord(i), self.y.interior_coord(j))
    }

    /// Product cell weight `w_i^x · w_j^y` of interior node `(i, j)`.
    pub fn cell_weight(&self, i: usize, j: usize) -> f64 {
        self.x.cell_weight(i) * self.y.cell_weight(j)
    }
}

/// A scalar field on the interior nodes of a [`Mesh2D`], implicitly zero on
/// the boundary.
#[derive(Debug, Clone)]
pub struct GridFunction {
    mesh: Arc<Mesh2D>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wrap an interior-value vector; its length must be `nx · ny`.
    pub fn new(mesh: Arc<Mesh2D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_interior() {
            return Err(Error::DimensionMismatch(format!(
                "grid function needs {} interior values, got {}",
                mesh.num_interior(),
                values.len()
            )));
        }
        Ok(Self { mesh, values })
    }

    /// The zero field.
    pub fn zeros(mesh: Arc<Mesh2D>) -> Self {
        let n = mesh.num_interior();
        Self {
            mesh,
            values: vec![0.0; n],
        }
    }

    /// Sample `f(x, y)` at every interior node.
    pub fn from_fn(mesh: Arc<Mesh2D>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(mesh.num_interior());
        for j in 0..mesh.ny() {
            for i in 0..mesh.nx() {
                let (x, y) = mesh.interior_coords(i, j);
                values.push(f(x, y));
            }
        }
        Self { mesh, values }
    }

    /// The underlying mesh.
    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    /// Interior values in lexicographic order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable interior values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Consume into the interior-value vector.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at interior node `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.index(i, j)]
    }

    /// Value at the *global* node `(gi, gj)` with `gi, gj ∈ 0..=Ne`; boundary
    /// nodes read as zero (homogeneous Dirichlet data).
    pub fn global(&self, gi: usize, gj: usize) -> f64 {
        let nx = self.mesh.nx();
        let ny = self.mesh.ny();
        if gi == 0 || gj == 0 || gi > nx || gj > ny {
            0.0
        } else {
            self.values[self.mesh.index(gi - 1, gj - 1)]
        }
    }

    /// Minimum interior value (0 for an empty interior).
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum interior value.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Diagnostics for one (scenario, method, mesh) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    /// Discrete L² error against the reference field.
    pub l2_error: f64,
    /// Maximum nodal error against the reference field.
    pub linf_error: f64,
    /// Total variation of the solution, interior pairs only.
    pub tv: f64,
    /// Extrema violation (undershoot + overshoot) against the reference.
    pub e_ext: f64,
    /// Directional non-monotonicity detector count.
    pub detector_count: usize,
    /// Mean stabilized modal indicator over the convection-dominated set,
    /// when a modal analysis applies to the mesh (uniform meshes only).
    pub rho_stab_mean: Option<f64>,
}

/// Cell-weighted discrete L² norm:
/// `‖V‖² = Σ_ij w_i^x w_j^y V_ij²`, which is `h² Σ V²` on a uniform mesh.
pub fn discrete_l2_norm(u: &GridFunction) -> f64 {
    let mesh = u.mesh();
    if let Some(h) = mesh.uniform_step() {
        let sum: f64 = u.values().iter().map(|v| v * v).sum();
        (h * h * sum).sqrt()
    } else {
        let mut sum = 0.0;
        for j in 0..mesh.ny() {
            let wy = mesh.y.cell_weight(j);
            for i in 0..mesh.nx() {
                let v = u.get(i, j);
                sum += mesh.x.cell_weight(i) * wy * v * v;
            }
        }
        sum.sqrt()
    }
}

/// Maximum absolute interior value.
pub fn discrete_linf_norm(u: &GridFunction) -> f64 {
    u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Discrete H¹ seminorm built from boundary-inclusive edge differences:
/// `|V|² = ‖D_x V‖² + ‖D_y V‖²` with the zero boundary values included, each
/// edge difference carrying a `1/h_e` factor and the edge measure
/// `h_e · w_⊥` (which is `h²` per edge on a uniform mesh).
pub fn discrete_h1_seminorm(u: &GridFunction) -> f64 {
    let mesh = u.mesh();
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let mut sum = 0.0;
    // x-directed edges: Ne_x edges in every interior row j.
    for j in 0..ny {
        let wy = mesh.y.cell_weight(j);
        for e in 0..=nx {
            let he = mesh.x.steps()[e];
            let d = (u.global(e + 1, j + 1) - u.global(e, j + 1)) / he;
            sum += he * wy * d * d;
        }
    }
    // y-directed edges: Ne_y edges in every interior column i.
    for i in 0..nx {
        let wx = mesh.x.cell_weight(i);
        for e in 0..=ny {
            let he = mesh.y.steps()[e];
            let d = (u.global(i + 1, e + 1) - u.global(i + 1, e)) / he;
            sum += he * wx * d * d;
        }
    }
    sum.sqrt()
}

/// Total variation over interior neighbor pairs only:
/// `Σ |U_{i+1,j} − U_{ij}| + Σ |U_{i,j+1} − U_{ij}|`.
pub fn total_variation(u: &GridFunction) -> f64 {
    let mesh = u.mesh();
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let mut tv = 0.0;
    for j in 0..ny {
        for i in 0..nx.saturating_sub(1) {
            tv += (u.get(i + 1, j) - u.get(i, j)).abs();
        }
    }
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx {
            tv += (u.get(i, j + 1) - u.get(i, j)).abs();
        }
    }
    tv
}

/// How far a field's range escapes a reference range.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtremaViolation {
    /// `max(0, min(ref) − min(u))`.
    pub undershoot: f64,
    /// `max(0, max(u) − max(ref))`.
    pub overshoot: f64,
    /// Undershoot + overshoot.
    pub total: f64,
}

/// Extrema violation of `u` against the range of `reference`.
///
/// Both ranges are taken over the full grid, and the homogeneous Dirichlet
/// boundary contributes its zero value; a strictly positive interior field
/// therefore has range `[0, max]`. This makes the undershoot of a
/// nonnegative solution exactly zero rather than a round-off residue.
pub fn extrema_violation(u: &GridFunction, reference: &GridFunction) -> ExtremaViolation {
    let undershoot = (reference.min().min(0.0) - u.min().min(0.0)).max(0.0);
    let overshoot = (u.max().max(0.0) - reference.max().max(0.0)).max(0.0);
    ExtremaViolation {
        undershoot,
        overshoot,
        total: undershoot + overshoot,
    }
}

/// Count interior nodes at which the backward and forward directional
/// differences along `beta` have opposite signs and both exceed `threshold`
/// in magnitude — i.e. resolvable directional extrema.
pub fn detector_count(u: &GridFunction, beta: [f64; 2], threshold: f64) -> usize {
    let (d_minus, d_plus) = crate::adsc::directional_differences(u, beta);
    d_minus
        .iter()
        .zip(&d_plus)
        .filter(|(a, b)| *a * *b < 0.0 && a.abs() > threshold && b.abs() > threshold)
        .count()
}

/// Bilinearly sample `u` (zero-extended to the boundary) at the interior
/// nodes of `target`. The source mesh must be uniform in both axes.
///
/// This both restricts a fine reference field to a coarse benchmark mesh and
/// prolongs a coarse warm start to a fine mesh.
pub fn resample(u: &GridFunction, target: &Arc<Mesh2D>) -> Result<GridFunction> {
    let source = u.mesh();
    let (hx, hy) = match (source.x.uniform_step(), source.y.uniform_step()) {
        (Some(hx), Some(hy)) => (hx, hy),
        _ => {
            return Err(Error::InvalidArgument(
                "resample requires a uniform source mesh".into(),
            ))
        }
    };
    let (ne_x, ne_y) = (source.x.num_intervals(), source.y.num_intervals());
    let mut values = Vec::with_capacity(target.num_interior());
    for j in 0..target.ny() {
        for i in 0..target.nx() {
            let (x, y) = target.interior_coords(i, j);
            let kx = ((x / hx).floor() as usize).min(ne_x - 1);
            let ky = ((y / hy).floor() as usize).min(ne_y - 1);
            let tx = (x - kx as f64 * hx) / hx;
            let ty = (y - ky as f64 * hy) / hy;
            let v00 = u.global(kx, ky);
            let v10 = u.global(kx + 1, ky);
            let v01 = u.global(kx, ky + 1);
            let v11 = u.global(kx + 1, ky + 1);
            values.push(
                (1.0 - tx) * (1.0 - ty) * v00
                    + tx * (1.0 - ty) * v10
                    + (1.0 - tx) * ty * v01
                    + tx * ty * v11,
            );
        }
    }
    GridFunction::new(target.clone(), values)
}

/// Restrict a fine-grid field to a coarse mesh by bilinear interpolation.
pub fn interpolate_to_coarse(fine: &GridFunction, coarse: &Arc<Mesh2D>) -> Result<GridFunction> {
    resample(fine, coarse)
}
