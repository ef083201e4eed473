//! Geometry of a star-shaped hypersurface written as a radial graph
//! `{(ρ(x), x) : x ∈ S^n}` in hyperbolic space with metric `dρ² + sinh²ρ dz²`.
//!
//! With `φ = sinh ρ`, `ω̃ = √(φ² + |∇ρ|²)` and `∇ρ`, `∇²ρ` taken in the round
//! metric of `S^n`:
//!
//! ```text
//! u        = φ² / ω̃
//! g_ij     = φ² δ_ij + ρ_i ρ_j
//! h_ij     = (−φ ρ_ij + 2φ' ρ_i ρ_j + φ² φ' δ_ij) / ω̃
//! h̃^i_j    = A h A / φ²,   A = δ − ∇ρ∇ρᵀ / (ω̃(ω̃ + φ))
//! √det g   = φ^{n−1} ω̃
//! ```
//!
//! `A/φ` is the inverse square root of `g`, so `h̃` is symmetric and similar
//! to the mixed shape operator `g⁻¹h`; the principal curvatures are its
//! eigenvalues.

use std::sync::Arc;

use crate::error::{domain, Result};
use crate::sphere_grid::{FrameHessian, FrameVector, NodeMask, ScalarField, SphereGrid};
use crate::symfun::{gamma_cone_contains, sigma_of_matrix, PrincipalSpectrum, SymMatrix};

/// Warping function of hyperbolic space in geodesic polar coordinates.
#[derive(Debug, Clone, Copy, Default)]
pub struct HyperbolicProfile;

impl HyperbolicProfile {
    #[inline]
    pub fn phi(rho: f64) -> f64 {
        rho.sinh()
    }
    #[inline]
    pub fn phi_prime(rho: f64) -> f64 {
        rho.cosh()
    }
    /// Primitive of `φ` normalised by `Φ(0) = 0`.
    #[inline]
    pub fn big_phi(rho: f64) -> f64 {
        rho.cosh() - 1.0
    }
}

/// Positive radial function on a sphere grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<SphereGrid>,
    rho: ScalarField,
}

impl RadialField {
    pub fn new(grid: Arc<SphereGrid>, rho: ScalarField) -> Result<Self> {
        if rho.len() != grid.len() {
            return domain(format!("field has {} values, grid has {} nodes", rho.len(), grid.len()));
        }
        if let Some(i) = rho.iter().position(|&r| !(r > 0.0) || !r.is_finite()) {
            return domain(format!("radial function is not positive at node {i} ({})", rho[i]));
        }
        Ok(Self { grid, rho })
    }

    pub fn constant(grid: Arc<SphereGrid>, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub fn from_fn(grid: Arc<SphereGrid>, f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let rho = grid.sample(f);
        Self::new(grid, rho)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    pub fn into_rho(self) -> ScalarField {
        self.rho
    }

    pub fn min(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sup-norm distance to another field on the same grid.
    pub fn sup_distance(&self, other: &RadialField) -> f64 {
        self.rho
            .iter()
            .zip(&other.rho)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Derived geometry at one node.
#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub rho: f64,
    pub u: f64,
    pub g: SymMatrix,
    pub h_tilde: SymMatrix,
    pub kappa: PrincipalSpectrum,
    /// `σ_0(κ), …, σ_n(κ)`.
    pub sigmas: Vec<f64>,
    /// `√det g` relative to the round measure of `S^n`.
    pub area_el: f64,
    pub grad_rho: FrameVector,
    pub omega_tilde: f64,
}

impl NodeGeometry {
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigmas[k]
    }
}

/// Expands the two frame directions of a grid into the full `n`-frame:
/// directions `3..n` (axisymmetric reduction) carry zero gradient and the
/// transverse Hessian entry `pp`.
fn frame_gradient(n: usize, grad: FrameVector) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[0] = grad.t;
    p[1] = grad.p;
    p
}

fn frame_hessian(n: usize, hess: FrameHessian) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    m.set(0, 0, hess.tt);
    m.set(0, 1, hess.tp);
    for i in 1..n {
        m.set(i, i, hess.pp);
    }
    m
}

/// Metric, support function, symmetrised shape operator and curvature at one
/// point of `S^n`, from `ρ` and its covariant derivatives there.
pub fn node_geometry(n: usize, rho: f64, grad: FrameVector, hess: FrameHessian) -> Result<NodeGeometry> {
    if !(rho > 0.0) {
        return domain(format!("radial function must be positive, got {rho}"));
    }
    let phi = HyperbolicProfile::phi(rho);
    let dphi = HyperbolicProfile::phi_prime(rho);
    let p = frame_gradient(n, grad);
    let hess = frame_hessian(n, hess);
    let grad_sq = grad.norm_sq();
    let omega = (phi * phi + grad_sq).sqrt();
    let u = phi * phi / omega;

    let g = SymMatrix::from_fn(n, |i, j| {
        let d = if i == j { phi * phi } else { 0.0 };
        d + p[i] * p[j]
    });
    // second fundamental form without its 1/ω̃ factor
    let b = SymMatrix::from_fn(n, |i, j| {
        let d = if i == j { phi * phi * dphi } else { 0.0 };
        -phi * hess.get(i, j) + 2.0 * dphi * p[i] * p[j] + d
    });
    let c = 1.0 / (omega * (omega + phi));
    let a = SymMatrix::from_fn(n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - c * p[i] * p[j]
    });
    let scale = 1.0 / (phi * phi * omega);
    let h_tilde = SymMatrix::from_fn(n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += a.get(i, k) * b.get(k, l) * a.get(l, j);
            }
        }
        scale * s
    });
    let (_, kappa) = sigma_of_matrix(&h_tilde, 0)?;
    let sigmas = kappa.all_sigmas();
    let area_el = phi.powi(n as i32 - 1) * omega;
    Ok(NodeGeometry {
        rho,
        u,
        g,
        h_tilde,
        kappa,
        sigmas,
        area_el,
        grad_rho: grad,
        omega_tilde: omega,
    })
}

/// The mixed shape operator `h^i_j = g^{ik} h_kj` (not symmetric).
pub fn raw_shape_operator(n: usize, rho: f64, grad: FrameVector, hess: FrameHessian) -> nalgebra::DMatrix<f64> {
    let phi = HyperbolicProfile::phi(rho);
    let dphi = HyperbolicProfile::phi_prime(rho);
    let p = frame_gradient(n, grad);
    let hess = frame_hessian(n, hess);
    let omega_sq = phi * phi + grad.norm_sq();
    let omega = omega_sq.sqrt();
    let g_inv = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        (d - p[i] * p[j] / omega_sq) / (phi * phi)
    });
    let h = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { phi * phi * dphi } else { 0.0 };
        (-phi * hess.get(i, j) + 2.0 * dphi * p[i] * p[j] + d) / omega
    });
    g_inv * h
}

/// Per-node geometry of a radial graph.
#[derive(Debug, Clone)]
pub struct GeometryField {
    grid: Arc<SphereGrid>,
    nodes: Vec<NodeGeometry>,
}

impl GeometryField {
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }
    pub fn nodes(&self) -> &[NodeGeometry] {
        &self.nodes
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// `σ_k(κ)` at every node.
    pub fn sigma_field(&self, k: usize) -> ScalarField {
        self.nodes.iter().map(|g| g.sigma(k)).collect()
    }

    pub fn area_field(&self) -> ScalarField {
        self.nodes.iter().map(|g| g.area_el).collect()
    }

    /// Number of nodes whose curvature lies outside `Γ_k`.
    pub fn inadmissible_count(&self, k: usize) -> usize {
        self.nodes.iter().filter(|g| !gamma_cone_contains(&g.kappa, k)).count()
    }

    pub fn is_admissible(&self, k: usize) -> bool {
        self.inadmissible_count(k) == 0
    }

    /// Largest principal curvature over the surface.
    pub fn lambda_max(&self) -> f64 {
        self.nodes
            .iter()
            .map(|g| g.kappa.max())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates the radial-graph formulas at every node.
pub fn geometry_from_radial(r: &RadialField) -> Result<GeometryField> {
    let grid = r.grid();
    let n = grid.dim();
    let nodes = (0..grid.len())
        .map(|node| {
            let (grad, hess) = grid.derivatives_at(r.rho(), node);
            node_geometry(n, r.rho()[node], grad, hess)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeometryField {
        grid: grid.clone(),
        nodes,
    })
}

/// Geometry from exact derivatives supplied by the caller, e.g. for a
/// manufactured solution. `derivs(θ, φ)` returns `(ρ, ∇ρ, ∇²ρ)` in the frame.
pub fn geometry_from_exact(
    grid: Arc<SphereGrid>,
    mut derivs: impl FnMut(f64, f64) -> (f64, FrameVector, FrameHessian),
) -> Result<GeometryField> {
    let n = grid.dim();
    let nodes = (0..grid.len())
        .map(|node| {
            let (rho, grad, hess) = derivs(grid.theta()[node], grid.phi()[node]);
            node_geometry(n, rho, grad, hess)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeometryField { grid, nodes })
}

/// The curvature measure `Φ_r(β) = ∫_β σ_{n−r}(κ) √det g dμ_{S^n}`.
pub fn curvature_measure(geom: &GeometryField, r_index: usize, mask: Option<&NodeMask>) -> Result<f64> {
    let n = geom.dim();
    if r_index > n {
        return domain(format!("curvature measure index {r_index} outside 0..={n}"));
    }
    let density: Vec<f64> = geom.nodes.iter().map(|g| g.sigma(n - r_index) * g.area_el).collect();
    Ok(geom.grid.integrate(&density, mask))
}

/// `γ(ρ) = ln tanh(ρ/2)`, the primitive of `1/sinh ρ`.
pub fn gamma_transform(rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return domain(format!("γ transform needs ρ > 0, got {rho}"));
    }
    Ok((0.5 * rho).tanh().ln())
}

/// Inverse of [`gamma_transform`]; defined for `γ < 0`.
pub fn gamma_inverse(gamma: f64) -> Result<f64> {
    if !(gamma < 0.0) {
        return domain(format!("γ must be negative, got {gamma}"));
    }
    Ok(2.0 * gamma.exp().atanh())
}

/// Point on the hyperboloid `−x₀² + |x⃗|² = −1`.
pub type MinkowskiPoint = [f64; 4];

/// Hyperboloid coordinates `(cosh ρ, sinh ρ · x)` of every node. For
/// axisymmetric grids the points lie in the `φ = 0` meridian slice.
pub fn embed_hyperboloid(r: &RadialField) -> Vec<MinkowskiPoint> {
    let grid = r.grid();
    (0..grid.len())
        .map(|node| {
            let rho = r.rho()[node];
            let x = grid.unit_point(node);
            let s = rho.sinh();
            [rho.cosh(), s * x[0], s * x[1], s * x[2]]
        })
        .collect()
}

pub fn minkowski_dot(a: &MinkowskiPoint, b: &MinkowskiPoint) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Hyperbolic distance between two hyperboloid points.
pub fn hyperbolic_distance(a: &MinkowskiPoint, b: &MinkowskiPoint) -> f64 {
    (-minkowski_dot(a, b)).max(1.0).acosh()
}

/// Poincaré-ball image `x⃗ / (1 + x₀)`.
pub fn poincare_ball(p: &MinkowskiPoint) -> [f64; 3] {
    let d = 1.0 + p[0];
    [p[1] / d, p[2] / d, p[3] / d]
}
