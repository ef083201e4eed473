//! Cell-centred equiangular grids on the sphere with covariant differential
//! operators of the round metric.
//!
//! Derivatives are reported in the orthonormal frame `e_1 = ∂_θ`,
//! `e_2 = (1/sin θ) ∂_φ`. Across a pole the polar index is continued through
//! the antipodal meridian: ring `-1` at azimuth `φ` is ring `0` at `φ + π`.
//!
//! The axisymmetric mode stores one value per polar ring and represents
//! `S^n` for any `n ≥ 2`; there `e_2` stands for each of the `n − 1`
//! directions tangent to the latitude sphere, which all share the same
//! Hessian entry `cot θ · f_θ`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    FullS2,
    Axisymmetric,
}

/// Frame components `(f_1, f_2)` of a tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameVector {
    pub t: f64,
    pub p: f64,
}

impl FrameVector {
    pub fn norm_sq(&self) -> f64 {
        self.t * self.t + self.p * self.p
    }
}

/// Frame components of a symmetric 2-tensor: `tt = ∇²f(e_1,e_1)`,
/// `tp = ∇²f(e_1,e_2)`, `pp = ∇²f(e_2,e_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameHessian {
    pub tt: f64,
    pub tp: f64,
    pub pp: f64,
}

pub type ScalarField = Vec<f64>;
pub type VectorField = Vec<FrameVector>;
pub type MatrixField = Vec<FrameHessian>;

/// Node-indicator set standing in for a Borel set on the sphere. `true`
/// marks nodes that belong to the set.
pub type NodeMask = [bool];

pub const MIN_POLAR_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    mode: GridMode,
    dim: usize,
    n_theta: usize,
    n_phi: usize,
    h_theta: f64,
    h_phi: f64,
    theta: Vec<f64>,
    phi: Vec<f64>,
    sin_theta: Vec<f64>,
    cot_theta: Vec<f64>,
    weights: Vec<f64>,
}

/// Surface measure of the unit sphere `S^m`.
pub fn sphere_area(m: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2π, |S^m| = 2π/(m−1)·|S^{m−2}|
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_area(m - 2),
    }
}

/// `∫_a^b sin^p θ dθ`, exact for `p ≤ 2`, 8-point Gauss–Legendre otherwise
/// (cells are a fraction of a degree wide, so this is at round-off level).
fn sin_power_integral(p: usize, a: f64, b: f64) -> f64 {
    match p {
        0 => b - a,
        1 => a.cos() - b.cos(),
        2 => 0.5 * (b - a) - 0.25 * ((2.0 * b).sin() - (2.0 * a).sin()),
        _ => crate::quadrature::gauss_legendre(|x| x.sin().powi(p as i32), a, b, 8),
    }
}

impl SphereGrid {
    /// `S²` grid with `n_theta` polar rings and `n_phi` azimuthal nodes.
    /// `n_phi` must be even so every node has an antipodal partner on its ring.
    pub fn full_s2(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < MIN_POLAR_NODES {
            return Err(Error::Config(format!(
                "n_theta = {n_theta} below the minimum of {MIN_POLAR_NODES}"
            )));
        }
        if n_phi < 4 || n_phi % 2 != 0 {
            return Err(Error::Config(format!("n_phi = {n_phi} must be even and at least 4")));
        }
        let h_theta = PI / n_theta as f64;
        let h_phi = 2.0 * PI / n_phi as f64;
        let mut g = Self::rings(GridMode::FullS2, 2, n_theta, n_phi, h_theta, h_phi);
        for i in 0..n_theta {
            let t0 = i as f64 * h_theta;
            let cell = sin_power_integral(1, t0, t0 + h_theta) * h_phi;
            for j in 0..n_phi {
                g.theta.push(g.theta_ring(i));
                g.phi.push(j as f64 * h_phi);
                g.weights.push(cell);
            }
        }
        g.finish();
        Ok(g)
    }

    /// Axisymmetric reduction of `S^dim` with `n_theta` rings.
    pub fn axisymmetric(dim: usize, n_theta: usize) -> Result<Self> {
        if n_theta < MIN_POLAR_NODES {
            return Err(Error::Config(format!(
                "n_theta = {n_theta} below the minimum of {MIN_POLAR_NODES}"
            )));
        }
        if dim < 2 {
            return Err(Error::Config(format!("sphere dimension {dim} must be at least 2")));
        }
        let h_theta = PI / n_theta as f64;
        let mut g = Self::rings(GridMode::Axisymmetric, dim, n_theta, 1, h_theta, 2.0 * PI);
        let latitude_area = sphere_area(dim - 1);
        for i in 0..n_theta {
            let t0 = i as f64 * h_theta;
            g.theta.push(g.theta_ring(i));
            g.phi.push(0.0);
            g.weights
                .push(latitude_area * sin_power_integral(dim - 1, t0, t0 + h_theta));
        }
        g.finish();
        Ok(g)
    }

    /// Dispatch on `mode`; `n_phi` is ignored for axisymmetric grids, which
    /// are built for `S²`.
    pub fn build(mode: GridMode, n_theta: usize, n_phi: usize) -> Result<Self> {
        match mode {
            GridMode::FullS2 => Self::full_s2(n_theta, n_phi),
            GridMode::Axisymmetric => Self::axisymmetric(2, n_theta),
        }
    }

    fn rings(mode: GridMode, dim: usize, n_theta: usize, n_phi: usize, h_theta: f64, h_phi: f64) -> Self {
        let cap = n_theta * n_phi;
        Self {
            mode,
            dim,
            n_theta,
            n_phi,
            h_theta,
            h_phi,
            theta: Vec::with_capacity(cap),
            phi: Vec::with_capacity(cap),
            sin_theta: Vec::new(),
            cot_theta: Vec::new(),
            weights: Vec::with_capacity(cap),
        }
    }

    fn theta_ring(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h_theta
    }

    fn finish(&mut self) {
        self.sin_theta = (0..self.n_theta).map(|i| self.theta_ring(i).sin()).collect();
        self.cot_theta = (0..self.n_theta).map(|i| 1.0 / self.theta_ring(i).tan()).collect();
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }
    /// Dimension `n` of the sphere `S^n`.
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    /// Azimuthal nodes per ring (1 in axisymmetric mode).
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn spacing(&self) -> (f64, f64) {
        (self.h_theta, self.h_phi)
    }
    /// Largest angular spacing; the `h` of the `O(h²)` estimates.
    pub fn h(&self) -> f64 {
        match self.mode {
            GridMode::FullS2 => self.h_theta.max(self.h_phi),
            GridMode::Axisymmetric => self.h_theta,
        }
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    /// `(ring, azimuth)` of a node index.
    #[inline]
    pub fn ring_of(&self, node: usize) -> (usize, usize) {
        (node / self.n_phi, node % self.n_phi)
    }

    /// Unit-sphere point of a node in `R³`. Axisymmetric nodes lie on the
    /// `φ = 0` meridian.
    pub fn unit_point(&self, node: usize) -> [f64; 3] {
        let (t, p) = (self.theta[node], self.phi[node]);
        [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
    }

    /// Samples `f(θ, φ)` at every node.
    pub fn sample(&self, mut f: impl FnMut(f64, f64) -> f64) -> ScalarField {
        self.theta.iter().zip(&self.phi).map(|(&t, &p)| f(t, p)).collect()
    }

    /// Node index of the extended ring `i ∈ [-1, n_theta]` and azimuth `j`
    /// (any integer), following the antipodal continuation at the poles.
    #[inline]
    fn wrap(&self, i: isize, j: isize) -> usize {
        let nt = self.n_theta as isize;
        let np = self.n_phi as isize;
        let (ii, jj) = if i < 0 {
            (0, j + np / 2)
        } else if i >= nt {
            (nt - 1, j + np / 2)
        } else {
            (i, j)
        };
        (ii * np + jj.rem_euclid(np)) as usize
    }

    fn check_len(&self, f: &[f64]) {
        assert_eq!(f.len(), self.len(), "field length does not match the grid");
    }

    /// Nodes whose values enter the difference stencils at `node`, including
    /// `node` itself. Sorted and deduplicated.
    pub fn stencil(&self, node: usize) -> Vec<usize> {
        let (i, j) = self.ring_of(node);
        let (i, j) = (i as isize, j as isize);
        let mut out = Vec::with_capacity(9);
        match self.mode {
            GridMode::FullS2 => {
                for di in -1..=1 {
                    for dj in -1..=1 {
                        out.push(self.wrap(i + di, j + dj));
                    }
                }
            }
            GridMode::Axisymmetric => {
                for di in -1..=1 {
                    out.push((i + di).clamp(0, self.n_theta as isize - 1) as usize);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Covariant gradient in the orthonormal frame by centred differences.
    pub fn covariant_grad(&self, f: &[f64]) -> VectorField {
        self.check_len(f);
        (0..self.len()).map(|node| self.grad_at(f, node)).collect()
    }

    /// Covariant Hessian in the orthonormal frame, including the Christoffel
    /// terms of the round metric.
    pub fn covariant_hess(&self, f: &[f64]) -> MatrixField {
        self.check_len(f);
        (0..self.len()).map(|node| self.hess_at(f, node)).collect()
    }

    /// Gradient and Hessian at one node.
    pub fn derivatives_at(&self, f: &[f64], node: usize) -> (FrameVector, FrameHessian) {
        (self.grad_at(f, node), self.hess_at(f, node))
    }

    fn grad_at(&self, f: &[f64], node: usize) -> FrameVector {
        let (i, j) = self.ring_of(node);
        match self.mode {
            GridMode::Axisymmetric => {
                let (up, down) = self.axis_neighbours(f, i);
                FrameVector {
                    t: (down - up) / (2.0 * self.h_theta),
                    p: 0.0,
                }
            }
            GridMode::FullS2 => {
                let (i, j) = (i as isize, j as isize);
                let v = |di: isize, dj: isize| f[self.wrap(i + di, j + dj)];
                let f_t = (v(1, 0) - v(-1, 0)) / (2.0 * self.h_theta);
                let f_p = (v(0, 1) - v(0, -1)) / (2.0 * self.h_phi);
                FrameVector {
                    t: f_t,
                    p: f_p / self.sin_theta[i as usize],
                }
            }
        }
    }

    /// Values at the rings above and below ring `i` of an axisymmetric field;
    /// the mirror across a pole is the ring itself.
    fn axis_neighbours(&self, f: &[f64], i: usize) -> (f64, f64) {
        let up = if i == 0 { f[0] } else { f[i - 1] };
        let down = if i + 1 == self.n_theta { f[i] } else { f[i + 1] };
        (up, down)
    }

    fn hess_at(&self, f: &[f64], node: usize) -> FrameHessian {
        let (i, j) = self.ring_of(node);
        let (ht, hp) = (self.h_theta, self.h_phi);
        let cot = self.cot_theta[i];
        match self.mode {
            GridMode::Axisymmetric => {
                let (up, down) = self.axis_neighbours(f, i);
                let c = f[i];
                let f_t = (down - up) / (2.0 * ht);
                FrameHessian {
                    tt: (down - 2.0 * c + up) / (ht * ht),
                    tp: 0.0,
                    pp: cot * f_t,
                }
            }
            GridMode::FullS2 => {
                let sin = self.sin_theta[i];
                let (i, j) = (i as isize, j as isize);
                let v = |di: isize, dj: isize| f[self.wrap(i + di, j + dj)];
                let c = v(0, 0);
                let f_t = (v(1, 0) - v(-1, 0)) / (2.0 * ht);
                let f_p = (v(0, 1) - v(0, -1)) / (2.0 * hp);
                let f_tt = (v(1, 0) - 2.0 * c + v(-1, 0)) / (ht * ht);
                let f_pp = (v(0, 1) - 2.0 * c + v(0, -1)) / (hp * hp);
                let f_tp = (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4.0 * ht * hp);
                FrameHessian {
                    tt: f_tt,
                    tp: (f_tp - cot * f_p) / sin,
                    pp: f_pp / (sin * sin) + cot * f_t,
                }
            }
        }
    }

    /// Trace of the covariant Hessian over all `n` frame directions.
    pub fn laplacian(&self, f: &[f64]) -> ScalarField {
        let transverse = (self.dim - 1) as f64;
        self.covariant_hess(f)
            .iter()
            .map(|h| h.tt + transverse * h.pp)
            .collect()
    }

    /// Quadrature `Σ f·w` over the nodes selected by `mask` (all nodes when
    /// `mask` is `None`).
    pub fn integrate(&self, f: &[f64], mask: Option<&NodeMask>) -> f64 {
        self.check_len(f);
        match mask {
            None => f.iter().zip(&self.weights).map(|(a, w)| a * w).sum(),
            Some(m) => {
                assert_eq!(m.len(), self.len(), "mask length does not match the grid");
                f.iter()
                    .zip(&self.weights)
                    .zip(m)
                    .filter(|(_, &keep)| keep)
                    .map(|((a, w), _)| a * w)
                    .sum()
            }
        }
    }

    /// Mask of nodes with `θ < π/2`.
    pub fn northern_hemisphere(&self) -> Vec<bool> {
        self.theta.iter().map(|&t| t < 0.5 * PI).collect()
    }

    /// Shifts a full-grid field by `shift` whole cells in azimuth.
    pub fn rotate_azimuth(&self, f: &[f64], shift: usize) -> ScalarField {
        self.check_len(f);
        let mut out = vec![0.0; f.len()];
        for i in 0..self.n_theta {
            for j in 0..self.n_phi {
                out[self.node(i, (j + shift) % self.n_phi)] = f[self.node(i, j)];
            }
        }
        out
    }
}
