//! Discrete curvature-measure equation and its continuation solver.
//!
//! The equation is solved in the concave `1/k`-power form
//!
//! ```text
//! R(ρ) = (φ^{n−1} ω̃ σ_k(κ))^{1/k} − f_t^{1/k},
//! f_t  = (1 − t) + t f        (k < n)
//! f_t  = 2(1 − t) + t f       (k = n)
//! ```
//!
//! starting from the geodesic sphere that solves `t = 0`. Each step is a
//! damped Newton iteration on a finite-difference Jacobian; the Jacobian is
//! assembled column-group by column-group (distance-2 colouring of the
//! stencil graph) and factored as a band matrix.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{domain, Error, Result};
use crate::estimates::{self, Feasibility};
use crate::hypersurface::{geometry_from_radial, node_geometry, RadialField};
use crate::sphere_grid::{GridMode, ScalarField, SphereGrid};
use crate::symfun::{binomial, gamma_cone_contains};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub k: usize,
    pub t_step_init: f64,
    pub t_step_min: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Relative finite-difference step; node `j` is moved by `fd_eps·s_j²`
    /// with `s_j` the shortest side of its cell.
    pub fd_eps: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Workers for the Jacobian columns; results do not depend on it.
    pub threads: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            k: 1,
            t_step_init: 0.25,
            t_step_min: 1e-4,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            fd_eps: 1e-7,
            backtrack_factor: 0.5,
            max_backtracks: 30,
            threads: 1,
        }
    }
}

impl ContinuationConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::Config(format!("k = {} outside 1..={n}", self.k)));
        }
        if !(0.0 < self.t_step_min && self.t_step_min <= self.t_step_init && self.t_step_init <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 < t_step_min ({}) ≤ t_step_init ({}) ≤ 1",
                self.t_step_min, self.t_step_init
            )));
        }
        if !(self.newton_tol > 0.0) || !(self.fd_eps > 0.0) {
            return Err(Error::Config("newton_tol and fd_eps must be positive".into()));
        }
        if !(0.0 < self.backtrack_factor && self.backtrack_factor < 1.0) {
            return Err(Error::Config("backtrack_factor must lie in (0, 1)".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: f64,
    pub newton_iters: usize,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub t_trace: Vec<TraceEntry>,
    pub final_residual: f64,
    /// Sup-norm of `φ^{n−1} ω̃ σ_k(κ) − f` at the returned solution.
    pub raw_residual: f64,
    pub admissible: bool,
    pub bounds_ok: bool,
    pub c0: f64,
    pub c1: f64,
    pub wall_notes: String,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Right-hand side `f_t` of the path (before the `1/k` power).
pub fn path_target(f0: &[f64], n: usize, k: usize, t: f64) -> ScalarField {
    let base = if k == n { 2.0 } else { 1.0 };
    f0.iter().map(|f| base * (1.0 - t) + t * f).collect()
}

/// Residual values plus the number of nodes whose curvature left `Γ_k`.
/// Inadmissible nodes report `NaN`.
fn residual_values(grid: &SphereGrid, rho: &[f64], f_target: &[f64], k: usize) -> (ScalarField, usize) {
    let n = grid.dim();
    let inv_k = 1.0 / k as f64;
    let mut bad = 0;
    let values = (0..grid.len())
        .map(|node| {
            let (grad, hess) = grid.derivatives_at(rho, node);
            match node_geometry(n, rho[node], grad, hess) {
                Ok(g) if gamma_cone_contains(&g.kappa, k) => {
                    (g.area_el * g.sigma(k)).powf(inv_k) - f_target[node].powf(inv_k)
                }
                _ => {
                    bad += 1;
                    f64::NAN
                }
            }
        })
        .collect();
    (values, bad)
}

fn check_target(grid: &SphereGrid, f: &[f64]) -> Result<()> {
    if f.len() != grid.len() {
        return domain(format!(
            "right-hand side has {} values, grid has {} nodes",
            f.len(),
            grid.len()
        ));
    }
    if let Some(i) = f.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return domain(format!("right-hand side must be positive, node {i} has {}", f[i]));
    }
    Ok(())
}

/// Nodewise residual of the `1/k`-power equation against `f_target`.
pub fn residual(r: &RadialField, f_target: &[f64], k: usize) -> Result<ScalarField> {
    let grid = r.grid();
    check_target(grid, f_target)?;
    if k == 0 || k > grid.dim() {
        return domain(format!("k = {k} outside 1..={}", grid.dim()));
    }
    let (values, bad) = residual_values(grid, r.rho(), f_target, k);
    if bad > 0 {
        return Err(Error::Inadmissible {
            bad_nodes: bad,
            total: grid.len(),
        });
    }
    Ok(values)
}

/// Sup-norm of `φ^{n−1} ω̃ σ_k(κ) − f`.
pub fn raw_residual_norm(r: &RadialField, f: &[f64], k: usize) -> Result<f64> {
    let geom = geometry_from_radial(r)?;
    Ok(geom
        .nodes()
        .iter()
        .zip(f)
        .fold(0.0, |m, (g, f)| m.max((g.area_el * g.sigma(k) - f).abs())))
}

/// Radius `ρ₀` of the geodesic sphere with `C(n,k) cosh^k ρ₀ sinh^{n−k} ρ₀ = c`.
pub fn geodesic_sphere_radius(n: usize, k: usize, c: f64) -> Result<f64> {
    if k == 0 || k > n {
        return domain(format!("k = {k} outside 1..={n}"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!("target c = {c} must be positive and finite"));
    }
    let coef = binomial(n, k);
    let map = |rho: f64| coef * rho.cosh().powi(k as i32) * rho.sinh().powi((n - k) as i32);
    let dmap = |rho: f64| {
        let (s, ch) = (rho.sinh(), rho.cosh());
        let mut d = k as f64 * ch.powi(k as i32 - 1) * s.powi((n - k) as i32 + 1);
        if n > k {
            d += (n - k) as f64 * ch.powi(k as i32 + 1) * s.powi((n - k) as i32 - 1);
        }
        coef * d
    };
    if k == n && c <= coef {
        return Err(Error::Infeasible(format!(
            "cosh^{n} ρ = {c} has no positive root: the geodesic-sphere map stays above {coef}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while map(hi) < c {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Numeric(format!("no bracket for geodesic sphere target {c}")));
        }
    }
    if !(map(lo) <= c && c <= map(hi)) {
        return Err(Error::Numeric("geodesic sphere root is not bracketed".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if map(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    let mut rho = 0.5 * (lo + hi);
    for _ in 0..8 {
        let step = (map(rho) - c) / dmap(rho);
        let next = rho - step;
        if !(next >= lo && next <= hi) {
            break;
        }
        rho = next;
        if step.abs() <= 1e-16 * rho {
            break;
        }
    }
    Ok(rho)
}

/// Sparsity pattern and column colouring of the residual Jacobian.
#[derive(Debug, Clone)]
pub struct JacobianPattern {
    stencils: Vec<Vec<usize>>,
    color: Vec<usize>,
    n_colors: usize,
}

impl JacobianPattern {
    pub fn new(grid: &SphereGrid) -> Self {
        let stencils: Vec<Vec<usize>> = (0..grid.len()).map(|v| grid.stencil(v)).collect();
        let mut color = vec![usize::MAX; grid.len()];
        let mut n_colors = 0;
        let mut forbidden: Vec<usize> = Vec::new();
        for col in 0..grid.len() {
            forbidden.clear();
            // the stencil relation is symmetric: rows touching `col` are its stencil
            for &row in &stencils[col] {
                for &other in &stencils[row] {
                    if color[other] != usize::MAX {
                        forbidden.push(color[other]);
                    }
                }
            }
            let c = (0..).find(|c| !forbidden.contains(c)).expect("unbounded");
            color[col] = c;
            n_colors = n_colors.max(c + 1);
        }
        Self {
            stencils,
            color,
            n_colors,
        }
    }

    pub fn n_colors(&self) -> usize {
        self.n_colors
    }
}

/// Finite-difference Jacobian stored by rows over the stencil pattern.
#[derive(Debug, Clone)]
pub struct SparseJacobian {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseJacobian {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Band matrix in the node ordering `perm[node]`.
    fn to_band(&self, perm: &[usize]) -> BandMatrix {
        let (mut kl, mut ku) = (0usize, 0usize);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                let (pi, pj) = (perm[i], perm[j]);
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
            }
        }
        let mut band = BandMatrix::zeros(self.dim(), kl, ku);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                band.add(perm[i], perm[j], v);
            }
        }
        band
    }
}

/// Node ordering that keeps the Jacobian band narrow: rings in polar order,
/// azimuths folded as `0, N−1, 1, N−2, …` so periodic neighbours stay close.
fn band_ordering(grid: &SphereGrid) -> Vec<usize> {
    let np = grid.n_phi();
    (0..grid.len())
        .map(|node| {
            let (i, j) = grid.ring_of(node);
            let folded = if j < np.div_ceil(2) {
                2 * j
            } else {
                2 * (np - 1 - j) + 1
            };
            i * np + folded
        })
        .collect()
}

/// Forward-difference step for every column: `fd_eps` times the squared
/// smallest side of the node's cell, rounded so that `ρ + step` is exact.
fn column_steps(grid: &SphereGrid, rho: &[f64], fd_eps: f64) -> Vec<f64> {
    let (ht, hp) = grid.spacing();
    (0..grid.len())
        .map(|node| {
            let side = match grid.mode() {
                GridMode::FullS2 => ht.min(grid.theta()[node].sin() * hp),
                GridMode::Axisymmetric => ht,
            };
            let raw = fd_eps * side * side;
            (rho[node] + raw) - rho[node]
        })
        .collect()
}

fn colored_columns(
    grid: &SphereGrid,
    pattern: &JacobianPattern,
    rho: &[f64],
    base: &[f64],
    f_target: &[f64],
    k: usize,
    fd_eps: f64,
    threads: usize,
) -> Option<SparseJacobian> {
    let steps = column_steps(grid, rho, fd_eps);
    let eval_color = |c: usize| -> Option<ScalarField> {
        let trial: Vec<f64> = rho
            .iter()
            .zip(&steps)
            .zip(&pattern.color)
            .map(|((&r, &h), &col)| if col == c { r + h } else { r })
            .collect();
        let (perturbed, bad) = residual_values(grid, &trial, f_target, k);
        (bad == 0).then_some(perturbed)
    };
    let colors: Vec<usize> = (0..pattern.n_colors).collect();
    let threads = threads.clamp(1, colors.len().max(1));
    let columns: Vec<Option<ScalarField>> = if threads == 1 {
        colors.iter().map(|&c| eval_color(c)).collect()
    } else {
        let chunk = colors.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = colors
                .chunks(chunk)
                .map(|cs| scope.spawn(|| cs.iter().map(|&c| eval_color(c)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("jacobian worker panicked"))
                .collect()
        })
    };
    let mut rows: Vec<Vec<(usize, f64)>> = pattern.stencils.iter().map(|s| Vec::with_capacity(s.len())).collect();
    for (c, perturbed) in columns.into_iter().enumerate() {
        let perturbed = perturbed?;
        for (row, stencil) in pattern.stencils.iter().enumerate() {
            if let Some(&col) = stencil.iter().find(|&&col| pattern.color[col] == c) {
                rows[row].push((col, (perturbed[row] - base[row]) / steps[col]));
            }
        }
    }
    for row in &mut rows {
        row.sort_unstable_by_key(|e| e.0);
    }
    Some(SparseJacobian { rows })
}

/// Forward-difference Jacobian assembled by column colouring. The step is
/// reduced tenfold once if a perturbed state leaves the admissible cone.
pub fn jacobian_colored(r: &RadialField, f_target: &[f64], k: usize, fd_eps: f64) -> Result<SparseJacobian> {
    let pattern = JacobianPattern::new(r.grid());
    jacobian_with_pattern(r, &pattern, f_target, k, fd_eps, 1)
}

fn jacobian_with_pattern(
    r: &RadialField,
    pattern: &JacobianPattern,
    f_target: &[f64],
    k: usize,
    fd_eps: f64,
    threads: usize,
) -> Result<SparseJacobian> {
    let base = residual(r, f_target, k)?;
    for eps in [fd_eps, 0.1 * fd_eps] {
        if let Some(j) = colored_columns(r.grid(), pattern, r.rho(), &base, f_target, k, eps, threads) {
            return Ok(j);
        }
    }
    Err(Error::Inadmissible {
        bad_nodes: 1,
        total: r.grid().len(),
    })
}

/// Dense forward-difference Jacobian, one residual evaluation per column,
/// with the same per-column steps as [`jacobian_colored`].
pub fn jacobian(r: &RadialField, f_target: &[f64], k: usize, fd_eps: f64) -> Result<nalgebra::DMatrix<f64>> {
    let base = residual(r, f_target, k)?;
    let grid = r.grid();
    let n = grid.len();
    'eps: for eps in [fd_eps, 0.1 * fd_eps] {
        let steps = column_steps(grid, r.rho(), eps);
        let mut m = nalgebra::DMatrix::zeros(n, n);
        let mut trial = r.rho().to_vec();
        for col in 0..n {
            trial[col] += steps[col];
            let (perturbed, bad) = residual_values(grid, &trial, f_target, k);
            trial[col] = r.rho()[col];
            if bad > 0 {
                continue 'eps;
            }
            for row in 0..n {
                m[(row, col)] = (perturbed[row] - base[row]) / steps[col];
            }
        }
        return Ok(m);
    }
    Err(Error::Inadmissible { bad_nodes: 1, total: n })
}

/// Damped Newton iteration towards `residual(·, f_target, k) = 0`.
///
/// A step is accepted only when the trial iterate is positive, admissible
/// at every node and strictly lowers the residual sup-norm. Iteration stops
/// at `newton_tol` or at the round-off floor of the discrete operator,
/// whichever is larger. Returns the solution and the number of accepted
/// steps.
pub fn newton_solve(
    r_init: &RadialField,
    f_target: &[f64],
    k: usize,
    cfg: &ContinuationConfig,
) -> Result<(RadialField, usize)> {
    let (r, it, _) = newton_observed(r_init, f_target, k, cfg, &mut |_| {})?;
    Ok((r, it))
}

/// [`newton_solve`] that also hands every accepted iterate to `observer`
/// and returns the final residual norm.
pub fn newton_observed(
    r_init: &RadialField,
    f_target: &[f64],
    k: usize,
    cfg: &ContinuationConfig,
    observer: &mut dyn FnMut(&RadialField),
) -> Result<(RadialField, usize, f64)> {
    let grid = r_init.grid().clone();
    let mut current = r_init.clone();
    let mut res = residual(&current, f_target, k)?;
    let mut norm = sup_norm(&res);
    let pattern = JacobianPattern::new(&grid);
    let perm = band_ordering(&grid);
    let mut iterations = 0;
    while norm > cfg.newton_tol {
        let jac = jacobian_with_pattern(&current, &pattern, f_target, k, cfg.fd_eps, cfg.threads)?;
        if norm <= FLOOR_FACTOR * attainable_residual(&jac, current.rho(), f_target, k) {
            break;
        }
        if iterations >= cfg.newton_max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
            });
        }
        let lu = jac.to_band(&perm).factor()?;
        let mut rhs = vec![0.0; res.len()];
        for (node, v) in res.iter().enumerate() {
            rhs[perm[node]] = *v;
        }
        let permuted = lu.solve(&rhs);
        let step: Vec<f64> = (0..res.len()).map(|node| permuted[perm[node]]).collect();

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let trial: Vec<f64> = current.rho().iter().zip(&step).map(|(r, d)| r - alpha * d).collect();
            if trial.iter().all(|&r| r > 0.0 && r.is_finite()) {
                let (values, bad) = residual_values(&grid, &trial, f_target, k);
                if bad == 0 {
                    let trial_norm = sup_norm(&values);
                    if trial_norm < norm {
                        accepted = Some((trial, values, trial_norm));
                        break;
                    }
                }
            }
            alpha *= cfg.backtrack_factor;
        }
        let Some((rho, values, trial_norm)) = accepted else {
            return Err(Error::Safeguard { residual: norm });
        };
        current = RadialField::new(grid.clone(), rho)?;
        res = values;
        norm = trial_norm;
        iterations += 1;
        observer(&current);
    }
    Ok((current, iterations, norm))
}

/// Multiple of the round-off floor at which Newton stops even if
/// `newton_tol` is smaller.
const FLOOR_FACTOR: f64 = 16.0;

/// Smallest residual sup-norm resolvable in double precision: a one-ulp
/// change of `ρ` moves node `i` by about `ε Σ_j |J_ij| |ρ_j|`. Near the poles
/// of full grids this exceeds typical tolerances once rings vary in `φ`.
fn attainable_residual(jac: &SparseJacobian, rho: &[f64], f_target: &[f64], k: usize) -> f64 {
    let inv_k = 1.0 / k as f64;
    jac.rows()
        .iter()
        .zip(f_target)
        .map(|(row, f)| row.iter().map(|(j, v)| (v * rho[*j]).abs()).sum::<f64>() + f.powf(inv_k))
        .fold(0.0, f64::max)
        * f64::EPSILON
}

/// Continuity method from the geodesic sphere at `t = 0` to `f0` at `t = 1`.
pub fn continuation_solve(
    grid: Arc<SphereGrid>,
    f0: &[f64],
    cfg: &ContinuationConfig,
) -> Result<(RadialField, SolveReport)> {
    continuation_observed(grid, f0, cfg, &mut |_| {})
}

/// [`continuation_solve`] that reports every accepted Newton iterate.
pub fn continuation_observed(
    grid: Arc<SphereGrid>,
    f0: &[f64],
    cfg: &ContinuationConfig,
    observer: &mut dyn FnMut(&RadialField),
) -> Result<(RadialField, SolveReport)> {
    let n = grid.dim();
    let k = cfg.k;
    cfg.validate(n)?;
    check_target(&grid, f0)?;
    let mut notes = Vec::new();
    if k == n {
        match estimates::feasibility_alexandrov(f0) {
            Feasibility::Infeasible => {
                return Err(Error::Infeasible(
                    "max f < 1: there is no solution which satisfies the prescribed 0-th curvature measure equation"
                        .into(),
                ))
            }
            Feasibility::Unknown => notes.push("inf f ≤ 1 ≤ max f: existence not guaranteed".to_string()),
            Feasibility::Feasible => {}
        }
    }
    let start_c = if k == n { 2.0 } else { 1.0 };
    let rho0 = geodesic_sphere_radius(n, k, start_c)?;
    let mut current = RadialField::constant(grid.clone(), rho0)?;
    let start_res = sup_norm(&residual(&current, &path_target(f0, n, k, 0.0), k)?);
    let mut trace = vec![TraceEntry {
        t: 0.0,
        newton_iters: 0,
        residual_norm: start_res,
    }];
    notes.push(format!("start radius {rho0:.12}"));

    let mut t = 0.0;
    let mut step = cfg.t_step_init;
    let mut quick_steps = 0;
    let mut halvings = 0;
    while t < 1.0 {
        let t_next = (t + step).min(1.0);
        let target = path_target(f0, n, k, t_next);
        match newton_observed(&current, &target, k, cfg, observer) {
            Ok((next, iters, norm)) => {
                current = next;
                t = t_next;
                trace.push(TraceEntry {
                    t,
                    newton_iters: iters,
                    residual_norm: norm,
                });
                quick_steps = if iters <= 1 { quick_steps + 1 } else { 0 };
                if quick_steps >= 2 {
                    step = (2.0 * step).min(1.0);
                    quick_steps = 0;
                }
            }
            Err(e @ (Error::Singular(_) | Error::Domain(_) | Error::Config(_))) => return Err(e),
            Err(_) => {
                step *= 0.5;
                halvings += 1;
                quick_steps = 0;
                if step < cfg.t_step_min {
                    return Err(Error::Stall {
                        t,
                        step,
                        trace: trace.iter().map(|e| (e.t, e.newton_iters, e.residual_norm)).collect(),
                    });
                }
            }
        }
    }
    if halvings > 0 {
        notes.push(format!("{halvings} step halvings"));
    }

    let geom = geometry_from_radial(&current)?;
    let admissible = geom.is_admissible(k);
    let bracket = if k < n {
        Some(estimates::c0_bounds(f0, n, k)?)
    } else {
        estimates::alexandrov_c0_bounds(f0, n).ok()
    };
    let (c0, c1, bounds_ok) = match bracket {
        Some((c0, c1)) => {
            let slack = estimates::discretization_slack(&grid, c1);
            (c0, c1, c0 - slack <= current.min() && current.max() <= c1 + slack)
        }
        None => {
            notes.push("no C⁰ bracket for inf f ≤ 1".to_string());
            (f64::NAN, f64::NAN, false)
        }
    };
    let raw = raw_residual_norm(&current, f0, k)?;
    notes.push(format!("raw residual {raw:.3e}"));
    let final_residual = trace.last().map(|e| e.residual_norm).unwrap_or(start_res);
    Ok((
        current,
        SolveReport {
            t_trace: trace,
            final_residual,
            raw_residual: raw,
            admissible,
            bounds_ok,
            c0,
            c1,
            wall_notes: notes.join("; "),
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub index: usize,
    pub converged: bool,
    pub iterations: usize,
    pub sup_difference: f64,
    pub agrees: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub tolerance: f64,
    pub runs: Vec<ProbeRun>,
    /// `false` flags a uniqueness violation.
    pub unique: bool,
}

/// Solves with continuation, then re-runs the final Newton solve from the
/// solution plus each perturbation and compares the answers.
pub fn uniqueness_probe(
    grid: Arc<SphereGrid>,
    f0: &[f64],
    cfg: &ContinuationConfig,
    perturbations: &[ScalarField],
) -> Result<(RadialField, UniquenessReport)> {
    let (solution, _) = continuation_solve(grid, f0, cfg)?;
    let report = uniqueness_probe_from(&solution, f0, cfg, perturbations, 10.0 * cfg.newton_tol)?;
    Ok((solution, report))
}

/// Perturbed restarts around an already converged `reference`.
pub fn uniqueness_probe_from(
    reference: &RadialField,
    f0: &[f64],
    cfg: &ContinuationConfig,
    perturbations: &[ScalarField],
    tolerance: f64,
) -> Result<UniquenessReport> {
    let grid = reference.grid();
    let mut runs = Vec::with_capacity(perturbations.len());
    for (index, p) in perturbations.iter().enumerate() {
        if p.len() != grid.len() {
            return domain(format!("perturbation {index} has the wrong length"));
        }
        let start: Vec<f64> = reference.rho().iter().zip(p).map(|(r, d)| r + d).collect();
        let outcome = RadialField::new(grid.clone(), start).and_then(|s| newton_solve(&s, f0, cfg.k, cfg));
        runs.push(match outcome {
            Ok((sol, iterations)) => {
                let diff = sol.sup_distance(reference);
                ProbeRun {
                    index,
                    converged: true,
                    iterations,
                    sup_difference: diff,
                    agrees: diff <= tolerance,
                    error: None,
                }
            }
            Err(e) => ProbeRun {
                index,
                converged: false,
                iterations: 0,
                sup_difference: f64::INFINITY,
                agrees: false,
                error: Some(e.to_string()),
            },
        });
    }
    let unique = runs.iter().all(|r| r.agrees);
    Ok(UniquenessReport {
        tolerance,
        runs,
        unique,
    })
}

/// Seeded low-mode perturbations with sup-norm at most `amplitude`:
/// random combinations of `cos θ`, `P₂(cos θ)` and, on full grids,
/// `sin θ cos φ`, `sin θ sin φ`.
pub fn smooth_perturbations(grid: &SphereGrid, count: usize, amplitude: f64, seed: u64) -> Vec<ScalarField> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let full = grid.mode() == GridMode::FullS2;
    (0..count)
        .map(|_| {
            let mut a = [0.0f64; 4];
            for (i, c) in a.iter_mut().enumerate() {
                if full || i < 2 {
                    *c = rng.gen_range(-1.0..1.0);
                }
            }
            let norm = a.iter().map(|c| c.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
            grid.sample(|t, p| {
                let (ct, st) = (t.cos(), t.sin());
                let v = a[0] * ct + a[1] * 0.5 * (3.0 * ct * ct - 1.0) + a[2] * st * p.cos() + a[3] * st * p.sin();
                amplitude * v / norm
            })
        })
        .collect()
}

/// Largest azimuthal spread of a full-grid field over its rings.
pub fn azimuthal_variation(r: &RadialField) -> f64 {
    let grid = r.grid();
    if grid.mode() == GridMode::Axisymmetric {
        return 0.0;
    }
    (0..grid.n_theta())
        .map(|i| {
            let ring = &r.rho()[grid.node(i, 0)..grid.node(i, 0) + grid.n_phi()];
            let lo = ring.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ring.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axi(n_theta: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::axisymmetric(2, n_theta).unwrap())
    }

    #[test]
    fn residual_examples() {
        let grid = Arc::new(SphereGrid::full_s2(16, 16).unwrap());
        let f = vec![2.0f64.sinh(); grid.len()];
        let r = RadialField::constant(grid.clone(), 1.0).unwrap();
        assert!(sup_norm(&residual(&r, &f, 1).unwrap()) < 1e-12);
        let r = RadialField::constant(grid.clone(), 1.1).unwrap();
        let res = residual(&r, &f, 1).unwrap();
        let expected = 2.2f64.sinh() - 2.0f64.sinh();
        assert!(res.iter().all(|v| (v - expected).abs() < 1e-12));
        assert!((expected - 0.830).abs() < 1e-3);
        let rho0 = geodesic_sphere_radius(2, 2, 1.5).unwrap();
        let r = RadialField::constant(grid.clone(), rho0).unwrap();
        assert!(sup_norm(&residual(&r, &vec![1.5; grid.len()], 2).unwrap()) < 1e-12);
    }

    #[test]
    fn inadmissible_state_is_an_error() {
        let grid = axi(16);
        // a deep dimple at the poles pushes the mean curvature negative
        let r = RadialField::from_fn(grid.clone(), |t, _| 1.0 + 0.8 * (8.0 * t).cos()).unwrap();
        let f = vec![1.0; grid.len()];
        assert!(matches!(residual(&r, &f, 1), Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn geodesic_sphere_examples() {
        let r = geodesic_sphere_radius(2, 1, 1.0).unwrap();
        assert!((r - 1.0f64.asinh() / 2.0).abs() < 1e-14);
        assert!((r - 0.44068).abs() < 1e-5);
        let r = geodesic_sphere_radius(2, 2, 2.0).unwrap();
        assert!((r - 2.0f64.sqrt().acosh()).abs() < 1e-14);
        assert!((r - 0.88137).abs() < 1e-5);
        let r = geodesic_sphere_radius(2, 1, 2.0f64.sinh()).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(matches!(geodesic_sphere_radius(2, 2, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(geodesic_sphere_radius(2, 2, 0.5), Err(Error::Infeasible(_))));
        for (n, k) in [(3, 1), (3, 2), (4, 2), (5, 3)] {
            let r = geodesic_sphere_radius(n, k, 1.0).unwrap();
            let v = binomial(n, k) * r.cosh().powi(k as i32) * r.sinh().powi((n - k) as i32);
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobian_of_round_state_is_monotone() {
        let grid = Arc::new(SphereGrid::full_s2(16, 16).unwrap());
        let f = vec![2.0f64.sinh(); grid.len()];
        let r = RadialField::constant(grid.clone(), 1.0).unwrap();
        let j = jacobian_colored(&r, &f, 1, 1e-7).unwrap();
        let applied = j.mul_vec(&vec![1.0; grid.len()]);
        let expected = 2.0 * 2.0f64.cosh();
        assert!(applied
            .iter()
            .all(|&v| v > 0.0 && (v - expected).abs() < 1e-5 * expected));
    }

    #[test]
    fn colored_jacobian_matches_column_by_column() {
        let grid = Arc::new(SphereGrid::full_s2(16, 8).unwrap());
        let r = RadialField::from_fn(grid.clone(), |t, p| 1.0 + 0.1 * t.cos() + 0.05 * t.sin() * p.sin()).unwrap();
        let f = vec![3.0; grid.len()];
        let dense = jacobian(&r, &f, 1, 1e-7).unwrap();
        let colored = jacobian_colored(&r, &f, 1, 1e-7).unwrap().to_dense();
        let scale = dense.amax();
        assert!((dense - colored).amax() <= 1e-12 * scale.max(1.0) * 1e4);
    }

    #[test]
    fn jacobian_commutes_with_azimuthal_rotation() {
        let grid = Arc::new(SphereGrid::full_s2(16, 12).unwrap());
        let r = RadialField::from_fn(grid.clone(), |t, _| 1.0 + 0.1 * t.cos()).unwrap();
        let f = vec![3.0; grid.len()];
        let j = jacobian_colored(&r, &f, 1, 1e-7).unwrap();
        let v = grid.sample(|t, p| (t * 2.0).sin() * (p + 0.4).cos());
        let shift = 3;
        let jv_rot = grid.rotate_azimuth(&j.mul_vec(&v), shift);
        let j_vrot = j.mul_vec(&grid.rotate_azimuth(&v, shift));
        let scale = sup_norm(&jv_rot);
        for (a, b) in jv_rot.iter().zip(&j_vrot) {
            assert!((a - b).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn jacobian_predicts_directional_difference() {
        let grid = Arc::new(SphereGrid::full_s2(16, 12).unwrap());
        let r = RadialField::from_fn(grid.clone(), |t, _| 1.0 + 0.1 * t.cos()).unwrap();
        let f = vec![3.0; grid.len()];
        let j = jacobian_colored(&r, &f, 1, 1e-7).unwrap();
        let d = grid.sample(|t, p| 0.3 * t.sin() * p.cos() + 0.2 * t.cos().powi(2));
        let h = 1e-6;
        let base = residual(&r, &f, 1).unwrap();
        let moved: Vec<f64> = r.rho().iter().zip(&d).map(|(a, b)| a + h * b).collect();
        let moved = residual(&RadialField::new(grid.clone(), moved).unwrap(), &f, 1).unwrap();
        let fd: Vec<f64> = moved.iter().zip(&base).map(|(a, b)| (a - b) / h).collect();
        let jd = j.mul_vec(&d);
        let scale = sup_norm(&fd);
        let err = fd.iter().zip(&jd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 5e-5 * scale, "{err} vs {scale}");
    }

    #[test]
    fn newton_examples() {
        let grid = axi(32);
        let f = vec![2.0f64.sinh(); grid.len()];
        let cfg = ContinuationConfig::with_k(1);
        let start = RadialField::constant(grid.clone(), 1.05).unwrap();
        let (sol, it) = newton_solve(&start, &f, 1, &cfg).unwrap();
        assert!(it <= 6, "{it} iterations");
        assert!(sol.rho().iter().all(|r| (r - 1.0).abs() < 1e-10));

        let exact = RadialField::constant(grid.clone(), 1.0).unwrap();
        let (same, it) = newton_solve(&exact, &f, 1, &cfg).unwrap();
        assert_eq!(it, 0);
        assert_eq!(same.rho(), exact.rho());

        let far = RadialField::constant(grid.clone(), 5.0).unwrap();
        match newton_solve(&far, &f, 1, &cfg) {
            Ok((sol, _)) => assert!(sol.rho().iter().all(|r| (r - 1.0).abs() < 1e-8)),
            Err(e) => assert!(matches!(e, Error::NonConvergence { .. } | Error::Safeguard { .. })),
        }
    }

    #[test]
    fn continuation_on_round_target() {
        let grid = axi(64);
        let f = vec![2.0f64.sinh(); grid.len()];
        let (sol, report) = continuation_solve(grid, &f, &ContinuationConfig::with_k(1)).unwrap();
        assert!(sol.rho().iter().all(|r| (r - 1.0).abs() < 1e-8));
        assert_eq!(report.t_trace.last().unwrap().t, 1.0);
        assert!(report.t_trace[0].residual_norm < 1e-12);
        assert!(report.admissible && report.bounds_ok);
    }

    #[test]
    fn alexandrov_nonexistence_is_detected_before_solving() {
        let grid = axi(16);
        let f = vec![0.9; grid.len()];
        let mut calls = 0;
        let out = continuation_observed(grid, &f, &ContinuationConfig::with_k(2), &mut |_| calls += 1);
        assert!(matches!(out, Err(Error::Infeasible(_))));
        assert_eq!(calls, 0);
    }

    #[test]
    fn empty_probe_passes() {
        let grid = axi(16);
        let f = vec![2.0f64.sinh(); grid.len()];
        let cfg = ContinuationConfig::with_k(1);
        let (_, report) = uniqueness_probe(grid, &f, &cfg, &[]).unwrap();
        assert!(report.unique && report.runs.is_empty());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ContinuationConfig::with_k(3);
        assert!(cfg.validate(2).is_err());
        cfg.k = 1;
        cfg.t_step_min = 0.5;
        cfg.t_step_init = 0.25;
        assert!(cfg.validate(2).is_err());
    }
}
