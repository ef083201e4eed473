//! Steiner-type decomposition of parallel-shell volumes in `H^{n+1}`.
//!
//! Two independent pipelines meet here: the shell volume obtained by flowing
//! the surface along its normal, and the curvature measures `Φ_r` integrated
//! directly from `σ_{n−r}(κ)`. The shell volume never touches `σ`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::hypersurface::{curvature_measure, GeometryField};
use crate::quadrature::{adaptive_simpson, gauss_legendre_rule};
use crate::sphere_grid::NodeMask;

const SHELL_GAUSS_POINTS: usize = 32;

/// `l_{n+1−r}(t) = ∫₀ᵗ sinh^{n−r} x cosh^r x dx`.
pub fn l_coefficient(t: f64, n: usize, r: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("l coefficient needs t ≥ 0, got {t}"));
    }
    if r > n {
        return domain(format!("index r = {r} outside 0..={n}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let f = |x: f64| x.sinh().powi((n - r) as i32) * x.cosh().powi(r as i32);
    let scale = t * f(t).max(1.0);
    Ok(adaptive_simpson(&f, 0.0, t, 1e-14 * scale))
}

fn focal_distance(kappa: f64) -> Option<f64> {
    // cosh s + κ sinh s vanishes at tanh s = −1/κ, reachable only for κ < −1
    (kappa < -1.0).then(|| (-1.0 / kappa).atanh())
}

/// Volume swept by the normal flow `s ↦ exp(s ν)` for `s ∈ [0, t]` over the
/// masked part of the surface:
/// `∫_β ∫₀ᵗ Π_i (cosh s + κ_i sinh s) ds dμ_g`.
pub fn parallel_shell_volume(geom: &GeometryField, t: f64, mask: Option<&NodeMask>) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("shell thickness must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let (x, w) = gauss_legendre_rule(SHELL_GAUSS_POINTS);
    let nodes: Vec<(f64, f64, f64)> = x
        .iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let s = 0.5 * t * (1.0 + xi);
            (s.cosh(), s.sinh(), 0.5 * t * wi)
        })
        .collect();
    let grid = geom.grid();
    let mut density = vec![0.0; grid.len()];
    for (node, g) in geom.nodes().iter().enumerate() {
        if mask.is_some_and(|m| !m[node]) {
            continue;
        }
        for &k in g.kappa.values() {
            if let Some(s) = focal_distance(k).filter(|&s| s <= t) {
                return Err(Error::FocalCrossing { node, s });
            }
        }
        let jac: f64 = nodes
            .iter()
            .map(|&(c, s, wq)| wq * g.kappa.values().iter().map(|k| c + k * s).product::<f64>())
            .sum();
        density[node] = jac * g.area_el;
    }
    Ok(grid.integrate(&density, mask))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerFit {
    pub phis_fit: Vec<f64>,
    pub phis_direct: Vec<f64>,
    pub t_samples: Vec<f64>,
    pub shell_volumes: Vec<f64>,
    /// Ratio of extreme singular values of the l-basis design matrix.
    pub condition: f64,
    pub max_rel_err: f64,
}

impl SteinerFit {
    /// `Σ_r l_{n+1−r}(t) Φ_r` with the fitted measures.
    pub fn predict(&self, t: f64) -> Result<f64> {
        let n = self.phis_fit.len() - 1;
        (0..=n).map(|r| Ok(l_coefficient(t, n, r)? * self.phis_fit[r])).sum()
    }
}

/// Recovers `(Φ_0, …, Φ_n)` by least squares from shell volumes sampled at
/// `t_samples` and compares them with the directly integrated measures.
pub fn steiner_decompose(geom: &GeometryField, mask: Option<&NodeMask>, t_samples: &[f64]) -> Result<SteinerFit> {
    let n = geom.dim();
    if t_samples.len() < n + 2 {
        return Err(Error::Fit(format!(
            "{} samples cannot overdetermine {} measures",
            t_samples.len(),
            n + 1
        )));
    }
    if !(t_samples[0] > 0.0) || t_samples.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Fit("t samples must be positive and strictly increasing".into()));
    }
    let shell_volumes = t_samples
        .iter()
        .map(|&t| parallel_shell_volume(geom, t, mask))
        .collect::<Result<Vec<_>>>()?;
    let mut design = nalgebra::DMatrix::zeros(t_samples.len(), n + 1);
    for (i, &t) in t_samples.iter().enumerate() {
        for r in 0..=n {
            design[(i, r)] = l_coefficient(t, n, r)?;
        }
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Fit(format!(
            "design matrix is rank deficient (σ_min/σ_max = {:.3e})",
            smin / smax
        )));
    }
    let rhs = nalgebra::DVector::from_column_slice(&shell_volumes);
    let sol = svd.solve(&rhs, 1e-14 * smax).map_err(|e| Error::Fit(e.to_string()))?;
    let phis_fit: Vec<f64> = sol.iter().copied().collect();
    let phis_direct = (0..=n)
        .map(|r| curvature_measure(geom, r, mask))
        .collect::<Result<Vec<_>>>()?;
    let max_rel_err = phis_fit
        .iter()
        .zip(&phis_direct)
        .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(SteinerFit {
        phis_fit,
        phis_direct,
        t_samples: t_samples.to_vec(),
        shell_volumes,
        condition: smax / smin,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::{geometry_from_radial, RadialField};
    use crate::sphere_grid::SphereGrid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn round(grid: SphereGrid) -> GeometryField {
        geometry_from_radial(&RadialField::constant(Arc::new(grid), 1.0).unwrap()).unwrap()
    }

    #[test]
    fn l_coefficient_closed_forms() {
        let (s, c) = (1.0f64.sinh(), 1.0f64.cosh());
        assert!((l_coefficient(1.0, 2, 1).unwrap() - s * s / 2.0).abs() < 1e-12);
        assert!((l_coefficient(1.0, 2, 2).unwrap() - (1.0 + s * c) / 2.0).abs() < 1e-12);
        // ∫ sinh² = (sinh x cosh x − x)/2
        assert!((l_coefficient(1.0, 2, 0).unwrap() - (s * c - 1.0) / 2.0).abs() < 1e-12);
        assert!((l_coefficient(1.0, 2, 1).unwrap() - 0.69054).abs() < 1e-5);
        assert!((l_coefficient(1.0, 2, 2).unwrap() - 1.40672).abs() < 1e-5);
        assert_eq!(l_coefficient(0.0, 5, 3).unwrap(), 0.0);
        assert!(l_coefficient(-0.1, 2, 1).is_err());
        for t in [0.1, 0.5, 2.0] {
            let l = |r| l_coefficient(t, 2, r).unwrap();
            assert!(l(2) > l(1) && l(1) > l(0));
        }
    }

    #[test]
    fn round_sphere_shell() {
        let geom = round(SphereGrid::full_s2(16, 32).unwrap());
        let v = parallel_shell_volume(&geom, 0.5, None).unwrap();
        let exact = PI * (3.0f64.sinh() - 2.0f64.sinh() - 1.0);
        assert!(((v - exact) / exact).abs() < 1e-12, "{v} vs {exact}");
        assert!((v - 16.936).abs() < 1e-3);
        assert_eq!(parallel_shell_volume(&geom, 0.0, None).unwrap(), 0.0);
    }

    #[test]
    fn round_sphere_fit_and_hemisphere() {
        let grid = SphereGrid::full_s2(16, 32).unwrap();
        let hemi = grid.northern_hemisphere();
        let geom = round(grid);
        let ts: Vec<f64> = (1..=6).map(|i| 0.1 * i as f64).collect();
        let fit = steiner_decompose(&geom, None, &ts).unwrap();
        let (s, c) = (1.0f64.sinh(), 1.0f64.cosh());
        let exact = [4.0 * PI * c * c, 8.0 * PI * s * c, 4.0 * PI * s * s];
        for (a, e) in fit.phis_fit.iter().zip(exact) {
            assert!(((a - e) / e).abs() < 1e-8, "{a} vs {e}");
        }
        assert!(fit.max_rel_err < 1e-8);
        let half = steiner_decompose(&geom, Some(&hemi), &ts).unwrap();
        for (h, f) in half.phis_fit.iter().zip(&fit.phis_fit) {
            assert!((2.0 * h / f - 1.0).abs() < 1e-8);
        }
        assert!((fit.predict(0.5).unwrap() - fit.shell_volumes[4]).abs() < 1e-8);
    }

    #[test]
    fn fit_rejects_bad_samples() {
        let geom = round(SphereGrid::axisymmetric(2, 32).unwrap());
        assert!(matches!(
            steiner_decompose(&geom, None, &[0.1, 0.2, 0.3]),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            steiner_decompose(&geom, None, &[0.1, 0.3, 0.2, 0.4]),
            Err(Error::Fit(_))
        ));
        let clustered = [1e-6, 1.000001e-6, 1.000002e-6, 1.000003e-6];
        assert!(matches!(steiner_decompose(&geom, None, &clustered), Err(Error::Fit(_))));
    }

    #[test]
    fn focal_crossing_is_an_error() {
        let grid = Arc::new(SphereGrid::full_s2(16, 32).unwrap());
        // a deep dimple gives strongly negative curvature near the pole
        let r = RadialField::from_fn(grid, |t, _| 1.0 - 0.5 * (-(t * t) / 0.02).exp()).unwrap();
        let geom = geometry_from_radial(&r).unwrap();
        assert!(geom.nodes().iter().any(|g| g.kappa.values().iter().any(|&k| k < -1.0)));
        assert!(matches!(
            parallel_shell_volume(&geom, 5.0, None),
            Err(Error::FocalCrossing { .. })
        ));
    }

    #[test]
    fn shell_matches_l_basis_on_perturbed_body() {
        let grid = Arc::new(SphereGrid::axisymmetric(2, 64).unwrap());
        let r = RadialField::from_fn(grid, |t, _| 1.0 + 0.05 * t.cos()).unwrap();
        let geom = geometry_from_radial(&r).unwrap();
        let phis: Vec<f64> = (0..=2).map(|k| curvature_measure(&geom, k, None).unwrap()).collect();
        let mut prev = 0.0;
        for t in [0.05, 0.2, 0.4, 0.8] {
            let v = parallel_shell_volume(&geom, t, None).unwrap();
            let basis: f64 = (0..=2).map(|k| l_coefficient(t, 2, k).unwrap() * phis[k]).sum();
            assert!(((v - basis) / v).abs() < 1e-10);
            assert!(v > prev);
            prev = v;
        }
    }
}
