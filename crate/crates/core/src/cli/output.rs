//! File emission: per-node CSV, OBJ meshes and the Steiner sample table.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hypersurface::{poincare_ball, GeometryField, MinkowskiPoint, RadialField};
use crate::sphere_grid::GridMode;
use crate::steiner::SteinerFit;

/// Azimuthal samples used when an axisymmetric surface is revolved.
const REVOLVE_SEGMENTS: usize = 64;

pub const CSV_HEADER: &str = "theta,phi,rho,u,kappa1,kappa2,sigma_k";

pub fn solution_csv(solution: &RadialField, geom: &GeometryField, k: usize) -> String {
    let grid = solution.grid();
    let mut s = String::with_capacity(grid.len() * 96);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for (node, g) in geom.nodes().iter().enumerate() {
        let kap = g.kappa.values();
        let k2 = kap.get(1).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            grid.theta()[node],
            grid.phi()[node],
            solution.rho()[node],
            g.u,
            kap[0],
            k2,
            g.sigma(k)
        );
    }
    s
}

pub fn steiner_csv(fit: &SteinerFit) -> Result<String> {
    let mut s = String::from("t,shell_volume,l_basis_prediction\n");
    for (t, v) in fit.t_samples.iter().zip(&fit.shell_volumes) {
        let _ = writeln!(s, "{t:?},{v:?},{:?}", fit.predict(*t)?);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshChannel {
    /// Spatial part `x⃗` of the hyperboloid point; `x₀ = √(1 + |x⃗|²)`.
    Hyperboloid,
    PoincareBall,
}

/// Quad mesh of the surface with triangle fans closing the poles. Pole
/// radii are ring averages of the nearest nodes.
pub fn surface_obj(solution: &RadialField, channel: MeshChannel) -> Result<String> {
    let grid = solution.grid();
    if grid.dim() != 2 {
        return Err(Error::Config("meshes are only written for surfaces in H³".into()));
    }
    let (n_theta, n_phi) = match grid.mode() {
        GridMode::FullS2 => (grid.n_theta(), grid.n_phi()),
        GridMode::Axisymmetric => (grid.n_theta(), REVOLVE_SEGMENTS),
    };
    let rho_at = |i: usize, j: usize| match grid.mode() {
        GridMode::FullS2 => solution.rho()[grid.node(i, j)],
        GridMode::Axisymmetric => solution.rho()[i],
    };
    let ring_mean = |i: usize| (0..n_phi).map(|j| rho_at(i, j)).sum::<f64>() / n_phi as f64;
    let (ht, hp) = (grid.spacing().0, std::f64::consts::TAU / n_phi as f64);

    let point = |rho: f64, z: [f64; 3]| -> [f64; 3] {
        let s = rho.sinh();
        let p: MinkowskiPoint = [rho.cosh(), s * z[0], s * z[1], s * z[2]];
        match channel {
            MeshChannel::Hyperboloid => [p[1], p[2], p[3]],
            MeshChannel::PoincareBall => poincare_ball(&p),
        }
    };
    let mut out = String::new();
    out.push_str(match channel {
        MeshChannel::Hyperboloid => "# hyperboloid model, spatial coordinates; x0 = sqrt(1 + |x|^2)\n",
        MeshChannel::PoincareBall => "# Poincare ball model\n",
    });
    let mut vertex = |v: [f64; 3]| {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
    };
    vertex(point(ring_mean(0), [0.0, 0.0, 1.0]));
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * ht;
        for j in 0..n_phi {
            let phi = j as f64 * hp;
            let z = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            vertex(point(rho_at(i, j), z));
        }
    }
    vertex(point(ring_mean(n_theta - 1), [0.0, 0.0, -1.0]));

    // OBJ indices are 1-based; vertex 1 is the north pole
    let idx = |i: usize, j: usize| 2 + i * n_phi + j % n_phi;
    let south = 2 + n_theta * n_phi;
    for j in 0..n_phi {
        let _ = writeln!(out, "f 1 {} {}", idx(0, j), idx(0, j + 1));
    }
    for i in 0..n_theta - 1 {
        for j in 0..n_phi {
            let _ = writeln!(
                out,
                "f {} {} {} {}",
                idx(i, j),
                idx(i + 1, j),
                idx(i + 1, j + 1),
                idx(i, j + 1)
            );
        }
    }
    for j in 0..n_phi {
        let _ = writeln!(out, "f {} {} {}", idx(n_theta - 1, j + 1), idx(n_theta - 1, j), south);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::geometry_from_radial;
    use crate::sphere_grid::SphereGrid;
    use std::sync::Arc;

    #[test]
    fn csv_layout() {
        let grid = Arc::new(SphereGrid::full_s2(16, 8).unwrap());
        let r = RadialField::constant(grid.clone(), 1.0).unwrap();
        let geom = geometry_from_radial(&r).unwrap();
        let csv = solution_csv(&r, &geom, 1);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), grid.len() + 1);
        let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[2], 1.0);
        assert!((fields[4] - 1.0 / 1.0f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn mesh_vertices_lie_on_the_surface() {
        let grid = Arc::new(SphereGrid::full_s2(16, 8).unwrap());
        let r = RadialField::constant(grid.clone(), 0.7).unwrap();
        let hyp = surface_obj(&r, MeshChannel::Hyperboloid).unwrap();
        let ball = surface_obj(&r, MeshChannel::PoincareBall).unwrap();
        let radius = |line: &str| {
            let v: Vec<f64> = line[2..].split(' ').map(|x| x.parse().unwrap()).collect();
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        };
        let nv = 2 + grid.len();
        let hv: Vec<&str> = hyp.lines().filter(|l| l.starts_with("v ")).collect();
        assert_eq!(hv.len(), nv);
        for l in &hv {
            assert!((radius(l) - 0.7f64.sinh()).abs() < 1e-12);
        }
        for l in ball.lines().filter(|l| l.starts_with("v ")) {
            assert!((radius(l) - 0.35f64.tanh()).abs() < 1e-12);
        }
        let faces = hyp.lines().filter(|l| l.starts_with("f ")).count();
        assert_eq!(faces, 2 * 8 + 15 * 8);
        for l in hyp.lines().filter(|l| l.starts_with("f ")) {
            for i in l[2..].split(' ') {
                let i: usize = i.parse().unwrap();
                assert!((1..=nv).contains(&i));
            }
        }
    }

    #[test]
    fn axisymmetric_mesh_is_revolved() {
        let grid = Arc::new(SphereGrid::axisymmetric(2, 16).unwrap());
        let r = RadialField::from_fn(grid, |t, _| 1.0 + 0.1 * t.cos()).unwrap();
        let obj = surface_obj(&r, MeshChannel::Hyperboloid).unwrap();
        assert_eq!(
            obj.lines().filter(|l| l.starts_with("v ")).count(),
            2 + 16 * REVOLVE_SEGMENTS
        );
        let high = Arc::new(SphereGrid::axisymmetric(3, 16).unwrap());
        let r3 = RadialField::constant(high, 1.0).unwrap();
        assert!(surface_obj(&r3, MeshChannel::PoincareBall).is_err());
    }
}
