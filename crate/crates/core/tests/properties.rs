use std::sync::Arc;

use proptest::prelude::*;

use hypercurv::cli::expr::{parse_expr, Expr, Func};
use hypercurv::cli::table::{parse_table, table_to_field, write_table};
use hypercurv::hypersurface::{gamma_inverse, gamma_transform, geometry_from_radial, RadialField};
use hypercurv::sphere_grid::{sphere_area, SphereGrid};
use hypercurv::steiner::{l_coefficient, parallel_shell_volume};
use hypercurv::symfun::{binomial, gamma_cone_contains, sigma, sigma_grad, sigma_minor, PrincipalSpectrum};

fn spectrum(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..=max_n)
}

fn brute_sigma(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| v[i]).product::<f64>())
        .sum()
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0.0f64..1e6).prop_map(Expr::Num), Just(Expr::Theta), Just(Expr::Phi),];
    leaf.prop_recursive(6, 48, 2, |inner| {
        let func = prop_oneof![
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Sinh),
            Just(Func::Cosh),
            Just(Func::Exp)
        ];
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (func, inner.clone()).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Pow(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #[test]
    fn sigma_matches_subset_sum(v in spectrum(7), k in 0usize..8) {
        let k = k.min(v.len());
        let lam = PrincipalSpectrum::new(v.clone()).unwrap();
        let exact = brute_sigma(&v, k);
        let scale = v.iter().map(|x| x.abs().max(1.0)).product::<f64>() * binomial(v.len(), k);
        prop_assert!((sigma(&lam, k).unwrap() - exact).abs() <= 1e-12 * scale);
    }

    #[test]
    fn sigma_is_symmetric(mut v in spectrum(6), k in 1usize..7, rot in 0usize..6) {
        let k = k.min(v.len());
        let a = sigma(&PrincipalSpectrum::new(v.clone()).unwrap(), k).unwrap();
        let len = v.len();
        v.rotate_left(rot % len);
        v.reverse();
        let b = sigma(&PrincipalSpectrum::new(v).unwrap(), k).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn gradient_is_the_minor(v in spectrum(6), k in 1usize..7) {
        let k = k.min(v.len());
        let lam = PrincipalSpectrum::new(v).unwrap();
        let grad = sigma_grad(&lam, k).unwrap();
        for (i, g) in grad.iter().enumerate() {
            let minor = sigma_minor(&lam, k - 1, &[i]).unwrap();
            prop_assert!((g - minor).abs() <= 1e-10 * minor.abs().max(1.0));
        }
    }

    #[test]
    fn cone_members_satisfy_maclaurin(v in prop::collection::vec(0.01f64..5.0, 1..=6), shift in -0.5f64..0.0) {
        let v: Vec<f64> = v.iter().map(|x| x + shift * x.min(0.5)).collect();
        let n = v.len();
        let lam = PrincipalSpectrum::new(v).unwrap();
        for k in 1..=n {
            prop_assume!(gamma_cone_contains(&lam, k));
            let lhs = (sigma(&lam, k).unwrap() / binomial(n, k)).powf(1.0 / k as f64);
            let rhs = sigma(&lam, 1).unwrap() / n as f64;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gamma_round_trip(rho in 1e-3f64..20.0) {
        let g = gamma_transform(rho).unwrap();
        prop_assert!(g < 0.0);
        let back = gamma_inverse(g).unwrap();
        prop_assert!((back - rho).abs() <= 1e-9 * rho.max(1.0));
    }

    #[test]
    fn l_coefficients_grow_in_t(t in 0.0f64..3.0, dt in 1e-3f64..1.0, n in 1usize..6, r in 0usize..6) {
        let r = r.min(n);
        prop_assert!(l_coefficient(t + dt, n, r).unwrap() > l_coefficient(t, n, r).unwrap());
    }

    #[test]
    fn round_shell_volume_matches_ball_difference(rho in 0.2f64..2.0, t in 0.01f64..1.5) {
        let grid = Arc::new(SphereGrid::full_s2(16, 8).unwrap());
        let geom = geometry_from_radial(&RadialField::constant(grid, rho).unwrap()).unwrap();
        let ball = |r: f64| std::f64::consts::PI * ((2.0 * r).sinh() - 2.0 * r);
        let exact = ball(rho + t) - ball(rho);
        let v = parallel_shell_volume(&geom, t, None).unwrap();
        prop_assert!(((v - exact) / exact).abs() < 1e-10, "{} vs {}", v, exact);
    }

    #[test]
    fn constants_integrate_to_the_sphere_area(n_theta in 16usize..40, half_phi in 2usize..20, c in -3.0f64..3.0) {
        let grid = SphereGrid::full_s2(n_theta, 2 * half_phi).unwrap();
        let total = grid.integrate(&vec![c; grid.len()], None);
        prop_assert!((total - c * sphere_area(2)).abs() < 1e-11);
    }

    #[test]
    fn printed_expressions_reparse(e in expr_tree()) {
        let printed = e.to_string();
        let back = parse_expr(&printed).unwrap();
        prop_assert_eq!(&back, &e);
    }

    #[test]
    fn parser_never_panics(s in "[-+*/^()0-9.eθφπ a-z]{0,64}") {
        let _ = parse_expr(&s);
    }

    #[test]
    fn tables_round_trip(seed in prop::collection::vec(0.1f64..10.0, 1..4)) {
        let grid = SphereGrid::full_s2(16, 8).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|i| seed[i % seed.len()] * (1.0 + i as f64)).collect();
        let rows = parse_table(&write_table(&grid, &values)).unwrap();
        prop_assert_eq!(table_to_field(&rows, &grid).unwrap(), values);
    }
}
