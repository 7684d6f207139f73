use banditlab::actionspace::{pnorm, ActionSpace};
use banditlab::bandit::trial_rng;
use banditlab::linalg::{dot, norm, sub, trust_region_max_norm, weyl_check, SymMatrix};
use proptest::prelude::*;

fn sym(d: usize, scale: f64) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
        let mut m = SymMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set(i, j, scale * v[i * d + j]);
            }
        }
        m
    })
}

fn pd(d: usize) -> impl Strategy<Value = SymMatrix> {
    sym(d, 1.0).prop_map(move |b| {
        let mut m = b.congruence(&SymMatrix::identity(d)).unwrap();
        m.add_scaled_identity(0.1);
        m
    })
}

fn unit(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d)
        .prop_filter("nonzero", |v| norm(v) > 1e-3)
        .prop_map(|v| {
            let n = norm(&v);
            v.iter().map(|x| x / n).collect()
        })
}

fn dim_and<S: Strategy, F: Fn(usize) -> S>(lo: usize, hi: usize, f: F) -> impl Strategy<Value = (usize, S::Value)> {
    (lo..=hi).prop_flat_map(move |d| (Just(d), f(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs((_d, m) in dim_and(1, 8, |d| sym(d, 3.0))) {
        let e = m.eig().unwrap();
        let err = e.reconstruct().sub(&m).unwrap().as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(err < 1e-9);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        for (i, u) in e.eigenvectors.iter().enumerate() {
            prop_assert!((norm(u) - 1.0).abs() < 1e-10);
            for v in &e.eigenvectors[i + 1..] {
                prop_assert!(dot(u, v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weyl_holds(((_d, a), h) in dim_and(2, 6, |d| sym(d, 2.0)).prop_flat_map(|(d, a)| (Just((d, a)), sym(d, 0.5)))) {
        prop_assert!(weyl_check(&a, &h).unwrap().holds);
    }

    #[test]
    fn trust_region_dominates_boundary(
        (d, shape, center, dirs) in (2usize..=4).prop_flat_map(|d| (
            Just(d),
            pd(d),
            prop::collection::vec(-2.0f64..2.0, d),
            prop::collection::vec(unit(d), 50),
        )),
        radius in 0.05f64..3.0,
    ) {
        let sol = trust_region_max_norm(&center, &shape, radius).unwrap();
        let inv_root = shape.eig().unwrap().map_spectrum(|l| 1.0 / l.sqrt());
        // the maximizer sits on the boundary ||y - c||_shape = radius
        let off = sub(&sol.maximizer, &center);
        prop_assert!((shape.quad_form(&off).sqrt() - radius).abs() < 1e-6 * radius.max(1.0));
        prop_assert!((norm(&sol.maximizer) - sol.max_norm).abs() < 1e-9 * sol.max_norm.max(1.0));
        for s in &dirs {
            let y: Vec<f64> = inv_root.mul_vec(s).iter().zip(&center).map(|(x, c)| c + radius * x).collect();
            prop_assert!(norm(&y) <= sol.max_norm * (1.0 + 1e-9) + 1e-12);
        }
        prop_assert_eq!(d, center.len());
    }

    #[test]
    fn ucb_with_zero_radius_is_greedy(
        (d, theta, shape) in (2usize..=3).prop_flat_map(|d| (Just(d), unit(d), pd(d))),
        p in 2.0f64..8.0,
    ) {
        let mut gram = shape;
        gram.add_scaled_identity(1.0);
        let spaces = [
            ActionSpace::unit_sphere(d).unwrap(),
            ActionSpace::pnorm_ball(d, p, 1.5).unwrap(),
            ActionSpace::ellipsoid(gram.clone(), 1.0, vec![0.0; d]).unwrap(),
        ];
        for space in &spaces {
            let a = space.ucb_argmax(&theta, &gram, 0.0).unwrap();
            let b = space.linear_argmax(&theta).unwrap();
            prop_assert!((dot(&a, &theta) - dot(&b, &theta)).abs() < 1e-7);
        }
    }

    #[test]
    fn eps_sets_are_nested_and_capped(
        (d, theta, xs) in (2usize..=4).prop_flat_map(|d| (Just(d), unit(d), prop::collection::vec(unit(d), 30))),
        e1 in 0.0f64..0.5,
        de in 0.0f64..0.5,
    ) {
        let space = ActionSpace::unit_sphere(d).unwrap();
        let e2 = e1 + de;
        for x in &xs {
            let inside = space.eps_optimal_contains(&theta, e1, x).unwrap();
            if inside {
                prop_assert!(space.eps_optimal_contains(&theta, e2, x).unwrap());
                // on the unit sphere, <x, v> >= 1 - eps gives ||x - v|| <= sqrt(2 eps)
                prop_assert!(norm(&sub(x, &theta)) <= (2.0 * e1).sqrt() + 1e-9);
            }
        }
    }

    #[test]
    fn exact_disjointness_agrees_with_sampling(
        (d, theta, theta2) in (2usize..=3).prop_flat_map(|d| (Just(d), unit(d), unit(d))),
        eps in 0.01f64..0.3,
        seed in 0u64..1000,
    ) {
        let space = ActionSpace::unit_sphere(d).unwrap();
        let mut rng = trial_rng(seed, 0);
        if space.check_disjoint_eps_sets(&theta, &theta2, eps, 0, &mut rng).unwrap() {
            for _ in 0..2000 {
                let x = space.sample_uniform(&mut rng);
                let both = space.eps_optimal_contains(&theta, eps, &x).unwrap()
                    && space.eps_optimal_contains(&theta2, eps, &x).unwrap();
                prop_assert!(!both);
            }
        }
    }

    #[test]
    fn pnorm_argmax_on_surface((d, theta) in (2usize..=5).prop_flat_map(|d| (Just(d), unit(d))), p in 2.0f64..12.0, r in 0.2f64..3.0) {
        let space = ActionSpace::pnorm_ball(d, p, r).unwrap();
        let x = space.linear_argmax(&theta).unwrap();
        prop_assert!((pnorm(&x, p) - r).abs() < 1e-9 * r);
        // Hoelder: the maximum equals r ||theta||_q with 1/p + 1/q = 1
        let q = p / (p - 1.0);
        prop_assert!((dot(&x, &theta) - r * pnorm(&theta, q)).abs() < 1e-9);
    }
}
