use banditlab::actionspace::ActionSpace;
use banditlab::bandit::{run_trials, trial_rng, BanditInstance, DesignState, EpisodeSpec};
use banditlab::clustering::{recovery_rate, MultiAgentConfig};
use banditlab::linalg::{basis, SymMatrix};
use banditlab::policies::{lints_select, GreedyOracle, PolicyConfig};
use banditlab::spectral::{default_eps, eps_fraction, mc_expected_design};

fn sphere(d: usize) -> ActionSpace {
    ActionSpace::unit_sphere(d).unwrap()
}

fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.sub(b).unwrap().as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn uniform_design_is_isotropic() {
    // E[x x^T] = I / d for x uniform on the sphere.
    let (d, n) = (3, 2000);
    let inst = BanditInstance::new(basis(d, 0), 1.0, sphere(d)).unwrap();
    let g = mc_expected_design(&PolicyConfig::uniform(), &inst, &EpisodeSpec::new(n, 1.0), 40, 1).unwrap();
    let want = SymMatrix::scaled_identity(d, n as f64 / d as f64);
    assert!(max_abs_diff(&g, &want) < 0.03 * n as f64 / d as f64);
}

#[test]
fn uniform_lambda_min_grows_linearly() {
    let (d, n) = (3, 20_000);
    let inst = BanditInstance::new(basis(d, 0), 1.0, sphere(d)).unwrap();
    let t = run_trials(&PolicyConfig::uniform(), &inst, &EpisodeSpec::new(n, 1.0), 1, 9).unwrap();
    let lm = t[0].final_state.lambda_min().unwrap();
    let want = n as f64 / d as f64;
    assert!((lm - want).abs() < 0.05 * want, "lambda_min {lm} vs {want}");
}

#[test]
fn greedy_design_is_rank_one() {
    let (d, n) = (3, 500);
    let theta = basis(d, 0);
    let inst = BanditInstance::new(theta.clone(), 1.0, sphere(d)).unwrap();
    let g = mc_expected_design(&GreedyOracle { theta }, &inst, &EpisodeSpec::new(n, 1.0), 3, 0).unwrap();
    let mut want = SymMatrix::zeros(d);
    want.set(0, 0, n as f64);
    assert_eq!(max_abs_diff(&g, &want), 0.0);
}

#[test]
fn eps_fraction_greedy_and_uniform() {
    let d = 3;
    let theta = basis(d, 2);
    let space = sphere(d);
    let inst = BanditInstance::new(theta.clone(), 1.0, space.clone()).unwrap();
    let greedy = run_trials(
        &GreedyOracle { theta: theta.clone() },
        &inst,
        &EpisodeSpec::new(100, 1.0),
        1,
        0,
    )
    .unwrap();
    assert_eq!(eps_fraction(&greedy[0], &theta, 0.0, &space).unwrap(), (100, 1.0));

    // On the 2-sphere the cap {<x, v> >= 1 - eps} has area fraction eps / 2.
    let n = 40_000;
    let uni = run_trials(&PolicyConfig::uniform(), &inst, &EpisodeSpec::new(n, 1.0), 1, 4).unwrap();
    let (_, z) = eps_fraction(&uni[0], &theta, 0.2, &space).unwrap();
    assert!((z - 0.1).abs() < 0.01, "cap fraction {z}");
}

#[test]
fn oful_concentrates_near_optimum() {
    let (d, n) = (3, 4096);
    let theta = basis(d, 0);
    let space = sphere(d);
    let inst = BanditInstance::new(theta.clone(), 1.0, space.clone()).unwrap();
    let t = run_trials(
        &PolicyConfig::oful(0.05, 1.0).unwrap(),
        &inst,
        &EpisodeSpec::new(n, 1.0),
        2,
        0,
    )
    .unwrap();
    for tr in &t {
        let (_, z) = eps_fraction(tr, &theta, default_eps(n, 0.1), &space).unwrap();
        assert!(z > 0.5, "z = {z}");
    }
}

#[test]
fn lints_sample_covariance_follows_gram() {
    // One observation of sqrt(3) e1 with zero reward: gram = diag(4, 1),
    // theta_hat = 0, so the sample is N(0, diag(1/4, 1)) and the chosen
    // action satisfies |x1| > |x2| with probability (2 / pi) atan(1 / 2).
    let space = sphere(2);
    let mut state = DesignState::new(2, 1.0).unwrap();
    state.update(&[3f64.sqrt(), 0.0], 0.0).unwrap();
    let cfg = PolicyConfig::lints(0.05, 1.0).unwrap().with_ts_scale(1.0).unwrap();
    let mut rng = trial_rng(2, 0);
    let m = 40_000;
    let hits = (0..m)
        .filter(|_| {
            let x = lints_select(&state, &space, &cfg, &mut rng).unwrap();
            x[0].abs() > x[1].abs()
        })
        .count();
    let p = hits as f64 / m as f64;
    let want = 2.0 / std::f64::consts::PI * 0.5f64.atan();
    assert!((p - want).abs() < 0.01, "{p} vs {want}");
}

#[test]
fn policies_stay_on_the_space() {
    let d = 3;
    let mut shape = SymMatrix::from_diag(&[1.0, 2.0, 4.0]);
    shape.set(0, 1, 0.3);
    let spaces = vec![
        sphere(d),
        ActionSpace::ellipsoid(shape.clone(), 1.5, vec![0.0; d]).unwrap(),
        ActionSpace::ellipsoid(shape, 1.0, vec![0.2, -0.1, 0.3]).unwrap(),
        ActionSpace::pnorm_ball(d, 4.0, 1.0).unwrap(),
        ActionSpace::finite_set(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.5, 0.5, 0.5]]).unwrap(),
    ];
    let policies = [
        PolicyConfig::oful(0.05, 1.0).unwrap(),
        PolicyConfig::lints(0.05, 1.0).unwrap(),
        PolicyConfig::uniform(),
    ];
    for space in &spaces {
        let inst = BanditInstance::new(vec![0.6, -0.3, 0.5], 0.5, space.clone()).unwrap();
        for p in &policies {
            let t = run_trials(p, &inst, &EpisodeSpec::new(150, 1.0), 1, 3).unwrap();
            for a in &t[0].actions {
                assert!(space.residual(a) < 1e-8, "{} {:?}", space.kind_name(), p.kind);
            }
            assert!(t[0].instantaneous_regrets.iter().all(|r| *r >= -1e-9));
        }
    }
}

#[test]
fn recovery_improves_with_horizon() {
    let space = sphere(2);
    let params = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
    let mut last = 0.0;
    for n in [16, 256, 4096] {
        let mut cfg = MultiAgentConfig::round_robin(params.clone(), 4, n);
        cfg.eta = Some(1.0);
        let r = recovery_rate(&cfg, &space, 1.0, 0, 20).unwrap();
        assert!(r >= last, "rate {r} at n = {n} after {last}");
        last = r;
    }
    assert!(last >= 0.95);
}
