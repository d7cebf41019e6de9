use manifold_prox::diagnostics::probe_max_strong_convexity;
use manifold_prox::manifold::{distance, random_point};
use manifold_prox::problems::{example_one, example_two, example_two_level_reference, example_two_minimizer};
use manifold_prox::prox::{estimate_lipschitz, prox_step, run, validate_lambda};
use manifold_prox::{
    Error, FnComponent, InnerConfig, InnerMethod, LambdaRule, LevelSetSpec, ManifoldKind, ManifoldPoint, MaxObjective,
    ProxConfig, ProxRun, Region, RunOutcome, Verdict,
};
use proptest::prelude::*;

fn positive(x: f64) -> ManifoldPoint {
    ManifoldPoint::positive(x).unwrap()
}

fn lipschitz_around(obj: &MaxObjective, start: &ManifoldPoint, reference: &ManifoldPoint) -> Vec<f64> {
    estimate_lipschitz(obj, &Region::around(start, reference).unwrap(), 200, 11).unwrap()
}

/// Checks the per-iteration invariants every run must satisfy.
fn check_run(obj: &MaxObjective, start: &ManifoldPoint, out: &RunOutcome, cfg: &ProxConfig, fq: Option<f64>) {
    let tol_kkt = cfg.inner.tol_kkt;
    let mut prev = start.clone();
    let mut prev_f = out.start_value;
    for rec in &out.records {
        let d = distance(&rec.point, &prev).unwrap();
        assert!((d - rec.step_dist).abs() <= 1e-15 * (1.0 + d));
        assert!(rec.f_value + 0.5 * rec.lambda * d * d <= prev_f + tol_kkt * d + 1e-12, "descent fails at k={}", rec.k);
        assert!(rec.f_value <= prev_f + 1e-12, "f increases at k={}", rec.k);
        assert!(rec.kkt_residual <= tol_kkt, "kkt {} at k={}", rec.kkt_residual, rec.k);
        if let Some(fq) = fq {
            assert!(rec.f_value <= fq + 1e-12);
        }
        if rec.step_dist <= 1e-12 {
            assert!(rec.stationarity <= cfg.tol_stat + rec.lambda * 1e-12);
        }
        assert_eq!(rec.f_value, obj.eval(&rec.point).unwrap());
        prev = rec.point.clone();
        prev_f = rec.f_value;
    }
    let last = out.records.last().unwrap();
    assert_eq!(&out.final_point, &last.point);
    if out.certificate.verdict == Verdict::ConvergedStationary {
        assert!(last.step_dist <= cfg.tol_step && last.stationarity <= cfg.tol_stat);
    }
    let w = &out.certificate.weights;
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && w.iter().all(|&x| x >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn example_one_runs_keep_their_invariants(x0 in 5.0f64 / 16.0..3.0) {
        let f = example_one();
        let q = positive(5.0 / 16.0);
        let fq = f.eval(&q).unwrap();
        let start = positive(x0);
        prop_assume!(f.eval(&start).unwrap() <= fq);
        let cfg = ProxConfig::default();
        let l = lipschitz_around(&f, &start, &positive(1.0));
        let level = LevelSetSpec { reference_point: Some(q), threshold: None };
        let out = run(&f, start.clone(), &cfg, &l, &level).unwrap();
        check_run(&f, &start, &out, &cfg, Some(fq));
        prop_assert_eq!(out.certificate.verdict, Verdict::ConvergedStationary);
        prop_assert!((out.final_point.scalar() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn example_two_runs_keep_their_invariants(seed in 0u64..1000, n in 2usize..4) {
        let f = example_two(n).unwrap();
        let q = example_two_level_reference(n).unwrap();
        let fq = f.eval(&q).unwrap();
        let id = example_two_minimizer(n).unwrap();
        let start = random_point(ManifoldKind::Spd(n), 0.6, seed).unwrap();
        prop_assume!(f.eval(&start).unwrap() <= fq);
        let cfg = ProxConfig { max_outer: 1000, ..ProxConfig::default() };
        let l = lipschitz_around(&f, &start, &id);
        let level = LevelSetSpec { reference_point: Some(q), threshold: None };
        let out = run(&f, start.clone(), &cfg, &l, &level).unwrap();
        check_run(&f, &start, &out, &cfg, Some(fq));
        prop_assert!(distance(&out.final_point, &id).unwrap() <= 1e-4);
    }

    #[test]
    fn subproblem_is_strongly_convex_on_the_run_region(x0 in 0.35f64..3.0, seed: u64) {
        let f = example_one();
        let start = positive(x0);
        let region = Region::around(&start, &positive(1.0)).unwrap();
        let l = estimate_lipschitz(&f, &region, 400, 5).unwrap();
        let lambda = 1.1 * l.iter().cloned().fold(0.0, f64::max);
        let r = probe_max_strong_convexity(&f, &start, lambda, &l, &region, 200, seed).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn prox_step_never_increases_the_subproblem_value(x0 in 0.1f64..5.0, lambda in 0.5f64..50.0) {
        let f = example_one();
        let anchor = positive(x0);
        let step = prox_step(&f, &anchor, lambda, &[0.0, 0.4], &InnerConfig::default()).unwrap();
        let psi_anchor = f.eval(&anchor).unwrap();
        prop_assert!(step.psi <= psi_anchor + 1e-14);
        prop_assert!(step.kkt_residual <= 1e-8);
        prop_assert!(!step.stalled);
    }
}

#[test]
fn validate_lambda_examples() {
    assert_eq!(
        validate_lambda(&[1.0, 2.0], &LambdaRule::Fixed(2.0), 3.0),
        Err(Error::LambdaTooSmall { lambda: 2.0, max_lipschitz: 2.0 })
    );
    assert!(validate_lambda(&[1.0, 2.0], &LambdaRule::Fixed(2.5), 3.0).is_ok());
    assert_eq!(
        validate_lambda(&[1.0, 2.0], &LambdaRule::Fixed(4.0), 3.0),
        Err(Error::LambdaTooLarge { lambda: 4.0, lambda_bar: 3.0 })
    );
    assert!(validate_lambda(&[1.0], &LambdaRule::Sequence(vec![2.0, 1.5, 1.0]), 3.0).is_err());
}

#[test]
fn example_one_from_one_half() {
    let f = example_one();
    let start = positive(0.5);
    let l = lipschitz_around(&f, &start, &positive(1.0));
    let cfg = ProxConfig::default();
    let out = run(&f, start.clone(), &cfg, &l, &LevelSetSpec::default()).unwrap();
    check_run(&f, &start, &out, &cfg, None);
    assert!((out.final_point.scalar() - 1.0).abs() <= 1e-6);
    assert_eq!(out.certificate.verdict, Verdict::ConvergedStationary);
}

#[test]
fn start_at_minimizer_stops_immediately() {
    let f = example_two(3).unwrap();
    let id = example_two_minimizer(3).unwrap();
    let out = run(&f, id.clone(), &ProxConfig::default(), &[1.0, 1.0, 1.0], &LevelSetSpec::default()).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].step_dist, 0.0);
    assert_eq!(out.certificate.verdict, Verdict::ConvergedStationary);
    assert_eq!(out.final_point, id);
}

#[test]
fn iteration_cap_gives_max_iterations() {
    let f = example_one();
    let cfg = ProxConfig { lambda_rule: LambdaRule::Fixed(50.0), max_outer: 1, ..ProxConfig::default() };
    let out = run(&f, positive(2.5), &cfg, &[0.0, 0.4], &LevelSetSpec::default()).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.certificate.verdict, Verdict::MaxIterations);
}

#[test]
fn lambda_below_lipschitz_is_rejected() {
    let f = example_one();
    let cfg = ProxConfig { lambda_rule: LambdaRule::Fixed(0.1), ..ProxConfig::default() };
    let err = run(&f, positive(0.5), &cfg, &[0.0, 0.3], &LevelSetSpec::default()).unwrap_err();
    assert!(matches!(err, Error::LambdaTooSmall { .. }));
}

#[test]
fn start_outside_level_set_is_rejected() {
    let f = example_one();
    let level = LevelSetSpec { reference_point: Some(positive(5.0 / 16.0)), threshold: None };
    let err = run(&f, positive(0.1), &ProxConfig::default(), &[0.0, 0.4], &level).unwrap_err();
    assert!(matches!(err, Error::StartOutsideLevelSet { .. }));
}

#[test]
fn level_entry_is_reported() {
    let f = example_one();
    let c = f.eval(&positive(0.75)).unwrap();
    let level = LevelSetSpec { reference_point: Some(positive(5.0 / 16.0)), threshold: Some(c) };
    let cfg = ProxConfig { lambda_rule: LambdaRule::Fixed(20.0), ..ProxConfig::default() };
    let out = run(&f, positive(0.4), &cfg, &[0.0, 0.4], &level).unwrap();
    let k = out.level_entry.expect("enters L_f(c)");
    assert!(k >= 1);
    assert!(out.records[k - 1].f_value <= c);
    assert!(out.records[..k - 1].iter().all(|r| r.f_value > c));
}

#[test]
fn lambda_sequence_is_followed() {
    let f = example_one();
    let cfg = ProxConfig { lambda_rule: LambdaRule::Sequence(vec![40.0, 20.0, 10.0]), ..ProxConfig::default() };
    let out = run(&f, positive(2.5), &cfg, &[0.0, 0.4], &LevelSetSpec::default()).unwrap();
    let lambdas: Vec<f64> = out.records.iter().map(|r| r.lambda).collect();
    assert_eq!(&lambdas[..3.min(lambdas.len())], &[40.0, 20.0, 10.0][..3.min(lambdas.len())]);
    assert!(lambdas.iter().skip(2).all(|&l| l == 10.0));
}

#[test]
fn stepping_matches_run() {
    let f = example_one();
    let cfg = ProxConfig { lambda_rule: LambdaRule::Fixed(5.0), ..ProxConfig::default() };
    let l = [0.0, 0.4];
    let mut r = ProxRun::new(&f, positive(2.5), cfg.clone(), &l, LevelSetSpec::default()).unwrap();
    let mut points = Vec::new();
    while let Some(rec) = r.step().unwrap() {
        points.push(rec.point.clone());
    }
    assert!(r.is_finished());
    let out = run(&f, positive(2.5), &cfg, &l, &LevelSetSpec::default()).unwrap();
    let expected: Vec<_> = out.records.iter().map(|r| r.point.clone()).collect();
    assert_eq!(points, expected);
}

#[test]
fn subgradient_inner_method_matches_grid_oracle() {
    // argmin over [0.1, 3] of max{ln x, -ln x + e^-2x - e^-2} + 4 ln^2(x / 0.5)
    let psi = |x: f64| {
        let f1 = x.ln();
        let f2 = -x.ln() + (-2.0 * x).exp() - (-2.0f64).exp();
        f1.max(f2) + 4.0 * (x / 0.5).ln().powi(2)
    };
    let (mut best_x, mut best) = (0.1, f64::INFINITY);
    for i in 0..=2_900_000u32 {
        let x = 0.1 + f64::from(i) * 1e-6;
        let v = psi(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let f = example_one();
    let cfg = InnerConfig { method: InnerMethod::Subgradient, max_inner: 200_000, tol_kkt: 1e-8 };
    let step = prox_step(&f, &positive(0.5), 8.0, &[0.0, 0.4], &cfg).unwrap();
    assert!((step.point.scalar() - best_x).abs() <= 1e-5, "{} vs {}", step.point.scalar(), best_x);
}

#[test]
fn smaller_active_tolerance_sharpens_the_example_two_limit() {
    let f = example_two(2).unwrap().with_eps_active(1e-14).unwrap();
    let id = example_two_minimizer(2).unwrap();
    let start = random_point(ManifoldKind::Spd(2), 0.3, 5).unwrap();
    let l = lipschitz_around(&f, &start, &id);
    let out = run(&f, start, &ProxConfig::default(), &l, &LevelSetSpec::default()).unwrap();
    assert_eq!(out.certificate.verdict, Verdict::ConvergedStationary);
    assert!(distance(&out.final_point, &id).unwrap() <= 1e-6);
}

#[test]
fn euclidean_abs_value_converges_to_zero() {
    let f = MaxObjective::new(
        ManifoldKind::Euclidean(1),
        vec![
            Box::new(FnComponent::new(|p: &ManifoldPoint| p.coords()[0], |_: &ManifoldPoint| vec![1.0])),
            Box::new(FnComponent::new(|p: &ManifoldPoint| -p.coords()[0], |_: &ManifoldPoint| vec![-1.0])),
        ],
    )
    .unwrap();
    let cfg = ProxConfig { lambda_rule: LambdaRule::Fixed(1.0), ..ProxConfig::default() };
    let out =
        run(&f, ManifoldPoint::euclidean(vec![3.5]).unwrap(), &cfg, &[0.0, 0.0], &LevelSetSpec::default()).unwrap();
    // Soft thresholding by 1 per step: 2.5, 1.5, 0.5, 0, 0.
    let xs: Vec<f64> = out.records.iter().map(|r| r.point.coords()[0]).collect();
    assert_eq!(xs, vec![2.5, 1.5, 0.5, 0.0, 0.0]);
}
