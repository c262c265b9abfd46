use burgerlab_core::*;

fn tracking_case(variant: ControllerVariant) -> Scenario {
    let mut s = Scenario::zero();
    s.name = format!("tracking-{variant}");
    s.variant = variant;
    s.a = parse("20").unwrap();
    s.r = parse("2 + 4*cos(pi*t) - 3*sin(pi*t)").unwrap();
    s.ud = parse("3 + 5*cos(pi*x)*sin(pi*t) - 2*sin(pi*x)*cos(pi*t)").unwrap();
    s.n = 101;
    s.dt = 2e-3;
    s.t_end = 2.0;
    s.sample_stride = 50;
    s
}

fn heat_case(n: usize, dt: f64) -> Scenario {
    let mut s = Scenario::zero();
    s.name = "heat".into();
    s.variant = ControllerVariant::Theorem2;
    s.mode = ScenarioMode::Heat;
    s.k = 0.0;
    s.u0 = parse("cos(pi*x)").unwrap();
    s.exact_uhat = Some(parse("exp(-5*pi^2*t)*cos(pi*x)").unwrap());
    s.n = n;
    s.dt = dt;
    s.t_end = 0.1;
    s
}

#[test]
fn tracking_case_passes_all_checks() {
    for v in [ControllerVariant::Theorem1, ControllerVariant::Theorem2] {
        let rec = run_closed_loop(&tracking_case(v)).unwrap();
        let report = check_invariants(&rec, &Tolerances::default());
        assert!(report.all_passed(), "{v}:\n{report}");
        let last = rec.samples.last().unwrap();
        assert!(last.e.abs() < 0.02, "{v}: e(T) = {}", last.e);
    }
}

#[test]
fn theorem1_energy_within_envelope() {
    let rec = run_closed_loop(&tracking_case(ControllerVariant::Theorem1)).unwrap();
    for s in &rec.samples {
        let env = rec.norm0 * (-0.5 * 5.0 * s.t).exp() * 1.05;
        assert!(s.norm_uhat <= env, "t = {}: {} > {}", s.t, s.norm_uhat, env);
    }
    assert!(rec.fitted_rate().unwrap() >= 5.0);
}

#[test]
fn mean_identity_converges_at_second_order() {
    let mut s = tracking_case(ControllerVariant::Theorem1);
    s.t_end = 1.0;
    let rep = convergence_study(&s, &[26, 51, 101], DtRule::Linear(0.2)).unwrap();
    for p in rep.mean_u_orders() {
        assert!(p > 1.7, "{rep}");
    }
}

#[test]
fn coarse_step_misses_mean_tolerance() {
    let mut s = tracking_case(ControllerVariant::Theorem2);
    s.n = 11;
    s.dt = 0.05;
    s.t_end = 1.0;
    s.sample_stride = 1;
    let rec = run_closed_loop(&s).unwrap();
    let report = check_invariants(&rec, &Tolerances::default());
    assert!(!report.get("mean_u").unwrap().passed, "{report}");
}

#[test]
fn heat_case_matches_exact_decay() {
    let rec = run_closed_loop(&heat_case(101, 1e-3)).unwrap();
    let report = check_invariants(&rec, &Tolerances::default());
    assert!(report.all_passed(), "{report}");
    let rep = convergence_study(&heat_case(26, 1e-4), &[26, 51, 101], DtRule::Fixed).unwrap();
    for p in rep.exact_orders().unwrap() {
        assert!(p > 1.8, "{rep}");
    }
}

#[test]
fn free_running_plant_drifts_from_composition() {
    let mut s = tracking_case(ControllerVariant::Theorem1);
    s.t_end = 1.0;
    s.plant_coupling = PlantCoupling::FreeRunning;
    let free = run_closed_loop(&s).unwrap();
    s.plant_coupling = PlantCoupling::Anchored;
    let anchored = run_closed_loop(&s).unwrap();
    let drift = |r: &RunRecord, t: f64| {
        r.samples
            .iter()
            .find(|x| (x.t - t).abs() < 1e-9)
            .unwrap()
            .superposition_residual
    };
    assert!(drift(&free, 1.0) > 100.0 * drift(&free, 0.2).max(1e-15));
    assert!(anchored.monitors.superposition.value < 1e-12);
}

#[test]
fn gain_thresholds_are_strict() {
    let mut s = Scenario::zero();
    s.k = 1.0 / 6.0;
    assert!(run_closed_loop(&s).is_err());
    s.k = 1.0 / 6.0 + 1e-9;
    assert!(run_closed_loop(&s).unwrap().status.is_completed());
    s.variant = ControllerVariant::Theorem2;
    s.k = 0.0;
    assert!(run_closed_loop(&s).is_err());
}
