mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sirsvp_core::equilibria::{endemic_polynomial, eval_endemic_polynomial};
use sirsvp_core::integrator::Sample;
use sirsvp_core::lyapunov::{fraction_infection_rate, l_ee_gradient};
use sirsvp_core::*;

fn valid_raw() -> impl Strategy<Value = RawParams> {
    (
        0.5..2.0f64,
        0.1..10.0f64,
        0.1..2.0f64,
        0.1..3.0f64,
        0.01..0.99f64,
        0.1..2.0f64,
        0.05..0.9f64,
        0.01..1.0f64,
    )
        .prop_map(|(b, beta, nu, delta, p, alpha, mu_frac, k)| RawParams {
            b,
            beta,
            nu,
            delta,
            p,
            alpha,
            mu0: mu_frac * b,
            k,
        })
}

fn simplex() -> impl Strategy<Value = FractionState> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        FractionState { s: lo, i: hi - lo, r: 1.0 - hi }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn full_field_conserves_total(raw in valid_raw(), x in 0.0..10.0f64, y in 0.0..10.0f64, z in 0.0..10.0f64) {
        prop_assume!(x + y + z > 1e-3);
        let p = raw.validate().unwrap();
        let d = vf_full(&FullState::from_counts(x, y, z).unwrap(), &p).unwrap();
        let scale = d.iter().map(|v| v.abs()).fold(1.0, f64::max);
        prop_assert!((d[0] + d[1] + d[2] - d[3]).abs() < 1e-12 * scale);
    }

    #[test]
    fn fraction_field_sums_to_zero(raw in valid_raw(), s in simplex()) {
        let p = raw.validate().unwrap();
        let d = vf_fraction(&s, None, &p).unwrap();
        prop_assert!((d.s + d.i + d.r).abs() < 1e-12);
    }

    #[test]
    fn reduced_matches_fraction(raw in valid_raw(), s in simplex()) {
        let p = raw.validate().unwrap();
        let red = vf_reduced(&s.reduced(), &p).unwrap();
        let fr = vf_fraction(&s.reduced().to_fraction(), None, &p).unwrap();
        prop_assert!((red[0] - fr.i).abs() < 1e-12);
        prop_assert!((red[1] - fr.r).abs() < 1e-12);
    }

    #[test]
    fn quotient_rule_links_counts_and_fractions(raw in valid_raw(), x in 0.0..10.0f64, y in 0.0..10.0f64, z in 0.0..10.0f64) {
        prop_assume!(x + y + z > 0.1);
        let p = raw.validate().unwrap();
        let full = FullState::from_counts(x, y, z).unwrap();
        let [dx, dy, dz, dn] = vf_full(&full, &p).unwrap();
        let n = full.n;
        let q = |c: f64, dc: f64| (dc * n - c * dn) / (n * n);
        let fr = full.fractions().unwrap();
        let d = vf_fraction(&fr, Some(n), &p).unwrap();
        prop_assert!((q(x, dx) - d.s).abs() < 1e-10);
        prop_assert!((q(y, dy) - d.i).abs() < 1e-10);
        prop_assert!((q(z, dz) - d.r).abs() < 1e-10);
        prop_assert!((d.n.unwrap() - dn).abs() < 1e-10 * dn.abs().max(1.0));
    }

    #[test]
    fn infection_free_axis_is_invariant(raw in valid_raw(), r in 0.0..1.0f64) {
        let p = raw.validate().unwrap();
        let d = vf_fraction(&FractionState { s: 1.0 - r, i: 0.0, r }, None, &p).unwrap();
        prop_assert_eq!(d.i, 0.0);
    }

    #[test]
    fn susceptible_boundary_points_inward(raw in valid_raw(), i in 0.001..0.999f64) {
        let p = raw.validate().unwrap();
        let d = vf_fraction(&FractionState { s: 0.0, i, r: 1.0 - i }, None, &p).unwrap();
        prop_assert!(d.s > 0.0);
    }

    #[test]
    fn mortality_monotone_and_invertible(mu0 in 0.01..1.0f64, k in 0.001..2.0f64, n1 in 0.0..100.0f64, n2 in 0.0..100.0f64) {
        let m = MortalityFn::affine(mu0, k);
        if n2 > n1 {
            prop_assert!(m.eval(n2) > m.eval(n1));
        }
        if n1 > 0.0 {
            let back = m.inverse(m.eval(n1)).unwrap();
            prop_assert!((back - n1).abs() <= 1e-12 * n1.max(1.0) / k.min(1.0));
        }
    }

    #[test]
    fn no_equilibrium_below_threshold(raw in valid_raw(), s in simplex()) {
        let mut raw = raw;
        let gamma = (1.0 - raw.p) * raw.b + raw.nu + raw.delta;
        raw.beta = raw.beta.min(gamma);
        let p = raw.validate().unwrap();
        prop_assume!(s.s > 0.0 && s.i > 0.0);
        let expr = p.gamma() * (1.0 - p.r0()) * s.s + p.b() * (1.0 - s.s - p.p() * s.i) + (p.alpha() + p.beta() * s.s) * s.r;
        prop_assert!(expr > 0.0);
        prop_assert!(endemic_equilibrium(&p).is_none());
    }

    #[test]
    fn l_dfe_orbital_nonpositive_below_threshold(raw in valid_raw(), s in simplex()) {
        let mut raw = raw;
        let gamma = (1.0 - raw.p) * raw.b + raw.nu + raw.delta;
        raw.beta = raw.beta.min(gamma);
        let p = raw.validate().unwrap();
        let d = l_dfe_orbital(&s, &p);
        prop_assert!(d <= 0.0);
        prop_assert!((d - fraction_infection_rate(&s, &p)).abs() < 1e-12);
    }

    #[test]
    fn constant_population_residual_is_continuous(raw in valid_raw(), mu in 0.01..2.0f64, db in 0.0..1.0f64) {
        // Bracket a sign change in beta and check the residual changes sign exactly once across it.
        let p = raw.validate().unwrap();
        let at = |beta: f64| {
            let q = RawParams { beta, ..raw }.validate().unwrap();
            check_constant_population_condition(&q, mu)
        };
        let (a, b) = (raw.beta, raw.beta + db + 1e-3);
        let (fa, fb) = (at(a), at(b));
        let mid = at(0.5 * (a + b));
        // Affine in beta: the midpoint value is the average of the ends.
        prop_assert!((mid - 0.5 * (fa + fb)).abs() < 1e-9 * (fa.abs() + fb.abs()).max(1.0));
        prop_assert_eq!(check_constant_population_condition(&p, mu), fa);
    }
}

#[test]
fn endemic_root_brackets_and_uniqueness() {
    let mut rng = rng(11);
    for _ in 0..1000 {
        let p = endemic_params(&mut rng);
        let rho = p.rho();
        assert!(eval_endemic_polynomial(&p, 0.0) < 0.0);
        let at_rho = eval_endemic_polynomial(&p, rho);
        assert!((at_rho - p.beta() * p.nu() * rho).abs() < 1e-9 * at_rho);
        if rho > 1.0 {
            let p1 = p.delta() * (rho - 1.0) * (p.gamma() - p.delta()) + p.beta() * p.nu();
            assert!((eval_endemic_polynomial(&p, 1.0) - p1).abs() < 1e-9 * p1);
            assert!(p1 > 0.0);
        }
        // Downward parabola: at most one root below rho.
        let [a, b, c] = endemic_polynomial(&p);
        assert!(a < 0.0);
        let disc = b * b - 4.0 * a * c;
        let roots = [(-b + disc.sqrt()) / (2.0 * a), (-b - disc.sqrt()) / (2.0 * a)];
        assert_eq!(roots.iter().filter(|r| **r > 0.0 && **r < rho).count(), 1);
        let eq = endemic_equilibrium(&p).unwrap();
        assert!(eq.i < 1.0 && eq.s > 0.0);
    }
}

#[test]
fn equilibrium_is_a_fixed_point() {
    let mut rng = rng(12);
    for _ in 0..1000 {
        let p = endemic_params(&mut rng);
        let eq = endemic_equilibrium(&p).unwrap();
        let red = vf_reduced(&ReducedState { i: eq.i, r: eq.r }, &p).unwrap();
        assert!(red[0].abs() < 1e-10 && red[1].abs() < 1e-10, "{red:?}");
        let fr = vf_fraction(&FractionState { s: eq.s, i: eq.i, r: eq.r }, None, &p).unwrap();
        assert!(fr.s.abs() < 1e-10 && fr.i.abs() < 1e-10 && fr.r.abs() < 1e-10);
    }
}

#[test]
fn uncertified_condition_forms_agree() {
    let mut rng = rng(13);
    let mut checked = 0;
    while checked < 1000 {
        let p = endemic_params(&mut rng);
        let d = derived_quantities(&p);
        if d.rho >= 1.0 {
            continue;
        }
        let i_u = d.i_u.unwrap();
        let margin = p.beta() - d.gamma - d.rho * (p.beta() - p.delta());
        if margin.abs() < 1e-12 {
            continue;
        }
        let threshold = d.gamma + d.rho * (d.gamma - p.delta()) / (1.0 - d.rho);
        assert_eq!(i_u > d.rho, margin > 0.0);
        assert_eq!(margin > 0.0, p.beta() > threshold);
        let regime = classify_regime(&p).regime;
        assert_eq!(regime == Regime::EndemicUncertified, i_u > d.rho);
        assert!(0.0 < i_u && i_u < 1.0);
        checked += 1;
    }
}

#[test]
fn constant_population_root_in_beta() {
    // Solve the identity for beta by bisection and confirm the residual vanishes there.
    let base = RawParams::reference();
    let mu = 0.5;
    let residual = |beta: f64| {
        let p = RawParams { beta, ..base }.validate().unwrap();
        check_constant_population_condition(&p, mu)
    };
    assert!(residual(3.0) > 0.0);
    // Residual is affine in beta with slope (b-mu)(alpha+mu+nu) - delta(alpha+mu) = 0.9166 - 1.5 < 0.
    let beta_star = bisect(residual, 3.0, 20.0, 1e-14);
    assert!(residual(beta_star).abs() < 1e-12 * 10.0);
    assert!((beta_star - 0.5 / (1.5 - 0.5 * 11.0 / 6.0) - 3.0).abs() < 1e-9);
}

#[test]
fn l_ee_chain_rule_and_local_decrease() {
    let mut rng = rng(14);
    for _ in 0..20 {
        let p = endemic_params(&mut rng);
        let eq = endemic_equilibrium(&p).unwrap();
        for _ in 0..500 {
            let (_, i, r) = simplex_point(&mut rng);
            let s = ReducedState { i, r };
            let g = l_ee_gradient(&s, &eq, &p).unwrap();
            let f = vf_reduced(&s, &p).unwrap();
            let chain = g[0] * f[0] + g[1] * f[1];
            let closed = l_ee_orbital(&s, &eq, &p).unwrap();
            assert!((chain - closed).abs() < 1e-10, "{chain} vs {closed}");
            assert!(l_ee(&s, &eq, &p).unwrap() > 0.0);
        }
        // Near the equilibrium the derivative is strictly negative for every R0 > 1.
        let radius = 0.5 * (p.rho() - eq.i).min(eq.i);
        for k in 0..64 {
            let th = k as f64 * std::f64::consts::TAU / 64.0;
            for frac in [0.1, 0.5, 1.0] {
                let s = ReducedState { i: eq.i + frac * radius * th.cos(), r: eq.r + frac * radius * th.sin() };
                if s.r < 0.0 || s.i + s.r > 1.0 {
                    continue;
                }
                assert!(l_ee_orbital(&s, &eq, &p).unwrap() < 0.0);
            }
        }
    }
}

#[test]
fn l_ee_orbital_matches_trajectory_difference() {
    // Second-order one-sided difference of L along the flow through (0.5, 0.1).
    let p = reference();
    let eq = endemic_equilibrium(&p).unwrap();
    let h = 1e-4;
    let spec = IntegrationSpec::new(InitialState::Reduced(ReducedState { i: 0.5, r: 0.1 }), 2.0 * h)
        .with_tolerances(1e-12, 1e-14)
        .with_sampling(Sampling::Uniform(h));
    let traj = integrate(&spec, &p).unwrap();
    let l: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| l_ee(&ReducedState { i: s.state[0], r: s.state[1] }, &eq, &p).unwrap())
        .collect();
    assert_eq!(l.len(), 3);
    let fd = (-3.0 * l[0] + 4.0 * l[1] - l[2]) / (2.0 * h);
    assert!((fd - (-0.03282409199059691)).abs() < 1e-6, "fd={fd}");
}

#[test]
fn convergence_time_decreases_with_looser_eps() {
    let p = reference();
    let eq = endemic_equilibrium(&p).unwrap();
    let spec = IntegrationSpec::new(InitialState::Reduced(ReducedState { i: 0.3, r: 0.3 }), 200.0);
    let traj = integrate(&spec, &p).unwrap();
    let target = [eq.i, eq.r];
    let times: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&e| detect_convergence(&traj, &target, e).unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]), "{times:?}");
    assert!(times[0] < times[4]);
}

#[test]
fn integrator_tolerance_proportionality() {
    use sirsvp_core::dopri::{solve, StepControl};
    let err_at = |rtol: f64| {
        let c = StepControl { rtol, atol: rtol * 1e-3, ..Default::default() };
        let (_, ys, _) = solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 1.0, c).unwrap();
        (ys.last().unwrap()[0] - (-1f64).exp()).abs()
    };
    let e1 = err_at(1e-6);
    let e2 = err_at(1e-6 / 32.0);
    assert!(e1 < 10.0 * 1e-6);
    let ratio = e1 / e2;
    assert!(ratio > 8.0 && ratio < 128.0, "ratio {ratio}");
}

#[test]
fn integrator_fifth_order_with_fixed_steps() {
    use sirsvp_core::dopri::{solve, StepControl};
    let err_at = |h: f64| {
        let c = StepControl { rtol: 1e-3, atol: 1e-6, h_max: Some(h), ..Default::default() };
        let (_, ys, _) = solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 4.0, c).unwrap();
        (ys.last().unwrap()[0] - (-4f64).exp()).abs()
    };
    let ratio = err_at(0.2) / err_at(0.1);
    // 2^5 = 32
    assert!(ratio > 24.0 && ratio < 40.0, "ratio {ratio}");
}

#[test]
fn fraction_runs_stay_on_simplex() {
    let mut rng = rng(15);
    for _ in 0..20 {
        let r0 = rng.gen_range(0.3..5.0);
        let p = params_with_r0(&mut rng, r0);
        let (s, i, r) = simplex_point(&mut rng);
        let spec = IntegrationSpec::new(
            InitialState::FractionWithN { state: FractionState { s, i, r }, n: rng.gen_range(0.1..10.0) },
            100.0,
        );
        let traj = integrate(&spec, &p).unwrap();
        for Sample { state, .. } in &traj.samples {
            assert!((state[0] + state[1] + state[2] - 1.0).abs() < 1e-7);
            assert!(state.iter().all(|v| *v > -1e-9));
        }
    }
}

#[test]
fn l_ee_nonincreasing_along_certified_trajectory() {
    let p = boundary_set();
    let eq = endemic_equilibrium(&p).unwrap();
    let spec = IntegrationSpec::new(InitialState::Reduced(ReducedState { i: 0.45, r: 0.02 }), 100.0);
    let traj = integrate(&spec, &p).unwrap();
    let l: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| l_ee(&ReducedState { i: s.state[0], r: s.state[1] }, &eq, &p).unwrap())
        .collect();
    assert!(l.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn fate_flips_where_mu0_crosses_threshold() {
    let spec = SweepSpec::new(RawParams::reference(), SweepParam::Mu0, 0.1, 0.9, 81);
    let res = run_sweep(&spec).unwrap();
    let i_e = endemic_equilibrium(&reference()).unwrap().i;
    let threshold = 1.0 - i_e;
    for row in &res.rows {
        assert_eq!(row.i_e, Some(i_e), "I_e does not depend on mortality");
        let expected = if row.value >= threshold { Fate::Extinction } else { Fate::Regulation };
        assert_eq!(row.fate, Some(expected), "mu0 = {}", row.value);
    }
}

#[test]
fn sweep_is_deterministic() {
    let mut spec = SweepSpec::new(RawParams::reference(), SweepParam::Beta, 1.0, 4.0, 31);
    spec.tasks.probe = true;
    let a = run_sweep(&spec).unwrap();
    let b = run_sweep(&spec).unwrap();
    assert_eq!(a, b);
    let values: Vec<f64> = a.rows.iter().map(|r| r.value).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn sweep_probe_agrees_in_certified_regimes() {
    let base = RawParams { b: 1.0, p: 0.5, nu: 0.5, delta: 4.0, beta: 6.0, alpha: 1.0, mu0: 0.2, k: 0.1 };
    let mut spec = SweepSpec::new(base, SweepParam::Beta, 5.5, 12.0, 14);
    spec.tasks.probe = true;
    let res = run_sweep(&spec).unwrap();
    for row in &res.rows {
        if row.regime == Some(Regime::EndemicCertifiedGas) {
            assert!(row.probe.unwrap().converged_at.is_some(), "beta = {}", row.value);
        }
    }
}
