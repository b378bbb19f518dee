use resample::error::{Error, Infeasibility};
use resample::matfun::{care, expm, mat, spectral_abscissa, spectral_radius, Mat};
use resample::pendulum;
use resample::perf::{
    gamma1, gamma_h_curve, h2_gains, h2_gamma0, h2_sd_controller, h2_sd_performance, h2_sd_performance_with,
    hinf_design, hinf_gamma_opt, loopshape_design, pattern_gamma_sq, q_stat_norm_check, uniform_optimality_scan,
    StandardPlant,
};
use resample::random::{random_standard_plant, Rng};
use resample::redesign::central_controller;
use resample::perf::observer_generator;
use resample::sim::SamplingSpec;

fn scalar_plant() -> StandardPlant {
    StandardPlant::new(
        mat(&[&[0.0]]),
        mat(&[&[1.0, 0.0]]),
        mat(&[&[1.0]]),
        mat(&[&[1.0], &[0.0]]),
        mat(&[&[1.0]]),
        mat(&[&[0.0], &[1.0]]),
        mat(&[&[0.0, 1.0]]),
    )
    .unwrap()
}

fn dual(p: &StandardPlant) -> StandardPlant {
    StandardPlant::new(
        p.a.transpose(),
        p.cz.transpose(),
        p.cy.transpose(),
        p.bw.transpose(),
        p.bu.transpose(),
        p.dyw.transpose(),
        p.dzu.transpose(),
    )
    .unwrap()
}

#[test]
fn scalar_h2_gains() {
    let (f, l) = h2_gains(&scalar_plant()).unwrap();
    assert!((f[(0, 0)] + 1.0).abs() < 1e-12);
    assert!((l[(0, 0)] + 1.0).abs() < 1e-12);
}

#[test]
fn filter_gain_is_dual_state_feedback() {
    let mut rng = Rng::seed(12);
    for _ in 0..5 {
        let p = random_standard_plant(&mut rng, 3, 1, 1);
        let (f, l) = h2_gains(&p).unwrap();
        let (fd, ld) = h2_gains(&dual(&p)).unwrap();
        assert!((&fd - l.transpose()).norm() < 1e-9 * (1.0 + l.norm()));
        assert!((&ld - f.transpose()).norm() < 1e-9 * (1.0 + f.norm()));
    }
}

#[test]
fn random_gains_have_small_residuals_and_stable_loops() {
    let mut rng = Rng::seed(13);
    for _ in 0..10 {
        let p = random_standard_plant(&mut rng, 3, 1, 1);
        let (f, l) = h2_gains(&p).unwrap();
        let x = care(&p.a, &(&p.bu * p.bu.transpose()), &(p.cz.transpose() * &p.cz)).unwrap();
        let y = care(&p.a.transpose(), &(p.cy.transpose() * &p.cy), &(&p.bw * p.bw.transpose())).unwrap();
        assert!(x.residual_norm <= 1e-9 * (1.0 + x.x.norm()));
        assert!(y.residual_norm <= 1e-9 * (1.0 + y.x.norm()));
        assert!(spectral_abscissa(&(&p.a + &p.bu * &f)) < 0.0);
        assert!(spectral_abscissa(&(&p.a + &l * &p.cy)) < 0.0);
    }
}

#[test]
fn zero_gain_gives_analog_performance() {
    let mut rng = Rng::seed(14);
    let a = rng.matrix(3, 3);
    let l = rng.matrix(3, 1);
    let g = pattern_gamma_sq(&Mat::zeros(1, 3), &l, &a, 1.7, &[0.2, 0.5]).unwrap();
    assert!((g - 1.7f64.powi(2)).abs() < 1e-14);
}

#[test]
fn scalar_integrator_gamma1() {
    let one = mat(&[&[1.0]]);
    for h in [0.1, 0.5, 2.0] {
        let rep = h2_sd_performance_with(&one, &one, &mat(&[&[0.0]]), 0.8, &SamplingSpec::Uniform { h }).unwrap();
        let expected = (0.64 + h / 2.0).sqrt();
        assert!((rep.gamma_pattern - expected).abs() < 1e-12, "h = {h}: {} vs {expected}", rep.gamma_pattern);
    }
}

/// ∫₀ʰ∫₀^{h−τ} ‖F e^{At} L‖² dt dτ by nested composite Simpson rules.
fn simpson_gamma1(f: &Mat, l: &Mat, a: &Mat, h: f64, n: usize) -> f64 {
    let g = |t: f64| (f * expm(a, t).unwrap() * l).norm_squared();
    let simpson = |len: f64, fun: &dyn Fn(f64) -> f64| {
        if len <= 0.0 {
            return 0.0;
        }
        let step = len / n as f64;
        let mut acc = fun(0.0) + fun(len);
        for k in 1..n {
            acc += fun(k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * step / 3.0
    };
    simpson(h, &|tau| simpson(h - tau, &g))
}

#[test]
fn gamma1_matches_quadrature() {
    let mut rng = Rng::seed(15);
    for _ in 0..3 {
        let (f, l, a) = (rng.matrix(1, 3), rng.matrix(3, 1), rng.matrix(3, 3));
        let exact = gamma1(&f, &l, &a, 0.3).unwrap();
        let quad = simpson_gamma1(&f, &l, &a, 0.3, 60);
        assert!((exact - quad).abs() <= 1e-7 * quad.max(1e-12), "{exact} vs {quad}");
    }
}

#[test]
fn gamma1_is_monotone_in_h() {
    let mut rng = Rng::seed(16);
    let (f, l, a) = (rng.matrix(2, 3), rng.matrix(3, 2), rng.matrix(3, 3));
    let vals: Vec<f64> = (0..20).map(|k| gamma1(&f, &l, &a, 0.05 * k as f64).unwrap()).collect();
    assert_eq!(vals[0], 0.0);
    assert!(vals.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn aperiodic_pattern_is_rejected() {
    let p = scalar_plant();
    let spec = SamplingSpec::Random { h_min: 0.1, h_max: 0.2, seed: 1 };
    assert!(matches!(h2_sd_performance(&p, &spec), Err(Error::Pattern(_))));
}

#[test]
fn controller_is_observer_central_controller() {
    let mut rng = Rng::seed(17);
    let p = random_standard_plant(&mut rng, 3, 1, 1);
    let (ctrl, rep) = h2_sd_controller(&p, &SamplingSpec::Uniform { h: 0.4 }).unwrap();
    let reference = central_controller(&observer_generator(&p, &rep.f, &rep.l).unwrap());
    assert_eq!(ctrl, reference);
    assert!(ctrl.jump_m.iter().zip(Mat::identity(3, 3).iter()).all(|(a, b)| a == b));
    assert!(rep.gamma_pattern >= rep.gamma0);
    assert!((rep.gamma0 - h2_gamma0(&p, &rep.f, &rep.l).unwrap()).abs() < 1e-14);
}

#[test]
fn uniform_sampling_minimizes_two_periodic_patterns() {
    let p = pendulum::h2_plant();
    let (f, l) = h2_gains(&p).unwrap();
    let deltas: Vec<f64> = (-5..=5).map(|k| 0.05 * k as f64).collect();
    let scan = uniform_optimality_scan(&f, &l, &p.a, 0.0, 0.3, 2, &deltas).unwrap();
    assert_eq!(scan.argmin, 0.0);
    for (d, s) in &scan.derivatives {
        if *d != 0.0 {
            assert_eq!(s.signum(), d.signum(), "slope {s} at {d}");
        }
    }
    assert!(uniform_optimality_scan(&f, &l, &p.a, 0.0, 0.3, 2, &[0.3]).is_err());
}

#[test]
fn midpoint_replacement_never_increases_cost() {
    let p = pendulum::h2_plant();
    let (f, l) = h2_gains(&p).unwrap();
    let mut rng = Rng::seed(18);
    for _ in 0..20 {
        let hs: Vec<f64> = (0..5).map(|_| rng.uniform(0.05, 0.6)).collect();
        let before = pattern_gamma_sq(&f, &l, &p.a, 0.0, &hs).unwrap();
        let j = 1 + rng.below(4);
        let mut moved = hs.clone();
        let mean = 0.5 * (hs[j - 1] + hs[j]);
        moved[j - 1] = mean;
        moved[j] = mean;
        let after = pattern_gamma_sq(&f, &l, &p.a, 0.0, &moved).unwrap();
        assert!(after <= before * (1.0 + 1e-12), "{after} > {before}");
    }
}

#[test]
fn hinf_design_invariants() {
    let mut rng = Rng::seed(19);
    for _ in 0..5 {
        let p = random_standard_plant(&mut rng, 3, 1, 1);
        let g = hinf_gamma_opt(&p, 1e-6).unwrap();
        let d = hinf_design(&p, 1.3 * g).unwrap();
        let min_eig = |m: &Mat| m.clone().symmetric_eigen().eigenvalues.min();
        assert!(min_eig(&d.x) > -1e-9 && min_eig(&d.y) > -1e-9);
        assert!(d.rho_yx < d.gamma * d.gamma);
        assert_eq!(d.dre.p0, d.y);
        let rho0 = spectral_radius(&(&d.dre.p0 * &d.x)).unwrap();
        assert!((rho0 - d.rho_yx).abs() <= 1e-10 * (1.0 + d.rho_yx));
        let expected = (Mat::identity(3, 3) - &d.y * &d.x / (d.gamma * d.gamma)).try_inverse().unwrap();
        assert!((&d.controller.jump_m - expected).norm() < 1e-9 * (1.0 + d.z_gamma.norm()));
    }
}

#[test]
fn level_below_optimum_reports_which_condition_fails() {
    let mut rng = Rng::seed(20);
    let p = random_standard_plant(&mut rng, 3, 1, 1);
    let g = hinf_gamma_opt(&p, 1e-6).unwrap();
    match hinf_design(&p, 0.9 * g) {
        Err(Error::Infeasible(
            Infeasibility::ControlRiccati(_) | Infeasibility::FilterRiccati(_) | Infeasibility::Coupling { .. },
        )) => {}
        other => panic!("expected an infeasibility certificate, got {other:?}"),
    }
    let shaped = pendulum::shaped_plant();
    assert!(matches!(
        loopshape_design(&shaped, 1.5),
        Err(Error::Infeasible(Infeasibility::BelowOptimum { .. }))
    ));
}

#[test]
fn loopshape_jump_exceeds_identity() {
    let d = pendulum::design(pendulum::GAMMA).unwrap();
    // Z is similar to a symmetric matrix through Y^½; its spectrum is real and above 1
    for l in resample::matfun::eigenvalues(&d.z_gamma) {
        assert!(l.im.abs() < 1e-9 * l.re.abs() && l.re > 1.0, "eigenvalue {l}");
    }
    assert_eq!(d.controller.jump_m, d.z_gamma);
}

#[test]
fn admissibility_verdicts_agree_around_h_sup() {
    let d = pendulum::design(pendulum::GAMMA).unwrap();
    assert!(q_stat_norm_check(&d, 0.9 * d.h_sup).unwrap());
    assert!(!q_stat_norm_check(&d, 1.1 * d.h_sup).unwrap());
    assert!(d.dre.admissible(0.5 * d.h_sup).unwrap());
}

#[test]
fn curve_vanishes_near_optimum_and_grows() {
    let d = pendulum::design(pendulum::GAMMA).unwrap();
    let g0 = d.gamma_opt.unwrap();
    let pts = gamma_h_curve(&pendulum::shaped_plant(), &[g0 + 0.01, g0 + 0.05, 2.5, 3.703, 5.0]);
    let hs: Vec<f64> = pts.iter().map(|p| *p.h_sup.as_ref().unwrap()).collect();
    assert!(hs[0] < hs[1] && hs[1] < 0.02);
    assert!(hs.windows(2).all(|w| w[1] >= w[0]));
    let two = gamma_h_curve(&pendulum::shaped_plant(), &[3.0, 4.0]);
    assert_eq!(two.len(), 2);
    let failed = gamma_h_curve(&pendulum::shaped_plant(), &[1.0, 3.0]);
    assert!(failed[0].h_sup.is_err() && failed[1].h_sup.is_ok());
}
