use ignition_core::field::Field;
use ignition_core::periodic_solver::{
    evolve_periodic, evolve_physical, heat_evolve, rescaled_stencil, LimitOutcome, ClassifySettings,
};
use ignition_core::threshold::theta_map;
use ignition_core::{Nonlinearity, PeriodVector, PeriodicProfile, ProfileSpec};
use proptest::prelude::*;

fn f04() -> Nonlinearity {
    Nonlinearity::power(1.0, 1.0, 0.4, 0.1).unwrap()
}

fn step(dim: usize, split: f64, high: f64, low: f64) -> PeriodicProfile {
    PeriodicProfile::new(ProfileSpec::Step { dim, axis: 0, split, high, low }).unwrap()
}

/// `w' = w (K − w)` with `w = u − θ`, `K = 1 − θ`.
fn logistic(theta: f64, u0: f64, t: f64) -> f64 {
    let k = 1.0 - theta;
    let w0 = u0 - theta;
    let e = (k * t).exp();
    theta + k * w0 * e / (k + w0 * (e - 1.0))
}

#[test]
fn constant_data_follow_the_scalar_ode() {
    let f = f04();
    let p = PeriodicProfile::new(ProfileSpec::Constant { dim: 1, value: 0.45 }).unwrap();
    let per = PeriodVector::from_components(&[1.0]).unwrap();
    let dt = 1e-4;
    let traj = evolve_physical(&f, &p, &per, 128, Some(dt), 6.0, &[], 1000).unwrap();
    for s in &traj.samples {
        let exact = logistic(0.4, 0.45, s.t);
        // forward Euler: first order in dt
        assert!((s.mean - exact).abs() < 1e-4, "t = {}: {} vs {exact}", s.t, s.mean);
        assert_eq!(s.min, s.max);
    }
}

#[test]
fn rescaled_and_physical_time_agree() {
    let f = f04();
    let p = step(1, 1.0 / 3.0, 0.7, 0.2);
    let lam = 1.7;
    let per = PeriodVector::from_components(&[lam]).unwrap();
    let n = 128;
    let dt = 0.5 * rescaled_stencil(&p, &per, n, lam * lam).unwrap().stable_dt(&f);
    let t = 200.0 * dt;
    let a = evolve_periodic(&f, &p, &per, n, Some(dt), t, &[t], 1000).unwrap();
    let b = evolve_physical(&f, &p, &per, n, Some(dt * lam * lam), t * lam * lam, &[t * lam * lam], 1000).unwrap();
    let (va, vb): (&Field, &Field) = (&a.snapshots[0].values, &b.snapshots[0].values);
    let worst = va.data.iter().zip(&vb.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn heat_flow_keeps_the_mean() {
    let f = f04();
    let p = step(2, 0.25, 0.9, 0.1);
    let per = PeriodVector::from_components(&[1.0, 1.3]).unwrap();
    let traj = heat_evolve(&f, &p, &per, 128, 0.05, &[], 50).unwrap();
    let m0 = traj.samples[0].mean;
    let t_end = traj.samples.last().unwrap().t;
    let drift = traj.samples.iter().map(|s| (s.mean - m0).abs()).fold(0.0, f64::max);
    assert!(drift / t_end <= 1e-10, "{drift}");
}

#[test]
fn theta_map_is_nondecreasing_on_the_stripe() {
    let f = f04();
    let p = step(1, 1.0 / 3.0, 0.7, 0.2);
    let lambdas = [0.1, 0.4, 0.8, 1.2, 1.6, 2.0, 2.4, 2.8, 4.0, 10.0];
    let settings = ClassifySettings { fit_rate: false, ..ClassifySettings::default() };
    let pts = theta_map(&f, &p, &[1.0], &lambdas, &settings, None).unwrap();
    let vals: Vec<f64> = pts.iter().map(|q| q.classification.value().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-4), "{vals:?}");
    assert_eq!(pts[0].classification.outcome, LimitOutcome::ConvergedToConstant { value: vals[0] });
    assert_eq!(pts.last().unwrap().classification.outcome, LimitOutcome::ConvergedToOne);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, .. ProptestConfig::default() })]

    #[test]
    fn energy_never_increases(split in 0.1f64..0.9, high in 0.45f64..1.0, low in 0.0f64..0.4, lam in 0.2f64..6.0) {
        let f = f04();
        let p = step(1, split, high, low);
        let per = PeriodVector::from_components(&[lam]).unwrap();
        let traj = evolve_periodic(&f, &p, &per, 128, None, 0.05, &[], 5).unwrap();
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].lyapunov <= w[0].lyapunov + 1e-8, "{} -> {}", w[0].lyapunov, w[1].lyapunov);
        }
    }

    #[test]
    fn ordered_data_stay_ordered(split in 0.1f64..0.9, high in 0.3f64..0.9, low in 0.0f64..0.3,
                                 dh in 0.0f64..0.1, dl in 0.0f64..0.1, lam in 0.5f64..4.0) {
        let f = f04();
        let per = PeriodVector::from_components(&[lam]).unwrap();
        let t = 0.2;
        let a = evolve_periodic(&f, &step(1, split, high, low), &per, 128, None, t, &[t], 1000).unwrap();
        let b = evolve_periodic(&f, &step(1, split, high + dh, low + dl), &per, 128, Some(a.dt), t, &[t], 1000).unwrap();
        let (va, vb) = (&a.snapshots[0].values, &b.snapshots[0].values);
        prop_assert!(va.data.iter().zip(&vb.data).all(|(x, y)| *x <= *y + 1e-14));
    }

    #[test]
    fn values_stay_in_the_unit_interval(split in 0.1f64..0.9, high in 0.0f64..1.0, low in 0.0f64..1.0, lam in 0.2f64..8.0) {
        let f = f04();
        let per = PeriodVector::from_components(&[lam]).unwrap();
        let traj = evolve_periodic(&f, &step(1, split, high, low), &per, 128, None, 0.1, &[], 10).unwrap();
        prop_assert!(traj.clamp_max <= 1e-12, "{}", traj.clamp_max);
        prop_assert!(traj.samples.iter().all(|s| s.min >= 0.0 && s.max <= 1.0));
    }
}
