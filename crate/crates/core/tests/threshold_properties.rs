use ignition_core::cache::MemoryCache;
use ignition_core::periodic_solver::LimitOutcome;
use ignition_core::threshold::{critical_magnitude, CriticalMagnitude, ThresholdSettings};
use ignition_core::{Nonlinearity, PeriodicProfile, ProfileSpec};

fn setup() -> (Nonlinearity, PeriodicProfile) {
    let f = Nonlinearity::power(1.0, 1.0, 0.4, 0.1).unwrap();
    (f, PeriodicProfile::new(ProfileSpec::stripe(1, 0.4)).unwrap())
}

#[test]
fn band_separates_the_two_outcomes() {
    let (f, p) = setup();
    let rec = critical_magnitude(&f, &p, &[1.0], &ThresholdSettings::default(), None).unwrap();
    let CriticalMagnitude::Band { lo, hi } = rec.l_star else { panic!("{:?}", rec.l_star) };
    assert!(hi - lo <= 1e-3 * hi);
    for e in &rec.provenance {
        match e.classification.outcome {
            LimitOutcome::ConvergedToOne => assert!(e.lambda >= hi),
            LimitOutcome::ConvergedToConstant { .. } => assert!(e.lambda <= lo),
            LimitOutcome::UndeterminedBand => assert!(e.lambda > lo && e.lambda < hi),
        }
    }
    // θ_{ξ,λ} below the band is nondecreasing and below θ
    assert!(rec.theta_map.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-4));
    assert!(rec.theta_map.iter().all(|&(_, v)| v <= f.theta()));
}

#[test]
fn cached_search_repeats_itself_without_simulating() {
    let (f, p) = setup();
    let cache = MemoryCache::new();
    let s = ThresholdSettings { rel_tol: 1e-2, ..ThresholdSettings::default() };
    let a = critical_magnitude(&f, &p, &[1.0], &s, Some(&cache)).unwrap();
    assert_eq!(a.cache_hits(), 0);
    let b = critical_magnitude(&f, &p, &[1.0], &s, Some(&cache)).unwrap();
    assert_eq!(b.cache_hits(), b.provenance.len());
    assert_eq!(a.l_star, b.l_star);
}

#[test]
fn a_profile_above_threshold_everywhere_has_zero_critical_magnitude() {
    let (f, _) = setup();
    let p = PeriodicProfile::new(ProfileSpec::Constant { dim: 2, value: 0.5 }).unwrap();
    let rec = critical_magnitude(&f, &p, &[0.6, 0.8], &ThresholdSettings::default(), None).unwrap();
    assert_eq!(rec.l_star, CriticalMagnitude::Zero);
    assert!(rec.provenance.is_empty());
}
