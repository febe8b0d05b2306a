//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero when any fails.
//!
//! `ACCEPTANCE_ONLY=1,5` restricts the run to the listed criteria.

use std::fs;
use std::path::Path;
use std::time::Instant;

use ignition_core::cauchy::evolve::{cells, CauchyRun, Snapshot};
use ignition_core::cauchy::supersolution::{
    claim31_residual, claim41_lower_residual, claim41_upper_residual, exact_front_residual, sandwich_check, Claim31,
    Claim41, ResidualGrid, EPS_NUM,
};
use ignition_core::cauchy::{
    estimate_spreading_speed, evolve_cauchy, front_shift, profile_convergence_error, SpreadOutcome, TruncatedDomain,
};
use ignition_core::front_solver::{
    decay_rates, minimal_monostable_speed, smallest_root, solve_front, FrontProfile,
};
use ignition_core::periodic_solver::{classify_limit, heat_evolve, ClassifySettings, LimitOutcome};
use ignition_core::profiles::{DataKind, XI_MIN};
use ignition_core::threshold::{critical_magnitude, homogenization_check, theta_map, ThresholdSettings};
use ignition_core::{InitialData, Nonlinearity, PeriodVector, PeriodicProfile, ProfileSpec};

struct Check {
    name: String,
    pass: bool,
}

#[derive(Default)]
struct Report {
    checks: Vec<Check>,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("    {} {name}: {detail}", if pass { "ok  " } else { "FAIL" });
        self.checks.push(Check { name: name.into(), pass });
    }

    fn error(&mut self, name: &str, e: impl std::fmt::Display) {
        self.check(name, false, format!("error: {e}"));
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

fn power(theta: f64) -> Nonlinearity {
    Nonlinearity::power(1.0, 1.0, theta, 0.1).unwrap()
}

const THETA: f64 = 0.4;

fn stripe(dim: usize) -> PeriodicProfile {
    PeriodicProfile::new(ProfileSpec::stripe(dim, THETA)).unwrap()
}

fn stripe_mean() -> f64 {
    (1.0 + 3.0 * THETA) / 6.0
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn times(t_end: f64, every: f64) -> Vec<f64> {
    let k = (t_end / every + 1e-9).floor() as usize;
    (0..=k).map(|i| i as f64 * every).collect()
}

/// Least squares for `R = c t + b ln t + a`; returns `c`.
fn log_corrected_speed(pts: &[(f64, f64)]) -> f64 {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(t, r) in pts {
        let row = [t, t.ln(), 1.0];
        for i in 0..3 {
            atb[i] += row[i] * r;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let mut m0 = ata;
    for i in 0..3 {
        m0[i][0] = atb[i];
    }
    det(m0) / det(ata)
}

/// The 1-D stripe threshold band, resolved tightly because criteria 5 to 7
/// sit on fractions of it.
struct Band {
    lo: f64,
    hi: f64,
}

impl Band {
    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

fn stripe_band() -> Band {
    let s = ThresholdSettings { rel_tol: 1e-8, ..ThresholdSettings::default() };
    let r = critical_magnitude(&power(THETA), &stripe(1), &[1.0], &s, None).unwrap();
    let (lo, hi) = r.l_star.bounds();
    Band { lo, hi }
}

fn criterion1(r: &mut Report) {
    let theta = 0.3;
    let f = power(theta);
    let alphas: Vec<f64> = (0..=5).map(|k| 0.05 * k as f64).collect();
    let fronts: Vec<_> = alphas.iter().map(|&a| solve_front(&f, a).unwrap()).collect();
    let worst = fronts.iter().map(|s| s.profile.residual(&f)).fold(0.0, f64::max);
    r.check("front residual", worst <= 1e-4, format!("max {worst:.3e} <= 1e-4"));
    let speeds: Vec<f64> = fronts.iter().map(|s| s.speed).collect();
    let inc = speeds.windows(2).all(|w| w[1] > w[0]);
    r.check("c*(alpha) strictly increasing", inc, format!("{speeds:.5?}"));

    let floor = 2.0 * (1.0 - theta as f64).sqrt();
    let cm = minimal_monostable_speed(&f).unwrap();
    r.check("monostable floor", cm >= floor, format!("c*(theta) = {cm:.9} >= {floor:.9}"));
    // whole-space oracle: a plateau invading the constant θ state
    let t_end = 100.0;
    let p = PeriodicProfile::new(ProfileSpec::Constant { dim: 1, value: theta }).unwrap();
    let per = PeriodVector::from_components(&[1.0]).unwrap();
    let kind = DataKind::AsymptoticallyPeriodic { bump_height: 1.0 - theta, bump_radius: 4.0 };
    let data = InitialData::new(p, per, kind, 1.0, 1.0).unwrap();
    let w = TruncatedDomain::required_half_width(cm, t_end, &[1.0]);
    let dom = TruncatedDomain::build(&data, 2, 0.1, w, 1.0).unwrap();
    match evolve_cauchy(&f, &data, dom, None, t_end, &times(t_end, 1.0))
        .and_then(|rec| estimate_spreading_speed(&rec.domain, &rec.snapshots, 0.65, 0.5))
    {
        Ok(SpreadOutcome::Speed(e)) => {
            let win: Vec<(f64, f64)> = e.series.iter().copied().filter(|p| p.0 >= e.fit_start).collect();
            let c = log_corrected_speed(&win);
            let d = rel(c, cm);
            r.check("monostable speed vs Cauchy oracle", d <= 0.01, format!("c_est {c:.5} vs {cm:.5}, rel {d:.2e} <= 1e-2"));
        }
        Ok(o) => r.check("monostable speed vs Cauchy oracle", false, format!("unexpected {o:?}")),
        Err(e) => r.error("monostable speed vs Cauchy oracle", e),
    }

    let fp = f.f_prime_theta_plus();
    let mut worst = 0.0f64;
    for c in [cm, 1.8, 2.5, 4.0, 10.0] {
        let d = decay_rates(&f, c).unwrap();
        let other = c - d.lambda_minus;
        for l in [d.lambda_minus, other, d.lambda_star] {
            let cc = if l == d.lambda_star { cm } else { c };
            worst = worst.max((l * l - cc * l + fp).abs());
        }
    }
    r.check("decay roots satisfy the quadratic", worst <= 1e-12, format!("max |q| {worst:.2e} <= 1e-12"));
    let a = smallest_root(3.0, 2.0).unwrap();
    let flat = Nonlinearity::power(1.0, 2.0, theta, 0.1).unwrap();
    let z = decay_rates(&flat, 1.0).unwrap();
    // double root at c = 2 sqrt(f'(θ⁺))
    let eq = [smallest_root(2.0, 1.0).unwrap(), smallest_root(4.0, 4.0).unwrap()];
    let ok = a == 1.0 && z.lambda_minus == 0.0 && z.lambda_star == 0.0 && eq == [1.0, 2.0];
    r.check(
        "trivial decay cases",
        ok,
        format!("(3,2) -> {a}; f'=0 -> ({}, {}); double root -> {eq:?}", z.lambda_minus, z.lambda_star),
    );
}

fn criterion2(r: &mut Report) {
    let f = power(THETA);
    let p = stripe(2);
    let xi = vec![(1.0 - XI_MIN * XI_MIN).sqrt(), XI_MIN];
    let s = ClassifySettings { n: 256, fit_rate: true, lyapunov_every: 1, ..ClassifySettings::default() };
    let mut lyap = 0.0f64;
    let mut drift = 0.0f64;

    let small = classify_limit(&f, &p, &PeriodVector::new(xi.clone(), 0.05).unwrap(), &s).unwrap();
    let v = small.value().unwrap_or(f64::NAN);
    let ok = matches!(small.outcome, LimitOutcome::ConvergedToConstant { .. }) && (v - stripe_mean()).abs() <= 0.02;
    r.check("lambda = 0.05 gives the mean", ok, format!("{:?}, |{v:.5} - {:.5}| <= 0.02", small.outcome, stripe_mean()));
    lyap = lyap.max(small.lyapunov_max_increase);
    if let Some(rate) = small.rate {
        drift = drift.max(rate.mean_drift_rate);
    }

    let big = classify_limit(&f, &p, &PeriodVector::new(xi.clone(), 50.0).unwrap(), &s).unwrap();
    r.check("lambda = 50 gives one", big.outcome == LimitOutcome::ConvergedToOne, format!("{:?}", big.outcome));
    lyap = lyap.max(big.lyapunov_max_increase);

    let lambdas: Vec<f64> = (0..10).map(|k| 0.2 * 1.5f64.powi(k)).collect();
    let pts = theta_map(&f, &p, &xi, &lambdas, &s, None).unwrap();
    let vals: Vec<f64> = pts.iter().filter_map(|q| q.classification.value()).collect();
    let drop = vals.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    r.check(
        "theta map nondecreasing",
        vals.len() == lambdas.len() && drop <= 1e-4,
        format!("{} of {} resolved, largest drop {drop:.2e} <= 1e-4 over {vals:.4?}", vals.len(), lambdas.len()),
    );
    for q in &pts {
        lyap = lyap.max(q.classification.lyapunov_max_increase);
        if let Some(rate) = q.classification.rate {
            drift = drift.max(rate.mean_drift_rate);
        }
    }
    r.check("energy nonincreasing", lyap <= 1e-8, format!("max increase {lyap:.2e} <= 1e-8"));

    let heat = heat_evolve(&f, &p, &PeriodVector::new(xi, 1.0).unwrap(), 256, 0.5, &[], 50).unwrap();
    let m0 = heat.samples[0].mean;
    let t_end = heat.samples.last().unwrap().t;
    let hd = heat.samples.iter().map(|x| (x.mean - m0).abs()).fold(0.0, f64::max) / t_end;
    drift = drift.max(hd);
    r.check("heat-regime mean drift", drift <= 1e-10, format!("{drift:.2e} per unit time <= 1e-10"));
}

fn criterion3(r: &mut Report) {
    let f = power(THETA);
    let p = stripe(2);
    let xi = unit(&[1.0, 1.0]);
    let coarse = ThresholdSettings::default();
    let fine = ThresholdSettings { classify: ClassifySettings { n: 256, ..coarse.classify }, ..coarse };
    let a = critical_magnitude(&f, &p, &xi, &coarse, None).unwrap();
    let b = critical_magnitude(&f, &p, &xi, &fine, None).unwrap();
    let (lo, hi) = a.l_star.bounds();
    let width = (hi - lo) / a.l_star.midpoint();
    r.check("band width at n = 128", width <= 1e-2, format!("[{lo:.6}, {hi:.6}], relative {width:.2e} <= 1e-2"));
    let d = rel(b.l_star.midpoint(), a.l_star.midpoint());
    r.check("self-convergence at n = 256", d <= 0.02, format!("{:.6} vs {:.6}, rel {d:.2e} <= 2e-2", b.l_star.midpoint(), a.l_star.midpoint()));
    let mut bad = 0;
    for rec in [&a, &b] {
        let (lo, hi) = rec.l_star.bounds();
        for e in &rec.provenance {
            let o = e.classification.outcome;
            if (e.lambda <= lo && !matches!(o, LimitOutcome::ConvergedToConstant { .. }))
                || (e.lambda >= hi && o != LimitOutcome::ConvergedToOne)
            {
                bad += 1;
            }
        }
    }
    let n = a.provenance.len() + b.provenance.len();
    r.check("dichotomy sharpness", bad == 0, format!("{bad} misclassified of {n} runs"));
}

fn criterion4(r: &mut Report, band: &Band) {
    let f = power(THETA);
    let p = stripe(2);
    let s = ThresholdSettings::default();
    let eps = [0.3, 0.1, 0.03];
    let toward_second: Vec<Vec<f64>> = eps.iter().map(|&e: &f64| vec![e, (1.0 - e * e).sqrt()]).collect();
    match homogenization_check(&f, &p, 1, &[1.0], &toward_second, &s, None) {
        Ok(rep) => {
            let mids: Vec<f64> = rep.sequence.iter().map(|x| x.l_star.midpoint()).collect();
            r.check("L* increases toward (0,1)", rep.monotone_increasing, format!("{mids:.4?}"));
            let ratio = mids[2] / mids[0];
            r.check("L*(0.03) > 3 L*(0.3)", ratio > 3.0, format!("ratio {ratio:.3}"));
            r.check(
                "homogenized limit is infinite",
                rep.limit.l_star.midpoint().is_infinite(),
                format!("{:?}", rep.limit.l_star),
            );
        }
        Err(e) => r.error("approach toward (0,1)", e),
    }
    let one_d = critical_magnitude(&f, &stripe(1), &[1.0], &s, None).unwrap().l_star.midpoint();
    let mut worst = 0.0f64;
    let mut vals = Vec::new();
    for &e in &eps {
        let xi = vec![(1.0 - e * e).sqrt(), e];
        let m = critical_magnitude(&f, &p, &xi, &s, None).unwrap().l_star.midpoint();
        worst = worst.max(rel(m, one_d));
        vals.push(m);
    }
    r.check(
        "toward (1,0) matches the 1-D threshold",
        worst <= 0.05,
        format!("{vals:.4?} vs {one_d:.4} (tight band {:.6}), max rel {worst:.2e} <= 5e-2", band.mid()),
    );
}

fn bump_data(lam: f64, height: f64, radius: f64, lambda0: f64) -> InitialData {
    let per = PeriodVector::from_components(&[lam]).unwrap();
    let kind = DataKind::AsymptoticallyPeriodic { bump_height: height, bump_radius: radius };
    InitialData::new(stripe(1), per, kind, 1.0, lambda0).unwrap()
}

fn criterion5(r: &mut Report, band: &Band) {
    let f = power(THETA);
    let c0 = solve_front(&f, 0.0).unwrap().speed;
    let cm = minimal_monostable_speed(&f).unwrap();
    let t_end = 60.0;

    let lam = 0.5 * band.mid();
    let data = bump_data(lam, 1.0, 12.0, 0.5 * c0);
    let w = TruncatedDomain::required_half_width(cm, t_end, &[lam]);
    let dom = TruncatedDomain::build(&data, 32, 0.1, w, 1.0).unwrap();
    let rec = evolve_cauchy(&f, &data, dom, None, t_end, &times(t_end, 1.0)).unwrap();
    let alpha = rec.snapshots.last().unwrap().v.mean();
    let c_ref = solve_front(&f, alpha).unwrap().speed;
    match estimate_spreading_speed(&rec.domain, &rec.snapshots, 0.5 * (1.0 + THETA), 0.5) {
        Ok(SpreadOutcome::Speed(e)) => {
            let d = rel(e.speed, c_ref);
            r.check(
                "speed below threshold",
                d <= 0.05,
                format!("lambda {lam:.4}: c_est {:.5} vs c*({alpha:.5}) = {c_ref:.5}, rel {d:.2e} <= 5e-2", e.speed),
            );
        }
        Ok(o) => r.check("speed below threshold", false, format!("unexpected {o:?}")),
        Err(e) => r.error("speed below threshold", e),
    }

    let lam = 2.0 * band.mid();
    let data = bump_data(lam, 1.0, 12.0, 0.5 * c0);
    let dom = TruncatedDomain::build(&data, 32, 0.1, w, 1.0).unwrap();
    let rec = evolve_cauchy(&f, &data, dom, None, t_end, &times(t_end, 1.0)).unwrap();
    match estimate_spreading_speed(&rec.domain, &rec.snapshots, 0.5 * (1.0 + THETA), 0.5) {
        Ok(SpreadOutcome::Uniform { t, min }) => {
            r.check("uniform convergence above threshold", min >= 0.99, format!("lambda {lam:.4}: level held from t = {t}, final min {min:.6}"))
        }
        Ok(o) => r.check("uniform convergence above threshold", false, format!("unexpected {o:?}")),
        Err(e) => r.error("uniform convergence above threshold", e),
    }
}

fn criterion6(r: &mut Report, band: &Band) {
    let f = power(THETA);
    let cm = minimal_monostable_speed(&f).unwrap();
    let lam = band.mid();
    let t_end = 60.0;
    let data = bump_data(lam, 1.0, 12.0, 2.0);
    let w = TruncatedDomain::required_half_width(cm, t_end, &[lam]);
    let dom = TruncatedDomain::build(&data, 128, 0.1, w, 1.0).unwrap();
    let rec = evolve_cauchy(&f, &data, dom, None, t_end, &times(t_end, 1.0)).unwrap();
    // keep only the stretch where the companion still sits near θ
    let mut snaps = rec.snapshots;
    let keep = snaps.iter().position(|s| s.v.min() > THETA + 0.01 || s.v.max() < THETA - 0.01).unwrap_or(snaps.len());
    snaps.truncate(keep);
    let bw = (band.hi - band.lo) / band.mid();
    match estimate_spreading_speed(&rec.domain, &snaps, 0.5 * (1.0 + THETA), 0.5) {
        Ok(SpreadOutcome::Speed(e)) => {
            let d = rel(e.speed, cm);
            r.check(
                "near-critical speed (bracketing)",
                d <= 0.10,
                format!(
                    "lambda {lam:.8} (band rel width {bw:.1e}), {keep} snapshots: c_est {:.5} vs c*(theta) {cm:.5}, rel {d:.2e} <= 1e-1",
                    e.speed
                ),
            );
        }
        Ok(o) => r.check("near-critical speed (bracketing)", false, format!("unexpected {o:?}")),
        Err(e) => r.error("near-critical speed (bracketing)", e),
    }
}

/// Runs from `u0 = g(x)` inside `domain`, one snapshot every `every`.
fn run_from(f: &Nonlinearity, data: &InitialData, domain: &TruncatedDomain, g: impl Fn(f64) -> f64, t_end: f64, every: f64) -> Vec<Snapshot> {
    let mut run = CauchyRun::new(f, data, domain.clone(), None).unwrap();
    for (i, c) in cells(domain.shape).enumerate() {
        if !domain.is_collar(c) {
            run.u.data[i] = g(domain.node(c)[0]);
        }
    }
    let mut snaps = vec![run.snapshot()];
    let mut next = every;
    while run.t + 0.5 * run.dt < t_end {
        run.step().unwrap();
        if run.t + 0.5 * run.dt >= next {
            snaps.push(run.snapshot());
            next += every;
        }
    }
    snaps
}

struct FrontRun {
    domain: TruncatedDomain,
    snaps: Vec<Snapshot>,
    front: FrontProfile,
    alpha: f64,
    lambda0: f64,
}

fn front_run_1d(band: &Band) -> FrontRun {
    let f = power(THETA);
    let c0 = solve_front(&f, 0.0).unwrap().speed;
    let lam = 0.5 * band.mid();
    let per = PeriodVector::from_components(&[lam]).unwrap();
    let lambda0 = 0.5 * c0;
    let data = InitialData::front_like(stripe(1), per, Some(&[1.0]), 1.0, 0.0, 1.0, lambda0).unwrap();
    let (behind, ahead, t_end) = (5.0, 75.0, 50.0);
    let m = (1024.0 * lam / (behind + ahead)).round() as usize;
    let dom = TruncatedDomain::build(&data, m, 0.1, ahead, behind).unwrap();
    let rec = evolve_cauchy(&f, &data, dom, None, t_end, &times(t_end, 1.0)).unwrap();
    let alpha = rec.snapshots.last().unwrap().v.mean();
    let front = solve_front(&f, alpha).unwrap().profile;
    FrontRun { domain: rec.domain, snaps: rec.snapshots, front, alpha, lambda0 }
}

fn criterion7(r: &mut Report, band: &Band, run: &FrontRun) {
    let f = power(THETA);
    let level = 0.5 * (1.0 + THETA);
    match front_shift(&run.domain, &run.snaps, run.front.speed, level)
        .and_then(|sh| profile_convergence_error(&run.domain, &run.snaps, &run.front, &sh))
    {
        Ok(err) => {
            let tail = &err[err.len() / 2..];
            let dec = tail.windows(2).all(|w| w[1].1 <= w[0].1);
            let last = err.last().unwrap().1;
            r.check(
                "1-D error decreasing over the trailing half",
                dec,
                format!("e({:.0}) = {:.3e} .. e({:.0}) = {last:.3e}", tail[0].0, tail[0].1, err.last().unwrap().0),
            );
            r.check("1-D final error", last <= 0.05, format!("{last:.3e} <= 5e-2 (alpha {:.5})", run.alpha));
        }
        Err(e) => r.error("1-D profile convergence", e),
    }

    // the solver started exactly on a front stays on it
    let alpha = 0.1;
    let u = solve_front(&f, alpha).unwrap().profile;
    let flat = PeriodicProfile::new(ProfileSpec::Constant { dim: 1, value: alpha }).unwrap();
    let per = PeriodVector::from_components(&[1.0]).unwrap();
    let data = InitialData::front_like(flat, per, Some(&[1.0]), 1.0, 0.0, 1.0, 1.0).unwrap();
    let dom = TruncatedDomain::build(&data, 2, 80.0 / 1024.0, 45.0, 15.0).unwrap();
    let snaps = run_from(&f, &data, &dom, |x| u.eval(x - 5.0), 20.0, 2.0);
    match front_shift(&dom, &snaps, u.speed, level).and_then(|sh| profile_convergence_error(&dom, &snaps, &u, &sh)) {
        Ok(err) => {
            let worst = err.iter().map(|p| p.1).fold(0.0, f64::max);
            r.check("manufactured front control", worst <= 1e-3, format!("max e {worst:.3e} <= 1e-3"));
        }
        Err(e) => r.error("manufactured front control", e),
    }

    // 2-D: transverse flattening of the shift
    let c0 = solve_front(&f, 0.0).unwrap().speed;
    let lam = 0.5 * band.mid();
    let per = PeriodVector::from_components(&[lam, 1.0]).unwrap();
    let data = InitialData::front_like(stripe(2), per, Some(&[0.0, 1.0]), 1.0, 0.0, 1.0, 0.5 * c0).unwrap();
    let (behind, ahead, t_end) = (5.0, 55.0, 40.0);
    let dom = TruncatedDomain::build(&data, 64, (behind + ahead) / 256.0, ahead, behind).unwrap();
    let rec = evolve_cauchy(&f, &data, dom, None, t_end, &times(t_end, 1.0)).unwrap();
    let alpha = rec.snapshots.last().unwrap().v.mean();
    let c = solve_front(&f, alpha).unwrap().speed;
    match front_shift(&rec.domain, &rec.snapshots, c, level) {
        Ok(sh) => {
            let spread: Vec<f64> = (0..sh.times.len()).filter_map(|k| sh.transverse_spread(k)).collect();
            let dec = spread.windows(2).all(|w| w[1] <= w[0]);
            let strict = spread.first().zip(spread.last()).is_some_and(|(a, b)| b < a);
            r.check(
                "2-D transverse spread decreasing",
                dec && strict,
                format!("{} samples, {:.3e} -> {:.3e}", spread.len(), spread.first().unwrap_or(&f64::NAN), spread.last().unwrap_or(&f64::NAN)),
            );
        }
        Err(e) => r.error("2-D transverse spread", e),
    }
}

fn criterion8(r: &mut Report, run: &FrontRun) {
    let f = power(THETA);
    let grid = ResidualGrid::default();
    let tol = 1e-4;
    let cm = minimal_monostable_speed(&f).unwrap();
    let c31 = Claim31::new(&f, 1.1 * cm, None).unwrap();
    let a = claim31_residual(&f, &c31, &grid, tol);
    r.check("claim 3.1 supersolution", a.extreme >= -tol, format!("min residual {:.3e} >= -1e-4 over {} points", a.extreme, a.points));
    let c0 = solve_front(&f, 0.0).unwrap().speed;
    let alpha = 0.37f64.min(THETA - 0.05);
    let c41 = Claim41::new(&f, alpha, 0.5 * c0, None, None).unwrap();
    let up = claim41_upper_residual(&f, &c41, &grid, tol);
    let lo = claim41_lower_residual(&f, &c41, &grid, tol);
    r.check("claim 4.1 supersolution", up.extreme >= -tol, format!("min residual {:.3e} >= -1e-4", up.extreme));
    r.check("claim 4.1 subsolution", lo.extreme <= tol, format!("max residual {:.3e} <= 1e-4", lo.extreme));
    let ex = exact_front_residual(&f, &solve_front(&f, alpha).unwrap().profile, &grid, EPS_NUM);
    r.check("exact front control", ex.passed, format!("|residual| {:.3e} <= {EPS_NUM:.0e}", ex.extreme.abs()));

    match Claim41::new(&f, run.alpha, run.lambda0, None, None) {
        Ok(claim) => {
            for tau in [5, 10, 20] {
                match sandwich_check(&run.domain, &run.snaps, &claim, tau, 1.0, 1e-3) {
                    Ok(s) => {
                        let over = s.gaps.iter().map(|g| g.1).fold(f64::MIN, f64::max);
                        let under = s.gaps.iter().map(|g| g.2).fold(f64::MIN, f64::max);
                        r.check(
                            &format!("sandwich from tau = {}", s.tau),
                            s.holds,
                            format!("worst excess above {over:.2e}, below {under:.2e}, tolerance 1e-3"),
                        );
                    }
                    Err(e) => r.error("sandwich", e),
                }
            }
        }
        Err(e) => r.error("sandwich", e),
    }
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

fn criterion9(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        r#"experiment = "threshold"

[reaction]
family = "power"
a = 1.0
p = 1.0
theta = 0.4
rho = 0.1

[profile]
family = "step"
dim = 2
axis = 0
split = 0.3333333333333333
high = 0.7
low = 0.2

[threshold]
xis = [[0.7071067811865476, 0.7071067811865476], [0.8, 0.6]]
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = || {
        ignlab::main_with(["ignlab", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
    };
    let cold = run();
    let first = csv_bytes(&out);
    let manifest = fs::read_to_string(out.join(ignlab::MANIFEST_FILE)).unwrap_or_default();
    let warm = run();
    let second = csv_bytes(&out);
    let warm_manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join(ignlab::MANIFEST_FILE)).unwrap_or_default()).unwrap_or_default();
    let sims = warm_manifest["cache"]["simulations"].as_u64();
    r.check(
        "warm cache byte-identical CSVs",
        cold == 0 && warm == 0 && !first.is_empty() && first == second && sims == Some(0),
        format!("exit {cold}/{warm}, {} files, warm simulations {sims:?}", first.len()),
    );
    let code = ignlab::main_with(["ignlab", "replay", out.join(ignlab::MANIFEST_FILE).to_str().unwrap()]);
    r.check("manifest replays to identical numbers", code == 0 && !manifest.is_empty(), format!("replay exit {code}"));
}

fn main() {
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let want = |k: u32| only.as_ref().is_none_or(|o| o.contains(&k));
    let needs_band = (4..=8).any(want);
    let t0 = Instant::now();
    let band = needs_band.then(stripe_band);
    if let Some(b) = &band {
        println!("1-D stripe threshold band [{:.10}, {:.10}] ({:.1}s)", b.lo, b.hi, t0.elapsed().as_secs_f64());
    }
    let front = (want(7) || want(8)).then(|| front_run_1d(band.as_ref().unwrap()));

    let mut failed = Vec::new();
    let mut summary = Vec::new();
    for k in 1..=9u32 {
        if !want(k) {
            continue;
        }
        println!("criterion {k}");
        let t = Instant::now();
        let mut r = Report::default();
        match k {
            1 => criterion1(&mut r),
            2 => criterion2(&mut r),
            3 => criterion3(&mut r),
            4 => criterion4(&mut r, band.as_ref().unwrap()),
            5 => criterion5(&mut r, band.as_ref().unwrap()),
            6 => criterion6(&mut r, band.as_ref().unwrap()),
            7 => criterion7(&mut r, band.as_ref().unwrap(), front.as_ref().unwrap()),
            8 => criterion8(&mut r, front.as_ref().unwrap()),
            _ => criterion9(&mut r),
        }
        let pass = r.passed();
        let failing: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let line = format!(
            "{} criterion {k} ({:.1}s){}",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            if failing.is_empty() { String::new() } else { format!(": {}", failing.join("; ")) }
        );
        println!("{line}");
        summary.push(line);
        if !pass {
            failed.push(k);
        }
    }
    println!("\nsummary ({:.1}s)", t0.elapsed().as_secs_f64());
    for l in &summary {
        println!("{l}");
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
