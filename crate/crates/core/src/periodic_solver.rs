//! The spatially periodic problem in rescaled form
//! `∂t ṽ = Σ ξ_i⁻² ∂²_i ṽ + λ² f(ṽ)` on the unit torus, its large-time
//! classification and the Lyapunov functional.
//!
//! Rescaled time `t` corresponds to physical time `λ² t`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AxisBoundary, Field, Stencil};
use crate::nonlinearity::Nonlinearity;
use crate::profiles::{PeriodVector, PeriodicProfile};

/// Physical horizon of [`classify_limit`] when none is given.
pub const DEFAULT_PHYSICAL_HORIZON: f64 = 50.0;

/// Smallest admissible number of cells per active axis.
pub const MIN_CELLS: usize = 128;

/// Stencil of the rescaled problem with `n` cells along every axis on which
/// `v0` depends and one cell along the others.
pub fn rescaled_stencil(v0: &PeriodicProfile, period: &PeriodVector, n: usize, weight: f64) -> Result<Stencil> {
    check_grid(v0, period, n)?;
    let mut shape = [1usize; 3];
    let mut h = [1.0; 3];
    let mut coef = [0.0; 3];
    for (a, xi) in period.xi().iter().enumerate() {
        coef[a] = xi.powi(-2);
    }
    for a in v0.active_axes() {
        shape[a] = n;
        h[a] = 1.0 / n as f64;
    }
    Ok(Stencil::new(shape, h, coef, [AxisBoundary::Periodic; 3], weight))
}

/// Stencil of the unscaled `L`-periodic problem on one period cell with `n`
/// cells per active axis, unit diffusion and unit reaction weight.
pub fn physical_stencil(v0: &PeriodicProfile, period: &PeriodVector, n: usize) -> Result<Stencil> {
    check_grid(v0, period, n)?;
    let l = period.components();
    let mut shape = [1usize; 3];
    let mut h = [1.0; 3];
    for (a, &la) in l.iter().enumerate() {
        h[a] = la;
    }
    for a in v0.active_axes() {
        shape[a] = n;
        h[a] = l[a] / n as f64;
    }
    Ok(Stencil::new(shape, h, [1.0; 3], [AxisBoundary::Periodic; 3], 1.0))
}

fn check_grid(v0: &PeriodicProfile, period: &PeriodVector, n: usize) -> Result<()> {
    if v0.dim() != period.dim() {
        return Err(Error::param("period", "dimension differs from the profile"));
    }
    if n < MIN_CELLS || !n.is_power_of_two() {
        return Err(Error::param("n", format!("{n} must be a power of two of at least {MIN_CELLS}")));
    }
    Ok(())
}

/// A grid state with its time and spatial mean.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusState {
    pub values: Field,
    pub t: f64,
    pub mean: f64,
}

/// One row of the recorded time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub lyapunov: f64,
}

/// Explicit time stepper on a torus grid.
pub struct TorusSolver<'a> {
    pub f: &'a Nonlinearity,
    pub stencil: Stencil,
    pub values: Field,
    scratch: Field,
    pub t: f64,
    pub dt: f64,
    pub clamp_max: f64,
    pub min: f64,
    pub max: f64,
}

impl<'a> TorusSolver<'a> {
    /// `dt = None` selects the stability cap; a larger `dt` is rejected.
    pub fn new(f: &'a Nonlinearity, stencil: Stencil, values: Field, dt: Option<f64>) -> Result<Self> {
        let cap = stencil.stable_dt(f);
        let dt = match dt {
            None => cap,
            Some(d) if d > 0.0 && d <= cap * (1.0 + 1e-12) => d,
            Some(d) => return Err(Error::param("dt", format!("{d} exceeds the stability cap {cap}"))),
        };
        if !dt.is_finite() {
            return Err(Error::param("dt", "no active axis and no reaction: choose dt explicitly"));
        }
        let min = values.min();
        let max = values.max();
        let scratch = values.clone();
        Ok(TorusSolver { f, stencil, values, scratch, t: 0.0, dt, clamp_max: 0.0, min, max })
    }

    pub fn step(&mut self) -> Result<()> {
        let stats = self.stencil.step(&self.values, &mut self.scratch, self.dt, self.f, self.t)?;
        std::mem::swap(&mut self.values, &mut self.scratch);
        self.t += self.dt;
        self.clamp_max = self.clamp_max.max(stats.clamp);
        self.min = stats.min;
        self.max = stats.max;
        Ok(())
    }

    pub fn state(&self) -> TorusState {
        TorusState { values: self.values.clone(), t: self.t, mean: self.values.mean() }
    }

    pub fn sample(&self) -> Sample {
        Sample {
            t: self.t,
            min: self.min,
            max: self.max,
            mean: self.values.mean(),
            lyapunov: lyapunov(self.f, &self.stencil, &self.values),
        }
    }
}

/// Discrete energy `Σ vol (½ Σ_i coef_i (D⁺_i v)² − weight·F(v))`, with
/// forward differences so that the explicit scheme is its exact gradient
/// flow.
pub fn lyapunov(f: &Nonlinearity, stencil: &Stencil, v: &Field) -> f64 {
    let vol: f64 = stencil.h.iter().product();
    let act = stencil.active_axes();
    let [n0, n1, n2] = v.shape;
    let mut total = 0.0;
    for i in 0..n0 {
        for j in 0..n1 {
            for k in 0..n2 {
                let c = [i, j, k];
                let u = v.get(c);
                let mut grad = 0.0;
                for &a in &act {
                    let mut nb = c;
                    nb[a] = (c[a] + 1) % v.shape[a];
                    let d = (v.get(nb) - u) / stencil.h[a];
                    grad += stencil.coef[a] * d * d;
                }
                let big_f = if u <= f.theta() { 0.0 } else { f.primitive(u.min(1.0)).unwrap_or(0.0) };
                total += vol * (0.5 * grad - stencil.weight * big_f);
            }
        }
    }
    total
}

/// Recorded evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<TorusState>,
    pub clamp_max: f64,
}

/// Evolves the rescaled problem to `t_end`, sampling every `sample_every`
/// steps and storing full states at the requested times.
pub fn evolve_periodic(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    period: &PeriodVector,
    n: usize,
    dt: Option<f64>,
    t_end: f64,
    snapshot_times: &[f64],
    sample_every: usize,
) -> Result<Trajectory> {
    let lam = period.lambda();
    let stencil = rescaled_stencil(v0, period, n, lam * lam)?;
    run(f, stencil, v0.torus_field(n), dt, t_end, snapshot_times, sample_every)
}

/// Same discretization with the reaction switched off.
pub fn heat_evolve(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    period: &PeriodVector,
    n: usize,
    t_end: f64,
    snapshot_times: &[f64],
    sample_every: usize,
) -> Result<Trajectory> {
    let stencil = rescaled_stencil(v0, period, n, 0.0)?;
    run(f, stencil, v0.torus_field(n), None, t_end, snapshot_times, sample_every)
}

/// Evolves the unscaled problem `∂t v = Δv + f(v)` on one physical period cell.
pub fn evolve_physical(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    period: &PeriodVector,
    n: usize,
    dt: Option<f64>,
    t_end: f64,
    snapshot_times: &[f64],
    sample_every: usize,
) -> Result<Trajectory> {
    let stencil = physical_stencil(v0, period, n)?;
    run(f, stencil, v0.torus_field(n), dt, t_end, snapshot_times, sample_every)
}

fn run(
    f: &Nonlinearity,
    stencil: Stencil,
    init: Field,
    dt: Option<f64>,
    t_end: f64,
    snapshot_times: &[f64],
    sample_every: usize,
) -> Result<Trajectory> {
    let mut s = TorusSolver::new(f, stencil, init, dt)?;
    let mut times: Vec<f64> = snapshot_times.to_vec();
    times.sort_by(|a, b| a.total_cmp(b));
    let mut next_snap = 0;
    let mut samples = vec![s.sample()];
    let mut snapshots = Vec::new();
    let every = sample_every.max(1);
    let mut k = 0usize;
    let half = 0.5 * s.dt;
    loop {
        while next_snap < times.len() && times[next_snap] <= s.t + half {
            snapshots.push(s.state());
            next_snap += 1;
        }
        if s.t + half >= t_end {
            break;
        }
        s.step()?;
        k += 1;
        if k % every == 0 {
            samples.push(s.sample());
        }
    }
    if samples.last().map(|x| x.t) != Some(s.t) {
        samples.push(s.sample());
    }
    Ok(Trajectory { dt: s.dt, samples, snapshots, clamp_max: s.clamp_max })
}

/// `μ₁ = (2π / max_i L_i)²`.
pub fn second_eigenvalue(period: &PeriodVector) -> f64 {
    let lmax = period.components().into_iter().fold(0.0, f64::max);
    (2.0 * PI / lmax).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum LimitOutcome {
    ConvergedToOne,
    ConvergedToConstant { value: f64 },
    UndeterminedBand,
}

/// Evidence behind a [`LimitOutcome`]. Times are rescaled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "certificate", rename_all = "kebab-case")]
pub enum Certificate {
    MinExceededHalfThetaOne { t: f64, min: f64 },
    MaxBelowTheta { t: f64, max: f64, mean: f64 },
    Timeout { t_max: f64, min: f64, max: f64 },
}

/// Fit of `‖v − θ_{ξ,λ}‖∞ ≤ C₁ e^{−μ₁ t}` in physical time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub c1: f64,
    pub mu1: f64,
    /// Drift of the spatial mean per unit physical time after the certificate.
    pub mean_drift_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitClassification {
    pub outcome: LimitOutcome,
    pub certificate: Certificate,
    pub rate: Option<RateFit>,
    pub lambda: f64,
    pub dt: f64,
    pub clamp_max: f64,
    /// Largest increase of the energy between consecutive samples.
    pub lyapunov_max_increase: f64,
}

impl LimitClassification {
    pub fn value(&self) -> Option<f64> {
        match self.outcome {
            LimitOutcome::ConvergedToConstant { value } => Some(value),
            LimitOutcome::ConvergedToOne => Some(1.0),
            LimitOutcome::UndeterminedBand => None,
        }
    }
}

/// Options shared by classification and threshold searches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifySettings {
    pub n: usize,
    pub dt: Option<f64>,
    /// Horizon in physical time; the rescaled horizon is this over `λ²`.
    pub physical_horizon: f64,
    /// Whether to continue past certificate (b) to fit the decay rate.
    pub fit_rate: bool,
    /// Energy samples every this many steps (0 disables monitoring).
    pub lyapunov_every: usize,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings { n: 128, dt: None, physical_horizon: DEFAULT_PHYSICAL_HORIZON, fit_rate: true, lyapunov_every: 0 }
    }
}

/// Evolves until the minimum reaches `(1+θ)/2`, the maximum drops to `θ`, or
/// the horizon `T_max` passes.
pub fn classify_limit(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    period: &PeriodVector,
    settings: &ClassifySettings,
) -> Result<LimitClassification> {
    let lam = period.lambda();
    let theta = f.theta();
    let upper = 0.5 * (1.0 + theta);
    let t_max = settings.physical_horizon / (lam * lam);
    let stencil = rescaled_stencil(v0, period, settings.n, lam * lam)?;
    let mut s = TorusSolver::new(f, stencil, v0.torus_field(settings.n), settings.dt)?;
    let mut lyap_prev = if settings.lyapunov_every > 0 { Some(lyapunov(f, &s.stencil, &s.values)) } else { None };
    let mut lyap_up: f64 = 0.0;
    let mut k = 0usize;
    let (outcome, certificate) = loop {
        if s.min >= upper {
            break (LimitOutcome::ConvergedToOne, Certificate::MinExceededHalfThetaOne { t: s.t, min: s.min });
        }
        if s.max <= theta {
            let mean = s.values.mean();
            break (
                LimitOutcome::ConvergedToConstant { value: mean },
                Certificate::MaxBelowTheta { t: s.t, max: s.max, mean },
            );
        }
        if s.t >= t_max {
            break (LimitOutcome::UndeterminedBand, Certificate::Timeout { t_max, min: s.min, max: s.max });
        }
        s.step()?;
        k += 1;
        if let Some(prev) = lyap_prev {
            if k % settings.lyapunov_every == 0 {
                let g = lyapunov(f, &s.stencil, &s.values);
                lyap_up = lyap_up.max(g - prev);
                lyap_prev = Some(g);
            }
        }
    };
    let rate = match (&outcome, settings.fit_rate) {
        (LimitOutcome::ConvergedToConstant { .. }, true) => fit_heat_tail(&mut s, lam)?,
        _ => None,
    };
    Ok(LimitClassification {
        outcome,
        certificate,
        rate,
        lambda: lam,
        dt: s.dt,
        clamp_max: s.clamp_max,
        lyapunov_max_increase: lyap_up,
    })
}

fn sup_deviation(v: &Field, mean: f64) -> f64 {
    v.data.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max)
}

/// Continues the (now purely diffusive) flow and fits `C₁ e^{−μ₁ t}` to the
/// sup-deviation from the mean over the late part of the decay.
fn fit_heat_tail(s: &mut TorusSolver<'_>, lam: f64) -> Result<Option<RateFit>> {
    let act = s.stencil.active_axes();
    if act.is_empty() {
        return Ok(None);
    }
    let mean0 = s.values.mean();
    let dev0 = sup_deviation(&s.values, mean0);
    if dev0 < 1e-9 {
        return Ok(None);
    }
    let t0 = s.t;
    let slowest = act.iter().map(|&a| 4.0 * PI * PI * s.stencil.coef[a]).fold(f64::INFINITY, f64::min);
    let horizon = t0 + 25.0 / slowest;
    let every = ((0.02 / slowest) / s.dt).ceil().max(1.0) as usize;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut k = 0usize;
    while s.t < horizon {
        s.step()?;
        k += 1;
        if k % every == 0 {
            let dev = sup_deviation(&s.values, mean0);
            if dev < 1e-11 {
                break;
            }
            if dev < 1e-2 * dev0 {
                pts.push((s.t, dev.ln()));
            }
        }
    }
    let mean_drift_rate = (s.values.mean() - mean0).abs() / ((s.t - t0) * lam * lam).max(1e-300);
    if pts.len() < 4 {
        return Ok(None);
    }
    let tail = &pts[pts.len() / 2..];
    let (slope, icpt) = least_squares(tail);
    // physical time is λ² times rescaled time
    let mu1 = -slope / (lam * lam);
    Ok(Some(RateFit { c1: icpt.exp(), mu1, mean_drift_rate }))
}

/// Slope and intercept of the least-squares line through `pts`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{AxisFactor, ProfileSpec};

    fn f04() -> Nonlinearity {
        Nonlinearity::power(1.0, 1.0, 0.4, 0.1).unwrap()
    }

    fn stripe() -> PeriodicProfile {
        PeriodicProfile::new(ProfileSpec::stripe(2, 0.4)).unwrap()
    }

    #[test]
    fn second_eigenvalue_examples() {
        let p = PeriodVector::from_components(&[1.0, 1.0]).unwrap();
        assert!((second_eigenvalue(&p) - 4.0 * PI * PI).abs() < 1e-9);
        let q = PeriodVector::from_components(&[2.0, 1.0]).unwrap();
        assert!((second_eigenvalue(&q) - PI * PI).abs() < 1e-9);
    }

    #[test]
    fn constant_below_threshold_is_classified_at_once() {
        let f = f04();
        let p = PeriodicProfile::new(ProfileSpec::Constant { dim: 1, value: 0.25 }).unwrap();
        let per = PeriodVector::new(vec![1.0], 3.0).unwrap();
        let c = classify_limit(&f, &p, &per, &ClassifySettings::default()).unwrap();
        assert_eq!(c.outcome, LimitOutcome::ConvergedToConstant { value: 0.25 });
        assert!(matches!(c.certificate, Certificate::MaxBelowTheta { t, .. } if t == 0.0));
    }

    #[test]
    fn stripe_extremes_of_lambda() {
        let f = f04();
        let p = stripe();
        let xi = vec![0.5f64.sqrt(), 0.5f64.sqrt()];
        let small = classify_limit(&f, &p, &PeriodVector::new(xi.clone(), 0.05).unwrap(), &ClassifySettings::default()).unwrap();
        match small.outcome {
            LimitOutcome::ConvergedToConstant { value } => assert!((value - 11.0 / 30.0).abs() < 0.02),
            o => panic!("{o:?}"),
        }
        let big = classify_limit(&f, &p, &PeriodVector::new(xi, 50.0).unwrap(), &ClassifySettings::default()).unwrap();
        assert_eq!(big.outcome, LimitOutcome::ConvergedToOne);
    }

    #[test]
    fn lyapunov_of_constant_states() {
        let f = f04();
        let p = PeriodicProfile::new(ProfileSpec::Constant { dim: 1, value: 0.4 }).unwrap();
        let per = PeriodVector::new(vec![1.0], 2.0).unwrap();
        let st = rescaled_stencil(&p, &per, 128, 4.0).unwrap();
        let one = Field::filled(st.shape, 1.0);
        let th = Field::filled(st.shape, 0.4);
        let g1 = lyapunov(&f, &st, &one);
        assert!((g1 + 4.0 * f.primitive(1.0).unwrap()).abs() < 1e-12);
        assert!(g1 < lyapunov(&f, &st, &th));
    }

    #[test]
    fn heat_flow_decays_a_single_mode() {
        let f = f04();
        let p = PeriodicProfile::new(ProfileSpec::SineProduct {
            dim: 1,
            mean: 0.2,
            amplitude: 0.1,
            factors: vec![AxisFactor::Sin { k: 1 }],
        })
        .unwrap();
        let per = PeriodVector::new(vec![1.0], 1.0).unwrap();
        let t_end = 0.02;
        let tr = heat_evolve(&f, &p, &per, 128, t_end, &[0.0, t_end], 50).unwrap();
        let a0 = tr.snapshots[0].values.max() - 0.2;
        let last = &tr.snapshots[1];
        let a1 = last.values.max() - 0.2;
        let expected = (-4.0 * PI * PI * last.t).exp();
        assert!((a1 / a0 - expected).abs() / expected < 1e-4, "{} vs {}", a1 / a0, expected);
        for s in &tr.samples {
            assert!((s.mean - 0.2).abs() < 1e-12);
        }
    }
}
