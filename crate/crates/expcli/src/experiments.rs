//! One function per experiment kind. Each writes its tables through
//! [`Outputs`] and records the tolerances it relied on.

use std::collections::BTreeMap;

use ignition_core::cache::ClassificationCache;
use ignition_core::cauchy::domain::TruncatedDomain;
use ignition_core::cauchy::evolve::{cells, evolve_cauchy, Snapshot};
use ignition_core::cauchy::shift::{front_shift, profile_convergence_error};
use ignition_core::cauchy::snapshot::SnapshotManifest;
use ignition_core::cauchy::spread::{check_local_persistence, estimate_spreading_speed, SpreadOutcome, PERSISTENCE_SLACK};
use ignition_core::cauchy::supersolution::{
    claim31_residual, claim41_lower_residual, claim41_upper_residual, exact_front_residual, sandwich_check,
    wbar_residual, Claim31, Claim41, Construction, WbarParams,
};
use ignition_core::field::INSTABILITY_MARGIN;
use ignition_core::front_solver::{
    minimal_monostable_speed, monostable_front, smallest_root, solve_front, FrontProfile, MONOSTABLE_RTOL, SPEED_RTOL,
};
use ignition_core::periodic_solver::{
    evolve_periodic, physical_stencil, rescaled_stencil, Certificate, LimitClassification, LimitOutcome, TorusSolver,
};
use ignition_core::threshold::{classify_cached, critical_magnitude, homogenization_check, CriticalMagnitude};
use ignition_core::profiles::DataKind;
use ignition_core::{InitialData, Nonlinearity, PeriodVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DataConfig, ExperimentConfig, ExperimentKind, SweepKind};
use crate::error::{in_module, CliError};
use crate::output::{fmt_f64, fmt_opt, Outputs, Table};

/// A sweep cell that failed, with the error that stopped it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub cell: String,
    pub error: String,
}

/// Shared state of one run.
pub struct Context<'a> {
    pub out: Outputs,
    pub pool: rayon::ThreadPool,
    pub cache: &'a dyn ClassificationCache,
    pub tolerances: BTreeMap<String, f64>,
    pub failures: Vec<Failure>,
    /// Cells attempted by a sweep.
    pub cells: usize,
}

impl Context<'_> {
    fn tol(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.to_string(), value);
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &mut Context) -> Result<(), CliError> {
    let f = cfg.reaction.build()?;
    ctx.tol("instability_margin", INSTABILITY_MARGIN);
    match cfg.experiment {
        ExperimentKind::Front => front(cfg, &f, ctx),
        ExperimentKind::Periodic => periodic(cfg, &f, ctx),
        ExperimentKind::Thetamap => thetamap(cfg, &f, ctx),
        ExperimentKind::Threshold => threshold(cfg, &f, ctx),
        ExperimentKind::Homog => homog(cfg, &f, ctx),
        ExperimentKind::Spread => spread(cfg, &f, ctx),
        ExperimentKind::Profilecv => profilecv(cfg, &f, ctx),
        ExperimentKind::Residual => residual(cfg, &f, ctx),
        ExperimentKind::Sweep => sweep(cfg, &f, ctx),
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

fn outcome_name(o: &LimitOutcome) -> &'static str {
    match o {
        LimitOutcome::ConvergedToOne => "converged-to-one",
        LimitOutcome::ConvergedToConstant { .. } => "converged-to-constant",
        LimitOutcome::UndeterminedBand => "undetermined-band",
    }
}

fn certificate_time(c: &Certificate) -> f64 {
    match *c {
        Certificate::MinExceededHalfThetaOne { t, .. } | Certificate::MaxBelowTheta { t, .. } => t,
        Certificate::Timeout { t_max, .. } => t_max,
    }
}

fn classification_row(c: &LimitClassification) -> Vec<String> {
    vec![
        outcome_name(&c.outcome).into(),
        fmt_opt(c.value()),
        fmt_f64(certificate_time(&c.certificate)),
        fmt_f64(c.lyapunov_max_increase),
    ]
}

const CLASSIFICATION_COLUMNS: [&str; 4] = ["outcome", "value", "certificate_t", "lyapunov_max_increase"];

fn xi_columns(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("xi_{i}")).collect()
}

fn unit_direction(xi: &[f64]) -> Result<Vec<f64>, CliError> {
    Ok(PeriodVector::normalized(xi, 1.0).map_err(CliError::from_core)?.xi().to_vec())
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

#[derive(Serialize)]
struct MonostableSummary {
    theta: f64,
    f_prime_theta_plus: f64,
    linear_floor: f64,
    c_star_theta: f64,
    /// `c*(θ) − 2√f'(θ⁺)`; zero for a pulled front. Not classified.
    floor_gap: f64,
    lambda_star: f64,
}

fn front(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let fc = cfg.front()?;
    ctx.tol("front.speed_rtol", SPEED_RTOL);
    ctx.tol("front.monostable_rtol", MONOSTABLE_RTOL);
    let alphas = sorted(&fc.alphas);
    let sols = ctx.pool.install(|| alphas.par_iter().map(|&a| solve_front(f, a)).collect::<Vec<_>>());
    let fp = f.f_prime_theta_plus();
    let mut t = Table::new(&["alpha", "c_star", "lambda_minus", "profile_residual"]);
    for (k, s) in sols.into_iter().enumerate() {
        let s = s.map_err(in_module("front_solver"))?;
        t.push(vec![
            fmt_f64(s.alpha),
            fmt_f64(s.speed),
            fmt_opt(smallest_root(s.speed, fp).ok()),
            fmt_f64(s.profile.residual(f)),
        ]);
        if fc.profiles {
            ctx.out.table(&format!("profiles/alpha_{k:03}.csv"), &profile_table(&s.profile, fc.stride))?;
        }
    }
    ctx.out.table("front.csv", &t)?;
    let c_star = minimal_monostable_speed(f).map_err(in_module("front_solver"))?;
    let summary = MonostableSummary {
        theta: f.theta(),
        f_prime_theta_plus: fp,
        linear_floor: f.linear_speed_floor(),
        c_star_theta: c_star,
        floor_gap: c_star - f.linear_speed_floor(),
        lambda_star: smallest_root(c_star, fp).map_err(in_module("front_solver"))?,
    };
    ctx.out.json("monostable.json", &summary)
}

fn profile_table(p: &FrontProfile, stride: usize) -> Table {
    let mut t = Table::new(&["z", "u", "du"]);
    for i in (0..p.len()).step_by(stride.max(1)) {
        t.push(vec![fmt_f64(p.z_at(i)), fmt_f64(p.u[i]), fmt_f64(p.du[i])]);
    }
    t
}

fn periodic(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let pc = cfg.periodic()?;
    let v0 = cfg.profile()?;
    let period = cfg.period()?;
    let n = cfg.grid.n;
    let lam = period.lambda();
    let cap = rescaled_stencil(&v0, &period, n, lam * lam).map_err(CliError::from_core)?.stable_dt(f);
    let dt = cfg.grid.dt.unwrap_or(cap);
    let every = if pc.sample_every == 0 { ((pc.t_end / dt) / 500.0).ceil().max(1.0) as usize } else { pc.sample_every };
    let traj = evolve_periodic(f, &v0, &period, n, cfg.grid.dt, pc.t_end, &pc.snapshot_times, every)
        .map_err(in_module("periodic_solver"))?;
    let mut t = Table::new(&["t", "min", "max", "mean", "lyapunov"]);
    for s in &traj.samples {
        t.push(vec![fmt_f64(s.t), fmt_f64(s.min), fmt_f64(s.max), fmt_f64(s.mean), fmt_f64(s.lyapunov)]);
    }
    ctx.out.table("trajectory.csv", &t)?;
    if !traj.snapshots.is_empty() {
        let mut t = Table::new(&["t", "i", "j", "k", "value"]);
        for s in &traj.snapshots {
            for (idx, c) in cells(s.values.shape).enumerate() {
                t.push(vec![
                    fmt_f64(s.t),
                    c[0].to_string(),
                    c[1].to_string(),
                    c[2].to_string(),
                    fmt_f64(s.values.data[idx]),
                ]);
            }
        }
        ctx.out.table("snapshots.csv", &t)?;
    }
    if pc.classify {
        let (c, _) = classify_cached(f, &v0, &period, &cfg.grid.classify(), Some(ctx.cache))
            .map_err(in_module("periodic_solver"))?;
        ctx.out.json("classification.json", &c)?;
    }
    ctx.out.json("run.json", &serde_json::json!({ "dt": traj.dt, "clamp_max": traj.clamp_max, "sample_every": every }))
}

fn thetamap(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let v0 = cfg.profile()?;
    let xi = cfg.period.as_ref().ok_or_else(|| CliError::config("missing section [period]"))?.direction()?;
    let lambdas = sorted(&cfg.thetamap()?.lambdas);
    let settings = cfg.grid.classify();
    let cache = ctx.cache;
    let results = ctx.pool.install(|| {
        lambdas
            .par_iter()
            .map(|&l| {
                let p = PeriodVector::new(xi.clone(), l)?;
                classify_cached(f, &v0, &p, &settings, Some(cache))
            })
            .collect::<Vec<_>>()
    });
    let mut header = vec!["lambda".to_string()];
    header.extend(CLASSIFICATION_COLUMNS.iter().map(|s| s.to_string()));
    let mut t = Table::new(&header);
    for (l, r) in lambdas.iter().zip(results) {
        let (c, _) = r.map_err(in_module("periodic_solver"))?;
        let mut row = vec![fmt_f64(*l)];
        row.extend(classification_row(&c));
        t.push(row);
    }
    ctx.out.table("theta_map.csv", &t)
}

fn magnitude_cells(m: &CriticalMagnitude) -> [String; 3] {
    let kind = match m {
        CriticalMagnitude::Zero => "zero",
        CriticalMagnitude::Infinite => "infinite",
        CriticalMagnitude::Band { .. } => "band",
    };
    let (lo, hi) = m.bounds();
    [fmt_f64(lo), fmt_f64(hi), kind.into()]
}

fn threshold(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let tc = cfg.threshold()?;
    let v0 = cfg.profile()?;
    let raw = if tc.xis.is_empty() {
        vec![cfg.period.as_ref().ok_or_else(|| CliError::config("missing section [period]"))?.direction()?]
    } else {
        tc.xis.clone()
    };
    let mut xis = raw.iter().map(|x| unit_direction(x)).collect::<Result<Vec<_>, _>>()?;
    xis.sort_by(|a, b| lex(a, b));
    xis.dedup();
    let settings = tc.settings(&cfg.grid);
    ctx.tol("threshold.rel_tol", settings.rel_tol);
    let cache = ctx.cache;
    let records = ctx.pool.install(|| {
        xis.par_iter().map(|xi| critical_magnitude(f, &v0, xi, &settings, Some(cache))).collect::<Vec<_>>()
    });
    let dim = v0.dim();
    let mut header = xi_columns(dim);
    header.extend(["l_star_lo", "l_star_hi", "kind", "converged_one", "converged_constant", "undetermined"].map(String::from));
    let mut t = Table::new(&header);
    let mut header = vec!["xi_index".to_string(), "lambda".to_string()];
    header.extend(CLASSIFICATION_COLUMNS.iter().map(|s| s.to_string()));
    let mut ev = Table::new(&header);
    for (k, r) in records.into_iter().enumerate() {
        let r = r.map_err(in_module("threshold_mapper"))?;
        let mut row: Vec<String> = r.xi.iter().map(|x| fmt_f64(*x)).collect();
        row.extend(magnitude_cells(&r.l_star));
        row.push(r.count(|o| *o == LimitOutcome::ConvergedToOne).to_string());
        row.push(r.count(|o| matches!(o, LimitOutcome::ConvergedToConstant { .. })).to_string());
        row.push(r.undetermined.len().to_string());
        t.push(row);
        let mut evals: Vec<_> = r.provenance.iter().collect();
        evals.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        for e in evals {
            let mut row = vec![k.to_string(), fmt_f64(e.lambda)];
            row.extend(classification_row(&e.classification));
            ev.push(row);
        }
    }
    ctx.out.table("threshold.csv", &t)?;
    ctx.out.table("evaluations.csv", &ev)
}

fn homog(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let hc = cfg.homog()?;
    let v0 = cfg.profile()?;
    let settings = ignition_core::threshold::ThresholdSettings {
        classify: cfg.grid.classify(),
        rel_tol: hc.rel_tol,
        lambda_start: 1.0,
    };
    ctx.tol("homog.rel_tol", hc.rel_tol);
    let approach = hc.approach.iter().map(|x| unit_direction(x)).collect::<Result<Vec<_>, _>>()?;
    let rep = homogenization_check(f, &v0, hc.axis, &hc.xi_tilde, &approach, &settings, Some(ctx.cache))
        .map_err(in_module("threshold_mapper"))?;
    let mut header = xi_columns(v0.dim());
    header.extend(["l_star_lo", "l_star_hi", "kind", "gap"].map(String::from));
    let mut t = Table::new(&header);
    for (r, gap) in rep.sequence.iter().zip(&rep.gaps) {
        let mut row: Vec<String> = r.xi.iter().map(|x| fmt_f64(*x)).collect();
        row.extend(magnitude_cells(&r.l_star));
        row.push(fmt_f64(*gap));
        t.push(row);
    }
    ctx.out.table("homog.csv", &t)?;
    let (lo, hi) = rep.limit.l_star.bounds();
    ctx.out.json(
        "homog.json",
        &serde_json::json!({
            "axis": hc.axis,
            "xi_tilde": rep.limit.xi,
            "limit_lo": lo,
            "limit_hi": hi,
            "monotone_increasing": rep.monotone_increasing,
        }),
    )
}

/// A finished whole-space run.
struct CauchyOutput {
    domain: TruncatedDomain,
    snaps: Vec<Snapshot>,
    /// Snapshots dropped by the near-threshold window.
    dropped: usize,
    c_star: f64,
    dt: f64,
    clamp_max: f64,
}

fn cauchy(cfg: &ExperimentConfig, f: &Nonlinearity) -> Result<CauchyOutput, CliError> {
    let cc = cfg.cauchy()?;
    let profile = cfg.profile()?;
    let period = cfg.period()?;
    let data = match &cc.data {
        DataConfig::Bump { height, radius } => InitialData::new(
            profile,
            period.clone(),
            DataKind::AsymptoticallyPeriodic { bump_height: *height, bump_radius: *radius },
            cc.amplitude,
            cc.lambda0,
        ),
        DataConfig::FrontLike { e, left_level, offset } => {
            InitialData::front_like(profile, period.clone(), Some(e), *left_level, *offset, cc.amplitude, cc.lambda0)
        }
    }
    .map_err(CliError::from_core)?;
    let c_star = minimal_monostable_speed(f).map_err(in_module("front_solver"))?;
    let hw = cc.half_width.unwrap_or_else(|| TruncatedDomain::required_half_width(c_star, cc.t_end, &period.components()));
    let domain = TruncatedDomain::build(&data, cfg.grid.m, cfg.grid.h_free, hw, cc.behind).map_err(CliError::from_core)?;
    let count = (cc.t_end / cc.snapshot_every + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=count).map(|k| k as f64 * cc.snapshot_every).collect();
    let rec = evolve_cauchy(f, &data, domain, cfg.grid.dt, cc.t_end, &times).map_err(in_module("cauchy_sim"))?;
    let mut snaps = rec.snapshots;
    let mut dropped = 0;
    if let Some(w) = cc.near_threshold_window {
        let theta = f.theta();
        let keep = snaps.iter().position(|s| s.v.min() > theta + w || s.v.max() < theta - w).unwrap_or(snaps.len());
        dropped = snaps.len() - keep;
        snaps.truncate(keep);
    }
    Ok(CauchyOutput { domain: rec.domain, snaps, dropped, c_star, dt: rec.dt, clamp_max: rec.clamp_max })
}

/// Invaded level `α` from the companion periodic solution and the matching
/// front speed (`c*(θ)` once the companion reaches `θ`).
fn reference_front(f: &Nonlinearity, run: &CauchyOutput) -> Result<(f64, f64), CliError> {
    let alpha = run.snaps.last().map(|s| s.v.mean()).unwrap_or(0.0);
    if alpha < f.theta() {
        let s = solve_front(f, alpha.max(0.0)).map_err(in_module("front_solver"))?;
        Ok((alpha, s.speed))
    } else {
        Ok((alpha, run.c_star))
    }
}

fn write_snapshots(ctx: &mut Context, run: &CauchyOutput) -> Result<(), CliError> {
    let dir = ctx.out.root().join("snapshots");
    let m = SnapshotManifest::write_all(&dir, &run.domain, &run.snaps).map_err(in_module("cauchy_sim"))?;
    for e in &m.entries {
        ctx.out.record(&format!("snapshots/{}", e.file), e.sha256.clone());
    }
    let json = std::fs::read(dir.join("snapshots.json"))?;
    ctx.out.record("snapshots/snapshots.json", crate::output::sha256_hex(&json));
    Ok(())
}

fn spread(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let cc = cfg.cauchy()?;
    let run = cauchy(cfg, f)?;
    let level = cc.level.unwrap_or(0.5 * (1.0 + f.theta()));
    ctx.tol("spread.level", level);
    ctx.tol("spread.fit_fraction", cc.fit_fraction);
    let outcome =
        estimate_spreading_speed(&run.domain, &run.snaps, level, cc.fit_fraction).map_err(in_module("cauchy_sim"))?;
    if let SpreadOutcome::Speed(est) = &outcome {
        let mut t = Table::new(&["t", "radius"]);
        for (s, r) in &est.series {
            t.push(vec![fmt_f64(*s), fmt_f64(*r)]);
        }
        ctx.out.table("spread.csv", &t)?;
    }
    let persistence = match cc.persistence_radius {
        Some(r) => {
            ctx.tol("spread.persistence_slack", PERSISTENCE_SLACK);
            Some(check_local_persistence(&run.domain, &run.snaps, r))
        }
        None => None,
    };
    let (alpha, reference) = reference_front(f, &run)?;
    if cc.write_snapshots {
        write_snapshots(ctx, &run)?;
    }
    ctx.out.json(
        "spread.json",
        &serde_json::json!({
            "outcome": outcome,
            "companion_mean": alpha,
            "reference_speed": reference,
            "c_star_theta": run.c_star,
            "persistence": persistence,
            "snapshots_kept": run.snaps.len(),
            "snapshots_dropped": run.dropped,
            "dt": run.dt,
            "clamp_max": run.clamp_max,
        }),
    )
}

fn profilecv(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let cc = cfg.cauchy()?;
    let level = 0.5 * (1.0 + f.theta());
    if cc.level.is_some_and(|l| (l - level).abs() > 1e-12) {
        return Err(CliError::config("profilecv tracks the (1 + theta)/2 level; drop cauchy.level"));
    }
    let run = cauchy(cfg, f)?;
    let (alpha, speed) = reference_front(f, &run)?;
    let front = if alpha < f.theta() {
        solve_front(f, alpha.max(0.0)).map_err(in_module("front_solver"))?.profile
    } else {
        monostable_front(f, speed).map_err(in_module("front_solver"))?
    };
    let shift = front_shift(&run.domain, &run.snaps, speed, level).map_err(in_module("cauchy_sim"))?;
    let err = profile_convergence_error(&run.domain, &run.snaps, &front, &shift).map_err(in_module("cauchy_sim"))?;
    let mut t = Table::new(&["t", "error", "m_min", "m_max", "transverse_spread"]);
    for (k, (s, e)) in err.iter().enumerate() {
        let ms: Vec<f64> = shift.m[k].iter().flatten().copied().collect();
        t.push(vec![
            fmt_f64(*s),
            fmt_f64(*e),
            fmt_f64(ms.iter().cloned().fold(f64::INFINITY, f64::min)),
            fmt_f64(ms.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            fmt_opt(shift.transverse_spread(k)),
        ]);
    }
    ctx.out.table("profilecv.csv", &t)?;
    let mut sandwich = None;
    if let Some(sc) = &cfg.sandwich {
        ctx.tol("sandwich.tolerance", sc.tolerance);
        let claim = Claim41::new(f, alpha, cc.lambda0, None, None).map_err(in_module("cauchy_sim"))?;
        let idx = run
            .snaps
            .iter()
            .position(|s| s.t >= sc.tau - 1e-9)
            .ok_or_else(|| CliError::config(format!("sandwich.tau = {} is after the last snapshot", sc.tau)))?;
        let rep = sandwich_check(&run.domain, &run.snaps, &claim, idx, sc.amplitude, sc.tolerance)
            .map_err(in_module("cauchy_sim"))?;
        let mut t = Table::new(&["t", "over", "under"]);
        for (s, o, u) in &rep.gaps {
            t.push(vec![fmt_f64(*s), fmt_f64(*o), fmt_f64(*u)]);
        }
        ctx.out.table("sandwich.csv", &t)?;
        sandwich = Some(serde_json::json!({
            "tau": rep.tau,
            "amplitude": rep.amplitude,
            "x_plus": rep.x_plus,
            "x_minus": rep.x_minus,
            "gluing_ordered": rep.gluing_ordered,
            "holds": rep.holds,
        }));
    }
    if cc.write_snapshots {
        write_snapshots(ctx, &run)?;
    }
    ctx.out.json(
        "profilecv.json",
        &serde_json::json!({
            "alpha": alpha,
            "speed": speed,
            "level": level,
            "final_error": err.last().map(|p| p.1),
            "sandwich": sandwich,
            "snapshots_kept": run.snaps.len(),
            "snapshots_dropped": run.dropped,
            "dt": run.dt,
            "clamp_max": run.clamp_max,
        }),
    )
}

fn residual(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let rc = cfg.residual()?;
    ctx.tol("residual.tolerance", rc.tolerance);
    let m = "cauchy_sim";
    let c_star = minimal_monostable_speed(f).map_err(in_module("front_solver"))?;
    let mut t = Table::new(&["which", "extreme", "at_t", "at_s", "points", "excluded", "tolerance", "passed"]);
    let mut reports = Vec::new();
    let mut which = rc.which.clone();
    which.sort_by_key(|w| serde_json::to_string(w).unwrap_or_default());
    which.dedup();
    for w in which {
        let rep = match w {
            Construction::ExactFront => {
                let front = solve_front(f, rc.alpha.unwrap_or(0.0)).map_err(in_module("front_solver"))?;
                exact_front_residual(f, &front.profile, &rc.grid, rc.tolerance)
            }
            Construction::Claim31Ubar => {
                let claim = Claim31::new(f, rc.c_factor * c_star, rc.eta).map_err(in_module(m))?;
                claim31_residual(f, &claim, &rc.grid, rc.tolerance)
            }
            Construction::Claim41UbarAlpha | Construction::Claim41UlowerAlpha => {
                let (a, l0) = (rc.alpha.unwrap_or_default(), rc.lambda0.unwrap_or_default());
                let claim = Claim41::new(f, a, l0, rc.mu1, rc.eta).map_err(in_module(m))?;
                if w == Construction::Claim41UbarAlpha {
                    claim41_upper_residual(f, &claim, &rc.grid, rc.tolerance)
                } else {
                    claim41_lower_residual(f, &claim, &rc.grid, rc.tolerance)
                }
            }
            Construction::Claim31Wbar => {
                let wc = rc.wbar.as_ref().ok_or_else(|| CliError::config("missing section [residual.wbar]"))?;
                let v0 = cfg.profile()?;
                let period = cfg.period()?;
                let stencil = physical_stencil(&v0, &period, cfg.grid.n).map_err(CliError::from_core)?;
                let mut solver = TorusSolver::new(f, stencil.clone(), v0.torus_field(cfg.grid.n), cfg.grid.dt)
                    .map_err(CliError::from_core)?;
                let dt = solver.dt;
                while solver.t + 0.5 * dt < wc.tau {
                    solver.step().map_err(in_module("periodic_solver"))?;
                }
                let mut vs = vec![solver.values.clone()];
                for _ in 0..wc.steps.max(1) {
                    solver.step().map_err(in_module("periodic_solver"))?;
                    vs.push(solver.values.clone());
                }
                let p = WbarParams {
                    c: wc.c_factor * c_star,
                    lambda0: wc.lambda0,
                    amplitude: wc.amplitude,
                    shift: wc.shift,
                    tau: wc.tau,
                    axis: wc.axis,
                };
                let r = wbar_residual(f, &stencil, &vs, 0.0, dt, &p, wc.periods, rc.tolerance)
                    .map_err(in_module(m))?;
                t.push(vec![
                    "claim31_wbar".into(),
                    fmt_f64(r.margin),
                    String::new(),
                    String::new(),
                    r.points.to_string(),
                    r.excluded.to_string(),
                    fmt_f64(rc.tolerance),
                    r.passed.to_string(),
                ]);
                reports.push(serde_json::to_value(&r).expect("serialisable"));
                continue;
            }
        };
        t.push(vec![
            serde_json::to_value(rep.which).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            fmt_f64(rep.extreme),
            fmt_f64(rep.at.0),
            fmt_f64(rep.at.1),
            rep.points.to_string(),
            rep.excluded.to_string(),
            fmt_f64(rep.tolerance),
            rep.passed.to_string(),
        ]);
        reports.push(serde_json::to_value(&rep).expect("serialisable"));
    }
    ctx.out.table("residual.csv", &t)?;
    ctx.out.json("residual.json", &reports)
}

/// One cell of a sweep and its result row.
type CellResult = Result<Vec<String>, String>;

fn sweep(cfg: &ExperimentConfig, f: &Nonlinearity, ctx: &mut Context) -> Result<(), CliError> {
    let sc = cfg.sweep()?;
    let (header, keys, results): (Vec<String>, Vec<String>, Vec<CellResult>) = match sc.kind {
        SweepKind::Alpha => {
            ctx.tol("front.speed_rtol", SPEED_RTOL);
            let alphas = sorted(&sc.alphas);
            let fp = f.f_prime_theta_plus();
            let res = ctx.pool.install(|| {
                alphas
                    .par_iter()
                    .map(|&a| {
                        solve_front(f, a)
                            .map(|s| vec![fmt_f64(a), fmt_f64(s.speed), fmt_opt(smallest_root(s.speed, fp).ok())])
                            .map_err(|e| format!("front_solver: {e}"))
                    })
                    .collect()
            });
            let keys = alphas.iter().map(|a| format!("alpha={}", fmt_f64(*a))).collect();
            (["alpha", "c_star", "lambda_minus"].map(String::from).to_vec(), keys, res)
        }
        SweepKind::Lambda | SweepKind::XiLambda => {
            let v0 = cfg.profile()?;
            let mut xis = if sc.kind == SweepKind::Lambda {
                vec![cfg.period.as_ref().ok_or_else(|| CliError::config("missing section [period]"))?.direction()?]
            } else {
                sc.xis.iter().map(|x| unit_direction(x)).collect::<Result<Vec<_>, _>>()?
            };
            xis.sort_by(|a, b| lex(a, b));
            xis.dedup();
            let lambdas = sorted(&sc.lambdas);
            let cells: Vec<(Vec<f64>, f64)> =
                xis.iter().flat_map(|x| lambdas.iter().map(move |&l| (x.clone(), l))).collect();
            let settings = cfg.grid.classify();
            let cache = ctx.cache;
            let res = ctx.pool.install(|| {
                cells
                    .par_iter()
                    .map(|(xi, l)| {
                        let p = PeriodVector::new(xi.clone(), *l).map_err(|e| format!("profiles: {e}"))?;
                        let (c, _) = classify_cached(f, &v0, &p, &settings, Some(cache))
                            .map_err(|e| format!("periodic_solver: {e}"))?;
                        let mut row: Vec<String> = xi.iter().map(|x| fmt_f64(*x)).collect();
                        row.push(fmt_f64(*l));
                        row.extend(classification_row(&c));
                        Ok(row)
                    })
                    .collect()
            });
            let keys = cells
                .iter()
                .map(|(xi, l)| {
                    let xs: Vec<String> = xi.iter().map(|x| fmt_f64(*x)).collect();
                    format!("xi=({}) lambda={}", xs.join(" "), fmt_f64(*l))
                })
                .collect();
            let mut header = xi_columns(v0.dim());
            header.push("lambda".into());
            header.extend(CLASSIFICATION_COLUMNS.iter().map(|s| s.to_string()));
            (header, keys, res)
        }
    };
    ctx.cells = results.len();
    let mut t = Table::new(&header);
    for (key, r) in keys.into_iter().zip(results) {
        match r {
            Ok(row) => t.push(row),
            Err(error) => ctx.failures.push(Failure { cell: key, error }),
        }
    }
    ctx.out.table("sweep.csv", &t)?;
    if !ctx.failures.is_empty() {
        let mut ft = Table::new(&["cell", "error"]);
        for fl in &ctx.failures {
            ft.push(vec![fl.cell.clone(), fl.error.clone()]);
        }
        ctx.out.table("failures.csv", &ft)?;
    }
    Ok(())
}
