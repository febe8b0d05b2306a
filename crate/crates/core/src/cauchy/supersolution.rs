//! Closed-form sub- and supersolutions built from planar fronts, their
//! parabolic residuals, and the comparison sandwich on simulated runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AxisBoundary, Field, Stencil};
use crate::front_solver::{minimal_monostable_speed, monostable_front, solve_front, FrontProfile};
use crate::nonlinearity::Nonlinearity;

use super::domain::TruncatedDomain;
use super::evolve::{cells, Snapshot};

/// Default tolerance on residual signs.
pub const EPS_NUM: f64 = 1e-4;
/// Default finite-difference step of the residual evaluation.
pub const FD_STEP: f64 = 1e-3;
const SCAN_POINTS: usize = 4000;

/// Largest difference quotient of `f` between consecutive samples of `[a, b]`.
fn max_slope(f: &Nonlinearity, a: f64, b: f64) -> f64 {
    let n = SCAN_POINTS;
    let h = (b - a) / n as f64;
    (0..n).map(|i| (f.eval(a + (i + 1) as f64 * h) - f.eval(a + i as f64 * h)) / h).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest `η` on a uniform grid of `(0, cap)` accepted by `ok`.
fn largest_admissible(cap: f64, ok: impl Fn(f64) -> bool) -> Option<f64> {
    let steps = 400;
    (1..steps).rev().map(|k| cap * k as f64 / steps as f64).find(|&e| ok(e))
}

fn min_descent(front: &FrontProfile, z2: f64, z1: f64) -> f64 {
    let n = ((z1 - z2) / front.dz).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| -front.eval_with_slope(z2 + (z1 - z2) * i as f64 / n as f64).1)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Claim31Ubar,
    Claim31Wbar,
    Claim41UbarAlpha,
    Claim41UlowerAlpha,
    ExactFront,
}

/// Constants shared by the front-based constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontConstants {
    pub nu: f64,
    pub eta0: f64,
    pub eta: f64,
    pub z1: f64,
    pub z2: f64,
    pub kappa: f64,
    pub big_k: f64,
    /// `ζ(t) = zeta_amp (1 − e^{−νt})`.
    pub zeta_amp: f64,
}

impl FrontConstants {
    pub fn zeta(&self, t: f64) -> f64 {
        self.zeta_amp * (1.0 - (-self.nu * t).exp())
    }

    pub fn zeta_inf(&self) -> f64 {
        self.zeta_amp
    }
}

/// Supersolution `min{1, U_c(z − ct − ηζ(t)) + η e^{−c*(z − ct)/2 − νt}}`
/// around a monostable front of speed `c > c*(θ)`.
#[derive(Clone, Debug)]
pub struct Claim31 {
    pub c: f64,
    pub c_star: f64,
    pub consts: FrontConstants,
    pub front: FrontProfile,
}

impl Claim31 {
    /// `eta = None` selects `η₀ / 2`.
    pub fn new(f: &Nonlinearity, c: f64, eta: Option<f64>) -> Result<Self> {
        let c_star = minimal_monostable_speed(f)?;
        if !(c > c_star) {
            return Err(Error::param("c", format!("{c} must exceed c*(θ) = {c_star}")));
        }
        let theta = f.theta();
        let fp = f.f_prime_theta_plus();
        let nu = -(c_star * c_star - 2.0 * c * c_star + 4.0 * fp) / 8.0;
        if !(nu > 0.0) {
            return Err(Error::Precondition(format!("ν = {nu} is not positive")));
        }
        let cap = 0.5 * (1.0 - theta);
        let eta0 = largest_admissible(cap, |e| {
            // slope condition right of θ, monotonicity left of 1
            max_slope(f, theta, theta + 2.0 * e) <= fp + nu && max_slope(f, 1.0 - e, 1.0) <= 0.0
        })
        .ok_or_else(|| Error::Precondition("no admissible η₀ near θ and 1".into()))?;
        let eta = eta.unwrap_or(0.5 * eta0);
        if !(eta > 0.0 && eta <= eta0) {
            return Err(Error::param("eta", format!("{eta} must lie in (0, η₀ = {eta0}]")));
        }
        let front = monostable_front(f, c)?;
        let z1 = front.position_of(theta + eta0).ok_or_else(|| Error::Precondition("θ + η₀ not crossed".into()))?;
        let z2 = front.position_of(1.0 - eta0).ok_or_else(|| Error::Precondition("1 − η₀ not crossed".into()))?;
        let kappa = min_descent(&front, z2, z1);
        let base = 4.0 * nu + c_star * c_star - 2.0 * c * c_star;
        let big_k = (1.01 * f.lipschitz()).max(-base / 4.0 + 1.0);
        let zeta_amp = (base + 4.0 * big_k) / (4.0 * kappa * nu) * (-c_star * z2 / 2.0).exp();
        Ok(Claim31 { c, c_star, consts: FrontConstants { nu, eta0, eta, z1, z2, kappa, big_k, zeta_amp }, front })
    }

    /// Value and whether the cap at one is active.
    pub fn value(&self, t: f64, z: f64) -> (f64, bool) {
        let k = &self.consts;
        let s = z - self.c * t;
        let v = self.front.eval(s - k.eta * k.zeta(t)) + k.eta * (-self.c_star * s / 2.0 - k.nu * t).exp();
        if v >= 1.0 {
            (1.0, true)
        } else {
            (v, false)
        }
    }
}

/// The pair `Ū_α`, `U̲_α` around the ignition front `U_α`.
#[derive(Clone, Debug)]
pub struct Claim41 {
    pub alpha: f64,
    pub c: f64,
    pub lambda0: f64,
    pub consts: FrontConstants,
    pub front: FrontProfile,
}

impl Claim41 {
    /// `mu1`, when given, additionally caps `ν` below `μ₁/2`. `eta = None`
    /// selects `η₀`.
    pub fn new(f: &Nonlinearity, alpha: f64, lambda0: f64, mu1: Option<f64>, eta: Option<f64>) -> Result<Self> {
        let theta = f.theta();
        if !(alpha > 0.0 && alpha < theta) {
            return Err(Error::param("alpha", format!("{alpha} must lie in (0, θ)")));
        }
        let c0 = solve_front(f, 0.0)?.speed;
        if !(lambda0 > 0.0 && lambda0 < c0) {
            return Err(Error::param("lambda0", format!("{lambda0} must lie in (0, c*(0) = {c0})")));
        }
        let sol = solve_front(f, alpha)?;
        let c = sol.speed;
        let f1 = f.f_prime_one();
        let mut nu = (-f1 / 2.0).min((2.0 * c * lambda0 - lambda0 * lambda0) / 4.0);
        if let Some(m) = mu1 {
            nu = nu.min(0.49 * m);
        }
        if !(nu > 0.0) {
            return Err(Error::Precondition(format!("ν = {nu} is not positive")));
        }
        let cap = (0.5 * alpha).min(0.5 * (theta - alpha)).min(0.5 * (1.0 - theta));
        let eta0 = largest_admissible(cap, |e| {
            alpha + 2.0 * e < theta && 1.0 - 2.0 * e > theta && max_slope(f, 1.0 - 2.0 * e, 1.0) <= f1 / 2.0
        })
        .ok_or_else(|| Error::Precondition("no admissible η₀ for the front pair".into()))?;
        let eta = eta.unwrap_or(eta0);
        if !(eta > 0.0 && eta <= eta0) {
            return Err(Error::param("eta", format!("{eta} must lie in (0, η₀ = {eta0}]")));
        }
        let front = sol.profile;
        let z1 = front.position_of(alpha + eta0).ok_or_else(|| Error::Precondition("α + η₀ not crossed".into()))?;
        let z2 = front.position_of(1.0 - eta0).ok_or_else(|| Error::Precondition("1 − η₀ not crossed".into()))?;
        let kappa = min_descent(&front, z2, z1);
        let big_k = 1.01 * f.lipschitz();
        let zeta_amp = (big_k + nu) / (kappa * nu) * (-lambda0 * z2 / 2.0).exp();
        Ok(Claim41 { alpha, c, lambda0, consts: FrontConstants { nu, eta0, eta, z1, z2, kappa, big_k, zeta_amp }, front })
    }

    /// `Ū_α(t, z)` and whether the cap at one is active.
    pub fn upper(&self, t: f64, z: f64) -> (f64, u8) {
        let k = &self.consts;
        let s = z - self.c * t;
        let v = self.front.eval(s - k.eta * k.zeta(t)) + k.eta * (-self.lambda0 * s / 2.0 - k.nu * t).exp();
        if v >= 1.0 {
            (1.0, 1)
        } else {
            (v, 0)
        }
    }

    /// `U̲_α(t, z)` with a branch tag for the `max` and inner `min`.
    pub fn lower(&self, t: f64, z: f64) -> (f64, u8) {
        let k = &self.consts;
        let s = z - self.c * t;
        let e = (-self.lambda0 * (s + k.eta * k.zeta_inf()) / 2.0).exp();
        let (m, inner) = if e >= 1.0 { (1.0, 2) } else { (e, 0) };
        let v = self.front.eval(s + k.eta * k.zeta(t)) - k.eta * (-k.nu * t).exp() * m;
        if v <= 0.0 {
            (0.0, 1)
        } else {
            (v, inner)
        }
    }
}

/// Sampling of `(t, z − ct)` for residual checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub ns: usize,
    pub delta: f64,
}

impl Default for ResidualGrid {
    fn default() -> Self {
        ResidualGrid { t_min: 0.05, t_max: 20.0, nt: 41, s_min: -25.0, s_max: 40.0, ns: 651, delta: FD_STEP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub which: Construction,
    /// Extreme of the residual on the checked set: minimum for
    /// supersolutions, maximum for subsolutions, largest magnitude for the
    /// exact front.
    pub extreme: f64,
    pub at: (f64, f64),
    pub points: usize,
    pub excluded: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// `∂t V − ∂zz V − f(V)` by fourth-order central differences, or `None`
/// when the stencil straddles a branch change of the construction.
fn fd_residual(f: &Nonlinearity, d: f64, t: f64, z: f64, v: &dyn Fn(f64, f64) -> (f64, u8)) -> Option<f64> {
    let (v0, b0) = v(t, z);
    let mut vals_z = [0.0; 5];
    let mut vals_t = [0.0; 5];
    for (i, k) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
        let (a, ba) = v(t, z + k * d);
        let (b, bb) = v(t + k * d, z);
        if ba != b0 || bb != b0 {
            return None;
        }
        vals_z[i] = a;
        vals_t[i] = b;
    }
    let vt = (-vals_t[4] + 8.0 * vals_t[3] - 8.0 * vals_t[1] + vals_t[0]) / (12.0 * d);
    let vzz = (-vals_z[4] + 16.0 * vals_z[3] - 30.0 * vals_z[2] + 16.0 * vals_z[1] - vals_z[0]) / (12.0 * d * d);
    Some(vt - vzz - f.eval(v0))
}

fn scan(
    f: &Nonlinearity,
    which: Construction,
    grid: &ResidualGrid,
    speed: f64,
    tol: f64,
    v: &dyn Fn(f64, f64) -> (f64, u8),
    active: &dyn Fn(u8) -> bool,
) -> ResidualReport {
    let sub = which == Construction::Claim41UlowerAlpha;
    let exact = which == Construction::ExactFront;
    let mut extreme = if sub || exact { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut at = (0.0, 0.0);
    let (mut points, mut excluded) = (0, 0);
    for i in 0..grid.nt {
        let t = grid.t_min + (grid.t_max - grid.t_min) * i as f64 / (grid.nt - 1).max(1) as f64;
        for j in 0..grid.ns {
            let s = grid.s_min + (grid.s_max - grid.s_min) * j as f64 / (grid.ns - 1).max(1) as f64;
            let z = s + speed * t;
            if !active(v(t, z).1) {
                excluded += 1;
                continue;
            }
            let Some(r) = fd_residual(f, grid.delta, t, z, v) else {
                excluded += 1;
                continue;
            };
            points += 1;
            let key = if exact { r.abs() } else { r };
            let better = if sub || exact { key > extreme } else { key < extreme };
            if better {
                extreme = key;
                at = (t, s);
            }
        }
    }
    let passed = points > 0
        && if exact {
            extreme <= tol
        } else if sub {
            extreme <= tol
        } else {
            extreme >= -tol
        };
    ResidualReport { which, extreme, at, points, excluded, tolerance: tol, passed }
}

/// Residual of the exact front `U_c(z − ct)`.
pub fn exact_front_residual(f: &Nonlinearity, front: &FrontProfile, grid: &ResidualGrid, tol: f64) -> ResidualReport {
    let c = front.speed;
    let v = move |t: f64, z: f64| (front.eval(z - c * t), 0u8);
    scan(f, Construction::ExactFront, grid, c, tol, &v, &|_| true)
}

pub fn claim31_residual(f: &Nonlinearity, claim: &Claim31, grid: &ResidualGrid, tol: f64) -> ResidualReport {
    let v = |t: f64, z: f64| {
        let (x, capped) = claim.value(t, z);
        (x, capped as u8)
    };
    scan(f, Construction::Claim31Ubar, grid, claim.c, tol, &v, &|b| b == 0)
}

pub fn claim41_upper_residual(f: &Nonlinearity, claim: &Claim41, grid: &ResidualGrid, tol: f64) -> ResidualReport {
    let v = |t: f64, z: f64| claim.upper(t, z);
    scan(f, Construction::Claim41UbarAlpha, grid, claim.c, tol, &v, &|b| b == 0)
}

pub fn claim41_lower_residual(f: &Nonlinearity, claim: &Claim41, grid: &ResidualGrid, tol: f64) -> ResidualReport {
    let v = |t: f64, z: f64| claim.lower(t, z);
    scan(f, Construction::Claim41UlowerAlpha, grid, claim.c, tol, &v, &|b| b != 1)
}

/// Parameters of `w̄ = v(t + τ, x) + A e^{−λ_c (x·e − ct − X)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WbarParams {
    pub c: f64,
    pub lambda0: f64,
    pub amplitude: f64,
    pub shift: f64,
    pub tau: f64,
    /// Propagation axis `e`.
    pub axis: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WbarReport {
    pub lambda_c: f64,
    pub delta: f64,
    /// `|λ_c² − cλ_c + f'(θ⁺)| / 2`.
    pub gain: f64,
    /// Minimum of `residual − gain·A e^{…}` over the conditional region.
    pub margin: f64,
    pub points: usize,
    pub excluded: usize,
    pub passed: bool,
}

/// Largest `δ ∈ (0, θ)` with `θ + 2δ < 1` such that
/// `f(v + w) − f(v) − f'(θ⁺) w ≤ gain·w` on `[θ − δ, θ + δ] × [0, δ]`.
pub fn wbar_delta(f: &Nonlinearity, gain: f64) -> Option<f64> {
    let theta = f.theta();
    let fp = f.f_prime_theta_plus();
    let cap = theta.min(0.5 * (1.0 - theta));
    largest_admissible(cap, |d| {
        let n = 60;
        (0..=n).all(|i| {
            let v = theta - d + 2.0 * d * i as f64 / n as f64;
            (1..=n).all(|j| {
                let w = d * j as f64 / n as f64;
                f.eval(v + w) - f.eval(v) - fp * w <= gain * w + 1e-14
            })
        })
    })
}

/// Discrete residual of `w̄` along the co-evolved periodic solution `vs`,
/// consecutive states one step `dt` apart starting at time `t0 + τ`.
///
/// The exponential is evaluated on `periods` copies of the cell along the
/// propagation axis; only points inside the conditional region count.
pub fn wbar_residual(
    f: &Nonlinearity,
    stencil: &Stencil,
    vs: &[Field],
    t0: f64,
    dt: f64,
    p: &WbarParams,
    periods: usize,
    tol: f64,
) -> Result<WbarReport> {
    if vs.len() < 2 {
        return Err(Error::Snapshot("need at least two consecutive periodic states".into()));
    }
    if stencil.boundary.iter().any(|b| *b != AxisBoundary::Periodic) {
        return Err(Error::param("stencil", "periodic stencil expected"));
    }
    let theta = f.theta();
    let fp = f.f_prime_theta_plus();
    let lc = (p.c / 2.0).min(p.lambda0);
    let gain = (lc * lc - p.c * lc + fp).abs() / 2.0;
    let delta = wbar_delta(f, gain).ok_or_else(|| Error::Precondition("no admissible δ".into()))?;
    let a = p.axis;
    let m = stencil.shape[a];
    let h = stencil.h[a];
    let mut margin = f64::INFINITY;
    let (mut points, mut excluded) = (0, 0);
    for n in 0..vs.len() - 1 {
        let t = t0 + n as f64 * dt;
        let (v, vn) = (&vs[n], &vs[n + 1]);
        let ex = |t: f64, x: f64| p.amplitude * (-lc * (x - p.c * t - p.shift)).exp();
        for c in cells(stencil.shape) {
            let vv = v.get(c);
            let dv = (vn.get(c) - vv) / dt - stencil.laplacian(v, c);
            for rep in 0..periods {
                let x = (rep * m + c[a]) as f64 * h + 0.5 * h;
                let e = ex(t, x);
                if !((theta - delta..=theta + delta).contains(&vv) && e <= delta) {
                    excluded += 1;
                    continue;
                }
                let de = (ex(t + dt, x) - e) / dt - (ex(t, x + h) - 2.0 * e + ex(t, x - h)) / (h * h);
                let r = dv + de + f.eval(vv) - f.eval(vv + e);
                margin = margin.min(r - gain * e);
                points += 1;
            }
        }
    }
    Ok(WbarReport { lambda_c: lc, delta, gain, margin, points, excluded, passed: points > 0 && margin >= -tol })
}

/// Largest excess of `|u − v|` over `A e^{−λ_c(‖x‖ − c̄ t)}`,
/// `c̄ = λ_c + M/λ_c`, on the recorded states.
pub fn envelope_excess(
    f: &Nonlinearity,
    domain: &TruncatedDomain,
    snaps: &[Snapshot],
    amplitude: f64,
    lambda_c: f64,
) -> f64 {
    let cbar = lambda_c + f.lipschitz() / lambda_c;
    let mut worst = f64::NEG_INFINITY;
    for s in snaps {
        for (i, c) in cells(domain.shape).enumerate() {
            let x = domain.node(c);
            let r = match domain.front_axis {
                Some(a) => x[a],
                None => x[..domain.dim].iter().map(|q| q * q).sum::<f64>().sqrt(),
            };
            let diff = (s.u.data[i] - s.v.get(domain.periodic_index(c))).abs();
            let bound = amplitude * (-lambda_c * (r - cbar * s.t)).exp();
            worst = worst.max(diff - bound);
        }
    }
    worst
}

/// Glued super- and subsolutions of a front-like run and their comparison
/// with the simulated solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub tau: f64,
    pub amplitude: f64,
    pub x_plus: f64,
    pub x_minus: f64,
    /// `(t, max(u − ū), max(u̲ − u))` at every checked snapshot.
    pub gaps: Vec<(f64, f64, f64)>,
    /// Whether `Ū < w̄` at the left break line and `Ū > w̄` at the right one
    /// (and the mirrored statements for the lower pair) at every time.
    pub gluing_ordered: bool,
    pub tolerance: f64,
    pub holds: bool,
}

struct Glue<'a> {
    claim: &'a Claim41,
    amplitude: f64,
}

impl Glue<'_> {
    fn break_line(&self, t: f64, x: f64) -> f64 {
        let k = &self.claim.consts;
        2.0 * k.nu * t / self.claim.lambda0 + 2.0 / self.claim.lambda0 * (self.amplitude / k.eta).ln() + x
    }

    fn ex(&self, t: f64, z: f64, x: f64) -> f64 {
        self.amplitude * (-self.claim.lambda0 * (z - self.claim.c * t - x)).exp()
    }

    /// `ū(t, ·; τ, X)` at propagation coordinate `z` with `v = v(t + τ, x)`.
    fn upper(&self, t: f64, z: f64, v: f64, x: f64) -> f64 {
        let s = z - self.claim.c * t;
        let b = self.break_line(t, x);
        let wb = v + self.ex(t, z, x);
        if s <= b - 1.0 {
            self.claim.upper(t, z - x).0
        } else if s >= b + 1.0 {
            wb
        } else {
            self.claim.upper(t, z - x).0.min(wb)
        }
    }

    fn lower(&self, t: f64, z: f64, v: f64, x: f64) -> f64 {
        let s = z - self.claim.c * t;
        let b = self.break_line(t, x) + self.claim.consts.eta * self.claim.consts.zeta_inf();
        let wl = v - self.ex(t, z, x);
        if s <= b - 1.0 {
            self.claim.lower(t, z - x).0
        } else if s >= b + 1.0 {
            wl
        } else {
            self.claim.lower(t, z - x).0.max(wl)
        }
    }

    fn ordered(&self, t: f64, vmin: f64, vmax: f64) -> bool {
        let c = self.claim.c;
        let b = self.break_line(t, 0.0);
        let bl = b + self.claim.consts.eta * self.claim.consts.zeta_inf();
        let at = |s: f64| s + c * t;
        self.claim.upper(t, at(b - 1.0)).0 < vmin + self.ex(t, at(b - 1.0), 0.0)
            && self.claim.upper(t, at(b + 1.0)).0 > vmax + self.ex(t, at(b + 1.0), 0.0)
            && self.claim.lower(t, at(bl - 1.0)).0 > vmax - self.ex(t, at(bl - 1.0), 0.0)
            && self.claim.lower(t, at(bl + 1.0)).0 < vmin - self.ex(t, at(bl + 1.0), 0.0)
    }
}

/// Picks the smallest `X₊` with `u(τ) ≤ ū(0; τ, X₊)` and the largest `X₋`
/// with `u̲(0; τ, X₋) ≤ u(τ)` at the snapshot `tau_index`, then measures
/// the ordering at every later snapshot.
pub fn sandwich_check(
    domain: &TruncatedDomain,
    snaps: &[Snapshot],
    claim: &Claim41,
    tau_index: usize,
    amplitude: f64,
    tol: f64,
) -> Result<SandwichReport> {
    let axis = domain.front_axis.ok_or_else(|| Error::Precondition("sandwich needs a front-like run".into()))?;
    let base = snaps.get(tau_index).ok_or_else(|| Error::Snapshot("τ index out of range".into()))?;
    let tau = base.t;
    let glue = Glue { claim, amplitude };
    let interior: Vec<(usize, [usize; 3])> = cells(domain.shape).enumerate().filter(|(_, c)| !domain.is_collar(*c)).collect();
    let over = |snap: &Snapshot, t: f64, x: f64| {
        interior
            .iter()
            .map(|&(i, c)| {
                let z = domain.node(c)[axis];
                snap.u.data[i] - glue.upper(t, z, snap.v.get(domain.periodic_index(c)), x)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let under = |snap: &Snapshot, t: f64, x: f64| {
        interior
            .iter()
            .map(|&(i, c)| {
                let z = domain.node(c)[axis];
                glue.lower(t, z, snap.v.get(domain.periodic_index(c)), x) - snap.u.data[i]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (lo, hi) = domain.extent(axis);
    let span = hi - lo;
    let x_plus = bisect(lo - span, hi + span, |x| over(base, 0.0, x) <= 0.0);
    let x_minus = bisect(lo - span, hi + span, |x| under(base, 0.0, x) > 0.0);
    let mut gaps = Vec::new();
    let mut gluing_ordered = true;
    for s in &snaps[tau_index..] {
        let t = s.t - tau;
        gaps.push((s.t, over(s, t, x_plus), under(s, t, x_minus)));
        gluing_ordered &= glue.ordered(t, s.v.min(), s.v.max());
    }
    let holds = gaps.iter().all(|&(_, a, b)| a <= tol && b <= tol);
    Ok(SandwichReport { tau, amplitude, x_plus, x_minus, gaps, gluing_ordered, tolerance: tol, holds })
}

/// Boundary of a predicate that is false below and true above, to 1e−9.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        if hi - lo <= 1e-9 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f03() -> Nonlinearity {
        Nonlinearity::power(1.0, 1.0, 0.3, 0.1).unwrap()
    }

    #[test]
    fn claim31_constants_are_consistent() {
        let f = f03();
        let cs = minimal_monostable_speed(&f).unwrap();
        let cl = Claim31::new(&f, 1.1 * cs, None).unwrap();
        let k = &cl.consts;
        assert!(k.nu > 0.0 && k.eta0 < 0.35 && k.z2 < 0.0 && k.z1 > 0.0 && k.kappa > 0.0);
        assert!(k.zeta(0.0) == 0.0 && k.zeta(5.0) < k.zeta(6.0) && k.zeta(1e3) <= k.zeta_inf());
        assert!(Claim31::new(&f, 0.9 * cs, None).is_err());
    }

    #[test]
    fn claim41_rejects_fast_envelopes() {
        let f = f03();
        let c0 = solve_front(&f, 0.0).unwrap().speed;
        assert!(Claim41::new(&f, 0.2, 1.01 * c0, None, None).is_err());
        assert!(Claim41::new(&f, 0.35, 0.5 * c0, None, None).is_err());
        let cl = Claim41::new(&f, 0.2, 0.5 * c0, Some(1.0), None).unwrap();
        assert!(cl.consts.nu < 0.5);
    }

    #[test]
    fn bisect_finds_threshold() {
        let x = bisect(-10.0, 10.0, |x| x >= 1.25);
        assert!((x - 1.25).abs() < 1e-8);
    }
}
