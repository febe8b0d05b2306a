//! Planar travelling fronts `U'' + cU' + f(U) = 0` by shooting from the saddle
//! at `U = 1`.
//!
//! For an invaded level `α < θ` the front is unique. Below `θ` the reaction
//! vanishes, so the trajectory decays to `α` exactly when it meets `U = θ`
//! with slope `−c(θ − α)`; the sign of `V_θ + c(θ − α)` at the first crossing
//! drives a bisection on `c`. For `α = θ` every speed above `c*(θ)` is
//! admissible and [`minimal_monostable_speed`] bisects on admissibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::ode::{rk4_step, Dopri};

/// Distance from `U = 1` at which trajectories are launched.
pub const LAUNCH_OFFSET: f64 = 1e-8;
/// Relative tolerance on `c*(α)`.
pub const SPEED_RTOL: f64 = 1e-8;
/// Relative tolerance on `c*(θ)`.
pub const MONOSTABLE_RTOL: f64 = 1e-6;
/// Spacing of assembled profiles.
pub const PROFILE_DZ: f64 = 1e-3;

const SHOOT_RTOL: f64 = 1e-10;
const SHOOT_ATOL: f64 = 1e-16;
const Z_CAP: f64 = 400.0;
const W_STOP: f64 = 1e-7;
const TAIL_CUTOFF: f64 = 1e-8;
const MAX_TAIL_LENGTH: f64 = 200.0;
const CROSSING_SUBSTEPS: usize = 64;

/// Growth rate of the unstable direction at the saddle `U = 1`.
pub fn saddle_rate(f: &Nonlinearity, c: f64) -> f64 {
    0.5 * (-c + (c * c - 4.0 * f.f_prime_one()).sqrt())
}

fn launch(f: &Nonlinearity, c: f64) -> [f64; 2] {
    [1.0 - LAUNCH_OFFSET, -LAUNCH_OFFSET * saddle_rate(f, c)]
}

enum Shot {
    /// First crossing of `U = θ` with the slope there.
    Crossing { v: f64 },
    /// Stopped above `θ` with `w = U − θ` and `V`.
    Above { w: f64, v: f64 },
}

fn shoot(f: &Nonlinearity, c: f64, w_stop: f64) -> Shot {
    let theta = f.theta();
    let rhs = |_z: f64, y: &[f64; 2]| [y[1], -c * y[1] - f.eval(y[0])];
    let mut ode = Dopri::new(rhs, 0.0, launch(f, c), SHOOT_RTOL, SHOOT_ATOL, 0.5);
    loop {
        let prev = ode.y;
        if ode.step().is_none() {
            return Shot::Above { w: prev[0] - theta, v: prev[1] };
        }
        if ode.y[0] <= theta {
            return Shot::Crossing { v: crossing_slope(f, c, prev) };
        }
        let w = ode.y[0] - theta;
        if w < w_stop || ode.z > Z_CAP {
            return Shot::Above { w, v: ode.y[1] };
        }
    }
}

/// Re-integrates the last stretch with `U` as the independent variable,
/// `dV/dU = −c − f(U)/V`, landing exactly on `U = θ`.
fn crossing_slope(f: &Nonlinearity, c: f64, from: [f64; 2]) -> f64 {
    let theta = f.theta();
    if from[1] >= 0.0 {
        return from[1];
    }
    let rhs = |u: f64, y: &[f64; 1]| [-c - f.eval(u) / y[0]];
    let h = (theta - from[0]) / CROSSING_SUBSTEPS as f64;
    let mut y = [from[1]];
    for k in 0..CROSSING_SUBSTEPS {
        y = rk4_step(&rhs, from[0] + k as f64 * h, &y, h);
    }
    y[0]
}

/// Connection criterion: negative when `c` is too slow.
fn criterion(f: &Nonlinearity, c: f64, alpha: f64) -> f64 {
    match shoot(f, c, 0.0) {
        Shot::Crossing { v } => v + c * (f.theta() - alpha),
        Shot::Above { .. } => f64::INFINITY,
    }
}

/// Whether the monostable trajectory at speed `c` stays above `θ`.
fn admissible(f: &Nonlinearity, c: f64) -> bool {
    match shoot(f, c, W_STOP) {
        Shot::Crossing { .. } => false,
        Shot::Above { w, v } => {
            let fp = f.f_prime_theta_plus();
            let lam_plus = 0.5 * (c + (c * c - 4.0 * fp).max(0.0).sqrt());
            v + lam_plus * w > 0.0
        }
    }
}

/// A sampled front normalized so that `U(0) = (1+θ)/2`, with exponential
/// tails beyond the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontProfile {
    pub speed: f64,
    pub alpha: f64,
    pub z_first: f64,
    pub dz: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub left_rate: f64,
    pub right_rate: f64,
}

impl FrontProfile {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn z_last(&self) -> f64 {
        self.z_first + (self.u.len() - 1) as f64 * self.dz
    }

    pub fn z_at(&self, i: usize) -> f64 {
        self.z_first + i as f64 * self.dz
    }

    /// `(U(z), U'(z))` by cubic Hermite interpolation, analytic tails outside.
    pub fn eval_with_slope(&self, z: f64) -> (f64, f64) {
        let n = self.u.len();
        if z <= self.z_first {
            let gap = 1.0 - self.u[0];
            let e = (self.left_rate * (z - self.z_first)).exp();
            return (1.0 - gap * e, -gap * self.left_rate * e);
        }
        let last = self.z_last();
        if z >= last {
            let gap = self.u[n - 1] - self.alpha;
            let e = (-self.right_rate * (z - last)).exp();
            return (self.alpha + gap * e, -self.right_rate * gap * e);
        }
        let s = (z - self.z_first) / self.dz;
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let (p0, p1) = (self.u[i], self.u[i + 1]);
        let (m0, m1) = (self.du[i] * self.dz, self.du[i + 1] * self.dz);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1;
        let der = ((6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1)
            / self.dz;
        (val, der)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.eval_with_slope(z).0
    }

    /// Position where `U` equals `level`, located by bisection on the
    /// interpolant.
    pub fn position_of(&self, level: f64) -> Option<f64> {
        let idx = self.u.iter().position(|&x| x < level)?;
        if idx == 0 {
            return None;
        }
        let (mut a, mut b) = (self.z_at(idx - 1), self.z_at(idx));
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.eval(m) >= level {
                a = m;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }

    /// Sup of `|U'' + cU' + f(U)|` over interior nodes by centred differences.
    pub fn residual(&self, f: &Nonlinearity) -> f64 {
        let h = self.dz;
        let c = self.speed;
        (1..self.u.len() - 1)
            .map(|i| {
                let d2 = (self.u[i + 1] - 2.0 * self.u[i] + self.u[i - 1]) / (h * h);
                let d1 = (self.u[i + 1] - self.u[i - 1]) / (2.0 * h);
                (d2 + c * d1 + f.eval(self.u[i])).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `(c*(α), U_α)` together with the decay amplitude `B` in
/// `U_α(z) − α ~ B e^{−c z}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontSolution {
    pub alpha: f64,
    pub speed: f64,
    pub profile: FrontProfile,
    pub tail_amplitude: f64,
}

/// Integrates the connection at speed `c` on the fixed grid and attaches
/// tails. With `monostable`, the trajectory must stay above `θ`.
fn assemble(f: &Nonlinearity, c: f64, alpha: f64, monostable: bool) -> Result<FrontProfile> {
    let theta = f.theta();
    let dz = PROFILE_DZ;
    let rhs = |_z: f64, y: &[f64; 2]| [y[1], -c * y[1] - f.eval(y[0])];
    let mu = saddle_rate(f, c);
    let start = launch(f, c);

    let mut left_u = Vec::new();
    let mut left_du = Vec::new();
    let mut k = 1;
    loop {
        let gap = LAUNCH_OFFSET * (-mu * k as f64 * dz).exp();
        if gap < 1e-12 {
            break;
        }
        left_u.push(1.0 - gap);
        left_du.push(-mu * gap);
        k += 1;
    }
    left_u.reverse();
    left_du.reverse();

    let mut u = left_u;
    let mut du = left_du;
    u.push(start[0]);
    du.push(start[1]);
    let mut y = start;
    let mut z = 0.0;
    let right_rate;
    loop {
        y = rk4_step(&rhs, z, &y, dz);
        z += dz;
        u.push(y[0]);
        du.push(y[1]);
        if monostable {
            if y[0] <= theta {
                return Err(Error::Precondition(format!(
                    "speed {c} is below the minimal monostable speed: trajectory crosses theta"
                )));
            }
            let w = y[0] - theta;
            if w < W_STOP || z > Z_CAP {
                right_rate = (-y[1] / w).max(1e-12);
                break;
            }
        } else {
            if y[0] < theta {
                right_rate = c;
                // the derivative is taken from the linear tail so that the
                // grid and the tail agree
                *du.last_mut().unwrap() = -c * (y[0] - alpha);
                break;
            }
            if z > Z_CAP {
                return Err(Error::Precondition(format!("no theta crossing within z = {Z_CAP} at c = {c}")));
            }
        }
    }

    let end = *u.last().unwrap();
    let mut k = 1;
    while (end - alpha) * (-right_rate * k as f64 * dz).exp() > TAIL_CUTOFF && (k as f64) * dz < MAX_TAIL_LENGTH {
        let gap = (end - alpha) * (-right_rate * k as f64 * dz).exp();
        u.push(alpha + gap);
        du.push(-right_rate * gap);
        k += 1;
    }

    let mut p = FrontProfile { speed: c, alpha, z_first: 0.0, dz, u, du, left_rate: mu, right_rate };
    let level = 0.5 * (1.0 + theta);
    let zc = p
        .position_of(level)
        .ok_or_else(|| Error::Precondition("profile never reaches (1+theta)/2".into()))?;
    p.z_first = -zc;
    Ok(p)
}

/// Computes `c*(α)` and `U_α` for `α ∈ [0, θ)`.
pub fn solve_front(f: &Nonlinearity, alpha: f64) -> Result<FrontSolution> {
    let theta = f.theta();
    if !(alpha >= 0.0 && alpha < theta) {
        return Err(Error::param("alpha", format!("{alpha} is not in [0, theta)")));
    }
    let g = |c: f64| criterion(f, c, alpha);
    let mut lo = 1e-6;
    let mut hi = 10.0 * f.lipschitz();
    while g(lo) >= 0.0 {
        lo *= 0.1;
        if lo < 1e-12 {
            return Err(Error::NonBracketing { lo, hi });
        }
    }
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonBracketing { lo, hi });
        }
    }
    while hi - lo > SPEED_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let speed = 0.5 * (lo + hi);
    let profile = assemble(f, speed, alpha, false)?;
    let last = profile.z_last();
    let tail_amplitude = (profile.u[profile.len() - 1] - alpha) * (speed * last).exp();
    Ok(FrontSolution { alpha, speed, profile, tail_amplitude })
}

/// `c*(θ)`, the smallest speed whose trajectory from `U = 1` stays above
/// `θ`. The linear floor `2√f'(θ⁺)` is the initial lower bracket.
pub fn minimal_monostable_speed(f: &Nonlinearity) -> Result<f64> {
    let floor = f.linear_speed_floor();
    let mut lo = floor + 1e-9;
    if admissible(f, lo) {
        return Ok(lo);
    }
    let mut hi = 10.0 * f.lipschitz();
    while !admissible(f, hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonBracketing { lo: floor, hi });
        }
    }
    while hi - lo > MONOSTABLE_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if admissible(f, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Monostable front from `1` to `θ` at a supplied admissible speed.
pub fn monostable_front(f: &Nonlinearity, c: f64) -> Result<FrontProfile> {
    assemble(f, c, f.theta(), true)
}

/// Smallest root of `λ² − cλ + f'(θ⁺) = 0`.
pub fn smallest_root(c: f64, fp: f64) -> Result<f64> {
    let disc = c * c - 4.0 * fp;
    if disc < 0.0 {
        return Err(Error::param("c", format!("{c} is below the linear floor 2 sqrt({fp})")));
    }
    // written to avoid cancellation when fp ≪ c²
    let big = 0.5 * (c + disc.sqrt());
    Ok(if big == 0.0 { 0.0 } else { fp / big })
}

/// Decay rates ahead of monostable fronts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub lambda_minus: f64,
    pub lambda_star: f64,
}

/// `λ₋` at speed `c` and `λ*` at the given minimal speed `c*(θ)`.
pub fn decay_rates_at(f: &Nonlinearity, c: f64, c_star: f64) -> Result<DecayRates> {
    let fp = f.f_prime_theta_plus();
    Ok(DecayRates { lambda_minus: smallest_root(c, fp)?, lambda_star: smallest_root(c_star, fp)? })
}

/// `λ₋` at speed `c` and `λ*` at `c*(θ)`, computing the latter.
pub fn decay_rates(f: &Nonlinearity, c: f64) -> Result<DecayRates> {
    decay_rates_at(f, c, minimal_monostable_speed(f)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Nonlinearity {
        Nonlinearity::power(1.0, 1.0, 0.3, 0.1).unwrap()
    }

    #[test]
    fn quadratic_roots() {
        assert!((smallest_root(3.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(smallest_root(2.0, 0.0).unwrap(), 0.0);
        let c = 2.0 * 0.7f64.sqrt();
        assert!((smallest_root(c, 0.7).unwrap() - c / 2.0).abs() < 1e-7);
        assert!(smallest_root(1.0, 1.0).is_err());
    }

    #[test]
    fn front_boundary_values_and_residual() {
        let f = fixture();
        let sol = solve_front(&f, 0.1).unwrap();
        let p = &sol.profile;
        assert!((p.u[0] - 1.0).abs() < 1e-6);
        assert!((p.u[p.len() - 1] - 0.1).abs() < 1e-6);
        assert!(p.u.windows(2).all(|w| w[1] < w[0]));
        assert!(p.residual(&f) < 1e-4, "residual {}", p.residual(&f));
        assert!((p.eval(0.0) - 0.65).abs() < 1e-12);
    }

    #[test]
    fn linear_family_is_pulled() {
        let f = fixture();
        let c = minimal_monostable_speed(&f).unwrap();
        assert!(c >= 2.0 * 0.7f64.sqrt());
        assert!(c - 2.0 * 0.7f64.sqrt() < 1e-6);
    }

    #[test]
    fn degenerate_family_has_positive_minimal_speed() {
        let f = Nonlinearity::power(4.0, 2.0, 0.3, 0.1).unwrap();
        let c = minimal_monostable_speed(&f).unwrap();
        assert!(c > 0.1, "{c}");
    }
}
