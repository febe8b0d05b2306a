//! Ignition-type reaction terms.
//!
//! A reaction term `f` on `[0, 1]` vanishes on `[0, θ]` and at `1`, is
//! positive on `(θ, 1)`, nondecreasing on `[θ, θ + ρ]` and has `f'(1) < 0`.
//! [`Nonlinearity::validate`] checks these properties on a dense sample grid
//! and derives the scalar constants the solvers rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of uniform validation samples.
pub const DEFAULT_SAMPLES: usize = 4096;

const RICHARDSON_STEPS: [f64; 3] = [1e-4, 5e-5, 2.5e-5];
const LIPSCHITZ_INFLATION: f64 = 1.05;
const PRIMITIVE_TOL: f64 = 1e-10;

/// Closed-form or tabulated description of `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ReactionKind {
    /// `f(u) = a (u - θ)^p (1 - u)` on `[θ, 1]`, zero below `θ`.
    Power { a: f64, p: f64 },
    /// Sorted `(u, f(u))` pairs covering `[0, 1]`, linearly interpolated.
    Tabulated { table: Vec<(f64, f64)> },
}

impl ReactionKind {
    #[inline]
    fn eval(&self, theta: f64, u: f64) -> f64 {
        match self {
            ReactionKind::Power { a, p } => {
                if u <= theta || u >= 1.0 {
                    0.0
                } else {
                    let s = u - theta;
                    // powf is slow and exact for these exponents anyway
                    let sp = if *p == 1.0 {
                        s
                    } else if *p == 2.0 {
                        s * s
                    } else {
                        s.powf(*p)
                    };
                    a * sp * (1.0 - u)
                }
            }
            ReactionKind::Tabulated { table } => interpolate(table, u),
        }
    }

    fn tag(&self) -> String {
        match self {
            ReactionKind::Power { a, p } => format!("power-ignition(a={a}, p={p})"),
            ReactionKind::Tabulated { table } => format!("tabulated({} nodes)", table.len()),
        }
    }
}

fn interpolate(table: &[(f64, f64)], u: f64) -> f64 {
    let idx = table.partition_point(|&(x, _)| x <= u);
    if idx == 0 {
        return table[0].1;
    }
    if idx == table.len() {
        return table[table.len() - 1].1;
    }
    let (x0, y0) = table[idx - 1];
    let (x1, y1) = table[idx];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
}

/// A validated ignition nonlinearity. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    kind: ReactionKind,
    theta: f64,
    rho: f64,
    f_prime_theta_plus: f64,
    f_prime_one: f64,
    lipschitz: f64,
    sup: f64,
}

impl Nonlinearity {
    /// Validates `kind` against the ignition hypotheses on at least
    /// `sample_count` points and derives `f'(θ⁺)`, `f'(1)` and the Lipschitz
    /// constant.
    pub fn validate(kind: ReactionKind, theta: f64, rho: f64, sample_count: usize) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::param("theta", format!("{theta} is not in (0, 1)")));
        }
        if !(rho > 0.0 && rho < 1.0 - theta) {
            return Err(Error::param("rho", format!("{rho} is not in (0, 1 - theta)")));
        }
        match &kind {
            ReactionKind::Power { a, p } => {
                if !(a.is_finite() && p.is_finite()) {
                    return Err(Error::param("a/p", "must be finite"));
                }
                if *p < 1.0 {
                    return Err(Error::InvalidNonlinearity(format!(
                        "exponent p = {p} < 1 makes f non-Lipschitz at theta"
                    )));
                }
            }
            ReactionKind::Tabulated { table } => {
                if table.len() < 2 {
                    return Err(Error::InvalidNonlinearity("table needs at least two nodes".into()));
                }
                if table.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidNonlinearity("table abscissae must be strictly increasing".into()));
                }
                if table[0].0 > 0.0 || table[table.len() - 1].0 < 1.0 {
                    return Err(Error::InvalidNonlinearity("table must cover [0, 1]".into()));
                }
            }
        }

        let mut samples: Vec<f64> = (0..sample_count.max(2))
            .map(|i| i as f64 / (sample_count.max(2) - 1) as f64)
            .collect();
        samples.extend_from_slice(&[theta, theta + rho, 1.0 - rho, 1.0]);
        samples.sort_by(|a, b| a.total_cmp(b));
        samples.dedup();

        let f = |u: f64| kind.eval(theta, u);
        for &u in &samples {
            let v = f(u);
            if !v.is_finite() {
                return Err(Error::InvalidNonlinearity(format!("f({u}) is not finite")));
            }
            if u <= theta && v != 0.0 {
                return Err(Error::InvalidNonlinearity(format!(
                    "zero set: f({u}) = {v} but f must vanish on [0, theta]"
                )));
            }
            if u == 1.0 && v != 0.0 {
                return Err(Error::InvalidNonlinearity(format!("zero set: f(1) = {v}")));
            }
            if u > theta && u < 1.0 && v <= 0.0 {
                return Err(Error::InvalidNonlinearity(format!(
                    "sign: f({u}) = {v} but f must be positive on (theta, 1)"
                )));
            }
        }

        let mono: Vec<f64> = samples
            .iter()
            .copied()
            .filter(|&u| u >= theta && u <= theta + rho)
            .collect();
        for w in mono.windows(2) {
            if f(w[1]) < f(w[0]) - 1e-14 {
                return Err(Error::InvalidNonlinearity(format!(
                    "monotonicity: f decreases between {} and {} inside [theta, theta + rho]",
                    w[0], w[1]
                )));
            }
        }

        let fp_one_est = richardson(|h| (f(1.0) - f(1.0 - h)) / h);
        let fp_theta_est = richardson(|h| f(theta + h) / h);

        let (f_prime_one, f_prime_theta_plus) = match &kind {
            ReactionKind::Power { a, p } => {
                let one = -a * (1.0 - theta).powf(*p);
                let th = if *p == 1.0 { a * (1.0 - theta) } else { 0.0 };
                if (one - fp_one_est).abs() > 1e-6 * one.abs().max(1.0) {
                    return Err(Error::InvalidNonlinearity(format!(
                        "f'(1) = {one} disagrees with the one-sided estimate {fp_one_est}"
                    )));
                }
                (one, th)
            }
            ReactionKind::Tabulated { .. } => (fp_one_est, fp_theta_est.max(0.0)),
        };
        if f_prime_one >= 0.0 {
            return Err(Error::InvalidNonlinearity(format!(
                "f'(1) = {f_prime_one} must be negative"
            )));
        }

        let mut lip: f64 = 0.0;
        let mut sup: f64 = 0.0;
        for w in samples.windows(2) {
            let slope = (f(w[1]) - f(w[0])).abs() / (w[1] - w[0]);
            lip = lip.max(slope);
            sup = sup.max(f(w[1]));
        }

        Ok(Nonlinearity {
            kind,
            theta,
            rho,
            f_prime_theta_plus,
            f_prime_one,
            lipschitz: lip * LIPSCHITZ_INFLATION,
            sup,
        })
    }

    /// `f(u) = a (u - θ)^p (1 - u)` with the default sample count.
    pub fn power(a: f64, p: f64, theta: f64, rho: f64) -> Result<Self> {
        Self::validate(ReactionKind::Power { a, p }, theta, rho, DEFAULT_SAMPLES)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.kind.eval(self.theta, u)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn kind(&self) -> &ReactionKind {
        &self.kind
    }

    pub fn kind_tag(&self) -> String {
        self.kind.tag()
    }

    /// `lim_{s→0⁺} f(θ + s) / s`.
    pub fn f_prime_theta_plus(&self) -> f64 {
        self.f_prime_theta_plus
    }

    pub fn f_prime_one(&self) -> f64 {
        self.f_prime_one
    }

    /// Sampled Lipschitz constant, inflated by 5%.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Sampled maximum of `f`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// Linear spreading floor `2 √f'(θ⁺)`.
    pub fn linear_speed_floor(&self) -> f64 {
        2.0 * self.f_prime_theta_plus.sqrt()
    }

    /// `F(u) = ∫₀ᵘ f`, by adaptive Simpson quadrature.
    pub fn primitive(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::param("u", format!("{u} is not in [0, 1]")));
        }
        if u <= self.theta {
            return Ok(0.0);
        }
        Ok(adaptive_simpson(&|s| self.eval(s), self.theta, u, PRIMITIVE_TOL))
    }
}

/// Two-level Richardson extrapolation of a first-order one-sided estimate
/// over the steps `1e-4, 5e-5, 2.5e-5`.
fn richardson(d: impl Fn(f64) -> f64) -> f64 {
    let [h0, h1, h2] = RICHARDSON_STEPS;
    let (d0, d1, d2) = (d(h0), d(h1), d(h2));
    let r0 = 2.0 * d1 - d0;
    let r1 = 2.0 * d2 - d1;
    (4.0 * r1 - r0) / 3.0
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
