//! Periodic limit profiles on the unit torus, period vectors and concrete
//! initial data built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{pairwise_sum, Field};
use crate::nonlinearity::Nonlinearity;

/// Smallest admissible component of a normalized period vector.
pub const XI_MIN: f64 = 1e-3;
/// Samples per dimension used for extremes and averages.
pub const SAMPLES_PER_DIM: usize = 256;

/// One factor of a separable sine profile, `x ↦ sin(2πkx)` etc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AxisFactor {
    One,
    Sin { k: u32 },
    Cos { k: u32 },
}

impl AxisFactor {
    fn eval(self, x: f64) -> f64 {
        match self {
            AxisFactor::One => 1.0,
            AxisFactor::Sin { k } => (2.0 * PI * k as f64 * x).sin(),
            AxisFactor::Cos { k } => (2.0 * PI * k as f64 * x).cos(),
        }
    }

    /// Exact mean over `[a, b]` (any real interval, `b > a`).
    fn mean(self, a: f64, b: f64) -> f64 {
        match self {
            AxisFactor::One => 1.0,
            AxisFactor::Sin { k } => {
                let w = 2.0 * PI * k as f64;
                ((w * a).cos() - (w * b).cos()) / (w * (b - a))
            }
            AxisFactor::Cos { k } => {
                let w = 2.0 * PI * k as f64;
                ((w * b).sin() - (w * a).sin()) / (w * (b - a))
            }
        }
    }

    fn is_one(self) -> bool {
        matches!(self, AxisFactor::One) || matches!(self, AxisFactor::Cos { k: 0 })
    }
}

/// Declarative description of a `(1, …, 1)`-periodic profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProfileSpec {
    Constant { dim: usize, value: f64 },
    /// `high` on `x_axis ∈ [0, split)`, `low` on `[split, 1)`.
    Step { dim: usize, axis: usize, split: f64, high: f64, low: f64 },
    /// `mean + amplitude · Π_i factor_i(x_i)`.
    SineProduct { dim: usize, mean: f64, amplitude: f64, factors: Vec<AxisFactor> },
    /// Piecewise constant on a uniform row-major grid of the given shape.
    Tabulated { shape: Vec<usize>, values: Vec<f64> },
}

impl ProfileSpec {
    /// The stripe profile that is `(1+θ)/2` on `x₁ ∈ [0, 1/3)` and `θ/2`
    /// elsewhere, whose average `(1+3θ)/6` sits below `θ` for `θ > 1/3`.
    pub fn stripe(dim: usize, theta: f64) -> Self {
        ProfileSpec::Step { dim, axis: 0, split: 1.0 / 3.0, high: 0.5 * (1.0 + theta), low: 0.5 * theta }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProfileSpec::Constant { dim, .. } | ProfileSpec::Step { dim, .. } | ProfileSpec::SineProduct { dim, .. } => *dim,
            ProfileSpec::Tabulated { shape, .. } => shape.len(),
        }
    }

    /// Axes along which the profile actually varies.
    pub fn active_axes(&self) -> Vec<usize> {
        match self {
            ProfileSpec::Constant { .. } => vec![],
            ProfileSpec::Step { axis, .. } => vec![*axis],
            ProfileSpec::SineProduct { factors, amplitude, .. } => {
                if *amplitude == 0.0 {
                    vec![]
                } else {
                    (0..factors.len()).filter(|&i| !factors[i].is_one()).collect()
                }
            }
            ProfileSpec::Tabulated { shape, .. } => (0..shape.len()).filter(|&i| shape[i] > 1).collect(),
        }
    }

    fn check(&self) -> Result<()> {
        let dim = self.dim();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidProfile(format!("dimension {dim} is not in 1..=3")));
        }
        match self {
            ProfileSpec::Constant { value, .. } => unit(*value, "value")?,
            ProfileSpec::Step { axis, split, high, low, .. } => {
                if *axis >= dim {
                    return Err(Error::InvalidProfile(format!("step axis {axis} >= dimension {dim}")));
                }
                if !(*split > 0.0 && *split < 1.0) {
                    return Err(Error::InvalidProfile(format!("split {split} is not in (0, 1)")));
                }
                unit(*high, "high")?;
                unit(*low, "low")?;
            }
            ProfileSpec::SineProduct { mean, amplitude, factors, .. } => {
                if factors.len() != dim {
                    return Err(Error::InvalidProfile("one factor per dimension is required".into()));
                }
                if mean - amplitude.abs() < 0.0 || mean + amplitude.abs() > 1.0 {
                    return Err(Error::InvalidProfile("sine profile leaves [0, 1]".into()));
                }
            }
            ProfileSpec::Tabulated { shape, values } => {
                if shape.iter().any(|&s| s == 0) || shape.iter().product::<usize>() != values.len() {
                    return Err(Error::InvalidProfile("table shape does not match the number of values".into()));
                }
                for &v in values {
                    unit(v, "table value")?;
                }
            }
        }
        Ok(())
    }

    /// Pointwise value at torus coordinates (first `dim` entries used).
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ProfileSpec::Constant { value, .. } => *value,
            ProfileSpec::Step { axis, split, high, low, .. } => {
                if x[*axis].rem_euclid(1.0) < *split {
                    *high
                } else {
                    *low
                }
            }
            ProfileSpec::SineProduct { mean, amplitude, factors, .. } => {
                mean + amplitude * factors.iter().zip(x).map(|(f, &xi)| f.eval(xi)).product::<f64>()
            }
            ProfileSpec::Tabulated { shape, values } => {
                let mut idx = 0;
                for (a, &n) in shape.iter().enumerate() {
                    let i = ((x[a].rem_euclid(1.0) * n as f64) as usize).min(n - 1);
                    idx = idx * n + i;
                }
                values[idx]
            }
        }
    }

    /// Exact mean over the box `[lo, hi]` in torus coordinates. Boxes may
    /// extend outside the unit cell; periodicity is applied.
    pub fn box_mean(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            ProfileSpec::Constant { value, .. } => *value,
            ProfileSpec::Step { axis, split, high, low, .. } => {
                let frac = step_fraction(*split, lo[*axis], hi[*axis]);
                frac * high + (1.0 - frac) * low
            }
            ProfileSpec::SineProduct { mean, amplitude, factors, .. } => {
                mean + amplitude
                    * factors
                        .iter()
                        .enumerate()
                        .map(|(a, f)| f.mean(lo[a], hi[a]))
                        .product::<f64>()
            }
            ProfileSpec::Tabulated { shape, values } => {
                let weights: Vec<Vec<f64>> = shape
                    .iter()
                    .enumerate()
                    .map(|(a, &n)| overlap_weights(n, lo[a], hi[a]))
                    .collect();
                let mut acc = 0.0;
                for (flat, &v) in values.iter().enumerate() {
                    let mut rem = flat;
                    let mut w = 1.0;
                    for a in (0..shape.len()).rev() {
                        w *= weights[a][rem % shape[a]];
                        rem /= shape[a];
                    }
                    acc += w * v;
                }
                acc
            }
        }
    }
}

fn unit(v: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("{name} = {v} is not in [0, 1]")))
    }
}

/// Fraction of `[a, b]` whose fractional part lies below `split`.
fn step_fraction(split: f64, a: f64, b: f64) -> f64 {
    let g = |x: f64| x.floor() * split + x.rem_euclid(1.0).min(split);
    (g(b) - g(a)) / (b - a)
}

/// Fraction of `[a, b]` covered by each of `n` uniform periodic cells.
fn overlap_weights(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let len = b - a;
    let cell = 1.0 / n as f64;
    let mut x = a;
    while x < b - 1e-15 {
        let k = (x / cell).floor();
        let end = ((k + 1.0) * cell).min(b);
        let idx = (k as i64).rem_euclid(n as i64) as usize;
        w[idx] += (end - x) / len;
        x = end;
    }
    w
}

/// Oscillation class of a profile relative to `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OscillationClass {
    Oscillating,
    BelowThreshold,
    AboveThreshold,
    ConstantTheta,
}

/// What the class implies for the critical magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdConvention {
    Zero,
    Infinite,
    Compute,
}

/// A validated profile together with its sampled statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicProfile {
    spec: ProfileSpec,
    average: f64,
    ess_inf: f64,
    ess_sup: f64,
}

impl PeriodicProfile {
    pub fn new(spec: ProfileSpec) -> Result<Self> {
        spec.check()?;
        let dim = spec.dim();
        let act = spec.active_axes();
        let m = SAMPLES_PER_DIM;
        let mut shape = [1usize; 3];
        for &a in &act {
            shape[a] = m;
        }
        let h = 1.0 / m as f64;
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        let mut means = Vec::with_capacity(shape.iter().product());
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let c = [i, j, k];
                    let mut x = [0.5 * h; 3];
                    let mut lo = [0.0; 3];
                    let mut hi = [1.0; 3];
                    for &a in &act {
                        x[a] = (c[a] as f64 + 0.5) * h;
                        lo[a] = c[a] as f64 * h;
                        hi[a] = lo[a] + h;
                    }
                    let v = spec.eval(&x[..dim]);
                    inf = inf.min(v);
                    sup = sup.max(v);
                    means.push(spec.box_mean(&lo[..dim], &hi[..dim]));
                }
            }
        }
        let average = pairwise_sum(&means) / means.len() as f64;
        Ok(PeriodicProfile { spec, average, ess_inf: inf, ess_sup: sup })
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `∫_{[0,1]^N} v₀`, from exact cell means on the sampling grid.
    pub fn average(&self) -> f64 {
        self.average
    }

    pub fn ess_inf(&self) -> f64 {
        self.ess_inf
    }

    pub fn ess_sup(&self) -> f64 {
        self.ess_sup
    }

    pub fn active_axes(&self) -> Vec<usize> {
        self.spec.active_axes()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.spec.eval(x)
    }

    /// Exact mean over a box in torus coordinates.
    pub fn cell_mean(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.spec.box_mean(lo, hi)
    }

    /// Cell means on the torus grid with `n` cells along every active axis and
    /// a single cell along invariant ones.
    pub fn torus_field(&self, n: usize) -> Field {
        let act = self.active_axes();
        let mut shape = [1usize; 3];
        for &a in &act {
            shape[a] = n;
        }
        let dim = self.dim();
        Field::from_fn(shape, |c| {
            let mut lo = [0.0; 3];
            let mut hi = [1.0; 3];
            for &a in &act {
                lo[a] = c[a] as f64 / n as f64;
                hi[a] = (c[a] + 1) as f64 / n as f64;
            }
            self.spec.box_mean(&lo[..dim], &hi[..dim])
        })
    }

    pub fn classify(&self, f: &Nonlinearity) -> (OscillationClass, ThresholdConvention) {
        let theta = f.theta();
        if self.ess_sup <= theta {
            if self.ess_inf == theta {
                (OscillationClass::ConstantTheta, ThresholdConvention::Zero)
            } else {
                (OscillationClass::BelowThreshold, ThresholdConvention::Infinite)
            }
        } else if self.ess_inf >= theta {
            (OscillationClass::AboveThreshold, ThresholdConvention::Zero)
        } else if self.average >= theta {
            (OscillationClass::Oscillating, ThresholdConvention::Zero)
        } else {
            (OscillationClass::Oscillating, ThresholdConvention::Compute)
        }
    }

    /// The same profile with coordinates permuted: new axis `a` reads old
    /// axis `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let dim = self.dim();
        let mut seen = vec![false; dim];
        if perm.len() != dim || perm.iter().any(|&p| p >= dim || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidProfile("not a permutation of the axes".into()));
        }
        let spec = match &self.spec {
            ProfileSpec::Constant { .. } => self.spec.clone(),
            ProfileSpec::Step { dim, axis, split, high, low } => ProfileSpec::Step {
                dim: *dim,
                axis: perm.iter().position(|&p| p == *axis).unwrap(),
                split: *split,
                high: *high,
                low: *low,
            },
            ProfileSpec::SineProduct { dim, mean, amplitude, factors } => ProfileSpec::SineProduct {
                dim: *dim,
                mean: *mean,
                amplitude: *amplitude,
                factors: perm.iter().map(|&p| factors[p]).collect(),
            },
            ProfileSpec::Tabulated { shape, values } => {
                let new_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
                let total = values.len();
                let mut out = vec![0.0; total];
                for (flat, slot) in out.iter_mut().enumerate() {
                    let mut rem = flat;
                    let mut new_idx = vec![0; dim];
                    for a in (0..dim).rev() {
                        new_idx[a] = rem % new_shape[a];
                        rem /= new_shape[a];
                    }
                    let mut old_idx = vec![0; dim];
                    for a in 0..dim {
                        old_idx[perm[a]] = new_idx[a];
                    }
                    let mut src = 0;
                    for a in 0..dim {
                        src = src * shape[a] + old_idx[a];
                    }
                    *slot = values[src];
                }
                ProfileSpec::Tabulated { shape: new_shape, values: out }
            }
        };
        PeriodicProfile::new(spec)
    }

    /// Average over the first `i` torus coordinates, giving a profile of
    /// dimension `N − i`.
    pub fn homogenized(&self, i: usize) -> Result<Self> {
        let dim = self.dim();
        if i == 0 || i >= dim {
            return Err(Error::param("i", format!("{i} is not in [1, {}]", dim - 1)));
        }
        let rest = dim - i;
        let spec = match &self.spec {
            ProfileSpec::Constant { value, .. } => ProfileSpec::Constant { dim: rest, value: *value },
            ProfileSpec::Step { axis, split, high, low, .. } => {
                if *axis < i {
                    ProfileSpec::Constant { dim: rest, value: split * high + (1.0 - split) * low }
                } else {
                    ProfileSpec::Step { dim: rest, axis: axis - i, split: *split, high: *high, low: *low }
                }
            }
            ProfileSpec::SineProduct { mean, amplitude, factors, .. } => {
                let dropped: f64 = factors[..i].iter().map(|f| f.mean(0.0, 1.0)).product();
                if dropped == 0.0 {
                    ProfileSpec::Constant { dim: rest, value: *mean }
                } else {
                    ProfileSpec::SineProduct {
                        dim: rest,
                        mean: *mean,
                        amplitude: amplitude * dropped,
                        factors: factors[i..].to_vec(),
                    }
                }
            }
            ProfileSpec::Tabulated { shape, values } => {
                let outer: usize = shape[..i].iter().product();
                let inner: usize = shape[i..].iter().product();
                let mut out = vec![0.0; inner];
                for o in 0..outer {
                    for (k, slot) in out.iter_mut().enumerate() {
                        *slot += values[o * inner + k] / outer as f64;
                    }
                }
                ProfileSpec::Tabulated { shape: shape[i..].to_vec(), values: out }
            }
        };
        PeriodicProfile::new(spec)
    }
}

/// `L = λ ξ` with `ξ` a unit vector whose components are at least
/// [`XI_MIN`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodVector {
    xi: Vec<f64>,
    lambda: f64,
}

impl PeriodVector {
    pub fn new(xi: Vec<f64>, lambda: f64) -> Result<Self> {
        if xi.is_empty() || xi.len() > 3 {
            return Err(Error::param("xi", "needs 1 to 3 components"));
        }
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::param("xi", format!("norm {norm} differs from 1")));
        }
        if xi.iter().any(|&x| x < XI_MIN) {
            return Err(Error::param("xi", format!("components must be >= {XI_MIN}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("{lambda} must be positive")));
        }
        Ok(PeriodVector { xi, lambda })
    }

    /// Normalizes `xi` before validation.
    pub fn normalized(xi: &[f64], lambda: f64) -> Result<Self> {
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self::new(xi.iter().map(|x| x / norm).collect(), lambda)
    }

    pub fn from_components(l: &[f64]) -> Result<Self> {
        let lambda = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self::normalized(l, lambda)
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.xi.clone(), lambda)
    }

    /// Physical periods `L_i = λ ξ_i`.
    pub fn components(&self) -> Vec<f64> {
        self.xi.iter().map(|x| x * self.lambda).collect()
    }
}

/// How an initial datum approaches its periodic limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataKind {
    /// Periodic limit plus a compactly supported bump centred at the origin.
    AsymptoticallyPeriodic { bump_height: f64, bump_radius: f64 },
    /// Plateau `left_level` for `x·e ≤ offset`, relaxing exponentially onto
    /// the periodic limit ahead.
    FrontLike { axis: usize, left_level: f64, offset: f64 },
}

/// A concrete `u₀` on `R^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub profile: PeriodicProfile,
    pub period: PeriodVector,
    pub kind: DataKind,
    pub amplitude: f64,
    pub lambda0: f64,
}

/// Smooth radial cut-off: 1 on `[0, r/2]`, 0 beyond `r`.
fn bump_shape(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let q = (s - 0.5) * 2.0;
        (0.5 * PI * q).cos().powi(2)
    }
}

impl InitialData {
    /// Builds an asymptotically periodic datum (`e = None`) or a front-like one
    /// (`e` an axis-aligned unit vector).
    pub fn new(
        profile: PeriodicProfile,
        period: PeriodVector,
        kind: DataKind,
        amplitude: f64,
        lambda0: f64,
    ) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(Error::param("A", format!("{amplitude} must be positive")));
        }
        if !(lambda0 > 0.0) {
            return Err(Error::param("lambda0", format!("{lambda0} must be positive")));
        }
        if profile.dim() != period.dim() {
            return Err(Error::param("period", "dimension differs from the profile"));
        }
        match &kind {
            DataKind::AsymptoticallyPeriodic { bump_height, bump_radius } => {
                if !(*bump_height >= 0.0 && *bump_radius > 0.0) {
                    return Err(Error::param("bump", "height must be >= 0 and radius > 0"));
                }
            }
            DataKind::FrontLike { axis, left_level, .. } => {
                if *axis >= profile.dim() {
                    return Err(Error::param("e", "direction axis outside the dimension"));
                }
                unit(*left_level, "left_level")?;
            }
        }
        Ok(InitialData { profile, period, kind, amplitude, lambda0 })
    }

    /// Front-like datum from a direction vector, which must be a positive
    /// coordinate axis.
    pub fn front_like(
        profile: PeriodicProfile,
        period: PeriodVector,
        e: Option<&[f64]>,
        left_level: f64,
        offset: f64,
        amplitude: f64,
        lambda0: f64,
    ) -> Result<Self> {
        let e = e.ok_or_else(|| Error::param("e", "front-like data need a direction"))?;
        let axis = axis_of(e)?;
        Self::new(profile, period, DataKind::FrontLike { axis, left_level, offset }, amplitude, lambda0)
    }

    /// Value given the periodic-limit value `v` at physical point `x`.
    pub fn perturb(&self, v: f64, x: &[f64]) -> f64 {
        match &self.kind {
            DataKind::AsymptoticallyPeriodic { bump_height, bump_radius } => {
                let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                (v + bump_height * bump_shape(r / bump_radius)).clamp(0.0, 1.0)
            }
            DataKind::FrontLike { axis, left_level, offset } => {
                let s = x[*axis] - offset;
                if s <= 0.0 {
                    *left_level
                } else {
                    v + (left_level - v) * (-self.lambda0 * s).exp()
                }
            }
        }
    }

    /// Periodic limit `v₀(x₁/L₁, …)` at a physical point.
    pub fn limit(&self, x: &[f64]) -> f64 {
        let l = self.period.components();
        let y: Vec<f64> = x.iter().zip(&l).map(|(a, b)| a / b).collect();
        self.profile.eval(&y)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.perturb(self.limit(x), x)
    }

    /// Checks `|u₀ − v₀(x/L)| ≤ A e^{−λ₀ d(x)}` on the given points, with
    /// `d = ‖x‖` or `d = x·e`.
    pub fn envelope_holds(&self, points: &[Vec<f64>]) -> bool {
        points.iter().all(|x| {
            let d = match &self.kind {
                DataKind::AsymptoticallyPeriodic { .. } => x.iter().map(|a| a * a).sum::<f64>().sqrt(),
                DataKind::FrontLike { axis, offset, .. } => x[*axis] - offset,
            };
            (self.eval(x) - self.limit(x)).abs() <= self.amplitude * (-self.lambda0 * d).exp() + 1e-15
        })
    }
}

/// Index of the coordinate axis `e` points along.
pub fn axis_of(e: &[f64]) -> Result<usize> {
    let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::param("e", "must be a unit vector"));
    }
    let hits: Vec<usize> = (0..e.len()).filter(|&i| e[i] != 0.0).collect();
    if hits.len() != 1 || e[hits[0]] < 0.0 {
        return Err(Error::param("e", "only positive coordinate axes are supported"));
    }
    Ok(hits[0])
}
