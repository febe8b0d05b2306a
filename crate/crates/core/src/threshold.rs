//! The critical period magnitude `L*(ξ)`, the map `λ ↦ θ_{ξ,λ}` and the
//! homogenization check.

use serde::{Deserialize, Serialize};

use crate::cache::{classification_key, ClassificationCache};
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::periodic_solver::{classify_limit, ClassifySettings, LimitClassification, LimitOutcome};
use crate::profiles::{PeriodVector, PeriodicProfile, ThresholdConvention};

/// Largest `λ` tried while looking for a run that converges to one.
pub const LAMBDA_LIMIT: f64 = 1e4;
/// Smallest `λ` tried while looking for a run that stays below `θ`.
pub const LAMBDA_FLOOR: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSettings {
    pub classify: ClassifySettings,
    pub rel_tol: f64,
    pub lambda_start: f64,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        ThresholdSettings {
            classify: ClassifySettings { fit_rate: false, ..ClassifySettings::default() },
            rel_tol: 1e-3,
            lambda_start: 1.0,
        }
    }
}

/// `L*(ξ)` as an extended nonnegative number or a resolved band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CriticalMagnitude {
    Zero,
    Infinite,
    /// Every sampled `λ ≤ lo` stayed below `θ`, every sampled `λ ≥ hi`
    /// converged to one.
    Band { lo: f64, hi: f64 },
}

impl CriticalMagnitude {
    /// Band midpoint, `0` or `+∞`.
    pub fn midpoint(&self) -> f64 {
        match *self {
            CriticalMagnitude::Zero => 0.0,
            CriticalMagnitude::Infinite => f64::INFINITY,
            CriticalMagnitude::Band { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn width(&self) -> f64 {
        match *self {
            CriticalMagnitude::Band { lo, hi } => hi - lo,
            _ => 0.0,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            CriticalMagnitude::Zero => (0.0, 0.0),
            CriticalMagnitude::Infinite => (f64::INFINITY, f64::INFINITY),
            CriticalMagnitude::Band { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub lambda: f64,
    pub classification: LimitClassification,
    pub cached: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub xi: Vec<f64>,
    pub l_star: CriticalMagnitude,
    /// Undetermined evaluations strictly inside the band.
    pub undetermined: Vec<f64>,
    /// Resolved `(λ, θ_{ξ,λ})` pairs below the band, sorted by `λ`.
    pub theta_map: Vec<(f64, f64)>,
    pub provenance: Vec<Evaluation>,
}

impl ThresholdRecord {
    pub fn cache_hits(&self) -> usize {
        self.provenance.iter().filter(|e| e.cached).count()
    }

    pub fn count(&self, pred: impl Fn(&LimitOutcome) -> bool) -> usize {
        self.provenance.iter().filter(|e| pred(&e.classification.outcome)).count()
    }
}

/// Classifies `(ξ, λ)`, consulting the cache first.
pub fn classify_cached(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    period: &PeriodVector,
    settings: &ClassifySettings,
    cache: Option<&dyn ClassificationCache>,
) -> Result<(LimitClassification, bool)> {
    let key = cache.map(|_| classification_key(f, v0, period, settings));
    if let (Some(c), Some(k)) = (cache, key.as_deref()) {
        if let Some(hit) = c.get(k) {
            return Ok((hit, true));
        }
    }
    let result = classify_limit(f, v0, period, settings)?;
    if let (Some(c), Some(k)) = (cache, key.as_deref()) {
        c.put(k, &result)?;
    }
    Ok((result, false))
}

struct Search<'a> {
    f: &'a Nonlinearity,
    v0: &'a PeriodicProfile,
    xi: &'a [f64],
    settings: &'a ThresholdSettings,
    cache: Option<&'a dyn ClassificationCache>,
    evals: Vec<Evaluation>,
}

impl Search<'_> {
    fn eval(&mut self, lambda: f64) -> Result<LimitOutcome> {
        let period = PeriodVector::new(self.xi.to_vec(), lambda)?;
        let (c, cached) = classify_cached(self.f, self.v0, &period, &self.settings.classify, self.cache)?;
        let outcome = c.outcome;
        self.evals.push(Evaluation { lambda, classification: c, cached });
        self.check_monotone()?;
        Ok(outcome)
    }

    fn max_constant(&self) -> Option<f64> {
        self.evals
            .iter()
            .filter(|e| matches!(e.classification.outcome, LimitOutcome::ConvergedToConstant { .. }))
            .map(|e| e.lambda)
            .reduce(f64::max)
    }

    fn min_one(&self) -> Option<f64> {
        self.evals
            .iter()
            .filter(|e| e.classification.outcome == LimitOutcome::ConvergedToOne)
            .map(|e| e.lambda)
            .reduce(f64::min)
    }

    fn check_monotone(&self) -> Result<()> {
        if let (Some(c), Some(o)) = (self.max_constant(), self.min_one()) {
            if o < c {
                return Err(Error::Threshold(format!(
                    "monotonicity conflict: converged to one at λ = {o} but stayed below θ at λ = {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Searches for `L*(ξ)`. Profiles whose class fixes the answer return
/// without simulating.
pub fn critical_magnitude(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    xi: &[f64],
    settings: &ThresholdSettings,
    cache: Option<&dyn ClassificationCache>,
) -> Result<ThresholdRecord> {
    PeriodVector::new(xi.to_vec(), 1.0)?;
    let short = |l_star| ThresholdRecord {
        xi: xi.to_vec(),
        l_star,
        undetermined: Vec::new(),
        theta_map: Vec::new(),
        provenance: Vec::new(),
    };
    match v0.classify(f).1 {
        ThresholdConvention::Zero => return Ok(short(CriticalMagnitude::Zero)),
        ThresholdConvention::Infinite => return Ok(short(CriticalMagnitude::Infinite)),
        ThresholdConvention::Compute => {}
    }
    let mut s = Search { f, v0, xi, settings, cache, evals: Vec::new() };

    // grow until something converges to one
    let mut lam = settings.lambda_start;
    while s.eval(lam)? != LimitOutcome::ConvergedToOne {
        lam *= 2.0;
        if lam > LAMBDA_LIMIT {
            let last = s.evals.last().map(|e| e.classification.outcome);
            return Err(Error::Threshold(format!(
                "no convergence to one for λ ≤ {LAMBDA_LIMIT}; L* suspected infinite (last outcome {last:?}, {} runs)",
                s.evals.len()
            )));
        }
    }
    // shrink until something stays below θ
    if s.max_constant().is_none() {
        let mut lam = s.min_one().unwrap() / 2.0;
        loop {
            if matches!(s.eval(lam)?, LimitOutcome::ConvergedToConstant { .. }) {
                break;
            }
            lam /= 2.0;
            if lam < LAMBDA_FLOOR {
                return Err(Error::Threshold(format!("every λ ≥ {LAMBDA_FLOOR} left the threshold band")));
            }
        }
    }

    for _ in 0..MAX_REFINEMENTS {
        let lo = s.max_constant().unwrap();
        let hi = s.min_one().unwrap();
        let mut und: Vec<f64> = s
            .evals
            .iter()
            .filter(|e| e.classification.outcome == LimitOutcome::UndeterminedBand && e.lambda > lo && e.lambda < hi)
            .map(|e| e.lambda)
            .collect();
        und.sort_by(|a, b| a.total_cmp(b));
        let gaps = match (und.first(), und.last()) {
            (Some(&a), Some(&b)) => vec![(lo, a), (b, hi)],
            _ => vec![(lo, hi)],
        };
        let widest = gaps.into_iter().max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0))).unwrap();
        if widest.1 - widest.0 <= settings.rel_tol * hi {
            break;
        }
        s.eval(0.5 * (widest.0 + widest.1))?;
    }

    let lo = s.max_constant().unwrap();
    let hi = s.min_one().unwrap();
    let mut undetermined: Vec<f64> = s
        .evals
        .iter()
        .filter(|e| e.classification.outcome == LimitOutcome::UndeterminedBand && e.lambda > lo && e.lambda < hi)
        .map(|e| e.lambda)
        .collect();
    undetermined.sort_by(|a, b| a.total_cmp(b));
    let mut theta_map: Vec<(f64, f64)> = s
        .evals
        .iter()
        .filter_map(|e| match e.classification.outcome {
            LimitOutcome::ConvergedToConstant { value } => Some((e.lambda, value)),
            _ => None,
        })
        .collect();
    theta_map.sort_by(|a, b| a.0.total_cmp(&b.0));
    theta_map.dedup_by(|a, b| a.0 == b.0);
    Ok(ThresholdRecord {
        xi: xi.to_vec(),
        l_star: CriticalMagnitude::Band { lo, hi },
        undetermined,
        theta_map,
        provenance: s.evals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaPoint {
    pub lambda: f64,
    pub classification: LimitClassification,
    pub cached: bool,
}

impl ThetaPoint {
    /// `θ_{ξ,λ}` when resolved below `θ`.
    pub fn value(&self) -> Option<f64> {
        match self.classification.outcome {
            LimitOutcome::ConvergedToConstant { value } => Some(value),
            _ => None,
        }
    }
}

/// Classifies every `λ` of the grid.
pub fn theta_map(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    xi: &[f64],
    lambdas: &[f64],
    settings: &ClassifySettings,
    cache: Option<&dyn ClassificationCache>,
) -> Result<Vec<ThetaPoint>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let period = PeriodVector::new(xi.to_vec(), lambda)?;
            let (classification, cached) = classify_cached(f, v0, &period, settings, cache)?;
            Ok(ThetaPoint { lambda, classification, cached })
        })
        .collect()
}

/// Averages `v0` over its first `i` torus coordinates.
pub fn homogenized_profile(v0: &PeriodicProfile, i: usize) -> Result<PeriodicProfile> {
    v0.homogenized(i)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationReport {
    pub sequence: Vec<ThresholdRecord>,
    pub limit: ThresholdRecord,
    /// `|mid L*(ξ_k) − mid L*_i(ξ̃)|`, infinite when the limit is.
    pub gaps: Vec<f64>,
    pub monotone_increasing: bool,
}

/// `L*(ξ)` along an approach sequence and `L*_i(ξ̃)` of the homogenized
/// profile.
pub fn homogenization_check(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    i: usize,
    xi_tilde: &[f64],
    approach: &[Vec<f64>],
    settings: &ThresholdSettings,
    cache: Option<&dyn ClassificationCache>,
) -> Result<HomogenizationReport> {
    let reduced = homogenized_profile(v0, i)?;
    if xi_tilde.len() != reduced.dim() {
        return Err(Error::param("xi_tilde", "length must be N − i"));
    }
    let limit = critical_magnitude(f, &reduced, xi_tilde, settings, cache)?;
    let sequence = approach
        .iter()
        .map(|xi| critical_magnitude(f, v0, xi, settings, cache))
        .collect::<Result<Vec<_>>>()?;
    let lim = limit.l_star.midpoint();
    let gaps = sequence.iter().map(|r| (r.l_star.midpoint() - lim).abs()).collect();
    let monotone_increasing = sequence.windows(2).all(|w| w[1].l_star.midpoint() >= w[0].l_star.midpoint());
    Ok(HomogenizationReport { sequence, limit, gaps, monotone_increasing })
}
