use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodic_solver::least_squares;

use super::domain::TruncatedDomain;
use super::evolve::{cells, Snapshot};

/// Fraction of the series used by the speed fit.
pub const DEFAULT_FIT_FRACTION: f64 = 0.5;
/// Local persistence requires `u ≥ 1 − PERSISTENCE_SLACK` on the ball.
pub const PERSISTENCE_SLACK: f64 = 1e-2;

/// Radius of the level set along one ray from the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RayRadius {
    /// The solution is below the level at the origin.
    Absent,
    /// First downward crossing, linearly interpolated.
    At(f64),
    /// No crossing before the collar.
    Escaped,
}

fn ray(domain: &TruncatedDomain, snap: &Snapshot, axis: usize, forward: bool, level: f64) -> RayRadius {
    // start at the cell adjacent to the origin on the chosen side
    let mut c = [0usize; 3];
    for a in 0..3 {
        c[a] = if domain.shape[a] > 1 { domain.offset[a] } else { 0 };
    }
    let n = domain.shape[axis];
    let start = if forward { domain.offset[axis] } else { domain.offset[axis] - 1 };
    c[axis] = start;
    let mut prev_val = snap.u.get(c);
    if prev_val < level {
        return RayRadius::Absent;
    }
    let mut prev_x = domain.node(c)[axis].abs();
    let mut k = start;
    loop {
        let next = if forward { k + 1 } else { k.wrapping_sub(1) };
        if next >= n || next == 0 || next + 1 == n {
            return RayRadius::Escaped;
        }
        c[axis] = next;
        let val = snap.u.get(c);
        let x = domain.node(c)[axis].abs();
        if val < level {
            let s = (prev_val - level) / (prev_val - val);
            return RayRadius::At(prev_x + s * (x - prev_x));
        }
        prev_val = val;
        prev_x = x;
        k = next;
    }
}

/// Radii along the `2N` coordinate rays through the origin.
pub fn ray_radii(domain: &TruncatedDomain, snap: &Snapshot, level: f64) -> Vec<RayRadius> {
    let mut out = Vec::new();
    for a in 0..domain.dim {
        if domain.shape[a] < 3 {
            continue;
        }
        out.push(ray(domain, snap, a, true, level));
        out.push(ray(domain, snap, a, false, level));
    }
    out
}

/// Minimum over non-collar cells.
pub fn interior_min(domain: &TruncatedDomain, snap: &Snapshot) -> f64 {
    cells(domain.shape)
        .enumerate()
        .filter(|(_, c)| !domain.is_collar(*c))
        .map(|(i, _)| snap.u.data[i])
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadEstimate {
    pub level: f64,
    /// `(t, R(t))`; `R` is the mean of the two one-sided radii in 1-D and the
    /// largest ray radius otherwise.
    pub series: Vec<(f64, f64)>,
    pub speed: f64,
    /// Root-mean-square deviation from the fitted line.
    pub residual: f64,
    pub fit_start: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum SpreadOutcome {
    Speed(SpreadEstimate),
    /// `u` exceeds the level on the whole domain from time `t` on.
    Uniform { t: f64, min: f64 },
    /// The level is not attained at the origin at the final time.
    NotAttained { t: f64 },
}

/// Level-set speed over the trailing `fit_fraction` of the snapshots.
pub fn estimate_spreading_speed(
    domain: &TruncatedDomain,
    snaps: &[Snapshot],
    level: f64,
    fit_fraction: f64,
) -> Result<SpreadOutcome> {
    let last = snaps.last().ok_or_else(|| Error::Precondition("no snapshots".into()))?;
    if interior_min(domain, last) >= level {
        let t = snaps
            .iter()
            .rev()
            .take_while(|s| interior_min(domain, s) >= level)
            .last()
            .map(|s| s.t)
            .unwrap_or(last.t);
        return Ok(SpreadOutcome::Uniform { t, min: interior_min(domain, last) });
    }
    let t_end = last.t;
    let t_fit = t_end - fit_fraction * (t_end - snaps[0].t);
    let mut series = Vec::new();
    for s in snaps {
        let radii = ray_radii(domain, s, level);
        if radii.iter().all(|r| *r == RayRadius::Absent) {
            if s.t >= t_fit {
                return Ok(SpreadOutcome::NotAttained { t: s.t });
            }
            continue;
        }
        if radii.contains(&RayRadius::Escaped) {
            if s.t >= t_fit {
                return Err(Error::DomainTooSmall { t: s.t });
            }
            continue;
        }
        let vals: Vec<f64> = radii
            .iter()
            .filter_map(|r| match r {
                RayRadius::At(x) => Some(*x),
                _ => None,
            })
            .collect();
        let r = if domain.dim == 1 {
            vals.iter().sum::<f64>() / vals.len() as f64
        } else {
            vals.iter().cloned().fold(0.0, f64::max)
        };
        series.push((s.t, r));
    }
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 >= t_fit).collect();
    if window.len() < 3 {
        return Err(Error::Precondition("fewer than three snapshots in the fit window".into()));
    }
    let (speed, icpt) = least_squares(&window);
    let residual =
        (window.iter().map(|(t, r)| (r - speed * t - icpt).powi(2)).sum::<f64>() / window.len() as f64).sqrt();
    Ok(SpreadOutcome::Speed(SpreadEstimate { level, series, speed, residual, fit_start: t_fit }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub holds: bool,
    pub radius: f64,
    /// `(t, min over the ball)` for the snapshots examined.
    pub minima: Vec<(f64, f64)>,
}

/// Minimum of `u` over `‖x‖ ≤ radius` on the final quarter of the snapshot
/// times must reach `1 − 1e−2`. A finite-horizon proxy for local uniform
/// convergence to one.
pub fn check_local_persistence(domain: &TruncatedDomain, snaps: &[Snapshot], radius: f64) -> PersistenceReport {
    let mut minima = Vec::new();
    if let (Some(first), Some(last)) = (snaps.first(), snaps.last()) {
        let t0 = last.t - 0.25 * (last.t - first.t);
        let ball: Vec<usize> = cells(domain.shape)
            .enumerate()
            .filter(|(_, c)| {
                let x = domain.node(*c);
                x[..domain.dim].iter().map(|a| a * a).sum::<f64>().sqrt() <= radius
            })
            .map(|(i, _)| i)
            .collect();
        for s in snaps.iter().filter(|s| s.t >= t0) {
            let m = ball.iter().map(|&i| s.u.data[i]).fold(f64::INFINITY, f64::min);
            minima.push((s.t, m));
        }
    }
    let holds = !minima.is_empty() && minima.iter().all(|&(_, m)| m >= 1.0 - PERSISTENCE_SLACK);
    PersistenceReport { holds, radius, minima }
}
