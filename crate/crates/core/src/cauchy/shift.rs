use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front_solver::FrontProfile;

use super::domain::TruncatedDomain;
use super::evolve::Snapshot;

/// `m(t, y)` on every transverse grid line of a front-like run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontShift {
    pub axis: usize,
    pub level: f64,
    pub speed: f64,
    pub times: Vec<f64>,
    /// Transverse coordinates of each line (the propagation coordinate is 0).
    pub lines: Vec<[f64; 3]>,
    /// `m[k][j]` at `times[k]` on `lines[j]`; `None` where no crossing exists.
    pub m: Vec<Vec<Option<f64>>>,
}

impl FrontShift {
    /// `max_j |m(t_k, y_j) − m(t_k, y_0)|` over lines with a crossing.
    pub fn transverse_spread(&self, k: usize) -> Option<f64> {
        let row = &self.m[k];
        let base = row.first().copied().flatten()?;
        Some(row.iter().flatten().map(|x| (x - base).abs()).fold(0.0, f64::max))
    }
}

fn transverse_lines(domain: &TruncatedDomain, axis: usize) -> Vec<[usize; 3]> {
    let mut shape = domain.shape;
    shape[axis] = 1;
    super::evolve::cells(shape).collect()
}

/// First crossing of `level` from the left along one line, by linear
/// interpolation between nodes.
pub fn first_crossing(domain: &TruncatedDomain, snap: &Snapshot, axis: usize, base: [usize; 3], level: f64) -> Option<f64> {
    let mut c = base;
    c[axis] = 0;
    let mut prev = snap.u.get(c);
    if prev <= level {
        return None;
    }
    for k in 1..domain.shape[axis] {
        c[axis] = k;
        let val = snap.u.get(c);
        if val <= level {
            let x1 = domain.node(c)[axis];
            let x0 = x1 - domain.h[axis];
            let s = (prev - level) / (prev - val);
            return Some(x0 + s * (x1 - x0));
        }
        prev = val;
    }
    None
}

/// `m(t, y) = (first crossing of level) − c_ref t` for every snapshot.
pub fn front_shift(domain: &TruncatedDomain, snaps: &[Snapshot], c_ref: f64, level: f64) -> Result<FrontShift> {
    let axis = domain.front_axis.ok_or_else(|| Error::Precondition("front shift needs a front-like run".into()))?;
    let bases = transverse_lines(domain, axis);
    let lines = bases
        .iter()
        .map(|b| {
            let mut x = domain.node(*b);
            x[axis] = 0.0;
            x
        })
        .collect();
    let mut m = Vec::with_capacity(snaps.len());
    for s in snaps {
        m.push(
            bases
                .iter()
                .map(|b| first_crossing(domain, s, axis, *b, level).map(|z| z - c_ref * s.t))
                .collect(),
        );
    }
    Ok(FrontShift { axis, level, speed: c_ref, times: snaps.iter().map(|s| s.t).collect(), lines, m })
}

/// `e(t) = sup |u(t, x) − U(x·e − c t − m(t, y))|` over non-collar cells.
///
/// The profile is normalised so that `U(0)` equals the shift level, hence
/// `c t + m(t, y)` is where `U` is centred on line `y`.
pub fn profile_convergence_error(
    domain: &TruncatedDomain,
    snaps: &[Snapshot],
    front: &FrontProfile,
    shift: &FrontShift,
) -> Result<Vec<(f64, f64)>> {
    let axis = shift.axis;
    let bases = transverse_lines(domain, axis);
    let mut out = Vec::with_capacity(snaps.len());
    for (k, s) in snaps.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for (j, b) in bases.iter().enumerate() {
            let Some(m) = shift.m[k][j] else {
                return Err(Error::Precondition(format!("no level crossing on line {j} at t = {}", s.t)));
            };
            let centre = shift.speed * s.t + m;
            let mut c = *b;
            for i in 1..domain.shape[axis] - 1 {
                c[axis] = i;
                let z = domain.node(c)[axis] - centre;
                worst = worst.max((s.u.get(c) - front.eval(z)).abs());
            }
        }
        out.push((s.t, worst));
    }
    Ok(out)
}
