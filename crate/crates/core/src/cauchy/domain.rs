use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::AxisBoundary;
use crate::profiles::{DataKind, InitialData};

/// Periods of margin added beyond the distance the fastest front can cover.
pub const MARGIN_PERIODS: f64 = 10.0;
/// `c_max = SPEED_FACTOR · c*(θ)`.
pub const SPEED_FACTOR: f64 = 1.5;

/// A box of `R^N` with cell centres `lo + (k + ½) h`.
///
/// Along collar axes the outermost cells carry Dirichlet data; along wrap
/// axes the box spans whole periods and is closed periodically. `lo` is an
/// integer multiple of `h` on every axis along which the periodic limit
/// varies, so that cell `k` covers the periodic cell `(k − offset) mod m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDomain {
    pub dim: usize,
    pub shape: [usize; 3],
    pub lo: [f64; 3],
    pub h: [f64; 3],
    pub boundary: [AxisBoundary; 3],
    /// Cells per period of the companion periodic grid (1 on axes where the
    /// periodic limit is constant).
    pub cells_per_period: [usize; 3],
    /// Number of cells between `lo` and the origin.
    pub offset: [usize; 3],
    /// Axis of propagation for front-like data.
    pub front_axis: Option<usize>,
}

impl TruncatedDomain {
    /// Smallest admissible half-width `c_max T + 10 max_i L_i`.
    pub fn required_half_width(c_star_theta: f64, t_end: f64, period: &[f64]) -> f64 {
        let lmax = period.iter().cloned().fold(0.0, f64::max);
        SPEED_FACTOR * c_star_theta * t_end + MARGIN_PERIODS * lmax
    }

    /// Builds the box for `data`. `m` cells per period along axes on which the
    /// periodic limit varies; spacing `h_free` on the remaining active axes.
    ///
    /// Asymptotically periodic data get `[−W, W]` on every axis. Front-like
    /// data get `[−behind, ahead]` along the propagation axis and a single
    /// period, closed periodically, across it.
    pub fn build(data: &InitialData, m: usize, h_free: f64, half_width: f64, behind: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::param("cells_per_period", "need at least two cells per period"));
        }
        if !(half_width > 0.0 && behind > 0.0 && h_free > 0.0) {
            return Err(Error::param("domain", "extents and spacing must be positive"));
        }
        let dim = data.profile.dim();
        let l = data.period.components();
        let act = data.profile.active_axes();
        let mut d = TruncatedDomain {
            dim,
            shape: [1; 3],
            lo: [0.0; 3],
            h: [1.0; 3],
            boundary: [AxisBoundary::Periodic; 3],
            cells_per_period: [1; 3],
            offset: [0; 3],
            front_axis: None,
        };
        let front_axis = match data.kind {
            DataKind::FrontLike { axis, .. } => Some(axis),
            DataKind::AsymptoticallyPeriodic { .. } => None,
        };
        d.front_axis = front_axis;
        for a in 0..dim {
            let varies = act.contains(&a);
            let h = if varies { l[a] / m as f64 } else { h_free };
            d.h[a] = h;
            if varies {
                d.cells_per_period[a] = m;
            }
            match front_axis {
                Some(fa) if fa != a => {
                    // transverse: one period, or a single cell if nothing varies
                    d.boundary[a] = AxisBoundary::Periodic;
                    if varies {
                        d.shape[a] = m;
                    } else {
                        d.shape[a] = 1;
                        d.h[a] = l[a];
                    }
                }
                Some(_) => {
                    let kb = (behind / h).ceil() as usize + 1;
                    let ka = (half_width / h).ceil() as usize + 1;
                    d.boundary[a] = AxisBoundary::Collar;
                    d.shape[a] = kb + ka;
                    d.offset[a] = kb;
                    d.lo[a] = -(kb as f64) * h;
                }
                None => {
                    let k = (half_width / h).ceil() as usize + 1;
                    d.boundary[a] = AxisBoundary::Collar;
                    d.shape[a] = 2 * k;
                    d.offset[a] = k;
                    d.lo[a] = -(k as f64) * h;
                }
            }
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, c: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.lo[a] + (c[a] as f64 + 0.5) * self.h[a];
        }
        x
    }

    /// Lower and upper end of the box along `axis`.
    pub fn extent(&self, axis: usize) -> (f64, f64) {
        (self.lo[axis], self.lo[axis] + self.shape[axis] as f64 * self.h[axis])
    }

    /// Index in the companion periodic grid.
    pub fn periodic_index(&self, c: [usize; 3]) -> [usize; 3] {
        let mut p = [0; 3];
        for a in 0..3 {
            let m = self.cells_per_period[a];
            if m > 1 {
                let k = c[a] as i64 - self.offset[a] as i64;
                p[a] = k.rem_euclid(m as i64) as usize;
            }
        }
        p
    }

    pub fn is_collar(&self, c: [usize; 3]) -> bool {
        (0..self.dim).any(|a| self.boundary[a] == AxisBoundary::Collar && (c[a] == 0 || c[a] + 1 == self.shape[a]))
    }

    /// Whether the cell lies on the trailing collar of a front-like run.
    pub fn is_behind_collar(&self, c: [usize; 3]) -> bool {
        match self.front_axis {
            Some(a) => c[a] == 0,
            None => false,
        }
    }

    /// Half-width available in every direction for radial runs, or the
    /// distance ahead for front-like runs.
    pub fn reach(&self) -> f64 {
        match self.front_axis {
            Some(a) => self.extent(a).1,
            None => (0..self.dim).map(|a| self.extent(a).1).fold(f64::INFINITY, f64::min),
        }
    }
}
