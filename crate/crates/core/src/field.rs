//! Three-dimensional cell-centred grids and the explicit reaction-diffusion
//! stencil shared by the periodic and whole-space solvers.
//!
//! Problems of lower dimension, and axes along which the data are exactly
//! invariant, use extent 1; such axes carry no diffusion.

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;

/// Excursion tolerated outside `[0, 1]` before a step is declared unstable.
pub const INSTABILITY_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub shape: [usize; 3],
    pub data: Vec<f64>,
}

impl Field {
    pub fn filled(shape: [usize; 3], value: f64) -> Self {
        Field { shape, data: vec![value; shape[0] * shape[1] * shape[2]] }
    }

    pub fn from_fn(shape: [usize; 3], mut g: impl FnMut([usize; 3]) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    data.push(g([i, j, k]));
                }
            }
        }
        Field { shape, data }
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.shape[1] + c[1]) * self.shape[2] + c[2]
    }

    #[inline]
    pub fn get(&self, c: [usize; 3]) -> f64 {
        self.data[self.index(c)]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Arithmetic mean, summed pairwise for accuracy.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.data) / self.data.len() as f64
    }

    pub fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }
}

pub(crate) fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 64 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Boundary treatment of one grid axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisBoundary {
    Periodic,
    /// First and last cells are Dirichlet data written by the caller.
    Collar,
}

/// Summary of one explicit step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub min: f64,
    pub max: f64,
    /// Largest distance a pre-clamp value lay outside `[0, 1]`.
    pub clamp: f64,
}

/// `∂t v = Σ coef_i ∂²_i v + weight f(v)` discretised with second-order
/// centred differences and forward Euler.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub shape: [usize; 3],
    pub h: [f64; 3],
    pub coef: [f64; 3],
    pub boundary: [AxisBoundary; 3],
    pub weight: f64,
    prev: [Vec<usize>; 3],
    next: [Vec<usize>; 3],
    lo_off: [Vec<isize>; 3],
    hi_off: [Vec<isize>; 3],
    upd: [Vec<bool>; 3],
    inv_h2: [f64; 3],
}

impl Stencil {
    pub fn new(shape: [usize; 3], h: [f64; 3], coef: [f64; 3], boundary: [AxisBoundary; 3], weight: f64) -> Self {
        let mut prev: [Vec<usize>; 3] = Default::default();
        let mut next: [Vec<usize>; 3] = Default::default();
        for a in 0..3 {
            let n = shape[a];
            prev[a] = (0..n).map(|i| if i == 0 { n - 1 } else { i - 1 }).collect();
            next[a] = (0..n).map(|i| if i + 1 == n { 0 } else { i + 1 }).collect();
        }
        // signed neighbour offsets in storage order and update masks
        let strides = [shape[1] * shape[2], shape[2], 1];
        let mut lo_off: [Vec<isize>; 3] = Default::default();
        let mut hi_off: [Vec<isize>; 3] = Default::default();
        let mut upd: [Vec<bool>; 3] = Default::default();
        let mut inv_h2 = [0.0; 3];
        for a in 0..3 {
            let n = shape[a];
            let st = strides[a] as isize;
            let live = n > 1;
            inv_h2[a] = if live { coef[a] / (h[a] * h[a]) } else { 0.0 };
            lo_off[a] = (0..n).map(|i| if live { (prev[a][i] as isize - i as isize) * st } else { 0 }).collect();
            hi_off[a] = (0..n).map(|i| if live { (next[a][i] as isize - i as isize) * st } else { 0 }).collect();
            upd[a] = (0..n).map(|i| boundary[a] == AxisBoundary::Periodic || n == 1 || (i > 0 && i + 1 < n)).collect();
        }
        Stencil { shape, h, coef, boundary, weight, prev, next, lo_off, hi_off, upd, inv_h2 }
    }

    /// Axes with more than one cell.
    pub fn active_axes(&self) -> Vec<usize> {
        (0..3).filter(|&a| self.shape[a] > 1).collect()
    }

    /// Diffusive stability cap `0.25 / (N_active · max_i coef_i / h_i²)`,
    /// combined with the reaction cap `0.5 / (weight · M)`.
    pub fn stable_dt(&self, f: &Nonlinearity) -> f64 {
        let act = self.active_axes();
        let mut dt = f64::INFINITY;
        if !act.is_empty() {
            let worst = act
                .iter()
                .map(|&a| self.coef[a] / (self.h[a] * self.h[a]))
                .fold(0.0, f64::max);
            dt = 0.25 / (act.len() as f64 * worst);
        }
        if self.weight > 0.0 {
            dt = dt.min(0.5 / (self.weight * f.lipschitz()));
        }
        dt
    }

    /// Discrete diffusion operator at cell `c`.
    #[inline]
    pub fn laplacian(&self, v: &Field, c: [usize; 3]) -> f64 {
        let centre = v.get(c);
        let mut acc = 0.0;
        for a in 0..3 {
            if self.shape[a] == 1 {
                continue;
            }
            let mut lo = c;
            let mut hi = c;
            lo[a] = self.prev[a][c[a]];
            hi[a] = self.next[a][c[a]];
            acc += self.coef[a] * (v.get(lo) - 2.0 * centre + v.get(hi)) / (self.h[a] * self.h[a]);
        }
        acc
    }

    /// One forward-Euler step from `src` into `dst`. Collar cells are copied
    /// unchanged. Values are clamped to `[0, 1]`; an excursion beyond the
    /// instability margin aborts.
    pub fn step(&self, src: &Field, dst: &mut Field, dt: f64, f: &Nonlinearity, t: f64) -> Result<StepStats> {
        debug_assert_eq!(src.shape, self.shape);
        let [n0, n1, n2] = self.shape;
        let (mut lo, mut hi, mut below, mut above) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
        let weight = self.weight;
        let [c0, c1, c2] = self.inv_h2;
        let (l0, l1, l2) = (&self.lo_off[0][..], &self.lo_off[1][..], &self.lo_off[2][..]);
        let (h0, h1, h2) = (&self.hi_off[0][..], &self.hi_off[1][..], &self.hi_off[2][..]);
        let (u0, u1, u2) = (&self.upd[0][..], &self.upd[1][..], &self.upd[2][..]);
        let data = &src.data[..];
        let out = &mut dst.data[..];
        for i in 0..n0 {
            for j in 0..n1 {
                let row = (i * n1 + j) * n2;
                let row_live = u0[i] && u1[j];
                for k in 0..n2 {
                    let idx = row + k;
                    let u = data[idx];
                    let mut w = u;
                    if row_live && u2[k] {
                        let at = |o: isize| data[(idx as isize + o) as usize];
                        let lap = c0 * (at(l0[i]) - 2.0 * u + at(h0[i]))
                            + c1 * (at(l1[j]) - 2.0 * u + at(h1[j]))
                            + c2 * (at(l2[k]) - 2.0 * u + at(h2[k]));
                        w = u + dt * (lap + weight * f.eval(u));
                        if w < 0.0 {
                            if -w > below {
                                below = -w;
                            }
                            w = 0.0;
                        } else if w > 1.0 {
                            if w - 1.0 > above {
                                above = w - 1.0;
                            }
                            w = 1.0;
                        }
                    }
                    if w < lo {
                        lo = w;
                    }
                    if w > hi {
                        hi = w;
                    }
                    out[idx] = w;
                }
            }
        }
        // report the worst excursion
        if below > INSTABILITY_MARGIN || above > INSTABILITY_MARGIN {
            let value = if below >= above { -below } else { 1.0 + above };
            return Err(Error::Instability { t: t + dt, value });
        }
        let stats = StepStats { min: lo, max: hi, clamp: below.max(above) };
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_f() -> Nonlinearity {
        Nonlinearity::power(1.0, 1.0, 0.3, 0.1).unwrap()
    }

    #[test]
    fn constant_field_below_threshold_is_stationary() {
        let f = linear_f();
        let s = Stencil::new([16, 8, 1], [1.0 / 16.0, 1.0 / 8.0, 1.0], [1.0, 2.0, 1.0], [AxisBoundary::Periodic; 3], 4.0);
        let src = Field::filled([16, 8, 1], 0.2);
        let mut dst = src.clone();
        let dt = s.stable_dt(&f);
        s.step(&src, &mut dst, dt, &f, 0.0).unwrap();
        assert_eq!(src, dst);
    }

    #[test]
    fn periodic_diffusion_conserves_sum() {
        let f = linear_f();
        let s = Stencil::new([32, 1, 1], [1.0 / 32.0, 1.0, 1.0], [1.0; 3], [AxisBoundary::Periodic; 3], 0.0);
        let mut a = Field::from_fn([32, 1, 1], |c| if c[0] < 10 { 0.25 } else { 0.05 });
        let mut b = a.clone();
        let m0 = a.mean();
        let dt = s.stable_dt(&f);
        for n in 0..500 {
            s.step(&a, &mut b, dt, &f, n as f64 * dt).unwrap();
            std::mem::swap(&mut a, &mut b);
        }
        assert!((a.mean() - m0).abs() < 1e-14);
        assert!(a.max() - a.min() < 0.2);
    }

    #[test]
    fn collar_cells_are_left_untouched() {
        let f = linear_f();
        let s = Stencil::new([10, 1, 1], [0.1, 1.0, 1.0], [1.0; 3], [AxisBoundary::Collar, AxisBoundary::Periodic, AxisBoundary::Periodic], 1.0);
        let src = Field::from_fn([10, 1, 1], |c| if c[0] == 0 { 0.9 } else { 0.1 });
        let mut dst = src.clone();
        s.step(&src, &mut dst, s.stable_dt(&f), &f, 0.0).unwrap();
        assert_eq!(dst.data[0], 0.9);
        assert_eq!(dst.data[9], 0.1);
        assert!(dst.data[1] < 0.9 && dst.data[1] > 0.1);
    }

    #[test]
    fn oversized_step_is_detected() {
        let f = linear_f();
        let s = Stencil::new([8, 1, 1], [0.125, 1.0, 1.0], [1.0; 3], [AxisBoundary::Periodic; 3], 0.0);
        let src = Field::from_fn([8, 1, 1], |c| (c[0] % 2) as f64);
        let mut dst = src.clone();
        let err = s.step(&src, &mut dst, 1.0, &f, 0.0).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }));
    }
}
