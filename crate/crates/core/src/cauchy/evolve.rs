use crate::error::{Error, Result};
use crate::field::{AxisBoundary, Field, Stencil};
use crate::nonlinearity::Nonlinearity;
use crate::periodic_solver::TorusSolver;
use crate::profiles::{DataKind, InitialData};

use super::domain::TruncatedDomain;

/// Where a collar cell takes its value from.
#[derive(Clone, Copy, Debug)]
enum CollarSource {
    Plateau,
    Periodic(usize),
}

/// Solution on the truncated domain at one instant, with the companion
/// periodic solution `v_{ξ,λ}(t, ·)` on one period cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Field,
    pub v: Field,
    /// Trailing plateau value of front-like runs.
    pub plateau: f64,
}

/// Output of [`evolve_cauchy`].
#[derive(Clone, Debug)]
pub struct CauchyRecord {
    pub domain: TruncatedDomain,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub clamp_max: f64,
    pub steps: u64,
}

/// Stepper for the whole-space problem on a [`TruncatedDomain`], co-evolving
/// the periodic solution that feeds the boundary collar.
pub struct CauchyRun<'a> {
    pub f: &'a Nonlinearity,
    pub domain: TruncatedDomain,
    stencil: Stencil,
    pub u: Field,
    scratch: Field,
    pub periodic: TorusSolver<'a>,
    pub plateau: f64,
    collar: Vec<(usize, CollarSource)>,
    pub t: f64,
    pub dt: f64,
    pub clamp_max: f64,
    pub steps: u64,
}

fn periodic_stencil(data: &InitialData, domain: &TruncatedDomain) -> Stencil {
    let l = data.period.components();
    let mut h = [1.0; 3];
    for a in 0..domain.dim {
        h[a] = l[a] / domain.cells_per_period[a] as f64;
    }
    Stencil::new(domain.cells_per_period, h, [1.0; 3], [AxisBoundary::Periodic; 3], 1.0)
}

impl<'a> CauchyRun<'a> {
    pub fn new(f: &'a Nonlinearity, data: &InitialData, domain: TruncatedDomain, dt: Option<f64>) -> Result<Self> {
        if let DataKind::FrontLike { axis, offset, .. } = data.kind {
            if domain.extent(axis).0 + domain.h[axis] > offset {
                return Err(Error::param("domain", "trailing collar must lie behind the plateau edge"));
            }
        }
        let pst = periodic_stencil(data, &domain);
        let stencil = Stencil::new(domain.shape, domain.h, [1.0; 3], domain.boundary, 1.0);
        let cap = stencil.stable_dt(f).min(pst.stable_dt(f));
        let dt = match dt {
            None => cap,
            Some(d) if d > 0.0 && d <= cap * (1.0 + 1e-12) => d,
            Some(d) => return Err(Error::param("dt", format!("{d} exceeds the stability cap {cap}"))),
        };
        let v0 = data.profile.torus_field(domain.cells_per_period.iter().copied().max().unwrap_or(1));
        let v0 = reshape_companion(&v0, domain.cells_per_period)?;
        let plateau = match data.kind {
            DataKind::FrontLike { left_level, .. } => left_level,
            DataKind::AsymptoticallyPeriodic { .. } => 0.0,
        };
        let mut collar = Vec::new();
        let u = Field::from_fn(domain.shape, |c| {
            let p = domain.periodic_index(c);
            let x = domain.node(c);
            data.perturb(v0.get(p), &x[..domain.dim])
        });
        for (idx, c) in cells(domain.shape).enumerate() {
            if domain.is_collar(c) {
                let src = if domain.is_behind_collar(c) {
                    CollarSource::Plateau
                } else {
                    CollarSource::Periodic(v0.index(domain.periodic_index(c)))
                };
                collar.push((idx, src));
            }
        }
        let periodic = TorusSolver::new(f, pst, v0, Some(dt))?;
        let scratch = u.clone();
        let mut run = CauchyRun {
            f,
            domain,
            stencil,
            u,
            scratch,
            periodic,
            plateau,
            collar,
            t: 0.0,
            dt,
            clamp_max: 0.0,
            steps: 0,
        };
        run.write_collar();
        Ok(run)
    }

    fn write_collar(&mut self) {
        for &(idx, src) in &self.collar {
            self.u.data[idx] = match src {
                CollarSource::Plateau => self.plateau,
                CollarSource::Periodic(j) => self.periodic.values.data[j],
            };
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let stats = self.stencil.step(&self.u, &mut self.scratch, self.dt, self.f, self.t)?;
        std::mem::swap(&mut self.u, &mut self.scratch);
        self.periodic.step()?;
        self.plateau = (self.plateau + self.dt * self.f.eval(self.plateau)).clamp(0.0, 1.0);
        self.steps += 1;
        self.t = self.steps as f64 * self.dt;
        self.clamp_max = self.clamp_max.max(stats.clamp).max(self.periodic.clamp_max);
        if (self.t - self.periodic.t).abs() > 0.5 * self.dt {
            return Err(Error::CollarDesync { cauchy_t: self.t, periodic_t: self.periodic.t });
        }
        self.write_collar();
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { t: self.t, u: self.u.clone(), v: self.periodic.values.clone(), plateau: self.plateau }
    }
}

/// Iterates over all multi-indices of `shape` in storage order.
pub fn cells(shape: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    let [n0, n1, n2] = shape;
    (0..n0).flat_map(move |i| (0..n1).flat_map(move |j| (0..n2).map(move |k| [i, j, k])))
}

/// The torus field of a profile uses the same `n` on every active axis; the
/// companion grid has the domain's per-axis counts, which agree with it.
fn reshape_companion(v: &Field, shape: [usize; 3]) -> Result<Field> {
    if v.shape != shape {
        return Err(Error::param("cells_per_period", "companion grid does not match the profile grid"));
    }
    Ok(v.clone())
}

/// Evolves `data` on `domain` up to `t_end`, storing snapshots at the
/// requested times (rounded to the step grid).
pub fn evolve_cauchy(
    f: &Nonlinearity,
    data: &InitialData,
    domain: TruncatedDomain,
    dt: Option<f64>,
    t_end: f64,
    snapshot_times: &[f64],
) -> Result<CauchyRecord> {
    let mut run = CauchyRun::new(f, data, domain, dt)?;
    let mut times: Vec<f64> = snapshot_times.iter().copied().filter(|&t| t <= t_end + 1e-12).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    let mut snapshots = Vec::with_capacity(times.len());
    let mut next = 0;
    let half = 0.5 * run.dt;
    loop {
        while next < times.len() && times[next] <= run.t + half {
            snapshots.push(run.snapshot());
            next += 1;
        }
        if run.t + half >= t_end {
            break;
        }
        run.step()?;
    }
    Ok(CauchyRecord { domain: run.domain, dt: run.dt, snapshots, clamp_max: run.clamp_max, steps: run.steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{PeriodVector, PeriodicProfile, ProfileSpec};

    fn f04() -> Nonlinearity {
        Nonlinearity::power(1.0, 1.0, 0.4, 0.1).unwrap()
    }

    #[test]
    fn one_is_an_equilibrium() {
        let f = f04();
        let p = PeriodicProfile::new(ProfileSpec::Constant { dim: 1, value: 1.0 }).unwrap();
        let per = PeriodVector::from_components(&[2.0]).unwrap();
        let data =
            InitialData::new(p, per, DataKind::AsymptoticallyPeriodic { bump_height: 0.0, bump_radius: 1.0 }, 1.0, 1.0)
                .unwrap();
        let dom = TruncatedDomain::build(&data, 8, 0.25, 10.0, 1.0).unwrap();
        let rec = evolve_cauchy(&f, &data, dom, None, 2.0, &[2.0]).unwrap();
        assert!(rec.snapshots[0].u.data.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn periodic_data_stay_periodic() {
        let f = f04();
        let p = PeriodicProfile::new(ProfileSpec::stripe(1, 0.4)).unwrap();
        let per = PeriodVector::from_components(&[3.0]).unwrap();
        let data =
            InitialData::new(p, per, DataKind::AsymptoticallyPeriodic { bump_height: 0.0, bump_radius: 1.0 }, 1.0, 1.0)
                .unwrap();
        let dom = TruncatedDomain::build(&data, 32, 0.25, 12.0, 1.0).unwrap();
        let rec = evolve_cauchy(&f, &data, dom.clone(), None, 3.0, &[1.0, 3.0]).unwrap();
        for s in &rec.snapshots {
            let mut worst: f64 = 0.0;
            for (idx, c) in cells(dom.shape).enumerate() {
                worst = worst.max((s.u.data[idx] - s.v.get(dom.periodic_index(c))).abs());
            }
            assert!(worst < 1e-8, "{worst}");
        }
    }

    #[test]
    fn front_like_plateau_follows_the_ode() {
        let f = f04();
        let p = PeriodicProfile::new(ProfileSpec::stripe(1, 0.4)).unwrap();
        let per = PeriodVector::from_components(&[3.0]).unwrap();
        let data = InitialData::front_like(p, per, Some(&[1.0]), 0.6, 0.0, 1.0, 1.0).unwrap();
        let dom = TruncatedDomain::build(&data, 32, 0.25, 12.0, 6.0).unwrap();
        let mut run = CauchyRun::new(&f, &data, dom, None).unwrap();
        let mut z = 0.6;
        for _ in 0..200 {
            run.step().unwrap();
            z += run.dt * f.eval(z);
        }
        assert_eq!(run.plateau, z);
        assert_eq!(run.u.data[0], z);
    }
}
