//! Small explicit integrators for planar systems.

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step<const D: usize>(
    rhs: &impl Fn(f64, &[f64; D]) -> [f64; D],
    z: f64,
    y: &[f64; D],
    h: f64,
) -> [f64; D] {
    let k1 = rhs(z, y);
    let k2 = rhs(z + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = rhs(z + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = rhs(z + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..D {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const D: usize>(y: &[f64; D], a: f64, k: &[f64; D]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        out[i] += a * k[i];
    }
    out
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integrator with mixed absolute/relative error control.
pub struct Dopri<const D: usize, F: Fn(f64, &[f64; D]) -> [f64; D]> {
    rhs: F,
    pub z: f64,
    pub y: [f64; D],
    h: f64,
    rtol: f64,
    atol: f64,
    h_max: f64,
}

impl<const D: usize, F: Fn(f64, &[f64; D]) -> [f64; D]> Dopri<D, F> {
    /// Error per component is measured against `atol + rtol·|y|`.
    pub fn new(rhs: F, z0: f64, y0: [f64; D], rtol: f64, atol: f64, h_max: f64) -> Self {
        Dopri { rhs, z: z0, y: y0, h: 1e-3, rtol, atol, h_max }
    }

    /// Takes one accepted step and returns its size. `None` if the step size
    /// underflowed.
    pub fn step(&mut self) -> Option<f64> {
        loop {
            let h = self.h.min(self.h_max);
            let mut k = [[0.0; D]; 7];
            for s in 0..7 {
                let mut ys = self.y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for i in 0..D {
                        ys[i] += h * A[s][j] * kj[i];
                    }
                }
                k[s] = (self.rhs)(self.z + C[s] * h, &ys);
            }
            let mut y5 = self.y;
            let mut err: f64 = 0.0;
            for i in 0..D {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] += h * d5;
                let scale = self.atol + self.rtol * self.y[i].abs().max(y5[i].abs());
                err = err.max((h * (d5 - d4)).abs() / scale);
            }
            if err <= 1.0 {
                self.z += h;
                self.y = y5;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                self.h = (h * grow).min(self.h_max);
                return Some(h);
            }
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            self.h = h * shrink;
            if self.h < 1e-14 {
                return None;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_harmonic_oscillator() {
        let rhs = |_z: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut y = [1.0, 0.0];
        let h = 1e-2;
        for i in 0..628 {
            y = rk4_step(&rhs, i as f64 * h, &y, h);
        }
        assert!((y[0] - (6.28f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn dopri_exponential_decay() {
        let mut d = Dopri::new(|_z, y: &[f64; 1]| [-2.0 * y[0]], 0.0, [1.0], 1e-10, 1e-12, 0.5);
        while d.z < 3.0 {
            d.step().unwrap();
        }
        let exact = (-2.0 * d.z).exp();
        assert!((d.y[0] - exact).abs() < 1e-9);
    }
}
