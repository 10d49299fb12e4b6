use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::FunctionOnX;

const UPSAMPLE: usize = 4;

/// Off-grid evaluation of a [`FunctionOnX`].
///
/// Each ring is resampled ×4 in angle by zero-padding its DFT, then values
/// are found by four-point Lagrange interpolation in θ and in r. Rings with
/// negative index are taken from the opposite direction,
/// `u(−r, θ) = u(r, θ + π)`. Outside `R_max` the function is taken as zero.
#[derive(Debug, Clone)]
pub struct Interpolator {
    rings: Vec<Vec<Complex64>>,
    m: usize,
    dr: f64,
    r_max: f64,
}

pub(crate) fn lagrange4(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

impl Interpolator {
    pub fn new(u: &FunctionOnX) -> Self {
        let n = u.n_theta();
        let m = UPSAMPLE * n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(m);
        let half = n / 2;
        let rings = (0..u.grid.r_values.len())
            .map(|i| {
                let mut buf = u.ring(i).to_vec();
                fwd.process(&mut buf);
                let mut big = vec![Complex64::new(0.0, 0.0); m];
                for (k, c) in buf.iter().enumerate() {
                    let c = c / n as f64;
                    if k < half {
                        big[k] = c;
                    } else if k > half {
                        big[m - (n - k)] = c;
                    } else {
                        // split the Nyquist term to keep real data real
                        big[k] = 0.5 * c;
                        big[m - k] = 0.5 * c;
                    }
                }
                inv.process(&mut big);
                big
            })
            .collect();
        Self {
            rings,
            m,
            dr: u.grid.dr(),
            r_max: u.grid.r_max,
        }
    }

    fn ring_at(&self, i: isize, p: f64) -> Complex64 {
        // p is a fractional index on the upsampled ring
        let (ring, p) = if i < 0 {
            (&self.rings[(-i) as usize], p + 0.5 * self.m as f64)
        } else if (i as usize) < self.rings.len() {
            (&self.rings[i as usize], p)
        } else {
            return Complex64::new(0.0, 0.0);
        };
        let m = self.m as isize;
        let p0 = p.floor();
        let w = lagrange4(p - p0);
        let j0 = p0 as isize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, wq) in w.iter().enumerate() {
            let j = (j0 - 1 + q as isize).rem_euclid(m) as usize;
            acc += ring[j] * *wq;
        }
        acc
    }

    /// Value at geodesic polar coordinates `(r, θ)`.
    pub fn eval(&self, r: f64, theta: f64) -> Complex64 {
        if r > self.r_max {
            return Complex64::new(0.0, 0.0);
        }
        let p = theta.rem_euclid(TAU) / TAU * self.m as f64;
        let x = r / self.dr;
        let i0 = x.floor();
        let w = lagrange4(x - i0);
        let i0 = i0 as isize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, wq) in w.iter().enumerate() {
            acc += self.ring_at(i0 - 1 + q as isize, p) * *wq;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DiscPoint, PolarGrid};

    #[test]
    fn reproduces_nodes_and_smooth_functions() {
        let g = PolarGrid::new(3.0, 96, 32).unwrap();
        let c = DiscPoint::from_polar(0.6, 1.0);
        let u = FunctionOnX::gaussian(&g, 0.5, &c);
        let it = Interpolator::new(&u);
        for &(i, j) in &[(0usize, 0usize), (5, 3), (40, 17)] {
            let (r, t) = (g.r_values[i], g.theta_values[j]);
            assert!((it.eval(r, t) - u.value(i, j)).norm() < 1e-12);
        }
        for &(r, t) in &[(0.013, 2.0), (0.37, 5.9), (1.234, 0.77), (0.6, 1.0)] {
            let x = DiscPoint::from_polar(r, t);
            let want = (-x.distance(&c).powi(2) / 0.5).exp();
            assert!((it.eval(r, t).re - want).abs() < 1e-5, "({r}, {t})");
        }
        assert_eq!(it.eval(3.5, 0.0), Complex64::new(0.0, 0.0));
    }
}
