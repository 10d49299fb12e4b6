//! Helgason transform on the polar grid.
//!
//! For a point at radius r and angle θ, `e^{(ρ−iλ)A(x,b)} = P^{ρ−iλ}` with
//! the Poisson kernel `P = (1−t²)/(1 − 2t cos(θ−β) + t²)`, `t = tanh(r/2)`.
//! The b-dependence is therefore a circular correlation in angle, which is
//! done ring by ring in Fourier space. Kernel Fourier coefficients come from
//! an oversampled ring so that the sharply peaked kernels on outer rings do
//! not alias.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{Chamber, FunctionOnX, SpectralGrid, SpectralMeasure, SpectralTable, INV_SQRT_2PI};
use crate::error::Checked;
use crate::geometry::{PolarGrid, RHO};

const MAX_KERNEL_SAMPLES: usize = 1 << 16;
const KERNEL_TAIL_TOL: f64 = 1e-13;

struct RingKernel {
    m: usize,
    ln_p: Vec<f64>,
    p_rho: Vec<f64>,
}

impl RingKernel {
    fn sample(t: f64, m: usize) -> Self {
        let mut ln_p = Vec::with_capacity(m);
        let mut p_rho = Vec::with_capacity(m);
        for l in 0..m {
            let phi = TAU * l as f64 / m as f64;
            let p = (1.0 - t * t) / (1.0 - 2.0 * t * phi.cos() + t * t);
            ln_p.push(p.ln());
            p_rho.push(p.powf(RHO));
        }
        Self { m, ln_p, p_rho }
    }

    /// Fourier coefficients `k_n` (index `n mod m`) of `P^{ρ − iλ}`.
    fn coefficients(&self, lambda: f64, fft: &dyn Fft<f64>) -> Vec<Complex64> {
        let scale = 1.0 / self.m as f64;
        let mut buf: Vec<Complex64> = self
            .ln_p
            .iter()
            .zip(&self.p_rho)
            .map(|(lp, pr)| {
                let (s, c) = (lambda * lp).sin_cos();
                Complex64::new(pr * c * scale, -pr * s * scale)
            })
            .collect();
        fft.process(&mut buf);
        buf
    }

    fn tail_ratio(&self, lambda: f64, fft: &dyn Fft<f64>) -> f64 {
        let k = self.coefficients(lambda, fft);
        let max = k.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let lo = self.m / 2 - self.m / 8;
        let tail = k[lo..=self.m / 2 + self.m / 8]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if max > 0.0 {
            tail / max
        } else {
            0.0
        }
    }
}

pub(crate) struct FftCache {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

impl FftCache {
    pub(crate) fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            forward: HashMap::new(),
            inverse: HashMap::new(),
        }
    }

    pub(crate) fn forward(&mut self, n: usize) -> Arc<dyn Fft<f64>> {
        let p = &mut self.planner;
        self.forward
            .entry(n)
            .or_insert_with(|| p.plan_fft_forward(n))
            .clone()
    }

    pub(crate) fn inverse(&mut self, n: usize) -> Arc<dyn Fft<f64>> {
        let p = &mut self.planner;
        self.inverse
            .entry(n)
            .or_insert_with(|| p.plan_fft_inverse(n))
            .clone()
    }
}

/// Kernel tables for every ring, sized for modes `|n| ≤ band/2` and
/// spectral parameters up to `lambda_max`.
struct Kernels {
    rings: Vec<RingKernel>,
    plans: HashMap<usize, Arc<dyn Fft<f64>>>,
}

impl Kernels {
    fn build(grid: &PolarGrid, band: usize, lambda_max: f64, cache: &mut FftCache) -> Self {
        let mut rings = Vec::with_capacity(grid.r_values.len());
        let mut plans = HashMap::new();
        let base = (2 * band).next_power_of_two();
        let mut m = base;
        for &r in &grid.r_values {
            let t = (0.5 * r).tanh();
            // outer rings need at least as many samples as inner ones
            loop {
                let fft = cache.forward(m);
                let k = RingKernel::sample(t, m);
                let ok = m >= MAX_KERNEL_SAMPLES
                    || (k.tail_ratio(lambda_max, fft.as_ref()) < KERNEL_TAIL_TOL
                        && k.tail_ratio(0.0, fft.as_ref()) < KERNEL_TAIL_TOL);
                if ok {
                    plans.insert(m, fft);
                    rings.push(k);
                    break;
                }
                m *= 2;
            }
        }
        Self { rings, plans }
    }

    fn coefficients(&self, i: usize, lambda: f64) -> Vec<Complex64> {
        let k = &self.rings[i];
        k.coefficients(lambda, self.plans[&k.m].as_ref())
    }

    fn m(&self, i: usize) -> usize {
        self.rings[i].m
    }
}

fn signed_mode(idx: usize, n: usize) -> isize {
    if idx < n / 2 {
        idx as isize
    } else {
        idx as isize - n as isize
    }
}

fn wrap(n: isize, m: usize) -> usize {
    n.rem_euclid(m as isize) as usize
}

/// Helgason transform on the positive chamber of a midpoint grid.
pub fn helgason_forward(u: &FunctionOnX, grid: &SpectralGrid) -> Checked<SpectralTable> {
    helgason_forward_at(
        u,
        &grid.lambda_values(),
        grid.dlambda(),
        Chamber::Plus,
        grid.n_b,
    )
}

/// `F u(s·λ_j, b_k) = ∫_X e^{(−isλ_j + ρ)A(x, b_k)} u(x) dx` for arbitrary
/// positive `lambda_values`.
pub fn helgason_forward_at(
    u: &FunctionOnX,
    lambda_values: &[f64],
    lambda_weight: f64,
    chamber: Chamber,
    n_b: usize,
) -> Checked<SpectralTable> {
    let mut warnings = Vec::new();
    if let Some(w) = u.support_leakage() {
        warnings.push(w);
    }
    let grid = &u.grid;
    let nt = grid.n_theta();
    let sign = chamber.sign();
    let lambda_max = lambda_values.iter().cloned().fold(0.0, f64::max);
    let mut cache = FftCache::new();
    let kernels = Kernels::build(grid, nt.max(n_b), lambda_max, &mut cache);
    let fwd_n = cache.forward(nt);
    let inv_b = cache.inverse(n_b);

    let dtheta = grid.dtheta();
    let coeffs: Vec<Vec<Complex64>> = (0..grid.r_values.len())
        .map(|i| {
            let mut buf = u.ring(i).to_vec();
            fwd_n.process(&mut buf);
            let s = TAU * grid.ring_weights[i] / dtheta / nt as f64;
            buf.iter().map(|c| c * s).collect()
        })
        .collect();

    let columns: Vec<Vec<Complex64>> = lambda_values
        .par_iter()
        .map(|&lam| {
            let mut acc = vec![Complex64::new(0.0, 0.0); nt];
            for (i, a) in coeffs.iter().enumerate() {
                if grid.ring_weights[i] == 0.0 {
                    continue;
                }
                let k = kernels.coefficients(i, sign * lam);
                let m = kernels.m(i);
                for (idx, acc_n) in acc.iter_mut().enumerate() {
                    let n = signed_mode(idx, nt);
                    *acc_n += a[idx] * k[wrap(-n, m)];
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); n_b];
            for (idx, v) in acc.iter().enumerate() {
                out[wrap(signed_mode(idx, nt), n_b)] += v;
            }
            inv_b.process(&mut out);
            out
        })
        .collect();

    let mut table = SpectralTable::zeros(lambda_values.to_vec(), lambda_weight, chamber, n_b);
    let nl = lambda_values.len();
    for (j, col) in columns.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            table.values[k * nl + j] = *v;
        }
    }
    Checked::with(table, warnings)
}

/// Inversion `u(x) = ∬ e^{(iλ+ρ)A(x,b)} F u(λ,b) κ|c(λ)|⁻² dλ db` over the
/// table's chamber, sampled on `grid`.
pub fn helgason_inverse(table: &SpectralTable, grid: &PolarGrid) -> Checked<FunctionOnX> {
    let measure = SpectralMeasure::hyperbolic_plane();
    let mut warnings = Vec::new();
    if let Some(w) = table.truncation_warning() {
        warnings.push(w);
    }
    let nt = grid.n_theta();
    let n_b = table.n_b();
    let nl = table.n_lambda();
    let band = nt.min(n_b);
    let lambda_max = table.lambda_values.iter().cloned().fold(0.0, f64::max);
    let mut cache = FftCache::new();
    let kernels = Kernels::build(grid, nt.max(n_b), lambda_max, &mut cache);
    let fwd_b = cache.forward(n_b);
    let inv_n = cache.inverse(nt);

    // b-Fourier coefficients of each λ column, weighted by the measure.
    let coeffs: Vec<Vec<Complex64>> = (0..nl)
        .map(|j| {
            let lam = table.lambda(j);
            let w = measure.density(lam) * table.lambda_weight * INV_SQRT_2PI / n_b as f64;
            let mut buf: Vec<Complex64> = (0..n_b).map(|k| table.value(j, k) * w).collect();
            fwd_b.process(&mut buf);
            buf
        })
        .collect();

    let modes: Vec<isize> = (0..band).map(|idx| signed_mode(idx, band)).collect();
    let rings: Vec<Vec<Complex64>> = (0..grid.r_values.len())
        .into_par_iter()
        .map(|i| {
            let m = kernels.m(i);
            let mut a = vec![Complex64::new(0.0, 0.0); band];
            for (j, f) in coeffs.iter().enumerate() {
                let k = kernels.coefficients(i, table.lambda(j));
                for (idx, &n) in modes.iter().enumerate() {
                    a[idx] += f[wrap(n, n_b)] * k[wrap(n, m)].conj();
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); nt];
            for (idx, &n) in modes.iter().enumerate() {
                out[wrap(n, nt)] += a[idx];
            }
            inv_n.process(&mut out);
            out
        })
        .collect();

    let values = rings.into_iter().flatten().collect();
    Checked::with(
        FunctionOnX {
            grid: grid.clone(),
            values,
        },
        warnings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{busemann, BoundaryPoint, DiscPoint};
    use crate::transforms::spherical_function;

    fn small_grid() -> (PolarGrid, SpectralGrid) {
        (
            PolarGrid::new(3.2, 96, 32).unwrap(),
            SpectralGrid::new(14.0, 112, 32).unwrap(),
        )
    }

    #[test]
    fn zero_in_zero_out() {
        let (g, s) = small_grid();
        let f = helgason_forward(&FunctionOnX::zeros(&g), &s).value;
        assert_eq!(f.max_abs(), 0.0);
        assert_eq!(helgason_inverse(&f, &g).value.max_abs(), 0.0);
    }

    #[test]
    fn matches_direct_quadrature() {
        // Enough angles that the node sum resolves both data and kernel.
        let g = PolarGrid::new(2.0, 32, 128).unwrap();
        let c = DiscPoint::from_polar(0.4, 0.3);
        let u = FunctionOnX::gaussian(&g, 0.5, &c);
        let lam = [0.7, 3.1];
        let f = helgason_forward_at(&u, &lam, 1.0, Chamber::Plus, 16).value;
        for (j, &l) in lam.iter().enumerate() {
            for k in [0usize, 5, 11] {
                let b = BoundaryPoint::new(f.b_values[k]);
                let mut direct = Complex64::new(0.0, 0.0);
                for i in 0..g.r_values.len() {
                    for jj in 0..g.n_theta() {
                        let a = busemann(&g.point(i, jj), &b).unwrap();
                        direct += Complex64::new(RHO * a, -l * a).exp()
                            * u.value(i, jj)
                            * g.weight(i, jj);
                    }
                }
                let err = (f.value(j, k) - direct).norm();
                assert!(
                    err < 1e-10 * direct.norm().max(1e-3),
                    "λ={l} k={k}: {err:e} {direct}"
                );
            }
        }
    }

    #[test]
    fn radial_input_gives_spherical_transform() {
        let (g, s) = small_grid();
        let u = FunctionOnX::gaussian(&g, 0.5, &DiscPoint::ORIGIN);
        let f = helgason_forward(&u, &s).value;
        assert!(f.b_variation() < 1e-8);
        for j in [0usize, 10, 40] {
            let l = f.lambda_values[j];
            let mut want = 0.0;
            for (i, &r) in g.r_values.iter().enumerate() {
                want += (-r * r / 0.5).exp() * spherical_function(l, r).re * g.ring_weights[i];
            }
            want *= g.n_theta() as f64;
            assert!((f.value(j, 3).re - want).abs() < 1e-8 * f.max_abs());
        }
    }

    #[test]
    fn plancherel_and_round_trip() {
        let (g, s) = small_grid();
        let u = FunctionOnX::gaussian(&g, 0.5, &DiscPoint::from_polar(0.5, 2.0));
        let f = helgason_forward(&u, &s).value;
        let m = SpectralMeasure::hyperbolic_plane();
        let ratio = f.plancherel_norm_sq(&m) / u.l2_norm().powi(2);
        assert!((ratio - 1.0).abs() < 5e-3, "{ratio}");
        let back = helgason_inverse(&f, &g).value;
        let err = back.rel_l2_error(&u).unwrap();
        assert!(err < 1e-3, "{err}");
    }
}
