//! Horocycle Radon transform, its dual, the Λ operator and Radon inversion.
//!
//! `R u(H, b) = √(2π) ∫ u(x(s)) ds` along the horocycle `ξ(H, b)` with arc
//! length `s`; the factor makes `dx = dH dn` with the scaled `dH`, so that
//! `F u(λ, b)` is the unitary Fourier transform of `e^{ρH} R u(H, b)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::helgason::FftCache;
use super::interp::{lagrange4, Interpolator};
use super::{
    FunctionOnX, HorocycleFunction, HorocycleGrid, SpectralMeasure, INV_SQRT_2PI, WEYL_ORDER,
};
use crate::error::{Checked, Warning};
use crate::geometry::{busemann, horocycle_point, BoundaryPoint, PolarGrid, RHO};
use crate::specialfn::InverseSymbol;

/// Cap on the arc parameter.
pub const S_MAX: f64 = 30.0;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Zero-padding factor for 1D Fourier multipliers.
const PAD: usize = 4;

/// Applies the Fourier multiplier `m(ξ)` (Lebesgue frequency) to samples
/// with spacing `dh`, zero-padding to at least `PAD ×` the length.
pub(crate) fn apply_multiplier_1d(
    data: &[Complex64],
    dh: f64,
    m: &dyn Fn(f64) -> Complex64,
    cache: &mut FftCache,
) -> Vec<Complex64> {
    let n = data.len();
    let len = (PAD * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..n].copy_from_slice(data);
    cache.forward(len).process(&mut buf);
    for (idx, v) in buf.iter_mut().enumerate() {
        *v *= m(frequency(idx, len, dh)) / len as f64;
    }
    cache.inverse(len).process(&mut buf);
    buf.truncate(n);
    buf
}

/// Lebesgue frequency of DFT bin `idx` on a length-`len` grid of spacing `dh`.
pub(crate) fn frequency(idx: usize, len: usize, dh: f64) -> f64 {
    let k = if idx <= len / 2 {
        idx as f64
    } else {
        idx as f64 - len as f64
    };
    TAU * k / (len as f64 * dh)
}

/// Horocycle Radon transform on `grid`.
pub fn radon_forward(u: &FunctionOnX, grid: &HorocycleGrid) -> Checked<HorocycleFunction> {
    let mut warnings = Vec::new();
    if let Some(w) = u.support_leakage() {
        warnings.push(w);
    }
    let interp = Interpolator::new(u);
    let r_max = u.grid.r_max;
    let ds_target = 2.0 * u.grid.dr();
    let mut out = HorocycleFunction::zeros(grid);
    let h_values = out.h_values.clone();
    let b_values = out.b_values.clone();

    let rows: Vec<(Vec<Complex64>, f64)> = b_values
        .par_iter()
        .map(|&beta| {
            let b = BoundaryPoint::new(beta);
            let mut row = vec![Complex64::new(0.0, 0.0); h_values.len()];
            let mut leak = 0.0f64;
            for (i, &h) in h_values.iter().enumerate() {
                if h.abs() >= r_max {
                    continue;
                }
                let reach = (2.0 * (-h).exp() * (r_max.cosh() - h.cosh())).sqrt();
                let s_max = reach.min(S_MAX);
                let n_s = (2.0 * (s_max / ds_target).ceil()).max(32.0) as usize;
                let ds = 2.0 * s_max / n_s as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                let mut peak = 0.0f64;
                for q in 0..=n_s {
                    let s = -s_max + q as f64 * ds;
                    let x = horocycle_point(h, &b, s);
                    let v = interp.eval(x.radius(), x.angle());
                    peak = peak.max(v.norm());
                    let w = if q == 0 || q == n_s { 0.5 * ds } else { ds };
                    acc += v * w;
                }
                if reach > S_MAX && peak > 0.0 {
                    let xa = horocycle_point(h, &b, s_max);
                    let xb = horocycle_point(h, &b, -s_max);
                    let edge = interp
                        .eval(xa.radius(), xa.angle())
                        .norm()
                        .max(interp.eval(xb.radius(), xb.angle()).norm());
                    leak = leak.max(edge / peak);
                }
                row[i] = acc * SQRT_2PI;
            }
            (row, leak)
        })
        .collect();

    let nh = out.n_h();
    let mut leak = 0.0f64;
    for (k, (row, l)) in rows.into_iter().enumerate() {
        out.values[k * nh..(k + 1) * nh].copy_from_slice(&row);
        leak = leak.max(l);
    }
    if leak > 1e-8 {
        warnings.push(Warning::HorocycleTruncation { relative: leak });
    }
    Checked::with(out, warnings)
}

/// Cubic interpolation of one b-row at `h`; `None` outside the tabulated range.
fn interp_h(row: &[Complex64], h0: f64, dh: f64, h: f64) -> Option<Complex64> {
    let n = row.len();
    let x = (h - h0) / dh;
    if x < -1e-9 || x > (n - 1) as f64 + 1e-9 {
        return None;
    }
    let base = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let w = lagrange4(x - base as f64 - 1.0);
    Some((0..4).map(|q| row[base + q] * w[q]).sum())
}

/// `R*φ(x) = ∫_B φ(A(x,b), b) e^{2ρA(x,b)} db`, the adjoint of R for
/// `dξ = e^{2ρH} dH db`.
pub fn dual_radon(phi: &HorocycleFunction, grid: &PolarGrid) -> Checked<FunctionOnX> {
    let h0 = phi.h_values[0];
    let dh = phi.dh();
    let nb = phi.n_b();
    let nt = grid.n_theta();
    let nodes: Vec<(usize, usize)> = (0..grid.r_values.len())
        .flat_map(|i| (0..nt).map(move |j| (i, j)))
        .collect();
    let boundary: Vec<BoundaryPoint> = phi
        .b_values
        .iter()
        .map(|&b| BoundaryPoint::new(b))
        .collect();
    let results: Vec<(Complex64, usize)> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let x = grid.point(i, j);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut missed = 0;
            for (k, b) in boundary.iter().enumerate() {
                let a = busemann(&x, b).expect("grid points lie inside the disc");
                match interp_h(phi.row(k), h0, dh, a) {
                    Some(v) => acc += v * (2.0 * RHO * a).exp(),
                    None => missed += 1,
                }
            }
            (acc / nb as f64, missed)
        })
        .collect();
    let missed: usize = results.iter().map(|r| r.1).sum();
    let mut warnings = Vec::new();
    if missed > 0 {
        warnings.push(Warning::Coverage {
            fraction: missed as f64 / (nodes.len() * nb) as f64,
        });
    }
    Checked::with(
        FunctionOnX {
            grid: grid.clone(),
            values: results.into_iter().map(|r| r.0).collect(),
        },
        warnings,
    )
}

/// Tapers the outer 5% of a row with a raised cosine.
fn taper(row: &mut [Complex64]) {
    let n = row.len();
    let w = (n / 20).max(1);
    for q in 0..w {
        let f = 0.5 - 0.5 * (std::f64::consts::PI * q as f64 / w as f64).cos();
        row[q] *= f;
        row[n - 1 - q] *= f;
    }
}

/// `e^{−ρH} m(D_H) e^{ρH}` applied to every b-row, with the decay check of Λ.
fn conjugated_multiplier(
    phi: &HorocycleFunction,
    m: &(dyn Fn(f64) -> Complex64 + Sync),
) -> Checked<HorocycleFunction> {
    let dh = phi.dh();
    let weights: Vec<f64> = phi.h_values.iter().map(|h| (RHO * h).exp()).collect();
    let mut worst = 0.0f64;
    let mut out = phi.clone();
    let nh = phi.n_h();
    let mut cache = FftCache::new();
    for k in 0..phi.n_b() {
        let mut g: Vec<Complex64> = phi
            .row(k)
            .iter()
            .zip(&weights)
            .map(|(v, w)| v * w)
            .collect();
        let max = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max > 0.0 {
            let edge = g[0].norm().max(g[nh - 1].norm()) / max;
            if edge > 1e-6 {
                worst = worst.max(edge);
                taper(&mut g);
            }
        }
        let y = apply_multiplier_1d(&g, dh, m, &mut cache);
        for (i, v) in y.into_iter().enumerate() {
            out.values[k * nh + i] = v / weights[i];
        }
    }
    let warnings = if worst > 0.0 {
        vec![Warning::DecayViolation { relative: worst }]
    } else {
        Vec::new()
    };
    Checked::with(out, warnings)
}

/// `Λ φ = e^{−ρH} σ(D_H) e^{ρH} φ` for the symbol `σ` (normally `√κ c⁻¹`);
/// with `conjugate` the symbol is replaced by its complex conjugate.
pub fn lambda_op(
    phi: &HorocycleFunction,
    conjugate: bool,
    sym: &dyn InverseSymbol,
) -> Checked<HorocycleFunction> {
    if conjugate {
        conjugated_multiplier(phi, &|xi| sym.eval(xi).conj())
    } else {
        conjugated_multiplier(phi, &|xi| sym.eval(xi))
    }
}

/// `‖Λφ‖` in `L²(Ξ, dξ)` computed on the multiplier side and by Parseval on
/// the H side; the two must agree to roundoff.
pub fn lambda_op_norms(phi: &HorocycleFunction, sym: &dyn InverseSymbol) -> (f64, f64) {
    let dh = phi.dh();
    let n = phi.n_h();
    let len = (PAD * n).next_power_of_two();
    let mut cache = FftCache::new();
    let fwd = cache.forward(len);
    let inv = cache.inverse(len);
    let (mut spectral, mut spatial) = (0.0, 0.0);
    for k in 0..phi.n_b() {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (i, (v, h)) in phi.row(k).iter().zip(&phi.h_values).enumerate() {
            buf[i] = v * (RHO * h).exp();
        }
        fwd.process(&mut buf);
        for (idx, v) in buf.iter_mut().enumerate() {
            *v *= sym.eval(frequency(idx, len, dh));
            spectral += v.norm_sqr() / len as f64;
        }
        inv.process(&mut buf);
        spatial += buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / (len * len) as f64;
    }
    let scale = dh * INV_SQRT_2PI / phi.n_b() as f64;
    ((spectral * scale).sqrt(), (spatial * scale).sqrt())
}

/// `T u = e^{ρH} Λ R u = σ(D_H)(e^{ρH} R u)` on `grid`.
pub fn t_via_radon(
    u: &FunctionOnX,
    grid: &HorocycleGrid,
    sym: &dyn InverseSymbol,
) -> Checked<HorocycleFunction> {
    let r = radon_forward(u, grid);
    let mut warnings = r.warnings;
    let ru = r.value;
    let dh = ru.dh();
    let mut out = ru.clone();
    let nh = ru.n_h();
    let mut cache = FftCache::new();
    for k in 0..ru.n_b() {
        let g: Vec<Complex64> = ru
            .row(k)
            .iter()
            .zip(&ru.h_values)
            .map(|(v, h)| v * (RHO * h).exp())
            .collect();
        let y = apply_multiplier_1d(&g, dh, &|xi| sym.eval(xi), &mut cache);
        out.values[k * nh..(k + 1) * nh].copy_from_slice(&y);
    }
    warnings.dedup();
    Checked::with(out, warnings)
}

/// `u = w⁻¹ R* Λ̄ Λ R u`, evaluated on the grid of `u`.
///
/// `Λ̄Λ = e^{−ρH}|σ|²(D_H)e^{ρH}` is applied as one multiplier so the
/// slowly decaying intermediate `ΛRu` is never truncated.
pub fn radon_inverse(u: &FunctionOnX, grid: &HorocycleGrid) -> Checked<FunctionOnX> {
    let measure = SpectralMeasure::hyperbolic_plane();
    let r = radon_forward(u, grid);
    let mut warnings = r.warnings;
    let filtered = conjugated_multiplier(&r.value, &|xi| {
        Complex64::new(measure.c_tilde_inv(xi).norm_sqr(), 0.0)
    });
    warnings.extend(filtered.warnings);
    let back = dual_radon(&filtered.value, &u.grid);
    warnings.extend(back.warnings);
    Checked::with(
        back.value.scale(Complex64::new(1.0 / WEYL_ORDER, 0.0)),
        warnings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiscPoint;
    use crate::specialfn::UnitSymbol;

    #[test]
    fn radial_abel_form() {
        let g = PolarGrid::new(3.0, 128, 32).unwrap();
        let sigma: f64 = 0.5;
        let u = FunctionOnX::gaussian(&g, sigma, &DiscPoint::ORIGIN);
        let hg = HorocycleGrid::new(4.0, 32, 8).unwrap();
        let ru = radon_forward(&u, &hg).value;
        for i in [4usize, 12, 16, 19, 25] {
            let h = ru.h_values[i];
            // √2 ∫_{|H|}^∞ u(r) sinh r (cosh r − cosh H)^{-1/2} dr, with
            // cosh r = cosh H + v² removing the endpoint singularity
            let n = 4000;
            let vmax = ((3.0f64).cosh() - h.cosh()).max(0.0).sqrt();
            let mut abel = 0.0;
            for q in 0..n {
                let v = (q as f64 + 0.5) * vmax / n as f64;
                let r = (h.cosh() + v * v).acosh();
                abel += 2.0 * (-r * r / (2.0 * sigma * sigma)).exp() * vmax / n as f64;
            }
            abel *= 2f64.sqrt();
            let got = (RHO * h).exp() * ru.value(i, 3).re / SQRT_2PI;
            assert!(
                (got - abel).abs() < 1e-5 * abel.max(1e-3),
                "H={h}: {got} vs {abel}"
            );
        }
    }

    #[test]
    fn unit_symbol_is_identity() {
        let hg = HorocycleGrid::new(6.0, 64, 8).unwrap();
        let phi = HorocycleFunction::from_fn(&hg, |h, b| {
            Complex64::new((-h * h).exp() * (1.0 + b.cos()), 0.2 * h * (-h * h).exp())
        });
        let out = lambda_op(&phi, false, &UnitSymbol);
        assert!(out.warnings.is_empty());
        for (a, b) in out.value.values.iter().zip(&phi.values) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn lambda_norms_agree() {
        let hg = HorocycleGrid::new(8.0, 128, 8).unwrap();
        let phi = HorocycleFunction::from_fn(&hg, |h, b| {
            Complex64::new((-(h - 0.3 * b.sin()).powi(2)).exp() * (-RHO * h).exp(), 0.0)
        });
        let (a, b) = lambda_op_norms(&phi, &SpectralMeasure::hyperbolic_plane());
        assert!((a - b).abs() < 1e-8 * a);
    }

    #[test]
    fn dual_of_b_independent_function_at_origin() {
        let hg = HorocycleGrid::new(5.0, 100, 16).unwrap();
        let phi = HorocycleFunction::from_fn(&hg, |h, _| Complex64::new(h.cos() + 2.0, 0.0));
        let g = PolarGrid::new(2.0, 8, 8).unwrap();
        let out = dual_radon(&phi, &g).value;
        assert!((out.value(0, 0).re - 3.0).abs() < 1e-12);
    }
}
