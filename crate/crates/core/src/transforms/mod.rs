//! Helgason Fourier transform, horocycle Radon transform and the isometry T.
//!
//! Measures: `dx` is the Riemannian area, `db` has total mass one, and `dλ`,
//! `dH` are Lebesgue measure scaled by `(2π)^{-1/2}` so that every 1D Fourier
//! pair is unitary. With `c(−iρ) = 1` the Plancherel density with respect
//! to the scaled `dλ` is `κ|c(λ)|⁻²`, `κ = 1/(π√(2π))`.

mod helgason;
mod interp;
mod io;
mod isometry;
mod radon;
mod spherical;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::geometry::{DiscPoint, PolarGrid};
use crate::specialfn::{CFunctionEvaluator, InverseSymbol};

pub(crate) use helgason::FftCache;
pub use helgason::{helgason_forward, helgason_forward_at, helgason_inverse};
pub use interp::Interpolator;
pub use io::{csv_number, read_table, to_csv, write_table, TableHeader, Tabular, TABLE_SCHEMA};
pub(crate) use isometry::weighted_h_values;
pub use isometry::{
    compact_support_embedding_check, isometry_t, isometry_t_on, t_from_tables, weighted_norm,
    weighted_norm_of_t, TValues,
};
pub use radon::{
    dual_radon, lambda_op, lambda_op_norms, radon_forward, radon_inverse, t_via_radon,
};
pub use spherical::{phi_zero_bracket, spherical_function};

/// `1/√(2π)`: converts Lebesgue `dλ`, `dH` to the scaled measures.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Order of the Weyl group.
pub const WEYL_ORDER: f64 = 2.0;

/// Plancherel density normalized for the scaled spectral measure, and the
/// matching `c⁻¹` used by T, Λ and the weighted norms.
#[derive(Debug, Clone, Copy)]
pub struct SpectralMeasure {
    pub ev: CFunctionEvaluator,
    pub kappa: f64,
}

impl SpectralMeasure {
    pub fn hyperbolic_plane() -> Self {
        Self {
            ev: CFunctionEvaluator::hyperbolic_plane(),
            kappa: 1.0 / (PI * (TAU).sqrt()),
        }
    }

    /// `κ|c(λ)|⁻²`
    pub fn density(&self, lambda: f64) -> f64 {
        self.kappa * self.ev.plancherel_density(lambda)
    }

    /// `√κ c⁻¹(λ)`
    pub fn c_tilde_inv(&self, lambda: f64) -> Complex64 {
        self.kappa.sqrt() * self.ev.c_inverse(lambda)
    }
}

impl Default for SpectralMeasure {
    fn default() -> Self {
        Self::hyperbolic_plane()
    }
}

impl InverseSymbol for SpectralMeasure {
    fn eval(&self, lambda: f64) -> Complex64 {
        self.c_tilde_inv(lambda)
    }

    fn order(&self) -> f64 {
        self.ev.order()
    }
}

/// Samples of a function on X over a [`PolarGrid`], ring-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionOnX {
    pub grid: PolarGrid,
    pub values: Vec<Complex64>,
}

impl FunctionOnX {
    pub fn new(grid: PolarGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &PolarGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.n_nodes()],
        }
    }

    /// Samples `f(r, θ)` at every node.
    pub fn from_fn(grid: &PolarGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for &r in &grid.r_values {
            for &t in &grid.theta_values {
                values.push(f(r, t));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// `f(x)` for `x` in the disc.
    pub fn from_point_fn(grid: &PolarGrid, f: impl Fn(&DiscPoint) -> Complex64) -> Self {
        Self::from_fn(grid, |r, t| f(&DiscPoint::from_polar(r, t)))
    }

    /// Gaussian `exp(−d(x, c)² / (2σ²))` in the hyperbolic distance to `centre`.
    pub fn gaussian(grid: &PolarGrid, sigma: f64, centre: &DiscPoint) -> Self {
        Self::from_point_fn(grid, |x| {
            let d = x.distance(centre);
            Complex64::new((-d * d / (2.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn n_theta(&self) -> usize {
        self.grid.n_theta()
    }

    /// Samples of ring `i`.
    pub fn ring(&self, i: usize) -> &[Complex64] {
        let n = self.n_theta();
        &self.values[i * n..(i + 1) * n]
    }

    /// `∫_X u dx`
    pub fn integrate(&self) -> Complex64 {
        self.weighted_sum(|v| v)
    }

    fn weighted_sum(&self, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        let n = self.n_theta();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, w) in self.grid.ring_weights.iter().enumerate() {
            let s: Complex64 = self.values[i * n..(i + 1) * n].iter().map(|&v| f(v)).sum();
            acc += s * *w;
        }
        acc
    }

    /// `∫_X u v dx` (bilinear).
    pub fn pairing(&self, other: &FunctionOnX) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let n = self.n_theta();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, w) in self.grid.ring_weights.iter().enumerate() {
            let s: Complex64 = (i * n..(i + 1) * n)
                .map(|k| self.values[k] * other.values[k])
                .sum();
            acc += s * *w;
        }
        Ok(acc)
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_sum(|v| Complex64::new(v.norm_sqr(), 0.0))
            .re
            .max(0.0)
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_same_grid(&self, other: &FunctionOnX) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "functions live on different polar grids".into(),
            ));
        }
        Ok(())
    }

    pub fn zip_with(
        &self,
        other: &FunctionOnX,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<FunctionOnX> {
        self.check_same_grid(other)?;
        Ok(FunctionOnX {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> FunctionOnX {
        FunctionOnX {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `‖self − reference‖ / ‖reference‖`
    pub fn rel_l2_error(&self, reference: &FunctionOnX) -> Result<f64> {
        let d = self.zip_with(reference, |a, b| a - b)?;
        let n = reference.l2_norm();
        Ok(if n > 0.0 {
            d.l2_norm() / n
        } else {
            d.l2_norm()
        })
    }

    /// Relative L² error restricted to rings with `r ≤ r_cut`.
    pub fn rel_l2_error_within(&self, reference: &FunctionOnX, r_cut: f64) -> Result<f64> {
        self.check_same_grid(reference)?;
        let n = self.n_theta();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, (&r, &w)) in self
            .grid
            .r_values
            .iter()
            .zip(&self.grid.ring_weights)
            .enumerate()
        {
            if r > r_cut {
                break;
            }
            for k in i * n..(i + 1) * n {
                num += w * (self.values[k] - reference.values[k]).norm_sqr();
                den += w * reference.values[k].norm_sqr();
            }
        }
        Ok(if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        })
    }

    /// Largest deviation of a ring from its mean, relative to `max |u|`.
    pub fn angular_variation(&self) -> f64 {
        let n = self.n_theta();
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.grid.r_values.len() {
            let ring = &self.values[i * n..(i + 1) * n];
            let mean: Complex64 = ring.iter().sum::<Complex64>() / n as f64;
            for v in ring {
                worst = worst.max((v - mean).norm());
            }
        }
        worst / max
    }

    /// Warning if the two outer rings exceed `1e-8 · max |u|`.
    pub fn support_leakage(&self) -> Option<Warning> {
        let n = self.n_theta();
        let max = self.max_abs();
        if max == 0.0 {
            return None;
        }
        let nr = self.grid.r_values.len();
        let outer = self.values[(nr - 2) * n..]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let relative = outer / max;
        (relative > 1e-8).then_some(Warning::SupportLeakage { relative })
    }
}

/// Which half of the spectral line a table covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chamber {
    Plus,
    Minus,
}

impl Chamber {
    pub fn sign(self) -> f64 {
        match self {
            Chamber::Plus => 1.0,
            Chamber::Minus => -1.0,
        }
    }
}

/// Uniform midpoint grid `λ_j = (j + ½)Δλ` on `(0, Λ_max]` with `n_b` boundary
/// angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub n_b: usize,
}

impl SpectralGrid {
    pub fn new(lambda_max: f64, n_lambda: usize, n_b: usize) -> Result<Self> {
        if !(lambda_max > 0.0) || n_lambda < 8 || n_b < 8 {
            return Err(Error::GridTooCoarse(format!(
                "spectral grid needs Λ_max > 0 and counts ≥ 8 (Λ_max = {lambda_max}, n_λ = {n_lambda}, n_b = {n_b})"
            )));
        }
        Ok(Self {
            lambda_max,
            n_lambda,
            n_b,
        })
    }

    pub fn dlambda(&self) -> f64 {
        self.lambda_max / self.n_lambda as f64
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        let d = self.dlambda();
        (0..self.n_lambda).map(|j| (j as f64 + 0.5) * d).collect()
    }

    pub fn refined(&self) -> Self {
        Self {
            lambda_max: self.lambda_max,
            n_lambda: 2 * self.n_lambda,
            n_b: 2 * self.n_b,
        }
    }
}

pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Sampled `F u(s·λ_j, b_k)`, b-major.
///
/// `lambda_values` are positive; `chamber` gives the sign `s`. Each λ node
/// carries the (Lebesgue) weight `lambda_weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    pub lambda_values: Vec<f64>,
    pub lambda_weight: f64,
    pub chamber: Chamber,
    pub b_values: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl SpectralTable {
    pub fn zeros(
        lambda_values: Vec<f64>,
        lambda_weight: f64,
        chamber: Chamber,
        n_b: usize,
    ) -> Self {
        let n = lambda_values.len() * n_b;
        Self {
            lambda_values,
            lambda_weight,
            chamber,
            b_values: uniform_angles(n_b),
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn n_lambda(&self) -> usize {
        self.lambda_values.len()
    }

    pub fn n_b(&self) -> usize {
        self.b_values.len()
    }

    /// Signed spectral parameter of column `j`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.chamber.sign() * self.lambda_values[j]
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.n_lambda() + j
    }

    pub fn value(&self, j: usize, k: usize) -> Complex64 {
        self.values[self.index(j, k)]
    }

    /// Row of all λ at boundary index `k`.
    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.n_lambda();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `∬ |F|² κ|c|⁻² dλ db` over the table's chamber.
    pub fn plancherel_norm_sq(&self, measure: &SpectralMeasure) -> f64 {
        let dens: Vec<f64> = (0..self.n_lambda())
            .map(|j| measure.density(self.lambda(j)) * self.lambda_weight * INV_SQRT_2PI)
            .collect();
        let mut acc = 0.0;
        for k in 0..self.n_b() {
            acc += self
                .row(k)
                .iter()
                .zip(&dens)
                .map(|(v, d)| v.norm_sqr() * d)
                .sum::<f64>();
        }
        acc / self.n_b() as f64
    }

    /// Multiplies column `j` by `f(signed λ_j)`.
    pub fn map_lambda(&self, f: impl Fn(f64) -> Complex64) -> SpectralTable {
        let factors: Vec<Complex64> = (0..self.n_lambda()).map(|j| f(self.lambda(j))).collect();
        let mut out = self.clone();
        let n = self.n_lambda();
        for (k, v) in out.values.iter_mut().enumerate() {
            *v *= factors[k % n];
        }
        out
    }

    pub fn zip_with(
        &self,
        other: &SpectralTable,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SpectralTable> {
        if self.lambda_values != other.lambda_values
            || self.b_values.len() != other.b_values.len()
            || self.chamber != other.chamber
        {
            return Err(Error::GridMismatch(
                "spectral tables on different grids".into(),
            ));
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = f(*v, *w);
        }
        Ok(out)
    }

    /// Largest variation over b of any λ column, relative to `max |F|`.
    pub fn b_variation(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for j in 0..self.n_lambda() {
            let v0 = self.value(j, 0);
            for k in 1..self.n_b() {
                worst = worst.max((self.value(j, k) - v0).norm());
            }
        }
        worst / max
    }

    /// Warning if the last λ column exceeds `1e-8 · max |F|`.
    pub fn truncation_warning(&self) -> Option<Warning> {
        let max = self.max_abs();
        if max == 0.0 {
            return None;
        }
        let last = self.n_lambda() - 1;
        let edge = (0..self.n_b())
            .map(|k| self.value(last, k).norm())
            .fold(0.0, f64::max);
        let relative = edge / max;
        (relative > 1e-8).then_some(Warning::SpectralTruncation { relative })
    }
}

/// Uniform grid of `n_h + 1` horocycle distances on `[−H_max, H_max]` and
/// `n_b` boundary angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorocycleGrid {
    pub h_max: f64,
    pub n_h: usize,
    pub n_b: usize,
}

impl HorocycleGrid {
    pub fn new(h_max: f64, n_h: usize, n_b: usize) -> Result<Self> {
        if !(h_max > 0.0) || n_h < 8 || n_b < 8 || !n_h.is_multiple_of(2) {
            return Err(Error::GridTooCoarse(format!(
                "horocycle grid needs H_max > 0, even n_H ≥ 8, n_b ≥ 8 (H_max = {h_max}, n_H = {n_h}, n_b = {n_b})"
            )));
        }
        Ok(Self { h_max, n_h, n_b })
    }

    pub fn dh(&self) -> f64 {
        2.0 * self.h_max / self.n_h as f64
    }

    pub fn h_values(&self) -> Vec<f64> {
        let d = self.dh();
        (0..=self.n_h).map(|i| -self.h_max + i as f64 * d).collect()
    }

    pub fn refined(&self) -> Self {
        Self {
            h_max: self.h_max,
            n_h: 2 * self.n_h,
            n_b: 2 * self.n_b,
        }
    }
}

/// Samples on the horocycle space `(H_i, b_k)`, b-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HorocycleFunction {
    pub h_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl HorocycleFunction {
    pub fn zeros(grid: &HorocycleGrid) -> Self {
        Self {
            h_values: grid.h_values(),
            b_values: uniform_angles(grid.n_b),
            values: vec![Complex64::new(0.0, 0.0); (grid.n_h + 1) * grid.n_b],
        }
    }

    pub fn from_fn(grid: &HorocycleGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut out = Self::zeros(grid);
        let nh = out.n_h();
        for k in 0..out.n_b() {
            for i in 0..nh {
                out.values[k * nh + i] = f(out.h_values[i], out.b_values[k]);
            }
        }
        out
    }

    /// Number of H samples.
    pub fn n_h(&self) -> usize {
        self.h_values.len()
    }

    pub fn n_b(&self) -> usize {
        self.b_values.len()
    }

    pub fn dh(&self) -> f64 {
        self.h_values[1] - self.h_values[0]
    }

    pub fn value(&self, i: usize, k: usize) -> Complex64 {
        self.values[k * self.n_h() + i]
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.n_h();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `∫∫ φ ψ e^{2ρH} dH db` with the scaled `dH` (bilinear, Simpson in H).
    pub fn pairing_dxi(&self, other: &HorocycleFunction) -> Result<Complex64> {
        if self.h_values != other.h_values || self.n_b() != other.n_b() {
            return Err(Error::GridMismatch(
                "horocycle functions on different grids".into(),
            ));
        }
        let w = simpson_or_trapezoid(self.n_h(), self.dh() * INV_SQRT_2PI);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.n_b() {
            for (i, (&h, &wi)) in self.h_values.iter().zip(&w).enumerate() {
                let e = (2.0 * crate::geometry::RHO * h).exp();
                acc += self.value(i, k) * other.value(i, k) * (wi * e);
            }
        }
        Ok(acc / self.n_b() as f64)
    }
}

/// Simpson weights times `step` for an odd node count, trapezoid otherwise.
pub(crate) fn simpson_or_trapezoid(n_nodes: usize, step: f64) -> Vec<f64> {
    if n_nodes >= 3 && n_nodes % 2 == 1 {
        crate::geometry::simpson_weights(n_nodes - 1)
            .into_iter()
            .map(|w| w * step)
            .collect()
    } else {
        (0..n_nodes)
            .map(|i| {
                if i == 0 || i + 1 == n_nodes {
                    0.5 * step
                } else {
                    step
                }
            })
            .collect()
    }
}

/// Weight exponent δ of `L^{2,δ}(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub delta: f64,
}

/// `⟨x⟩ = (1 + x²)^{1/2}`
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}
