//! Spectral functional calculus `a(D_x)`, the propagator `e^{ita(D_x)}`, the
//! Duhamel term, and the identities transferring evolution on X to the line.
//!
//! Multipliers are functions on the closed positive chamber and are extended
//! evenly, so `a(λ)` means `a(|λ|)` for either chamber and for 1D
//! frequencies. Physical-space states are derived views: evolution acts on
//! spectral tables, where it is diagonal.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Checked, Error, Result, Warning};
use crate::geometry::{PolarGrid, RHO};
use crate::transforms::{
    helgason_forward, helgason_forward_at, helgason_inverse, radon_forward, weighted_norm_of_t,
    Chamber, FftCache, FunctionOnX, HorocycleFunction, HorocycleGrid, SpectralGrid,
    SpectralMeasure, SpectralTable, TValues, INV_SQRT_2PI,
};

/// Real spectral multiplier `a(λ)` of polynomial growth.
#[derive(Debug, Clone, PartialEq)]
pub enum Multiplier {
    Constant(f64),
    /// `λ² + ρ²`, the symbol of `−Δ_X`.
    Schrodinger,
    /// `Σ c_k (λ² + ρ²)^k`, a polynomial in `−Δ_X`.
    Poly(Vec<f64>),
    /// `|λ|^m`
    Homogeneous(f64),
    /// `⟨λ⟩^s`
    JapaneseBracket(f64),
    /// `a′(λ)`
    Derivative(Box<Multiplier>),
    /// `|a′(λ)|^{1/2}`
    SqrtAbsDerivative(Box<Multiplier>),
    /// Degree-7 smoothstep rising from 0 at `inner` to 1 at `outer`.
    Smoothstep {
        inner: f64,
        outer: f64,
    },
    Product(Vec<Multiplier>),
}

fn smoothstep7(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let x4 = x.powi(4);
    let v = x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
    let d = 140.0 * (x * (1.0 - x)).powi(3);
    (v, d)
}

/// `(P(s), P′(s), P″(s))` for coefficients in ascending order.
fn poly_eval(c: &[f64], s: f64) -> (f64, f64, f64) {
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &ck in c.iter().rev() {
        d2 = d2 * s + 2.0 * d1;
        d1 = d1 * s + p;
        p = p * s + ck;
    }
    (p, d1, d2)
}

impl Multiplier {
    /// Parses the config forms `schrodinger`, `poly:c0,c1,...`,
    /// `homogeneous:m`, `const:c` and `bracket:s`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = |msg: String| Error::InvalidParameter(format!("multiplier `{spec}`: {msg}"));
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("`{}`: {e}", s.trim())))
        };
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a)),
            None => (spec, None),
        };
        match (head, arg) {
            ("schrodinger", None) => Ok(Multiplier::Schrodinger),
            ("poly", Some(a)) => {
                let c = a.split(',').map(num).collect::<Result<Vec<f64>>>()?;
                if c.is_empty() {
                    return Err(bad("no coefficients".into()));
                }
                Ok(Multiplier::Poly(c))
            }
            ("homogeneous", Some(a)) => Ok(Multiplier::Homogeneous(num(a)?)),
            ("const", Some(a)) => Ok(Multiplier::Constant(num(a)?)),
            ("bracket", Some(a)) => Ok(Multiplier::JapaneseBracket(num(a)?)),
            _ => Err(bad(
                "expected schrodinger, poly:c0,c1,..., homogeneous:m, const:c or bracket:s".into(),
            )),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Multiplier::Constant(c) => format!("const:{c}"),
            Multiplier::Schrodinger => "schrodinger".into(),
            Multiplier::Poly(c) => format!(
                "poly:{}",
                c.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            Multiplier::Homogeneous(m) => format!("homogeneous:{m}"),
            Multiplier::JapaneseBracket(s) => format!("bracket:{s}"),
            Multiplier::Derivative(a) => format!("d({})", a.name()),
            Multiplier::SqrtAbsDerivative(a) => format!("sqrt|d({})|", a.name()),
            Multiplier::Smoothstep { inner, outer } => format!("smoothstep[{inner},{outer}]"),
            Multiplier::Product(f) => f.iter().map(|m| m.name()).collect::<Vec<_>>().join("*"),
        }
    }

    /// `a(|λ|)`
    pub fn eval(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        match self {
            Multiplier::Constant(c) => *c,
            Multiplier::Schrodinger => l * l + RHO * RHO,
            Multiplier::Poly(c) => poly_eval(c, l * l + RHO * RHO).0,
            Multiplier::Homogeneous(m) => {
                if *m == 0.0 {
                    1.0
                } else {
                    l.powf(*m)
                }
            }
            Multiplier::JapaneseBracket(s) => (1.0 + l * l).powf(0.5 * s),
            Multiplier::Derivative(a) => a.derivative(l).unwrap_or(f64::NAN),
            Multiplier::SqrtAbsDerivative(a) => a.derivative(l).unwrap_or(f64::NAN).abs().sqrt(),
            Multiplier::Smoothstep { inner, outer } => smoothstep7((l - inner) / (outer - inner)).0,
            Multiplier::Product(f) => f.iter().map(|m| m.eval(l)).product(),
        }
    }

    pub fn has_derivative(&self) -> bool {
        match self {
            Multiplier::SqrtAbsDerivative(_) => false,
            Multiplier::Derivative(a) => a.second_derivative(1.0).is_ok(),
            Multiplier::Product(f) => f.iter().all(|m| m.has_derivative()),
            _ => true,
        }
    }

    /// `a′(λ)` for `λ ≥ 0`.
    pub fn derivative(&self, lambda: f64) -> Result<f64> {
        let l = lambda.abs();
        let s = l * l + RHO * RHO;
        Ok(match self {
            Multiplier::Constant(_) => 0.0,
            Multiplier::Schrodinger => 2.0 * l,
            Multiplier::Poly(c) => poly_eval(c, s).1 * 2.0 * l,
            Multiplier::Homogeneous(m) => {
                if *m == 0.0 {
                    0.0
                } else {
                    m * l.powf(m - 1.0)
                }
            }
            Multiplier::JapaneseBracket(p) => p * l * (1.0 + l * l).powf(0.5 * p - 1.0),
            Multiplier::Derivative(a) => a.second_derivative(l)?,
            Multiplier::SqrtAbsDerivative(_) => {
                return Err(Error::MissingDerivative(self.name()));
            }
            Multiplier::Smoothstep { inner, outer } => {
                smoothstep7((l - inner) / (outer - inner)).1 / (outer - inner)
            }
            Multiplier::Product(f) => {
                let mut total = 0.0;
                for (i, m) in f.iter().enumerate() {
                    let mut term = m.derivative(l)?;
                    for (j, other) in f.iter().enumerate() {
                        if i != j {
                            term *= other.eval(l);
                        }
                    }
                    total += term;
                }
                total
            }
        })
    }

    fn second_derivative(&self, l: f64) -> Result<f64> {
        let s = l * l + RHO * RHO;
        Ok(match self {
            Multiplier::Constant(_) => 0.0,
            Multiplier::Schrodinger => 2.0,
            Multiplier::Poly(c) => {
                let (_, d1, d2) = poly_eval(c, s);
                4.0 * l * l * d2 + 2.0 * d1
            }
            Multiplier::Homogeneous(m) => {
                if *m == 0.0 || *m == 1.0 {
                    0.0
                } else {
                    m * (m - 1.0) * l.powf(m - 2.0)
                }
            }
            _ => return Err(Error::MissingDerivative(format!("d({})", self.name()))),
        })
    }

    /// Declared growth order `m` in `|a(λ)| ≤ C⟨λ⟩^m`.
    pub fn growth_order(&self) -> f64 {
        match self {
            Multiplier::Constant(_) | Multiplier::Smoothstep { .. } => 0.0,
            Multiplier::Schrodinger => 2.0,
            Multiplier::Poly(c) => {
                let deg = c.iter().rposition(|&v| v != 0.0).unwrap_or(0);
                2.0 * deg as f64
            }
            Multiplier::Homogeneous(m) => *m,
            Multiplier::JapaneseBracket(s) => *s,
            Multiplier::Derivative(a) => (a.growth_order() - 1.0).max(0.0),
            Multiplier::SqrtAbsDerivative(a) => 0.5 * (a.growth_order() - 1.0).max(0.0),
            Multiplier::Product(f) => f.iter().map(|m| m.growth_order()).sum(),
        }
    }

    /// Smallest `C` with `|a(λ)| ≤ C⟨λ⟩^m` on `lambdas`; errors on a
    /// non-finite value.
    pub fn growth_constant(&self, lambdas: &[f64]) -> Result<f64> {
        let m = self.growth_order();
        let mut c = 0.0f64;
        for &l in lambdas {
            let v = self.eval(l);
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "multiplier {} is not finite at λ = {l}",
                    self.name()
                )));
            }
            c = c.max(v.abs() / (1.0 + l * l).powf(0.5 * m));
        }
        Ok(c)
    }

    /// Largest group speed `|a′|` on `[0, lambda_max]`; finite differences
    /// stand in when no derivative is available.
    pub fn max_speed(&self, lambda_max: f64) -> f64 {
        let n = 512;
        (0..=n)
            .map(|i| {
                let l = lambda_max * i as f64 / n as f64;
                match self.derivative(l) {
                    Ok(d) => d.abs(),
                    Err(_) => {
                        let h = 1e-4 * (1.0 + l);
                        ((self.eval(l + h) - self.eval((l - h).abs())) / (2.0 * h)).abs()
                    }
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Uniform time nodes on `[−T, T]` through 0, or the single node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_values: Vec<f64>,
}

impl TimeGrid {
    /// `n_steps` intervals (even, ≥ 2) on `[−t_max, t_max]`.
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max > 0.0) || n_steps < 2 || !n_steps.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "time grid needs T > 0 and an even step count ≥ 2 (T = {t_max}, n = {n_steps})"
            )));
        }
        let dt = 2.0 * t_max / n_steps as f64;
        let half = n_steps / 2;
        let t_values = (0..=n_steps)
            .map(|i| (i as f64 - half as f64) * dt)
            .collect();
        Ok(Self { t_values })
    }

    pub fn origin() -> Self {
        Self {
            t_values: vec![0.0],
        }
    }

    pub fn len(&self) -> usize {
        self.t_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_values.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.t_values.last().copied().unwrap_or(0.0)
    }

    pub fn dt(&self) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            self.t_values[1] - self.t_values[0]
        }
    }

    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    /// Composite Simpson weights over the whole grid (zero for a single node).
    pub fn weights(&self) -> Vec<f64> {
        if self.len() < 3 {
            return vec![0.0; self.len()];
        }
        crate::geometry::simpson_weights(self.len() - 1)
            .into_iter()
            .map(|w| w * self.dt())
            .collect()
    }

    /// Same horizon, twice the steps.
    pub fn refined(&self) -> Self {
        if self.len() < 3 {
            return self.clone();
        }
        Self::new(self.t_max(), 2 * (self.len() - 1)).expect("refining a valid grid")
    }
}

/// Frequency-side state at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub time: f64,
    pub snapshot: SpectralTable,
}

impl EvolutionState {
    pub fn plancherel_norm(&self) -> f64 {
        self.snapshot
            .plancherel_norm_sq(&SpectralMeasure::hyperbolic_plane())
            .sqrt()
    }

    /// Physical samples on `grid`.
    pub fn materialize(&self, grid: &PolarGrid) -> Checked<FunctionOnX> {
        helgason_inverse(&self.snapshot, grid)
    }
}

/// `a(D_x)u = F⁻¹[a(λ) F u]` on the grid of `u`.
pub fn multiplier_apply(
    a: &Multiplier,
    u: &FunctionOnX,
    sgrid: &SpectralGrid,
) -> Checked<FunctionOnX> {
    let f = helgason_forward(u, sgrid);
    let mut warnings = f.warnings;
    let g = f.value.map_lambda(|l| Complex64::new(a.eval(l), 0.0));
    let max = g.max_abs();
    if max > 0.0 {
        let last = g.n_lambda() - 1;
        let edge = (0..g.n_b())
            .map(|k| g.value(last, k).norm())
            .fold(0.0, f64::max)
            / max;
        if edge > 1e-6 {
            warnings.push(Warning::SpectralTruncation { relative: edge });
        }
    }
    let out = helgason_inverse(&g, &u.grid);
    warnings.extend(out.warnings);
    Checked::with(out.value, warnings)
}

/// `e^{ita(D_x)}` on a spectral table.
pub fn propagate(a: &Multiplier, t: f64, table: &SpectralTable) -> EvolutionState {
    EvolutionState {
        time: t,
        snapshot: table.map_lambda(|l| Complex64::from_polar(1.0, t * a.eval(l))),
    }
}

/// Relative second difference above which the quadratic interpolation of the
/// forcing between time nodes is considered unresolved.
const FORCING_CURVATURE_TOL: f64 = 0.05;

/// `J_k(θ) = ∫₀¹ e^{iθy} y^k dy` for `k = 0..=3`.
fn phase_moments(theta: f64) -> [Complex64; 4] {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    if theta.abs() < 1.0 {
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..30 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += term / (n + k + 1) as f64;
            }
            term *= Complex64::new(0.0, theta) / (n + 1) as f64;
        }
    } else {
        // J_k = (e^{iθ} − k J_{k−1}) / (iθ)
        let e = Complex64::from_polar(1.0, theta);
        let it = Complex64::new(0.0, theta);
        out[0] = (e - 1.0) / it;
        for k in 1..4 {
            out[k] = (e - k as f64 * out[k - 1]) / it;
        }
    }
    out
}

/// Power coefficients of the Lagrange basis polynomials on `nodes`.
fn lagrange_basis(nodes: &[f64]) -> Vec<Vec<f64>> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &yi)| {
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for (j, &yj) in nodes.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (k, c) in poly.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * yj;
                }
                poly = next;
                denom *= yi - yj;
            }
            poly.iter().map(|c| c / denom).collect()
        })
        .collect()
}

/// Weights `∫₀¹ e^{iθy} L_j(y) dy` for each basis polynomial.
fn stencil_weights(basis: &[Vec<f64>], moments: &[Complex64; 4]) -> Vec<Complex64> {
    basis
        .iter()
        .map(|poly| poly.iter().zip(moments).map(|(c, j)| j * *c).sum())
        .collect()
}

/// Duhamel term `G(t_n) = ∫₀^{t_n} e^{i(t_n−τ)a(D_x)} f(τ) dτ` at every node
/// of `grid`, handed to `sink` in the order 0, then increasing `|t|` forward,
/// then backward.
///
/// The oscillation `e^{−iτa}` is integrated exactly on each step while the
/// forcing is interpolated by the cubic through four neighbouring nodes, so
/// the step only needs to resolve `f`, not the phase.
pub fn duhamel_series(
    a: &Multiplier,
    f: &(dyn Fn(usize) -> SpectralTable + Sync),
    grid: &TimeGrid,
    mut sink: impl FnMut(usize, &SpectralTable),
) -> Vec<Warning> {
    let mut shape = f(grid.zero_index());
    let nl = shape.n_lambda();
    let lambdas: Vec<f64> = (0..shape.values.len())
        .map(|i| shape.lambda(i % nl))
        .collect();
    duhamel_core(a, &lambdas, &|n| f(n).values, grid, |n, v| {
        shape.values.copy_from_slice(v);
        sink(n, &shape);
    })
}

/// [`duhamel_series`] for forcing given on both chambers.
pub fn duhamel_series_pair(
    a: &Multiplier,
    f: &(dyn Fn(usize) -> SpectralPair + Sync),
    grid: &TimeGrid,
    mut sink: impl FnMut(usize, &SpectralPair),
) -> Vec<Warning> {
    let mut shape = f(grid.zero_index());
    let split = shape.plus.values.len();
    let (np, nm) = (shape.plus.n_lambda(), shape.minus.n_lambda());
    let lambdas: Vec<f64> = (0..split)
        .map(|i| shape.plus.lambda(i % np))
        .chain((0..shape.minus.values.len()).map(|i| shape.minus.lambda(i % nm)))
        .collect();
    let flat = |n: usize| {
        let p = f(n);
        let mut v = p.plus.values;
        v.extend(p.minus.values);
        v
    };
    duhamel_core(a, &lambdas, &flat, grid, |n, v| {
        shape.plus.values.copy_from_slice(&v[..split]);
        shape.minus.values.copy_from_slice(&v[split..]);
        sink(n, &shape);
    })
}

/// Cumulative Duhamel integration for values at signed spectral parameters
/// `lambdas`.
fn duhamel_core(
    a: &Multiplier,
    lambdas: &[f64],
    f: &(dyn Fn(usize) -> Vec<Complex64> + Sync),
    grid: &TimeGrid,
    mut sink: impl FnMut(usize, &[Complex64]),
) -> Vec<Warning> {
    let z = grid.zero_index();
    let symbol: Vec<f64> = lambdas.iter().map(|&l| a.eval(l)).collect();
    let len = lambdas.len();
    let zero = vec![Complex64::new(0.0, 0.0); len];
    sink(z, &zero);
    if grid.len() < 2 {
        return Vec::new();
    }
    let steps = grid.len() - 1 - z;
    // stencils as offsets from node m−1 for the step m−1 → m: the first and
    // last steps lean inwards, and short grids fall back to the trapezoid
    let stencils: Vec<Vec<isize>> = if steps < 3 {
        vec![vec![0, 1]]
    } else {
        vec![vec![0, 1, 2, 3], vec![-1, 0, 1, 2], vec![-2, -1, 0, 1]]
    };
    let bases: Vec<Vec<Vec<f64>>> = stencils
        .iter()
        .map(|st| lagrange_basis(&st.iter().map(|&o| o as f64).collect::<Vec<_>>()))
        .collect();
    let stencil_for = |m: usize| match (stencils.len(), m) {
        (1, _) => 0,
        (_, 1) => 0,
        (_, m) if m == steps => 2,
        _ => 1,
    };
    let sup = |v: &[Complex64]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let (mut f_max, mut curvature) = (0.0f64, 0.0f64);
    let mut out = zero.clone();
    for dir in [1isize, -1] {
        let node = |m: usize| (z as isize + dir * m as isize) as usize;
        let h = dir as f64 * grid.dt();
        let weights: Vec<Vec<Vec<Complex64>>> = symbol
            .iter()
            .map(|&s| {
                let moments = phase_moments(-s * h);
                bases
                    .iter()
                    .map(|b| {
                        stencil_weights(b, &moments)
                            .into_iter()
                            .map(|w| w * h)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // f at offsets lo, lo+1, … from the origin node
        let mut window: VecDeque<Vec<Complex64>> = VecDeque::new();
        let mut lo = 0usize;
        let mut recent: Vec<Vec<Complex64>> = Vec::new();
        let mut integral = zero.clone();
        for m in 1..=steps {
            let which = stencil_for(m);
            let offsets = &stencils[which];
            let first = (m as isize - 1 + offsets[0]) as usize;
            let last = (m as isize - 1 + offsets[offsets.len() - 1]) as usize;
            while lo < first && !window.is_empty() {
                window.pop_front();
                lo += 1;
            }
            if window.is_empty() {
                lo = first;
            }
            while lo + window.len() <= last {
                let v = f(node(lo + window.len()));
                f_max = f_max.max(sup(&v));
                if let [p2, p1] = &recent[..] {
                    let d2 = (0..len)
                        .map(|l| (v[l] - 2.0 * p1[l] + p2[l]).norm())
                        .fold(0.0, f64::max);
                    curvature = curvature.max(d2);
                }
                recent.push(v.clone());
                if recent.len() > 2 {
                    recent.remove(0);
                }
                window.push_back(v);
            }
            let tau0 = grid.t_values[node(m - 1)];
            for (l, acc) in integral.iter_mut().enumerate() {
                let w = &weights[l][which];
                let sum: Complex64 = w
                    .iter()
                    .enumerate()
                    .map(|(j, wj)| wj * window[first - lo + j][l])
                    .sum();
                *acc += Complex64::from_polar(1.0, -tau0 * symbol[l]) * sum;
            }
            let t = grid.t_values[node(m)];
            for ((o, v), s) in out.iter_mut().zip(&integral).zip(&symbol) {
                *o = v * Complex64::from_polar(1.0, t * s);
            }
            sink(node(m), &out);
        }
    }
    let relative = if f_max > 0.0 { curvature / f_max } else { 0.0 };
    if relative > FORCING_CURVATURE_TOL {
        vec![Warning::TimeResolution { relative }]
    } else {
        Vec::new()
    }
}

/// Duhamel term at node `t_index` for tabulated forcing `f[n] = F f(t_n)`.
pub fn duhamel(
    a: &Multiplier,
    f: &[SpectralTable],
    t_index: usize,
    grid: &TimeGrid,
) -> Result<Checked<SpectralTable>> {
    if f.len() != grid.len() || t_index >= grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} forcing tables and index {t_index} for {} time nodes",
            f.len(),
            grid.len()
        )));
    }
    let mut out = None;
    let warnings = duhamel_series(a, &|n| f[n].clone(), grid, |n, g| {
        if n == t_index {
            out = Some(g.clone());
        }
    });
    Ok(Checked::with(out.expect("every node is visited"), warnings))
}

/// Physical-space Duhamel term for forcing sampled on the polar grid.
pub fn duhamel_on_grid(
    a: &Multiplier,
    f: &[FunctionOnX],
    t_index: usize,
    grid: &TimeGrid,
    sgrid: &SpectralGrid,
) -> Result<Checked<FunctionOnX>> {
    let polar = f
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty forcing family".into()))?
        .grid
        .clone();
    let mut warnings = Vec::new();
    let tables: Vec<SpectralTable> = f
        .iter()
        .map(|u| {
            let t = helgason_forward(u, sgrid);
            warnings.extend(t.warnings);
            t.value
        })
        .collect();
    let g = duhamel(a, &tables, t_index, grid)?;
    warnings.extend(g.warnings);
    let out = helgason_inverse(&g.value, &polar);
    warnings.extend(out.warnings);
    warnings.dedup();
    Ok(Checked::with(out.value, warnings))
}

/// Both chamber tables of one function.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub plus: SpectralTable,
    pub minus: SpectralTable,
}

impl SpectralPair {
    pub fn map(&self, f: impl Fn(&SpectralTable) -> SpectralTable) -> SpectralPair {
        SpectralPair {
            plus: f(&self.plus),
            minus: f(&self.minus),
        }
    }

    /// `‖u‖²`, averaged over the two chambers.
    pub fn norm_sq(&self) -> f64 {
        let m = SpectralMeasure::hyperbolic_plane();
        0.5 * (self.plus.plancherel_norm_sq(&m) + self.minus.plancherel_norm_sq(&m))
    }
}

/// Inverse-DFT coefficients of functions on the periodic evolution H grid:
/// `ψ(H_i, b_k) = Σ_m coef[k·N + m] e^{2πi m i / N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpectra {
    pub n_b: usize,
    pub n_fft: usize,
    pub coef: Vec<Complex64>,
}

/// Ratio of the sampling period in H to the support diameter `2R_max` when
/// resampling Helgason tables onto an evolution grid.
pub const BANDLIMIT_OVERSAMPLE: f64 = 1.25;

/// Periodic H grid and matching spectral grid for time evolution.
///
/// The H period `L` holds everything the propagator moves within the time
/// horizon, and the spectral nodes `λ_m = 2πm/L` are the DFT frequencies of
/// that grid, so `T` of an evolved state is one inverse FFT per boundary
/// angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionGrid {
    pub lambda_max: f64,
    pub length: f64,
    pub n_fft: usize,
    pub n_b: usize,
}

impl EvolutionGrid {
    /// Period `2·half_extent`, H spacing at most `π / (2Λ_max)`.
    pub fn new(lambda_max: f64, half_extent: f64, n_b: usize) -> Result<Self> {
        if !(lambda_max > 0.0) || !(half_extent > 0.0) || n_b < 8 {
            return Err(Error::InvalidParameter(format!(
                "evolution grid needs Λ_max > 0, extent > 0, n_b ≥ 8 (got {lambda_max}, {half_extent}, {n_b})"
            )));
        }
        let length = 2.0 * half_extent;
        let target = PI / (2.0 * lambda_max);
        let n_fft = ((length / target).ceil() as usize)
            .next_power_of_two()
            .max(16);
        Ok(Self {
            lambda_max,
            length,
            n_fft,
            n_b,
        })
    }

    /// Sized for `a` on `[−t_max, t_max]` with initial data occupying
    /// `|H| ≤ h0`.
    pub fn for_multiplier(
        a: &Multiplier,
        lambda_max: f64,
        t_max: f64,
        h0: f64,
        n_b: usize,
    ) -> Result<Self> {
        Self::new(lambda_max, a.max_speed(lambda_max) * t_max + h0, n_b)
    }

    pub fn dlambda(&self) -> f64 {
        TAU / self.length
    }

    pub fn dh(&self) -> f64 {
        self.length / self.n_fft as f64
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        let m = (self.lambda_max / self.dlambda()).floor() as usize;
        (1..=m).map(|j| j as f64 * self.dlambda()).collect()
    }

    pub fn h_values(&self) -> Vec<f64> {
        let dh = self.dh();
        (0..self.n_fft)
            .map(|i| -0.5 * self.length + i as f64 * dh)
            .collect()
    }

    /// Signed frequency of DFT bin `m`.
    pub fn xi(&self, m: usize) -> f64 {
        let k = if m < self.n_fft / 2 {
            m as f64
        } else {
            m as f64 - self.n_fft as f64
        };
        k * self.dlambda()
    }

    /// Half the H step on the same period.
    pub fn refined(&self) -> Self {
        Self {
            n_fft: 2 * self.n_fft,
            ..*self
        }
    }

    /// Helgason tables of `u` on this grid's spectral nodes.
    ///
    /// `λ ↦ F u(λ, b)` is the Fourier transform of a function of H supported
    /// in `|H| ≤ R_max`, so direct samples on a grid of spacing `2π/P`,
    /// `P = 2·BANDLIMIT_OVERSAMPLE·R_max`, determine it through the sinc
    /// series. Only those coarse samples use the direct transform.
    pub fn spectral_pair(&self, u: &FunctionOnX) -> Checked<SpectralPair> {
        let period = 2.0 * BANDLIMIT_OVERSAMPLE * u.grid.r_max;
        let step = TAU / period;
        let n_coarse = (self.lambda_max / step).ceil() as usize + 2;
        let coarse: Vec<f64> = (0..=n_coarse).map(|j| j as f64 * step).collect();
        let plus = helgason_forward_at(u, &coarse, step, Chamber::Plus, self.n_b);
        let minus = helgason_forward_at(u, &coarse[1..], step, Chamber::Minus, self.n_b);
        let mut warnings = plus.warnings;
        warnings.extend(minus.warnings);
        let (plus, minus) = (plus.value, minus.value);

        // samples at λ_j = j·step, j = −J..J, per boundary angle
        let n_b = self.n_b;
        let width = 2 * n_coarse + 1;
        let mut samples = vec![Complex64::new(0.0, 0.0); n_b * width];
        let mut max = 0.0f64;
        for k in 0..n_b {
            for j in 0..=n_coarse {
                let v = plus.value(j, k);
                samples[k * width + n_coarse + j] = v;
                max = max.max(v.norm());
            }
            for j in 1..=n_coarse {
                samples[k * width + n_coarse - j] = minus.value(j - 1, k);
            }
        }
        if max > 0.0 {
            let edge = (0..n_b)
                .flat_map(|k| [samples[k * width], samples[k * width + width - 1]])
                .map(|v| v.norm())
                .fold(0.0, f64::max)
                / max;
            if edge > 1e-6 {
                warnings.push(Warning::SpectralTruncation { relative: edge });
            }
        }

        let lam = self.lambda_values();
        let interpolate = |chamber: Chamber| {
            let mut table = SpectralTable::zeros(lam.clone(), self.dlambda(), chamber, n_b);
            let nl = lam.len();
            let sign = chamber.sign();
            for (m, &l) in lam.iter().enumerate() {
                let x = sign * l;
                let exact = (x / step).round();
                let nodes: Vec<(usize, f64)> =
                    if (x - exact * step).abs() < 1e-12 * step.max(x.abs()) {
                        let j = exact as isize + n_coarse as isize;
                        if j < 0 || j as usize >= width {
                            continue;
                        }
                        vec![(j as usize, 1.0)]
                    } else {
                        let s = (0.5 * x * period).sin();
                        (0..width)
                            .map(|j| {
                                let off = j as isize - n_coarse as isize;
                                let sign = if off % 2 == 0 { 1.0 } else { -1.0 };
                                (j, sign * s / (0.5 * (x - off as f64 * step) * period))
                            })
                            .collect()
                    };
                for k in 0..n_b {
                    let row = &samples[k * width..(k + 1) * width];
                    table.values[k * nl + m] = nodes.iter().map(|&(j, w)| row[j] * w).sum();
                }
            }
            table
        };
        warnings.dedup();
        Checked::with(
            SpectralPair {
                plus: interpolate(Chamber::Plus),
                minus: interpolate(Chamber::Minus),
            },
            warnings,
        )
    }

    /// Coefficients of `T_s` (or `T`) from chamber tables on this grid.
    pub fn spectra_from_tables(&self, pair: &SpectralPair, which: TValues) -> Result<LineSpectra> {
        let n = self.n_fft;
        let measure = SpectralMeasure::hyperbolic_plane();
        let mut coef = vec![Complex64::new(0.0, 0.0); n * self.n_b];
        for (table, chamber) in [(&pair.plus, Chamber::Plus), (&pair.minus, Chamber::Minus)] {
            let wanted = match which {
                TValues::Both => true,
                TValues::Plus => chamber == Chamber::Plus,
                TValues::Minus => chamber == Chamber::Minus,
            };
            if !wanted {
                continue;
            }
            if table.n_b() != self.n_b || table.chamber != chamber {
                return Err(Error::GridMismatch(
                    "tables do not match the evolution grid".into(),
                ));
            }
            for j in 0..table.n_lambda() {
                let m = ((table.lambda_values[j] / self.dlambda()).round()) as usize;
                if m == 0 || m >= n / 2 {
                    return Err(Error::GridMismatch(format!(
                        "λ = {} is not a DFT frequency of the evolution grid",
                        table.lambda_values[j]
                    )));
                }
                let bin = if chamber == Chamber::Plus { m } else { n - m };
                let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
                let w = measure.c_tilde_inv(table.lambda(j))
                    * (table.lambda_weight * INV_SQRT_2PI * sign);
                for k in 0..self.n_b {
                    coef[k * n + bin] += table.value(j, k) * w;
                }
            }
        }
        Ok(LineSpectra {
            n_b: self.n_b,
            n_fft: n,
            coef,
        })
    }

    /// Coefficients of `T_s u` (or `T u`) from the horocycle route
    /// `σ(D_H)(e^{ρH} R u)` with `σ = √κ c⁻¹`, restricted to the chamber and
    /// to `|ξ| ≤ Λ` like the tables.
    pub fn spectra_via_radon(
        &self,
        u: &FunctionOnX,
        which: TValues,
    ) -> Result<Checked<LineSpectra>> {
        let n = self.n_fft;
        let dh = self.dh();
        let k_half = ((u.grid.r_max + 0.5) / dh).ceil() as usize;
        if 2 * k_half >= n {
            return Err(Error::GridTooCoarse(format!(
                "evolution period {} cannot hold data of radius {}",
                self.length, u.grid.r_max
            )));
        }
        let hgrid = HorocycleGrid::new(k_half as f64 * dh, 2 * k_half, self.n_b)?;
        let ru = radon_forward(u, &hgrid);
        let measure = SpectralMeasure::hyperbolic_plane();
        let mut cache = FftCache::new();
        let fwd = cache.forward(n);
        let sigma: Vec<Complex64> = (0..n)
            .map(|m| {
                let xi = self.xi(m);
                let keep = xi.abs() <= self.lambda_max
                    && match which {
                        TValues::Both => true,
                        TValues::Plus => xi > 0.0,
                        TValues::Minus => xi < 0.0,
                    };
                if keep {
                    measure.c_tilde_inv(xi) / n as f64
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let offset = n / 2 - k_half;
        let mut coef = vec![Complex64::new(0.0, 0.0); n * self.n_b];
        for k in 0..self.n_b {
            let buf = &mut coef[k * n..(k + 1) * n];
            for (i, (v, h)) in ru.value.row(k).iter().zip(&ru.value.h_values).enumerate() {
                buf[offset + i] = v * (RHO * h).exp();
            }
            fwd.process(buf);
            for (c, s) in buf.iter_mut().zip(&sigma) {
                *c *= s;
            }
        }
        Ok(Checked::with(
            LineSpectra {
                n_b: self.n_b,
                n_fft: n,
                coef,
            },
            ru.warnings,
        ))
    }

    /// `m(D_H)ψ` on the H grid for spectra `ψ`.
    pub fn synthesize(
        &self,
        spectra: &LineSpectra,
        m: &(dyn Fn(f64) -> Complex64 + Sync),
    ) -> HorocycleFunction {
        let n = self.n_fft;
        let factors: Vec<Complex64> = (0..n).map(|j| m(self.xi(j))).collect();
        let inv = FftCache::new().inverse(n);
        let rows: Vec<Vec<Complex64>> = (0..self.n_b)
            .into_par_iter()
            .map(|k| {
                let mut buf: Vec<Complex64> = spectra.coef[k * n..(k + 1) * n]
                    .iter()
                    .zip(&factors)
                    .map(|(c, f)| c * f)
                    .collect();
                inv.process(&mut buf);
                buf
            })
            .collect();
        HorocycleFunction {
            h_values: self.h_values(),
            b_values: crate::transforms::uniform_angles(self.n_b),
            values: rows.into_iter().flatten().collect(),
        }
    }
}

/// `‖f‖` in `L²(𝔞×B, w⁻¹dH db)`.
fn line_norm(f: &HorocycleFunction) -> f64 {
    weighted_norm_of_t(f, 0.0).value
}

fn difference(a: &HorocycleFunction, b: &HorocycleFunction) -> HorocycleFunction {
    let mut d = a.clone();
    for (x, y) in d.values.iter_mut().zip(&b.values) {
        *x -= y;
    }
    d
}

/// `max_s ‖T_s(p(D_x)e^{ita(D_x)}u₀) − p(sD_H)e^{ita(sD_H)}T_s u₀‖ / ‖u₀‖`.
///
/// The left side propagates the Helgason tables; the right side starts from
/// the horocycle route to `T_s u₀` and applies 1D multipliers, so the
/// residual also carries the discretization difference of the two routes.
pub fn intertwine_homogeneous_check(
    a: &Multiplier,
    p: &Multiplier,
    u0: &FunctionOnX,
    t: f64,
    grid: &EvolutionGrid,
) -> Result<Checked<f64>> {
    let pair = grid.spectral_pair(u0);
    let mut warnings = pair.warnings;
    let evolved = pair.value.map(|tab| {
        propagate(a, t, tab)
            .snapshot
            .map_lambda(|l| Complex64::new(p.eval(l), 0.0))
    });
    let norm = u0.l2_norm();
    let symbol = |xi: f64| Complex64::from_polar(p.eval(xi), t * a.eval(xi));
    let mut worst = 0.0f64;
    for which in [TValues::Plus, TValues::Minus] {
        let lhs = grid.synthesize(&grid.spectra_from_tables(&evolved, which)?, &|_| {
            Complex64::new(1.0, 0.0)
        });
        let line = grid.spectra_via_radon(u0, which)?;
        warnings.extend(line.warnings);
        let rhs = grid.synthesize(&line.value, &symbol);
        let r = line_norm(&difference(&lhs, &rhs));
        worst = worst.max(if norm > 0.0 { r / norm } else { r });
    }
    warnings.dedup();
    Ok(Checked::with(worst, warnings))
}

fn schrodinger_residual(
    u0: &FunctionOnX,
    t: f64,
    grid: &EvolutionGrid,
    rho_phase: bool,
) -> Result<Checked<f64>> {
    let pair = grid.spectral_pair(u0);
    let mut warnings = pair.warnings;
    let evolved = pair
        .value
        .map(|tab| propagate(&Multiplier::Schrodinger, t, tab).snapshot);
    let lhs = grid.synthesize(&grid.spectra_from_tables(&evolved, TValues::Both)?, &|_| {
        Complex64::new(1.0, 0.0)
    });
    let line = grid.spectra_via_radon(u0, TValues::Both)?;
    warnings.extend(line.warnings);
    let phase = if rho_phase { t * RHO * RHO } else { 0.0 };
    let rhs = grid.synthesize(&line.value, &|xi| {
        Complex64::from_polar(1.0, phase + t * xi * xi)
    });
    let r = line_norm(&difference(&lhs, &rhs));
    let norm = u0.l2_norm();
    Ok(Checked::with(
        if norm > 0.0 { r / norm } else { r },
        warnings,
    ))
}

/// `‖T(e^{−itΔ_X}u₀) − e^{it|ρ|²}e^{−itΔ_𝔞}(T u₀)‖ / ‖u₀‖`, with
/// `e^{−itΔ_X}` the propagator of `a = λ² + ρ²` and `e^{−itΔ_𝔞}` that of
/// `ξ²` on the line.
pub fn schrodinger_intertwine_check(
    u0: &FunctionOnX,
    t: f64,
    grid: &EvolutionGrid,
) -> Result<Checked<f64>> {
    schrodinger_residual(u0, t, grid, true)
}

/// `e^{ita(D)}ψ` for samples with spacing `dh` on a periodic line, unitary
/// Fourier convention.
pub fn euclid_propagate_1d(
    a: &Multiplier,
    t: f64,
    psi: &[Complex64],
    dh: f64,
) -> Checked<Vec<Complex64>> {
    euclid_multiplier_1d(&|xi| Complex64::from_polar(1.0, t * a.eval(xi)), psi, dh)
}

/// `m(D)ψ` on a periodic line, with an aliasing warning when `ψ̂` is not
/// small at the Nyquist frequency.
pub fn euclid_multiplier_1d(
    m: &dyn Fn(f64) -> Complex64,
    psi: &[Complex64],
    dh: f64,
) -> Checked<Vec<Complex64>> {
    let n = psi.len();
    if n < 2 {
        return Checked::new(psi.to_vec());
    }
    let mut cache = FftCache::new();
    let mut buf = psi.to_vec();
    cache.forward(n).process(&mut buf);
    let mut warnings = Vec::new();
    let max = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max > 0.0 {
        let nyq = buf[n / 2].norm().max(buf[n.div_ceil(2)].norm()) / max;
        if nyq > 1e-6 {
            warnings.push(Warning::Aliasing { relative: nyq });
        }
    }
    let dxi = TAU / (n as f64 * dh);
    for (j, v) in buf.iter_mut().enumerate() {
        let k = if j <= n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        };
        *v *= m(k * dxi) / n as f64;
    }
    cache.inverse(n).process(&mut buf);
    Checked::with(buf, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{laplace_beltrami_apply, DiscPoint};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn parse_and_names() {
        assert_eq!(
            Multiplier::parse("schrodinger").unwrap(),
            Multiplier::Schrodinger
        );
        assert_eq!(
            Multiplier::parse("poly: 0.25, 1").unwrap(),
            Multiplier::Poly(vec![0.25, 1.0])
        );
        assert_eq!(
            Multiplier::parse("homogeneous:2").unwrap(),
            Multiplier::Homogeneous(2.0)
        );
        assert!(Multiplier::parse("sin").is_err());
        assert!(Multiplier::parse("poly:1,x").is_err());
        let p = Multiplier::parse("poly:0,1").unwrap();
        for l in [0.0, 0.3, 2.0] {
            assert!((p.eval(l) - Multiplier::Schrodinger.eval(l)).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = [
            Multiplier::Poly(vec![1.0, -0.5, 0.3]),
            Multiplier::JapaneseBracket(1.5),
            Multiplier::Homogeneous(3.0),
            Multiplier::Smoothstep {
                inner: 1.0,
                outer: 2.0,
            },
            Multiplier::Product(vec![
                Multiplier::Schrodinger,
                Multiplier::JapaneseBracket(0.5),
            ]),
            Multiplier::Derivative(Box::new(Multiplier::Poly(vec![0.0, 0.0, 1.0]))),
        ];
        for a in &cases {
            for l in [0.7, 1.0, 1.4, 3.0] {
                let h = 1e-5;
                let fd = (a.eval(l + h) - a.eval(l - h)) / (2.0 * h);
                let d = a.derivative(l).unwrap();
                assert!(
                    (fd - d).abs() < 1e-6 * d.abs().max(1.0),
                    "{}: {fd} vs {d}",
                    a.name()
                );
            }
        }
        let sq = Multiplier::SqrtAbsDerivative(Box::new(Multiplier::Schrodinger));
        assert!(sq.derivative(1.0).is_err());
        assert!((sq.eval(2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smoothstep_shape() {
        let chi = Multiplier::Smoothstep {
            inner: 1.0,
            outer: 2.0,
        };
        assert_eq!(chi.eval(0.5), 0.0);
        assert_eq!(chi.eval(2.5), 1.0);
        assert!((chi.eval(1.5) - 0.5).abs() < 1e-15);
        assert!(chi.derivative(1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn growth_constants() {
        let lam: Vec<f64> = (0..200).map(|i| 0.1 * i as f64).collect();
        let c = Multiplier::Schrodinger.growth_constant(&lam).unwrap();
        assert!(c <= 1.0 && c > 0.99, "{c}");
        assert_eq!(
            Multiplier::Poly(vec![1.0, 0.0, 2.0, 0.0]).growth_order(),
            4.0
        );
    }

    #[test]
    fn time_grid_shape() {
        let g = TimeGrid::new(2.0, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.t_values[g.zero_index()], 0.0);
        assert!((g.weights().iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert!(TimeGrid::new(2.0, 7).is_err());
        assert_eq!(TimeGrid::origin().weights(), vec![0.0]);
    }

    fn small() -> (PolarGrid, SpectralGrid) {
        (
            PolarGrid::new(3.2, 96, 32).unwrap(),
            SpectralGrid::new(14.0, 112, 32).unwrap(),
        )
    }

    #[test]
    fn multiplier_apply_identity_zero_and_laplacian() {
        let (g, s) = small();
        let u = FunctionOnX::gaussian(&g, 0.5, &DiscPoint::from_polar(0.3, 0.4));
        let one = multiplier_apply(&Multiplier::Constant(1.0), &u, &s).value;
        assert!(one.rel_l2_error(&u).unwrap() < 1e-3);
        let zero = multiplier_apply(&Multiplier::Constant(0.0), &u, &s).value;
        assert_eq!(zero.max_abs(), 0.0);
        let lap = multiplier_apply(&Multiplier::Schrodinger, &u, &s).value;
        let fd = laplace_beltrami_apply(&u).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (k, ok) in fd.valid.iter().enumerate() {
            if *ok && g.r_values[k / g.n_theta()] < 2.5 {
                num += (lap.values[k] + fd.values.values[k]).norm_sqr();
                den += lap.values[k].norm_sqr();
            }
        }
        assert!((num / den).sqrt() < 1e-2, "{}", (num / den).sqrt());
    }

    #[test]
    fn propagation_is_unitary_group() {
        let (g, s) = small();
        let u = FunctionOnX::gaussian(&g, 0.5, &DiscPoint::from_polar(0.3, 0.4));
        let f = helgason_forward(&u, &s).value;
        let a = Multiplier::Schrodinger;
        assert_eq!(propagate(&a, 0.0, &f).snapshot, f);
        let n0 = propagate(&a, 0.0, &f).plancherel_norm();
        for t in [0.3, -1.0, 5.0] {
            let st = propagate(&a, t, &f);
            assert!((st.plancherel_norm() - n0).abs() < 1e-12 * n0);
        }
        let twice = propagate(&a, 0.4, &propagate(&a, 0.7, &f).snapshot).snapshot;
        let once = propagate(&a, 1.1, &f).snapshot;
        let back = propagate(&a, -1.1, &once).snapshot;
        for (x, y) in twice.values.iter().zip(&once.values) {
            assert!((x - y).norm() < 1e-12 * f.max_abs());
        }
        for (z, w) in back.values.iter().zip(&f.values) {
            assert!((z - w).norm() < 1e-12 * f.max_abs());
        }
    }

    fn toy_table() -> SpectralTable {
        let lam: Vec<f64> = (1..=40).map(|j| 0.1 * j as f64).collect();
        let mut t = SpectralTable::zeros(lam, 0.1, Chamber::Plus, 8);
        for (i, v) in t.values.iter_mut().enumerate() {
            *v = Complex64::new((i % 7) as f64 - 3.0, (i % 5) as f64);
        }
        t
    }

    #[test]
    fn duhamel_trivial_cases() {
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let g = toy_table();
        let a = Multiplier::Schrodinger;
        // zero forcing
        let zero: Vec<SpectralTable> = (0..grid.len()).map(|_| g.map_lambda(|_| c(0.0))).collect();
        assert_eq!(duhamel(&a, &zero, 40, &grid).unwrap().value.max_abs(), 0.0);
        // a ≡ 0: plain time integral of cos(3τ)·g
        let f: Vec<SpectralTable> = grid
            .t_values
            .iter()
            .map(|&t| g.map_lambda(|_| c((3.0 * t).cos())))
            .collect();
        for n in [21usize, 23, 40, 0, 17] {
            let got = duhamel(&Multiplier::Constant(0.0), &f, n, &grid)
                .unwrap()
                .value;
            let want = (3.0 * grid.t_values[n]).sin() / 3.0;
            for (x, y) in got.values.iter().zip(&g.values) {
                assert!((x - y * want).norm() < 1e-5 * y.norm().max(1.0), "n = {n}");
            }
        }
    }

    #[test]
    fn duhamel_stationary_oracle_and_equation() {
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let g = toy_table();
        let a = Multiplier::Poly(vec![0.0, 1.0]);
        // f(τ) = τ²g gives G(t) = 2(e^{βt} − 1 − βt − β²t²/2)/β³ g, β = ia
        let f: Vec<SpectralTable> = grid
            .t_values
            .iter()
            .map(|&t| g.map_lambda(|_| c(t * t)))
            .collect();
        let mut worst = 0.0f64;
        let mut series = vec![None; grid.len()];
        let warnings = duhamel_series(&a, &|n| f[n].clone(), &grid, |n, s| {
            series[n] = Some(s.clone())
        });
        assert!(warnings.is_empty());
        for (n, &t) in grid.t_values.iter().enumerate() {
            let got = series[n].as_ref().unwrap();
            for (j, (x, y)) in got.values.iter().zip(&g.values).enumerate() {
                let b = Complex64::new(0.0, a.eval(got.lambda(j % got.n_lambda())));
                let bt = b * t;
                let want = 2.0 * (bt.exp() - 1.0 - bt - bt * bt / 2.0) / (b * b * b);
                worst = worst.max((x - y * want).norm() / g.max_abs());
            }
        }
        assert!(worst < 1e-9, "{worst}");

        // u = e^{ita}u₀ + iG solves D_t u − a u = f with f(τ) = e^{−τ²}g
        let forcing = |n: usize| {
            let t = grid.t_values[n];
            g.map_lambda(|_| c((-t * t).exp()))
        };
        let mut gs = vec![None; grid.len()];
        duhamel_series(&a, &forcing, &grid, |n, s| gs[n] = Some(s.clone()));
        let dt = grid.dt();
        let u = |n: usize| {
            let prop = propagate(&a, grid.t_values[n], &g).snapshot;
            prop.zip_with(gs[n].as_ref().unwrap(), |p, q| p + Complex64::i() * q)
                .unwrap()
        };
        let mut residual = 0.0f64;
        for n in [60usize, 100, 130, 170] {
            let (u0, up, um, upp, umm) = (u(n), u(n + 1), u(n - 1), u(n + 2), u(n - 2));
            let f_n = forcing(n);
            for j in 0..u0.values.len() {
                let diff = 8.0 * (up.values[j] - um.values[j]) - (upp.values[j] - umm.values[j]);
                let dtu = -Complex64::i() * diff / (12.0 * dt);
                let l = u0.lambda(j % u0.n_lambda());
                let r = dtu - a.eval(l) * u0.values[j] - f_n.values[j];
                residual = residual.max(r.norm() / g.max_abs());
            }
        }
        assert!(residual < 5e-3, "{residual}");
    }

    #[test]
    fn duhamel_warns_on_coarse_steps() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let g = toy_table();
        let f: Vec<SpectralTable> = grid
            .t_values
            .iter()
            .map(|&t| g.map_lambda(|_| c((20.0 * t).cos())))
            .collect();
        let w = duhamel(&Multiplier::Schrodinger, &f, 4, &grid)
            .unwrap()
            .warnings;
        assert!(matches!(w[0], Warning::TimeResolution { .. }));
    }

    #[test]
    fn free_schrodinger_gaussian() {
        let n = 1024;
        let dh = 0.05;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 - (n / 2) as f64) * dh).collect();
        let psi: Vec<Complex64> = xs.iter().map(|x| c((-x * x / 2.0).exp())).collect();
        let a = Multiplier::Homogeneous(2.0);
        let same = euclid_propagate_1d(&a, 0.0, &psi, dh);
        assert!(same.warnings.is_empty());
        for (x, y) in same.value.iter().zip(&psi) {
            assert!((x - y).norm() < 1e-13);
        }
        let t = 0.8;
        let out = euclid_propagate_1d(&a, t, &psi, dh).value;
        let z = Complex64::new(1.0, -2.0 * t);
        let norm = |v: &[Complex64]| v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm(&out) - norm(&psi)).abs() < 1e-12 * norm(&psi));
        for (x, v) in xs.iter().zip(&out) {
            let exact = (-(x * x) / (2.0 * z)).exp() / z.sqrt();
            assert!((v - exact).norm() < 1e-6, "x = {x}");
        }
        let spiky: Vec<Complex64> = (0..64).map(|i| c(if i == 5 { 1.0 } else { 0.0 })).collect();
        assert!(!euclid_propagate_1d(&a, 0.1, &spiky, 0.1)
            .warnings
            .is_empty());
    }

    fn evo_setup() -> (FunctionOnX, EvolutionGrid) {
        let g = PolarGrid::new(3.6, 96, 48).unwrap();
        let u = FunctionOnX::gaussian(&g, 0.5, &DiscPoint::from_polar(0.4, 1.0));
        let grid =
            EvolutionGrid::for_multiplier(&Multiplier::Schrodinger, 12.0, 1.0, 20.0, 48).unwrap();
        (u, grid)
    }

    #[test]
    fn resampled_tables_match_direct_transform() {
        let (u, grid) = evo_setup();
        let pair = grid.spectral_pair(&u).value;
        let lam = grid.lambda_values();
        let picks = [3usize, lam.len() / 3, lam.len() / 2 + 7];
        let at: Vec<f64> = picks.iter().map(|&m| lam[m]).collect();
        for (table, chamber) in [(&pair.plus, Chamber::Plus), (&pair.minus, Chamber::Minus)] {
            let direct = helgason_forward_at(&u, &at, 1.0, chamber, grid.n_b).value;
            let scale = table.max_abs();
            for (i, &m) in picks.iter().enumerate() {
                for k in 0..grid.n_b {
                    let d = (table.value(m, k) - direct.value(i, k)).norm() / scale;
                    assert!(d < 1e-6, "λ = {}: {d:e}", lam[m]);
                }
            }
        }
    }

    #[test]
    fn intertwining_identities() {
        let (u, grid) = evo_setup();
        let a = Multiplier::Schrodinger;
        let one = Multiplier::Constant(1.0);
        let r0 = intertwine_homogeneous_check(&a, &one, &u, 0.0, &grid)
            .unwrap()
            .value;
        let r1 = intertwine_homogeneous_check(&a, &one, &u, 0.5, &grid)
            .unwrap()
            .value;
        assert!(r0 < 1e-4 && r1 < 1e-3, "{r0} {r1}");
        // a constant multiplier only rotates both sides by the same phase
        let rc = intertwine_homogeneous_check(&Multiplier::Constant(0.7), &one, &u, 0.9, &grid)
            .unwrap()
            .value;
        assert!((rc - r0).abs() < 1e-10);
        let s1 = schrodinger_intertwine_check(&u, 1.0, &grid).unwrap().value;
        let no_phase = schrodinger_residual(&u, 1.0, &grid, false).unwrap().value;
        println!("residuals {r0:e} {r1:e} {rc:e} {s1:e} {no_phase:e}");
        assert!(s1 < 1e-3 && no_phase > 0.1, "{s1} {no_phase}");
    }
}
