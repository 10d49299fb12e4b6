//! Poincaré-disc model of the hyperbolic plane (curvature −1).
//!
//! Points at geodesic distance `r` from the origin sit at Euclidean radius
//! `tanh(r/2)`. Horocycles are parametrized through the upper half-plane,
//! where the unipotent subgroup acts by horizontal translation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::FunctionOnX;

/// ρ for the hyperbolic plane.
pub const RHO: f64 = 0.5;

const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint {
    pub u: f64,
    pub v: f64,
}

impl DiscPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u * u + v * v < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "({u}, {v}) is not inside the unit disc"
            )));
        }
        Ok(Self { u, v })
    }

    pub const ORIGIN: DiscPoint = DiscPoint { u: 0.0, v: 0.0 };

    /// Point at geodesic distance `r` from the origin in direction `theta`.
    pub fn from_polar(r: f64, theta: f64) -> Self {
        let rho = (0.5 * r).tanh();
        Self {
            u: rho * theta.cos(),
            v: rho * theta.sin(),
        }
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u * self.u + self.v * self.v
    }

    /// Geodesic distance to the origin.
    pub fn radius(&self) -> f64 {
        2.0 * self.norm_sqr().sqrt().atanh()
    }

    pub fn angle(&self) -> f64 {
        self.v.atan2(self.u)
    }

    pub fn distance(&self, other: &DiscPoint) -> f64 {
        let d2 = (self.z() - other.z()).norm_sqr();
        let denom = (1.0 - self.norm_sqr()) * (1.0 - other.norm_sqr());
        // acosh(1 + x) computed without cancellation for small x
        let x = 2.0 * d2 / denom;
        (x + (x * (x + 2.0)).sqrt()).ln_1p()
    }
}

/// A point `e^{iβ}` of the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub beta: f64,
}

impl BoundaryPoint {
    pub fn new(beta: f64) -> Self {
        let mut b = beta.rem_euclid(TAU);
        if b >= TAU {
            b = 0.0;
        }
        Self { beta: b }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.beta)
    }

    pub fn antipode(&self) -> Self {
        Self::new(self.beta + PI)
    }
}

/// Horocycle `ξ(H, b)`: the level set `{x : A(x, b) = H}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorocycleCoord {
    pub h: f64,
    pub b: BoundaryPoint,
}

/// Busemann function `A(x, b) = ln[(1 − |x|²) / |x − b|²]`.
///
/// `A(tanh(s/2)·b, b) = s`, and `e^{(iλ+ρ)A(·,b)}` is a Laplace eigenfunction
/// with eigenvalue `−(λ² + ρ²)`.
pub fn busemann(x: &DiscPoint, b: &BoundaryPoint) -> Result<f64> {
    let d2 = (x.z() - b.z()).norm_sqr();
    if d2.sqrt() < BOUNDARY_TOL {
        return Err(Error::BoundaryProximity {
            beta: b.beta,
            tol: BOUNDARY_TOL,
        });
    }
    Ok(((1.0 - x.norm_sqr()) / d2).ln())
}

/// Disc isometry `z ↦ (αz + β) / (β̄z + ᾱ)` with `|α|² − |β|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    pub fn identity() -> Self {
        Self::from_su11(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Builds the SU(1,1) element with first row `(alpha, beta)`, rescaled
    /// to unit determinant. Errors if `|alpha| ≤ |beta|`.
    pub fn su11(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let det = alpha.norm_sqr() - beta.norm_sqr();
        if !(det > 0.0) {
            return Err(Error::InvalidParameter(
                "SU(1,1) element needs |α| > |β|".into(),
            ));
        }
        let s = det.sqrt();
        Ok(Self::from_su11(alpha / s, beta / s))
    }

    fn from_su11(alpha: Complex64, beta: Complex64) -> Self {
        Self {
            a: alpha,
            b: beta,
            c: beta.conj(),
            d: alpha.conj(),
        }
    }

    /// Rotation about the origin by `phi`.
    pub fn rotation(phi: f64) -> Self {
        Self::from_su11(
            Complex64::from_polar(1.0, 0.5 * phi),
            Complex64::new(0.0, 0.0),
        )
    }

    /// Hyperbolic translation by distance `s` along the geodesic from the
    /// origin toward the boundary point at angle `phi`; maps o to
    /// `tanh(s/2)·e^{iφ}`.
    pub fn translation(s: f64, phi: f64) -> Self {
        let ch = (0.5 * s).cosh();
        let sh = (0.5 * s).sinh();
        Self::from_su11(Complex64::new(ch, 0.0), Complex64::from_polar(sh, phi))
    }

    /// Parabolic map fixing the boundary point at angle `phi`; in the
    /// half-plane picture with that point at ∞ it is `w ↦ w + s`.
    pub fn parabolic(s: f64, phi: f64) -> Self {
        // Cayley conjugate of [[1, s], [0, 1]] fixing 1, then rotated.
        let alpha = Complex64::new(1.0, 0.5 * s);
        let beta = Complex64::new(0.0, -0.5 * s);
        let g = Self::from_su11(alpha, beta);
        let r = Self::rotation(phi);
        r.compose(&g).compose(&r.inverse())
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply_z(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn apply(&self, x: &DiscPoint) -> DiscPoint {
        let w = self.apply_z(x.z());
        DiscPoint { u: w.re, v: w.im }
    }

    pub fn apply_boundary(&self, b: &BoundaryPoint) -> BoundaryPoint {
        BoundaryPoint::new(self.apply_z(b.z()).arg())
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        let det = self.det();
        MobiusMap {
            a: self.d / det,
            b: -self.b / det,
            c: -self.c / det,
            d: self.a / det,
        }
    }

    /// Checks `|det| = 1` and that sampled boundary points stay on the circle.
    pub fn validate(&self) -> Result<()> {
        if (self.det().norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Möbius determinant modulus {} ≠ 1",
                self.det().norm()
            )));
        }
        for k in 0..16 {
            let w = self.apply_z(Complex64::from_polar(1.0, TAU * k as f64 / 16.0));
            if (w.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter(
                    "Möbius map does not preserve the unit circle".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `|A(g·x, g·b) − A(x, b) − A(g·o, g·b)|`
pub fn cocycle_check(g: &MobiusMap, x: &DiscPoint, b: &BoundaryPoint) -> Result<f64> {
    let gb = g.apply_boundary(b);
    let lhs = busemann(&g.apply(x), &gb)?;
    let rhs = busemann(x, b)? + busemann(&g.apply(&DiscPoint::ORIGIN), &gb)?;
    Ok((lhs - rhs).abs())
}

/// Radon–Nikodym factor `d(g·b)/db = e^{−2ρ A(g·o, g·b)}`.
pub fn boundary_jacobian(g: &MobiusMap, b: &BoundaryPoint) -> f64 {
    let go = g.apply(&DiscPoint::ORIGIN);
    let gb = g.apply_boundary(b);
    let a = busemann(&go, &gb).expect("g·o lies inside the disc");
    (-2.0 * RHO * a).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorocyclePoint {
    pub point: DiscPoint,
    /// Arc-parameter value.
    pub s: f64,
    /// Trapezoid weight in arc length.
    pub weight: f64,
}

/// Point of `ξ(H, b)` at signed arc length `s` from the point nearest o.
///
/// In the half-plane with `b` at ∞ this is `w = e^H (s + i)`, mapped back by
/// the Cayley transform `z = (w − i)/(w + i)` and the rotation by `e^{iβ}`.
pub fn horocycle_point(h: f64, b: &BoundaryPoint, s: f64) -> DiscPoint {
    let w = Complex64::new(h.exp() * s, h.exp());
    let i = Complex64::new(0.0, 1.0);
    let z = b.z() * (w - i) / (w + i);
    DiscPoint { u: z.re, v: z.im }
}

/// `cosh d(o, x(s)) = cosh H + e^H s² / 2` along `ξ(H, b)`.
pub fn horocycle_cosh_radius(h: f64, s: f64) -> f64 {
    h.cosh() + 0.5 * h.exp() * s * s
}

/// Samples `ξ(H, b)` at the given uniform, symmetric arc-parameter grid.
pub fn horocycle_points(xi: &HorocycleCoord, arc_params: &[f64]) -> Result<Vec<HorocyclePoint>> {
    let n = arc_params.len();
    if n < 2 {
        return Err(Error::GridTooCoarse(
            "need at least two arc parameters".into(),
        ));
    }
    let ds = arc_params[1] - arc_params[0];
    if !(ds > 0.0) || (arc_params[0] + arc_params[n - 1]).abs() > 1e-9 * ds.max(1.0) {
        return Err(Error::InvalidParameter(
            "arc-parameter grid must be increasing and symmetric about 0".into(),
        ));
    }
    Ok(arc_params
        .iter()
        .enumerate()
        .map(|(k, &s)| HorocyclePoint {
            point: horocycle_point(xi.h, &xi.b, s),
            s,
            weight: if k == 0 || k == n - 1 { 0.5 * ds } else { ds },
        })
        .collect())
}

/// Composite Simpson weights (without the step factor) on `n + 1` nodes,
/// `n` even.
pub fn simpson_weights(n: usize) -> Vec<f64> {
    assert!(
        n >= 2 && n.is_multiple_of(2),
        "Simpson needs an even number of intervals"
    );
    (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                1.0 / 3.0
            } else if i % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            }
        })
        .collect()
}

/// Geodesic-polar grid on the ball `B(o, R_max)`.
///
/// Radii `r_i = iΔr`, `i = 0..=n_r` (`n_r` even, composite Simpson), angles
/// `θ_j = jΔθ`, `j < n_θ` (trapezoid). Node weights are
/// `simpson_i · Δr · sinh(r_i) · Δθ`; the origin carries zero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub r_max: f64,
    pub r_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    /// Per-ring weight `simpson_i · Δr · sinh(r_i) · Δθ`.
    pub ring_weights: Vec<f64>,
}

impl PolarGrid {
    pub fn new(r_max: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max <= 12.0) {
            return Err(Error::InvalidParameter(format!(
                "R_max must lie in (0, 12], got {r_max}"
            )));
        }
        if n_r < 4 || !n_r.is_multiple_of(2) {
            return Err(Error::GridTooCoarse(format!(
                "n_r must be even and ≥ 4, got {n_r}"
            )));
        }
        if n_theta < 8 {
            return Err(Error::GridTooCoarse(format!(
                "n_theta must be ≥ 8, got {n_theta}"
            )));
        }
        let dr = r_max / n_r as f64;
        let dtheta = TAU / n_theta as f64;
        let r_values: Vec<f64> = (0..=n_r).map(|i| i as f64 * dr).collect();
        let theta_values = (0..n_theta).map(|j| j as f64 * dtheta).collect();
        let ring_weights = simpson_weights(n_r)
            .iter()
            .zip(&r_values)
            .map(|(w, r)| w * dr * r.sinh() * dtheta)
            .collect();
        Ok(Self {
            r_max,
            r_values,
            theta_values,
            ring_weights,
        })
    }

    pub fn n_r(&self) -> usize {
        self.r_values.len() - 1
    }

    pub fn n_theta(&self) -> usize {
        self.theta_values.len()
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n_r() as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta() as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.r_values.len() * self.theta_values.len()
    }

    /// Flat index of node `(i, j)`: ring-major.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta() + j
    }

    pub fn point(&self, i: usize, j: usize) -> DiscPoint {
        DiscPoint::from_polar(self.r_values[i], self.theta_values[j])
    }

    pub fn weight(&self, i: usize, _j: usize) -> f64 {
        self.ring_weights[i]
    }

    pub fn total_weight(&self) -> f64 {
        self.ring_weights.iter().sum::<f64>() * self.n_theta() as f64
    }

    /// Exact hyperbolic area of `B(o, R_max)`.
    pub fn exact_area(&self) -> f64 {
        TAU * (self.r_max.cosh() - 1.0)
    }

    /// Same radius, twice the nodes in each direction.
    pub fn refined(&self) -> Self {
        Self::new(self.r_max, 2 * self.n_r(), 2 * self.n_theta()).expect("refining a valid grid")
    }
}

/// Finite-difference Laplacian together with the nodes where it is defined.
#[derive(Debug, Clone)]
pub struct LaplacianOutput {
    pub values: FunctionOnX,
    /// `valid[k]` is false on the origin and on the outer ring.
    pub valid: Vec<bool>,
}

/// Second-order central differences for `∂²_r + coth r ∂_r + sinh⁻² r ∂²_θ`.
pub fn laplace_beltrami_apply(u: &FunctionOnX) -> Result<LaplacianOutput> {
    let g = &u.grid;
    let (nr, nt) = (g.n_r(), g.n_theta());
    if nr + 1 < 4 || nt < 8 {
        return Err(Error::GridTooCoarse(format!(
            "Laplacian needs ≥ 4 radial and ≥ 8 angular nodes, got {} × {nt}",
            nr + 1
        )));
    }
    let dr = g.dr();
    let dt = g.dtheta();
    let mut out = vec![Complex64::new(0.0, 0.0); g.n_nodes()];
    let mut valid = vec![false; g.n_nodes()];
    for i in 1..nr {
        let r = g.r_values[i];
        let coth = 1.0 / r.tanh();
        let csch2 = 1.0 / (r.sinh() * r.sinh());
        for j in 0..nt {
            let c = u.values[g.index(i, j)];
            let up = u.values[g.index(i + 1, j)];
            let dn = u.values[g.index(i - 1, j)];
            let jp = u.values[g.index(i, (j + 1) % nt)];
            let jm = u.values[g.index(i, (j + nt - 1) % nt)];
            let urr = (up - 2.0 * c + dn) / (dr * dr);
            let ur = (up - dn) / (2.0 * dr);
            let utt = (jp - 2.0 * c + jm) / (dt * dt);
            let k = g.index(i, j);
            out[k] = urr + coth * ur + csch2 * utt;
            valid[k] = true;
        }
    }
    Ok(LaplacianOutput {
        values: FunctionOnX {
            grid: g.clone(),
            values: out,
        },
        valid,
    })
}

/// Largest relative eigen-residual `|Δu + μu| / |u|` of the finite-difference
/// Laplacian over the nodes lying on `radii`, for `u` sampled on the grid
/// `(r_max, n_r, n_theta)`.
pub fn eigen_residual(
    u: impl Fn(&DiscPoint) -> Complex64,
    mu: f64,
    grid: &PolarGrid,
    radii: &[f64],
) -> Result<f64> {
    let f = FunctionOnX::from_point_fn(grid, u);
    let lap = laplace_beltrami_apply(&f)?;
    let mut worst = 0.0f64;
    for &r in radii {
        let i = (r / grid.dr()).round() as usize;
        if i == 0 || i >= grid.n_r() || (grid.r_values[i] - r).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "radius {r} is not an interior grid ring"
            )));
        }
        for j in 0..grid.n_theta() {
            let k = grid.index(i, j);
            let v = f.values[k];
            worst = worst.max((lap.values.values[k] + mu * v).norm() / v.norm());
        }
    }
    Ok(worst)
}

/// Observed order `log₂(e_{n−1} / e_n)` from the last two entries of a
/// sequence of errors on grids refined by factors of two.
pub fn observed_order(errors: &[f64]) -> f64 {
    match errors {
        [.., a, b] => (a / b).log2(),
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busemann_origin_and_geodesic() {
        let b = BoundaryPoint::new(1.3);
        assert_eq!(busemann(&DiscPoint::ORIGIN, &b).unwrap(), 0.0);
        for s in [-2.0, -0.5, 0.3, 1.0, 4.0] {
            let x = DiscPoint::from_polar(s, 1.3);
            assert!((busemann(&x, &b).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn busemann_boundary_error() {
        let b = BoundaryPoint::new(0.0);
        let x = DiscPoint {
            u: 1.0 - 1e-14,
            v: 0.0,
        };
        assert!(matches!(
            busemann(&x, &b),
            Err(Error::BoundaryProximity { .. })
        ));
    }

    #[test]
    fn rotation_invariance_is_exact_enough() {
        let g = MobiusMap::rotation(0.7);
        let x = DiscPoint::new(0.3, -0.4).unwrap();
        let b = BoundaryPoint::new(2.0);
        let lhs = busemann(&g.apply(&x), &g.apply_boundary(&b)).unwrap();
        assert!((lhs - busemann(&x, &b).unwrap()).abs() < 1e-14);
        assert!(cocycle_check(&g, &x, &b).unwrap() < 1e-14);
        assert!((boundary_jacobian(&g, &b) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn translation_sign_convention() {
        // g·o = tanh(s/2)·b, so A(g·o, g·b) = +s for b at angle 0.
        let s = 1.7;
        let g = MobiusMap::translation(s, 0.0);
        let b = BoundaryPoint::new(0.0);
        let gb = g.apply_boundary(&b);
        assert!(gb.beta.abs() < 1e-14 || (gb.beta - TAU).abs() < 1e-14);
        let a = busemann(&g.apply(&DiscPoint::ORIGIN), &gb).unwrap();
        assert!((a - s).abs() < 1e-12);
        assert!(cocycle_check(&g, &DiscPoint::ORIGIN, &b).unwrap() < 1e-12);
    }

    #[test]
    fn identity_jacobian_and_cocycle() {
        let g = MobiusMap::identity();
        for k in 0..8 {
            let b = BoundaryPoint::new(k as f64);
            assert!((boundary_jacobian(&g, &b) - 1.0).abs() < 1e-15);
            let x = DiscPoint::new(0.1 * k as f64, 0.05).unwrap();
            assert!(cocycle_check(&g, &x, &b).unwrap() < 1e-15);
        }
    }

    #[test]
    fn jacobian_has_unit_mass() {
        let g = MobiusMap::translation(1.0, 0.4);
        let n = 512;
        let mass: f64 = (0..n)
            .map(|k| boundary_jacobian(&g, &BoundaryPoint::new(TAU * k as f64 / n as f64)))
            .sum::<f64>()
            / n as f64;
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn parabolic_fixes_its_boundary_point() {
        let g = MobiusMap::parabolic(0.8, 1.1);
        g.validate().unwrap();
        let b = BoundaryPoint::new(1.1);
        assert!((g.apply_boundary(&b).beta - 1.1).abs() < 1e-12);
        // horocycles at b are preserved
        let x = horocycle_point(0.4, &b, 0.3);
        assert!((busemann(&g.apply(&x), &b).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn horocycle_level_set_and_circle() {
        let b = BoundaryPoint::new(2.2);
        let xi = HorocycleCoord { h: -0.7, b };
        let s: Vec<f64> = (0..=40).map(|k| -5.0 + 0.25 * k as f64).collect();
        let pts = horocycle_points(&xi, &s).unwrap();
        // Euclidean circle tangent at b: centre c = (1 − R)b
        let p0 = pts[20].point.z();
        let radius = 0.5 * (b.z() - p0).norm();
        let centre = b.z() * (1.0 - radius);
        for p in &pts {
            assert!((busemann(&p.point, &b).unwrap() - xi.h).abs() < 1e-9);
            assert!(((p.point.z() - centre).norm() - radius).abs() < 1e-9);
            let ch = horocycle_cosh_radius(xi.h, p.s);
            assert!((p.point.radius().cosh() - ch).abs() < 1e-9 * ch);
        }
        let o = horocycle_point(0.0, &b, 0.0);
        assert!(o.norm_sqr() < 1e-30);
    }

    #[test]
    fn polar_grid_area() {
        let g = PolarGrid::new(3.0, 256, 64).unwrap();
        assert!((g.total_weight() / g.exact_area() - 1.0).abs() < 1e-3);
        assert!(PolarGrid::new(3.0, 3, 64).is_err());
        assert!(PolarGrid::new(13.0, 8, 64).is_err());
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = PolarGrid::new(2.0, 16, 16).unwrap();
        let u = FunctionOnX::from_fn(&g, |_, _| Complex64::new(2.5, -1.0));
        let out = laplace_beltrami_apply(&u).unwrap();
        for (v, ok) in out.values.values.iter().zip(&out.valid) {
            if *ok {
                assert!(v.norm() < 1e-9);
            }
        }
    }
}
