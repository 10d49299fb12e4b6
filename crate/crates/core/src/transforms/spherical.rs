use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::geometry::RHO;
use crate::report::ExperimentReport;

/// Beyond this radius the boundary average is replaced by the
/// Mehler–Dirichlet integral.
const TRAPEZOID_MAX_R: f64 = 4.0;

const GL_ORDER: usize = 16;

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x.push(z);
            w.push(2.0 / ((1.0 - z * z) * dp * dp));
        }
        (x, w)
    })
}

fn boundary_average(lambda: f64, r: f64) -> Complex64 {
    let t = (0.5 * r).tanh();
    let sum = |n: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let beta = TAU * k as f64 / n as f64;
            let p = (1.0 - t * t) / (1.0 - 2.0 * t * beta.cos() + t * t);
            acc += Complex64::new(RHO * p.ln(), lambda * p.ln()).exp();
        }
        acc / n as f64
    };
    let mut n = 64;
    let mut prev = sum(n);
    while n < 1 << 18 {
        n *= 2;
        let next = sum(n);
        if (next - prev).norm() <= 1e-15 * next.norm().max(1e-300) {
            return Complex64::new(next.re, 0.0);
        }
        prev = next;
    }
    Complex64::new(prev.re, 0.0)
}

/// `φ_λ(r) = (√2/π) ∫_0^r cos(λs) / √(cosh r − cosh s) ds`, with `s = r sin ψ`
/// removing the endpoint singularity.
fn mehler_dirichlet(lambda: f64, r: f64) -> f64 {
    let (x, w) = gauss_legendre();
    let panels = (16.0 + 0.5 * lambda.abs() * r + 2.0 * r).ceil() as usize;
    let h = 0.5 * PI / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            let psi = mid + 0.5 * h * xi;
            let (sp, cp) = psi.sin_cos();
            let s = r * sp;
            let r_minus_s = r * cp * cp / (1.0 + sp);
            let denom = (2.0 * (0.5 * (r + s)).sinh() * (0.5 * r_minus_s).sinh()).sqrt();
            acc += wi * 0.5 * h * (lambda * s).cos() * r * cp / denom;
        }
    }
    2f64.sqrt() / PI * acc
}

/// Elementary spherical function `φ_λ(r) = ∫_B e^{(iλ+ρ)A(x,b)} db` at
/// geodesic radius `r`.
pub fn spherical_function(lambda: f64, r: f64) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if r <= TRAPEZOID_MAX_R {
        boundary_average(lambda, r)
    } else {
        Complex64::new(mehler_dirichlet(lambda, r), 0.0)
    }
}

/// Checks `e^{−ρr} ≤ φ₀(r) ≤ C₁ e^{−ρr}(1 + r)` on `[0, r_max]` and reports
/// the smallest admissible `C₁`.
pub fn phi_zero_bracket(r_max: f64, samples: usize) -> ExperimentReport {
    let mut c1 = 0.0f64;
    let mut lower = f64::INFINITY;
    for i in 0..=samples {
        let r = r_max * i as f64 / samples as f64;
        let phi = spherical_function(0.0, r).re;
        let e = (-RHO * r).exp();
        lower = lower.min(phi / e);
        c1 = c1.max(phi / (e * (1.0 + r)));
    }
    let mut rep = ExperimentReport::new("phi_zero_bracket", "e^{-ρr} ≤ φ₀(r) ≤ C₁ e^{-ρr}(1+r)")
        .family("phi_0")
        .meta("r_max", r_max)
        .meta("samples", samples as u64)
        .norms(c1, 1.0);
    rep.metric("C1", c1);
    rep.metric("min_lower_ratio", lower);
    rep.pass = lower >= 1.0 - 1e-10 && c1.is_finite();
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_origin_is_one() {
        for l in [0.0, 1.0, 17.0] {
            assert_eq!(spherical_function(l, 0.0), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn even_in_lambda() {
        for &r in &[0.3, 2.0, 3.9, 7.0, 15.0] {
            for &l in &[0.4, 2.5, 9.0] {
                let d = (spherical_function(l, r) - spherical_function(-l, r)).norm();
                assert!(d < 1e-10, "r={r} λ={l}");
            }
        }
    }

    #[test]
    fn two_quadratures_agree() {
        for &r in &[0.5, 2.0, 4.0] {
            for &l in &[0.0, 1.0, 6.0] {
                let a = boundary_average(l, r).re;
                let b = mehler_dirichlet(l, r);
                assert!((a - b).abs() < 1e-11, "r={r} λ={l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn phi_zero_bracket_holds() {
        let rep = phi_zero_bracket(20.0, 400);
        assert!(rep.pass, "{:?}", rep.metrics);
    }
}
