use std::f64::consts::TAU;

use hypharm::geometry::{
    busemann, laplace_beltrami_apply, BoundaryPoint, DiscPoint, MobiusMap, PolarGrid, RHO,
};
use hypharm::transforms::{
    dual_radon, helgason_forward, helgason_forward_at, helgason_inverse, isometry_t, radon_forward,
    radon_inverse, t_via_radon, Chamber, FunctionOnX, HorocycleFunction, HorocycleGrid,
    SpectralGrid, SpectralMeasure, TValues, INV_SQRT_2PI,
};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grids() -> (PolarGrid, SpectralGrid, HorocycleGrid) {
    (
        PolarGrid::new(3.2, 96, 48).unwrap(),
        SpectralGrid::new(14.0, 112, 48).unwrap(),
        HorocycleGrid::new(8.0, 128, 48).unwrap(),
    )
}

fn bump(g: &PolarGrid) -> FunctionOnX {
    FunctionOnX::gaussian(g, 0.45, &DiscPoint::from_polar(0.5, 0.8))
}

/// Trigonometric interpolation of a periodic row sampled at `2πk/n`.
fn trig_interp(row: &[Complex64], beta: f64) -> Complex64 {
    let n = row.len();
    let mut acc = c(0.0, 0.0);
    for m in 0..n {
        let freq = if m <= n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        };
        let mut coef = c(0.0, 0.0);
        for (k, v) in row.iter().enumerate() {
            coef += v * Complex64::from_polar(1.0, -freq * TAU * k as f64 / n as f64);
        }
        let w = if n.is_multiple_of(2) && m == n / 2 {
            0.5
        } else {
            1.0
        };
        acc += coef * w * Complex64::from_polar(1.0, freq * beta);
        if n.is_multiple_of(2) && m == n / 2 {
            acc += coef * 0.5 * Complex64::from_polar(1.0, -freq * beta);
        }
    }
    acc / n as f64
}

#[test]
fn projection_slice() {
    let (g, _, h) = grids();
    let u = bump(&g);
    let ru = radon_forward(&u, &h).value;
    let lam = [0.5, 1.5, 4.0];
    let f = helgason_forward_at(&u, &lam, 1.0, Chamber::Plus, h.n_b).value;
    let dh = ru.dh();
    let mut worst = 0.0f64;
    for (j, &l) in lam.iter().enumerate() {
        for k in 0..h.n_b {
            let mut acc = c(0.0, 0.0);
            for (i, &hh) in ru.h_values.iter().enumerate() {
                let w = if i == 0 || i + 1 == ru.n_h() {
                    0.5
                } else {
                    1.0
                };
                acc += ru.value(i, k) * Complex64::new(RHO * hh, -l * hh).exp() * w;
            }
            acc *= dh * INV_SQRT_2PI;
            worst = worst.max((acc - f.value(j, k)).norm() / f.max_abs());
        }
    }
    println!("projection-slice relative error {worst:e}");
    assert!(worst < 1e-3);
}

#[test]
fn adjointness() {
    let (g, _, h) = grids();
    let u = bump(&g);
    let phi = HorocycleFunction::from_fn(&h, |hh, b| {
        c(
            (-(hh - 0.4).powi(2)).exp() * (1.0 + 0.3 * b.cos()),
            0.2 * (-hh * hh).exp() * b.sin(),
        )
    });
    let lhs = u.pairing(&dual_radon(&phi, &g).value).unwrap();
    let rhs = radon_forward(&u, &h).value.pairing_dxi(&phi).unwrap();
    let rel = (lhs - rhs).norm() / rhs.norm();
    println!("adjointness relative error {rel:e}");
    assert!(rel < 1e-3);
}

#[test]
fn radon_inversion_converges() {
    let g = PolarGrid::new(3.2, 96, 64).unwrap();
    let h = HorocycleGrid::new(8.0, 128, 64).unwrap();
    let e0 = radon_inverse(&bump(&g), &h)
        .value
        .rel_l2_error(&bump(&g))
        .unwrap();
    let (g1, h1) = (g.refined(), h.refined());
    let e1 = radon_inverse(&bump(&g1), &h1)
        .value
        .rel_l2_error(&bump(&g1))
        .unwrap();
    println!("Radon inversion error {e0:e} -> {e1:e}");
    assert!(e0 < 1e-2 && e1 < e0);
}

#[test]
fn radial_radon_inverse_stays_radial() {
    let g = PolarGrid::new(3.0, 48, 32).unwrap();
    let h = HorocycleGrid::new(8.0, 96, 32).unwrap();
    let u = FunctionOnX::gaussian(&g, 0.5, &DiscPoint::ORIGIN);
    let v = radon_inverse(&u, &h).value;
    assert!(v.angular_variation() < 1e-6, "{}", v.angular_variation());
}

#[test]
fn chambers_reconstruct_alike() {
    let (g, s, _) = grids();
    let u = bump(&g);
    let lam = s.lambda_values();
    let plus = helgason_forward_at(&u, &lam, s.dlambda(), Chamber::Plus, s.n_b).value;
    let minus = helgason_forward_at(&u, &lam, s.dlambda(), Chamber::Minus, s.n_b).value;
    let up = helgason_inverse(&plus, &g).value;
    let um = helgason_inverse(&minus, &g).value;
    let rel = up.rel_l2_error(&um).unwrap();
    println!("chamber reconstruction difference {rel:e}");
    assert!(rel < 1e-3);
    assert!(up.rel_l2_error(&u).unwrap() < 1e-3);
}

fn equivariance_defect(gmap: &MobiusMap) -> f64 {
    let (g, s, _) = grids();
    let centre = DiscPoint::from_polar(0.5, 0.8);
    let u = FunctionOnX::gaussian(&g, 0.45, &centre);
    // τ_g u(x) = u(g·x) is the Gaussian centred at g⁻¹·centre.
    let moved = FunctionOnX::gaussian(&g, 0.45, &gmap.inverse().apply(&centre));
    let lam = [0.5, 2.0, 5.0];
    let fu = helgason_forward_at(&u, &lam, 1.0, Chamber::Plus, s.n_b).value;
    let fm = helgason_forward_at(&moved, &lam, 1.0, Chamber::Plus, s.n_b).value;
    let go = gmap.apply(&DiscPoint::ORIGIN);
    let mut worst = 0.0f64;
    for (j, &l) in lam.iter().enumerate() {
        let column: Vec<Complex64> = (0..s.n_b).map(|k| fu.value(j, k)).collect();
        for k in 0..s.n_b {
            let gb = gmap.apply_boundary(&BoundaryPoint::new(fm.b_values[k]));
            let a = busemann(&go, &gb).unwrap();
            let want = Complex64::new(-RHO * a, l * a).exp() * trig_interp(&column, gb.beta);
            worst = worst.max((fm.value(j, k) - want).norm() / fu.max_abs());
        }
    }
    worst
}

#[test]
fn equivariance_under_rotation_and_translation() {
    let rot = equivariance_defect(&MobiusMap::rotation(0.7));
    let tr = equivariance_defect(&MobiusMap::translation(0.4, 2.0));
    println!("equivariance defects: rotation {rot:e}, translation {tr:e}");
    assert!(rot < 1e-3 && tr < 1e-3);
}

#[test]
fn spectral_laplacian_matches_finite_differences() {
    let g = PolarGrid::new(3.2, 192, 64).unwrap();
    let s = SpectralGrid::new(16.0, 128, 64).unwrap();
    let u = bump(&g);
    let f = helgason_forward(&u, &s)
        .value
        .map_lambda(|l| c(l * l + RHO * RHO, 0.0));
    let spectral = helgason_inverse(&f, &g).value;
    let fd = laplace_beltrami_apply(&u).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (k, ok) in fd.valid.iter().enumerate() {
        let r = g.r_values[k / g.n_theta()];
        if *ok && r > g.dr() {
            num += (spectral.values[k] + fd.values.values[k]).norm_sqr();
            den += spectral.values[k].norm_sqr();
        }
    }
    let rel = (num / den).sqrt();
    println!("eigen-consistency relative error {rel:e}");
    assert!(rel < 1e-2);
}

#[test]
fn t_equals_weighted_lambda_radon() {
    let (g, s, h) = grids();
    let u = bump(&g);
    let a = isometry_t(&u, &s, &h, TValues::Both).value;
    let b = t_via_radon(&u, &h, &SpectralMeasure::hyperbolic_plane()).value;
    let mut worst = 0.0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        worst = worst.max((x - y).norm());
    }
    let rel = worst / a.max_abs();
    println!("T vs e^(ρH)ΛR relative error {rel:e}");
    assert!(rel < 1e-3);
}

#[test]
fn transforms_are_linear() {
    let g = PolarGrid::new(2.5, 32, 16).unwrap();
    let s = SpectralGrid::new(8.0, 32, 16).unwrap();
    let h = HorocycleGrid::new(5.0, 32, 16).unwrap();
    let u = FunctionOnX::gaussian(&g, 0.4, &DiscPoint::from_polar(0.3, 0.1));
    let v = FunctionOnX::from_fn(&g, |r, t| c((-r * r).exp() * t.cos(), (-2.0 * r * r).exp()));
    let (al, be) = (c(0.3, -1.2), c(-2.0, 0.5));
    let w = u.zip_with(&v, |x, y| al * x + be * y).unwrap();
    let check = |x: &[Complex64], y: &[Complex64], z: &[Complex64]| {
        let scale = z.iter().map(|q| q.norm()).fold(0.0, f64::max);
        for ((p, q), r) in x.iter().zip(y).zip(z) {
            assert!((al * p + be * q - r).norm() <= 1e-10 * scale);
        }
    };
    check(
        &helgason_forward(&u, &s).value.values,
        &helgason_forward(&v, &s).value.values,
        &helgason_forward(&w, &s).value.values,
    );
    check(
        &radon_forward(&u, &h).value.values,
        &radon_forward(&v, &h).value.values,
        &radon_forward(&w, &h).value.values,
    );
    let fu = helgason_forward(&u, &s).value;
    let fv = helgason_forward(&v, &s).value;
    let fw = helgason_forward(&w, &s).value;
    check(
        &helgason_inverse(&fu, &g).value.values,
        &helgason_inverse(&fv, &g).value.values,
        &helgason_inverse(&fw, &g).value.values,
    );
}
