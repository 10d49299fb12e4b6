use hypharm::geometry::{
    boundary_jacobian, busemann, cocycle_check, eigen_residual, observed_order, BoundaryPoint,
    DiscPoint, MobiusMap, PolarGrid, RHO,
};
use hypharm::transforms::spherical_function;
use num_complex::Complex64;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = DiscPoint> {
    (0.0f64..0.95, 0.0f64..std::f64::consts::TAU)
        .prop_map(|(rad, t)| DiscPoint::new(rad * t.cos(), rad * t.sin()).unwrap())
}

fn isometry() -> impl Strategy<Value = MobiusMap> {
    (0.0f64..3.0, 0.0f64..6.3, 0.0f64..6.3, -2.0f64..2.0).prop_map(|(s, phi, rot, p)| {
        MobiusMap::translation(s, phi)
            .compose(&MobiusMap::rotation(rot))
            .compose(&MobiusMap::parabolic(p, phi + 1.0))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cocycle_identity(g in isometry(), x in point(), beta in 0.0f64..6.3) {
        let b = BoundaryPoint::new(beta);
        // Skip the measure-zero configurations where g·x approaches g·b.
        let gx = g.apply(&x);
        let gb = g.apply_boundary(&b);
        prop_assume!((gx.z() - gb.z()).norm() > 1e-6 && (x.z() - b.z()).norm() > 1e-6);
        prop_assert!(g.validate().is_ok());
        let res = cocycle_check(&g, &x, &b).unwrap();
        prop_assert!(res <= 1e-10, "residual {}", res);
        let j = boundary_jacobian(&g, &b);
        let want = (-2.0 * RHO * busemann(&g.apply(&DiscPoint::ORIGIN), &gb).unwrap()).exp();
        prop_assert!((j - want).abs() <= 1e-15 * want);
    }

    #[test]
    fn distance_is_invariant(g in isometry(), x in point(), y in point()) {
        let d = x.distance(&y);
        let gd = g.apply(&x).distance(&g.apply(&y));
        prop_assert!((d - gd).abs() <= 1e-10 * d.max(1.0), "{} vs {}", d, gd);
    }
}

fn orders(u: impl Fn(&DiscPoint) -> Complex64 + Copy, mu: f64) -> (Vec<f64>, f64) {
    let errs: Vec<f64> = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let g = PolarGrid::new(2.0, n, 2 * n).unwrap();
            eigen_residual(u, mu, &g, &[0.5, 1.0]).unwrap()
        })
        .collect();
    let p = observed_order(&errs);
    (errs, p)
}

#[test]
fn plane_wave_laplacian_converges_at_second_order() {
    let lam = 1.0;
    let b = BoundaryPoint::new(0.9);
    let (errs, p) = orders(
        |x| {
            Complex64::new(RHO, lam)
                .scale(busemann(x, &b).unwrap())
                .exp()
        },
        lam * lam + RHO * RHO,
    );
    println!("plane wave residuals {errs:?}, order {p:.3}");
    assert!(p >= 1.8);
}

#[test]
fn spherical_function_laplacian_converges_at_second_order() {
    let lam = 1.0;
    let (errs, p) = orders(
        |x| spherical_function(lam, x.radius()),
        lam * lam + RHO * RHO,
    );
    println!("spherical function residuals {errs:?}, order {p:.3}");
    assert!(p >= 1.8);
}
