use std::f64::consts::PI;

use hypharm::estimates::{
    decay_condition_norm, free_gaussian_gain_norms, gain_regularity_1d, gain_regularity_x,
    homogeneous_result, inhomogeneous_from_pair, kato_baseline_1d, natural_weights,
    shipped_families, smoothing_homogeneous, transfer_comparison, EstimateGrid, Line1d,
    SmoothingConfig,
};
use hypharm::geometry::{DiscPoint, PolarGrid};
use hypharm::transforms::{FunctionOnX, HorocycleGrid, SpectralGrid};
use hypharm::{Multiplier, TimeGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_grid() -> EstimateGrid {
    EstimateGrid {
        r_max: 3.0,
        n_r: 48,
        n_theta: 32,
        lambda_max: 10.0,
        n_b: 32,
        h0: 14.0,
        dt: 0.02,
        h_refinements: 0,
    }
}

fn schrodinger() -> (Multiplier, Multiplier, Multiplier) {
    let a = Multiplier::Schrodinger;
    let (p, q) = natural_weights(&a).unwrap();
    (a, p, q)
}

fn line(id: &str, width: f64, freq: f64, dh: f64, n: usize) -> Line1d {
    Line1d::from_fn(id, dh, n, |h| {
        Complex64::from_polar((-0.5 * (h / width).powi(2)).exp(), freq * h)
    })
}

/// `√(2∫⟨H⟩^{−2δ}dH)`: no datum can exceed it when `p² = |a′|`.
fn kato_ceiling(delta: f64) -> f64 {
    // Γ(0.1)/Γ(0.6) for δ = 0.6
    assert_eq!(delta, 0.6);
    (2.0 * PI.sqrt() * 9.513_507_698_668_732 / 1.489_192_248_812_817).sqrt()
}

#[test]
fn zero_multiplier_gives_zero_lhs() {
    let (a, _, _) = schrodinger();
    let cfg = SmoothingConfig::new(0.6, 0.5).unwrap();
    let fam = &shipped_families(2)[0].members;
    let out =
        smoothing_homogeneous(&a, &Multiplier::Constant(0.0), fam, &cfg, &small_grid()).unwrap();
    for r in &out {
        assert_eq!(r.lhs_norm, 0.0);
        assert!((r.rhs_norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn homogeneous_ratios_scale_and_time_reversal_invariant() {
    let (a, p, _) = schrodinger();
    let grid = small_grid();
    let polar = grid.polar().unwrap();
    let egrid = grid.evolution(&a, 0.5).unwrap();
    let time = grid.time(0.5).unwrap();
    let u = shipped_families(3)[1].members[2].sample(&polar);
    let run = |v: &FunctionOnX| {
        homogeneous_result(&a, &p, v, "m", 0.6, &egrid, &time, Default::default()).unwrap()
    };
    let base = run(&u);
    let scaled = run(&u.scale(Complex64::new(-3.0, 4.0)));
    let reversed =
        run(&FunctionOnX::new(polar.clone(), u.values.iter().map(|v| v.conj()).collect()).unwrap());
    println!(
        "ratios: base {}, scaled {}, reversed {}",
        base.ratio, scaled.ratio, reversed.ratio
    );
    assert!(base.ratio > 0.0 && base.ratio.is_finite());
    assert!((scaled.ratio - base.ratio).abs() < 1e-10 * base.ratio);
    assert!((reversed.ratio - base.ratio).abs() < 1e-6 * base.ratio);
    assert!(base.metrics["horizon_fraction"] < 1.0);
}

#[test]
fn inhomogeneous_trivial_cases() {
    let (a, _, q) = schrodinger();
    let grid = small_grid();
    let polar = grid.polar().unwrap();
    let egrid = grid.evolution(&a, 0.5).unwrap();
    let time = grid.time(0.5).unwrap();
    let cfg = SmoothingConfig::new(0.6, 0.5).unwrap();
    let g = FunctionOnX::gaussian(&polar, 0.5, &DiscPoint::from_polar(0.3, 1.0));
    let pair = egrid.spectral_pair(&g).value;
    let envelope = |t: f64| (-t * t).exp();

    let full =
        inhomogeneous_from_pair(&a, &q, &cfg.chi(), &pair, &envelope, 0.6, &egrid, &time).unwrap();
    assert!(full.ratio > 0.0 && full.ratio.is_finite());

    let zero =
        inhomogeneous_from_pair(&a, &q, &cfg.chi(), &pair, &|_| 0.0, 0.6, &egrid, &time).unwrap();
    assert_eq!(zero.lhs_norm, 0.0);

    // spectrally inside the dead zone of χ
    let low =
        pair.map(|t| t.map_lambda(|l| Complex64::new(if l.abs() <= 1.0 { 1.0 } else { 0.0 }, 0.0)));
    let dead =
        inhomogeneous_from_pair(&a, &q, &cfg.chi(), &low, &envelope, 0.6, &egrid, &time).unwrap();
    println!("dead zone: lhs {} rhs {}", dead.lhs_norm, dead.rhs_norm);
    assert!(dead.rhs_norm > 0.0 && dead.lhs_norm < 1e-6 * dead.rhs_norm);
}

#[test]
fn kato_baseline_widths_and_modulations() {
    let a = Multiplier::Homogeneous(2.0);
    let p = Multiplier::SqrtAbsDerivative(Box::new(a.clone()));
    let ceiling = kato_ceiling(0.6);
    let widths = |dh: f64, n: usize| -> Vec<Line1d> {
        (0..7)
            .map(|j| line(&format!("w{j}"), 2f64.powi(-j), 0.0, dh, n))
            .collect()
    };
    let base = kato_baseline_1d(&a, &p, 0.6, &widths(0.004, 1 << 14)).unwrap();
    let refined = kato_baseline_1d(&a, &p, 0.6, &widths(0.002, 1 << 15)).unwrap();
    println!(
        "widths: C = {} (refined {}), ceiling {ceiling}",
        base.ratio, refined.ratio
    );
    assert!(base.ratio > 0.0 && base.ratio <= ceiling);
    assert!((refined.ratio - base.ratio).abs() < 0.1 * base.ratio);
    for r in base.metrics.values() {
        assert!(*r > 0.5 * base.ratio);
    }

    let sweep: Vec<Line1d> = (0..=8)
        .map(|j| line(&format!("xi{}", 4 * j), 1.0, 4.0 * j as f64, 0.02, 1 << 13))
        .collect();
    let m = kato_baseline_1d(&a, &p, 0.6, &sweep).unwrap();
    println!("modulation sweep: {:?}", m.metrics);
    assert!(m.ratio <= ceiling && m.warnings.is_empty());
    assert_eq!(m.metrics.len(), 9);

    let zero = kato_baseline_1d(&a, &Multiplier::Constant(0.0), 0.6, &widths(0.01, 4096)).unwrap();
    assert_eq!(zero.ratio, 0.0);
    assert!(kato_baseline_1d(&a, &p, 0.5, &sweep).is_err());
}

#[test]
fn transfer_holds_on_gaussians_and_zero_data() {
    let (a, p, _) = schrodinger();
    let grid = small_grid();
    let polar = grid.polar().unwrap();
    let cfg = SmoothingConfig::new(0.6, 0.5).unwrap();
    let fam = &shipped_families(3)[0].members;
    let results = smoothing_homogeneous(&a, &p, fam, &cfg, &grid).unwrap();
    let data: Vec<FunctionOnX> = fam.iter().map(|d| d.sample(&polar)).collect();
    let egrid = grid.evolution(&a, 0.5).unwrap();
    let report = transfer_comparison(&a, &p, 0.6, &results, &data, &egrid).unwrap();
    println!("transfer: margin {}", report.metrics["min_margin"]);
    assert!(report.pass && report.metrics["min_margin"] >= 0.05);

    let zero = FunctionOnX::zeros(&polar);
    let time = grid.time(0.5).unwrap();
    let zr = homogeneous_result(
        &a,
        &p,
        &zero,
        "zero",
        0.6,
        &egrid,
        &time,
        Default::default(),
    )
    .unwrap();
    assert_eq!((zr.lhs_norm, zr.rhs_norm), (0.0, 0.0));
    let report = transfer_comparison(&a, &p, 0.6, &[zr], &[zero], &egrid).unwrap();
    assert!(report.pass);
    assert_eq!(report.metrics["c_delta_1d"], 0.0);
}

#[test]
fn gain_1d_matches_explicit_gaussian_solution() {
    let time = TimeGrid::new(2.0, 200).unwrap();
    let phi = line("gaussian", 1.0, 0.0, 0.05, 2048);
    let report = gain_regularity_1d(&phi, 1, 0.6, &time).unwrap();
    let (lhs, rhs) = free_gaussian_gain_norms(1, 0.6, &time);
    let err = (report.lhs - lhs).abs() / lhs;
    println!(
        "k=1 Gaussian: lhs {} vs {lhs} (rel {err:e}), rhs {} vs {rhs}",
        report.lhs, report.rhs
    );
    assert!(err < 1e-4);
    assert!((report.rhs - rhs).abs() < 1e-8 * rhs);
    // ‖⟨H⟩e^{−H²/2}‖² = (3/2)√π/√2π
    assert!((rhs * rhs - 1.5 / 2f64.sqrt()).abs() < 1e-10);
}

#[test]
fn gain_on_x_transfers_exactly_and_reduces_to_smoothing() {
    let (a, _, _) = schrodinger();
    let grid = small_grid();
    let polar = grid.polar().unwrap();
    let egrid = grid.evolution(&a, 1.0).unwrap();
    let time = grid.time(1.0).unwrap();
    let phi = FunctionOnX::gaussian(&polar, 0.5, &DiscPoint::from_polar(0.4, 2.0));
    for k in [1, 2] {
        let r = gain_regularity_x(&phi, k, 0.6, &time, &egrid).unwrap();
        println!("k={k}: X {} vs 1D {}", r.ratio, r.metrics["ratio_1d"]);
        assert!(r.metrics["transfer_defect"] < 1e-2);
        assert!(r.metrics["continuous_ratio"] > 0.0);
    }
    let r0 = gain_regularity_x(&phi, 0, 0.6, &time, &egrid).unwrap();
    let u = phi.scale(Complex64::new(1.0 / phi.l2_norm(), 0.0));
    let h = homogeneous_result(
        &a,
        &Multiplier::JapaneseBracket(0.5),
        &u,
        "phi",
        0.6,
        &egrid,
        &time,
        Default::default(),
    )
    .unwrap();
    println!("k=0: gain {} vs smoothing {}", r0.ratio, h.ratio);
    assert!((r0.ratio - h.ratio).abs() < 5e-3 * h.ratio);
    assert_eq!(
        gain_regularity_x(&phi, 1, 0.6, &TimeGrid::origin(), &egrid)
            .unwrap()
            .lhs,
        0.0
    );
}

#[test]
fn decay_condition_norms() {
    let polar = PolarGrid::new(3.2, 96, 64).unwrap();
    let sgrid = SpectralGrid::new(14.0, 112, 64).unwrap();
    let hgrid = HorocycleGrid::new(8.0, 128, 64).unwrap();
    let phi = FunctionOnX::gaussian(&polar, 0.45, &DiscPoint::from_polar(0.5, 0.8));
    let full = decay_condition_norm(&phi, 0, (0.0, 2.0 * PI), &sgrid, &hgrid).unwrap();
    let rel = (full - phi.l2_norm()).abs() / phi.l2_norm();
    println!(
        "full circle, k = 0: {full} vs {} (rel {rel:e})",
        phi.l2_norm()
    );
    assert!(rel < 5e-3);
    let mut last = 0.0;
    for k in 0..=3 {
        let v = decay_condition_norm(&phi, k, (0.0, 2.0 * PI), &sgrid, &hgrid).unwrap();
        assert!(v.is_finite() && v >= last, "k = {k}: {v}");
        last = v;
    }
    // φ(−x) = φ(x) makes Tφ(·, b + π) = Tφ(·, b), so opposite halves agree
    let c = DiscPoint::from_polar(0.6, 0.3);
    let even = FunctionOnX::from_point_fn(&polar, |x| {
        let d1 = x.distance(&c);
        let d2 = x.distance(&DiscPoint::from_polar(0.6, 0.3 + PI));
        Complex64::new((-d1 * d1 / 0.5).exp() + (-d2 * d2 / 0.5).exp(), 0.0)
    });
    let first = decay_condition_norm(&even, 1, (0.2, 0.2 + PI), &sgrid, &hgrid).unwrap();
    let second =
        decay_condition_norm(&even, 1, (0.2 + PI, 0.2 + 2.0 * PI), &sgrid, &hgrid).unwrap();
    let whole = decay_condition_norm(&even, 1, (0.0, 2.0 * PI), &sgrid, &hgrid).unwrap();
    println!("half circles: {first} vs {second}");
    assert!((first - second).abs() < 1e-10 * whole);
    assert!((first * first + second * second - whole * whole).abs() < 1e-10 * whole * whole);
    assert!(decay_condition_norm(&phi, 0, (1.0, 1.0), &sgrid, &hgrid).is_err());
}

#[test]
fn config_rejects_small_delta() {
    let err = SmoothingConfig::new(0.5, 1.0).unwrap_err();
    assert!(err.to_string().contains("δ must exceed 1/2"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kato_ratio_is_scale_invariant_and_below_ceiling(
        width in 0.2f64..3.0,
        freq in -6.0f64..6.0,
        scale in 0.01f64..100.0,
    ) {
        let a = Multiplier::Homogeneous(2.0);
        let p = Multiplier::SqrtAbsDerivative(Box::new(a.clone()));
        let psi = line("g", width, freq, 0.05, 4096);
        let scaled = Line1d { values: psi.values.iter().map(|v| v * scale).collect(), ..psi.clone() };
        let r1 = kato_baseline_1d(&a, &p, 0.6, &[psi]).unwrap().ratio;
        let r2 = kato_baseline_1d(&a, &p, 0.6, &[scaled]).unwrap().ratio;
        prop_assert!((r1 - r2).abs() <= 1e-12 * r1);
        prop_assert!(r1 > 0.0 && r1 <= kato_ceiling(0.6) * (1.0 + 1e-12));
    }
}
