//! The self-test: every trivial identity plus the reference checks that run
//! in a few seconds.

use hypharm::estimates::{free_gaussian_gain_norms, gain_regularity_1d, kato_baseline_1d};
use hypharm::evolution::propagate;
use hypharm::geometry::{busemann, cocycle_check, BoundaryPoint, DiscPoint, MobiusMap, PolarGrid};
use hypharm::specialfn::{gamma_ratio_s, gamma_ratio_t, log_gamma};
use hypharm::transforms::{
    helgason_forward, helgason_inverse, spherical_function, FunctionOnX, SpectralGrid,
    SpectralMeasure,
};
use hypharm::{CFunctionEvaluator, Multiplier, SmoothingConfig, TimeGrid};
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::suites::{self, Check};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn checks(ev: &CFunctionEvaluator) -> anyhow::Result<Vec<Check>> {
    let mut out = suites::c_function_checks(ev);

    // special functions
    out.push(Check::new(
        "log_gamma_at_1",
        log_gamma(c(1.0))?.norm(),
        1e-14,
    ));
    let half = log_gamma(c(0.5))?;
    out.push(Check::new(
        "log_gamma_at_half",
        (half - c(std::f64::consts::PI.sqrt().ln())).norm(),
        1e-14,
    ));
    out.push(Check::new(
        "gamma_ratio_equal_params",
        (gamma_ratio_s(3.7, 1.3, 1.3)? - 1.0).norm(),
        1e-14,
    ));
    out.push(Check::new(
        "gamma_ratio_half",
        (gamma_ratio_s(0.0, 1.5, 0.5)? - 0.5).norm(),
        1e-14,
    ));
    out.push(Check::zero(
        "gamma_ratio_t_equal_params",
        gamma_ratio_t(2.0, 0.8, 0.8, 50)?.value.norm(),
    ));

    // geometry
    let b = BoundaryPoint::new(1.1);
    out.push(Check::zero(
        "busemann_at_origin",
        busemann(&DiscPoint::ORIGIN, &b)?.abs(),
    ));
    let g = MobiusMap::translation(0.8, 0.4).compose(&MobiusMap::rotation(1.9));
    out.push(Check::new(
        "busemann_cocycle",
        cocycle_check(&g, &DiscPoint::from_polar(0.7, 2.2), &b)?,
        1e-12,
    ));

    // spherical functions
    let origin = [0.0, 1.0, 17.0]
        .iter()
        .map(|&l| (spherical_function(l, 0.0) - 1.0).norm())
        .fold(0.0, f64::max);
    out.push(Check::zero("phi_at_origin", origin));
    let sym = [0.3, 2.0, 9.0]
        .iter()
        .flat_map(|&l| {
            [0.5, 2.0, 5.0].map(|r| (spherical_function(l, r) - spherical_function(-l, r)).norm())
        })
        .fold(0.0, f64::max);
    out.push(Check::new("phi_lambda_symmetry", sym, 1e-10));

    // transforms on a small grid
    let polar = PolarGrid::new(3.2, 96, 32)?;
    let sgrid = SpectralGrid::new(14.0, 112, 32)?;
    let zero = helgason_forward(&FunctionOnX::zeros(&polar), &sgrid).value;
    out.push(Check::zero("helgason_of_zero", zero.max_abs()));
    let radial = helgason_forward(
        &FunctionOnX::gaussian(&polar, 0.5, &DiscPoint::ORIGIN),
        &sgrid,
    )
    .value;
    out.push(Check::new("radial_b_variation", radial.b_variation(), 1e-8));
    let u = FunctionOnX::gaussian(&polar, 0.5, &DiscPoint::from_polar(0.5, 2.0));
    let f = helgason_forward(&u, &sgrid).value;
    let pl = f.plancherel_norm_sq(&SpectralMeasure::hyperbolic_plane()) / u.l2_norm().powi(2);
    out.push(Check::new("plancherel_defect", (pl - 1.0).abs(), 5e-3));
    out.push(Check::new(
        "helgason_round_trip",
        helgason_inverse(&f, &polar).value.rel_l2_error(&u)?,
        1e-3,
    ));

    // evolution
    let still = propagate(&Multiplier::Schrodinger, 0.0, &f).snapshot;
    out.push(Check::zero(
        "propagate_at_time_zero",
        still.zip_with(&f, |x, y| x - y)?.max_abs(),
    ));

    // one-dimensional estimates
    let line = suites::gaussian_line();
    let kato = kato_baseline_1d(
        &Multiplier::Schrodinger,
        &Multiplier::Constant(0.0),
        0.6,
        std::slice::from_ref(&line),
    )?;
    out.push(Check::zero("kato_zero_multiplier", kato.lhs_norm));
    let at_zero = gain_regularity_1d(&line, 1, 0.6, &TimeGrid::origin())?;
    out.push(Check::zero("gain_at_time_zero", at_zero.lhs));
    let time = TimeGrid::new(2.0, 200)?;
    let r1 = gain_regularity_1d(&line, 1, 0.6, &time)?;
    let (lhs, _) = free_gaussian_gain_norms(1, 0.6, &time);
    out.push(Check::new(
        "closed_form_gaussian_k1",
        (r1.lhs - lhs).abs() / lhs,
        1e-4,
    ));

    // configuration
    let rejected = SmoothingConfig::new(0.4, 1.0).is_err()
        && RunConfig::from_toml("[smoothing]\ndelta = 0.4").is_err();
    out.push(Check::zero(
        "small_delta_accepted",
        if rejected { 0.0 } else { 1.0 },
    ));
    Ok(out)
}
