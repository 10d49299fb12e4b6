//! Verification suites shared by the subcommands, the self-test and the
//! acceptance target. Each suite returns named checks against pinned limits
//! together with a report whose `pass` flag is the conjunction of the checks.

use std::f64::consts::PI;

use hypharm::estimates::{
    free_gaussian_gain_norms, gain_regularity_1d, gain_regularity_x, homogeneous_result, max_ratio,
    natural_weights, refinement_stability, shipped_families, smoothing_homogeneous,
    smoothing_inhomogeneous, transfer_comparison, Datum, Line1d, SeparableForcing,
    STABILITY_TOLERANCE,
};
use hypharm::geometry::{
    busemann, eigen_residual, observed_order, BoundaryPoint, DiscPoint, PolarGrid, RHO,
};
use hypharm::specialfn::{fd_derivative, fd_step, symbol_estimate_check, InverseSymbol};
use hypharm::transforms::{
    dual_radon, helgason_forward, helgason_forward_at, helgason_inverse, isometry_t,
    phi_zero_bracket, radon_forward, radon_inverse, spherical_function, t_via_radon, weighted_norm,
    Chamber, FunctionOnX, HorocycleFunction, SpectralMeasure, TValues, WeightedNormSpec,
    INV_SQRT_2PI,
};
use hypharm::{
    CFunctionEvaluator, EstimateGrid, EstimateResult, EvolutionGrid, ExperimentReport, Multiplier,
    SmoothingConfig, Stability, TimeGrid,
};
use num_complex::Complex64;

/// One measured quantity against its limit: strictly below it, or at
/// least it when `lower` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub lower: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            lower: false,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            lower: true,
            ..Self::new(name, value, limit)
        }
    }

    /// A quantity that must vanish exactly.
    pub fn zero(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, f64::MIN_POSITIVE)
    }

    /// NaN never passes.
    pub fn pass(&self) -> bool {
        if self.lower {
            self.value >= self.limit
        } else {
            self.value < self.limit
        }
    }
}

/// Report carrying every check as a metric; passes when all checks do.
pub fn report_from(experiment: &str, statement: &str, checks: &[Check]) -> ExperimentReport {
    let mut r = ExperimentReport::new(experiment, statement);
    for c in checks {
        r.metric(c.name.clone(), c.value);
    }
    r.pass = checks.iter().all(Check::pass);
    r
}

/// Failed checks, formatted for messages.
pub fn failures(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.pass())
        .map(|c| {
            let rel = if c.lower { "≥" } else { "<" };
            format!("{} = {:.3e} (needs {rel} {:.1e})", c.name, c.value, c.limit)
        })
        .collect()
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// `λ tanh(πλ)`, the shape of the Plancherel density.
pub fn density_shape(lambda: f64) -> f64 {
    lambda * (PI * lambda).tanh()
}

// c-function

/// Normalization, reciprocity on `[10⁻³, 10³]` and the density shape on
/// `[0.01, 100]` with one constant fitted at `λ = 1`.
pub fn c_function_checks(ev: &CFunctionEvaluator) -> Vec<Check> {
    let norm = ev
        .c_function(Complex64::new(0.0, -RHO))
        .map_or(f64::INFINITY, |c| (c - 1.0).norm());
    let recip = log_space(1e-3, 1e3, 1201)
        .map(|l| {
            ev.c_function(Complex64::new(l, 0.0))
                .map_or(f64::INFINITY, |c| (c * ev.c_inverse(l) - 1.0).norm())
        })
        .fold(0.0, f64::max);
    let k = density_constant(ev);
    let shape = log_space(1e-2, 1e2, 1001)
        .map(|l| (ev.plancherel_density(l) / (k * density_shape(l)) - 1.0).abs())
        .fold(0.0, f64::max);
    vec![
        Check::new("normalization_defect", norm, 1e-10),
        Check::new("reciprocity_defect", recip, 1e-10),
        Check::new("density_shape_defect", shape, 1e-8),
    ]
}

/// The constant `K` with `|c(λ)|⁻² = K λ tanh(πλ)` at `λ = 1`.
pub fn density_constant(ev: &CFunctionEvaluator) -> f64 {
    ev.plancherel_density(1.0) / density_shape(1.0)
}

/// Symbol sups of `c⁻¹` for orders 0 to 2 up to `λ = 10³`, plus ellipticity.
pub fn symbol_report(ev: &CFunctionEvaluator) -> anyhow::Result<ExperimentReport> {
    Ok(symbol_estimate_check(ev, 2, 1e3)?)
}

/// One row of the c-function table.
#[derive(Debug, Clone, PartialEq)]
pub struct CRow {
    pub lambda: f64,
    pub c: Complex64,
    pub c_inv: Complex64,
    pub density: f64,
    pub reference: f64,
    /// `|∂^α c⁻¹(λ)| ⟨λ⟩^{α−1/2}` for `α = 0, 1, 2`.
    pub symbol: [f64; 3],
}

/// Rows at `n` points of `[0, Λ]`; the first row sits at `λ = 10⁻⁸·Λ`
/// since `c` has a pole at the origin.
pub fn c_table(ev: &CFunctionEvaluator, lambda_max: f64, n: usize) -> Vec<CRow> {
    let k = density_constant(ev);
    let m = ev.order();
    let f = |l: f64| ev.eval(l);
    (0..n)
        .map(|j| {
            let lambda = if j == 0 {
                1e-8 * lambda_max
            } else {
                lambda_max * j as f64 / (n - 1) as f64
            };
            let bracket = (1.0 + lambda * lambda).sqrt();
            let symbol = [0u32, 1, 2].map(|order| {
                let d = fd_derivative(&f, order, lambda, fd_step(order, lambda));
                d.norm() * bracket.powf(order as f64 - m)
            });
            CRow {
                lambda,
                c: ev
                    .c_function(Complex64::new(lambda, 0.0))
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
                c_inv: ev.c_inverse(lambda),
                density: ev.plancherel_density(lambda),
                reference: k * density_shape(lambda),
                symbol,
            }
        })
        .collect()
}

// transforms

/// Grids of the transform suites.
pub use crate::config::TransformGrids;

/// The built-in inputs of `transform`.
pub fn builtin_input(name: &str, grid: &PolarGrid) -> Option<FunctionOnX> {
    match name {
        "gaussian_bump" => Some(FunctionOnX::gaussian(
            grid,
            0.45,
            &DiscPoint::from_polar(0.5, 0.8),
        )),
        "zero" => Some(FunctionOnX::zeros(grid)),
        "radial" => Some(FunctionOnX::gaussian(grid, 0.5, &DiscPoint::ORIGIN)),
        _ => None,
    }
}

/// The fixed test function of the adjointness check.
fn adjoint_probe(h: &hypharm::transforms::HorocycleGrid) -> HorocycleFunction {
    HorocycleFunction::from_fn(h, |hh, b| {
        Complex64::new(
            (-(hh - 0.4).powi(2)).exp() * (1.0 + 0.3 * b.cos()),
            0.2 * (-hh * hh).exp() * b.sin(),
        )
    })
}

fn trapezoid_end(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// `max |∫ e^{(ρ−iλ)H} Ru(H, b) dH / √2π − Fu(λ, b)| / max|Fu|` at a few λ.
fn projection_slice(u: &FunctionOnX, ru: &HorocycleFunction, n_b: usize) -> f64 {
    let lam = [0.5, 1.5, 4.0];
    let f = helgason_forward_at(u, &lam, 1.0, Chamber::Plus, n_b).value;
    let scale = f.max_abs();
    let mut worst = 0.0f64;
    for (j, &l) in lam.iter().enumerate() {
        for k in 0..n_b {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &h) in ru.h_values.iter().enumerate() {
                acc += ru.value(i, k)
                    * Complex64::new(RHO * h, -l * h).exp()
                    * trapezoid_end(i, ru.n_h());
            }
            acc *= ru.dh() * INV_SQRT_2PI;
            worst = worst.max((acc - f.value(j, k)).norm() / scale);
        }
    }
    worst
}

/// Forward, inverse, Plancherel, Radon and adjointness checks on `u`.
///
/// `refined` is `u` sampled on `grids.refined().polar`; when given, the
/// Radon inversion error must strictly decrease on the refined grids. A
/// zero input must produce exactly zero everywhere.
pub fn transform_checks(
    u: &FunctionOnX,
    refined: Option<&FunctionOnX>,
    grids: &TransformGrids,
) -> anyhow::Result<Vec<Check>> {
    let (g, s, h) = (&grids.polar, &grids.spectral, &grids.horocycle);
    let f = helgason_forward(u, s).value;
    let back = helgason_inverse(&f, g).value;
    let ru = radon_forward(u, h).value;
    let rinv = radon_inverse(u, h).value;
    let norm = u.l2_norm();
    if norm == 0.0 {
        let m = SpectralMeasure::hyperbolic_plane();
        return Ok(vec![
            Check::zero("plancherel_norm", f.plancherel_norm_sq(&m).sqrt()),
            Check::zero("helgason_inverse_norm", back.l2_norm()),
            Check::zero("radon_max", ru.max_abs()),
            Check::zero("radon_inverse_norm", rinv.l2_norm()),
        ]);
    }
    let pl = f.plancherel_norm_sq(&SpectralMeasure::hyperbolic_plane()) / (norm * norm);
    let mut checks = vec![
        Check::new("plancherel_defect", (pl - 1.0).abs(), 5e-3),
        Check::new("helgason_round_trip", back.rel_l2_error(u)?, 1e-3),
    ];
    let e0 = rinv.rel_l2_error(u)?;
    checks.push(Check::new("radon_round_trip", e0, 1e-2));
    if let Some(v) = refined {
        let fine = grids.refined();
        let e1 = radon_inverse(v, &fine.horocycle).value.rel_l2_error(v)?;
        checks.push(Check::new("radon_round_trip_refined", e1, 1e-2));
        checks.push(Check::new("radon_refinement_ratio", e1 / e0, 1.0));
    }
    checks.push(Check::new(
        "projection_slice",
        projection_slice(u, &ru, h.n_b),
        1e-3,
    ));
    let phi = adjoint_probe(h);
    let lhs = u.pairing(&dual_radon(&phi, g).value)?;
    let rhs = ru.pairing_dxi(&phi)?;
    checks.push(Check::new(
        "adjointness",
        (lhs - rhs).norm() / rhs.norm(),
        1e-3,
    ));
    Ok(checks)
}

/// `b`-variation of `Fu` relative to its maximum, for radial inputs.
pub fn b_variation(u: &FunctionOnX, grids: &TransformGrids) -> f64 {
    helgason_forward(u, &grids.spectral).value.b_variation()
}

/// `‖Tu‖ = ‖u‖` and `T = e^{ρH}ΛR` on the transform grids.
pub fn isometry_checks(u: &FunctionOnX, grids: &TransformGrids) -> anyhow::Result<Vec<Check>> {
    let (s, h) = (&grids.spectral, &grids.horocycle);
    let norm = u.l2_norm();
    let t_norm = weighted_norm(u, &WeightedNormSpec { delta: 0.0 }, s, h).value;
    let a = isometry_t(u, s, h, TValues::Both).value;
    let b = t_via_radon(u, h, &SpectralMeasure::hyperbolic_plane()).value;
    let worst = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    if norm == 0.0 {
        return Ok(vec![
            Check::zero("t_norm", t_norm),
            Check::zero("t_max", a.max_abs()),
        ]);
    }
    Ok(vec![
        Check::new("isometry_defect", (t_norm / norm - 1.0).abs(), 5e-3),
        Check::new("t_vs_weighted_radon", worst / a.max_abs(), 1e-3),
    ])
}

// spherical functions

fn laplacian_order(
    u: impl Fn(&DiscPoint) -> Complex64 + Copy,
    mu: f64,
) -> anyhow::Result<(Vec<f64>, f64)> {
    let errs = [16usize, 32, 64]
        .iter()
        .map(|&n| {
            let g = PolarGrid::new(2.0, n, 2 * n)?;
            eigen_residual(u, mu, &g, &[0.5, 1.0])
        })
        .collect::<hypharm::Result<Vec<f64>>>()?;
    let p = observed_order(&errs);
    Ok((errs, p))
}

/// `φ_λ(0) = 1`, `φ_λ = φ_{−λ}`, second-order convergence of the
/// finite-difference Laplacian on `e^{(iλ+ρ)A}` and `φ_λ`, and the `φ₀`
/// bracket on `[0, 20]`. Returns the bracket constant `C₁` as well.
pub fn spherical_checks() -> anyhow::Result<(Vec<Check>, f64)> {
    let lambdas = [0.0, 0.3, 1.0, 2.5, 7.0, 17.0];
    let origin = lambdas
        .iter()
        .map(|&l| (spherical_function(l, 0.0) - 1.0).norm())
        .fold(0.0, f64::max);
    let mut sym = 0.0f64;
    for &l in &lambdas[1..] {
        for i in 0..=100 {
            let r = 0.1 * i as f64;
            let (p, m) = (spherical_function(l, r), spherical_function(-l, r));
            sym = sym.max((p - m).norm() / p.norm().max(m.norm()).max(1e-300));
        }
    }
    let lam = 1.0;
    let mu = lam * lam + RHO * RHO;
    let b = BoundaryPoint::new(0.9);
    let (_, wave) = laplacian_order(
        |x| {
            Complex64::new(RHO, lam)
                .scale(busemann(x, &b).unwrap_or(f64::NAN))
                .exp()
        },
        mu,
    )?;
    let (_, radial) = laplacian_order(|x| spherical_function(lam, x.radius()), mu)?;
    let bracket = phi_zero_bracket(20.0, 400);
    let c1 = bracket.metrics["C1"];
    let lower = bracket.metrics["min_lower_ratio"];
    Ok((
        vec![
            Check::zero("phi_at_origin_defect", origin),
            Check::new("lambda_symmetry_defect", sym, 1e-10),
            Check::at_least("plane_wave_order", wave, 1.8),
            Check::at_least("spherical_order", radial, 1.8),
            Check::at_least("phi_zero_lower_ratio", lower, 1.0 - 1e-10),
            Check::new("phi_zero_c1", c1, f64::INFINITY),
        ],
        c1,
    ))
}

// evolution

/// The smoothing weight `|2λ|^{1/2}` and forcing weight `2λ` of the
/// Schrödinger multiplier.
pub fn schrodinger_weights() -> (Multiplier, Multiplier) {
    natural_weights(&Multiplier::Schrodinger).expect("the Schrödinger symbol is differentiable")
}

/// Intertwining residuals of `a` (and, for Schrödinger, the phase identity)
/// at each `t`.
pub fn intertwining_checks(
    a: &Multiplier,
    p: &Multiplier,
    u0: &FunctionOnX,
    times: &[f64],
    egrid: &EvolutionGrid,
) -> anyhow::Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &t in times {
        let r = hypharm::evolution::intertwine_homogeneous_check(a, p, u0, t, egrid)?.value;
        checks.push(Check::new(format!("intertwine_t{t}"), r, 1e-3));
        if *a == Multiplier::Schrodinger {
            let s = hypharm::evolution::schrodinger_intertwine_check(u0, t, egrid)?.value;
            checks.push(Check::new(format!("schrodinger_phase_t{t}"), s, 1e-3));
        }
    }
    Ok(checks)
}

// smoothing

/// Families named in a config, with `random` drawn from `seed`.
pub fn select_families(
    names: &[crate::config::FamilyName],
    size: usize,
    seed: u64,
) -> Vec<hypharm::estimates::Family> {
    use crate::config::FamilyName;
    let shipped = shipped_families(size);
    names
        .iter()
        .map(|n| match n {
            FamilyName::Random => crate::families::random_family(size, seed),
            other => shipped
                .iter()
                .find(|f| f.name == other.as_str())
                .expect("every non-random name is shipped")
                .clone(),
        })
        .collect()
}

/// Everything measured for one family.
#[derive(Debug, Clone)]
pub struct FamilyOutcome {
    pub name: String,
    pub homogeneous: Vec<EstimateResult>,
    pub homogeneous_refined: Option<Vec<EstimateResult>>,
    pub inhomogeneous: Vec<EstimateResult>,
    pub inhomogeneous_refined: Option<Vec<EstimateResult>>,
    pub transfer: ExperimentReport,
}

impl FamilyOutcome {
    pub fn homogeneous_stability(&self) -> Option<(Stability, f64)> {
        self.homogeneous_refined
            .as_ref()
            .map(|r| refinement_stability(&self.homogeneous, r))
    }

    pub fn inhomogeneous_stability(&self) -> Option<(Stability, f64)> {
        self.inhomogeneous_refined
            .as_ref()
            .map(|r| refinement_stability(&self.inhomogeneous, r))
    }

    /// Checks of this family: finite ratios, stability of the family
    /// maximum within ±20%, and the transfer inequality.
    pub fn checks(&self) -> Vec<Check> {
        let finite = |rs: &[EstimateResult]| {
            if rs
                .iter()
                .all(|r| r.ratio.is_finite() && r.lhs_norm.is_finite())
            {
                0.0
            } else {
                f64::INFINITY
            }
        };
        let name = &self.name;
        let mut c = vec![
            Check::zero(
                format!("{name}/homogeneous_nonfinite"),
                finite(&self.homogeneous),
            ),
            Check::zero(
                format!("{name}/inhomogeneous_nonfinite"),
                finite(&self.inhomogeneous),
            ),
        ];
        let limit = 100.0 * STABILITY_TOLERANCE;
        if let Some((s, _)) = self.homogeneous_stability() {
            c.push(Check::new(
                format!("{name}/homogeneous_refinement_pct"),
                s.delta_pct,
                limit,
            ));
        }
        if let Some((s, _)) = self.inhomogeneous_stability() {
            c.push(Check::new(
                format!("{name}/inhomogeneous_refinement_pct"),
                s.delta_pct,
                limit,
            ));
        }
        let margin = self
            .transfer
            .metrics
            .get("min_margin")
            .copied()
            .unwrap_or(f64::NAN);
        c.push(Check::at_least(
            format!("{name}/transfer_margin"),
            margin,
            0.0,
        ));
        c
    }

    /// The offending ratio pairs, for failure messages.
    pub fn instability_messages(&self) -> Vec<String> {
        let mut out = Vec::new();
        let limit = 100.0 * STABILITY_TOLERANCE;
        for (kind, base, stab) in [
            (
                "homogeneous",
                &self.homogeneous,
                self.homogeneous_stability(),
            ),
            (
                "inhomogeneous",
                &self.inhomogeneous,
                self.inhomogeneous_stability(),
            ),
        ] {
            if let Some((s, _)) = stab {
                if !(s.delta_pct < limit) {
                    out.push(format!(
                        "refinement instability in {} {kind}: max ratio {:.6} -> {:.6} ({:.1}% > {limit}%)",
                        self.name,
                        max_ratio(base),
                        s.refined_ratio,
                        s.delta_pct
                    ));
                }
            }
        }
        out
    }
}

/// Runs homogeneous, inhomogeneous and transfer experiments on `family`,
/// and the refinement pass (finer polar grid, doubled horizon) unless
/// `refine` is false.
#[allow(clippy::too_many_arguments)]
pub fn smoothing_family(
    name: &str,
    family: &[Datum],
    a: &Multiplier,
    p: &Multiplier,
    q: &Multiplier,
    cfg: &SmoothingConfig,
    grid: &EstimateGrid,
    refine: bool,
) -> anyhow::Result<FamilyOutcome> {
    let forcing: Vec<SeparableForcing> = family
        .iter()
        .cloned()
        .map(SeparableForcing::gaussian_in_time)
        .collect();
    let homogeneous = smoothing_homogeneous(a, p, family, cfg, grid)?;
    let inhomogeneous = smoothing_inhomogeneous(a, q, &forcing, cfg, grid)?;
    let polar = grid.polar()?;
    let data: Vec<FunctionOnX> = family.iter().map(|d| d.sample(&polar)).collect();
    let egrid = grid.evolution(a, cfg.time_horizon)?;
    let transfer = transfer_comparison(a, p, cfg.delta, &homogeneous, &data, &egrid)?.family(name);
    let (homogeneous_refined, inhomogeneous_refined) = if refine {
        let (fine, fine_cfg) = (grid.refined(), cfg.refined());
        (
            Some(smoothing_homogeneous(a, p, family, &fine_cfg, &fine)?),
            Some(smoothing_inhomogeneous(a, q, &forcing, &fine_cfg, &fine)?),
        )
    } else {
        (None, None)
    };
    Ok(FamilyOutcome {
        name: name.to_string(),
        homogeneous,
        homogeneous_refined,
        inhomogeneous,
        inhomogeneous_refined,
        transfer,
    })
}

/// Dilation check: modulated data may not raise the family maximum beyond
/// 1.5 times the Gaussian one.
pub fn modulation_check(outcomes: &[FamilyOutcome]) -> Option<Check> {
    let get = |n: &str| {
        outcomes
            .iter()
            .find(|o| o.name == n)
            .map(|o| max_ratio(&o.homogeneous))
    };
    match (get("gaussian"), get("modulated")) {
        (Some(g), Some(m)) if g > 0.0 => Some(Check::new("modulated_over_gaussian", m / g, 1.5)),
        _ => None,
    }
}

// gain of regularity

/// The `k`-th gain check on `X` against its transferred 1D counterpart,
/// plus the 1D closed-form Gaussian check for `k = 1`.
pub fn gain_checks(
    phi: &FunctionOnX,
    ks: &[u32],
    delta: f64,
    time: &TimeGrid,
    egrid: &EvolutionGrid,
) -> anyhow::Result<(Vec<Check>, Vec<ExperimentReport>)> {
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for &k in ks {
        let r = gain_regularity_x(phi, k, delta, time, egrid)?;
        checks.push(Check::new(
            format!("transfer_defect_k{k}"),
            r.metrics["transfer_defect"],
            1e-2,
        ));
        reports.push(r);
    }
    let line = gaussian_line();
    let r1 = gain_regularity_1d(&line, 1, delta, time)?;
    let (lhs, _) = free_gaussian_gain_norms(1, delta, time);
    checks.push(Check::new(
        "closed_form_gaussian_k1",
        (r1.lhs - lhs).abs() / lhs,
        1e-4,
    ));
    reports.push(r1);
    Ok((checks, reports))
}

/// `e^{−H²/2}` on a line wide enough for the free evolution up to `T = 2`.
pub fn gaussian_line() -> Line1d {
    Line1d::from_fn("gaussian_1d", 0.05, 2048, |h| {
        Complex64::new((-h * h / 2.0).exp(), 0.0)
    })
}

/// `k = 0` gain against the smoothing run with `p = ⟨λ⟩^{1/2}`.
pub fn gain_zero_check(
    phi: &FunctionOnX,
    delta: f64,
    time: &TimeGrid,
    egrid: &EvolutionGrid,
) -> anyhow::Result<Check> {
    let r0 = gain_regularity_x(phi, 0, delta, time, egrid)?;
    let u = phi.scale(Complex64::new(1.0 / phi.l2_norm(), 0.0));
    let h = homogeneous_result(
        &Multiplier::Schrodinger,
        &Multiplier::JapaneseBracket(0.5),
        &u,
        "phi",
        delta,
        egrid,
        time,
        Default::default(),
    )?;
    Ok(Check::new(
        "gain_k0_vs_smoothing",
        (r0.ratio - h.ratio).abs() / h.ratio,
        1e-2,
    ))
}
