//! The experiments behind each subcommand. Every function computes an
//! [`Outcome`]; writing it is left to [`crate::output::write_outcome`].

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use hypharm::estimates::{max_ratio, EstimateResult};
use hypharm::evolution::propagate;
use hypharm::geometry::RHO;
use hypharm::transforms::{read_table, weighted_norm_of_t, FunctionOnX, TValues};
use hypharm::{CFunctionEvaluator, ExperimentReport, Multiplier, RootData};
use num_complex::Complex64;

use crate::config::{Experiment, RunConfig, TransformGrids};
use crate::output::{Cell, Chart, Outcome, Table};
use crate::suites::{self, failures, report_from, Check};

pub fn run(experiment: Experiment, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match experiment {
        Experiment::Ctable => ctable(cfg),
        Experiment::Transform => transform(cfg),
        Experiment::Propagate => propagate_cmd(cfg),
        Experiment::Smoothing => smoothing(cfg),
        Experiment::Gain => gain(cfg),
    }
}

fn checks_table(name: &str, checks: &[Check]) -> Table {
    let mut t = Table::new(name, &["check", "value", "limit", "bound", "pass"]);
    for c in checks {
        t.push(vec![
            c.name.clone().into(),
            c.value.into(),
            c.limit.into(),
            (if c.lower { "min" } else { "max" }).into(),
            (if c.pass() { "PASS" } else { "FAIL" }).into(),
        ]);
    }
    t
}

fn finish(mut outcome: Outcome, checks: &[Check]) -> Outcome {
    outcome.failures.extend(failures(checks));
    outcome
}

/// c-function table, normalization, density shape and symbol constants.
pub fn ctable(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    ctable_with(cfg, &CFunctionEvaluator::hyperbolic_plane())
}

pub fn ctable_with(cfg: &RunConfig, ev: &CFunctionEvaluator) -> anyhow::Result<Outcome> {
    let (lambda_max, n) = cfg.ctable_lambda();
    let rows = suites::c_table(ev, lambda_max, n);
    let mut table = Table::new(
        "ctable",
        &[
            "lambda",
            "c_re",
            "c_im",
            "cinv_re",
            "cinv_im",
            "density",
            "reference",
            "rel_dev",
            "symbol0",
            "symbol1",
            "symbol2",
        ],
    );
    let mut max_dev = 0.0f64;
    for r in &rows {
        let dev = if r.reference > 0.0 {
            (r.density / r.reference - 1.0).abs()
        } else {
            0.0
        };
        max_dev = max_dev.max(dev);
        table.push(vec![
            r.lambda.into(),
            r.c.re.into(),
            r.c.im.into(),
            r.c_inv.re.into(),
            r.c_inv.im.into(),
            r.density.into(),
            r.reference.into(),
            dev.into(),
            r.symbol[0].into(),
            r.symbol[1].into(),
            r.symbol[2].into(),
        ]);
    }
    let c_rho = ev
        .c_function(Complex64::new(0.0, -RHO))
        .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let mut norm = Table::new(
        "ctable_normalization",
        &["lambda_re", "lambda_im", "c_re", "c_im"],
    );
    norm.push(vec![
        0.0.into(),
        (-RHO).into(),
        c_rho.re.into(),
        c_rho.im.into(),
    ]);

    let checks = suites::c_function_checks(ev);
    let mut report = report_from(
        "c_function",
        "c(−iρ) = 1 and |c(λ)|⁻² ∝ λ tanh(πλ) on the hyperbolic plane",
        &checks,
    )
    .family("hyperbolic_plane")
    .meta("lambda_max", lambda_max)
    .meta("n_lambda", n as u64);
    report.metric("density_constant", suites::density_constant(ev));
    report.metric("table_max_rel_dev", max_dev);
    let symbols = suites::symbol_report(ev)?;
    let mut outcome = Outcome {
        tables: vec![table, norm, checks_table("ctable_checks", &checks)],
        reports: vec![report, symbols.clone()],
        charts: vec![
            Chart::new(
                "ctable_density",
                "Plancherel density and K·λ·tanh(πλ)",
                "ctable",
                "lambda",
                &["density", "reference"],
            ),
            Chart::new(
                "ctable_symbols",
                "symbol constants of c⁻¹",
                "ctable",
                "lambda",
                &["symbol0", "symbol1", "symbol2"],
            ),
        ],
        failures: Vec::new(),
    };
    if !symbols.pass {
        outcome
            .failures
            .push("symbol estimates: sups grow or ellipticity fails".into());
    }
    Ok(finish(outcome, &checks))
}

/// Loads `input`: a built-in name or the stem of a `.csv`/`.json` pair.
/// Returns the function, the grids to use, and (for built-ins) the same
/// input on the refined polar grid.
fn transform_input(
    cfg: &RunConfig,
) -> anyhow::Result<(FunctionOnX, TransformGrids, Option<FunctionOnX>)> {
    let mut grids = cfg.transform_grids()?;
    let name = &cfg.transform.input;
    if let Some(u) = suites::builtin_input(name, &grids.polar) {
        let fine = suites::builtin_input(name, &grids.refined().polar);
        return Ok((u, grids, fine));
    }
    let stem = Path::new(name);
    let open = |ext: &str| {
        let p = stem.with_extension(ext);
        std::fs::File::open(&p).with_context(|| format!("opening input {}", p.display()))
    };
    let u: FunctionOnX =
        read_table(open("csv")?, open("json")?).with_context(|| format!("reading input {name}"))?;
    grids.polar = u.grid.clone();
    Ok((u, grids, None))
}

/// Forward, inverse, Plancherel, Radon, adjointness and isometry checks.
pub fn transform(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (u, grids, fine) = transform_input(cfg)?;
    let mut checks = suites::transform_checks(&u, fine.as_ref(), &grids)?;
    checks.extend(suites::isometry_checks(&u, &grids)?);
    if cfg.transform.input == "radial" {
        checks.push(Check::new(
            "radial_b_variation",
            suites::b_variation(&u, &grids),
            1e-8,
        ));
    }
    let (g, s, h) = (&grids.polar, &grids.spectral, &grids.horocycle);
    let report = report_from("transform_suite", "Helgason inversion and Plancherel, Radon inversion, projection slice, adjointness, T = e^{ρH}ΛR", &checks)
        .family(cfg.transform.input.clone())
        .meta("r_max", g.r_max)
        .meta("n_r", g.n_r() as u64)
        .meta("n_theta", g.n_theta() as u64)
        .meta("lambda_max", s.lambda_max)
        .meta("n_lambda", s.n_lambda as u64)
        .meta("h_max", h.h_max)
        .meta("n_h", h.n_h as u64)
        .meta("n_b", h.n_b as u64);
    let ru = hypharm::transforms::radon_forward(&u, h).value;
    let tu = hypharm::transforms::isometry_t(&u, s, h, TValues::Both).value;
    let mut row = Table::new(
        "transform_b0",
        &["h", "radon_re", "radon_im", "t_re", "t_im"],
    );
    for (i, &hh) in ru.h_values.iter().enumerate() {
        let (r, t) = (ru.value(i, 0), tu.value(i, 0));
        row.push(vec![
            hh.into(),
            r.re.into(),
            r.im.into(),
            t.re.into(),
            t.im.into(),
        ]);
    }
    let outcome = Outcome {
        tables: vec![checks_table("transform_checks", &checks), row],
        reports: vec![report],
        charts: vec![Chart::new(
            "transform_b0",
            "Ru and Tu at the first boundary angle",
            "transform_b0",
            "h",
            &["radon_re", "t_re", "t_im"],
        )],
        failures: Vec::new(),
    };
    Ok(finish(outcome, &checks))
}

/// Evolution of the transform input under `a`: Plancherel norm, `T`-side
/// norms and intertwining residuals at `t ∈ [0, T]`.
pub fn propagate_cmd(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let a = cfg.a();
    let grid = cfg.estimate_grid();
    let polar = grid.polar()?;
    let u0 = suites::builtin_input(&cfg.transform.input, &polar).with_context(|| {
        format!(
            "propagate needs a built-in input, got {}",
            cfg.transform.input
        )
    })?;
    let t_max = cfg.t_max();
    let steps = cfg.time.n_t.map_or(8, |n| (n.0 / 2).max(1));
    let egrid = grid.evolution(&a, t_max)?;
    let pair = egrid.spectral_pair(&u0).value;
    let spectra = egrid.spectra_from_tables(&pair, TValues::Both)?;
    let delta = cfg.smoothing.delta.0;
    let norm0 = u0.l2_norm();
    let one = Multiplier::Constant(1.0);

    let mut series = Table::new(
        "propagate",
        &[
            "t",
            "plancherel_norm",
            "t_norm",
            "weighted_norm_minus_delta",
            "intertwine_residual",
            "schrodinger_residual",
        ],
    );
    let mut snap_cols = vec!["h".to_string()];
    let mut snaps: Vec<Vec<f64>> = Vec::new();
    let mut h_values = Vec::new();
    let mut checks = Vec::new();
    let mut norms = Vec::new();
    for i in 0..=steps {
        let t = t_max * i as f64 / steps as f64;
        let moved = pair.map(|tab| propagate(&a, t, tab).snapshot);
        let pl = moved.norm_sq().sqrt();
        let tu = egrid.synthesize(&spectra, &|xi| Complex64::from_polar(1.0, t * a.eval(xi)));
        let t_norm = weighted_norm_of_t(&tu, 0.0).value;
        let weighted = weighted_norm_of_t(&tu, -delta).value;
        let inter =
            hypharm::evolution::intertwine_homogeneous_check(&a, &one, &u0, t, &egrid)?.value;
        let schr = if a == Multiplier::Schrodinger {
            hypharm::evolution::schrodinger_intertwine_check(&u0, t, &egrid)?.value
        } else {
            f64::NAN
        };
        series.push(vec![
            t.into(),
            pl.into(),
            t_norm.into(),
            weighted.into(),
            inter.into(),
            schr.into(),
        ]);
        norms.push(pl);
        checks.push(Check::new(format!("intertwine_t{t}"), inter, 1e-3));
        if schr.is_finite() {
            checks.push(Check::new(format!("schrodinger_phase_t{t}"), schr, 1e-3));
        }
        if i % (steps / 4).max(1) == 0 {
            snap_cols.push(format!("abs_t{t}"));
            snaps.push((0..tu.n_h()).map(|k| tu.value(k, 0).norm()).collect());
            h_values = tu.h_values.clone();
        }
    }
    let drift = norms
        .iter()
        .map(|n| (n - norms[0]).abs())
        .fold(0.0, f64::max)
        / norms[0].max(f64::MIN_POSITIVE);
    checks.insert(0, Check::new("unitarity_drift", drift, 1e-12));
    checks.insert(
        1,
        Check::new(
            "initial_plancherel_defect",
            (norms[0] - norm0).abs() / norm0,
            5e-3,
        ),
    );

    let cols: Vec<&str> = snap_cols.iter().map(String::as_str).collect();
    let mut snap = Table::new("propagate_snapshots", &cols);
    for (k, &h) in h_values.iter().enumerate() {
        let mut row: Vec<Cell> = vec![h.into()];
        row.extend(snaps.iter().map(|s| Cell::Num(s[k])));
        snap.push(row);
    }
    let report = report_from(
        "propagate",
        "e^{ita(D_x)} is unitary and intertwines with 1D multipliers under T",
        &checks,
    )
    .family(cfg.transform.input.clone())
    .meta("multiplier", a.name())
    .meta("t_max", t_max)
    .meta("n_h", egrid.n_fft as u64)
    .meta("n_b", egrid.n_b as u64)
    .meta("lambda_max", egrid.lambda_max);
    let outcome = Outcome {
        tables: vec![series, snap, checks_table("propagate_checks", &checks)],
        reports: vec![report],
        charts: vec![
            Chart::new(
                "propagate_norms",
                "norms along the evolution",
                "propagate",
                "t",
                &["plancherel_norm", "t_norm", "weighted_norm_minus_delta"],
            ),
            Chart::new(
                "propagate_residuals",
                "intertwining residuals",
                "propagate",
                "t",
                &["intertwine_residual", "schrodinger_residual"],
            )
            .log_y(),
            Chart::new(
                "propagate_snapshots",
                "|Tu_t| at the first boundary angle",
                "propagate_snapshots",
                "h",
                &cols[1..],
            ),
        ],
        failures: Vec::new(),
    };
    Ok(finish(outcome, &checks))
}

fn family_report(
    kind: &str,
    family: &str,
    base: &[EstimateResult],
    refined: Option<&[EstimateResult]>,
) -> ExperimentReport {
    let statement = match kind {
        "homogeneous" => "time-global ‖⟨x⟩^{−δ}p(D_x)e^{ita(D_x)}u₀‖ ≲ ‖u₀‖",
        _ => "time-global smoothing of the Duhamel term with weight q(D_x)χ(D_x)",
    };
    let best = base
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("families are nonempty");
    let mut r = ExperimentReport::new(format!("smoothing_{kind}"), statement)
        .family(family)
        .norms(best.lhs_norm, best.rhs_norm);
    for (k, v) in &best.grid_meta {
        r = r.meta(k, *v);
    }
    r.metric("max_ratio", max_ratio(base));
    for m in base {
        r.metric(format!("ratio/{}", m.family_id), m.ratio);
        r.warn_all(&m.warnings);
    }
    r.pass = base.iter().all(|m| m.ratio.is_finite());
    if let Some(fine) = refined {
        let (s, member) = hypharm::estimates::refinement_stability(base, fine);
        r.metric("member_max_delta_pct", member);
        r.pass &= s.delta_pct < 100.0 * hypharm::estimates::STABILITY_TOLERANCE;
        r.stability = Some(s);
    }
    r
}

/// Homogeneous, inhomogeneous and transfer experiments over the configured
/// families, with the refinement pass.
pub fn smoothing(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let a = cfg.a();
    let (p, q) = cfg.weights()?;
    let scfg = cfg.smoothing_config()?;
    let grid = cfg.estimate_grid();
    let families =
        suites::select_families(&cfg.smoothing.families, cfg.smoothing.family_size, cfg.seed);
    let refine = !cfg.smoothing.skip_refinement;
    let mut outcomes = Vec::new();
    for f in &families {
        outcomes.push(suites::smoothing_family(
            &f.name, &f.members, &a, &p, &q, &scfg, &grid, refine,
        )?);
    }
    let mut checks: Vec<Check> = outcomes.iter().flat_map(|o| o.checks()).collect();
    checks.extend(suites::modulation_check(&outcomes));

    let mut summary = Table::new(
        "smoothing_summary",
        &[
            "id",
            "kind",
            "lhs",
            "rhs",
            "ratio",
            "refined_ratio",
            "delta_pct",
            "lhs_unbounded_time",
            "horizon_fraction",
        ],
    );
    let mut reports = Vec::new();
    for o in &outcomes {
        for (kind, base, fine) in [
            (
                "homogeneous",
                &o.homogeneous,
                o.homogeneous_refined.as_deref(),
            ),
            (
                "inhomogeneous",
                &o.inhomogeneous,
                o.inhomogeneous_refined.as_deref(),
            ),
        ] {
            for (j, m) in base.iter().enumerate() {
                let refined = fine.map_or(f64::NAN, |f| f[j].ratio);
                let delta = fine.map_or(f64::NAN, |f| {
                    hypharm::Stability::between(m.ratio, f[j].ratio).delta_pct
                });
                let metric = |k: &str| m.metrics.get(k).copied().unwrap_or(f64::NAN);
                summary.push(vec![
                    m.family_id.clone().into(),
                    kind.into(),
                    m.lhs_norm.into(),
                    m.rhs_norm.into(),
                    m.ratio.into(),
                    refined.into(),
                    delta.into(),
                    metric("lhs_unbounded_time").into(),
                    metric("horizon_fraction").into(),
                ]);
            }
            reports.push(family_report(kind, &o.name, base, fine));
        }
        reports.push(o.transfer.clone());
    }

    // squared weighted norm against t for every homogeneous member
    let members: Vec<&EstimateResult> =
        outcomes.iter().flat_map(|o| o.homogeneous.iter()).collect();
    let mut cols = vec!["t".to_string()];
    cols.extend(members.iter().map(|m| m.family_id.clone()));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut series = Table::new("smoothing_series", &col_refs);
    if let Some(first) = members.first() {
        for (i, &(t, _)) in first.series.iter().enumerate() {
            let mut row: Vec<Cell> = vec![t.into()];
            row.extend(
                members
                    .iter()
                    .map(|m| Cell::Num(m.series.get(i).map_or(f64::NAN, |s| s.1))),
            );
            series.push(row);
        }
    }
    let mut charts = Vec::new();
    for o in &outcomes {
        let ys: Vec<&str> = col_refs
            .iter()
            .copied()
            .filter(|c| c.starts_with(&format!("{}/", o.name)))
            .collect();
        charts.push(
            Chart::new(
                &format!("smoothing_series_{}", o.name),
                &format!("weighted norm² against t, {}", o.name),
                "smoothing_series",
                "t",
                &ys,
            )
            .log_y(),
        );
    }
    let mut overall = report_from(
        "smoothing_checks",
        "smoothing estimates, transfer inequality and refinement stability",
        &checks,
    )
    .meta("multiplier", a.name())
    .meta("p", p.name())
    .meta("q", q.name())
    .meta("delta", scfg.delta)
    .meta("t_max", scfg.time_horizon);
    for (k, v) in grid.meta() {
        overall = overall.meta(&k, v);
    }
    reports.push(overall);
    let outcome = Outcome {
        tables: vec![summary, series, checks_table("smoothing_checks", &checks)],
        reports,
        charts,
        failures: outcomes
            .iter()
            .flat_map(|o| o.instability_messages())
            .collect(),
    };
    let outcome = finish(outcome, &checks);
    Ok(outcome)
}

/// Gain of regularity on `X` against its 1D transfer, with a refinement
/// pass on a finer polar and H grid at the same horizon.
pub fn gain(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let grid = cfg.estimate_grid();
    let polar = grid.polar()?;
    let phi = suites::builtin_input(&cfg.transform.input, &polar)
        .with_context(|| format!("gain needs a built-in input, got {}", cfg.transform.input))?;
    let t_max = cfg.t_max();
    let delta = cfg.smoothing.delta.0;
    let a = Multiplier::Schrodinger;
    let egrid = grid.evolution(&a, t_max)?;
    let time = grid.time(t_max)?;
    let ks: Vec<u32> = cfg.smoothing.k.iter().copied().filter(|&k| k > 0).collect();
    let (mut checks, reports) = suites::gain_checks(&phi, &ks, delta, &time, &egrid)?;
    if cfg.smoothing.k.contains(&0) {
        checks.push(suites::gain_zero_check(&phi, delta, &time, &egrid)?);
    }
    let mut refined: BTreeMap<u32, f64> = BTreeMap::new();
    if !cfg.smoothing.skip_refinement {
        let mut fine = grid.refined();
        fine.h_refinements += 1;
        fine.dt /= 2.0;
        let fpolar = fine.polar()?;
        let fphi = suites::builtin_input(&cfg.transform.input, &fpolar).expect("checked above");
        let fegrid = fine.evolution(&a, t_max)?;
        let ftime = fine.time(t_max)?;
        for &k in &ks {
            let r = hypharm::estimates::gain_regularity_x(&fphi, k, delta, &ftime, &fegrid)?;
            refined.insert(k, r.ratio);
        }
    }
    let mut table = Table::new(
        "gain",
        &[
            "k",
            "lhs",
            "rhs",
            "ratio",
            "ratio_1d",
            "transfer_defect",
            "continuous_ratio",
            "refined_ratio",
            "delta_pct",
        ],
    );
    let mut out_reports = Vec::new();
    for (k, r) in ks.iter().zip(&reports) {
        let fine = refined.get(k).copied();
        let delta_pct = fine.map_or(f64::NAN, |f| {
            hypharm::Stability::between(r.ratio, f).delta_pct
        });
        table.push(vec![
            (*k as f64).into(),
            r.lhs.into(),
            r.rhs.into(),
            r.ratio.into(),
            r.metrics["ratio_1d"].into(),
            r.metrics["transfer_defect"].into(),
            r.metrics["continuous_ratio"].into(),
            fine.unwrap_or(f64::NAN).into(),
            delta_pct.into(),
        ]);
        let mut r = r.clone().family(cfg.transform.input.clone());
        if let Some(f) = fine {
            let s = hypharm::Stability::between(r.ratio, f);
            checks.push(Check::new(
                format!("gain_refinement_pct_k{k}"),
                s.delta_pct,
                100.0 * hypharm::estimates::STABILITY_TOLERANCE,
            ));
            if !(s.delta_pct < 100.0 * hypharm::estimates::STABILITY_TOLERANCE) {
                r.pass = false;
            }
            r.stability = Some(s);
        }
        out_reports.push(r);
    }
    out_reports.extend(reports.into_iter().skip(ks.len()));
    let mut failures_msgs = Vec::new();
    for (k, r) in ks.iter().zip(&out_reports) {
        if let Some(s) = &r.stability {
            if !(s.delta_pct < 100.0 * hypharm::estimates::STABILITY_TOLERANCE) {
                failures_msgs.push(format!(
                    "refinement instability in gain k={k}: ratio {:.6} -> {:.6} ({:.1}%)",
                    r.ratio, s.refined_ratio, s.delta_pct
                ));
            }
        }
    }
    out_reports.push(
        report_from(
            "gain_checks",
            "gain of regularity transfers exactly to the line",
            &checks,
        )
        .meta("delta", delta)
        .meta("t_max", t_max),
    );
    let outcome = Outcome {
        tables: vec![table, checks_table("gain_checks", &checks)],
        reports: out_reports,
        charts: vec![Chart::new(
            "gain_ratios",
            "gain ratios on X and on the line",
            "gain",
            "k",
            &["ratio", "ratio_1d"],
        )],
        failures: failures_msgs,
    };
    Ok(finish(outcome, &checks))
}

/// Fast checks of the whole stack. `corrupt_c0` replaces the c-function
/// constant by a wrong one, which must fail the normalization check.
pub fn selftest(corrupt_c0: bool) -> anyhow::Result<Outcome> {
    let ev = if corrupt_c0 {
        let good = CFunctionEvaluator::hyperbolic_plane();
        CFunctionEvaluator::with_c0(RootData::hyperbolic_plane(), good.c0 * 1.01)
    } else {
        CFunctionEvaluator::hyperbolic_plane()
    };
    let checks = crate::selftest::checks(&ev)?;
    let report = report_from(
        "selftest",
        "trivial identities and fast reference values",
        &checks,
    );
    let outcome = Outcome {
        tables: vec![checks_table("selftest", &checks)],
        reports: vec![report],
        charts: Vec::new(),
        failures: Vec::new(),
    };
    Ok(finish(outcome, &checks))
}
