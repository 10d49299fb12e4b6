//! The isometry `T u(H,b) = ∫ e^{iλH} F u(λ,b) c⁻¹(λ) dλ` and the weighted
//! norms `‖u‖_{L^{2,δ}} = ‖⟨H⟩^δ T u‖_{L²(𝔞×B, w⁻¹dH db)}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::helgason::helgason_forward_at;
use super::{
    japanese, simpson_or_trapezoid, Chamber, FunctionOnX, HorocycleFunction, HorocycleGrid,
    SpectralGrid, SpectralMeasure, SpectralTable, WeightedNormSpec, INV_SQRT_2PI, WEYL_ORDER,
};
use crate::error::{Checked, Error, Result, Warning};
use crate::report::ExperimentReport;

/// Which chamber(s) of the spectral line T integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TValues {
    Plus,
    Minus,
    Both,
}

impl TValues {
    fn includes(self, c: Chamber) -> bool {
        matches!(
            (self, c),
            (TValues::Both, _) | (TValues::Plus, Chamber::Plus) | (TValues::Minus, Chamber::Minus)
        )
    }
}

/// Synthesizes `T_s` from chamber tables at the given `H` values.
pub fn t_from_tables(
    tables: &[&SpectralTable],
    h_values: &[f64],
    which: TValues,
) -> Result<HorocycleFunction> {
    let measure = SpectralMeasure::hyperbolic_plane();
    let n_b = tables
        .first()
        .ok_or_else(|| Error::InvalidParameter("no spectral tables".into()))?
        .n_b();
    if tables.iter().any(|t| t.n_b() != n_b) {
        return Err(Error::GridMismatch("chamber tables differ in n_b".into()));
    }
    let used: Vec<&&SpectralTable> = tables
        .iter()
        .filter(|t| which.includes(t.chamber))
        .collect();
    if used.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no table for the requested chamber {which:?}"
        )));
    }
    // G_jk = F(λ_j, b_k) c̃⁻¹(λ_j) dλ, per table
    let prepared: Vec<(Vec<f64>, Vec<Complex64>)> = used
        .iter()
        .map(|t| {
            let lam: Vec<f64> = (0..t.n_lambda()).map(|j| t.lambda(j)).collect();
            let w: Vec<Complex64> = lam
                .iter()
                .map(|&l| measure.c_tilde_inv(l) * (t.lambda_weight * INV_SQRT_2PI))
                .collect();
            let g = t
                .values
                .iter()
                .enumerate()
                .map(|(idx, v)| v * w[idx % t.n_lambda()])
                .collect();
            (lam, g)
        })
        .collect();
    let nh = h_values.len();
    let rows: Vec<Vec<Complex64>> = (0..n_b)
        .into_par_iter()
        .map(|k| {
            let mut row = vec![Complex64::new(0.0, 0.0); nh];
            for (lam, g) in &prepared {
                let nl = lam.len();
                let gk = &g[k * nl..(k + 1) * nl];
                for (i, &h) in h_values.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, v) in lam.iter().zip(gk) {
                        let (s, c) = (l * h).sin_cos();
                        acc += v * Complex64::new(c, s);
                    }
                    row[i] += acc;
                }
            }
            row
        })
        .collect();
    Ok(HorocycleFunction {
        h_values: h_values.to_vec(),
        b_values: super::uniform_angles(n_b),
        values: rows.into_iter().flatten().collect(),
    })
}

fn chamber_tables(
    u: &FunctionOnX,
    sgrid: &SpectralGrid,
    which: TValues,
) -> Checked<Vec<SpectralTable>> {
    let lam = sgrid.lambda_values();
    let mut warnings = Vec::new();
    let mut tables = Vec::new();
    for c in [Chamber::Plus, Chamber::Minus] {
        if which.includes(c) {
            let t = helgason_forward_at(u, &lam, sgrid.dlambda(), c, sgrid.n_b);
            warnings.extend(t.warnings);
            if let Some(w) = t.value.truncation_warning() {
                warnings.push(w);
            }
            tables.push(t.value);
        }
    }
    warnings.dedup();
    Checked::with(tables, warnings)
}

/// `T_s u` (`which` = Plus/Minus) or `T u = T₊u + T₋u` (Both) on `hgrid`.
pub fn isometry_t(
    u: &FunctionOnX,
    sgrid: &SpectralGrid,
    hgrid: &HorocycleGrid,
    which: TValues,
) -> Checked<HorocycleFunction> {
    isometry_t_on(u, sgrid, &hgrid.h_values(), which)
}

/// As [`isometry_t`] at arbitrary `H` values.
pub fn isometry_t_on(
    u: &FunctionOnX,
    sgrid: &SpectralGrid,
    h_values: &[f64],
    which: TValues,
) -> Checked<HorocycleFunction> {
    let tables = chamber_tables(u, sgrid, which);
    let refs: Vec<&SpectralTable> = tables.value.iter().collect();
    let t = t_from_tables(&refs, h_values, which).expect("tables built for the requested chamber");
    Checked::with(t, tables.warnings)
}

/// `‖⟨H⟩^δ T u‖` in `L²(𝔞×B, w⁻¹ dH db)` for tabulated `T u` (Simpson in H).
///
/// For δ > 0 a divergence warning is raised when the outer tenth of the H
/// range carries more than 1% of the squared norm.
pub fn weighted_norm_of_t(t: &HorocycleFunction, delta: f64) -> Checked<f64> {
    let nh = t.n_h();
    let w = simpson_or_trapezoid(nh, t.dh() * INV_SQRT_2PI);
    let h_max = t.h_values.iter().map(|h| h.abs()).fold(0.0, f64::max);
    let (mut total, mut tail) = (0.0, 0.0);
    for k in 0..t.n_b() {
        for (i, &h) in t.h_values.iter().enumerate() {
            let c = w[i] * japanese(h).powf(2.0 * delta) * t.value(i, k).norm_sqr();
            total += c;
            if h.abs() > 0.9 * h_max {
                tail += c;
            }
        }
    }
    let scale = 1.0 / (WEYL_ORDER * t.n_b() as f64);
    let mut warnings = Vec::new();
    if delta > 0.0 && total > 0.0 && tail / total > 0.01 {
        warnings.push(Warning::Divergence {
            tail_fraction: tail / total,
        });
    }
    Checked::with((total * scale).sqrt(), warnings)
}

/// H range used for weighted norms: wide enough for the `⟨H⟩^{2δ}` weight to
/// see the exponential tail of `T u`, short of the λ-grid alias period.
pub(crate) fn weighted_h_values(
    sgrid: &SpectralGrid,
    hgrid: &HorocycleGrid,
    delta: f64,
) -> Vec<f64> {
    let period = std::f64::consts::TAU / sgrid.dlambda();
    let want = hgrid.h_max + 6.0 * delta.max(0.0);
    let h_w = want.min(0.45 * period).max(hgrid.h_max.min(0.45 * period));
    let dh = hgrid.dh();
    let n = (h_w / dh).ceil() as usize;
    (0..=2 * n).map(|i| (i as f64 - n as f64) * dh).collect()
}

/// `‖u‖_{L^{2,δ}(X)}`
pub fn weighted_norm(
    u: &FunctionOnX,
    spec: &WeightedNormSpec,
    sgrid: &SpectralGrid,
    hgrid: &HorocycleGrid,
) -> Checked<f64> {
    let h = weighted_h_values(sgrid, hgrid, spec.delta);
    let t = isometry_t_on(u, sgrid, &h, TValues::Both);
    let n = weighted_norm_of_t(&t.value, spec.delta);
    let mut warnings = t.warnings;
    warnings.extend(n.warnings);
    Checked::with(n.value, warnings)
}

/// Compact support versus weighted norms.
///
/// For each member reports `‖u‖_{L^{2,2k}} / ‖u‖_{L²}` and the localized
/// ratio `‖1_{B(o,R)} u‖_{L²} / ‖u‖_{L^{2,−2k}}`. Passes when both stay
/// finite and positive across the family.
pub fn compact_support_embedding_check(
    family: &[FunctionOnX],
    k: u32,
    support_radius: f64,
    sgrid: &SpectralGrid,
    hgrid: &HorocycleGrid,
) -> Result<ExperimentReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    let delta = 2.0 * k as f64;
    let mut rep = ExperimentReport::new(
        "compact_support_embedding",
        "compactly supported L² functions lie in every L^{2,δ}; L^{2,δ} embeds in L²_loc",
    )
    .family(format!(
        "{} bumps, k = {k}, R = {support_radius}",
        family.len()
    ))
    .meta("k", k)
    .meta("support_radius", support_radius);
    let (mut up_max, mut down_max) = (0.0f64, 0.0f64);
    let mut ok = true;
    for (idx, u) in family.iter().enumerate() {
        let l2 = u.l2_norm();
        let up = weighted_norm(u, &WeightedNormSpec { delta }, sgrid, hgrid);
        let down = weighted_norm(u, &WeightedNormSpec { delta: -delta }, sgrid, hgrid);
        rep.warn_all(&up.warnings);
        rep.warn_all(&down.warnings);
        let local = {
            let n = u.n_theta();
            let mut acc = 0.0;
            for (i, (&r, &w)) in u.grid.r_values.iter().zip(&u.grid.ring_weights).enumerate() {
                if r <= support_radius + 1e-12 {
                    acc += w * u.values[i * n..(i + 1) * n]
                        .iter()
                        .map(|v| v.norm_sqr())
                        .sum::<f64>();
                }
            }
            acc.sqrt()
        };
        let r_up = up.value / l2;
        let r_down = local / down.value;
        rep.metric(format!("ratio_up_{idx:02}"), r_up);
        rep.metric(format!("ratio_local_{idx:02}"), r_down);
        ok &= r_up.is_finite() && r_up > 0.0 && r_down.is_finite() && r_down > 0.0;
        up_max = up_max.max(r_up);
        down_max = down_max.max(r_down);
    }
    rep.metric("max_ratio_up", up_max);
    rep.metric("max_ratio_local", down_max);
    rep.pass = ok;
    Ok(rep.norms(up_max, 1.0))
}
