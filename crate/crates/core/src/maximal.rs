//! Truncated Hardy–Littlewood maximal operators.
//!
//! Only finitely many distinct balls `B(y, r)`, `r ∈ (0, R]`, exist around
//! each centre: the closed prefixes `{z : d(y, z) <= ρ}` for the distances
//! `ρ < R` from `y`. Both operators are exact maxima over those prefixes.
//! Since every ball has positive finite measure the `∞/∞ = 0` convention
//! never applies.

use rayon::prelude::*;

use crate::error::{precondition, Result};
use crate::exponent::Exponent;
use crate::function::{lp_norm_of, FunctionOnSpace};
use crate::report::{worst, BoundReport};
use crate::space::{doubling_constant, MetricMeasureSpace, RadialProfile};

/// Averages of `|f|` over the achievable balls around one centre, by group.
fn prefix_averages(profile: &RadialProfile, abs: &[f64], weights: &[f64], r: f64) -> Vec<f64> {
    let groups = profile.groups_within(r);
    let mut out = Vec::with_capacity(groups);
    let mut mass = 0.0;
    for k in 0..groups {
        for &y in &profile.members[k] {
            mass += abs[y] * weights[y];
        }
        out.push(mass / profile.cumulative[k]);
    }
    out
}

/// Centred maximal function `sup_{r ∈ (0,R]} ⨍_{B(x,r)} |f|`.
pub fn maximal_centred(space: &MetricMeasureSpace, f: &FunctionOnSpace, r: f64) -> Vec<f64> {
    assert!(r > 0.0, "maximal radius must be positive");
    let abs = f.abs();
    centred_of_abs(space, &abs, r)
}

pub(crate) fn centred_of_abs(space: &MetricMeasureSpace, abs: &[f64], r: f64) -> Vec<f64> {
    (0..space.len())
        .into_par_iter()
        .map(|x| {
            prefix_averages(&space.radial_profile(x), abs, space.weights(), r)
                .into_iter()
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Uncentred maximal function: sup of `⨍_{B(y,r)} |f|` over balls with
/// `r ∈ (0, R]` that contain `x`.
pub fn maximal_uncentred(space: &MetricMeasureSpace, f: &FunctionOnSpace, r: f64) -> Vec<f64> {
    assert!(r > 0.0, "maximal radius must be positive");
    let abs = f.abs();
    let n = space.len();
    (0..n)
        .into_par_iter()
        .fold(
            || vec![0.0f64; n],
            |mut acc, y| {
                let profile = space.radial_profile(y);
                let mut best = prefix_averages(&profile, &abs, space.weights(), r);
                // best[k]: largest average over balls around y containing group k.
                for k in (0..best.len().saturating_sub(1)).rev() {
                    best[k] = best[k].max(best[k + 1]);
                }
                for (k, &b) in best.iter().enumerate() {
                    for &x in &profile.members[k] {
                        if b > acc[x] {
                            acc[x] = b;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0.0f64; n],
            |mut a, b| {
                for (u, v) in a.iter_mut().zip(b) {
                    *u = u.max(v);
                }
                a
            },
        )
}

/// Checks `M̃_R f <= M_R f <= D_R M̃_{2R} f` pointwise.
pub fn check_comparison(space: &MetricMeasureSpace, f: &FunctionOnSpace, r: f64) -> BoundReport {
    let centred = maximal_centred(space, f, r);
    let uncentred = maximal_uncentred(space, f, r);
    let centred_2r = maximal_centred(space, f, 2.0 * r);
    let d = doubling_constant(space, r);

    let first: Vec<usize> = (0..space.len()).filter(|&x| centred[x] > uncentred[x]).collect();
    let mut report: Option<BoundReport> = None;
    for x in 0..space.len() {
        report = worst(
            report,
            BoundReport::new(
                format!("M_R <= D_R M~_2R (R = {r})"),
                d,
                uncentred[x],
                centred_2r[x],
                format!("x = {x}"),
            ),
        );
    }
    report
        .unwrap_or_else(|| BoundReport::new("M_R <= D_R M~_2R", d, 0.0, 0.0, ""))
        .and(first.is_empty(), &format!("M~_R > M_R at {first:?}"))
}

fn check_local_set(space: &MetricMeasureSpace, set: &[usize], r: f64) -> Result<()> {
    space.check_indices(set)?;
    let diam = space.set_diameter(set);
    if diam < 6.0 * r {
        Ok(())
    } else {
        Err(precondition(format!("diam(E) = {diam} must be below 6R = {}", 6.0 * r)))
    }
}

/// Weak type (1, 1): `μ{x ∈ E : M_R f(x) > λ} <= D_{3R}^4 ‖f‖_1 / λ`.
///
/// Without an explicit grid the check is exhaustive: with `v_1 < … < v_m`
/// the distinct values of `M_R f` on `E` and `v_0 = 0`, the level-set
/// measure is constant for `λ ∈ [v_k, v_{k+1})`, so the supremum of
/// `λ · μ{M_R f > λ}` is the left limit `v_{k+1} · μ{M_R f > v_k}`.
pub fn check_weak11(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    set: &[usize],
    r: f64,
    lambda_grid: Option<&[f64]>,
) -> Result<BoundReport> {
    f.check_space(space)?;
    check_local_set(space, set, r)?;
    let constant = doubling_constant(space, 3.0 * r).powi(4);
    let norm1 = f.l1_norm(space);
    let m = maximal_uncentred(space, f, r);
    let level = |lambda: f64| -> f64 { set.iter().filter(|&&x| m[x] > lambda).map(|&x| space.weight(x)).sum() };

    let name = format!("weak(1,1) with D_3R^4 (R = {r})");
    let mut out: Option<BoundReport> = None;
    match lambda_grid {
        Some(grid) => {
            for &lambda in grid.iter().filter(|&&l| l > 0.0) {
                out = worst(
                    out,
                    BoundReport::new(&name, constant, lambda * level(lambda), norm1, format!("lambda = {lambda}")),
                );
            }
        }
        None => {
            let mut levels: Vec<f64> = set.iter().map(|&x| m[x]).filter(|&v| v > 0.0).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let mut below = 0.0;
            for &v in &levels {
                out = worst(
                    out,
                    BoundReport::new(&name, constant, v * level(below), norm1, format!("lambda -> {v} from below")),
                );
                below = v;
            }
        }
    }
    Ok(out.unwrap_or_else(|| BoundReport::new(name, constant, 0.0, norm1, "empty level sets")))
}

/// `‖χ_E M_R f‖_p <= 2 p'^{1/p} D_{3R}^{4/p} ‖f‖_p` for `p ∈ (1, ∞]`.
pub fn check_lp_bound(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    set: &[usize],
    r: f64,
    p: Exponent,
) -> Result<BoundReport> {
    f.check_space(space)?;
    if let Exponent::Finite(q) = p {
        if !(q > 1.0) {
            return Err(precondition(format!("L^p bound needs p > 1, got {q}")));
        }
    }
    check_local_set(space, set, r)?;
    let constant = lp_maximal_constant(space, r, p);
    let m = maximal_uncentred(space, f, r);
    let mut restricted = vec![0.0; space.len()];
    for &x in set {
        restricted[x] = m[x];
    }
    Ok(BoundReport::new(
        format!("L^{p} maximal bound (R = {r})"),
        constant,
        lp_norm_of(space, &restricted, p),
        f.lp_norm(space, p),
        format!("|E| = {}", set.len()),
    ))
}

/// `2 p'^{1/p} D_{3R}^{4/p}`.
pub fn lp_maximal_constant(space: &MetricMeasureSpace, r: f64, p: Exponent) -> f64 {
    let d = doubling_constant(space, 3.0 * r);
    let inv = p.recip();
    2.0 * p.conjugate().value().powf(inv) * d.powf(4.0 * inv)
}

/// Singleton balls recover `f(x)` exactly: for every `x` the average over
/// `B(x, r)` with `r` below the smallest positive distance from `x` is `f(x)`.
pub fn check_lebesgue_points(space: &MetricMeasureSpace, f: &FunctionOnSpace) -> BoundReport {
    let mut failures = Vec::new();
    for x in 0..space.len() {
        let nearest = space
            .row(x)
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let r = if nearest.is_finite() { nearest / 2.0 } else { 1.0 };
        let ball = space.ball_members(x, r).expect("index in range");
        if f.average_over(space, &ball) != f.row(x) {
            failures.push(x);
        }
    }
    BoundReport::assertion("Lebesgue points (small-ball averages)", failures.len(), format!("{failures:?}"))
}
