//! Local Calderón–Zygmund decomposition `f = g + Σ_x h_x`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::whitney_cover;
use crate::error::{precondition, Error, Result};
use crate::exponent::Exponent;
use crate::function::FunctionOnSpace;
use crate::maximal::maximal_uncentred;
use crate::report::{worst, BoundReport};
use crate::space::{doubling_constant, MetricMeasureSpace};

/// Relative tolerance for identities that hold exactly in real arithmetic.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CZDecomposition {
    pub alpha: f64,
    pub kappa: f64,
    /// The locality scale `R`.
    pub scale: f64,
    /// `D_{3κR}`.
    pub doubling: f64,
    pub support_set: Vec<usize>,
    /// `B(E, R/2)`.
    pub halo: Vec<usize>,
    pub bad_set: Vec<usize>,
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
    /// `η_x` as sparse rows `(point, weight)` over `B(x, r(x))`.
    pub eta: Vec<Vec<(usize, f64)>>,
    pub f: FunctionOnSpace,
    pub g: FunctionOnSpace,
    pub h: Vec<FunctionOnSpace>,
}

/// Smallest admissible threshold is anything above `D_{3κR}^4 ‖f‖_1 / μ(E)`.
pub fn admissibility_threshold(space: &MetricMeasureSpace, f: &FunctionOnSpace, set: &[usize], r: f64, kappa: f64) -> f64 {
    doubling_constant(space, 3.0 * kappa * r).powi(4) * f.l1_norm(space) / space.measure(set)
}

pub fn cz_decompose(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    set: &[usize],
    r: f64,
    kappa: f64,
    alpha: f64,
) -> Result<CZDecomposition> {
    f.check_space(space)?;
    space.check_indices(set)?;
    let mut e = set.to_vec();
    e.sort_unstable();
    e.dedup();
    if e.is_empty() {
        return Err(precondition("E must be nonempty"));
    }
    if !(r > 0.0) {
        return Err(precondition(format!("R must be positive, got {r}")));
    }
    if !(kappa > 2.0 && kappa <= 3.0) {
        return Err(precondition(format!("kappa must lie in (2, 3], got {kappa}")));
    }
    let diam = space.set_diameter(&e);
    if !(diam < r) {
        return Err(precondition(format!("diam(E) = {diam} must be below R = {r}")));
    }
    if let Some(x) = f.support().into_iter().find(|x| e.binary_search(x).is_err()) {
        return Err(precondition(format!("f is nonzero at {x}, outside E")));
    }
    let doubling = doubling_constant(space, 3.0 * kappa * r);
    let threshold = doubling.powi(4) * f.l1_norm(space) / space.measure(&e);
    if !(alpha > threshold && alpha > 0.0) {
        return Err(precondition(format!(
            "alpha = {alpha} is not admissible; it must exceed D_3kR^4 |f|_1 / mu(E) = {threshold}"
        )));
    }

    let halo = space.neighborhood(&e, r / 2.0);
    let m = maximal_uncentred(space, f, kappa * r);
    let bad: Vec<usize> = (0..space.len()).filter(|&x| m[x] > alpha).collect();
    if let Some(x) = bad.iter().find(|x| halo.binary_search(x).is_err()) {
        return Err(Error::Internal(format!("level set point {x} lies outside B(E, R/2)")));
    }
    if bad.len() == space.len() {
        return Err(Error::Internal("level set is the whole space".into()));
    }

    let n = space.len();
    let (m_dim, norm) = (f.dim(), f.norm_kind());
    let mut g = f.clone();
    if bad.is_empty() {
        return Ok(CZDecomposition {
            alpha,
            kappa,
            scale: r,
            doubling,
            support_set: e,
            halo,
            bad_set: bad,
            centers: Vec::new(),
            radii: Vec::new(),
            eta: Vec::new(),
            f: f.clone(),
            g,
            h: Vec::new(),
        });
    }

    // diam(U) < 2R and every point of U is within 3R/2 of E ∖ U.
    let cover = whitney_cover(space, &bad, 2.0 * r).map_err(|e| Error::Internal(format!("Whitney cover: {e}")))?;
    let balls: Vec<Vec<usize>> = cover
        .centers
        .iter()
        .zip(&cover.radii)
        .map(|(&x, &rad)| space.ball_members(x, rad))
        .collect::<Result<_>>()?;
    let mut count = vec![0usize; n];
    for b in &balls {
        for &y in b {
            count[y] += 1;
        }
    }
    if let Some(&z) = bad.iter().find(|&&z| count[z] == 0) {
        return Err(Error::Internal(format!("partition of unity undefined at {z}")));
    }

    let eta: Vec<Vec<(usize, f64)>> = balls
        .iter()
        .map(|b| b.iter().map(|&y| (y, 1.0 / count[y] as f64)).collect())
        .collect();

    let pieces: Vec<(Vec<f64>, FunctionOnSpace)> = eta
        .par_iter()
        .map(|row| {
            let mut h = FunctionOnSpace::zeros(n, m_dim).with_norm(norm);
            for &(y, t) in row {
                for (hv, fv) in h.row_mut(y).iter_mut().zip(f.row(y)) {
                    *hv = fv * t;
                }
            }
            let avg = ball_mean(space, &h, row);
            for &(y, _) in row {
                for (hv, a) in h.row_mut(y).iter_mut().zip(&avg) {
                    *hv -= a;
                }
            }
            (avg, h)
        })
        .collect();

    for &z in &bad {
        g.row_mut(z).iter_mut().for_each(|v| *v = 0.0);
    }
    for ((avg, _), b) in pieces.iter().zip(&balls) {
        for &y in b {
            for (gv, a) in g.row_mut(y).iter_mut().zip(avg) {
                *gv += a;
            }
        }
    }

    let (avgs, h): (Vec<_>, Vec<_>) = pieces.into_iter().unzip();
    drop(avgs);
    Ok(CZDecomposition {
        alpha,
        kappa,
        scale: r,
        doubling,
        support_set: e,
        halo,
        bad_set: bad,
        centers: cover.centers,
        radii: cover.radii,
        eta,
        f: f.clone(),
        g,
        h,
    })
}

/// Mean of `v` over the ball listed in `row`, corrected once so that
/// `Σ_y (v(y) − mean) μ{y}` is as close to zero as the data allows.
fn ball_mean(space: &MetricMeasureSpace, v: &FunctionOnSpace, row: &[(usize, f64)]) -> Vec<f64> {
    let first = v.row(row[0].0);
    if row.iter().all(|&(y, _)| v.row(y) == first) {
        return first.to_vec();
    }
    let ball: Vec<usize> = row.iter().map(|&(y, _)| y).collect();
    let mut avg = v.average_over(space, &ball);
    let total: f64 = ball.iter().map(|&y| space.weight(y)).sum();
    for (k, a) in avg.iter_mut().enumerate() {
        let resid: f64 = ball.iter().map(|&y| (v.row(y)[k] - *a) * space.weight(y)).sum();
        *a += resid / total;
    }
    avg
}

/// The seven conclusions of the decomposition, in order.
pub fn certify_czd(space: &MetricMeasureSpace, dec: &CZDecomposition) -> Vec<BoundReport> {
    let d = dec.doubling;
    let f = &dec.f;
    let n = space.len();
    let l1 = Exponent::Finite(1.0);
    let f_l1 = f.lp_norm(space, l1);
    let f_sup = f.sup_norm();
    let in_halo = |y: usize| dec.halo.binary_search(&y).is_ok();

    // (1)
    let mut rest = f.sub(&dec.g);
    for h in &dec.h {
        rest = rest.sub(h);
    }
    let residual = rest.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r1 = BoundReport::new(
        "czd (1) reconstruction f = g + sum h_x",
        IDENTITY_TOLERANCE,
        residual,
        1.0 + f_sup,
        "sup-norm residual",
    );

    // (2)
    let g_abs = dec.g.abs();
    let gx = (0..n).max_by(|&a, &b| g_abs[a].total_cmp(&g_abs[b]).then(b.cmp(&a))).unwrap_or(0);
    let g_leak: Vec<usize> = dec.g.support().into_iter().filter(|&y| !in_halo(y)).collect();
    let r2 = BoundReport::new(
        "czd (2) |g|_inf <= D_3kR^2 alpha",
        d * d,
        g_abs.get(gx).copied().unwrap_or(0.0),
        dec.alpha,
        format!("x = {gx}"),
    )
    .and(g_leak.is_empty(), &format!("g nonzero outside B(E, R/2) at {g_leak:?}"));

    // (3)
    let r3 = BoundReport::new("czd (3) |g|_1 <= 3 |f|_1", 3.0, dec.g.lp_norm(space, l1), f_l1, "");

    // (4)
    let mut outside = Vec::new();
    let mut ball_mass = 0.0;
    for ((&x, &rad), h) in dec.centers.iter().zip(&dec.radii).zip(&dec.h) {
        ball_mass += space.ball_measure(x, rad);
        let escaped = h.support().into_iter().any(|y| space.d(x, y) >= rad);
        let ball_leaks = (0..n).any(|y| space.d(x, y) < rad && !in_halo(y));
        if escaped || ball_leaks {
            outside.push(x);
        }
    }
    let r4 = BoundReport::new(
        "czd (4) sum mu(B(x, r(x))) <= D_3kR^6 |f|_1 / alpha",
        d.powi(6),
        ball_mass,
        f_l1 / dec.alpha,
        format!("{} balls", dec.centers.len()),
    )
    .and(outside.is_empty(), &format!("support of h_x escapes its ball for x in {outside:?}"));

    // (5)
    let mut r5: Option<BoundReport> = None;
    for (&x, h) in dec.centers.iter().zip(&dec.h) {
        let integral = h.integral(space);
        let h_l1 = h.lp_norm(space, l1);
        let drift = integral.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        r5 = worst(
            r5,
            BoundReport::new("czd (5) h_x has zero mean", IDENTITY_TOLERANCE, drift, h_l1, format!("x = {x}")),
        );
    }
    let r5 = r5.unwrap_or_else(|| BoundReport::new("czd (5) h_x has zero mean", IDENTITY_TOLERANCE, 0.0, 0.0, "no centers"));

    // (6)
    let mut r6: Option<BoundReport> = None;
    let mut h_l1_sum = 0.0;
    for (&x, h) in dec.centers.iter().zip(&dec.h) {
        h_l1_sum += h.lp_norm(space, l1);
        r6 = worst(
            r6,
            BoundReport::new("czd (6) |h_x|_inf <= 2 |f|_inf", 2.0, h.sup_norm(), f_sup, format!("x = {x}")),
        );
    }
    let sum_ok = h_l1_sum <= 2.0 * f_l1 * (1.0 + crate::report::REPORT_SLACK);
    let r6 = r6
        .unwrap_or_else(|| BoundReport::new("czd (6) |h_x|_inf <= 2 |f|_inf", 2.0, 0.0, f_sup, "no centers"))
        .and(sum_ok, &format!("sum |h_x|_1 = {h_l1_sum} exceeds 2 |f|_1 = {}", 2.0 * f_l1));

    // (7)
    let mut count = vec![0usize; n];
    for (&x, &rad) in dec.centers.iter().zip(&dec.radii) {
        for (y, c) in count.iter_mut().enumerate() {
            if space.d(x, y) < rad {
                *c += 1;
            }
        }
    }
    let worst_pt = (0..n).max_by_key(|&y| (count[y], std::cmp::Reverse(y))).unwrap_or(0);
    let r7 = BoundReport::new(
        "czd (7) overlap <= D_3kR^5",
        d.powi(5),
        count.get(worst_pt).copied().unwrap_or(0) as f64,
        1.0,
        format!("point {worst_pt}"),
    );

    vec![r1, r2, r3, r4, r5, r6, r7]
}
