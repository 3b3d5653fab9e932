//! The interpolation constant `φ(r, p)` and the Marcinkiewicz constant.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exponent::Exponent;

/// Search margin kept from the ends of `(1, p)`.
pub const Q_MARGIN: f64 = 1e-8;
const SCAN_POINTS: usize = 257;
const GOLDEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiMethod {
    ClosedForm,
    Minimized,
    Symmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiQuery {
    pub r: Exponent,
    pub p: f64,
    pub value: f64,
    /// Located minimizer (for `p > r`, of the dual problem).
    pub minimizer_q: Option<f64>,
    pub method: PhiMethod,
}

/// `ln` of `(q' + 1/(r/q − 1))^{(1/p − 1/r)/(1 − q/r)}` for finite `r`.
pub fn phi_log_objective(r: f64, p: f64, q: f64) -> f64 {
    let exponent = (1.0 / p - 1.0 / r) / (1.0 - q / r);
    exponent * phi_base(r, q).ln()
}

/// `q' + 1/(r/q − 1)`.
pub fn phi_base(r: f64, q: f64) -> f64 {
    q / (q - 1.0) + q / (r - q)
}

fn check_args(r: Exponent, p: f64) -> Result<()> {
    if let Exponent::Finite(r) = r {
        if !(r > 1.0) {
            return Err(invalid(format!("phi needs r in (1, inf], got {r}")));
        }
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("phi needs p in (1, inf), got {p}")));
    }
    Ok(())
}

pub fn phi(r: Exponent, p: f64) -> Result<f64> {
    Ok(phi_query(r, p)?.value)
}

pub fn phi_query(r: Exponent, p: f64) -> Result<PhiQuery> {
    check_args(r, p)?;
    let closed = |value| PhiQuery {
        r,
        p,
        value,
        minimizer_q: None,
        method: PhiMethod::ClosedForm,
    };
    match r {
        Exponent::Infinite => Ok(closed((p / (p - 1.0)).powf(1.0 / p))),
        Exponent::Finite(rv) if p == rv => Ok(closed(1.0)),
        Exponent::Finite(rv) if p < rv => {
            let (value, q) = minimize(rv, p);
            Ok(PhiQuery {
                r,
                p,
                value,
                minimizer_q: Some(q),
                method: PhiMethod::Minimized,
            })
        }
        Exponent::Finite(rv) => {
            let (rd, pd) = (rv / (rv - 1.0), p / (p - 1.0));
            let dual = phi_query(Exponent::Finite(rd), pd)?;
            Ok(PhiQuery {
                r,
                p,
                value: dual.value,
                minimizer_q: dual.minimizer_q,
                method: PhiMethod::Symmetry,
            })
        }
    }
}

/// Minimizes the log objective over `[1 + δ, p − δ]`, also admitting the
/// continuous limit at `q = p`. Returns `(φ, q*)`.
fn minimize(r: f64, p: f64) -> (f64, f64) {
    let f = |q: f64| phi_log_objective(r, p, q);
    let (mut lo, mut hi) = (1.0 + Q_MARGIN, p - Q_MARGIN);
    if lo > hi {
        lo = 0.5 * (1.0 + p);
        hi = lo;
    }

    let mut best = (f(p), p);
    let consider = |v: f64, q: f64, best: &mut (f64, f64)| {
        if v < best.0 {
            *best = (v, q);
        }
    };

    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| if i + 1 == SCAN_POINTS { hi } else { lo + step * i as f64 })
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&q| f(q)).collect();
    let k = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    for (&q, &v) in grid.iter().zip(&vals) {
        consider(v, q, &mut best);
    }

    if step > 0.0 {
        let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > GOLDEN_TOL * b {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        consider(fc, c, &mut best);
        consider(fd, d, &mut best);
    }
    (best.0.exp(), best.1)
}

/// The two closed-form bounds `(√r-regime, small-p regime)` for `p ∈ (1, r]`.
///
/// The first applies for `√r <= p <= r`, the second for `p <= √r`; each is
/// returned regardless of regime. The second is infinite at `p = r`.
pub fn phi_upper_bounds(r: f64, p: f64) -> Result<(f64, f64)> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(invalid(format!("closed-form bounds need finite r > 1, got {r}")));
    }
    if !(p > 1.0 && p <= r) {
        return Err(invalid(format!("closed-form bounds need p in (1, r], got {p}")));
    }
    let s = r.sqrt();
    let gap = 1.0 / p - 1.0 / r;
    let first = ((s + 1.0) / (s - 1.0)).powf(gap / (1.0 - 1.0 / s));
    let second = if p == r {
        f64::INFINITY
    } else {
        (p / (p - 1.0) + 1.0 / (r / p - 1.0)).powf(1.0 / p)
    };
    Ok((first, second))
}

/// `2 φ(r,p) A^{r'(1/p − 1/r)} B^{r'/p'}` for `p ∈ (1, r]`.
pub fn marcinkiewicz_constant(a: f64, b: f64, r: Exponent, p: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("A and B must be positive, got {a} and {b}")));
    }
    check_args(r, p)?;
    if !(p <= r.value()) {
        return Err(invalid(format!("Marcinkiewicz constant needs p <= r, got p = {p}, r = {r}")));
    }
    let rc = r.conjugate().value();
    let pc = p / (p - 1.0);
    Ok(2.0 * phi(r, p)? * a.powf(rc * (1.0 / p - r.recip())) * b.powf(rc / pc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSup {
    pub value: f64,
    pub r: Exponent,
    pub p: f64,
    pub samples: usize,
}

/// Largest `p` allowed for a given `r`: `min(C2 r, r / (1 − C2/ln r)_+)`.
pub fn region_p_cap(r: Exponent, c2: f64) -> f64 {
    match r {
        Exponent::Infinite => f64::INFINITY,
        Exponent::Finite(r) => {
            let denom = 1.0 - c2 / r.ln();
            let second = if denom > 0.0 { r / denom } else { f64::INFINITY };
            (c2 * r).min(second)
        }
    }
}

/// Sampled supremum of `φ` over `r, p ∈ [C1, ∞]` with `p <= region_p_cap(r)`.
///
/// Both axes use `grid_size` log-spaced values from `C1` to `10^4 C1`; the
/// last `r` sample is `∞`. A single-point grid evaluates `φ(C1, C1)`.
pub fn phi_region_sup(c1: f64, c2: f64, grid_size: usize) -> Result<RegionSup> {
    if !(c1 > 1.0 && c2 > 1.0 && c1.is_finite() && c2.is_finite()) {
        return Err(invalid(format!("C1 and C2 must be finite and > 1, got {c1}, {c2}")));
    }
    if grid_size == 0 {
        return Err(invalid("grid size must be positive"));
    }
    let top = c1 * 1e4;
    let logspace = |k: usize| -> Vec<f64> {
        if k == 1 {
            return vec![c1];
        }
        (0..k)
            .map(|i| {
                if i + 1 == k {
                    top
                } else {
                    c1 * (top / c1).powf(i as f64 / (k - 1) as f64)
                }
            })
            .collect()
    };
    let ps = logspace(grid_size);
    let rs: Vec<Exponent> = if grid_size == 1 {
        vec![Exponent::Finite(c1)]
    } else {
        let mut v: Vec<Exponent> = logspace(grid_size - 1).into_iter().map(Exponent::Finite).collect();
        v.push(Exponent::Infinite);
        v
    };

    let mut out = RegionSup {
        value: f64::NEG_INFINITY,
        r: rs[0],
        p: ps[0],
        samples: 0,
    };
    for &r in &rs {
        let cap = region_p_cap(r, c2);
        for &p in ps.iter().filter(|&&p| p <= cap) {
            let v = phi(r, p)?;
            out.samples += 1;
            if v > out.value {
                out.value = v;
                out.r = r;
                out.p = p;
            }
        }
    }
    if out.samples == 0 {
        return Err(invalid("no grid point satisfies the region constraint"));
    }
    Ok(out)
}
