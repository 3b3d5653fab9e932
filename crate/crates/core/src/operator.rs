//! Kernel conditions and norm bounds for local singular-integral operators.
//!
//! Kernels are scalar `n × n` matrices acting on each vector coordinate, so
//! `|K(x, y)|` as an operator norm is the absolute value of the entry.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::exponent::Exponent;
use crate::function::{read_csv_rows, FunctionOnSpace, VecNorm};
use crate::interp::phi;
use crate::report::{worst, BoundReport};
use crate::space::{doubling_constant, separated_net, MetricMeasureSpace};

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 0x5eed_c2d0;

/// Reads a headerless `n × n` CSV kernel.
pub fn load_kernel_csv(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: shown.clone(),
        source,
    })?;
    let rows = read_csv_rows(&text).map_err(|message| Error::Parse {
        path: shown.clone(),
        message,
    })?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse {
            path: shown,
            message: format!("expected a {n} × {n} matrix"),
        });
    }
    Ok(rows.concat())
}

fn check_kernel(space: &MetricMeasureSpace, k: &[f64]) -> Result<()> {
    let n = space.len();
    if k.len() != n * n {
        return Err(invalid(format!("kernel has {} entries, expected {n} × {n}", k.len())));
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(invalid("kernel entries must be finite"));
    }
    Ok(())
}

/// `T f(x) = χ_E(x) Σ_{y ∈ B(E, R/2)} K(x, y) f(y) μ{y}` with its kernel data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarKernelOperator {
    pub n: usize,
    pub k: Vec<f64>,
    pub set: Vec<usize>,
    pub scale: f64,
    pub halo: Vec<usize>,
}

impl ScalarKernelOperator {
    pub fn new(space: &MetricMeasureSpace, k: Vec<f64>, set: &[usize], scale: f64) -> Result<Self> {
        check_kernel(space, &k)?;
        space.check_indices(set)?;
        let mut e = set.to_vec();
        e.sort_unstable();
        e.dedup();
        if e.is_empty() {
            return Err(precondition("E must be nonempty"));
        }
        let diam = space.set_diameter(&e);
        if !(diam < scale) {
            return Err(precondition(format!("diam(E) = {diam} must be below R = {scale}")));
        }
        let halo = space.neighborhood(&e, scale / 2.0);
        Ok(ScalarKernelOperator {
            n: space.len(),
            k,
            set: e,
            scale,
            halo,
        })
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.k[x * self.n + y]
    }

    pub fn transposed(&self) -> Vec<f64> {
        transpose(self.n, &self.k)
    }

    /// `T f` with rows `E` and columns `B(E, R/2)`.
    pub fn apply(&self, space: &MetricMeasureSpace, f: &FunctionOnSpace) -> FunctionOnSpace {
        apply_block(space, &self.k, &self.set, &self.halo, f)
    }

    /// `χ_E T' f` for the transposed-role operator with rows `B(E, R/2)` and columns `E`.
    pub fn apply_dual(&self, space: &MetricMeasureSpace, f: &FunctionOnSpace) -> FunctionOnSpace {
        apply_block(space, &self.k, &self.set, &self.set, f)
    }
}

pub(crate) fn transpose(n: usize, k: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            t[y * n + x] = k[x * n + y];
        }
    }
    t
}

/// `Σ_{y ∈ cols} K(x, y) f(y) μ{y}` for `x ∈ rows`, zero elsewhere.
pub(crate) fn apply_block(space: &MetricMeasureSpace, k: &[f64], rows: &[usize], cols: &[usize], f: &FunctionOnSpace) -> FunctionOnSpace {
    let n = space.len();
    let mut out = FunctionOnSpace::zeros(n, f.dim()).with_norm(f.norm_kind());
    for &x in rows {
        let target = out.row_mut(x);
        for &y in cols {
            let c = k[x * n + y] * space.weight(y);
            if c != 0.0 {
                for (t, v) in target.iter_mut().zip(f.row(y)) {
                    *t += c * v;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HormanderValue {
    pub value: f64,
    /// The pair `(y, y')` attaining the maximum.
    pub witness: Option<(usize, usize)>,
}

/// Exact `max_{y, y'} Σ_{x ∈ E, d(x, y) >= 2 d(y, y')} |K(x, y) − K(x, y')| μ{x}`
/// over `y, y' ∈ B(E, R/2)` with `0 < d(y, y') < R`.
pub fn hormander_constant(space: &MetricMeasureSpace, k: &[f64], set: &[usize], scale: f64) -> Result<HormanderValue> {
    let op = ScalarKernelOperator::new(space, k.to_vec(), set, scale)?;
    Ok(hormander_on(space, k, &op.set, &op.halo, scale))
}

/// The dual condition: `Σ_{y ∈ E, d(x, y) >= 2 d(x, x')} |K(x, y) − K(x', y)| μ{y}`.
pub fn hormander_constant_dual(space: &MetricMeasureSpace, k: &[f64], set: &[usize], scale: f64) -> Result<HormanderValue> {
    let op = ScalarKernelOperator::new(space, k.to_vec(), set, scale)?;
    Ok(hormander_on(space, &op.transposed(), &op.set, &op.halo, scale))
}

fn hormander_on(space: &MetricMeasureSpace, k: &[f64], set: &[usize], halo: &[usize], scale: f64) -> HormanderValue {
    let n = space.len();
    let best = halo
        .par_iter()
        .map(|&y| {
            let mut best = (0.0f64, None);
            for &y2 in halo {
                let dy = space.d(y, y2);
                if !(dy > 0.0 && dy < scale) {
                    continue;
                }
                let mut sum = 0.0;
                for &x in set {
                    if space.d(x, y) >= 2.0 * dy {
                        sum += (k[x * n + y] - k[x * n + y2]).abs() * space.weight(x);
                    }
                }
                if sum > best.0 || (best.1.is_none() && sum >= best.0) {
                    best = (sum, Some((y, y2)));
                }
            }
            best
        })
        .reduce(
            || (0.0, None),
            |a, b| match (a.1, b.1) {
                (None, _) => b,
                (_, None) => a,
                (Some(wa), Some(wb)) => {
                    if b.0 > a.0 || (b.0 == a.0 && wb < wa) {
                        b
                    } else {
                        a
                    }
                }
            },
        );
    HormanderValue {
        value: best.0,
        witness: best.1,
    }
}

/// Norm bound of `K` restricted to `rows × cols` as a map `L^r(cols) → L^r(rows)`.
///
/// Exact largest singular value for `r = 2`; otherwise `A_1^{1/r} A_∞^{1/r'}`
/// from the exact `L^1` and `L^∞` norms.
pub fn block_norm_bound(space: &MetricMeasureSpace, k: &[f64], rows: &[usize], cols: &[usize], r: Exponent) -> f64 {
    let n = space.len();
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    if r == Exponent::Finite(2.0) {
        let m = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            let (x, y) = (rows[i], cols[j]);
            space.weight(x).sqrt() * k[x * n + y] * space.weight(y).sqrt()
        });
        return m.singular_values().iter().fold(0.0f64, |a, &b| a.max(b));
    }
    let a_inf = rows
        .iter()
        .map(|&x| cols.iter().map(|&y| k[x * n + y].abs() * space.weight(y)).sum::<f64>())
        .fold(0.0f64, f64::max);
    let a_one = cols
        .iter()
        .map(|&y| rows.iter().map(|&x| k[x * n + y].abs() * space.weight(x)).sum::<f64>())
        .fold(0.0f64, f64::max);
    match r {
        Exponent::Infinite => a_inf,
        Exponent::Finite(rv) if rv == 1.0 => a_one,
        Exponent::Finite(rv) => {
            if a_one == 0.0 || a_inf == 0.0 {
                0.0
            } else {
                a_one.powf(1.0 / rv) * a_inf.powf(1.0 - 1.0 / rv)
            }
        }
    }
}

/// Upper bound for `A_R`: `T` from `L^r(B(E, R/2))` into `L^r(E)`.
pub fn operator_norm_bound(space: &MetricMeasureSpace, k: &[f64], set: &[usize], scale: f64, r: Exponent) -> Result<f64> {
    let op = ScalarKernelOperator::new(space, k.to_vec(), set, scale)?;
    Ok(block_norm_bound(space, k, &op.set, &op.halo, r))
}

/// Upper bound for the dual `A_R`: from `L^r(E)` into `L^r(B(E, R/2))`.
pub fn operator_norm_bound_dual(space: &MetricMeasureSpace, k: &[f64], set: &[usize], scale: f64, r: Exponent) -> Result<f64> {
    let op = ScalarKernelOperator::new(space, k.to_vec(), set, scale)?;
    Ok(block_norm_bound(space, k, &op.halo, &op.set, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzoConfig {
    pub kappa: f64,
    pub r_exp: Exponent,
    pub p_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Supplied `A_R`, used in place of the computed bound when present.
    #[serde(default)]
    pub a_override: Option<f64>,
}

impl CzoConfig {
    pub fn new(kappa: f64, r_exp: Exponent, p_list: Vec<f64>) -> Self {
        CzoConfig {
            kappa,
            r_exp,
            p_list,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            a_override: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa > 2.0) {
            return Err(precondition(format!("kappa must exceed 2, got {}", self.kappa)));
        }
        if let Exponent::Finite(r) = self.r_exp {
            if !(r > 1.0) {
                return Err(precondition(format!("r must lie in (1, inf], got {r}")));
            }
        }
        if let Some(&p) = self.p_list.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
            return Err(precondition(format!("every p must lie in (1, inf), got {p}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzoCheck {
    /// `D_{3κR}`.
    pub doubling: f64,
    pub a_r: f64,
    pub c_r: HormanderValue,
    pub a_r_dual: Option<f64>,
    pub c_r_dual: Option<HormanderValue>,
    pub reports: Vec<BoundReport>,
}

/// A labelled test input.
pub(crate) struct Probe {
    pub label: String,
    pub f: FunctionOnSpace,
}

/// Seeded random inputs on `support` plus spikes and mean-zero dipoles.
pub(crate) fn probes(space: &MetricMeasureSpace, support: &[usize], trials: usize, seed: u64) -> Vec<Probe> {
    let n = space.len();
    let mut out = Vec::new();
    let stride = (support.len() / 8).max(1);
    for &y in support.iter().step_by(stride) {
        out.push(Probe {
            label: format!("spike at {y}"),
            f: FunctionOnSpace::spike(n, y, 1.0 / space.weight(y)),
        });
    }
    if support.len() >= 2 {
        let base = support[0];
        let mut others: Vec<usize> = support[1..].to_vec();
        others.sort_by(|&a, &b| space.d(base, a).total_cmp(&space.d(base, b)).then(a.cmp(&b)));
        let step = (others.len() / 6).max(1);
        let mut picks: Vec<usize> = others.iter().copied().step_by(step).collect();
        if let Some(&last) = others.last() {
            if picks.last() != Some(&last) {
                picks.push(last);
            }
        }
        for y2 in picks {
            let mut v = vec![0.0; n];
            v[base] = 1.0 / space.weight(base);
            v[y2] = -1.0 / space.weight(y2);
            out.push(Probe {
                label: format!("dipole ({base}, {y2})"),
                f: FunctionOnSpace::scalar(v),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials.saturating_sub(out.len()) {
        let m = if t % 2 == 0 { 1 } else { 3 };
        let mut f = FunctionOnSpace::zeros(n, m).with_norm(VecNorm::L2);
        let sparse = t % 3 == 2;
        for &y in support {
            if sparse && rng.gen::<f64>() < 0.7 {
                continue;
            }
            for v in f.row_mut(y) {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        out.push(Probe {
            label: format!("random #{t}"),
            f,
        });
    }
    out
}

fn ratio_report(
    name: String,
    constant: f64,
    space: &MetricMeasureSpace,
    p: f64,
    probes: &[Probe],
    apply: impl Fn(&FunctionOnSpace) -> FunctionOnSpace + Sync,
) -> BoundReport {
    let p_exp = Exponent::Finite(p);
    probes
        .par_iter()
        .map(|probe| {
            let tf = apply(&probe.f);
            BoundReport::new(&name, constant, tf.lp_norm(space, p_exp), probe.f.lp_norm(space, p_exp), &probe.label)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, worst)
        .unwrap_or_else(|| BoundReport::new(name, constant, 0.0, 0.0, "no probes"))
}

/// Verifies `‖T f‖_p <= 16 φ(r, p)(D_{3κR}^9 A_R + C_R) ‖f‖_p` for `p <= r`
/// (rows `E`, columns `B(E, R/2)`) and the dual estimate for `p >= r`
/// (rows `B(E, R/2)`, columns `E`, output restricted to `E`), over seeded
/// random and structured inputs concentrated on `E`.
pub fn check_czo_bound(
    space: &MetricMeasureSpace,
    k: &[f64],
    set: &[usize],
    scale: f64,
    config: &CzoConfig,
) -> Result<CzoCheck> {
    config.validate()?;
    let op = ScalarKernelOperator::new(space, k.to_vec(), set, scale)?;
    let d = doubling_constant(space, 3.0 * config.kappa * scale);
    let d9 = d.powi(9);
    let r = config.r_exp;

    let a_r = config
        .a_override
        .unwrap_or_else(|| block_norm_bound(space, k, &op.set, &op.halo, r));
    let c_r = hormander_on(space, k, &op.set, &op.halo, scale);
    let needs_dual = config.p_list.iter().any(|&p| p >= r.value());
    let (a_dual, c_dual) = if needs_dual {
        let a = config
            .a_override
            .unwrap_or_else(|| block_norm_bound(space, k, &op.halo, &op.set, r));
        (Some(a), Some(hormander_on(space, &op.transposed(), &op.set, &op.halo, scale)))
    } else {
        (None, None)
    };

    let inputs = probes(space, &op.set, config.trials, config.seed);
    let mut reports = Vec::new();
    for &p in &config.p_list {
        let phi_rp = phi(r, p)?;
        if p <= r.value() {
            let constant = 16.0 * phi_rp * (d9 * a_r + c_r.value);
            reports.push(ratio_report(
                format!("czo p = {p}, r = {r}: 16 phi (D^9 A + C)"),
                constant,
                space,
                p,
                &inputs,
                |f| op.apply(space, f),
            ));
        }
        if p >= r.value() {
            let (a, c) = (a_dual.expect("computed"), c_dual.expect("computed"));
            let constant = 16.0 * phi_rp * (d9 * a + c.value);
            reports.push(ratio_report(
                format!("czo dual p = {p}, r = {r}: 16 phi (D^9 A' + C')"),
                constant,
                space,
                p,
                &inputs,
                |f| op.apply_dual(space, f),
            ));
        }
    }
    Ok(CzoCheck {
        doubling: d,
        a_r,
        c_r,
        a_r_dual: a_dual,
        c_r_dual: c_dual,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchedCheck {
    pub net: Vec<usize>,
    pub patch_sizes: Vec<usize>,
    pub doubling_r: f64,
    pub doubling: f64,
    pub a_r: f64,
    pub c_r: f64,
    pub reports: Vec<BoundReport>,
}

/// Global bound `‖T f‖_p <= 16 φ(r,p) D_R^{5/p} (D_{3κR}^9 A + C) ‖f‖_p` for a
/// kernel supported in `{d <= R/3}`, with `A`, `C` maximized over the patches
/// `E_j = B(x_j, 11R/24)` of a maximal `R/8`-separated net.
pub fn check_patched_bound(space: &MetricMeasureSpace, k: &[f64], scale: f64, config: &CzoConfig) -> Result<PatchedCheck> {
    config.validate()?;
    check_kernel(space, k)?;
    let n = space.len();
    if !(scale > 0.0) {
        return Err(precondition(format!("R must be positive, got {scale}")));
    }
    for x in 0..n {
        for y in 0..n {
            if k[x * n + y] != 0.0 && space.d(x, y) > scale / 3.0 {
                return Err(precondition(format!(
                    "kernel support too wide: K({x}, {y}) != 0 at distance {} > R/3",
                    space.d(x, y)
                )));
            }
        }
    }
    let r = config.r_exp;
    let net = separated_net(space, scale / 8.0).members;
    let patches: Vec<Vec<usize>> = net
        .iter()
        .map(|&x| space.ball_members(x, scale * 11.0 / 24.0))
        .collect::<Result<_>>()?;
    let kt = transpose(n, k);
    let direct = config.p_list.iter().any(|&p| p <= r.value());
    let dual = config.p_list.iter().any(|&p| p >= r.value());

    let per_patch: Vec<(f64, f64, f64, f64)> = patches
        .par_iter()
        .map(|e| {
            let halo = space.neighborhood(e, scale / 2.0);
            let (mut a, mut c, mut ad, mut cd) = (0.0, 0.0, 0.0, 0.0);
            if direct {
                a = block_norm_bound(space, k, e, &halo, r);
                c = hormander_on(space, k, e, &halo, scale).value;
            }
            if dual {
                ad = block_norm_bound(space, k, &halo, e, r);
                cd = hormander_on(space, &kt, e, &halo, scale).value;
            }
            (a, c, ad, cd)
        })
        .collect();
    let fold = |i: usize| {
        per_patch
            .iter()
            .map(|t| [t.0, t.1, t.2, t.3][i])
            .fold(0.0f64, f64::max)
    };
    let (mut a, c, mut ad, cd) = (fold(0), fold(1), fold(2), fold(3));
    if let Some(over) = config.a_override {
        a = over;
        ad = over;
    }

    let d_r = doubling_constant(space, scale);
    let d = doubling_constant(space, 3.0 * config.kappa * scale);
    let d9 = d.powi(9);
    let everything: Vec<usize> = (0..n).collect();
    let inputs = probes(space, &everything, config.trials, config.seed);
    let apply_all = |f: &FunctionOnSpace| apply_block(space, k, &everything, &everything, f);

    let mut reports = Vec::new();
    let mut overlap = vec![0usize; n];
    for &x in &net {
        for (y, c) in overlap.iter_mut().enumerate() {
            if space.d(x, y) < scale / 2.0 {
                *c += 1;
            }
        }
    }
    let worst_pt = (0..n).max_by_key(|&y| (overlap[y], std::cmp::Reverse(y))).unwrap_or(0);
    reports.push(BoundReport::new(
        "net overlap sum chi_B(x_j, R/2) <= D_R^5",
        d_r.powi(5),
        overlap.get(worst_pt).copied().unwrap_or(0) as f64,
        1.0,
        format!("point {worst_pt}, {} net points", net.len()),
    ));
    for &p in &config.p_list {
        let base = 16.0 * phi(r, p)? * d_r.powf(5.0 / p);
        if p <= r.value() {
            reports.push(ratio_report(
                format!("patched p = {p}, r = {r}: 16 phi D_R^(5/p) (D^9 A + C)"),
                base * (d9 * a + c),
                space,
                p,
                &inputs,
                apply_all,
            ));
        }
        if p >= r.value() {
            reports.push(ratio_report(
                format!("patched dual p = {p}, r = {r}: 16 phi D_R^(5/p) (D^9 A' + C')"),
                base * (d9 * ad + cd),
                space,
                p,
                &inputs,
                apply_all,
            ));
        }
    }
    Ok(PatchedCheck {
        patch_sizes: patches.iter().map(Vec::len).collect(),
        net,
        doubling_r: d_r,
        doubling: d,
        a_r: if direct { a } else { ad },
        c_r: if direct { c } else { cd },
        reports,
    })
}

/// Zeroes every entry with `d(x, y) > radius`.
pub fn truncate_kernel(space: &MetricMeasureSpace, k: &[f64], radius: f64) -> Vec<f64> {
    let n = space.len();
    let mut out = k.to_vec();
    for x in 0..n {
        for y in 0..n {
            if space.d(x, y) > radius {
                out[x * n + y] = 0.0;
            }
        }
    }
    out
}
