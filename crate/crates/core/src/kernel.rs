//! Smooth normalized kernels `S_r` and the averaging operators `T_r`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::function::FunctionOnSpace;
use crate::report::{worst, BoundReport};
use crate::space::{doubling_constant, MetricMeasureSpace};

/// Relative tolerance for the weighted row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Cubic smoothstep falling from 1 at `t = 1` to 0 at `t = η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub eta: f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile { eta: 7.0 / 6.0 }
    }
}

impl BumpProfile {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 1.0 && eta <= 7.0 / 6.0 {
            Ok(BumpProfile { eta })
        } else {
            Err(invalid(format!("eta must lie in (1, 7/6], got {eta}")))
        }
    }

    #[inline]
    pub fn h(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= self.eta {
            0.0
        } else {
            let s = (t - 1.0) / (self.eta - 1.0);
            1.0 - s * s * (3.0 - 2.0 * s)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 1.0 || t >= self.eta {
            0.0
        } else {
            let s = (t - 1.0) / (self.eta - 1.0);
            -6.0 * s * (1.0 - s) / (self.eta - 1.0)
        }
    }

    /// `‖h'‖_∞`, attained at the midpoint of `[1, η]`.
    pub fn lipschitz_bound(&self) -> f64 {
        1.5 / (self.eta - 1.0)
    }
}

fn bump_matrix(space: &MetricMeasureSpace, profile: &BumpProfile, r: f64) -> Vec<Vec<(usize, f64)>> {
    (0..space.len())
        .into_par_iter()
        .map(|x| {
            space
                .row(x)
                .iter()
                .enumerate()
                .filter_map(|(y, &d)| {
                    let v = profile.h(d / r);
                    (v > 0.0).then_some((y, v))
                })
                .collect()
        })
        .collect()
}

fn apply_rows(rows: &[Vec<(usize, f64)>], space: &MetricMeasureSpace, v: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|row| row.iter().map(|&(y, h)| h * v[y] * space.weight(y)).sum())
        .collect()
}

/// `(T_r f)(x) = Σ_y h(d(x,y)/r) f(y) μ{y}`, coordinatewise.
pub fn t_r_apply(space: &MetricMeasureSpace, profile: &BumpProfile, r: f64, f: &FunctionOnSpace) -> Result<FunctionOnSpace> {
    f.check_space(space)?;
    if !(r > 0.0) {
        return Err(precondition(format!("r must be positive, got {r}")));
    }
    let rows = bump_matrix(space, profile, r);
    let mut out = FunctionOnSpace::zeros(space.len(), f.dim()).with_norm(f.norm_kind());
    for (x, row) in rows.iter().enumerate() {
        let target = out.row_mut(x);
        for &(y, h) in row {
            let c = h * space.weight(y);
            for (t, v) in target.iter_mut().zip(f.row(y)) {
                *t += c * v;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothKernel {
    pub r: f64,
    /// Upper end `R` of the admissible scales.
    pub scale: f64,
    pub eta: f64,
    pub n: usize,
    /// Row-major `S_r(x, y)`.
    pub s: Vec<f64>,
    pub v_r: Vec<f64>,
    pub v_eta_r: Vec<f64>,
    pub t_r1: Vec<f64>,
    /// `D_{4R}`.
    pub doubling: f64,
    pub empirical_c6: f64,
    /// Built by the tiny-scale shortcut `S = diag(1/μ{x})`.
    pub identity: bool,
}

/// Builds `S_r` for `r ∈ (0, R]`.
pub fn build_kernel(space: &MetricMeasureSpace, profile: &BumpProfile, r: f64, big_r: f64) -> Result<SmoothKernel> {
    if !(r > 0.0 && r <= big_r) {
        return Err(precondition(format!("kernel scale r = {r} must lie in (0, R = {big_r}]")));
    }
    let n = space.len();
    let doubling = doubling_constant(space, 4.0 * big_r);
    let v_r: Vec<f64> = (0..n).map(|x| space.ball_measure(x, r)).collect();
    let v_eta_r: Vec<f64> = (0..n).map(|x| space.ball_measure(x, profile.eta * r)).collect();
    let isolated = space.min_distance().map_or(true, |m| m / r >= profile.eta);

    let (s, t_r1) = if isolated {
        let mut s = vec![0.0; n * n];
        for x in 0..n {
            s[x * n + x] = 1.0 / space.weight(x);
        }
        (s, space.weights().to_vec())
    } else {
        let rows = bump_matrix(space, profile, r);
        let p = apply_rows(&rows, space, &vec![1.0; n]);
        let inv_p: Vec<f64> = p.iter().map(|v| 1.0 / v).collect();
        let q = apply_rows(&rows, space, &inv_p);
        let c: Vec<f64> = (0..n).map(|z| space.weight(z) / q[z]).collect();

        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|x| {
                let mut acc = vec![0.0; n];
                for &(z, hxz) in &rows[x] {
                    let a = hxz * c[z];
                    for &(y, hzy) in &rows[z] {
                        if y >= x {
                            acc[y] += a * hzy;
                        }
                    }
                }
                for (y, v) in acc.iter_mut().enumerate().skip(x) {
                    *v /= p[x] * p[y];
                }
                acc
            })
            .collect();
        let mut s = vec![0.0; n * n];
        for x in 0..n {
            for y in x..n {
                s[x * n + y] = upper[x][y];
                s[y * n + x] = upper[x][y];
            }
        }
        (s, p)
    };

    let mut kernel = SmoothKernel {
        r,
        scale: big_r,
        eta: profile.eta,
        n,
        s,
        v_r,
        v_eta_r,
        t_r1,
        doubling,
        empirical_c6: 0.0,
        identity: isolated,
    };
    kernel.empirical_c6 = kernel.lipschitz_sup(space).0;
    Ok(kernel)
}

impl SmoothKernel {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.s[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.s[x * self.n..(x + 1) * self.n]
    }

    /// `Σ_y S_r(x, y) f(y) μ{y}`.
    pub fn apply(&self, space: &MetricMeasureSpace, f: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|x| self.row(x).iter().zip(f).zip(space.weights()).map(|((s, v), w)| s * v * w).sum())
            .collect()
    }

    /// Sup of the normalized Lipschitz quotient with its witness `(x, x', y)`.
    fn lipschitz_sup(&self, space: &MetricMeasureSpace) -> (f64, (usize, usize, usize)) {
        let n = self.n;
        let d8 = self.doubling.powi(8);
        (0..n)
            .into_par_iter()
            .map(|x| {
                let mut best = (0.0f64, (x, x, x));
                for x2 in (0..n).filter(|&x2| x2 != x) {
                    let vmin = self.v_r[x].min(self.v_r[x2]);
                    let scale = self.r / (d8 * space.d(x, x2));
                    for y in 0..n {
                        let diff = (self.get(x, y) - self.get(x2, y)).abs();
                        if diff > 0.0 {
                            let q = diff * scale * (vmin + self.v_r[y]);
                            if q > best.0 {
                                best = (q, (x, x2, y));
                            }
                        }
                    }
                }
                best
            })
            .reduce(|| (0.0, (0, 0, 0)), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    }

    /// Reports for support, symmetry, row sums, lower and upper bounds,
    /// positivity, the `T_r` sandwich, and the empirical Lipschitz constant.
    pub fn certify(&self, space: &MetricMeasureSpace) -> Vec<BoundReport> {
        let n = self.n;
        let d = self.doubling;
        let (mut wide3, mut wide2eta, mut asym, mut negative) = (0usize, 0usize, 0usize, 0usize);
        for x in 0..n {
            for y in 0..n {
                let s = self.get(x, y);
                let dist = space.d(x, y);
                if s != 0.0 && dist >= 3.0 * self.r {
                    wide3 += 1;
                }
                if s != 0.0 && dist >= 2.0 * self.eta * self.r {
                    wide2eta += 1;
                }
                if s != self.get(y, x) {
                    asym += 1;
                }
                if s < 0.0 {
                    negative += 1;
                }
            }
        }
        let support = BoundReport::assertion("kernel (1) S_r = 0 for d >= 3r", wide3, format!("r = {}", self.r))
            .and(wide2eta == 0, &format!("{wide2eta} entries beyond 2 eta r"));

        let mut rows: Option<BoundReport> = None;
        let mut lower: Option<BoundReport> = None;
        let mut upper: Option<BoundReport> = None;
        for x in 0..n {
            let sum: f64 = self.row(x).iter().zip(space.weights()).map(|(s, w)| s * w).sum();
            rows = worst(
                rows,
                BoundReport::new("kernel (3) weighted row sums = 1", ROW_SUM_TOLERANCE, (sum - 1.0).abs(), 1.0, format!("x = {x}")),
            );
            for y in 0..n {
                let s = self.get(x, y);
                if space.d(x, y) < self.r / 2.0 {
                    lower = worst(
                        lower,
                        BoundReport::new(
                            "kernel (4) S_r >= 1/(D_4R^5 min V_r) for d < r/2",
                            d.powi(5),
                            1.0 / self.v_r[x].min(self.v_r[y]),
                            s,
                            format!("(x, y) = ({x}, {y})"),
                        ),
                    );
                }
                upper = worst(
                    upper,
                    BoundReport::new(
                        "kernel (5) S_r <= 2 D_4R^2/(V_r(x) + V_r(y))",
                        2.0 * d * d,
                        s,
                        1.0 / (self.v_r[x] + self.v_r[y]),
                        format!("(x, y) = ({x}, {y})"),
                    ),
                );
            }
        }

        let mut sandwich = 0usize;
        for x in 0..n {
            let t = self.t_r1[x];
            if t < self.v_r[x] * (1.0 - ROW_SUM_TOLERANCE) || t > self.v_eta_r[x] * (1.0 + ROW_SUM_TOLERANCE) {
                sandwich += 1;
            }
        }

        let (c6, (x, x2, y)) = self.lipschitz_sup(space);
        vec![
            support,
            BoundReport::assertion("kernel (2) symmetry", asym, ""),
            rows.expect("nonempty space"),
            lower.expect("d(x, x) = 0 < r/2"),
            upper.expect("nonempty space"),
            BoundReport::assertion("kernel positivity", negative, ""),
            BoundReport::assertion("T_r sandwich V_r <= T_r 1 <= V_eta r", sandwich, ""),
            BoundReport::new(
                "kernel (6) empirical Lipschitz constant (reported)",
                f64::INFINITY,
                c6,
                1.0,
                format!("(x, x', y) = ({x}, {x2}, {y})"),
            ),
        ]
    }

    /// Headerless `n × n` CSV.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_matrix_csv(path, self.n, &self.s)
    }
}

pub(crate) fn write_matrix_csv(path: impl AsRef<Path>, n: usize, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for x in 0..n {
        let line: Vec<String> = values[x * n..(x + 1) * n].iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// First `j` with `3 · 2^{-j} R' <= min distance`; from there on every
/// kernel is the normalized identity.
pub fn auto_j_max(space: &MetricMeasureSpace, r_prime: f64) -> usize {
    let Some(m) = space.min_distance() else {
        return 0;
    };
    let mut j = 0;
    while 3.0 * r_prime / 2f64.powi(j as i32) > m && j < 1024 {
        j += 1;
    }
    j
}

/// Kernels at scales `2^{-j} R'`, `j = 0..=j_max`.
pub fn kernel_family(
    space: &MetricMeasureSpace,
    profile: &BumpProfile,
    r_prime: f64,
    j_max: Option<usize>,
) -> Result<Vec<SmoothKernel>> {
    if !(r_prime > 0.0) {
        return Err(precondition(format!("R' must be positive, got {r_prime}")));
    }
    let j_max = j_max.unwrap_or_else(|| auto_j_max(space, r_prime));
    (0..=j_max)
        .map(|j| build_kernel(space, profile, r_prime / 2f64.powi(j as i32), r_prime))
        .collect()
}

/// `⨍_{B(x, r_j/2)} |f| <= D_{4R'}^6 Σ_y S_{r_j}(x, y) |f(y)| μ{y}` for every
/// kernel of the family and every point.
pub fn check_family_majorization(space: &MetricMeasureSpace, family: &[SmoothKernel], f: &FunctionOnSpace) -> Result<BoundReport> {
    f.check_space(space)?;
    let abs = f.abs();
    let mut out: Option<BoundReport> = None;
    for (j, k) in family.iter().enumerate() {
        let smoothed = k.apply(space, &abs);
        let d6 = k.doubling.powi(6);
        for x in 0..space.len() {
            let ball = space.ball_members(x, k.r / 2.0)?;
            let avg: f64 = {
                let total: f64 = ball.iter().map(|&y| space.weight(y)).sum();
                ball.iter().map(|&y| abs[y] * space.weight(y) / total).sum()
            };
            out = worst(
                out,
                BoundReport::new(
                    "ball averages <= D_4R'^6 S_r-averages",
                    d6,
                    avg,
                    smoothed[x],
                    format!("j = {j}, x = {x}"),
                ),
            );
        }
    }
    out.ok_or_else(|| invalid("empty kernel family"))
}
