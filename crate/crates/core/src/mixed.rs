//! Mixed-norm spaces `L^{p_1, …, p_{k+1}}(ν_1, …, ν_k, μ)` and the
//! slice-wise centred maximal operator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::exponent::Exponent;
use crate::interp::phi;
use crate::maximal::centred_of_abs;
use crate::report::{worst, BoundReport};
use crate::space::{doubling_constant, MetricMeasureSpace};

/// Dense tensor over `Y_1 × … × Y_k × X`, row-major with `X` last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormTensor {
    pub axes: Vec<usize>,
    /// One weight vector per axis; the last is `μ` on `X`.
    pub weights: Vec<Vec<f64>>,
    /// `(p_1, …, p_{k+1})`.
    pub exponents: Vec<f64>,
    pub values: Vec<f64>,
}

impl MixedNormTensor {
    pub fn new(axes: Vec<usize>, weights: Vec<Vec<f64>>, exponents: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let t = MixedNormTensor {
            axes,
            weights,
            exponents,
            values,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let k1 = self.axes.len();
        if k1 < 2 {
            return Err(invalid("a mixed-norm tensor needs at least one Y axis and the X axis"));
        }
        if self.weights.len() != k1 || self.exponents.len() != k1 {
            return Err(invalid(format!(
                "{} axes but {} weight vectors and {} exponents",
                k1,
                self.weights.len(),
                self.exponents.len()
            )));
        }
        for (j, (&len, w)) in self.axes.iter().zip(&self.weights).enumerate() {
            if len == 0 || w.len() != len {
                return Err(invalid(format!("axis {j} has size {len} but {} weights", w.len())));
            }
            if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(invalid(format!("axis {j} has a nonpositive weight")));
            }
        }
        if let Some(&p) = self.exponents.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
            return Err(invalid(format!("exponents must lie in (1, inf), got {p}")));
        }
        let total: usize = self.axes.iter().product();
        if self.values.len() != total {
            return Err(invalid(format!("{} values for shape {:?}", self.values.len(), self.axes)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tensor values must be finite"));
        }
        Ok(())
    }

    /// Number of `Y` factors.
    pub fn k(&self) -> usize {
        self.axes.len() - 1
    }

    pub fn x_len(&self) -> usize {
        *self.axes.last().expect("validated")
    }

    /// Same shape, weights and exponents with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        MixedNormTensor {
            values,
            ..self.clone()
        }
    }

    /// The `X` slice at a flattened `Y` multi-index.
    pub fn slice(&self, y: usize) -> &[f64] {
        let nx = self.x_len();
        &self.values[y * nx..(y + 1) * nx]
    }

    /// Reads `{"axes", "weights", "exponents", "values"}`; `weights` may omit
    /// the `X` axis, which then takes the point weights of `space`.
    pub fn load(path: impl AsRef<Path>, space: &MetricMeasureSpace) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut t: MixedNormTensor = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if t.weights.len() + 1 == t.axes.len() {
            t.weights.push(space.weights().to_vec());
        }
        t.validate()?;
        Ok(t)
    }
}

/// `(Σ_i w_i |v_i|^p)^{1/p}` along the leading axis of a row-major block.
fn reduce_leading(values: &[f64], len: usize, weights: &[f64], p: f64) -> Vec<f64> {
    let stride = values.len() / len;
    let mut acc = vec![0.0; stride];
    for (i, w) in weights.iter().enumerate() {
        let block = &values[i * stride..(i + 1) * stride];
        for (a, v) in acc.iter_mut().zip(block) {
            *a += w * v.abs().powf(p);
        }
    }
    acc.iter_mut().for_each(|a| *a = a.powf(1.0 / p));
    acc
}

/// Iterated norm of a block whose shape is `axes` (`p_1` on the first axis).
fn iterated(values: &[f64], axes: &[usize], weights: &[Vec<f64>], exponents: &[f64]) -> f64 {
    let mut cur = values.to_vec();
    for j in 0..axes.len() {
        cur = reduce_leading(&cur, axes[j], &weights[j], exponents[j]);
    }
    debug_assert_eq!(cur.len(), 1);
    cur[0]
}

/// Innermost-first mixed norm: `p_1` over `Y_1`, …, `p_{k+1}` over `X`.
pub fn mixed_norm(t: &MixedNormTensor) -> f64 {
    iterated(&t.values, &t.axes, &t.weights, &t.exponents)
}

/// `x ↦ ‖f(·, x)‖_{L^{p_1..p_k}}` for every `x`.
pub fn inner_norms(t: &MixedNormTensor) -> Vec<f64> {
    let k = t.k();
    let nx = t.x_len();
    let ny: usize = t.axes[..k].iter().product();
    (0..nx)
        .map(|x| {
            let mut slice: Vec<f64> = (0..ny).map(|y| t.values[y * nx + x]).collect();
            for j in 0..k {
                slice = reduce_leading(&slice, t.axes[j], &t.weights[j], t.exponents[j]);
            }
            slice[0]
        })
        .collect()
}

/// The same norm computed as the `L^{p_{k+1}}(μ)` norm of [`inner_norms`].
pub fn mixed_norm_nested(t: &MixedNormTensor) -> f64 {
    let k = t.k();
    let inner = inner_norms(t);
    reduce_leading(&inner, t.x_len(), &t.weights[k], t.exponents[k])[0]
}

/// `M̃_{2R}` applied along `X` to every `Y` slice of `|f|`.
pub fn slicewise_centred_maximal(space: &MetricMeasureSpace, t: &MixedNormTensor, r: f64) -> Result<MixedNormTensor> {
    check_x_axis(space, t)?;
    let nx = t.x_len();
    let slices: Vec<Vec<f64>> = t
        .values
        .par_chunks(nx)
        .map(|s| {
            let abs: Vec<f64> = s.iter().map(|v| v.abs()).collect();
            centred_of_abs(space, &abs, 2.0 * r)
        })
        .collect();
    Ok(t.with_values(slices.concat()))
}

fn check_x_axis(space: &MetricMeasureSpace, t: &MixedNormTensor) -> Result<()> {
    if t.x_len() != space.len() {
        return Err(invalid(format!(
            "last axis has {} entries but the space has {} points",
            t.x_len(),
            space.len()
        )));
    }
    if t.weights[t.k()] != space.weights() {
        return Err(invalid("weights on the X axis must be the point weights of the space"));
    }
    Ok(())
}

/// `(1 + 16^{k+1}) D_R^{25+16k} p_1'^{1/p_1} Π_j φ(p_j, p_{j+1})`.
pub fn mixed_maximal_constant(space: &MetricMeasureSpace, exponents: &[f64], r: f64) -> Result<f64> {
    let k = exponents.len() - 1;
    let d = doubling_constant(space, r);
    let p1 = exponents[0];
    let mut c = (1.0 + 16f64.powi(k as i32 + 1)) * d.powi(25 + 16 * k as i32) * (p1 / (p1 - 1.0)).powf(1.0 / p1);
    for j in 0..k {
        c *= phi(Exponent::Finite(exponents[j]), exponents[j + 1])?;
    }
    Ok(c)
}

/// Checks the mixed-norm maximal bound on `t` and on `trials` seeded
/// random tensors of the same shape; reports the worst ratio.
pub fn check_mixed_maximal(space: &MetricMeasureSpace, t: &MixedNormTensor, r: f64, trials: usize, seed: u64) -> Result<BoundReport> {
    check_x_axis(space, t)?;
    if !(r > 0.0) {
        return Err(precondition(format!("R must be positive, got {r}")));
    }
    let constant = mixed_maximal_constant(space, &t.exponents, r)?;
    let name = format!("mixed maximal k = {} p = {:?}", t.k(), t.exponents);
    let one = |tensor: &MixedNormTensor, label: String| -> Result<BoundReport> {
        let m = slicewise_centred_maximal(space, tensor, r)?;
        Ok(BoundReport::new(&name, constant, mixed_norm(&m), mixed_norm(tensor), label))
    };
    let mut out = Some(one(t, "input".into())?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let values: Vec<f64> = if trial % 4 == 3 {
            let mut v = vec![0.0; t.values.len()];
            let at = rng.gen_range(0..v.len());
            v[at] = 1.0;
            v
        } else {
            (0..t.values.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        out = worst(out, one(&t.with_values(values), format!("random #{trial}"))?);
    }
    Ok(out.expect("at least the input"))
}

/// `sup_x μ(B(x, 2R)) / μ(B(x, R/126)) <= D_R^8`.
pub fn check_schur_rowsum(space: &MetricMeasureSpace, r: f64) -> BoundReport {
    let d8 = doubling_constant(space, r).powi(8);
    (0..space.len())
        .map(|x| {
            BoundReport::new(
                "Schur row sum mu(B(x, 2R)) / V_(R/126)(x) <= D_R^8",
                d8,
                space.ball_measure(x, 2.0 * r),
                space.ball_measure(x, r / 126.0),
                format!("x = {x}"),
            )
        })
        .fold(None, worst)
        .expect("nonempty space")
}
