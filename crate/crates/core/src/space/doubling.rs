//! Exact doubling constants.
//!
//! For a fixed centre, `r ↦ μ(B(x, 2r)) / μ(B(x, r))` is a step function whose
//! steps are of the form `(a, c]` with endpoints in `{d, d/2}` for the
//! distances `d` from `x`. Evaluating each step at its right endpoint gives
//! the supremum over any radius range exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MetricMeasureSpace, RadialProfile};

/// `R ↦ D_R` as an exact piecewise-constant function on `(0, r_max]`.
///
/// `values[k]` is `D_R` for `R` in `(breakpoints[k - 1], breakpoints[k]]`,
/// with `breakpoints[-1] = 0` and the last piece extending to `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingProfile {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub r_max: f64,
    /// Always true on finite spaces with positive weights; kept so callers
    /// never have to assume it.
    pub exact: bool,
}

impl DoublingProfile {
    /// `D_R`, or `None` when `R` lies outside `(0, r_max]`.
    pub fn value_at(&self, r: f64) -> Option<f64> {
        if !(r > 0.0 && r <= self.r_max) {
            return None;
        }
        Some(self.values[self.breakpoints.partition_point(|&b| b < r)])
    }

    /// Pieces as `(lo, hi, value)` triples covering `(0, r_max]`.
    pub fn pieces(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut lo = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            let hi = self.breakpoints.get(k).copied().unwrap_or(self.r_max);
            out.push((lo, hi, v));
            lo = hi;
        }
        out
    }
}

/// `(a, v)`: the ratio equals `v` on a step `(a, c]`, so `D_R >= v` iff `R > a`.
fn centre_events(profile: &RadialProfile, r_limit: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = profile
        .radii
        .iter()
        .skip(1)
        .flat_map(|&d| [d, d * 0.5])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut events = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0.0;
    for &c in &cuts {
        if !(lo < r_limit) {
            break;
        }
        let ratio = profile.measure(2.0 * c) / profile.measure(c);
        events.push((lo, ratio));
        lo = c;
    }
    if lo < r_limit {
        // Beyond the largest cut both balls are the whole space.
        events.push((lo, 1.0));
    }
    events
}

/// Exact `D_R = sup { μ(B(x,2r)) / μ(B(x,r)) : x ∈ X, r ∈ (0, R] }`, at least 1.
pub fn doubling_constant(space: &MetricMeasureSpace, r: f64) -> f64 {
    assert!(r > 0.0, "doubling radius must be positive");
    let per_centre: Vec<f64> = (0..space.len())
        .into_par_iter()
        .map(|x| {
            centre_events(&space.radial_profile(x), r)
                .into_iter()
                .map(|(_, v)| v)
                .fold(1.0, f64::max)
        })
        .collect();
    per_centre.into_iter().fold(1.0, f64::max)
}

/// Exact doubling profile on `(0, r_max]`.
pub fn doubling_profile(space: &MetricMeasureSpace, r_max: f64) -> DoublingProfile {
    assert!(r_max > 0.0, "profile radius must be positive");
    let mut events: Vec<(f64, f64)> = (0..space.len())
        .into_par_iter()
        .flat_map_iter(|x| centre_events(&space.radial_profile(x), r_max))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut breakpoints = Vec::new();
    let mut values = vec![1.0];
    let mut current = 1.0;
    for (a, v) in events {
        if v > current {
            current = v;
            if a == 0.0 {
                values[0] = v;
            } else if breakpoints.last() == Some(&a) {
                *values.last_mut().unwrap() = v;
            } else {
                breakpoints.push(a);
                values.push(v);
            }
        }
    }
    DoublingProfile {
        breakpoints,
        values,
        r_max,
        exact: current.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> MetricMeasureSpace {
        let dist = (0..n)
            .map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect())
            .collect();
        MetricMeasureSpace::new(dist, vec![1.0; n]).unwrap()
    }

    #[test]
    fn two_point_space() {
        let s = line(2);
        assert_eq!(doubling_constant(&s, 1.0), 2.0);
        assert_eq!(doubling_constant(&s, 0.5), 1.0);
        let p = doubling_profile(&s, 4.0);
        assert_eq!(p.breakpoints, vec![0.5]);
        assert_eq!(p.values, vec![1.0, 2.0]);
        assert!(p.exact);
    }

    #[test]
    fn unit_line() {
        assert_eq!(doubling_constant(&line(5), 1.0), 3.0);
    }

    #[test]
    fn single_point() {
        let s = line(1);
        assert_eq!(doubling_constant(&s, 3.0), 1.0);
        let p = doubling_profile(&s, 3.0);
        assert!(p.breakpoints.is_empty());
        assert_eq!(p.values, vec![1.0]);
    }

    #[test]
    fn profile_agrees_with_direct_queries() {
        let s = line(7);
        let p = doubling_profile(&s, 8.0);
        for k in 1..=160 {
            let r = k as f64 * 0.05;
            assert_eq!(p.value_at(r), Some(doubling_constant(&s, r)), "R = {r}");
        }
        assert_eq!(p.value_at(9.0), None);
    }
}
