//! Vitali-type and Whitney-type coverings.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::report::BoundReport;
use crate::space::{doubling_constant, MetricMeasureSpace};

/// Dilation used when certifying the escape property `B(x, κ r(x)) ⊄ U`.
pub const ESCAPE_KAPPA: f64 = 2.0 + 1.0 / 1048576.0;

/// Audit record of one greedy selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub chosen: usize,
    pub radius: f64,
    /// `max { r(y) : y ∈ E_j }` over the points still uncovered at this step.
    pub remaining_sup: f64,
    pub remaining: usize,
}

/// Disjoint balls `B(x, r(x))` whose triples cover the target set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitaliCover {
    /// Centres in selection order.
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
    pub target: Vec<usize>,
    pub steps: Vec<GreedyStep>,
}

fn normalized(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

/// Greedy Vitali selection on `E` with radius function `radius[i] = r(E[i])`.
///
/// Each step picks, among the points not yet covered by a chosen `3r`-ball,
/// one with the largest radius (lowest index on ties).
pub fn vitali_cover(
    space: &MetricMeasureSpace,
    set: &[usize],
    radius: &[f64],
    r_bound: f64,
) -> Result<VitaliCover> {
    space.check_indices(set)?;
    if set.is_empty() {
        return Err(precondition("Vitali cover needs a nonempty set"));
    }
    if radius.len() != set.len() {
        return Err(precondition(format!(
            "{} radii supplied for a set of {} points",
            radius.len(),
            set.len()
        )));
    }
    if !(r_bound > 0.0) {
        return Err(precondition(format!("radius bound must be positive, got {r_bound}")));
    }
    let mut pairs: Vec<(usize, f64)> = set.iter().copied().zip(radius.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    for w in pairs.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
            return Err(precondition(format!("point {} given two different radii", w[0].0)));
        }
    }
    pairs.dedup_by_key(|p| p.0);
    if let Some(&(x, r)) = pairs.iter().find(|(_, r)| !(*r > 0.0 && *r <= r_bound)) {
        return Err(precondition(format!("r({x}) = {r} lies outside (0, {r_bound}]")));
    }
    let target: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let diam = space.set_diameter(&target);
    if !(diam < 2.0 * r_bound) {
        return Err(precondition(format!(
            "diam(E) = {diam} must be below 2R = {}",
            2.0 * r_bound
        )));
    }

    let mut alive = vec![true; pairs.len()];
    let mut remaining = pairs.len();
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    let mut steps = Vec::new();
    while remaining > 0 {
        let mut best: Option<(usize, f64)> = None;
        for (k, &(_, r)) in pairs.iter().enumerate() {
            if alive[k] && best.map_or(true, |(_, br)| r > br) {
                best = Some((k, r));
            }
        }
        let (k, r) = best.expect("a remaining point exists");
        let x = pairs[k].0;
        steps.push(GreedyStep {
            chosen: x,
            radius: r,
            remaining_sup: r,
            remaining,
        });
        let reach = 3.0 * r;
        for (m, &(y, _)) in pairs.iter().enumerate() {
            if alive[m] && space.d(x, y) < reach {
                alive[m] = false;
                remaining -= 1;
            }
        }
        centers.push(x);
        radii.push(r);
    }
    Ok(VitaliCover {
        centers,
        radii,
        target,
        steps,
    })
}

impl VitaliCover {
    /// Number of point pairs lying in two distinct selected balls.
    pub fn disjointness_violations(&self, space: &MetricMeasureSpace) -> usize {
        overlapping_pairs(space, &self.centers, &self.radii)
    }

    /// Points of the target not covered by any `B(x, 3r(x))`.
    pub fn coverage_violations(&self, space: &MetricMeasureSpace) -> usize {
        self.target
            .iter()
            .filter(|&&y| {
                !self
                    .centers
                    .iter()
                    .zip(&self.radii)
                    .any(|(&x, &r)| space.d(x, y) < 3.0 * r)
            })
            .count()
    }

    /// Replays the greedy and counts steps where the chosen radius fell
    /// below the supremum of `r` over the points still uncovered.
    pub fn certificate_violations(&self, space: &MetricMeasureSpace, radius_of: impl Fn(usize) -> f64) -> usize {
        let mut uncovered: Vec<usize> = self.target.clone();
        let mut bad = 0;
        for (step, (&x, &r)) in self.steps.iter().zip(self.centers.iter().zip(&self.radii)) {
            let sup = uncovered.iter().map(|&y| radius_of(y)).fold(0.0, f64::max);
            if r < sup || step.remaining_sup != sup || !uncovered.contains(&x) {
                bad += 1;
            }
            uncovered.retain(|&y| !(space.d(x, y) < 3.0 * r));
        }
        bad + uncovered.len()
    }
}

fn overlapping_pairs(space: &MetricMeasureSpace, centers: &[usize], radii: &[f64]) -> usize {
    let mut bad = 0;
    for y in 0..space.len() {
        let hits = centers
            .iter()
            .zip(radii)
            .filter(|(&x, &r)| space.d(x, y) < r)
            .count();
        if hits > 1 {
            bad += hits - 1;
        }
    }
    bad
}

/// Whitney-type covering of a proper subset `U` by balls with radii
/// `r(x) = d(x, X ∖ U) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCover {
    pub centers: Vec<usize>,
    /// `r(x) = d(x, X ∖ U) / 2`, three times `inner_radii` up to rounding.
    pub radii: Vec<f64>,
    /// `r'(x) = d(x, X ∖ U) / 6`, the radii of the pairwise disjoint balls.
    pub inner_radii: Vec<f64>,
    pub target: Vec<usize>,
    pub scale: f64,
    pub doubling: f64,
    /// `D_R^5`.
    pub overlap_bound: f64,
}

/// Checks the preconditions of [`whitney_cover`] without building it.
pub fn whitney_preconditions(space: &MetricMeasureSpace, set: &[usize], scale: f64) -> Result<Vec<usize>> {
    space.check_indices(set)?;
    let u = normalized(set);
    if u.is_empty() {
        return Err(precondition("Whitney cover needs a nonempty set"));
    }
    if u.len() == space.len() {
        return Err(precondition("Whitney cover needs a proper subset (U = X has no exterior)"));
    }
    if !(scale > 0.0) {
        return Err(precondition(format!("scale must be positive, got {scale}")));
    }
    let diam = space.set_diameter(&u);
    if !(diam < scale) {
        return Err(precondition(format!("diam(U) = {diam} must be below R = {scale}")));
    }
    let exterior = complement(space.len(), &u);
    if let Some(&x) = u.iter().find(|&&x| !(space.dist_to_set(x, &exterior) <= scale)) {
        return Err(precondition(format!(
            "boundary condition fails at {x}: d(x, X \\ U) = {} > R = {scale}",
            space.dist_to_set(x, &exterior)
        )));
    }
    Ok(u)
}

pub(crate) fn complement(n: usize, sorted: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| sorted.binary_search(i).is_err()).collect()
}

/// Whitney-type covering of `U` at scale `R`.
pub fn whitney_cover(space: &MetricMeasureSpace, set: &[usize], scale: f64) -> Result<WhitneyCover> {
    let u = whitney_preconditions(space, set, scale)?;
    let exterior = complement(space.len(), &u);
    let inner: Vec<f64> = u
        .iter()
        .map(|&x| space.dist_to_set(x, &exterior) / 6.0)
        .collect();
    let vitali = vitali_cover(space, &u, &inner, scale)?;
    // d/2 directly: 3 (d/6) can round one ulp past R/2.
    let radii = vitali
        .centers
        .iter()
        .map(|&x| space.dist_to_set(x, &exterior) / 2.0)
        .collect();
    let doubling = doubling_constant(space, scale);
    Ok(WhitneyCover {
        centers: vitali.centers,
        radii,
        inner_radii: vitali.radii,
        target: u,
        scale,
        doubling,
        overlap_bound: doubling.powi(5),
    })
}

impl WhitneyCover {
    /// `Σ_x χ_{B(x, r(x))}(y)` for every point `y`.
    pub fn overlap_counts(&self, space: &MetricMeasureSpace) -> Vec<usize> {
        (0..space.len())
            .map(|y| {
                self.centers
                    .iter()
                    .zip(&self.radii)
                    .filter(|(&x, &r)| space.d(x, y) < r)
                    .count()
            })
            .collect()
    }

    pub fn max_overlap(&self, space: &MetricMeasureSpace) -> usize {
        self.overlap_counts(space).into_iter().max().unwrap_or(0)
    }

    /// Every conclusion of the covering, one report each.
    pub fn certify(&self, space: &MetricMeasureSpace) -> Vec<BoundReport> {
        let counts = self.overlap_counts(space);
        let inside = |y: usize| self.target.binary_search(&y).is_ok();

        let uncovered = (0..space.len()).filter(|&y| inside(y) && counts[y] == 0).count();
        let leaked = (0..space.len()).filter(|&y| !inside(y) && counts[y] > 0).count();
        let worst = self
            .target
            .iter()
            .copied()
            .max_by_key(|&y| (counts[y], std::cmp::Reverse(y)))
            .unwrap_or(0);
        let overlap = BoundReport::new(
            "whitney overlap <= D_R^5",
            self.overlap_bound,
            counts[worst] as f64,
            1.0,
            format!("point {worst}"),
        )
        .and(uncovered == 0, &format!("{uncovered} points of U uncovered"))
        .and(leaked == 0, &format!("{leaked} points outside U covered"));

        let disjoint = overlapping_pairs(space, &self.centers, &self.inner_radii);
        let exterior = complement(space.len(), &self.target);
        let no_escape: Vec<usize> = self
            .centers
            .iter()
            .zip(&self.radii)
            .filter(|(&x, &r)| !exterior.iter().any(|&z| space.d(x, z) < ESCAPE_KAPPA * r))
            .map(|(&x, _)| x)
            .collect();
        let out_of_range = self
            .radii
            .iter()
            .filter(|&&r| !(r > 0.0 && r <= self.scale / 2.0))
            .count();

        vec![
            overlap,
            BoundReport::assertion("whitney third-balls disjoint", disjoint, ""),
            BoundReport::assertion(
                "whitney escape at kappa = 2 + 2^-20",
                no_escape.len(),
                format!("{no_escape:?}"),
            ),
            BoundReport::assertion("whitney radii in (0, R/2]", out_of_range, ""),
        ]
    }
}
