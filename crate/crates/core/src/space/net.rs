use serde::{Deserialize, Serialize};

use super::MetricMeasureSpace;

/// A maximal `delta`-separated family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedNet {
    pub delta: f64,
    pub members: Vec<usize>,
}

/// Greedy maximal `delta`-separated net, scanning points in index order.
///
/// Members are pairwise at distance `>= delta`, and every point is at
/// distance `< delta` from some member.
pub fn separated_net(space: &MetricMeasureSpace, delta: f64) -> SeparatedNet {
    assert!(delta > 0.0, "separation must be positive");
    let mut members: Vec<usize> = Vec::new();
    for x in 0..space.len() {
        if members.iter().all(|&m| space.d(x, m) >= delta) {
            members.push(x);
        }
    }
    SeparatedNet { delta, members }
}

impl SeparatedNet {
    /// Checks separation and maximality; returns the number of violations.
    pub fn violations(&self, space: &MetricMeasureSpace) -> usize {
        let mut bad = 0;
        for (a, &i) in self.members.iter().enumerate() {
            for &j in &self.members[a + 1..] {
                if space.d(i, j) < self.delta {
                    bad += 1;
                }
            }
        }
        for x in 0..space.len() {
            if !self.members.iter().any(|&m| space.d(x, m) < self.delta) {
                bad += 1;
            }
        }
        bad
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
    fn greedy_trace_on_line() {
        let s = line(5);
        assert_eq!(separated_net(&s, 2.0).members, vec![0, 2, 4]);
        assert_eq!(separated_net(&s, 1.0).members, vec![0, 1, 2, 3, 4]);
        assert_eq!(separated_net(&s, 4.5).members, vec![0]);
        assert_eq!(separated_net(&s, 2.0).violations(&s), 0);
    }
}
