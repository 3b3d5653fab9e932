#![allow(dead_code)]

use czkit_core::space::{generate_space, GeneratorKind, SpaceSpec, WeightSpec};
use czkit_core::MetricMeasureSpace;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn weights(rng: &mut ChaCha8Rng) -> WeightSpec {
    if rng.gen_bool(0.5) {
        WeightSpec::Unit
    } else {
        WeightSpec::Random {
            seed: rng.gen(),
            lo: 0.2,
            hi: 3.0,
        }
    }
}

/// Random connected graph: a spanning path plus a few chords.
fn graph(rng: &mut ChaCha8Rng, n: usize) -> GeneratorKind {
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i - 1, i, rng.gen_range(0.5..2.0))).collect();
    for _ in 0..n / 3 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push((a, b, rng.gen_range(0.5..4.0)));
        }
    }
    GeneratorKind::GraphShortestPath { n, edges }
}

/// One generator family chosen by `rng`, with at most `n_max` points.
pub fn kind(rng: &mut ChaCha8Rng, n_max: usize) -> GeneratorKind {
    let n_max = n_max.max(4);
    match rng.gen_range(0..6) {
        0 => GeneratorKind::Line {
            n: rng.gen_range(2..=n_max.min(200)),
            spacing: rng.gen_range(0.5..2.0),
        },
        1 => {
            let side = ((n_max as f64).sqrt() as usize).clamp(2, 20);
            GeneratorKind::Grid {
                rows: rng.gen_range(1..=side),
                cols: rng.gen_range(2..=side),
                spacing: 1.0,
                p: if rng.gen_bool(0.5) { 1.0 } else { 2.0 },
            }
        }
        2 => {
            let top = (n_max as f64).log2().floor().clamp(1.0, 8.0) as u32;
            GeneratorKind::UltrametricDyadic {
                levels: rng.gen_range(1..=top),
                base: if rng.gen_bool(0.5) { 2.0 } else { 3.0 },
            }
        }
        3 => {
            let n = rng.gen_range(2..=n_max.min(120));
            let inner = if rng.gen_bool(0.5) {
                GeneratorKind::Line { n, spacing: 1.0 }
            } else {
                GeneratorKind::RandomPoints {
                    n,
                    dim: 2,
                    seed: rng.gen(),
                    scale: 10.0,
                }
            };
            GeneratorKind::Snowflake {
                inner: Box::new(inner),
                alpha: rng.gen_range(0.3..0.9),
            }
        }
        4 => GeneratorKind::RandomPoints {
            n: rng.gen_range(2..=n_max.min(300)),
            dim: rng.gen_range(1..=3),
            seed: rng.gen(),
            scale: 10.0,
        },
        _ => {
            let n = rng.gen_range(2..=n_max.min(60));
            graph(rng, n)
        }
    }
}

pub fn space(rng: &mut ChaCha8Rng, n_max: usize) -> MetricMeasureSpace {
    let spec = SpaceSpec {
        kind: kind(rng, n_max),
        weights: weights(rng),
    };
    generate_space(&spec).unwrap_or_else(|e| panic!("{spec:?}: {e}"))
}

/// A distance that actually occurs in the space, scaled by a random factor
/// in `[lo, hi]`.
pub fn scale(rng: &mut ChaCha8Rng, space: &MetricMeasureSpace, lo: f64, hi: f64) -> f64 {
    let crit = space.critical_distances();
    let base = if crit.is_empty() {
        1.0
    } else {
        crit[rng.gen_range(0..crit.len())]
    };
    base * rng.gen_range(lo..=hi)
}

/// Independent open-ball membership scan.
pub fn ball(space: &MetricMeasureSpace, x: usize, r: f64) -> Vec<usize> {
    (0..space.len()).filter(|&y| space.d(x, y) < r).collect()
}

pub fn mean(space: &MetricMeasureSpace, v: &[f64], set: &[usize]) -> f64 {
    let mass: f64 = set.iter().map(|&y| space.weight(y)).sum();
    set.iter().map(|&y| v[y] * space.weight(y)).sum::<f64>() / mass
}

/// Doubling constant by direct enumeration of every centre and every radius
/// at which some ball changes, for `r <= big_r`.
pub fn brute_doubling(space: &MetricMeasureSpace, big_r: f64) -> f64 {
    let n = space.len();
    let mut best: f64 = 1.0;
    for x in 0..n {
        let mut radii: Vec<f64> = (0..n).map(|y| space.d(x, y)).flat_map(|d| [d, d / 2.0]).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        for &d in &radii {
            for r in [d, d.next_up()] {
                if r > 0.0 && r <= big_r {
                    let small: f64 = ball(space, x, r).iter().map(|&y| space.weight(y)).sum();
                    let big: f64 = ball(space, x, 2.0 * r).iter().map(|&y| space.weight(y)).sum();
                    best = best.max(big / small);
                }
            }
        }
        if big_r > 0.0 {
            let small: f64 = ball(space, x, big_r).iter().map(|&y| space.weight(y)).sum();
            let big: f64 = ball(space, x, 2.0 * big_r).iter().map(|&y| space.weight(y)).sum();
            best = best.max(big / small);
        }
    }
    best
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
