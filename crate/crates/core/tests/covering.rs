mod common;

use common::{ball, rng};
use czkit_core::covering::{vitali_cover, whitney_cover, whitney_preconditions, ESCAPE_KAPPA};
use czkit_core::space::{doubling_constant, generate_space, GeneratorKind};
use czkit_core::MetricMeasureSpace;
use proptest::prelude::*;
use rand::Rng;

fn line(n: usize) -> MetricMeasureSpace {
    generate_space(&GeneratorKind::Line { n, spacing: 1.0 }.into()).unwrap()
}

#[test]
fn vitali_on_a_line() {
    let s = line(5);
    let e: Vec<usize> = (0..5).collect();
    let v = vitali_cover(&s, &e, &[1.0; 5], 2.5).unwrap();
    assert_eq!(v.centers, vec![0, 3]);
    assert_eq!(v.disjointness_violations(&s), 0);
    assert_eq!(v.coverage_violations(&s), 0);
    // diam(E) = 4 is not below 2R = 2.
    assert!(vitali_cover(&s, &e, &[1.0; 5], 1.0).is_err());
}

#[test]
fn vitali_picks_largest_radius_first() {
    let s = line(7);
    let e: Vec<usize> = (0..7).collect();
    let radii = [0.5, 0.5, 0.5, 2.0, 0.5, 0.5, 0.5];
    let v = vitali_cover(&s, &e, &radii, 3.5).unwrap();
    assert_eq!(v.centers[0], 3);
    assert_eq!(v.steps[0].remaining_sup, 2.0);
    assert_eq!(v.certificate_violations(&s, |x| radii[x]), 0);
}

#[test]
fn whitney_preconditions_are_enforced() {
    let s = line(10);
    let all: Vec<usize> = (0..10).collect();
    assert!(whitney_cover(&s, &all, 100.0).is_err());
    assert!(whitney_cover(&s, &[], 5.0).is_err());
    // diam(U) = 4 is not below R = 4.
    assert!(whitney_preconditions(&s, &[2, 3, 4, 5, 6], 4.0).is_err());
    let w = whitney_cover(&s, &[2, 3, 4, 5, 6], 4.5).unwrap();
    assert!(w.certify(&s).iter().all(|r| r.pass));
    assert!(w.max_overlap(&s) >= 1);
}

fn instance(seed: u64, n_max: usize) -> Option<(MetricMeasureSpace, Vec<usize>, f64)> {
    let mut r = rng(seed);
    let s = common::space(&mut r, n_max);
    let n = s.len();
    let u = ball(&s, r.gen_range(0..n), common::scale(&mut r, &s, 0.3, 1.2));
    if u.len() == n {
        return None;
    }
    let exterior: Vec<usize> = (0..n).filter(|y| !u.contains(y)).collect();
    let reach = u.iter().map(|&x| s.dist_to_set(x, &exterior)).fold(0.0, f64::max);
    let scale = (s.set_diameter(&u) * 1.000001).max(reach) * r.gen_range(1.0..1.5);
    Some((s, u, scale))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn vitali_is_disjoint_and_covers(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = common::space(&mut r, 200);
        let n = s.len();
        let e = ball(&s, r.gen_range(0..n), common::scale(&mut r, &s, 0.3, 1.5));
        let diam = s.set_diameter(&e);
        let big_r = if diam > 0.0 { diam * 0.51 } else { 1.0 };
        let radii: Vec<f64> = e.iter().map(|_| big_r * r.gen_range(-4.0f64..=0.0).exp()).collect();
        let v = vitali_cover(&s, &e, &radii, big_r).unwrap();
        let mut hits = vec![0; n];
        for (&x, &rad) in v.centers.iter().zip(&v.radii) {
            for y in ball(&s, x, rad) {
                hits[y] += 1;
            }
        }
        prop_assert!(hits.iter().all(|&h| h <= 1));
        for &y in &e {
            prop_assert!(v.centers.iter().zip(&v.radii).any(|(&x, &rad)| s.d(x, y) < 3.0 * rad));
        }
        let radius_of = |x: usize| radii[e.iter().position(|&y| y == x).unwrap()];
        prop_assert_eq!(v.certificate_violations(&s, radius_of), 0);
    }

    #[test]
    fn whitney_overlap_and_escape(seed in any::<u64>()) {
        let Some((s, u, scale)) = instance(seed, 200) else { return Ok(()) };
        let w = whitney_cover(&s, &u, scale).unwrap();
        let bound = doubling_constant(&s, scale).powi(5);
        let counts = w.overlap_counts(&s);
        let exterior: Vec<usize> = (0..s.len()).filter(|y| !u.contains(y)).collect();
        for y in 0..s.len() {
            if u.contains(&y) {
                prop_assert!(counts[y] >= 1 && counts[y] as f64 <= bound);
            } else {
                prop_assert_eq!(counts[y], 0);
            }
        }
        for (&x, &rad) in w.centers.iter().zip(&w.radii) {
            prop_assert!(rad > 0.0 && rad <= scale / 2.0);
            prop_assert!(exterior.iter().any(|&z| s.d(x, z) < ESCAPE_KAPPA * rad));
        }
        prop_assert!(w.certify(&s).iter().all(|r| r.pass));
    }
}
