use czkit_core::exponent::Exponent;
use czkit_core::interp::{phi, phi_base, phi_log_objective, phi_query, phi_upper_bounds, Q_MARGIN};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense scan of the log objective over the same domain, then a zoomed scan
/// around the best cell.
fn grid_oracle(r: f64, p: f64) -> f64 {
    let (lo, hi) = (1.0 + Q_MARGIN, p - Q_MARGIN);
    let scan = |a: f64, b: f64, k: usize| -> (f64, f64) {
        let mut best = (f64::INFINITY, a);
        for i in 0..=k {
            let q = a + (b - a) * i as f64 / k as f64;
            let v = phi_log_objective(r, p, q);
            if v < best.0 {
                best = (v, q);
            }
        }
        best
    };
    let (mut v, q) = scan(lo, hi, 100_000);
    let h = (hi - lo) / 100_000.0;
    let (vz, _) = scan((q - h).max(lo), (q + h).min(hi), 10_000);
    v = v.min(vz).min(phi_log_objective(r, p, p));
    v.exp()
}

#[test]
fn minimization_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let r = 1.0 + 10f64.powf(rng.gen_range(-1.5..2.5));
        let p = 1.0 + (r - 1.0) * rng.gen_range(0.01..0.99);
        let got = phi(Exponent::Finite(r), p).unwrap();
        let want = grid_oracle(r, p);
        worst = worst.max((got - want).abs() / want);
        assert!(got <= want * (1.0 + 1e-12), "r={r} p={p} got={got} oracle={want}");
    }
    assert!(worst <= 1e-9, "worst relative gap {worst}");
}

#[test]
fn closed_form_bounds_dominate() {
    let (b1, b2) = phi_upper_bounds(4.0, 2.0).unwrap();
    let v = phi(Exponent::Finite(4.0), 2.0).unwrap();
    assert!(v <= b1 * (1.0 + 1e-12) && v <= b2 * (1.0 + 1e-12));
    let (_, b2) = phi_upper_bounds(9.0, 1.5).unwrap();
    assert!(phi(Exponent::Finite(9.0), 1.5).unwrap() <= b2 * (1.0 + 1e-12));
    let (b1, b2) = phi_upper_bounds(6.0, 6.0).unwrap();
    assert!(b1 >= 1.0 && b2 >= 1.0);
}

#[test]
fn base_is_unimodal_around_sqrt_r() {
    for &r in &[1.5, 2.0, 4.0, 10.0, 100.0] {
        let s: f64 = f64::sqrt(r);
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let q = 1.0 + (s - 1.0) * i as f64 / 200.0;
            let b = phi_base(r, q);
            assert!(b <= prev && b >= 1.0);
            prev = b;
        }
        let mut prev = phi_base(r, s);
        for i in 1..200 {
            let q = s + (r - s) * i as f64 / 201.0;
            let b = phi_base(r, q);
            assert!(b >= prev);
            prev = b;
        }
    }
}

proptest! {
    #[test]
    fn phi_at_least_one(r in 1.01f64..200.0, t in 0.01f64..5.0) {
        let p = 1.0 + t * (r - 1.0) / 2.5;
        prop_assert!(phi(Exponent::Finite(r), p).unwrap() >= 1.0);
    }

    #[test]
    fn dual_formula(r in 1.1f64..50.0, t in 1.01f64..10.0) {
        let p = r * t;
        let (rd, pd) = (r / (r - 1.0), p / (p - 1.0));
        let direct = phi_query(Exponent::Finite(r), p).unwrap();
        prop_assert_eq!(direct.value, phi(Exponent::Finite(rd), pd).unwrap());
    }

    #[test]
    fn infinite_r(p in 1.001f64..1e3) {
        let want = (p / (p - 1.0)).powf(1.0 / p);
        prop_assert!((phi(Exponent::Infinite, p).unwrap() - want).abs() <= 1e-12 * want);
    }
}
