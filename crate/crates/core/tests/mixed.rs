mod common;

use common::rng;
use czkit_core::maximal::maximal_centred;
use czkit_core::mixed::{
    check_mixed_maximal, check_schur_rowsum, inner_norms, mixed_norm, mixed_norm_nested, slicewise_centred_maximal,
    MixedNormTensor,
};
use czkit_core::space::{generate_space, GeneratorKind};
use czkit_core::{FunctionOnSpace, MetricMeasureSpace};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_tensor(r: &mut ChaCha8Rng, axes: Vec<usize>, x_weights: Vec<f64>, exponents: Vec<f64>) -> MixedNormTensor {
    let mut weights: Vec<Vec<f64>> = axes[..axes.len() - 1]
        .iter()
        .map(|&len| (0..len).map(|_| r.gen_range(0.2..3.0)).collect())
        .collect();
    weights.push(x_weights);
    let total = axes.iter().product();
    let values = (0..total).map(|_| r.gen_range(-2.0..2.0)).collect();
    MixedNormTensor::new(axes, weights, exponents, values).unwrap()
}

fn random_weights(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(0.2..3.0)).collect()
}

#[test]
fn singleton_factor_is_the_plain_norm() {
    let mut r = rng(1);
    let w = random_weights(&mut r, 7);
    let v: Vec<f64> = (0..7).map(|_| r.gen_range(-1.0..1.0)).collect();
    let t = MixedNormTensor::new(vec![1, 7], vec![vec![1.0], w.clone()], vec![1.7, 3.0], v.clone()).unwrap();
    let want = v.iter().zip(&w).map(|(x, w)| x.abs().powi(3) * w).sum::<f64>().cbrt();
    assert!(common::rel_close(mixed_norm(&t), want, 1e-14));
}

#[test]
fn equal_exponents_give_the_product_norm() {
    let mut r = rng(2);
    for _ in 0..30 {
        let axes = vec![r.gen_range(1..5), r.gen_range(1..5), r.gen_range(1..8)];
        let p = r.gen_range(1.1..6.0);
        let nx = axes[2];
        let xw = random_weights(&mut r, nx);
        let t = random_tensor(&mut r, axes.clone(), xw, vec![p; 3]);
        let mut sum = 0.0;
        for a in 0..axes[0] {
            for b in 0..axes[1] {
                for x in 0..nx {
                    let w = t.weights[0][a] * t.weights[1][b] * t.weights[2][x];
                    sum += w * t.values[(a * axes[1] + b) * nx + x].abs().powf(p);
                }
            }
        }
        assert!(common::rel_close(mixed_norm(&t), sum.powf(1.0 / p), 1e-12));
    }
}

#[test]
fn shape_errors() {
    assert!(MixedNormTensor::new(vec![3], vec![vec![1.0; 3]], vec![2.0], vec![0.0; 3]).is_err());
    assert!(MixedNormTensor::new(vec![2, 3], vec![vec![1.0; 2], vec![1.0; 3]], vec![2.0, 3.0], vec![0.0; 5]).is_err());
    assert!(MixedNormTensor::new(vec![2, 3], vec![vec![1.0; 2], vec![1.0; 3]], vec![1.0, 3.0], vec![0.0; 6]).is_err());
    assert!(MixedNormTensor::new(vec![2, 3], vec![vec![1.0, 0.0], vec![1.0; 3]], vec![2.0, 3.0], vec![0.0; 6]).is_err());
    let s = generate_space(&GeneratorKind::Line { n: 4, spacing: 1.0 }.into()).unwrap();
    let t = MixedNormTensor::new(vec![2, 3], vec![vec![1.0; 2], vec![1.0; 3]], vec![2.0, 3.0], vec![0.0; 6]).unwrap();
    assert!(check_mixed_maximal(&s, &t, 1.0, 0, 0).is_err());
}

#[test]
fn zero_tensor() {
    let s = generate_space(&GeneratorKind::Line { n: 6, spacing: 1.0 }.into()).unwrap();
    let t = MixedNormTensor::new(vec![3, 6], vec![vec![1.0; 3], vec![1.0; 6]], vec![2.0, 3.0], vec![0.0; 18]).unwrap();
    assert_eq!(mixed_norm(&t), 0.0);
    assert!(check_mixed_maximal(&s, &t, 2.0, 0, 9).unwrap().pass);
}

#[test]
fn singleton_slices_match_the_scalar_maximal() {
    let mut r = rng(3);
    for _ in 0..20 {
        let s = common::space(&mut r, 60);
        let n = s.len();
        let big_r = common::scale(&mut r, &s, 0.5, 2.0);
        let t = random_tensor(&mut r, vec![1, n], s.weights().to_vec(), vec![2.0, 2.5]);
        let m = slicewise_centred_maximal(&s, &t, big_r).unwrap();
        let f = FunctionOnSpace::scalar(t.values.clone());
        assert_eq!(m.values, maximal_centred(&s, &f, 2.0 * big_r));
    }
}

#[test]
fn tensor_file_takes_space_weights() {
    let s = generate_space(&GeneratorKind::Line { n: 3, spacing: 1.0 }.into()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let text = r#"{"axes": [2, 3], "weights": [[1, 2]], "exponents": [2, 3], "values": [1, 0, 0, 0, 1, 0]}"#;
    std::fs::write(&path, text).unwrap();
    let t = MixedNormTensor::load(&path, &s).unwrap();
    assert_eq!(t.weights[1], s.weights());
    assert!(check_mixed_maximal(&s, &t, 1.0, 5, 1).unwrap().pass);
}

#[test]
fn schur_rowsum_on_random_spaces() {
    let mut r = rng(4);
    for _ in 0..100 {
        let s = common::space(&mut r, 80);
        let big_r = common::scale(&mut r, &s, 0.5, 3.0);
        let rep = check_schur_rowsum(&s, big_r);
        assert!(rep.pass, "{rep:?}");
    }
}

fn swap_y_axes(t: &MixedNormTensor) -> MixedNormTensor {
    let (a, b, nx) = (t.axes[0], t.axes[1], t.axes[2]);
    let mut values = vec![0.0; t.values.len()];
    for i in 0..a {
        for j in 0..b {
            for x in 0..nx {
                values[(j * a + i) * nx + x] = t.values[(i * b + j) * nx + x];
            }
        }
    }
    MixedNormTensor::new(
        vec![b, a, nx],
        vec![t.weights[1].clone(), t.weights[0].clone(), t.weights[2].clone()],
        vec![t.exponents[1], t.exponents[0], t.exponents[2]],
        values,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nested_equals_iterated(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=3);
        let mut axes: Vec<usize> = (0..k).map(|_| r.gen_range(1..5)).collect();
        axes.push(r.gen_range(1..10));
        let xw = random_weights(&mut r, axes[k]);
        let exps = (0..=k).map(|_| r.gen_range(1.05..8.0)).collect();
        let t = random_tensor(&mut r, axes, xw, exps);
        prop_assert_eq!(mixed_norm(&t), mixed_norm_nested(&t));
        prop_assert_eq!(inner_norms(&t).len(), t.x_len());
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let axes = vec![r.gen_range(1..5), r.gen_range(1..5), r.gen_range(1..9)];
        let xw = random_weights(&mut r, axes[2]);
        let exps = vec![r.gen_range(1.05..8.0), r.gen_range(1.05..8.0), r.gen_range(1.05..8.0)];
        let t = random_tensor(&mut r, axes.clone(), xw.clone(), exps.clone());
        let u = t.with_values(random_tensor(&mut r, axes, xw, exps).values);
        let c = r.gen_range(-3.0..3.0);
        let sum = t.with_values(t.values.iter().zip(&u.values).map(|(a, b)| a + b).collect());
        let scaled = t.with_values(t.values.iter().map(|a| c * a).collect());
        prop_assert!(mixed_norm(&sum) <= (mixed_norm(&t) + mixed_norm(&u)) * (1.0 + 1e-12));
        prop_assert!(common::rel_close(mixed_norm(&scaled), c.abs() * mixed_norm(&t), 1e-12));
    }

    #[test]
    fn slicewise_maximal_commutes_with_y_permutations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s: MetricMeasureSpace = common::space(&mut r, 40);
        let big_r = common::scale(&mut r, &s, 0.5, 2.0);
        let axes = vec![r.gen_range(1..4), r.gen_range(1..4), s.len()];
        let t = random_tensor(&mut r, axes, s.weights().to_vec(), vec![2.0, 3.0, 1.5]);
        let a = swap_y_axes(&slicewise_centred_maximal(&s, &t, big_r).unwrap());
        let b = slicewise_centred_maximal(&s, &swap_y_axes(&t), big_r).unwrap();
        prop_assert_eq!(a, b);
    }
}
