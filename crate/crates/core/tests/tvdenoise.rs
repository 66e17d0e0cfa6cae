mod common;

use common::*;
use gaptv::operators::tv_norm;
use gaptv::tvdenoise::{denoise_objective, tv_denoise_slice};
use gaptv::{clip, tv_denoise, DifferenceOperator, GridShape, SignalTensor};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn clip_examples() {
    assert_eq!(clip(0.3, 0.5), 0.3);
    assert_eq!(clip(-2.0, 0.5), -0.5);
    assert_eq!(clip(0.5, 0.5), 0.5);
}

#[test]
fn matches_exact_1d_solver() {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = r.random_range(2..=16);
        let lambda = r.random_range(0.1..2.0);
        let x = normal_vec(&mut r, n);
        let d = DifferenceOperator::new(GridShape::Line(n));
        let theta = tv_denoise_slice(&x, lambda, 1000, &d).unwrap();
        let exact = condat_tv1d(&x, lambda / 2.0);
        let gap = tv1d_objective(&x, &theta, lambda / 2.0) - tv1d_objective(&x, &exact, lambda / 2.0);
        assert!((denoise_objective(&x, &theta, lambda, &d).unwrap() - tv1d_objective(&x, &theta, lambda / 2.0)).abs() < 1e-12);
        worst = worst.max(gap.abs());
    }
    assert!(worst <= 1e-6, "objective gap {worst}");
}

#[test]
fn length_8_example() {
    let x = [0.1, 0.9, 1.1, 1.0, -0.3, -0.2, 0.4, 0.35];
    let d = DifferenceOperator::new(GridShape::Line(8));
    let theta = tv_denoise_slice(&x, 0.5, 500, &d).unwrap();
    let exact = condat_tv1d(&x, 0.25);
    assert!(tv1d_objective(&x, &theta, 0.25) - tv1d_objective(&x, &exact, 0.25) <= 1e-6);
}

#[test]
fn constant_image_is_fixed() {
    let shape = GridShape::Image { rows: 6, cols: 5 };
    let x = SignalTensor::new(vec![0.42; 30], shape).unwrap();
    let out = tv_denoise(&x, 3.0, 50, &DifferenceOperator::new(shape)).unwrap();
    assert_eq!(out.data(), x.data());
}

#[test]
fn vanishing_lambda_returns_input() {
    let shape = GridShape::Volume { rows: 4, cols: 4, frames: 3 };
    let x = normal_vec(&mut rng(5), shape.len());
    let out = tv_denoise_slice(&x, 1e-12, 100, &DifferenceOperator::new(shape)).unwrap();
    assert!(max_abs_diff(&out, &x) <= 1e-8);
}

#[test]
fn strong_lambda_lowers_tv() {
    let shape = GridShape::Image { rows: 16, cols: 16 };
    let mut r = rng(8);
    let data: Vec<f64> = (0..256)
        .map(|k| if k % 16 < 8 { 0.0 } else { 100.0 } + 10.0 * r.random::<f64>())
        .collect();
    let x = SignalTensor::new(data, shape).unwrap();
    let d = DifferenceOperator::new(shape);
    let out = tv_denoise(&x, 10.0, 100, &d).unwrap();
    assert!(tv_norm(&d, &out).unwrap() < tv_norm(&d, &x).unwrap());
}

#[test]
fn rejects_bad_arguments() {
    let d = DifferenceOperator::new(GridShape::Line(4));
    assert!(tv_denoise_slice(&[0.0; 4], 0.0, 10, &d).is_err());
    assert!(tv_denoise_slice(&[0.0; 4], 1.0, 0, &d).is_err());
    assert!(tv_denoise_slice(&[0.0; 3], 1.0, 10, &d).is_err());
    assert!(tv_denoise_slice(&[0.0, f64::NAN, 0.0, 0.0], 1.0, 10, &d).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_equivariant(seed in any::<u64>(), c in -50.0f64..50.0, lambda in 0.05f64..3.0) {
        let shape = GridShape::Image { rows: 5, cols: 6 };
        let d = DifferenceOperator::new(shape);
        let x = normal_vec(&mut rng(seed), shape.len());
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = tv_denoise_slice(&x, lambda, 40, &d).unwrap();
        let b = tv_denoise_slice(&shifted, lambda, 40, &d).unwrap();
        let back: Vec<f64> = b.iter().map(|v| v - c).collect();
        prop_assert!(max_abs_diff(&a, &back) < 1e-9);
    }

    #[test]
    fn bit_deterministic(seed in any::<u64>(), lambda in 0.05f64..3.0) {
        let shape = GridShape::Volume { rows: 3, cols: 4, frames: 2 };
        let d = DifferenceOperator::new(shape);
        let x = normal_vec(&mut rng(seed), shape.len());
        let a = tv_denoise_slice(&x, lambda, 30, &d).unwrap();
        let b = tv_denoise_slice(&x, lambda, 30, &d).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn objective_not_above_input(seed in any::<u64>(), n in 2usize..40, lambda in 0.05f64..3.0) {
        let d = DifferenceOperator::new(GridShape::Line(n));
        let x = normal_vec(&mut rng(seed), n);
        let theta = tv_denoise_slice(&x, lambda, 200, &d).unwrap();
        let at_input = denoise_objective(&x, &x, lambda, &d).unwrap();
        prop_assert!(denoise_objective(&x, &theta, lambda, &d).unwrap() <= at_input + 1e-12);
    }
}
