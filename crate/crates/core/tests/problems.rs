mod common;

use arcs::linalg::{dot, norm};
use arcs::problems::libsvm::{parse_libsvm_str, write_libsvm};
use arcs::problems::LabeledExample;
use arcs::{FiniteSum, FiniteSumProblem};
use common::*;
use proptest::prelude::*;

fn family(kind: u8, seed: u64) -> FiniteSumProblem {
    let mut r = rng(seed);
    match kind % 3 {
        0 => random_logistic(&mut r, 6, 5),
        1 => random_quadratic(&mut r, 4, 4),
        _ => random_completion(&mut r, 3, 4),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn central_differences_match_gradients(kind in 0u8..3, seed in any::<u64>(), pick in any::<u32>()) {
        let p = family(kind, seed);
        let mut r = rng(seed ^ 0xabc);
        let x = gauss_vec(&mut r, p.dim(), 2.0);
        let i = pick as usize % p.num_components();
        let g = p.component_gradient(i, &x).unwrap();
        let h = 1e-6 * (1.0 + norm(&x));
        let mut fd = vec![0.0; x.len()];
        let mut probe = x.clone();
        for k in 0..x.len() {
            probe[k] = x[k] + h;
            let up = p.component_value(i, &probe).unwrap();
            probe[k] = x[k] - h;
            let down = p.component_value(i, &probe).unwrap();
            probe[k] = x[k];
            fd[k] = (up - down) / (2.0 * h);
        }
        let err: f64 = fd.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-5 * norm(&g).max(1.0), "err {err}, grad {g:?}");
    }

    #[test]
    fn smoothness_bounds_bregman_gap(kind in 0u8..3, seed in any::<u64>()) {
        let p = family(kind, seed);
        let l = p.smoothness();
        let mut r = rng(seed.wrapping_add(7));
        let x = gauss_vec(&mut r, p.dim(), 2.0);
        let y = gauss_vec(&mut r, p.dim(), 2.0);
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let mut mean_sq = 0.0;
        for i in 0..p.num_components() {
            let gx = p.component_gradient(i, &x).unwrap();
            let gy = p.component_gradient(i, &y).unwrap();
            let sq: f64 = gx.iter().zip(&gy).map(|(a, b)| (a - b).powi(2)).sum();
            let breg = p.component_value(i, &x).unwrap() - p.component_value(i, &y).unwrap() - dot(&gy, &d);
            prop_assert!(sq <= 2.0 * l * breg + 1e-9, "component {i}: {sq} > 2L·{breg}");
            mean_sq += sq / p.num_components() as f64;
        }
        let breg = p.value(&x).unwrap() - p.value(&y).unwrap() - dot(&p.gradient(&y).unwrap(), &d);
        prop_assert!(mean_sq <= 2.0 * l * breg + 1e-9);
    }

    #[test]
    fn value_is_mean_of_components(kind in 0u8..3, seed in any::<u64>()) {
        let p = family(kind, seed);
        let x = gauss_vec(&mut rng(seed), p.dim(), 1.0);
        let n = p.num_components();
        let mean = (0..n).map(|i| p.component_value(i, &x).unwrap()).sum::<f64>() / n as f64;
        let v = p.value(&x).unwrap();
        prop_assert!((v - mean).abs() <= 1e-12 * n as f64 * v.abs().max(1.0));
    }

    #[test]
    fn libsvm_write_then_parse_is_identity(
        rows in prop::collection::vec(
            (prop::collection::btree_map(0usize..40, -1e6f64..1e6, 0..8), 0u8..2), 1..20)
    ) {
        let examples: Vec<LabeledExample> = rows
            .into_iter()
            .map(|(m, y)| LabeledExample::new(m.into_iter().collect(), y).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_libsvm(&examples, &mut buf).unwrap();
        let (back, d) = parse_libsvm_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(&back, &examples);
        prop_assert_eq!(d, examples.iter().map(|e| e.min_dim()).max().unwrap_or(0));
        let mut again = Vec::new();
        write_libsvm(&back, &mut again).unwrap();
        prop_assert_eq!(again, buf);
    }

    #[test]
    fn libsvm_parser_never_panics(text in "[-+0-9.:e# \\t\\n]{0,80}") {
        let _ = parse_libsvm_str(&text);
    }
}
