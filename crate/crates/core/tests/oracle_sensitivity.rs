use proptest::prelude::*;
use snacs_core::estimator::{exact_ami_bounds_discrete, exact_cmi_discrete, g_fn, JointPmf, PairPmf};
use snacs_core::sensitivity::{compute_sensitivity, lambda_histogram, partition_values, protected_count};
use snacs_core::{DType, Tensor, WeightKernel};

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

/// Integer weights summing to 64, so products and marginals are exact.
fn dyadic(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..20, n).prop_map(|w| {
        let total: u32 = w.iter().sum();
        let mut parts: Vec<u32> = w.iter().map(|&v| v * 64 / total).collect();
        let short = 64 - parts.iter().sum::<u32>();
        parts[0] += short;
        parts.iter().map(|&v| v as f64 / 64.0).collect()
    })
}

fn kernel(out: usize, inp: usize, area: usize) -> impl Strategy<Value = WeightKernel> {
    prop::collection::vec(-3.0f64..3.0, out * inp * area).prop_map(move |v| {
        let shape = if area == 1 { vec![out, inp] } else { vec![out, inp, area, 1] };
        WeightKernel::new(2, Tensor::new(DType::F64, shape, v).unwrap()).unwrap()
    })
}

fn any_kernel() -> impl Strategy<Value = WeightKernel> {
    (1usize..8, 1usize..8, prop_oneof![Just(1usize), Just(4), Just(9)]).prop_flat_map(|(o, i, a)| kernel(o, i, a))
}

/// lambda straight from the definition with explicit loops.
fn naive_lambda(k: &WeightKernel) -> Vec<f64> {
    let (o, n, a) = (k.out_filters(), k.in_filters(), k.area());
    let d = k.tensor().data();
    let wbar = |c: usize, i: usize| (0..a).map(|s| d[(c * n + i) * a + s].abs()).sum::<f64>() / a as f64;
    let mut lambda = vec![0.0; n];
    for c in 0..o {
        let total: f64 = (0..n).map(|p| wbar(c, p)).sum();
        if total == 0.0 {
            continue;
        }
        for (i, l) in lambda.iter_mut().enumerate() {
            *l += wbar(c, i) / total;
        }
    }
    lambda
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ami_lies_between_its_bounds(
        raw in prop::collection::vec(0.0f64..1.0, 9).prop_filter("mass", |v| v.iter().sum::<f64>() > 1e-3),
        phi in prop::collection::vec(0.0f64..2.0, 9),
    ) {
        let pmf = PairPmf::new(3, 3, normalized(raw)).unwrap();
        let b = exact_ami_bounds_discrete(&pmf, &phi).unwrap();
        prop_assert!(0.0 <= b.value && b.value <= b.upper, "{:?}", b);
        prop_assert_eq!(b.lower, 0.0);
    }

    #[test]
    fn independence_gives_exact_zero(px in dyadic(3), py in dyadic(3), phi in prop::collection::vec(0.0f64..2.0, 9)) {
        let pmf = PairPmf::independent(&px, &py).unwrap();
        prop_assert_eq!(exact_ami_bounds_discrete(&pmf, &phi).unwrap().value, 0.0);
    }

    #[test]
    fn conditional_value_is_non_negative_and_linear_in_phi(
        raw in prop::collection::vec(0.0f64..1.0, 12).prop_filter("mass", |v| v.iter().sum::<f64>() > 1e-3),
        k in 0.0f64..5.0,
    ) {
        let pmf = JointPmf::new(2, 3, 2, normalized(raw)).unwrap();
        let one = exact_cmi_discrete(&pmf, &[1.0; 12]).unwrap();
        let scaled = exact_cmi_discrete(&pmf, &[k; 12]).unwrap();
        prop_assert!(one >= 0.0);
        prop_assert!((scaled - k * one).abs() <= 1e-12 * one.max(1.0));
    }

    #[test]
    fn lambda_matches_definition_and_sums_to_rows(k in any_kernel()) {
        let s = compute_sensitivity(&k).unwrap();
        let naive = naive_lambda(&k);
        for (a, b) in s.lambda.iter().zip(&naive) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
        let expected = (k.out_filters() - s.skipped_rows.len()) as f64;
        prop_assert!((s.lambda.iter().sum::<f64>() - expected).abs() < 1e-9);
    }

    #[test]
    fn lambda_ignores_kernel_scale(k in any_kernel(), c in 1e-3f64..1e3) {
        let a = compute_sensitivity(&k).unwrap().lambda;
        let b = compute_sensitivity(&k.scaled(c).unwrap()).unwrap().lambda;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn partition_depends_only_on_order(perm in Just((0..40).collect::<Vec<i32>>()).prop_shuffle(), f in 0.0f64..0.99) {
        let values: Vec<f64> = perm.iter().map(|&v| v as f64).collect();
        let base = partition_values(&values, f).unwrap();
        let exp: Vec<f64> = values.iter().map(|v| (v / 10.0).exp()).collect();
        let affine: Vec<f64> = values.iter().map(|v| 2.0 * v + 7.0).collect();
        prop_assert_eq!(&partition_values(&exp, f).unwrap().protected, &base.protected);
        prop_assert_eq!(&partition_values(&affine, f).unwrap().protected, &base.protected);
        prop_assert_eq!(base.protected.len(), protected_count(40, f));
        let lowest_protected = base.protected.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(base.prunable.iter().all(|&i| values[i] < lowest_protected));
    }

    #[test]
    fn histogram_counts_every_value(v in prop::collection::vec(0.0f64..5.0, 1..200), bins in 1usize..30) {
        let h = lambda_histogram(&v, bins);
        prop_assert_eq!(h.len(), bins);
        prop_assert_eq!(h.iter().map(|b| b.1).sum::<usize>(), v.len());
    }
}

#[test]
fn worked_sensitivity_example() {
    let k = WeightKernel::dense(2, 2, 2, vec![3.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!(compute_sensitivity(&k).unwrap().lambda, vec![1.25, 0.75]);
}

#[test]
fn g_examples() {
    assert_eq!(g_fn(1.0).unwrap(), 0.0);
    assert_eq!(g_fn(0.0).unwrap(), 0.5);
    assert_eq!(g_fn(3.0).unwrap(), 0.5);
    assert!(g_fn(-0.1).is_err());
}

#[test]
fn protected_counts() {
    assert_eq!(protected_count(30, 0.1), 3);
    assert_eq!(protected_count(10, 0.25), 3);
    assert_eq!(protected_count(7, 0.0), 0);
}

#[test]
fn independence_from_arbitrary_marginals_is_exact_zero() {
    let px = normalized(vec![0.3, 0.7, 1.9]);
    let py = normalized(vec![0.11, 2.3, 0.45]);
    let pmf = PairPmf::independent(&px, &py).unwrap();
    assert_eq!(exact_ami_bounds_discrete(&pmf, &[1.3; 9]).unwrap().value, 0.0);
    // the same table without its factors goes through summed marginals
    let table = PairPmf::new(3, 3, pmf.p.clone()).unwrap();
    assert!(exact_ami_bounds_discrete(&table, &[1.3; 9]).unwrap().value < 1e-30);
}
