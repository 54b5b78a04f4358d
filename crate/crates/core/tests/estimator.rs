use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snacs_core::estimator::{
    build_collision_table, default_epsilon, exact_cmi_discrete, h1_quantize, h2_bucket, HashConfig, JointPmf,
};
use snacs_core::stats::median;
use snacs_core::validation::null_sample;
use snacs_core::{estimate_acmi, estimate_ami, EdgeRule, EstimatorConfig, Matrix, PhiSpec, PhiVariant};

/// Draws n iid cells of `pmf` and returns the X, Y, Z columns as category indices.
fn sample_pmf(pmf: &JointPmf, n: usize, seed: u64) -> (Matrix, Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cdf = Vec::with_capacity(pmf.p.len());
    let mut acc = 0.0;
    for &v in &pmf.p {
        acc += v;
        cdf.push(acc);
    }
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let cell = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
        x.push((cell / (pmf.ny * pmf.nz)) as f64);
        y.push((cell / pmf.nz % pmf.ny) as f64);
        z.push((cell % pmf.nz) as f64);
    }
    (Matrix::from_column(&x), Matrix::from_column(&y), Matrix::from_column(&z))
}

fn matrix(n: usize, d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-4.0f64..4.0, n * d).prop_map(move |v| Matrix::new(n, d, v).unwrap())
}

fn triple() -> impl Strategy<Value = (Matrix, Matrix, Matrix)> {
    (2usize..120, 1usize..3, 1usize..3, 0usize..3)
        .prop_flat_map(|(n, dx, dy, dz)| (matrix(n, dx), matrix(n, dy), matrix(n, dz)))
}

fn cfg(seed: u64, edges: EdgeRule) -> EstimatorConfig {
    EstimatorConfig::default().with_seed(seed).with_edges(edges)
}

fn edge_rule() -> impl Strategy<Value = EdgeRule> {
    prop_oneof![Just(EdgeRule::Completed), Just(EdgeRule::Observed)]
}

fn permuted(m: &Matrix, perm: &[usize]) -> Matrix {
    m.select_rows(perm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimate_is_non_negative_and_finite((x, y, z) in triple(), seed in any::<u64>(), edges in edge_rule()) {
        let v = estimate_acmi(&x, &y, &z, &PhiSpec::constant(), &cfg(seed, edges)).unwrap().value;
        prop_assert!(v >= 0.0 && v.is_finite(), "{}", v);
        let a = estimate_ami(&x, &y, &PhiSpec::constant(), &cfg(seed, edges)).unwrap().value;
        prop_assert!(a >= 0.0 && a.is_finite());
    }

    #[test]
    fn row_order_does_not_matter((x, y, z) in triple(), seed in any::<u64>(), shuffle in any::<u64>()) {
        let n = x.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let c = cfg(seed, EdgeRule::Completed);
        let phi = PhiSpec::new(PhiVariant::ActNorm);
        let a = estimate_acmi(&x, &y, &z, &phi, &c).unwrap().value;
        let b = estimate_acmi(&permuted(&x, &perm), &permuted(&y, &perm), &permuted(&z, &perm), &phi, &c)
            .unwrap()
            .value;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{} vs {}", a, b);
    }

    #[test]
    fn linear_in_constant_phi((x, y, z) in triple(), seed in any::<u64>(), k in 0.0f64..20.0, edges in edge_rule()) {
        let c = cfg(seed, edges);
        let base = estimate_acmi(&x, &y, &z, &PhiSpec::constant(), &c).unwrap().value;
        let scaled = estimate_acmi(&x, &y, &z, &PhiSpec::constant().scaled(k), &c).unwrap().value;
        prop_assert!((scaled - k * base).abs() <= 1e-12 * (k * base).abs(), "{} vs {}", scaled, k * base);
    }

    #[test]
    fn kernel_agrees_with_collision_table(
        (x, y, z) in triple(),
        seed in any::<u64>(),
        eps in 0.05f64..2.0,
        frac in 0.0f64..1.0,
        c_h in 1u32..6,
        edges in edge_rule(),
    ) {
        let c = EstimatorConfig {
            epsilon: Some(eps),
            b_offset: Some(frac * eps),
            c_h,
            seed,
            standardize: false,
            edges,
        };
        let est = estimate_acmi(&x, &y, &z, &PhiSpec::constant(), &c).unwrap();
        let table = build_collision_table(&x, &y, &z, &HashConfig::new(eps, frac * eps, c_h, seed).unwrap()).unwrap();
        prop_assert!(table.check_invariants().is_ok());
        let direct = table.plug_in(1.0, edges);
        prop_assert!((est.value - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{} vs {}", est.value, direct);
    }

    #[test]
    fn conditioning_on_x_itself_gives_zero(x in matrix(50, 2), y in matrix(50, 1), seed in any::<u64>()) {
        let v = estimate_acmi(&x, &y, &x, &PhiSpec::constant(), &cfg(seed, EdgeRule::Completed)).unwrap().value;
        prop_assert_eq!(v, 0.0);
    }

    #[test]
    fn quantizer_is_monotone(v in prop::collection::vec(-100.0f64..100.0, 1..20), eps in 0.01f64..5.0, frac in 0.0f64..1.0) {
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let q = h1_quantize(&sorted, eps, frac * eps).unwrap();
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn matches_discrete_oracle_on_a_dependent_pmf() {
    // Z drives both X and Y; X and Y stay dependent given Z
    let p = vec![0.20, 0.05, 0.05, 0.10, 0.05, 0.05, 0.10, 0.40];
    let pmf = JointPmf::new(2, 2, 2, p).unwrap();
    let exact = exact_cmi_discrete(&pmf, &[1.0; 8]).unwrap();
    let errors: Vec<f64> = (0..5)
        .map(|s| {
            let (x, y, z) = sample_pmf(&pmf, 50_000, 100 + s);
            let c = EstimatorConfig::default().with_epsilon(0.1).with_seed(s);
            (estimate_acmi(&x, &y, &z, &PhiSpec::constant(), &c).unwrap().value - exact).abs()
        })
        .collect();
    assert!(median(&errors) < 0.01, "exact {exact}, errors {errors:?}");
}

#[test]
fn default_epsilon_follows_sample_size() {
    assert_eq!(default_epsilon(10_000, 2), 0.1);
    assert!((default_epsilon(1_000_000, 3) - 0.1).abs() < 1e-12);
    assert_eq!(default_epsilon(1, 3), 1.0);
}

/// Pearson chi-square of distinct inputs hashed into 64 buckets. With 63
/// degrees of freedom the statistic has mean 63 and sd about 11.2.
#[test]
fn bucket_hash_is_close_to_uniform() {
    let f = 64u64;
    for seed in 0..4 {
        let mut counts = vec![0u64; f as usize];
        let n = 64_000;
        for k in 0..n as i64 {
            let b = h2_bucket(&[k, -k / 3, 7], f, seed).unwrap();
            assert!((1..=f).contains(&b));
            counts[(b - 1) as usize] += 1;
        }
        let expected = n as f64 / f as f64;
        let chi: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi < 63.0 + 5.0 * 11.2, "seed {seed}: chi-square {chi}");
    }
}

#[test]
fn null_estimates_shrink_with_more_samples() {
    let est = |n: usize| {
        let v: Vec<f64> = (0..5)
            .map(|t| {
                let (x, y, z) = null_sample(n, 1, 1, 2, 40 + t);
                let c = EstimatorConfig::default().with_epsilon(0.5).with_seed(t);
                estimate_acmi(&x, &y, &z, &PhiSpec::constant(), &c).unwrap().value
            })
            .collect();
        median(&v)
    };
    assert!(est(20_000) < est(500));
}
