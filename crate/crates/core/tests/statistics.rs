//! Seeded statistical checks of the samplers and the random pivot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use protoset::coreset::{self, CostMode};
use protoset::harness::data::gaussian_instance;
use protoset::matching::{exact_cost, Metric};
use protoset::prototype::{self, SolverConfig};

/// Upper 0.1% quantile of the chi-square distribution with 9 degrees of freedom.
const CHI2_9_999: f64 = 27.877;

#[test]
fn sampling_frequencies_follow_sensitivities() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let inst = gaussian_instance(10, 3, 2, 5.0, 1.0, &mut rng).unwrap();
    let profile = coreset::sensitivities(&inst, 0, 3.0, Metric::SquaredL2, CostMode::Exact).unwrap();
    let draws = 200_000;
    let cs = coreset::sample_coreset(&profile, draws, &mut rng).unwrap();
    let mut counts = [0usize; 10];
    for e in &cs.entries {
        counts[e.index] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&profile.t_upper)
        .map(|(&c, t)| {
            let expected = draws as f64 * t / profile.t_sum;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    assert!(chi2 < CHI2_9_999, "chi-square {chi2}");
}

#[test]
fn single_draw_estimator_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let inst = gaussian_instance(30, 3, 3, 4.0, 1.0, &mut rng).unwrap();
    let q = inst.pattern(7).clone();
    let costs: Vec<f64> = inst.patterns().iter().map(|p| exact_cost(p, &q, Metric::L1).unwrap()).collect();
    let exact: f64 = costs.iter().sum();
    let profile = coreset::sensitivities(&inst, 3, 3.0, Metric::L1, CostMode::Exact).unwrap();
    let draws = 40_000;
    let mut values = Vec::with_capacity(draws);
    for _ in 0..draws {
        let e = coreset::sample_coreset(&profile, 1, &mut rng).unwrap().entries[0];
        values.push(e.weight * costs[e.index]);
    }
    let mean = values.iter().sum::<f64>() / draws as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let se = (var / draws as f64).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "mean {mean}, exact {exact}, se {se}");
}

#[test]
fn random_pivot_is_usually_a_constant_factor_approximation() {
    // With probability at least 1 - 1/alpha a uniform pattern has objective
    // within 2 + 2 alpha of the optimum; the solver objective bounds the optimum from above.
    let alpha = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let inst = gaussian_instance(80, 4, 3, 6.0, 1.5, &mut rng).unwrap();
    let best = (0..5)
        .map(|i| {
            let init = inst.pattern(i * 11).clone();
            prototype::alternating_minimize(&inst, &init, Metric::SquaredL2, SolverConfig::default()).unwrap().objective()
        })
        .fold(f64::INFINITY, f64::min);
    let draws = 300;
    let mut good = 0;
    for _ in 0..draws {
        let pivot = prototype::pick_init(&inst, 1, Metric::SquaredL2, &mut rng).unwrap();
        if pivot.objective <= (2.0 * alpha + 2.0) * best {
            good += 1;
        }
    }
    assert!(good as f64 >= (1.0 - 1.0 / alpha) * draws as f64, "{good}/{draws}");
}

#[test]
fn more_trials_never_pick_a_worse_pivot_than_their_first_candidate() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let inst = gaussian_instance(40, 3, 2, 6.0, 1.0, &mut rng).unwrap();
    for seed in 0..20 {
        let one = prototype::pick_init(&inst, 1, Metric::SquaredL2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let five = prototype::pick_init(&inst, 5, Metric::SquaredL2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!(five.objective <= one.objective);
    }
}

#[test]
fn greedy_matching_ratio_is_measured() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let mut ratios = Vec::new();
    for _ in 0..2000 {
        let k = rand::Rng::random_range(&mut rng, 2..=8);
        let a = protoset::harness::suites::random_pattern(k, 3, &mut rng).unwrap();
        let b = protoset::harness::suites::random_pattern(k, 3, &mut rng).unwrap();
        let exact = exact_cost(&a, &b, Metric::SquaredL2).unwrap();
        let greedy = protoset::matching::approx_match_cost(&a, &b, Metric::SquaredL2).unwrap();
        ratios.push(greedy / exact);
    }
    ratios.sort_by(f64::total_cmp);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let p99 = ratios[ratios.len() * 99 / 100];
    println!("greedy/exact on U[0,1]^3, k in 2..=8: mean {mean:.3}, p99 {p99:.3}, max {:.3}", ratios.last().unwrap());
    assert!(ratios[0] >= 1.0 - 1e-9);
}
