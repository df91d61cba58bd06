use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use protoset::coreset::{self, CostMode};
use protoset::harness::data::largest_remainder;
use protoset::harness::metrics::misclustered_percentage;
use protoset::harness::suites::random_weighted_pattern;
use protoset::io;
use protoset::matching::{approx_match_cost, brute_force_match, emd, exact_cost, match_cost, Metric};
use protoset::prototype::{self, SolverConfig};
use protoset::{Instance, Pattern};

fn pattern(k: usize, d: usize) -> impl Strategy<Value = Pattern> {
    prop::collection::vec(-10.0f64..10.0, k * d).prop_map(move |c| Pattern::from_flat(k, d, c, None).unwrap())
}

fn pair() -> impl Strategy<Value = (Pattern, Pattern)> {
    (1usize..=7, 1usize..=4).prop_flat_map(|(k, d)| (pattern(k, d), pattern(k, d)))
}

fn triple() -> impl Strategy<Value = (Pattern, Pattern, Pattern)> {
    (1usize..=6, 1usize..=4).prop_flat_map(|(k, d)| (pattern(k, d), pattern(k, d), pattern(k, d)))
}

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=25, 1usize..=5, 1usize..=4)
        .prop_flat_map(|(n, k, d)| prop::collection::vec(pattern(k, d), n))
        .prop_map(|p| Instance::new(p).unwrap())
}

fn weighted_triple() -> impl Strategy<Value = (Pattern, Pattern, Pattern)> {
    (1usize..=4, 1usize..=3, 1u64..=6, any::<u64>()).prop_map(|(k, d, w, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = || random_weighted_pattern(k, d, w, &mut rng).unwrap();
        (next(), next(), next())
    })
}

/// Every integral flow with the given marginals, enumerated cell by cell.
fn flow_minimum(a: &Pattern, b: &Pattern, metric: Metric) -> f64 {
    fn rec(cell: usize, k: usize, cost: &[f64], rows: &mut [u64], cols: &mut [u64], acc: f64, best: &mut f64) {
        if cell == k * k {
            if cols.iter().all(|&c| c == 0) {
                *best = best.min(acc);
            }
            return;
        }
        let (j, l) = (cell / k, cell % k);
        let lo = if l == k - 1 { rows[j] } else { 0 };
        let hi = rows[j].min(cols[l]);
        for f in lo..=hi {
            rows[j] -= f;
            cols[l] -= f;
            rec(cell + 1, k, cost, rows, cols, acc + f as f64 * cost[cell], best);
            rows[j] += f;
            cols[l] += f;
        }
    }
    let k = a.k();
    let cost: Vec<f64> = (0..k * k).map(|c| metric.ground(a.point(c / k), b.point(c % k))).collect();
    let mut best = f64::INFINITY;
    let mut rows = a.weights().unwrap().to_vec();
    let mut cols = b.weights().unwrap().to_vec();
    rec(0, k, &cost, &mut rows, &mut cols, 0.0, &mut best);
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
}

fn le(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + 1e-9 * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matching_is_symmetric((a, b) in pair()) {
        for m in [Metric::SquaredL2, Metric::L1] {
            prop_assert!(close(exact_cost(&a, &b, m).unwrap(), exact_cost(&b, &a, m).unwrap()));
        }
    }

    #[test]
    fn permuted_copy_costs_nothing((a, _) in pair(), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..a.k()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        let b = a.permuted(&perm).unwrap();
        prop_assert_eq!(exact_cost(&a, &b, Metric::SquaredL2).unwrap(), 0.0);
        prop_assert_eq!(exact_cost(&a, &b, Metric::L1).unwrap(), 0.0);
    }

    #[test]
    fn hungarian_agrees_with_brute_force((a, b) in pair()) {
        for m in [Metric::SquaredL2, Metric::L1] {
            let fast = match_cost(&a, &b, m).unwrap();
            let slow = brute_force_match(&a, &b, m).unwrap();
            prop_assert!(close(fast.cost, slow.cost), "{} vs {}", fast.cost, slow.cost);
            let recomputed: f64 = fast.permutation.iter().enumerate().map(|(j, &l)| m.ground(a.point(j), b.point(l))).sum();
            prop_assert!(close(recomputed, fast.cost));
        }
    }

    #[test]
    fn approximate_cost_never_undercuts((a, b) in pair()) {
        for m in [Metric::SquaredL2, Metric::L1] {
            let exact = exact_cost(&a, &b, m).unwrap();
            prop_assert!(le(exact, approx_match_cost(&a, &b, m).unwrap(), exact));
        }
    }

    #[test]
    fn relaxed_triangle_and_eps_inequality((a, b, c) in triple(), eps in 0.05f64..2.0) {
        let m = Metric::SquaredL2;
        let ab = exact_cost(&a, &b, m).unwrap();
        let ac = exact_cost(&a, &c, m).unwrap();
        let cb = exact_cost(&c, &b, m).unwrap();
        let scale = ab.max(ac).max(cb);
        prop_assert!(le(ab, 2.0 * ac + 2.0 * cb, scale));
        prop_assert!(le((ab - ac).abs(), (1.0 + 1.0 / eps) * cb + eps * ab, scale));
        let l = Metric::L1;
        let (ab, ac, cb) = (exact_cost(&a, &b, l).unwrap(), exact_cost(&a, &c, l).unwrap(), exact_cost(&c, &b, l).unwrap());
        prop_assert!(le(ab, ac + cb, ab.max(ac).max(cb)));
    }

    #[test]
    fn emd_matches_flow_enumeration((a, b, c) in weighted_triple()) {
        for m in [Metric::Emd1, Metric::Emd2] {
            let res = emd(&a, &b, m).unwrap();
            prop_assert!(close(res.cost, flow_minimum(&a, &b, m)));
            let k = a.k();
            for j in 0..k {
                prop_assert_eq!((0..k).map(|l| res.get(j, l)).sum::<u64>(), a.weights().unwrap()[j]);
                prop_assert_eq!((0..k).map(|l| res.get(l, j)).sum::<u64>(), b.weights().unwrap()[j]);
            }
        }
        let e1 = |x: &Pattern, y: &Pattern| exact_cost(x, y, Metric::Emd1).unwrap();
        let e2 = |x: &Pattern, y: &Pattern| exact_cost(x, y, Metric::Emd2).unwrap();
        let (ab, ac, cb) = (e1(&a, &b), e1(&a, &c), e1(&c, &b));
        prop_assert!(le(ab, ac + cb, ab.max(ac).max(cb)));
        let (ab, ac, cb) = (e2(&a, &b), e2(&a, &c), e2(&c, &b));
        prop_assert!(le(ab, 2.0 * ac + 2.0 * cb, ab.max(ac).max(cb)));
    }

    #[test]
    fn unit_weight_emd_is_a_matching((a, b) in pair()) {
        let w = vec![1u64; a.k()];
        let aw = Pattern::weighted(a.to_points(), w.clone()).unwrap();
        let bw = Pattern::weighted(b.to_points(), w).unwrap();
        let flow = emd(&aw, &bw, Metric::Emd2).unwrap().cost;
        prop_assert!(close(flow, exact_cost(&a, &b, Metric::SquaredL2).unwrap()));
    }

    #[test]
    fn objective_ignores_order(inst in instance(), q_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(q_seed);
        let q = inst.pattern(rand::Rng::random_range(&mut rng, 0..inst.n())).clone();
        let base = prototype::objective(&inst, &q, Metric::SquaredL2).unwrap();
        let mut order: Vec<usize> = (0..inst.n()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut slots: Vec<usize> = (0..inst.k()).collect();
        rand::seq::SliceRandom::shuffle(slots.as_mut_slice(), &mut rng);
        let shuffled = Instance::new(order.iter().map(|&i| inst.pattern(i).permuted(&slots).unwrap()).collect()).unwrap();
        let moved = prototype::objective(&shuffled, &q.permuted(&slots).unwrap(), Metric::SquaredL2).unwrap();
        prop_assert!(close(base, moved));
    }

    #[test]
    fn solver_history_never_increases(inst in instance(), metric in prop_oneof![Just(Metric::SquaredL2), Just(Metric::L1)]) {
        let report = prototype::alternating_minimize(&inst, inst.pattern(0), metric, SolverConfig::default()).unwrap();
        let h = &report.objective_history;
        prop_assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-9 * h[0]));
        prop_assert!(close(report.objective(), prototype::objective(&inst, &report.prototype, metric).unwrap()));
    }

    #[test]
    fn single_slot_solves_to_weighted_mean(
        points in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 1..30),
        raw in prop::collection::vec(0.1f64..5.0, 30),
    ) {
        let n = points.len();
        let u = raw[..n].to_vec();
        let inst = Instance::with_pattern_weights(
            points.iter().map(|p| Pattern::new(vec![p.clone()]).unwrap()).collect(),
            u.clone(),
        ).unwrap();
        let report = prototype::alternating_minimize(&inst, inst.pattern(0), Metric::SquaredL2, SolverConfig::default()).unwrap();
        let total: f64 = u.iter().sum();
        for axis in 0..3 {
            let mean = points.iter().zip(&u).map(|(p, w)| w * p[axis]).sum::<f64>() / total;
            prop_assert!((report.prototype.point(0)[axis] - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        }
    }

    #[test]
    fn sensitivity_floor_and_cap(inst in instance(), pivot in any::<prop::sample::Index>(), alpha in 1.01f64..10.0) {
        let n = inst.n();
        for (metric, coef) in [(Metric::SquaredL2, 8.0 * (alpha + 1.0)), (Metric::L1, 2.0 * (alpha + 1.0))] {
            let p = coreset::sensitivities(&inst, pivot.index(n), alpha, metric, CostMode::Exact).unwrap();
            prop_assert!(p.t_upper.iter().all(|&t| t > 1.0 / (4.0 * n as f64)));
            prop_assert!(p.t_sum <= (coef + 4.0 * alpha + 16.0) * (1.0 + 1e-9));
            if !p.degenerate {
                for (t, c) in p.t_upper.iter().zip(&p.costs_to_pivot) {
                    prop_assert_eq!(*t, coef * c / p.delta_tilde + (4.0 * alpha + 16.0) / n as f64);
                }
            }
        }
    }

    #[test]
    fn coreset_weights_invert_probabilities(inst in instance(), r in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (profile, _) = coreset::pivot_profile(&inst, 3, 3.0, Metric::SquaredL2, CostMode::Exact, &mut rng).unwrap();
        let cs = coreset::sample_coreset(&profile, r, &mut rng).unwrap();
        prop_assert_eq!(cs.entries.len(), r);
        for e in &cs.entries {
            prop_assert!(e.weight > 0.0);
            let identity = e.weight * (profile.t_upper[e.index] / profile.t_sum) * r as f64;
            prop_assert!((identity - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn pattern_file_round_trip(inst in instance()) {
        let mut buf = Vec::new();
        io::write_patterns(&inst, &mut buf).unwrap();
        let back = io::read_patterns(buf.as_slice()).unwrap();
        prop_assert_eq!(back.fingerprint(), inst.fingerprint());
        for (a, b) in inst.patterns().iter().zip(back.patterns()) {
            prop_assert!(a.coords().iter().zip(b.coords()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn misclustering_ignores_label_names(truth in prop::collection::vec(0usize..4, 4..40), seed in any::<u64>()) {
        let k = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..k).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let renamed: Vec<usize> = truth.iter().map(|&l| perm[l]).collect();
        let q = protoset::harness::data::clustering_to_pattern(&renamed, k).unwrap();
        prop_assert_eq!(misclustered_percentage(&q, &truth).unwrap(), 0.0);
    }

    #[test]
    fn largest_remainder_hits_total(mass in prop::collection::vec(0.0f64..10.0, 1..20), total in 1u64..5000) {
        prop_assume!(mass.iter().any(|&m| m > 0.0));
        let w = largest_remainder(&mass, total).unwrap();
        prop_assert_eq!(w.iter().sum::<u64>(), total);
        let sum: f64 = mass.iter().sum();
        for (wi, m) in w.iter().zip(&mass) {
            prop_assert!((*wi as f64 - m / sum * total as f64).abs() < 1.0 + 1e-9);
        }
    }
}
