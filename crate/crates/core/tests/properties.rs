//! Property tests of the public API: learner feasibility, meta weights,
//! oracle certificates and optimality, generators and the decomposition.

use nsregret::analysis::{build_partition, dynamic_regret, regret_decompose};
use nsregret::datagen::{gen_comparator, gen_labels, NoiseKind, NoiseSpec, ProfileKind, SequenceProfile};
use nsregret::learners::LearnerSpec;
use nsregret::meta::{aflh_alive, default_meta_zeta, OnlineAlgorithm};
use nsregret::{
    oracle_general_loss, run_protocol, total_variation, tv_constrained_solve, ComparatorSequence, CurvatureParams,
    Flh, Loss, MetaKind, ProtocolConfig, Pruning,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(seed: u64, n: usize, d: usize, bound: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-bound..=bound)).collect()).collect()
}

fn squared(y: &[Vec<f64>], bound: f64) -> Vec<Loss<f64>> {
    y.iter().map(|r| Loss::squared(r.clone(), bound).unwrap()).collect()
}

/// A random point of the TV class: a random walk shrunk into the budget and box.
fn feasible_point(rng: &mut ChaCha8Rng, n: usize, d: usize, budget: f64, bound: f64) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; d]; n];
    let start: Vec<f64> = (0..d).map(|_| rng.gen_range(-bound..=bound)).collect();
    for t in 0..n {
        for k in 0..d {
            w[t][k] = if t == 0 { start[k] } else { w[t - 1][k] + rng.gen_range(-1.0..=1.0) };
        }
    }
    let tv = total_variation(&w);
    if tv > budget {
        let f = budget / tv * (1.0 - 1e-12);
        for t in 1..n {
            let (prev, cur) = w.split_at_mut(t);
            for (c, p) in cur[0].iter_mut().zip(&prev[t - 1]) {
                *c = p + (*c - p) * f;
            }
        }
    }
    for row in &mut w {
        for v in row {
            *v = v.clamp(-bound, bound);
        }
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn predictions_stay_in_the_learner_box(seed in 0u64..1000, d in 1usize..=3, which in 0usize..3, meta in 0usize..3) {
        let bound = 1.0;
        let curv = CurvatureParams::squared(bound).unwrap();
        let spec = match which {
            0 => LearnerSpec::ftl(bound, d),
            1 => LearnerSpec::ogd(&curv, d),
            _ => LearnerSpec::ons(&curv, d),
        }
        .unwrap();
        let meta = [MetaKind::None, MetaKind::Flh, MetaKind::Aflh][meta];
        let losses = squared(&labels(seed, 120, d, bound), bound);
        let cfg = ProtocolConfig { learner: spec, meta, meta_zeta: default_meta_zeta(&spec, &curv) };
        let tr = run_protocol(&losses, &cfg).unwrap();
        let half = spec.decision_box().half_width;
        prop_assert!(tr.rounds.iter().all(|r| r.x.len() == d && r.x.iter().all(|v| v.abs() <= half)));
    }

    #[test]
    fn flh_weights_stay_on_the_simplex(seed in 0u64..1000, aflh in any::<bool>()) {
        let bound = 1.0;
        let pruning = if aflh { Pruning::Aflh } else { Pruning::None };
        let mut flh = Flh::new(LearnerSpec::ftl(bound, 1).unwrap(), 0.125, pruning).unwrap();
        for (t, y) in labels(seed, 200, 1, bound).into_iter().enumerate() {
            OnlineAlgorithm::predict(&mut flh).unwrap();
            flh.observe(&Loss::squared(y, bound).unwrap()).unwrap();
            let w = flh.weights();
            prop_assert!(w.iter().all(|v| *v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            if aflh {
                // pool holds the experts alive at t+1 plus the newcomer
                prop_assert!(w.len() <= aflh_alive(t + 1).len() + 1);
            } else {
                prop_assert_eq!(w.len(), t + 2);
            }
        }
    }

    #[test]
    fn oracle_certificate_and_optimality(seed in 0u64..10_000, n in 2usize..80, d in 1usize..=3, budget in 0.0f64..4.0) {
        let bound = 1.0;
        let y = labels(seed, n, d, bound);
        let sol = tv_constrained_solve(&y, budget, bound).unwrap();
        prop_assert!(sol.tv <= budget * (1.0 + 1e-8) + 1e-12);
        prop_assert!(sol.kkt.stationarity_max_residual <= 1e-6);
        prop_assert!(sol.kkt.subgradient_violation <= 1e-9);
        prop_assert!(sol.kkt.comp_slack_tv <= 1e-6 * sol.lambda.max(1.0));
        prop_assert!(sol.u.iter().flatten().all(|v| v.abs() <= bound));
        let loss = |w: &[Vec<f64>]| -> f64 {
            y.iter().zip(w).flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).powi(2))).sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
        for _ in 0..20 {
            let w = feasible_point(&mut rng, n, d, budget, bound);
            prop_assert!(sol.objective <= loss(&w) + 1e-8);
        }
    }

    #[test]
    fn generated_comparators_are_in_class_and_reproducible(
        seed in 0u64..10_000,
        n in 16usize..400,
        d in 1usize..=3,
        budget in 0.1f64..3.0,
        kind in 0usize..4,
    ) {
        let kind = match kind {
            0 => ProfileKind::PiecewiseConstant { jumps: 4 },
            1 => ProfileKind::SingleSpike,
            2 => ProfileKind::Sinusoid { frequency: 1.0 },
            _ => ProfileKind::RandomWalkProjected,
        };
        let p = SequenceProfile { kind, n, d, budget, bound: 1.0, seed };
        match gen_comparator::<f64>(&p) {
            Ok(w) => {
                prop_assert!(w.in_tv_class(budget, 1.0));
                prop_assert!(w.total_variation >= 0.9 * budget);
                prop_assert_eq!(&w, &gen_comparator::<f64>(&p).unwrap());
                let noise = NoiseSpec { kind: NoiseKind::Uniform { sigma: 0.5 }, seed };
                let y = gen_labels(&w, &noise, 1.5).unwrap();
                prop_assert!(y.iter().flatten().all(|v| v.abs() <= 1.5));
                prop_assert_eq!(y, gen_labels(&w, &noise, 1.5).unwrap());
            }
            Err(nsregret::Error::Infeasible(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn decomposition_is_an_identity_for_squared_loss(seed in 0u64..1000, n in 8usize..200, budget in 0.1f64..3.0) {
        let bound = 1.0;
        let y = labels(seed, n, 1, bound);
        let losses = squared(&y, bound);
        let cfg = ProtocolConfig { learner: LearnerSpec::ftl(bound, 1).unwrap(), meta: MetaKind::Flh, meta_zeta: 0.125 };
        let tr = run_protocol(&losses, &cfg).unwrap();
        let oracle = tv_constrained_solve(&y, budget, bound).unwrap();
        let p = build_partition(&oracle.u, bound);
        let rows = regret_decompose(&tr, &oracle, &p, &losses, 2.0).unwrap();
        let regret = dynamic_regret(&tr, &ComparatorSequence::new(oracle.u.clone()).unwrap(), &losses).unwrap();
        let total: f64 = rows.iter().map(|r| r.t1 + r.t2 + r.t3).sum();
        prop_assert!((total - regret).abs() <= 1e-8 * tr.cumulative_loss().max(1.0));
        prop_assert!(rows.iter().all(|r| r.t2 <= 1e-12));
        prop_assert!(regret >= -1e-8);
    }
}

#[test]
fn squared_and_general_oracles_agree() {
    let bound = 1.0;
    for seed in 0..6u64 {
        let n = 20 + 7 * seed as usize;
        let y = labels(seed, n, 1, bound);
        for budget in [0.3, 1.0, 2.5] {
            let exact = tv_constrained_solve(&y, budget, bound).unwrap();
            let general = oracle_general_loss(&squared(&y, bound), budget, bound, 1e-9).unwrap();
            let rel = (general.objective - exact.objective).abs() / exact.objective.max(1e-12);
            assert!(rel <= 1e-6, "seed {seed}, C {budget}: {} vs {}", general.objective, exact.objective);
        }
    }
}
