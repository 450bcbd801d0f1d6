use aerobench::analytics::{
    best_so_far_at, compare, load_runs, mean_pairwise_spearman, median_iqr, normalized_rank, prefix_len, spearman_rho,
    Grouping, RunRecord, RunSet, DEFAULT_FRACTIONS,
};
use aerobench::optimizers::{run_with_options, Method, OptimizerConfig, RunOptions};
use aerobench::problems::catalog::Catalog;
use aerobench::problems::Sense;
use indexmap::IndexMap;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn keyed(values: &[f64]) -> IndexMap<String, f64> {
    values.iter().enumerate().map(|(i, v)| (format!("m{i}"), *v)).collect()
}

/// Rank from scratch: count strictly better plus half the ties.
fn rank_oracle(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

proptest! {
    #[test]
    fn rank_matches_oracle(values in proptest::collection::vec(-5i32..5, 2..9)) {
        let v: Vec<f64> = values.iter().map(|x| *x as f64).collect();
        let got = normalized_rank(&keyed(&v), Sense::Minimize).unwrap();
        let r = rank_oracle(&v);
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, x) in got.values().enumerate() {
            let want = if hi > lo { (r[i] - lo) / (hi - lo) } else { 0.5 };
            prop_assert!((x - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_invariant_under_monotone_maps(values in proptest::collection::vec(-10.0f64..10.0, 2..12)) {
        let base = normalized_rank(&keyed(&values), Sense::Maximize).unwrap();
        let cubed: Vec<f64> = values.iter().map(|x| x.powi(3) + 2.0 * x).collect();
        let exp: Vec<f64> = values.iter().map(|x| x.exp()).collect();
        prop_assert_eq!(&base, &normalized_rank(&keyed(&cubed), Sense::Maximize).unwrap());
        prop_assert_eq!(&base, &normalized_rank(&keyed(&exp), Sense::Maximize).unwrap());
        // a decreasing map with the opposite sense gives the same ranks
        let neg: Vec<f64> = values.iter().map(|x| -x).collect();
        prop_assert_eq!(&base, &normalized_rank(&keyed(&neg), Sense::Minimize).unwrap());
    }

    #[test]
    fn spearman_is_symmetric(a in proptest::collection::vec(-10.0f64..10.0, 3..10), seed in any::<u64>()) {
        let mut b = a.clone();
        b.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let ab = spearman_rho(&a, &b);
        prop_assert_eq!(ab, spearman_rho(&b, &a));
        if let Some(r) = ab {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
        if a.iter().any(|x| *x != a[0]) {
            prop_assert!((spearman_rho(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn best_so_far_is_monotone_and_prefix_determined(
        rewards in proptest::collection::vec(-100.0f64..100.0, 1..60),
        tail in proptest::collection::vec(-100.0f64..100.0, 0..20),
        f in 0.01f64..1.0,
        g in 0.01f64..1.0,
    ) {
        let budget = rewards.len() + tail.len();
        let (lo, hi) = if f <= g { (f, g) } else { (g, f) };
        let mut full = rewards.clone();
        full.extend(&tail);
        prop_assert!(best_so_far_at(&full, budget, lo).unwrap() <= best_so_far_at(&full, budget, hi).unwrap());
        // only the first ⌈f·budget⌉ values matter
        let k = prefix_len(budget, lo).max(1);
        let mut changed = full.clone();
        for x in changed.iter_mut().skip(k) {
            *x = 1e9;
        }
        prop_assert_eq!(best_so_far_at(&full, budget, lo).unwrap(), best_so_far_at(&changed, budget, lo).unwrap());
    }

    #[test]
    fn median_iqr_ordered(values in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
        let (m, q25, q75) = median_iqr(&values).unwrap();
        prop_assert!(q25 <= m && m <= q75);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= q25 && q75 <= hi);
    }
}

#[test]
fn independent_rankings_average_near_zero() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let rankings: Vec<IndexMap<String, f64>> = (0..50)
        .map(|_| {
            let mut p: Vec<f64> = (1..=7).map(f64::from).collect();
            p.shuffle(&mut rng);
            keyed(&p)
        })
        .collect();
    let rho = mean_pairwise_spearman(&rankings).unwrap();
    assert!(rho.abs() < 0.1, "{rho}");
}

fn synthetic(task: &str, env: &str, method: &str, seed: u64, level: f64) -> RunRecord {
    let rewards = (1..=10).map(|k| level * f64::from(k) / 10.0).collect();
    RunRecord { task: task.into(), environment: env.into(), method: method.into(), seed, budget: 10, rewards }
}

#[test]
fn seven_methods_five_fractions() {
    let mut runs = Vec::new();
    for t in 0..4 {
        for m in 0..7 {
            for s in 0..3 {
                // method m is better on even tasks when m is larger, worse on odd
                let level = if t % 2 == 0 { m as f64 } else { -(m as f64) };
                runs.push(synthetic(&format!("t{t}"), if t < 2 { "A" } else { "B" }, &format!("m{m}"), s, level + 0.01 * s as f64));
            }
        }
    }
    let set = RunSet::new(runs).unwrap();
    let c = compare(&set, Grouping::Task, &DEFAULT_FRACTIONS).unwrap();
    assert_eq!(c.table.methods.len(), 7);
    assert!(c.table.cells.iter().all(|row| row.len() == 5));
    // every method is best on two tasks and worst-mirrored on two, so the
    // median over tasks is 0.5 for all
    for row in &c.table.cells {
        let (med, _, _, n) = row[4].unwrap();
        assert_eq!(n, 4);
        assert!((med - 0.5).abs() < 1e-12);
    }
    // even tasks agree with each other and disagree with odd ones
    assert_eq!(c.rho[0][2], Some(1.0));
    assert_eq!(c.rho[0][1], Some(-1.0));
    let by_env = compare(&set, Grouping::Environment, &DEFAULT_FRACTIONS).unwrap();
    assert_eq!(by_env.groups, vec!["A".to_string(), "B".to_string()]);
}

#[test]
fn loads_run_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cat = Catalog::builtin();
    let env = cat.environment("sphere_10d").unwrap();
    for method in [Method::Pso, Method::Cmaes] {
        for seed in 0..2 {
            let out = dir.path().join(format!("sphere_10d/{method}/seed{seed}"));
            let config = OptimizerConfig::new(method, 60, seed);
            let options = RunOptions { out_dir: Some(out), ..RunOptions::default() };
            run_with_options(&env, &config, &options).unwrap();
        }
    }
    let runs = load_runs(dir.path()).unwrap();
    assert_eq!(runs.len(), 4);
    assert!(runs.iter().all(|r| r.rewards.len() == 60 && r.environment == "synthetic"));
    let c = compare(&RunSet::new(runs).unwrap(), Grouping::Task, &DEFAULT_FRACTIONS).unwrap();
    assert_eq!(c.groups, vec!["sphere_10d".to_string()]);
    let files = c.write_dir(&dir.path().join("compare")).unwrap();
    assert_eq!(files.len(), 6);
}
