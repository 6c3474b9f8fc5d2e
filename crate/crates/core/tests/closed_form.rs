//! Optimality and invariance checks for the closed-form direction.

use edcone::linalg::{cosine, dot};
use edcone::model::{build_constraints, ConstraintMode, ConstraintSet, EmbeddingSet, LabeledDataset, NormPolicy};
use edcone::rng::{seeded, GaussianStream};
use edcone::solver::{
    centroid_direction, compatibility_score, fit_direction, objective_at, oracle_fit_direction, project,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_set(n: usize, dim: usize, seed: u64) -> EmbeddingSet {
    let mut g = GaussianStream::new(seed);
    let items = (0..n).map(|i| (format!("x{i}"), g.unit_vector(dim))).collect();
    EmbeddingSet::new(dim, items, NormPolicy::AssertUnit).unwrap()
}

fn random_pairs(n: usize, k: usize, seed: u64) -> ConstraintSet {
    let mut rng = seeded(seed);
    let pairs = (0..k)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    ConstraintSet::from_pairs(pairs)
}

#[test]
fn closed_form_beats_random_directions() {
    for seed in 0..20 {
        let emb = random_set(40, 6, seed);
        let c = random_pairs(40, 150, seed + 100);
        let dir = fit_direction(&emb, &c).unwrap();
        let mut g = GaussianStream::new(seed + 1000);
        for _ in 0..1000 {
            let u = g.unit_vector(6);
            assert!(objective_at(&emb, &c, &u) <= dir.objective + 1e-9);
        }
    }
}

#[test]
fn closed_form_matches_oracle_on_random_instances() {
    for seed in 0..50 {
        let emb = random_set(50, 8, seed);
        let c = random_pairs(50, 200, seed + 7);
        let dir = fit_direction(&emb, &c).unwrap();
        let w = oracle_fit_direction(&emb, &c, 2000, 0.05, seed).unwrap();
        assert!(cosine(&w, &dir.w).abs() >= 1.0 - 1e-6, "seed {seed}");
        assert!(objective_at(&emb, &c, &w) <= dir.objective + 1e-9);
    }
}

#[test]
fn direction_invariants_hold() {
    let emb = random_set(30, 5, 3);
    let c = random_pairs(30, 120, 4);
    let dir = fit_direction(&emb, &c).unwrap();
    assert!((dot(&dir.w, &dir.w).sqrt() - 1.0).abs() < 1e-12);
    assert!((dir.objective - dot(&dir.raw_sum, &dir.raw_sum).sqrt()).abs() < 1e-9);
    assert_eq!(dir.mean_margin, dir.objective / c.len() as f64);
    assert!((0.0..=2.0).contains(&dir.mean_margin));
    for (&(i, j), &m) in c.pairs().iter().zip(&dir.margins) {
        let direct: f64 =
            -dir.w.iter().zip(emb.vector(i).iter().zip(emb.vector(j))).map(|(w, (a, b))| w * (a - b)).sum::<f64>();
        assert!((m - direct).abs() < 1e-12);
        assert!(m.abs() <= 2.0 + 1e-12);
        // Sign sanity: a positive margin means i projects below j.
        let below = project(&dir.w, emb.vector(i)).unwrap() < project(&dir.w, emb.vector(j)).unwrap();
        if m.abs() > 1e-12 {
            assert_eq!(below, m > 0.0);
        }
    }
}

fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut g = GaussianStream::new(seed);
    let m = DMatrix::from_fn(dim, dim, |_, _| g.next_gaussian());
    m.qr().q()
}

fn rotate(emb: &EmbeddingSet, q: &DMatrix<f64>) -> EmbeddingSet {
    emb.map_vectors(|v| (q * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec()).unwrap()
}

#[test]
fn rotation_equivariance() {
    for seed in 0..10 {
        let dim = 12;
        let q = random_orthogonal(dim, seed + 50);
        let emb = random_set(60, dim, seed);
        let labels = (0..60).map(|i| (format!("x{i}"), i % 3)).collect();
        let ds = LabeledDataset::new(labels, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let rot = rotate(&emb, &q);

        let c = build_constraints(&ds, &emb, ConstraintMode::AllCrossLevel).unwrap();
        let d0 = fit_direction(&emb, &c).unwrap();
        let d1 = fit_direction(&rot, &c).unwrap();
        let qw = (&q * nalgebra::DVector::from_column_slice(&d0.w)).as_slice().to_vec();
        assert!(cosine(&qw, &d1.w) >= 1.0 - 1e-9);
        assert!((d0.objective - d1.objective).abs() < 1e-9);
        for (a, b) in d0.margins.iter().zip(&d1.margins) {
            assert!((a - b).abs() < 1e-9);
        }
        for pair in [(0, 1), (0, 2), (1, 2)] {
            let s0 = compatibility_score(&emb, &ds, pair).unwrap().score;
            let s1 = compatibility_score(&rot, &ds, pair).unwrap().score;
            assert!((s0 - s1).abs() < 1e-9);
        }
    }
}

#[test]
fn centroid_equivalence_on_random_level_pairs() {
    for seed in 0..20 {
        let mut rng = seeded(seed);
        let (na, nb) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let emb = random_set(na + nb, 10, seed + 300);
        let labels = (0..na + nb).map(|i| (format!("x{i}"), usize::from(i >= na))).collect();
        let ds = LabeledDataset::new(labels, vec!["a".into(), "b".into()]).unwrap();
        let c = build_constraints(&ds, &emb, ConstraintMode::LevelPair(0, 1)).unwrap();
        let dir = fit_direction(&emb, &c).unwrap();
        let entry = compatibility_score(&emb, &ds, (0, 1)).unwrap();
        assert!((dir.mean_margin - entry.score).abs() < 1e-9);
        assert_eq!(entry.k, c.len());
        let w = centroid_direction(&emb, &ds, (0, 1)).unwrap();
        for (a, b) in w.iter().zip(&dir.w) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constraint_order_does_not_matter(seed in 0u64..10_000, n in 3usize..30, k in 1usize..100) {
        let emb = random_set(n, 4, seed);
        let c = random_pairs(n, k, seed ^ 0xabc);
        let Ok(dir) = fit_direction(&emb, &c) else { return Ok(()); };
        let mut shuffled = c.pairs().to_vec();
        shuffled.shuffle(&mut seeded(seed));
        let dir2 = fit_direction(&emb, &ConstraintSet::from_pairs(shuffled)).unwrap();
        for (a, b) in dir.w.iter().zip(&dir2.w) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn duplicating_constraints_scales_only_the_objective(seed in 0u64..10_000, m in 2usize..5) {
        let emb = random_set(12, 3, seed);
        let c = random_pairs(12, 20, seed + 1);
        let Ok(dir) = fit_direction(&emb, &c) else { return Ok(()); };
        let repeated: Vec<_> = c.pairs().iter().flat_map(|&p| std::iter::repeat_n(p, m)).collect();
        let dir2 = fit_direction(&emb, &ConstraintSet::from_pairs(repeated)).unwrap();
        for (a, b) in dir.w.iter().zip(&dir2.w) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        prop_assert!((dir.mean_margin - dir2.mean_margin).abs() <= 1e-9);
        prop_assert!((dir2.objective / (m as f64 * dir.objective) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn objective_is_sum_of_margins(seed in 0u64..10_000) {
        let emb = random_set(20, 5, seed);
        let c = random_pairs(20, 50, seed + 2);
        let Ok(dir) = fit_direction(&emb, &c) else { return Ok(()); };
        prop_assert!((dir.objective - dir.margins.iter().sum::<f64>()).abs() <= 1e-9);
        prop_assert_eq!(dir.mean_margin, dir.objective / 50.0);
    }

    #[test]
    fn build_constraints_properties(sizes in proptest::collection::vec(0usize..6, 2..5)) {
        let total: usize = sizes.iter().sum();
        prop_assume!(total > 0);
        let emb = random_set(total, 3, total as u64);
        let mut labels = Vec::new();
        let mut i = 0;
        for (rank, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                labels.push((format!("x{i}"), rank));
                i += 1;
            }
        }
        let names = (0..sizes.len()).map(|r| format!("l{r}")).collect();
        let ds = LabeledDataset::new(labels, names).unwrap();
        let present = sizes.iter().filter(|&&s| s > 0).count();
        let all = build_constraints(&ds, &emb, ConstraintMode::AllCrossLevel);
        if present < 2 {
            prop_assert!(all.is_err());
            return Ok(());
        }
        let all = all.unwrap();
        let mut expected = 0;
        for a in 0..sizes.len() {
            for b in a + 1..sizes.len() {
                expected += sizes[a] * sizes[b];
            }
        }
        prop_assert_eq!(all.len(), expected);
        for &(i, j) in all.pairs() {
            prop_assert!(ds.level_of(emb.id(i)).unwrap() < ds.level_of(emb.id(j)).unwrap());
        }
        prop_assert!(all.pairs().windows(2).all(|w| w[0] < w[1]));
        let again = build_constraints(&ds, &emb, ConstraintMode::AllCrossLevel).unwrap();
        prop_assert_eq!(&again, &all);
        let adj = build_constraints(&ds, &emb, ConstraintMode::AdjacentLevels).unwrap();
        prop_assert!(adj.pairs().iter().all(|p| all.pairs().binary_search(p).is_ok()));
    }
}
