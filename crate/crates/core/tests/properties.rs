mod common;

use common::{cos, random_model, random_orthogonal, rotate};
use emodrift::analogy::analogy;
use emodrift::corpus::{join_tokens, normalize, partition, Grid, IngestConfig, MemorySink, Period, Platform, RawPost};
use emodrift::drift::{
    baseline_shift, drift_indicator, drifted_tokens, pairwise_distances, DistanceKind, DriftConfig, DriftDetector,
    DriftIndicator, ShiftMatrix,
};
use emodrift::emoji::tokenize;
use emodrift::timeseries::{cohesiveness, neighbor_overlap};
use proptest::prelude::*;

fn piece() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z0-9]{1,8}",
        Just(" ".to_string()),
        Just("  \t".to_string()),
        Just("!?".to_string()),
        Just("...".to_string()),
        Just("@someone".to_string()),
        Just("#tag".to_string()),
        Just("https://t.co/x1".to_string()),
        Just("😀".to_string()),
        Just("🔫".to_string()),
        Just("\u{1F469}\u{200D}\u{1F469}\u{200D}\u{1F466}".to_string()),
        Just("\u{1F44D}\u{1F3FD}".to_string()),
        Just("\u{1F1F5}\u{1F1F9}".to_string()),
        Just("\u{1F1F5}".to_string()),
        Just("\u{200D}".to_string()),
        Just("\u{FE0F}".to_string()),
        Just("\u{2764}\u{FE0F}".to_string()),
        Just("1\u{FE0F}\u{20E3}".to_string()),
        Just("\u{1F3FB}".to_string()),
        Just("é".to_string()),
        Just("\u{0007}".to_string()),
        Just("€".to_string()),
    ]
}

fn messy_text() -> impl Strategy<Value = String> {
    prop::collection::vec(piece(), 0..24).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in messy_text()) {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn normalize_is_idempotent_on_arbitrary_text(s in "\\PC{0,40}") {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn tokens_rejoin_to_the_normalized_text(s in messy_text()) {
        let n = normalize(&s);
        prop_assert_eq!(join_tokens(&tokenize(&n)), n);
    }

    #[test]
    fn tokens_never_contain_whitespace(s in "\\PC{0,40}") {
        for t in tokenize(&normalize(&s)) {
            prop_assert!(!t.surface.is_empty() && !t.surface.chars().any(char::is_whitespace));
        }
    }

    #[test]
    fn partition_is_exhaustive_and_exclusive(
        posts in prop::collection::vec(
            (messy_text(), 0i64..4, 0usize..4, any::<bool>()),
            0..40,
        )
    ) {
        let grid = Grid::new(Period::new(2016, 5).unwrap(), 2, vec![Platform::Ios, Platform::Web]).unwrap();
        // months 2016-04 .. 2016-07, so some posts fall outside the grid
        let base = 1_459_468_800i64; // 2016-04-01T00:00:00Z
        let raw: Vec<RawPost> = posts
            .into_iter()
            .map(|(text, month, p, rt)| RawPost {
                text,
                timestamp: base + month * 31 * 86_400 + 3_600,
                platform: Platform::ALL[p],
                is_retweet: rt,
                user_id: None,
            })
            .collect();
        let n = raw.len() as u64;
        let (sink, m) = partition(raw, &grid, &IngestConfig::default(), MemorySink::default()).unwrap();
        prop_assert_eq!(m.posts_read, n);
        prop_assert_eq!(m.admitted + m.rejected, n);
        prop_assert_eq!(m.documents() + m.outside_grid, m.admitted);
        let written: usize = sink.slices.values().map(Vec::len).sum();
        prop_assert_eq!(written as u64, m.documents());
        for (k, docs) in &sink.slices {
            prop_assert!(grid.contains(k));
            prop_assert_eq!(docs.len() as u64, m.slices[k].documents);
        }
    }

    #[test]
    fn higher_beta_flags_a_subset(
        upper in prop::collection::vec(0.0f64..1.0, 45),
        lo in 2.0f64..4.0,
        extra in 0.0f64..3.0,
    ) {
        let s = ShiftMatrix::from_upper(10, upper).unwrap();
        let loose = drift_indicator(&s, lo, false).unwrap();
        let strict = drift_indicator(&s, lo + extra, false).unwrap();
        for &(k, l) in strict.flagged() {
            prop_assert!(loose.get(k, l));
        }
    }

    #[test]
    fn shift_is_symmetric_in_its_arguments(n in 2usize..12, dim in 1usize..6, seed in any::<u64>()) {
        let di = pairwise_distances(&random_model(n, dim, seed), DistanceKind::Cosine).unwrap();
        let dj = pairwise_distances(&random_model(n, dim, seed ^ 0x5555), DistanceKind::Cosine).unwrap();
        let a = baseline_shift(&di, &dj).unwrap();
        let b = baseline_shift(&dj, &di).unwrap();
        prop_assert_eq!(a.upper_triangle(), b.upper_triangle());
        prop_assert_eq!(a.mu.to_bits(), b.mu.to_bits());
        prop_assert_eq!(a.sigma.to_bits(), b.sigma.to_bits());
    }

    #[test]
    fn drifted_tokens_ignore_pair_order(
        pairs in prop::collection::vec((0usize..12, 0usize..12), 0..40)
            .prop_map(|v| v.into_iter().filter(|(a, b)| a != b).collect::<Vec<_>>()),
        shuffle_seed in any::<u64>(),
    ) {
        let forward = DriftIndicator::from_pairs(12, 2.0, pairs.clone()).unwrap();
        let mut shuffled: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let mut r = common::rng(shuffle_seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut r);
        let backward = DriftIndicator::from_pairs(12, 2.0, shuffled).unwrap();
        prop_assert_eq!(drifted_tokens(&forward), drifted_tokens(&backward));
    }

    #[test]
    fn rotation_changes_no_distance_and_no_flag(
        n in 4usize..14,
        dim in 2usize..7,
        seed in any::<u64>(),
    ) {
        let mi = random_model(n, dim, seed);
        let mj = random_model(n, dim, seed.wrapping_add(1));
        let q = random_orthogonal(dim, seed.wrapping_add(2));
        let ri = rotate(&mi, &q);
        let d = pairwise_distances(&mi, DistanceKind::Cosine).unwrap();
        let dr = pairwise_distances(&ri, DistanceKind::Cosine).unwrap();
        for (a, b) in d.upper_triangle().iter().zip(dr.upper_triangle()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        let det = DriftDetector::new(DriftConfig::default());
        let plain = det.detect(("i", &mi), ("j", &mj)).unwrap();
        let rotated = det.detect(("i", &ri), ("j", &mj)).unwrap();
        let pairs = |r: &emodrift::drift::DriftReport| {
            r.flagged_pairs.iter().map(|p| (p.a.clone(), p.b.clone())).collect::<Vec<_>>()
        };
        prop_assert_eq!(pairs(&plain), pairs(&rotated));
        prop_assert_eq!(plain.drifted_set(), rotated.drifted_set());
    }

    #[test]
    fn distance_and_similarity_give_the_same_shift(n in 3usize..12, dim in 1usize..6, seed in any::<u64>()) {
        let mi = random_model(n, dim, seed);
        let mj = random_model(n, dim, !seed);
        let shift = |kind| {
            let di = pairwise_distances(&mi, kind).unwrap();
            let dj = pairwise_distances(&mj, kind).unwrap();
            baseline_shift(&di, &dj).unwrap()
        };
        let a = shift(DistanceKind::Cosine);
        let b = shift(DistanceKind::Similarity);
        for (x, y) in a.upper_triangle().iter().zip(b.upper_triangle()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn cohesiveness_is_rotation_invariant(n in 4usize..14, dim in 2usize..7, k in 1usize..4, seed in any::<u64>()) {
        let m = random_model(n, dim, seed);
        let r = rotate(&m, &random_orthogonal(dim, !seed));
        let a = cohesiveness(&m, "tok0", k).unwrap();
        let b = cohesiveness(&r, "tok0", k).unwrap();
        prop_assert!((a.centroid_dist - b.centroid_dist).abs() <= 1e-9);
        prop_assert!((a.knn_mean_dist - b.knn_mean_dist).abs() <= 1e-9);
        match (a.knn_pairwise_mean_dist, b.knn_pairwise_mean_dist) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn overlap_is_symmetric_and_one_on_identical_models(n in 4usize..14, dim in 2usize..7, k in 1usize..4, seed in any::<u64>()) {
        let mi = random_model(n, dim, seed);
        let mj = random_model(n, dim, !seed);
        let t = "tok1";
        prop_assert_eq!(neighbor_overlap(&mi, &mj, t, k).unwrap(), neighbor_overlap(&mj, &mi, t, k).unwrap());
        prop_assert_eq!(neighbor_overlap(&mi, &mi, t, k).unwrap(), 1.0);
    }

    #[test]
    fn analogy_ranking_ignores_scale(n in 6usize..14, dim in 2usize..7, s in 0.01f64..100.0, seed in any::<u64>()) {
        let m = random_model(n, dim, seed);
        let scaled = m.map_rows(|r| r.iter().map(|x| x * s).collect()).unwrap();
        let a = analogy(&m, "tok0", "tok1", "tok2", 3).unwrap();
        let b = analogy(&scaled, "tok0", "tok1", "tok2", 3).unwrap();
        let names = |v: &[(String, f64)]| v.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&a), names(&b));
    }
}

#[test]
fn scalar_cosine_oracle_agrees_with_the_library() {
    let m = random_model(10, 4, 7);
    let d = pairwise_distances(&m, DistanceKind::Cosine).unwrap();
    for k in 0..10 {
        for l in 0..10 {
            let expect = if k == l { 0.0 } else { 1.0 - cos(m.vector(k), m.vector(l)) };
            assert!((d.get(k, l) - expect).abs() <= 1e-12);
        }
    }
}
