use std::collections::HashSet;

use cropcurate::{
    classify_pair, classify_pair_with, config_statistics, coverage_heatmap, sample_crop, sample_pair, CropParams,
    PairConfiguration, PairGeometry, Rect, RegimeKind, SamplingRegime,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rect(rng: &mut impl Rng, size: u32) -> Rect {
    let (w, h) = (rng.gen_range(1..=size), rng.gen_range(1..=size));
    Rect::new(rng.gen_range(0..=size - w), rng.gen_range(0..=size - h), w, h).unwrap()
}

fn pixels(r: &Rect) -> HashSet<(i64, i64)> {
    let (x, y) = (i64::from(r.x), i64::from(r.y));
    (y..y + i64::from(r.h)).flat_map(|py| (x..x + i64::from(r.w)).map(move |px| (px, py))).collect()
}

/// Box semantics on pixel sets: containment means lying inside the other
/// box's interior (its pixels minus the border ring); adjacency means no two
/// pixels are within Chebyshev distance 1.
fn box_oracle(a: &Rect, b: &Rect) -> PairConfiguration {
    let interior = |r: &Rect| -> HashSet<(i64, i64)> {
        pixels(r)
            .into_iter()
            .filter(|&(x, y)| {
                x > i64::from(r.x) && y > i64::from(r.y) && x < i64::from(r.right()) - 1 && y < i64::from(r.bottom()) - 1
            })
            .collect()
    };
    let (pa, pb) = (pixels(a), pixels(b));
    if pa.is_subset(&interior(b)) || pb.is_subset(&interior(a)) {
        return PairConfiguration::GlobalLocal;
    }
    let touching = pa.iter().any(|&(x, y)| pb.iter().any(|&(u, v)| (x - u).abs() <= 1 && (y - v).abs() <= 1));
    if touching {
        PairConfiguration::Intersection
    } else {
        PairConfiguration::Adjacent
    }
}

#[test]
fn classification_is_symmetric_over_many_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = CropParams::default();
    for _ in 0..100_000 {
        let a = sample_crop(&mut rng, 32, 32, &params).unwrap();
        let b = sample_crop(&mut rng, 32, 32, &params).unwrap();
        for g in [PairGeometry::PixelSet, PairGeometry::ContinuousBox] {
            assert_eq!(classify_pair_with(&a, &b, g), classify_pair_with(&b, &a, g), "{a:?} {b:?} {g:?}");
        }
    }
}

#[test]
fn box_geometry_matches_pixel_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10_000 {
        let a = random_rect(&mut rng, 10);
        let b = random_rect(&mut rng, 10);
        assert_eq!(classify_pair_with(&a, &b, PairGeometry::ContinuousBox), box_oracle(&a, &b), "{a:?} {b:?}");
    }
}

#[test]
fn box_geometry_is_stricter_than_pixel_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20_000 {
        let a = random_rect(&mut rng, 12);
        let b = random_rect(&mut rng, 12);
        let boxed = classify_pair_with(&a, &b, PairGeometry::ContinuousBox);
        let pix = classify_pair(&a, &b);
        if boxed != PairConfiguration::Intersection {
            assert_eq!(boxed, pix, "{a:?} {b:?}");
        }
    }
}

#[test]
fn constrained_regimes_only_emit_their_configuration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (kind, target) in [
        (RegimeKind::GlobalLocalOnly, PairConfiguration::GlobalLocal),
        (RegimeKind::AdjacentOnly, PairConfiguration::Adjacent),
        (RegimeKind::IntersectionOnly, PairConfiguration::Intersection),
    ] {
        let regime = SamplingRegime::new(kind, CropParams::default());
        let stats = config_statistics(&mut rng, 32, 32, &regime, 2_000).unwrap();
        let freq = [stats.freq_global_local, stats.freq_adjacent, stats.freq_intersection];
        assert_eq!(freq[target.index()], 1.0, "{kind}");
    }
}

#[test]
fn equal_configuration_is_balanced_in_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let regime = SamplingRegime::new(RegimeKind::EqualConfiguration, CropParams::default());
    let n = 30_000u64;
    let s = config_statistics(&mut rng, 32, 32, &regime, n).unwrap();
    let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
    for f in [s.freq_global_local, s.freq_adjacent, s.freq_intersection] {
        assert!((f - 1.0 / 3.0).abs() < 5.0 * sigma, "{s:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn crops_stay_in_bounds(seed: u64, w in 1u32..80, h in 1u32..80, lo in 0.01f64..0.9, span in 0.0f64..0.5) {
        let params = CropParams::default().with_scale(lo, (lo + span).min(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let r = sample_crop(&mut rng, w, h, &params).unwrap();
            prop_assert!(r.w >= 1 && r.h >= 1 && r.right() <= w && r.bottom() <= h);
        }
    }

    #[test]
    fn pair_views_come_from_the_image(seed: u64, size in 4u32..48) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let regime = SamplingRegime::new(RegimeKind::Default, CropParams::default());
        let (a, b) = sample_pair(&mut rng, size, size, &regime).unwrap();
        prop_assert!(a.right() <= size && b.bottom() <= size);
    }

    #[test]
    fn heatmap_is_normalised(seed: u64, n in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rects: Vec<Rect> = (0..n).map(|_| random_rect(&mut rng, 9)).collect();
        let map = coverage_heatmap(rects.iter(), 9, 9).unwrap();
        let max = map.grid.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(max, 1.0);
        prop_assert!(map.grid.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
