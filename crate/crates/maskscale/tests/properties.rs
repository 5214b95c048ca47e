//! Randomized invariants over the resampling, filtering, metric,
//! quantification, and dataset layers.

use proptest::prelude::*;
use proptest::test_runner::Config as ProptestConfig;

use maskscale::dataset::{apply_augment, split, SamplePair, SplitSpec};
use maskscale::maskfilter::{audit, eq1_threshold, mask_resize, remove_extra_labels};
use maskscale::metrics::{class_metrics, confusion, dice};
use maskscale::quantcompare::{option1, option2, option3, tally, OptionThresholds, QuantRecord};
use maskscale::raster::class_histogram;
use maskscale::resample::{resize_image, resize_kernel};
use maskscale::{
    FilterStrategy, FloatImage, GrayImage, KernelKind, LabelMask, ResizeSpec, TRI_CLASS_LABELS,
};

fn tri_mask_strategy(max_side: u32) -> impl Strategy<Value = LabelMask> {
    (2..=max_side, 2..=max_side)
        .prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            (
                Just(w),
                Just(h),
                proptest::collection::vec(prop_oneof![Just(0u8), Just(128u8), Just(255u8)], n),
            )
        })
        .prop_map(|(w, h, samples)| {
            LabelMask::tri_class(GrayImage::new(w, h, samples).expect("sized to fit"))
        })
}

fn gray_strategy(max_side: u32) -> impl Strategy<Value = GrayImage> {
    (2..=max_side, 2..=max_side)
        .prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            (Just(w), Just(h), proptest::collection::vec(any::<u8>(), n))
        })
        .prop_map(|(w, h, samples)| GrayImage::new(w, h, samples).expect("sized to fit"))
}

fn float_plane_strategy(max_side: u32) -> impl Strategy<Value = FloatImage> {
    (2..=max_side, 2..=max_side)
        .prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            // Well past the quantization overshoot range on both sides.
            (
                Just(w),
                Just(h),
                proptest::collection::vec(-80.0f64..340.0, n),
            )
        })
        .prop_map(|(w, h, samples)| FloatImage::new(w, h, samples).expect("finite by range"))
}

/// Brute-force separable resize: evaluates the 2D tensor-product kernel
/// directly at every destination pixel, with the same edge clamping and
/// per-pixel renormalization as the production code.
fn resize_kernel_direct(img: &GrayImage, spec: &ResizeSpec) -> Vec<f64> {
    let (radius, weight): (i64, fn(f64) -> f64) = match spec.kernel {
        KernelKind::Bicubic => (2, maskscale::resample::cubic_weight),
        KernelKind::Lanczos3 => (3, maskscale::resample::lanczos3_weight),
        KernelKind::Nearest => unreachable!("kernel resize only"),
    };
    let mut out = Vec::with_capacity((spec.dst_width * spec.dst_height) as usize);
    for dy in 0..spec.dst_height {
        let sy = maskscale::resample::map_coord(dy, spec.scale_y());
        for dx in 0..spec.dst_width {
            let sx = maskscale::resample::map_coord(dx, spec.scale_x());
            let (bx, by) = (sx.floor() as i64, sy.floor() as i64);
            let (mut acc, mut total) = (0.0, 0.0);
            for m in (by - radius + 1)..=(by + radius) {
                let wy = weight(sy - m as f64);
                let cy = m.clamp(0, i64::from(spec.src_height) - 1) as u32;
                for n in (bx - radius + 1)..=(bx + radius) {
                    let wx = weight(sx - n as f64);
                    let cx = n.clamp(0, i64::from(spec.src_width) - 1) as u32;
                    acc += wy * wx * f64::from(img.get(cx, cy));
                    total += wy * wx;
                }
            }
            out.push(acc / total);
        }
    }
    out
}

/// Brute-force confusion tally used as the metrics oracle.
fn confusion_by_hand(gt: &LabelMask, pred: &LabelMask) -> Vec<Vec<u64>> {
    let labels = gt.canonical_labels();
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for y in 0..gt.image().height() {
        for x in 0..gt.image().width() {
            let row = labels
                .iter()
                .position(|&l| l == gt.image().get(x, y))
                .unwrap();
            let col = labels
                .iter()
                .position(|&l| l == pred.image().get(x, y))
                .unwrap();
            counts[row][col] += 1;
        }
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        .. ProptestConfig::default()
    })]

    #[test]
    fn nearest_output_values_are_a_subset_of_the_input(
        img in gray_strategy(16),
        dst_w in 1u32..40,
        dst_h in 1u32..40,
    ) {
        let spec = ResizeSpec::for_image(&img, dst_w, dst_h, KernelKind::Nearest).unwrap();
        let out = resize_image(&img, &spec).unwrap();
        let src_labels = class_histogram(&img).labels();
        prop_assert!(class_histogram(&out).is_subset_of(&src_labels));
    }

    #[test]
    fn identity_resize_is_bit_exact_for_every_kernel(img in gray_strategy(12)) {
        for kernel in [KernelKind::Nearest, KernelKind::Bicubic, KernelKind::Lanczos3] {
            let spec = ResizeSpec::for_image(&img, img.width(), img.height(), kernel).unwrap();
            prop_assert_eq!(resize_image(&img, &spec).unwrap(), img.clone());
        }
    }

    #[test]
    fn constant_images_are_fixed_points(
        value in any::<u8>(),
        w in 2u32..12,
        h in 2u32..12,
        dst_w in 2u32..30,
        dst_h in 2u32..30,
    ) {
        let img = GrayImage::filled(w, h, value);
        for kernel in [KernelKind::Nearest, KernelKind::Bicubic, KernelKind::Lanczos3] {
            let spec = ResizeSpec::for_image(&img, dst_w, dst_h, kernel).unwrap();
            let out = resize_image(&img, &spec).unwrap();
            prop_assert!(out.samples().iter().all(|&v| v == value), "{kernel} moved a constant");
        }
    }

    #[test]
    fn separable_passes_match_the_direct_2d_evaluation(
        img in gray_strategy(10),
        dst_w in 2u32..24,
        dst_h in 2u32..24,
        lanczos in any::<bool>(),
    ) {
        let kernel = if lanczos { KernelKind::Lanczos3 } else { KernelKind::Bicubic };
        let spec = ResizeSpec::for_image(&img, dst_w, dst_h, kernel).unwrap();
        let fast = resize_kernel(&img, &spec).unwrap();
        let direct = resize_kernel_direct(&img, &spec);
        for (i, want) in direct.iter().enumerate() {
            let got = fast.samples()[i];
            prop_assert!((got - want).abs() < 1e-9, "pixel {i}: {got} vs {want}");
        }
    }

    #[test]
    fn five_step_output_is_always_canonical(plane in float_plane_strategy(16)) {
        let out = remove_extra_labels(&plane);
        prop_assert!(out.is_canonical());
        prop_assert!(audit(out.image(), &TRI_CLASS_LABELS).extra.is_empty());
    }

    #[test]
    fn eq1_threshold_is_idempotent(img in gray_strategy(16)) {
        let once = eq1_threshold(&img);
        let twice = eq1_threshold(once.image());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn mask_resize_strategies_never_widen_the_tri_class_set(
        mask in tri_mask_strategy(12),
        dst_w in 2u32..28,
        dst_h in 2u32..28,
        kernel_pick in 0u8..3,
        strategy_pick in 0u8..2,
    ) {
        let kernel = [KernelKind::Nearest, KernelKind::Bicubic, KernelKind::Lanczos3]
            [kernel_pick as usize];
        let strategy = [FilterStrategy::Eq1, FilterStrategy::FiveStep][strategy_pick as usize];
        let spec = ResizeSpec::for_image(mask.image(), dst_w, dst_h, kernel).unwrap();
        let out = mask_resize(&mask, &spec, strategy).unwrap();
        prop_assert!(out.is_canonical());
    }

    #[test]
    fn confusion_and_derived_scores_match_the_brute_force_oracle(
        gt in tri_mask_strategy(8),
        pred_samples in proptest::collection::vec(prop_oneof![Just(0u8), Just(128u8), Just(255u8)], 64),
    ) {
        let (w, h) = (gt.image().width(), gt.image().height());
        let pred = LabelMask::tri_class(GrayImage::from_fn(w, h, |x, y| {
            pred_samples[(y * w + x) as usize % pred_samples.len()]
        }));
        let cm = confusion(&gt, &pred).unwrap();
        let by_hand = confusion_by_hand(&gt, &pred);
        let labels = gt.canonical_labels();
        let mut trace = 0u64;
        for (i, &row) in labels.iter().enumerate() {
            for (j, &col) in labels.iter().enumerate() {
                prop_assert_eq!(cm.count(row, col), by_hand[i][j]);
            }
            trace += by_hand[i][i];
        }
        let report = class_metrics(&cm);
        let total = u64::from(w) * u64::from(h);
        prop_assert!((report.global_accuracy - trace as f64 / total as f64).abs() < 1e-15);

        // Dice is determined by IoU one-to-one.
        let d = dice(&gt, &pred).unwrap();
        for (c, (label, dv)) in report.per_class.iter().zip(&d.per_class) {
            prop_assert_eq!(c.label, *label);
            match (c.iou, dv) {
                (Some(iou), Some(dv)) => {
                    prop_assert!((dv - 2.0 * iou / (1.0 + iou)).abs() < 1e-12);
                }
                (None, None) => {}
                other => prop_assert!(false, "defined-ness mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn option_scores_stay_in_range_and_scale_correctly(
        values in proptest::collection::vec((0.1f64..400.0, 0.1f64..400.0), 1..24),
        scale in 0.25f64..4.0,
    ) {
        let record = |stack: usize, method: &str, v: f64| QuantRecord {
            stack_id: format!("s{stack}"),
            method: method.to_string(),
            scar_ml: v,
            scar_pct: (v / 4.1).min(100.0),
            mo_pct: (v / 400.0).min(100.0),
        };
        let manual: Vec<QuantRecord> = values.iter().enumerate()
            .map(|(i, (m, _))| record(i, "manual", *m)).collect();
        let auto: Vec<QuantRecord> = values.iter().enumerate()
            .map(|(i, (_, a))| record(i, "auto", *a)).collect();

        let n = values.len() as f64;
        let hits = option1(&manual, &auto, &OptionThresholds::default()).unwrap();
        for v in hits {
            prop_assert!((0.0..=100.0).contains(&v));
            // Percentages over n stacks are exact multiples of 100/n.
            let per = v / (100.0 / n);
            prop_assert!((per - per.round()).abs() < 1e-9, "{v} not a multiple of 100/{n}");
        }
        for v in option3(&manual, &auto).unwrap().into_iter().flatten() {
            prop_assert!((0.0..=100.0).contains(&v));
        }

        // Option 2 is a ratio of sums: scaling manual and automated values
        // together cancels out.
        let scaled = |rows: &[QuantRecord]| -> Vec<QuantRecord> {
            rows.iter().map(|r| QuantRecord {
                scar_ml: r.scar_ml * scale,
                scar_pct: r.scar_pct * scale.min(1.0),
                mo_pct: r.mo_pct * scale.min(1.0),
                ..r.clone()
            }).collect()
        };
        let base = option2(&manual, &auto).unwrap();
        let after = option2(&scaled(&manual), &scaled(&auto)).unwrap();
        for (b, a) in base.iter().zip(&after) {
            match (b, a) {
                (Some(b), Some(a)) => prop_assert!((b - a).abs() < 1e-9),
                other => prop_assert!(false, "defined-ness changed: {other:?}"),
            }
        }
    }

    #[test]
    fn tally_wins_are_bounded_and_fraction_consistent(
        table in proptest::collection::vec(
            proptest::collection::vec(0.0f64..100.0, 3),
            3,
        ),
    ) {
        use maskscale::quantcompare::OptionReport;
        let networks = ["a", "b", "c"];
        let reports: Vec<OptionReport> = (1..=3u8).map(|option| {
            let rows: Vec<Vec<f64>> = (0..3).map(|m| {
                (0..3).map(|n| table[m][(n + option as usize) % 3]).collect()
            }).collect();
            OptionReport::from_values(option, &networks, &rows).unwrap()
        }).collect();
        let t = tally(&[&reports[0], &reports[1], &reports[2]]).unwrap();
        let total: u32 = t.wins.iter().sum();
        prop_assert!(total >= 9, "every slot names at least one winner");
        for (&w, &f) in t.wins.iter().zip(&t.fractions) {
            prop_assert!(w <= 9);
            prop_assert!((f - f64::from(w) / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn split_is_a_partition_with_the_rounding_rule(
        n in 1usize..600,
        seed in any::<u64>(),
    ) {
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let parts = split((0..n as u32).collect(), &spec).unwrap();
        let expected_train = (0.6 * n as f64).round() as usize;
        let expected_val = ((0.2 * n as f64).round() as usize).min(n - expected_train);
        prop_assert_eq!(parts.train.len(), expected_train);
        prop_assert_eq!(parts.val.len(), expected_val);
        let mut all: Vec<u32> = parts.train.iter()
            .chain(&parts.val)
            .chain(&parts.test)
            .copied()
            .collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n as u32).collect::<Vec<_>>());
    }

    #[test]
    fn augmentation_preserves_canonicality_and_geometry(
        mask in tri_mask_strategy(12),
        reflect in any::<bool>(),
        dx in -10i32..=10,
        dy in -10i32..=10,
        fill in any::<u8>(),
    ) {
        let image = GrayImage::filled(mask.image().width(), mask.image().height(), 7);
        let pair = SamplePair::new("p".to_string(), image, mask).unwrap();
        let out = apply_augment(&pair, reflect, dx, dy, fill);
        prop_assert!(out.mask.is_canonical());
        prop_assert!(out.image.same_dimensions(out.mask.image()));

        // Reflection with no shift is an involution.
        if dx == 0 && dy == 0 && reflect {
            let back = apply_augment(&out, true, 0, 0, fill);
            prop_assert_eq!(back.image, pair.image);
            prop_assert_eq!(back.mask, pair.mask);
        }
    }
}
