use matting_core::imaging::{decode_matte, decode_trimap, encode_matte, encode_trimap};
use matting_core::pipeline::{build_system, derive_constraints, prepare_trimap};
use matting_core::solver::solve_raw;
use matting_core::{run, AlphaMatte, Label, Mode, PipelineConfig, RgbImage, Trimap};
use proptest::prelude::*;

/// Two colour clusters split at `edge` with per-pixel jitter, and a trimap
/// whose unknown band straddles the edge.
fn scene(w: usize, h: usize, edge: usize, jitter: &[f64]) -> (RgbImage, Trimap) {
    let img = RgbImage::from_fn(w, h, |x, y| {
        let j = jitter[(y * w + x) % jitter.len()];
        if x < edge {
            [0.8 + j, 0.3, 0.2 - j]
        } else {
            [0.2, 0.3 + j, 0.8 - j]
        }
    })
    .unwrap();
    let tri = Trimap::from_fn(w, h, |x, _| {
        if x + 3 < edge {
            Label::Foreground
        } else if x > edge + 2 {
            Label::Background
        } else {
            Label::Unknown
        }
    })
    .unwrap();
    (img, tri)
}

fn scene_strategy() -> impl Strategy<Value = (RgbImage, Trimap)> {
    (16usize..28, 12usize..20, 0usize..4)
        .prop_flat_map(|(w, h, shift)| {
            let edge = w / 2 + shift - 2;
            (
                Just((w, h, edge)),
                proptest::collection::vec(-0.05..0.05f64, 7..13),
            )
        })
        .prop_map(|((w, h, edge), jitter)| scene(w, h, edge, &jitter))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn repeated_runs_are_bit_identical((img, tri) in scene_strategy()) {
        let cfg = PipelineConfig::default();
        let a = run(&img, &tri, &cfg).unwrap();
        let b = run(&img, &tri, &cfg).unwrap();
        let same = a.raw_alpha.iter().zip(&b.raw_alpha).all(|(x, y)| x.to_bits() == y.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn baseline_equals_zero_weight((img, tri) in scene_strategy()) {
        let cfg = PipelineConfig::default();
        let prepared = prepare_trimap(&img, &tri, &cfg).unwrap();
        let (_, mut field) = derive_constraints(&img, &prepared, &cfg).unwrap();
        field.disable();
        let sys = build_system(&img, &prepared, Some(&field), &cfg).unwrap();
        let zeroed = solve_raw(&sys, &cfg.solver).unwrap();
        let base = run(&img, &tri, &PipelineConfig { mode: Mode::CfBaseline, ..cfg }).unwrap();
        let same = zeroed.alpha.iter().zip(&base.raw_alpha).all(|(x, y)| x.to_bits() == y.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn matte_in_range_and_known_pixels_follow_trimap((img, tri) in scene_strategy()) {
        let out = run(&img, &tri, &PipelineConfig::default()).unwrap();
        prop_assert!(out.matte.alpha.iter().all(|a| (0.0..=1.0).contains(a)));
        for (a, l) in out.matte.alpha.iter().zip(out.trimap.labels()) {
            if l.is_known() {
                prop_assert!((a - l.beta()).abs() < 0.05, "alpha {} for {:?}", a, l);
            }
        }
        prop_assert!(out.relative_residual <= PipelineConfig::default().solver.tolerance);
    }

    #[test]
    fn png_round_trips(alpha in proptest::collection::vec(0u8..=255, 30), labels in proptest::collection::vec(0u8..3, 30)) {
        let m = AlphaMatte::new(6, 5, alpha.iter().map(|&v| v as f64 / 255.0).collect()).unwrap();
        let back = decode_matte(&encode_matte(&m).unwrap()).unwrap();
        prop_assert_eq!(&back, &m);

        let lab = |v: u8| [Label::Background, Label::Unknown, Label::Foreground][v as usize];
        let t = Trimap::new(6, 5, labels.iter().map(|&v| lab(v)).collect()).unwrap();
        prop_assert_eq!(decode_trimap(&encode_trimap(&t).unwrap()).unwrap(), t);
    }
}
