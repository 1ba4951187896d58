//! Trimap expansion: unknown pixels that sit close to a known pixel of
//! nearly the same color are absorbed into that known region before the
//! rest of the pipeline runs.

use rayon::prelude::*;

use crate::error::{MattingError, Result};
use crate::imaging::{Label, RgbImage, Trimap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionParams {
    /// Strict upper bound on the Euclidean pixel distance to a known pixel.
    pub spatial_threshold: f64,
    /// Color budget, in 0..255 RGB units, shared with the spatial distance.
    pub color_threshold: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self {
            spatial_threshold: 9.0,
            color_threshold: 9.0,
        }
    }
}

impl ExpansionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.spatial_threshold > 0.0 && self.color_threshold > 0.0) {
            return Err(MattingError::InvalidParameter(format!(
                "expansion thresholds must be positive (spatial {}, color {})",
                self.spatial_threshold, self.color_threshold
            )));
        }
        Ok(())
    }
}

/// Relabels unknown pixels in a single pass against the input labels.
///
/// An unknown `p` joins class `K` when some `q` in `K` has
/// `D(p, q) < spatial` and `|I_p - I_q| <= color - D(p, q)`. Pixels that
/// qualify for both classes stay unknown.
pub fn expand_trimap(img: &RgbImage, tri: &Trimap, params: &ExpansionParams) -> Result<Trimap> {
    tri.check_matches(img)?;
    params.validate()?;

    let (w, h) = (tri.width(), tri.height());
    // |dx| <= reach covers every offset with distance < spatial_threshold.
    let reach = (params.spatial_threshold.ceil() as usize).saturating_sub(1);
    let mut offsets = Vec::new();
    for dy in -(reach as isize)..=reach as isize {
        for dx in -(reach as isize)..=reach as isize {
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            if d < params.spatial_threshold {
                offsets.push((dx, dy, d));
            }
        }
    }

    let labels = tri.labels();
    let out: Vec<Label> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            if labels[i] != Label::Unknown {
                return labels[i];
            }
            let (px, py) = ((i % w) as isize, (i / w) as isize);
            let color_p = img.color(i);
            let mut fg = false;
            let mut bg = false;
            for &(dx, dy, d) in &offsets {
                let (qx, qy) = (px + dx, py + dy);
                if qx < 0 || qy < 0 || qx >= w as isize || qy >= h as isize {
                    continue;
                }
                let j = qy as usize * w + qx as usize;
                let label = labels[j];
                let pending = match label {
                    Label::Foreground => !fg,
                    Label::Background => !bg,
                    Label::Unknown => false,
                };
                if !pending {
                    continue;
                }
                if color_distance_255(color_p, img.color(j))
                    <= params.color_threshold - d + COLOR_SLACK
                {
                    match label {
                        Label::Foreground => fg = true,
                        _ => bg = true,
                    }
                    if fg && bg {
                        break;
                    }
                }
            }
            match (fg, bg) {
                (true, false) => Label::Foreground,
                (false, true) => Label::Background,
                _ => Label::Unknown,
            }
        })
        .collect();
    Trimap::new(w, h, out)
}

/// Absorbs rounding in 8-bit colour differences.
const COLOR_SLACK: f64 = 1e-9;

fn color_distance_255(a: [f64; 3], b: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for c in 0..3 {
        let d = (a[c] - b[c]) * 255.0;
        s += d * d;
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant(w: usize, h: usize) -> RgbImage {
        RgbImage::from_fn(w, h, |_, _| [0.3, 0.6, 0.9]).unwrap()
    }

    #[test]
    fn near_foreground_is_absorbed() {
        let img = constant(12, 1);
        let tri = Trimap::from_fn(12, 1, |x, _| {
            if x == 0 {
                Label::Foreground
            } else {
                Label::Unknown
            }
        })
        .unwrap();
        let out = expand_trimap(&img, &tri, &ExpansionParams::default()).unwrap();
        assert_eq!(out.label(3, 0), Label::Foreground);
        assert_eq!(out.label(8, 0), Label::Foreground);
        // Distance exactly 9 fails the strict inequality.
        assert_eq!(out.label(9, 0), Label::Unknown);
        assert_eq!(out.label(11, 0), Label::Unknown);
    }

    #[test]
    fn pixel_near_both_classes_stays_unknown() {
        let img = constant(5, 1);
        let tri = Trimap::from_fn(5, 1, |x, _| match x {
            0 => Label::Foreground,
            4 => Label::Background,
            _ => Label::Unknown,
        })
        .unwrap();
        let out = expand_trimap(&img, &tri, &ExpansionParams::default()).unwrap();
        assert_eq!(out.labels()[1..4], [Label::Unknown; 3]);
    }

    #[test]
    fn color_budget_shrinks_with_distance() {
        // 6 units of color difference: allowed at distance 3, not at 4.
        let img = RgbImage::from_fn(6, 1, |x, _| {
            if x == 0 {
                [0.5, 0.5, 0.5]
            } else {
                [0.5 + 6.0 / 255.0, 0.5, 0.5]
            }
        })
        .unwrap();
        let tri = Trimap::from_fn(6, 1, |x, _| {
            if x == 0 {
                Label::Foreground
            } else {
                Label::Unknown
            }
        })
        .unwrap();
        let out = expand_trimap(&img, &tri, &ExpansionParams::default()).unwrap();
        assert_eq!(out.label(3, 0), Label::Foreground);
        assert_eq!(out.label(4, 0), Label::Unknown);
    }

    #[test]
    fn two_clusters_match_brute_force() {
        // Left half red, right half green; a foreground blob sits in the red half.
        let (w, h) = (16, 16);
        let img = RgbImage::from_fn(w, h, |x, y| {
            let jitter = ((x * 7 + y * 13) % 5) as f64 / 255.0;
            if x < 8 {
                [0.8 + jitter, 0.1, 0.1]
            } else {
                [0.1, 0.8 - jitter, 0.1]
            }
        })
        .unwrap();
        let tri = Trimap::from_fn(w, h, |x, y| {
            if (3..6).contains(&x) && (6..10).contains(&y) {
                Label::Foreground
            } else if x == 15 && y == 0 {
                Label::Background
            } else {
                Label::Unknown
            }
        })
        .unwrap();
        let params = ExpansionParams::default();
        let out = expand_trimap(&img, &tri, &params).unwrap();

        // Independent check over every (p, q) pair.
        for p in 0..w * h {
            if tri.labels()[p] != Label::Unknown {
                assert_eq!(out.labels()[p], tri.labels()[p]);
                continue;
            }
            let hits = |class: Label| {
                (0..w * h).any(|q| {
                    if tri.labels()[q] != class {
                        return false;
                    }
                    let dx = (p % w) as f64 - (q % w) as f64;
                    let dy = (p / w) as f64 - (q / w) as f64;
                    let d = (dx * dx + dy * dy).sqrt();
                    let (a, b) = (img.color(p), img.color(q));
                    let c = ((0..3).map(|k| ((a[k] - b[k]) * 255.0).powi(2)).sum::<f64>()).sqrt();
                    d < 9.0 && c <= 9.0 - d
                })
            };
            let want = match (hits(Label::Foreground), hits(Label::Background)) {
                (true, false) => Label::Foreground,
                (false, true) => Label::Background,
                _ => Label::Unknown,
            };
            assert_eq!(out.labels()[p], want, "pixel {p}");
        }
        // Green pixels must never join the red foreground.
        for y in 0..h {
            for x in 8..w {
                assert_ne!(out.label(x, y), Label::Foreground);
            }
        }
    }

    #[test]
    fn rejects_mismatch_and_bad_params() {
        let img = constant(4, 4);
        let tri = Trimap::new(4, 3, vec![Label::Unknown; 12]).unwrap();
        assert!(matches!(
            expand_trimap(&img, &tri, &ExpansionParams::default()),
            Err(MattingError::DimensionMismatch(_))
        ));
        let tri = Trimap::new(4, 4, vec![Label::Unknown; 16]).unwrap();
        let bad = ExpansionParams {
            spatial_threshold: 0.0,
            color_threshold: 9.0,
        };
        assert!(expand_trimap(&img, &tri, &bad).is_err());
    }

    fn arb_case() -> impl Strategy<Value = (RgbImage, Trimap)> {
        (2usize..10, 2usize..10).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(0u8..4, w * h * 3),
                proptest::collection::vec(0u8..3, w * h),
            )
                .prop_map(move |(colors, labels)| {
                    let img = RgbImage::new(
                        w,
                        h,
                        colors.iter().map(|&c| f64::from(c) * 3.0 / 255.0).collect(),
                    )
                    .unwrap();
                    let tri = Trimap::new(
                        w,
                        h,
                        labels
                            .iter()
                            .map(|&l| match l {
                                0 => Label::Foreground,
                                1 => Label::Background,
                                _ => Label::Unknown,
                            })
                            .collect(),
                    )
                    .unwrap();
                    (img, tri)
                })
        })
    }

    proptest! {
        #[test]
        fn known_fixed_and_unknown_shrinks((img, tri) in arb_case()) {
            let out = expand_trimap(&img, &tri, &ExpansionParams::default()).unwrap();
            for (a, b) in tri.labels().iter().zip(out.labels()) {
                if a.is_known() {
                    prop_assert_eq!(a, b);
                }
                if *b == Label::Unknown {
                    prop_assert_eq!(*a, Label::Unknown);
                }
            }
        }

        #[test]
        fn swapping_classes_commutes((img, tri) in arb_case()) {
            let p = ExpansionParams::default();
            let a = expand_trimap(&img, &tri.swapped(), &p).unwrap();
            let b = expand_trimap(&img, &tri, &p).unwrap().swapped();
            prop_assert_eq!(a, b);
        }
    }
}
