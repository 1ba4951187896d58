//! Per-pixel soft constraints for the unknown region.
//!
//! Every unknown pixel gets an initial alpha, a confidence and a weight.
//! When the spatially nearest foreground/background boundary samples
//! explain the pixel color well (small compositing residual), the projected
//! alpha is used directly with full weight. Otherwise the KNN classifier
//! decides, and the alpha and confidence are derived from the feature
//! distance to the closest sample of the predicted class, with a reduced
//! weight.

use rayon::prelude::*;

use crate::error::{MattingError, Result};
use crate::features::FeatureField;
use crate::imaging::{Label, RgbImage, Trimap};
use crate::kdtree::KdTree;
use crate::knn::{ClassLabel, TrainedClassifier};

/// Weight for constraints derived from local sampling.
pub const LOCAL_SAMPLING_WEIGHT: f64 = 1.0;
/// Weight for constraints derived from the classifier.
pub const CLASSIFIER_WEIGHT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Known,
    LocalSampling,
    Classifier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchParams {
    /// Residual threshold (RGB Euclidean, `[0, 1]` scale) for accepting local sampling.
    pub epsilon: f64,
    /// Feature-distance scale of the classifier confidence.
    pub sigma_sq: f64,
    /// Enlargement coefficient of the classifier sigmoid.
    pub rho: f64,
}

impl Default for BranchParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            sigma_sq: 2.0,
            rho: 15.0,
        }
    }
}

impl BranchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.sigma_sq > 0.0 && self.rho > 0.0) {
            return Err(MattingError::InvalidParameter(format!(
                "branch parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintField {
    pub width: usize,
    pub height: usize,
    pub a_init: Vec<f64>,
    pub confidence: Vec<f64>,
    pub gamma: Vec<f64>,
    pub source: Vec<Source>,
}

impl ConstraintField {
    pub fn len(&self) -> usize {
        self.a_init.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_init.is_empty()
    }

    /// Drops every constraint weight to zero, leaving the values in place.
    pub fn disable(&mut self) {
        self.gamma.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn count(&self, source: Source) -> usize {
        self.source.iter().filter(|&&s| s == source).count()
    }
}

/// Opacity of `p` projected onto the segment from `b` to `f`, clamped to
/// `[0, 1]`. `None` when `f == b`.
pub fn project_alpha(p: [f64; 3], f: [f64; 3], b: [f64; 3]) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..3 {
        let fb = f[c] - b[c];
        num += (p[c] - b[c]) * fb;
        den += fb * fb;
    }
    if den == 0.0 {
        return None;
    }
    Some((num / den).clamp(0.0, 1.0))
}

/// `|p - (alpha f + (1 - alpha) b)|`.
pub fn residual(p: [f64; 3], f: [f64; 3], b: [f64; 3], alpha: f64) -> f64 {
    let mut s = 0.0;
    for c in 0..3 {
        let d = p[c] - alpha * f[c] - (1.0 - alpha) * b[c];
        s += d * d;
    }
    s.sqrt()
}

/// Classifier-branch confidence `exp(-dis / sigma_sq)`, or 1 for an exact match.
pub fn classifier_confidence(dis: f64, sigma_sq: f64) -> f64 {
    if dis == 0.0 {
        return 1.0;
    }
    // Kept strictly positive: a far-away match is weak evidence, not none.
    (-dis / sigma_sq).exp().max(f64::MIN_POSITIVE)
}

/// Classifier-branch initial alpha `1 / (1 + exp(rho * -flag / dis))`.
/// At `dis == 0` this is the limit: 1 for foreground, 0 for background.
pub fn classifier_alpha(flag: ClassLabel, dis: f64, rho: f64) -> f64 {
    let sign = flag.sign();
    if dis == 0.0 {
        return (1.0 + sign) / 2.0;
    }
    1.0 / (1.0 + (rho * -sign / dis).exp())
}

struct SpatialIndex {
    tree: KdTree,
    ids: Vec<usize>,
}

impl SpatialIndex {
    fn new(clf: &TrainedClassifier, label: ClassLabel) -> Self {
        let mut ids = Vec::new();
        let mut points = Vec::new();
        for (i, s) in clf.samples().samples().iter().enumerate() {
            if s.label == label {
                ids.push(i);
                points.extend_from_slice(&[s.position.0 as f64, s.position.1 as f64]);
            }
        }
        Self {
            tree: KdTree::new(2, points),
            ids,
        }
    }

    fn nearest(&self, x: usize, y: usize) -> usize {
        self.ids[self.tree.nearest(&[x as f64, y as f64], 1)[0].index]
    }
}

pub fn build_constraints(
    img: &RgbImage,
    tri: &Trimap,
    clf: &TrainedClassifier,
    features: &FeatureField,
    params: &BranchParams,
) -> Result<ConstraintField> {
    tri.check_matches(img)?;
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    if features.width() != w || features.height() != h {
        return Err(MattingError::DimensionMismatch(format!(
            "features are {}x{}, image is {w}x{h}",
            features.width(),
            features.height()
        )));
    }
    if features.dims() != clf.dims() {
        return Err(MattingError::FeatureLength(clf.dims(), features.dims()));
    }
    let samples = clf.samples().samples();
    if let Some(s) = samples
        .iter()
        .find(|s| s.position.0 >= w || s.position.1 >= h)
    {
        return Err(MattingError::DimensionMismatch(format!(
            "sample at {:?} lies outside the {w}x{h} image",
            s.position
        )));
    }

    let fg_index = SpatialIndex::new(clf, ClassLabel::Foreground);
    let bg_index = SpatialIndex::new(clf, ClassLabel::Background);
    let color_at = |id: usize| {
        let (x, y) = samples[id].position;
        img.pixel(x, y)
    };

    let records: Vec<(f64, f64, f64, Source)> = tri
        .labels()
        .par_iter()
        .enumerate()
        .map(|(i, &label)| -> Result<(f64, f64, f64, Source)> {
            if label != Label::Unknown {
                return Ok((label.beta(), 0.0, 0.0, Source::Known));
            }
            let (x, y) = (i % w, i / w);
            let p = img.color(i);
            let f = color_at(fg_index.nearest(x, y));
            let b = color_at(bg_index.nearest(x, y));
            if let Some(alpha) = project_alpha(p, f, b) {
                let s = residual(p, f, b, alpha);
                if s < params.epsilon {
                    return Ok((
                        alpha,
                        (-s).exp(),
                        LOCAL_SAMPLING_WEIGHT,
                        Source::LocalSampling,
                    ));
                }
            }
            let c = clf.classify_slice(features.get(i))?;
            let dis = match c.flag {
                ClassLabel::Foreground => c.nearest_f.distance,
                ClassLabel::Background => c.nearest_b.distance,
            };
            Ok((
                classifier_alpha(c.flag, dis, params.rho),
                classifier_confidence(dis, params.sigma_sq),
                CLASSIFIER_WEIGHT,
                Source::Classifier,
            ))
        })
        .collect::<Result<_>>()?;

    let mut field = ConstraintField {
        width: w,
        height: h,
        a_init: Vec::with_capacity(records.len()),
        confidence: Vec::with_capacity(records.len()),
        gamma: Vec::with_capacity(records.len()),
        source: Vec::with_capacity(records.len()),
    };
    for (a, c, g, s) in records {
        field.a_init.push(a);
        field.confidence.push(c);
        field.gamma.push(g);
        field.source.push(s);
    }
    Ok(field)
}
