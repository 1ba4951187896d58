//! KNN foreground/background classifier trained on trimap boundary pixels.
//!
//! Decision rule: a query is foreground when the mean distance to its `k`
//! nearest foreground samples is strictly smaller than the mean distance to
//! its `k` nearest background samples; every other case is background.
//! `k` is picked by stratified cross-validation, and the feature space is
//! widened with pixel coordinates when colour alone classifies poorly.

use std::fmt;

use rayon::prelude::*;

use crate::error::{MattingError, Result};
use crate::features::{FeatureField, FeatureVector};
use crate::imaging::{Label, Trimap};
use crate::kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Foreground,
    Background,
}

impl ClassLabel {
    /// `+1` for foreground, `-1` for background.
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::Foreground => 1.0,
            ClassLabel::Background => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub feature: FeatureVector,
    pub label: ClassLabel,
    /// Pixel `(x, y)` the sample was taken from.
    pub position: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    samples: Vec<Sample>,
    dims: usize,
}

impl SampleSet {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let dims = samples.first().map_or(0, |s| s.feature.len());
        if let Some(bad) = samples.iter().find(|s| s.feature.len() != dims) {
            return Err(MattingError::FeatureLength(dims, bad.feature.len()));
        }
        let set = Self { samples, dims };
        let (fg, bg) = set.class_counts();
        if fg == 0 || bg == 0 {
            return Err(MattingError::UnusableTrimap(format!(
                "{fg} foreground and {bg} background samples"
            )));
        }
        Ok(set)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let fg = self
            .samples
            .iter()
            .filter(|s| s.label == ClassLabel::Foreground)
            .count();
        (fg, self.samples.len() - fg)
    }
}

/// Known pixels with at least one in-bounds 8-neighbour of a different label.
pub fn collect_boundary_samples(features: &FeatureField, tri: &Trimap) -> Result<SampleSet> {
    let (w, h) = (tri.width(), tri.height());
    if features.width() != w || features.height() != h {
        return Err(MattingError::DimensionMismatch(format!(
            "features are {}x{}, trimap is {w}x{h}",
            features.width(),
            features.height()
        )));
    }
    if tri.count(Label::Foreground) == 0 || tri.count(Label::Background) == 0 {
        return Err(MattingError::UnusableTrimap(
            "trimap needs both foreground and background pixels".into(),
        ));
    }
    let mut samples = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let label = tri.label(x, y);
            let class = match label {
                Label::Foreground => ClassLabel::Foreground,
                Label::Background => ClassLabel::Background,
                Label::Unknown => continue,
            };
            if on_boundary(tri, x, y, label) {
                samples.push(Sample {
                    feature: features.vector(y * w + x),
                    label: class,
                    position: (x, y),
                });
            }
        }
    }
    SampleSet::new(samples)
}

fn on_boundary(tri: &Trimap, x: usize, y: usize, label: Label) -> bool {
    let (w, h) = (tri.width() as isize, tri.height() as isize);
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx >= 0
                && ny >= 0
                && nx < w
                && ny < h
                && tri.label(nx as usize, ny as usize) != label
            {
                return true;
            }
        }
    }
    false
}

/// Exact nearest-neighbour index over the samples of one class.
#[derive(Debug, Clone)]
struct ClassIndex {
    tree: KdTree,
    ids: Vec<usize>,
}

impl ClassIndex {
    fn new<'a>(dims: usize, members: impl Iterator<Item = (usize, &'a [f64])>) -> Self {
        let mut ids = Vec::new();
        let mut points = Vec::new();
        for (id, f) in members {
            ids.push(id);
            points.extend_from_slice(f);
        }
        Self {
            tree: KdTree::new(dims, points),
            ids,
        }
    }

    /// Up to `k` `(sample id, distance)` pairs in ascending distance order.
    fn nearest(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        self.tree
            .nearest(query, k)
            .into_iter()
            .map(|h| (self.ids[h.index], h.dist_sq.sqrt()))
            .collect()
    }
}

fn mean_of_first(dists: &[(usize, f64)], k: usize) -> f64 {
    let take = k.min(dists.len());
    let mut s = 0.0;
    for &(_, d) in &dists[..take] {
        s += d;
    }
    s / take as f64
}

fn decide(dist_f: f64, dist_b: f64) -> ClassLabel {
    if dist_f < dist_b {
        ClassLabel::Foreground
    } else {
        ClassLabel::Background
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Index into the classifier's sample list.
    pub sample: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub flag: ClassLabel,
    pub dist_f: f64,
    pub dist_b: f64,
    pub nearest_f: Neighbor,
    pub nearest_b: Neighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturePolicy {
    Auto,
    Force9,
    Force11,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub policy: FeaturePolicy,
    /// Cross-validated accuracy below which coordinates are tried.
    pub accuracy_floor: f64,
    pub k_max: usize,
    pub folds: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            policy: FeaturePolicy::Auto,
            accuracy_floor: 0.85,
            k_max: 15,
            folds: 5,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(MattingError::InvalidParameter("k_max must be >= 1".into()));
        }
        if self.folds < 2 {
            return Err(MattingError::InvalidParameter(
                "cross-validation needs at least 2 folds".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.accuracy_floor) {
            return Err(MattingError::InvalidParameter(format!(
                "accuracy floor {} is outside [0, 1]",
                self.accuracy_floor
            )));
        }
        Ok(())
    }

    /// Smallest per-class sample count that leaves every fold non-empty.
    pub fn min_per_class(&self) -> usize {
        2 * self.folds
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KScore {
    pub k: usize,
    pub accuracy: f64,
}

/// Cross-validation outcome for one feature dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub dims: usize,
    pub scores: Vec<KScore>,
    pub best: KScore,
}

/// Stratified `folds`-fold cross-validation over odd `k <= k_max`.
///
/// Within each class the i-th sample goes to fold `i mod folds`. Candidate
/// `k` values are capped by the smallest per-class training split. Accuracy
/// for a `k` is the mean of its per-fold accuracies; the best `k` is the
/// most accurate, smaller `k` winning ties.
pub fn cross_validate(samples: &SampleSet, k_max: usize, folds: usize) -> Result<CvReport> {
    if folds < 2 {
        return Err(MattingError::InvalidParameter(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    let (fg, bg) = samples.class_counts();
    if fg < 2 * folds || bg < 2 * folds {
        return Err(MattingError::DegenerateSampleSet {
            foreground: fg,
            background: bg,
            required: 2 * folds,
        });
    }

    let mut fold_of = vec![0usize; samples.len()];
    let (mut nf, mut nb) = (0usize, 0usize);
    for (i, s) in samples.samples().iter().enumerate() {
        let counter = match s.label {
            ClassLabel::Foreground => &mut nf,
            ClassLabel::Background => &mut nb,
        };
        fold_of[i] = *counter % folds;
        *counter += 1;
    }
    // Largest fold holds ceil(n / folds) of a class.
    let min_train = (fg - fg.div_ceil(folds)).min(bg - bg.div_ceil(folds));
    let candidates: Vec<usize> = (1..=k_max.min(min_train)).step_by(2).collect();
    let kmax = *candidates.last().expect("min_train >= 1");

    let dims = samples.dims();
    let all = samples.samples();
    let mut per_fold_acc = vec![vec![0.0; candidates.len()]; folds];
    for (fold, acc) in per_fold_acc.iter_mut().enumerate() {
        let fold_of = &fold_of;
        let train = |label: ClassLabel| {
            ClassIndex::new(
                dims,
                all.iter()
                    .enumerate()
                    .filter(move |(i, s)| fold_of[*i] != fold && s.label == label)
                    .map(|(i, s)| (i, s.feature.as_slice())),
            )
        };
        let (fg_index, bg_index) = (train(ClassLabel::Foreground), train(ClassLabel::Background));
        let held: Vec<usize> = (0..all.len()).filter(|&i| fold_of[i] == fold).collect();
        let correct: Vec<Vec<bool>> = held
            .par_iter()
            .map(|&i| {
                let q = all[i].feature.as_slice();
                let df = fg_index.nearest(q, kmax);
                let db = bg_index.nearest(q, kmax);
                candidates
                    .iter()
                    .map(|&k| decide(mean_of_first(&df, k), mean_of_first(&db, k)) == all[i].label)
                    .collect()
            })
            .collect();
        for (c, slot) in acc.iter_mut().enumerate() {
            let hits = correct.iter().filter(|row| row[c]).count();
            *slot = hits as f64 / held.len() as f64;
        }
    }

    let scores: Vec<KScore> = candidates
        .iter()
        .enumerate()
        .map(|(c, &k)| KScore {
            k,
            accuracy: per_fold_acc.iter().map(|a| a[c]).sum::<f64>() / folds as f64,
        })
        .collect();
    let mut best = scores[0];
    for s in &scores[1..] {
        if s.accuracy > best.accuracy {
            best = *s;
        }
    }
    Ok(CvReport { dims, scores, best })
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    samples: SampleSet,
    k: usize,
    cv_accuracy: f64,
    used_coords: bool,
    reports: Vec<CvReport>,
    fg_index: ClassIndex,
    bg_index: ClassIndex,
}

impl TrainedClassifier {
    /// A classifier over `samples` with a fixed odd `k`, no cross-validation.
    pub fn new(samples: SampleSet, k: usize) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) || k > samples.len() {
            return Err(MattingError::InvalidParameter(format!(
                "k must be odd and within 1..={}, got {k}",
                samples.len()
            )));
        }
        let dims = samples.dims();
        let index = |label: ClassLabel| {
            ClassIndex::new(
                dims,
                samples
                    .samples()
                    .iter()
                    .enumerate()
                    .filter(move |(_, s)| s.label == label)
                    .map(|(i, s)| (i, s.feature.as_slice())),
            )
        };
        let (fg_index, bg_index) = (index(ClassLabel::Foreground), index(ClassLabel::Background));
        let used_coords = dims == crate::features::SPATIAL_DIMS;
        Ok(Self {
            samples,
            k,
            cv_accuracy: f64::NAN,
            used_coords,
            reports: Vec::new(),
            fg_index,
            bg_index,
        })
    }

    fn from_report(samples: SampleSet, report: CvReport, reports: Vec<CvReport>) -> Result<Self> {
        let mut clf = Self::new(samples, report.best.k)?;
        clf.cv_accuracy = report.best.accuracy;
        clf.reports = reports;
        Ok(clf)
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Cross-validated accuracy of the chosen `k`; NaN for [`TrainedClassifier::new`].
    pub fn cv_accuracy(&self) -> f64 {
        self.cv_accuracy
    }

    pub fn used_coords(&self) -> bool {
        self.used_coords
    }

    pub fn dims(&self) -> usize {
        self.samples.dims()
    }

    /// Every cross-validation run performed during training, in order.
    pub fn reports(&self) -> &[CvReport] {
        &self.reports
    }

    pub fn classify(&self, x: &FeatureVector) -> Result<Classification> {
        self.classify_slice(x.as_slice())
    }

    pub fn classify_slice(&self, x: &[f64]) -> Result<Classification> {
        if x.len() != self.dims() {
            return Err(MattingError::FeatureLength(self.dims(), x.len()));
        }
        let df = self.fg_index.nearest(x, self.k);
        let db = self.bg_index.nearest(x, self.k);
        let (dist_f, dist_b) = (mean_of_first(&df, self.k), mean_of_first(&db, self.k));
        Ok(Classification {
            flag: decide(dist_f, dist_b),
            dist_f,
            dist_b,
            nearest_f: Neighbor {
                sample: df[0].0,
                distance: df[0].1,
            },
            nearest_b: Neighbor {
                sample: db[0].0,
                distance: db[0].1,
            },
        })
    }
}

impl fmt::Display for TrainedClassifier {
    /// Plain-text k-score table.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (fg, bg) = self.samples.class_counts();
        writeln!(f, "boundary samples: {fg} foreground, {bg} background")?;
        for r in &self.reports {
            writeln!(f, "{}D cross-validation:", r.dims)?;
            writeln!(f, "  {:>3}  {:>8}", "k", "accuracy")?;
            for s in &r.scores {
                let mark = if s.k == r.best.k { " *" } else { "" };
                writeln!(f, "  {:>3}  {:>8.4}{mark}", s.k, s.accuracy)?;
            }
        }
        write!(
            f,
            "selected: {}D, k = {}, accuracy = {:.4}",
            self.dims(),
            self.k,
            self.cv_accuracy
        )
    }
}

/// Collects boundary samples and cross-validates `k`. Under
/// [`FeaturePolicy::Auto`] the 9D space is tried first and the 11D space
/// only when 9D accuracy falls below the floor; 11D is kept only if it
/// scores strictly higher.
pub fn train(
    features9: &FeatureField,
    features11: &FeatureField,
    tri: &Trimap,
    params: &TrainParams,
) -> Result<TrainedClassifier> {
    params.validate()?;
    let run = |features: &FeatureField| -> Result<(SampleSet, CvReport)> {
        let samples = collect_boundary_samples(features, tri)?;
        let report = cross_validate(&samples, params.k_max, params.folds)?;
        Ok((samples, report))
    };
    match params.policy {
        FeaturePolicy::Force9 => {
            let (s, r) = run(features9)?;
            TrainedClassifier::from_report(s, r.clone(), vec![r])
        }
        FeaturePolicy::Force11 => {
            let (s, r) = run(features11)?;
            TrainedClassifier::from_report(s, r.clone(), vec![r])
        }
        FeaturePolicy::Auto => {
            let (s9, r9) = run(features9)?;
            if r9.best.accuracy >= params.accuracy_floor {
                return TrainedClassifier::from_report(s9, r9.clone(), vec![r9]);
            }
            let (s11, r11) = run(features11)?;
            let reports = vec![r9.clone(), r11.clone()];
            if r11.best.accuracy > r9.best.accuracy {
                TrainedClassifier::from_report(s11, r11, reports)
            } else {
                TrainedClassifier::from_report(s9, r9, reports)
            }
        }
    }
}
