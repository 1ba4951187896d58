//! End-to-end matting: trimap expansion, features, classifier, constraints,
//! Laplacian and solve.

use std::fmt;

use log::info;

use crate::constraints::{build_constraints, BranchParams, ConstraintField, Source};
use crate::error::MattingError;
use crate::features::build_features;
use crate::imaging::{gradients, to_lab, AlphaMatte, RgbImage, Trimap};
use crate::knn::{train, TrainParams, TrainedClassifier};
use crate::laplacian::{build_laplacian, LaplacianParams};
use crate::preprocess::{expand_trimap, ExpansionParams};
use crate::solver::{assemble_system, solve_raw, MattingSystem, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Laplacian plus trimap data term plus classifier / sampling constraints.
    #[default]
    Augmented,
    /// Laplacian plus trimap data term only.
    CfBaseline,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Augmented => "augmented",
            Mode::CfBaseline => "cf-baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    /// `None` skips trimap expansion.
    pub preprocess: Option<ExpansionParams>,
    pub train: TrainParams,
    pub branch: BranchParams,
    pub laplacian: LaplacianParams,
    pub lambda: f64,
    pub solver: SolverOptions,
    /// Keep the assembled system in the output.
    pub keep_system: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Augmented,
            preprocess: Some(ExpansionParams::default()),
            train: TrainParams::default(),
            branch: BranchParams::default(),
            laplacian: LaplacianParams::default(),
            lambda: 100.0,
            solver: SolverOptions::default(),
            keep_system: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Decode,
    Preprocess,
    Features,
    Train,
    Constraints,
    Laplacian,
    Solve,
    Encode,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Decode => "decode",
            Stage::Preprocess => "preprocess",
            Stage::Features => "features",
            Stage::Train => "train",
            Stage::Constraints => "constraints",
            Stage::Laplacian => "laplacian",
            Stage::Solve => "solve",
            Stage::Encode => "encode",
            Stage::Evaluate => "evaluate",
        })
    }
}

/// An error tagged with the stage that produced it.
#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: MattingError,
}

impl PipelineError {
    pub fn new(stage: Stage, source: MattingError) -> Self {
        Self { stage, source }
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T, MattingError> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Clamped matte.
    pub matte: AlphaMatte,
    /// Solver output before clamping.
    pub raw_alpha: Vec<f64>,
    /// Trimap after expansion (equal to the input when expansion is off).
    pub trimap: Trimap,
    pub classifier: Option<TrainedClassifier>,
    pub constraints: Option<ConstraintField>,
    pub system: Option<MattingSystem>,
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn validate_config(cfg: &PipelineConfig) -> Result<(), MattingError> {
    if let Some(p) = &cfg.preprocess {
        p.validate()?;
    }
    cfg.train.validate()?;
    cfg.branch.validate()?;
    cfg.laplacian.validate()?;
    if !cfg.lambda.is_finite() || cfg.lambda <= 0.0 {
        return Err(MattingError::InvalidParameter(format!(
            "lambda must be positive, got {}",
            cfg.lambda
        )));
    }
    if cfg.solver.tolerance.is_nan()
        || cfg.solver.tolerance <= 0.0
        || cfg.solver.max_iterations == 0
    {
        return Err(MattingError::InvalidParameter(format!(
            "bad solver options: {:?}",
            cfg.solver
        )));
    }
    Ok(())
}

/// Applies trimap expansion if configured.
pub fn prepare_trimap(
    img: &RgbImage,
    tri: &Trimap,
    cfg: &PipelineConfig,
) -> Result<Trimap, PipelineError> {
    tri.check_matches(img).at(Stage::Preprocess)?;
    match &cfg.preprocess {
        Some(p) => {
            let out = expand_trimap(img, tri, p).at(Stage::Preprocess)?;
            info!(
                "trimap expansion: {} -> {} unknown pixels",
                tri.count(crate::imaging::Label::Unknown),
                out.count(crate::imaging::Label::Unknown)
            );
            Ok(out)
        }
        None => Ok(tri.clone()),
    }
}

/// Features, classifier training and per-pixel constraints for an already
/// prepared trimap.
pub fn derive_constraints(
    img: &RgbImage,
    tri: &Trimap,
    cfg: &PipelineConfig,
) -> Result<(TrainedClassifier, ConstraintField), PipelineError> {
    let lab = to_lab(img);
    let grads = gradients(&lab);
    let f9 = build_features(&lab, &grads, false).at(Stage::Features)?;
    let f11 = build_features(&lab, &grads, true).at(Stage::Features)?;
    let clf = train(&f9, &f11, tri, &cfg.train).at(Stage::Train)?;
    info!(
        "classifier: k={} dims={} cv accuracy {:.4}",
        clf.k(),
        clf.dims(),
        clf.cv_accuracy()
    );
    let features = if clf.used_coords() { &f11 } else { &f9 };
    let field = build_constraints(img, tri, &clf, features, &cfg.branch).at(Stage::Constraints)?;
    info!(
        "constraints: {} local sampling, {} classifier",
        field.count(Source::LocalSampling),
        field.count(Source::Classifier)
    );
    Ok((clf, field))
}

/// Builds the linear system for a prepared trimap. `constraints: None`
/// yields the baseline system.
pub fn build_system(
    img: &RgbImage,
    tri: &Trimap,
    constraints: Option<&ConstraintField>,
    cfg: &PipelineConfig,
) -> Result<MattingSystem, PipelineError> {
    let lap = build_laplacian(img, &cfg.laplacian).at(Stage::Laplacian)?;
    assemble_system(lap, tri, constraints, cfg.lambda).at(Stage::Solve)
}

pub fn run(
    img: &RgbImage,
    tri: &Trimap,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    validate_config(cfg).at(Stage::Preprocess)?;
    let trimap = prepare_trimap(img, tri, cfg)?;
    let (classifier, constraints) = match cfg.mode {
        Mode::Augmented => {
            let (c, f) = derive_constraints(img, &trimap, cfg)?;
            (Some(c), Some(f))
        }
        Mode::CfBaseline => (None, None),
    };
    let system = build_system(img, &trimap, constraints.as_ref(), cfg)?;
    let outcome = solve_raw(&system, &cfg.solver).at(Stage::Solve)?;
    info!(
        "{} solve: {} iterations, relative residual {:e}",
        cfg.mode, outcome.iterations, outcome.relative_residual
    );
    let matte = AlphaMatte::new(img.width(), img.height(), outcome.alpha.clone())
        .at(Stage::Solve)?
        .clamped();
    Ok(PipelineOutput {
        matte,
        raw_alpha: outcome.alpha,
        trimap,
        classifier,
        constraints,
        system: cfg.keep_system.then_some(system),
        iterations: outcome.iterations,
        relative_residual: outcome.relative_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Label;

    fn scene() -> (RgbImage, Trimap) {
        let (w, h) = (24, 20);
        let img = RgbImage::from_fn(w, h, |x, y| {
            let t = ((x * 7 + y * 3) % 11) as f64 / 200.0;
            if x < 12 {
                [0.8 + t, 0.2, 0.1]
            } else {
                [0.1, 0.2 + t, 0.8]
            }
        })
        .unwrap();
        let tri = Trimap::from_fn(w, h, |x, _| match x {
            0..=8 => Label::Foreground,
            15.. => Label::Background,
            _ => Label::Unknown,
        })
        .unwrap();
        (img, tri)
    }

    #[test]
    fn both_modes_run() {
        let (img, tri) = scene();
        for mode in [Mode::Augmented, Mode::CfBaseline] {
            let cfg = PipelineConfig {
                mode,
                ..Default::default()
            };
            let out = run(&img, &tri, &cfg).unwrap();
            assert!(out.matte.alpha.iter().all(|a| (0.0..=1.0).contains(a)));
            assert_eq!(out.classifier.is_some(), mode == Mode::Augmented);
            assert!(out.system.is_none());
            assert!(out.relative_residual <= cfg.solver.tolerance);
            // Sharp colour edge between x=11 and x=12.
            assert!(out.matte.alpha[5 * 24 + 10] > 0.9);
            assert!(out.matte.alpha[5 * 24 + 13] < 0.1);
        }
    }

    #[test]
    fn errors_carry_stage() {
        let (img, _) = scene();
        let small = Trimap::from_fn(4, 4, |_, _| Label::Unknown).unwrap();
        let err = run(&img, &small, &PipelineConfig::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Preprocess);

        let one_class = Trimap::from_fn(24, 20, |x, _| {
            if x < 5 {
                Label::Foreground
            } else {
                Label::Unknown
            }
        })
        .unwrap();
        let err = run(&img, &one_class, &PipelineConfig::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Train);
        assert!(err.to_string().starts_with("train stage failed"));
    }

    #[test]
    fn keep_system_and_skip_preprocess() {
        let (img, tri) = scene();
        let cfg = PipelineConfig {
            preprocess: None,
            keep_system: true,
            mode: Mode::CfBaseline,
            ..Default::default()
        };
        let out = run(&img, &tri, &cfg).unwrap();
        assert_eq!(out.trimap, tri);
        let sys = out.system.unwrap();
        assert_eq!(sys.matrix.dim(), 24 * 20);
    }
}
