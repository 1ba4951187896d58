//! Alpha matting with a closed-form Laplacian augmented by local color
//! sampling and a k-nearest-neighbour classifier.
//!
//! The usual entry point is [`pipeline::run`]; every stage is also exposed
//! on its own.

pub mod constraints;
pub mod error;
pub mod features;
pub mod imaging;
pub mod kdtree;
pub mod knn;
pub mod laplacian;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod solver;
pub mod sparse;

pub use constraints::{build_constraints, BranchParams, ConstraintField, Source};
pub use error::{MattingError, Result};
pub use features::{build_features, FeatureField, FeatureVector};
pub use imaging::{AlphaMatte, LabImage, Label, RgbImage, Trimap};
pub use knn::{train, ClassLabel, FeaturePolicy, TrainParams, TrainedClassifier};
pub use laplacian::{build_laplacian, LaplacianParams};
pub use metrics::{compare_methods, evaluate, EvalReport};
pub use pipeline::{run, Mode, PipelineConfig, PipelineError, PipelineOutput, Stage};
pub use preprocess::{expand_trimap, ExpansionParams};
pub use solver::{assemble_system, MattingSystem, SolveOutcome, SolverOptions};
pub use sparse::CsrMatrix;
