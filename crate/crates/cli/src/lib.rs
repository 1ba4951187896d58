//! Command implementations behind the `matting` binary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use matting_core::constraints::Source;
use matting_core::imaging::{
    decode_image, decode_matte, decode_trimap, encode_gray, encode_matte, matte_to_gray,
};
use matting_core::metrics::{
    compare_methods, evaluate, evaluate_masked, format_ranking, EvalReport,
};
use matting_core::pipeline::{run, PipelineError, PipelineOutput, Stage};
use matting_core::{
    AlphaMatte, BranchParams, ExpansionParams, FeaturePolicy, MattingError, Mode, PipelineConfig,
    TrainParams, Trimap,
};
use rayon::prelude::*;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_PIPELINE: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "matting",
    version,
    about = "Alpha matting from an image and a trimap"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract an alpha matte.
    Matte(MatteArgs),
    /// Compare a predicted matte with ground truth.
    Eval(EvalArgs),
    /// Run every entry of a manifest, comparing both modes where truth exists.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct MatteArgs {
    pub image: PathBuf,
    pub trimap: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Ground-truth matte; prints SAD/MSE after solving.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Pixels evaluated against --gt.
    #[arg(long, value_enum, default_value = "all")]
    pub region: RegionArg,
    /// Write the system matrix (Matrix Market) here and the right-hand side to PATH.rhs.txt.
    #[arg(long, value_name = "PATH")]
    pub dump_system: Option<PathBuf>,
    /// Write a_init.png, confidence.png and source.png into DIR.
    #[arg(long, value_name = "DIR")]
    pub debug_constraints: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub pred: PathBuf,
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub region: RegionArg,
    /// Trimap whose unknown pixels define `--region unknown`.
    #[arg(long)]
    pub trimap: Option<PathBuf>,
}

/// Pixels included in SAD/MSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum RegionArg {
    /// Every pixel.
    #[default]
    All,
    /// Only pixels marked unknown in the input trimap.
    Unknown,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub manifest: PathBuf,
    /// Write every produced matte into DIR.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Pixels evaluated against ground truth.
    #[arg(long, value_enum, default_value = "all")]
    pub region: RegionArg,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Augmented,
    CfBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeaturesArg {
    Auto,
    #[value(name = "9d")]
    Nine,
    #[value(name = "11d")]
    Eleven,
}

/// Flags shared by `matte` and `batch`.
#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, value_enum, default_value = "augmented")]
    pub mode: ModeArg,
    /// Weight of the trimap data term (implementer choice).
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Residual below which local sampling is trusted (implementer choice).
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub epsilon_sim: f64,
    /// Distance scale of the classifier confidence.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub sigma_sq: f64,
    /// Sigmoid enlargement of the classifier alpha.
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    pub rho: f64,
    /// Spatial threshold of trimap expansion, in pixels.
    #[arg(long, default_value_t = 9.0, allow_negative_numbers = true)]
    pub pre_spatial: f64,
    /// Color threshold of trimap expansion, on the 0..255 scale.
    #[arg(long, default_value_t = 9.0, allow_negative_numbers = true)]
    pub pre_color: f64,
    /// Skip trimap expansion.
    #[arg(long)]
    pub no_preprocess: bool,
    #[arg(long, value_enum, default_value = "auto")]
    pub features: FeaturesArg,
    /// Cross-validated accuracy below which coordinates are added.
    #[arg(long, default_value_t = 0.85, allow_negative_numbers = true)]
    pub accuracy_floor: f64,
    /// Largest k tried.
    #[arg(long, default_value_t = 15)]
    pub k_max: usize,
    #[arg(long, default_value_t = 5)]
    pub cv_folds: usize,
    /// Print classifier cross-validation tables and solver statistics.
    #[arg(short, long)]
    pub verbose: bool,
}

/// A fully resolved invocation of the pipeline on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub image: PathBuf,
    pub trimap: PathBuf,
    pub truth: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub region: RegionArg,
    pub verbose: bool,
}

impl PipelineArgs {
    pub fn to_config(&self) -> Result<PipelineConfig, CliError> {
        let preprocess = (!self.no_preprocess).then_some(ExpansionParams {
            spatial_threshold: self.pre_spatial,
            color_threshold: self.pre_color,
        });
        let cfg = PipelineConfig {
            mode: match self.mode {
                ModeArg::Augmented => Mode::Augmented,
                ModeArg::CfBaseline => Mode::CfBaseline,
            },
            preprocess,
            train: TrainParams {
                policy: match self.features {
                    FeaturesArg::Auto => FeaturePolicy::Auto,
                    FeaturesArg::Nine => FeaturePolicy::Force9,
                    FeaturesArg::Eleven => FeaturePolicy::Force11,
                },
                accuracy_floor: self.accuracy_floor,
                k_max: self.k_max,
                folds: self.cv_folds,
            },
            branch: BranchParams {
                epsilon: self.epsilon_sim,
                sigma_sq: self.sigma_sq,
                rho: self.rho,
            },
            lambda: self.lambda,
            ..Default::default()
        };
        matting_core::pipeline::validate_config(&cfg)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Pipeline(PipelineError),
    PartialBatch { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Pipeline(_) => EXIT_PIPELINE,
            CliError::PartialBatch { .. } => EXIT_PARTIAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Pipeline(e) => write!(f, "{e}"),
            CliError::PartialBatch { failed, total } => {
                write!(f, "{failed} of {total} batch entries failed")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

fn at(stage: Stage) -> impl FnOnce(MattingError) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

fn read(path: &Path, stage: Stage) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|e| {
        PipelineError::new(
            stage,
            MattingError::Decode(format!("cannot read {}: {e}", path.display())),
        )
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|e| {
        PipelineError::new(
            Stage::Encode,
            MattingError::Encode(format!("cannot write {}: {e}", path.display())),
        )
    })
}

/// Result of one pipeline run on one image.
#[derive(Debug)]
pub struct MatteResult {
    pub output: PipelineOutput,
    pub report: Option<EvalReport>,
}

/// Decodes the inputs, runs the pipeline, writes the matte if an output path
/// is set and evaluates against the truth if given.
pub fn run_one(cfg: &RunConfig) -> Result<MatteResult, PipelineError> {
    let img = decode_image(&read(&cfg.image, Stage::Decode)?).map_err(at(Stage::Decode))?;
    let tri = decode_trimap(&read(&cfg.trimap, Stage::Decode)?).map_err(at(Stage::Decode))?;
    let truth = match &cfg.truth {
        Some(p) => Some(decode_matte(&read(p, Stage::Decode)?).map_err(at(Stage::Decode))?),
        None => None,
    };
    let output = run(&img, &tri, &cfg.pipeline)?;
    if let Some(path) = &cfg.output {
        write(
            path,
            &encode_matte(&output.matte).map_err(at(Stage::Encode))?,
        )?;
    }
    let report = match &truth {
        Some(t) => Some(score(&output.matte, t, &tri, cfg.region)?),
        None => None,
    };
    Ok(MatteResult { output, report })
}

pub fn cmd_matte(args: &MatteArgs) -> Result<(), CliError> {
    let mut pipeline = args.pipeline.to_config()?;
    pipeline.keep_system = args.dump_system.is_some();
    let cfg = RunConfig {
        image: args.image.clone(),
        trimap: args.trimap.clone(),
        truth: args.gt.clone(),
        output: Some(args.output.clone()),
        pipeline,
        region: args.region,
        verbose: args.pipeline.verbose,
    };
    let result = run_one(&cfg)?;
    let out = &result.output;
    if cfg.verbose {
        if let Some(clf) = &out.classifier {
            println!("{clf}");
        }
        if let Some(c) = &out.constraints {
            println!(
                "constraints: {} local sampling, {} classifier",
                c.count(Source::LocalSampling),
                c.count(Source::Classifier)
            );
        }
        println!(
            "solver: {} iterations, relative residual {:e}",
            out.iterations, out.relative_residual
        );
    }
    if let Some(path) = &args.dump_system {
        dump_system(out, path)?;
    }
    if let Some(dir) = &args.debug_constraints {
        debug_constraints(out, dir)?;
    }
    info!("wrote {}", args.output.display());
    if let Some(r) = &result.report {
        println!("{r}");
        println!("{}", r.record());
    }
    Ok(())
}

fn dump_system(out: &PipelineOutput, path: &Path) -> Result<(), PipelineError> {
    let sys = out.system.as_ref().expect("system kept for dumping");
    let mut matrix = Vec::new();
    sys.matrix
        .write_matrix_market(&mut matrix)
        .map_err(|e| at(Stage::Encode)(e.into()))?;
    write(path, &matrix)?;
    let mut rhs = Vec::new();
    sys.write_rhs(&mut rhs)
        .map_err(|e| at(Stage::Encode)(e.into()))?;
    let mut rhs_path = path.as_os_str().to_owned();
    rhs_path.push(".rhs.txt");
    write(Path::new(&rhs_path), &rhs)
}

/// Gray level written to `source.png` for each constraint origin.
pub fn source_gray(s: Source) -> u8 {
    match s {
        Source::Known => 0,
        Source::Classifier => 128,
        Source::LocalSampling => 255,
    }
}

fn debug_constraints(out: &PipelineOutput, dir: &Path) -> Result<(), PipelineError> {
    let Some(c) = &out.constraints else {
        info!("no constraints in cf-baseline mode; skipping debug images");
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| PipelineError::new(Stage::Encode, MattingError::Io(e)))?;
    let (w, h) = (c.width, c.height);
    let gray = |v: &[f64]| -> Result<Vec<u8>, PipelineError> {
        let m = matting_core::AlphaMatte::new(w, h, v.to_vec()).map_err(at(Stage::Encode))?;
        let raw = matte_to_gray(&m).map_err(at(Stage::Encode))?;
        encode_gray(w, h, raw).map_err(at(Stage::Encode))
    };
    write(&dir.join("a_init.png"), &gray(&c.a_init)?)?;
    write(&dir.join("confidence.png"), &gray(&c.confidence)?)?;
    let src = c.source.iter().map(|&s| source_gray(s)).collect();
    write(
        &dir.join("source.png"),
        &encode_gray(w, h, src).map_err(at(Stage::Encode))?,
    )
}

fn score(
    pred: &AlphaMatte,
    truth: &AlphaMatte,
    tri: &Trimap,
    region: RegionArg,
) -> Result<EvalReport, PipelineError> {
    match region {
        RegionArg::All => evaluate(pred, truth),
        RegionArg::Unknown => {
            let mask: Vec<bool> = tri.labels().iter().map(|l| !l.is_known()).collect();
            evaluate_masked(pred, truth, &mask)
        }
    }
    .map_err(at(Stage::Evaluate))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport, CliError> {
    let pred = decode_matte(&read(&args.pred, Stage::Decode)?).map_err(at(Stage::Decode))?;
    let truth = decode_matte(&read(&args.truth, Stage::Decode)?).map_err(at(Stage::Decode))?;
    let report = match (&args.region, &args.trimap) {
        (RegionArg::All, _) => evaluate(&pred, &truth).map_err(at(Stage::Evaluate))?,
        (RegionArg::Unknown, Some(path)) => {
            let tri = decode_trimap(&read(path, Stage::Decode)?).map_err(at(Stage::Decode))?;
            score(&pred, &truth, &tri, RegionArg::Unknown)?
        }
        (RegionArg::Unknown, None) => {
            return Err(CliError::Usage("--region unknown needs --trimap".into()))
        }
    };
    println!("{report}");
    println!("{}", report.record());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub trimap: PathBuf,
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchManifest {
    pub entries: Vec<ManifestEntry>,
}

impl BatchManifest {
    /// Parses `image trimap [truth]` lines; `#` starts a comment. Relative
    /// paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(format!(
                    "line {}: expected `image trimap [truth]`, found {} fields",
                    n + 1,
                    fields.len()
                ));
            }
            let path = |s: &str| base.join(s);
            entries.push(ManifestEntry {
                image: path(fields[0]),
                trimap: path(fields[1]),
                truth: fields.get(2).map(|s| path(s)),
            });
        }
        if entries.is_empty() {
            return Err("manifest has no entries".into());
        }
        Ok(Self { entries })
    }

    /// Reads, parses and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read manifest {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let manifest = Self::parse(&text, base)?;
        for e in &manifest.entries {
            for p in [Some(&e.image), Some(&e.trimap), e.truth.as_ref()]
                .into_iter()
                .flatten()
            {
                if !p.is_file() {
                    return Err(format!("manifest references missing file {}", p.display()));
                }
            }
        }
        Ok(manifest)
    }
}

/// Outcome of one manifest entry.
#[derive(Debug)]
pub struct BatchRow {
    pub entry: ManifestEntry,
    pub result: Result<Vec<(Mode, Option<EvalReport>)>, PipelineError>,
}

fn output_path(dir: &Path, image: &Path, mode: Mode) -> PathBuf {
    let stem = image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matte".into());
    dir.join(format!("{stem}_{mode}.png"))
}

pub fn run_batch(
    manifest: &BatchManifest,
    base: &PipelineConfig,
    out_dir: Option<&Path>,
    region: RegionArg,
) -> Vec<BatchRow> {
    manifest
        .entries
        .par_iter()
        .map(|entry| {
            let modes: &[Mode] = if entry.truth.is_some() {
                &[Mode::Augmented, Mode::CfBaseline]
            } else {
                &[base.mode]
            };
            let result = modes
                .iter()
                .map(|&mode| {
                    let cfg = RunConfig {
                        image: entry.image.clone(),
                        trimap: entry.trimap.clone(),
                        truth: entry.truth.clone(),
                        output: out_dir.map(|d| output_path(d, &entry.image, mode)),
                        pipeline: PipelineConfig {
                            mode,
                            ..base.clone()
                        },
                        region,
                        verbose: false,
                    };
                    run_one(&cfg).map(|r| (mode, r.report))
                })
                .collect();
            BatchRow {
                entry: entry.clone(),
                result,
            }
        })
        .collect()
}

/// Per-image comparison tables followed by mean SAD/MSE per mode.
pub fn format_batch(rows: &[BatchRow]) -> String {
    let mut out = String::new();
    let mut totals: Vec<(Mode, f64, f64, usize)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&format!("[{}] {}\n", i + 1, row.entry.image.display()));
        match &row.result {
            Err(e) => out.push_str(&format!("  failed: {e}\n")),
            Ok(runs) => {
                let reports: Vec<(String, EvalReport)> = runs
                    .iter()
                    .filter_map(|(m, r)| r.map(|r| (m.to_string(), r)))
                    .collect();
                if reports.is_empty() {
                    out.push_str("  matte written, no ground truth\n");
                    continue;
                }
                for (mode, r) in runs {
                    if let Some(r) = r {
                        match totals.iter_mut().find(|t| t.0 == *mode) {
                            Some(t) => {
                                t.1 += r.sad;
                                t.2 += r.mse;
                                t.3 += 1;
                            }
                            None => totals.push((*mode, r.sad, r.mse, 1)),
                        }
                    }
                }
                let ranked = compare_methods(reports).expect("non-empty");
                for line in format_ranking(&ranked).lines() {
                    out.push_str(&format!("  {line}\n"));
                }
            }
        }
    }
    if !totals.is_empty() {
        out.push_str("summary (mean over evaluated images)\n");
        out.push_str(&format!(
            "  {:<12}  {:>6}  {:>12}  {:>12}\n",
            "method", "images", "SAD", "MSE"
        ));
        for (mode, sad, mse, n) in &totals {
            out.push_str(&format!(
                "  {:<12}  {:>6}  {:>12.4}  {:>12.6}\n",
                mode.to_string(),
                n,
                sad / *n as f64,
                mse / *n as f64
            ));
        }
    }
    out
}

pub fn cmd_batch(args: &BatchArgs) -> Result<(), CliError> {
    let base = args.pipeline.to_config()?;
    let manifest = BatchManifest::load(&args.manifest).map_err(CliError::Usage)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let rows = run_batch(&manifest, &base, args.out_dir.as_deref(), args.region);
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    for row in rows.iter().filter(|r| r.result.is_err()) {
        if let Err(e) = &row.result {
            error!("{}: {e}", row.entry.image.display());
        }
    }
    print!("{}", format_batch(&rows));
    if failed > 0 {
        return Err(CliError::PartialBatch {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let verbose = match &cli.command {
        Command::Matte(a) => a.pipeline.verbose,
        Command::Batch(a) => a.pipeline.verbose,
        Command::Eval(_) => false,
    };
    let _ =
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if verbose {
            "info"
        } else {
            "warn"
        }))
        .try_init();
    let result = match &cli.command {
        Command::Matte(a) => cmd_matte(a),
        Command::Eval(a) => cmd_eval(a).map(|_| ()),
        Command::Batch(a) => cmd_batch(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parsing() {
        let text = "# header\n a.png  a_tri.png a_gt.png\n\nb.png b_tri.png # no truth\n";
        let m = BatchManifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].truth, Some(PathBuf::from("/data/a_gt.png")));
        assert_eq!(m.entries[1].truth, None);
        assert_eq!(m.entries[1].trimap, PathBuf::from("/data/b_tri.png"));
    }

    #[test]
    fn manifest_rejects_empty_and_malformed() {
        assert!(BatchManifest::parse("# only comments\n\n", Path::new(".")).is_err());
        assert!(BatchManifest::parse("one.png\n", Path::new(".")).is_err());
        assert!(BatchManifest::parse("a b c d\n", Path::new(".")).is_err());
    }

    #[test]
    fn absolute_paths_kept() {
        let m = BatchManifest::parse("/x/a.png /x/t.png", Path::new("/data")).unwrap();
        assert_eq!(m.entries[0].image, PathBuf::from("/x/a.png"));
    }

    #[test]
    fn defaults_match_core() {
        let cli =
            Cli::try_parse_from(["matting", "matte", "i.png", "t.png", "-o", "o.png"]).unwrap();
        let Command::Matte(args) = cli.command else {
            panic!("expected matte");
        };
        assert_eq!(
            args.pipeline.to_config().unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn flags_map_to_config() {
        let cli = Cli::try_parse_from([
            "matting",
            "batch",
            "m.txt",
            "--mode",
            "cf-baseline",
            "--features",
            "11d",
            "--no-preprocess",
            "--k-max",
            "7",
            "--rho",
            "3",
        ])
        .unwrap();
        let Command::Batch(args) = cli.command else {
            panic!("expected batch");
        };
        let cfg = args.pipeline.to_config().unwrap();
        assert_eq!(cfg.mode, Mode::CfBaseline);
        assert_eq!(cfg.train.policy, FeaturePolicy::Force11);
        assert_eq!(cfg.preprocess, None);
        assert_eq!(cfg.train.k_max, 7);
        assert_eq!(cfg.branch.rho, 3.0);
    }

    #[test]
    fn out_of_range_params_are_usage_errors() {
        for bad in [["--lambda", "0"], ["--cv-folds", "1"], ["--sigma-sq", "-1"]] {
            let mut argv = vec!["matting", "matte", "i", "t", "-o", "o"];
            argv.extend(bad);
            let cli = Cli::try_parse_from(argv).unwrap();
            let Command::Matte(args) = cli.command else {
                panic!()
            };
            assert_eq!(
                args.pipeline.to_config().unwrap_err().exit_code(),
                EXIT_USAGE
            );
        }
        assert_eq!(main_with_args(["matting", "bogus"]), EXIT_USAGE);
        assert_eq!(main_with_args(["matting", "--help"]), EXIT_OK);
    }

    #[test]
    fn source_levels() {
        assert_eq!(source_gray(Source::Known), 0);
        assert_eq!(source_gray(Source::Classifier), 128);
        assert_eq!(source_gray(Source::LocalSampling), 255);
    }
}
