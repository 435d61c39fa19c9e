//! `trboost` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use trboost::convergence::{check_appendix_inequalities, linspace};
use trboost::data::{gen_noisy_regression, load_table};
use trboost::engine::{evaluate, fit, training_curves, write_curves, write_metric_curve, write_report};
use trboost::grid::{apply, grid_search, GridAxis};
use trboost::{
    check_linear, check_sublinear, gen_two_gaussians, model, run_one_instance, save_csv, BaselineKind, BoostConfig,
    ClampConfig, Dataset, Ensemble, Error, ErrorKind, Execution, LabelColumn, LearnerConfig, LossKind, RatioKind,
    StepRule, TreeConfig,
};

#[derive(Parser)]
#[command(name = "trboost", version, about = "Trust-region gradient boosting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it as JSON.
    Train(TrainCmd),
    /// Score a CSV with a saved model.
    Predict(PredictCmd),
    /// Print metrics of a saved model on labelled data.
    Evaluate(EvaluateCmd),
    /// Exhaustive hyperparameter search on a validation split.
    Grid(GridCmd),
    /// Write a synthetic dataset as CSV.
    Generate(GenerateCmd),
    /// Run a one-instance convergence trace and check its rate.
    Converge(ConvergeCmd),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long, default_value = "y")]
    label: LabelColumn,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Tree,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Trboost,
    Gbdt,
    Newton,
}

/// Numeric hyperparameters. `train` takes one value each; `grid` takes
/// comma-separated lists.
#[derive(Args)]
struct Hyper {
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eps1: Option<Vec<f64>>,
    /// Accepts `inf`.
    #[arg(long, value_delimiter = ',')]
    eps2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    max_depth: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    min_leaf: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    min_gain: Option<Vec<f64>>,
    /// Learning rate of the gbdt and newton baselines.
    #[arg(long, value_delimiter = ',')]
    nu: Option<Vec<f64>>,
    /// L2 leaf penalty of the newton baseline.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
}

impl Hyper {
    fn axes(&self) -> Vec<GridAxis> {
        let named = [
            ("estimators", &self.estimators),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("mu", &self.mu),
            ("gamma", &self.gamma),
            ("eps1", &self.eps1),
            ("eps2", &self.eps2),
            ("eta", &self.eta),
            ("max-depth", &self.max_depth),
            ("min-leaf", &self.min_leaf),
            ("min-gain", &self.min_gain),
            ("nu", &self.nu),
            ("lambda", &self.lambda),
        ];
        named
            .into_iter()
            .filter_map(|(name, v)| {
                v.as_ref().map(|values| GridAxis {
                    name: name.to_string(),
                    values: values.clone(),
                })
            })
            .collect()
    }
}

#[derive(Args)]
struct ModelArgs {
    /// logloss, l2, l1, huber or huber:<delta>.
    #[arg(long, default_value = "l2")]
    loss: LossKind,
    #[arg(long, value_enum, default_value = "tree")]
    learner: LearnerArg,
    #[arg(long, value_enum, default_value = "trboost")]
    baseline: BaselineArg,
    #[arg(long, default_value = "r1")]
    ratio: RatioKind,
    /// Treat every quadratic coefficient as zero in tree leaves.
    #[arg(long)]
    first_order: bool,
    #[arg(long, default_value_t = 0.0)]
    base_score: f64,
    #[arg(long, default_value_t = trboost::trust_region::DEFAULT_MU_MAX)]
    mu_max: f64,
    /// Probability clamp for the logistic loss.
    #[arg(long, default_value_t = trboost::losses::DEFAULT_CLAMP_RHO)]
    clamp_rho: f64,
    /// Stop after this many consecutive rejected iterations.
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    hyper: Hyper,
}

const DEFAULT_NU: f64 = 0.1;
const DEFAULT_LAMBDA: f64 = 1.0;

impl ModelArgs {
    /// Config and method before the numeric hyperparameters are applied.
    fn base(&self) -> Result<(BoostConfig, BaselineKind), Error> {
        let learner = match self.learner {
            LearnerArg::Tree => LearnerConfig::Tree(TreeConfig {
                first_order: self.first_order,
                ..TreeConfig::default()
            }),
            LearnerArg::Linear => LearnerConfig::Linear,
        };
        let mut cfg = BoostConfig {
            loss: self.loss,
            ratio: self.ratio,
            learner,
            base_score: self.base_score,
            clamp: ClampConfig::new(self.clamp_rho)?,
            seed: self.seed,
            patience: self.patience,
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
            ..BoostConfig::default()
        };
        cfg.trust.mu_max = self.mu_max;
        let kind = match self.baseline {
            BaselineArg::Trboost => BaselineKind::TrBoost,
            BaselineArg::Gbdt => BaselineKind::Gbdt { nu: DEFAULT_NU },
            BaselineArg::Newton => BaselineKind::NewtonGbm {
                nu: DEFAULT_NU,
                lambda: DEFAULT_LAMBDA,
            },
        };
        Ok((cfg, kind))
    }

    /// Fully resolved single configuration.
    fn resolve(&self) -> Result<(BoostConfig, BaselineKind), Failure> {
        let (mut cfg, mut kind) = self.base()?;
        for axis in self.hyper.axes() {
            let [v] = axis.values[..] else {
                return Err(Failure::Usage(format!(
                    "--{} takes one value here; use `grid` to search several",
                    axis.name
                )));
            };
            apply(&axis.name, v, &mut cfg, &mut kind)?;
        }
        Ok((cfg, kind))
    }
}

#[derive(Args)]
struct TrainCmd {
    #[command(flatten)]
    data: DataArgs,
    /// Held-out labelled CSV for the validation curve and the metric table.
    #[arg(long)]
    test_data: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration curves CSV.
    #[arg(long)]
    curves_out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictCmd {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Column to drop before scoring, if the file carries labels.
    #[arg(long)]
    label: Option<LabelColumn>,
    #[arg(long)]
    no_header: bool,
    /// Output probabilities instead of raw scores (logistic models).
    #[arg(long)]
    proba: bool,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateCmd {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Metric table destination; defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Selection metric after every iteration.
    #[arg(long)]
    curves_out: Option<PathBuf>,
}

#[derive(Args)]
struct GridCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Share of the data held out for validation.
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
    /// Winner, retrained on all of the data.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    curves_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    TwoGaussians,
    NoisyRegression,
}

#[derive(Args)]
struct GenerateCmd {
    #[arg(value_enum)]
    kind: Generator,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    dims: usize,
    /// Distance between the class means (two-gaussians).
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    /// Share of rows with shifted labels (noisy-regression).
    #[arg(long, default_value_t = 0.1)]
    outlier_fraction: f64,
    /// Shift in units of the label standard deviation (noisy-regression).
    #[arg(long, default_value_t = 5.0)]
    outlier_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepArg {
    Gradient,
    Newton,
    Trboost,
}

#[derive(Args)]
struct ConvergeCmd {
    #[arg(long, default_value = "logloss")]
    loss: LossKind,
    #[arg(long, value_enum, default_value = "trboost")]
    method: StepArg,
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    #[arg(long, default_value_t = 0.0)]
    f0: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = DEFAULT_NU)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = trboost::losses::DEFAULT_CLAMP_RHO)]
    clamp_rho: f64,
    /// Trace CSV; defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &DataArgs) -> Result<Dataset, Error> {
    load_table(&args.data, !args.no_header)?.into_dataset(&args.label)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn save_curves(ensemble: &Ensemble, validation: Option<&Dataset>, path: Option<&Path>) -> Result<(), Error> {
    if let Some(p) = path {
        let rows = training_curves(ensemble, validation)?;
        let mut w = sink(Some(p))?;
        write_curves(&rows, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn train_cmd(cmd: &TrainCmd) -> Result<(), Failure> {
    let data = load(&cmd.data)?;
    let test = match &cmd.test_data {
        Some(p) => Some(load_table(p, !cmd.data.no_header)?.into_dataset(&cmd.data.label)?),
        None => None,
    };
    let (cfg, kind) = cmd.model.resolve()?;
    let ensemble = fit(&data, kind, &cfg)?;
    model::save(&ensemble, &cmd.out)?;
    save_curves(&ensemble, test.as_ref(), cmd.curves_out.as_deref())?;
    let report = evaluate(&ensemble, test.as_ref().unwrap_or(&data))?;
    let mut out = sink(None)?;
    write_report(&report, &mut out)?;
    out.flush()?;
    Ok(())
}

fn predict_cmd(cmd: &PredictCmd) -> Result<(), Error> {
    let ensemble = model::load(&cmd.model)?;
    let table = load_table(&cmd.data, !cmd.no_header)?;
    let data = match &cmd.label {
        Some(l) => table.into_dataset(l)?,
        None => table.into_unlabelled()?,
    };
    let values = if cmd.proba {
        if !ensemble.loss().is_classification() {
            return Err(Error::Domain("--proba needs a logistic model".into()));
        }
        ensemble.predict_proba(&data.features)?
    } else {
        ensemble.predict(&data.features)?
    };
    let mut w = sink(cmd.out.as_deref())?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn evaluate_cmd(cmd: &EvaluateCmd) -> Result<(), Error> {
    let ensemble = model::load(&cmd.model)?;
    let data = load(&cmd.data)?;
    let report = evaluate(&ensemble, &data)?;
    let mut w = sink(cmd.out.as_deref())?;
    write_report(&report, &mut w)?;
    w.flush()?;
    if let Some(p) = &cmd.curves_out {
        let metric = trboost::engine::SelectionMetric::for_loss(ensemble.loss()).name;
        let mut w = sink(Some(p))?;
        write_metric_curve(&report, metric, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn grid_cmd(cmd: &GridCmd) -> Result<(), Error> {
    let data = load(&cmd.data)?;
    let (base, kind) = cmd.model.base()?;
    let axes = cmd.model.hyper.axes();
    let report = grid_search(&data, &base, kind, &axes, cmd.val_fraction, cmd.model.seed)?;

    let mut w = sink(None)?;
    let names: Vec<&str> = report.results[0].assignment.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(w, "{},{}", names.join(","), report.metric.name)?;
    for r in &report.results {
        let values: Vec<String> = r.assignment.iter().map(|(_, v)| v.to_string()).collect();
        let score = match &r.score {
            Ok(s) => s.to_string(),
            Err(e) => format!("\"{e}\""),
        };
        writeln!(w, "{},{score}", values.join(","))?;
    }
    w.flush()?;
    let describe = |i: usize| -> String {
        report.results[i]
            .assignment
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    eprintln!("best: {}", describe(report.best));
    for &i in &report.tied_with_best {
        eprintln!("tied with best, not chosen: {}", describe(i));
    }
    if let Some(p) = &cmd.out {
        model::save(&report.model, p)?;
    }
    save_curves(&report.model, None, cmd.curves_out.as_deref())?;
    Ok(())
}

fn generate_cmd(cmd: &GenerateCmd) -> Result<(), Error> {
    let data = match cmd.kind {
        Generator::TwoGaussians => gen_two_gaussians(cmd.n, cmd.dims, cmd.separation, cmd.seed)?,
        Generator::NoisyRegression => {
            gen_noisy_regression(cmd.n, cmd.dims, cmd.outlier_fraction, cmd.outlier_scale, cmd.seed)?
        }
    };
    save_csv(&data, &cmd.out)
}

fn converge_cmd(cmd: &ConvergeCmd) -> Result<(), Error> {
    let clamp = ClampConfig::new(cmd.clamp_rho)?;
    let rule = match cmd.method {
        StepArg::Gradient => StepRule::Gradient { nu: cmd.nu },
        StepArg::Newton => StepRule::Newton {
            nu: cmd.nu,
            lambda: cmd.lambda,
        },
        StepArg::Trboost => StepRule::TrustRegion { mu: cmd.mu },
    };
    let trace = run_one_instance(cmd.loss, cmd.y, cmd.f0, rule, cmd.iters, clamp)?;
    let mut w = sink(cmd.out.as_deref())?;
    writeln!(w, "iteration,loss")?;
    for (t, l) in trace.losses.iter().enumerate() {
        writeln!(w, "{t},{l}")?;
    }
    w.flush()?;

    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let s = check_sublinear(&trace.losses);
    eprintln!("sublinear: {} c={}", verdict(s.passed), s.c);
    let l = check_linear(&trace.losses);
    eprintln!("linear: {} c={}", verdict(l.passed), l.c);
    if cmd.loss.is_classification() {
        let r = check_appendix_inequalities(clamp, &linspace(-30.0, 30.0, 10_000))?;
        eprintln!(
            "clamp bounds: {} comparison={} newton_step={}",
            verdict(r.passed(1e-12)),
            r.comparison_violation,
            r.newton_step_violation
        );
    }
    Ok(())
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::HessianNotPositive | ErrorKind::InfeasibleRadius => 4,
        ErrorKind::Domain | ErrorKind::Schema | ErrorKind::Io | ErrorKind::UndefinedMetric => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(c) => train_cmd(c),
        Command::Predict(c) => predict_cmd(c).map_err(Failure::from),
        Command::Evaluate(c) => evaluate_cmd(c).map_err(Failure::from),
        Command::Grid(c) => grid_cmd(c).map_err(Failure::from),
        Command::Generate(c) => generate_cmd(c).map_err(Failure::from),
        Command::Converge(c) => converge_cmd(c).map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
