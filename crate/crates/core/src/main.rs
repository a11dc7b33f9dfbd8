use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use walkerpose::eval::{Holdout, Report, Section, SplitMode, SplitSpec};
use walkerpose::features::table::write_feature_csv;
use walkerpose::features::{FeatureMode, FeatureSpec};
use walkerpose::gbt::{train_multi_output, train_single_risk, GBTParams};
use walkerpose::pose::io::{read_dataset, write_dataset};
use walkerpose::pose::RiskLabel;
use walkerpose::serve::{self, InputMode, ServerConfig, ServiceModels, DEFAULT_ALERT_FRAMES, DEFAULT_PORT};
use walkerpose::svm::{train_multi_svm, train_svm, SVMParams};
use walkerpose::synth::{generate_dataset, generate_session, parse_script, standard_script, GeneratorSpec, NoiseModel};
use walkerpose::workflow::{load_table, run_pipeline, AnyModel, OutputGuard, PipelineConfig, WorkflowError};

#[derive(Parser)]
#[command(name = "walkerpose", version, about = "Smart-walker posture classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset or a scripted session.
    Synth(SynthArgs),
    /// Write the feature CSV of a dataset.
    Extract(ExtractArgs),
    /// Train a boosted or SVM model.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset or feature CSV.
    Eval(EvalArgs),
    /// Split, train every model, and write the report tables.
    Report(ReportArgs),
    /// Run the line-delimited classification service.
    Serve(ServeArgs),
    /// Replay a recorded session through the service logic.
    ClassifyFile(ClassifyFileArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Named generator preset: `default` or `small`.
    #[arg(long, default_value = "default")]
    spec: String,
    /// Generate a scripted session instead: `standard` or `pose:seconds,...`.
    #[arg(long)]
    session: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth CSV for sessions.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    participants: Option<usize>,
    #[arg(long)]
    frames_per_class: Option<usize>,
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    participant_offset: Option<f64>,
    #[arg(long)]
    upper_body_fraction: Option<f64>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = walkerpose::features::DEFAULT_V_MIN)]
    v_min: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Learner {
    Gbt,
    Svm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Multi,
    Risk,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Features,
    Raw,
}

impl From<ModeArg> for FeatureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Features => FeatureMode::Features,
            ModeArg::Raw => FeatureMode::RawLandmarks,
        }
    }
}

#[derive(Args)]
struct GbtArgs {
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 0.3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    #[arg(long, default_value_t = 1.0)]
    l2_reg: f64,
    #[arg(long, default_value_t = 1.0)]
    min_child_hessian: f64,
    #[arg(long, default_value_t = 0.0)]
    min_split_gain: f64,
    #[arg(long, default_value_t = 1e-4)]
    svm_lambda: f64,
    #[arg(long, default_value_t = 50)]
    svm_epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GbtArgs {
    fn gbt(&self) -> Result<GBTParams, WorkflowError> {
        let p = GBTParams {
            learning_rate: self.learning_rate,
            l2_reg: self.l2_reg,
            min_split_gain: self.min_split_gain,
            max_depth: self.max_depth,
            n_rounds: self.rounds,
            min_child_hessian: self.min_child_hessian,
            seed: self.seed,
            ..GBTParams::default()
        };
        p.validate().map_err(|e| WorkflowError::Usage(e.to_string()))?;
        Ok(p)
    }

    fn svm(&self) -> Result<SVMParams, WorkflowError> {
        let p = SVMParams {
            lambda: self.svm_lambda,
            epochs: self.svm_epochs,
            seed: self.seed,
        };
        p.validate().map_err(|e| WorkflowError::Usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Args)]
struct TrainArgs {
    learner: Learner,
    /// Feature CSV or dataset NDJSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "multi")]
    target: Target,
    #[arg(long, value_enum, default_value = "features")]
    mode: ModeArg,
    #[command(flatten)]
    params: GbtArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Report section the evaluation is filed under.
    #[arg(long, default_value = "prediction")]
    section: String,
    #[arg(long, value_enum, default_value = "features")]
    mode: ModeArg,
    /// Metrics CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON output.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Dataset NDJSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of held-out participants (last ids in sorted order).
    #[arg(long, default_value_t = 4)]
    holdout: usize,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Split the pooled participants by participant instead of by sample.
    #[arg(long)]
    by_participant: bool,
    #[arg(long)]
    no_svm: bool,
    #[arg(long)]
    no_risk: bool,
    #[arg(long, value_enum, default_value = "features")]
    mode: ModeArg,
    #[command(flatten)]
    params: GbtArgs,
}

#[derive(Args)]
struct ModelArgs {
    /// Multi-output boosted model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Single-output boosted risk model.
    #[arg(long)]
    risk_model: Option<PathBuf>,
    /// Geometric configuration JSON (defaults to $WALKERPOSE_CONFIG, then built-in).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALERT_FRAMES)]
    alert_frames: usize,
}

#[derive(Args)]
struct ServeArgs {
    /// Serve one session over stdin/stdout instead of TCP.
    #[arg(long)]
    stdio: bool,
    #[arg(long, default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
    listen: String,
    #[command(flatten)]
    models: ModelArgs,
}

#[derive(Args)]
struct ClassifyFileArgs {
    /// Session or dataset NDJSON.
    #[arg(long)]
    input: PathBuf,
    /// Response NDJSON output.
    #[arg(long)]
    out: PathBuf,
    /// Leading frames used for calibration (0 disables the geometric path).
    #[arg(long, default_value_t = 10)]
    calibrate: usize,
    #[command(flatten)]
    models: ModelArgs,
}

impl ModelArgs {
    fn server_config(&self, mode: InputMode, listen: String) -> ServerConfig {
        ServerConfig {
            listen,
            multi_model: self.model.clone(),
            risk_model: self.risk_model.clone(),
            geometric_config: self.config.clone(),
            alert_frames: self.alert_frames,
            mode,
        }
    }
}

fn preset(name: &str) -> Result<GeneratorSpec, WorkflowError> {
    match name {
        "default" => Ok(GeneratorSpec::default()),
        "small" => Ok(GeneratorSpec {
            participants: 6,
            frames_per_class: 10,
            ..GeneratorSpec::default()
        }),
        other => Err(WorkflowError::Usage(format!("unknown spec `{other}` (default, small)"))),
    }
}

fn synth(a: &SynthArgs) -> Result<(), WorkflowError> {
    let mut noise = NoiseModel::default();
    if let Some(j) = a.jitter {
        noise.jitter = j;
    }
    if let Some(o) = a.participant_offset {
        noise.participant_offset = o;
    }
    let mut guard = OutputGuard::new();
    guard.track(&a.out);
    if let Some(script) = &a.session {
        let steps = if script == "standard" {
            standard_script()
        } else {
            parse_script(script).map_err(|e| WorkflowError::Usage(e.to_string()))?
        };
        let session = generate_session(&steps, a.fps.unwrap_or(10.0), &noise, a.seed)?;
        write_dataset(&session.to_dataset(), &a.out)?;
        if let Some(t) = &a.truth {
            guard.track(t);
            session.write_truth_csv(BufWriter::new(File::create(t)?))?;
        }
    } else {
        let mut spec = preset(&a.spec)?;
        if let Some(p) = a.participants {
            spec.participants = p;
        }
        if let Some(f) = a.frames_per_class {
            spec.frames_per_class = f;
        }
        if let Some(f) = a.fps {
            spec.fps = f;
        }
        if let Some(u) = a.upper_body_fraction {
            spec.upper_body_fraction = u;
        }
        let ds = generate_dataset(&spec, &noise, a.seed).map_err(|e| WorkflowError::Usage(e.to_string()))?;
        write_dataset(&ds, &a.out)?;
        log::info!("wrote {} samples to {}", ds.len(), a.out.display());
    }
    guard.commit();
    Ok(())
}

fn extract(a: &ExtractArgs) -> Result<(), WorkflowError> {
    let spec = FeatureSpec::with_v_min(a.v_min);
    spec.validate().map_err(|e| WorkflowError::Usage(e.to_string()))?;
    let table = load_table(&a.input, FeatureMode::Features, &spec)?;
    let mut guard = OutputGuard::new();
    guard.track(&a.out);
    write_feature_csv(&a.out, &table.x, &table.labels)?;
    guard.commit();
    Ok(())
}

fn train(a: &TrainArgs) -> Result<(), WorkflowError> {
    let table = load_table(&a.input, a.mode.into(), &FeatureSpec::default())?;
    let classes = table.vocabulary.len();
    let model = match (a.learner, a.target) {
        (Learner::Gbt, Target::Multi) => {
            let (m, acc) = train_multi_output(&table.x, &table.labels, &a.params.gbt()?, classes)?;
            log::info!("training accuracy {acc:?}");
            AnyModel::MultiGbt(m)
        }
        (Learner::Gbt, Target::Risk) => AnyModel::RiskGbt(train_single_risk(&table.x, &table.risk, &a.params.gbt()?)?),
        (Learner::Svm, Target::Multi) => {
            AnyModel::MultiSvm(train_multi_svm(&table.x, &table.labels, &a.params.svm()?, classes)?)
        }
        (Learner::Svm, Target::Risk) => {
            AnyModel::RiskSvm(train_svm(&table.x, &table.risk, RiskLabel::ALL.len(), &a.params.svm()?)?)
        }
    };
    let mut guard = OutputGuard::new();
    guard.write(&a.out, model.to_json())?;
    guard.commit();
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<(), WorkflowError> {
    let section = Section::from_key(&a.section)
        .ok_or_else(|| WorkflowError::Usage("section must be training_and_validation or prediction".into()))?;
    let model = AnyModel::load(&a.model)?;
    let table = load_table(&a.input, a.mode.into(), &FeatureSpec::default())?;
    let mut report = Report::default();
    model.evaluate_into(&table, section, &mut report)?;
    print!("{}", report.to_text());
    let mut guard = OutputGuard::new();
    if let Some(p) = &a.out {
        guard.write(p, report.to_csv())?;
    }
    if let Some(p) = &a.json {
        guard.write(p, report.to_json())?;
    }
    guard.commit();
    Ok(())
}

fn report(a: &ReportArgs) -> Result<(), WorkflowError> {
    if a.train_fraction <= 0.0 || a.train_fraction >= 1.0 {
        return Err(WorkflowError::Usage("train fraction must lie in (0, 1)".into()));
    }
    let dataset = read_dataset(&a.input).map_err(|e| WorkflowError::Data(format!("{}: {e}", a.input.display())))?;
    let config = PipelineConfig {
        split: SplitSpec {
            holdout: Holdout::LastN(a.holdout),
            train_fraction: a.train_fraction,
            seed: a.params.seed,
            mode: if a.by_participant {
                SplitMode::ByParticipant
            } else {
                SplitMode::WithinParticipantRandom
            },
        },
        gbt: a.params.gbt()?,
        svm: a.params.svm()?,
        feature_mode: a.mode.into(),
        train_risk: !a.no_risk,
        train_svm: !a.no_svm,
        ..PipelineConfig::default()
    };
    let run = run_pipeline(&dataset, &config)?;
    run.write_outputs(&a.out_dir)?;
    print!("{}", run.report.to_text());
    println!("training accuracy (walker, init, posture): {:?}", run.train_accuracy);
    if let Some(r) = run.risk_train_accuracy {
        println!("risk training accuracy: {r}");
    }
    Ok(())
}

fn serve_cmd(a: &ServeArgs) -> Result<(), WorkflowError> {
    let mode = if a.stdio { InputMode::Stdio } else { InputMode::Tcp };
    serve::serve(&a.models.server_config(mode, a.listen.clone()))?;
    Ok(())
}

fn classify_file(a: &ClassifyFileArgs) -> Result<(), WorkflowError> {
    let shared = ServiceModels::load(&a.models.server_config(InputMode::Stdio, String::new()))?;
    let dataset = read_dataset(&a.input).map_err(|e| WorkflowError::Data(format!("{}: {e}", a.input.display())))?;
    let frames: Vec<_> = dataset.samples.into_iter().map(|s| s.frame).collect();
    let responses = serve::classify_recorded(&shared, &frames, a.calibrate);
    let mut guard = OutputGuard::new();
    guard.track(&a.out);
    let mut w = BufWriter::new(File::create(&a.out)?);
    for r in &responses {
        writeln!(w, "{}", r.to_line())?;
    }
    w.flush()?;
    guard.commit();
    Ok(())
}

fn run(cli: Cli) -> Result<(), WorkflowError> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve_cmd(a),
        Command::ClassifyFile(a) => classify_file(a),
    }
}

fn exists_dir(p: &Path) -> bool {
    p.parent().is_none_or(|d| d.as_os_str().is_empty() || d.is_dir())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outputs: Vec<&Path> = match &cli.command {
        Command::Synth(a) => vec![&a.out],
        Command::Extract(a) => vec![&a.out],
        Command::Train(a) => vec![&a.out],
        Command::ClassifyFile(a) => vec![&a.out],
        _ => vec![],
    };
    if let Some(p) = outputs.iter().find(|p| !exists_dir(p)) {
        eprintln!("error: output directory of {} does not exist", p.display());
        return ExitCode::from(1);
    }
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
