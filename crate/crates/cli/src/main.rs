use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modalign::backend::{
    BackendConfig, BackendError, CompletionBackend, LiveBackend, MockBackend, RecordingBackend, ReplayBackend,
};
use modalign::detector::{classify_model, prepare, Mode, PipelineError, RunOptions};
use modalign::eval::{self, GroundTruth, MutationOperator};
use modalign::matcher::DEFAULT_TAU;
use modalign::preprocess::Preprocessor;
use modalign::report::{write_atomic, AlignmentReport};
use modalign::slicer::slice_all;
use modalign::DomainModel;

#[derive(Parser)]
#[command(name = "modalign", version, about = "Check a domain model against a requirements text")]
struct Cli {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print per-stage wall times to stderr.
    #[arg(long, global = true)]
    timings: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every model element against a specification.
    Analyze(AnalyzeArgs),
    /// Print the minimal slice around each element.
    Slice {
        #[arg(long)]
        model: PathBuf,
    },
    /// Print the generated sentence for each element.
    Sentences {
        #[arg(long)]
        model: PathBuf,
    },
    /// Print the specification sentences matched to each element.
    Match {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
    /// Show the resolved sentences of a specification.
    Preprocess {
        #[arg(long)]
        spec: PathBuf,
        /// Also list the extracted concepts and relations.
        #[arg(long)]
        dump_extraction: bool,
    },
    /// Inject seeded misalignments and write the ground truth.
    Mutate {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated operators: was2, was4, wge.
        #[arg(long, value_delimiter = ',', default_value = "was2,was4,wge")]
        ops: Vec<MutationOperator>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the mutated model.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the element,label CSV.
        #[arg(long)]
        truth: PathBuf,
    },
    /// Score reports against ground truth, or summarize count rows.
    Eval(EvalArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    /// live, mock, mock:<script.json> or replay:<cassette.json>
    #[arg(long)]
    backend: String,
    #[arg(long, default_value = "parallel")]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Report path; `.csv` writes CSV, anything else JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save every completion to this cassette.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Chat-completions URL for the live backend.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name for the live backend.
    #[arg(long)]
    llm_model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "LLM_API_KEY")]
    api_key_env: String,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["report", "counts"])))]
struct EvalArgs {
    /// Alignment report(s), paired in order with --truth.
    #[arg(long, num_args = 1.., requires = "truth")]
    report: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    truth: Vec<PathBuf>,
    /// CSV of A,PA,CPA,M,PM,CPM rows to summarize directly.
    #[arg(long, conflicts_with = "report")]
    counts: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    digits: usize,
}

enum Failure {
    Input(String),
    Backend(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Backend(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Backend(m) => m,
        }
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        Failure::Backend(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Model(m) => Failure::Input(format!("invalid model: {m}")),
            PipelineError::Backend(b) => Failure::Backend(b.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<DomainModel, Failure> {
    DomainModel::parse(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn check_tau(tau: f64) -> Outcome {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(Failure::Input(format!("--tau must be in (0, 1], got {tau}")))
    }
}

fn write_out(path: &Path, text: &str) -> Outcome {
    write_atomic(path, text.as_bytes()).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn open_backend(args: &AnalyzeArgs) -> Result<Box<dyn CompletionBackend>, Failure> {
    let sel = args.backend.as_str();
    if sel == "live" {
        let mut config = BackendConfig {
            api_key_env: args.api_key_env.clone(),
            ..BackendConfig::default()
        };
        if let Some(e) = &args.endpoint {
            config.endpoint = e.clone();
        }
        if let Some(m) = &args.llm_model {
            config.model = m.clone();
        }
        return Ok(Box::new(LiveBackend::from_env(config)?));
    }
    if sel == "mock" {
        return Ok(Box::new(MockBackend::new(Vec::new())?));
    }
    let (kind, path) = sel
        .split_once(':')
        .ok_or_else(|| Failure::Input(format!("unknown backend `{sel}` (expected live, mock, mock:<file> or replay:<file>)")))?;
    let path = Path::new(path);
    let input = |e: BackendError| Failure::Input(format!("{}: {e}", path.display()));
    match kind {
        "mock" => Ok(Box::new(MockBackend::load(path).map_err(input)?)),
        "replay" => Ok(Box::new(ReplayBackend::load(path).map_err(input)?)),
        _ => Err(Failure::Input(format!("unknown backend kind `{kind}`"))),
    }
}

fn analyze(args: &AnalyzeArgs, timings: bool) -> Outcome {
    check_tau(args.tau)?;
    let model = load_model(&args.model)?;
    let spec = read(&args.spec)?;
    let backend = open_backend(args)?;
    let options = RunOptions {
        mode: args.mode,
        tau: args.tau,
    };
    let report = match &args.record {
        Some(cassette) => {
            let recorder = RecordingBackend::new(backend);
            let report = classify_model(&model, &spec, &recorder, options)?;
            recorder.save(cassette)?;
            report
        }
        None => classify_model(&model, &spec, backend.as_ref(), options)?,
    };
    match &args.out {
        Some(path) => {
            write_out(path, &report.render_for(path))?;
            let misaligned = report
                .elements
                .iter()
                .filter(|e| e.verdict == modalign::detector::Verdict::Misaligned)
                .count();
            let aligned = report
                .elements
                .iter()
                .filter(|e| e.verdict == modalign::detector::Verdict::Aligned)
                .count();
            eprintln!(
                "{} elements: {aligned} aligned, {misaligned} misaligned, {} unclassified ({} queries)",
                report.elements.len(),
                report.elements.len() - aligned - misaligned,
                report.total_queries
            );
        }
        None => print(&report.render_text()),
    }
    if timings {
        eprint!("{}", report.timings.render());
    }
    Ok(())
}

fn slices(model: &Path) -> Outcome {
    let model = load_model(model)?;
    let mut out = String::new();
    for s in slice_all(&model) {
        out.push_str(&format!("{}\t{}\n", s.focus.id, s.member_ids().join(" ")));
    }
    print(&out);
    Ok(())
}

fn sentences(model: &Path, timings: bool) -> Outcome {
    let model = load_model(model)?;
    let prepared = prepare(&model, "", DEFAULT_TAU);
    let mut out = String::new();
    for g in &prepared.generated {
        out.push_str(&format!("{}\t{}\n", g.element, g.text));
    }
    print(&out);
    if timings {
        eprint!("{}", prepared.timings.render());
    }
    Ok(())
}

fn matches(model: &Path, spec: &Path, tau: f64, timings: bool) -> Outcome {
    check_tau(tau)?;
    let model = load_model(model)?;
    let spec = read(spec)?;
    let prepared = prepare(&model, &spec, tau);
    let mut out = String::new();
    for m in &prepared.matched {
        let set = m.sentences.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join(",");
        out.push_str(&format!("{} → {{{set}}}\n", m.element));
    }
    print(&out);
    if timings {
        eprint!("{}", prepared.timings.render());
    }
    Ok(())
}

fn preprocess(spec: &Path, dump: bool) -> Outcome {
    let text = read(spec)?;
    let x = Preprocessor::default().run(&text);
    let mut out = String::new();
    for s in &x.sentences {
        out.push_str(&format!("s{}\t{}\n", s.index, s.resolved_text));
    }
    if dump {
        out.push_str(&x.dump());
    }
    print(&out);
    Ok(())
}

fn mutate(model: &Path, ops: &[MutationOperator], seed: u64, out: &Path, truth: &Path) -> Outcome {
    let model = load_model(model)?;
    let result = eval::mutate(&model, ops, seed);
    write_out(out, &result.model.to_document())?;
    write_out(truth, &result.truth.to_csv())?;
    let mut log = String::new();
    for a in &result.applied {
        log.push_str(&format!("{}\t{}\t=> {}\n", a.operator, a.before, a.after));
    }
    print(&log);
    for (op, missing) in &result.shortfall {
        eprintln!("warning: {op} fell {missing} short of its quota");
    }
    Ok(())
}

fn evaluate(args: &EvalArgs) -> Outcome {
    let rows: Vec<(String, modalign::MetricsRow)> = if let Some(counts) = &args.counts {
        eval::read_counts_csv(&read(counts)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", counts.display())))?
            .into_iter()
            .map(|(label, c)| (label, modalign::MetricsRow::from_counts(c)))
            .collect()
    } else {
        if args.report.len() != args.truth.len() {
            return Err(Failure::Input(format!(
                "{} report(s) but {} truth file(s)",
                args.report.len(),
                args.truth.len()
            )));
        }
        let mut rows = Vec::new();
        for (r, t) in args.report.iter().zip(&args.truth) {
            let report = AlignmentReport::load(r).map_err(|e| Failure::Input(e.to_string()))?;
            let truth = GroundTruth::from_csv(&read(t)?).map_err(|e| Failure::Input(format!("{}: {e}", t.display())))?;
            let row = eval::score(&report, &truth).map_err(|e| Failure::Input(format!("{}: {e}", r.display())))?;
            let label = r.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            rows.push((label, row));
        }
        rows
    };
    let summary = rows.len() > 1;
    let csv = eval::render_csv(&rows, args.digits, summary);
    match &args.out {
        Some(path) => write_out(path, &csv),
        None => {
            print(&csv);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Analyze(a) => analyze(a, cli.timings),
        Command::Slice { model } => slices(model),
        Command::Sentences { model } => sentences(model, cli.timings),
        Command::Match { model, spec, tau } => matches(model, spec, *tau, cli.timings),
        Command::Preprocess { spec, dump_extraction } => preprocess(spec, *dump_extraction),
        Command::Mutate {
            model,
            ops,
            seed,
            out,
            truth,
        } => mutate(model, ops, *seed, out, truth),
        Command::Eval(e) => evaluate(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
