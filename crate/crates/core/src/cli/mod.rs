//! Command-line pipeline: ingest, extract, simulate, score, evaluate,
//! optimize, report. Each stage reads the config and writes its artifacts
//! under the output directory.

pub mod report;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{BackendKind, ConfigError, PipelineConfig};
use crate::corpus::{filter_complete_with_report, load_corpus, write_jsonl, Corpus};
use crate::features::{extract_personas, read_persona_cache, write_persona_cache, PersonaFeatures};
use crate::lexica::{score_speakers, Feature, Level, ScorerSet};
use crate::metrics::{
    scalar_error_of_average, scalar_error_of_dispersion, FeatureReport, MetricReport, ReportMeta, Summary,
    SummaryStats,
};
use crate::optimize::{compare_dialogues, human_samples_for, optimize, run_key, save_state, DirStore, Evaluator};
use crate::prompts::{PromptRegistry, PromptVariantSet};
use crate::simulate::{persona_pairs, run_batch, BatchOptions, ChatClient, DialogueSet, SimulateError};
use crate::util::content_hash;

pub use report::{filter_level, read_report, render_tables, ReportError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("partial batch: {0}")]
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Partial(_) => EXIT_PARTIAL,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Turn,
    Speaker,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Turn => Level::Turn,
            LevelArg::Speaker => Level::Speaker,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "persona-dialogue", version, about = "Persona-conditioned dialogue simulation and evaluation")]
pub struct Cli {
    /// Pipeline config (TOML). Defaults to ./persona-dialogue.toml.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Backend override: `mock`, `http`, or an HTTP endpoint URL.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// Force the offline mock backend.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Restrict scoring and reports to one feature level.
    #[arg(long, global = true, value_enum)]
    pub level: Option<LevelArg>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and filter the corpus; write the normalized JSONL and a summary.
    Ingest,
    /// Extract per-speaker personas (cached).
    Extract {
        /// Ignore an existing persona cache.
        #[arg(long)]
        force: bool,
    },
    /// Generate a dialogue batch for one variant set.
    Simulate {
        /// `best`, `baseline`, `axis=id;axis=id`, or a best.json from optimize.
        #[arg(long, default_value = "best")]
        variants: String,
        /// Artifact name under dialogues/ (defaults to the variant spec).
        #[arg(long)]
        name: Option<String>,
    },
    /// Score human speakers, or a dialogue set, into feature samples.
    Score {
        /// Dialogue JSONL written by `simulate`; human corpus when omitted.
        #[arg(long)]
        dialogues: Option<PathBuf>,
    },
    /// Compare a dialogue set against the human corpus.
    Evaluate {
        /// Dialogue JSONL written by `simulate`.
        #[arg(long, required_unless_present = "stats")]
        dialogues: Option<PathBuf>,
        /// CSV of summary statistics (feature, condition, human_mean,
        /// generated_mean, human_std, generated_std) to evaluate directly.
        #[arg(long, conflicts_with = "dialogues")]
        stats: Option<PathBuf>,
        /// Report name under reports/.
        #[arg(long)]
        name: Option<String>,
    },
    /// Search prompt variants by coordinate descent.
    Optimize,
    /// Render report JSON files as text tables.
    Report {
        /// Report files, optionally `condition=path`.
        #[arg(required = true)]
        reports: Vec<String>,
        #[arg(long, default_value_t = 2)]
        precision: usize,
    },
}

/// Parses `args`, runs the command, prints errors, returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match run(&cli, &mut std::io::stdout()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli.config.clone().unwrap_or_else(|| PathBuf::from("persona-dialogue.toml"));
    let mut cfg = PipelineConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    match cli.backend.as_deref() {
        None => {}
        Some("mock") => cfg.backend.kind = BackendKind::Mock,
        Some("http") => cfg.backend.kind = BackendKind::Http,
        Some(url) if url.starts_with("http://") || url.starts_with("https://") => {
            cfg.backend.kind = BackendKind::Http;
            cfg.backend.http.endpoint = url.to_string();
        }
        Some(other) => {
            return Err(CliError::Config(format!(
                "--backend must be mock, http or an endpoint URL, got `{other}`"
            )))
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    if let Command::Report { reports, precision } = &cli.command {
        return cmd_report(reports, *precision, cli.level.map(Level::from), out);
    }
    if let Command::Evaluate { stats: Some(stats), .. } = &cli.command {
        return cmd_evaluate_stats(stats, out);
    }
    let cfg = load_config(cli)?;
    let ctx = Context {
        cfg,
        force_mock: cli.mock,
        level: cli.level.map(Level::from),
    };
    match &cli.command {
        Command::Ingest => ctx.ingest(out),
        Command::Extract { force } => ctx.extract(*force, out).map(|_| ()),
        Command::Simulate { variants, name } => ctx.simulate(variants, name.as_deref(), out),
        Command::Score { dialogues } => ctx.score(dialogues.as_deref(), out),
        Command::Evaluate { dialogues, name, .. } => {
            let path = dialogues.as_deref().expect("clap requires --dialogues or --stats");
            ctx.evaluate(path, name.as_deref(), out)
        }
        Command::Optimize => ctx.optimize(out),
        Command::Report { .. } => unreachable!(),
    }
}

struct Context {
    cfg: PipelineConfig,
    force_mock: bool,
    level: Option<Level>,
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    source: String,
    conversations_in: usize,
    conversations_retained: usize,
    conversations_dropped: usize,
    speakers_in: usize,
    speakers_retained: usize,
    drop_reasons: std::collections::BTreeMap<String, usize>,
    dropped: indexmap::IndexMap<String, String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(runtime)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(runtime)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(runtime)?;
    w.write_all(b"\n").map_err(runtime)?;
    w.flush().map_err(runtime)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("report").to_string()
}

/// Makes a variant spec safe as a file name.
fn artifact_name(spec: &str) -> String {
    if spec.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        spec.to_string()
    } else {
        format!("variants-{}", &content_hash(spec.as_bytes())[..12])
    }
}

/// `best`, `baseline`, a path to a JSON file with `best_variants`, or
/// `axis=id;...` applied on top of the baseline.
pub fn parse_variants(spec: &str, registry: &PromptRegistry) -> std::result::Result<PromptVariantSet, String> {
    match spec {
        "best" => return Ok(registry.best()),
        "baseline" => return Ok(registry.baseline()),
        _ => {}
    }
    let path = Path::new(spec);
    let set = if spec.ends_with(".json") && path.exists() {
        let text = fs::read_to_string(path).map_err(|e| format!("{spec}: {e}"))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{spec}: {e}"))?;
        let field = v.get("best_variants").cloned().unwrap_or(v);
        serde_json::from_value(field).map_err(|e| format!("{spec}: {e}"))?
    } else {
        let mut set = registry.baseline();
        for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
            let (axis, id) = part
                .split_once('=')
                .ok_or_else(|| format!("expected axis=id, got `{part}`"))?;
            set.0.insert(axis.trim().to_string(), id.trim().to_string());
        }
        set
    };
    registry.check(&set).map_err(|e| e.to_string())?;
    Ok(set)
}

impl Context {
    fn out(&self, rel: &str) -> PathBuf {
        self.cfg.output_dir.join(rel)
    }

    fn corpus(&self) -> Result<(Corpus, crate::corpus::FilterReport, Corpus)> {
        let raw = load_corpus(&self.cfg.corpus.path, self.cfg.corpus_format()?).map_err(runtime)?;
        let (filtered, report) = filter_complete_with_report(&raw);
        Ok((filtered, report, raw))
    }

    fn scorers(&self) -> Result<ScorerSet> {
        let mut s = self.cfg.scorers()?;
        if let Some(level) = self.level {
            s.features.retain(|f| f.level() == level);
        }
        Ok(s)
    }

    fn client(&self) -> Result<Arc<dyn ChatClient>> {
        Ok(self.cfg.client(self.force_mock)?)
    }

    fn ingest(&self, out: &mut dyn Write) -> Result<()> {
        let (filtered, report, raw) = self.corpus()?;
        let mut buf = Vec::new();
        write_jsonl(&filtered, &mut buf).map_err(runtime)?;
        fs::create_dir_all(&self.cfg.output_dir).map_err(runtime)?;
        fs::write(self.out("corpus.jsonl"), &buf).map_err(runtime)?;
        let mut reasons = std::collections::BTreeMap::new();
        for r in report.dropped.values() {
            *reasons.entry(format!("{r:?}")).or_insert(0) += 1;
        }
        let summary = IngestSummary {
            source: self.cfg.corpus.path.display().to_string(),
            conversations_in: report.conversations_in,
            conversations_retained: report.conversations_retained,
            conversations_dropped: report.dropped.len(),
            speakers_in: raw.speakers.len(),
            speakers_retained: report.speakers_retained,
            drop_reasons: reasons,
            dropped: report.dropped.iter().map(|(k, v)| (k.clone(), format!("{v:?}"))).collect(),
        };
        write_json(&self.out("ingest_summary.json"), &summary)?;
        writeln!(
            out,
            "retained {} of {} conversations ({} speakers); dropped {}",
            summary.conversations_retained, summary.conversations_in, summary.speakers_retained, summary.conversations_dropped
        )
        .map_err(runtime)?;
        for (reason, n) in &summary.drop_reasons {
            writeln!(out, "  {reason}: {n}").map_err(runtime)?;
        }
        Ok(())
    }

    /// Personas from the cache when its key matches, otherwise extracted.
    fn extract(&self, force: bool, out: &mut dyn Write) -> Result<Vec<PersonaFeatures>> {
        let (corpus, _, _) = self.corpus()?;
        let client = self.client()?;
        let mut canonical = Vec::new();
        write_jsonl(&corpus, &mut canonical).map_err(runtime)?;
        let key = content_hash(
            format!(
                "{}|{}|{:?}",
                content_hash(&canonical),
                client.id(),
                self.cfg.extract.window
            )
            .as_bytes(),
        );
        let cache = self.out("personas.jsonl");
        let key_path = self.out("personas.key");
        if !force && cache.exists() && fs::read_to_string(&key_path).ok().as_deref() == Some(key.as_str()) {
            let personas = read_persona_cache(BufReader::new(File::open(&cache).map_err(runtime)?)).map_err(runtime)?;
            writeln!(out, "persona cache hit: {} personas", personas.len()).map_err(runtime)?;
            return Ok(personas);
        }
        let personas = extract_personas(&corpus, client.as_ref(), self.cfg.extract_options()).map_err(runtime)?;
        fs::create_dir_all(&self.cfg.output_dir).map_err(runtime)?;
        let mut w = BufWriter::new(File::create(&cache).map_err(runtime)?);
        write_persona_cache(&personas, &mut w).map_err(runtime)?;
        w.flush().map_err(runtime)?;
        fs::write(&key_path, &key).map_err(runtime)?;
        writeln!(out, "extracted {} personas", personas.len()).map_err(runtime)?;
        Ok(personas)
    }

    fn simulate(&self, spec: &str, name: Option<&str>, out: &mut dyn Write) -> Result<()> {
        let registry = self.cfg.prompt_registry()?;
        let variants = parse_variants(spec, &registry).map_err(CliError::Config)?;
        let personas = self.extract(false, &mut std::io::sink())?;
        let (corpus, _, _) = self.corpus()?;
        let pairs = persona_pairs(&corpus, &personas, Some(self.cfg.budget.pairs));
        let client = self.client()?;
        let options = BatchOptions {
            replicates: self.cfg.budget.replicates,
            turns: self.cfg.budget.turns,
            master_seed: self.cfg.seed,
            workers: self.cfg.simulation.workers,
            min_success_fraction: self.cfg.simulation.min_success_fraction,
        };
        let name = name.map(str::to_string).unwrap_or_else(|| artifact_name(spec));
        let dir = self.out("dialogues");
        match run_batch(&pairs, &variants, &registry, client.as_ref(), &options) {
            Ok(set) => {
                set.save(&dir, &name).map_err(runtime)?;
                writeln!(
                    out,
                    "wrote {} conversations ({} truncated) to {}",
                    set.conversations.len(),
                    set.truncated_count(),
                    dir.join(format!("{name}.jsonl")).display()
                )
                .map_err(runtime)?;
                Ok(())
            }
            Err(SimulateError::BelowThreshold { failed, total, partial }) => {
                partial.save(&dir, &name).map_err(runtime)?;
                Err(CliError::Partial(format!(
                    "{failed} of {total} conversations truncated; partial output in {}",
                    dir.display()
                )))
            }
            Err(SimulateError::NoPairs) => Err(runtime("no conversation has personas for both speakers")),
            Err(e) => Err(runtime(e)),
        }
    }

    fn load_dialogues(path: &Path) -> Result<DialogueSet> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let stem = path
            .file_name()
            .and_then(|s| s.to_str())
            .map(|s| s.trim_end_matches(".jsonl").to_string())
            .ok_or_else(|| runtime(format!("bad dialogue path {}", path.display())))?;
        DialogueSet::load(dir, &stem).map_err(|e| runtime(format!("{}: {e}", path.display())))
    }

    fn score(&self, dialogues: Option<&Path>, out: &mut dyn Write) -> Result<()> {
        let scorers = self.scorers()?;
        let (conversations, speakers, name) = match dialogues {
            Some(p) => {
                let set = Self::load_dialogues(p)?;
                let convs = set.as_conversations(self.cfg.simulation.include_truncated);
                let mut speakers: Vec<String> = set.mapping.values().cloned().collect();
                speakers.retain(|s| convs.iter().any(|c| c.participants.contains(s)));
                (convs, speakers, format!("{}.samples", file_stem(p)))
            }
            None => {
                let (corpus, _, _) = self.corpus()?;
                let speakers: Vec<String> = corpus.speakers.keys().cloned().collect();
                (corpus.conversations, speakers, "human.samples".to_string())
            }
        };
        let samples = score_speakers(&conversations, &speakers, &scorers).map_err(runtime)?;
        let path = self.out(&format!("samples/{name}.jsonl"));
        fs::create_dir_all(path.parent().unwrap()).map_err(runtime)?;
        let mut w = BufWriter::new(File::create(&path).map_err(runtime)?);
        let mut n = 0;
        for s in samples.iter().flatten() {
            serde_json::to_writer(&mut w, s).map_err(runtime)?;
            w.write_all(b"\n").map_err(runtime)?;
            n += 1;
        }
        w.flush().map_err(runtime)?;
        writeln!(out, "wrote {n} samples for {} speakers to {}", speakers.len(), path.display()).map_err(runtime)?;
        Ok(())
    }

    fn save_report(&self, name: &str, report: &MetricReport) -> Result<PathBuf> {
        let json = self.out(&format!("reports/{name}.json"));
        write_json(&json, report)?;
        let csv = File::create(self.out(&format!("reports/{name}.csv"))).map_err(runtime)?;
        report.write_csv(BufWriter::new(csv)).map_err(runtime)?;
        Ok(json)
    }

    fn evaluate(&self, dialogues: &Path, name: Option<&str>, out: &mut dyn Write) -> Result<()> {
        let scorers = self.scorers()?;
        let set = Self::load_dialogues(dialogues)?;
        let (corpus, _, _) = self.corpus()?;
        let (humans, human_samples) = human_samples_for(&corpus, &set, &scorers).map_err(runtime)?;
        let mut report = compare_dialogues(
            &human_samples,
            &humans,
            &set,
            &scorers,
            self.cfg.simulation.include_truncated,
        )
        .map_err(runtime)?;
        report.meta.level = self.level;
        let name = name.map(str::to_string).unwrap_or_else(|| file_stem(dialogues));
        let path = self.save_report(&name, &report)?;
        write!(out, "{}", render_tables(&[(name, report)], 2)).map_err(runtime)?;
        writeln!(out, "report: {}", path.display()).map_err(runtime)?;
        Ok(())
    }

    fn optimize(&self, out: &mut dyn Write) -> Result<()> {
        let registry = self.cfg.prompt_registry()?;
        let scorers = self.scorers()?;
        let objective = self.cfg.objective()?;
        let budget = self.cfg.budget();
        let personas = self.extract(false, &mut std::io::sink())?;
        let (corpus, _, _) = self.corpus()?;
        let client = self.client()?;
        let mut evaluator = Evaluator::new(
            &corpus,
            &personas,
            &registry,
            client.as_ref(),
            &scorers,
            &objective,
            budget,
            self.cfg.seed,
        )
        .map_err(runtime)?;
        evaluator.workers = self.cfg.simulation.workers;
        evaluator.min_success_fraction = self.cfg.simulation.min_success_fraction;
        evaluator.include_truncated = self.cfg.simulation.include_truncated;

        let mut initial = registry.baseline();
        for (axis, id) in &self.cfg.objective.initial {
            initial.0.insert(axis.clone(), id.clone());
        }
        registry.check(&initial).map_err(|e| CliError::Config(e.to_string()))?;

        let key = run_key(&registry, &objective, &budget, self.cfg.seed, &client.id());
        let run_dir = self.out(&format!("optimize/{key}"));
        let mut store = DirStore::new(run_dir.join("evaluations")).map_err(runtime)?;
        let state = match optimize(&evaluator, &initial, &mut store) {
            Ok(s) => s,
            Err(crate::optimize::OptimizeError::Simulate(SimulateError::BelowThreshold { failed, total, .. })) => {
                return Err(CliError::Partial(format!("{failed} of {total} conversations truncated during search")))
            }
            Err(e) => return Err(runtime(e)),
        };
        save_state(&state, &run_dir).map_err(runtime)?;
        let baseline = state.trace[0].report.clone();
        self.save_report("baseline", &baseline)?;
        self.save_report("best", &state.best_report)?;
        write_json(&self.out("best.json"), &serde_json::json!({
            "best_variants": state.best_variants,
            "best_score": state.best_score,
            "run": key,
        }))?;
        writeln!(
            out,
            "best variants: {}\nobjective: {:.4} (start {:.4}); {} evaluations, {} passes{}",
            state.best_variants,
            state.best_score,
            state.trace[0].objective,
            state.evaluations,
            state.passes,
            if state.exhausted { ", budget exhausted" } else { "" }
        )
        .map_err(runtime)?;
        let mut shown = vec![("baseline".to_string(), baseline), ("best".to_string(), state.best_report)];
        if let Some(level) = self.level {
            for (_, r) in &mut shown {
                *r = filter_level(r, level);
            }
        }
        write!(out, "{}", render_tables(&shown, 2)).map_err(runtime)?;
        writeln!(out, "trace: {}", run_dir.join("trace.jsonl").display()).map_err(runtime)?;
        Ok(())
    }
}

fn cmd_report(specs: &[String], precision: usize, level: Option<Level>, out: &mut dyn Write) -> Result<()> {
    let mut reports = Vec::new();
    for spec in specs {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) if !Path::new(spec).exists() => (n.to_string(), PathBuf::from(p)),
            _ => (file_stem(Path::new(spec)), PathBuf::from(spec)),
        };
        let mut r = read_report(&path).map_err(runtime)?;
        if let Some(level) = level {
            r = filter_level(&r, level);
        }
        reports.push((name, r));
    }
    write!(out, "{}", render_tables(&reports, precision)).map_err(runtime)
}

#[derive(Debug, serde::Deserialize)]
struct StatsRow {
    feature: Feature,
    condition: String,
    human_mean: f64,
    generated_mean: f64,
    human_std: f64,
    generated_std: f64,
}

/// Error of average and error of dispersion straight from summary
/// statistics, one report per condition.
pub fn reports_from_stats(path: &Path) -> std::result::Result<Vec<(String, MetricReport)>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out: Vec<(String, MetricReport)> = Vec::new();
    for (i, row) in rdr.deserialize::<StatsRow>().enumerate() {
        let row = row.map_err(|e| format!("{} row {}: {e}", path.display(), i + 2))?;
        let c = SummaryStats { mean: row.human_mean, std: row.human_std, n: 0 };
        let l = SummaryStats { mean: row.generated_mean, std: row.generated_std, n: 0 };
        let mut notes = Vec::new();
        let eoa = scalar_error_of_average(&c, &l).map_err(|e| notes.push(e.to_string())).ok();
        let eod = if row.feature.level() == Level::Speaker {
            scalar_error_of_dispersion(&c, &l).map_err(|e| notes.push(e.to_string())).ok()
        } else {
            None
        };
        let fr = FeatureReport {
            feature: row.feature,
            level: row.feature.level(),
            human: Summary::Scalar(c),
            generated: Summary::Scalar(l),
            average_error: None,
            error_of_average: eoa,
            error_of_dispersion: eod,
            notes,
        };
        match out.iter_mut().find(|(n, _)| *n == row.condition) {
            Some((_, r)) => r.features.push(fr),
            None => out.push((
                row.condition.clone(),
                MetricReport {
                    meta: ReportMeta {
                        variant_id: row.condition,
                        ..Default::default()
                    },
                    features: vec![fr],
                },
            )),
        }
    }
    Ok(out)
}

fn cmd_evaluate_stats(path: &Path, out: &mut dyn Write) -> Result<()> {
    let reports = reports_from_stats(path).map_err(runtime)?;
    write!(out, "{}", render_tables(&reports, 2)).map_err(runtime)
}
