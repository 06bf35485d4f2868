//! The `msh` command line.
//!
//! Every subcommand validates its inputs before writing anything. Errors map
//! to distinct exit codes, see [`exit_code`]. Log verbosity follows the
//! `MSH_LOG` environment variable (`error`, `warn`, `info`, `debug`, ...).

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::data::{
    read_features, split, synthesize, synthetic_manifest, write_features, DatasetManifest,
    FeatureSequence, Split, SyntheticSpec,
};
use crate::encoder::{load_model, save_model, ModelFile};
use crate::error::{ensure, Error, Result};
use crate::eval::{sweep, EvalReport, MethodBundle, ReportMetadata, DEFAULT_K};
use crate::index::{
    bench_pipeline, bench_search, build_codebook, load_codebook, random_codebook, retrieve,
    save_codebook, Codebook, CodebookMode, RetrievalResult, StreamSession,
};
use crate::regime::Regime;
use crate::training::{
    default_alphas, train_primary, train_secondary, truncate, validate_alphas, TrainingConfig,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INVALID_INPUT: i32 = 4;
pub const EXIT_FORMAT: i32 = 5;
pub const EXIT_REGIME: i32 = 6;
pub const EXIT_IO: i32 = 7;

pub const LOG_ENV: &str = "MSH_LOG";

/// Exit code for an error class.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::InvalidInput(_) => EXIT_INVALID_INPUT,
        Error::Format { .. } => EXIT_FORMAT,
        Error::Regime(_) => EXIT_REGIME,
        Error::Io { .. } => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "msh",
    version,
    about = "Predictive, incremental video hashing for mid-stream retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset: feature files plus a split manifest.
    GenData(GenDataArgs),
    /// Train a primary autoencoder (ssth-rt, ssth-rt+ or ssth-rt++).
    Train(TrainArgs),
    /// Distill a secondary encoder (la-reco or la-code) from a primary model.
    Distill(DistillArgs),
    /// Hash the codebook split with a primary encoder.
    BuildCodebook(BuildCodebookArgs),
    /// Retrieve the top-K videos for one feature file.
    Query(QueryArgs),
    /// Replay a feature file clip by clip, printing the top-K after each clip.
    StreamSim(StreamSimArgs),
    /// Score methods with mAP@K over the observation levels.
    Eval(EvalArgs),
    /// Measure ranking latency.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenDataArgs {
    /// Output directory; receives manifest.txt and features/.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 50)]
    videos_per_class: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 32)]
    n_f: usize,
    #[arg(long, default_value_t = 10)]
    min_len: usize,
    #[arg(long, default_value_t = 40)]
    max_len: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Fraction of each video made of distractor clips.
    #[arg(long, default_value_t = 0.2)]
    distractors: f64,
    /// Train, codebook and query ratios.
    #[arg(long, value_parser = parse_ratios, default_value = "0.5,0.45,0.05")]
    split: [f64; 3],
}

#[derive(Debug, Args)]
struct TrainingOverrides {
    /// TOML training config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Truncation grid, `0.1..1.0` or a comma list.
    #[arg(long, value_parser = parse_alpha_grid)]
    alphas: Option<AlphaGrid>,
    /// Per-epoch loss log (CSV); defaults to `<out>.metrics.csv`.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,
    #[command(flatten)]
    overrides: TrainingOverrides,
}

#[derive(Debug, Args)]
struct DistillArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Primary model file written by `train`.
    #[arg(long)]
    primary: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,
    #[command(flatten)]
    overrides: TrainingOverrides,
}

#[derive(Debug, Args)]
struct BuildCodebookArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Primary model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `ssth-rt++` hashes one entry per video and level; defaults to the model's regime.
    #[arg(long, value_parser = parse_regime)]
    regime: Option<Regime>,
    /// Levels of the duplicated codebook.
    #[arg(long, value_parser = parse_alpha_grid)]
    alphas: Option<AlphaGrid>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    /// Feature file of the query video.
    #[arg(long)]
    features: PathBuf,
    /// Observed fraction of the query video.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
}

#[derive(Debug, Args)]
struct StreamSimArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Write the JSON lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// `regime:query_model:codebook`, repeatable.
    #[arg(long = "method", value_parser = parse_method, required = true)]
    methods: Vec<MethodSpec>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, value_parser = parse_alpha_grid, default_value = "0.1..1.0")]
    alphas: AlphaGrid,
    /// Recorded in the report metadata.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Codebook to rank against; a random one is generated otherwise.
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Size of the random codebook.
    #[arg(long, default_value_t = 42_500)]
    entries: usize,
    /// Code width of the random codebook.
    #[arg(long, default_value_t = 256)]
    bits: usize,
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// With `--manifest`, hash the query split with this model too.
    #[arg(long, requires = "manifest")]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    manifest: Option<PathBuf>,
    /// JSON report file; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Observation levels given as one flag value.
#[derive(Debug, Clone, PartialEq)]
struct AlphaGrid(Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
struct MethodSpec {
    regime: Regime,
    model: PathBuf,
    codebook: PathBuf,
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    s.parse()
}

fn parse_method(s: &str) -> std::result::Result<MethodSpec, String> {
    let mut parts = s.splitn(3, ':');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(r), Some(m), Some(c)) if !m.is_empty() && !c.is_empty() => Ok(MethodSpec {
            regime: r.parse()?,
            model: m.into(),
            codebook: c.into(),
        }),
        _ => Err(format!("`{s}` is not regime:query_model:codebook")),
    }
}

fn parse_ratios(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad ratio `{p}`"))
        })
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| format!("`{s}` needs three ratios: train,codebook,query"))
}

fn parse_alpha_grid(s: &str) -> std::result::Result<AlphaGrid, String> {
    parse_alphas(s).map(AlphaGrid)
}

/// Parses `lo..hi` (step 0.1), `lo..hi:step` or a comma list.
pub fn parse_alphas(s: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad alpha `{p}`"))
    };
    let alphas = if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (num(hi)?, num(step)?),
            None => (num(rest)?, 0.1),
        };
        let lo = num(lo)?;
        if step <= 0.0 || hi < lo {
            return Err(format!("empty range `{s}`"));
        }
        let n = ((hi - lo) / step).round();
        if (lo + n * step - hi).abs() > 1e-9 {
            return Err(format!("`{s}`: step does not divide the range"));
        }
        (0..=n as usize)
            .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        s.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    validate_alphas(&alphas).map_err(|e| e.to_string())?;
    Ok(alphas)
}

/// Runs `argv` (program name first), printing to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_output(argv, &mut std::io::stdout().lock())
}

/// Runs `argv`, writing command output to `out`. Diagnostics go to stderr.
pub fn run_with_output<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ =
        env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("msh: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::GenData(a) => gen_data(a, out),
        Command::Train(a) => train(a, out),
        Command::Distill(a) => distill(a, out),
        Command::BuildCodebook(a) => build(a, out),
        Command::Query(a) => query(a, out),
        Command::StreamSim(a) => stream_sim(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn emit(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn gen_data(a: GenDataArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SyntheticSpec {
        n_classes: a.classes,
        videos_per_class: a.videos_per_class,
        n_f: a.n_f,
        min_len: a.min_len,
        max_len: a.max_len,
        noise: a.noise,
        distractor_fraction: a.distractors,
        seed: a.seed,
    };
    let videos = synthesize(&spec)?;
    let mut manifest = split(&synthetic_manifest(&spec, &videos), a.split, a.seed)?;
    manifest.root = a.out.clone();
    for (seq, entry) in videos.iter().zip(&manifest.videos) {
        let path = manifest.resolve(entry);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_features(seq, &path)?;
    }
    let path = a.out.join("manifest.txt");
    manifest.save(&path)?;
    log::info!(
        "{} videos: {} train, {} codebook, {} query",
        manifest.videos.len(),
        manifest.count(Split::Train),
        manifest.count(Split::Codebook),
        manifest.count(Split::Query)
    );
    emit(out, path.display())
}

/// Config file (if any) with the command-line overrides applied.
fn training_config(
    regime: Option<Regime>,
    default: Regime,
    o: &TrainingOverrides,
) -> Result<TrainingConfig> {
    let mut cfg = match &o.config {
        Some(path) => TrainingConfig::load(path, regime.unwrap_or(default))?,
        None => TrainingConfig::for_regime(regime.unwrap_or(default)),
    };
    if let Some(r) = regime {
        cfg.regime = r;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(b) = o.bits {
        cfg.n_bits = b;
    }
    if let Some(e) = o.epochs {
        cfg.epochs = e;
    }
    if let Some(al) = &o.alphas {
        cfg.alphas = al.0.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn metrics_path(o: &TrainingOverrides, model: &Path) -> PathBuf {
    o.metrics.clone().unwrap_or_else(|| {
        let mut s = model.as_os_str().to_owned();
        s.push(".metrics.csv");
        PathBuf::from(s)
    })
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = training_config(a.regime, Regime::SsthRt, &a.overrides)?;
    ensure!(
        !cfg.regime.is_secondary(),
        Regime,
        "{} is a distilled regime; use `msh distill`",
        cfg.regime
    );
    let manifest = DatasetManifest::load(&a.manifest)?;
    let data = manifest.load_split(Split::Train)?;
    log::info!(
        "training {} on {} videos for {} epochs",
        cfg.regime,
        data.len(),
        cfg.epochs
    );
    let trained = train_primary(&cfg, &data)?;
    let model = ModelFile {
        regime: cfg.regime,
        encoder: trained.model.encoder,
        decoder: Some(trained.model.decoder),
    };
    save_model(&model, &a.out)?;
    trained.log.write_csv(&metrics_path(&a.overrides, &a.out))?;
    emit(out, a.out.display())
}

fn distill(a: DistillArgs, out: &mut dyn Write) -> Result<()> {
    let primary = load_model(&a.primary)?;
    ensure!(
        !primary.regime.is_secondary(),
        Regime,
        "{} holds a {} encoder; distillation needs a primary model",
        a.primary.display(),
        primary.regime
    );
    let Some(decoder) = &primary.decoder else {
        return Err(Error::Regime(format!(
            "{} has no decoder",
            a.primary.display()
        )));
    };
    let mut cfg = training_config(a.regime, Regime::LaCode, &a.overrides)?;
    ensure!(
        cfg.regime.is_secondary(),
        Regime,
        "{} is not a distilled regime; use `msh train`",
        cfg.regime
    );
    if a.overrides.bits.is_none() {
        cfg.n_bits = primary.encoder.n_bits;
    }
    let manifest = DatasetManifest::load(&a.manifest)?;
    let data = manifest.load_split(Split::Train)?;
    log::info!(
        "distilling {} on {} videos for {} epochs",
        cfg.regime,
        data.len(),
        cfg.epochs
    );
    let (encoder, log) = train_secondary(&cfg, &primary.encoder, decoder, &data)?;
    save_model(
        &ModelFile {
            regime: cfg.regime,
            encoder,
            decoder: None,
        },
        &a.out,
    )?;
    log.write_csv(&metrics_path(&a.overrides, &a.out))?;
    emit(out, a.out.display())
}

fn build(a: BuildCodebookArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    ensure!(
        !model.regime.is_secondary(),
        Regime,
        "codebooks are hashed by the primary encoder, {} holds a {} encoder",
        a.model.display(),
        model.regime
    );
    let regime = a.regime.unwrap_or(model.regime);
    let mode = if regime.duplicated_codebook() {
        CodebookMode::Duplicated(a.alphas.map_or_else(default_alphas, |g| g.0))
    } else {
        ensure!(
            a.alphas.is_none(),
            Config,
            "--alphas only applies to ssth-rt++ codebooks"
        );
        CodebookMode::Plain
    };
    let manifest = DatasetManifest::load(&a.manifest)?;
    let data = manifest.load_split(Split::Codebook)?;
    let cb = build_codebook(&model.encoder, &data, &mode)?;
    save_codebook(&cb, &a.out)?;
    log::info!("{} entries for {} videos", cb.len(), cb.num_videos());
    emit(out, a.out.display())
}

fn load_pair(model: &Path, codebook: &Path) -> Result<(ModelFile, Codebook)> {
    let m = load_model(model)?;
    let cb = load_codebook(codebook)?;
    ensure!(
        m.encoder.n_bits == cb.n_bits(),
        Regime,
        "{} encodes {} bits but {} holds {}-bit codes",
        model.display(),
        m.encoder.n_bits,
        codebook.display(),
        cb.n_bits()
    );
    Ok((m, cb))
}

fn hits_json(r: &RetrievalResult) -> serde_json::Value {
    r.hits
        .iter()
        .map(|h| json!({ "video_id": h.video_id, "distance": h.distance, "alpha": h.alpha }))
        .collect()
}

fn query(a: QueryArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(a.k >= 1, InvalidInput, "K must be at least 1");
    let (model, cb) = load_pair(&a.model, &a.codebook)?;
    let seq = read_features(&a.features, 0)?;
    let observed = truncate(&seq, a.alpha)?;
    let code = model.encoder.encode_sequence(&observed)?.final_code;
    let r = retrieve(&cb, &code, a.k)?;
    let line = json!({
        "clips": observed.len(),
        "alpha": a.alpha,
        "code": code.to_string(),
        "hits": hits_json(&r),
    });
    emit(out, line)
}

fn stream_sim(a: StreamSimArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(a.k >= 1, InvalidInput, "K must be at least 1");
    let (model, cb) = load_pair(&a.model, &a.codebook)?;
    let seq = read_features(&a.features, 0)?;
    match &a.out {
        Some(path) => {
            let mut file =
                std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
            replay(&model, &cb, &seq, a.k, &mut file)?;
            file.flush().map_err(|e| Error::io(path, e))
        }
        None => replay(&model, &cb, &seq, a.k, out),
    }
}

/// One JSON line per clip: clip count, elapsed fraction and the top-K.
fn replay(
    model: &ModelFile,
    cb: &Codebook,
    seq: &FeatureSequence,
    k: usize,
    sink: &mut dyn Write,
) -> Result<()> {
    let mut session = StreamSession::open(&model.encoder, seq.video_id);
    for clip in seq.clips() {
        session.push(clip)?;
        let r = session.query(cb, k)?;
        let t = session.clips_consumed();
        let line = json!({
            "clip": t,
            "elapsed": t as f64 / seq.len() as f64,
            "hits": hits_json(&r),
        });
        emit(sink, line)?;
    }
    Ok(())
}

/// Unix seconds from `SOURCE_DATE_EPOCH`, else the clock.
fn report_timestamp() -> Result<u64> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("SOURCE_DATE_EPOCH `{v}` is not unix seconds"))),
        Err(_) => Ok(SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)),
    }
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(a.k >= 1, InvalidInput, "K must be at least 1");
    let timestamp = report_timestamp()?;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let mut loaded = Vec::with_capacity(a.methods.len());
    for m in &a.methods {
        let (model, cb) = load_pair(&m.model, &m.codebook)?;
        let fits = model.regime == m.regime
            || (m.regime == Regime::SsthRtPlusPlus
                && model.regime.primary_training() == model.regime);
        ensure!(
            fits,
            Regime,
            "{} holds a {} encoder, not a {} query encoder",
            m.model.display(),
            model.regime,
            m.regime
        );
        ensure!(
            cb.is_duplicated() == m.regime.duplicated_codebook(),
            Regime,
            "{} expects a {} codebook, {} is not",
            m.regime,
            if m.regime.duplicated_codebook() {
                "duplicated"
            } else {
                "plain"
            },
            m.codebook.display()
        );
        loaded.push((m.regime, model, cb));
    }
    let labels: HashMap<u64, u32> = manifest
        .videos
        .iter()
        .map(|v| (v.video_id, v.class_id))
        .collect();
    let queries = manifest.load_split(Split::Query)?;
    let mut rows = Vec::new();
    for (regime, model, cb) in &loaded {
        let bundle = MethodBundle {
            method: regime.name(),
            query_encoder: &model.encoder,
            codebook: cb,
        };
        rows.extend(sweep(&bundle, &queries, &labels, &a.alphas.0, a.k)?);
    }
    let report = EvalReport {
        metadata: ReportMetadata {
            seed: a.seed,
            dataset_id: manifest.dataset_id.clone(),
            timestamp: Some(timestamp),
        },
        rows,
    };
    report.write(&a.out)?;
    if let Ok(aggs) = report.aggregate() {
        for g in aggs {
            log::info!(
                "{} @ {} bits: VE {:.4} E {:.4} O {:.4}",
                g.method,
                g.n_bits,
                g.ve,
                g.e,
                g.o
            );
        }
    }
    emit(out, a.out.display())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(a.k >= 1, InvalidInput, "K must be at least 1");
    let cb = match &a.codebook {
        Some(path) => load_codebook(path)?,
        None => {
            ensure!(
                a.bits >= 1 && a.entries >= 1,
                InvalidInput,
                "random codebook needs bits and entries"
            );
            random_codebook(a.bits, a.entries, a.seed)
        }
    };
    let search = bench_search(&cb, a.queries, a.k, a.seed.wrapping_add(1))?;
    let pipeline = match (&a.model, &a.manifest) {
        (Some(model), Some(manifest)) => {
            let m = load_model(model)?;
            ensure!(
                m.encoder.n_bits == cb.n_bits(),
                Regime,
                "{}-bit model against a {}-bit codebook",
                m.encoder.n_bits,
                cb.n_bits()
            );
            let queries = DatasetManifest::load(manifest)?.load_split(Split::Query)?;
            Some(bench_pipeline(&m.encoder, &cb, &queries, a.k)?)
        }
        _ => None,
    };
    let doc = json!({ "search": search, "pipeline": pipeline });
    let text = serde_json::to_string_pretty(&doc).expect("bench report serializes");
    match &a.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Error::io(path, e))?;
            emit(out, path.display())
        }
        None => emit(out, text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_grids() {
        assert_eq!(parse_alphas("0.1..1.0").unwrap(), default_alphas());
        assert_eq!(parse_alphas("0.2..0.6:0.2").unwrap(), vec![0.2, 0.4, 0.6]);
        assert_eq!(parse_alphas("0.5,1").unwrap(), vec![0.5, 1.0]);
        assert_eq!(parse_alphas("1").unwrap(), vec![1.0]);
        for bad in [
            "0..1",
            "0.1..1.5",
            "0.5..0.1",
            "0.1..1.0:0.4",
            "x",
            "0.1..1.0:0",
        ] {
            assert!(parse_alphas(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn default_split_flag() {
        assert_eq!(
            parse_ratios("0.5,0.45,0.05").unwrap(),
            crate::data::DEFAULT_SPLIT
        );
        assert!(parse_ratios("0.5,0.5").is_err());
    }

    #[test]
    fn method_specs() {
        let m = parse_method("la-code:a/b.msh:c:d.mshc").unwrap();
        assert_eq!(m.regime, Regime::LaCode);
        assert_eq!(m.model, PathBuf::from("a/b.msh"));
        assert_eq!(m.codebook, PathBuf::from("c:d.mshc"));
        assert!(parse_method("la-code:x").is_err());
        assert!(parse_method("nope:x:y").is_err());
    }

    #[test]
    fn error_classes_have_distinct_codes() {
        let errs = [
            Error::Config(String::new()),
            Error::InvalidInput(String::new()),
            Error::format("x", "y"),
            Error::Regime(String::new()),
            Error::io("x", std::io::Error::other("z")),
        ];
        let mut codes: Vec<i32> = errs.iter().map(exit_code).collect();
        codes.push(EXIT_USAGE);
        codes.push(0);
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), 7);
    }

    #[test]
    fn usage_errors() {
        let mut sink = Vec::new();
        assert_eq!(
            run_with_output(["msh", "frobnicate"], &mut sink),
            EXIT_USAGE
        );
        assert_eq!(
            run_with_output(["msh", "train", "--regime", "x"], &mut sink),
            EXIT_USAGE
        );
        assert_eq!(run_with_output(["msh", "--help"], &mut sink), 0);
    }
}
