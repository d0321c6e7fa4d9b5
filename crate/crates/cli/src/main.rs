//! `streamanon` command-line tool.
//!
//! Exit codes: 0 success, 1 other failure, 2 input format error, 3 container
//! error, 4 constraint failure (no acceptable pseudo-speaker).

mod io;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use streamanon::metrics::{
    compute_eer, cross_entropy_units, mel_l1, multires_stft_loss, read_scores, ScoreSet,
};
use streamanon::{
    cosine_distance, cosine_similarity_score, generate_pseudo, load_blocklist, load_embedding, offline_run,
    run_bench, save_embedding, AnonPolicy, ArchConfig, BenchConfig, Container, Error, Model, ModelWeights,
    ReportFormat, SourceTag, SpeakerEmbedding, StreamOptions, StreamSession, VarianceControls, Variant,
};

use io::FormatError;

#[derive(Parser)]
#[command(name = "streamanon", version, about = "Streaming speaker anonymization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anonymize a 16 kHz mono PCM16 WAV file.
    Anonymize(AnonymizeArgs),
    /// Measure per-chunk latency and real-time factor.
    Bench(BenchArgs),
    /// Write a container of seeded random weights.
    InitWeights(InitArgs),
    /// Write a seeded random embedding sidecar.
    RandomEmbedding(EmbeddingArgs),
    /// Print the config, tensors and checksum of a container.
    Info { path: PathBuf },
    /// Evaluation metrics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
}

#[derive(clap::Args)]
struct AnonymizeArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Embedding sidecar of the source speaker.
    #[arg(long)]
    source_emb: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Push size in milliseconds for streaming mode.
    #[arg(long, default_value_t = 40)]
    chunk_ms: u32,
    /// Pitch shift in semitones.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pitch_shift: f32,
    #[arg(long, default_value_t = 1.0)]
    energy_scale: f32,
    /// Use pitch and energy measured from the input.
    #[arg(long)]
    copy_variance: bool,
    /// Process the whole file in one pass.
    #[arg(long)]
    offline: bool,
    /// Required cosine distance between pseudo and source speaker.
    #[arg(long, default_value_t = 0.3)]
    min_distance: f32,
    #[arg(long, default_value_t = 1000)]
    max_attempts: usize,
    /// Embedding sidecar or `embeddings` container of speakers to avoid.
    #[arg(long)]
    blocklist: Option<PathBuf>,
    /// Also write the generated pseudo-speaker embedding here.
    #[arg(long)]
    save_pseudo: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => ReportFormat::Table,
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, conflicts_with = "variant")]
    model: Option<PathBuf>,
    /// Benchmark a seeded random model instead of a container.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Comma-separated chunk sizes in milliseconds.
    #[arg(long, value_delimiter = ',', default_values_t = streamanon::bench::DEFAULT_CHUNKS_MS)]
    chunk_ms: Vec<u32>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Free-form label stored in the report.
    #[arg(long, default_value = "cpu")]
    device: String,
    /// Concurrent sessions, one thread each.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct InitArgs {
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EmbeddingArgs {
    #[arg(long, default_value_t = streamanon::embedding::DEFAULT_EMBED_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// Equal error rate from genuine and impostor score files.
    Eer {
        #[arg(long)]
        genuine: PathBuf,
        #[arg(long)]
        impostor: PathBuf,
    },
    /// Cosine similarity and distance of two embedding sidecars.
    Cosine { a: PathBuf, b: PathBuf },
    /// Multi-resolution STFT loss between two WAV files.
    Stft { x: PathBuf, y: PathBuf },
    /// Log-mel L1 distance between two WAV files.
    Mel { x: PathBuf, y: PathBuf },
    /// Mean unit cross-entropy of a logits file against a labels file.
    Ce {
        #[arg(long)]
        logits: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Anonymize(a) => anonymize(a),
        Command::Bench(b) => bench(b),
        Command::InitWeights(i) => init_weights(i),
        Command::RandomEmbedding(e) => random_embedding(e),
        Command::Info { path } => info(&path),
        Command::Metrics(m) => metrics(m),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<FormatError>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            match err {
                Error::Container(_) => return 3,
                Error::MaxAttempts { .. } => return 4,
                Error::Malformed { .. } => return 2,
                _ => {}
            }
        }
    }
    1
}

fn anonymize(a: AnonymizeArgs) -> Result<()> {
    if a.chunk_ms == 0 {
        bail!("--chunk-ms must be positive");
    }
    let samples = io::read_wav(&a.input)?;
    let model = Model::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let dim = model.embed_dim();
    let source = load_embedding(&a.source_emb, Some(dim))
        .with_context(|| format!("loading source embedding {}", a.source_emb.display()))?;
    let blocklist = match &a.blocklist {
        Some(p) => load_blocklist(p, dim).with_context(|| format!("loading blocklist {}", p.display()))?,
        None => Vec::new(),
    };
    let policy = AnonPolicy {
        min_cosine_distance: a.min_distance,
        max_attempts: a.max_attempts,
        rng_seed: a.seed,
        blocklist,
    };
    let pseudo = generate_pseudo(&source, &model.generator, &policy)?;
    eprintln!(
        "pseudo-speaker: cosine distance {:.4} from source after {} attempt(s)",
        pseudo.distance, pseudo.attempts
    );
    if let Some(p) = &a.save_pseudo {
        save_embedding(&pseudo.embedding, p)?;
    }
    let options = StreamOptions {
        controls: VarianceControls {
            pitch_shift_semitones: a.pitch_shift,
            energy_scale: a.energy_scale,
            ..VarianceControls::default()
        },
        copy_variance: a.copy_variance,
    };
    let out = if a.offline {
        offline_run(&model, &pseudo.embedding, options, &samples)?
    } else {
        let chunk = a.chunk_ms as usize * model.config().sample_rate as usize / 1000;
        let mut session = StreamSession::open(&model, pseudo.embedding.clone(), options)?;
        let mut out = Vec::with_capacity(samples.len() + model.config().hop());
        for piece in samples.chunks(chunk) {
            out.extend(session.push_chunk(piece)?.samples);
        }
        out.extend(session.flush()?);
        out
    };
    io::write_wav(&a.output, &out)?;
    eprintln!("wrote {} samples to {}", out.len(), a.output.display());
    Ok(())
}

fn bench(b: BenchArgs) -> Result<()> {
    let model = match (&b.model, b.variant) {
        (Some(p), _) => Model::load(p).with_context(|| format!("loading model {}", p.display()))?,
        (None, Some(v)) => Model::random(v, b.seed)?,
        (None, None) => bail!("pass --model PATH or --variant base|lite"),
    };
    let source = SpeakerEmbedding::new(vec![1.0; model.embed_dim()], SourceTag::Source)?;
    let pseudo = generate_pseudo(&source, &model.generator, &AnonPolicy::with_seed(b.seed))?;
    let cfg = BenchConfig {
        chunk_ms: b.chunk_ms,
        trials: b.trials,
        warmup: b.warmup,
        device: b.device,
        parallel: b.parallel,
        seed: b.seed,
    };
    let report = run_bench(&model, &pseudo.embedding, &cfg)?;
    emit(&report.render(b.format.into()))
}

fn init_weights(i: InitArgs) -> Result<()> {
    let weights = ModelWeights::init(ArchConfig::for_variant(i.variant), i.seed)?;
    weights
        .save(&i.out)
        .with_context(|| format!("writing {}", i.out.display()))?;
    println!("variant {} seed {} -> {}", i.variant, i.seed, i.out.display());
    for (group, n) in weights.param_breakdown() {
        println!("  {group:<12} {n:>10}");
    }
    println!("  {:<12} {:>10}", "total", weights.param_count());
    Ok(())
}

fn random_embedding(e: EmbeddingArgs) -> Result<()> {
    let emb = SpeakerEmbedding::random(e.dim, e.seed, SourceTag::Source)?;
    save_embedding(&emb, &e.out).with_context(|| format!("writing {}", e.out.display()))?;
    Ok(())
}

fn info(path: &Path) -> Result<()> {
    let c = Container::read(path).with_context(|| format!("reading {}", path.display()))?;
    let config: serde_json::Value = serde_json::from_str(&c.config)
        .map_err(|e| Error::from(streamanon::ContainerError::Config(e.to_string())))?;
    let mut s = String::new();
    writeln!(s, "file      {}", path.display())?;
    writeln!(s, "checksum  {:#010x}", c.payload_checksum())?;
    writeln!(s, "config    {config}")?;
    let total: usize = c.tensors.iter().map(|(_, t)| t.numel()).sum();
    writeln!(s, "tensors   {} ({total} values)", c.tensors.len())?;
    for (name, t) in &c.tensors {
        writeln!(
            s,
            "  {name:<40} {:<18} {:>10}",
            format!("{:?}", t.shape),
            t.numel()
        )?;
    }
    // A model container must also match its declared architecture.
    if config.get("variant").is_some() {
        ModelWeights::from_container(c)?;
    }
    emit(&s)
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(s: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(s.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn metrics(m: MetricsCommand) -> Result<()> {
    match m {
        MetricsCommand::Eer { genuine, impostor } => {
            let scores = ScoreSet::new(read_scores(&genuine)?, read_scores(&impostor)?);
            let (eer, threshold) = compute_eer(&scores)?;
            println!("eer {eer}");
            println!("threshold {threshold}");
        }
        MetricsCommand::Cosine { a, b } => {
            let ea = load_embedding(&a, None)?;
            let eb = load_embedding(&b, None)?;
            println!("similarity {}", cosine_similarity_score(&ea, &eb)?);
            println!("distance {}", cosine_distance(&ea, &eb)?);
        }
        MetricsCommand::Stft { x, y } => {
            println!(
                "stft_loss {}",
                multires_stft_loss(&io::read_wav(&x)?, &io::read_wav(&y)?)?
            );
        }
        MetricsCommand::Mel { x, y } => {
            println!("mel_l1 {}", mel_l1(&io::read_wav(&x)?, &io::read_wav(&y)?)?);
        }
        MetricsCommand::Ce { logits, labels } => {
            let l = io::parse_logits(&std::fs::read_to_string(&logits)?)?;
            let y = io::parse_labels(&std::fs::read_to_string(&labels)?)?;
            println!("cross_entropy {}", cross_entropy_units(&l, &y)?);
        }
    }
    Ok(())
}
