//! Chunk-size latency and real-time-factor measurement.
//!
//! Latency is the chunk duration plus the mean time to process one chunk;
//! RTF is mean processing time over chunk duration. The mean is rounded to
//! whole microseconds, and the derived columns are computed from the rounded
//! value so every emitted row satisfies both identities exactly.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::SpeakerEmbedding;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::stream::{StreamOptions, StreamSession};

pub const DEFAULT_CHUNKS_MS: [u32; 6] = [20, 40, 60, 100, 120, 140];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub chunk_ms: Vec<u32>,
    pub trials: usize,
    pub warmup: usize,
    pub device: String,
    /// Number of concurrent sessions, one thread each.
    pub parallel: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            chunk_ms: DEFAULT_CHUNKS_MS.to_vec(),
            trials: 20,
            warmup: 3,
            device: "cpu".into(),
            parallel: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub chunk_ms: u32,
    pub mean_proc_ms: f64,
    pub latency_ms: f64,
    pub rtf: f64,
}

impl BenchRow {
    /// Builds a row from a raw mean, rounding it to microseconds first.
    pub fn from_mean(chunk_ms: u32, mean: Duration) -> Self {
        let mean_proc_ms = (mean.as_secs_f64() * 1e6).round() / 1e3;
        let chunk = chunk_ms as f64;
        Self {
            chunk_ms,
            mean_proc_ms,
            latency_ms: chunk + mean_proc_ms,
            rtf: mean_proc_ms / chunk,
        }
    }

    pub fn identities_hold(&self) -> bool {
        let chunk = self.chunk_ms as f64;
        self.latency_ms == chunk + self.mean_proc_ms && self.rtf == self.mean_proc_ms / chunk
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub variant: String,
    pub device: String,
    pub warmup: usize,
    pub trials: usize,
    pub parallel: usize,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?} (table, csv, json)"
            ))),
        }
    }
}

impl BenchReport {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            ReportFormat::Csv => {
                let mut s = String::from(
                    "variant,device,warmup,trials,parallel,chunk_ms,mean_proc_ms,latency_ms,rtf\n",
                );
                for r in &self.rows {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{}",
                        self.variant,
                        self.device,
                        self.warmup,
                        self.trials,
                        self.parallel,
                        r.chunk_ms,
                        r.mean_proc_ms,
                        r.latency_ms,
                        r.rtf
                    );
                }
                s
            }
            ReportFormat::Table => {
                let mut s = format!(
                    "variant={} device={} warmup={} trials={} parallel={}\n",
                    self.variant, self.device, self.warmup, self.trials, self.parallel
                );
                let _ = writeln!(
                    s,
                    "{:>8}  {:>14}  {:>14}  {:>22}",
                    "chunk_ms", "mean_proc_ms", "latency_ms", "rtf"
                );
                for r in &self.rows {
                    let _ = writeln!(
                        s,
                        "{:>8}  {:>14}  {:>14}  {:>22}",
                        r.chunk_ms, r.mean_proc_ms, r.latency_ms, r.rtf
                    );
                }
                s
            }
        }
    }
}

fn synthetic_audio(len: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-0.3f32..0.3)).collect()
}

fn time_session(
    model: &Model,
    emb: &SpeakerEmbedding,
    chunk: usize,
    cfg: &BenchConfig,
    lane: u64,
) -> Result<Duration> {
    let audio = synthetic_audio(chunk * (cfg.warmup + cfg.trials), cfg.seed ^ lane);
    let mut session = StreamSession::open(model, emb.clone(), StreamOptions::default())?;
    let mut pieces = audio.chunks(chunk);
    for piece in pieces.by_ref().take(cfg.warmup) {
        session.push_chunk(piece)?;
    }
    let mut total = Duration::ZERO;
    for piece in pieces {
        total += session.push_chunk(piece)?.processing_time;
    }
    Ok(total)
}

/// Times `warmup + trials` pushes of synthetic audio per chunk size, on a
/// fresh session per size (and per lane when `parallel > 1`).
pub fn run_bench(model: &Model, emb: &SpeakerEmbedding, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if cfg.parallel == 0 {
        return Err(Error::InvalidArgument("parallel must be >= 1".into()));
    }
    if cfg.chunk_ms.is_empty() || cfg.chunk_ms.contains(&0) {
        return Err(Error::InvalidArgument("chunk sizes must be positive".into()));
    }
    let per_ms = model.config().sample_rate as usize / 1000;
    let mut rows = Vec::with_capacity(cfg.chunk_ms.len());
    for &ms in &cfg.chunk_ms {
        let chunk = ms as usize * per_ms;
        let total = if cfg.parallel == 1 {
            time_session(model, emb, chunk, cfg, 0)?
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = (0..cfg.parallel as u64)
                    .map(|lane| s.spawn(move || time_session(model, emb, chunk, cfg, lane)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("bench lane panicked"))
                    .sum::<Result<Duration>>()
            })?
        };
        let pushes = (cfg.trials * cfg.parallel) as u32;
        rows.push(BenchRow::from_mean(ms, total / pushes));
    }
    Ok(BenchReport {
        variant: model.variant().to_string(),
        device: cfg.device.clone(),
        warmup: cfg.warmup,
        trials: cfg.trials,
        parallel: cfg.parallel,
        rows,
    })
}
