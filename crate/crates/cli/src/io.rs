//! File formats the CLI reads and writes besides containers.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use streamanon::{FrameTensor, SAMPLE_RATE};

/// Input that is readable but not in an accepted format. Maps to exit code 2.
#[derive(Debug)]
pub struct FormatError(pub String);

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FormatError {}

const EXPECTED_WAV: &str = "16000 Hz mono 16-bit PCM WAV";

/// Reads a 16 kHz mono PCM16 WAV as samples in `[-1, 1)`.
pub fn read_wav(path: &Path) -> Result<Vec<f32>> {
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => anyhow::Error::new(io).context(format!("opening {}", path.display())),
        other => FormatError(format!("{}: {other}; expected {EXPECTED_WAV}", path.display())).into(),
    })?;
    let spec = reader.spec();
    let ok = spec.sample_rate == SAMPLE_RATE
        && spec.channels == 1
        && spec.bits_per_sample == 16
        && spec.sample_format == hound::SampleFormat::Int;
    if !ok {
        let kind = match spec.sample_format {
            hound::SampleFormat::Int => "PCM",
            hound::SampleFormat::Float => "float",
        };
        return Err(FormatError(format!(
            "{}: got {} Hz, {} channel(s), {}-bit {kind}; expected {EXPECTED_WAV}",
            path.display(),
            spec.sample_rate,
            spec.channels,
            spec.bits_per_sample
        ))
        .into());
    }
    reader
        .into_samples::<i16>()
        .map(|s| {
            s.map(|v| v as f32 / 32768.0)
                .map_err(|e| FormatError(format!("{}: {e}", path.display())).into())
        })
        .collect()
}

/// Writes samples as 16 kHz mono PCM16, clipping to the representable range.
pub fn write_wav(path: &Path, samples: &[f32]) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w =
        hound::WavWriter::create(path, spec).with_context(|| format!("creating {}", path.display()))?;
    for &s in samples {
        w.write_sample(to_pcm16(s))?;
    }
    w.finalize()?;
    Ok(())
}

pub fn to_pcm16(s: f32) -> i16 {
    (s * 32768.0).round().clamp(i16::MIN as f32, i16::MAX as f32) as i16
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Logits text: one frame per line, one whitespace-separated real per unit.
/// Returns a `[units, frames]` tensor.
pub fn parse_logits(text: &str) -> Result<FrameTensor> {
    let mut frames: Vec<Vec<f32>> = Vec::new();
    for (line, l) in content_lines(text) {
        let row = l
            .split_whitespace()
            .map(|tok| tok.parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FormatError(format!("logits line {line}: {e}")))?;
        if let Some(first) = frames.first() {
            if row.len() != first.len() {
                return Err(FormatError(format!(
                    "logits line {line}: {} values, earlier frames have {}",
                    row.len(),
                    first.len()
                ))
                .into());
            }
        }
        frames.push(row);
    }
    let units = frames.first().map_or(0, Vec::len);
    let mut t = FrameTensor::zeros(units, frames.len());
    for (f, row) in frames.iter().enumerate() {
        for (u, &v) in row.iter().enumerate() {
            t.row_mut(u)[f] = v;
        }
    }
    Ok(t)
}

/// Labels text: non-negative integers separated by whitespace or newlines.
pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        for tok in l.split_whitespace() {
            out.push(
                tok.parse()
                    .map_err(|e| FormatError(format!("labels line {line}: {tok:?}: {e}")))?,
            );
        }
    }
    Ok(out)
}
