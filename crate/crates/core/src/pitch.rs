//! Causal YIN pitch tracking and per-hop log energy.
//!
//! Each 320-sample hop is analysed over a 1024-sample frame that ends at the
//! hop's last sample, so an estimate never looks ahead.

use crate::adapter::VarianceTrack;
use crate::config::{HOP, SAMPLE_RATE};

/// Analysis frame length in samples.
pub const FRAME: usize = 1024;
pub const F0_MIN: f32 = 50.0;
pub const F0_MAX: f32 = 600.0;
pub const YIN_THRESHOLD: f64 = 0.15;
/// Frames whose RMS falls below this are unvoiced.
pub const SILENCE_RMS: f64 = 1e-4;
pub const ENERGY_FLOOR: f32 = 1e-7;

const TAU_MIN: usize = 27; // ceil(16000 / 600)
const TAU_MAX: usize = 320; // 16000 / 50
/// One extra lag so the last candidate can be interpolated.
const TAU_LAST: usize = TAU_MAX + 1;
const WINDOW: usize = FRAME - TAU_LAST;

/// Streaming pitch/energy analysis; keeps the last `FRAME - HOP` samples.
#[derive(Debug, Clone)]
pub struct PitchTracker {
    history: Vec<f32>,
    pending: Vec<f32>,
}

impl Default for PitchTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl PitchTracker {
    pub fn new() -> Self {
        Self {
            history: vec![0.0; FRAME - HOP],
            pending: Vec::with_capacity(HOP),
        }
    }

    /// Consumes samples and returns one value pair per completed hop.
    pub fn push(&mut self, samples: &[f32]) -> VarianceTrack {
        let mut track = VarianceTrack::default();
        let mut rest = samples;
        while !rest.is_empty() {
            let need = HOP - self.pending.len();
            let take = need.min(rest.len());
            self.pending.extend_from_slice(&rest[..take]);
            rest = &rest[take..];
            if self.pending.len() == HOP {
                let mut frame = Vec::with_capacity(FRAME);
                frame.extend_from_slice(&self.history);
                frame.extend_from_slice(&self.pending);
                track.pitch.push(yin_frame(&frame));
                track.energy.push(log_rms(&self.pending));
                self.history.drain(..HOP);
                self.history.extend_from_slice(&self.pending);
                self.pending.clear();
            }
        }
        track
    }
}

/// Log-F0 per whole hop (0 = unvoiced); a trailing partial hop is ignored.
pub fn extract_pitch(wave: &[f32]) -> Vec<f32> {
    PitchTracker::new().push(&wave[..wave.len() / HOP * HOP]).pitch
}

/// `ln(RMS + 1e-7)` per whole hop.
pub fn extract_energy(wave: &[f32]) -> Vec<f32> {
    wave.chunks_exact(HOP).map(log_rms).collect()
}

fn log_rms(hop: &[f32]) -> f32 {
    let ms = hop.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / hop.len() as f64;
    (ms.sqrt() as f32 + ENERGY_FLOOR).ln()
}

/// YIN on one analysis frame; returns ln(F0) or 0.
fn yin_frame(frame: &[f32]) -> f32 {
    debug_assert_eq!(frame.len(), FRAME);
    let energy = frame.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / FRAME as f64;
    if energy.sqrt() < SILENCE_RMS {
        return 0.0;
    }
    match yin_lag(frame) {
        Some(tau) => {
            let f0 = (SAMPLE_RATE as f64 / tau) as f32;
            f0.clamp(F0_MIN, F0_MAX).ln()
        }
        None => 0.0,
    }
}

/// Cumulative-mean-normalized difference for lags `0..=TAU_LAST`.
fn cmnd(frame: &[f32]) -> Vec<f64> {
    let x: Vec<f64> = frame.iter().map(|&v| v as f64).collect();
    let mut d = vec![0.0f64; TAU_LAST + 1];
    for (tau, dt) in d.iter_mut().enumerate().skip(1) {
        let mut acc = 0.0;
        for j in 0..WINDOW {
            let diff = x[j] - x[j + tau];
            acc += diff * diff;
        }
        *dt = acc;
    }
    let mut out = vec![1.0f64; TAU_LAST + 1];
    let mut running = 0.0;
    for tau in 1..=TAU_LAST {
        running += d[tau];
        out[tau] = if running > 0.0 {
            d[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
    out
}

/// First lag in range whose normalized difference dips below the threshold,
/// walked down to its local minimum and refined by parabolic interpolation.
fn yin_lag(frame: &[f32]) -> Option<f64> {
    let d = cmnd(frame);
    let mut tau = (TAU_MIN..=TAU_MAX).find(|&t| d[t] < YIN_THRESHOLD)?;
    while tau < TAU_MAX && d[tau + 1] < d[tau] {
        tau += 1;
    }
    let (a, b, c) = (d[tau - 1], d[tau], d[tau + 1]);
    let denom = a - 2.0 * b + c;
    let delta = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some(tau as f64 + delta.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(f: f32, n: usize, amp: f32) -> Vec<f32> {
        (0..n)
            .map(|i| amp * (2.0 * std::f32::consts::PI * f * i as f32 / 16000.0).sin())
            .collect()
    }

    #[test]
    fn sine_440() {
        let p = extract_pitch(&sine(440.0, 16000, 0.5));
        assert_eq!(p.len(), 50);
        let voiced: Vec<f32> = p.iter().copied().filter(|&v| v > 0.0).collect();
        assert!(voiced.len() >= 45);
        let ok = voiced.iter().filter(|&&v| (v.exp() - 440.0).abs() <= 4.4).count();
        assert!(ok as f32 >= 0.9 * voiced.len() as f32);
    }

    #[test]
    fn silence_is_unvoiced() {
        let z = vec![0.0f32; 3200];
        assert!(extract_pitch(&z).iter().all(|&v| v == 0.0));
        assert!(extract_energy(&z).iter().all(|&v| v == (1e-7f32).ln()));
    }

    #[test]
    fn square_wave_energy_is_zero() {
        let sq: Vec<f32> = (0..640)
            .map(|i| if (i / 20) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        for e in extract_energy(&sq) {
            assert!(e.abs() < 1e-6);
        }
    }

    #[test]
    fn tracker_split_invariant() {
        let x = sine(180.0, 3200, 0.3);
        let whole = PitchTracker::new().push(&x);
        let mut t = PitchTracker::new();
        let mut parts = t.push(&x[..77]);
        parts.extend(&t.push(&x[77..1000]));
        parts.extend(&t.push(&x[1000..]));
        assert_eq!(whole, parts);
    }
}
