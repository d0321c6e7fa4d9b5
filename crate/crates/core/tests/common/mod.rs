//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamanon::FrameTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, channels: usize, frames: usize) -> FrameTensor {
    FrameTensor::from_vec(channels, frames, uniform(rng, channels * frames, 1.0)).unwrap()
}

/// Zero-history causal convolution computed term by term, accumulating in
/// the same order as the engine: bias, then input channel, then tap.
pub fn direct_conv(
    x: &FrameTensor,
    w: &[f32],
    bias: Option<&[f32]>,
    cout: usize,
    k: usize,
    stride: usize,
    dilation: usize,
) -> FrameTensor {
    let cin = x.channels();
    let tout = x.frames() / stride;
    let mut y = FrameTensor::zeros(cout, tout);
    for o in 0..cout {
        for n in 0..tout {
            let mut acc = bias.map_or(0.0, |b| b[o]);
            for c in 0..cin {
                for j in 0..k {
                    let idx = (n * stride) as isize - ((k - 1 - j) * dilation) as isize;
                    let v = if idx >= 0 { x.get(c, idx as usize) } else { 0.0 };
                    acc += w[(o * cin + c) * k + j] * v;
                }
            }
            y.set(o, n, acc);
        }
    }
    y
}

/// Zero-stuff by `up` (sample placed at the first slot of each group), then
/// direct causal convolution.
pub fn zero_stuff_conv(
    x: &FrameTensor,
    w: &[f32],
    bias: Option<&[f32]>,
    cout: usize,
    k: usize,
    up: usize,
) -> FrameTensor {
    let cin = x.channels();
    let mut stuffed = FrameTensor::zeros(cin, x.frames() * up);
    for c in 0..cin {
        for t in 0..x.frames() {
            stuffed.set(c, t * up, x.get(c, t));
        }
    }
    direct_conv(&stuffed, w, bias, cout, k, 1, 1)
}

/// O(n²) DFT magnitudes of a centre-padded, Hann-windowed signal.
pub fn naive_stft(wave: &[f32], fft: usize, hop: usize, win: usize) -> Vec<Vec<f64>> {
    let pad = fft / 2;
    let frames = 1 + wave.len() / hop;
    let off = (fft - win) / 2;
    let window: Vec<f64> = (0..fft)
        .map(|i| {
            if i >= off && i < off + win {
                let p = (i - off) as f64;
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * p / win as f64).cos()
            } else {
                0.0
            }
        })
        .collect();
    (0..frames)
        .map(|f| {
            let seg: Vec<f64> = (0..fft)
                .map(|i| {
                    let idx = (f * hop + i) as isize - pad as isize;
                    let v = if idx >= 0 && (idx as usize) < wave.len() {
                        wave[idx as usize] as f64
                    } else {
                        0.0
                    };
                    v * window[i]
                })
                .collect();
            (0..=fft / 2)
                .map(|k| {
                    let (mut re, mut im) = (0.0f64, 0.0f64);
                    for (n, &s) in seg.iter().enumerate() {
                        let ang = -2.0 * std::f64::consts::PI * ((k * n) % fft) as f64 / fft as f64;
                        re += s * ang.cos();
                        im += s * ang.sin();
                    }
                    (re * re + im * im).sqrt()
                })
                .collect()
        })
        .collect()
}

/// EER by evaluating FAR and FRR at every candidate threshold independently
/// and interpolating at the first sign change of FAR − FRR.
pub fn sweep_eer(genuine: &[f64], impostor: &[f64]) -> f64 {
    let mut all: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    let mut cands = vec![all[0] - 1.0];
    for i in 1..all.len() {
        cands.push(all[i - 1] + (all[i] - all[i - 1]) / 2.0);
    }
    cands.push(all[all.len() - 1] + 1.0);
    let rates: Vec<(f64, f64)> = cands
        .iter()
        .map(|&t| {
            let far = impostor.iter().filter(|&&s| s > t).count() as f64 / impostor.len() as f64;
            let frr = genuine.iter().filter(|&&s| s < t).count() as f64 / genuine.len() as f64;
            (far, frr)
        })
        .collect();
    for i in 0..rates.len() {
        let (far, frr) = rates[i];
        if far - frr <= 0.0 {
            if far == frr || i == 0 {
                return far;
            }
            let (pf, pr) = rates[i - 1];
            let (d0, d1) = (pf - pr, far - frr);
            let a = d0 / (d0 - d1);
            return pf + a * (far - pf);
        }
    }
    unreachable!()
}

/// Brute-force mel filterbank: evaluates each triangle from its definition.
pub fn direct_mel_filter(m: usize, k: usize, n_mels: usize, fft: usize, sr: f64, fmax: f64) -> f64 {
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let top = mel(fmax);
    let edge = |i: usize| inv(top * i as f64 / (n_mels + 1) as f64);
    let f = k as f64 * sr / fft as f64;
    let (l, c, r) = (edge(m), edge(m + 1), edge(m + 2));
    if f <= l || f >= r {
        0.0
    } else if f <= c {
        (f - l) / (c - l)
    } else {
        (r - f) / (r - c)
    }
}
