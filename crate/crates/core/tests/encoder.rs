mod common;

use common::*;
use proptest::prelude::*;
use streamanon::{predict_units, Error, FrameTensor, Model, Variant};

fn encode_whole(model: &Model, wave: &[f32]) -> FrameTensor {
    let mut st = model.encoder.new_state();
    model
        .encoder
        .encode(&FrameTensor::from_samples(wave.to_vec()), &mut st)
        .unwrap()
        .z
}

#[test]
fn frame_count_law() {
    for v in [Variant::Lite, Variant::Base] {
        let m = Model::random(v, 3).unwrap();
        for n in [320usize, 1920, 16000] {
            let z = encode_whole(&m, &uniform(&mut rng(n as u64), n, 0.5));
            assert_eq!(z.frames(), n / 320, "{v} N={n}");
            assert_eq!(z.channels(), m.config().hidden_dim);
        }
    }
}

#[test]
fn partial_hop_is_rejected() {
    let m = Model::random(Variant::Lite, 0).unwrap();
    let mut st = m.encoder.new_state();
    let err = m
        .encoder
        .encode(&FrameTensor::from_samples(vec![0.0; 500]), &mut st)
        .unwrap_err();
    assert!(matches!(
        err,
        Error::PartialHop {
            samples: 500,
            hop: 320
        }
    ));
}

#[test]
fn zero_input_is_finite_and_deterministic() {
    let m = Model::random(Variant::Lite, 11).unwrap();
    let a = encode_whole(&m, &[0.0; 1280]);
    let b = encode_whole(&m, &[0.0; 1280]);
    assert!(a.is_finite());
    assert_eq!(a, b);
}

#[test]
fn logits_shape() {
    let m = Model::random(Variant::Lite, 1).unwrap();
    for n in [0usize, 320, 1920] {
        let mut st = m.encoder.new_state();
        let z = m
            .encoder
            .encode(&FrameTensor::from_samples(vec![0.1; n]), &mut st)
            .unwrap();
        let logits = m.encoder.content_logits(&z).unwrap();
        assert_eq!((logits.channels(), logits.frames()), (200, n / 320));
    }
}

#[test]
fn chunk_grid_matches_one_shot() {
    let m = Model::random(Variant::Lite, 5).unwrap();
    let chunks_ms = [20usize, 40, 60, 100, 120, 140];
    let total: usize = chunks_ms.iter().sum::<usize>() * 16;
    let wave = uniform(&mut rng(9), total, 0.5);
    let whole = encode_whole(&m, &wave);
    let mut st = m.encoder.new_state();
    let mut parts = Vec::new();
    let mut at = 0;
    for ms in chunks_ms {
        let n = ms * 16;
        let x = FrameTensor::from_samples(wave[at..at + n].to_vec());
        parts.push(m.encoder.encode(&x, &mut st).unwrap().z);
        at += n;
    }
    assert_eq!(FrameTensor::concat_frames(&parts).unwrap(), whole);
}

#[test]
fn later_samples_never_reach_earlier_frames() {
    let m = Model::random(Variant::Lite, 8).unwrap();
    let mut r = rng(21);
    for k in [1usize, 3, 7] {
        let a = uniform(&mut r, 320 * 10, 0.5);
        let mut b = a.clone();
        for v in &mut b[k * 320..] {
            *v = -*v + 0.1;
        }
        let (za, zb) = (encode_whole(&m, &a), encode_whole(&m, &b));
        assert_eq!(za.slice_frames(0, k), zb.slice_frames(0, k));
        assert_ne!(za.slice_frames(k, 10), zb.slice_frames(k, 10));
    }
}

#[test]
fn unit_ties_and_one_hot() {
    let mut one_hot = FrameTensor::zeros(200, 3);
    for (t, u) in [17usize, 0, 199].into_iter().enumerate() {
        one_hot.set(u, t, 1.0);
    }
    assert_eq!(predict_units(&one_hot).unwrap(), vec![17, 0, 199]);
    let flat = FrameTensor::from_vec(200, 2, vec![0.5; 400]).unwrap();
    assert_eq!(predict_units(&flat).unwrap(), vec![0, 0]);
}

/// Scans each frame keeping the first index that attains the maximum.
fn scan_argmax(logits: &FrameTensor) -> Vec<usize> {
    (0..logits.frames())
        .map(|t| {
            let col: Vec<f32> = (0..logits.channels()).map(|c| logits.get(c, t)).collect();
            let max = col.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            col.iter().position(|&v| v == max).unwrap()
        })
        .collect()
}

proptest! {
    #[test]
    fn units_match_scan(seed in any::<u64>(), frames in 0usize..20, coarse in any::<bool>()) {
        let mut r = rng(seed);
        let mut logits = random_tensor(&mut r, 200, frames);
        if coarse {
            // Force many ties.
            for v in logits.data_mut() {
                *v = (*v * 2.0).round();
            }
        }
        prop_assert_eq!(predict_units(&logits).unwrap(), scan_argmax(&logits));
    }
}

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/lite_seed7_units.txt");

#[test]
fn unit_argmax_is_stable() {
    let m = Model::random(Variant::Lite, 7).unwrap();
    let wave: Vec<f32> = (0..16000)
        .map(|i| {
            let t = i as f32 / 16000.0;
            0.4 * (2.0 * std::f32::consts::PI * 220.0 * t).sin()
                + 0.2 * (2.0 * std::f32::consts::PI * 1330.0 * t).sin()
        })
        .collect();
    let z = encode_whole(&m, &wave);
    let units = predict_units(&m.encoder.content_logits(&streamanon::ContentRepr { z }).unwrap()).unwrap();
    let text: String = units.iter().map(|u| format!("{u}\n")).collect();
    if std::env::var_os("STREAMANON_BLESS").is_some() {
        std::fs::write(GOLDEN, &text).unwrap();
    }
    let expected = std::fs::read_to_string(GOLDEN).expect("golden unit file");
    assert_eq!(text, expected);
}
