mod common;

use common::*;
use proptest::prelude::*;
use streamanon::adapter::{transform_pitch, PitchControlState};
use streamanon::kernels::CumulativeNormState;
use streamanon::{
    speaker_adapt, ArchConfig, FilmParams, FrameTensor, Model, ModelWeights, SourceTag, SpeakerEmbedding,
    VarianceControls, VarianceTrack, Variant,
};

fn emb(seed: u64) -> SpeakerEmbedding {
    SpeakerEmbedding::new(uniform(&mut rng(seed), 704, 1.0), SourceTag::Pseudo).unwrap()
}

fn chunked<F>(z: &FrameTensor, cuts: &[usize], mut f: F) -> FrameTensor
where
    F: FnMut(&FrameTensor) -> FrameTensor,
{
    let mut parts = Vec::new();
    let mut start = 0;
    for &c in cuts.iter().chain(std::iter::once(&z.frames())) {
        parts.push(f(&z.slice_frames(start, c)));
        start = c;
    }
    FrameTensor::concat_frames(&parts).unwrap()
}

#[test]
fn film_from_embedding_has_hidden_width() {
    let m = Model::random(Variant::Lite, 2).unwrap();
    let film = m.adapter.film(&emb(1)).unwrap();
    assert_eq!(film.channels(), 128);
    let wrong = SpeakerEmbedding::new(vec![1.0; 192], SourceTag::Pseudo).unwrap();
    assert!(m.adapter.film(&wrong).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn speaker_adapt_split_invariant(seed in any::<u64>(), frames in 1usize..40, cut_seed in any::<u64>()) {
        let mut r = rng(seed);
        let z = random_tensor(&mut r, 16, frames);
        let film = FilmParams { scale: uniform(&mut r, 16, 2.0), shift: uniform(&mut r, 16, 1.0) };
        let whole = speaker_adapt(&z, &film, &mut CumulativeNormState::new(16)).unwrap();
        let mut cr = rng(cut_seed);
        let mut cuts: Vec<usize> = (0..3).map(|_| rand::Rng::random_range(&mut cr, 0..=frames)).collect();
        cuts.sort();
        let mut st = CumulativeNormState::new(16);
        let parts = chunked(&z, &cuts, |x| speaker_adapt(x, &film, &mut st).unwrap());
        prop_assert_eq!(parts, whole);
    }
}

#[test]
fn zero_predictor_gives_zero() {
    let mut w = ModelWeights::init(ArchConfig::lite(), 4).unwrap();
    for name in ["conv1", "conv2", "out"] {
        for part in ["weight", "bias"] {
            w.get_mut(&format!("adapter.pitch.{name}.{part}"))
                .unwrap()
                .data
                .fill(0.0);
        }
    }
    let m = Model::from_weights(&w).unwrap();
    let mut st = m.adapter.new_state();
    let p = m
        .adapter
        .pitch_predictor()
        .predict(&FrameTensor::zeros(128, 9), &mut st.pitch)
        .unwrap();
    assert_eq!(p, vec![0.0; 9]);
}

#[test]
fn predictors_chunked_equal_one_shot() {
    let m = Model::random(Variant::Lite, 6).unwrap();
    let z = random_tensor(&mut rng(3), 128, 23);
    let whole = {
        let mut st = m.adapter.new_state();
        m.adapter.predict(&z, &mut st).unwrap()
    };
    assert_eq!(whole.len(), 23);
    let mut st = m.adapter.new_state();
    let mut parts = VarianceTrack::default();
    for (a, b) in [(0, 1), (1, 4), (4, 4), (4, 17), (17, 23)] {
        parts.extend(&m.adapter.predict(&z.slice_frames(a, b), &mut st).unwrap());
    }
    assert_eq!(parts, whole);
}

#[test]
fn full_adapter_chunked_equals_one_shot() {
    let m = Model::random(Variant::Lite, 12).unwrap();
    let film = m.adapter.film(&emb(5)).unwrap();
    let controls = VarianceControls {
        pitch_shift_semitones: -3.0,
        pitch_scale: 1.4,
        energy_scale: 0.7,
    };
    let z = random_tensor(&mut rng(8), 128, 30);
    let whole = m
        .adapter
        .forward(&z, &film, &controls, None, &mut m.adapter.new_state())
        .unwrap();
    let mut st = m.adapter.new_state();
    let parts = chunked(&z, &[2, 3, 11, 29], |x| {
        m.adapter.forward(x, &film, &controls, None, &mut st).unwrap()
    });
    assert_eq!(parts, whole);
}

#[test]
fn default_controls_with_zero_projections_pass_through() {
    let mut w = ModelWeights::init(ArchConfig::lite(), 9).unwrap();
    for which in ["pitch", "energy"] {
        for part in ["weight", "bias"] {
            w.get_mut(&format!("adapter.{which}.proj.{part}"))
                .unwrap()
                .data
                .fill(0.0);
        }
    }
    let m = Model::from_weights(&w).unwrap();
    let za = random_tensor(&mut rng(1), 128, 12);
    let track = VarianceTrack {
        pitch: uniform(&mut rng(2), 12, 6.0),
        energy: uniform(&mut rng(3), 12, 4.0),
    };
    let out = m
        .adapter
        .apply_variance(
            &za,
            &track,
            &VarianceControls::default(),
            &mut PitchControlState::new(),
        )
        .unwrap();
    assert_eq!(out, za);
}

#[test]
fn length_mismatch_is_an_error() {
    let m = Model::random(Variant::Lite, 0).unwrap();
    let track = VarianceTrack {
        pitch: vec![0.0; 4],
        energy: vec![0.0; 5],
    };
    let err = m.adapter.apply_variance(
        &FrameTensor::zeros(128, 5),
        &track,
        &VarianceControls::default(),
        &mut PitchControlState::new(),
    );
    assert!(err.is_err());
}

#[test]
fn octave_shift_adds_ln2_on_voiced_frames() {
    let c = VarianceControls {
        pitch_shift_semitones: 12.0,
        ..Default::default()
    };
    let p = [0.0, 4.6, 5.3, 0.0, 6.0];
    let out = transform_pitch(&p, &c, &mut PitchControlState::new());
    for (a, b) in p.iter().zip(&out) {
        if *a == 0.0 {
            assert_eq!(*b, 0.0);
        } else {
            assert!((b - a - std::f32::consts::LN_2).abs() < 1e-6);
        }
    }
}

/// Scalar reference for the variance injection.
fn direct_variance(
    w: &ModelWeights,
    za: &FrameTensor,
    track: &VarianceTrack,
    c: &VarianceControls,
) -> FrameTensor {
    let get = |n: &str| w.get(n).unwrap().data.clone();
    let (wp, bp) = (get("adapter.pitch.proj.weight"), get("adapter.pitch.proj.bias"));
    let (we, be) = (get("adapter.energy.proj.weight"), get("adapter.energy.proj.bias"));
    let offset = c.pitch_shift_semitones as f64 * std::f64::consts::LN_2 / 12.0;
    let (mut sum, mut n) = (0.0f64, 0usize);
    let pitch: Vec<f64> = track
        .pitch
        .iter()
        .map(|&p| {
            if p <= 0.0 {
                return p as f64;
            }
            let s = p as f64 + offset;
            sum += s;
            n += 1;
            let mean = sum / n as f64;
            mean + (s - mean) * c.pitch_scale as f64
        })
        .collect();
    let mut out = za.clone();
    for ch in 0..za.channels() {
        #[allow(clippy::needless_range_loop)]
        for t in 0..za.frames() {
            let e = track.energy[t] as f64 * c.energy_scale as f64;
            let v = za.get(ch, t) as f64
                + bp[ch] as f64
                + wp[ch] as f64 * pitch[t]
                + be[ch] as f64
                + we[ch] as f64 * e;
            out.set(ch, t, v as f32);
        }
    }
    out
}

#[test]
fn apply_variance_matches_direct_formula() {
    let w = ModelWeights::init(ArchConfig::lite(), 31).unwrap();
    let m = Model::from_weights(&w).unwrap();
    let mut r = rng(77);
    for case in 0..20 {
        let t = 1 + case;
        let za = random_tensor(&mut r, 128, t);
        let pitch: Vec<f32> = uniform(&mut r, t, 1.0)
            .into_iter()
            .map(|v| if v < -0.3 { 0.0 } else { 4.5 + v })
            .collect();
        let track = VarianceTrack {
            pitch,
            energy: uniform(&mut r, t, 5.0),
        };
        let c = VarianceControls {
            pitch_shift_semitones: uniform(&mut r, 1, 12.0)[0],
            pitch_scale: 0.5 + uniform(&mut r, 1, 0.5)[0].abs() * 2.0,
            energy_scale: 0.25 + uniform(&mut r, 1, 1.0)[0].abs(),
        };
        let got = m
            .adapter
            .apply_variance(&za, &track, &c, &mut PitchControlState::new())
            .unwrap();
        let want = direct_variance(&w, &za, &track, &c);
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() <= 1e-5 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}
