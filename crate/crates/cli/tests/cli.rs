use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use streamanon::{BenchReport, BenchRow, Container, ModelWeights};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamanon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = run(args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Lite model and source embedding shared by the tests.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn get() -> &'static Fixture {
        static F: OnceLock<Fixture> = OnceLock::new();
        F.get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            let f = Fixture { dir };
            ok(&[
                "init-weights",
                "--variant",
                "lite",
                "--seed",
                "11",
                "--out",
                s(&f.model()),
            ]);
            ok(&["random-embedding", "--seed", "4", "--out", s(&f.source())]);
            write_wav(&f.path("tone.wav"), &tone(16000), 16000, 1);
            f
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn model(&self) -> PathBuf {
        self.path("lite.sasa")
    }

    fn source(&self) -> PathBuf {
        self.path("source.emb")
    }

    fn anonymize(&self, input: &Path, out: &Path, extra: &[&str]) -> Output {
        let (model, source) = (self.model(), self.source());
        let mut args = vec![
            "anonymize",
            s(input),
            s(out),
            "--model",
            s(&model),
            "--source-emb",
            s(&source),
        ];
        args.extend_from_slice(extra);
        run(&args)
    }
}

fn tone(n: usize) -> Vec<i16> {
    (0..n)
        .map(|i| {
            let t = i as f64 / 16000.0;
            (6000.0 * (2.0 * std::f64::consts::PI * 150.0 * t).sin()
                + 2000.0 * (2.0 * std::f64::consts::PI * 450.0 * t).sin()) as i16
        })
        .collect()
}

fn write_wav(path: &Path, samples: &[i16], rate: u32, channels: u16) {
    let spec = hound::WavSpec {
        channels,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &v in samples {
        for _ in 0..channels {
            w.write_sample(v).unwrap();
        }
    }
    w.finalize().unwrap();
}

fn read_wav(path: &Path) -> (hound::WavSpec, Vec<i16>) {
    let r = hound::WavReader::open(path).unwrap();
    let spec = r.spec();
    (spec, r.into_samples::<i16>().map(Result::unwrap).collect())
}

#[test]
fn one_second_in_one_second_out() {
    let f = Fixture::get();
    let out = f.path("one_second.wav");
    let o = f.anonymize(&f.path("tone.wav"), &out, &["--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (spec, samples) = read_wav(&out);
    assert_eq!(
        (spec.sample_rate, spec.channels, spec.bits_per_sample),
        (16000, 1, 16)
    );
    assert_eq!(samples.len(), 16000);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cosine distance"));
}

#[test]
fn partial_final_hop_is_padded() {
    let f = Fixture::get();
    let input = f.path("odd.wav");
    write_wav(&input, &tone(1000), 16000, 1);
    let out = f.path("odd_out.wav");
    assert!(f.anonymize(&input, &out, &[]).status.success());
    assert_eq!(read_wav(&out).1.len(), 1280);
}

#[test]
fn same_flags_give_identical_files() {
    let f = Fixture::get();
    let (a, b) = (f.path("det_a.wav"), f.path("det_b.wav"));
    for p in [&a, &b] {
        let o = f.anonymize(
            &f.path("tone.wav"),
            p,
            &["--seed", "9", "--pitch-shift", "-2", "--energy-scale", "0.8"],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn offline_matches_streaming() {
    let f = Fixture::get();
    let input = f.path("tone.wav");
    let offline = f.path("offline.wav");
    assert!(f
        .anonymize(&input, &offline, &["--offline", "--copy-variance"])
        .status
        .success());
    let reference = read_wav(&offline).1;
    for ms in ["40", "20", "100", "7"] {
        let p = f.path(&format!("stream_{ms}.wav"));
        assert!(f
            .anonymize(&input, &p, &["--chunk-ms", ms, "--copy-variance"])
            .status
            .success());
        assert_eq!(read_wav(&p).1, reference, "chunk {ms} ms");
    }
}

#[test]
fn different_seeds_differ() {
    let f = Fixture::get();
    let (a, b) = (f.path("seed_a.wav"), f.path("seed_b.wav"));
    assert!(f
        .anonymize(&f.path("tone.wav"), &a, &["--seed", "1"])
        .status
        .success());
    assert!(f
        .anonymize(&f.path("tone.wav"), &b, &["--seed", "2"])
        .status
        .success());
    assert_ne!(read_wav(&a).1, read_wav(&b).1);
}

#[test]
fn wrong_wav_formats_exit_2_naming_expected() {
    let f = Fixture::get();
    let cases: Vec<(&str, hound::WavSpec)> = vec![
        (
            "rate",
            hound::WavSpec {
                channels: 1,
                sample_rate: 44100,
                bits_per_sample: 16,
                sample_format: hound::SampleFormat::Int,
            },
        ),
        (
            "stereo",
            hound::WavSpec {
                channels: 2,
                sample_rate: 16000,
                bits_per_sample: 16,
                sample_format: hound::SampleFormat::Int,
            },
        ),
        (
            "depth",
            hound::WavSpec {
                channels: 1,
                sample_rate: 16000,
                bits_per_sample: 24,
                sample_format: hound::SampleFormat::Int,
            },
        ),
        (
            "float",
            hound::WavSpec {
                channels: 1,
                sample_rate: 16000,
                bits_per_sample: 32,
                sample_format: hound::SampleFormat::Float,
            },
        ),
    ];
    for (name, spec) in cases {
        let p = f.path(&format!("bad_{name}.wav"));
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for _ in 0..(320 * spec.channels as usize) {
            match spec.sample_format {
                hound::SampleFormat::Float => w.write_sample(0.0f32).unwrap(),
                hound::SampleFormat::Int => w.write_sample(0i32).unwrap(),
            }
        }
        w.finalize().unwrap();
        let o = f.anonymize(&p, &f.path("never.wav"), &[]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("16000 Hz mono 16-bit PCM"), "{name}: {err}");
        assert!(!f.path("never.wav").exists());
    }
    let junk = f.path("junk.wav");
    std::fs::write(&junk, b"not a wav file at all").unwrap();
    assert_eq!(
        f.anonymize(&junk, &f.path("never.wav"), &[]).status.code(),
        Some(2)
    );
}

#[test]
fn container_errors_exit_3() {
    let f = Fixture::get();
    let bytes = std::fs::read(f.model()).unwrap();

    let mut flipped = bytes.clone();
    let mid = flipped.len() - 4096;
    flipped[mid] ^= 0x40;
    let corrupt = f.path("corrupt.sasa");
    std::fs::write(&corrupt, &flipped).unwrap();
    let (c, err) = code(&["info", s(&corrupt)]);
    assert_eq!(c, 3, "{err}");
    assert!(err.contains("checksum"), "{err}");

    let mut c = Container::from_bytes(&bytes).unwrap();
    c.tensors.retain(|(n, _)| n != "decoder.post.weight");
    let missing = f.path("missing.sasa");
    c.write(&missing).unwrap();
    let o = run(&[
        "anonymize",
        s(&f.path("tone.wav")),
        s(&f.path("never.wav")),
        "--model",
        s(&missing),
        "--source-emb",
        s(&f.source()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("decoder.post.weight"));

    // An embedding file is not a model.
    let o = run(&[
        "anonymize",
        s(&f.path("tone.wav")),
        s(&f.path("never.wav")),
        "--model",
        s(&f.source()),
        "--source-emb",
        s(&f.source()),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn wrong_embedding_dim_exits_3() {
    let f = Fixture::get();
    let small = f.path("small.emb");
    ok(&["random-embedding", "--dim", "16", "--out", s(&small)]);
    let o = run(&[
        "anonymize",
        s(&f.path("tone.wav")),
        s(&f.path("never.wav")),
        "--model",
        s(&f.model()),
        "--source-emb",
        s(&small),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unreachable_distance_exits_4() {
    let f = Fixture::get();
    let o = f.anonymize(
        &f.path("tone.wav"),
        &f.path("never.wav"),
        &["--min-distance", "1.99", "--max-attempts", "5"],
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("5 attempts"));
}

#[test]
fn blocklist_containing_pseudo_forces_another_draw() {
    let f = Fixture::get();
    let pseudo = f.path("pseudo.emb");
    let o = f.anonymize(
        &f.path("tone.wav"),
        &f.path("bl_a.wav"),
        &["--seed", "3", "--save-pseudo", s(&pseudo)],
    );
    assert!(o.status.success());
    let first = String::from_utf8_lossy(&o.stderr).into_owned();
    let o = f.anonymize(
        &f.path("tone.wav"),
        &f.path("bl_b.wav"),
        &["--seed", "3", "--blocklist", s(&pseudo)],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second = String::from_utf8_lossy(&o.stderr).into_owned();
    assert!(first.contains("after 1 attempt"), "{first}");
    assert!(!second.contains("after 1 attempt"), "{second}");
}

#[test]
fn init_weights_is_deterministic_and_round_trips() {
    let f = Fixture::get();
    let again = f.path("again.sasa");
    ok(&[
        "init-weights",
        "--variant",
        "lite",
        "--seed",
        "11",
        "--out",
        s(&again),
    ]);
    let bytes = std::fs::read(f.model()).unwrap();
    assert_eq!(bytes, std::fs::read(&again).unwrap());
    let w = ModelWeights::load(&again).unwrap();
    assert_eq!(w.to_container().to_bytes(), bytes);
    let other = f.path("other.sasa");
    ok(&[
        "init-weights",
        "--variant",
        "lite",
        "--seed",
        "12",
        "--out",
        s(&other),
    ]);
    assert_ne!(bytes, std::fs::read(&other).unwrap());
}

fn total_params(stdout: &str) -> usize {
    stdout
        .lines()
        .find_map(|l| l.trim().strip_prefix("total"))
        .unwrap()
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn param_ratio_in_band() {
    let f = Fixture::get();
    let base = total_params(&ok(&[
        "init-weights",
        "--variant",
        "base",
        "--out",
        s(&f.path("base.sasa")),
    ]));
    let lite = total_params(&ok(&[
        "init-weights",
        "--variant",
        "lite",
        "--out",
        s(&f.path("lite0.sasa")),
    ]));
    let ratio = lite as f64 / base as f64;
    assert!((0.05..=0.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn info_lists_every_tensor() {
    let f = Fixture::get();
    let stdout = ok(&["info", s(&f.model())]);
    let w = ModelWeights::load(f.model()).unwrap();
    for (name, t) in w.tensors() {
        let line = stdout
            .lines()
            .find(|l| l.split_whitespace().next() == Some(name))
            .unwrap_or_else(|| panic!("{name} not listed"));
        assert!(line.contains(&format!("{:?}", t.shape)), "{line}");
    }
    let c = Container::read(f.model()).unwrap();
    assert!(stdout.contains(&format!("{:#010x}", c.payload_checksum())));
    assert!(stdout.contains("\"variant\":\"lite\""));
}

#[test]
fn bench_json_and_csv_satisfy_identities() {
    let f = Fixture::get();
    let model = f.model();
    let common = [
        "bench",
        "--model",
        s(&model),
        "--chunk-ms",
        "20,60,140",
        "--trials",
        "3",
        "--warmup",
        "1",
    ];

    let mut args = common.to_vec();
    args.extend(["--format", "json", "--device", "test-box"]);
    let report: BenchReport = serde_json::from_str(&ok(&args)).unwrap();
    assert_eq!(report.device, "test-box");
    assert_eq!((report.warmup, report.trials), (1, 3));
    assert_eq!(
        report.rows.iter().map(|r| r.chunk_ms).collect::<Vec<_>>(),
        [20, 60, 140]
    );
    assert!(report.rows.iter().all(BenchRow::identities_hold));

    let mut args = common.to_vec();
    args.extend(["--format", "csv", "--parallel", "2"]);
    let csv = ok(&args);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let mut rows = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let chunk: f64 = cells[col("chunk_ms")].parse().unwrap();
        let mean: f64 = cells[col("mean_proc_ms")].parse().unwrap();
        assert_eq!(cells[col("latency_ms")].parse::<f64>().unwrap(), chunk + mean);
        assert_eq!(cells[col("rtf")].parse::<f64>().unwrap(), mean / chunk);
        assert_eq!(cells[col("parallel")], "2");
        rows += 1;
    }
    assert_eq!(rows, 3);

    let mut args = common.to_vec();
    args.extend(["--format", "table"]);
    let table = ok(&args);
    assert!(table.starts_with("variant=lite device=cpu warmup=1 trials=3"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn bench_needs_a_model() {
    assert_eq!(code(&["bench"]).0, 1);
    assert_ne!(code(&["bench", "--variant", "huge"]).0, 0);
    let out = ok(&[
        "bench",
        "--variant",
        "lite",
        "--chunk-ms",
        "20",
        "--trials",
        "1",
        "--warmup",
        "0",
        "--format",
        "csv",
    ]);
    assert!(out.lines().nth(1).unwrap().starts_with("lite,cpu,0,1,1,20,"));
}

#[test]
fn metrics_subcommands() {
    let f = Fixture::get();
    let (g, i) = (f.path("genuine.txt"), f.path("impostor.txt"));
    std::fs::write(&g, "# genuine\n0.91\n0.85\n0.77\n").unwrap();
    std::fs::write(&i, "0.12\n-0.3\n0.4\n").unwrap();
    let out = ok(&["metrics", "eer", "--genuine", s(&g), "--impostor", s(&i)]);
    assert!(out.lines().any(|l| l == "eer 0"), "{out}");

    let logits = f.path("logits.txt");
    let labels = f.path("labels.txt");
    std::fs::write(
        &logits,
        "0 ".repeat(200).trim_end().to_string() + "\n" + &"1.5 ".repeat(200) + "\n",
    )
    .unwrap();
    std::fs::write(&labels, "17\n199\n").unwrap();
    let out = ok(&["metrics", "ce", "--logits", s(&logits), "--labels", s(&labels)]);
    let ce: f64 = out
        .trim()
        .strip_prefix("cross_entropy ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((ce - 200f64.ln()).abs() < 1e-6, "{ce}");

    let tone = f.path("tone.wav");
    assert_eq!(ok(&["metrics", "stft", s(&tone), s(&tone)]).trim(), "stft_loss 0");
    assert_eq!(ok(&["metrics", "mel", s(&tone), s(&tone)]).trim(), "mel_l1 0");
    let cos = ok(&["metrics", "cosine", s(&f.source()), s(&f.source())]);
    assert!(cos.contains("distance 0"), "{cos}");
}

#[test]
fn malformed_metric_inputs_exit_2() {
    let f = Fixture::get();
    let bad = f.path("bad_scores.txt");
    std::fs::write(&bad, "0.5\nhello\n").unwrap();
    let good = f.path("good_scores.txt");
    std::fs::write(&good, "0.5\n").unwrap();
    let (c, err) = code(&["metrics", "eer", "--genuine", s(&bad), "--impostor", s(&good)]);
    assert_eq!(c, 2);
    assert!(err.contains("line 2"), "{err}");

    let logits = f.path("ragged.txt");
    std::fs::write(&logits, "1 2 3\n4 5\n").unwrap();
    let (c, _) = code(&["metrics", "ce", "--logits", s(&logits), "--labels", s(&good)]);
    assert_eq!(c, 2);
}
