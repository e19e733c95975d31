use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sylsep::{audio, sylf, AudioClip};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sylsep"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tone_16k(seconds: f64) -> AudioClip {
    let n = (seconds * 16_000.0) as usize;
    let x: Vec<f64> = (0..n).map(|i| 0.3 * (i as f64 * 0.37).sin()).collect();
    AudioClip::from_f64(&x, 16_000).unwrap()
}

#[test]
fn preprocess_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    let output = dir.path().join("out.wav");
    let x: Vec<f64> = (0..25_600).map(|i| 0.4 * (i as f64 * 0.5).sin()).collect();
    audio::write_wav(&AudioClip::from_f64(&x, 256_000).unwrap(), &input).unwrap();

    let ok = run(&["preprocess", "--input", s(&input), "--output", s(&output)]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    assert_eq!(audio::read_wav(&output).unwrap().sample_rate_hz(), 16_000);

    let bad = run(&[
        "preprocess",
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--stretch",
        "0",
    ]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("--stretch"));

    let missing = run(&[
        "preprocess",
        "--input",
        s(&dir.path().join("nope.wav")),
        "--output",
        s(&output),
    ]);
    assert_eq!(code(&missing), 1);

    let low = run(&[
        "preprocess",
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--target-rate",
        "4000",
    ]);
    assert_eq!(code(&low), 2);
}

#[test]
fn features_writes_sylf() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("clip.wav");
    let output = dir.path().join("f.sylf");
    audio::write_wav(&tone_16k(1.0), &input).unwrap();

    let ok = run(&["features", "--input", s(&input), "--output", s(&output)]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let (fm, name) = sylf::read_frames(&output).unwrap();
    assert_eq!((fm.dim(), fm.num_frames()), (13, 49));
    assert_eq!(name, "clip.wav");

    let lfcc = run(&[
        "features",
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--kind",
        "lfcc",
    ]);
    assert_eq!(code(&lfcc), 0);

    let bogus = run(&[
        "features",
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--kind",
        "bogus",
    ]);
    assert_eq!(code(&bogus), 2);

    let short = dir.path().join("short.wav");
    audio::write_wav(&tone_16k(0.01), &short).unwrap();
    let out = run(&["features", "--input", s(&short), "--output", s(&output)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("insufficient samples"));
}

const ANN_HEADER: &str = "recording_id,syllable_id,onset_s,offset_s,label\n";

#[test]
fn pool_reports_dropped_syllables() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    let feats = dir.path().join("f.sylf");
    let emb = dir.path().join("emb.csv");
    audio::write_wav(&tone_16k(1.0), &wav).unwrap();
    assert_eq!(
        code(&run(&[
            "features",
            "--input",
            s(&wav),
            "--output",
            s(&feats)
        ])),
        0
    );

    let good = dir.path().join("good.csv");
    fs::write(
        &good,
        format!("{ANN_HEADER}r,a,0.1,0.3,A\nr,b,0.4,0.6,B\nr,c,0.7,0.9,A\n"),
    )
    .unwrap();
    let ok = run(&[
        "pool",
        "--features",
        s(&feats),
        "--annotations",
        s(&good),
        "--stretch",
        "1",
        "--output",
        s(&emb),
    ]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let text = fs::read_to_string(&emb).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 2 + 13);

    let past = dir.path().join("past.csv");
    fs::write(
        &past,
        format!("{ANN_HEADER}r,a,0.1,0.3,A\nr,late_one,5.0,5.2,B\n"),
    )
    .unwrap();
    let out = run(&[
        "pool",
        "--features",
        s(&feats),
        "--annotations",
        s(&past),
        "--stretch",
        "1",
        "--output",
        s(&emb),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("late_one"));
    assert_eq!(fs::read_to_string(&emb).unwrap().lines().count(), 2);

    let filtered = run(&[
        "pool",
        "--features",
        s(&feats),
        "--annotations",
        s(&past),
        "--stretch",
        "1",
        "--output",
        s(&emb),
        "--recording",
        "other",
    ]);
    assert_eq!(code(&filtered), 0);

    let no_col = dir.path().join("nocol.csv");
    fs::write(
        &no_col,
        "recording_id,syllable_id,onset_s,label\nr,a,0.1,A\n",
    )
    .unwrap();
    let out = run(&[
        "pool",
        "--features",
        s(&feats),
        "--annotations",
        s(&no_col),
        "--output",
        s(&emb),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("offset_s"));

    let not_sylf = run(&[
        "pool",
        "--features",
        s(&wav),
        "--annotations",
        s(&good),
        "--output",
        s(&emb),
    ]);
    assert_eq!(code(&not_sylf), 1);
}

fn write_embeddings(path: &Path, classes: usize, per_class: usize) {
    let mut text = String::from("syllable_id,label,v0,v1,v2,v3,v4,v5\n");
    for k in 0..classes {
        for i in 0..per_class {
            let v: Vec<String> = (0..6)
                .map(|j| {
                    let jitter = (((k * 131 + i * 71 + j * 37) % 97) as f64 / 97.0) - 0.5;
                    format!("{}", if j == k { 3.0 } else { 0.0 } + jitter)
                })
                .collect();
            text.push_str(&format!("s{k}_{i},C{k},{}\n", v.join(",")));
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn analyze_outputs_and_rank_errors() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.csv");
    write_embeddings(&emb, 5, 12);
    let report = dir.path().join("r.txt");
    let scatter = dir.path().join("s.csv");
    let svg = dir.path().join("s.svg");
    let rcsv = dir.path().join("r.csv");
    let out = run(&[
        "analyze",
        "--embeddings",
        s(&emb),
        "--lda-dims",
        "4",
        "--bootstrap",
        "50",
        "--seed",
        "1",
        "--report",
        s(&report),
        "--scatter",
        s(&scatter),
        "--scatter-svg",
        s(&svg),
        "--report-csv",
        s(&rcsv),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&report).unwrap();
    for d in 1..=4 {
        assert!(text.contains(&format!("    d{d}: ")));
    }
    assert!(!text.contains("    d5: "));
    let sc = fs::read_to_string(&scatter).unwrap();
    assert_eq!(sc.lines().next().unwrap(), "syllable_id,label,d1,d2");
    assert_eq!(sc.lines().count(), 61);
    assert!(fs::read_to_string(&svg).unwrap().contains("</svg>"));
    assert_eq!(
        fs::read_to_string(&rcsv).unwrap().lines().count(),
        1 + 5 + 2
    );

    let too_many = run(&[
        "analyze",
        "--embeddings",
        s(&emb),
        "--lda-dims",
        "7",
        "--report",
        s(&report),
        "--scatter",
        s(&scatter),
    ]);
    assert_eq!(code(&too_many), 2);

    let pca = run(&[
        "analyze",
        "--embeddings",
        s(&emb),
        "--pca-rank",
        "bogus",
        "--report",
        s(&report),
        "--scatter",
        s(&scatter),
    ]);
    assert_eq!(code(&pca), 2);

    let missing = run(&[
        "analyze",
        "--embeddings",
        s(&dir.path().join("none.csv")),
        "--report",
        s(&report),
        "--scatter",
        s(&scatter),
    ]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn synth_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let out = run(&[
        "synth",
        "--classes",
        "5",
        "--counts",
        "135,97,92,9,87",
        "--seed",
        "3",
        "--wav",
        s(&p("a.wav")),
        "--annotations",
        s(&p("a.csv")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_to_string(p("a.csv")).unwrap().lines().count(), 421);

    for name in ["b", "c"] {
        let out = run(&[
            "synth",
            "--classes",
            "2",
            "--counts",
            "4,3",
            "--seed",
            "8",
            "--wav",
            s(&p(&format!("{name}.wav"))),
            "--annotations",
            s(&p(&format!("{name}.csv"))),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(p("b.wav")).unwrap(), fs::read(p("c.wav")).unwrap());
    assert_eq!(fs::read(p("b.csv")).unwrap(), fs::read(p("c.csv")).unwrap());

    let tiny = run(&[
        "synth",
        "--classes",
        "2",
        "--counts",
        "1,1",
        "--wav",
        s(&p("t.wav")),
        "--annotations",
        s(&p("t.csv")),
    ]);
    assert_eq!(code(&tiny), 0);
    assert_eq!(fs::read_to_string(p("t.csv")).unwrap().lines().count(), 3);

    let mismatch = run(&[
        "synth",
        "--classes",
        "3",
        "--counts",
        "1,1",
        "--wav",
        s(&p("m.wav")),
        "--annotations",
        s(&p("m.csv")),
    ]);
    assert_eq!(code(&mismatch), 2);
}
