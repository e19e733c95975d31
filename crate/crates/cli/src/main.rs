//! `sylsep`: one subcommand per pipeline stage.
//!
//! Exit status is 0 on success, 1 for I/O and container errors, 2 for
//! parameter or data validation errors and 3 when pooling had to drop
//! syllables.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sylsep::cepstral::{cepstral_features, CepstralConfig, FilterScale};
use sylsep::dataset::{
    parse_annotations, pool_syllables, read_embeddings, synthesize_dataset, write_annotations,
    write_embeddings,
};
use sylsep::dsp::{preprocess_pipeline, PreprocessConfig};
use sylsep::separability::{
    analyze, report_csv, report_text, scatter_csv, AnalyzeConfig, CovarianceKind, PcaRank,
};
use sylsep::{audio, plot, sylf, Error};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DROPPED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sylsep",
    version,
    about = "Syllable-type separability pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noise gate, high-pass, slow down and resample a recording.
    Preprocess(PreprocessArgs),
    /// Compute MFCC or LFCC frames and write them as SYLF.
    Features(FeaturesArgs),
    /// Average frame features over annotated syllables.
    Pool(PoolArgs),
    /// LDA projection and Mahalanobis silhouette report.
    Analyze(AnalyzeArgs),
    /// Write a synthetic ultrasonic recording with annotations.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    stretch: u32,
    #[arg(long, default_value_t = 10_000.0)]
    highpass_hz: f64,
    #[arg(long, default_value_t = -65.0, allow_negative_numbers = true)]
    noise_threshold_db: f64,
    #[arg(long, default_value_t = 90.0)]
    noise_reduction_db: f64,
    #[arg(long, default_value_t = 16_000)]
    target_rate: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Mfcc,
    Lfcc,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Mfcc)]
    kind: Kind,
    #[arg(long, default_value_t = 400)]
    fft: usize,
    #[arg(long, default_value_t = 320)]
    hop: usize,
    #[arg(long, default_value_t = 13)]
    coeffs: usize,
    #[arg(long, default_value_t = 26)]
    filters: usize,
    #[arg(long, default_value_t = 0.0)]
    fmin: f64,
    #[arg(long, default_value_t = 8000.0)]
    fmax: f64,
}

#[derive(Args)]
struct PoolArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    stretch: u32,
    #[arg(long)]
    output: PathBuf,
    /// Only pool annotations with this recording_id.
    #[arg(long)]
    recording: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Covariance {
    PooledWithin,
    Global,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 4)]
    lda_dims: usize,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
    /// Per-class summary as CSV.
    #[arg(long)]
    report_csv: Option<PathBuf>,
    #[arg(long)]
    scatter: PathBuf,
    #[arg(long)]
    scatter_svg: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    gamma_lda: f64,
    #[arg(long, default_value_t = 1e-6)]
    gamma_cov: f64,
    /// `auto`, `none`, or a fixed number of components.
    #[arg(long, default_value = "auto", value_parser = parse_pca_rank)]
    pca_rank: PcaRank,
    #[arg(long, value_enum, default_value_t = Covariance::PooledWithin)]
    covariance: Covariance,
    /// Permute labels with this seed before analysis (control run).
    #[arg(long)]
    shuffle_seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    wav: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
}

fn parse_pca_rank(s: &str) -> Result<PcaRank, String> {
    match s {
        "auto" => Ok(PcaRank::Auto),
        "none" | "off" => Ok(PcaRank::Off),
        n => n
            .parse::<usize>()
            .map(PcaRank::Fixed)
            .map_err(|_| format!("expected auto, none or a component count, got `{n}`")),
    }
}

enum Failure {
    Core(Error),
    Dropped(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Failure::Core(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

fn run_preprocess(a: PreprocessArgs) -> Result<(), Failure> {
    let cfg = PreprocessConfig {
        noise_threshold_db: a.noise_threshold_db,
        noise_reduction_db: a.noise_reduction_db,
        highpass_cutoff_hz: a.highpass_hz,
        stretch_factor: a.stretch,
        target_rate_hz: a.target_rate,
    };
    cfg.validate()?;
    let clip = audio::decode_wav(
        &fs::read(&a.input)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", a.input.display())))?,
    )?;
    let out = preprocess_pipeline(&clip, &cfg)?;
    audio::write_wav(&out, &a.output)?;
    log::info!(
        "{} samples at {} Hz -> {} samples at {} Hz",
        clip.len(),
        clip.sample_rate_hz(),
        out.len(),
        out.sample_rate_hz()
    );
    Ok(())
}

fn run_features(a: FeaturesArgs) -> Result<(), Failure> {
    let cfg = CepstralConfig {
        kind: match a.kind {
            Kind::Mfcc => FilterScale::Mel,
            Kind::Lfcc => FilterScale::Linear,
        },
        fft_size: a.fft,
        hop: a.hop,
        num_filters: a.filters,
        num_coeffs: a.coeffs,
        fmin_hz: a.fmin,
        fmax_hz: a.fmax,
    };
    let clip = audio::decode_wav(
        &fs::read(&a.input)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", a.input.display())))?,
    )?;
    let fm = cepstral_features(&clip, &cfg)?;
    let name = a
        .input
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    sylf::write_frames(&fm, &name, &a.output)?;
    Ok(())
}

fn run_pool(a: PoolArgs) -> Result<(), Failure> {
    let (fm, _) = sylf::read_frames(&a.features)?;
    let mut anns = parse_annotations(open(&a.annotations)?)?;
    if let Some(rec) = &a.recording {
        anns.retain(|x| &x.recording_id == rec);
    }
    let pooled = pool_syllables(&fm, &anns, a.stretch)?;
    write_embeddings(File::create(&a.output)?, &pooled.embeddings)?;
    for e in &pooled.dropped {
        eprintln!("sylsep: dropped: {e}");
    }
    if pooled.dropped.is_empty() {
        Ok(())
    } else {
        Err(Failure::Dropped(pooled.dropped.len()))
    }
}

fn run_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let mut embeddings = read_embeddings(open(&a.embeddings)?)?;
    if let Some(seed) = a.shuffle_seed {
        let mut labels: Vec<String> = embeddings.iter().map(|e| e.label.clone()).collect();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for (e, l) in embeddings.iter_mut().zip(labels) {
            e.label = l;
        }
    }
    let cfg = AnalyzeConfig {
        lda_dims: a.lda_dims,
        gamma_lda: a.gamma_lda,
        gamma_cov: a.gamma_cov,
        pca: a.pca_rank,
        covariance: match a.covariance {
            Covariance::PooledWithin => CovarianceKind::PooledWithin,
            Covariance::Global => CovarianceKind::Global,
        },
        bootstrap_n: a.bootstrap,
        seed: a.seed,
    };
    let report = analyze(&embeddings, &cfg)?;
    fs::write(&a.report, report_text(&report))?;
    if let Some(path) = &a.report_csv {
        fs::write(path, report_csv(&report))?;
    }
    fs::write(&a.scatter, scatter_csv(&report, &embeddings)?)?;
    if let Some(path) = &a.scatter_svg {
        let p = &report.projected;
        let points: Vec<(f64, f64, usize)> = embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let class = report.labels.binary_search(&e.label).unwrap_or(0);
                let y = if p.ncols() > 1 { p[(i, 1)] } else { 0.0 };
                (p[(i, 0)], y, class)
            })
            .collect();
        fs::write(
            path,
            plot::scatter_svg(&points, &report.labels, "LD1", "LD2"),
        )?;
    }
    log::info!("overall mean silhouette {:.4}", report.overall_mean);
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<(), Failure> {
    let (clip, anns) = synthesize_dataset(a.classes, &a.counts, a.seed)?;
    audio::write_wav(&clip, &a.wav)?;
    write_annotations(File::create(&a.annotations)?, &anns)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preprocess(a) => run_preprocess(a),
        Command::Features(a) => run_features(a),
        Command::Pool(a) => run_pool(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Dropped(n)) => {
            eprintln!("sylsep: {n} syllable(s) dropped");
            ExitCode::from(EXIT_DROPPED)
        }
        Err(Failure::Core(e)) => {
            eprintln!("sylsep: {e}");
            ExitCode::from(if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_IO
            })
        }
    }
}
