use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use asrprep_core::augment::{augment_batch, mask_statistics, write_mask_pgm, AugmentConfig, MaskSpec};
use asrprep_core::chunker::{make_batches, split_chunks};
use asrprep_core::embedding::{
    embed_recording, read_lda_file, read_projection_file, read_ubm_file, train_embedding_models, write_lda,
    write_projection, write_ubm, EMBEDDING_DIM,
};
use asrprep_core::features::io::{read_fmx1_file, read_wav_file, write_fmx1};
use asrprep_core::features::{concat_embedding, extract_logmel};
use asrprep_core::{FeatureMatrix, SeededRng};
use clap::Args;

use crate::error::CliError;
use crate::output::{in_dir, require_files, require_parent, write_atomic};
use crate::Context;

pub const LDA_FILE: &str = "lda.bin";
pub const UBM_FILE: &str = "ubm.bin";
pub const PROJECTION_FILE: &str = "projection.bin";

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Mono 16-bit PCM WAV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory; each input becomes `<stem>.fmx`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedTrainArgs {
    /// Logmel FMX1 files, one per recording.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Per-frame LDA class labels, one integer per line across all inputs
    /// in order. Without it classes come from k-means.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory for lda.bin, ubm.bin and projection.bin.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Logmel FMX1 files, one per recording.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory written by `embed-train`.
    #[arg(long)]
    models: PathBuf,
    /// CSV with one row per recording: `recording,e0,...,e99`.
    #[arg(long)]
    out: PathBuf,
    /// Also write `<stem>.fmx` with the embedding appended to every frame.
    #[arg(long, value_name = "DIR")]
    concat: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// FMX1 features (logmel, optionally with appended embedding).
    input: PathBuf,
    /// Masked chunks, stacked in order, as one FMX1 file.
    #[arg(long)]
    out: PathBuf,
    /// Time masking `MxL`; overrides the configuration.
    #[arg(long)]
    tm: Option<MaskSpec>,
    /// Feature masking `NxL`; overrides the configuration.
    #[arg(long)]
    fm: Option<MaskSpec>,
    /// Whether feature masks may reach the embedding dims.
    #[arg(long)]
    fm_on_ivec: Option<bool>,
    /// Global training step of the first minibatch; each further batch
    /// advances it by one.
    #[arg(long, default_value_t = 0)]
    step: u64,
    /// PGM image of the first chunk before and after masking.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskStatsArgs {
    #[arg(long)]
    tm: Option<MaskSpec>,
    #[arg(long)]
    fm: Option<MaskSpec>,
    #[arg(long)]
    fm_on_ivec: Option<bool>,
    /// Chunk length in frames; defaults to the chunker's.
    #[arg(long)]
    chunk: Option<usize>,
    /// Feature dimension of a chunk.
    #[arg(long, default_value_t = 180)]
    dims: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn unique_stems(paths: &[PathBuf]) -> Result<Vec<String>, CliError> {
    let stems: Vec<String> = paths.iter().map(|p| file_stem(p)).collect();
    let distinct: BTreeSet<&String> = stems.iter().collect();
    if distinct.len() != stems.len() {
        return Err(CliError::Config("input files must have distinct file names".into()));
    }
    Ok(stems)
}

fn read_features(paths: &[PathBuf]) -> Result<Vec<FeatureMatrix>, CliError> {
    paths
        .iter()
        .map(|p| read_fmx1_file(p).map_err(|e| CliError::at(p, e)))
        .collect()
}

fn write_fmx1_atomic(feats: &FeatureMatrix, path: &Path) -> Result<(), CliError> {
    write_atomic(path, |w| write_fmx1(feats, w).map_err(|e| CliError::at(path, e)))
}

pub fn extract(ctx: &Context, args: ExtractArgs) -> Result<(), CliError> {
    require_files(&args.inputs)?;
    let stems = unique_stems(&args.inputs)?;
    let cfg = ctx.cfg.features.logmel();
    let mut outputs = Vec::with_capacity(args.inputs.len());
    for (path, stem) in args.inputs.iter().zip(&stems) {
        let audio = read_wav_file(path).map_err(|e| CliError::at(path, e))?;
        let mut feats = extract_logmel(&audio, &cfg)?;
        feats.set_source_id(stem.clone());
        outputs.push(feats);
    }
    for (feats, stem) in outputs.iter().zip(&stems) {
        write_fmx1_atomic(feats, &in_dir(&args.out, &format!("{stem}.fmx"))?)?;
    }
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<u32>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| {
                CliError::Format(format!(
                    "{}:{}: label '{}' is not an integer",
                    path.display(),
                    i + 1,
                    l.trim()
                ))
            })
        })
        .collect()
}

pub fn embed_train(ctx: &Context, args: EmbedTrainArgs) -> Result<(), CliError> {
    require_files(args.inputs.iter().chain(&args.labels))?;
    let recordings = read_features(&args.inputs)?;
    let labels = args.labels.as_deref().map(read_labels).transpose()?;
    let cfg = ctx.cfg.embedding.build();
    let models = train_embedding_models(&recordings, labels.as_deref(), &cfg, &SeededRng::new(ctx.seed))?;
    log::info!("ubm log-likelihood per frame: {:?}", models.ubm.log_likelihood);

    let lda_path = in_dir(&args.out, LDA_FILE)?;
    write_atomic(&lda_path, |w| {
        write_lda(&models.lda, w).map_err(|e| CliError::at(&lda_path, e))
    })?;
    let ubm_path = args.out.join(UBM_FILE);
    write_atomic(&ubm_path, |w| {
        write_ubm(&models.ubm.ubm, w).map_err(|e| CliError::at(&ubm_path, e))
    })?;
    let proj_path = args.out.join(PROJECTION_FILE);
    write_atomic(&proj_path, |w| {
        write_projection(&models.projection, w).map_err(|e| CliError::at(&proj_path, e))
    })
}

pub fn embed(_ctx: &Context, args: EmbedArgs) -> Result<(), CliError> {
    let model_paths = [LDA_FILE, UBM_FILE, PROJECTION_FILE].map(|f| args.models.join(f));
    require_files(args.inputs.iter().chain(&model_paths))?;
    require_parent(&args.out)?;
    let stems = unique_stems(&args.inputs)?;
    let lda = read_lda_file(&model_paths[0]).map_err(|e| CliError::at(&model_paths[0], e))?;
    let ubm = read_ubm_file(&model_paths[1]).map_err(|e| CliError::at(&model_paths[1], e))?;
    let proj = read_projection_file(&model_paths[2]).map_err(|e| CliError::at(&model_paths[2], e))?;
    let recordings = read_features(&args.inputs)?;
    let embeddings = recordings
        .iter()
        .map(|r| embed_recording(r, &lda, &ubm, &proj))
        .collect::<Result<Vec<_>, _>>()?;

    let out = &args.out;
    write_atomic(out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let header = std::iter::once("recording".to_string()).chain((0..EMBEDDING_DIM).map(|i| format!("e{i}")));
        csv.write_record(header).map_err(|e| csv_error(out, e))?;
        for emb in &embeddings {
            let row = std::iter::once(emb.recording_id().to_string()).chain(emb.values().iter().map(f64::to_string));
            csv.write_record(row).map_err(|e| csv_error(out, e))?;
        }
        csv.flush().map_err(|e| CliError::io(out, e))
    })?;

    if let Some(dir) = &args.concat {
        for ((feats, emb), stem) in recordings.iter().zip(&embeddings).zip(&stems) {
            let joined = concat_embedding(feats, emb)?;
            write_fmx1_atomic(&joined, &in_dir(dir, &format!("{stem}.fmx"))?)?;
        }
    }
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Format(format!("{}: {other:?}", path.display())),
    }
}

fn augment_config(
    ctx: &Context,
    tm: Option<MaskSpec>,
    fm: Option<MaskSpec>,
    on_ivec: Option<bool>,
) -> Result<AugmentConfig, CliError> {
    let mut cfg = ctx.cfg.augment.build()?;
    if let Some(tm) = tm {
        cfg.time = tm;
    }
    if let Some(fm) = fm {
        cfg.feature = fm;
    }
    if let Some(on) = on_ivec {
        cfg.fm_on_ivec = on;
    }
    Ok(cfg)
}

pub fn augment(ctx: &Context, args: AugmentArgs) -> Result<(), CliError> {
    require_files([&args.input])?;
    require_parent(&args.out)?;
    if let Some(p) = &args.pgm {
        require_parent(p)?;
    }
    let cfg = augment_config(ctx, args.tm, args.fm, args.fm_on_ivec)?;
    let chunker = &ctx.cfg.chunker;
    let feats = read_fmx1_file(&args.input).map_err(|e| CliError::at(&args.input, e))?;
    let chunks = split_chunks(&feats, chunker.chunk_len, chunker.overlap)?;
    let first = chunks[0].clone();
    let batches = make_batches(chunks, chunker.batch_size, None)?;
    let rng = SeededRng::new(ctx.seed);
    let mut masked = Vec::new();
    for (b, batch) in batches.iter().enumerate() {
        masked.extend(augment_batch(batch, &cfg, args.step + b as u64, &rng)?.chunks);
    }

    let dims = feats.num_dims();
    let data: Vec<f64> = masked.iter().flat_map(|c| c.data().iter().copied()).collect();
    let frames = masked.len() * chunker.chunk_len;
    let out = FeatureMatrix::new(data, frames, dims, feats.frame_shift_ms(), feats.source_id())?;
    write_fmx1_atomic(&out, &args.out)?;
    if let Some(p) = &args.pgm {
        write_atomic(p, |w| {
            write_mask_pgm(&first, &masked[0], w).map_err(|e| CliError::at(p, e))
        })?;
    }
    Ok(())
}

pub const MASK_STATS_HEADER: [&str; 10] = [
    "tm",
    "fm",
    "fm_on_ivec",
    "chunk",
    "dims",
    "trials",
    "mean_time_fraction",
    "max_time_fraction",
    "mean_dim_fraction",
    "max_dim_fraction",
];

pub fn mask_stats(ctx: &Context, args: MaskStatsArgs) -> Result<(), CliError> {
    if let Some(p) = &args.out {
        require_parent(p)?;
    }
    let cfg = augment_config(ctx, args.tm, args.fm, args.fm_on_ivec)?;
    let chunk = args.chunk.unwrap_or(ctx.cfg.chunker.chunk_len);
    let stats = mask_statistics(&cfg, chunk, args.dims, args.trials, &mut SeededRng::new(ctx.seed))?;
    let row = [
        cfg.time.to_string(),
        cfg.feature.to_string(),
        cfg.fm_on_ivec.to_string(),
        chunk.to_string(),
        args.dims.to_string(),
        stats.trials.to_string(),
        stats.mean_time_fraction.to_string(),
        stats.max_time_fraction.to_string(),
        stats.mean_dim_fraction.to_string(),
        stats.max_dim_fraction.to_string(),
    ];
    let render = |w: &mut dyn Write, path: &Path| -> Result<(), CliError> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(MASK_STATS_HEADER).map_err(|e| csv_error(path, e))?;
        csv.write_record(&row).map_err(|e| csv_error(path, e))?;
        csv.flush().map_err(|e| CliError::io(path, e))
    };
    match &args.out {
        Some(p) => write_atomic(p, |w| render(w, p)),
        None => render(&mut std::io::stdout().lock(), Path::new("<stdout>")),
    }
}
