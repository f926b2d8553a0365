use std::io::Write;
use std::path::{Path, PathBuf};

use asrprep_core::lm::{
    arpa_string, count_ngrams, interp_fit, kn_estimate, parse_arpa, perplexity, prune_by_count, read_arpa_file,
    read_corpus_file, read_vocab_file, InterpolatedLM, LanguageModel, NGramModel, Vocabulary,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{require_files, require_parent, write_text};
use crate::Context;

#[derive(Debug, Args)]
pub struct LmTrainArgs {
    /// Training text, one sentence per line.
    corpus: PathBuf,
    /// ARPA output.
    #[arg(long)]
    out: PathBuf,
    /// Model order; overrides the configuration.
    #[arg(long)]
    order: Option<usize>,
    /// Fixed vocabulary, one token per line. Out-of-vocabulary words map to
    /// `<unk>`. Models to be interpolated must share one vocabulary.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Minimum raw counts for orders 2, 3, ... (comma separated).
    #[arg(long, value_delimiter = ',')]
    prune: Option<Vec<u64>>,
    /// Also write the vocabulary used.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LmInterpArgs {
    /// ARPA component models sharing one vocabulary.
    #[arg(required = true)]
    components: Vec<PathBuf>,
    /// Development text the weights are fitted on.
    #[arg(long)]
    dev: PathBuf,
    /// JSON manifest with component paths, weights and the EM trace.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LmPplArgs {
    /// Evaluation text, one sentence per line.
    corpus: PathBuf,
    /// ARPA model or manifest written by `lm-interp`.
    #[arg(long)]
    lm: PathBuf,
    /// Also write the perplexity to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LmArpaArgs {
    /// ARPA model to import.
    input: PathBuf,
    /// Canonical ARPA output.
    #[arg(long)]
    out: PathBuf,
    /// Also write the model's vocabulary.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpManifest {
    pub components: Vec<String>,
    pub weights: Vec<f64>,
    pub dev_log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub dev_perplexity: f64,
}

fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    read_corpus_file(path).map_err(|e| CliError::at(path, e))
}

fn read_model(path: &Path) -> Result<NGramModel, CliError> {
    read_arpa_file(path).map_err(|e| CliError::at(path, e))
}

fn write_vocab(vocab: &Vocabulary, path: &Path) -> Result<(), CliError> {
    let mut text = String::new();
    for tok in vocab.tokens() {
        text.push_str(tok);
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn lm_train(ctx: &Context, args: LmTrainArgs) -> Result<(), CliError> {
    require_files(std::iter::once(&args.corpus).chain(&args.vocab))?;
    require_parent(&args.out)?;
    if let Some(p) = &args.vocab_out {
        require_parent(p)?;
    }
    let order = args.order.unwrap_or(ctx.cfg.lm.order);
    let prune = args.prune.unwrap_or_else(|| ctx.cfg.lm.prune.clone());
    let text = read_corpus(&args.corpus)?;
    let vocab = match &args.vocab {
        Some(p) => read_vocab_file(p).map_err(|e| CliError::at(p, e))?,
        None => Vocabulary::from_corpus(&text),
    };
    let counts = count_ngrams(&vocab.encode_corpus(&text), order, &vocab)?;
    let mut model = kn_estimate(&counts)?;
    if !prune.is_empty() {
        model = prune_by_count(&model, &counts, &prune)?;
    }
    write_text(&args.out, &arpa_string(&model))?;
    if let Some(p) = &args.vocab_out {
        write_vocab(&vocab, p)?;
    }
    Ok(())
}

pub fn lm_interp(_ctx: &Context, args: LmInterpArgs) -> Result<(), CliError> {
    require_files(args.components.iter().chain([&args.dev]))?;
    require_parent(&args.out)?;
    let models = args
        .components
        .iter()
        .map(|p| read_model(p))
        .collect::<Result<Vec<_>, _>>()?;
    let dev_text = read_corpus(&args.dev)?;
    let dev = models[0].vocab().encode_corpus(&dev_text);
    let fit = interp_fit(models, &dev)?;
    let manifest = InterpManifest {
        components: args.components.iter().map(|p| p.display().to_string()).collect(),
        weights: fit.lm.weights().to_vec(),
        dev_perplexity: perplexity(&fit.lm, &dev)?,
        dev_log_likelihood: fit.dev_log_likelihood,
        iterations: fit.iterations,
        converged: fit.converged,
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Format(e.to_string()))?;
    json.push('\n');
    write_text(&args.out, &json)
}

/// Loads an ARPA model, or the mixture described by an `lm-interp` manifest.
fn load_lm(path: &Path) -> Result<Box<dyn LanguageModel>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if !text.trim_start().starts_with('{') {
        return Ok(Box::new(parse_arpa(&text).map_err(|e| CliError::at(path, e))?));
    }
    let manifest: InterpManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let paths: Vec<PathBuf> = manifest.components.iter().map(PathBuf::from).collect();
    require_files(&paths)?;
    let models = paths.iter().map(|p| read_model(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(Box::new(InterpolatedLM::new(models, manifest.weights)?))
}

pub fn lm_ppl(_ctx: &Context, args: LmPplArgs) -> Result<(), CliError> {
    require_files([&args.corpus, &args.lm])?;
    if let Some(p) = &args.out {
        require_parent(p)?;
    }
    let lm = load_lm(&args.lm)?;
    let text = read_corpus(&args.corpus)?;
    let ppl = perplexity(lm.as_ref(), &lm.vocab().encode_corpus(&text))?;
    let line = format!("{ppl:.6}\n");
    if let Some(p) = &args.out {
        write_text(p, &line)?;
    }
    std::io::stdout()
        .lock()
        .write_all(line.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn lm_arpa(_ctx: &Context, args: LmArpaArgs) -> Result<(), CliError> {
    require_files([&args.input])?;
    require_parent(&args.out)?;
    if let Some(p) = &args.vocab_out {
        require_parent(p)?;
    }
    let model = read_model(&args.input)?;
    write_text(&args.out, &arpa_string(&model))?;
    if let Some(p) = &args.vocab_out {
        write_vocab(model.vocab(), p)?;
    }
    Ok(())
}
