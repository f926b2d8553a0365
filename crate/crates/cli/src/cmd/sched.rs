use std::io::Write;
use std::path::{Path, PathBuf};

use asrprep_core::trainsched::{active_layers, newbob_step};
use asrprep_core::{NewbobState, PretrainSchedule};
use clap::Args;

use crate::error::CliError;
use crate::output::{require_files, require_parent, write_atomic};
use crate::Context;

#[derive(Debug, Args)]
pub struct SchedReplayArgs {
    /// Score log: one `epoch score` pair per line, lower scores are better.
    /// Blank lines and lines starting with `#` are ignored.
    scores: PathBuf,
    /// CSV with columns `epoch,score,lr,active_layers`; stdout when absent.
    /// `lr` is the rate in force after the epoch's score has been seen.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scores(path: &Path) -> Result<Vec<(u32, f64)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || {
            CliError::Format(format!(
                "{}:{}: expected `epoch score`, got '{line}'",
                path.display(),
                i + 1
            ))
        };
        let mut fields = line.split_whitespace();
        let (Some(e), Some(s), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad());
        };
        let epoch: u32 = e.parse().map_err(|_| bad())?;
        let score: f64 = s.parse().map_err(|_| bad())?;
        if !score.is_finite() {
            return Err(bad());
        }
        out.push((epoch, score));
    }
    Ok(out)
}

pub fn sched_replay(ctx: &Context, args: SchedReplayArgs) -> Result<(), CliError> {
    require_files([&args.scores])?;
    if let Some(p) = &args.out {
        require_parent(p)?;
    }
    let s = &ctx.cfg.sched;
    let mut state = NewbobState::new(s.initial_lr, s.decay, s.threshold, s.min_lr)?;
    let layers = PretrainSchedule::new(s.total_layers, s.epochs_per_stage)?;
    let scores = parse_scores(&args.scores)?;

    let mut text = String::from("epoch,score,lr,active_layers\n");
    for (epoch, score) in scores {
        state = newbob_step(&state, epoch, score)?;
        text.push_str(&format!(
            "{epoch},{score},{},{}\n",
            state.current_lr(),
            active_layers(&layers, epoch)
        ));
    }
    match &args.out {
        Some(p) => write_atomic(p, |w| w.write_all(text.as_bytes()).map_err(|e| CliError::io(p, e))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}
