use std::path::PathBuf;

use repairkit_core::decode::{accelerated_decode, ar_decode, DraftSource};
use repairkit_core::triage::{BugType, ProblemMeta};
use serde::Serialize;

use super::{prompt_text, DecodeFlags, Mode, StatsOut};
use crate::backend::{BackendSpec, Models};
use crate::output::{emit, json, read, read_json};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Buggy C source.
    #[arg(long)]
    src: PathBuf,
    /// Problem metadata JSON for the prompt.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Fixed program the oracle backend reproduces.
    #[arg(long)]
    fixed: Option<PathBuf>,
    /// oracle, random[:SEED] or ngram[:ORDER]:DIR.
    #[arg(long)]
    backend: BackendSpec,
    #[arg(long, value_enum, default_value_t = Mode::Fast)]
    mode: Mode,
    /// Bug type shown in the prompt.
    #[arg(long)]
    bug_type: Option<BugType>,
    #[command(flatten)]
    decode: DecodeFlags,
    /// Include wall-clock time in the statistics.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RepairOut {
    backend: String,
    mode: Mode,
    code: String,
    truncated: bool,
    stats: StatsOut,
}

pub fn run(g: &Global, a: Args) -> anyhow::Result<()> {
    let limits = a.decode.resolve(g)?;
    let buggy = read(&a.src)?;
    let fixed = a.fixed.as_deref().map(read).transpose()?;
    let meta: Option<ProblemMeta> = a.problem.as_deref().map(read_json).transpose()?;
    let prompt = prompt_text(meta.as_ref(), &buggy, a.bug_type);

    let mut texts = vec![prompt.as_str(), buggy.as_str()];
    texts.extend(fixed.as_deref());
    let models = Models::new(a.backend.clone(), &texts, g.seed)?;
    let vocab = &models.vocab;
    let prompt_ids = vocab.encode(&prompt);
    let buggy_ids = vocab.encode(&buggy);
    let fixed_ids = fixed.as_deref().map(|f| vocab.encode(f));
    let model = models.backend(&prompt_ids, &buggy_ids, fixed_ids.as_deref())?;

    let out = match a.mode {
        Mode::Ar => ar_decode(&model, &prompt_ids, limits.n_max)?,
        Mode::Fast => {
            let src = DraftSource::new(buggy_ids, vocab.classifier());
            accelerated_decode(&model, &prompt_ids, &src, limits)?
        }
    };
    let code = vocab.decode(&out.tokens);
    if g.json {
        let r = RepairOut {
            backend: a.backend.to_string(),
            mode: a.mode,
            code,
            truncated: out.truncated,
            stats: StatsOut::new(&out.stats, a.timings),
        };
        return emit(a.out.as_deref(), &json(&r));
    }
    let s = &out.stats;
    eprintln!(
        "{} tokens in {} forward passes ({} draft tokens accepted){}",
        s.tokens_emitted,
        s.forward_passes,
        s.draft_accepted,
        if out.truncated {
            ", truncated at n_max"
        } else {
            ""
        }
    );
    emit(a.out.as_deref(), code.as_bytes())
}
