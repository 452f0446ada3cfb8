use std::path::PathBuf;

use repairkit_core::dataset::{
    export_corpus, filter_pairs, pair_submissions, Archive, CorpusStats, Rejection, DEFAULT_MAX_LED,
};
use serde::Serialize;

use super::MaskFlags;
use crate::output::{emit, json};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory tree `problem/student/timestamp.c` with `verdicts.json`, or a
    /// JSONL file of submissions.
    #[arg(long)]
    archive: PathBuf,
    /// Largest line edit distance kept.
    #[arg(long)]
    max_led: Option<usize>,
    #[command(flatten)]
    mask: MaskFlags,
    /// Corpus file (JSONL mask records).
    #[arg(long)]
    out: PathBuf,
    /// Also write the summary JSON here.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Fill missing verdicts by running each problem's tests.
    #[arg(long)]
    triage: bool,
}

#[derive(Debug, Serialize)]
struct Summary {
    submissions: usize,
    unlabelled: usize,
    candidates: usize,
    max_led: usize,
    kept: usize,
    rejected: Vec<Rejection>,
    stats: CorpusStats,
}

pub fn run(g: &Global, a: Args) -> anyhow::Result<()> {
    let cfg = a.mask.resolve(g);
    cfg.validate()?;
    let max_led = a.max_led.or(g.config.max_led).unwrap_or(DEFAULT_MAX_LED);
    let mut archive = Archive::load(&a.archive)?;
    if a.triage {
        archive.triage_missing(&g.config.executor)?;
    }
    let unlabelled = archive
        .submissions
        .iter()
        .filter(|s| s.verdict.is_none())
        .count();
    if unlabelled > 0 {
        eprintln!("warning: {unlabelled} submissions without a verdict are ignored");
    }

    let candidates = pair_submissions(&archive.submissions);
    let n_candidates = candidates.len();
    let filtered = filter_pairs(candidates, max_led);
    let stats = export_corpus(&filtered.kept, &cfg, &a.out)?;
    let summary = Summary {
        submissions: archive.submissions.len(),
        unlabelled,
        candidates: n_candidates,
        max_led,
        kept: filtered.kept.len(),
        rejected: filtered.rejected,
        stats,
    };
    let rendered = json(&summary);
    if let Some(p) = &a.stats {
        emit(Some(p), &rendered)?;
    }
    if g.json {
        emit(None, &rendered)
    } else {
        emit(None, human(&summary).as_bytes())
    }
}

fn human(s: &Summary) -> String {
    let st = &s.stats;
    let mut out = format!(
        "submissions      {}\ncandidate pairs  {}\nkept (LED <= {}) {}\nrejected         {}\n",
        s.submissions,
        s.candidates,
        s.max_led,
        s.kept,
        s.rejected.len()
    );
    out += &format!(
        "buggy files      {}\nfixed files      {}\nlines            avg {:.2} median {:.1}\ntokens           avg {:.2} median {:.1}\n",
        st.buggy_files, st.fixed_files, st.lines.avg, st.lines.median, st.tokens.avg, st.tokens.median
    );
    for (bug, n) in &st.bug_types {
        out += &format!("bug type {bug:<7} {n}\n");
    }
    out
}
