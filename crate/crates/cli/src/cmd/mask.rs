use std::path::PathBuf;

use anyhow::Context;
use repairkit_core::code_model::SourceUnit;
use repairkit_core::mask::{build_mask, MaskFlag, MaskRecord};

use super::MaskFlags;
use crate::output::{emit, read};
use crate::{Degenerate, Global};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    buggy: PathBuf,
    #[arg(long)]
    fixed: PathBuf,
    #[command(flatten)]
    mask: MaskFlags,
    /// Record id; defaults to the buggy file's stem.
    #[arg(long)]
    pair_id: Option<String>,
    #[arg(long, default_value = "")]
    problem_id: String,
    /// Output file (one JSON line); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(g: &Global, a: Args) -> anyhow::Result<()> {
    let cfg = a.mask.resolve(g);
    let buggy = SourceUnit::parse(read(&a.buggy)?);
    let fixed = SourceUnit::parse(read(&a.fixed)?);
    let mask = build_mask(&buggy, &fixed, &cfg).context("building mask")?;
    if mask.has_flag(MaskFlag::UndefinedWeights) {
        return Err(Degenerate(format!(
            "no weighted statements under {}: {}",
            cfg.strategy,
            if mask.has_flag(MaskFlag::NoModification) {
                "buggy and fixed programs are identical"
            } else {
                "fixed program has no statements"
            }
        ))
        .into());
    }
    let pair_id = a.pair_id.unwrap_or_else(|| {
        a.buggy
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let record = MaskRecord::new(pair_id, a.problem_id, &buggy, &fixed, &mask);
    if !g.json {
        eprintln!(
            "{} statements, {} modified, {} expanded, {} padded",
            fixed.statements.len(),
            mask.y_m.len(),
            mask.y_e.len(),
            mask.padded.len()
        );
    }
    emit(a.out.as_deref(), (record.to_json_line() + "\n").as_bytes())
}
