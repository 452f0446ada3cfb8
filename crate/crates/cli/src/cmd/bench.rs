use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use rayon::prelude::*;
use repairkit_core::decode::{
    accelerated_decode, aggregate, ar_decode, compute_metrics, CorpusAggregate, CostModel,
    DecodeLimits, DraftSource, EfficiencyReport, TimingMode,
};
use repairkit_core::triage::ProblemMeta;
use serde::Serialize;

use super::{prompt_text, DecodeFlags};
use crate::backend::{BackendSpec, Models};
use crate::output::{emit, json, read, read_json};
use crate::{Degenerate, Global};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Timing {
    /// Deterministic per-pass cost model.
    Simulated,
    /// Measured wall-clock time.
    Wall,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of `NAME.buggy.c` files with `NAME.fixed.c` (and optional
    /// `NAME.problem.json`) next to them.
    #[arg(long)]
    corpus: PathBuf,
    /// oracle, random[:SEED] or ngram[:ORDER]:DIR.
    #[arg(long)]
    backend: BackendSpec,
    #[arg(long, value_enum, default_value_t = Timing::Simulated)]
    timing: Timing,
    #[command(flatten)]
    decode: DecodeFlags,
    /// Report JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Program {
    name: String,
    buggy: String,
    fixed: Option<String>,
    prompt: String,
}

#[derive(Debug, Serialize)]
struct Row {
    name: String,
    truncated: bool,
    #[serde(flatten)]
    report: EfficiencyReport,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    backend: String,
    timing: TimingMode,
    limits: DecodeLimits,
    programs: Vec<Row>,
    aggregate: CorpusAggregate,
}

fn load_corpus(dir: &Path) -> anyhow::Result<Vec<Program>> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("reading corpus {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            e.file_name()
                .to_str()
                .and_then(|n| n.strip_suffix(".buggy.c"))
                .map(str::to_string)
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let buggy = read(&dir.join(format!("{name}.buggy.c")))?;
            let fixed_path = dir.join(format!("{name}.fixed.c"));
            let fixed = fixed_path.exists().then(|| read(&fixed_path)).transpose()?;
            let meta_path = dir.join(format!("{name}.problem.json"));
            let meta: Option<ProblemMeta> = meta_path
                .exists()
                .then(|| read_json(&meta_path))
                .transpose()?;
            let prompt = prompt_text(meta.as_ref(), &buggy, None);
            Ok(Program {
                name,
                buggy,
                fixed,
                prompt,
            })
        })
        .collect()
}

fn bench_one(
    models: &Models,
    p: &Program,
    limits: DecodeLimits,
    timing: TimingMode,
) -> anyhow::Result<Row> {
    let vocab = &models.vocab;
    let prompt = vocab.encode(&p.prompt);
    let buggy = vocab.encode(&p.buggy);
    let fixed = p.fixed.as_deref().map(|f| vocab.encode(f));
    let model = models.backend(&prompt, &buggy, fixed.as_deref())?;
    let ar = ar_decode(&model, &prompt, limits.n_max)?;
    let src = DraftSource::new(buggy, vocab.classifier());
    let acc = accelerated_decode(&model, &prompt, &src, limits)?;
    let report = compute_metrics(&ar, &acc, timing)?;
    Ok(Row {
        name: p.name.clone(),
        truncated: acc.truncated,
        report,
    })
}

pub fn run(g: &Global, a: Args) -> anyhow::Result<()> {
    let limits = a.decode.resolve(g)?;
    let timing = match a.timing {
        Timing::Simulated => TimingMode::Simulated(CostModel::default()),
        Timing::Wall => TimingMode::WallClock,
    };
    let programs = load_corpus(&a.corpus)?;
    if programs.is_empty() {
        return Err(Degenerate(format!("no *.buggy.c files in {}", a.corpus.display())).into());
    }
    let mut texts = Vec::new();
    for p in &programs {
        texts.extend([p.prompt.as_str(), p.buggy.as_str()]);
        texts.extend(p.fixed.as_deref());
    }
    let models = Models::new(a.backend.clone(), &texts, g.seed)?;

    let rows: Vec<Row> = programs
        .par_iter()
        .map(|p| {
            bench_one(&models, p, limits, timing).with_context(|| format!("program {}", p.name))
        })
        .collect::<anyhow::Result<_>>()?;
    let reports: Vec<EfficiencyReport> = rows.iter().map(|r| r.report.clone()).collect();
    let report = BenchReport {
        backend: a.backend.to_string(),
        timing,
        limits,
        aggregate: aggregate(&reports),
        programs: rows,
    };
    let rendered = json(&report);
    if let Some(p) = &a.out {
        emit(Some(p), &rendered)?;
    }
    if g.json {
        emit(None, &rendered)
    } else {
        emit(None, table(&report).as_bytes())
    }
}

fn table(r: &BenchReport) -> String {
    let mut s = format!(
        "{:<24} {:>7} {:>9} {:>9} {:>9} {:>8} {:>10}\n",
        "program", "tokens", "ar_steps", "steps", "step_eff", "speedup", "tokens/s"
    );
    for row in &r.programs {
        let m = &row.report;
        s += &format!(
            "{:<24} {:>7} {:>9} {:>9} {:>9.2} {:>8.2} {:>10.1}\n",
            row.name,
            m.tokens,
            m.forward_passes_ar,
            m.forward_passes_acc,
            m.step_efficiency,
            m.speedup,
            m.tokens_per_s
        );
    }
    let a = &r.aggregate;
    s += &format!(
        "{:<24} {:>7} {:>9} {:>9} {:>9.2} {:>8.2} {:>10.1}\n",
        format!("mean of {}", a.programs),
        "",
        "",
        "",
        a.step_efficiency,
        a.speedup,
        a.tokens_per_s
    );
    s
}
