use std::fs;
use std::path::PathBuf;

use anyhow::{ensure, Context};
use repairkit_core::mock::synth::synth_fixture;
use serde::Serialize;

use crate::output::{emit, json};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Token length of each fixed program.
    #[arg(long, default_value_t = 1000)]
    length: usize,
    /// Diff regions per buggy program.
    #[arg(long, default_value_t = 1)]
    regions: usize,
    /// Number of pairs.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value = "synth")]
    prefix: String,
}

#[derive(Debug, Serialize)]
struct Written {
    name: String,
    target_tokens: usize,
    regions: usize,
}

pub fn run(g: &Global, a: Args) -> anyhow::Result<()> {
    ensure!(
        a.length >= 12 + 11 * a.regions,
        "--length {} is too short for {} regions",
        a.length,
        a.regions
    );
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut written = Vec::new();
    for i in 0..a.count {
        let f = synth_fixture(a.length, a.regions, g.seed.wrapping_add(i as u64));
        let name = format!("{}_{i:03}", a.prefix);
        let write = |suffix: &str, text: &str| {
            let p = a.out.join(format!("{name}.{suffix}"));
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
        };
        write("buggy.c", &f.buggy[a.regions])?;
        write("fixed.c", &f.target)?;
        written.push(Written {
            name,
            target_tokens: f.target_tokens,
            regions: a.regions,
        });
    }
    if g.json {
        emit(None, &json(&written))
    } else {
        let lines: String = written.iter().map(|w| format!("{}\n", w.name)).collect();
        emit(None, lines.as_bytes())
    }
}
