use std::path::PathBuf;

use repairkit_core::triage::{
    classify, compile_and_run, BugType, ExecutorConfig, ProblemMeta, TestStatus,
};
use serde::Serialize;

use super::prompt_text;
use crate::output::{emit, json, read, read_json};
use crate::Global;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// C source file.
    #[arg(long)]
    src: PathBuf,
    /// Problem metadata JSON with graded tests.
    #[arg(long)]
    problem: PathBuf,
    /// Per-test time budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Include the rendered repair prompt.
    #[arg(long)]
    prompt: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct TestOut {
    status: TestStatus,
    exit_code: Option<i32>,
    signal: Option<i32>,
    output_truncated: bool,
    stdout: String,
}

#[derive(Debug, Serialize)]
struct TriageOut {
    problem_id: String,
    /// `null` when every test passes.
    bug_type: Option<BugType>,
    compile_ok: bool,
    compiler_status: Option<i32>,
    diagnostics: String,
    timeout_budget_s: f64,
    tests: Vec<TestOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt: Option<String>,
}

pub fn run(g: &Global, a: Args) -> anyhow::Result<()> {
    let source = read(&a.src)?;
    let meta: ProblemMeta = read_json(&a.problem)?;
    let exec = ExecutorConfig {
        timeout_s: a.timeout.unwrap_or(g.config.executor.timeout_s),
        ..g.config.executor.clone()
    };
    anyhow::ensure!(exec.timeout_s > 0.0, "--timeout must be positive");
    let report = compile_and_run(&source, &meta.tests, &exec)?;
    let expected: Vec<String> = meta.tests.iter().map(|t| t.expected.clone()).collect();
    let bug_type = classify(&report, &expected);

    let out = TriageOut {
        problem_id: meta.problem_id.clone(),
        bug_type,
        compile_ok: report.compile_ok,
        compiler_status: report.compiler_status,
        diagnostics: report.diagnostics,
        timeout_budget_s: report.timeout_budget_s,
        tests: report
            .tests
            .into_iter()
            .map(|t| TestOut {
                status: t.status,
                exit_code: t.exit_code,
                signal: t.signal,
                output_truncated: t.output_truncated,
                stdout: t.stdout,
            })
            .collect(),
        prompt: a
            .prompt
            .then(|| prompt_text(Some(&meta), &source, bug_type)),
    };
    let bytes = if g.json {
        json(&out)
    } else {
        human(&out).into_bytes()
    };
    emit(a.out.as_deref(), &bytes)
}

fn human(t: &TriageOut) -> String {
    let mut s = match t.bug_type {
        Some(b) => format!("{b} ({})\n", b.describe()),
        None => "accepted\n".to_string(),
    };
    if !t.compile_ok {
        s += &t.diagnostics;
        if !s.ends_with('\n') {
            s.push('\n');
        }
    }
    for (i, test) in t.tests.iter().enumerate() {
        let status = match test.status {
            TestStatus::Pass => "pass",
            TestStatus::Wrong => "wrong",
            TestStatus::Timeout => "timeout",
        };
        s += &format!("test {}: {status}\n", i + 1);
    }
    if let Some(p) = &t.prompt {
        s.push('\n');
        s += p;
    }
    s
}
