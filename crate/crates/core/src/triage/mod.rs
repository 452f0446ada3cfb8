//! Bug-type triage from compile and execution evidence, and repair prompt
//! assembly.

mod exec;
mod prompt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use exec::{
    compile_and_run, compiler_available, ExecError, ExecutionReport, ExecutorConfig, TestRun,
    TestStatus,
};
pub use prompt::{build_prompt, ExampleIo, ProblemMeta, PromptRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    #[serde(rename = "in")]
    pub input: String,
    pub expected: String,
}

/// Primary bug label. Precedence when several apply: CE, TLE, PE, SE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BugType {
    /// Compile error.
    CE,
    /// Time limit exceeded.
    TLE,
    /// Presentation error: only the output layout is wrong.
    PE,
    /// Semantic error: anything else.
    SE,
}

impl BugType {
    pub const ALL: [BugType; 4] = [BugType::CE, BugType::TLE, BugType::PE, BugType::SE];

    pub fn describe(self) -> &'static str {
        match self {
            BugType::CE => "compile error",
            BugType::TLE => "timeout error",
            BugType::PE => "presentation error",
            BugType::SE => "semantic error",
        }
    }
}

impl fmt::Display for BugType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BugType::CE => "CE",
            BugType::TLE => "TLE",
            BugType::PE => "PE",
            BugType::SE => "SE",
        };
        f.write_str(s)
    }
}

impl FromStr for BugType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CE" => Ok(BugType::CE),
            "TLE" => Ok(BugType::TLE),
            "PE" => Ok(BugType::PE),
            "SE" => Ok(BugType::SE),
            _ => Err(format!("unknown bug type `{s}`")),
        }
    }
}

/// Canonical output layout: trailing whitespace trimmed on every line, runs
/// of spaces and tabs collapsed to one space, trailing blank lines dropped.
pub fn normalize_output(s: &str) -> String {
    let mut lines: Vec<String> = s
        .lines()
        .map(|line| {
            let mut out = String::with_capacity(line.len());
            let mut in_gap = false;
            for c in line.trim_end().chars() {
                if c == ' ' || c == '\t' {
                    in_gap = true;
                    continue;
                }
                if in_gap {
                    out.push(' ');
                    in_gap = false;
                }
                out.push(c);
            }
            out
        })
        .collect();
    while lines.last().is_some_and(String::is_empty) {
        lines.pop();
    }
    lines.join("\n")
}

/// Label a report. `None` means every test passed (nothing to repair).
/// `expected` holds the expected output of each test, in report order.
pub fn classify(report: &ExecutionReport, expected: &[String]) -> Option<BugType> {
    if !report.compile_ok {
        return Some(BugType::CE);
    }
    if report.tests.iter().any(|t| t.status == TestStatus::Timeout) {
        return Some(BugType::TLE);
    }
    let failing: Vec<(&TestRun, &String)> = report
        .tests
        .iter()
        .zip(expected)
        .filter(|(t, _)| t.status != TestStatus::Pass)
        .collect();
    if failing.is_empty() {
        return None;
    }
    let layout_only = failing
        .iter()
        .all(|(t, e)| !t.output_truncated && normalize_output(&t.stdout) == normalize_output(e));
    Some(if layout_only {
        BugType::PE
    } else {
        BugType::SE
    })
}
