//! Repair-pair corpora from submission archives.
//!
//! Each incorrect submission is paired with the same student's earliest later
//! accepted submission for the same problem. Pairs whose line edit distance
//! exceeds a threshold are dropped as restructurings, the rest are exported
//! as mask records (one JSON object per line) plus summary statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code_model::SourceUnit;
use crate::diff_align::line_edit_distance;
use crate::mask::{build_mask, MaskConfig, MaskError, MaskFlag, MaskRecord};
use crate::mock::mix;
use crate::triage::{classify, compile_and_run, BugType, ExecError, ExecutorConfig, ProblemMeta};

pub const DEFAULT_MAX_LED: usize = 10;
pub const VERDICT_FILE: &str = "verdicts.json";
pub const PROBLEM_FILE: &str = "problem.json";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("duplicate submission {0}")]
    Duplicate(String),
    #[error("submission {0} has no verdict and its problem has no tests")]
    MissingVerdict(String),
    #[error("pair {pair_id}: {source}")]
    Mask {
        pair_id: String,
        #[source]
        source: MaskError,
    },
    #[error("writing pair {pair_id}: {source}")]
    Write {
        pair_id: String,
        #[source]
        source: io::Error,
    },
    #[error("triage of {id}: {source}")]
    Triage {
        id: String,
        #[source]
        source: ExecError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub problem_id: String,
    pub student_id: String,
    pub timestamp: i64,
    pub source: String,
    /// `AC` for accepted; a bug type (`CE`, `TLE`, `PE`, `SE`) or any other
    /// judge code otherwise.
    #[serde(default)]
    pub verdict: Option<String>,
    #[serde(default)]
    pub year: Option<String>,
}

impl Submission {
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.problem_id, self.student_id, self.timestamp)
    }

    pub fn is_accepted(&self) -> bool {
        self.verdict
            .as_deref()
            .is_some_and(|v| matches!(v.to_ascii_uppercase().as_str(), "AC" | "ACCEPTED" | "OK"))
    }

    /// Incorrect means a known verdict other than accepted.
    pub fn is_incorrect(&self) -> bool {
        self.verdict.is_some() && !self.is_accepted()
    }

    pub fn bug_type(&self) -> Option<BugType> {
        self.verdict.as_deref()?.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairPair {
    pub pair_id: String,
    pub buggy: Submission,
    pub fixed: Submission,
    pub led: usize,
    pub bug_type: Option<BugType>,
    pub no_modification: bool,
}

/// Pair every incorrect submission with the earliest subsequent accepted
/// submission of the same student and problem. Output is ordered by
/// (problem, student, buggy timestamp) whatever the input order.
pub fn pair_submissions(archive: &[Submission]) -> Vec<RepairPair> {
    let mut groups: BTreeMap<(&str, &str), Vec<&Submission>> = BTreeMap::new();
    for s in archive {
        groups
            .entry((&s.problem_id, &s.student_id))
            .or_default()
            .push(s);
    }
    let groups: Vec<Vec<&Submission>> = groups.into_values().collect();
    groups
        .into_par_iter()
        .flat_map_iter(|mut subs| {
            subs.sort_by_key(|s| s.timestamp);
            let mut pairs = Vec::new();
            for (i, buggy) in subs.iter().enumerate() {
                if !buggy.is_incorrect() {
                    continue;
                }
                let fixed = subs[i + 1..]
                    .iter()
                    .find(|s| s.timestamp > buggy.timestamp && s.is_accepted());
                if let Some(fixed) = fixed {
                    pairs.push(make_pair(buggy, fixed));
                }
            }
            pairs
        })
        .collect()
}

fn make_pair(buggy: &Submission, fixed: &Submission) -> RepairPair {
    let led = line_edit_distance(&buggy.source, &fixed.source);
    RepairPair {
        pair_id: buggy.id(),
        buggy: buggy.clone(),
        fixed: fixed.clone(),
        led,
        bug_type: buggy.bug_type(),
        no_modification: led == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub pair_id: String,
    pub led: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<RepairPair>,
    pub rejected: Vec<Rejection>,
}

/// Keep pairs with `led <= max_led`. Pass `usize::MAX` to keep everything.
pub fn filter_pairs(pairs: Vec<RepairPair>, max_led: usize) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for p in pairs {
        if p.led <= max_led {
            out.kept.push(p);
        } else {
            out.rejected.push(Rejection {
                reason: format!(
                    "line edit distance {} exceeds {max_led}: restructuring rather than repair",
                    p.led
                ),
                pair_id: p.pair_id,
                led: p.led,
            });
        }
    }
    out
}

/// Average and median of a sample; both zero for an empty sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub avg: f64,
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[usize]) -> Self {
        if values.is_empty() {
            return Summary::default();
        }
        let mut v = values.to_vec();
        v.sort_unstable();
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        };
        Summary {
            avg: v.iter().sum::<usize>() as f64 / n as f64,
            median,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pairs: usize,
    pub buggy_files: usize,
    pub fixed_files: usize,
    /// Line counts of the buggy files.
    pub lines: Summary,
    /// Code token counts of the buggy files.
    pub tokens: Summary,
    /// Pair counts per bug type; unlabelled pairs count under `unknown`.
    pub bug_types: BTreeMap<String, usize>,
    pub no_modification: usize,
    pub undefined_weights: usize,
    pub degraded: usize,
}

/// Mask seed of one pair: the global seed mixed with a stable hash of its id.
pub fn pair_seed(global: u64, pair_id: &str) -> u64 {
    global ^ mix(fnv1a(pair_id.as_bytes()))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

struct Built {
    line: String,
    lines: usize,
    tokens: usize,
    flags: Vec<MaskFlag>,
}

fn build_record(pair: &RepairPair, cfg: &MaskConfig) -> Result<Built, DatasetError> {
    let buggy = SourceUnit::parse(pair.buggy.source.as_str());
    let fixed = SourceUnit::parse(pair.fixed.source.as_str());
    let cfg = MaskConfig {
        rng_seed: pair_seed(cfg.rng_seed, &pair.pair_id),
        ..cfg.clone()
    };
    let mask = build_mask(&buggy, &fixed, &cfg).map_err(|source| DatasetError::Mask {
        pair_id: pair.pair_id.clone(),
        source,
    })?;
    let record = MaskRecord::new(&pair.pair_id, &pair.buggy.problem_id, &buggy, &fixed, &mask);
    Ok(Built {
        line: record.to_json_line(),
        lines: buggy.line_count(),
        tokens: buggy.code_token_count(),
        flags: record.flags,
    })
}

/// Build every pair's mask record and summary statistics, in pair order.
pub fn build_corpus(
    pairs: &[RepairPair],
    cfg: &MaskConfig,
) -> Result<(Vec<String>, CorpusStats), DatasetError> {
    let built: Vec<Built> = pairs
        .par_iter()
        .map(|p| build_record(p, cfg))
        .collect::<Result<_, _>>()?;

    let mut stats = CorpusStats {
        pairs: pairs.len(),
        buggy_files: pairs
            .iter()
            .map(|p| &p.pair_id)
            .collect::<HashSet<_>>()
            .len(),
        fixed_files: pairs
            .iter()
            .map(|p| p.fixed.id())
            .collect::<HashSet<_>>()
            .len(),
        lines: Summary::of(&built.iter().map(|b| b.lines).collect::<Vec<_>>()),
        tokens: Summary::of(&built.iter().map(|b| b.tokens).collect::<Vec<_>>()),
        ..CorpusStats::default()
    };
    for p in pairs {
        let key = p
            .bug_type
            .map_or_else(|| "unknown".to_string(), |b| b.to_string());
        *stats.bug_types.entry(key).or_default() += 1;
    }
    for b in &built {
        for f in &b.flags {
            match f {
                MaskFlag::NoModification => stats.no_modification += 1,
                MaskFlag::UndefinedWeights => stats.undefined_weights += 1,
                MaskFlag::Degraded => stats.degraded += 1,
            }
        }
    }
    Ok((built.into_iter().map(|b| b.line).collect(), stats))
}

/// Write the corpus JSONL to `path` and return its statistics.
pub fn export_corpus(
    pairs: &[RepairPair],
    cfg: &MaskConfig,
    path: &Path,
) -> Result<CorpusStats, DatasetError> {
    let (lines, stats) = build_corpus(pairs, cfg)?;
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for (pair, line) in pairs.iter().zip(&lines) {
        writeln!(w, "{line}").map_err(|source| DatasetError::Write {
            pair_id: pair.pair_id.clone(),
            source,
        })?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(stats)
}

#[derive(Debug, Clone, Default)]
pub struct Archive {
    pub submissions: Vec<Submission>,
    pub problems: BTreeMap<String, ProblemMeta>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VerdictEntry {
    Plain(String),
    Full {
        verdict: String,
        #[serde(default)]
        year: Option<String>,
    },
}

impl Archive {
    /// Load a directory tree `problem/student/timestamp.c` with a
    /// `verdicts.json` manifest at the root mapping `problem/student/timestamp`
    /// to a verdict string or `{verdict, year}`. A `problem/problem.json` file
    /// holds that problem's metadata.
    pub fn from_dir(root: &Path) -> Result<Self, DatasetError> {
        let manifest_path = root.join(VERDICT_FILE);
        let verdicts: BTreeMap<String, VerdictEntry> = if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
            serde_json::from_str(&text).map_err(|e| DatasetError::Format {
                path: manifest_path.clone(),
                msg: e.to_string(),
            })?
        } else {
            BTreeMap::new()
        };

        let mut archive = Archive::default();
        for problem in sorted_dirs(root)? {
            let problem_id = file_name(&problem);
            let meta_path = problem.join(PROBLEM_FILE);
            if meta_path.exists() {
                let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
                let meta: ProblemMeta =
                    serde_json::from_str(&text).map_err(|e| DatasetError::Format {
                        path: meta_path.clone(),
                        msg: e.to_string(),
                    })?;
                archive.problems.insert(problem_id.clone(), meta);
            }
            for student in sorted_dirs(&problem)? {
                let student_id = file_name(&student);
                let mut files: Vec<PathBuf> = fs::read_dir(&student)
                    .map_err(io_err(&student))?
                    .map(|e| e.map(|e| e.path()))
                    .collect::<Result<_, _>>()
                    .map_err(io_err(&student))?;
                files.retain(|p| p.extension().is_some_and(|e| e == "c"));
                files.sort();
                for path in files {
                    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                    let timestamp = stem.parse().map_err(|_| DatasetError::Format {
                        path: path.clone(),
                        msg: "file stem is not an integer timestamp".into(),
                    })?;
                    let source = fs::read_to_string(&path).map_err(io_err(&path))?;
                    let key = format!("{problem_id}/{student_id}/{timestamp}");
                    let (verdict, year) = match verdicts.get(&key) {
                        Some(VerdictEntry::Plain(v)) => (Some(v.clone()), None),
                        Some(VerdictEntry::Full { verdict, year }) => {
                            (Some(verdict.clone()), year.clone())
                        }
                        None => (None, None),
                    };
                    archive.submissions.push(Submission {
                        problem_id: problem_id.clone(),
                        student_id: student_id.clone(),
                        timestamp,
                        source,
                        verdict,
                        year,
                    });
                }
            }
        }
        archive.check_unique()?;
        Ok(archive)
    }

    /// Load one submission per line (blank lines skipped).
    pub fn from_jsonl(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut archive = Archive::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let sub: Submission = serde_json::from_str(line).map_err(|e| DatasetError::Format {
                path: path.to_path_buf(),
                msg: format!("line {}: {e}", n + 1),
            })?;
            archive.submissions.push(sub);
        }
        archive.check_unique()?;
        Ok(archive)
    }

    /// Directory trees and JSONL manifests are both accepted.
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        if path.is_dir() {
            Archive::from_dir(path)
        } else {
            Archive::from_jsonl(path)
        }
    }

    fn check_unique(&self) -> Result<(), DatasetError> {
        let mut seen = BTreeSet::new();
        for s in &self.submissions {
            if !seen.insert(s.id()) {
                return Err(DatasetError::Duplicate(s.id()));
            }
        }
        Ok(())
    }

    /// Fill missing verdicts by compiling and running against the problem's
    /// tests: `AC` when all pass, the bug type otherwise.
    pub fn triage_missing(&mut self, exec: &ExecutorConfig) -> Result<usize, DatasetError> {
        let problems = &self.problems;
        let todo: Vec<&mut Submission> = self
            .submissions
            .iter_mut()
            .filter(|s| s.verdict.is_none())
            .collect();
        let n = todo.len();
        todo.into_par_iter().try_for_each(|s| {
            let meta = problems
                .get(&s.problem_id)
                .filter(|m| !m.tests.is_empty())
                .ok_or_else(|| DatasetError::MissingVerdict(s.id()))?;
            let report = compile_and_run(&s.source, &meta.tests, exec)
                .map_err(|source| DatasetError::Triage { id: s.id(), source })?;
            let expected: Vec<String> = meta.tests.iter().map(|t| t.expected.clone()).collect();
            s.verdict = Some(
                classify(&report, &expected).map_or_else(|| "AC".to_string(), |b| b.to_string()),
            );
            Ok(())
        })?;
        Ok(n)
    }
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .unwrap_or_default()
        .to_string_lossy()
        .into_owned()
}
