//! Compile a C submission and run it against test inputs.
//!
//! Each submission gets a fresh temporary directory holding `main.c` and the
//! binary. Test processes run there with an empty environment, in their own
//! process group (killed as a whole on timeout), under resource limits, and
//! in a fresh network namespace when the kernel allows it.

use std::fs;
use std::io::{self, Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TestCase;

const SRC_NAME: &str = "main.c";
const BIN_NAME: &str = "main";
const POLL: Duration = Duration::from_millis(2);

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("compiler `{0}` not found")]
    CompilerMissing(String),
    #[error("compiler command template is empty")]
    EmptyCompilerCommand,
    #[error("sandbox setup failed: {0}")]
    Sandbox(#[source] io::Error),
    #[error("invalid executor config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutorConfig {
    /// Whitespace-separated command with `{src}` and `{out}` placeholders.
    pub compiler_cmd: String,
    /// Wall-clock budget per test run, in seconds.
    pub timeout_s: f64,
    pub compile_timeout_s: f64,
    /// Captured stdout beyond this many bytes ends the run.
    pub max_output_bytes: usize,
    pub memory_limit_mb: u64,
    /// Test runs executed concurrently per submission.
    pub jobs: usize,
    /// Try to give each run an empty network namespace.
    pub isolate_network: bool,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig {
            compiler_cmd: "cc -std=gnu11 -O1 -w -o {out} {src} -lm".to_string(),
            timeout_s: 2.0,
            compile_timeout_s: 30.0,
            max_output_bytes: 1 << 20,
            memory_limit_mb: 512,
            jobs: 1,
            isolate_network: true,
        }
    }
}

impl ExecutorConfig {
    /// Parse `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self, ExecError> {
        let mut cfg = ExecutorConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ExecError::Config { line: n + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let value = value.trim();
            let bad = || err(format!("bad value `{value}` for {}", key.trim()));
            match key.trim() {
                "compiler_cmd" => cfg.compiler_cmd = value.to_string(),
                "timeout_s" => cfg.timeout_s = value.parse().map_err(|_| bad())?,
                "compile_timeout_s" => cfg.compile_timeout_s = value.parse().map_err(|_| bad())?,
                "max_output_bytes" => cfg.max_output_bytes = value.parse().map_err(|_| bad())?,
                "memory_limit_mb" => cfg.memory_limit_mb = value.parse().map_err(|_| bad())?,
                "jobs" => cfg.jobs = value.parse().map_err(|_| bad())?,
                "isolate_network" => cfg.isolate_network = value.parse().map_err(|_| bad())?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        if !(cfg.timeout_s > 0.0) {
            return Err(ExecError::Config {
                line: 0,
                msg: "timeout_s must be positive".into(),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExecError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Pass,
    Wrong,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRun {
    pub status: TestStatus,
    pub stdout: String,
    pub elapsed_s: f64,
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
    pub output_truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub compile_ok: bool,
    pub compiler_status: Option<i32>,
    pub diagnostics: String,
    pub tests: Vec<TestRun>,
    pub timeout_budget_s: f64,
}

impl ExecutionReport {
    pub fn all_passed(&self) -> bool {
        self.compile_ok && self.tests.iter().all(|t| t.status == TestStatus::Pass)
    }
}

/// Compile `source` and run it on every test. A failed compilation yields a
/// report with `compile_ok = false` and no test runs.
pub fn compile_and_run(
    source: &str,
    tests: &[TestCase],
    cfg: &ExecutorConfig,
) -> Result<ExecutionReport, ExecError> {
    let dir = tempfile::Builder::new().prefix("repairkit-").tempdir()?;
    fs::write(dir.path().join(SRC_NAME), source)?;

    let (compile_ok, compiler_status, diagnostics) = compile(dir.path(), cfg)?;
    let mut report = ExecutionReport {
        compile_ok,
        compiler_status,
        diagnostics,
        tests: Vec::new(),
        timeout_budget_s: cfg.timeout_s,
    };
    if !compile_ok {
        return Ok(report);
    }

    let binary = dir.path().join(BIN_NAME);
    let run = |t: &TestCase| run_test(&binary, dir.path(), t, cfg);
    let jobs = cfg.jobs.clamp(1, tests.len().max(1));
    let runs: Vec<Result<TestRun, ExecError>> = if jobs == 1 {
        tests.iter().map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ExecError::Sandbox(io::Error::other(e)))?
            .install(|| tests.par_iter().map(run).collect())
    };
    report.tests = runs.into_iter().collect::<Result<_, _>>()?;
    Ok(report)
}

fn compile(dir: &Path, cfg: &ExecutorConfig) -> Result<(bool, Option<i32>, String), ExecError> {
    let args: Vec<String> = cfg
        .compiler_cmd
        .split_whitespace()
        .map(|a| a.replace("{src}", SRC_NAME).replace("{out}", BIN_NAME))
        .collect();
    let (program, rest) = args.split_first().ok_or(ExecError::EmptyCompilerCommand)?;
    let mut cmd = Command::new(program);
    cmd.args(rest)
        .current_dir(dir)
        .env_clear()
        .env("PATH", std::env::var_os("PATH").unwrap_or_default())
        .env("LC_ALL", "C")
        .env("TMPDIR", dir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(ExecError::CompilerMissing(program.clone()))
        }
        Err(e) => return Err(e.into()),
    };
    let outcome = supervise(
        child,
        None,
        64 * 1024,
        Duration::from_secs_f64(cfg.compile_timeout_s),
        true,
    )?;
    let mut diagnostics = scrub_temp_names(
        &String::from_utf8_lossy(&outcome.stderr).replace(&*dir.to_string_lossy(), "."),
    );
    if outcome.timed_out {
        diagnostics.push_str("\ncompilation timed out");
    }
    let ok = !outcome.timed_out && outcome.status.is_some_and(|s| s.success());
    Ok((ok, outcome.status.and_then(|s| s.code()), diagnostics))
}

/// Replace compiler scratch object names (`ccAbC123.o`) so diagnostics do
/// not vary between runs.
fn scrub_temp_names(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find("cc") {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 2..];
        let stem = tail
            .find(|c: char| !c.is_ascii_alphanumeric())
            .unwrap_or(tail.len());
        let prev_ok = i == 0 || rest[..i].ends_with('/') || rest[..i].ends_with(' ');
        if prev_ok && stem >= 6 && tail[stem..].starts_with(".o") {
            out.push_str("cc.o");
            rest = &tail[stem + 2..];
        } else {
            out.push_str("cc");
            rest = tail;
        }
    }
    out.push_str(rest);
    out
}

fn run_test(
    binary: &Path,
    dir: &Path,
    test: &TestCase,
    cfg: &ExecutorConfig,
) -> Result<TestRun, ExecError> {
    let mut cmd = Command::new(binary);
    cmd.current_dir(dir)
        .env_clear()
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .process_group(0);
    let cpu = cfg.timeout_s.ceil() as u64 + 1;
    let mem = cfg.memory_limit_mb.saturating_mul(1 << 20);
    let fsize = cfg.max_output_bytes as u64;
    let isolate = cfg.isolate_network;
    // SAFETY: the closure only calls async-signal-safe libc functions.
    unsafe {
        cmd.pre_exec(move || {
            set_limit(libc::RLIMIT_CPU, cpu)?;
            set_limit(libc::RLIMIT_AS, mem)?;
            set_limit(libc::RLIMIT_FSIZE, fsize)?;
            set_limit(libc::RLIMIT_CORE, 0)?;
            if isolate {
                // Best effort: unprivileged callers cannot create namespaces.
                libc::unshare(libc::CLONE_NEWNET);
            }
            Ok(())
        });
    }
    let child = cmd.spawn().map_err(ExecError::Sandbox)?;
    let started = Instant::now();
    let outcome = supervise(
        child,
        Some(test.input.as_bytes().to_vec()),
        cfg.max_output_bytes,
        Duration::from_secs_f64(cfg.timeout_s),
        false,
    )?;
    let elapsed_s = started.elapsed().as_secs_f64();
    let status = if outcome.timed_out {
        TestStatus::Timeout
    } else if !outcome.truncated && outcome.stdout == test.expected.as_bytes() {
        TestStatus::Pass
    } else {
        TestStatus::Wrong
    };
    Ok(TestRun {
        status,
        stdout: String::from_utf8_lossy(&outcome.stdout).into_owned(),
        elapsed_s,
        exit_code: outcome.status.and_then(|s| s.code()),
        signal: outcome.status.and_then(|s| s.signal()),
        output_truncated: outcome.truncated,
    })
}

/// Lower a resource limit to `value` (never raises an existing hard limit).
fn set_limit(resource: libc::__rlimit_resource_t, value: u64) -> io::Result<()> {
    let mut lim = libc::rlimit {
        rlim_cur: 0,
        rlim_max: 0,
    };
    // SAFETY: plain syscalls on a stack value.
    unsafe {
        if libc::getrlimit(resource, &mut lim) != 0 {
            return Err(io::Error::last_os_error());
        }
        let v = value.min(lim.rlim_max);
        lim.rlim_cur = v;
        lim.rlim_max = v;
        if libc::setrlimit(resource, &lim) != 0 {
            return Err(io::Error::last_os_error());
        }
    }
    Ok(())
}

struct Outcome {
    status: Option<ExitStatus>,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
    timed_out: bool,
    truncated: bool,
}

fn kill_group(pid: u32) {
    // SAFETY: signalling a process group we created.
    unsafe {
        libc::kill(-(pid as i32), libc::SIGKILL);
    }
}

/// Feed stdin, capture output up to `cap` bytes and enforce the deadline.
fn supervise(
    mut child: Child,
    input: Option<Vec<u8>>,
    cap: usize,
    timeout: Duration,
    want_stderr: bool,
) -> Result<Outcome, ExecError> {
    let pid = child.id();
    let overflow = Arc::new(AtomicBool::new(false));

    let writer = child.stdin.take().map(|mut stdin| {
        let input = input.unwrap_or_default();
        thread::spawn(move || {
            // The program may exit without reading its input.
            let _ = stdin.write_all(&input);
        })
    });
    let reader = child.stdout.take().map(|out| {
        let overflow = Arc::clone(&overflow);
        thread::spawn(move || capture(out, cap, pid, &overflow))
    });
    let err_reader = child.stderr.take().filter(|_| want_stderr).map(|err| {
        let overflow = Arc::new(AtomicBool::new(false));
        thread::spawn(move || capture(err, cap, pid, &overflow))
    });

    let deadline = Instant::now() + timeout;
    let mut timed_out = false;
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break Some(s);
        }
        if Instant::now() >= deadline {
            timed_out = true;
            kill_group(pid);
            break child.wait().ok();
        }
        thread::sleep(POLL);
    };
    // Grandchildren may still hold the pipes open.
    kill_group(pid);

    if let Some(w) = writer {
        let _ = w.join();
    }
    let stdout = reader
        .map(|r| r.join().unwrap_or_default())
        .unwrap_or_default();
    let stderr = err_reader
        .map(|r| r.join().unwrap_or_default())
        .unwrap_or_default();
    Ok(Outcome {
        status,
        stdout,
        stderr,
        timed_out,
        truncated: overflow.load(Ordering::SeqCst),
    })
}

fn capture(mut src: impl Read, cap: usize, pid: u32, overflow: &AtomicBool) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 8192];
    loop {
        match src.read(&mut chunk) {
            Ok(0) | Err(_) => break,
            Ok(n) => {
                let room = cap.saturating_sub(buf.len());
                buf.extend_from_slice(&chunk[..n.min(room)]);
                if n > room {
                    overflow.store(true, Ordering::SeqCst);
                    kill_group(pid);
                    break;
                }
            }
        }
    }
    buf
}

/// Whether the configured compiler can be launched at all.
pub fn compiler_available(cfg: &ExecutorConfig) -> bool {
    cfg.compiler_cmd.split_whitespace().next().is_some_and(|p| {
        Command::new(p)
            .arg("--version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scratch_object_names_scrubbed() {
        assert_eq!(
            scrub_temp_names("/usr/bin/ld: ./ccXy12Ab.o: in function `main':"),
            "/usr/bin/ld: ./cc.o: in function `main':"
        );
        assert_eq!(scrub_temp_names("accept cc foo.o"), "accept cc foo.o");
    }

    #[test]
    fn parses_config() {
        let cfg = ExecutorConfig::parse(
            "# judge\ncompiler_cmd = gcc -o {out} {src}\ntimeout_s = 1.5\nmax_output_bytes=100\n",
        )
        .unwrap();
        assert_eq!(cfg.compiler_cmd, "gcc -o {out} {src}");
        assert_eq!(cfg.timeout_s, 1.5);
        assert_eq!(cfg.max_output_bytes, 100);
        assert_eq!(cfg.jobs, 1);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExecutorConfig::parse("colour = blue").is_err());
        assert!(ExecutorConfig::parse("timeout_s = soon").is_err());
        assert!(ExecutorConfig::parse("timeout_s = 0").is_err());
        assert!(ExecutorConfig::parse("just words").is_err());
    }

    #[test]
    fn missing_compiler() {
        let cfg = ExecutorConfig {
            compiler_cmd: "definitely-not-a-compiler-xyz {src}".into(),
            ..ExecutorConfig::default()
        };
        assert!(matches!(
            compile_and_run("int main(){}", &[], &cfg),
            Err(ExecError::CompilerMissing(_))
        ));
    }
}
