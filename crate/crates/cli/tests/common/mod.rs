#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub const FIB_BUGGY: &str =
    "int fibonacci(int n) {\n  if (n <= 1) return n;\n  return fibonacci(n - 1);\n}\n";
pub const FIB_FIXED: &str =
    "int fibonacci(int n) {\n  if (n <= 1) return n;\n  return fibonacci(n - 1)+fibonacci(n - 2);\n}\n";

pub fn repairkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repairkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Run and require success.
pub fn ok(args: &[&str]) -> Output {
    let out = repairkit(args);
    assert!(
        out.status.success(),
        "repairkit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn archive_fixture() -> PathBuf {
    workspace().join("crates/core/tests/fixtures/archive")
}

pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

pub fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

pub fn assert_schema(schema: &str, instance: &Value) {
    let path = workspace().join("schemas").join(schema);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    if let Err(errors) = compiled.validate(instance) {
        let msgs: Vec<String> = errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect();
        panic!("schema violations: {msgs:#?}");
    };
}

pub fn compiler_available() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

/// Problem summing two integers, with three graded tests.
pub fn sum_problem(dir: &Path) -> String {
    write(
        dir,
        "sum.json",
        r#"{"problem_id":"sum","description":"Print the sum of two integers.","io_format":"Input: a b. Output: a+b.",
"example_ios":[{"in":"2 2\n","out":"4\n"}],
"tests":[{"in":"1 2\n","expected":"3\n"},{"in":"10 -4\n","expected":"6\n"},{"in":"0 0\n","expected":"0\n"}]}"#,
    )
}
