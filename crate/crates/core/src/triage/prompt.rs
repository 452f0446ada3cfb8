//! Multi-source repair prompt.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BugType, TestCase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleIo {
    #[serde(rename = "in")]
    pub input: String,
    pub out: String,
}

/// Problem metadata as stored next to a problem's submissions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub problem_id: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub io_format: Option<String>,
    #[serde(default)]
    pub example_ios: Vec<ExampleIo>,
    #[serde(default)]
    pub tests: Vec<TestCase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub problem_id: String,
    pub problem_description: Option<String>,
    pub io_format: Option<String>,
    pub example_ios: Vec<ExampleIo>,
    pub bug_type: Option<BugType>,
    pub buggy_code: String,
    pub rendered: String,
}

const NA: &str = "N/A";

/// Render the five prompt sections in fixed order. Examples whose input is
/// also a graded test input are left out; empty sections read "N/A".
pub fn build_prompt(meta: &ProblemMeta, buggy: &str, bug_type: Option<BugType>) -> PromptRecord {
    let example_ios: Vec<ExampleIo> = meta
        .example_ios
        .iter()
        .filter(|ex| !meta.tests.iter().any(|t| t.input == ex.input))
        .cloned()
        .collect();

    let mut r = String::new();
    section(
        &mut r,
        "Problem Description",
        present(&meta.description).unwrap_or(NA),
    );
    section(&mut r, "I/O Format", present(&meta.io_format).unwrap_or(NA));

    r.push_str("### Example IOs\n");
    if example_ios.is_empty() {
        r.push_str(NA);
        r.push('\n');
    }
    for (i, ex) in example_ios.iter().enumerate() {
        let _ = write!(
            r,
            "Example {}\nInput:\n{}\nOutput:\n{}\n",
            i + 1,
            ex.input.trim_end_matches('\n'),
            ex.out.trim_end_matches('\n')
        );
    }
    r.push('\n');

    let bug = bug_type.map_or_else(|| NA.to_string(), |b| format!("{b} ({})", b.describe()));
    section(&mut r, "Bug Type", &bug);

    r.push_str("### Buggy Code\n```c\n");
    r.push_str(buggy);
    if !buggy.ends_with('\n') {
        r.push('\n');
    }
    r.push_str("```\n");

    PromptRecord {
        problem_id: meta.problem_id.clone(),
        problem_description: meta.description.clone(),
        io_format: meta.io_format.clone(),
        example_ios,
        bug_type,
        buggy_code: buggy.to_string(),
        rendered: r,
    }
}

fn present(s: &Option<String>) -> Option<&str> {
    s.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

fn section(out: &mut String, title: &str, body: &str) {
    let _ = write!(out, "### {title}\n{body}\n\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ProblemMeta {
        ProblemMeta {
            problem_id: "p1".into(),
            description: Some("Sum two numbers.".into()),
            io_format: Some("Two integers in, one out.".into()),
            example_ios: vec![
                ExampleIo {
                    input: "1 2\n".into(),
                    out: "3\n".into(),
                },
                ExampleIo {
                    input: "5 5\n".into(),
                    out: "10\n".into(),
                },
            ],
            tests: vec![TestCase {
                input: "5 5\n".into(),
                expected: "10\n".into(),
            }],
        }
    }

    #[test]
    fn sections_in_order() {
        let p = build_prompt(&meta(), "int main(){}", Some(BugType::SE));
        let titles = [
            "Problem Description",
            "I/O Format",
            "Example IOs",
            "Bug Type",
            "Buggy Code",
        ];
        let pos: Vec<usize> = titles
            .iter()
            .map(|t| p.rendered.find(&format!("### {t}\n")).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn test_inputs_are_not_examples() {
        let p = build_prompt(&meta(), "x", None);
        assert_eq!(p.example_ios.len(), 1);
        assert!(!p.rendered.contains("5 5"));
    }

    #[test]
    fn missing_sections_are_na() {
        let m = ProblemMeta {
            problem_id: "p".into(),
            ..Default::default()
        };
        let p = build_prompt(&m, "x", None);
        assert_eq!(p.rendered.matches("\nN/A\n").count(), 4);
        assert_eq!(p.rendered, build_prompt(&m, "x", None).rendered);
    }
}
