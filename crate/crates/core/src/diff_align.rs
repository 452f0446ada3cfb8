//! Statement-level alignment of buggy/fixed program pairs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::code_model::{extract_facts, CodeFacts, SourceUnit};

/// Edit distance between two sequences (insert, delete and substitute all
/// cost 1).
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character-level edit distance of two strings.
pub fn char_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// Edit distance over the sequences of trimmed lines.
pub fn line_edit_distance(buggy: &str, fixed: &str) -> usize {
    let a: Vec<&str> = buggy.lines().map(str::trim).collect();
    let b: Vec<&str> = fixed.lines().map(str::trim).collect();
    levenshtein(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOp {
    Match,
    Replace,
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedPair {
    pub buggy: Option<usize>,
    pub fixed: Option<usize>,
    pub op: EditOp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDiff {
    pub pairs: Vec<AlignedPair>,
    /// Fixed-side statements touched by a replace or insert.
    pub y_m: BTreeSet<usize>,
    /// Variables used in `y_m`.
    pub v_m: BTreeSet<String>,
    /// Functions called in `y_m`.
    pub f_m: BTreeSet<String>,
    /// Fixed-side neighbours of buggy statements that were deleted outright.
    pub deletion_anchors: BTreeSet<usize>,
    /// Total alignment cost.
    pub cost: f64,
    /// Facts of the fixed unit, reused by mask expansion.
    pub fixed_facts: CodeFacts,
}

impl AlignedDiff {
    pub fn is_identity(&self) -> bool {
        self.pairs.iter().all(|p| p.op == EditOp::Match)
    }

    /// Number of non-match operations.
    pub fn edit_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.op != EditOp::Match).count()
    }
}

/// Substitution cost between two normalized statements: 0 when equal,
/// otherwise character distance divided by the longer length.
pub fn substitution_cost(a: &str, b: &str) -> f64 {
    if a == b {
        return 0.0;
    }
    let d = char_levenshtein(a, b) as f64;
    let len = a.chars().count().max(b.chars().count()) as f64;
    d / len
}

/// Minimum-cost statement alignment. Insertions and deletions cost 1,
/// substitutions cost [`substitution_cost`] of the normalized texts.
pub fn align(buggy: &SourceUnit, fixed: &SourceUnit) -> AlignedDiff {
    let a: Vec<&str> = buggy
        .statements
        .iter()
        .map(|s| s.normalized.as_str())
        .collect();
    let b: Vec<&str> = fixed
        .statements
        .iter()
        .map(|s| s.normalized.as_str())
        .collect();
    let (n, m) = (a.len(), b.len());

    let mut dp = vec![vec![0.0f64; m + 1]; n + 1];
    for i in 1..=n {
        dp[i][0] = i as f64;
    }
    for j in 1..=m {
        dp[0][j] = j as f64;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = dp[i - 1][j - 1] + substitution_cost(a[i - 1], b[j - 1]);
            let del = dp[i - 1][j] + 1.0;
            let ins = dp[i][j - 1] + 1.0;
            dp[i][j] = diag.min(del).min(ins);
        }
    }

    // Backtrack preferring diagonal, then delete, then insert.
    let mut pairs = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let c = substitution_cost(a[i - 1], b[j - 1]);
            if dp[i][j] == dp[i - 1][j - 1] + c {
                let op = if c == 0.0 {
                    EditOp::Match
                } else {
                    EditOp::Replace
                };
                pairs.push(AlignedPair {
                    buggy: Some(i - 1),
                    fixed: Some(j - 1),
                    op,
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[i][j] == dp[i - 1][j] + 1.0 {
            pairs.push(AlignedPair {
                buggy: Some(i - 1),
                fixed: None,
                op: EditOp::Delete,
            });
            i -= 1;
        } else {
            pairs.push(AlignedPair {
                buggy: None,
                fixed: Some(j - 1),
                op: EditOp::Insert,
            });
            j -= 1;
        }
    }
    pairs.reverse();

    let y_m: BTreeSet<usize> = pairs
        .iter()
        .filter(|p| matches!(p.op, EditOp::Replace | EditOp::Insert))
        .filter_map(|p| p.fixed)
        .collect();

    let mut deletion_anchors = BTreeSet::new();
    if m > 0 {
        for (k, p) in pairs.iter().enumerate() {
            if p.op != EditOp::Delete {
                continue;
            }
            let next = pairs[k + 1..].iter().find_map(|q| q.fixed);
            let prev = pairs[..k].iter().rev().find_map(|q| q.fixed);
            if let Some(anchor) = next.or(prev) {
                deletion_anchors.insert(anchor);
            }
        }
    }

    let fixed_facts = extract_facts(fixed);
    let v_m = fixed_facts.variables_in(&y_m);
    let f_m = fixed_facts.calls_in(&y_m);

    AlignedDiff {
        pairs,
        y_m,
        v_m,
        f_m,
        deletion_anchors,
        cost: dp[n][m],
        fixed_facts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levenshtein_examples() {
        assert_eq!(char_levenshtein("abc", "abc"), 0);
        assert_eq!(char_levenshtein("abc", "abd"), 1);
        assert_eq!(char_levenshtein("kitten", "sitting"), 3);
        assert_eq!(char_levenshtein("", "abc"), 3);
    }

    #[test]
    fn led_examples() {
        let a = "int x;\nx = 1;\nreturn x;\n";
        assert_eq!(line_edit_distance(a, a), 0);
        assert_eq!(line_edit_distance(a, "int x;\nx = 2;\nreturn x;\n"), 1);
        // Trimming ignores indentation changes.
        assert_eq!(line_edit_distance(a, "  int x;\n\tx = 1;\nreturn x;"), 0);
    }

    #[test]
    fn led_eleven_changed_lines() {
        let a: String = (0..11).map(|i| format!("a{i};\n")).collect();
        let b: String = (0..11).map(|i| format!("b{i};\n")).collect();
        assert_eq!(line_edit_distance(&a, &b), 11);
    }

    #[test]
    fn identical_programs_align_to_matches() {
        let u = SourceUnit::parse("int main() {\n  int x = 1;\n  return x;\n}\n");
        let d = align(&u, &u);
        assert!(d.is_identity());
        assert!(d.y_m.is_empty());
        assert_eq!(d.cost, 0.0);
    }

    #[test]
    fn fibonacci_pair() {
        let buggy = SourceUnit::parse(
            "int fibonacci(int n) {\n  if (n <= 1) return n;\n  return fibonacci(n - 1);\n}\n",
        );
        let fixed = SourceUnit::parse(
            "int fibonacci(int n) {\n  if (n <= 1) return n;\n  return fibonacci(n - 1)+fibonacci(n - 2);\n}\n",
        );
        let d = align(&buggy, &fixed);
        let ym: Vec<&str> = d.y_m.iter().map(|&s| fixed.statement_text(s)).collect();
        assert_eq!(ym, vec!["return fibonacci(n - 1)+fibonacci(n - 2);"]);
        assert_eq!(d.v_m, ["n".to_string()].into_iter().collect());
        assert_eq!(d.f_m, ["fibonacci".to_string()].into_iter().collect());
    }

    #[test]
    fn whitespace_only_change_is_a_match() {
        let a = SourceUnit::parse("x=a+b;\ny = 2;");
        let b = SourceUnit::parse("x = a + b;\ny = 2;");
        assert!(align(&a, &b).is_identity());
    }

    #[test]
    fn pure_deletion_records_anchor() {
        let a = SourceUnit::parse("a = 1;\nprintf(\"debug\");\nb = 2;");
        let b = SourceUnit::parse("a = 1;\nb = 2;");
        let d = align(&a, &b);
        assert!(d.y_m.is_empty());
        assert_eq!(d.deletion_anchors, [1].into_iter().collect());
        assert!(!d.is_identity());
    }
}
