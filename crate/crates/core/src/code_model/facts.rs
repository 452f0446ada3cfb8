use std::collections::{BTreeMap, BTreeSet};

use super::{is_type_word, SourceUnit, StatementKind, TokenKind, ASSIGN_OPS, ROOT_BLOCK};

/// A function definition: the header statement and the statement holding the
/// closing brace of its body (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionDef {
    pub header: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeFacts {
    pub variables_by_statement: Vec<BTreeSet<String>>,
    pub calls_by_statement: Vec<BTreeSet<String>>,
    pub definitions: BTreeMap<String, FunctionDef>,
    /// Variable name to the statements that declare or assign it.
    pub assignments: BTreeMap<String, BTreeSet<usize>>,
}

impl CodeFacts {
    pub fn variables_in<'a>(
        &'a self,
        stmts: impl IntoIterator<Item = &'a usize>,
    ) -> BTreeSet<String> {
        stmts
            .into_iter()
            .flat_map(|&s| self.variables_by_statement[s].iter().cloned())
            .collect()
    }

    pub fn calls_in<'a>(&'a self, stmts: impl IntoIterator<Item = &'a usize>) -> BTreeSet<String> {
        stmts
            .into_iter()
            .flat_map(|&s| self.calls_by_statement[s].iter().cloned())
            .collect()
    }
}

struct Tok<'a> {
    kind: TokenKind,
    text: &'a str,
}

pub fn extract_facts(unit: &SourceUnit) -> CodeFacts {
    let n = unit.statements.len();
    let mut facts = CodeFacts {
        variables_by_statement: vec![BTreeSet::new(); n],
        calls_by_statement: vec![BTreeSet::new(); n],
        ..Default::default()
    };

    for (si, stmt) in unit.statements.iter().enumerate() {
        let toks: Vec<Tok> = stmt
            .tokens
            .iter()
            .map(|&t| Tok {
                kind: unit.tokens[t].kind,
                text: unit.token_text(t),
            })
            .collect();
        let assigned = if stmt.kind == StatementKind::Preprocessor {
            preprocessor_facts(
                &toks,
                &mut facts.variables_by_statement[si],
                &mut facts.calls_by_statement[si],
            )
        } else {
            statement_facts(
                &toks,
                stmt.kind,
                &mut facts.variables_by_statement[si],
                &mut facts.calls_by_statement[si],
            )
        };
        for name in assigned {
            facts.assignments.entry(name).or_default().insert(si);
        }
    }

    // Function definitions: a root-level header ending in `)` followed by `{`.
    for si in 0..n {
        let s = &unit.statements[si];
        if s.block_id != ROOT_BLOCK
            || !matches!(
                s.kind,
                StatementKind::Declaration | StatementKind::Other | StatementKind::Call
            )
            || si + 1 >= n
            || unit.statement_text(si + 1) != "{"
        {
            continue;
        }
        let texts = unit.statement_token_texts(si);
        if texts.last() != Some(&")") {
            continue;
        }
        let Some(open) = texts.iter().position(|&t| t == "(") else {
            continue;
        };
        if open == 0 || unit.tokens[s.tokens[open - 1]].kind != TokenKind::Ident {
            continue;
        }
        let name = texts[open - 1].to_string();
        let body_block = unit.statements[si + 1].block_id;
        let end = (si + 2..n)
            .find(|&k| unit.statement_text(k) == "}" && unit.statements[k].block_id == body_block)
            .unwrap_or(n - 1);
        // The name is a definition, not a call.
        facts.calls_by_statement[si].remove(&name);
        for p in parameter_names(&texts[open..]) {
            facts.variables_by_statement[si].insert(p.clone());
            facts.assignments.entry(p).or_default().insert(si);
        }
        facts
            .definitions
            .entry(name)
            .or_insert(FunctionDef { header: si, end });
    }
    facts
}

fn preprocessor_facts(
    toks: &[Tok],
    vars: &mut BTreeSet<String>,
    calls: &mut BTreeSet<String>,
) -> Vec<String> {
    let directive = toks.get(1).map(|t| t.text).unwrap_or("");
    if directive != "define" {
        return Vec::new();
    }
    let mut assigned = Vec::new();
    for (k, t) in toks.iter().enumerate().skip(2) {
        if t.kind != TokenKind::Ident {
            continue;
        }
        let is_call = toks.get(k + 1).is_some_and(|n| n.text == "(");
        if k == 2 {
            // The macro being defined.
            if !is_call {
                vars.insert(t.text.to_string());
                assigned.push(t.text.to_string());
            }
            continue;
        }
        if is_call {
            calls.insert(t.text.to_string());
        } else {
            vars.insert(t.text.to_string());
        }
    }
    assigned
}

fn statement_facts(
    toks: &[Tok],
    kind: StatementKind,
    vars: &mut BTreeSet<String>,
    calls: &mut BTreeSet<String>,
) -> Vec<String> {
    let n = toks.len();
    let mut assigned = Vec::new();

    let decl_type_name = kind == StatementKind::Declaration
        && n >= 2
        && toks[0].kind == TokenKind::Ident
        && !is_type_word(toks[0].text);

    for k in 0..n {
        let t = &toks[k];
        if t.kind != TokenKind::Ident || is_type_word(t.text) {
            continue;
        }
        if k > 0 && matches!(toks[k - 1].text, "." | "->") {
            continue;
        }
        if k == 0 && decl_type_name {
            continue;
        }
        if kind == StatementKind::Declaration
            && k >= 1
            && matches!(toks[k - 1].text, "struct" | "union" | "enum")
        {
            continue;
        }
        let followed_by_paren = toks.get(k + 1).is_some_and(|n| n.text == "(");
        if followed_by_paren {
            let declarator = kind == StatementKind::Declaration
                && k > 0
                && (toks[k - 1].kind == TokenKind::Ident
                    || toks[k - 1].kind == TokenKind::Keyword
                    || toks[k - 1].text == "*");
            if !declarator {
                calls.insert(t.text.to_string());
            }
            continue;
        }
        vars.insert(t.text.to_string());
    }

    if kind == StatementKind::Declaration {
        assigned.extend(declared_names(toks));
    }

    for k in 0..n {
        let text = toks[k].text;
        if ASSIGN_OPS.contains(&text) && k > 0 {
            if let Some(b) = lvalue_base(toks, k - 1) {
                assigned.push(b.to_string());
            }
        } else if text == "++" || text == "--" {
            let postfix = k > 0
                && (toks[k - 1].kind == TokenKind::Ident || matches!(toks[k - 1].text, "]" | ")"));
            if postfix {
                if let Some(b) = lvalue_base(toks, k - 1) {
                    assigned.push(b.to_string());
                }
            } else if let Some(next) = toks.get(k + 1) {
                if next.kind == TokenKind::Ident {
                    assigned.push(next.text.to_string());
                } else if next.text == "*" {
                    if let Some(nn) = toks.get(k + 2).filter(|t| t.kind == TokenKind::Ident) {
                        assigned.push(nn.text.to_string());
                    }
                }
            }
        } else if text == "&"
            && k > 0
            && matches!(toks[k - 1].text, "(" | ",")
            && toks.get(k + 1).is_some_and(|t| t.kind == TokenKind::Ident)
        {
            // Address passed to a call, e.g. `scanf("%d", &n)`.
            assigned.push(toks[k + 1].text.to_string());
        }
    }
    assigned.retain(|a| vars.contains(a));
    assigned
}

/// Walk left from `k` over subscripts and member accesses to the root
/// identifier of an lvalue.
fn lvalue_base<'a>(toks: &[Tok<'a>], mut k: usize) -> Option<&'a str> {
    loop {
        let t = &toks[k];
        match t.text {
            "]" | ")" => {
                let (open, close) = if t.text == "]" {
                    ("[", "]")
                } else {
                    ("(", ")")
                };
                let mut depth = 0i32;
                let mut j = k;
                loop {
                    if toks[j].text == close {
                        depth += 1;
                    } else if toks[j].text == open {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    if j == 0 {
                        return None;
                    }
                    j -= 1;
                }
                if t.text == ")" {
                    // `(*p) = ..` or `(p->x) = ..`: the base sits inside.
                    let inner = toks[j + 1..k].iter().find(|t| t.kind == TokenKind::Ident)?;
                    if j == 0 || !matches!(toks[j - 1].kind, TokenKind::Ident) {
                        return Some(inner.text);
                    }
                }
                if j == 0 {
                    return None;
                }
                k = j - 1;
            }
            _ if t.kind == TokenKind::Ident => {
                if k >= 2 && matches!(toks[k - 1].text, "." | "->") {
                    k -= 2;
                } else {
                    return Some(t.text);
                }
            }
            _ => return None,
        }
    }
}

/// Names introduced by a declaration statement (variables only; function
/// declarators are skipped).
fn declared_names(toks: &[Tok]) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut seg_start = 0;
    let mut segments = Vec::new();
    for (k, t) in toks.iter().enumerate() {
        match t.text {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," | ";" if depth == 0 => {
                segments.push(seg_start..k);
                seg_start = k + 1;
            }
            _ => {}
        }
    }
    if seg_start < toks.len() {
        segments.push(seg_start..toks.len());
    }
    for seg in segments {
        let mut depth = 0i32;
        let mut candidate: Option<usize> = None;
        for k in seg.clone() {
            let t = &toks[k];
            match t.text {
                "=" if depth == 0 => break,
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                _ if depth == 0 && t.kind == TokenKind::Ident && !is_type_word(t.text) => {
                    candidate = Some(k);
                }
                _ => {}
            }
        }
        if let Some(k) = candidate {
            let is_function = toks.get(k + 1).is_some_and(|n| n.text == "(");
            if !is_function {
                out.push(toks[k].text.to_string());
            }
        }
    }
    out
}

/// Parameter names of a function header, given the tokens from its `(`.
fn parameter_names(texts: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut last_ident: Option<&str> = None;
    for &t in texts {
        match t {
            "(" | "[" => depth += 1,
            ")" | "]" => {
                depth -= 1;
                if depth == 0 {
                    if let Some(n) = last_ident.take() {
                        out.push(n.to_string());
                    }
                    break;
                }
            }
            "," if depth == 1 => {
                if let Some(n) = last_ident.take() {
                    out.push(n.to_string());
                }
            }
            _ if depth == 1
                && t.chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && !is_type_word(t)
                && !super::lexer::is_keyword(t) =>
            {
                last_ident = Some(t);
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::SourceUnit;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn recursive_return_statement() {
        let u = SourceUnit::parse("return fibonacci(n - 1)+fibonacci(n - 2);");
        let f = extract_facts(&u);
        assert_eq!(f.variables_by_statement[0], set(&["n"]));
        assert_eq!(f.calls_by_statement[0], set(&["fibonacci"]));
    }

    #[test]
    fn single_assignment() {
        let u = SourceUnit::parse("x = 1;");
        let f = extract_facts(&u);
        assert_eq!(f.variables_by_statement[0], set(&["x"]));
        assert_eq!(f.assignments["x"], [0].into_iter().collect());
    }

    #[test]
    fn brace_has_no_facts() {
        let u = SourceUnit::parse("{");
        let f = extract_facts(&u);
        assert!(f.variables_by_statement[0].is_empty());
        assert!(f.calls_by_statement[0].is_empty());
        assert!(f.assignments.is_empty());
    }

    #[test]
    fn declarations_and_definitions() {
        let src = "int fibonacci(int n)\n{\n  int a, b = 2;\n  struct node *p = NULL;\n  if (n <= 1) return n;\n  return fibonacci(n - 1) + fibonacci(n - 2);\n}\nint main() { int n; scanf(\"%d\", &n); printf(\"%d\", fibonacci(n)); return 0; }";
        let u = SourceUnit::parse(src);
        let f = extract_facts(&u);
        let def = f.definitions["fibonacci"];
        assert_eq!(u.statement_text(def.header), "int fibonacci(int n)");
        assert_eq!(u.statement_text(def.end), "}");
        assert!(f.definitions.contains_key("main"));
        assert!(f.calls_by_statement[def.header].is_empty());
        for name in ["a", "b", "p", "n"] {
            assert!(f.assignments.contains_key(name), "{name}");
        }
        // `int n;` in main and `&n` in scanf both assign n.
        let n_assigners: Vec<&str> = f.assignments["n"]
            .iter()
            .map(|&s| u.statement_text(s))
            .collect();
        assert!(n_assigners.contains(&"int n;"));
        assert!(n_assigners.contains(&"scanf(\"%d\", &n);"));
        assert!(!f.variables_by_statement.iter().any(|v| v.contains("node")));
    }

    #[test]
    fn lvalue_roots() {
        let u = SourceUnit::parse("a[i] = 1; p->x.y += 2; *q = 3; (*r) = 4; ++k; m[j]--;");
        let f = extract_facts(&u);
        for name in ["a", "p", "q", "r", "k", "m"] {
            assert!(f.assignments.contains_key(name), "{name}");
        }
        assert!(!f.assignments.contains_key("i"));
        assert!(!f.assignments.contains_key("x"));
    }

    #[test]
    fn macros_are_calls_or_variables() {
        let u = SourceUnit::parse("#define MAX(a,b) ((a)>(b)?(a):(b))\nx = MAX(y, LIMIT);");
        let f = extract_facts(&u);
        assert!(f.calls_by_statement[1].contains("MAX"));
        assert!(f.variables_by_statement[1].contains("LIMIT"));
    }

    #[test]
    fn call_names_followed_by_paren_in_text() {
        let src = "int main() { printf (\"%d\", f(x)); g(h(1)); return k(2); }";
        let u = SourceUnit::parse(src);
        let f = extract_facts(&u);
        for (i, calls) in f.calls_by_statement.iter().enumerate() {
            let text = u.statement_text(i);
            for c in calls {
                let found = text
                    .match_indices(c.as_str())
                    .any(|(p, _)| text[p + c.len()..].trim_start().starts_with('('));
                assert!(found, "{c} in {text}");
            }
        }
    }
}
