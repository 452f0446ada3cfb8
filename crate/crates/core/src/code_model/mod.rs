//! Statement segmentation and light static analysis for C sources.
//!
//! A [`SourceUnit`] holds the raw text, the ordered statement list and the
//! token stream. Statement boundaries are `;`, `{`, `}`, the end of a
//! preprocessor line and the closing parenthesis of a control header.
//! Anything that does not segment cleanly is re-segmented line by line and the
//! unit is marked `degraded`.

mod facts;
pub mod lexer;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use facts::{extract_facts, CodeFacts, FunctionDef};
pub use lexer::TokenKind;
use lexer::{at_line_start, directive_end, lex, Lexeme, MULTI_PUNCT};

pub type BlockId = usize;

/// Root block of every unit.
pub const ROOT_BLOCK: BlockId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    Declaration,
    Assignment,
    Call,
    Return,
    ControlHeader,
    Preprocessor,
    Brace,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub span: Span,
    pub kind: TokenKind,
    /// Owning statement; `None` for comments.
    pub statement: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub span: Span,
    pub kind: StatementKind,
    pub block_id: BlockId,
    /// Indices into [`SourceUnit::tokens`] of this statement's code tokens.
    pub tokens: Vec<usize>,
    /// Whitespace-insensitive rendering used for comparisons.
    pub normalized: String,
    /// A control header whose body follows (`if (..)`, `else`, `do`, ...).
    pub opens_body: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub parent: Option<BlockId>,
    /// Created for an unbraced control body.
    pub implicit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub text: String,
    pub statements: Vec<Statement>,
    pub tokens: Vec<Token>,
    pub blocks: Vec<Block>,
    /// Some region fell back to line-based segmentation.
    pub degraded: bool,
}

impl SourceUnit {
    pub fn parse(text: impl Into<String>) -> Self {
        let text = text.into();
        let lexemes = lex(&text);
        let code: Vec<Lexeme> = lexemes
            .iter()
            .copied()
            .filter(|l| l.kind != TokenKind::Comment)
            .collect();

        let (raw, degraded) = segment_raw(&text, &code);

        // Token stream in source order: code lexemes tagged with their
        // statement, comments untagged.
        let mut owner = vec![usize::MAX; code.len()];
        for (si, r) in raw.iter().enumerate() {
            for o in &mut owner[r.lexemes.clone()] {
                *o = si;
            }
        }
        let mut tokens = Vec::with_capacity(lexemes.len());
        let mut stmt_tokens: Vec<Vec<usize>> = vec![Vec::new(); raw.len()];
        let mut ci = 0;
        for l in &lexemes {
            let statement = if l.kind == TokenKind::Comment {
                None
            } else {
                let s = owner[ci];
                ci += 1;
                stmt_tokens[s].push(tokens.len());
                Some(s)
            };
            tokens.push(Token {
                span: Span::new(l.start, l.end),
                kind: l.kind,
                statement,
            });
        }

        let (blocks, block_ids) = assign_blocks(&text, &raw, &code);

        let statements = raw
            .into_iter()
            .zip(stmt_tokens)
            .zip(block_ids)
            .map(|((r, toks), block_id)| {
                let first = &code[r.lexemes.start];
                let last = &code[r.lexemes.end - 1];
                let normalized = normalize_tokens(toks.iter().map(|&t| {
                    (
                        tokens[t].kind,
                        &text[tokens[t].span.start..tokens[t].span.end],
                    )
                }));
                Statement {
                    span: Span::new(first.start, last.end),
                    kind: r.kind,
                    block_id,
                    tokens: toks,
                    normalized,
                    opens_body: r.opens_body,
                }
            })
            .collect();

        SourceUnit {
            text,
            statements,
            tokens,
            blocks,
            degraded,
        }
    }

    pub fn statement_text(&self, i: usize) -> &str {
        let s = &self.statements[i];
        &self.text[s.span.start..s.span.end]
    }

    pub fn token_text(&self, t: usize) -> &str {
        let s = self.tokens[t].span;
        &self.text[s.start..s.end]
    }

    /// Code token texts of statement `i`.
    pub fn statement_token_texts(&self, i: usize) -> Vec<&str> {
        self.statements[i]
            .tokens
            .iter()
            .map(|&t| self.token_text(t))
            .collect()
    }

    pub fn code_token_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.statement.is_some()).count()
    }

    pub fn line_count(&self) -> usize {
        self.text.lines().count()
    }

    /// Whether `inner` is `outer` or nested somewhere below it.
    pub fn block_is_within(&self, inner: BlockId, outer: BlockId) -> bool {
        let mut cur = Some(inner);
        while let Some(b) = cur {
            if b == outer {
                return true;
            }
            cur = self.blocks[b].parent;
        }
        false
    }
}

/// Statements sharing the innermost control-flow block of `stmt`, excluding
/// `stmt` itself.
pub fn same_block_statements(unit: &SourceUnit, stmt: usize) -> BTreeSet<usize> {
    let block = unit.statements[stmt].block_id;
    unit.statements
        .iter()
        .enumerate()
        .filter(|&(i, s)| i != stmt && s.block_id == block)
        .map(|(i, _)| i)
        .collect()
}

/// Canonical, whitespace-insensitive rendering of a token sequence. A space is
/// only kept where dropping it would merge two tokens.
pub fn normalize_tokens<'a>(tokens: impl IntoIterator<Item = (TokenKind, &'a str)>) -> String {
    let mut out = String::new();
    let mut prev: Option<(TokenKind, &str)> = None;
    for (kind, text) in tokens {
        if let Some((pk, pt)) = prev {
            if needs_space(pk, pt, kind, text) {
                out.push(' ');
            }
        }
        out.push_str(text);
        prev = Some((kind, text));
    }
    out
}

fn needs_space(pk: TokenKind, pt: &str, nk: TokenKind, nt: &str) -> bool {
    if pk.is_wordish() && nk.is_wordish() {
        return true;
    }
    if pk == TokenKind::Punct && nk == TokenKind::Punct {
        let (Some(a), Some(b)) = (pt.chars().last(), nt.chars().next()) else {
            return false;
        };
        let pair: String = [a, b].iter().collect();
        return MULTI_PUNCT.iter().any(|op| op.contains(pair.as_str()))
            || (a == '/' && (b == '/' || b == '*'));
    }
    // `1 .5` or `x .5`: a number starting with '.' would glue to the left.
    pk.is_wordish() && nk == TokenKind::Number && nt.starts_with('.')
}

#[derive(Debug, Clone)]
struct RawStatement {
    lexemes: Range<usize>,
    kind: StatementKind,
    opens_body: bool,
    suspicious: bool,
}

fn txt<'a>(src: &'a str, l: &Lexeme) -> &'a str {
    &src[l.start..l.end]
}

const HEADER_KEYWORDS: &[&str] = &["if", "for", "while", "switch"];

fn segment_raw(src: &str, code: &[Lexeme]) -> (Vec<RawStatement>, bool) {
    let mut out: Vec<RawStatement> = Vec::new();
    let n = code.len();
    let mut i = 0;
    let t = |k: usize| txt(src, &code[k]);

    let push =
        |out: &mut Vec<RawStatement>, range: Range<usize>, opens_body: bool, suspicious: bool| {
            if range.is_empty() {
                return;
            }
            let kind = classify(src, &code[range.clone()], opens_body);
            let suspicious = suspicious || code[range.clone()].iter().any(|l| l.error);
            out.push(RawStatement {
                lexemes: range,
                kind,
                opens_body,
                suspicious,
            });
        };

    while i < n {
        let start = i;
        let first = t(i);

        if first == "#" && at_line_start(src, code[i].start) {
            let end_byte = directive_end(src, code[i].start);
            let mut j = i + 1;
            while j < n && code[j].start < end_byte {
                j += 1;
            }
            push(&mut out, i..j, false, false);
            i = j;
            continue;
        }
        if first == "{" || first == "}" || first == ";" {
            push(&mut out, i..i + 1, false, false);
            i += 1;
            continue;
        }
        if first == "do" {
            push(&mut out, i..i + 1, true, false);
            i += 1;
            continue;
        }
        if first == "else" && (i + 1 >= n || t(i + 1) != "if") {
            push(&mut out, i..i + 1, true, false);
            i += 1;
            continue;
        }

        // Control header: keyword(s) followed by a balanced parenthesis group.
        let kw = if first == "else" { i + 1 } else { i };
        if HEADER_KEYWORDS.contains(&t(kw)) && kw + 1 < n && t(kw + 1) == "(" {
            let mut depth = 0i32;
            let mut j = kw + 1;
            let mut closed = false;
            while j < n {
                match t(j) {
                    "(" => depth += 1,
                    ")" => {
                        depth -= 1;
                        if depth == 0 {
                            closed = true;
                            j += 1;
                            break;
                        }
                    }
                    // A brace inside an open header means the parentheses
                    // never balanced.
                    "{" | "}" => break,
                    _ => {}
                }
                j += 1;
            }
            if closed {
                if j < n && t(j) == ";" {
                    push(&mut out, start..j + 1, false, false);
                    i = j + 1;
                } else {
                    push(&mut out, start..j, true, false);
                    i = j;
                }
            } else {
                push(&mut out, start..j, false, true);
                i = j;
            }
            continue;
        }

        // Labels: `case X:`, `default:`, `name:`.
        if first == "case" || first == "default" {
            let mut j = i + 1;
            let mut depth = 0i32;
            while j < n {
                match t(j) {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth -= 1,
                    ":" if depth == 0 => break,
                    ";" | "{" | "}" => break,
                    _ => {}
                }
                j += 1;
            }
            if j < n && t(j) == ":" {
                push(&mut out, i..j + 1, false, false);
                i = j + 1;
            } else {
                push(&mut out, i..j, false, true);
                i = j;
            }
            continue;
        }
        if code[i].kind == TokenKind::Ident && i + 1 < n && t(i + 1) == ":" {
            push(&mut out, i..i + 2, false, false);
            i += 2;
            continue;
        }

        // General statement.
        let mut paren = 0i32;
        let mut init = 0i32;
        let mut j = i;
        let mut suspicious = false;
        loop {
            if j >= n {
                push(
                    &mut out,
                    start..j,
                    false,
                    suspicious || paren != 0 || init != 0,
                );
                i = j;
                break;
            }
            let tok = t(j);
            match tok {
                "(" | "[" => paren += 1,
                ")" | "]" => {
                    paren -= 1;
                    if paren < 0 {
                        suspicious = true;
                        paren = 0;
                    }
                }
                ";" if paren == 0 && init == 0 => {
                    push(&mut out, start..j + 1, false, suspicious);
                    i = j + 1;
                    break;
                }
                "{" => {
                    if init > 0 || (j > start && t(j - 1) == "=") {
                        init += 1;
                    } else if paren > 0 {
                        // Unbalanced parenthesis before a block opener.
                        push(&mut out, start..j, false, true);
                        i = j;
                        break;
                    } else {
                        push(&mut out, start..j, false, suspicious);
                        i = j;
                        break;
                    }
                }
                "}" => {
                    if init > 0 {
                        init -= 1;
                    } else {
                        push(&mut out, start..j, false, suspicious || paren != 0);
                        i = j;
                        break;
                    }
                }
                _ => {}
            }
            j += 1;
        }
    }

    // Line-based fallback for anything that did not segment cleanly.
    let degraded = out.iter().any(|r| r.suspicious);
    if !degraded {
        return (out, false);
    }
    let mut fixed = Vec::with_capacity(out.len());
    for r in out {
        if !r.suspicious {
            fixed.push(r);
            continue;
        }
        let mut k = r.lexemes.start;
        while k < r.lexemes.end {
            let line = line_of(src, code[k].start);
            let mut e = k + 1;
            while e < r.lexemes.end && line_of(src, code[e].start) == line {
                e += 1;
            }
            fixed.push(RawStatement {
                lexemes: k..e,
                kind: StatementKind::Other,
                opens_body: false,
                suspicious: true,
            });
            k = e;
        }
    }
    (fixed, true)
}

fn line_of(src: &str, pos: usize) -> usize {
    src.as_bytes()[..pos]
        .iter()
        .filter(|&&c| c == b'\n')
        .count()
}

const TYPE_WORDS: &[&str] = &[
    "int",
    "char",
    "float",
    "double",
    "long",
    "short",
    "unsigned",
    "signed",
    "void",
    "struct",
    "union",
    "enum",
    "const",
    "static",
    "extern",
    "typedef",
    "register",
    "volatile",
    "auto",
    "inline",
    "_Bool",
    "bool",
    "size_t",
    "FILE",
    "uint8_t",
    "uint16_t",
    "uint32_t",
    "uint64_t",
    "int8_t",
    "int16_t",
    "int32_t",
    "int64_t",
    "ssize_t",
    "ptrdiff_t",
];

pub(crate) fn is_type_word(s: &str) -> bool {
    TYPE_WORDS.contains(&s)
}

pub(crate) const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=",
];

fn classify(src: &str, lx: &[Lexeme], opens_body: bool) -> StatementKind {
    let t = |k: usize| txt(src, &lx[k]);
    let first = t(0);
    if first == "#" {
        return StatementKind::Preprocessor;
    }
    if lx.len() == 1 && (first == "{" || first == "}") {
        return StatementKind::Brace;
    }
    if opens_body
        || matches!(
            first,
            "if" | "for" | "while" | "switch" | "else" | "do" | "case" | "default"
        )
    {
        return StatementKind::ControlHeader;
    }
    if first == "return" {
        return StatementKind::Return;
    }
    let starts_decl = is_type_word(first)
        || (lx.len() >= 2
            && lx[0].kind == TokenKind::Ident
            && (lx[1].kind == TokenKind::Ident
                || (t(1) == "*" && lx.len() >= 3 && lx[2].kind == TokenKind::Ident && {
                    // `a * b;` is an expression, `node * p;` / `node *p = x;` a declaration
                    lx.len() == 3 || matches!(t(3), ";" | "=" | "," | "[" | ")")
                })));
    if starts_decl {
        return StatementKind::Declaration;
    }
    let mut depth = 0i32;
    for k in 0..lx.len() {
        match t(k) {
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            "++" | "--" => return StatementKind::Assignment,
            op if depth == 0 && ASSIGN_OPS.contains(&op) => return StatementKind::Assignment,
            _ => {}
        }
    }
    if lx
        .windows(2)
        .any(|w| w[0].kind == TokenKind::Ident && txt(src, &w[1]) == "(")
    {
        return StatementKind::Call;
    }
    StatementKind::Other
}

fn assign_blocks(src: &str, raw: &[RawStatement], code: &[Lexeme]) -> (Vec<Block>, Vec<BlockId>) {
    let mut blocks = vec![Block {
        parent: None,
        implicit: false,
    }];
    let mut stack: Vec<BlockId> = vec![ROOT_BLOCK];
    let mut pending_header = false;
    let mut ids = Vec::with_capacity(raw.len());

    fn close_implicit(stack: &mut Vec<BlockId>, blocks: &[Block]) {
        while stack.len() > 1 && blocks[*stack.last().unwrap()].implicit {
            stack.pop();
        }
    }

    for r in raw {
        let is_brace = r.kind == StatementKind::Brace;
        let first = txt(src, &code[r.lexemes.start]);
        if is_brace && first == "{" {
            pending_header = false;
            let parent = *stack.last().unwrap();
            ids.push(parent);
            blocks.push(Block {
                parent: Some(parent),
                implicit: false,
            });
            stack.push(blocks.len() - 1);
        } else if is_brace && first == "}" {
            pending_header = false;
            close_implicit(&mut stack, &blocks);
            if stack.len() > 1 {
                stack.pop();
            }
            ids.push(*stack.last().unwrap());
            close_implicit(&mut stack, &blocks);
        } else {
            if pending_header {
                let parent = *stack.last().unwrap();
                blocks.push(Block {
                    parent: Some(parent),
                    implicit: true,
                });
                stack.push(blocks.len() - 1);
                pending_header = false;
            }
            ids.push(*stack.last().unwrap());
            if r.opens_body {
                pending_header = true;
            } else {
                close_implicit(&mut stack, &blocks);
            }
        }
    }
    (blocks, ids)
}
