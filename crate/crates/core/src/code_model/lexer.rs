//! A forgiving C lexer.
//!
//! Whitespace is skipped. Comments are kept as their own lexemes so the
//! segmenter can treat them as trivia while downstream consumers still see
//! them. Malformed input (unterminated literals, stray bytes) never aborts:
//! the offending lexeme is emitted with `error = true`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Ident,
    Keyword,
    Number,
    Str,
    Char,
    Punct,
    Comment,
    Unknown,
}

impl TokenKind {
    pub fn is_wordish(self) -> bool {
        matches!(
            self,
            TokenKind::Ident | TokenKind::Keyword | TokenKind::Number
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lexeme {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    pub error: bool,
}

pub const KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "_Complex",
    "_Imaginary",
];

/// Longest-first list of multi-character punctuators.
pub const MULTI_PUNCT: &[&str] = &[
    ">>=", "<<=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##",
];

const SINGLE_PUNCT: &[u8] = b"{}[]()<>;:,.?!~+-*/%&|^=#\\";

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn lex(src: &str) -> Vec<Lexeme> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let (kind, end, error) = if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            let end = memchr_newline(bytes, i);
            (TokenKind::Comment, end, false)
        } else if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
            match find_sub(bytes, i + 2, b"*/") {
                Some(p) => (TokenKind::Comment, p + 2, false),
                None => (TokenKind::Comment, bytes.len(), true),
            }
        } else if b == b'"' || b == b'\'' {
            let (end, error) = scan_quoted(bytes, i, b);
            let kind = if b == b'"' {
                TokenKind::Str
            } else {
                TokenKind::Char
            };
            (kind, end, error)
        } else if b.is_ascii_alphabetic() || b == b'_' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let kind = if is_keyword(&src[i..j]) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            (kind, j, false)
        } else if b.is_ascii_digit()
            || (b == b'.' && bytes.get(i + 1).is_some_and(|c| c.is_ascii_digit()))
        {
            let mut j = i + 1;
            while j < bytes.len() {
                let c = bytes[j];
                if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' {
                    j += 1;
                } else if (c == b'+' || c == b'-')
                    && matches!(bytes[j - 1], b'e' | b'E' | b'p' | b'P')
                {
                    j += 1;
                } else {
                    break;
                }
            }
            (TokenKind::Number, j, false)
        } else if let Some(p) = MULTI_PUNCT
            .iter()
            .find(|p| bytes[i..].starts_with(p.as_bytes()))
        {
            (TokenKind::Punct, i + p.len(), false)
        } else if SINGLE_PUNCT.contains(&b) {
            (TokenKind::Punct, i + 1, false)
        } else {
            // Stray byte or non-ASCII character; consume the whole UTF-8 scalar.
            let width = src[i..].chars().next().map_or(1, char::len_utf8);
            (TokenKind::Unknown, i + width, true)
        };
        out.push(Lexeme {
            kind,
            start,
            end,
            error,
        });
        i = end;
    }
    out
}

fn memchr_newline(bytes: &[u8], from: usize) -> usize {
    bytes[from..]
        .iter()
        .position(|&c| c == b'\n')
        .map_or(bytes.len(), |p| from + p)
}

fn find_sub(bytes: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from > bytes.len() {
        return None;
    }
    bytes[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| from + p)
}

fn scan_quoted(bytes: &[u8], start: usize, quote: u8) -> (usize, bool) {
    let mut j = start + 1;
    while j < bytes.len() {
        match bytes[j] {
            b'\\' => j += 2,
            b'\n' => return (j, true),
            c if c == quote => return (j + 1, false),
            _ => j += 1,
        }
    }
    (bytes.len(), true)
}

/// End byte of a preprocessor directive starting at `hash`, honouring
/// backslash line continuations. The newline itself is excluded.
pub fn directive_end(src: &str, hash: usize) -> usize {
    let bytes = src.as_bytes();
    let mut j = hash;
    loop {
        let nl = memchr_newline(bytes, j);
        if nl >= bytes.len() {
            return bytes.len();
        }
        let mut k = nl;
        while k > hash && (bytes[k - 1] == b'\r' || bytes[k - 1] == b' ' || bytes[k - 1] == b'\t') {
            k -= 1;
        }
        if k > hash && bytes[k - 1] == b'\\' {
            j = nl + 1;
        } else {
            let mut end = nl;
            if end > hash && bytes[end - 1] == b'\r' {
                end -= 1;
            }
            return end;
        }
    }
}

/// True when only spaces/tabs separate `pos` from the previous newline.
pub fn at_line_start(src: &str, pos: usize) -> bool {
    src.as_bytes()[..pos]
        .iter()
        .rev()
        .take_while(|&&c| c != b'\n')
        .all(|&c| c == b' ' || c == b'\t' || c == b'\r')
}
