//! Word-level vocabulary with byte fallback for the mock backends.
//!
//! Text is pre-split into identifier/number runs, whitespace runs and C
//! punctuators. Known pieces map to one token each; anything else falls back
//! to one token per byte, so encoding is lossless for every input.

use std::collections::HashMap;
use std::sync::Arc;

use crate::code_model::lexer::MULTI_PUNCT;
use crate::decode::{TokenClass, TokenId};

pub const EOS: TokenId = 0;
const BYTE_BASE: TokenId = 1;

#[derive(Debug, Clone)]
pub struct Vocab {
    pieces: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, TokenId>,
    classes: Arc<Vec<TokenClass>>,
}

impl Default for Vocab {
    fn default() -> Self {
        let mut pieces = vec![Vec::new()];
        pieces.extend((0..=255u8).map(|b| vec![b]));
        let mut v = Vocab {
            pieces,
            index: HashMap::new(),
            classes: Arc::new(Vec::new()),
        };
        v.rebuild_classes();
        v
    }
}

impl Vocab {
    /// Vocabulary containing every piece of `texts`, in first-seen order.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Vocab::default();
        for text in texts {
            for piece in pre_split(text) {
                v.add_piece(piece.as_bytes());
            }
        }
        v.rebuild_classes();
        v
    }

    fn add_piece(&mut self, piece: &[u8]) {
        if piece.len() <= 1 || self.index.contains_key(piece) {
            return;
        }
        let id = self.pieces.len() as TokenId;
        self.pieces.push(piece.to_vec());
        self.index.insert(piece.to_vec(), id);
    }

    fn rebuild_classes(&mut self) {
        let classes = self.pieces.iter().map(|p| classify_bytes(p)).collect();
        self.classes = Arc::new(classes);
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        for piece in pre_split(text) {
            let bytes = piece.as_bytes();
            if bytes.len() > 1 {
                if let Some(&id) = self.index.get(bytes) {
                    out.push(id);
                    continue;
                }
            }
            out.extend(bytes.iter().map(|&b| BYTE_BASE + b as TokenId));
        }
        out
    }

    /// Concatenated bytes of `tokens`; EOS renders as nothing.
    pub fn decode_bytes(&self, tokens: &[TokenId]) -> Vec<u8> {
        let mut out = Vec::new();
        for &t in tokens {
            if let Some(p) = self.pieces.get(t as usize) {
                out.extend_from_slice(p);
            }
        }
        out
    }

    pub fn decode(&self, tokens: &[TokenId]) -> String {
        String::from_utf8_lossy(&self.decode_bytes(tokens)).into_owned()
    }

    pub fn piece(&self, t: TokenId) -> Option<&[u8]> {
        self.pieces.get(t as usize).map(Vec::as_slice)
    }

    pub fn class(&self, t: TokenId) -> TokenClass {
        self.classes.get(t as usize).copied().unwrap_or_default()
    }

    /// A cheap, shareable token classifier for [`crate::decode::DraftSource`].
    pub fn classifier(&self) -> impl Fn(TokenId) -> TokenClass + Send + Sync + 'static {
        let classes = Arc::clone(&self.classes);
        move |t| classes.get(t as usize).copied().unwrap_or_default()
    }
}

fn classify_bytes(p: &[u8]) -> TokenClass {
    let blank = !p.is_empty() && p.iter().all(u8::is_ascii_whitespace);
    let boundary = p.contains(&b'\n') || matches!(p, b";" | b"{" | b"}");
    TokenClass { boundary, blank }
}

/// Split text into vocabulary pieces: word runs, whitespace runs, C
/// punctuators (longest match) and single other characters.
pub fn pre_split(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let end = if b.is_ascii_alphanumeric() || b == b'_' {
            run_end(bytes, i, |c| c.is_ascii_alphanumeric() || c == b'_')
        } else if b == b'\n' {
            // A newline carries the indentation that follows it.
            run_end(bytes, i + 1, |c| c == b' ' || c == b'\t')
        } else if b.is_ascii_whitespace() {
            run_end(bytes, i, |c| c.is_ascii_whitespace() && c != b'\n')
        } else if let Some(p) = MULTI_PUNCT
            .iter()
            .find(|p| bytes[i..].starts_with(p.as_bytes()))
        {
            i + p.len()
        } else {
            i + text[i..].chars().next().map_or(1, char::len_utf8)
        };
        out.push(&text[i..end]);
        i = end;
    }
    out
}

fn run_end(bytes: &[u8], from: usize, pred: impl Fn(u8) -> bool) -> usize {
    bytes[from..]
        .iter()
        .position(|&c| !pred(c))
        .map_or(bytes.len(), |p| from + p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pieces() {
        assert_eq!(
            pre_split("if (a<=b)\n    x += 1;"),
            vec!["if", " ", "(", "a", "<=", "b", ")", "\n    ", "x", " ", "+=", " ", "1", ";"]
        );
    }

    #[test]
    fn round_trip_with_unknown_text() {
        let v = Vocab::from_texts(["int x = 1;"]);
        for s in ["int x = 1;", "float y = 2.5; // été\n", ""] {
            assert_eq!(v.decode(&v.encode(s)), s);
        }
    }

    #[test]
    fn known_pieces_are_single_tokens() {
        let v = Vocab::from_texts(["return total;"]);
        assert_eq!(v.encode("return total;").len(), 4);
        assert_eq!(v.encode("returns").len(), 7);
    }

    #[test]
    fn classes() {
        let v = Vocab::from_texts(["a;\n  b"]);
        let toks = v.encode("a;\n  b");
        let c: Vec<_> = toks.iter().map(|&t| v.class(t)).collect();
        assert!(!c[0].boundary && !c[0].blank);
        assert!(c[1].boundary && !c[1].blank);
        assert!(c[2].boundary && c[2].blank);
        assert_eq!(v.class(EOS), TokenClass::default());
    }
}
