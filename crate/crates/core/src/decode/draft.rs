use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use super::TokenId;

/// How the draft logic sees a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenClass {
    /// Ends a statement (`;`, braces, newlines).
    pub boundary: bool,
    /// Carries no content for statement comparison.
    pub blank: bool,
}

type Classifier = Arc<dyn Fn(TokenId) -> TokenClass + Send + Sync>;

/// A run of tokens ending at a boundary token (or at end of input).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    /// Non-blank tokens, used as the whitespace-normalized statement text.
    pub key: Vec<TokenId>,
}

/// The buggy program as a token sequence with its statement map.
#[derive(Clone)]
pub struct DraftSource {
    pub tokens: Vec<TokenId>,
    pub segments: Vec<Segment>,
    classify: Classifier,
}

impl fmt::Debug for DraftSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DraftSource")
            .field("tokens", &self.tokens)
            .field("segments", &self.segments.len())
            .finish()
    }
}

impl DraftSource {
    pub fn new(
        tokens: Vec<TokenId>,
        classify: impl Fn(TokenId) -> TokenClass + Send + Sync + 'static,
    ) -> Self {
        let classify: Classifier = Arc::new(classify);
        let segments = segment(&tokens, &*classify, true);
        DraftSource {
            tokens,
            segments,
            classify,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn class(&self, t: TokenId) -> TokenClass {
        (self.classify)(t)
    }

    /// Index of the segment containing token position `pos`.
    pub fn segment_of(&self, pos: usize) -> Option<usize> {
        if pos >= self.tokens.len() {
            return None;
        }
        let i = self.segments.partition_point(|s| s.start <= pos);
        Some(i - 1)
    }
}

/// Split `tokens` after every boundary token. With `keep_tail`, trailing
/// tokens after the last boundary form a final segment.
pub(crate) fn segment(
    tokens: &[TokenId],
    classify: &dyn Fn(TokenId) -> TokenClass,
    keep_tail: bool,
) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut key = Vec::new();
    for (i, &t) in tokens.iter().enumerate() {
        let c = classify(t);
        if !c.blank {
            key.push(t);
        }
        if c.boundary {
            out.push(Segment {
                start,
                end: i + 1,
                key: std::mem::take(&mut key),
            });
            start = i + 1;
        }
    }
    if keep_tail && start < tokens.len() {
        out.push(Segment {
            start,
            end: tokens.len(),
            key,
        });
    }
    out
}

pub fn longest_matching_prefix(verified: &[TokenId], draft: &[TokenId]) -> usize {
    verified
        .iter()
        .zip(draft)
        .take_while(|(a, b)| a == b)
        .count()
}

/// Draft placement state carried between iterations of the decoder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Cursor {
    /// Statement-granular position in the draft source; never decreases.
    pub anchor: usize,
    /// Where the output last diverged from the draft source.
    pub hint: usize,
    /// Output prefix length already aligned with the draft source.
    pub synced: usize,
    /// The last verification pass rejected part of its draft.
    pub diverged: bool,
}

/// Pick the next draft: returns the range of `src.tokens` to propose and the
/// updated anchor.
///
/// The last complete statement of `output` is looked up among the source
/// statements starting at or after `anchor`; a hit moves the anchor past it.
/// When `output` ends inside a statement, the draft resumes right after the
/// place in the source where the output's most recent tokens occur.
pub fn draft_generate(
    src: &DraftSource,
    output: &[TokenId],
    anchor: usize,
) -> (Range<usize>, usize) {
    let cursor = Cursor {
        anchor,
        hint: anchor,
        synced: 0,
        diverged: false,
    };
    let (start, anchor) = place_draft(src, output, cursor);
    (start..src.len(), anchor)
}

pub(crate) fn place_draft(src: &DraftSource, output: &[TokenId], cursor: Cursor) -> (usize, usize) {
    let mut anchor = cursor.anchor.min(src.len());
    if output.is_empty() {
        return (anchor, anchor);
    }
    let classify = |t| src.class(t);
    let out_segments = segment(output, &classify, false);
    let tail_start = out_segments.last().map_or(0, |s| s.end);

    let mut matched_now = false;
    if let Some(last) = out_segments
        .iter()
        .rev()
        .find(|s| !s.key.is_empty())
        .filter(|s| s.end > cursor.synced)
    {
        if let Some(hit) = src
            .segments
            .iter()
            .find(|s| s.start >= anchor && s.key == last.key)
        {
            anchor = hit.end;
            matched_now = true;
        }
    }

    let tail = &output[tail_start..];
    let tail_key: Vec<TokenId> = tail
        .iter()
        .copied()
        .filter(|&t| !src.class(t).blank)
        .collect();
    if tail_key.is_empty() {
        return (anchor, anchor);
    }
    let lo = if matched_now {
        anchor
    } else {
        cursor.hint.min(src.len())
    };
    // Still inside the statement where the output left the source: guess
    // that the replaced stretch had the same length as its replacement.
    let same_length = (cursor.diverged && !matched_now && tail_start <= cursor.synced)
        .then(|| cursor.hint + (output.len() - cursor.synced));
    match resume_point(src, lo, &tail_key, tail, same_length) {
        Some(q) => (q, anchor),
        None => (anchor, anchor),
    }
}

/// Where to resume drafting inside the unfinished output statement.
///
/// Preference order: a source position right after the output's last two or
/// three content tokens, the same-length guess when it stays within the
/// statement, then a single-token match. The search covers the segment at
/// `lo` and the one after it.
fn resume_point(
    src: &DraftSource,
    lo: usize,
    tail_key: &[TokenId],
    tail: &[TokenId],
    same_length: Option<usize>,
) -> Option<usize> {
    let seg = src.segment_of(lo)?;
    let hi = src.segments[(seg + 1).min(src.segments.len() - 1)].end;
    let positions: Vec<usize> = (lo..hi)
        .filter(|&i| !src.class(src.tokens[i]).blank)
        .collect();
    let find = |t: usize| -> Option<usize> {
        let want = &tail_key[tail_key.len() - t..];
        (t - 1..positions.len())
            .find(|&j| {
                positions[j + 1 - t..=j]
                    .iter()
                    .zip(want)
                    .all(|(&p, &w)| src.tokens[p] == w)
            })
            .map(|j| positions[j] + 1)
    };
    let skip_blanks = |mut q: usize| {
        // Skip blanks the output already has after its last content token.
        let trailing = tail
            .iter()
            .rev()
            .take_while(|&&x| src.class(x).blank)
            .count();
        let blanks = &tail[tail.len() - trailing..];
        if src.tokens[q..].starts_with(blanks) {
            q += blanks.len();
        }
        q
    };
    for t in (2..=tail_key.len().min(3)).rev() {
        if let Some(q) = find(t) {
            return Some(skip_blanks(q));
        }
    }
    if let Some(q) = same_length.filter(|&q| q < src.segments[seg].end) {
        return Some(q);
    }
    find(1).map(skip_blanks)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Token ids: 100 = ';' (boundary), 101 = '\n' (boundary, blank), 102 = ' ' (blank).
    fn classify(t: TokenId) -> TokenClass {
        match t {
            100 => TokenClass {
                boundary: true,
                blank: false,
            },
            101 => TokenClass {
                boundary: true,
                blank: true,
            },
            102 => TokenClass {
                boundary: false,
                blank: true,
            },
            _ => TokenClass::default(),
        }
    }

    /// Six statements `k k+1 ;` for k = 1, 11, 21, ...
    fn six() -> DraftSource {
        let mut toks = Vec::new();
        for s in 0..6u32 {
            toks.extend([s * 10 + 1, s * 10 + 2, 100]);
        }
        DraftSource::new(toks, classify)
    }

    #[test]
    fn lmp_examples() {
        assert_eq!(longest_matching_prefix(&[1, 2, 3], &[1, 2, 4]), 2);
        assert_eq!(longest_matching_prefix(&[1, 2, 3], &[1, 2, 3]), 3);
        assert_eq!(longest_matching_prefix(&[9, 2, 3], &[1, 2, 3]), 0);
    }

    #[test]
    fn empty_output_drafts_everything() {
        let src = six();
        let (range, anchor) = draft_generate(&src, &[], 0);
        assert_eq!(range, 0..18);
        assert_eq!(anchor, 0);
    }

    #[test]
    fn anchors_after_matching_statement() {
        let src = six();
        // Output ends with the fourth statement (index 3).
        let (range, anchor) = draft_generate(&src, &[5, 5, 100, 31, 32, 100], 0);
        assert_eq!(anchor, 12);
        assert_eq!(range.start, 12);
        assert_eq!(&src.tokens[range], &[41, 42, 100, 51, 52, 100]);
    }

    #[test]
    fn unknown_statement_keeps_anchor() {
        let src = six();
        let (range, anchor) = draft_generate(&src, &[77, 78, 100], 6);
        assert_eq!(anchor, 6);
        assert_eq!(range, 6..18);
    }

    #[test]
    fn search_is_forward_only() {
        let src = six();
        let (_, anchor) = draft_generate(&src, &[1, 2, 100], 9);
        assert_eq!(anchor, 9);
    }

    #[test]
    fn whitespace_is_ignored_when_matching() {
        let src = DraftSource::new(vec![1, 102, 2, 100, 101, 3, 4, 100], classify);
        let (range, anchor) = draft_generate(&src, &[1, 2, 100], 0);
        assert_eq!(anchor, 4);
        assert_eq!(range.start, 4);
    }

    #[test]
    fn resumes_inside_unfinished_statement() {
        let src = DraftSource::new(vec![1, 2, 3, 4, 5, 100, 6, 100], classify);
        // Output replaced `2 3` with `9` and has reached `4`.
        let (range, _) = draft_generate(&src, &[1, 9, 4], 0);
        assert_eq!(range.start, 4);
    }

    #[test]
    fn anchor_at_end_gives_empty_draft() {
        let src = six();
        let (range, anchor) = draft_generate(&src, &[1, 2, 100], 18);
        assert!(range.is_empty());
        assert_eq!(anchor, 18);
    }
}
