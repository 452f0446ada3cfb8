use std::time::Instant;

use super::draft::{longest_matching_prefix, place_draft, Cursor, DraftSource};
use super::{DecodeError, DecodeLimits, DecodeStats, ModelBackend, TokenId};

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Generated tokens, including the final EOS when one was produced.
    pub tokens: Vec<TokenId>,
    pub stats: DecodeStats,
    /// The token limit was hit before EOS.
    pub truncated: bool,
}

struct Session<'a, M: ModelBackend> {
    model: &'a M,
    prompt: &'a [TokenId],
    output: Vec<TokenId>,
    stats: DecodeStats,
    n_max: usize,
    done: bool,
}

impl<'a, M: ModelBackend> Session<'a, M> {
    fn new(model: &'a M, prompt: &'a [TokenId], n_max: usize) -> Result<Self, DecodeError> {
        if prompt.is_empty() {
            return Err(DecodeError::EmptyPrompt);
        }
        Ok(Session {
            model,
            prompt,
            output: Vec::new(),
            stats: DecodeStats::default(),
            n_max,
            done: n_max == 0,
        })
    }

    /// Run one forward pass over `prompt + output + draft` and return the
    /// predictions from the last output position onward (`draft.len() + 1`
    /// tokens). Predictions over the already generated output must reproduce
    /// it; anything else means the backend is not deterministic or causal.
    fn forward(&mut self, draft: &[TokenId]) -> Result<Vec<TokenId>, DecodeError> {
        let mut input = Vec::with_capacity(self.prompt.len() + self.output.len() + draft.len());
        input.extend_from_slice(self.prompt);
        input.extend_from_slice(&self.output);
        input.extend_from_slice(draft);
        let preds = self.model.forward(&input);
        self.stats.record_pass(input.len());
        if preds.len() != input.len() {
            return Err(DecodeError::BadForwardLength {
                expected: input.len(),
                got: preds.len(),
            });
        }
        let base = self.prompt.len() + self.output.len();
        for i in self.prompt.len() - 1..base - 1 {
            if preds[i] != input[i + 1] {
                return Err(DecodeError::BackendContract {
                    position: i + 1 - self.prompt.len(),
                    expected: input[i + 1],
                    got: preds[i],
                });
            }
        }
        Ok(preds[base - 1..].to_vec())
    }

    /// Append tokens, stopping at EOS and at the length limit. Returns how
    /// many were kept.
    fn push(&mut self, tokens: &[TokenId]) -> usize {
        let eos = self.model.eos();
        let mut kept = 0;
        for &t in tokens {
            if self.output.len() >= self.n_max {
                break;
            }
            self.output.push(t);
            kept += 1;
            if t == eos {
                self.done = true;
                break;
            }
        }
        if self.output.len() >= self.n_max {
            self.done = true;
        }
        kept
    }

    fn ar_step(&mut self) -> Result<TokenId, DecodeError> {
        let preds = self.forward(&[])?;
        let t = preds[0];
        self.push(&[t]);
        self.stats.ar_fallback_tokens += 1;
        Ok(t)
    }

    fn finish(mut self, started: Instant) -> DecodeOutput {
        self.stats.tokens_emitted = self.output.len();
        self.stats.wall_time = started.elapsed();
        let eos = self.model.eos();
        let truncated = self.output.last() != Some(&eos);
        DecodeOutput {
            tokens: self.output,
            stats: self.stats,
            truncated,
        }
    }
}

/// Plain greedy decoding, one token per forward pass.
pub fn ar_decode<M: ModelBackend>(
    model: &M,
    prompt: &[TokenId],
    n_max: usize,
) -> Result<DecodeOutput, DecodeError> {
    let started = Instant::now();
    let mut s = Session::new(model, prompt, n_max)?;
    while !s.done {
        s.ar_step()?;
    }
    Ok(s.finish(started))
}

/// Greedy decoding that verifies the remaining buggy program as a draft in
/// each forward pass.
///
/// Each pass accepts the longest draft prefix the model agrees with plus the
/// model's own token at the first disagreement. After a disagreement up to
/// `limits.ar_burst` tokens are generated one at a time (stopping early at a
/// statement boundary) before the draft is re-placed.
pub fn accelerated_decode<M: ModelBackend>(
    model: &M,
    prompt: &[TokenId],
    src: &DraftSource,
    limits: DecodeLimits,
) -> Result<DecodeOutput, DecodeError> {
    let started = Instant::now();
    let mut s = Session::new(model, prompt, limits.n_max)?;
    let mut cursor = Cursor::default();

    while !s.done {
        let (start, anchor) = place_draft(src, &s.output, cursor);
        cursor.anchor = cursor.anchor.max(anchor);

        // A draft longer than the remaining budget cannot be used.
        let budget = limits.n_max - s.output.len() - 1;
        let end = src.len().min(start + budget);
        let draft = &src.tokens[start.min(end)..end];
        if draft.is_empty() {
            s.ar_step()?;
            continue;
        }

        let verified = s.forward(draft)?;
        let k = longest_matching_prefix(&verified[..draft.len()], draft);
        let before = s.output.len();
        let mut accepted = draft[..k].to_vec();
        accepted.push(verified[k]);
        let kept = s.push(&accepted);
        s.stats.draft_accepted += kept.min(k);
        s.stats.corrections += kept - kept.min(k);

        let diverged_at = start + k;
        cursor.anchor = cursor.anchor.max(reanchor(src, diverged_at));
        cursor.hint = cursor.hint.max(diverged_at);
        cursor.synced = before + kept.min(k);
        cursor.diverged = k < draft.len();

        if s.done || k == draft.len() {
            continue;
        }
        for _ in 0..limits.ar_burst {
            if s.done {
                break;
            }
            let t = s.ar_step()?;
            if src.class(t).boundary {
                break;
            }
        }
    }
    Ok(s.finish(started))
}

/// Anchor implied by the output leaving the draft source at `pos`: a source
/// statement the output had already started is consumed, one it diverged
/// from at its first token is kept for later.
fn reanchor(src: &DraftSource, pos: usize) -> usize {
    let Some(seg) = src.segment_of(pos) else {
        return src.len();
    };
    let seg = &src.segments[seg];
    let started = src.tokens[seg.start..pos]
        .iter()
        .any(|&t| !src.class(t).blank);
    if started {
        seg.end
    } else {
        seg.start
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::TokenClass;

    const EOS: TokenId = 0;

    /// Emits `script` after the prompt, then EOS; predicts 999 off script.
    struct Scripted {
        prompt_len: usize,
        script: Vec<TokenId>,
    }

    impl ModelBackend for Scripted {
        fn eos(&self) -> TokenId {
            EOS
        }
        fn vocab_size(&self) -> usize {
            1000
        }
        fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
            let mut on_track = true;
            (0..tokens.len())
                .map(|i| {
                    if i >= self.prompt_len {
                        let j = i - self.prompt_len;
                        on_track &= self.script.get(j) == Some(&tokens[i]);
                    }
                    if i + 1 < self.prompt_len || !on_track {
                        return 999;
                    }
                    let j = i + 1 - self.prompt_len;
                    self.script.get(j).copied().unwrap_or(EOS)
                })
                .collect()
        }
    }

    struct Counter;

    impl ModelBackend for Counter {
        fn eos(&self) -> TokenId {
            EOS
        }
        fn vocab_size(&self) -> usize {
            1 << 20
        }
        fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
            (0..tokens.len()).map(|i| i as TokenId + 1).collect()
        }
    }

    /// Ignores its input history; predicts a different token on every call.
    struct Flaky(std::cell::Cell<TokenId>);

    impl ModelBackend for Flaky {
        fn eos(&self) -> TokenId {
            EOS
        }
        fn vocab_size(&self) -> usize {
            100
        }
        fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
            self.0.set(self.0.get() % 90 + 1);
            vec![self.0.get(); tokens.len()]
        }
    }

    fn classify(t: TokenId) -> TokenClass {
        TokenClass {
            boundary: t == 500,
            blank: false,
        }
    }

    #[test]
    fn always_eos_model() {
        let m = Scripted {
            prompt_len: 1,
            script: vec![],
        };
        let out = ar_decode(&m, &[7], 10).unwrap();
        assert_eq!(out.tokens, vec![EOS]);
        assert_eq!(out.stats.forward_passes, 1);
        assert!(!out.truncated);
    }

    #[test]
    fn scripted_ar_emits_script_then_eos() {
        let script = vec![5, 6, 7, 500, 8];
        let m = Scripted {
            prompt_len: 2,
            script: script.clone(),
        };
        let out = ar_decode(&m, &[1, 2], 100).unwrap();
        let mut expect = script;
        expect.push(EOS);
        assert_eq!(out.tokens, expect);
        assert_eq!(out.stats.forward_passes, 6);
        assert_eq!(out.stats.forward_passes, out.stats.tokens_emitted);
    }

    #[test]
    fn limit_truncates() {
        let out = ar_decode(&Counter, &[1], 3).unwrap();
        assert_eq!(out.tokens.len(), 3);
        assert!(out.truncated);
    }

    #[test]
    fn empty_prompt_rejected() {
        assert_eq!(ar_decode(&Counter, &[], 3), Err(DecodeError::EmptyPrompt));
    }

    #[test]
    fn exact_draft_needs_one_pass() {
        let script: Vec<TokenId> = (10..60).collect();
        let m = Scripted {
            prompt_len: 1,
            script: script.clone(),
        };
        let src = DraftSource::new(script, classify);
        let out = accelerated_decode(&m, &[1], &src, DecodeLimits::default()).unwrap();
        assert_eq!(out.tokens, ar_decode(&m, &[1], 4192).unwrap().tokens);
        assert!(out.stats.forward_passes <= 2);
        assert_eq!(out.stats.draft_accepted, 50);
    }

    #[test]
    fn empty_draft_is_plain_ar() {
        let m = Scripted {
            prompt_len: 1,
            script: vec![3, 4, 5],
        };
        let src = DraftSource::new(vec![], classify);
        let out = accelerated_decode(&m, &[1], &src, DecodeLimits::default()).unwrap();
        assert_eq!(out.tokens, vec![3, 4, 5, EOS]);
        assert_eq!(out.stats.draft_accepted, 0);
        assert_eq!(out.stats.forward_passes, 4);
    }

    #[test]
    fn one_replaced_statement_matches_ar() {
        let target = vec![10, 11, 500, 20, 21, 22, 500, 30, 31, 500, 40, 500];
        let buggy = vec![10, 11, 500, 20, 99, 22, 500, 30, 31, 500, 40, 500];
        let m = Scripted {
            prompt_len: 1,
            script: target,
        };
        let src = DraftSource::new(buggy, classify);
        let acc = accelerated_decode(&m, &[1], &src, DecodeLimits::default()).unwrap();
        let ar = ar_decode(&m, &[1], 4192).unwrap();
        assert_eq!(acc.tokens, ar.tokens);
        let st = &acc.stats;
        assert_eq!(
            st.tokens_emitted,
            st.draft_accepted + st.corrections + st.ar_fallback_tokens
        );
        assert!(st.forward_passes < ar.stats.forward_passes);
    }

    #[test]
    fn limit_applies_to_accelerated_too() {
        let src = DraftSource::new((1..50).collect(), classify);
        let limits = DecodeLimits {
            n_max: 7,
            ar_burst: 5,
        };
        let acc = accelerated_decode(&Counter, &[1], &src, limits).unwrap();
        let ar = ar_decode(&Counter, &[1], 7).unwrap();
        assert_eq!(acc.tokens, ar.tokens);
        assert!(acc.truncated);
    }

    #[test]
    fn inconsistent_backend_is_detected() {
        let m = Flaky(std::cell::Cell::new(0));
        let err = ar_decode(&m, &[1, 2], 10).unwrap_err();
        assert!(matches!(err, DecodeError::BackendContract { .. }));
    }
}
