//! Greedy decoding over an abstract model, plain and draft-verified.
//!
//! The accelerated decoder uses the buggy program as a draft: one forward
//! pass over `prompt + output + draft` yields the model's greedy prediction
//! at every draft position, so every draft token the model agrees with is
//! accepted in a single step. Output is always identical to plain greedy
//! decoding.

mod draft;
mod engine;
mod metrics;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use draft::segment;
pub use draft::{draft_generate, longest_matching_prefix, DraftSource, Segment, TokenClass};
pub use engine::{accelerated_decode, ar_decode, DecodeOutput};
pub use metrics::{
    aggregate, compute_metrics, CorpusAggregate, CostModel, EfficiencyReport, TimingMode,
};

pub type TokenId = u32;

pub const DEFAULT_N_MAX: usize = 4192;
pub const DEFAULT_AR_BURST: usize = 5;

/// A deterministic, causal greedy predictor.
pub trait ModelBackend {
    fn eos(&self) -> TokenId;

    fn vocab_size(&self) -> usize;

    /// `out[i]` is the greedy next token after `tokens[..=i]`. The returned
    /// vector has the same length as `tokens`.
    fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId>;

    /// Whether `forward` may be called from several threads at once.
    fn concurrent_safe(&self) -> bool {
        false
    }
}

impl<M: ModelBackend + ?Sized> ModelBackend for &M {
    fn eos(&self) -> TokenId {
        (**self).eos()
    }
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
        (**self).forward(tokens)
    }
    fn concurrent_safe(&self) -> bool {
        (**self).concurrent_safe()
    }
}

impl<M: ModelBackend + ?Sized> ModelBackend for Box<M> {
    fn eos(&self) -> TokenId {
        (**self).eos()
    }
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
        (**self).forward(tokens)
    }
    fn concurrent_safe(&self) -> bool {
        (**self).concurrent_safe()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeLimits {
    /// Maximum number of output tokens.
    pub n_max: usize,
    /// Tokens generated one at a time after a draft mismatch.
    pub ar_burst: usize,
}

impl Default for DecodeLimits {
    fn default() -> Self {
        DecodeLimits {
            n_max: DEFAULT_N_MAX,
            ar_burst: DEFAULT_AR_BURST,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub forward_passes: usize,
    pub tokens_emitted: usize,
    pub draft_accepted: usize,
    pub corrections: usize,
    pub ar_fallback_tokens: usize,
    /// Sum of input lengths over all forward passes.
    pub tokens_processed: usize,
    pub wall_time: Duration,
}

impl DecodeStats {
    pub(crate) fn record_pass(&mut self, len: usize) {
        self.forward_passes += 1;
        self.tokens_processed += len;
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("prompt must not be empty")]
    EmptyPrompt,
    #[error(
        "backend contract violated at position {position}: predicted {got} where {expected} was generated earlier"
    )]
    BackendContract {
        position: usize,
        expected: TokenId,
        got: TokenId,
    },
    #[error("backend returned {got} predictions for {expected} input tokens")]
    BadForwardLength { expected: usize, got: usize },
}
