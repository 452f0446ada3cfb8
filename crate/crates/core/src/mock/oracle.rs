use std::collections::{BTreeSet, HashMap};

use crate::decode::{segment, ModelBackend, TokenClass, TokenId};

/// Greedy decoding from a registered prompt emits the scripted target and
/// then EOS. Off-script positions and unknown prompts predict EOS.
#[derive(Debug, Clone)]
pub struct TargetOracleBackend {
    eos: TokenId,
    vocab_size: usize,
    scripts: HashMap<Vec<TokenId>, Vec<TokenId>>,
    prompt_lens: BTreeSet<usize>,
}

impl TargetOracleBackend {
    pub fn new(eos: TokenId, vocab_size: usize) -> Self {
        TargetOracleBackend {
            eos,
            vocab_size,
            scripts: HashMap::new(),
            prompt_lens: BTreeSet::new(),
        }
    }

    pub fn with_script(mut self, prompt: Vec<TokenId>, target: Vec<TokenId>) -> Self {
        self.add_script(prompt, target);
        self
    }

    pub fn add_script(&mut self, prompt: Vec<TokenId>, target: Vec<TokenId>) {
        self.prompt_lens.insert(prompt.len());
        self.scripts.insert(prompt, target);
    }

    pub fn target_for(&self, prompt: &[TokenId]) -> Option<&[TokenId]> {
        self.scripts.get(prompt).map(Vec::as_slice)
    }

    fn lookup(&self, tokens: &[TokenId]) -> Option<(usize, &[TokenId])> {
        self.prompt_lens
            .iter()
            .rev()
            .filter(|&&n| n > 0 && n <= tokens.len())
            .find_map(|&n| self.scripts.get(&tokens[..n]).map(|t| (n, t.as_slice())))
    }
}

impl ModelBackend for TargetOracleBackend {
    fn eos(&self) -> TokenId {
        self.eos
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
        let mut out = vec![self.eos; tokens.len()];
        let Some((p, target)) = self.lookup(tokens) else {
            return out;
        };
        let generated = &tokens[p..];
        let on_track = generated
            .iter()
            .zip(target)
            .take_while(|(a, b)| a == b)
            .count();
        // Position p - 1 + j predicts target[j] while the first j generated
        // tokens follow the script.
        for j in 0..=on_track.min(generated.len()) {
            out[p - 1 + j] = target.get(j).copied().unwrap_or(self.eos);
        }
        out
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Statement-level perturbation applied to the fixed program before it
/// becomes the oracle's target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoiseEdit {
    /// Insert tokens before statement `at` (or at the end when out of range).
    Insert {
        at: usize,
        tokens: Vec<TokenId>,
    },
    Replace {
        at: usize,
        tokens: Vec<TokenId>,
    },
    Delete {
        at: usize,
    },
    /// Target the buggy program instead of the fixed one.
    KeepBuggy,
}

/// Oracle whose greedy output for `prompt` is `fixed` (after `noise`) and EOS.
/// Statement indices in `noise` refer to the statements of the current
/// target, applied in order.
pub fn make_repair_oracle(
    prompt: Vec<TokenId>,
    buggy: &[TokenId],
    fixed: &[TokenId],
    noise: &[NoiseEdit],
    classify: &dyn Fn(TokenId) -> TokenClass,
    eos: TokenId,
    vocab_size: usize,
) -> TargetOracleBackend {
    let mut target = fixed.to_vec();
    for edit in noise {
        target = apply_edit(&target, edit, buggy, classify);
    }
    TargetOracleBackend::new(eos, vocab_size).with_script(prompt, target)
}

fn apply_edit(
    target: &[TokenId],
    edit: &NoiseEdit,
    buggy: &[TokenId],
    classify: &dyn Fn(TokenId) -> TokenClass,
) -> Vec<TokenId> {
    let segs = segment(target, classify, true);
    let range_of = |at: usize| segs.get(at).map(|s| s.start..s.end);
    let mut out = target.to_vec();
    match edit {
        NoiseEdit::KeepBuggy => return buggy.to_vec(),
        NoiseEdit::Insert { at, tokens } => {
            let pos = range_of(*at).map_or(target.len(), |r| r.start);
            out.splice(pos..pos, tokens.iter().copied());
        }
        NoiseEdit::Replace { at, tokens } => {
            if let Some(r) = range_of(*at) {
                out.splice(r, tokens.iter().copied());
            }
        }
        NoiseEdit::Delete { at } => {
            if let Some(r) = range_of(*at) {
                out.drain(r);
            }
        }
    }
    out
}
