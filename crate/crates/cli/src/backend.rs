//! Backend specifications and the shared vocabulary they decode with.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use repairkit_core::decode::{ModelBackend, TokenId};
use repairkit_core::mock::{
    make_repair_oracle, read_corpus, NGramBackend, SeededRandomBackend, TargetOracleBackend, Vocab,
    EOS,
};

pub const DEFAULT_NGRAM_ORDER: usize = 4;

/// `oracle`, `random[:SEED]` or `ngram[:ORDER]:DIR`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Oracle,
    Random(Option<u64>),
    NGram { order: usize, dir: PathBuf },
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "oracle" if rest.is_empty() => Ok(BackendSpec::Oracle),
            "random" if rest.is_empty() => Ok(BackendSpec::Random(None)),
            "random" => rest
                .parse()
                .map(|seed| BackendSpec::Random(Some(seed)))
                .map_err(|_| format!("bad random seed `{rest}`")),
            "ngram" if rest.is_empty() => Err("ngram backend needs a corpus directory".into()),
            "ngram" => {
                let (order, dir) = match rest.split_once(':') {
                    Some((o, d)) if o.parse::<usize>().is_ok() => (o.parse().unwrap(), d),
                    _ => (DEFAULT_NGRAM_ORDER, rest),
                };
                if order == 0 {
                    return Err("ngram order must be positive".into());
                }
                Ok(BackendSpec::NGram {
                    order,
                    dir: dir.into(),
                })
            }
            _ => Err(format!(
                "unknown backend `{s}` (expected oracle, random[:SEED] or ngram[:ORDER]:DIR)"
            )),
        }
    }
}

impl std::fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendSpec::Oracle => f.write_str("oracle"),
            BackendSpec::Random(None) => f.write_str("random"),
            BackendSpec::Random(Some(s)) => write!(f, "random:{s}"),
            BackendSpec::NGram { order, dir } => write!(f, "ngram:{order}:{}", dir.display()),
        }
    }
}

pub enum Backend<'a> {
    Oracle(TargetOracleBackend),
    Random(SeededRandomBackend),
    NGram(&'a NGramBackend),
}

impl ModelBackend for Backend<'_> {
    fn eos(&self) -> TokenId {
        match self {
            Backend::Oracle(m) => m.eos(),
            Backend::Random(m) => m.eos(),
            Backend::NGram(m) => m.eos(),
        }
    }

    fn vocab_size(&self) -> usize {
        match self {
            Backend::Oracle(m) => m.vocab_size(),
            Backend::Random(m) => m.vocab_size(),
            Backend::NGram(m) => m.vocab_size(),
        }
    }

    fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
        match self {
            Backend::Oracle(m) => m.forward(tokens),
            Backend::Random(m) => m.forward(tokens),
            Backend::NGram(m) => m.forward(tokens),
        }
    }
}

/// Vocabulary and trained state shared by every program of a run.
pub struct Models {
    pub spec: BackendSpec,
    pub vocab: Vocab,
    ngram: Option<NGramBackend>,
    seed: u64,
}

impl Models {
    /// Build the vocabulary from the backend's corpus (if any) followed by
    /// `texts`, then train the backend.
    pub fn new(spec: BackendSpec, texts: &[&str], seed: u64) -> anyhow::Result<Self> {
        let docs = match &spec {
            BackendSpec::NGram { dir, .. } => read_corpus(dir)
                .with_context(|| format!("reading n-gram corpus {}", dir.display()))?,
            _ => Vec::new(),
        };
        let vocab = Vocab::from_texts(docs.iter().map(String::as_str).chain(texts.iter().copied()));
        let ngram = match &spec {
            BackendSpec::NGram { order, dir } => {
                if docs.is_empty() {
                    bail!("n-gram corpus {} has no files", dir.display());
                }
                let encoded: Vec<Vec<TokenId>> = docs.iter().map(|d| vocab.encode(d)).collect();
                Some(NGramBackend::train(&encoded, *order, EOS, vocab.len()))
            }
            _ => None,
        };
        Ok(Models {
            spec,
            vocab,
            ngram,
            seed,
        })
    }

    /// Backend for one program. The oracle needs the fixed program.
    pub fn backend(
        &self,
        prompt: &[TokenId],
        buggy: &[TokenId],
        fixed: Option<&[TokenId]>,
    ) -> anyhow::Result<Backend<'_>> {
        Ok(match &self.spec {
            BackendSpec::Oracle => {
                let Some(fixed) = fixed else {
                    bail!("the oracle backend needs the fixed program");
                };
                let classify = self.vocab.classifier();
                Backend::Oracle(make_repair_oracle(
                    prompt.to_vec(),
                    buggy,
                    fixed,
                    &[],
                    &classify,
                    EOS,
                    self.vocab.len(),
                ))
            }
            BackendSpec::Random(seed) => Backend::Random(SeededRandomBackend::new(
                seed.unwrap_or(self.seed),
                self.vocab.len(),
            )),
            BackendSpec::NGram { .. } => {
                Backend::NGram(self.ngram.as_ref().expect("trained in new"))
            }
        })
    }
}
