//! Deterministic model backends for testing and benchmarking the decoders.

mod ngram;
mod oracle;
mod random;
pub mod synth;
mod vocab;

pub use ngram::{read_corpus, NGramBackend};
pub use oracle::{make_repair_oracle, NoiseEdit, TargetOracleBackend};
pub use random::SeededRandomBackend;
pub use vocab::{pre_split, Vocab, EOS};

pub(crate) use random::mix;
