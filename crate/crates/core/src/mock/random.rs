use crate::decode::{ModelBackend, TokenId};

/// Predicts a pseudo-random token from a rolling hash of the whole prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRandomBackend {
    pub seed: u64,
    pub vocab_size: usize,
    pub eos: TokenId,
}

impl SeededRandomBackend {
    pub fn new(seed: u64, vocab_size: usize) -> Self {
        SeededRandomBackend {
            seed,
            vocab_size: vocab_size.max(1),
            eos: 0,
        }
    }
}

/// splitmix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ModelBackend for SeededRandomBackend {
    fn eos(&self) -> TokenId {
        self.eos
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
        let mut h = mix(self.seed);
        tokens
            .iter()
            .map(|&t| {
                h = mix(h ^ u64::from(t));
                (h % self.vocab_size as u64) as TokenId
            })
            .collect()
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}
