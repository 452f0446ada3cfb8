use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use crate::decode::{ModelBackend, TokenId};

use super::vocab::Vocab;

/// Count-based n-gram predictor with backoff to shorter contexts. The
/// prediction for a context is its most frequent continuation, ties going to
/// the lowest token id.
#[derive(Debug, Clone)]
pub struct NGramBackend {
    order: usize,
    eos: TokenId,
    vocab_size: usize,
    best: HashMap<Vec<TokenId>, TokenId>,
}

impl NGramBackend {
    /// Train on token documents; each document implicitly ends with EOS.
    pub fn train(docs: &[Vec<TokenId>], order: usize, eos: TokenId, vocab_size: usize) -> Self {
        let order = order.max(1);
        let mut counts: HashMap<Vec<TokenId>, HashMap<TokenId, u64>> = HashMap::new();
        for doc in docs {
            let mut seq = doc.clone();
            seq.push(eos);
            for i in 0..seq.len() {
                let next = seq[i];
                for ctx_len in 0..order.min(i + 1) {
                    let ctx = seq[i - ctx_len..i].to_vec();
                    *counts.entry(ctx).or_default().entry(next).or_default() += 1;
                }
            }
        }
        let best = counts
            .into_iter()
            .map(|(ctx, nexts)| {
                let (&tok, _) = nexts
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .expect("every context has a continuation");
                (ctx, tok)
            })
            .collect();
        NGramBackend {
            order,
            eos,
            vocab_size,
            best,
        }
    }

    /// Train on every regular file under `dir` (sorted by path), using
    /// `vocab` to tokenize.
    pub fn from_dir(dir: &Path, order: usize, vocab: &Vocab) -> io::Result<Self> {
        let docs: Vec<Vec<TokenId>> = read_corpus(dir)?
            .iter()
            .map(|text| vocab.encode(text))
            .collect();
        Ok(Self::train(&docs, order, super::vocab::EOS, vocab.len()))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn predict(&self, history: &[TokenId]) -> TokenId {
        let max_ctx = (self.order - 1).min(history.len());
        (0..=max_ctx)
            .rev()
            .find_map(|n| self.best.get(&history[history.len() - n..]).copied())
            .unwrap_or(self.eos)
    }
}

/// Contents of every file below `dir`, sorted by path.
pub fn read_corpus(dir: &Path) -> io::Result<Vec<String>> {
    let mut paths = Vec::new();
    collect_files(dir, &mut paths)?;
    paths.sort();
    paths
        .iter()
        .map(|p| fs::read(p).map(|b| String::from_utf8_lossy(&b).into_owned()))
        .collect()
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if path.is_file() {
            out.push(path);
        }
    }
    Ok(())
}

impl ModelBackend for NGramBackend {
    fn eos(&self) -> TokenId {
        self.eos
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn forward(&self, tokens: &[TokenId]) -> Vec<TokenId> {
        (0..tokens.len())
            .map(|i| self.predict(&tokens[..=i]))
            .collect()
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigram_prediction() {
        let m = NGramBackend::train(&[vec![5, 6, 7], vec![5, 6, 8], vec![5, 9]], 2, 0, 10);
        // After 5: 6 twice, 9 once.
        assert_eq!(m.forward(&[5]), vec![6]);
        // After 6: 7 and 8 tie, lowest id wins.
        assert_eq!(m.forward(&[5, 6]), vec![6, 7]);
        // After 7: EOS.
        assert_eq!(m.forward(&[7]), vec![0]);
    }

    #[test]
    fn backs_off_to_unigram() {
        let m = NGramBackend::train(&[vec![3, 3, 4]], 3, 0, 10);
        assert_eq!(m.forward(&[7, 7]), vec![3, 3]);
    }

    #[test]
    fn causal_and_deterministic() {
        let m = NGramBackend::train(&[vec![1, 2, 3, 1, 2, 4]], 3, 0, 10);
        let full = m.forward(&[1, 2, 3, 1, 2]);
        assert_eq!(&full[..3], &m.forward(&[1, 2, 3])[..]);
        assert_eq!(full, m.forward(&[1, 2, 3, 1, 2]));
    }
}
