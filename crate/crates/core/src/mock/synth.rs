//! Synthetic buggy/fixed program pairs with exact token lengths and a
//! controlled number of diff regions.
//!
//! Programs are a `main` function full of arithmetic assignments. Every
//! piece of text is one vocabulary token, so lengths are exact once the
//! vocabulary is built from the generated texts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tokens spanned by one diff region: `term op term` with its two spaces.
pub const REGION_TOKENS: usize = 5;

const HEADER: [&str; 7] = ["int", " ", "main", "(", ")", " ", "{"];
const FOOTER: [&str; 3] = ["\n", "}", "\n"];
const NL: &str = "\n    ";
const OPS: [&str; 6] = ["+", "-", "*", "/", "%", "^"];
const PROMPT: &str = "/* Fix the program below. */\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFixture {
    pub prompt: String,
    pub target: String,
    /// `buggy[r]` differs from `target` in exactly `r` regions, and the
    /// regions of `buggy[r]` include those of `buggy[r - 1]`.
    pub buggy: Vec<String>,
    pub target_tokens: usize,
}

/// Generate a fixture whose target is exactly `target_len` tokens long with
/// buggy variants carrying 0 to `max_regions` diff regions.
///
/// Panics when `target_len` is too small to hold the program frame and the
/// requested regions.
pub fn synth_fixture(target_len: usize, max_regions: usize, seed: u64) -> SynthFixture {
    let frame = HEADER.len() + FOOTER.len();
    assert!(
        target_len >= frame + 2 + 11 * max_regions,
        "target length {target_len} too small for {max_regions} regions"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stmts: Vec<Vec<String>> = Vec::new();
    let mut remaining = target_len - frame;

    // Make room for the regions first so short programs still hold them.
    for _ in 0..max_regions {
        let m = rng.gen_range(1..=2);
        stmts.push(assignment(&mut rng, m));
        remaining -= 7 + 4 * m;
    }
    while remaining >= 30 {
        let s = if rng.gen_bool(0.1) {
            vec![NL.into(), ident(&mut rng), "++".into(), ";".into()]
        } else {
            let max_m = ((remaining - 18 - 7) / 4).min(4);
            let m = rng.gen_range(0..=max_m);
            assignment(&mut rng, m)
        };
        remaining -= s.len();
        stmts.push(s);
    }
    while remaining > 0 {
        let s = if remaining == 2 || remaining == 4 {
            vec![NL.into(), ";".into()]
        } else {
            vec![NL.into(), ident(&mut rng), ";".into()]
        };
        remaining -= s.len();
        stmts.push(s);
    }
    stmts.shuffle(&mut rng);

    let eligible: Vec<usize> = stmts
        .iter()
        .enumerate()
        .filter(|(_, s)| s.len() >= 11 && s[3] == "=")
        .map(|(i, _)| i)
        .collect();
    let mut chosen = eligible.clone();
    chosen.shuffle(&mut rng);
    chosen.truncate(max_regions);

    let mut buggy_stmts = stmts.clone();
    let mut buggy = vec![render(&stmts)];
    for &si in &chosen {
        let terms = (stmts[si].len() - 7) / 4;
        let at = 5 + 4 * rng.gen_range(0..terms);
        let stmt = &mut buggy_stmts[si];
        stmt[at] = different(&mut rng, &stmt[at], term);
        stmt[at + 2] = OPS.choose(&mut rng).unwrap().to_string();
        stmt[at + 4] = different(&mut rng, &stmt[at + 4], term);
        buggy.push(render(&buggy_stmts));
    }

    SynthFixture {
        prompt: PROMPT.to_string(),
        target: buggy[0].clone(),
        buggy,
        target_tokens: target_len,
    }
}

fn render(stmts: &[Vec<String>]) -> String {
    let mut s: String = HEADER.concat();
    for st in stmts {
        for p in st {
            s.push_str(p);
        }
    }
    s.push_str(&FOOTER.concat());
    s
}

fn assignment(rng: &mut ChaCha8Rng, m: usize) -> Vec<String> {
    let mut s = vec![
        NL.into(),
        ident(rng),
        " ".into(),
        "=".into(),
        " ".into(),
        term(rng),
    ];
    for _ in 0..m {
        s.push(" ".into());
        s.push(OPS.choose(rng).unwrap().to_string());
        s.push(" ".into());
        s.push(term(rng));
    }
    s.push(";".into());
    s
}

fn ident(rng: &mut ChaCha8Rng) -> String {
    format!("v{}", rng.gen_range(0..48))
}

fn term(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.6) {
        ident(rng)
    } else {
        rng.gen_range(0..100).to_string()
    }
}

fn different(rng: &mut ChaCha8Rng, old: &str, gen: fn(&mut ChaCha8Rng) -> String) -> String {
    loop {
        let t = gen(rng);
        if t != old {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::Vocab;

    #[test]
    fn exact_token_lengths() {
        for (len, regions) in [(200, 1), (500, 1), (1000, 8), (2000, 1), (40, 2)] {
            let fx = synth_fixture(len, regions, 11);
            let texts: Vec<&str> = std::iter::once(fx.target.as_str())
                .chain(fx.buggy.iter().map(String::as_str))
                .collect();
            let vocab = Vocab::from_texts(texts);
            assert_eq!(vocab.encode(&fx.target).len(), len);
            for b in &fx.buggy {
                assert_eq!(vocab.encode(b).len(), len);
            }
        }
    }

    #[test]
    fn region_counts_are_nested() {
        let fx = synth_fixture(1000, 8, 3);
        let vocab = Vocab::from_texts(fx.buggy.iter().map(String::as_str));
        let target = vocab.encode(&fx.target);
        let mut prev_diff: Vec<usize> = Vec::new();
        for (r, b) in fx.buggy.iter().enumerate() {
            let toks = vocab.encode(b);
            let diff: Vec<usize> = (0..toks.len()).filter(|&i| toks[i] != target[i]).collect();
            // Each region changes its first and last token.
            assert!(diff.len() >= 2 * r && diff.len() <= 3 * r);
            assert!(prev_diff.iter().all(|p| diff.contains(p)));
            prev_diff = diff;
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(synth_fixture(300, 2, 5), synth_fixture(300, 2, 5));
        assert_ne!(synth_fixture(300, 2, 5), synth_fixture(300, 2, 6));
    }
}
