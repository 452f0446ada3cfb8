//! Modification-focused loss masks over the statements of a fixed program.
//!
//! A mask assigns every fixed-side statement a raw weight in three steps:
//! modified statements get 1, statements related to them (assignments of the
//! variables they use, definitions of the functions they call, siblings in
//! the same block) get a similarity-derived weight, and everything else gets
//! a small seeded random weight. The raw weights are normalized into `k`.

mod record;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{same_block_statements, SourceUnit, TokenKind};
use crate::diff_align::{align, char_levenshtein, levenshtein, AlignedDiff};

pub use record::{MaskRecord, StatementRecord};

/// Lower bound of the padding distribution.
pub const PADDING_FLOOR: f64 = 0.05;
pub const DEFAULT_SIGMA: f64 = 0.6;

#[derive(Debug, Error, PartialEq)]
pub enum MaskError {
    #[error("sigma must lie in (0, 1], got {0}")]
    InvalidSigma(f64),
    #[error("expected {expected} losses, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mask weights are undefined (all raw weights are zero)")]
    Undefined,
    #[error("unknown {what} `{value}`")]
    Parse { what: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    M1,
    M2,
    M3,
    M4,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::M1, Strategy::M2, Strategy::M3, Strategy::M4];

    pub fn expands(self) -> bool {
        matches!(self, Strategy::M3 | Strategy::M4)
    }

    pub fn pads(self) -> bool {
        matches!(self, Strategy::M2 | Strategy::M4)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::M1 => "M1",
            Strategy::M2 => "M2",
            Strategy::M3 => "M3",
            Strategy::M4 => "M4",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(Strategy::M1),
            "M2" => Ok(Strategy::M2),
            "M3" => Ok(Strategy::M3),
            "M4" => Ok(Strategy::M4),
            _ => Err(MaskError::Parse {
                what: "strategy",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistGranularity {
    Char,
    Token,
}

impl FromStr for DistGranularity {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(DistGranularity::Char),
            "token" => Ok(DistGranularity::Token),
            _ => Err(MaskError::Parse {
                what: "distance granularity",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `max(1, sum)`
    PaperMax,
    /// `min(1, sum)`
    CappedMin,
}

impl Aggregation {
    pub fn apply(self, sum: f64) -> f64 {
        match self {
            Aggregation::PaperMax => sum.max(1.0),
            Aggregation::CappedMin => sum.min(1.0),
        }
    }
}

impl FromStr for Aggregation {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper_max" => Ok(Aggregation::PaperMax),
            "capped_min" => Ok(Aggregation::CappedMin),
            _ => Err(MaskError::Parse {
                what: "expansion aggregation",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossLevel {
    Statement,
    Token,
}

impl FromStr for LossLevel {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "statement" => Ok(LossLevel::Statement),
            "token" => Ok(LossLevel::Token),
            _ => Err(MaskError::Parse {
                what: "loss level",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskConfig {
    pub strategy: Strategy,
    pub sigma: f64,
    pub rng_seed: u64,
    pub dist_granularity: DistGranularity,
    pub expansion_aggregation: Aggregation,
    pub loss_level: LossLevel,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            strategy: Strategy::M4,
            sigma: DEFAULT_SIGMA,
            rng_seed: 0,
            dist_granularity: DistGranularity::Char,
            expansion_aggregation: Aggregation::PaperMax,
            loss_level: LossLevel::Statement,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<(), MaskError> {
        if self.sigma > 0.0 && self.sigma <= 1.0 {
            Ok(())
        } else {
            Err(MaskError::InvalidSigma(self.sigma))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskFlag {
    /// Buggy and fixed programs have identical statement sequences.
    NoModification,
    /// Every raw weight is zero, so `k` could not be normalized.
    UndefinedWeights,
    /// One of the inputs needed line-based fallback segmentation.
    Degraded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskVector {
    pub strategy: Strategy,
    pub sigma: f64,
    pub seed: u64,
    /// Raw weight per fixed statement.
    pub statement_weights: Vec<f64>,
    /// Normalized weights; `None` when all raw weights are zero.
    pub k: Option<Vec<f64>>,
    /// Per-token weights over all tokens of the fixed unit, comments included.
    pub token_k: Option<Vec<f64>>,
    pub y_m: BTreeSet<usize>,
    pub y_e: BTreeSet<usize>,
    pub deletion_anchors: BTreeSet<usize>,
    /// Statements that received a padding weight.
    pub padded: BTreeSet<usize>,
    pub flags: BTreeSet<MaskFlag>,
}

impl MaskVector {
    pub fn has_flag(&self, flag: MaskFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Weighted loss at the requested granularity.
    pub fn loss(&self, losses: &[f64], level: LossLevel) -> Result<f64, MaskError> {
        let weights = match level {
            LossLevel::Statement => self.k.as_deref(),
            LossLevel::Token => self.token_k.as_deref(),
        };
        repair_loss(losses, weights.ok_or(MaskError::Undefined)?)
    }
}

/// Relatedness score for a statement distance: `1 / (2 + ln dist)`, with 1
/// for identical statements.
pub fn similarity_from_distance(dist: usize) -> f64 {
    if dist == 0 {
        1.0
    } else {
        1.0 / (2.0 + (dist as f64).ln())
    }
}

/// Distance between two statements of `unit` at the given granularity,
/// measured on normalized text (char) or code token texts (token).
pub fn statement_distance(unit: &SourceUnit, e: usize, m: usize, g: DistGranularity) -> usize {
    match g {
        DistGranularity::Char => char_levenshtein(
            &unit.statements[e].normalized,
            &unit.statements[m].normalized,
        ),
        DistGranularity::Token => levenshtein(
            &unit.statement_token_texts(e),
            &unit.statement_token_texts(m),
        ),
    }
}

pub fn similarity(unit: &SourceUnit, e: usize, m: usize, g: DistGranularity) -> f64 {
    similarity_from_distance(statement_distance(unit, e, m, g))
}

/// Statements the expansion step adds around `seeds`, excluding the seeds.
pub fn expansion_candidates(
    unit: &SourceUnit,
    diff: &AlignedDiff,
    seeds: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    let facts = &diff.fixed_facts;
    let mut out = BTreeSet::new();
    for v in &diff.v_m {
        if let Some(stmts) = facts.assignments.get(v) {
            out.extend(stmts.iter().copied());
        }
    }
    for f in &diff.f_m {
        if let Some(def) = facts.definitions.get(f) {
            out.insert(def.header);
        }
    }
    for &m in seeds {
        out.extend(same_block_statements(unit, m));
    }
    out.retain(|s| !seeds.contains(s));
    out
}

/// Expansion statements with their weights: the aggregated similarity to
/// every modified statement.
pub fn expand_mask(
    diff: &AlignedDiff,
    unit: &SourceUnit,
    cfg: &MaskConfig,
) -> BTreeMap<usize, f64> {
    let seeds = modification_seeds(diff);
    expansion_candidates(unit, diff, &seeds)
        .into_iter()
        .map(|e| {
            let sum: f64 = seeds
                .iter()
                .map(|&m| similarity(unit, e, m, cfg.dist_granularity))
                .sum();
            (e, cfg.expansion_aggregation.apply(sum))
        })
        .collect()
}

/// Statements treated as modified: `y_m` plus the fixed-side anchors of pure
/// deletions.
pub fn modification_seeds(diff: &AlignedDiff) -> BTreeSet<usize> {
    diff.y_m.union(&diff.deletion_anchors).copied().collect()
}

/// Lower end of the padding range for a given sigma.
pub fn padding_range(sigma: f64) -> (f64, f64) {
    (PADDING_FLOOR.min(sigma), sigma)
}

/// Assign a seeded uniform weight from the padding range to every statement
/// not in `exclude`, in index order. Returns the padded statements.
pub fn apply_padding(
    raw: &mut [f64],
    exclude: &BTreeSet<usize>,
    sigma: f64,
    seed: u64,
) -> BTreeSet<usize> {
    let (lo, hi) = padding_range(sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut padded = BTreeSet::new();
    for (i, w) in raw.iter_mut().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        *w = rng.gen_range(lo..=hi);
        padded.insert(i);
    }
    padded
}

/// Scale weights to sum 1. `None` when the sum is not positive.
pub fn normalize(raw: &[f64]) -> Option<Vec<f64>> {
    let sum: f64 = raw.iter().sum();
    (sum > 0.0).then(|| raw.iter().map(|w| w / sum).collect())
}

pub fn build_mask(
    buggy: &SourceUnit,
    fixed: &SourceUnit,
    cfg: &MaskConfig,
) -> Result<MaskVector, MaskError> {
    cfg.validate()?;
    let diff = align(buggy, fixed);
    Ok(build_mask_from_diff(&diff, buggy.degraded, fixed, cfg))
}

pub fn build_mask_from_diff(
    diff: &AlignedDiff,
    buggy_degraded: bool,
    fixed: &SourceUnit,
    cfg: &MaskConfig,
) -> MaskVector {
    let n = fixed.statements.len();
    let mut raw = vec![0.0; n];
    let mut flags = BTreeSet::new();
    if diff.is_identity() {
        flags.insert(MaskFlag::NoModification);
    }
    if buggy_degraded || fixed.degraded {
        flags.insert(MaskFlag::Degraded);
    }

    let seeds = modification_seeds(diff);
    for &m in &seeds {
        raw[m] = 1.0;
    }

    let mut y_e = BTreeSet::new();
    if cfg.strategy.expands() {
        for (e, w) in expand_mask(diff, fixed, cfg) {
            raw[e] = w;
            y_e.insert(e);
        }
    }

    let mut padded = BTreeSet::new();
    if cfg.strategy.pads() {
        let exclude: BTreeSet<usize> = seeds.union(&y_e).copied().collect();
        padded = apply_padding(&mut raw, &exclude, cfg.sigma, cfg.rng_seed);
    }

    let k = normalize(&raw);
    if k.is_none() {
        flags.insert(MaskFlag::UndefinedWeights);
    }
    let mut mask = MaskVector {
        strategy: cfg.strategy,
        sigma: cfg.sigma,
        seed: cfg.rng_seed,
        statement_weights: raw,
        k,
        token_k: None,
        y_m: diff.y_m.clone(),
        y_e,
        deletion_anchors: diff.deletion_anchors.clone(),
        padded,
        flags,
    };
    mask.token_k = broadcast_to_tokens(&mask, fixed);
    mask
}

/// Spread each statement's `k` evenly over its code tokens. Comment tokens
/// get the padding floor when the strategy pads, nothing otherwise. The
/// result covers every token of `fixed` and sums to 1.
pub fn broadcast_to_tokens(mask: &MaskVector, fixed: &SourceUnit) -> Option<Vec<f64>> {
    let k = mask.k.as_ref()?;
    let raw_sum: f64 = mask.statement_weights.iter().sum();
    let comment_weight = if mask.strategy.pads() {
        padding_range(mask.sigma).0 / raw_sum
    } else {
        0.0
    };
    let weights: Vec<f64> = fixed
        .tokens
        .iter()
        .map(|tok| match tok.statement {
            Some(s) => k[s] / fixed.statements[s].tokens.len() as f64,
            None if tok.kind == TokenKind::Comment => comment_weight,
            None => 0.0,
        })
        .collect();
    normalize(&weights)
}

/// `sum(loss_i * k_i)`.
pub fn repair_loss(losses: &[f64], k: &[f64]) -> Result<f64, MaskError> {
    if losses.len() != k.len() {
        return Err(MaskError::LengthMismatch {
            expected: k.len(),
            got: losses.len(),
        });
    }
    Ok(losses.iter().zip(k).map(|(l, w)| l * w).sum())
}

/// Mean token loss per statement, from losses over all tokens of `unit`.
/// Comment tokens are ignored.
pub fn statement_losses(token_losses: &[f64], unit: &SourceUnit) -> Result<Vec<f64>, MaskError> {
    if token_losses.len() != unit.tokens.len() {
        return Err(MaskError::LengthMismatch {
            expected: unit.tokens.len(),
            got: token_losses.len(),
        });
    }
    Ok(unit
        .statements
        .iter()
        .map(|s| {
            let total: f64 = s.tokens.iter().map(|&t| token_losses[t]).sum();
            total / s.tokens.len().max(1) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIB_BUGGY: &str =
        "int fibonacci(int n) {\n  if (n <= 1) return n;\n  return fibonacci(n - 1);\n}\n";
    const FIB_FIXED: &str =
        "int fibonacci(int n) {\n  if (n <= 1) return n;\n  return fibonacci(n - 1)+fibonacci(n - 2);\n}\n";

    fn cfg(strategy: Strategy) -> MaskConfig {
        MaskConfig {
            strategy,
            rng_seed: 7,
            ..MaskConfig::default()
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn similarity_values() {
        assert!(close(similarity_from_distance(1), 0.5));
        assert!(close(similarity_from_distance(0), 1.0));
        let e2 = std::f64::consts::E * std::f64::consts::E;
        assert!(close(1.0 / (2.0 + e2.ln()), 0.25));
    }

    #[test]
    fn aggregation_modes() {
        assert_eq!(Aggregation::PaperMax.apply(0.5 + 0.5), 1.0);
        assert_eq!(Aggregation::PaperMax.apply(0.3), 1.0);
        assert_eq!(Aggregation::CappedMin.apply(0.3), 0.3);
        assert_eq!(Aggregation::CappedMin.apply(1.7), 1.0);
    }

    #[test]
    fn normalization_example() {
        assert_eq!(normalize(&[1.0, 1.0, 2.0]).unwrap(), vec![0.25, 0.25, 0.5]);
        assert_eq!(normalize(&[0.0, 0.0]), None);
    }

    #[test]
    fn fibonacci_declaration_is_expanded() {
        let buggy = SourceUnit::parse(FIB_BUGGY);
        let fixed = SourceUnit::parse(FIB_FIXED);
        let diff = align(&buggy, &fixed);
        let ye = expand_mask(&diff, &fixed, &cfg(Strategy::M4));
        // "int fibonacci(int n)" declares n and defines fibonacci.
        assert!(ye.contains_key(&0));
    }

    #[test]
    fn fibonacci_m4_peaks_on_return() {
        let buggy = SourceUnit::parse(FIB_BUGGY);
        let fixed = SourceUnit::parse(FIB_FIXED);
        let mask = build_mask(&buggy, &fixed, &cfg(Strategy::M4)).unwrap();
        let k = mask.k.unwrap();
        let ret = mask.y_m.iter().next().copied().unwrap();
        assert!(fixed.statement_text(ret).starts_with("return fibonacci"));
        assert!(k.iter().all(|&w| w <= k[ret]));
    }

    #[test]
    fn identical_pair_m1_is_undefined() {
        let u = SourceUnit::parse(FIB_FIXED);
        let mask = build_mask(&u, &u, &cfg(Strategy::M1)).unwrap();
        assert!(mask.statement_weights.iter().all(|&w| w == 0.0));
        assert!(mask.k.is_none());
        assert!(mask.has_flag(MaskFlag::NoModification));
        assert!(mask.has_flag(MaskFlag::UndefinedWeights));
    }

    #[test]
    fn identical_pair_m4_is_all_padding() {
        let u = SourceUnit::parse(FIB_FIXED);
        let mask = build_mask(&u, &u, &cfg(Strategy::M4)).unwrap();
        assert!(mask.has_flag(MaskFlag::NoModification));
        assert_eq!(mask.padded.len(), u.statements.len());
        assert!(mask.k.is_some());
    }

    #[test]
    fn deterministic_for_same_seed() {
        let buggy = SourceUnit::parse(FIB_BUGGY);
        let fixed = SourceUnit::parse(FIB_FIXED);
        let a = build_mask(&buggy, &fixed, &cfg(Strategy::M4)).unwrap();
        let b = build_mask(&buggy, &fixed, &cfg(Strategy::M4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_sigma() {
        let u = SourceUnit::parse("x = 1;");
        for sigma in [0.0, -0.1, 1.5, f64::NAN] {
            let c = MaskConfig {
                sigma,
                ..MaskConfig::default()
            };
            assert!(build_mask(&u, &u, &c).is_err());
        }
    }

    #[test]
    fn broadcast_splits_statement_weight() {
        let fixed = SourceUnit::parse("a = b;\nc = d + e;");
        let counts: Vec<usize> = fixed.statements.iter().map(|s| s.tokens.len()).collect();
        assert_eq!(counts, vec![4, 6]);
        let mask = MaskVector {
            strategy: Strategy::M1,
            sigma: DEFAULT_SIGMA,
            seed: 0,
            statement_weights: vec![1.0, 1.0],
            k: Some(vec![0.5, 0.5]),
            token_k: None,
            y_m: BTreeSet::new(),
            y_e: BTreeSet::new(),
            deletion_anchors: BTreeSet::new(),
            padded: BTreeSet::new(),
            flags: BTreeSet::new(),
        };
        let t = broadcast_to_tokens(&mask, &fixed).unwrap();
        for w in &t[..4] {
            assert!(close(*w, 0.125));
        }
        for w in &t[4..] {
            assert!(close(*w, 0.5 / 6.0));
        }
    }

    #[test]
    fn comments_only_weighted_when_padding() {
        let buggy = SourceUnit::parse("a = 1; // note\nb = 2;");
        let fixed = SourceUnit::parse("a = 1; // note\nb = 3;");
        let comment = fixed
            .tokens
            .iter()
            .position(|t| t.kind == TokenKind::Comment)
            .unwrap();
        let m1 = build_mask(&buggy, &fixed, &cfg(Strategy::M1)).unwrap();
        assert_eq!(m1.token_k.unwrap()[comment], 0.0);
        let m2 = build_mask(&buggy, &fixed, &cfg(Strategy::M2)).unwrap();
        let tk = m2.token_k.unwrap();
        assert!(tk[comment] > 0.0);
        assert!((tk.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(repair_loss(&[2.0, 4.0], &[0.25, 0.75]).unwrap(), 3.5);
        assert_eq!(
            repair_loss(&[2.0, 4.0, 9.0], &[0.0, 1.0, 0.0]).unwrap(),
            4.0
        );
        assert!(matches!(
            repair_loss(&[1.0], &[0.5, 0.5]),
            Err(MaskError::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn statement_loss_is_token_mean() {
        let u = SourceUnit::parse("a = b;\nc;");
        let losses = statement_losses(&[1.0, 2.0, 3.0, 6.0, 0.5, 1.5], &u).unwrap();
        assert_eq!(losses, vec![3.0, 1.0]);
    }

    #[test]
    fn pure_deletion_keeps_anchor_weight() {
        let buggy = SourceUnit::parse("a = 1;\nprintf(\"debug\");\nb = 2;");
        let fixed = SourceUnit::parse("a = 1;\nb = 2;");
        let mask = build_mask(&buggy, &fixed, &cfg(Strategy::M1)).unwrap();
        assert_eq!(mask.statement_weights, vec![0.0, 1.0]);
        assert!(!mask.has_flag(MaskFlag::NoModification));
    }
}
