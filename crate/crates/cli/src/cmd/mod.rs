pub mod bench;
pub mod dataset;
pub mod mask;
pub mod repair;
pub mod synth;
pub mod triage;

use clap::ValueEnum;
use repairkit_core::decode::{DecodeLimits, DecodeStats};
use repairkit_core::mask::{Aggregation, DistGranularity, MaskConfig, Strategy};
use repairkit_core::triage::{build_prompt, BugType, ProblemMeta};
use serde::Serialize;

use crate::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One token per forward pass.
    Ar,
    /// Buggy program as a verified draft.
    Fast,
}

/// Mask settings from flags, then the config file, then defaults.
#[derive(Debug, Clone, clap::Args)]
pub struct MaskFlags {
    /// M1 (modified only), M2 (+ padding), M3 (+ expansion) or M4 (both).
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Upper bound of padding weights, in (0, 1].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Statement distance unit: char or token.
    #[arg(long)]
    pub granularity: Option<DistGranularity>,
    /// Combination of expansion similarities: paper_max or capped_min.
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
}

impl MaskFlags {
    pub fn resolve(&self, g: &Global) -> MaskConfig {
        let d = MaskConfig::default();
        let c = &g.config;
        MaskConfig {
            strategy: self.strategy.or(c.strategy).unwrap_or(d.strategy),
            sigma: self.sigma.or(c.sigma).unwrap_or(d.sigma),
            rng_seed: g.seed,
            dist_granularity: self
                .granularity
                .or(c.dist_granularity)
                .unwrap_or(d.dist_granularity),
            expansion_aggregation: self
                .aggregation
                .or(c.aggregation)
                .unwrap_or(d.expansion_aggregation),
            loss_level: d.loss_level,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct DecodeFlags {
    /// Maximum output tokens.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Plain decoding steps after a rejected draft.
    #[arg(long)]
    pub ar_burst: Option<usize>,
}

impl DecodeFlags {
    pub fn resolve(&self, g: &Global) -> anyhow::Result<DecodeLimits> {
        let d = DecodeLimits::default();
        let limits = DecodeLimits {
            n_max: self.n_max.or(g.config.n_max).unwrap_or(d.n_max),
            ar_burst: self.ar_burst.or(g.config.ar_burst).unwrap_or(d.ar_burst),
        };
        anyhow::ensure!(limits.n_max > 0, "--n-max must be positive");
        Ok(limits)
    }
}

/// Decoding statistics without wall-clock time unless asked for, so JSON
/// output is reproducible.
#[derive(Debug, Serialize)]
pub struct StatsOut {
    pub forward_passes: usize,
    pub tokens_emitted: usize,
    pub draft_accepted: usize,
    pub corrections: usize,
    pub ar_fallback_tokens: usize,
    pub tokens_processed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl StatsOut {
    pub fn new(s: &DecodeStats, timings: bool) -> Self {
        StatsOut {
            forward_passes: s.forward_passes,
            tokens_emitted: s.tokens_emitted,
            draft_accepted: s.draft_accepted,
            corrections: s.corrections,
            ar_fallback_tokens: s.ar_fallback_tokens,
            tokens_processed: s.tokens_processed,
            wall_time_s: timings.then(|| s.wall_time.as_secs_f64()),
        }
    }
}

/// Rendered repair prompt; metadata defaults to an empty problem.
pub fn prompt_text(meta: Option<&ProblemMeta>, buggy: &str, bug_type: Option<BugType>) -> String {
    let fallback = ProblemMeta::default();
    build_prompt(meta.unwrap_or(&fallback), buggy, bug_type).rendered
}
