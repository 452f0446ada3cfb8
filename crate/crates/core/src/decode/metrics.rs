use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DecodeOutput, DecodeStats};

/// Simulated cost of a forward pass: `c0 + c1 * input_length` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c0: f64,
    pub c1: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            c0: 0.025,
            c1: 0.000_05,
        }
    }
}

impl CostModel {
    pub fn seconds(&self, stats: &DecodeStats) -> f64 {
        self.c0 * stats.forward_passes as f64 + self.c1 * stats.tokens_processed as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    Simulated(CostModel),
    WallClock,
}

impl TimingMode {
    pub fn seconds(&self, stats: &DecodeStats) -> f64 {
        match self {
            TimingMode::Simulated(c) => c.seconds(stats),
            // Guard against a zero reading on very small runs.
            TimingMode::WallClock => stats.wall_time.as_secs_f64().max(1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub tokens: usize,
    pub forward_passes_ar: usize,
    pub forward_passes_acc: usize,
    pub step_efficiency: f64,
    pub speedup: f64,
    pub time_ar: f64,
    pub time_acc: f64,
    pub tokens_per_s_ar: f64,
    pub tokens_per_s: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("decoders disagree at output position {position}; refusing to report")]
    OutputMismatch { position: usize },
}

/// Compare an accelerated run against its plain greedy baseline.
pub fn compute_metrics(
    ar: &DecodeOutput,
    acc: &DecodeOutput,
    timing: TimingMode,
) -> Result<EfficiencyReport, MetricsError> {
    if ar.tokens != acc.tokens {
        let position = ar
            .tokens
            .iter()
            .zip(&acc.tokens)
            .take_while(|(a, b)| a == b)
            .count();
        return Err(MetricsError::OutputMismatch { position });
    }
    Ok(report_from_stats(&ar.stats, &acc.stats, timing))
}

pub fn report_from_stats(
    ar: &DecodeStats,
    acc: &DecodeStats,
    timing: TimingMode,
) -> EfficiencyReport {
    let time_ar = timing.seconds(ar);
    let time_acc = timing.seconds(acc);
    EfficiencyReport {
        tokens: acc.tokens_emitted,
        forward_passes_ar: ar.forward_passes,
        forward_passes_acc: acc.forward_passes,
        step_efficiency: ar.forward_passes as f64 / acc.forward_passes.max(1) as f64,
        speedup: time_ar / time_acc,
        time_ar,
        time_acc,
        tokens_per_s_ar: ar.tokens_emitted as f64 / time_ar,
        tokens_per_s: acc.tokens_emitted as f64 / time_acc,
    }
}

/// Corpus-level summary: means of the per-program values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusAggregate {
    pub programs: usize,
    pub speedup: f64,
    pub step_efficiency: f64,
    pub tokens_per_s_ar: f64,
    pub tokens_per_s: f64,
    pub avg_time_ar: f64,
    pub avg_time_acc: f64,
}

pub fn aggregate(reports: &[EfficiencyReport]) -> CorpusAggregate {
    let n = reports.len();
    let mean = |f: fn(&EfficiencyReport) -> f64| {
        if n == 0 {
            0.0
        } else {
            reports.iter().map(f).sum::<f64>() / n as f64
        }
    };
    CorpusAggregate {
        programs: n,
        speedup: mean(|r| r.speedup),
        step_efficiency: mean(|r| r.step_efficiency),
        tokens_per_s_ar: mean(|r| r.tokens_per_s_ar),
        tokens_per_s: mean(|r| r.tokens_per_s),
        avg_time_ar: mean(|r| r.time_ar),
        avg_time_acc: mean(|r| r.time_acc),
    }
}
