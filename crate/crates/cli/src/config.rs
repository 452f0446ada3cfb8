//! Configuration file: `key = value` lines, `#` comments.
//!
//! Mask, dataset and decoding keys are read here; the remaining keys go to
//! the triage executor. Command-line flags override file values.

use std::path::Path;

use anyhow::{bail, Context};
use repairkit_core::mask::{Aggregation, DistGranularity, Strategy};
use repairkit_core::triage::ExecutorConfig;

#[derive(Debug, Default)]
pub struct FileConfig {
    pub strategy: Option<Strategy>,
    pub sigma: Option<f64>,
    pub dist_granularity: Option<DistGranularity>,
    pub aggregation: Option<Aggregation>,
    pub max_led: Option<usize>,
    pub n_max: Option<usize>,
    pub ar_burst: Option<usize>,
    pub executor: ExecutorConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                FileConfig::parse(&text).with_context(|| format!("config {}", p.display()))
            }
        }
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut cfg = FileConfig::default();
        // Lines consumed here are blanked so the executor parser keeps the
        // original line numbers.
        let mut rest = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once('=') else {
                rest.push(raw);
                continue;
            };
            let value = value.trim();
            let ctx = || format!("line {}: bad value `{value}`", n + 1);
            match key.trim() {
                "strategy" => cfg.strategy = Some(value.parse().with_context(ctx)?),
                "sigma" => cfg.sigma = Some(value.parse().with_context(ctx)?),
                "dist_granularity" => cfg.dist_granularity = Some(value.parse().with_context(ctx)?),
                "expansion_aggregation" => cfg.aggregation = Some(value.parse().with_context(ctx)?),
                "max_led" => cfg.max_led = Some(value.parse().with_context(ctx)?),
                "n_max" => cfg.n_max = Some(value.parse().with_context(ctx)?),
                "ar_burst" => cfg.ar_burst = Some(value.parse().with_context(ctx)?),
                _ => {
                    rest.push(raw);
                    continue;
                }
            }
            rest.push("");
        }
        cfg.executor = ExecutorConfig::parse(&rest.join("\n"))?;
        if cfg.n_max == Some(0) {
            bail!("n_max must be positive");
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_keys_between_sections() {
        let cfg = FileConfig::parse("strategy = M2\n# note\ntimeout_s = 0.5\nmax_led=3\n").unwrap();
        assert_eq!(cfg.strategy, Some(Strategy::M2));
        assert_eq!(cfg.max_led, Some(3));
        assert_eq!(cfg.executor.timeout_s, 0.5);
    }

    #[test]
    fn unknown_key_is_an_error() {
        assert!(FileConfig::parse("colour = blue\n").is_err());
        assert!(FileConfig::parse("sigma = lots\n").is_err());
    }
}
