use serde::{Deserialize, Serialize};

use super::{MaskFlag, MaskVector, Strategy};
use crate::code_model::SourceUnit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub text: String,
    pub weight_raw: f64,
    pub k: Option<f64>,
    /// Byte range `[start, end)` into `fixed_code`.
    pub span: [usize; 2],
}

/// One line of a mask corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub pair_id: String,
    pub problem_id: String,
    pub buggy_code: String,
    pub fixed_code: String,
    pub strategy: Strategy,
    pub sigma: f64,
    pub seed: u64,
    pub statements: Vec<StatementRecord>,
    pub token_k: Option<Vec<f64>>,
    pub token_spans: Vec<[usize; 2]>,
    pub flags: Vec<MaskFlag>,
}

impl MaskRecord {
    pub fn new(
        pair_id: impl Into<String>,
        problem_id: impl Into<String>,
        buggy: &SourceUnit,
        fixed: &SourceUnit,
        mask: &MaskVector,
    ) -> Self {
        let statements = fixed
            .statements
            .iter()
            .enumerate()
            .map(|(i, s)| StatementRecord {
                text: fixed.statement_text(i).to_string(),
                weight_raw: mask.statement_weights[i],
                k: mask.k.as_ref().map(|k| k[i]),
                span: [s.span.start, s.span.end],
            })
            .collect();
        MaskRecord {
            pair_id: pair_id.into(),
            problem_id: problem_id.into(),
            buggy_code: buggy.text.clone(),
            fixed_code: fixed.text.clone(),
            strategy: mask.strategy,
            sigma: mask.sigma,
            seed: mask.seed,
            statements,
            token_k: mask.token_k.clone(),
            token_spans: fixed
                .tokens
                .iter()
                .map(|t| [t.span.start, t.span.end])
                .collect(),
            flags: mask.flags.iter().copied().collect(),
        }
    }

    /// Single-line JSON rendering.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("mask records always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{build_mask, MaskConfig};

    #[test]
    fn round_trips_through_json() {
        let buggy = SourceUnit::parse("int x = 1;\nprintf(\"%d\", x);");
        let fixed = SourceUnit::parse("int x = 2;\nprintf(\"%d\\n\", x);");
        let mask = build_mask(&buggy, &fixed, &MaskConfig::default()).unwrap();
        let rec = MaskRecord::new("p1", "prob", &buggy, &fixed, &mask);
        let line = rec.to_json_line();
        assert!(!line.contains('\n'));
        let back: MaskRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.statements.len(), 2);
    }
}
