//! Building blocks for repair-oriented fine-tuning corpora and draft-verified
//! decoding of program repairs.

pub mod code_model;
pub mod dataset;
pub mod decode;
pub mod diff_align;
pub mod mask;
pub mod mock;
pub mod triage;
