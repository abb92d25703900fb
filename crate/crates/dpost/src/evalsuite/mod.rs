//! Evaluation: accuracy, Pass@K, FLOPs accounting, and report plots.

pub mod eval;
pub mod flops;
pub mod plots;

pub use eval::{accuracy, pass_at_k, EvalOutcome, PassAtKReport, Transcript};
pub use flops::ComputeLedger;
