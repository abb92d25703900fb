//! DPO-augmented self-training for chain-of-thought math word problems, at
//! desk scale.
//!
//! Everything needed to run the full loop lives in this crate: a synthetic
//! GSM8K-style corpus, a tiny trainable decoder-only transformer with exact
//! f64 gradients, calculator-constrained batched decoding, the SFT and DPO
//! objectives with an AdamW/cosine trainer, the iterative self-training
//! orchestrator, and an evaluation suite (accuracy, Pass@K, FLOPs ledger,
//! plots). See the crate examples for one runnable entry point per
//! capability; the `dpost` binary drives the same code from a TOML config.

pub mod calc;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod engine;
pub mod evalsuite;
pub mod selftrain;
pub mod task;
pub mod training;
