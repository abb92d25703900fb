//! Tiny trainable autoregressive sequence model: tokenizer, causal forward
//! pass, reverse-mode gradients, sampling and batched decoding, checkpoints.

pub mod checkpoint;
pub mod generate;
pub mod kernels;
pub mod model;
pub mod pool;
pub mod tokenizer;

pub use checkpoint::{Checkpoint, Role};
pub use generate::{
    generate, generate_batch, sequence_logprob, stream_seed, GenOutput, Interceptor,
    SamplingConfig,
};
pub use model::{Acts, EngineError, Model, ModelConfig, PackedBatch, ParamEntry};
pub use tokenizer::{TokenId, TokenKind, Tokenizer, BOS, EOS, PAD, UNK};
