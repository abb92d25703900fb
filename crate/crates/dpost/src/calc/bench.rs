//! Decode-throughput benchmark: tokens per second across batch sizes, with
//! and without the calculator interceptor.

use crate::calc::CalcInterceptor;
use crate::engine::generate::{generate_batch, SamplingConfig};
use crate::engine::model::Model;
use crate::engine::tokenizer::{TokenId, Tokenizer};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub batch_sizes: Vec<usize>,
    /// calculator settings to measure (true = on)
    pub calculator: Vec<bool>,
    /// fixed decode length per lane (EOS ignored so lanes stay uniform)
    pub new_tokens: usize,
    /// timed repetitions per cell; the median is reported
    pub runs: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            batch_sizes: vec![1, 2, 4, 8, 16, 32],
            calculator: vec![true, false],
            new_tokens: 64,
            runs: 3,
            temperature: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub batch_size: usize,
    pub calculator: bool,
    pub tokens_per_sec: f64,
}

fn decode_all(
    model: &Model,
    tokenizer: &Tokenizer,
    prompts: &[Vec<TokenId>],
    batch_size: usize,
    calculator: bool,
    cfg: &BenchConfig,
) -> u64 {
    let scfg = SamplingConfig {
        temperature: cfg.temperature,
        max_new_tokens: cfg.new_tokens,
        seed: cfg.seed,
        calculator_enabled: calculator,
        ignore_eos: true,
    };
    let mut interceptor = calculator.then(|| CalcInterceptor::new(tokenizer));
    let mut emitted = 0u64;
    let mut next_id = 0u64;
    for chunk in prompts.chunks(batch_size) {
        let ids: Vec<u64> = (0..chunk.len()).map(|i| next_id + i as u64).collect();
        next_id += chunk.len() as u64;
        let outs = generate_batch(
            model,
            chunk,
            &scfg,
            &ids,
            interceptor
                .as_mut()
                .map(|ic| ic as &mut dyn crate::engine::generate::Interceptor),
        );
        emitted += outs.iter().map(|o| o.tokens.len() as u64).sum::<u64>();
    }
    emitted
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

/// Measure decode throughput for every (batch size, calculator) cell.
/// One untimed warm-up pass precedes the timed runs of each cell.
pub fn throughput_bench(
    model: &Model,
    tokenizer: &Tokenizer,
    prompts: &[Vec<TokenId>],
    cfg: &BenchConfig,
) -> Vec<BenchRow> {
    assert!(prompts.len() >= 100, "benchmark needs at least 100 prompts");
    assert!(cfg.runs >= 1);
    let mut rows = Vec::new();
    for &bs in &cfg.batch_sizes {
        for &calc in &cfg.calculator {
            // warm-up, excluded from timing
            let warm: Vec<Vec<TokenId>> = prompts.iter().take(bs).cloned().collect();
            decode_all(model, tokenizer, &warm, bs, calc, cfg);

            let mut rates = Vec::with_capacity(cfg.runs);
            for _ in 0..cfg.runs {
                let start = Instant::now();
                let emitted = decode_all(model, tokenizer, prompts, bs, calc, cfg);
                let secs = start.elapsed().as_secs_f64();
                rates.push(emitted as f64 / secs);
            }
            rows.push(BenchRow {
                batch_size: bs,
                calculator: calc,
                tokens_per_sec: median(rates),
            });
        }
    }
    rows
}

/// CSV with columns batch_size,calculator,tokens_per_sec.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("batch_size,calculator,tokens_per_sec\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.3}\n",
            r.batch_size,
            if r.calculator { "on" } else { "off" },
            r.tokens_per_sec
        ));
    }
    out
}

pub fn write_bench_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, bench_csv(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::model::ModelConfig;

    #[test]
    fn rows_cover_the_grid_and_are_positive() {
        let tok = Tokenizer::standard();
        let model = Model::init(
            ModelConfig {
                n_layers: 1,
                d_model: 16,
                n_heads: 2,
                d_ff: 32,
                context: 64,
                vocab_size: tok.vocab_size(),
            },
            1,
        );
        let prompts: Vec<Vec<TokenId>> = (0..100)
            .map(|i| {
                let name = crate::corpus::synth::NAMES[i % 8];
                crate::task::question_prompt(&tok, &format!("{name} has 7 coins how many"))
            })
            .collect();
        let cfg = BenchConfig {
            batch_sizes: vec![1, 4],
            calculator: vec![true, false],
            new_tokens: 4,
            runs: 1,
            ..Default::default()
        };
        let rows = throughput_bench(&model, &tok, &prompts, &cfg);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.tokens_per_sec > 0.0));
        let csv = bench_csv(&rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,on,"));
    }
}
