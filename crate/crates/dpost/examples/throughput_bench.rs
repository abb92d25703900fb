//! Decode-throughput benchmark across batch sizes, with and without the
//! calculator interceptor (CSV and SVG output).
//!
//!     cargo run --release -p dpost --example throughput_bench

use dpost::calc::{bench_csv, throughput_bench, BenchConfig};
use dpost::corpus::generate_synthetic;
use dpost::engine::{Model, ModelConfig, Tokenizer};
use dpost::evalsuite::plots::{line_chart, Series};
use dpost::task::question_prompt;

fn main() -> anyhow::Result<()> {
    let tok = Tokenizer::standard();
    let model = Model::init(ModelConfig::toy(tok.vocab_size()), 77);
    let pool = generate_synthetic(8, 128, 1..=2);
    let prompts: Vec<Vec<u32>> = pool
        .problems()
        .map(|p| question_prompt(&tok, &p.question))
        .collect();

    let cfg = BenchConfig {
        batch_sizes: vec![1, 2, 4, 8, 16, 32],
        calculator: vec![true, false],
        new_tokens: 48,
        runs: 3,
        temperature: 0.7,
        seed: 1,
    };
    println!("decoding {} prompts per cell, median of {} runs...", prompts.len(), cfg.runs);
    let rows = throughput_bench(&model, &tok, &prompts, &cfg);
    print!("{}", bench_csv(&rows));

    let dir = std::env::temp_dir().join("dpost-bench");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("throughput.csv"), bench_csv(&rows))?;
    let mut series = Vec::new();
    for calc in [true, false] {
        series.push(Series::new(
            if calc { "calculator on" } else { "calculator off" },
            rows.iter()
                .filter(|r| r.calculator == calc)
                .map(|r| (r.batch_size as f64, r.tokens_per_sec))
                .collect(),
        ));
    }
    std::fs::write(
        dir.join("throughput.svg"),
        line_chart("decode throughput", "batch size", "tokens / second", &series),
    )?;
    println!("wrote CSV and SVG to {}", dir.display());

    let t1 = rows.iter().find(|r| r.batch_size == 1 && r.calculator).unwrap();
    let t32 = rows.iter().find(|r| r.batch_size == 32 && r.calculator).unwrap();
    println!(
        "batch 32 is {:.1}x batch 1 (calculator on)",
        t32.tokens_per_sec / t1.tokens_per_sec
    );
    Ok(())
}
