use dpost::corpus::{generate_synthetic, Problem};
use dpost::engine::{Model, ModelConfig, PackedBatch, Tokenizer};
use dpost::task::sft_examples;
use dpost::training::{sft_loss_grad, SftExample};
use std::time::Instant;

fn main() {
    let tok = Tokenizer::standard();
    let model = Model::init(ModelConfig::toy(tok.vocab_size()), 42);
    let ds = generate_synthetic(42, 64, 1..=3);
    let problems: Vec<&Problem> = ds.problems().collect();
    let examples: Vec<SftExample> = sft_examples(&tok, &problems[..32]);
    let refs: Vec<&SftExample> = examples.iter().collect();
    let seqs: Vec<Vec<u32>> = refs.iter().map(|e| e.tokens()).collect();
    let batch = PackedBatch::pack(&seqs);
    let tokens: usize = batch.n();
    println!("batch: {} lanes, {} tokens", batch.b, tokens);
    let p = model.param_count() as f64;

    // forward only
    let reps = 20;
    let t0 = Instant::now();
    for _ in 0..reps {
        let acts = model.forward(&batch).unwrap();
        std::hint::black_box(&acts.logits);
    }
    let fwd = t0.elapsed().as_secs_f64() / reps as f64;
    println!(
        "forward:       {:6.1} ms  ({:.2} GFLOP/s at 2PN)",
        fwd * 1e3,
        2.0 * p * tokens as f64 / fwd / 1e9
    );

    // forward + backward via loss
    let t0 = Instant::now();
    for _ in 0..reps {
        let out = sft_loss_grad(&model, &refs).unwrap();
        std::hint::black_box(&out.1);
    }
    let both = t0.elapsed().as_secs_f64() / reps as f64;
    println!(
        "loss+grad:     {:6.1} ms  ({:.2} GFLOP/s at 6PN), backward-ish {:.1} ms",
        both * 1e3,
        6.0 * p * tokens as f64 / both / 1e9,
        (both - fwd) * 1e3
    );
}
