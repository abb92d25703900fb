//! Accuracy and Pass@K for a trained checkpoint, including the Pass@1
//! (greedy) = accuracy identity.
//!
//!     cargo run --release -p dpost --example evaluate_pass_at_k

use dpost::corpus::{generate_synthetic, Dataset, DatasetKind};
use dpost::engine::{Checkpoint, Model, ModelConfig, Role, Tokenizer};
use dpost::evalsuite::{accuracy, pass_at_k, ComputeLedger};
use dpost::selftrain::steps::warmup;
use dpost::training::TrainProfile;

fn main() -> anyhow::Result<()> {
    let tok = Tokenizer::standard();
    let base = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), 2), Role::Base, "");
    let pool = generate_synthetic(13, 460, 1..=2);
    let train = Dataset::new(DatasetKind::Labeled, pool.items[..360].to_vec());
    let test = Dataset::new(DatasetKind::Labeled, pool.items[360..].to_vec());

    let mut ledger = ComputeLedger::new(base.model.param_count() as u64);
    let mut profile = TrainProfile::toy_sft();
    profile.max_steps = Some(450);
    println!("training...");
    let (sft, _) = warmup(&base, &train, &profile, 4, &tok, &mut ledger)?;

    let acc = accuracy(&sft.model, &tok, &test, true, 100, 64);
    println!("greedy accuracy on {} problems: {:.3}", test.len(), acc.accuracy);

    // Pass@1 at temperature 0 is exactly accuracy (same decode path)
    let (p1, _) = pass_at_k(&sft.model, &tok, &test, 1, 0.0, 0, true, 100, 64);
    assert_eq!(p1.rate, acc.accuracy);
    println!("pass@1 (temp 0) = {:.3} (identical by construction)", p1.rate);

    for k in [1, 5, 10] {
        let (r, _) = pass_at_k(&sft.model, &tok, &test, k, 0.7, 77, true, 100, 64);
        println!("pass@{k:<2} at temperature 0.7: {:.3}", r.rate);
    }
    println!(
        "inference so far: {:.3e} FLOPs over {} tokens",
        ledger.inference_flops(),
        ledger.infer_tokens
    );
    Ok(())
}
