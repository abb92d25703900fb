//! The warm-up stage: supervised fine-tuning of the base model on labeled
//! problems, with the loss curve and before/after accuracy.
//!
//!     cargo run --release -p dpost --example train_warmup

use dpost::corpus::{generate_synthetic, Dataset, DatasetKind};
use dpost::engine::{Checkpoint, Model, ModelConfig, Role, Tokenizer};
use dpost::evalsuite::{accuracy, ComputeLedger};
use dpost::selftrain::steps::warmup;
use dpost::training::TrainProfile;

fn main() -> anyhow::Result<()> {
    let tok = Tokenizer::standard();
    let base = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), 42), Role::Base, "");
    println!(
        "model: {} parameters, vocab {}",
        base.model.param_count(),
        tok.vocab_size()
    );

    let pool = generate_synthetic(21, 500, 1..=2);
    let train = Dataset::new(DatasetKind::Labeled, pool.items[..400].to_vec());
    let dev = Dataset::new(DatasetKind::Labeled, pool.items[400..].to_vec());

    let mut ledger = ComputeLedger::new(base.model.param_count() as u64);
    let before = accuracy(&base.model, &tok, &dev, true, 100, 32).accuracy;
    println!("untrained base accuracy: {before:.3}");

    let mut profile = TrainProfile::toy_sft();
    profile.max_steps = Some(500);
    let (sft, run) = warmup(&base, &train, &profile, 7, &tok, &mut ledger)?;
    let n = run.curve.len();
    println!("loss curve (step, loss, lr):");
    for i in [0, n / 4, n / 2, 3 * n / 4, n - 1] {
        let c = &run.curve[i];
        println!("  {:5}  {:9.3}  {:.2e}", c.step, c.loss, c.lr);
    }

    let after = accuracy(&sft.model, &tok, &dev, true, 100, 32);
    println!("warmed-up accuracy: {:.3} (role {})", after.accuracy, sft.role);
    println!(
        "ledger: {:.3e} training FLOPs, {:.3e} inference FLOPs",
        ledger.training_flops(),
        ledger.inference_flops()
    );

    if let Some(t) = after.transcripts.iter().find(|t| t.correct) {
        println!("\na solved problem:\n{}", t.output);
    }
    Ok(())
}
