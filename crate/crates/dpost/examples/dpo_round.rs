//! One DPO step in isolation: build preference pairs from a warmed-up
//! model's own samples, tune against the frozen reference, and compare the
//! two checkpoints as pseudo-label generators.
//!
//!     cargo run --release -p dpost --example dpo_round

use dpost::corpus::{generate_synthetic, Dataset, DatasetKind};
use dpost::engine::{Checkpoint, Model, ModelConfig, Role, Tokenizer};
use dpost::evalsuite::{pass_at_k, ComputeLedger};
use dpost::selftrain::steps::{dpo_step, sft_step, warmup};
use dpost::selftrain::{build_preference_data, LoopConfig, Mode};
use dpost::training::{DpoConfig, TrainProfile};

fn main() -> anyhow::Result<()> {
    let tok = Tokenizer::standard();
    let base = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), 11), Role::Base, "");
    let pool = generate_synthetic(5, 800, 1..=2);
    let labeled = Dataset::new(DatasetKind::Labeled, pool.items[..300].to_vec());
    let unlabeled =
        Dataset::new(DatasetKind::Labeled, pool.items[300..600].to_vec()).strip_rationales();
    let dev = Dataset::new(DatasetKind::Labeled, pool.items[600..700].to_vec());

    let mut ledger = ComputeLedger::new(base.model.param_count() as u64);
    let mut profile = TrainProfile::toy_sft();
    profile.max_steps = Some(450);
    println!("warming up...");
    let (sft, _) = warmup(&base, &labeled, &profile, 3, &tok, &mut ledger)?;

    let cfg = LoopConfig {
        mode: Mode::DpoSt,
        max_new_tokens: 100,
        lane_batch: 64,
        ..Default::default()
    };
    println!(
        "sampling {} rationales per question over {} questions...",
        cfg.dpo_samples_per_question,
        unlabeled.len()
    );
    let pairs = build_preference_data(&sft, &tok, &unlabeled, &cfg, 17, &mut ledger);
    println!("preference pairs (winning x losing after dedup): {}", pairs.len());
    if let Some(p) = pairs.first() {
        println!("\nexample pair for: {}", p.question);
        println!("  winning: {}", p.winning.text.replace('\n', " | "));
        println!("  losing:  {}", p.losing.text.replace('\n', " | "));
    }

    let dpo_cfg = DpoConfig::toy();
    let (dpo, run) = dpo_step(&sft, &pairs, &dpo_cfg, 23, &tok, &mut ledger)?;
    println!(
        "\nDPO step: {} optimizer steps, loss ln2={:.4} -> {:.4}",
        run.curve.len(),
        std::f64::consts::LN_2,
        run.final_loss().unwrap()
    );

    // the DPO model should be the better pseudo-label generator
    let (p_sft, _) = pass_at_k(&sft.model, &tok, &dev, 10, 0.7, 31, true, 100, 64);
    let (p_dpo, _) = pass_at_k(&dpo.model, &tok, &dev, 10, 0.7, 31, true, 100, 64);
    println!("pass@10 on dev: sft {:.3} vs dpo {:.3}", p_sft.rate, p_dpo.rate);

    let st = sft_step(&sft, &unlabeled, &labeled, &cfg, 41, &tok, &mut ledger)?;
    let dp = sft_step(&dpo, &unlabeled, &labeled, &cfg, 41, &tok, &mut ledger)?;
    println!(
        "pseudo-labels kept |S^alpha|: sft generator {} vs dpo generator {}",
        st.filtered.len(),
        dp.filtered.len()
    );
    Ok(())
}
