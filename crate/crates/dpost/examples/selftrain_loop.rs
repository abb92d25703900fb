//! The full iterative loop at small scale: warm-up, then two iterations of
//! DPO step + SFT step + retrain-from-base, with per-iteration reports and
//! artifacts written to a run directory.
//!
//!     cargo run --release -p dpost --example selftrain_loop

use dpost::corpus::{generate_synthetic, Dataset, DatasetKind};
use dpost::engine::{Checkpoint, Model, ModelConfig, Role, Tokenizer};
use dpost::selftrain::store::{ExperimentStore, Manifest, MANIFEST_VERSION};
use dpost::selftrain::{run_loop, EvalSpec, LoopConfig, LoopInputs, Mode};
use dpost::training::{DpoConfig, TrainProfile};

fn main() -> anyhow::Result<()> {
    let tok = Tokenizer::standard();
    let base = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), 9), Role::Base, "demo");
    let pool = generate_synthetic(33, 900, 1..=2);
    let labeled = Dataset::new(DatasetKind::Labeled, pool.items[..250].to_vec());
    let unlabeled =
        Dataset::new(DatasetKind::Labeled, pool.items[250..700].to_vec()).strip_rationales();
    let dev = Dataset::new(DatasetKind::Labeled, pool.items[700..800].to_vec());
    let test = Dataset::new(DatasetKind::Labeled, pool.items[800..].to_vec());

    let mut sft_profile = TrainProfile::toy_sft();
    sft_profile.max_steps = Some(400);
    let cfg = LoopConfig {
        mode: Mode::DpoSt,
        max_iterations: 2,
        max_new_tokens: 100,
        lane_batch: 64,
        ..Default::default()
    };
    let eval = EvalSpec {
        pass_k: vec![],
        pass_k_temperature: 0.7,
        max_new_tokens: 100,
        eval_on_test: true,
    };

    let dir = std::env::temp_dir().join("dpost-selftrain-loop");
    let _ = std::fs::remove_dir_all(&dir);
    let mut store = ExperimentStore::create(
        &dir,
        &Manifest {
            version: MANIFEST_VERSION,
            config_hash: "demo".into(),
            seed: 1,
            mode: cfg.mode.to_string(),
            created_unix: 0,
            command: vec!["example".into()],
        },
    )?;

    let inputs = LoopInputs {
        base: &base,
        labeled: &labeled,
        unlabeled: &unlabeled,
        dev: &dev,
        test: Some(&test),
    };
    println!(
        "running {} with |L|={} |U|={} for up to {} iterations...",
        cfg.mode,
        labeled.len(),
        unlabeled.len(),
        cfg.max_iterations
    );
    let outcome = run_loop(
        &inputs,
        &cfg,
        &sft_profile,
        &DpoConfig::toy(),
        &eval,
        1,
        &tok,
        Some(&mut store),
    )?;

    for r in &outcome.reports {
        println!(
            "iter {}: dev {:.3} test {:.3} pairs {} |S| {} |S^a| {} train-set {} ({:.0}s)",
            r.iteration,
            r.dev_accuracy,
            r.test_accuracy.unwrap_or(f64::NAN),
            r.preference_pairs,
            r.pseudo_total,
            r.pseudo_kept,
            r.train_set_size,
            r.wall_secs,
        );
    }
    println!(
        "final checkpoint role: {}; cumulative FLOPs {:.3e}",
        outcome.final_checkpoint.role,
        outcome.ledger.total_flops()
    );
    println!("artifacts in {}", dir.display());
    Ok(())
}
