use dpost::corpus::{generate_synthetic, Dataset, DatasetKind};
use dpost::engine::{Checkpoint, Model, ModelConfig, Role, Tokenizer};
use dpost::evalsuite::{accuracy, pass_at_k, ComputeLedger};
use dpost::selftrain::steps::{dpo_step, sft_step, warmup};
use dpost::selftrain::{build_preference_data, LoopConfig, Mode};
use dpost::training::{DpoConfig, TrainProfile};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // arg1: "eNN" for NN epochs or plain number for max_steps
    let duration = args.get(1).cloned().unwrap_or_else(|| "e16".into());
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let max_step_range: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2);
    let dpo_lr: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(7e-6);

    let tok = Tokenizer::standard();
    let base = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), seed), Role::Base, "p");

    let pool = generate_synthetic(42, 2700, 1..=max_step_range);
    let labeled = Dataset::new(DatasetKind::Labeled, pool.items[..600].to_vec());
    let unlabeled = Dataset::new(DatasetKind::Labeled, pool.items[600..2000].to_vec()).strip_rationales();
    let dev = Dataset::new(DatasetKind::Labeled, pool.items[2000..2200].to_vec());

    let mut sft_profile = TrainProfile::toy_sft();
    if let Some(e) = duration.strip_prefix('e') {
        sft_profile.epochs = Some(e.parse().unwrap());
        sft_profile.max_steps = None;
    } else {
        sft_profile.max_steps = Some(duration.parse().unwrap());
    }
    let mut dpo_cfg = DpoConfig::toy();
    dpo_cfg.profile.learning_rate = dpo_lr;
    let mut cfg = LoopConfig {
        mode: Mode::DpoSt,
        lane_batch: 64,
        max_new_tokens: 120,
        ..Default::default()
    };
    cfg.validate().unwrap();
    let mut ledger = ComputeLedger::new(base.model.param_count() as u64);

    let fmt = |t: &Instant| t.elapsed().as_secs_f64();

    // warm-up
    let t = Instant::now();
    let (sft0, _) = warmup(&base, &labeled, &sft_profile, seed + 100, &tok, &mut ledger).unwrap();
    let warm_t = fmt(&t);
    let t = Instant::now();
    let acc0 = accuracy(&sft0.model, &tok, &dev, true, 120, 64).accuracy;
    println!("warmup: {warm_t:.0}s acc0={acc0:.3} (eval {:.0}s)", fmt(&t));

    // ST branch: pseudo-label with sft0 directly
    let t = Instant::now();
    let st_out = sft_step(&sft0, &unlabeled, &labeled, &cfg, seed + 1, &tok, &mut ledger).unwrap();
    println!(
        "ST sft_step: {:.0}s |S|={} |S^a|={} train={}",
        fmt(&t),
        st_out.pseudo.len(),
        st_out.filtered.len(),
        st_out.train_set.len()
    );
    let t = Instant::now();
    let (st1, _) = warmup(&base, &st_out.train_set, &sft_profile, seed + 200, &tok, &mut ledger).unwrap();
    let acc_st = accuracy(&st1.model, &tok, &dev, true, 120, 64).accuracy;
    println!("ST retrain: {:.0}s acc_st={acc_st:.3}", fmt(&t));

    // DPO-ST branch
    let t = Instant::now();
    let pairs = build_preference_data(&sft0, &tok, &unlabeled, &cfg, seed + 2, &mut ledger);
    println!("pairs: {:.0}s n={}", fmt(&t), pairs.len());
    let t = Instant::now();
    let (dpo1, run) = dpo_step(&sft0, &pairs, &dpo_cfg, seed + 300, &tok, &mut ledger).unwrap();
    println!("dpo_step: {:.0}s final dpo loss {:.4}", fmt(&t), run.final_loss().unwrap());
    let t = Instant::now();
    let dpo_out = sft_step(&dpo1, &unlabeled, &labeled, &cfg, seed + 1, &tok, &mut ledger).unwrap();
    println!(
        "DPO sft_step: {:.0}s |S|={} |S^a|={} (ST had {})",
        fmt(&t),
        dpo_out.pseudo.len(),
        dpo_out.filtered.len(),
        st_out.filtered.len()
    );
    let t = Instant::now();
    let (dpost1, _) = warmup(&base, &dpo_out.train_set, &sft_profile, seed + 200, &tok, &mut ledger).unwrap();
    let acc_dpost = accuracy(&dpost1.model, &tok, &dev, true, 120, 64).accuracy;
    println!("DPO-ST retrain: {:.0}s acc_dpost={acc_dpost:.3}", fmt(&t));

    // pass@10 comparison sft vs dpo generator
    let sub = Dataset::new(DatasetKind::Labeled, dev.items[..100].to_vec());
    let (p_sft, _) = pass_at_k(&sft0.model, &tok, &sub, 10, 0.7, 9, true, 120, 64);
    let (p_dpo, _) = pass_at_k(&dpo1.model, &tok, &sub, 10, 0.7, 9, true, 120, 64);
    println!("pass@10: sft={:.3} dpo={:.3}", p_sft.rate, p_dpo.rate);
    println!(
        "SUMMARY seed={seed} dur={duration} acc0={acc0:.3} st={acc_st:.3} dpost={acc_dpost:.3} sa_st={} sa_dpo={} total_flops={:.3e}",
        st_out.filtered.len(),
        dpo_out.filtered.len(),
        ledger.total_flops()
    );
}
