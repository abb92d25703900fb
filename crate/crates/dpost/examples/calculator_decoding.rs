//! Calculator-constrained decoding: the expression evaluator, the lane
//! state machine on a scripted token stream, and live forcing on a
//! quick-trained model.
//!
//!     cargo run --release -p dpost --example calculator_decoding

use dpost::calc::{eval_expr, CalcInterceptor};
use dpost::corpus::{generate_synthetic, parse_annotations, Dataset, DatasetKind, Problem};
use dpost::engine::generate::{Interceptor, SamplingConfig};
use dpost::engine::{Checkpoint, Model, ModelConfig, Role, Tokenizer};
use dpost::evalsuite::ComputeLedger;
use dpost::selftrain::steps::warmup;
use dpost::task::sample_rationales;
use dpost::training::TrainProfile;

fn main() -> anyhow::Result<()> {
    // exact arithmetic with canonical rendering
    for expr in ["3*2", "12*52", "1+2*3", "(1+2)*3", "10/4", "2/3"] {
        println!("{expr} = {}", eval_expr(expr)?);
    }

    // the state machine, driven directly: the model proposes junk after `=`
    // and the calculator overrides it
    let tok = Tokenizer::standard();
    let mut ic = CalcInterceptor::new(&tok);
    ic.begin(1);
    let proposals = ["<<", "1", "2", "*", "5", "2", "=", "9", "9", "9", "9", "9", "9", "9"];
    let emitted: Vec<u32> = proposals
        .iter()
        .map(|s| ic.intercept(0, tok.id(s).unwrap()))
        .collect();
    println!("\nscripted stream decodes to: {}", tok.decode(&emitted));

    // quick-train a tiny model so annotations appear organically
    let pool = generate_synthetic(3, 260, 1..=1);
    let train = Dataset::new(DatasetKind::Labeled, pool.items[..220].to_vec());
    let held = Dataset::new(DatasetKind::Labeled, pool.items[220..].to_vec());
    let base = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), 5), Role::Base, "");
    let mut profile = TrainProfile::toy_sft();
    profile.max_steps = Some(260);
    let mut ledger = ComputeLedger::new(base.model.param_count() as u64);
    println!("\ntraining a small model for a moment...");
    let (sft, _) = warmup(&base, &train, &profile, 1, &tok, &mut ledger)?;

    let problems: Vec<&Problem> = held.problems().collect();
    let scfg = SamplingConfig {
        temperature: 0.7,
        max_new_tokens: 80,
        seed: 11,
        calculator_enabled: true,
        ignore_eos: false,
    };
    let run = sample_rationales(&sft.model, &tok, &problems, 2, "demo", &scfg, 32);
    let mut shown = 0;
    let mut checked = 0;
    for (p, samples) in problems.iter().zip(&run.rationales) {
        for r in samples {
            for span in parse_annotations(&r.text) {
                assert!(
                    span.is_exact(),
                    "forced span <<{}={}>> disagrees with the evaluator",
                    span.expression,
                    span.result
                );
                checked += 1;
            }
            if shown < 3 && !r.annotations.is_empty() {
                println!("\nQ: {}\n{}", p.question, r.text);
                shown += 1;
            }
        }
    }
    println!(
        "\n{} forced spans decoded, every one exact under eval_expr ({} flagged malformed)",
        checked, run.malformed_annotations
    );
    Ok(())
}
