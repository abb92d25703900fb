//! Autoregressive decoding: greedy and temperature sampling, independent
//! batch lanes with per-sequence seeded RNG streams, and an interceptor hook
//! that lets the calculator override proposed tokens.

use crate::engine::model::{lse, Model};
use crate::engine::tokenizer::{TokenId, Tokenizer, EOS};
use crate::engine::kernels::{add_assign, mm_acc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Sampling configuration. Temperature 0 means greedy decoding with ties
/// broken toward the lowest token id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub max_new_tokens: usize,
    pub seed: u64,
    pub calculator_enabled: bool,
    /// decode exactly `max_new_tokens` per lane, never stopping at EOS
    /// (throughput benchmarking)
    #[serde(default)]
    pub ignore_eos: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            temperature: 0.7,
            max_new_tokens: 300,
            seed: 0,
            calculator_enabled: true,
            ignore_eos: false,
        }
    }
}

/// Token-stream hook: each proposed token passes through `intercept`, and
/// the returned token is what the lane actually emits.
pub trait Interceptor {
    fn begin(&mut self, lanes: usize);
    fn intercept(&mut self, lane: usize, proposal: TokenId) -> TokenId;
    /// Called when a lane stops (EOS or budget), so unclosed state can be
    /// flagged.
    fn finish_lane(&mut self, lane: usize);
}

/// Result of decoding one lane.
#[derive(Debug, Clone, PartialEq)]
pub struct GenOutput {
    /// Emitted tokens, excluding the terminating EOS.
    pub tokens: Vec<TokenId>,
    pub ended_with_eos: bool,
    /// Prompt length plus emitted tokens: every position the model forwarded.
    pub tokens_processed: usize,
}

impl GenOutput {
    pub fn text(&self, tokenizer: &Tokenizer) -> String {
        tokenizer.decode(&self.tokens)
    }
}

/// Derive a per-sequence RNG stream from the experiment seed and a stable
/// stream id, so sampling is independent of batch composition.
pub fn stream_seed(master: u64, stream_id: u64) -> u64 {
    // splitmix64 over the combined value
    let mut z = master ^ stream_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Lane {
    kv: Vec<(Vec<f64>, Vec<f64>)>, // per layer: k,v rows [t][d]
    pos: usize,
    last: TokenId,
    prompt: Vec<TokenId>,
    emitted: Vec<TokenId>,
    rng: ChaCha8Rng,
    finished: bool,
    ended_with_eos: bool,
    budget: usize,
}

/// Decode a batch of prompts in lockstep. `stream_ids[i]` seeds lane `i`'s
/// sampling stream via [`stream_seed`], making per-lane output independent
/// of which other prompts share the batch.
pub fn generate_batch(
    model: &Model,
    prompts: &[Vec<TokenId>],
    cfg: &SamplingConfig,
    stream_ids: &[u64],
    mut interceptor: Option<&mut dyn Interceptor>,
) -> Vec<GenOutput> {
    assert_eq!(prompts.len(), stream_ids.len());
    let n_layers = model.cfg.n_layers;
    let context = model.cfg.context;
    let mut lanes: Vec<Lane> = prompts
        .iter()
        .zip(stream_ids)
        .map(|(p, &sid)| {
            assert!(!p.is_empty(), "prompt must be non-empty");
            let budget = cfg.max_new_tokens.min(context.saturating_sub(p.len()));
            Lane {
                kv: (0..n_layers).map(|_| (Vec::new(), Vec::new())).collect(),
                pos: 0,
                last: p[0],
                prompt: p.clone(),
                emitted: Vec::new(),
                rng: ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, sid)),
                finished: budget == 0,
                ended_with_eos: false,
                budget,
            }
        })
        .collect();
    if let Some(ic) = interceptor.as_deref_mut() {
        ic.begin(lanes.len());
    }

    // prefill: feed prompt tokens; the last one produces the first proposal
    let max_prompt = prompts.iter().map(Vec::len).max().unwrap_or(0);
    for step in 0..max_prompt.saturating_sub(1) {
        let active: Vec<usize> = (0..lanes.len())
            .filter(|&i| !lanes[i].finished && step + 1 < lanes[i].prompt.len())
            .collect();
        if active.is_empty() {
            continue;
        }
        let _ = forward_step(model, &mut lanes, &active);
        for &i in &active {
            let next = lanes[i].prompt[lanes[i].pos]; // pos advanced by forward_step
            lanes[i].last = next;
        }
    }

    loop {
        let active: Vec<usize> = (0..lanes.len()).filter(|&i| !lanes[i].finished).collect();
        if active.is_empty() {
            break;
        }
        let logits = forward_step(model, &mut lanes, &active); // [lane-in-active][V]
        for (ai, &i) in active.iter().enumerate() {
            let lane = &mut lanes[i];
            let row = &logits[ai * model.cfg.vocab_size..(ai + 1) * model.cfg.vocab_size];
            let proposal = sample_token(row, cfg.temperature, &mut lane.rng);
            let emitted = match interceptor.as_deref_mut() {
                Some(ic) if cfg.calculator_enabled => ic.intercept(i, proposal),
                _ => proposal,
            };
            if emitted == EOS && !cfg.ignore_eos {
                lane.finished = true;
                lane.ended_with_eos = true;
            } else {
                lane.emitted.push(emitted);
                lane.last = emitted;
                if lane.emitted.len() >= lane.budget {
                    lane.finished = true;
                }
            }
            if lane.finished {
                if let Some(ic) = interceptor.as_deref_mut() {
                    ic.finish_lane(i);
                }
            }
        }
    }

    lanes
        .into_iter()
        .map(|l| GenOutput {
            tokens_processed: l.prompt.len() + l.emitted.len(),
            tokens: l.emitted,
            ended_with_eos: l.ended_with_eos,
        })
        .collect()
}

/// Decode a single prompt (lane semantics identical to a batch of one).
pub fn generate(
    model: &Model,
    prompt: &[TokenId],
    cfg: &SamplingConfig,
    stream_id: u64,
    interceptor: Option<&mut dyn Interceptor>,
) -> GenOutput {
    generate_batch(model, &[prompt.to_vec()], cfg, &[stream_id], interceptor)
        .pop()
        .unwrap()
}

/// Advance each active lane by one token (`lane.last` at `lane.pos`) and
/// return next-token logits per active lane, position-major.
fn forward_step(model: &Model, lanes: &mut [Lane], active: &[usize]) -> Vec<f64> {
    let cfg = &model.cfg;
    let (d, f, v, h, dh) = (
        cfg.d_model,
        cfg.d_ff,
        cfg.vocab_size,
        cfg.n_heads,
        cfg.head_dim(),
    );
    let ba = active.len();
    let scale = 1.0 / (dh as f64).sqrt();
    let wte = model.param("wte");
    let wpe = model.param("wpe");

    // x[d][ba]
    let mut x = vec![0.0; d * ba];
    for (ai, &i) in active.iter().enumerate() {
        let tok = lanes[i].last as usize;
        let pos = lanes[i].pos;
        for j in 0..d {
            x[j * ba + ai] = wte[tok * d + j] + wpe[pos * d + j];
        }
    }

    let mut scratch_q = vec![0.0; d * ba];
    let mut scratch_k = vec![0.0; d * ba];
    let mut scratch_v = vec![0.0; d * ba];
    for l in 0..cfg.n_layers {
        let (_, xn1) = rms_cols(&x, model.param(&format!("l{l}.ln1")), d, ba);
        scratch_q.fill(0.0);
        scratch_k.fill(0.0);
        scratch_v.fill(0.0);
        mm_acc(&mut scratch_q, model.param(&format!("l{l}.wq")), &xn1, d, d, ba);
        mm_acc(&mut scratch_k, model.param(&format!("l{l}.wk")), &xn1, d, d, ba);
        mm_acc(&mut scratch_v, model.param(&format!("l{l}.wv")), &xn1, d, d, ba);

        let mut ho = vec![0.0; d * ba];
        for (ai, &i) in active.iter().enumerate() {
            let lane = &mut lanes[i];
            let (kcache, vcache) = &mut lane.kv[l];
            for j in 0..d {
                kcache.push(scratch_k[j * ba + ai]);
                vcache.push(scratch_v[j * ba + ai]);
            }
            let t_len = kcache.len() / d;
            for hi in 0..h {
                let hoff = hi * dh;
                let mut scores = Vec::with_capacity(t_len);
                let mut maxs = f64::NEG_INFINITY;
                for tj in 0..t_len {
                    let mut s = 0.0;
                    let krow = &kcache[tj * d + hoff..tj * d + hoff + dh];
                    for (jj, kk) in krow.iter().enumerate() {
                        s += scratch_q[(hoff + jj) * ba + ai] * kk;
                    }
                    s *= scale;
                    maxs = maxs.max(s);
                    scores.push(s);
                }
                let mut denom = 0.0;
                for s in scores.iter_mut() {
                    *s = (*s - maxs).exp();
                    denom += *s;
                }
                for s in scores.iter_mut() {
                    *s /= denom;
                }
                for (tj, w) in scores.iter().enumerate() {
                    let vrow = &vcache[tj * d + hoff..tj * d + hoff + dh];
                    for (jj, vv) in vrow.iter().enumerate() {
                        ho[(hoff + jj) * ba + ai] += w * vv;
                    }
                }
            }
        }

        let mut attn_out = vec![0.0; d * ba];
        mm_acc(&mut attn_out, model.param(&format!("l{l}.wo")), &ho, d, d, ba);
        add_assign(&mut x, &attn_out);

        let (_, xn2) = rms_cols(&x, model.param(&format!("l{l}.ln2")), d, ba);
        let mut h1 = vec![0.0; f * ba];
        mm_acc(&mut h1, model.param(&format!("l{l}.fc1")), &xn2, f, d, ba);
        for a in h1.iter_mut() {
            *a = if *a > 0.0 { *a * *a } else { 0.0 };
        }
        let mut mlp_out = vec![0.0; d * ba];
        mm_acc(&mut mlp_out, model.param(&format!("l{l}.fc2")), &h1, d, f, ba);
        add_assign(&mut x, &mlp_out);
    }

    let (_, xnf) = rms_cols(&x, model.param("lnf"), d, ba);
    let mut logits_fm = vec![0.0; v * ba];
    mm_acc(&mut logits_fm, wte, &xnf, v, d, ba);
    let mut logits = vec![0.0; ba * v];
    for vi in 0..v {
        for ai in 0..ba {
            logits[ai * v + vi] = logits_fm[vi * ba + ai];
        }
    }
    for &i in active {
        lanes[i].pos += 1;
    }
    logits
}

fn rms_cols(x: &[f64], gain: &[f64], d: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut ms = vec![0.0; n];
    for j in 0..d {
        for ni in 0..n {
            let xv = x[j * n + ni];
            ms[ni] += xv * xv;
        }
    }
    let rinv: Vec<f64> = ms
        .iter()
        .map(|m| 1.0 / (m / d as f64 + 1e-8).sqrt())
        .collect();
    let mut y = vec![0.0; d * n];
    for j in 0..d {
        for ni in 0..n {
            y[j * n + ni] = gain[j] * x[j * n + ni] * rinv[ni];
        }
    }
    (rinv, y)
}

/// Sample from the temperature-scaled distribution (or argmax when
/// temperature is 0; ties break toward the lowest token id).
fn sample_token(logits: &[f64], temperature: f64, rng: &mut ChaCha8Rng) -> TokenId {
    if temperature <= 0.0 {
        let mut best = 0usize;
        for (i, &x) in logits.iter().enumerate() {
            if x > logits[best] {
                best = i;
            }
        }
        return best as TokenId;
    }
    let scaled: Vec<f64> = logits.iter().map(|&x| x / temperature).collect();
    let z = lse(&scaled);
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, &s) in scaled.iter().enumerate() {
        acc += (s - z).exp();
        if u < acc {
            return i as TokenId;
        }
    }
    (scaled.len() - 1) as TokenId
}

/// Sum of completion-token log probabilities given the prompt (Σ_t log
/// f(y_t | x, y_{<t})). Empty completion scores 0.
pub fn sequence_logprob(
    model: &Model,
    prompt: &[TokenId],
    completion: &[TokenId],
) -> Result<f64, crate::engine::model::EngineError> {
    if completion.is_empty() {
        return Ok(0.0);
    }
    let mut full = prompt.to_vec();
    full.extend_from_slice(completion);
    let batch = crate::engine::model::PackedBatch::pack(&[full.clone()]);
    let acts = model.forward(&batch)?;
    let v = model.cfg.vocab_size;
    let mut total = 0.0;
    for (i, &tok) in completion.iter().enumerate() {
        let n = prompt.len() + i - 1; // row predicting position prompt+i
        total += acts.logprob(v, n, tok);
    }
    Ok(total)
}
