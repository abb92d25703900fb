//! Training objectives: supervised fine-tuning (negative log likelihood over
//! completion tokens, prompt masked) and DPO (logistic loss over implicit
//! rewards r = β·log π_θ/π_ref, sequence log-probs summed, not
//! length-normalized).

use crate::engine::model::{Acts, Model, PackedBatch};
use crate::engine::tokenizer::TokenId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("training diverged at step {step} (loss {loss})")]
    Divergence { step: usize, loss: f64 },
    #[error("empty training data")]
    EmptyData,
    #[error("invalid training profile: {0}")]
    Profile(String),
    #[error(transparent)]
    Engine(#[from] crate::engine::model::EngineError),
}

/// One SFT example; the loss covers `completion` tokens only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SftExample {
    pub prompt: Vec<TokenId>,
    pub completion: Vec<TokenId>,
}

impl SftExample {
    pub fn tokens(&self) -> Vec<TokenId> {
        let mut t = self.prompt.clone();
        t.extend_from_slice(&self.completion);
        t
    }
}

/// A tokenized preference pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPair {
    pub prompt: Vec<TokenId>,
    pub winning: Vec<TokenId>,
    pub losing: Vec<TokenId>,
}

/// Numerically stable log(1 + e^x); -log σ(z) = softplus(-z).
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Scalar core of the DPO objective for one pair.
pub fn dpo_pair_loss(beta: f64, lp_w: f64, lpref_w: f64, lp_l: f64, lpref_l: f64) -> f64 {
    let r_w = beta * (lp_w - lpref_w);
    let r_l = beta * (lp_l - lpref_l);
    softplus(-(r_w - r_l))
}

fn check_finite(loss: f64) -> Result<f64, TrainError> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(TrainError::NonFiniteLoss)
    }
}

struct SftForward {
    batch: PackedBatch,
    acts: Acts,
    /// per example: sum of completion-token log-probs
    logps: Vec<f64>,
    tokens: u64,
}

fn sft_forward(model: &Model, examples: &[&SftExample]) -> Result<SftForward, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let seqs: Vec<Vec<TokenId>> = examples.iter().map(|e| e.tokens()).collect();
    let batch = PackedBatch::pack(&seqs);
    let acts = model.forward(&batch)?;
    let v = model.cfg.vocab_size;
    let mut logps = Vec::with_capacity(examples.len());
    let mut tokens = 0u64;
    for (lane, ex) in examples.iter().enumerate() {
        let mut lp = 0.0;
        for (i, &tok) in ex.completion.iter().enumerate() {
            let pos = ex.prompt.len() + i - 1; // row predicting this token
            lp += acts.logprob(v, batch.idx(lane, pos), tok);
        }
        logps.push(lp);
        tokens += (ex.prompt.len() + ex.completion.len()) as u64;
    }
    Ok(SftForward {
        batch,
        acts,
        logps,
        tokens,
    })
}

/// Mean over the batch of −Σ_t log f(y_t | x, y_{<t}).
pub fn sft_loss(model: &Model, examples: &[&SftExample]) -> Result<f64, TrainError> {
    let fwd = sft_forward(model, examples)?;
    let loss = -fwd.logps.iter().sum::<f64>() / examples.len() as f64;
    check_finite(loss)
}

/// SFT loss plus its gradient (same layout as `model.params`). Also returns
/// the number of tokens forwarded, for the FLOPs ledger.
pub fn sft_loss_grad(
    model: &Model,
    examples: &[&SftExample],
) -> Result<(f64, Vec<f64>, u64), TrainError> {
    let fwd = sft_forward(model, examples)?;
    let loss = check_finite(-fwd.logps.iter().sum::<f64>() / examples.len() as f64)?;
    let v = model.cfg.vocab_size;
    let scale = 1.0 / examples.len() as f64;
    let mut d_logits = crate::engine::pool::take_zeroed(fwd.batch.n() * v);
    for (lane, ex) in examples.iter().enumerate() {
        for (i, &tok) in ex.completion.iter().enumerate() {
            let n = fwd.batch.idx(lane, ex.prompt.len() + i - 1);
            let row = &fwd.acts.logits[n * v..(n + 1) * v];
            let lse = fwd.acts.logsumexp[n];
            let drow = &mut d_logits[n * v..(n + 1) * v];
            for (dj, &lj) in drow.iter_mut().zip(row) {
                *dj += scale * (lj - lse).exp();
            }
            drow[tok as usize] -= scale;
        }
    }
    let mut grads = crate::engine::pool::take_zeroed(model.param_count());
    model.backward(&fwd.batch, &fwd.acts, &d_logits, &mut grads);
    crate::engine::pool::recycle(d_logits);
    Ok((loss, grads, fwd.tokens))
}

/// Sequence log-probs of every pair's winning and losing completion under
/// `model`, computed in one packed forward. Returns (lp_w, lp_l) per pair
/// and the token count.
pub fn pair_logprobs(
    model: &Model,
    pairs: &[&TokenizedPair],
) -> Result<(Vec<(f64, f64)>, u64), TrainError> {
    if pairs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let mut seqs = Vec::with_capacity(pairs.len() * 2);
    for p in pairs {
        let mut w = p.prompt.clone();
        w.extend_from_slice(&p.winning);
        seqs.push(w);
        let mut l = p.prompt.clone();
        l.extend_from_slice(&p.losing);
        seqs.push(l);
    }
    let batch = PackedBatch::pack(&seqs);
    let acts = model.forward(&batch)?;
    let v = model.cfg.vocab_size;
    let mut out = Vec::with_capacity(pairs.len());
    let mut tokens = 0u64;
    for (pi, p) in pairs.iter().enumerate() {
        let mut lps = [0.0; 2];
        for (side, completion) in [&p.winning, &p.losing].iter().enumerate() {
            let lane = pi * 2 + side;
            for (i, &tok) in completion.iter().enumerate() {
                let n = batch.idx(lane, p.prompt.len() + i - 1);
                lps[side] += acts.logprob(v, n, tok);
            }
            tokens += (p.prompt.len() + completion.len()) as u64;
        }
        out.push((lps[0], lps[1]));
    }
    Ok((out, tokens))
}

/// Mean over pairs of −log σ(r_w − r_l). The reference checkpoint is only
/// read, never differentiated.
pub fn dpo_loss(
    policy: &Model,
    reference: &Model,
    pairs: &[&TokenizedPair],
    beta: f64,
) -> Result<f64, TrainError> {
    let (pol, _) = pair_logprobs(policy, pairs)?;
    let (refs, _) = pair_logprobs(reference, pairs)?;
    let loss = pol
        .iter()
        .zip(&refs)
        .map(|(&(lw, ll), &(rw, rl))| dpo_pair_loss(beta, lw, rw, ll, rl))
        .sum::<f64>()
        / pairs.len() as f64;
    check_finite(loss)
}

/// DPO loss and policy gradient given precomputed reference log-probs
/// (`ref_logps[i] = (lp_ref_w, lp_ref_l)`), which are constants of the
/// optimization. Returns (loss, grads, policy tokens forwarded).
pub fn dpo_loss_grad(
    policy: &Model,
    pairs: &[&TokenizedPair],
    ref_logps: &[(f64, f64)],
    beta: f64,
) -> Result<(f64, Vec<f64>, u64), TrainError> {
    assert_eq!(pairs.len(), ref_logps.len());
    if pairs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let mut seqs = Vec::with_capacity(pairs.len() * 2);
    for p in pairs {
        let mut w = p.prompt.clone();
        w.extend_from_slice(&p.winning);
        seqs.push(w);
        let mut l = p.prompt.clone();
        l.extend_from_slice(&p.losing);
        seqs.push(l);
    }
    let batch = PackedBatch::pack(&seqs);
    let acts = policy.forward(&batch)?;
    let v = policy.cfg.vocab_size;

    let mut tokens = 0u64;
    let mut loss = 0.0;
    // coefficient dL/d(lp) per lane
    let mut lane_coeff = vec![0.0; batch.b];
    for (pi, p) in pairs.iter().enumerate() {
        let mut lps = [0.0; 2];
        for (side, completion) in [&p.winning, &p.losing].iter().enumerate() {
            let lane = pi * 2 + side;
            for (i, &tok) in completion.iter().enumerate() {
                let n = batch.idx(lane, p.prompt.len() + i - 1);
                lps[side] += acts.logprob(v, n, tok);
            }
            tokens += (p.prompt.len() + completion.len()) as u64;
        }
        let (lpref_w, lpref_l) = ref_logps[pi];
        let z = beta * ((lps[0] - lpref_w) - (lps[1] - lpref_l));
        loss += softplus(-z);
        // d softplus(-z)/dz = -σ(-z)
        let sig_neg = 1.0 / (1.0 + z.exp());
        let base = -sig_neg * beta / pairs.len() as f64;
        lane_coeff[pi * 2] = base; // d loss / d lp_w
        lane_coeff[pi * 2 + 1] = -base; // d loss / d lp_l
    }
    loss /= pairs.len() as f64;
    let loss = check_finite(loss)?;

    let mut d_logits = crate::engine::pool::take_zeroed(batch.n() * v);
    for (pi, p) in pairs.iter().enumerate() {
        for (side, completion) in [&p.winning, &p.losing].iter().enumerate() {
            let lane = pi * 2 + side;
            let coeff = lane_coeff[lane];
            for (i, &tok) in completion.iter().enumerate() {
                let n = batch.idx(lane, p.prompt.len() + i - 1);
                let row = &acts.logits[n * v..(n + 1) * v];
                let lse = acts.logsumexp[n];
                let drow = &mut d_logits[n * v..(n + 1) * v];
                // d lp / d logits = onehot - softmax
                for (dj, &lj) in drow.iter_mut().zip(row) {
                    *dj -= coeff * (lj - lse).exp();
                }
                drow[tok as usize] += coeff;
            }
        }
    }
    let mut grads = crate::engine::pool::take_zeroed(policy.param_count());
    policy.backward(&batch, &acts, &d_logits, &mut grads);
    crate::engine::pool::recycle(d_logits);
    Ok((loss, grads, tokens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::model::ModelConfig;

    fn micro_model(seed: u64) -> Model {
        Model::init(
            ModelConfig {
                n_layers: 1,
                d_model: 16,
                n_heads: 2,
                d_ff: 32,
                context: 32,
                vocab_size: 12,
            },
            seed,
        )
    }

    fn examples() -> Vec<SftExample> {
        vec![
            SftExample {
                prompt: vec![1, 4, 5],
                completion: vec![6, 7, 2],
            },
            SftExample {
                prompt: vec![1, 8],
                completion: vec![9, 2],
            },
            SftExample {
                prompt: vec![1, 10, 11, 4],
                completion: vec![5, 6, 7, 2],
            },
        ]
    }

    #[test]
    fn uniform_model_matches_closed_form() {
        let mut m = micro_model(3);
        m.params.fill(0.0);
        let exs = examples();
        let refs: Vec<&SftExample> = exs.iter().collect();
        let loss = sft_loss(&m, &refs).unwrap();
        let v = m.cfg.vocab_size as f64;
        let want: f64 = exs
            .iter()
            .map(|e| e.completion.len() as f64 * v.ln())
            .sum::<f64>()
            / exs.len() as f64;
        assert!((loss - want).abs() < 1e-9, "{loss} vs {want}");
    }

    #[test]
    fn batch_loss_is_mean_of_singletons() {
        let m = micro_model(5);
        let exs = examples();
        let refs: Vec<&SftExample> = exs.iter().collect();
        let batch_loss = sft_loss(&m, &refs).unwrap();
        let mean: f64 = exs
            .iter()
            .map(|e| sft_loss(&m, &[e]).unwrap())
            .sum::<f64>()
            / exs.len() as f64;
        assert!((batch_loss - mean).abs() < 1e-10);
    }

    #[test]
    fn batch_loss_is_permutation_invariant() {
        let m = micro_model(5);
        let exs = examples();
        let fwd: Vec<&SftExample> = exs.iter().collect();
        let rev: Vec<&SftExample> = exs.iter().rev().collect();
        let a = sft_loss(&m, &fwd).unwrap();
        let b = sft_loss(&m, &rev).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    fn pairs() -> Vec<TokenizedPair> {
        vec![
            TokenizedPair {
                prompt: vec![1, 4, 5],
                winning: vec![6, 7, 2],
                losing: vec![8, 2],
            },
            TokenizedPair {
                prompt: vec![1, 9],
                winning: vec![10, 2],
                losing: vec![11, 4, 2],
            },
        ]
    }

    #[test]
    fn dpo_identity_at_reference() {
        // policy == reference ⇒ every pair contributes exactly ln 2
        let m = micro_model(7);
        let ps = pairs();
        let refs: Vec<&TokenizedPair> = ps.iter().collect();
        let loss = dpo_loss(&m, &m.clone(), &refs, 0.1).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() <= 1e-9);
    }

    #[test]
    fn dpo_scalar_example() {
        // β=0.1, log-probs (−1.0, −1.2) winning and (−2.0, −1.5) losing
        // r_w = 0.02, r_l = −0.05, loss = −ln σ(0.07)
        let loss = dpo_pair_loss(0.1, -1.0, -1.2, -2.0, -1.5);
        assert!((loss - 0.658759).abs() < 1e-6, "{loss}");
        // independent route: softplus(-z) identity
        let z: f64 = 0.07;
        assert!((loss - (1.0 + (-z).exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn dpo_monotone_in_beta_when_winning() {
        // r_w > r_l: doubling β doubles the margin and strictly lowers loss
        let l1 = dpo_pair_loss(0.1, -1.0, -1.2, -2.0, -1.5);
        let l2 = dpo_pair_loss(0.2, -1.0, -1.2, -2.0, -1.5);
        assert!(l2 < l1);
    }

    #[test]
    fn dpo_loss_positive_and_decreasing_in_margin() {
        for z in [-2.0, -0.5, 0.0, 0.5, 2.0, 10.0] {
            assert!(softplus(-z) > 0.0);
        }
        assert!(softplus(-1.0) < softplus(-0.5));
    }

    #[test]
    fn nonfinite_loss_rejected() {
        let mut m = micro_model(2);
        m.params[0] = f64::NAN;
        let exs = examples();
        let refs: Vec<&SftExample> = exs.iter().collect();
        assert!(matches!(
            sft_loss(&m, &refs),
            Err(TrainError::NonFiniteLoss)
        ));
    }
}
