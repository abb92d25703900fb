//! AdamW with linear warm-up and cosine decay, global-norm gradient
//! clipping, decoupled weight decay. Deterministic for a fixed seed and data
//! order.

use crate::engine::model::Model;
use crate::training::loss::TrainError;
use crate::training::profile::TrainProfile;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Anything optimizable: produces a loss and gradient for a batch of item
/// indices.
pub trait Objective {
    fn len(&self) -> usize;
    /// Returns (loss, gradient, tokens forwarded).
    fn loss_grad(&self, model: &Model, idx: &[usize]) -> Result<(f64, Vec<f64>, u64), TrainError>;
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: Model,
    pub curve: Vec<CurvePoint>,
    /// token positions forwarded through loss_grad (for the 6·P·N ledger)
    pub tokens_processed: u64,
}

impl TrainRun {
    pub fn final_loss(&self) -> Option<f64> {
        self.curve.last().map(|c| c.loss)
    }
}

/// Learning rate at 0-based step `t` of `total`: linear warm-up for
/// `warmup` steps, then cosine decay to zero.
pub fn lr_at(profile: &TrainProfile, t: usize, total: usize) -> f64 {
    let warmup = ((total as f64) * profile.warmup_ratio).round() as usize;
    if total == 0 {
        return 0.0;
    }
    if t < warmup {
        profile.learning_rate * (t + 1) as f64 / warmup as f64
    } else if total == warmup {
        profile.learning_rate
    } else {
        let progress = (t - warmup) as f64 / (total - warmup) as f64;
        profile.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
    }
}

/// Clip the gradient to a global L2 norm of `max_norm`; returns the
/// pre-clip norm.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= s;
        }
    }
    norm
}

/// Train `model` on `objective` under `profile`. Fresh optimizer state;
/// batches are drawn by shuffling item indices each epoch with a seeded
/// stream.
pub fn optimize<O: Objective>(
    model: &Model,
    objective: &O,
    profile: &TrainProfile,
    seed: u64,
) -> Result<TrainRun, TrainError> {
    profile.validate().map_err(TrainError::Profile)?;
    if objective.len() == 0 {
        return Err(TrainError::EmptyData);
    }
    let n = objective.len();
    let steps_per_epoch = n.div_ceil(profile.batch_size);
    let total_steps = match (profile.epochs, profile.max_steps) {
        (Some(e), None) => e * steps_per_epoch,
        (None, Some(s)) => s,
        _ => unreachable!("validated above"),
    };

    let mut model = model.clone();
    let mut m = vec![0.0; model.param_count()];
    let mut v = vec![0.0; model.param_count()];
    let mut curve = Vec::with_capacity(total_steps);
    let mut tokens = 0u64;

    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = 0usize;
    let mut epoch = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    for step in 0..total_steps {
        if cursor >= n {
            cursor = 0;
            epoch += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(epoch));
            order.shuffle(&mut rng);
        }
        let end = (cursor + profile.batch_size).min(n);
        let idx = &order[cursor..end];
        cursor = end;

        let (loss, mut grads, batch_tokens) = objective.loss_grad(&model, idx)?;
        if !loss.is_finite() {
            return Err(TrainError::Divergence { step, loss });
        }
        tokens += batch_tokens;
        clip_global_norm(&mut grads, profile.grad_clip);

        let lr = lr_at(profile, step, total_steps);
        let t = (step + 1) as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        for i in 0..model.params.len() {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * grads[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * grads[i] * grads[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            model.params[i] -=
                lr * (mhat / (vhat.sqrt() + ADAM_EPS) + profile.weight_decay * model.params[i]);
        }
        crate::engine::pool::recycle(grads);
        curve.push(CurvePoint { step, loss, lr });
    }

    Ok(TrainRun {
        model,
        curve,
        tokens_processed: tokens,
    })
}

/// Loss curves go to disk as CSV with columns step,loss,lr.
pub fn write_curve_csv(curve: &[CurvePoint], path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = String::from("step,loss,lr\n");
    for c in curve {
        out.push_str(&format!("{},{},{}\n", c.step, c.loss, c.lr));
    }
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::model::ModelConfig;
    use crate::training::loss::{sft_loss, sft_loss_grad, SftExample};

    struct SftObj(Vec<SftExample>);
    impl Objective for SftObj {
        fn len(&self) -> usize {
            self.0.len()
        }
        fn loss_grad(
            &self,
            model: &Model,
            idx: &[usize],
        ) -> Result<(f64, Vec<f64>, u64), TrainError> {
            let batch: Vec<&SftExample> = idx.iter().map(|&i| &self.0[i]).collect();
            sft_loss_grad(model, &batch)
        }
    }

    fn setup() -> (Model, SftObj) {
        let model = Model::init(
            ModelConfig {
                n_layers: 1,
                d_model: 16,
                n_heads: 2,
                d_ff: 32,
                context: 32,
                vocab_size: 12,
            },
            11,
        );
        let examples = (0..12)
            .map(|i| SftExample {
                prompt: vec![1, 4 + (i % 4) as u32],
                completion: vec![5 + (i % 6) as u32, 2],
            })
            .collect();
        (model, SftObj(examples))
    }

    fn prof(steps: usize, lr: f64) -> TrainProfile {
        TrainProfile {
            batch_size: 4,
            epochs: None,
            max_steps: Some(steps),
            learning_rate: lr,
            warmup_ratio: 0.1,
            weight_decay: 0.01,
            grad_clip: 1.0,
            schedule: Default::default(),
        }
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (model, obj) = setup();
        let run = optimize(&model, &obj, &prof(5, 0.0), 1).unwrap();
        assert_eq!(run.model.params, model.params);
    }

    #[test]
    fn loss_descends_on_toy_data() {
        let (model, obj) = setup();
        let run = optimize(&model, &obj, &prof(60, 3e-3), 1).unwrap();
        let refs: Vec<&SftExample> = obj.0.iter().collect();
        let before = sft_loss(&model, &refs).unwrap();
        let after = sft_loss(&run.model, &refs).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (model, obj) = setup();
        let a = optimize(&model, &obj, &prof(20, 1e-3), 9).unwrap();
        let b = optimize(&model, &obj, &prof(20, 1e-3), 9).unwrap();
        assert_eq!(a.model.params, b.model.params);
        assert_eq!(a.curve.len(), b.curve.len());
        for (x, y) in a.curve.iter().zip(&b.curve) {
            assert_eq!(x.loss, y.loss);
        }
        let c = optimize(&model, &obj, &prof(20, 1e-3), 10).unwrap();
        assert_ne!(a.model.params, c.model.params);
    }

    #[test]
    fn schedule_shape() {
        let p = prof(100, 1.0);
        // warm-up: 10 steps, linearly rising
        assert!((lr_at(&p, 0, 100) - 0.1).abs() < 1e-12);
        assert!((lr_at(&p, 9, 100) - 1.0).abs() < 1e-12);
        // cosine decay afterwards, ending near zero
        assert!(lr_at(&p, 50, 100) < 1.0);
        assert!(lr_at(&p, 99, 100) < 0.01);
        for t in 10..99 {
            assert!(lr_at(&p, t, 100) >= lr_at(&p, t + 1, 100));
        }
    }

    #[test]
    fn clipping_respects_global_norm() {
        let mut g = vec![3.0, 4.0];
        let pre = clip_global_norm(&mut g, 1.0);
        assert!((pre - 5.0).abs() < 1e-12);
        let post = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert!((post - 1.0).abs() < 1e-12);
        // short gradients untouched
        let mut g2 = vec![0.3, 0.4];
        clip_global_norm(&mut g2, 1.0);
        assert_eq!(g2, vec![0.3, 0.4]);
    }

    #[test]
    fn epochs_mode_counts_steps() {
        let (model, obj) = setup();
        let mut p = prof(0, 1e-3);
        p.max_steps = None;
        p.epochs = Some(2); // 12 examples / batch 4 = 3 steps per epoch
        let run = optimize(&model, &obj, &p, 3).unwrap();
        assert_eq!(run.curve.len(), 6);
    }

    #[test]
    fn divergence_detected() {
        let (mut model, obj) = setup();
        model.params[0] = f64::NAN;
        assert!(optimize(&model, &obj, &prof(3, 1e-3), 1).is_err());
    }
}
