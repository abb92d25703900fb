//! Compute-cost accounting: inference ≈ 2·P·N FLOPs, training ≈ 6·P·N FLOPs
//! (forward plus twice the forward for the backward pass), with N the number
//! of token positions processed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComputeLedger {
    pub param_count: u64,
    pub train_tokens: u64,
    pub infer_tokens: u64,
}

impl ComputeLedger {
    pub fn new(param_count: u64) -> ComputeLedger {
        ComputeLedger {
            param_count,
            train_tokens: 0,
            infer_tokens: 0,
        }
    }

    pub fn add_train_tokens(&mut self, n: u64) {
        self.train_tokens += n;
    }

    pub fn add_infer_tokens(&mut self, n: u64) {
        self.infer_tokens += n;
    }

    pub fn training_flops(&self) -> f64 {
        6.0 * self.param_count as f64 * self.train_tokens as f64
    }

    pub fn inference_flops(&self) -> f64 {
        2.0 * self.param_count as f64 * self.infer_tokens as f64
    }

    pub fn total_flops(&self) -> f64 {
        self.training_flops() + self.inference_flops()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_application() {
        let mut l = ComputeLedger::new(1_000_000);
        l.add_infer_tokens(1000);
        assert_eq!(l.inference_flops(), 2e9);
        assert_eq!(l.training_flops(), 0.0);
        // one training pass over 1e5 tokens at P=1e6
        l.add_train_tokens(100_000);
        assert_eq!(l.training_flops(), 6e11);
        assert_eq!(l.total_flops(), 6e11 + 2e9);
    }

    #[test]
    fn zero_tokens_zero_flops() {
        let l = ComputeLedger::new(123);
        assert_eq!(l.total_flops(), 0.0);
    }

    #[test]
    fn additive_and_monotone() {
        let mut l = ComputeLedger::new(10);
        let mut prev = 0.0;
        for n in [5u64, 0, 17, 3] {
            l.add_train_tokens(n);
            l.add_infer_tokens(n * 2);
            assert!(l.total_flops() >= prev);
            prev = l.total_flops();
        }
        // order invariance: totals depend only on sums
        let mut l2 = ComputeLedger::new(10);
        l2.add_infer_tokens(50);
        l2.add_train_tokens(25);
        assert_eq!(l2.total_flops(), l.total_flops());
    }
}
