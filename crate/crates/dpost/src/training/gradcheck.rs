//! Central finite differences over the flat parameter vector. This is the
//! independent oracle for the analytic gradients: it only ever calls the
//! loss forward, never `Model::backward`.

use crate::engine::model::Model;

pub const DEFAULT_EPSILON: f64 = 1e-4;

/// ∂f/∂θ_i ≈ (f(θ+εe_i) − f(θ−εe_i)) / 2ε for every parameter.
pub fn central_difference_grad(
    model: &Model,
    loss: impl Fn(&Model) -> f64,
    epsilon: f64,
) -> Vec<f64> {
    let mut work = model.clone();
    let mut grad = vec![0.0; model.param_count()];
    for i in 0..model.param_count() {
        let orig = work.params[i];
        work.params[i] = orig + epsilon;
        let up = loss(&work);
        work.params[i] = orig - epsilon;
        let down = loss(&work);
        work.params[i] = orig;
        grad[i] = (up - down) / (2.0 * epsilon);
    }
    grad
}

/// ‖a − b‖₂ / max(‖b‖₂, floor): the relative error metric used by the
/// gradient-fidelity checks.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        norm += y * y;
    }
    diff.sqrt() / norm.sqrt().max(1e-12)
}
