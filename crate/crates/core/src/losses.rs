//! The scalar objectives: task cross-entropy, attribute (fairness)
//! cross-entropy, sliced-Wasserstein alignment, and their weighted total.
//!
//! All of them record onto a caller-supplied tape through a model's
//! [`ModelVars`], so each training step controls which parameter groups the
//! gradients reach.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{CostOrder, Tape, Tensor, Var};
use crate::model::{FairModel, ModelVars};
use crate::scalar::Scalar;

/// Coefficients of the alternating objective: α on the task term, β on the
/// attribute terms (source and target alike), γ on the alignment term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights<S> {
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
}

impl<S: Scalar> Default for LossWeights<S> {
    fn default() -> Self {
        LossWeights { alpha: S::one(), beta: S::one(), gamma: S::one() }
    }
}

impl<S: Scalar> LossWeights<S> {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= S::zero()) {
                return Err(format!("loss weight {name} must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// Closed-form squared 2-Wasserstein between two equal-size empirical 1D
/// distributions given in ascending order: (1/B)·Σ (pᵢ − qᵢ)².
pub fn wd1_squared<S: Scalar>(p: &[S], q: &[S]) -> S {
    assert_eq!(p.len(), q.len(), "wd1 length mismatch: {} vs {}", p.len(), q.len());
    assert!(!p.is_empty(), "wd1 on empty distributions");
    debug_assert!(is_ascending(p) && is_ascending(q), "wd1 inputs must be sorted ascending");
    let sum: S = p.iter().zip(q).map(|(&a, &b)| (a - b) * (a - b)).sum();
    sum / S::c(p.len() as f64)
}

/// Order-1 variant: (1/B)·Σ |pᵢ − qᵢ| over sorted inputs.
pub fn wd1_abs<S: Scalar>(p: &[S], q: &[S]) -> S {
    assert_eq!(p.len(), q.len(), "wd1 length mismatch: {} vs {}", p.len(), q.len());
    assert!(!p.is_empty(), "wd1 on empty distributions");
    debug_assert!(is_ascending(p) && is_ascending(q), "wd1 inputs must be sorted ascending");
    let sum: S = p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum();
    sum / S::c(p.len() as f64)
}

fn is_ascending<S: Scalar>(v: &[S]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Cross-entropy of the label head on an encoded [x | a] batch against y.
pub fn task_loss<S: Scalar>(
    tape: &mut Tape<S>,
    model: &FairModel<S>,
    vars: &ModelVars,
    xa: Var,
    y: &[u8],
) -> Var {
    let latent = model.encode_on(tape, vars, xa);
    let logits = model.label_logits_on(tape, vars, latent);
    tape.softmax_cross_entropy(logits, y)
}

/// Cross-entropy of the attribute head against a; labels are never needed,
/// so this is computable on source and target batches alike.
pub fn fairness_loss<S: Scalar>(
    tape: &mut Tape<S>,
    model: &FairModel<S>,
    vars: &ModelVars,
    xa: Var,
    a: &[u8],
) -> Var {
    let latent = model.encode_on(tape, vars, xa);
    let logits = model.attr_logits_on(tape, vars, latent);
    tape.softmax_cross_entropy(logits, a)
}

/// Draw K directions uniformly on the unit sphere in ℝ^z (z x K, one
/// direction per column).
pub fn sphere_directions<S: Scalar>(z: usize, k: usize, rng: &mut ChaCha8Rng) -> Tensor<S> {
    assert!(k >= 1, "projection count K must be >= 1");
    let mut out = Tensor::zeros(z, k);
    for c in 0..k {
        let mut norm2 = 0.0f64;
        let mut col = vec![0.0f64; z];
        // resample the (measure-zero) all-zeros draw
        while norm2 == 0.0 {
            for v in &mut col {
                *v = rng.sample(StandardNormal);
                norm2 += *v * *v;
            }
        }
        let norm = norm2.sqrt();
        for (r, v) in col.iter().enumerate() {
            out.set(r, c, S::c(v / norm));
        }
    }
    out
}

/// Sliced-Wasserstein alignment loss between the encoded source and target
/// batches. Projects both latent batches onto `k` fresh random directions and
/// averages the per-slice 1D transport cost; unequal batch sizes are
/// equalized by subsampling the larger batch (without replacement) first.
/// Gradients flow into the encoder through both batches.
pub fn swd_loss<S: Scalar>(
    tape: &mut Tape<S>,
    model: &FairModel<S>,
    vars: &ModelVars,
    xa_src: &Tensor<S>,
    xa_tar: &Tensor<S>,
    k: usize,
    cost: CostOrder,
    rng: &mut ChaCha8Rng,
) -> Var {
    assert!(k >= 1, "projection count K must be >= 1");
    assert!(xa_src.rows() >= 1 && xa_tar.rows() >= 1, "swd_loss: empty batch");
    let b = xa_src.rows().min(xa_tar.rows());
    let xs = subsample_rows(xa_src, b, rng);
    let xt = subsample_rows(xa_tar, b, rng);

    let dirs = sphere_directions(model.latent_width(), k, rng);
    let dirs = tape.constant(dirs);
    let vs = tape.constant(xs);
    let vt = tape.constant(xt);
    let zs = model.encode_on(tape, vars, vs);
    let zt = model.encode_on(tape, vars, vt);
    let ps = tape.matmul(zs, dirs);
    let pt = tape.matmul(zt, dirs);
    tape.sliced_cost(ps, pt, cost)
}

fn subsample_rows<S: Scalar>(x: &Tensor<S>, b: usize, rng: &mut ChaCha8Rng) -> Tensor<S> {
    if x.rows() == b {
        return x.clone();
    }
    // partial Fisher-Yates: first b entries of a uniform permutation
    let mut idx: Vec<usize> = (0..x.rows()).collect();
    for i in 0..b {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    let mut out = Tensor::zeros(b, x.cols());
    for (r, &src) in idx[..b].iter().enumerate() {
        for c in 0..x.cols() {
            out.set(r, c, x.get(src, c));
        }
    }
    out
}

/// α·L_task + β·(L_fair_src + L_fair_tar) + γ·L_swd on the current tape.
///
/// The trainer never backpropagates this joint sum — the alternating schedule
/// applies each part with its own sign and parameter group — but the combined
/// magnitude is a useful diagnostic.
pub fn total_loss<S: Scalar>(
    tape: &mut Tape<S>,
    weights: &LossWeights<S>,
    task: Var,
    fair_src: Var,
    fair_tar: Var,
    swd: Var,
) -> Var {
    tape.weighted_sum(&[
        (task, weights.alpha),
        (fair_src, weights.beta),
        (fair_tar, weights.beta),
        (swd, weights.gamma),
    ])
}
