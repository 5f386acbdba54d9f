use crate::scalar::Scalar;

use super::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OptimKind {
    #[default]
    Adam,
    Sgd,
}

impl std::str::FromStr for OptimKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adam" => Ok(OptimKind::Adam),
            "sgd" => Ok(OptimKind::Sgd),
            other => Err(format!("unknown optimizer '{other}' (expected adam|sgd)")),
        }
    }
}

/// Adam (β₁=0.9, β₂=0.999, ε=1e-8, bias-corrected) or plain SGD over a fixed
/// group of parameter tensors. One instance per (parameter group, objective):
/// moment buffers are keyed by position, so `step` must always be called with
/// the same parameters in the same order.
pub struct Optimizer<S> {
    kind: OptimKind,
    lr: S,
    t: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl<S: Scalar> Optimizer<S> {
    pub fn new(kind: OptimKind, lr: S) -> Self {
        assert!(lr > S::zero(), "learning rate must be positive");
        Optimizer { kind, lr, t: 0, m: Vec::new(), v: Vec::new() }
    }

    /// Apply one update in place. `grads[i]` must be the gradient for
    /// `params[i]`; a missing or mis-shaped gradient is a usage error.
    pub fn step(&mut self, params: &mut [&mut Tensor<S>], grads: &[Option<&Tensor<S>>]) {
        assert_eq!(params.len(), grads.len(), "one gradient per parameter");
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), params.len(), "optimizer bound to a different parameter group");
        self.t += 1;

        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let g = g.unwrap_or_else(|| panic!("missing gradient for parameter {i}"));
            assert_eq!(p.shape(), g.shape(), "gradient shape mismatch for parameter {i}");
            match self.kind {
                OptimKind::Sgd => {
                    for (pv, &gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv = *pv - self.lr * gv;
                    }
                }
                OptimKind::Adam => {
                    let (b1, b2, eps) = (S::c(BETA1), S::c(BETA2), S::c(EPS));
                    let corr1 = S::one() - S::c(BETA1.powi(self.t as i32));
                    let corr2 = S::one() - S::c(BETA2.powi(self.t as i32));
                    let m = self.m[i].data_mut();
                    let v = self.v[i].data_mut();
                    for ((pv, &gv), (mv, vv)) in
                        p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut().zip(v.iter_mut()))
                    {
                        *mv = b1 * *mv + (S::one() - b1) * gv;
                        *vv = b2 * *vv + (S::one() - b2) * gv * gv;
                        let mhat = *mv / corr1;
                        let vhat = *vv / corr2;
                        *pv = *pv - self.lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
            debug_assert!(p.is_finite(), "parameter {i} became non-finite");
        }
    }

    pub fn kind(&self) -> OptimKind {
        self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64) -> Tensor<f64> {
        Tensor::scalar(v)
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // grad 1, fresh state, lr 0.1: bias correction makes the first step
        // lr·g/(|g|+ε) ≈ 0.1
        let mut p = scalar_param(1.0);
        let g = scalar_param(1.0);
        let mut opt = Optimizer::new(OptimKind::Adam, 0.1);
        opt.step(&mut [&mut p], &[Some(&g)]);
        assert!((p.item() - 0.9).abs() < 1e-8, "got {}", p.item());
    }

    #[test]
    fn adam_matches_hand_computed_second_step() {
        // Two steps with constant grad 1, lr 0.1: replicate the update rule.
        let mut p = scalar_param(0.0);
        let g = scalar_param(1.0);
        let mut opt = Optimizer::new(OptimKind::Adam, 0.1);
        opt.step(&mut [&mut p], &[Some(&g)]);
        opt.step(&mut [&mut p], &[Some(&g)]);

        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8f64, 0.1f64);
        let mut m = 0.0f64;
        let mut v = 0.0f64;
        let mut expect = 0.0f64;
        for t in 1..=2i32 {
            m = b1 * m + (1.0 - b1);
            v = b2 * v + (1.0 - b2);
            let mhat = m / (1.0 - b1.powi(t));
            let vhat = v / (1.0 - b2.powi(t));
            expect -= lr * mhat / (vhat.sqrt() + eps);
        }
        assert!((p.item() - expect).abs() < 1e-12, "got {} want {}", p.item(), expect);
    }

    #[test]
    fn identical_gradients_move_monotonically() {
        let mut p = scalar_param(5.0);
        let g = scalar_param(2.0);
        let mut opt = Optimizer::new(OptimKind::Adam, 0.01);
        let mut last = p.item();
        for _ in 0..10 {
            opt.step(&mut [&mut p], &[Some(&g)]);
            assert!(p.item() < last, "positive grad must keep decreasing the parameter");
            last = p.item();
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = scalar_param(1.25);
        let g = scalar_param(0.0);
        let mut opt = Optimizer::new(OptimKind::Adam, 0.1);
        opt.step(&mut [&mut p], &[Some(&g)]);
        assert_eq!(p.item(), 1.25);
        let mut opt = Optimizer::new(OptimKind::Sgd, 0.1);
        opt.step(&mut [&mut p], &[Some(&g)]);
        assert_eq!(p.item(), 1.25);
    }

    #[test]
    fn sgd_applies_plain_update() {
        let mut p = scalar_param(1.0);
        let g = scalar_param(0.5);
        let mut opt = Optimizer::new(OptimKind::Sgd, 0.2);
        opt.step(&mut [&mut p], &[Some(&g)]);
        assert!((p.item() - 0.9).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "missing gradient for parameter 0")]
    fn missing_gradient_is_a_usage_error() {
        let mut p = scalar_param(1.0);
        let mut opt = Optimizer::new(OptimKind::Adam, 0.1);
        opt.step(&mut [&mut p], &[None]);
    }
}
