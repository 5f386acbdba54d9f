use crate::scalar::Scalar;

use super::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Ground cost applied to the per-slice sorted differences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CostOrder {
    /// Mean squared difference (closed-form squared 2-Wasserstein in 1D).
    #[default]
    Squared,
    /// Mean absolute difference (order-1 cost).
    Absolute,
}

enum Node<S> {
    Leaf,
    Matmul(Var, Var),
    AddRowwise(Var, Var),
    Relu(Var),
    Add(Var, Var),
    Scale(Var, S),
    Sum(Var),
    WeightedSum(Vec<(Var, S)>),
    SoftmaxCe { logits: Var, labels: Vec<u8>, probs: Tensor<S> },
    // One argsort pair per column; columns are independent 1D slices.
    SlicedCost { a: Var, b: Var, order: CostOrder, perms: Vec<(Vec<usize>, Vec<usize>)> },
}

/// Eager Wengert list: operations compute forward immediately and record a
/// backward rule. Nodes are appended in execution order, so inputs always
/// precede consumers and one reverse sweep visits each node exactly once.
pub struct Tape<S> {
    nodes: Vec<Node<S>>,
    values: Vec<Tensor<S>>,
    requires: Vec<bool>,
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), values: Vec::new(), requires: Vec::new(), grads: Vec::new() }
    }

    fn push(&mut self, node: Node<S>, value: Tensor<S>, requires: bool) -> Var {
        debug_assert!(value.is_finite(), "non-finite values produced on tape");
        self.nodes.push(node);
        self.values.push(value);
        self.requires.push(requires);
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn req(&self, v: Var) -> bool {
        self.requires[v.0]
    }

    /// Record an input value. Gradients are accumulated for it only when
    /// `requires_grad` is set.
    pub fn input(&mut self, value: Tensor<S>, requires_grad: bool) -> Var {
        self.push(Node::Leaf, value, requires_grad)
    }

    /// An input that never receives gradients (data batches, frozen weights).
    pub fn constant(&mut self, value: Tensor<S>) -> Var {
        self.input(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.values[v.0]
    }

    /// Gradient of the last `backward` target w.r.t. `v`, if any flowed.
    pub fn grad(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads[v.0].as_ref()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.values[a.0].matmul(&self.values[b.0]);
        let req = self.req(a) || self.req(b);
        self.push(Node::Matmul(a, b), out, req)
    }

    pub fn add_rowwise(&mut self, a: Var, bias: Var) -> Var {
        let out = self.values[a.0].add_rowwise(&self.values[bias.0]);
        let req = self.req(a) || self.req(bias);
        self.push(Node::AddRowwise(a, bias), out, req)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.values[a.0].relu();
        let req = self.req(a);
        self.push(Node::Relu(a), out, req)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.values[a.0].add(&self.values[b.0]);
        let req = self.req(a) || self.req(b);
        self.push(Node::Add(a, b), out, req)
    }

    pub fn scale(&mut self, a: Var, s: S) -> Var {
        let out = self.values[a.0].scale(s);
        let req = self.req(a);
        self.push(Node::Scale(a, s), out, req)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.values[a.0].sum());
        let req = self.req(a);
        self.push(Node::Sum(a), out, req)
    }

    /// Σ wᵢ·xᵢ over same-shape terms.
    pub fn weighted_sum(&mut self, terms: &[(Var, S)]) -> Var {
        assert!(!terms.is_empty(), "weighted_sum needs at least one term");
        let mut out = self.values[terms[0].0 .0].scale(terms[0].1);
        for &(v, w) in &terms[1..] {
            out.add_assign(&self.values[v.0].scale(w));
        }
        let req = terms.iter().any(|&(v, _)| self.req(v));
        self.push(Node::WeightedSum(terms.to_vec()), out, req)
    }

    /// Mean over rows of −log softmax(logits)[label], two-logit form,
    /// stabilized by max subtraction. Backward is (softmax − one_hot)/m.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[u8]) -> Var {
        let lv = &self.values[logits.0];
        let m = lv.rows();
        assert!(m >= 1, "softmax_cross_entropy: empty batch");
        assert_eq!(lv.cols(), 2, "softmax_cross_entropy expects 2 logits, got {}", lv.cols());
        assert_eq!(labels.len(), m, "labels length {} != batch size {}", labels.len(), m);

        let mut probs = Tensor::zeros(m, 2);
        let mut total = S::zero();
        for (r, &y) in labels.iter().enumerate() {
            assert!(y <= 1, "label outside {{0,1}}: {y}");
            let (l0, l1) = (lv.get(r, 0), lv.get(r, 1));
            let mx = l0.max(l1);
            let (z0, z1) = (l0 - mx, l1 - mx);
            let lse = (z0.exp() + z1.exp()).ln();
            total += lse - if y == 0 { z0 } else { z1 };
            probs.set(r, 0, (z0 - lse).exp());
            probs.set(r, 1, (z1 - lse).exp());
        }
        let mean = total / S::c(m as f64);
        let req = self.req(logits);
        self.push(
            Node::SoftmaxCe { logits, labels: labels.to_vec(), probs },
            Tensor::scalar(mean),
            req,
        )
    }

    /// Average per-column transport cost between two same-shape matrices,
    /// treating every column as an empirical 1D distribution: each column is
    /// sorted on both sides and the chosen ground cost is averaged over all
    /// entries and columns. Gradients route back through the argsorts.
    pub fn sliced_cost(&mut self, a: Var, b: Var, order: CostOrder) -> Var {
        let (va, vb) = (&self.values[a.0], &self.values[b.0]);
        assert_eq!(
            va.shape(),
            vb.shape(),
            "sliced_cost shape mismatch: {}x{} vs {}x{}",
            va.rows(),
            va.cols(),
            vb.rows(),
            vb.cols()
        );
        let (rows, cols) = va.shape();
        assert!(rows >= 1 && cols >= 1, "sliced_cost: empty input");

        let mut perms = Vec::with_capacity(cols);
        let mut total = S::zero();
        for c in 0..cols {
            let pa = argsort_col(va, c);
            let pb = argsort_col(vb, c);
            for i in 0..rows {
                let d = va.get(pa[i], c) - vb.get(pb[i], c);
                total += match order {
                    CostOrder::Squared => d * d,
                    CostOrder::Absolute => d.abs(),
                };
            }
            perms.push((pa, pb));
        }
        let mean = total / S::c((rows * cols) as f64);
        let req = self.req(a) || self.req(b);
        self.push(Node::SlicedCost { a, b, order, perms }, Tensor::scalar(mean), req)
    }

    /// Reverse sweep seeding d(loss)/d(loss) = 1. Accumulates gradients into
    /// every reachable value with `requires_grad`; deterministic given the
    /// recorded tape.
    pub fn backward(&mut self, loss: Var) {
        assert!(loss.0 < self.nodes.len(), "backward: loss is not on this tape");
        assert_eq!(
            self.values[loss.0].shape(),
            (1, 1),
            "backward needs a scalar (1x1) loss, got {:?}",
            self.values[loss.0].shape()
        );
        for g in &mut self.grads {
            *g = None;
        }
        self.grads[loss.0] = Some(Tensor::scalar(S::one()));

        for i in (0..self.nodes.len()).rev() {
            if self.grads[i].is_none() || !self.requires[i] {
                continue;
            }
            // Inputs precede node i, so splitting at i gives disjoint access
            // to the upstream gradient and the input slots.
            let (lower, upper) = self.grads.split_at_mut(i);
            let g = upper[0].as_ref().expect("checked above");
            let values = &self.values;
            let requires = &self.requires;
            let mut acc = |v: Var, delta: Tensor<S>| {
                if !requires[v.0] {
                    return;
                }
                match &mut lower[v.0] {
                    Some(t) => t.add_assign(&delta),
                    slot @ None => *slot = Some(delta),
                }
            };
            match &self.nodes[i] {
                Node::Leaf => {}
                Node::Matmul(a, b) => {
                    if requires[a.0] {
                        acc(*a, g.matmul_nt(&values[b.0]));
                    }
                    if requires[b.0] {
                        acc(*b, values[a.0].matmul_tn(g));
                    }
                }
                Node::AddRowwise(a, bias) => {
                    acc(*a, g.clone());
                    if requires[bias.0] {
                        let mut gb = Tensor::zeros(1, g.cols());
                        for r in 0..g.rows() {
                            for c in 0..g.cols() {
                                gb.set(0, c, gb.get(0, c) + g.get(r, c));
                            }
                        }
                        acc(*bias, gb);
                    }
                }
                Node::Relu(a) => {
                    let x = &values[a.0];
                    let mut gx = g.clone();
                    for (gv, &xv) in gx.data_mut().iter_mut().zip(x.data()) {
                        if xv <= S::zero() {
                            *gv = S::zero();
                        }
                    }
                    acc(*a, gx);
                }
                Node::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.clone());
                }
                Node::Scale(a, s) => acc(*a, g.scale(*s)),
                Node::Sum(a) => {
                    let (r, c) = values[a.0].shape();
                    let mut gx = Tensor::zeros(r, c);
                    let seed = g.item();
                    for v in gx.data_mut() {
                        *v = seed;
                    }
                    acc(*a, gx);
                }
                Node::WeightedSum(terms) => {
                    for &(v, w) in terms {
                        acc(v, g.scale(w));
                    }
                }
                Node::SoftmaxCe { logits, labels, probs } => {
                    let scale = g.item() / S::c(labels.len() as f64);
                    let mut gl = probs.clone();
                    for (r, &y) in labels.iter().enumerate() {
                        let col = usize::from(y);
                        gl.set(r, col, gl.get(r, col) - S::one());
                    }
                    acc(*logits, gl.scale(scale));
                }
                Node::SlicedCost { a, b, order, perms } => {
                    let (rows, cols) = values[a.0].shape();
                    let coef = g.item() / S::c((rows * cols) as f64);
                    let mut ga = Tensor::zeros(rows, cols);
                    let mut gb = Tensor::zeros(rows, cols);
                    for (c, (pa, pb)) in perms.iter().enumerate() {
                        for i in 0..rows {
                            let d = values[a.0].get(pa[i], c) - values[b.0].get(pb[i], c);
                            let dd = match order {
                                CostOrder::Squared => (d + d) * coef,
                                // subgradient 0 at exact ties
                                CostOrder::Absolute => coef * S::c(sign(d)),
                            };
                            ga.set(pa[i], c, ga.get(pa[i], c) + dd);
                            gb.set(pb[i], c, gb.get(pb[i], c) - dd);
                        }
                    }
                    if requires[a.0] {
                        acc(*a, ga);
                    }
                    if requires[b.0] {
                        acc(*b, gb);
                    }
                }
            }
        }
    }
}

fn sign<S: Scalar>(d: S) -> f64 {
    if d > S::zero() {
        1.0
    } else if d < S::zero() {
        -1.0
    } else {
        0.0
    }
}

fn argsort_col<S: Scalar>(t: &Tensor<S>, c: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..t.rows()).collect();
    idx.sort_by(|&i, &j| t.get(i, c).partial_cmp(&t.get(j, c)).expect("finite values"));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(tape: &mut Tape<f64>, rows: usize, cols: usize, data: Vec<f64>) -> Var {
        tape.input(Tensor::from_vec(rows, cols, data), true)
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut tape = Tape::new();
        let x = leaf(&mut tape, 2, 3, vec![0.3, -1.0, 2.0, 5.0, 0.0, -2.5]);
        let loss = tape.sum(x);
        tape.backward(loss);
        assert_eq!(tape.grad(x).unwrap().data(), &[1.0; 6]);
    }

    #[test]
    fn constant_loss_writes_no_gradients() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(1, 2, vec![1.0, 2.0]));
        let s = tape.sum(x);
        tape.backward(s);
        assert!(tape.grad(x).is_none());
    }

    #[test]
    fn matmul_gradient_broadcasts_ones_column() {
        // loss = sum(a·b) with b a column of ones: d loss/d a = all ones.
        let mut tape = Tape::new();
        let a = leaf(&mut tape, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = tape.constant(Tensor::from_vec(2, 1, vec![1.0, 1.0]));
        let prod = tape.matmul(a, b);
        let loss = tape.sum(prod);
        tape.backward(loss);
        assert_eq!(tape.grad(a).unwrap().data(), &[1.0; 4]);
    }

    #[test]
    fn bias_gradient_counts_rows() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(3, 4));
        let b = leaf(&mut tape, 1, 4, vec![0.1, 0.2, 0.3, 0.4]);
        let y = tape.add_rowwise(x, b);
        let loss = tape.sum(y);
        tape.backward(loss);
        assert_eq!(tape.grad(b).unwrap().data(), &[3.0; 4]);
    }

    #[test]
    fn relu_gradient_masks_negative_inputs() {
        let mut tape = Tape::new();
        let x = leaf(&mut tape, 1, 2, vec![-1.0, 2.0]);
        let y = tape.relu(x);
        let loss = tape.sum(y);
        tape.backward(loss);
        assert_eq!(tape.grad(x).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln2() {
        let mut tape = Tape::new();
        let logits = tape.constant(Tensor::from_vec(1, 2, vec![0.0, 0.0]));
        let loss = tape.softmax_cross_entropy(logits, &[0]);
        assert!((tape.value(loss).item() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_confident_correct_is_near_zero() {
        let mut tape = Tape::new();
        let logits = tape.constant(Tensor::from_vec(1, 2, vec![10.0, -10.0]));
        let loss = tape.softmax_cross_entropy(logits, &[0]);
        assert!(tape.value(loss).item() < 1e-8);
    }

    #[test]
    fn cross_entropy_stable_at_huge_logits() {
        let mut tape = Tape::new();
        let logits = leaf(&mut tape, 2, 2, vec![1e6, -1e6, -1e6, 1e6]);
        let loss = tape.softmax_cross_entropy(logits, &[0, 1]);
        tape.backward(loss);
        assert!(tape.value(loss).item().is_finite());
        assert!(tape.grad(logits).unwrap().is_finite());
    }

    #[test]
    #[should_panic(expected = "empty batch")]
    fn cross_entropy_rejects_empty_batch() {
        let mut tape = Tape::<f64>::new();
        let logits = tape.constant(Tensor::from_vec(0, 2, vec![]));
        let _ = tape.softmax_cross_entropy(logits, &[]);
    }

    #[test]
    #[should_panic(expected = "label outside {0,1}")]
    fn cross_entropy_rejects_bad_label() {
        let mut tape = Tape::<f64>::new();
        let logits = tape.constant(Tensor::from_vec(1, 2, vec![0.0, 0.0]));
        let _ = tape.softmax_cross_entropy(logits, &[2]);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let vals = vec![0.3, -0.7, 1.2, 0.4, -0.1, 0.9, -1.3, 0.2];
        let labels = [0u8, 1, 1, 0];
        let f = |v: &[f64]| {
            let mut tape = Tape::new();
            let logits = tape.input(Tensor::from_vec(4, 2, v.to_vec()), true);
            let loss = tape.softmax_cross_entropy(logits, &labels);
            tape.value(loss).item()
        };
        let mut tape = Tape::new();
        let logits = tape.input(Tensor::from_vec(4, 2, vals.clone()), true);
        let loss = tape.softmax_cross_entropy(logits, &labels);
        tape.backward(loss);
        let grad = tape.grad(logits).unwrap();
        let h = 1e-6;
        for i in 0..vals.len() {
            let mut hi = vals.clone();
            let mut lo = vals.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (f(&hi) - f(&lo)) / (2.0 * h);
            let g = grad.data()[i];
            assert!((fd - g).abs() / fd.abs().max(1e-8) < 1e-5, "entry {i}: fd {fd} vs ad {g}");
        }
    }

    #[test]
    fn sliced_cost_zero_on_identical_inputs() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::from_vec(3, 2, vec![0.5, 1.0, -1.0, 2.0, 0.0, -0.5]));
        let b = tape.constant(Tensor::from_vec(3, 2, vec![0.5, 1.0, -1.0, 2.0, 0.0, -0.5]));
        let c = tape.sliced_cost(a, b, CostOrder::Squared);
        assert_eq!(tape.value(c).item(), 0.0);
    }

    #[test]
    fn sliced_cost_matches_hand_example() {
        // columns {0,1} vs {1,2}: ((0-1)^2 + (1-2)^2)/2 = 1
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::from_vec(2, 1, vec![1.0, 0.0]));
        let b = tape.constant(Tensor::from_vec(2, 1, vec![2.0, 1.0]));
        let c = tape.sliced_cost(a, b, CostOrder::Squared);
        assert_eq!(tape.value(c).item(), 1.0);
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::from_vec(2, 1, vec![1.0, 0.0]));
        let b = tape.constant(Tensor::from_vec(2, 1, vec![2.0, 1.0]));
        let c = tape.sliced_cost(a, b, CostOrder::Absolute);
        assert_eq!(tape.value(c).item(), 1.0);
    }

    #[test]
    fn sliced_cost_gradient_matches_finite_differences() {
        let av = vec![0.31, -0.74, 1.21, 0.46, -0.13, 0.92];
        let bv = vec![1.05, 0.22, -0.61, 0.83, 0.37, -1.44];
        for order in [CostOrder::Squared, CostOrder::Absolute] {
            let f = |a: &[f64], b: &[f64]| {
                let mut tape = Tape::new();
                let va = tape.input(Tensor::from_vec(3, 2, a.to_vec()), true);
                let vb = tape.input(Tensor::from_vec(3, 2, b.to_vec()), true);
                let c = tape.sliced_cost(va, vb, order);
                tape.value(c).item()
            };
            let mut tape = Tape::new();
            let va = tape.input(Tensor::from_vec(3, 2, av.clone()), true);
            let vb = tape.input(Tensor::from_vec(3, 2, bv.clone()), true);
            let c = tape.sliced_cost(va, vb, order);
            tape.backward(c);
            let (ga, gb) = (tape.grad(va).unwrap().clone(), tape.grad(vb).unwrap().clone());
            let h = 1e-6;
            for i in 0..av.len() {
                let mut hi = av.clone();
                let mut lo = av.clone();
                hi[i] += h;
                lo[i] -= h;
                let fd = (f(&hi, &bv) - f(&lo, &bv)) / (2.0 * h);
                assert!((fd - ga.data()[i]).abs() < 1e-6, "{order:?} a[{i}]: {fd} vs {}", ga.data()[i]);
                let mut hi = bv.clone();
                let mut lo = bv.clone();
                hi[i] += h;
                lo[i] -= h;
                let fd = (f(&av, &hi) - f(&av, &lo)) / (2.0 * h);
                assert!((fd - gb.data()[i]).abs() < 1e-6, "{order:?} b[{i}]: {fd} vs {}", gb.data()[i]);
            }
        }
    }

    #[test]
    fn weighted_sum_combines_gradients() {
        let mut tape = Tape::new();
        let x = leaf(&mut tape, 1, 1, vec![2.0]);
        let y = leaf(&mut tape, 1, 1, vec![3.0]);
        let w = tape.weighted_sum(&[(x, 2.0), (y, -0.5)]);
        assert_eq!(tape.value(w).item(), 2.5);
        tape.backward(w);
        assert_eq!(tape.grad(x).unwrap().item(), 2.0);
        assert_eq!(tape.grad(y).unwrap().item(), -0.5);
    }

    #[test]
    fn backward_is_deterministic() {
        let run = || {
            let mut tape = Tape::new();
            let x = leaf(&mut tape, 2, 2, vec![0.1, -0.2, 0.3, 0.7]);
            let w = leaf(&mut tape, 2, 2, vec![0.5, 0.25, -1.0, 2.0]);
            let h = tape.matmul(x, w);
            let r = tape.relu(h);
            let loss = tape.softmax_cross_entropy(r, &[1, 0]);
            tape.backward(loss);
            (tape.grad(x).unwrap().bit_hash(), tape.grad(w).unwrap().bit_hash())
        };
        assert_eq!(run(), run());
    }

    #[test]
    #[should_panic(expected = "not on this tape")]
    fn backward_rejects_foreign_var() {
        let mut other = Tape::<f64>::new();
        let a = other.constant(Tensor::scalar(1.0));
        let b = other.constant(Tensor::scalar(1.0));
        let _pad = other.add(a, b);
        let foreign = other.add(a, b); // index 3
        let mut tape = Tape::<f64>::new();
        tape.backward(foreign);
    }
}
