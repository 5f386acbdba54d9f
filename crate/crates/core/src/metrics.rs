//! Accuracy and group-fairness metrics over hard binary predictions.
//!
//! Every Δ metric is an absolute gap between the two sensitive groups'
//! conditional positive-prediction rates. Conditionals with an empty
//! denominator are reported as an explicit [`MetricValue::Undefined`] — tiny
//! target splits really do lack groups, and a silent 0 would fake fairness.

/// A probability-gap metric that may be undefined on a given sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricValue {
    Defined(f64),
    Undefined,
}

impl MetricValue {
    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(v),
            MetricValue::Undefined => None,
        }
    }

    /// The value, or a panic: for call sites where the group structure
    /// guarantees definedness (e.g. selection's target ΔDP).
    pub fn expect_defined(self, what: &str) -> f64 {
        self.value().unwrap_or_else(|| panic!("{what} is undefined on this sample"))
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricValue::Defined(v) => write!(f, "{v}"),
            MetricValue::Undefined => write!(f, "NA"),
        }
    }
}

/// Mean of the two per-class recalls. If one class is absent from `y`, the
/// metric falls back to accuracy on the present class and sets the flag.
pub fn balanced_accuracy(y_hat: &[u8], y: &[u8]) -> (f64, bool) {
    check_binary_pair(y_hat, y);
    let mut hit = [0usize; 2];
    let mut cnt = [0usize; 2];
    for (&p, &t) in y_hat.iter().zip(y) {
        cnt[t as usize] += 1;
        if p == t {
            hit[t as usize] += 1;
        }
    }
    match (cnt[0], cnt[1]) {
        (0, n1) => (hit[1] as f64 / n1 as f64, true),
        (n0, 0) => (hit[0] as f64 / n0 as f64, true),
        (n0, n1) => ((hit[0] as f64 / n0 as f64 + hit[1] as f64 / n1 as f64) / 2.0, false),
    }
}

/// |P(ŷ=1 | a=0) − P(ŷ=1 | a=1)|.
pub fn delta_dp(y_hat: &[u8], a: &[u8]) -> MetricValue {
    check_binary_pair(y_hat, a);
    rate_gap(y_hat, |i| a[i] == 0, |i| a[i] == 1)
}

/// |P(ŷ=1 | a=0, y=1) − P(ŷ=1 | a=1, y=1)| — the true-positive-rate gap.
pub fn delta_eo(y_hat: &[u8], y: &[u8], a: &[u8]) -> MetricValue {
    check_binary_triple(y_hat, y, a);
    rate_gap(y_hat, |i| a[i] == 0 && y[i] == 1, |i| a[i] == 1 && y[i] == 1)
}

/// Mean over y ∈ {0,1} of the per-label rate gaps; the y=1 term is ΔEO.
pub fn delta_ao(y_hat: &[u8], y: &[u8], a: &[u8]) -> MetricValue {
    check_binary_triple(y_hat, y, a);
    let g1 = rate_gap(y_hat, |i| a[i] == 0 && y[i] == 1, |i| a[i] == 1 && y[i] == 1);
    let g0 = rate_gap(y_hat, |i| a[i] == 0 && y[i] == 0, |i| a[i] == 1 && y[i] == 0);
    match (g0, g1) {
        (MetricValue::Defined(x), MetricValue::Defined(y)) => MetricValue::Defined((x + y) / 2.0),
        _ => MetricValue::Undefined,
    }
}

fn rate_gap(
    y_hat: &[u8],
    in_left: impl Fn(usize) -> bool,
    in_right: impl Fn(usize) -> bool,
) -> MetricValue {
    let rate = |pred: &dyn Fn(usize) -> bool| {
        let mut pos = 0usize;
        let mut n = 0usize;
        for i in 0..y_hat.len() {
            if pred(i) {
                n += 1;
                pos += usize::from(y_hat[i] == 1);
            }
        }
        (n > 0).then(|| pos as f64 / n as f64)
    };
    match (rate(&in_left), rate(&in_right)) {
        (Some(l), Some(r)) => MetricValue::Defined((l - r).abs()),
        _ => MetricValue::Undefined,
    }
}

fn check_binary_pair(x: &[u8], y: &[u8]) {
    assert!(!x.is_empty(), "metrics on empty vectors");
    assert_eq!(x.len(), y.len(), "metric input lengths differ: {} vs {}", x.len(), y.len());
    assert!(x.iter().chain(y).all(|&v| v <= 1), "metric inputs must be 0/1");
}

fn check_binary_triple(x: &[u8], y: &[u8], z: &[u8]) {
    check_binary_pair(x, y);
    check_binary_pair(x, z);
}

/// All evaluation quantities for one model on one dataset.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub balanced_accuracy: f64,
    /// Set when a label class was absent and accuracy fell back to one class.
    pub accuracy_fallback: bool,
    pub delta_dp: MetricValue,
    pub delta_eo: MetricValue,
    pub delta_ao: MetricValue,
    /// Sample counts per (a, y) cell: [n00, n01, n10, n11] with index a*2+y.
    pub group_counts: [usize; 4],
}

pub fn evaluate(y_hat: &[u8], y: &[u8], a: &[u8]) -> EvalReport {
    check_binary_triple(y_hat, y, a);
    let (balanced_accuracy, accuracy_fallback) = balanced_accuracy(y_hat, y);
    let mut group_counts = [0usize; 4];
    for (&ai, &yi) in a.iter().zip(y) {
        group_counts[ai as usize * 2 + yi as usize] += 1;
    }
    EvalReport {
        balanced_accuracy,
        accuracy_fallback,
        delta_dp: delta_dp(y_hat, a),
        delta_eo: delta_eo(y_hat, y, a),
        delta_ao: delta_ao(y_hat, y, a),
        group_counts,
    }
}

pub const REPORT_CSV_HEADER: &str = "balanced_accuracy,delta_dp,delta_eo,delta_ao";

impl EvalReport {
    /// Metric columns in the order used everywhere: Acc., ΔDP, ΔEO, ΔAO.
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.balanced_accuracy, self.delta_dp, self.delta_eo, self.delta_ao)
    }
}
