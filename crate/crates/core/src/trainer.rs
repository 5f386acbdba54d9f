//! The staged, alternating training loop: supervised warm-up, adversarial
//! attribute removal on the source domain, then domain alignment plus
//! target-side attribute removal, with periodic checkpointing and
//! score-based model selection.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{CostOrder, OptimKind, Optimizer, Tape, Tensor};
use crate::datasets::{
    prepare_experiment, DomainDataset, RawTable, SplitId, DEFAULT_SPLIT_SEED,
};
use crate::error::{Error, Result};
use crate::losses::{self, LossWeights};
use crate::metrics::{self, EvalReport, MetricValue};
use crate::model::{concat_attribute, Activation, FairModel, GroupMask};
use crate::rng;
use crate::scalar::Scalar;

/// Which subset of the five step kinds a run performs. The task step always
/// runs; the two attribute steps and the alignment step are toggled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Ablation {
    /// Task step only: a plain source-trained classifier.
    Base,
    /// Task + alignment; no adversarial attribute removal.
    SwdOnly,
    /// Task + attribute removal on both domains; no alignment.
    FairOnly,
    /// All five steps.
    #[default]
    Full,
}

impl Ablation {
    pub fn fairness_enabled(self) -> bool {
        matches!(self, Ablation::FairOnly | Ablation::Full)
    }

    pub fn alignment_enabled(self) -> bool {
        matches!(self, Ablation::SwdOnly | Ablation::Full)
    }

    pub fn all() -> [Ablation; 4] {
        [Ablation::Base, Ablation::SwdOnly, Ablation::FairOnly, Ablation::Full]
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Ablation::Base => "base",
            Ablation::SwdOnly => "swd_only",
            Ablation::FairOnly => "fair_only",
            Ablation::Full => "full",
        };
        f.write_str(s)
    }
}

impl FromStr for Ablation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Ablation::Base),
            "swd_only" => Ok(Ablation::SwdOnly),
            "fair_only" => Ok(Ablation::FairOnly),
            "full" => Ok(Ablation::Full),
            other => Err(Error::Usage(format!(
                "unknown ablation '{other}' (expected base, swd_only, fair_only, or full)"
            ))),
        }
    }
}

/// Every knob of one training run. `validate` must pass before training.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub weights: LossWeights<f64>,
    /// Total iterations.
    pub itr: usize,
    /// First iteration at which the attribute steps run.
    pub fair_start: usize,
    /// First iteration at which the target domain is touched (alignment and
    /// target-side attribute steps).
    pub thresh: usize,
    pub lr_main: f64,
    pub lr_swd: f64,
    pub batch_size: usize,
    /// Projection count of each alignment step.
    pub k: usize,
    pub seed: u64,
    pub eval_every: usize,
    pub optimizer: OptimKind,
    pub ablation: Ablation,
    /// Latent width z.
    pub latent: usize,
    pub activation: Activation,
    pub swd_cost: CostOrder,
    /// Fraction of source rows held out for validation.
    pub val_fraction: f64,
    /// Seed of the source/target split itself (kept apart from `seed` so
    /// repeated runs see the same data).
    pub split_seed: u64,
    /// Hash frozen parameter groups around every step and record violations.
    pub freeze_audit: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            weights: LossWeights::default(),
            itr: 45_000,
            fair_start: 15_000,
            thresh: 30_000,
            lr_main: 1e-4,
            lr_swd: 1e-5,
            batch_size: 128,
            k: 50,
            seed: 0,
            eval_every: 500,
            optimizer: OptimKind::Adam,
            ablation: Ablation::Full,
            latent: 20,
            activation: Activation::Relu,
            swd_cost: CostOrder::Squared,
            val_fraction: 0.2,
            split_seed: DEFAULT_SPLIT_SEED,
            freeze_audit: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.fair_start <= self.thresh && self.thresh <= self.itr) {
            return fail(format!(
                "schedule must satisfy fair_start <= thresh <= itr, got {} / {} / {}",
                self.fair_start, self.thresh, self.itr
            ));
        }
        if !(self.lr_main > 0.0 && self.lr_main.is_finite()) {
            return fail(format!("lr_main must be positive, got {}", self.lr_main));
        }
        if !(self.lr_swd > 0.0 && self.lr_swd.is_finite()) {
            return fail(format!("lr_swd must be positive, got {}", self.lr_swd));
        }
        if self.batch_size < 2 {
            return fail(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if self.k < 1 {
            return fail("k must be at least 1".to_string());
        }
        if self.eval_every < 1 {
            return fail("eval_every must be at least 1".to_string());
        }
        if self.latent < 1 {
            return fail("latent width must be at least 1".to_string());
        }
        if !(0.0..1.0).contains(&self.val_fraction) || self.val_fraction <= 0.0 {
            return fail(format!("val_fraction must lie in (0, 1), got {}", self.val_fraction));
        }
        self.weights.validate().map_err(Error::Config)
    }
}

/// One evaluated snapshot: the model plus the quantities selection needs.
#[derive(Clone, Debug)]
pub struct CheckpointRecord<S: Scalar> {
    /// 1-based iteration count at evaluation time.
    pub iteration: usize,
    pub model: FairModel<S>,
    pub val_balanced_accuracy: f64,
    /// Demographic-parity gap of hard predictions on the target side
    /// (predictions and attributes only; target labels are not involved).
    pub target_dp: MetricValue,
    /// val_balanced_accuracy − target_dp (an undefined gap counts as 0) for
    /// variants that train fairness losses; plain val_balanced_accuracy for
    /// the fairness-free ablations, which are pure baselines.
    pub score: f64,
    /// Target hard predictions were all-0 or all-1.
    pub degenerate: bool,
}

/// One row of the training curves, written at every eval point. Quantities
/// whose step has not run yet are `None` (serialized as NA).
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    pub task_loss: f64,
    pub fair_loss_src: Option<f64>,
    pub fair_loss_tar: Option<f64>,
    pub swd: Option<f64>,
    pub val_acc: f64,
    pub dp_src: Option<f64>,
    pub dp_tar: Option<f64>,
}

pub const CURVES_CSV_HEADER: &str =
    "iteration,task_loss,fair_loss_src,fair_loss_tar,swd,val_acc,dp_src,dp_tar";

impl CurveRow {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.6}"),
            None => "NA".to_string(),
        };
        format!(
            "{},{:.6},{},{},{},{:.6},{},{}",
            self.iteration,
            self.task_loss,
            opt(self.fair_loss_src),
            opt(self.fair_loss_tar),
            opt(self.swd),
            self.val_acc,
            opt(self.dp_src),
            opt(self.dp_tar),
        )
    }
}

/// Write curves as CSV.
pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{CURVES_CSV_HEADER}").map_err(|e| Error::io(path, e))?;
    for r in rows {
        writeln!(f, "{}", r.csv_row()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// How many times each step kind ran, and how many target batches were drawn.
/// These are the witnesses for the schedule contract.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepCounts {
    pub task: u64,
    pub adversary_src: u64,
    pub encoder_src: u64,
    pub align: u64,
    pub adversary_tar: u64,
    pub encoder_tar: u64,
    pub target_batches: u64,
}

/// Everything one training run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome<S: Scalar> {
    pub selected: CheckpointRecord<S>,
    pub checkpoints: Vec<CheckpointRecord<S>>,
    pub curves: Vec<CurveRow>,
    /// Every adaptation-phase checkpoint had degenerate target predictions;
    /// `selected` is then merely the best-scoring degenerate snapshot.
    pub all_degenerate: bool,
    pub step_counts: StepCounts,
    /// Non-empty only when `freeze_audit` is on and a frozen group changed.
    pub freeze_violations: Vec<String>,
}

fn draw_batch<S: Scalar>(
    d: &DomainDataset<S>,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> (Tensor<S>, Vec<u8>, Vec<usize>) {
    let b = batch_size.min(d.len());
    let idx = rand::seq::index::sample(rng, d.len(), b).into_vec();
    let mut x = Tensor::zeros(b, d.x.cols());
    let mut a = Vec::with_capacity(b);
    for (r, &i) in idx.iter().enumerate() {
        for c in 0..d.x.cols() {
            x.set(r, c, d.x.get(i, c));
        }
        a.push(d.a[i]);
    }
    (concat_attribute(&x, &a), a, idx)
}

fn gather_labels<S: Scalar>(d: &DomainDataset<S>, idx: &[usize]) -> Vec<u8> {
    let y = d.labels.read();
    idx.iter().map(|&i| y[i]).collect()
}

/// One optimizer step on (u, v) minimizing α·task loss. Returns the raw
/// (unweighted) loss value.
pub fn step_task<S: Scalar>(
    model: &mut FairModel<S>,
    opt: &mut Optimizer<S>,
    xa: &Tensor<S>,
    y: &[u8],
    alpha: S,
) -> f64 {
    let mut tape = Tape::new();
    let vars = model.vars(&mut tape, GroupMask::UV);
    let input = tape.constant(xa.clone());
    let loss = losses::task_loss(&mut tape, model, &vars, input, y);
    let raw = tape.value(loss).item().to64();
    let scaled = tape.weighted_sum(&[(loss, alpha)]);
    tape.backward(scaled);
    let grads = [tape.grad(vars.we), tape.grad(vars.be), tape.grad(vars.wg), tape.grad(vars.bg)];
    opt.step(
        &mut [&mut model.we, &mut model.be, &mut model.wg, &mut model.bg],
        &grads,
    );
    raw
}

/// One optimizer step on w minimizing β·attribute loss (u, v frozen).
pub fn step_fair_adversary<S: Scalar>(
    model: &mut FairModel<S>,
    opt: &mut Optimizer<S>,
    xa: &Tensor<S>,
    a: &[u8],
    beta: S,
) -> f64 {
    let mut tape = Tape::new();
    let vars = model.vars(&mut tape, GroupMask::W);
    let input = tape.constant(xa.clone());
    let loss = losses::fairness_loss(&mut tape, model, &vars, input, a);
    let raw = tape.value(loss).item().to64();
    let scaled = tape.weighted_sum(&[(loss, beta)]);
    tape.backward(scaled);
    let grads = [tape.grad(vars.wh), tape.grad(vars.bh)];
    opt.step(&mut [&mut model.wh, &mut model.bh], &grads);
    raw
}

/// One optimizer step on u maximizing β·attribute loss — i.e. minimizing its
/// negation — so the encoder hides the attribute (v, w frozen).
pub fn step_fair_encoder<S: Scalar>(
    model: &mut FairModel<S>,
    opt: &mut Optimizer<S>,
    xa: &Tensor<S>,
    a: &[u8],
    beta: S,
) -> f64 {
    let mut tape = Tape::new();
    let vars = model.vars(&mut tape, GroupMask::U);
    let input = tape.constant(xa.clone());
    let loss = losses::fairness_loss(&mut tape, model, &vars, input, a);
    let raw = tape.value(loss).item().to64();
    let scaled = tape.weighted_sum(&[(loss, -beta)]);
    tape.backward(scaled);
    let grads = [tape.grad(vars.we), tape.grad(vars.be)];
    opt.step(&mut [&mut model.we, &mut model.be], &grads);
    raw
}

/// One optimizer step on u minimizing γ·alignment loss between the encoded
/// batches (v, w frozen). Runs at the slow learning rate by construction:
/// the caller passes the dedicated alignment optimizer.
pub fn step_align<S: Scalar>(
    model: &mut FairModel<S>,
    opt: &mut Optimizer<S>,
    xa_src: &Tensor<S>,
    xa_tar: &Tensor<S>,
    k: usize,
    cost: CostOrder,
    gamma: S,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut tape = Tape::new();
    let vars = model.vars(&mut tape, GroupMask::U);
    let loss = losses::swd_loss(&mut tape, model, &vars, xa_src, xa_tar, k, cost, rng);
    let raw = tape.value(loss).item().to64();
    let scaled = tape.weighted_sum(&[(loss, gamma)]);
    tape.backward(scaled);
    let grads = [tape.grad(vars.we), tape.grad(vars.be)];
    opt.step(&mut [&mut model.we, &mut model.be], &grads);
    raw
}

/// Evaluate a snapshot: balanced accuracy on validation, demographic-parity
/// gap and degeneracy of hard predictions on the target side. Target labels
/// are not read — the gap needs only predictions and attributes. The gap is
/// subtracted from the score only when the trained variant pursues fairness
/// (`fairness_aware`); the fairness-free baselines select on accuracy.
pub fn evaluate_checkpoint<S: Scalar>(
    iteration: usize,
    model: &FairModel<S>,
    val_xa: &Tensor<S>,
    val_y: &[u8],
    target_xa: &Tensor<S>,
    target_a: &[u8],
    fairness_aware: bool,
) -> CheckpointRecord<S> {
    let val_preds = model.hard_labels(val_xa);
    let (val_acc, _) = metrics::balanced_accuracy(&val_preds, val_y);
    let tar_preds = model.hard_labels(target_xa);
    let degenerate = tar_preds.iter().all(|&p| p == 0) || tar_preds.iter().all(|&p| p == 1);
    let target_dp = metrics::delta_dp(&tar_preds, target_a);
    let score = if fairness_aware {
        val_acc - target_dp.value().unwrap_or(0.0)
    } else {
        val_acc
    };
    CheckpointRecord {
        iteration,
        model: model.clone(),
        val_balanced_accuracy: val_acc,
        target_dp,
        score,
        degenerate,
    }
}

struct FreezeAuditor {
    enabled: bool,
    violations: Vec<String>,
}

impl FreezeAuditor {
    fn new(enabled: bool) -> Self {
        FreezeAuditor { enabled, violations: Vec::new() }
    }

    fn check<S: Scalar, F: FnOnce(&mut FairModel<S>) -> f64>(
        &mut self,
        model: &mut FairModel<S>,
        step_name: &str,
        frozen: &[char],
        f: F,
    ) -> f64 {
        if !self.enabled {
            return f(model);
        }
        let before: Vec<u64> = frozen.iter().map(|&g| model.group_hash(g)).collect();
        let out = f(model);
        for (&g, &h) in frozen.iter().zip(&before) {
            if model.group_hash(g) != h {
                self.violations.push(format!("step {step_name}: frozen group {g} changed"));
            }
        }
        out
    }
}

/// Run the full staged loop on pre-encoded train/val/target datasets and
/// return the selected checkpoint plus the complete log.
pub fn fair_adapt<S: Scalar>(
    cfg: &TrainConfig,
    train: &DomainDataset<S>,
    val: &DomainDataset<S>,
    target: &DomainDataset<S>,
) -> RunOutcome<S> {
    cfg.validate().expect("invalid training configuration");
    assert_eq!(
        train.n_features(),
        target.n_features(),
        "train and target feature widths differ"
    );
    assert_eq!(train.n_features(), val.n_features(), "train and val feature widths differ");
    assert!(!train.is_empty() && !val.is_empty() && !target.is_empty(), "empty dataset side");

    let alpha = S::c(cfg.weights.alpha);
    let beta = S::c(cfg.weights.beta);
    let gamma = S::c(cfg.weights.gamma);

    let mut model = FairModel::<S>::init(train.n_features(), cfg.latent, cfg.activation, cfg.seed);
    let mut opt_task = Optimizer::new(cfg.optimizer, S::c(cfg.lr_main));
    let mut opt_adv = Optimizer::new(cfg.optimizer, S::c(cfg.lr_main));
    let mut opt_enc = Optimizer::new(cfg.optimizer, S::c(cfg.lr_main));
    let mut opt_align = Optimizer::new(cfg.optimizer, S::c(cfg.lr_swd));

    let mut batch_rng = rng::stream(cfg.seed, "batches", 0);
    let mut swd_rng = rng::stream(cfg.seed, "projections", 0);

    // fixed eval inputs, built once
    let val_xa = concat_attribute(&val.x, &val.a);
    let val_y = val.labels.read().to_vec();
    let target_xa = concat_attribute(&target.x, &target.a);

    let fairness_aware = cfg.ablation.fairness_enabled();
    let mut counts = StepCounts::default();
    let mut audit = FreezeAuditor::new(cfg.freeze_audit);
    let mut checkpoints: Vec<CheckpointRecord<S>> = Vec::new();
    let mut curves: Vec<CurveRow> = Vec::new();

    let mut last_task;
    let mut last_fair_src: Option<f64> = None;
    let mut last_fair_tar: Option<f64> = None;
    let mut last_swd: Option<f64> = None;

    for itr in 0..cfg.itr {
        // (1) task step, every iteration
        let (xa, _, idx) = draw_batch(train, cfg.batch_size, &mut batch_rng);
        let y = gather_labels(train, &idx);
        last_task = audit.check(&mut model, "task", &['w'], |m| {
            step_task(m, &mut opt_task, &xa, &y, alpha)
        });
        counts.task += 1;

        let fairness_on = cfg.ablation.fairness_enabled() && itr >= cfg.fair_start;
        let adaptation_on = itr >= cfg.thresh;

        if fairness_on {
            // (2) adversary reads the attribute from frozen latents
            let (xa, a, _) = draw_batch(train, cfg.batch_size, &mut batch_rng);
            audit.check(&mut model, "adversary_src", &['u', 'v'], |m| {
                step_fair_adversary(m, &mut opt_adv, &xa, &a, beta)
            });
            counts.adversary_src += 1;

            // (3) encoder hides the attribute from the frozen adversary
            let (xa, a, _) = draw_batch(train, cfg.batch_size, &mut batch_rng);
            last_fair_src = Some(audit.check(&mut model, "encoder_src", &['v', 'w'], |m| {
                step_fair_encoder(m, &mut opt_enc, &xa, &a, beta)
            }));
            counts.encoder_src += 1;
        }

        if adaptation_on {
            if cfg.ablation.alignment_enabled() {
                // (4) align encoded source and target batches
                let (xa_src, _, _) = draw_batch(train, cfg.batch_size, &mut batch_rng);
                let (xa_tar, _, _) = draw_batch(target, cfg.batch_size, &mut batch_rng);
                counts.target_batches += 1;
                last_swd = Some(audit.check(&mut model, "align", &['v', 'w'], |m| {
                    step_align(
                        m,
                        &mut opt_align,
                        &xa_src,
                        &xa_tar,
                        cfg.k,
                        cfg.swd_cost,
                        gamma,
                        &mut swd_rng,
                    )
                }));
                counts.align += 1;
            }
            if cfg.ablation.fairness_enabled() {
                // (5) repeat (2) and (3) with target attributes
                let (xa, a, _) = draw_batch(target, cfg.batch_size, &mut batch_rng);
                counts.target_batches += 1;
                audit.check(&mut model, "adversary_tar", &['u', 'v'], |m| {
                    step_fair_adversary(m, &mut opt_adv, &xa, &a, beta)
                });
                counts.adversary_tar += 1;

                let (xa, a, _) = draw_batch(target, cfg.batch_size, &mut batch_rng);
                counts.target_batches += 1;
                last_fair_tar = Some(audit.check(&mut model, "encoder_tar", &['v', 'w'], |m| {
                    step_fair_encoder(m, &mut opt_enc, &xa, &a, beta)
                }));
                counts.encoder_tar += 1;
            }
        }

        let label = itr + 1;
        if label % cfg.eval_every == 0 {
            let rec =
                evaluate_checkpoint(label, &model, &val_xa, &val_y, &target_xa, &target.a, fairness_aware);
            let val_preds = rec.model.hard_labels(&val_xa);
            let dp_src = metrics::delta_dp(&val_preds, &val.a).value();
            curves.push(CurveRow {
                iteration: label,
                task_loss: last_task,
                fair_loss_src: last_fair_src,
                fair_loss_tar: last_fair_tar,
                swd: last_swd,
                val_acc: rec.val_balanced_accuracy,
                dp_src,
                dp_tar: rec.target_dp.value(),
            });
            checkpoints.push(rec);
        }
    }

    // selection over adaptation-phase checkpoints
    let pool: Vec<&CheckpointRecord<S>> =
        checkpoints.iter().filter(|c| c.iteration > cfg.thresh).collect();
    let best = |cands: &[&CheckpointRecord<S>]| -> Option<CheckpointRecord<S>> {
        cands
            .iter()
            .max_by(|a, b| a.score.partial_cmp(&b.score).expect("finite scores"))
            .map(|c| (*c).clone())
    };
    let viable: Vec<&CheckpointRecord<S>> =
        pool.iter().copied().filter(|c| !c.degenerate).collect();
    let (selected, all_degenerate) = if let Some(s) = best(&viable) {
        (s, false)
    } else if let Some(s) = best(&pool) {
        (s, true)
    } else {
        // no eval point fell in the adaptation phase (tiny configs): take the
        // final state
        let rec =
            evaluate_checkpoint(cfg.itr, &model, &val_xa, &val_y, &target_xa, &target.a, fairness_aware);
        let deg = rec.degenerate;
        (rec, deg)
    };

    RunOutcome {
        selected,
        checkpoints,
        curves,
        all_degenerate,
        step_counts: counts,
        freeze_violations: audit.violations,
    }
}

/// One run's contribution to an aggregate: the selected model evaluated on
/// the target side with its true labels (read only after training finished).
#[derive(Clone, Debug)]
pub struct RunSummary<S: Scalar> {
    pub run_index: usize,
    pub seed: u64,
    pub outcome: RunOutcome<S>,
    /// Value of the target-label read counter captured the moment training
    /// returned, before any reporting touched the labels. Must be 0.
    pub target_label_reads_during_training: u64,
    pub target_report: EvalReport,
}

/// Mean ± population std over the runs used for reporting.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    fn from(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: f64::NAN, std: f64::NAN, n: 0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt(), n: values.len() }
    }
}

/// Aggregated metrics over repeated runs. Runs whose selected checkpoint is
/// degenerate are excluded unless every run is degenerate, in which case the
/// aggregate covers all runs and says so.
#[derive(Clone, Debug)]
pub struct Aggregate {
    pub balanced_accuracy: MeanStd,
    pub delta_dp: MeanStd,
    pub delta_eo: MeanStd,
    pub delta_ao: MeanStd,
    pub runs_used: usize,
    pub runs_total: usize,
    pub all_degenerate: bool,
}

/// Repeated-run product: per-run details plus the aggregate row.
#[derive(Clone, Debug)]
pub struct RepeatedOutcome<S: Scalar> {
    pub runs: Vec<RunSummary<S>>,
    pub aggregate: Aggregate,
}

fn aggregate(runs: &[RunSummary<impl Scalar>]) -> Aggregate {
    let viable: Vec<&RunSummary<_>> =
        runs.iter().filter(|r| !r.outcome.selected.degenerate).collect();
    let all_degenerate = viable.is_empty();
    let used: Vec<&RunSummary<_>> =
        if all_degenerate { runs.iter().collect() } else { viable };
    let collect = |f: &dyn Fn(&EvalReport) -> Option<f64>| -> Vec<f64> {
        used.iter().filter_map(|r| f(&r.target_report)).collect()
    };
    Aggregate {
        balanced_accuracy: MeanStd::from(&collect(&|r| Some(r.balanced_accuracy))),
        delta_dp: MeanStd::from(&collect(&|r| r.delta_dp.value())),
        delta_eo: MeanStd::from(&collect(&|r| r.delta_eo.value())),
        delta_ao: MeanStd::from(&collect(&|r| r.delta_ao.value())),
        runs_used: used.len(),
        runs_total: runs.len(),
        all_degenerate,
    }
}

/// Prepare and train `runs` times with seeds seed+0 … seed+runs−1, in
/// parallel, then aggregate the target-side reports.
pub fn run_repeated<S: Scalar>(
    cfg: &TrainConfig,
    table: &RawTable,
    split: SplitId,
    runs: usize,
) -> Result<RepeatedOutcome<S>> {
    assert!(runs >= 1, "runs must be at least 1");
    cfg.validate()?;
    let summaries: Vec<RunSummary<S>> = (0..runs)
        .into_par_iter()
        .map(|i| -> Result<RunSummary<S>> {
            let seed = cfg.seed + i as u64;
            let mut run_cfg = cfg.clone();
            run_cfg.seed = seed;
            let exp = prepare_experiment::<S>(
                table,
                split,
                cfg.split_seed,
                cfg.val_fraction,
                seed,
            )?;
            let outcome = fair_adapt(&run_cfg, &exp.train, &exp.val, &exp.target);
            let reads = exp.target.labels.read_count();
            let preds = outcome.selected.model.hard_labels(&concat_attribute(
                &exp.target.x,
                &exp.target.a,
            ));
            let report = metrics::evaluate(&preds, exp.target.labels.read(), &exp.target.a);
            Ok(RunSummary {
                run_index: i,
                seed,
                outcome,
                target_label_reads_during_training: reads,
                target_report: report,
            })
        })
        .collect::<Result<_>>()?;
    let aggregate = aggregate(&summaries);
    Ok(RepeatedOutcome { runs: summaries, aggregate })
}
