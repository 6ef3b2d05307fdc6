//! Self-adversarial loss, negative sampling, gradients, Adam and the training loop.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, FilterIndex, Split, Triple};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricsReport, Side};
use crate::model::checkpoint::Checkpoint;
use crate::model::{ManifoldConfig, Model, ParamClass, Precision, SparseGrad};
use crate::numeric::{sigmoid, softplus};

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Adversarial temperature.
    pub alpha: f64,
    /// Margin.
    pub gamma: f64,
    pub lr: f64,
    /// Negatives per positive.
    pub neg_size: usize,
    pub steps: usize,
    /// Validate every this many steps (and after the last one). 0 disables.
    pub valid_every: usize,
    pub seed: u64,
    pub precision: Precision,
    /// Resample negatives that are known-true training triples.
    pub filter_negatives: bool,
    /// Evaluate validation on an evenly strided subset of at most this many triples.
    pub valid_max_triples: Option<usize>,
    /// Keep elliptic weights at their initial value (pure Euclidean components).
    pub freeze_elliptic_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            alpha: 1.0,
            gamma: 6.0,
            lr: 0.001,
            neg_size: 64,
            steps: 1000,
            valid_every: 100,
            seed: 0,
            precision: Precision::F64,
            filter_negatives: false,
            valid_max_triples: None,
            freeze_elliptic_weights: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.neg_size == 0 {
            return bad("negative sample size must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

/// Softmax of `alpha * s_i`, computed with the max subtracted.
pub fn adversarial_weights(neg_scores: &[f64], alpha: f64) -> Vec<f64> {
    let m = neg_scores.iter().fold(f64::NEG_INFINITY, |a, &s| a.max(alpha * s));
    let e: Vec<f64> = neg_scores.iter().map(|&s| (alpha * s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// `-ln sig(gamma + s_pos) - sum_i p_i ln sig(-s_i - gamma)` with `p = softmax(alpha s)`.
pub fn self_adversarial_loss(pos_score: f64, neg_scores: &[f64], gamma: f64, alpha: f64) -> f64 {
    let p = adversarial_weights(neg_scores, alpha);
    loss_with_weights(pos_score, neg_scores, &p, gamma)
}

fn loss_with_weights(pos_score: f64, neg_scores: &[f64], weights: &[f64], gamma: f64) -> f64 {
    softplus(-(gamma + pos_score))
        + neg_scores
            .iter()
            .zip(weights)
            .map(|(&s, &p)| p * softplus(s + gamma))
            .sum::<f64>()
}

/// Loss and its derivatives with respect to each score, weights held constant.
pub fn self_adversarial_loss_grad(pos_score: f64, neg_scores: &[f64], gamma: f64, alpha: f64) -> (f64, f64, Vec<f64>) {
    let p = adversarial_weights(neg_scores, alpha);
    let loss = loss_with_weights(pos_score, neg_scores, &p, gamma);
    let d_pos = -sigmoid(-(gamma + pos_score));
    let d_neg = neg_scores.iter().zip(&p).map(|(&s, &w)| w * sigmoid(s + gamma)).collect();
    (loss, d_pos, d_neg)
}

/// Corruptions of one positive; all share the same replaced side.
#[derive(Debug, Clone, PartialEq)]
pub struct Negatives {
    pub side: Side,
    pub triples: Vec<Triple>,
}

/// Draws `g` corruptions of `triple`. The side is a fair coin; replacements are
/// uniform over all entities. With `filter`, replacements that form a known
/// triple are redrawn (up to 100 attempts each).
pub fn sample_negatives(
    triple: Triple,
    g: usize,
    rng: &mut impl Rng,
    num_entities: usize,
    filter: Option<&FilterIndex>,
) -> Negatives {
    let side = if rng.random::<bool>() { Side::Head } else { Side::Tail };
    let corrupt = |e: usize| match side {
        Side::Head => Triple { h: e, ..triple },
        Side::Tail => Triple { t: e, ..triple },
    };
    let triples = (0..g)
        .map(|_| {
            let mut c = corrupt(rng.random_range(0..num_entities));
            if let Some(f) = filter {
                for _ in 0..100 {
                    if !f.contains(&c) {
                        break;
                    }
                    c = corrupt(rng.random_range(0..num_entities));
                }
            }
            c
        })
        .collect();
    Negatives { side, triples }
}

/// Independent stream seed for `(seed, step, index)`.
pub fn stream_seed(seed: u64, step: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ step) ^ index)
}

/// Positives of one step and their negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub positives: Vec<Triple>,
    pub negatives: Vec<Negatives>,
}

/// Deterministic batch for `step`: positives drawn uniformly with replacement.
pub fn sample_batch(train: &[Triple], num_entities: usize, cfg: &TrainConfig, step: u64, filter: Option<&FilterIndex>) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, step, u64::MAX));
    let positives: Vec<Triple> = (0..cfg.batch_size).map(|_| train[rng.random_range(0..train.len())]).collect();
    let negatives = positives
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut r = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, step, i as u64));
            sample_negatives(p, cfg.neg_size, &mut r, num_entities, filter)
        })
        .collect();
    Batch { positives, negatives }
}

/// Dense gradient of the mean batch loss, laid out like [`Model::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub values: Vec<f64>,
}

fn positive_loss_and_grad(model: &Model, pos: Triple, neg: &Negatives, gamma: f64, alpha: f64) -> Result<(f64, SparseGrad)> {
    let s_pos = model.score(pos.h, pos.r, pos.t)?;
    let s_neg = neg
        .triples
        .iter()
        .map(|t| model.score(t.h, t.r, t.t))
        .collect::<Result<Vec<_>>>()?;
    let (loss, d_pos, d_neg) = self_adversarial_loss_grad(s_pos, &s_neg, gamma, alpha);
    let mut g = SparseGrad::new();
    model.score_backward(pos.h, pos.r, pos.t, d_pos, &mut g);
    for (t, &d) in neg.triples.iter().zip(&d_neg) {
        model.score_backward(t.h, t.r, t.t, d, &mut g);
    }
    Ok((loss, g))
}

/// Exact gradient of the mean per-positive loss, adversarial weights detached.
pub fn grad(model: &Model, batch: &Batch, cfg: &TrainConfig) -> Result<Gradients> {
    if batch.positives.len() != batch.negatives.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.positives.len(),
            got: batch.negatives.len(),
        });
    }
    let n = batch.positives.len();
    if n == 0 {
        return Ok(Gradients {
            loss: 0.0,
            values: vec![0.0; model.params().len()],
        });
    }
    let parts: Vec<(f64, SparseGrad)> = batch
        .positives
        .par_iter()
        .zip(&batch.negatives)
        .map(|(&p, neg)| positive_loss_and_grad(model, p, neg, cfg.gamma, cfg.alpha))
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; model.params().len()];
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        g.add_into(model, &mut values);
    }
    let scale = 1.0 / n as f64;
    values.iter_mut().for_each(|v| *v *= scale);
    loss *= scale;
    if cfg.freeze_elliptic_weights {
        for (i, v) in values.iter_mut().enumerate() {
            if *v != 0.0 && model.param_class(i) == ParamClass::EllipticWeight {
                *v = 0.0;
            }
        }
    }
    if !loss.is_finite() {
        return Err(Error::Numeric("batch loss".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("gradient of {}", model.param_path(i))));
    }
    Ok(Gradients { loss, values })
}

/// Mean batch loss with the adversarial weights frozen at `weights`.
fn batch_loss_frozen(model: &Model, batch: &Batch, weights: &[Vec<f64>], gamma: f64) -> Result<f64> {
    let mut total = 0.0;
    for ((p, neg), w) in batch.positives.iter().zip(&batch.negatives).zip(weights) {
        let s_pos = model.score(p.h, p.r, p.t)?;
        let s_neg = neg
            .triples
            .iter()
            .map(|t| model.score(t.h, t.r, t.t))
            .collect::<Result<Vec<_>>>()?;
        total += loss_with_weights(s_pos, &s_neg, w, gamma);
    }
    Ok(total / batch.positives.len() as f64)
}

/// Per-class finite-difference comparison.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradCheckReport {
    /// Max relative error per parameter class present in the probe.
    pub per_class: BTreeMap<ParamClass, f64>,
    pub max: f64,
    /// Number of scalars compared.
    pub checked: usize,
    /// Path of the worst scalar.
    pub worst: Option<String>,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (class, err) in &self.per_class {
            writeln!(f, "{:<20} {:.3e}", class.name(), err)?;
        }
        write!(f, "{:<20} {:.3e} over {} scalars", "max", self.max, self.checked)
    }
}

/// Denominator floor of the relative error `|a - n| / max(|a|, |n|, floor)`.
pub const GRAD_CHECK_FLOOR: f64 = 1e-2;

/// Central differences with step `eps` on every parameter that the batch
/// touches, against [`grad`]. The adversarial weights are frozen at the
/// unperturbed point, matching the detached analytic gradient.
pub fn finite_diff_check(model: &Model, batch: &Batch, cfg: &TrainConfig, eps: f64) -> Result<GradCheckReport> {
    if model.precision() != Precision::F64 {
        return Err(Error::Config("finite-difference check requires f64 parameters".into()));
    }
    let analytic = grad(model, batch, cfg)?;
    let weights = batch
        .positives
        .iter()
        .zip(&batch.negatives)
        .map(|(p, neg)| {
            let s = neg
                .triples
                .iter()
                .map(|t| model.score(t.h, t.r, t.t))
                .collect::<Result<Vec<_>>>()?;
            model.score(p.h, p.r, p.t)?;
            Ok(adversarial_weights(&s, cfg.alpha))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut indices = Vec::new();
    let dim = model.config().stored_dim();
    let mut ents: Vec<usize> = batch
        .positives
        .iter()
        .chain(batch.negatives.iter().flat_map(|n| n.triples.iter()))
        .flat_map(|t| [t.h, t.t])
        .collect();
    ents.sort_unstable();
    ents.dedup();
    for e in ents {
        indices.extend(e * dim..(e + 1) * dim);
    }
    let mut rels: Vec<usize> = batch.positives.iter().map(|t| t.r).collect();
    rels.sort_unstable();
    rels.dedup();
    let rel_len = model.config().relation_param_len();
    for r in rels {
        let start = model.relation_offset(r);
        indices.extend(start..start + rel_len);
    }

    let mut report = GradCheckReport::default();
    let mut probe = model.clone();
    for idx in indices {
        let class = model.param_class(idx);
        if cfg.freeze_elliptic_weights && class == ParamClass::EllipticWeight {
            continue;
        }
        let orig = model.params()[idx];
        probe.params_mut()[idx] = orig + eps;
        let up = batch_loss_frozen(&probe, batch, &weights, cfg.gamma)?;
        probe.params_mut()[idx] = orig - eps;
        let down = batch_loss_frozen(&probe, batch, &weights, cfg.gamma)?;
        probe.params_mut()[idx] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic.values[idx];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        let slot = report.per_class.entry(class).or_insert(0.0);
        *slot = slot.max(err);
        if err > report.max || report.worst.is_none() {
            report.max = err.max(report.max);
            report.worst = Some(model.param_path(idx));
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        crate::error::check_len(self.m.len(), params.len())?;
        crate::error::check_len(self.m.len(), grad.len())?;
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// One row of the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub loss: Option<f64>,
    pub split: Split,
    pub metrics: Option<MetricsReport>,
}

impl LogRow {
    pub const TSV_HEADER: &'static str = "step\tloss\tsplit\tMR\tMRR\tH@1\tH@3\tH@10";

    pub fn tsv(&self) -> String {
        let loss = self.loss.map_or("NA".to_string(), |l| l.to_string());
        let metrics = self
            .metrics
            .map_or_else(|| ["NA"; 5].join("\t"), |m| m.tsv_row());
        format!("{}\t{}\t{}\t{}", self.step, loss, self.split, metrics)
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best model on validation MRR (the last one when there is no validation split).
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub best_valid: Option<MetricsReport>,
    /// Test metrics of `best`, when the test split is non-empty.
    pub test: Option<MetricsReport>,
    pub log: Vec<LogRow>,
}

fn strided(split: &[Triple], cap: Option<usize>) -> Vec<Triple> {
    match cap {
        Some(c) if c > 0 && split.len() > c => (0..c).map(|i| split[i * split.len() / c]).collect(),
        _ => split.to_vec(),
    }
}

/// Trains from a fresh seeded initialization. See [`train_from`].
pub fn train(dataset: &Dataset, manifold: &ManifoldConfig, cfg: &TrainConfig, on_row: &mut dyn FnMut(&LogRow)) -> Result<TrainOutcome> {
    let mut model = Model::init(manifold.clone(), dataset.num_entities(), dataset.num_relations(), cfg.seed);
    model.set_precision(cfg.precision);
    train_from(model, dataset, cfg, on_row)
}

/// Runs `cfg.steps` Adam steps from `model`, validating every `valid_every`
/// steps and after the last step, and reports each log row to `on_row`.
pub fn train_from(mut model: Model, dataset: &Dataset, cfg: &TrainConfig, on_row: &mut dyn FnMut(&LogRow)) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    if model.num_entities() != dataset.num_entities() || model.num_relations() != dataset.num_relations() {
        return Err(Error::Config(format!(
            "model has {} entities / {} relations but the dataset has {} / {}",
            model.num_entities(),
            model.num_relations(),
            dataset.num_entities(),
            dataset.num_relations()
        )));
    }
    model.set_precision(cfg.precision);
    let filter = dataset.filter_index();
    let train_filter = FilterIndex::build(&[&dataset.train]);
    let valid = strided(&dataset.valid, cfg.valid_max_triples);
    let mut adam = Adam::new(model.params().len());
    let mut log = Vec::new();
    let mut emit = |row: LogRow, log: &mut Vec<LogRow>| {
        on_row(&row);
        log.push(row);
    };
    let snapshot = |model: &Model, step: usize| Checkpoint {
        model: model.clone(),
        seed: cfg.seed,
        step: step as u64,
    };
    let mut best = snapshot(&model, 0);
    let mut best_valid: Option<MetricsReport> = None;

    for step in 1..=cfg.steps {
        let batch = sample_batch(
            &dataset.train,
            dataset.num_entities(),
            cfg,
            step as u64,
            cfg.filter_negatives.then_some(&train_filter),
        );
        let g = grad(&model, &batch, cfg)?;
        adam.step(model.params_mut(), &g.values, cfg.lr)?;
        model.round_to_precision();
        emit(
            LogRow {
                step,
                loss: Some(g.loss),
                split: Split::Train,
                metrics: None,
            },
            &mut log,
        );
        let validate_now = !valid.is_empty() && ((cfg.valid_every > 0 && step % cfg.valid_every == 0) || step == cfg.steps);
        if validate_now {
            let m = evaluate(&model, &valid, &filter)?;
            emit(
                LogRow {
                    step,
                    loss: None,
                    split: Split::Valid,
                    metrics: Some(m),
                },
                &mut log,
            );
            if best_valid.is_none_or(|b| m.mrr > b.mrr) {
                best_valid = Some(m);
                best = snapshot(&model, step);
            }
        }
    }
    let last = snapshot(&model, cfg.steps);
    if valid.is_empty() {
        best = last.clone();
    }
    let test = if dataset.test.is_empty() {
        None
    } else {
        let m = evaluate(&best.model, &dataset.test, &filter)?;
        emit(
            LogRow {
                step: best.step as usize,
                loss: None,
                split: Split::Test,
                metrics: Some(m),
            },
            &mut log,
        );
        Some(m)
    };
    Ok(TrainOutcome {
        best,
        last,
        best_valid,
        test,
        log,
    })
}
