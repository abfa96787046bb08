//! Small-epoch gradient descent for the gate heads.
//!
//! The corpus is a sequence of examples (one per text line). It is cut into
//! small epochs of `epoch_size` examples and each small epoch is passed over
//! `repeats` times before moving on. Every head is trained with softmax cross
//! entropy; for the two-class heads this is binary cross entropy on the logit
//! difference. Prediction is always argmax.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::params::{argmax, GateParams, LinearHead};
use super::{gate_domain, rule_gates, GateDecision};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::token::Token;

/// One token with the decimal context it was read in and its gate labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateEvent {
    pub token: Token,
    pub decimal_started: bool,
    pub label: GateDecision,
}

/// The 36 domain cases labelled by the rule gates.
///
/// Text corpora never contain `OTHER`, `$`, or a `.` inside a fractional part,
/// so without these the ignore gate has no positive examples at all.
pub fn anchor_events() -> Vec<GateEvent> {
    gate_domain()
        .map(|(token, decimal_started)| GateEvent {
            token,
            decimal_started,
            label: rule_gates(token, decimal_started),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epoch_size: usize,
    pub repeats: usize,
    pub lr: f64,
    /// Upper bound on passes (small epoch repetitions); `None` runs the whole corpus.
    pub steps_max: Option<usize>,
    pub dot_weight: f64,
    pub op_weight: f64,
    /// Leading small epochs whose losses are recorded without updating.
    pub freeze_epochs: usize,
    /// Mix [`anchor_events`] into every small epoch.
    pub anchor_domain: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epoch_size: 50,
            repeats: 5,
            lr: 0.1,
            steps_max: None,
            dot_weight: 5.0,
            op_weight: 5.0,
            freeze_epochs: 0,
            anchor_domain: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.epoch_size == 0 {
            return fail("epoch_size must be at least 1");
        }
        if self.repeats == 0 {
            return fail("repeats must be at least 1");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail("lr must be a positive real");
        }
        if !(self.dot_weight >= 1.0 && self.op_weight >= 1.0) {
            return fail("loss weights must be at least 1");
        }
        Ok(())
    }

    pub fn weight_for(&self, token: Token) -> f64 {
        if token.is_dot() {
            self.dot_weight
        } else if token.is_op() {
            self.op_weight
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventLoss<T> {
    pub epoch: usize,
    pub repeat: usize,
    pub token: char,
    pub decimal_started: bool,
    pub weight: f64,
    pub unweighted: T,
    pub weighted: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub examples: usize,
    pub events: usize,
    pub frozen: bool,
    pub mean_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport<T> {
    pub params: GateParams<T>,
    pub epochs: Vec<EpochLoss>,
    pub events: Vec<EventLoss<T>>,
    pub steps: usize,
}

/// Cross entropy of one head and the logit gradient, both unweighted.
fn head_loss<T: Scalar>(head: &LinearHead<T>, feature: usize, extra: bool, label: usize) -> (T, Vec<T>) {
    let z = head.logits(feature, extra);
    let max = z[argmax(&z)];
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    let loss = sum.ln() + max - z[label];
    let grad = exps
        .iter()
        .enumerate()
        .map(|(c, &e)| e / sum - if c == label { T::one() } else { T::zero() })
        .collect();
    (loss, grad)
}

fn head_step<T: Scalar>(head: &mut LinearHead<T>, feature: usize, extra: bool, grad: &[T], scale: T) {
    let extra_col = head.inputs() - 1;
    for (c, &g) in grad.iter().enumerate() {
        let delta = scale * g;
        head.weights[c][feature] -= delta;
        if extra {
            head.weights[c][extra_col] -= delta;
        }
        head.bias[c] -= delta;
    }
}

fn labels(d: &GateDecision) -> [usize; 6] {
    [
        usize::from(d.ignore),
        usize::from(d.move_pos),
        usize::from(d.decimal_start),
        d.dense_mode.class(),
        d.digit as usize,
        d.op.class(),
    ]
}

/// Unweighted loss of `event` summed over all six heads.
pub fn event_loss<T: Scalar>(params: &GateParams<T>, event: &GateEvent) -> T {
    let f = event.token.index();
    let y = labels(&event.label);
    let heads = [
        (&params.ignore, false),
        (&params.move_pos, false),
        (&params.decimal, false),
        (&params.dense_op, event.decimal_started),
        (&params.digit, false),
        (&params.op, false),
    ];
    heads
        .iter()
        .zip(y)
        .map(|(&(h, extra), label)| head_loss(h, f, extra, label).0)
        .sum()
}

/// Returns the unweighted loss before the update.
fn sgd_event<T: Scalar>(params: &mut GateParams<T>, event: &GateEvent, scale: Option<T>) -> T {
    let f = event.token.index();
    let y = labels(&event.label);
    let ds = event.decimal_started;
    let mut total = T::zero();
    let heads: [(&mut LinearHead<T>, bool); 6] = [
        (&mut params.ignore, false),
        (&mut params.move_pos, false),
        (&mut params.decimal, false),
        (&mut params.dense_op, ds),
        (&mut params.digit, false),
        (&mut params.op, false),
    ];
    for ((head, extra), label) in heads.into_iter().zip(y) {
        let (loss, grad) = head_loss(head, f, extra, label);
        total += loss;
        if let Some(scale) = scale {
            head_step(head, f, extra, &grad, scale);
        }
    }
    total
}

/// Trains the gate heads from `init` (zeros when `None`).
pub fn train_gates<T: Scalar>(
    corpus: &[Vec<GateEvent>],
    config: &TrainConfig,
    init: Option<GateParams<T>>,
) -> Result<TrainReport<T>> {
    config.validate()?;
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus);
    }
    let mut params = init.unwrap_or_default();
    let anchors = if config.anchor_domain { anchor_events() } else { Vec::new() };
    let lr = T::lit(config.lr);
    let max_steps = config.steps_max.unwrap_or(usize::MAX);

    let mut report = TrainReport {
        params: GateParams::zeros(),
        epochs: Vec::new(),
        events: Vec::new(),
        steps: 0,
    };

    'epochs: for (epoch, chunk) in corpus.chunks(config.epoch_size).enumerate() {
        let mut events: Vec<GateEvent> = chunk.iter().flatten().copied().collect();
        events.extend_from_slice(&anchors);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64));
        events.shuffle(&mut rng);

        let frozen = epoch < config.freeze_epochs;
        let mut sum = 0.0;
        let mut count = 0usize;
        for repeat in 0..config.repeats {
            if report.steps >= max_steps {
                if count > 0 {
                    report.epochs.push(EpochLoss {
                        epoch,
                        examples: chunk.len(),
                        events: events.len(),
                        frozen,
                        mean_loss: sum / count as f64,
                    });
                }
                break 'epochs;
            }
            for ev in &events {
                let weight = config.weight_for(ev.token);
                let w = T::lit(weight);
                let scale = (!frozen).then(|| lr * w);
                let unweighted = sgd_event(&mut params, ev, scale);
                let weighted = unweighted * w;
                sum += weighted.to_f64().unwrap_or(f64::NAN);
                count += 1;
                report.events.push(EventLoss {
                    epoch,
                    repeat,
                    token: ev.token.canonical_char(),
                    decimal_started: ev.decimal_started,
                    weight,
                    unweighted,
                    weighted,
                });
            }
            report.steps += 1;
        }
        report.epochs.push(EpochLoss {
            epoch,
            examples: chunk.len(),
            events: events.len(),
            frozen,
            mean_loss: if count == 0 { 0.0 } else { sum / count as f64 },
        });
    }
    report.params = params;
    Ok(report)
}
