//! Minibatch training loop shared by every model, plus classification metrics.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Adam, ExponentialSchedule, ParamStore, Tape, Var};
use crate::gnn::{GnnModel, GraphBatch, ModelError, PreparedGraph, Target};

/// A loss over a subset of training examples.
pub trait Objective {
    fn example_count(&self) -> usize;
    fn loss(&self, tape: &mut Tape, store: &ParamStore, batch: &[usize]) -> Result<Var, ModelError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub l2: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Runs Adam over shuffled minibatches. `on_epoch` sees the parameters after
/// each epoch and may stop early. Returns the per-epoch reports.
pub fn fit<O, F>(
    store: &mut ParamStore,
    objective: &O,
    opts: &TrainOptions,
    mut on_epoch: F,
) -> Result<Vec<EpochReport>, ModelError>
where
    O: Objective + ?Sized,
    F: FnMut(&EpochReport, &ParamStore) -> Result<Control, ModelError>,
{
    let n = objective.example_count();
    if n == 0 {
        return Err(ModelError::EmptyBatch);
    }
    let schedule = ExponentialSchedule::new(opts.lr, opts.lr_decay)?;
    let mut adam = Adam::new(store);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut reports = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(opts.batch_size.max(1)) {
            let mut tape = Tape::new();
            let loss = objective.loss(&mut tape, store, chunk)?;
            total += tape.scalar(loss) * chunk.len() as f64;
            let grads = tape.backward(loss, store.len())?;
            let lr = schedule.lr(adam.steps());
            adam.step(store, &grads, lr, opts.l2)?;
        }
        let report = EpochReport {
            epoch,
            mean_loss: total / n as f64,
            lr: schedule.lr(adam.steps()),
            steps: adam.steps(),
        };
        reports.push(report);
        if on_epoch(&report, store)? == Control::Stop {
            break;
        }
    }
    Ok(reports)
}

/// Supervised objective for a hypergraph model.
pub struct GraphObjective<'a> {
    pub model: &'a GnnModel,
    pub graphs: &'a [PreparedGraph],
    pub target: &'a Target,
}

impl Objective for GraphObjective<'_> {
    fn example_count(&self) -> usize {
        self.graphs.len()
    }

    fn loss(&self, tape: &mut Tape, store: &ParamStore, batch: &[usize]) -> Result<Var, ModelError> {
        let graphs: Vec<&PreparedGraph> = batch.iter().map(|&i| &self.graphs[i]).collect();
        let gb = GraphBatch::new(&graphs)?;
        let pass = self.model.forward(tape, store, &gb, false)?;
        let target = match self.target {
            Target::Classes(c) => Target::Classes(batch.iter().map(|&i| c[i]).collect()),
            Target::Values(v) => Target::Values(v.select(ndarray::Axis(0), batch)),
        };
        self.model.loss(tape, pass.output, &target)
    }
}

/// Index of the largest entry per row; ties go to the lower index.
pub fn argmax_rows(scores: ArrayView2<f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    /// `None` for classes absent from the truth labels.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub count: usize,
}

pub fn classification_metrics(
    predicted: &[usize],
    truth: &[usize],
    classes: usize,
) -> Result<ClassificationMetrics, ModelError> {
    if predicted.len() != truth.len() {
        return Err(ModelError::Dimension {
            what: "prediction count",
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(ModelError::TargetMismatch);
        }
        confusion[t][p] += 1;
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect();
    Ok(ClassificationMetrics {
        accuracy: correct as f64 / truth.len() as f64,
        per_class_accuracy,
        confusion,
        count: truth.len(),
    })
}

/// Accuracy of `argmax` over the rows of `logits`.
pub fn accuracy(logits: &Array2<f64>, truth: &[usize]) -> f64 {
    let pred = argmax_rows(logits.view());
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len().max(1) as f64
}
