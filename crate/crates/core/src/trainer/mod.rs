//! Unitary-weight single-layer network and its projected gradient training.
//!
//! Each update takes a plain gradient step `W' = U - lr * G` and, every
//! `mapping_step` updates, maps `W'` back onto the unitary group with
//! Gram-Schmidt. The last update of a run is always mapped.

mod metrics;
mod model;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt, unitarity_error, ComplexMatrix, StateVector};

pub use metrics::{
    accuracy, loss_mse, metrics_from_csv, metrics_to_csv, r2_score, EpochMetrics, CSV_HEADER,
};
pub use model::{
    block_parameter, cayley_block, forward, init_block_rotation, init_block_rotation_with_angles,
    init_projected_random, target_fidelity, InitMode, UnitaryModel, MODEL_MAGIC,
};

pub(crate) use model::phase_invariant_fidelity;

/// Whether updates are mapped back to the unitary group. `Disabled` is plain
/// unconstrained gradient descent, useful only to show what the projection
/// buys.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    Enabled,
    Disabled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Updates between projections.
    pub mapping_step: usize,
    pub seed: u64,
    pub init_mode: InitMode,
    /// Stop once the test MSE drops below this.
    pub early_stop_mse: f64,
    /// Overlap threshold for the accuracy metric.
    pub accuracy_threshold: f64,
    pub projection: Projection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 2000,
            batch_size: 32,
            mapping_step: 1,
            seed: 0,
            init_mode: InitMode::BlockRotation,
            early_stop_mse: 1e-6,
            accuracy_threshold: 0.99,
            projection: Projection::Enabled,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is accepted: it freezes the model, which is a useful baseline.
        if !(self.learning_rate >= 0.0 && self.learning_rate < 1.0) {
            return Err(Error::Validation(format!(
                "learning rate must lie in [0, 1), got {}",
                self.learning_rate
            )));
        }
        if self.mapping_step == 0 {
            return Err(Error::Validation("mapping step must be at least 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Validation("epochs and batch size must be positive".into()));
        }
        if self.early_stop_mse.is_nan() || self.early_stop_mse < 0.0 {
            return Err(Error::Validation("early-stop threshold must be non-negative".into()));
        }
        if !(self.accuracy_threshold > 0.0 && self.accuracy_threshold <= 1.0) {
            return Err(Error::Validation("accuracy threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub trace: Vec<EpochMetrics>,
    pub final_model: UnitaryModel,
    pub target_fidelity: Option<f64>,
    /// Gradient updates performed.
    pub updates: usize,
    /// Projections performed, including the forced final one.
    pub projections: usize,
    /// Largest unitarity error measured right after any projection.
    pub max_projected_unitarity_err: f64,
}

impl TrainReport {
    pub fn last(&self) -> &EpochMetrics {
        self.trace.last().expect("at least one epoch")
    }

    /// Record the fidelity of the final model against a known target unitary.
    pub fn evaluate_target(&mut self, target: &ComplexMatrix) -> Result<f64> {
        let f = target_fidelity(&self.final_model, target)?;
        self.target_fidelity = Some(f);
        Ok(f)
    }
}

fn check_batch(model: &UnitaryModel, batch: &[Sample]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    let dim = model.dim();
    if let Some(s) = batch
        .iter()
        .find(|s| s.input.dim() != dim || s.output.dim() != dim)
    {
        return Err(Error::shape(
            "gradient",
            format!(
                "sample of dims {}/{} for a {dim}-dimensional model",
                s.input.dim(),
                s.output.dim()
            ),
        ));
    }
    Ok(())
}

// Mean per-sample loss and the gradient, sharing one forward pass.
fn loss_and_gradient(weights: &ComplexMatrix, batch: &[Sample]) -> (f64, ComplexMatrix) {
    let dim = weights.rows();
    let mut grad = ComplexMatrix::zeros(dim, dim);
    let mut residual = vec![Complex64::new(0.0, 0.0); dim];
    let mut sse = 0.0;
    for s in batch {
        let x = s.input.as_slice();
        let y = s.output.as_slice();
        for (i, r) in residual.iter_mut().enumerate() {
            let o: Complex64 = weights.row(i).iter().zip(x).map(|(w, xi)| w * xi).sum();
            *r = o - y[i];
            sse += r.norm_sqr();
        }
        let g = grad.as_mut_slice();
        for (i, &r) in residual.iter().enumerate() {
            for (gij, xj) in g[i * dim..(i + 1) * dim].iter_mut().zip(x) {
                *gij += r * xj.conj();
            }
        }
    }
    let scale = 1.0 / (batch.len() * dim) as f64;
    for g in grad.as_mut_slice() {
        *g *= scale;
    }
    (sse * scale / 2.0, grad)
}

/// Mean of [`loss_mse`] over the batch.
pub fn batch_loss(model: &UnitaryModel, batch: &[Sample]) -> Result<f64> {
    check_batch(model, batch)?;
    let total = batch
        .iter()
        .map(|s| loss_mse(&forward(model, &s.input)?, &s.output))
        .sum::<Result<f64>>()?;
    Ok(total / batch.len() as f64)
}

/// `G = (1 / (B * dim)) * sum_b (U x_b - y_b) x_b^†`.
///
/// Entry `(i, j)` is `dL/dRe(U_ij) + i * dL/dIm(U_ij)` for the batch-mean
/// loss, i.e. the real gradient over the split real/imaginary parameters.
pub fn gradient(model: &UnitaryModel, batch: &[Sample]) -> Result<ComplexMatrix> {
    check_batch(model, batch)?;
    Ok(loss_and_gradient(model.weights(), batch).1)
}

fn evaluate(
    model: &UnitaryModel,
    test: &[Sample],
    threshold: f64,
) -> Result<(f64, f64, f64)> {
    let predictions = test
        .iter()
        .map(|s| forward(model, &s.input))
        .collect::<Result<Vec<StateVector>>>()?;
    let targets: Vec<StateVector> = test.iter().map(|s| s.output.clone()).collect();
    let mse = predictions
        .iter()
        .zip(&targets)
        .map(|(p, t)| loss_mse(p, t))
        .sum::<Result<f64>>()?
        / test.len() as f64;
    let r2 = r2_score(&predictions, &targets)?;
    let acc = accuracy(&predictions, &targets, threshold)?;
    Ok((mse, r2, acc))
}

/// Initialise a model from `config` and train it on the dataset's split.
pub fn fit(dataset: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = UnitaryModel::init(dataset.num_qubits, config.init_mode, &mut rng);
    train(model, &dataset.train_set(), &dataset.test_set(), config)
}

/// Projected gradient descent over `train`; `test` is only ever evaluated.
pub fn train(
    mut model: UnitaryModel,
    train: &[Sample],
    test: &[Sample],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    check_batch(&model, train)?;
    check_batch(&model, test)?;
    if test.len() < 2 {
        return Err(Error::Validation("need at least two test samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch: Vec<Sample> = Vec::with_capacity(config.batch_size);

    let mut trace = Vec::new();
    let mut updates = 0usize;
    let mut projections = 0usize;
    let mut max_projected = 0.0f64;
    let mut last_projected = true;

    let mut project = |model: &mut UnitaryModel, projections: &mut usize| -> Result<()> {
        let u = gram_schmidt(model.weights())?;
        max_projected = max_projected.max(unitarity_error(&u)?);
        model.set_weights(u);
        *projections += 1;
        Ok(())
    };

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (loss, grad) = loss_and_gradient(model.weights(), &batch);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    learning_rate: config.learning_rate,
                });
            }
            loss_sum += loss * batch.len() as f64;
            model
                .weights_mut()
                .sub_scaled_assign(config.learning_rate, &grad)?;
            updates += 1;
            last_projected = false;
            if config.projection == Projection::Enabled && updates.is_multiple_of(config.mapping_step) {
                project(&mut model, &mut projections)?;
                last_projected = true;
            }
        }
        let train_mse = loss_sum / train.len() as f64;
        if !train_mse.is_finite() || !model.weights().all_finite() {
            return Err(Error::Diverged {
                epoch,
                learning_rate: config.learning_rate,
            });
        }

        let (mut test_mse, mut r2, mut acc) = evaluate(&model, test, config.accuracy_threshold)?;
        let stopping = epoch == config.epochs || test_mse < config.early_stop_mse;
        if stopping && config.projection == Projection::Enabled && !last_projected {
            project(&mut model, &mut projections)?;
            (test_mse, r2, acc) = evaluate(&model, test, config.accuracy_threshold)?;
        }
        trace.push(EpochMetrics {
            epoch,
            train_mse,
            test_mse,
            test_r2: r2,
            test_accuracy: acc,
            unitarity_err: unitarity_error(model.weights())?,
        });
        if stopping {
            break;
        }
    }
    Ok(TrainReport {
        config: config.clone(),
        trace,
        final_model: model,
        target_fidelity: None,
        updates,
        projections,
        max_projected_unitarity_err: max_projected,
    })
}
