use crate::error::{Error, Result};
use crate::linalg::StateVector;

/// Squared error over the real and imaginary parts, averaged over the
/// `2 * dim` real components.
pub fn loss_mse(predicted: &StateVector, target: &StateVector) -> Result<f64> {
    check_dims("loss_mse", predicted, target)?;
    let sse: f64 = predicted
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, y)| (p - y).norm_sqr())
        .sum();
    Ok(sse / (2.0 * predicted.dim() as f64))
}

fn check_dims(op: &'static str, a: &StateVector, b: &StateVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::shape(op, format!("dimensions {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

fn check_pairs(op: &'static str, predictions: &[StateVector], targets: &[StateVector]) -> Result<()> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(Error::shape(
            op,
            format!("{} predictions for {} targets", predictions.len(), targets.len()),
        ));
    }
    predictions
        .iter()
        .zip(targets)
        .try_for_each(|(p, t)| check_dims(op, p, t))
}

/// Coefficient of determination `1 - SSE / SST` over all real and imaginary
/// components, with SST taken about the per-component mean of the targets.
pub fn r2_score(predictions: &[StateVector], targets: &[StateVector]) -> Result<f64> {
    check_pairs("r2_score", predictions, targets)?;
    let dim = targets[0].dim();
    if targets.iter().any(|t| t.dim() != dim) {
        return Err(Error::shape("r2_score", "targets of different dimensions"));
    }
    let count = targets.len() as f64;
    let mut mean = vec![num_complex::Complex64::new(0.0, 0.0); dim];
    for t in targets {
        for (m, z) in mean.iter_mut().zip(t.as_slice()) {
            *m += z;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut sse = 0.0;
    let mut sst = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        for ((pz, tz), m) in p.as_slice().iter().zip(t.as_slice()).zip(&mean) {
            // norm_sqr adds the real and imaginary squared deviations
            sse += (pz - tz).norm_sqr();
            sst += (tz - m).norm_sqr();
        }
    }
    if sst == 0.0 {
        return if sse == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::DegenerateVariance { sse })
        };
    }
    Ok(1.0 - sse / sst)
}

/// Fraction of predictions whose normalised squared overlap with the target,
/// `|<t|p>|^2 / |p|^2`, reaches `threshold`. Global phase does not matter.
pub fn accuracy(predictions: &[StateVector], targets: &[StateVector], threshold: f64) -> Result<f64> {
    check_pairs("accuracy", predictions, targets)?;
    let hits = predictions
        .iter()
        .zip(targets)
        .filter(|(p, t)| {
            let norm_sq = p.norm().powi(2);
            norm_sq > 0.0 && t.inner(p).norm_sqr() / norm_sq >= threshold
        })
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub test_r2: f64,
    pub test_accuracy: f64,
    pub unitarity_err: f64,
}

pub const CSV_HEADER: &str = "epoch,train_mse,test_mse,test_r2,test_accuracy,unitarity_err";

/// One row per epoch, floats with 17 significant digits so the values parse
/// back bit-exactly.
pub fn metrics_to_csv(trace: &[EpochMetrics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for m in trace {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            m.epoch, m.train_mse, m.test_mse, m.test_r2, m.test_accuracy, m.unitarity_err
        ));
    }
    out
}

pub fn metrics_from_csv(text: &str) -> Result<Vec<EpochMetrics>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing metrics header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let err = |message: String| Error::Parse { line: i + 1, message };
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, got {}", fields.len())));
            }
            let float = |k: usize| {
                fields[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad number `{}`", fields[k])))
            };
            Ok(EpochMetrics {
                epoch: fields[0]
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad epoch `{}`", fields[0])))?,
                train_mse: float(1)?,
                test_mse: float(2)?,
                test_r2: float(3)?,
                test_accuracy: float(4)?,
                unitarity_err: float(5)?,
            })
        })
        .collect()
}
