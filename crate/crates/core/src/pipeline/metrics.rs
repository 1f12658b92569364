use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;

/// Binary confusion counts over every label of every sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

/// Ratio that is 0 with a flag when the denominator vanishes.
fn ratio(num: usize, den: usize, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(format!(
            "{name} undefined (zero denominator), reported as 0"
        ));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Evaluation summary of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    /// Mean squared complex modulus of the error, per entry.
    pub mse: Option<f64>,
    /// Same error for the regularized least-squares estimate alone.
    pub baseline_mse: Option<f64>,
    pub confusion: Option<Confusion>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Accuracy of predicting no attacked bus at all.
    pub zeros_accuracy: Option<f64>,
    /// Accuracy of predicting every metered bus attacked.
    pub ones_accuracy: Option<f64>,
    /// Notes on metrics defined by convention.
    pub flags: Vec<String>,
}

pub const METRICS_CSV_HEADER: &str =
    "split,samples,mse,baseline_mse,accuracy,precision,recall,f1,zeros_accuracy,ones_accuracy";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

impl MetricsReport {
    fn empty(samples: usize) -> Self {
        MetricsReport {
            samples,
            mse: None,
            baseline_mse: None,
            confusion: None,
            accuracy: None,
            precision: None,
            recall: None,
            f1: None,
            zeros_accuracy: None,
            ones_accuracy: None,
            flags: Vec::new(),
        }
    }

    pub fn csv_row(&self, split: &str) -> String {
        format!(
            "{split},{},{},{},{},{},{},{},{},{}",
            self.samples,
            cell(self.mse),
            cell(self.baseline_mse),
            cell(self.accuracy),
            cell(self.precision),
            cell(self.recall),
            cell(self.f1),
            cell(self.zeros_accuracy),
            cell(self.ones_accuracy)
        )
    }
}

/// Mean of `|ŷ − y|²` over every entry of every sample.
pub fn mean_squared_error(predictions: &[CVector], truth: &[CVector]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            predictions.len(),
            truth.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, t) in predictions.iter().zip(truth) {
        if p.len() != t.len() {
            return Err(Error::Dimension(format!(
                "prediction of length {} for target {}",
                p.len(),
                t.len()
            )));
        }
        sum += (p - t).norm_squared();
        count += p.len();
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

pub fn regression_metrics(
    predictions: &[CVector],
    truth: &[CVector],
    baseline: Option<&[CVector]>,
) -> Result<MetricsReport> {
    let mut report = MetricsReport::empty(truth.len());
    report.mse = Some(mean_squared_error(predictions, truth)?);
    if let Some(b) = baseline {
        report.baseline_mse = Some(mean_squared_error(b, truth)?);
    }
    Ok(report)
}

/// Threshold scores and score them against 0/1 labels.
pub fn classification_metrics(
    scores: &[DVector<f64>],
    labels: &[DVector<f64>],
    threshold: f64,
) -> Result<MetricsReport> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            scores.len(),
            labels.len()
        )));
    }
    let mut c = Confusion::default();
    let mut positives = 0usize;
    for (s, l) in scores.iter().zip(labels) {
        if s.len() != l.len() {
            return Err(Error::Dimension(format!(
                "score of length {} for labels {}",
                s.len(),
                l.len()
            )));
        }
        for (&p, &a) in s.iter().zip(l.iter()) {
            let actual = a > 0.5;
            positives += actual as usize;
            c.add(p >= threshold, actual);
        }
    }
    let mut report = MetricsReport::empty(labels.len());
    let total = c.total();
    let flags = &mut report.flags;
    let accuracy = ratio(c.tp + c.tn, total, "accuracy", flags);
    let precision = ratio(c.tp, c.tp + c.fp, "precision", flags);
    let recall = ratio(c.tp, c.tp + c.fn_, "recall", flags);
    let f1 = if c.tp == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    report.zeros_accuracy = Some(ratio(total - positives, total, "all-zeros accuracy", flags));
    report.ones_accuracy = Some(if total == 0 {
        0.0
    } else {
        positives as f64 / total as f64
    });
    report.confusion = Some(c);
    report.accuracy = Some(accuracy);
    report.precision = Some(precision);
    report.recall = Some(recall);
    report.f1 = Some(f1);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng;
    use num_complex::Complex64;
    use rand::Rng;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn perfect_predictions() {
        let l = vec![dv(&[1.0, 0.0, 1.0]), dv(&[0.0, 0.0, 1.0])];
        let m = classification_metrics(&l, &l, 0.5).unwrap();
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(m.f1, Some(1.0));
        assert!(m.flags.is_empty());
    }

    #[test]
    fn one_tp_one_fp() {
        let m =
            classification_metrics(&[dv(&[0.9, 0.6, 0.1])], &[dv(&[1.0, 0.0, 0.0])], 0.5).unwrap();
        assert_eq!(m.precision, Some(0.5));
        assert_eq!(m.recall, Some(1.0));
        assert!((m.f1.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.accuracy, Some(2.0 / 3.0));
    }

    #[test]
    fn all_negative_labels_flag_recall_and_precision() {
        let labels = vec![dv(&[0.0, 0.0]); 3];
        let scores = vec![dv(&[0.1, 0.2]); 3];
        let m = classification_metrics(&scores, &labels, 0.5).unwrap();
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(m.f1, Some(0.0));
        assert_eq!(m.zeros_accuracy, Some(1.0));
        assert_eq!(m.ones_accuracy, Some(0.0));
        assert_eq!(m.flags.len(), 2);
    }

    #[test]
    fn random_pairs_match_counting_oracle() {
        let mut r = rng(11);
        let scores: Vec<DVector<f64>> = (0..100)
            .map(|_| DVector::from_fn(10, |_, _| r.random::<f64>()))
            .collect();
        let labels: Vec<DVector<f64>> = (0..100)
            .map(|_| DVector::from_fn(10, |_, _| if r.random::<bool>() { 1.0 } else { 0.0 }))
            .collect();
        let m = classification_metrics(&scores, &labels, 0.5).unwrap();
        let pairs: Vec<(bool, bool)> = scores
            .iter()
            .flat_map(|s| s.iter().map(|&x| x >= 0.5).collect::<Vec<_>>())
            .zip(
                labels
                    .iter()
                    .flat_map(|l| l.iter().map(|&x| x == 1.0).collect::<Vec<_>>()),
            )
            .collect();
        let count = |p: bool, a: bool| pairs.iter().filter(|&&x| x == (p, a)).count() as f64;
        let (tp, fp, fn_, tn) = (
            count(true, true),
            count(true, false),
            count(false, true),
            count(false, false),
        );
        assert_eq!(tp + fp + fn_ + tn, 1000.0);
        let p = tp / (tp + fp);
        let rc = tp / (tp + fn_);
        assert!((m.accuracy.unwrap() - (tp + tn) / 1000.0).abs() < 1e-15);
        assert!((m.precision.unwrap() - p).abs() < 1e-15);
        assert!((m.recall.unwrap() - rc).abs() < 1e-15);
        assert!((m.f1.unwrap() - 2.0 * p * rc / (p + rc)).abs() < 1e-15);
        let c = m.confusion.unwrap();
        assert_eq!((c.tp + c.tn) as f64, m.accuracy.unwrap() * 1000.0);
    }

    #[test]
    fn mse_is_mean_squared_modulus() {
        let y = vec![CVector::from_vec(vec![
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 0.0),
        ])];
        let t = vec![CVector::from_vec(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 2.0),
        ])];
        let m = regression_metrics(&y, &t, Some(&t)).unwrap();
        assert_eq!(m.mse, Some(3.0));
        assert_eq!(m.baseline_mse, Some(0.0));
        assert!(mean_squared_error(&y, &[]).is_err());
        assert!(m.csv_row("test").starts_with("test,1,3.0"));
    }
}
