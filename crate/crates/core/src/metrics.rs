//! Dense-prediction accuracy metrics and class-wise calibration error.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::argmax;
use crate::{Error, Result};

/// Default number of calibration bins.
pub const DEFAULT_BINS: usize = 15;

/// Posteriors over one tree level plus ground truth.
///
/// A `None` label marks an ignored sample (void pixel); it is skipped by every
/// metric.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionBatch {
    posteriors: Vec<Vec<f64>>,
    labels: Vec<Option<usize>>,
}

impl PredictionBatch {
    pub fn new(posteriors: Vec<Vec<f64>>, labels: Vec<Option<usize>>) -> Result<Self> {
        if posteriors.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: posteriors.len(),
                got: labels.len(),
            });
        }
        for p in &posteriors {
            let s: f64 = p.iter().sum();
            if !((s - 1.0).abs() <= 1e-9) {
                return Err(Error::InvalidArgument("posterior does not sum to one"));
            }
        }
        Ok(Self { posteriors, labels })
    }

    pub fn posteriors(&self) -> &[Vec<f64>] {
        &self.posteriors
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Rows are ground truth, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        let mut cm = Self::new(k);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            cm.counts[t * k..(t + 1) * k].copy_from_slice(row);
        }
        Ok(cm)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.classes + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::DimensionMismatch {
                expected: self.classes,
                got: other.classes,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    fn row_sum(&self, k: usize) -> u64 {
        self.counts[k * self.classes..(k + 1) * self.classes].iter().sum()
    }

    fn col_sum(&self, k: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, k)).sum()
    }

    /// IoU per class; `None` for classes absent from the ground truth.
    pub fn per_class_iou(&self) -> Vec<Option<f64>> {
        (0..self.classes)
            .map(|k| {
                let row = self.row_sum(k);
                if row == 0 {
                    return None;
                }
                let tp = self.get(k, k);
                let union = row + self.col_sum(k) - tp;
                Some(tp as f64 / union as f64)
            })
            .collect()
    }

    /// Recall per class; `None` for classes absent from the ground truth.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        (0..self.classes)
            .map(|k| match self.row_sum(k) {
                0 => None,
                row => Some(self.get(k, k) as f64 / row as f64),
            })
            .collect()
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.total() == 0 {
            return Err(Error::Empty);
        }
        Ok(())
    }
}

fn mean_present(values: &[Option<f64>]) -> f64 {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    present.iter().sum::<f64>() / present.len() as f64
}

/// Mean IoU over classes present in the ground truth.
pub fn miou(cm: &ConfusionMatrix) -> Result<f64> {
    cm.check_nonempty()?;
    Ok(mean_present(&cm.per_class_iou()))
}

/// Mean per-class accuracy over classes present in the ground truth.
pub fn macc(cm: &ConfusionMatrix) -> Result<f64> {
    cm.check_nonempty()?;
    Ok(mean_present(&cm.per_class_accuracy()))
}

/// Overall accuracy, `trace / total`.
pub fn aacc(cm: &ConfusionMatrix) -> Result<f64> {
    cm.check_nonempty()?;
    let trace: u64 = (0..cm.classes).map(|k| cm.get(k, k)).sum();
    Ok(trace as f64 / cm.total() as f64)
}

/// Per-class, per-bin calibration accumulators on `M` equal-width bins.
///
/// Bin `m` (0-based) covers `(m/M, (m+1)/M]`, except the first bin, which
/// also includes 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBins {
    classes: usize,
    bins: usize,
    counts: Vec<u64>,
    conf_sum: Vec<f64>,
    hits: Vec<u64>,
    /// Evaluated samples per true class.
    class_totals: Vec<u64>,
    samples: u64,
}

/// Which `n` divides the bin sizes in the class-wise ECE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CweceNormalization {
    /// `n` is the number of evaluated samples; per-class bin weights sum to 1.
    #[default]
    AllSamples,
    /// `n` is the number of samples whose true label is the class; classes
    /// with no such samples contribute nothing.
    TrueClass,
}

/// One row of a reliability diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityRow {
    pub bin_center: f64,
    pub count: u64,
    /// Mean predicted probability; `None` for an empty bin.
    pub confidence: Option<f64>,
    /// Fraction of samples whose label is the class; `None` for an empty bin.
    pub accuracy: Option<f64>,
}

/// Bin of probability `p` among `bins` right-inclusive bins.
pub fn bin_index(p: f64, bins: usize) -> usize {
    let scaled = libm::ceil(p * bins as f64);
    if !(scaled >= 1.0) {
        0
    } else {
        ((scaled as usize) - 1).min(bins - 1)
    }
}

impl CalibrationBins {
    pub fn new(classes: usize, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("bin count must be positive"));
        }
        Ok(Self {
            classes,
            bins,
            counts: vec![0; classes * bins],
            conf_sum: vec![0.0; classes * bins],
            hits: vec![0; classes * bins],
            class_totals: vec![0; classes],
            samples: 0,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// `(count, summed probability, hits)` of bin `m` for class `y`.
    pub fn cell(&self, class: usize, bin: usize) -> (u64, f64, u64) {
        let i = class * self.bins + bin;
        (self.counts[i], self.conf_sum[i], self.hits[i])
    }

    fn add(&mut self, probs: &[f64], label: usize) {
        for (y, &p) in probs.iter().enumerate() {
            let i = y * self.bins + bin_index(p, self.bins);
            self.counts[i] += 1;
            self.conf_sum[i] += p;
            if y == label {
                self.hits[i] += 1;
            }
        }
        self.class_totals[label] += 1;
        self.samples += 1;
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.classes != self.classes || other.bins != self.bins {
            return Err(Error::DimensionMismatch {
                expected: self.classes * self.bins,
                got: other.classes * other.bins,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.conf_sum.iter_mut().zip(&other.conf_sum) {
            *a += b;
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        for (a, b) in self.class_totals.iter_mut().zip(&other.class_totals) {
            *a += b;
        }
        self.samples += other.samples;
        Ok(())
    }

    pub fn reliability(&self, class: usize) -> Vec<ReliabilityRow> {
        (0..self.bins)
            .map(|m| {
                let (count, conf, hits) = self.cell(class, m);
                let (confidence, accuracy) = if count == 0 {
                    (None, None)
                } else {
                    (Some(conf / count as f64), Some(hits as f64 / count as f64))
                };
                ReliabilityRow {
                    bin_center: (m as f64 + 0.5) / self.bins as f64,
                    count,
                    confidence,
                    accuracy,
                }
            })
            .collect()
    }
}

/// Adds a batch to both accumulators.
///
/// Ignored samples are skipped; the prediction is the argmax with the lowest
/// index winning ties.
pub fn accumulate(
    batch: &PredictionBatch,
    cm: &mut ConfusionMatrix,
    cb: &mut CalibrationBins,
) -> Result<()> {
    if cm.classes != cb.classes {
        return Err(Error::DimensionMismatch {
            expected: cm.classes,
            got: cb.classes,
        });
    }
    for (p, label) in batch.posteriors.iter().zip(&batch.labels) {
        if p.len() != cm.classes {
            return Err(Error::DimensionMismatch {
                expected: cm.classes,
                got: p.len(),
            });
        }
        if let Some(l) = label {
            if *l >= cm.classes {
                return Err(Error::ClassOutOfRange {
                    index: *l,
                    classes: cm.classes,
                });
            }
        }
    }
    for (p, label) in batch.posteriors.iter().zip(&batch.labels) {
        let Some(label) = *label else { continue };
        cm.add(label, argmax(p));
        cb.add(p, label);
    }
    Ok(())
}

/// Class-wise expected calibration error with `n` = all evaluated samples.
pub fn cwece(cb: &CalibrationBins) -> Result<f64> {
    cwece_with(cb, CweceNormalization::AllSamples)
}

pub fn cwece_with(cb: &CalibrationBins, norm: CweceNormalization) -> Result<f64> {
    if cb.samples == 0 {
        return Err(Error::Empty);
    }
    let mut total = 0.0;
    for y in 0..cb.classes {
        let n = match norm {
            CweceNormalization::AllSamples => cb.samples,
            CweceNormalization::TrueClass => cb.class_totals[y],
        };
        if n == 0 {
            continue;
        }
        let mut class_sum = 0.0;
        for m in 0..cb.bins {
            let (count, conf, hits) = cb.cell(y, m);
            if count == 0 {
                continue;
            }
            let c = count as f64;
            class_sum += (c / n as f64) * (hits as f64 / c - conf / c).abs();
        }
        total += class_sum;
    }
    Ok(total / cb.classes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(k: usize, m: usize) -> (ConfusionMatrix, CalibrationBins) {
        (ConfusionMatrix::new(k), CalibrationBins::new(k, m).unwrap())
    }

    #[test]
    fn binning_is_right_inclusive() {
        assert_eq!(bin_index(0.0, 2), 0);
        assert_eq!(bin_index(0.5, 2), 0);
        assert_eq!(bin_index(0.500001, 2), 1);
        assert_eq!(bin_index(1.0, 2), 1);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(1.0, 15), 14);
    }

    #[test]
    fn empty_and_ignored_batches_change_nothing() {
        let (mut cm, mut cb) = fresh(2, 15);
        accumulate(&PredictionBatch::default(), &mut cm, &mut cb).unwrap();
        let ignored = PredictionBatch::new(vec![vec![0.9, 0.1]], vec![None]).unwrap();
        accumulate(&ignored, &mut cm, &mut cb).unwrap();
        assert_eq!((cm.clone(), cb.clone()), fresh(2, 15));
    }

    #[test]
    fn single_sample_bookkeeping() {
        let (mut cm, mut cb) = fresh(2, 15);
        let b = PredictionBatch::new(vec![vec![0.9, 0.1]], vec![Some(0)]).unwrap();
        accumulate(&b, &mut cm, &mut cb).unwrap();
        assert_eq!(cm.get(0, 0), 1);
        assert_eq!(cm.total(), 1);
        assert_eq!(cb.cell(0, 13), (1, 0.9, 1));
        assert_eq!(cb.cell(1, 1), (1, 0.1, 0));
    }

    #[test]
    fn hand_confusion_matrix() {
        let cm = ConfusionMatrix::from_rows(&[vec![2, 1], vec![1, 2]]).unwrap();
        assert_eq!(miou(&cm).unwrap(), 0.5);
        assert_eq!(macc(&cm).unwrap(), 2.0 / 3.0);
        assert_eq!(aacc(&cm).unwrap(), 2.0 / 3.0);
        let diag = ConfusionMatrix::from_rows(&[vec![3, 0], vec![0, 5]]).unwrap();
        assert_eq!((miou(&diag).unwrap(), macc(&diag).unwrap(), aacc(&diag).unwrap()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn absent_classes_are_excluded() {
        let cm = ConfusionMatrix::from_rows(&[vec![4, 0, 0], vec![0, 4, 0], vec![0, 0, 0]]).unwrap();
        assert_eq!(miou(&cm).unwrap(), 1.0);
        assert_eq!(cm.per_class_iou()[2], None);
        // Predicted-but-absent class still costs the true class IoU.
        let cm = ConfusionMatrix::from_rows(&[vec![3, 0, 1], vec![0, 4, 0], vec![0, 0, 0]]).unwrap();
        assert_eq!(miou(&cm).unwrap(), (0.75 + 1.0) / 2.0);
        assert_eq!(miou(&ConfusionMatrix::new(2)), Err(Error::Empty));
    }

    #[test]
    fn cwece_hand_example() {
        let p1 = [0.9, 0.8, 0.2, 0.1];
        let labels = [1, 0, 0, 1];
        let batch = PredictionBatch::new(
            p1.iter().map(|p| vec![1.0 - p, *p]).collect(),
            labels.iter().map(|l| Some(*l)).collect(),
        )
        .unwrap();
        let (mut cm, mut cb) = fresh(2, 2);
        accumulate(&batch, &mut cm, &mut cb).unwrap();
        assert!((cwece(&cb).unwrap() - 0.35).abs() < 1e-12);
    }

    #[test]
    fn cwece_one_hot_correct_is_zero() {
        let batch = PredictionBatch::new(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
            vec![Some(0), Some(2), Some(1)],
        )
        .unwrap();
        let (mut cm, mut cb) = fresh(3, 15);
        accumulate(&batch, &mut cm, &mut cb).unwrap();
        assert_eq!(cwece(&cb).unwrap(), 0.0);
    }

    #[test]
    fn cwece_uniform_balanced_is_zero() {
        let k = 4;
        let batch = PredictionBatch::new(
            vec![vec![0.25; k]; 8],
            (0..8).map(|i| Some(i % k)).collect(),
        )
        .unwrap();
        let (mut cm, mut cb) = fresh(k, 15);
        accumulate(&batch, &mut cm, &mut cb).unwrap();
        assert!(cwece(&cb).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cwece_true_class_normalization() {
        // 3 samples of class 0, 1 of class 1: the per-class n differs from 4.
        let batch = PredictionBatch::new(
            vec![vec![0.6, 0.4]; 4],
            vec![Some(0), Some(0), Some(0), Some(1)],
        )
        .unwrap();
        let (mut cm, mut cb) = fresh(2, 10);
        accumulate(&batch, &mut cm, &mut cb).unwrap();
        let all = cwece_with(&cb, CweceNormalization::AllSamples).unwrap();
        let per = cwece_with(&cb, CweceNormalization::TrueClass).unwrap();
        // class 0: one bin, acc .75, conf .6; class 1: acc .25 conf .4.
        assert!((all - 0.15).abs() < 1e-12);
        assert!((per - (4.0 / 3.0 * 0.15 + 4.0 * 0.15) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cwece_needs_samples() {
        assert_eq!(cwece(&CalibrationBins::new(2, 15).unwrap()), Err(Error::Empty));
        assert!(CalibrationBins::new(2, 0).is_err());
    }

    #[test]
    fn batch_validation() {
        assert!(PredictionBatch::new(vec![vec![0.5, 0.6]], vec![Some(0)]).is_err());
        assert!(PredictionBatch::new(vec![vec![0.5, 0.5]], vec![]).is_err());
        let (mut cm, mut cb) = fresh(2, 15);
        let bad = PredictionBatch::new(vec![vec![0.5, 0.5]], vec![Some(2)]).unwrap();
        assert!(accumulate(&bad, &mut cm, &mut cb).is_err());
        assert_eq!(cm.total(), 0);
    }
}
