//! JSON reports written to the output directory.

use std::fs;
use std::path::Path;

use serde::Serialize;

use hyperhier_core::analysis::{ConcavityRow, Cv, CvRecord, Summary};
use hyperhier_core::metrics::{
    aacc, cwece_with, macc, miou, CalibrationBins, ConfusionMatrix, CweceNormalization,
};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityPoint {
    pub bin_center: f64,
    pub count: u64,
    pub confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReliability {
    pub class: usize,
    pub name: String,
    pub rows: Vec<ReliabilityPoint>,
}

/// Segmentation and calibration metrics for one tree level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub level: usize,
    pub classes: Vec<String>,
    pub samples: u64,
    #[serde(rename = "mIoU")]
    pub miou: f64,
    #[serde(rename = "mAcc")]
    pub macc: f64,
    #[serde(rename = "aAcc")]
    pub aacc: f64,
    #[serde(rename = "cwECE")]
    pub cwece: f64,
    pub cwece_normalization: &'static str,
    pub bins: usize,
    pub per_class_iou: Vec<Option<f64>>,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub reliability: Vec<ClassReliability>,
    pub confusion: Vec<Vec<u64>>,
}

pub fn normalization_name(norm: CweceNormalization) -> &'static str {
    match norm {
        CweceNormalization::AllSamples => "all",
        CweceNormalization::TrueClass => "true-class",
    }
}

impl MetricsReport {
    pub fn from_accumulators(
        level: usize,
        names: &[String],
        cm: &ConfusionMatrix,
        cb: &CalibrationBins,
        norm: CweceNormalization,
    ) -> Result<Self, HarnessError> {
        let k = cm.classes();
        Ok(MetricsReport {
            level,
            classes: names.to_vec(),
            samples: cm.total(),
            miou: miou(cm)?,
            macc: macc(cm)?,
            aacc: aacc(cm)?,
            cwece: cwece_with(cb, norm)?,
            cwece_normalization: normalization_name(norm),
            bins: cb.bins(),
            per_class_iou: cm.per_class_iou(),
            per_class_accuracy: cm.per_class_accuracy(),
            reliability: (0..k)
                .map(|y| ClassReliability {
                    class: y,
                    name: names[y].clone(),
                    rows: cb
                        .reliability(y)
                        .into_iter()
                        .map(|r| ReliabilityPoint {
                            bin_center: r.bin_center,
                            count: r.count,
                            confidence: r.confidence,
                            accuracy: r.accuracy,
                        })
                        .collect(),
                })
                .collect(),
            confusion: (0..k).map(|t| (0..k).map(|p| cm.get(t, p)).collect()).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEntry {
    pub class: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl NormEntry {
    pub fn from_summaries(stats: &[Summary]) -> Vec<Self> {
        stats
            .iter()
            .enumerate()
            .map(|(class, s)| NormEntry {
                class,
                mean: s.mean,
                std_dev: s.std_dev,
            })
            .collect()
    }
}

/// One CV table cell; `cv` is null and `degenerate` set when the mean
/// distance was zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvEntry {
    pub anchor: usize,
    pub other: usize,
    pub cv: Option<f64>,
    pub degenerate: bool,
    pub pairs: usize,
}

impl From<&CvRecord> for CvEntry {
    fn from(r: &CvRecord) -> Self {
        CvEntry {
            anchor: r.anchor,
            other: r.other,
            cv: r.cv.value(),
            degenerate: matches!(r.cv, Cv::Degenerate),
            pairs: r.pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityEntry {
    pub euclidean: f64,
    pub hyperbolic: f64,
    pub derivative: f64,
    pub finite_difference: f64,
}

impl From<&ConcavityRow> for ConcavityEntry {
    fn from(r: &ConcavityRow) -> Self {
        ConcavityEntry {
            euclidean: r.euclidean,
            hyperbolic: r.hyperbolic,
            derivative: r.derivative,
            finite_difference: r.finite_difference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub norm1: f64,
    pub norm2: f64,
    pub concave: bool,
    pub rows: Vec<ConcavityEntry>,
}

/// Embedding diagnostics for a trained model on held-out data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub geometry: &'static str,
    pub norm_stats: Vec<NormEntry>,
    pub embedding_cv: Vec<CvEntry>,
    pub mean_embedding_cv: Option<f64>,
    pub plane_cv: Vec<CvEntry>,
    pub mean_plane_cv: Option<f64>,
    pub concavity: ConcavityReport,
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    fs::write(path, to_json(value)).map_err(|e| HarnessError::io(path, e))
}
