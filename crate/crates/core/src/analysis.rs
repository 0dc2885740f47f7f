//! Embedding-geometry diagnostics: per-class norm statistics, coefficient of
//! variation (CV) of inter-class distances, and concavity scans.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{dh_de_derivative, hyperbolic_distance_from_euclidean, hyperbolic_distance_raw, BallConfig};
use crate::linalg::{dist_sq, dot, norm};
use crate::mlr::gyroplane_distance;
use crate::train::FlatModel;
use crate::{BallPoint, Error, Result};

/// Default cap on the number of distance pairs per (anchor, other) cell.
pub const DEFAULT_PAIR_CAP: usize = 100_000;

/// Where a set of embeddings lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmbeddingSpace {
    Euclidean,
    Ball(BallConfig),
}

/// Per-sample coordinates with child-class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    space: EmbeddingSpace,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl LabeledEmbeddings {
    pub fn new(space: EmbeddingSpace, points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = points.first() {
            let dim = first.len();
            for p in &points {
                if p.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: p.len(),
                    });
                }
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite);
                }
                if let EmbeddingSpace::Ball(cfg) = &space {
                    BallPoint::new(p.clone(), cfg)?;
                }
            }
        }
        Ok(Self {
            space,
            points,
            labels,
        })
    }

    pub fn space(&self) -> EmbeddingSpace {
        self.space
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Coordinate dimension, or `None` when there are no samples.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    /// Indices of the samples labelled `class`.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match &self.space {
            EmbeddingSpace::Euclidean => Ok(libm::sqrt(dist_sq(a, b))),
            EmbeddingSpace::Ball(cfg) => hyperbolic_distance_raw(a, b, cfg),
        }
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
}

fn summarize(values: &[f64]) -> Summary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Summary {
        mean,
        std_dev: libm::sqrt(var),
    }
}

/// Mean and standard deviation of `|embedding|` for every class `0..classes`.
pub fn class_norm_stats(data: &LabeledEmbeddings, classes: usize) -> Result<Vec<Summary>> {
    (0..classes)
        .map(|k| {
            let norms: Vec<f64> = data
                .class_indices(k)
                .into_iter()
                .map(|i| norm(&data.points[i]))
                .collect();
            if norms.is_empty() {
                return Err(Error::EmptyClass(k));
            }
            Ok(summarize(&norms))
        })
        .collect()
}

/// A coefficient of variation, or a flag when the mean distance is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cv {
    Value(f64),
    Degenerate,
}

impl Cv {
    fn from_samples(values: &[f64]) -> Self {
        let s = summarize(values);
        if s.mean > 0.0 {
            Cv::Value(s.std_dev / s.mean)
        } else {
            Cv::Degenerate
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Cv::Value(v) => Some(v),
            Cv::Degenerate => None,
        }
    }
}

/// CV of distances between the anchor class and one other class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvRecord {
    pub anchor: usize,
    pub other: usize,
    pub cv: Cv,
    /// Number of distances the CV was computed from.
    pub pairs: usize,
}

/// Mean of the non-degenerate CVs in `records`.
pub fn mean_cv(records: &[CvRecord]) -> Option<f64> {
    let vals: Vec<f64> = records.iter().filter_map(|r| r.cv.value()).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn class_members(data: &LabeledEmbeddings, class: usize) -> Result<Vec<usize>> {
    let idx = data.class_indices(class);
    if idx.len() < 2 {
        return Err(Error::EmptyClass(class));
    }
    Ok(idx)
}

/// Pairs `(i, j)` to measure: all of them when there are at most `cap`,
/// otherwise `cap` uniform draws (with replacement) from a generator keyed
/// on `(seed, anchor, other)`.
fn pair_indices(
    anchor: &[usize],
    other: &[usize],
    cap: usize,
    seed: u64,
    stream: u64,
) -> Vec<(usize, usize)> {
    let total = anchor.len() * other.len();
    if total <= cap {
        return anchor
            .iter()
            .flat_map(|&a| other.iter().map(move |&b| (a, b)))
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..cap)
        .map(|_| {
            (
                anchor[rng.random_range(0..anchor.len())],
                other[rng.random_range(0..other.len())],
            )
        })
        .collect()
}

/// For every class other than `anchor`, the CV of the distances between
/// anchor samples and that class's samples, in the data's own geometry.
pub fn interclass_distance_cv(
    data: &LabeledEmbeddings,
    anchor: usize,
    classes: usize,
    pair_cap: usize,
    seed: u64,
) -> Result<Vec<CvRecord>> {
    if anchor >= classes {
        return Err(Error::ClassOutOfRange {
            index: anchor,
            classes,
        });
    }
    let anchor_idx = class_members(data, anchor)?;
    let mut out = Vec::with_capacity(classes - 1);
    for other in (0..classes).filter(|&k| k != anchor) {
        let other_idx = class_members(data, other)?;
        let stream = (anchor * classes + other) as u64;
        let pairs = pair_indices(&anchor_idx, &other_idx, pair_cap.max(1), seed, stream);
        let dists = pairs
            .iter()
            .map(|&(a, b)| data.distance(&data.points[a], &data.points[b]))
            .collect::<Result<Vec<_>>>()?;
        out.push(CvRecord {
            anchor,
            other,
            cv: Cv::from_samples(&dists),
            pairs: dists.len(),
        });
    }
    Ok(out)
}

/// For every class other than `anchor`, the CV of the distances from anchor
/// samples to that class's decision surface: gyroplane distance for the
/// hyperbolic head, `|a·x + b| / |a|` for the Euclidean one.
///
/// `data` must already live in the model's space (see [`FlatModel::embed_all`]).
pub fn plane_distance_cv(data: &LabeledEmbeddings, model: &FlatModel, anchor: usize) -> Result<Vec<CvRecord>> {
    let classes = model.num_classes();
    if anchor >= classes {
        return Err(Error::ClassOutOfRange {
            index: anchor,
            classes,
        });
    }
    let anchor_idx = class_members(data, anchor)?;
    let mut out = Vec::with_capacity(classes - 1);
    for other in (0..classes).filter(|&k| k != anchor) {
        let dists: Vec<f64> = match (model, &data.space) {
            (FlatModel::Euclidean(m), EmbeddingSpace::Euclidean) => {
                let a = m.weights()[other].as_slice();
                let b = m.biases()[other];
                let an = norm(a);
                if !(an > 0.0) {
                    return Err(Error::ZeroNormal);
                }
                anchor_idx
                    .iter()
                    .map(|&i| (dot(a, &data.points[i]) + b).abs() / an)
                    .collect()
            }
            (FlatModel::Hyperbolic(m), EmbeddingSpace::Ball(_)) => {
                let g = &m.gyroplanes()[other];
                anchor_idx
                    .iter()
                    .map(|&i| {
                        let h = BallPoint::new(data.points[i].clone(), m.ball())?;
                        gyroplane_distance(&h, g, m.ball())
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            _ => return Err(Error::InvalidArgument("embeddings do not live in the model's space")),
        };
        out.push(CvRecord {
            anchor,
            other,
            cv: Cv::from_samples(&dists),
            pairs: dists.len(),
        });
    }
    Ok(out)
}

/// One row of a concavity scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityRow {
    pub euclidean: f64,
    pub hyperbolic: f64,
    pub derivative: f64,
    pub finite_difference: f64,
}

const FD_STEP: f64 = 1e-6;

/// Tabulates the hyperbolic distance between points of norms `norm1` and
/// `norm2` as a function of their Euclidean distance, with the analytic and a
/// finite-difference derivative side by side.
///
/// The finite difference is central, except for grid points closer to zero
/// than the step, where a forward difference is used.
pub fn concavity_scan(norm1: f64, norm2: f64, de_grid: &[f64]) -> Result<Vec<ConcavityRow>> {
    if de_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("grid must be strictly ascending"));
    }
    let f = |de: f64| hyperbolic_distance_from_euclidean(de, norm1, norm2);
    de_grid
        .iter()
        .map(|&de| {
            let hyperbolic = f(de)?;
            let derivative = dh_de_derivative(de, norm1, norm2)?;
            let finite_difference = if de > FD_STEP {
                (f(de + FD_STEP)? - f(de - FD_STEP)?) / (2.0 * FD_STEP)
            } else {
                (f(de + FD_STEP)? - hyperbolic) / FD_STEP
            };
            Ok(ConcavityRow {
                euclidean: de,
                hyperbolic,
                derivative,
                finite_difference,
            })
        })
        .collect()
}

/// Summary of the concavity checks over a scan.
pub fn scan_is_concave(rows: &[ConcavityRow]) -> bool {
    let decreasing = rows.windows(2).all(|w| w[1].derivative < w[0].derivative);
    let second_diff_ok = rows.windows(3).all(|w| {
        // Second divided difference, valid for non-uniform grids.
        let s1 = (w[1].hyperbolic - w[0].hyperbolic) / (w[1].euclidean - w[0].euclidean);
        let s2 = (w[2].hyperbolic - w[1].hyperbolic) / (w[2].euclidean - w[1].euclidean);
        s2 <= s1
    });
    decreasing && second_diff_ok
}

/// Reference grid used when no grid is given.
pub fn default_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(points: Vec<Vec<f64>>, labels: Vec<usize>) -> LabeledEmbeddings {
        LabeledEmbeddings::new(EmbeddingSpace::Euclidean, points, labels).unwrap()
    }

    #[test]
    fn norm_stats() {
        let d = euclid(vec![vec![0.0, 0.0]; 4], vec![0, 0, 1, 1]);
        let s = class_norm_stats(&d, 2).unwrap();
        assert_eq!(s[0], Summary { mean: 0.0, std_dev: 0.0 });
        let d = euclid(vec![vec![0.4, 0.0], vec![0.0, 0.6]], vec![0, 0]);
        assert!((class_norm_stats(&d, 1).unwrap()[0].mean - 0.5).abs() < 1e-15);
        assert_eq!(class_norm_stats(&d, 2), Err(Error::EmptyClass(1)));
    }

    #[test]
    fn point_mass_classes_have_zero_cv() {
        let d = euclid(
            vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 4.0], vec![3.0, 4.0]],
            vec![0, 0, 1, 1],
        );
        let r = interclass_distance_cv(&d, 0, 2, DEFAULT_PAIR_CAP, 0).unwrap();
        assert_eq!(r[0].cv, Cv::Value(0.0));
        assert_eq!(r[0].pairs, 4);
    }

    #[test]
    fn coincident_classes_are_degenerate() {
        let d = euclid(vec![vec![1.0, 1.0]; 4], vec![0, 0, 1, 1]);
        let r = interclass_distance_cv(&d, 0, 2, DEFAULT_PAIR_CAP, 0).unwrap();
        assert_eq!(r[0].cv, Cv::Degenerate);
        assert_eq!(mean_cv(&r), None);
    }

    #[test]
    fn pair_cap_subsamples_deterministically() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let d = euclid(pts, labels);
        let a = interclass_distance_cv(&d, 0, 2, 50, 9).unwrap();
        let b = interclass_distance_cv(&d, 0, 2, 50, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].pairs, 50);
    }

    #[test]
    fn plane_distance_on_hyperplane_is_zero() {
        use crate::mlr::EuclideanMLR;
        use crate::TangentVector;
        let m = EuclideanMLR::new(
            vec![TangentVector::new(vec![0.0, 1.0]), TangentVector::new(vec![1.0, 0.0])],
            vec![0.0, -1.0],
        )
        .unwrap();
        let d = euclid(vec![vec![1.0, 0.0], vec![1.0, 5.0]], vec![0, 0]);
        let r = plane_distance_cv(&d, &FlatModel::Euclidean(m), 0).unwrap();
        // Both anchors lie on the plane x = 1 of class 1.
        assert_eq!(r[0].cv, Cv::Degenerate);
    }

    #[test]
    fn concavity_examples() {
        let rows = concavity_scan(0.0, 0.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rows[0].hyperbolic, 0.0);
        assert_eq!(rows[0].derivative, 2.0);
        assert!((rows[1].hyperbolic - libm::acosh(1.5)).abs() < 1e-15);
        assert!((rows[2].hyperbolic - libm::acosh(3.0)).abs() < 1e-15);
        assert!((rows[1].hyperbolic - 0.962_423_650_119_206_9).abs() < 1e-15);
        assert!((rows[2].hyperbolic - 1.762_747_174_039_086).abs() < 1e-15);
        assert!(scan_is_concave(&rows));
        assert!(concavity_scan(1.0, 0.0, &[0.5]).is_err());
        assert!(concavity_scan(0.0, 0.0, &[1.0, 0.5]).is_err());
    }
}
