//! Training of the flat heads and of the one-vs-all per-node baseline.
//!
//! Offsets follow Riemannian SGD: the Euclidean gradient is rescaled by
//! `1/λ_r²` and applied through the exponential map at `r`. Normals and all
//! Euclidean parameters take plain SGD steps. Mini-batches come from a fresh
//! permutation per epoch drawn from ChaCha8 keyed on `(seed, epoch)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::{EmbeddingSpace, LabeledEmbeddings};
use crate::geometry::{
    conformal_factor, exp_map, exp_map_origin, BallConfig, BallPoint, TangentVector,
};
use crate::linalg::{argmax, dot};
use crate::mlr::{
    euclidean_posteriors, grad_euclidean, grad_hyperbolic, hyperbolic_posteriors, EuclideanGrads,
    EuclideanMLR, Gyroplane, HyperbolicGrads, HyperbolicMLR,
};
use crate::taxonomy::LabelTree;
use crate::{Error, Result};

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Riemannian SGD rate for gyroplane offsets.
    pub lr_offsets: f64,
    /// SGD rate for gyroplane normals.
    pub lr_normals: f64,
    /// SGD rate for every Euclidean parameter.
    pub lr_euclidean: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_offsets: 1e-4,
            lr_normals: 1e-3,
            lr_euclidean: 1e-3,
            steps: 5000,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.lr_offsets, self.lr_normals, self.lr_euclidean];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidConfig("learning rates must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::Euclidean => "euclidean",
            Geometry::Hyperbolic => "hyperbolic",
        }
    }
}

impl core::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Geometry::Euclidean),
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            _ => Err(Error::InvalidArgument("geometry must be `euclidean` or `hyperbolic`")),
        }
    }
}

/// A trained flat classifier over raw Euclidean features.
///
/// The hyperbolic variant maps features into the ball with `Exp_0` as the
/// first step of its forward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum FlatModel {
    Euclidean(EuclideanMLR),
    Hyperbolic(HyperbolicMLR),
}

impl FlatModel {
    pub fn geometry(&self) -> Geometry {
        match self {
            FlatModel::Euclidean(_) => Geometry::Euclidean,
            FlatModel::Hyperbolic(_) => Geometry::Hyperbolic,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            FlatModel::Euclidean(m) => m.num_classes(),
            FlatModel::Hyperbolic(m) => m.num_classes(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FlatModel::Euclidean(m) => m.dim(),
            FlatModel::Hyperbolic(m) => m.dim(),
        }
    }

    /// Coordinates the classifier actually operates on: the features
    /// themselves, or their image under `Exp_0`.
    pub fn embed(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: features.len(),
            });
        }
        match self {
            FlatModel::Euclidean(_) => Ok(features.to_vec()),
            FlatModel::Hyperbolic(m) => {
                Ok(exp_map_origin(&TangentVector::new(features.to_vec()), m.ball())?.into_inner())
            }
        }
    }

    /// Embeds every sample and tags the result with the model's space.
    pub fn embed_all(&self, data: &LabeledEmbeddings) -> Result<LabeledEmbeddings> {
        let points = data
            .points()
            .iter()
            .map(|x| self.embed(x))
            .collect::<Result<Vec<_>>>()?;
        let space = match self {
            FlatModel::Euclidean(_) => EmbeddingSpace::Euclidean,
            FlatModel::Hyperbolic(m) => EmbeddingSpace::Ball(*m.ball()),
        };
        LabeledEmbeddings::new(space, points, data.labels().to_vec())
    }

    /// Class posteriors for one raw feature vector.
    pub fn posteriors(&self, features: &[f64]) -> Result<Vec<f64>> {
        match self {
            FlatModel::Euclidean(m) => {
                euclidean_posteriors(&TangentVector::new(features.to_vec()), m)
            }
            FlatModel::Hyperbolic(m) => {
                let h = BallPoint::new(self.embed(features)?, m.ball())?;
                hyperbolic_posteriors(&h, m)
            }
        }
    }

    /// Argmax prediction, lowest index on ties.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(argmax(&self.posteriors(features)?))
    }
}

/// Trained model plus the mean mini-batch loss of every step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: FlatModel,
    pub loss_trace: Vec<f64>,
}

fn gaussian_vectors(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0 / libm::sqrt(dim as f64)).expect("valid standard deviation");
    (0..count)
        .map(|_| (0..dim).map(|_| normal.sample(rng)).collect())
        .collect()
}

fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Normals ~ N(0, 1/n) per coordinate, offsets at the origin.
pub fn init_hyperbolic(classes: usize, dim: usize, ball: BallConfig, seed: u64) -> Result<HyperbolicMLR> {
    let mut rng = init_rng(seed);
    let planes = gaussian_vectors(&mut rng, classes, dim)
        .into_iter()
        .map(|w| Gyroplane::new(BallPoint::origin(dim), TangentVector::new(w)))
        .collect::<Result<Vec<_>>>()?;
    HyperbolicMLR::new(planes, ball)
}

/// Weights ~ N(0, 1/n) per coordinate, zero biases.
pub fn init_euclidean(classes: usize, dim: usize, seed: u64) -> Result<EuclideanMLR> {
    let mut rng = init_rng(seed);
    let weights = gaussian_vectors(&mut rng, classes, dim)
        .into_iter()
        .map(TangentVector::new)
        .collect();
    EuclideanMLR::new(weights, vec![0.0; classes])
}

/// One optimizer step on the hyperbolic head.
///
/// Offsets move by `r ← Exp_r(-lr_offsets · ∇r / λ_r²)`, normals by
/// `w ← w - lr_normals · ∇w`.
pub fn rsgd_step(
    model: &HyperbolicMLR,
    grads: &HyperbolicGrads,
    cfg: &TrainConfig,
) -> Result<HyperbolicMLR> {
    if !grads.is_finite() {
        return Err(Error::NonFinite);
    }
    let ball = model.ball();
    let mut planes = Vec::with_capacity(model.num_classes());
    for ((g, gr), gw) in model.gyroplanes().iter().zip(&grads.offsets).zip(&grads.normals) {
        let lambda = conformal_factor(g.offset(), ball)?;
        let scale = -cfg.lr_offsets / (lambda * lambda);
        let step = TangentVector::new(gr.iter().map(|v| v * scale).collect());
        let offset = exp_map(g.offset(), &step, ball)?;
        let normal: Vec<f64> = g
            .normal()
            .as_slice()
            .iter()
            .zip(gw)
            .map(|(w, d)| w - cfg.lr_normals * d)
            .collect();
        planes.push(Gyroplane::new(offset, TangentVector::new(normal))?);
    }
    Ok(HyperbolicMLR::from_parts_unchecked(planes, *ball))
}

/// One plain SGD step on the Euclidean head.
pub fn sgd_step_euclidean(model: &EuclideanMLR, grads: &EuclideanGrads, lr: f64) -> Result<EuclideanMLR> {
    let finite = grads.weights.iter().flatten().chain(&grads.biases).all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite);
    }
    let mut next = model.clone();
    let (weights, biases) = next.parts_mut();
    for (w, g) in weights.iter_mut().zip(&grads.weights) {
        for (wi, gi) in w.as_mut_slice().iter_mut().zip(g) {
            *wi -= lr * gi;
        }
    }
    for (b, g) in biases.iter_mut().zip(&grads.biases) {
        *b -= lr * g;
    }
    Ok(next)
}

/// Yields mini-batches of sample indices, reshuffling at each epoch start.
struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    epoch: u64,
    seed: u64,
    batch: usize,
}

impl BatchSampler {
    fn new(samples: usize, batch: usize, seed: u64) -> Self {
        Self {
            order: (0..samples).collect(),
            pos: samples,
            epoch: 0,
            seed,
            batch,
        }
    }

    fn next_batch(&mut self) -> &[usize] {
        if self.pos >= self.order.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(self.epoch + 1);
            for (i, v) in self.order.iter_mut().enumerate() {
                *v = i;
            }
            self.order.shuffle(&mut rng);
            self.epoch += 1;
            self.pos = 0;
        }
        let end = (self.pos + self.batch).min(self.order.len());
        let out = &self.order[self.pos..end];
        self.pos = end;
        out
    }
}

fn check_training_data(data: &LabeledEmbeddings, classes: usize) -> Result<usize> {
    if classes < 2 {
        return Err(Error::InvalidArgument("a classifier needs at least two classes"));
    }
    let dim = data.dim().ok_or(Error::Empty)?;
    let mut counts = vec![0usize; classes];
    for &l in data.labels() {
        if l >= classes {
            return Err(Error::ClassOutOfRange {
                index: l,
                classes,
            });
        }
        counts[l] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty));
    }
    Ok(dim)
}

/// Trains a flat classifier on raw features with cross-entropy.
///
/// Deterministic in `cfg.seed`. Takes no label tree: flat training is blind
/// to the hierarchy by construction.
pub fn train_flat(
    data: &LabeledEmbeddings,
    classes: usize,
    geometry: Geometry,
    ball: &BallConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let dim = check_training_data(data, classes)?;
    let labels = data.labels();
    let mut sampler = BatchSampler::new(labels.len(), cfg.batch_size, cfg.seed);
    let mut loss_trace = Vec::with_capacity(cfg.steps);

    match geometry {
        Geometry::Euclidean => {
            let mut model = init_euclidean(classes, dim, cfg.seed)?;
            for _ in 0..cfg.steps {
                let batch = sampler.next_batch();
                let scale = 1.0 / batch.len() as f64;
                let mut acc = EuclideanGrads::zeros(classes, dim);
                for &i in batch {
                    let g = grad_euclidean(&data.points()[i], &model, labels[i])?;
                    acc.add_scaled(&g, scale);
                }
                loss_trace.push(acc.loss);
                model = sgd_step_euclidean(&model, &acc, cfg.lr_euclidean)?;
            }
            Ok(TrainOutcome {
                model: FlatModel::Euclidean(model),
                loss_trace,
            })
        }
        Geometry::Hyperbolic => {
            let mut model = init_hyperbolic(classes, dim, *ball, cfg.seed)?;
            let embedded = data
                .points()
                .iter()
                .map(|x| exp_map_origin(&TangentVector::new(x.clone()), ball))
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..cfg.steps {
                let batch = sampler.next_batch();
                let scale = 1.0 / batch.len() as f64;
                let mut acc = HyperbolicGrads::zeros(classes, dim);
                for &i in batch {
                    let g = grad_hyperbolic(&embedded[i], &model, labels[i])?;
                    acc.add_scaled(&g, scale);
                }
                loss_trace.push(acc.loss);
                model = rsgd_step(&model, &acc, cfg)?;
            }
            Ok(TrainOutcome {
                model: FlatModel::Hyperbolic(model),
                loss_trace,
            })
        }
    }
}

/// Linear sigmoid scorer for one tree node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeClassifier {
    pub weight: Vec<f64>,
    pub bias: f64,
}

impl NodeClassifier {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weight, x) + self.bias
    }
}

/// One binary classifier per node of every tree level.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeBaseline {
    levels: Vec<Vec<NodeClassifier>>,
}

impl TreeBaseline {
    pub fn levels(&self) -> &[Vec<NodeClassifier>] {
        &self.levels
    }

    /// Per-level argmax over node scores, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> Vec<usize> {
        self.levels
            .iter()
            .map(|nodes| {
                let scores: Vec<f64> = nodes.iter().map(|n| n.score(x)).collect();
                argmax(&scores)
            })
            .collect()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// Trains a one-vs-all sigmoid classifier for every node of `tree`.
///
/// A sample is a positive for a node when the node lies on its leaf label's
/// path to the root. Uses `cfg.lr_euclidean` for every parameter.
pub fn train_onevsall_tree_baseline(
    data: &LabeledEmbeddings,
    tree: &LabelTree,
    cfg: &TrainConfig,
) -> Result<TreeBaseline> {
    cfg.validate()?;
    tree.validate().map_err(Error::InvalidTree)?;
    let leaves = tree.level_size(0);
    let dim = check_training_data(data, leaves)?;
    let labels = data.labels();

    // Ancestor of every leaf at every level.
    let ancestors: Vec<Vec<usize>> = (0..tree.num_levels())
        .map(|lvl| {
            (0..leaves)
                .map(|leaf| tree.ancestor_label(leaf, lvl))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rng = init_rng(cfg.seed);
    let mut levels: Vec<Vec<NodeClassifier>> = (0..tree.num_levels())
        .map(|lvl| {
            gaussian_vectors(&mut rng, tree.level_size(lvl), dim)
                .into_iter()
                .map(|weight| NodeClassifier { weight, bias: 0.0 })
                .collect()
        })
        .collect();

    let mut sampler = BatchSampler::new(labels.len(), cfg.batch_size, cfg.seed);
    for _ in 0..cfg.steps {
        let batch = sampler.next_batch().to_vec();
        let scale = 1.0 / batch.len() as f64;
        for (lvl, nodes) in levels.iter_mut().enumerate() {
            for (node_idx, node) in nodes.iter_mut().enumerate() {
                let mut gw = vec![0.0; dim];
                let mut gb = 0.0;
                for &i in &batch {
                    let x = &data.points()[i];
                    let target = if ancestors[lvl][labels[i]] == node_idx { 1.0 } else { 0.0 };
                    let err = (sigmoid(node.score(x)) - target) * scale;
                    for (g, xi) in gw.iter_mut().zip(x) {
                        *g += err * xi;
                    }
                    gb += err;
                }
                for (w, g) in node.weight.iter_mut().zip(&gw) {
                    *w -= cfg.lr_euclidean * g;
                }
                node.bias -= cfg.lr_euclidean * gb;
            }
        }
    }
    Ok(TreeBaseline { levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_data() -> LabeledEmbeddings {
        let pts = vec![
            vec![2.0, 0.1],
            vec![2.2, -0.1],
            vec![1.9, 0.0],
            vec![-2.0, 0.0],
            vec![-2.1, 0.2],
            vec![-1.8, -0.1],
        ];
        LabeledEmbeddings::new(EmbeddingSpace::Euclidean, pts, vec![0, 0, 0, 1, 1, 1]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_model_unchanged() {
        let m = init_hyperbolic(3, 2, BallConfig::unit(), 5).unwrap();
        let g = HyperbolicGrads::zeros(3, 2);
        assert_eq!(rsgd_step(&m, &g, &TrainConfig::default()).unwrap(), m);
    }

    #[test]
    fn rsgd_rescales_by_inverse_metric_at_origin() {
        let m = init_hyperbolic(2, 2, BallConfig::unit(), 1).unwrap();
        let mut g = HyperbolicGrads::zeros(2, 2);
        g.offsets[0] = vec![1.0, 0.0];
        let cfg = TrainConfig {
            lr_offsets: 1e-3,
            ..TrainConfig::default()
        };
        let next = rsgd_step(&m, &g, &cfg).unwrap();
        // λ_0 = 2, so the tangent step is -lr/4 and Exp_0 at that small step
        // gives tanh(λ·|v|/2)= tanh(lr/4).
        let moved = next.gyroplanes()[0].offset().as_slice()[0];
        assert!((moved + libm::tanh(1e-3 / 4.0)).abs() < 1e-17);
    }

    #[test]
    fn rsgd_keeps_offsets_inside() {
        let m = init_hyperbolic(2, 2, BallConfig::unit(), 1).unwrap();
        let mut g = HyperbolicGrads::zeros(2, 2);
        g.offsets[1] = vec![-1e9, 0.0];
        let next = rsgd_step(&m, &g, &TrainConfig::default()).unwrap();
        let ball = BallConfig::unit();
        for p in next.gyroplanes() {
            assert!(p.offset().norm() <= ball.max_norm());
        }
    }

    #[test]
    fn rsgd_rejects_non_finite() {
        let m = init_hyperbolic(2, 2, BallConfig::unit(), 1).unwrap();
        let mut g = HyperbolicGrads::zeros(2, 2);
        g.normals[0][1] = f64::NAN;
        assert_eq!(rsgd_step(&m, &g, &TrainConfig::default()), Err(Error::NonFinite));
    }

    #[test]
    fn empty_class_rejected() {
        let data = two_class_data();
        let err = train_flat(&data, 3, Geometry::Euclidean, &BallConfig::unit(), &TrainConfig::default())
            .unwrap_err();
        assert_eq!(err, Error::EmptyClass(2));
    }

    #[test]
    fn label_out_of_range_rejected() {
        let data = LabeledEmbeddings::new(
            EmbeddingSpace::Euclidean,
            vec![vec![0.0], vec![1.0]],
            vec![0, 4],
        )
        .unwrap();
        assert!(matches!(
            train_flat(&data, 2, Geometry::Hyperbolic, &BallConfig::unit(), &TrainConfig::default()),
            Err(Error::ClassOutOfRange { index: 4, classes: 2 })
        ));
    }

    #[test]
    fn sampler_covers_each_epoch() {
        let mut s = BatchSampler::new(10, 4, 3);
        let mut seen: Vec<usize> = Vec::new();
        for _ in 0..3 {
            seen.extend_from_slice(s.next_batch());
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn small_training_runs_are_deterministic() {
        let data = two_class_data();
        let cfg = TrainConfig {
            steps: 50,
            batch_size: 4,
            seed: 11,
            ..TrainConfig::default()
        };
        for geom in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let a = train_flat(&data, 2, geom, &BallConfig::unit(), &cfg).unwrap();
            let b = train_flat(&data, 2, geom, &BallConfig::unit(), &cfg).unwrap();
            assert_eq!(a, b);
            assert!(a.loss_trace.iter().all(|l| l.is_finite()));
        }
    }

    #[test]
    fn geometry_parses() {
        assert_eq!("hyperbolic".parse::<Geometry>().unwrap(), Geometry::Hyperbolic);
        assert!("lorentz".parse::<Geometry>().is_err());
    }
}
