//! Seeded Gaussian-cluster data standing in for an image encoder.
//!
//! Class means sit on a circle of radius `R` in the first two coordinates,
//! equally spaced in angle with a small seeded angular jitter, so the
//! separation between neighbouring classes is controlled. Samples are drawn
//! isotropically around their mean with standard deviation `sigma`.

use hyperhier_core::analysis::{EmbeddingSpace, LabeledEmbeddings};
use hyperhier_core::LabelTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub classes: usize,
    pub tree: LabelTree,
    pub radius: f64,
    pub sigma: f64,
    /// Maximum angular jitter of a mean, as a fraction of the angular spacing.
    pub jitter: f64,
    /// Samples per class in each of the train and test splits.
    pub samples_per_class: usize,
    pub seed: u64,
}

/// Eight leaves grouped pairwise (neighbours on the ring) into four parents.
pub fn default_toy_tree() -> LabelTree {
    LabelTree::two_level(vec![0, 0, 1, 1, 2, 2, 3, 3]).expect("toy tree is valid")
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            classes: 8,
            tree: default_toy_tree(),
            radius: 4.0,
            sigma: 0.5,
            jitter: 0.01,
            samples_per_class: 500,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.dim < 2 {
            return Err(HarnessError::Config("dimension must be at least 2".into()));
        }
        if self.classes < 2 {
            return Err(HarnessError::Config("need at least two classes".into()));
        }
        if self.classes != self.tree.level_size(0) {
            return Err(HarnessError::Config(format!(
                "class count {} does not match the tree's {} leaves",
                self.classes,
                self.tree.level_size(0)
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(HarnessError::Config("radius must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(HarnessError::Config("sigma must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(HarnessError::Config("jitter must lie in [0, 0.5)".into()));
        }
        if self.samples_per_class == 0 {
            return Err(HarnessError::Config("samples per class must be positive".into()));
        }
        self.tree.validate().map_err(HarnessError::Tree)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: LabeledEmbeddings,
    pub test: LabeledEmbeddings,
    pub tree: LabelTree,
    pub means: Vec<Vec<f64>>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn cluster_means(cfg: &SyntheticConfig) -> Vec<Vec<f64>> {
    let mut r = rng(cfg.seed, 0);
    let spacing = std::f64::consts::TAU / cfg.classes as f64;
    (0..cfg.classes)
        .map(|k| {
            let offset = if cfg.jitter > 0.0 {
                r.random_range(-cfg.jitter..=cfg.jitter) * spacing
            } else {
                0.0
            };
            let angle = k as f64 * spacing + offset;
            let mut mean = vec![0.0; cfg.dim];
            mean[0] = cfg.radius * angle.cos();
            mean[1] = cfg.radius * angle.sin();
            mean
        })
        .collect()
}

fn draw_split(cfg: &SyntheticConfig, means: &[Vec<f64>], stream: u64) -> Result<LabeledEmbeddings, HarnessError> {
    let mut r = rng(cfg.seed, stream);
    let mut points = Vec::with_capacity(cfg.classes * cfg.samples_per_class);
    let mut labels = Vec::with_capacity(points.capacity());
    for (k, mean) in means.iter().enumerate() {
        for _ in 0..cfg.samples_per_class {
            let p: Vec<f64> = mean
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    m + cfg.sigma * z
                })
                .collect();
            points.push(p);
            labels.push(k);
        }
    }
    Ok(LabeledEmbeddings::new(EmbeddingSpace::Euclidean, points, labels)?)
}

/// Class-balanced train and test splits drawn independently from the same
/// clusters. Deterministic in `cfg.seed`; the tree only fixes the class count.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData, HarnessError> {
    cfg.validate()?;
    let means = cluster_means(cfg);
    let train = draw_split(cfg, &means, 1)?;
    let test = draw_split(cfg, &means, 2)?;
    Ok(SyntheticData {
        train,
        test,
        tree: cfg.tree.clone(),
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_config_is_balanced() {
        let cfg = SyntheticConfig {
            classes: 2,
            tree: LabelTree::new(vec![vec!["a".into(), "b".into()]], vec![]).unwrap(),
            samples_per_class: 10,
            ..SyntheticConfig::default()
        };
        let d = generate_synthetic(&cfg).unwrap();
        assert_eq!(d.train.len(), 20);
        assert_eq!(d.train.class_indices(0).len(), 10);
        assert_eq!(d.train.class_indices(1).len(), 10);
        assert_ne!(d.train, d.test);
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SyntheticConfig {
            samples_per_class: 20,
            seed: 3,
            ..SyntheticConfig::default()
        };
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
    }

    #[test]
    fn class_count_must_match_tree() {
        let cfg = SyntheticConfig {
            classes: 6,
            ..SyntheticConfig::default()
        };
        assert!(matches!(generate_synthetic(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn adjacent_means_are_six_sigma_apart() {
        let cfg = SyntheticConfig::default();
        let m = cluster_means(&cfg);
        for k in 0..m.len() {
            let a = &m[k];
            let b = &m[(k + 1) % m.len()];
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!(d >= 6.0 * cfg.sigma, "{d}");
        }
    }
}
