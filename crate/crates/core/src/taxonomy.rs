//! Stationary label trees.
//!
//! Level 0 holds the leaf (child) classes, level 1 their parents, and so on
//! toward the root. Every label has exactly one parent, so a leaf prediction
//! fixes the whole path and a parent's posterior is the sum of its
//! children's posteriors.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// First stationary-tree property a [`LabelTree`] breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    NoLevels,
    EmptyLevel { level: usize },
    /// A level is not strictly smaller than the one below it.
    LevelNotSmaller { level: usize },
    /// Wrong number of parent links for a level.
    MappingLength { level: usize, expected: usize, got: usize },
    /// A label points at a parent index that does not exist.
    OutOfRange { level: usize, label: usize, parent: usize },
    /// A parent with no children.
    ChildlessParent { level: usize, parent: usize },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::NoLevels => write!(f, "tree has no levels"),
            TreeViolation::EmptyLevel { level } => write!(f, "level {level} is empty"),
            TreeViolation::LevelNotSmaller { level } => {
                write!(f, "level {level} is not smaller than level {}", level - 1)
            }
            TreeViolation::MappingLength { level, expected, got } => write!(
                f,
                "parent mapping of level {level} has {got} entries, expected {expected}"
            ),
            TreeViolation::OutOfRange { level, label, parent } => write!(
                f,
                "out of range: label {label} at level {level} maps to parent {parent}"
            ),
            TreeViolation::ChildlessParent { level, parent } => {
                write!(f, "childless parent: label {parent} at level {level}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTree {
    levels: Vec<Vec<String>>,
    /// `parent_of[i][j]` is the level-`i+1` parent of label `j` at level `i`.
    parent_of: Vec<Vec<usize>>,
}

impl LabelTree {
    /// Builds and validates a tree.
    pub fn new(levels: Vec<Vec<String>>, parent_of: Vec<Vec<usize>>) -> Result<Self> {
        let tree = Self::new_unchecked(levels, parent_of);
        tree.validate().map_err(Error::InvalidTree)?;
        Ok(tree)
    }

    /// Builds a tree without validating it.
    pub fn new_unchecked(levels: Vec<Vec<String>>, parent_of: Vec<Vec<usize>>) -> Self {
        Self { levels, parent_of }
    }

    /// Two-level tree with generated names `c0..` and `p0..`.
    pub fn two_level(parent_of: Vec<usize>) -> Result<Self> {
        let parents = parent_of.iter().copied().max().map_or(0, |m| m + 1);
        let children = (0..parent_of.len()).map(|i| alloc::format!("c{i}")).collect();
        let parent_names = (0..parents).map(|i| alloc::format!("p{i}")).collect();
        Self::new(vec![children, parent_names], vec![parent_of])
    }

    /// The 19-class street-scene taxonomy grouped into 7 parent categories.
    pub fn cityscapes() -> Self {
        const CHILDREN: [(&str, usize); 19] = [
            ("road", 0),
            ("sidewalk", 0),
            ("building", 1),
            ("wall", 1),
            ("fence", 1),
            ("pole", 2),
            ("traffic light", 2),
            ("traffic sign", 2),
            ("vegetation", 3),
            ("terrain", 3),
            ("sky", 4),
            ("person", 5),
            ("rider", 5),
            ("car", 6),
            ("truck", 6),
            ("bus", 6),
            ("train", 6),
            ("motorcycle", 6),
            ("bicycle", 6),
        ];
        const PARENTS: [&str; 7] = ["flat", "construction", "object", "nature", "sky", "human", "vehicle"];
        Self {
            levels: vec![
                CHILDREN.iter().map(|(n, _)| n.to_string()).collect(),
                PARENTS.iter().map(|n| n.to_string()).collect(),
            ],
            parent_of: vec![CHILDREN.iter().map(|(_, p)| *p).collect()],
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_size(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, Vec::len)
    }

    pub fn names(&self, level: usize) -> &[String] {
        &self.levels[level]
    }

    pub fn levels(&self) -> &[Vec<String>] {
        &self.levels
    }

    pub fn parent_of(&self) -> &[Vec<usize>] {
        &self.parent_of
    }

    /// Index of `name` at `level`.
    pub fn find(&self, level: usize, name: &str) -> Option<usize> {
        self.levels.get(level)?.iter().position(|n| n == name)
    }

    /// Checks the stationary-tree invariants, reporting the first violation.
    pub fn validate(&self) -> core::result::Result<(), TreeViolation> {
        validate_tree(self)
    }

    /// Ancestor of a leaf label at `level` (level 0 is the label itself).
    pub fn ancestor_label(&self, child_label: usize, level: usize) -> Result<usize> {
        ancestor_label(child_label, level, self)
    }
}

pub fn validate_tree(tree: &LabelTree) -> core::result::Result<(), TreeViolation> {
    if tree.levels.is_empty() {
        return Err(TreeViolation::NoLevels);
    }
    for (level, names) in tree.levels.iter().enumerate() {
        if names.is_empty() {
            return Err(TreeViolation::EmptyLevel { level });
        }
        if level > 0 && names.len() >= tree.levels[level - 1].len() {
            return Err(TreeViolation::LevelNotSmaller { level });
        }
    }
    let non_root = tree.levels.len() - 1;
    if tree.parent_of.len() != non_root {
        return Err(TreeViolation::MappingLength {
            level: tree.parent_of.len().min(non_root),
            expected: non_root,
            got: tree.parent_of.len(),
        });
    }
    for (level, mapping) in tree.parent_of.iter().enumerate() {
        let size = tree.levels[level].len();
        if mapping.len() != size {
            return Err(TreeViolation::MappingLength {
                level,
                expected: size,
                got: mapping.len(),
            });
        }
        let parents = tree.levels[level + 1].len();
        let mut has_child = vec![false; parents];
        for (label, &parent) in mapping.iter().enumerate() {
            if parent >= parents {
                return Err(TreeViolation::OutOfRange { level, label, parent });
            }
            has_child[parent] = true;
        }
        if let Some(parent) = has_child.iter().position(|h| !h) {
            return Err(TreeViolation::ChildlessParent {
                level: level + 1,
                parent,
            });
        }
    }
    Ok(())
}

/// Posterior over level-1 labels from a posterior over leaves: each parent
/// receives the sum of its children's probabilities.
pub fn parent_posterior(child_probs: &[f64], tree: &LabelTree) -> Result<Vec<f64>> {
    level_posterior(child_probs, tree, 1)
}

/// Posterior at any level, summing leaf probabilities along root paths.
pub fn level_posterior(child_probs: &[f64], tree: &LabelTree, level: usize) -> Result<Vec<f64>> {
    if level >= tree.num_levels() {
        return Err(Error::LevelOutOfRange {
            level,
            levels: tree.num_levels(),
        });
    }
    if child_probs.len() != tree.level_size(0) {
        return Err(Error::DimensionMismatch {
            expected: tree.level_size(0),
            got: child_probs.len(),
        });
    }
    let mut current = child_probs.to_vec();
    for (lvl, mapping) in tree.parent_of.iter().enumerate().take(level) {
        let mut next = vec![0.0; tree.level_size(lvl + 1)];
        for (p, &parent) in current.iter().zip(mapping) {
            next[parent] += p;
        }
        current = next;
    }
    Ok(current)
}

pub fn ancestor_label(child_label: usize, level: usize, tree: &LabelTree) -> Result<usize> {
    if level >= tree.num_levels() {
        return Err(Error::LevelOutOfRange {
            level,
            levels: tree.num_levels(),
        });
    }
    if child_label >= tree.level_size(0) {
        return Err(Error::ClassOutOfRange {
            index: child_label,
            classes: tree.level_size(0),
        });
    }
    Ok(tree.parent_of[..level]
        .iter()
        .fold(child_label, |label, mapping| mapping[label]))
}

/// Reassigns children to parents by permuting the parent links of every
/// non-root level with `permutations[level]`: label `j` takes the parent that
/// label `permutations[level][j]` had. Level sizes and per-parent child counts
/// are preserved.
pub fn shuffle_with_permutations(tree: &LabelTree, permutations: &[Vec<usize>]) -> Result<LabelTree> {
    if permutations.len() != tree.parent_of.len() {
        return Err(Error::DimensionMismatch {
            expected: tree.parent_of.len(),
            got: permutations.len(),
        });
    }
    let mut parent_of = Vec::with_capacity(tree.parent_of.len());
    for (mapping, perm) in tree.parent_of.iter().zip(permutations) {
        let mut seen = vec![false; mapping.len()];
        let valid = perm.len() == mapping.len()
            && perm.iter().all(|&j| j < seen.len() && !core::mem::replace(&mut seen[j], true));
        if !valid {
            return Err(Error::InvalidArgument("not a permutation of the level's labels"));
        }
        parent_of.push(perm.iter().map(|&j| mapping[j]).collect());
    }
    LabelTree::new(tree.levels.clone(), parent_of)
}

/// Semantically meaningless variant of `tree` with the same shape, drawn from
/// a seeded permutation of every level's parent links.
pub fn shuffle_hierarchy(tree: &LabelTree, seed: u64) -> Result<LabelTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Vec<usize>> = tree
        .parent_of
        .iter()
        .map(|m| {
            let mut p: Vec<usize> = (0..m.len()).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    shuffle_with_permutations(tree, &perms)
}
