//! Flat `key = value` run configuration.
//!
//! Values are resolved in order defaults < config file < `HYPERHIER_OUT`
//! (output directory only) < command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hyperhier_core::metrics::CweceNormalization;
use hyperhier_core::train::{Geometry, TrainConfig};
use hyperhier_core::BallConfig;

use crate::synthetic::{default_toy_tree, SyntheticConfig};
use crate::{treefile, FormatError, HarnessError};

pub const OUT_ENV: &str = "HYPERHIER_OUT";

/// Every accepted key with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("geometry", "hyperbolic"),
    ("seed", "0"),
    ("dim", "2"),
    ("radius", "4"),
    ("sigma", "0.5"),
    ("jitter", "0.01"),
    ("samples_per_class", "500"),
    ("steps", "5000"),
    ("batch_size", "32"),
    ("lr_offsets", "1e-4"),
    ("lr_normals", "1e-3"),
    ("lr_euclidean", "1e-3"),
    ("curvature", "1"),
    ("boundary_epsilon", "1e-5"),
    ("bins", "15"),
    ("ignore_label", "255"),
    ("cwece_norm", "all"),
    ("pair_cap", "100000"),
    ("out_dir", "out"),
    ("tree", ""),
    ("shuffle_tree_seed", ""),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub seed: u64,
    pub synthetic: SyntheticConfig,
    pub train: TrainConfig,
    pub ball: BallConfig,
    pub bins: usize,
    pub ignore_label: u32,
    pub cwece_norm: CweceNormalization,
    pub pair_cap: usize,
    pub out_dir: PathBuf,
    pub tree_path: Option<PathBuf>,
    pub shuffle_tree_seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        resolve(&[], None, &[]).expect("defaults are valid")
    }
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, FormatError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(no, l)| {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| FormatError::parse(no, "expected `key = value`"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

pub fn read_kv_file(path: &Path) -> Result<Vec<(String, String)>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_kv(&text).map_err(|e| HarnessError::format(path, e))
}

fn get<T: std::str::FromStr>(map: &BTreeMap<&str, String>, key: &str) -> Result<T, HarnessError> {
    let raw = &map[key];
    raw.parse()
        .map_err(|_| HarnessError::Config(format!("invalid value `{raw}` for `{key}`")))
}

fn get_opt<T: std::str::FromStr>(map: &BTreeMap<&str, String>, key: &str) -> Result<Option<T>, HarnessError> {
    if map[key].is_empty() {
        Ok(None)
    } else {
        get(map, key).map(Some)
    }
}

/// Builds a configuration from file pairs, the environment's output
/// directory, and command-line pairs, in increasing precedence.
pub fn resolve(
    file: &[(String, String)],
    env_out: Option<&str>,
    cli: &[(String, String)],
) -> Result<RunConfig, HarnessError> {
    let mut map: BTreeMap<&str, String> = DEFAULTS.iter().map(|(k, v)| (*k, v.to_string())).collect();
    let mut apply = |pairs: &[(String, String)]| -> Result<(), HarnessError> {
        for (k, v) in pairs {
            let slot = map
                .get_mut(k.as_str())
                .ok_or_else(|| HarnessError::Config(format!("unknown key `{k}`")))?;
            *slot = v.clone();
        }
        Ok(())
    };
    apply(file)?;
    if let Some(out) = env_out {
        apply(&[("out_dir".to_string(), out.to_string())])?;
    }
    apply(cli)?;

    let geometry: Geometry = map["geometry"]
        .parse()
        .map_err(|_| HarnessError::Config(format!("unknown geometry `{}`", map["geometry"])))?;
    let seed: u64 = get(&map, "seed")?;
    let tree_path: Option<PathBuf> = get_opt(&map, "tree")?;
    let tree = match &tree_path {
        Some(p) => treefile::read_tree(p)?,
        None => default_toy_tree(),
    };
    let synthetic = SyntheticConfig {
        dim: get(&map, "dim")?,
        classes: tree.level_size(0),
        tree,
        radius: get(&map, "radius")?,
        sigma: get(&map, "sigma")?,
        jitter: get(&map, "jitter")?,
        samples_per_class: get(&map, "samples_per_class")?,
        seed,
    };
    synthetic.validate()?;
    let train = TrainConfig {
        lr_offsets: get(&map, "lr_offsets")?,
        lr_normals: get(&map, "lr_normals")?,
        lr_euclidean: get(&map, "lr_euclidean")?,
        steps: get(&map, "steps")?,
        batch_size: get(&map, "batch_size")?,
        seed,
    };
    train
        .validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let ball = BallConfig::new(get(&map, "curvature")?, get(&map, "boundary_epsilon")?)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let bins: usize = get(&map, "bins")?;
    if bins == 0 {
        return Err(HarnessError::Config("bins must be positive".into()));
    }
    let cwece_norm = match map["cwece_norm"].as_str() {
        "all" => CweceNormalization::AllSamples,
        "true-class" => CweceNormalization::TrueClass,
        other => {
            return Err(HarnessError::Config(format!(
                "cwece_norm must be `all` or `true-class`, got `{other}`"
            )))
        }
    };
    let pair_cap: usize = get(&map, "pair_cap")?;
    if pair_cap == 0 {
        return Err(HarnessError::Config("pair_cap must be positive".into()));
    }
    Ok(RunConfig {
        geometry,
        seed,
        synthetic,
        train,
        ball,
        bins,
        ignore_label: get(&map, "ignore_label")?,
        cwece_norm,
        pair_cap,
        out_dir: PathBuf::from(&map["out_dir"]),
        tree_path,
        shuffle_tree_seed: get_opt(&map, "shuffle_tree_seed")?,
    })
}
