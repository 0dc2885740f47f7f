//! Plain-text model checkpoints.
//!
//! One header line, then one `name = v0 v1 ...` line per parameter tensor.
//! Values are written with 17 significant digits, enough to reproduce every
//! `f64` bit for bit.
//!
//! ```text
//! hyperhier-checkpoint geometry=hyperbolic classes=8 dim=2 c=1.0000000000000000e0 epsilon=1.0000000000000001e-5
//! offsets = ...   (classes × dim, row-major)
//! normals = ...
//! ```
//!
//! Euclidean checkpoints carry `weights` and `biases` instead.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use hyperhier_core::geometry::DEFAULT_BOUNDARY_EPSILON;
use hyperhier_core::mlr::{EuclideanMLR, Gyroplane, HyperbolicMLR};
use hyperhier_core::train::{FlatModel, Geometry};
use hyperhier_core::{BallConfig, BallPoint, TangentVector};

use crate::{FormatError, HarnessError};

const HEADER: &str = "hyperhier-checkpoint";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn tensor_line(name: &str, values: impl IntoIterator<Item = f64>) -> String {
    let vals: Vec<String> = values.into_iter().map(format_float).collect();
    format!("{name} = {}\n", vals.join(" "))
}

/// Serializes a model; `ball` supplies the curvature recorded in the header.
pub fn format_checkpoint(model: &FlatModel, ball: &BallConfig) -> String {
    let ball = match model {
        FlatModel::Hyperbolic(m) => *m.ball(),
        FlatModel::Euclidean(_) => *ball,
    };
    let mut out = format!(
        "{HEADER} geometry={} classes={} dim={} c={} epsilon={}\n",
        model.geometry().name(),
        model.num_classes(),
        model.dim(),
        format_float(ball.c()),
        format_float(ball.boundary_epsilon()),
    );
    match model {
        FlatModel::Hyperbolic(m) => {
            let planes = m.gyroplanes();
            out += &tensor_line(
                "offsets",
                planes.iter().flat_map(|g| g.offset().as_slice().to_vec()),
            );
            out += &tensor_line(
                "normals",
                planes.iter().flat_map(|g| g.normal().as_slice().to_vec()),
            );
        }
        FlatModel::Euclidean(m) => {
            out += &tensor_line("weights", m.weights().iter().flat_map(|w| w.as_slice().to_vec()));
            out += &tensor_line("biases", m.biases().iter().copied());
        }
    }
    out
}

/// A parsed checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: FlatModel,
    pub ball: BallConfig,
}

fn header_field<'a>(fields: &BTreeMap<&str, &'a str>, key: &str) -> Result<&'a str, FormatError> {
    fields
        .get(key)
        .copied()
        .ok_or_else(|| FormatError::parse(1, format!("header lacks `{key}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, FormatError> {
    s.parse()
        .map_err(|_| FormatError::parse(line, format!("cannot parse {what} `{s}`")))
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| FormatError::parse(1, "empty checkpoint"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(HEADER) {
        return Err(FormatError::parse(1, "missing checkpoint header"));
    }
    let mut fields = BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| FormatError::parse(1, format!("malformed header field `{p}`")))?;
        fields.insert(k, v);
    }
    let geometry: Geometry = header_field(&fields, "geometry")?
        .parse()
        .map_err(|_| FormatError::parse(1, "unknown geometry"))?;
    let classes: usize = parse_num(header_field(&fields, "classes")?, 1, "class count")?;
    let dim: usize = parse_num(header_field(&fields, "dim")?, 1, "dimension")?;
    let c: f64 = parse_num(header_field(&fields, "c")?, 1, "curvature")?;
    let eps: f64 = match fields.get("epsilon") {
        Some(v) => parse_num(v, 1, "epsilon")?,
        None => DEFAULT_BOUNDARY_EPSILON,
    };
    let ball = BallConfig::new(c, eps).map_err(FormatError::Model)?;

    let mut tensors: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
    for (no, line) in lines {
        let (name, values) = line
            .split_once('=')
            .ok_or_else(|| FormatError::parse(no, "expected `name = values`"))?;
        let values = values
            .split_whitespace()
            .map(|v| parse_num::<f64>(v, no, "value"))
            .collect::<Result<Vec<_>, _>>()?;
        if tensors.insert(name.trim().to_string(), (no, values)).is_some() {
            return Err(FormatError::parse(no, format!("duplicate tensor `{}`", name.trim())));
        }
    }
    let mut take = |name: &str, len: usize| -> Result<Vec<f64>, FormatError> {
        let (no, v) = tensors
            .remove(name)
            .ok_or_else(|| FormatError::parse(1, format!("missing tensor `{name}`")))?;
        if v.len() != len {
            return Err(FormatError::parse(
                no,
                format!("tensor `{name}` has {} values, expected {len}", v.len()),
            ));
        }
        Ok(v)
    };
    let model = match geometry {
        Geometry::Hyperbolic => {
            let offsets = take("offsets", classes * dim)?;
            let normals = take("normals", classes * dim)?;
            let planes = offsets
                .chunks(dim.max(1))
                .zip(normals.chunks(dim.max(1)))
                .map(|(r, w)| {
                    Gyroplane::new(BallPoint::new(r.to_vec(), &ball)?, TangentVector::new(w.to_vec()))
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(FormatError::Model)?;
            FlatModel::Hyperbolic(HyperbolicMLR::new(planes, ball).map_err(FormatError::Model)?)
        }
        Geometry::Euclidean => {
            let weights = take("weights", classes * dim)?;
            let biases = take("biases", classes)?;
            let weights = weights.chunks(dim.max(1)).map(|w| TangentVector::new(w.to_vec())).collect();
            FlatModel::Euclidean(EuclideanMLR::new(weights, biases).map_err(FormatError::Model)?)
        }
    };
    if let Some((name, (no, _))) = tensors.into_iter().next() {
        return Err(FormatError::parse(no, format!("unexpected tensor `{name}`")));
    }
    Ok(Checkpoint { model, ball })
}

pub fn write_checkpoint(path: &Path, model: &FlatModel, ball: &BallConfig) -> Result<(), HarnessError> {
    fs::write(path, format_checkpoint(model, ball)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_checkpoint(&text).map_err(|e| HarnessError::format(path, e))
}
