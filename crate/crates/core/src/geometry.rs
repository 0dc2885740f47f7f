//! Poincaré-ball kernel.
//!
//! The ball of curvature `-c` is `{ x : sqrt(c)·|x| < 1 }` with conformal
//! metric `λ_x² · I`, where `λ_x = 2 / (1 - c|x|²)`. Every operation that
//! produces a [`BallPoint`] routes its result through [`project_to_ball`], so
//! constructed points always satisfy `sqrt(c)·|x| <= 1 - boundary_epsilon`.

use alloc::vec::Vec;

use crate::linalg::{acosh1p, dist_sq, dot, norm, norm_sq};
use crate::{Error, Result};

pub const DEFAULT_BOUNDARY_EPSILON: f64 = 1e-5;

/// Curvature magnitude and boundary clamp of a Poincaré ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallConfig {
    c: f64,
    boundary_epsilon: f64,
}

impl BallConfig {
    pub fn new(c: f64, boundary_epsilon: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidConfig("curvature magnitude must be positive"));
        }
        if !(boundary_epsilon > 0.0 && boundary_epsilon < 1.0) {
            return Err(Error::InvalidConfig("boundary epsilon must lie in (0, 1)"));
        }
        Ok(Self { c, boundary_epsilon })
    }

    /// Unit curvature (`c = 1`) with the default boundary clamp.
    pub fn unit() -> Self {
        Self {
            c: 1.0,
            boundary_epsilon: DEFAULT_BOUNDARY_EPSILON,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sqrt_c(&self) -> f64 {
        libm::sqrt(self.c)
    }

    pub fn boundary_epsilon(&self) -> f64 {
        self.boundary_epsilon
    }

    /// Largest Euclidean norm a constructed point may have.
    pub fn max_norm(&self) -> f64 {
        (1.0 - self.boundary_epsilon) / self.sqrt_c()
    }

    fn check_inside(&self, x: &[f64]) -> Result<()> {
        let scaled = self.sqrt_c() * norm(x);
        if !scaled.is_finite() {
            return Err(Error::NonFinite);
        }
        if scaled >= 1.0 {
            return Err(Error::OutsideBall(scaled));
        }
        Ok(())
    }
}

impl Default for BallConfig {
    fn default() -> Self {
        Self::unit()
    }
}

/// A point strictly inside the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint(Vec<f64>);

impl BallPoint {
    /// Wraps coordinates that already lie strictly inside the ball.
    ///
    /// Unlike [`project_to_ball`] this does not clamp; it rejects points with
    /// `sqrt(c)·|x| >= 1`.
    pub fn new(coords: Vec<f64>, cfg: &BallConfig) -> Result<Self> {
        cfg.check_inside(&coords)?;
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Additive (Möbius) inverse, `-x`.
    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }
}

/// A tangent (Euclidean) vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(Vec<f64>);

impl TangentVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<Vec<f64>> for TangentVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// Clamps raw coordinates into the ball.
///
/// Points with `sqrt(c)·|x| <= 1 - eps` are returned unchanged; anything
/// further out is rescaled onto that shell, keeping its direction.
pub fn project_to_ball(coords: Vec<f64>, cfg: &BallConfig) -> Result<BallPoint> {
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = norm(&coords);
    let max = cfg.max_norm();
    if n <= max {
        return Ok(BallPoint(coords));
    }
    let scale = max / n;
    Ok(BallPoint(coords.into_iter().map(|v| v * scale).collect()))
}

/// `λ_x = 2 / (1 - c|x|²)`.
pub fn conformal_factor(x: &BallPoint, cfg: &BallConfig) -> Result<f64> {
    conformal_factor_raw(x.as_slice(), cfg)
}

pub(crate) fn conformal_factor_raw(x: &[f64], cfg: &BallConfig) -> Result<f64> {
    let denom = 1.0 - cfg.c * norm_sq(x);
    if !(denom > 0.0) {
        return Err(Error::OutsideBall(cfg.sqrt_c() * norm(x)));
    }
    Ok(2.0 / denom)
}

/// Möbius addition without the boundary clamp.
pub(crate) fn mobius_add_raw(v: &[f64], w: &[f64], c: f64) -> Vec<f64> {
    let vw = dot(v, w);
    let vv = norm_sq(v);
    let ww = norm_sq(w);
    let a = 1.0 + 2.0 * c * vw + c * ww;
    let b = 1.0 - c * vv;
    let d = 1.0 + 2.0 * c * vw + c * c * vv * ww;
    v.iter().zip(w).map(|(vi, wi)| (a * vi + b * wi) / d).collect()
}

/// Möbius addition `v ⊕_c w`.
pub fn mobius_add(v: &BallPoint, w: &BallPoint, cfg: &BallConfig) -> Result<BallPoint> {
    check_dims(v.dim(), w.dim())?;
    project_to_ball(mobius_add_raw(v.as_slice(), w.as_slice(), cfg.c), cfg)
}

/// Exponential map at the origin: `tanh(sqrt(c)|x|) · x / (sqrt(c)|x|)`.
pub fn exp_map_origin(x: &TangentVector, cfg: &BallConfig) -> Result<BallPoint> {
    project_to_ball(exp_map_origin_raw(x.as_slice(), cfg), cfg)
}

pub(crate) fn exp_map_origin_raw(x: &[f64], cfg: &BallConfig) -> Vec<f64> {
    let n = norm(x);
    if n == 0.0 {
        return alloc::vec![0.0; x.len()];
    }
    let sc = cfg.sqrt_c();
    let scale = libm::tanh(sc * n) / (sc * n);
    x.iter().map(|v| v * scale).collect()
}

/// Exponential map at `v`: `v ⊕ tanh(sqrt(c) λ_v |x| / 2) · x / (sqrt(c)|x|)`.
pub fn exp_map(v: &BallPoint, x: &TangentVector, cfg: &BallConfig) -> Result<BallPoint> {
    check_dims(v.dim(), x.dim())?;
    if x.as_slice().iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = x.norm();
    if n == 0.0 {
        return Ok(v.clone());
    }
    let lambda = conformal_factor(v, cfg)?;
    let sc = cfg.sqrt_c();
    let scale = libm::tanh(sc * lambda * n / 2.0) / (sc * n);
    let step = project_to_ball(x.as_slice().iter().map(|t| t * scale).collect(), cfg)?;
    mobius_add(v, &step, cfg)
}

/// Geodesic distance between two ball points.
///
/// For `c = 1` this is `acosh(1 + 2|x-z|² / ((1-|x|²)(1-|z|²)))`. General `c`
/// evaluates the same expression on coordinates scaled by `sqrt(c)` and
/// divides by `sqrt(c)`.
pub fn hyperbolic_distance(x: &BallPoint, z: &BallPoint, cfg: &BallConfig) -> Result<f64> {
    check_dims(x.dim(), z.dim())?;
    hyperbolic_distance_raw(x.as_slice(), z.as_slice(), cfg)
}

pub(crate) fn hyperbolic_distance_raw(x: &[f64], z: &[f64], cfg: &BallConfig) -> Result<f64> {
    cfg.check_inside(x)?;
    cfg.check_inside(z)?;
    let c = cfg.c;
    let delta = 2.0 * c * dist_sq(x, z) / ((1.0 - c * norm_sq(x)) * (1.0 - c * norm_sq(z)));
    Ok(acosh1p(delta) / cfg.sqrt_c())
}

fn check_norm(n: f64) -> Result<()> {
    if !n.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(0.0..1.0).contains(&n) {
        return Err(Error::OutsideBall(n));
    }
    Ok(())
}

/// Unit-curvature distance written as a function of the Euclidean distance
/// `de` between two points with norms `norm1` and `norm2`.
pub fn hyperbolic_distance_from_euclidean(de: f64, norm1: f64, norm2: f64) -> Result<f64> {
    check_norm(norm1)?;
    check_norm(norm2)?;
    if !(de >= 0.0 && de.is_finite()) {
        return Err(Error::InvalidArgument("euclidean distance must be finite and non-negative"));
    }
    let denom = (1.0 - norm1 * norm1) * (1.0 - norm2 * norm2);
    Ok(acosh1p(2.0 * de * de / denom))
}

/// Derivative of [`hyperbolic_distance_from_euclidean`] with respect to `de`:
///
/// ```text
/// 2 / ( sqrt(D) · sqrt(1 + de²/D) ),   D = (1 - norm1²)(1 - norm2²)
/// ```
///
/// Positive and strictly decreasing in `de`, so the distance is strictly
/// concave in the Euclidean distance.
pub fn dh_de_derivative(de: f64, norm1: f64, norm2: f64) -> Result<f64> {
    check_norm(norm1)?;
    check_norm(norm2)?;
    if !(de >= 0.0 && de.is_finite()) {
        return Err(Error::InvalidArgument("euclidean distance must be finite and non-negative"));
    }
    let denom = (1.0 - norm1 * norm1) * (1.0 - norm2 * norm2);
    Ok(2.0 / (libm::sqrt(denom) * libm::sqrt(1.0 + de * de / denom)))
}
