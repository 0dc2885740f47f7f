//! Flat multinomial logistic regression heads.
//!
//! The Euclidean head scores class `l` with the affine logit `a_l·x + b_l`.
//! The hyperbolic head gives every class a gyroplane (offset `r`, normal `w`)
//! and scores a ball point `h` with
//!
//! ```text
//! ζ(h) = λ_r |w| / sqrt(c) · asinh( 2 sqrt(c) <u, w> / ((1 - c|u|²) |w|) ),   u = (-r) ⊕ h
//! ```
//!
//! i.e. the signed distance from `h` to the gyroplane, scaled by `λ_r |w|`.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{
    conformal_factor_raw, mobius_add_raw, project_to_ball, BallConfig, BallPoint, TangentVector,
};
use crate::linalg::{dot, norm, norm_sq};
use crate::{Error, Result};

/// Per-class decision surface in the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Gyroplane {
    offset: BallPoint,
    normal: TangentVector,
}

impl Gyroplane {
    pub fn new(offset: BallPoint, normal: TangentVector) -> Result<Self> {
        if offset.dim() != normal.dim() {
            return Err(Error::DimensionMismatch {
                expected: offset.dim(),
                got: normal.dim(),
            });
        }
        if !(normal.norm() > 0.0) {
            return Err(Error::ZeroNormal);
        }
        Ok(Self { offset, normal })
    }

    pub fn offset(&self) -> &BallPoint {
        &self.offset
    }

    pub fn normal(&self) -> &TangentVector {
        &self.normal
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }
}

/// `u = (-r) ⊕ h`, clamped only when rounding pushes it past the shell.
fn shifted(h: &[f64], r: &[f64], cfg: &BallConfig) -> Result<Vec<f64>> {
    let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
    Ok(project_to_ball(mobius_add_raw(&neg_r, h, cfg.c()), cfg)?.into_inner())
}

fn check_point(h: &BallPoint, g: &Gyroplane) -> Result<()> {
    if h.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: h.dim(),
        });
    }
    if !(g.normal.norm() > 0.0) {
        return Err(Error::ZeroNormal);
    }
    Ok(())
}

/// Argument of the asinh shared by the gyroplane distance and logit, signed.
fn asinh_argument(u: &[f64], w: &[f64], cfg: &BallConfig) -> f64 {
    2.0 * cfg.sqrt_c() * dot(u, w) / ((1.0 - cfg.c() * norm_sq(u)) * norm(w))
}

/// Hyperbolic distance from `h` to the gyroplane `g`.
pub fn gyroplane_distance(h: &BallPoint, g: &Gyroplane, cfg: &BallConfig) -> Result<f64> {
    check_point(h, g)?;
    let u = shifted(h.as_slice(), g.offset.as_slice(), cfg)?;
    let z = asinh_argument(&u, g.normal.as_slice(), cfg);
    Ok(libm::asinh(z.abs()) / cfg.sqrt_c())
}

/// Hyperbolic logit of `h` for the class owning `g`.
pub fn hyperbolic_logit(h: &BallPoint, g: &Gyroplane, cfg: &BallConfig) -> Result<f64> {
    check_point(h, g)?;
    logit_raw(h.as_slice(), g, cfg)
}

fn logit_raw(h: &[f64], g: &Gyroplane, cfg: &BallConfig) -> Result<f64> {
    let u = shifted(h, g.offset.as_slice(), cfg)?;
    let w = g.normal.as_slice();
    let lambda = conformal_factor_raw(g.offset.as_slice(), cfg)?;
    let z = asinh_argument(&u, w, cfg);
    Ok(lambda * norm(w) / cfg.sqrt_c() * libm::asinh(z))
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| libm::exp(l - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(logits.iter().map(|l| libm::exp(l - max)).sum::<f64>())
}

/// `-ln p[true_class]`.
pub fn cross_entropy_loss(posteriors: &[f64], true_class: usize) -> Result<f64> {
    let p = posteriors.get(true_class).ok_or(Error::ClassOutOfRange {
        index: true_class,
        classes: posteriors.len(),
    })?;
    Ok(-libm::log(*p))
}

/// Cross-entropy computed from logits via log-sum-exp.
pub fn cross_entropy_from_logits(logits: &[f64], true_class: usize) -> Result<f64> {
    let l = logits.get(true_class).ok_or(Error::ClassOutOfRange {
        index: true_class,
        classes: logits.len(),
    })?;
    Ok(log_sum_exp(logits) - l)
}

/// One gyroplane per class, all in the same ball.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicMLR {
    gyroplanes: Vec<Gyroplane>,
    cfg: BallConfig,
}

impl HyperbolicMLR {
    pub fn new(gyroplanes: Vec<Gyroplane>, cfg: BallConfig) -> Result<Self> {
        if gyroplanes.len() < 2 {
            return Err(Error::InvalidArgument("a classifier needs at least two classes"));
        }
        let dim = gyroplanes[0].dim();
        for g in &gyroplanes {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.dim(),
                });
            }
            BallPoint::new(g.offset.as_slice().to_vec(), &cfg)?;
        }
        Ok(Self { gyroplanes, cfg })
    }

    pub fn gyroplanes(&self) -> &[Gyroplane] {
        &self.gyroplanes
    }

    pub fn ball(&self) -> &BallConfig {
        &self.cfg
    }

    pub fn num_classes(&self) -> usize {
        self.gyroplanes.len()
    }

    pub fn dim(&self) -> usize {
        self.gyroplanes[0].dim()
    }

    pub fn logits(&self, h: &BallPoint) -> Result<Vec<f64>> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: h.dim(),
            });
        }
        self.gyroplanes
            .iter()
            .map(|g| logit_raw(h.as_slice(), g, &self.cfg))
            .collect()
    }
}

/// Softmax over the hyperbolic logits.
pub fn hyperbolic_posteriors(h: &BallPoint, model: &HyperbolicMLR) -> Result<Vec<f64>> {
    Ok(softmax(&model.logits(h)?))
}

/// Affine per-class scores `a_l·x + b_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanMLR {
    weights: Vec<TangentVector>,
    biases: Vec<f64>,
}

impl EuclideanMLR {
    pub fn new(weights: Vec<TangentVector>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidArgument("a classifier needs at least two classes"));
        }
        if weights.len() != biases.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                got: biases.len(),
            });
        }
        let dim = weights[0].dim();
        if let Some(w) = weights.iter().find(|w| w.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.dim(),
            });
        }
        Ok(Self { weights, biases })
    }

    pub fn weights(&self) -> &[TangentVector] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights[0].dim()
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(a, b)| dot(a.as_slice(), x) + b)
            .collect())
    }
}

pub fn euclidean_posteriors(x: &TangentVector, model: &EuclideanMLR) -> Result<Vec<f64>> {
    Ok(softmax(&model.logits(x.as_slice())?))
}

/// Loss value and Euclidean gradients of the hyperbolic cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicGrads {
    pub loss: f64,
    /// Gradient with respect to each offset `r_k` (Euclidean, not yet rescaled).
    pub offsets: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
    /// Gradient with respect to the ball point `h`.
    pub point: Vec<f64>,
}

impl HyperbolicGrads {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            loss: 0.0,
            offsets: vec![vec![0.0; dim]; classes],
            normals: vec![vec![0.0; dim]; classes],
            point: vec![0.0; dim],
        }
    }

    /// `self += other * scale`, field by field.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        self.loss += other.loss * scale;
        let pairs = self
            .offsets
            .iter_mut()
            .zip(&other.offsets)
            .chain(self.normals.iter_mut().zip(&other.normals))
            .chain(core::iter::once((&mut self.point, &other.point)));
        for (dst, src) in pairs {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * scale;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.offsets
            .iter()
            .chain(&self.normals)
            .chain(core::iter::once(&self.point))
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Per-class logit together with its partial derivatives.
struct LogitJet {
    value: f64,
    d_point: Vec<f64>,
    d_offset: Vec<f64>,
    d_normal: Vec<f64>,
}

/// Differentiates one hyperbolic logit by hand.
///
/// With `a = -r`, Möbius addition gives `u = (A a + B h) / D` where
/// `A = 1 + 2c<a,h> + c|h|²`, `B = 1 - c|a|²`, `D = 1 + 2c<a,h> + c²|a|²|h|²`.
/// The chain runs ζ → (z, λ_r, |w|) → (<u,w>, |u|²) → (a, h).
fn logit_jet(h: &[f64], g: &Gyroplane, cfg: &BallConfig) -> Result<LogitJet> {
    let c = cfg.c();
    let sc = cfg.sqrt_c();
    let r = g.offset.as_slice();
    let w = g.normal.as_slice();
    let a: Vec<f64> = r.iter().map(|v| -v).collect();

    let ah = dot(&a, h);
    let aa = norm_sq(&a);
    let hh = norm_sq(h);
    let big_a = 1.0 + 2.0 * c * ah + c * hh;
    let big_b = 1.0 - c * aa;
    let big_d = 1.0 + 2.0 * c * ah + c * c * aa * hh;
    let u: Vec<f64> = a
        .iter()
        .zip(h)
        .map(|(ai, hi)| (big_a * ai + big_b * hi) / big_d)
        .collect();

    let uw = dot(&u, w);
    let uu = norm_sq(&u);
    let wn = norm(w);
    let s = 1.0 - c * uu;
    let z = 2.0 * sc * uw / (s * wn);
    let lambda = conformal_factor_raw(r, cfg)?;
    let asinh_z = libm::asinh(z);
    let value = lambda * wn / sc * asinh_z;

    let dzeta_dz = lambda * wn / sc / libm::sqrt(1.0 + z * z);
    let dz_duw = 2.0 * sc / (s * wn);
    let dz_duu = z * c / s;

    // d ζ / d u
    let g_u: Vec<f64> = u
        .iter()
        .zip(w)
        .map(|(ui, wi)| dzeta_dz * (dz_duw * wi + dz_duu * 2.0 * ui))
        .collect();

    // d ζ / d w: through z (both <u,w> and |w|) and the explicit |w| prefactor.
    let d_normal: Vec<f64> = u
        .iter()
        .zip(w)
        .map(|(ui, wi)| {
            dzeta_dz * (dz_duw * ui - z / wn * wi / wn) + lambda / sc * asinh_z * wi / wn
        })
        .collect();

    // Pull g_u back through the Möbius sum.
    let ga = dot(&g_u, &a);
    let gh = dot(&g_u, h);
    let gu = dot(&g_u, &u);
    let d_point: Vec<f64> = (0..h.len())
        .map(|i| {
            (2.0 * c * ga * (a[i] + h[i]) + big_b * g_u[i]
                - gu * (2.0 * c * a[i] + 2.0 * c * c * aa * h[i]))
                / big_d
        })
        .collect();
    let d_a: Vec<f64> = (0..h.len())
        .map(|i| {
            (2.0 * c * ga * h[i] + big_a * g_u[i]
                - 2.0 * c * gh * a[i]
                - gu * (2.0 * c * h[i] + 2.0 * c * c * hh * a[i]))
                / big_d
        })
        .collect();

    // dλ_r/dr = c λ_r² r
    let dzeta_dlambda = wn / sc * asinh_z;
    let d_offset: Vec<f64> = d_a
        .iter()
        .zip(r)
        .map(|(da, ri)| -da + dzeta_dlambda * c * lambda * lambda * ri)
        .collect();

    Ok(LogitJet {
        value,
        d_point,
        d_offset,
        d_normal,
    })
}

/// Cross-entropy of the hyperbolic head at `h` and its gradients with respect
/// to every offset, normal and to `h` itself.
pub fn grad_hyperbolic(
    h: &BallPoint,
    model: &HyperbolicMLR,
    true_class: usize,
) -> Result<HyperbolicGrads> {
    let k = model.num_classes();
    if true_class >= k {
        return Err(Error::ClassOutOfRange {
            index: true_class,
            classes: k,
        });
    }
    if h.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: h.dim(),
        });
    }
    let jets = model
        .gyroplanes
        .iter()
        .map(|g| logit_jet(h.as_slice(), g, &model.cfg))
        .collect::<Result<Vec<_>>>()?;
    let logits: Vec<f64> = jets.iter().map(|j| j.value).collect();
    let probs = softmax(&logits);
    let loss = cross_entropy_from_logits(&logits, true_class)?;

    let mut point = vec![0.0; model.dim()];
    let mut offsets = Vec::with_capacity(k);
    let mut normals = Vec::with_capacity(k);
    for (idx, (jet, p)) in jets.into_iter().zip(&probs).enumerate() {
        let coeff = p - if idx == true_class { 1.0 } else { 0.0 };
        for (acc, d) in point.iter_mut().zip(&jet.d_point) {
            *acc += coeff * d;
        }
        offsets.push(jet.d_offset.into_iter().map(|d| coeff * d).collect());
        normals.push(jet.d_normal.into_iter().map(|d| coeff * d).collect());
    }
    Ok(HyperbolicGrads {
        loss,
        offsets,
        normals,
        point,
    })
}

/// Loss value and gradients of the Euclidean cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanGrads {
    pub loss: f64,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl EuclideanGrads {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            loss: 0.0,
            weights: vec![vec![0.0; dim]; classes],
            biases: vec![0.0; classes],
        }
    }

    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        self.loss += other.loss * scale;
        for (dst, src) in self.weights.iter_mut().zip(&other.weights) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * scale;
            }
        }
        for (d, s) in self.biases.iter_mut().zip(&other.biases) {
            *d += s * scale;
        }
    }
}

pub fn grad_euclidean(x: &[f64], model: &EuclideanMLR, true_class: usize) -> Result<EuclideanGrads> {
    let logits = model.logits(x)?;
    let loss = cross_entropy_from_logits(&logits, true_class)?;
    let probs = softmax(&logits);
    let mut weights = Vec::with_capacity(probs.len());
    let mut biases = Vec::with_capacity(probs.len());
    for (idx, p) in probs.iter().enumerate() {
        let coeff = p - if idx == true_class { 1.0 } else { 0.0 };
        weights.push(x.iter().map(|xi| coeff * xi).collect());
        biases.push(coeff);
    }
    Ok(EuclideanGrads {
        loss,
        weights,
        biases,
    })
}

impl HyperbolicMLR {
    pub(crate) fn from_parts_unchecked(gyroplanes: Vec<Gyroplane>, cfg: BallConfig) -> Self {
        Self { gyroplanes, cfg }
    }
}

impl EuclideanMLR {
    pub(crate) fn parts_mut(&mut self) -> (&mut [TangentVector], &mut [f64]) {
        (&mut self.weights, &mut self.biases)
    }
}
