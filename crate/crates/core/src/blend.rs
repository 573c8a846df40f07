//! View-dependent evaluation of a solved model at an arbitrary camera
//! rotation: key-view weights, blended anchors, depths, colors, shapes and
//! painter's order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, AnchorMethod, DegenerateConfiguration, WeightMethod};
use crate::geometry::{project, Rotation, Vector2, Vector3};
use crate::model::{Model25, ModelError, Rgba, SolvedPart};
use crate::scalar::Scalar;
use crate::shape::{ArapCache, PartShapeError, ShapeOptions};
use crate::svg::{part_outline, PartOutline};
use crate::{Vec2, ViewRotation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlendError {
    #[error("alpha must be negative, got {0}")]
    NonNegativeAlpha(f64),
    #[error("quantize step must be finite and non-negative, got {0}")]
    BadQuantizeStep(f64),
    #[error("exact-match epsilon must be finite and non-negative, got {0}")]
    BadEpsilon(f64),
}

/// Parameters of the view-weight computation and camera quantization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendParams {
    alpha: f64,
    exact_match_epsilon: f64,
    quantize_step: f64,
}

impl Default for BlendParams {
    fn default() -> Self {
        Self {
            alpha: -4.0,
            exact_match_epsilon: 1e-9,
            quantize_step: 10.0,
        }
    }
}

impl BlendParams {
    pub fn new(alpha: f64, exact_match_epsilon: f64, quantize_step: f64) -> Result<Self, BlendError> {
        if !(alpha < 0.0) || !alpha.is_finite() {
            return Err(BlendError::NonNegativeAlpha(alpha));
        }
        if !(exact_match_epsilon >= 0.0) || !exact_match_epsilon.is_finite() {
            return Err(BlendError::BadEpsilon(exact_match_epsilon));
        }
        if !(quantize_step >= 0.0) || !quantize_step.is_finite() {
            return Err(BlendError::BadQuantizeStep(quantize_step));
        }
        Ok(Self {
            alpha,
            exact_match_epsilon,
            quantize_step,
        })
    }

    pub fn with_quantize_step(self, step: f64) -> Result<Self, BlendError> {
        Self::new(self.alpha, self.exact_match_epsilon, step)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn exact_match_epsilon(&self) -> f64 {
        self.exact_match_epsilon
    }

    pub fn quantize_step(&self) -> f64 {
        self.quantize_step
    }
}

/// One weight per key view; entries in [0, 1] summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T = f64>(Vec<T>);

impl<T: Scalar> WeightVector<T> {
    /// Normalizes non-negative scores. Returns `None` if they sum to zero or
    /// are not finite.
    pub fn from_scores(scores: Vec<T>) -> Option<Self> {
        let total = scores.iter().fold(T::zero(), |a, &s| a + s);
        if !(total > T::zero()) || !total.is_finite() {
            return None;
        }
        Some(Self(scores.into_iter().map(|s| s / total).collect()))
    }

    pub fn indicator(len: usize, index: usize) -> Self {
        let mut w = vec![T::zero(); len];
        w[index] = T::one();
        Self(w)
    }

    /// Equal split over `indices`.
    pub fn split(len: usize, indices: &[usize]) -> Self {
        let share = T::one() / T::from_usize(indices.len()).unwrap();
        let mut w = vec![T::zero(); len];
        for &i in indices {
            w[i] = share;
        }
        Self(w)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

/// Shared exact-match rule: keys closer than `eps` take all the weight.
pub(crate) fn exact_matches<T: Scalar>(distances: &[T], eps: T) -> Option<WeightVector<T>> {
    let hits: Vec<usize> = (0..distances.len()).filter(|&j| distances[j] < eps).collect();
    if hits.is_empty() {
        None
    } else {
        Some(WeightVector::split(distances.len(), &hits))
    }
}

/// Inverse-power weights of the Frobenius distances between the current
/// rotation and each key rotation: `wⱼ ∝ ‖R_cur − Rⱼ‖_F^α`.
pub fn compute_weights<T: Scalar>(
    cur: &Rotation<T>,
    keys: &[Rotation<T>],
    params: &BlendParams,
) -> WeightVector<T> {
    assert!(!keys.is_empty(), "at least one key view required");
    let distances: Vec<T> = keys.iter().map(|k| cur.distance(k)).collect();
    if let Some(w) = exact_matches(&distances, T::lit(params.exact_match_epsilon)) {
        return w;
    }
    let alpha = T::lit(params.alpha);
    WeightVector::from_scores(distances.iter().map(|d| d.powf(alpha)).collect())
        .expect("positive distances give positive scores")
}

/// `Π[R_cur·v + Σⱼ wⱼ (R_cur·Rⱼ⁻¹)·(dⱼ, 0)]`.
pub fn blend_anchor_point<T: Scalar>(
    anchor3d: Vector3<T>,
    distortions: &[Vector2<T>],
    keys: &[Rotation<T>],
    cur: &Rotation<T>,
    weights: &[T],
) -> Vector2<T> {
    let mut offset = Vector3::zero();
    for ((d, key), &w) in distortions.iter().zip(keys).zip(weights) {
        if w == T::zero() {
            continue;
        }
        offset += key.inverse().then(cur).apply(d.lift()) * w;
    }
    project(cur.apply(anchor3d) + offset)
}

fn solved_part(model: &Model25, part: usize) -> Result<&SolvedPart, ModelError> {
    model
        .solved()
        .map(|s| &s[part])
        .ok_or(ModelError::UnsolvedModel)
}

fn key_rotations(model: &Model25) -> Vec<ViewRotation> {
    model.key_views().iter().map(|kv| kv.rotation).collect()
}

pub fn blend_anchor(
    model: &Model25,
    part: usize,
    cur: &ViewRotation,
    weights: &WeightVector,
) -> Result<Vec2, ModelError> {
    let sp = solved_part(model, part)?;
    Ok(blend_anchor_point(
        sp.anchor3d,
        &sp.distortions,
        &key_rotations(model),
        cur,
        weights.as_slice(),
    ))
}

/// Depth of the 3D anchor in the current view, or the blend of the authored
/// depth overrides when every key view supplies one.
pub fn blend_depth(
    model: &Model25,
    part: usize,
    cur: &ViewRotation,
    weights: &WeightVector,
) -> Result<f64, ModelError> {
    let sp = solved_part(model, part)?;
    let overrides: Option<Vec<f64>> = model
        .key_views()
        .iter()
        .map(|kv| kv.parts[part].depth_override)
        .collect();
    Ok(match overrides {
        Some(o) => o
            .iter()
            .zip(weights.as_slice())
            .filter(|(_, &w)| w != 0.0)
            .map(|(d, w)| d * w)
            .sum(),
        None => cur.apply(sp.anchor3d).z,
    })
}

pub fn blend_color(model: &Model25, part: usize, weights: &WeightVector) -> Rgba {
    let mut c = [0.0; 4];
    for (kv, &w) in model.key_views().iter().zip(weights.as_slice()) {
        if w == 0.0 {
            continue;
        }
        for (acc, v) in c.iter_mut().zip(kv.parts[part].color.0) {
            *acc += w * v;
        }
    }
    Rgba(c)
}

/// Snaps each Euler angle to the nearest multiple of `step` degrees, halves
/// rounding away from zero. `step == 0` returns `cur` unchanged.
pub fn quantize_view<T: Scalar>(cur: &Rotation<T>, step: T) -> Rotation<T> {
    if step == T::zero() {
        return *cur;
    }
    let e = cur.to_euler();
    let snap = |deg: T| {
        // absorb the extraction round-off so exact half steps stay halves
        let units = deg / step;
        let grid = T::lit(1e9);
        ((units * grid).round() / grid).round() * step
    };
    Rotation::from_euler(snap(e.yaw), snap(e.pitch), snap(e.roll))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePart {
    pub part_id: String,
    pub position: Vec2,
    pub depth: f64,
    pub color: Rgba,
    pub vertices: Vec<Vec2>,
    /// Boundary used by the renderer; shared with the evaluator.
    pub outline: Arc<PartOutline>,
}

/// A model evaluated at one camera rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendedFrame {
    pub parts: Vec<FramePart>,
    /// Part indices back to front.
    pub draw_order: Vec<usize>,
    /// The rotation actually evaluated (after quantization).
    pub view: ViewRotation,
    pub weights: Vec<f64>,
}

impl BlendedFrame {
    pub fn empty(view: ViewRotation) -> Self {
        Self {
            parts: Vec::new(),
            draw_order: Vec::new(),
            view,
            weights: Vec::new(),
        }
    }
}

/// Ascending depth; ties keep authoring order.
pub fn painter_order(depths: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..depths.len()).collect();
    order.sort_by(|&a, &b| depths[a].total_cmp(&depths[b]));
    order
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Shape(#[from] PartShapeError),
    #[error(transparent)]
    Weights(#[from] DegenerateConfiguration),
}

/// A solved model bundled with its shape cache, ready to evaluate frames.
#[derive(Debug, Clone)]
pub struct FrameEvaluator {
    model: Model25,
    cache: ArapCache,
    keys: Vec<ViewRotation>,
    outlines: Vec<Arc<PartOutline>>,
}

impl FrameEvaluator {
    pub fn new(model: Model25, options: ShapeOptions) -> Result<Self, EvalError> {
        if !model.is_solved() {
            return Err(ModelError::UnsolvedModel.into());
        }
        if model.key_views().is_empty() {
            return Err(ModelError::EmptyModel.into());
        }
        let cache = ArapCache::build(&model, options)?;
        let keys = key_rotations(&model);
        let outlines = model
            .parts()
            .iter()
            .map(|p| Arc::new(part_outline(&p.triangles)))
            .collect();
        Ok(Self {
            model,
            cache,
            keys,
            outlines,
        })
    }

    pub fn model(&self) -> &Model25 {
        &self.model
    }

    pub fn cache(&self) -> &ArapCache {
        &self.cache
    }

    pub fn key_rotations(&self) -> &[ViewRotation] {
        &self.keys
    }

    pub fn evaluate(&self, cur: &ViewRotation, params: &BlendParams) -> BlendedFrame {
        self.evaluate_with(cur, params, AnchorMethod::Vdd, WeightMethod::FrobeniusVdd)
            .expect("Frobenius weights are always defined")
    }

    /// Evaluates with a comparison anchor or weight scheme.
    pub fn evaluate_with(
        &self,
        cur: &ViewRotation,
        params: &BlendParams,
        anchor_method: AnchorMethod,
        weight_method: WeightMethod,
    ) -> Result<BlendedFrame, DegenerateConfiguration> {
        let view = quantize_view(cur, params.quantize_step());
        let weights = baselines::weights_alternative(weight_method, &view, &self.keys, params)?;
        let solved = self.model.solved().expect("checked at construction");
        let mut parts = Vec::with_capacity(self.model.parts().len());
        for (i, topo) in self.model.parts().iter().enumerate() {
            let sp = &solved[i];
            let position = match anchor_method {
                AnchorMethod::Vdd => blend_anchor_point(
                    sp.anchor3d,
                    &sp.distortions,
                    &self.keys,
                    &view,
                    weights.as_slice(),
                ),
                AnchorMethod::NoVdd => baselines::anchor_no_vdd_point(sp.anchor3d, &view),
                AnchorMethod::Pure2D => baselines::anchor_pure2d(&self.model, i, &weights),
            };
            let depth = blend_depth(&self.model, i, &view, &weights).expect("solved");
            let color = blend_color(&self.model, i, &weights);
            let target = position + self.cache.centroid_offset(i, weights.as_slice());
            let vertices = self.cache.part(i).interpolate(weights.as_slice(), target);
            parts.push(FramePart {
                part_id: topo.part_id.clone(),
                position,
                depth,
                color,
                vertices,
                outline: Arc::clone(&self.outlines[i]),
            });
        }
        let depths: Vec<f64> = parts.iter().map(|p| p.depth).collect();
        Ok(BlendedFrame {
            draw_order: painter_order(&depths),
            parts,
            view,
            weights: weights.into_vec(),
        })
    }
}

/// One-shot evaluation; builds the shape cache on every call.
pub fn evaluate_frame(
    model: &Model25,
    cur: &ViewRotation,
    params: &BlendParams,
) -> Result<BlendedFrame, EvalError> {
    Ok(FrameEvaluator::new(model.clone(), ShapeOptions::default())?.evaluate(cur, params))
}
