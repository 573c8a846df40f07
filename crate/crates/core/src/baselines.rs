//! Comparison methods: anchors without view-dependent distortion, purely 2D
//! anchor interpolation, and three roll-blind weighting schemes.
//!
//! The yaw/pitch scheme is a k-nearest-neighbour stand-in for a Delaunay
//! interpolation of the angle space, not a reimplementation of it.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::blend::{compute_weights, exact_matches, BlendParams, WeightVector};
use crate::geometry::{project, Rotation, Vector2, Vector3};
use crate::model::{Model25, ModelError};
use crate::scalar::Scalar;
use crate::{Vec2, Vec3, ViewRotation};

/// Neighbours used by [`WeightMethod::YawPitchKnn`].
pub const KNN_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorMethod {
    /// 3D anchor plus blended view-dependent distortions.
    Vdd,
    /// Projection of the 3D anchor alone.
    NoVdd,
    /// Weighted sum of the authored 2D anchors.
    Pure2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightMethod {
    FrobeniusVdd,
    YawPitchKnn,
    PositionDistance,
    RayAngle,
}

impl AnchorMethod {
    pub const ALL: [AnchorMethod; 3] = [AnchorMethod::Vdd, AnchorMethod::NoVdd, AnchorMethod::Pure2D];

    pub fn as_str(self) -> &'static str {
        match self {
            AnchorMethod::Vdd => "vdd",
            AnchorMethod::NoVdd => "no-vdd",
            AnchorMethod::Pure2D => "pure-2d",
        }
    }
}

impl WeightMethod {
    pub const ALL: [WeightMethod; 4] = [
        WeightMethod::FrobeniusVdd,
        WeightMethod::YawPitchKnn,
        WeightMethod::PositionDistance,
        WeightMethod::RayAngle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WeightMethod::FrobeniusVdd => "frobenius",
            WeightMethod::YawPitchKnn => "yaw-pitch-knn",
            WeightMethod::PositionDistance => "position-distance",
            WeightMethod::RayAngle => "ray-angle",
        }
    }

    /// Ignores rotation about the viewing axis.
    pub fn is_roll_blind(self) -> bool {
        self != WeightMethod::FrobeniusVdd
    }
}

impl fmt::Display for AnchorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for WeightMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method '{0}'")]
pub struct UnknownMethod(pub String);

impl FromStr for AnchorMethod {
    type Err = UnknownMethod;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

impl FromStr for WeightMethod {
    type Err = UnknownMethod;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// The key views are indistinguishable in the method's parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{method}: all key views coincide in its parameter space; weights are undefined")]
pub struct DegenerateConfiguration {
    pub method: WeightMethod,
}

pub fn anchor_no_vdd_point<T: Scalar>(anchor3d: Vector3<T>, cur: &Rotation<T>) -> Vector2<T> {
    project(cur.apply(anchor3d))
}

pub fn anchor_no_vdd(model: &Model25, part: usize, cur: &ViewRotation) -> Result<Vec2, ModelError> {
    let solved = model.solved().ok_or(ModelError::UnsolvedModel)?;
    Ok(anchor_no_vdd_point(solved[part].anchor3d, cur))
}

pub fn anchor_pure2d(model: &Model25, part: usize, weights: &WeightVector) -> Vec2 {
    model
        .key_views()
        .iter()
        .zip(weights.as_slice())
        .filter(|(_, &w)| w != 0.0)
        .fold(Vec2::zero(), |acc, (kv, &w)| acc + kv.parts[part].anchor * w)
}

fn wrap_degrees<T: Scalar>(d: T) -> T {
    let full = T::lit(360.0);
    let mut r = d % full;
    if r > T::lit(180.0) {
        r = r - full;
    } else if r < T::lit(-180.0) {
        r = r + full;
    }
    r
}

fn yaw_pitch_distance<T: Scalar>(a: &Rotation<T>, b: &Rotation<T>) -> T {
    let (ea, eb) = (a.to_euler(), b.to_euler());
    let dy = wrap_degrees(ea.yaw - eb.yaw);
    let dp = ea.pitch - eb.pitch;
    (dy * dy + dp * dp).sqrt()
}

fn position_distance<T: Scalar>(a: &Rotation<T>, b: &Rotation<T>) -> T {
    (a.camera_position() - b.camera_position()).norm()
}

fn ray_angle<T: Scalar>(a: &Rotation<T>, b: &Rotation<T>) -> T {
    let (p, q) = (a.camera_position(), b.camera_position());
    p.cross(q).norm().atan2(p.dot(q))
}

fn keys_coincide<T: Scalar>(keys: &[Rotation<T>], metric: fn(&Rotation<T>, &Rotation<T>) -> T, eps: T) -> bool {
    keys.len() >= 2 && keys[1..].iter().all(|k| metric(&keys[0], k) < eps)
}

fn inverse_distance<T: Scalar>(distances: &[T], eps: T) -> WeightVector<T> {
    if let Some(w) = exact_matches(distances, eps) {
        return w;
    }
    WeightVector::from_scores(distances.iter().map(|d| d.recip()).collect())
        .expect("positive distances give positive scores")
}

/// Weights under any of the four schemes. Only the Frobenius scheme can
/// tell apart key views that differ by roll alone.
pub fn weights_alternative<T: Scalar>(
    method: WeightMethod,
    cur: &Rotation<T>,
    keys: &[Rotation<T>],
    params: &BlendParams,
) -> Result<WeightVector<T>, DegenerateConfiguration> {
    assert!(!keys.is_empty(), "at least one key view required");
    let eps = T::lit(params.exact_match_epsilon());
    let degenerate = Err(DegenerateConfiguration { method });
    match method {
        WeightMethod::FrobeniusVdd => Ok(compute_weights(cur, keys, params)),
        WeightMethod::YawPitchKnn => {
            if keys_coincide(keys, yaw_pitch_distance, eps) {
                return degenerate;
            }
            let d: Vec<T> = keys.iter().map(|k| yaw_pitch_distance(cur, k)).collect();
            if let Some(w) = exact_matches(&d, eps) {
                return Ok(w);
            }
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)));
            let mut scores = vec![T::zero(); d.len()];
            for &j in order.iter().take(KNN_K) {
                scores[j] = d[j].recip();
            }
            Ok(WeightVector::from_scores(scores).expect("positive distances"))
        }
        WeightMethod::PositionDistance => {
            if keys_coincide(keys, position_distance, eps) {
                return degenerate;
            }
            let d: Vec<T> = keys.iter().map(|k| position_distance(cur, k)).collect();
            Ok(inverse_distance(&d, eps))
        }
        WeightMethod::RayAngle => {
            let d: Vec<T> = keys.iter().map(|k| ray_angle(cur, k)).collect();
            Ok(inverse_distance(&d, eps))
        }
    }
}

/// Max distance of the camera positions from each other; zero for a
/// roll-only key set.
pub fn camera_position_spread(keys: &[ViewRotation]) -> f64 {
    let pos: Vec<Vec3> = keys.iter().map(|k| k.camera_position()).collect();
    let mut spread: f64 = 0.0;
    for (i, a) in pos.iter().enumerate() {
        for b in &pos[i + 1..] {
            spread = spread.max((*a - *b).norm());
        }
    }
    spread
}
