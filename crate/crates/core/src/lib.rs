//! Layered 2.5D cartoon models: 2D parts drawn in a few key views, turned
//! into a model that can be drawn from any camera rotation.
//!
//! The pipeline is
//! [`load_model`] → [`solve_model`] (3D anchors and per-view distortions) →
//! [`FrameEvaluator`] (view weights, blended anchors, depths, colors and
//! as-rigid-as-possible shapes) → [`render_frame`].
//!
//! The numeric kernels in [`geometry`], [`linalg`], [`anchor`] and [`shape`]
//! are generic over [`Scalar`] (`f32` or `f64`); the model, documents and
//! evaluation work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anchor;
pub mod animation;
pub mod baselines;
pub mod blend;
pub mod document;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod shape;
pub mod svg;

pub use anchor::{solve_model, solve_with_diagnostics, triangulate_anchor, PartDiagnostics};
pub use animation::{sample_track, AnimationError, ModelTrack};
pub use baselines::{weights_alternative, AnchorMethod, DegenerateConfiguration, WeightMethod};
pub use blend::{
    compute_weights, evaluate_frame, quantize_view, BlendParams, BlendedFrame, EvalError,
    FrameEvaluator, FramePart, WeightVector,
};
pub use document::{frame_to_json, load_model, load_track, save_model};
pub use geometry::{project, EulerAngles};
pub use model::{KeyViewRecord, Model25, ModelError, PartTopology, PartView, Rgba, ValidationError};
pub use scalar::Scalar;
pub use shape::{ArapCache, ShapeOptions};
pub use svg::{render_frame, render_turntable, RenderOptions};

pub type Vec2 = geometry::Vector2<f64>;
pub type Vec3 = geometry::Vector3<f64>;
pub type Mat2 = geometry::Matrix2<f64>;
pub type Mat3 = geometry::Matrix3<f64>;
pub type ViewRotation = geometry::Rotation<f64>;

pub type Vec2f = geometry::Vector2<f32>;
pub type Vec3f = geometry::Vector3<f32>;
pub type Mat2f = geometry::Matrix2<f32>;
pub type Mat3f = geometry::Matrix3<f32>;
pub type ViewRotationf = geometry::Rotation<f32>;
