//! Parts, key views and solved 2.5D models.
//!
//! A [`Model25`] is an immutable value. Every constructor and mutating
//! operation validates the full set of invariants and returns a new model,
//! so a model that exists is always well formed.

use thiserror::Error;

use crate::geometry::{EulerAngles, GeometryError, Rotation};
use crate::shape::{area_centroid, signed_area};
use crate::{Vec2, Vec3, ViewRotation};

/// Two key views closer than this (Frobenius distance) are duplicates.
pub const DUPLICATE_VIEW_TOLERANCE: f64 = 1e-9;

/// Minimum signed area of an authored triangle, in model units².
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("part '{part_id}': triangle {triangle} in key view {key_view} is degenerate or flipped (signed area {area:e})")]
    DegenerateTriangle {
        part_id: String,
        key_view: usize,
        triangle: usize,
        area: f64,
    },
    #[error("part '{part_id}': key view {key_view} has {found} vertices, topology expects {expected}")]
    VertexCountMismatch {
        part_id: String,
        key_view: usize,
        expected: usize,
        found: usize,
    },
    #[error("key view {key_view} duplicates the rotation of key view {existing}")]
    DuplicateKeyView { key_view: usize, existing: usize },
    #[error("key view {key_view}: rotation is not orthonormal with det +1 (error {error:e})")]
    NonOrthonormalView { key_view: usize, error: f64 },
    #[error("part '{part_id}': triangle {triangle} references a vertex outside 0..{vertex_count}")]
    TriangleIndexOutOfRange {
        part_id: String,
        triangle: usize,
        vertex_count: usize,
    },
    #[error("part '{part_id}' has no triangles")]
    EmptyTopology { part_id: String },
    #[error("part id '{part_id}' is used more than once")]
    DuplicatePartId { part_id: String },
    #[error("key view {key_view} has no entry for part '{part_id}'")]
    MissingPart { part_id: String, key_view: usize },
    #[error("key view {key_view} refers to unknown part '{part_id}'")]
    UnknownPart { part_id: String, key_view: usize },
    #[error("non-finite number in {field}")]
    NonFinite { field: String },
    #[error("part '{part_id}': color in key view {key_view} is outside [0, 1]")]
    ColorOutOfRange { part_id: String, key_view: usize },
    #[error("solved block: {detail}")]
    InconsistentSolution { detail: String },
    #[error("reference view index {index} out of range (model has {count} key views)")]
    ReferenceViewOutOfRange { index: usize, count: usize },
    #[error("unsupported format_version {found}")]
    UnsupportedVersion { found: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("model has no key views")]
    EmptyModel,
    #[error("model has not been solved")]
    UnsolvedModel,
}

impl ValidationError {
    /// Variant name, stable for machine consumers.
    pub fn kind(&self) -> &'static str {
        match self {
            ValidationError::DegenerateTriangle { .. } => "DegenerateTriangle",
            ValidationError::VertexCountMismatch { .. } => "VertexCountMismatch",
            ValidationError::DuplicateKeyView { .. } => "DuplicateKeyView",
            ValidationError::NonOrthonormalView { .. } => "NonOrthonormalView",
            ValidationError::TriangleIndexOutOfRange { .. } => "TriangleIndexOutOfRange",
            ValidationError::EmptyTopology { .. } => "EmptyTopology",
            ValidationError::DuplicatePartId { .. } => "DuplicatePartId",
            ValidationError::MissingPart { .. } => "MissingPart",
            ValidationError::UnknownPart { .. } => "UnknownPart",
            ValidationError::NonFinite { .. } => "NonFinite",
            ValidationError::ColorOutOfRange { .. } => "ColorOutOfRange",
            ValidationError::InconsistentSolution { .. } => "InconsistentSolution",
            ValidationError::ReferenceViewOutOfRange { .. } => "ReferenceViewOutOfRange",
            ValidationError::UnsupportedVersion { .. } => "UnsupportedVersion",
        }
    }
}

impl ModelError {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::Parse(_) => "ParseError",
            ModelError::Validation(v) => v.kind(),
            ModelError::EmptyModel => "EmptyModel",
            ModelError::UnsolvedModel => "UnsolvedModel",
        }
    }
}

/// Straight (non-premultiplied) RGBA color, each channel in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgba(pub [f64; 4]);

impl Rgba {
    pub const fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Self([r, g, b, a])
    }

    pub fn alpha(&self) -> f64 {
        self.0[3]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    fn in_unit_range(&self) -> bool {
        self.0.iter().all(|c| (0.0..=1.0).contains(c))
    }

    pub fn lerp(&self, o: &Rgba, s: f64) -> Rgba {
        let mut out = [0.0; 4];
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.0[k] + (o.0[k] - self.0[k]) * s;
        }
        Rgba(out)
    }
}

/// Shared triangulation of one layered part.
#[derive(Debug, Clone, PartialEq)]
pub struct PartTopology {
    pub part_id: String,
    pub vertex_count: usize,
    pub triangles: Vec<[usize; 3]>,
}

/// One part as drawn in one key view.
///
/// Vertices are in the key view's drawing coordinates, the same frame as the
/// anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct PartView {
    pub anchor: Vec2,
    pub vertices: Vec<Vec2>,
    pub color: Rgba,
    pub depth_override: Option<f64>,
}

impl PartView {
    /// A part view whose anchor is the area-weighted centroid of its triangles.
    pub fn with_default_anchor(
        topology: &PartTopology,
        vertices: Vec<Vec2>,
        color: Rgba,
    ) -> Self {
        let anchor = area_centroid(&vertices, &topology.triangles);
        Self {
            anchor,
            vertices,
            color,
            depth_override: None,
        }
    }
}

/// A camera rotation together with the per-part data authored at it.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyViewRecord {
    pub euler: EulerAngles<f64>,
    pub rotation: ViewRotation,
    /// The rotation was authored as an explicit matrix rather than from `euler`.
    pub matrix_authored: bool,
    /// One entry per part, in model part order.
    pub parts: Vec<PartView>,
}

impl KeyViewRecord {
    pub fn from_euler(euler: EulerAngles<f64>, parts: Vec<PartView>) -> Self {
        Self {
            euler,
            rotation: Rotation::from_angles(euler),
            matrix_authored: false,
            parts,
        }
    }
}

/// Triangulated anchor and per-key-view distortions of one part.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedPart {
    pub anchor3d: Vec3,
    /// One per key view.
    pub distortions: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model25 {
    parts: Vec<PartTopology>,
    key_views: Vec<KeyViewRecord>,
    solved: Option<Vec<SolvedPart>>,
    reference_view_index: Option<usize>,
}

impl Model25 {
    pub fn new(
        parts: Vec<PartTopology>,
        key_views: Vec<KeyViewRecord>,
    ) -> Result<Self, ValidationError> {
        validate_topologies(&parts)?;
        let mut model = Self {
            parts,
            key_views: Vec::with_capacity(key_views.len()),
            solved: None,
            reference_view_index: None,
        };
        for rec in key_views {
            model.check_key_view(&rec, model.key_views.len())?;
            model.key_views.push(rec);
        }
        Ok(model)
    }

    pub fn parts(&self) -> &[PartTopology] {
        &self.parts
    }

    pub fn key_views(&self) -> &[KeyViewRecord] {
        &self.key_views
    }

    pub fn solved(&self) -> Option<&[SolvedPart]> {
        self.solved.as_deref()
    }

    pub fn is_solved(&self) -> bool {
        self.solved.is_some()
    }

    pub fn part_index(&self, part_id: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.part_id == part_id)
    }

    pub fn explicit_reference_view(&self) -> Option<usize> {
        self.reference_view_index
    }

    /// The key view used as the shape-interpolation reference: the explicit
    /// index if set, otherwise the key view nearest the front (identity) view,
    /// lowest index on ties.
    pub fn reference_view(&self) -> Option<usize> {
        if let Some(i) = self.reference_view_index {
            return Some(i);
        }
        let front = Rotation::identity();
        let mut best: Option<(usize, f64)> = None;
        for (i, kv) in self.key_views.iter().enumerate() {
            let d = kv.rotation.distance(&front);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn with_reference_view(&self, index: Option<usize>) -> Result<Self, ValidationError> {
        if let Some(i) = index {
            if i >= self.key_views.len() {
                return Err(ValidationError::ReferenceViewOutOfRange {
                    index: i,
                    count: self.key_views.len(),
                });
            }
        }
        let mut m = self.clone();
        m.reference_view_index = index;
        Ok(m)
    }

    /// Attaches a solution; lengths must match the model.
    pub fn with_solution(&self, solved: Vec<SolvedPart>) -> Result<Self, ValidationError> {
        if solved.len() != self.parts.len() {
            return Err(ValidationError::InconsistentSolution {
                detail: format!(
                    "{} solved parts for {} parts",
                    solved.len(),
                    self.parts.len()
                ),
            });
        }
        for (sp, topo) in solved.iter().zip(&self.parts) {
            if sp.distortions.len() != self.key_views.len() {
                return Err(ValidationError::InconsistentSolution {
                    detail: format!(
                        "part '{}' has {} distortions for {} key views",
                        topo.part_id,
                        sp.distortions.len(),
                        self.key_views.len()
                    ),
                });
            }
            if !sp.anchor3d.is_finite() || sp.distortions.iter().any(|d| !d.is_finite()) {
                return Err(ValidationError::NonFinite {
                    field: format!("solved.{}", topo.part_id),
                });
            }
        }
        let mut m = self.clone();
        m.solved = Some(solved);
        Ok(m)
    }

    pub fn unsolved(&self) -> Self {
        let mut m = self.clone();
        m.solved = None;
        m
    }

    pub fn add_key_view(&self, rec: KeyViewRecord) -> Result<Self, ModelError> {
        self.check_key_view(&rec, self.key_views.len())?;
        let mut m = self.unsolved();
        m.key_views.push(rec);
        Ok(m)
    }

    pub fn delete_latest_key_view(&self) -> Result<Self, ModelError> {
        if self.key_views.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        let mut m = self.unsolved();
        m.key_views.pop();
        if m.reference_view_index == Some(m.key_views.len()) {
            m.reference_view_index = None;
        }
        Ok(m)
    }

    /// Replaces one part's entry in one key view.
    pub fn replace_part_view(
        &self,
        key_view: usize,
        part: usize,
        view: PartView,
    ) -> Result<Self, ValidationError> {
        assert!(key_view < self.key_views.len() && part < self.parts.len());
        check_part_view(&self.parts[part], &view, key_view)?;
        let mut m = self.unsolved();
        m.key_views[key_view].parts[part] = view;
        Ok(m)
    }

    fn check_key_view(&self, rec: &KeyViewRecord, index: usize) -> Result<(), ValidationError> {
        if !rec.euler.is_finite() || !rec.rotation.matrix().is_finite() {
            return Err(ValidationError::NonFinite {
                field: format!("key_views[{index}].rotation"),
            });
        }
        if let Err(GeometryError::NotRotation { error }) = Rotation::from_matrix(*rec.rotation.matrix()) {
            return Err(ValidationError::NonOrthonormalView {
                key_view: index,
                error,
            });
        }
        for (j, existing) in self.key_views.iter().enumerate() {
            if existing.rotation.distance(&rec.rotation) < DUPLICATE_VIEW_TOLERANCE {
                return Err(ValidationError::DuplicateKeyView {
                    key_view: index,
                    existing: j,
                });
            }
        }
        if rec.parts.len() != self.parts.len() {
            let missing = self
                .parts
                .get(rec.parts.len())
                .map(|p| p.part_id.clone())
                .unwrap_or_default();
            return Err(ValidationError::MissingPart {
                part_id: missing,
                key_view: index,
            });
        }
        for (topo, pv) in self.parts.iter().zip(&rec.parts) {
            check_part_view(topo, pv, index)?;
        }
        Ok(())
    }
}

fn validate_topologies(parts: &[PartTopology]) -> Result<(), ValidationError> {
    for (i, p) in parts.iter().enumerate() {
        if parts[..i].iter().any(|q| q.part_id == p.part_id) {
            return Err(ValidationError::DuplicatePartId {
                part_id: p.part_id.clone(),
            });
        }
        if p.triangles.is_empty() {
            return Err(ValidationError::EmptyTopology {
                part_id: p.part_id.clone(),
            });
        }
        for (t, tri) in p.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= p.vertex_count) {
                return Err(ValidationError::TriangleIndexOutOfRange {
                    part_id: p.part_id.clone(),
                    triangle: t,
                    vertex_count: p.vertex_count,
                });
            }
        }
    }
    Ok(())
}

fn check_part_view(topo: &PartTopology, pv: &PartView, key_view: usize) -> Result<(), ValidationError> {
    if pv.vertices.len() != topo.vertex_count {
        return Err(ValidationError::VertexCountMismatch {
            part_id: topo.part_id.clone(),
            key_view,
            expected: topo.vertex_count,
            found: pv.vertices.len(),
        });
    }
    let finite = pv.anchor.is_finite()
        && pv.vertices.iter().all(|v| v.is_finite())
        && pv.color.is_finite()
        && pv.depth_override.map_or(true, f64::is_finite);
    if !finite {
        return Err(ValidationError::NonFinite {
            field: format!("key_views[{key_view}].parts.{}", topo.part_id),
        });
    }
    if !pv.color.in_unit_range() {
        return Err(ValidationError::ColorOutOfRange {
            part_id: topo.part_id.clone(),
            key_view,
        });
    }
    for (t, tri) in topo.triangles.iter().enumerate() {
        let area = signed_area(pv.vertices[tri[0]], pv.vertices[tri[1]], pv.vertices[tri[2]]);
        if !(area > MIN_TRIANGLE_AREA) {
            return Err(ValidationError::DegenerateTriangle {
                part_id: topo.part_id.clone(),
                key_view,
                triangle: t,
                area,
            });
        }
    }
    Ok(())
}
