//! JSON document formats: models, frame dumps, and animation tracks.
//!
//! Numbers are written with the shortest decimal form that parses back to
//! the same `f64`, so a save/load cycle is bit-exact.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::animation::{AnimationError, ModelTrack};
use crate::blend::BlendedFrame;
use crate::geometry::{EulerAngles, GeometryError, Matrix3, Rotation};
use crate::model::{
    KeyViewRecord, Model25, ModelError, PartTopology, PartView, Rgba, SolvedPart, ValidationError,
};
use crate::{Vec2, Vec3};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format_version: u64,
    pub parts: Vec<PartDocument>,
    pub key_views: Vec<KeyViewDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solved: Option<SolvedDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_view_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDocument {
    pub part_id: String,
    pub vertex_count: usize,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyViewDocument {
    pub euler: EulerAngles<f64>,
    /// Row-major rotation; overrides `euler` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 3]; 3]>,
    pub parts: IndexMap<String, PartViewDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartViewDocument {
    /// Defaults to the area-weighted centroid of the triangles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<[f64; 2]>,
    pub vertices: Vec<[f64; 2]>,
    pub color: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvedDocument {
    pub parts: IndexMap<String, SolvedPartDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvedPartDocument {
    pub anchor3d: [f64; 3],
    pub distortions: Vec<[f64; 2]>,
}

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn a2(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn parse<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ModelError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            ModelError::Parse(e.inner().to_string())
        } else {
            ModelError::Parse(format!("{path}: {}", e.inner()))
        }
    })?;
    Ok(value)
}

impl PartViewDocument {
    pub fn from_part_view(pv: &PartView) -> Self {
        Self {
            anchor: Some(a2(pv.anchor)),
            vertices: pv.vertices.iter().map(|&v| a2(v)).collect(),
            color: pv.color.0,
            depth_override: pv.depth_override,
        }
    }

    /// Converts without validating; [`Model25`] validates on insertion.
    pub fn to_part_view(&self, topology: &PartTopology) -> PartView {
        let vertices: Vec<Vec2> = self.vertices.iter().map(|&a| v2(a)).collect();
        let mut pv = match self.anchor {
            Some(a) => PartView {
                anchor: v2(a),
                vertices,
                color: Rgba(self.color),
                depth_override: None,
            },
            None if vertices.len() == topology.vertex_count => {
                PartView::with_default_anchor(topology, vertices, Rgba(self.color))
            }
            // wrong length; validation reports it, the anchor is irrelevant
            None => PartView {
                anchor: Vec2::zero(),
                vertices,
                color: Rgba(self.color),
                depth_override: None,
            },
        };
        pv.depth_override = self.depth_override;
        pv
    }
}

impl KeyViewDocument {
    pub fn from_record(rec: &KeyViewRecord, parts: &[PartTopology]) -> Self {
        Self {
            euler: rec.euler,
            matrix: rec.matrix_authored.then(|| rec.rotation.matrix().m),
            parts: parts
                .iter()
                .zip(&rec.parts)
                .map(|(t, pv)| (t.part_id.clone(), PartViewDocument::from_part_view(pv)))
                .collect(),
        }
    }

    /// Resolves part ids against `parts`. `index` is the position the record
    /// will take, used in error messages.
    pub fn to_record(&self, parts: &[PartTopology], index: usize) -> Result<KeyViewRecord, ValidationError> {
        let (rotation, matrix_authored) = match self.matrix {
            Some(m) => {
                let m = Matrix3::from_rows(m);
                if !m.is_finite() {
                    return Err(ValidationError::NonFinite {
                        field: format!("key_views[{index}].matrix"),
                    });
                }
                match Rotation::from_matrix(m) {
                    Ok(r) => (r, true),
                    Err(GeometryError::NotRotation { error }) => {
                        return Err(ValidationError::NonOrthonormalView { key_view: index, error })
                    }
                    Err(_) => unreachable!("from_matrix only reports NotRotation"),
                }
            }
            None => {
                if !self.euler.is_finite() {
                    return Err(ValidationError::NonFinite {
                        field: format!("key_views[{index}].euler"),
                    });
                }
                (Rotation::from_angles(self.euler), false)
            }
        };
        if let Some(unknown) = self.parts.keys().find(|id| !parts.iter().any(|p| &p.part_id == *id)) {
            return Err(ValidationError::UnknownPart {
                part_id: unknown.clone(),
                key_view: index,
            });
        }
        let mut views = Vec::with_capacity(parts.len());
        for topo in parts {
            let doc = self.parts.get(&topo.part_id).ok_or_else(|| ValidationError::MissingPart {
                part_id: topo.part_id.clone(),
                key_view: index,
            })?;
            views.push(doc.to_part_view(topo));
        }
        Ok(KeyViewRecord {
            euler: self.euler,
            rotation,
            matrix_authored,
            parts: views,
        })
    }
}

impl ModelDocument {
    pub fn from_model(m: &Model25) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            parts: m
                .parts()
                .iter()
                .map(|p| PartDocument {
                    part_id: p.part_id.clone(),
                    vertex_count: p.vertex_count,
                    triangles: p.triangles.clone(),
                })
                .collect(),
            key_views: m
                .key_views()
                .iter()
                .map(|kv| KeyViewDocument::from_record(kv, m.parts()))
                .collect(),
            solved: m.solved().map(|s| SolvedDocument {
                parts: m
                    .parts()
                    .iter()
                    .zip(s)
                    .map(|(t, sp)| {
                        (
                            t.part_id.clone(),
                            SolvedPartDocument {
                                anchor3d: [sp.anchor3d.x, sp.anchor3d.y, sp.anchor3d.z],
                                distortions: sp.distortions.iter().map(|&d| a2(d)).collect(),
                            },
                        )
                    })
                    .collect(),
            }),
            reference_view_index: m.explicit_reference_view(),
        }
    }

    pub fn to_model(&self) -> Result<Model25, ValidationError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ValidationError::UnsupportedVersion {
                found: self.format_version,
            });
        }
        let parts: Vec<PartTopology> = self
            .parts
            .iter()
            .map(|p| PartTopology {
                part_id: p.part_id.clone(),
                vertex_count: p.vertex_count,
                triangles: p.triangles.clone(),
            })
            .collect();
        let mut model = Model25::new(parts, Vec::new())?;
        for (j, kv) in self.key_views.iter().enumerate() {
            let rec = kv.to_record(model.parts(), j)?;
            model = model.add_key_view(rec).map_err(|e| match e {
                ModelError::Validation(v) => v,
                other => unreachable!("add_key_view only validates: {other}"),
            })?;
        }
        model = model.with_reference_view(self.reference_view_index)?;
        if let Some(solved) = &self.solved {
            if let Some(unknown) = solved.parts.keys().find(|id| model.part_index(id).is_none()) {
                return Err(ValidationError::InconsistentSolution {
                    detail: format!("unknown part '{unknown}'"),
                });
            }
            let mut out = Vec::with_capacity(model.parts().len());
            for topo in model.parts() {
                let sp = solved.parts.get(&topo.part_id).ok_or_else(|| ValidationError::InconsistentSolution {
                    detail: format!("part '{}' missing", topo.part_id),
                })?;
                out.push(SolvedPart {
                    anchor3d: Vec3::new(sp.anchor3d[0], sp.anchor3d[1], sp.anchor3d[2]),
                    distortions: sp.distortions.iter().map(|&d| v2(d)).collect(),
                });
            }
            model = model.with_solution(out)?;
        }
        Ok(model)
    }
}

/// Parses and validates a model document.
pub fn load_model(bytes: &[u8]) -> Result<Model25, ModelError> {
    let doc: ModelDocument = parse(bytes)?;
    Ok(doc.to_model()?)
}

pub fn save_model(m: &Model25) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&ModelDocument::from_model(m)).expect("model serializes");
    out.push(b'\n');
    out
}

pub fn parse_key_view(bytes: &[u8], model: &Model25) -> Result<KeyViewRecord, ModelError> {
    let doc: KeyViewDocument = parse(bytes)?;
    Ok(doc.to_record(model.parts(), model.key_views().len())?)
}

pub fn parse_part_view(bytes: &[u8]) -> Result<PartViewDocument, ModelError> {
    parse(bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDocument {
    pub parts: Vec<FramePartDocument>,
    pub draw_order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePartDocument {
    pub part_id: String,
    pub position: [f64; 2],
    pub depth: f64,
    pub color: [f64; 4],
    pub vertices: Vec<[f64; 2]>,
}

impl From<&BlendedFrame> for FrameDocument {
    fn from(f: &BlendedFrame) -> Self {
        Self {
            parts: f
                .parts
                .iter()
                .map(|p| FramePartDocument {
                    part_id: p.part_id.clone(),
                    position: a2(p.position),
                    depth: p.depth,
                    color: p.color.0,
                    vertices: p.vertices.iter().map(|&v| a2(v)).collect(),
                })
                .collect(),
            draw_order: f.draw_order.clone(),
        }
    }
}

pub fn frame_to_json(frame: &BlendedFrame) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&FrameDocument::from(frame)).expect("frame serializes");
    out.push(b'\n');
    out
}

pub fn frame_from_json(bytes: &[u8]) -> Result<FrameDocument, ModelError> {
    parse(bytes)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackEntry {
    time: f64,
    model: TrackModel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TrackModel {
    Path(String),
    Inline(Box<ModelDocument>),
}

#[derive(Debug, thiserror::Error)]
pub enum TrackLoadError {
    #[error("track: {0}")]
    Parse(String),
    #[error("keyframe {index}: cannot read '{path}': {source}")]
    Io {
        index: usize,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("keyframe {index}: {source}")]
    Model {
        index: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Track(#[from] AnimationError),
}

/// Loads a track: a JSON list of `{time, model}` where `model` is an inline
/// model document or a path relative to `base_dir`.
pub fn load_track(bytes: &[u8], base_dir: &Path) -> Result<ModelTrack, TrackLoadError> {
    let entries: Vec<TrackEntry> = parse(bytes).map_err(|e| match e {
        ModelError::Parse(msg) => TrackLoadError::Parse(msg),
        other => TrackLoadError::Parse(other.to_string()),
    })?;
    let mut keyframes = Vec::with_capacity(entries.len());
    for (index, e) in entries.into_iter().enumerate() {
        let model = match e.model {
            TrackModel::Inline(doc) => doc
                .to_model()
                .map_err(|v| TrackLoadError::Model { index, source: v.into() })?,
            TrackModel::Path(p) => {
                let bytes = std::fs::read(base_dir.join(&p)).map_err(|source| TrackLoadError::Io {
                    index,
                    path: p.clone(),
                    source,
                })?;
                load_model(&bytes).map_err(|source| TrackLoadError::Model { index, source })?
            }
        };
        keyframes.push((e.time, model));
    }
    Ok(ModelTrack::new(keyframes)?)
}
