//! Time interpolation between solved models that share topology and key
//! views.

use thiserror::Error;

use crate::anchor::solve_model;
use crate::geometry::project;
use crate::model::{KeyViewRecord, Model25, ModelError, PartView, Rgba, SolvedPart};
use crate::{Vec2, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnimationError {
    #[error("track has no keyframes")]
    EmptyTrack,
    #[error("keyframe {index}: time {time} is not after the previous keyframe")]
    NonIncreasingTime { index: usize, time: f64 },
    #[error("keyframe {index}: {detail}")]
    TopologyMismatch { index: usize, detail: String },
    #[error("time {t} is outside the track range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("keyframe {index}: {source}")]
    Model {
        index: usize,
        #[source]
        source: ModelError,
    },
    #[error("interpolated model is invalid: {0}")]
    Interpolated(#[source] ModelError),
}

/// Solved models at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTrack {
    keyframes: Vec<(f64, Model25)>,
}

impl ModelTrack {
    /// Validates the keyframes; unsolved models are solved here.
    pub fn new(keyframes: Vec<(f64, Model25)>) -> Result<Self, AnimationError> {
        if keyframes.is_empty() {
            return Err(AnimationError::EmptyTrack);
        }
        let mut out: Vec<(f64, Model25)> = Vec::with_capacity(keyframes.len());
        for (index, (time, model)) in keyframes.into_iter().enumerate() {
            if !time.is_finite() || out.last().is_some_and(|(prev, _)| time <= *prev) {
                return Err(AnimationError::NonIncreasingTime { index, time });
            }
            let model = if model.is_solved() {
                model
            } else {
                solve_model(&model).map_err(|source| AnimationError::Model { index, source })?
            };
            if let Some((_, first)) = out.first() {
                check_compatible(first, &model)
                    .map_err(|detail| AnimationError::TopologyMismatch { index, detail })?;
            }
            out.push((time, model));
        }
        Ok(Self { keyframes: out })
    }

    pub fn keyframes(&self) -> &[(f64, Model25)] {
        &self.keyframes
    }

    pub fn start(&self) -> f64 {
        self.keyframes[0].0
    }

    pub fn end(&self) -> f64 {
        self.keyframes[self.keyframes.len() - 1].0
    }

    pub fn sample(&self, t: f64) -> Result<Model25, AnimationError> {
        sample_track(self, t)
    }
}

fn check_compatible(a: &Model25, b: &Model25) -> Result<(), String> {
    if a.parts() != b.parts() {
        return Err("part topologies differ from the first keyframe".into());
    }
    if a.key_views().len() != b.key_views().len() {
        return Err(format!(
            "{} key views, first keyframe has {}",
            b.key_views().len(),
            a.key_views().len()
        ));
    }
    for (j, (ka, kb)) in a.key_views().iter().zip(b.key_views()).enumerate() {
        if ka.rotation != kb.rotation {
            return Err(format!("key view {j} rotation differs from the first keyframe"));
        }
        for (i, (pa, pb)) in ka.parts.iter().zip(&kb.parts).enumerate() {
            if pa.depth_override.is_some() != pb.depth_override.is_some() {
                return Err(format!(
                    "key view {j}, part '{}': depth override present in only one keyframe",
                    a.parts()[i].part_id
                ));
            }
        }
    }
    if a.explicit_reference_view() != b.explicit_reference_view() {
        return Err("reference view differs from the first keyframe".into());
    }
    Ok(())
}

#[inline]
fn mix(a: f64, b: f64, s: f64) -> f64 {
    (1.0 - s) * a + s * b
}

fn mix2(a: Vec2, b: Vec2, s: f64) -> Vec2 {
    Vec2::new(mix(a.x, b.x, s), mix(a.y, b.y, s))
}

fn mix_part(a: &PartView, b: &PartView, s: f64) -> PartView {
    PartView {
        anchor: mix2(a.anchor, b.anchor, s),
        vertices: a
            .vertices
            .iter()
            .zip(&b.vertices)
            .map(|(&p, &q)| mix2(p, q, s))
            .collect(),
        color: Rgba(std::array::from_fn(|k| mix(a.color.0[k], b.color.0[k], s))),
        depth_override: a.depth_override.zip(b.depth_override).map(|(x, y)| mix(x, y, s)),
    }
}

/// Model at time `t`: every authored and solved component is interpolated
/// linearly between the bracketing keyframes, then distortions are
/// recomputed from the interpolated anchors so each key view stays exact.
pub fn sample_track(track: &ModelTrack, t: f64) -> Result<Model25, AnimationError> {
    let (start, end) = (track.start(), track.end());
    if !(t >= start && t <= end) {
        return Err(AnimationError::OutOfRange { t, start, end });
    }
    let frames = &track.keyframes;
    if let Some((_, m)) = frames.iter().find(|(time, _)| *time == t) {
        return Ok(m.clone());
    }
    let hi = frames.iter().position(|(time, _)| *time > t).expect("t < end");
    let (t0, a) = &frames[hi - 1];
    let (t1, b) = &frames[hi];
    let s = (t - t0) / (t1 - t0);

    let key_views: Vec<KeyViewRecord> = a
        .key_views()
        .iter()
        .zip(b.key_views())
        .map(|(ka, kb)| KeyViewRecord {
            euler: ka.euler,
            rotation: ka.rotation,
            matrix_authored: ka.matrix_authored,
            parts: ka
                .parts
                .iter()
                .zip(&kb.parts)
                .map(|(pa, pb)| mix_part(pa, pb, s))
                .collect(),
        })
        .collect();

    let (sa, sb) = (a.solved().expect("solved"), b.solved().expect("solved"));
    let solved: Vec<SolvedPart> = sa
        .iter()
        .zip(sb)
        .enumerate()
        .map(|(i, (pa, pb))| {
            let anchor3d = Vec3::new(
                mix(pa.anchor3d.x, pb.anchor3d.x, s),
                mix(pa.anchor3d.y, pb.anchor3d.y, s),
                mix(pa.anchor3d.z, pb.anchor3d.z, s),
            );
            let distortions = key_views
                .iter()
                .map(|kv| kv.parts[i].anchor - project(kv.rotation.apply(anchor3d)))
                .collect();
            SolvedPart {
                anchor3d,
                distortions,
            }
        })
        .collect();

    let model = Model25::new(a.parts().to_vec(), key_views)
        .and_then(|m| m.with_reference_view(a.explicit_reference_view()))
        .and_then(|m| m.with_solution(solved))
        .map_err(|e| AnimationError::Interpolated(e.into()))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    fn keyframe(shift: f64, ear: f64) -> Model25 {
        let mut front = tri_view(Vec2::new(shift, 0.0));
        front.color = Rgba::new(0.1 + shift * 0.1, 0.2, 0.3, 1.0);
        let mut right = tri_view(Vec2::new(0.5, shift));
        right.anchor = right.anchor + Vec2::new(ear, -ear);
        right.depth_override = None;
        Model25::new(
            vec![unit_triangle()],
            vec![record(0.0, 0.0, 0.0, vec![front]), record(90.0, 0.0, 0.0, vec![right])],
        )
        .unwrap()
    }

    fn track() -> ModelTrack {
        ModelTrack::new(vec![(0.0, keyframe(0.0, 0.0)), (1.0, keyframe(1.0, 0.3))]).unwrap()
    }

    #[test]
    fn keyframe_times_are_exact() {
        let tr = track();
        for (t, m) in tr.keyframes() {
            assert_eq!(&sample_track(&tr, *t).unwrap(), m);
        }
    }

    #[test]
    fn midpoint_is_arithmetic_mean_and_exact_at_key_views() {
        let tr = track();
        let m = sample_track(&tr, 0.5).unwrap();
        let (a, b) = (&tr.keyframes()[0].1, &tr.keyframes()[1].1);
        for j in 0..2 {
            let (pa, pb) = (&a.key_views()[j].parts[0], &b.key_views()[j].parts[0]);
            let pm = &m.key_views()[j].parts[0];
            assert_eq!(pm.anchor, Vec2::new((pa.anchor.x + pb.anchor.x) / 2.0, (pa.anchor.y + pb.anchor.y) / 2.0));
            for k in 0..3 {
                let mean = (pa.vertices[k] + pb.vertices[k]) * 0.5;
                assert!((pm.vertices[k] - mean).norm() < 1e-15);
            }
            let sp = &m.solved().unwrap()[0];
            let r = m.key_views()[j].rotation;
            let rebuilt = project(r.apply(sp.anchor3d)) + sp.distortions[j];
            assert!((rebuilt - pm.anchor).norm() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_and_ordering() {
        let tr = track();
        assert!(matches!(sample_track(&tr, 1.5), Err(AnimationError::OutOfRange { .. })));
        assert!(matches!(sample_track(&tr, f64::NAN), Err(AnimationError::OutOfRange { .. })));
        assert!(matches!(
            ModelTrack::new(vec![(1.0, keyframe(0.0, 0.0)), (1.0, keyframe(1.0, 0.0))]),
            Err(AnimationError::NonIncreasingTime { index: 1, .. })
        ));
        assert_eq!(ModelTrack::new(vec![]), Err(AnimationError::EmptyTrack));
    }

    #[test]
    fn topology_mismatch_rejected() {
        let other = Model25::new(
            vec![unit_triangle()],
            vec![
                record(0.0, 0.0, 0.0, vec![tri_view(Vec2::zero())]),
                record(-90.0, 0.0, 0.0, vec![tri_view(Vec2::zero())]),
            ],
        )
        .unwrap();
        assert!(matches!(
            ModelTrack::new(vec![(0.0, keyframe(0.0, 0.0)), (1.0, other)]),
            Err(AnimationError::TopologyMismatch { index: 1, .. })
        ));
    }
}
