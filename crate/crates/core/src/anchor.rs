//! 3D anchor triangulation from orthographic key views and per-view anchor
//! distortions.

use serde::Serialize;

use crate::geometry::{project, solve_psd3_min_norm, Matrix3, Rotation, Vector2, Vector3};
use crate::model::{Model25, ModelError, SolvedPart};
use crate::scalar::Scalar;
use crate::{Vec2, Vec3};

/// Relative eigenvalue cutoff below which a direction counts as unobserved.
const RANK_TOLERANCE: f64 = 1e-10;

/// Least-squares point whose orthographic projections best match the 2D
/// observations: `argmin_v Σ ‖v_j − Π(R_j v)‖²`.
///
/// Solved through the 3x3 normal equations. Directions no view constrains
/// (e.g. depth with a single view) get a zero component.
pub fn triangulate_anchor<T: Scalar>(observations: &[(Rotation<T>, Vector2<T>)]) -> Vector3<T> {
    let mut normal = Matrix3::zero();
    let mut rhs = Vector3::zero();
    for (rot, obs) in observations {
        let m = rot.matrix();
        for (r, value) in [(0, obs.x), (1, obs.y)] {
            let row = m.row(r);
            let row_arr = [row.x, row.y, row.z];
            for a in 0..3 {
                for b in 0..3 {
                    normal.m[a][b] = normal.m[a][b] + row_arr[a] * row_arr[b];
                }
            }
            rhs += row * value;
        }
    }
    solve_psd3_min_norm(&normal, rhs, T::lit(RANK_TOLERANCE))
}

/// `Σ ‖v_j − Π(R_j v)‖²`.
pub fn reprojection_objective<T: Scalar>(
    observations: &[(Rotation<T>, Vector2<T>)],
    point: Vector3<T>,
) -> T {
    observations.iter().fold(T::zero(), |acc, (r, obs)| {
        let d = *obs - project(r.apply(point));
        acc + d.dot(d)
    })
}

/// Per-part diagnostics from [`solve_model`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartDiagnostics {
    pub part_id: String,
    pub anchor3d: [f64; 3],
    /// Root-mean-square reprojection residual over the key views.
    pub residual: f64,
    /// `‖d_j‖` for each key view.
    pub distortion_norms: Vec<f64>,
}

/// Triangulates every part's anchor and records its distortion in each key
/// view. With a single key view the anchor sits at depth 0 in that view and
/// the distortion is zero.
pub fn solve_model(model: &Model25) -> Result<Model25, ModelError> {
    let (solved, _) = solve_with_diagnostics(model)?;
    Ok(solved)
}

pub fn solve_with_diagnostics(
    model: &Model25,
) -> Result<(Model25, Vec<PartDiagnostics>), ModelError> {
    let views = model.key_views();
    if views.is_empty() {
        return Err(ModelError::EmptyModel);
    }
    let mut solved = Vec::with_capacity(model.parts().len());
    let mut report = Vec::with_capacity(model.parts().len());
    for (i, topo) in model.parts().iter().enumerate() {
        let obs: Vec<(Rotation<f64>, Vec2)> = views
            .iter()
            .map(|kv| (kv.rotation, kv.parts[i].anchor))
            .collect();
        let anchor3d: Vec3 = triangulate_anchor(&obs);
        let distortions: Vec<Vec2> = if views.len() == 1 {
            vec![Vec2::zero()]
        } else {
            obs.iter()
                .map(|(r, a)| *a - project(r.apply(anchor3d)))
                .collect()
        };
        let objective = reprojection_objective(&obs, anchor3d);
        report.push(PartDiagnostics {
            part_id: topo.part_id.clone(),
            anchor3d: [anchor3d.x, anchor3d.y, anchor3d.z],
            residual: (objective / views.len() as f64).sqrt(),
            distortion_norms: distortions.iter().map(|d| d.norm()).collect(),
        });
        solved.push(SolvedPart {
            anchor3d,
            distortions,
        });
    }
    Ok((model.with_solution(solved)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::PartTopology;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    type R = Rotation<f64>;

    fn observe(p: Vec3, views: &[R]) -> Vec<(R, Vec2)> {
        views.iter().map(|r| (*r, project(r.apply(p)))).collect()
    }

    #[test]
    fn single_front_view_has_zero_depth() {
        let v = triangulate_anchor(&[(R::identity(), Vec2::new(3.0, 5.0))]);
        assert_eq!(v, Vec3::new(3.0, 5.0, 0.0));
    }

    #[test]
    fn front_and_right_recover_point() {
        let truth = Vec3::new(1.0, 2.0, 4.0);
        let obs = observe(truth, &[R::identity(), R::from_euler(90.0, 0.0, 0.0)]);
        assert_eq!(obs[0].1, Vec2::new(1.0, 2.0));
        let v = triangulate_anchor(&obs);
        assert!((v - truth).norm() < 1e-9);
        assert!(reprojection_objective(&obs, v) < 1e-18);
    }

    #[test]
    fn inconsistent_pair_matches_grid_search() {
        let eps = 0.3;
        let right = R::from_euler(90.0, 0.0, 0.0);
        let obs = vec![
            (R::identity(), Vec2::new(0.0, 0.0)),
            (right, Vec2::new(eps, eps)),
        ];
        let v = triangulate_anchor(&obs);

        // coarse-to-fine grid search over a cube, refined down to 1e-4
        let mut centre = Vec3::zero();
        let mut half = 2.0;
        while half > 1e-5 {
            let step = half / 10.0;
            let mut best = (f64::INFINITY, centre);
            for i in -10..=10 {
                for j in -10..=10 {
                    for k in -10..=10 {
                        let p = centre + Vec3::new(i as f64, j as f64, k as f64) * step;
                        // minimum-norm tie break among equal objectives
                        let f = reprojection_objective(&obs, p) + 1e-12 * p.dot(p);
                        if f < best.0 {
                            best = (f, p);
                        }
                    }
                }
            }
            centre = best.1;
            half = step * 2.0;
        }
        assert!((v - centre).norm() < 1e-4, "{v:?} vs {centre:?}");
        // right view images (z, y): depth is exact, y splits the difference
        assert!((v - Vec3::new(0.0, eps / 2.0, eps)).norm() < 1e-12);
    }

    #[test]
    fn shared_axis_views_use_minimum_norm() {
        // all views rotate about Z: depth is never observed
        let truth = Vec3::new(0.5, -1.0, 7.0);
        let obs = observe(truth, &[R::identity(), R::about_z(90.0), R::about_z(200.0)]);
        let v = triangulate_anchor(&obs);
        assert!((v - Vec3::new(0.5, -1.0, 0.0)).norm() < 1e-12);
    }

    fn model_with(anchors: &[(f64, Vec2)]) -> Model25 {
        let views = anchors
            .iter()
            .map(|&(yaw, a)| {
                let mut pv = tri_view(a - Vec2::new(1.0 / 3.0, 1.0 / 3.0));
                pv.anchor = a;
                record(yaw, 0.0, 0.0, vec![pv])
            })
            .collect();
        Model25::new(vec![unit_triangle()], views).unwrap()
    }

    #[test]
    fn single_view_model() {
        let m = model_with(&[(0.0, Vec2::new(2.0, -1.0))]);
        let s = solve_model(&m).unwrap();
        let sp = &s.solved().unwrap()[0];
        assert_eq!(sp.anchor3d, Vec3::new(2.0, -1.0, 0.0));
        assert_eq!(sp.distortions, vec![Vec2::zero()]);
    }

    #[test]
    fn single_rotated_view_keeps_reproduction() {
        let m = model_with(&[(40.0, Vec2::new(2.0, -1.0))]);
        let s = solve_model(&m).unwrap();
        let sp = &s.solved().unwrap()[0];
        let r = s.key_views()[0].rotation;
        assert!((r.apply(sp.anchor3d).z).abs() < 1e-12);
        assert!((project(r.apply(sp.anchor3d)) - Vec2::new(2.0, -1.0)).norm() < 1e-12);
    }

    /// Mickey-ear style: the right view's anchor is pushed off the
    /// consistent projection. Oracle re-solves with a generic SVD least
    /// squares and evaluates the distortions independently.
    #[test]
    fn distorted_ear_matches_generic_least_squares() {
        let truth = Vec3::new(0.8, 1.5, 0.3);
        let yaws = [0.0, 90.0, -45.0];
        let mut anchors: Vec<(f64, Vec2)> = yaws
            .iter()
            .map(|&y| (y, project(R::from_euler(y, 0.0, 0.0).apply(truth))))
            .collect();
        let shift = Vec2::new(-0.3, -0.2);
        anchors[1].1 = anchors[1].1 + shift;
        let solved = solve_model(&model_with(&anchors)).unwrap();
        let sp = &solved.solved().unwrap()[0];

        let mut a = DMatrix::<f64>::zeros(2 * yaws.len(), 3);
        let mut b = DVector::<f64>::zeros(2 * yaws.len());
        for (j, (y, obs)) in anchors.iter().enumerate() {
            let m = R::from_euler(*y, 0.0, 0.0);
            for r in 0..2 {
                for c in 0..3 {
                    a[(2 * j + r, c)] = m.matrix().m[r][c];
                }
            }
            b[2 * j] = obs.x;
            b[2 * j + 1] = obs.y;
        }
        let x = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        let oracle = Vec3::new(x[0], x[1], x[2]);
        assert!((sp.anchor3d - oracle).norm() < 1e-12);
        let resid = &a * &x - &b;
        for j in 0..yaws.len() {
            let d = Vec2::new(-resid[2 * j], -resid[2 * j + 1]);
            assert!((sp.distortions[j] - d).norm() < 1e-12);
        }
        // the deliberate shift is split between views, not fully absorbed
        assert!(sp.distortions[1].norm() > 0.0 && sp.distortions[1].norm() < shift.norm());
    }

    #[test]
    fn consistent_model_has_no_distortion() {
        let truth = Vec3::new(-0.4, 0.9, 1.7);
        let anchors: Vec<(f64, Vec2)> = [0.0, 60.0, 135.0]
            .iter()
            .map(|&y| (y, project(R::from_euler(y, 0.0, 0.0).apply(truth))))
            .collect();
        let (solved, report) = solve_with_diagnostics(&model_with(&anchors)).unwrap();
        for d in &solved.solved().unwrap()[0].distortions {
            assert!(d.norm() < 1e-9);
        }
        assert!(report[0].residual < 1e-9);
    }

    #[test]
    fn empty_model_errors() {
        let m = Model25::new(
            vec![PartTopology {
                part_id: "a".into(),
                vertex_count: 3,
                triangles: vec![[0, 1, 2]],
            }],
            vec![],
        )
        .unwrap();
        assert_eq!(solve_model(&m), Err(ModelError::EmptyModel));
    }

    fn angles() -> impl Strategy<Value = (f64, f64, f64)> {
        (-180.0..180.0f64, -85.0..85.0f64, -180.0..180.0f64)
    }

    proptest! {
        #[test]
        fn reproduction_identity_and_local_optimality(
            views in prop::collection::vec(angles(), 2..5),
            obs in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 5),
        ) {
            let rots: Vec<R> = views.iter().map(|&(y, p, r)| R::from_euler(y, p, r)).collect();
            for i in 0..rots.len() {
                for j in 0..i {
                    prop_assume!(rots[i].distance(&rots[j]) > 1e-3);
                }
            }
            let data: Vec<(R, Vec2)> = rots.iter().zip(&obs).map(|(r, &(x, y))| (*r, Vec2::new(x, y))).collect();
            let v = triangulate_anchor(&data);
            let f0 = reprojection_objective(&data, v);
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    let mut d = Vec3::zero();
                    match axis { 0 => d.x = sign * 1e-3, 1 => d.y = sign * 1e-3, _ => d.z = sign * 1e-3 }
                    prop_assert!(reprojection_objective(&data, v + d) >= f0 - 1e-15);
                }
            }
            for (r, a) in &data {
                let d = *a - project(r.apply(v));
                let back = project(r.apply(v)) + d;
                prop_assert!((back - *a).norm() < 1e-12);
            }
        }

        #[test]
        fn consistent_observations_recover_point(
            views in prop::collection::vec(angles(), 2..5),
            p in (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64),
        ) {
            let rots: Vec<R> = views.iter().map(|&(y, pi, r)| R::from_euler(y, pi, r)).collect();
            // needs two view directions far enough apart to fix depth
            let c0 = rots[0].camera_position();
            prop_assume!(rots.iter().any(|r| r.camera_position().cross(c0).norm() > 0.1));
            let truth = Vec3::new(p.0, p.1, p.2);
            let v = triangulate_anchor(&observe(truth, &rots));
            prop_assert!((v - truth).norm() < 1e-9);
        }
    }
}
