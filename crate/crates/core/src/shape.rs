//! As-rigid-as-possible N-way shape interpolation of triangulated parts.
//!
//! Every triangle of a part gets one affine map per key view, taking the
//! reference-view triangle onto the key-view triangle. Maps are split into a
//! rotation angle and a log-stretch, blended linearly with the view weights,
//! recombined, and finally stitched into one consistent vertex set by a
//! least-squares solve whose normal matrix is prefactored per part.

use thiserror::Error;

use crate::geometry::{polar_decompose_2x2, sym_exp, sym_log, GeometryError, Matrix2, Vector2};
use crate::linalg::{EnvelopeCholesky, SymmetricBuilder};
use crate::model::{Model25, MIN_TRIANGLE_AREA};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("reference triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("triangle {triangle} is mirrored or collapsed in key view {key_view}")]
    Reflection { triangle: usize, key_view: usize },
    #[error("shape system is singular: {reason}")]
    SingularSystem { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ShapeOptions {
    /// Weight every triangle equally in the assembly instead of by
    /// reference area.
    pub unweighted_assembly: bool,
}

#[inline]
pub fn signed_area<T: Scalar>(a: Vector2<T>, b: Vector2<T>, c: Vector2<T>) -> T {
    (b - a).cross(c - a) * T::half()
}

/// Area-weighted centroid of the triangles. Falls back to the vertex mean
/// when the total signed area vanishes.
pub fn area_centroid<T: Scalar>(vertices: &[Vector2<T>], triangles: &[[usize; 3]]) -> Vector2<T> {
    let mut total = T::zero();
    let mut acc = Vector2::zero();
    for t in triangles {
        let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        let area = signed_area(a, b, c);
        total = total + area;
        acc += (a + b + c) * (area / T::lit(3.0));
    }
    if total.abs() > T::min_positive_value() {
        acc * (T::one() / total)
    } else if vertices.is_empty() {
        Vector2::zero()
    } else {
        let n = T::from_usize(vertices.len()).unwrap();
        vertices.iter().fold(Vector2::zero(), |s, &v| s + v) * (T::one() / n)
    }
}

/// The affine map of one triangle from the reference view into one key view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleTransform<T> {
    pub triangle: usize,
    pub affine: Matrix2<T>,
    /// Rotation angle in (-π, π].
    pub angle: T,
    pub log_stretch: Matrix2<T>,
}

impl<T: Scalar> TriangleTransform<T> {
    /// `R(angle) · exp(log_stretch)`.
    pub fn rebuild(&self) -> Matrix2<T> {
        Matrix2::rotation(self.angle) * sym_exp(&self.log_stretch)
    }
}

fn edge_matrix<T: Scalar>(v: &[Vector2<T>], tri: &[usize; 3]) -> Matrix2<T> {
    Matrix2::from_columns(v[tri[1]] - v[tri[0]], v[tri[2]] - v[tri[0]])
}

/// Per-triangle maps from `reference` onto `key`.
///
/// `key_view` only labels errors.
pub fn extract_transforms<T: Scalar>(
    triangles: &[[usize; 3]],
    reference: &[Vector2<T>],
    key: &[Vector2<T>],
    key_view: usize,
) -> Result<Vec<TriangleTransform<T>>, ShapeError> {
    triangles
        .iter()
        .enumerate()
        .map(|(f, tri)| {
            let e_ref = edge_matrix(reference, tri);
            let area = e_ref.det() * T::half();
            if !(area > T::lit(MIN_TRIANGLE_AREA)) {
                return Err(ShapeError::DegenerateTriangle {
                    triangle: f,
                    area: area.to_f64_lossy(),
                });
            }
            let affine = edge_matrix(key, tri) * e_ref.inverse().expect("nonzero area");
            let polar = polar_decompose_2x2(&affine).map_err(|_| ShapeError::Reflection {
                triangle: f,
                key_view,
            })?;
            let log_stretch = sym_log(&polar.stretch).map_err(|e| match e {
                GeometryError::NotPositiveDefinite { .. } => ShapeError::Reflection {
                    triangle: f,
                    key_view,
                },
                _ => unreachable!(),
            })?;
            Ok(TriangleTransform {
                triangle: f,
                affine,
                angle: polar.angle,
                log_stretch,
            })
        })
        .collect()
}

/// Blends one triangle's key-view maps: `R(Σ wⱼθⱼ) · exp(Σ wⱼ log Sⱼ)`.
///
/// `per_view[j]` is the map for key view `j`.
pub fn blend_local<T: Scalar>(per_view: &[TriangleTransform<T>], weights: &[T]) -> Matrix2<T> {
    debug_assert_eq!(per_view.len(), weights.len());
    let mut angle = T::zero();
    let mut log = Matrix2::zero();
    for (t, &w) in per_view.iter().zip(weights) {
        if w == T::zero() {
            continue;
        }
        angle = angle + w * t.angle;
        log = log + t.log_stretch.scale(w);
    }
    Matrix2::rotation(angle) * sym_exp(&log)
}

/// Prefactored least-squares assembly for one part.
///
/// Minimizes `Σ_f c_f ‖B_f(P) − A_f‖²_F` where `B_f(P)` is the affine map
/// the unknown vertices `P` induce on triangle `f` relative to the reference
/// shape and `c_f` is the reference area (or 1).
#[derive(Debug, Clone)]
pub struct ShapeSolver<T> {
    triangles: Vec<[usize; 3]>,
    vertex_count: usize,
    /// Per triangle: rows of `D·E⁻¹`, mapping vertex coordinates to `B_f`.
    gradients: Vec<[Vector2<T>; 3]>,
    coefficients: Vec<T>,
    factor: EnvelopeCholesky<T>,
}

const PINNED: usize = 0;

impl<T: Scalar> ShapeSolver<T> {
    pub fn new(
        triangles: &[[usize; 3]],
        reference: &[Vector2<T>],
        options: ShapeOptions,
    ) -> Result<Self, ShapeError> {
        let n = reference.len();
        check_connected(triangles, n)?;

        let mut gradients = Vec::with_capacity(triangles.len());
        let mut coefficients = Vec::with_capacity(triangles.len());
        for (f, tri) in triangles.iter().enumerate() {
            let e = edge_matrix(reference, tri);
            let area = e.det() * T::half();
            if !(area > T::lit(MIN_TRIANGLE_AREA)) {
                return Err(ShapeError::DegenerateTriangle {
                    triangle: f,
                    area: area.to_f64_lossy(),
                });
            }
            let inv = e.inverse().expect("nonzero area");
            let (r0, r1) = (inv.row(0), inv.row(1));
            gradients.push([-(r0 + r1), r0, r1]);
            coefficients.push(if options.unweighted_assembly {
                T::one()
            } else {
                area
            });
        }

        let mut builder = SymmetricBuilder::new(n - 1);
        for ((tri, g), &c) in triangles.iter().zip(&gradients).zip(&coefficients) {
            for a in 0..3 {
                if tri[a] == PINNED {
                    continue;
                }
                for b in a..3 {
                    if tri[b] == PINNED {
                        continue;
                    }
                    builder.add(tri[a] - 1, tri[b] - 1, c * g[a].dot(g[b]));
                }
            }
        }
        let factor = builder.factor().map_err(|e| ShapeError::SingularSystem {
            reason: e.to_string(),
        })?;

        Ok(Self {
            triangles: triangles.to_vec(),
            vertex_count: n,
            gradients,
            coefficients,
            factor,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Solves for the vertex positions best matching `targets` (one map per
    /// triangle), translated so the area-weighted centroid lands on `anchor`.
    pub fn assemble(&self, targets: &[Matrix2<T>], anchor: Vector2<T>) -> Vec<Vector2<T>> {
        assert_eq!(targets.len(), self.triangles.len());
        let m = self.vertex_count - 1;
        let mut rhs_x = vec![T::zero(); m];
        let mut rhs_y = vec![T::zero(); m];
        for (((tri, g), &c), a) in self
            .triangles
            .iter()
            .zip(&self.gradients)
            .zip(&self.coefficients)
            .zip(targets)
        {
            let (ax, ay) = (a.row(0), a.row(1));
            for k in 0..3 {
                if tri[k] == PINNED {
                    continue;
                }
                let i = tri[k] - 1;
                rhs_x[i] = rhs_x[i] + c * g[k].dot(ax);
                rhs_y[i] = rhs_y[i] + c * g[k].dot(ay);
            }
        }
        let xs = self.factor.solve(&rhs_x);
        let ys = self.factor.solve(&rhs_y);
        let mut p = Vec::with_capacity(self.vertex_count);
        p.push(Vector2::zero());
        p.extend(xs.into_iter().zip(ys).map(|(x, y)| Vector2::new(x, y)));
        let shift = anchor - area_centroid(&p, &self.triangles);
        for v in p.iter_mut() {
            *v += shift;
        }
        p
    }

    /// The affine map `vertices` induce on triangle `f`.
    pub fn induced_map(&self, vertices: &[Vector2<T>], f: usize) -> Matrix2<T> {
        let tri = &self.triangles[f];
        let g = &self.gradients[f];
        let row = |r: usize| -> Vector2<T> {
            let c = |v: Vector2<T>| if r == 0 { v.x } else { v.y };
            Vector2::new(
                c(vertices[tri[0]]) * g[0].x + c(vertices[tri[1]]) * g[1].x + c(vertices[tri[2]]) * g[2].x,
                c(vertices[tri[0]]) * g[0].y + c(vertices[tri[1]]) * g[1].y + c(vertices[tri[2]]) * g[2].y,
            )
        };
        let (rx, ry) = (row(0), row(1));
        Matrix2::new(rx.x, rx.y, ry.x, ry.y)
    }

    /// The assembly objective at `vertices`.
    pub fn objective(&self, vertices: &[Vector2<T>], targets: &[Matrix2<T>]) -> T {
        (0..self.triangles.len()).fold(T::zero(), |acc, f| {
            let d = (self.induced_map(vertices, f) - targets[f]).frobenius_norm();
            acc + self.coefficients[f] * d * d
        })
    }
}

fn check_connected(triangles: &[[usize; 3]], n: usize) -> Result<(), ShapeError> {
    if n < 3 {
        return Err(ShapeError::SingularSystem {
            reason: format!("{n} vertices"),
        });
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut used = vec![false; n];
    for tri in triangles {
        for &v in tri {
            used[v] = true;
        }
        for k in 1..3 {
            let (a, b) = (root(&mut parent, tri[0]), root(&mut parent, tri[k]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    if let Some(v) = used.iter().position(|u| !u) {
        return Err(ShapeError::SingularSystem {
            reason: format!("vertex {v} belongs to no triangle"),
        });
    }
    let r0 = root(&mut parent, 0);
    if (1..n).any(|v| root(&mut parent, v) != r0) {
        return Err(ShapeError::SingularSystem {
            reason: "triangles form more than one connected piece".into(),
        });
    }
    Ok(())
}

/// Solves the assembly for one set of blended maps. Builds and factors the
/// system on every call; use [`ShapeSolver`] to reuse the factorization.
pub fn assemble_shape<T: Scalar>(
    triangles: &[[usize; 3]],
    reference: &[Vector2<T>],
    targets: &[Matrix2<T>],
    anchor: Vector2<T>,
    options: ShapeOptions,
) -> Result<Vec<Vector2<T>>, ShapeError> {
    Ok(ShapeSolver::new(triangles, reference, options)?.assemble(targets, anchor))
}

/// Everything needed to interpolate one part's shape at any weight vector.
#[derive(Debug, Clone)]
pub struct PartShape<T> {
    solver: ShapeSolver<T>,
    /// `transforms[f][j]`: triangle `f` in key view `j`.
    transforms: Vec<Vec<TriangleTransform<T>>>,
    key_views: usize,
}

impl<T: Scalar> PartShape<T> {
    /// `key_shapes[j]` is the part's vertex list in key view `j`.
    pub fn new(
        triangles: &[[usize; 3]],
        key_shapes: &[Vec<Vector2<T>>],
        reference_view: usize,
        options: ShapeOptions,
    ) -> Result<Self, ShapeError> {
        let reference = &key_shapes[reference_view];
        let solver = ShapeSolver::new(triangles, reference, options)?;
        let mut transforms = vec![Vec::with_capacity(key_shapes.len()); triangles.len()];
        for (j, shape) in key_shapes.iter().enumerate() {
            for t in extract_transforms(triangles, reference, shape, j)? {
                transforms[t.triangle].push(t);
            }
        }
        Ok(Self {
            solver,
            transforms,
            key_views: key_shapes.len(),
        })
    }

    pub fn solver(&self) -> &ShapeSolver<T> {
        &self.solver
    }

    /// Maps of triangle `f` in every key view.
    pub fn triangle_transforms(&self, f: usize) -> &[TriangleTransform<T>] {
        &self.transforms[f]
    }

    pub fn blended_maps(&self, weights: &[T]) -> Vec<Matrix2<T>> {
        assert_eq!(weights.len(), self.key_views, "one weight per key view");
        self.transforms
            .iter()
            .map(|per_view| blend_local(per_view, weights))
            .collect()
    }

    pub fn interpolate(&self, weights: &[T], anchor: Vector2<T>) -> Vec<Vector2<T>> {
        self.solver.assemble(&self.blended_maps(weights), anchor)
    }
}

/// Per-model shape cache: one [`PartShape`] per part plus, per key view, the
/// offset of each authored shape's centroid from its authored anchor.
#[derive(Debug, Clone)]
pub struct ArapCache {
    parts: Vec<PartShape<f64>>,
    centroid_offsets: Vec<Vec<Vector2<f64>>>,
    options: ShapeOptions,
    reference_view: usize,
    key_views: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("part '{part_id}': {source}")]
pub struct PartShapeError {
    pub part_id: String,
    #[source]
    pub source: ShapeError,
}

impl ArapCache {
    pub fn build(model: &Model25, options: ShapeOptions) -> Result<Self, PartShapeError> {
        let reference_view = model.reference_view().unwrap_or(0);
        let key_views = model.key_views().len();
        let mut parts = Vec::with_capacity(model.parts().len());
        let mut centroid_offsets = Vec::with_capacity(model.parts().len());
        for (i, topo) in model.parts().iter().enumerate() {
            let shapes: Vec<Vec<Vector2<f64>>> = model
                .key_views()
                .iter()
                .map(|kv| kv.parts[i].vertices.clone())
                .collect();
            let part = PartShape::new(&topo.triangles, &shapes, reference_view, options)
                .map_err(|source| PartShapeError {
                    part_id: topo.part_id.clone(),
                    source,
                })?;
            parts.push(part);
            centroid_offsets.push(
                model
                    .key_views()
                    .iter()
                    .map(|kv| {
                        let pv = &kv.parts[i];
                        area_centroid(&pv.vertices, &topo.triangles) - pv.anchor
                    })
                    .collect(),
            );
        }
        Ok(Self {
            parts,
            centroid_offsets,
            options,
            reference_view,
            key_views,
        })
    }

    pub fn part(&self, i: usize) -> &PartShape<f64> {
        &self.parts[i]
    }

    pub fn options(&self) -> ShapeOptions {
        self.options
    }

    pub fn reference_view(&self) -> usize {
        self.reference_view
    }

    pub fn key_view_count(&self) -> usize {
        self.key_views
    }

    /// Blended offset of the shape centroid from the anchor.
    pub fn centroid_offset(&self, part: usize, weights: &[f64]) -> Vector2<f64> {
        self.centroid_offsets[part]
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w != 0.0)
            .fold(Vector2::zero(), |acc, (&o, &w)| acc + o * w)
    }
}

/// Interpolates part `part` at `weights`, centring the area-weighted
/// centroid on `target`.
pub fn interpolate_shape(
    cache: &ArapCache,
    part: usize,
    weights: &[f64],
    target: Vector2<f64>,
) -> Vec<Vector2<f64>> {
    cache.parts[part].interpolate(weights, target)
}
