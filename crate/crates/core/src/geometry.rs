//! Small fixed-size linear algebra: vectors, matrices, view rotations and the
//! 2x2 decompositions used by shape blending.
//!
//! Everything here is a plain `Copy` value; all operations are pure.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Tolerance used for orthonormality and determinant checks on view rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Smallest eigenvalue accepted by [`sym_log`].
pub const MIN_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("affine map reverses orientation or is degenerate (det = {det})")]
    Reflection { det: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("matrix is not a proper rotation (orthonormality error {error})")]
    NotRotation { error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector2<T> {
    pub x: T,
    pub y: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vector2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Embeds into the z = 0 plane.
    #[inline]
    pub fn lift(self) -> Vector3<T> {
        Vector3::new(self.x, self.y, T::zero())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Self, s: T) -> Self {
        self + (o - self) * s
    }
}

impl<T: Scalar> Vector3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Self, s: T) -> Self {
        self + (o - self) * s
    }
}

/// Orthographic projection onto the image plane: drops z.
#[inline]
pub fn project<T: Scalar>(p: Vector3<T>) -> Vector2<T> {
    Vector2::new(p.x, p.y)
}

macro_rules! impl_vec_ops {
    ($v:ident { $($f:ident),+ }) => {
        impl<T: Scalar> Add for $v<T> {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self { $v { $($f: self.$f + o.$f),+ } }
        }
        impl<T: Scalar> AddAssign for $v<T> {
            #[inline]
            fn add_assign(&mut self, o: Self) { $(self.$f = self.$f + o.$f;)+ }
        }
        impl<T: Scalar> Sub for $v<T> {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self { $v { $($f: self.$f - o.$f),+ } }
        }
        impl<T: Scalar> Neg for $v<T> {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self { $v { $($f: -self.$f),+ } }
        }
        impl<T: Scalar> Mul<T> for $v<T> {
            type Output = Self;
            #[inline]
            fn mul(self, s: T) -> Self { $v { $($f: self.$f * s),+ } }
        }
    };
}

impl_vec_ops!(Vector2 { x, y });
impl_vec_ops!(Vector3 { x, y, z });

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Matrix2<T> {
    pub m: [[T; 2]; 2],
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Matrix3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Scalar> Matrix2<T> {
    #[inline]
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    pub fn zero() -> Self {
        Self::diag(T::zero(), T::zero())
    }

    pub fn diag(a: T, d: T) -> Self {
        Self::new(a, T::zero(), T::zero(), d)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotation(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// Matrix whose columns are `c0` and `c1`.
    pub fn from_columns(c0: Vector2<T>, c1: Vector2<T>) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    #[inline]
    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    /// Inverse, or `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() {
            return None;
        }
        let inv = T::one() / det;
        Some(Self::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.m[0][0]), f(self.m[0][1]), f(self.m[1][0]), f(self.m[1][1]))
    }

    pub fn row(&self, r: usize) -> Vector2<T> {
        Vector2::new(self.m[r][0], self.m[r][1])
    }

    pub fn frobenius_norm(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        (*self - *o)
            .m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

impl<T: Scalar> Add for Matrix2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Scalar> Sub for Matrix2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-T::one())
    }
}

impl<T: Scalar> Mul for Matrix2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Scalar> Mul<Vector2<T>> for Matrix2<T> {
    type Output = Vector2<T>;
    fn mul(self, v: Vector2<T>) -> Vector2<T> {
        Vector2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }
}

impl<T: Scalar> Matrix3<T> {
    pub fn from_rows(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::from_rows([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn zero() -> Self {
        Self::from_rows([[T::zero(); 3]; 3])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                t.m[c][r] = self.m[r][c];
            }
        }
        t
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn row(&self, r: usize) -> Vector3<T> {
        Vector3::new(self.m[r][0], self.m[r][1], self.m[r][2])
    }

    pub fn column(&self, c: usize) -> Vector3<T> {
        Vector3::new(self.m[0][c], self.m[1][c], self.m[2][c])
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest absolute entry of `self * selfᵀ - I`.
    pub fn orthonormality_error(&self) -> T {
        let p = *self * self.transpose();
        let id = Self::identity();
        let mut err = T::zero();
        for r in 0..3 {
            for c in 0..3 {
                err = err.max((p.m[r][c] - id.m[r][c]).abs());
            }
        }
        err
    }
}

impl<T: Scalar> Add for Matrix3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = self.m[r][c] + o.m[r][c];
            }
        }
        out
    }
}

impl<T: Scalar> Mul for Matrix3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = self.m[r][0] * o.m[0][c]
                    + self.m[r][1] * o.m[1][c]
                    + self.m[r][2] * o.m[2][c];
            }
        }
        out
    }
}

impl<T: Scalar> Mul<Vector3<T>> for Matrix3<T> {
    type Output = Vector3<T>;
    fn mul(self, v: Vector3<T>) -> Vector3<T> {
        Vector3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

/// `sqrt(Σ (Aᵢⱼ − Bᵢⱼ)²)`.
pub fn frobenius_distance<T: Scalar>(a: &Matrix3<T>, b: &Matrix3<T>) -> T {
    let mut acc = T::zero();
    for r in 0..3 {
        for c in 0..3 {
            let d = a.m[r][c] - b.m[r][c];
            acc = acc + d * d;
        }
    }
    acc.sqrt()
}

/// Yaw/pitch/roll triple in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
}

impl<T: Scalar> EulerAngles<T> {
    pub fn new(yaw: T, pitch: T, roll: T) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn is_finite(&self) -> bool {
        self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()
    }
}

/// A proper rotation of the world into camera space.
///
/// World points are multiplied by the rotation and then projected by
/// dropping z; after rotation +z points toward the viewer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T> {
    m: Matrix3<T>,
}

fn rot_x<T: Scalar>(a: T) -> Matrix3<T> {
    let (s, c) = a.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Matrix3::from_rows([[o, z, z], [z, c, -s], [z, s, c]])
}

fn rot_y<T: Scalar>(a: T) -> Matrix3<T> {
    let (s, c) = a.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Matrix3::from_rows([[c, z, s], [z, o, z], [-s, z, c]])
}

fn rot_z<T: Scalar>(a: T) -> Matrix3<T> {
    let (s, c) = a.sin_cos();
    let (o, z) = (T::one(), T::zero());
    Matrix3::from_rows([[c, -s, z], [s, c, z], [z, z, o]])
}

impl<T: Scalar> Rotation<T> {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// `Rz(roll) · Rx(pitch) · Ry(yaw)`, angles in degrees.
    ///
    /// Yaw 90° turns the model so its +X axis points away from the viewer
    /// (the "right" view).
    pub fn from_euler(yaw: T, pitch: T, roll: T) -> Self {
        let m = rot_z(roll.to_radians()) * rot_x(pitch.to_radians()) * rot_y(yaw.to_radians());
        Self { m }
    }

    pub fn from_angles(e: EulerAngles<T>) -> Self {
        Self::from_euler(e.yaw, e.pitch, e.roll)
    }

    pub fn about_x(deg: T) -> Self {
        Self {
            m: rot_x(deg.to_radians()),
        }
    }

    pub fn about_y(deg: T) -> Self {
        Self {
            m: rot_y(deg.to_radians()),
        }
    }

    pub fn about_z(deg: T) -> Self {
        Self {
            m: rot_z(deg.to_radians()),
        }
    }

    /// Validates orthonormality and `det = +1` within [`ROTATION_TOLERANCE`].
    pub fn from_matrix(m: Matrix3<T>) -> Result<Self, GeometryError> {
        let tol = T::lit(ROTATION_TOLERANCE);
        if !m.is_finite() {
            return Err(GeometryError::NotRotation { error: f64::NAN });
        }
        let err = m.orthonormality_error().max((m.det() - T::one()).abs());
        if err > tol {
            return Err(GeometryError::NotRotation {
                error: err.to_f64_lossy(),
            });
        }
        Ok(Self { m })
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<T> {
        &self.m
    }

    pub fn inverse(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn then(&self, next: &Self) -> Self {
        Self { m: next.m * self.m }
    }

    #[inline]
    pub fn apply(&self, v: Vector3<T>) -> Vector3<T> {
        self.m * v
    }

    /// Camera position on the unit sphere in world space, `R⁻¹·(0,0,1)`.
    pub fn camera_position(&self) -> Vector3<T> {
        self.m.row(2)
    }

    pub fn distance(&self, o: &Self) -> T {
        frobenius_distance(&self.m, &o.m)
    }

    /// Recovers the yaw/pitch/roll triple (degrees) of [`Rotation::from_euler`].
    ///
    /// Pitch lies in [-90°, 90°]. At gimbal lock roll is reported as 0.
    pub fn to_euler(&self) -> EulerAngles<T> {
        let m = &self.m.m;
        let sp = m[2][1].max(-T::one()).min(T::one());
        let pitch = sp.asin();
        let cp = (m[2][0] * m[2][0] + m[2][2] * m[2][2]).sqrt();
        let (yaw, roll) = if cp > T::lit(1e-12) {
            (
                (-m[2][0]).atan2(m[2][2]),
                (-m[0][1]).atan2(m[1][1]),
            )
        } else {
            (m[0][2].atan2(m[0][0]), T::zero())
        };
        EulerAngles::new(yaw.to_degrees(), pitch.to_degrees(), roll.to_degrees())
    }
}

/// Result of [`polar_decompose_2x2`]: `A = rotation · stretch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar2<T> {
    /// Rotation angle in radians, in (-π, π].
    pub angle: T,
    pub rotation: Matrix2<T>,
    /// Symmetric positive-definite factor.
    pub stretch: Matrix2<T>,
}

/// Closed-form polar decomposition of a 2x2 matrix with positive determinant.
pub fn polar_decompose_2x2<T: Scalar>(a: &Matrix2<T>) -> Result<Polar2<T>, GeometryError> {
    let det = a.det();
    if !(det > T::zero()) {
        return Err(GeometryError::Reflection {
            det: det.to_f64_lossy(),
        });
    }
    // A + cof(A) is a positive multiple of the rotation factor.
    let angle = (a.m[1][0] - a.m[0][1]).atan2(a.m[0][0] + a.m[1][1]);
    let angle = if angle == -T::PI() { T::PI() } else { angle };
    let rotation = Matrix2::rotation(angle);
    let s = rotation.transpose() * *a;
    let off = (s.m[0][1] + s.m[1][0]) * T::half();
    let stretch = Matrix2::new(s.m[0][0], off, off, s.m[1][1]);
    Ok(Polar2 {
        angle,
        rotation,
        stretch,
    })
}

fn sym_parts<T: Scalar>(s: &Matrix2<T>) -> (T, T) {
    let mean = (s.m[0][0] + s.m[1][1]) * T::half();
    let half_diff = (s.m[0][0] - s.m[1][1]) * T::half();
    let off = (s.m[0][1] + s.m[1][0]) * T::half();
    (mean, half_diff.hypot(off))
}

/// Matrix logarithm of a symmetric positive-definite 2x2 matrix.
pub fn sym_log<T: Scalar>(s: &Matrix2<T>) -> Result<Matrix2<T>, GeometryError> {
    let (mean, radius) = sym_parts(s);
    let min_eig = mean - radius;
    if !(min_eig > T::lit(MIN_EIGENVALUE)) {
        return Err(GeometryError::NotPositiveDefinite {
            min_eigenvalue: min_eig.to_f64_lossy(),
        });
    }
    // f(S) = mean(f(λ)) I + [f(λ₁) − f(λ₂)]/(λ₁ − λ₂) (S − mean I)
    let avg = ((mean + radius).ln() + min_eig.ln()) * T::half();
    let slope = if radius == T::zero() {
        T::one() / mean
    } else {
        (radius / mean).atanh() / radius
    };
    Ok(spectral_apply(s, mean, avg, slope))
}

/// Matrix exponential of a symmetric 2x2 matrix.
pub fn sym_exp<T: Scalar>(s: &Matrix2<T>) -> Matrix2<T> {
    let (mean, radius) = sym_parts(s);
    let scale = mean.exp();
    let avg = scale * radius.cosh();
    let slope = if radius == T::zero() {
        scale
    } else {
        scale * radius.sinh() / radius
    };
    spectral_apply(s, mean, avg, slope)
}

fn spectral_apply<T: Scalar>(s: &Matrix2<T>, mean: T, avg: T, slope: T) -> Matrix2<T> {
    let off = (s.m[0][1] + s.m[1][0]) * T::half() * slope;
    Matrix2::new(
        avg + (s.m[0][0] - mean) * slope,
        off,
        off,
        avg + (s.m[1][1] - mean) * slope,
    )
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues and the matching unit eigenvectors (as columns).
pub fn symmetric_eigen3<T: Scalar>(a: &Matrix3<T>) -> ([T; 3], Matrix3<T>) {
    let mut d = a.m;
    let mut v = Matrix3::<T>::identity().m;
    for _sweep in 0..64 {
        let off = d[0][1].abs() + d[0][2].abs() + d[1][2].abs();
        let diag = d[0][0].abs() + d[1][1].abs() + d[2][2].abs();
        if off <= T::epsilon() * T::lit(1e-3) * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if d[p][q] == T::zero() {
                continue;
            }
            let theta = (d[q][q] - d[p][p]) / (T::two() * d[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let dkp = d[k][p];
                let dkq = d[k][q];
                d[k][p] = c * dkp - s * dkq;
                d[k][q] = s * dkp + c * dkq;
            }
            for k in 0..3 {
                let dpk = d[p][k];
                let dqk = d[q][k];
                d[p][k] = c * dpk - s * dqk;
                d[q][k] = s * dpk + c * dqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([d[0][0], d[1][1], d[2][2]], Matrix3::from_rows(v))
}

/// Minimum-norm solution of the symmetric positive semi-definite system
/// `a · x = b`. Eigenvalues below `rel_tol · λ_max` are treated as zero.
pub fn solve_psd3_min_norm<T: Scalar>(a: &Matrix3<T>, b: Vector3<T>, rel_tol: T) -> Vector3<T> {
    let (vals, vecs) = symmetric_eigen3(a);
    let max = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if max == T::zero() {
        return Vector3::zero();
    }
    let mut x = Vector3::zero();
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda > rel_tol * max {
            let u = vecs.column(k);
            x += u * (u.dot(b) / lambda);
        }
    }
    x
}
