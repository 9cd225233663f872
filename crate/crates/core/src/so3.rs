//! Exact small-matrix algebra for SO(3) and its Lie algebra.
//!
//! Rotations are stored as plain 3×3 row-major matrices and skew-symmetric
//! matrices as the 3-vector they embed, so antisymmetry holds by
//! construction. The hat map follows the convention `hat(x) * y = x × y`.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result};

/// Orthonormality tolerance accepted when constructing a rotation from
/// untrusted entries.
pub const ROTATION_DEFECT_TOL: f64 = 1e-9;

/// Antisymmetry tolerance accepted when constructing a skew matrix from
/// untrusted entries.
pub const SKEW_DEFECT_TOL: f64 = 1e-9;

/// Below this rotation angle `exp_so3` switches to its series expansion.
pub const SMALL_ANGLE: f64 = 1e-12;

/// A 3-vector. Units depend on context: rad/s for angular rates,
/// dimensionless for unit directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or an error when the norm is
    /// numerically zero.
    pub fn normalized(&self) -> Result<Vec3> {
        let n = self.norm();
        if n < 1e-12 {
            return Err(Error::Scenario(format!(
                "cannot normalize near-zero vector ({}, {}, {})",
                self.x, self.y, self.z
            )));
        }
        Ok(*self * (1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A general 3×3 real matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix3 {
    pub rows: [[f64; 3]; 3],
}

impl Matrix3 {
    pub const fn new(rows: [[f64; 3]; 3]) -> Self {
        Self { rows }
    }

    pub const fn zero() -> Self {
        Self::new([[0.0; 3]; 3])
    }

    pub const fn identity() -> Self {
        Self::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn transpose(&self) -> Matrix3 {
        let m = &self.rows;
        Matrix3::new([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.rows[0][0] + self.rows[1][1] + self.rows[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|e| e * e)
            .sum::<f64>()
            .sqrt()
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let m = &self.rows;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Inverse via the adjugate; errors when the determinant vanishes.
    pub fn inverse(&self) -> Result<Matrix3> {
        let d = self.det();
        if d.abs() < 1e-300 || !d.is_finite() {
            return Err(Error::Projection(format!("singular matrix (det {d:e})")));
        }
        let m = &self.rows;
        let inv_d = 1.0 / d;
        let cof = |r1: usize, c1: usize, r2: usize, c2: usize| {
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        Ok(Matrix3::new([
            [
                cof(1, 1, 2, 2) * inv_d,
                -cof(0, 1, 2, 2) * inv_d,
                cof(0, 1, 1, 2) * inv_d,
            ],
            [
                -cof(1, 0, 2, 2) * inv_d,
                cof(0, 0, 2, 2) * inv_d,
                -cof(0, 0, 1, 2) * inv_d,
            ],
            [
                cof(1, 0, 2, 1) * inv_d,
                -cof(0, 0, 2, 1) * inv_d,
                cof(0, 0, 1, 1) * inv_d,
            ],
        ]))
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|e| e.is_finite())
    }

    /// Outer product `v * wᵀ`.
    pub fn outer(v: &Vec3, w: &Vec3) -> Matrix3 {
        Matrix3::new([
            [v.x * w.x, v.x * w.y, v.x * w.z],
            [v.y * w.x, v.y * w.y, v.y * w.z],
            [v.z * w.x, v.z * w.y, v.z * w.z],
        ])
    }
}

impl Add for Matrix3 {
    type Output = Matrix3;
    fn add(self, rhs: Matrix3) -> Matrix3 {
        let mut out = self.rows;
        for (row, r) in out.iter_mut().zip(&rhs.rows) {
            for (e, v) in row.iter_mut().zip(r) {
                *e += v;
            }
        }
        Matrix3::new(out)
    }
}

impl Sub for Matrix3 {
    type Output = Matrix3;
    fn sub(self, rhs: Matrix3) -> Matrix3 {
        let mut out = self.rows;
        for (row, r) in out.iter_mut().zip(&rhs.rows) {
            for (e, v) in row.iter_mut().zip(r) {
                *e -= v;
            }
        }
        Matrix3::new(out)
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;
    fn mul(self, rhs: Matrix3) -> Matrix3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.rows[i][k] * rhs.rows[k][j]).sum();
            }
        }
        Matrix3::new(out)
    }
}

impl Mul<f64> for Matrix3 {
    type Output = Matrix3;
    fn mul(self, s: f64) -> Matrix3 {
        let mut out = self.rows;
        for row in &mut out {
            for e in row {
                *e *= s;
            }
        }
        Matrix3::new(out)
    }
}

/// An element of so(3), stored as the 3-vector `v` with `S = hat(v)`.
/// Antisymmetry is exact by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewMatrix {
    axis: Vec3,
}

impl SkewMatrix {
    /// Reads a skew matrix off a raw 3×3 matrix, rejecting input whose
    /// antisymmetry defect `‖M + Mᵀ‖_F` exceeds [`SKEW_DEFECT_TOL`].
    pub fn from_matrix(m: &Matrix3) -> Result<SkewMatrix> {
        let defect = (*m + m.transpose()).frobenius_norm();
        if !defect.is_finite() || defect > SKEW_DEFECT_TOL {
            return Err(Error::NotAntisymmetric { defect });
        }
        Ok(pa(m))
    }

    /// Materializes the full 3×3 matrix.
    pub fn as_matrix(&self) -> Matrix3 {
        let v = &self.axis;
        Matrix3::new([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
    }

    pub fn vex(&self) -> Vec3 {
        self.axis
    }
}

/// Embeds a 3-vector as the skew matrix satisfying `hat(v) * w = v × w`.
pub fn hat(v: Vec3) -> SkewMatrix {
    SkewMatrix { axis: v }
}

/// Inverse of [`hat`]: extracts the vector from a skew matrix. Exact.
pub fn vex(s: &SkewMatrix) -> Vec3 {
    s.axis
}

/// Anti-symmetric projection `½(M − Mᵀ)`, returned as a [`SkewMatrix`].
pub fn pa(m: &Matrix3) -> SkewMatrix {
    let r = &m.rows;
    SkewMatrix {
        axis: Vec3::new(
            0.5 * (r[2][1] - r[1][2]),
            0.5 * (r[0][2] - r[2][0]),
            0.5 * (r[1][0] - r[0][1]),
        ),
    }
}

/// A 3×3 orthonormal matrix with positive determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix {
    m: Matrix3,
}

impl RotationMatrix {
    pub const fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Validates orthonormality (`‖RᵀR − I‖_F ≤ 1e−9`) and `det > 0`.
    pub fn from_matrix(m: Matrix3) -> Result<RotationMatrix> {
        let defect = orthonormality_defect(&m);
        let det = m.det();
        if !defect.is_finite() || defect > ROTATION_DEFECT_TOL || !det.is_finite() || det <= 0.0 {
            return Err(Error::NotARotation { defect, det });
        }
        Ok(RotationMatrix { m })
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.m
    }

    /// The inverse rotation. Exact transposition, no renormalization.
    pub fn transpose(&self) -> RotationMatrix {
        RotationMatrix {
            m: self.m.transpose(),
        }
    }

    /// Rotates a vector: `R * v`.
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.m.mul_vec(v)
    }

    /// Rotates a vector by the inverse: `Rᵀ * v`.
    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        let m = &self.m.rows;
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    /// `‖RᵀR − I‖_F` of the stored matrix.
    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(&self.m)
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite()
    }
}

impl Mul for &RotationMatrix {
    type Output = RotationMatrix;
    // Products of valid rotations stay within tolerance; skip revalidation.
    fn mul(self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix { m: self.m * rhs.m }
    }
}

fn orthonormality_defect(m: &Matrix3) -> f64 {
    (m.transpose() * *m - Matrix3::identity()).frobenius_norm()
}

/// Rodrigues exponential: `exp(hat(v))` as a rotation.
///
/// For `‖v‖ < 1e−12` the closed form degenerates (0/0), so the second-order
/// series `I + hat(v) + ½hat(v)²` is used instead.
pub fn exp_so3(v: Vec3) -> RotationMatrix {
    let angle = v.norm();
    let vh = hat(v).as_matrix();
    let m = if angle < SMALL_ANGLE {
        Matrix3::identity() + vh + vh * vh * 0.5
    } else {
        let u = hat(v * (1.0 / angle)).as_matrix();
        Matrix3::identity() + u * angle.sin() + u * u * (1.0 - angle.cos())
    };
    RotationMatrix { m }
}

/// Closest rotation in the Frobenius sense (orthogonal polar factor),
/// computed by the Newton iteration `X ← ½(X + X⁻ᵀ)`.
///
/// Fails on singular input and on reflection-dominant input, where the
/// polar factor would have determinant −1.
pub fn project_to_so3(m: &Matrix3) -> Result<RotationMatrix> {
    if !m.is_finite() {
        return Err(Error::Projection("non-finite entries".into()));
    }
    let det = m.det();
    if det.abs() < 1e-12 {
        return Err(Error::Projection(format!("singular input (det {det:e})")));
    }
    if det < 0.0 {
        return Err(Error::Projection(format!(
            "polar factor would be a reflection (det {det:.6})"
        )));
    }
    let mut x = *m;
    for _ in 0..100 {
        let next = (x + x.inverse()?.transpose()) * 0.5;
        let delta = (next - x).frobenius_norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    let defect = orthonormality_defect(&x);
    let det = x.det();
    if !defect.is_finite() || defect > 1e-12 || !det.is_finite() || det <= 0.0 {
        return Err(Error::NotARotation { defect, det });
    }
    Ok(RotationMatrix { m: x })
}

/// Normalized Euclidean distance `¼ Tr{I − RᵀR̂} ∈ [0, 1]`.
///
/// Zero at perfect alignment, one at a 180° error.
pub fn attitude_distance(r: &RotationMatrix, r_hat: &RotationMatrix) -> f64 {
    // Tr{RᵀR̂} = Σ_ij R_ij R̂_ij, so the error matrix is never formed.
    let a = &r.m.rows;
    let b = &r_hat.m.rows;
    let mut tr = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            tr += a[i][j] * b[i][j];
        }
    }
    0.25 * (3.0 - tr)
}

/// ZYX (yaw-pitch-roll) Euler angles in radians.
///
/// `roll, yaw ∈ (−π, π]`, `pitch ∈ [−π/2, π/2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

/// Builds `Rz(yaw) · Ry(pitch) · Rx(roll)`.
pub fn from_euler(angles: &EulerAngles) -> RotationMatrix {
    let (sr, cr) = angles.roll.sin_cos();
    let (sp, cp) = angles.pitch.sin_cos();
    let (sy, cy) = angles.yaw.sin_cos();
    RotationMatrix {
        m: Matrix3::new([
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]),
    }
}

/// Extracts ZYX Euler angles.
///
/// Within 1e−6 rad of the |pitch| = π/2 singularity only the combined
/// roll/yaw angle is observable; yaw is set to 0 and the remaining degree
/// of freedom is folded into roll.
pub fn to_euler(r: &RotationMatrix) -> EulerAngles {
    let m = &r.m.rows;
    let pitch = (-m[2][0]).clamp(-1.0, 1.0).asin();
    if std::f64::consts::FRAC_PI_2 - pitch.abs() < 1e-6 {
        let (roll, yaw) = if pitch > 0.0 {
            (m[0][1].atan2(m[0][2]), 0.0)
        } else {
            ((-m[0][1]).atan2(-m[0][2]), 0.0)
        };
        return EulerAngles {
            roll: fold_half_open(roll),
            pitch,
            yaw,
        };
    }
    EulerAngles {
        roll: fold_half_open(m[2][1].atan2(m[2][2])),
        pitch,
        yaw: fold_half_open(m[1][0].atan2(m[0][0])),
    }
}

// atan2 ranges over [−π, π]; the domain contract is (−π, π].
fn fold_half_open(angle: f64) -> f64 {
    if angle == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        angle
    }
}

/// Uniformly-seeded random rotation for tests across the crate.
#[cfg(test)]
pub(crate) fn random_rotation(rng: &mut impl rand::Rng) -> RotationMatrix {
    let axis = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    if axis.norm() < 1e-6 {
        return RotationMatrix::identity();
    }
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    exp_so3(axis.normalized().unwrap() * angle)
}
