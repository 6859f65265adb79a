//! Points of R^n and of the one-point compactification R^n ∪ {∞}, the
//! chordal metric, orientation-preserving rigid motions, and Mobius
//! automorphisms of the unit ball.
//!
//! Everything is generic over the ambient dimension `N` (2 or 3 in
//! practice).  Rotation parts of isometries are required to be special
//! orthogonal; inverses are therefore transposes.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating orthogonality / determinant of rotation
/// parts.
pub const ORTHO_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// A point (or vector) of R^N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<const N: usize>(pub [f64; N]);

// serde's derive does not yet cover const-generic arrays, so (de)serialize
// points and matrices as plain sequences by hand.
impl<const N: usize> Serialize for Point<N> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

impl<'de, const N: usize> Deserialize<'de> for Point<N> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        let arr: [f64; N] = v
            .try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"N coordinates"))?;
        Ok(Point(arr))
    }
}

impl<const N: usize> Point<N> {
    pub const fn new(coords: [f64; N]) -> Self {
        Point(coords)
    }

    pub fn zero() -> Self {
        Point([0.0; N])
    }

    /// Standard basis vector `e_i`.
    pub fn axis(i: usize) -> Self {
        let mut c = [0.0; N];
        c[i] = 1.0;
        Point(c)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            s += self.0[i] * other.0[i];
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.0;
        for x in &mut c {
            *x *= s;
        }
        Point(c)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Largest absolute coordinate (sup norm).
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl<const N: usize> Add for Point<N> {
    type Output = Point<N>;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.0;
        for i in 0..N {
            c[i] += rhs.0[i];
        }
        Point(c)
    }
}

impl<const N: usize> Sub for Point<N> {
    type Output = Point<N>;
    fn sub(self, rhs: Self) -> Self {
        let mut c = self.0;
        for i in 0..N {
            c[i] -= rhs.0[i];
        }
        Point(c)
    }
}

impl<const N: usize> Neg for Point<N> {
    type Output = Point<N>;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul<f64> for Point<N> {
    type Output = Point<N>;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

// ---------------------------------------------------------------------------
// Extended points and the chordal metric
// ---------------------------------------------------------------------------

/// A point of R^N ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedPoint<const N: usize> {
    Finite(Point<N>),
    Infinity,
}

impl<const N: usize> ExtendedPoint<N> {
    pub fn finite(coords: [f64; N]) -> Self {
        ExtendedPoint::Finite(Point(coords))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedPoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<&Point<N>> {
        match self {
            ExtendedPoint::Finite(p) => Some(p),
            ExtendedPoint::Infinity => None,
        }
    }

    /// Euclidean norm, with |∞| = +∞.
    pub fn norm(&self) -> f64 {
        match self {
            ExtendedPoint::Finite(p) => p.norm(),
            ExtendedPoint::Infinity => f64::INFINITY,
        }
    }
}

impl<const N: usize> From<Point<N>> for ExtendedPoint<N> {
    fn from(p: Point<N>) -> Self {
        ExtendedPoint::Finite(p)
    }
}

/// sqrt(1 + |x|^2), guarded against overflow of |x|^2.
/// Largest coordinate magnitude for which the plain chordal formula is
/// safe from overflow (squares stay far below f64::MAX).
const CHORDAL_PLAIN_LIMIT: f64 = 1e140;

fn div_coords<const N: usize>(p: &Point<N>, s: f64) -> Point<N> {
    let mut c = p.0;
    for v in &mut c {
        *v /= s;
    }
    Point(c)
}

/// Chordal distance on R^N ∪ {∞}:
///
/// ```text
/// q(x, y) = 2|x - y| / sqrt((1 + |x|^2)(1 + |y|^2)),   q(x, ∞) = 2 / sqrt(1 + |x|^2)
/// ```
///
/// Bounded by 2 (the diameter of the unit sphere model).
pub fn chordal_distance<const N: usize>(a: &ExtendedPoint<N>, b: &ExtendedPoint<N>) -> f64 {
    match (a, b) {
        (ExtendedPoint::Infinity, ExtendedPoint::Infinity) => 0.0,
        (ExtendedPoint::Finite(p), ExtendedPoint::Infinity)
        | (ExtendedPoint::Infinity, ExtendedPoint::Finite(p)) => {
            let m = p.norm_inf();
            if m <= CHORDAL_PLAIN_LIMIT {
                2.0 / (1.0 + p.norm_sq()).sqrt()
            } else {
                // 2/sqrt(1 + |p|^2) = 2·(1/m) / hypot(1/m, |p/m|).
                let inv = 1.0 / m;
                2.0 * inv / inv.hypot(div_coords(p, m).norm())
            }
        }
        (ExtendedPoint::Finite(p), ExtendedPoint::Finite(q)) => {
            let m = p.norm_inf().max(q.norm_inf());
            if m <= CHORDAL_PLAIN_LIMIT {
                2.0 * p.dist(q) / ((1.0 + p.norm_sq()).sqrt() * (1.0 + q.norm_sq()).sqrt())
            } else {
                // Divide both points by the largest coordinate first; the
                // scale factors s·hypot(1/s, |·|) then cancel against the
                // scaled separation without ever forming |p|^2.
                let inv = 1.0 / m;
                let ps = div_coords(p, m);
                let qs = div_coords(q, m);
                let sa = inv.hypot(ps.norm());
                let sb = inv.hypot(qs.norm());
                2.0 * ps.dist(&qs) * inv / (sa * sb)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Square matrices
// ---------------------------------------------------------------------------

/// A dense N x N matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat<const N: usize>(pub [[f64; N]; N]);

impl<const N: usize> Serialize for Mat<N> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|row| row.to_vec()))
    }
}

impl<'de, const N: usize> Deserialize<'de> for Mat<N> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        if rows.len() != N || rows.iter().any(|r| r.len() != N) {
            return Err(serde::de::Error::custom("expected an N x N matrix"));
        }
        let mut m = [[0.0; N]; N];
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                m[i][j] = v;
            }
        }
        Ok(Mat(m))
    }
}

impl<const N: usize> Mat<N> {
    pub fn identity() -> Self {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Mat(m)
    }

    pub fn diagonal(d: [f64; N]) -> Self {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = d[i];
        }
        Mat(m)
    }

    pub fn apply(&self, p: &Point<N>) -> Point<N> {
        let mut out = [0.0; N];
        for i in 0..N {
            let mut s = 0.0;
            for j in 0..N {
                s += self.0[i][j] * p.0[j];
            }
            out[i] = s;
        }
        Point(out)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut s = 0.0;
                for k in 0..N {
                    s += self.0[i][k] * rhs.0[k][j];
                }
                out[i][j] = s;
            }
        }
        Mat(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                out[i][j] = self.0[j][i];
            }
        }
        Mat(out)
    }

    pub fn det(&self) -> f64 {
        match N {
            1 => self.0[0][0],
            2 => self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0],
            3 => {
                let m = &self.0;
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
            _ => panic!("det only implemented for N <= 3"),
        }
    }

    /// Max absolute entry of self - rhs.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                m = m.max((self.0[i][j] - rhs.0[i][j]).abs());
            }
        }
        m
    }

    /// True when the matrix is orthogonal with determinant +1 within `tol`.
    pub fn is_special_orthogonal(&self, tol: f64) -> bool {
        let gram = self.matmul(&self.transpose());
        gram.max_abs_diff(&Mat::identity()) <= tol && (self.det() - 1.0).abs() <= tol
    }

    /// Rotation by `angle` in the (i, j) coordinate plane, identity elsewhere.
    pub fn plane_rotation(i: usize, j: usize, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let mut m = Mat::identity();
        m.0[i][i] = c;
        m.0[i][j] = -s;
        m.0[j][i] = s;
        m.0[j][j] = c;
        m
    }
}

// ---------------------------------------------------------------------------
// Isometries
// ---------------------------------------------------------------------------

/// An orientation-preserving rigid motion x ↦ Qx + τ of R^N.
///
/// `rotation` must be special orthogonal (checked by [`Isometry::validate`]);
/// the inverse therefore uses the transpose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry<const N: usize> {
    pub rotation: Mat<N>,
    pub translation: Point<N>,
}

impl<const N: usize> Isometry<N> {
    pub fn identity() -> Self {
        Isometry { rotation: Mat::identity(), translation: Point::zero() }
    }

    pub fn translation(v: Point<N>) -> Self {
        Isometry { rotation: Mat::identity(), translation: v }
    }

    pub fn new(rotation: Mat<N>, translation: Point<N>) -> Result<Self> {
        let iso = Isometry { rotation, translation };
        iso.validate()?;
        Ok(iso)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rotation.is_special_orthogonal(ORTHO_TOL) {
            return Err(Error::InvalidConfig(
                "isometry rotation part is not special orthogonal".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point<N>) -> Point<N> {
        self.rotation.apply(p) + self.translation
    }

    /// Composition: `self` after `other` (so `(a.compose(b)).apply(x) = a(b(x))`).
    pub fn compose(&self, other: &Self) -> Self {
        Isometry {
            rotation: self.rotation.matmul(&other.rotation),
            translation: self.rotation.apply(&other.translation) + self.translation,
        }
    }

    pub fn invert(&self) -> Self {
        let rt = self.rotation.transpose();
        Isometry { rotation: rt, translation: rt.apply(&self.translation).scale(-1.0) }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.rotation.max_abs_diff(&Mat::identity()) <= tol && self.translation.norm() <= tol
    }

    /// Max deviation from `other`, over rotation entries and translation.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.rotation
            .max_abs_diff(&other.rotation)
            .max((self.translation - other.translation).norm_inf())
    }
}

// ---------------------------------------------------------------------------
// Mobius automorphisms of the unit ball
// ---------------------------------------------------------------------------

/// A Mobius automorphism of the open unit ball b^N: the standard involution
/// exchanging `center` and the origin, followed by `post_rotation`.
///
/// With a = center, D(x) = 1 - 2<x,a> + |x|^2 |a|^2, the base map is
///
/// ```text
/// T_a(x) = ((1 - |a|^2)(x - a) - |x - a|^2 a) / D(x)
/// ```
///
/// which satisfies T_a(a) = 0, T_a(0) = -a and preserves the ball:
/// 1 - |T_a(x)|^2 = (1 - |a|^2)(1 - |x|^2) / D(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMobius<const N: usize> {
    pub center: Point<N>,
    pub post_rotation: Mat<N>,
}

impl<const N: usize> BallMobius<N> {
    pub fn new(center: Point<N>, post_rotation: Mat<N>) -> Result<Self> {
        if center.norm() >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "ball Mobius center must lie in the open unit ball, |c| = {}",
                center.norm()
            )));
        }
        if !post_rotation.is_special_orthogonal(ORTHO_TOL) {
            return Err(Error::InvalidConfig(
                "ball Mobius post-rotation is not special orthogonal".into(),
            ));
        }
        Ok(BallMobius { center, post_rotation })
    }

    /// Pure rotation about the origin.
    pub fn rotation(post_rotation: Mat<N>) -> Result<Self> {
        BallMobius::new(Point::zero(), post_rotation)
    }

    fn base_eval(a: &Point<N>, x: &Point<N>) -> Point<N> {
        let asq = a.norm_sq();
        if asq == 0.0 {
            return *x;
        }
        let xa = *x - *a;
        let denom = 1.0 - 2.0 * x.dot(a) + x.norm_sq() * asq;
        (xa.scale(1.0 - asq) - a.scale(xa.norm_sq())).scale(1.0 / denom)
    }

    /// Evaluate at a point of the open unit ball.
    pub fn eval(&self, x: &Point<N>) -> Result<Point<N>> {
        if x.norm() >= 1.0 {
            return Err(Error::OutOfDomain(format!(
                "ball Mobius input must satisfy |x| < 1, got |x| = {}",
                x.norm()
            )));
        }
        Ok(self.post_rotation.apply(&Self::base_eval(&self.center, x)))
    }

    /// Evaluate the inverse map at a point of the open unit ball.
    pub fn eval_inverse(&self, y: &Point<N>) -> Result<Point<N>> {
        if y.norm() >= 1.0 {
            return Err(Error::OutOfDomain(format!(
                "ball Mobius input must satisfy |y| < 1, got |y| = {}",
                y.norm()
            )));
        }
        // (R ∘ T_a)^(-1) = T_a^(-1) ∘ R^T = T_(-a) ∘ R^T.
        let un_rotated = self.post_rotation.transpose().apply(y);
        Ok(Self::base_eval(&self.center.scale(-1.0), &un_rotated))
    }
}

// ---------------------------------------------------------------------------
