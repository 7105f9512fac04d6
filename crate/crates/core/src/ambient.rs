//! Pseudo-Euclidean linear algebra on `R⁴_p` and the space forms `Q³_{p,ε}`.
//!
//! Every space is represented in the same four coordinates: flat spaces are
//! the slice `x4 = 0`, the others the quadrics `‖x‖² = ε`. The metric of
//! `R⁴_p` is `-Σ_{i≤p} dx_i² + Σ_{i>p} dx_i²`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jet::Scalar;

/// Relative cutoff for degenerate Gram determinants.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec4<T = f64>(pub [T; 4]);

/// A point or vector of `R⁴` with plain coordinates.
pub type PseudoVec = Vec4<f64>;

impl<T: Copy> Vec4<T> {
    pub fn map<U>(&self, f: impl Fn(T) -> U) -> Vec4<U> {
        Vec4([f(self.0[0]), f(self.0[1]), f(self.0[2]), f(self.0[3])])
    }
}

impl<T: Scalar> Vec4<T> {
    pub fn splat(x: T) -> Self {
        Vec4([x; 4])
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|c| c * s)
    }

    pub fn scale_f(&self, s: f64) -> Self {
        self.map(|c| c * s)
    }

    pub fn value(&self) -> PseudoVec {
        self.map(|c| c.value())
    }
}

impl PseudoVec {
    pub const ZERO: PseudoVec = Vec4([0.0; 4]);

    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Vec4([x1, x2, x3, x4])
    }

    pub fn basis(i: usize) -> Self {
        let mut v = Self::ZERO;
        v.0[i] = 1.0;
        v
    }

    /// Coordinate (Euclidean) length, used for scale-aware tolerances.
    pub fn euclid_norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Lifts the coordinates to constants shaped like `like`.
    pub fn lift<T: Scalar>(&self, like: &T) -> Vec4<T> {
        self.map(|c| like.lift(c))
    }
}

impl<T> Index<usize> for Vec4<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec4<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Scalar> Add for Vec4<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec4([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }
}

impl<T: Scalar> Sub for Vec4<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec4([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }
}

impl<T: Scalar> Neg for Vec4<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|c| -c)
    }
}

/// Sign of the `i`-th coordinate in the metric of index `p`.
#[inline]
pub fn metric_sign(i: usize, p: u8) -> f64 {
    if i < p as usize {
        -1.0
    } else {
        1.0
    }
}

/// `⟨x, y⟩ = -Σ_{i≤p} x_i y_i + Σ_{i>p} x_i y_i`.
pub fn inner<T: Scalar>(x: &Vec4<T>, y: &Vec4<T>, p: u8) -> T {
    let mut acc = x.0[0] * y.0[0] * metric_sign(0, p);
    for i in 1..4 {
        acc = acc + x.0[i] * y.0[i] * metric_sign(i, p);
    }
    acc
}

pub fn norm2<T: Scalar>(x: &Vec4<T>, p: u8) -> T {
    inner(x, x, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Causal {
    Spacelike,
    Timelike,
    Lightlike,
}

impl Causal {
    pub fn of_norm2(n2: f64, scale: f64) -> Causal {
        if n2.abs() <= DEGENERACY_TOL * scale.max(f64::MIN_POSITIVE) {
            Causal::Lightlike
        } else if n2 > 0.0 {
            Causal::Spacelike
        } else {
            Causal::Timelike
        }
    }

    pub fn sign(&self) -> i8 {
        match self {
            Causal::Spacelike => 1,
            Causal::Timelike => -1,
            Causal::Lightlike => 0,
        }
    }

    /// `±1`, or `None` for lightlike.
    pub fn sign_opt(&self) -> Option<i8> {
        match self.sign() {
            0 => None,
            s => Some(s),
        }
    }
}

impl fmt::Display for Causal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Causal::Spacelike => "spacelike",
            Causal::Timelike => "timelike",
            Causal::Lightlike => "lightlike",
        })
    }
}

/// The hyperquadric `Q³_{p,ε}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceForm {
    p: u8,
    eps: i8,
}

const ADMISSIBLE: [(u8, i8); 7] = [(0, 0), (1, 0), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1)];

impl SpaceForm {
    pub const E3: SpaceForm = SpaceForm { p: 0, eps: 0 };
    pub const L3: SpaceForm = SpaceForm { p: 1, eps: 0 };
    pub const S3: SpaceForm = SpaceForm { p: 0, eps: 1 };
    pub const H3: SpaceForm = SpaceForm { p: 1, eps: -1 };
    pub const DS3: SpaceForm = SpaceForm { p: 1, eps: 1 };
    pub const ADS3: SpaceForm = SpaceForm { p: 2, eps: -1 };
    /// `Q³_{2,1}`, anti-isometric to anti de Sitter space.
    pub const ADS3_TILDE: SpaceForm = SpaceForm { p: 2, eps: 1 };

    pub const ALL: [SpaceForm; 7] = [
        Self::E3,
        Self::L3,
        Self::S3,
        Self::H3,
        Self::DS3,
        Self::ADS3,
        Self::ADS3_TILDE,
    ];

    pub fn new(p: i8, eps: i8) -> Result<Self> {
        if p >= 0 && ADMISSIBLE.contains(&(p as u8, eps)) {
            Ok(SpaceForm { p: p as u8, eps })
        } else {
            Err(GeomError::InadmissibleSpaceForm { p, eps })
        }
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn eps(&self) -> i8 {
        self.eps
    }

    pub fn is_flat(&self) -> bool {
        self.eps == 0
    }

    pub fn is_tilde(&self) -> bool {
        self.p == 2 && self.eps == 1
    }

    /// Signature `(p', 3 - p')` of the induced metric.
    pub fn signature(&self) -> (u8, u8) {
        let pp = if self.eps == -1 { self.p - 1 } else { self.p };
        (pp, 3 - pp)
    }

    pub fn name(&self) -> &'static str {
        match (self.p, self.eps) {
            (0, 0) => "E3",
            (1, 0) => "L3",
            (0, 1) => "S3",
            (1, -1) => "H3",
            (1, 1) => "dS3",
            (2, -1) => "AdS3",
            _ => "AdS3~",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }

    pub fn inner<T: Scalar>(&self, x: &Vec4<T>, y: &Vec4<T>) -> T {
        inner(x, y, self.p)
    }

    pub fn norm2<T: Scalar>(&self, x: &Vec4<T>) -> T {
        inner(x, x, self.p)
    }
}

impl Serialize for SpaceForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl Serialize for Vec4<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl fmt::Display for SpaceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `NC_p`, the nonzero null vectors of `R⁴_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NullCone {
    pub p: u8,
}

impl NullCone {
    pub fn residual(&self, x: &PseudoVec) -> f64 {
        norm2(x, self.p)
    }
}

/// Zero iff `x` lies on `space`: `‖x‖² - ε`, or `x4` for flat spaces.
pub fn quadric_residual(x: &PseudoVec, space: SpaceForm) -> f64 {
    if space.is_flat() {
        x[3]
    } else {
        space.norm2(x) - space.eps as f64
    }
}

/// `Q³_{p,-ε}`, except that `S³` is its own polar space since `Q³_{0,-1}` is empty.
pub fn polar_space(space: SpaceForm) -> Result<SpaceForm> {
    if space.is_flat() {
        return Err(GeomError::FlatSpaceHasNoPolar);
    }
    if space == SpaceForm::S3 {
        return Ok(space);
    }
    SpaceForm::new(space.p as i8, -space.eps)
}

/// The involution `(x1,x2,x3,x4) ↦ (x3,x4,x1,x2)` of `R⁴_2`, which negates the metric.
pub fn anti_isometry(x: &PseudoVec) -> PseudoVec {
    PseudoVec::new(x[2], x[3], x[0], x[1])
}

fn det3<T: Scalar>(m: [[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Euclidean vector `c` with `Σ c_i w_i = det(a, b, w, x)` for every `w`.
fn cofactor_cross<T: Scalar>(a: &Vec4<T>, b: &Vec4<T>, x: &Vec4<T>) -> Vec4<T> {
    let rows = [a, b, x];
    let mut out = [a.0[0]; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&k| k != i).collect();
        let mut m = [[a.0[0]; 3]; 3];
        for (r, row) in rows.iter().enumerate() {
            for (cidx, &k) in cols.iter().enumerate() {
                m[r][cidx] = row.0[k];
            }
        }
        // w sits in column 2 of (a, b, w, x); expanding along that column
        // gives sign (-1)^(i + 2) on the minor obtained by deleting row i.
        let minor = det3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ]);
        *slot = if i % 2 == 0 { minor } else { -minor };
    }
    Vec4(out)
}

/// Gram determinant `EG - F²` of `{a, b}` with a scale for tolerance checks.
pub fn gram_det(a: &PseudoVec, b: &PseudoVec, p: u8) -> (f64, f64) {
    let e = inner(a, a, p);
    let f = inner(a, b, p);
    let g = inner(b, b, p);
    let scale = (a.euclid_norm() * b.euclid_norm()).powi(2);
    (e * g - f * f, scale)
}

/// A nonzero vector orthogonal to `a`, `b` and (for curved spaces) `x`.
///
/// Orientation is the right-handed cross product on `E³`; in general
/// `⟨n, w⟩ = det(a, b, w, x)` for curved spaces and `n = η(a × b)` for flat ones.
pub fn metric_orthocomplement<T: Scalar>(
    x: &Vec4<T>,
    a: &Vec4<T>,
    b: &Vec4<T>,
    space: SpaceForm,
) -> Result<Vec4<T>> {
    let (det, scale) = gram_det(&a.value(), &b.value(), space.p);
    if !(det.abs() > DEGENERACY_TOL * scale) {
        return Err(GeomError::DegenerateTangentPlane { det });
    }
    let p = space.p;
    let n = if space.is_flat() {
        let cross = [
            a.0[1] * b.0[2] - a.0[2] * b.0[1],
            a.0[2] * b.0[0] - a.0[0] * b.0[2],
            a.0[0] * b.0[1] - a.0[1] * b.0[0],
        ];
        let zero = a.0[0].lift(0.0);
        Vec4([
            cross[0] * metric_sign(0, p),
            cross[1] * metric_sign(1, p),
            cross[2] * metric_sign(2, p),
            zero,
        ])
    } else {
        let c = cofactor_cross(a, b, x);
        Vec4([
            c.0[0] * metric_sign(0, p),
            c.0[1] * metric_sign(1, p),
            c.0[2] * metric_sign(2, p),
            c.0[3] * metric_sign(3, p),
        ])
    };
    Ok(n)
}

/// Metric Gram–Schmidt. Vectors are orthogonalized against `fixed` first,
/// then against each other in the given order, and normalized to `‖e_i‖² = signs[i]`.
pub fn gram_schmidt(vectors: &mut [PseudoVec], signs: &[f64], fixed: &[PseudoVec], p: u8) -> Result<()> {
    for k in 0..vectors.len() {
        let mut w = vectors[k];
        for f in fixed {
            let ff = inner(f, f, p);
            if ff.abs() > DEGENERACY_TOL {
                w = w - f.scale_f(inner(&w, f, p) / ff);
            }
        }
        for (prev, s) in vectors[..k].iter().zip(signs) {
            w = w - prev.scale_f(inner(&w, prev, p) * s);
        }
        let n2 = inner(&w, &w, p);
        if n2 * signs[k] <= DEGENERACY_TOL * w.euclid_norm().powi(2) {
            return Err(GeomError::InvalidFrame(format!(
                "vector {k} has norm² {n2:e}, expected sign {}",
                signs[k]
            )));
        }
        vectors[k] = w.scale_f(1.0 / n2.abs().sqrt());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_examples() {
        let e1 = PseudoVec::new(1.0, 0.0, 0.0, 0.0);
        let e3 = PseudoVec::new(0.0, 0.0, 1.0, 0.0);
        let null = PseudoVec::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(inner(&e1, &e1, 1), -1.0);
        assert_eq!(inner(&e3, &e3, 1), 1.0);
        assert_eq!(inner(&null, &null, 1), 0.0);
    }

    #[test]
    fn quadric_residual_examples() {
        assert_eq!(quadric_residual(&PseudoVec::new(0.0, 0.0, 0.0, 1.0), SpaceForm::S3), 0.0);
        assert_eq!(quadric_residual(&PseudoVec::new(1.0, 0.0, 0.0, 0.0), SpaceForm::H3), 0.0);
        assert_eq!(quadric_residual(&PseudoVec::new(0.0, 0.0, 1.0, 1.0), SpaceForm::E3), 1.0);
    }

    #[test]
    fn orthocomplement_examples() {
        let x = PseudoVec::ZERO;
        let n = metric_orthocomplement(&x, &PseudoVec::basis(0), &PseudoVec::basis(1), SpaceForm::E3).unwrap();
        assert_eq!(n, PseudoVec::basis(2));

        let x = PseudoVec::basis(0);
        let n = metric_orthocomplement(&x, &PseudoVec::basis(1), &PseudoVec::basis(2), SpaceForm::H3).unwrap();
        assert_eq!(n[0], 0.0);
        assert_eq!(n[1], 0.0);
        assert_eq!(n[2], 0.0);
        assert_eq!(n[3].abs(), 1.0);
        assert_eq!(norm2(&n, 1), 1.0);

        let n = metric_orthocomplement(&x, &PseudoVec::basis(0), &PseudoVec::basis(1), SpaceForm::L3).unwrap();
        assert_eq!(n[2].abs(), 1.0);
        assert_eq!(norm2(&n, 1), 1.0);
    }

    #[test]
    fn orthocomplement_rejects_null_plane() {
        let x = PseudoVec::ZERO;
        let a = PseudoVec::new(1.0, 1.0, 0.0, 0.0);
        let b = PseudoVec::basis(2);
        assert!(matches!(
            metric_orthocomplement(&x, &a, &b, SpaceForm::L3),
            Err(GeomError::DegenerateTangentPlane { .. })
        ));
    }

    #[test]
    fn polar_space_examples() {
        assert_eq!(polar_space(SpaceForm::H3).unwrap(), SpaceForm::DS3);
        assert_eq!(polar_space(SpaceForm::DS3).unwrap(), SpaceForm::H3);
        assert_eq!(polar_space(SpaceForm::ADS3).unwrap(), SpaceForm::ADS3_TILDE);
        assert_eq!(polar_space(SpaceForm::E3), Err(GeomError::FlatSpaceHasNoPolar));
        for s in SpaceForm::ALL.iter().filter(|s| !s.is_flat()) {
            assert_eq!(polar_space(polar_space(*s).unwrap()).unwrap(), *s);
        }
    }

    #[test]
    fn admissibility() {
        assert!(SpaceForm::new(0, -1).is_err());
        assert!(SpaceForm::new(2, 0).is_err());
        assert_eq!(SpaceForm::ADS3_TILDE.signature(), (2, 1));
        assert_eq!(SpaceForm::ADS3.signature(), (1, 2));
        assert_eq!(SpaceForm::H3.signature(), (0, 3));
    }
}
