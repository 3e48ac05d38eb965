//! Möbius transformations on the Riemann sphere and automorphisms of the
//! unit disk.
//!
//! Every group element in this crate is carried as a [`MoebiusMap`], a 2×2
//! complex matrix normalized to determinant 1. The sign ambiguity of the
//! PSL(2, ℂ) representative is never resolved globally; all consumers work
//! with sign-invariant quantities (squared traces, `1/d²`, images of
//! points).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Mul;

/// Tolerance for algebraic identities (determinants, group laws).
pub const TOL_ALGEBRAIC: f64 = 1e-12;
/// Tolerance for geometric membership checks (disk preservation, parabolicity).
pub const TOL_GEOMETRIC: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MoebiusError {
    #[error("matrix is singular (|det| = {0:.3e}); cannot normalize")]
    Singular(f64),
    #[error("map has a pole at the origin (d = 0)")]
    PoleAtOrigin,
    #[error("map does not preserve the unit disk (worst |‖image‖ - 1| = {0:.3e})")]
    NotDiskPreserving(f64),
    #[error("|a| = {0} is not inside the unit disk")]
    CenterNotInDisk(f64),
}

/// A point of the Riemann sphere ℂ ∪ {∞}.
///
/// The explicit infinity tag avoids IEEE `0·∞` NaN propagation through
/// matrix actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::Finite(z)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{z}"),
            SpherePoint::Infinity => write!(f, "∞"),
        }
    }
}

/// Trace-squared classification of a determinant-1 Möbius map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapClass {
    Identity,
    Parabolic,
    Elliptic,
    Hyperbolic,
}

/// A Möbius transformation `z ↦ (az + b)/(cz + d)` stored with `ad − bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MoebiusMap {
    /// Builds a map from matrix entries, rescaling so that `ad − bc = 1`.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, MoebiusError> {
        Self { a, b, c, d }.normalized()
    }

    /// Entries from real parts only; convenience for the many real matrices
    /// in the half-plane model.
    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Result<Self, MoebiusError> {
        Self::new(
            Complex64::new(a, 0.0),
            Complex64::new(b, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(d, 0.0),
        )
    }

    pub fn identity() -> Self {
        Self {
            a: Complex64::ONE,
            b: Complex64::ZERO,
            c: Complex64::ZERO,
            d: Complex64::ONE,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Rescales all entries by a square root of the determinant.
    ///
    /// The branch of the root is irrelevant: both signs represent the same
    /// element of PSL(2, ℂ).
    pub fn normalized(self) -> Result<Self, MoebiusError> {
        let det = self.det();
        let nd = det.norm();
        if !(nd > 1e-280) || !nd.is_finite() {
            return Err(MoebiusError::Singular(nd));
        }
        let s = det.sqrt();
        Ok(Self {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        })
    }

    /// Inverse map; for a det-1 matrix this is the adjugate.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// tr², the conjugation- and sign-invariant classifier.
    pub fn trace_sq(&self) -> Complex64 {
        let t = self.trace();
        t * t
    }

    /// Action on the Riemann sphere with the standard pole conventions.
    pub fn apply(&self, z: SpherePoint) -> SpherePoint {
        match z {
            SpherePoint::Infinity => {
                if self.c.norm() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(self.a / self.c)
                }
            }
            SpherePoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den.norm() < 1e-280 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Action on a finite point assumed to stay finite; panics on a pole hit
    /// only in debug builds, returns a large value otherwise.
    pub fn apply_finite(&self, z: Complex64) -> Complex64 {
        match self.apply(SpherePoint::Finite(z)) {
            SpherePoint::Finite(w) => w,
            SpherePoint::Infinity => {
                debug_assert!(false, "apply_finite hit a pole");
                Complex64::new(f64::MAX, 0.0)
            }
        }
    }

    /// Derivative at the origin, `1/d²` for a det-1 matrix.
    pub fn deriv_at_zero(&self) -> Result<Complex64, MoebiusError> {
        if self.d.norm() < 1e-150 {
            return Err(MoebiusError::PoleAtOrigin);
        }
        Ok((self.d * self.d).inv())
    }

    /// Derivative at a general finite point, `1/(cz + d)²`.
    pub fn deriv_at(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        (den * den).inv()
    }

    /// Classification by squared trace: identity / parabolic (tr² = 4) /
    /// elliptic (tr² real in [0, 4)) / hyperbolic or loxodromic.
    pub fn classify(&self) -> MapClass {
        let id = Self::identity();
        let dist_plus = ent_dist(self, &id);
        let neg = Self {
            a: -id.a,
            b: id.b,
            c: id.c,
            d: -id.d,
        };
        let dist_minus = ent_dist(self, &neg);
        if dist_plus <= TOL_GEOMETRIC || dist_minus <= TOL_GEOMETRIC {
            return MapClass::Identity;
        }
        let t2 = self.trace_sq();
        if (t2 - Complex64::new(4.0, 0.0)).norm() <= TOL_GEOMETRIC {
            MapClass::Parabolic
        } else if t2.im.abs() <= TOL_GEOMETRIC && t2.re >= 0.0 && t2.re < 4.0 {
            MapClass::Elliptic
        } else {
            MapClass::Hyperbolic
        }
    }

    /// Commutator m · n · m⁻¹ · n⁻¹.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other * self.inverse() * other.inverse()
    }

    /// Checks that three test points of the unit circle map to points of
    /// modulus 1, and returns the interpretation as a disk automorphism
    /// `λ(z − a)/(1 − āz)`.
    pub fn to_disk_automorphism(&self) -> Result<DiskAutomorphism, MoebiusError> {
        let mut worst: f64 = 0.0;
        for z in [
            Complex64::ONE,
            Complex64::I,
            Complex64::new(-1.0, 0.0),
        ] {
            match self.apply(SpherePoint::Finite(z)) {
                SpherePoint::Finite(w) => worst = worst.max((w.norm() - 1.0).abs()),
                SpherePoint::Infinity => worst = f64::INFINITY,
            }
        }
        if worst > TOL_GEOMETRIC {
            return Err(MoebiusError::NotDiskPreserving(worst));
        }
        // γ(a) = 0 at a = -b/a; λ = a/d for the SU(1,1) representative.
        let center = -self.b / self.a;
        let lambda = self.a / self.d;
        DiskAutomorphism::new(lambda, center)
    }

    /// Conjugation by the model-changing map `η(z) = i(1+z)/(1−z)`.
    ///
    /// `HalfplaneToDisk` sends a map of the upper half-plane to the
    /// corresponding map of the unit disk (`η⁻¹ ∘ m ∘ η`); `DiskToHalfplane`
    /// is the other conjugation.
    pub fn cayley(&self, direction: CayleyDirection) -> Self {
        let eta = cayley_matrix();
        let conj = match direction {
            CayleyDirection::HalfplaneToDisk => eta.inverse() * *self * eta,
            CayleyDirection::DiskToHalfplane => eta * *self * eta.inverse(),
        };
        // products of det-1 matrices stay det-1; renormalize for drift
        conj.normalized().expect("conjugate of invertible map is invertible")
    }
}

impl Mul for MoebiusMap {
    type Output = MoebiusMap;

    fn mul(self, rhs: Self) -> Self {
        let raw = Self {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        };
        raw.normalized().expect("product of unit-determinant maps is invertible")
    }
}

/// Direction of the Cayley-type change of model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CayleyDirection {
    HalfplaneToDisk,
    DiskToHalfplane,
}

/// The matrix of `η(z) = i(1+z)/(1−z)`, determinant-normalized.
pub fn cayley_matrix() -> MoebiusMap {
    MoebiusMap::new(
        Complex64::I,
        Complex64::I,
        Complex64::new(-1.0, 0.0),
        Complex64::ONE,
    )
    .expect("η is invertible")
}

fn ent_dist(m: &MoebiusMap, n: &MoebiusMap) -> f64 {
    (m.a - n.a)
        .norm()
        .max((m.b - n.b).norm())
        .max((m.c - n.c).norm())
        .max((m.d - n.d).norm())
}

/// Maximum entrywise distance between two maps, minimized over the ±
/// representative of the second.
pub fn proj_dist(m: &MoebiusMap, n: &MoebiusMap) -> f64 {
    let neg = MoebiusMap {
        a: -n.a,
        b: -n.b,
        c: -n.c,
        d: -n.d,
    };
    ent_dist(m, n).min(ent_dist(m, &neg))
}

/// The parametrization `z ↦ λ(z − a)/(1 − āz)` of a disk-preserving Möbius
/// map, with `|λ| = 1` and `|a| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskAutomorphism {
    pub lambda: Complex64,
    pub a: Complex64,
}

impl DiskAutomorphism {
    pub fn new(lambda: Complex64, a: Complex64) -> Result<Self, MoebiusError> {
        let lam_err = (lambda.norm() - 1.0).abs();
        if lam_err > TOL_ALGEBRAIC * 10.0 {
            return Err(MoebiusError::NotDiskPreserving(lam_err));
        }
        if a.norm() > 1.0 - TOL_ALGEBRAIC {
            return Err(MoebiusError::CenterNotInDisk(a.norm()));
        }
        // snap λ exactly onto the circle; callers feed values that are
        // already within TOL of it
        let lambda = lambda / lambda.norm();
        Ok(Self { lambda, a })
    }

    pub fn identity() -> Self {
        Self {
            lambda: Complex64::ONE,
            a: Complex64::ZERO,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.lambda * (z - self.a) / (Complex64::ONE - self.a.conj() * z)
    }

    /// |γ′(0)| = 1 − |a|².
    pub fn deriv_norm_at_zero(&self) -> f64 {
        1.0 - self.a.norm_sqr()
    }

    /// Determinant-1 matrix `[[λ, −λa], [−ā, 1]] / √λ(1−|a|²)`.
    pub fn to_matrix(&self) -> MoebiusMap {
        MoebiusMap::new(
            self.lambda,
            -self.lambda * self.a,
            -self.a.conj(),
            Complex64::ONE,
        )
        .expect("|a| < 1 keeps the automorphism invertible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gen_a() -> MoebiusMap {
        MoebiusMap::from_real(1.5, 2.5, 0.5, 1.5).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let m = gen_a();
        let id = MoebiusMap::identity();
        assert!(proj_dist(&(id * m), &m) <= TOL_ALGEBRAIC);
        assert!(proj_dist(&(m * id), &m) <= TOL_ALGEBRAIC);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let m = MoebiusMap::new(c(1.2, 0.3), c(-0.4, 2.0), c(0.0, 0.7), c(1.0, -0.2)).unwrap();
        let prod = m * m.inverse();
        assert!(proj_dist(&prod, &MoebiusMap::identity()) <= TOL_ALGEBRAIC);
    }

    #[test]
    fn hand_multiplied_square() {
        // [[3/2,5/2],[1/2,3/2]]² = [[7/2,15/2],[3/2,7/2]], worked by hand
        let sq = gen_a() * gen_a();
        let expect = MoebiusMap::from_real(3.5, 7.5, 1.5, 3.5).unwrap();
        assert!(proj_dist(&sq, &expect) <= TOL_ALGEBRAIC);
    }

    #[test]
    fn apply_conventions() {
        let m = gen_a();
        // substituting z = 0 into (az+b)/(cz+d) gives b/d = (5/2)/(3/2)
        let w = m.apply(SpherePoint::Finite(Complex64::ZERO)).finite().unwrap();
        assert!((w - c(5.0 / 3.0, 0.0)).norm() <= TOL_ALGEBRAIC);

        let id = MoebiusMap::identity();
        let z = c(0.3, -0.8);
        assert_eq!(id.apply(SpherePoint::Finite(z)).finite().unwrap(), z);

        let parab = MoebiusMap::from_real(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(parab.apply(SpherePoint::Infinity).is_infinity());

        // z = -d/c maps to infinity
        let pole = -m.d / m.c;
        assert!(m.apply(SpherePoint::Finite(pole)).is_infinity());
        // infinity maps to a/c
        let inf_img = m.apply(SpherePoint::Infinity).finite().unwrap();
        assert!((inf_img - m.a / m.c).norm() <= TOL_ALGEBRAIC);
    }

    #[test]
    fn deriv_at_zero_values() {
        assert!((gen_a().deriv_at_zero().unwrap() - c(4.0 / 9.0, 0.0)).norm() <= TOL_ALGEBRAIC);
        assert!(
            (MoebiusMap::identity().deriv_at_zero().unwrap() - Complex64::ONE).norm()
                <= TOL_ALGEBRAIC
        );
        let pole = MoebiusMap::new(Complex64::ZERO, Complex64::I, Complex64::I, Complex64::ZERO)
            .unwrap();
        assert_eq!(pole.deriv_at_zero(), Err(MoebiusError::PoleAtOrigin));
    }

    #[test]
    fn deriv_at_zero_of_disk_automorphism() {
        let aut = DiskAutomorphism::new(c(0.0, 1.0), c(0.3, -0.2)).unwrap();
        let m = aut.to_matrix();
        let d0 = m.deriv_at_zero().unwrap().norm();
        assert!((d0 - aut.deriv_norm_at_zero()).abs() <= TOL_ALGEBRAIC);
    }

    #[test]
    fn classification() {
        let parab = MoebiusMap::from_real(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(parab.classify(), MapClass::Parabolic);
        assert_eq!(gen_a().classify(), MapClass::Hyperbolic);
        assert_eq!(MoebiusMap::identity().classify(), MapClass::Identity);
        let rot = MoebiusMap::new(
            Complex64::from_polar(1.0, 0.4),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::from_polar(1.0, -0.4),
        )
        .unwrap();
        assert_eq!(rot.classify(), MapClass::Elliptic);
    }

    #[test]
    fn disk_automorphism_round_trip() {
        let aut = DiskAutomorphism::new(Complex64::I, c(0.3, 0.0)).unwrap();
        let back = aut.to_matrix().to_disk_automorphism().unwrap();
        assert!((back.lambda - aut.lambda).norm() <= TOL_ALGEBRAIC);
        assert!((back.a - aut.a).norm() <= TOL_ALGEBRAIC);

        // from_disk_aut(λ=1, a=0) is ±identity
        let id = DiskAutomorphism::identity().to_matrix();
        assert!(proj_dist(&id, &MoebiusMap::identity()) <= TOL_ALGEBRAIC);

        // |γ(0)| = |a|
        let img = aut.to_matrix().apply_finite(Complex64::ZERO);
        assert!((img.norm() - aut.a.norm()).abs() <= TOL_ALGEBRAIC);
    }

    #[test]
    fn rejects_non_disk_maps() {
        let err = gen_a().to_disk_automorphism();
        assert!(matches!(err, Err(MoebiusError::NotDiskPreserving(_))));
    }

    #[test]
    fn cayley_preserves_trace_and_identity() {
        let m = gen_a();
        for dir in [CayleyDirection::HalfplaneToDisk, CayleyDirection::DiskToHalfplane] {
            let conj = m.cayley(dir);
            let dt = (conj.trace() - m.trace())
                .norm()
                .min((conj.trace() + m.trace()).norm());
            assert!(dt <= TOL_ALGEBRAIC, "trace changed by {dt}");
        }
        let id = MoebiusMap::identity().cayley(CayleyDirection::HalfplaneToDisk);
        assert!(proj_dist(&id, &MoebiusMap::identity()) <= TOL_ALGEBRAIC);
    }

    #[test]
    fn cayley_sends_real_maps_to_circle_maps() {
        // gen_a preserves ℝ ∪ {∞}; its conjugate must preserve the circle
        let conj = gen_a().cayley(CayleyDirection::HalfplaneToDisk);
        for z in [Complex64::ONE, Complex64::I, c(-1.0, 0.0)] {
            let w = conj.apply(SpherePoint::Finite(z));
            match w {
                SpherePoint::Finite(w) => {
                    assert!((w.norm() - 1.0).abs() <= TOL_GEOMETRIC, "|w| = {}", w.norm())
                }
                SpherePoint::Infinity => {} // circle point can land on ∞ only for non-disk maps
            }
        }
    }

    #[test]
    fn deriv_chain_rule() {
        let m1 = MoebiusMap::new(c(1.1, 0.2), c(0.3, -0.1), c(0.05, 0.0), c(0.9, 0.1)).unwrap();
        let m2 = gen_a();
        let at0 = m2.apply_finite(Complex64::ZERO);
        let lhs = (m1 * m2).deriv_at_zero().unwrap();
        let rhs = m1.deriv_at(at0) * m2.deriv_at_zero().unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn json_shape() {
        let m = gen_a();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"a\":[1.5,0.0]"));
        let back: MoebiusMap = serde_json::from_str(&s).unwrap();
        assert!(proj_dist(&m, &back) == 0.0);

        let aut = DiskAutomorphism::new(Complex64::I, c(0.3, 0.0)).unwrap();
        let s = serde_json::to_string(&aut).unwrap();
        assert!(s.contains("\"lambda\":[") && s.contains("\"a\":["));
    }
}
