//! Quasiregular analogues of power and Chebyshev maps, obtained by
//! conjugating a conformal linear map A = λ·O through a strongly
//! automorphic map h: the composition f = h ∘ A ∘ h⁻¹ is single-valued
//! precisely because A conjugates the invariance group of h into itself.
//!
//! The module provides:
//!
//! * [`PowerMap`]: exponential-type conjugation, the analogue of w ↦ w^d
//!   (fixing 0 and ∞);
//! * [`ChebMap`]: sine-type conjugation, the analogue of the degree-d
//!   Chebyshev polynomial;
//! * [`HdMap`]: the Joukowsky-type family h_d = S ∘ (d · Z⁻¹), whose d = 1
//!   member semi-conjugates power maps to Chebyshev maps;
//! * [`Involution`]: the inversion-like map exchanging the inside and
//!   outside of the unit sphere, commuting with every h_d;
//! * [`LiftedMap`]: the branch-selected lift h₁⁻¹ ∘ f ∘ h₁ of a Chebyshev
//!   map, which recovers the power map;
//! * [`DeformedMap`]: quasiconformal conjugations (shear, twist, radial
//!   stretch) used to produce maps with larger distortion but the same
//!   qualitative dynamics;
//! * [`linearize`]: local linearizers L with L ∘ φ = f ∘ L at fixed points
//!   coming from the automorphic construction.

use serde::{Deserialize, Serialize};

use crate::automorphic::{AutomorphicMap, MapKind};
use crate::crystal::CrystGroup;
use crate::error::{Error, Result};
use crate::geometry::{chordal_distance, ExtendedPoint, Isometry, Mat, Point};

/// Preimages closer than this are considered merged, which makes the
/// target degenerate (it lies on or too near the branch set image).
pub const PREIMAGE_DEDUP_TOL: f64 = 1e-6;

/// Forward-evaluation residual allowed for a reported preimage.
pub const PREIMAGE_RESIDUAL_TOL: f64 = 1e-8;

/// Tolerance for matching a fixed point to a group orbit when building
/// linearizers.
pub const FIXED_POINT_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Conformal linear automorphisms
// ---------------------------------------------------------------------------

/// A(x) = scale · O(x) with O special orthogonal and scale > 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConformalAutomorphism<const N: usize> {
    pub scale: f64,
    pub orthogonal: Mat<N>,
}

impl<const N: usize> ConformalAutomorphism<N> {
    pub fn new(scale: f64, orthogonal: Mat<N>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig("automorphism scale must be positive".into()));
        }
        if !orthogonal.is_special_orthogonal(1e-9) {
            return Err(Error::InvalidConfig(
                "automorphism rotation part must be special orthogonal".into(),
            ));
        }
        Ok(Self { scale, orthogonal })
    }

    /// The pure scaling x ↦ d · x.
    pub fn scaling(d: f64) -> Result<Self> {
        Self::new(d, Mat::identity())
    }

    pub fn apply(&self, x: &Point<N>) -> Point<N> {
        self.orthogonal.apply(x).scale(self.scale)
    }

    pub fn invert(&self) -> Self {
        Self { scale: 1.0 / self.scale, orthogonal: self.orthogonal.transpose() }
    }
}

// ---------------------------------------------------------------------------
// The common map interface
// ---------------------------------------------------------------------------

/// A map of the one-point compactification R^N ∪ {∞} that the dynamics
/// layer can iterate.
pub trait UqrMap<const N: usize>: Send + Sync {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>>;
    /// Generic number of preimages of a regular value.
    fn degree(&self) -> usize;
    fn label(&self) -> String;

    fn eval_point(&self, x: &Point<N>) -> Result<ExtendedPoint<N>> {
        self.eval_ext(&ExtendedPoint::Finite(*x))
    }
}

/// Translation representatives of L / dL: one lattice point for each coset
/// of the scaled lattice, used to enumerate preimage branches.
fn lattice_cosets<const N: usize>(group: &CrystGroup<N>, d: usize) -> Vec<Point<N>> {
    let mut reps = vec![Point::zero()];
    for v in &group.lattice {
        let mut next = Vec::with_capacity(reps.len() * d);
        for r in &reps {
            for k in 0..d {
                next.push(*r + v.scale(k as f64));
            }
        }
        reps = next;
    }
    reps
}

/// Deduplicate candidate preimages; a pair closer than the tolerance means
/// the target sits on a critical value, which is an error for callers
/// expecting a full fibre.
fn dedupe_fibre<const N: usize>(mut pts: Vec<Point<N>>, expected: usize) -> Result<Vec<Point<N>>> {
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut min_sep = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            min_sep = min_sep.min(pts[i].dist(&pts[j]));
        }
    }
    if min_sep < PREIMAGE_DEDUP_TOL {
        return Err(Error::DegenerateTarget { separation: min_sep });
    }
    if pts.len() != expected {
        return Err(Error::Precondition(format!(
            "expected {expected} preimages, enumerated {}",
            pts.len()
        )));
    }
    Ok(pts)
}

fn check_forward_residuals<const N: usize>(
    map: &dyn UqrMap<N>,
    y: &Point<N>,
    pts: &[Point<N>],
) -> Result<()> {
    for p in pts {
        let fv = map.eval_point(p)?;
        let resid = chordal_distance(&fv, &ExtendedPoint::Finite(*y));
        if resid > PREIMAGE_RESIDUAL_TOL {
            return Err(Error::Precondition(format!(
                "preimage candidate {:?} has forward residual {resid:e}",
                p.0
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Power maps
// ---------------------------------------------------------------------------

/// f = Z ∘ A ∘ Z⁻¹ over an exponential-type map Z: the quasiregular
/// analogue of w ↦ w^d, fixing 0 and ∞.
#[derive(Debug, Clone)]
pub struct PowerMap<const N: usize> {
    pub automorphic: AutomorphicMap<N>,
    pub a: ConformalAutomorphism<N>,
}

impl<const N: usize> PowerMap<N> {
    pub fn new(automorphic: AutomorphicMap<N>, a: ConformalAutomorphism<N>) -> Result<Self> {
        if automorphic.kind != MapKind::Zorich {
            return Err(Error::InvalidConfig("power maps need an exponential-type map".into()));
        }
        if a.scale <= 1.0 + 1e-12 && a.orthogonal.is_special_orthogonal(0.0)
            && a.orthogonal.max_abs_diff(&Mat::identity()) < 1e-12
            && (a.scale - 1.0).abs() < 1e-12
        {
            return Err(Error::InvalidConfig(
                "scale 1 with trivial rotation gives the identity, not a power map".into(),
            ));
        }
        let cert = automorphic.group.check_admissible(a.scale, &a.orthogonal);
        if !cert.admissible {
            let why: Vec<String> = cert
                .checks
                .iter()
                .filter(|c| !c.ok)
                .map(|c| format!("{}: {}", c.generator, c.detail))
                .collect();
            return Err(Error::NotAdmissible(why.join("; ")));
        }
        Ok(Self { automorphic, a })
    }

    /// The standard degree-d analogue (A = d · id).
    pub fn standard(automorphic: AutomorphicMap<N>, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidConfig("power maps need degree at least 2".into()));
        }
        Self::new(automorphic, ConformalAutomorphism::scaling(d as f64)?)
    }

    /// Residual of the defining equation f(Z(x)) = Z(A(x)) at x.
    pub fn functional_equation_residual(&self, x: &Point<N>) -> Result<f64> {
        let lhs = self.eval_point(&self.automorphic.eval(x)?)?;
        let rhs = self.automorphic.eval(&self.a.apply(x))?;
        Ok(chordal_distance(&lhs, &ExtendedPoint::Finite(rhs)))
    }

    /// The full fibre over a finite nonzero target.
    pub fn preimages(&self, y: &Point<N>) -> Result<Vec<Point<N>>> {
        let d = integral_scale(&self.a)?;
        if y.norm() == 0.0 {
            return Err(Error::OmittedValue(
                "0 is omitted by the exponential map; its fibre is empty".into(),
            ));
        }
        let x = self.automorphic.invert(y)?;
        let inv = self.a.invert();
        let mut pts = Vec::new();
        for rep in lattice_cosets(&self.automorphic.group, d) {
            pts.push(self.automorphic.eval(&inv.apply(&(x + rep)))?);
        }
        let pts = dedupe_fibre(pts, self.degree())?;
        check_forward_residuals(self, y, &pts)?;
        Ok(pts)
    }
}

fn integral_scale<const N: usize>(a: &ConformalAutomorphism<N>) -> Result<usize> {
    let d = a.scale.round();
    if (a.scale - d).abs() > 1e-12 || d < 1.0 {
        return Err(Error::Precondition(
            "fibre enumeration is implemented for integer scales".into(),
        ));
    }
    if a.orthogonal.max_abs_diff(&Mat::identity()) > 1e-12 {
        return Err(Error::Precondition(
            "fibre enumeration is implemented for pure scalings".into(),
        ));
    }
    Ok(d as usize)
}

impl<const N: usize> UqrMap<N> for PowerMap<N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        match x {
            ExtendedPoint::Infinity => Ok(ExtendedPoint::Infinity),
            ExtendedPoint::Finite(p) => {
                if p.norm() == 0.0 {
                    return Ok(ExtendedPoint::Finite(Point::zero()));
                }
                let x = self.automorphic.invert(p)?;
                Ok(ExtendedPoint::Finite(self.automorphic.eval(&self.a.apply(&x))?))
            }
        }
    }

    fn degree(&self) -> usize {
        (self.a.scale.round() as usize).pow(N as u32 - 1)
    }

    fn label(&self) -> String {
        format!("power (scale {}, dimension {N})", self.a.scale)
    }
}

// ---------------------------------------------------------------------------
// Chebyshev maps
// ---------------------------------------------------------------------------

/// f = S ∘ A ∘ S⁻¹ over a sine-type map S: the quasiregular analogue of
/// the Chebyshev polynomial T_d.
#[derive(Debug, Clone)]
pub struct ChebMap<const N: usize> {
    pub automorphic: AutomorphicMap<N>,
    pub a: ConformalAutomorphism<N>,
}

impl<const N: usize> ChebMap<N> {
    pub fn new(automorphic: AutomorphicMap<N>, a: ConformalAutomorphism<N>) -> Result<Self> {
        if automorphic.kind != MapKind::Sine {
            return Err(Error::InvalidConfig("Chebyshev maps need a sine-type map".into()));
        }
        let cert = automorphic.group.check_admissible(a.scale, &a.orthogonal);
        if !cert.admissible {
            let why: Vec<String> = cert
                .checks
                .iter()
                .filter(|c| !c.ok)
                .map(|c| format!("{}: {}", c.generator, c.detail))
                .collect();
            return Err(Error::NotAdmissible(why.join("; ")));
        }
        Ok(Self { automorphic, a })
    }

    pub fn standard(automorphic: AutomorphicMap<N>, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidConfig("Chebyshev maps need degree at least 2".into()));
        }
        Self::new(automorphic, ConformalAutomorphism::scaling(d as f64)?)
    }

    /// Residual of the defining equation f(S(x)) = S(A(x)) at x.
    pub fn functional_equation_residual(&self, x: &Point<N>) -> Result<f64> {
        let lhs = self.eval_point(&self.automorphic.eval(x)?)?;
        let rhs = self.automorphic.eval(&self.a.apply(x))?;
        Ok(chordal_distance(&lhs, &ExtendedPoint::Finite(rhs)))
    }

    /// The full fibre over a finite target.
    pub fn preimages(&self, y: &Point<N>) -> Result<Vec<Point<N>>> {
        let d = integral_scale(&self.a)?;
        let x = self.automorphic.invert(y)?;
        let inv = self.a.invert();
        let mut pts = Vec::new();
        for rep in lattice_cosets(&self.automorphic.group, d) {
            pts.push(self.automorphic.eval(&inv.apply(&(x + rep)))?);
        }
        let pts = dedupe_fibre(pts, self.degree())?;
        check_forward_residuals(self, y, &pts)?;
        Ok(pts)
    }
}

impl<const N: usize> UqrMap<N> for ChebMap<N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        match x {
            ExtendedPoint::Infinity => Ok(ExtendedPoint::Infinity),
            ExtendedPoint::Finite(p) => {
                let x = self.automorphic.invert(p)?;
                Ok(ExtendedPoint::Finite(self.automorphic.eval(&self.a.apply(&x))?))
            }
        }
    }

    fn degree(&self) -> usize {
        (self.a.scale.round() as usize).pow(N as u32 - 1)
    }

    fn label(&self) -> String {
        format!("chebyshev (scale {}, dimension {N})", self.a.scale)
    }
}

// ---------------------------------------------------------------------------
// Joukowsky-type maps h_d = S ∘ (d · Z⁻¹)
// ---------------------------------------------------------------------------

/// h_d(y) = S(d · Z⁻¹(y)), the analogue of w ↦ (w^d + w^{-d})/2; h₁ is the
/// Joukowsky-type semi-conjugacy from power maps to Chebyshev maps.
#[derive(Debug, Clone)]
pub struct HdMap<const N: usize> {
    pub zorich: AutomorphicMap<N>,
    pub sine: AutomorphicMap<N>,
    pub d: usize,
}

impl<const N: usize> HdMap<N> {
    pub fn new(zorich: AutomorphicMap<N>, sine: AutomorphicMap<N>, d: usize) -> Result<Self> {
        if zorich.kind != MapKind::Zorich || sine.kind != MapKind::Sine {
            return Err(Error::InvalidConfig(
                "the Joukowsky family composes a sine-type with an exponential-type inverse".into(),
            ));
        }
        if d < 1 {
            return Err(Error::InvalidConfig("the Joukowsky family needs d ≥ 1".into()));
        }
        Ok(Self { zorich, sine, d })
    }

    /// The full fibre over a finite target: translation cosets paired with
    /// the end-switching flip, 2 d^{N-1} points in all.
    pub fn preimages(&self, y: &Point<N>) -> Result<Vec<Point<N>>> {
        let x = self.sine.invert(y)?;
        let flip = self
            .sine
            .group
            .beam_rotation
            .ok_or_else(|| Error::Precondition("sine group must carry a beam rotation".into()))?;
        let d = self.d as f64;
        let mut pts = Vec::new();
        for rep in lattice_cosets(&self.sine.group, self.d) {
            for base in [x, flip.apply(&x)] {
                pts.push(self.zorich.eval(&(base + rep).scale(1.0 / d))?);
            }
        }
        let pts = dedupe_fibre(pts, self.degree())?;
        check_forward_residuals(self, y, &pts)?;
        Ok(pts)
    }
}

impl<const N: usize> UqrMap<N> for HdMap<N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        match x {
            ExtendedPoint::Infinity => Ok(ExtendedPoint::Infinity),
            ExtendedPoint::Finite(p) => {
                if p.norm() == 0.0 {
                    return Ok(ExtendedPoint::Infinity);
                }
                let z = self.zorich.invert(p)?;
                Ok(ExtendedPoint::Finite(self.sine.eval(&z.scale(self.d as f64))?))
            }
        }
    }

    fn degree(&self) -> usize {
        2 * self.d.pow(N as u32 - 1)
    }

    fn label(&self) -> String {
        format!("joukowsky h_{} (dimension {N})", self.d)
    }
}

// ---------------------------------------------------------------------------
// The involution
// ---------------------------------------------------------------------------

/// I = Z ∘ R ∘ Z⁻¹ for the end-switching rotation R: concretely
/// I(y) = (y₁, …, -y_N) / |y|², an inversion composed with a reflection.
/// It swaps 0 and ∞ and satisfies h_d ∘ I = h_d.
#[derive(Debug, Clone, Copy, Default)]
pub struct Involution<const N: usize>;

impl<const N: usize> Involution<N> {
    pub fn apply(&self, y: &Point<N>) -> Result<Point<N>> {
        let m = y.norm_inf();
        if m == 0.0 {
            return Err(Error::OmittedValue("the involution sends 0 to infinity".into()));
        }
        // Scale by the largest coordinate so |y|² never overflows.
        let mut c = y.0;
        let mut nsq = 0.0;
        for v in &mut c {
            *v /= m;
            nsq += *v * *v;
        }
        let denom = m * nsq;
        for v in &mut c {
            *v /= denom;
        }
        c[N - 1] = -c[N - 1];
        Ok(Point(c))
    }
}

impl<const N: usize> UqrMap<N> for Involution<N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        match x {
            ExtendedPoint::Infinity => Ok(ExtendedPoint::Finite(Point::zero())),
            ExtendedPoint::Finite(p) => {
                if p.norm() == 0.0 {
                    Ok(ExtendedPoint::Infinity)
                } else {
                    Ok(ExtendedPoint::Finite(self.apply(p)?))
                }
            }
        }
    }

    fn degree(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        format!("involution (dimension {N})")
    }
}

// ---------------------------------------------------------------------------
// Lifting a Chebyshev map through h₁
// ---------------------------------------------------------------------------

/// The branch-selected lift h₁⁻¹ ∘ f ∘ h₁ of a Chebyshev map f, which
/// recovers the corresponding power map: the branch of h₁⁻¹ is chosen to
/// keep the iterate on the same side of the unit sphere as the input.
#[derive(Debug, Clone)]
pub struct LiftedMap<const N: usize> {
    pub cheb: ChebMap<N>,
    pub h1: HdMap<N>,
}

impl<const N: usize> LiftedMap<N> {
    pub fn new(cheb: ChebMap<N>, h1: HdMap<N>) -> Result<Self> {
        if h1.d != 1 {
            return Err(Error::InvalidConfig("lifting uses the d = 1 Joukowsky map".into()));
        }
        Ok(Self { cheb, h1 })
    }
}

impl<const N: usize> UqrMap<N> for LiftedMap<N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        let w = match x {
            ExtendedPoint::Infinity => return Ok(ExtendedPoint::Infinity),
            ExtendedPoint::Finite(p) if p.norm() == 0.0 => {
                return Ok(ExtendedPoint::Finite(Point::zero()))
            }
            ExtendedPoint::Finite(p) => p,
        };
        let y = match self.h1.eval_point(w)? {
            ExtendedPoint::Finite(y) => y,
            ExtendedPoint::Infinity => return Ok(ExtendedPoint::Infinity),
        };
        let fy = match self.cheb.eval_point(&y)? {
            ExtendedPoint::Finite(v) => v,
            ExtendedPoint::Infinity => return Ok(ExtendedPoint::Infinity),
        };
        // Normalize the sine preimage to beam height t ≥ 0 (the planar
        // inverse signs t by the last coordinate of the target); the
        // exponential of it then lies on or outside the unit sphere.
        let mut xs = self.cheb.automorphic.invert(&fy)?;
        if xs.0[N - 1] < 0.0 {
            if let Some(flip) = self.cheb.automorphic.group.beam_rotation {
                xs = flip.apply(&xs);
            }
        }
        let outside = self.h1.zorich.eval(&xs)?;
        if w.norm_sq() >= 1.0 {
            Ok(ExtendedPoint::Finite(outside))
        } else {
            Ok(ExtendedPoint::Finite(Involution.apply(&outside)?))
        }
    }

    fn degree(&self) -> usize {
        self.cheb.degree()
    }

    fn label(&self) -> String {
        format!("lift of {}", self.cheb.label())
    }
}

// ---------------------------------------------------------------------------
// Quasiconformal deformations
// ---------------------------------------------------------------------------

/// A quasiconformal change of coordinates ψ used to conjugate a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum QcDeformation {
    /// Linear shear (y₁, y₂, …) ↦ (y₁ + s·y₂, y₂, …); fixes 0 and ∞.
    Shear { strength: f64 },
    /// Rotation of the first two coordinates by angle · ln|y|.
    Twist { angle: f64 },
    /// Radial stretch y ↦ |y|^{exponent-1} y for exponent > 0.
    RadialPower { exponent: f64 },
}

impl QcDeformation {
    pub fn validate(&self) -> Result<()> {
        match self {
            QcDeformation::Shear { strength } | QcDeformation::Twist { angle: strength } => {
                if !strength.is_finite() {
                    return Err(Error::InvalidConfig("deformation parameter must be finite".into()));
                }
            }
            QcDeformation::RadialPower { exponent } => {
                if !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidConfig(
                        "radial deformation exponent must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn apply<const N: usize>(&self, y: &Point<N>) -> Point<N> {
        match *self {
            QcDeformation::Shear { strength } => {
                let mut c = y.0;
                c[0] += strength * c[1];
                Point(c)
            }
            QcDeformation::Twist { angle } => twist(y, angle),
            QcDeformation::RadialPower { exponent } => radial_power(y, exponent),
        }
    }

    pub fn apply_inverse<const N: usize>(&self, y: &Point<N>) -> Point<N> {
        match *self {
            QcDeformation::Shear { strength } => {
                let mut c = y.0;
                c[0] -= strength * c[1];
                Point(c)
            }
            QcDeformation::Twist { angle } => twist(y, -angle),
            QcDeformation::RadialPower { exponent } => radial_power(y, 1.0 / exponent),
        }
    }
}

fn twist<const N: usize>(y: &Point<N>, angle: f64) -> Point<N> {
    let r = y.norm();
    if r == 0.0 {
        return *y;
    }
    let phi = angle * r.ln();
    let (s, c) = phi.sin_cos();
    let mut out = y.0;
    out[0] = c * y.0[0] - s * y.0[1];
    out[1] = s * y.0[0] + c * y.0[1];
    Point(out)
}

fn radial_power<const N: usize>(y: &Point<N>, exponent: f64) -> Point<N> {
    let r = y.norm();
    if r == 0.0 {
        return *y;
    }
    y.scale(r.powf(exponent - 1.0))
}

/// ψ ∘ f ∘ ψ⁻¹ for a quasiconformal coordinate change ψ.
pub struct DeformedMap<const N: usize> {
    pub inner: Box<dyn UqrMap<N>>,
    pub deformation: QcDeformation,
}

impl<const N: usize> DeformedMap<N> {
    pub fn new(inner: Box<dyn UqrMap<N>>, deformation: QcDeformation) -> Result<Self> {
        deformation.validate()?;
        Ok(Self { inner, deformation })
    }
}

impl<const N: usize> UqrMap<N> for DeformedMap<N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        let pulled = match x {
            ExtendedPoint::Infinity => ExtendedPoint::Infinity,
            ExtendedPoint::Finite(p) => ExtendedPoint::Finite(self.deformation.apply_inverse(p)),
        };
        Ok(match self.inner.eval_ext(&pulled)? {
            ExtendedPoint::Infinity => ExtendedPoint::Infinity,
            ExtendedPoint::Finite(p) => ExtendedPoint::Finite(self.deformation.apply(&p)),
        })
    }

    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn label(&self) -> String {
        format!("{} deformed by {:?}", self.inner.label(), self.deformation)
    }
}

// ---------------------------------------------------------------------------
// Linearizers
// ---------------------------------------------------------------------------

/// A local linearizer at a fixed point y* = h(x*): L(v) = h(x* + v)
/// satisfies L ∘ φ = f ∘ L for the conformal map φ.
#[derive(Debug, Clone)]
pub struct Linearizer<const N: usize> {
    automorphic: AutomorphicMap<N>,
    pub base_point: Point<N>,
    pub fixed_value: Point<N>,
    pub phi: ConformalAutomorphism<N>,
    /// The group element carrying x* to A(x*).
    pub witness: Isometry<N>,
}

impl<const N: usize> Linearizer<N> {
    pub fn eval(&self, v: &Point<N>) -> Result<Point<N>> {
        self.automorphic.eval(&(self.base_point + *v))
    }

    /// Residual of L(φ(v)) = f(L(v)), with the right side computed through
    /// the functional equation as h(A(x* + v)).
    pub fn conjugacy_residual(&self, v: &Point<N>) -> Result<f64> {
        let lhs = self.eval(&self.phi.apply(v))?;
        let rhs = self.automorphic.eval(&self.a_image(v))?;
        Ok(chordal_distance(&ExtendedPoint::Finite(lhs), &ExtendedPoint::Finite(rhs)))
    }

    /// A(x* + v), recovering A = Q₀ ∘ φ from the stored pieces.
    fn a_image(&self, v: &Point<N>) -> Point<N> {
        let w = self.base_point + *v;
        self.witness.rotation.apply(&self.phi.apply(&w))
    }
}

/// Build the linearizer of f = h ∘ A ∘ h⁻¹ at the fixed point h(x*).
///
/// Requires A(x*) to lie on the group orbit of x* (that is what makes
/// h(x*) fixed), and the stabilizer of x* to be trivial (so the
/// linearizer is injective near 0).  The conjugating map is
/// φ = Q₀ᵀ ∘ A where g₀ = (Q₀, τ₀) is the orbit witness.
pub fn linearize<const N: usize>(
    h: &AutomorphicMap<N>,
    a: &ConformalAutomorphism<N>,
    x_star: &Point<N>,
) -> Result<Linearizer<N>> {
    if x_star.0[N - 1].abs() > 1e-12 {
        return Err(Error::Precondition(
            "linearization base points live in the transverse hyperplane".into(),
        ));
    }
    let target = a.apply(x_star);
    let witness = match h.group.find_element_mapping(x_star, &target, FIXED_POINT_TOL) {
        Some(g) => g,
        None => {
            return Err(Error::NotAFixedPoint { miss: h.group.orbit_miss(x_star, &target) });
        }
    };
    let stab = h.group.stabilizer(x_star);
    if stab.len() > 1 {
        return Err(Error::NontrivialStabilizer { order: stab.len() });
    }
    let phi = ConformalAutomorphism {
        scale: a.scale,
        orthogonal: witness.rotation.transpose().matmul(&a.orthogonal),
    };
    Ok(Linearizer {
        automorphic: h.clone(),
        base_point: *x_star,
        fixed_value: h.eval(x_star)?,
        phi,
        witness,
    })
}

// ---------------------------------------------------------------------------
