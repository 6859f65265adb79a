//! Strongly automorphic maps: the exponential-type (Zorich) and sine-type
//! maps of R^2 and R^3 that semi-conjugate crystallographic groups to
//! conformal linear maps.
//!
//! Writing a point as (x', t) with transverse part x' and beam coordinate
//! t = x_{N-1}:
//!
//! * dimension 2, exponential: Z(x₁, t) = e^t (cos x₁, sin x₁);
//! * dimension 2, sine:        S(x₁, t) = (cos x₁ cosh t, sin x₁ sinh t);
//! * dimension 3, exponential: Z(x', t) = e^t u(x') with u the pillowcase
//!   quotient map of the half-turn group onto the unit sphere;
//! * dimension 3, sine:        S(x', t) = e^|t| (u₁, u₂, sgn(t) μ(|t|) u₃)
//!   with the profile μ(s) = sin(πs/2) capped at 1, so level sets are
//!   nested spheroids flattening onto the unit disk at t = 0 and the map
//!   doubles exactly under t ↦ t + ln 2 once |t| ≥ 1.
//!
//! Each map h satisfies h ∘ g = h for every g in its group, which is what
//! makes the conjugated power and Chebyshev analogues single-valued.

use serde::{Deserialize, Serialize};

use crate::crystal::{self, CrystGroup, GroupKind};
use crate::error::{Error, Result};
use crate::geometry::{ExtendedPoint, Point};

/// Beam heights are clamped to this magnitude: e^700 is still finite in
/// f64, while e^(-700) would underflow exponential values to zero.
pub const BEAM_LIMIT: f64 = 700.0;

const PI: f64 = std::f64::consts::PI;
const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

/// Vertical profile of the spatial sine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SineProfile {
    /// Piecewise profile sin(πs/2) ∧ 1: exact doubling beyond |t| = 1.
    #[default]
    Cell,
    /// Smooth profile (cosh t · u₁, cosh t · u₂, sinh t · u₃), the direct
    /// analogue of the planar sine; doubling holds only asymptotically, so
    /// callers should surface the extra distortion this introduces.
    Averaged,
}

/// Which construction a map realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Zorich,
    Sine,
}

/// A strongly automorphic map R^N → R^N.
#[derive(Debug, Clone)]
pub struct AutomorphicMap<const N: usize> {
    /// The full invariance group G (for sine maps this includes the
    /// beam-flipping elements).
    pub group: CrystGroup<N>,
    pub kind: MapKind,
    pub profile: SineProfile,
    /// Transverse reduction used during evaluation.  For the spatial sine
    /// map this is the half-turn subgroup: the extra mirror symmetry is
    /// realized by the formula itself rather than by reduction.
    eval_group: CrystGroup<N>,
}

impl AutomorphicMap<2> {
    pub fn zorich(group: CrystGroup<2>) -> Result<Self> {
        if group.kind != GroupKind::TranslationLine {
            return Err(Error::InvalidConfig(
                "the planar exponential map needs the translation-line group".into(),
            ));
        }
        Ok(Self { eval_group: group.clone(), group, kind: MapKind::Zorich, profile: SineProfile::Cell })
    }

    pub fn sine(group: CrystGroup<2>) -> Result<Self> {
        if group.kind != GroupKind::FoldedLine {
            return Err(Error::InvalidConfig(
                "the planar sine map needs the folded-line group".into(),
            ));
        }
        Ok(Self { eval_group: group.clone(), group, kind: MapKind::Sine, profile: SineProfile::Cell })
    }
}

impl AutomorphicMap<3> {
    pub fn zorich(group: CrystGroup<3>) -> Result<Self> {
        if group.kind != GroupKind::P2 {
            return Err(Error::InvalidConfig(
                "the spatial exponential map needs the half-turn group p2".into(),
            ));
        }
        Ok(Self { eval_group: group.clone(), group, kind: MapKind::Zorich, profile: SineProfile::Cell })
    }

    pub fn sine(group: CrystGroup<3>, profile: SineProfile) -> Result<Self> {
        if group.kind != GroupKind::P2Sine {
            return Err(Error::InvalidConfig(
                "the spatial sine map needs the mirror-extended group p2-sine".into(),
            ));
        }
        Ok(Self { eval_group: crystal::p2(), group, kind: MapKind::Sine, profile })
    }
}

impl<const N: usize> AutomorphicMap<N> {
    /// Values never attained by the map.
    pub fn omitted_values(&self) -> Vec<ExtendedPoint<N>> {
        match self.kind {
            MapKind::Zorich => vec![ExtendedPoint::Finite(Point::zero()), ExtendedPoint::Infinity],
            MapKind::Sine => vec![ExtendedPoint::Infinity],
        }
    }

    fn guard_beam(t: f64) -> Result<()> {
        if t.abs() > BEAM_LIMIT {
            return Err(Error::RangeOverflow { height: t, limit: BEAM_LIMIT });
        }
        Ok(())
    }

    /// Evaluate the map.
    pub fn eval(&self, x: &Point<N>) -> Result<Point<N>> {
        if !x.is_finite() {
            return Err(Error::Precondition("evaluation point must be finite".into()));
        }
        let t = x.0[N - 1];
        Self::guard_beam(t)?;
        let mut out = [0.0; N];
        match (N, self.kind) {
            (2, MapKind::Zorich) => {
                let e = t.exp();
                out[0] = e * x.0[0].cos();
                out[1] = e * x.0[0].sin();
            }
            (2, MapKind::Sine) => {
                out[0] = x.0[0].cos() * t.cosh();
                out[1] = x.0[0].sin() * t.sinh();
            }
            (3, MapKind::Zorich) => {
                let (xhat, _) = self.eval_group.reduce(x);
                let u = pillowcase_embed_coords(xhat.0[0], xhat.0[1]);
                let e = t.exp();
                for i in 0..3 {
                    out[i] = e * u[i];
                }
            }
            (3, MapKind::Sine) => {
                let (xhat, _) = self.eval_group.reduce(x);
                let u = pillowcase_embed_coords(xhat.0[0], xhat.0[1]);
                match self.profile {
                    SineProfile::Cell => {
                        let e = t.abs().exp();
                        out[0] = e * u[0];
                        out[1] = e * u[1];
                        out[2] = e * t.signum() * sine_mu(t.abs()) * u[2];
                    }
                    SineProfile::Averaged => {
                        let ch = t.cosh();
                        out[0] = ch * u[0];
                        out[1] = ch * u[1];
                        out[2] = t.sinh() * u[2];
                    }
                }
            }
            _ => unreachable!("maps exist only in dimensions 2 and 3"),
        }
        Ok(Point(out))
    }

    /// Canonical preimage of `y`.
    ///
    /// The representative has its transverse part in the fundamental
    /// polytope of the evaluation group; sine preimages take non-negative
    /// beam coordinate, exponential ones have beam ln|y|.  All other
    /// preimages are the group orbit of the returned point.
    pub fn invert(&self, y: &Point<N>) -> Result<Point<N>> {
        if !y.is_finite() {
            return Err(Error::Precondition("target must be finite".into()));
        }
        let mut out = [0.0; N];
        match (N, self.kind) {
            (2, MapKind::Zorich) => {
                let r = y.norm();
                if r == 0.0 {
                    return Err(Error::OmittedValue("the exponential map never vanishes".into()));
                }
                let mut theta = y.0[1].atan2(y.0[0]);
                if theta < 0.0 {
                    theta += 2.0 * PI;
                }
                out[0] = theta;
                out[1] = safe_ln_norm(y);
            }
            (2, MapKind::Sine) => {
                let (x1, t) = invert_cosh_ellipse(y.0[0], y.0[1], y.norm_inf());
                out[0] = x1;
                out[1] = t;
            }
            (3, MapKind::Zorich) => {
                let r = y.norm();
                if r == 0.0 {
                    return Err(Error::OmittedValue("the exponential map never vanishes".into()));
                }
                let m = y.norm_inf();
                let u = [y.0[0] / m, y.0[1] / m, y.0[2] / m];
                let x = pillowcase_invert_coords(normalize3(u));
                out[0] = x[0];
                out[1] = x[1];
                out[2] = safe_ln_norm(y);
            }
            (3, MapKind::Sine) => {
                let y3 = Point::new([y.0[0], y.0[1], y.0[2]]);
                let (x1, x2, t) = match self.profile {
                    SineProfile::Cell => invert_sine_cell(&y3)?,
                    SineProfile::Averaged => invert_sine_averaged(&y3)?,
                };
                out[0] = x1;
                out[1] = x2;
                out[2] = t;
            }
            _ => unreachable!("maps exist only in dimensions 2 and 3"),
        }
        Ok(Point(out))
    }

    /// Chordal distance between h(g(x)) and h(x): zero (to rounding) for
    /// every group element g.
    pub fn automorphy_defect(&self, x: &Point<N>, g: &crate::geometry::Isometry<N>) -> Result<f64> {
        let a = self.eval(&g.apply(x))?;
        let b = self.eval(x)?;
        Ok(crate::geometry::chordal_distance(
            &ExtendedPoint::Finite(a),
            &ExtendedPoint::Finite(b),
        ))
    }
}

/// ln|y| computed without overflowing |y|² for huge coordinates.
fn safe_ln_norm<const N: usize>(y: &Point<N>) -> f64 {
    let m = y.norm_inf();
    if m == 0.0 {
        return f64::NEG_INFINITY;
    }
    if m <= 1e140 {
        y.norm().ln()
    } else {
        let mut s = 0.0;
        for c in y.0 {
            let r = c / m;
            s += r * r;
        }
        m.ln() + 0.5 * s.ln()
    }
}

fn normalize3(u: [f64; 3]) -> [f64; 3] {
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    [u[0] / n, u[1] / n, u[2] / n]
}

/// Vertical profile: sin(πs/2) for s ≤ 1, then constant 1.  C¹ at the
/// splice since the sine has a critical point there.
pub fn sine_mu(s: f64) -> f64 {
    if s >= 1.0 {
        1.0
    } else {
        (FRAC_PI_2 * s).sin()
    }
}

// ---------------------------------------------------------------------------
// The pillowcase quotient map
// ---------------------------------------------------------------------------

/// Quotient map of the half-turn group onto the unit sphere, evaluated on
/// the fundamental polytope [-1,1] × [0,1].
///
/// The right half [0,1]² goes to the closed upper hemisphere: recentre to
/// v = (2x₁-1, 2x₂-1) ∈ [-1,1]², map the square to the disk radially so
/// the ∞-norm becomes the radius, then send radius r to colatitude πr/2.
/// The left half is the mirror image in the equator plane.  The whole
/// polytope boundary lands on the equator, and the four half-turn fixed
/// points become the four "pillowcase corners".
pub fn pillowcase_embed(x: &Point<3>) -> Point<3> {
    Point(pillowcase_embed_coords(x.0[0], x.0[1]))
}

fn pillowcase_embed_coords(x1: f64, x2: f64) -> [f64; 3] {
    if x1 >= 0.0 {
        hemisphere_embed(x1, x2)
    } else {
        let u = hemisphere_embed(-x1, x2);
        [u[0], u[1], -u[2]]
    }
}

/// [0,1]² onto the closed upper hemisphere.
fn hemisphere_embed(x1: f64, x2: f64) -> [f64; 3] {
    let v = [2.0 * x1 - 1.0, 2.0 * x2 - 1.0];
    let r = v[0].abs().max(v[1].abs());
    if r == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let vn = v[0].hypot(v[1]);
    let lat = FRAC_PI_2 * r;
    let scale = lat.sin() / vn;
    [scale * v[0], scale * v[1], lat.cos()]
}

/// Inverse of [`pillowcase_embed`]: returns the representative in the
/// fundamental polytope ([0,1]² for the upper hemisphere, mirrored to
/// negative x₁ for the lower one).
pub fn pillowcase_invert(u: &Point<3>) -> Point<3> {
    let c = pillowcase_invert_coords(normalize3(u.0));
    Point([c[0], c[1], 0.0])
}

fn pillowcase_invert_coords(u: [f64; 3]) -> [f64; 2] {
    if u[2] >= 0.0 {
        hemisphere_invert(u)
    } else {
        let x = hemisphere_invert([u[0], u[1], -u[2]]);
        [-x[0], x[1]]
    }
}

fn hemisphere_invert(u: [f64; 3]) -> [f64; 2] {
    let r = u[2].clamp(-1.0, 1.0).acos() / FRAC_PI_2;
    let hn = u[0].hypot(u[1]);
    if r == 0.0 || hn == 0.0 {
        return [0.5, 0.5];
    }
    let dir = [u[0] / hn, u[1] / hn];
    let scale = r / dir[0].abs().max(dir[1].abs());
    [(dir[0] * scale + 1.0) / 2.0, (dir[1] * scale + 1.0) / 2.0]
}

// ---------------------------------------------------------------------------
// Inversion of the sine maps
// ---------------------------------------------------------------------------

/// Solve cos(x₁) cosh(t) = a, sin(x₁) sinh(t) = b for x₁ ∈ [0, π], t ∈ R.
///
/// With S = sinh²t, the ellipse identity a²/(1+S) + b²/S = 1 gives
/// S² + (1 - a² - b²)S - b² = 0, solved in whichever form avoids
/// cancellation.  For b = 0 the slit convention picks t ≥ 0.
fn invert_cosh_ellipse(a: f64, b: f64, inf_norm: f64) -> (f64, f64) {
    if inf_norm > 1e140 {
        // Asymptotically cosh t ≈ sinh|t| ≈ |y| and cos x₁ ≈ a/|y|.
        let m = inf_norm;
        let (ra, rb) = (a / m, b / m);
        let n = ra.hypot(rb);
        let t = (m.ln() + n.ln() + std::f64::consts::LN_2) * if b < 0.0 { -1.0 } else { 1.0 };
        return ((ra / n).clamp(-1.0, 1.0).acos(), t);
    }
    let d = a * a + b * b - 1.0;
    let disc_sqrt = (d * d + 4.0 * b * b).sqrt();
    let s = if d >= 0.0 {
        (d + disc_sqrt) / 2.0
    } else {
        // Rationalized form: no cancellation when |y| < 1.
        2.0 * b * b / (disc_sqrt - d)
    };
    let sh = if b < 0.0 { -s.sqrt() } else { s.sqrt() };
    let ch = (1.0 + s).sqrt();
    ((a / ch).clamp(-1.0, 1.0).acos(), sh.asinh())
}

/// Invert the spatial sine map with the piecewise cell profile.
fn invert_sine_cell(y: &Point<3>) -> Result<(f64, f64, f64)> {
    let rho = y.0[0].hypot(y.0[1]);
    let m = y.norm_inf();
    if m > 1e140 {
        // Far outside the splice: a round sphere of radius e^t.
        let u = normalize3([y.0[0] / m, y.0[1] / m, y.0[2] / m]);
        let x = pillowcase_invert_coords(u);
        return Ok((x[0], x[1], safe_ln_norm(y)));
    }
    let nsq = y.norm_sq();
    if nsq >= std::f64::consts::E * std::f64::consts::E {
        // |y| ≥ e: the profile has saturated, level sets are spheres.
        let n = nsq.sqrt();
        let u = normalize3([y.0[0] / n, y.0[1] / n, y.0[2] / n]);
        let x = pillowcase_invert_coords(u);
        return Ok((x[0], x[1], n.ln()));
    }
    if y.0[2].abs() < 1e-290 {
        return if rho <= 1.0 {
            // Base disk: image of the upper hemisphere at t = 0.
            let u3 = (1.0 - rho * rho).max(0.0).sqrt();
            let x = pillowcase_invert_coords(normalize3([y.0[0], y.0[1], u3]));
            Ok((x[0], x[1], 0.0))
        } else {
            // Equator plane outside the disk: u is equatorial, e^t = ρ.
            let x = pillowcase_invert_coords(normalize3([y.0[0], y.0[1], 0.0]));
            Ok((x[0], x[1], rho.ln()))
        };
    }
    // Interior of the splice region: find the unique t ∈ (0, 1) with
    // e^{2t} = ρ² + (y₃/μ(t))².  The left side grows and the right side
    // shrinks in t, so g below is strictly increasing; bisect in log t.
    let g = |t: f64| -> f64 {
        let q = y.0[2] / sine_mu(t);
        (2.0 * t).exp() - rho * rho - q * q
    };
    let (mut lo, mut hi) = (-690.0_f64, 0.0_f64);
    debug_assert!(g(lo.exp()) < 0.0 && g(hi.exp()) >= 0.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let t = (0.5 * (lo + hi)).exp();
    let e = t.exp();
    let u = normalize3([y.0[0] / e, y.0[1] / e, y.0[2] / (e * sine_mu(t))]);
    let x = pillowcase_invert_coords(u);
    Ok((x[0], x[1], t))
}

/// Invert the averaged spatial sine profile: the cosh-ellipse system in
/// (ρ, y₃) followed by the pillowcase inverse.
fn invert_sine_averaged(y: &Point<3>) -> Result<(f64, f64, f64)> {
    let m = y.norm_inf();
    if m > 1e140 {
        let u = normalize3([y.0[0] / m, y.0[1] / m, y.0[2] / m]);
        let x = pillowcase_invert_coords(u);
        let t = safe_ln_norm(y) + std::f64::consts::LN_2;
        return Ok((x[0], x[1], t));
    }
    let d = y.norm_sq() - 1.0;
    let b = y.0[2];
    let disc_sqrt = (d * d + 4.0 * b * b).sqrt();
    let s = if d >= 0.0 { (d + disc_sqrt) / 2.0 } else { 2.0 * b * b / (disc_sqrt - d) };
    let sh = s.sqrt();
    let ch = (1.0 + s).sqrt();
    let u = if sh == 0.0 {
        // Base disk: u₃ recovered from the unit constraint, upper sign.
        let rho_sq = (y.0[0] * y.0[0] + y.0[1] * y.0[1]).min(1.0);
        [y.0[0] / ch, y.0[1] / ch, (1.0 - rho_sq / (ch * ch)).max(0.0).sqrt()]
    } else {
        [y.0[0] / ch, y.0[1] / ch, b / sh]
    };
    let x = pillowcase_invert_coords(normalize3(u));
    Ok((x[0], x[1], sh.asinh()))
}

// ---------------------------------------------------------------------------
