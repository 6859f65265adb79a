//! Crystallographic groups acting on the transverse hyperplane R^(N-1),
//! extended to R^N by acting trivially on the last ("beam") coordinate.
//!
//! The module provides the four built-in groups used by the map
//! constructions, canonical fundamental-domain reduction with a witnessing
//! group element, stabilizer and orbit enumeration, and the admissibility
//! check for conformal linear automorphisms A = λ·O (does A G A⁻¹ ⊆ G hold).
//!
//! Reduction conventions: translation-glued faces are half-open with the
//! lower face included; rotation- or reflection-folded faces keep the
//! representative with non-negative first coordinate.  `reduce` operates on
//! transverse coordinates only (the beam coordinate of its output is zero).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Isometry, Mat, Point};

/// Elements g with |g(x) - x| below this are treated as stabilizing x.
pub const STABILIZER_TOL: f64 = 1e-12;

/// Orbit points closer than this are merged.
pub const ORBIT_DEDUP_TOL: f64 = 1e-9;

/// Lattice membership / rotation matching tolerance for admissibility.
pub const ADMISSIBLE_TOL: f64 = 1e-9;

const TAU: f64 = std::f64::consts::TAU;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Which built-in reduction procedure a group uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupKind {
    /// ⟨x ↦ x + 2π⟩ on the line (planar exponential mode).
    TranslationLine,
    /// ⟨x ↦ x + 2π, x ↦ -x⟩ on the line (planar cosine mode).
    FoldedLine,
    /// Lattice (2,0), (0,2) with half-turns about integer points.
    P2,
    /// The p2 group together with the end-switching beam rotation
    /// R'(x₁, x₂, x₃) = (-x₁, x₂, -x₃); restricted to the transverse plane
    /// this adjoins the reflections of a rectangular mirror group.
    P2Sine,
}

/// Axis-aligned fundamental polytope for the transverse action.
///
/// Only the first N-1 coordinates are meaningful; the beam row is zero.
/// Face identifications are realized by [`CrystGroup::reduce`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FundamentalPolytope<const N: usize> {
    pub lower: Point<N>,
    pub upper: Point<N>,
}

impl<const N: usize> FundamentalPolytope<N> {
    /// Closed-box membership on transverse coordinates.
    pub fn contains(&self, x: &Point<N>, slack: f64) -> bool {
        for i in 0..N - 1 {
            if x.0[i] < self.lower.0[i] - slack || x.0[i] > self.upper.0[i] + slack {
                return false;
            }
        }
        true
    }

    /// The transverse faces as (axis, value) pairs, used for sampling
    /// continuity checks across gluings.
    pub fn faces(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for i in 0..N - 1 {
            out.push((i, self.lower.0[i]));
            out.push((i, self.upper.0[i]));
        }
        out
    }
}

/// A crystallographic group of R^(N-1), stored in ambient R^N form.
#[derive(Debug, Clone, Serialize)]
pub struct CrystGroup<const N: usize> {
    pub name: String,
    pub kind: GroupKind,
    /// Translation lattice basis (N-1 vectors, beam component zero,
    /// pairwise orthogonal for the built-ins).
    pub lattice: Vec<Point<N>>,
    /// Point-group representatives with their translation offsets,
    /// identity first.  Every group element is rep ∘ lattice translation.
    pub point_reps: Vec<Isometry<N>>,
    /// For sine-flavoured groups: the end-switching beam rotation.
    pub beam_rotation: Option<Isometry<N>>,
    pub polytope: FundamentalPolytope<N>,
}

/// Outcome of the admissibility check for A = λ·O.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityCertificate {
    pub admissible: bool,
    /// One entry per group generator; `ok == false` entries carry a reason.
    pub checks: Vec<GeneratorCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorCheck {
    pub generator: String,
    pub ok: bool,
    pub detail: String,
}

// ---------------------------------------------------------------------------
// Construction of the built-in groups
// ---------------------------------------------------------------------------

fn embed<const N: usize>(coords: &[f64]) -> Point<N> {
    let mut c = [0.0; N];
    for (i, v) in coords.iter().enumerate() {
        c[i] = *v;
    }
    Point(c)
}

/// ⟨x ↦ x + 2π⟩ acting on the line, beam coordinate untouched.
pub fn zorich2() -> CrystGroup<2> {
    CrystGroup {
        name: "zorich2".into(),
        kind: GroupKind::TranslationLine,
        lattice: vec![Point::new([TAU, 0.0])],
        point_reps: vec![Isometry::identity()],
        beam_rotation: None,
        polytope: FundamentalPolytope { lower: Point::new([0.0, 0.0]), upper: Point::new([TAU, 0.0]) },
    }
}

/// ⟨x ↦ x + 2π, x ↦ -x⟩ acting on the line, with beam rotation -id.
pub fn sine2() -> CrystGroup<2> {
    let flip = Isometry { rotation: Mat::diagonal([-1.0, -1.0]), translation: Point::zero() };
    CrystGroup {
        name: "sine2".into(),
        kind: GroupKind::FoldedLine,
        lattice: vec![Point::new([TAU, 0.0])],
        point_reps: vec![Isometry::identity(), flip],
        beam_rotation: Some(flip),
        polytope: FundamentalPolytope {
            lower: Point::new([0.0, 0.0]),
            upper: Point::new([std::f64::consts::PI, 0.0]),
        },
    }
}

/// Lattice (2,0), (0,2) with half-turns about every integer point.
pub fn p2() -> CrystGroup<3> {
    let half_turn = Isometry {
        rotation: Mat::diagonal([-1.0, -1.0, 1.0]),
        translation: Point::zero(),
    };
    CrystGroup {
        name: "p2".into(),
        kind: GroupKind::P2,
        lattice: vec![embed(&[2.0, 0.0]), embed(&[0.0, 2.0])],
        point_reps: vec![Isometry::identity(), half_turn],
        beam_rotation: None,
        polytope: FundamentalPolytope {
            lower: Point::new([-1.0, 0.0, 0.0]),
            upper: Point::new([1.0, 1.0, 0.0]),
        },
    }
}

/// p2 together with the beam rotation R'(x) = (-x₁, x₂, -x₃).
///
/// The transverse restriction adjoins mirror reflections, so the point
/// group becomes the Klein four-group and the transverse cell shrinks to
/// the unit square [0,1]².
pub fn p2_sine() -> CrystGroup<3> {
    let half_turn = Isometry {
        rotation: Mat::diagonal([-1.0, -1.0, 1.0]),
        translation: Point::zero(),
    };
    let beam_rot = Isometry {
        rotation: Mat::diagonal([-1.0, 1.0, -1.0]),
        translation: Point::zero(),
    };
    let product = Isometry {
        rotation: Mat::diagonal([1.0, -1.0, -1.0]),
        translation: Point::zero(),
    };
    CrystGroup {
        name: "p2-sine".into(),
        kind: GroupKind::P2Sine,
        lattice: vec![embed(&[2.0, 0.0]), embed(&[0.0, 2.0])],
        point_reps: vec![Isometry::identity(), half_turn, beam_rot, product],
        beam_rotation: Some(beam_rot),
        polytope: FundamentalPolytope {
            lower: Point::new([0.0, 0.0, 0.0]),
            upper: Point::new([1.0, 1.0, 0.0]),
        },
    }
}

/// Look up a built-in planar (N = 2) group by name.
pub fn builtin_2d(name: &str) -> Result<CrystGroup<2>> {
    match name {
        "zorich2" => Ok(zorich2()),
        "sine2" => Ok(sine2()),
        _ => Err(Error::InvalidConfig(format!("unknown 2d group '{name}'"))),
    }
}

/// Look up a built-in spatial (N = 3) group by name.
pub fn builtin_3d(name: &str) -> Result<CrystGroup<3>> {
    match name {
        "p2" => Ok(p2()),
        "p2-sine" => Ok(p2_sine()),
        _ => Err(Error::InvalidConfig(format!("unknown 3d group '{name}'"))),
    }
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

/// Wrap x into [lower, lower + period); returns (wrapped, k) with
/// x = wrapped + k * period.
fn wrap(x: f64, lower: f64, period: f64) -> (f64, f64) {
    let mut k = ((x - lower) / period).floor();
    let mut w = x - k * period;
    while w < lower {
        w += period;
        k -= 1.0;
    }
    while w >= lower + period {
        w -= period;
        k += 1.0;
    }
    (w, k)
}

impl<const N: usize> CrystGroup<N> {
    pub fn max_basis_norm(&self) -> f64 {
        self.lattice.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Transverse part of `x` (beam coordinate zeroed).
    fn transverse(x: &Point<N>) -> Point<N> {
        let mut c = x.0;
        c[N - 1] = 0.0;
        Point(c)
    }

    /// True when `x` is already a canonical representative.
    fn is_canonical(&self, x: &Point<N>) -> bool {
        let c = &x.0;
        match self.kind {
            GroupKind::TranslationLine => (0.0..TAU).contains(&c[0]),
            GroupKind::FoldedLine => (0.0..=std::f64::consts::PI).contains(&c[0]),
            GroupKind::P2 => {
                if c[1] == 0.0 || c[1] == 1.0 {
                    (0.0..=1.0).contains(&c[0])
                } else {
                    (0.0..1.0).contains(&c[1]) && (-1.0..1.0).contains(&c[0])
                }
            }
            GroupKind::P2Sine => (0.0..=1.0).contains(&c[0]) && (0.0..=1.0).contains(&c[1]),
        }
    }

    /// Reduce the transverse coordinates of `x` to the canonical
    /// fundamental set, returning the representative and a group element g
    /// with g(x̂) = x (on transverse coordinates).
    ///
    /// Canonical sets: [0, 2π) for the translation line; [0, π] for the
    /// folded line; for p2 the box [-1,1) × (0,1) together with the folded
    /// edge rows [0,1] × {0,1}; for p2-sine the closed mirror cell [0,1]².
    pub fn reduce(&self, x: &Point<N>) -> (Point<N>, Isometry<N>) {
        let mut cur = Self::transverse(x);
        if self.is_canonical(&cur) {
            return (cur, Isometry::identity());
        }
        // Invariant: transverse(x) = g.apply(cur).
        let mut g = Isometry::identity();
        let mut step = |cur: &mut Point<N>, g: &mut Isometry<N>, s: &Isometry<N>| {
            *cur = s.apply(cur);
            *g = g.compose(&s.invert());
        };
        match self.kind {
            GroupKind::TranslationLine => {
                let (w, k) = wrap(cur.0[0], 0.0, TAU);
                let mut shift = Point::zero();
                shift.0[0] = -k * TAU;
                step(&mut cur, &mut g, &Isometry::translation(shift));
                cur.0[0] = w;
            }
            GroupKind::FoldedLine => {
                let (w, k) = wrap(cur.0[0], 0.0, TAU);
                let mut shift = Point::zero();
                shift.0[0] = -k * TAU;
                step(&mut cur, &mut g, &Isometry::translation(shift));
                cur.0[0] = w;
                if cur.0[0] > std::f64::consts::PI {
                    // x ↦ 2π - x: the flip composed with one period.
                    let mut tr = Point::zero();
                    tr.0[0] = TAU;
                    let fold = Isometry { rotation: Mat::diagonal([-1.0; N]), translation: tr };
                    step(&mut cur, &mut g, &fold);
                }
            }
            GroupKind::P2 => {
                self.reduce_p2(&mut cur, &mut g, &mut step);
            }
            GroupKind::P2Sine => {
                self.reduce_p2_sine(&mut cur, &mut g, &mut step);
            }
        }
        (cur, g)
    }

    fn reduce_p2(
        &self,
        cur: &mut Point<N>,
        g: &mut Isometry<N>,
        step: &mut impl FnMut(&mut Point<N>, &mut Isometry<N>, &Isometry<N>),
    ) {
        // Translate x₁ into [-1, 1) and x₂ into [0, 2).
        let (w0, k0) = wrap(cur.0[0], -1.0, 2.0);
        let (w1, k1) = wrap(cur.0[1], 0.0, 2.0);
        let mut shift = Point::zero();
        shift.0[0] = -2.0 * k0;
        shift.0[1] = -2.0 * k1;
        step(cur, g, &Isometry::translation(shift));
        cur.0[0] = w0;
        cur.0[1] = w1;
        // Fold the upper half-strip down with the half-turn about (0, 1).
        if cur.0[1] > 1.0 {
            let mut tr = Point::zero();
            tr.0[1] = 2.0;
            let half_turn = Isometry { rotation: p2_rotation_mat::<N>(), translation: tr };
            step(cur, g, &half_turn);
            // x₁ flipped sign; rewindow into [-1, 1).
            if cur.0[0] == 1.0 {
                let mut t2 = Point::zero();
                t2.0[0] = -2.0;
                step(cur, g, &Isometry::translation(t2));
            }
        }
        // Edge rows x₂ ∈ {0, 1} fold onto x₁ ≥ 0.
        if (cur.0[1] == 0.0 || cur.0[1] == 1.0) && cur.0[0] < 0.0 {
            let mut tr = Point::zero();
            tr.0[1] = 2.0 * cur.0[1];
            let fold = Isometry { rotation: p2_rotation_mat::<N>(), translation: tr };
            step(cur, g, &fold);
        }
    }

    fn reduce_p2_sine(
        &self,
        cur: &mut Point<N>,
        g: &mut Isometry<N>,
        step: &mut impl FnMut(&mut Point<N>, &mut Isometry<N>, &Isometry<N>),
    ) {
        // x₁ into [-1, 1), then mirror negatives up with the beam rotation.
        let (w0, k0) = wrap(cur.0[0], -1.0, 2.0);
        let (w1, k1) = wrap(cur.0[1], 0.0, 2.0);
        let mut shift = Point::zero();
        shift.0[0] = -2.0 * k0;
        shift.0[1] = -2.0 * k1;
        step(cur, g, &Isometry::translation(shift));
        cur.0[0] = w0;
        cur.0[1] = w1;
        if cur.0[0] < 0.0 {
            let mirror = Isometry {
                rotation: p2_sine_mirror_mat::<N>(),
                translation: Point::zero(),
            };
            step(cur, g, &mirror);
        }
        // x₂ into [0, 1] by reflecting in the line x₂ = 1.
        if cur.0[1] > 1.0 {
            let mut tr = Point::zero();
            tr.0[1] = 2.0;
            let refl = Isometry { rotation: p2_sine_horiz_mat::<N>(), translation: tr };
            step(cur, g, &refl);
        }
    }

    // -----------------------------------------------------------------------
    // Enumeration
    // -----------------------------------------------------------------------

    /// All lattice translations with norm at most `bound` (zero included).
    pub fn lattice_translates(&self, bound: f64) -> Vec<Point<N>> {
        let mut out = vec![Point::zero()];
        if self.lattice.is_empty() || bound <= 0.0 {
            return out;
        }
        // Built-in bases are orthogonal, so per-axis coefficient bounds are exact.
        let ranges: Vec<i64> = self
            .lattice
            .iter()
            .map(|v| (bound / v.norm()).floor() as i64)
            .collect();
        match self.lattice.len() {
            1 => {
                for k in -ranges[0]..=ranges[0] {
                    if k == 0 {
                        continue;
                    }
                    let t = self.lattice[0].scale(k as f64);
                    if t.norm() <= bound {
                        out.push(t);
                    }
                }
            }
            2 => {
                for k0 in -ranges[0]..=ranges[0] {
                    for k1 in -ranges[1]..=ranges[1] {
                        if k0 == 0 && k1 == 0 {
                            continue;
                        }
                        let t = self.lattice[0].scale(k0 as f64) + self.lattice[1].scale(k1 as f64);
                        if t.norm() <= bound {
                            out.push(t);
                        }
                    }
                }
            }
            _ => unreachable!("built-in groups have at most 2 lattice vectors"),
        }
        out
    }

    /// Group elements rep ∘ translation over translations with norm ≤ bound.
    pub fn elements_with_translation_bound(&self, bound: f64) -> Vec<Isometry<N>> {
        let mut out = Vec::new();
        for t in self.lattice_translates(bound) {
            for rep in &self.point_reps {
                out.push(Isometry::translation(t).compose(rep));
            }
        }
        out
    }

    /// All group elements fixing `x` (searched over point representatives
    /// composed with lattice translates of norm ≤ 4 · max basis norm).
    pub fn stabilizer(&self, x: &Point<N>) -> Vec<Isometry<N>> {
        let x = Self::transverse(x);
        let bound = 4.0 * self.max_basis_norm();
        let mut out: Vec<Isometry<N>> = Vec::new();
        for g in self.elements_with_translation_bound(bound) {
            if g.apply(&x).dist(&x) < STABILIZER_TOL {
                out.push(g);
            }
        }
        out
    }

    /// Orbit points of `x` within distance `radius` of `x`, deduplicated and
    /// sorted lexicographically.
    pub fn orbit_points(&self, x: &Point<N>, radius: f64) -> Vec<Point<N>> {
        let x = Self::transverse(x);
        let bound = radius + 2.0 * x.norm() + self.max_basis_norm();
        let mut pts: Vec<Point<N>> = Vec::new();
        for g in self.elements_with_translation_bound(bound) {
            let p = g.apply(&x);
            if p.dist(&x) <= radius && !pts.iter().any(|q| q.dist(&p) < ORBIT_DEDUP_TOL) {
                pts.push(p);
            }
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pts
    }

    /// Search for a group element g with |g(from) - to| < tol, over the
    /// bounded enumeration.  Used for fixed-point witnesses.
    pub fn find_element_mapping(
        &self,
        from: &Point<N>,
        to: &Point<N>,
        tol: f64,
    ) -> Option<Isometry<N>> {
        let from = Self::transverse(from);
        let to = Self::transverse(to);
        let bound = from.norm() + to.norm() + 4.0 * self.max_basis_norm();
        let mut best: Option<(f64, Isometry<N>)> = None;
        for g in self.elements_with_translation_bound(bound) {
            let miss = g.apply(&from).dist(&to);
            if best.as_ref().map_or(true, |(m, _)| miss < *m) {
                best = Some((miss, g));
            }
        }
        best.and_then(|(m, g)| (m < tol).then_some(g))
    }

    /// Distance of the nearest orbit point of `from` to `to`.
    pub fn orbit_miss(&self, from: &Point<N>, to: &Point<N>) -> f64 {
        let from = Self::transverse(from);
        let to = Self::transverse(to);
        let bound = from.norm() + to.norm() + 4.0 * self.max_basis_norm();
        self.elements_with_translation_bound(bound)
            .iter()
            .map(|g| g.apply(&from).dist(&to))
            .fold(f64::INFINITY, f64::min)
    }

    // -----------------------------------------------------------------------
    // Admissibility
    // -----------------------------------------------------------------------

    /// Does A = scale · orthogonal conjugate every generator back into the
    /// group?  Required for the functional equation f ∘ h = h ∘ A to define
    /// a single-valued map.
    pub fn check_admissible(&self, scale: f64, orthogonal: &Mat<N>) -> AdmissibilityCertificate {
        let mut checks = Vec::new();
        if scale <= 0.0 || !orthogonal.is_special_orthogonal(1e-9) {
            checks.push(GeneratorCheck {
                generator: "A".into(),
                ok: false,
                detail: "A must be a positive scale times a special orthogonal matrix".into(),
            });
            return AdmissibilityCertificate { admissible: false, checks };
        }
        let ot = orthogonal.transpose();
        let conjugate = |g: &Isometry<N>| -> Isometry<N> {
            Isometry {
                rotation: orthogonal.matmul(&g.rotation).matmul(&ot),
                translation: orthogonal.apply(&g.translation).scale(scale),
            }
        };
        let mut generators: Vec<(String, Isometry<N>)> = Vec::new();
        for (i, v) in self.lattice.iter().enumerate() {
            generators.push((format!("lattice[{i}]"), Isometry::translation(*v)));
        }
        for (i, rep) in self.point_reps.iter().enumerate().skip(1) {
            generators.push((format!("point_rep[{i}]"), *rep));
        }
        if let Some(r) = &self.beam_rotation {
            generators.push(("beam_rotation".into(), *r));
        }
        let mut all_ok = true;
        for (label, g) in generators {
            let conj = conjugate(&g);
            let (ok, detail) = self.contains_element(&conj);
            all_ok &= ok;
            checks.push(GeneratorCheck { generator: label, ok, detail });
        }
        AdmissibilityCertificate { admissible: all_ok, checks }
    }

    /// Membership test: rotation part must match a representative and the
    /// translation remainder must have integer lattice coordinates.
    fn contains_element(&self, g: &Isometry<N>) -> (bool, String) {
        for rep in &self.point_reps {
            if g.rotation.max_abs_diff(&rep.rotation) > ADMISSIBLE_TOL {
                continue;
            }
            let delta = g.translation - rep.translation;
            let mut remainder = delta;
            let mut coords = Vec::new();
            for v in &self.lattice {
                let c = delta.dot(v) / v.norm_sq();
                coords.push(c);
                remainder = remainder - v.scale(c.round());
            }
            let integral = coords.iter().all(|c| (c - c.round()).abs() <= ADMISSIBLE_TOL);
            if integral && remainder.norm() <= ADMISSIBLE_TOL {
                return (true, "in group".into());
            }
            return (
                false,
                format!(
                    "translation {:?} is not a lattice vector (coords {:?})",
                    delta.0, coords
                ),
            );
        }
        (false, "rotation part matches no representative".into())
    }
}

/// diag(-1, -1, 1, ..., 1): the transverse half-turn in ambient form.
fn p2_rotation_mat<const N: usize>() -> Mat<N> {
    let mut d = [1.0; N];
    d[0] = -1.0;
    d[1] = -1.0;
    Mat::diagonal(d)
}

/// diag(-1, 1, -1): transverse mirror realized by the beam rotation.
fn p2_sine_mirror_mat<const N: usize>() -> Mat<N> {
    let mut d = [1.0; N];
    d[0] = -1.0;
    d[N - 1] = -1.0;
    Mat::diagonal(d)
}

/// diag(1, -1, -1): transverse horizontal mirror (beam flipped).
fn p2_sine_horiz_mat<const N: usize>() -> Mat<N> {
    let mut d = [1.0; N];
    d[1] = -1.0;
    d[N - 1] = -1.0;
    Mat::diagonal(d)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn translation_line_wraps_seven_pi_to_pi() {
        let g = zorich2();
        let (xhat, wit) = g.reduce(&Point::new([7.0 * PI, 0.0]));
        assert!((xhat.0[0] - PI).abs() < 1e-12);
        // Witness is the shift by three periods.
        assert!((wit.translation.0[0] - 6.0 * PI).abs() < 1e-12);
        assert!(wit.rotation.max_abs_diff(&Mat::identity()) == 0.0);
    }

    #[test]
    fn p2_reduces_spec_point_by_half_turn_about_origin() {
        let g = p2();
        let (xhat, wit) = g.reduce(&Point::new([-0.5, -0.25, 0.0]));
        assert!(xhat.dist(&Point::new([0.5, 0.25, 0.0])) < 1e-12);
        // Net witness is the half-turn about the origin.
        assert!(wit.rotation.max_abs_diff(&Mat::diagonal([-1.0, -1.0, 1.0])) < 1e-12);
        assert!(wit.translation.norm() < 1e-12);
    }

    #[test]
    fn reduce_witness_and_idempotence_randomized() {
        let mut rng = StdRng::seed_from_u64(7);
        macro_rules! check_group {
            ($g:expr, $n:expr) => {
                let g = $g;
                for _ in 0..10_000 {
                    let mut c = [0.0; $n];
                    for v in c.iter_mut().take($n - 1) {
                        *v = rng.gen_range(-9.0..9.0);
                    }
                    let x = Point::new(c);
                    let (xhat, wit) = g.reduce(&x);
                    assert!(g.polytope.contains(&xhat, 1e-12), "{:?} via {:?}", x, xhat);
                    assert!(wit.apply(&xhat).dist(&x) < 1e-12);
                    let (again, wit2) = g.reduce(&xhat);
                    assert!(again.dist(&xhat) == 0.0);
                    assert!(wit2.is_identity(0.0));
                }
            };
        }
        check_group!(zorich2(), 2);
        check_group!(sine2(), 2);
        check_group!(p2(), 3);
        check_group!(p2_sine(), 3);
    }

    #[test]
    fn folded_line_canonical_interval() {
        let g = sine2();
        let (xhat, wit) = g.reduce(&Point::new([-0.3, 0.0]));
        assert!((xhat.0[0] - 0.3).abs() < 1e-15);
        assert!(wit.apply(&xhat).dist(&Point::new([-0.3, 0.0])) < 1e-15);
        let (xhat, _) = g.reduce(&Point::new([PI + 0.125, 0.0]));
        assert!((xhat.0[0] - (PI - 0.125)).abs() < 1e-12);
    }

    #[test]
    fn p2_stabilizers_match_cone_points() {
        let g = p2();
        let at_origin = g.stabilizer(&Point::new([0.0, 0.0, 0.0]));
        assert_eq!(at_origin.len(), 2);
        let at_corner = g.stabilizer(&Point::new([1.0, 0.0, 0.0]));
        assert_eq!(at_corner.len(), 2);
        // The nontrivial stabilizer of (1,0) is the half-turn about it.
        let rot = at_corner
            .iter()
            .find(|h| !h.is_identity(1e-12))
            .expect("half-turn expected");
        assert!(rot.translation.dist(&Point::new([2.0, 0.0, 0.0])) < 1e-12);
        let generic = g.stabilizer(&Point::new([0.37, 0.21, 0.0]));
        assert_eq!(generic.len(), 1);
    }

    #[test]
    fn orbit_points_translation_line() {
        let g = zorich2();
        let pts = g.orbit_points(&Point::new([0.0, 0.0]), TAU + 0.1);
        let xs: Vec<f64> = pts.iter().map(|p| p.0[0]).collect();
        assert_eq!(pts.len(), 3);
        assert!((xs[0] + TAU).abs() < 1e-12 && xs[1].abs() < 1e-12 && (xs[2] - TAU).abs() < 1e-12);
    }

    #[test]
    fn orbit_points_matches_brute_force_for_p2() {
        let g = p2();
        let x = Point::new([0.5, 0.25, 0.0]);
        let radius = 3.0;
        let got = g.orbit_points(&x, radius);
        // Independent brute force with the coarser bound radius + |x|.
        let mut brute: Vec<Point<3>> = Vec::new();
        let bound = radius + x.norm();
        for k0 in -4..=4_i64 {
            for k1 in -4..=4_i64 {
                let t = Point::new([2.0 * k0 as f64, 2.0 * k1 as f64, 0.0]);
                if t.norm() > bound {
                    continue;
                }
                for rep in &g.point_reps {
                    let p = Isometry::translation(t).compose(rep).apply(&x);
                    if p.dist(&x) <= radius && !brute.iter().any(|q| q.dist(&p) < 1e-9) {
                        brute.push(p);
                    }
                }
            }
        }
        brute.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert_eq!(got.len(), brute.len());
        for (a, b) in got.iter().zip(brute.iter()) {
            assert!(a.dist(b) < 1e-12);
        }
        // Tiny radius keeps only the point itself.
        let only = g.orbit_points(&x, 0.25);
        assert_eq!(only.len(), 1);
        assert!(only[0].dist(&x) < 1e-15);
    }

    #[test]
    fn integer_scalings_are_admissible() {
        for d in 1..=4 {
            let s = d as f64;
            assert!(zorich2().check_admissible(s, &Mat::identity()).admissible);
            assert!(sine2().check_admissible(s, &Mat::identity()).admissible);
            assert!(p2().check_admissible(s, &Mat::identity()).admissible);
            assert!(p2_sine().check_admissible(s, &Mat::identity()).admissible);
        }
    }

    #[test]
    fn non_integer_scaling_is_rejected() {
        let cert = p2().check_admissible(1.5, &Mat::identity());
        assert!(!cert.admissible);
        assert!(cert.checks.iter().any(|c| !c.ok));
        assert!(!zorich2().check_admissible(1.5, &Mat::identity()).admissible);
    }

    #[test]
    fn quarter_turn_preserves_p2_but_irrational_rotation_does_not() {
        let quarter = Mat::plane_rotation(0, 1, PI / 2.0);
        assert!(p2().check_admissible(2.0, &quarter).admissible);
        let skew = Mat::plane_rotation(0, 1, 1.0);
        assert!(!p2().check_admissible(2.0, &skew).admissible);
    }

    #[test]
    fn edge_row_convention_keeps_nonnegative_representative() {
        let g = p2();
        // (1, 0) is canonical; (-1, 0) folds onto it.
        let (a, wit_a) = g.reduce(&Point::new([1.0, 0.0, 0.0]));
        assert!(a.dist(&Point::new([1.0, 0.0, 0.0])) == 0.0);
        assert!(wit_a.is_identity(0.0));
        let (b, wit_b) = g.reduce(&Point::new([-1.0, 0.0, 0.0]));
        assert!(b.dist(&Point::new([1.0, 0.0, 0.0])) < 1e-15);
        assert!(wit_b.apply(&b).dist(&Point::new([-1.0, 0.0, 0.0])) < 1e-15);
    }
}
