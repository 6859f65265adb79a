//! Iteration on the extended space: orbit classification, Julia-set
//! rasterization, Denjoy–Wolff convergence analysis, distortion
//! estimation, and the consolidated residual-verification suite.

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{chordal_distance, BallMobius, ExtendedPoint, Isometry, Point};
use crate::sampling;
use crate::scene::{BaseMap, BuiltScene, Scene, SceneConfig};
use crate::schroeder::{
    linearize, ChebMap, HdMap, Involution, PowerMap, QcDeformation, UqrMap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default inner escape radius: orbits entering this ball are classified.
pub const DEFAULT_R_SMALL: f64 = 1e-6;
/// Default outer escape radius.
pub const DEFAULT_R_LARGE: f64 = 1e6;
/// Default iteration budget per orbit.
pub const DEFAULT_MAX_ITER: usize = 200;
/// Sample count per identity in the verification suite.
pub const VERIFY_SAMPLES: usize = 10_000;
/// Shell fractions of the sample radius for convergence probes.
pub const SHELL_FRACTIONS: [f64; 3] = [0.1, 0.3, 0.5];

// ---------------------------------------------------------------------------
// Orbit classification
// ---------------------------------------------------------------------------

/// Escape thresholds and the iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub r_small: f64,
    pub r_large: f64,
    pub max_iter: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            r_small: DEFAULT_R_SMALL,
            r_large: DEFAULT_R_LARGE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_small > 0.0 && self.r_small < 1.0 && self.r_large > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "escape radii must satisfy 0 < r_small < 1 < r_large, got {} and {}",
                self.r_small, self.r_large
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where an orbit ended up within the iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitClass {
    /// Entered the ball |y| < r_small.
    ToZero,
    /// Left the ball |y| ≤ r_large (or reached the point at infinity).
    ToInfinity,
    /// Stayed inside the closed shell for the whole budget.
    Bounded,
    /// Evaluation failed or produced non-numeric coordinates.
    Undecided,
}

impl OrbitClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            OrbitClass::ToZero => "to_zero",
            OrbitClass::ToInfinity => "to_infinity",
            OrbitClass::Bounded => "bounded",
            OrbitClass::Undecided => "undecided",
        }
    }
}

/// A classified orbit with its visited points.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord<const N: usize> {
    pub start: ExtendedPoint<N>,
    pub samples: Vec<ExtendedPoint<N>>,
    pub classification: OrbitClass,
    pub iterations_used: usize,
}

/// Classify the forward orbit of `start`, keeping the visited points.
pub fn classify_orbit<const N: usize>(
    f: &dyn UqrMap<N>,
    start: &ExtendedPoint<N>,
    thresholds: &Thresholds,
) -> OrbitRecord<N> {
    run_orbit(f, start, thresholds, true)
}

fn run_orbit<const N: usize>(
    f: &dyn UqrMap<N>,
    start: &ExtendedPoint<N>,
    th: &Thresholds,
    keep: bool,
) -> OrbitRecord<N> {
    let mut samples = if keep { vec![*start] } else { Vec::new() };
    let mut current = *start;
    for m in 0..=th.max_iter {
        match &current {
            ExtendedPoint::Infinity => {
                return OrbitRecord {
                    start: *start,
                    samples,
                    classification: OrbitClass::ToInfinity,
                    iterations_used: m,
                }
            }
            ExtendedPoint::Finite(p) => {
                if !p.is_finite() {
                    return OrbitRecord {
                        start: *start,
                        samples,
                        classification: OrbitClass::Undecided,
                        iterations_used: m,
                    };
                }
                let r = p.norm();
                if r > th.r_large {
                    return OrbitRecord {
                        start: *start,
                        samples,
                        classification: OrbitClass::ToInfinity,
                        iterations_used: m,
                    };
                }
                if r < th.r_small {
                    return OrbitRecord {
                        start: *start,
                        samples,
                        classification: OrbitClass::ToZero,
                        iterations_used: m,
                    };
                }
            }
        }
        if m == th.max_iter {
            break;
        }
        current = match f.eval_ext(&current) {
            Ok(v) => v,
            Err(_) => {
                return OrbitRecord {
                    start: *start,
                    samples,
                    classification: OrbitClass::Undecided,
                    iterations_used: m,
                }
            }
        };
        if keep {
            samples.push(current);
        }
    }
    OrbitRecord {
        start: *start,
        samples,
        classification: OrbitClass::Bounded,
        iterations_used: th.max_iter,
    }
}

// ---------------------------------------------------------------------------
// Julia-set rasters
// ---------------------------------------------------------------------------

/// A square window on a 2-plane through `origin` spanned by two unit
/// vectors, sampled at `resolution` × `resolution` cell centers covering
/// origin ± extent along each spanning direction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SliceSpec<const N: usize> {
    pub origin: Point<N>,
    pub span_u: Point<N>,
    pub span_v: Point<N>,
    pub extent: f64,
    pub resolution: usize,
}

impl<const N: usize> SliceSpec<N> {
    /// An axis-aligned slice through `origin` spanned by coordinate axes
    /// `axis_u` and `axis_v`.
    pub fn axis_aligned(
        origin: Point<N>,
        axis_u: usize,
        axis_v: usize,
        extent: f64,
        resolution: usize,
    ) -> Result<Self> {
        if axis_u >= N || axis_v >= N || axis_u == axis_v {
            return Err(Error::InvalidConfig(format!(
                "slice axes must be distinct coordinate indices below {N}"
            )));
        }
        let spec = SliceSpec {
            origin,
            span_u: Point::axis(axis_u),
            span_v: Point::axis(axis_v),
            extent,
            resolution,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0) {
            return Err(Error::InvalidConfig("slice extent must be positive".into()));
        }
        if self.resolution < 16 || self.resolution > 4096 {
            return Err(Error::InvalidConfig(format!(
                "raster resolution must lie in 16..=4096, got {}",
                self.resolution
            )));
        }
        for (name, v) in [("span_u", &self.span_u), ("span_v", &self.span_v)] {
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("{name} must be a unit vector")));
            }
        }
        if self.span_u.dot(&self.span_v).abs() > 0.99 {
            return Err(Error::InvalidConfig("slice spanning vectors are nearly parallel".into()));
        }
        Ok(())
    }

    /// Side length of one raster cell.
    pub fn cell_size(&self) -> f64 {
        2.0 * self.extent / self.resolution as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_size() * std::f64::consts::SQRT_2
    }

    /// World coordinates of the center of cell (i, j).
    pub fn cell_center(&self, i: usize, j: usize) -> Point<N> {
        let h = self.cell_size();
        let a = -self.extent + (i as f64 + 0.5) * h;
        let b = -self.extent + (j as f64 + 0.5) * h;
        self.origin + self.span_u.scale(a) + self.span_v.scale(b)
    }

    /// World coordinates of the four corners of cell (i, j).
    pub fn cell_corners(&self, i: usize, j: usize) -> [Point<N>; 4] {
        let h = self.cell_size();
        let c = self.cell_center(i, j);
        let du = self.span_u.scale(h / 2.0);
        let dv = self.span_v.scale(h / 2.0);
        [c - du - dv, c + du - dv, c - du + dv, c + du + dv]
    }
}

/// Per-cell orbit classes and escape iteration counts over a slice.
#[derive(Debug, Clone)]
pub struct JuliaRaster<const N: usize> {
    pub spec: SliceSpec<N>,
    pub thresholds: Thresholds,
    /// Row-major: index j * resolution + i.
    pub classes: Vec<OrbitClass>,
    pub iterations: Vec<u32>,
}

/// Classify every cell center of the slice under `f` (data-parallel).
pub fn julia_raster<const N: usize>(
    f: &dyn UqrMap<N>,
    spec: &SliceSpec<N>,
    thresholds: &Thresholds,
) -> Result<JuliaRaster<N>> {
    spec.validate()?;
    thresholds.validate()?;
    let res = spec.resolution;
    let cells = exec::map_indexed(res * res, |idx| {
        let (i, j) = (idx % res, idx / res);
        let start = ExtendedPoint::Finite(spec.cell_center(i, j));
        let rec = run_orbit(f, &start, thresholds, false);
        (rec.classification, rec.iterations_used as u32)
    });
    let mut classes = Vec::with_capacity(cells.len());
    let mut iterations = Vec::with_capacity(cells.len());
    for (c, it) in cells {
        classes.push(c);
        iterations.push(it);
    }
    Ok(JuliaRaster { spec: *spec, thresholds: *thresholds, classes, iterations })
}

impl<const N: usize> JuliaRaster<N> {
    pub fn class_at(&self, i: usize, j: usize) -> OrbitClass {
        self.classes[j * self.spec.resolution + i]
    }

    pub fn iterations_at(&self, i: usize, j: usize) -> u32 {
        self.iterations[j * self.spec.resolution + i]
    }

    /// Cells whose class differs from at least one 4-neighbor.
    pub fn interface_mask(&self) -> Vec<bool> {
        let res = self.spec.resolution;
        let mut mask = vec![false; res * res];
        for j in 0..res {
            for i in 0..res {
                let c = self.classes[j * res + i];
                let differs = (i > 0 && self.classes[j * res + i - 1] != c)
                    || (i + 1 < res && self.classes[j * res + i + 1] != c)
                    || (j > 0 && self.classes[(j - 1) * res + i] != c)
                    || (j + 1 < res && self.classes[(j + 1) * res + i] != c);
                mask[j * res + i] = differs;
            }
        }
        mask
    }

    /// Grid indices of the interface cells.
    pub fn interface_cells(&self) -> Vec<(usize, usize)> {
        let res = self.spec.resolution;
        self.interface_mask()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(idx, _)| (idx % res, idx / res))
            .collect()
    }
}

/// World-space centers of the raster's interface cells.
pub fn julia_points<const N: usize>(raster: &JuliaRaster<N>) -> Vec<Point<N>> {
    raster
        .interface_cells()
        .into_iter()
        .map(|(i, j)| raster.spec.cell_center(i, j))
        .collect()
}

/// First iterate at which the forward images of `points` attain chordal
/// diameter above `target`, within `max_iter` steps.  Points whose
/// evaluation fails are dropped; None when the diameter never gets there.
pub fn blowup_iterations<const N: usize>(
    f: &dyn UqrMap<N>,
    points: &[Point<N>],
    target: f64,
    max_iter: usize,
) -> Option<usize> {
    let mut states: Vec<ExtendedPoint<N>> =
        points.iter().map(|p| ExtendedPoint::Finite(*p)).collect();
    for m in 0..=max_iter {
        let mut diam: f64 = 0.0;
        for a in 0..states.len() {
            for b in a + 1..states.len() {
                diam = diam.max(chordal_distance(&states[a], &states[b]));
            }
        }
        if diam > target {
            return Some(m);
        }
        if m == max_iter {
            break;
        }
        let mut next = Vec::with_capacity(states.len());
        for s in &states {
            if let Ok(v) = f.eval_ext(s) {
                next.push(v);
            }
        }
        if next.len() < 2 {
            return None;
        }
        states = next;
    }
    None
}

// ---------------------------------------------------------------------------
// Denjoy–Wolff convergence analysis
// ---------------------------------------------------------------------------

/// Parameters for the ball-map convergence probe.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwParams {
    /// Largest start radius; the net uses shells at {0.1, 0.3, 0.5} of it.
    pub sample_radius: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Iteration window for the recurrence (automorphism) detector.
    pub recurrence_window: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DwParams {
    fn default() -> Self {
        DwParams {
            sample_radius: 0.5,
            tol: 1e-8,
            max_iter: 200,
            recurrence_window: 10_000,
            samples: 200,
            seed: 17,
        }
    }
}

/// The trichotomy of the convergence probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "point")]
pub enum DwVerdict<const N: usize> {
    Converged(ExtendedPoint<N>),
    AutomorphismLike,
    Undecided,
}

/// Outcome of the convergence probe over one sample net.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport<const N: usize> {
    pub verdict: DwVerdict<N>,
    /// Max chordal distance of the net's m-th iterates to the candidate
    /// limit, per iterate (empty when no candidate emerged).
    pub sup_trace: Vec<f64>,
    pub converged_at: Option<usize>,
    pub samples: usize,
    pub sample_radius: f64,
    pub seed: u64,
    pub recurrent_fraction: Option<f64>,
    pub distance_preserved_fraction: Option<f64>,
}

fn point_mean<const N: usize>(points: &[Point<N>]) -> Point<N> {
    let mut c = [0.0; N];
    for p in points {
        for (o, v) in c.iter_mut().zip(p.0.iter()) {
            *o += v / points.len() as f64;
        }
    }
    Point::new(c)
}

/// Cesàro-stabilized limit candidate of one orbit: the sliding-window
/// average once consecutive window averages stop moving.
fn cesaro_candidate<const N: usize>(orbit: &[ExtendedPoint<N>], tol: f64) -> Option<ExtendedPoint<N>> {
    let n = orbit.len();
    if n >= 2 {
        if let (ExtendedPoint::Infinity, ExtendedPoint::Infinity) = (&orbit[n - 1], &orbit[n - 2]) {
            return Some(ExtendedPoint::Infinity);
        }
    }
    let w = 32.min(n).max(1);
    let mut prev: Option<Point<N>> = None;
    let mut settled: Option<Point<N>> = None;
    for m in w..=n {
        let tail = &orbit[m - w..m];
        let finite: Vec<Point<N>> = tail
            .iter()
            .filter_map(|p| p.as_finite().copied())
            .collect();
        if finite.len() < tail.len() {
            prev = None;
            continue;
        }
        let mu = point_mean(&finite);
        if let Some(p) = prev {
            let moved = chordal_distance(&ExtendedPoint::Finite(mu), &ExtendedPoint::Finite(p));
            if moved < tol / 10.0 {
                settled = Some(mu);
            }
        }
        prev = Some(mu);
    }
    settled.map(ExtendedPoint::Finite)
}

/// Probe the Denjoy–Wolff trichotomy of a self-map of the unit ball
/// (optionally of a deformed copy of the ball described by `chart`):
/// either the iterates converge uniformly on the net to a single point,
/// or the orbits recur and pairwise distances are preserved
/// (automorphism-like), or the probe is inconclusive.
pub fn denjoy_wolff<const N: usize>(
    f: &dyn UqrMap<N>,
    params: &DwParams,
    chart: Option<&QcDeformation>,
) -> Result<ConvergenceReport<N>> {
    if !(params.sample_radius > 0.0 && params.sample_radius < 1.0) {
        return Err(Error::InvalidConfig(
            "the sample radius must lie strictly between 0 and 1".into(),
        ));
    }
    if params.samples < 10 {
        return Err(Error::InvalidConfig("the convergence probe needs at least 10 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let ball_net: Vec<Point<N>> =
        sampling::shell_starts(params.sample_radius, &SHELL_FRACTIONS, params.samples, &mut rng);
    let net: Vec<Point<N>> = ball_net
        .iter()
        .map(|p| chart.map_or(*p, |c| c.apply(p)))
        .collect();

    // Precondition: the map must send the sampled ball into the closed
    // unit ball (in chart coordinates).  The validation samples include a
    // shell at the full sample radius, beyond the interior start net.
    let boundary: Vec<Point<N>> = sampling::directions::<N>(32)
        .into_iter()
        .map(|d| {
            let p = d.scale(params.sample_radius);
            chart.map_or(p, |c| c.apply(&p))
        })
        .collect();
    for p in net.iter().chain(boundary.iter()) {
        let img = f.eval_point(p).map_err(|e| {
            Error::Precondition(format!("the map is not defined on the sampled ball: {e}"))
        })?;
        let back = match img {
            ExtendedPoint::Finite(q) => chart.map_or(q, |c| c.apply_inverse(&q)),
            ExtendedPoint::Infinity => {
                return Err(Error::Precondition(
                    "the map sends a sampled ball point to infinity".into(),
                ))
            }
        };
        if back.norm() > 1.0 + 1e-9 {
            return Err(Error::Precondition(format!(
                "the map is not ball-preserving on the samples: |image| = {}",
                back.norm()
            )));
        }
    }

    // Candidate limit from the Cesàro-stabilized centroid orbit.
    let centroid = point_mean(&net);
    let mut orbit = vec![ExtendedPoint::Finite(centroid)];
    for _ in 0..params.max_iter {
        match f.eval_ext(orbit.last().unwrap()) {
            Ok(v) => orbit.push(v),
            Err(_) => break,
        }
    }
    let candidate = cesaro_candidate(&orbit, params.tol);

    // Convergence test: sup over the net of the distance to the candidate.
    let mut sup_trace = Vec::new();
    let mut converged_at = None;
    if let Some(x0) = &candidate {
        let mut states: Vec<Option<ExtendedPoint<N>>> =
            net.iter().map(|p| Some(ExtendedPoint::Finite(*p))).collect();
        for m in 1..=params.max_iter {
            for s in states.iter_mut() {
                *s = match s.take() {
                    Some(v) => f.eval_ext(&v).ok(),
                    None => None,
                };
            }
            let sup = states
                .iter()
                .map(|s| match s {
                    Some(v) => chordal_distance(v, x0),
                    None => f64::INFINITY,
                })
                .fold(0.0_f64, f64::max);
            sup_trace.push(sup);
            if sup < params.tol {
                converged_at = Some(m);
                break;
            }
        }
    }
    if let (Some(x0), Some(m)) = (candidate, converged_at) {
        return Ok(ConvergenceReport {
            verdict: DwVerdict::Converged(x0),
            sup_trace,
            converged_at: Some(m),
            samples: net.len(),
            sample_radius: params.sample_radius,
            seed: params.seed,
            recurrent_fraction: None,
            distance_preserved_fraction: None,
        });
    }

    // Recurrence detector: does each orbit return near its start?
    let mut recurrent = 0usize;
    for p in &net {
        let start = ExtendedPoint::Finite(*p);
        let mut cur = start;
        let mut infinite_streak = 0;
        for _ in 1..=params.recurrence_window {
            cur = match f.eval_ext(&cur) {
                Ok(v) => v,
                Err(_) => break,
            };
            if matches!(cur, ExtendedPoint::Infinity) {
                infinite_streak += 1;
                if infinite_streak >= 2 {
                    break;
                }
            } else {
                infinite_streak = 0;
            }
            if chordal_distance(&cur, &start) < params.tol / 10.0 {
                recurrent += 1;
                break;
            }
        }
    }
    let recurrent_fraction = recurrent as f64 / net.len() as f64;

    // Distance preservation on sampled pairs over the first iterates.
    let mut tested = 0usize;
    let mut preserved = 0usize;
    let half = net.len() / 2;
    for k in 0..50.min(half) {
        let (a0, b0) = (net[k], net[k + half]);
        let d0 = chordal_distance(&ExtendedPoint::Finite(a0), &ExtendedPoint::Finite(b0));
        if d0 < 1e-9 {
            continue;
        }
        tested += 1;
        let mut a = ExtendedPoint::Finite(a0);
        let mut b = ExtendedPoint::Finite(b0);
        let mut ok = true;
        for _ in 0..3 {
            a = match f.eval_ext(&a) {
                Ok(v) => v,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            b = match f.eval_ext(&b) {
                Ok(v) => v,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            let d = chordal_distance(&a, &b);
            if (d - d0).abs() > 0.1 * d0 {
                ok = false;
                break;
            }
        }
        if ok {
            preserved += 1;
        }
    }
    let preserved_fraction = if tested > 0 { preserved as f64 / tested as f64 } else { 0.0 };

    let verdict = if recurrent_fraction >= 0.9 && preserved_fraction >= 0.9 {
        DwVerdict::AutomorphismLike
    } else {
        DwVerdict::Undecided
    };
    Ok(ConvergenceReport {
        verdict,
        sup_trace,
        converged_at: None,
        samples: net.len(),
        sample_radius: params.sample_radius,
        seed: params.seed,
        recurrent_fraction: Some(recurrent_fraction),
        distance_preserved_fraction: Some(preserved_fraction),
    })
}

impl<const N: usize> UqrMap<N> for BallMobius<N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        match x {
            ExtendedPoint::Infinity => Err(Error::OutOfDomain(
                "ball Mobius maps act on the unit ball, not at infinity".into(),
            )),
            ExtendedPoint::Finite(p) => Ok(ExtendedPoint::Finite(self.eval(p)?)),
        }
    }

    fn degree(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        format!("ball Mobius automorphism (dimension {N})")
    }
}

// ---------------------------------------------------------------------------
// Distortion estimation
// ---------------------------------------------------------------------------

/// One row of the ratio table: max/min displacement over the direction
/// fan at this radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadiusRatio {
    pub radius: f64,
    pub ratio: f64,
}

/// Linear-distortion estimate at one point.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    pub point: Vec<f64>,
    pub directions: usize,
    pub table: Vec<RadiusRatio>,
    /// Ratio at the smallest radius whose value agrees with the next
    /// larger one within 1%.
    pub estimate: f64,
    pub stable: bool,
}

/// Default radius ladder for distortion probes.
pub fn default_radii() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
}

fn fan_size(n: usize) -> usize {
    if n == 2 {
        64
    } else {
        512
    }
}

fn displacement<const N: usize>(
    f: &dyn UqrMap<N>,
    x: &Point<N>,
    fx: &Point<N>,
    r: f64,
    dir: &Point<N>,
) -> Result<f64> {
    match f.eval_point(&(*x + dir.scale(r)))? {
        ExtendedPoint::Finite(v) => Ok(v.dist(fx)),
        ExtendedPoint::Infinity => {
            Err(Error::RangeOverflow { height: f64::INFINITY, limit: f64::INFINITY })
        }
    }
}

/// Orthonormal tangent directions at a unit vector.
fn tangent_basis<const N: usize>(dir: &Point<N>) -> Vec<Point<N>> {
    let mut basis: Vec<Point<N>> = vec![*dir];
    for i in 0..N {
        if basis.len() == N {
            break;
        }
        let mut v = Point::axis(i);
        for b in &basis {
            v = v - b.scale(v.dot(b));
        }
        let n = v.norm();
        if n > 1e-6 {
            basis.push(v.scale(1.0 / n));
        }
    }
    basis.remove(0);
    basis
}

/// Hill-climb the displacement extremum over the direction sphere.
fn refine_extreme<const N: usize>(
    f: &dyn UqrMap<N>,
    x: &Point<N>,
    fx: &Point<N>,
    r: f64,
    start_dir: Point<N>,
    start_val: f64,
    maximize: bool,
) -> (f64, Point<N>) {
    let mut dir = start_dir;
    let mut best = start_val;
    let mut step = 0.2_f64;
    while step > 1e-5 {
        let mut improved = true;
        while improved {
            improved = false;
            for t in tangent_basis(&dir) {
                for s in [step, -step] {
                    let cand = dir + t.scale(s);
                    let n = cand.norm();
                    if n == 0.0 {
                        continue;
                    }
                    let cand = cand.scale(1.0 / n);
                    if let Ok(v) = displacement(f, x, fx, r, &cand) {
                        if (maximize && v > best) || (!maximize && v < best) {
                            best = v;
                            dir = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        step *= 0.5;
    }
    (best, dir)
}

/// Max/min displacement ratio over the refined direction fan at radius r.
fn fan_ratio<const N: usize>(
    f: &dyn UqrMap<N>,
    x: &Point<N>,
    fx: &Point<N>,
    r: f64,
    dirs: &[Point<N>],
) -> Result<f64> {
    let mut max_v = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_d = dirs[0];
    let mut min_d = dirs[0];
    for d in dirs {
        let v = displacement(f, x, fx, r, d)?;
        if v > max_v {
            max_v = v;
            max_d = *d;
        }
        if v < min_v {
            min_v = v;
            min_d = *d;
        }
    }
    let (max_v, _) = refine_extreme(f, x, fx, r, max_d, max_v, true);
    let (min_v, _) = refine_extreme(f, x, fx, r, min_d, min_v, false);
    if min_v <= f64::MIN_POSITIVE {
        return Ok(f64::INFINITY);
    }
    Ok(max_v / min_v)
}

/// Estimate the linear distortion of `f` at `x` over a decreasing radius
/// ladder: for each radius, the max/min displacement ratio over an evenly
/// spread direction fan (64 directions in the plane, 512 in space), with
/// the extremes sharpened by a local search.  A radius whose sphere hits
/// infinity is halved until the images are finite.
pub fn distortion_estimate<const N: usize>(
    f: &dyn UqrMap<N>,
    x: &Point<N>,
    radii: &[f64],
) -> Result<DistortionReport> {
    if radii.is_empty() {
        return Err(Error::InvalidConfig("the radius ladder must be nonempty".into()));
    }
    for w in radii.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::InvalidConfig("radii must be strictly decreasing".into()));
        }
    }
    if *radii.last().unwrap() < 1e-8 {
        return Err(Error::InvalidConfig("radii below 1e-8 are under the noise floor".into()));
    }
    let fx = match f.eval_point(x)? {
        ExtendedPoint::Finite(v) => v,
        ExtendedPoint::Infinity => {
            return Err(Error::Precondition(
                "distortion probes need a finite image at the base point".into(),
            ))
        }
    };
    let dirs = sampling::directions::<N>(fan_size(N));
    let mut table = Vec::with_capacity(radii.len());
    for &r0 in radii {
        let mut r = r0;
        let mut done = false;
        for _ in 0..60 {
            match fan_ratio(f, x, &fx, r, &dirs) {
                Ok(ratio) => {
                    table.push(RadiusRatio { radius: r, ratio });
                    done = true;
                    break;
                }
                Err(_) => r *= 0.5,
            }
        }
        if !done {
            return Err(Error::Precondition(format!(
                "no radius near {r0:e} yields finite images around the base point"
            )));
        }
    }
    let mut estimate = table.last().unwrap().ratio;
    let mut stable = false;
    for i in 1..table.len() {
        let (a, b) = (table[i - 1].ratio, table[i].ratio);
        if a.is_finite() && b.is_finite() && (b - a).abs() <= 0.01 * a.max(1.0) {
            estimate = b;
            stable = true;
        }
    }
    Ok(DistortionReport {
        point: x.0.to_vec(),
        directions: dirs.len(),
        table,
        estimate,
        stable,
    })
}

/// m-fold composition of a map with itself.
pub struct IteratedMap<'a, const N: usize> {
    pub inner: &'a dyn UqrMap<N>,
    pub count: usize,
}

impl<'a, const N: usize> UqrMap<N> for IteratedMap<'a, N> {
    fn eval_ext(&self, x: &ExtendedPoint<N>) -> Result<ExtendedPoint<N>> {
        let mut cur = *x;
        for _ in 0..self.count {
            cur = self.inner.eval_ext(&cur)?;
        }
        Ok(cur)
    }

    fn degree(&self) -> usize {
        self.inner.degree().saturating_pow(self.count as u32)
    }

    fn label(&self) -> String {
        format!("{} iterated {} times", self.inner.label(), self.count)
    }
}

/// Distortion estimates of the iterates f, f², …, f^m_max at `x`, each
/// on a radius ladder auto-scaled so displacements stay in the numeric
/// sweet spot (iterates stretch and shrink scales exponentially).
pub fn distortion_series<const N: usize>(
    f: &dyn UqrMap<N>,
    x: &Point<N>,
    m_max: usize,
    base_radius: f64,
) -> Result<Vec<DistortionReport>> {
    if m_max == 0 {
        return Err(Error::InvalidConfig("the iterate series needs m_max ≥ 1".into()));
    }
    let dirs = sampling::directions::<N>(fan_size(N));
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let it = IteratedMap { inner: f, count: m };
        let fx = match it.eval_point(x)? {
            ExtendedPoint::Finite(v) => v,
            ExtendedPoint::Infinity => {
                return Err(Error::Precondition(format!(
                    "iterate {m} sends the probe point to infinity"
                )))
            }
        };
        // Scale the top radius so the max fan displacement is small but
        // far above rounding noise.
        let mut r = base_radius;
        let mut chosen = None;
        for _ in 0..200 {
            let mut max_disp: f64 = 0.0;
            let mut bad = false;
            for d in dirs.iter().step_by(8) {
                match displacement(&it, x, &fx, r, d) {
                    Ok(v) => max_disp = max_disp.max(v),
                    Err(_) => {
                        bad = true;
                        break;
                    }
                }
            }
            if bad || max_disp > 0.05 {
                r *= 0.5;
                continue;
            }
            if max_disp < 1e-9 && r < 1e3 {
                r *= 2.0;
                continue;
            }
            chosen = Some(r);
            break;
        }
        let Some(top) = chosen else {
            return Err(Error::Precondition(format!(
                "iterate {m} admits no workable probe radius at the base point"
            )));
        };
        let ladder: Vec<f64> = (0..4)
            .map(|k| top / 4.0_f64.powi(k))
            .filter(|r| *r >= 1e-8)
            .collect();
        let ladder = if ladder.is_empty() { vec![top.max(1e-8)] } else { ladder };
        out.push(distortion_estimate(&it, x, &ladder)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The verification suite
// ---------------------------------------------------------------------------

/// One identity checked over a deterministic sample set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub identity: String,
    pub sample_count: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// The consolidated residual report for a scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub scene: String,
    pub seed: u64,
    pub checks: Vec<VerifyCheck>,
    pub pass: bool,
}

/// Identity tolerance by dimension: planar scenes are built from exact
/// trigonometric forms, spatial ones from piecewise closed forms.
fn identity_tol(n: usize, identity: &str) -> f64 {
    if n == 2 {
        if identity.starts_with("strong-automorphy") {
            1e-12
        } else {
            1e-11
        }
    } else {
        1e-9
    }
}

fn push_check(checks: &mut Vec<VerifyCheck>, n: usize, identity: &str, residuals: &[f64]) {
    let max_residual = residuals.iter().fold(0.0_f64, |a, b| a.max(*b));
    let tolerance = identity_tol(n, identity);
    checks.push(VerifyCheck {
        identity: identity.to_string(),
        sample_count: residuals.len(),
        max_residual,
        tolerance,
        pass: max_residual <= tolerance && !residuals.is_empty(),
    });
}

fn beam_samples<const N: usize>(rng: &mut ChaCha8Rng, count: usize, spread: f64, height: f64) -> Vec<Point<N>> {
    (0..count)
        .map(|_| {
            let mut c = [0.0; N];
            for v in c.iter_mut().take(N - 1) {
                *v = rng.gen_range(-spread..spread);
            }
            c[N - 1] = rng.gen_range(-height..height);
            Point::new(c)
        })
        .collect()
}

fn range_samples<const N: usize>(rng: &mut ChaCha8Rng, count: usize) -> Vec<Point<N>> {
    (0..count)
        .map(|_| loop {
            let mut c = [0.0; N];
            for v in c.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let p = Point::new(c);
            let n = p.norm();
            if n > 1e-3 {
                let r = (rng.gen_range(0.2_f64.ln()..5.0_f64.ln())).exp();
                break p.scale(r / n);
            }
        })
        .collect()
}

fn box_samples<const N: usize>(rng: &mut ChaCha8Rng, count: usize, half: f64) -> Vec<Point<N>> {
    (0..count)
        .map(|_| {
            let mut c = [0.0; N];
            for v in c.iter_mut() {
                *v = rng.gen_range(-half..half);
            }
            Point::new(c)
        })
        .collect()
}

/// Non-identity generators of the group: lattice translations, point
/// representatives, and the beam rotation, deduplicated.
pub fn group_generators<const N: usize>(
    group: &crate::crystal::CrystGroup<N>,
) -> Vec<Isometry<N>> {
    let mut gens: Vec<Isometry<N>> = group
        .lattice
        .iter()
        .map(|v| Isometry::translation(*v))
        .collect();
    let push_unique = |g: Isometry<N>, gens: &mut Vec<Isometry<N>>| {
        if g.is_identity(1e-14) {
            return;
        }
        if gens.iter().all(|h| h.max_abs_diff(&g) > 1e-12) {
            gens.push(g);
        }
    };
    for rep in &group.point_reps {
        push_unique(*rep, &mut gens);
    }
    if let Some(b) = group.beam_rotation {
        push_unique(b, &mut gens);
    }
    gens
}

fn chordal_of<const N: usize>(a: &Result<ExtendedPoint<N>>, b: &Result<ExtendedPoint<N>>) -> f64 {
    match (a, b) {
        (Ok(x), Ok(y)) => chordal_distance(x, y),
        _ => f64::INFINITY,
    }
}

/// Run the residual-verification suite over a built scene: strong
/// automorphy on all group generators, the defining conjugacy of the
/// construction, inversion round trips, involution and semi-conjugacy
/// identities where they apply, the linearizer conjugacy at the
/// canonical fixed point, admissibility, and deformation consistency.
pub fn verify_suite<const N: usize>(scene: &Scene<N>) -> VerifyReport {
    let seed = scene.config.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks: Vec<VerifyCheck> = Vec::new();

    // Admissibility certificate (counts failing generators).
    let cert = scene.admissibility();
    let failures = cert.checks.iter().filter(|c| !c.ok).count();
    checks.push(VerifyCheck {
        identity: "admissibility".into(),
        sample_count: cert.checks.len(),
        max_residual: failures as f64,
        tolerance: 0.5,
        pass: cert.admissible,
    });

    // Strong automorphy and inversion round trips per automorphic part.
    let parts = scene.base.automorphic_parts();
    let multi = parts.len() > 1;
    for part in &parts {
        let suffix = if multi {
            match part.kind {
                crate::automorphic::MapKind::Zorich => "-exponential",
                crate::automorphic::MapKind::Sine => "-sine",
            }
        } else {
            ""
        };
        let gens = group_generators(&part.group);
        let spread = 2.0 * part.group.max_basis_norm().max(1.0);
        let xs = beam_samples::<N>(&mut rng, VERIFY_SAMPLES, spread, 3.0);
        let residuals: Vec<f64> = exec::map_indexed(xs.len(), |i| {
            let g = &gens[i % gens.len()];
            part.automorphy_defect(&xs[i], g).unwrap_or(f64::INFINITY)
        });
        push_check(&mut checks, N, &format!("strong-automorphy{suffix}"), &residuals);

        let ys = match part.kind {
            crate::automorphic::MapKind::Zorich => range_samples::<N>(&mut rng, VERIFY_SAMPLES),
            crate::automorphic::MapKind::Sine => box_samples::<N>(&mut rng, VERIFY_SAMPLES, 4.0),
        };
        let residuals: Vec<f64> = exec::map_indexed(ys.len(), |i| {
            let y = ys[i];
            match part.invert(&y).and_then(|x| part.eval(&x)) {
                Ok(back) => chordal_distance(
                    &ExtendedPoint::Finite(back),
                    &ExtendedPoint::Finite(y),
                ),
                Err(_) => f64::INFINITY,
            }
        });
        push_check(&mut checks, N, &format!("inversion-roundtrip{suffix}"), &residuals);
    }

    // Construction-specific identities.
    let standard = scene.config.scale.is_none() && scene.config.quarter_turns % 4 == 0;
    match &scene.base {
        BaseMap::Power(m) => {
            let xs = beam_samples::<N>(&mut rng, VERIFY_SAMPLES, 4.0, 3.0);
            let residuals: Vec<f64> = exec::map_indexed(xs.len(), |i| {
                m.functional_equation_residual(&xs[i]).unwrap_or(f64::INFINITY)
            });
            push_check(&mut checks, N, "schroeder-conjugacy", &residuals);
            if standard {
                let d = m.a.scale.round() as usize;
                let x_star = power_base_point::<N>(d);
                linearizer_check(&mut checks, N, &m.automorphic, &m.a, &x_star, &mut rng);
            }
        }
        BaseMap::Cheb(m) => {
            let xs = beam_samples::<N>(&mut rng, VERIFY_SAMPLES, 4.0, 3.0);
            let residuals: Vec<f64> = exec::map_indexed(xs.len(), |i| {
                m.functional_equation_residual(&xs[i]).unwrap_or(f64::INFINITY)
            });
            push_check(&mut checks, N, "schroeder-conjugacy", &residuals);
            if standard {
                let d = m.a.scale.round() as usize;
                let x_star = cheb_base_point::<N>(d);
                linearizer_check(&mut checks, N, &m.automorphic, &m.a, &x_star, &mut rng);
            }
        }
        BaseMap::Hd(m) => {
            hd_checks(&mut checks, m, &mut rng);
        }
        BaseMap::Lifted(m) => {
            let xs = beam_samples::<N>(&mut rng, VERIFY_SAMPLES, 4.0, 3.0);
            let residuals: Vec<f64> = exec::map_indexed(xs.len(), |i| {
                m.cheb.functional_equation_residual(&xs[i]).unwrap_or(f64::INFINITY)
            });
            push_check(&mut checks, N, "schroeder-conjugacy", &residuals);

            let d = m.cheb.a.scale.round() as usize;
            match PowerMap::standard(m.h1.zorich.clone(), d) {
                Ok(power) => {
                    let ys = range_samples::<N>(&mut rng, VERIFY_SAMPLES);
                    let residuals: Vec<f64> = exec::map_indexed(ys.len(), |i| {
                        let y = ExtendedPoint::Finite(ys[i]);
                        chordal_of(&m.eval_ext(&y), &power.eval_ext(&y))
                    });
                    push_check(&mut checks, N, "lift-agreement", &residuals);
                }
                Err(_) => push_check(&mut checks, N, "lift-agreement", &[]),
            }
        }
    }

    // Deformation consistency.
    if let Some(deformed) = &scene.deformed {
        let def = deformed.deformation;
        let ys = range_samples::<N>(&mut rng, VERIFY_SAMPLES);
        let residuals: Vec<f64> = exec::map_indexed(ys.len(), |i| {
            let y = ys[i];
            let fwd = def.apply_inverse(&def.apply(&y));
            let bwd = def.apply(&def.apply_inverse(&y));
            let a = chordal_distance(&ExtendedPoint::Finite(fwd), &ExtendedPoint::Finite(y));
            let b = chordal_distance(&ExtendedPoint::Finite(bwd), &ExtendedPoint::Finite(y));
            a.max(b)
        });
        push_check(&mut checks, N, "deformation-roundtrip", &residuals);

        let base = scene.base.as_uqr();
        let residuals: Vec<f64> = exec::map_indexed(ys.len(), |i| {
            let y = ys[i];
            let lhs = deformed.eval_point(&def.apply(&y));
            let rhs = match base.eval_point(&y) {
                Ok(ExtendedPoint::Finite(v)) => Ok(ExtendedPoint::Finite(def.apply(&v))),
                Ok(ExtendedPoint::Infinity) => Ok(ExtendedPoint::Infinity),
                Err(e) => Err(e),
            };
            chordal_of(&lhs, &rhs)
        });
        push_check(&mut checks, N, "deformation-conjugacy", &residuals);
    }

    let pass = checks.iter().all(|c| c.pass);
    VerifyReport {
        schema_version: 1,
        scene: scene.config.describe(),
        seed,
        checks,
        pass,
    }
}

/// Canonical transverse fixed point for the power construction:
/// x* = 0 in the plane; x* = (2/(d+1), 0, 0) in space (the doubling
/// image 2x* folds back onto x* through the half-turn).
fn power_base_point<const N: usize>(d: usize) -> Point<N> {
    let mut c = [0.0; N];
    if N == 3 {
        c[0] = 2.0 / (d as f64 + 1.0);
    }
    Point::new(c)
}

/// Canonical transverse fixed point for the Chebyshev construction:
/// x* = 2π/(d+1) on the folded line; x* = (2/(d+1), 2/(d+1), 0) in space.
fn cheb_base_point<const N: usize>(d: usize) -> Point<N> {
    let mut c = [0.0; N];
    if N == 2 {
        c[0] = 2.0 * std::f64::consts::PI / (d as f64 + 1.0);
    } else {
        c[0] = 2.0 / (d as f64 + 1.0);
        c[1] = c[0];
    }
    Point::new(c)
}

fn linearizer_check<const N: usize>(
    checks: &mut Vec<VerifyCheck>,
    n: usize,
    h: &crate::automorphic::AutomorphicMap<N>,
    a: &crate::schroeder::ConformalAutomorphism<N>,
    x_star: &Point<N>,
    rng: &mut ChaCha8Rng,
) {
    match linearize(h, a, x_star) {
        Ok(lin) => {
            let vs = box_samples::<N>(rng, VERIFY_SAMPLES, 1.0);
            let residuals: Vec<f64> = exec::map_indexed(vs.len(), |i| {
                lin.conjugacy_residual(&vs[i]).unwrap_or(f64::INFINITY)
            });
            push_check(checks, n, "linearizer-conjugacy", &residuals);
        }
        Err(_) => push_check(checks, n, "linearizer-conjugacy", &[]),
    }
}

fn hd_checks<const N: usize>(
    checks: &mut Vec<VerifyCheck>,
    m: &HdMap<N>,
    rng: &mut ChaCha8Rng,
) {
    let inv = Involution::<N>;
    let ys = range_samples::<N>(rng, VERIFY_SAMPLES);
    let residuals: Vec<f64> = exec::map_indexed(ys.len(), |i| {
        let y = ExtendedPoint::Finite(ys[i]);
        chordal_of(&inv.eval_ext(&inv.eval_ext(&y).unwrap_or(ExtendedPoint::Infinity)), &Ok(y))
    });
    push_check(checks, N, "involution-involutive", &residuals);

    let residuals: Vec<f64> = exec::map_indexed(ys.len(), |i| {
        let y = ExtendedPoint::Finite(ys[i]);
        let through = match inv.eval_ext(&y) {
            Ok(v) => m.eval_ext(&v),
            Err(e) => Err(e),
        };
        chordal_of(&through, &m.eval_ext(&y))
    });
    push_check(checks, N, "involution-invariance", &residuals);

    if m.d >= 2 {
        let power = PowerMap::standard(m.zorich.clone(), m.d);
        let cheb = ChebMap::standard(m.sine.clone(), m.d);
        let h1 = HdMap::new(m.zorich.clone(), m.sine.clone(), 1);
        match (power, cheb, h1) {
            (Ok(power), Ok(cheb), Ok(h1)) => {
                let residuals: Vec<f64> = exec::map_indexed(ys.len(), |i| {
                    let y = ExtendedPoint::Finite(ys[i]);
                    let lhs = match h1.eval_ext(&y) {
                        Ok(v) => cheb.eval_ext(&v),
                        Err(e) => Err(e),
                    };
                    let rhs = match power.eval_ext(&y) {
                        Ok(v) => h1.eval_ext(&v),
                        Err(e) => Err(e),
                    };
                    chordal_of(&lhs, &rhs)
                });
                push_check(checks, N, "semi-conjugacy", &residuals);
            }
            _ => push_check(checks, N, "semi-conjugacy", &[]),
        }
    }
}

/// Verify a configuration end to end: a scene that fails admissibility
/// (or any other build validation) yields a failing report rather than
/// an error, so broken scenes surface as report entries.
pub fn verify_config(cfg: &SceneConfig) -> VerifyReport {
    match cfg.build() {
        Ok(BuiltScene::D2(scene)) => verify_suite(&scene),
        Ok(BuiltScene::D3(scene)) => verify_suite(&scene),
        Err(e) => {
            let identity = match &e {
                Error::NotAdmissible(_) => "admissibility",
                _ => "scene-construction",
            };
            VerifyReport {
                schema_version: 1,
                scene: format!("{} [build failed: {e}]", cfg.describe()),
                seed: cfg.seed,
                checks: vec![VerifyCheck {
                    identity: identity.into(),
                    sample_count: 0,
                    max_residual: 1.0,
                    tolerance: 0.5,
                    pass: false,
                }],
                pass: false,
            }
        }
    }
}

// ---------------------------------------------------------------------------
