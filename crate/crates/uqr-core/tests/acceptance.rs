//! Acceptance gate for the library: one test per criterion, each ending
//! in a single PASS line (the harness prints the FAIL line on panic).
//! Tolerances are pinned here and are not configurable.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use uqr_core::automorphic::{AutomorphicMap, SineProfile};
use uqr_core::crystal;
use uqr_core::dynamics::{
    self, classify_orbit, denjoy_wolff, distortion_estimate, distortion_series, julia_points,
    julia_raster, DwParams, DwVerdict, IteratedMap, OrbitClass, SliceSpec, Thresholds,
};
use uqr_core::geometry::{chordal_distance, ExtendedPoint, Mat, Point};
use uqr_core::schroeder::{
    linearize, ChebMap, DeformedMap, HdMap, Involution, PowerMap, QcDeformation, UqrMap,
};

// -- builders ---------------------------------------------------------------

fn power2(d: usize) -> PowerMap<2> {
    PowerMap::standard(AutomorphicMap::<2>::zorich(crystal::zorich2()).unwrap(), d).unwrap()
}

fn cheb2(d: usize) -> ChebMap<2> {
    ChebMap::standard(AutomorphicMap::<2>::sine(crystal::sine2()).unwrap(), d).unwrap()
}

fn power3(d: usize) -> PowerMap<3> {
    PowerMap::standard(AutomorphicMap::<3>::zorich(crystal::p2()).unwrap(), d).unwrap()
}

fn cheb3(d: usize) -> ChebMap<3> {
    let s = AutomorphicMap::<3>::sine(crystal::p2_sine(), SineProfile::Cell).unwrap();
    ChebMap::standard(s, d).unwrap()
}

fn hd2(d: usize) -> HdMap<2> {
    let z = AutomorphicMap::<2>::zorich(crystal::zorich2()).unwrap();
    let s = AutomorphicMap::<2>::sine(crystal::sine2()).unwrap();
    HdMap::new(z, s, d).unwrap()
}

fn hd3(d: usize) -> HdMap<3> {
    let z = AutomorphicMap::<3>::zorich(crystal::p2()).unwrap();
    let s = AutomorphicMap::<3>::sine(crystal::p2_sine(), SineProfile::Cell).unwrap();
    HdMap::new(z, s, d).unwrap()
}

// -- sample and oracle helpers ----------------------------------------------

const SAMPLES: usize = 10_000;

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

/// Random plane point in the annulus r_lo < |y| < r_hi (log-uniform radius).
fn annulus2(rng: &mut ChaCha8Rng, r_lo: f64, r_hi: f64) -> Point<2> {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = rng.gen_range(r_lo.ln()..r_hi.ln()).exp();
    Point::new([r * theta.cos(), r * theta.sin()])
}

fn annulus3(rng: &mut ChaCha8Rng, r_lo: f64, r_hi: f64) -> Point<3> {
    loop {
        let p = Point::new([
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]);
        let n = p.norm();
        if n > 1e-3 {
            let r = rng.gen_range(r_lo.ln()..r_hi.ln()).exp();
            return p.scale(r / n);
        }
    }
}

fn beam3(rng: &mut ChaCha8Rng, spread: f64, height: f64) -> Point<3> {
    Point::new([
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
        rng.gen_range(-height..height),
    ])
}

fn as_complex(p: &Point<2>) -> Complex64 {
    Complex64::new(p.0[0], p.0[1])
}

fn from_complex(w: Complex64) -> ExtendedPoint<2> {
    ExtendedPoint::finite([w.re, w.im])
}

fn chordal_to_complex(got: &ExtendedPoint<2>, want: Complex64) -> f64 {
    chordal_distance(got, &from_complex(want))
}

fn chebyshev_recurrence(w: Complex64, d: usize) -> Complex64 {
    let (mut prev, mut cur) = (Complex64::new(1.0, 0.0), w);
    for _ in 1..d {
        let next = 2.0 * w * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

// -- criterion 1 ------------------------------------------------------------

#[test]
fn criterion_01_planar_power_matches_complex_powers() {
    let mut worst: f64 = 0.0;
    let start = Instant::now();
    for d in [2usize, 3] {
        let f = power2(d);
        let mut r = rng(1000 + d as u64);
        for _ in 0..SAMPLES {
            let y = annulus2(&mut r, 0.1, 10.0);
            let got = f.eval_point(&y).unwrap();
            let want = as_complex(&y).powu(d as u32);
            worst = worst.max(chordal_to_complex(&got, want));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(worst < 1e-12, "max chordal error {worst:e}");
    assert!(elapsed < 1.0, "took {elapsed:.3} s");
    println!(
        "criterion 01 (planar power vs complex powers): PASS  max={worst:.3e} tol=1e-12 time={elapsed:.3}s"
    );
}

// -- criterion 2 ------------------------------------------------------------

#[test]
fn criterion_02_planar_chebyshev_matches_recurrence() {
    let mut worst: f64 = 0.0;
    for d in [2usize, 3, 4] {
        let f = cheb2(d);
        let mut r = rng(2000 + d as u64);
        for _ in 0..SAMPLES {
            let y = Point::new([r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)]);
            let got = f.eval_point(&y).unwrap();
            let want = chebyshev_recurrence(as_complex(&y), d);
            worst = worst.max(chordal_to_complex(&got, want));
        }
    }
    assert!(worst < 1e-10, "max chordal error {worst:e}");
    println!("criterion 02 (planar chebyshev vs recurrence): PASS  max={worst:.3e} tol=1e-10");
}

// -- criterion 3 ------------------------------------------------------------

#[test]
fn criterion_03_joukowsky_matches_laurent_mean() {
    let mut worst: f64 = 0.0;
    for d in [1usize, 2, 3] {
        let f = hd2(d);
        let mut r = rng(3000 + d as u64);
        for _ in 0..SAMPLES {
            let y = annulus2(&mut r, 0.1, 10.0);
            let got = f.eval_point(&y).unwrap();
            let w = as_complex(&y);
            let want = (w.powi(d as i32) + w.powi(-(d as i32))) / 2.0;
            worst = worst.max(chordal_to_complex(&got, want));
        }
    }
    assert!(worst < 1e-12, "max chordal error {worst:e}");
    println!("criterion 03 (joukowsky analogue vs laurent mean): PASS  max={worst:.3e} tol=1e-12");
}

// -- criterion 4 ------------------------------------------------------------

#[test]
fn criterion_04_spatial_conjugacy_holds_for_iterates() {
    // Base functional equation over wide beam samples.
    let mut worst: f64 = 0.0;
    let base_cases: Vec<(Box<dyn Fn(&Point<3>) -> uqr_core::Result<f64>>, u64, &str)> = vec![
        (Box::new({ let f = power3(2); move |x| f.functional_equation_residual(x) }), 41, "power d=2"),
        (Box::new({ let f = power3(3); move |x| f.functional_equation_residual(x) }), 42, "power d=3"),
        (Box::new({ let f = cheb3(2); move |x| f.functional_equation_residual(x) }), 43, "cheb d=2"),
    ];
    for (resid, tag, name) in &base_cases {
        let mut r = rng(4000 + tag);
        let mut m: f64 = 0.0;
        for _ in 0..SAMPLES {
            let x = beam3(&mut r, 4.0, 3.0);
            m = m.max(resid(&x).unwrap_or(f64::INFINITY));
        }
        assert!(m < 1e-9, "{name}: base residual {m:e}");
        worst = worst.max(m);
    }

    // Iterate form: f^m(h(x)) = h(A^m x) for m ≤ 8.  Heights are kept
    // small so the eighth power of the dilation stays inside the beam.
    let mut worst_iter: f64 = 0.0;
    for (d, tag) in [(2usize, 51u64), (3, 52)] {
        let f = power3(d);
        let mut r = rng(4000 + tag);
        for _ in 0..1000 {
            let x = beam3(&mut r, 2.0, 0.1);
            let mut ax = x;
            let mut fh = f.automorphic.eval(&x).map(ExtendedPoint::Finite).unwrap();
            for _ in 1..=8 {
                ax = f.a.apply(&ax);
                fh = f.eval_ext(&fh).unwrap();
                let want = ExtendedPoint::Finite(f.automorphic.eval(&ax).unwrap());
                worst_iter = worst_iter.max(chordal_distance(&fh, &want));
            }
        }
    }
    {
        let f = cheb3(2);
        let mut r = rng(4053);
        for _ in 0..1000 {
            let x = beam3(&mut r, 2.0, 0.1);
            let mut ax = x;
            let mut fh = f.automorphic.eval(&x).map(ExtendedPoint::Finite).unwrap();
            for _ in 1..=8 {
                ax = f.a.apply(&ax);
                fh = f.eval_ext(&fh).unwrap();
                let want = ExtendedPoint::Finite(f.automorphic.eval(&ax).unwrap());
                worst_iter = worst_iter.max(chordal_distance(&fh, &want));
            }
        }
    }
    assert!(worst_iter < 1e-8, "iterate residual {worst_iter:e}");
    println!(
        "criterion 04 (spatial conjugacy, base and iterates): PASS  base={worst:.3e} tol=1e-9  iter={worst_iter:.3e} tol=1e-8"
    );
}

// -- criterion 5 ------------------------------------------------------------

#[test]
fn criterion_05_strong_automorphy_and_seam_continuity() {
    fn automorphy_max<const N: usize>(
        h: &AutomorphicMap<N>,
        tag: u64,
        spread: f64,
    ) -> f64 {
        let gens = dynamics::group_generators(&h.group);
        let mut r = rng(5000 + tag);
        let mut worst: f64 = 0.0;
        for i in 0..SAMPLES {
            let mut c = [0.0; N];
            for v in c.iter_mut().take(N - 1) {
                *v = r.gen_range(-spread..spread);
            }
            c[N - 1] = r.gen_range(-3.0..3.0);
            let x = Point::new(c);
            let g = &gens[i % gens.len()];
            worst = worst.max(h.automorphy_defect(&x, g).unwrap_or(f64::INFINITY));
        }
        worst
    }

    let z2 = AutomorphicMap::<2>::zorich(crystal::zorich2()).unwrap();
    let s2 = AutomorphicMap::<2>::sine(crystal::sine2()).unwrap();
    let w2 = automorphy_max(&z2, 1, 8.0).max(automorphy_max(&s2, 2, 8.0));
    assert!(w2 < 1e-12, "planar automorphy defect {w2:e}");

    let z3 = AutomorphicMap::<3>::zorich(crystal::p2()).unwrap();
    let s3 = AutomorphicMap::<3>::sine(crystal::p2_sine(), SineProfile::Cell).unwrap();
    let s3a = AutomorphicMap::<3>::sine(crystal::p2_sine(), SineProfile::Averaged).unwrap();
    let w3 = automorphy_max(&z3, 3, 6.0)
        .max(automorphy_max(&s3, 4, 6.0))
        .max(automorphy_max(&s3a, 5, 6.0));
    assert!(w3 < 1e-9, "spatial automorphy defect {w3:e}");

    // Cross-face continuity of the base embedding: the map must move by
    // no more than 1e-5 when a point hops 2e-7 across any cell edge.
    let delta = 1e-7;
    let mut worst_seam: f64 = 0.0;
    for k in 0..250 {
        let s = 0.01 + 0.98 * (k as f64 + 0.5) / 250.0;
        for (a, b) in [
            (Point::new([-delta, s, 0.0]), Point::new([delta, s, 0.0])),
            (Point::new([1.0 - delta, s, 0.0]), Point::new([1.0 + delta, s, 0.0])),
            (Point::new([s, -delta, 0.0]), Point::new([s, delta, 0.0])),
            (Point::new([s, 1.0 - delta, 0.0]), Point::new([s, 1.0 + delta, 0.0])),
        ] {
            let ya = z3.eval(&a).unwrap();
            let yb = z3.eval(&b).unwrap();
            worst_seam = worst_seam.max(ya.dist(&yb));
        }
    }
    assert!(worst_seam < 1e-5, "seam jump {worst_seam:e}");
    println!(
        "criterion 05 (strong automorphy + seam continuity): PASS  n2={w2:.3e} tol=1e-12  n3={w3:.3e} tol=1e-9  seam={worst_seam:.3e} tol=1e-5"
    );
}

// -- criterion 6 ------------------------------------------------------------

#[test]
fn criterion_06_involution_identities() {
    fn run<const N: usize>(h1: &HdMap<N>, tag: u64, sample: impl Fn(&mut ChaCha8Rng) -> Point<N>) -> f64 {
        let inv = Involution::<N>;
        let mut r = rng(6000 + tag);
        let mut worst: f64 = 0.0;
        for _ in 0..SAMPLES {
            let y = ExtendedPoint::Finite(sample(&mut r));
            let once = inv.eval_ext(&y).unwrap();
            let twice = inv.eval_ext(&once).unwrap();
            worst = worst.max(chordal_distance(&twice, &y));
            let through = h1.eval_ext(&once).unwrap();
            let direct = h1.eval_ext(&y).unwrap();
            worst = worst.max(chordal_distance(&through, &direct));
        }
        worst
    }
    let w2 = run(&hd2(1), 1, |r| annulus2(r, 0.1, 10.0));
    let w3 = run(&hd3(1), 2, |r| annulus3(r, 0.1, 10.0));
    let worst = w2.max(w3);
    assert!(worst < 1e-9, "involution residual {worst:e}");
    println!("criterion 06 (involution round trip and invariance): PASS  max={worst:.3e} tol=1e-9");
}

// -- criterion 7 ------------------------------------------------------------

#[test]
fn criterion_07_semi_conjugacy_links_power_and_chebyshev() {
    fn run<const N: usize>(
        power: &PowerMap<N>,
        cheb: &ChebMap<N>,
        h1: &HdMap<N>,
        tag: u64,
        sample: impl Fn(&mut ChaCha8Rng) -> Point<N>,
    ) -> f64 {
        let mut r = rng(7000 + tag);
        let mut worst: f64 = 0.0;
        for _ in 0..SAMPLES {
            let y = ExtendedPoint::Finite(sample(&mut r));
            let lhs = cheb.eval_ext(&h1.eval_ext(&y).unwrap()).unwrap();
            let rhs = h1.eval_ext(&power.eval_ext(&y).unwrap()).unwrap();
            worst = worst.max(chordal_distance(&lhs, &rhs));
        }
        worst
    }
    let mut worst: f64 = 0.0;
    for d in [2usize, 3] {
        worst = worst.max(run(&power2(d), &cheb2(d), &hd2(1), 10 + d as u64, |r| {
            annulus2(r, 0.1, 10.0)
        }));
        worst = worst.max(run(&power3(d), &cheb3(d), &hd3(1), 20 + d as u64, |r| {
            annulus3(r, 0.1, 10.0)
        }));
    }
    assert!(worst < 1e-9, "semi-conjugacy residual {worst:e}");
    println!("criterion 07 (semi-conjugacy power/chebyshev): PASS  max={worst:.3e} tol=1e-9");
}

// -- criterion 8 ------------------------------------------------------------

/// Independent fibre oracle: preimages of w under the degree-2 spatial
/// power map lie on the sphere |v| = |w|^(1/2); scan a dense direction
/// grid, polish the near-hits with a compass search on the sphere, and
/// cluster the survivors.
fn fibre_oracle(f: &PowerMap<3>, w: &Point<3>) -> Vec<Point<3>> {
    let radius = w.norm().sqrt();
    let score = |u: &Point<3>| -> f64 {
        match f.eval_point(&u.scale(radius)) {
            Ok(v) => chordal_distance(&v, &ExtendedPoint::Finite(*w)),
            Err(_) => f64::INFINITY,
        }
    };
    let dirs = uqr_core::sampling::sphere_directions(20_000);
    let mut scored: Vec<(f64, Point<3>)> = dirs.iter().map(|u| (score(u), *u)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut found: Vec<Point<3>> = Vec::new();
    for (_, start) in scored.iter().take(40) {
        // Compass search over the sphere of directions.
        let mut u = *start;
        let mut best = score(&u);
        let mut step = 0.05_f64;
        while step > 1e-12 {
            let mut improved = true;
            while improved {
                improved = false;
                for i in 0..3 {
                    for s in [step, -step] {
                        let mut c = u;
                        c.0[i] += s;
                        let c = c.scale(1.0 / c.norm());
                        let v = score(&c);
                        if v < best {
                            best = v;
                            u = c;
                            improved = true;
                        }
                    }
                }
            }
            step *= 0.5;
        }
        if best < 1e-7 {
            let v = u.scale(radius);
            if found.iter().all(|p| p.dist(&v) > 1e-4) {
                found.push(v);
            }
        }
    }
    found
}

#[test]
fn criterion_08_fibre_cardinality_matches_the_degree() {
    let f = power3(2);
    let mut r = rng(8000);
    let mut failures: Vec<Point<3>> = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..100 {
        targets.push(annulus3(&mut r, 0.3, 3.0));
    }
    for w in &targets {
        let pre = match f.preimages(w) {
            Ok(p) => p,
            Err(_) => {
                failures.push(*w);
                continue;
            }
        };
        let distinct = pre.len() == 4
            && (0..pre.len()).all(|i| (i + 1..pre.len()).all(|j| pre[i].dist(&pre[j]) > 1e-6));
        let verified = pre.iter().all(|v| {
            chordal_distance(&f.eval_point(v).unwrap_or(ExtendedPoint::Infinity), &ExtendedPoint::Finite(*w))
                < 1e-9
        });
        if !(distinct && verified) {
            failures.push(*w);
        }
    }

    // Brute-force grid oracle on a subset: the fibre count must agree and
    // every oracle hit must match a reported preimage.
    for w in targets.iter().take(3) {
        let oracle = fibre_oracle(&f, w);
        assert_eq!(oracle.len(), 4, "oracle found {} fibre points at {w:?}", oracle.len());
        let pre = f.preimages(w).unwrap();
        for v in &oracle {
            let nearest = pre.iter().map(|p| p.dist(v)).fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-5, "oracle point {v:?} misses the reported fibre by {nearest:e}");
        }
    }

    // The Joukowsky-type analogue of degree 2 has fibres of size 8.
    let h = hd3(2);
    let mut r8 = rng(8008);
    for _ in 0..100 {
        let w = annulus3(&mut r8, 0.3, 3.0);
        let pre = match h.preimages(&w) {
            Ok(p) => p,
            Err(_) => {
                failures.push(w);
                continue;
            }
        };
        let distinct = pre.len() == 8
            && (0..pre.len()).all(|i| (i + 1..pre.len()).all(|j| pre[i].dist(&pre[j]) > 1e-6));
        let verified = pre.iter().all(|v| {
            chordal_distance(&h.eval_point(v).unwrap_or(ExtendedPoint::Infinity), &ExtendedPoint::Finite(w))
                < 1e-8
        });
        if !(distinct && verified) {
            failures.push(w);
        }
    }

    // At most one failure per hundred, and any failure must sit close to
    // a critical ray (the radial images of the cone-point columns).
    assert!(failures.len() <= 2, "{} fibre failures", failures.len());
    if !failures.is_empty() {
        let z = AutomorphicMap::<3>::zorich(crystal::p2()).unwrap();
        let cone_dirs: Vec<Point<3>> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|c| {
                let e = z.eval(&Point::new([c[0], c[1], 0.0])).unwrap();
                e.scale(1.0 / e.norm())
            })
            .collect();
        for w in &failures {
            let dist_to_rays = cone_dirs
                .iter()
                .map(|u| {
                    let along = w.dot(u).max(0.0);
                    w.dist(&u.scale(along))
                })
                .fold(f64::INFINITY, f64::min);
            assert!(
                dist_to_rays < 1e-2 * w.norm().max(1.0),
                "fibre failure at {w:?} is not near a critical ray (distance {dist_to_rays:e})"
            );
        }
    }
    println!(
        "criterion 08 (fibre cardinality, grid oracle, criticality): PASS  failures={}",
        failures.len()
    );
}

// -- criterion 9 ------------------------------------------------------------

#[test]
fn criterion_09_julia_rasters_bracket_the_invariant_sets() {
    let th = Thresholds::default();

    // Planar power map: the interface hugs the unit circle.
    let f2 = power2(2);
    let spec2 = SliceSpec::<2>::axis_aligned(Point::zero(), 0, 1, 2.0, 256).unwrap();
    let raster2 = julia_raster(&f2, &spec2, &th).unwrap();
    let bound2 = 2.0 * spec2.cell_diagonal();
    let pts2 = julia_points(&raster2);
    assert!(!pts2.is_empty());
    for p in &pts2 {
        assert!((p.norm() - 1.0).abs() <= bound2, "planar interface at |x| = {}", p.norm());
    }

    // Spatial power map on a slice through the beam axis: unit sphere.
    let f3 = power3(2);
    let spec3 = SliceSpec::<3>::axis_aligned(Point::zero(), 0, 2, 2.0, 256).unwrap();
    let raster3 = julia_raster(&f3, &spec3, &th).unwrap();
    let bound3 = 2.0 * spec3.cell_diagonal();
    let pts3 = julia_points(&raster3);
    assert!(!pts3.is_empty());
    for p in &pts3 {
        assert!((p.norm() - 1.0).abs() <= bound3, "spatial interface at |x| = {}", p.norm());
    }

    // Shear-conjugated copy: the interface hugs the sheared sphere.
    let def = QcDeformation::Shear { strength: 0.5 };
    let g = DeformedMap::new(Box::new(power3(2)), def).unwrap();
    let spec_s = SliceSpec::<3>::axis_aligned(Point::zero(), 0, 1, 2.5, 256).unwrap();
    let raster_s = julia_raster(&g, &spec_s, &th).unwrap();
    let bound_s = 2.0 * spec_s.cell_diagonal();
    let pts_s = julia_points(&raster_s);
    assert!(!pts_s.is_empty());
    for p in &pts_s {
        let back = def.apply_inverse(p);
        assert!(
            (back.norm() - 1.0).abs() <= bound_s,
            "sheared interface pulls back to |x| = {}",
            back.norm()
        );
    }

    // Planar Chebyshev analogue: whatever interface exists concentrates
    // on the segment [-1, 1] x {0} (grid centers never lie on the
    // segment, so the interface may legitimately be empty).
    let c2 = cheb2(2);
    let spec_c = SliceSpec::<2>::axis_aligned(Point::zero(), 0, 1, 2.0, 256).unwrap();
    let raster_c = julia_raster(&c2, &spec_c, &th).unwrap();
    let cell = spec_c.cell_size();
    let pts_c = julia_points(&raster_c);
    for p in &pts_c {
        let dx = (p.0[0].abs() - 1.0).max(0.0);
        let dist = (dx * dx + p.0[1] * p.0[1]).sqrt();
        assert!(dist <= 2.0 * cell, "chebyshev interface at distance {dist} from the segment");
    }
    println!(
        "criterion 09 (julia rasters bracket invariant sets): PASS  interfaces n2={} n3={} sheared={} cheb={}",
        pts2.len(),
        pts3.len(),
        pts_s.len(),
        pts_c.len()
    );
}

// -- criterion 10 -----------------------------------------------------------

#[test]
fn criterion_10_linearizers_conjugate_to_the_multiplier() {
    // Planar power map, fixed point at the origin of the lift.
    let f2 = power2(2);
    let lin2 = linearize(&f2.automorphic, &f2.a, &Point::zero()).unwrap();
    let mut r = rng(10_001);
    let mut w2: f64 = 0.0;
    for _ in 0..SAMPLES {
        let dir = annulus2(&mut r, 1e-3, 1.0);
        let v = dir.scale(r.gen_range(0.0..10.0) / dir.norm());
        w2 = w2.max(lin2.conjugacy_residual(&v).unwrap_or(f64::INFINITY));
    }
    assert!(w2 < 1e-12, "planar linearizer residual {w2:e}");

    // Spatial power map at the canonical transverse fixed point, whose
    // multiplier acts as -2 on the transverse plane.
    let f3 = power3(2);
    let x_star = Point::new([2.0 / 3.0, 0.0, 0.0]);
    let lin3 = linearize(&f3.automorphic, &f3.a, &x_star).unwrap();
    assert!((lin3.phi.scale - 2.0).abs() < 1e-12);
    let o = &lin3.phi.orthogonal.0;
    for (i, j, want) in [
        (0usize, 0usize, -1.0),
        (1, 1, -1.0),
        (2, 2, 1.0),
        (0, 1, 0.0),
        (1, 0, 0.0),
        (0, 2, 0.0),
        (2, 0, 0.0),
        (1, 2, 0.0),
        (2, 1, 0.0),
    ] {
        assert!((o[i][j] - want).abs() < 1e-12, "phi[{i}][{j}] = {}", o[i][j]);
    }
    let mut r = rng(10_002);
    let mut w3: f64 = 0.0;
    for _ in 0..SAMPLES {
        let dir = annulus3(&mut r, 1e-3, 1.0);
        let v = dir.scale(r.gen_range(0.0..10.0) / dir.norm());
        w3 = w3.max(lin3.conjugacy_residual(&v).unwrap_or(f64::INFINITY));
    }
    assert!(w3 < 1e-9, "spatial linearizer residual {w3:e}");

    // Classical model: f(z) = 2z^2 - 1 is linearized by L(z) = cosh(sqrt(2z))
    // about its fixed point 1, whose multiplier is f'(1) = 4.
    let mut r = rng(10_003);
    let mut wc: f64 = 0.0;
    for _ in 0..1000 {
        let z = Complex64::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let l = |z: Complex64| ((2.0 * z).sqrt()).cosh();
        let got = 2.0 * l(z) * l(z) - 1.0;
        let want = l(4.0 * z);
        wc = wc.max((got - want).norm() / (1.0 + want.norm()));
    }
    assert!(wc < 1e-12, "cosh linearizer residual {wc:e}");
    println!(
        "criterion 10 (linearizer conjugacies): PASS  n2={w2:.3e} tol=1e-12  n3={w3:.3e} tol=1e-9  cosh={wc:.3e} tol=1e-12"
    );
}

// -- criterion 11 -----------------------------------------------------------

#[test]
fn criterion_11_denjoy_wolff_trichotomy() {
    // Superattracting interior fixed point: uniform convergence to 0.
    let f = power3(2);
    let report = denjoy_wolff(&f, &DwParams::default(), None).unwrap();
    let limit = match report.verdict {
        DwVerdict::Converged(ExtendedPoint::Finite(p)) => p,
        other => panic!("expected convergence, got {other:?}"),
    };
    assert!(limit.norm() < 1e-8, "limit at |x| = {}", limit.norm());
    assert!(report.converged_at.unwrap() <= 40, "converged at {:?}", report.converged_at);

    // Elliptic rotation: recurrent, distance-preserving.
    let rot = uqr_core::geometry::BallMobius::<3>::rotation(Mat::plane_rotation(
        0,
        1,
        2.0 * std::f64::consts::PI / 5.0,
    ))
    .unwrap();
    let rep_rot = denjoy_wolff(&rot, &DwParams::default(), None).unwrap();
    assert_eq!(rep_rot.verdict, DwVerdict::AutomorphismLike);

    // Shear-conjugated copy converges to the image of the origin (the
    // shear is linear and fixes the origin).
    let def = QcDeformation::Shear { strength: 0.5 };
    let g = DeformedMap::new(Box::new(power3(2)), def).unwrap();
    let rep_shear = denjoy_wolff(&g, &DwParams::default(), Some(&def)).unwrap();
    match rep_shear.verdict {
        DwVerdict::Converged(ExtendedPoint::Finite(p)) => {
            assert!(p.norm() < 1e-6, "sheared limit at |x| = {}", p.norm());
        }
        other => panic!("expected convergence of the sheared copy, got {other:?}"),
    }

    // Independent nets agree on the limit.
    let other = denjoy_wolff(&f, &DwParams { seed: 1234, ..DwParams::default() }, None).unwrap();
    let limit_b = match other.verdict {
        DwVerdict::Converged(p) => p,
        other => panic!("expected convergence, got {other:?}"),
    };
    let gap = chordal_distance(&ExtendedPoint::Finite(limit), &limit_b);
    assert!(gap < 1e-6, "independent nets disagree by {gap:e}");
    println!(
        "criterion 11 (denjoy-wolff trichotomy): PASS  converged_at={} net_gap={gap:.3e}",
        report.converged_at.unwrap()
    );
}

// -- criterion 12 -----------------------------------------------------------

#[test]
fn criterion_12_distortion_estimates() {
    // Planar scenes are conformal away from the branch set.
    let radii = dynamics::default_radii();
    let mut worst: f64 = 1.0;
    for (label, est) in [
        ("power", distortion_estimate(&power2(2), &Point::new([1.1, 0.4]), &radii).unwrap()),
        ("power", distortion_estimate(&power2(3), &Point::new([0.4, -0.7]), &radii).unwrap()),
        ("cheb", distortion_estimate(&cheb2(2), &Point::new([0.7, 0.3]), &radii).unwrap()),
        ("cheb", distortion_estimate(&cheb2(3), &Point::new([-1.2, 0.5]), &radii).unwrap()),
    ] {
        assert!(est.estimate <= 1.0 + 1e-6, "{label}: H = {}", est.estimate);
        worst = worst.max(est.estimate);
    }

    // Affine shear: the estimate matches the singular-value ratio.
    struct Affine(QcDeformation);
    impl UqrMap<3> for Affine {
        fn eval_ext(&self, x: &ExtendedPoint<3>) -> uqr_core::Result<ExtendedPoint<3>> {
            Ok(match x {
                ExtendedPoint::Finite(p) => ExtendedPoint::Finite(self.0.apply(p)),
                ExtendedPoint::Infinity => ExtendedPoint::Infinity,
            })
        }
        fn degree(&self) -> usize {
            1
        }
        fn label(&self) -> String {
            "affine shear".into()
        }
    }
    let beta = 0.5_f64;
    let aff = Affine(QcDeformation::Shear { strength: beta });
    let est = distortion_estimate(&aff, &Point::new([0.2, -0.1, 0.3]), &[1e-2, 1e-3, 1e-4]).unwrap();
    let t = beta * beta + 2.0;
    let exact = (t + (t * t - 4.0).sqrt()) / 2.0;
    assert!((est.estimate - exact).abs() < 1e-3, "shear H = {} vs {exact}", est.estimate);

    // Iterated spatial power map along the invariant sphere: uniformly
    // quasiregular behavior keeps the series within 10x the first step.
    let f = power3(2);
    let x = Point::new([0.3, 0.4, 0.5]);
    let x = x.scale(1.0 / x.norm());
    let series = distortion_series(&f, &x, 10, 1e-2).unwrap();
    let base = series[0].estimate;
    let mut series_max: f64 = 0.0;
    for (m, rep) in series.iter().enumerate() {
        assert!(
            rep.estimate <= 10.0 * base,
            "iterate {}: H = {} vs base {base}",
            m + 1,
            rep.estimate
        );
        series_max = series_max.max(rep.estimate);
    }
    println!(
        "criterion 12 (distortion estimates): PASS  planar_max={worst:.9}  shear={:.6} (exact {exact:.6})  series_max={series_max:.3} base={base:.3}",
        est.estimate
    );
}

// -- supporting invariants ---------------------------------------------------

#[test]
fn escape_classification_is_monotone_for_power_maps() {
    let f = power3(2);
    let th = Thresholds::default();
    let mut r = rng(13_000);
    for _ in 0..200 {
        let u = annulus3(&mut r, 1.0, 1.0 + 1e-12);
        let u = u.scale(1.0 / u.norm());
        for s in [0.9, 0.95, 0.975, 1.025, 1.05, 1.1] {
            let rec = classify_orbit(&f, &ExtendedPoint::Finite(u.scale(s)), &th);
            let want = if s < 1.0 { OrbitClass::ToZero } else { OrbitClass::ToInfinity };
            assert_eq!(rec.classification, want, "at radius {s}");
            assert!(rec.iterations_used <= 200);
        }
    }
}

#[test]
fn interface_corners_witness_chordal_blowup() {
    let f = power3(2);
    let spec = SliceSpec::<3>::axis_aligned(Point::zero(), 0, 2, 2.0, 64).unwrap();
    let raster = julia_raster(&f, &spec, &Thresholds::default()).unwrap();
    let cells = raster.interface_cells();
    assert!(!cells.is_empty());
    for (i, j) in cells.iter().take(24) {
        let corners = raster.spec.cell_corners(*i, *j);
        let hit = dynamics::blowup_iterations(&f, &corners, 1.0, 60);
        assert!(hit.is_some(), "corners of cell ({i}, {j}) never spread out");
        assert!(hit.unwrap() <= 60);
    }
}

#[test]
fn iterated_maps_compose_the_expected_degree() {
    let f = power3(2);
    let it = IteratedMap { inner: &f, count: 3 };
    assert_eq!(it.degree(), 64);
    let y = Point::new([0.9, 0.2, -0.1]);
    let mut want = ExtendedPoint::Finite(y);
    for _ in 0..3 {
        want = f.eval_ext(&want).unwrap();
    }
    let got = it.eval_ext(&ExtendedPoint::Finite(y)).unwrap();
    assert!(chordal_distance(&got, &want) == 0.0);
}
