//! Deterministic point sets used by the dynamics probes.
//!
//! Direction fans are evenly spread (equal angles on the circle, a
//! Fibonacci lattice on the sphere); orbit starting points are placed on
//! concentric shells with a seeded random rotation so repeated runs with
//! the same seed reproduce byte-identical results.

use crate::geometry::{Mat, Point};
use rand::Rng;

/// Golden angle in radians, used by the Fibonacci sphere lattice.
const GOLDEN_ANGLE: f64 = 2.399963229728653;

/// `n` unit vectors equally spaced on the circle, starting at angle `phase`.
pub fn circle_directions(n: usize, phase: f64) -> Vec<Point<2>> {
    (0..n)
        .map(|k| {
            let theta = phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point::new([theta.cos(), theta.sin()])
        })
        .collect()
}

/// `n` unit vectors spread over the sphere by the Fibonacci lattice.
pub fn sphere_directions(n: usize) -> Vec<Point<3>> {
    (0..n)
        .map(|k| {
            // Latitude from an equal-area stratification, longitude from
            // the golden angle.
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = GOLDEN_ANGLE * k as f64;
            Point::new([rho * phi.cos(), rho * phi.sin(), z])
        })
        .collect()
}

/// Evenly spread unit directions in dimension `N` (2 or 3).
///
/// The default fan sizes used by the distortion probe are 64 on the
/// circle and 512 on the sphere.
pub fn directions<const N: usize>(n: usize) -> Vec<Point<N>> {
    match N {
        2 => circle_directions(n, 0.0)
            .into_iter()
            .map(|p| lift_point(&p.0[..]))
            .collect(),
        3 => sphere_directions(n)
            .into_iter()
            .map(|p| lift_point(&p.0[..]))
            .collect(),
        _ => panic!("direction fans are provided for dimensions 2 and 3"),
    }
}

/// Rebuild a `Point<N>` from a slice whose length matches `N`.
fn lift_point<const N: usize>(coords: &[f64]) -> Point<N> {
    let mut out = [0.0; N];
    out.copy_from_slice(coords);
    Point::new(out)
}

/// A random rotation of the plane or of space, drawn from `rng`.
fn random_rotation<const N: usize, R: Rng>(rng: &mut R) -> Mat<N> {
    match N {
        2 => Mat::plane_rotation(0, 1, rng.gen_range(0.0..std::f64::consts::TAU)),
        3 => {
            // Three Euler-style plane rotations give a well-scrambled
            // special orthogonal matrix; exact uniformity is not needed.
            let a = Mat::plane_rotation(0, 1, rng.gen_range(0.0..std::f64::consts::TAU));
            let b = Mat::plane_rotation(1, 2, rng.gen_range(0.0..std::f64::consts::TAU));
            let c = Mat::plane_rotation(0, 1, rng.gen_range(0.0..std::f64::consts::TAU));
            a.matmul(&b).matmul(&c)
        }
        _ => panic!("rotations are provided for dimensions 2 and 3"),
    }
}

/// Starting points for orbit probes: `total` points split across shells
/// of radius `fraction * radius` (the last shell absorbs the remainder),
/// each shell rotated by a seeded random rotation.
pub fn shell_starts<const N: usize, R: Rng>(
    radius: f64,
    fractions: &[f64],
    total: usize,
    rng: &mut R,
) -> Vec<Point<N>> {
    let shells = fractions.len().max(1);
    let base = total / shells;
    let mut out = Vec::with_capacity(total);
    for (s, frac) in fractions.iter().enumerate() {
        let count = if s + 1 == shells {
            total - base * (shells - 1)
        } else {
            base
        };
        let rot = random_rotation::<N, R>(rng);
        let dirs: Vec<Point<N>> = directions::<N>(count.max(1));
        for d in dirs.into_iter().take(count) {
            out.push(rot.apply(&d.scale(frac * radius)));
        }
    }
    out
}
