//! Spring-embedder warm start on the complete weighted graph.
//!
//! Fruchterman–Reingold forces with a per-edge ideal length: attraction `d²/L` and
//! repulsion `L²/d` balance exactly at `d = L`, where `L` is the target distance of
//! the pair. Displacements are capped by a temperature that cools linearly to zero.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;

/// Lengths below this are clamped so forces stay finite.
const MIN_LENGTH: f64 = 1e-6;

pub fn force_directed_init(w: &Array2<f64>, seed: u64, iterations: usize) -> Vec<Point> {
    let n = w.nrows();
    if n <= 1 {
        return vec![Point::default(); n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ideal = |i: usize, j: usize| w[(i, j)].max(MIN_LENGTH);
    let mean_len = {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += ideal(i, j);
            }
        }
        s / (n * (n - 1) / 2) as f64
    };
    let mut pos: Vec<Point> = (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(-mean_len..mean_len),
                rng.random_range(-mean_len..mean_len),
            )
        })
        .collect();

    let t0 = mean_len / 2.0;
    let mut disp = vec![Point::default(); n];
    for step in 0..iterations {
        let temperature = t0 * (1.0 - step as f64 / iterations as f64);
        disp.iter_mut().for_each(|d| *d = Point::default());
        for i in 0..n {
            for j in i + 1..n {
                let mut delta = pos[i] - pos[j];
                let mut dist = delta.norm();
                if dist < MIN_LENGTH {
                    let angle = rng.random_range(0.0..std::f64::consts::TAU);
                    delta = Point::new(angle.cos(), angle.sin()) * MIN_LENGTH;
                    dist = MIN_LENGTH;
                }
                let l = ideal(i, j);
                // positive pulls the pair together
                let pull = dist * dist / l - l * l / dist;
                let f = delta * (pull / dist);
                disp[i] = disp[i] - f;
                disp[j] = disp[j] + f;
            }
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = d.norm();
            if len > 0.0 {
                *p = *p + *d * (len.min(temperature) / len);
            }
        }
    }
    center(&mut pos);
    pos
}

/// Translate so the centroid sits at the origin.
pub fn center(pos: &mut [Point]) {
    if pos.is_empty() {
        return;
    }
    let n = pos.len() as f64;
    let c = pos.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n);
    pos.iter_mut().for_each(|p| *p = *p - c);
}
