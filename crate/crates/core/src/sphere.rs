//! Sampling on the unit sphere of `ℂ^d` and a derivative-free maximizer for
//! continuous functions of a direction `ζ ∈ ∂𝔹_d`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::par;

pub type Direction = Vec<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One point uniformly distributed on `∂𝔹_d` (normalized complex Gaussian).
pub fn random_direction<R: rand::Rng>(d: usize, rng: &mut R) -> Direction {
    loop {
        let v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn random_directions(d: usize, count: usize, seed: u64) -> Vec<Direction> {
    let mut r = rng(seed);
    (0..count).map(|_| random_direction(d, &mut r)).collect()
}

/// Uniform point in the open ball of radius `max_radius`.
pub fn random_ball_point<R: rand::Rng>(d: usize, max_radius: f64, rng: &mut R) -> Vec<Complex64> {
    let dir = random_direction(d, rng);
    let u: f64 = rng.random();
    // the volume of a ball of real dimension 2d scales like t^{2d}
    let t = max_radius * u.powf(1.0 / (2 * d) as f64);
    dir.into_iter().map(|x| x * t).collect()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axis(d: usize, i: usize) -> Direction {
    let mut e = vec![Complex64::new(0.0, 0.0); d];
    e[i] = Complex64::new(1.0, 0.0);
    e
}

/// Result of [`maximize_on_sphere`].
#[derive(Clone, Debug)]
pub struct SphereMax {
    pub value: f64,
    pub direction: Direction,
    pub evaluations: usize,
}

/// Maximizes `objective` over `∂𝔹_d`.
///
/// Candidates are the coordinate axes, any caller-supplied `hints`, and
/// `samples` seeded random directions; the best of them (first in that
/// order on ties) is refined by compass search over the `2d` real
/// coordinates with projection back to the sphere, halving the step
/// `refine_steps` times. The returned value is a lower bound for the true
/// supremum.
pub fn maximize_on_sphere<F>(
    d: usize,
    samples: usize,
    refine_steps: usize,
    seed: u64,
    hints: &[Direction],
    objective: F,
) -> SphereMax
where
    F: Fn(&[Complex64]) -> f64 + Sync + Send,
{
    if d == 1 {
        let z = vec![Complex64::new(1.0, 0.0)];
        return SphereMax {
            value: objective(&z),
            direction: z,
            evaluations: 1,
        };
    }
    let mut candidates: Vec<Direction> = (0..d).map(|i| axis(d, i)).collect();
    candidates.extend(hints.iter().cloned());
    candidates.extend(random_directions(d, samples, seed));
    let values = par::map_slice(&candidates, |z| objective(z));
    let mut evaluations = values.len();
    let best = par::first_argmax(&values).expect("at least one candidate");
    let mut best_value = values[best];
    let mut x: Vec<f64> = candidates[best].iter().flat_map(|z| [z.re, z.im]).collect();

    let mut step = 0.25;
    for _ in 0..refine_steps {
        // bounded number of improving sweeps per step size
        for _ in 0..64 {
            let trial_points: Vec<Direction> = (0..4 * d)
                .map(|k| {
                    let mut y = x.clone();
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    y[k / 2] += sign * step;
                    to_direction(&y)
                })
                .collect();
            let trial_values = par::map_slice(&trial_points, |z| objective(z));
            evaluations += trial_values.len();
            let k = match par::first_argmax(&trial_values) {
                Some(k) if trial_values[k] > best_value => k,
                _ => break,
            };
            best_value = trial_values[k];
            x = trial_points[k].iter().flat_map(|z| [z.re, z.im]).collect();
        }
        step *= 0.5;
    }
    SphereMax {
        value: best_value,
        direction: to_direction(&x),
        evaluations,
    }
}

fn to_direction(x: &[f64]) -> Direction {
    let v: Vec<Complex64> = x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
    let n = norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_reproducible() {
        let a = random_directions(3, 50, 7);
        let b = random_directions(3, 50, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|z| (norm(z) - 1.0).abs() < 1e-14));
        assert_ne!(a, random_directions(3, 50, 8));
    }

    #[test]
    fn ball_points_inside() {
        let mut r = rng(3);
        for _ in 0..200 {
            let p = random_ball_point(4, 0.9, &mut r);
            assert!(norm(&p) < 0.9);
        }
    }

    #[test]
    fn maximizes_product_modulus() {
        // |z1 z2| on ∂𝔹_2 peaks at 1/2 with |z1| = |z2|
        let m = maximize_on_sphere(2, 64, 30, 1, &[], |z| (z[0] * z[1]).norm());
        assert!((m.value - 0.5).abs() < 1e-8, "{}", m.value);
    }
}
