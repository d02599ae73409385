//! Deterministic sample generation.
//!
//! Probes and monitors need reproducible point sets: two runs with the same
//! seed must produce byte-identical results. We use a seeded Halton sequence
//! (the seed offsets the start index) rather than a PRNG, so a sample set is
//! fully described by `(seed, count)`.

use crate::scalar::Real;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical-inverse of `i` in the given base, in `[0, 1)`.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Halton point generator over the unit cube `[0,1)^dim`, `dim <= 8`.
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(
            dim >= 1 && dim <= PRIMES.len(),
            "unsupported dimension {dim}"
        );
        // skip the first few points (they cluster at the cube corner) and
        // fold the seed into the start index
        Halton {
            dim,
            index: 16 + seed.wrapping_mul(7919) % 100_003,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        (0..self.dim)
            .map(|d| radical_inverse(self.index, PRIMES[d]))
            .collect()
    }
}

/// `count` points in the axis-aligned box `[lo, hi]`.
pub fn box_points<T: Real>(lo: &[T], hi: &[T], count: usize, seed: u64) -> Vec<Vec<T>> {
    assert_eq!(lo.len(), hi.len());
    let mut h = Halton::new(lo.len(), seed);
    (0..count)
        .map(|_| {
            let p = h.next_point();
            lo.iter()
                .zip(hi)
                .zip(p)
                .map(|((&a, &b), t)| a + (b - a) * T::of(t))
                .collect()
        })
        .collect()
}

/// `count` points in the closed unit ball of the given dimension, generated
/// by rejection from the cube. Deterministic for a fixed seed.
pub fn unit_ball_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut h = Halton::new(dim, seed);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count {
        guard += 1;
        assert!(guard < 1000 * count.max(8), "rejection sampling stalled");
        let p: Vec<f64> = h.next_point().into_iter().map(|t| 2.0 * t - 1.0).collect();
        let n2: f64 = p.iter().map(|v| v * v).sum();
        if n2 <= 1.0 && n2 > 1e-12 {
            out.push(p);
        }
    }
    out
}

/// Points in the ball of radius `r` around `center`: a fixed unit-ball
/// pattern rescaled per radius, so shrinking-ball sweeps see geometrically
/// similar sample sets.
pub fn ball_points<T: Real>(center: &[T], r: T, count: usize, seed: u64) -> Vec<Vec<T>> {
    unit_ball_points(center.len(), count, seed)
        .into_iter()
        .map(|p| {
            center
                .iter()
                .zip(p)
                .map(|(&c, t)| c + r * T::of(t))
                .collect()
        })
        .collect()
}
