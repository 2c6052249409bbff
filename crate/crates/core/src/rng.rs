//! Deterministic random streams.
//!
//! Two generators are used. Structural randomness (permutations for lifting
//! and expansion) comes from ChaCha8 keyed by a seed and selected by a stream
//! number, so every block of a matrix has its own independent stream. Channel
//! noise comes from a counter-based generator built on the SplitMix64
//! finalizer, which maps `(key, counter)` to a uniform word with no state.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ChaCha8 stream for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 output function (Steele, Lea, Flood 2014 constants).
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child key from a parent key and a list of indices.
pub fn derive_key(parent: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(parent), |acc, &i| splitmix64(acc ^ splitmix64(i.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Counter-based normal generator.
///
/// Sample `i` of key `k` is produced by Box-Muller from the two uniforms
/// `u1 = (splitmix64(k + 2i) >> 11 + 0.5) / 2^53` and likewise `u2` from
/// `2i + 1`. Results depend only on `(key, i)`.
#[derive(Debug, Clone, Copy)]
pub struct CounterNormal {
    key: u64,
}

impl CounterNormal {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    #[inline]
    fn uniform(&self, counter: u64) -> f64 {
        let bits = splitmix64(self.key.wrapping_add(counter.wrapping_mul(0x9e37_79b9_7f4a_7c15))) >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal sample number `i`.
    #[inline]
    pub fn sample(&self, i: u64) -> f64 {
        let u1 = self.uniform(2 * i);
        let u2 = self.uniform(2 * i + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Uniform random permutation of `0..n`.
pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

const DISJOINT_ATTEMPTS: usize = 10_000;

/// `count` pairwise disjoint permutations of `0..n` (`count <= n`).
///
/// Each permutation is drawn uniformly and redrawn until it shares no position
/// with the ones already accepted. If a draw keeps failing (large `count`
/// relative to `n`) the remaining permutations are taken as distinct cyclic
/// shifts of a random relabelling, which are disjoint by construction.
pub fn disjoint_permutations<R: Rng>(n: usize, count: usize, rng: &mut R) -> Vec<Vec<usize>> {
    assert!(count <= n, "cannot draw {count} disjoint permutations of size {n}");
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(count);
    'outer: while perms.len() < count {
        for _ in 0..DISJOINT_ATTEMPTS {
            let p = random_permutation(n, rng);
            if perms.iter().all(|q| q.iter().zip(&p).all(|(a, b)| a != b)) {
                perms.push(p);
                continue 'outer;
            }
        }
        break;
    }
    if perms.len() < count {
        let relabel = random_permutation(n, rng);
        let mut shifts: Vec<usize> = (0..n).collect();
        shifts.shuffle(rng);
        perms = shifts[..count]
            .iter()
            .map(|&s| (0..n).map(|i| relabel[(i + s) % n]).collect())
            .collect();
    }
    perms
}
