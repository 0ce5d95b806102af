//! Key pool parameters, key rings and random key graph instances.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Key ring size `k` and key pool size `p`, with `1 <= k <= p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Theta {
    k: u32,
    p: u32,
}

impl Theta {
    pub fn new(k: u32, p: u32) -> Result<Self> {
        if k == 0 || k > p {
            return Err(Error::InvalidTheta { k, p });
        }
        Ok(Self { k, p })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `P < 2K`: any two rings intersect and every key graph is complete.
    pub fn is_complete(&self) -> bool {
        (self.p as u64) < 2 * self.k as u64
    }
}

impl std::fmt::Display for Theta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(K={}, P={})", self.k, self.p)
    }
}

/// Master seed for every random quantity in the crate.
///
/// Graph `i` of an experiment draws from ChaCha8 keyed by
/// `seed_from_u64(master)` with the stream id set to `i`, so every graph owns
/// an independent, reproducible stream regardless of which worker builds it.
/// Sub-experiments (sweep cells, the matched Erdős–Rényi run) use
/// [`Seed::derive`], a SplitMix64 mix of the master with a tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Seed(pub u64);

impl Seed {
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }

    pub fn derive(self, tag: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(tag)))
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A set of `K` distinct keys from `[0, P)`, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct KeyRing(Vec<u32>);

impl KeyRing {
    /// Validates `keys` against `theta`; order of the input does not matter.
    pub fn new(mut keys: Vec<u32>, theta: Theta) -> Result<Self> {
        keys.sort_unstable();
        if keys.len() != theta.k() as usize {
            return Err(Error::InvalidRing(format!(
                "expected {} keys, got {}",
                theta.k(),
                keys.len()
            )));
        }
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRing("repeated key".into()));
        }
        if let Some(&last) = keys.last() {
            if last >= theta.p() {
                return Err(Error::InvalidRing(format!(
                    "key {last} outside pool of size {}",
                    theta.p()
                )));
            }
        }
        Ok(Self(keys))
    }

    pub fn keys(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Linear merge over the two sorted key lists.
    pub fn intersects(&self, other: &KeyRing) -> bool {
        sorted_intersect(&self.0, &other.0)
    }
}

pub(crate) fn sorted_intersect(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Draws a uniformly random `K`-subset of `[0, P)` with Floyd's algorithm.
pub fn sample_key_ring<R: Rng + ?Sized>(theta: Theta, rng: &mut R) -> KeyRing {
    let (k, p) = (theta.k(), theta.p());
    let mut keys: Vec<u32> = Vec::with_capacity(k as usize);
    for j in (p - k)..p {
        let t = rng.random_range(0..=j);
        match keys.binary_search(&t) {
            // every key drawn so far is below j
            Ok(_) => keys.push(j),
            Err(pos) => keys.insert(pos, t),
        }
    }
    KeyRing(keys)
}

/// Nodes sharing at least one key are adjacent.
pub fn adjacent(a: &KeyRing, b: &KeyRing) -> bool {
    a.intersects(b)
}

/// `n` nodes with their key rings. Adjacency is always derived from the rings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyGraph {
    theta: Theta,
    rings: Vec<KeyRing>,
}

impl KeyGraph {
    /// Graph drawn from stream 0 of `seed`.
    pub fn build(n: usize, theta: Theta, seed: Seed) -> Result<Self> {
        Self::build_indexed(n, theta, seed, 0)
    }

    /// Graph drawn from stream `index` of `seed`; experiments use the trial index.
    pub fn build_indexed(n: usize, theta: Theta, seed: Seed, index: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut rng = seed.stream(index);
        Ok(Self::sample_with(n, theta, &mut rng))
    }

    pub(crate) fn sample_with<R: Rng + ?Sized>(n: usize, theta: Theta, rng: &mut R) -> Self {
        let rings = (0..n).map(|_| sample_key_ring(theta, rng)).collect();
        Self { theta, rings }
    }

    pub fn from_rings(theta: Theta, rings: Vec<Vec<u32>>) -> Result<Self> {
        if rings.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let rings = rings
            .into_iter()
            .map(|r| KeyRing::new(r, theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { theta, rings })
    }

    pub fn n(&self) -> usize {
        self.rings.len()
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn rings(&self) -> &[KeyRing] {
        &self.rings
    }

    pub fn ring(&self, i: usize) -> &KeyRing {
        &self.rings[i]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && self.rings[i].intersects(&self.rings[j])
    }

    /// All edges `(i, j)` with `i < j`, by pairwise testing.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.adjacent(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n()).filter(|&j| self.adjacent(i, j)).count()
    }
}
