//! Samplers for the yes/no structured distributions and the two sparse
//! distributions used against the all-zero function, plus the seeded
//! randomness they are built on.
//!
//! Structured instances do not store their random functions. Every bit is a
//! pure function of `(seed, role, payload)` through [`derive_bit`].

use crate::boolfn::{BitString, IndexSet, InstanceKind, StructuredFn, TruthTable, MAX_TABLE_VARS};
use crate::error::{Error, Result};
use crate::params::Params;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A 64-bit seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Seed for trial `j` of an experiment run from `self`.
    pub fn trial(self, j: u64) -> Seed {
        Seed(mix64(self.0 ^ mix64(j.wrapping_add(0xA076_1D64_78BD_642F))))
    }

    pub fn stream(self, role: &str) -> RandomStream {
        RandomStream::new(self, role)
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(mut h: u64, bytes: &[u8]) -> u64 {
    let mut chunks = bytes.chunks_exact(8);
    for c in &mut chunks {
        h = mix64(h ^ u64::from_le_bytes(c.try_into().unwrap()));
    }
    let rest = chunks.remainder();
    if !rest.is_empty() {
        let mut buf = [0u8; 8];
        buf[..rest.len()].copy_from_slice(rest);
        h = mix64(h ^ u64::from_le_bytes(buf));
    }
    mix64(h ^ bytes.len() as u64)
}

/// 64-bit digest of `(seed, role, payload)`. Role and payload are length-framed.
pub fn digest(seed: Seed, role: &str, payload: &[u8]) -> u64 {
    let h = mix64(seed.0);
    let h = absorb(h, role.as_bytes());
    absorb(h, payload)
}

/// Deterministic Bernoulli(`threshold`) bit keyed by `(seed, role, payload)`.
///
/// The top 53 bits of the digest give a uniform point of `[0, 1)`; the bit is
/// one iff that point is below `threshold`.
pub fn derive_bit(seed: Seed, role: &str, payload: &[u8], threshold: f64) -> bool {
    let u = (digest(seed, role, payload) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    u < threshold
}

/// Byte payload builder for [`derive_bit`].
#[derive(Debug, Default, Clone)]
pub struct Payload(Vec<u8>);

impl Payload {
    pub fn new() -> Self {
        Payload(Vec::new())
    }

    pub fn word(mut self, w: u64) -> Self {
        self.0.extend_from_slice(&w.to_le_bytes());
        self
    }

    /// Length-prefixed bit string.
    pub fn bits(mut self, x: &BitString) -> Self {
        self = self.word(x.len() as u64);
        for &w in x.words() {
            self = self.word(w);
        }
        self
    }

    /// Length-prefixed index list.
    pub fn indices(mut self, idx: &[usize]) -> Self {
        self = self.word(idx.len() as u64);
        for &i in idx {
            self = self.word(i as u64);
        }
        self
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Deterministic generator derived from a seed and a role label.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: Seed, role: &str) -> Self {
        RandomStream {
            rng: ChaCha8Rng::seed_from_u64(digest(seed, role, b"stream")),
        }
    }

    /// Independent child stream; advances `self` by one draw.
    pub fn fork(&mut self, role: &str) -> RandomStream {
        let s = Seed(self.rng.next_u64());
        RandomStream::new(s, role)
    }

    /// Fresh seed drawn from the stream.
    pub fn seed(&mut self) -> Seed {
        Seed(self.rng.next_u64())
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        // `gen_bool` rejects p outside [0, 1]; callers pass probabilities.
        self.rng.gen_bool(p.clamp(0.0, 1.0))
    }

    pub fn uniform_f64(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Uniform `size`-subset of `[n]` by a partial Fisher–Yates shuffle.
pub fn sample_subset(n: usize, size: usize, stream: &mut RandomStream) -> Result<IndexSet> {
    if size > n {
        return Err(Error::InvalidInput(format!("subset size {size} exceeds {n}")));
    }
    let mut perm: Vec<usize> = (1..=n).collect();
    for i in 0..size {
        let j = i + stream.below(n - i);
        perm.swap(i, j);
    }
    perm.truncate(size);
    IndexSet::new(n, perm)
}

/// Includes each element of `universe` independently with probability `prob`.
pub fn sample_bernoulli_subset(universe: &IndexSet, prob: f64, stream: &mut RandomStream) -> IndexSet {
    let members = universe
        .iter()
        .copied()
        .filter(|_| stream.bernoulli(prob))
        .collect();
    IndexSet::new(universe.universe(), members).expect("members come from the universe")
}

fn sample_structured(params: &Params, seed: Seed, prob: f64, kind: InstanceKind) -> Result<StructuredFn> {
    let m_set = sample_subset(params.n, params.t, &mut seed.stream("M"))?;
    let a_set = sample_bernoulli_subset(&m_set.complement(), prob, &mut seed.stream("A"));
    StructuredFn::new(params.clone(), m_set, a_set, seed, kind)
}

/// Draws `f ~ D_yes`: `A` includes each coordinate outside `M` with probability `p`.
pub fn sample_yes(params: &Params, seed: Seed) -> Result<StructuredFn> {
    sample_structured(params, seed, params.p, InstanceKind::YesStyle)
}

/// Draws `f ~ D_no`: as [`sample_yes`] with inclusion probability `q`.
pub fn sample_no(params: &Params, seed: Seed) -> Result<StructuredFn> {
    sample_structured(params, seed, params.q, InstanceKind::NoStyle)
}

/// Each table bit independently one with probability `3ε`.
pub fn sample_d1(n: usize, epsilon: f64, stream: &mut RandomStream) -> Result<TruthTable> {
    if n > MAX_TABLE_VARS {
        return Err(Error::TooLarge {
            what: "truth table dimension",
            limit: MAX_TABLE_VARS,
        });
    }
    if !(0.0..=0.2).contains(&epsilon) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let p = 3.0 * epsilon;
    TruthTable::from_fn(n, |_| stream.bernoulli(p))
}

/// Exactly `round(2^n ε)` ones at uniformly random positions.
pub fn sample_d2(n: usize, epsilon: f64, stream: &mut RandomStream) -> Result<TruthTable> {
    if n > MAX_TABLE_VARS {
        return Err(Error::TooLarge {
            what: "truth table dimension",
            limit: MAX_TABLE_VARS,
        });
    }
    let size = 1usize << n;
    let raw = size as f64 * epsilon;
    let w = raw.round();
    if !(w >= 1.0 && w <= size as f64) {
        return Err(Error::WeightOutOfRange(raw));
    }
    let mut t = TruthTable::zeros(n)?;
    for idx in rand::seq::index::sample(stream, size, w as usize).iter() {
        t.set(idx as u64, true);
    }
    Ok(t)
}
