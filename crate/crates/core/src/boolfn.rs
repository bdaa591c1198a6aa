//! Boolean-function representations.
//!
//! Coordinates are 1-based (`1..=n`). A string `x` encodes to the integer
//! `Σ x_i · 2^(n-i)`, so coordinate 1 is the most significant bit; the same
//! convention is used by [`gamma`] and by truth-table indexing.

use crate::error::{Error, Result};
use crate::hardgen::{derive_bit, Payload, Seed};
use crate::params::Params;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest dimension for which truth tables are materialized.
pub const MAX_TABLE_VARS: usize = 24;

pub(crate) const ROLE_S: &str = "S-membership";
pub(crate) const ROLE_H: &str = "h-value";

/// A fixed-length packed bit string.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut x = Self::zeros(len);
        for i in 1..=len {
            x.set_unchecked(i, true);
        }
        x
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut x = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            x.set_unchecked(i + 1, b);
        }
        x
    }

    /// Inverse of [`BitString::to_index`].
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "integer encoding needs len <= 64");
        let mut x = Self::zeros(len);
        for i in 1..=len {
            x.set_unchecked(i, (index >> (len - i)) & 1 == 1);
        }
        x
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Result<bool> {
        self.check(i)?;
        Ok(self.get_unchecked(i))
    }

    pub fn set(&mut self, i: usize, value: bool) -> Result<()> {
        self.check(i)?;
        self.set_unchecked(i, value);
        Ok(())
    }

    #[inline]
    pub(crate) fn get_unchecked(&self, i: usize) -> bool {
        let b = i - 1;
        (self.words[b / 64] >> (b % 64)) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_unchecked(&mut self, i: usize, value: bool) {
        let b = i - 1;
        let bit = 1u64 << (b % 64);
        if value {
            self.words[b / 64] |= bit;
        } else {
            self.words[b / 64] &= !bit;
        }
    }

    fn check(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.len {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.len,
            })
        } else {
            Ok(())
        }
    }

    /// Integer encoding with coordinate 1 as the most significant bit.
    pub fn to_index(&self) -> Result<u64> {
        if self.len > 64 {
            return Err(Error::TooLarge {
                what: "bit string for integer encoding",
                limit: 64,
            });
        }
        Ok((1..=self.len).fold(0u64, |acc, i| (acc << 1) | self.get_unchecked(i) as u64))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (1..=self.len).map(move |i| self.get_unchecked(i))
    }

    /// `x|_S` as a bit string of length `|S|`, in increasing index order.
    pub fn restrict(&self, set: &IndexSet) -> Result<BitString> {
        if set.universe() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                found: set.universe(),
            });
        }
        let mut out = BitString::zeros(set.len());
        for (pos, &i) in set.iter().enumerate() {
            out.set_unchecked(pos + 1, self.get_unchecked(i));
        }
        Ok(out)
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("bad bit `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(Error::Parse("empty bit string".into()));
        }
        Ok(BitString::from_bits(&bits))
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Returns `x` with coordinate `i` flipped.
pub fn flip(x: &BitString, i: usize) -> Result<BitString> {
    let mut y = x.clone();
    let b = x.get(i)?;
    y.set_unchecked(i, !b);
    Ok(y)
}

pub fn hamming(x: &BitString, y: &BitString) -> Result<usize> {
    if x.len != y.len {
        return Err(Error::DimensionMismatch {
            expected: x.len,
            found: y.len,
        });
    }
    Ok(x.words
        .iter()
        .zip(&y.words)
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum())
}

/// A sorted, duplicate-free subset of `[universe]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexSet {
    universe: usize,
    members: Vec<usize>,
}

impl IndexSet {
    /// Sorts and deduplicates `members`; every member must lie in `1..=universe`.
    pub fn new(universe: usize, mut members: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = members.iter().find(|&&i| i == 0 || i > universe) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: universe,
            });
        }
        members.sort_unstable();
        members.dedup();
        Ok(IndexSet { universe, members })
    }

    pub fn empty(universe: usize) -> Self {
        IndexSet {
            universe,
            members: Vec::new(),
        }
    }

    pub fn full(universe: usize) -> Self {
        IndexSet {
            universe,
            members: (1..=universe).collect(),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.members.iter()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> IndexSet {
        IndexSet {
            universe: self.universe,
            members: (1..=self.universe).filter(|&i| !self.contains(i)).collect(),
        }
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut members: Vec<usize> = self.members.iter().chain(&other.members).copied().collect();
        members.sort_unstable();
        members.dedup();
        IndexSet {
            universe: self.universe.max(other.universe),
            members,
        }
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet {
            universe: self.universe,
            members: self
                .members
                .iter()
                .copied()
                .filter(|&i| other.contains(i))
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.members.iter().all(|&i| !other.contains(i))
    }
}

/// Anything that can be queried on a point of the cube.
pub trait BoolFunction {
    fn n(&self) -> usize;
    fn eval(&self, x: &BitString) -> Result<bool>;
}

/// Explicit truth table of a function on at most [`MAX_TABLE_VARS`] variables.
#[derive(Clone, PartialEq, Eq)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable(n={}, ones={})", self.n, self.count_ones())
    }
}

impl TruthTable {
    pub fn zeros(n: usize) -> Result<Self> {
        if n > MAX_TABLE_VARS {
            return Err(Error::TooLarge {
                what: "truth table dimension",
                limit: MAX_TABLE_VARS,
            });
        }
        Ok(TruthTable {
            n,
            words: vec![0; (1usize << n).div_ceil(64)],
        })
    }

    /// Table with `table[index] = f(index)` over the integer encoding.
    pub fn from_fn(n: usize, mut f: impl FnMut(u64) -> bool) -> Result<Self> {
        let mut t = Self::zeros(n)?;
        for idx in 0..t.size() as u64 {
            if f(idx) {
                t.set(idx, true);
            }
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of entries, `2^n`.
    pub fn size(&self) -> usize {
        1usize << self.n
    }

    #[inline]
    pub fn get(&self, index: u64) -> bool {
        let i = index as usize;
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: u64, value: bool) {
        let i = index as usize;
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Serializes as `n=<n>` followed by the `2^n` table bits in encoding order.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.size() + 16);
        s.push_str(&format!("n={}\n", self.n));
        for idx in 0..self.size() as u64 {
            s.push(if self.get(idx) { '1' } else { '0' });
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let body = lines.next().unwrap_or("").trim_end_matches('\r');
        let mut t = Self::zeros(n)?;
        if body.len() != t.size() {
            return Err(Error::Parse(format!(
                "expected {} table bits, found {}",
                t.size(),
                body.len()
            )));
        }
        for (idx, c) in body.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => t.set(idx as u64, true),
                other => return Err(Error::Parse(format!("bad table character `{}`", other as char))),
            }
        }
        Ok(t)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl BoolFunction for TruthTable {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &BitString) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self.get(x.to_index()?))
    }
}

/// Which hidden-set distribution produced a structured instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    YesStyle,
    NoStyle,
}

/// A lazily evaluated `f_{M,A,H}`.
///
/// `S_i` membership and the values of `h_i` are never stored: they are derived
/// from `(seed, i, ...)` on every evaluation, so the instance is immutable and
/// evaluation is reentrant.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredFn {
    params: Params,
    m_set: IndexSet,
    a_set: IndexSet,
    seed: Seed,
    kind: InstanceKind,
}

impl StructuredFn {
    pub fn new(
        params: Params,
        m_set: IndexSet,
        a_set: IndexSet,
        seed: Seed,
        kind: InstanceKind,
    ) -> Result<Self> {
        let n = params.n;
        for set in [&m_set, &a_set] {
            if set.universe() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: set.universe(),
                });
            }
        }
        if m_set.len() != params.t {
            return Err(Error::InvalidInput(format!(
                "|M| = {} but t = {}",
                m_set.len(),
                params.t
            )));
        }
        if !m_set.is_disjoint(&a_set) {
            return Err(Error::InvalidInput("M and A intersect".into()));
        }
        Ok(StructuredFn {
            params,
            m_set,
            a_set,
            seed,
            kind,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn m_set(&self) -> &IndexSet {
        &self.m_set
    }

    pub fn a_set(&self) -> &IndexSet {
        &self.a_set
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    /// `M ∪ A`, the only coordinates the function can depend on.
    pub fn support(&self) -> IndexSet {
        self.m_set.union(&self.a_set)
    }

    /// `S_i` for the block selected by the projection `x|_M`.
    pub fn block_set(&self, block: &BitString) -> IndexSet {
        let coin = self.params.coin();
        let members = self
            .a_set
            .iter()
            .copied()
            .filter(|&a| {
                let payload = Payload::new().bits(block).word(a as u64);
                derive_bit(self.seed, ROLE_S, payload.as_bytes(), coin)
            })
            .collect();
        IndexSet {
            universe: self.params.n,
            members,
        }
    }

    /// `h_i(x|_{S_i})` for the block `i` selected by `x`.
    pub fn block_value(&self, block: &BitString, s_set: &IndexSet, x: &BitString) -> Result<bool> {
        let restricted = x.restrict(s_set)?;
        let payload = Payload::new()
            .bits(block)
            .indices(s_set.members())
            .bits(&restricted);
        Ok(derive_bit(self.seed, ROLE_H, payload.as_bytes(), 0.5))
    }
}

impl BoolFunction for StructuredFn {
    fn n(&self) -> usize {
        self.params.n
    }

    fn eval(&self, x: &BitString) -> Result<bool> {
        let block = x.restrict(&self.m_set)?;
        let s_set = self.block_set(&block);
        self.block_value(&block, &s_set, x)
    }
}

/// Either representation, for callers that accept both.
#[derive(Debug, Clone)]
pub enum BoolFn {
    Table(TruthTable),
    Structured(StructuredFn),
}

impl BoolFunction for BoolFn {
    fn n(&self) -> usize {
        match self {
            BoolFn::Table(t) => t.n(),
            BoolFn::Structured(s) => s.n(),
        }
    }

    fn eval(&self, x: &BitString) -> Result<bool> {
        match self {
            BoolFn::Table(t) => t.eval(x),
            BoolFn::Structured(s) => s.eval(x),
        }
    }
}

/// `Γ_M(x)`: the integer encoded by `x|_M` (smallest index most significant) plus one.
pub fn gamma(m_set: &IndexSet, x: &BitString) -> Result<u64> {
    if m_set.universe() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: m_set.universe(),
        });
    }
    if m_set.is_empty() {
        return Err(Error::InvalidInput("gamma over an empty set".into()));
    }
    if m_set.len() > 63 {
        return Err(Error::TooLarge {
            what: "|M| for an integer-valued gamma",
            limit: 63,
        });
    }
    Ok(x.restrict(m_set)?.to_index()? + 1)
}

// Bits at positions whose index has bit `b` clear, for b < 6.
const LOW_HALF: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

/// True iff flipping coordinate `i` changes `f` somewhere.
pub(crate) fn depends_on(f: &TruthTable, i: usize) -> bool {
    let b = f.n() - i;
    let words = f.words();
    if b < 6 {
        let s = 1u32 << b;
        words
            .iter()
            .any(|&w| (w ^ (w >> s)) & LOW_HALF[b] != 0)
    } else {
        let stride = 1usize << (b - 6);
        (0..words.len())
            .filter(|w| w & stride == 0)
            .any(|w| words[w] != words[w | stride])
    }
}

/// `{ i : ∃x, f(x) ≠ f(x^(i)) }`.
pub fn relevant_variables(f: &TruthTable) -> IndexSet {
    IndexSet {
        universe: f.n(),
        members: (1..=f.n()).filter(|&i| depends_on(f, i)).collect(),
    }
}

/// Materializes a structured instance.
pub fn to_table(f: &StructuredFn) -> Result<TruthTable> {
    let n = f.n();
    if n > MAX_TABLE_VARS {
        return Err(Error::TooLarge {
            what: "truth table dimension",
            limit: MAX_TABLE_VARS,
        });
    }
    let mut t = TruthTable::zeros(n)?;
    for idx in 0..t.size() as u64 {
        let x = BitString::from_index(n, idx);
        if f.eval(&x)? {
            t.set(idx, true);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardgen::sample_yes;
    use crate::params::{derive_params, Mode};
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn flip_examples() {
        assert_eq!(flip(&bs("0000"), 1).unwrap(), bs("1000"));
        assert_eq!(flip(&bs("1111"), 4).unwrap(), bs("1110"));
        assert!(matches!(
            flip(&bs("0000"), 5),
            Err(Error::IndexOutOfRange { index: 5, len: 4 })
        ));
        assert!(flip(&bs("0000"), 0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let m = IndexSet::new(4, vec![1, 2]).unwrap();
        assert_eq!(gamma(&m, &bs("0010")).unwrap(), 1);
        assert_eq!(gamma(&m, &bs("0001")).unwrap(), 1);
        assert_eq!(gamma(&m, &bs("1100")).unwrap(), 4);
        assert_eq!(gamma(&m, &bs("1011")).unwrap(), 3);
        assert_eq!(gamma(&m, &bs("0111")).unwrap(), 2);
        assert!(gamma(&IndexSet::empty(4), &bs("0000")).is_err());
        assert!(matches!(
            gamma(&m, &bs("000")),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gamma_is_balanced() {
        let n = 6;
        let m = IndexSet::new(n, vec![2, 3, 5]).unwrap();
        let mut hits = [0usize; 8];
        for idx in 0..(1u64 << n) {
            let g = gamma(&m, &BitString::from_index(n, idx)).unwrap();
            hits[(g - 1) as usize] += 1;
        }
        assert!(hits.iter().all(|&h| h == 1 << (n - 3)));
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&bs("0110"), &bs("0110")).unwrap(), 0);
        assert_eq!(hamming(&bs("0000"), &bs("1111")).unwrap(), 4);
        assert!(hamming(&bs("00"), &bs("000")).is_err());
    }

    #[test]
    fn relevant_variable_examples() {
        assert!(relevant_variables(&TruthTable::zeros(5).unwrap()).is_empty());
        // XOR(x1, x2) on n = 3: bits of the index are (x1 x2 x3).
        let xor = TruthTable::from_fn(3, |i| ((i >> 2) ^ (i >> 1)) & 1 == 1).unwrap();
        assert_eq!(relevant_variables(&xor).members(), &[1, 2]);
        let dict = TruthTable::from_fn(4, |i| (i >> 1) & 1 == 1).unwrap();
        assert_eq!(relevant_variables(&dict).members(), &[3]);
    }

    #[test]
    fn relevant_variables_matches_naive() {
        // Covers both the in-word and cross-word paths.
        for n in [3usize, 7, 9] {
            let t = TruthTable::from_fn(n, |i| (i.wrapping_mul(0x9E37_79B9) >> 7) & 1 == 1).unwrap();
            let naive: Vec<usize> = (1..=n)
                .filter(|&i| {
                    (0..1u64 << n).any(|x| t.get(x) != t.get(x ^ (1 << (n - i))))
                })
                .collect();
            assert_eq!(relevant_variables(&t).members(), naive.as_slice());
        }
        // A function that only depends on coordinate 1 at n = 8 (stride 2 words).
        let hi = TruthTable::from_fn(8, |i| i >= 128).unwrap();
        assert_eq!(relevant_variables(&hi).members(), &[1]);
    }

    #[test]
    fn table_text_round_trip() {
        let t = TruthTable::from_fn(3, |i| i == 5).unwrap();
        let text = t.to_text();
        assert_eq!(text, "n=3\n00000100\n");
        assert_eq!(TruthTable::from_text(&text).unwrap(), t);
        assert!(TruthTable::from_text("n=3\n0101\n").is_err());
        assert!(TruthTable::zeros(25).is_err());
    }

    #[test]
    fn structured_is_deterministic_and_materializes() {
        let params = derive_params(8, 0.75, 1.0, Mode::DeskScale).unwrap();
        let f = sample_yes(&params, Seed(11)).unwrap();
        let t = to_table(&f).unwrap();
        let x = BitString::from_index(8, 77);
        assert_eq!(f.eval(&x).unwrap(), f.eval(&x).unwrap());
        for idx in (0..256).step_by(7) {
            let x = BitString::from_index(8, idx);
            assert_eq!(t.eval(&x).unwrap(), f.eval(&x).unwrap());
        }
    }

    #[test]
    fn empty_hidden_set_depends_only_on_m() {
        let params = derive_params(10, 0.75, 1.0, Mode::DeskScale).unwrap();
        let m = IndexSet::new(10, vec![3, 7]).unwrap();
        let f = StructuredFn::new(params, m.clone(), IndexSet::empty(10), Seed(5), InstanceKind::YesStyle)
            .unwrap();
        let t = to_table(&f).unwrap();
        for i in m.complement().iter() {
            assert!(!depends_on(&t, *i));
        }
        assert!(relevant_variables(&t).is_subset(&m));
    }

    #[test]
    fn to_table_cap() {
        let params = derive_params(25, 0.75, 1.0, Mode::DeskScale).unwrap();
        let f = sample_yes(&params, Seed(0)).unwrap();
        assert!(matches!(to_table(&f), Err(Error::TooLarge { .. })));
    }

    proptest! {
        #[test]
        fn flip_is_involution(bits in proptest::collection::vec(any::<bool>(), 1..100), i in 0usize..100) {
            let x = BitString::from_bits(&bits);
            let i = i % bits.len() + 1;
            prop_assert_eq!(flip(&flip(&x, i).unwrap(), i).unwrap(), x.clone());
            prop_assert_eq!(hamming(&x, &flip(&x, i).unwrap()).unwrap(), 1);
        }

        #[test]
        fn hamming_symmetric(a in proptest::collection::vec(any::<bool>(), 70), b in proptest::collection::vec(any::<bool>(), 70)) {
            let x = BitString::from_bits(&a);
            let y = BitString::from_bits(&b);
            prop_assert_eq!(hamming(&x, &y).unwrap(), hamming(&y, &x).unwrap());
        }

        #[test]
        fn index_encoding_round_trip(n in 1usize..=64, raw in any::<u64>()) {
            let idx = if n == 64 { raw } else { raw & ((1u64 << n) - 1) };
            prop_assert_eq!(BitString::from_index(n, idx).to_index().unwrap(), idx);
        }
    }
}
