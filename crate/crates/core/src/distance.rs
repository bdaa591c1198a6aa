//! Exact distance to juntas and bichromatic-edge matching certificates.

use crate::boolfn::{IndexSet, TruthTable};
use crate::error::{Error, Result};
use crate::matching::{hopcroft_karp, Bipartite};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

/// Exact distance: disagreements over `2^n`.
pub type Distance = Ratio<u64>;

/// Largest dimension accepted by the matching oracle.
pub const MAX_MATCHING_VARS: usize = 20;

/// `count ≥ ε·2^n`, decided exactly (scaling by `2^n` is exact in binary floating point).
pub fn meets_threshold(count: u64, epsilon: f64, n: usize) -> bool {
    count as f64 >= epsilon * (n as f64).exp2()
}

/// Result of [`dist_to_k_junta`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub n: usize,
    pub k: usize,
    /// Disagreements with the best junta on `witness_j`.
    pub disagreements: u64,
    pub witness_j: IndexSet,
    pub far: Option<bool>,
}

impl DistanceReport {
    pub fn distance(&self) -> Distance {
        Ratio::new(self.disagreements, 1u64 << self.n)
    }

    pub fn distance_f64(&self) -> f64 {
        self.disagreements as f64 / (self.n as f64).exp2()
    }

    pub fn is_far(&self, epsilon: f64) -> bool {
        meets_threshold(self.disagreements, epsilon, self.n)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.far = Some(self.is_far(epsilon));
        self
    }
}

/// Disagreement count of the best junta on `j`: `Σ_b min(zeros_b, ones_b)` over fibers `x|_J = b`.
pub fn disagreements_on(f: &TruthTable, j: &IndexSet) -> Result<u64> {
    let n = f.n();
    if j.universe() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: j.universe(),
        });
    }
    let shifts: Vec<usize> = j.iter().map(|&i| n - i).collect();
    let mut ones = vec![0u32; 1 << j.len()];
    let mut sizes = vec![0u32; 1 << j.len()];
    for idx in 0..f.size() as u64 {
        let fiber = shifts
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | ((idx >> s) & 1) as usize);
        sizes[fiber] += 1;
        ones[fiber] += f.get(idx) as u32;
    }
    Ok(ones
        .iter()
        .zip(&sizes)
        .map(|(&o, &s)| o.min(s - o) as u64)
        .sum())
}

/// Distance from `f` to the nearest junta on the coordinates `j`.
pub fn dist_to_junta_on(f: &TruthTable, j: &IndexSet) -> Result<Distance> {
    Ok(Ratio::new(disagreements_on(f, j)?, 1u64 << f.n()))
}

/// The best junta on `j` itself, ties resolved to 0.
pub fn best_junta_on(f: &TruthTable, j: &IndexSet) -> Result<TruthTable> {
    let n = f.n();
    let shifts: Vec<usize> = j.iter().map(|&i| n - i).collect();
    let fiber = |idx: u64| {
        shifts
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | ((idx >> s) & 1) as usize)
    };
    let mut ones = vec![0u32; 1 << j.len()];
    let mut sizes = vec![0u32; 1 << j.len()];
    for idx in 0..f.size() as u64 {
        sizes[fiber(idx)] += 1;
        ones[fiber(idx)] += f.get(idx) as u32;
    }
    TruthTable::from_fn(n, |idx| {
        let b = fiber(idx);
        2 * ones[b] > sizes[b]
    })
}

/// All `k`-subsets of `[n]` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (1..=k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i + 1) else {
            break;
        };
        c[i] += 1;
        for l in i + 1..k {
            c[l] = c[l - 1] + 1;
        }
    }
    out
}

/// Exact distance to the nearest `k`-junta by exhaustive search over `J`.
///
/// Ties between subsets go to the lexicographically smallest witness.
pub fn dist_to_k_junta(f: &TruthTable, k: usize) -> Result<DistanceReport> {
    let n = f.n();
    if k > n {
        return Err(Error::InvalidInput(format!("k = {k} exceeds n = {n}")));
    }
    let subsets = combinations(n, k);
    let (disagreements, best) = subsets
        .par_iter()
        .enumerate()
        .map(|(pos, c)| {
            let j = IndexSet::new(n, c.clone()).expect("combination within [n]");
            (disagreements_on(f, &j).expect("universe matches"), pos)
        })
        .min()
        .expect("at least one subset");
    Ok(DistanceReport {
        n,
        k,
        disagreements,
        witness_j: IndexSet::new(n, subsets[best].clone())?,
        far: None,
    })
}

/// A set of vertex-disjoint `f`-bichromatic edges along directions in `V`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingCertificate {
    pub v: IndexSet,
    pub size: u64,
    /// `(x, i)` is the edge `{x, x^(i)}`, with `x` the endpoint whose `i`-th bit is 0.
    pub edges: Vec<(u64, usize)>,
}

impl MatchingCertificate {
    /// Checks every certificate invariant against `f`.
    pub fn validate(&self, f: &TruthTable) -> Result<()> {
        let n = f.n();
        if self.size as usize != self.edges.len() {
            return Err(Error::InconsistentInput("size differs from edge count".into()));
        }
        let mut used = vec![false; f.size()];
        for &(x, i) in &self.edges {
            if !self.v.contains(i) {
                return Err(Error::InconsistentInput(format!("direction {i} not in V")));
            }
            let y = x ^ (1u64 << (n - i));
            if f.get(x) == f.get(y) {
                return Err(Error::InconsistentInput(format!("edge ({x}, {i}) is monochromatic")));
            }
            for end in [x, y] {
                if std::mem::replace(&mut used[end as usize], true) {
                    return Err(Error::InconsistentInput(format!("vertex {end} reused")));
                }
            }
        }
        Ok(())
    }
}

/// Maximum matching of `f`-bichromatic hypercube edges with direction in `V`.
///
/// The cube is bipartite by parity, so Hopcroft–Karp between even and odd
/// vertices gives the exact optimum.
pub fn max_disjoint_bichromatic_matching(f: &TruthTable, v: &IndexSet) -> Result<MatchingCertificate> {
    let n = f.n();
    if n > MAX_MATCHING_VARS {
        return Err(Error::TooLarge {
            what: "matching dimension",
            limit: MAX_MATCHING_VARS,
        });
    }
    if v.universe() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.universe(),
        });
    }
    if v.is_empty() {
        return Err(Error::InvalidInput("V must be nonempty".into()));
    }
    let masks: Vec<u64> = v.iter().map(|&i| 1u64 << (n - i)).collect();
    let even: Vec<u64> = (0..f.size() as u64)
        .filter(|x| x.count_ones() % 2 == 0)
        .collect();
    let g = Bipartite::from_fn(even.len(), f.size(), |u, out| {
        let x = even[u];
        let fx = f.get(x);
        for &mask in &masks {
            let y = x ^ mask;
            if f.get(y) != fx {
                out.push(y as u32);
            }
        }
    });
    let mate = hopcroft_karp(&g);
    let edges: Vec<(u64, usize)> = mate
        .iter()
        .enumerate()
        .filter_map(|(u, m)| {
            m.map(|y| {
                let x = even[u];
                let diff = x ^ y as u64;
                let i = n - diff.trailing_zeros() as usize;
                (x.min(y as u64), i)
            })
        })
        .collect();
    Ok(MatchingCertificate {
        v: v.clone(),
        size: edges.len() as u64,
        edges,
    })
}

/// `cert.size ≥ ε·2^n`.
///
/// When true, every `g` depending on no coordinate of `cert.v` disagrees with
/// `f` on at least one endpoint of each certified edge, so `dist(f, g) ≥ ε`.
pub fn farness_from_matching(cert: &MatchingCertificate, epsilon: f64, n: usize) -> bool {
    meets_threshold(cert.size, epsilon, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::relevant_variables;

    fn set(n: usize, m: &[usize]) -> IndexSet {
        IndexSet::new(n, m.to_vec()).unwrap()
    }

    #[test]
    fn junta_on_examples() {
        let zero = TruthTable::zeros(4).unwrap();
        assert_eq!(dist_to_junta_on(&zero, &set(4, &[2])).unwrap(), Ratio::from_integer(0));
        let xor = TruthTable::from_fn(2, |i| (i ^ (i >> 1)) & 1 == 1).unwrap();
        assert_eq!(dist_to_junta_on(&xor, &set(2, &[1])).unwrap(), Ratio::new(1, 2));
        let x3 = TruthTable::from_fn(3, |i| i & 1 == 1).unwrap();
        assert_eq!(dist_to_junta_on(&x3, &set(3, &[3])).unwrap(), Ratio::from_integer(0));
    }

    #[test]
    fn k_junta_examples() {
        let parity = TruthTable::from_fn(4, |i| i.count_ones() % 2 == 1).unwrap();
        assert_eq!(dist_to_k_junta(&parity, 4).unwrap().disagreements, 0);
        assert_eq!(dist_to_k_junta(&parity, 3).unwrap().distance(), Ratio::new(1, 2));

        // Majority of x1, x2, x3 on n = 5 (x1 is the top bit).
        let maj = TruthTable::from_fn(5, |i| (i >> 2).count_ones() >= 2).unwrap();
        let r = dist_to_k_junta(&maj, 3).unwrap();
        assert_eq!(r.disagreements, 0);
        assert_eq!(r.witness_j.members(), &[1, 2, 3]);
        assert!(!r.is_far(0.01));
        assert!(dist_to_k_junta(&maj, 6).is_err());
    }

    #[test]
    fn best_junta_achieves_distance() {
        let f = TruthTable::from_fn(6, |i| (i * 37 + 11) % 7 < 3).unwrap();
        let j = set(6, &[2, 5]);
        let g = best_junta_on(&f, &j).unwrap();
        assert!(relevant_variables(&g).is_subset(&j));
        let dis = (0..64u64).filter(|&x| f.get(x) != g.get(x)).count() as u64;
        assert_eq!(dis, disagreements_on(&f, &j).unwrap());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 3).len(), 10);
        assert_eq!(combinations(5, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(4, 2)[0], vec![1, 2]);
        assert_eq!(combinations(4, 2)[5], vec![3, 4]);
    }

    #[test]
    fn matching_examples() {
        let zero = TruthTable::zeros(3).unwrap();
        assert_eq!(max_disjoint_bichromatic_matching(&zero, &set(3, &[1, 2])).unwrap().size, 0);
        let xor = TruthTable::from_fn(2, |i| (i ^ (i >> 1)) & 1 == 1).unwrap();
        let cert = max_disjoint_bichromatic_matching(&xor, &set(2, &[1])).unwrap();
        assert_eq!(cert.size, 2);
        cert.validate(&xor).unwrap();
        let x1 = TruthTable::from_fn(3, |i| i >> 2 == 1).unwrap();
        let cert = max_disjoint_bichromatic_matching(&x1, &set(3, &[1])).unwrap();
        assert_eq!(cert.size, 4);
        cert.validate(&x1).unwrap();
        assert!(max_disjoint_bichromatic_matching(&x1, &IndexSet::empty(3)).is_err());
    }

    #[test]
    fn farness_examples() {
        let xor = TruthTable::from_fn(2, |i| (i ^ (i >> 1)) & 1 == 1).unwrap();
        let cert = max_disjoint_bichromatic_matching(&xor, &set(2, &[1])).unwrap();
        assert!(farness_from_matching(&cert, 0.25, 2));
        assert!(dist_to_junta_on(&xor, &set(2, &[2])).unwrap() >= Ratio::new(1, 4));

        let empty = MatchingCertificate {
            v: set(4, &[1]),
            size: 0,
            edges: vec![],
        };
        assert!(!farness_from_matching(&empty, 1e-9, 4));

        // size = ⌈ε 2^n⌉ − 1 is below threshold.
        let eps = 0.3;
        let n = 4;
        let thr = (eps * 16.0f64).ceil() as u64;
        let below = MatchingCertificate {
            v: set(n, &[1]),
            size: thr - 1,
            edges: vec![],
        };
        assert!(!farness_from_matching(&below, eps, n));
        let at = MatchingCertificate { size: thr, ..below };
        assert!(farness_from_matching(&at, eps, n));
    }

    #[test]
    fn validate_rejects_bad_certificates() {
        let x1 = TruthTable::from_fn(3, |i| i >> 2 == 1).unwrap();
        let bad = MatchingCertificate {
            v: set(3, &[1]),
            size: 2,
            edges: vec![(0, 1), (0, 1)],
        };
        assert!(bad.validate(&x1).is_err());
        let mono = MatchingCertificate {
            v: set(3, &[2]),
            size: 1,
            edges: vec![(0, 2)],
        };
        assert!(mono.validate(&x1).is_err());
    }
}
