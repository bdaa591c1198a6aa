//! Hidden-set oracle games and the reductions between them.
//!
//! Two games hide `A ⊆ [m]`, drawn by including each element independently
//! with probability `p` (yes) or `q` (no):
//!
//! * **set queries**: the algorithm submits sets `T_1..T_d`; each `j ∈ T_i`
//!   answers an independent `Bernoulli(ε/√n)` bit when `j ∈ A` and 0 otherwise.
//!   Cost `Σ|T_i|`.
//! * **element queries**: the algorithm submits counts `ℓ_1..ℓ_m`; element
//!   `j ∈ A` answers 1 with probability `λ(ℓ_j) = 1 - (1 - ε/√n)^ℓ_j`. Cost `‖ℓ‖₁`.
//!
//! [`reduction`] turns a string-query distinguisher into a set-query one,
//! [`lift`] turns set-query responses back out of element-query responses,
//! and [`exact`] computes response laws and optimal advantages exactly.

pub mod exact;
pub mod lift;
pub mod reduction;

use crate::binom::at_least_one;
use crate::boolfn::{BitString, IndexSet};
use crate::error::{Error, Result};
use crate::hardgen::{sample_bernoulli_subset, RandomStream};
use crate::params::coin_probability;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub use exact::{
    claim53_equivalence_check, exact_optimal_advantage, exact_optimal_advantage_with,
    exact_response_distribution, exact_sseq_distribution, exact_sssq_distribution, GameRates,
    OutcomeLaw, PlanRef,
};
pub use lift::{canonicalize_plan, element_bins, lift_response, summarize, truncated_count_weights, Summary};
pub use reduction::{
    build_set_queries, direct_string_answers, is_good_m, simulate_distinguisher, SetQueryBuild,
};

/// Advantage an ideal string-query distinguisher is assumed to have.
pub const STRING_GAME_ADVANTAGE: f64 = 3.0 / 4.0;
/// Advantage carried over to the set-query game by the reduction.
pub const REDUCED_ADVANTAGE: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
        })
    }
}

/// Inclusion law of a hidden set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Yes(f64),
    No(f64),
}

impl Origin {
    pub fn probability(&self) -> f64 {
        match *self {
            Origin::Yes(p) | Origin::No(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenSet {
    pub m: usize,
    pub a: IndexSet,
    pub origin: Origin,
}

impl HiddenSet {
    pub fn new(a: IndexSet, origin: Origin) -> Self {
        HiddenSet {
            m: a.universe(),
            a,
            origin,
        }
    }
}

/// Draws `A ⊆ [m]` with iid inclusion `prob`; recorded as a yes-origin set.
pub fn sample_hidden(m: usize, prob: f64, stream: &mut RandomStream) -> HiddenSet {
    HiddenSet::new(
        sample_bernoulli_subset(&IndexSet::full(m), prob, stream),
        Origin::Yes(prob),
    )
}

/// Like [`sample_hidden`] with an explicit origin tag.
pub fn sample_hidden_as(m: usize, origin: Origin, stream: &mut RandomStream) -> HiddenSet {
    HiddenSet::new(
        sample_bernoulli_subset(&IndexSet::full(m), origin.probability(), stream),
        origin,
    )
}

/// Set queries `T_1..T_d` over `[m]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetQueryPlan {
    m: usize,
    sets: Vec<IndexSet>,
}

impl SetQueryPlan {
    pub fn new(m: usize, sets: Vec<IndexSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidInput("a set-query plan needs d >= 1".into()));
        }
        if let Some(bad) = sets.iter().find(|s| s.universe() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.universe(),
            });
        }
        Ok(SetQueryPlan { m, sets })
    }

    /// Builds from raw 1-based index lists.
    pub fn from_lists(m: usize, lists: &[Vec<usize>]) -> Result<Self> {
        let sets = lists
            .iter()
            .map(|l| IndexSet::new(m, l.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, sets)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[IndexSet] {
        &self.sets
    }

    pub fn cost(&self) -> usize {
        self.sets.iter().map(IndexSet::len).sum()
    }
}

/// Per-element query counts `ℓ_1..ℓ_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementQueryPlan {
    pub ell: Vec<u64>,
}

impl ElementQueryPlan {
    pub fn new(ell: Vec<u64>) -> Self {
        ElementQueryPlan { ell }
    }

    pub fn m(&self) -> usize {
        self.ell.len()
    }

    pub fn cost(&self) -> u64 {
        self.ell.iter().sum()
    }

    /// `ℓ ≡ budget/m`, with the remainder spread over the first entries.
    pub fn uniform(m: usize, budget: u64) -> Self {
        let base = budget / m as u64;
        let extra = (budget % m as u64) as usize;
        ElementQueryPlan {
            ell: (0..m).map(|i| base + (i < extra) as u64).collect(),
        }
    }
}

/// Deterministic map from the answer bits (in query order) to a verdict.
pub type Decider = Arc<dyn Fn(&[bool]) -> Verdict + Send + Sync>;

/// Non-adaptive string queries with their decision rule.
#[derive(Clone)]
pub struct StringQueryPlan {
    queries: Vec<BitString>,
    decider: Decider,
}

impl fmt::Debug for StringQueryPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StringQueryPlan")
            .field("queries", &self.queries)
            .finish_non_exhaustive()
    }
}

impl StringQueryPlan {
    pub fn new(queries: Vec<BitString>, decider: Decider) -> Result<Self> {
        let Some(first) = queries.first() else {
            return Err(Error::InvalidInput("a string-query plan needs q >= 1".into()));
        };
        let n = first.len();
        if let Some(bad) = queries.iter().find(|x| x.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(StringQueryPlan { queries, decider })
    }

    pub fn queries(&self) -> &[BitString] {
        &self.queries
    }

    pub fn n(&self) -> usize {
        self.queries[0].len()
    }

    pub fn q(&self) -> usize {
        self.queries.len()
    }

    pub fn decide(&self, answers: &[bool]) -> Verdict {
        (self.decider)(answers)
    }

    /// Number of queries above which the reduction's union bound no longer applies.
    pub fn exceeds_reduction_budget(&self, epsilon: f64) -> bool {
        let n = self.n() as f64;
        self.q() as f64 > (n / epsilon).powi(2)
    }
}

/// Common deciders.
pub mod deciders {
    use super::{Decider, Verdict};
    use std::sync::Arc;

    pub fn always(v: Verdict) -> Decider {
        Arc::new(move |_| v)
    }

    /// Yes iff every answer is 0.
    pub fn all_zero() -> Decider {
        Arc::new(|b| if b.iter().all(|&x| !x) { Verdict::Yes } else { Verdict::No })
    }

    /// Yes iff all answers agree.
    pub fn all_equal() -> Decider {
        Arc::new(|b| {
            if b.windows(2).all(|w| w[0] == w[1]) {
                Verdict::Yes
            } else {
                Verdict::No
            }
        })
    }

    /// Yes iff an even number of answers is 1.
    pub fn parity_even() -> Decider {
        Arc::new(|b| {
            if b.iter().filter(|&&x| x).count() % 2 == 0 {
                Verdict::Yes
            } else {
                Verdict::No
            }
        })
    }

    /// Yes iff the first answer is 1.
    pub fn first_bit() -> Decider {
        Arc::new(|b| if b.first().copied().unwrap_or(false) { Verdict::Yes } else { Verdict::No })
    }

    pub fn by_name(name: &str) -> Option<Decider> {
        Some(match name {
            "all_zero" => all_zero(),
            "all_equal" => all_equal(),
            "parity_even" => parity_even(),
            "first_bit" => first_bit(),
            "always_yes" => always(Verdict::Yes),
            "always_no" => always(Verdict::No),
            _ => return None,
        })
    }
}

/// Set-query responses: `v[i][pos]` answers the `pos`-th smallest member of `T_i`.
pub type SetResponse = Vec<Vec<bool>>;

/// One draw of the set-query oracle.
pub fn sssq_respond(
    hidden: &HiddenSet,
    plan: &SetQueryPlan,
    epsilon: f64,
    n: usize,
    stream: &mut RandomStream,
) -> Result<SetResponse> {
    if plan.m() != hidden.m {
        return Err(Error::DimensionMismatch {
            expected: hidden.m,
            found: plan.m(),
        });
    }
    let coin = coin_probability(epsilon, n);
    Ok(plan
        .sets()
        .iter()
        .map(|t| {
            t.iter()
                .map(|&j| hidden.a.contains(j) && stream.bernoulli(coin))
                .collect()
        })
        .collect())
}

/// `λ(count) = 1 - (1 - ε/√n)^count`.
pub fn lambda(count: u64, epsilon: f64, n: usize) -> f64 {
    at_least_one(count, coin_probability(epsilon, n))
}

/// One draw of the element-query oracle.
pub fn sseq_respond(
    hidden: &HiddenSet,
    plan: &ElementQueryPlan,
    epsilon: f64,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Vec<bool>> {
    if plan.m() != hidden.m {
        return Err(Error::DimensionMismatch {
            expected: hidden.m,
            found: plan.m(),
        });
    }
    Ok(plan
        .ell
        .iter()
        .enumerate()
        .map(|(i, &l)| hidden.a.contains(i + 1) && stream.bernoulli(lambda(l, epsilon, n)))
        .collect())
}

/// `ℓ_j = |{ i : j ∈ T_i }|`.
pub fn sssq_to_element_counts(plan: &SetQueryPlan) -> ElementQueryPlan {
    let mut ell = vec![0u64; plan.m()];
    for t in plan.sets() {
        for &j in t.iter() {
            ell[j - 1] += 1;
        }
    }
    ElementQueryPlan { ell }
}

/// A set-query oracle as seen by a distinguisher.
pub trait SssqOracle {
    fn query(&mut self, plan: &SetQueryPlan) -> Result<SetResponse>;
}

/// Single-use oracle session over a fixed hidden set.
#[derive(Debug)]
pub struct SssqSession {
    hidden: HiddenSet,
    epsilon: f64,
    n: usize,
    stream: RandomStream,
    spent: Option<usize>,
}

impl SssqSession {
    pub fn new(hidden: HiddenSet, epsilon: f64, n: usize, stream: RandomStream) -> Self {
        SssqSession {
            hidden,
            epsilon,
            n,
            stream,
            spent: None,
        }
    }

    /// Cost of the submitted plan, once one has been submitted.
    pub fn cost(&self) -> Option<usize> {
        self.spent
    }

    pub fn hidden(&self) -> &HiddenSet {
        &self.hidden
    }
}

impl SssqOracle for SssqSession {
    fn query(&mut self, plan: &SetQueryPlan) -> Result<SetResponse> {
        if self.spent.is_some() {
            return Err(Error::InvalidInput("session already interrogated".into()));
        }
        let v = sssq_respond(&self.hidden, plan, self.epsilon, self.n, &mut self.stream)?;
        self.spent = Some(plan.cost());
        Ok(v)
    }
}
