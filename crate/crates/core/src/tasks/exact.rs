//! Exact response laws and optimal advantages by enumeration.
//!
//! Outcomes are packed into a `u64`. A set-query outcome uses one bit per
//! slot, the slots being `(i, j ∈ T_i)` in order of `i` then `j`, first slot
//! in the least significant bit. An element-query outcome uses bit `j-1` for `b_j`.

use super::lift::truncated_count_weights;
use super::{lambda, sssq_to_element_counts, ElementQueryPlan, SetQueryPlan};
use crate::boolfn::IndexSet;
use crate::error::{Error, Result};
use crate::params::{coin_probability, Params};
use std::collections::BTreeMap;

/// Largest number of outcome bits enumerated.
pub const MAX_OUTCOME_BITS: usize = 20;
/// Largest `m` accepted by [`exact_optimal_advantage`].
pub const MAX_ADVANTAGE_M: usize = 14;
const MAX_WORK: f64 = (1u64 << 26) as f64;

pub type OutcomeLaw = BTreeMap<u64, f64>;

#[derive(Debug, Clone, Copy)]
pub enum PlanRef<'a> {
    Set(&'a SetQueryPlan),
    Element(&'a ElementQueryPlan),
}

impl PlanRef<'_> {
    pub fn m(&self) -> usize {
        match self {
            PlanRef::Set(t) => t.m(),
            PlanRef::Element(e) => e.m(),
        }
    }

    pub fn cost(&self) -> u64 {
        match self {
            PlanRef::Set(t) => t.cost() as u64,
            PlanRef::Element(e) => e.cost(),
        }
    }
}

/// Inclusion probabilities of the two hidden-set laws and the per-query coin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameRates {
    pub p: f64,
    pub q: f64,
    pub coin: f64,
}

impl GameRates {
    pub fn from_params(params: &Params) -> Self {
        GameRates {
            p: params.p,
            q: params.q,
            coin: params.coin(),
        }
    }
}

fn check_universe(a: &IndexSet, m: usize) -> Result<()> {
    if a.universe() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: a.universe(),
        });
    }
    Ok(())
}

/// Element of each slot, in outcome-bit order.
fn slot_elements(plan: &SetQueryPlan) -> Result<Vec<usize>> {
    let slots: Vec<usize> = plan.sets().iter().flat_map(|t| t.iter().copied()).collect();
    if slots.len() > MAX_OUTCOME_BITS {
        return Err(Error::TooLarge {
            what: "set-query outcome bits",
            limit: MAX_OUTCOME_BITS,
        });
    }
    Ok(slots)
}

fn mask_of(slots: &[usize], keep: impl Fn(usize) -> bool) -> u64 {
    slots
        .iter()
        .enumerate()
        .filter(|&(_, &j)| keep(j))
        .fold(0, |acc, (s, _)| acc | 1 << s)
}

/// Calls `visit(sub)` for every submask of `mask`, including 0 and `mask`.
fn for_each_submask(mask: u64, mut visit: impl FnMut(u64)) {
    let mut sub = mask;
    loop {
        visit(sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
}

fn coin_mass(ones: u32, zeros: u32, coin: f64) -> f64 {
    coin.powi(ones as i32) * (1.0 - coin).powi(zeros as i32)
}

/// Law of one set-query response given `A`.
pub fn exact_sssq_distribution(
    a: &IndexSet,
    plan: &SetQueryPlan,
    epsilon: f64,
    n: usize,
) -> Result<OutcomeLaw> {
    check_universe(a, plan.m())?;
    let slots = slot_elements(plan)?;
    let coin = coin_probability(epsilon, n);
    let live = mask_of(&slots, |j| a.contains(j));
    let total = live.count_ones();
    let mut law = OutcomeLaw::new();
    for_each_submask(live, |sub| {
        let k = sub.count_ones();
        law.insert(sub, coin_mass(k, total - k, coin));
    });
    Ok(law)
}

/// Law of one element-query response given `A`.
pub fn exact_sseq_distribution(
    a: &IndexSet,
    plan: &ElementQueryPlan,
    epsilon: f64,
    n: usize,
) -> Result<OutcomeLaw> {
    let m = plan.m();
    check_universe(a, m)?;
    if m > MAX_OUTCOME_BITS {
        return Err(Error::TooLarge {
            what: "element-query outcome bits",
            limit: MAX_OUTCOME_BITS,
        });
    }
    let lam: Vec<f64> = plan.ell.iter().map(|&l| lambda(l, epsilon, n)).collect();
    let live = (1..=m)
        .filter(|&j| a.contains(j))
        .fold(0u64, |acc, j| acc | 1 << (j - 1));
    let mut law = OutcomeLaw::new();
    for_each_submask(live, |sub| {
        law.insert(sub, element_mass(sub, live, &lam));
    });
    Ok(law)
}

fn element_mass(sub: u64, live: u64, lam: &[f64]) -> f64 {
    let mut mass = 1.0;
    let mut rest = live;
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        mass *= if sub >> j & 1 == 1 { lam[j] } else { 1.0 - lam[j] };
    }
    mass
}

pub fn exact_response_distribution(
    a: &IndexSet,
    plan: PlanRef<'_>,
    epsilon: f64,
    n: usize,
) -> Result<OutcomeLaw> {
    match plan {
        PlanRef::Set(t) => exact_sssq_distribution(a, t, epsilon, n),
        PlanRef::Element(e) => exact_sseq_distribution(a, e, epsilon, n),
    }
}

pub fn total_variation(x: &OutcomeLaw, y: &OutcomeLaw) -> f64 {
    let mut sum = 0.0;
    for (k, &px) in x {
        sum += (px - y.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &py) in y {
        if !x.contains_key(k) {
            sum += py;
        }
    }
    sum / 2.0
}

/// Law of the lifted element-query response, in set-query outcome layout.
pub fn exact_lifted_distribution(
    a: &IndexSet,
    plan: &SetQueryPlan,
    epsilon: f64,
    n: usize,
) -> Result<OutcomeLaw> {
    check_universe(a, plan.m())?;
    let slots = slot_elements(plan)?;
    let ell = sssq_to_element_counts(plan);
    let coin = coin_probability(epsilon, n);
    let mut law = OutcomeLaw::from([(0u64, 1.0)]);
    for j in a.iter().copied() {
        let r = ell.ell[j - 1];
        if r == 0 {
            continue;
        }
        let lam = lambda(r, epsilon, n);
        if lam == 0.0 {
            continue;
        }
        let weights = truncated_count_weights(r, coin)?;
        let mask = mask_of(&slots, |x| x == j);
        // Each nonzero pattern with k ones carries w_k / C(r, k).
        let mut patterns = Vec::new();
        for_each_submask(mask, |sub| {
            if sub != 0 {
                let k = sub.count_ones() as u64;
                patterns.push((sub, weights[k as usize - 1] / binomial(r, k)));
            }
        });
        let mut next = OutcomeLaw::new();
        for (&key, &mass) in &law {
            *next.entry(key).or_default() += mass * (1.0 - lam);
            for &(pat, w) in &patterns {
                *next.entry(key | pat).or_default() += mass * lam * w;
            }
        }
        law = next;
    }
    Ok(law)
}

fn binomial(r: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (r - i) as f64 / (i + 1) as f64)
}

/// TV distance between direct set-query answers and lifted element-query answers.
pub fn claim53_equivalence_check(
    a: &IndexSet,
    plan: &SetQueryPlan,
    epsilon: f64,
    n: usize,
) -> Result<f64> {
    let direct = exact_sssq_distribution(a, plan, epsilon, n)?;
    let lifted = exact_lifted_distribution(a, plan, epsilon, n)?;
    Ok(total_variation(&direct, &lifted))
}

/// Best advantage over all deciders: TV between the yes and no response laws.
pub fn exact_optimal_advantage(plan: PlanRef<'_>, params: &Params) -> Result<f64> {
    exact_optimal_advantage_with(plan, GameRates::from_params(params))
}

/// As [`exact_optimal_advantage`] with explicit rates.
pub fn exact_optimal_advantage_with(plan: PlanRef<'_>, rates: GameRates) -> Result<f64> {
    let m = plan.m();
    if m > MAX_ADVANTAGE_M {
        return Err(Error::TooLarge {
            what: "hidden-set size for exact advantage",
            limit: MAX_ADVANTAGE_M,
        });
    }
    match plan {
        PlanRef::Element(e) => element_advantage(e, rates),
        PlanRef::Set(t) => set_advantage(t, rates),
    }
}

fn hidden_weight(a_mask: u64, m: usize, prob: f64) -> f64 {
    let k = a_mask.count_ones();
    coin_mass(k, m as u32 - k, prob)
}

fn tv_of(yes: &[f64], no: &[f64]) -> f64 {
    yes.iter().zip(no).map(|(y, n)| (y - n).abs()).sum::<f64>() / 2.0
}

fn element_advantage(plan: &ElementQueryPlan, rates: GameRates) -> Result<f64> {
    let m = plan.m();
    let lam: Vec<f64> = plan
        .ell
        .iter()
        .map(|&l| crate::binom::at_least_one(l, rates.coin))
        .collect();
    let queried = (0..m)
        .filter(|&j| plan.ell[j] > 0)
        .fold(0u64, |acc, j| acc | 1 << j);
    let mut yes = vec![0.0; 1 << m];
    let mut no = vec![0.0; 1 << m];
    for a in 0u64..1 << m {
        let wy = hidden_weight(a, m, rates.p);
        let wn = hidden_weight(a, m, rates.q);
        let live = a & queried;
        for_each_submask(live, |sub| {
            let mass = element_mass(sub, live, &lam);
            yes[sub as usize] += wy * mass;
            no[sub as usize] += wn * mass;
        });
    }
    Ok(tv_of(&yes, &no))
}

fn set_advantage(plan: &SetQueryPlan, rates: GameRates) -> Result<f64> {
    let m = plan.m();
    let slots = slot_elements(plan)?;
    let ell = sssq_to_element_counts(plan);
    let work: f64 = ell.ell.iter().map(|&r| 1.0 + (r as f64).exp2()).product::<f64>();
    if work > MAX_WORK {
        return Err(Error::TooLarge {
            what: "set-query enumeration work",
            limit: MAX_WORK as usize,
        });
    }
    let element_masks: Vec<u64> = (1..=m).map(|j| mask_of(&slots, |x| x == j)).collect();
    let size = 1usize << slots.len();
    let mut yes = vec![0.0; size];
    let mut no = vec![0.0; size];
    for a in 0u64..1 << m {
        let wy = hidden_weight(a, m, rates.p);
        let wn = hidden_weight(a, m, rates.q);
        let live = (0..m)
            .filter(|&j| a >> j & 1 == 1)
            .fold(0u64, |acc, j| acc | element_masks[j]);
        let total = live.count_ones();
        for_each_submask(live, |sub| {
            let k = sub.count_ones();
            let mass = coin_mass(k, total - k, rates.coin);
            yes[sub as usize] += wy * mass;
            no[sub as usize] += wn * mass;
        });
    }
    Ok(tv_of(&yes, &no))
}
