//! From element-query answers back to set-query answers, plus the summary
//! statistics used on canonical element plans.

use super::{ElementQueryPlan, SetQueryPlan, SetResponse};
use crate::binom::{at_least_one, BinomialSpec};
use crate::boolfn::IndexSet;
use crate::error::{Error, Result};
use crate::hardgen::RandomStream;
use crate::params::coin_probability;
use serde::{Deserialize, Serialize};

/// Law of the number of ones among `r` iid `Bernoulli(coin)` bits, conditioned
/// on at least one: entry `k-1` is the probability of exactly `k` ones.
pub fn truncated_count_weights(r: u64, coin: f64) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::InvalidInput("no slots to condition on".into()));
    }
    if !(coin > 0.0 && coin <= 1.0) {
        return Err(Error::InconsistentInput(format!(
            "cannot condition on a one with coin {coin}"
        )));
    }
    if coin == 1.0 {
        let mut w = vec![0.0; r as usize];
        w[r as usize - 1] = 1.0;
        return Ok(w);
    }
    let spec = BinomialSpec::new(r, coin)?;
    let z = at_least_one(r, coin);
    Ok((1..=r).map(|k| spec.pmf(k).unwrap_or(0.0) / z).collect())
}

/// Samples set-query answers from element-query answers `b`.
///
/// For `b_j = 0` every slot of `j` is 0. For `b_j = 1` with multiplicity `r`,
/// the number of ones is drawn from the truncated binomial by inverse CDF and
/// the ones are placed uniformly among the `r` slots.
pub fn lift_response(
    b: &[bool],
    plan: &SetQueryPlan,
    epsilon: f64,
    n: usize,
    stream: &mut RandomStream,
) -> Result<SetResponse> {
    let m = plan.m();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    // slots[j] lists (set index, position in set) for element j+1.
    let mut slots: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (i, t) in plan.sets().iter().enumerate() {
        for (pos, &j) in t.iter().enumerate() {
            slots[j - 1].push((i, pos));
        }
    }
    let coin = coin_probability(epsilon, n);
    let mut v: SetResponse = plan.sets().iter().map(|t| vec![false; t.len()]).collect();
    for (j, &bit) in b.iter().enumerate() {
        if !bit {
            continue;
        }
        let r = slots[j].len();
        if r == 0 {
            return Err(Error::InconsistentInput(format!(
                "b_{} = 1 but element {} is never queried",
                j + 1,
                j + 1
            )));
        }
        let weights = truncated_count_weights(r as u64, coin)?;
        let u = stream.uniform_f64();
        let mut acc = 0.0;
        let mut k = r;
        for (idx, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = idx + 1;
                break;
            }
        }
        for s in rand::seq::index::sample(stream, r, k).iter() {
            let (i, pos) = slots[j][s];
            v[i][pos] = true;
        }
    }
    Ok(v)
}

/// `S(b)`: popcount of `b` on each bin, in bin order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Summary {
    pub counts: Vec<usize>,
}

pub fn summarize(b: &[bool], bins: &[IndexSet]) -> Result<Summary> {
    let mut seen = vec![false; b.len()];
    let mut counts = Vec::with_capacity(bins.len());
    for bin in bins {
        if bin.universe() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: b.len(),
                found: bin.universe(),
            });
        }
        let mut c = 0;
        for &i in bin.iter() {
            if std::mem::replace(&mut seen[i - 1], true) {
                return Err(Error::InvalidInput(format!("bins overlap at {i}")));
            }
            c += b[i - 1] as usize;
        }
        counts.push(c);
    }
    Ok(Summary { counts })
}

/// Bins `C_j = { i : ℓ_i = 2^j }` for `j = 0..=L` where `2^L` is the largest entry.
pub fn element_bins(plan: &ElementQueryPlan) -> Result<Vec<IndexSet>> {
    let m = plan.m();
    if let Some(&bad) = plan.ell.iter().find(|&&l| l != 0 && !l.is_power_of_two()) {
        return Err(Error::InvalidInput(format!("entry {bad} is not a power of two")));
    }
    let top = plan
        .ell
        .iter()
        .filter(|&&l| l > 0)
        .map(|l| l.trailing_zeros())
        .max();
    let Some(top) = top else {
        return Ok(Vec::new());
    };
    (0..=top)
        .map(|j| {
            let members = (1..=m).filter(|&i| plan.ell[i - 1] == 1u64 << j).collect();
            IndexSet::new(m, members)
        })
        .collect()
}

/// Rounds each positive entry up to a power of two and sorts decreasingly.
pub fn canonicalize_plan(plan: &ElementQueryPlan) -> ElementQueryPlan {
    let mut ell: Vec<u64> = plan
        .ell
        .iter()
        .map(|&l| if l == 0 { 0 } else { l.next_power_of_two() })
        .collect();
    ell.sort_unstable_by(|a, b| b.cmp(a));
    ElementQueryPlan { ell }
}
