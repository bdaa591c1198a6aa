//! From string queries against `f_{M,A,H}` to set queries against `A`.

use super::{SetQueryPlan, SssqOracle, StringQueryPlan, Verdict};
use crate::boolfn::{hamming, BitString, BoolFunction, IndexSet};
use crate::error::{Error, Result};
use crate::hardgen::{derive_bit, Payload, RandomStream};
use crate::params::Params;
use std::collections::HashMap;

const ROLE_SIM: &str = "sim-f";

/// True iff every pair at Hamming distance at least `tau` has distinct projections on `M`.
pub fn is_good_m(m_set: &IndexSet, queries: &[BitString], tau: usize) -> Result<bool> {
    let proj = queries
        .iter()
        .map(|x| x.restrict(m_set))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..queries.len() {
        for j in i + 1..queries.len() {
            if proj[i] == proj[j] && hamming(&queries[i], &queries[j])? >= tau {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Output of [`build_set_queries`].
#[derive(Debug, Clone)]
pub struct SetQueryBuild {
    /// Query indices of each class, classes in order of first appearance.
    pub classes: Vec<Vec<usize>>,
    /// `T_ℓ` relabeled into `[m]`.
    pub plan: SetQueryPlan,
    /// Shared projection `x|_M` of each class; its integer value plus one is `Γ_M`.
    pub rho: Vec<BitString>,
    /// `complement(M)` in increasing order; element `j` of `[m]` is `universe[j-1]`.
    pub universe: Vec<usize>,
    /// Whether `M` passed [`is_good_m`].
    pub good: bool,
}

impl SetQueryBuild {
    pub fn cost(&self) -> usize {
        self.plan.cost()
    }

    pub fn within_cost_bound(&self, tau: usize) -> bool {
        self.cost() <= tau * self.classes.iter().map(Vec::len).sum::<usize>()
    }

    /// Class of each query.
    pub fn class_of(&self) -> Vec<usize> {
        let q = self.classes.iter().map(Vec::len).sum();
        let mut out = vec![0; q];
        for (l, members) in self.classes.iter().enumerate() {
            for &i in members {
                out[i] = l;
            }
        }
        out
    }
}

/// Splits `X` by projection on `M` and builds `T_ℓ`, the coordinates outside
/// `M` where two queries of class `ℓ` differ. Fails with `BadM` when `M` is
/// not good for `X`, unless `force` is set.
pub fn build_set_queries(
    x: &StringQueryPlan,
    m_set: &IndexSet,
    tau: usize,
    force: bool,
) -> Result<SetQueryBuild> {
    let n = x.n();
    if m_set.universe() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m_set.universe(),
        });
    }
    let good = is_good_m(m_set, x.queries(), tau)?;
    if !good && !force {
        return Err(Error::BadM);
    }
    let mut index: HashMap<BitString, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut rho = Vec::new();
    for (i, q) in x.queries().iter().enumerate() {
        let p = q.restrict(m_set)?;
        let l = *index.entry(p.clone()).or_insert_with(|| {
            classes.push(Vec::new());
            rho.push(p);
            classes.len() - 1
        });
        classes[l].push(i);
    }
    let comp = m_set.complement();
    let universe: Vec<usize> = comp.members().to_vec();
    let m = universe.len();
    let mut sets = Vec::with_capacity(classes.len());
    for members in &classes {
        let first = &x.queries()[members[0]];
        let differing: Vec<usize> = universe
            .iter()
            .enumerate()
            .filter(|&(_, &i)| {
                let v = first.get(i).expect("index within n");
                members[1..]
                    .iter()
                    .any(|&k| x.queries()[k].get(i).expect("index within n") != v)
            })
            .map(|(pos, _)| pos + 1)
            .collect();
        sets.push(IndexSet::new(m, differing)?);
    }
    Ok(SetQueryBuild {
        classes,
        plan: SetQueryPlan::new(m, sets)?,
        rho,
        universe,
        good,
    })
}

/// Answers a string-query plan with the simulated function: query `x` in class
/// `ℓ` is answered by a fresh random function of `x|_{R_ℓ}`, where `R_ℓ` holds
/// the coordinates of `T_ℓ` whose set-query answer was 1.
pub fn simulate_distinguisher(
    x: &StringQueryPlan,
    m_set: &IndexSet,
    params: &Params,
    oracle: &mut dyn SssqOracle,
    stream: &mut RandomStream,
) -> Result<Verdict> {
    let build = build_set_queries(x, m_set, params.tau, false)?;
    let answers = simulated_answers(x, &build, oracle, stream)?;
    Ok(x.decide(&answers))
}

/// The `q` bits fed to the decider by [`simulate_distinguisher`].
pub fn simulated_answers(
    x: &StringQueryPlan,
    build: &SetQueryBuild,
    oracle: &mut dyn SssqOracle,
    stream: &mut RandomStream,
) -> Result<Vec<bool>> {
    let v = oracle.query(&build.plan)?;
    let fn_seed = stream.seed();
    let n = x.n();
    let mut answers = vec![false; x.q()];
    for (l, members) in build.classes.iter().enumerate() {
        let r: Vec<usize> = build.plan.sets()[l]
            .iter()
            .zip(&v[l])
            .filter(|&(_, &bit)| bit)
            .map(|(&j, _)| build.universe[j - 1])
            .collect();
        let r_set = IndexSet::new(n, r)?;
        for &i in members {
            let payload = Payload::new()
                .word(l as u64)
                .indices(r_set.members())
                .bits(&x.queries()[i].restrict(&r_set)?);
            answers[i] = derive_bit(fn_seed, ROLE_SIM, payload.as_bytes(), 0.5);
        }
    }
    Ok(answers)
}

/// `f(x_1), …, f(x_q)`.
pub fn direct_string_answers(x: &StringQueryPlan, f: &impl BoolFunction) -> Result<Vec<bool>> {
    x.queries().iter().map(|q| f.eval(q)).collect()
}
