use super::{fmt_float, run_game, Distinguisher, ExperimentConfig, GameResult, RandomQueries, Report};
use crate::binom::{exact_dtv, lambda_j, product_dtv_subadditivity, roos_bound, BinomialSpec, RoosBound};
use crate::boolfn::{relevant_variables, to_table, BitString, BoolFn, IndexSet, TruthTable};
use crate::distance::{
    disagreements_on, dist_to_k_junta, farness_from_matching, max_disjoint_bichromatic_matching,
};
use crate::error::{Error, Result};
use crate::hardgen::{sample_d1, sample_d2, sample_no, sample_subset, sample_yes, Seed};
use crate::params::{derive_params, Mode, Params};
use crate::tasks::{
    build_set_queries, canonicalize_plan, claim53_equivalence_check, deciders, exact_optimal_advantage_with,
    is_good_m, sample_hidden, simulate_distinguisher, sseq_respond, sssq_respond, sssq_to_element_counts, Decider,
    ElementQueryPlan, GameRates, HiddenSet, Origin, PlanRef, SetQueryPlan, SssqSession, StringQueryPlan,
    Verdict, REDUCED_ADVANTAGE,
};
use rayon::prelude::*;

fn b(x: bool) -> String {
    x.to_string()
}

fn f(x: f64) -> String {
    fmt_float(x)
}

fn table_of(s: &crate::boolfn::StructuredFn) -> Result<TruthTable> {
    to_table(s)
}

/// `P(Bin(c, r) ≤ k)`.
fn binomial_cdf(c: u64, r: f64, k: u64) -> f64 {
    let spec = BinomialSpec::new(c, r).expect("rate in range");
    (0..=k.min(c)).map(|i| spec.pmf(i).unwrap_or(0.0)).sum()
}

/// Structural check on `D_yes`: every relevant variable lies in `M ∪ A`.
pub fn verify_yes(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.params;
    let rows = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let fun = sample_yes(params, config.seed.trial(i))?;
            let table = table_of(&fun)?;
            let rel = relevant_variables(&table);
            let support = fun.support();
            Ok((i, support.len(), rel.len(), rel.is_subset(&support)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = Report::new(
        "verify_yes",
        &["sample", "support_size", "relevant", "contained", "junta"],
    );
    let k = params.k;
    let (mut contained, mut junta) = (0u64, 0u64);
    for &(i, support, rel, ok) in &rows {
        contained += ok as u64;
        junta += (support <= k) as u64;
        report.row(vec![i.to_string(), support.to_string(), rel.to_string(), b(ok), b(support <= k)]);
        if !ok {
            report.fail(format!("sample {i}: relevant variables escape M ∪ A"));
        }
    }
    let n = config.trials as f64;
    // |M ∪ A| = t + Bin(m, p).
    let slack = k.saturating_sub(params.t) as u64;
    let predicted = binomial_cdf(params.m as u64, params.p, slack);
    let gap = slack as f64 - params.p * params.m as f64;
    let chernoff_floor = if gap > 0.0 {
        1.0 - (-2.0 * gap * gap / params.m as f64).exp()
    } else {
        0.0
    };
    report.metric("samples", config.trials);
    report.metric_f("containment_fraction", contained as f64 / n);
    report.metric_f("junta_fraction", junta as f64 / n);
    report.metric_f("junta_probability", predicted);
    report.metric_f("chernoff_floor", chernoff_floor);
    Ok(report)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Farness of `D_no` against `D_yes` by exact junta distance.
pub fn verify_no(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.params;
    let n = params.n;
    let k: usize = config.option_or("junta_k", params.k)?;
    if k > n {
        return Err(Error::InvalidInput(format!("junta_k = {k} exceeds n = {n}")));
    }
    let eps = params.epsilon;
    let sample = |yes: bool, i: u64| -> Result<(usize, u64, f64, bool)> {
        let fun = if yes {
            sample_yes(params, config.seed.trial(2 * i))?
        } else {
            sample_no(params, config.seed.trial(2 * i + 1))?
        };
        let rep = dist_to_k_junta(&table_of(&fun)?, k)?;
        Ok((fun.support().len(), rep.disagreements, rep.distance_f64(), rep.is_far(eps)))
    };
    let run = |yes: bool| -> Result<Vec<_>> {
        (0..config.trials).into_par_iter().map(|i| sample(yes, i)).collect()
    };
    let yes = run(true)?;
    let no = run(false)?;

    let mut report = Report::new(
        "verify_no",
        &["sample", "side", "support_size", "disagreements", "distance", "far"],
    );
    for (side, rows) in [("yes", &yes), ("no", &no)] {
        for (i, r) in rows.iter().enumerate() {
            report.row(vec![i.to_string(), side.into(), r.0.to_string(), r.1.to_string(), f(r.2), b(r.3)]);
        }
    }
    let frac = |rows: &[(usize, u64, f64, bool)]| rows.iter().filter(|r| r.3).count() as f64 / rows.len() as f64;
    let far_yes = frac(&yes);
    let far_no = frac(&no);
    let sizes = |rows: &[(usize, u64, f64, bool)]| rows.iter().map(|r| r.0 as f64).collect::<Vec<_>>();
    let (my, vy) = mean_var(&sizes(&yes));
    let (mn, vn) = mean_var(&sizes(&no));
    let gap = mn - my;
    let expected = (params.q - params.p) * params.m as f64;
    let sigma = (vy / yes.len() as f64 + vn / no.len() as f64).sqrt();
    let tail_gap: usize = config.option_or("gap", ((params.q - params.p) * params.m as f64 / 2.0).ceil() as usize)?;
    let tail = |rows: &[(usize, u64, f64, bool)]| {
        rows.iter().filter(|r| r.0 >= k + tail_gap).count() as f64 / rows.len() as f64
    };

    report.metric("junta_k", k);
    report.metric_f("far_fraction_yes", far_yes);
    report.metric_f("far_fraction_no", far_no);
    let mean_dist = |rows: &[(usize, u64, f64, bool)]| rows.iter().map(|r| r.2).sum::<f64>() / rows.len() as f64;
    report.metric_f("mean_distance_yes", mean_dist(&yes));
    report.metric_f("mean_distance_no", mean_dist(&no));
    report.metric_f("mean_support_yes", my);
    report.metric_f("mean_support_no", mn);
    report.metric_f("support_gap", gap);
    report.metric_f("expected_gap", expected);
    report.metric_f("gap_sigma", sigma);
    report.metric("tail_gap", tail_gap);
    report.metric_f("tail_fraction_yes", tail(&yes));
    report.metric_f("tail_fraction_no", tail(&no));
    if far_no < far_yes {
        report.fail(format!("far fraction under D_no ({far_no}) below D_yes ({far_yes})"));
    }
    if (gap - expected).abs() > 3.0 * sigma {
        report.fail(format!("support gap {gap} not within 3σ = {} of {expected}", 3.0 * sigma));
    }
    Ok(report)
}

fn verify_sparse(config: &ExperimentConfig, name: &str, draw: impl Fn(Seed) -> Result<TruthTable> + Sync) -> Result<Report> {
    let n = config.params.n;
    let eps = config.params.epsilon;
    let rows = (0..config.trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let t = draw(config.seed.trial(i))?;
            let rep = dist_to_k_junta(&t, n - 1)?;
            let mut min_matching = u64::MAX;
            let mut certified = true;
            let mut sound = true;
            for dir in 1..=n {
                let v = IndexSet::new(n, vec![dir])?;
                let cert = max_disjoint_bichromatic_matching(&t, &v)?;
                cert.validate(&t)?;
                // Each certified edge costs any junta ignoring `dir` one disagreement.
                sound &= cert.size <= disagreements_on(&t, &v.complement())?;
                min_matching = min_matching.min(cert.size);
                certified &= farness_from_matching(&cert, eps, n);
            }
            Ok((i, t.count_ones(), rep.distance_f64(), rep.is_far(eps), min_matching, certified, sound))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new(name, &["sample", "ones", "distance", "far", "min_matching", "certified"]);
    let (mut far, mut cert) = (0u64, 0u64);
    for &(i, ones, d, is_far, mm, c, sound) in &rows {
        far += is_far as u64;
        cert += c as u64;
        report.row(vec![i.to_string(), ones.to_string(), f(d), b(is_far), mm.to_string(), b(c)]);
        if c && !is_far {
            report.fail(format!("sample {i}: certified far but exact distance {d} < {eps}"));
        }
        if !sound {
            report.fail(format!("sample {i}: matching larger than the distance it certifies"));
        }
    }
    let total = config.trials as f64;
    report.metric_f("far_fraction", far as f64 / total);
    report.metric_f("certified_fraction", cert as f64 / total);
    Ok(report)
}

/// `D_1` farness from `(n-1)`-juntas, by exact distance and matching certificates.
pub fn verify_d1(config: &ExperimentConfig) -> Result<Report> {
    let (n, eps) = (config.params.n, config.params.epsilon);
    verify_sparse(config, "verify_d1", |s| sample_d1(n, eps, &mut s.stream("D1")))
}

/// As [`verify_d1`] for `D_2`.
pub fn verify_d2(config: &ExperimentConfig) -> Result<Report> {
    let (n, eps) = (config.params.n, config.params.epsilon);
    verify_sparse(config, "verify_d2", |s| sample_d2(n, eps, &mut s.stream("D2")))
}

fn decider_option(config: &ExperimentConfig, default: &str) -> Result<Decider> {
    let name = config.options.get("decider").map(String::as_str).unwrap_or(default);
    deciders::by_name(name).ok_or_else(|| Error::Parse(format!("unknown decider `{name}`")))
}

fn game_report(name: &str, r: &GameResult) -> Report {
    let mut report = Report::new(name, &["advantage", "ci_low", "ci_high", "trials_yes", "trials_no", "cost"]);
    report.row(vec![
        f(r.advantage),
        f(r.ci_low),
        f(r.ci_high),
        r.trials_yes.to_string(),
        r.trials_no.to_string(),
        r.cost.to_string(),
    ]);
    report.metric_f("advantage", r.advantage);
    report.metric_f("ci_low", r.ci_low);
    report.metric_f("ci_high", r.ci_high);
    report.metric("trials", r.trials());
    report.metric("cost", r.cost);
    report
}

/// All-0 function against `D_1` with `⌊1/(30ε)⌋` uniform queries, accepting iff all answers are 0.
pub fn sparse_game(n: usize, epsilon: f64, queries: Option<usize>, trials: u64, seed: Seed) -> Result<GameResult> {
    let q = queries.unwrap_or(((1.0 / (30.0 * epsilon)).floor() as usize).max(1));
    let zero = |_: Seed| Ok(BoolFn::Table(TruthTable::zeros(n)?));
    let d1 = |s: Seed| Ok(BoolFn::Table(sample_d1(n, epsilon, &mut s.stream("D1"))?));
    let alg = RandomQueries {
        n,
        q,
        decider: deciders::all_zero(),
    };
    run_game(&zero, &d1, &alg, trials, seed)
}

/// Default tiny query set: pairs that differ in one or two coordinates, plus their complements.
pub fn tiny_queries(n: usize) -> Vec<BitString> {
    let zero = BitString::zeros(n);
    let mut x1 = zero.clone();
    x1.set(n, true).expect("n >= 1");
    let mut x2 = x1.clone();
    x2.set(n - 1, true).expect("n >= 2");
    let mut y = BitString::zeros(n);
    y.set(1, true).expect("n >= 1");
    let mut y2 = y.clone();
    y2.set(n, true).expect("n >= 1");
    vec![zero, x1, x2, y, y2, BitString::ones(n)]
}

/// Yes-rates of the simulated distinguisher and of the direct string game,
/// for hidden sets with inclusion `prob`.
pub struct PipelineComparison {
    pub simulated: f64,
    pub direct: f64,
    pub sigma: f64,
    pub trials: u64,
}

impl PipelineComparison {
    pub fn within(&self, k_sigma: f64) -> bool {
        (self.simulated - self.direct).abs() <= k_sigma * self.sigma
    }
}

pub fn pipeline_comparison(
    params: &Params,
    x: &StringQueryPlan,
    origin: Origin,
    trials: u64,
    seed: Seed,
) -> Result<PipelineComparison> {
    let prob = origin.probability();
    let simulated = (0..trials)
        .into_par_iter()
        .map(|j| -> Result<u64> {
            let s = seed.trial(2 * j);
            let m_set = sample_subset(params.n, params.t, &mut s.stream("M"))?;
            let hidden = HiddenSet {
                origin,
                ..sample_hidden(params.m, prob, &mut s.stream("A"))
            };
            let mut oracle = SssqSession::new(hidden, params.epsilon, params.n, s.stream("oracle"));
            let v = simulate_distinguisher(x, &m_set, params, &mut oracle, &mut s.stream("sim"))?;
            Ok((v == Verdict::Yes) as u64)
        })
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum::<u64>();
    let direct = (0..trials)
        .into_par_iter()
        .map(|j| -> Result<u64> {
            let s = seed.trial(2 * j + 1);
            let fun = match origin {
                Origin::Yes(_) => sample_yes(params, s)?,
                Origin::No(_) => sample_no(params, s)?,
            };
            Ok((x.run(&fun, s)? == Verdict::Yes) as u64)
        })
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum::<u64>();
    let t = trials as f64;
    let (ps, pd) = (simulated as f64 / t, direct as f64 / t);
    Ok(PipelineComparison {
        simulated: ps,
        direct: pd,
        sigma: (ps * (1.0 - ps) / t + pd * (1.0 - pd) / t).sqrt(),
        trials,
    })
}

fn parse_queries(config: &ExperimentConfig) -> Result<Vec<BitString>> {
    match config.list_option::<BitString>("queries")? {
        Some(q) => Ok(q),
        None => Ok(tiny_queries(config.params.n)),
    }
}

/// `game` experiment; option `game` selects `sparse`, `structured` or `pipeline`.
pub fn game_experiment(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.params;
    let kind = config.options.get("game").map(String::as_str).unwrap_or("sparse");
    match kind {
        "sparse" => {
            let q = config.option::<usize>("queries")?;
            let r = sparse_game(params.n, params.epsilon, q, config.trials, config.seed)?;
            let mut report = game_report("game", &r);
            if r.ci_high >= REDUCED_ADVANTAGE {
                report.fail(format!("upper confidence bound {} reaches {}", r.ci_high, REDUCED_ADVANTAGE));
            }
            Ok(report)
        }
        "structured" => {
            let q: usize = config.option_or("queries", 8)?;
            let alg = RandomQueries {
                n: params.n,
                q,
                decider: decider_option(config, "all_equal")?,
            };
            let yes = |s: Seed| Ok(BoolFn::Structured(sample_yes(params, s)?));
            let no = |s: Seed| Ok(BoolFn::Structured(sample_no(params, s)?));
            let r = run_game(&yes, &no, &alg, config.trials, config.seed)?;
            Ok(game_report("game", &r))
        }
        "pipeline" => {
            let x = StringQueryPlan::new(parse_queries(config)?, decider_option(config, "all_equal")?)?;
            let mut report = Report::new("game", &["side", "simulated_yes_rate", "direct_yes_rate", "sigma", "trials"]);
            // q above (n/ε)² voids the union bound behind the reduction, but nothing else breaks.
            report.metric("reduction_budget_warning", x.exceeds_reduction_budget(params.epsilon));
            for (side, origin) in [("yes", Origin::Yes(params.p)), ("no", Origin::No(params.q))] {
                let c = pipeline_comparison(params, &x, origin, config.trials, config.seed)?;
                report.row(vec![side.into(), f(c.simulated), f(c.direct), f(c.sigma), c.trials.to_string()]);
                report.metric_f(&format!("{side}_gap"), c.simulated - c.direct);
                if !c.within(3.0) {
                    report.fail(format!(
                        "{side}: simulated {} vs direct {} exceeds 3σ = {}",
                        c.simulated,
                        c.direct,
                        3.0 * c.sigma
                    ));
                }
            }
            Ok(report)
        }
        other => Err(Error::Parse(format!("unknown game `{other}`"))),
    }
}

/// Plug-in Bayes decision on per-group one-counts of a response.
fn summary_bayes(plan: &ElementQueryPlan, b: &[bool], rates: GameRates) -> Verdict {
    let mut groups: Vec<(u64, u64, u64)> = Vec::new(); // (ℓ, size, ones)
    for (&l, &bit) in plan.ell.iter().zip(b) {
        match groups.iter_mut().find(|g| g.0 == l) {
            Some(g) => {
                g.1 += 1;
                g.2 += bit as u64;
            }
            None => groups.push((l, 1, bit as u64)),
        }
    }
    let mut llr = 0.0;
    for (l, c, ones) in groups {
        let lam = crate::binom::at_least_one(l, rates.coin);
        let py = BinomialSpec::new(c, (rates.p * lam).min(1.0)).and_then(|s| s.pmf(ones));
        let pn = BinomialSpec::new(c, (rates.q * lam).min(1.0)).and_then(|s| s.pmf(ones));
        llr += py.unwrap_or(0.0).ln() - pn.unwrap_or(0.0).ln();
    }
    if llr >= 0.0 {
        Verdict::Yes
    } else {
        Verdict::No
    }
}

/// Monte-Carlo advantage of the summary Bayes decider on an element plan.
pub fn sseq_monte_carlo(plan: &ElementQueryPlan, params: &Params, trials: u64, seed: Seed) -> Result<GameResult> {
    let rates = GameRates::from_params(params);
    let m = plan.m();
    let side = |prob: f64, offset: u64, count: u64| -> Result<u64> {
        Ok((0..count)
            .into_par_iter()
            .map(|j| -> Result<u64> {
                let s = seed.trial(2 * j + offset);
                let hidden = sample_hidden(m, prob, &mut s.stream("A"));
                let b = sseq_respond(&hidden, plan, params.epsilon, params.n, &mut s.stream("b"))?;
                Ok((summary_bayes(plan, &b, rates) == Verdict::Yes) as u64)
            })
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum())
    };
    let ty = trials / 2;
    let tn = trials - ty;
    let y = side(rates.p, 0, ty)?;
    let n = side(rates.q, 1, tn)?;
    Ok(GameResult::from_counts(y, ty, n, tn, plan.cost()))
}

/// Monte-Carlo advantage on a set plan. The response is collapsed to
/// `b_j = OR of the answers at j`, which is an element-query response for
/// `ℓ = sssq_to_element_counts(plan)`, and then decided by the summary rule.
pub fn sssq_monte_carlo(plan: &SetQueryPlan, params: &Params, trials: u64, seed: Seed) -> Result<GameResult> {
    if trials < 2 {
        return Err(Error::InvalidInput("a game needs at least two trials".into()));
    }
    let rates = GameRates::from_params(params);
    let ell = sssq_to_element_counts(plan);
    let m = plan.m();
    let side = |prob: f64, offset: u64, count: u64| -> Result<u64> {
        Ok((0..count)
            .into_par_iter()
            .map(|j| -> Result<u64> {
                let s = seed.trial(2 * j + offset);
                let hidden = sample_hidden(m, prob, &mut s.stream("A"));
                let v = sssq_respond(&hidden, plan, params.epsilon, params.n, &mut s.stream("v"))?;
                let mut b = vec![false; m];
                for (t, row) in plan.sets().iter().zip(&v) {
                    for (&e, &bit) in t.iter().zip(row) {
                        b[e - 1] |= bit;
                    }
                }
                Ok((summary_bayes(&ell, &b, rates) == Verdict::Yes) as u64)
            })
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum())
    };
    let ty = trials / 2;
    let tn = trials - ty;
    let y = side(rates.p, 0, ty)?;
    let n = side(rates.q, 1, tn)?;
    Ok(GameResult::from_counts(y, ty, n, tn, plan.cost() as u64))
}

/// Optimal advantage of uniform element plans over a budget grid.
pub fn sseq_curve(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.params;
    let m: usize = config.option_or("curve_m", params.m)?;
    let budgets: Vec<u64> = config
        .list_option("budgets")?
        .unwrap_or_else(|| (0..=16).map(|i| i * m as u64).collect());
    let force_mc: bool = config.option_or("monte_carlo", false)?;
    let exact = m <= crate::tasks::exact::MAX_ADVANTAGE_M && !force_mc;
    let rates = GameRates::from_params(params);
    let mut report = Report::new("sseq_curve", &["budget", "advantage", "method"]);
    let mut prev: Option<f64> = None;
    for &budget in &budgets {
        let plan = ElementQueryPlan::uniform(m, budget);
        let adv = if exact {
            exact_optimal_advantage_with(PlanRef::Element(&plan), rates)?
        } else {
            sseq_monte_carlo(&plan, params, config.trials, config.seed.trial(budget))?.advantage
        };
        report.row(vec![budget.to_string(), f(adv), if exact { "exact" } else { "monte_carlo" }.into()]);
        if exact {
            if budget == 0 && adv != 0.0 {
                report.fail(format!("budget 0 gives advantage {adv}"));
            }
            if let Some(p) = prev {
                if adv < p - 1e-12 {
                    report.fail(format!("advantage drops from {p} to {adv} at budget {budget}"));
                }
            }
        }
        prev = Some(adv);
    }
    report.metric("m", m);
    report.metric("exact", exact);
    Ok(report)
}

/// Exact dTV against the Roos-style bound over a `(c, λ)` grid.
pub fn dtv_sweep(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.params;
    let c_max: u64 = config.option_or("c_max", 256)?;
    let grid: Vec<f64> = config
        .list_option("lambdas")?
        .unwrap_or_else(|| vec![1e-4, 1e-3, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0]);
    let (p, q) = (params.p, params.q);
    let cells = (1..=c_max)
        .into_par_iter()
        .flat_map_iter(|c| grid.iter().map(move |&lam| (c, lam)))
        .map(|(c, lam)| -> Result<(u64, f64, f64, Option<f64>, RoosBound<f64>)> {
            let r = p * lam;
            let x = (q - p) * lam;
            let d = exact_dtv(&BinomialSpec::new(c, r)?, &BinomialSpec::new(c, (q * lam).min(1.0))?)?;
            let tau = crate::binom::roos_tau(x, c, r).ok();
            Ok((c, lam, d, tau, roos_bound(x, c, r)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new("dtv_sweep", &["c", "lambda", "dtv", "tau", "bound", "applicable"]);
    let mut applicable = 0u64;
    let mut worst_ratio: f64 = 0.0;
    for (c, lam, d, tau, bound) in cells {
        let (bound_s, app) = match bound {
            RoosBound::Bound(v) => (f(v), true),
            RoosBound::Inapplicable => (String::new(), false),
        };
        report.row(vec![
            c.to_string(),
            f(lam),
            f(d),
            tau.map(f).unwrap_or_default(),
            bound_s,
            b(app),
        ]);
        if let RoosBound::Bound(v) = bound {
            applicable += 1;
            if v > 0.0 {
                worst_ratio = worst_ratio.max(d / v);
            }
            if d > v {
                report.fail(format!("c = {c}, λ = {lam}: dTV {d} exceeds bound {v}"));
            }
        }
    }
    report.metric("applicable_cells", applicable);
    report.metric_f("worst_ratio", worst_ratio);
    Ok(report)
}

/// For each `n`, the worst per-bin dTV times `L`, with `c_j = ⌊2s/2^j⌋`.
pub fn bin_dtv_trend(ns: &[usize], alpha: f64, epsilon: f64, mode: Mode) -> Result<Vec<(usize, usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let params = derive_params(n, alpha, epsilon, mode)?;
            let mut worst: f64 = 0.0;
            for j in 0..=params.l as u32 {
                let c = (2.0 * params.s / (j as f64).exp2()).floor() as u64;
                if c == 0 {
                    continue;
                }
                let lam = lambda_j(j, epsilon, n);
                let d = exact_dtv(
                    &BinomialSpec::new(c, params.p * lam)?,
                    &BinomialSpec::new(c, (params.q * lam).min(1.0))?,
                )?;
                worst = worst.max(d);
            }
            Ok((n, params.l, worst * params.l as f64))
        })
        .collect()
}

/// Exact distance between a product of binomial pairs and the sum of marginals.
pub fn subadditivity_trial(pairs: &[(BinomialSpec<f64>, BinomialSpec<f64>)]) -> Result<(f64, f64)> {
    product_dtv_subadditivity(pairs)
}

fn all_subsets(m: usize, max_size: usize) -> Vec<IndexSet> {
    (0u32..1 << m)
        .filter(|s| s.count_ones() as usize <= max_size)
        .map(|s| IndexSet::new(m, (1..=m).filter(|j| s >> (j - 1) & 1 == 1).collect()).expect("in range"))
        .collect()
}

/// Every plan with `m ≤ max_m`, `d ≤ max_d`, `|T_i| ≤ max_set`, against every hidden set.
pub fn lift_equivalence_sweep(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.params;
    let max_m: usize = config.option_or("max_m", 3)?;
    let max_d: usize = config.option_or("max_d", 2)?;
    let max_set: usize = config.option_or("max_set", 3)?;
    let mut report = Report::new("claim53", &["m", "d", "plans", "hidden_sets", "max_tv"]);
    let mut worst: f64 = 0.0;
    for m in 1..=max_m {
        let sets = all_subsets(m, max_set);
        let hidden = all_subsets(m, m);
        for d in 1..=max_d {
            let mut plans: Vec<Vec<IndexSet>> = vec![Vec::new()];
            for _ in 0..d {
                plans = plans
                    .into_iter()
                    .flat_map(|p| {
                        sets.iter().map(move |s| {
                            let mut p = p.clone();
                            p.push(s.clone());
                            p
                        })
                    })
                    .collect();
            }
            let max_tv = plans
                .par_iter()
                .map(|sets| -> Result<f64> {
                    let plan = SetQueryPlan::new(m, sets.clone())?;
                    let mut w: f64 = 0.0;
                    for a in &hidden {
                        w = w.max(claim53_equivalence_check(a, &plan, params.epsilon, params.n)?);
                    }
                    Ok(w)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            worst = worst.max(max_tv);
            report.row(vec![m.to_string(), d.to_string(), plans.len().to_string(), hidden.len().to_string(), f(max_tv)]);
        }
    }
    report.metric_f("max_tv", worst);
    if worst > 1e-9 {
        report.fail(format!("max TV {worst} exceeds 1e-9"));
    }
    Ok(report)
}

/// Uniform random queries.
pub fn random_strings(n: usize, q: usize, seed: Seed) -> Vec<BitString> {
    RandomQueries {
        n,
        q,
        decider: deciders::always(Verdict::Yes),
    }
    .draw(seed)
}

/// Queries clustered around a few centres: each query flips up to `spread`
/// random coordinates of its centre.
pub fn clustered_strings(n: usize, q: usize, centres: usize, spread: usize, seed: Seed) -> Vec<BitString> {
    let base = random_strings(n, centres.max(1), seed);
    let mut st = seed.stream("cluster");
    (0..q)
        .map(|_| {
            let mut x = base[st.below(base.len())].clone();
            for _ in 0..st.below(spread + 1) {
                let i = 1 + st.below(n);
                let v = x.get(i).expect("in range");
                x.set(i, !v).expect("in range");
            }
            x
        })
        .collect()
}

/// Monte-Carlo frequency of a bad `M` against the union bound `q²(1.5-α)^τ`.
pub fn good_m_experiment(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.params;
    let q: usize = config.option_or("queries", 20)?;
    let tau: usize = config.option_or("tau", params.tau)?;
    let clustered: bool = config.option_or("clustered", false)?;
    let bad = (0..config.trials)
        .into_par_iter()
        .map(|j| -> Result<u64> {
            let s = config.seed.trial(j);
            let x = if clustered {
                clustered_strings(params.n, q, 3, params.n, s)
            } else {
                random_strings(params.n, q, s)
            };
            let m_set = sample_subset(params.n, params.t, &mut s.stream("M"))?;
            Ok(!is_good_m(&m_set, &x, tau)? as u64)
        })
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum::<u64>();
    let n = config.trials as f64;
    let est = bad as f64 / n;
    let sigma = (est * (1.0 - est) / n).sqrt();
    let bound = (q * q) as f64 * (1.5 - params.alpha).powi(tau as i32);
    let mut report = Report::new(
        "goodM",
        &["trials", "queries", "tau", "bad", "estimate", "sigma", "union_bound"],
    );
    report.row(vec![
        config.trials.to_string(),
        q.to_string(),
        tau.to_string(),
        bad.to_string(),
        f(est),
        f(sigma),
        f(bound),
    ]);
    report.metric_f("estimate", est);
    report.metric_f("sigma", sigma);
    report.metric_f("union_bound", bound);
    if est > bound + 3.0 * sigma {
        report.fail(format!("bad-M rate {est} exceeds union bound {bound} + 3σ"));
    }
    Ok(report)
}

/// Cost checks on random clustered string plans: the reduction stays within
/// `τ·q`, element counts keep the cost, canonicalization at most doubles it.
pub fn cost_accounting(params: &Params, plans: u64, seed: Seed) -> Result<Report> {
    let mut report = Report::new(
        "cost_accounting",
        &["plan", "q", "good", "set_cost", "bound", "element_cost", "canonical_cost"],
    );
    let mut good_plans = 0u64;
    for j in 0..plans {
        let s = seed.trial(j);
        let mut st = s.stream("shape");
        let q = 1 + st.below(20);
        let queries = clustered_strings(params.n, q, 1 + st.below(4), 3, s);
        let x = StringQueryPlan::new(queries, deciders::always(Verdict::Yes))?;
        let m_set = sample_subset(params.n, params.t, &mut s.stream("M"))?;
        let good = is_good_m(&m_set, x.queries(), params.tau)?;
        let build = build_set_queries(&x, &m_set, params.tau, true)?;
        let set_cost = build.cost() as u64;
        let ell = sssq_to_element_counts(&build.plan);
        let canon = canonicalize_plan(&ell);
        let bound = (params.tau * q) as u64;
        report.row(vec![
            j.to_string(),
            q.to_string(),
            b(good),
            set_cost.to_string(),
            bound.to_string(),
            ell.cost().to_string(),
            canon.cost().to_string(),
        ]);
        if good {
            good_plans += 1;
            if set_cost > bound {
                report.fail(format!("plan {j}: cost {set_cost} exceeds τ·q = {bound}"));
            }
        }
        if ell.cost() != set_cost {
            report.fail(format!("plan {j}: element cost {} differs from set cost {set_cost}", ell.cost()));
        }
        if canon.cost() > 2 * ell.cost() {
            report.fail(format!("plan {j}: canonical cost {} more than doubles {}", canon.cost(), ell.cost()));
        }
    }
    report.metric("good_plans", good_plans);
    Ok(report)
}

/// Coordinatewise monotonicity of the optimal advantage over `{0..=top}^m`.
pub fn monotonicity_lattice(m: usize, top: u64, rates: GameRates) -> Result<(usize, Vec<(Vec<u64>, Vec<u64>)>)> {
    let side = top + 1;
    let count = side.pow(m as u32) as usize;
    let point = |mut idx: usize| -> Vec<u64> {
        (0..m)
            .map(|_| {
                let v = (idx as u64) % side;
                idx /= side as usize;
                v
            })
            .collect()
    };
    let adv = (0..count)
        .map(|i| exact_optimal_advantage_with(PlanRef::Element(&ElementQueryPlan::new(point(i))), rates))
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    let mut comparisons = 0;
    for i in 0..count {
        let li = point(i);
        for c in 0..m {
            if li[c] < top {
                let mut lj = li.clone();
                lj[c] += 1;
                let j = lj.iter().rev().fold(0usize, |acc, &v| acc * side as usize + v as usize);
                comparisons += 1;
                if adv[j] < adv[i] - 1e-12 {
                    violations.push((li.clone(), lj));
                }
            }
        }
    }
    Ok((comparisons, violations))
}

/// Exact yes-rate difference of a single query `x` under `D_yes` and `D_no` with
/// decider "answer is 1", by enumerating `M`, `A` and `S`.
pub fn exact_single_query_advantage(params: &Params, x: &BitString) -> Result<f64> {
    let n = params.n;
    if n > 12 {
        return Err(Error::TooLarge {
            what: "dimension for instance enumeration",
            limit: 12,
        });
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    let coin = params.coin();
    let rate = |prob: f64| -> f64 {
        let mut total = 0.0;
        let m_sets = crate::distance::combinations(n, params.t);
        let m_weight = 1.0 / m_sets.len() as f64;
        for _m_set in &m_sets {
            let m = n - params.t;
            for a in 0u32..1 << m {
                let ka = a.count_ones();
                let wa = prob.powi(ka as i32) * (1.0 - prob).powi((m as u32 - ka) as i32);
                for s in 0u32..1 << ka {
                    let ks = s.count_ones();
                    let ws = coin.powi(ks as i32) * (1.0 - coin).powi((ka - ks) as i32);
                    // h is a uniform random function, so f(x) = 1 with probability 1/2.
                    total += m_weight * wa * ws * 0.5;
                }
            }
        }
        total
    };
    Ok(rate(params.p) - rate(params.q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk(n: usize, eps: f64) -> Params {
        derive_params(n, 0.75, eps, Mode::DeskScale).unwrap()
    }

    #[test]
    fn verify_yes_small() {
        let cfg = ExperimentConfig::new(desk(8, 1.0), crate::harness::Experiment::VerifyYes, 30, 1, "x.csv");
        let r = verify_yes(&cfg).unwrap();
        assert!(r.passed);
        assert_eq!(r.metric_value("containment_fraction"), Some(1.0));
        // Tiny ε: S_i is almost always empty, containment still holds.
        let cfg = ExperimentConfig::new(desk(8, 1e-6), crate::harness::Experiment::VerifyYes, 30, 1, "x.csv");
        assert!(verify_yes(&cfg).unwrap().passed);
    }

    #[test]
    fn full_junta_is_never_far() {
        let cfg = ExperimentConfig::new(desk(8, 0.1), crate::harness::Experiment::VerifyNo, 20, 2, "x.csv")
            .with_option("junta_k", 8);
        let r = verify_no(&cfg).unwrap();
        assert_eq!(r.metric_value("far_fraction_yes"), Some(0.0));
        assert_eq!(r.metric_value("far_fraction_no"), Some(0.0));
    }

    #[test]
    fn d1_and_d2_certificates_are_sound() {
        let cfg = ExperimentConfig::new(desk(8, 0.05), crate::harness::Experiment::VerifyD1, 20, 3, "x.csv");
        assert!(verify_d1(&cfg).unwrap().passed);
        let cfg = ExperimentConfig::new(desk(8, 0.02), crate::harness::Experiment::VerifyD2, 20, 3, "x.csv");
        let r = verify_d2(&cfg).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn curve_starts_at_zero_and_rises() {
        let cfg = ExperimentConfig::new(desk(10, 1.0), crate::harness::Experiment::SseqCurve, 1, 0, "x.csv")
            .with_option("curve_m", 4)
            .with_option("budgets", "0,4,8,16");
        let r = sseq_curve(&cfg).unwrap();
        assert!(r.passed, "{:?}", r.failures);
        assert_eq!(r.rows[0][1], "0");
    }

    #[test]
    fn monte_carlo_curve_tracks_exact() {
        let params = desk(10, 1.0);
        let plan = ElementQueryPlan::uniform(6, 12);
        let exact = exact_optimal_advantage_with(PlanRef::Element(&plan), GameRates::from_params(&params)).unwrap();
        let mc = sseq_monte_carlo(&plan, &params, 20_000, Seed(5)).unwrap();
        // The summary decider is Bayes-optimal, so it estimates the exact optimum.
        assert!(mc.ci_low - 0.01 <= exact && exact <= mc.ci_high + 0.01, "{exact} {mc:?}");
    }

    #[test]
    fn tiny_queries_shape() {
        let q = tiny_queries(6);
        assert_eq!(q.len(), 6);
        assert_eq!(q[1].to_string(), "000001");
        assert_eq!(q[2].to_string(), "000011");
        assert_eq!(q[4].to_string(), "100001");
    }

    #[test]
    fn lattice_monotone_m2() {
        let (cmp, bad) = monotonicity_lattice(2, 3, GameRates { p: 0.5, q: 0.9, coin: 0.3 }).unwrap();
        assert_eq!(cmp, 2 * 4 * 3);
        assert!(bad.is_empty());
    }
}
