//! Matching certificates against exact junta distances.

use junta_lab::distance::{disagreements_on, dist_to_junta_on, max_disjoint_bichromatic_matching};
use junta_lab::hardgen::{sample_no, sample_subset, sample_yes};
use junta_lab::params::{derive_params, Mode};
use junta_lab::{IndexSet, Seed, TruthTable};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table(rng: &mut ChaCha8Rng, n: usize) -> TruthTable {
    let density: f64 = rng.gen();
    TruthTable::from_fn(n, |_| rng.gen_bool(density)).unwrap()
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, prob: f64) -> IndexSet {
    IndexSet::new(n, (1..=n).filter(|_| rng.gen_bool(prob)).collect()).unwrap()
}

fn flip_mask(n: usize, i: usize) -> u64 {
    1 << (n - i)
}

/// Edges taken direction by direction, skipping any that touch a used vertex.
fn greedy_matching(f: &TruthTable, v: &IndexSet) -> u64 {
    let n = f.n();
    let mut used = vec![false; f.size()];
    let mut count = 0;
    for &i in v.iter() {
        for x in 0..f.size() as u64 {
            let y = x ^ flip_mask(n, i);
            if x < y && f.get(x) != f.get(y) && !used[x as usize] && !used[y as usize] {
                used[x as usize] = true;
                used[y as usize] = true;
                count += 1;
            }
        }
    }
    count
}

/// Every junta on coordinates disjoint from `V` pays one disagreement per certified edge.
#[test]
fn certificate_soundness_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2023);
    let mut triples = 0;
    while triples < 1500 {
        let n = rng.gen_range(1..=8);
        let f = random_table(&mut rng, n);
        let v = random_subset(&mut rng, n, 0.4);
        if v.is_empty() {
            continue;
        }
        let cert = max_disjoint_bichromatic_matching(&f, &v).unwrap();
        cert.validate(&f).unwrap();
        let bound = Ratio::new(cert.size, 1u64 << n);
        for _ in 0..4 {
            let j = random_subset(&mut rng, n, 0.5);
            // A junta on J ignores every coordinate of V \ J.
            let missing = v.iter().copied().filter(|i| !j.contains(*i)).collect::<Vec<_>>();
            if missing.is_empty() {
                continue;
            }
            let outside = IndexSet::new(n, missing).unwrap();
            let partial = max_disjoint_bichromatic_matching(&f, &outside).unwrap();
            let dist = dist_to_junta_on(&f, &j).unwrap();
            assert!(dist >= Ratio::new(partial.size, 1u64 << n), "n={n} V={v:?} J={j:?}");
            if j.is_disjoint(&v) {
                assert!(dist >= bound, "n={n} V={v:?} J={j:?}");
            }
            triples += 1;
        }
    }
}

/// Missing one element of V is not enough for the full-V certificate to bound the distance.
#[test]
fn full_v_certificate_needs_disjoint_j() {
    // f = x_1 on two variables: both direction-1 edges are bichromatic.
    let f = TruthTable::from_fn(2, |idx| idx >> 1 == 1).unwrap();
    let v = IndexSet::new(2, vec![1, 2]).unwrap();
    let cert = max_disjoint_bichromatic_matching(&f, &v).unwrap();
    assert_eq!(cert.size, 2);
    let j = IndexSet::new(2, vec![1]).unwrap();
    assert_eq!(disagreements_on(&f, &j).unwrap(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]
    #[test]
    fn greedy_never_beats_exact(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_table(&mut rng, n);
        let mut v = random_subset(&mut rng, n, 0.5);
        if v.is_empty() {
            v = IndexSet::full(n);
        }
        let exact = max_disjoint_bichromatic_matching(&f, &v).unwrap().size;
        prop_assert!(greedy_matching(&f, &v) <= exact);
        for &i in v.iter() {
            let single = IndexSet::new(n, vec![i]).unwrap();
            prop_assert!(greedy_matching(&f, &single) <= exact);
        }
    }
}

/// Mean `E_V / 2^n` for structured instances when `V` contains an `M` coordinate.
#[test]
fn addressing_directions_give_large_matchings() {
    let n = 10;
    let params = derive_params(n, 0.75, 1.0, Mode::DeskScale).unwrap();
    let v_size = (9 * (n as f64).sqrt().ceil() as usize).min(n - 1);
    let mut total = 0.0;
    let mut count = 0;
    for s in 0..50u64 {
        for f in [sample_yes(&params, Seed(s)).unwrap(), sample_no(&params, Seed(s)).unwrap()] {
            let table = junta_lab::boolfn::to_table(&f).unwrap();
            let mut st = Seed(s).stream("V");
            let v = loop {
                let v = sample_subset(n, v_size, &mut st).unwrap();
                if !v.is_disjoint(f.m_set()) {
                    break v;
                }
            };
            let e = max_disjoint_bichromatic_matching(&table, &v).unwrap().size;
            total += e as f64 / (1u64 << n) as f64;
            count += 1;
        }
    }
    let mean = total / count as f64;
    println!("INFO mean E_V/2^n = {mean:.4} over {count} instances (|V| = {v_size}, reference 0.2)");
    assert!(mean >= 0.1, "mean {mean}");
}
