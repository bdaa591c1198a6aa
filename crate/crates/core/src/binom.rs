//! Exact binomial arithmetic: masses, total variation distance, the
//! Roos-type bound on the distance between two binomials with a shifted
//! success rate, and product-distribution subadditivity.
//!
//! Everything is generic over [`Real`]; the crate root exports `f64` aliases.

use crate::error::{Error, Result};
use crate::params::Params;
use crate::scalar::Real;

/// Multiplier on `τ/(1-τ)²` used by [`roos_bound`].
pub const ROOS_CONSTANT: f64 = 3.0;

/// Largest joint support enumerated by [`product_dtv_subadditivity`].
pub const MAX_JOINT_SUPPORT: usize = 1 << 20;

/// `Bin(c, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialSpec<T> {
    pub c: u64,
    pub r: T,
}

impl<T: Real> BinomialSpec<T> {
    pub fn new(c: u64, r: T) -> Result<Self> {
        if !(r >= T::zero() && r <= T::one()) {
            return Err(Error::InvalidInput(format!("success rate {r:?} outside [0, 1]")));
        }
        Ok(BinomialSpec { c, r })
    }

    pub fn pmf(&self, k: u64) -> Result<T> {
        pmf(self, k)
    }

    /// `pmf(0..=c)`.
    pub fn pmf_vec(&self) -> Vec<T> {
        (0..=self.c).map(|k| dbinom(k, self.c, self.r)).collect()
    }

    pub fn mean(&self) -> T {
        T::of(self.c as f64) * self.r
    }

    pub fn variance(&self) -> T {
        self.mean() * (T::one() - self.r)
    }
}

/// `C(c,k) r^k (1-r)^(c-k)`.
pub fn pmf<T: Real>(spec: &BinomialSpec<T>, k: u64) -> Result<T> {
    if k > spec.c {
        return Err(Error::IndexOutOfRange {
            index: k as usize,
            len: spec.c as usize,
        });
    }
    Ok(dbinom(k, spec.c, spec.r))
}

// Saddle-point evaluation in log space (Loader 2000). Each term is evaluated
// without forming large log-factorials, so relative accuracy stays near
// machine precision for large `c`.

fn stirlerr<T: Real>(n: u64) -> T {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nf = n as f64;
    if n <= 15 {
        let ln_fact: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
        let v = ln_fact - (nf + 0.5) * nf.ln() + nf - 0.5 * (2.0 * std::f64::consts::PI).ln();
        return T::of(v);
    }
    let nn = nf * nf;
    let v = if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    };
    T::of(v)
}

/// `x ln(x/np) + np - x`, accurate when `x ≈ np`.
fn bd0<T: Real>(x: T, np: T) -> T {
    let diff = x - np;
    if diff.abs() < T::of(0.1) * (x + np) {
        let v = diff / (x + np);
        let mut s = diff * v;
        let mut ej = T::of(2.0) * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej = ej * v2;
            let s1 = s + ej / T::of((2 * j + 1) as f64);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

fn dbinom<T: Real>(k: u64, c: u64, r: T) -> T {
    let zero = T::zero();
    let one = T::one();
    let q = one - r;
    if r == zero {
        return if k == 0 { one } else { zero };
    }
    if q == zero {
        return if k == c { one } else { zero };
    }
    let cf = T::of(c as f64);
    if k == 0 {
        if c == 0 {
            return one;
        }
        return (cf * (-r).ln_1p()).exp();
    }
    if k == c {
        return (cf * r.ln()).exp();
    }
    let kf = T::of(k as f64);
    let rest = T::of((c - k) as f64);
    let lc = stirlerr::<T>(c) - stirlerr::<T>(k) - stirlerr::<T>(c - k) - bd0(kf, cf * r) - bd0(rest, cf * q);
    let lf = T::of((2.0 * std::f64::consts::PI).ln()) + kf.ln() + (-kf / cf).ln_1p();
    (lc - T::of(0.5) * lf).exp()
}

/// `½ Σ_k |pmf_a(k) - pmf_b(k)|`.
pub fn exact_dtv<T: Real>(a: &BinomialSpec<T>, b: &BinomialSpec<T>) -> Result<T> {
    if a.c != b.c {
        return Err(Error::MismatchedSupport(a.c, b.c));
    }
    let sum = (0..=a.c).fold(T::zero(), |acc, k| {
        acc + (dbinom(k, a.c, a.r) - dbinom(k, b.c, b.r)).abs()
    });
    Ok((sum * T::of(0.5)).min(T::one()))
}

/// `1 - (1 - coin)^count`: the chance that at least one of `count` coins lands 1.
pub fn at_least_one<T: Real>(count: u64, coin: T) -> T {
    if count == 0 || coin == T::zero() {
        return T::zero();
    }
    if coin >= T::one() {
        return T::one();
    }
    -(T::of(count as f64) * (-coin).ln_1p()).exp_m1()
}

/// `λ_j = 1 - (1 - ε/√n)^(2^j)`.
pub fn lambda_j<T: Real>(j: u32, epsilon: T, n: usize) -> T {
    let coin = (epsilon / T::of(n as f64).sqrt()).min(T::one());
    if j >= 64 {
        // 2^j coins: λ is one to working precision unless the coin is zero.
        return if coin == T::zero() { T::zero() } else { -(T::of((j as f64).exp2()) * (-coin).ln_1p()).exp_m1() };
    }
    at_least_one(1u64 << j, coin)
}

/// `τ(x) = x √((c + 2) / (2 r (1 - r)))`.
pub fn roos_tau<T: Real>(x: T, c: u64, r: T) -> Result<T> {
    if !(r > T::zero() && r < T::one()) {
        return Err(Error::DegenerateRate(r.as_f64()));
    }
    let two = T::of(2.0);
    Ok(x * ((T::of(c as f64) + two) / (two * r * (T::one() - r))).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoosBound<T> {
    Bound(T),
    /// `τ ≥ 1` (or a degenerate rate): the bound says nothing.
    Inapplicable,
}

impl<T: Copy> RoosBound<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            RoosBound::Bound(v) => Some(*v),
            RoosBound::Inapplicable => None,
        }
    }
}

/// `K τ/(1-τ)²` with `K = ROOS_CONSTANT`, bounding `d_TV(Bin(c, r), Bin(c, r + x))` when `τ < 1`.
pub fn roos_bound<T: Real>(x: T, c: u64, r: T) -> RoosBound<T> {
    match roos_tau(x, c, r) {
        Ok(tau) => {
            let tau = tau.abs();
            if tau >= T::one() {
                RoosBound::Inapplicable
            } else {
                let gap = T::one() - tau;
                RoosBound::Bound(T::of(ROOS_CONSTANT) * tau / (gap * gap))
            }
        }
        Err(_) => RoosBound::Inapplicable,
    }
}

/// Exact TV of the two product distributions, and the sum of coordinate TVs.
pub fn product_dtv_subadditivity<T: Real>(
    pairs: &[(BinomialSpec<T>, BinomialSpec<T>)],
) -> Result<(T, T)> {
    let mut support = 1usize;
    for (a, b) in pairs {
        if a.c != b.c {
            return Err(Error::MismatchedSupport(a.c, b.c));
        }
        support = support.saturating_mul(a.c as usize + 1);
        if support > MAX_JOINT_SUPPORT {
            return Err(Error::TooLarge {
                what: "joint support",
                limit: MAX_JOINT_SUPPORT,
            });
        }
    }
    let sum = pairs
        .iter()
        .map(|(a, b)| exact_dtv(a, b))
        .try_fold(T::zero(), |acc, d| d.map(|d| acc + d))?;

    let pa: Vec<Vec<T>> = pairs.iter().map(|(a, _)| a.pmf_vec()).collect();
    let pb: Vec<Vec<T>> = pairs.iter().map(|(_, b)| b.pmf_vec()).collect();
    let mut digits = vec![0usize; pairs.len()];
    let mut joint = T::zero();
    for _ in 0..support {
        let (mut ma, mut mb) = (T::one(), T::one());
        for (i, &d) in digits.iter().enumerate() {
            ma = ma * pa[i][d];
            mb = mb * pb[i][d];
        }
        joint = joint + (ma - mb).abs();
        for (i, d) in digits.iter_mut().enumerate() {
            *d += 1;
            if *d < pa[i].len() {
                break;
            }
            *d = 0;
        }
    }
    Ok((joint * T::of(0.5), sum))
}

/// Law of the bin-`j` summary entry: `Bin(c_j, inclusion · λ_j)`.
pub fn summary_distribution(c_j: u64, inclusion: f64, j: u32, params: &Params) -> BinomialSpec<f64> {
    let r = (inclusion * lambda_j(j, params.epsilon, params.n)).clamp(0.0, 1.0);
    BinomialSpec { c: c_j, r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn b(c: u64, r: f64) -> BinomialSpec<f64> {
        BinomialSpec::new(c, r).unwrap()
    }

    /// Direct product formula with exact-integer binomial coefficients (small c only).
    fn naive_pmf(c: u64, r: f64, k: u64) -> f64 {
        let mut coef = 1.0f64;
        for i in 0..k {
            coef = coef * (c - i) as f64 / (i + 1) as f64;
        }
        coef * r.powi(k as i32) * (1.0 - r).powi((c - k) as i32)
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(b(0, 0.3).pmf(0).unwrap(), 1.0);
        assert_abs_diff_eq!(b(2, 0.5).pmf(1).unwrap(), 0.5, epsilon = 1e-15);
        assert!(b(2, 0.5).pmf(3).is_err());
        assert!(BinomialSpec::new(3, 1.5).is_err());
    }

    #[test]
    fn pmf_matches_naive() {
        for c in [1u64, 5, 17, 40, 90] {
            for r in [0.01, 0.2, 0.5, 0.77, 0.999] {
                for k in 0..=c {
                    let want = naive_pmf(c, r, k);
                    let got = b(c, r).pmf(k).unwrap();
                    // Relative accuracy degrades with the magnitude of the log-probability.
                    let tol = 1e-14 * (1.0 + want.ln().abs()) * want;
                    assert!((got - want).abs() <= tol, "c={c} r={r} k={k} got={got:e} want={want:e}");
                }
            }
        }
    }

    #[test]
    fn pmf_matches_statrs_large_c() {
        use statrs::distribution::{Binomial, Discrete};
        for c in [500u64, 4096, 100_000] {
            for r in [1e-4, 0.03, 0.5, 0.9] {
                let oracle = Binomial::new(r, c).unwrap();
                let mode = (c as f64 * r) as u64;
                let spread = (c as f64 * r * (1.0 - r)).sqrt() as u64 * 6 + 4;
                for k in mode.saturating_sub(spread)..=(mode + spread).min(c) {
                    let want = oracle.pmf(k);
                    if want < 1e-300 {
                        continue;
                    }
                    let got = b(c, r).pmf(k).unwrap();
                    assert!((got - want).abs() <= 1e-9 * want, "c={c} r={r} k={k} got={got:e} want={want:e}");
                }
            }
        }
    }

    #[test]
    fn normalization() {
        for c in [1u64, 10, 100, 1000, 5000, 10_000] {
            for r in [1e-6, 0.003, 0.25, 0.5, 0.9, 1.0 - 1e-7] {
                let s: f64 = b(c, r).pmf_vec().iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "c={c} r={r} sum={s}");
            }
        }
    }

    #[test]
    fn f32_engine_agrees_roughly() {
        let d64 = exact_dtv(&b(30, 0.2), &b(30, 0.3)).unwrap();
        let d32 = exact_dtv(
            &BinomialSpec::<f32>::new(30, 0.2).unwrap(),
            &BinomialSpec::<f32>::new(30, 0.3).unwrap(),
        )
        .unwrap();
        assert!((d64 - d32 as f64).abs() < 1e-5);
    }

    #[test]
    fn dtv_examples() {
        assert_eq!(exact_dtv(&b(7, 0.3), &b(7, 0.3)).unwrap(), 0.0);
        assert_eq!(exact_dtv(&b(1, 0.5), &b(1, 0.75)).unwrap(), 0.25);
        for c in [1u64, 4, 50] {
            assert_eq!(exact_dtv(&b(c, 0.0), &b(c, 1.0)).unwrap(), 1.0);
        }
        assert!(matches!(
            exact_dtv(&b(1, 0.5), &b(2, 0.5)),
            Err(Error::MismatchedSupport(1, 2))
        ));
    }

    #[test]
    fn lambda_examples() {
        assert_abs_diff_eq!(lambda_j(0, 0.3, 9), 0.1, epsilon = 1e-16);
        assert_eq!(lambda_j(4, 0.0, 9), 0.0);
        // ε/√n = 0.5 at ε = 1, n = 4.
        assert_abs_diff_eq!(lambda_j(1, 1.0, 4), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(at_least_one(3, 0.5), 0.875, epsilon = 1e-15);
        assert_eq!(at_least_one(0, 0.5), 0.0);
    }

    #[test]
    fn roos_examples() {
        assert_eq!(roos_tau(0.0, 5, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(roos_tau(0.1, 2, 0.5).unwrap(), 0.1 * 8f64.sqrt(), epsilon = 1e-15);
        let t1 = roos_tau(0.013, 9, 0.2).unwrap();
        let t2 = roos_tau(0.026, 9, 0.2).unwrap();
        assert_abs_diff_eq!(t2, 2.0 * t1, epsilon = 1e-15);
        assert!(matches!(roos_tau(0.1, 2, 0.0), Err(Error::DegenerateRate(_))));
        assert!(matches!(roos_tau(0.1, 2, 1.0), Err(Error::DegenerateRate(_))));

        assert_eq!(roos_bound(0.0, 4, 0.3), RoosBound::Bound(0.0));
        assert_eq!(roos_bound(0.5, 10, 0.25), RoosBound::Inapplicable);
        assert_eq!(roos_bound(0.1, 10, 0.0), RoosBound::Inapplicable);
    }

    #[test]
    fn subadditivity_examples() {
        let (joint, sum) = product_dtv_subadditivity(&[(b(3, 0.2), b(3, 0.4))]).unwrap();
        assert_abs_diff_eq!(joint, sum, epsilon = 1e-15);
        let (joint, sum) = product_dtv_subadditivity(&[(b(3, 0.2), b(3, 0.2)), (b(2, 0.7), b(2, 0.7))]).unwrap();
        assert_eq!((joint, sum), (0.0, 0.0));
        let pairs = [(b(3, 0.1), b(3, 0.3)), (b(4, 0.5), b(4, 0.45)), (b(2, 0.9), b(2, 0.6))];
        let (joint, sum) = product_dtv_subadditivity(&pairs).unwrap();
        assert!(joint <= sum + 1e-15);
        assert!(joint > 0.0);
        let big = [(b(1023, 0.1), b(1023, 0.2)), (b(1024, 0.1), b(1024, 0.2))];
        assert!(matches!(product_dtv_subadditivity(&big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn summary_distribution_examples() {
        let params = crate::params::derive_params(16, 0.75, 1.0, crate::params::Mode::DeskScale).unwrap();
        let s = summary_distribution(0, params.p, 2, &params);
        assert_eq!(s.pmf(0).unwrap(), 1.0);
        let s = summary_distribution(5, 0.5, 1, &params);
        // ε/√n = 0.25: λ_1 = 1 - 0.75² = 0.4375.
        assert_abs_diff_eq!(s.r, 0.5 * 0.4375, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn dtv_is_a_metric(c in 1u64..60, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0, r3 in 0.0f64..1.0) {
            let (x, y, z) = (b(c, r1), b(c, r2), b(c, r3));
            let dxy = exact_dtv(&x, &y).unwrap();
            prop_assert!((dxy - exact_dtv(&y, &x).unwrap()).abs() < 1e-14);
            prop_assert!(dxy <= exact_dtv(&x, &z).unwrap() + exact_dtv(&z, &y).unwrap() + 1e-12);
            if r1 != r2 {
                prop_assert!(dxy > 0.0);
            }
        }

        #[test]
        fn dtv_monotone_in_shift(c in 1u64..80, r in 0.0f64..0.9, x1 in 0.0f64..0.1, dx in 0.0f64..0.1) {
            let lo = exact_dtv(&b(c, r), &b(c, r + x1)).unwrap();
            let hi = exact_dtv(&b(c, r), &b(c, (r + x1 + dx).min(1.0))).unwrap();
            prop_assert!(hi + 1e-12 >= lo);
        }
    }
}
