//! Derived parameters of the hard-instance construction.
//!
//! All logarithms are base 2. Set sizes are rounded as follows:
//! `m = round(2δn + δ√n·log n)` clamped to `[1, n-1]`, `k = ⌊αn⌋`,
//! `τ = ⌈c_α·5·log(n/ε)⌉` and `L = max(0, ⌈log(2s)⌉)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Upper clamp applied to `q` in desk-scale mode.
pub const DESK_Q_CAP: f64 = 1.0 - 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every asymptotic side condition is enforced.
    Strict,
    /// Small-n experiments: `q` is clamped below one and the ε range is not checked.
    DeskScale,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Strict => f.write_str("strict"),
            Mode::DeskScale => f.write_str("desk_scale"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "strict" => Ok(Mode::Strict),
            "desk_scale" | "desk" => Ok(Mode::DeskScale),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// Every numeric parameter of the construction.
///
/// Build with [`derive_params`] (or [`Params::builder`] for a desk-scale `k`
/// override); fields are public for reading but the record is only valid when
/// produced by the derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub m: usize,
    pub t: usize,
    pub tau: usize,
    pub c_alpha: f64,
    pub s: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub mode: Mode,
    /// Set when a desk-scale deviation (q clamp, ε range, k override) was applied.
    pub warning: bool,
}

/// Inputs to [`derive_params`] plus the optional desk-scale `k` override.
#[derive(Debug, Clone, Copy)]
pub struct ParamsBuilder {
    n: usize,
    alpha: f64,
    epsilon: f64,
    mode: Mode,
    k: Option<usize>,
}

impl ParamsBuilder {
    pub fn k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn build(self) -> Result<Params> {
        derive_with_k(self.n, self.alpha, self.epsilon, self.mode, self.k)
    }
}

impl Params {
    pub fn builder(n: usize, alpha: f64, epsilon: f64, mode: Mode) -> ParamsBuilder {
        ParamsBuilder {
            n,
            alpha,
            epsilon,
            mode,
            k: None,
        }
    }

    /// Per-coin success probability `ε/√n`, capped at one.
    pub fn coin(&self) -> f64 {
        coin_probability(self.epsilon, self.n)
    }

    /// Serializes to the flat `key = value` config format.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("n", self.n.to_string());
        line("alpha", fmt_f64(self.alpha));
        line("epsilon", fmt_f64(self.epsilon));
        line("delta", fmt_f64(self.delta));
        line("k", self.k.to_string());
        line("p", fmt_f64(self.p));
        line("q", fmt_f64(self.q));
        line("m", self.m.to_string());
        line("t", self.t.to_string());
        line("tau", self.tau.to_string());
        line("c_alpha", fmt_f64(self.c_alpha));
        line("s", fmt_f64(self.s));
        line("L", self.l.to_string());
        line("mode", self.mode.to_string());
        line("warning", self.warning.to_string());
        out
    }

    /// Parses the `key = value` format.
    ///
    /// Only `n`, `alpha`, `epsilon` and `mode` are required; `k` is honoured as an
    /// override. Any derived key that is present must agree with the re-derived
    /// value, otherwise the file is rejected.
    pub fn from_config_str(text: &str) -> Result<Params> {
        let kv = parse_kv(text)?;
        Params::from_kv(&kv)
    }

    pub fn from_kv(kv: &[(String, String)]) -> Result<Params> {
        let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let need = |key: &str| get(key).ok_or_else(|| Error::Parse(format!("missing key `{key}`")));
        let n: usize = parse_num(need("n")?, "n")?;
        let alpha: f64 = parse_num(need("alpha")?, "alpha")?;
        let epsilon: f64 = parse_num(need("epsilon")?, "epsilon")?;
        let mode: Mode = get("mode").unwrap_or("strict").parse()?;
        let k_given: Option<usize> = get("k").map(|v| parse_num(v, "k")).transpose()?;

        // A `k` equal to the default is not an override.
        let default_k = (alpha * n as f64).floor() as usize;
        let k_override = k_given.filter(|&k| k != default_k);
        let params = derive_with_k(n, alpha, epsilon, mode, k_override)?;

        let check_f = |key: &str, value: f64| -> Result<()> {
            if let Some(v) = get(key) {
                let given: f64 = parse_num(v, key)?;
                if (given - value).abs() > 1e-9 * value.abs().max(1.0) {
                    return Err(Error::Parse(format!(
                        "`{key}` = {given} disagrees with derived value {value}"
                    )));
                }
            }
            Ok(())
        };
        let check_u = |key: &str, value: usize| -> Result<()> {
            if let Some(v) = get(key) {
                let given: usize = parse_num(v, key)?;
                if given != value {
                    return Err(Error::Parse(format!(
                        "`{key}` = {given} disagrees with derived value {value}"
                    )));
                }
            }
            Ok(())
        };
        check_f("delta", params.delta)?;
        check_f("p", params.p)?;
        check_f("q", params.q)?;
        check_u("m", params.m)?;
        check_u("t", params.t)?;
        check_u("tau", params.tau)?;
        check_f("c_alpha", params.c_alpha)?;
        check_f("s", params.s)?;
        check_u("L", params.l)?;
        Ok(params)
    }

    pub fn load(path: &std::path::Path) -> Result<Params> {
        Params::from_config_str(&std::fs::read_to_string(path)?)
    }
}

/// `ε/√n` clamped to `[0, 1]`.
pub fn coin_probability(epsilon: f64, n: usize) -> f64 {
    (epsilon / (n as f64).sqrt()).clamp(0.0, 1.0)
}

/// Derives the full parameter record.
pub fn derive_params(n: usize, alpha: f64, epsilon: f64, mode: Mode) -> Result<Params> {
    derive_with_k(n, alpha, epsilon, mode, None)
}

fn derive_with_k(
    n: usize,
    alpha: f64,
    epsilon: f64,
    mode: Mode,
    k_override: Option<usize>,
) -> Result<Params> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("n = {n} must be at least 4")));
    }
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must lie in (0.5, 1)")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} must lie in (0, 1]")));
    }

    let nf = n as f64;
    let log_n = nf.log2();
    let sqrt_n = nf.sqrt();
    let delta = 1.0 - alpha;
    let p = 0.5;
    let q_raw = 0.5 + log_n / sqrt_n;

    let m_real = 2.0 * delta * nf + delta * sqrt_n * log_n;
    let m = (m_real.round().max(1.0) as usize).min(n - 1);
    let t = n - m;

    let c_alpha = -1.0 / (1.5 - alpha).log2();
    let log_n_eps = (nf / epsilon).log2();
    let tau = (c_alpha * 5.0 * log_n_eps).ceil() as usize;
    let s = nf.powf(1.5) / (epsilon * log_n.powi(3) * log_n_eps.powi(2));
    let l = (2.0 * s).log2().ceil().max(0.0) as usize;
    let default_k = (alpha * nf).floor() as usize;

    let mut warning = false;
    let (q, k) = match mode {
        Mode::Strict => {
            if q_raw >= 1.0 {
                return Err(Error::StrictModeViolation(format!("q = {q_raw} is not below 1")));
            }
            let lo = 2f64.powf(-(2.0 * alpha - 1.0) * nf / 2.0);
            if epsilon < lo || epsilon > 1.0 / 6.0 {
                return Err(Error::StrictModeViolation(format!(
                    "epsilon = {epsilon} outside [{lo}, 1/6]"
                )));
            }
            if let Some(k) = k_override {
                if k != default_k {
                    return Err(Error::StrictModeViolation(format!(
                        "k override {k} differs from floor(alpha n) = {default_k}"
                    )));
                }
            }
            (q_raw, default_k)
        }
        Mode::DeskScale => {
            let q = q_raw.min(DESK_Q_CAP);
            let eps_ok = {
                let lo = 2f64.powf(-(2.0 * alpha - 1.0) * nf / 2.0);
                epsilon >= lo && epsilon <= 1.0 / 6.0
            };
            let k = match k_override {
                Some(k) if k == 0 || k > n - 1 => {
                    return Err(Error::InvalidInput(format!("k override {k} outside [1, n-1]")))
                }
                Some(k) => k,
                None => default_k,
            };
            warning = q != q_raw || !eps_ok || k != default_k;
            (q, k)
        }
    };

    if t < 1 || m < 1 {
        return Err(Error::StrictModeViolation(format!("degenerate split m = {m}, t = {t}")));
    }

    Ok(Params {
        n,
        alpha,
        epsilon,
        delta,
        k,
        p,
        q,
        m,
        t,
        tau,
        c_alpha,
        s,
        l,
        mode,
        warning,
    })
}

/// Splits `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_num<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`")))
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips.
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn strict_n4096() {
        let p = derive_params(4096, 0.75, 0.1, Mode::Strict).unwrap();
        assert_eq!(p.q, 0.6875);
        assert_eq!(p.delta, 0.25);
        assert_eq!(p.k, 3072);
        // 2·0.25·4096 + 0.25·64·12 = 2240
        assert_eq!(p.m, 2240);
        assert_eq!(p.m + p.t, p.n);
        assert!(!p.warning);
    }

    #[test]
    fn strict_small_n_rejected() {
        let err = derive_params(64, 0.75, 0.1, Mode::Strict).unwrap_err();
        assert!(matches!(err, Error::StrictModeViolation(_)));
    }

    #[test]
    fn desk_small_n_clamps() {
        let p = derive_params(64, 0.75, 0.1, Mode::DeskScale).unwrap();
        assert!(p.q < 1.0);
        assert_eq!(p.q, DESK_Q_CAP);
        assert!(p.warning);
    }

    #[test]
    fn bad_domain() {
        assert!(matches!(
            derive_params(64, 0.5, 0.1, Mode::DeskScale),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            derive_params(64, 0.75, 0.0, Mode::DeskScale),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            derive_params(3, 0.75, 0.1, Mode::DeskScale),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            derive_params(4096, 0.75, 0.2, Mode::Strict),
            Err(Error::StrictModeViolation(_))
        ));
    }

    #[test]
    fn c_alpha_halves() {
        for alpha in [0.51, 0.6, 0.75, 0.9, 0.99] {
            let p = derive_params(4096, alpha, 0.1, Mode::Strict).unwrap();
            assert!(p.c_alpha > 0.0);
            assert_relative_eq!((1.5 - alpha).powf(p.c_alpha), 0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn s_decreasing_in_epsilon() {
        let grid: Vec<f64> = (1..=60).map(|i| i as f64 / 360.0).collect();
        let s: Vec<f64> = grid
            .iter()
            .map(|&e| derive_params(4096, 0.75, e, Mode::Strict).unwrap().s)
            .collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn k_override_rules() {
        let p = Params::builder(10, 0.75, 0.2, Mode::DeskScale).k(6).build().unwrap();
        assert_eq!(p.k, 6);
        assert!(p.warning);
        assert!(Params::builder(10, 0.75, 0.2, Mode::DeskScale).k(10).build().is_err());
        assert!(Params::builder(4096, 0.75, 0.1, Mode::Strict).k(3000).build().is_err());
    }

    #[test]
    fn config_round_trip() {
        let p = Params::builder(12, 0.7, 0.3, Mode::DeskScale).k(5).build().unwrap();
        let text = p.to_config_string();
        assert!(text.contains("L = "));
        assert_eq!(Params::from_config_str(&text).unwrap(), p);
    }

    #[test]
    fn config_rejects_tampered_derived_value() {
        let p = derive_params(4096, 0.75, 0.1, Mode::Strict).unwrap();
        let text = p.to_config_string().replace("m = 2240", "m = 2000");
        assert!(Params::from_config_str(&text).is_err());
    }

    #[test]
    fn config_minimal() {
        let p = Params::from_config_str("n = 10\nalpha = 0.75\nepsilon = 0.5 # desk\nmode = desk_scale\n")
            .unwrap();
        assert_eq!(p.n, 10);
        assert_eq!(p.m, 8);
        assert_eq!(p.t, 2);
        assert_eq!(p.k, 7);
    }

    proptest::proptest! {
        #[test]
        fn desk_outputs_partition_n(n in 2usize..5000, alpha in 0.51f64..0.99, eps in 0.001f64..1.0) {
            let a = derive_params(n, alpha, eps, Mode::DeskScale).unwrap();
            proptest::prop_assert_eq!(a.m + a.t, n);
            proptest::prop_assert!(a.m >= 1 && a.t >= 1);
            let b = derive_params(n, alpha, eps, Mode::DeskScale).unwrap();
            proptest::prop_assert_eq!(a.to_config_string(), b.to_config_string());
        }

        #[test]
        fn strict_outputs_partition_n(log_n in 10u32..24, eps in 0.001f64..0.16) {
            let n = 1usize << log_n;
            if let Ok(a) = derive_params(n, 0.75, eps, Mode::Strict) {
                proptest::prop_assert_eq!(a.m + a.t, n);
                proptest::prop_assert_eq!(&a, &derive_params(n, 0.75, eps, Mode::Strict).unwrap());
            }
        }
    }
}
