//! Polynomial Euler products
//!
//! ```text
//! Z_E(s) = prod_p prod_l (1 - alpha_l(p) p^(-<a_l, s>))^(-1)
//! ```
//!
//! with their Dirichlet coefficients, the embedding into Shintani zeta
//! functions, and the Lévy data of the Riemann and Hurwitz(1/2) zeta
//! distributions.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::arith::{chi_minus_4, factorize, sieve_primes, AlphaRule, PrimeTable};
use crate::coefficients::{AxisCharacter, AxisFactor, CoefficientSpec};
use crate::error::{Error, Result, Violation};
use crate::shintani::{ComplexPoint, EvalResult, Method, ShintaniConfig};
use crate::summation::{ComplexSum, NeumaierSum};

#[derive(Debug, Clone, PartialEq)]
pub struct EulerConfig {
    pub d: usize,
    pub m: usize,
    pub alpha: Vec<AlphaRule>,
    /// `m` vectors of length `d`.
    pub a: Vec<Vec<f64>>,
    /// Allows complex `|alpha| <= 1`; such products are evaluated but not embedded.
    pub complex_mode: bool,
}

impl EulerConfig {
    /// One-dimensional product with the given per-prime rules and `a_l = 1`.
    pub fn one_dimensional(alpha: Vec<AlphaRule>) -> Self {
        let m = alpha.len();
        Self {
            d: 1,
            m,
            alpha,
            a: vec![vec![1.0]; m],
            complex_mode: false,
        }
    }

    pub fn riemann() -> Self {
        Self::one_dimensional(vec![AlphaRule::principal()])
    }

    /// `zeta_{Q(i)}(s) = zeta(s) L(s, chi_-4)`.
    pub fn dedekind_gaussian() -> Self {
        Self::one_dimensional(vec![AlphaRule::principal(), AlphaRule::chi_minus_4()])
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.d == 0 {
            v.push(Violation::new("d", "d must be a positive integer"));
        }
        if self.m == 0 {
            v.push(Violation::new("m", "m must be a positive integer"));
        }
        if self.alpha.len() != self.m {
            v.push(Violation::new(
                "alpha",
                format!("expected m = {} rules, got {}", self.m, self.alpha.len()),
            ));
        }
        for (l, rule) in self.alpha.iter().enumerate() {
            let key = format!("alpha[{l}]");
            v.extend(rule.check(&key));
            if !self.complex_mode && !rule.is_real() {
                v.push(Violation::new(
                    key,
                    "alpha values must be real in [-1, 1] unless complex_mode is set",
                ));
            }
        }
        if self.a.len() != self.m {
            v.push(Violation::new(
                "a",
                format!("expected m = {} vectors, got {}", self.m, self.a.len()),
            ));
        }
        for (l, al) in self.a.iter().enumerate() {
            if al.len() != self.d {
                v.push(Violation::new(
                    format!("a[{l}]"),
                    format!("a vectors must have length d = {}", self.d),
                ));
            }
            if al.iter().any(|x| !x.is_finite()) {
                v.push(Violation::new(format!("a[{l}]"), "a entries must be finite"));
            }
        }
        v
    }

    fn validated(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    fn pairings(&self, s: &ComplexPoint) -> Result<Vec<Complex64>> {
        for (what, len) in [("s.re", s.re.len()), ("s.im", s.im.len())] {
            if len != self.d {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: self.d,
                    got: len,
                });
            }
        }
        Ok(self
            .a
            .iter()
            .map(|al| {
                let re: f64 = al.iter().zip(&s.re).map(|(a, b)| a * b).sum();
                let im: f64 = al.iter().zip(&s.im).map(|(a, b)| a * b).sum();
                Complex64::new(re, im)
            })
            .collect())
    }
}

/// Which coefficient to compute: one factor's `A_l(n)` or the full `A(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Single(usize),
    All,
}

/// Dirichlet coefficients with a per-`(p, nu)` memo of the local factors.
#[derive(Debug)]
pub struct CoefficientEngine<'a> {
    cfg: &'a EulerConfig,
    memo: HashMap<(u64, u32), Complex64>,
}

impl<'a> CoefficientEngine<'a> {
    pub fn new(cfg: &'a EulerConfig) -> Result<Self> {
        cfg.validated()?;
        Ok(Self {
            cfg,
            memo: HashMap::new(),
        })
    }

    pub fn coefficient(&mut self, which: Component, n: u64) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::param("n", "n must be a positive integer"));
        }
        let factors = factorize(n);
        match which {
            Component::Single(l) => {
                let rule = self.cfg.alpha.get(l).ok_or_else(|| {
                    Error::param("l", format!("index {l} out of range for m = {}", self.cfg.m))
                })?;
                Ok(factors.iter().map(|&(p, k)| rule.at(p).powu(k)).product())
            }
            Component::All => {
                let mut acc = Complex64::new(1.0, 0.0);
                for (p, nu) in factors {
                    let local = match self.memo.get(&(p, nu)) {
                        Some(v) => *v,
                        None => {
                            let alphas: Vec<Complex64> = self.cfg.alpha.iter().map(|a| a.at(p)).collect();
                            let v = composition_sum(&alphas, nu);
                            self.memo.insert((p, nu), v);
                            v
                        }
                    };
                    acc *= local;
                }
                Ok(acc)
            }
        }
    }
}

/// `sum over k_1 + .. + k_m = nu of prod_l alpha_l^k_l`, enumerated by stars and bars.
fn composition_sum(alphas: &[Complex64], nu: u32) -> Complex64 {
    let m = alphas.len();
    let mut k = vec![0u32; m];
    k[0] = nu;
    let mut total = ComplexSum::new();
    loop {
        let term: Complex64 = alphas.iter().zip(&k).map(|(a, &e)| a.powu(e)).product();
        total.add(term);
        if m == 1 {
            break;
        }
        let Some(j) = (0..m - 1).rev().find(|&j| k[j] > 0) else {
            break;
        };
        k[j] -= 1;
        let tail = k[m - 1];
        k[m - 1] = 0;
        k[j + 1] = tail + 1;
    }
    total.value()
}

pub fn dirichlet_coefficient(cfg: &EulerConfig, which: Component, n: u64) -> Result<Complex64> {
    CoefficientEngine::new(cfg)?.coefficient(which, n)
}

/// Product over the primes of `primes`, with a bound on the omitted primes.
pub fn evaluate_euler(cfg: &EulerConfig, s: &ComplexPoint, primes: &PrimeTable) -> Result<EvalResult> {
    cfg.validated()?;
    let pair = cfg.pairings(s)?;
    let min = pair.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    if !(min > 1.0) {
        return Err(Error::OutsideRegion(format!(
            "min_l Re<a_l, s> = {min} must exceed 1"
        )));
    }
    if primes.is_empty() {
        return Err(Error::param("primes", "prime table is empty"));
    }
    let mut log = ComplexSum::new();
    let mut spread = 0.0;
    for &p in primes.primes() {
        let lp = (p as f64).ln();
        for (rule, s_l) in cfg.alpha.iter().zip(&pair) {
            let x = rule.at(p) * (-s_l * lp).exp();
            // |x| < 1/2, so the principal logarithm is the right branch.
            let term = -(Complex64::new(1.0, 0.0) - x).ln();
            spread += term.norm() * (4.0 + (s_l * lp).norm());
            log.add(term);
        }
    }
    let value = log.value().exp();
    // |prod_{p > P} (1 - x_p)^-1 - 1| <= exp(sum |x_p| / (1 - |x_p|)) - 1
    let big_p = primes.limit() as f64;
    let tail_log: f64 = pair
        .iter()
        .map(|s_l| {
            let sig = s_l.re;
            big_p.powf(1.0 - sig) / (sig - 1.0) / (1.0 - (big_p + 1.0).powf(-sig))
        })
        .sum();
    Ok(EvalResult {
        value,
        tail_bound: value.norm() * tail_log.exp_m1(),
        rounding: f64::EPSILON * value.norm() * (spread + 4.0 + log.value().norm()),
        shells_used: primes.limit(),
        points: primes.len() as u64,
        certified: true,
        method: Method::EulerProduct,
    })
}

/// The product as a Shintani series over `r = m` variables:
/// `theta(n) = prod_l A_l(n_l + 1)` with `lambda = I`, `u = 1`, `c_l = a_l`.
pub fn shintani_from_euler(cfg: &EulerConfig) -> Result<ShintaniConfig> {
    cfg.validated()?;
    if cfg.complex_mode {
        return Err(Error::param(
            "complex_mode",
            "complex-mode products lie outside the embeddable class",
        ));
    }
    let m = cfg.m;
    let factors = cfg
        .alpha
        .iter()
        .map(|rule| AxisFactor {
            character: AxisCharacter::Multiplicative { alpha: rule.clone() },
            offset: 1,
        })
        .collect();
    Ok(ShintaniConfig {
        d: cfg.d,
        m,
        r: m,
        lambda: (0..m)
            .map(|l| (0..m).map(|j| if j == l { 1.0 } else { 0.0 }).collect())
            .collect(),
        u: vec![1.0; m],
        c: cfg.a.clone(),
        theta: CoefficientSpec::character_product(factors),
    })
}

/// A truncated log characteristic function with a bound on what was dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyLogCf {
    pub value: Complex64,
    pub tail_bound: f64,
}

fn levy_sum(sigma: f64, t: f64, prime_cutoff: u64, power_cutoff: u32, skip_two: bool) -> Result<LevyLogCf> {
    if !(sigma > 1.0) {
        return Err(Error::param("sigma", "sigma must exceed 1"));
    }
    if power_cutoff == 0 {
        return Err(Error::param("power_cutoff", "power cutoff must be at least 1"));
    }
    let table = sieve_primes(prime_cutoff)?;
    let mut acc = ComplexSum::new();
    let mut tail = NeumaierSum::new();
    for &p in table.primes() {
        if skip_two && p == 2 {
            continue;
        }
        let lp = (p as f64).ln();
        let q = (-sigma * lp).exp();
        let mut qr = 1.0;
        for r in 1..=power_cutoff {
            qr *= q;
            let rf = r as f64;
            let phase = Complex64::from_polar(1.0, -rf * t * lp);
            acc.add(qr / rf * (phase - 1.0));
        }
        // sum_{r > R} 2 q^r / r <= 2 q^(R+1) / ((R + 1)(1 - q))
        let rf = (power_cutoff + 1) as f64;
        tail.add(2.0 * qr * q / (rf * (1.0 - q)));
    }
    // sum_{p > P} 2 p^-sigma / (1 - p^-sigma) <= 2 P^(1-sigma) / ((sigma - 1)(1 - (P+1)^-sigma))
    let big_p = prime_cutoff as f64;
    tail.add(2.0 * big_p.powf(1.0 - sigma) / (sigma - 1.0) / (1.0 - (big_p + 1.0).powf(-sigma)));
    Ok(LevyLogCf {
        value: acc.value(),
        tail_bound: tail.value(),
    })
}

/// `sum_{p <= P} sum_{r <= R} p^(-r sigma)/r (e^(-i r t log p) - 1)`.
pub fn riemann_levy_logcf(sigma: f64, t: f64, prime_cutoff: u64, power_cutoff: u32) -> Result<LevyLogCf> {
    levy_sum(sigma, t, prime_cutoff, power_cutoff, false)
}

/// The same sum over odd primes only.
///
/// Since `zeta(s, 1/2) = 2^s prod_{p odd} (1 - p^-s)^-1`, the characteristic
/// function of the Hurwitz(1/2) distribution is `exp(hurwitz_half_drift(t) + this)`.
pub fn hurwitz_half_levy_logcf(sigma: f64, t: f64, prime_cutoff: u64, power_cutoff: u32) -> Result<LevyLogCf> {
    levy_sum(sigma, t, prime_cutoff, power_cutoff, true)
}

/// `i t log 2`, the deterministic part contributed by the factor `2^s`.
pub fn hurwitz_half_drift(t: f64) -> Complex64 {
    Complex64::new(0.0, t * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevyKind {
    Riemann,
    HurwitzHalf,
}

/// A finite measure on `R` given by its atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    /// `(location, mass)`, locations ascending.
    pub atoms: Vec<(f64, f64)>,
    pub prime_cutoff: u64,
    pub power_cutoff: u32,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).collect::<NeumaierSum>().value()
    }
}

/// Atoms `p^(-r sigma)/r` at `-r log p`, matching the phase `e^(-i r t log p)`.
pub fn levy_measure(kind: LevyKind, sigma: f64, prime_cutoff: u64, power_cutoff: u32) -> Result<DiscreteMeasure> {
    if !(sigma > 1.0) {
        return Err(Error::param("sigma", "sigma must exceed 1"));
    }
    let table = sieve_primes(prime_cutoff)?;
    let mut atoms = Vec::new();
    for &p in table.primes() {
        if kind == LevyKind::HurwitzHalf && p == 2 {
            continue;
        }
        let lp = (p as f64).ln();
        for r in 1..=power_cutoff {
            let rf = r as f64;
            atoms.push((-rf * lp, (-rf * sigma * lp).exp() / rf));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DiscreteMeasure {
        atoms,
        prime_cutoff,
        power_cutoff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DedekindMethod {
    DivisorSum,
    LatticeCount,
}

/// Coefficient of `zeta_{Q(i)}`: `sum_{d | n} chi_-4(d)`, or a quarter of the
/// number of representations `n = m_1^2 + m_2^2`.
pub fn dedekind_coefficient(n: u64, method: DedekindMethod) -> Result<u64> {
    if n == 0 {
        return Err(Error::param("n", "n must be a positive integer"));
    }
    match method {
        DedekindMethod::DivisorSum => {
            let mut total: i64 = 0;
            let mut d = 1;
            while d * d <= n {
                if n.is_multiple_of(d) {
                    total += chi_minus_4(d);
                    if d * d != n {
                        total += chi_minus_4(n / d);
                    }
                }
                d += 1;
            }
            Ok(total as u64)
        }
        DedekindMethod::LatticeCount => {
            let root = n.isqrt();
            let mut count = 0u64;
            for m1 in 0..=root {
                let rest = n - m1 * m1;
                let m2 = rest.isqrt();
                if m2 * m2 == rest {
                    // sign choices for (m1, m2), with zero counted once
                    count += if m1 == 0 { 1 } else { 2 } * if m2 == 0 { 1 } else { 2 };
                }
            }
            Ok(count / 4)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shintani::{evaluate, make_special, SpecialKind};
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn real(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn coefficient_examples() {
        let riemann = EulerConfig::riemann();
        for n in 1..50 {
            assert_eq!(dirichlet_coefficient(&riemann, Component::All, n).unwrap(), real(1.0));
        }
        let chi = EulerConfig::one_dimensional(vec![AlphaRule::chi_minus_4()]);
        assert_eq!(dirichlet_coefficient(&chi, Component::All, 9).unwrap(), real(1.0));
        let d3 = EulerConfig::one_dimensional(vec![AlphaRule::principal(); 3]);
        assert_eq!(dirichlet_coefficient(&d3, Component::All, 4).unwrap(), real(6.0));
        assert!(dirichlet_coefficient(&d3, Component::All, 0).is_err());
    }

    #[test]
    fn single_component_is_completely_multiplicative() {
        let cfg = EulerConfig::dedekind_gaussian();
        for n in 1..200u64 {
            let a = dirichlet_coefficient(&cfg, Component::Single(1), n).unwrap();
            assert_eq!(a.re, chi_minus_4(n) as f64);
        }
    }

    #[test]
    fn dedekind_examples() {
        for method in [DedekindMethod::DivisorSum, DedekindMethod::LatticeCount] {
            assert_eq!(dedekind_coefficient(5, method).unwrap(), 2);
            assert_eq!(dedekind_coefficient(3, method).unwrap(), 0);
            assert_eq!(dedekind_coefficient(1, method).unwrap(), 1);
            assert!(dedekind_coefficient(0, method).is_err());
        }
    }

    #[test]
    fn riemann_product_at_two() {
        let table = sieve_primes(100_000).unwrap();
        let r = evaluate_euler(&EulerConfig::riemann(), &ComplexPoint::real(vec![2.0]), &table).unwrap();
        assert!((r.value.re - PI * PI / 6.0).abs() < 1e-4);
        assert!((r.value.re - PI * PI / 6.0).abs() <= r.tail_bound);
    }

    #[test]
    fn finer_table_stays_within_coarse_bound() {
        let s = ComplexPoint::real(vec![3.0]);
        let coarse = evaluate_euler(&EulerConfig::riemann(), &s, &sieve_primes(1000).unwrap()).unwrap();
        let fine = evaluate_euler(&EulerConfig::riemann(), &s, &sieve_primes(10_000).unwrap()).unwrap();
        assert!((coarse.value - fine.value).norm() <= coarse.tail_bound);
    }

    #[test]
    fn dedekind_product_at_two() {
        // Oracle: zeta(2) times an alternating sum for L(2, chi_-4), whose error
        // is below the first omitted term.
        let mut catalan = 0.0;
        for k in (0..2_000_000u64).rev() {
            let term = 1.0 / ((2 * k + 1) as f64).powi(2);
            catalan += if k % 2 == 0 { term } else { -term };
        }
        let oracle = PI * PI / 6.0 * catalan;
        let table = sieve_primes(100_000).unwrap();
        let r = evaluate_euler(&EulerConfig::dedekind_gaussian(), &ComplexPoint::real(vec![2.0]), &table)
            .unwrap();
        assert!((r.value.re - oracle).abs() <= r.tail_bound + 1e-12);
        assert!((r.value.re - 1.5067).abs() < 1e-4);
    }

    #[test]
    fn liouville_series_matches_product() {
        let cfg = EulerConfig::one_dimensional(vec![AlphaRule::Constant(real(-1.0))]);
        let sh = shintani_from_euler(&cfg).unwrap();
        let s = ComplexPoint::real(vec![3.0]);
        let series = evaluate(&sh, &s, 1e-9, 1_000_000).unwrap();
        let product = evaluate_euler(&cfg, &s, &sieve_primes(10_000).unwrap()).unwrap();
        assert!((series.value - product.value).norm() <= series.tail_bound + product.tail_bound);
        // zeta(2s)/zeta(s) at s = 3
        let z6 = PI.powi(6) / 945.0;
        let z3 = 1.202_056_903_159_594_2;
        assert!((series.value.re - z6 / z3).abs() < 1e-8);
        // The embedded coefficients are the Liouville signs.
        let mut engine = CoefficientEngine::new(&cfg).unwrap();
        for n in 1..100u64 {
            let omega: u32 = factorize(n).iter().map(|f| f.1).sum();
            let want = if omega % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(engine.coefficient(Component::All, n).unwrap().re, want);
            assert_eq!(sh.theta.value(&[n - 1]).re, want);
        }
    }

    #[test]
    fn riemann_embedding_is_constant_one() {
        let sh = shintani_from_euler(&EulerConfig::riemann()).unwrap();
        let z = make_special(&SpecialKind::Riemann).unwrap();
        assert_eq!((sh.d, sh.m, sh.r), (z.d, z.m, z.r));
        for n in 0..100 {
            assert_eq!(sh.theta.value(&[n]), real(1.0));
        }
    }

    #[test]
    fn complex_mode_is_not_embedded() {
        let mut values = BTreeMap::new();
        values.insert(3, Complex64::new(0.0, 1.0));
        let cfg = EulerConfig {
            complex_mode: true,
            ..EulerConfig::one_dimensional(vec![AlphaRule::Table {
                values,
                default: real(1.0),
            }])
        };
        assert!(evaluate_euler(&cfg, &ComplexPoint::real(vec![2.0]), &sieve_primes(100).unwrap()).is_ok());
        assert!(shintani_from_euler(&cfg).is_err());
        let real_only = EulerConfig {
            complex_mode: false,
            ..cfg
        };
        assert!(!real_only.validate().is_empty());
    }

    #[test]
    fn levy_basics() {
        assert_eq!(riemann_levy_logcf(2.0, 0.0, 100, 5).unwrap().value, real(0.0));
        assert!(riemann_levy_logcf(1.0, 1.0, 100, 5).is_err());
        let full = riemann_levy_logcf(2.0, 1.3, 1000, 10).unwrap().value;
        let odd = hurwitz_half_levy_logcf(2.0, 1.3, 1000, 10).unwrap().value;
        let mut two = Complex64::new(0.0, 0.0);
        for r in 1..=10 {
            let rf = r as f64;
            two += 2f64.powf(-2.0 * rf) / rf * (Complex64::from_polar(1.0, -rf * 1.3 * 2f64.ln()) - 1.0);
        }
        assert!((full - two - odd).norm() < 1e-15);
    }

    #[test]
    fn levy_masses_positive_and_increasing_in_cutoff() {
        let small = levy_measure(LevyKind::Riemann, 2.0, 100, 20).unwrap();
        let big = levy_measure(LevyKind::Riemann, 2.0, 1000, 20).unwrap();
        assert!(small.atoms.iter().all(|a| a.1 > 0.0));
        assert!(big.total_mass() > small.total_mass());
        let locs: Vec<f64> = big.atoms.iter().map(|a| a.0).collect();
        assert!(locs.windows(2).all(|w| w[0] < w[1]));
    }
}
