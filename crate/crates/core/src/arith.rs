//! Primes, factorizations and the per-prime coefficient rules shared by the
//! Euler product and coefficient modules.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// All primes up to `limit`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }
}

/// Sieve of Eratosthenes over `[2, limit]`.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::param("limit", "prime sieve limit must be at least 2"));
    }
    let n = usize::try_from(limit).map_err(|_| Error::param("limit", "sieve limit too large"))?;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i.saturating_mul(i);
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    Ok(PrimeTable { limit, primes })
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Largest `k` with `p^k | n`.
pub fn prime_exponent(n: u64, p: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::param("n", "n must be a positive integer"));
    }
    if !is_prime(p) {
        return Err(Error::param("p", format!("{p} is not prime")));
    }
    let mut k = 0;
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
        k += 1;
    }
    Ok(k)
}

/// Prime factorization by trial division, as `(p, exponent)` pairs ascending in `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut k = 0;
            while n.is_multiple_of(p) {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Smallest-prime-factor table for `0..=limit`; entries 0 and 1 are 0.
pub fn smallest_prime_factors(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    for i in 2..=limit {
        if spf[i] != 0 {
            continue;
        }
        let mut j = i;
        while j <= limit {
            if spf[j] == 0 {
                spf[j] = i as u32;
            }
            j += i;
        }
    }
    spf
}

/// The nonprincipal character modulo 4: 1, 0, -1, 0 on residues 1, 2, 3, 0.
pub fn chi_minus_4(n: u64) -> i64 {
    match n % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// Rule giving a per-prime value `alpha(p)`.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaRule {
    Constant(Complex64),
    /// `alpha(p) = values[p mod modulus]`, e.g. a Dirichlet character.
    Character {
        modulus: u64,
        values: Vec<Complex64>,
    },
    /// Explicit values for listed primes, `default` elsewhere.
    Table {
        values: BTreeMap<u64, Complex64>,
        default: Complex64,
    },
}

impl AlphaRule {
    pub fn principal() -> Self {
        AlphaRule::Constant(Complex64::new(1.0, 0.0))
    }

    pub fn chi_minus_4() -> Self {
        AlphaRule::Character {
            modulus: 4,
            values: [0.0, 1.0, 0.0, -1.0]
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        }
    }

    pub fn at(&self, p: u64) -> Complex64 {
        match self {
            AlphaRule::Constant(v) => *v,
            AlphaRule::Character { modulus, values } => values[(p % modulus) as usize],
            AlphaRule::Table { values, default } => values.get(&p).copied().unwrap_or(*default),
        }
    }

    /// Every value the rule can take, for sign and magnitude checks.
    pub fn value_set(&self) -> Vec<Complex64> {
        match self {
            AlphaRule::Constant(v) => vec![*v],
            AlphaRule::Character { values, .. } => values.clone(),
            AlphaRule::Table { values, default } => {
                values.values().copied().chain(std::iter::once(*default)).collect()
            }
        }
    }

    pub fn is_real(&self) -> bool {
        self.value_set().iter().all(|v| v.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.value_set().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn check(&self, key: &str) -> Vec<crate::error::Violation> {
        use crate::error::Violation;
        let mut out = Vec::new();
        match self {
            AlphaRule::Character { modulus, values } => {
                if *modulus == 0 {
                    out.push(Violation::new(key, "character modulus must be positive"));
                } else if values.len() as u64 != *modulus {
                    out.push(Violation::new(
                        key,
                        format!("character needs {modulus} values, got {}", values.len()),
                    ));
                }
            }
            AlphaRule::Table { values, .. } => {
                for p in values.keys() {
                    if !is_prime(*p) {
                        out.push(Violation::new(key, format!("table key {p} is not prime")));
                    }
                }
            }
            AlphaRule::Constant(_) => {}
        }
        if self.value_set().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            out.push(Violation::new(key, "alpha values must be finite"));
        }
        if self.max_abs() > 1.0 + 1e-15 {
            out.push(Violation::new(key, "alpha values must satisfy |alpha(p)| <= 1"));
        }
        out
    }
}

/// Complete homogeneous symmetric polynomials `h_0..=h_max` in the given
/// values: `h_k = sum over k_1+..+k_m = k of prod alpha_l^{k_l}`.
pub fn complete_homogeneous(alphas: &[Complex64], max: usize) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); max + 1];
    h[0] = Complex64::new(1.0, 0.0);
    for &a in alphas {
        for k in 1..=max {
            let prev = h[k - 1];
            h[k] += a * prev;
        }
    }
    h
}

/// Values `f(0..=limit)` of the multiplicative function with
/// `f(p^k) = local(p, k)`; `f(0)` is 0.
pub fn multiplicative_table(
    limit: usize,
    mut local: impl FnMut(u64, u32) -> Complex64,
) -> Vec<Complex64> {
    let spf = smallest_prime_factors(limit);
    let mut table = vec![Complex64::new(0.0, 0.0); limit + 1];
    if limit >= 1 {
        table[1] = Complex64::new(1.0, 0.0);
    }
    for n in 2..=limit {
        let p = spf[n] as usize;
        let mut rest = n;
        let mut k = 0;
        while rest % p == 0 {
            rest /= p;
            k += 1;
        }
        table[n] = table[rest] * local(p as u64, k);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_small_limits() {
        assert_eq!(sieve_primes(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap().primes(), &[2]);
        let t = sieve_primes(30).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(*t.primes().last().unwrap(), 29);
        assert!(sieve_primes(1).is_err());
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        let t = sieve_primes(20_000).unwrap();
        let trial: Vec<u64> = (2..=20_000).filter(|&n| is_prime(n)).collect();
        assert_eq!(t.primes(), trial.as_slice());
    }

    #[test]
    fn prime_exponent_cases() {
        assert_eq!(prime_exponent(12, 2).unwrap(), 2);
        assert_eq!(prime_exponent(12, 5).unwrap(), 0);
        assert_eq!(prime_exponent(1, 7).unwrap(), 0);
        assert!(prime_exponent(0, 2).is_err());
        assert!(prime_exponent(12, 4).is_err());
    }

    #[test]
    fn factorize_roundtrip() {
        for n in 1..5000u64 {
            let prod: u64 = factorize(n).iter().map(|&(p, k)| p.pow(k)).product();
            assert_eq!(prod, n);
        }
    }

    #[test]
    fn complete_homogeneous_counts_compositions() {
        // With all alphas equal to one, h_k counts compositions: C(k+m-1, m-1).
        let ones = vec![Complex64::new(1.0, 0.0); 3];
        let h = complete_homogeneous(&ones, 4);
        let expected = [1.0, 3.0, 6.0, 10.0, 15.0];
        for (got, want) in h.iter().zip(expected) {
            assert_eq!(got.re, want);
        }
    }

    #[test]
    fn chi_minus_4_pattern() {
        let vals: Vec<i64> = (1..=8).map(chi_minus_4).collect();
        assert_eq!(vals, vec![1, 0, -1, 0, 1, 0, -1, 0]);
    }
}
