//! Rigorous bounds on `sum_{|n| > N} |theta(n) prod_l L_l(n)^(-<c_l, s>)|`.
//!
//! Only `sigma = Re s` matters. Several bounds are tried and the smallest valid
//! one is returned:
//!
//! * total degree: with every `lambda_lj > 0`, `L_l(n) >= lambda_min (|n| + U)`
//!   and each shell holds `binom(k + r - 1, r - 1)` points;
//! * factorized: weighted AM-GM turns `prod_l L_l^(-sigma_l)` into a product of
//!   one-dimensional powers, which handles vanishing `lambda_lj`;
//! * split: one full-support form is lower bounded on the tail and the rest is
//!   bounded by a full factorized sum;
//! * ratio tests for geometric and lacunary coefficients, and exact tails for
//!   finite support.

use super::{sufficient_region, ShintaniConfig};
use crate::coefficients::{CoefficientSpec, Envelope, Support};
use crate::error::{Error, Result};

/// Upper bound on the absolute tail beyond total degree `n`.
pub fn tail_bound(cfg: &ShintaniConfig, sigma: &[f64], n: u64) -> Result<f64> {
    cfg.validated()?;
    cfg.check_dim("sigma", sigma.len())?;
    if sigma.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("sigma", "components must be finite"));
    }
    let sig = cfg.real_pairings(sigma);
    match cfg.theta.support() {
        Support::Finite(points) => return Ok(finite_tail(cfg, &sig, &points, n)),
        Support::Lacunary { .. } => {
            if let Some((base, a, env)) = cfg.theta.lacunary_parts() {
                return lacunary_tail(cfg, &sig, n, base, a, env);
            }
        }
        Support::Dense => {}
    }
    let rho = cfg.theta.decay_rate();
    if rho < 1.0 {
        return geometric_tail(cfg, &sig, n, rho);
    }
    polynomial_tail(cfg, &sig, n)
}

fn finite_tail(cfg: &ShintaniConfig, sig: &[f64], points: &[Vec<u64>], n: u64) -> f64 {
    let theta = cfg.theta.prepare(0);
    let mut logs = vec![0.0; cfg.m];
    let mut seen = std::collections::HashSet::new();
    let mut total = 0.0;
    for p in points {
        if p.iter().sum::<u64>() <= n || !seen.insert(p.clone()) {
            continue;
        }
        cfg.log_forms(p, &mut logs);
        let e: f64 = sig.iter().zip(&logs).map(|(s, l)| -s * l).sum();
        total += theta.value(p).norm() * e.exp();
    }
    total
}

fn envelope_for(theta: &CoefficientSpec, slack: f64) -> Result<Envelope> {
    if !(slack > 0.0) {
        return Err(Error::NoCertifiedBound("no slack left for the coefficient growth".into()));
    }
    match theta.envelope {
        Some(env) if env.eps < slack => Ok(env),
        Some(env) => Err(Error::NoCertifiedBound(format!(
            "envelope exponent {} is not below the available slack {}",
            env.eps, slack
        ))),
        None => theta.envelope_within(slack / 2.0),
    }
}

fn polynomial_tail(cfg: &ShintaniConfig, sig: &[f64], n: u64) -> Result<f64> {
    let feasible = if cfg.all_lambda_positive() {
        sig.iter().sum::<f64>() > cfg.r as f64
    } else {
        sufficient_region(cfg, sig) && factorized_feasible(cfg, sig)
    };
    if !feasible {
        return Err(Error::OutsideRegion(format!(
            "sum over forms of <c_l, sigma> = {:?} admits no convergent majorant",
            sig
        )));
    }
    let mut best = f64::INFINITY;
    let mut last_err = None;
    if cfg.all_lambda_positive() {
        match total_degree_tail(cfg, sig, n) {
            Ok(b) => best = best.min(b),
            Err(e) => last_err = Some(e),
        }
    }
    if cfg.r > 1 && sig.iter().all(|&x| x >= 0.0) {
        let mut tail_at = |w: &Weights| factorized(cfg, sig, w, Some(n));
        match search_weights(cfg, sig, &mut tail_at) {
            Ok(b) => best = best.min(b),
            Err(e) => last_err = Some(e),
        }
        match split_tail(cfg, sig, n) {
            Ok(b) => best = best.min(b),
            Err(e) => last_err = Some(e),
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(last_err.unwrap_or_else(|| Error::NoCertifiedBound("no bound applies".into())))
    }
}

/// `K0 (N + U)^(r - alpha + eps) / (alpha - eps - r)`, from comparing each
/// shell with an integral.
fn total_degree_tail(cfg: &ShintaniConfig, sig: &[f64], n: u64) -> Result<f64> {
    let r = cfg.r as f64;
    let alpha: f64 = sig.iter().sum();
    let env = envelope_for(&cfg.theta, alpha - r)?;
    let eps = env.eps;
    let u_sum: f64 = cfg.u.iter().sum();
    // prod_l L_l^(-sigma_l) <= Lambda (|n| + U)^(-alpha)
    let mut log_lambda = 0.0;
    for (row, &s) in cfg.lambda.iter().zip(sig) {
        let (lo, hi) = row
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        log_lambda += if s >= 0.0 { -s * lo.ln() } else { -s * hi.ln() };
    }
    let nf = n as f64;
    let kappa = ((nf + 2.0) / (nf + 1.0 + u_sum)).max(1.0);
    let kappa2 = ((nf + r) / (nf + 1.0 + u_sum)).max(1.0);
    let log_fact: f64 = (1..cfg.r).map(|i| (i as f64).ln()).sum();
    let beta = alpha - eps - r;
    let log_k0 = env.bound.ln() + log_lambda + (r - 1.0) * kappa2.ln() + eps * kappa.ln() - log_fact;
    Ok((log_k0 + (-beta) * (nf + u_sum).ln()).exp() / beta)
}

/// Per-form weights on the columns, each row summing to one.
type Weights = Vec<Vec<f64>>;

fn exponents(cfg: &ShintaniConfig, sig: &[f64], w: &Weights) -> Vec<f64> {
    let mut e = vec![0.0; cfg.r];
    for (row, &s) in w.iter().zip(sig) {
        for (ej, wj) in e.iter_mut().zip(row) {
            *ej += wj * s;
        }
    }
    e
}

/// Sum (or tail beyond degree `n`) of the factorized majorant
/// `B K prod_j kappa_j (n_j + u_j)^(-(e_j - eps))`.
fn factorized(cfg: &ShintaniConfig, sig: &[f64], w: &Weights, n: Option<u64>) -> Result<f64> {
    let e = exponents(cfg, sig, w);
    let slack = e.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let env = envelope_for(&cfg.theta, slack)?;
    let eps = env.eps;
    let mut log_k = env.bound.ln();
    for ((row, wrow), &s) in cfg.lambda.iter().zip(w).zip(sig) {
        for (&lam, &wl) in row.iter().zip(wrow) {
            if wl > 0.0 {
                log_k -= wl * s * (lam / wl).ln();
            }
        }
    }
    let mut z = Vec::with_capacity(cfg.r);
    let mut t = Vec::with_capacity(cfg.r);
    let m_start = n.map(|n| (n + 1).div_ceil(cfg.r as u64) as f64);
    for (j, &uj) in cfg.u.iter().enumerate() {
        let beta = e[j] - eps;
        let kappa = uj.powf(-eps).max(1.0);
        z.push(kappa * (uj.powf(-beta) + uj.powf(1.0 - beta) / (beta - 1.0)));
        if let Some(mm) = m_start {
            let x = mm + uj;
            t.push(kappa * (x.powf(-beta) + x.powf(1.0 - beta) / (beta - 1.0)));
        }
    }
    let k = log_k.exp();
    if n.is_none() {
        return Ok(k * z.iter().product::<f64>());
    }
    // {|n| > N} is covered by the sets {n_j >= ceil((N + 1) / r)}.
    let mut total = 0.0;
    for j in 0..cfg.r {
        let others: f64 = z
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, v)| v)
            .product();
        total += t[j] * others;
    }
    Ok(k * total)
}

fn support_uniform(cfg: &ShintaniConfig) -> Weights {
    cfg.lambda
        .iter()
        .map(|row| {
            let k = row.iter().filter(|&&x| x > 0.0).count() as f64;
            row.iter().map(|&x| if x > 0.0 { 1.0 / k } else { 0.0 }).collect()
        })
        .collect()
}

fn proportional(cfg: &ShintaniConfig) -> Weights {
    cfg.lambda
        .iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(|&x| x / s).collect()
        })
        .collect()
}

/// Minimizes `objective` over a family of weight candidates, including
/// multiplicative updates that move weight towards columns with small exponents.
fn search_weights(
    cfg: &ShintaniConfig,
    sig: &[f64],
    objective: &mut dyn FnMut(&Weights) -> Result<f64>,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    let mut last_err = None;
    for start in [support_uniform(cfg), proportional(cfg)] {
        let mut w = start;
        for _ in 0..40 {
            match objective(&w) {
                Ok(b) if b < best => best = b,
                Ok(_) => {}
                Err(e) => last_err = Some(e),
            }
            let e = exponents(cfg, sig, &w);
            for row in w.iter_mut() {
                let mut total = 0.0;
                for (wj, ej) in row.iter_mut().zip(&e) {
                    if *wj > 0.0 {
                        *wj /= ej.max(1e-3).powi(2);
                        total += *wj;
                    }
                }
                for wj in row.iter_mut() {
                    *wj /= total;
                }
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(last_err.unwrap_or_else(|| Error::NoCertifiedBound("no feasible weights".into())))
    }
}

/// True when some weight candidate gives every column exponent above one.
pub(super) fn factorized_feasible(cfg: &ShintaniConfig, sig: &[f64]) -> bool {
    if sig.iter().any(|&x| x < 0.0) {
        return false;
    }
    let mut objective = |w: &Weights| {
        let e = exponents(cfg, sig, w);
        if e.iter().all(|&x| x > 1.0) {
            Ok(0.0)
        } else {
            Err(Error::NoCertifiedBound(String::new()))
        }
    };
    search_weights(cfg, sig, &mut objective).is_ok()
}

/// Lower bounds one full-support form on the tail, keeping `tau` of its
/// exponent inside a full factorized sum.
fn split_tail(cfg: &ShintaniConfig, sig: &[f64], n: u64) -> Result<f64> {
    let minima = cfg.form_minima();
    let mut best = f64::INFINITY;
    let mut last_err = None;
    for (l, row) in cfg.lambda.iter().enumerate() {
        if sig[l] <= 0.0 || row.iter().any(|&x| x <= 0.0) {
            continue;
        }
        let lam_min = row.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = lam_min * (n + 1) as f64 + minima[l];
        for k in 0..8 {
            let tau = sig[l] * k as f64 / 8.0;
            let mut reduced = sig.to_vec();
            reduced[l] = tau;
            let mut full = |w: &Weights| factorized(cfg, &reduced, w, None);
            match search_weights(cfg, &reduced, &mut full) {
                Ok(b) => best = best.min(b * floor.powf(-(sig[l] - tau))),
                Err(e) => last_err = Some(e),
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(last_err.unwrap_or_else(|| Error::NoCertifiedBound("no full-support form".into())))
    }
}

/// Ratio-test bound for coefficients with `|theta(n)| <= B (|n|+1)^eps rho^|n|`.
fn geometric_tail(cfg: &ShintaniConfig, sig: &[f64], n: u64, rho: f64) -> Result<f64> {
    let env = cfg.theta.envelope_within(1.0)?;
    let eps = env.eps;
    let r = cfg.r as f64;
    let u_sum: f64 = cfg.u.iter().sum();
    let minima = cfg.form_minima();
    let maxima: Vec<f64> = cfg
        .lambda
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect();
    let lows: Vec<f64> = cfg
        .lambda
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    if rho == 0.0 {
        // Only the origin can carry a nonzero coefficient.
        return Ok(0.0);
    }
    // log of the majorant summed over shell k
    let log_b = |k: f64| -> f64 {
        let mut v = env.bound.ln() + eps * (k + 1.0).ln() + k * rho.ln() + log_binom(k + r - 1.0, r - 1.0);
        for l in 0..cfg.m {
            v += if sig[l] >= 0.0 {
                -sig[l] * (lows[l] * k + minima[l]).ln()
            } else {
                -sig[l] * (maxima[l] * (k + u_sum)).ln()
            };
        }
        v
    };
    let ratio = |k: f64| -> f64 {
        let mut q = ((k + 2.0) / (k + 1.0)).powf(eps) * rho * (k + r) / (k + 1.0);
        for &s in sig {
            if s < 0.0 {
                q *= ((k + 1.0 + u_sum) / (k + u_sum)).powf(-s);
            }
        }
        q
    };
    let mut total = 0.0;
    let mut k = n as f64 + 1.0;
    for _ in 0..10_000_000u64 {
        let q = ratio(k);
        if q < 1.0 {
            return Ok(total + log_b(k).exp() / (1.0 - q));
        }
        total += log_b(k).exp();
        k += 1.0;
    }
    Err(Error::NoCertifiedBound("geometric decay too slow for a ratio bound".into()))
}

fn log_binom(n: f64, k: f64) -> f64 {
    let mut v = 0.0;
    let mut i = 1.0;
    while i <= k {
        v += ((n - k + i) / i).ln();
        i += 1.0;
    }
    v
}

/// Ratio-test bound over the support `base^k - 1` of a lacunary coefficient.
fn lacunary_tail(
    cfg: &ShintaniConfig,
    sig: &[f64],
    n: u64,
    base: u64,
    a: f64,
    rest: Envelope,
) -> Result<f64> {
    let u = cfg.u[0];
    let lb = (base as f64).ln();
    let total_sigma: f64 = sig.iter().sum();
    let log_lam: f64 = cfg
        .lambda
        .iter()
        .zip(sig)
        .map(|(row, s)| -s * row[0].ln())
        .sum();
    // log(base^k - 1 + u), stable for large k
    let log_point = |k: f64| k * lb + ((u - 1.0) * (-k * lb).exp()).ln_1p();
    let log_fact = |k: f64| -> f64 { (2..=k as u64).map(|i| (i as f64).ln()).sum() };
    let log_b = |k: f64| -> f64 {
        a * k * lb - log_fact(k) + rest.bound.ln() + rest.eps * k * lb + log_lam
            - total_sigma * log_point(k)
    };
    let ratio = |k: f64| -> f64 {
        let mut q = (a + rest.eps) * lb - (k + 1.0).ln();
        if total_sigma < 0.0 {
            let grow = (log_point(k + 1.0) - log_point(k)).max(lb);
            q += -total_sigma * grow;
        }
        q.exp()
    };
    // first k with base^k - 1 > n
    let mut first = 0u32;
    while let Some(p) = base.checked_pow(first) {
        if p - 1 > n {
            break;
        }
        first += 1;
    }
    let mut k = first as f64;
    let mut total = 0.0;
    for _ in 0..100_000 {
        let q = ratio(k);
        if q < 1.0 {
            return Ok(total + log_b(k).exp() / (1.0 - q));
        }
        total += log_b(k).exp();
        k += 1.0;
    }
    Err(Error::NoCertifiedBound("lacunary weights decay too slowly".into()))
}
