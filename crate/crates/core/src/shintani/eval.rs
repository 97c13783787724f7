use num_complex::Complex64;

use super::maclaurin::LogPowerSeries;
use super::{converges_at, for_each_in_shell, max_shell_within, tail_bound, ComplexPoint, ShintaniConfig};
use crate::coefficients::{PreparedCoefficients, Support};
use crate::error::{Error, Result};
use crate::summation::ComplexSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Finite support, summed completely.
    Exact,
    /// Total-degree shells `0..=shells_used`.
    Shells,
    /// Support points `base^k - 1` of a lacunary coefficient.
    Lacunary,
    /// Direct head plus an Euler–Maclaurin tail.
    EulerMaclaurin,
    /// Product over the primes of a table.
    EulerProduct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: Complex64,
    /// Bound on the absolute error from truncation; infinite when no bound is available.
    pub tail_bound: f64,
    /// Largest total degree summed directly.
    pub shells_used: u64,
    /// Lattice points evaluated.
    pub points: u64,
    /// First-order estimate of floating-point error, kept apart from the
    /// truncation bound. Not certified.
    pub rounding: f64,
    /// False when the tolerance was not met within the point cap.
    pub certified: bool,
    pub method: Method,
}

impl EvalResult {
    /// Truncation bound plus rounding estimate.
    pub fn error_bound(&self) -> f64 {
        self.tail_bound + self.rounding
    }

    /// Turns a non-certified result into [`Error::ToleranceUnreachable`].
    pub fn require_certified(self, tol: f64, cap: u64) -> Result<Self> {
        if self.certified {
            Ok(self)
        } else {
            Err(Error::ToleranceUnreachable { tol, cap })
        }
    }
}

struct Kernel<'a> {
    cfg: &'a ShintaniConfig,
    theta: PreparedCoefficients,
    pair: Vec<Complex64>,
    logs: Vec<f64>,
    /// `sum |term| (4 + |exponent|)`, the scale of accumulated rounding.
    spread: f64,
}

impl<'a> Kernel<'a> {
    fn new(cfg: &'a ShintaniConfig, s: &ComplexPoint, max_index: u64) -> Self {
        Self {
            cfg,
            theta: cfg.theta.prepare(max_index),
            pair: cfg.pairings(s),
            logs: vec![0.0; cfg.m],
            spread: 0.0,
        }
    }

    #[inline]
    fn term(&mut self, n: &[u64]) -> Complex64 {
        let th = self.theta.value(n);
        if th.re == 0.0 && th.im == 0.0 {
            return th;
        }
        self.cfg.log_forms(n, &mut self.logs);
        let mut e = Complex64::new(0.0, 0.0);
        for (p, l) in self.pair.iter().zip(&self.logs) {
            e -= p * l;
        }
        let t = th * e.exp();
        self.spread += t.norm() * (4.0 + e.norm());
        t
    }

    fn rounding(&self, value: Complex64) -> f64 {
        f64::EPSILON * (self.spread + 2.0 * value.norm())
    }

    fn sum_shells(&mut self, from: u64, to: u64, acc: &mut ComplexSum) -> u64 {
        let mut count = 0;
        let r = self.cfg.r;
        for k in from..=to {
            for_each_in_shell(r, k, |n| {
                acc.add(self.term(n));
                count += 1;
            });
        }
        count
    }
}

fn check_inputs(cfg: &ShintaniConfig, s: &ComplexPoint) -> Result<()> {
    cfg.validated()?;
    cfg.check_point(s)?;
    if !converges_at(cfg, s)? {
        let min = cfg
            .real_pairings(&s.re)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        return Err(Error::OutsideRegion(format!(
            "min_l Re<c_l, s> = {min} must exceed r/m = {}",
            cfg.r as f64 / cfg.m as f64
        )));
    }
    Ok(())
}

/// Evaluates the series at `s` to within `tol`, enumerating at most
/// `shell_cap` lattice points. When the cap is hit first the partial result is
/// returned with `certified = false`.
pub fn evaluate(cfg: &ShintaniConfig, s: &ComplexPoint, tol: f64, shell_cap: u64) -> Result<EvalResult> {
    check_inputs(cfg, s)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::param("tol", "tolerance must be positive"));
    }
    if shell_cap == 0 {
        return Err(Error::param("shell_cap", "shell cap must be positive"));
    }
    match cfg.theta.support() {
        Support::Finite(points) => return Ok(exact(cfg, s, &points, None)),
        Support::Lacunary { base } => return lacunary(cfg, s, base, tol, shell_cap),
        Support::Dense => {}
    }
    if cfg.r == 1 && cfg.theta.decay_rate() >= 1.0 {
        if let Some(poly) = cfg.theta.log_polynomial(cfg.u[0]) {
            return Ok(euler_maclaurin(cfg, s, poly, tol, shell_cap));
        }
    }
    shells(cfg, s, tol, shell_cap)
}

/// Plain sum over shells `0..=n` with the tail bound at `n`.
pub fn partial_sum(cfg: &ShintaniConfig, s: &ComplexPoint, n: u64) -> Result<EvalResult> {
    check_inputs(cfg, s)?;
    if let Support::Finite(points) = cfg.theta.support() {
        return Ok(exact(cfg, s, &points, Some(n)));
    }
    let mut kernel = Kernel::new(cfg, s, n);
    let mut acc = ComplexSum::new();
    let points = kernel.sum_shells(0, n, &mut acc);
    let tail = tail_bound(cfg, &s.re, n).unwrap_or(f64::INFINITY);
    Ok(EvalResult {
        value: acc.value(),
        tail_bound: tail,
        rounding: kernel.rounding(acc.value()),
        shells_used: n,
        points,
        certified: tail.is_finite(),
        method: Method::Shells,
    })
}

fn exact(cfg: &ShintaniConfig, s: &ComplexPoint, points: &[Vec<u64>], limit: Option<u64>) -> EvalResult {
    let mut unique: Vec<&Vec<u64>> = points.iter().collect();
    unique.sort();
    unique.dedup();
    let mut kernel = Kernel::new(cfg, s, 0);
    let mut acc = ComplexSum::new();
    let mut used = 0;
    let mut count = 0;
    for p in unique {
        let degree: u64 = p.iter().sum();
        if limit.is_some_and(|n| degree > n) {
            continue;
        }
        acc.add(kernel.term(p));
        used = used.max(degree);
        count += 1;
    }
    let tail = match limit {
        Some(n) => tail_bound(cfg, &s.re, n).unwrap_or(f64::INFINITY),
        None => 0.0,
    };
    EvalResult {
        value: acc.value(),
        tail_bound: tail,
        rounding: kernel.rounding(acc.value()),
        shells_used: limit.unwrap_or(used),
        points: count,
        certified: tail.is_finite(),
        method: Method::Exact,
    }
}

fn shells(cfg: &ShintaniConfig, s: &ComplexPoint, tol: f64, cap: u64) -> Result<EvalResult> {
    let n_cap = max_shell_within(cfg.r, cap);
    let bound = |n: u64| tail_bound(cfg, &s.re, n).unwrap_or(f64::INFINITY);
    let at_cap = bound(n_cap);
    let (n, tail, certified) = if at_cap <= tol {
        // Bounds are nonincreasing in n: find the smallest admissible shell.
        let (mut lo, mut hi) = (0u64, n_cap);
        let mut tail = at_cap;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let b = bound(mid);
            if b <= tol {
                hi = mid;
                tail = b;
            } else {
                lo = mid + 1;
            }
        }
        (hi, tail, true)
    } else {
        (n_cap, at_cap, false)
    };
    let mut kernel = Kernel::new(cfg, s, n);
    let mut acc = ComplexSum::new();
    let points = kernel.sum_shells(0, n, &mut acc);
    Ok(EvalResult {
        value: acc.value(),
        tail_bound: tail,
        rounding: kernel.rounding(acc.value()),
        shells_used: n,
        points,
        certified,
        method: Method::Shells,
    })
}

fn lacunary(cfg: &ShintaniConfig, s: &ComplexPoint, base: u64, tol: f64, cap: u64) -> Result<EvalResult> {
    let mut kernel = Kernel::new(cfg, s, 0);
    let mut acc = ComplexSum::new();
    let mut k = 0u32;
    let mut last = 0;
    let mut tail = f64::INFINITY;
    let mut points = 0;
    while let Some(p) = base.checked_pow(k) {
        if points >= cap {
            break;
        }
        let n = p - 1;
        acc.add(kernel.term(&[n]));
        points += 1;
        last = n;
        tail = tail_bound(cfg, &s.re, n).unwrap_or(f64::INFINITY);
        if tail <= tol {
            break;
        }
        k += 1;
    }
    Ok(EvalResult {
        value: acc.value(),
        tail_bound: tail,
        rounding: kernel.rounding(acc.value()),
        shells_used: last,
        points,
        certified: tail <= tol,
        method: Method::Lacunary,
    })
}

fn euler_maclaurin(
    cfg: &ShintaniConfig,
    s: &ComplexPoint,
    poly: Vec<Complex64>,
    tol: f64,
    cap: u64,
) -> EvalResult {
    let pair = cfg.pairings(s);
    let exponent: Complex64 = pair.iter().sum();
    let log_prefactor: Complex64 = pair
        .iter()
        .zip(&cfg.lambda)
        .map(|(p, row)| -p * row[0].ln())
        .sum();
    let prefactor = log_prefactor.exp();
    let series = LogPowerSeries::new(exponent, poly.into_iter().map(|c| c * prefactor).collect());
    let u = cfg.u[0];

    let mut kernel = Kernel::new(cfg, s, 0);
    let mut head = ComplexSum::new();
    let mut summed = 0u64;
    let mut head_len = 16u64.min(cap);
    let mut best: Option<(u64, ComplexSum, Complex64, f64)> = None;
    loop {
        while summed < head_len {
            head.add(kernel.term(&[summed]));
            summed += 1;
        }
        let tail = series.best_tail(head_len as f64 + u);
        if best.as_ref().is_none_or(|b| tail.bound < b.3) {
            best = Some((head_len, head, tail.value, tail.bound));
        }
        if tail.bound <= tol || head_len >= cap {
            break;
        }
        head_len = (head_len * 2).min(cap);
    }
    let (len, head, tail_value, bound) = best.expect("loop runs at least once");
    let value = head.value() + tail_value;
    EvalResult {
        value,
        tail_bound: bound,
        // The closed-form tail is a handful of terms of size about |tail_value|.
        rounding: kernel.rounding(value) + 64.0 * f64::EPSILON * tail_value.norm(),
        shells_used: len.saturating_sub(1),
        points: len,
        certified: bound <= tol,
        method: Method::EulerMaclaurin,
    }
}
