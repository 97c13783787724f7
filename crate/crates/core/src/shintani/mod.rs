//! Multidimensional Shintani zeta functions
//!
//! ```text
//! Z(s) = sum_{n in Z_{>=0}^r} theta(n) prod_l L_l(n)^(-<c_l, s>),
//! L_l(n) = sum_j lambda_lj (n_j + u_j).
//! ```

mod bounds;
mod eval;
mod maclaurin;
mod special;

use num_complex::Complex64;

use crate::coefficients::{CoefficientSpec, Support};
use crate::error::{Error, Result, Violation};

pub use bounds::tail_bound;
pub use eval::{evaluate, partial_sum, EvalResult, Method};
pub use special::{make_special, SpecialKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ShintaniConfig {
    pub d: usize,
    pub m: usize,
    pub r: usize,
    /// `m` rows of `r` nonnegative entries.
    pub lambda: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    /// `m` vectors of length `d`.
    pub c: Vec<Vec<f64>>,
    pub theta: CoefficientSpec,
}

/// A point `s = sigma + i t` of `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexPoint {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Self {
        Self { re, im }
    }

    pub fn real(re: Vec<f64>) -> Self {
        let im = vec![0.0; re.len()];
        Self { re, im }
    }

    /// One-dimensional point.
    pub fn scalar(s: Complex64) -> Self {
        Self {
            re: vec![s.re],
            im: vec![s.im],
        }
    }

    pub fn from_components(s: &[Complex64]) -> Self {
        Self {
            re: s.iter().map(|z| z.re).collect(),
            im: s.iter().map(|z| z.im).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn component(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn components(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.component(i)).collect()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: self.im.iter().map(|x| -x).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(self.violations))
        }
    }
}

/// Checks shapes and parameter ranges. Never fails; violations are listed in the report.
pub fn validate_config(cfg: &ShintaniConfig) -> ValidationReport {
    let mut v = Vec::new();
    for (key, val) in [("d", cfg.d), ("m", cfg.m), ("r", cfg.r)] {
        if val == 0 {
            v.push(Violation::new(key, format!("{key} must be a positive integer")));
        }
    }
    if cfg.lambda.len() != cfg.m {
        v.push(Violation::new(
            "lambda",
            format!("lambda must have m = {} rows, got {}", cfg.m, cfg.lambda.len()),
        ));
    }
    for (l, row) in cfg.lambda.iter().enumerate() {
        if row.len() != cfg.r {
            v.push(Violation::new(
                format!("lambda[{l}]"),
                format!("lambda rows must have r = {} entries, got {}", cfg.r, row.len()),
            ));
        }
        if row.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            v.push(Violation::new(format!("lambda[{l}]"), "lambda_lj must be nonnegative"));
        }
        if !row.iter().any(|x| *x > 0.0) {
            v.push(Violation::new(
                format!("lambda[{l}]"),
                "each lambda row needs a positive entry",
            ));
        }
    }
    if cfg.lambda.iter().all(|row| row.len() == cfg.r) && cfg.m > 0 {
        for j in 0..cfg.r {
            if !cfg.lambda.iter().any(|row| row[j] > 0.0) {
                v.push(Violation::new(
                    "lambda",
                    format!("column {j} of lambda has no positive entry"),
                ));
            }
        }
    }
    if cfg.u.len() != cfg.r {
        v.push(Violation::new(
            "u",
            format!("u must have r = {} entries, got {}", cfg.r, cfg.u.len()),
        ));
    }
    if cfg.u.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        v.push(Violation::new("u", "u_j must be positive"));
    }
    if cfg.c.len() != cfg.m {
        v.push(Violation::new(
            "c",
            format!("c must have m = {} vectors, got {}", cfg.m, cfg.c.len()),
        ));
    }
    for (l, cl) in cfg.c.iter().enumerate() {
        if cl.len() != cfg.d {
            v.push(Violation::new(
                format!("c[{l}]"),
                format!("c vectors must have length d = {}, got {}", cfg.d, cl.len()),
            ));
        }
        if cl.iter().any(|x| !x.is_finite()) {
            v.push(Violation::new(format!("c[{l}]"), "c entries must be finite"));
        }
    }
    v.extend(cfg.theta.check(cfg.r, "theta"));
    ValidationReport { violations: v }
}

impl ShintaniConfig {
    pub(crate) fn validated(&self) -> Result<()> {
        validate_config(self).into_result()
    }

    pub(crate) fn check_dim(&self, what: &'static str, got: usize) -> Result<()> {
        if got != self.d {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.d,
                got,
            });
        }
        Ok(())
    }

    pub(crate) fn check_point(&self, s: &ComplexPoint) -> Result<()> {
        self.check_dim("s.re", s.re.len())?;
        self.check_dim("s.im", s.im.len())?;
        if s.re.iter().chain(&s.im).any(|x| !x.is_finite()) {
            return Err(Error::param("s", "components must be finite"));
        }
        Ok(())
    }

    /// `<c_l, s>` for each form.
    pub fn pairings(&self, s: &ComplexPoint) -> Vec<Complex64> {
        self.c
            .iter()
            .map(|cl| {
                let re: f64 = cl.iter().zip(&s.re).map(|(a, b)| a * b).sum();
                let im: f64 = cl.iter().zip(&s.im).map(|(a, b)| a * b).sum();
                Complex64::new(re, im)
            })
            .collect()
    }

    pub fn real_pairings(&self, sigma: &[f64]) -> Vec<f64> {
        self.c
            .iter()
            .map(|cl| cl.iter().zip(sigma).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `log L_l(n)` for every form.
    #[inline]
    pub(crate) fn log_forms(&self, n: &[u64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.lambda) {
            let mut acc = 0.0;
            for ((lam, nj), uj) in row.iter().zip(n).zip(&self.u) {
                acc += lam * (*nj as f64 + uj);
            }
            *o = acc.ln();
        }
    }

    /// `L_l(0)`, the minimum of each form over the lattice.
    pub(crate) fn form_minima(&self) -> Vec<f64> {
        self.lambda
            .iter()
            .map(|row| row.iter().zip(&self.u).map(|(l, u)| l * u).sum())
            .collect()
    }

    pub(crate) fn all_lambda_positive(&self) -> bool {
        self.lambda.iter().flatten().all(|&x| x > 0.0)
    }
}

/// True iff `min_l Re <c_l, s> > r / m`, with an additional sufficient
/// convergence check when some `lambda_lj` vanish.
pub fn in_convergence_region(cfg: &ShintaniConfig, s: &ComplexPoint) -> Result<bool> {
    cfg.check_point(s)?;
    let sig = cfg.real_pairings(&s.re);
    Ok(sufficient_region(cfg, &sig) && (cfg.all_lambda_positive() || bounds::factorized_feasible(cfg, &sig)))
}

fn sufficient_region(cfg: &ShintaniConfig, sig: &[f64]) -> bool {
    let threshold = cfg.r as f64 / cfg.m as f64;
    sig.iter().all(|&x| x > threshold)
}

/// True when the series converges absolutely at `s` and its tail can be bounded.
///
/// Beyond the region of [`in_convergence_region`] this accepts coefficients
/// with finite support, lacunary support or geometric decay, which converge
/// for every `s`, and positive `lambda` with `sum_l Re <c_l, s> > r`.
pub fn converges_at(cfg: &ShintaniConfig, s: &ComplexPoint) -> Result<bool> {
    cfg.check_point(s)?;
    match cfg.theta.support() {
        Support::Finite(_) | Support::Lacunary { .. } => return Ok(true),
        Support::Dense => {}
    }
    if cfg.theta.decay_rate() < 1.0 {
        return Ok(true);
    }
    let sig = cfg.real_pairings(&s.re);
    if cfg.all_lambda_positive() && sig.iter().sum::<f64>() > cfg.r as f64 {
        return Ok(true);
    }
    in_convergence_region(cfg, s)
}

/// Partial derivative in the 0-based coordinate `axis` of `s`.
///
/// The result multiplies theta by `sum_q (-c_q[axis]) log L_q(n)`; its envelope
/// is derived on demand from the enlarged family.
pub fn differentiate(cfg: &ShintaniConfig, axis: usize) -> Result<ShintaniConfig> {
    cfg.validated()?;
    if axis >= cfg.d {
        return Err(Error::param(
            "axis",
            format!("axis {axis} out of range for d = {}", cfg.d),
        ));
    }
    let weights: Vec<f64> = cfg.c.iter().map(|cl| -cl[axis]).collect();
    let factor = CoefficientSpec::log_factor(weights, cfg.lambda.clone(), cfg.u.clone());
    let mut out = cfg.clone();
    out.theta = CoefficientSpec::product(vec![cfg.theta.clone(), factor]);
    Ok(out)
}

/// Calls `f` on every lattice point of total degree `k` in `Z_{>=0}^r`.
pub(crate) fn for_each_in_shell(r: usize, k: u64, mut f: impl FnMut(&[u64])) {
    let mut n = vec![0u64; r];
    n[0] = k;
    loop {
        f(&n);
        if r == 1 {
            return;
        }
        let Some(j) = (0..r - 1).rev().find(|&j| n[j] > 0) else {
            return;
        };
        n[j] -= 1;
        let tail = n[r - 1];
        n[r - 1] = 0;
        n[j + 1] = tail + 1;
    }
}

/// Number of lattice points of total degree at most `n`, saturating.
pub(crate) fn points_up_to(r: usize, n: u64) -> u64 {
    // binom(n + r, r)
    let mut acc: u128 = 1;
    for i in 1..=r as u128 {
        acc = acc * (n as u128 + i) / i;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Largest shell index whose cumulative point count stays within `cap`.
pub(crate) fn max_shell_within(r: usize, cap: u64) -> u64 {
    if points_up_to(r, 0) > cap {
        return 0;
    }
    let (mut lo, mut hi) = (0u64, 1u64);
    while points_up_to(r, hi) <= cap {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            break;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if points_up_to(r, mid) <= cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
