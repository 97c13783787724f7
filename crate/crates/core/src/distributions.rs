//! Shintani zeta distributions on `R^d`.
//!
//! For a coefficient of definite sign the random vector `X_sigma` takes the
//! value `-(sum_l c_l1 log L_l(n), .., sum_l c_ld log L_l(n))` with probability
//! `theta(n) prod_l L_l(n)^(-<c_l, sigma>) / Z(sigma)`. Its characteristic
//! function is `Z(sigma + i t) / Z(sigma)`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::{CoefficientSpec, SignClass, Support};
use crate::error::{Error, Result};
use crate::shintani::{
    converges_at, differentiate, evaluate, for_each_in_shell, max_shell_within, tail_bound,
    ComplexPoint, EvalResult, ShintaniConfig,
};
use crate::summation::{ComplexSum, NeumaierSum};
use crate::DEFAULT_SHELL_CAP;

/// Largest total moment order accepted by [`moment`].
pub const MOMENT_ORDER_CAP: u32 = 8;

/// Absolute tolerance for series evaluations inside this module.
const EVAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaDistribution {
    pub config: ShintaniConfig,
    pub sigma: Vec<f64>,
    pub normalizer: EvalResult,
    /// Atom locations, `d` coordinates per atom, ascending lexicographically.
    locations: Vec<f64>,
    masses: Vec<f64>,
    /// Certified bound on the probability not covered by the atoms.
    pub tail_mass_bound: f64,
    /// Largest lattice index whose point was enumerated.
    pub shells_used: u64,
    pub sign: SignClass,
}

impl ZetaDistribution {
    pub fn dim(&self) -> usize {
        self.config.d
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn atom(&self, i: usize) -> (&[f64], f64) {
        let d = self.dim();
        (&self.locations[i * d..(i + 1) * d], self.masses[i])
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.locations.chunks(self.dim()).zip(self.masses.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().copied().collect::<NeumaierSum>().value()
    }

    /// `sum mass * exp(i <t, location>)` over the enumerated atoms.
    pub fn atom_cf(&self, t: &[f64]) -> Complex64 {
        self.atoms()
            .map(|(loc, mass)| {
                let phase: f64 = loc.iter().zip(t).map(|(x, t)| x * t).sum();
                Complex64::from_polar(mass, phase)
            })
            .collect::<ComplexSum>()
            .value()
    }

    /// The characteristic function, reusing the stored normalizer.
    pub fn char_fn(&self, t: &[f64]) -> Result<CfValue> {
        self.config.check_dim("t", t.len())?;
        let s = ComplexPoint::new(self.sigma.clone(), t.to_vec());
        let num = evaluate(&self.config, &s, EVAL_TOL, DEFAULT_SHELL_CAP)?;
        ratio(&num, &self.normalizer)
    }
}

/// A ratio of two evaluations with a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfValue {
    pub value: Complex64,
    pub error_bound: f64,
}

fn ratio(num: &EvalResult, den: &EvalResult) -> Result<CfValue> {
    let d = den.value.norm();
    if !(d > den.tail_bound) || d == 0.0 || !d.is_finite() {
        return Err(Error::DegenerateNormalizer);
    }
    let value = num.value / den.value;
    // |N/D - (N + e1)/(D + e2)| <= (e1 + |N/D| e2) / (|D| - e2)
    let error_bound = (num.tail_bound + value.norm() * den.tail_bound) / (d - den.tail_bound);
    Ok(CfValue { value, error_bound })
}

fn normalizer(cfg: &ShintaniConfig, sigma: &[f64]) -> Result<EvalResult> {
    let s = ComplexPoint::real(sigma.to_vec());
    let first = evaluate(cfg, &s, EVAL_TOL, DEFAULT_SHELL_CAP)?;
    let z = first.value.norm();
    if z > 0.0 && z < 1.0 && first.tail_bound > EVAL_TOL * z {
        return evaluate(cfg, &s, EVAL_TOL * z, DEFAULT_SHELL_CAP);
    }
    Ok(first)
}

/// `f(t) = Z(sigma + i t) / Z(sigma)`.
pub fn char_fn(cfg: &ShintaniConfig, sigma: &[f64], t: &[f64]) -> Result<CfValue> {
    char_fn_with(cfg, sigma, t, EVAL_TOL, DEFAULT_SHELL_CAP)
}

pub fn char_fn_with(cfg: &ShintaniConfig, sigma: &[f64], t: &[f64], tol: f64, cap: u64) -> Result<CfValue> {
    cfg.validated()?;
    cfg.check_dim("sigma", sigma.len())?;
    cfg.check_dim("t", t.len())?;
    let den = evaluate(cfg, &ComplexPoint::real(sigma.to_vec()), tol, cap)?;
    let num = evaluate(cfg, &ComplexPoint::new(sigma.to_vec(), t.to_vec()), tol, cap)?;
    ratio(&num, &den)
}

pub fn build_distribution(cfg: &ShintaniConfig, sigma: &[f64], delta: f64) -> Result<ZetaDistribution> {
    build_distribution_with(cfg, sigma, delta, DEFAULT_SHELL_CAP)
}

/// Enumerates atoms until the unenumerated mass is at most `delta`, visiting at
/// most `cap` lattice points.
pub fn build_distribution_with(
    cfg: &ShintaniConfig,
    sigma: &[f64],
    delta: f64,
    cap: u64,
) -> Result<ZetaDistribution> {
    cfg.validated()?;
    cfg.check_dim("sigma", sigma.len())?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "delta must lie in (0, 1)"));
    }
    let sign = cfg.theta.sign_class();
    if !sign.is_definite() {
        return Err(Error::IndefiniteSign(sign));
    }
    let s = ComplexPoint::real(sigma.to_vec());
    if !converges_at(cfg, &s)? {
        return Err(Error::OutsideRegion(format!(
            "sigma = {sigma:?} is outside the region of absolute convergence"
        )));
    }
    let norm = normalizer(cfg, sigma)?;
    let z = norm.value.re;
    if z == 0.0 || z.abs() <= norm.tail_bound || !z.is_finite() {
        return Err(Error::DegenerateNormalizer);
    }
    let target = delta * z.abs();
    let bound = |n: u64| tail_bound(cfg, sigma, n).unwrap_or(f64::INFINITY);

    let mut points: Vec<Vec<u64>> = Vec::new();
    let (shells_used, tail) = match cfg.theta.support() {
        Support::Finite(support) => {
            points = support;
            points.sort();
            points.dedup();
            (points.iter().map(|p| p.iter().sum()).max().unwrap_or(0), 0.0)
        }
        Support::Lacunary { base } => {
            let mut k = 0u32;
            let mut last = (0, f64::INFINITY);
            while let Some(p) = base.checked_pow(k) {
                if points.len() as u64 >= cap {
                    break;
                }
                points.push(vec![p - 1]);
                last = (p - 1, bound(p - 1));
                if last.1 <= target {
                    break;
                }
                k += 1;
            }
            if last.1 > target {
                return Err(Error::ToleranceUnreachable { tol: delta, cap });
            }
            last
        }
        Support::Dense => {
            let n_cap = max_shell_within(cfg.r, cap);
            if bound(n_cap) > target {
                return Err(Error::ToleranceUnreachable { tol: delta, cap });
            }
            let (mut lo, mut hi) = (0, n_cap);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if bound(mid) <= target {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            for k in 0..=hi {
                for_each_in_shell(cfg.r, k, |n| points.push(n.to_vec()));
            }
            (hi, bound(hi))
        }
    };

    let theta = cfg.theta.prepare(shells_used);
    let mut logs = vec![0.0; cfg.m];
    let mut raw: Vec<(Vec<f64>, f64)> = Vec::with_capacity(points.len());
    for n in &points {
        let th = theta.value(n).re;
        if th == 0.0 {
            continue;
        }
        cfg.log_forms(n, &mut logs);
        let loc: Vec<f64> = (0..cfg.d)
            .map(|h| -cfg.c.iter().zip(&logs).map(|(cl, lg)| cl[h] * lg).sum::<f64>())
            .collect();
        let e: f64 = cfg
            .real_pairings(sigma)
            .iter()
            .zip(&logs)
            .map(|(s, l)| -s * l)
            .sum();
        raw.push((loc, th * e.exp() / z));
    }
    drop(points);
    raw.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut locations = Vec::with_capacity(raw.len() * cfg.d);
    let mut masses: Vec<f64> = Vec::with_capacity(raw.len());
    let mut prev: Option<Vec<f64>> = None;
    for (loc, mass) in raw {
        let same = prev.as_ref().is_some_and(|p| {
            p.iter()
                .zip(&loc)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
        });
        if same {
            *masses.last_mut().expect("merged into an existing atom") += mass;
        } else {
            locations.extend_from_slice(&loc);
            masses.push(mass);
            prev = Some(loc);
        }
    }
    Ok(ZetaDistribution {
        config: cfg.clone(),
        sigma: sigma.to_vec(),
        normalizer: norm,
        locations,
        masses,
        tail_mass_bound: tail / z.abs(),
        shells_used,
        sign,
    })
}

/// Samples drawn from the renormalized atom table.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub d: usize,
    /// `d` coordinates per sample.
    pub points: Vec<f64>,
    pub seed: u64,
    pub count: usize,
    /// Total-variation distance to the untruncated law is at most this.
    pub delta: f64,
}

impl SampleBatch {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks(self.d)
    }
}

/// Inverse-CDF sampling; the output is a function of `(dist, seed, count)`.
pub fn sample(dist: &ZetaDistribution, seed: u64, count: usize) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::param("count", "sample count must be positive"));
    }
    if dist.is_empty() {
        return Err(Error::param("dist", "distribution has no atoms"));
    }
    let mut cumulative = Vec::with_capacity(dist.len());
    let mut acc = NeumaierSum::new();
    for &m in &dist.masses {
        acc.add(m);
        cumulative.push(acc.value());
    }
    let total = acc.value();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dist.dim();
    let mut points = Vec::with_capacity(count * d);
    for _ in 0..count {
        let u: f64 = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= u).min(dist.len() - 1);
        points.extend_from_slice(dist.atom(i).0);
    }
    Ok(SampleBatch {
        d,
        points,
        seed,
        count,
        delta: dist.tail_mass_bound,
    })
}

/// `(1/N) sum_j exp(i <t, x_j>)`.
pub fn empirical_cf(batch: &SampleBatch, t: &[f64]) -> Result<Complex64> {
    if batch.count == 0 || batch.points.is_empty() {
        return Err(Error::param("batch", "batch is empty"));
    }
    if t.len() != batch.d {
        return Err(Error::DimensionMismatch {
            what: "t",
            expected: batch.d,
            got: t.len(),
        });
    }
    let sum: ComplexSum = batch
        .iter()
        .map(|x| {
            let phase: f64 = x.iter().zip(t).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, phase)
        })
        .collect();
    Ok(sum.value() / batch.count as f64)
}

/// A value with a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
}

fn check_order(dist: &ZetaDistribution, k: &[u32]) -> Result<u32> {
    dist.config.check_dim("k", k.len())?;
    let order: u32 = k.iter().sum();
    if order > MOMENT_ORDER_CAP {
        return Err(Error::MomentOrderCap {
            order,
            cap: MOMENT_ORDER_CAP,
        });
    }
    Ok(order)
}

fn differentiated(cfg: &ShintaniConfig, k: &[u32]) -> Result<ShintaniConfig> {
    let mut out = cfg.clone();
    for (h, &kh) in k.iter().enumerate() {
        for _ in 0..kh {
            out = differentiate(&out, h)?;
        }
    }
    Ok(out)
}

/// `E[prod_h X_h^k_h] = Z^(k)(sigma) / Z(sigma)`, the derivatives of the
/// characteristic function at zero.
pub fn moment(dist: &ZetaDistribution, k: &[u32]) -> Result<Estimate> {
    if check_order(dist, k)? == 0 {
        return Ok(Estimate {
            value: 1.0,
            error_bound: 0.0,
        });
    }
    let cfg = differentiated(&dist.config, k)?;
    let num = evaluate(&cfg, &ComplexPoint::real(dist.sigma.clone()), EVAL_TOL, DEFAULT_SHELL_CAP)?;
    let r = ratio(&num, &dist.normalizer)?;
    Ok(Estimate {
        value: r.value.re,
        error_bound: r.error_bound,
    })
}

/// The moment summed over the atom table, with the unenumerated part bounded
/// through the tail of the differentiated series.
pub fn atom_moment(dist: &ZetaDistribution, k: &[u32]) -> Result<Estimate> {
    check_order(dist, k)?;
    let value = dist
        .atoms()
        .map(|(loc, mass)| mass * loc.iter().zip(k).map(|(x, &e)| x.powi(e as i32)).product::<f64>())
        .collect::<NeumaierSum>()
        .value();
    let tail = if matches!(dist.config.theta.support(), Support::Finite(_)) {
        0.0
    } else {
        let cfg = differentiated(&dist.config, k)?;
        tail_bound(&cfg, &dist.sigma, dist.shells_used).unwrap_or(f64::INFINITY)
    };
    Ok(Estimate {
        value,
        error_bound: tail / dist.normalizer.value.norm(),
    })
}

/// Closed-form characteristic functions of the constructions below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Delta { location: f64 },
    Binomial { trials: u64, p: f64 },
    Poisson { mean: f64 },
}

impl ClosedForm {
    pub fn cf(&self, t: f64) -> Complex64 {
        match *self {
            ClosedForm::Delta { location } => Complex64::from_polar(1.0, location * t),
            ClosedForm::Binomial { trials, p } => {
                (p * Complex64::from_polar(1.0, t) + (1.0 - p)).powu(trials as u32)
            }
            ClosedForm::Poisson { mean } => (mean * (Complex64::from_polar(1.0, t) - 1.0)).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ClosedForm::Delta { location } => location,
            ClosedForm::Binomial { trials, p } => trials as f64 * p,
            ClosedForm::Poisson { mean } => mean,
        }
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Delta { location } => write!(f, "delta at {location}: exp(i {location} t)"),
            ClosedForm::Binomial { trials, p } => {
                write!(f, "binomial(K = {trials}, p = {p}): (p e^(it) + 1 - p)^K")
            }
            ClosedForm::Poisson { mean } => write!(f, "poisson(mean = {mean}): exp(mean (e^(it) - 1))"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialDistributionKind {
    /// Coefficient `theta0` at `n = 0` only; atom at `-c log(lambda u)`.
    Delta {
        lambda: f64,
        u: f64,
        c: f64,
        theta0: f64,
        sigma: f64,
    },
    /// `theta(j^k - 1) = binom(K, k) phi^k` with `c = -1/log j`.
    Binomial { j: u64, trials: u64, phi: f64, sigma: f64 },
    /// `theta(j^k - 1) = j^(a k) / k!` with `c = -1/log j`.
    Poisson { j: u64, a: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecialDistribution {
    pub config: ShintaniConfig,
    pub sigma: Vec<f64>,
    pub closed_form: ClosedForm,
}

fn rank_one(lambda: f64, u: f64, c: f64, theta: CoefficientSpec) -> ShintaniConfig {
    ShintaniConfig {
        d: 1,
        m: 1,
        r: 1,
        lambda: vec![vec![lambda]],
        u: vec![u],
        c: vec![vec![c]],
        theta,
    }
}

/// Builds the delta, binomial and Poisson constructions. With `unchecked` the
/// sigma ranges are not enforced; any sigma where the series converges works.
pub fn make_special_distribution(kind: SpecialDistributionKind, unchecked: bool) -> Result<SpecialDistribution> {
    let out = match kind {
        SpecialDistributionKind::Delta {
            lambda,
            u,
            c,
            theta0,
            sigma,
        } => {
            if !(lambda > 0.0 && u > 0.0) {
                return Err(Error::param("lambda", "lambda and u must be positive"));
            }
            if theta0 == 0.0 || !theta0.is_finite() {
                return Err(Error::param("theta0", "theta0 must be a nonzero real"));
            }
            if !unchecked && !(c * sigma > 1.0) {
                return Err(Error::param("sigma", "delta construction needs c sigma > 1"));
            }
            let theta = CoefficientSpec::finite_support(vec![(vec![0], Complex64::new(theta0, 0.0))]);
            SpecialDistribution {
                config: rank_one(lambda, u, c, theta),
                sigma: vec![sigma],
                closed_form: ClosedForm::Delta {
                    location: -c * (lambda * u).ln(),
                },
            }
        }
        SpecialDistributionKind::Binomial { j, trials, phi, sigma } => {
            let lj = check_base(j, sigma, unchecked)?;
            if trials == 0 || trials > u32::MAX as u64 {
                return Err(Error::param("trials", "K must be a positive integer"));
            }
            if !(phi > 0.0 && phi.is_finite()) {
                return Err(Error::param("phi", "phi must be positive"));
            }
            let mut entries = Vec::new();
            let mut binom = 1.0;
            for k in 0..=trials {
                if k > 0 {
                    binom *= (trials - k + 1) as f64 / k as f64;
                }
                let n = j
                    .checked_pow(k as u32)
                    .ok_or_else(|| Error::param("trials", "j^K exceeds the lattice range"))?;
                entries.push((vec![n - 1], Complex64::new(binom * phi.powi(k as i32), 0.0)));
            }
            let w = phi * (j as f64).powf(sigma / lj);
            SpecialDistribution {
                config: rank_one(1.0, 1.0, -1.0 / lj, CoefficientSpec::finite_support(entries)),
                sigma: vec![sigma],
                closed_form: ClosedForm::Binomial {
                    trials,
                    p: w / (1.0 + w),
                },
            }
        }
        SpecialDistributionKind::Poisson { j, a, sigma } => {
            let lj = check_base(j, sigma, unchecked)?;
            if !a.is_finite() {
                return Err(Error::param("a", "a must be finite"));
            }
            SpecialDistribution {
                config: rank_one(1.0, 1.0, -1.0 / lj, CoefficientSpec::lacunary_poisson(j, a)),
                sigma: vec![sigma],
                closed_form: ClosedForm::Poisson {
                    mean: (j as f64).powf(a + sigma / lj),
                },
            }
        }
    };
    Ok(out)
}

fn check_base(j: u64, sigma: f64, unchecked: bool) -> Result<f64> {
    if j < 2 {
        return Err(Error::param("j", "j must be an integer >= 2"));
    }
    if !sigma.is_finite() {
        return Err(Error::param("sigma", "sigma must be finite"));
    }
    let lj = (j as f64).ln();
    if !unchecked && !(sigma < -lj) {
        return Err(Error::param("sigma", "construction needs sigma < -log j"));
    }
    Ok(lj)
}
