//! Coefficient functions on the lattice `Z_{>=0}^r`.
//!
//! A [`CoefficientSpec`] is a serializable description of a coefficient
//! function together with an optional growth envelope
//! `|theta(n)| <= B (n_1 + .. + n_r + 1)^eps`. Built-in families derive their
//! envelope on demand; an explicit envelope overrides the derivation.

use std::collections::HashMap;
use std::f64::consts::{E, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::arith::{complete_homogeneous, factorize, multiplicative_table, AlphaRule};
use crate::error::{Error, Result, Violation};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Largest table precomputed for multiplicative axis factors.
const MAX_TABLE: u64 = 1 << 22;

/// Largest exponent a prime can carry in a `u64`.
const MAX_PRIME_EXPONENT: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub bound: f64,
    pub eps: f64,
}

impl Envelope {
    pub fn new(bound: f64, eps: f64) -> Self {
        Self { bound, eps }
    }

    /// Value of the envelope at a lattice point of total degree `degree`.
    pub fn at_degree(&self, degree: u64) -> f64 {
        self.bound * (degree as f64 + 1.0).powf(self.eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignClass {
    Nonnegative,
    Nonpositive,
    Mixed,
    Complex,
}

impl SignClass {
    pub fn is_definite(self) -> bool {
        matches!(self, SignClass::Nonnegative | SignClass::Nonpositive)
    }

    fn of_values<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> SignClass {
        let mut pos = false;
        let mut neg = false;
        for v in values {
            if v.im != 0.0 {
                return SignClass::Complex;
            }
            pos |= v.re > 0.0;
            neg |= v.re < 0.0;
        }
        match (pos, neg) {
            (_, false) => SignClass::Nonnegative,
            (false, true) => SignClass::Nonpositive,
            (true, true) => SignClass::Mixed,
        }
    }

    /// Sign class of a pointwise product.
    fn times(self, other: SignClass) -> SignClass {
        use SignClass::*;
        match (self, other) {
            (Complex, _) | (_, Complex) => Complex,
            (Mixed, _) | (_, Mixed) => Mixed,
            (Nonnegative, x) | (x, Nonnegative) => x,
            (Nonpositive, Nonpositive) => Nonnegative,
        }
    }
}

impl fmt::Display for SignClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SignClass::Nonnegative => "nonnegative",
            SignClass::Nonpositive => "nonpositive",
            SignClass::Mixed => "mixed",
            SignClass::Complex => "complex",
        };
        f.write_str(s)
    }
}

/// One-variable arithmetic function applied to `n_j + offset` on one axis.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisCharacter {
    /// `exp(2 pi i v n)`.
    Additive { v: f64 },
    /// `values[n mod modulus]`.
    Dirichlet { modulus: u64, values: Vec<f64> },
    /// Completely multiplicative function with `f(p) = alpha(p)`; `f(0) = 0`.
    Multiplicative { alpha: AlphaRule },
    /// Dirichlet coefficient of `prod_p prod_l (1 - alpha_l(p) p^-s)^-1`.
    EulerCoefficient { alphas: Vec<AlphaRule> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisFactor {
    pub character: AxisCharacter,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Constant {
        value: Complex64,
    },
    FiniteSupport {
        entries: Vec<(Vec<u64>, Complex64)>,
    },
    /// `values[n_axis mod len]`.
    Periodic {
        axis: usize,
        values: Vec<Complex64>,
    },
    /// `q^(n_1 + .. + n_r)` with `|q| < 1`.
    Geometric {
        q: Complex64,
    },
    /// `sum_q weights[q] * log(sum_j lambda[q][j] (n_j + u_j))`.
    LogFactor {
        weights: Vec<f64>,
        lambda: Vec<Vec<f64>>,
        u: Vec<f64>,
    },
    /// `prod_j chi_j(n_j + offset_j)`, one factor per axis.
    CharacterProduct {
        factors: Vec<AxisFactor>,
    },
    /// Rank one: `base^(a k) / k!` at `n = base^k - 1`, zero elsewhere.
    LacunaryPoisson {
        base: u64,
        a: f64,
    },
    Product {
        factors: Vec<CoefficientSpec>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub family: Family,
    pub envelope: Option<Envelope>,
}

/// Where a coefficient function can be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Dense,
    Finite(Vec<Vec<u64>>),
    Lacunary { base: u64 },
}

impl From<Family> for CoefficientSpec {
    fn from(family: Family) -> Self {
        CoefficientSpec {
            family,
            envelope: None,
        }
    }
}

impl CoefficientSpec {
    pub fn one() -> Self {
        Self::constant(ONE)
    }

    pub fn constant(value: Complex64) -> Self {
        Family::Constant { value }.into()
    }

    pub fn finite_support(entries: Vec<(Vec<u64>, Complex64)>) -> Self {
        Family::FiniteSupport { entries }.into()
    }

    pub fn geometric(q: Complex64) -> Self {
        Family::Geometric { q }.into()
    }

    pub fn log_factor(weights: Vec<f64>, lambda: Vec<Vec<f64>>, u: Vec<f64>) -> Self {
        Family::LogFactor { weights, lambda, u }.into()
    }

    pub fn character_product(factors: Vec<AxisFactor>) -> Self {
        Family::CharacterProduct { factors }.into()
    }

    pub fn lacunary_poisson(base: u64, a: f64) -> Self {
        Family::LacunaryPoisson { base, a }.into()
    }

    /// Pointwise product, flattening nested products without explicit envelopes.
    pub fn product(factors: Vec<CoefficientSpec>) -> Self {
        let mut flat = Vec::with_capacity(factors.len());
        for f in factors {
            match f {
                CoefficientSpec {
                    family: Family::Product { factors },
                    envelope: None,
                } => flat.extend(factors),
                other => flat.push(other),
            }
        }
        Family::Product { factors: flat }.into()
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = Some(envelope);
        self
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Constant { .. } => "constant",
            Family::FiniteSupport { .. } => "finite_support",
            Family::Periodic { .. } => "periodic",
            Family::Geometric { .. } => "geometric",
            Family::LogFactor { .. } => "log_factor",
            Family::CharacterProduct { .. } => "character_product",
            Family::LacunaryPoisson { .. } => "lacunary_poisson",
            Family::Product { .. } => "product_of_families",
        }
    }

    /// Structural checks against a lattice of rank `r`.
    pub fn check(&self, r: usize, key: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Some(env) = self.envelope {
            if !(env.bound >= 0.0 && env.bound.is_finite()) || !(env.eps >= 0.0 && env.eps.is_finite())
            {
                out.push(Violation::new(
                    format!("{key}.envelope"),
                    "envelope needs B >= 0 and eps >= 0",
                ));
            }
        }
        let pkey = format!("{key}.params");
        match &self.family {
            Family::Constant { value } => {
                if !finite(*value) {
                    out.push(Violation::new(pkey, "value must be finite"));
                }
            }
            Family::FiniteSupport { entries } => {
                for (point, value) in entries {
                    if point.len() != r {
                        out.push(Violation::new(
                            &pkey,
                            format!("support point {point:?} must have length r = {r}"),
                        ));
                    }
                    if !finite(*value) {
                        out.push(Violation::new(&pkey, "values must be finite"));
                    }
                }
            }
            Family::Periodic { axis, values } => {
                if *axis >= r {
                    out.push(Violation::new(&pkey, format!("axis {axis} out of range for r = {r}")));
                }
                if values.is_empty() {
                    out.push(Violation::new(&pkey, "periodic values must be nonempty"));
                }
            }
            Family::Geometric { q } => {
                if !(q.norm() < 1.0) {
                    out.push(Violation::new(pkey, "geometric ratio must satisfy |q| < 1"));
                }
            }
            Family::LogFactor { weights, lambda, u } => {
                if u.len() != r {
                    out.push(Violation::new(&pkey, format!("log_factor u must have length r = {r}")));
                }
                if lambda.len() != weights.len() {
                    out.push(Violation::new(&pkey, "log_factor needs one lambda row per weight"));
                }
                if u.iter().any(|&x| !(x > 0.0)) {
                    out.push(Violation::new(&pkey, "u_j must be positive"));
                }
                for row in lambda {
                    if row.len() != r {
                        out.push(Violation::new(&pkey, "log_factor lambda rows must have length r"));
                    }
                    if row.iter().any(|&x| !(x >= 0.0)) || !row.iter().any(|&x| x > 0.0) {
                        out.push(Violation::new(
                            &pkey,
                            "log_factor lambda rows must be nonnegative with a positive entry",
                        ));
                    }
                }
            }
            Family::CharacterProduct { factors } => {
                if factors.len() != r {
                    out.push(Violation::new(
                        &pkey,
                        format!("character_product needs r = {r} factors, got {}", factors.len()),
                    ));
                }
                for (j, f) in factors.iter().enumerate() {
                    let fk = format!("{pkey}.factors[{j}]");
                    match &f.character {
                        AxisCharacter::Additive { v } => {
                            if !v.is_finite() {
                                out.push(Violation::new(fk, "v must be finite"));
                            }
                        }
                        AxisCharacter::Dirichlet { modulus, values } => {
                            if *modulus == 0 || values.len() as u64 != *modulus {
                                out.push(Violation::new(
                                    fk,
                                    "dirichlet factor needs modulus > 0 and one value per residue",
                                ));
                            }
                        }
                        AxisCharacter::Multiplicative { alpha } => {
                            out.extend(alpha.check(&fk));
                        }
                        AxisCharacter::EulerCoefficient { alphas } => {
                            if alphas.is_empty() {
                                out.push(Violation::new(&fk, "euler_coefficient needs at least one rule"));
                            }
                            for a in alphas {
                                out.extend(a.check(&fk));
                            }
                        }
                    }
                }
            }
            Family::LacunaryPoisson { base, a } => {
                if r != 1 {
                    out.push(Violation::new(&pkey, "lacunary_poisson requires r = 1"));
                }
                if *base < 2 {
                    out.push(Violation::new(&pkey, "lacunary base must be at least 2"));
                }
                if !a.is_finite() {
                    out.push(Violation::new(&pkey, "a must be finite"));
                }
            }
            Family::Product { factors } => {
                if factors.is_empty() {
                    out.push(Violation::new(&pkey, "product needs at least one factor"));
                }
                for (i, f) in factors.iter().enumerate() {
                    out.extend(f.check(r, &format!("{key}.factors[{i}]")));
                }
            }
        }
        out
    }

    pub fn sign_class(&self) -> SignClass {
        match &self.family {
            Family::Constant { value } => SignClass::of_values([value]),
            Family::FiniteSupport { entries } => SignClass::of_values(entries.iter().map(|(_, v)| v)),
            Family::Periodic { values, .. } => SignClass::of_values(values),
            Family::Geometric { q } => {
                if q.im != 0.0 {
                    SignClass::Complex
                } else if q.re >= 0.0 {
                    SignClass::Nonnegative
                } else {
                    SignClass::Mixed
                }
            }
            Family::LogFactor { weights, lambda, u } => {
                let active: Vec<usize> = (0..weights.len()).filter(|&q| weights[q] != 0.0).collect();
                if active.is_empty() {
                    return SignClass::Nonnegative;
                }
                // log L_q >= 0 everywhere iff its minimum L_q(0) is at least one.
                let logs_nonneg = active.iter().all(|&q| {
                    let min: f64 = lambda[q].iter().zip(u).map(|(l, u)| l * u).sum();
                    min >= 1.0
                });
                if !logs_nonneg {
                    return SignClass::Mixed;
                }
                if active.iter().all(|&q| weights[q] > 0.0) {
                    SignClass::Nonnegative
                } else if active.iter().all(|&q| weights[q] < 0.0) {
                    SignClass::Nonpositive
                } else {
                    SignClass::Mixed
                }
            }
            Family::CharacterProduct { factors } => factors
                .iter()
                .map(|f| axis_sign_class(&f.character))
                .fold(SignClass::Nonnegative, SignClass::times),
            Family::LacunaryPoisson { .. } => SignClass::Nonnegative,
            Family::Product { factors } => factors
                .iter()
                .map(CoefficientSpec::sign_class)
                .fold(SignClass::Nonnegative, SignClass::times),
        }
    }

    pub fn support(&self) -> Support {
        match &self.family {
            Family::FiniteSupport { entries } => {
                Support::Finite(entries.iter().map(|(p, _)| p.clone()).collect())
            }
            Family::LacunaryPoisson { base, .. } => Support::Lacunary { base: *base },
            Family::Product { factors } => {
                let supports: Vec<Support> = factors.iter().map(CoefficientSpec::support).collect();
                if let Some(s) = supports.iter().find(|s| matches!(s, Support::Finite(_))) {
                    return s.clone();
                }
                if let Some(s) = supports.iter().find(|s| matches!(s, Support::Lacunary { .. })) {
                    return s.clone();
                }
                Support::Dense
            }
            _ => Support::Dense,
        }
    }

    /// `rho` such that `|theta(n)| <= B (|n|+1)^eps rho^|n|`; 1 when there is no decay.
    pub fn decay_rate(&self) -> f64 {
        match &self.family {
            Family::Geometric { q } => q.norm(),
            Family::Product { factors } => factors.iter().map(CoefficientSpec::decay_rate).product(),
            _ => 1.0,
        }
    }

    /// True when the envelope exponent can be chosen freely (log factors).
    fn flexible(&self) -> bool {
        if self.envelope.is_some() {
            return false;
        }
        match &self.family {
            Family::LogFactor { weights, .. } => weights.iter().any(|&w| w != 0.0),
            Family::Product { factors } => factors.iter().any(CoefficientSpec::flexible),
            _ => false,
        }
    }

    /// An envelope whose exponent does not exceed `budget`.
    pub fn envelope_within(&self, budget: f64) -> Result<Envelope> {
        if let Some(env) = self.envelope {
            if env.eps <= budget {
                return Ok(env);
            }
            return Err(Error::NoCertifiedBound(format!(
                "envelope exponent {} is not below the available slack {}",
                env.eps, budget
            )));
        }
        let env = match &self.family {
            Family::Constant { value } => Envelope::new(value.norm(), 0.0),
            Family::FiniteSupport { entries } => {
                Envelope::new(entries.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max), 0.0)
            }
            Family::Periodic { values, .. } => {
                Envelope::new(values.iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0)
            }
            Family::Geometric { .. } => Envelope::new(1.0, 0.0),
            Family::LogFactor { weights, lambda, u } => {
                if weights.iter().all(|&w| w == 0.0) {
                    return Ok(Envelope::new(0.0, 0.0));
                }
                if !(budget > 0.0) {
                    return Err(Error::NoCertifiedBound(
                        "a logarithmic coefficient needs a positive envelope exponent".into(),
                    ));
                }
                let eps = budget.min(1.0);
                log_factor_envelope(weights, lambda, u, eps)
            }
            Family::CharacterProduct { factors } => {
                let bound = factors
                    .iter()
                    .map(|f| match &f.character {
                        AxisCharacter::Additive { .. } => 1.0,
                        AxisCharacter::Dirichlet { values, .. } => {
                            values.iter().map(|v| v.abs()).fold(0.0, f64::max)
                        }
                        AxisCharacter::Multiplicative { .. } => 1.0,
                        AxisCharacter::EulerCoefficient { .. } => f64::NAN,
                    })
                    .product::<f64>();
                if bound.is_nan() {
                    return euler_coefficient_envelope(factors, budget);
                }
                Envelope::new(bound, 0.0)
            }
            Family::LacunaryPoisson { base, a } => Envelope::new(lacunary_sup(*base, *a), 0.0),
            Family::Product { factors } => {
                let mut fixed = Vec::new();
                let mut fixed_eps = 0.0;
                let n_flex = factors.iter().filter(|f| f.flexible()).count();
                for f in factors.iter().filter(|f| !f.flexible()) {
                    let e = f.envelope_within(budget)?;
                    fixed_eps += e.eps;
                    fixed.push(e);
                }
                let mut bound: f64 = fixed.iter().map(|e| e.bound).product();
                let mut eps = fixed_eps;
                if n_flex > 0 {
                    let share = (budget - fixed_eps) / n_flex as f64;
                    for f in factors.iter().filter(|f| f.flexible()) {
                        let e = f.envelope_within(share)?;
                        bound *= e.bound;
                        eps += e.eps;
                    }
                }
                Envelope::new(bound, eps)
            }
        };
        if env.eps > budget {
            return Err(Error::NoCertifiedBound(format!(
                "coefficient growth exponent {} is not below the available slack {}",
                env.eps, budget
            )));
        }
        Ok(env)
    }

    /// Splits a lacunary coefficient into `(base, a, envelope of the remaining factors)`.
    pub(crate) fn lacunary_parts(&self) -> Option<(u64, f64, Envelope)> {
        match &self.family {
            Family::LacunaryPoisson { base, a } => Some((*base, *a, Envelope::new(1.0, 0.0))),
            Family::Product { factors } => {
                let idx = factors
                    .iter()
                    .position(|f| matches!(f.family, Family::LacunaryPoisson { .. }))?;
                let Family::LacunaryPoisson { base, a } = factors[idx].family else {
                    unreachable!()
                };
                let rest: Vec<CoefficientSpec> = factors
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != idx)
                    .map(|(_, f)| f.clone())
                    .collect();
                let env = if rest.is_empty() {
                    Envelope::new(1.0, 0.0)
                } else {
                    CoefficientSpec::product(rest).envelope_within(1.0).ok()?
                };
                Some((base, a, env))
            }
            _ => None,
        }
    }

    /// For rank one, the coefficient as a polynomial in `log(n + u)`, when it is one.
    pub(crate) fn log_polynomial(&self, u: f64) -> Option<Vec<Complex64>> {
        match &self.family {
            Family::Constant { value } => Some(vec![*value]),
            Family::LogFactor {
                weights,
                lambda,
                u: lu,
            } => {
                if lu.len() != 1 || (lu[0] - u).abs() > 1e-15 * u.abs().max(1.0) {
                    return None;
                }
                let slope: f64 = weights.iter().sum();
                let constant: f64 = weights
                    .iter()
                    .zip(lambda)
                    .map(|(w, row)| if *w == 0.0 { 0.0 } else { w * row[0].ln() })
                    .sum();
                Some(vec![Complex64::new(constant, 0.0), Complex64::new(slope, 0.0)])
            }
            Family::Product { factors } => {
                let mut acc = vec![ONE];
                for f in factors {
                    let p = f.log_polynomial(u)?;
                    acc = poly_mul(&acc, &p);
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Evaluates a single coefficient. Use [`CoefficientSpec::prepare`] for bulk evaluation.
    pub fn value(&self, n: &[u64]) -> Complex64 {
        Node::build(self, 0).value(n)
    }

    /// Compiles the coefficient with lookup tables sized for indices up to `max_index`.
    pub fn prepare(&self, max_index: u64) -> PreparedCoefficients {
        PreparedCoefficients {
            node: Node::build(self, max_index.min(MAX_TABLE)),
        }
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn axis_sign_class(ch: &AxisCharacter) -> SignClass {
    match ch {
        AxisCharacter::Additive { v } => {
            if v.fract() == 0.0 {
                SignClass::Nonnegative
            } else if (2.0 * v).fract() == 0.0 {
                SignClass::Mixed
            } else {
                SignClass::Complex
            }
        }
        AxisCharacter::Dirichlet { values, .. } => {
            let vals: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            SignClass::of_values(&vals)
        }
        AxisCharacter::Multiplicative { alpha } => {
            let vals = alpha.value_set();
            match SignClass::of_values(&vals) {
                SignClass::Nonpositive => SignClass::Mixed,
                other => other,
            }
        }
        AxisCharacter::EulerCoefficient { alphas } => euler_coefficient_sign(alphas),
    }
}

/// Every tuple `(alpha_1(p), .., alpha_m(p))` the rules can produce, as a superset.
fn alpha_tuples(alphas: &[AlphaRule]) -> Vec<Vec<Complex64>> {
    let mut modulus: u64 = 1;
    let mut explicit = Vec::new();
    for a in alphas {
        match a {
            AlphaRule::Character { modulus: q, .. } => modulus = lcm(modulus, *q).min(1 << 16),
            AlphaRule::Table { values, .. } => explicit.extend(values.keys().copied()),
            AlphaRule::Constant(_) => {}
        }
    }
    let default_at = |rule: &AlphaRule, residue: u64| match rule {
        AlphaRule::Table { default, .. } => *default,
        other => other.at(residue),
    };
    let mut tuples: Vec<Vec<Complex64>> = (0..modulus)
        .map(|res| alphas.iter().map(|a| default_at(a, res)).collect())
        .collect();
    for p in explicit {
        tuples.push(alphas.iter().map(|a| a.at(p)).collect());
    }
    tuples
}

fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

fn euler_coefficient_sign(alphas: &[AlphaRule]) -> SignClass {
    let mut class = SignClass::Nonnegative;
    for tuple in alpha_tuples(alphas) {
        let h = complete_homogeneous(&tuple, MAX_PRIME_EXPONENT);
        match SignClass::of_values(&h[1..]) {
            SignClass::Nonnegative => {}
            SignClass::Complex => return SignClass::Complex,
            // A(1) = 1 > 0, so any negative local factor makes the sign mixed.
            _ => class = SignClass::Mixed,
        }
    }
    class
}

fn euler_coefficient_envelope(factors: &[AxisFactor], budget: f64) -> Result<Envelope> {
    let mut bound = 1.0;
    let mut eps = 0.0;
    let degrees: Vec<usize> = factors
        .iter()
        .filter_map(|f| match &f.character {
            AxisCharacter::EulerCoefficient { alphas } if alphas.len() > 1 => Some(alphas.len()),
            _ => None,
        })
        .collect();
    let share = if degrees.is_empty() {
        0.0
    } else {
        budget / degrees.len() as f64
    };
    for f in factors {
        match &f.character {
            AxisCharacter::EulerCoefficient { alphas } if alphas.len() > 1 => {
                // |A(k)| <= d_m(k) <= C k^e, and k = n + offset <= max(offset, 1) (n + 1).
                let m = alphas.len();
                let e = share.min((m - 1) as f64);
                if !(e > 0.0) {
                    return Err(Error::NoCertifiedBound(
                        "Euler coefficients of degree above one need a positive envelope exponent"
                            .into(),
                    ));
                }
                let c = divisor_constant(m, e).ok_or_else(|| {
                    Error::NoCertifiedBound(format!(
                        "divisor bound constant for exponent {e} is too expensive to compute"
                    ))
                })?;
                bound *= c * (f.offset.max(1) as f64).powf(e);
                eps += e;
            }
            AxisCharacter::Dirichlet { values, .. } => {
                bound *= values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            }
            _ => {}
        }
    }
    Ok(Envelope::new(bound, eps))
}

/// Smallest `C` with `d_m(k) <= C k^e` for every `k >= 1`, where `d_m` counts
/// ordered factorizations into `m` factors.
///
/// `d_m` is multiplicative with `d_m(p^j) = binom(j + m - 1, m - 1)`, so the
/// constant is a product of per-prime maxima; primes `p >= m^(1/e)` contribute 1.
/// Exponents stop at 63, the largest a prime power below `2^64` can carry.
fn divisor_constant(m: usize, e: f64) -> Option<f64> {
    let cutoff = (m as f64).powf(1.0 / e);
    if !(cutoff < 1e7) {
        return None;
    }
    let mut log_c = 0.0;
    let limit = cutoff.ceil() as u64;
    if limit < 2 {
        return Some(1.0);
    }
    for &p in crate::arith::sieve_primes(limit).ok()?.primes() {
        let lp = (p as f64).ln();
        let mut best: f64 = 0.0;
        let mut log_binom = 0.0;
        for j in 1..=MAX_PRIME_EXPONENT {
            // binom(j + m - 1, m - 1) / binom(j + m - 2, m - 1) = (j + m - 1) / j
            log_binom += ((j + m - 1) as f64 / j as f64).ln();
            let v = log_binom - j as f64 * e * lp;
            best = best.max(v);
        }
        log_c += best;
    }
    // Guard against rounding in the accumulated logarithms.
    Some(log_c.exp() * (1.0 + 1e-12))
}

/// `|sum_q w_q log L_q(n)| <= B (|n| + 1)^eps` using `log x <= x^eps / (e eps)` for `x >= 1`.
fn log_factor_envelope(weights: &[f64], lambda: &[Vec<f64>], u: &[f64], eps: f64) -> Envelope {
    let u_sum: f64 = u.iter().sum();
    let bound = weights
        .iter()
        .zip(lambda)
        .filter(|(w, _)| **w != 0.0)
        .map(|(w, row)| {
            let l_min: f64 = row.iter().zip(u).map(|(l, u)| l * u).sum();
            let l_max = row.iter().copied().fold(0.0, f64::max);
            let k = l_max * u_sum.max(1.0);
            w.abs() * (l_min.ln().abs() + k.ln().abs() + 1.0 / (E * eps))
        })
        .sum();
    Envelope::new(bound, eps)
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn lacunary_weight(base: u64, a: f64, k: u64) -> f64 {
    (a * k as f64 * (base as f64).ln() - ln_factorial(k)).exp()
}

fn lacunary_sup(base: u64, a: f64) -> f64 {
    // The ratio of consecutive weights is base^a / (k + 1), so the maximum is
    // reached once that ratio drops below one.
    let growth = (a * (base as f64).ln()).exp();
    let mut best: f64 = 1.0;
    let mut k = 0u64;
    loop {
        best = best.max(lacunary_weight(base, a, k));
        if growth / ((k + 1) as f64) < 1.0 {
            return best;
        }
        k += 1;
    }
}

/// Exponent `k` with `n + 1 = base^k`, if any.
pub(crate) fn lacunary_index(base: u64, n: u64) -> Option<u64> {
    let mut m = n.checked_add(1)?;
    let mut k = 0;
    while m % base == 0 {
        m /= base;
        k += 1;
    }
    (m == 1).then_some(k)
}

/// A coefficient compiled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedCoefficients {
    node: Node,
}

impl PreparedCoefficients {
    #[inline]
    pub fn value(&self, n: &[u64]) -> Complex64 {
        self.node.value(n)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Constant(Complex64),
    Finite(HashMap<Vec<u64>, Complex64>),
    Periodic {
        axis: usize,
        values: Vec<Complex64>,
    },
    Geometric(Complex64),
    LogFactor {
        weights: Vec<f64>,
        lambda: Vec<Vec<f64>>,
        u: Vec<f64>,
    },
    Characters(Vec<PreparedAxis>),
    Lacunary {
        base: u64,
        a: f64,
    },
    Product(Vec<Node>),
}

#[derive(Debug, Clone)]
struct PreparedAxis {
    offset: u64,
    kind: AxisKind,
}

#[derive(Debug, Clone)]
enum AxisKind {
    Additive(f64),
    Dirichlet(Vec<f64>),
    Tabulated {
        table: Vec<Complex64>,
        character: AxisCharacter,
    },
}

impl Node {
    fn build(spec: &CoefficientSpec, max_index: u64) -> Node {
        match &spec.family {
            Family::Constant { value } => Node::Constant(*value),
            Family::FiniteSupport { entries } => {
                let mut map = HashMap::new();
                for (p, v) in entries {
                    *map.entry(p.clone()).or_insert(ZERO) += v;
                }
                Node::Finite(map)
            }
            Family::Periodic { axis, values } => Node::Periodic {
                axis: *axis,
                values: values.clone(),
            },
            Family::Geometric { q } => Node::Geometric(*q),
            Family::LogFactor { weights, lambda, u } => Node::LogFactor {
                weights: weights.clone(),
                lambda: lambda.clone(),
                u: u.clone(),
            },
            Family::CharacterProduct { factors } => Node::Characters(
                factors
                    .iter()
                    .map(|f| PreparedAxis {
                        offset: f.offset,
                        kind: match &f.character {
                            AxisCharacter::Additive { v } => AxisKind::Additive(*v),
                            AxisCharacter::Dirichlet { values, .. } => AxisKind::Dirichlet(values.clone()),
                            other => {
                                let limit = if max_index == 0 {
                                    0
                                } else {
                                    (max_index + f.offset).min(MAX_TABLE) as usize
                                };
                                AxisKind::Tabulated {
                                    table: tabulate(other, limit),
                                    character: other.clone(),
                                }
                            }
                        },
                    })
                    .collect(),
            ),
            Family::LacunaryPoisson { base, a } => Node::Lacunary { base: *base, a: *a },
            Family::Product { factors } => {
                Node::Product(factors.iter().map(|f| Node::build(f, max_index)).collect())
            }
        }
    }

    fn value(&self, n: &[u64]) -> Complex64 {
        match self {
            Node::Constant(v) => *v,
            Node::Finite(map) => map.get(n).copied().unwrap_or(ZERO),
            Node::Periodic { axis, values } => values[(n[*axis] % values.len() as u64) as usize],
            Node::Geometric(q) => {
                let k: u64 = n.iter().sum();
                if k == 0 {
                    ONE
                } else {
                    q.powf(k as f64)
                }
            }
            Node::LogFactor { weights, lambda, u } => {
                let mut acc = 0.0;
                for (w, row) in weights.iter().zip(lambda) {
                    if *w == 0.0 {
                        continue;
                    }
                    let l: f64 = row
                        .iter()
                        .zip(n.iter().zip(u))
                        .map(|(lam, (nj, uj))| lam * (*nj as f64 + uj))
                        .sum();
                    acc += w * l.ln();
                }
                Complex64::new(acc, 0.0)
            }
            Node::Characters(axes) => {
                let mut acc = ONE;
                for (axis, &nj) in axes.iter().zip(n) {
                    let arg = nj + axis.offset;
                    let v = match &axis.kind {
                        AxisKind::Additive(v) => {
                            // Reduce v*arg modulo one before scaling to keep the phase accurate.
                            let phase = (v.fract() * arg as f64).fract();
                            Complex64::from_polar(1.0, TAU * phase)
                        }
                        AxisKind::Dirichlet(values) => {
                            Complex64::new(values[(arg % values.len() as u64) as usize], 0.0)
                        }
                        AxisKind::Tabulated { table, character } => match table.get(arg as usize) {
                            Some(v) => *v,
                            None => axis_value(character, arg),
                        },
                    };
                    if v == ZERO {
                        return ZERO;
                    }
                    acc *= v;
                }
                acc
            }
            Node::Lacunary { base, a } => match lacunary_index(*base, n[0]) {
                Some(k) => Complex64::new(lacunary_weight(*base, *a, k), 0.0),
                None => ZERO,
            },
            Node::Product(nodes) => {
                let mut acc = ONE;
                for node in nodes {
                    let v = node.value(n);
                    if v == ZERO {
                        return ZERO;
                    }
                    acc *= v;
                }
                acc
            }
        }
    }
}

/// Direct evaluation of a multiplicative axis character at `m`.
fn axis_value(ch: &AxisCharacter, m: u64) -> Complex64 {
    if m == 0 {
        return ZERO;
    }
    match ch {
        AxisCharacter::Multiplicative { alpha } => factorize(m)
            .into_iter()
            .map(|(p, k)| alpha.at(p).powu(k))
            .product(),
        AxisCharacter::EulerCoefficient { alphas } => factorize(m)
            .into_iter()
            .map(|(p, k)| {
                let tuple: Vec<Complex64> = alphas.iter().map(|a| a.at(p)).collect();
                complete_homogeneous(&tuple, k as usize)[k as usize]
            })
            .product(),
        AxisCharacter::Additive { .. } | AxisCharacter::Dirichlet { .. } => {
            unreachable!("periodic characters are never tabulated")
        }
    }
}

fn tabulate(ch: &AxisCharacter, limit: usize) -> Vec<Complex64> {
    match ch {
        AxisCharacter::Multiplicative { alpha } => {
            multiplicative_table(limit, |p, k| alpha.at(p).powu(k))
        }
        AxisCharacter::EulerCoefficient { alphas } => multiplicative_table(limit, |p, k| {
            let tuple: Vec<Complex64> = alphas.iter().map(|a| a.at(p)).collect();
            complete_homogeneous(&tuple, k as usize)[k as usize]
        }),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn dedekind() -> CoefficientSpec {
        CoefficientSpec::character_product(vec![AxisFactor {
            character: AxisCharacter::EulerCoefficient {
                alphas: vec![AlphaRule::principal(), AlphaRule::chi_minus_4()],
            },
            offset: 1,
        }])
    }

    #[test]
    fn sign_classes() {
        assert_eq!(CoefficientSpec::one().sign_class(), SignClass::Nonnegative);
        assert_eq!(CoefficientSpec::constant(c(-2.0)).sign_class(), SignClass::Nonpositive);
        let poly = CoefficientSpec::finite_support(vec![(vec![0], c(1.0)), (vec![1], c(-2.0))]);
        assert_eq!(poly.sign_class(), SignClass::Mixed);
        assert_eq!(
            CoefficientSpec::geometric(Complex64::new(0.0, 0.5)).sign_class(),
            SignClass::Complex
        );
        // -log(n + 1) is nonpositive because log(n + 1) >= 0.
        let dlog = CoefficientSpec::log_factor(vec![-1.0], vec![vec![1.0]], vec![1.0]);
        assert_eq!(dlog.sign_class(), SignClass::Nonpositive);
        // log(n + 1/2) changes sign at n = 0.
        let mixed = CoefficientSpec::log_factor(vec![1.0], vec![vec![1.0]], vec![0.5]);
        assert_eq!(mixed.sign_class(), SignClass::Mixed);
        assert_eq!(
            CoefficientSpec::product(vec![CoefficientSpec::constant(c(-1.0)), dlog]).sign_class(),
            SignClass::Nonnegative
        );
        assert_eq!(dedekind().sign_class(), SignClass::Nonnegative);
    }

    #[test]
    fn dedekind_coefficients_from_euler_factors() {
        let spec = dedekind().prepare(40);
        let got: Vec<f64> = (0..10).map(|n| spec.value(&[n]).re).collect();
        assert_eq!(got, vec![1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0, 1.0, 2.0]);
        // Tabulated and direct paths agree beyond the table.
        let small = dedekind().prepare(3);
        for n in 0..200 {
            assert_eq!(small.value(&[n]), dedekind().prepare(300).value(&[n]));
        }
    }

    #[test]
    fn lacunary_values() {
        let spec = CoefficientSpec::lacunary_poisson(2, 0.0);
        assert_eq!(spec.value(&[0]).re, 1.0);
        assert_eq!(spec.value(&[1]).re, 1.0);
        assert_eq!(spec.value(&[2]).re, 0.0);
        assert!((spec.value(&[7]).re - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(lacunary_sup(2, 0.0), 1.0);
        // 4^k / k! peaks at k = 3, 4 with value 32/3.
        assert!((lacunary_sup(2, 2.0) - 32.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn additive_phase_stays_accurate_for_large_indices() {
        let spec = CoefficientSpec::character_product(vec![AxisFactor {
            character: AxisCharacter::Additive { v: 0.25 },
            offset: 0,
        }]);
        let v = spec.value(&[4_000_000_001]);
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn log_polynomial_of_product() {
        let lf = CoefficientSpec::log_factor(vec![-1.0], vec![vec![2.0]], vec![1.0]);
        let spec = CoefficientSpec::product(vec![lf.clone(), lf]);
        let poly = spec.log_polynomial(1.0).unwrap();
        // (-(log 2 + y))^2 = log^2 2 + 2 log 2 y + y^2
        let l2 = 2f64.ln();
        assert!((poly[0].re - l2 * l2).abs() < 1e-15);
        assert!((poly[1].re - 2.0 * l2).abs() < 1e-15);
        assert!((poly[2].re - 1.0).abs() < 1e-15);
        assert!(spec.log_polynomial(0.5).is_none());
    }

    #[test]
    fn explicit_envelope_respects_budget() {
        let spec = CoefficientSpec::one().with_envelope(Envelope::new(1.0, 0.1));
        assert!(spec.envelope_within(0.2).is_ok());
        assert!(matches!(spec.envelope_within(0.0005), Err(Error::NoCertifiedBound(_))));
    }

    fn sample_spec() -> impl Strategy<Value = (CoefficientSpec, usize)> {
        prop_oneof![
            (1usize..4).prop_map(|r| {
                let lambda = vec![vec![1.0; r], vec![0.5; r]];
                (CoefficientSpec::log_factor(vec![-1.0, 2.0], lambda, vec![0.75; r]), r)
            }),
            (1usize..4).prop_map(|r| {
                let lambda = vec![vec![1.0; r]];
                let lf = CoefficientSpec::log_factor(vec![1.5], lambda, vec![1.0; r]);
                (CoefficientSpec::product(vec![lf.clone(), lf]), r)
            }),
            Just((dedekind(), 1)),
            Just((CoefficientSpec::lacunary_poisson(3, 1.0), 1)),
            (-0.9f64..0.9).prop_map(|q| (CoefficientSpec::geometric(c(q)), 2)),
        ]
    }

    proptest! {
        #[test]
        fn envelope_holds_on_sampled_points(
            (spec, r) in sample_spec(),
            budget in 0.05f64..1.0,
            point in proptest::collection::vec(0u64..5000, 3),
        ) {
            let n = &point[..r];
            let env = spec.envelope_within(budget.max(1.0)).unwrap();
            let degree: u64 = n.iter().sum();
            let v = spec.value(n).norm();
            prop_assert!(v <= env.at_degree(degree) * (1.0 + 1e-12), "{v} > {:?}", env);
            if let Ok(env) = spec.envelope_within(budget) {
                prop_assert!(env.eps <= budget);
                prop_assert!(v <= env.at_degree(degree) * (1.0 + 1e-12));
            }
        }
    }
}
