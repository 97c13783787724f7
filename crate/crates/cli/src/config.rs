//! TOML run configuration.
//!
//! A document has a `[function]` table, an optional `[action]` table with the
//! parameters of the subcommand and an optional `[output]` table. Complex
//! numbers are written `[re, im]`. Axes are numbered from 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use zetadist_core::coefficients::{AxisCharacter, AxisFactor, CoefficientSpec, Envelope};
use zetadist_core::distributions::{make_special_distribution, SpecialDistribution, SpecialDistributionKind};
use zetadist_core::shintani::{differentiate, make_special, validate_config, ShintaniConfig, SpecialKind};
use zetadist_core::{AlphaRule, Complex64, EulerConfig, Violation};

use crate::error::CliError;

pub type C = [f64; 2];

fn c(z: C) -> Complex64 {
    Complex64::new(z[0], z[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub function: FunctionSpec,
    #[serde(default)]
    pub action: Action,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Shintani(ShintaniSpec),
    Euler(EulerSpec),
    Special(SpecialSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShintaniSpec {
    pub d: usize,
    pub m: usize,
    pub r: usize,
    pub lambda: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    #[serde(default = "ThetaSpec::one")]
    pub theta: ThetaSpec,
    /// Axes to differentiate along, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derivatives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    Constant {
        #[serde(default = "one")]
        value: C,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        envelope: Option<EnvelopeSpec>,
    },
    FiniteSupport {
        points: Vec<Vec<u64>>,
        values: Vec<C>,
    },
    Periodic {
        axis: usize,
        values: Vec<C>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        envelope: Option<EnvelopeSpec>,
    },
    Geometric {
        q: C,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        envelope: Option<EnvelopeSpec>,
    },
    CharacterProduct {
        factors: Vec<FactorSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        envelope: Option<EnvelopeSpec>,
    },
    LacunaryPoisson {
        base: u64,
        a: f64,
    },
}

fn one() -> C {
    [1.0, 0.0]
}

impl ThetaSpec {
    fn one() -> Self {
        ThetaSpec::Constant {
            value: one(),
            envelope: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub bound: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub character: CharacterSpec,
    #[serde(default)]
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CharacterSpec {
    Additive { v: f64 },
    Dirichlet { modulus: u64, values: Vec<f64> },
    Multiplicative { alpha: AlphaSpec },
    EulerCoefficient { alphas: Vec<AlphaSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSpec {
    Constant {
        value: C,
    },
    #[serde(rename = "chi_minus_4")]
    ChiMinus4,
    Character {
        modulus: u64,
        values: Vec<C>,
    },
    Table {
        primes: Vec<u64>,
        values: Vec<C>,
        #[serde(default)]
        default: C,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerSpec {
    pub d: usize,
    pub alpha: Vec<AlphaSpec>,
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub complex_mode: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecialSpec {
    Riemann,
    Hurwitz { u: f64 },
    Lerch { u: f64, v: f64 },
    LerchTranscendent { u: f64, q: C },
    EulerZagier { u: Vec<f64> },
    Barnes { lambda: Vec<f64>, u: f64 },
    GeneralizedBarnes { lambda: Vec<Vec<f64>>, u: Vec<f64> },
    RiemannDerivative,
    PartialZeta { terms: u64 },
    Delta {
        lambda: f64,
        u: f64,
        c: f64,
        theta0: f64,
        sigma: f64,
        #[serde(default)]
        unchecked: bool,
    },
    Binomial {
        j: u64,
        trials: u64,
        phi: f64,
        sigma: f64,
        #[serde(default)]
        unchecked: bool,
    },
    Poisson {
        j: u64,
        a: f64,
        sigma: f64,
        #[serde(default)]
        unchecked: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMode {
    #[default]
    Scan,
    Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    /// Evaluation point, one `[re, im]` per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<C>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<TGrid>,
    #[serde(default = "default_axis")]
    pub t_axis: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_cap")]
    pub shell_cap: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_prime_cutoff")]
    pub prime_cutoff: u64,
    #[serde(default = "default_power_cutoff")]
    pub power_cutoff: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    /// Factor whose coefficients `coeffs` lists; all factors when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    /// Moment orders reported by `dist`, one multi-index per entry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moments: Vec<Vec<u32>>,
    #[serde(default)]
    pub zeros: ZeroMode,
    /// `[re_lo, re_hi, im_lo, im_hi]` for the slice parameter `w`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectangle: Option<[f64; 4]>,
    /// Slice direction; `s(w) = s + w direction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<C>>,
}

fn default_axis() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-10
}
fn default_cap() -> u64 {
    zetadist_core::DEFAULT_SHELL_CAP
}
fn default_delta() -> f64 {
    1e-6
}
fn default_prime_cutoff() -> u64 {
    1_000_000
}
fn default_power_cutoff() -> u32 {
    40
}
fn default_count() -> usize {
    1000
}
fn default_n_max() -> u64 {
    20
}

impl Default for Action {
    fn default() -> Self {
        toml::from_str("").expect("every action field has a default")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Parses and validates a document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|sp| line_of(text, sp.start));
        CliError::Config {
            line,
            key: String::new(),
            message: e.message().to_string(),
        }
    })?;
    // Tagged enums let stray keys through in some shapes; anything the parsed
    // document does not write back out was not understood.
    let original: toml::Table = toml::from_str(text).expect("already parsed once");
    let echoed: toml::Table = toml::from_str(&to_toml(&cfg)).expect("serialized config parses");
    if let Some(key) = stray_key(&original, &echoed, "") {
        return Err(CliError::Config {
            line: locate(text, &key),
            key,
            message: "unknown key".into(),
        });
    }
    if let Some(v) = cfg.violations().into_iter().next() {
        return Err(CliError::Config {
            line: locate(text, &v.key),
            key: v.key,
            message: v.message,
        });
    }
    Ok(cfg)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run configs serialize")
}

fn stray_key(original: &toml::Table, echoed: &toml::Table, prefix: &str) -> Option<String> {
    for (k, v) in original {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (v, echoed.get(k)) {
            (toml::Value::Array(a), None) if a.is_empty() => {}
            (_, None) => return Some(path),
            (toml::Value::Table(a), Some(toml::Value::Table(b))) => {
                if let Some(p) = stray_key(a, b, &path) {
                    return Some(p);
                }
            }
            (toml::Value::Array(a), Some(toml::Value::Array(b))) => {
                for (i, (x, y)) in a.iter().zip(b).enumerate() {
                    if let (toml::Value::Table(x), toml::Value::Table(y)) = (x, y) {
                        if let Some(p) = stray_key(x, y, &format!("{path}[{i}]")) {
                            return Some(p);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    None
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first assignment to the last path segment of `key`.
fn locate(text: &str, key: &str) -> Option<usize> {
    let name = key.rsplit('.').next()?.split('[').next()?;
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(name).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn prefixed(prefix: &str, v: Vec<Violation>) -> Vec<Violation> {
    v.into_iter()
        .map(|x| Violation::new(format!("{prefix}.{}", x.key), x.message))
        .collect()
}

impl RunConfig {
    /// Constraint violations, with keys rooted at the document.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = match &self.function {
            FunctionSpec::Shintani(spec) => match spec.build() {
                Ok(_) => Vec::new(),
                Err(e) => prefixed("function", e),
            },
            FunctionSpec::Euler(spec) => prefixed("function", spec.build().validate()),
            FunctionSpec::Special(spec) => match spec.build() {
                Ok(_) => Vec::new(),
                Err(e) => vec![Violation::new(format!("function.{}", e.0), e.1)],
            },
        };
        let a = &self.action;
        if a.t_axis == 0 {
            v.push(Violation::new("action.t_axis", "axes are numbered from 1"));
        }
        if !(a.tol > 0.0) {
            v.push(Violation::new("action.tol", "tolerance must be positive"));
        }
        if a.shell_cap == 0 {
            v.push(Violation::new("action.shell_cap", "shell cap must be positive"));
        }
        if !(a.delta > 0.0 && a.delta < 1.0) {
            v.push(Violation::new("action.delta", "delta must lie in (0, 1)"));
        }
        if let Some(t) = &a.t {
            if !(t.step > 0.0) || !(t.start <= t.stop) {
                v.push(Violation::new("action.t", "t grid needs step > 0 and start <= stop"));
            }
        }
        if a.count == 0 {
            v.push(Violation::new("action.count", "sample count must be positive"));
        }
        if a.prime_cutoff < 2 {
            v.push(Violation::new("action.prime_cutoff", "prime cutoff must be at least 2"));
        }
        if a.power_cutoff == 0 {
            v.push(Violation::new("action.power_cutoff", "power cutoff must be at least 1"));
        }
        if a.component == Some(0) {
            v.push(Violation::new("action.component", "factors are numbered from 1"));
        }
        v
    }
}

fn envelope(spec: &CoefficientSpec, env: &Option<EnvelopeSpec>) -> CoefficientSpec {
    match env {
        Some(e) => spec.clone().with_envelope(Envelope::new(e.bound, e.eps)),
        None => spec.clone(),
    }
}

impl AlphaSpec {
    pub fn build(&self) -> AlphaRule {
        match self {
            AlphaSpec::Constant { value } => AlphaRule::Constant(c(*value)),
            AlphaSpec::ChiMinus4 => AlphaRule::chi_minus_4(),
            AlphaSpec::Character { modulus, values } => AlphaRule::Character {
                modulus: *modulus,
                values: values.iter().copied().map(c).collect(),
            },
            AlphaSpec::Table {
                primes,
                values,
                default,
            } => AlphaRule::Table {
                values: primes.iter().copied().zip(values.iter().copied().map(c)).collect::<BTreeMap<_, _>>(),
                default: c(*default),
            },
        }
    }
}

impl CharacterSpec {
    fn build(&self) -> AxisCharacter {
        match self {
            CharacterSpec::Additive { v } => AxisCharacter::Additive { v: *v },
            CharacterSpec::Dirichlet { modulus, values } => AxisCharacter::Dirichlet {
                modulus: *modulus,
                values: values.clone(),
            },
            CharacterSpec::Multiplicative { alpha } => AxisCharacter::Multiplicative { alpha: alpha.build() },
            CharacterSpec::EulerCoefficient { alphas } => AxisCharacter::EulerCoefficient {
                alphas: alphas.iter().map(AlphaSpec::build).collect(),
            },
        }
    }
}

impl ThetaSpec {
    pub fn build(&self) -> Result<CoefficientSpec, Vec<Violation>> {
        Ok(match self {
            ThetaSpec::Constant { value, envelope: e } => envelope(&CoefficientSpec::constant(c(*value)), e),
            ThetaSpec::FiniteSupport { points, values } => {
                if points.len() != values.len() {
                    return Err(vec![Violation::new(
                        "theta.values",
                        format!("expected {} values, one per point, got {}", points.len(), values.len()),
                    )]);
                }
                CoefficientSpec::finite_support(points.iter().cloned().zip(values.iter().copied().map(c)).collect())
            }
            ThetaSpec::Periodic { axis, values, envelope: e } => {
                if *axis == 0 {
                    return Err(vec![Violation::new("theta.axis", "axes are numbered from 1")]);
                }
                envelope(
                    &CoefficientSpec::from(zetadist_core::Family::Periodic {
                        axis: axis - 1,
                        values: values.iter().copied().map(c).collect(),
                    }),
                    e,
                )
            }
            ThetaSpec::Geometric { q, envelope: e } => envelope(&CoefficientSpec::geometric(c(*q)), e),
            ThetaSpec::CharacterProduct { factors, envelope: e } => envelope(
                &CoefficientSpec::character_product(
                    factors
                        .iter()
                        .map(|f| AxisFactor {
                            character: f.character.build(),
                            offset: f.offset,
                        })
                        .collect(),
                ),
                e,
            ),
            ThetaSpec::LacunaryPoisson { base, a } => CoefficientSpec::lacunary_poisson(*base, *a),
        })
    }
}

impl ShintaniSpec {
    pub fn build(&self) -> Result<ShintaniConfig, Vec<Violation>> {
        let theta = self.theta.build()?;
        let mut cfg = ShintaniConfig {
            d: self.d,
            m: self.m,
            r: self.r,
            lambda: self.lambda.clone(),
            u: self.u.clone(),
            c: self.c.clone(),
            theta,
        };
        let report = validate_config(&cfg);
        if !report.is_ok() {
            return Err(report.violations);
        }
        for &axis in &self.derivatives {
            if axis == 0 || axis > cfg.d {
                return Err(vec![Violation::new(
                    "derivatives",
                    format!("axis {axis} out of range 1..={}", cfg.d),
                )]);
            }
            cfg = differentiate(&cfg, axis - 1).map_err(|e| vec![Violation::new("derivatives", e.to_string())])?;
        }
        Ok(cfg)
    }
}

impl EulerSpec {
    pub fn build(&self) -> EulerConfig {
        EulerConfig {
            d: self.d,
            m: self.alpha.len(),
            alpha: self.alpha.iter().map(AlphaSpec::build).collect(),
            a: self.a.clone(),
            complex_mode: self.complex_mode,
        }
    }
}

/// A named construction: a plain function or a distribution with closed form.
pub enum Special {
    Function(ShintaniConfig),
    Distribution(SpecialDistribution),
}

impl SpecialSpec {
    /// On failure returns the offending parameter and the message.
    pub fn build(&self) -> Result<Special, (String, String)> {
        let kind = match self {
            SpecialSpec::Riemann => SpecialKind::Riemann,
            SpecialSpec::Hurwitz { u } => SpecialKind::Hurwitz { u: *u },
            SpecialSpec::Lerch { u, v } => SpecialKind::Lerch { u: *u, v: *v },
            SpecialSpec::LerchTranscendent { u, q } => SpecialKind::LerchTranscendent { u: *u, q: c(*q) },
            SpecialSpec::EulerZagier { u } => SpecialKind::EulerZagier { u: u.clone() },
            SpecialSpec::Barnes { lambda, u } => SpecialKind::Barnes {
                lambda: lambda.clone(),
                u: *u,
            },
            SpecialSpec::GeneralizedBarnes { lambda, u } => SpecialKind::GeneralizedBarnes {
                lambda: lambda.clone(),
                u: u.clone(),
            },
            SpecialSpec::RiemannDerivative => SpecialKind::RiemannDerivative,
            SpecialSpec::PartialZeta { terms } => SpecialKind::PartialZeta { terms: *terms },
            SpecialSpec::Delta {
                lambda,
                u,
                c,
                theta0,
                sigma,
                unchecked,
            } => {
                return distribution(
                    SpecialDistributionKind::Delta {
                        lambda: *lambda,
                        u: *u,
                        c: *c,
                        theta0: *theta0,
                        sigma: *sigma,
                    },
                    *unchecked,
                )
            }
            SpecialSpec::Binomial {
                j,
                trials,
                phi,
                sigma,
                unchecked,
            } => {
                return distribution(
                    SpecialDistributionKind::Binomial {
                        j: *j,
                        trials: *trials,
                        phi: *phi,
                        sigma: *sigma,
                    },
                    *unchecked,
                )
            }
            SpecialSpec::Poisson { j, a, sigma, unchecked } => {
                return distribution(
                    SpecialDistributionKind::Poisson {
                        j: *j,
                        a: *a,
                        sigma: *sigma,
                    },
                    *unchecked,
                )
            }
        };
        make_special(&kind).map(Special::Function).map_err(split_error)
    }
}

fn distribution(kind: SpecialDistributionKind, unchecked: bool) -> Result<Special, (String, String)> {
    make_special_distribution(kind, unchecked)
        .map(Special::Distribution)
        .map_err(split_error)
}

fn split_error(e: zetadist_core::Error) -> (String, String) {
    match e {
        zetadist_core::Error::InvalidParameter { key, message } => (key, message),
        zetadist_core::Error::InvalidConfig(v) if !v.is_empty() => (v[0].key.clone(), v[0].message.clone()),
        other => ("name".into(), other.to_string()),
    }
}
