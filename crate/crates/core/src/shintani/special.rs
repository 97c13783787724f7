use num_complex::Complex64;

use super::{differentiate, validate_config, ShintaniConfig};
use crate::coefficients::{AxisCharacter, AxisFactor, CoefficientSpec};
use crate::error::{Error, Result};

/// Named functions expressible as Shintani zeta functions.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecialKind {
    /// `zeta(s)`.
    Riemann,
    /// `zeta(s, u) = sum (n + u)^-s`, `0 < u <= 1`.
    Hurwitz { u: f64 },
    /// `sum e^(2 pi i v n) (n + u)^-s`.
    Lerch { u: f64, v: f64 },
    /// `sum q^n (n + u)^-s`, `0 < |q| < 1`.
    LerchTranscendent { u: f64, q: Complex64 },
    /// `sum_{n_1 > .. > n_r > 0} prod_l (n_l + u_l)^(-s_l)`, with `r = u.len()`.
    EulerZagier { u: Vec<f64> },
    /// `sum (lambda_1 n_1 + .. + lambda_r n_r + u)^-s`.
    Barnes { lambda: Vec<f64>, u: f64 },
    /// `sum prod_l (sum_j lambda_lj (n_j + u_j))^(-s_l)`, one variable per form.
    GeneralizedBarnes { lambda: Vec<Vec<f64>>, u: Vec<f64> },
    /// `zeta'(s)`.
    RiemannDerivative,
    /// `sum_{n=1}^{terms} n^-s`.
    PartialZeta { terms: u64 },
}

fn one_dim(u: f64, theta: CoefficientSpec) -> ShintaniConfig {
    ShintaniConfig {
        d: 1,
        m: 1,
        r: 1,
        lambda: vec![vec![1.0]],
        u: vec![u],
        c: vec![vec![1.0]],
        theta,
    }
}

fn unit_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|l| (0..n).map(|j| if j == l { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn make_special(kind: &SpecialKind) -> Result<ShintaniConfig> {
    let cfg = match kind {
        SpecialKind::Riemann => one_dim(1.0, CoefficientSpec::one()),
        SpecialKind::Hurwitz { u } => {
            if !(*u > 0.0 && *u <= 1.0) {
                return Err(Error::param("u", "hurwitz shift must satisfy 0 < u <= 1"));
            }
            one_dim(*u, CoefficientSpec::one())
        }
        SpecialKind::Lerch { u, v } => {
            if !v.is_finite() {
                return Err(Error::param("v", "v must be finite"));
            }
            one_dim(
                *u,
                CoefficientSpec::character_product(vec![AxisFactor {
                    character: AxisCharacter::Additive { v: *v },
                    offset: 0,
                }]),
            )
        }
        SpecialKind::LerchTranscendent { u, q } => {
            let a = q.norm();
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::param("q", "lerch transcendent needs 0 < |q| < 1"));
            }
            one_dim(*u, CoefficientSpec::geometric(*q))
        }
        SpecialKind::EulerZagier { u } => {
            let r = u.len();
            if r == 0 {
                return Err(Error::param("u", "euler_zagier needs at least one shift"));
            }
            // n_l = m_l + .. + m_r with m_j >= 1, so n_l + u_l = sum_{j >= l} (m_j - 1 + u'_j)
            // where u'_j = 1 + u_j - u_{j+1} and u'_r = 1 + u_r.
            let shifted: Vec<f64> = (0..r)
                .map(|l| 1.0 + u[l] - if l + 1 < r { u[l + 1] } else { 0.0 })
                .collect();
            if let Some(l) = shifted.iter().position(|&x| !(x > 0.0)) {
                return Err(Error::param(
                    "u",
                    format!("shifts give a nonpositive lattice offset at index {l}"),
                ));
            }
            ShintaniConfig {
                d: r,
                m: r,
                r,
                lambda: (0..r)
                    .map(|l| (0..r).map(|j| if j >= l { 1.0 } else { 0.0 }).collect())
                    .collect(),
                u: shifted,
                c: unit_vectors(r),
                theta: CoefficientSpec::one(),
            }
        }
        SpecialKind::Barnes { lambda, u } => {
            let r = lambda.len();
            if r == 0 || lambda.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::param("lambda", "barnes weights must be positive"));
            }
            if !(*u > 0.0) {
                return Err(Error::param("u", "barnes shift must be positive"));
            }
            ShintaniConfig {
                d: 1,
                m: 1,
                r,
                lambda: vec![lambda.clone()],
                u: lambda.iter().map(|l| u / (r as f64 * l)).collect(),
                c: vec![vec![1.0]],
                theta: CoefficientSpec::one(),
            }
        }
        SpecialKind::GeneralizedBarnes { lambda, u } => {
            let m = lambda.len();
            ShintaniConfig {
                d: m,
                m,
                r: u.len(),
                lambda: lambda.clone(),
                u: u.clone(),
                c: unit_vectors(m),
                theta: CoefficientSpec::one(),
            }
        }
        SpecialKind::RiemannDerivative => differentiate(&make_special(&SpecialKind::Riemann)?, 0)?,
        SpecialKind::PartialZeta { terms } => {
            if *terms == 0 {
                return Err(Error::param("terms", "partial zeta needs at least one term"));
            }
            let entries = (0..*terms)
                .map(|n| (vec![n], Complex64::new(1.0, 0.0)))
                .collect();
            one_dim(1.0, CoefficientSpec::finite_support(entries))
        }
    };
    validate_config(&cfg).into_result()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shintani::{evaluate, ComplexPoint};

    const CAP: u64 = 1_000_000;

    #[test]
    fn hurwitz_one_is_riemann() {
        let s = ComplexPoint::real(vec![3.0]);
        let a = evaluate(&make_special(&SpecialKind::Hurwitz { u: 1.0 }).unwrap(), &s, 1e-12, CAP)
            .unwrap();
        let b = evaluate(&make_special(&SpecialKind::Riemann).unwrap(), &s, 1e-12, CAP).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn lerch_with_zero_frequency_is_zeta() {
        let s = ComplexPoint::real(vec![2.0]);
        let cfg = make_special(&SpecialKind::Lerch { u: 1.0, v: 0.0 }).unwrap();
        // v = 0 keeps theta a character product, so this takes the plain shell route.
        let r = evaluate(&cfg, &s, 1e-5, CAP).unwrap();
        assert!(r.certified);
        assert!((r.value.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-5);
    }

    #[test]
    fn euler_zagier_matches_nested_sum() {
        // Oracle: sum_{n1 > n2 > 0} (n1 + 1)^-3 (n2 + 1)^-2, with an integral tail
        // for the inner sum over n1 and outer truncation at 10^4.
        let depth = 10_000u64;
        let mut oracle = 0.0;
        for n2 in (1..depth).rev() {
            let y2 = (n2 + 1) as f64;
            let mut inner = 0.0;
            for n1 in (n2 + 1..depth).rev() {
                inner += ((n1 + 1) as f64).powi(-3);
            }
            // sum_{n1 >= depth} (n1 + 1)^-3 ~ (depth + 1/2)^-2 / 2
            inner += 0.5 * (depth as f64 + 0.5).powi(-2);
            oracle += inner * y2.powi(-2);
        }
        let cfg = make_special(&SpecialKind::EulerZagier { u: vec![1.0, 1.0] }).unwrap();
        let got = evaluate(&cfg, &ComplexPoint::real(vec![3.0, 2.0]), 1e-12, 40_000_000).unwrap();
        // Shells are summed up to the point cap; the outer terms past the oracle depth contribute below 1e-12.
        assert!((got.value.re - oracle).abs() < 1e-8, "{} vs {}", got.value.re, oracle);
    }

    #[test]
    fn barnes_shift_embeds_u() {
        let cfg = make_special(&SpecialKind::Barnes {
            lambda: vec![1.0, 2.0, 4.0],
            u: 0.9,
        })
        .unwrap();
        let total: f64 = cfg.lambda[0].iter().zip(&cfg.u).map(|(l, u)| l * u).sum();
        assert!((total - 0.9).abs() < 1e-15);
    }

    #[test]
    fn illegal_parameters() {
        assert!(make_special(&SpecialKind::Hurwitz { u: 1.5 }).is_err());
        assert!(make_special(&SpecialKind::LerchTranscendent {
            u: 1.0,
            q: Complex64::new(1.0, 0.0)
        })
        .is_err());
        assert!(make_special(&SpecialKind::EulerZagier { u: vec![0.1, 2.0] }).is_err());
    }
}
