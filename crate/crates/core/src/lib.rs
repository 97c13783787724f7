//! Shintani zeta functions, polynomial Euler products and the discrete
//! probability distributions they generate on `R^d`.
//!
//! Series are evaluated inside their region of absolute convergence with a
//! rigorous bound on the omitted tail. Rounding error is not certified.

// `!(x > 0.0)` and friends are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod arith;
pub mod coefficients;
pub mod distributions;
pub mod error;
pub mod euler;
pub mod shintani;
pub mod summation;
pub mod zeros;

pub use num_complex::Complex64;

pub use arith::{sieve_primes, AlphaRule, PrimeTable};
pub use coefficients::{AxisCharacter, AxisFactor, CoefficientSpec, Envelope, Family, SignClass};
pub use distributions::{
    build_distribution, char_fn, empirical_cf, make_special_distribution, sample, SampleBatch,
    SpecialDistribution, ZetaDistribution,
};
pub use error::{Error, Result, Violation};
pub use euler::{
    dedekind_coefficient, dirichlet_coefficient, evaluate_euler, shintani_from_euler, EulerConfig,
};
pub use shintani::{
    differentiate, evaluate, in_convergence_region, make_special, partial_sum, tail_bound,
    validate_config, ComplexPoint, EvalResult, ShintaniConfig, SpecialKind,
};
pub use zeros::{
    count_zeros_rectangle, non_id_certificate, scan_cf_zeros, Certificate, Rect, SliceSpec, Subdivision, ZeroReport,
};

/// Default cap on enumerated lattice points per evaluation.
pub const DEFAULT_SHELL_CAP: u64 = 1_000_000;
