//! Acceptance checks. Prints one PASS/FAIL line per criterion.

use std::f64::consts::{E, LN_2, PI};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zetadist_core::distributions::{
    atom_moment, moment, ClosedForm, SpecialDistributionKind,
};
use zetadist_core::euler::{
    hurwitz_half_drift, hurwitz_half_levy_logcf, riemann_levy_logcf, Component, DedekindMethod,
};
use zetadist_core::zeros::{count_zeros_rectangle, Rect, SliceSpec, Subdivision};
use zetadist_core::*;

const CAP: u64 = DEFAULT_SHELL_CAP;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ev(cfg: &ShintaniConfig, s: ComplexPoint, tol: f64) -> EvalResult {
    evaluate(cfg, &s, tol, CAP).expect("evaluation")
}

fn real(x: f64) -> ComplexPoint {
    ComplexPoint::real(vec![x])
}

fn c1_special_values() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let cases: [(&str, SpecialKind, f64, f64); 3] = [
        ("zeta(2)", SpecialKind::Riemann, 2.0, PI * PI / 6.0),
        ("hurwitz(2, 1/2)", SpecialKind::Hurwitz { u: 0.5 }, 2.0, PI * PI / 2.0),
        (
            "lerch(q = 1/2, u = 1, s = 1)",
            SpecialKind::LerchTranscendent {
                u: 1.0,
                q: Complex64::new(0.5, 0.0),
            },
            1.0,
            2.0 * LN_2,
        ),
    ];
    for (name, kind, s, want) in cases {
        let start = Instant::now();
        let r = ev(&make_special(&kind).unwrap(), real(s), 1e-10);
        let took = start.elapsed();
        let err = (r.value - want).norm();
        let ok = err <= 1e-8 && took < Duration::from_secs(1);
        pass &= ok;
        lines.push(format!("{name} err {err:.1e} in {:.3}s", took.as_secs_f64()));
    }
    outcome(pass, lines.join("; "))
}

fn c2_hurwitz_doubling() -> Outcome {
    let h = make_special(&SpecialKind::Hurwitz { u: 0.5 }).unwrap();
    let z = make_special(&SpecialKind::Riemann).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut tails = 0.0f64;
    let mut pass = true;
    for s in [
        Complex64::new(1.5, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(3.0, 0.0),
        Complex64::new(4.0, 0.0),
        Complex64::new(2.0, 1.0),
    ] {
        let a = ev(&h, ComplexPoint::scalar(s), 1e-10);
        let b = ev(&z, ComplexPoint::scalar(s), 1e-10);
        let factor = Complex64::new(2.0, 0.0).powc(s) - 1.0;
        let diff = (a.value - factor * b.value).norm();
        // Truncation bounds here fall below double precision, so the
        // rounding estimates are added to them.
        let allowed = a.error_bound() + factor.norm() * b.error_bound();
        pass &= diff <= allowed;
        worst = worst.max(diff / allowed);
        tails = tails.max(a.tail_bound + factor.norm() * b.tail_bound);
    }
    outcome(
        pass,
        format!("max |diff| / (tail + rounding) = {worst:.2e}; largest combined tail bound {tails:.1e}"),
    )
}

/// Richardson extrapolation of central differences at steps h, h/2, h/4.
fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let (d1, d2, d3) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

fn c3_derivative_closure() -> Outcome {
    let z = make_special(&SpecialKind::Riemann).unwrap();
    let dz = differentiate(&z, 0).unwrap();
    let analytic = ev(&dz, real(2.0), 1e-12).value.re;
    let fd = richardson(|x| ev(&z, real(x), 1e-13).value.re, 2.0, 0.1);
    let e1 = (analytic - fd).abs();

    // Both sides use the same truncation: the tolerance is out of reach, so
    // every evaluation stops at the shell allowed by the point cap.
    let ez = make_special(&SpecialKind::EulerZagier { u: vec![1.0, 1.0] }).unwrap();
    let dez = differentiate(&ez, 0).unwrap();
    let cap = 2_000_000;
    let at = |s1: f64| evaluate(&ez, &ComplexPoint::real(vec![s1, 2.0]), 1e-300, cap).unwrap();
    let series = evaluate(&dez, &ComplexPoint::real(vec![3.0, 2.0]), 1e-300, cap).unwrap();
    let fd2 = richardson(|x| at(x).value.re, 3.0, 0.1);
    let e2 = (series.value.re - fd2).abs();
    outcome(
        e1 <= 1e-6 && e2 <= 1e-6,
        format!(
            "zeta'(2) err {e1:.1e}; euler-zagier d/ds1 at (3, 2) err {e2:.1e} ({} shells)",
            series.shells_used
        ),
    )
}

fn c4_compound_poisson() -> Outcome {
    let z = make_special(&SpecialKind::Riemann).unwrap();
    let h = make_special(&SpecialKind::Hurwitz { u: 0.5 }).unwrap();
    let (mut worst_z, mut worst_h) = (0.0f64, 0.0f64);
    let mut per_sigma = Vec::new();
    for sigma in [1.5, 2.0, 3.0] {
        let z0 = ev(&z, real(sigma), 1e-13).value;
        let h0 = ev(&h, real(sigma), 1e-13).value;
        let (mut ez, mut eh, mut bound) = (0.0f64, 0.0f64, 0.0f64);
        for t in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let s = ComplexPoint::new(vec![sigma], vec![t]);
            let cf = ev(&z, s.clone(), 1e-13).value / z0;
            let levy = riemann_levy_logcf(sigma, t, 10_000, 40).unwrap();
            ez = ez.max((levy.value.exp() - cf).norm());
            bound = bound.max(levy.tail_bound);
            let cf = ev(&h, s, 1e-13).value / h0;
            let levy = hurwitz_half_levy_logcf(sigma, t, 10_000, 40).unwrap();
            eh = eh.max(((hurwitz_half_drift(t) + levy.value).exp() - cf).norm());
        }
        per_sigma.push(format!("sigma {sigma}: {ez:.1e} / {eh:.1e} (log tail bound {bound:.1e})"));
        worst_z = worst_z.max(ez);
        worst_h = worst_h.max(eh);
    }
    outcome(
        worst_z <= 1e-5 && worst_h <= 1e-5,
        format!("max err riemann / hurwitz(1/2): {}", per_sigma.join(", ")),
    )
}

fn random_alpha(rng: &mut ChaCha8Rng) -> AlphaRule {
    match rng.random_range(0..3) {
        0 => AlphaRule::principal(),
        1 => AlphaRule::chi_minus_4(),
        _ => AlphaRule::Constant(Complex64::new(rng.random_range(-1.0..=1.0), 0.0)),
    }
}

fn c5_euler_embedding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let primes = sieve_primes(1_000_000).unwrap();
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = rng.random_range(1..=3);
        let d = rng.random_range(1..=2);
        let cfg = EulerConfig {
            d,
            m,
            alpha: (0..m).map(|_| random_alpha(&mut rng)).collect(),
            a: (0..m)
                .map(|_| (0..d).map(|_| rng.random_range(0.5..1.5)).collect())
                .collect(),
            complex_mode: false,
        };
        let sh = shintani_from_euler(&cfg).unwrap();
        for _ in 0..5 {
            let mut re: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..3.0)).collect();
            let min = cfg
                .a
                .iter()
                .map(|al| al.iter().zip(&re).map(|(a, s)| a * s).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if min < 2.0 {
                re.iter_mut().for_each(|x| *x *= 2.0 / min);
            }
            let im = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = ComplexPoint::new(re, im);
            let p = evaluate_euler(&cfg, &s, &primes).unwrap();
            let q = evaluate(&sh, &s, 1e-8, CAP).unwrap();
            let diff = (p.value - q.value).norm();
            let allowed = p.tail_bound + q.tail_bound;
            pass &= diff <= allowed;
            worst = worst.max(diff / allowed);
        }
    }
    outcome(pass, format!("50 points, max |diff| / bound = {worst:.2e}"))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn c6_coefficients() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();

    let configs = [
        EulerConfig::dedekind_gaussian(),
        EulerConfig::one_dimensional(vec![AlphaRule::principal(); 3]),
        EulerConfig::one_dimensional(vec![
            AlphaRule::principal(),
            AlphaRule::Constant(Complex64::new(-1.0, 0.0)),
            AlphaRule::chi_minus_4(),
        ]),
    ];
    let mut pairs = 0u64;
    for cfg in &configs {
        let mut engine = euler::CoefficientEngine::new(cfg).unwrap();
        let table: Vec<Complex64> = (0..=1_000_000u64)
            .map(|n| if n == 0 { Complex64::new(0.0, 0.0) } else { engine.coefficient(Component::All, n).unwrap() })
            .collect();
        for a in 1..=1000u64 {
            for b in 1..=1000u64 {
                if gcd(a, b) == 1 {
                    pairs += 1;
                    if table[(a * b) as usize] != table[a as usize] * table[b as usize] {
                        pass = false;
                    }
                }
            }
        }
    }
    notes.push(format!("{pairs} coprime pairs"));

    // d_k by brute force: d_1 = 1 and d_k(n) = sum over a | n of d_{k-1}(n / a).
    const N: usize = 10_000;
    let mut prev = vec![1u64; N + 1];
    for k in 2..=4 {
        let mut next = vec![0u64; N + 1];
        for a in 1..=N {
            for b in 1..=N / a {
                next[a * b] += prev[b];
            }
        }
        let cfg = EulerConfig::one_dimensional(vec![AlphaRule::principal(); k]);
        let mut engine = euler::CoefficientEngine::new(&cfg).unwrap();
        for n in 1..=N {
            let v = engine.coefficient(Component::All, n as u64).unwrap();
            if v.im != 0.0 || v.re != next[n] as f64 {
                pass = false;
            }
        }
        prev = next;
    }
    notes.push("d_2, d_3, d_4 to 10^4".into());

    let mut dedekind_ok = true;
    for n in 1..=N as u64 {
        dedekind_ok &= dedekind_coefficient(n, DedekindMethod::DivisorSum).unwrap()
            == dedekind_coefficient(n, DedekindMethod::LatticeCount).unwrap();
    }
    pass &= dedekind_ok;
    notes.push(format!("dedekind to 10^4 {}", if dedekind_ok { "equal" } else { "differ" }));
    outcome(pass, notes.join("; "))
}

fn cf_distance(sd: &SpecialDistribution, ts: &[f64]) -> f64 {
    ts.iter()
        .map(|&t| {
            let f = char_fn(&sd.config, &sd.sigma, &[t]).unwrap().value;
            (f - sd.closed_form.cf(t)).norm()
        })
        .fold(0.0, f64::max)
}

fn c7_distributions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let z = make_special(&SpecialKind::Riemann).unwrap();
    let dist = build_distribution(&z, &[2.0], 1e-6).unwrap();
    let total = dist.total_mass();
    let mass_ok = (1.0 - 1e-6..=1.0 + 1e-12).contains(&total);

    let ts: Vec<f64> = (0..50).map(|_| rng.random_range(-10.0..10.0)).collect();
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let j = [2u64, 3, 5][rng.random_range(0..3)];
        let lj = (j as f64).ln();
        let kinds = [
            SpecialDistributionKind::Binomial {
                j,
                trials: rng.random_range(1..=6),
                phi: rng.random_range(0.5..3.0),
                sigma: rng.random_range(-3.0..-lj - 0.05),
            },
            SpecialDistributionKind::Poisson {
                j,
                a: rng.random_range(-1.0..1.0),
                sigma: rng.random_range(-3.0..-lj - 0.05),
            },
            {
                let c = rng.random_range(0.5..2.0);
                SpecialDistributionKind::Delta {
                    lambda: rng.random_range(0.5..2.0),
                    u: rng.random_range(0.5..2.0),
                    c,
                    theta0: rng.random_range(0.5..2.0),
                    sigma: 1.0 / c + rng.random_range(0.1..2.0),
                }
            },
        ];
        for kind in kinds {
            let sd = make_special_distribution(kind, false).unwrap();
            worst = worst.max(cf_distance(&sd, &ts));
        }
    }
    // The p = 1/2 binomial with phi = e and sigma = -1.
    let sd = make_special_distribution(
        SpecialDistributionKind::Binomial {
            j: 2,
            trials: 3,
            phi: E,
            sigma: -1.0,
        },
        false,
    )
    .unwrap();
    let half = matches!(sd.closed_form, ClosedForm::Binomial { p, .. } if (p - 0.5).abs() < 1e-15);
    worst = worst.max(cf_distance(&sd, &ts));

    // Oracle: -sum_{n <= 10^7} log n / n^2 - (log N + 1)/N, over zeta(2).
    let n_max = 10_000_000u64;
    let mut acc = summation::NeumaierSum::new();
    for n in 2..=n_max {
        let x = n as f64;
        acc.add(x.ln() / (x * x));
    }
    let nf = n_max as f64;
    let oracle = -(acc.value() + (nf.ln() + 1.0) / nf) / (PI * PI / 6.0);
    let mean = moment(&dist, &[1]).unwrap();
    let atoms = atom_moment(&dist, &[1]).unwrap();
    let mean_err = (mean.value - oracle).abs();
    let pass = mass_ok && half && worst <= 1e-10 && mean_err <= 1e-6 && (atoms.value - oracle).abs() <= atoms.error_bound + 1e-9;
    outcome(
        pass,
        format!(
            "mass {total:.12}; closed-form cf max err {worst:.1e}; mean err {mean_err:.1e}; atom mean err {:.1e} (bound {:.1e})",
            (atoms.value - oracle).abs(),
            atoms.error_bound
        ),
    )
}

fn c8_sampling() -> Outcome {
    let z = make_special(&SpecialKind::Riemann).unwrap();
    let dist = build_distribution(&z, &[2.0], 1e-6).unwrap();
    let n = 1_000_000;
    let batch = sample(&dist, 2024, n).unwrap();
    let again = sample(&dist, 2024, n).unwrap();
    let same = batch.points.len() == again.points.len()
        && batch.points.iter().zip(&again.points).all(|(a, b)| a.to_bits() == b.to_bits());
    let limit = 4.0 / (n as f64).sqrt();
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let emp = empirical_cf(&batch, &[t]).unwrap();
        let exact = dist.char_fn(&[t]).unwrap().value;
        worst = worst.max((emp - exact).norm());
    }
    let zero_mass = batch.iter().filter(|x| x[0] == 0.0).count() as f64 / n as f64;
    let mass_err = (zero_mass - 6.0 / (PI * PI)).abs();
    outcome(
        same && worst <= limit && mass_err <= 0.002,
        format!(
            "cf max err {worst:.2e} (limit {limit:.0e}); atom 0 freq {zero_mass:.5} vs {:.5}; reproducible {same}",
            6.0 / (PI * PI)
        ),
    )
}

fn c9_zeros() -> Outcome {
    let sd = make_special_distribution(
        SpecialDistributionKind::Binomial {
            j: 2,
            trials: 1,
            phi: E,
            sigma: -1.0,
        },
        false,
    )
    .unwrap();
    let report = scan_cf_zeros(&sd.config, &sd.sigma, 0, (0.0, 6.0), 0.05, 1e-10).unwrap();
    let dist = build_distribution(&sd.config, &sd.sigma, 1e-9).unwrap();
    let located = report.confirmed().any(|c| c.real && (c.t.re - PI).abs() <= 1e-8);
    let cert = non_id_certificate(&report, &dist).is_ok();

    let mut cfg = make_special(&SpecialKind::Riemann).unwrap();
    cfg.theta = CoefficientSpec::finite_support(vec![
        (vec![0], Complex64::new(1.0, 0.0)),
        (vec![1], Complex64::new(-2.0, 0.0)),
    ]);
    let ctl = Subdivision::default();
    let count = |r: Rect| count_zeros_rectangle(&cfg, &SliceSpec::scalar(r), ctl).unwrap().zeros;
    let a = count(Rect::new(0.0, 2.0, -1.0, 1.0));
    let b = count(Rect::new(0.0, 2.0, 8.0, 10.0));

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut additive = 0;
    for _ in 0..20 {
        let re = rng.random_range(-1.0..3.0);
        let im = rng.random_range(-15.0..15.0);
        let rect = Rect::new(re, re + rng.random_range(0.5..4.0), im, im + rng.random_range(0.5..12.0));
        let whole = count(rect);
        let parts: i64 = rect.split().into_iter().map(count).sum();
        if whole == parts {
            additive += 1;
        }
    }
    outcome(
        located && cert && a == 1 && b == 1 && additive == 20,
        format!("zero at pi located {located}, certificate {cert}; counts {a}, {b}; additivity {additive}/20"),
    )
}

fn random_config(rng: &mut ChaCha8Rng) -> (ShintaniConfig, Vec<f64>) {
    let r = rng.random_range(1..=3);
    let m = rng.random_range(1..=2);
    let d = rng.random_range(1..=2);
    let lambda = (0..m)
        .map(|_| (0..r).map(|_| rng.random_range(0.5..2.0)).collect())
        .collect();
    let u = (0..r).map(|_| rng.random_range(0.3..1.5)).collect();
    let c: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(0.5..1.5)).collect())
        .collect();
    let theta = match rng.random_range(0..4) {
        0 => CoefficientSpec::one(),
        1 => CoefficientSpec::geometric(Complex64::from_polar(rng.random_range(0.3..0.9), rng.random_range(0.0..6.0))),
        2 => CoefficientSpec::character_product(
            (0..r)
                .map(|_| AxisFactor {
                    character: AxisCharacter::Additive {
                        v: rng.random_range(0.0..1.0),
                    },
                    offset: 0,
                })
                .collect(),
        ),
        _ => CoefficientSpec::constant(Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))),
    };
    let cfg = ShintaniConfig {
        d,
        m,
        r,
        lambda,
        u,
        c,
        theta,
    };
    // Scale sigma so every pairing clears r / m with margin.
    let mut sigma: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..2.0)).collect();
    let target = r as f64 / m as f64 + rng.random_range(0.5..1.5);
    let min = cfg
        .c
        .iter()
        .map(|cl| cl.iter().zip(&sigma).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    sigma.iter_mut().for_each(|x| *x *= target / min);
    (cfg, sigma)
}

fn c10_certified_truncation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (cfg, sigma) = random_config(&mut rng);
        let im = (0..cfg.d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = ComplexPoint::new(sigma, im);
        let n = match cfg.r {
            1 => 2000,
            2 => 200,
            _ => 40,
        };
        let a = partial_sum(&cfg, &s, n).unwrap();
        let b = partial_sum(&cfg, &s, 2 * n).unwrap();
        let moved = (a.value - b.value).norm();
        pass &= a.tail_bound.is_finite() && moved <= a.tail_bound;
        worst = worst.max(moved / a.tail_bound);
    }
    outcome(pass, format!("max move / bound = {worst:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("special values", c1_special_values, 3),
        ("hurwitz doubling", c2_hurwitz_doubling, 5),
        ("derivative closure", c3_derivative_closure, 10),
        ("compound poisson", c4_compound_poisson, 30),
        ("euler embedding", c5_euler_embedding, 60),
        ("coefficient engine", c6_coefficients, 60),
        ("distribution laws", c7_distributions, 10),
        ("sampling", c8_sampling, 60),
        ("zero detection", c9_zeros, 30),
        ("certified truncation", c10_certified_truncation, 60),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = out.pass && secs < *budget as f64;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{secs:.2}s of {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
}
