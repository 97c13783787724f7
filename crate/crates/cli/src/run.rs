use std::fmt::Write as _;
use std::path::PathBuf;

use zetadist_core::distributions::{build_distribution_with, char_fn_with, moment, sample, ZetaDistribution};
use zetadist_core::euler::{
    evaluate_euler, hurwitz_half_drift, hurwitz_half_levy_logcf, riemann_levy_logcf, shintani_from_euler,
    CoefficientEngine, Component, LevyKind,
};
use zetadist_core::shintani::{evaluate, ComplexPoint, EvalResult, ShintaniConfig};
use zetadist_core::zeros::{count_zeros_rectangle, non_id_certificate, scan_cf_zeros, Rect, SliceSpec, Subdivision};
use zetadist_core::{sieve_primes, Complex64, EulerConfig, SpecialDistribution};

use crate::config::{FunctionSpec, RunConfig, Special, SpecialSpec, TGrid, ZeroMode};
use crate::error::CliError;
use crate::output::{emit_csv, emit_text, num, out_path, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Cf,
    Dist,
    Sample,
    Coeffs,
    LevyCheck,
    Zeros,
    Special,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Cf => "cf",
            Command::Dist => "dist",
            Command::Sample => "sample",
            Command::Coeffs => "coeffs",
            Command::LevyCheck => "levy-check",
            Command::Zeros => "zeros",
            Command::Special => "special",
        }
    }
}

/// What a command printed and wrote.
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

struct Resolved {
    shintani: Option<ShintaniConfig>,
    euler: Option<EulerConfig>,
    special: Option<SpecialDistribution>,
    levy: Option<LevyKind>,
}

fn resolve(cfg: &RunConfig) -> Result<Resolved, CliError> {
    let bad = |e: Vec<zetadist_core::Violation>| {
        let v = e.into_iter().next().expect("nonempty violations");
        CliError::config(format!("function.{}", v.key), v.message)
    };
    Ok(match &cfg.function {
        FunctionSpec::Shintani(spec) => Resolved {
            shintani: Some(spec.build().map_err(bad)?),
            euler: None,
            special: None,
            levy: None,
        },
        FunctionSpec::Euler(spec) => {
            let e = spec.build();
            let v = e.validate();
            if !v.is_empty() {
                return Err(bad(v));
            }
            Resolved {
                shintani: shintani_from_euler(&e).ok(),
                euler: Some(e),
                special: None,
                levy: None,
            }
        }
        FunctionSpec::Special(spec) => {
            let levy = match spec {
                SpecialSpec::Riemann => Some(LevyKind::Riemann),
                SpecialSpec::Hurwitz { u } if *u == 0.5 => Some(LevyKind::HurwitzHalf),
                _ => None,
            };
            match spec.build().map_err(|(k, m)| CliError::config(format!("function.{k}"), m))? {
                Special::Function(f) => Resolved {
                    shintani: Some(f),
                    euler: None,
                    special: None,
                    levy,
                },
                Special::Distribution(d) => Resolved {
                    shintani: Some(d.config.clone()),
                    euler: None,
                    special: Some(d),
                    levy,
                },
            }
        }
    })
}

impl Resolved {
    fn series(&self, cmd: Command) -> Result<&ShintaniConfig, CliError> {
        self.shintani.as_ref().ok_or_else(|| {
            CliError::config(
                "function",
                format!("`{}` needs a function with a series expansion", cmd.name()),
            )
        })
    }

    fn sigma(&self, cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
        if let Some(s) = &cfg.action.sigma {
            return Ok(s.clone());
        }
        if let Some(d) = &self.special {
            return Ok(d.sigma.clone());
        }
        Err(CliError::config("action.sigma", "sigma is required for this command"))
    }
}

fn need<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::config(format!("action.{key}"), format!("`{key}` is required for this command")))
}

fn point(s: &[[f64; 2]]) -> ComplexPoint {
    ComplexPoint::new(s.iter().map(|z| z[0]).collect(), s.iter().map(|z| z[1]).collect())
}

fn axis_vector(d: usize, axis: usize, t: f64) -> Result<Vec<f64>, CliError> {
    if axis == 0 || axis > d {
        return Err(CliError::config("action.t_axis", format!("axis {axis} out of range 1..={d}")));
    }
    let mut v = vec![0.0; d];
    v[axis - 1] = t;
    Ok(v)
}

fn complex(z: Complex64) -> String {
    format!("{} {} {}i", num(z.re), if z.im < 0.0 { '-' } else { '+' }, num(z.im.abs()))
}

fn core(context: &str) -> impl Fn(zetadist_core::Error) -> CliError + '_ {
    move |e| CliError::from_core(context, e)
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    let res = resolve(cfg)?;
    let a = &cfg.action;
    let dir = &cfg.output.dir;
    let mut rep = Report::default();
    let out = &mut rep.stdout;
    match cmd {
        Command::Eval => {
            let s = point(need(&a.s, "s")?);
            let r = match &res.euler {
                Some(e) => {
                    let primes = sieve_primes(a.prime_cutoff).map_err(core("prime_cutoff"))?;
                    evaluate_euler(e, &s, &primes).map_err(core("eval"))?
                }
                None => evaluate(res.series(cmd)?, &s, a.tol, a.shell_cap).map_err(core("eval"))?,
            };
            write_eval(out, &r);
            let mut t = Table::new(["re_value", "im_value", "tail_bound", "rounding", "certified"]);
            t.push(vec![
                num(r.value.re),
                num(r.value.im),
                num(r.tail_bound),
                num(r.rounding),
                r.certified.to_string(),
            ]);
            rep.files.push(write_csv(&t, dir, "eval.csv")?);
        }
        Command::Cf => {
            let f = res.series(cmd)?;
            let sigma = res.sigma(cfg)?;
            let grid = need(&a.t, "t")?;
            let mut t = Table::new(["t", "re_f", "im_f", "abs_f"]);
            for x in grid.points() {
                let tv = axis_vector(f.d, a.t_axis, x)?;
                let v = char_fn_with(f, &sigma, &tv, a.tol, a.shell_cap).map_err(core("cf"))?.value;
                t.push(vec![num(x), num(v.re), num(v.im), num(v.norm())]);
            }
            let _ = writeln!(out, "{} points", t.rows.len());
            rep.files.push(write_csv(&t, dir, "cf.csv")?);
        }
        Command::Dist => {
            let dist = distribution(&res, cfg, cmd)?;
            let d = dist.dim();
            let mut t = Table::new((1..=d).map(|h| format!("loc_{h}")).chain(["mass".to_string()]));
            for (loc, mass) in dist.atoms() {
                t.push(loc.iter().copied().map(num).chain([num(mass)]).collect());
            }
            let _ = writeln!(out, "atoms = {}", dist.len());
            let _ = writeln!(out, "total_mass = {}", num(dist.total_mass()));
            let _ = writeln!(out, "tail_mass_bound = {}", num(dist.tail_mass_bound));
            for k in &a.moments {
                let m = moment(&dist, k).map_err(core("moments"))?;
                let _ = writeln!(out, "moment{k:?} = {} (error <= {})", num(m.value), num(m.error_bound));
            }
            rep.files.push(write_csv(&t, dir, "atoms.csv")?);
        }
        Command::Sample => {
            let dist = distribution(&res, cfg, cmd)?;
            let batch = sample(&dist, a.seed, a.count).map_err(core("sample"))?;
            let mut t = Table::new((1..=batch.d).map(|h| format!("x_{h}")));
            for x in batch.iter() {
                t.push(x.iter().copied().map(num).collect());
            }
            let _ = writeln!(out, "samples = {} (seed {}, total variation <= {})", batch.count, batch.seed, num(batch.delta));
            rep.files.push(write_csv(&t, dir, "samples.csv")?);
        }
        Command::Coeffs => {
            let e = res
                .euler
                .as_ref()
                .ok_or_else(|| CliError::config("function.kind", "`coeffs` needs an euler function"))?;
            let which = match a.component {
                Some(l) if l > e.m => {
                    return Err(CliError::config("action.component", format!("factor {l} out of range 1..={}", e.m)))
                }
                Some(l) => Component::Single(l - 1),
                None => Component::All,
            };
            let mut engine = CoefficientEngine::new(e).map_err(core("coeffs"))?;
            let mut t = Table::new(["n", "re_a", "im_a"]);
            for n in 1..=a.n_max {
                let v = engine.coefficient(which, n).map_err(core("coeffs"))?;
                t.push(vec![n.to_string(), num(v.re), num(v.im)]);
            }
            let _ = writeln!(out, "{} coefficients", t.rows.len());
            rep.files.push(write_csv(&t, dir, "coeffs.csv")?);
        }
        Command::LevyCheck => {
            let kind = res.levy.ok_or_else(|| {
                CliError::config("function.name", "`levy-check` needs the riemann or hurwitz (u = 0.5) function")
            })?;
            let f = res.series(cmd)?;
            let sigma = res.sigma(cfg)?;
            if sigma.len() != 1 {
                return Err(CliError::config("action.sigma", "sigma must have one entry"));
            }
            let grid = need(&a.t, "t")?;
            let mut t = Table::new(["t", "re_ratio", "im_ratio", "re_levy", "im_levy", "abs_diff", "log_tail_bound"]);
            for x in grid.points() {
                let ratio = char_fn_with(f, &sigma, &[x], a.tol, a.shell_cap).map_err(core("levy-check"))?.value;
                let (log, bound) = match kind {
                    LevyKind::Riemann => {
                        let l = riemann_levy_logcf(sigma[0], x, a.prime_cutoff, a.power_cutoff).map_err(core("levy-check"))?;
                        (l.value, l.tail_bound)
                    }
                    LevyKind::HurwitzHalf => {
                        let l = hurwitz_half_levy_logcf(sigma[0], x, a.prime_cutoff, a.power_cutoff)
                            .map_err(core("levy-check"))?;
                        (l.value + hurwitz_half_drift(x), l.tail_bound)
                    }
                };
                let levy = log.exp();
                t.push(vec![
                    num(x),
                    num(ratio.re),
                    num(ratio.im),
                    num(levy.re),
                    num(levy.im),
                    num((ratio - levy).norm()),
                    num(bound),
                ]);
            }
            let _ = writeln!(out, "{} points", t.rows.len());
            rep.files.push(write_csv(&t, dir, "levy.csv")?);
        }
        Command::Zeros => {
            let f = res.series(cmd)?;
            match a.zeros {
                ZeroMode::Scan => {
                    let sigma = res.sigma(cfg)?;
                    let grid: &TGrid = need(&a.t, "t")?;
                    if a.t_axis == 0 || a.t_axis > f.d {
                        return Err(CliError::config("action.t_axis", format!("axis out of range 1..={}", f.d)));
                    }
                    let report = scan_cf_zeros(f, &sigma, a.t_axis - 1, (grid.start, grid.stop), grid.step, a.tol)
                        .map_err(core("zeros"))?;
                    let mut t = Table::new(["re", "im", "residual"]);
                    let mut text = String::new();
                    for z in &report.candidates {
                        t.push(vec![num(z.t.re), num(z.t.im), num(z.residual)]);
                        let _ = writeln!(
                            text,
                            "t = {}: residual {}, {}, multiplicity {}{}",
                            complex(z.t),
                            num(z.residual),
                            z.status,
                            z.multiplicity,
                            if z.real { ", real" } else { "" }
                        );
                    }
                    let _ = writeln!(text, "grid points {}, min |f| {}", report.grid_points, num(report.grid_min));
                    for (r, n) in &report.rectangle_counts {
                        let _ = writeln!(text, "winding [{}, {}] x [{}, {}] = {n}", r.re_lo, r.re_hi, r.im_lo, r.im_hi);
                    }
                    let _ = writeln!(text, "certificate: {}", report.certificate);
                    out.push_str(&text);
                    rep.files.push(write_csv(&t, dir, "zeros.csv")?);
                    rep.files.push(write_text(&text, dir, "zeros.txt")?);
                    if report.certificate {
                        let dist = build_distribution_with(f, &sigma, a.delta, a.shell_cap).map_err(core("zeros"))?;
                        let cert = non_id_certificate(&report, &dist).map_err(core("zeros"))?;
                        let text = cert.to_string();
                        let _ = writeln!(out, "{text}");
                        rep.files.push(write_text(&text, dir, "certificate.txt")?);
                    }
                }
                ZeroMode::Rectangle => {
                    let r = need(&a.rectangle, "rectangle")?;
                    let base = match &a.s {
                        Some(s) => point(s),
                        None => ComplexPoint::real(vec![0.0; f.d]),
                    };
                    let direction = match &a.direction {
                        Some(v) => v.iter().map(|z| Complex64::new(z[0], z[1])).collect(),
                        None => axis_vector(f.d, a.t_axis, 1.0)?
                            .into_iter()
                            .map(|x| Complex64::new(x, 0.0))
                            .collect(),
                    };
                    let slice = SliceSpec::new(base, direction, Rect::new(r[0], r[1], r[2], r[3]));
                    let ctl = Subdivision {
                        eval_tol: a.tol,
                        shell_cap: a.shell_cap,
                        ..Subdivision::default()
                    };
                    let w = count_zeros_rectangle(f, &slice, ctl).map_err(core("zeros"))?;
                    let text = format!(
                        "zeros = {}\nrectangle = [{}, {}] x [{}, {}]\nperturbations = {}\nevaluations = {}\n",
                        w.zeros, w.rect.re_lo, w.rect.re_hi, w.rect.im_lo, w.rect.im_hi, w.perturbations, w.evaluations
                    );
                    out.push_str(&text);
                    rep.files.push(write_text(&text, dir, "rectangle.txt")?);
                }
            }
        }
        Command::Special => {
            let f = res.series(cmd)?;
            let _ = writeln!(out, "d = {}, m = {}, r = {}", f.d, f.m, f.r);
            let _ = writeln!(out, "lambda = {:?}", f.lambda);
            let _ = writeln!(out, "u = {:?}", f.u);
            let _ = writeln!(out, "c = {:?}", f.c);
            let _ = writeln!(out, "theta = {}", f.theta.family_name());
            if let Some(d) = &res.special {
                let _ = writeln!(out, "sigma = {:?}", d.sigma);
                let _ = writeln!(out, "closed form: {}", d.closed_form);
                if let Some(grid) = &a.t {
                    let mut t = Table::new(["t", "re_f", "im_f", "re_closed", "im_closed", "abs_diff"]);
                    for x in grid.points() {
                        let v = char_fn_with(f, &d.sigma, &[x], a.tol, a.shell_cap).map_err(core("special"))?.value;
                        let w = d.closed_form.cf(x);
                        t.push(vec![num(x), num(v.re), num(v.im), num(w.re), num(w.im), num((v - w).norm())]);
                    }
                    rep.files.push(write_csv(&t, dir, "special.csv")?);
                }
            } else if let Some(s) = &a.s {
                let r = evaluate(f, &point(s), a.tol, a.shell_cap).map_err(core("special"))?;
                write_eval(out, &r);
            }
        }
    }
    Ok(rep)
}

fn distribution(res: &Resolved, cfg: &RunConfig, cmd: Command) -> Result<ZetaDistribution, CliError> {
    let f = res.series(cmd)?;
    let sigma = res.sigma(cfg)?;
    build_distribution_with(f, &sigma, cfg.action.delta, cfg.action.shell_cap).map_err(core(cmd.name()))
}

fn write_eval(out: &mut String, r: &EvalResult) {
    let _ = writeln!(out, "value = {}", complex(r.value));
    let _ = writeln!(out, "tail_bound = {}", num(r.tail_bound));
    let _ = writeln!(out, "rounding = {}", num(r.rounding));
    let _ = writeln!(out, "certified = {}", r.certified);
    let _ = writeln!(out, "method = {:?}, points = {}", r.method, r.points);
}

fn write_csv(t: &Table, dir: &str, name: &str) -> Result<PathBuf, CliError> {
    let p = out_path(dir, name);
    emit_csv(t, &p)?;
    Ok(p)
}

fn write_text(text: &str, dir: &str, name: &str) -> Result<PathBuf, CliError> {
    let p = out_path(dir, name);
    emit_text(text, &p)?;
    Ok(p)
}
