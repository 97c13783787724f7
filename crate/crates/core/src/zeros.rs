//! Zeros of Shintani zeta functions on complex lines, and zeros of the
//! characteristic functions of their distributions.
//!
//! A characteristic function with a real zero cannot belong to an infinitely
//! divisible law, so a confirmed zero yields a certificate.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;

use crate::distributions::ZetaDistribution;
use crate::error::{Error, Result};
use crate::shintani::{converges_at, evaluate, ComplexPoint, EvalResult, ShintaniConfig};
use crate::DEFAULT_SHELL_CAP;

/// The affine line `s(w) = base + w * direction` restricted to a rectangle of `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub base: ComplexPoint,
    pub direction: Vec<Complex64>,
    pub rect: Rect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        Self {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        }
    }

    /// Square of half-width `rho` around `z`.
    pub fn around(z: Complex64, rho: f64) -> Self {
        Self::new(z.re - rho, z.re + rho, z.im - rho, z.im + rho)
    }

    fn is_valid(&self) -> bool {
        [self.re_lo, self.re_hi, self.im_lo, self.im_hi]
            .iter()
            .all(|x| x.is_finite())
            && self.re_lo < self.re_hi
            && self.im_lo < self.im_hi
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }

    fn grow(&self, eta: f64) -> Self {
        Self::new(self.re_lo - eta, self.re_hi + eta, self.im_lo - eta, self.im_hi + eta)
    }

    /// The four quarters.
    pub fn split(&self) -> [Rect; 4] {
        let rm = 0.5 * (self.re_lo + self.re_hi);
        let im = 0.5 * (self.im_lo + self.im_hi);
        [
            Rect::new(self.re_lo, rm, self.im_lo, im),
            Rect::new(rm, self.re_hi, self.im_lo, im),
            Rect::new(self.re_lo, rm, im, self.im_hi),
            Rect::new(rm, self.re_hi, im, self.im_hi),
        ]
    }
}

impl SliceSpec {
    pub fn new(base: ComplexPoint, direction: Vec<Complex64>, rect: Rect) -> Self {
        Self { base, direction, rect }
    }

    /// `s(w) = w` for a one-dimensional configuration.
    pub fn scalar(rect: Rect) -> Self {
        Self::new(ComplexPoint::real(vec![0.0]), vec![Complex64::new(1.0, 0.0)], rect)
    }

    pub fn point(&self, w: Complex64) -> ComplexPoint {
        let s: Vec<Complex64> = self
            .direction
            .iter()
            .enumerate()
            .map(|(h, dir)| self.base.component(h) + w * dir)
            .collect();
        ComplexPoint::from_components(&s)
    }
}

/// Controls for argument tracking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subdivision {
    /// Uniform segments per edge before adaptive bisection.
    pub initial_segments: usize,
    /// Maximum bisection depth per segment.
    pub max_depth: u32,
    /// `|Z|` at or below this on the contour counts as a boundary zero.
    pub boundary_tol: f64,
    /// Outward perturbations tried before giving up on a boundary zero.
    pub max_perturbations: u32,
    pub eval_tol: f64,
    pub shell_cap: u64,
}

impl Default for Subdivision {
    fn default() -> Self {
        Self {
            initial_segments: 16,
            max_depth: 40,
            boundary_tol: 1e-9,
            max_perturbations: 4,
            eval_tol: 1e-12,
            shell_cap: DEFAULT_SHELL_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingCount {
    /// Zeros inside, with multiplicity.
    pub zeros: i64,
    /// The rectangle actually traced, after any perturbation.
    pub rect: Rect,
    pub perturbations: u32,
    pub evaluations: usize,
}

enum Track {
    Done(f64),
    Boundary,
}

struct ContourEval<'a> {
    cfg: &'a ShintaniConfig,
    slice: &'a SliceSpec,
    ctl: Subdivision,
    evaluations: usize,
}

impl ContourEval<'_> {
    fn at(&mut self, w: Complex64) -> Result<EvalResult> {
        self.evaluations += 1;
        evaluate(self.cfg, &self.slice.point(w), self.ctl.eval_tol, self.ctl.shell_cap)
    }

    fn small(&self, r: &EvalResult) -> bool {
        let v = r.value.norm();
        !(v > self.ctl.boundary_tol && v > 4.0 * r.tail_bound)
    }

    /// Argument change along the segment `a -> b`.
    fn segment(&mut self, a: Complex64, fa: Complex64, b: Complex64, fb: Complex64, depth: u32) -> Result<Track> {
        let mid = 0.5 * (a + b);
        let rm = self.at(mid)?;
        if self.small(&rm) {
            return Ok(Track::Boundary);
        }
        let fm = rm.value;
        let d1 = (fm / fa).arg();
        let d2 = (fb / fm).arg();
        if d1.abs() < FRAC_PI_4 && d2.abs() < FRAC_PI_4 && (d1 + d2 - (fb / fa).arg()).abs() < 1e-9 {
            return Ok(Track::Done(d1 + d2));
        }
        if depth >= self.ctl.max_depth {
            return Err(Error::ArgumentTracking(format!(
                "argument still turning fast near w = {mid} after {depth} bisections"
            )));
        }
        let left = match self.segment(a, fa, mid, fm, depth + 1)? {
            Track::Done(x) => x,
            Track::Boundary => return Ok(Track::Boundary),
        };
        match self.segment(mid, fm, b, fb, depth + 1)? {
            Track::Done(x) => Ok(Track::Done(left + x)),
            Track::Boundary => Ok(Track::Boundary),
        }
    }

    fn winding(&mut self, rect: &Rect) -> Result<Option<i64>> {
        let corners = rect.corners();
        let n = self.ctl.initial_segments.max(1);
        let mut nodes = Vec::with_capacity(4 * n);
        for e in 0..4 {
            let (a, b) = (corners[e], corners[(e + 1) % 4]);
            for k in 0..n {
                nodes.push(a + (b - a) * (k as f64 / n as f64));
            }
        }
        let mut values = Vec::with_capacity(nodes.len());
        for &w in &nodes {
            let r = self.at(w)?;
            if self.small(&r) {
                return Ok(None);
            }
            values.push(r.value);
        }
        let mut total = 0.0;
        for i in 0..nodes.len() {
            let j = (i + 1) % nodes.len();
            match self.segment(nodes[i], values[i], nodes[j], values[j], 0)? {
                Track::Done(x) => total += x,
                Track::Boundary => return Ok(None),
            }
        }
        let turns = total / (2.0 * PI);
        let rounded = turns.round();
        if (turns - rounded).abs() > 0.1 {
            return Err(Error::ArgumentTracking(format!(
                "winding number {turns} is not close to an integer"
            )));
        }
        Ok(Some(rounded as i64))
    }
}

fn check_slice(cfg: &ShintaniConfig, slice: &SliceSpec, rect: &Rect) -> Result<()> {
    cfg.check_dim("direction", slice.direction.len())?;
    cfg.check_point(&slice.base)?;
    if !rect.is_valid() {
        return Err(Error::param("rect", "rectangle needs finite bounds with lo < hi"));
    }
    // The region is convex in Re s, so corners and edge midpoints suffice.
    let c = rect.corners();
    for k in 0..4 {
        for w in [c[k], 0.5 * (c[k] + c[(k + 1) % 4])] {
            if !converges_at(cfg, &slice.point(w))? {
                return Err(Error::OutsideRegion(format!(
                    "slice leaves the convergence region at w = {w}"
                )));
            }
        }
    }
    Ok(())
}

/// Counts zeros of `w -> Z(s(w))` inside `slice.rect` by the argument principle.
///
/// If the contour passes through a zero the rectangle is pushed outward a
/// little, up to `ctl.max_perturbations` times.
pub fn count_zeros_rectangle(cfg: &ShintaniConfig, slice: &SliceSpec, ctl: Subdivision) -> Result<WindingCount> {
    cfg.validated()?;
    let size = (slice.rect.re_hi - slice.rect.re_lo).max(slice.rect.im_hi - slice.rect.im_lo);
    let mut ev = ContourEval {
        cfg,
        slice,
        ctl,
        evaluations: 0,
    };
    for attempt in 0..=ctl.max_perturbations {
        // Irregular offsets so repeated attempts do not land on the same zero.
        let eta = if attempt == 0 {
            0.0
        } else {
            size * 1e-3 * attempt as f64 * (1.0 + std::f64::consts::FRAC_1_PI * attempt as f64)
        };
        let rect = slice.rect.grow(eta);
        check_slice(cfg, slice, &rect)?;
        if let Some(zeros) = ev.winding(&rect)? {
            return Ok(WindingCount {
                zeros,
                rect,
                perturbations: attempt,
                evaluations: ev.evaluations,
            });
        }
    }
    Err(Error::BoundaryZero {
        attempts: ctl.max_perturbations as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateStatus {
    /// Residual below tolerance and a small rectangle around it winds.
    Confirmed,
    /// Newton iteration did not reach the tolerance.
    Unconverged,
    /// Newton iteration left the convergence region.
    LeftRegion,
}

impl fmt::Display for CandidateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateStatus::Confirmed => "confirmed",
            CandidateStatus::Unconverged => "unconverged",
            CandidateStatus::LeftRegion => "left_region",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCandidate {
    /// Location in the complexified `t` variable.
    pub t: Complex64,
    /// `|f(t)|` at the refined location.
    pub residual: f64,
    pub status: CandidateStatus,
    /// Winding count of a small square around `t`; zero when not computed.
    pub multiplicity: i64,
    /// Confirmed and on the real axis, so a zero of the characteristic function.
    pub real: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroReport {
    pub config: ShintaniConfig,
    pub sigma: Vec<f64>,
    pub t_axis: usize,
    pub t_range: (f64, f64),
    pub step: f64,
    pub tol: f64,
    pub candidates: Vec<ZeroCandidate>,
    /// Smallest `|f|` seen on the grid.
    pub grid_min: f64,
    pub grid_points: usize,
    /// Winding counts of the squares used for confirmation.
    pub rectangle_counts: Vec<(Rect, i64)>,
    /// True when some real zero was confirmed.
    pub certificate: bool,
}

impl ZeroReport {
    pub fn confirmed(&self) -> impl Iterator<Item = &ZeroCandidate> + '_ {
        self.candidates.iter().filter(|c| c.status == CandidateStatus::Confirmed)
    }
}

/// Tuning for [`scan_cf_zeros_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Grid minima with `|f|` below this are refined.
    pub trigger: f64,
    pub max_newton: usize,
    /// Half-width of the confirming square.
    pub confirm_radius: f64,
    pub subdivision: Subdivision,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            trigger: 0.5,
            max_newton: 80,
            confirm_radius: 1e-3,
            subdivision: Subdivision::default(),
        }
    }
}

/// `f(tau) = Z(sigma + i tau e_axis) / Z(sigma)` for complex `tau`.
struct CfLine<'a> {
    cfg: &'a ShintaniConfig,
    slice: SliceSpec,
    z0: Complex64,
    ctl: Subdivision,
}

impl CfLine<'_> {
    fn inside(&self, tau: Complex64) -> Result<bool> {
        converges_at(self.cfg, &self.slice.point(tau))
    }

    fn at(&self, tau: Complex64) -> Result<Complex64> {
        let r = evaluate(self.cfg, &self.slice.point(tau), self.ctl.eval_tol, self.ctl.shell_cap)?;
        Ok(r.value / self.z0)
    }

    fn derivative(&self, tau: Complex64) -> Result<Complex64> {
        let h = 1e-6 * tau.norm().max(1.0);
        Ok((self.at(tau + h)? - self.at(tau - h)?) / (2.0 * h))
    }

    /// Damped Newton with step scaled by `mult`.
    fn newton(&self, start: Complex64, mult: f64, tol: f64, iters: usize) -> Result<(Complex64, f64, bool)> {
        let mut tau = start;
        let mut g = self.at(tau)?;
        for _ in 0..iters {
            if g.norm() < tol * 1e-3 {
                break;
            }
            let dg = self.derivative(tau)?;
            if dg.norm() == 0.0 || !dg.norm().is_finite() {
                break;
            }
            let step = -mult * g / dg;
            let mut damp = 1.0;
            let mut moved = false;
            while damp > 1e-4 {
                let next = tau + damp * step;
                if !self.inside(next)? {
                    return Ok((next, f64::INFINITY, false));
                }
                let gn = self.at(next)?;
                if gn.norm() < g.norm() {
                    tau = next;
                    g = gn;
                    moved = true;
                    break;
                }
                damp *= 0.5;
            }
            if !moved || (damp * step).norm() < 1e-15 * tau.norm().max(1.0) {
                break;
            }
        }
        Ok((tau, g.norm(), true))
    }
}

pub fn scan_cf_zeros(
    cfg: &ShintaniConfig,
    sigma: &[f64],
    t_axis: usize,
    t_range: (f64, f64),
    step: f64,
    tol: f64,
) -> Result<ZeroReport> {
    scan_cf_zeros_with(cfg, sigma, t_axis, t_range, step, tol, ScanOptions::default())
}

/// Scans `|f(t)|` along coordinate `t_axis` (0-based) on a grid, refines small
/// local minima by Newton's method in complex `t`, and confirms each zero by a
/// winding count around it.
#[allow(clippy::too_many_arguments)]
pub fn scan_cf_zeros_with(
    cfg: &ShintaniConfig,
    sigma: &[f64],
    t_axis: usize,
    t_range: (f64, f64),
    step: f64,
    tol: f64,
    opts: ScanOptions,
) -> Result<ZeroReport> {
    cfg.validated()?;
    cfg.check_dim("sigma", sigma.len())?;
    if t_axis >= cfg.d {
        return Err(Error::param("t_axis", format!("axis {t_axis} out of range for d = {}", cfg.d)));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("step", "step must be positive"));
    }
    if !(t_range.0 <= t_range.1) || !t_range.0.is_finite() || !t_range.1.is_finite() {
        return Err(Error::param("t_range", "t range needs finite lo <= hi"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "tolerance must be positive"));
    }
    let sign = cfg.theta.sign_class();
    if !sign.is_definite() {
        return Err(Error::IndefiniteSign(sign));
    }
    let base = ComplexPoint::real(sigma.to_vec());
    if !converges_at(cfg, &base)? {
        return Err(Error::OutsideRegion(format!(
            "sigma = {sigma:?} is outside the region of absolute convergence"
        )));
    }
    let ctl = opts.subdivision;
    let norm = evaluate(cfg, &base, ctl.eval_tol, ctl.shell_cap)?;
    if norm.value.norm() <= norm.tail_bound || norm.value.norm() == 0.0 {
        return Err(Error::DegenerateNormalizer);
    }
    let mut direction = vec![Complex64::new(0.0, 0.0); cfg.d];
    direction[t_axis] = Complex64::new(0.0, 1.0);
    let line = CfLine {
        cfg,
        slice: SliceSpec::new(base, direction, Rect::new(0.0, 1.0, 0.0, 1.0)),
        z0: norm.value,
        ctl,
    };

    let count = ((t_range.1 - t_range.0) / step).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|k| t_range.0 + k as f64 * step).collect();
    let mut mags = Vec::with_capacity(count);
    for &t in &grid {
        mags.push(line.at(Complex64::new(t, 0.0))?.norm());
    }
    let grid_min = mags.iter().copied().fold(f64::INFINITY, f64::min);

    let mut candidates: Vec<ZeroCandidate> = Vec::new();
    let mut rectangle_counts = Vec::new();
    for k in 0..count {
        let left = if k > 0 { mags[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < count { mags[k + 1] } else { f64::INFINITY };
        if !(mags[k] <= left && mags[k] <= right && mags[k] < opts.trigger) {
            continue;
        }
        let start = Complex64::new(grid[k], 0.0);
        let (mut tau, mut residual, inside) = line.newton(start, 1.0, tol, opts.max_newton)?;
        if !inside {
            candidates.push(ZeroCandidate {
                t: tau,
                residual,
                status: CandidateStatus::LeftRegion,
                multiplicity: 0,
                real: false,
            });
            continue;
        }
        if candidates
            .iter()
            .any(|c| c.status == CandidateStatus::Confirmed && (c.t - tau).norm() < opts.confirm_radius)
        {
            continue;
        }
        let mut multiplicity = 0;
        let mut status = CandidateStatus::Unconverged;
        if residual < opts.trigger * 1e-2 || residual < tol {
            let rect = Rect::around(tau, opts.confirm_radius);
            let slice = SliceSpec::new(line.slice.base.clone(), line.slice.direction.clone(), rect);
            if let Ok(w) = count_zeros_rectangle(cfg, &slice, ctl) {
                multiplicity = w.zeros;
                rectangle_counts.push((w.rect, w.zeros));
            }
            if multiplicity > 1 {
                // Newton on a multiple root converges linearly; the scaled step restores it.
                let (t2, r2, ok) = line.newton(tau, multiplicity as f64, tol, opts.max_newton)?;
                if ok && r2 <= residual {
                    tau = t2;
                    residual = r2;
                }
            }
            if residual < tol && multiplicity >= 1 {
                status = CandidateStatus::Confirmed;
            }
        }
        let real = status == CandidateStatus::Confirmed
            && tau.im.abs() <= 1e-7 * tau.re.abs().max(1.0)
            && line.at(Complex64::new(tau.re, 0.0))?.norm() < tol;
        if real {
            tau.im = 0.0;
            residual = line.at(tau)?.norm();
        }
        candidates.push(ZeroCandidate {
            t: tau,
            residual,
            status,
            multiplicity,
            real,
        });
    }
    let certificate = candidates.iter().any(|c| c.real);
    Ok(ZeroReport {
        config: cfg.clone(),
        sigma: sigma.to_vec(),
        t_axis,
        t_range,
        step,
        tol,
        candidates,
        grid_min,
        grid_points: count,
        rectangle_counts,
        certificate,
    })
}

/// A record that the distribution at `sigma` is not infinitely divisible.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub sigma: Vec<f64>,
    pub t_axis: usize,
    pub t: f64,
    pub residual: f64,
    /// `|f(t)|` recomputed from the distribution's stored normalizer.
    pub recheck_residual: f64,
    pub tol: f64,
    pub multiplicity: i64,
    pub confirm_radius: f64,
}

impl Certificate {
    pub const CONCLUSION: &'static str = "not infinitely divisible";
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "claim: the characteristic function f of the zeta distribution at sigma = {:?}", self.sigma)?;
        writeln!(f, "       vanishes at t = {:.15} along axis {}", self.t, self.t_axis + 1)?;
        writeln!(f, "residual: |f(t)| = {:.3e} (tolerance {:.1e})", self.residual, self.tol)?;
        writeln!(f, "recheck residual: {:.3e}", self.recheck_residual)?;
        if self.multiplicity > 1 {
            writeln!(
                f,
                "multiplicity: {} (|f| touches zero without a sign change along real t)",
                self.multiplicity
            )?;
        } else {
            writeln!(f, "multiplicity: {}", self.multiplicity)?;
        }
        writeln!(
            f,
            "winding: complex t in [t - {r:.1e}, t + {r:.1e}] x [-{r:.1e}, {r:.1e}] encloses {} zero(s)",
            self.multiplicity,
            r = self.confirm_radius
        )?;
        writeln!(f, "conclusion: {}", Self::CONCLUSION)?;
        writeln!(f, "reason: an infinitely divisible law has a nowhere vanishing characteristic function")?;
        writeln!(f, "verify:")?;
        writeln!(f, "  1. evaluate Z(sigma + i t e_axis) and Z(sigma) with certified tail bounds")?;
        writeln!(f, "  2. check |Z(sigma + i t e_axis)| + tail < tol * |Z(sigma)|")?;
        write!(f, "  3. recount the winding number of f on the square above; it must be >= 1")
    }
}

/// Issues a certificate from the first confirmed real zero in `report`.
pub fn non_id_certificate(report: &ZeroReport, dist: &ZetaDistribution) -> Result<Certificate> {
    if report.config != dist.config || report.sigma != dist.sigma {
        return Err(Error::param("report", "report was computed for a different configuration"));
    }
    let zero = report.candidates.iter().find(|c| c.real).ok_or(Error::NoConfirmedZero)?;
    let mut t = vec![0.0; dist.dim()];
    t[report.t_axis] = zero.t.re;
    let recheck = dist.char_fn(&t)?;
    let radius = report
        .rectangle_counts
        .iter()
        .find(|(r, _)| r.re_lo <= zero.t.re && zero.t.re <= r.re_hi)
        .map(|(r, _)| 0.5 * (r.re_hi - r.re_lo))
        .unwrap_or(ScanOptions::default().confirm_radius);
    Ok(Certificate {
        sigma: report.sigma.clone(),
        t_axis: report.t_axis,
        t: zero.t.re,
        residual: zero.residual,
        recheck_residual: recheck.value.norm() + recheck.error_bound,
        tol: report.tol,
        multiplicity: zero.multiplicity,
        confirm_radius: radius,
    })
}
