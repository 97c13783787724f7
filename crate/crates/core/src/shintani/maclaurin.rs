//! Euler–Maclaurin tail summation for rank-one series whose coefficient is a
//! polynomial in `log(n + u)`.
//!
//! With `y = n + u` the summand is `f(y) = y^(-S) P(log y)`, and
//!
//! ```text
//! sum_{y >= a} f(y) = int_a^inf f + f(a)/2 - sum_{k=1}^K B_2k/(2k)! f^(2k-1)(a) + R,
//! |R| <= |B_2K|/(2K)! int_a^inf |f^(2K)|.
//! ```
//!
//! Every derivative has the form `y^(-S-j) Q_j(log y)`, so all pieces have
//! closed forms.

use num_complex::Complex64;

/// `B_2, B_4, .., B_30`.
const BERNOULLI: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

pub(super) const MAX_ORDER: usize = BERNOULLI.len();

/// `f(y) = y^(-s) sum_i poly[i] (log y)^i` with `Re s > 1`.
pub(super) struct LogPowerSeries {
    s: Complex64,
    /// `derivs[j]` holds the coefficients of `Q_j`.
    derivs: Vec<Vec<Complex64>>,
}

pub(super) struct TailEstimate {
    pub value: Complex64,
    pub bound: f64,
}

impl LogPowerSeries {
    pub fn new(s: Complex64, poly: Vec<Complex64>) -> Self {
        let mut derivs = vec![poly];
        for j in 0..2 * MAX_ORDER {
            let q = &derivs[j];
            let shift = s + j as f64;
            let mut next: Vec<Complex64> = q.iter().map(|c| -shift * c).collect();
            for (i, c) in q.iter().enumerate().skip(1) {
                next[i - 1] += c * i as f64;
            }
            derivs.push(next);
        }
        Self { s, derivs }
    }

    fn derivative_at(&self, j: usize, a: f64) -> Complex64 {
        let b = a.ln();
        let q = horner(&self.derivs[j], Complex64::new(b, 0.0));
        q * (-(self.s + j as f64) * b).exp()
    }

    /// `int_a^inf y^(-s) (log y)^i dy` for each power in the polynomial.
    fn integral(&self, a: f64) -> Complex64 {
        let b = a.ln();
        let z = self.s - 1.0;
        let lead = (-z * b).exp();
        let mut total = Complex64::new(0.0, 0.0);
        for (i, c) in self.derivs[0].iter().enumerate() {
            total += c * lead * log_power_integral(i, b, z);
        }
        total
    }

    /// `int_a^inf |f^(j)(y)| dy`, bounded termwise; requires `a >= 1`.
    fn abs_derivative_integral(&self, j: usize, a: f64) -> f64 {
        let b = a.ln();
        let z = self.s.re + j as f64 - 1.0;
        let lead = (-z * b).exp();
        self.derivs[j]
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() * lead * log_power_integral(i, b, Complex64::new(z, 0.0)).re)
            .sum()
    }

    /// Sum over `y = a, a + 1, ..` with `order` correction terms, `1 <= order <= MAX_ORDER`.
    pub fn tail(&self, a: f64, order: usize) -> TailEstimate {
        let mut value = self.integral(a) + 0.5 * self.derivative_at(0, a);
        let mut factorial = 1.0;
        for k in 1..=order {
            factorial *= ((2 * k - 1) * (2 * k)) as f64;
            value -= BERNOULLI[k - 1] / factorial * self.derivative_at(2 * k - 1, a);
        }
        let bound = BERNOULLI[order - 1].abs() / factorial * self.abs_derivative_integral(2 * order, a);
        TailEstimate { value, bound }
    }

    /// The order in `1..=MAX_ORDER` with the smallest remainder bound at `a`.
    pub fn best_tail(&self, a: f64) -> TailEstimate {
        let mut best: Option<TailEstimate> = None;
        for order in 1..=MAX_ORDER {
            let t = self.tail(a, order);
            if best.as_ref().is_none_or(|b| t.bound < b.bound) {
                best = Some(t);
            }
        }
        best.expect("at least one order")
    }
}

fn horner(poly: &[Complex64], x: Complex64) -> Complex64 {
    poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

/// `e^(zb) int_b^inf e^(-zx) x^i dx = sum_{k=0}^i i!/(i-k)! b^(i-k) / z^(k+1)`.
fn log_power_integral(i: usize, b: f64, z: Complex64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let mut falling = 1.0;
    let mut zpow = z;
    for k in 0..=i {
        if k > 0 {
            falling *= (i - k + 1) as f64;
            zpow *= z;
        }
        total += falling * b.powi((i - k) as i32) / zpow;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_zeta_two_tail() {
        let f = LogPowerSeries::new(Complex64::new(2.0, 0.0), vec![Complex64::new(1.0, 0.0)]);
        let a = 10.0;
        let t = f.best_tail(a);
        let head: f64 = (1..10).map(|n| 1.0 / (n as f64).powi(2)).sum();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((head + t.value.re - zeta2).abs() < 1e-14);
        assert!(t.bound < 1e-12);
    }

    #[test]
    fn log_power_integral_matches_quadrature() {
        // int_2^2000 y^-3 log(y)^2 dy
        let b = 2f64.ln();
        let z = Complex64::new(2.0, 0.0);
        let bt = 2000f64.ln();
        let closed = (-z * b).exp() * log_power_integral(2, b, z) - (-z * bt).exp() * log_power_integral(2, bt, z);
        let mut quad = 0.0;
        let h: f64 = 1e-3;
        let mut y = 2.0 + h / 2.0;
        while y < 2000.0 {
            quad += y.powi(-3) * y.ln().powi(2) * h;
            y += h;
        }
        assert!((closed.re - quad).abs() < 1e-6);
    }
}
