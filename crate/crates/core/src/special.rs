//! Scalar special functions: log-gamma, regularized incomplete gamma and
//! beta, the standard normal, the Beta quantile, and the central and
//! noncentral chi-square distributions.
//!
//! Everything here is pure `f64` code so results are identical on every
//! host and thread.

use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{domain, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized lower incomplete gamma P(a, x).
pub(crate) fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub(crate) fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        1.0 + gamma_p(0.5, x * x)
    }
}

#[inline]
pub(crate) fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return domain(format!("normal_cdf needs a finite argument, got {z}"));
    }
    Ok(phi(z))
}

// Acklam's rational approximation, refined below with Halley steps.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] =
    [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];

fn acklam_tail(q: f64) -> f64 {
    let c = &ACKLAM_C;
    let d = &ACKLAM_D;
    (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
        / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
}

pub(crate) fn phi_inv(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    let mut x = if p < P_LOW {
        acklam_tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        -acklam_tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    for _ in 0..2 {
        // work with the smaller tail to keep the residual accurate
        let e = if p > 0.5 { (1.0 - p) - phi(-x) } else { phi(x) - p };
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Inverse of the standard normal CDF on the open interval (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal_quantile needs 0 < p < 1, got {p}"));
    }
    Ok(phi_inv(p))
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Beta(a, b) distribution with the log normalizer cached, so repeated
/// quantile evaluations for one shape pair stay cheap.
#[derive(Debug, Clone, Copy)]
pub struct BetaDist {
    a: f64,
    b: f64,
    ln_beta: f64,
}

impl BetaDist {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return domain(format!("beta shapes must be positive and finite, got ({a}, {b})"));
        }
        Ok(Self { a, b, ln_beta: ln_beta(a, b) })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn sd(&self) -> f64 {
        let s = self.a + self.b;
        (self.a * self.b / (s * s * (s + 1.0))).sqrt()
    }

    pub fn shapes(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        ((self.a - 1.0) * x.ln() + (self.b - 1.0) * (-x).ln_1p() - self.ln_beta).exp()
    }

    /// Regularized incomplete beta I_x(a, b).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let (a, b) = (self.a, self.b);
        let front = (a * x.ln() + b * (-x).ln_1p() - self.ln_beta).exp();
        if x < (a + 1.0) / (a + b + 2.0) {
            front * beta_continued_fraction(a, b, x) / a
        } else {
            1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
        }
    }

    fn initial_guess(&self, u: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        if a >= 1.0 && b >= 1.0 {
            let pp = if u < 0.5 { u } else { 1.0 - u };
            let t = (-2.0 * pp.ln()).sqrt();
            let mut x = (2.307_53 + t * 0.270_61) / (1.0 + t * (0.992_29 + t * 0.044_81)) - t;
            if u < 0.5 {
                x = -x;
            }
            let al = (x * x - 3.0) / 6.0;
            let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
            let w = x * (al + h).sqrt() / h
                - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
            a / (a + b * (2.0 * w).exp())
        } else {
            let lna = (a / (a + b)).ln();
            let lnb = (b / (a + b)).ln();
            let t = (a * lna).exp() / a;
            let v = (b * lnb).exp() / b;
            let w = t + v;
            if u < t / w {
                (a * w * u).powf(1.0 / a)
            } else {
                1.0 - (b * w * (1.0 - u)).powf(1.0 / b)
            }
        }
    }

    /// Inverse of [`BetaDist::cdf`] by bracketed Halley iteration.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let (a, b) = (self.a, self.b);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut x = self.initial_guess(u);
        if !(x > 0.0 && x < 1.0) || !x.is_finite() {
            x = 0.5;
        }
        for _ in 0..200 {
            let f = self.cdf(x) - u;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - self.ln_beta;
            let t = f / ln_pdf.exp();
            let curvature = (a - 1.0) / x - (b - 1.0) / (1.0 - x);
            let mut next = x - t / (1.0 - 0.5 * (t * curvature).min(1.0));
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let tol = 4.0 * f64::EPSILON * next.min(1.0 - next).max(f64::MIN_POSITIVE);
            if (next - x).abs() <= tol || hi - lo <= tol {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Quantile of Beta(a, b) at probability `u` in [0, 1].
pub fn beta_quantile(u: f64, a: f64, b: f64) -> Result<f64> {
    let dist = BetaDist::new(a, b)?;
    if !(0.0..=1.0).contains(&u) {
        return domain(format!("beta_quantile needs 0 <= u <= 1, got {u}"));
    }
    Ok(dist.quantile(u))
}

/// Central chi-square CDF with `df` degrees of freedom (real df allowed).
pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_p(0.5 * df, 0.5 * x)
    }
}

fn chi2_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return if df < 2.0 {
            f64::INFINITY
        } else if df == 2.0 {
            0.5
        } else {
            0.0
        };
    }
    let k = 0.5 * df;
    ((k - 1.0) * x.ln() - 0.5 * x - k * LN_2 - ln_gamma(k)).exp()
}

fn check_df_ncp(df: u32, ncp: f64) -> Result<()> {
    if df < 1 {
        return domain("degrees of freedom must be at least 1");
    }
    if !(ncp >= 0.0 && ncp.is_finite()) {
        return domain(format!("noncentrality must be finite and nonnegative, got {ncp}"));
    }
    Ok(())
}

/// Sum of Poisson(ncp/2)-weighted terms `term(j)`, walking outward from the
/// modal index until the unvisited Poisson mass drops below 1e-14.
fn poisson_mixture(ncp: f64, mut term: impl FnMut(u32) -> f64) -> f64 {
    let mu = 0.5 * ncp;
    let mode = mu.floor();
    let pmf_mode = (-mu + mode * mu.ln() - ln_gamma(mode + 1.0)).exp();
    let mode = mode as u32;

    let mut total = 0.0;
    let mut mass = 0.0;

    let mut pmf = pmf_mode;
    let mut j = mode;
    loop {
        total += pmf * term(j);
        mass += pmf;
        if j == 0 || pmf < 1e-18 {
            break;
        }
        pmf *= j as f64 / mu;
        j -= 1;
    }

    let mut pmf = pmf_mode;
    let mut j = mode;
    while j < mode + 100_000 {
        pmf *= mu / (j + 1) as f64;
        j += 1;
        let t = term(j);
        total += pmf * t;
        mass += pmf;
        let ratio = mu / (j + 1) as f64;
        let tail_bound = pmf * ratio / (1.0 - ratio);
        if 1.0 - mass < 1e-14 || tail_bound < 1e-14 || (1.0 - mass) * t < 1e-16 {
            break;
        }
    }
    total
}

/// CDF of the noncentral chi-square with `df` degrees of freedom and
/// noncentrality `ncp`, as a Poisson mixture of central CDFs.
pub fn noncentral_chi2_cdf(x: f64, df: u32, ncp: f64) -> Result<f64> {
    check_df_ncp(df, ncp)?;
    if x.is_nan() {
        return domain("noncentral_chi2_cdf got NaN");
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let df = df as f64;
    if ncp == 0.0 {
        return Ok(chi2_cdf(x, df));
    }
    let v = poisson_mixture(ncp, |j| chi2_cdf(x, df + 2.0 * j as f64));
    Ok(v.clamp(0.0, 1.0))
}

/// Density of the noncentral chi-square.
pub fn noncentral_chi2_pdf(x: f64, df: u32, ncp: f64) -> Result<f64> {
    check_df_ncp(df, ncp)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    let df = df as f64;
    if ncp == 0.0 {
        return Ok(chi2_pdf(x, df));
    }
    Ok(poisson_mixture(ncp, |j| chi2_pdf(x, df + 2.0 * j as f64)))
}

/// Quantile of the noncentral chi-square: bracketed bisection with Newton
/// steps on the density.
pub fn noncentral_chi2_quantile(q: f64, df: u32, ncp: f64) -> Result<f64> {
    check_df_ncp(df, ncp)?;
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("noncentral_chi2_quantile needs 0 < q < 1, got {q}"));
    }
    let dff = df as f64;
    let mut lo = 0.0_f64;
    let mut hi = dff + ncp + 20.0 * (2.0 * dff + 4.0 * ncp).sqrt() + 20.0;
    while noncentral_chi2_cdf(hi, df, ncp)? < q {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = (dff + ncp).clamp(lo, hi);
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..500 {
        let f = noncentral_chi2_cdf(x, df, ncp)? - q;
        if f.abs() < 1e-14 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = noncentral_chi2_pdf(x, df, ncp)?;
        let mut next = if density > 0.0 && density.is_finite() { x - f / density } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 1e-15 * hi.max(1e-300) || (next - x).abs() <= 1e-15 * x.max(1e-300) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Maclaurin series for erf, independent of the incomplete-gamma path.
    fn erf_series(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = x;
        let mut n = 0.0;
        loop {
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
            n += 1.0;
            term *= -x * x / n;
        }
        2.0 / PI.sqrt() * sum
    }

    fn phi_oracle(z: f64) -> f64 {
        // the series cancels badly in the tails
        if z.abs() < 3.0 {
            0.5 * (1.0 + erf_series(z / SQRT_2))
        } else {
            0.5 * statrs::function::erf::erfc(-z / SQRT_2)
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(0.5), 0.5 * PI.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(10.0), 362_880_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(0.1), 2.252_712_651_734_206, epsilon = 1e-13);
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(normal_cdf(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(normal_cdf(1.959964).unwrap(), 0.975, epsilon = 1e-6);
        assert_abs_diff_eq!(normal_cdf(1.959964).unwrap(), phi_oracle(1.959964), epsilon = 1e-12);
        assert!(normal_cdf(-40.0).unwrap() < 1e-300);
        assert!(normal_cdf(f64::NAN).is_err());
        assert!(normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn normal_cdf_matches_series_on_grid() {
        for i in -60..=60 {
            let z = i as f64 * 0.05;
            assert_abs_diff_eq!(phi(z), phi_oracle(z), epsilon = 1e-12);
        }
    }

    #[test]
    fn normal_quantile_examples() {
        assert_abs_diff_eq!(normal_quantile(0.5).unwrap(), 0.0, epsilon = 1e-15);
        // bisection on the series oracle
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_oracle(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(normal_quantile(0.975).unwrap(), lo, epsilon = 1e-10);
        assert_abs_diff_eq!(normal_quantile(0.975).unwrap(), 1.959964, epsilon = 1e-6);
        let z = normal_quantile(0.123).unwrap();
        assert_abs_diff_eq!(normal_cdf(z).unwrap(), 0.123, epsilon = 1e-10);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn normal_quantile_round_trip_tails() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-6] {
            let z = phi_inv(p);
            let back = phi(z);
            assert!((back - p).abs() <= 1e-10 * p.max(1e-3), "p={p} back={back}");
        }
    }

    #[test]
    fn beta_quantile_examples() {
        assert_abs_diff_eq!(beta_quantile(0.5, 1.0, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(beta_quantile(0.25, 2.0, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        let arcsine = (0.975 * PI / 2.0).sin().powi(2);
        assert_abs_diff_eq!(beta_quantile(0.975, 0.5, 0.5).unwrap(), arcsine, epsilon = 1e-10);
        assert_abs_diff_eq!(arcsine, 0.99846, epsilon = 1e-5);
        assert_eq!(beta_quantile(0.0, 0.5, 1.5).unwrap(), 0.0);
        assert_eq!(beta_quantile(1.0, 0.5, 1.5).unwrap(), 1.0);
        assert!(beta_quantile(0.5, 0.0, 1.0).is_err());
        assert!(beta_quantile(0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn beta_quantile_inverts_cdf_across_shapes() {
        for &a in &[0.5, 0.8, 1.0, 1.5, 3.0] {
            for &b in &[0.5, 1.0, 1.3, 2.5] {
                let d = BetaDist::new(a, b).unwrap();
                for i in 1..100 {
                    let u = i as f64 / 100.0;
                    let x = d.quantile(u);
                    assert_abs_diff_eq!(d.cdf(x), u, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn noncentral_cdf_examples() {
        assert_eq!(noncentral_chi2_cdf(0.0, 1, 5.0).unwrap(), 0.0);
        assert_eq!(noncentral_chi2_cdf(-1.0, 1, 5.0).unwrap(), 0.0);
        let central = 2.0 * phi_oracle(3.8415_f64.sqrt()) - 1.0;
        assert_abs_diff_eq!(noncentral_chi2_cdf(3.8415, 1, 0.0).unwrap(), central, epsilon = 1e-12);
        assert_abs_diff_eq!(central, 0.95, epsilon = 1e-4);
        assert!(noncentral_chi2_cdf(1.0, 0, 1.0).is_err());
    }

    #[test]
    fn noncentral_cdf_one_df_closed_form() {
        // P((Z + s)^2 <= x) = Phi(sqrt x - s) - Phi(-sqrt x - s)
        for &ncp in &[0.3, 2.0, 7.849, 20.0, 45.0] {
            for &x in &[0.1, 1.0, 3.8415, 10.0, 30.0, 80.0] {
                let s = f64::sqrt(ncp);
                let r = f64::sqrt(x);
                let exact = phi_oracle(r - s) - phi_oracle(-r - s);
                let got = noncentral_chi2_cdf(x, 1, ncp).unwrap();
                assert_abs_diff_eq!(got, exact, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn central_two_df_is_exponential() {
        for &x in &[0.1, 1.0, 5.0, 30.0] {
            assert_abs_diff_eq!(noncentral_chi2_cdf(x, 2, 0.0).unwrap(), 1.0 - (-x / 2.0).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn noncentral_quantile_examples() {
        let z = normal_quantile(0.975).unwrap();
        assert_abs_diff_eq!(noncentral_chi2_quantile(0.95, 1, 0.0).unwrap(), z * z, epsilon = 1e-9);
        let x = noncentral_chi2_quantile(0.8, 3, 2.0).unwrap();
        assert_abs_diff_eq!(noncentral_chi2_cdf(x, 3, 2.0).unwrap(), 0.8, epsilon = 1e-9);
        assert!(noncentral_chi2_quantile(0.9, 1, 0.0).unwrap() > noncentral_chi2_quantile(0.5, 1, 0.0).unwrap());
        assert!(noncentral_chi2_quantile(1.0, 1, 0.0).is_err());
        assert!(noncentral_chi2_quantile(0.0, 1, 0.0).is_err());
    }

    #[test]
    fn pdf_integrates_to_cdf_differences() {
        // Simpson on [2, 6] against the CDF difference.
        let (df, ncp) = (3, 4.0);
        let (a, b) = (2.0, 6.0);
        let n = 2000;
        let h = (b - a) / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * noncentral_chi2_pdf(a + i as f64 * h, df, ncp).unwrap();
        }
        s *= h / 3.0;
        let diff = noncentral_chi2_cdf(b, df, ncp).unwrap() - noncentral_chi2_cdf(a, df, ncp).unwrap();
        assert_abs_diff_eq!(s, diff, epsilon = 1e-10);
    }
}
