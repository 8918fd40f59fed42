//! Asymptotic power and sample size for the Wald test.
//!
//! With `n` observations and per-observation noncentrality `f2`, the Wald
//! statistic is approximately noncentral chi-square with `p` degrees of
//! freedom and noncentrality `n * f2`, so power is
//! `1 - F_{p, n f2}(F_{p, 0}^{-1}(1 - alpha))`.

use crate::error::{domain, Error, Result};
use crate::special::{noncentral_chi2_cdf, noncentral_chi2_quantile};

/// Significance level, degrees of freedom, noncentrality per observation,
/// and either a sample size or a target power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerQuery {
    pub alpha: f64,
    pub df: u32,
    pub f2_tilde: f64,
    pub target: Target,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    SampleSize(u64),
    Power(f64),
}

impl PowerQuery {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.df < 1 {
            return domain("degrees of freedom must be at least 1");
        }
        if !(self.f2_tilde >= 0.0 && self.f2_tilde.is_finite()) {
            return domain(format!("noncentrality per observation must be nonnegative, got {}", self.f2_tilde));
        }
        match self.target {
            Target::SampleSize(0) => domain("sample size must be at least 1"),
            Target::SampleSize(_) => Ok(()),
            Target::Power(q) => check_target(q, self.alpha),
        }
    }

    /// Power for a sample-size query, sample size for a power query.
    pub fn solve(&self) -> Result<QueryAnswer> {
        self.validate()?;
        match self.target {
            Target::SampleSize(n) => Ok(QueryAnswer::Power(power(n, self.f2_tilde, self.df, self.alpha)?)),
            Target::Power(q) => Ok(QueryAnswer::SampleSize(sample_size(q, self.f2_tilde, self.df, self.alpha)?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QueryAnswer {
    Power(f64),
    SampleSize(u64),
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("significance level must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

fn check_target(q: f64, alpha: f64) -> Result<()> {
    if !(q > alpha && q < 1.0) {
        return domain(format!("target power must lie in (alpha, 1) = ({alpha}, 1), got {q}"));
    }
    Ok(())
}

/// Rejection threshold `F_{p,0}^{-1}(1 - alpha)`.
pub fn critical_value(df: u32, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    noncentral_chi2_quantile(1.0 - alpha, df, 0.0)
}

/// Power at total noncentrality `ncp`.
pub fn power_at_noncentrality(ncp: f64, df: u32, alpha: f64) -> Result<f64> {
    let crit = critical_value(df, alpha)?;
    Ok(1.0 - noncentral_chi2_cdf(crit, df, ncp)?)
}

/// Asymptotic power with `n` observations.
pub fn power(n: u64, f2_tilde: f64, df: u32, alpha: f64) -> Result<f64> {
    if n == 0 {
        return domain("sample size must be at least 1");
    }
    if !(f2_tilde >= 0.0 && f2_tilde.is_finite()) {
        return domain(format!("noncentrality per observation must be nonnegative, got {f2_tilde}"));
    }
    power_at_noncentrality(n as f64 * f2_tilde, df, alpha)
}

/// Total noncentrality at which the test reaches power `q_star`.
pub fn noncentrality_for_power(q_star: f64, df: u32, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_target(q_star, alpha)?;
    let crit = critical_value(df, alpha)?;
    let pw = |ncp: f64| -> Result<f64> { Ok(1.0 - noncentral_chi2_cdf(crit, df, ncp)?) };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while pw(hi)? < q_star {
        lo = hi;
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::Infeasible(format!("power {q_star} is out of reach")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pw(mid)? < q_star {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest `n` whose power reaches `q_star`.
pub fn sample_size(q_star: f64, f2_tilde: f64, df: u32, alpha: f64) -> Result<u64> {
    if !(f2_tilde.is_finite() && f2_tilde >= 0.0) {
        return domain(format!("noncentrality per observation must be nonnegative, got {f2_tilde}"));
    }
    if f2_tilde == 0.0 {
        return Err(Error::Infeasible("zero effect size: no sample size reaches the target power".into()));
    }
    let nu = noncentrality_for_power(q_star, df, alpha)?;
    let mut n = ((nu / f2_tilde).ceil() as u64).max(1);
    while power(n, f2_tilde, df, alpha)? < q_star {
        n += 1;
    }
    while n > 1 && power(n - 1, f2_tilde, df, alpha)? >= q_star {
        n -= 1;
    }
    Ok(n)
}

/// Change in power, in percentage points, when a design sized for power
/// `q*` with an approximate effect size meets a true effect that differs by
/// relative error `re`: rows follow `targets`, columns `rel_errors`.
pub fn power_error_table(targets: &[f64], rel_errors: &[f64], df: u32, alpha: f64) -> Result<Vec<Vec<f64>>> {
    if let Some(re) = rel_errors.iter().find(|&&re| !(1.0 + re > 0.0)) {
        return domain(format!("relative error {re} leaves no positive noncentrality"));
    }
    targets
        .iter()
        .map(|&q| {
            let nu = noncentrality_for_power(q, df, alpha)?;
            rel_errors
                .iter()
                .map(|&re| {
                    if re == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(100.0 * (power_at_noncentrality(nu * (1.0 + re), df, alpha)? - q))
                })
                .collect()
        })
        .collect()
}

/// Target powers (as fractions) of the standard power-error grid.
pub const TABLE_TARGETS: [f64; 8] = [0.60, 0.64, 0.68, 0.72, 0.76, 0.80, 0.84, 0.88];
/// Relative errors of the standard power-error grid.
pub const TABLE_REL_ERRORS: [f64; 6] = [-0.15, -0.10, -0.05, 0.05, 0.10, 0.15];
