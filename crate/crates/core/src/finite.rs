//! Empirical designs with known coefficients, and finite-sample power of the
//! Wald test by simulation.

use nalgebra::{DMatrix, DVector};

use crate::effect::{effect_sizes_from_draws, weighted_projection, DesignDraws, EffectSummary};
use crate::error::{domain, Error, Result};
use crate::family::{Family, FamilyLink, Link};
use crate::glm::{conditional_information, irls_fit, wald_test, with_estimated_dispersion};
use crate::par;
use crate::random::{sample_outcome, RngStream};

/// Rows of predictors `x` and adjustors `z` (leading 1) with equal mass, and
/// the true coefficients of `eta = lambda'z + beta'x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDesign {
    fl: FamilyLink,
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    beta: Vec<f64>,
    lambda: Vec<f64>,
}

impl EmpiricalDesign {
    pub fn new(fl: FamilyLink, x: Vec<Vec<f64>>, z: Vec<Vec<f64>>, beta: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n == 0 || z.len() != n {
            return domain(format!("design needs matching nonempty x and z rows, got {} and {}", n, z.len()));
        }
        let p = beta.len();
        let q = lambda.len();
        if p == 0 || q == 0 {
            return domain("design needs at least one predictor and the intercept adjustor");
        }
        for i in 0..n {
            if x[i].len() != p || z[i].len() != q {
                return domain(format!(
                    "row {i} has {} predictors and {} adjustors, expected {p} and {q}",
                    x[i].len(),
                    z[i].len()
                ));
            }
            if z[i][0] != 1.0 {
                return domain(format!("row {i} does not start with the constant adjustor 1"));
            }
            if let Some(v) = x[i].iter().chain(&z[i]).find(|v| !v.is_finite()) {
                return domain(format!("row {i} has non-finite value {v}"));
            }
        }
        let design = Self { fl, x, z, beta, lambda };
        for i in 0..n {
            let eta = design.eta(i);
            fl.link_eval(eta).map_err(|e| Error::Domain(format!("row {i}: {e}")))?;
        }
        Ok(design)
    }

    pub fn family(&self) -> &FamilyLink {
        &self.fl
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn q(&self) -> usize {
        self.lambda.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i]
    }

    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i]
    }

    pub fn eta(&self, i: usize) -> f64 {
        dot(&self.lambda, &self.z[i]) + dot(&self.beta, &self.x[i])
    }

    /// The same design with `beta` multiplied by `delta`.
    pub fn with_scaled_beta(&self, delta: f64) -> Result<Self> {
        let beta = self.beta.iter().map(|b| b * delta).collect();
        Self::new(self.fl, self.x.clone(), self.z.clone(), beta, self.lambda.clone())
    }

    /// The same design with rows reordered so row `i` is old row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return domain("permutation length differs from the row count");
        }
        let x = order.iter().map(|&i| self.x[i].clone()).collect();
        let z = order.iter().map(|&i| self.z[i].clone()).collect();
        Self::new(self.fl, x, z, self.beta.clone(), self.lambda.clone())
    }

    pub fn to_draws(&self) -> Result<DesignDraws> {
        let q = self.q();
        let z = self.z.iter().flatten().copied().collect();
        let eta = (0..self.len()).map(|i| self.eta(i)).collect();
        DesignDraws::equal_mass(self.fl, q, z, eta)
    }

    pub fn effect_sizes(&self) -> Result<EffectSummary> {
        effect_sizes_from_draws(&self.to_draws()?)
    }

    /// `f2 = E[w (eta - eta_z)^2]` from the projection.
    pub fn f2(&self) -> Result<f64> {
        let draws = self.to_draws()?;
        let proj = weighted_projection(&draws)?;
        let n = self.len() as f64;
        Ok(draws.eta().iter().zip(&proj.eta_z).zip(&proj.weights).map(|((e, ez), w)| w * (e - ez).powi(2)).sum::<f64>()
            / n)
    }

    /// `f2` as `beta' (I_xx - I_xz I_zz^{-1} I_zx) beta` with the
    /// per-observation expected information `I = E[w (z, x)(z, x)']`.
    pub fn f2_from_information(&self) -> Result<f64> {
        let (q, p) = (self.q(), self.p());
        let k = q + p;
        let mut info = DMatrix::zeros(k, k);
        for i in 0..self.len() {
            let w = self.fl.link_eval(self.eta(i))?.weight;
            let row: Vec<f64> = self.z[i].iter().chain(&self.x[i]).copied().collect();
            for a in 0..k {
                for b in 0..k {
                    info[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        info /= self.len() as f64;
        let schur = conditional_information(&info, q, p)?;
        let b = DVector::from_column_slice(&self.beta);
        Ok((b.transpose() * schur * &b)[(0, 0)])
    }

    fn design_matrix(&self, rows: &[usize]) -> DMatrix<f64> {
        let (q, p) = (self.q(), self.p());
        DMatrix::from_fn(rows.len(), q + p, |r, c| {
            let i = rows[r];
            if c < q {
                self.z[i][c]
            } else {
                self.x[i][c - q]
            }
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale `delta` such that the design with `delta * beta` has `f2` equal to
/// `target` within 1e-8, by bisection on `delta`.
pub fn rescale_beta_to_f2(design: &EmpiricalDesign, target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return domain(format!("target f2 must be positive, got {target}"));
    }
    let current = design.f2()?;
    if !(current > 0.0) {
        return Err(Error::Infeasible("f2 is zero at the given coefficients; no rescaling reaches the target".into()));
    }
    let f2_at = |delta: f64| design.with_scaled_beta(delta).and_then(|d| d.f2());

    let (mut lo, mut hi) = (0.0, 1.0);
    if current < target {
        let mut f_hi = current;
        while f_hi < target {
            lo = hi;
            let next = hi * 2.0;
            match f2_at(next) {
                Ok(f) => f_hi = f,
                Err(Error::Domain(_)) => {
                    return find_domain_limit(design, hi, next).and_then(|limit| {
                        Err(Error::Domain(format!(
                            "the predictor leaves the mean domain at delta = {limit:.6} before f2 reaches {target}"
                        )))
                    })
                }
                Err(e) => return Err(e),
            }
            hi = next;
            if hi > 1e6 {
                return Err(Error::Infeasible(format!("f2 does not reach {target} for any delta up to 1e6")));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = f2_at(mid)?;
        if (f - target).abs() <= 1e-12 * target.max(1.0) {
            return Ok(mid);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let delta = 0.5 * (lo + hi);
    let f = f2_at(delta)?;
    if (f - target).abs() > 1e-8 {
        return Err(Error::NonConvergence {
            iterations: 200,
            context: format!("rescaling reached f2 = {f} for target {target}"),
        });
    }
    Ok(delta)
}

/// Largest scale in `[ok, bad)` for which the design stays in the domain.
fn find_domain_limit(design: &EmpiricalDesign, mut ok: f64, mut bad: f64) -> Result<f64> {
    for _ in 0..60 {
        let mid = 0.5 * (ok + bad);
        if design.with_scaled_beta(mid).is_ok() {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    Ok(ok)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSimulation {
    /// Share of usable replicates whose Wald test rejected.
    pub rejection_rate: f64,
    /// Binomial standard error of the rate.
    pub mc_stderr: f64,
    /// Replicates without a usable fit (no convergence, separation, errors).
    pub fit_failures: usize,
    pub replicates: usize,
}

/// Fitted coefficients beyond this size mark a separated logistic fit.
pub const SEPARATION_LIMIT: f64 = 15.0;

enum Replicate {
    Reject,
    Accept,
    Failed,
}

fn replicate(design: &EmpiricalDesign, n: usize, alpha: f64, seed: u64, rep: usize) -> Result<Replicate> {
    let mut rng = RngStream::new(seed, rep as u64);
    let fl = design.family();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.index(design.len());
        let mu = fl.inverse_link(design.eta(i))?;
        rows.push(i);
        y.push(sample_outcome(fl, mu, &mut rng)?);
    }
    let x = design.design_matrix(&rows);
    let fit = match irls_fit(&x, &y, fl) {
        Ok(f) => f,
        Err(_) => return Ok(Replicate::Failed),
    };
    let separated = fl.family() == Family::Bernoulli
        && fl.link() == Link::Logit
        && fit.coefficients.iter().any(|b| b.abs() > SEPARATION_LIMIT);
    if !fit.converged || separated {
        return Ok(Replicate::Failed);
    }
    let fit = match with_estimated_dispersion(fit, &y) {
        Ok(f) => f,
        Err(_) => return Ok(Replicate::Failed),
    };
    let predictors: Vec<usize> = (design.q()..design.q() + design.p()).collect();
    match wald_test(&fit, &predictors, alpha) {
        Ok(t) if t.reject => Ok(Replicate::Reject),
        Ok(_) => Ok(Replicate::Accept),
        Err(_) => Ok(Replicate::Failed),
    }
}

/// Rejection rate of the Wald test of `beta = 0` over `reps` samples of `n`
/// rows drawn with replacement, outcomes drawn from the model. Replicate `r`
/// uses stream `(seed, r)` regardless of scheduling.
pub fn simulate_power(
    design: &EmpiricalDesign,
    n: usize,
    reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<PowerSimulation> {
    let cols = design.p() + design.q();
    if n < cols + 10 {
        return domain(format!("sample size {n} is below columns + 10 = {}", cols + 10));
    }
    if reps == 0 {
        return domain("at least one replicate is required");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("significance level must lie in (0, 1), got {alpha}"));
    }
    let outcomes = par::map_range(reps, |r| replicate(design, n, alpha, seed, r));
    let (mut rejects, mut failures) = (0usize, 0usize);
    for o in outcomes {
        match o? {
            Replicate::Reject => rejects += 1,
            Replicate::Accept => {}
            Replicate::Failed => failures += 1,
        }
    }
    let usable = reps - failures;
    if usable == 0 {
        return Err(Error::Estimation(format!("all {reps} replicate fits failed")));
    }
    let rate = rejects as f64 / usable as f64;
    Ok(PowerSimulation {
        rejection_rate: rate,
        mc_stderr: (rate * (1.0 - rate) / usable as f64).sqrt(),
        fit_failures: failures,
        replicates: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point(beta: f64) -> EmpiricalDesign {
        EmpiricalDesign::new(
            FamilyLink::logistic(),
            vec![vec![0.0], vec![1.0]],
            vec![vec![1.0], vec![1.0]],
            vec![beta],
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn two_routes_to_f2_agree() {
        let d = two_point(1.0);
        assert_abs_diff_eq!(d.f2().unwrap(), 0.055_028_739_328_146_86, epsilon = 1e-14);
        assert_abs_diff_eq!(d.f2_from_information().unwrap(), d.f2().unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn rescale_two_point_logistic() {
        let d = two_point(1.0);
        let delta = rescale_beta_to_f2(&d, 0.02).unwrap();
        assert_abs_diff_eq!(delta, 0.577_688_816_784_594_7, epsilon = 1e-8);
        assert_abs_diff_eq!(d.with_scaled_beta(delta).unwrap().f2().unwrap(), 0.02, epsilon = 1e-8);
        let same = rescale_beta_to_f2(&d, d.f2().unwrap()).unwrap();
        assert_abs_diff_eq!(same, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn rescale_normal_is_square_root() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
        let z: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, (i as f64 * 0.11).cos()]).collect();
        let d = EmpiricalDesign::new(FamilyLink::normal(2.0), x, z, vec![0.3], vec![1.0, 0.5]).unwrap();
        let cur = d.f2().unwrap();
        let delta = rescale_beta_to_f2(&d, 0.05).unwrap();
        assert_abs_diff_eq!(delta, (0.05 / cur).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn rescale_errors() {
        assert!(matches!(rescale_beta_to_f2(&two_point(0.0), 0.02), Err(Error::Infeasible(_))));
        let lpm = FamilyLink::new(Family::Bernoulli, Link::Identity, 1.0).unwrap();
        let d = EmpiricalDesign::new(lpm, vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![1.0]], vec![0.1], vec![0.5])
            .unwrap();
        let err = rescale_beta_to_f2(&d, 10.0).unwrap_err();
        match err {
            Error::Domain(m) => assert!(m.contains("delta = 5.0"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn design_validation() {
        let fl = FamilyLink::logistic();
        assert!(EmpiricalDesign::new(fl, vec![vec![1.0]], vec![vec![0.0]], vec![1.0], vec![0.0]).is_err());
        assert!(EmpiricalDesign::new(fl, vec![vec![1.0, 2.0]], vec![vec![1.0]], vec![1.0], vec![0.0]).is_err());
        let pois = FamilyLink::poisson_log();
        assert!(EmpiricalDesign::new(pois, vec![vec![1.0]], vec![vec![1.0]], vec![800.0], vec![0.0]).is_err());
    }

    #[test]
    fn simulate_power_checks_inputs() {
        let d = two_point(0.5);
        assert!(simulate_power(&d, 5, 10, 0.05, 1).is_err());
        assert!(simulate_power(&d, 100, 0, 0.05, 1).is_err());
    }

    #[test]
    fn simulation_is_reproducible() {
        let d = two_point(0.5);
        let a = simulate_power(&d, 120, 200, 0.05, 7).unwrap();
        let b = simulate_power(&d, 120, 200, 0.05, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replicates, 200);
    }
}
