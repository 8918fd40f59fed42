//! Maximum-likelihood fitting by iteratively reweighted least squares, the
//! partitioned Fisher information, and the Wald test of a coefficient block.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::family::{Family, FamilyLink, Link};
use crate::linalg::{condition_number, inverse_spd, solve_spd, symmetrize, MAX_CONDITION};
use crate::special::{gamma_q, noncentral_chi2_quantile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Relative change in the coefficient vector treated as converged.
    pub coef_tol: f64,
    /// Score norm treated as converged.
    pub score_tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self { max_iter: 100, max_halvings: 10, coef_tol: 1e-10, score_tol: 1e-8 }
    }
}

/// Outcome of [`irls_fit`].
///
/// Coefficients follow the column order of the design matrix; by
/// convention adjustors come first and predictors after them.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: DVector<f64>,
    /// Expected information `sum_i w_i x_i x_i'` at the fitted coefficients
    /// (n times the per-observation information).
    pub information: DMatrix<f64>,
    pub fitted: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood (up to constants) after each iteration.
    pub objective_trace: Vec<f64>,
    pub score_norm: f64,
    pub family: FamilyLink,
}

impl FitResult {
    /// A fit assembled from coefficients and information computed elsewhere.
    pub fn from_parts(coefficients: DVector<f64>, information: DMatrix<f64>, family: FamilyLink) -> Self {
        Self {
            coefficients,
            information,
            fitted: Vec::new(),
            converged: true,
            iterations: 0,
            objective_trace: Vec::new(),
            score_norm: 0.0,
            family,
        }
    }

    /// The same fit with the information rescaled to a new auxiliary
    /// parameter (normal variance, gamma or inverse Gaussian shape).
    pub fn with_aux(&self, aux: f64) -> Result<Self> {
        let family = self.family.with_aux(aux)?;
        let scale = self.family.variance(1.0) / family.variance(1.0);
        let mut out = self.clone();
        out.information *= scale;
        out.family = family;
        Ok(out)
    }
}

fn start_mean(fl: &FamilyLink, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let sum: f64 = y.iter().sum();
    match fl.family() {
        // empirical logit / shrunken proportion
        Family::Bernoulli => {
            let p = (sum + 0.5) / (n + 1.0);
            if fl.link() == Link::Log {
                p.min(0.95)
            } else {
                p
            }
        }
        Family::Poisson => ((sum + 0.5) / n).max(1e-3),
        Family::Gamma | Family::InverseGaussian => (sum / n).max(1e-8),
        Family::Normal => sum / n,
    }
}

fn log_likelihood(fl: &FamilyLink, y: &[f64], eta: &DVector<f64>) -> Option<f64> {
    let mut ll = 0.0;
    for (yi, &e) in y.iter().zip(eta.iter()) {
        let mu = fl.inverse_link(e).ok()?;
        ll += fl.log_likelihood(*yi, mu);
    }
    ll.is_finite().then_some(ll)
}

/// Weighted cross-products `X'WX` and `X'Wz` plus the score `X'u`.
fn weighted_system(
    fl: &FamilyLink,
    x: &DMatrix<f64>,
    y: &[f64],
    eta: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let k = x.ncols();
    let mut xtwx = DMatrix::zeros(k, k);
    let mut xtwz = DVector::zeros(k);
    let mut score = DVector::zeros(k);
    for i in 0..x.nrows() {
        let lv = fl.link_eval(eta[i])?;
        let w = lv.weight;
        let resid = y[i] - lv.mu;
        let z = eta[i] + resid / lv.dmu_deta;
        let u = resid * lv.dmu_deta / lv.var;
        let row = x.row(i);
        for a in 0..k {
            let xa = row[a];
            if xa == 0.0 {
                continue;
            }
            xtwz[a] += w * xa * z;
            score[a] += xa * u;
            for b in 0..=a {
                xtwx[(a, b)] += w * xa * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtwx[(b, a)] = xtwx[(a, b)];
        }
    }
    Ok((xtwx, xtwz, score))
}

fn information_at(fl: &FamilyLink, x: &DMatrix<f64>, eta: &DVector<f64>) -> Result<DMatrix<f64>> {
    let k = x.ncols();
    let mut info = DMatrix::zeros(k, k);
    for i in 0..x.nrows() {
        let w = fl.link_eval(eta[i])?.weight;
        let row = x.row(i);
        for a in 0..k {
            for b in 0..=a {
                info[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            info[(b, a)] = info[(a, b)];
        }
    }
    Ok(info)
}

/// Fits the GLM `g(E[y]) = X b` by maximum likelihood.
pub fn irls_fit(x: &DMatrix<f64>, y: &[f64], fl: &FamilyLink) -> Result<FitResult> {
    irls_fit_with(x, y, fl, &IrlsOptions::default())
}

pub fn irls_fit_with(x: &DMatrix<f64>, y: &[f64], fl: &FamilyLink, opts: &IrlsOptions) -> Result<FitResult> {
    let (n, k) = x.shape();
    if y.len() != n {
        return domain(format!("design has {n} rows but {} outcomes", y.len()));
    }
    if n < k || k == 0 {
        return domain(format!("need at least as many rows as columns, got {n}x{k}"));
    }
    if let Some(i) = y.iter().position(|&v| !fl.valid_outcome(v)) {
        return domain(format!("outcome {} at row {i} is invalid for the {} family", y[i], fl.family()));
    }
    let xtx = x.transpose() * x;
    let cond = condition_number(&xtx);
    if cond > MAX_CONDITION {
        return Err(Error::Singular(format!("design matrix is rank deficient (condition {cond:.3e})")));
    }

    let mu0 = start_mean(fl, y);
    let eta0 = fl.link_fn(mu0)?;
    let intercept = (0..k).find(|&j| x.column(j).iter().all(|&v| v == 1.0));
    let mut beta = DVector::zeros(k);
    let mut eta = match intercept {
        Some(j) => {
            beta[j] = eta0;
            DVector::from_element(n, eta0)
        }
        None => {
            let target = DVector::from_element(n, eta0);
            beta = solve_spd(&xtx, &(x.transpose() * &target), "X'X")?;
            x * &beta
        }
    };
    let mut ll = log_likelihood(fl, y, &eta);
    if ll.is_none() {
        // no-intercept start left the mean domain; fall back to a constant predictor
        eta = DVector::from_element(n, eta0);
        ll = log_likelihood(fl, y, &eta);
    }
    let mut ll = ll.ok_or_else(|| Error::Domain("starting values outside the mean domain".into()))?;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut score_norm = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let (xtwx, xtwz, _) = weighted_system(fl, x, y, &eta)?;
        // the design was checked up front, so a singular weighted system
        // means the weights collapsed (separation) rather than bad input
        let Ok(proposal) = solve_spd(&xtwx, &xtwz, "weighted normal equations") else {
            break;
        };

        let mut candidate = proposal;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand_eta = x * &candidate;
            if let Some(cand_ll) = log_likelihood(fl, y, &cand_eta) {
                if cand_ll >= ll - 1e-12 * (1.0 + ll.abs()) {
                    accepted = Some((cand_eta, cand_ll));
                    break;
                }
            }
            candidate = (&candidate + &beta) * 0.5;
        }
        let Some((new_eta, new_ll)) = accepted else {
            break;
        };

        let step = (&candidate - &beta).norm();
        let scale = candidate.norm().max(1.0);
        beta = candidate;
        eta = new_eta;
        ll = new_ll;
        trace.push(ll);

        let (_, _, score) = weighted_system(fl, x, y, &eta)?;
        score_norm = score.norm();
        if step <= opts.coef_tol * scale || score_norm < opts.score_tol {
            converged = true;
            break;
        }
    }

    let mut information = information_at(fl, x, &eta)?;
    symmetrize(&mut information);
    let fitted = eta.iter().map(|&e| fl.inverse_link(e)).collect::<Result<Vec<_>>>()?;
    Ok(FitResult {
        coefficients: beta,
        information,
        fitted,
        converged,
        iterations,
        objective_trace: trace,
        score_norm,
        family: *fl,
    })
}

/// Pearson moment estimate of the shape `k` for gamma or inverse Gaussian
/// fits: `1/k = sum((y - mu)^2 / V(mu)) / (n - p)` with `V` the unit
/// variance function.
pub fn pearson_shape(fit: &FitResult, y: &[f64]) -> Result<f64> {
    let n = y.len();
    let p = fit.coefficients.len();
    if n != fit.fitted.len() || n <= p {
        return domain("pearson_shape needs the fitted means and more rows than coefficients");
    }
    let unit_power = match fit.family.family() {
        Family::Gamma => 2,
        Family::InverseGaussian => 3,
        other => return domain(format!("no shape parameter for the {other} family")),
    };
    let chi2: f64 = y.iter().zip(&fit.fitted).map(|(&yi, &mu)| (yi - mu).powi(2) / mu.powi(unit_power)).sum();
    let dispersion = chi2 / (n - p) as f64;
    if !(dispersion > 0.0) {
        return domain("Pearson dispersion is zero");
    }
    Ok(1.0 / dispersion)
}

/// The fit with the normal variance (residual sum of squares over `n - k`)
/// or the gamma / inverse Gaussian shape (Pearson) estimated from `y`.
pub fn with_estimated_dispersion(fit: FitResult, y: &[f64]) -> Result<FitResult> {
    match fit.family.family() {
        Family::Gamma | Family::InverseGaussian => {
            let k = pearson_shape(&fit, y)?;
            fit.with_aux(k)
        }
        Family::Normal => {
            let df = (y.len() - fit.coefficients.len()) as f64;
            let rss: f64 = y.iter().zip(&fit.fitted).map(|(a, b)| (a - b).powi(2)).sum();
            fit.with_aux(rss / df)
        }
        Family::Bernoulli | Family::Poisson => Ok(fit),
    }
}

/// Information about the last `p` coefficients after adjusting for the
/// first `q`: `I_xx - I_xz I_zz^{-1} I_zx`.
pub fn conditional_information(info: &DMatrix<f64>, q: usize, p: usize) -> Result<DMatrix<f64>> {
    if info.nrows() != q + p || info.ncols() != q + p {
        return domain(format!("information is {}x{}, expected {}x{}", info.nrows(), info.ncols(), q + p, q + p));
    }
    if p == 0 {
        return domain("conditional information needs at least one predictor");
    }
    let ixx = info.view((q, q), (p, p)).into_owned();
    if q == 0 {
        return Ok(ixx);
    }
    let izz = info.view((0, 0), (q, q)).into_owned();
    let izx = info.view((0, q), (q, p)).into_owned();
    let izz_inv = inverse_spd(&izz, "adjustor block of the information")?;
    let mut schur = ixx - izx.transpose() * izz_inv * izx;
    symmetrize(&mut schur);
    Ok(schur)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldTest {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// Wald test of `beta = 0` for the coefficients at `predictors`.
pub fn wald_test(fit: &FitResult, predictors: &[usize], alpha: f64) -> Result<WaldTest> {
    if predictors.is_empty() {
        return domain("wald_test needs at least one predictor index");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("significance level must lie in (0, 1), got {alpha}"));
    }
    let k = fit.coefficients.len();
    let mut seen = vec![false; k];
    for &i in predictors {
        if i >= k || seen[i] {
            return domain(format!("predictor index {i} is out of range or repeated"));
        }
        seen[i] = true;
    }
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.iterations,
            context: "Wald test on an unconverged fit".into(),
        });
    }
    let order: Vec<usize> = (0..k).filter(|i| !seen[*i]).chain(predictors.iter().copied()).collect();
    let permuted = DMatrix::from_fn(k, k, |a, b| fit.information[(order[a], order[b])]);
    let q = k - predictors.len();
    let cond = conditional_information(&permuted, q, predictors.len())?;
    let b = DVector::from_iterator(predictors.len(), predictors.iter().map(|&i| fit.coefficients[i]));
    let statistic = (b.transpose() * cond * &b)[(0, 0)].max(0.0);
    let df = predictors.len() as u32;
    let critical_value = noncentral_chi2_quantile(1.0 - alpha, df, 0.0)?;
    Ok(WaldTest {
        statistic,
        df,
        p_value: gamma_q(0.5 * df as f64, 0.5 * statistic),
        critical_value,
        reject: statistic > critical_value,
    })
}
