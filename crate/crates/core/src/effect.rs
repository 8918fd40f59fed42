//! Effect-size measures over a weighted collection of `(eta, z)` draws.
//!
//! All expectations are mass-weighted sums over [`DesignDraws`], so the same
//! code serves Monte Carlo samples and exhaustive discrete designs.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::family::FamilyLink;
use crate::linalg::{condition_number, solve_spd};

/// A finite weighted sample of linear predictors and adjustor vectors.
///
/// Adjustors are stored row-major with `q` columns; the first column of
/// every row is the constant 1.
#[derive(Debug, Clone)]
pub struct DesignDraws {
    fl: FamilyLink,
    q: usize,
    z: Vec<f64>,
    eta: Vec<f64>,
    mass: Vec<f64>,
}

impl DesignDraws {
    pub fn new(fl: FamilyLink, q: usize, z: Vec<f64>, eta: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        let n = eta.len();
        if n == 0 || q == 0 {
            return domain("design draws need at least one row and one adjustor column");
        }
        if z.len() != n * q || mass.len() != n {
            return domain(format!(
                "inconsistent draw sizes: {} eta, {} z entries for q = {q}, {} masses",
                n,
                z.len(),
                mass.len()
            ));
        }
        if let Some(i) = mass.iter().position(|&m| !(m >= 0.0 && m.is_finite())) {
            return domain(format!("row {i} has invalid mass {}", mass[i]));
        }
        let total = compensated_sum(&mass);
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("masses sum to {total}, expected 1"));
        }
        if let Some(i) = (0..n).find(|&i| z[i * q] != 1.0) {
            return domain(format!("row {i} does not start with the constant adjustor 1"));
        }
        for (i, &e) in eta.iter().enumerate() {
            fl.link_eval(e).map_err(|err| Error::Domain(format!("row {i}: {err}")))?;
        }
        Ok(Self { fl, q, z, eta, mass })
    }

    /// Equal-mass draws, the usual Monte Carlo or empirical-distribution case.
    pub fn equal_mass(fl: FamilyLink, q: usize, z: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let n = eta.len();
        let mass = vec![1.0 / n.max(1) as f64; n];
        Self::new(fl, q, z, eta, mass)
    }

    pub fn family(&self) -> &FamilyLink {
        &self.fl
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i * self.q..(i + 1) * self.q]
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
}

fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Weighted projection of `eta` onto the adjustors.
#[derive(Debug, Clone)]
pub struct Projection {
    pub kappa: Vec<f64>,
    pub eta_z: Vec<f64>,
    /// Working weight `w` at each row's `eta`.
    pub weights: Vec<f64>,
    /// Condition number of `E[w z z']`.
    pub condition: f64,
}

/// Solves `E[w z z'] kappa = E[w eta z]` with `w` evaluated at `eta`.
pub fn weighted_projection(draws: &DesignDraws) -> Result<Projection> {
    let q = draws.q;
    let n = draws.len();
    let mut weights = Vec::with_capacity(n);
    let mut a = DMatrix::zeros(q, q);
    let mut b = DVector::zeros(q);
    for i in 0..n {
        let w = draws.fl.link_eval(draws.eta[i])?.weight;
        weights.push(w);
        let mw = draws.mass[i] * w;
        let z = draws.z_row(i);
        for r in 0..q {
            b[r] += mw * draws.eta[i] * z[r];
            for c in 0..=r {
                a[(r, c)] += mw * z[r] * z[c];
            }
        }
    }
    for r in 0..q {
        for c in 0..r {
            a[(c, r)] = a[(r, c)];
        }
    }
    let condition = condition_number(&a);
    let kappa = solve_spd(&a, &b, "weighted adjustor moment matrix E[w z z']")?;
    let eta_z = (0..n).map(|i| draws.z_row(i).iter().zip(kappa.iter()).map(|(z, k)| z * k).sum()).collect();
    Ok(Projection { kappa: kappa.iter().copied().collect(), eta_z, weights, condition })
}

/// Residuals `eta - eta_z` at or below this size, relative to `max |eta|`,
/// are rounding noise from the projection and mark a null design.
pub const NULL_TOLERANCE: f64 = 1e-9;

/// Where the reference weight `w1` of the phi approximation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum W1Convention {
    /// `w` at `g(E[mu])`, the mean outcome implied by the draws.
    #[default]
    MeanOfDraws,
    /// `w` at `g(m)` for a fixed reference mean `m`.
    ReferenceMean(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectSummary {
    pub phi: f64,
    pub pseudo_r2: f64,
    pub f2: f64,
    pub f2_phi: f64,
    pub f2_r: f64,
    /// `None` when the approximation is zero (relative error not defined).
    pub re_phi: Option<f64>,
    pub re_r: Option<f64>,
    pub mean_y: f64,
    pub w1: f64,
}

/// `w1 * phi^2 / 4`.
pub fn f2_phi_approx(phi: f64, w1: f64) -> Result<f64> {
    if !(w1 > 0.0) {
        return domain(format!("reference weight must be positive, got {w1}"));
    }
    if !(phi >= 0.0) {
        return domain(format!("phi must be nonnegative, got {phi}"));
    }
    Ok(w1 * phi * phi / 4.0)
}

/// `R2 / (1 - R2)`.
pub fn f2_r_approx(pseudo_r2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&pseudo_r2) {
        return domain(format!("pseudo-R^2 must lie in [0, 1), got {pseudo_r2}"));
    }
    Ok(pseudo_r2 / (1.0 - pseudo_r2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeErrors {
    pub re_phi: Option<f64>,
    pub re_r: Option<f64>,
}

/// Signed errors of each approximation relative to the approximation.
pub fn relative_errors(f2: f64, f2_phi: f64, f2_r: f64) -> RelativeErrors {
    let rel = |approx: f64| (approx > 0.0).then(|| (f2 - approx) / approx);
    RelativeErrors { re_phi: rel(f2_phi), re_r: rel(f2_r) }
}

/// Effect sizes with `w1` taken at the mean outcome of the draws.
pub fn effect_sizes_from_draws(draws: &DesignDraws) -> Result<EffectSummary> {
    effect_sizes_with(draws, W1Convention::MeanOfDraws)
}

pub fn effect_sizes_with(draws: &DesignDraws, convention: W1Convention) -> Result<EffectSummary> {
    let proj = weighted_projection(draws)?;
    effect_sizes_from_projection(draws, &proj, convention)
}

pub(crate) fn effect_sizes_from_projection(
    draws: &DesignDraws,
    proj: &Projection,
    convention: W1Convention,
) -> Result<EffectSummary> {
    let fl = &draws.fl;
    let n = draws.len();

    let mut resid_mean = 0.0;
    let mut f2 = 0.0;
    let mut mean_y = 0.0;
    let mut max_resid = 0.0_f64;
    let mut max_eta = 0.0_f64;
    for i in 0..n {
        let m = draws.mass[i];
        let r = draws.eta[i] - proj.eta_z[i];
        resid_mean += m * r;
        f2 += m * proj.weights[i] * r * r;
        max_resid = max_resid.max(r.abs());
        max_eta = max_eta.max(draws.eta[i].abs());
    }
    let mut resid_var = 0.0;
    let mut m_std = 0.0;
    for i in 0..n {
        let m = draws.mass[i];
        let r = draws.eta[i] - proj.eta_z[i] - resid_mean;
        resid_var += m * r * r;
        let lv = fl.link_eval(draws.eta[i])?;
        let mu_z = fl.inverse_link(proj.eta_z[i]).map_err(|e| {
            Error::Domain(format!("row {i}: projected predictor eta_z = {} has no valid mean: {e}", proj.eta_z[i]))
        })?;
        m_std += m * (lv.mu - mu_z).powi(2) / lv.var;
        mean_y += m * lv.mu;
    }

    let w1 = match convention {
        W1Convention::MeanOfDraws => fl.link_eval(fl.link_fn(mean_y)?)?.weight,
        W1Convention::ReferenceMean(r) => fl.link_eval(fl.link_fn(r)?)?.weight,
    };

    // eta is (numerically) a linear function of z: the null design
    if max_resid <= NULL_TOLERANCE * max_eta.max(1.0) {
        return Ok(EffectSummary {
            phi: 0.0,
            pseudo_r2: 0.0,
            f2: 0.0,
            f2_phi: 0.0,
            f2_r: 0.0,
            re_phi: None,
            re_r: None,
            mean_y,
            w1,
        });
    }

    let phi = 2.0 * resid_var.sqrt();
    let pseudo_r2 = m_std / (1.0 + m_std);
    let f2_phi = f2_phi_approx(phi, w1)?;
    let f2_r = f2_r_approx(pseudo_r2)?;
    if f2 > 0.0 && (f2_phi == 0.0 || f2_r == 0.0) {
        return Err(Error::DegenerateApproximation(format!("f2 = {f2} but f2_phi = {f2_phi}, f2_r = {f2_r}")));
    }
    let re = relative_errors(f2, f2_phi, f2_r);
    Ok(EffectSummary { phi, pseudo_r2, f2, f2_phi, f2_r, re_phi: re.re_phi, re_r: re.re_r, mean_y, w1 })
}

/// The three terms of `f2 = w1 phi^2/4 + E[(w-w1) r^2] + E[(w-w1) r]^2 / w1`
/// with `r = eta - eta_z`, for any `w1 > 0`.
pub fn noncentrality_decomposition(draws: &DesignDraws, w1: f64) -> Result<[f64; 3]> {
    if !(w1 > 0.0) {
        return domain("decomposition needs w1 > 0");
    }
    let proj = weighted_projection(draws)?;
    let mut mean_r = 0.0;
    for i in 0..draws.len() {
        mean_r += draws.mass[i] * (draws.eta[i] - proj.eta_z[i]);
    }
    let (mut var_r, mut t2, mut t3) = (0.0, 0.0, 0.0);
    for i in 0..draws.len() {
        let m = draws.mass[i];
        let r = draws.eta[i] - proj.eta_z[i];
        let dw = proj.weights[i] - w1;
        var_r += m * (r - mean_r).powi(2);
        t2 += m * dw * r * r;
        t3 += m * dw * r;
    }
    Ok([w1 * var_r, t2, t3 * t3 / w1])
}

/// Weighted R^2 of the linearized outcome, from the two weighted mean
/// squared errors `E[w (Y_l - eta_z)^2]` and `E[w (Y_l - eta)^2]`, with
/// the expectation over `Y` taken analytically.
pub fn weighted_r2(draws: &DesignDraws) -> Result<f64> {
    let proj = weighted_projection(draws)?;
    let (mut wmse, mut wmse0) = (0.0, 0.0);
    for i in 0..draws.len() {
        let m = draws.mass[i];
        let lv = draws.fl.link_eval(draws.eta[i])?;
        // E[(Y_l - eta)^2 | x, z] = v (d eta / d mu)^2
        let noise = lv.var / (lv.dmu_deta * lv.dmu_deta);
        let r = draws.eta[i] - proj.eta_z[i];
        wmse += m * lv.weight * noise;
        wmse0 += m * lv.weight * (noise + r * r);
    }
    Ok((wmse0 - wmse) / wmse0)
}
