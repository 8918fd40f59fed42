//! Distribution/link registry for the supported GLMs.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    Bernoulli,
    Poisson,
    Gamma,
    InverseGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Identity,
    Logit,
    Log,
    Inverse,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Bernoulli => "bernoulli",
            Family::Poisson => "poisson",
            Family::Gamma => "gamma",
            Family::InverseGaussian => "inverse_gaussian",
        }
    }
}

impl Link {
    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Logit => "logit",
            Link::Log => "log",
            Link::Inverse => "inverse",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "bernoulli" | "binomial" => Ok(Family::Bernoulli),
            "poisson" => Ok(Family::Poisson),
            "gamma" => Ok(Family::Gamma),
            "inverse_gaussian" | "inverse-gaussian" | "inversegaussian" => Ok(Family::InverseGaussian),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(Link::Identity),
            "logit" => Ok(Link::Logit),
            "log" => Ok(Link::Log),
            "inverse" => Ok(Link::Inverse),
            other => Err(Error::Config(format!("unknown link '{other}'"))),
        }
    }
}

/// Mean, variance, derivative of the inverse link and working weight at one
/// value of the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkValues {
    pub mu: f64,
    pub var: f64,
    pub dmu_deta: f64,
    pub weight: f64,
}

/// A (family, link, auxiliary parameter) triple.
///
/// `aux` is the variance sigma^2 for the normal family and the shape `k` for
/// the gamma and inverse Gaussian families; it is 1 for the others.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyLink {
    family: Family,
    link: Link,
    aux: f64,
}

impl FamilyLink {
    pub fn new(family: Family, link: Link, aux: f64) -> Result<Self> {
        use Family::*;
        use Link::*;
        let allowed = matches!(
            (family, link),
            (Normal, Identity)
                | (Bernoulli, Identity | Logit | Log)
                | (Poisson, Identity | Log | Inverse)
                | (Gamma, Identity | Log | Inverse)
                | (InverseGaussian, Identity | Log | Inverse)
        );
        if !allowed {
            return Err(Error::Config(format!("unsupported family/link pair {family}/{link}")));
        }
        let aux = match family {
            Normal | Gamma | InverseGaussian => {
                if !(aux > 0.0 && aux.is_finite()) {
                    return Err(Error::Config(format!("{family} needs a positive auxiliary parameter, got {aux}")));
                }
                aux
            }
            Bernoulli | Poisson => 1.0,
        };
        Ok(Self { family, link, aux })
    }

    pub fn normal(variance: f64) -> Self {
        Self::new(Family::Normal, Link::Identity, variance).expect("positive variance")
    }

    pub fn logistic() -> Self {
        Self::new(Family::Bernoulli, Link::Logit, 1.0).unwrap()
    }

    pub fn poisson_log() -> Self {
        Self::new(Family::Poisson, Link::Log, 1.0).unwrap()
    }

    pub fn gamma_log(shape: f64) -> Self {
        Self::new(Family::Gamma, Link::Log, shape).expect("positive shape")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn aux(&self) -> f64 {
        self.aux
    }

    /// Same family and link with a different auxiliary parameter.
    pub fn with_aux(&self, aux: f64) -> Result<Self> {
        Self::new(self.family, self.link, aux)
    }

    /// Whether `mu` lies in the open mean domain of the family.
    pub fn valid_mean(&self, mu: f64) -> bool {
        if !mu.is_finite() {
            return false;
        }
        match self.family {
            Family::Normal => true,
            Family::Bernoulli => mu > 0.0 && mu < 1.0,
            Family::Poisson | Family::Gamma | Family::InverseGaussian => mu > 0.0,
        }
    }

    /// Link function g(mu).
    pub fn link_fn(&self, mu: f64) -> Result<f64> {
        if !self.valid_mean(mu) {
            return domain(format!("mean {mu} outside the {} domain", self.family));
        }
        Ok(match self.link {
            Link::Identity => mu,
            Link::Logit => (mu / (1.0 - mu)).ln(),
            Link::Log => mu.ln(),
            Link::Inverse => 1.0 / mu,
        })
    }

    /// Inverse link g^{-1}(eta), with the mean-domain check.
    pub fn inverse_link(&self, eta: f64) -> Result<f64> {
        if !eta.is_finite() {
            return domain(format!("linear predictor {eta} is not finite"));
        }
        let mu = match self.link {
            Link::Identity => eta,
            Link::Logit => logistic(eta),
            Link::Log => eta.exp(),
            Link::Inverse => 1.0 / eta,
        };
        if !self.valid_mean(mu) {
            return domain(format!(
                "linear predictor {eta} maps to mean {mu} outside the {} domain ({} link)",
                self.family, self.link
            ));
        }
        Ok(mu)
    }

    /// Variance function v(mu), including the auxiliary parameter.
    pub fn variance(&self, mu: f64) -> f64 {
        match self.family {
            Family::Normal => self.aux,
            Family::Bernoulli => mu * (1.0 - mu),
            Family::Poisson => mu,
            Family::Gamma => mu * mu / self.aux,
            Family::InverseGaussian => mu * mu * mu / self.aux,
        }
    }

    /// mu, v, dmu/deta and w = (dmu/deta)^2 / v at `eta`.
    pub fn link_eval(&self, eta: f64) -> Result<LinkValues> {
        let mu = self.inverse_link(eta)?;
        let dmu_deta = match self.link {
            Link::Identity => 1.0,
            Link::Logit => mu * (1.0 - mu),
            Link::Log => mu,
            Link::Inverse => -mu * mu,
        };
        let var = self.variance(mu);
        if !(var > 0.0) {
            return domain(format!("variance vanishes at eta = {eta}"));
        }
        Ok(LinkValues { mu, var, dmu_deta, weight: dmu_deta * dmu_deta / var })
    }

    /// Log-likelihood contribution of one observation, up to terms free of mu.
    pub(crate) fn log_likelihood(&self, y: f64, mu: f64) -> f64 {
        match self.family {
            Family::Normal => -0.5 * (y - mu) * (y - mu) / self.aux,
            Family::Bernoulli => {
                let a = if y > 0.0 { y * mu.ln() } else { 0.0 };
                let b = if y < 1.0 { (1.0 - y) * (-mu).ln_1p() } else { 0.0 };
                a + b
            }
            Family::Poisson => {
                let a = if y > 0.0 { y * mu.ln() } else { 0.0 };
                a - mu
            }
            Family::Gamma => -self.aux * (y / mu + mu.ln()),
            Family::InverseGaussian => -0.5 * self.aux * (y - mu) * (y - mu) / (y * mu * mu),
        }
    }

    /// Whether `y` is a valid outcome for the family.
    pub fn valid_outcome(&self, y: f64) -> bool {
        if !y.is_finite() {
            return false;
        }
        match self.family {
            Family::Normal => true,
            Family::Bernoulli => y == 0.0 || y == 1.0,
            Family::Poisson => y >= 0.0 && y.fract() == 0.0,
            Family::Gamma | Family::InverseGaussian => y > 0.0,
        }
    }
}

impl fmt::Display for FamilyLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.family, self.link)
    }
}

#[inline]
pub(crate) fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}
