//! Seeded random streams and the samplers built on them.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, Normal, Poisson, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::family::{Family, FamilyLink};
use crate::par;
use crate::special::{phi, BetaDist};

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// The ChaCha8 key is four SplitMix64 outputs chained from `seed`, and
/// `stream_id` selects the ChaCha stream (nonce), so distinct ids under one
/// seed never overlap. The sequence depends only on the pair, never on the
/// host or thread that draws from it.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            state = mix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > -1.0 && rho < 1.0) {
        return domain(format!("copula correlation must lie in (-1, 1), got {rho}"));
    }
    Ok(())
}

const SCORE_LIMIT: f64 = 8.0;
const SCORE_NODES: usize = 2048;

/// The map `g -> F^{-1}(Phi(g))` from a standard normal score to a Beta
/// variate, tabulated on a uniform grid of scores and evaluated by cubic
/// Hermite interpolation with exact derivatives at the nodes. Scores beyond
/// the grid fall back to the exact quantile.
#[derive(Debug, Clone)]
pub struct NormalToBeta {
    dist: BetaDist,
    mirror: BetaDist,
    step: f64,
    x: Vec<f64>,
    slope: Vec<f64>,
}

impl NormalToBeta {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let dist = BetaDist::new(a, b)?;
        let mirror = BetaDist::new(b, a)?;
        let step = 2.0 * SCORE_LIMIT / SCORE_NODES as f64;
        let mut x = Vec::with_capacity(SCORE_NODES + 1);
        let mut slope = Vec::with_capacity(SCORE_NODES + 1);
        for k in 0..=SCORE_NODES {
            let g = -SCORE_LIMIT + k as f64 * step;
            // the upper half is solved in the mirrored distribution to keep
            // tail probabilities accurate
            let xk = if g <= 0.0 { dist.quantile(phi(g)) } else { 1.0 - mirror.quantile(phi(-g)) };
            let density = dist.pdf(xk);
            let dg = (-0.5 * g * g).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let d = if density.is_finite() && density > 0.0 { dg / density } else { 0.0 };
            x.push(xk);
            slope.push(d);
        }
        Ok(Self { dist, mirror, step, x, slope })
    }

    pub fn exact(&self, g: f64) -> f64 {
        if g <= 0.0 {
            self.dist.quantile(phi(g))
        } else {
            1.0 - self.mirror.quantile(phi(-g))
        }
    }

    pub fn eval(&self, g: f64) -> f64 {
        if !(g > -SCORE_LIMIT && g < SCORE_LIMIT) {
            return self.exact(g);
        }
        let t = (g + SCORE_LIMIT) / self.step;
        let k = (t as usize).min(SCORE_NODES - 1);
        let s = t - k as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.x[k]
            + h10 * self.step * self.slope[k]
            + h01 * self.x[k + 1]
            + h11 * self.step * self.slope[k + 1];
        v.clamp(self.x[k].min(self.x[k + 1]), self.x[k].max(self.x[k + 1]))
    }
}

/// `n` pairs `(B_x, B_z)` with Beta(a_x, b_x) and Beta(a_z, b_z) margins
/// joined by a Gaussian copula with correlation `rho`.
///
/// Normals are drawn sequentially from `rng`; the quantile transform is
/// data-parallel when the `parallel` feature is on and gives the same
/// values either way.
pub fn sample_correlated_betas(
    a_x: f64,
    b_x: f64,
    a_z: f64,
    b_z: f64,
    rho: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<(f64, f64)>> {
    check_rho(rho)?;
    let to_x = NormalToBeta::new(a_x, b_x)?;
    let to_z = NormalToBeta::new(a_z, b_z)?;
    let c = (1.0 - rho * rho).sqrt();
    let normals: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let g1 = rng.standard_normal();
            let g2 = rng.standard_normal();
            (g1, rho * g1 + c * g2)
        })
        .collect();
    Ok(par::map(&normals, |&(gx, gz)| (to_x.eval(gx), to_z.eval(gz))))
}

/// One outcome from the family's distribution with mean `mu`.
pub fn sample_outcome(fl: &FamilyLink, mu: f64, rng: &mut RngStream) -> Result<f64> {
    if !fl.valid_mean(mu) {
        return domain(format!("mean {mu} outside the {} domain", fl.family()));
    }
    let bad = |e: String| Error::Domain(e);
    Ok(match fl.family() {
        Family::Normal => Normal::new(mu, fl.aux().sqrt()).map_err(|e| bad(e.to_string()))?.sample(rng),
        Family::Bernoulli => {
            if rng.uniform() < mu {
                1.0
            } else {
                0.0
            }
        }
        Family::Poisson => Poisson::new(mu).map_err(|e| bad(e.to_string()))?.sample(rng),
        Family::Gamma => {
            let k = fl.aux();
            Gamma::new(k, mu / k).map_err(|e| bad(e.to_string()))?.sample(rng)
        }
        Family::InverseGaussian => InverseGaussian::new(mu, fl.aux()).map_err(|e| bad(e.to_string()))?.sample(rng),
    })
}
