use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::StableParams;
use crate::scalar::Scalar;

/// Chambers–Mallows–Stuck generator with the constants of one parameter set
/// computed up front.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler<T> {
    params: StableParams<T>,
    // α ≠ 1: B and S; α = 1: unused
    b: T,
    s: T,
}

impl<T: Scalar> StableSampler<T> {
    pub fn new(params: StableParams<T>) -> Self {
        let (b, s) = if params.is_cauchy_branch() {
            (T::zero(), T::one())
        } else {
            let t = params.beta * params.skew_tan();
            (t.atan() / params.alpha, (T::one() + t * t).powf(T::one() / (T::lit(2.0) * params.alpha)))
        };
        Self { params, b, s }
    }

    pub fn params(&self) -> &StableParams<T> {
        &self.params
    }

    /// One draw from the standardized (σ = 1, μ = 0) law.
    pub fn draw_standard<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let (v, w) = uniform_and_exp::<T, R>(rng);
        let StableParams { alpha, beta, .. } = self.params;
        if self.params.is_cauchy_branch() {
            let h = T::FRAC_PI_2() + beta * v;
            T::FRAC_2_PI() * (h * v.tan() - beta * ((T::FRAC_PI_2() * w * v.cos()) / h).ln())
        } else {
            let avb = alpha * (v + self.b);
            let cv = v.cos();
            self.s * avb.sin() / cv.powf(T::one() / alpha)
                * ((v - avb).cos() / w).powf((T::one() - alpha) / alpha)
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let StableParams { beta, sigma, mu, .. } = self.params;
        if sigma == T::zero() {
            return mu;
        }
        let x = self.draw_standard(rng);
        if self.params.is_cauchy_branch() {
            sigma * x + T::FRAC_2_PI() * beta * sigma * sigma.ln() + mu
        } else {
            sigma * x + mu
        }
    }
}

/// V uniform on the open interval (−π/2, π/2) and W standard exponential.
fn uniform_and_exp<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> (T, T) {
    let v = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break (u - 0.5) * std::f64::consts::PI;
        }
    };
    let w = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break -u.ln();
        }
    };
    (T::lit(v), T::lit(w))
}

/// Draws `count` variates from a generator seeded with `seed`.
pub fn sample<T: Scalar>(params: &StableParams<T>, count: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(params, count, &mut rng)
}

pub fn sample_with_rng<T: Scalar, R: Rng + ?Sized>(params: &StableParams<T>, count: usize, rng: &mut R) -> Vec<T> {
    let sampler = StableSampler::new(*params);
    (0..count).map(|_| sampler.draw(rng)).collect()
}
