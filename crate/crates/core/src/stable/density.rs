//! Density and distribution function of the stable law.
//!
//! Away from α = 1 both are computed from Zolotarev's integral
//! representation over a finite θ range, which stays accurate far into the
//! tails. For α close to (but not equal to) 1 that representation loses
//! precision, and the characteristic function is inverted numerically
//! instead.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use statrs::function::gamma::gamma;

use super::{StableError, StableParams};
use crate::quad::{gauss_legendre, integrate};
use crate::scalar::Scalar;

const NEAR_ONE: f64 = 0.01;
const QUAD_REL_TOL: f64 = 1e-10;
const INVERSION_PANEL_CAP: f64 = 200_000.0;

/// Standardized shape in f64.
#[derive(Debug, Clone, Copy)]
struct Shape {
    alpha: f64,
    beta: f64,
    tan: f64,
}

impl Shape {
    fn of<T: Scalar>(p: &StableParams<T>) -> Self {
        Self { alpha: p.alpha.to_f64_lossy(), beta: p.beta.to_f64_lossy(), tan: p.skew_tan().to_f64_lossy() }
    }

    fn reflected(self) -> Self {
        Self { beta: -self.beta, tan: self.tan, ..self }
    }

    fn theta0(self) -> f64 {
        (self.beta * self.tan).atan() / self.alpha
    }
}

/// Maps `x` to the standardized variable with σ = 1, μ = 0.
fn standardize<T: Scalar>(x: T, p: &StableParams<T>) -> f64 {
    let (x, s, m, b) = (x.to_f64_lossy(), p.sigma.to_f64_lossy(), p.mu.to_f64_lossy(), p.beta.to_f64_lossy());
    if p.is_cauchy_branch() {
        (x - m - FRAC_2_PI * b * s * s.ln()) / s
    } else {
        (x - m) / s
    }
}

/// Probability density at `x`.
pub fn pdf<T: Scalar>(params: &StableParams<T>, x: T) -> T {
    let m = params.mu.to_f64_lossy();
    let s = params.sigma.to_f64_lossy();
    if s == 0.0 {
        return if x.to_f64_lossy() == m { T::infinity() } else { T::zero() };
    }
    T::lit(std_pdf(Shape::of(params), standardize(x, params)) / s)
}

/// Distribution function at `x`.
pub fn cdf<T: Scalar>(params: &StableParams<T>, x: T) -> T {
    let s = params.sigma.to_f64_lossy();
    if s == 0.0 {
        return if x >= params.mu { T::one() } else { T::zero() };
    }
    T::lit(std_cdf(Shape::of(params), standardize(x, params)).clamp(0.0, 1.0))
}

fn std_pdf(sh: Shape, z: f64) -> f64 {
    if sh.alpha == 1.0 {
        if sh.beta == 0.0 {
            return 1.0 / (PI * (1.0 + z * z));
        }
        return if sh.beta > 0.0 { pdf_alpha_one(sh.beta, z) } else { pdf_alpha_one(-sh.beta, -z) };
    }
    if use_inversion(sh, z) {
        return pdf_by_inversion(sh, z).max(0.0);
    }
    if z.abs() < 1e-10 {
        let th0 = sh.theta0();
        let zeta = -sh.beta * sh.tan;
        return gamma(1.0 + 1.0 / sh.alpha) * th0.cos() / (PI * (1.0 + zeta * zeta).powf(0.5 / sh.alpha));
    }
    if z > 0.0 {
        pdf_zolotarev(sh, z)
    } else {
        pdf_zolotarev(sh.reflected(), -z)
    }
}

fn std_cdf(sh: Shape, z: f64) -> f64 {
    if sh.alpha == 1.0 {
        if sh.beta == 0.0 {
            return 0.5 + z.atan() / PI;
        }
        return if sh.beta > 0.0 { cdf_alpha_one(sh.beta, z) } else { 1.0 - cdf_alpha_one(-sh.beta, -z) };
    }
    if use_inversion(sh, z) {
        return cdf_by_inversion(sh, z);
    }
    if z == 0.0 {
        return (FRAC_PI_2 - sh.theta0()) / PI;
    }
    if z > 0.0 {
        cdf_zolotarev(sh, z)
    } else {
        1.0 - cdf_zolotarev(sh.reflected(), -z)
    }
}

fn use_inversion(sh: Shape, z: f64) -> bool {
    (sh.alpha - 1.0).abs() < NEAR_ONE && inversion_panels(sh, z) < INVERSION_PANEL_CAP
}

// ---- Zolotarev representation, α ≠ 1 -------------------------------------

/// `ln V(θ)`.
fn ln_v(sh: Shape, th0: f64, th: f64) -> f64 {
    let a = sh.alpha;
    let am1 = a - 1.0;
    let c = (a * th0).cos().ln() / am1;
    let ratio = th.cos().ln() - (a * (th0 + th)).sin().ln();
    c + a / am1 * ratio + (a * th0 + am1 * th).cos().ln() - th.cos().ln()
}

/// Splits `[lo, hi]` at the point where `ln g(θ)` crosses zero, if it does.
fn split_at_unit<F: Fn(f64) -> f64>(ln_g: &F, lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let (mut a, mut b) = (lo + 1e-12 * span, hi - 1e-12 * span);
    let (fa, fb) = (ln_g(a), ln_g(b));
    if !(fa.is_finite() || fb.is_finite()) || fa.signum() == fb.signum() {
        return vec![lo, hi];
    }
    let rising = fa < fb;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = ln_g(m);
        if (fm < 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 * span {
            break;
        }
    }
    vec![lo, 0.5 * (a + b), hi]
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: F, cuts: &[f64]) -> f64 {
    cuts.windows(2).map(|w| integrate(&f, w[0], w[1], 0.0, QUAD_REL_TOL)).sum()
}

fn zolotarev_setup(sh: Shape, z: f64) -> Option<(f64, impl Fn(f64) -> f64, Vec<f64>)> {
    let th0 = sh.theta0();
    let lo = -th0;
    let hi = FRAC_PI_2;
    if !(hi - lo > 1e-14) {
        return None;
    }
    let ln_z = z.ln() * sh.alpha / (sh.alpha - 1.0);
    let ln_g = move |th: f64| ln_z + ln_v(sh, th0, th);
    let cuts = split_at_unit(&ln_g, lo, hi);
    Some((th0, ln_g, cuts))
}

fn pdf_zolotarev(sh: Shape, z: f64) -> f64 {
    let Some((_, ln_g, cuts)) = zolotarev_setup(sh, z) else {
        return 0.0;
    };
    let body = |th: f64| {
        let lg = ln_g(th);
        if lg.is_nan() {
            return 0.0;
        }
        (lg - lg.exp()).exp()
    };
    let integral = integrate_pieces(body, &cuts);
    sh.alpha / (PI * (sh.alpha - 1.0).abs() * z) * integral
}

fn cdf_zolotarev(sh: Shape, z: f64) -> f64 {
    let th0 = sh.theta0();
    let Some((_, ln_g, cuts)) = zolotarev_setup(sh, z) else {
        // empty θ range: all mass on one side
        return if sh.alpha < 1.0 { (FRAC_PI_2 - th0) / PI } else { 1.0 };
    };
    let body = |th: f64| {
        let lg = ln_g(th);
        if lg.is_nan() {
            return 0.0;
        }
        (-lg.exp()).exp()
    };
    let integral = integrate_pieces(body, &cuts);
    if sh.alpha < 1.0 {
        (FRAC_PI_2 - th0) / PI + integral / PI
    } else {
        1.0 - integral / PI
    }
}

// ---- Zolotarev representation, α = 1, β > 0 -------------------------------

fn ln_v_one(beta: f64, th: f64) -> f64 {
    let h = FRAC_PI_2 + beta * th;
    FRAC_2_PI.ln() + (h / th.cos()).ln() + h * th.tan() / beta
}

fn pdf_alpha_one(beta: f64, z: f64) -> f64 {
    let shift = -PI * z / (2.0 * beta);
    let ln_g = |th: f64| shift + ln_v_one(beta, th);
    let cuts = split_at_unit(&ln_g, -FRAC_PI_2, FRAC_PI_2);
    let body = |th: f64| {
        let lg = ln_g(th);
        if lg.is_nan() {
            return 0.0;
        }
        (lg - lg.exp()).exp()
    };
    integrate_pieces(body, &cuts) / (2.0 * beta)
}

fn cdf_alpha_one(beta: f64, z: f64) -> f64 {
    let shift = -PI * z / (2.0 * beta);
    let ln_g = |th: f64| shift + ln_v_one(beta, th);
    let cuts = split_at_unit(&ln_g, -FRAC_PI_2, FRAC_PI_2);
    let body = |th: f64| {
        let lg = ln_g(th);
        if lg.is_nan() {
            return 0.0;
        }
        (-lg.exp()).exp()
    };
    integrate_pieces(body, &cuts) / PI
}

// ---- characteristic function inversion --------------------------------------

fn inversion_limit(alpha: f64) -> f64 {
    // e^{-u^α} < 1e-12 beyond this point
    27.63f64.powf(1.0 / alpha)
}

fn inversion_rate(sh: Shape, z: f64) -> f64 {
    let u = inversion_limit(sh.alpha);
    let skew = if sh.alpha == 1.0 {
        2.0 / PI * sh.beta.abs() * (1.0 + u.ln().abs())
    } else {
        sh.alpha * (sh.beta * sh.tan).abs() * u.powf(sh.alpha - 1.0).max(1.0)
    };
    z.abs() + skew + 1.0
}

fn inversion_panels(sh: Shape, z: f64) -> f64 {
    inversion_limit(sh.alpha) * inversion_rate(sh, z) / 8.0
}

/// Phase of `e^{-juz} Φ(u)` for the standardized law, `u > 0`.
fn phase(sh: Shape, u: f64, z: f64) -> f64 {
    if sh.alpha == 1.0 {
        -FRAC_2_PI * sh.beta * u * u.ln() - u * z
    } else {
        sh.beta * sh.tan * u.powf(sh.alpha) - u * z
    }
}

/// ∫₀^U f(u) du on Gauss–Legendre panels: dyadically graded towards 0, then
/// uniform with width tied to the oscillation rate.
fn panel_integral(f: impl Fn(f64) -> f64, upper: f64, rate: f64) -> f64 {
    thread_local! {
        static RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(16);
    }
    RULE.with(|(nodes, weights)| {
        let panel = |a: f64, b: f64| {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            h * nodes.iter().zip(weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>()
        };
        let h = (8.0 / rate).min(1.0);
        let mut total = 0.0;
        let mut lo = h * 2f64.powi(-40);
        while lo < h {
            total += panel(lo, 2.0 * lo);
            lo *= 2.0;
        }
        let mut a = h;
        while a < upper {
            let b = (a + h).min(upper);
            total += panel(a, b);
            a = b;
        }
        total
    })
}

fn pdf_by_inversion(sh: Shape, z: f64) -> f64 {
    let f = |u: f64| (-u.powf(sh.alpha)).exp() * phase(sh, u, z).cos();
    panel_integral(f, inversion_limit(sh.alpha), inversion_rate(sh, z)) / PI
}

fn cdf_by_inversion(sh: Shape, z: f64) -> f64 {
    let f = |u: f64| (-u.powf(sh.alpha)).exp() * phase(sh, u, z).sin() / u;
    0.5 - panel_integral(f, inversion_limit(sh.alpha), inversion_rate(sh, z)) / PI
}

// ---- restriction to the non-negative half-line ------------------------------

/// The stable law conditioned on `X ≥ 0`, used as the traffic-volume model.
#[derive(Debug, Clone, Copy)]
pub struct NonNegativeStable<T> {
    params: StableParams<T>,
    mass: f64,
}

impl<T: Scalar> NonNegativeStable<T> {
    pub fn new(params: StableParams<T>) -> Result<Self, StableError> {
        params.validate()?;
        let mass = 1.0 - cdf(&params, T::zero()).to_f64_lossy();
        if !(mass > 0.0) {
            return Err(StableError::InvalidParams("no probability mass on [0, inf)".into()));
        }
        Ok(Self { params, mass })
    }

    pub fn params(&self) -> &StableParams<T> {
        &self.params
    }

    /// `P(X ≥ 0)` under the unrestricted law.
    pub fn mass(&self) -> T {
        T::lit(self.mass)
    }

    pub fn pdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        T::lit(pdf(&self.params, x).to_f64_lossy() / self.mass)
    }

    pub fn cdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        let below = cdf(&self.params, T::zero()).to_f64_lossy();
        let at = cdf(&self.params, x).to_f64_lossy();
        T::lit(((at - below) / self.mass).clamp(0.0, 1.0))
    }
}

/// Density of the law restricted to `x ≥ 0` and renormalized.
pub fn normalized_pdf<T: Scalar>(params: &StableParams<T>, x: T) -> Result<T, StableError> {
    Ok(NonNegativeStable::new(*params)?.pdf(x))
}

/// Distribution function of the law restricted to `x ≥ 0` and renormalized.
pub fn normalized_cdf<T: Scalar>(params: &StableParams<T>, x: T) -> Result<T, StableError> {
    Ok(NonNegativeStable::new(*params)?.cdf(x))
}
