//! Closed-form constants and covariance kernels of fractional Brownian motion
//! and of the MPRE family.
//!
//! `V_H` is the variance of the unit-lag increment of the Gamma-normalised
//! Mandelbrot-Van Ness fBm; `A(H) = V_H * Gamma(H + 1/2)^2` is the same
//! quantity for the non-normalised kernel and is the constant that converts a
//! Hurst-Holder exponent into a short-lag increment standard deviation.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Hurst exponent constrained to the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub const BROWNIAN: Hurst = Hurst(0.5);

    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(Hurst(h))
        } else {
            Err(Error::param(format!("Hurst exponent must lie in (0, 1), got {h}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Hurst::new(h)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

impl fmt::Display for Hurst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The five equivalent closed forms of `V_H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VhVariant {
    /// `(1/(2H) + int_1^inf [u^{H-1/2} - (u-1)^{H-1/2}]^2 du) / Gamma(H+1/2)^2`
    IntegralForm,
    /// `Gamma(1-2H) cos(pi H) / (pi H)`
    Gamma1m2H,
    /// `Gamma(H) Gamma(1-H) / (pi Gamma(1+2H))`
    ReflectionForm,
    /// `Gamma(2-2H) cos(pi H) / (pi H (1-2H))`
    Gamma2m2H,
    /// `1 / (2H sin(pi H) Gamma(2H))`
    SineForm,
}

impl VhVariant {
    pub const ALL: [VhVariant; 5] = [
        VhVariant::IntegralForm,
        VhVariant::Gamma1m2H,
        VhVariant::ReflectionForm,
        VhVariant::Gamma2m2H,
        VhVariant::SineForm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VhVariant::IntegralForm => "IntegralForm",
            VhVariant::Gamma1m2H => "Gamma1m2H",
            VhVariant::ReflectionForm => "ReflectionForm",
            VhVariant::Gamma2m2H => "Gamma2m2H",
            VhVariant::SineForm => "SineForm",
        }
    }

    /// Whether the closed form has a removable singularity at `H = 1/2`.
    pub fn is_singular_at_half(self) -> bool {
        matches!(self, VhVariant::Gamma1m2H | VhVariant::Gamma2m2H)
    }
}

/// What to do when a variant is evaluated at its removable singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularityPolicy {
    /// Return the limit value (computed through the sine form).
    #[default]
    Limit,
    Error,
}

/// Half-width of the neighbourhood of `H = 1/2` treated as the singular point.
pub const SINGULAR_BAND: f64 = 1e-6;

/// Gamma function for real arguments other than the non-positive integers.
///
/// Negative non-integer arguments are handled through the reflection formula.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("gamma has a pole at {x}")));
    }
    Ok(gamma_pos(x))
}

// Callers guarantee the argument is not a pole.
fn gamma_pos(x: f64) -> f64 {
    // exact factorials keep identities such as A(1/2) = 1 free of rounding
    if x == x.floor() && (1.0..=171.0).contains(&x) {
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    statrs::function::gamma::gamma(x)
}

/// `A(H) = Gamma(H+1/2)^2 / (2H sin(pi H) Gamma(2H))`.
pub fn a_const(h: Hurst) -> f64 {
    let h = h.get();
    let g = gamma_pos(h + 0.5);
    g * g / (2.0 * h * (PI * h).sin() * gamma_pos(2.0 * h))
}

/// `V_H` through the requested closed form, using the limit policy at `H = 1/2`.
pub fn v_const(h: Hurst, variant: VhVariant) -> Result<f64> {
    v_const_with_policy(h, variant, SingularityPolicy::Limit)
}

pub fn v_const_with_policy(h: Hurst, variant: VhVariant, policy: SingularityPolicy) -> Result<f64> {
    let x = h.get();
    if variant.is_singular_at_half() && (x - 0.5).abs() < SINGULAR_BAND {
        return match policy {
            SingularityPolicy::Limit => Ok(v_sine(x)),
            SingularityPolicy::Error => Err(Error::Singularity {
                variant: variant.name(),
                h: x,
            }),
        };
    }
    let v = match variant {
        VhVariant::IntegralForm => {
            let g = gamma_pos(x + 0.5);
            (0.5 / x + j_integral(h)?) / (g * g)
        }
        VhVariant::Gamma1m2H => gamma_fn(1.0 - 2.0 * x)? * (PI * x).cos() / (PI * x),
        VhVariant::ReflectionForm => gamma_pos(x) * gamma_pos(1.0 - x) / (PI * gamma_pos(1.0 + 2.0 * x)),
        VhVariant::Gamma2m2H => gamma_pos(2.0 - 2.0 * x) * (PI * x).cos() / (PI * x * (1.0 - 2.0 * x)),
        VhVariant::SineForm => v_sine(x),
    };
    Ok(v)
}

fn v_sine(h: f64) -> f64 {
    1.0 / (2.0 * h * (PI * h).sin() * gamma_pos(2.0 * h))
}

/// `V_H` through the sine form, which is regular on all of `(0, 1)`.
#[inline]
pub fn v_h(h: Hurst) -> f64 {
    v_sine(h.get())
}

/// Covariance `E[W^H(t) W^H(s)]` of the Gamma-normalised fBm.
pub fn fbm_covariance(t: f64, s: f64, h: Hurst) -> f64 {
    let two_h = 2.0 * h.get();
    0.5 * v_h(h) * (t.abs().powf(two_h) + s.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of fGn sampled with step `lag_step`, at an integer lag of `k` steps.
///
/// This is `gamma_H(k * lag_step; lag_step)`, so `fgn_autocov(0, d, h) = V_H d^{2H}`.
pub fn fgn_autocov(k: usize, lag_step: f64, h: Hurst) -> f64 {
    let two_h = 2.0 * h.get();
    let k = k as f64;
    let shape = if k == 0.0 {
        2.0
    } else {
        (k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).powf(two_h)
    };
    0.5 * v_h(h) * lag_step.powf(two_h) * shape
}

/// Lag-`k` autocorrelation of unit-variance fGn.
pub fn fgn_autocorr(k: usize, h: Hurst) -> f64 {
    let two_h = 2.0 * h.get();
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).powf(two_h))
}

/// Short-lag standard deviation `|lag|^H nu sqrt(A(H))` of an MPRE increment.
pub fn increment_sd(lag: f64, h: Hurst, nu: f64) -> f64 {
    lag.abs().powf(h.get()) * nu * a_const(h).sqrt()
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_intervals: 20_000,
    }
}

/// Split point between the near-origin piece (after a power substitution) and
/// the bulk of the `J` integral.
const J_SPLIT: f64 = 1.0;
/// Start of the analytically evaluated tail of the `J` integral.
const J_TAIL: f64 = 32.0;

/// `J(H) = int_0^inf ((u+1)^{H-1/2} - u^{H-1/2})^2 du`, by adaptive quadrature
/// with an analytic series for the tail.
pub fn j_integral(h: Hurst) -> Result<f64> {
    let x = h.get();
    let a = x - 0.5;
    if a == 0.0 {
        return Ok(0.0);
    }
    // (u+1)^a - u^a = u^a expm1(a ln1p(1/u)) avoids cancellation for large u
    let kernel_diff = move |u: f64| u.powf(a) * (a * (1.0 / u).ln_1p()).exp_m1();

    // near 0 the integrand behaves like u^{2H-1}; u = v^k makes it bounded
    let k = (1.0 / x).ceil().max(2.0);
    let near = integrate(
        |v: f64| {
            let u = v.powf(k);
            let d = kernel_diff(u);
            d * d * k * v.powf(k - 1.0)
        },
        0.0,
        J_SPLIT,
        quad_opts(),
    )?;
    let bulk = integrate(
        |u: f64| {
            let d = kernel_diff(u);
            d * d
        },
        J_SPLIT,
        J_TAIL,
        quad_opts(),
    )?;
    Ok(near.value + bulk.value + j_tail(a, J_TAIL))
}

/// `int_U^inf u^{2a} ((1 + 1/u)^a - 1)^2 du` via the binomial series in `1/u`.
fn j_tail(a: f64, upper: f64) -> f64 {
    const TERMS: usize = 40;
    // b[j] = binom(a, j)
    let mut b = [0.0; TERMS + 1];
    b[0] = 1.0;
    for j in 1..=TERMS {
        b[j] = b[j - 1] * (a - (j - 1) as f64) / j as f64;
    }
    let mut total = 0.0;
    for k in 2..=TERMS {
        let d_k: f64 = (1..k).map(|i| b[i] * b[k - i]).sum();
        let expo = 2.0 * a - k as f64 + 1.0;
        total += d_k * upper.powf(expo) / (k as f64 - 2.0 * a - 1.0);
    }
    total
}

/// Start of the analytic tail of the cosine integral: a whole number of periods.
const I_TAIL: f64 = 200.0 * PI;

/// `I(H) = int_0^inf (1 - cos x) x^{-2H-1} dx`, by adaptive quadrature with an
/// asymptotic expansion of the oscillatory tail.
pub fn i_cosine(h: Hurst) -> Result<f64> {
    let x = h.get();
    let beta = 2.0 * x + 1.0;
    let one_minus_cos = |t: f64| {
        let s = (0.5 * t).sin();
        2.0 * s * s
    };
    // near 0 the integrand behaves like t^{1-2H}/2; t = v^k removes the singularity
    let k = (1.0 / (1.0 - x)).ceil().max(1.0);
    // written as ((1 - cos t)/t^2) v^{k(2-2H)-1} so that t = v^k may underflow
    let near = integrate(
        |v: f64| {
            let t = v.powf(k);
            let ratio = if t == 0.0 { 0.5 } else { one_minus_cos(t) / (t * t) };
            ratio * k * v.powf(k * (2.0 - 2.0 * x) - 1.0)
        },
        0.0,
        1.0,
        quad_opts(),
    )?;
    let bulk = integrate(|t: f64| one_minus_cos(t) * t.powf(-beta), 1.0, I_TAIL, quad_opts())?;
    let tail = I_TAIL.powf(-2.0 * x) / (2.0 * x) - cos_tail(beta, I_TAIL);
    Ok(near.value + bulk.value + tail)
}

/// `int_U^inf cos(t) t^{-beta} dt` for `U` a multiple of `2 pi`, from the
/// asymptotic series `Re[i e^{iU} U^{-beta} sum_k (-i)^k (beta)_k U^{-k}]`.
fn cos_tail(beta: f64, upper: f64) -> f64 {
    // with e^{iU} = 1 only odd k contribute to the real part, with sign (-1)^{(k-1)/2}
    let mut total = 0.0;
    let mut rising = 1.0; // (beta)_k
    let mut power = 1.0; // U^{-k}
    for k in 0..30 {
        if k > 0 {
            rising *= beta + (k - 1) as f64;
            power /= upper;
        }
        if k % 2 == 1 {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * rising * power;
            total += term;
            if term.abs() < 1e-30 {
                break;
            }
        }
    }
    total * upper.powf(-beta)
}

/// Closed form of the cosine integral, `pi / (2 Gamma(2H+1) sin(pi H))`.
pub fn i_cosine_closed_form(h: Hurst) -> f64 {
    let x = h.get();
    PI / (2.0 * gamma_pos(2.0 * x + 1.0) * (PI * x).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hh(x: f64) -> Hurst {
        Hurst::new(x).unwrap()
    }

    fn grid() -> Vec<f64> {
        (1..20).map(|i| i as f64 * 0.05).collect()
    }

    #[test]
    fn hurst_rejects_closed_interval() {
        assert!(Hurst::new(0.0).is_err());
        assert!(Hurst::new(1.0).is_err());
        assert!(Hurst::new(f64::NAN).is_err());
        assert!(Hurst::new(0.999).is_ok());
    }

    #[test]
    fn gamma_known_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert_relative_eq!(gamma_fn(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        // arbitrary-precision reference values
        assert_relative_eq!(gamma_fn(1.25).unwrap(), 0.906_402_477_055_477_077_982_671_288_966_918, max_relative = 1e-12);
        assert_relative_eq!(gamma_fn(0.3).unwrap(), 2.991_568_987_687_590_628_312_516_515_904_917, max_relative = 1e-12);
        assert_relative_eq!(gamma_fn(-0.4).unwrap(), -3.722_980_622_032_042_755_985_833_470_803_355, max_relative = 1e-12);
        assert_relative_eq!(gamma_fn(4.7).unwrap(), 15.431_411_600_047_431_711_956_331_094_886_539, max_relative = 1e-12);
    }

    #[test]
    fn gamma_poles_are_domain_errors() {
        for x in [0.0, -1.0, -7.0] {
            assert!(matches!(gamma_fn(x), Err(Error::Domain(_))), "{x}");
        }
    }

    #[test]
    fn a_const_reference_values() {
        assert_relative_eq!(a_const(Hurst::BROWNIAN), 1.0, max_relative = 1e-15);
        assert_relative_eq!(a_const(hh(0.75)), 0.874_019_184_764_039_936_821_613_196_630_373, max_relative = 1e-12);
        assert_relative_eq!(a_const(hh(0.25)), 2.396_280_469_471_184_414_879_844_984_560_647, max_relative = 1e-12);
        assert_relative_eq!(a_const(hh(0.05)), 17.549_970_410_909_577_452_493_614_717_546_95, max_relative = 1e-12);
        assert_relative_eq!(a_const(hh(0.95)), 2.743_974_230_796_454_575_498_201_155_823_815, max_relative = 1e-12);
    }

    #[test]
    fn v_const_sine_form_at_half() {
        assert_relative_eq!(v_const(Hurst::BROWNIAN, VhVariant::SineForm).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn singular_variants_follow_policy() {
        for v in [VhVariant::Gamma1m2H, VhVariant::Gamma2m2H] {
            let lim = v_const_with_policy(Hurst::BROWNIAN, v, SingularityPolicy::Limit).unwrap();
            assert_relative_eq!(lim, 1.0, max_relative = 1e-15);
            let err = v_const_with_policy(Hurst::BROWNIAN, v, SingularityPolicy::Error).unwrap_err();
            assert!(matches!(err, Error::Singularity { .. }));
        }
        // regular variants never raise
        assert!(v_const_with_policy(Hurst::BROWNIAN, VhVariant::ReflectionForm, SingularityPolicy::Error).is_ok());
    }

    #[test]
    fn variants_agree_pairwise_on_grid() {
        for x in grid() {
            let h = hh(x);
            let vals: Vec<f64> = VhVariant::ALL.iter().map(|&v| v_const(h, v).unwrap()).collect();
            for i in 0..vals.len() {
                for j in i + 1..vals.len() {
                    assert_relative_eq!(vals[i], vals[j], max_relative = 1e-10);
                }
            }
            assert_relative_eq!(a_const(h), vals[4] * gamma_fn(x + 0.5).unwrap().powi(2), max_relative = 1e-10);
        }
    }

    #[test]
    fn j_integral_matches_reference() {
        assert_eq!(j_integral(Hurst::BROWNIAN).unwrap(), 0.0);
        // arbitrary-precision quadrature reference
        assert_relative_eq!(j_integral(hh(0.3)).unwrap(), 0.208_404_244_501_202_055_486_838_413_459, max_relative = 1e-10);
        assert_relative_eq!(j_integral(hh(0.7)).unwrap(), 0.124_607_257_586_129_342_121_658_127_674, max_relative = 1e-10);
        for x in [0.3, 0.7] {
            let h = hh(x);
            assert!((j_integral(h).unwrap() - (a_const(h) - 0.5 / x)).abs() < 1e-6);
        }
    }

    #[test]
    fn i_cosine_at_half_is_half_pi() {
        assert!((i_cosine(Hurst::BROWNIAN).unwrap() - PI / 2.0).abs() < 1e-6);
        for x in [0.25, 0.75] {
            let h = hh(x);
            assert!((i_cosine(h).unwrap() - i_cosine_closed_form(h)).abs() < 1e-6);
        }
    }

    #[test]
    fn covariance_kernels() {
        let h = hh(0.7);
        assert_eq!(fbm_covariance(1.3, 0.0, h), 0.0);
        assert_relative_eq!(fbm_covariance(1.0, 1.0, Hurst::BROWNIAN), 1.0, max_relative = 1e-15);
        assert_relative_eq!(fbm_covariance(2.0, 1.0, h), fbm_covariance(1.0, 2.0, h));
        assert_relative_eq!(fbm_covariance(1.7, 1.7, h), v_h(h) * 1.7_f64.powf(1.4), max_relative = 1e-14);
    }

    #[test]
    fn fgn_autocov_ratios() {
        assert_eq!(fgn_autocov(1, 1.0, Hurst::BROWNIAN), 0.0);
        for x in [0.25, 0.75] {
            let h = hh(x);
            let ratio = fgn_autocov(1, 1.0, h) / fgn_autocov(0, 1.0, h);
            assert_relative_eq!(ratio, 2f64.powf(2.0 * x - 1.0) - 1.0, max_relative = 1e-13);
            assert_relative_eq!(ratio, fgn_autocorr(1, h), max_relative = 1e-13);
        }
        assert_relative_eq!(fgn_autocov(0, 0.01, hh(0.3)), v_h(hh(0.3)) * 0.01_f64.powf(0.6), max_relative = 1e-14);
    }

    #[test]
    fn increment_sd_special_cases() {
        assert_relative_eq!(increment_sd(0.01, Hurst::BROWNIAN, 1.0), 0.1, max_relative = 1e-14);
        let h = hh(0.3);
        assert_relative_eq!(increment_sd(1.0, h, 2.5), 2.5 * a_const(h).sqrt(), max_relative = 1e-15);
        assert_eq!(increment_sd(-0.04, h, 1.0), increment_sd(0.04, h, 1.0));
    }
}
