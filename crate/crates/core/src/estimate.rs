//! Rolling Hurst-Holder estimation and the volatility triple built on it.
//!
//! A return series of length `N` is read as the increments of a process on
//! `[0, 1]` sampled with step `h = 1/N` (so `n = N + 1` prices and
//! `ln(n - 1) = ln N`). Over a window of `delta` returns ending at `t`
//!
//! ```text
//! S2(t) = (1/delta) sum r_j^2,    H_t = -(ln S2(t) - ln V_{H_t}) / (2 ln(n-1))
//! ```
//!
//! where the second equation is solved by fixed-point iteration started at the
//! raw value `-ln S2(t) / (2 ln(n-1))`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numeric::{median, sample_sd};
use crate::specfun::{a_const, v_h, Hurst};

/// Estimates are clamped into this range and flagged.
pub const H_MIN: f64 = 0.01;
pub const H_MAX: f64 = 0.99;

const FIXED_POINT_TOL: f64 = 1e-6;
const FIXED_POINT_MAX_ITER: usize = 100;
/// Aggregation levels of the variogram used for the global scale.
const VARIOGRAM_LAGS: [usize; 5] = [1, 2, 4, 8, 16];

/// How returns are brought to the unit-interval scale before estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScaleNormalization {
    /// Divide all returns by one global scale fitted by a log-variogram
    /// regression, so that the whole sample behaves like an fBm with unit
    /// scale. The Hurst estimates are then invariant to the units of the
    /// data, and `nu` absorbs the scale.
    #[default]
    Global,
    /// Use the returns as they are; appropriate for data already on the
    /// unit-interval scale, such as simulated fGn.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub delta: usize,
    pub alpha: f64,
    pub nu_window: usize,
    #[serde(default)]
    pub normalization: ScaleNormalization,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            delta: 20,
            alpha: 0.05,
            nu_window: 120,
            normalization: ScaleNormalization::Global,
        }
    }
}

impl RollingConfig {
    pub const MIN_DELTA: usize = 5;

    pub fn validate(&self) -> Result<()> {
        if self.delta < Self::MIN_DELTA {
            return Err(Error::param(format!(
                "window length delta must be at least {}, got {}",
                Self::MIN_DELTA,
                self.delta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.nu_window < self.delta {
            return Err(Error::param(format!(
                "nu window ({}) must be at least delta ({})",
                self.nu_window, self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Estimate above the band: persistent increments, unfairly low volatility.
    Momentum,
    Efficient,
    /// Estimate below the band: anti-persistent increments, unfairly high volatility.
    Reversal,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Momentum => "momentum",
            Regime::Efficient => "efficient",
            Regime::Reversal => "reversal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstSeries {
    /// Return index (0-based) of the last observation in each window.
    pub t_index: Vec<usize>,
    /// Fixed-point estimates, clamped to `[H_MIN, H_MAX]`.
    pub h_hat: Vec<f64>,
    /// Raw estimates `-ln S2 / (2 ln(n-1))` before the `V_H` correction.
    pub h_raw: Vec<f64>,
    pub clamped: Vec<bool>,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub regime: Vec<Regime>,
    /// Number of price observations, `returns + 1`.
    pub n: usize,
    pub delta: usize,
    pub alpha: f64,
    /// Global scale the returns were divided by (1 without normalisation).
    pub scale: f64,
}

impl HurstSeries {
    pub fn len(&self) -> usize {
        self.h_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_hat.is_empty()
    }

    /// Grid step `1/(n-1)`.
    pub fn step(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilitySeries {
    pub t_index: Vec<usize>,
    pub sigma_hist: Vec<f64>,
    pub sigma_theo: Vec<f64>,
    /// Smoothed scale estimate.
    pub nu_hat: Vec<f64>,
    /// Per-window scale estimate before smoothing.
    pub nu_raw: Vec<f64>,
    pub fair_lo: Vec<f64>,
    pub fair_hi: Vec<f64>,
}

/// `r_t = ln(S_t / S_{t-1})`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(Error::Data {
            line: None,
            reason: format!("price at index {i} is not strictly positive: {}", prices[i]),
        });
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Efficiency band `1/2 -+ z_{1-alpha/2} sqrt(1 / (2 delta ln^2(n-1)))`.
pub fn hurst_ci(delta: usize, n: usize, alpha: f64) -> Result<(f64, f64)> {
    if delta < 2 {
        return Err(Error::param(format!("delta must be at least 2, got {delta}")));
    }
    if n < 3 {
        return Err(Error::param(format!("n must be at least 3, got {n}")));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let l = ((n - 1) as f64).ln();
    let half = z * (1.0 / (2.0 * delta as f64 * l * l)).sqrt();
    // 1 - hi is exact for hi in [1/2, 1], so lo + hi == 1 holds bitwise
    let hi = 0.5 + half;
    Ok((1.0 - hi, hi))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("probability must lie in (0, 1), got {p}")));
    }
    let std = Normal::new(0.0, 1.0).expect("unit normal is valid");
    Ok(std.inverse_cdf(p))
}

/// Hurst exponent and scale `sigma` of the whole sample, from the regression
/// of `ln E[(r_i + ... + r_{i+k-1})^2]` on `ln k`: the intercept equals
/// `ln(sigma^2 V_H h^{2H})` and the slope `2H`.
pub fn global_scale(returns: &[f64]) -> Result<(f64, f64)> {
    let len = returns.len();
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for r in returns {
        acc += r;
        prefix.push(acc);
    }
    let pts: Vec<(f64, f64)> = VARIOGRAM_LAGS
        .iter()
        .filter(|&&k| 2 * k <= len)
        .map(|&k| {
            let count = len - k + 1;
            let m2 = (0..count).map(|i| (prefix[i + k] - prefix[i]).powi(2)).sum::<f64>() / count as f64;
            ((k as f64).ln(), m2.ln())
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData { needed: 4, got: len });
    }
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Degenerate("returns have zero second moment".into()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let hg = (0.5 * sxy / sxx).clamp(H_MIN, H_MAX);
    // refit the intercept with the clamped slope
    let intercept = my - 2.0 * hg * mx;
    let step = 1.0 / len as f64;
    let hurst = Hurst::new(hg)?;
    let sigma2 = intercept.exp() / (v_h(hurst) * step.powf(2.0 * hg));
    Ok((hg, sigma2.sqrt()))
}

/// Right-aligned rolling means of `r^2`.
fn rolling_s2(returns: &[f64], delta: usize) -> Vec<f64> {
    returns
        .windows(delta)
        .map(|w| w.iter().map(|r| r * r).sum::<f64>() / delta as f64)
        .collect()
}

/// Solves `H = -(ln s2 - ln V_H) / (2L)` from the raw start `-ln s2 / (2L)`.
///
/// Returns `(raw, corrected, clamped)`.
pub fn hurst_from_moment(s2: f64, log_n1: f64) -> (f64, f64, bool) {
    let raw = -s2.ln() / (2.0 * log_n1);
    let mut clamped = !(H_MIN..=H_MAX).contains(&raw);
    let mut h = raw.clamp(H_MIN, H_MAX);
    for _ in 0..FIXED_POINT_MAX_ITER {
        let v = v_h(Hurst::new(h).expect("clamped into (0, 1)"));
        let next = -(s2.ln() - v.ln()) / (2.0 * log_n1);
        let next_c = next.clamp(H_MIN, H_MAX);
        clamped = next != next_c;
        let done = (next_c - h).abs() < FIXED_POINT_TOL;
        h = next_c;
        if done {
            break;
        }
    }
    (raw, h, clamped)
}

/// Rolling estimates `H_t` for every `t >= delta - 1` (0-based return index).
pub fn estimate_hurst(returns: &[f64], cfg: &RollingConfig) -> Result<HurstSeries> {
    cfg.validate()?;
    let len = returns.len();
    if len < cfg.delta {
        return Err(Error::InsufficientData {
            needed: cfg.delta,
            got: len,
        });
    }
    if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
        return Err(Error::Data {
            line: None,
            reason: format!("return at index {i} is not finite"),
        });
    }
    let scale = match cfg.normalization {
        ScaleNormalization::Global => global_scale(returns)?.1,
        ScaleNormalization::None => 1.0,
    };
    let log_n1 = (len as f64).ln();
    let n = len + 1;
    let (ci_lo, ci_hi) = hurst_ci(cfg.delta, n, cfg.alpha)?;
    let inv_scale2 = 1.0 / (scale * scale);

    let s2 = rolling_s2(returns, cfg.delta);
    let mut out = HurstSeries {
        t_index: Vec::with_capacity(s2.len()),
        h_hat: Vec::with_capacity(s2.len()),
        h_raw: Vec::with_capacity(s2.len()),
        clamped: Vec::with_capacity(s2.len()),
        ci_lo,
        ci_hi,
        regime: Vec::with_capacity(s2.len()),
        n,
        delta: cfg.delta,
        alpha: cfg.alpha,
        scale,
    };
    for (i, &s) in s2.iter().enumerate() {
        let t = i + cfg.delta - 1;
        if !(s > 0.0) {
            return Err(Error::Estimation {
                index: t,
                reason: "all returns in the window are zero".into(),
            });
        }
        let (raw, h, clamped) = hurst_from_moment(s * inv_scale2, log_n1);
        out.t_index.push(t);
        out.h_raw.push(raw);
        out.h_hat.push(h);
        out.clamped.push(clamped);
        out.regime.push(classify_regime(h, ci_lo, ci_hi));
    }
    Ok(out)
}

/// Regime of one estimate relative to the band `[lo, hi]`.
pub fn classify_regime(h: f64, lo: f64, hi: f64) -> Regime {
    if h > hi {
        Regime::Momentum
    } else if h < lo {
        Regime::Reversal
    } else {
        Regime::Efficient
    }
}

/// Regimes of a whole series against its own band.
pub fn classify_series(hurst: &HurstSeries) -> Vec<Regime> {
    hurst
        .h_hat
        .iter()
        .map(|&h| classify_regime(h, hurst.ci_lo, hurst.ci_hi))
        .collect()
}

/// Rolling sample SD (divisor `delta - 1`), right-aligned.
pub fn historical_vol(returns: &[f64], delta: usize) -> Result<Vec<f64>> {
    if delta < 2 {
        return Err(Error::param(format!("delta must be at least 2, got {delta}")));
    }
    if returns.len() < delta {
        return Err(Error::InsufficientData {
            needed: delta,
            got: returns.len(),
        });
    }
    Ok(returns.windows(delta).map(sample_sd).collect())
}

/// Trailing median of length `window`; the first values use all data so far.
pub fn trailing_median(x: &[f64], window: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| median(&x[(i + 1).saturating_sub(window)..=i]))
        .collect()
}

/// Per-window scale `sqrt(S2) / (h^H sqrt(A(H)))` and its trailing median.
///
/// Returns `(nu_raw, nu_hat)` aligned with `hurst`.
pub fn estimate_nu(returns: &[f64], hurst: &HurstSeries, cfg: &RollingConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    if returns.len() + 1 != hurst.n || hurst.delta != cfg.delta {
        return Err(Error::param("returns and Hurst series are not aligned"));
    }
    let step = hurst.step();
    let s2 = rolling_s2(returns, cfg.delta);
    let raw = s2
        .iter()
        .zip(&hurst.h_hat)
        .zip(&hurst.t_index)
        .map(|((&s, &h), &t)| {
            if !(s > 0.0) {
                return Err(Error::Estimation {
                    index: t,
                    reason: "zero second moment in window".into(),
                });
            }
            let hh = Hurst::new(h)?;
            Ok(s.sqrt() / (step.powf(h) * a_const(hh).sqrt()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let smooth = trailing_median(&raw, cfg.nu_window);
    Ok((raw, smooth))
}

/// `sigma_theo(t) = h^{H_t} nu(t) sqrt(A(H_t))` with `h = 1/(n-1)`.
pub fn theoretical_vol(h_hat: &[f64], nu: &[f64], n: usize) -> Result<Vec<f64>> {
    if h_hat.len() != nu.len() {
        return Err(Error::param("Hurst and nu series differ in length"));
    }
    if n < 3 {
        return Err(Error::param(format!("n must be at least 3, got {n}")));
    }
    let step = 1.0 / (n - 1) as f64;
    h_hat
        .iter()
        .zip(nu)
        .map(|(&h, &v)| Ok(step.powf(h) * v * a_const(Hurst::new(h)?).sqrt()))
        .collect()
}

/// Volatility implied by the band edges: the upper Hurst edge gives the lower
/// volatility edge and vice versa.
pub fn fair_vol_band(nu: &[f64], delta: usize, n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (h_lo, h_hi) = hurst_ci(delta, n, alpha)?;
    if !(h_lo > 0.0 && h_hi < 1.0) {
        return Err(Error::Domain(format!("efficiency band [{h_lo}, {h_hi}] leaves (0, 1)")));
    }
    let at_hi = theoretical_vol(&vec![h_hi; nu.len()], nu, n)?;
    let at_lo = theoretical_vol(&vec![h_lo; nu.len()], nu, n)?;
    Ok(at_hi
        .into_iter()
        .zip(at_lo)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .unzip())
}

/// Historical, theoretical and fair volatility aligned with `hurst`.
pub fn estimate_volatility(returns: &[f64], hurst: &HurstSeries, cfg: &RollingConfig) -> Result<VolatilitySeries> {
    let sigma_hist = historical_vol(returns, cfg.delta)?;
    let (nu_raw, nu_hat) = estimate_nu(returns, hurst, cfg)?;
    let sigma_theo = theoretical_vol(&hurst.h_hat, &nu_hat, hurst.n)?;
    let (fair_lo, fair_hi) = fair_vol_band(&nu_hat, cfg.delta, hurst.n, cfg.alpha)?;
    Ok(VolatilitySeries {
        t_index: hurst.t_index.clone(),
        sigma_hist,
        sigma_theo,
        nu_hat,
        nu_raw,
        fair_lo,
        fair_hi,
    })
}
