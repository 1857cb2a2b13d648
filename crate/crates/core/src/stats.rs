//! Descriptive statistics, sample ACF, the augmented Dickey-Fuller test,
//! efficiency metrics, the fair volatility `sigma(alpha)` and the straddle payoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimate::{hurst_ci, HurstSeries, VolatilitySeries};
use crate::numeric::{compensated_sum, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Divisor `n - 1`.
    pub sd: f64,
    pub range: f64,
    /// Raw (non-excess) kurtosis, divisor `n`.
    pub kurtosis: f64,
    /// Standardised third moment, divisor `n`.
    pub skewness: f64,
}

pub fn summary_stats(x: &[f64]) -> Result<SummaryStats> {
    let n = x.len();
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data {
            line: None,
            reason: "summary statistics of non-finite values".into(),
        });
    }
    let nf = n as f64;
    let mean = compensated_sum(x.iter().copied()) / nf;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let m2 = compensated_sum(d.iter().map(|v| v * v)) / nf;
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    if max == min || m2 <= 0.0 {
        return Err(Error::Degenerate("constant series has no skewness or kurtosis".into()));
    }
    let m3 = compensated_sum(d.iter().map(|v| v * v * v)) / nf;
    let m4 = compensated_sum(d.iter().map(|v| (v * v) * (v * v))) / nf;
    Ok(SummaryStats {
        count: n,
        mean,
        sd: sample_sd(x),
        range: max - min,
        kurtosis: m4 / (m2 * m2),
        skewness: m3 / m2.powf(1.5),
    })
}

/// `rho(k) = c(k) / c(0)` for `k = 0..=max_lag`, with the biased autocovariance.
pub fn sample_acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if max_lag < 1 || n <= max_lag {
        return Err(Error::param(format!("need 1 <= max_lag < length, got max_lag {max_lag}, length {n}")));
    }
    let mean = compensated_sum(x.iter().copied()) / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = compensated_sum(d.iter().map(|v| v * v));
    if !(c0 > 0.0) {
        return Err(Error::Degenerate("zero-variance series has no autocorrelation".into()));
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                compensated_sum(d.iter().zip(&d[k..]).map(|(a, b)| a * b)) / c0
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeterministicTerms {
    ConstantAndTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Critical values at 1%, 5% and 10%.
    pub critical_values: [f64; 3],
    pub critical_value_5pct: f64,
    pub lags: usize,
    /// Observations used in the regression.
    pub nobs: usize,
    pub deterministic_terms: DeterministicTerms,
}

impl AdfResult {
    pub fn rejects_unit_root_5pct(&self) -> bool {
        self.statistic < self.critical_value_5pct
    }
}

pub const ADF_DEFAULT_LAGS: usize = 1;
/// Minimum series length beyond the lag order.
pub const ADF_MIN_OBS: usize = 25;

// MacKinnon (1994) p-value surface, constant and trend, one variable.
const TAU_STAR_CT: f64 = -2.89;
const TAU_MIN_CT: f64 = -16.18;
const TAU_MAX_CT: f64 = 0.7;
const TAU_SMALLP_CT: [f64; 3] = [3.2512, 1.6047, 0.049588];
const TAU_LARGEP_CT: [f64; 4] = [2.5261, 0.61654, -0.37956, -0.060285];
// MacKinnon (2010) critical value surface c0 + c1/T + c2/T^2 + c3/T^3.
const TAU_CT_2010: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.38],
];

/// Asymptotic p-value of an ADF statistic (constant and trend).
pub fn mackinnon_p(stat: f64) -> f64 {
    if stat > TAU_MAX_CT {
        return 1.0;
    }
    if stat < TAU_MIN_CT {
        return 0.0;
    }
    let poly = if stat <= TAU_STAR_CT {
        &TAU_SMALLP_CT[..]
    } else {
        &TAU_LARGEP_CT[..]
    };
    let z = poly.iter().rev().fold(0.0, |acc, c| acc * stat + c);
    Normal::new(0.0, 1.0).expect("unit normal").cdf(z)
}

/// Finite-sample critical values at 1%, 5% and 10% for `nobs` observations.
pub fn mackinnon_crit(nobs: usize) -> [f64; 3] {
    let inv = 1.0 / nobs as f64;
    TAU_CT_2010.map(|c| c[0] + inv * (c[1] + inv * (c[2] + inv * c[3])))
}

/// ADF regression `dy_t = a + b t + g y_{t-1} + sum_i d_i dy_{t-i} + e_t`;
/// the statistic is the t-ratio of `g`.
pub fn adf_test(x: &[f64], lags: usize) -> Result<AdfResult> {
    let n = x.len();
    if n < ADF_MIN_OBS + lags {
        return Err(Error::InsufficientData {
            needed: ADF_MIN_OBS + lags,
            got: n,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data {
            line: None,
            reason: "ADF test on non-finite values".into(),
        });
    }
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let nobs = n - lags - 1;
    let k = lags + 3;
    // row r is time index t = lags + 1 + r in x, i.e. dx index lags + r
    let design = DMatrix::from_fn(nobs, k, |r, c| {
        let t = lags + r;
        match c {
            0 => x[t],
            c if c <= lags => dx[t - c],
            c if c == lags + 1 => 1.0,
            _ => (r + 1) as f64,
        }
    });
    let y = DVector::from_iterator(nobs, (0..nobs).map(|r| dx[lags + r]));
    let (coef, se0) = ols_first_t(design, y)?;
    let statistic = coef / se0;
    let crit = mackinnon_crit(nobs);
    Ok(AdfResult {
        statistic,
        p_value: mackinnon_p(statistic),
        critical_values: crit,
        critical_value_5pct: crit[1],
        lags,
        nobs,
        deterministic_terms: DeterministicTerms::ConstantAndTrend,
    })
}

/// OLS by QR; returns the first coefficient and its standard error.
fn ols_first_t(design: DMatrix<f64>, y: DVector<f64>) -> Result<(f64, f64)> {
    let (nobs, k) = design.shape();
    if nobs <= k {
        return Err(Error::InsufficientData { needed: k + 1, got: nobs });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * diag_max) || diag_max == 0.0 {
        return Err(Error::Degenerate("ADF regression design is rank deficient".into()));
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Degenerate("singular ADF regression".into()))?;
    let resid = &y - &design * &beta;
    let rss = resid.norm_squared();
    let s2 = rss / (nobs - k) as f64;
    if !(s2 > 0.0) {
        return Err(Error::Degenerate("ADF regression fits exactly".into()));
    }
    // [(X'X)^{-1}]_{00} = || row 0 of R^{-1} ||^2
    let rinv = r
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular ADF regression".into()))?;
    let v00 = rinv.row(0).norm_squared();
    Ok((beta[0], (s2 * v00).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMetrics {
    /// Percentage of estimates inside the Hurst efficiency band.
    pub pct_h_in_ci: f64,
    /// Percentage of historical volatilities inside the fair band.
    pub pct_vol_in_ci: f64,
}

/// `100 * (true entries) / len`.
pub fn percentage(mask: &[bool]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::param("percentage of an empty set"));
    }
    Ok(100.0 * mask.iter().filter(|&&b| b).count() as f64 / mask.len() as f64)
}

pub fn efficiency_metrics(hurst: &HurstSeries, vol: &VolatilitySeries) -> Result<EfficiencyMetrics> {
    if hurst.t_index != vol.t_index {
        return Err(Error::param("Hurst and volatility series are not aligned"));
    }
    let h_mask: Vec<bool> = hurst
        .h_hat
        .iter()
        .map(|&h| h >= hurst.ci_lo && h <= hurst.ci_hi)
        .collect();
    let v_mask: Vec<bool> = vol
        .sigma_hist
        .iter()
        .zip(vol.fair_lo.iter().zip(&vol.fair_hi))
        .map(|(&s, (&lo, &hi))| s >= lo && s <= hi)
        .collect();
    Ok(EfficiencyMetrics {
        pct_h_in_ci: percentage(&h_mask)?,
        pct_vol_in_ci: percentage(&v_mask)?,
    })
}

/// Sample SD of the returns `r_t` whose next-period estimate `H_{t+1}` lies in
/// the efficiency band at level `alpha`.
///
/// `returns[t]` is `ln(S_{t+1}/S_t)` in 0-based price indexing; the estimate
/// "at t + 1" is the one whose window ends at return index `t + 1`.
pub fn fair_sigma_alpha(returns: &[f64], hurst: &HurstSeries, alpha: f64) -> Result<f64> {
    if returns.len() + 1 != hurst.n {
        return Err(Error::param("returns and Hurst series are not aligned"));
    }
    let (lo, hi) = hurst_ci(hurst.delta, hurst.n, alpha)?;
    let picked: Vec<f64> = hurst
        .t_index
        .iter()
        .zip(&hurst.h_hat)
        .filter(|&(&t, &h)| t >= 1 && h >= lo && h <= hi)
        .map(|(&t, _)| returns[t - 1])
        .collect();
    if picked.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: picked.len(),
        });
    }
    Ok(sample_sd(&picked))
}

/// Long-straddle payoff `|S_T - K| - (C + P)`.
pub fn straddle_payoff(terminal: f64, strike: f64, call_premium: f64, put_premium: f64) -> Result<f64> {
    for (name, v) in [
        ("terminal price", terminal),
        ("strike", strike),
        ("call premium", call_premium),
        ("put premium", put_premium),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::param(format!("{name} must be a non-negative number, got {v}")));
        }
    }
    Ok((terminal - strike).max(0.0) + (strike - terminal).max(0.0) - (call_premium + put_premium))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn oracle_series() -> Vec<f64> {
        (0..60)
            .map(|i| {
                let f = i as f64;
                (0.37 * f).sin() + 0.01 * f + ((i * 7919) % 13) as f64 / 13.0
            })
            .collect()
    }

    #[test]
    fn adf_matches_reference_implementation() {
        let x = oracle_series();
        let r = adf_test(&x, 1).unwrap();
        assert_eq!(r.nobs, 58);
        assert_relative_eq!(r.statistic, -3.0699707977600474, epsilon = 1e-10);
        assert_relative_eq!(r.p_value, 0.11355650493559788, epsilon = 1e-8);
        assert_relative_eq!(r.critical_value_5pct, -3.4891051933248596, epsilon = 1e-10);
        let r2 = adf_test(&x, 2).unwrap();
        assert_eq!(r2.nobs, 57);
        assert_relative_eq!(r2.statistic, -3.7276561491648703, epsilon = 1e-10);
        assert_relative_eq!(r2.p_value, 0.020599399445327193, epsilon = 1e-8);
    }

    #[test]
    fn mackinnon_surfaces() {
        assert_relative_eq!(mackinnon_p(-3.0), 0.13208098, epsilon = 1e-8);
        assert_relative_eq!(mackinnon_p(-2.0), 0.60143377, epsilon = 1e-8);
        assert_relative_eq!(mackinnon_p(-4.0), 0.00879370, epsilon = 1e-8);
        assert_eq!(mackinnon_p(1.0), 1.0);
        assert_eq!(mackinnon_p(-20.0), 0.0);
        let c = mackinnon_crit(24527);
        for (a, b) in c.iter().zip([-3.95913915, -3.41066902, -3.12715543]) {
            assert_relative_eq!(*a, b, epsilon = 1e-8);
        }
        let c = mackinnon_crit(4612);
        for (a, b) in c.iter().zip([-3.96073428, -3.41144238, -3.12761081]) {
            assert_relative_eq!(*a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn adf_rejects_constant_and_short_series() {
        assert!(matches!(adf_test(&[2.0; 40], 1), Err(Error::Degenerate(_))));
        assert!(matches!(adf_test(&[1.0; 10], 1), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn summary_examples() {
        assert!(matches!(summary_stats(&[1.0; 4]), Err(Error::Degenerate(_))));
        let s = summary_stats(&[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_relative_eq!(s.range, 1.0);
        assert_relative_eq!(s.kurtosis, 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.skewness, 0.0);
        let s = summary_stats(&[1.0, 2.0, 3.0, 10.0]).unwrap();
        // reference values from scipy.stats (bias=True)
        assert_relative_eq!(s.skewness, 1.0182337649086284, epsilon = 1e-12);
        assert_relative_eq!(s.kurtosis, 2.2304, epsilon = 1e-12);
        assert_relative_eq!(s.sd, 4.08248290463863, epsilon = 1e-12);
    }

    #[test]
    fn acf_basics() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0];
        let r = sample_acf(&x, 2).unwrap();
        assert_eq!(r[0], 1.0);
        assert_relative_eq!(r[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(r[2], 0.1, epsilon = 1e-12);
        assert!(sample_acf(&[1.0; 5], 1).is_err());
        assert!(sample_acf(&x, 5).is_err());
    }

    #[test]
    fn percentage_anchor() {
        let mask: Vec<bool> = (0..1000).map(|i| i < 436).collect();
        assert_relative_eq!(percentage(&mask).unwrap(), 43.6, epsilon = 1e-12);
        assert_eq!(percentage(&[true; 7]).unwrap(), 100.0);
        assert!(percentage(&[]).is_err());
    }

    #[test]
    fn straddle_examples() {
        assert_eq!(straddle_payoff(110.0, 100.0, 5.0, 3.0).unwrap(), 2.0);
        assert_eq!(straddle_payoff(100.0, 100.0, 5.0, 3.0).unwrap(), -8.0);
        assert_eq!(straddle_payoff(90.0, 100.0, 5.0, 3.0).unwrap(), 2.0);
        assert!(straddle_payoff(90.0, 100.0, -5.0, 3.0).unwrap_err().is_usage());
    }

    fn flat_series(h: f64, len: usize, delta: usize) -> HurstSeries {
        let count = len - delta + 1;
        HurstSeries {
            t_index: (delta - 1..len).collect(),
            h_hat: vec![h; count],
            h_raw: vec![h; count],
            clamped: vec![false; count],
            ci_lo: 0.4,
            ci_hi: 0.6,
            regime: vec![crate::estimate::Regime::Efficient; count],
            n: len + 1,
            delta,
            alpha: 0.05,
            scale: 1.0,
        }
    }

    #[test]
    fn fair_sigma_uses_next_period_estimate() {
        let r: Vec<f64> = (0..50).map(|i| ((i * 17 % 7) as f64 - 3.0) * 0.01).collect();
        let hs = flat_series(0.5, r.len(), 5);
        // estimates exist for t = 4..49, so returns 3..48 qualify
        let got = fair_sigma_alpha(&r, &hs, 0.05).unwrap();
        assert_relative_eq!(got, sample_sd(&r[3..49]), epsilon = 1e-15);
        let hs = flat_series(0.9, r.len(), 5);
        assert!(matches!(fair_sigma_alpha(&r, &hs, 0.05), Err(Error::InsufficientData { .. })));
    }
}
