//! Validation suites with measured-vs-expected tables.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate_hurst, RollingConfig};
use crate::numeric::compensated_sum;
use crate::simulate::seeds::{derive_seed, Stream};
use crate::simulate::{
    gen_fgn, gen_mpre, validate_prop1, HurstPathSpec, MpreSpec, NuPathSpec, Prop1Options, ProcessSpec,
    SimulationSpec,
};
use crate::specfun::{a_const, i_cosine, i_cosine_closed_form, increment_sd, j_integral, v_const, Hurst, VhVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Specfun,
    Estimator,
    Prop1,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Specfun => "specfun",
            Suite::Estimator => "estimator",
            Suite::Prop1 => "prop1",
        }
    }

    pub fn default_paths(self) -> usize {
        match self {
            Suite::Specfun => 0,
            Suite::Estimator => 200,
            Suite::Prop1 => 500,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "specfun" => Ok(Suite::Specfun),
            "estimator" => Ok(Suite::Estimator),
            "prop1" => Ok(Suite::Prop1),
            other => Err(Error::param(format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub case_id: String,
    pub measured: f64,
    pub expected: f64,
    /// Passes when `|measured - expected| <= tolerance`.
    pub tolerance: f64,
    pub pass: bool,
}

impl ValidationRow {
    pub fn new(case_id: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            case_id: case_id.into(),
            measured,
            expected,
            tolerance,
            pass: (measured - expected).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationTable {
    pub suite: Suite,
    pub seed: Option<u64>,
    pub paths: usize,
    /// Sorted by `case_id`.
    pub rows: Vec<ValidationRow>,
}

impl ValidationTable {
    fn new(suite: Suite, seed: Option<u64>, paths: usize, mut rows: Vec<ValidationRow>) -> Self {
        rows.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        Self { suite, seed, paths, rows }
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn row(&self, case_id: &str) -> Option<&ValidationRow> {
        self.rows.iter().find(|r| r.case_id == case_id)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["case_id", "measured", "expected", "tolerance", "pass"])?;
        for r in &self.rows {
            w.write_record([
                r.case_id.clone(),
                r.measured.to_string(),
                r.expected.to_string(),
                r.tolerance.to_string(),
                r.pass.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Grid `{0.05, 0.10, ..., 0.95}`.
pub fn hurst_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// The grid without `1/2`: eighteen points.
pub fn hurst_grid_off_half() -> Vec<f64> {
    hurst_grid().into_iter().filter(|h| (h - 0.5).abs() > 1e-12).collect()
}

pub fn run_suite(suite: Suite, paths: usize, seed: u64) -> Result<ValidationTable> {
    match suite {
        Suite::Specfun => specfun_suite(),
        Suite::Estimator => estimator_suite(paths, seed),
        Suite::Prop1 => prop1_suite(paths, seed),
    }
}

/// Quadrature identities and `V_H` agreement. Deterministic.
pub fn specfun_suite() -> Result<ValidationTable> {
    let mut rows = Vec::new();
    for h in hurst_grid_off_half() {
        let hh = Hurst::new(h)?;
        let a = a_const(hh);
        rows.push(ValidationRow::new(format!("identity/J/H{h:.2}"), j_integral(hh)? + 0.5 / h, a, 1e-6));
        rows.push(ValidationRow::new(
            format!("identity/I/H{h:.2}"),
            i_cosine(hh)?,
            i_cosine_closed_form(hh),
            1e-6,
        ));
    }
    for h in hurst_grid() {
        let hh = Hurst::new(h)?;
        let vals: Vec<f64> = VhVariant::ALL.iter().map(|&v| v_const(hh, v)).collect::<Result<_>>()?;
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let rel = (vals[i] - vals[j]).abs() / vals[i].abs().max(vals[j].abs());
                rows.push(ValidationRow::new(
                    format!("vh/{}-{}/H{h:.2}", VhVariant::ALL[i].name(), VhVariant::ALL[j].name()),
                    rel,
                    0.0,
                    1e-10,
                ));
            }
        }
    }
    rows.push(ValidationRow::new("vh/A/H0.50", a_const(Hurst::new(0.5)?), 1.0, f64::EPSILON));
    Ok(ValidationTable::new(Suite::Specfun, None, 0, rows))
}

pub const ESTIMATOR_N: usize = 4096;

/// Monte-Carlo moments of the rolling estimator on one fGn configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorMoments {
    pub mean: f64,
    /// Average over seeds of the sample variance of estimates taken on
    /// non-overlapping windows.
    pub variance: f64,
    /// `1 / (2 delta ln^2(n - 1))`.
    pub theoretical_variance: f64,
}

pub fn estimator_moments(h: f64, n: usize, paths: usize, seed: u64, cfg: &RollingConfig) -> Result<EstimatorMoments> {
    let hh = Hurst::new(h)?;
    let per_seed: Vec<(f64, f64)> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let returns = gen_fgn(n, hh, derive_seed(seed, Stream::MonteCarlo, i))?.values;
            let est = estimate_hurst(&returns, cfg)?;
            let mean = compensated_sum(est.h_hat.iter().copied()) / est.len() as f64;
            let blocks: Vec<f64> = est.h_hat.iter().step_by(cfg.delta).copied().collect();
            let bm = compensated_sum(blocks.iter().copied()) / blocks.len() as f64;
            let var = compensated_sum(blocks.iter().map(|x| (x - bm).powi(2))) / (blocks.len() - 1) as f64;
            Ok((mean, var))
        })
        .collect::<Result<_>>()?;
    let k = paths as f64;
    let ln = ((n - 1) as f64).ln();
    Ok(EstimatorMoments {
        mean: compensated_sum(per_seed.iter().map(|p| p.0)) / k,
        variance: compensated_sum(per_seed.iter().map(|p| p.1)) / k,
        theoretical_variance: 1.0 / (2.0 * cfg.delta as f64 * ln * ln),
    })
}

/// Calibration of the rolling estimator on Brownian and `H = 0.7` fGn data.
pub fn estimator_suite(paths: usize, seed: u64) -> Result<ValidationTable> {
    if paths < 10 {
        return Err(Error::param(format!("estimator suite needs at least 10 paths, got {paths}")));
    }
    let cfg = RollingConfig::default();
    let bm = estimator_moments(0.5, ESTIMATOR_N, paths, seed, &cfg)?;
    let persistent = estimator_moments(0.7, ESTIMATOR_N, paths, seed, &cfg)?;
    let rows = vec![
        ValidationRow::new("estimator/H0.50/mean", bm.mean, 0.5, 0.02),
        ValidationRow::new("estimator/H0.50/variance_ratio", bm.variance / bm.theoretical_variance, 1.0, 0.15),
        ValidationRow::new("estimator/H0.70/mean", persistent.mean, 0.7, 0.03),
    ];
    Ok(ValidationTable::new(Suite::Estimator, Some(seed), paths, rows))
}

pub const PROP1_N: usize = 1024;
pub const PROP1_HURST: [f64; 3] = [0.3, 0.5, 0.7];

/// Ratio of the root mean square of all unit-step increments, pooled over
/// `paths` constant-`H` MPRE paths, to the theoretical increment SD.
pub fn pooled_unit_lag_ratio(h: f64, nu: f64, n: usize, paths: usize, seed: u64) -> Result<f64> {
    let hh = Hurst::new(h)?;
    let spec = MpreSpec::new(HurstPathSpec::constant(hh), NuPathSpec::Constant(nu));
    let sums: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = gen_mpre(&spec, n, derive_seed(seed, Stream::MonteCarlo, i))?;
            Ok(compensated_sum(p.increments().iter().map(|x| x * x)))
        })
        .collect::<Result<_>>()?;
    let count = (paths * (n - 1)) as f64;
    let rms = (compensated_sum(sums.iter().copied()) / count).sqrt();
    Ok(rms / increment_sd(1.0 / (n - 1) as f64, hh, nu))
}

/// Short-lag increment SD of constant-`H` MPRE paths against the closed form.
pub fn prop1_suite(paths: usize, seed: u64) -> Result<ValidationTable> {
    if paths < crate::simulate::MIN_PATHS {
        return Err(Error::param(format!(
            "prop1 suite needs at least {} paths, got {paths}",
            crate::simulate::MIN_PATHS
        )));
    }
    let mut rows = Vec::new();
    for h in PROP1_HURST {
        let ratio = pooled_unit_lag_ratio(h, 1.0, PROP1_N, paths, seed)?;
        rows.push(ValidationRow::new(format!("prop1/H{h:.2}/pooled_unit_lag"), ratio, 1.0, 0.05));

        let spec = SimulationSpec {
            process: ProcessSpec::Mpre(MpreSpec::new(
                HurstPathSpec::constant(Hurst::new(h)?),
                NuPathSpec::Constant(1.0),
            )),
            n: PROP1_N,
            seed,
        };
        let table = validate_prop1(&spec, paths, &Prop1Options::default_for(PROP1_N))?;
        let smallest = table
            .smallest_lag()
            .ok_or_else(|| Error::Simulation("empty lag grid".into()))?;
        rows.push(ValidationRow::new(format!("prop1/H{h:.2}/probes_smallest_lag"), smallest.ratio, 1.0, 0.05));
    }
    Ok(ValidationTable::new(Suite::Prop1, Some(seed), paths, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(hurst_grid().len(), 19);
        assert_eq!(hurst_grid_off_half().len(), 18);
    }

    #[test]
    fn rows_are_sorted_and_flagged() {
        let t = ValidationTable::new(
            Suite::Specfun,
            None,
            0,
            vec![ValidationRow::new("b", 1.0, 1.0, 0.0), ValidationRow::new("a", 2.0, 1.0, 0.5)],
        );
        assert_eq!(t.rows[0].case_id, "a");
        assert!(!t.rows[0].pass);
        assert_eq!(t.failures(), 1);
    }

    #[test]
    fn suite_names_parse() {
        for s in [Suite::Specfun, Suite::Estimator, Suite::Prop1] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn small_path_counts_are_rejected() {
        assert!(prop1_suite(10, 1).is_err());
        assert!(estimator_suite(2, 1).is_err());
    }
}
