//! Price ingestion, end-to-end analysis and report export.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    estimate_hurst, estimate_volatility, log_returns, HurstSeries, Regime, RollingConfig, VolatilitySeries,
};
use crate::stats::{
    adf_test, efficiency_metrics, fair_sigma_alpha, summary_stats, AdfResult, EfficiencyMetrics, SummaryStats,
    ADF_DEFAULT_LAGS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub instrument: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
}

impl PricePath {
    pub fn new(instrument: impl Into<String>, dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::param("dates and closes differ in length"));
        }
        if let Some(i) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Data {
                line: None,
                reason: format!("dates not strictly increasing at {}", dates[i + 1]),
            });
        }
        if let Some(i) = closes.iter().position(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Data {
                line: None,
                reason: format!("close on {} is not strictly positive", dates[i]),
            });
        }
        Ok(Self {
            instrument: instrument.into(),
            dates,
            closes,
        })
    }

    /// Prices `start_price * exp(cumsum(returns))` on consecutive weekdays
    /// from `start`.
    pub fn from_log_returns(instrument: impl Into<String>, start: NaiveDate, start_price: f64, returns: &[f64]) -> Result<Self> {
        let mut dates = Vec::with_capacity(returns.len() + 1);
        let mut d = start;
        while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            d = d.succ_opt().expect("date in range");
        }
        dates.push(d);
        for _ in returns {
            d = d.succ_opt().expect("date in range");
            while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                d = d.succ_opt().expect("date in range");
            }
            dates.push(d);
        }
        let mut closes = Vec::with_capacity(returns.len() + 1);
        let mut log_p = start_price.ln();
        closes.push(start_price);
        for r in returns {
            log_p += r;
            closes.push(log_p.exp());
        }
        Self::new(instrument, dates, closes)
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn log_returns(&self) -> Result<Vec<f64>> {
        log_returns(&self.closes)
    }

    /// Writes the `date,close` CSV read by [`load_csv`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "close"])?;
        for (d, c) in self.dates.iter().zip(&self.closes) {
            w.write_record([d.to_string(), c.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Result of [`load_csv`]: the cleaned path and the number of blank-close
/// rows that were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub prices: PricePath,
    pub dropped_blank: usize,
}

/// Reads a `date,close` CSV. The instrument is named after the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instrument".into());
    read_prices(file, name)
}

pub fn read_prices<R: Read>(reader: R, instrument: impl Into<String>) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<String> = headers
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    if names != ["date", "close"] {
        return Err(Error::Data {
            line: Some(1),
            reason: format!("expected header `date,close`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut closes = Vec::new();
    let mut dropped_blank = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize);
        let data_err = |reason: String| Error::Data { line, reason };
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| data_err(format!("invalid date `{}`: {e}", &rec[0])))?;
        if rec[1].is_empty() {
            dropped_blank += 1;
            continue;
        }
        let close: f64 = rec[1]
            .parse()
            .map_err(|_| data_err(format!("invalid close `{}`", &rec[1])))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(data_err(format!("close must be strictly positive, got {close}")));
        }
        if let Some(&prev) = dates.last() {
            if date == prev {
                return Err(data_err(format!("duplicate date {date}")));
            }
            if date < prev {
                return Err(data_err(format!("date {date} precedes {prev}")));
            }
        }
        dates.push(date);
        closes.push(close);
    }
    Ok(Loaded {
        prices: PricePath::new(instrument, dates, closes)?,
        dropped_blank,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub ticker: String,
    /// Country or currency label.
    pub label: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn push(&mut self, prices: &PricePath, label: impl Into<String>) -> Result<()> {
        let (Some(&start_date), Some(&end_date)) = (prices.dates.first(), prices.dates.last()) else {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        };
        self.entries.push(ManifestEntry {
            ticker: prices.instrument.clone(),
            label: label.into(),
            start_date,
            end_date,
            size: prices.len(),
        });
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ticker", "label", "start_date", "end_date", "size"])?;
        for e in &self.entries {
            w.write_record([
                e.ticker.clone(),
                e.label.clone(),
                e.start_date.to_string(),
                e.end_date.to_string(),
                e.size.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentInfo {
    pub ticker: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub instrument: InstrumentInfo,
    pub config: RollingConfig,
    /// Date of the last observation of each window; shared index of all series.
    pub dates: Vec<NaiveDate>,
    pub hurst: HurstSeries,
    pub volatility: VolatilitySeries,
    /// `None` where the series is too short or constant.
    pub hurst_summary: Option<SummaryStats>,
    pub hurst_ci: [f64; 2],
    pub adf: Option<AdfResult>,
    pub vol_summary: Option<SummaryStats>,
    /// Time averages of the fair-volatility band edges.
    pub fair_vol_interval: [f64; 2],
    /// SD of returns whose next-period estimate is inside the band.
    pub fair_sigma_alpha: Option<f64>,
    pub efficiency: EfficiencyMetrics,
}

impl AnalysisReport {
    /// Percentages of windows in each regime, in the order momentum,
    /// efficient, reversal.
    pub fn regime_shares(&self) -> [(Regime, f64); 3] {
        let n = self.hurst.regime.len().max(1) as f64;
        [Regime::Momentum, Regime::Efficient, Regime::Reversal]
            .map(|r| (r, 100.0 * self.hurst.regime.iter().filter(|&&x| x == r).count() as f64 / n))
    }
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::InsufficientData { .. } | Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs the full estimation chain on one instrument.
pub fn run_analysis(prices: &PricePath, cfg: &RollingConfig) -> Result<AnalysisReport> {
    analyze(prices, cfg).map_err(|e| Error::Instrument {
        instrument: prices.instrument.clone(),
        source: Box::new(e),
    })
}

fn analyze(prices: &PricePath, cfg: &RollingConfig) -> Result<AnalysisReport> {
    cfg.validate()?;
    if prices.len() < cfg.delta + 2 {
        return Err(Error::InsufficientData {
            needed: cfg.delta + 2,
            got: prices.len(),
        });
    }
    let returns = prices.log_returns()?;
    let hurst = estimate_hurst(&returns, cfg)?;
    let volatility = estimate_volatility(&returns, &hurst, cfg)?;
    let efficiency = efficiency_metrics(&hurst, &volatility)?;
    let mean = |v: &[f64]| crate::numeric::mean(v);
    Ok(AnalysisReport {
        instrument: InstrumentInfo {
            ticker: prices.instrument.clone(),
            start_date: prices.dates[0],
            end_date: *prices.dates.last().expect("non-empty"),
            size: prices.len(),
        },
        config: *cfg,
        dates: hurst.t_index.iter().map(|&t| prices.dates[t + 1]).collect(),
        hurst_summary: optional(summary_stats(&hurst.h_hat))?,
        hurst_ci: [hurst.ci_lo, hurst.ci_hi],
        adf: optional(adf_test(&hurst.h_hat, ADF_DEFAULT_LAGS))?,
        vol_summary: optional(summary_stats(&volatility.sigma_hist))?,
        fair_vol_interval: [mean(&volatility.fair_lo), mean(&volatility.fair_hi)],
        fair_sigma_alpha: optional(fair_sigma_alpha(&returns, &hurst, cfg.alpha))?,
        efficiency,
        hurst,
        volatility,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    JsonDocument,
    CsvTables,
}

pub const REPORT_JSON: &str = "report.json";
pub const HURST_CSV: &str = "hurst.csv";
pub const VOLATILITY_CSV: &str = "volatility.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const PANEL_FILES: [&str; 3] = ["panel1_hurst.csv", "panel2_volatility.csv", "panel3_nu.csv"];

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn interval4(x: [f64; 2]) -> String {
    format!("[{:.4},{:.4}]", x[0], x[1])
}

/// Rows of `summary.csv`: `(section, statistic, value)`.
pub fn summary_rows(r: &AnalysisReport) -> Vec<(&'static str, &'static str, String)> {
    let na = || "NA".to_string();
    let stats_rows = |section: &'static str, s: &Option<SummaryStats>| {
        vec![
            (section, "Mean", s.map_or_else(na, |s| f4(s.mean))),
            (section, "St.Dev", s.map_or_else(na, |s| f4(s.sd))),
            (section, "Range", s.map_or_else(na, |s| f4(s.range))),
            (section, "Kurtosis", s.map_or_else(na, |s| f4(s.kurtosis))),
            (section, "Skewness", s.map_or_else(na, |s| f4(s.skewness))),
        ]
    };
    let mut rows = stats_rows("Hurst-Holder parameter", &r.hurst_summary);
    rows.push(("Hurst-Holder parameter", "95% Confidence interval", interval4(r.hurst_ci)));
    let adf = r.adf.as_ref();
    rows.push(("ADF test", "pValue", adf.map_or_else(na, |a| f4(a.p_value))));
    rows.push(("ADF test", "Stat", adf.map_or_else(na, |a| f4(a.statistic))));
    rows.push(("ADF test", "cValue", adf.map_or_else(na, |a| f4(a.critical_value_5pct))));
    rows.extend(stats_rows("Historical volatility", &r.vol_summary));
    rows.push(("Historical volatility", "95% C.I. fair volatility", interval4(r.fair_vol_interval)));
    rows.push(("Historical volatility", "Fair volatility sigma(alpha)", r.fair_sigma_alpha.map_or_else(na, f4)));
    rows
}

/// Rows of `metrics.csv`.
pub fn metrics_rows(r: &AnalysisReport) -> [(&'static str, String); 2] {
    [
        ("pct_h_in_ci", f4(r.efficiency.pct_h_in_ci)),
        ("pct_vol_in_ci", f4(r.efficiency.pct_vol_in_ci)),
    ]
}

/// Writes the report into `dir` and returns the files written.
pub fn export_report(report: &AnalysisReport, format: ReportFormat, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    match format {
        ReportFormat::JsonDocument => {
            let (path, mut w) = create(dir, REPORT_JSON)?;
            serde_json::to_writer_pretty(&mut w, report)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            w.flush().map_err(|e| Error::io(&path, e))?;
            Ok(vec![path])
        }
        ReportFormat::CsvTables => {
            let ticker = report.instrument.ticker.as_str();
            let h = &report.hurst;
            let v = &report.volatility;

            let (p_h, f) = create(dir, HURST_CSV)?;
            let mut w = csv::Writer::from_writer(f);
            w.write_record(["index", "date", "t", "h_hat", "h_raw", "ci_lo", "ci_hi", "regime", "clamped"])?;
            for i in 0..h.len() {
                w.write_record([
                    i.to_string(),
                    report.dates[i].to_string(),
                    h.t_index[i].to_string(),
                    h.h_hat[i].to_string(),
                    h.h_raw[i].to_string(),
                    h.ci_lo.to_string(),
                    h.ci_hi.to_string(),
                    h.regime[i].name().to_string(),
                    h.clamped[i].to_string(),
                ])?;
            }
            finish(&p_h, w)?;

            let (p_v, f) = create(dir, VOLATILITY_CSV)?;
            let mut w = csv::Writer::from_writer(f);
            w.write_record([
                "index", "date", "t", "sigma_hist", "sigma_theo", "nu_hat", "nu_raw", "fair_lo", "fair_hi",
            ])?;
            for i in 0..v.t_index.len() {
                w.write_record([
                    i.to_string(),
                    report.dates[i].to_string(),
                    v.t_index[i].to_string(),
                    v.sigma_hist[i].to_string(),
                    v.sigma_theo[i].to_string(),
                    v.nu_hat[i].to_string(),
                    v.nu_raw[i].to_string(),
                    v.fair_lo[i].to_string(),
                    v.fair_hi[i].to_string(),
                ])?;
            }
            finish(&p_v, w)?;

            let (p_s, f) = create(dir, SUMMARY_CSV)?;
            let mut w = csv::Writer::from_writer(f);
            w.write_record(["section", "statistic", ticker])?;
            for (section, stat, value) in summary_rows(report) {
                w.write_record([section, stat, value.as_str()])?;
            }
            finish(&p_s, w)?;

            let (p_m, f) = create(dir, METRICS_CSV)?;
            let mut w = csv::Writer::from_writer(f);
            w.write_record(["metric", ticker])?;
            for (metric, value) in metrics_rows(report) {
                w.write_record([metric, value.as_str()])?;
            }
            finish(&p_m, w)?;

            Ok(vec![p_h, p_v, p_s, p_m])
        }
    }
}

pub fn load_report_json(path: impl AsRef<Path>) -> Result<AnalysisReport> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

/// Three aligned panel files: Hurst estimate with band, volatilities with the
/// fair band, and the scale estimate.
pub fn export_plot_data(report: &AnalysisReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let h = &report.hurst;
    let v = &report.volatility;

    let (p1, f) = create(dir, PANEL_FILES[0])?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["index", "date", "h_hat", "ci_lo", "ci_hi"])?;
    for i in 0..h.len() {
        w.write_record([
            i.to_string(),
            report.dates[i].to_string(),
            h.h_hat[i].to_string(),
            h.ci_lo.to_string(),
            h.ci_hi.to_string(),
        ])?;
    }
    finish(&p1, w)?;

    let (p2, f) = create(dir, PANEL_FILES[1])?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["index", "date", "sigma_hist", "sigma_theo", "fair_lo", "fair_hi"])?;
    for i in 0..v.t_index.len() {
        w.write_record([
            i.to_string(),
            report.dates[i].to_string(),
            v.sigma_hist[i].to_string(),
            v.sigma_theo[i].to_string(),
            v.fair_lo[i].to_string(),
            v.fair_hi[i].to_string(),
        ])?;
    }
    finish(&p2, w)?;

    let (p3, f) = create(dir, PANEL_FILES[2])?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["index", "date", "nu_hat"])?;
    for i in 0..v.t_index.len() {
        w.write_record([i.to_string(), report.dates[i].to_string(), v.nu_hat[i].to_string()])?;
    }
    finish(&p3, w)?;

    Ok(vec![p1, p2, p3])
}
