//! Hurst-function and scale-function specifications for MPRE simulation.
//!
//! Paths are realised on the kernel grid before any driving noise is drawn,
//! so they are independent of the Brownian increments by construction.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use super::fgn::{Method, StationaryGaussian};
use super::seeds::{rng_for, Stream};
use crate::error::{Error, Result};
use crate::specfun::{fgn_autocov, Hurst};

/// A deterministic real function of time with a human-readable label.
#[derive(Clone)]
pub struct SmoothFn {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl SmoothFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFn({})", self.label)
    }
}

impl Serialize for SmoothFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label)
    }
}

/// Parameters of a fractional Ornstein-Uhlenbeck Hurst function,
/// `dY = -reversion (Y - mean) dt + vol dB^{driver}(t)`, started at `mean`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FouParams {
    pub mean: f64,
    pub reversion: f64,
    pub vol: f64,
    pub driver: Hurst,
}

#[derive(Debug, Clone, Serialize)]
pub enum HurstPathMode {
    Constant(f64),
    /// `values[i]` applies on `[breaks[i-1], breaks[i])`; `values.len() == breaks.len() + 1`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// `start + (end - start) * t` on `[0, 1]`, held at `start` before time 0.
    Linear { start: f64, end: f64 },
    Smooth(SmoothFn),
    FractionalOu(FouParams),
}

/// A Hurst function together with the compact range `[lo, hi]` it is clamped to.
#[derive(Debug, Clone, Serialize)]
pub struct HurstPathSpec {
    pub mode: HurstPathMode,
    pub lo: f64,
    pub hi: f64,
}

impl HurstPathSpec {
    pub const DEFAULT_LO: f64 = 0.05;
    pub const DEFAULT_HI: f64 = 0.95;

    pub fn constant(h: Hurst) -> Self {
        Self::with_mode(HurstPathMode::Constant(h.get()))
    }

    pub fn with_mode(mode: HurstPathMode) -> Self {
        Self {
            mode,
            lo: Self::DEFAULT_LO,
            hi: Self::DEFAULT_HI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo <= self.hi && self.hi < 1.0) {
            return Err(Error::param(format!(
                "Hurst range must satisfy 0 < lo <= hi < 1, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        let in_unit = |h: f64| h > 0.0 && h < 1.0;
        match &self.mode {
            HurstPathMode::Constant(h) if !in_unit(*h) => Err(Error::param(format!("constant H = {h} outside (0, 1)"))),
            HurstPathMode::Linear { start, end } if !(in_unit(*start) && in_unit(*end)) => {
                Err(Error::param("linear H end points must lie in (0, 1)"))
            }
            HurstPathMode::PiecewiseConstant { breaks, values } => validate_piecewise(breaks, values, in_unit),
            HurstPathMode::FractionalOu(p) if !(in_unit(p.mean) && p.reversion >= 0.0 && p.vol >= 0.0) => {
                Err(Error::param("fOU Hurst path needs mean in (0, 1) and non-negative reversion and vol"))
            }
            _ => Ok(()),
        }
    }

    /// True if every realisation is the same function of time.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self.mode, HurstPathMode::FractionalOu(_))
    }

    /// Constant value, if the function is constant after clamping.
    pub fn constant_value(&self) -> Option<f64> {
        match self.mode {
            HurstPathMode::Constant(h) => Some(h.clamp(self.lo, self.hi)),
            _ => None,
        }
    }

    /// Values on the increasing `grid` (constant spacing `step`), clamped to `[lo, hi]`.
    pub fn realize(&self, grid: &[f64], step: f64, seed: u64, index: u64) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match &self.mode {
            HurstPathMode::Constant(h) => vec![*h; grid.len()],
            HurstPathMode::PiecewiseConstant { breaks, values } => {
                grid.iter().map(|&t| piecewise_at(breaks, values, t)).collect()
            }
            HurstPathMode::Linear { start, end } => grid
                .iter()
                .map(|&t| start + (end - start) * t.clamp(0.0, 1.0))
                .collect(),
            HurstPathMode::Smooth(f) => grid.iter().map(|&t| f.eval(t)).collect(),
            HurstPathMode::FractionalOu(p) => fou_path(p, grid.len(), step, seed, index)?,
        };
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Simulation("Hurst function produced a non-finite value".into()));
        }
        Ok(raw.into_iter().map(|h| h.clamp(self.lo, self.hi)).collect())
    }
}

fn validate_piecewise(breaks: &[f64], values: &[f64], ok: impl Fn(f64) -> bool) -> Result<()> {
    if values.len() != breaks.len() + 1 {
        return Err(Error::param("piecewise path needs exactly one more value than break points"));
    }
    if breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("piecewise break points must be strictly increasing"));
    }
    if values.iter().any(|&v| !ok(v)) {
        return Err(Error::param("piecewise path value outside its admissible range"));
    }
    Ok(())
}

fn piecewise_at(breaks: &[f64], values: &[f64], t: f64) -> f64 {
    values[breaks.partition_point(|&b| b <= t)]
}

fn fou_path(p: &FouParams, len: usize, step: f64, seed: u64, index: u64) -> Result<Vec<f64>> {
    if len < 2 {
        return Ok(vec![p.mean; len]);
    }
    let acov: Vec<f64> = (0..len - 1).map(|k| fgn_autocov(k, step, p.driver)).collect();
    let sampler = StationaryGaussian::new(&acov, Method::Auto)?;
    let mut rng = rng_for(seed, Stream::HurstPath, index);
    let noise = sampler.sample(&mut rng);
    let mut y = Vec::with_capacity(len);
    let mut cur = p.mean;
    y.push(cur);
    for dz in noise {
        cur += -p.reversion * (cur - p.mean) * step + p.vol * dz;
        y.push(cur);
    }
    Ok(y)
}

/// Scale function `nu(t) > 0` of the MPRE kernel.
#[derive(Debug, Clone, Serialize)]
pub enum NuPathSpec {
    Constant(f64),
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    Smooth(SmoothFn),
}

impl Default for NuPathSpec {
    fn default() -> Self {
        NuPathSpec::Constant(1.0)
    }
}

impl NuPathSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NuPathSpec::Constant(v) if !(*v > 0.0 && v.is_finite()) => {
                Err(Error::param(format!("nu must be positive, got {v}")))
            }
            NuPathSpec::PiecewiseConstant { breaks, values } => validate_piecewise(breaks, values, |v| v > 0.0),
            _ => Ok(()),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            NuPathSpec::Constant(v) => Some(*v),
            _ => None,
        }
    }

    pub fn realize(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            NuPathSpec::Constant(v) => vec![*v; grid.len()],
            NuPathSpec::PiecewiseConstant { breaks, values } => {
                grid.iter().map(|&t| piecewise_at(breaks, values, t)).collect()
            }
            NuPathSpec::Smooth(f) => grid.iter().map(|&t| f.eval(t)).collect(),
        };
        if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Simulation("nu path must be finite and strictly positive".into()));
        }
        Ok(v)
    }
}
