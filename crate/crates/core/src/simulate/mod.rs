//! Path generators: fGn/fBm, MPRE, AR(1), IID and INID Gaussian sequences,
//! concatenated fGn, and the Monte-Carlo check of the MPRE increment law.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed.

pub mod fgn;
mod harness;
mod mpre;
mod paths;
pub mod seeds;

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub use harness::{validate_prop1, Prop1Options, Prop1Pooled, Prop1Row, Prop1Table, MIN_PATHS};
pub use mpre::{truncation_loss, MpreSpec};
pub use paths::{FouParams, HurstPathMode, HurstPathSpec, NuPathSpec, SmoothFn};

use crate::error::{Error, Result};
use crate::numeric::sample_sd;
use crate::specfun::{fgn_autocorr, fgn_autocov, Hurst};
use fgn::{Method, StationaryGaussian};
use seeds::{rng_for, Stream};

/// Default volatility blocks of the INID demo sequence.
pub const DEFAULT_INID_SCHEDULE: [f64; 4] = [0.5, 1.5, 0.75, 1.25];
/// Length of each series of the four-panel demo.
pub const DEMO_PANEL_LEN: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub enum ProcessSpec {
    Fbm { h: Hurst },
    Fgn { h: Hurst },
    Mpre(MpreSpec),
    Ar1 { phi: f64 },
    IidGaussian,
    InidGaussian { schedule: Vec<f64> },
    /// `n` counts both segments together and must be even.
    ConcatFgn { h1: Hurst, h2: Hurst },
}

impl ProcessSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessSpec::Fbm { .. } => "fbm",
            ProcessSpec::Fgn { .. } => "fgn",
            ProcessSpec::Mpre(_) => "mpre",
            ProcessSpec::Ar1 { .. } => "ar1",
            ProcessSpec::IidGaussian => "iid",
            ProcessSpec::InidGaussian { .. } => "inid",
            ProcessSpec::ConcatFgn { .. } => "concat",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSpec {
    pub process: ProcessSpec,
    /// Number of grid points `n >= 2`.
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleKind {
    /// Process levels at `t_k = k/(n-1)`, `k = 0..n`.
    Levels,
    /// Increments over `(t_{k-1}, t_k]`, stamped at the right end point.
    Increments,
    /// A discrete-time sequence of `n` values stamped at `k/(n-1)`.
    Sequence,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SampleKind,
    pub spec: SimulationSpec,
}

impl PathSample {
    fn new(values: Vec<f64>, kind: SampleKind, spec: SimulationSpec) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Simulation(format!("{} path contains non-finite values", spec.process.name())));
        }
        let len = values.len();
        let times = match kind {
            SampleKind::Increments => (1..=len).map(|k| k as f64 / len as f64).collect(),
            _ => (0..len).map(|k| k as f64 / (len - 1).max(1) as f64).collect(),
        };
        Ok(Self {
            times,
            values,
            kind,
            spec,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `index,time,value` rows with round-trip precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "time", "value"])?;
        for (i, (t, v)) in self.times.iter().zip(&self.values).enumerate() {
            w.write_record([i.to_string(), t.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    /// Values as increments: differences for levels, unchanged otherwise.
    pub fn increments(&self) -> Vec<f64> {
        match self.kind {
            SampleKind::Levels => self.values.windows(2).map(|w| w[1] - w[0]).collect(),
            _ => self.values.clone(),
        }
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param(format!("path length n must be at least 2, got {n}")));
    }
    Ok(())
}

fn fgn_values(len: usize, acov: impl Fn(usize) -> f64, seed: u64, stream: Stream, index: u64) -> Result<Vec<f64>> {
    let acov: Vec<f64> = (0..len).map(acov).collect();
    let sampler = StationaryGaussian::new(&acov, Method::Auto)?;
    Ok(sampler.sample(&mut rng_for(seed, stream, index)))
}

/// `n - 1` fGn increments of the Gamma-normalised fBm on `[0, 1]` with step `1/(n-1)`.
pub fn gen_fgn(n: usize, h: Hurst, seed: u64) -> Result<PathSample> {
    check_len(n)?;
    let step = 1.0 / (n - 1) as f64;
    let v = fgn_values(n - 1, |k| fgn_autocov(k, step, h), seed, Stream::Noise, 0)?;
    PathSample::new(v, SampleKind::Increments, SimulationSpec { process: ProcessSpec::Fgn { h }, n, seed })
}

/// fBm levels at `k/(n-1)`, the cumulative sum of [`gen_fgn`] from zero.
pub fn gen_fbm(n: usize, h: Hurst, seed: u64) -> Result<PathSample> {
    let inc = gen_fgn(n, h, seed)?;
    let mut levels = Vec::with_capacity(n);
    let mut acc = 0.0;
    levels.push(acc);
    for x in inc.values {
        acc += x;
        levels.push(acc);
    }
    PathSample::new(levels, SampleKind::Levels, SimulationSpec { process: ProcessSpec::Fbm { h }, n, seed })
}

/// MPRE levels at `k/(n-1)`; see [`MpreSpec`] for the discretisation.
pub fn gen_mpre(spec: &MpreSpec, n: usize, seed: u64) -> Result<PathSample> {
    check_len(n)?;
    let v = mpre::mpre_levels(spec, n, seed)?;
    PathSample::new(
        v,
        SampleKind::Levels,
        SimulationSpec {
            process: ProcessSpec::Mpre(spec.clone()),
            n,
            seed,
        },
    )
}

/// Stationary AR(1) with unit marginal variance.
pub fn gen_ar1(phi: f64, n: usize, seed: u64) -> Result<PathSample> {
    check_len(n)?;
    if !(phi.abs() < 1.0) {
        return Err(Error::param(format!("AR(1) coefficient must satisfy |phi| < 1, got {phi}")));
    }
    let mut rng = rng_for(seed, Stream::Noise, 0);
    let innov = (1.0 - phi * phi).sqrt();
    let mut x: f64 = rng.sample(StandardNormal);
    let mut v = Vec::with_capacity(n);
    v.push(x);
    for _ in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        x = phi * x + innov * z;
        v.push(x);
    }
    PathSample::new(v, SampleKind::Sequence, SimulationSpec { process: ProcessSpec::Ar1 { phi }, n, seed })
}

pub fn gen_iid(n: usize, seed: u64) -> Result<PathSample> {
    check_len(n)?;
    let mut rng = rng_for(seed, Stream::Noise, 0);
    let v = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    PathSample::new(v, SampleKind::Sequence, SimulationSpec { process: ProcessSpec::IidGaussian, n, seed })
}

/// Independent Gaussians whose SD follows `schedule` over equal blocks,
/// scaled so the pooled variance is one.
pub fn gen_inid(schedule: &[f64], n: usize, seed: u64) -> Result<PathSample> {
    check_len(n)?;
    if schedule.is_empty() || schedule.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::param("volatility schedule must be non-empty and strictly positive"));
    }
    let rms = (schedule.iter().map(|s| s * s).sum::<f64>() / schedule.len() as f64).sqrt();
    let blocks = schedule.len();
    let mut rng = rng_for(seed, Stream::Noise, 0);
    let v = (0..n)
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            z * schedule[i * blocks / n] / rms
        })
        .collect();
    PathSample::new(
        v,
        SampleKind::Sequence,
        SimulationSpec {
            process: ProcessSpec::InidGaussian {
                schedule: schedule.to_vec(),
            },
            n,
            seed,
        },
    )
}

/// Unit-variance fGn(h1) followed by unit-variance fGn(h2), `n_half` values each.
pub fn gen_concat_fgn(h1: Hurst, h2: Hurst, n_half: usize, seed: u64) -> Result<PathSample> {
    if n_half < 2 {
        return Err(Error::param(format!("segment length must be at least 2, got {n_half}")));
    }
    let mut v = fgn_values(n_half, |k| fgn_autocorr(k, h1), seed, Stream::Segment, 0)?;
    v.extend(fgn_values(n_half, |k| fgn_autocorr(k, h2), seed, Stream::Segment, 1)?);
    PathSample::new(
        v,
        SampleKind::Increments,
        SimulationSpec {
            process: ProcessSpec::ConcatFgn { h1, h2 },
            n: 2 * n_half,
            seed,
        },
    )
}

/// IID, INID, AR(1) with phi = 0.9 and AR(1) with phi = -0.9, each rescaled to
/// sample SD exactly one.
pub fn gen_demo_panel(seed: u64) -> Result<[PathSample; 4]> {
    gen_demo_panel_with_len(DEMO_PANEL_LEN, seed)
}

pub fn gen_demo_panel_with_len(n: usize, seed: u64) -> Result<[PathSample; 4]> {
    let panels = [
        gen_iid(n, seeds::derive_seed(seed, Stream::Segment, 0))?,
        gen_inid(&DEFAULT_INID_SCHEDULE, n, seeds::derive_seed(seed, Stream::Segment, 1))?,
        gen_ar1(0.9, n, seeds::derive_seed(seed, Stream::Segment, 2))?,
        gen_ar1(-0.9, n, seeds::derive_seed(seed, Stream::Segment, 3))?,
    ];
    Ok(panels.map(|mut p| {
        let sd = sample_sd(&p.values);
        p.values.iter_mut().for_each(|x| *x /= sd);
        p
    }))
}

/// Dispatches on the process kind.
pub fn simulate(spec: &SimulationSpec) -> Result<PathSample> {
    let (n, seed) = (spec.n, spec.seed);
    match &spec.process {
        ProcessSpec::Fbm { h } => gen_fbm(n, *h, seed),
        ProcessSpec::Fgn { h } => gen_fgn(n, *h, seed),
        ProcessSpec::Mpre(m) => gen_mpre(m, n, seed),
        ProcessSpec::Ar1 { phi } => gen_ar1(*phi, n, seed),
        ProcessSpec::IidGaussian => gen_iid(n, seed),
        ProcessSpec::InidGaussian { schedule } => gen_inid(schedule, n, seed),
        ProcessSpec::ConcatFgn { h1, h2 } => {
            if n < 4 || n % 2 != 0 {
                return Err(Error::param(format!("concatenated fGn needs an even n >= 4, got {n}")));
            }
            gen_concat_fgn(*h1, *h2, n / 2, seed)
        }
    }
}
