//! Riemann-Ito discretisation of the multifractional process with random exponent
//!
//! ```text
//! X(t) = int_{-T}^{t} nu(s) [(t-s)_+^{H(s)-1/2} - (-s)_+^{H(s)-1/2}] dW(s)
//! ```
//!
//! The kernel is integrated over cells of width `dt = 1/((n-1) m)`. Each cell
//! carries the root-mean-square of the kernel over the cell rather than its
//! value at one end point: for `H < 1/2` the kernel is singular at the
//! evaluation point, and a point rule loses a large share of the short-lag
//! variance.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::paths::{HurstPathSpec, NuPathSpec};
use super::seeds::{rng_for, Stream};
use crate::error::{Error, Result};

/// Above this many distinct Hurst values the FFT route stops paying off.
const MAX_FFT_GROUPS: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct MpreSpec {
    pub hurst: HurstPathSpec,
    pub nu: NuPathSpec,
    /// Kernel truncation horizon `T` on the normalised time scale.
    pub truncation: f64,
    /// Kernel cells per observation step.
    pub substeps: usize,
}

impl MpreSpec {
    pub const DEFAULT_TRUNCATION: f64 = 10.0;
    pub const DEFAULT_SUBSTEPS: usize = 4;

    pub fn new(hurst: HurstPathSpec, nu: NuPathSpec) -> Self {
        Self {
            hurst,
            nu,
            truncation: Self::DEFAULT_TRUNCATION,
            substeps: Self::DEFAULT_SUBSTEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.truncation > 0.0 && self.truncation.is_finite()) {
            return Err(Error::param(format!("truncation must be positive, got {}", self.truncation)));
        }
        if self.substeps < 1 {
            return Err(Error::param("substeps must be at least 1"));
        }
        self.hurst.validate()?;
        self.nu.validate()
    }
}

/// Cell layout of the discretised kernel for `n` observation points.
///
/// Cell `j` covers `[s_j, s_j + dt)` with `s_j = (j - past) dt`; observation
/// `k` sits at cell boundary `past + k m`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Grid {
    pub n: usize,
    pub m: usize,
    pub dt: f64,
    pub past: usize,
    pub cells: usize,
}

impl Grid {
    pub fn new(spec: &MpreSpec, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("path length must be at least 2, got {n}")));
        }
        spec.validate()?;
        let m = spec.substeps;
        let steps = (n - 1) * m;
        let dt = 1.0 / steps as f64;
        let past = (spec.truncation / dt).round().max(1.0) as usize;
        Ok(Self {
            n,
            m,
            dt,
            past,
            cells: past + steps,
        })
    }

    pub fn cell_times(&self) -> Vec<f64> {
        (0..self.cells)
            .map(|j| (j as f64 - self.past as f64) * self.dt)
            .collect()
    }

    pub fn obs_cell(&self, k: usize) -> usize {
        self.past + k * self.m
    }
}

/// RMS kernel weight of a cell whose left edge lies `d >= 1` cells before the
/// evaluation point, for exponent `a = H - 1/2`.
pub(crate) fn cell_weight(d: usize, a: f64, ln_dt: f64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let e = 2.0 * a + 1.0;
    let d = d as f64;
    // d^e - (d-1)^e without cancellation for large d
    let diff = if d == 1.0 { 1.0 } else { -d.powf(e) * (e * (-1.0 / d).ln_1p()).exp_m1() };
    (a * ln_dt).exp() * (diff / e).sqrt()
}

/// Realised Hurst and scale values on the cell grid for path `index`.
pub(crate) fn realize_functions(spec: &MpreSpec, grid: &Grid, seed: u64, index: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let times = grid.cell_times();
    let h = spec.hurst.realize(&times, grid.dt, seed, index)?;
    let nu = spec.nu.realize(&times)?;
    Ok((h, nu))
}

/// Driving Brownian increments of path `index`.
pub(crate) fn brownian_increments(grid: &Grid, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, Stream::Noise, index);
    let sd = grid.dt.sqrt();
    (0..grid.cells)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Levels `X(t_k)`, `k = 0..n`, of one MPRE path.
pub(crate) fn mpre_levels(spec: &MpreSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    let grid = Grid::new(spec, n)?;
    let (h, nu) = realize_functions(spec, &grid, seed, 0)?;
    let dw = brownian_increments(&grid, seed, 0);
    let u: Vec<f64> = nu.iter().zip(&dw).map(|(v, w)| v * w).collect();

    let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
    for (j, hj) in h.iter().enumerate() {
        groups.entry(hj.to_bits()).or_default().push(j);
        if groups.len() > MAX_FFT_GROUPS {
            break;
        }
    }
    let y = if groups.len() <= MAX_FFT_GROUPS {
        let mut keys: Vec<u64> = groups.keys().copied().collect();
        keys.sort_unstable();
        convolve_groups(&grid, &u, &h, &keys)
    } else {
        direct_sums(&grid, &u, &h)
    };
    let base = y[0];
    let levels: Vec<f64> = y.iter().map(|v| v - base).collect();
    if levels.iter().any(|v| !v.is_finite()) {
        return Err(Error::Simulation("MPRE path contains non-finite values".into()));
    }
    Ok(levels)
}

/// `Y(q_k) = sum_{j < q_k} u_j R_j(q_k - j)` for every observation `k`, one
/// FFT convolution per distinct Hurst value.
fn convolve_groups(grid: &Grid, u: &[f64], h: &[f64], keys: &[u64]) -> Vec<f64> {
    let len = (2 * grid.cells + 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let ln_dt = grid.dt.ln();
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    for &key in keys {
        let hg = f64::from_bits(key);
        let a = hg - 0.5;
        let mut ug = vec![Complex64::new(0.0, 0.0); len];
        for (j, (&uj, &hj)) in u.iter().zip(h).enumerate() {
            if hj.to_bits() == key {
                ug[j].re = uj;
            }
        }
        let mut kg = vec![Complex64::new(0.0, 0.0); len];
        for (d, slot) in kg.iter_mut().enumerate().take(grid.cells + 1).skip(1) {
            slot.re = cell_weight(d, a, ln_dt);
        }
        fwd.process(&mut ug);
        fwd.process(&mut kg);
        for ((s, x), y) in acc.iter_mut().zip(&ug).zip(&kg) {
            *s += x * y;
        }
    }
    inv.process(&mut acc);
    let scale = 1.0 / len as f64;
    (0..grid.n).map(|k| acc[grid.obs_cell(k)].re * scale).collect()
}

/// Same sums evaluated term by term, for Hurst functions with many values.
fn direct_sums(grid: &Grid, u: &[f64], h: &[f64]) -> Vec<f64> {
    let ln_dt = grid.dt.ln();
    // per-cell factors: u_j dt^{a_j} / sqrt(e_j), exponent e_j
    let coef: Vec<(f64, f64)> = u
        .iter()
        .zip(h)
        .map(|(&uj, &hj)| {
            let a = hj - 0.5;
            let e = 2.0 * a + 1.0;
            (uj * (a * ln_dt).exp() / e.sqrt(), e)
        })
        .collect();
    let ln_d: Arc<Vec<f64>> = Arc::new((0..=grid.cells).map(|d| (d as f64).ln()).collect());
    let ln1p_inv: Arc<Vec<f64>> = Arc::new(
        (0..=grid.cells)
            .map(|d| if d < 2 { 0.0 } else { (-1.0 / d as f64).ln_1p() })
            .collect(),
    );
    (0..grid.n)
        .into_par_iter()
        .map(|k| {
            let q = grid.obs_cell(k);
            let terms = (0..q).map(|j| {
                let d = q - j;
                let (c, e) = coef[j];
                if d == 1 {
                    c
                } else {
                    c * (0.5 * e * ln_d[d]).exp() * (-(e * ln1p_inv[d]).exp_m1()).sqrt()
                }
            });
            crate::numeric::compensated_sum(terms)
        })
        .collect()
}

/// Fraction of the stationary increment variance lost by truncating the
/// kernel at `-T`, for constant `H` and lag `lag` (exact continuous kernel).
pub fn truncation_loss(h: f64, lag: f64, truncation: f64) -> Result<f64> {
    use crate::quadrature::{integrate, QuadOptions};
    if !(h > 0.0 && h < 1.0 && lag > 0.0 && truncation > 0.0) {
        return Err(Error::param("truncation_loss needs H in (0, 1) and positive lag and horizon"));
    }
    let a = h - 0.5;
    // squared increment kernel at distance u before the earlier point
    let f = |u: f64| {
        let k = u.powf(a) * (a * (lag / u).ln_1p()).exp_m1();
        k * k
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-9,
        max_intervals: 20_000,
    };
    let near = lag.powf(2.0 * h) / (2.0 * h);
    let head = integrate(f, 0.0, truncation, opts)?.value;
    // tail in the log variable u = T e^s up to s = S, then the leading asymptotic
    // a^2 lag^2 u^{2a-2} beyond
    const S: f64 = 60.0;
    let tail = integrate(|s| {
        let u = truncation * s.exp();
        f(u) * u
    }, 0.0, S, opts)?
    .value
        + a * a * lag * lag * (truncation * S.exp()).powf(2.0 * a - 1.0) / (1.0 - 2.0 * a);
    Ok(tail / (near + head + tail))
}
