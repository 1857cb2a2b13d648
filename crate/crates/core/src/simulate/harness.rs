//! Monte-Carlo check of the short-lag increment law of MPRE paths.

use rayon::prelude::*;
use serde::Serialize;

use super::mpre::{brownian_increments, cell_weight, realize_functions, Grid, MpreSpec};
use super::{ProcessSpec, SimulationSpec};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::specfun::{increment_sd, Hurst};

pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Options {
    /// Times `t` at which increments `X(t + h) - X(t)` are probed.
    pub probes: Vec<f64>,
    /// Lags `h`, rounded to whole kernel cells.
    pub lags: Vec<f64>,
}

impl Prop1Options {
    /// Nine probes in `[0.1, 0.9]` and lags of 1, 2, 4, 8, 16 observation steps.
    pub fn default_for(n: usize) -> Self {
        let step = 1.0 / (n.max(2) - 1) as f64;
        Self {
            probes: (1..=9).map(|i| i as f64 / 10.0).collect(),
            lags: [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|k| k * step).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Row {
    pub probe: f64,
    pub lag: f64,
    pub hurst: f64,
    pub nu: f64,
    pub theoretical_sd: f64,
    /// Root mean square of the simulated increments.
    pub measured_sd: f64,
    pub ratio: f64,
    /// Ratio computed from the exact variance of the discretised increment,
    /// free of Monte-Carlo noise. Only defined for deterministic Hurst paths.
    pub exact_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Pooled {
    pub lag: f64,
    /// `sqrt(mean over probes and paths of (increment / theoretical_sd)^2)`.
    pub ratio: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Table {
    pub paths: usize,
    pub rows: Vec<Prop1Row>,
    pub pooled: Vec<Prop1Pooled>,
}

impl Prop1Table {
    /// Pooled ratio at the smallest lag.
    pub fn smallest_lag(&self) -> Option<&Prop1Pooled> {
        self.pooled.iter().min_by(|a, b| a.lag.total_cmp(&b.lag))
    }
}

struct Probe {
    cell: usize,
    lag_cells: usize,
}

/// Increment weights `w_j` with `X(t+h) - X(t) = sum_j w_j dW_j`.
fn increment_weights(grid: &Grid, h: &[f64], nu: &[f64], p: &Probe) -> Vec<f64> {
    let ln_dt = grid.dt.ln();
    let end = p.cell + p.lag_cells;
    (0..end)
        .map(|j| {
            let a = h[j] - 0.5;
            let far = cell_weight(end - j, a, ln_dt);
            let near = if j < p.cell { cell_weight(p.cell - j, a, ln_dt) } else { 0.0 };
            nu[j] * (far - near)
        })
        .collect()
}

/// Monte-Carlo ratio of simulated to theoretical short-lag increment SD.
///
/// Path `i` uses the same derived streams as a single `gen_mpre` call with
/// index `i`, so path 0 coincides with the path returned by `gen_mpre`.
pub fn validate_prop1(spec: &SimulationSpec, paths: usize, opts: &Prop1Options) -> Result<Prop1Table> {
    let ProcessSpec::Mpre(mpre) = &spec.process else {
        return Err(Error::param("increment-law validation needs an MPRE simulation spec"));
    };
    if paths < MIN_PATHS {
        return Err(Error::param(format!("at least {MIN_PATHS} paths are required, got {paths}")));
    }
    let grid = Grid::new(mpre, spec.n)?;
    let probes = probe_layout(&grid, opts)?;
    let deterministic = mpre.hurst.is_deterministic();

    let shared = if deterministic {
        let (h, nu) = realize_functions(mpre, &grid, spec.seed, 0)?;
        let w: Vec<Vec<f64>> = probes.iter().map(|p| increment_weights(&grid, &h, &nu, p)).collect();
        Some((h, nu, w))
    } else {
        None
    };

    // per path: squared increment / theoretical variance, per probe, plus the theoretical sd
    let per_path: Vec<Vec<(f64, f64, f64, f64)>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| path_ratios(mpre, &grid, spec.seed, i, &probes, shared.as_ref()))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(probes.len());
    for (pi, p) in probes.iter().enumerate() {
        let ms = compensated_sum(per_path.iter().map(|v| v[pi].0)) / paths as f64;
        let theo_mean_sq = compensated_sum(per_path.iter().map(|v| v[pi].1 * v[pi].1)) / paths as f64;
        let hurst = compensated_sum(per_path.iter().map(|v| v[pi].2)) / paths as f64;
        let nu = compensated_sum(per_path.iter().map(|v| v[pi].3)) / paths as f64;
        let theoretical_sd = theo_mean_sq.sqrt();
        let exact_ratio = shared.as_ref().map(|(_, _, w)| {
            let var = compensated_sum(w[pi].iter().map(|x| x * x * grid.dt));
            (var.sqrt()) / per_path[0][pi].1
        });
        rows.push(Prop1Row {
            probe: (p.cell - grid.past) as f64 * grid.dt,
            lag: p.lag_cells as f64 * grid.dt,
            hurst,
            nu,
            theoretical_sd,
            measured_sd: ms.sqrt() * theoretical_sd,
            ratio: ms.sqrt(),
            exact_ratio,
        });
    }

    let mut lags: Vec<usize> = probes.iter().map(|p| p.lag_cells).collect();
    lags.sort_unstable();
    lags.dedup();
    let pooled = lags
        .iter()
        .map(|&lc| {
            let idx: Vec<usize> = (0..probes.len()).filter(|&i| probes[i].lag_cells == lc).collect();
            let z2: Vec<f64> = per_path
                .iter()
                .flat_map(|v| idx.iter().map(move |&i| v[i].0))
                .collect();
            let ms = compensated_sum(z2.iter().copied()) / z2.len() as f64;
            let var = compensated_sum(z2.iter().map(|z| (z - ms) * (z - ms))) / (z2.len() - 1) as f64;
            // delta method for sqrt of a mean; ignores correlation across probes
            let se = (var / z2.len() as f64).sqrt() / (2.0 * ms.sqrt());
            Prop1Pooled {
                lag: lc as f64 * grid.dt,
                ratio: ms.sqrt(),
                std_error: se,
            }
        })
        .collect();

    Ok(Prop1Table { paths, rows, pooled })
}

fn probe_layout(grid: &Grid, opts: &Prop1Options) -> Result<Vec<Probe>> {
    if opts.probes.is_empty() || opts.lags.is_empty() {
        return Err(Error::param("probe and lag grids must be non-empty"));
    }
    let mut out = Vec::new();
    for &lag in &opts.lags {
        let lag_cells = (lag / grid.dt).round();
        if !(lag > 0.0 && lag_cells >= 1.0) {
            return Err(Error::param(format!("lag {lag} is shorter than one kernel cell")));
        }
        for &t in &opts.probes {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::param(format!("probe time {t} outside [0, 1]")));
            }
            let cell = grid.past + (t / grid.dt).round() as usize;
            let lag_cells = lag_cells as usize;
            if cell + lag_cells > grid.cells {
                return Err(Error::param(format!("probe {t} plus lag {lag} runs past t = 1")));
            }
            out.push(Probe { cell, lag_cells });
        }
    }
    Ok(out)
}

type Shared = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

fn path_ratios(
    spec: &MpreSpec,
    grid: &Grid,
    seed: u64,
    index: u64,
    probes: &[Probe],
    shared: Option<&Shared>,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let dw = brownian_increments(grid, seed, index);
    let owned: Shared;
    let (h, nu, weights) = match shared {
        Some((h, nu, w)) => (h, nu, w),
        None => {
            let (h, nu) = realize_functions(spec, grid, seed, index)?;
            let w = probes.iter().map(|p| increment_weights(grid, &h, &nu, p)).collect();
            owned = (h, nu, w);
            (&owned.0, &owned.1, &owned.2)
        }
    };
    probes
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            let inc = compensated_sum(w.iter().zip(&dw).map(|(a, b)| a * b));
            let hp = h[p.cell];
            let theo = increment_sd(p.lag_cells as f64 * grid.dt, Hurst::new(hp)?, nu[p.cell]);
            Ok(((inc / theo).powi(2), theo, hp, nu[p.cell]))
        })
        .collect()
}
