//! Exact simulation of stationary Gaussian sequences (fGn in particular).
//!
//! Circulant embedding is the default; a Cholesky factorisation of the Toeplitz
//! covariance is used when the embedding spectrum has materially negative
//! entries.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Eigenvalues below `-NEGATIVE_TOL * max_eigenvalue` reject the embedding.
const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Circulant embedding, falling back to Cholesky if the embedding is not PSD.
    Auto,
    Circulant,
    Cholesky,
}

/// Pre-factorised sampler for a zero-mean stationary Gaussian sequence with a
/// given autocovariance.
#[derive(Debug, Clone)]
pub struct StationaryGaussian {
    len: usize,
    inner: Sampler,
}

#[derive(Clone)]
enum Sampler {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Option<Arc<dyn Fft<f64>>>,
    },
    Cholesky {
        lower: DMatrix<f64>,
    },
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Circulant { sqrt_eig, .. } => f
                .debug_struct("Circulant")
                .field("size", &sqrt_eig.len())
                .finish(),
            Sampler::Cholesky { lower } => f.debug_struct("Cholesky").field("size", &lower.nrows()).finish(),
        }
    }
}

impl StationaryGaussian {
    /// `autocov[k]` is the covariance at lag `k`, for `k = 0..len`.
    pub fn new(autocov: &[f64], method: Method) -> Result<Self> {
        let len = autocov.len();
        if len == 0 {
            return Err(Error::param("sequence length must be positive"));
        }
        match method {
            Method::Circulant => Self::circulant(autocov)?.ok_or_else(|| {
                Error::Simulation("circulant embedding has negative eigenvalues".into())
            }),
            Method::Cholesky => Self::cholesky(autocov),
            Method::Auto => match Self::circulant(autocov)? {
                Some(s) => Ok(s),
                None => Self::cholesky(autocov),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn uses_circulant(&self) -> bool {
        matches!(self.inner, Sampler::Circulant { .. })
    }

    fn circulant(autocov: &[f64]) -> Result<Option<Self>> {
        let len = autocov.len();
        if len == 1 {
            return Ok(Some(Self {
                len,
                inner: Sampler::Circulant {
                    sqrt_eig: vec![autocov[0].max(0.0).sqrt()],
                    fft: None,
                },
            }));
        }
        // first row of the circulant: c_0 .. c_{len-1}, c_{len-2} .. c_1
        let m = 2 * (len - 1);
        let mut row: Vec<Complex64> = Vec::with_capacity(m);
        row.extend(autocov.iter().map(|&c| Complex64::new(c, 0.0)));
        row.extend(autocov[1..len - 1].iter().rev().map(|&c| Complex64::new(c, 0.0)));
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let max_eig = row.iter().map(|z| z.re).fold(0.0_f64, f64::max);
        if row.iter().any(|z| z.re < -NEGATIVE_TOL * max_eig.max(f64::MIN_POSITIVE)) {
            return Ok(None);
        }
        let scale = 1.0 / m as f64;
        let sqrt_eig = row.iter().map(|z| (z.re.max(0.0) * scale).sqrt()).collect();
        Ok(Some(Self {
            len,
            inner: Sampler::Circulant {
                sqrt_eig,
                fft: Some(fft),
            },
        }))
    }

    fn cholesky(autocov: &[f64]) -> Result<Self> {
        let len = autocov.len();
        let cov = DMatrix::from_fn(len, len, |i, j| autocov[i.abs_diff(j)]);
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Simulation("covariance matrix is not positive definite".into()))?;
        Ok(Self {
            len,
            inner: Sampler::Cholesky { lower: chol.l() },
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.inner {
            Sampler::Circulant { sqrt_eig, fft: None } => {
                vec![sqrt_eig[0] * rng.sample::<f64, _>(StandardNormal)]
            }
            Sampler::Circulant {
                sqrt_eig,
                fft: Some(fft),
            } => {
                let mut w: Vec<Complex64> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut w);
                w.iter().take(self.len).map(|z| z.re).collect()
            }
            Sampler::Cholesky { lower } => {
                let z = DVector::from_fn(self.len, |_, _| rng.sample::<f64, _>(StandardNormal));
                (lower * z).iter().copied().collect()
            }
        }
    }
}
