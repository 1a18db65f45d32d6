//! SDE problems `dX = a(t, X) dt + sigma(t) dW` with `W` a sequence of
//! independent scalar Brownian motions and a time-only diffusion.
//!
//! A problem carries its drift, the diffusion coordinates `sigma_k(t)`
//! (indexed from 1), an explicit coordinate cap, and a [`DecayProfile`]
//! bounding the l2 tail of the diffusion.

mod benchmark;
mod decay;

pub use benchmark::{
    benchmark_problem, benchmark_problem_with, exp_integral_e1, gamma_constant, GammaEstimate,
};
pub use decay::{check_admissible, AdmissibilityReport, DecayProfile, TruncationRule};

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SdeError};

pub type DriftFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type CoordFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Zero,
    Coordinates {
        sigma: CoordFn,
        cap: usize,
    },
    /// `sigma_k(t) = g(t) * w_k`; keeps prefix sums of `w_k^2`.
    Separable {
        time_factor: TimeFn,
        weights: Arc<[f64]>,
        weight_sq_prefix: Arc<[f64]>,
    },
}

/// Diffusion coefficient `t -> (sigma_1(t), sigma_2(t), ...)`.
#[derive(Clone)]
pub struct Diffusion(Repr);

impl Diffusion {
    /// `sigma == 0`; any coordinate may be queried.
    pub fn zero() -> Self {
        Diffusion(Repr::Zero)
    }

    /// Coordinates given by a callback `(t, k) -> sigma_k(t)`, `k >= 1`,
    /// valid for `k <= cap`.
    pub fn coordinates<F>(cap: usize, sigma: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        Diffusion(Repr::Coordinates {
            sigma: Arc::new(sigma),
            cap,
        })
    }

    /// Product form `sigma_k(t) = time_factor(t) * weights[k - 1]`; the cap is
    /// `weights.len()`.
    pub fn separable<F>(time_factor: F, weights: Vec<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for w in &weights {
            acc += w * w;
            prefix.push(acc);
        }
        Diffusion(Repr::Separable {
            time_factor: Arc::new(time_factor),
            weights: weights.into(),
            weight_sq_prefix: prefix.into(),
        })
    }

    fn cap(&self) -> usize {
        match &self.0 {
            Repr::Zero => usize::MAX,
            Repr::Coordinates { cap, .. } => *cap,
            Repr::Separable { weights, .. } => weights.len(),
        }
    }
}

/// A scalar SDE with additive, time-dependent, countably dimensional noise.
#[derive(Clone)]
pub struct SdeProblem {
    horizon: f64,
    initial_value: f64,
    drift: DriftFn,
    diffusion: Diffusion,
    norm_truncated: Option<Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>>,
    norm_full: Option<TimeFn>,
    decay: DecayProfile,
}

impl fmt::Debug for SdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeProblem")
            .field("horizon", &self.horizon)
            .field("initial_value", &self.initial_value)
            .field("coord_cap", &self.coord_cap())
            .field("sigma_zero", &self.is_sigma_zero())
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

impl SdeProblem {
    pub fn new<A>(
        horizon: f64,
        initial_value: f64,
        drift: A,
        diffusion: Diffusion,
        decay: DecayProfile,
    ) -> Result<Self>
    where
        A: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SdeError::param(
                "horizon",
                format!("must be positive, got {horizon}"),
            ));
        }
        if !initial_value.is_finite() {
            return Err(SdeError::param("initial_value", "must be finite"));
        }
        if diffusion.cap() == 0 {
            return Err(SdeError::param("coord_cap", "must be at least 1"));
        }
        Ok(Self {
            horizon,
            initial_value,
            drift: Arc::new(drift),
            diffusion,
            norm_truncated: None,
            norm_full: None,
            decay,
        })
    }

    /// Closed-form override for `||sigma^M(t)||`.
    pub fn with_truncated_norm<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        self.norm_truncated = Some(Arc::new(f));
        self
    }

    /// Supplies `||sigma(t)||` over all coordinates.
    pub fn with_full_norm<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.norm_full = Some(Arc::new(f));
        self
    }

    /// Same problem with a different drift.
    pub fn with_drift<A>(mut self, drift: A) -> Self
    where
        A: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.drift = Arc::new(drift);
        self
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn decay(&self) -> &DecayProfile {
        &self.decay
    }

    /// Largest coordinate index that may be evaluated.
    pub fn coord_cap(&self) -> usize {
        self.diffusion.cap()
    }

    pub fn is_sigma_zero(&self) -> bool {
        matches!(self.diffusion.0, Repr::Zero)
    }

    #[inline]
    pub fn drift(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, x)
    }

    fn check_coords(&self, m: usize) -> Result<()> {
        let cap = self.coord_cap();
        if m > cap {
            Err(SdeError::CoordinateCap { index: m, cap })
        } else {
            Ok(())
        }
    }

    /// `sigma_k(t)` for `k >= 1`.
    pub fn diffusion_coord(&self, t: f64, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(SdeError::param("k", "coordinates are indexed from 1"));
        }
        self.check_coords(k)?;
        Ok(match &self.diffusion.0 {
            Repr::Zero => 0.0,
            Repr::Coordinates { sigma, .. } => sigma(t, k),
            Repr::Separable {
                time_factor,
                weights,
                ..
            } => time_factor(t) * weights[k - 1],
        })
    }

    /// `||sigma^M(t)||_{l2}`: the closed-form override when supplied,
    /// otherwise direct summation over `k = 1..=M`.
    pub fn diffusion_norm_truncated(&self, t: f64, m: usize) -> Result<f64> {
        self.check_coords(m)?;
        if let Some(f) = &self.norm_truncated {
            return Ok(f(t, m));
        }
        Ok(self.direct_norm(t, m))
    }

    /// Direct summation of `sigma_k(t)^2`, ignoring any override.
    pub fn diffusion_norm_summed(&self, t: f64, m: usize) -> Result<f64> {
        self.check_coords(m)?;
        Ok(self.direct_norm(t, m))
    }

    fn direct_norm(&self, t: f64, m: usize) -> f64 {
        match &self.diffusion.0 {
            Repr::Zero => 0.0,
            Repr::Coordinates { sigma, .. } => {
                (1..=m).map(|k| sigma(t, k).powi(2)).sum::<f64>().sqrt()
            }
            Repr::Separable {
                time_factor,
                weight_sq_prefix,
                ..
            } => time_factor(t).abs() * weight_sq_prefix[m].sqrt(),
        }
    }

    /// `||sigma(t)||_{l2}` over all coordinates, if known.
    pub fn diffusion_norm_full(&self, t: f64) -> Option<f64> {
        if self.is_sigma_zero() {
            return Some(0.0);
        }
        self.norm_full.as_ref().map(|f| f(t))
    }

    pub fn has_full_norm(&self) -> bool {
        self.is_sigma_zero() || self.norm_full.is_some()
    }

    /// `sum_{k=1..len} sigma_k(t) * dw[k-1]`, accumulated in ascending `k`.
    ///
    /// For a separable diffusion this is `g(t) * sum_k w_k dw_k`.
    #[inline]
    pub fn diffusion_dot(&self, t: f64, dw: &[f64]) -> Result<f64> {
        self.check_coords(dw.len())?;
        Ok(match &self.diffusion.0 {
            Repr::Zero => 0.0,
            Repr::Coordinates { sigma, .. } => {
                let mut acc = 0.0;
                for (i, d) in dw.iter().enumerate() {
                    acc += sigma(t, i + 1) * d;
                }
                acc
            }
            Repr::Separable {
                time_factor,
                weights,
                ..
            } => {
                let mut acc = 0.0;
                for (w, d) in weights.iter().zip(dw) {
                    acc += w * d;
                }
                time_factor(t) * acc
            }
        })
    }
}
