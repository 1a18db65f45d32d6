use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, SdeError};

type DeltaFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    /// `delta(k) = k^(-exponent)`
    Power(f64),
    Custom(DeltaFn),
}

/// Bound on the l2 tail of the diffusion coefficient:
/// `||sigma(t) - P_k sigma(t)|| <= c2 * delta(k)`.
///
/// `delta` must be strictly decreasing and vanish at infinity.
#[derive(Clone)]
pub struct DecayProfile {
    shape: Shape,
    c2: f64,
}

impl fmt::Debug for DecayProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("DecayProfile");
        match &self.shape {
            Shape::Power(q) => s.field("power_exponent", q),
            Shape::Custom(_) => s.field("delta", &"<callback>"),
        };
        s.field("c2", &self.c2).finish()
    }
}

impl DecayProfile {
    /// Power-law decay `delta(k) = k^(-exponent)`.
    pub fn power(exponent: f64, c2: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(SdeError::param(
                "exponent",
                format!("must be positive, got {exponent}"),
            ));
        }
        Self::check_c2(c2)?;
        Ok(Self {
            shape: Shape::Power(exponent),
            c2,
        })
    }

    /// Arbitrary monotone decay given as a callback on positive integers.
    pub fn custom<F>(c2: f64, delta: F) -> Result<Self>
    where
        F: Fn(u64) -> f64 + Send + Sync + 'static,
    {
        Self::check_c2(c2)?;
        Ok(Self {
            shape: Shape::Custom(Arc::new(delta)),
            c2,
        })
    }

    fn check_c2(c2: f64) -> Result<()> {
        if c2 > 0.0 && c2.is_finite() {
            Ok(())
        } else {
            Err(SdeError::param("c2", format!("must be positive, got {c2}")))
        }
    }

    pub fn delta(&self, k: u64) -> f64 {
        match &self.shape {
            Shape::Power(q) => (k as f64).powf(-q),
            Shape::Custom(f) => f(k),
        }
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Exponent `q` of a power-law profile `k^(-q)`, if this is one.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.shape {
            Shape::Power(q) => Some(q),
            Shape::Custom(_) => None,
        }
    }

    /// `sup_k delta(k)`, attained at `k = 1` for a decreasing profile.
    pub fn sup(&self) -> f64 {
        self.delta(1)
    }

    /// Generalised inverse `sup { n : delta(n) > eps }`, or 0 when `delta(1) <= eps`.
    ///
    /// Doubling search for an upper bracket followed by bisection, so the
    /// result is exact for any monotone profile. Saturates at `2^62` for
    /// profiles that have not dropped below `eps` by then.
    pub fn inverse(&self, eps: f64) -> Result<u64> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(SdeError::param(
                "eps",
                format!("must be positive, got {eps}"),
            ));
        }
        if self.delta(1) <= eps {
            return Ok(0);
        }
        const LIMIT: u64 = 1 << 62;
        // invariant: delta(lo) > eps, delta(hi) <= eps
        let mut lo = 1u64;
        let mut hi = 2u64;
        while self.delta(hi) > eps {
            if hi >= LIMIT {
                return Ok(LIMIT);
            }
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.delta(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// Truncation levels `M_n` growing fast enough that `n^(1/2) delta(M_n) -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationRule {
    pub margin: f64,
    pub scale: f64,
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self {
            margin: 0.03,
            scale: 0.15,
        }
    }
}

impl TruncationRule {
    pub fn new(margin: f64, scale: f64) -> Result<Self> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(SdeError::param(
                "margin",
                format!("must be positive, got {margin}"),
            ));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(SdeError::param(
                "scale",
                format!("must be positive, got {scale}"),
            ));
        }
        Ok(Self { margin, scale })
    }

    /// Growth exponent of `M_n` for a power profile `k^(-q)`: `1/(2q) + margin`.
    ///
    /// With `q = p - 1/2` this is `1/(2p - 1) + margin`.
    pub fn power_growth(&self, q: f64) -> f64 {
        1.0 / (2.0 * q) + self.margin
    }

    /// `M_n` for the given profile. Rounds down and clamps at 1.
    pub fn level(&self, profile: &DecayProfile, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(SdeError::param("n", "must be at least 1"));
        }
        let raw = match profile.power_exponent() {
            Some(q) => self.scale * (n as f64).powf(self.power_growth(q)),
            None => {
                let eps = (n as f64).powf(-0.5 - self.margin);
                self.scale * profile.inverse(eps)? as f64
            }
        };
        Ok((raw.floor() as u64).max(1))
    }
}

/// Numeric proxy for membership of a truncation sequence in the admissible set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub n: Vec<u64>,
    pub levels: Vec<u64>,
    /// `n^(1/2) * delta(M_n)` per grid point.
    pub proxies: Vec<f64>,
    pub monotone: bool,
    /// Proxies strictly decrease over the upper half of the grid.
    pub proxy_decreasing: bool,
    pub admissible: bool,
}

/// Checks a sampled sequence `(n, M_n)` for monotonicity and a decaying
/// `n^(1/2) delta(M_n)`.
pub fn check_admissible(
    profile: &DecayProfile,
    samples: &[(u64, u64)],
) -> Result<AdmissibilityReport> {
    if samples.len() < 4 {
        return Err(SdeError::param("samples", "need at least 4 grid points"));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(SdeError::param(
            "samples",
            "n grid must be strictly increasing",
        ));
    }
    let n: Vec<u64> = samples.iter().map(|s| s.0).collect();
    let levels: Vec<u64> = samples.iter().map(|s| s.1).collect();
    let proxies: Vec<f64> = samples
        .iter()
        .map(|&(n, m)| (n as f64).sqrt() * profile.delta(m.max(1)))
        .collect();
    let monotone = levels.windows(2).all(|w| w[1] >= w[0]);
    let top = &proxies[proxies.len() / 2..];
    let proxy_decreasing = top.windows(2).all(|w| w[1] < w[0]);
    Ok(AdmissibilityReport {
        n,
        levels,
        proxies,
        monotone,
        proxy_decreasing,
        admissible: monotone && proxy_decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_matches_scan() {
        let d = DecayProfile::power(0.4, 1.0).unwrap();
        let scan = (1..=400u64).filter(|&k| d.delta(k) > 0.1).max().unwrap();
        assert_eq!(scan, 316);
        assert_eq!(d.inverse(0.1).unwrap(), 316);
        assert_eq!(d.inverse(1.0).unwrap(), 0);
        assert_eq!(d.inverse(5.0).unwrap(), 0);
    }

    #[test]
    fn inverse_harmonic() {
        let d = DecayProfile::custom(1.0, |k| 1.0 / k as f64).unwrap();
        assert_eq!(d.inverse(0.25).unwrap(), 3);
        assert!(d.inverse(0.0).is_err());
    }

    #[test]
    fn truncation_exponent_for_p09() {
        let rule = TruncationRule::default();
        let q = 0.9 - 0.5;
        assert!((rule.power_growth(q) - 1.28).abs() < 1e-12);
    }

    #[test]
    fn truncation_floor_and_errors() {
        let d = DecayProfile::custom(1.0, |k| 1.0 / k as f64).unwrap();
        let rule = TruncationRule::new(0.1, 1.0).unwrap();
        assert!(rule.level(&d, 1).unwrap() >= 1);
        assert!(TruncationRule::new(0.03, 0.0).is_err());
        assert!(TruncationRule::new(0.03, -1.0).is_err());
    }

    #[test]
    fn generic_levels_nondecreasing() {
        let d = DecayProfile::custom(1.0, |k| (k as f64).powf(-0.7)).unwrap();
        let rule = TruncationRule::default();
        let levels: Vec<u64> = (1..300).map(|n| rule.level(&d, n).unwrap()).collect();
        assert!(levels.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn admissibility_examples() {
        let d = DecayProfile::custom(1.0, |k| 1.0 / k as f64).unwrap();
        let grid = [10u64, 20, 40, 80, 160];
        let squared: Vec<_> = grid.iter().map(|&n| (n, n * n)).collect();
        assert!(check_admissible(&d, &squared).unwrap().admissible);

        let constant: Vec<_> = grid.iter().map(|&n| (n, 5)).collect();
        let r = check_admissible(&d, &constant).unwrap();
        assert!(r.monotone);
        assert!(!r.admissible);

        let shrinking: Vec<_> = grid.iter().map(|&n| (n, 1000 - n)).collect();
        assert!(!check_admissible(&d, &shrinking).unwrap().monotone);

        assert!(check_admissible(&d, &squared[..3]).is_err());
    }
}
