//! Distribution of the accumulated sensing energy.
//!
//! With `n` complex samples of circularly symmetric Gaussian noise (plus a
//! Gaussian primary signal when the primary is busy), the energy statistic is
//! Gamma(n, N₀) when the primary is idle and Gamma(n, N₀ + g₁P_p) when it is
//! busy. Everything here works with log densities; Γ(n) for `n` in the tens of
//! thousands is far outside `f64` range.

pub mod gamma;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scenario::Scenario;

pub use gamma::{gamma_quantile, ln_gamma, reg_gamma_pair, reg_lower_gamma, reg_upper_gamma};

/// Primary-user state during a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Primary idle.
    H0,
    /// Primary busy.
    H1,
}

impl Hypothesis {
    pub fn index(self) -> usize {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

/// Gamma laws of the energy statistic under both hypotheses, sharing the shape `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDistribution {
    shape: u64,
    scale0: f64,
    scale1: f64,
    ln_gamma_shape: f64,
}

impl EnergyDistribution {
    pub fn new(shape: u64, scale0: f64, scale1: f64) -> Result<Self> {
        if shape == 0 {
            return Err(Error::Domain("energy distribution needs at least one sample".into()));
        }
        if !(scale0 > 0.0 && scale0.is_finite() && scale1 >= scale0 && scale1.is_finite()) {
            return Err(Error::Domain(format!(
                "scales must satisfy scale1 >= scale0 > 0, got {scale0} and {scale1}"
            )));
        }
        Ok(EnergyDistribution {
            shape,
            scale0,
            scale1,
            ln_gamma_shape: ln_gamma(shape as f64),
        })
    }

    /// Distribution of the statistic after `n` sensing samples in scenario `s`.
    pub fn for_scenario(s: &Scenario, n: u64) -> Result<Self> {
        Self::new(n, s.n0, s.busy_sensing_scale())
    }

    pub fn shape(&self) -> u64 {
        self.shape
    }

    pub fn scale(&self, hyp: Hypothesis) -> f64 {
        match hyp {
            Hypothesis::H0 => self.scale0,
            Hypothesis::H1 => self.scale1,
        }
    }

    /// ln f(x | hyp).
    pub fn log_pdf(&self, x: f64, hyp: Hypothesis) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("energy must be > 0, got {x}")));
        }
        let n = self.shape as f64;
        let scale = self.scale(hyp);
        Ok((n - 1.0) * x.ln() - x / scale - self.ln_gamma_shape - n * scale.ln())
    }

    /// Slope of the log-likelihood ratio in x: g₁P_p / (N₀(N₀ + g₁P_p)).
    pub fn llr_slope(&self) -> f64 {
        1.0 / self.scale0 - 1.0 / self.scale1
    }

    /// Limit of the log-likelihood ratio as x → 0⁺: n ln(N₀ / (N₀ + g₁P_p)).
    pub fn llr_intercept(&self) -> f64 {
        self.shape as f64 * (self.scale0 / self.scale1).ln()
    }

    /// ln[f(x | H1) / f(x | H0)], strictly increasing in x whenever g₁P_p > 0.
    pub fn log_likelihood_ratio(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("energy must be > 0, got {x}")));
        }
        Ok(self.llr_unchecked(x))
    }

    #[inline]
    pub(crate) fn llr_unchecked(&self, x: f64) -> f64 {
        x * self.llr_slope() + self.llr_intercept()
    }

    /// `(P, Q)` of the statistic at `x` under `hyp`.
    pub fn cdf_pair(&self, x: f64, hyp: Hypothesis) -> Result<(f64, f64)> {
        reg_gamma_pair(self.shape as f64, x / self.scale(hyp))
    }

    /// Energy below which the statistic falls with probability `lower` under `hyp`.
    pub fn quantile(&self, hyp: Hypothesis, lower: f64) -> Result<f64> {
        Ok(self.scale(hyp) * gamma_quantile(self.shape as f64, lower)?)
    }

    /// Threshold ρ with Pr(x > ρ | H1) = `target_pd`.
    pub fn detection_threshold(&self, target_pd: f64) -> Result<f64> {
        if !(target_pd > 0.0 && target_pd < 1.0) {
            return Err(Error::range("target_pd", format!("must lie in (0, 1), got {target_pd}")));
        }
        self.quantile(Hypothesis::H1, 1.0 - target_pd)
    }

    /// Probability of each interval of `part` under both hypotheses.
    pub fn interval_probs(&self, part: &Partition) -> Result<IntervalProbs> {
        let mut rows = Vec::with_capacity(part.m());
        for hyp_bounds in part.thresholds().windows(2) {
            let (lo, hi) = (hyp_bounds[0], hyp_bounds[1]);
            let mut row = [0.0; 2];
            if hi > lo {
                for hyp in [Hypothesis::H0, Hypothesis::H1] {
                    let (p_lo, q_lo) = self.cdf_pair(lo, hyp)?;
                    let (p_hi, q_hi) = self.cdf_pair(hi, hyp)?;
                    // difference on the side where both values are small
                    let p = if p_hi <= 0.5 { p_hi - p_lo } else if q_lo <= 0.5 { q_lo - q_hi } else { 1.0 - p_lo - q_hi };
                    row[hyp.index()] = p.max(0.0);
                }
            }
            rows.push(row);
        }
        Ok(IntervalProbs { rows })
    }
}

/// Interval probabilities `p[i][j] = Pr(x ∈ interval i | H_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalProbs {
    rows: Vec<[f64; 2]>,
}

impl IntervalProbs {
    pub fn from_rows(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Mismatch("interval probabilities need at least one row".into()));
        }
        if rows.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain("interval probabilities must lie in [0, 1]".into()));
        }
        Ok(IntervalProbs { rows })
    }

    /// Without sensing the statistic is identically zero, so all mass sits in
    /// the interval that contains zero.
    pub fn point_mass_at_zero(part: &Partition) -> Self {
        let owner = part.interval_of(0.0);
        let rows = (0..part.m()).map(|j| if j == owner { [1.0, 1.0] } else { [0.0, 0.0] }).collect();
        IntervalProbs { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    #[inline]
    pub fn get(&self, interval: usize, hyp: Hypothesis) -> f64 {
        self.rows[interval][hyp.index()]
    }

    #[inline]
    pub fn idle(&self, interval: usize) -> f64 {
        self.rows[interval][0]
    }

    #[inline]
    pub fn busy(&self, interval: usize) -> f64 {
        self.rows[interval][1]
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    /// An interval that carries no probability under either hypothesis.
    pub fn is_degenerate(&self, interval: usize) -> bool {
        self.rows[interval][0] == 0.0 && self.rows[interval][1] == 0.0
    }

    pub fn column_sum(&self, hyp: Hypothesis) -> f64 {
        self.rows.iter().map(|r| r[hyp.index()]).sum()
    }
}

/// Convenience wrapper covering the no-sensing case `n = 0`.
pub fn interval_probs_for(s: &Scenario, n: u64, part: &Partition) -> Result<IntervalProbs> {
    if n == 0 {
        Ok(IntervalProbs::point_mass_at_zero(part))
    } else {
        EnergyDistribution::for_scenario(s, n)?.interval_probs(part)
    }
}
