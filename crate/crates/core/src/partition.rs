//! Energy partitions and their design for fixed power levels and multipliers.
//!
//! For power levels `P_i` and multipliers `(λ, μ)`, every energy value `x` is
//! scored by the Lagrangian-weighted rate of each level,
//!
//! ```text
//! R(x, P_i) = f(x|H0)·h0_i + f(x|H1)·h1_i
//! h0_i = q0·log2(1 + P_i h / N0)           − λ q0 P_i
//! h1_i = q1·log2(1 + P_i h / (N0 + g2 Pp)) − λ q1 P_i − μ q1 γ P_i
//! ```
//!
//! and assigned to the best-scoring level. Dividing by `f(x|H0)` leaves
//! `h0_i + h1_i·exp(LLR(x))` with a strictly increasing log-likelihood ratio,
//! so two levels swap order at most once and every level owns a single
//! contiguous interval. The design walks the energy axis from zero, handing
//! over to whichever remaining level overtakes the current owner first.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::statistics::{EnergyDistribution, Hypothesis};

/// Contiguous energy intervals `[η_{j}, η_{j+1})` and the level that owns each.
///
/// Equal adjacent thresholds describe an empty interval. Such intervals show up
/// when a level never wins; they are kept, flagged by [`Partition::empty_intervals`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    #[serde(serialize_with = "ser_thresholds", deserialize_with = "de_thresholds")]
    thresholds: Vec<f64>,
    assignment: Vec<usize>,
}

impl Partition {
    pub fn new(thresholds: Vec<f64>, assignment: Vec<usize>) -> Result<Self> {
        let m = assignment.len();
        if m == 0 {
            return Err(Error::InvalidPartition("needs at least one interval".into()));
        }
        if thresholds.len() != m + 1 {
            return Err(Error::InvalidPartition(format!(
                "{} thresholds for {m} intervals",
                thresholds.len()
            )));
        }
        if thresholds[0] != 0.0 || thresholds[m] != f64::INFINITY {
            return Err(Error::InvalidPartition("thresholds must start at 0 and end at +inf".into()));
        }
        if thresholds.iter().any(|t| t.is_nan() || *t < 0.0) || thresholds.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidPartition("thresholds must be non-decreasing".into()));
        }
        let mut seen = vec![false; m];
        for &a in &assignment {
            if a >= m || seen[a] {
                return Err(Error::InvalidPartition("assignment is not a permutation".into()));
            }
            seen[a] = true;
        }
        Ok(Partition { thresholds, assignment })
    }

    pub fn single() -> Self {
        Partition {
            thresholds: vec![0.0, f64::INFINITY],
            assignment: vec![0],
        }
    }

    /// Partition with the given interior thresholds and identity assignment.
    pub fn from_thresholds(interior: Vec<f64>) -> Result<Self> {
        let m = interior.len() + 1;
        let mut thresholds = Vec::with_capacity(m + 1);
        thresholds.push(0.0);
        thresholds.extend(interior);
        thresholds.push(f64::INFINITY);
        Self::new(thresholds, (0..m).collect())
    }

    /// Thresholds at the `j/m` quantiles of the energy law under `hyp`.
    pub fn equiprobable(dist: &EnergyDistribution, hyp: Hypothesis, m: usize) -> Result<Self> {
        let interior = (1..m)
            .map(|j| dist.quantile(hyp, j as f64 / m as f64))
            .collect::<Result<Vec<_>>>()?;
        Self::from_thresholds(interior)
    }

    /// Geometrically spaced thresholds spanning the bulk of both energy laws.
    pub fn log_uniform(dist: &EnergyDistribution, m: usize) -> Result<Self> {
        if m == 1 {
            return Ok(Self::single());
        }
        let lo = dist.quantile(Hypothesis::H0, 1e-3)?;
        let hi = dist.quantile(Hypothesis::H1, 1.0 - 1e-3)?;
        let (llo, lhi) = (lo.ln(), hi.ln());
        let interior = (1..m)
            .map(|j| (llo + (lhi - llo) * j as f64 / m as f64).exp())
            .collect();
        Self::from_thresholds(interior)
    }

    pub fn m(&self) -> usize {
        self.assignment.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// `assignment()[j]` is the level that owns interval `j`.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Index of the interval containing `x`.
    pub fn interval_of(&self, x: f64) -> usize {
        // first threshold strictly above x closes the interval
        let upper = self.thresholds[1..].partition_point(|&t| t <= x);
        upper.min(self.m() - 1)
    }

    pub fn level_of(&self, x: f64) -> usize {
        self.assignment[self.interval_of(x)]
    }

    pub fn empty_intervals(&self) -> Vec<usize> {
        (0..self.m())
            .filter(|&j| self.thresholds[j + 1] <= self.thresholds[j])
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.assignment.iter().enumerate().all(|(j, &a)| j == a)
    }

    /// Same intervals, relabelled so that interval `j` is owned by level `j`.
    pub fn relabelled(&self) -> Self {
        Partition {
            thresholds: self.thresholds.clone(),
            assignment: (0..self.m()).collect(),
        }
    }

    /// Largest relative movement of a threshold between two partitions of the same size.
    /// Infinite when an interval changes between empty-at-infinity and finite.
    pub fn max_relative_shift(&self, other: &Partition) -> f64 {
        if self.m() != other.m() {
            return f64::INFINITY;
        }
        self.thresholds
            .iter()
            .zip(&other.thresholds)
            .map(|(&a, &b)| match (a.is_finite(), b.is_finite()) {
                (true, true) => (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE),
                (false, false) => 0.0,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

fn ser_thresholds<S: Serializer>(thresholds: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(thresholds.len()))?;
    for &t in thresholds {
        if t == f64::INFINITY {
            seq.serialize_element("+inf")?;
        } else {
            seq.serialize_element(&t)?;
        }
    }
    seq.end()
}

fn de_thresholds<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Threshold {
        Finite(f64),
        Sentinel(String),
    }
    let raw = Vec::<Threshold>::deserialize(de)?;
    raw.into_iter()
        .map(|t| match t {
            Threshold::Finite(v) => Ok(v),
            Threshold::Sentinel(s) if s == "+inf" => Ok(f64::INFINITY),
            Threshold::Sentinel(s) => Err(serde::de::Error::custom(format!("bad threshold `{s}`"))),
        })
        .collect()
}

/// Outcome of comparing two levels across the positive energy axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    /// The two scores are equal at this energy and swap order there.
    At(f64),
    /// This level scores at least as well as the other for every x > 0.
    Dominates(usize),
    /// Equal powers: the scores coincide everywhere.
    Identical,
}

/// Power levels and multipliers that define the per-energy score of each level.
#[derive(Debug, Clone, Copy)]
pub struct DistortionParams<'a> {
    pub scenario: &'a Scenario,
    /// Sensing sample count.
    pub n: u64,
    pub powers: &'a [f64],
    pub lambda: f64,
    pub mu: f64,
}

/// Below this g₁P_p the two energy laws are treated as identical.
const INDISTINGUISHABLE: f64 = 1e-12;

impl<'a> DistortionParams<'a> {
    pub fn validate(&self) -> Result<()> {
        if self.powers.is_empty() {
            return Err(Error::Mismatch("no power levels".into()));
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("power levels must be finite and >= 0".into()));
        }
        if !(self.lambda >= 0.0 && self.mu >= 0.0 && self.lambda.is_finite() && self.mu.is_finite()) {
            return Err(Error::Domain("multipliers must be finite and >= 0".into()));
        }
        if self.n == 0 {
            return Err(Error::Domain("partition design needs at least one sensing sample".into()));
        }
        Ok(())
    }

    fn distribution(&self) -> Result<EnergyDistribution> {
        EnergyDistribution::for_scenario(self.scenario, self.n)
    }

    /// Coefficients `(h0_i, h1_i)` of the two densities in the score of level `i`.
    pub fn coefficients(&self, i: usize) -> (f64, f64) {
        let s = self.scenario;
        let p = self.powers[i];
        let h0 = s.q0 * (1.0 + p * s.h / s.n0).log2() - self.lambda * s.q0 * p;
        let h1 = s.q1() * (1.0 + p * s.h / s.busy_noise()).log2() - self.lambda * s.q1() * p - self.mu * s.q1() * s.gamma * p;
        (h0, h1)
    }

    /// Score R(x, P_i).
    pub fn distortion(&self, x: f64, i: usize) -> Result<f64> {
        if i >= self.powers.len() {
            return Err(Error::Mismatch(format!("level {i} out of range")));
        }
        let d = self.distribution()?;
        let lf0 = d.log_pdf(x, Hypothesis::H0)?;
        let lf1 = d.log_pdf(x, Hypothesis::H1)?;
        let (h0, h1) = self.coefficients(i);
        let mut v = 0.0;
        if h0 != 0.0 {
            v += h0 * lf0.exp();
        }
        if h1 != 0.0 {
            v += h1 * lf1.exp();
        }
        Ok(v)
    }

    /// Average score of a partition, Σ_j h0_{a(j)} p_{j,0} + h1_{a(j)} p_{j,1},
    /// per unit of transmission time.
    pub fn average_distortion(&self, part: &Partition) -> Result<f64> {
        let probs = self.distribution()?.interval_probs(part)?;
        Ok(part
            .assignment()
            .iter()
            .enumerate()
            .map(|(j, &lvl)| {
                let (h0, h1) = self.coefficients(lvl);
                let mut v = 0.0;
                if probs.idle(j) > 0.0 {
                    v += h0 * probs.idle(j);
                }
                if probs.busy(j) > 0.0 {
                    v += h1 * probs.busy(j);
                }
                v
            })
            .sum())
    }

    fn indistinguishable(&self) -> bool {
        self.scenario.g1 * self.scenario.pp < INDISTINGUISHABLE
    }

    /// Energy at which levels `i` and `k` score equally.
    pub fn crossing_point(&self, i: usize, k: usize) -> Result<Crossing> {
        if i == k {
            return Err(Error::Domain("crossing point needs two distinct levels".into()));
        }
        let m = self.powers.len();
        if i >= m || k >= m {
            return Err(Error::Mismatch(format!("level index out of range for {m} levels")));
        }
        let d = self.distribution()?;
        let (h0_i, h1_i) = self.coefficients(i);
        let (h0_k, h1_k) = self.coefficients(k);
        // S_{i,k}(x) / f(x|H0) = b + a·exp(LLR(x))
        let a = h1_i - h1_k;
        let b = h0_i - h0_k;
        if a == 0.0 && b == 0.0 {
            return Ok(Crossing::Identical);
        }
        if self.indistinguishable() {
            return Ok(Crossing::Dominates(if a + b >= 0.0 { i } else { k }));
        }
        if a * b >= 0.0 {
            return Ok(Crossing::Dominates(if a >= 0.0 && b >= 0.0 { i } else { k }));
        }
        let x = ((-b / a).ln() - d.llr_intercept()) / d.llr_slope();
        if x > 0.0 {
            Ok(Crossing::At(x))
        } else {
            // no sign change on x > 0; the sign is that of the growing term
            Ok(Crossing::Dominates(if a > 0.0 { i } else { k }))
        }
    }
}

/// Optimal partition for fixed levels and multipliers.
///
/// The level that scores best as x → 0⁺ takes the first interval. Each step
/// computes where every remaining level overtakes the current owner, closes
/// the current interval at the earliest such energy, and hands ownership to
/// the level responsible. Levels that never overtake, or that are overtaken
/// at the very energy where they take over, receive empty intervals at +∞,
/// ordered by decreasing power.
pub fn design_partition(dp: &DistortionParams) -> Result<Partition> {
    dp.validate()?;
    let m = dp.powers.len();
    if m == 1 {
        return Ok(Partition::single());
    }
    let d = dp.distribution()?;
    let coef: Vec<(f64, f64)> = (0..m).map(|i| dp.coefficients(i)).collect();
    let llr0 = d.llr_intercept();
    let ratio0 = llr0.exp();

    // ordering of R(x, ·)/f(x|H0) as x → 0⁺
    let score0 = |i: usize| coef[i].0 + coef[i].1 * ratio0;
    let better = |i: usize, k: usize, si: f64, sk: f64| -> bool {
        si > sk || (si == sk && (dp.powers[i] > dp.powers[k] || (dp.powers[i] == dp.powers[k] && i < k)))
    };
    let mut owner = 0;
    for i in 1..m {
        if better(i, owner, score0(i), score0(owner)) {
            owner = i;
        }
    }

    let mut remaining: Vec<usize> = (0..m).filter(|&i| i != owner).collect();
    let mut thresholds = vec![0.0];
    let mut assignment = vec![owner];
    let mut losers = Vec::new();
    let mut left = 0.0f64;
    let separable = !dp.indistinguishable();

    while separable && !remaining.is_empty() {
        let (h0_i, h1_i) = coef[owner];
        let mut next: Option<(f64, usize)> = None;
        for &k in &remaining {
            let a = h1_i - coef[k].1;
            let b = h0_i - coef[k].0;
            if !(a < 0.0) {
                // k never overtakes the current owner to the right
                continue;
            }
            let x = if b > 0.0 {
                (((b / -a).ln() - llr0) / d.llr_slope()).max(left)
            } else {
                left
            };
            let take = match next {
                None => true,
                Some((bx, bk)) => x < bx || (x == bx && better(k, bk, dp.powers[k], dp.powers[bk])),
            };
            if take {
                next = Some((x, k));
            }
        }
        let Some((x, k)) = next else { break };
        if x <= left {
            // the current owner never wins on a set of positive length
            losers.push(assignment.pop().expect("an owner is always assigned"));
            assignment.push(k);
        } else {
            thresholds.push(x);
            assignment.push(k);
        }
        remaining.retain(|&r| r != k);
        owner = k;
        left = x;
    }

    remaining.extend(losers);
    remaining.sort_by(|&a, &b| dp.powers[b].total_cmp(&dp.powers[a]).then(a.cmp(&b)));
    for k in remaining {
        thresholds.push(f64::INFINITY);
        assignment.push(k);
    }
    thresholds.push(f64::INFINITY);
    Partition::new(thresholds, assignment)
}

/// Result of checking a partition pointwise against the best-scoring level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborCheck {
    pub holds: bool,
    /// Largest amount by which another level beats the assigned one.
    pub worst_violation: f64,
    pub worst_x: f64,
}

/// Absolute slack allowed when comparing scores.
pub const NEIGHBOR_SLACK: f64 = 1e-9;

/// Checks on a uniform grid between the 1e-6 quantile of H0 and the
/// 1 − 1e-6 quantile of H1 that each energy is assigned to a best-scoring level.
pub fn verify_farthest_neighbor(dp: &DistortionParams, part: &Partition, grid_size: usize) -> Result<NeighborCheck> {
    dp.validate()?;
    if part.m() != dp.powers.len() {
        return Err(Error::Mismatch(format!(
            "partition has {} intervals for {} levels",
            part.m(),
            dp.powers.len()
        )));
    }
    let d = dp.distribution()?;
    let lo = d.quantile(Hypothesis::H0, 1e-6)?;
    let hi = d.quantile(Hypothesis::H1, 1.0 - 1e-6)?;
    let coef: Vec<(f64, f64)> = (0..dp.powers.len()).map(|i| dp.coefficients(i)).collect();

    let mut worst = NeighborCheck {
        holds: true,
        worst_violation: 0.0,
        worst_x: lo,
    };
    let steps = grid_size.max(2) - 1;
    for g in 0..=steps {
        let x = lo + (hi - lo) * g as f64 / steps as f64;
        let f0 = d.log_pdf(x, Hypothesis::H0)?.exp();
        let f1 = d.log_pdf(x, Hypothesis::H1)?.exp();
        let score = |i: usize| coef[i].0 * f0 + coef[i].1 * f1;
        let own = score(part.level_of(x));
        let best = (0..coef.len()).map(score).fold(f64::NEG_INFINITY, f64::max);
        let violation = best - own;
        if violation > worst.worst_violation {
            worst.worst_violation = violation;
            worst.worst_x = x;
        }
    }
    worst.holds = worst.worst_violation <= NEIGHBOR_SLACK;
    Ok(worst)
}
