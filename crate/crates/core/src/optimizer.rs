//! Sensing-time search, alternating partition/power optimization and the
//! conventional single- and two-level baselines.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{averages, solve_dual, solve_dual_pinned, Averages, DualOptions, DualSolution, DualState, PowerVector};
use crate::error::{Error, Result};
use crate::partition::{design_partition, DistortionParams, Partition};
use crate::scenario::{Scenario, SensingConfig};
use crate::statistics::{interval_probs_for, EnergyDistribution, Hypothesis, IntervalProbs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Multiple-level policy with optimized thresholds.
    Proposed,
    /// Constant power, no sensing.
    Underlay,
    /// Opportunistic access: transmit only below the detection threshold.
    Osa,
    /// Sensing-based sharing: high power below the detection threshold, low power above.
    Binary,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Proposed, Strategy::Underlay, Strategy::Osa, Strategy::Binary];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::Underlay => "underlay",
            Strategy::Osa => "osa",
            Strategy::Binary => "binary",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected proposed|underlay|osa|binary)"))
    }
}

/// Sensing time plus the energy-to-power map applied in the transmission slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    pub strategy: Strategy,
    pub tau: f64,
    pub samples: u64,
    pub partition: Partition,
    /// Power of each level; interval `j` transmits with `powers[partition.assignment()[j]]`.
    pub powers: PowerVector,
}

impl PowerPolicy {
    pub fn m(&self) -> usize {
        self.powers.len()
    }

    pub fn validate(&self, s: &Scenario) -> Result<()> {
        if self.partition.m() != self.powers.len() {
            return Err(Error::Mismatch(format!(
                "{} intervals but {} power levels",
                self.partition.m(),
                self.powers.len()
            )));
        }
        if s.sample_count(self.tau)? != self.samples {
            return Err(Error::Mismatch(format!("tau = {} does not give {} samples", self.tau, self.samples)));
        }
        if self.strategy == Strategy::Underlay && (self.tau != 0.0 || self.m() != 1) {
            return Err(Error::Mismatch("underlay policies have tau = 0 and a single level".into()));
        }
        PowerVector::new(self.powers.to_vec())?;
        Ok(())
    }

    /// Transmit power chosen for accumulated energy `x`.
    pub fn power_at(&self, x: f64) -> f64 {
        self.powers[self.partition.level_of(x)]
    }

    /// Power of each interval in energy order.
    pub fn interval_powers(&self) -> Vec<f64> {
        self.partition.assignment().iter().map(|&lvl| self.powers[lvl]).collect()
    }

    /// `(lower, upper, power)` for each non-empty interval, in energy order.
    pub fn profile(&self) -> Vec<(f64, f64, f64)> {
        let t = self.partition.thresholds();
        self.interval_powers()
            .into_iter()
            .enumerate()
            .filter(|&(j, _)| t[j + 1] > t[j])
            .map(|(j, p)| (t[j], t[j + 1], p))
            .collect()
    }
}

/// Analytic figures of a policy together with the interval probabilities they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub averages: Averages,
    pub probs: IntervalProbs,
}

pub fn evaluate(s: &Scenario, pol: &PowerPolicy) -> Result<Evaluation> {
    pol.validate(s)?;
    let probs = interval_probs_for(s, pol.samples, &pol.partition)?;
    let avg = averages(s, &pol.interval_powers(), &probs, pol.tau);
    Ok(Evaluation { averages: avg, probs })
}

/// Average secondary rate in bit/s/Hz, counting only the transmission slot.
pub fn evaluate_rate(s: &Scenario, pol: &PowerPolicy) -> Result<f64> {
    Ok(evaluate(s, pol)?.averages.rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LloydOptions {
    /// Relative rate improvement or threshold movement below which the alternation stops.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Number of initial partitions tried (1 to 3).
    pub starts: usize,
    pub dual: DualOptions,
}

impl Default for LloydOptions {
    fn default() -> Self {
        LloydOptions {
            tolerance: 1e-8,
            max_iter: 200,
            starts: 3,
            dual: DualOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub policy: PowerPolicy,
    pub averages: Averages,
    pub dual: DualState,
    pub gap: f64,
    /// Partition updates performed.
    pub iterations: usize,
    /// Rate after every accepted update, starting with the initial partition.
    pub trace: Vec<f64>,
    pub converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn outcome(strategy: Strategy, tau: f64, n: u64, partition: Partition, sol: DualSolution, iterations: usize, trace: Vec<f64>, converged: bool) -> LloydOutcome {
    LloydOutcome {
        policy: PowerPolicy {
            strategy,
            tau,
            samples: n,
            partition,
            powers: sol.powers,
        },
        averages: sol.averages,
        dual: DualState::new(sol.state.lambda, sol.state.mu),
        gap: sol.gap,
        iterations,
        trace,
        converged: converged && sol.converged,
    }
}

/// Alternates power allocation for fixed intervals with interval design for
/// fixed powers and multipliers, starting from `init`.
///
/// A partition update is kept only if it does not lower the rate, so the
/// returned trace is non-decreasing.
pub fn lloyd_solve(s: &Scenario, tau: f64, init: &Partition, opts: &LloydOptions) -> Result<LloydOutcome> {
    s.validate()?;
    let n = s.sample_count(tau)?;
    let m = init.m();
    if m >= 2 && n == 0 {
        return Err(Error::Domain("two or more levels need at least one sensing sample".into()));
    }
    let mut part = init.relabelled();
    let probs = interval_probs_for(s, n, &part)?;
    let mut sol = solve_dual(s, &probs, tau, &DualState::initial(s), &opts.dual)?;
    let mut trace = vec![sol.averages.rate];
    if m == 1 || s.transmit_fraction(tau) == 0.0 {
        return Ok(outcome(Strategy::Proposed, tau, n, part, sol, 0, trace, true));
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let dp = DistortionParams {
            scenario: s,
            n,
            powers: &sol.powers,
            lambda: sol.state.lambda,
            mu: sol.state.mu,
        };
        let candidate = design_partition(&dp)?.relabelled();
        let shift = part.max_relative_shift(&candidate);
        let cprobs = interval_probs_for(s, n, &candidate)?;
        let csol = solve_dual(s, &cprobs, tau, &sol.state, &opts.dual)?;
        let (old, new) = (sol.averages.rate, csol.averages.rate);
        if new < old {
            converged = true;
            break;
        }
        part = candidate;
        sol = csol;
        trace.push(new);
        if shift < opts.tolerance || new - old <= opts.tolerance * old.abs() {
            converged = true;
            break;
        }
    }
    Ok(outcome(Strategy::Proposed, tau, n, part, sol, iterations, trace, converged))
}

/// Initial partitions: equiprobable under H0, equiprobable under H1, log-uniform.
pub fn initial_partitions(dist: &EnergyDistribution, m: usize, starts: usize) -> Result<Vec<Partition>> {
    let mut out = vec![Partition::equiprobable(dist, Hypothesis::H0, m)?];
    if starts >= 2 {
        out.push(Partition::equiprobable(dist, Hypothesis::H1, m)?);
    }
    if starts >= 3 {
        out.push(Partition::log_uniform(dist, m)?);
    }
    Ok(out)
}

/// Rate obtained at one sensing duration, or why it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauPoint {
    pub tau: f64,
    pub samples: u64,
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub strategy: Strategy,
    pub m: usize,
    pub policy: PowerPolicy,
    /// Average rate (bit/s/Hz), transmit power and interference of `policy`.
    pub averages: Averages,
    pub lambda: f64,
    pub mu: f64,
    pub dual_gap: f64,
    pub lloyd_iterations: usize,
    pub converged: bool,
    pub tau_trace: Vec<TauPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Policy that spends the whole frame sensing and never transmits.
fn silent(strategy: Strategy, s: &Scenario, tau: f64, m: usize) -> Result<LloydOutcome> {
    let n = s.sample_count(tau)?;
    let partition = if m == 1 {
        Partition::single()
    } else {
        Partition::equiprobable(&EnergyDistribution::for_scenario(s, n.max(1))?, Hypothesis::H0, m)?
    };
    let probs = interval_probs_for(s, n, &partition)?;
    let powers = PowerVector::zeros(m);
    let avg = averages(s, &powers, &probs, tau);
    Ok(LloydOutcome {
        policy: PowerPolicy {
            strategy,
            tau,
            samples: n,
            partition,
            powers,
        },
        averages: avg,
        dual: DualState::new(0.0, 0.0),
        gap: 0.0,
        iterations: 0,
        trace: vec![0.0],
        converged: true,
    })
}

/// Without samples every frame yields x = 0: one interval holds all the mass
/// and the remaining levels are unused.
fn unsensed(s: &Scenario, m: usize, opts: &LloydOptions) -> Result<LloydOutcome> {
    let mut thresholds = vec![0.0];
    thresholds.extend(std::iter::repeat_n(f64::INFINITY, m));
    let partition = Partition::new(thresholds, (0..m).collect())?;
    let probs = IntervalProbs::point_mass_at_zero(&partition);
    let sol = solve_dual(s, &probs, 0.0, &DualState::initial(s), &opts.dual)?;
    let trace = vec![sol.averages.rate];
    Ok(outcome(Strategy::Proposed, 0.0, 0, partition, sol, 0, trace, true))
}

fn proposed_at(s: &Scenario, tau: f64, opts: &LloydOptions) -> Result<LloydOutcome> {
    let n = s.sample_count(tau)?;
    if s.transmit_fraction(tau) == 0.0 {
        return silent(Strategy::Proposed, s, tau, s.m);
    }
    if s.m == 1 {
        return lloyd_solve(s, tau, &Partition::single(), opts);
    }
    if n == 0 {
        return unsensed(s, s.m, opts);
    }
    let dist = EnergyDistribution::for_scenario(s, n)?;
    let mut best: Option<LloydOutcome> = None;
    let mut last_err = None;
    for init in initial_partitions(&dist, s.m, opts.starts.clamp(1, 3))? {
        match lloyd_solve(s, tau, &init, opts) {
            Ok(out) => {
                if best.as_ref().is_none_or(|b| out.averages.rate > b.averages.rate) {
                    best = Some(out);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one start"))
}

fn two_level_at(strategy: Strategy, s: &Scenario, tau: f64, target_pd: f64, opts: &LloydOptions) -> Result<LloydOutcome> {
    let n = s.sample_count(tau)?;
    if n == 0 {
        return Err(Error::Domain("threshold strategies need at least one sensing sample".into()));
    }
    if s.transmit_fraction(tau) == 0.0 {
        return silent(strategy, s, tau, 2);
    }
    let dist = EnergyDistribution::for_scenario(s, n)?;
    let rho = dist.detection_threshold(target_pd)?;
    let partition = Partition::from_thresholds(vec![rho])?;
    let probs = dist.interval_probs(&partition)?;
    let pinned = [false, strategy == Strategy::Osa];
    let sol = solve_dual_pinned(s, &probs, tau, &DualState::initial(s), &opts.dual, &pinned)?;
    let trace = vec![sol.averages.rate];
    let mut out = outcome(strategy, tau, n, partition, sol, 0, trace, true);
    out.policy.strategy = strategy;
    Ok(out)
}

type Attempt = (f64, u64, Result<LloydOutcome>);

fn rate_of(a: &Attempt) -> f64 {
    a.2.as_ref().map_or(f64::NEG_INFINITY, |o| o.averages.rate)
}

/// Integer search for the best sample count in `[lo, hi]`, assuming the rate is
/// roughly unimodal there. Every evaluation is returned, so the caller keeps
/// the best point seen even when the assumption fails.
fn refine_samples(s: &Scenario, lo: u64, hi: u64, known: &[u64], at: &(impl Fn(f64) -> Result<LloydOutcome> + Sync)) -> Vec<Attempt> {
    let mut seen: Vec<Attempt> = Vec::new();
    let eval = |n: u64, seen: &mut Vec<Attempt>| -> f64 {
        if let Some(a) = seen.iter().find(|a| a.1 == n) {
            return rate_of(a);
        }
        let tau = n as f64 / s.fs;
        let a = (tau, n, at(tau));
        let r = rate_of(&a);
        seen.push(a);
        r
    };
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 3 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if eval(m1, &mut seen) < eval(m2, &mut seen) {
            lo = m1 + 1;
        } else {
            hi = m2;
        }
    }
    for n in lo..=hi {
        eval(n, &mut seen);
    }
    seen.retain(|a| !known.contains(&a.1));
    seen
}

/// Runs `at` over the grid (plus the refinement around the best grid point)
/// and keeps the best rate, ties going to the shorter sensing time.
fn search_tau(
    strategy: Strategy,
    s: &Scenario,
    cfg: &SensingConfig,
    m: usize,
    at: impl Fn(f64) -> Result<LloydOutcome> + Sync,
) -> Result<SolveReport> {
    s.validate()?;
    let grid = cfg.tau_grid();
    let mut attempts: Vec<Attempt> = grid
        .par_iter()
        .map(|&tau| Ok((tau, s.sample_count(tau)?, at(tau))))
        .collect::<Result<_>>()?;

    if cfg.refines() && grid.len() > 1 {
        let best = (0..attempts.len()).fold(0, |b, k| if rate_of(&attempts[k]) > rate_of(&attempts[b]) { k } else { b });
        if rate_of(&attempts[best]).is_finite() {
            let lo = attempts[best.saturating_sub(1)].1;
            let hi = attempts[(best + 1).min(attempts.len() - 1)].1;
            let known: Vec<u64> = attempts.iter().map(|a| a.1).collect();
            attempts.extend(refine_samples(s, lo, hi, &known, &at));
            attempts.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }

    let mut trace = Vec::with_capacity(attempts.len());
    let mut best: Option<LloydOutcome> = None;
    let mut errors = Vec::new();
    for (tau, samples, res) in attempts {
        match res {
            Ok(out) => {
                trace.push(TauPoint {
                    tau,
                    samples,
                    rate: Some(out.averages.rate),
                    error: None,
                });
                if best.as_ref().is_none_or(|b| out.averages.rate > b.averages.rate) {
                    best = Some(out);
                }
            }
            Err(e) => {
                errors.push(format!("tau={tau}: {e}"));
                trace.push(TauPoint {
                    tau,
                    samples,
                    rate: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let best = best.ok_or_else(|| Error::AllGridPointsFailed(errors.join("; ")))?;
    let mut notes = Vec::new();
    if !best.converged {
        notes.push(format!("alternation stopped at the iteration cap ({} updates); best iterate returned", best.iterations));
    }
    Ok(SolveReport {
        strategy,
        m,
        averages: best.averages,
        lambda: best.dual.lambda,
        mu: best.dual.mu,
        dual_gap: best.gap,
        lloyd_iterations: best.iterations,
        converged: best.converged,
        policy: best.policy,
        tau_trace: trace,
        notes,
    })
}

/// Optimal multiple-level policy with `s.m` levels over the sensing grid.
pub fn solve(s: &Scenario, cfg: &SensingConfig, opts: &LloydOptions) -> Result<SolveReport> {
    search_tau(Strategy::Proposed, s, cfg, s.m, |tau| proposed_at(s, tau, opts))
}

/// Constant power `min(P_avg, I_avg/(γ q1))` without sensing.
pub fn baseline_underlay(s: &Scenario) -> Result<SolveReport> {
    s.validate()?;
    let interference_cap = if s.q1() > 0.0 { s.i_avg / (s.gamma * s.q1()) } else { f64::INFINITY };
    let power = s.p_avg.min(interference_cap);
    let partition = Partition::single();
    let probs = IntervalProbs::point_mass_at_zero(&partition);
    // multipliers of the same single-level problem, for reporting
    let sol = solve_dual(s, &probs, 0.0, &DualState::initial(s), &DualOptions::default())?;
    let powers = PowerVector::new(vec![power])?;
    let avg = averages(s, &powers, &probs, 0.0);
    Ok(SolveReport {
        strategy: Strategy::Underlay,
        m: 1,
        policy: PowerPolicy {
            strategy: Strategy::Underlay,
            tau: 0.0,
            samples: 0,
            partition,
            powers,
        },
        averages: avg,
        lambda: sol.state.lambda,
        mu: sol.state.mu,
        dual_gap: sol.dual_value - avg.rate,
        lloyd_iterations: 0,
        converged: true,
        tau_trace: vec![TauPoint {
            tau: 0.0,
            samples: 0,
            rate: Some(avg.rate),
            error: None,
        }],
        notes: Vec::new(),
    })
}

/// Opportunistic access: power only below the detection threshold for `target_pd`.
pub fn baseline_osa(s: &Scenario, cfg: &SensingConfig, target_pd: f64, opts: &LloydOptions) -> Result<SolveReport> {
    check_pd(target_pd)?;
    let mut report = search_tau(Strategy::Osa, s, cfg, 2, |tau| two_level_at(Strategy::Osa, s, tau, target_pd, opts))?;
    report.notes.push(format!("threshold: detection threshold at target_pd = {target_pd}; upper level pinned to 0"));
    Ok(report)
}

/// Binary sharing: two optimized powers around the detection threshold for `target_pd`.
pub fn baseline_binary(s: &Scenario, cfg: &SensingConfig, target_pd: f64, opts: &LloydOptions) -> Result<SolveReport> {
    check_pd(target_pd)?;
    let mut report = search_tau(Strategy::Binary, s, cfg, 2, |tau| two_level_at(Strategy::Binary, s, tau, target_pd, opts))?;
    report.notes.push(format!("threshold: detection threshold at target_pd = {target_pd} (not optimized)"));
    Ok(report)
}

fn check_pd(target_pd: f64) -> Result<()> {
    if target_pd > 0.0 && target_pd < 1.0 {
        Ok(())
    } else {
        Err(Error::range("target_pd", format!("must lie in (0, 1), got {target_pd}")))
    }
}

/// Dispatches to the solver for `strategy`.
pub fn solve_strategy(strategy: Strategy, s: &Scenario, cfg: &SensingConfig, target_pd: f64, opts: &LloydOptions) -> Result<SolveReport> {
    match strategy {
        Strategy::Proposed => solve(s, cfg, opts),
        Strategy::Underlay => baseline_underlay(s),
        Strategy::Osa => baseline_osa(s, cfg, target_pd, opts),
        Strategy::Binary => baseline_binary(s, cfg, target_pd, opts),
    }
}
