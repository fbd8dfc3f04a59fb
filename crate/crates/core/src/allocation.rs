//! Power levels for a fixed partition and the dual problem over `(λ, μ)`.
//!
//! For fixed multipliers the Lagrangian separates per interval. Writing
//! `w0 = q0 p_{i,0}`, `w1 = q1 p_{i,1}`, `u = N0/h`, `v = (N0 + g2 Pp)/h` and
//! `K = λ(w0 + w1) + μ γ w1`, stationarity reads
//!
//! ```text
//! log2(e)·[w0/(P + u) + w1/(P + v)] = K
//! ```
//!
//! whose admissible root is `P = [(A + √Δ)/2]⁺` with
//! `A = log2(e)(w0 + w1)/K − (u + v)` and `Δ = A² + 4B`,
//! `B = log2(e)(w0 v + w1 u)/K − u v`.
//!
//! The dual function is convex and differentiable with gradient `(C, D)`, the
//! power and interference slacks. Both slacks are monotone along the right
//! one-dimensional slices, so the default solver finds the multipliers by
//! nested bracketing root searches on the gradient. A plain projected
//! subgradient iteration is also provided.

use std::f64::consts::LOG2_E;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::statistics::IntervalProbs;

/// Lagrange multipliers for the power (`lambda`) and interference (`mu`) budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub lambda: f64,
    pub mu: f64,
    /// Subgradients `(C, D)` seen by the solver, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<[f64; 2]>,
    /// Dual function value at each entry of `history`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual_values: Vec<f64>,
    #[serde(default)]
    pub iterations: usize,
}

impl DualState {
    pub fn new(lambda: f64, mu: f64) -> Self {
        DualState {
            lambda,
            mu,
            history: Vec::new(),
            dual_values: Vec::new(),
            iterations: 0,
        }
    }

    /// Water-filling-scale starting point: `λ = log2(e)/P_avg`, `μ = 0`.
    pub fn initial(s: &Scenario) -> Self {
        Self::new(LOG2_E / s.p_avg, 0.0)
    }
}

/// Power of each interval, in partition order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("powers must be finite and >= 0".into()));
        }
        Ok(PowerVector(powers))
    }

    pub fn zeros(m: usize) -> Self {
        PowerVector(vec![0.0; m])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PowerVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Analytic frame averages of a policy: rate, transmit power and interference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub rate: f64,
    pub power: f64,
    pub interference: f64,
}

pub fn averages(s: &Scenario, powers: &[f64], probs: &IntervalProbs, tau: f64) -> Averages {
    let c = s.transmit_fraction(tau);
    let (q0, q1) = (s.q0, s.q1());
    let mut out = Averages {
        rate: 0.0,
        power: 0.0,
        interference: 0.0,
    };
    for (i, &p) in powers.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let (p0, p1) = (probs.idle(i), probs.busy(i));
        out.rate += q0 * (1.0 + p * s.h / s.n0).log2() * p0 + q1 * (1.0 + p * s.h / s.busy_noise()).log2() * p1;
        out.power += p * (q0 * p0 + q1 * p1);
        out.interference += q1 * s.gamma * p * p1;
    }
    out.rate *= c;
    out.power *= c;
    out.interference *= c;
    out
}

/// Stationary power of a single interval for price `k = λ(w0 + w1) + μγw1`.
fn interval_power(s: &Scenario, w0: f64, w1: f64, k: f64) -> f64 {
    let u = s.n0 / s.h;
    let v = s.busy_noise() / s.h;
    let a = LOG2_E * (w0 + w1) / k - (u + v);
    let b = LOG2_E * (w0 * v + w1 * u) / k - u * v;
    let disc = a * a + 4.0 * b;
    if !(disc >= 0.0) {
        return 0.0;
    }
    let root = disc.sqrt();
    // (A + √Δ)/2, rewritten as 2B/(√Δ − A) when A < 0 to avoid cancellation
    let p = if a >= 0.0 { 0.5 * (a + root) } else { 2.0 * b / (root - a) };
    p.max(0.0)
}

/// The `(A_i, Δ_i)` pair of every non-degenerate interval, `None` otherwise.
pub fn stationarity_terms(s: &Scenario, probs: &IntervalProbs, lambda: f64, mu: f64) -> Vec<Option<(f64, f64)>> {
    let u = s.n0 / s.h;
    let v = s.busy_noise() / s.h;
    (0..probs.len())
        .map(|i| {
            let w0 = s.q0 * probs.idle(i);
            let w1 = s.q1() * probs.busy(i);
            let k = lambda * (w0 + w1) + mu * s.gamma * w1;
            if w0 + w1 == 0.0 || k <= 0.0 {
                return None;
            }
            let a = LOG2_E * (w0 + w1) / k - (u + v);
            let b = LOG2_E * (w0 * v + w1 * u) / k - u * v;
            Some((a, a * a + 4.0 * b))
        })
        .collect()
}

fn powers_masked(s: &Scenario, probs: &IntervalProbs, lambda: f64, mu: f64, pinned: &[bool]) -> Result<Vec<f64>> {
    (0..probs.len())
        .map(|i| {
            if pinned.get(i).copied().unwrap_or(false) || probs.is_degenerate(i) {
                return Ok(0.0);
            }
            let w0 = s.q0 * probs.idle(i);
            let w1 = s.q1() * probs.busy(i);
            if w0 + w1 == 0.0 {
                return Ok(0.0);
            }
            let k = lambda * (w0 + w1) + mu * s.gamma * w1;
            if !(k > 0.0) {
                return Err(Error::Unbounded { interval: i });
            }
            Ok(interval_power(s, w0, w1, k))
        })
        .collect()
}

/// Lagrangian-maximizing power of every interval for the multipliers in `ds`.
/// Intervals without probability mass get zero power.
pub fn closed_form_power(s: &Scenario, probs: &IntervalProbs, ds: &DualState) -> Result<PowerVector> {
    if !(ds.lambda >= 0.0 && ds.mu >= 0.0) {
        return Err(Error::Domain("multipliers must be >= 0".into()));
    }
    Ok(PowerVector(powers_masked(s, probs, ds.lambda, ds.mu, &[])?))
}

/// Subgradient `(C, D)` of the dual function: remaining power and interference budget.
pub fn subgradient(s: &Scenario, powers: &[f64], probs: &IntervalProbs, tau: f64) -> (f64, f64) {
    let avg = averages(s, powers, probs, tau);
    (s.p_avg - avg.power, s.i_avg - avg.interference)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DualMethod {
    /// Nested bracketing root searches on the dual gradient.
    Bracketing,
    /// Projected subgradient steps `α_t = step0/√t` on budget-normalized subgradients.
    Subgradient { step0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualOptions {
    pub method: DualMethod,
    /// Constraint violation allowed at convergence, relative to each budget.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            method: DualMethod::Bracketing,
            tolerance: 1e-7,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub powers: PowerVector,
    pub state: DualState,
    /// Dual function value g(λ, μ).
    pub dual_value: f64,
    /// g(λ, μ) minus the rate of the returned powers.
    pub gap: f64,
    pub averages: Averages,
    pub converged: bool,
    /// True when the powers had to be scaled down to restore feasibility.
    pub scaled: bool,
}

struct Dual<'a> {
    s: &'a Scenario,
    probs: &'a IntervalProbs,
    tau: f64,
    pinned: &'a [bool],
    evaluations: usize,
    history: Vec<[f64; 2]>,
    dual_values: Vec<f64>,
}

struct Point {
    lambda: f64,
    powers: Vec<f64>,
    c: f64,
    d: f64,
}

impl<'a> Dual<'a> {
    /// Powers and slacks, with an unbounded Lagrangian reported as C = D = −∞.
    fn eval(&mut self, lambda: f64, mu: f64) -> Point {
        self.evaluations += 1;
        match powers_masked(self.s, self.probs, lambda, mu, self.pinned) {
            Ok(powers) => {
                let (c, d) = subgradient(self.s, &powers, self.probs, self.tau);
                Point { lambda, powers, c, d }
            }
            Err(_) => Point {
                lambda,
                powers: Vec::new(),
                c: f64::NEG_INFINITY,
                d: f64::NEG_INFINITY,
            },
        }
    }

    fn record(&mut self, p: &Point, mu: f64) {
        self.history.push([p.c, p.d]);
        let g = if p.powers.is_empty() {
            f64::INFINITY
        } else {
            averages(self.s, &p.powers, self.probs, self.tau).rate + p.lambda * p.c + mu * p.d
        };
        self.dual_values.push(g);
    }

    /// Smallest λ ≥ 0 with C(λ, μ) ≥ 0. C is non-decreasing in λ.
    fn lambda_for(&mut self, mu: f64, guess: f64) -> Result<Point> {
        let at_zero = self.eval(0.0, mu);
        if at_zero.c >= 0.0 {
            return Ok(at_zero);
        }
        let mut hi = self.eval(guess.max(1e-300), mu);
        let mut steps = 0;
        while hi.c < 0.0 {
            hi = self.eval(hi.lambda * 4.0, mu);
            steps += 1;
            if steps > 2000 {
                return Err(Error::NoConvergence {
                    what: "power multiplier bracket",
                    iterations: steps,
                    lo: 0.0,
                    hi: hi.lambda,
                });
            }
        }
        let mut lo = self.eval(hi.lambda / 4.0, mu);
        while lo.c >= 0.0 {
            hi = lo;
            if hi.lambda < 1e-300 {
                return Ok(hi);
            }
            lo = self.eval(hi.lambda / 4.0, mu);
        }
        let tol = 1e-14 * self.s.p_avg;
        let point = bracket_root(lo, hi, |p| p.c, |p| p.lambda, tol, |x| self.eval(x, mu));
        Ok(point)
    }
}

/// Illinois false position on `ln x` for a non-decreasing function, keeping
/// `f(lo) < 0 ≤ f(hi)` and returning the `hi` end.
fn bracket_root<P>(
    mut lo: P,
    mut hi: P,
    f: impl Fn(&P) -> f64,
    x: impl Fn(&P) -> f64,
    tol: f64,
    mut eval: impl FnMut(f64) -> P,
) -> P {
    let mut side = 0i8;
    let (mut flo, mut fhi) = (f(&lo), f(&hi));
    for _ in 0..200 {
        let (tlo, thi) = (x(&lo).ln(), x(&hi).ln());
        if fhi <= tol || thi - tlo <= 1e-15 * thi.abs().max(1.0) {
            break;
        }
        let t = if flo.is_finite() && fhi.is_finite() {
            let t = thi - fhi * (thi - tlo) / (fhi - flo);
            if t > tlo && t < thi {
                t
            } else {
                0.5 * (tlo + thi)
            }
        } else {
            0.5 * (tlo + thi)
        };
        let mid = eval(t.exp());
        let fm = f(&mid);
        if fm >= 0.0 {
            hi = mid;
            fhi = fm;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        } else {
            lo = mid;
            flo = fm;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        }
    }
    hi
}

/// Solves the dual problem for a fixed partition. See [`solve_dual_pinned`].
pub fn solve_dual(s: &Scenario, probs: &IntervalProbs, tau: f64, init: &DualState, opts: &DualOptions) -> Result<DualSolution> {
    solve_dual_pinned(s, probs, tau, init, opts, &[])
}

/// Solves the dual problem with the intervals flagged in `pinned` held at zero power.
pub fn solve_dual_pinned(
    s: &Scenario,
    probs: &IntervalProbs,
    tau: f64,
    init: &DualState,
    opts: &DualOptions,
    pinned: &[bool],
) -> Result<DualSolution> {
    s.validate()?;
    let c = s.transmit_fraction(tau);
    if c == 0.0 {
        // no transmission slot: nothing to allocate
        let powers = PowerVector::zeros(probs.len());
        let avg = averages(s, &powers, probs, tau);
        return Ok(DualSolution {
            powers,
            state: DualState::new(0.0, 0.0),
            dual_value: 0.0,
            gap: 0.0,
            averages: avg,
            converged: true,
            scaled: false,
        });
    }
    let mut dual = Dual {
        s,
        probs,
        tau,
        pinned,
        evaluations: 0,
        history: Vec::new(),
        dual_values: Vec::new(),
    };
    let (point, mu) = match opts.method {
        DualMethod::Bracketing => bracketing(&mut dual, init)?,
        DualMethod::Subgradient { step0 } => subgradient_ascent(&mut dual, init, step0, opts)?,
    };
    finish(dual, point, mu, opts)
}

fn bracketing(dual: &mut Dual, init: &DualState) -> Result<(Point, f64)> {
    let lambda_guess = if init.lambda > 0.0 { init.lambda } else { LOG2_E / dual.s.p_avg };
    let free = dual.lambda_for(0.0, lambda_guess)?;
    dual.record(&free, 0.0);
    if free.d >= 0.0 {
        return Ok((free, 0.0));
    }

    // D along μ ↦ (λ*(μ), μ) is the derivative of a convex function, hence non-decreasing
    let mut guess = free.lambda;
    let solve_at = |dual: &mut Dual, mu: f64, guess: &mut f64| -> Result<(Point, f64)> {
        let p = dual.lambda_for(mu, *guess)?;
        if p.lambda > 0.0 {
            *guess = p.lambda;
        }
        dual.record(&p, mu);
        Ok((p, mu))
    };
    let start = if init.mu > 0.0 { init.mu } else { free.lambda.max(LOG2_E / dual.s.p_avg) };
    let mut hi = solve_at(dual, start, &mut guess)?;
    let mut steps = 0;
    while hi.0.d < 0.0 {
        hi = solve_at(dual, hi.1 * 4.0, &mut guess)?;
        steps += 1;
        if steps > 2000 {
            return Err(Error::NoConvergence {
                what: "interference multiplier bracket",
                iterations: steps,
                lo: 0.0,
                hi: hi.1,
            });
        }
    }
    let mut lo = solve_at(dual, hi.1 / 4.0, &mut guess)?;
    while lo.0.d >= 0.0 {
        hi = lo;
        if hi.1 < 1e-300 {
            return Ok(hi);
        }
        lo = solve_at(dual, hi.1 / 4.0, &mut guess)?;
    }

    let tol = 1e-14 * dual.s.i_avg;
    let mut failure = None;
    let result = {
        let dual_ref = &mut *dual;
        let guess_ref = &mut guess;
        bracket_root(
            lo,
            hi,
            |p| p.0.d,
            |p| p.1,
            tol,
            |mu| match solve_at(dual_ref, mu, guess_ref) {
                Ok(p) => p,
                Err(e) => {
                    failure = Some(e);
                    // stop the search by reporting a feasible point
                    (
                        Point {
                            lambda: f64::NAN,
                            powers: Vec::new(),
                            c: 0.0,
                            d: 0.0,
                        },
                        mu,
                    )
                }
            },
        )
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(result)
}

fn subgradient_ascent(dual: &mut Dual, init: &DualState, step0: f64, opts: &DualOptions) -> Result<(Point, f64)> {
    let s = dual.s;
    let lambda_ref = LOG2_E / s.p_avg;
    let mu_ref = LOG2_E / (s.gamma * s.i_avg);
    let floor = 1e-12 * lambda_ref;
    let (mut lambda, mut mu) = (init.lambda.max(0.0), init.mu.max(0.0));
    let mut last = None;
    for t in 1..=opts.max_iter {
        let mut point = dual.eval(lambda, mu);
        if point.powers.is_empty() {
            // Lagrangian unbounded at λ = 0: evaluate at the smallest positive price instead
            point = dual.eval(floor, mu);
        }
        dual.record(&point, mu);
        let done_c = point.c.abs() <= opts.tolerance * s.p_avg || (lambda == 0.0 && point.c >= 0.0);
        let done_d = point.d.abs() <= opts.tolerance * s.i_avg || (mu == 0.0 && point.d >= 0.0);
        let (c, d) = (point.c, point.d);
        last = Some((point, mu));
        if done_c && done_d {
            break;
        }
        let alpha = step0 / (t as f64).sqrt();
        lambda = (lambda - alpha * lambda_ref * (c / s.p_avg).clamp(-1.0, 1.0)).max(0.0);
        mu = (mu - alpha * mu_ref * (d / s.i_avg).clamp(-1.0, 1.0)).max(0.0);
    }
    last.ok_or(Error::NoConvergence {
        what: "subgradient iteration",
        iterations: 0,
        lo: lambda,
        hi: mu,
    })
}

fn finish(dual: Dual, point: Point, mu: f64, opts: &DualOptions) -> Result<DualSolution> {
    let s = dual.s;
    let lambda = point.lambda;
    let raw = point.powers;
    let raw_avg = averages(s, &raw, dual.probs, dual.tau);
    let (c, d) = (s.p_avg - raw_avg.power, s.i_avg - raw_avg.interference);
    let dual_value = raw_avg.rate + lambda * c + mu * d;

    let ok_c = c.abs() <= opts.tolerance * s.p_avg || (lambda == 0.0 && c >= 0.0);
    let ok_d = d.abs() <= opts.tolerance * s.i_avg || (mu == 0.0 && d >= 0.0);

    let mut factor: f64 = 1.0;
    if raw_avg.power > s.p_avg {
        factor = factor.min(s.p_avg / raw_avg.power);
    }
    if raw_avg.interference > s.i_avg {
        factor = factor.min(s.i_avg / raw_avg.interference);
    }
    let scaled = factor < 1.0;
    let powers: Vec<f64> = if scaled { raw.iter().map(|p| p * factor).collect() } else { raw };
    let avg = averages(s, &powers, dual.probs, dual.tau);

    let mut state = DualState::new(lambda, mu);
    state.history = dual.history;
    state.dual_values = dual.dual_values;
    state.iterations = dual.evaluations;
    Ok(DualSolution {
        powers: PowerVector::new(powers)?,
        state,
        dual_value,
        gap: dual_value - avg.rate,
        averages: avg,
        converged: ok_c && ok_d,
        scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::statistics::EnergyDistribution;

    fn probs(rows: Vec<[f64; 2]>) -> IntervalProbs {
        IntervalProbs::from_rows(rows).unwrap()
    }

    #[test]
    fn water_filling_when_busy_noise_matches() {
        let mut s = Scenario::reference(3);
        s.g2 = 0.0;
        let p = probs(vec![[0.5, 0.1], [0.3, 0.3], [0.2, 0.6]]);
        for lambda in [0.05, 0.3, 2.0] {
            let pv = closed_form_power(&s, &p, &DualState::new(lambda, 0.0)).unwrap();
            let expect = (LOG2_E / lambda - s.n0 / s.h).max(0.0);
            for &pw in pv.iter() {
                assert!((pw - expect).abs() < 1e-12 * expect.max(1.0), "{pw} vs {expect}");
            }
        }
    }

    #[test]
    fn infinite_price_switches_off() {
        let s = Scenario::reference(2);
        let p = probs(vec![[0.6, 0.2], [0.4, 0.8]]);
        let pv = closed_form_power(&s, &p, &DualState::new(1e12, 0.0)).unwrap();
        assert!(pv.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn vanishing_multipliers_are_unbounded() {
        let s = Scenario::reference(2);
        let p = probs(vec![[0.6, 0.2], [0.4, 0.8]]);
        let err = closed_form_power(&s, &p, &DualState::new(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Unbounded { .. }));
    }

    #[test]
    fn degenerate_interval_gets_zero() {
        let s = Scenario::reference(3);
        let p = probs(vec![[0.6, 0.2], [0.0, 0.0], [0.4, 0.8]]);
        let pv = closed_form_power(&s, &p, &DualState::new(0.1, 0.2)).unwrap();
        assert_eq!(pv[1], 0.0);
        assert!(pv[0] > 0.0);
    }

    #[test]
    fn stationarity_holds() {
        let s = Scenario::reference(3);
        let p = probs(vec![[0.7, 0.05], [0.25, 0.35], [0.05, 0.6]]);
        let (lambda, mu) = (0.09, 0.7);
        let pv = closed_form_power(&s, &p, &DualState::new(lambda, mu)).unwrap();
        for (i, &pw) in pv.iter().enumerate() {
            let w0 = s.q0 * p.idle(i);
            let w1 = s.q1() * p.busy(i);
            let deriv = LOG2_E * (w0 / (pw + s.n0 / s.h) + w1 / (pw + s.busy_noise() / s.h))
                - lambda * (w0 + w1)
                - mu * s.gamma * w1;
            if pw > 0.0 {
                assert!(deriv.abs() < 1e-12, "interval {i}: {deriv}");
            } else {
                assert!(deriv <= 1e-12);
            }
        }
    }

    #[test]
    fn subgradient_basics() {
        let s = Scenario::reference(2);
        let p = probs(vec![[0.6, 0.2], [0.4, 0.8]]);
        assert_eq!(subgradient(&s, &[0.0, 0.0], &p, 0.01), (s.p_avg, s.i_avg));
        let single = probs(vec![[1.0, 1.0]]);
        let (c, _) = subgradient(&s, &[s.p_avg], &single, 0.0);
        assert_eq!(c, 0.0);
    }

    #[test]
    fn single_level_without_sensing() {
        let s = Scenario::reference(1);
        let single = probs(vec![[1.0, 1.0]]);
        let sol = solve_dual(&s, &single, 0.0, &DualState::initial(&s), &DualOptions::default()).unwrap();
        let expect = (s.p_avg).min(s.i_avg / (s.gamma * s.q1()));
        assert!((sol.powers[0] - 5.0 / 3.0).abs() < 1e-9);
        assert!((sol.powers[0] - expect).abs() < 1e-9);
        assert!(sol.converged);
        assert!(sol.state.lambda == 0.0 && sol.state.mu > 0.0);
    }

    #[test]
    fn no_transmission_slot() {
        let s = Scenario::reference(2);
        let p = probs(vec![[0.6, 0.2], [0.4, 0.8]]);
        let sol = solve_dual(&s, &p, s.frame_t, &DualState::initial(&s), &DualOptions::default()).unwrap();
        assert!(sol.powers.iter().all(|&x| x == 0.0));
        assert_eq!(sol.averages.rate, 0.0);
    }

    #[test]
    fn kkt_on_reference_partition() {
        let s = Scenario::reference(4);
        let d = EnergyDistribution::for_scenario(&s, 300).unwrap();
        let part = Partition::equiprobable(&d, crate::statistics::Hypothesis::H0, 4).unwrap();
        let p = d.interval_probs(&part).unwrap();
        let tau = 3e-4;
        let sol = solve_dual(&s, &p, tau, &DualState::initial(&s), &DualOptions::default()).unwrap();
        let (c, dd) = subgradient(&s, &sol.powers, &p, tau);
        assert!(sol.converged);
        assert!(c >= -1e-9 && dd >= -1e-9);
        assert!((sol.state.lambda * c).abs() <= 1e-5 * s.p_avg);
        assert!((sol.state.mu * dd).abs() <= 1e-5 * s.i_avg);
        assert!(sol.gap.abs() <= 1e-5 * sol.averages.rate);
    }

    #[test]
    fn pinned_interval_stays_off() {
        let s = Scenario::reference(2);
        let p = probs(vec![[0.9, 0.1], [0.1, 0.9]]);
        let sol = solve_dual_pinned(&s, &p, 0.001, &DualState::initial(&s), &DualOptions::default(), &[false, true]).unwrap();
        assert_eq!(sol.powers[1], 0.0);
        let c = s.transmit_fraction(0.001);
        let cap_power = s.p_avg / (c * (s.q0 * 0.9 + s.q1() * 0.1));
        let cap_interf = s.i_avg / (c * s.q1() * s.gamma * 0.1);
        assert!((sol.powers[0] - cap_power.min(cap_interf)).abs() < 1e-9 * cap_power);
    }
}
