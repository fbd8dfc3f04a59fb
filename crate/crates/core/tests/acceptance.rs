//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p cogpower-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cogpower_core::allocation::{closed_form_power, solve_dual, DualOptions, DualState};
use cogpower_core::montecarlo::{simulate, SimConfig, SimMode};
use cogpower_core::optimizer::{
    baseline_binary, baseline_osa, baseline_underlay, evaluate, lloyd_solve, solve, LloydOptions, PowerPolicy, SolveReport,
};
use cogpower_core::partition::{design_partition, DistortionParams, Partition};
use cogpower_core::scenario::{Scenario, SensingConfig};
use cogpower_core::statistics::{interval_probs_for, reg_lower_gamma, EnergyDistribution, Hypothesis};

use common::{golden_max, lagrangian_diff, random_scenario, scaled_distortion, GammaQuadrature, Lcg};

const TARGET_PD: f64 = 0.9;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2}s (limit {}s)", t.as_secs_f64(), limit.as_secs()))
}

fn reference_report(m: usize) -> SolveReport {
    let s = Scenario::reference(m);
    solve(&s, &SensingConfig::default_for(&s), &LloydOptions::default()).expect("reference solve")
}

/// Power used at the highest energies actually reachable.
fn top_power(pol: &PowerPolicy) -> f64 {
    pol.profile().last().map(|&(_, _, p)| p).unwrap_or(0.0)
}

fn special_function_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0.0);
    for &a in &[1.0, 10.0, 1e3, 1e5] {
        let q = GammaQuadrature::new(a);
        let sd = f64::sqrt(a);
        let lo = (a - 6.0 * sd).max(0.0);
        let hi = a + 8.0 * sd;
        for k in 0..50 {
            let x = lo + (hi - lo) * (k as f64 + 0.5) / 50.0;
            let err = (reg_lower_gamma(a, x).map_err(|e| e.to_string())? - q.lower(x)).abs();
            if err > worst {
                worst = err;
                at = (a, x);
            }
        }
    }
    let (fast, t) = within(Duration::from_secs(10), start);
    check(
        worst <= 1e-8 && fast,
        format!("max |P - quadrature| = {worst:.2e} at (a, x) = {at:?}; {t}"),
    )
}

fn partition_oracle() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut ties = 0usize;
    let mut mismatches = Vec::new();
    for m in [2usize, 3, 4] {
        let rep = reference_report(m);
        let s = Scenario::reference(m);
        let n = rep.policy.samples;
        let dp = DistortionParams {
            scenario: &s,
            n,
            powers: &rep.policy.powers,
            lambda: rep.lambda,
            mu: rep.mu,
        };
        let part = design_partition(&dp).map_err(|e| e.to_string())?;
        let dist = EnergyDistribution::for_scenario(&s, n).map_err(|e| e.to_string())?;
        let lo = dist.quantile(Hypothesis::H0, 1e-6).map_err(|e| e.to_string())?;
        let hi = dist.quantile(Hypothesis::H1, 1.0 - 1e-6).map_err(|e| e.to_string())?;
        let interior: Vec<f64> = part.thresholds().iter().copied().filter(|t| *t > 0.0 && t.is_finite()).collect();
        for k in 0..10_000 {
            let x = lo + (hi - lo) * k as f64 / 9_999.0;
            if interior.iter().any(|t| (x - t).abs() <= 1e-6 * t.abs()) {
                continue;
            }
            checked += 1;
            let scores: Vec<f64> = rep
                .policy
                .powers
                .iter()
                .map(|&p| scaled_distortion(&s, n, rep.lambda, rep.mu, p, x))
                .collect();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scale = scores.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let winners: Vec<usize> = (0..m).filter(|&i| scores[i] >= best - 1e-12 * scale).collect();
            let level = part.level_of(x);
            if winners.len() > 1 {
                ties += 1;
            }
            if !winners.contains(&level) {
                mismatches.push((m, x, level, winners));
            }
        }
    }
    let (fast, t) = within(Duration::from_secs(5), start);
    check(
        mismatches.is_empty() && fast,
        format!(
            "{checked} grid points, {} disagreements, {ties} exact ties between identical levels{}; {t}",
            mismatches.len(),
            mismatches.first().map(|f| format!(", first {f:?}")).unwrap_or_default()
        ),
    )
}

fn closed_form_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = Lcg::new(3);
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for _ in 0..100 {
        let m = 1 + rng.below(5);
        let s = random_scenario(&mut rng, m);
        let n = 1 + rng.below(2000) as u64;
        let dist = EnergyDistribution::for_scenario(&s, n).map_err(|e| e.to_string())?;
        let lo = dist.quantile(Hypothesis::H0, 1e-3).map_err(|e| e.to_string())?;
        let hi = dist.quantile(Hypothesis::H1, 1.0 - 1e-3).map_err(|e| e.to_string())?;
        let mut cuts: Vec<f64> = (1..m).map(|_| rng.uniform(lo, hi)).collect();
        cuts.sort_by(f64::total_cmp);
        let part = Partition::from_thresholds(cuts).map_err(|e| e.to_string())?;
        let probs = dist.interval_probs(&part).map_err(|e| e.to_string())?;
        let lambda = rng.log_uniform(1e-3, 10.0) / s.p_avg;
        let mu = if rng.next_f64() < 0.2 { 0.0 } else { rng.log_uniform(1e-3, 10.0) / s.i_avg };
        let powers = closed_form_power(&s, &probs, &DualState::new(lambda, mu)).map_err(|e| e.to_string())?;
        for i in 0..m {
            let w0 = s.q0 * probs.idle(i);
            let w1 = s.q1() * probs.busy(i);
            if w0 + w1 == 0.0 {
                continue;
            }
            let k = lambda * (w0 + w1) + mu * s.gamma * w1;
            // the integrand decreases beyond log2(e)(w0 + w1)/k
            let cap = std::f64::consts::LOG2_E * (w0 + w1) / k;
            let p = golden_max(|c, d| lagrangian_diff(&s, w0, w1, lambda, mu, c, d), 0.0, cap);
            let floor = 1e-12 * (s.n0 / s.h);
            let rel = if (powers[i] - p).abs() <= floor { 0.0 } else { (powers[i] - p).abs() / powers[i].abs().max(p.abs()) };
            worst = worst.max(rel);
            compared += 1;
        }
    }
    let (fast, t) = within(Duration::from_secs(30), start);
    check(
        worst <= 1e-6 && fast,
        format!("{compared} intervals over 100 instances, worst relative gap {worst:.2e}; {t}"),
    )
}

fn brute_force_equivalence() -> Outcome {
    let start = Instant::now();
    let s = Scenario::reference(2);
    let tau = 0.0025;
    let cfg = SensingConfig::from_list(&s, vec![tau]).map_err(|e| e.to_string())?;
    let rep = solve(&s, &cfg, &LloydOptions::default()).map_err(|e| e.to_string())?;

    let n = s.sample_count(tau).map_err(|e| e.to_string())?;
    let c = s.transmit_fraction(tau);
    let dist = EnergyDistribution::for_scenario(&s, n).map_err(|e| e.to_string())?;
    let lo = dist.quantile(Hypothesis::H0, 1e-6).map_err(|e| e.to_string())?;
    let hi = dist.quantile(Hypothesis::H1, 1.0 - 1e-6).map_err(|e| e.to_string())?;
    let (q0, q1) = (s.q0, s.q1());
    let busy = s.n0 + s.g2 * s.pp;
    let rate = |p: f64, p0: f64, p1: f64| q0 * p0 * (1.0 + p * s.h / s.n0).log2() + q1 * p1 * (1.0 + p * s.h / busy).log2();
    let mut best = (0.0, 0.0, 0.0, 0.0);
    for a in 0..500 {
        let eta = lo + (hi - lo) * a as f64 / 499.0;
        let (l0, u0) = dist.cdf_pair(eta, Hypothesis::H0).map_err(|e| e.to_string())?;
        let (l1, u1) = dist.cdf_pair(eta, Hypothesis::H1).map_err(|e| e.to_string())?;
        let (pow1, pow2) = (c * (q0 * l0 + q1 * l1), c * (q0 * u0 + q1 * u1));
        let (int1, int2) = (c * q1 * s.gamma * l1, c * q1 * s.gamma * u1);
        let p1_max = (s.p_avg / pow1).min(s.i_avg / int1);
        for b in 0..500 {
            let p1 = p1_max * b as f64 / 499.0;
            // second level takes whatever both budgets still allow
            let p2 = ((s.p_avg - pow1 * p1) / pow2).min((s.i_avg - int1 * p1) / int2).max(0.0);
            let r = c * (rate(p1, l0, l1) + rate(p2, u0, u1));
            if r > best.0 {
                best = (r, eta, p1, p2);
            }
        }
    }
    let gap = rep.averages.rate - best.0;
    let (fast, t) = within(Duration::from_secs(120), start);
    check(
        gap.abs() <= 1e-3 && fast,
        format!(
            "alternating solver {:.6}, grid best {:.6} at eta={:.1} P=({:.4}, {:.4}); difference {gap:+.2e}; {t}",
            rep.averages.rate, best.0, best.1, best.2, best.3
        ),
    )
}

fn monotone_powers() -> Outcome {
    let mut rng = Lcg::new(11);
    let mut converged = 0usize;
    let mut attempts = 0usize;
    let mut violations = Vec::new();
    let opts = LloydOptions::default();
    while converged < 100 && attempts < 400 {
        attempts += 1;
        let m = 2 + rng.below(4);
        let s = random_scenario(&mut rng, m);
        let tau = 0.001 * (1 + rng.below(40)) as f64;
        let cfg = SensingConfig::from_list(&s, vec![tau]).map_err(|e| e.to_string())?;
        let Ok(rep) = solve(&s, &cfg, &opts) else { continue };
        if !rep.converged {
            continue;
        }
        converged += 1;
        let p = rep.policy.interval_powers();
        for j in 1..p.len() {
            if p[j] > p[j - 1] + 1e-9 * p[j - 1].max(1.0) {
                violations.push((attempts, j, p[j - 1], p[j]));
            }
        }
    }
    check(
        converged >= 100 && violations.is_empty(),
        format!(
            "{converged} converged policies from {attempts} random scenarios, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first {v:?}")).unwrap_or_default()
        ),
    )
}

struct Kkt {
    worst_feasibility: f64,
    worst_slackness: f64,
    /// Largest `|λC| / P̄` or `|μD| / Ī`.
    worst_product: f64,
    worst_gap: f64,
    policies: usize,
}

impl Kkt {
    fn record(&mut self, s: &Scenario, rep: &SolveReport) -> Result<(), String> {
        self.policies += 1;
        let a = rep.averages;
        self.worst_feasibility = self
            .worst_feasibility
            .max(a.power / s.p_avg - 1.0)
            .max(a.interference / s.i_avg - 1.0);
        self.worst_product = self
            .worst_product
            .max((rep.lambda * (s.p_avg - a.power)).abs() / s.p_avg)
            .max((rep.mu * (s.i_avg - a.interference)).abs() / s.i_avg);
        if rep.lambda > 0.0 {
            self.worst_slackness = self.worst_slackness.max((s.p_avg - a.power).abs() / s.p_avg);
        }
        if rep.mu > 0.0 {
            self.worst_slackness = self.worst_slackness.max((s.i_avg - a.interference).abs() / s.i_avg);
        }
        // fixed-partition dual solve on the returned intervals
        if rep.policy.strategy == cogpower_core::optimizer::Strategy::Proposed && a.rate > 0.0 {
            let probs = interval_probs_for(s, rep.policy.samples, &rep.policy.partition).map_err(|e| e.to_string())?;
            let sol = solve_dual(s, &probs, rep.policy.tau, &DualState::initial(s), &DualOptions::default()).map_err(|e| e.to_string())?;
            self.worst_gap = self.worst_gap.max(sol.gap.abs() / sol.averages.rate);
        }
        Ok(())
    }
}

fn feasibility_and_kkt() -> Outcome {
    let mut k = Kkt {
        worst_feasibility: f64::NEG_INFINITY,
        worst_slackness: 0.0,
        worst_product: 0.0,
        worst_gap: 0.0,
        policies: 0,
    };
    let opts = LloydOptions::default();
    for m in [1usize, 2, 4, 8] {
        let s = Scenario::reference(m);
        k.record(&s, &reference_report(m))?;
    }
    for p_avg in [0.1, 1.0, 10.0, 100.0] {
        let mut s = Scenario::reference(2);
        s.p_avg = p_avg;
        let cfg = SensingConfig::default_for(&s);
        k.record(&s, &baseline_underlay(&s).map_err(|e| e.to_string())?)?;
        k.record(&s, &baseline_osa(&s, &cfg, TARGET_PD, &opts).map_err(|e| e.to_string())?)?;
        k.record(&s, &baseline_binary(&s, &cfg, TARGET_PD, &opts).map_err(|e| e.to_string())?)?;
    }
    let mut rng = Lcg::new(29);
    for _ in 0..30 {
        let m = 1 + rng.below(4);
        let s = random_scenario(&mut rng, m);
        let cfg = SensingConfig::uniform(&s, 11).map_err(|e| e.to_string())?;
        if let Ok(rep) = solve(&s, &cfg, &opts) {
            k.record(&s, &rep)?;
        }
    }
    check(
        k.worst_feasibility <= 1e-6 && k.worst_slackness <= 1e-5 && k.worst_product <= 1e-5 && k.worst_gap <= 1e-5,
        format!(
            "{} policies: worst budget excess {:.2e}, worst active-constraint slack {:.2e}, worst |multiplier x slack|/budget {:.2e}, worst relative dual gap {:.2e}",
            k.policies, k.worst_feasibility, k.worst_slackness, k.worst_product, k.worst_gap
        ),
    )
}

fn monte_carlo_cross_validation() -> Outcome {
    let start = Instant::now();
    let s = Scenario::reference(4);
    let rep = reference_report(4);
    let r = simulate(&s, &rep.policy, &SimConfig { frames: 100_000, seed: 7, ..Default::default() }).map_err(|e| e.to_string())?;
    let z = [
        r.rate.z_score(rep.averages.rate),
        r.power.z_score(rep.averages.power),
        r.interference.z_score(rep.averages.interference),
    ];
    let (fast, t) = within(Duration::from_secs(60), start);
    check(
        z.iter().all(|v| v.abs() <= 3.0) && fast,
        format!("z-scores rate {:+.2}, power {:+.2}, interference {:+.2}; {t}", z[0], z[1], z[2]),
    )
}

fn fig3_trends() -> Outcome {
    let start = Instant::now();
    let opts = LloydOptions::default();
    let mut grid = vec![0.1, 1.0, 10.0];
    grid.extend((1..=20).map(|k| 50.0 * k as f64));
    let names = ["proposed", "underlay", "osa", "binary"];
    let mut rows = Vec::new();
    for &p_avg in &grid {
        let mut s = Scenario::reference(4);
        s.p_avg = p_avg;
        let cfg = SensingConfig::default_for(&s);
        let e = |r: cogpower_core::Result<SolveReport>| r.map(|r| r.averages.rate).map_err(|e| e.to_string());
        rows.push([
            e(solve(&s, &cfg, &opts))?,
            e(baseline_underlay(&s))?,
            e(baseline_osa(&s, &cfg, TARGET_PD, &opts))?,
            e(baseline_binary(&s, &cfg, TARGET_PD, &opts))?,
        ]);
    }
    let dominance = rows.iter().zip(&grid).filter(|(r, _)| r[1..].iter().any(|&b| r[0] < b - 1e-6)).map(|(_, p)| *p).collect::<Vec<_>>();

    let by_m: Vec<f64> = [1usize, 2, 4, 8, 64].iter().map(|&m| reference_report(m).averages.rate).collect();
    let monotone = by_m.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    let (r1, r4, r64) = (by_m[0], by_m[2], by_m[4]);
    let diminishing = r64 - r4 <= 0.1 * (r64 - r1);

    let i500 = grid.iter().position(|&p| p == 500.0).unwrap();
    let i1000 = grid.iter().position(|&p| p == 1000.0).unwrap();
    let unsaturated: Vec<String> = (0..4)
        .filter(|&k| (rows[i500][k] - rows[i1000][k]).abs() > 1e-3)
        .map(|k| format!("{} {:.4} -> {:.4}", names[k], rows[i500][k], rows[i1000][k]))
        .collect();

    let (fast, t) = within(Duration::from_secs(900), start);
    let parts = [
        format!("(a) dominance {}", if dominance.is_empty() { "ok".to_string() } else { format!("violated at P={dominance:?}") }),
        format!("(b) rates over M=1,2,4,8,64 {by_m:.6?} {}", if monotone { "ok" } else { "not monotone" }),
        format!("(c) M=64 vs M=4 gain {:.2e} of {:.2e} {}", r64 - r4, r64 - r1, if diminishing { "ok" } else { "too large" }),
        format!("(d) saturation {}", if unsaturated.is_empty() { "ok".to_string() } else { format!("fails for {}", unsaturated.join(", ")) }),
    ];
    check(dominance.is_empty() && monotone && diminishing && unsaturated.is_empty() && fast, format!("{}; {t}", parts.join("; ")))
}

fn fig2_trend() -> Outcome {
    let s = Scenario::reference(4);
    let under = baseline_underlay(&s).map_err(|e| e.to_string())?.policy.powers[0];
    let mut details = Vec::new();
    let mut ok = true;
    for m in [4usize, 8] {
        let rep = reference_report(m);
        let p1 = rep.policy.powers[0];
        let pm = top_power(&rep.policy);
        let order = p1 > under && under > pm;
        let budget = rep.lambda <= 0.0 || (rep.averages.power - s.p_avg).abs() <= 1e-6 * s.p_avg;
        ok &= order && budget;
        details.push(format!(
            "M={m}: P1={p1:.4} underlay={under:.4} P_M={pm:.4} ({}), power {:.8} vs budget {} ({})",
            if order { "ordered" } else { "ordering fails" },
            rep.averages.power,
            s.p_avg,
            if budget { "binding" } else { "off budget" }
        ));
    }
    check(ok, details.join("; "))
}

fn simulator_mode_equivalence() -> Outcome {
    let s = Scenario::reference(4);
    let tau = 0.0005;
    let n = s.sample_count(tau).map_err(|e| e.to_string())?;
    let dist = EnergyDistribution::for_scenario(&s, n).map_err(|e| e.to_string())?;
    let optimized = lloyd_solve(
        &s,
        tau,
        &Partition::equiprobable(&dist, Hypothesis::H0, 4).map_err(|e| e.to_string())?,
        &LloydOptions::default(),
    )
    .map_err(|e| e.to_string())?
    .policy;
    let mut spread = optimized.clone();
    spread.partition = Partition::log_uniform(&dist, 4).map_err(|e| e.to_string())?;

    let mut worst: f64 = 0.0;
    for pol in [&optimized, &spread] {
        let probs = evaluate(&s, pol).map_err(|e| e.to_string())?.probs;
        let run = |mode, seed| simulate(&s, pol, &SimConfig { frames: 100_000, seed, mode, ..Default::default() });
        let direct = run(SimMode::DirectEnergy, 1).map_err(|e| e.to_string())?;
        let samples = run(SimMode::SampleLevel, 2).map_err(|e| e.to_string())?;
        for (j, row) in probs.rows().iter().enumerate() {
            for h in 0..2 {
                let p = row[h];
                let se = (p * (1.0 - p) * (1.0 / direct.hypothesis_counts[h] as f64 + 1.0 / samples.hypothesis_counts[h] as f64)).sqrt();
                let d = (direct.frequencies[j][h] - samples.frequencies[j][h]).abs();
                let z = if d == 0.0 { 0.0 } else { d / se };
                worst = worst.max(z);
            }
        }
    }
    check(worst <= 4.0, format!("n = {n}, worst frequency difference {worst:.2} binomial SEs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("special-function oracle", special_function_oracle),
        ("partition oracle", partition_oracle),
        ("closed-form power oracle", closed_form_oracle),
        ("brute-force equivalence", brute_force_equivalence),
        ("monotone powers", monotone_powers),
        ("feasibility and KKT", feasibility_and_kkt),
        ("Monte Carlo cross-validation", monte_carlo_cross_validation),
        ("rate-vs-budget trends", fig3_trends),
        ("power-profile trend", fig2_trend),
        ("simulator mode equivalence", simulator_mode_equivalence),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
