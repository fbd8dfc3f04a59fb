use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cogpower_core::montecarlo::{level_frequencies_check, simulate as run_frames, SimConfig, SimResult};
use cogpower_core::optimizer::{evaluate, solve_strategy, SolveReport, Strategy};
use cogpower_core::scenario::{Scenario, SensingConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{Clock, RunManifest, SweepSpec};
use crate::{Axis, OptimizeArgs, ProblemArgs, SimulateArgs, SweepArgs};

fn load_scenario(path: &Path, m: Option<usize>) -> CliResult<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| CliError::ConfigRead { path: path.into(), source })?;
    let config = |source| CliError::Config { path: path.into(), source };
    let mut s = Scenario::from_config(&text).map_err(config)?;
    if let Some(m) = m {
        s.m = m;
        s.validate().map_err(config)?;
    }
    Ok(s)
}

/// A single integer of at least 2 is a point count; anything else is a list of durations.
fn sensing_config(s: &Scenario, spec: &str, refine: bool) -> CliResult<SensingConfig> {
    let spec = spec.trim();
    let cfg = match spec.parse::<usize>() {
        Ok(points) if points >= 2 => SensingConfig::uniform(s, points),
        _ => {
            let taus = spec
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--tau-grid: `{t}` is not a number"))))
                .collect::<CliResult<Vec<_>>>()?;
            SensingConfig::from_list(s, taus)
        }
    };
    Ok(cfg.map_err(|e| CliError::Usage(format!("--tau-grid: {e}")))?.with_refinement(refine))
}

fn strategies_or(list: &[Strategy], default: &[Strategy]) -> Vec<Strategy> {
    let mut v = if list.is_empty() { default.to_vec() } else { list.to_vec() };
    v.sort();
    v.dedup();
    v
}

fn manifest(command: &str, s: &Scenario, cfg: &SensingConfig, p: &ProblemArgs, strategies: &[Strategy], clock: &Clock) -> RunManifest {
    RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: s.clone(),
        tau_grid: cfg.tau_grid().to_vec(),
        refine_tau: cfg.refines(),
        strategies: strategies.to_vec(),
        target_pd: p.target_pd,
        tolerances: p.tolerances.options(),
        simulation: None,
        sweep: None,
        timings: clock.stop(),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::Io { path: path.into(), source }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut text = serde_json::to_vec_pretty(v).expect("documents contain only plain data");
    text.push(b'\n');
    text
}

#[derive(Serialize, Deserialize)]
pub struct OptimizeDocument {
    pub manifest: RunManifest,
    pub reports: Vec<SolveReport>,
}

pub fn optimize(a: &OptimizeArgs) -> CliResult<()> {
    let clock = Clock::start();
    let p = &a.problem;
    let s = load_scenario(&p.config, p.m)?;
    let cfg = sensing_config(&s, &p.tau_grid, !p.no_refine)?;
    let strategies = strategies_or(&p.strategies, &[Strategy::Proposed]);
    let opts = p.tolerances.options();

    let reports = strategies
        .iter()
        .map(|&k| solve_strategy(k, &s, &cfg, p.target_pd, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let stalled: Vec<String> = reports.iter().filter(|r| !r.converged).map(|r| r.strategy.to_string()).collect();

    let doc = OptimizeDocument {
        manifest: manifest("optimize", &s, &cfg, p, &strategies, &clock),
        reports,
    };
    emit(a.out.as_deref(), &to_json(&doc))?;
    if !stalled.is_empty() {
        return Err(CliError::NotConverged(format!("{} (report written with converged = false)", stalled.join(", "))));
    }
    Ok(())
}

/// One CSV row per (axis value, strategy); unit suffixes are part of the column names.
#[derive(Serialize)]
struct SweepRow {
    axis: &'static str,
    value: f64,
    strategy: Strategy,
    m: usize,
    status: &'static str,
    tau_s: Option<f64>,
    samples: Option<u64>,
    rate_bit_per_s_per_hz: Option<f64>,
    power_lin: Option<f64>,
    interference_lin: Option<f64>,
    lambda: Option<f64>,
    mu: Option<f64>,
    dual_gap: Option<f64>,
    lloyd_iterations: Option<usize>,
    converged: Option<bool>,
    error: String,
}

#[derive(Serialize)]
struct ProfileRow {
    axis: &'static str,
    value: f64,
    strategy: Strategy,
    interval: usize,
    energy_lo: f64,
    /// Written as `inf` for the last interval.
    energy_hi: f64,
    power_lin: f64,
}

fn sweep_cell(base: &Scenario, a: &SweepArgs, value: f64, strategy: Strategy) -> (Scenario, Result<SolveReport, String>) {
    let p = &a.problem;
    let mut s = base.clone();
    match a.axis {
        Axis::PAvg => s.p_avg = value,
        Axis::M => s.m = value as usize,
        Axis::Tau => {}
    }
    let run = || -> CliResult<SolveReport> {
        s.validate().map_err(CliError::Solve)?;
        let cfg = match a.axis {
            Axis::Tau => SensingConfig::from_list(&s, vec![value]).map_err(CliError::Solve)?.with_refinement(false),
            _ => sensing_config(&s, &p.tau_grid, !p.no_refine)?,
        };
        Ok(solve_strategy(strategy, &s, &cfg, p.target_pd, &p.tolerances.options())?)
    };
    let r = run().map_err(|e| e.to_string());
    (s, r)
}

fn parse_values(a: &SweepArgs) -> CliResult<Vec<f64>> {
    let mut values = a
        .values
        .iter()
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|_| CliError::Usage(format!("--values: `{v}` is not a number"))))
        .collect::<CliResult<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("--values: sweep needs at least one value".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage("--values: values must be finite".into()));
    }
    if a.axis == Axis::M && values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
        return Err(CliError::Usage("--values: m values must be positive integers".into()));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

fn csv_bytes<T: Serialize>(rows: &[T], path: &Path) -> CliResult<Vec<u8>> {
    let io = |e: csv::Error| CliError::Io {
        path: path.into(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| io(e.into_error().into()))
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let clock = Clock::start();
    let p = &a.problem;
    let base = load_scenario(&p.config, p.m)?;
    let values = parse_values(a)?;
    let cfg = sensing_config(&base, &p.tau_grid, !p.no_refine)?;
    let strategies = strategies_or(&p.strategies, &Strategy::ALL);

    let cells: Vec<(f64, Strategy)> = values.iter().flat_map(|&v| strategies.iter().map(move |&k| (v, k))).collect();
    // collect keeps cell order, so rows come out sorted by value then strategy
    let results: Vec<_> = cells.par_iter().map(|&(v, k)| (v, k, sweep_cell(&base, a, v, k))).collect();

    let axis = a.axis.name();
    let mut rows = Vec::with_capacity(results.len());
    let mut profile = Vec::new();
    for (value, strategy, (s, r)) in &results {
        let (value, strategy) = (*value, *strategy);
        let mut row = SweepRow {
            axis,
            value,
            strategy,
            m: s.m,
            status: "failed",
            tau_s: None,
            samples: None,
            rate_bit_per_s_per_hz: None,
            power_lin: None,
            interference_lin: None,
            lambda: None,
            mu: None,
            dual_gap: None,
            lloyd_iterations: None,
            converged: None,
            error: String::new(),
        };
        match r {
            Ok(rep) => {
                row.status = "ok";
                row.m = rep.m;
                row.tau_s = Some(rep.policy.tau);
                row.samples = Some(rep.policy.samples);
                row.rate_bit_per_s_per_hz = Some(rep.averages.rate);
                row.power_lin = Some(rep.averages.power);
                row.interference_lin = Some(rep.averages.interference);
                row.lambda = Some(rep.lambda);
                row.mu = Some(rep.mu);
                row.dual_gap = Some(rep.dual_gap);
                row.lloyd_iterations = Some(rep.lloyd_iterations);
                row.converged = Some(rep.converged);
                for (interval, (lo, hi, power)) in rep.policy.profile().into_iter().enumerate() {
                    profile.push(ProfileRow {
                        axis,
                        value,
                        strategy,
                        interval,
                        energy_lo: lo,
                        energy_hi: hi,
                        power_lin: power,
                    });
                }
            }
            Err(e) => row.error = e.clone(),
        }
        rows.push(row);
    }

    let mut m = manifest("sweep", &base, &cfg, p, &strategies, &clock);
    m.sweep = Some(SweepSpec { axis: axis.into(), values });
    let table_path = a.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    emit(a.out.as_deref(), &csv_bytes(&rows, &table_path)?)?;
    if let Some(path) = &a.profile_out {
        emit(Some(path), &csv_bytes(&profile, path)?)?;
    }
    match &a.out {
        Some(out) => {
            let mut name = out.clone().into_os_string();
            name.push(".manifest.json");
            emit(Some(Path::new(&name)), &to_json(&m))?;
        }
        None => eprintln!("{}", serde_json::to_string(&m).expect("plain data")),
    }
    Ok(())
}

/// Empirical-minus-analytic differences in standard errors.
#[derive(Serialize)]
struct Deltas {
    rate_se: f64,
    power_se: f64,
    interference_se: f64,
    /// Largest absolute gap between simulated and analytic interval frequencies.
    frequency_max_abs: f64,
}

#[derive(Serialize)]
struct SimulateDocument {
    manifest: RunManifest,
    policy_file: PathBuf,
    strategy: Strategy,
    analytic: cogpower_core::allocation::Averages,
    result: SimResult,
    deltas: Deltas,
}

fn scenario_diff(a: &Scenario, b: &Scenario) -> Vec<&'static str> {
    let fields: [(&str, f64, f64); 11] = [
        ("g1", a.g1, b.g1),
        ("g2", a.g2, b.g2),
        ("gamma", a.gamma, b.gamma),
        ("h", a.h, b.h),
        ("n0", a.n0, b.n0),
        ("pp", a.pp, b.pp),
        ("q0", a.q0, b.q0),
        ("p_avg", a.p_avg, b.p_avg),
        ("i_avg", a.i_avg, b.i_avg),
        ("frame_t", a.frame_t, b.frame_t),
        ("fs", a.fs, b.fs),
    ];
    fields.iter().filter(|(_, x, y)| x != y).map(|(k, _, _)| *k).collect()
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let clock = Clock::start();
    let mut s = load_scenario(&a.config, None)?;
    let bad = |reason: String| CliError::Policy {
        path: a.policy.clone(),
        reason,
    };
    let text = fs::read_to_string(&a.policy).map_err(|e| bad(e.to_string()))?;
    let doc: OptimizeDocument = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;

    let differs = scenario_diff(&s, &doc.manifest.scenario);
    if !differs.is_empty() {
        return Err(CliError::ScenarioMismatch(format!(
            "{} in {} differs from the policy's scenario in {}",
            differs.join(", "),
            a.config.display(),
            a.policy.display()
        )));
    }
    let report = match a.strategy {
        Some(k) => doc.reports.iter().find(|r| r.strategy == k),
        None => doc.reports.first(),
    }
    .ok_or_else(|| bad("no matching report".into()))?;
    s.m = report.m;
    let pol = &report.policy;

    let sim = SimConfig {
        frames: a.frames,
        seed: a.seed,
        mode: a.mode.into(),
        sample_cap: a.sample_cap,
    };
    let exact = evaluate(&s, pol)?;
    let result = run_frames(&s, pol, &sim)?;
    let deltas = Deltas {
        rate_se: result.rate.z_score(exact.averages.rate),
        power_se: result.power.z_score(exact.averages.power),
        interference_se: result.interference.z_score(exact.averages.interference),
        frequency_max_abs: level_frequencies_check(&result, &exact.probs)?,
    };

    let mut manifest = doc.manifest;
    manifest.command = "simulate".into();
    manifest.version = env!("CARGO_PKG_VERSION").into();
    manifest.scenario = s;
    manifest.strategies = vec![report.strategy];
    manifest.simulation = Some(sim);
    manifest.sweep = None;
    manifest.timings = clock.stop();
    let out = SimulateDocument {
        manifest,
        policy_file: a.policy.clone(),
        strategy: report.strategy,
        analytic: exact.averages,
        result,
        deltas,
    };
    emit(a.out.as_deref(), &to_json(&out))
}
