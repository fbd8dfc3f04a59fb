use std::time::{Instant, SystemTime, UNIX_EPOCH};

use cogpower_core::montecarlo::SimConfig;
use cogpower_core::optimizer::{LloydOptions, Strategy};
use cogpower_core::scenario::Scenario;
use serde::{Deserialize, Serialize};

/// Everything needed to rerun a command and get the same numbers back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub scenario: Scenario,
    /// Sensing durations searched, in seconds.
    pub tau_grid: Vec<f64>,
    pub refine_tau: bool,
    pub strategies: Vec<Strategy>,
    pub target_pd: f64,
    pub tolerances: LloydOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub timings: Timings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub started_unix_s: f64,
    pub elapsed_s: f64,
}

pub struct Clock {
    started: f64,
    t0: Instant,
}

impl Clock {
    pub fn start() -> Self {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Clock { started, t0: Instant::now() }
    }

    pub fn stop(&self) -> Timings {
        Timings {
            started_unix_s: self.started,
            elapsed_s: self.t0.elapsed().as_secs_f64(),
        }
    }
}
