//! Physical scenario of one primary/secondary link pair and the sensing-time grid.
//!
//! Config documents are flat TOML tables. Every power or gain key may be given
//! either in linear units (`g1 = 1.0`) or in decibels with an explicit `_db`
//! suffix (`g1_db = 0.0`), never both. Probabilities, durations, the sampling
//! rate and the level count are always linear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Keys that accept a `_db` variant.
const DB_KEYS: [&str; 8] = ["g1", "g2", "gamma", "h", "n0", "pp", "p_avg", "i_avg"];
/// Keys that are always linear.
const LINEAR_KEYS: [&str; 4] = ["q0", "frame_t", "fs", "m"];

/// Default number of points in the sensing-time search grid.
pub const DEFAULT_TAU_POINTS: usize = 51;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// All parameters of one cognitive-radio instance, in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Channel power gain from the primary transmitter to the secondary transmitter.
    pub g1: f64,
    /// Channel power gain from the primary transmitter to the secondary receiver.
    pub g2: f64,
    /// Channel power gain from the secondary transmitter to the primary receiver.
    pub gamma: f64,
    /// Channel power gain of the secondary link.
    pub h: f64,
    pub n0: f64,
    /// Primary symbol power.
    pub pp: f64,
    /// Probability that the primary user is idle.
    pub q0: f64,
    /// Average transmit-power budget of the secondary user.
    pub p_avg: f64,
    /// Average interference budget at the primary receiver.
    pub i_avg: f64,
    /// Frame duration in seconds.
    pub frame_t: f64,
    /// Sampling frequency in Hz.
    pub fs: f64,
    /// Number of power levels.
    pub m: usize,
}

impl Scenario {
    /// The evaluation setup used throughout the examples and tests: unit gains
    /// and noise, `q0 = 0.7`, `Pp = I_avg = 0.5`, `P_avg = 10 dB`,
    /// `T = 100 ms`, `fs = 1 MHz`.
    pub fn reference(m: usize) -> Self {
        Scenario {
            g1: 1.0,
            g2: 1.0,
            gamma: 1.0,
            h: 1.0,
            n0: 1.0,
            pp: 0.5,
            q0: 0.7,
            p_avg: 10.0,
            i_avg: 0.5,
            frame_t: 0.1,
            fs: 1e6,
            m,
        }
    }

    #[inline]
    pub fn q1(&self) -> f64 {
        1.0 - self.q0
    }

    /// Noise-plus-primary power seen by the secondary receiver when the primary is busy.
    #[inline]
    pub fn busy_noise(&self) -> f64 {
        self.n0 + self.g2 * self.pp
    }

    /// Energy scale of a single received sample when the primary is busy.
    #[inline]
    pub fn busy_sensing_scale(&self) -> f64 {
        self.n0 + self.g1 * self.pp
    }

    /// Fraction of the frame left for transmission after sensing for `tau` seconds.
    #[inline]
    pub fn transmit_fraction(&self, tau: f64) -> f64 {
        ((self.frame_t - tau) / self.frame_t).max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::range(key, format!("must be finite and > 0, got {v}")))
            }
        }
        positive("g1", self.g1)?;
        positive("gamma", self.gamma)?;
        positive("h", self.h)?;
        positive("n0", self.n0)?;
        positive("pp", self.pp)?;
        positive("p_avg", self.p_avg)?;
        positive("i_avg", self.i_avg)?;
        positive("frame_t", self.frame_t)?;
        positive("fs", self.fs)?;
        if !(self.g2.is_finite() && self.g2 >= 0.0) {
            return Err(Error::range("g2", format!("must be finite and >= 0, got {}", self.g2)));
        }
        if !(0.0..=1.0).contains(&self.q0) {
            return Err(Error::range("q0", format!("must lie in [0, 1], got {}", self.q0)));
        }
        if self.m < 1 {
            return Err(Error::range("m", "must be >= 1"));
        }
        if self.frame_t * self.fs < 1.0 {
            return Err(Error::range("frame_t", "frame_t * fs must be >= 1"));
        }
        Ok(())
    }

    /// Parses a flat TOML document into a validated scenario.
    pub fn from_config(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;

        for key in table.keys() {
            let base = key.strip_suffix("_db").unwrap_or(key);
            let known = LINEAR_KEYS.contains(&key.as_str()) || DB_KEYS.contains(&base);
            if !known {
                return Err(Error::UnknownKey(key.clone()));
            }
        }

        let number = |key: &str| -> Result<Option<f64>> {
            match table.get(key) {
                None => Ok(None),
                Some(toml::Value::Float(v)) => Ok(Some(*v)),
                Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
                Some(_) => Err(Error::NotNumeric { key: key.to_string() }),
            }
        };
        let power = |key: &str| -> Result<f64> {
            let db_key = format!("{key}_db");
            match (number(key)?, number(&db_key)?) {
                (Some(_), Some(_)) => Err(Error::DuplicateKey(key.to_string())),
                (Some(v), None) => Ok(v),
                (None, Some(db)) => Ok(db_to_linear(db)),
                (None, None) => Err(Error::MissingKey(key.to_string())),
            }
        };
        let linear = |key: &str| -> Result<f64> { number(key)?.ok_or_else(|| Error::MissingKey(key.to_string())) };

        let m = match table.get("m") {
            None => return Err(Error::MissingKey("m".into())),
            Some(toml::Value::Integer(v)) if *v >= 1 => *v as usize,
            Some(toml::Value::Integer(v)) => return Err(Error::range("m", format!("must be >= 1, got {v}"))),
            Some(_) => return Err(Error::NotNumeric { key: "m".into() }),
        };

        let s = Scenario {
            g1: power("g1")?,
            g2: power("g2")?,
            gamma: power("gamma")?,
            h: power("h")?,
            n0: power("n0")?,
            pp: power("pp")?,
            q0: linear("q0")?,
            p_avg: power("p_avg")?,
            i_avg: power("i_avg")?,
            frame_t: linear("frame_t")?,
            fs: linear("fs")?,
            m,
        };
        s.validate()?;
        Ok(s)
    }

    /// Writes the scenario back out as a linear-unit config document.
    pub fn to_config(&self) -> String {
        toml::to_string(self).expect("scenario fields are plain numbers")
    }

    /// Number of energy samples collected during `tau` seconds of sensing.
    pub fn sample_count(&self, tau: f64) -> Result<u64> {
        if !(tau >= 0.0 && tau <= self.frame_t) {
            return Err(Error::range("tau", format!("must lie in [0, {}], got {tau}", self.frame_t)));
        }
        Ok((tau * self.fs).round() as u64)
    }
}

/// Candidate sensing durations searched by the optimizer.
///
/// With `refine` set, the optimizer also searches the integer sample counts
/// between the best grid point and its two neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig {
    tau_grid: Vec<f64>,
    #[serde(default = "refine_default")]
    refine: bool,
}

fn refine_default() -> bool {
    true
}

impl SensingConfig {
    /// `points` equally spaced durations covering `[0, frame_t]`, both ends included.
    pub fn uniform(s: &Scenario, points: usize) -> Result<Self> {
        let tau_grid = match points {
            0 => return Err(Error::range("tau_grid", "needs at least one point")),
            1 => vec![0.0],
            _ => {
                let last = (points - 1) as f64;
                (0..points)
                    .map(|i| if i + 1 == points { s.frame_t } else { s.frame_t * (i as f64 / last) })
                    .collect()
            }
        };
        Self::from_list(s, tau_grid)
    }

    pub fn from_list(s: &Scenario, tau_grid: Vec<f64>) -> Result<Self> {
        if tau_grid.is_empty() {
            return Err(Error::range("tau_grid", "needs at least one point"));
        }
        for &t in &tau_grid {
            if !(t >= 0.0 && t <= s.frame_t) {
                return Err(Error::range("tau_grid", format!("{t} outside [0, {}]", s.frame_t)));
            }
        }
        if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::range("tau_grid", "must be strictly increasing"));
        }
        Ok(SensingConfig { tau_grid, refine: true })
    }

    pub fn default_for(s: &Scenario) -> Self {
        Self::uniform(s, DEFAULT_TAU_POINTS).expect("default grid is valid")
    }

    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }

    pub fn with_refinement(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn refines(&self) -> bool {
        self.refine
    }
}
