//! Frame-level Monte Carlo estimates of rate, power and interference.
//!
//! Frames are grouped into fixed-size chunks. Chunk `k` draws from a ChaCha8
//! stream keyed by `(seed, k)` and chunk statistics are merged in chunk
//! order, so results are bit-identical whatever the number of worker threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::PowerPolicy;
use crate::scenario::Scenario;
use crate::statistics::IntervalProbs;

/// Frames simulated from one generator stream.
pub const CHUNK_FRAMES: u64 = 8192;
pub const DEFAULT_SAMPLE_CAP: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    /// Draw the energy statistic from its Gamma law.
    DirectEnergy,
    /// Sum `n` squared complex-Gaussian received samples.
    SampleLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub frames: u64,
    pub seed: u64,
    pub mode: SimMode,
    /// Largest `n` accepted in sample-level mode.
    pub sample_cap: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            frames: 100_000,
            seed: 0,
            mode: SimMode::DirectEnergy,
            sample_cap: DEFAULT_SAMPLE_CAP,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Signed distance `(mean − value) / se`; 0 when both agree exactly.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = self.mean - value;
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub frames: u64,
    pub rate: Estimate,
    pub power: Estimate,
    pub interference: Estimate,
    /// Frames drawn under H0 and H1.
    pub hypothesis_counts: [u64; 2],
    /// `[Pr(interval | H0), Pr(interval | H1)]` per interval, in energy order.
    pub frequencies: Vec<[f64; 2]>,
}

/// Running moments of (rate, power, interference) plus interval counts.
#[derive(Clone)]
struct Acc {
    n: u64,
    mean: [f64; 3],
    m2: [f64; 3],
    counts: Vec<[u64; 2]>,
}

impl Acc {
    fn new(m: usize) -> Self {
        Acc {
            n: 0,
            mean: [0.0; 3],
            m2: [0.0; 3],
            counts: vec![[0; 2]; m],
        }
    }

    fn push(&mut self, v: [f64; 3]) {
        self.n += 1;
        let n = self.n as f64;
        for k in 0..3 {
            let d = v[k] - self.mean[k];
            self.mean[k] += d / n;
            self.m2[k] += d * (v[k] - self.mean[k]);
        }
    }

    fn merge(mut self, other: Acc) -> Acc {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for k in 0..3 {
            let d = other.mean[k] - self.mean[k];
            self.mean[k] += d * nb / n;
            self.m2[k] += other.m2[k] + d * d * na * nb / n;
        }
        self.n += other.n;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a[0] += b[0];
            a[1] += b[1];
        }
        self
    }

    fn estimate(&self, k: usize) -> Estimate {
        let n = self.n as f64;
        let se = if self.n > 1 { (self.m2[k] / (n - 1.0) / n).sqrt() } else { 0.0 };
        Estimate { mean: self.mean[k], se }
    }
}

enum Energy {
    Zero,
    Direct([Gamma<f64>; 2]),
    Samples { n: u64, noise_sd: f64, signal_sd: f64 },
}

impl Energy {
    fn draw<R: Rng>(&self, busy: bool, rng: &mut R) -> f64 {
        match self {
            Energy::Zero => 0.0,
            Energy::Direct(laws) => laws[busy as usize].sample(rng),
            Energy::Samples { n, noise_sd, signal_sd } => {
                let mut x = 0.0;
                for _ in 0..*n {
                    let gauss = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };
                    let mut re = noise_sd * gauss(rng);
                    let mut im = noise_sd * gauss(rng);
                    if busy {
                        re += signal_sd * gauss(rng);
                        im += signal_sd * gauss(rng);
                    }
                    x += re * re + im * im;
                }
                x
            }
        }
    }
}

/// Simulates `cfg.frames` independent frames of `pol` in `s`.
pub fn simulate(s: &Scenario, pol: &PowerPolicy, cfg: &SimConfig) -> Result<SimResult> {
    s.validate()?;
    pol.validate(s)?;
    if cfg.frames == 0 {
        return Err(Error::range("frames", "must be at least 1"));
    }
    let n = pol.samples;
    let energy = if n == 0 {
        Energy::Zero
    } else {
        match cfg.mode {
            SimMode::DirectEnergy => {
                let law = |scale: f64| Gamma::new(n as f64, scale).map_err(|e| Error::Domain(format!("gamma sampler: {e}")));
                Energy::Direct([law(s.n0)?, law(s.busy_sensing_scale())?])
            }
            SimMode::SampleLevel => {
                if n > cfg.sample_cap {
                    return Err(Error::SampleCapExceeded { n, cap: cfg.sample_cap });
                }
                // complex Gaussians with variance split evenly over both components
                Energy::Samples {
                    n,
                    noise_sd: (s.n0 / 2.0).sqrt(),
                    signal_sd: (s.g1 * s.pp / 2.0).sqrt(),
                }
            }
        }
    };

    let c = s.transmit_fraction(pol.tau);
    let powers = pol.interval_powers();
    let m = powers.len();
    // per-interval contribution under [H0, H1]
    let rate: Vec<[f64; 2]> = powers
        .iter()
        .map(|&p| [c * (1.0 + p * s.h / s.n0).log2(), c * (1.0 + p * s.h / s.busy_noise()).log2()])
        .collect();
    let (q0, gamma) = (s.q0, s.gamma);

    let chunks = cfg.frames.div_ceil(CHUNK_FRAMES);
    let partials: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k);
            let len = CHUNK_FRAMES.min(cfg.frames - k * CHUNK_FRAMES);
            let mut acc = Acc::new(m);
            for _ in 0..len {
                let busy = rng.random::<f64>() >= q0;
                let x = energy.draw(busy, &mut rng);
                let j = pol.partition.interval_of(x);
                acc.counts[j][busy as usize] += 1;
                let p = powers[j];
                let interference = if busy { c * gamma * p } else { 0.0 };
                acc.push([rate[j][busy as usize], c * p, interference]);
            }
            acc
        })
        .collect();
    let total = partials.into_iter().fold(Acc::new(m), Acc::merge);

    let hyp = [0, 1].map(|h| total.counts.iter().map(|c| c[h]).sum::<u64>());
    let frequencies = total
        .counts
        .iter()
        .map(|c| [0, 1].map(|h| if hyp[h] == 0 { 0.0 } else { c[h] as f64 / hyp[h] as f64 }))
        .collect();
    Ok(SimResult {
        frames: cfg.frames,
        rate: total.estimate(0),
        power: total.estimate(1),
        interference: total.estimate(2),
        hypothesis_counts: hyp,
        frequencies,
    })
}

/// Largest absolute gap between empirical and analytic interval frequencies.
pub fn level_frequencies_check(r: &SimResult, probs: &IntervalProbs) -> Result<f64> {
    if r.frequencies.len() != probs.len() {
        return Err(Error::Mismatch(format!(
            "{} simulated intervals but {} probability rows",
            r.frequencies.len(),
            probs.len()
        )));
    }
    Ok(r.frequencies
        .iter()
        .zip(probs.rows())
        .flat_map(|(f, p)| [(f[0] - p[0]).abs(), (f[1] - p[1]).abs()])
        .fold(0.0, f64::max))
}
