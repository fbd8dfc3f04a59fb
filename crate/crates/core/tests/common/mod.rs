//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the crate's special functions or closed forms.

#![allow(dead_code)]

use cogpower_core::scenario::Scenario;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

// 15-point Kronrod nodes on [0, 1] with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, e) = gk15(f, a, b);
        if e <= tol.max(256.0 * f64::EPSILON * v.abs()) || depth == 0 || (b - a) < 1e-12 * a.abs().max(1.0) {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(f, a, b, tol, 40)
}

/// Lower-tail probability of the unit-scale Gamma law with the given shape,
/// by quadrature of its density normalized by the quadrature total.
pub struct GammaQuadrature {
    shape: f64,
    lo: f64,
    hi: f64,
    total: f64,
}

impl GammaQuadrature {
    pub fn new(shape: f64) -> Self {
        let sd = shape.sqrt();
        let lo = (shape - 15.0 * sd).max(0.0);
        let hi = shape + 15.0 * sd + 40.0;
        let mut q = GammaQuadrature { shape, lo, hi, total: 1.0 };
        q.total = q.raw(lo, hi);
        q
    }

    /// Density up to a constant, rescaled to be of order one at the mode.
    fn kernel(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return if self.shape == 1.0 { 1.0 } else { 0.0 };
        }
        let a1 = self.shape - 1.0;
        if a1 == 0.0 {
            return (-t).exp();
        }
        // a1·[ln(1 + y) − y] with y = t/a1 − 1, summed directly near the mode
        let y = t / a1 - 1.0;
        let bracket = if y.abs() < 0.1 {
            let mut term = y;
            let mut sum = 0.0;
            for k in 2..60 {
                term *= -y;
                sum += term / k as f64;
            }
            sum
        } else {
            y.ln_1p() - y
        };
        (a1 * bracket).exp()
    }

    fn raw(&self, a: f64, b: f64) -> f64 {
        // split at the mode so the peak never falls inside a coarse panel
        let mode = (self.shape - 1.0).max(0.0).clamp(a, b);
        let f = |t: f64| self.kernel(t);
        integrate(&f, a, mode, 1e-15) + integrate(&f, mode, b, 1e-15)
    }

    pub fn lower(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        self.raw(self.lo, x.min(self.hi)) / self.total
    }
}

/// Maximizer of a unimodal function on `[a, b]` by golden-section search.
///
/// `diff(c, d)` returns `f(c) − f(d)`; callers supply a form that stays
/// accurate when `c` and `d` are close, so the search is not limited by the
/// flatness of `f` at its peak.
pub fn golden_max(diff: impl Fn(f64, f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..400 {
        if diff(c, d) >= 0.0 {
            b = d;
            d = c;
            c = b - r * (b - a);
        } else {
            a = c;
            c = d;
            d = a + r * (b - a);
        }
        if b - a <= 1e-16 * b.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Per-interval Lagrangian integrand `L(c) − L(d)` with interval weights
/// `w0 = q0·p_i0` and `w1 = q1·p_i1`.
pub fn lagrangian_diff(s: &Scenario, w0: f64, w1: f64, lambda: f64, mu: f64, c: f64, d: f64) -> f64 {
    let busy = s.n0 + s.g2 * s.pp;
    let dp = c - d;
    // log(1 + c h / N) − log(1 + d h / N) = log1p((c − d) h / (N + d h))
    w0 * (dp * s.h / (s.n0 + d * s.h)).ln_1p() * LOG2_E + w1 * (dp * s.h / (busy + d * s.h)).ln_1p() * LOG2_E
        - (lambda * (w0 + w1) + mu * s.gamma * w1) * dp
}

/// Score of power `p` at energy `x` divided by the H0 density, so densities
/// enter only through their ratio.
pub fn scaled_distortion(s: &Scenario, n: u64, lambda: f64, mu: f64, p: f64, x: f64) -> f64 {
    let q1 = 1.0 - s.q0;
    let busy = s.n0 + s.g2 * s.pp;
    let s0 = s.n0;
    let s1 = s.n0 + s.g1 * s.pp;
    let h0 = s.q0 * (1.0 + p * s.h / s.n0).log2() - lambda * s.q0 * p;
    let h1 = q1 * (1.0 + p * s.h / busy).log2() - lambda * q1 * p - mu * q1 * s.gamma * p;
    let llr = x * (1.0 / s0 - 1.0 / s1) + n as f64 * (s0 / s1).ln();
    h0 + h1 * llr.exp()
}

/// Deterministic pseudo-random stream for building randomized instances.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

/// Random valid scenario with a distinguishable primary signal.
pub fn random_scenario(rng: &mut Lcg, m: usize) -> Scenario {
    Scenario {
        g1: rng.log_uniform(0.1, 10.0),
        g2: rng.log_uniform(0.01, 10.0),
        gamma: rng.log_uniform(0.1, 10.0),
        h: rng.log_uniform(0.1, 10.0),
        n0: rng.log_uniform(0.1, 10.0),
        pp: rng.log_uniform(0.1, 10.0),
        q0: rng.uniform(0.2, 0.9),
        p_avg: rng.log_uniform(0.1, 100.0),
        i_avg: rng.log_uniform(0.05, 5.0),
        frame_t: 0.1,
        fs: 1e4,
        m,
    }
}
