//! Upper bounds on the expected posterior entropy after more features arrive.
//!
//! Given the current differential distance `delta1` and the total gain `G` of
//! the features about to be sent, the future differential distance is an
//! equal mixture of `N(delta1 +- G/2, G)`. Its expected entropy has no closed
//! form, so the chain used for control is
//!
//! ```text
//! E[H(delta)] <= E[H_ub(delta)] <= c1 * exp(-c2 * G)
//! ```
//!
//! with `H_ub(d) = (1 + |d|) e^{-|d|}`. The middle term is evaluated by
//! adaptive quadrature; the last one is calibrated on the finite set of gains
//! the controller can actually reach.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::linclass::{binary_entropy, distances, PartialFeatureVector};
use crate::quad::adaptive_simpson;
use crate::statmodel::GmModel;

/// Absolute tolerance used for `E[H_ub]` in the control path.
pub const DEFAULT_QUAD_TOL: f64 = 1e-9;

/// Decay rate of the fixed exponential envelope.
pub const FIXED_DECAY: f64 = 0.125;

/// Number of candidate decay rates tried by [`BoundFit::Fitted`].
const FIT_STEPS: usize = 64;

/// Half-width of the integration window, in standard deviations.
const WINDOW_SIGMAS: f64 = 10.0;

/// `(1 + |d|) e^{-|d|}`.
pub fn h_ub(delta: f64) -> f64 {
    let a = delta.abs();
    (1.0 + a) * (-a).exp()
}

/// Distribution of the differential distance after features of total gain
/// `gain` are added to a vector whose current differential distance is
/// `base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMixture {
    base: f64,
    gain: f64,
}

impl DeltaMixture {
    pub fn new(base: f64, gain: f64) -> Result<Self> {
        if !(gain >= 0.0) {
            return Err(Error::NegativeMixtureGain(gain));
        }
        Ok(DeltaMixture { base, gain })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Component means `(base - G/2, base + G/2)`, each with weight 1/2.
    pub fn means(&self) -> (f64, f64) {
        (self.base - 0.5 * self.gain, self.base + 0.5 * self.gain)
    }

    /// Common component variance, equal to the gain.
    pub fn variance(&self) -> f64 {
        self.gain
    }

    pub fn weights(&self) -> [f64; 2] {
        [0.5, 0.5]
    }

    pub fn is_point_mass(&self) -> bool {
        self.gain == 0.0
    }

    /// Density; infinite at `base` for a point mass.
    pub fn pdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x == self.base { f64::INFINITY } else { 0.0 };
        }
        let (m1, m2) = self.means();
        let v = self.gain;
        let norm = 0.5 / (2.0 * std::f64::consts::PI * v).sqrt();
        norm * ((-(x - m1).powi(2) / (2.0 * v)).exp() + (-(x - m2).powi(2) / (2.0 * v)).exp())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x >= self.base { 1.0 } else { 0.0 };
        }
        let (m1, m2) = self.means();
        let s = self.gain.sqrt();
        0.5 * (std_normal_cdf((x - m1) / s) + std_normal_cdf((x - m2) / s))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (m1, m2) = self.means();
        let mean = if rng.random_bool(0.5) { m1 } else { m2 };
        let z: f64 = rng.sample(StandardNormal);
        mean + self.gain.sqrt() * z
    }

    /// `E[f(delta)]` by adaptive quadrature over
    /// `[base - G/2 - 10 sqrt(G), base + G/2 + 10 sqrt(G)]`.
    ///
    /// `kinks` are added as panel breaks when they fall inside the window.
    /// A point mass returns `f(base)` without integrating.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, kinks: &[f64], tol: f64) -> Result<f64> {
        if self.is_point_mass() {
            return Ok(f(self.base));
        }
        adaptive_simpson(|x| f(x) * self.pdf(x), &self.breaks(kinks), tol)
    }

    /// Panel breaks for [`expect`](Self::expect).
    fn breaks(&self, kinks: &[f64]) -> Vec<f64> {
        let (m1, m2) = self.means();
        let s = self.gain.sqrt();
        let lo = m1 - WINDOW_SIGMAS * s;
        let hi = m2 + WINDOW_SIGMAS * s;
        // panels no wider than two standard deviations so neither peak is
        // stepped over by the first Simpson estimate
        let panels = ((hi - lo) / (2.0 * s)).ceil().max(1.0) as usize;
        let mut breaks: Vec<f64> = (0..=panels)
            .map(|i| lo + (hi - lo) * i as f64 / panels as f64)
            .collect();
        breaks.extend([m1, m2]);
        breaks.extend(kinks.iter().copied().filter(|k| *k > lo && *k < hi));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[H_ub(delta)]` under [`DeltaMixture`]`(delta1, gain)`, to absolute error
/// `tol`. Exact `h_ub(delta1)` when `gain == 0`.
pub fn expected_h_ub(delta1: f64, gain: f64, tol: f64) -> Result<f64> {
    let mix = DeltaMixture::new(delta1, gain)?;
    if mix.is_point_mass() {
        return Ok(h_ub(delta1));
    }
    // h_ub times the mixture density with the exponents merged, two exp
    // calls per point instead of three
    let (m1, m2) = mix.means();
    let scale = 0.5 / (2.0 * std::f64::consts::PI * gain).sqrt();
    let inv = 0.5 / gain;
    let integrand = |x: f64| {
        let a = x.abs();
        let (d1, d2) = (x - m1, x - m2);
        scale * (1.0 + a) * ((-a - d1 * d1 * inv).exp() + (-a - d2 * d2 * inv).exp())
    };
    adaptive_simpson(integrand, &mix.breaks(&[0.0]), tol)
}

/// How the exponential envelope `c1 * exp(-c2 * G)` is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BoundFit {
    /// `c2 = 1/8`, `c1` the smallest value that bounds every grid point.
    Fixed,
    /// `c2` searched over `(0, 1/8]` to minimise the summed gap to
    /// `E[H_ub]` on the grid, `c1` again the smallest bounding value.
    #[default]
    Fitted,
}

impl std::str::FromStr for BoundFit {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fixed" => Ok(BoundFit::Fixed),
            "fitted" => Ok(BoundFit::Fitted),
            other => Err(format!("unknown bound fit `{other}` (expected fixed or fitted)")),
        }
    }
}

impl std::fmt::Display for BoundFit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundFit::Fixed => "fixed",
            BoundFit::Fitted => "fitted",
        })
    }
}

/// Calibrated envelope `tilde_H(G) = c1 * exp(-c2 * G)` for one `delta1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpBoundParams {
    pub delta1: f64,
    pub c1: f64,
    pub c2: f64,
    pub grid: Vec<f64>,
    /// `E[H_ub]` at each grid point, as used for calibration.
    pub expected: Vec<f64>,
}

impl ExpBoundParams {
    pub fn tilde_h(&self, gain: f64) -> f64 {
        self.c1 * (-self.c2 * gain).exp()
    }
}

/// Fixed-decay calibration: `c2 = 1/8`, `c1 = max_G E[H_ub](delta1, G) e^{G/8}`.
pub fn calibrate_exp_bound(delta1: f64, grid: &[f64], tol: f64) -> Result<ExpBoundParams> {
    calibrate(BoundFit::Fixed, delta1, grid, tol)
}

pub fn calibrate(fit: BoundFit, delta1: f64, grid: &[f64], tol: f64) -> Result<ExpBoundParams> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&g) = grid.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::NegativeMixtureGain(g));
    }
    let mut expected: Vec<f64> = Vec::with_capacity(grid.len());
    for (i, &g) in grid.iter().enumerate() {
        // lookahead grids repeat their last gain once features run out
        let v = match i.checked_sub(1) {
            Some(j) if grid[j] == g => expected[j],
            _ => expected_h_ub(delta1, g, tol)?,
        };
        expected.push(v);
    }
    let (c1, c2) = match fit {
        BoundFit::Fixed => (envelope_height(grid, &expected, FIXED_DECAY), FIXED_DECAY),
        BoundFit::Fitted => fit_decay(grid, &expected),
    };
    Ok(ExpBoundParams {
        delta1,
        c1,
        c2,
        grid: grid.to_vec(),
        expected,
    })
}

fn envelope_height(grid: &[f64], expected: &[f64], c2: f64) -> f64 {
    grid.iter()
        .zip(expected)
        .map(|(g, v)| v * (c2 * g).exp())
        .fold(0.0, f64::max)
}

fn fit_decay(grid: &[f64], expected: &[f64]) -> (f64, f64) {
    let mut best: Option<(f64, f64, f64)> = None;
    // largest decay first so exact ties keep the steeper envelope
    for j in (1..=FIT_STEPS).rev() {
        let c2 = FIXED_DECAY * j as f64 / FIT_STEPS as f64;
        let c1 = envelope_height(grid, expected, c2);
        let gap: f64 = grid
            .iter()
            .zip(expected)
            .map(|(g, v)| c1 * (-c2 * g).exp() - v)
            .sum();
        if best.is_none_or(|(b, _, _)| gap < b) {
            best = Some((gap, c1, c2));
        }
    }
    let (_, c1, c2) = best.expect("at least one candidate decay");
    (c1, c2)
}

/// Sum of pairwise binary entropies, an upper bound on the multi-class
/// posterior entropy. Equals the exact entropy for two classes.
pub fn multiclass_entropy_ub(pfv: &PartialFeatureVector, model: &GmModel) -> Result<f64> {
    let z = distances(pfv, model)?;
    let mut total = 0.0;
    for a in 0..z.len() {
        for b in a + 1..z.len() {
            total += binary_entropy(z[a] - z[b]);
        }
    }
    Ok(total)
}

/// Smallest pairwise `|z_a - z_b|`; the binary differential distance when
/// there are two classes.
pub fn min_pairwise_delta(pfv: &PartialFeatureVector, model: &GmModel) -> Result<f64> {
    let z = distances(pfv, model)?;
    let mut best = f64::INFINITY;
    for a in 0..z.len() {
        for b in a + 1..z.len() {
            best = best.min((z[a] - z[b]).abs());
        }
    }
    Ok(best)
}
