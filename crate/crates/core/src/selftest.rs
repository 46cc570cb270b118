//! Acceptance suite with independent oracles.
//!
//! Each criterion checks the library against something computed another way:
//! brute-force enumeration, Monte Carlo, a separate binomial implementation,
//! or values evaluated offline at high precision and frozen here. Tolerances
//! and sample sizes are fixed constants so the suite is reproducible.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Discrete};

use crate::bounds::{calibrate, expected_h_ub, h_ub, BoundFit, DeltaMixture, ExpBoundParams, DEFAULT_QUAD_TOL};
use crate::channel::{db_to_linear, ChannelModel};
use crate::error::Result;
use crate::gains::{select, GainTable};
use crate::harness::sweep::run_point;
use crate::linclass::{binary_entropy, differential_distance, PartialFeatureVector};
use crate::protocol::{Metrics, SchemeKind};
use crate::statmodel::{default_profile, GmModel};
use crate::stopping::{
    binom_pmf, convexity_check, gain_profile, phi, stop_fading, stop_gaussian, StoppingPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The criterion's claim is contradicted by direct evaluation.
    Disproved,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail | Status::Disproved => "FAIL",
        };
        format!(
            "{tag} [{:>2}] {} ({:.2}s of {}s): {}",
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str, u64); 11] = [
    (1, "analytic identities", 1),
    (2, "bound chain", 30),
    (3, "asymptotic scaling", 5),
    (4, "differential distance distribution", 10),
    (5, "selection optimality", 10),
    (6, "stopping oracle equivalence", 30),
    (7, "convexity", 10),
    (8, "binomial layer", 20),
    (9, "end-to-end latency ordering", 180),
    (10, "transmission-probability skew", 60),
    (11, "channel arithmetic", 1),
];

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionReport> {
    let mut curves = None;
    CRITERIA.iter().map(|&(id, _, _)| run_one(id, &mut curves)).collect()
}

/// Runs one criterion; 9 and 10 share their Monte Carlo curves through
/// `cache`.
pub fn run_one(id: u8, cache: &mut Option<Curves>) -> CriterionReport {
    let (_, name, budget) = *CRITERIA.iter().find(|c| c.0 == id).expect("unknown criterion");
    let start = Instant::now();
    let outcome = match id {
        1 => analytic_identities(),
        2 => bound_chain(),
        3 => asymptotic_scaling(),
        4 => delta_distribution(),
        5 => selection_optimality(),
        6 => stopping_equivalence(),
        7 => convexity(),
        8 => binomial_layer(),
        9 => ensure_curves(cache).and_then(latency_ordering),
        10 => ensure_curves(cache).and_then(tx_prob_skew),
        _ => channel_arithmetic(),
    };
    let (mut status, mut detail) = outcome.unwrap_or_else(|e| (Status::Fail, format!("error: {e}")));
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget);
    // curve generation is charged to whichever criterion ran it first
    if elapsed > budget && status == Status::Pass {
        status = Status::Fail;
        detail.push_str("; over time budget");
    }
    CriterionReport {
        id,
        name,
        status,
        detail,
        elapsed,
        budget,
    }
}

type Outcome = Result<(Status, String)>;

fn verdict(ok: bool, detail: String) -> Outcome {
    Ok((if ok { Status::Pass } else { Status::Fail }, detail))
}

// ---- 1 ---------------------------------------------------------------------

const IDENTITY_TOL: f64 = 1e-12;
const RATIO_DRAWS: usize = 100_000;
const RATIO_RANGE: f64 = 30.0;
const ARGMAX_TOL: f64 = 1e-6;

fn analytic_identities() -> Outcome {
    let ln2 = std::f64::consts::LN_2;
    let e0 = (binary_entropy(0.0) - ln2).abs();
    let u0 = (h_ub(0.0) - 1.0).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut max_ratio, mut argmax) = (binary_entropy(0.0) / h_ub(0.0), 0.0);
    let mut bound_holds = true;
    for _ in 0..RATIO_DRAWS {
        let d = rng.random_range(-RATIO_RANGE..RATIO_RANGE);
        let (h, u) = (binary_entropy(d), h_ub(d));
        bound_holds &= h <= u;
        if h / u > max_ratio {
            max_ratio = h / u;
            argmax = d;
        }
    }
    let identities = e0 <= IDENTITY_TOL && u0 <= IDENTITY_TOL && bound_holds;
    let claim = max_ratio <= ln2 + IDENTITY_TOL && argmax.abs() <= ARGMAX_TOL;
    let detail = format!(
        "|H(0)-ln2|={e0:.1e}, |H_ub(0)-1|={u0:.1e}, H<=H_ub on all draws: {bound_holds}; \
         max H/H_ub = {max_ratio:.6} at delta = {argmax:.3} (ln 2 = {ln2:.6})"
    );
    if !identities {
        return verdict(false, detail);
    }
    if claim {
        return verdict(true, detail);
    }
    Ok((
        Status::Disproved,
        format!("{detail}; ratio is ln 2 at 0 and rises towards 1, so ln 2 is its minimum, not its maximum"),
    ))
}

// ---- 2 ---------------------------------------------------------------------

const CHAIN_DRAWS: usize = 1_000_000;
const CHAIN_SIGMAS: f64 = 3.0;
const CHAIN_DELTAS: [f64; 2] = [0.0, 1.2];

/// Cumulative gain of the top `m` features, `m = 0..=N`.
fn prefix_gains(profile: &[f64]) -> Vec<f64> {
    let mut g = profile.to_vec();
    g.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for v in g {
        acc += v;
        out.push(acc);
    }
    out
}

fn bound_chain() -> Outcome {
    let grid = prefix_gains(&default_profile());
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut violations = Vec::new();
    let mut worst_slack = f64::INFINITY;
    for &d1 in &CHAIN_DELTAS {
        for fit in [BoundFit::Fitted, BoundFit::Fixed] {
            let bound = calibrate(fit, d1, &grid, DEFAULT_QUAD_TOL)?;
            for (&g, &ub) in grid.iter().zip(&bound.expected) {
                let tilde = bound.tilde_h(g);
                if ub > tilde * (1.0 + 1e-12) {
                    violations.push(format!("{fit} tilde < E[H_ub] at d1={d1}, G={g:.3}"));
                }
            }
        }
        let bound = calibrate(BoundFit::Fitted, d1, &grid, DEFAULT_QUAD_TOL)?;
        for (&g, &ub) in grid.iter().zip(&bound.expected) {
            let mix = DeltaMixture::new(d1, g)?;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..CHAIN_DRAWS {
                let h = binary_entropy(mix.sample(&mut rng));
                s += h;
                s2 += h * h;
            }
            let n = CHAIN_DRAWS as f64;
            let mean = s / n;
            let se = ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
            let slack = ub - (mean - CHAIN_SIGMAS * se);
            worst_slack = worst_slack.min(slack);
            if slack < 0.0 {
                violations.push(format!("MC H above E[H_ub] at d1={d1}, G={g:.3}"));
            }
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "{} grid gains x 2 deltas; min E[H_ub] - (MC - 3SE) = {worst_slack:.2e}{}",
            grid.len(),
            if violations.is_empty() { String::new() } else { format!("; {}", violations.join("; ")) }
        ),
    )
}

// ---- 3 ---------------------------------------------------------------------

const SCALING_GAIN: f64 = 200.0;
const SCALING_REL_TOL: f64 = 0.05;
/// `E[H_ub]` at `G = 200`, evaluated offline with 40-digit quadrature.
const SCALING_ORACLE: [(f64, f64); 2] = [(0.0, 2.683_649_999_720_035e-12), (1.2, 3.145_269_361_527_85e-12)];

fn asymptotic_scaling() -> Outcome {
    let limit = 16.0 / 9.0 * (2.0 / std::f64::consts::PI).sqrt();
    let mut ok = true;
    let mut parts = Vec::new();
    for (d1, oracle) in SCALING_ORACLE {
        let tol = 1e-9 * (-SCALING_GAIN / 8.0).exp();
        let v = expected_h_ub(d1, SCALING_GAIN, tol)?;
        let oracle_err = (v - oracle).abs() / oracle;
        let scaled = v * SCALING_GAIN.sqrt() * (SCALING_GAIN / 8.0).exp() / (2.0 * (d1 / 2.0).cosh());
        let rel = (scaled / limit - 1.0).abs();
        ok &= rel <= SCALING_REL_TOL && oracle_err <= 1e-6;
        parts.push(format!("d1={d1}: scaled {scaled:.4} vs {limit:.4} ({:.1}%), oracle rel err {oracle_err:.1e}", rel * 100.0));
    }
    verdict(ok, parts.join("; "))
}

// ---- 4 ---------------------------------------------------------------------

const KS_DRAWS: usize = 10_000;
const KS_LIMIT: f64 = 0.02;
const KS_INSTANCES: usize = 5;

/// One-sample Kolmogorov-Smirnov distance of `samples` from `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn delta_distribution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for _ in 0..KS_INSTANCES {
        let dim = rng.random_range(6..=20);
        let centroids: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let variances: Vec<f64> = (0..dim).map(|_| rng.random_range(0.3..2.0)).collect();
        let model = GmModel::new(centroids, variances)?;
        let mut dims: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            dims.swap(i, rng.random_range(0..=i));
        }
        let have = rng.random_range(0..dim - 1);
        let send = rng.random_range(1..=dim - have);
        let (received, selected) = (&dims[..have], &dims[have..have + send]);
        let current = model.sample(&mut rng, None)?;
        let pfv = PartialFeatureVector::from_subset(&current.features, received)?;
        let d1 = differential_distance(&pfv, &model, (0, 1))?;
        let table = GainTable::new(&model);
        let mix = DeltaMixture::new(d1, table.subset_gain(selected))?;
        let mut deltas: Vec<f64> = (0..KS_DRAWS)
            .map(|_| {
                let fresh = model.sample(&mut rng, None)?;
                let mut next = pfv.clone();
                let inc: Vec<f64> = selected.iter().map(|&n| fresh.features[n]).collect();
                next.place(selected, &inc)?;
                differential_distance(&next, &model, (0, 1))
            })
            .collect::<Result<_>>()?;
        worst = worst.max(ks_statistic(&mut deltas, |x| mix.cdf(x)));
    }
    verdict(
        worst < KS_LIMIT,
        format!("max KS distance {worst:.4} over {KS_INSTANCES} instances (limit {KS_LIMIT})"),
    )
}

// ---- 5 ---------------------------------------------------------------------

const MAX_ENUM_DIM: usize = 12;

/// Largest total gain of any `size`-subset of `pool`, by enumeration.
fn best_subset_gain(gains: &[f64], pool: &[usize], size: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for bits in 0u32..(1 << pool.len()) {
        if bits.count_ones() as usize != size {
            continue;
        }
        let g: f64 = (0..pool.len()).filter(|i| bits >> i & 1 == 1).map(|i| gains[pool[i]]).sum();
        best = best.max(g);
    }
    best
}

fn selection_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut cases, mut failures) = (0usize, Vec::new());
    for dim in 1..=MAX_ENUM_DIM {
        // coarse values so ties occur
        let gains: Vec<f64> = (0..dim).map(|_| (rng.random_range(0.0..4.0f64) * 4.0).round() / 4.0).collect();
        let table = GainTable::from_gains(gains.clone());
        for have in 0..=dim {
            for _ in 0..2 {
                let mut received = vec![false; dim];
                let mut dims: Vec<usize> = (0..dim).collect();
                for i in (1..dim).rev() {
                    dims.swap(i, rng.random_range(0..=i));
                }
                dims[..have].iter().for_each(|&n| received[n] = true);
                let pool: Vec<usize> = (0..dim).filter(|&n| !received[n]).collect();
                let mut rate_sets: Vec<Vec<usize>> = Vec::new();
                for y0 in 1..=dim {
                    for slots in 1..=3 {
                        rate_sets.push(vec![y0; slots]);
                    }
                }
                for _ in 0..3 {
                    let slots = rng.random_range(1..=4);
                    rate_sets.push((0..slots).map(|_| rng.random_range(0..=dim)).collect());
                }
                for rates in rate_sets {
                    cases += 1;
                    let plan = select(&table, &received, &rates);
                    let mut seen = received.clone();
                    let mut cum = 0;
                    let mut got = 0.0;
                    for (subset, &rate) in plan.subsets.iter().zip(&rates) {
                        cum += rate;
                        let admissible = subset.iter().all(|&n| !std::mem::replace(&mut seen[n], true));
                        got += table.subset_gain(subset);
                        let want = best_subset_gain(&gains, &pool, cum.min(pool.len()));
                        let expected_len = cum.min(pool.len()) - (cum - rate).min(pool.len());
                        if !admissible || subset.len() != expected_len || (got - want).abs() > 1e-12 {
                            failures.push(format!("N={dim} |W|={have} rates={rates:?}"));
                            break;
                        }
                    }
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{cases} (N, W, rates) cases checked against enumeration, {} mismatches{}",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!(", first: {f}"))
        ),
    )
}

// ---- 6, 7, 8: random stopping instances ---------------------------------------

struct Instance {
    table: GainTable,
    received: Vec<bool>,
    y0: usize,
    horizon: usize,
    c0: f64,
    bound: ExpBoundParams,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let dim = rng.random_range(5..=40);
    let gains: Vec<f64> = match rng.random_range(0..3) {
        0 => {
            let (a, r) = (rng.random_range(0.2..3.0), rng.random_range(0.8..1.0));
            (0..dim).map(|n| a * f64::powi(r, n as i32)).collect()
        }
        1 => (0..dim).map(|_| rng.random_range(0.0..2.0)).collect(),
        _ => vec![rng.random_range(0.05..1.5); dim],
    };
    let table = GainTable::from_gains(gains);
    let q = rng.random_range(0.0..0.9);
    let received: Vec<bool> = (0..dim).map(|_| rng.random_bool(q)).collect();
    let y0 = rng.random_range(1..=6);
    let horizon = rng.random_range(1..=8);
    let c0 = 10f64.powf(rng.random_range(-4.0..0.0));
    let d1 = 3.0 * rng.sample::<f64, _>(rand_distr::StandardNormal);
    let fit = if rng.random_bool(0.5) { BoundFit::Fitted } else { BoundFit::Fixed };
    let bound = calibrate(fit, d1, &gain_profile(&table, &received, y0, horizon), DEFAULT_QUAD_TOL)?;
    Ok(Instance {
        table,
        received,
        y0,
        horizon,
        c0,
        bound,
    })
}

impl Instance {
    /// `G*(k)` for `k = 0..=K`, from a fresh sort of the unreceived gains.
    fn oracle_profile(&self) -> Vec<f64> {
        let mut rest: Vec<f64> = (0..self.table.dim())
            .filter(|&n| !self.received[n])
            .map(|n| self.table.gain(n))
            .collect();
        rest.sort_by(|a, b| b.total_cmp(a));
        (0..=self.horizon)
            .map(|k| rest.iter().take(self.y0 * k).sum())
            .collect()
    }

    fn policy(&self) -> Result<StoppingPolicy> {
        StoppingPolicy::new(self.c0, self.horizon)
    }

    fn oracle_phi(&self, k_tx: usize, p_o: f64) -> f64 {
        let profile = self.oracle_profile();
        let dist = Binomial::new(1.0 - p_o, k_tx as u64).expect("valid binomial");
        (0..=k_tx)
            .map(|k| self.bound.tilde_h(profile[k]) * dist.pmf(k as u64))
            .sum()
    }
}

fn brute_argmin(values: &[f64], c0: f64) -> usize {
    let totals: Vec<f64> = values.iter().enumerate().map(|(k, v)| v + c0 * k as f64).collect();
    let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
    totals.iter().position(|&t| t == best).expect("non-empty horizon")
}

const STOP_INSTANCES: usize = 1000;
const OUTAGE_PROBS: [f64; 3] = [0.05, 0.1, 0.3];

fn stopping_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut gauss_bad = 0;
    for _ in 0..STOP_INSTANCES {
        let inst = random_instance(&mut rng)?;
        let d = stop_gaussian(&inst.table, &inst.received, inst.y0, &inst.policy()?, &inst.bound);
        let env: Vec<f64> = inst.oracle_profile().iter().map(|&g| inst.bound.tilde_h(g)).collect();
        let k = brute_argmin(&env, inst.c0);
        if d.planned_k != k || d.transmit != (k >= 1) {
            gauss_bad += 1;
        }
    }
    let mut fading_bad = 0;
    for &p in &OUTAGE_PROBS {
        for _ in 0..STOP_INSTANCES {
            let inst = random_instance(&mut rng)?;
            let d = stop_fading(&inst.table, &inst.received, inst.y0, &inst.policy()?, p, &inst.bound);
            let phis: Vec<f64> = (0..=inst.horizon).map(|k| inst.oracle_phi(k, p)).collect();
            let k = brute_argmin(&phis, inst.c0);
            if d.planned_k != k || d.transmit != (k >= 1) {
                fading_bad += 1;
            }
        }
    }
    verdict(
        gauss_bad == 0 && fading_bad == 0,
        format!(
            "gaussian {gauss_bad}/{STOP_INSTANCES} mismatches, fading {fading_bad}/{} mismatches",
            STOP_INSTANCES * OUTAGE_PROBS.len()
        ),
    )
}

const CONVEXITY_TOL: f64 = 1e-9;

fn convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    let mut concave_bad = 0;
    for i in 0..STOP_INSTANCES {
        let inst = random_instance(&mut rng)?;
        let p = OUTAGE_PROBS[i % OUTAGE_PROBS.len()];
        worst = worst.max(convexity_check(&inst.table, &inst.received, inst.y0, inst.horizon, p, &inst.bound));
        worst = worst.max(convexity_check(&inst.table, &inst.received, inst.y0, inst.horizon, 0.0, &inst.bound));
        // G* is concave iff the per-slot block sums never increase
        let mut rest: Vec<f64> = inst.table.unreceived(&inst.received).map(|n| inst.table.gain(n)).collect();
        rest.extend(std::iter::repeat_n(0.0, inst.y0 * (inst.horizon + 1)));
        let blocks: Vec<f64> = rest.chunks(inst.y0).take(inst.horizon + 1).map(|c| c.iter().sum()).collect();
        if blocks.windows(2).any(|w| w[1] > w[0]) {
            concave_bad += 1;
        }
    }
    verdict(
        worst <= CONVEXITY_TOL && concave_bad == 0,
        format!("max Phi second-difference violation {worst:.2e}, G* concavity failures {concave_bad}"),
    )
}

const PMF_TOL: f64 = 1e-12;
const PHI_SEQUENCES: usize = 100_000;
const PHI_INSTANCES: usize = 10;

fn binomial_layer() -> Outcome {
    let mut worst_norm: f64 = 0.0;
    for n in 0..=20 {
        for p in [0.0, 0.05, 0.1, 0.3, 0.5, 0.9] {
            let s: f64 = (0..=n).map(|k| binom_pmf(k, n, p)).sum();
            worst_norm = worst_norm.max((s - 1.0).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_z: f64 = 0.0;
    for i in 0..PHI_INSTANCES {
        let inst = random_instance(&mut rng)?;
        let p = OUTAGE_PROBS[i % OUTAGE_PROBS.len()];
        let k_tx = rng.random_range(1..=inst.horizon);
        let exact = phi(&inst.table, &inst.received, inst.y0, k_tx, p, &inst.bound);
        let profile = inst.oracle_profile();
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..PHI_SEQUENCES {
            let ok = (0..k_tx).filter(|_| !rng.random_bool(p)).count();
            let v = inst.bound.tilde_h(profile[ok]);
            s += v;
            s2 += v * v;
        }
        let n = PHI_SEQUENCES as f64;
        let mean = s / n;
        let se = ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
        let z = if se > 0.0 { (mean - exact).abs() / se } else if (mean - exact).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    verdict(
        worst_norm <= PMF_TOL && worst_z <= 3.0,
        format!("max |sum pmf - 1| = {worst_norm:.1e}; max |MC - Phi| = {worst_z:.2} SE over {PHI_INSTANCES} instances"),
    )
}

// ---- 9, 10 -----------------------------------------------------------------

pub const CURVE_TRIALS: usize = 10_000;
const CURVE_SEED: u64 = 909;
const CURVE_HORIZON: usize = 5;
const CURVE_FADING_OUTAGE: f64 = 0.1;
const MIN_GAP: f64 = 0.15;
const MID_ACCURACY: f64 = 0.95;
const HIGH_ACCURACY: f64 = 0.985;
const SKEW_MIN_RHO: f64 = 0.9;

/// One point on a latency/accuracy curve.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub control: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct SchemeCurves {
    pub channel: &'static str,
    pub progressftx: Vec<CurvePoint>,
    pub random: Vec<CurvePoint>,
    pub oneshot: Vec<CurvePoint>,
}

#[derive(Debug, Clone)]
pub struct Curves {
    pub gains: Vec<f64>,
    pub channels: Vec<SchemeCurves>,
}

pub fn curve_c0_grid() -> Vec<f64> {
    crate::harness::config::logspace(-3.0, -0.3, 10)
}

fn ensure_curves(cache: &mut Option<Curves>) -> Result<&Curves> {
    if cache.is_none() {
        *cache = Some(build_curves(CURVE_TRIALS)?);
    }
    Ok(cache.as_ref().expect("just filled"))
}

/// Monte Carlo tradeoff curves under the default setting for the Gaussian
/// and fading channels.
pub fn build_curves(trials: usize) -> Result<Curves> {
    let model = GmModel::synthesize(2, &default_profile(), &mut ChaCha8Rng::seed_from_u64(0))?;
    let table = GainTable::new(&model);
    let channels = [
        ("gaussian", ChannelModel::gaussian(20_000.0, 0.01, db_to_linear(4.0), 64.0)?),
        ("fading", ChannelModel::fading(5, CURVE_FADING_OUTAGE)?),
    ];
    let base = StoppingPolicy::new(1.0, CURVE_HORIZON)?;
    let y0 = channels[0].1.features_per_slot()?;
    // one-shot targets placed exactly on the envelope at each plan length,
    // so every reachable k* appears once
    let full = gain_profile(&table, &vec![false; table.dim()], y0, table.dim().div_ceil(y0));
    let envelope = calibrate(base.bound_fit, 0.0, &full, base.quad_tol)?;
    let h0_grid: Vec<f64> = full[1..].iter().map(|&g| envelope.tilde_h(g)).collect();

    let mut out = Vec::new();
    for (name, channel) in channels {
        let run = |scheme, c0: f64| -> Result<Metrics> {
            let policy = StoppingPolicy { cost_per_slot: c0, ..base };
            run_point(&model, &table, channel, policy, scheme, trials, CURVE_SEED)
        };
        let mut curves = SchemeCurves {
            channel: name,
            progressftx: Vec::new(),
            random: Vec::new(),
            oneshot: Vec::new(),
        };
        for c0 in curve_c0_grid() {
            curves.progressftx.push(CurvePoint { control: c0, metrics: run(SchemeKind::ProgressFtx, c0)? });
            curves.random.push(CurvePoint { control: c0, metrics: run(SchemeKind::RandomFeatureStopping, c0)? });
        }
        for &h0 in &h0_grid {
            curves.oneshot.push(CurvePoint { control: h0, metrics: run(SchemeKind::OneShot { h0 }, 1.0)? });
        }
        out.push(curves);
    }
    Ok(Curves {
        gains: table.per_dim().to_vec(),
        channels: out,
    })
}

/// Latency a baseline needs to reach `accuracy`, by linear interpolation
/// on its curve after taking the running maximum of accuracy over
/// increasing latency. `None` outside the accuracy range the curve covers.
pub fn latency_at_accuracy(curve: &[CurvePoint], accuracy: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = curve
        .iter()
        .map(|p| (p.metrics.latency_mean, p.metrics.accuracy))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut env: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (lat, acc) in pts {
        if acc > best {
            best = acc;
            env.push((lat, acc));
        }
    }
    let (first, last) = (env.first()?, env.last()?);
    if accuracy < first.1 || accuracy > last.1 {
        return None;
    }
    if accuracy == first.1 {
        return Some(first.0);
    }
    env.windows(2).find_map(|w| {
        let ((l0, a0), (l1, a1)) = (w[0], w[1]);
        (accuracy > a0 && accuracy <= a1).then(|| l0 + (l1 - l0) * (accuracy - a0) / (a1 - a0))
    })
}

fn latency_ordering(curves: &Curves) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for c in &curves.channels {
        let mut compared = 0;
        let mut worse = Vec::new();
        for p in &c.progressftx {
            let (lat, acc) = (p.metrics.latency_mean, p.metrics.accuracy);
            for (name, base) in [("random", &c.random), ("oneshot", &c.oneshot)] {
                if let Some(b) = latency_at_accuracy(base, acc) {
                    compared += 1;
                    if lat > b {
                        worse.push(format!("{name} at acc {acc:.4}: {lat:.3} > {b:.3}"));
                    }
                }
            }
        }
        let mid = c
            .progressftx
            .iter()
            .min_by(|a, b| {
                (a.metrics.accuracy - MID_ACCURACY)
                    .abs()
                    .total_cmp(&(b.metrics.accuracy - MID_ACCURACY).abs())
            })
            .expect("non-empty curve");
        let acc = mid.metrics.accuracy;
        let better = [&c.random, &c.oneshot]
            .iter()
            .filter_map(|b| latency_at_accuracy(b, acc))
            .fold(f64::INFINITY, f64::min);
        let gap = 1.0 - mid.metrics.latency_mean / better;
        ok &= worse.is_empty() && compared > 0 && gap >= MIN_GAP;
        parts.push(format!(
            "{}: {compared} matched comparisons, {} worse{}; at acc {acc:.4} latency {:.3} vs best baseline {better:.3} ({:.0}% lower)",
            c.channel,
            worse.len(),
            worse.first().map_or(String::new(), |w| format!(" ({w})")),
            mid.metrics.latency_mean,
            gap * 100.0
        ));
    }
    verdict(ok, parts.join("; "))
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        idx[i..=j].iter().for_each(|&k| ranks[k] = r);
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "length mismatch");
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn nearest_accuracy(curve: &[CurvePoint], target: f64) -> &CurvePoint {
    curve
        .iter()
        .min_by(|a, b| (a.metrics.accuracy - target).abs().total_cmp(&(b.metrics.accuracy - target).abs()))
        .expect("non-empty curve")
}

fn tx_prob_skew(curves: &Curves) -> Outcome {
    let c = &curves.channels[0];
    let gains = &curves.gains;
    let n_dims = gains.len() as f64;
    // |rho| beyond 3 / sqrt(N - 1) is unlikely for a flat profile
    let band = 3.0 / (n_dims - 1.0).sqrt();

    let pftx = nearest_accuracy(&c.progressftx, HIGH_ACCURACY);
    let rho = spearman(gains, &pftx.metrics.tx_prob).unwrap_or(0.0);

    let rand_pt = nearest_accuracy(&c.random, HIGH_ACCURACY);
    let rho_rand = spearman(gains, &rand_pt.metrics.tx_prob).unwrap_or(0.0);

    // one-shot sends a fixed set: judge flatness over the dimensions it sends
    let shot = nearest_accuracy(&c.oneshot, HIGH_ACCURACY);
    let sent: Vec<usize> = (0..gains.len()).filter(|&n| shot.metrics.tx_prob[n] > 0.0).collect();
    let sent_gains: Vec<f64> = sent.iter().map(|&n| gains[n]).collect();
    let sent_probs: Vec<f64> = sent.iter().map(|&n| shot.metrics.tx_prob[n]).collect();
    let rho_shot = spearman(&sent_gains, &sent_probs).unwrap_or(0.0);
    let spread = sent_probs.iter().copied().fold(0.0, f64::max) - sent_probs.iter().copied().fold(1.0, f64::min);

    let rel_spread = |p: &[f64]| {
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        (p.iter().copied().fold(0.0, f64::max) - p.iter().copied().fold(1.0, f64::min)) / mean
    };
    let detail = format!(
        "progressftx rho {rho:.3} at acc {:.4} (relative spread {:.2}); random rho {rho_rand:.3} at acc {:.4} \
         (relative spread {:.3}); oneshot rho {rho_shot:.3} over {} sent dims (spread {spread:.3}) at acc {:.4}; \
         noise band {band:.3}",
        pftx.metrics.accuracy,
        rel_spread(&pftx.metrics.tx_prob),
        rand_pt.metrics.accuracy,
        rel_spread(&rand_pt.metrics.tx_prob),
        sent.len(),
        shot.metrics.accuracy
    );
    if rho < SKEW_MIN_RHO || rho_shot.abs() > band {
        return verdict(false, detail);
    }
    if rho_rand.abs() <= band {
        return verdict(true, detail);
    }
    // the random selector is blind to gain but its stopping rule is not:
    // trials whose early picks were weak run longer and draw from a pool
    // already stripped of those picks, tilting the profile slightly
    Ok((
        Status::Disproved,
        format!(
            "{detail}; the random baseline is nearly flat but carries a small systematic tilt \
             that 10^4 trials resolve well beyond the pure-noise band"
        ),
    ))
}

// ---- 11 --------------------------------------------------------------------

fn channel_arithmetic() -> Outcome {
    let y0 = ChannelModel::gaussian(20_000.0, 0.01, db_to_linear(4.0), 64.0)?.features_per_slot()?;
    let y3 = ChannelModel::gaussian(20_000.0, 0.01, 3.0, 64.0)?.features_per_slot()?;
    verdict(y0 == 5 && y3 == 6, format!("Y0 = {y0} at 4 dB, {y3} at snr 3"))
}
