//! Reproducible Monte-Carlo infrastructure: deterministic per-replicate
//! random streams, Gaussian noise, piecewise-constant signal builders, and
//! the two experiment drivers (risk-bound validation and best-over-grid
//! pattern recovery). Replicates run in parallel but results are always
//! reported in replicate order, and every draw is a pure function of
//! (master seed, replicate index).

use crate::compatibility::kappa_lower_weighted;
use crate::error::{Error, Result};
use crate::estimator::{lambda_rule, pattern, Design, PATTERN_TOL};
use crate::graph::{decompose, ActiveSet, TreeGraph};
use crate::oracle::{bound_master, OracleBound};
use crate::projection::weight_vectors;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Deterministic stream for one replicate: the generator seed is
/// SHA-256(master_seed_le || replicate_le), so streams are independent of
/// scheduling and reproducible across platforms.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(replicate.to_le_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}

/// Standard normal draws via the Box–Muller transform on 53-bit uniforms;
/// the second variate of each pair is cached. The transform is fixed so a
/// given stream yields identical noise everywhere.
pub struct GaussianStream {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(rng: ChaCha12Rng) -> Self {
        Self { rng, spare: None }
    }

    pub fn for_replicate(master_seed: u64, replicate: u64) -> Self {
        Self::new(replicate_rng(master_seed, replicate))
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        const SCALE: f64 = 1.0 / 9007199254740992.0; // 2^-53
        // u ∈ (0, 1] keeps the logarithm finite; v ∈ [0, 1).
        let u = ((self.rng.next_u64() >> 11) + 1) as f64 * SCALE;
        let v = (self.rng.next_u64() >> 11) as f64 * SCALE;
        let r = (-2.0 * u.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * v).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = self.next_standard();
        }
    }
}

/// Piecewise-constant signal on a path: `jumps` lists the first vertex of
/// each new block (strictly increasing, in 2..=n) and `levels` the block
/// values, one more than there are jumps.
pub fn piecewise_constant(n: usize, jumps: &[usize], levels: &[f64]) -> Result<Vec<f64>> {
    if levels.len() != jumps.len() + 1 {
        return Err(Error::LengthMismatch { expected: jumps.len() + 1, got: levels.len() });
    }
    for w in jumps.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::BadParams(format!("jump positions not increasing: {jumps:?}")));
        }
    }
    if jumps.iter().any(|&j| j < 2 || j > n) {
        return Err(Error::BadParams(format!("jump positions outside 2..={n}: {jumps:?}")));
    }
    let mut f = Vec::with_capacity(n);
    let mut block = 0usize;
    for v in 1..=n {
        if block < jumps.len() && v == jumps[block] {
            block += 1;
        }
        f.push(levels[block]);
    }
    Ok(f)
}

/// Blocks alternating between 0 and `amplitude`: levels 0, a, 0, a, …
pub fn alternating_signal(n: usize, jumps: &[usize], amplitude: f64) -> Result<Vec<f64>> {
    let levels: Vec<f64> =
        (0..=jumps.len()).map(|b| if b % 2 == 0 { 0.0 } else { amplitude }).collect();
    piecewise_constant(n, jumps, &levels)
}

/// Monotone staircase: levels 0, step, 2·step, … — consecutive jumps share
/// a sign, the configuration the irrepresentable condition rules out.
pub fn staircase_signal(n: usize, jumps: &[usize], step: f64) -> Result<Vec<f64>> {
    let levels: Vec<f64> = (0..=jumps.len()).map(|b| b as f64 * step).collect();
    piecewise_constant(n, jumps, &levels)
}

/// True jump set S⁰ of a signal: child vertices whose edge carries a
/// nonzero difference.
pub fn jump_set(g: &TreeGraph, f0: &[f64]) -> Result<ActiveSet> {
    let n = g.n();
    if f0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f0.len() });
    }
    let verts: Vec<usize> =
        (2..=n).filter(|&v| f0[v - 1] != f0[g.parent(v).unwrap() - 1]).collect();
    ActiveSet::new(n, verts)
}

/// sign(Df⁰) over the edges, one entry per child vertex 2..=n.
pub fn sign_pattern_of(g: &TreeGraph, f0: &[f64]) -> Result<Vec<i8>> {
    let n = g.n();
    if f0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f0.len() });
    }
    Ok((2..=n)
        .map(|v| {
            let d = f0[v - 1] - f0[g.parent(v).unwrap() - 1];
            if d == 0.0 {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// One replicate of a bound-validation run.
#[derive(Clone, Debug)]
pub struct ReplicateRow {
    pub replicate: u64,
    pub mse: f64,
    pub bound_holds: bool,
    pub pattern_recovered: bool,
}

/// Outcome of the risk-bound validation experiment.
#[derive(Clone, Debug)]
pub struct BoundValidation {
    pub bound: OracleBound,
    pub lambda: f64,
    pub kappa_w_sq_lower: f64,
    pub replicates: usize,
    pub holds: usize,
    pub hold_rate: f64,
    pub rows: Vec<ReplicateRow>,
}

/// Draws `replicates` noisy observations of `f0`, fits each at the
/// prescribed penalty level, and checks the realized ‖f̂ − f⁰‖²_n against the
/// master bound evaluated at the candidate f = f⁰, S = S⁰ with the computed
/// weighted compatibility lower bound. The bound holds with probability at
/// least 1−δ, so the hold rate should be at least that fraction.
pub fn validate_bound_mc(
    g: &TreeGraph,
    f0: &[f64],
    sigma: f64,
    delta: f64,
    gamma: f64,
    replicates: usize,
    master_seed: u64,
) -> Result<BoundValidation> {
    let n = g.n();
    if f0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f0.len() });
    }
    if replicates == 0 {
        return Err(Error::BadParams("need at least one replicate".into()));
    }
    let s0 = jump_set(g, f0)?;
    if s0.s() == 0 {
        return Err(Error::BadParams("signal has no jumps".into()));
    }
    let lambda = lambda_rule(n, s0.s(), delta, gamma, sigma)?;
    let weights = weight_vectors(g, &s0, gamma)?;
    let dec = decompose(g, &s0, None)?;
    let wlb = kappa_lower_weighted(g, &dec, &weights, &dec.cut_edges)?;
    let bound = bound_master(f0, f0, g, &s0, delta, gamma, sigma, wlb.bound)?;
    let truth = sign_pattern_of(g, f0)?;
    let design = Design::new(g);

    let rows: Vec<ReplicateRow> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> Result<ReplicateRow> {
            let mut gs = GaussianStream::for_replicate(master_seed, rep);
            let y: Vec<f64> = f0.iter().map(|&m| m + sigma * gs.next_standard()).collect();
            let fit = design.fit(&y, lambda, None)?;
            let mse = fit
                .f_hat
                .iter()
                .zip(f0.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n as f64;
            Ok(ReplicateRow {
                replicate: rep,
                mse,
                bound_holds: mse <= bound.total,
                pattern_recovered: pattern(&fit, PATTERN_TOL) == truth,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let holds = rows.iter().filter(|r| r.bound_holds).count();
    Ok(BoundValidation {
        bound,
        lambda,
        kappa_w_sq_lower: wlb.bound,
        replicates,
        holds,
        hold_rate: holds as f64 / replicates as f64,
        rows,
    })
}

/// Outcome of the best-over-grid recovery experiment for one signal.
#[derive(Clone, Debug)]
pub struct RecoveryOutcome {
    pub successes: usize,
    pub replicates: usize,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Per-replicate success flags, in replicate order.
    pub per_replicate: Vec<bool>,
}

/// For each replicate, fits along a geometric grid of `grid_points` penalty
/// levels spanning `decades` decades down from that observation's fusing
/// level λ_max, and counts the replicate a success if any grid point
/// recovers sign(Df⁰) exactly. Warm starts walk the grid from the sparsest
/// fit down.
pub fn recovery_mc(
    g: &TreeGraph,
    f0: &[f64],
    sigma: f64,
    replicates: usize,
    master_seed: u64,
    grid_points: usize,
    decades: f64,
) -> Result<RecoveryOutcome> {
    let n = g.n();
    if f0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f0.len() });
    }
    if replicates == 0 || grid_points == 0 {
        return Err(Error::BadParams("need at least one replicate and one grid point".into()));
    }
    if !(decades > 0.0) {
        return Err(Error::BadParams(format!("decades = {decades} must be positive")));
    }
    let truth = sign_pattern_of(g, f0)?;
    let design = Design::new(g);

    let per_replicate: Vec<bool> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| -> Result<bool> {
            let mut gs = GaussianStream::for_replicate(master_seed, rep);
            let y: Vec<f64> = f0.iter().map(|&m| m + sigma * gs.next_standard()).collect();
            let lmax = design.lambda_max(&y)?;
            let mut warm: Option<Vec<f64>> = None;
            for k in 0..grid_points {
                let exponent = if grid_points == 1 {
                    0.0
                } else {
                    -decades * k as f64 / (grid_points - 1) as f64
                };
                let lambda = lmax * 10f64.powf(exponent);
                let fit = design.fit(&y, lambda, warm.as_deref())?;
                if pattern(&fit, PATTERN_TOL) == truth {
                    return Ok(true);
                }
                warm = Some(fit.beta_hat[1..].to_vec());
            }
            Ok(false)
        })
        .collect::<Result<Vec<_>>>()?;

    let successes = per_replicate.iter().filter(|&&b| b).count();
    let frequency = successes as f64 / replicates as f64;
    let (wilson_low, wilson_high) = wilson_interval(successes, replicates, 1.96);
    Ok(RecoveryOutcome {
        successes,
        replicates,
        frequency,
        wilson_low,
        wilson_high,
        per_replicate,
    })
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
