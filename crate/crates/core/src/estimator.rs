//! Total-variation penalized least squares on a tree:
//!   f̂ = argmin ‖Y − f‖²_n + 2λ‖Df‖₁,
//! solved through the jump coordinates β = D̃f, where the penalty is an
//! ordinary ℓ¹ norm on β₂..β_n and β₁ stays unpenalized. Column-centering
//! profiles β₁ out, cyclic coordinate descent with exact soft-threshold
//! updates solves the rest, and β̂₁ = mean(Y − X₋₁β̂₋₁) recovers the level.

use crate::error::{Error, Result};
use crate::graph::TreeGraph;

const MAX_SWEEPS: usize = 1_000_000;
const BETA_TOL: f64 = 1e-12;
const KKT_TOL: f64 = 1e-8;

/// Precomputed design data for one tree, reusable across fits (e.g. a λ
/// grid with warm starts). Column j of the path matrix is the indicator of
/// subtree(j), so inner products reduce to subtree sums.
pub struct Design {
    n: usize,
    /// 0-based parent index of vertex j for j = 2..=n.
    parents: Vec<u32>,
    /// 0-based vertex indices of subtree(j) for j = 2..=n.
    subtrees: Vec<Vec<u32>>,
    /// m_j = |T_j|/n.
    m: Vec<f64>,
    /// ‖x̃_j‖² = |T_j| − |T_j|²/n for the centered column.
    norm_sq: Vec<f64>,
}

/// Solution of one penalized fit.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub f_hat: Vec<f64>,
    /// Jump coordinates β̂ = D̃f̂: β̂₁ at index 0, the penalized β̂_j after.
    pub beta_hat: Vec<f64>,
    pub lambda: f64,
    pub kkt_residual: f64,
    /// Coordinate sweeps performed.
    pub iterations: usize,
    pub converged: bool,
}

impl Design {
    pub fn new(g: &TreeGraph) -> Self {
        let n = g.n();
        let mut parents = Vec::with_capacity(n.saturating_sub(1));
        let mut subtrees = Vec::with_capacity(n.saturating_sub(1));
        let mut m = Vec::with_capacity(n.saturating_sub(1));
        let mut norm_sq = Vec::with_capacity(n.saturating_sub(1));
        for j in 2..=n {
            parents.push((g.parent(j).unwrap() - 1) as u32);
            let t: Vec<u32> = g.subtree(j).into_iter().map(|v| (v - 1) as u32).collect();
            let size = t.len() as f64;
            subtrees.push(t);
            m.push(size / n as f64);
            norm_sq.push(size - size * size / n as f64);
        }
        Self { n, parents, subtrees, m, norm_sq }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest λ with β̂₋₁ ≡ 0: max_j |x̃_jᵀ Y| / n.
    pub fn lambda_max(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: y.len() });
        }
        let sum_y: f64 = y.iter().sum();
        let mut best = 0.0f64;
        for (j, t) in self.subtrees.iter().enumerate() {
            let dot: f64 = t.iter().map(|&i| y[i as usize]).sum();
            best = best.max((dot - self.m[j] * sum_y).abs());
        }
        // Smallest float λ whose threshold λ·n dominates every gradient in
        // the solver's own arithmetic, so fitting at exactly this value
        // produces an exactly fused solution.
        let n_f = self.n as f64;
        let mut lam = best / n_f;
        while lam * n_f < best {
            lam = lam.next_up();
        }
        Ok(lam)
    }

    /// Fits at one penalty level. `warm` optionally seeds the penalized
    /// coordinates β₂..β_n (length n−1).
    pub fn fit(&self, y: &[f64], lambda: f64, warm: Option<&[f64]>) -> Result<FitResult> {
        self.fit_traced(y, lambda, warm, None)
    }

    fn fit_traced(
        &self,
        y: &[f64],
        lambda: f64,
        warm: Option<&[f64]>,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<FitResult> {
        let n = self.n;
        if y.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::BadParams(format!("lambda = {lambda}")));
        }
        if n == 1 {
            return Ok(FitResult {
                f_hat: y.to_vec(),
                beta_hat: y.to_vec(),
                lambda,
                kkt_residual: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        if lambda == 0.0 {
            return Ok(self.interpolating_fit(y));
        }

        let mut beta = match warm {
            Some(b) => {
                if b.len() != n - 1 {
                    return Err(Error::LengthMismatch { expected: n - 1, got: b.len() });
                }
                b.to_vec()
            }
            None => vec![0.0; n - 1],
        };

        // r_base = Y − Σ_j β_j x_j; the uniform component cancels in every
        // centered inner product, so the intercept never enters the sweeps.
        let mut r_base = y.to_vec();
        for (j, t) in self.subtrees.iter().enumerate() {
            if beta[j] != 0.0 {
                for &i in t {
                    r_base[i as usize] -= beta[j];
                }
            }
        }
        let mut sum_r: f64 = r_base.iter().sum();
        let thresh = lambda * n as f64;

        let mut sweeps = 0usize;
        let mut stale_rounds = 0usize;
        loop {
            // One full cycle over every penalized coordinate.
            let max_delta = self.sweep(&mut beta, &mut r_base, &mut sum_r, thresh, None);
            sweeps += 1;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(self.traced_objective(&beta, &r_base, lambda));
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::NotConverged { iterations: sweeps });
            }

            if max_delta > BETA_TOL {
                // Refine the active set before the next full pass.
                let active: Vec<usize> =
                    (0..n - 1).filter(|&j| beta[j] != 0.0).collect();
                loop {
                    let d = self.sweep(&mut beta, &mut r_base, &mut sum_r, thresh, Some(&active));
                    sweeps += 1;
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(self.traced_objective(&beta, &r_base, lambda));
                    }
                    if sweeps >= MAX_SWEEPS {
                        return Err(Error::NotConverged { iterations: sweeps });
                    }
                    if d <= BETA_TOL {
                        break;
                    }
                }
                continue;
            }

            // Stable full sweep: rebuild the residual exactly and accept if
            // the optimality conditions hold.
            r_base.copy_from_slice(y);
            for (j, t) in self.subtrees.iter().enumerate() {
                if beta[j] != 0.0 {
                    for &i in t {
                        r_base[i as usize] -= beta[j];
                    }
                }
            }
            sum_r = r_base.iter().sum();
            let kkt = self.kkt_from_residual(&beta, &r_base, sum_r, lambda);
            if kkt <= KKT_TOL {
                return Ok(self.finish(y, beta, r_base, sum_r, lambda, kkt, sweeps));
            }
            stale_rounds += 1;
            if stale_rounds >= 5 {
                return Err(Error::NotConverged { iterations: sweeps });
            }
        }
    }

    /// One coordinate cycle; returns the largest coefficient change.
    fn sweep(
        &self,
        beta: &mut [f64],
        r_base: &mut [f64],
        sum_r: &mut f64,
        thresh: f64,
        subset: Option<&[usize]>,
    ) -> f64 {
        let n = self.n;
        let mut max_delta = 0.0f64;
        let coords: Box<dyn Iterator<Item = usize>> = match subset {
            Some(s) => Box::new(s.iter().copied()),
            None => Box::new(0..n - 1),
        };
        for j in coords {
            let t = &self.subtrees[j];
            let dot: f64 = t.iter().map(|&i| r_base[i as usize]).sum();
            let rho = dot - self.m[j] * *sum_r + self.norm_sq[j] * beta[j];
            let new = soft_threshold(rho, thresh) / self.norm_sq[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                beta[j] = new;
                for &i in t {
                    r_base[i as usize] -= delta;
                }
                *sum_r -= delta * t.len() as f64;
                max_delta = max_delta.max(delta.abs());
            }
        }
        max_delta
    }

    /// Max violation of the stationarity conditions, from the maintained
    /// residual: gradients g_j = x̃_jᵀ r̃ / n must equal λ·sign(β_j) on the
    /// support and stay within [−λ, λ] off it.
    fn kkt_from_residual(&self, beta: &[f64], r_base: &[f64], sum_r: f64, lambda: f64) -> f64 {
        let n = self.n as f64;
        let mut worst = 0.0f64;
        for (j, t) in self.subtrees.iter().enumerate() {
            let dot: f64 = t.iter().map(|&i| r_base[i as usize]).sum();
            let g = (dot - self.m[j] * sum_r) / n;
            let v = if beta[j] != 0.0 {
                (g - lambda * beta[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    fn finish(
        &self,
        y: &[f64],
        beta: Vec<f64>,
        r_base: Vec<f64>,
        sum_r: f64,
        lambda: f64,
        kkt: f64,
        sweeps: usize,
    ) -> FitResult {
        let n = self.n;
        let u: f64 = beta.iter().zip(self.m.iter()).map(|(b, m)| b * m).sum();
        let beta1 = sum_r / n as f64 - u + (y.iter().sum::<f64>() - sum_r) / n as f64;
        // sum_r/n + (Σy − sum_r)/n = ȳ, so beta1 = ȳ − Σ β_j m_j.
        let f_hat: Vec<f64> = y
            .iter()
            .zip(r_base.iter())
            .map(|(yi, ri)| yi - ri + beta1)
            .collect();
        let mut beta_hat = Vec::with_capacity(n);
        beta_hat.push(beta1);
        beta_hat.extend_from_slice(&beta);
        FitResult {
            f_hat,
            beta_hat,
            lambda,
            kkt_residual: kkt,
            iterations: sweeps,
            converged: true,
        }
    }

    fn interpolating_fit(&self, y: &[f64]) -> FitResult {
        // λ = 0: the design is invertible, so f̂ = Y and the jump
        // coordinates read directly off Y: β̂_j = Y_j − Y_parent, β̂₁ = Y₁.
        let n = self.n;
        let mut beta_hat = vec![0.0; n];
        beta_hat[0] = y[0];
        for j in 2..=n {
            beta_hat[j - 1] = y[j - 1] - y[self.parents[j - 2] as usize];
        }
        FitResult {
            f_hat: y.to_vec(),
            beta_hat,
            lambda: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
            converged: true,
        }
    }

    fn traced_objective(&self, beta: &[f64], r_base: &[f64], lambda: f64) -> f64 {
        // Full objective at the profiled intercept: the centered residual is
        // r_base minus its mean.
        let n = self.n as f64;
        let mean = r_base.iter().sum::<f64>() / n;
        let quad: f64 = r_base.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        quad + 2.0 * lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// One-shot fit on a tree.
pub fn fit(g: &TreeGraph, y: &[f64], lambda: f64) -> Result<FitResult> {
    Design::new(g).fit(y, lambda, None)
}

/// Max violation of the optimality conditions of a fit, recomputed from
/// scratch on the uncentered design: (1/n)x_jᵀ(Y − Xβ̂) must equal λ·sign(β̂_j)
/// for active jumps, lie in [−λ, λ] for zero ones, and vanish for j = 1.
pub fn kkt_check(g: &TreeGraph, y: &[f64], result: &FitResult) -> Result<f64> {
    let n = g.n();
    if y.len() != n || result.beta_hat.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len().min(result.beta_hat.len()) });
    }
    // f = X β̂: prefix-accumulate jumps down the tree.
    let mut f = vec![0.0; n];
    f[0] = result.beta_hat[0];
    for v in 2..=n {
        f[v - 1] = f[g.parent(v).unwrap() - 1] + result.beta_hat[v - 1];
    }
    let resid: Vec<f64> = y.iter().zip(f.iter()).map(|(a, b)| a - b).collect();
    let lambda = result.lambda;
    // Subtree sums of the residual, children before parents.
    let mut subtree_sum = resid.clone();
    for v in (2..=n).rev() {
        let p = g.parent(v).unwrap();
        subtree_sum[p - 1] += subtree_sum[v - 1];
    }
    let mut worst = (subtree_sum[0] / n as f64).abs(); // unpenalized coordinate
    for v in 2..=n {
        let gj = subtree_sum[v - 1] / n as f64;
        let b = result.beta_hat[v - 1];
        let viol = if b != 0.0 {
            (gj - lambda * b.signum()).abs()
        } else {
            (gj.abs() - lambda).max(0.0)
        };
        worst = worst.max(viol);
    }
    Ok(worst)
}

/// Penalty level of the master risk bound: λ = γσ√(2 log(4(n−s−1)/δ)/n).
pub fn lambda_rule(n: usize, s: usize, delta: f64, gamma: f64, sigma: f64) -> Result<f64> {
    if n < s + 2 {
        return Err(Error::BadParams(format!("need n − s − 1 ≥ 1, got n={n}, s={s}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadParams(format!("delta = {delta} outside (0,1)")));
    }
    if !(gamma >= 1.0) {
        return Err(Error::BadParams(format!("gamma = {gamma} < 1")));
    }
    if !(sigma > 0.0) {
        return Err(Error::BadParams(format!("sigma = {sigma} must be positive")));
    }
    let m = (n - s - 1) as f64;
    Ok(gamma * sigma * (2.0 * (4.0 * m / delta).ln() / n as f64).sqrt())
}

/// Sign pattern of the fitted jumps: sign((Df̂)_e) with |·| ≤ tol mapped to 0,
/// one entry per edge (child vertices 2..=n).
pub fn pattern(result: &FitResult, tol: f64) -> Vec<i8> {
    result.beta_hat[1..]
        .iter()
        .map(|&b| {
            if b.abs() <= tol {
                0
            } else if b > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Default tolerance for [`pattern`]: coordinate descent produces exact
/// zeros, so anything at noise scale counts as zero.
pub const PATTERN_TOL: f64 = 1e-9;

/// The penalized objective ‖y − f‖²_n + 2λ‖Df‖₁.
pub fn objective(g: &TreeGraph, y: &[f64], f: &[f64], lambda: f64) -> Result<f64> {
    let n = g.n();
    if y.len() != n || f.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len().min(f.len()) });
    }
    let quad: f64 = y.iter().zip(f.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
    Ok(quad + 2.0 * lambda * g.total_variation(f)?)
}

/// Exact minimizer for small trees by stationarity enumeration: every jump
/// sign pattern σ ∈ {−1,0,+1}^{n−1} fixes the fused components and makes the
/// restricted problem smooth, with component levels
/// v_c = ȳ_c − λ n g_c / |c| (g_c the net signed incidence of the non-fused
/// edges). The true objective evaluated at each candidate is minimal exactly
/// at the solution's own pattern, so the minimum over patterns is the global
/// optimum. Returns (f̂, objective).
pub fn exact_fit_small(g: &TreeGraph, y: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    const CAP: usize = 8;
    let n = g.n();
    if n > CAP {
        return Err(Error::TooLarge { n, cap: CAP });
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::BadParams(format!("lambda = {lambda}")));
    }
    let edges: Vec<(usize, usize)> = g.edges().collect(); // (parent, child)
    let m = edges.len();
    let total = 3usize.pow(m as u32);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut sigma = vec![0i8; m];
    for idx in 0..total {
        let mut rem = idx;
        for s in sigma.iter_mut() {
            *s = [0i8, 1, -1][rem % 3];
            rem /= 3;
        }
        // Fused components: union over σ = 0 edges.
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(comp: &mut [usize], v: usize) -> usize {
            let mut root = v;
            while comp[root] != root {
                root = comp[root];
            }
            let mut cur = v;
            while comp[cur] != root {
                let next = comp[cur];
                comp[cur] = root;
                cur = next;
            }
            root
        }
        for (e, &(p, c)) in edges.iter().enumerate() {
            if sigma[e] == 0 {
                let (rp, rc) = (find(&mut comp, p - 1), find(&mut comp, c - 1));
                comp[rp] = rc;
            }
        }
        // Component means and net signed incidence.
        let mut size = vec![0.0f64; n];
        let mut mean = vec![0.0f64; n];
        let mut net = vec![0.0f64; n];
        for v in 0..n {
            let r = find(&mut comp, v);
            size[r] += 1.0;
            mean[r] += y[v];
        }
        for (e, &(p, c)) in edges.iter().enumerate() {
            if sigma[e] != 0 {
                net[find(&mut comp, c - 1)] += sigma[e] as f64;
                net[find(&mut comp, p - 1)] -= sigma[e] as f64;
            }
        }
        let mut f = vec![0.0f64; n];
        for v in 0..n {
            let r = find(&mut comp, v);
            f[v] = mean[r] / size[r] - lambda * n as f64 * net[r] / size[r];
        }
        let obj = objective(g, y, &f, lambda)?;
        if best.as_ref().map_or(true, |(_, b)| obj < *b) {
            best = Some((f, obj));
        }
    }
    Ok(best.unwrap())
}
