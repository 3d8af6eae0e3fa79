//! Evaluation of the finite-sample risk bounds: the master oracle
//! inequality with an explicit (weighted) compatibility constant, and its
//! specializations to path graphs, single-ramification branched graphs, and
//! general trees decomposed into path segments, where the compatibility
//! term is controlled through the harmonic mean of the between-jump
//! distances.

use crate::error::{Error, Result};
use crate::estimator::lambda_rule;
use crate::graph::{ActiveSet, BranchCase, BranchingDescriptor, SegmentDecomposition, TreeGraph};

/// Distance vectors read off a segment decomposition.
///
/// `delta` lists, segment by segment, the first gap, floor/ceil halves of
/// every interior gap, and the last gap (2·s_i entries per segment).
/// `abs_delta` halves every gap into a ⌈d/2⌉, ⌊d/2⌋ pair (2·(s_i+1) entries
/// per segment); it appears in weight-difference bounds and is recorded for
/// diagnostics. The means are taken over `delta`.
#[derive(Clone, Debug)]
pub struct DeltaVectors {
    pub delta: Vec<f64>,
    pub abs_delta: Vec<f64>,
    pub harmonic_mean: f64,
    pub geometric_mean: f64,
}

/// Builds the distance vectors of a decomposition. Every segment must carry
/// at least one jump (otherwise its contribution to the compatibility bound
/// is not representable by these vectors) and every resulting entry must be
/// positive, which rules out jumps at segment boundaries and interior gaps
/// of a single vertex.
pub fn delta_vectors(dec: &SegmentDecomposition) -> Result<DeltaVectors> {
    if dec.s_total == 0 {
        return Err(Error::EmptyS);
    }
    let mut delta = Vec::new();
    let mut abs_delta = Vec::new();
    for seg in &dec.segments {
        if seg.s() == 0 {
            return Err(Error::EmptyS);
        }
        let d = &seg.gaps;
        delta.push(d[0] as f64);
        for &g in &d[1..d.len() - 1] {
            delta.push((g / 2) as f64);
            delta.push((g - g / 2) as f64);
        }
        delta.push(*d.last().unwrap() as f64);
        for &g in d {
            abs_delta.push((g - g / 2) as f64);
            abs_delta.push((g / 2) as f64);
        }
    }
    if let Some(bad) = delta.iter().find(|&&v| v < 1.0) {
        return Err(Error::GapConditionViolated(format!(
            "distance vector entry {bad} < 1: a gap is empty or an interior gap has a single vertex"
        )));
    }
    let len = delta.len() as f64;
    let harmonic_mean = len / delta.iter().map(|d| 1.0 / d).sum::<f64>();
    let geometric_mean = (delta.iter().map(|d| d.ln()).sum::<f64>() / len).exp();
    Ok(DeltaVectors { delta, abs_delta, harmonic_mean, geometric_mean })
}

/// Remainder term of the branched-graph bound for the five ramification
/// cases; `b_star` is the total number of vertices in the three jump-free
/// stretches meeting at the ramification (inbound stretch included).
pub fn zeta(case: BranchCase, b_star: usize) -> f64 {
    match case {
        BranchCase::One => 0.0,
        BranchCase::Two => b_star as f64 / 2.0,
        BranchCase::ThreeA => 3.0,
        BranchCase::ThreeB => b_star as f64 / 4.0,
        BranchCase::Four => b_star as f64 / 4.0,
    }
}

/// Classifies a descriptor and evaluates its remainder term in one step.
pub fn zeta_for(bd: &BranchingDescriptor) -> Result<f64> {
    Ok(zeta(crate::graph::classify_branch_case(bd)?, bd.b_star))
}

/// One evaluated risk bound, split into its three parts:
/// `approximation_term` = ‖f − f⁰‖²_n + 4λ‖(Df)_{−S}‖₁ for the candidate f,
/// `noise_term` = (4σ²/n)((s+1) + 2 log(2/δ)), and a `compat_term` that
/// carries the compatibility constant (or its harmonic-mean surrogate).
#[derive(Clone, Debug)]
pub struct OracleBound {
    pub approximation_term: f64,
    pub noise_term: f64,
    pub compat_term: f64,
    pub total: f64,
}

impl OracleBound {
    fn assemble(approximation_term: f64, noise_term: f64, compat_term: f64) -> Self {
        Self {
            approximation_term,
            noise_term,
            compat_term,
            total: approximation_term + noise_term + compat_term,
        }
    }
}

struct CommonTerms {
    n: f64,
    s: f64,
    /// log(4(n−s−1)/δ), the tail exponent behind the penalty level.
    tail_log: f64,
    approximation: f64,
    noise: f64,
}

fn common_terms(
    f: &[f64],
    f0: &[f64],
    g: &TreeGraph,
    s: &ActiveSet,
    delta: f64,
    gamma: f64,
    sigma: f64,
) -> Result<CommonTerms> {
    let n = g.n();
    if f.len() != n || f0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f.len().min(f0.len()) });
    }
    if s.n() != n {
        return Err(Error::LengthMismatch { expected: n, got: s.n() });
    }
    if !(gamma > 1.0) {
        return Err(Error::BadParams(format!("bounds require gamma > 1, got {gamma}")));
    }
    let lambda = lambda_rule(n, s.s(), delta, gamma, sigma)?;
    let mse: f64 =
        f.iter().zip(f0.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
    let mut tv_off_s = 0.0;
    for v in 2..=n {
        if !s.contains(v) {
            tv_off_s += (f[v - 1] - f[g.parent(v).unwrap() - 1]).abs();
        }
    }
    let s_count = s.s() as f64;
    let n_f = n as f64;
    let noise = 4.0 * sigma * sigma / n_f * ((s_count + 1.0) + 2.0 * (2.0 / delta).ln());
    let tail_log = (4.0 * (n_f - s_count - 1.0) / delta).ln();
    Ok(CommonTerms {
        n: n_f,
        s: s_count,
        tail_log,
        approximation: mse + 4.0 * lambda * tv_off_s,
        noise,
    })
}

/// The master bound: with λ = γσ√(2 log(4(n−s−1)/δ)/n) and probability at
/// least 1−δ,
/// ‖f̂ − f⁰‖²_n ≤ ‖f − f⁰‖²_n + 4λ‖(Df)_{−S}‖₁
///             + (4σ²/n)((s+1) + 2 log(2/δ) + γ²(s+1)/κ²_w · log(4(n−s−1)/δ)).
/// `kappa_w_sq` is the (lower bound on the) weighted compatibility constant
/// κ²_w(S) for the chosen jump set.
pub fn bound_master(
    f: &[f64],
    f0: &[f64],
    g: &TreeGraph,
    s: &ActiveSet,
    delta: f64,
    gamma: f64,
    sigma: f64,
    kappa_w_sq: f64,
) -> Result<OracleBound> {
    if !(kappa_w_sq > 0.0 && kappa_w_sq.is_finite()) {
        return Err(Error::BadParams(format!("kappa_w_sq = {kappa_w_sq} must be positive")));
    }
    let c = common_terms(f, f0, g, s, delta, gamma, sigma)?;
    let compat =
        4.0 * sigma * sigma / c.n * gamma * gamma * (c.s + 1.0) / kappa_w_sq * c.tail_log;
    Ok(OracleBound::assemble(c.approximation, c.noise, compat))
}

/// Path-graph specialization: every between-jump distance must be at least
/// 4, and the compatibility term becomes
/// 8σ² log(4(n−s−1)/δ) · (2γ²s/Δ̄_h + 5(s+1)/n · log(n/(s+1))).
pub fn bound_path(
    f: &[f64],
    f0: &[f64],
    g: &TreeGraph,
    s: &ActiveSet,
    delta: f64,
    gamma: f64,
    sigma: f64,
) -> Result<OracleBound> {
    if !g.is_canonical_path() {
        return Err(Error::BadParams("path bound needs a canonically numbered path".into()));
    }
    let dec = crate::graph::decompose(g, s, None)?;
    check_min_gaps(dec.segments[0].gaps.iter().copied(), 4)?;
    let dv = delta_vectors(&dec)?;
    let c = common_terms(f, f0, g, s, delta, gamma, sigma)?;
    let w = 5.0 * (c.s + 1.0) / c.n * (c.n / (c.s + 1.0)).ln();
    let compat = 8.0 * sigma * sigma
        * c.tail_log
        * (2.0 * gamma * gamma * c.s / dv.harmonic_mean + w);
    Ok(OracleBound::assemble(c.approximation, c.noise, compat))
}

/// Branched-graph specialization (one ramification, two outgoing branches):
/// the three outer end distances must be at least 4 and the compatibility
/// term becomes
/// 8σ² log(4(n−s−1)/δ) · (2γ²s/Δ̄_h + 5(2s+3)/(2n) · log((n+1)/(2s+3)) + ζ/n)
/// with ζ the ramification remainder of [`zeta`].
pub fn bound_branched(
    f: &[f64],
    f0: &[f64],
    g: &TreeGraph,
    s: &ActiveSet,
    delta: f64,
    gamma: f64,
    sigma: f64,
) -> Result<OracleBound> {
    let rams = g.ramifications();
    let [r] = rams[..] else {
        return Err(Error::BadParams(format!(
            "branched bound needs exactly one ramification, found {}",
            rams.len()
        )));
    };
    let kids = g.children(r);
    if kids.len() != 2 {
        return Err(Error::BadParams(format!(
            "branched bound needs two outgoing branches, vertex {r} has {}",
            kids.len()
        )));
    }
    // Segment exactly at the ramification so the gap sequences match the
    // branch structure the remainder term ζ accounts for.
    let cuts: Vec<usize> = kids.to_vec();
    let dec = crate::graph::decompose(g, s, Some(&cuts))?;
    let ends = [
        dec.segments[0].gaps[0],
        *dec.segments[1].gaps.last().unwrap(),
        *dec.segments[2].gaps.last().unwrap(),
    ];
    check_min_gaps(ends.into_iter(), 4)?;
    let bd = BranchingDescriptor::from_graph(g, s, r)?;
    let z = zeta_for(&bd)?;
    let dv = delta_vectors(&dec)?;
    let c = common_terms(f, f0, g, s, delta, gamma, sigma)?;
    if c.n + 1.0 < 2.0 * c.s + 3.0 {
        return Err(Error::GapConditionViolated(format!(
            "need n + 1 ≥ 2s + 3 for the branched bound, got n = {}, s = {}",
            c.n, c.s
        )));
    }
    let w = 5.0 * (2.0 * c.s + 3.0) / (2.0 * c.n) * ((c.n + 1.0) / (2.0 * c.s + 3.0)).ln();
    let compat = 8.0 * sigma * sigma
        * c.tail_log
        * (2.0 * gamma * gamma * c.s / dv.harmonic_mean + w + z / c.n);
    Ok(OracleBound::assemble(c.approximation, c.noise, compat))
}

/// General-tree specialization: the tree is decomposed into g path
/// segments, every gap of every segment must be at least 4 (jumps stay away
/// from the ramifications), and the compatibility term becomes
/// 8σ² log(4(n−s−1)/δ) · (2γ²s/Δ̄_h + 5(s+g)/n · log(n/(s+g))).
pub fn bound_general(
    f: &[f64],
    f0: &[f64],
    g: &TreeGraph,
    s: &ActiveSet,
    delta: f64,
    gamma: f64,
    sigma: f64,
) -> Result<OracleBound> {
    let dec = crate::graph::decompose(g, s, None)?;
    for seg in &dec.segments {
        check_min_gaps(seg.gaps.iter().copied(), 4)?;
    }
    let dv = delta_vectors(&dec)?;
    let g_count = dec.g() as f64;
    let c = common_terms(f, f0, g, s, delta, gamma, sigma)?;
    let w = 5.0 * (c.s + g_count) / c.n * (c.n / (c.s + g_count)).ln();
    let compat = 8.0 * sigma * sigma
        * c.tail_log
        * (2.0 * gamma * gamma * c.s / dv.harmonic_mean + w);
    Ok(OracleBound::assemble(c.approximation, c.noise, compat))
}

fn check_min_gaps(gaps: impl Iterator<Item = usize>, min: usize) -> Result<()> {
    for d in gaps {
        if d < min {
            return Err(Error::GapConditionViolated(format!(
                "between-jump distance {d} is below the required minimum {min}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compatibility::{kappa_lower_path, kappa_lower_weighted};
    use crate::graph::{classify_branch_case, decompose};
    use crate::projection::weight_vectors;
    use approx::assert_abs_diff_eq;

    fn path_setup(n: usize, s: &[usize]) -> (TreeGraph, ActiveSet) {
        let g = TreeGraph::path(n).unwrap();
        let a = ActiveSet::new(n, s.iter().copied()).unwrap();
        (g, a)
    }

    #[test]
    fn delta_vector_frozen_examples() {
        // Gaps (2,4,2): every entry halves to 2.
        let (g, s) = path_setup(8, &[3, 7]);
        let dv = delta_vectors(&decompose(&g, &s, None).unwrap()).unwrap();
        assert_eq!(dv.delta, vec![2.0, 2.0, 2.0, 2.0]);
        assert_abs_diff_eq!(dv.harmonic_mean, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dv.geometric_mean, 2.0, epsilon = 1e-15);

        // Gaps (4,6,4): interior gap splits into 3,3.
        let (g, s) = path_setup(14, &[5, 11]);
        let dv = delta_vectors(&decompose(&g, &s, None).unwrap()).unwrap();
        assert_eq!(dv.delta, vec![4.0, 3.0, 3.0, 4.0]);
        assert_abs_diff_eq!(dv.harmonic_mean, 24.0 / 7.0, epsilon = 1e-14);

        // Gaps (4,6): the halved-pairs vector covers both gaps.
        let (g, s) = path_setup(10, &[5]);
        let dv = delta_vectors(&decompose(&g, &s, None).unwrap()).unwrap();
        assert_eq!(dv.delta, vec![4.0, 6.0]);
        assert_eq!(dv.abs_delta, vec![2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn delta_vector_errors() {
        let (g, s) = path_setup(8, &[]);
        assert!(matches!(
            delta_vectors(&decompose(&g, &s, None).unwrap()),
            Err(Error::EmptyS)
        ));
        // An interior gap of 1 halves to zero.
        let (g, s) = path_setup(7, &[3, 4]);
        assert!(matches!(
            delta_vectors(&decompose(&g, &s, None).unwrap()),
            Err(Error::GapConditionViolated(_))
        ));
    }

    #[test]
    fn harmonic_mean_vs_arithmetic_and_k_identity() {
        for (n, s) in [(16usize, vec![5usize, 11]), (24, vec![5, 11, 17]), (20, vec![9])] {
            let (g, a) = path_setup(n, &s);
            let dec = decompose(&g, &a, None).unwrap();
            let dv = delta_vectors(&dec).unwrap();
            let arith = dv.delta.iter().sum::<f64>() / dv.delta.len() as f64;
            assert!(dv.harmonic_mean <= arith + 1e-12);
            assert!(dv.geometric_mean <= arith + 1e-12);
            assert!(dv.harmonic_mean <= dv.geometric_mean + 1e-12);
            // K = Σ 1/Δ_i = 2s/Δ̄_h exactly for floor/ceil interior splits.
            let (k, _) = kappa_lower_path(&dec).unwrap();
            assert_abs_diff_eq!(
                k,
                2.0 * a.s() as f64 / dv.harmonic_mean,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn zeta_case_table() {
        let rows: [(&[usize], BranchCase, f64); 5] = [
            (&[3, 3, 3], BranchCase::One, 0.0),
            (&[3, 0, 4], BranchCase::Two, 3.5),
            (&[1, 2, 5], BranchCase::ThreeA, 3.0),
            (&[1, 3, 5], BranchCase::ThreeB, 2.25),
            (&[4, 1, 7], BranchCase::Four, 3.0),
        ];
        for (b, case, z) in rows {
            let bd = BranchingDescriptor::new(b.to_vec()).unwrap();
            assert_eq!(classify_branch_case(&bd).unwrap(), case, "b = {b:?}");
            assert_eq!(zeta(case, bd.b_star), z, "b = {b:?}");
            assert_eq!(zeta_for(&bd).unwrap(), z);
        }
    }

    #[test]
    fn master_bound_structure() {
        let (g, s) = path_setup(16, &[5, 11]);
        let f0 = vec![0.0; 16];
        let b = bound_master(&f0, &f0, &g, &s, 0.1, 2.0, 1.0, 0.2).unwrap();
        // Candidate f = f0 with the true jump set: no approximation error.
        assert_eq!(b.approximation_term, 0.0);
        let n = 16.0;
        let s_c = 2.0;
        assert_abs_diff_eq!(
            b.noise_term,
            4.0 / n * ((s_c + 1.0) + 2.0 * 20.0f64.ln()),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            b.compat_term,
            4.0 / n * 4.0 * 3.0 / 0.2 * (4.0 * 13.0 / 0.1f64).ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            b.total,
            b.approximation_term + b.noise_term + b.compat_term,
            epsilon = 1e-14
        );

        // The excluded-edge penalty only counts jumps off S.
        let mut f = f0.clone();
        for v in 5..=16 {
            f[v - 1] = 1.0; // jump at vertex 5 (in S)
        }
        let on_s = bound_master(&f, &f0, &g, &s, 0.1, 2.0, 1.0, 0.2).unwrap();
        let mse = 12.0 / 16.0;
        assert_abs_diff_eq!(on_s.approximation_term, mse, epsilon = 1e-12);
        let mut f = f0.clone();
        for v in 6..=16 {
            f[v - 1] = 1.0; // jump at vertex 6 (off S)
        }
        let off_s = bound_master(&f, &f0, &g, &s, 0.1, 2.0, 1.0, 0.2).unwrap();
        let lambda = lambda_rule(16, 2, 0.1, 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            off_s.approximation_term,
            11.0 / 16.0 + 4.0 * lambda,
            epsilon = 1e-12
        );

        assert!(bound_master(&f0, &f0, &g, &s, 0.1, 2.0, 1.0, 0.0).is_err());
        assert!(bound_master(&f0, &f0, &g, &s, 0.1, 1.0, 1.0, 0.2).is_err());
    }

    #[test]
    fn bounds_monotone_in_delta_and_kappa() {
        let (g, s) = path_setup(16, &[5, 11]);
        let f0 = vec![0.0; 16];
        let mut prev = f64::INFINITY;
        for delta in [0.01, 0.05, 0.1, 0.3, 0.9] {
            let b = bound_master(&f0, &f0, &g, &s, delta, 2.0, 1.0, 0.2).unwrap();
            assert!(b.total <= prev);
            prev = b.total;
        }
        let mut prev = f64::INFINITY;
        for kappa in [0.05, 0.1, 0.2, 0.5, 1.0] {
            let b = bound_master(&f0, &f0, &g, &s, 0.1, 2.0, 1.0, kappa).unwrap();
            assert!(b.total <= prev);
            prev = b.total;
        }
        let mut prev = f64::INFINITY;
        for delta in [0.01, 0.05, 0.1, 0.3, 0.9] {
            let b = bound_path(&f0, &f0, &g, &s, delta, 2.0, 1.0).unwrap();
            assert!(b.total <= prev);
            prev = b.total;
        }
    }

    #[test]
    fn path_display_and_dominance_over_master() {
        let (g, s) = path_setup(16, &[5, 11]);
        let f0 = vec![0.0; 16];
        let (delta, gamma, sigma) = (0.1, 2.0, 1.0);
        let cor = bound_path(&f0, &f0, &g, &s, delta, gamma, sigma).unwrap();
        // Hand-assembled display.
        let dv = delta_vectors(&decompose(&g, &s, None).unwrap()).unwrap();
        let tail = (4.0 * 13.0 / delta).ln();
        let w = 5.0 * 3.0 / 16.0 * (16.0 / 3.0f64).ln();
        assert_abs_diff_eq!(
            cor.compat_term,
            8.0 * tail * (2.0 * 4.0 * 2.0 / dv.harmonic_mean + w),
            epsilon = 1e-12
        );

        // Plugging the computed weighted compatibility lower bound into the
        // master bound can only sharpen the path display.
        let weights = weight_vectors(&g, &s, gamma).unwrap();
        let dec = decompose(&g, &s, None).unwrap();
        let wlb = kappa_lower_weighted(&g, &dec, &weights, &dec.cut_edges).unwrap();
        let thm = bound_master(
            &f0,
            &f0,
            &g,
            &s,
            delta,
            gamma,
            sigma,
            wlb.bound_quadratic,
        )
        .unwrap();
        assert!(thm.total <= cor.total + 1e-12);
    }

    #[test]
    fn path_bound_requires_wide_gaps() {
        let (g, s) = path_setup(8, &[3, 7]);
        let f0 = vec![0.0; 8];
        assert!(matches!(
            bound_path(&f0, &f0, &g, &s, 0.1, 2.0, 1.0),
            Err(Error::GapConditionViolated(_))
        ));
    }

    #[test]
    fn general_bound_coincides_with_path_bound_on_paths() {
        let (g, s) = path_setup(24, &[5, 11, 17]);
        let f0: Vec<f64> = (0..24).map(|i| (i as f64 * 0.3).sin()).collect();
        let f: Vec<f64> = (0..24).map(|i| (i as f64 * 0.1).cos()).collect();
        let cor = bound_path(&f, &f0, &g, &s, 0.05, 1.5, 0.7).unwrap();
        let gen = bound_general(&f, &f0, &g, &s, 0.05, 1.5, 0.7).unwrap();
        assert_abs_diff_eq!(cor.total, gen.total, epsilon = 1e-12);
        assert_abs_diff_eq!(cor.compat_term, gen.compat_term, epsilon = 1e-12);
    }

    #[test]
    fn branched_display_with_remainder() {
        // Main branch 1..9 (jump at 5), ramification at 9, two arms of 8
        // with jumps 4 past the ramification.
        let g = TreeGraph::star_of_paths(9, &[8, 8]).unwrap();
        let s = ActiveSet::new(25, [5, 14, 22]).unwrap();
        let f0 = vec![0.0; 25];
        let (delta, gamma, sigma) = (0.1, 2.0, 1.0);
        let b = bound_branched(&f0, &f0, &g, &s, delta, gamma, sigma).unwrap();

        let dec = decompose(&g, &s, Some(&[10, 18])).unwrap();
        let dv = delta_vectors(&dec).unwrap();
        let bd = BranchingDescriptor::from_graph(&g, &s, 9).unwrap();
        assert_eq!(bd.b, vec![5, 4, 4]);
        assert_eq!(classify_branch_case(&bd).unwrap(), BranchCase::One);
        let tail = (4.0 * 21.0 / delta).ln();
        let w = 5.0 * 9.0 / 50.0 * (26.0 / 9.0f64).ln();
        assert_abs_diff_eq!(
            b.compat_term,
            8.0 * tail * (2.0 * 4.0 * 3.0 / dv.harmonic_mean + w),
            epsilon = 1e-12
        );

        // A jump one step past the ramification turns the remainder on.
        let s = ActiveSet::new(25, [5, 11, 22]).unwrap();
        let bd = BranchingDescriptor::from_graph(&g, &s, 9).unwrap();
        assert_eq!(bd.b, vec![5, 1, 4]);
        assert_eq!(classify_branch_case(&bd).unwrap(), BranchCase::Four);
        let b4 = bound_branched(&f0, &f0, &g, &s, delta, gamma, sigma).unwrap();
        assert!(b4.total.is_finite());
        // Same shape with the remainder removed for comparison.
        let dec4 = decompose(&g, &s, Some(&[10, 18])).unwrap();
        let dv4 = delta_vectors(&dec4).unwrap();
        let w4 = 5.0 * 9.0 / 50.0 * (26.0 / 9.0f64).ln();
        let without_zeta = 8.0 * tail * (2.0 * 4.0 * 3.0 / dv4.harmonic_mean + w4);
        assert_abs_diff_eq!(
            b4.compat_term - without_zeta,
            8.0 * tail * zeta(BranchCase::Four, bd.b_star) / 25.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn branched_bound_rejects_short_outer_ends() {
        // Outer end of one arm is only 2 vertices past its jump.
        let g = TreeGraph::star_of_paths(9, &[8, 6]).unwrap();
        let s = ActiveSet::new(23, [5, 14, 21]).unwrap();
        let f0 = vec![0.0; 23];
        assert!(matches!(
            bound_branched(&f0, &f0, &g, &s, 0.1, 2.0, 1.0),
            Err(Error::GapConditionViolated(_))
        ));
    }

    #[test]
    fn doubling_distances_halves_compat_leading_term() {
        let (g1, s1) = path_setup(16, &[5, 11]);
        let (g2, s2) = path_setup(32, &[9, 21]);
        let dv1 = delta_vectors(&decompose(&g1, &s1, None).unwrap()).unwrap();
        let dv2 = delta_vectors(&decompose(&g2, &s2, None).unwrap()).unwrap();
        assert_abs_diff_eq!(dv2.harmonic_mean, 2.0 * dv1.harmonic_mean, epsilon = 1e-12);
        let lead1 = 2.0 * 2.0 / dv1.harmonic_mean;
        let lead2 = 2.0 * 2.0 / dv2.harmonic_mean;
        assert_abs_diff_eq!(lead2, lead1 / 2.0, epsilon = 1e-12);
    }
}
