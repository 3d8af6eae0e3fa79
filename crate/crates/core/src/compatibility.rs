//! Compatibility constants for the penalized-jump design: exact values by
//! sign-pattern enumeration at desk scale, and the analytic lower bounds for
//! path, branched-path, and general segment decompositions, in plain and
//! weighted form, together with the tight witness signals.
//!
//! The constant for an active jump set S is
//!   κ²(S) = min { (s+1) ‖Xβ‖²_n : ‖β_S‖₁ − ‖β_{−({1}∪S)}‖₁ = 1 },
//! with β₁ unpenalized and, in the weighted variant, w ⊙ β replacing β inside
//! the two ℓ¹ norms.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{ActiveSet, Segment, SegmentDecomposition, TreeGraph};
use crate::linalg::{signed_eqp_solve, to_f64, SignConstraint};
use crate::projection::WeightVectors;

/// Enumeration cap for [`kappa_exact`]: 2^{n−2} sign-pattern subproblems.
pub const KAPPA_EXACT_MAX_N: usize = 14;

/// Exact (weighted) squared compatibility constant by enumerating sign
/// patterns of the penalized coefficients and solving one convex
/// equality-constrained QP per pattern.
///
/// Each pattern σ fixes the signs of β₂..β_n; within it the constraint
/// ‖(w⊙β)_S‖₁ − ‖(w⊙β)_rest‖₁ = 1 is linear and the minimum of
/// (s+1)‖Xβ‖²_n is a convex subproblem. The global value is the minimum over
/// patterns; β ↦ −β symmetry lets the first active coordinate keep a fixed
/// sign.
pub fn kappa_exact(
    g: &TreeGraph,
    s: &ActiveSet,
    weights: Option<&WeightVectors>,
) -> Result<f64> {
    let n = g.n();
    if n > KAPPA_EXACT_MAX_N {
        return Err(Error::TooLarge { n, cap: KAPPA_EXACT_MAX_N });
    }
    if s.n() != n {
        return Err(Error::LengthMismatch { expected: n, got: s.n() });
    }
    if s.s() == 0 {
        return Err(Error::InfeasibleConstraint);
    }
    let w: Vec<f64> = match weights {
        Some(wv) => {
            if wv.w.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: wv.w.len() });
            }
            wv.w.clone()
        }
        None => vec![1.0; n],
    };

    let x = to_f64(&g.path_matrix());
    let q = x.transpose() * &x * ((s.s() + 1) as f64 / n as f64);

    // Coordinates 2..=n with the first active one pinned to +1.
    let fixed = s.vertices()[0];
    let free_coords: Vec<usize> = (2..=n).filter(|&v| v != fixed).collect();
    let patterns: u64 = 1 << free_coords.len();

    let best = (0..patterns)
        .into_par_iter()
        .try_fold(
            || f64::INFINITY,
            |acc, bits| -> Result<f64> {
                let mut a = DVector::zeros(n);
                let mut pattern = vec![SignConstraint::Free; n];
                let set = |v: usize, sigma: f64, a: &mut DVector<f64>, p: &mut Vec<SignConstraint>| {
                    let signed = sigma * w[v - 1];
                    a[v - 1] = if s.contains(v) { signed } else { -signed };
                    p[v - 1] = if sigma > 0.0 {
                        SignConstraint::NonNeg
                    } else {
                        SignConstraint::NonPos
                    };
                };
                set(fixed, 1.0, &mut a, &mut pattern);
                for (k, &v) in free_coords.iter().enumerate() {
                    let sigma = if bits >> k & 1 == 0 { 1.0 } else { -1.0 };
                    set(v, sigma, &mut a, &mut pattern);
                }
                match signed_eqp_solve(&q, &a, 1.0, &pattern) {
                    Ok((_, val)) => Ok(acc.min(val)),
                    Err(Error::Infeasible) => Ok(acc),
                    Err(e) => Err(e),
                }
            },
        )
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;

    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InfeasibleConstraint)
    }
}

/// Evaluates the (weighted) compatibility objective at a concrete signal:
/// (s+1)‖f‖²_n / c², where c = ‖(w⊙β)_S‖₁ − ‖(w⊙β)_rest‖₁ and β = D̃f.
/// This is an upper bound for κ²(S) for every f with c > 0.
pub fn kappa_objective_at(
    g: &TreeGraph,
    s: &ActiveSet,
    f: &[f64],
    weights: Option<&WeightVectors>,
) -> Result<f64> {
    let n = g.n();
    if f.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f.len() });
    }
    if s.s() == 0 {
        return Err(Error::EmptyS);
    }
    let mut c = 0.0;
    for v in 2..=n {
        let jump = f[v - 1] - f[g.parent(v).unwrap() - 1];
        let wv = weights.map_or(1.0, |wv| wv.w[v - 1]);
        if s.contains(v) {
            c += wv * jump.abs();
        } else {
            c -= wv * jump.abs();
        }
    }
    if c <= 1e-14 {
        return Err(Error::InfeasibleConstraint);
    }
    let norm_sq_n = f.iter().map(|&v| v * v).sum::<f64>() / n as f64;
    Ok((s.s() + 1) as f64 * norm_sq_n / (c * c))
}

/// Per-segment contribution to the bound denominator:
/// 1/d₁ + Σ_j (1/u_j + 1/(d_j − u_j)) + 1/d_{s+1}, collapsing to 2/d for a
/// jump-free segment.
fn segment_k(seg: &Segment) -> f64 {
    let d = &seg.gaps;
    let m = d.len();
    if m == 1 {
        return 2.0 / d[0] as f64;
    }
    let mut k = 1.0 / d[0] as f64 + 1.0 / d[m - 1] as f64;
    for (j, &dj) in d[1..m - 1].iter().enumerate() {
        let u = seg.splits[j] as f64;
        k += 1.0 / u + 1.0 / (dj as f64 - u);
    }
    k
}

fn require_valid(dec: &SegmentDecomposition) -> Result<()> {
    if !dec.valid_for_bounds {
        return Err(Error::InvalidDecomposition(if dec.notes.is_empty() {
            "gap constraints violated".into()
        } else {
            dec.notes.join("; ")
        }));
    }
    Ok(())
}

/// Lower bound (s+1)/(nK) for a path decomposition (one segment),
/// K = 1/d₁ + Σ (1/u_j + 1/(d_j−u_j)) + 1/d_{s+1}. Returns (K, bound).
pub fn kappa_lower_path(dec: &SegmentDecomposition) -> Result<(f64, f64)> {
    if dec.g() != 1 {
        return Err(Error::InvalidDecomposition(format!(
            "expected one segment, got {}",
            dec.g()
        )));
    }
    if dec.s_total == 0 {
        return Err(Error::EmptyS);
    }
    require_valid(dec)?;
    let k = segment_k(&dec.segments[0]);
    Ok((k, (dec.s_total + 1) as f64 / (dec.n as f64 * k)))
}

/// Lower bound (s+1)/(nK^b) for a branched-path decomposition (three
/// segments), K^b summing the per-segment terms. Returns (K^b, bound).
pub fn kappa_lower_branched(dec: &SegmentDecomposition) -> Result<(f64, f64)> {
    if dec.g() != 3 {
        return Err(Error::InvalidDecomposition(format!(
            "expected three segments, got {}",
            dec.g()
        )));
    }
    if dec.s_total == 0 {
        return Err(Error::EmptyS);
    }
    require_valid(dec)?;
    let k: f64 = dec.segments.iter().map(segment_k).sum();
    Ok((k, (dec.s_total + 1) as f64 / (dec.n as f64 * k)))
}

/// Weighted lower bounds for any valid decomposition.
#[derive(Clone, Debug)]
pub struct WeightedLowerBound {
    /// Denominator sum K (or K^b) of the underlying decomposition.
    pub k: f64,
    /// (s+1)/n · (‖w‖_∞ √K + ‖D*w‖₂)^{-2} — the sharper form.
    pub bound: f64,
    /// (s+1)/n · (2(‖w‖²_∞ K + ‖D*w‖²₂))^{-1} — the weaker quadratic form.
    pub bound_quadratic: f64,
    /// ‖D*w‖₂ with the rows of `dstar_edges` zeroed out.
    pub dstar_w_norm: f64,
}

/// Weighted compatibility lower bound: D* is the edge-incidence matrix with
/// the rows of `dstar_edges` (child-vertex labels, typically the cut edges of
/// the decomposition) replaced by zeros.
pub fn kappa_lower_weighted(
    g: &TreeGraph,
    dec: &SegmentDecomposition,
    weights: &WeightVectors,
    dstar_edges: &[usize],
) -> Result<WeightedLowerBound> {
    let n = g.n();
    if dec.n != n {
        return Err(Error::LengthMismatch { expected: n, got: dec.n });
    }
    if weights.w.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: weights.w.len() });
    }
    if dec.s_total == 0 {
        return Err(Error::EmptyS);
    }
    require_valid(dec)?;
    let k: f64 = dec.segments.iter().map(segment_k).sum();
    let w_max = weights.w.iter().cloned().fold(0.0f64, f64::max);
    let mut dw_sq = 0.0;
    for v in 2..=n {
        if dstar_edges.contains(&v) {
            continue;
        }
        let diff = weights.w[v - 1] - weights.w[g.parent(v).unwrap() - 1];
        dw_sq += diff * diff;
    }
    let dw = dw_sq.sqrt();
    let s1 = (dec.s_total + 1) as f64;
    let denom_sqrt = w_max * k.sqrt() + dw;
    Ok(WeightedLowerBound {
        k,
        bound: s1 / n as f64 / (denom_sqrt * denom_sqrt),
        bound_quadratic: s1 / n as f64 / (2.0 * (w_max * w_max * k + dw_sq)),
        dstar_w_norm: dw,
    })
}

/// General-tree lower bound over a g-segment decomposition, with the
/// harmonic-mean restatement of K.
#[derive(Clone, Debug)]
pub struct GeneralLowerBound {
    pub k: f64,
    /// (s+1)/(nK).
    pub bound: f64,
    /// Between-jump distance vector: per segment with jumps,
    /// (d₁, u₂, d₂−u₂, …, d_{s_i+1}); jump-free segments contribute no
    /// entries (their 2/d terms live only in `k`).
    pub delta: Vec<f64>,
    /// Harmonic mean of `delta`.
    pub delta_harmonic_mean: f64,
    /// (s+1)/n · Δ̄_h/(2s); equals `bound` when every segment has a jump.
    pub harmonic_bound: f64,
}

/// Lower bound for a general segment decomposition. Requires every gap ≥ 4
/// (the "large enough" regime of the multi-segment bound).
pub fn kappa_lower_general(dec: &SegmentDecomposition) -> Result<GeneralLowerBound> {
    if dec.s_total == 0 {
        return Err(Error::EmptyS);
    }
    for (i, seg) in dec.segments.iter().enumerate() {
        if let Some(&d) = seg.gaps.iter().find(|&&d| d < 4) {
            return Err(Error::NotLargeEnough(format!(
                "segment {}: gap {d} < 4",
                i + 1
            )));
        }
    }
    let k: f64 = dec.segments.iter().map(segment_k).sum();
    let mut delta = Vec::with_capacity(2 * dec.s_total);
    for seg in &dec.segments {
        let d = &seg.gaps;
        let m = d.len();
        if m == 1 {
            continue;
        }
        delta.push(d[0] as f64);
        for (j, &dj) in d[1..m - 1].iter().enumerate() {
            let u = seg.splits[j] as f64;
            delta.push(u);
            delta.push(dj as f64 - u);
        }
        delta.push(d[m - 1] as f64);
    }
    let inv_sum: f64 = delta.iter().map(|&v| 1.0 / v).sum();
    let h = delta.len() as f64 / inv_sum;
    let s = dec.s_total as f64;
    let n = dec.n as f64;
    Ok(GeneralLowerBound {
        k,
        bound: (s + 1.0) / (n * k),
        delta,
        delta_harmonic_mean: h,
        harmonic_bound: (s + 1.0) / n * h / (2.0 * s),
    })
}

/// Builds the alternating piecewise-constant signal attaining the path bound
/// when every interior gap is even: levels −n/d₁, +2n/d₂, −2n/d₃, …,
/// (−1)^{s+1} n/d_{s+1} over the blocks of the decomposition.
pub fn tight_witness_path(dec: &SegmentDecomposition) -> Result<Vec<f64>> {
    if dec.g() != 1 {
        return Err(Error::InvalidDecomposition(format!(
            "expected one segment, got {}",
            dec.g()
        )));
    }
    if dec.s_total == 0 {
        return Err(Error::EmptyS);
    }
    let seg = &dec.segments[0];
    check_even_interior(seg)?;
    let mut f = vec![0.0; dec.n];
    write_segment_levels(seg, dec.n, 0, &mut f);
    Ok(f)
}

/// Builds the signal attaining the branched-path bound: the main segment
/// alternates as in the path case and each outbound segment continues the
/// alternation across the ramification point, whose neighborhood forms one
/// constant block. Requires even interior gaps and equal gaps adjacent to
/// the ramification point (main's last gap = each branch's first gap).
pub fn tight_witness_branched(g: &TreeGraph, dec: &SegmentDecomposition) -> Result<Vec<f64>> {
    if dec.g() != 3 {
        return Err(Error::InvalidDecomposition(format!(
            "expected three segments, got {}",
            dec.g()
        )));
    }
    if dec.s_total == 0 {
        return Err(Error::EmptyS);
    }
    let rams = g.ramifications();
    if rams.len() != 1 {
        return Err(Error::UnsupportedConfiguration(format!(
            "expected one ramification point, found {}",
            rams.len()
        )));
    }
    let r = rams[0];

    // Orient the main segment so the ramification point sits at its end.
    let mut main = dec.segments[0].clone();
    if *main.vertices.first().unwrap() == r {
        main.vertices.reverse();
        main.gaps.reverse();
    }
    if *main.vertices.last().unwrap() != r {
        return Err(Error::UnsupportedConfiguration(
            "ramification point is not an endpoint of the root segment".into(),
        ));
    }
    for seg in &dec.segments[1..] {
        if g.parent(seg.vertices[0]) != Some(r) {
            return Err(Error::UnsupportedConfiguration(
                "outbound segment does not start at the ramification point".into(),
            ));
        }
    }

    let d_end = *main.gaps.last().unwrap();
    for seg in &dec.segments[1..] {
        if seg.gaps[0] != d_end {
            return Err(Error::GapConditionViolated(format!(
                "gaps around the ramification point differ: {} vs {}",
                d_end, seg.gaps[0]
            )));
        }
    }
    check_even_interior(&main)?;
    for seg in &dec.segments[1..] {
        check_even_interior(seg)?;
    }

    let mut f = vec![0.0; dec.n];
    let s1 = main.s();
    write_segment_levels(&main, dec.n, 0, &mut f);
    for seg in &dec.segments[1..] {
        // Block t of an outbound segment carries sign (−1)^{s₁+1+t},
        // continuing the main alternation; passing s₁ as the phase makes
        // block 0 match the main segment's final block.
        write_segment_levels(seg, dec.n, s1, &mut f);
    }
    Ok(f)
}

fn check_even_interior(seg: &Segment) -> Result<()> {
    let m = seg.gaps.len();
    if m >= 3 && seg.gaps[1..m - 1].iter().any(|&d| d % 2 != 0) {
        return Err(Error::OddInteriorGap);
    }
    Ok(())
}

/// Fills the witness levels for one segment: block t (0-based) gets sign
/// (−1)^{phase+t+1} and magnitude n/d at the segment ends, 2n/d inside.
fn write_segment_levels(seg: &Segment, n: usize, phase: usize, f: &mut [f64]) {
    let m = seg.gaps.len();
    let mut pos = 0usize;
    for (t, &d) in seg.gaps.iter().enumerate() {
        let sign = if (phase + t) % 2 == 0 { -1.0 } else { 1.0 };
        let magnitude = if t == 0 || t == m - 1 {
            n as f64 / d as f64
        } else {
            2.0 * n as f64 / d as f64
        };
        for _ in 0..d {
            f[seg.vertices[pos] - 1] = sign * magnitude;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::decompose;
    use crate::projection::weight_vectors;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kappa_exact_two_point_and_errors() {
        let g = TreeGraph::path(2).unwrap();
        let s = ActiveSet::new(2, [2]).unwrap();
        assert_abs_diff_eq!(kappa_exact(&g, &s, None).unwrap(), 0.5, epsilon = 1e-12);

        let empty = ActiveSet::empty(2);
        assert!(matches!(kappa_exact(&g, &empty, None), Err(Error::InfeasibleConstraint)));

        let big = TreeGraph::path(15).unwrap();
        let sb = ActiveSet::new(15, [4]).unwrap();
        assert!(matches!(kappa_exact(&big, &sb, None), Err(Error::TooLarge { n: 15, cap: 14 })));
    }

    #[test]
    fn kappa_exact_matches_tight_path_bound() {
        let g = TreeGraph::path(8).unwrap();
        let s = ActiveSet::new(8, [3, 7]).unwrap();
        let exact = kappa_exact(&g, &s, None).unwrap();
        assert_abs_diff_eq!(exact, 3.0 / 16.0, epsilon = 1e-9);

        let dec = decompose(&g, &s, None).unwrap();
        assert_eq!(dec.segments[0].gaps, vec![2, 4, 2]);
        let (k, bound) = kappa_lower_path(&dec).unwrap();
        assert_abs_diff_eq!(k, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bound, 3.0 / 16.0, epsilon = 1e-15);

        // Two-block case: d = (2,2), bound 1/2, attained.
        let g4 = TreeGraph::path(4).unwrap();
        let s4 = ActiveSet::new(4, [3]).unwrap();
        let exact4 = kappa_exact(&g4, &s4, None).unwrap();
        let dec4 = decompose(&g4, &s4, None).unwrap();
        let (_, bound4) = kappa_lower_path(&dec4).unwrap();
        assert_abs_diff_eq!(bound4, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(exact4, 0.5, epsilon = 1e-9);
        let w4 = tight_witness_path(&dec4).unwrap();
        assert_abs_diff_eq!(w4.as_slice(), [-2.0, -2.0, 2.0, 2.0].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn kappa_exact_full_active_matches_grid_oracle() {
        // S = {2,3,4} on the path with n = 4: every jump penalized, none
        // subtracted. Grid oracle over the ℓ¹ sphere with the level
        // optimized in closed form.
        let g = TreeGraph::path(4).unwrap();
        let s = ActiveSet::new(4, 2..=4).unwrap();
        let exact = kappa_exact(&g, &s, None).unwrap();

        let x = to_f64(&g.path_matrix());
        let mut best = f64::INFINITY;
        let steps = 200i64;
        for i in -steps..=steps {
            for j in -steps..=steps {
                let b2 = i as f64 / steps as f64;
                let b3 = j as f64 / steps as f64;
                let rest = 1.0 - b2.abs() - b3.abs();
                if rest < 0.0 {
                    continue;
                }
                for sign in [-1.0, 1.0] {
                    let beta = DVector::from_vec(vec![0.0, b2, b3, sign * rest]);
                    let v = &x * &beta;
                    let mean = v.sum() / 4.0;
                    let obj = v.iter().map(|&t| (t - mean) * (t - mean)).sum::<f64>();
                    best = best.min(obj); // (s+1)/n = 1 here
                }
            }
        }
        assert_abs_diff_eq!(exact, best, epsilon = 2e-3);
        // Frozen value: attained by β₋₁ = (3/10, −2/5, 3/10), giving levels
        // (0, 3/10, −1/10, 1/5) with variance 1/40 and objective 4·1/40.
        assert_abs_diff_eq!(exact, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn tight_witness_path_frozen() {
        let g = TreeGraph::path(8).unwrap();
        let s = ActiveSet::new(8, [3, 7]).unwrap();
        let dec = decompose(&g, &s, None).unwrap();
        let f = tight_witness_path(&dec).unwrap();
        assert_abs_diff_eq!(
            f.as_slice(),
            [-4.0, -4.0, 4.0, 4.0, 4.0, 4.0, -4.0, -4.0].as_slice(),
            epsilon = 1e-12
        );
        let obj = kappa_objective_at(&g, &s, &f, None).unwrap();
        assert_abs_diff_eq!(obj, 3.0 / 16.0, epsilon = 1e-9);

        // Odd interior gap: witness refuses, bound still fine.
        let g9 = TreeGraph::path(9).unwrap();
        let s9 = ActiveSet::new(9, [3, 8]).unwrap();
        let dec9 = decompose(&g9, &s9, None).unwrap();
        assert_eq!(dec9.segments[0].gaps, vec![2, 5, 2]);
        assert!(matches!(tight_witness_path(&dec9), Err(Error::OddInteriorGap)));
        let (k9, bound9) = kappa_lower_path(&dec9).unwrap();
        assert_abs_diff_eq!(k9, 0.5 + 0.5 + 1.0 / 3.0 + 0.5, epsilon = 1e-15);
        let exact9 = kappa_exact(&g9, &s9, None).unwrap();
        assert!(exact9 >= bound9 - 1e-9);
    }

    #[test]
    fn floor_split_minimizes_interior_terms() {
        for d in 4..=12usize {
            let floor = d / 2;
            let best = 1.0 / floor as f64 + 1.0 / (d - floor) as f64;
            for u in 1..d {
                let val = 1.0 / u as f64 + 1.0 / (d - u) as f64;
                assert!(best <= val + 1e-15, "d={d}, u={u}");
            }
        }
    }

    #[test]
    fn kappa_lower_path_rejects_bad_decompositions() {
        // Multi-segment input.
        let g = TreeGraph::star_of_paths(4, &[4, 4]).unwrap();
        let s = ActiveSet::new(12, [3, 7, 11]).unwrap();
        let dec = decompose(&g, &s, None).unwrap();
        assert!(matches!(kappa_lower_path(&dec), Err(Error::InvalidDecomposition(_))));

        // No jumps at all.
        let gp = TreeGraph::path(6).unwrap();
        let dec = decompose(&gp, &ActiveSet::empty(6), None).unwrap();
        assert!(matches!(kappa_lower_path(&dec), Err(Error::EmptyS)));

        // Gap constraints violated (interior gap 2 < 4).
        let s = ActiveSet::new(6, [2, 4, 6]).unwrap();
        let dec = decompose(&gp, &s, None).unwrap();
        assert!(!dec.valid_for_bounds);
        assert!(matches!(kappa_lower_path(&dec), Err(Error::InvalidDecomposition(_))));
    }

    #[test]
    fn weighted_bound_reduces_to_plain_with_unit_weights() {
        let g = TreeGraph::path(8).unwrap();
        let s = ActiveSet::new(8, [3, 7]).unwrap();
        let dec = decompose(&g, &s, None).unwrap();
        let unit = WeightVectors { omega: vec![0.0; 8], w: vec![1.0; 8], gamma: 2.0 };
        let wb = kappa_lower_weighted(&g, &dec, &unit, &[]).unwrap();
        assert_abs_diff_eq!(wb.dstar_w_norm, 0.0, epsilon = 1e-15);
        let (_, plain) = kappa_lower_path(&dec).unwrap();
        assert_abs_diff_eq!(wb.bound, plain, epsilon = 1e-15);
        // Sharper form dominates the quadratic form.
        assert!(wb.bound >= wb.bound_quadratic - 1e-15);
    }

    #[test]
    fn weighted_bounds_below_weighted_exact() {
        let g = TreeGraph::path(8).unwrap();
        let s = ActiveSet::new(8, [3, 7]).unwrap();
        let wv = weight_vectors(&g, &s, 2.0).unwrap();
        let exact_w = kappa_exact(&g, &s, Some(&wv)).unwrap();
        let dec = decompose(&g, &s, None).unwrap();
        let wb = kappa_lower_weighted(&g, &dec, &wv, &[]).unwrap();
        assert!(wb.bound <= exact_w + 1e-9, "{} vs {}", wb.bound, exact_w);
        assert!(wb.bound_quadratic <= wb.bound + 1e-15);
    }

    #[test]
    fn branched_tight_instance() {
        // Main 1..4, branches 5..8 and 9..12 off vertex 4; jumps at 3, 7, 11
        // give gaps (2,2) per segment, equal around the ramification point.
        let g = TreeGraph::star_of_paths(4, &[4, 4]).unwrap();
        let s = ActiveSet::new(12, [3, 7, 11]).unwrap();
        let dec = decompose(&g, &s, None).unwrap();
        assert_eq!(dec.g(), 3);
        let (kb, bound) = kappa_lower_branched(&dec).unwrap();
        assert_abs_diff_eq!(kb, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bound, 1.0 / 9.0, epsilon = 1e-15);

        let f = tight_witness_branched(&g, &dec).unwrap();
        assert_abs_diff_eq!(
            f.as_slice(),
            [-6.0, -6.0, 6.0, 6.0, 6.0, 6.0, -6.0, -6.0, 6.0, 6.0, -6.0, -6.0].as_slice(),
            epsilon = 1e-12
        );
        let obj = kappa_objective_at(&g, &s, &f, None).unwrap();
        assert_abs_diff_eq!(obj, 1.0 / 9.0, epsilon = 1e-9);

        let exact = kappa_exact(&g, &s, None).unwrap();
        assert_abs_diff_eq!(exact, 1.0 / 9.0, epsilon = 1e-8);

        // Wrong segment count for the path routine and vice versa.
        let gp = TreeGraph::path(8).unwrap();
        let sp = ActiveSet::new(8, [3, 7]).unwrap();
        let decp = decompose(&gp, &sp, None).unwrap();
        assert!(matches!(kappa_lower_branched(&decp), Err(Error::InvalidDecomposition(_))));
    }

    #[test]
    fn general_route_consistency() {
        // Path: general route equals the path bound when all gaps >= 4.
        let g = TreeGraph::path(14).unwrap();
        let s = ActiveSet::new(14, [5, 10]).unwrap();
        let dec = decompose(&g, &s, None).unwrap();
        assert_eq!(dec.segments[0].gaps, vec![4, 5, 5]);
        let (k, bound) = kappa_lower_path(&dec).unwrap();
        let gen = kappa_lower_general(&dec).unwrap();
        assert_abs_diff_eq!(gen.k, k, epsilon = 1e-12);
        assert_abs_diff_eq!(gen.bound, bound, epsilon = 1e-12);
        assert_eq!(gen.delta, vec![4.0, 2.0, 3.0, 5.0]);
        // Every segment has a jump, so the harmonic restatement is exact.
        assert_abs_diff_eq!(gen.harmonic_bound, gen.bound, epsilon = 1e-15);

        // Branched: general route equals the branched bound.
        let gb = TreeGraph::star_of_paths(8, &[8, 8]).unwrap();
        let sb = ActiveSet::new(24, [5, 13, 21]).unwrap();
        let decb = decompose(&gb, &sb, None).unwrap();
        let (kb, boundb) = kappa_lower_branched(&decb).unwrap();
        let genb = kappa_lower_general(&decb).unwrap();
        assert_abs_diff_eq!(genb.k, kb, epsilon = 1e-12);
        assert_abs_diff_eq!(genb.bound, boundb, epsilon = 1e-12);
        assert_abs_diff_eq!(genb.harmonic_bound, genb.bound, epsilon = 1e-15);

        // Small end gaps refuse the general route.
        let g8 = TreeGraph::path(8).unwrap();
        let s8 = ActiveSet::new(8, [3, 7]).unwrap();
        let dec8 = decompose(&g8, &s8, None).unwrap();
        assert!(matches!(kappa_lower_general(&dec8), Err(Error::NotLargeEnough(_))));
    }

    #[test]
    fn objective_upper_bounds_exact_constant() {
        use rand::prelude::*;
        let g = TreeGraph::path(6).unwrap();
        let s = ActiveSet::new(6, [3, 5]).unwrap();
        let exact = kappa_exact(&g, &s, None).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(41);
        let mut feasible = 0;
        for _ in 0..500 {
            let f: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            match kappa_objective_at(&g, &s, &f, None) {
                Ok(obj) => {
                    assert!(obj >= exact - 1e-9, "objective {obj} below exact {exact}");
                    feasible += 1;
                }
                Err(Error::InfeasibleConstraint) => {}
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
        assert!(feasible > 50);
    }
}
