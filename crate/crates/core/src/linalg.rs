//! Small dense linear algebra: least squares, orthogonal projectors, the two
//! partitioned/rank-one inverse identities, and the sign-constrained
//! equality-constrained QP that powers the exact compatibility-constant
//! oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for rank decisions.
const RANK_TOL: f64 = 1e-12;

/// Converts an integer matrix to floating point.
pub fn to_f64(m: &DMatrix<i64>) -> DMatrix<f64> {
    m.map(|v| v as f64)
}

/// Minimizes ||y - M theta||_2 for a full-column-rank M (n x k, k <= n).
/// Returns the coefficients and the residual vector.
pub fn least_squares(m: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    if m.nrows() != y.len() || m.ncols() > m.nrows() {
        return Err(Error::BadParams(format!(
            "least_squares shape mismatch: M is {}x{}, y has {}",
            m.nrows(),
            m.ncols(),
            y.len()
        )));
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || svd.singular_values.min() <= RANK_TOL * smax {
        return Err(Error::RankDeficient);
    }
    let theta = svd.solve(y, 0.0).map_err(|_| Error::RankDeficient)?;
    let residual = y - m * &theta;
    Ok((theta, residual))
}

/// Orthogonal projector onto the column span of a full-column-rank basis.
/// Stores an orthonormal basis U (so projection is U U' y) together with the
/// pieces needed to recover basis coefficients and Gram-inverse products.
pub struct Projector {
    basis: DMatrix<f64>,
    u: DMatrix<f64>,         // n x k, orthonormal columns
    v: DMatrix<f64>,         // k x k, right singular vectors
    sigma: DVector<f64>,     // k singular values
}

impl Projector {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::BadParams("projector basis must be n x k, 1 <= k <= n".into()));
        }
        let svd = basis.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if smax == 0.0 || svd.singular_values.min() <= RANK_TOL * smax {
            return Err(Error::RankDeficient);
        }
        Ok(Self {
            u: svd.u.unwrap(),
            v: svd.v_t.unwrap().transpose(),
            sigma: svd.singular_values,
            basis,
        })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Pi y
    pub fn project(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.u * (self.u.transpose() * y)
    }

    /// (I - Pi) y
    pub fn antiproject(&self, y: &DVector<f64>) -> DVector<f64> {
        y - self.project(y)
    }

    /// Coefficients theta with M theta = Pi y (the least-squares solution).
    pub fn coefficients(&self, y: &DVector<f64>) -> DVector<f64> {
        // theta = V Sigma^{-1} U' y
        let mut z = self.u.transpose() * y;
        for i in 0..z.len() {
            z[i] /= self.sigma[i];
        }
        &self.v * z
    }

    /// (M'M)^{-1} rhs = V Sigma^{-2} V' rhs.
    pub fn gram_solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut z = self.v.transpose() * rhs;
        for i in 0..z.len() {
            z[i] /= self.sigma[i] * self.sigma[i];
        }
        &self.v * z
    }

    /// Dense Pi, for tests.
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.u * self.u.transpose()
    }
}

/// Dense inverse via LU with partial pivoting.
pub fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(Error::SingularBlock)
}

/// Blockwise inverse of [[A11, A12], [A21, A22]]. Requires A11, A22 and both
/// Schur complements invertible. Returns the four blocks of the inverse.
#[allow(clippy::type_complexity)]
pub fn partitioned_inverse(
    a11: &DMatrix<f64>,
    a12: &DMatrix<f64>,
    a21: &DMatrix<f64>,
    a22: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let p = a11.nrows();
    let q = a22.nrows();
    if a11.ncols() != p || a22.ncols() != q || a12.shape() != (p, q) || a21.shape() != (q, p) {
        return Err(Error::BadParams("partitioned_inverse block shapes".into()));
    }
    let a11_inv = invert(a11)?;
    let a22_inv = invert(a22)?;
    let schur11 = a11 - a12 * &a22_inv * a21; // A11 - A12 A22^{-1} A21
    let schur22 = a22 - a21 * &a11_inv * a12;
    let b11 = invert(&schur11)?;
    let b22 = invert(&schur22)?;
    let b12 = -&b11 * a12 * &a22_inv;
    let b21 = -&b22 * a21 * &a11_inv;
    Ok((b11, b12, b21, b22))
}

/// (G + E)^{-1} from G^{-1} for a rank-one E, via
/// (G+E)^{-1} = G^{-1} - G^{-1} E G^{-1} / (1 + g), g = trace(E G^{-1}).
/// Requires 1 + g away from zero.
pub fn rank_one_update_inverse(ginv: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = ginv.nrows();
    if ginv.ncols() != k || e.shape() != (k, k) {
        return Err(Error::BadParams("rank_one_update_inverse shapes".into()));
    }
    let eginv = e * ginv;
    let g = eginv.trace();
    if (1.0 + g).abs() <= 1e-12 {
        return Err(Error::SingularUpdate);
    }
    Ok(ginv - ginv * &eginv / (1.0 + g))
}

/// Per-coordinate restriction for [`signed_eqp_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConstraint {
    Free,
    Zero,
    NonNeg,
    NonPos,
}

/// Minimizes x' Q x subject to a' x = c and the per-coordinate sign
/// constraints, for Q positive definite on the non-pinned coordinates.
///
/// Primal active-set method over the sign constraints: starting from a
/// feasible point, each iteration solves the QP with the working set pinned
/// to zero (stationarity reduces to one linear solve plus the scalar
/// multiplier of the equality constraint), steps as far as sign feasibility
/// allows, and either pins the blocking coordinate or releases the pinned
/// coordinate with the most negative multiplier.
pub fn signed_eqp_solve(
    q: &DMatrix<f64>,
    a: &DVector<f64>,
    c: f64,
    pattern: &[SignConstraint],
) -> Result<(DVector<f64>, f64)> {
    let m = q.nrows();
    if q.ncols() != m || a.len() != m || pattern.len() != m {
        return Err(Error::BadParams("signed_eqp_solve shapes".into()));
    }

    // Feasible start: all mass on one sign-compatible coordinate.
    let mut x = DVector::zeros(m);
    if c != 0.0 {
        let pick = (0..m).find(|&i| {
            a[i] != 0.0
                && match pattern[i] {
                    SignConstraint::Free => true,
                    SignConstraint::Zero => false,
                    SignConstraint::NonNeg => c / a[i] >= 0.0,
                    SignConstraint::NonPos => c / a[i] <= 0.0,
                }
        });
        match pick {
            Some(i) => x[i] = c / a[i],
            None => return Err(Error::Infeasible),
        }
    }

    let constrained = |i: usize| {
        matches!(pattern[i], SignConstraint::NonNeg | SignConstraint::NonPos)
    };
    // Working set: sign-constrained coordinates currently pinned at zero.
    // Zero-pattern coordinates stay pinned forever.
    let mut pinned: Vec<bool> = (0..m)
        .map(|i| match pattern[i] {
            SignConstraint::Zero => true,
            SignConstraint::NonNeg | SignConstraint::NonPos => x[i] == 0.0,
            SignConstraint::Free => false,
        })
        .collect();

    for _iter in 0..10_000 {
        let free: Vec<usize> = (0..m).filter(|&i| !pinned[i]).collect();
        // Subproblem solution on the free coordinates.
        let mut target = DVector::zeros(m);
        let mut mu = 0.0;
        if !free.is_empty() {
            let qff = DMatrix::from_fn(free.len(), free.len(), |r, s| q[(free[r], free[s])]);
            let af = DVector::from_fn(free.len(), |r, _| a[free[r]]);
            if af.amax() <= 1e-14 {
                if c.abs() > 1e-12 {
                    // Cannot happen from a feasible iterate: the current x is
                    // supported on free coordinates and satisfies a'x = c.
                    return Err(Error::Infeasible);
                }
            } else {
                let chol = nalgebra::Cholesky::new(qff.clone())
                    .ok_or(Error::Unbounded)?;
                let y = chol.solve(&af);
                let denom = af.dot(&y); // > 0 since Q_FF is PD and a_F != 0
                mu = 2.0 * c / denom;
                let xf = y * (c / denom);
                for (r, &i) in free.iter().enumerate() {
                    target[i] = xf[r];
                }
            }
        } else if c.abs() > 1e-12 {
            return Err(Error::Infeasible);
        }

        // Step toward the subproblem solution while staying sign feasible.
        let mut t = 1.0f64;
        let mut blocker: Option<usize> = None;
        for &i in &free {
            if !constrained(i) {
                continue;
            }
            let bad = match pattern[i] {
                SignConstraint::NonNeg => target[i] < 0.0,
                SignConstraint::NonPos => target[i] > 0.0,
                _ => false,
            };
            if bad {
                let ti = x[i] / (x[i] - target[i]);
                if ti < t {
                    t = ti;
                    blocker = Some(i);
                }
            }
        }
        if let Some(b) = blocker {
            for &i in &free {
                x[i] += t * (target[i] - x[i]);
            }
            x[b] = 0.0;
            pinned[b] = true;
            continue;
        }
        for &i in &free {
            x[i] = target[i];
        }

        // Multiplier check on pinned sign constraints: lambda_i must be
        // nonnegative, where grad_i - mu a_i = lambda_i for NonNeg and
        // -(grad_i - mu a_i) = lambda_i for NonPos.
        let grad = 2.0 * (q * &x);
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..m {
            if !pinned[i] || !constrained(i) {
                continue;
            }
            let lambda = match pattern[i] {
                SignConstraint::NonNeg => grad[i] - mu * a[i],
                SignConstraint::NonPos => -(grad[i] - mu * a[i]),
                _ => unreachable!(),
            };
            if lambda < -1e-12 && worst.map_or(true, |(_, w)| lambda < w) {
                worst = Some((i, lambda));
            }
        }
        match worst {
            Some((i, _)) => {
                pinned[i] = false;
            }
            None => {
                let value = x.dot(&(q * &x));
                return Ok((x, value));
            }
        }
    }
    Err(Error::NotConverged { iterations: 10_000 })
}
