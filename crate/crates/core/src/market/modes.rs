use serde::Serialize;

use super::{ConstrainedState, MarketSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, jacobi_eigen, norm, Householder, Matrix};

/// Relative off-diagonal tolerance for the Jacobi solver.
const JACOBI_TOL: f64 = 1e-14;
/// Eigenvalues closer than this (relative) are treated as one eigenspace.
const DEGENERACY_TOL: f64 = 1e-9;
/// Relative tolerance of [`verify_interlacing`].
const INTERLACING_TOL: f64 = 1e-9;
/// Round-trip error above which [`inverse_from_frequencies`] fails.
const ROUND_TRIP_TOL: f64 = 1e-6;

/// Normal modes of the constrained system: `x = C z` with
/// `zddot_j = -lambda_j^2 z_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalModeDecomposition {
    /// `n x (n-1)`; every column sums to zero.
    pub c: Matrix,
    /// Mode frequencies, ascending.
    pub lambdas: Vec<f64>,
    /// `(n-1) x n` left inverse of `C` on the constraint plane.
    pub pseudo_inverse: Matrix,
}

impl NormalModeDecomposition {
    pub fn n(&self) -> usize {
        self.c.rows()
    }

    pub fn modes(&self) -> usize {
        self.lambdas.len()
    }

    /// Modal coordinates `z` of the mispricing vector `x`.
    pub fn to_modal(&self, x: &[f64]) -> Vec<f64> {
        self.pseudo_inverse.mul_vec(x)
    }

    pub fn from_modal(&self, z: &[f64]) -> Vec<f64> {
        self.c.mul_vec(z)
    }
}

/// Builds the decomposition from `y_i = sqrt(a_i) x_i`: in `y` the potential
/// is `|y|^2 / 2`, the kinetic form is `Gamma = diag(b_i / a_i)` and the
/// constraint is `alpha . y = 0` with `alpha_i = 1 / sqrt(a_i)`. A Householder
/// reflector `H` sends `alpha / |alpha|` to `e_n`; the eigenvalues of the
/// leading `(n-1)` minor of `H Gamma H` are `1 / lambda_j^2`.
pub fn normal_modes(spec: &MarketSpec) -> Result<NormalModeDecomposition> {
    let n = spec.n();
    let m = n - 1;
    let alpha: Vec<f64> = spec.a().iter().map(|a| 1.0 / a.sqrt()).collect();
    let alpha_norm = norm(&alpha);
    let u: Vec<f64> = alpha.iter().map(|x| x / alpha_norm).collect();
    let h = Householder::to_last_axis(&u).matrix();
    let mu: Vec<f64> = spec.a().iter().zip(spec.b()).map(|(a, b)| b / a).collect();
    let minor = Matrix::from_fn(m, m, |i, j| {
        (0..n).map(|k| h[(i, k)] * mu[k] * h[(j, k)]).sum()
    });

    let eig = jacobi_eigen(&minor, JACOBI_TOL)?;
    if let Some(&bad) = eig.values.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::numerical(
            None,
            format!("non-positive modal eigenvalue {bad}"),
        ));
    }
    // Largest 1/lambda^2 first, i.e. ascending lambda.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.values[j].total_cmp(&eig.values[i]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
    let mut q: Vec<Vec<f64>> = order.iter().map(|&i| eig.vectors.column(i)).collect();
    canonicalize_degenerate(&values, &mut q);

    // Columns of C: x = diag(1/sqrt a) H[:, ..m] w.
    let inv_sqrt_a: Vec<f64> = spec.a().iter().map(|a| 1.0 / a.sqrt()).collect();
    let sqrt_a: Vec<f64> = spec.a().iter().map(|a| a.sqrt()).collect();
    let mut c = Matrix::zeros(n, m);
    let mut pinv = Matrix::zeros(m, n);
    for (j, w) in q.iter().enumerate() {
        let col: Vec<f64> = (0..n)
            .map(|i| inv_sqrt_a[i] * (0..m).map(|k| h[(i, k)] * w[k]).sum::<f64>())
            .collect();
        let pivot = col
            .iter()
            .copied()
            .max_by(|x, y| x.abs().total_cmp(&y.abs()))
            .unwrap_or(0.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            c[(i, j)] = sign * col[i];
            // z_j = w_j . (H y)[..m] with y = sqrt(a) x.
            pinv[(j, i)] = sign * (0..m).map(|k| w[k] * h[(k, i)]).sum::<f64>() * sqrt_a[i];
        }
    }
    let lambdas = values.iter().map(|v| 1.0 / v.sqrt()).collect();
    Ok(NormalModeDecomposition {
        c,
        lambdas,
        pseudo_inverse: pinv,
    })
}

/// Replaces the basis of every repeated eigenvalue by Gram-Schmidt applied to
/// the projections of the coordinate vectors, so the output does not depend
/// on the rotation history of the solver.
fn canonicalize_degenerate(values: &[f64], q: &mut [Vec<f64>]) {
    let m = values.len();
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && (values[end] - values[start]).abs() <= DEGENERACY_TOL * values[start].abs()
        {
            end += 1;
        }
        if end - start > 1 {
            let span: Vec<Vec<f64>> = q[start..end].to_vec();
            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(end - start);
            for k in 0..m {
                if basis.len() == end - start {
                    break;
                }
                // Projection of e_k onto the eigenspace.
                let mut v = vec![0.0; m];
                for s in &span {
                    for (vi, si) in v.iter_mut().zip(s) {
                        *vi += s[k] * si;
                    }
                }
                for b in &basis {
                    let d = dot(&v, b);
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= d * bi);
                }
                let len = norm(&v);
                if len > 1e-6 {
                    basis.push(v.into_iter().map(|x| x / len).collect());
                }
            }
            for (slot, b) in q[start..end].iter_mut().zip(basis) {
                *slot = b;
            }
        }
        start = end;
    }
}

/// Outcome of an interlacing check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterlacingReport {
    pub holds: bool,
    pub max_violation: f64,
}

/// Checks `gamma_1 <= lambda_1 <= gamma_2 <= ... <= lambda_{n-1} <= gamma_n`
/// within `1e-9 * max(gamma_n, 1)`.
pub fn verify_interlacing(gammas: &[f64], lambdas: &[f64]) -> Result<InterlacingReport> {
    if gammas.is_empty() || lambdas.len() + 1 != gammas.len() {
        return Err(Error::LengthMismatch {
            expected: gammas.len().saturating_sub(1),
            actual: lambdas.len(),
        });
    }
    let mut g = gammas.to_vec();
    let mut l = lambdas.to_vec();
    g.sort_by(f64::total_cmp);
    l.sort_by(f64::total_cmp);
    let max_violation = l
        .iter()
        .enumerate()
        .map(|(j, &lam)| (g[j] - lam).max(lam - g[j + 1]).max(0.0))
        .fold(0.0, f64::max);
    let tol = INTERLACING_TOL * g[g.len() - 1].max(1.0);
    Ok(InterlacingReport {
        holds: max_violation <= tol,
        max_violation,
    })
}

/// Coefficients recovered from a frequency spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseSolution {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Frequencies of the forward problem on `(a, b)`.
    pub round_trip_lambdas: Vec<f64>,
    /// Largest relative deviation from the requested frequencies.
    pub round_trip_error: f64,
}

impl InverseSolution {
    pub fn spec(&self) -> Result<MarketSpec> {
        MarketSpec::from_coefficients(self.a.clone(), self.b.clone())
    }
}

/// Constructs `(a, b)` (scale fixed by `sum 1/a_i = 1`) whose proper
/// frequencies are `gammas` and whose normal-mode frequencies are `lambdas`.
///
/// With `mu_i = 1/gamma_i^2` and `nu_j = 1/lambda_j^2` the squared weights
/// `w_i^2 = prod_j (mu_i - nu_j) / prod_{k != i} (mu_i - mu_k)` are the
/// components of the unit constraint direction, and `a_i = 1 / w_i^2`.
pub fn inverse_from_frequencies(gammas: &[f64], lambdas: &[f64]) -> Result<InverseSolution> {
    let n = gammas.len();
    if n < 2 || lambdas.len() + 1 != n {
        return Err(Error::LengthMismatch {
            expected: n.saturating_sub(1),
            actual: lambdas.len(),
        });
    }
    if gammas
        .iter()
        .chain(lambdas)
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return Err(Error::invalid(
            "gammas",
            "frequencies must be positive and finite",
        ));
    }
    // Merged sequence gamma_1, lambda_1, gamma_2, ... must increase strictly.
    for j in 0..n - 1 {
        if !(gammas[j] < lambdas[j]) {
            return Err(Error::InterlacingViolation { index: 2 * j });
        }
        if !(lambdas[j] < gammas[j + 1]) {
            return Err(Error::InterlacingViolation { index: 2 * j + 1 });
        }
    }
    let mu: Vec<f64> = gammas.iter().map(|g| 1.0 / (g * g)).collect();
    let nu: Vec<f64> = lambdas.iter().map(|l| 1.0 / (l * l)).collect();
    let w2: Vec<f64> = (0..n)
        .map(|i| {
            // Pair each numerator factor with a denominator factor to keep
            // the running product in range.
            let mut log = 0.0;
            let mut k = 0;
            for &nu_j in &nu {
                if k == i {
                    k += 1;
                }
                log += ((mu[i] - nu_j) / (mu[i] - mu[k])).abs().ln();
                k += 1;
            }
            log.exp()
        })
        .collect();
    let total: f64 = w2.iter().sum();
    let a: Vec<f64> = w2.iter().map(|w| total / w).collect();
    let b: Vec<f64> = a.iter().zip(gammas).map(|(a, g)| a / (g * g)).collect();

    let spec = MarketSpec::from_coefficients(a.clone(), b.clone())?;
    let forward = normal_modes(&spec)?;
    let round_trip_error = forward
        .lambdas
        .iter()
        .zip(lambdas)
        .map(|(f, l)| (f - l).abs() / l)
        .fold(0.0, f64::max);
    if !(round_trip_error <= ROUND_TRIP_TOL) {
        return Err(Error::NonReproducible {
            error: round_trip_error,
        });
    }
    Ok(InverseSolution {
        a,
        b,
        round_trip_lambdas: forward.lambdas,
        round_trip_error,
    })
}

/// Exact solution `z_j(t) = z_j(0) cos(lambda_j t) + zdot_j(0) sin(lambda_j t) / lambda_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution {
    decomp: NormalModeDecomposition,
    z0: Vec<f64>,
    zdot0: Vec<f64>,
}

impl ClosedFormSolution {
    /// State at time `t`.
    pub fn state(&self, t: f64) -> ConstrainedState {
        let (z, zdot) = self.modal_state(t);
        ConstrainedState::new(self.decomp.from_modal(&z), self.decomp.from_modal(&zdot))
    }

    pub fn modal_state(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut z = Vec::with_capacity(self.z0.len());
        let mut zdot = Vec::with_capacity(self.z0.len());
        for ((&lam, &z0), &v0) in self.decomp.lambdas.iter().zip(&self.z0).zip(&self.zdot0) {
            let (s, c) = (lam * t).sin_cos();
            z.push(z0 * c + v0 / lam * s);
            zdot.push(-z0 * lam * s + v0 * c);
        }
        (z, zdot)
    }

    /// Amplitude `A_j` and phase `d_j` with `z_j(t) = A_j sin(lambda_j t + d_j)`.
    pub fn amplitudes_and_phases(&self) -> Vec<(f64, f64)> {
        self.decomp
            .lambdas
            .iter()
            .zip(&self.z0)
            .zip(&self.zdot0)
            .map(|((&lam, &z0), &v0)| (z0.hypot(v0 / lam), z0.atan2(v0 / lam)))
            .collect()
    }

    pub fn decomposition(&self) -> &NormalModeDecomposition {
        &self.decomp
    }
}

/// Projects the initial state onto the modes and returns the exact sampler.
pub fn closed_form_solution(
    decomp: &NormalModeDecomposition,
    initial: &ConstrainedState,
) -> Result<ClosedFormSolution> {
    let n = decomp.n();
    for len in [initial.x.len(), initial.xdot.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    Ok(ClosedFormSolution {
        decomp: decomp.clone(),
        z0: decomp.to_modal(&initial.x),
        zdot0: decomp.to_modal(&initial.xdot),
    })
}
