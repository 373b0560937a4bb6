//! The Matérn kernel built from the singular value decomposition of the
//! advection operator, plus the simple symmetrized-average baseline.
//!
//! The covariance is `V diag((2 nu / kappa^2 + sigma_i^2)^{-nu}) V^T` for the
//! right singular vectors `V` and singular values `sigma_i` of the operator,
//! scaled by the squared output scale. Working from the SVD avoids forming
//! `L^T L`, which doubles the condition number.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LinearOperator, OperatorKind};

/// Thin SVD `M = U diag(sigma) V^T` with singular values in descending
/// order and a fixed sign convention (the first component of each right
/// singular vector above 1e-12 in magnitude is positive), so repeated calls
/// on identical input produce identical output.
#[derive(Debug, Clone)]
pub struct SpectralFactorization {
    left_vectors: DMatrix<f64>,
    singular_values: DVector<f64>,
    right_vectors: DMatrix<f64>,
}

impl SpectralFactorization {
    pub fn left_vectors(&self) -> &DMatrix<f64> {
        &self.left_vectors
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn right_vectors(&self) -> &DMatrix<f64> {
        &self.right_vectors
    }

    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }

    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.left_vectors
            * DMatrix::from_diagonal(&self.singular_values)
            * self.right_vectors.transpose()
    }
}

/// Matérn hyperparameters. All strictly positive except the noise variance,
/// which may be zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternHyperparams {
    /// Smoothness nu.
    pub nu: f64,
    /// Length-scale kappa.
    pub kappa: f64,
    /// Signal amplitude; multiplies the kernel as its square.
    pub output_scale: f64,
    /// Observation noise variance added to the diagonal during inference.
    pub noise_variance: f64,
}

impl MaternHyperparams {
    pub fn new(nu: f64, kappa: f64, output_scale: f64, noise_variance: f64) -> Result<Self> {
        let positive = |name: &str, x: f64| -> Result<()> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidHyperparams(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        positive("nu", nu)?;
        positive("kappa", kappa)?;
        positive("output_scale", output_scale)?;
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidHyperparams(format!(
                "noise_variance must be nonnegative and finite, got {noise_variance}"
            )));
        }
        Ok(Self {
            nu,
            kappa,
            output_scale,
            noise_variance,
        })
    }

    /// Kernel eigenvalue attached to singular value `sigma`:
    /// `output_scale^2 (2 nu / kappa^2 + sigma^2)^{-nu}`.
    pub fn spectral_density(&self, sigma: f64) -> f64 {
        self.output_scale.powi(2)
            * (2.0 * self.nu / self.kappa.powi(2) + sigma * sigma).powf(-self.nu)
    }
}

/// A dense symmetric covariance matrix together with the hyperparameters
/// that produced it.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    matrix: DMatrix<f64>,
    hyperparams: MaternHyperparams,
}

impl KernelMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn hyperparams(&self) -> &MaternHyperparams {
        &self.hyperparams
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Thin SVD of an operator via Golub-Kahan bidiagonalization (never through
/// the explicit product `M^T M`).
pub fn thin_svd(op: &LinearOperator) -> Result<SpectralFactorization> {
    let m = op.matrix();
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 1000)
        .ok_or(Error::ConvergenceFailure)?;
    let mut u = svd.u.ok_or(Error::ConvergenceFailure)?;
    let mut sigma = svd.singular_values.clone();
    let mut v = svd.v_t.ok_or(Error::ConvergenceFailure)?.transpose();

    // nalgebra's bidiagonal SVD occasionally returns a badly wrong factor
    // for exactly singular matrices; verify by reconstruction and fall back
    // to one-sided Jacobi when that happens
    let scale = m.abs().max().max(1.0);
    let recon_err = (&u * DMatrix::from_diagonal(&sigma) * v.transpose() - m).abs().max();
    if !recon_err.is_finite() || recon_err > 1e-8 * scale {
        let (ju, js, jv) = jacobi_svd(m);
        u = ju;
        sigma = js;
        v = jv;
    }

    // descending singular values
    let n = sigma.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let mut u = DMatrix::from_columns(&order.iter().map(|&j| u.column(j)).collect::<Vec<_>>());
    let mut v = DMatrix::from_columns(&order.iter().map(|&j| v.column(j)).collect::<Vec<_>>());
    let sigma = DVector::from_iterator(n, order.iter().map(|&j| sigma[j]));

    // sign convention: first component of each right singular vector with
    // magnitude above 1e-12 is positive
    for j in 0..n {
        let flip = v
            .column(j)
            .iter()
            .find(|x| x.abs() > 1e-12)
            .is_some_and(|&x| x < 0.0);
        if flip {
            v.column_mut(j).neg_mut();
            u.column_mut(j).neg_mut();
        }
    }
    Ok(SpectralFactorization {
        left_vectors: u,
        singular_values: sigma,
        right_vectors: v,
    })
}

/// One-sided Jacobi SVD: rotate column pairs of a working copy of `m` until
/// all columns are mutually orthogonal, accumulating the rotations into `V`.
/// Column norms are then the singular values. Slower than bidiagonalization
/// but reliable on rank-deficient input.
fn jacobi_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = m.ncols();
    let mut a = m.clone();
    let mut v = DMatrix::identity(n, n);
    let tol = 1e-15;
    for _ in 0..64 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = a.column(p).dot(&a.column(p));
                let beta = a.column(q).dot(&a.column(q));
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (ap, aq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * ap - s * aq;
                    a[(i, q)] = s * ap + c * aq;
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = DVector::from_iterator(n, (0..n).map(|j| a.column(j).norm()));
    let sigma_max = sigma.max().max(f64::MIN_POSITIVE);
    let mut u = DMatrix::zeros(n, n);
    let mut null_cols = Vec::new();
    for j in 0..n {
        if sigma[j] > 1e-13 * sigma_max {
            let col = a.column(j) / sigma[j];
            u.column_mut(j).copy_from(&col);
        } else {
            null_cols.push(j);
        }
    }
    // complete left vectors for (numerically) zero singular values by
    // Gram-Schmidt against the columns already placed
    for &j in &null_cols {
        for e in 0..n {
            let mut cand = DVector::zeros(n);
            cand[e] = 1.0;
            for k in 0..n {
                if k != j && (u.column(k).norm() > 0.5) {
                    let proj = u.column(k).dot(&cand);
                    cand -= proj * DVector::from(u.column(k));
                }
            }
            let norm = cand.norm();
            if norm > 1e-6 {
                u.column_mut(j).copy_from(&(cand / norm));
                break;
            }
        }
    }
    (u, sigma, v)
}

/// Assemble the Matérn covariance from a factorization. The result is
/// explicitly symmetrized to scrub rounding asymmetry.
pub fn matern_kernel(f: &SpectralFactorization, h: &MaternHyperparams) -> KernelMatrix {
    let d = f.singular_values.map(|s| h.spectral_density(s));
    let v = &f.right_vectors;
    let k = v * DMatrix::from_diagonal(&d) * v.transpose();
    let matrix = (&k + k.transpose()) * 0.5;
    KernelMatrix {
        matrix,
        hyperparams: *h,
    }
}

/// Covariance rows restricted to a subset of nodes: `K[rows, cols]`
/// assembled directly from the factorization without building the full
/// matrix. Used by the likelihood, where only the observed block is needed.
pub fn matern_kernel_block(
    f: &SpectralFactorization,
    h: &MaternHyperparams,
    rows: &[usize],
    cols: &[usize],
) -> DMatrix<f64> {
    let d = f.singular_values.map(|s| h.spectral_density(s));
    let v = &f.right_vectors;
    let scale_row = |idx: &[usize]| {
        let mut m = DMatrix::zeros(idx.len(), v.ncols());
        for (r, &i) in idx.iter().enumerate() {
            for c in 0..v.ncols() {
                m[(r, c)] = v[(i, c)];
            }
        }
        m
    };
    let vr = scale_row(rows);
    let mut vc = scale_row(cols);
    for c in 0..vc.ncols() {
        vc.column_mut(c).scale_mut(d[c]);
    }
    vr * vc.transpose()
}

/// `(M + M^T) / 2`. Positive semi-definite only when the underlying graph
/// is balanced.
pub fn symmetrized_average(op: &LinearOperator) -> LinearOperator {
    let m = op.matrix();
    let sym = (m + m.transpose()) * 0.5;
    LinearOperator::new(sym, OperatorKind::SymmetrizedAverage)
}

/// Minimum-eigenvalue PSD test for a symmetric matrix.
///
/// The matrix must be symmetric to 1e-10; the verdict is
/// `min_eig >= -1e-8 * max(1, max_eig)`.
pub fn psd_check(m: &DMatrix<f64>) -> Result<(bool, f64)> {
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let eigs = m.clone().symmetric_eigenvalues();
    let min_eig = eigs.min();
    let max_eig = eigs.max();
    let is_psd = min_eig >= -1e-8 * max_eig.max(1.0);
    Ok((is_psd, min_eig))
}
