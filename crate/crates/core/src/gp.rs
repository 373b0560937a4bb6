//! Gaussian process machinery over the spectral Matérn kernel: prior
//! sampling, marginal likelihood, hyperparameter training, and posterior
//! prediction.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{matern_kernel_block, KernelMatrix, MaternHyperparams, SpectralFactorization};

/// Observed nodes and their targets (traffic speed in mph).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    node_indices: Vec<usize>,
    targets: DVector<f64>,
}

impl TrainingData {
    pub fn new(node_indices: Vec<usize>, targets: Vec<f64>) -> Result<Self> {
        if node_indices.len() != targets.len() {
            return Err(Error::InvalidTrainingData(format!(
                "{} indices but {} targets",
                node_indices.len(),
                targets.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &i in &node_indices {
            if !seen.insert(i) {
                return Err(Error::InvalidTrainingData(format!(
                    "node {i} observed more than once"
                )));
            }
        }
        if let Some(&bad) = targets.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidTrainingData(format!(
                "non-finite target {bad}"
            )));
        }
        Ok(Self {
            node_indices,
            targets: DVector::from_vec(targets),
        })
    }

    pub fn node_indices(&self) -> &[usize] {
        &self.node_indices
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.node_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_indices.is_empty()
    }
}

/// Predictive mean and variance over every graph node, with the
/// hyperparameters and likelihood that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct GpPosterior {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub hyperparams: MaternHyperparams,
    pub final_nll: f64,
}

/// Cholesky with escalating jitter: starts at `1e-10 * mean(diag)` and
/// multiplies by 10 until `1e-4 * mean(diag)`, then gives up.
fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let scale = {
        let d = m.diagonal().mean();
        if d > 0.0 {
            d
        } else {
            1.0
        }
    };
    let mut jitter = 1e-10 * scale;
    let max_jitter = 1e-4 * scale;
    while jitter <= max_jitter {
        let mut jittered = m.clone();
        for i in 0..m.nrows() {
            jittered[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(jittered) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::SingularCovariance { max_jitter })
}

/// I.i.d. draws from `N(0, K)` via a Cholesky factor of `K + jitter I`
/// with `jitter = 1e-10 trace(K)/n`. Deterministic given the seed.
pub fn prior_sample(k: &KernelMatrix, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    assert!(count >= 1, "sample count must be at least 1");
    let n = k.dim();
    let jitter = 1e-10 * k.matrix().trace() / n as f64;
    let mut m = k.matrix().clone();
    for i in 0..n {
        m[(i, i)] += jitter;
    }
    let chol = Cholesky::new(m).ok_or(Error::FactorizationFailure)?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let z = DVector::from_iterator(
            n,
            (0..n).map(|_| StandardNormal.sample(&mut rng)),
        );
        samples.push((&l * z).iter().copied().collect());
    }
    Ok(samples)
}

fn nll_from_parts(k_obs: &DMatrix<f64>, noise_variance: f64, y: &DVector<f64>) -> Result<f64> {
    let m = y.len();
    let mut c = k_obs.clone();
    for i in 0..m {
        c[(i, i)] += noise_variance;
    }
    let chol = cholesky_with_jitter(&c)?;
    let alpha = chol.solve(y);
    let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    Ok(0.5 * y.dot(&alpha)
        + 0.5 * log_det
        + 0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Negative log marginal likelihood of the observed targets under the
/// kernel's observed-node submatrix plus noise, computed through a Cholesky
/// factorization (never an explicit inverse).
pub fn log_marginal_likelihood(k: &KernelMatrix, d: &TrainingData) -> Result<f64> {
    let n = k.dim();
    if let Some(&bad) = d.node_indices().iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            node_count: n,
        });
    }
    let idx = d.node_indices();
    let mut k_obs = DMatrix::zeros(idx.len(), idx.len());
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            k_obs[(r, c)] = k.matrix()[(i, j)];
        }
    }
    nll_from_parts(&k_obs, k.hyperparams().noise_variance, d.targets())
}

fn nll_for(f: &SpectralFactorization, h: &MaternHyperparams, d: &TrainingData) -> Result<f64> {
    let k_obs = matern_kernel_block(f, h, d.node_indices(), d.node_indices());
    // scrub rounding asymmetry before factorizing
    let k_obs = (&k_obs + k_obs.transpose()) * 0.5;
    nll_from_parts(&k_obs, h.noise_variance, d.targets())
}

// log-space parameter vector [ln nu, ln kappa, ln scale, ln noise_var]
fn to_log(h: &MaternHyperparams) -> [f64; 4] {
    [
        h.nu.ln(),
        h.kappa.ln(),
        h.output_scale.ln(),
        h.noise_variance.max(1e-12).ln(),
    ]
}

fn from_log(theta: &[f64; 4]) -> MaternHyperparams {
    let clamp = |x: f64| x.clamp(-30.0, 20.0);
    MaternHyperparams {
        nu: clamp(theta[0]).exp(),
        kappa: clamp(theta[1]).exp(),
        output_scale: clamp(theta[2]).exp(),
        noise_variance: clamp(theta[3]).exp(),
    }
}

const FD_STEP: f64 = 1e-5;

fn fd_gradient(
    f: &SpectralFactorization,
    d: &TrainingData,
    theta: &[f64; 4],
    step: f64,
) -> Result<[f64; 4]> {
    let mut g = [0.0; 4];
    for i in 0..4 {
        let mut plus = *theta;
        plus[i] += step;
        let mut minus = *theta;
        minus[i] -= step;
        let fp = nll_for(f, &from_log(&plus), d)?;
        let fm = nll_for(f, &from_log(&minus), d)?;
        g[i] = (fp - fm) / (2.0 * step);
    }
    Ok(g)
}

/// Minimize the negative log marginal likelihood over
/// `(log nu, log kappa, log output_scale, log noise_variance)` by gradient
/// descent with central finite-difference gradients and backtracking line
/// search. The returned hyperparameters never score worse than `init`.
pub fn fit_hyperparameters(
    f: &SpectralFactorization,
    d: &TrainingData,
    init: &MaternHyperparams,
    budget: usize,
) -> Result<MaternHyperparams> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    let mut theta = to_log(init);
    let mut current = nll_for(f, &from_log(&theta), d)?;
    let mut best_theta = theta;
    let mut best = current;
    // grow the trial step after successes so long shallow valleys are
    // crossed in reasonable time
    let mut alpha0 = 1.0;
    for _ in 0..budget {
        let g = fd_gradient(f, d, &theta, FD_STEP)?;
        let g_norm_sq: f64 = g.iter().map(|x| x * x).sum();
        if g_norm_sq.sqrt() < 1e-10 {
            break;
        }
        let mut alpha = alpha0 / g_norm_sq.sqrt().max(1.0);
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = theta;
            for i in 0..4 {
                trial[i] -= alpha * g[i];
            }
            match nll_for(f, &from_log(&trial), d) {
                Ok(v) if v < current - 1e-4 * alpha * g_norm_sq => {
                    theta = trial;
                    current = v;
                    accepted = true;
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        if !accepted {
            break;
        }
        alpha0 = (alpha * g_norm_sq.sqrt().max(1.0) * 2.0).clamp(1e-6, 1e4);
        if current < best {
            best = current;
            best_theta = theta;
        }
    }
    Ok(from_log(&best_theta))
}

/// Default optimizer starting point for targets `y`: unit smoothness and
/// length-scale, amplitude at the sample standard deviation, noise at a
/// tenth of it.
pub fn default_init(targets: &DVector<f64>) -> MaternHyperparams {
    let m = targets.len() as f64;
    let mean = targets.mean();
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / m.max(1.0);
    let std = var.sqrt().max(1e-3);
    MaternHyperparams {
        nu: 1.0,
        kappa: 1.0,
        output_scale: std,
        noise_variance: (0.1 * std).powi(2),
    }
}

/// Standard GP predictive equations over all graph nodes:
/// mean `K_*o (K_oo + s I)^{-1} y`, variance
/// `diag(K_**) - diag(K_*o (K_oo + s I)^{-1} K_o*)`, clamped at zero.
pub fn posterior_predict(
    f: &SpectralFactorization,
    h: &MaternHyperparams,
    d: &TrainingData,
) -> Result<GpPosterior> {
    let n = f.dim();
    if let Some(&bad) = d.node_indices().iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            node_count: n,
        });
    }
    let obs = d.node_indices();
    let all: Vec<usize> = (0..n).collect();
    let k_obs = {
        let k = matern_kernel_block(f, h, obs, obs);
        (&k + k.transpose()) * 0.5
    };
    let mut c = k_obs.clone();
    for i in 0..obs.len() {
        c[(i, i)] += h.noise_variance;
    }
    let chol = cholesky_with_jitter(&c)?;
    let alpha = chol.solve(d.targets());
    let k_cross = matern_kernel_block(f, h, &all, obs); // n x m
    let mean = &k_cross * &alpha;

    let solved = chol.solve(&k_cross.transpose()); // m x n
    let prior_diag: Vec<f64> = (0..n)
        .map(|i| {
            f.singular_values()
                .iter()
                .enumerate()
                .map(|(c, &s)| f.right_vectors()[(i, c)].powi(2) * h.spectral_density(s))
                .sum()
        })
        .collect();
    let variance: Vec<f64> = (0..n)
        .map(|i| {
            let reduction: f64 = (0..obs.len()).map(|j| k_cross[(i, j)] * solved[(j, i)]).sum();
            (prior_diag[i] - reduction).max(0.0)
        })
        .collect();
    let final_nll = nll_from_parts(&k_obs, h.noise_variance, d.targets())?;
    Ok(GpPosterior {
        mean: mean.iter().copied().collect(),
        variance,
        hyperparams: *h,
        final_nll,
    })
}

/// Euclidean norm of the posterior-mean residuals over a test set.
pub fn l2_test_error(posterior: &GpPosterior, test: &TrainingData) -> Result<f64> {
    let n = posterior.mean.len();
    let mut sum = 0.0;
    for (&i, &y) in test.node_indices().iter().zip(test.targets().iter()) {
        if i >= n {
            return Err(Error::IndexOutOfRange {
                index: i,
                node_count: n,
            });
        }
        sum += (posterior.mean[i] - y).powi(2);
    }
    Ok(sum.sqrt())
}
