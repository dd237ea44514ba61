//! Blind beamformer estimation from preamble samples.
//!
//! All three methods work on the `n_r x L` sample matrix of a block sent under
//! a single BD symbol, where the dominant direction of `y` is `g(x)` whatever
//! the ambient waveform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, inner, norm_sqr, outer, phase_aligned_distance, CMatrix, CVector, C64};

pub const DEFAULT_POWER_TOL: f64 = 1e-8;
pub const DEFAULT_POWER_MAX_ITER: usize = 50;

/// Relative gap below which the top two singular values count as tied.
const SVD_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimationMethod {
    InvCov,
    Svd,
    PowerIter,
}

impl EstimationMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EstimationMethod::InvCov => "invcov",
            EstimationMethod::Svd => "svd",
            EstimationMethod::PowerIter => "poweriter",
        }
    }
}

/// Preamble samples as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    y: CMatrix,
}

impl SampleMatrix {
    pub fn new(y: CMatrix) -> Result<Self> {
        if y.ncols() == 0 || y.nrows() == 0 {
            return Err(Error::InvalidParameter("sample matrix is empty".into()));
        }
        Ok(SampleMatrix { y })
    }

    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::InvalidParameter("sample matrix is empty".into()));
        };
        let n = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(CMatrix::from_columns(columns))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.y
    }

    pub fn n_r(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.ncols() == 0
    }
}

/// An estimated beamformer. For the subspace methods `g_hat` is the unit
/// dominant direction and `g_matrix = I - g_hat g_hat^H`; for the
/// inverse-covariance method `g_matrix` is the inverse sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerEstimate {
    g_hat: Option<CVector>,
    g_matrix: CMatrix,
    method: EstimationMethod,
}

impl BeamformerEstimate {
    fn from_direction(g_hat: CVector, method: EstimationMethod) -> Self {
        let n = g_hat.len();
        let g_matrix = CMatrix::identity(n, n) - outer(&g_hat);
        BeamformerEstimate {
            g_hat: Some(g_hat),
            g_matrix,
            method,
        }
    }

    pub fn g_hat(&self) -> Option<&CVector> {
        self.g_hat.as_ref()
    }

    pub fn g_matrix(&self) -> &CMatrix {
        &self.g_matrix
    }

    pub fn method(&self) -> EstimationMethod {
        self.method
    }
}

/// `R_p = (1/L) Y_p Y_p^H`.
pub fn sample_covariance(samples: &SampleMatrix) -> CMatrix {
    let y = samples.matrix();
    (y * y.adjoint()).unscale(samples.len() as f64)
}

/// `G_hat = R_p^{-1}`.
pub fn estimate_inv_cov(samples: &SampleMatrix) -> Result<BeamformerEstimate> {
    let n = samples.n_r();
    let not_enough = Error::NotEnoughSamples {
        samples: samples.len(),
        antennas: n,
    };
    if samples.len() < n {
        return Err(not_enough);
    }
    let r = sample_covariance(samples);
    // Hermitian inverse through the eigendecomposition, which also exposes
    // (near-)singularity.
    let (values, vectors) = hermitian_eigen(&r);
    let top = values[n - 1];
    if !(values[0] > top * 1e-14) {
        return Err(not_enough);
    }
    let mut inv = CMatrix::zeros(n, n);
    for (lam, v) in values.iter().zip(&vectors) {
        inv += outer(v).unscale(*lam);
    }
    Ok(BeamformerEstimate {
        g_hat: None,
        g_matrix: inv,
        method: EstimationMethod::InvCov,
    })
}

/// Dominant left-singular vector of `Y_p`.
pub fn estimate_svd(samples: &SampleMatrix) -> Result<BeamformerEstimate> {
    let svd = samples.matrix().clone().svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let s1 = sv[order[0]];
    if s1 == 0.0 {
        return Err(Error::InvalidParameter("sample matrix is zero".into()));
    }
    // With a single column (or n_r = 1) there is no competing direction.
    let s2 = order.get(1).map_or(0.0, |&i| sv[i]);
    if s1 - s2 <= SVD_TIE_TOL * s1 {
        return Err(Error::SingularValueTie { sigma1: s1, sigma2: s2 });
    }
    let g_hat = u.column(order[0]).into_owned();
    Ok(BeamformerEstimate::from_direction(g_hat, EstimationMethod::Svd))
}

/// Power iteration on `A = Y_p Y_p^H`, started from the first preamble sample.
pub fn estimate_power_iteration(samples: &SampleMatrix, tol: f64, max_iter: usize) -> Result<BeamformerEstimate> {
    let v0 = samples.matrix().column(0).into_owned();
    power_iteration_from(samples, v0, tol, max_iter)
}

/// Power iteration from an explicit starting vector.
///
/// Stops once `min_phi || v_{k+1} - e^{j phi} v_k || < tol`. A start vector
/// exactly orthogonal to the dominant eigenvector never picks that direction
/// up in exact arithmetic; the iteration then settles on the dominant
/// eigenvector of the remaining subspace.
pub fn power_iteration_from(samples: &SampleMatrix, v0: CVector, tol: f64, max_iter: usize) -> Result<BeamformerEstimate> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter(
            "power iteration needs tol > 0 and max_iter >= 1".into(),
        ));
    }
    if v0.len() != samples.n_r() {
        return Err(Error::DimensionMismatch {
            expected: samples.n_r(),
            found: v0.len(),
        });
    }
    let y = samples.matrix();
    let n0 = norm_sqr(&v0).sqrt();
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("power iteration start vector is zero".into()));
    }
    let mut v = v0.unscale(n0);
    let mut step = f64::INFINITY;
    for _ in 0..max_iter {
        // A v = Y (Y^H v) without forming A.
        let w = y * (y.adjoint() * &v);
        let nw = norm_sqr(&w).sqrt();
        if nw == 0.0 {
            break;
        }
        let next = w.unscale(nw);
        step = phase_aligned_distance(&next, &v);
        v = next;
        if step < tol {
            return Ok(BeamformerEstimate::from_direction(v, EstimationMethod::PowerIter));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_step: step,
        last_iterate: v.iter().copied().collect(),
    })
}

/// Runs `method` with default settings.
pub fn estimate(method: EstimationMethod, samples: &SampleMatrix) -> Result<BeamformerEstimate> {
    match method {
        EstimationMethod::InvCov => estimate_inv_cov(samples),
        EstimationMethod::Svd => estimate_svd(samples),
        EstimationMethod::PowerIter => estimate_power_iteration(samples, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER),
    }
}

/// `|g_hat^H g| / ||g||` for unit `g_hat`.
pub fn alignment(g_hat: &CVector, g: &CVector) -> f64 {
    let n = norm_sqr(g).sqrt();
    (inner(g_hat, g).norm() / n).min(1.0)
}

/// Scales a Hermitian PSD matrix so its largest eigenvalue is one.
pub fn normalize_by_largest_eigenvalue(m: &CMatrix) -> CMatrix {
    let (values, _) = hermitian_eigen(m);
    let top = values[values.len() - 1];
    m.unscale(top)
}

/// Unit-modulus scalar `e^{j phi}`.
pub fn unit_phase(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}
