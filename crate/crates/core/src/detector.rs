//! Projector beamformers, the decision matrix `M` and both decision rules.
//!
//! With `g(x) = alpha + x beta` and the projector `G(x) = I - g g^H / ||g||^2`,
//! the optimum receiver compares the out-of-subspace energies
//! `y^H G(x1) y` and `y^H G(x0) y`. Their difference is the quadratic form of
//!
//! ```text
//! M = g0 g0^H / ||g0||^2 - g1 g1^H / ||g1||^2,
//! ```
//!
//! a rank-2 indefinite matrix with eigenvalues `+kappa`, `-kappa`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelPair;
use crate::linalg::{hermitian_eigen, inner, norm_sqr, outer, phase_aligned_distance, quad_form, CMatrix, CVector, C64};
pub use crate::signal::BdSymbol;
use crate::signal::BdAlphabet;

/// `kappa^2` below this is treated as zero.
pub const KAPPA2_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn symbol(self) -> BdSymbol {
        match self {
            Hypothesis::H0 => BdSymbol::X0,
            Hypothesis::H1 => BdSymbol::X1,
        }
    }
}

/// `g0 = alpha + x0 beta` and `g1 = alpha + x1 beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeChannel {
    g0: CVector,
    g1: CVector,
}

impl CompositeChannel {
    pub fn new(g0: CVector, g1: CVector) -> Result<Self> {
        if g0.len() != g1.len() {
            return Err(Error::DimensionMismatch {
                expected: g0.len(),
                found: g1.len(),
            });
        }
        if norm_sqr(&g0) == 0.0 {
            return Err(Error::ZeroCompositeChannel("x0"));
        }
        if norm_sqr(&g1) == 0.0 {
            return Err(Error::ZeroCompositeChannel("x1"));
        }
        Ok(CompositeChannel { g0, g1 })
    }

    pub fn g0(&self) -> &CVector {
        &self.g0
    }

    pub fn g1(&self) -> &CVector {
        &self.g1
    }

    pub fn g(&self, symbol: BdSymbol) -> &CVector {
        match symbol {
            BdSymbol::X0 => &self.g0,
            BdSymbol::X1 => &self.g1,
        }
    }

    pub fn n_r(&self) -> usize {
        self.g0.len()
    }
}

pub fn composite_channel(channels: &ChannelPair, alphabet: &BdAlphabet) -> Result<CompositeChannel> {
    CompositeChannel::new(channels.composite(alphabet.x0()), channels.composite(alphabet.x1()))
}

/// `G = I - g g^H / ||g||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    direction: CVector,
}

impl Projector {
    pub fn new(g: &CVector) -> Result<Self> {
        let n = norm_sqr(g).sqrt();
        if n == 0.0 {
            return Err(Error::InvalidParameter("projector direction is the zero vector".into()));
        }
        Ok(Projector {
            direction: g.unscale(n),
        })
    }

    /// Unit vector spanning the annihilated subspace.
    pub fn direction(&self) -> &CVector {
        &self.direction
    }

    pub fn n_r(&self) -> usize {
        self.direction.len()
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::identity(self.n_r(), self.n_r()) - outer(&self.direction)
    }

    /// `y^H G y = ||y||^2 - |g^H y|^2 / ||g||^2`.
    pub fn energy(&self, y: &CVector) -> f64 {
        (norm_sqr(y) - inner(&self.direction, y).norm_sqr()).max(0.0)
    }
}

pub fn projector(g: &CVector) -> Result<Projector> {
    Projector::new(g)
}

/// `M = g0 g0^H / ||g0||^2 - g1 g1^H / ||g1||^2`, built densely.
pub fn decision_matrix(cc: &CompositeChannel) -> CMatrix {
    let a = cc.g0.unscale(norm_sqr(&cc.g0).sqrt());
    let b = cc.g1.unscale(norm_sqr(&cc.g1).sqrt());
    outer(&a) - outer(&b)
}

/// Eigen-pairs `(+kappa, u1)` and `(-kappa, u2)` of the decision matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MEigen {
    kappa: f64,
    u1: CVector,
    u2: CVector,
}

impl MEigen {
    /// Closed-form eigensystem.
    ///
    /// Writing `c = g0^H g1 / (||g0|| ||g1||)` and `e` for the unit part of
    /// `g1` orthogonal to `g0`, the unit eigenvectors are
    ///
    /// ```text
    /// u1 = ((1 + kappa) g0/||g0|| - conj(c) e) / sqrt(2 (1 + kappa))
    /// u2 = (c g0/||g0|| + (1 + kappa) e) / sqrt(2 (1 + kappa))
    /// ```
    ///
    /// with `1 + kappa = (D + P) / P`, `D = sqrt(||g0||^2 ||g1||^2 - |g0^H g1|^2)`,
    /// `P = ||g0|| ||g1||`. This is the usual pair scaled to stay finite when
    /// `g0` and `g1` are orthogonal.
    pub fn closed_form(cc: &CompositeChannel) -> Result<Self> {
        let n0 = norm_sqr(&cc.g0).sqrt();
        let n1 = norm_sqr(&cc.g1).sqrt();
        let g0_hat = cc.g0.unscale(n0);
        // Component of g1 orthogonal to g0; its relative size is kappa.
        let proj = inner(&g0_hat, &cc.g1);
        let w = &cc.g1 - &g0_hat * proj;
        let w_norm = norm_sqr(&w).sqrt();
        let kappa = w_norm / n1;
        if !(kappa * kappa >= KAPPA2_FLOOR) {
            return Err(Error::InseparableHypotheses { kappa2: kappa * kappa });
        }
        let kappa = kappa.min(1.0);
        let e = w.unscale(w_norm);
        let c = proj / n1;
        let norm = (2.0 * (1.0 + kappa)).sqrt();
        let one_k = C64::new(1.0 + kappa, 0.0);
        let u1 = (&g0_hat * one_k - &e * c.conj()).unscale(norm);
        let u2 = (&g0_hat * c + &e * one_k).unscale(norm);
        let me = MEigen { kappa, u1, u2 };
        if cfg!(debug_assertions) {
            me.check_against_dense(cc)?;
        }
        Ok(me)
    }

    /// Builds an eigensystem without any checks. Only meant for negative
    /// controls in validation code.
    #[doc(hidden)]
    pub fn from_parts_unchecked(kappa: f64, u1: CVector, u2: CVector) -> Self {
        MEigen { kappa, u1, u2 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn u1(&self) -> &CVector {
        &self.u1
    }

    pub fn u2(&self) -> &CVector {
        &self.u2
    }

    pub fn n_r(&self) -> usize {
        self.u1.len()
    }

    /// Compares against a dense Hermitian eigensolver run on `M`.
    pub fn check_against_dense(&self, cc: &CompositeChannel) -> Result<()> {
        let (kd, e1, e2) = dense_m_eigen(cc);
        let scale = 1e-8;
        let dk = (kd - self.kappa).abs();
        let d1 = phase_aligned_distance(&self.u1, &e1);
        let d2 = phase_aligned_distance(&self.u2, &e2);
        // Eigenvectors are only determined well when kappa is not tiny.
        let vec_tol = scale / self.kappa.max(1e-3);
        if dk > 1e-10 || d1 > vec_tol || d2 > vec_tol {
            return Err(Error::EigenMismatch(format!(
                "kappa {} vs {kd}; eigenvector distances {d1:e}, {d2:e}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// `(kappa, u1, u2)` from a dense eigendecomposition of `M`.
pub fn dense_m_eigen(cc: &CompositeChannel) -> (f64, CVector, CVector) {
    let m = decision_matrix(cc);
    let (values, vectors) = hermitian_eigen(&m);
    let n = values.len();
    let kappa = 0.5 * (values[n - 1] - values[0]);
    (kappa, vectors[n - 1].clone(), vectors[0].clone())
}

pub fn m_eigen(cc: &CompositeChannel) -> Result<MEigen> {
    MEigen::closed_form(cc)
}

/// `-y^H G y - n_r ln(pi)`: the log-likelihood of `y` with the ambient symbol
/// replaced by its ML estimate.
pub fn log_likelihood(y: &CVector, g: &Projector) -> f64 {
    -g.energy(y) - y.len() as f64 * PI.ln()
}

/// `z = kappa (|u1^H y|^2 - |u2^H y|^2)` and `zeta = |u1^H y|^2 / |u2^H y|^2`
/// (`+inf` when the second component vanishes).
pub fn test_statistic_z(y: &CVector, me: &MEigen) -> (f64, f64) {
    let t = inner(&me.u1, y).norm_sqr();
    let r = inner(&me.u2, y).norm_sqr();
    let zeta = if r == 0.0 { f64::INFINITY } else { t / r };
    (me.kappa * (t - r), zeta)
}

/// `x0` when `z > 0`; ties go to `x0` as well.
pub fn optimum_decide(y: &CVector, me: &MEigen) -> BdSymbol {
    let (z, _) = test_statistic_z(y, me);
    if z >= 0.0 {
        BdSymbol::X0
    } else {
        BdSymbol::X1
    }
}

/// `z_s = y^H G0 y`.
pub fn simplified_statistic(y: &CVector, g0: &Projector) -> f64 {
    g0.energy(y)
}

/// `H1` iff `z_s > v_t`.
pub fn simplified_decide(z_s: f64, v_t: f64) -> Hypothesis {
    if z_s > v_t {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// `s_ml = g^H y / ||g||^2`.
pub fn ml_ambient_estimate(y: &CVector, g: &CVector) -> C64 {
    let n = norm_sqr(g);
    assert!(n > 0.0, "ML ambient estimate needs a nonzero channel");
    inner(g, y) / n
}

#[derive(Debug, Clone, PartialEq)]
enum OptimumRule {
    Eigen(MEigen),
    /// `z = y^H A y` for an arbitrary Hermitian `A`.
    Quadratic(CMatrix),
}

/// Optimum receiver: decides `x0` iff `y^H M y >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumDetector {
    rule: OptimumRule,
}

impl OptimumDetector {
    pub fn from_composite(cc: &CompositeChannel) -> Result<Self> {
        Ok(OptimumDetector {
            rule: OptimumRule::Eigen(MEigen::closed_form(cc)?),
        })
    }

    pub fn from_eigen(me: MEigen) -> Self {
        OptimumDetector {
            rule: OptimumRule::Eigen(me),
        }
    }

    /// Uses `m` in place of the decision matrix.
    pub fn from_matrix(m: CMatrix) -> Self {
        OptimumDetector {
            rule: OptimumRule::Quadratic(m),
        }
    }

    pub fn eigen(&self) -> Option<&MEigen> {
        match &self.rule {
            OptimumRule::Eigen(me) => Some(me),
            OptimumRule::Quadratic(_) => None,
        }
    }

    pub fn statistic(&self, y: &CVector) -> f64 {
        match &self.rule {
            OptimumRule::Eigen(me) => test_statistic_z(y, me).0,
            OptimumRule::Quadratic(m) => quad_form(m, y),
        }
    }

    pub fn decide(&self, y: &CVector) -> BdSymbol {
        if self.statistic(y) >= 0.0 {
            BdSymbol::X0
        } else {
            BdSymbol::X1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum EnergyRule {
    Projector(Projector),
    Quadratic(CMatrix),
}

/// Energy detector behind a single projector: decides `x1` iff `z_s > v_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedDetector {
    rule: EnergyRule,
    v_t: f64,
}

impl SimplifiedDetector {
    pub fn new(g0: Projector, v_t: f64) -> Result<Self> {
        check_threshold(v_t)?;
        Ok(SimplifiedDetector {
            rule: EnergyRule::Projector(g0),
            v_t,
        })
    }

    /// Uses an arbitrary Hermitian PSD matrix in place of `G0`.
    pub fn from_matrix(g: CMatrix, v_t: f64) -> Result<Self> {
        check_threshold(v_t)?;
        Ok(SimplifiedDetector {
            rule: EnergyRule::Quadratic(g),
            v_t,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.v_t
    }

    pub fn statistic(&self, y: &CVector) -> f64 {
        match &self.rule {
            EnergyRule::Projector(p) => p.energy(y),
            EnergyRule::Quadratic(m) => quad_form(m, y),
        }
    }

    pub fn decide(&self, y: &CVector) -> BdSymbol {
        simplified_decide(self.statistic(y), self.v_t).symbol()
    }
}

fn check_threshold(v_t: f64) -> Result<()> {
    if v_t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("threshold must be >= 0, got {v_t}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorModel {
    Optimum(OptimumDetector),
    Simplified(SimplifiedDetector),
}

impl DetectorModel {
    pub fn decide(&self, y: &CVector) -> BdSymbol {
        match self {
            DetectorModel::Optimum(d) => d.decide(y),
            DetectorModel::Simplified(d) => d.decide(y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(r, i)| C64::new(r, i)))
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> CVector {
        crate::signal::noise_vector(n, rng)
    }

    #[test]
    fn composite_examples() {
        let alpha = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let beta = cv(&[(0.0, 0.0), (0.1, 0.0)]);
        let ch = ChannelPair::new(alpha.clone(), beta).unwrap();
        let cc = composite_channel(&ch, &BdAlphabet::bpsk()).unwrap();
        assert_eq!(cc.g0(), &cv(&[(1.0, 0.0), (-0.1, 0.0)]));
        assert_eq!(cc.g1(), &cv(&[(1.0, 0.0), (0.1, 0.0)]));
        let cc = composite_channel(&ch, &BdAlphabet::ook()).unwrap();
        assert_eq!(cc.g0(), &alpha);

        let ch = ChannelPair::new(alpha.clone(), CVector::zeros(2)).unwrap();
        let cc = composite_channel(&ch, &BdAlphabet::bpsk()).unwrap();
        assert_eq!(cc.g0(), cc.g1());
        // alpha = beta with BPSK: g0 = 0
        let ch = ChannelPair::new(alpha.clone(), alpha).unwrap();
        assert_eq!(
            composite_channel(&ch, &BdAlphabet::bpsk()),
            Err(Error::ZeroCompositeChannel("x0"))
        );
    }

    #[test]
    fn axis_projector() {
        let p = projector(&cv(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        let want = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        );
        assert!(max_abs(&(p.matrix() - want)) < 1e-15);
        assert!(projector(&CVector::zeros(3)).is_err());
    }

    #[test]
    fn projector_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_vec(8, &mut rng);
        let p = projector(&g).unwrap();
        let m = p.matrix();
        assert!(max_abs(&(&m * &m - &m)) < 1e-12);
        assert!((m * &g).norm() < 1e-12);
        let tr: C64 = p.matrix().trace();
        assert!((tr.re - 7.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_examples() {
        let cc = CompositeChannel::new(cv(&[(1.0, 0.0), (0.0, 0.0)]), cv(&[(0.0, 0.0), (0.0, 2.0)])).unwrap();
        assert!((m_eigen(&cc).unwrap().kappa() - 1.0).abs() < 1e-15);

        let g = cv(&[(1.0, 2.0), (0.5, 0.0)]);
        let cc = CompositeChannel::new(g.clone(), g * C64::new(0.0, 3.0)).unwrap();
        assert!(matches!(m_eigen(&cc), Err(Error::InseparableHypotheses { .. })));

        let h = 0.5f64.sqrt();
        let cc = CompositeChannel::new(cv(&[(1.0, 0.0), (0.0, 0.0)]), cv(&[(h, 0.0), (h, 0.0)])).unwrap();
        let me = m_eigen(&cc).unwrap();
        assert!((me.kappa() - h).abs() < 1e-12);
        // Dense 2x2: M = [[1/2, -1/2], [-1/2, -1/2]] has eigenvalues +-1/sqrt(2).
        let (vals, _) = hermitian_eigen(&decision_matrix(&cc));
        assert!((vals[0] + h).abs() < 1e-12 && (vals[1] - h).abs() < 1e-12);
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 4, 8, 16] {
            let cc = CompositeChannel::new(random_vec(n, &mut rng), random_vec(n, &mut rng)).unwrap();
            let me = m_eigen(&cc).unwrap();
            let m = decision_matrix(&cc);
            assert!((&m * me.u1() - me.u1() * C64::new(me.kappa(), 0.0)).norm() < 1e-12);
            assert!((&m * me.u2() + me.u2() * C64::new(me.kappa(), 0.0)).norm() < 1e-12);
            assert!(inner(me.u1(), me.u2()).norm() < 1e-12);
            let k2 = 1.0 - inner(cc.g0(), cc.g1()).norm_sqr() / (norm_sqr(cc.g0()) * norm_sqr(cc.g1()));
            assert!((me.kappa() - k2.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn likelihood_examples() {
        let g = cv(&[(1.0, 1.0), (0.0, 2.0), (-1.0, 0.0)]);
        let p = projector(&g).unwrap();
        let ln_pi = PI.ln();
        let y = &g * C64::new(-0.3, 2.0);
        assert!((log_likelihood(&y, &p) + 3.0 * ln_pi).abs() < 1e-12);
        let y = p.matrix() * cv(&[(0.3, 0.0), (1.0, -1.0), (2.0, 0.5)]);
        let y = y.unscale(y.norm());
        assert!(inner(&g, &y).norm() < 1e-15);
        assert!((log_likelihood(&y, &p) + 1.0 + 3.0 * ln_pi).abs() < 1e-12);
    }

    #[test]
    fn statistic_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cc = CompositeChannel::new(random_vec(4, &mut rng), random_vec(4, &mut rng)).unwrap();
        let me = m_eigen(&cc).unwrap();
        let (z, zeta) = test_statistic_z(me.u1(), &me);
        assert!((z - me.kappa()).abs() < 1e-12);
        assert!(zeta > 1e20);
        let y = me.u1() + me.u2() * C64::new(0.0, 1.0);
        let (z, zeta) = test_statistic_z(&y, &me);
        assert!(z.abs() < 1e-12 && (zeta - 1.0).abs() < 1e-12);
        let y = random_vec(4, &mut rng);
        let (z, _) = test_statistic_z(&y, &me);
        assert!((z - quad_form(&decision_matrix(&cc), &y)).abs() < 1e-10);
    }

    #[test]
    fn noiseless_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cc = CompositeChannel::new(random_vec(6, &mut rng), random_vec(6, &mut rng)).unwrap();
        let me = m_eigen(&cc).unwrap();
        let s = C64::new(3.0, -1.0);
        assert_eq!(optimum_decide(&(cc.g0() * s), &me), BdSymbol::X0);
        assert_eq!(optimum_decide(&(cc.g1() * s), &me), BdSymbol::X1);
        let det = OptimumDetector::from_matrix(decision_matrix(&cc));
        assert_eq!(det.decide(&(cc.g0() * s)), BdSymbol::X0);
        assert_eq!(det.decide(&(cc.g1() * s)), BdSymbol::X1);
    }

    #[test]
    fn simplified_rules() {
        let g = cv(&[(1.0, 0.0), (0.0, 1.0)]);
        let p = projector(&g).unwrap();
        assert!(simplified_statistic(&(&g * C64::new(5.0, 0.0)), &p).abs() < 1e-12);
        let y = cv(&[(0.0, 1.0), (1.0, 0.0)]);
        assert!((simplified_statistic(&y, &p) - 2.0).abs() < 1e-12);
        assert_eq!(simplified_decide(0.0, 1.0), Hypothesis::H0);
        assert_eq!(simplified_decide(1.0, 1.0), Hypothesis::H0);
        assert_eq!(simplified_decide(1.0 + 1e-12, 1.0), Hypothesis::H1);
        assert!(SimplifiedDetector::new(p, -1.0).is_err());
    }

    #[test]
    fn simplified_noise_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = projector(&random_vec(16, &mut rng)).unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| simplified_statistic(&random_vec(16, &mut rng), &p)).sum::<f64>() / n as f64;
        assert!((mean - 15.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn ml_estimate() {
        let g = cv(&[(1.0, 0.5), (0.0, -1.0), (2.0, 0.0)]);
        let s = C64::new(0.7, -0.2);
        assert!((ml_ambient_estimate(&(&g * s), &g) - s).norm() < 1e-14);
        let y = projector(&g).unwrap().matrix() * cv(&[(1.0, 0.0), (0.0, 0.0), (-0.5, 0.25)]);
        assert!(inner(&g, &y).norm() < 1e-15);
        assert!(ml_ambient_estimate(&y, &g).norm() < 1e-15);
    }

    #[test]
    fn ml_estimate_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_vec(4, &mut rng);
        let s = C64::new(1.0, 1.0);
        let n = 100_000;
        let var = (0..n)
            .map(|_| {
                let y = &g * s + random_vec(4, &mut rng);
                (ml_ambient_estimate(&y, &g) - s).norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        let want = 1.0 / norm_sqr(&g);
        assert!(((var - want) / want).abs() < 0.03, "{var} vs {want}");
    }
}
