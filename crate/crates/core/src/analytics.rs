//! Closed-form error probabilities and the distribution laws behind them.
//!
//! * Constant-modulus ambient signal, optimum receiver: the ratio
//!   `zeta = |u1^H y|^2 / |u2^H y|^2` follows a doubly non-central F law.
//! * Gaussian ambient signal, optimum receiver: `z = y^H M y` follows an
//!   asymmetric Laplace law.
//! * Simplified receiver: `y^H G0 y` is central chi-square under `x0` and
//!   non-central chi-square under `x1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{decision_matrix, CompositeChannel, MEigen};
use crate::error::{Error, Result};
use crate::geometry::{friis_channels, path_distances, ChannelPair, Point2};
use crate::linalg::{hermitian_eigen, inner, norm_sqr, outer, CMatrix, C64};
use crate::scenario::Scenario;
use crate::signal::{BdAlphabet, BdSymbol};
use crate::special::{
    inv_regularized_upper_gamma, log_beta, marcum_q, regularized_gamma_pq, regularized_upper_gamma, Probability,
};

/// Default omitted-probability budget of the F series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-10;
/// Maximum number of Poisson terms per series axis.
pub const SERIES_TERM_CAP: usize = 20_000;

/// Poisson weights of the two independent components of `zeta`.
///
/// With `u^H y ~ CN(m, 1)`, `|u^H y|^2` is a Poisson(`|m|^2`) mixture of
/// Gamma(`k + 1`, 1) variables, so `mu = |s|^2 |u^H g(x)|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DncfParams {
    pub mu1: f64,
    pub mu2: f64,
}

impl DncfParams {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        for (name, v) in [("mu1", mu1), ("mu2", mu2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(DncfParams { mu1, mu2 })
    }

    /// Parameters of `zeta` when `symbol` was sent.
    pub fn for_symbol(cc: &CompositeChannel, me: &MEigen, s_abs2: f64, symbol: BdSymbol) -> Result<Self> {
        let g = cc.g(symbol);
        Self::new(
            s_abs2 * inner(me.u1(), g).norm_sqr(),
            s_abs2 * inner(me.u2(), g).norm_sqr(),
        )
    }
}

/// Contiguous block of Poisson(`mu`) indices holding all but `omit` of the mass.
struct PoissonWindow {
    start: usize,
    weights: Vec<f64>,
}

fn poisson_window(mu: f64, omit: f64) -> Result<PoissonWindow> {
    if mu == 0.0 {
        return Ok(PoissonWindow {
            start: 0,
            weights: vec![1.0],
        });
    }
    let mode = mu.floor() as usize;
    let ln_w = |k: usize| k as f64 * mu.ln() - mu - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
    let w_mode = ln_w(mode).exp();
    let mut lo = mode;
    let mut hi = mode;
    let mut w_lo = w_mode;
    let mut w_hi = w_mode;
    let mut mass = w_mode;
    let mut low = Vec::new();
    let mut high = Vec::new();
    // Grow greedily towards the heavier neighbour until the omitted mass fits.
    while 1.0 - mass > omit {
        let next_lo = if lo > 0 { w_lo * lo as f64 / mu } else { 0.0 };
        let next_hi = w_hi * mu / (hi + 1) as f64;
        if next_lo == 0.0 && next_hi == 0.0 {
            break;
        }
        if next_lo >= next_hi {
            lo -= 1;
            w_lo = next_lo;
            low.push(next_lo);
            mass += next_lo;
        } else {
            hi += 1;
            w_hi = next_hi;
            high.push(next_hi);
            mass += next_hi;
        }
        let needed = hi - lo + 1;
        if needed > SERIES_TERM_CAP {
            // Roughly +-7 standard deviations are needed at the default budget.
            let estimate = (14.0 * mu.sqrt()) as usize + 1;
            return Err(Error::SeriesBudgetExceeded {
                needed: estimate.max(needed),
                cap: SERIES_TERM_CAP,
            });
        }
    }
    let mut weights: Vec<f64> = low.into_iter().rev().collect();
    weights.push(w_mode);
    weights.extend(high);
    Ok(PoissonWindow { start: lo, weights })
}

/// CDF of the doubly non-central F ratio `zeta = t / r` at `zeta`:
///
/// ```text
/// F(zeta) = sum_i sum_j Pois(i; mu1) Pois(j; mu2) I_{zeta/(1+zeta)}(i + 1, j + 1)
/// ```
///
/// Each Poisson axis is truncated so that its omitted mass stays below
/// `tol / 2`.
pub fn dncf_cdf(zeta: f64, p: &DncfParams, tol: f64) -> Result<Probability> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("series tolerance must be > 0, got {tol}")));
    }
    if zeta.is_nan() || zeta < 0.0 {
        return Err(Error::InvalidParameter(format!("zeta must be >= 0, got {zeta}")));
    }
    if zeta == 0.0 {
        return Ok(Probability::ZERO);
    }
    if zeta.is_infinite() {
        return Ok(Probability::ONE);
    }
    let wi = poisson_window(p.mu1, tol / 2.0)?;
    let wj = poisson_window(p.mu2, tol / 2.0)?;
    let x = zeta / (1.0 + zeta);
    let ln_x = x.ln();
    let ln_1mx = (-x).ln_1p();
    let j0 = wj.start;

    // Rows are evaluated in parallel but summed in a fixed order so the
    // result does not depend on the thread count.
    let rows: Vec<f64> = wi
        .weights
        .par_iter()
        .enumerate()
        .map(|(di, &w_i)| {
            let a = (wi.start + di) as f64 + 1.0;
            // I_x(a, b) along the row via
            //   I_x(a, b + 1) = I_x(a, b) + x^a (1-x)^b / (b B(a, b)).
            let mut b = j0 as f64 + 1.0;
            let mut ix = crate::special::incomplete_beta_raw(x, a, b);
            let mut ln_t = a * ln_x + b * ln_1mx - b.ln() - log_beta(a, b);
            let mut row = 0.0;
            for (dj, &w_j) in wj.weights.iter().enumerate() {
                if dj > 0 {
                    ix += ln_t.exp();
                    // t(a, b+1) / t(a, b) = (1-x)(a+b)/(b+1)
                    ln_t += ln_1mx + ((a + b) / (b + 1.0)).ln();
                    b += 1.0;
                }
                row += w_j * ix.min(1.0);
            }
            w_i * row
        })
        .collect();
    let total: f64 = rows.iter().sum();
    Ok(Probability::from_raw(total.min(1.0)))
}

/// Optimum-receiver error probability for a constant-modulus ambient signal,
/// `P_e = (F(1 | x0) + 1 - F(1 | x1)) / 2`.
pub fn optimum_pe_constant(cc: &CompositeChannel, me: &MEigen, s_abs2: f64) -> Result<Probability> {
    optimum_pe_constant_tol(cc, me, s_abs2, DEFAULT_SERIES_TOL)
}

pub fn optimum_pe_constant_tol(cc: &CompositeChannel, me: &MEigen, s_abs2: f64, tol: f64) -> Result<Probability> {
    let p0 = DncfParams::for_symbol(cc, me, s_abs2, BdSymbol::X0)?;
    let p1 = DncfParams::for_symbol(cc, me, s_abs2, BdSymbol::X1)?;
    let f0 = dncf_cdf(1.0, &p0, tol)?.value();
    let f1 = dncf_cdf(1.0, &p1, tol)?.value();
    Ok(Probability::from_raw(0.5 * (f0 + 1.0 - f1)))
}

/// The two nonzero eigenvalues `lambda1 < 0 < lambda2` of
/// `H|x = R^{1/2} M R^{1/2}`, `R = sigma_s^2 g(x) g(x)^H + I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlParams {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl AlParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 < 0.0 && lambda2 > 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need lambda1 < 0 < lambda2, got {lambda1}, {lambda2}"
            )));
        }
        Ok(AlParams { lambda1, lambda2 })
    }
}

/// Closed-form eigenvalues for `(x0, x1)`, without the numerical cross-check.
///
/// With `T0 = sigma_s^2 (||g0||^2 ||g1||^2 - |g0^H g1|^2) / ||g1||^2`,
///
/// ```text
/// lambda_l(x0) = T0/2 + (-1)^l/2 sqrt((T0 + 2)^2 - 4 |g0^H g1|^2 / (||g0||^2 ||g1||^2))
/// ```
///
/// and `lambda_l(x1)` is the same with `-T1`, `T1` using `||g0||^2` in the
/// denominator.
pub fn al_params_closed_form(cc: &CompositeChannel, sigma_s2: f64) -> (AlParams, AlParams) {
    let n0 = norm_sqr(cc.g0());
    let n1 = norm_sqr(cc.g1());
    let c2 = inner(cc.g0(), cc.g1()).norm_sqr();
    let gram = (n0 * n1 - c2).max(0.0);
    let rho2 = c2 / (n0 * n1);
    let pair = |t: f64| {
        let root = ((t.abs() + 2.0).powi(2) - 4.0 * rho2).max(0.0).sqrt();
        AlParams {
            lambda1: 0.5 * (t - root),
            lambda2: 0.5 * (t + root),
        }
    };
    let t0 = sigma_s2 * gram / n1;
    let t1 = -sigma_s2 * gram / n0;
    (pair(t0), pair(t1))
}

/// `H|x` built explicitly, with `R^{1/2} = I + (sqrt(1 + sigma^2 ||g||^2) - 1) g g^H / ||g||^2`.
pub fn h_matrix(cc: &CompositeChannel, symbol: BdSymbol, sigma_s2: f64) -> CMatrix {
    let g = cc.g(symbol);
    let n2 = norm_sqr(g);
    let n = g.len();
    let r_half =
        CMatrix::identity(n, n) + outer(g) * C64::new(((1.0 + sigma_s2 * n2).sqrt() - 1.0) / n2, 0.0);
    &r_half * decision_matrix(cc) * &r_half
}

/// Extreme eigenvalues of `H|x` from a dense eigensolver.
pub fn al_params_dense(cc: &CompositeChannel, symbol: BdSymbol, sigma_s2: f64) -> (f64, f64) {
    let (values, _) = hermitian_eigen(&h_matrix(cc, symbol, sigma_s2));
    (values[0], values[values.len() - 1])
}

/// Closed-form eigenvalues for `(x0, x1)`, verified against the dense
/// eigensolver to `1e-8` relative.
pub fn al_params(cc: &CompositeChannel, sigma_s2: f64) -> Result<(AlParams, AlParams)> {
    if !(sigma_s2 > 0.0 && sigma_s2.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma_s^2 must be > 0, got {sigma_s2}")));
    }
    let kappa2 = 1.0 - inner(cc.g0(), cc.g1()).norm_sqr() / (norm_sqr(cc.g0()) * norm_sqr(cc.g1()));
    if !(kappa2 >= crate::detector::KAPPA2_FLOOR) {
        return Err(Error::InseparableHypotheses { kappa2 });
    }
    let (p0, p1) = al_params_closed_form(cc, sigma_s2);
    for (symbol, p) in [(BdSymbol::X0, p0), (BdSymbol::X1, p1)] {
        let (l1, l2) = al_params_dense(cc, symbol, sigma_s2);
        let scale = l1.abs().max(l2.abs());
        if (l1 - p.lambda1).abs() > 1e-8 * scale || (l2 - p.lambda2).abs() > 1e-8 * scale {
            return Err(Error::EigenMismatch(format!(
                "H|{symbol:?}: closed form ({}, {}) vs dense ({l1}, {l2})",
                p.lambda1, p.lambda2
            )));
        }
    }
    Ok((AlParams::new(p0.lambda1, p0.lambda2)?, AlParams::new(p1.lambda1, p1.lambda2)?))
}

/// Asymmetric Laplace CDF.
pub fn al_cdf(zeta: f64, p: &AlParams) -> Probability {
    let (l1, l2) = (p.lambda1, p.lambda2);
    let span = l2 - l1;
    let v = if zeta < 0.0 {
        -l1 / span * (-zeta / l1).exp()
    } else {
        1.0 - l2 / span * (-zeta / l2).exp()
    };
    Probability::from_raw(v)
}

/// Asymmetric Laplace density.
pub fn al_pdf(zeta: f64, p: &AlParams) -> f64 {
    let e = if zeta < 0.0 { -zeta / p.lambda1 } else { -zeta / p.lambda2 };
    e.exp() / (p.lambda2 - p.lambda1)
}

/// Inverse of [`al_cdf`].
pub fn al_quantile(q: Probability, p: &AlParams) -> f64 {
    let (l1, l2) = (p.lambda1, p.lambda2);
    let span = l2 - l1;
    let f0 = -l1 / span;
    let q = q.value();
    if q < f0 {
        -l1 * (q / f0).ln()
    } else {
        -l2 * ((1.0 - q) * span / l2).ln()
    }
}

/// Optimum-receiver error probability for a Gaussian ambient signal,
/// `(F(0 | x0) + 1 - F(0 | x1)) / 2`.
pub fn optimum_pe_gaussian(params0: &AlParams, params1: &AlParams) -> Probability {
    let f0 = -params0.lambda1 / (params0.lambda2 - params0.lambda1);
    let tail1 = params1.lambda2 / (params1.lambda2 - params1.lambda1);
    Probability::from_raw(0.5 * (f0 + tail1))
}

/// Non-centrality of the simplified statistic under `x1`,
/// `theta = |s|^2 (||g1||^2 - |g1^H g0|^2 / ||g0||^2)`.
pub fn noncentrality_theta(channels: &ChannelPair, alphabet: &BdAlphabet, s_abs2: f64) -> Result<f64> {
    let g0 = channels.composite(alphabet.x0());
    let g1 = channels.composite(alphabet.x1());
    let n0 = norm_sqr(&g0);
    if n0 == 0.0 {
        return Err(Error::ZeroCompositeChannel("x0"));
    }
    // ||G0 g1||^2 evaluated as a residual norm, which keeps its relative
    // accuracy when g1 is almost parallel to g0.
    let resid = &g1 - &g0 * (inner(&g0, &g1) / n0);
    Ok(s_abs2 * norm_sqr(&resid))
}

/// The factored form
/// `|s|^2 |x0 - x1|^2 (||alpha||^2 ||beta||^2 - |alpha^H beta|^2) / ||alpha + x0 beta||^2`.
pub fn noncentrality_theta_factored(channels: &ChannelPair, alphabet: &BdAlphabet, s_abs2: f64) -> Result<f64> {
    let g0 = channels.composite(alphabet.x0());
    let n0 = norm_sqr(&g0);
    if n0 == 0.0 {
        return Err(Error::ZeroCompositeChannel("x0"));
    }
    let a = channels.alpha();
    let b = channels.beta();
    // ||alpha||^2 ||beta||^2 - |alpha^H beta|^2 = ||alpha||^2 ||beta_perp||^2
    let na = norm_sqr(a);
    let b_perp = b - a * (inner(a, b) / na);
    let gram = na * norm_sqr(&b_perp);
    Ok(s_abs2 * (alphabet.x0() - alphabet.x1()).norm_sqr() * gram / n0)
}

/// `V_T = Q^{-1}(n_r - 1, P_f)`.
pub fn threshold_for_pf(pf: Probability, n_r: usize) -> Result<f64> {
    check_antennas(n_r)?;
    inv_regularized_upper_gamma((n_r - 1) as f64, pf)
}

/// `P_f = Q(n_r - 1, V_T)`.
pub fn simplified_pf(v_t: f64, n_r: usize) -> Result<Probability> {
    check_antennas(n_r)?;
    if !(v_t >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be >= 0, got {v_t}")));
    }
    Ok(regularized_upper_gamma((n_r - 1) as f64, v_t))
}

/// `P_d = Q_{n_r - 1}(sqrt(2 theta), sqrt(2 V_T))`.
pub fn simplified_pd_at_threshold(theta: f64, n_r: usize, v_t: f64) -> Result<Probability> {
    check_antennas(n_r)?;
    if !(theta >= 0.0) || !(v_t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need theta >= 0 and V_T >= 0, got {theta}, {v_t}"
        )));
    }
    let m = (n_r - 1) as u32;
    if theta == 0.0 {
        return Ok(Probability::from_raw(regularized_gamma_pq(m as f64, v_t).1));
    }
    Ok(marcum_q(m, (2.0 * theta).sqrt(), (2.0 * v_t).sqrt()))
}

/// Detection probability at false-alarm target `pf`.
pub fn simplified_pd(theta: f64, n_r: usize, pf: Probability) -> Result<Probability> {
    let v_t = threshold_for_pf(pf, n_r)?;
    simplified_pd_at_threshold(theta, n_r, v_t)
}

/// `(P_f + 1 - P_d) / 2`.
pub fn simplified_pe(pf: Probability, pd: Probability) -> Probability {
    Probability::from_raw(0.5 * (pf.value() + 1.0 - pd.value()))
}

fn check_antennas(n_r: usize) -> Result<()> {
    if n_r < 2 {
        return Err(Error::InvalidParameter(format!("need n_r >= 2, got {n_r}")));
    }
    Ok(())
}

/// Rectangular grid of BD positions, `nx` by `ny` points including the edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl ThetaGrid {
    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![min];
        }
        (0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect()
    }

    /// Points in row-major order (rows of constant `y`).
    pub fn points(&self) -> Vec<Point2> {
        let xs = Self::axis(self.x_min, self.x_max, self.nx);
        let ys = Self::axis(self.y_min, self.y_max, self.ny);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| Point2::new(x, y)))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidParameter("theta grid needs at least one point per axis".into()));
        }
        if !(self.x_min <= self.x_max && self.y_min <= self.y_max) {
            return Err(Error::InvalidParameter("theta grid bounds are reversed".into()));
        }
        Ok(())
    }
}

/// `theta` in dB over a grid; `None` marks positions where it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaMap {
    pub grid: ThetaGrid,
    pub points: Vec<Point2>,
    pub theta_db: Vec<Option<f64>>,
}

/// Non-centrality at one BD position; `None` if the geometry is singular.
pub fn theta_at(scenario: &Scenario, bd_pos: Point2) -> Result<Option<f64>> {
    let geometry = scenario.geometry()?;
    let Ok(distances) = path_distances(&geometry, bd_pos) else {
        return Ok(None);
    };
    let channels = friis_channels(&distances);
    let s_abs2 = scenario.s_amplitude().powi(2);
    match noncentrality_theta(&channels, &scenario.alphabet, s_abs2) {
        Ok(t) => Ok(Some(10.0 * t.log10())),
        Err(Error::ZeroCompositeChannel(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn theta_map(scenario: &Scenario, grid: &ThetaGrid) -> Result<ThetaMap> {
    grid.validate()?;
    scenario.geometry()?;
    let points = grid.points();
    let theta_db = points
        .par_iter()
        .map(|&p| theta_at(scenario, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaMap {
        grid: *grid,
        points,
        theta_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::m_eigen;
    use crate::linalg::CVector;
    use crate::signal::noise_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(r, i)| C64::new(r, i)))
    }

    #[test]
    fn central_f_cdf() {
        let p = DncfParams::new(0.0, 0.0).unwrap();
        for &z in &[0.1, 0.5, 1.0, 3.0, 40.0] {
            let f = dncf_cdf(z, &p, 1e-10).unwrap().value();
            assert!((f - z / (1.0 + z)).abs() < 1e-14);
        }
    }

    #[test]
    fn exchange_symmetry() {
        for &mu in &[0.5, 4.0, 37.0, 800.0, 5000.0] {
            let p = DncfParams::new(mu, mu).unwrap();
            let f = dncf_cdf(1.0, &p, 1e-10).unwrap().value();
            assert!((f - 0.5).abs() < 1e-9, "mu={mu}: {f}");
        }
        // F(zeta; mu1, mu2) = 1 - F(1/zeta; mu2, mu1)
        let a = dncf_cdf(2.5, &DncfParams::new(4.0, 1.0).unwrap(), 1e-12).unwrap().value();
        let b = dncf_cdf(0.4, &DncfParams::new(1.0, 4.0).unwrap(), 1e-12).unwrap().value();
        assert!((a + b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dncf_monotone_and_bounded() {
        let p = DncfParams::new(12.0, 3.0).unwrap();
        let mut prev = 0.0;
        for k in 0..200 {
            let z = 0.05 * k as f64;
            let f = dncf_cdf(z, &p, 1e-10).unwrap().value();
            assert!((0.0..=1.0).contains(&f));
            assert!(f >= prev - 1e-13);
            prev = f;
        }
    }

    #[test]
    fn dncf_rejects_bad_input_and_budget() {
        let p = DncfParams::new(1.0, 1.0).unwrap();
        assert!(dncf_cdf(-1.0, &p, 1e-10).is_err());
        assert!(dncf_cdf(1.0, &p, 0.0).is_err());
        assert!(DncfParams::new(-1.0, 0.0).is_err());
        let huge = DncfParams::new(1e9, 1.0).unwrap();
        assert!(matches!(
            dncf_cdf(1.0, &huge, 1e-10),
            Err(Error::SeriesBudgetExceeded { cap: SERIES_TERM_CAP, .. })
        ));
    }

    #[test]
    fn dncf_matches_single_poisson_mixture() {
        // With mu2 = 0, F(zeta) = sum_i Pois(i; mu1) I_x(i+1, 1) and
        // I_x(a, 1) = x^a, so F = x e^{-mu1 (1 - x)}.
        for &(mu, z) in &[(3.0, 1.0), (10.0, 4.0), (50.0, 20.0)] {
            let x: f64 = z / (1.0 + z);
            let want = x * (-mu * (1.0 - x)).exp();
            let f = dncf_cdf(z, &DncfParams::new(mu, 0.0).unwrap(), 1e-13).unwrap().value();
            assert!((f - want).abs() < 1e-12, "{f} vs {want}");
        }
    }

    fn random_cc(n: usize, rng: &mut ChaCha8Rng) -> CompositeChannel {
        CompositeChannel::new(noise_vector(n, rng), noise_vector(n, rng)).unwrap()
    }

    #[test]
    fn pe_constant_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cc = random_cc(4, &mut rng);
        let me = m_eigen(&cc).unwrap();
        let pe = optimum_pe_constant(&cc, &me, 0.0).unwrap().value();
        assert!((pe - 0.5).abs() < 1e-12);
        let pe_hi = optimum_pe_constant(&cc, &me, 50.0).unwrap().value();
        assert!(pe_hi < 0.5);
    }

    #[test]
    fn pe_constant_symmetric_geometry() {
        // |g0| = |g1| makes |u1^H g0| = |u2^H g1| and vice versa.
        let g0 = cv(&[(1.0, 0.0), (0.3, 0.1), (0.0, 0.0)]);
        let g1 = cv(&[(1.0, 0.0), (-0.3, -0.1), (0.0, 0.0)]);
        let cc = CompositeChannel::new(g0, g1).unwrap();
        let me = m_eigen(&cc).unwrap();
        let s2 = 20.0;
        let p0 = DncfParams::for_symbol(&cc, &me, s2, BdSymbol::X0).unwrap();
        let p1 = DncfParams::for_symbol(&cc, &me, s2, BdSymbol::X1).unwrap();
        assert!((p0.mu1 - p1.mu2).abs() < 1e-10 && (p0.mu2 - p1.mu1).abs() < 1e-10);
        let f0 = dncf_cdf(1.0, &p0, 1e-12).unwrap().value();
        let f1 = dncf_cdf(1.0, &p1, 1e-12).unwrap().value();
        assert!((f0 - (1.0 - f1)).abs() < 1e-10);
        let pe = optimum_pe_constant(&cc, &me, s2).unwrap().value();
        assert!((pe - f0).abs() < 1e-10);
    }

    #[test]
    fn al_closed_form_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let cc = random_cc(5, &mut rng);
            for &s2 in &[1e-6, 0.3, 4.0, 1e3] {
                al_params(&cc, s2).unwrap();
            }
        }
    }

    #[test]
    fn al_noise_limit_is_plus_minus_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cc = random_cc(6, &mut rng);
        let kappa = m_eigen(&cc).unwrap().kappa();
        let (p0, p1) = al_params_closed_form(&cc, 1e-12);
        for p in [p0, p1] {
            assert!((p.lambda1 + kappa).abs() < 1e-9 && (p.lambda2 - kappa).abs() < 1e-9);
        }
    }

    #[test]
    fn al_orthogonal_channels() {
        let cc = CompositeChannel::new(cv(&[(2.0, 0.0), (0.0, 0.0), (0.0, 0.0)]), cv(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.0)])).unwrap();
        let (p0, p1) = al_params(&cc, 3.0).unwrap();
        // H|x0 = diag(1 + 3*4, -1): no cross-coupling.
        assert!((p0.lambda2 - 13.0).abs() < 1e-12 && (p0.lambda1 + 1.0).abs() < 1e-12);
        assert!((p1.lambda2 - 1.0).abs() < 1e-12 && (p1.lambda1 + 4.0).abs() < 1e-12);
    }

    #[test]
    fn al_scaling_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let cc = random_cc(4, &mut rng);
        for &s2 in &[0.1, 1.0, 10.0] {
            let (a, b) = al_params(&cc, s2).unwrap();
            let (c, d) = al_params(&cc, 3.0 * s2).unwrap();
            // The sum (trace) scales with sigma^2.
            assert!(((c.lambda1 + c.lambda2) - 3.0 * (a.lambda1 + a.lambda2)).abs() < 1e-9);
            assert!(((d.lambda1 + d.lambda2) - 3.0 * (b.lambda1 + b.lambda2)).abs() < 1e-9);
            assert!(c.lambda1 < 0.0 && c.lambda2 > 0.0);
        }
    }

    #[test]
    fn al_cdf_values() {
        let p = AlParams::new(-1.0, 2.0).unwrap();
        assert!((al_cdf(0.0, &p).value() - 1.0 / 3.0).abs() < 1e-15);
        assert!((al_cdf(-1e-12, &p).value() - 1.0 / 3.0).abs() < 1e-11);
        assert!(al_cdf(1e3, &p).value() > 1.0 - 1e-12);
        assert!(al_cdf(-1e3, &p).value() < 1e-12);
        for k in 1..10 {
            let q = Probability::new(k as f64 / 10.0).unwrap();
            let z = al_quantile(q, &p);
            assert!((al_cdf(z, &p).value() - q.value()).abs() < 1e-13);
        }
        // density integrates to the CDF jump
        let h = 1e-6;
        let num = (al_cdf(0.7 + h, &p).value() - al_cdf(0.7 - h, &p).value()) / (2.0 * h);
        assert!((num - al_pdf(0.7, &p)).abs() < 1e-6);
        assert!(AlParams::new(1.0, 2.0).is_err());
    }

    #[test]
    fn pe_gaussian_properties() {
        let p0 = AlParams::new(-1.0, 3.0).unwrap();
        let p1 = AlParams::new(-3.0, 1.0).unwrap();
        let pe = optimum_pe_gaussian(&p0, &p1).value();
        assert!((pe - al_cdf(0.0, &p0).value()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let cc = random_cc(4, &mut rng);
        let (a, b) = al_params(&cc, 1e-9).unwrap();
        assert!((optimum_pe_gaussian(&a, &b).value() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn theta_examples() {
        let a = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let b = cv(&[(0.0, 0.0), (0.1, 0.0)]);
        let ch = ChannelPair::new(a.clone(), b.clone()).unwrap();
        let ook = BdAlphabet::ook();
        assert!((noncentrality_theta(&ch, &ook, 100.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((noncentrality_theta_factored(&ch, &ook, 100.0).unwrap() - 1.0).abs() < 1e-12);

        let par = ChannelPair::new(a.clone(), &a * C64::new(0.0, 0.2)).unwrap();
        assert!(noncentrality_theta(&par, &ook, 100.0).unwrap().abs() < 1e-12);

        let bpsk = BdAlphabet::bpsk();
        let tb = noncentrality_theta(&ch, &bpsk, 100.0).unwrap();
        let to = noncentrality_theta(&ch, &ook, 100.0).unwrap();
        let gb = norm_sqr(&ch.composite(bpsk.x0()));
        let go = norm_sqr(&ch.composite(ook.x0()));
        assert!((tb * gb / (to * go) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn theta_forms_agree_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..200 {
            let ch = ChannelPair::new(noise_vector(8, &mut rng), noise_vector(8, &mut rng) * C64::new(0.1, 0.0)).unwrap();
            for al in [BdAlphabet::ook(), BdAlphabet::bpsk()] {
                let a = noncentrality_theta(&ch, &al, 7.0).unwrap();
                let b = noncentrality_theta_factored(&ch, &al, 7.0).unwrap();
                assert!(((a - b) / a).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn threshold_examples() {
        let v = threshold_for_pf(Probability::new(0.01).unwrap(), 2).unwrap();
        assert!((v - 4.60517).abs() < 1e-5);
        assert_eq!(threshold_for_pf(Probability::ONE, 16).unwrap(), 0.0);
        assert!(threshold_for_pf(Probability::ZERO, 16).is_err());
        let v = threshold_for_pf(Probability::new(0.01).unwrap(), 16).unwrap();
        assert!((simplified_pf(v, 16).unwrap().value() - 0.01).abs() < 1e-10);
        assert_eq!(simplified_pf(0.0, 16).unwrap().value(), 1.0);
        assert!((simplified_pf(2.5, 2).unwrap().value() - (-2.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn pd_properties() {
        let pf = Probability::new(0.01).unwrap();
        assert!((simplified_pd(0.0, 16, pf).unwrap().value() - 0.01).abs() < 1e-12);
        assert_eq!(simplified_pd(30.0, 16, Probability::ONE).unwrap().value(), 1.0);
        let mut prev = 0.0;
        for k in 0..40 {
            let pd = simplified_pd(k as f64, 16, pf).unwrap().value();
            assert!(pd >= prev - 1e-14);
            prev = pd;
        }
        let mut prev = 0.0;
        for &f in &[1e-4, 1e-3, 1e-2, 0.1, 0.5] {
            let pd = simplified_pd(10.0, 16, Probability::new(f).unwrap()).unwrap().value();
            assert!(pd >= prev);
            prev = pd;
        }
    }

    #[test]
    fn pe_simplified_examples() {
        let p = |v| Probability::new(v).unwrap();
        assert_eq!(simplified_pe(p(0.3), p(0.3)).value(), 0.5);
        assert_eq!(simplified_pe(p(0.0), p(1.0)).value(), 0.0);
        assert!((simplified_pe(p(0.01), p(0.99)).value() - 0.01).abs() < 1e-15);
    }
}
