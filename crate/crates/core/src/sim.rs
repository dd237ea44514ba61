//! Seeded Monte-Carlo experiments.
//!
//! Trials are grouped into coherence blocks of `Scenario::block_len` symbols.
//! Block `b` draws from its own ChaCha8 stream `(seed, b)`, estimated
//! beamformers are refreshed from fresh preambles at the start of every block,
//! and per-block counts are reduced in block order. Results therefore depend
//! only on the scenario, never on the number of worker threads. Preamble
//! symbols are not counted as data.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    al_params, noncentrality_theta, optimum_pe_constant, optimum_pe_gaussian, simplified_pd_at_threshold,
    simplified_pe, threshold_for_pf, DncfParams,
};
use crate::detector::{m_eigen, CompositeChannel, DetectorModel, OptimumDetector, Projector, SimplifiedDetector};
use crate::error::{Error, Result};
use crate::estimation::{alignment, estimate, normalize_by_largest_eigenvalue, BeamformerEstimate, EstimationMethod, SampleMatrix};
use crate::geometry::ChannelPair;
use crate::linalg::{CVector, C64};
use crate::scenario::{CsiMode, ReceiverKind, Scenario};
use crate::signal::{complex_normal, draw_ambient, noise_vector, AmbientKind, AmbientSpec, BdSymbol};
use crate::special::Probability;

/// Summary of per-block alignments `|g_hat^H g0| / ||g0||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentStats {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
}

impl AlignmentStats {
    fn from_values(mut v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(AlignmentStats {
            min: v[0],
            median,
            mean: v.iter().sum::<f64>() / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub ber: Probability,
    pub err_count: u64,
    pub trials: u64,
    /// Half-width of the 95% Wilson score interval.
    pub ci95: f64,
    pub wall_time: f64,
    /// Closed-form error probability under perfect CSI, when one exists for
    /// the receiver and ambient law.
    pub analytic_pe: Option<f64>,
    pub alignment: Option<AlignmentStats>,
    pub scenario: Scenario,
}

/// Test hooks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Drop the receiver noise.
    pub noiseless: bool,
}

/// Half-width of the 95% Wilson score interval for `k` successes in `n`.
pub fn wilson_ci95(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

pub(crate) fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Everything shared by all blocks of a run.
struct Link {
    channels: ChannelPair,
    composite: CompositeChannel,
    amp: f64,
    ambient: AmbientSpec,
    n_r: usize,
    noiseless: bool,
}

impl Link {
    fn new(scenario: &Scenario, opts: RunOptions) -> Result<Self> {
        scenario.validate()?;
        let channels = scenario.channels()?;
        let composite = scenario.composite()?;
        Ok(Link {
            n_r: channels.n_r(),
            channels,
            composite,
            amp: scenario.s_amplitude(),
            ambient: AmbientSpec::new(scenario.ambient, 1.0)?,
            noiseless: opts.noiseless,
        })
    }

    fn sample<R: Rng>(&self, symbol: BdSymbol, rng: &mut R) -> CVector {
        let s = draw_ambient(&self.ambient, rng) * self.amp;
        let y = self.composite.g(symbol) * s;
        if self.noiseless {
            y
        } else {
            y + noise_vector(self.n_r, rng)
        }
    }

    fn preamble<R: Rng>(&self, symbol: BdSymbol, l: usize, rng: &mut R) -> Result<SampleMatrix> {
        let cols: Vec<CVector> = (0..l).map(|_| self.sample(symbol, rng)).collect();
        SampleMatrix::from_columns(&cols)
    }
}

fn direction(est: &BeamformerEstimate) -> &CVector {
    est.g_hat().expect("subspace estimators return a direction")
}

/// The receiver used within one block, plus the alignment of its `x0`
/// beamformer estimate when there is one.
fn block_detector<R: Rng>(
    scenario: &Scenario,
    link: &Link,
    perfect: Option<&DetectorModel>,
    v_t: f64,
    rng: &mut R,
) -> Result<(DetectorModel, Option<f64>)> {
    let Some(method) = scenario.csi.method() else {
        let det = perfect.expect("perfect-CSI detector is built up front").clone();
        return Ok((det, None));
    };
    let l = scenario.preamble_len;
    let y0 = link.preamble(BdSymbol::X0, l, rng)?;
    let e0 = estimate(method, &y0)?;
    let align = e0.g_hat().map(|g| alignment(g, link.composite.g0()));
    let det = match scenario.receiver {
        ReceiverKind::Optimum => {
            let y1 = link.preamble(BdSymbol::X1, l, rng)?;
            let e1 = estimate(method, &y1)?;
            if method == EstimationMethod::InvCov {
                // y^H (G1 - G0) y with the inverse covariances standing in for
                // the projectors.
                DetectorModel::Optimum(OptimumDetector::from_matrix(e1.g_matrix() - e0.g_matrix()))
            } else {
                let cc = CompositeChannel::new(direction(&e0).clone(), direction(&e1).clone())?;
                DetectorModel::Optimum(OptimumDetector::from_composite(&cc)?)
            }
        }
        ReceiverKind::Simplified { .. } => {
            if method == EstimationMethod::InvCov {
                let g = normalize_by_largest_eigenvalue(e0.g_matrix());
                DetectorModel::Simplified(SimplifiedDetector::from_matrix(g, v_t)?)
            } else {
                DetectorModel::Simplified(SimplifiedDetector::new(Projector::new(direction(&e0))?, v_t)?)
            }
        }
    };
    Ok((det, align))
}

/// Detector under perfect CSI (also used to surface inseparable hypotheses).
fn perfect_detector(scenario: &Scenario, link: &Link, v_t: f64) -> Result<DetectorModel> {
    Ok(match scenario.receiver {
        ReceiverKind::Optimum => DetectorModel::Optimum(OptimumDetector::from_composite(&link.composite)?),
        ReceiverKind::Simplified { .. } => {
            DetectorModel::Simplified(SimplifiedDetector::new(Projector::new(link.composite.g0())?, v_t)?)
        }
    })
}

fn receiver_threshold(scenario: &Scenario) -> Result<f64> {
    match scenario.receiver {
        ReceiverKind::Optimum => Ok(0.0),
        ReceiverKind::Simplified { pf } => threshold_for_pf(pf, scenario.n_r),
    }
}

fn check_estimation(scenario: &Scenario) -> Result<()> {
    if scenario.csi == CsiMode::InvCov && scenario.preamble_len < scenario.n_r {
        return Err(Error::NotEnoughSamples {
            samples: scenario.preamble_len,
            antennas: scenario.n_r,
        });
    }
    Ok(())
}

/// Closed-form error probability under perfect CSI, if available.
pub fn analytic_pe(scenario: &Scenario) -> Result<Option<f64>> {
    let link = Link::new(scenario, RunOptions::default())?;
    let s2 = link.amp * link.amp;
    Ok(match (scenario.receiver, scenario.ambient) {
        (ReceiverKind::Optimum, AmbientKind::ConstantModulus { .. }) => {
            let me = m_eigen(&link.composite)?;
            match optimum_pe_constant(&link.composite, &me, s2) {
                Ok(p) => Some(p.value()),
                Err(Error::SeriesBudgetExceeded { .. }) => None,
                Err(e) => return Err(e),
            }
        }
        (ReceiverKind::Optimum, AmbientKind::Gaussian) => {
            if s2 == 0.0 {
                Some(0.5)
            } else {
                let (p0, p1) = al_params(&link.composite, s2)?;
                Some(optimum_pe_gaussian(&p0, &p1).value())
            }
        }
        (ReceiverKind::Simplified { pf }, AmbientKind::ConstantModulus { .. }) => {
            let theta = noncentrality_theta(&link.channels, &scenario.alphabet, s2)?;
            let v_t = threshold_for_pf(pf, scenario.n_r)?;
            let pd = simplified_pd_at_threshold(theta, scenario.n_r, v_t)?;
            Some(simplified_pe(pf, pd).value())
        }
        _ => None,
    })
}

fn block_sizes(trials: u64, block_len: usize) -> Vec<u64> {
    let bl = block_len as u64;
    let n = trials.div_ceil(bl);
    (0..n).map(|b| bl.min(trials - b * bl)).collect()
}

pub fn run_ber(scenario: &Scenario) -> Result<RunResult> {
    run_ber_with(scenario, RunOptions::default())
}

pub fn run_ber_with(scenario: &Scenario, opts: RunOptions) -> Result<RunResult> {
    let start = Instant::now();
    let link = Link::new(scenario, opts)?;
    check_estimation(scenario)?;
    if scenario.receiver == ReceiverKind::Optimum {
        m_eigen(&link.composite)?;
    }
    let v_t = receiver_threshold(scenario)?;
    let perfect = perfect_detector(scenario, &link, v_t)?;

    let sizes = block_sizes(scenario.trials, scenario.block_len);
    let per_block: Vec<Result<(u64, Option<f64>)>> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &n)| {
            let mut rng = block_rng(scenario.seed, b as u64);
            let (det, align) = block_detector(scenario, &link, Some(&perfect), v_t, &mut rng)?;
            let mut errors = 0;
            for _ in 0..n {
                let sent = if rng.random::<bool>() { BdSymbol::X1 } else { BdSymbol::X0 };
                let y = link.sample(sent, &mut rng);
                if det.decide(&y) != sent {
                    errors += 1;
                }
            }
            Ok((errors, align))
        })
        .collect();

    let mut err_count = 0;
    let mut aligns = Vec::new();
    for r in per_block {
        let (e, a) = r?;
        err_count += e;
        aligns.extend(a);
    }
    let trials = scenario.trials;
    Ok(RunResult {
        ber: Probability::from_raw(err_count as f64 / trials as f64),
        err_count,
        trials,
        ci95: wilson_ci95(err_count, trials),
        wall_time: start.elapsed().as_secs_f64(),
        analytic_pe: analytic_pe(scenario)?,
        alignment: AlignmentStats::from_values(aligns),
        scenario: scenario.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pf_target: f64,
    pub v_t: f64,
    pub pf_emp: f64,
    pub pd_emp: f64,
    /// `Q_{n_r-1}(sqrt(2 theta), sqrt(2 V_T))`; only for constant-modulus
    /// ambient signals.
    pub pd_analytic: Option<f64>,
}

/// Energy-detector statistics for `trials` symbols all equal to `symbol`.
fn energy_statistics(scenario: &Scenario, link: &Link, symbol: BdSymbol, stream_offset: u64) -> Result<Vec<f64>> {
    let perfect = perfect_detector(scenario, link, 0.0)?;
    let sizes = block_sizes(scenario.trials, scenario.block_len);
    let blocks: Vec<Result<Vec<f64>>> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &n)| {
            let mut rng = block_rng(scenario.seed, stream_offset + b as u64);
            let (det, _) = block_detector(scenario, link, Some(&perfect), 0.0, &mut rng)?;
            let DetectorModel::Simplified(det) = det else {
                unreachable!("ROC runs always use the energy detector")
            };
            Ok((0..n).map(|_| det.statistic(&link.sample(symbol, &mut rng))).collect())
        })
        .collect();
    let mut out = Vec::with_capacity(scenario.trials as usize);
    for b in blocks {
        out.extend(b?);
    }
    Ok(out)
}

/// Empirical and analytic ROC of the energy detector. `scenario.trials`
/// symbols are simulated under each hypothesis and reused for every target.
pub fn run_roc(scenario: &Scenario, pf_grid: &[Probability]) -> Result<Vec<RocPoint>> {
    if !matches!(scenario.receiver, ReceiverKind::Simplified { .. }) {
        return Err(Error::InvalidParameter("ROC runs need the simplified receiver".into()));
    }
    if pf_grid.is_empty() {
        return Err(Error::InvalidParameter("empty false-alarm grid".into()));
    }
    let link = Link::new(scenario, RunOptions::default())?;
    check_estimation(scenario)?;
    // H0 and H1 batches use disjoint stream ranges.
    let h1_offset = 1u64 << 40;
    let z0 = energy_statistics(scenario, &link, BdSymbol::X0, 0)?;
    let z1 = energy_statistics(scenario, &link, BdSymbol::X1, h1_offset)?;
    let theta = noncentrality_theta(&link.channels, &scenario.alphabet, link.amp * link.amp)?;
    let exceed = |z: &[f64], v: f64| z.iter().filter(|&&x| x > v).count() as f64 / z.len() as f64;
    pf_grid
        .iter()
        .map(|&pf| {
            let v_t = threshold_for_pf(pf, scenario.n_r)?;
            let pd_analytic = if scenario.ambient.is_constant_modulus() {
                Some(simplified_pd_at_threshold(theta, scenario.n_r, v_t)?.value())
            } else {
                None
            };
            Ok(RocPoint {
                pf_target: pf.value(),
                v_t,
                pf_emp: exceed(&z0, v_t),
                pd_emp: exceed(&z1, v_t),
                pd_analytic,
            })
        })
        .collect()
}

/// One `(L, method)` cell of an estimator benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRow {
    pub preamble_len: usize,
    pub csi: CsiMode,
    pub result: Option<RunResult>,
    /// Set instead of `result` when the cell could not be run.
    pub error: Option<String>,
}

pub fn run_estimation_bench(scenario: &Scenario, l_values: &[usize], methods: &[CsiMode]) -> Result<Vec<EstimationRow>> {
    if l_values.is_empty() || methods.is_empty() {
        return Err(Error::InvalidParameter("estimation bench needs L values and methods".into()));
    }
    let mut rows = Vec::new();
    for &l in l_values {
        for &csi in methods {
            let sc = Scenario {
                preamble_len: l,
                csi,
                ..scenario.clone()
            };
            let row = match run_ber(&sc) {
                Ok(r) => EstimationRow {
                    preamble_len: l,
                    csi,
                    result: Some(r),
                    error: None,
                },
                Err(e @ (Error::NotEnoughSamples { .. }
                | Error::SingularValueTie { .. }
                | Error::NoConvergence { .. }
                | Error::InseparableHypotheses { .. })) => EstimationRow {
                    preamble_len: l,
                    csi,
                    result: None,
                    error: Some(e.to_string()),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Sorted sample with a step-function CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("empirical CDF needs a non-empty, NaN-free sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `sup |F_n - F|`, evaluated on both sides of the steps at up to
    /// `max_points` evenly spaced order statistics.
    pub fn kolmogorov_distance<F>(&self, max_points: usize, f: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let n = self.sorted.len();
        let stride = n.div_ceil(max_points.max(1)).max(1);
        let idx: Vec<usize> = (0..n).step_by(stride).chain(std::iter::once(n - 1)).collect();
        let d = idx
            .par_iter()
            .map(|&i| {
                let x = self.sorted[i];
                // Ties: the step at x covers all equal samples.
                let hi = self.sorted.partition_point(|&v| v <= x);
                let lo = self.sorted.partition_point(|&v| v < x);
                let fx = f(x)?;
                Ok((hi as f64 / n as f64 - fx).abs().max((fx - lo as f64 / n as f64).abs()))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(d.into_iter().fold(0.0, f64::max))
    }
}

/// Monte-Carlo sample of `zeta = |sqrt(mu1) + n1|^2 / |sqrt(mu2) + n2|^2` with
/// `n1, n2 ~ CN(0, 1)`.
pub fn mc_dncf_oracle(p: &DncfParams, draws: usize, seed: u64) -> Result<EmpiricalCdf> {
    if draws < 100_000 {
        return Err(Error::InvalidParameter(format!("need at least 1e5 draws, got {draws}")));
    }
    let m1 = C64::new(p.mu1.sqrt(), 0.0);
    let m2 = C64::new(p.mu2.sqrt(), 0.0);
    let chunk = 100_000;
    let sizes = block_sizes(draws as u64, chunk);
    let parts: Vec<Vec<f64>> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &n)| {
            let mut rng = block_rng(seed, b as u64);
            (0..n)
                .map(|_| {
                    let t = (m1 + complex_normal(&mut rng)).norm_sqr();
                    let r = (m2 + complex_normal(&mut rng)).norm_sqr();
                    t / r
                })
                .collect()
        })
        .collect();
    EmpiricalCdf::new(parts.concat())
}

/// First downward crossing of `target` by `ber(gamma)`, interpolated linearly
/// in `log10(ber)`. `gammas` must be increasing.
pub fn crossing_db(gammas: &[f64], bers: &[f64], target: f64) -> Option<f64> {
    let lt = target.log10();
    for k in 0..gammas.len().saturating_sub(1) {
        let (a, b) = (bers[k], bers[k + 1]);
        if a >= target && b < target {
            if b <= 0.0 {
                // Zero errors at the next point: fall back to linear in BER.
                return Some(gammas[k] + (gammas[k + 1] - gammas[k]) * (a - target) / a);
            }
            let (la, lb) = (a.log10(), b.log10());
            return Some(gammas[k] + (gammas[k + 1] - gammas[k]) * (la - lt) / (la - lb));
        }
    }
    None
}
