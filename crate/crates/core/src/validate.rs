//! Self-check suite: structural invariants, closed forms against dense
//! linear algebra, special-function identities and series-vs-Monte-Carlo
//! distances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{al_params, dncf_cdf, noncentrality_theta, noncentrality_theta_factored, DncfParams};
use crate::detector::{decision_matrix, m_eigen, projector, test_statistic_z, CompositeChannel, MEigen};
use crate::geometry::ChannelPair;
use crate::linalg::{hermitian_eigen, max_abs, norm_sqr, quad_form, C64};
use crate::signal::{noise_vector, BdAlphabet};
use crate::sim::{block_rng, mc_dncf_oracle};
use crate::special::{inv_regularized_upper_gamma, log_bessel_i, marcum_q, regularized_upper_gamma, Probability};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation (or distance) for the check.
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Draws per parameter set in the series-vs-Monte-Carlo check.
    pub mc_draws: usize,
    /// Multiplies every closed-form `kappa` by `1 + p` before comparing;
    /// a negative control for the eigen check.
    pub kappa_perturbation: Option<f64>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            seed: 1,
            mc_draws: 1_000_000,
            kappa_perturbation: None,
        }
    }
}

fn check(name: &str, metric: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: metric <= tolerance,
        metric,
        tolerance,
        detail,
    }
}

fn random_composite<R: Rng>(rng: &mut R, n: usize) -> CompositeChannel {
    loop {
        if let Ok(cc) = CompositeChannel::new(noise_vector(n, rng), noise_vector(n, rng)) {
            return cc;
        }
    }
}

const SIZES: [usize; 4] = [2, 4, 8, 16];

fn projector_check(seed: u64) -> CheckResult {
    let mut rng = block_rng(seed, 1);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = SIZES[k % 4];
        let g = noise_vector(n, &mut rng);
        let p = projector(&g).expect("random vectors are nonzero").matrix();
        worst = worst.max(max_abs(&(&p * &p - &p)));
        worst = worst.max((&p * &g).norm() / g.norm());
        worst = worst.max((p.trace().re - (n - 1) as f64).abs());
        let (values, _) = hermitian_eigen(&p);
        worst = worst.max(values[0].abs());
        for v in &values[1..] {
            worst = worst.max((v - 1.0).abs());
        }
    }
    check(
        "projector",
        worst,
        1e-10,
        "idempotency, annihilation, trace and spectrum over 1000 random g".into(),
    )
}

fn eigen_check(seed: u64, perturbation: Option<f64>) -> CheckResult {
    let mut rng = block_rng(seed, 2);
    let mut worst_k: f64 = 0.0;
    let mut worst_u: f64 = 0.0;
    let mut failures = 0;
    for k in 0..100 {
        let n = SIZES[k % 4];
        let cc = random_composite(&mut rng, n);
        let me = match m_eigen(&cc) {
            Ok(me) => me,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let me = match perturbation {
            Some(p) => MEigen::from_parts_unchecked(me.kappa() * (1.0 + p), me.u1().clone(), me.u2().clone()),
            None => me,
        };
        let (kd, e1, e2) = crate::detector::dense_m_eigen(&cc);
        worst_k = worst_k.max((kd - me.kappa()).abs());
        worst_u = worst_u
            .max(crate::linalg::phase_aligned_distance(me.u1(), &e1))
            .max(crate::linalg::phase_aligned_distance(me.u2(), &e2));
    }
    // Report on the kappa scale; eigenvectors are held to 1e-8.
    let metric = if worst_u > 1e-8 { f64::INFINITY } else { worst_k };
    let mut c = check(
        "m_eigen",
        metric + if failures > 0 { f64::INFINITY } else { 0.0 },
        1e-10,
        format!("max |kappa - dense| = {worst_k:.3e}, max eigenvector distance = {worst_u:.3e}"),
    );
    if failures > 0 {
        c.detail.push_str(&format!("; {failures} constructions failed"));
    }
    c
}

fn z_identity_check(seed: u64) -> CheckResult {
    let mut rng = block_rng(seed, 3);
    let mut worst: f64 = 0.0;
    let mut sign_mismatch = 0;
    for k in 0..200 {
        let n = SIZES[k % 4];
        let cc = random_composite(&mut rng, n);
        let me = m_eigen(&cc).expect("random channels are separable");
        let m = decision_matrix(&cc);
        let p0 = projector(cc.g0()).unwrap();
        let p1 = projector(cc.g1()).unwrap();
        for _ in 0..10 {
            let y = noise_vector(n, &mut rng);
            let (z, _) = test_statistic_z(&y, &me);
            let dense = quad_form(&m, &y);
            worst = worst.max((z - dense).abs());
            let diff = p1.energy(&y) - p0.energy(&y);
            if diff.abs() > 1e-9 && (diff > 0.0) != (z > 0.0) {
                sign_mismatch += 1;
            }
        }
    }
    let metric = if sign_mismatch > 0 { f64::INFINITY } else { worst };
    check(
        "z_identity",
        metric,
        1e-10,
        format!("max |z - y^H M y| = {worst:.3e}; decision sign mismatches = {sign_mismatch}"),
    )
}

fn theta_check(seed: u64) -> CheckResult {
    let mut rng = block_rng(seed, 4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let alpha = noise_vector(8, &mut rng);
        let beta = noise_vector(8, &mut rng) * C64::new(0.05, 0.0);
        let ch = ChannelPair::new(alpha, beta).expect("equal lengths");
        for al in [BdAlphabet::ook(), BdAlphabet::bpsk()] {
            let a = noncentrality_theta(&ch, &al, 3.0).unwrap();
            let b = noncentrality_theta_factored(&ch, &al, 3.0).unwrap();
            worst = worst.max(((a - b) / a).abs());
        }
        let tb = noncentrality_theta(&ch, &BdAlphabet::bpsk(), 1.0).unwrap() * norm_sqr(&ch.composite(C64::new(-1.0, 0.0)));
        let to = noncentrality_theta(&ch, &BdAlphabet::ook(), 1.0).unwrap() * norm_sqr(ch.alpha());
        worst = worst.max((tb / to - 4.0).abs() / 4.0);
    }
    check(
        "theta_identity",
        worst,
        1e-10,
        "two non-centrality forms and the BPSK/OOK factor of 4 over 1000 draws".into(),
    )
}

fn gamma_round_trip_check() -> CheckResult {
    let mut worst: f64 = 0.0;
    let ps = [1e-6, 1e-4, 1e-2, 0.1, 0.5, 0.9, 0.999];
    for a in 1..=32 {
        for &p in &ps {
            let x = inv_regularized_upper_gamma(a as f64, Probability::new(p).unwrap()).unwrap();
            worst = worst.max((regularized_upper_gamma(a as f64, x).value() - p).abs());
        }
    }
    check("gamma_round_trip", worst, 1e-9, "a in 1..=32, p in [1e-6, 0.999]".into())
}

fn marcum_recurrence_check() -> CheckResult {
    let mut worst: f64 = 0.0;
    for &(a, b) in &[(0.5, 0.7), (2.0, 3.0), (4.0, 2.5), (6.0, 9.0), (10.0, 8.0), (20.0, 22.0)] {
        for m in 1..31u32 {
            let lhs = marcum_q(m + 1, a, b).value() - marcum_q(m, a, b).value();
            let rhs = (m as f64 * (b / a).ln() - 0.5 * (a * a + b * b) + log_bessel_i(m, a * b)).exp();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    check("marcum_recurrence", worst, 1e-10, "Q_{m+1} - Q_m against the Bessel term".into())
}

fn al_check(seed: u64) -> CheckResult {
    let mut rng = block_rng(seed, 5);
    let mut failures = 0;
    for k in 0..100 {
        let cc = random_composite(&mut rng, SIZES[k % 4]);
        let s2 = 10f64.powf(rng.random_range(-2.0..3.0));
        if al_params(&cc, s2).is_err() {
            failures += 1;
        }
    }
    check(
        "al_eigen",
        failures as f64,
        0.0,
        format!("closed-form H|x eigenvalues vs dense solver, {failures} of 100 outside 1e-8"),
    )
}

fn dncf_mc_check(seed: u64, draws: usize) -> Vec<CheckResult> {
    let sets = [(0.0, 0.0), (4.0, 1.0), (12.0, 30.0), (50.0, 45.0)];
    let tol = 4.0 / (draws as f64).sqrt();
    sets.iter()
        .enumerate()
        .map(|(k, &(mu1, mu2))| {
            let p = DncfParams::new(mu1, mu2).unwrap();
            let name = format!("dncf_vs_mc[{mu1},{mu2}]");
            let result = mc_dncf_oracle(&p, draws, seed.wrapping_add(100 + k as u64))
                .and_then(|e| e.kolmogorov_distance(4000, |z| dncf_cdf(z, &p, 1e-12).map(|v| v.value())));
            match result {
                Ok(d) => check(&name, d, tol, format!("Kolmogorov distance over {draws} draws")),
                Err(e) => check(&name, f64::INFINITY, tol, e.to_string()),
            }
        })
        .collect()
}

pub fn run_validation(opts: &ValidationOptions) -> ValidationReport {
    let mut checks = vec![
        projector_check(opts.seed),
        eigen_check(opts.seed, opts.kappa_perturbation),
        z_identity_check(opts.seed),
        theta_check(opts.seed),
        gamma_round_trip_check(),
        marcum_recurrence_check(),
        al_check(opts.seed),
    ];
    checks.extend(dncf_mc_check(opts.seed, opts.mc_draws));
    ValidationReport { checks }
}
