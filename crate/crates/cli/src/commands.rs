//! Subcommand bodies. Each returns a [`Table`]; rendering and exit codes live
//! in the front end.

use ambc_core::analytics::theta_map as core_theta_map;
use ambc_core::sim::{run_ber, run_estimation_bench, run_roc};
use ambc_core::validate::{run_validation, ValidationOptions};
use ambc_core::{ReceiverKind, Scenario};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, NamedScenario};
use crate::table::{Cell, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] ambc_core::Error),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Validation(_) => 2,
        }
    }
}

fn missing(axis: &str, cmd: &str) -> CliError {
    CliError::Config(ConfigError::Invalid(format!("{cmd} needs the [sweep] {axis} axis")))
}

/// The single-scenario commands run on the first block.
fn first(cfg: &ExperimentConfig) -> Result<NamedScenario, CliError> {
    Ok(cfg.resolved_scenarios()?.swap_remove(0))
}

pub const BER_HEADERS: [&str; 11] = [
    "gamma_db",
    "receiver",
    "modulation",
    "ambient",
    "csi",
    "ber",
    "ci95",
    "err_count",
    "trials",
    "analytic_pe",
    "error",
];

/// Every scenario block over the SNR axis. A point that cannot be simulated
/// gets an `error` entry instead of aborting the sweep.
pub fn ber_sweep(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let gammas = cfg.sweep.gamma.ok_or_else(|| missing("gamma_start/gamma_stop/gamma_step", "ber-sweep"))?.values();
    let scenarios = cfg.resolved_scenarios()?;
    let mut rows: Vec<(&'static str, f64, Vec<Cell>)> = Vec::new();
    for ns in &scenarios {
        for &g in &gammas {
            let sc = Scenario { gamma_db: g, ..ns.scenario.clone() };
            let mut row = vec![
                Cell::Float(g),
                Cell::Text(sc.receiver.name().into()),
                Cell::Text(sc.alphabet.name()),
                Cell::Text(sc.ambient.name()),
                Cell::Text(sc.csi.name().into()),
            ];
            match run_ber(&sc) {
                Ok(r) => row.extend([
                    Cell::Float(r.ber.value()),
                    Cell::Float(r.ci95),
                    Cell::Int(r.err_count),
                    Cell::Int(r.trials),
                    r.analytic_pe.into(),
                    Cell::Empty,
                ]),
                Err(e) => {
                    row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Int(sc.trials), Cell::Empty]);
                    row.push(Cell::Text(e.to_string()));
                }
            }
            rows.push((sc.receiver.name(), g, row));
        }
    }
    // Stable: scenario order is kept within equal (receiver, gamma).
    rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.total_cmp(&b.1)));
    let mut t = Table::new(BER_HEADERS.to_vec());
    for (_, _, row) in rows {
        t.push(row);
    }
    Ok(t)
}

pub fn roc(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let pfs = cfg.sweep.pf.clone().ok_or_else(|| missing("pf", "roc"))?;
    let base = first(cfg)?.scenario;
    let n_rs = cfg.sweep.n_r.clone().unwrap_or_else(|| vec![base.n_r]);
    let mut t = Table::new(vec!["n_r", "pf_target", "v_t", "pf_emp", "pd_emp", "pd_analytic"]);
    for n_r in n_rs {
        let sc = Scenario {
            n_r,
            receiver: ReceiverKind::Simplified { pf: pfs[0] },
            ..base.clone()
        };
        sc.validate().map_err(|e| ConfigError::Invalid(format!("n_r = {n_r}: {e}")))?;
        for p in run_roc(&sc, &pfs)? {
            t.push(vec![
                Cell::Int(n_r as u64),
                Cell::Float(p.pf_target),
                Cell::Float(p.v_t),
                Cell::Float(p.pf_emp),
                Cell::Float(p.pd_emp),
                p.pd_analytic.into(),
            ]);
        }
    }
    Ok(t)
}

/// `theta` in dB over the grid, row-major; undefined points print as `nan`.
pub fn theta_map(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let grid = cfg.sweep.grid.ok_or_else(|| missing("grid_x/grid_y", "theta-map"))?;
    let sc = first(cfg)?.scenario;
    let map = core_theta_map(&sc, &grid)?;
    let mut t = Table::new(vec!["x", "y", "theta_db"]);
    for (p, th) in map.points.iter().zip(&map.theta_db) {
        t.push(vec![Cell::Float(p.x), Cell::Float(p.y), Cell::Float(th.unwrap_or(f64::NAN))]);
    }
    Ok(t)
}

pub fn estimation_bench(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let ls = cfg.sweep.preamble_len.clone().ok_or_else(|| missing("preamble_len", "estimation-bench"))?;
    let methods = cfg.sweep.methods.clone().ok_or_else(|| missing("methods", "estimation-bench"))?;
    if ls.contains(&0) {
        return Err(ConfigError::Invalid("preamble_len values must be >= 1".into()).into());
    }
    let sc = first(cfg)?.scenario;
    let rows = run_estimation_bench(&sc, &ls, &methods)?;
    let mut t = Table::new(vec![
        "preamble_len",
        "csi",
        "receiver",
        "ber",
        "ci95",
        "err_count",
        "trials",
        "align_min",
        "align_median",
        "align_mean",
        "error",
    ]);
    for r in rows {
        let mut row = vec![
            Cell::Int(r.preamble_len as u64),
            Cell::Text(r.csi.name().into()),
            Cell::Text(sc.receiver.name().into()),
        ];
        match &r.result {
            Some(res) => {
                let a = res.alignment;
                row.extend([
                    Cell::Float(res.ber.value()),
                    Cell::Float(res.ci95),
                    Cell::Int(res.err_count),
                    Cell::Int(res.trials),
                    a.map(|a| a.min).into(),
                    a.map(|a| a.median).into(),
                    a.map(|a| a.mean).into(),
                    Cell::Empty,
                ]);
            }
            None => {
                row.extend(std::iter::repeat_n(Cell::Empty, 7));
                row.push(Cell::Text(r.error.clone().unwrap_or_default()));
            }
        }
        t.push(row);
    }
    Ok(t)
}

/// Runs the invariant suite. The table is returned even when checks fail so
/// the caller can print it before exiting nonzero.
pub fn validate(opts: &ValidationOptions) -> Result<(Table, bool), CliError> {
    if opts.mc_draws < 100_000 {
        return Err(ConfigError::Invalid(format!("validate needs at least 1e5 draws, got {}", opts.mc_draws)).into());
    }
    let report = run_validation(opts);
    let mut t = Table::new(vec!["check", "passed", "metric", "tolerance", "detail"]);
    for c in &report.checks {
        t.push(vec![
            Cell::Text(c.name.clone()),
            Cell::Bool(c.passed),
            Cell::Float(c.metric),
            Cell::Float(c.tolerance),
            Cell::Text(c.detail.clone()),
        ]);
    }
    Ok((t, report.all_passed()))
}
