//! One Monte-Carlo snapshot: drop, gains, baseline and optimal association.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::milp::{build_milp, choose_big_m};
use crate::scenario::{compute_gain_matrix, generate_topology, PowerConfig, ScenarioConfig};
use crate::sinr::{baseline_association, evaluate, Association};
use crate::solver::{brute_force_maxmin, solve_milp, BnBConfig};
use crate::PathGainMatrix;

use super::spec::SolverChoice;

/// Outcome of one association scheme on one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRecord {
    /// `baseline`, `milp` or `brute`.
    pub scheme: &'static str,
    pub association: Association,
    pub min_rate: f64,
    pub min_sinr: f64,
    pub active_ans: usize,
    /// `evaluated` for the baseline, otherwise the solver status.
    pub status: &'static str,
    pub nodes: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotResult {
    pub snapshot: u64,
    pub num_ans: usize,
    pub num_ues: usize,
    pub antennas: usize,
    pub snr_db: f64,
    pub baseline: SchemeRecord,
    pub milp: Option<SchemeRecord>,
    pub brute: Option<SchemeRecord>,
}

impl SnapshotResult {
    /// The optimized scheme used in aggregates: MILP when present.
    pub fn optimal(&self) -> Option<&SchemeRecord> {
        self.milp.as_ref().or(self.brute.as_ref())
    }

    pub fn schemes(&self) -> impl Iterator<Item = &SchemeRecord> {
        std::iter::once(&self.baseline)
            .chain(self.milp.as_ref())
            .chain(self.brute.as_ref())
    }

    pub const CSV_HEADER: &'static str = "seed,M,K,L,snr_db,scheme,min_rate,active_ans,theta,status,nodes,seconds";

    /// One CSV line per scheme.
    pub fn csv_rows(&self) -> Vec<String> {
        self.schemes()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    self.snapshot,
                    self.num_ans,
                    self.num_ues,
                    self.antennas,
                    sig6(self.snr_db),
                    r.scheme,
                    sig6(r.min_rate),
                    r.active_ans,
                    sig6(r.min_sinr),
                    r.status,
                    r.nodes,
                    sig6(r.seconds)
                )
            })
            .collect()
    }
}

fn record(
    scheme: &'static str,
    association: Association,
    gains: &PathGainMatrix,
    antennas: usize,
    power: f64,
    status: &'static str,
    nodes: u64,
    seconds: f64,
) -> Result<SchemeRecord> {
    let report = evaluate(&association, gains, antennas, power)?;
    Ok(SchemeRecord {
        scheme,
        min_rate: report.min_rate,
        min_sinr: report.min_sinr,
        active_ans: report.active_an_count,
        association,
        status,
        nodes,
        seconds,
    })
}

/// Gains of one snapshot under `config`.
pub fn snapshot_gains(config: &ScenarioConfig, snapshot: u64) -> Result<PathGainMatrix> {
    let topology = generate_topology(config, snapshot)?;
    compute_gain_matrix(&topology, config)
}

/// Runs one snapshot with an already calibrated power budget.
pub fn run_snapshot(
    config: &ScenarioConfig,
    power: &PowerConfig,
    snapshot: u64,
    solver: SolverChoice,
    bnb: &BnBConfig,
) -> Result<SnapshotResult> {
    let gains = snapshot_gains(config, snapshot)?;
    let (l, p) = (config.antennas_per_an, power.per_an_power_linear);
    let baseline = record(
        "baseline",
        baseline_association(&gains),
        &gains,
        l,
        p,
        "evaluated",
        0,
        0.0,
    )?;

    let milp = if matches!(solver, SolverChoice::Milp | SolverChoice::Both) {
        let model = build_milp(&gains, l, p, choose_big_m(&gains, l, p))?;
        let result = solve_milp(&model, bnb)?;
        let association = result.incumbent.clone().ok_or(Error::Infeasible)?;
        Some(record(
            "milp",
            association,
            &gains,
            l,
            p,
            result.status.as_str(),
            result.nodes_explored,
            result.wall_time.as_secs_f64(),
        )?)
    } else {
        None
    };
    let brute = if matches!(solver, SolverChoice::Brute | SolverChoice::Both) {
        let start = Instant::now();
        let result = brute_force_maxmin(&gains, l, p)?;
        let seconds = start.elapsed().as_secs_f64();
        Some(record(
            "brute",
            result.association,
            &gains,
            l,
            p,
            "optimal",
            result.evaluated,
            seconds,
        )?)
    } else {
        None
    };
    if let (Some(m), Some(b)) = (&milp, &brute) {
        if (m.min_sinr - b.min_sinr).abs() > 1e-6 * (1.0 + b.min_sinr.abs()) {
            log::warn!(
                "snapshot {snapshot} (M={} K={} L={l}): milp {} vs brute {}",
                config.num_ans,
                config.num_ues,
                m.min_sinr,
                b.min_sinr
            );
        }
    }
    Ok(SnapshotResult {
        snapshot,
        num_ans: config.num_ans,
        num_ues: config.num_ues,
        antennas: l,
        snr_db: config.target_snr_db,
        baseline,
        milp,
        brute,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::calibrate_power;

    fn small() -> (ScenarioConfig, PowerConfig) {
        let mut config = ScenarioConfig::new(2, 3, 100, 20.0).with_seed(5);
        config.calibration_draws = 2_000;
        let power = calibrate_power(&config).unwrap();
        (config, power)
    }

    #[test]
    fn optimum_dominates_baseline() {
        let (config, power) = small();
        for s in 0..10 {
            let r = run_snapshot(&config, &power, s, SolverChoice::Brute, &BnBConfig::default()).unwrap();
            let opt = r.optimal().unwrap();
            assert!(opt.min_rate >= r.baseline.min_rate - 1e-12);
            assert_eq!(opt.scheme, "brute");
        }
    }

    #[test]
    fn reruns_are_identical() {
        let (config, power) = small();
        let a = run_snapshot(&config, &power, 3, SolverChoice::Both, &BnBConfig::default()).unwrap();
        let mut b = run_snapshot(&config, &power, 3, SolverChoice::Both, &BnBConfig::default()).unwrap();
        // Wall times differ between runs.
        for (x, y) in [(&a.milp, &mut b.milp), (&a.brute, &mut b.brute)] {
            y.as_mut().unwrap().seconds = x.as_ref().unwrap().seconds;
        }
        assert_eq!(a, b);
        assert_eq!(a.csv_rows().len(), 3);
        assert!(a.csv_rows()[0].starts_with("3,2,3,100,20.0000,baseline,"));
    }
}
