//! Cross-checking the MILP solver against the enumeration oracle.

use crate::error::{Error, Result};
use crate::milp::{build_milp, choose_big_m};
use crate::scenario::{
    compute_gain_matrix, generate_topology, mean_pair_gain, PowerConfig, ScenarioConfig, CALIBRATION_STREAM,
};
use crate::sinr::{evaluate, Association};
use crate::PathGainMatrix;

use super::bnb::{solve_milp, BnBConfig, SolveStatus};
use super::brute::brute_force_maxmin;

/// Tolerance for both the solver agreement and the incumbent re-evaluation.
pub const EQUIVALENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub num_ues: usize,
    pub num_ans: usize,
    pub antennas: usize,
    pub theta_milp: f64,
    pub theta_brute: f64,
    /// `|theta_milp - theta_brute| / (1 + theta_brute)`.
    pub relative_gap: f64,
    pub milp_status: SolveStatus,
    /// The MILP incumbent, re-evaluated from scratch, achieves `theta_milp`.
    pub milp_consistent: bool,
    pub brute_consistent: bool,
    pub nodes: u64,
}

impl EquivalenceReport {
    pub fn matched(&self, tol: f64) -> bool {
        self.milp_status == SolveStatus::Optimal
            && self.relative_gap <= tol
            && self.milp_consistent
            && self.brute_consistent
    }
}

fn consistent(
    association: &Association,
    theta: f64,
    gains: &PathGainMatrix,
    antennas: usize,
    power: f64,
) -> Result<bool> {
    let report = evaluate(association, gains, antennas, power)?;
    Ok(report.feasible && (report.min_sinr - theta).abs() <= EQUIVALENCE_TOL * (1.0 + theta.abs()))
}

/// Solves one instance with both solvers and compares the results.
pub fn verify_equivalence(
    gains: &PathGainMatrix,
    antennas: usize,
    power: f64,
    config: &BnBConfig,
) -> Result<EquivalenceReport> {
    let brute = brute_force_maxmin(gains, antennas, power)?;
    let model = build_milp(gains, antennas, power, choose_big_m(gains, antennas, power))?;
    let milp = solve_milp(&model, config)?;
    let incumbent = milp.incumbent.as_ref().ok_or(Error::Infeasible)?;
    Ok(EquivalenceReport {
        num_ues: gains.num_ues(),
        num_ans: gains.num_ans(),
        antennas,
        theta_milp: milp.theta_star,
        theta_brute: brute.theta_star,
        relative_gap: (milp.theta_star - brute.theta_star).abs() / (1.0 + brute.theta_star.abs()),
        milp_status: milp.status,
        milp_consistent: consistent(incumbent, milp.theta_star, gains, antennas, power)?,
        brute_consistent: consistent(&brute.association, brute.theta_star, gains, antennas, power)?,
        nodes: milp.nodes_explored,
    })
}

/// Shape of the `i`-th instance of the seeded suite.
///
/// Cycles through `M ∈ {2,3,4}`, `K ∈ {2..6}` and `L ∈ {16, 64}`; the snapshot
/// index is `i` itself.
pub fn suite_shape(i: usize) -> (usize, usize, usize) {
    const ANS: [usize; 3] = [2, 3, 4];
    const ANTENNAS: [usize; 2] = [16, 64];
    (ANS[i % 3], 2 + (i / 3) % 5, ANTENNAS[(i / 15) % 2])
}

pub const SUITE_SNR_DB: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub reports: Vec<EquivalenceReport>,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn matched(&self) -> usize {
        self.reports.iter().filter(|r| r.matched(self.tolerance)).count()
    }

    pub fn max_gap(&self) -> f64 {
        self.reports.iter().map(|r| r.relative_gap).fold(0.0, f64::max)
    }

    pub fn all_matched(&self) -> bool {
        self.matched() == self.reports.len()
    }

    pub fn summary(&self) -> String {
        format!(
            "{}/{} instances matched, max rel gap {:.1e} (tolerance {:.0e})",
            self.matched(),
            self.reports.len(),
            self.max_gap(),
            self.tolerance
        )
    }
}

/// Runs the seeded oracle-equivalence suite on `count` generated instances.
pub fn run_equivalence_suite(base_seed: u64, count: usize, config: &BnBConfig) -> Result<SuiteReport> {
    let probe = ScenarioConfig::new(2, 2, 16, SUITE_SNR_DB).with_seed(base_seed);
    // The calibration draw depends on the drop geometry only, not on M, K or L.
    let mean_gain = mean_pair_gain(&probe, probe.calibration_draws, CALIBRATION_STREAM)?;
    let mut reports = Vec::with_capacity(count);
    for i in 0..count {
        let (m, k, l) = suite_shape(i);
        let scenario = ScenarioConfig::new(m, k, l, SUITE_SNR_DB).with_seed(base_seed);
        let topology = generate_topology(&scenario, i as u64)?;
        let gains = compute_gain_matrix(&topology, &scenario)?;
        let power = PowerConfig::from_mean_gain(SUITE_SNR_DB, m, mean_gain).per_an_power_linear;
        let report = verify_equivalence(&gains, l, power, config)?;
        log::debug!(
            "instance {i}: M={m} K={k} L={l} milp {} brute {} gap {:e}",
            report.theta_milp,
            report.theta_brute,
            report.relative_gap
        );
        reports.push(report);
    }
    Ok(SuiteReport {
        reports,
        tolerance: EQUIVALENCE_TOL,
    })
}
