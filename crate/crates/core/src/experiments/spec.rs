//! Campaign description parsed from the spec file.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{PathlossModel, ScenarioConfig};
use crate::solver::{BnBConfig, LpUsage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    /// Every `(M, L)` of `m_values x l_values` at every target SNR.
    Densification,
    /// Every `(M, L)` of `budget_pairs` at every target SNR.
    ElementBudget,
    /// The first entries of `m_values`, `l_values` and `snr_db_values`.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Milp,
    Brute,
    Both,
}

impl std::str::FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "milp" => Ok(SolverChoice::Milp),
            "brute" => Ok(SolverChoice::Brute),
            "both" => Ok(SolverChoice::Both),
            other => Err(Error::Parse(format!(
                "unknown solver '{other}' (expected milp, brute or both)"
            ))),
        }
    }
}

/// Geometry and radio knobs shared by every sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioDefaults {
    pub an_drop_radius_m: f64,
    pub ue_drop_radius_m: f64,
    pub min_pair_distance_m: f64,
    pub carrier_ghz: f64,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_mhz: f64,
    pub pathloss_model: PathlossModel,
    pub pathloss_coefficients: [f64; 3],
    pub shadowing_sigma_db: f64,
    pub calibration_draws: usize,
}

impl Default for ScenarioDefaults {
    fn default() -> Self {
        let c = ScenarioConfig::new(1, 1, 1, 0.0);
        Self {
            an_drop_radius_m: c.an_drop_radius_m,
            ue_drop_radius_m: c.ue_drop_radius_m,
            min_pair_distance_m: c.min_pair_distance_m,
            carrier_ghz: c.carrier_ghz,
            noise_density_dbm_hz: c.noise_density_dbm_hz,
            bandwidth_mhz: c.bandwidth_mhz,
            pathloss_model: c.pathloss_model,
            pathloss_coefficients: c.pathloss_coefficients,
            shadowing_sigma_db: c.shadowing_sigma_db,
            calibration_draws: c.calibration_draws,
        }
    }
}

impl ScenarioDefaults {
    pub fn scenario(
        &self,
        num_ans: usize,
        num_ues: usize,
        antennas: usize,
        snr_db: f64,
        base_seed: u64,
    ) -> ScenarioConfig {
        ScenarioConfig {
            an_drop_radius_m: self.an_drop_radius_m,
            ue_drop_radius_m: self.ue_drop_radius_m,
            min_pair_distance_m: self.min_pair_distance_m,
            carrier_ghz: self.carrier_ghz,
            noise_density_dbm_hz: self.noise_density_dbm_hz,
            bandwidth_mhz: self.bandwidth_mhz,
            pathloss_model: self.pathloss_model,
            pathloss_coefficients: self.pathloss_coefficients,
            shadowing_sigma_db: self.shadowing_sigma_db,
            calibration_draws: self.calibration_draws,
            ..ScenarioConfig::new(num_ans, num_ues, antennas, snr_db).with_seed(base_seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub campaign: Campaign,
    pub num_ues: usize,
    pub m_values: Vec<usize>,
    pub l_values: Vec<usize>,
    pub snr_db_values: Vec<f64>,
    pub budget_pairs: Vec<(usize, usize)>,
    pub snapshots: usize,
    pub solver: SolverChoice,
    pub out_dir: PathBuf,
    pub base_seed: u64,
    /// Per-solve wall-clock limit for the MILP solver.
    pub time_limit_s: Option<f64>,
    /// Solve the LP relaxation at the root of every MILP search.
    pub root_lp: bool,
    pub svg: bool,
    pub scenario: ScenarioDefaults,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            campaign: Campaign::Densification,
            num_ues: 10,
            m_values: vec![2, 4, 6, 8, 10],
            l_values: vec![100, 150, 200, 250],
            snr_db_values: vec![30.0],
            budget_pairs: vec![(2, 250), (4, 125), (6, 83), (10, 50)],
            snapshots: 200,
            solver: SolverChoice::Milp,
            out_dir: PathBuf::from("out"),
            base_seed: 0,
            time_limit_s: None,
            root_lp: false,
            svg: true,
            scenario: ScenarioDefaults::default(),
        }
    }
}

/// One `(M, K, L, SNR)` combination of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub num_ans: usize,
    pub num_ues: usize,
    pub antennas: usize,
    pub snr_db: f64,
}

impl ExperimentSpec {
    /// Densification defaults: `K = 10`, the full `(M, L)` grid, 30 dB.
    pub fn densification() -> Self {
        Self::default()
    }

    /// Element-budget defaults: the four budget pairs at 10, 20 and 30 dB.
    pub fn element_budget() -> Self {
        Self {
            campaign: Campaign::ElementBudget,
            snr_db_values: vec![10.0, 20.0, 30.0],
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.snapshots == 0 {
            return bad("snapshots must be >= 1".into());
        }
        if self.num_ues == 0 {
            return bad("num_ues must be >= 1".into());
        }
        if self.snr_db_values.is_empty() || self.snr_db_values.iter().any(|s| !s.is_finite()) {
            return bad("snr_db_values must list finite values".into());
        }
        if let Some(t) = self.time_limit_s {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("time_limit_s must be positive, got {t}"));
            }
        }
        match self.campaign {
            Campaign::Densification | Campaign::Single => {
                if self.m_values.is_empty() || self.l_values.is_empty() {
                    return bad("m_values and l_values must not be empty".into());
                }
                if self.m_values.contains(&0) || self.l_values.contains(&0) {
                    return bad("m_values and l_values must be >= 1".into());
                }
            }
            Campaign::ElementBudget => {
                if self.budget_pairs.is_empty() {
                    return bad("budget_pairs must not be empty".into());
                }
                if self.budget_pairs.iter().any(|&(m, l)| m == 0 || l == 0) {
                    return bad("budget pairs must be >= 1".into());
                }
                // Each pair must be the integer split of one budget: B - M*L < M.
                let budget = self.budget_pairs.iter().map(|&(m, l)| m * l).max().unwrap_or(0);
                if let Some(&(m, l)) = self.budget_pairs.iter().find(|&&(m, l)| budget - m * l >= m) {
                    return bad(format!("budget pair ({m}, {l}) does not split {budget} elements"));
                }
            }
        }
        self.scenario
            .scenario(1, self.num_ues, 1, self.snr_db_values[0], self.base_seed)
            .validate()
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let point = |num_ans, antennas, snr_db| SweepPoint {
            num_ans,
            num_ues: self.num_ues,
            antennas,
            snr_db,
        };
        let mut out = Vec::new();
        match self.campaign {
            Campaign::Densification => {
                for &snr in &self.snr_db_values {
                    for &l in &self.l_values {
                        for &m in &self.m_values {
                            out.push(point(m, l, snr));
                        }
                    }
                }
            }
            Campaign::ElementBudget => {
                for &snr in &self.snr_db_values {
                    for &(m, l) in &self.budget_pairs {
                        out.push(point(m, l, snr));
                    }
                }
            }
            Campaign::Single => out.push(point(self.m_values[0], self.l_values[0], self.snr_db_values[0])),
        }
        out
    }

    pub fn scenario_for(&self, point: &SweepPoint) -> ScenarioConfig {
        self.scenario.scenario(
            point.num_ans,
            point.num_ues,
            point.antennas,
            point.snr_db,
            self.base_seed,
        )
    }

    pub fn bnb_config(&self) -> BnBConfig {
        BnBConfig {
            lp: if self.root_lp { LpUsage::Root } else { LpUsage::Never },
            time_limit: self.time_limit_s.map(Duration::from_secs_f64),
            log_every: 0,
            ..BnBConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_the_densification_grid() {
        let spec = ExperimentSpec::densification();
        spec.validate().unwrap();
        let points = spec.points();
        assert_eq!(points.len(), 20);
        assert_eq!(
            points[0],
            SweepPoint {
                num_ans: 2,
                num_ues: 10,
                antennas: 100,
                snr_db: 30.0
            }
        );
        assert_eq!(spec.snapshots, 200);
    }

    #[test]
    fn element_budget_points() {
        let spec = ExperimentSpec::element_budget();
        spec.validate().unwrap();
        let points = spec.points();
        assert_eq!(points.len(), 12);
        assert_eq!((points[2].num_ans, points[2].antennas), (6, 83));
        assert_eq!(points[11].snr_db, 30.0);
    }

    #[test]
    fn parses_a_spec_file() {
        let spec = ExperimentSpec::from_toml_str(
            r#"
            campaign = "element_budget"
            snr_db_values = [10.0]
            snapshots = 30
            solver = "both"
            out_dir = "runs/fig5"
            base_seed = 7

            [scenario]
            ue_drop_radius_m = 60.0
            "#,
        )
        .unwrap();
        assert_eq!(spec.campaign, Campaign::ElementBudget);
        assert_eq!(spec.solver, SolverChoice::Both);
        assert_eq!(spec.budget_pairs.len(), 4);
        let scenario = spec.scenario_for(&spec.points()[0]);
        assert_eq!(scenario.ue_drop_radius_m, 60.0);
        assert_eq!(scenario.an_drop_radius_m, 50.0);
        assert_eq!(scenario.base_seed, 7);
        assert_eq!(ExperimentSpec::from_toml_str(&spec.to_toml_string()).unwrap(), spec);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::from_toml_str("snapshots = 0").is_err());
        assert!(ExperimentSpec::from_toml_str("typo = 1").is_err());
        assert!(ExperimentSpec::from_toml_str("solver = \"gurobi\"").is_err());
        assert!(
            ExperimentSpec::from_toml_str("campaign = \"element_budget\"\nbudget_pairs = [[2, 250], [4, 100]]")
                .is_err()
        );
        assert!(ExperimentSpec::from_toml_str("[scenario]\nbandwidth_mhz = -1.0").is_err());
    }
}
