//! Random cluster drops, large-scale path gains and power calibration.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::sinr::PathGainMatrix;

/// Redraw budget per UE before a placement is declared impossible.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

const STREAM_AN: u64 = 0xA1;
const STREAM_UE: u64 = 0xB2;
const STREAM_SHADOWING: u64 = 0xC3;
const STREAM_CALIBRATION: u64 = 0xD4;

/// Large-scale pathloss family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PathlossModel {
    /// Urban micro, non-line-of-sight: `a log10(d) + b + c log10(f_GHz)`.
    #[default]
    #[serde(rename = "UMI_NLOS")]
    UmiNlos,
}

impl PathlossModel {
    pub fn default_coefficients(self) -> [f64; 3] {
        match self {
            PathlossModel::UmiNlos => [36.7, 22.7, 26.0],
        }
    }
}

/// Every scenario knob. Field names double as the keys of the flat config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_ans: usize,
    pub num_ues: usize,
    pub antennas_per_an: usize,
    pub target_snr_db: f64,
    #[serde(default = "defaults::an_drop_radius_m")]
    pub an_drop_radius_m: f64,
    #[serde(default = "defaults::ue_drop_radius_m")]
    pub ue_drop_radius_m: f64,
    #[serde(default = "defaults::min_pair_distance_m")]
    pub min_pair_distance_m: f64,
    #[serde(default = "defaults::carrier_ghz")]
    pub carrier_ghz: f64,
    #[serde(default = "defaults::noise_density_dbm_hz")]
    pub noise_density_dbm_hz: f64,
    #[serde(default = "defaults::bandwidth_mhz")]
    pub bandwidth_mhz: f64,
    #[serde(default)]
    pub pathloss_model: PathlossModel,
    /// `(a, b, c)` of the pathloss formula.
    #[serde(default = "defaults::pathloss_coefficients")]
    pub pathloss_coefficients: [f64; 3],
    #[serde(default)]
    pub shadowing_sigma_db: f64,
    #[serde(default = "defaults::calibration_draws")]
    pub calibration_draws: usize,
    #[serde(default)]
    pub base_seed: u64,
}

mod defaults {
    pub fn an_drop_radius_m() -> f64 {
        50.0
    }
    pub fn ue_drop_radius_m() -> f64 {
        70.0
    }
    pub fn min_pair_distance_m() -> f64 {
        3.0
    }
    pub fn carrier_ghz() -> f64 {
        3.5
    }
    pub fn noise_density_dbm_hz() -> f64 {
        -174.0
    }
    pub fn bandwidth_mhz() -> f64 {
        10.0
    }
    pub fn pathloss_coefficients() -> [f64; 3] {
        [36.7, 22.7, 26.0]
    }
    pub fn calibration_draws() -> usize {
        100_000
    }
}

impl ScenarioConfig {
    /// Scenario with the default cluster geometry and radio parameters.
    pub fn new(num_ans: usize, num_ues: usize, antennas_per_an: usize, target_snr_db: f64) -> Self {
        Self {
            num_ans,
            num_ues,
            antennas_per_an,
            target_snr_db,
            an_drop_radius_m: defaults::an_drop_radius_m(),
            ue_drop_radius_m: defaults::ue_drop_radius_m(),
            min_pair_distance_m: defaults::min_pair_distance_m(),
            carrier_ghz: defaults::carrier_ghz(),
            noise_density_dbm_hz: defaults::noise_density_dbm_hz(),
            bandwidth_mhz: defaults::bandwidth_mhz(),
            pathloss_model: PathlossModel::UmiNlos,
            pathloss_coefficients: defaults::pathloss_coefficients(),
            shadowing_sigma_db: 0.0,
            calibration_draws: defaults::calibration_draws(),
            base_seed: 0,
        }
    }

    pub fn with_seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if self.num_ans == 0 {
            return bad("num_ans must be >= 1");
        }
        if self.num_ues == 0 {
            return bad("num_ues must be >= 1");
        }
        if self.antennas_per_an == 0 {
            return bad("antennas_per_an must be >= 1");
        }
        // A zero radius is a degenerate disk (every node at the center).
        if !(self.an_drop_radius_m >= 0.0 && self.an_drop_radius_m.is_finite()) {
            return bad("an_drop_radius_m must be finite and >= 0");
        }
        if !(self.ue_drop_radius_m >= 0.0 && self.ue_drop_radius_m.is_finite()) {
            return bad("ue_drop_radius_m must be finite and >= 0");
        }
        if !(self.min_pair_distance_m > 0.0 && self.min_pair_distance_m.is_finite()) {
            return bad("min_pair_distance_m must be finite and > 0");
        }
        if !(self.carrier_ghz > 0.0 && self.carrier_ghz.is_finite()) {
            return bad("carrier_ghz must be > 0");
        }
        if !(self.bandwidth_mhz > 0.0 && self.bandwidth_mhz.is_finite()) {
            return bad("bandwidth_mhz must be > 0");
        }
        if !self.noise_density_dbm_hz.is_finite() || !self.target_snr_db.is_finite() {
            return bad("noise_density_dbm_hz and target_snr_db must be finite");
        }
        if self.pathloss_coefficients.iter().any(|c| !c.is_finite()) {
            return bad("pathloss_coefficients must be finite");
        }
        if !(self.shadowing_sigma_db >= 0.0 && self.shadowing_sigma_db.is_finite()) {
            return bad("shadowing_sigma_db must be >= 0");
        }
        if self.calibration_draws == 0 {
            return bad("calibration_draws must be >= 1");
        }
        if self.massive_mimo_advisory() {
            log::warn!(
                "K = {} exceeds L = {}: outside the Massive-MIMO regime the effective SINR model is optimistic",
                self.num_ues,
                self.antennas_per_an
            );
        }
        Ok(())
    }

    /// True when more UEs than antennas per AN are configured.
    pub fn massive_mimo_advisory(&self) -> bool {
        self.num_ues > self.antennas_per_an
    }

    /// Parses the flat `key = value` config format.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Linear noise power in watts.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_density_dbm_hz - 30.0) / 10.0) * self.bandwidth_mhz * 1e6
    }
}

/// splitmix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one random stream of one snapshot.
pub fn derive_seed(base_seed: u64, snapshot_index: u64, stream_tag: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ snapshot_index) ^ stream_tag)
}

fn stream(base_seed: u64, snapshot_index: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base_seed, snapshot_index, tag))
}

/// Planar point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Area-uniform draw over a disk centered at the origin.
pub fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point {
    let r = radius * rng.gen::<f64>().sqrt();
    let phi = 2.0 * PI * rng.gen::<f64>();
    Point {
        x: r * phi.cos(),
        y: r * phi.sin(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTopology {
    pub snapshot_index: u64,
    pub an_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
}

impl ClusterTopology {
    pub fn num_ans(&self) -> usize {
        self.an_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn distance(&self, ue: usize, an: usize) -> f64 {
        self.ue_positions[ue].distance(&self.an_positions[an])
    }

    /// CSV dump with columns `kind,index,x_m,y_m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,index,x_m,y_m\n");
        for (i, p) in self.an_positions.iter().enumerate() {
            let _ = writeln!(out, "AN,{},{},{}", i, sig6(p.x), sig6(p.y));
        }
        for (i, p) in self.ue_positions.iter().enumerate() {
            let _ = writeln!(out, "UE,{},{},{}", i, sig6(p.x), sig6(p.y));
        }
        out
    }
}

/// Drops ANs and UEs for one snapshot.
///
/// AN and UE positions come from separate streams keyed by
/// `(base_seed, snapshot_index)`, so the same snapshot index yields nested AN
/// deployments across different `num_ans` and the same UE draws (up to
/// minimum-distance redraws).
pub fn generate_topology(config: &ScenarioConfig, snapshot_index: u64) -> Result<ClusterTopology> {
    config.validate()?;
    let mut an_rng = stream(config.base_seed, snapshot_index, STREAM_AN);
    let mut ue_rng = stream(config.base_seed, snapshot_index, STREAM_UE);

    let an_positions: Vec<Point> = (0..config.num_ans)
        .map(|_| uniform_in_disk(&mut an_rng, config.an_drop_radius_m))
        .collect();

    let mut ue_positions = Vec::with_capacity(config.num_ues);
    for ue in 0..config.num_ues {
        let mut attempts = 0;
        let point = loop {
            if attempts == MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::PlacementFailed {
                    ue,
                    min_distance: config.min_pair_distance_m,
                    attempts,
                });
            }
            attempts += 1;
            let candidate = uniform_in_disk(&mut ue_rng, config.ue_drop_radius_m);
            if an_positions
                .iter()
                .all(|an| an.distance(&candidate) >= config.min_pair_distance_m)
            {
                break candidate;
            }
        };
        ue_positions.push(point);
    }

    Ok(ClusterTopology {
        snapshot_index,
        an_positions,
        ue_positions,
    })
}

/// Deterministic pathloss in dB (no shadowing).
pub fn pathloss_db(distance_m: f64, config: &ScenarioConfig) -> Result<f64> {
    if !(distance_m >= config.min_pair_distance_m) {
        return Err(Error::DistanceBelowMinimum {
            distance: distance_m,
            min: config.min_pair_distance_m,
        });
    }
    let [a, b, c] = config.pathloss_coefficients;
    Ok(a * distance_m.log10() + b + c * config.carrier_ghz.log10())
}

/// Noise-normalized linear gain for a pathloss value.
pub fn normalized_gain(pathloss_db: f64, config: &ScenarioConfig) -> f64 {
    10f64.powf(-pathloss_db / 10.0) / config.noise_power_w()
}

/// `g[k][m] = 10^(-PL_km / 10) / N`, with optional log-normal shadowing.
pub fn compute_gain_matrix(topology: &ClusterTopology, config: &ScenarioConfig) -> Result<PathGainMatrix<f64>> {
    let (k_count, m_count) = (topology.num_ues(), topology.num_ans());
    let shadowing = if config.shadowing_sigma_db > 0.0 {
        Some(Normal::new(0.0, config.shadowing_sigma_db).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    } else {
        None
    };
    let mut rng = stream(config.base_seed, topology.snapshot_index, STREAM_SHADOWING);
    let mut gains = Vec::with_capacity(k_count * m_count);
    for k in 0..k_count {
        for m in 0..m_count {
            let mut pl = pathloss_db(topology.distance(k, m), config)?;
            if let Some(normal) = &shadowing {
                pl += normal.sample(&mut rng);
            }
            gains.push(normalized_gain(pl, config));
        }
    }
    PathGainMatrix::from_row_major(k_count, m_count, gains)
}

/// Per-AN transmit power derived from a cluster-wide budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub total_power_linear: f64,
    pub per_an_power_linear: f64,
    /// Spatially averaged interference-free gain the budget was calibrated on.
    pub mean_gain: f64,
}

impl PowerConfig {
    pub fn from_mean_gain(target_snr_db: f64, num_ans: usize, mean_gain: f64) -> Self {
        let total = 10f64.powf(target_snr_db / 10.0) / mean_gain;
        Self {
            total_power_linear: total,
            per_an_power_linear: total / num_ans as f64,
            mean_gain,
        }
    }
}

/// Draws one (AN, UE) pair by the topology rules and returns its distance.
fn draw_pair_distance<R: Rng + ?Sized>(rng: &mut R, config: &ScenarioConfig) -> Result<f64> {
    let an = uniform_in_disk(rng, config.an_drop_radius_m);
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let d = an.distance(&uniform_in_disk(rng, config.ue_drop_radius_m));
        if d >= config.min_pair_distance_m {
            return Ok(d);
        }
    }
    Err(Error::PlacementFailed {
        ue: 0,
        min_distance: config.min_pair_distance_m,
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// Mean noise-normalized gain over `draws` random pairs from the given stream.
pub fn mean_pair_gain(config: &ScenarioConfig, draws: usize, stream_index: u64) -> Result<f64> {
    config.validate()?;
    let mut rng = stream(config.base_seed, stream_index, STREAM_CALIBRATION);
    let mut sum = 0.0;
    for _ in 0..draws {
        let d = draw_pair_distance(&mut rng, config)?;
        sum += normalized_gain(pathloss_db(d, config)?, config);
    }
    Ok(sum / draws as f64)
}

/// Stream index reserved for the calibration draw (never used by snapshots).
pub const CALIBRATION_STREAM: u64 = u64::MAX;

/// Sets the cluster budget so a full-budget AN sees `target_snr_db` on average.
pub fn calibrate_power(config: &ScenarioConfig) -> Result<PowerConfig> {
    let mean_gain = mean_pair_gain(config, config.calibration_draws, CALIBRATION_STREAM)?;
    Ok(PowerConfig::from_mean_gain(
        config.target_snr_db,
        config.num_ans,
        mean_gain,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, k: usize) -> ScenarioConfig {
        ScenarioConfig::new(m, k, 100, 30.0).with_seed(11)
    }

    #[test]
    fn default_topology_respects_disks_and_spacing() {
        let c = cfg(10, 10);
        let t = generate_topology(&c, 3).unwrap();
        assert_eq!(t.num_ans(), 10);
        assert_eq!(t.num_ues(), 10);
        assert!(t.an_positions.iter().all(|p| p.norm() <= 50.0));
        assert!(t.ue_positions.iter().all(|p| p.norm() <= 70.0));
        for k in 0..10 {
            for m in 0..10 {
                assert!(t.distance(k, m) >= 3.0);
            }
        }
    }

    #[test]
    fn zero_radius_puts_single_an_at_center() {
        let mut c = cfg(1, 4);
        c.an_drop_radius_m = 0.0;
        let t = generate_topology(&c, 0).unwrap();
        assert_eq!(t.an_positions, vec![Point { x: 0.0, y: 0.0 }]);
    }

    #[test]
    fn topology_is_deterministic() {
        let c = cfg(6, 9);
        let a = generate_topology(&c, 17).unwrap();
        let b = generate_topology(&c, 17).unwrap();
        assert_eq!(a, b);
        let other = generate_topology(&c, 18).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn nested_an_drops_across_counts() {
        let small = generate_topology(&cfg(4, 10), 5).unwrap();
        let large = generate_topology(&cfg(10, 10), 5).unwrap();
        assert_eq!(small.an_positions[..], large.an_positions[..4]);
    }

    #[test]
    fn unsatisfiable_spacing_fails() {
        let mut c = cfg(1, 1);
        c.an_drop_radius_m = 0.0;
        c.ue_drop_radius_m = 0.0;
        assert!(matches!(generate_topology(&c, 0), Err(Error::PlacementFailed { .. })));
    }

    #[test]
    fn pathloss_values() {
        let c = cfg(1, 1);
        // 36.7 log10(50) + 22.7 + 26 log10(3.5)
        let expected_50 = 36.7 * 50f64.log10() + 22.7 + 26.0 * 3.5f64.log10();
        assert!((expected_50 - 99.19).abs() < 0.01);
        assert!((pathloss_db(50.0, &c).unwrap() - expected_50).abs() < 1e-12);
        assert!((pathloss_db(10.0, &c).unwrap() - 73.54).abs() < 0.01);
        assert!(matches!(pathloss_db(2.0, &c), Err(Error::DistanceBelowMinimum { .. })));
    }

    #[test]
    fn zero_frequency_coefficient_ignores_carrier() {
        let mut a = cfg(1, 1);
        a.pathloss_coefficients[2] = 0.0;
        a.carrier_ghz = 28.0;
        let mut b = a.clone();
        b.carrier_ghz = 1.0;
        assert_eq!(pathloss_db(42.0, &a).unwrap(), pathloss_db(42.0, &b).unwrap());
    }

    #[test]
    fn pathloss_increases_with_distance() {
        let c = cfg(1, 1);
        let mut last = f64::NEG_INFINITY;
        for i in 0..200 {
            let pl = pathloss_db(3.0 + i as f64 * 0.7, &c).unwrap();
            assert!(pl > last);
            last = pl;
        }
    }

    #[test]
    fn noise_normalization() {
        let c = cfg(1, 1);
        // -174 dBm/Hz over 10 MHz = -104 dBm = 10^-13.4 W
        assert!((c.noise_power_w() / 10f64.powf(-13.4) - 1.0).abs() < 1e-12);
        let g = normalized_gain(100.0, &c);
        assert!((g - 2511.886).abs() < 1e-2);

        let mut wide = c.clone();
        wide.bandwidth_mhz *= 10.0;
        assert!((normalized_gain(100.0, &wide) * 10.0 / g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_matrix_symmetry_and_shape() {
        let c = cfg(1, 2);
        let t = ClusterTopology {
            snapshot_index: 0,
            an_positions: vec![Point { x: 0.0, y: 0.0 }],
            ue_positions: vec![Point { x: 10.0, y: 0.0 }, Point { x: 0.0, y: -10.0 }],
        };
        let g = compute_gain_matrix(&t, &c).unwrap();
        assert_eq!((g.num_ues(), g.num_ans()), (2, 1));
        assert_eq!(g.get(0, 0), g.get(1, 0));

        let single = ClusterTopology {
            snapshot_index: 0,
            an_positions: vec![Point { x: 0.0, y: 0.0 }],
            ue_positions: vec![Point { x: 5.0, y: 0.0 }],
        };
        let g1 = compute_gain_matrix(&single, &cfg(1, 1)).unwrap();
        assert_eq!((g1.num_ues(), g1.num_ans()), (1, 1));
        assert!(g1.get(0, 0) > 0.0 && g1.get(0, 0).is_finite());
    }

    #[test]
    fn shadowing_is_seeded() {
        let mut c = cfg(3, 3);
        c.shadowing_sigma_db = 8.0;
        let t = generate_topology(&c, 2).unwrap();
        let a = compute_gain_matrix(&t, &c).unwrap();
        let b = compute_gain_matrix(&t, &c).unwrap();
        assert_eq!(a, b);
        let mut flat = c.clone();
        flat.shadowing_sigma_db = 0.0;
        assert_ne!(a, compute_gain_matrix(&t, &flat).unwrap());
    }

    #[test]
    fn calibration_scales_with_target_and_count() {
        let mut c = cfg(1, 1);
        c.calibration_draws = 2_000;
        let p1 = calibrate_power(&c).unwrap();
        assert!((p1.total_power_linear * p1.mean_gain - 1000.0).abs() < 1e-6);
        assert_eq!(p1.per_an_power_linear, p1.total_power_linear);

        let mut c2 = c.clone();
        c2.num_ans = 2;
        let p2 = calibrate_power(&c2).unwrap();
        assert_eq!(p2.total_power_linear, p1.total_power_linear);
        assert!((p2.per_an_power_linear * 2.0 - p1.per_an_power_linear).abs() < 1e-9 * p1.per_an_power_linear);
    }

    #[test]
    fn config_file_round_trip_and_defaults() {
        let text = "num_ans = 5\nnum_ues = 10\nantennas_per_an = 100\ntarget_snr_db = 30.0\nbase_seed = 9\n";
        let c = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(c, ScenarioConfig::new(5, 10, 100, 30.0).with_seed(9));
        let again = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again, c);
        assert!(
            ScenarioConfig::from_toml_str("num_ans = 0\nnum_ues = 1\nantennas_per_an = 1\ntarget_snr_db = 0.0")
                .is_err()
        );
        assert!(ScenarioConfig::from_toml_str(
            "num_ans = 1\nnum_ues = 1\nantennas_per_an = 1\ntarget_snr_db = 0.0\nbogus = 1"
        )
        .is_err());
        let nlos = "num_ans = 1\nnum_ues = 1\nantennas_per_an = 1\ntarget_snr_db = 0.0\npathloss_model = \"UMI_NLOS\"";
        assert!(ScenarioConfig::from_toml_str(nlos).is_ok());
    }

    #[test]
    fn advisory_flags_overloaded_regime() {
        assert!(ScenarioConfig::new(2, 20, 8, 10.0).massive_mimo_advisory());
        assert!(!ScenarioConfig::new(2, 20, 64, 10.0).massive_mimo_advisory());
    }

    #[test]
    fn topology_csv_layout() {
        let t = generate_topology(&cfg(2, 3), 0).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "kind,index,x_m,y_m");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("AN,0,"));
        assert!(lines[3].starts_with("UE,0,"));
    }
}
