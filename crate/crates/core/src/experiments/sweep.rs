//! Campaign execution, aggregation and output files.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::scenario::{mean_pair_gain, PowerConfig, CALIBRATION_STREAM};

use super::snapshot::{run_snapshot, SnapshotResult};
use super::spec::{Campaign, ExperimentSpec, SweepPoint};
use super::svg::{line_chart, Series};

/// One parsed line of `snapshots.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub seed: u64,
    pub num_ans: usize,
    pub num_ues: usize,
    pub antennas: usize,
    pub snr_db: f64,
    pub scheme: String,
    pub min_rate: f64,
    pub active_ans: usize,
    pub theta: f64,
    pub status: String,
    pub nodes: u64,
    pub seconds: f64,
}

impl SnapshotRow {
    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 12 {
            return Err(Error::Parse(format!("expected 12 fields, got {}: '{line}'", f.len())));
        }
        fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
        }
        Ok(Self {
            seed: num(f[0])?,
            num_ans: num(f[1])?,
            num_ues: num(f[2])?,
            antennas: num(f[3])?,
            snr_db: num(f[4])?,
            scheme: f[5].to_owned(),
            min_rate: num(f[6])?,
            active_ans: num(f[7])?,
            theta: num(f[8])?,
            status: f[9].to_owned(),
            nodes: num(f[10])?,
            seconds: num(f[11])?,
        })
    }

    fn key(&self) -> (usize, usize, usize, u64) {
        (self.num_ans, self.num_ues, self.antennas, self.snr_db.to_bits())
    }
}

/// Reads every data line of a `snapshots.csv` text.
pub fn parse_snapshot_csv(text: &str) -> Result<Vec<SnapshotRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SnapshotResult::CSV_HEADER => {}
        _ => return Err(Error::Parse("missing snapshots.csv header".into())),
    }
    lines.filter(|l| !l.trim().is_empty()).map(SnapshotRow::parse).collect()
}

/// Per-point statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub num_ans: usize,
    pub num_ues: usize,
    pub antennas: usize,
    pub snr_db: f64,
    pub snapshots: usize,
    pub baseline_rate: f64,
    pub optimal_rate: f64,
    /// `(optimal - baseline) / baseline` of the mean rates.
    pub gain: f64,
    pub baseline_rate_ci: f64,
    pub optimal_rate_ci: f64,
    pub baseline_active: f64,
    pub optimal_active: f64,
    pub baseline_active_ci: f64,
    pub optimal_active_ci: f64,
    /// Snapshots whose optimal scheme was proven optimal.
    pub proven: usize,
    /// Snapshots where the optimized min-rate fell below the baseline.
    pub dominance_violations: usize,
    pub mean_seconds: f64,
    pub mean_nodes: f64,
}

impl AggregateRow {
    pub const CSV_HEADER: &'static str = "M,K,L,snr_db,snapshots,baseline_rate,optimal_rate,gain,baseline_rate_ci,optimal_rate_ci,baseline_active,optimal_active,baseline_active_ci,optimal_active_ci,proven,dominance_violations,mean_seconds,mean_nodes";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.num_ans,
            self.num_ues,
            self.antennas,
            sig6(self.snr_db),
            self.snapshots,
            sig6(self.baseline_rate),
            sig6(self.optimal_rate),
            sig6(self.gain),
            sig6(self.baseline_rate_ci),
            sig6(self.optimal_rate_ci),
            sig6(self.baseline_active),
            sig6(self.optimal_active),
            sig6(self.baseline_active_ci),
            sig6(self.optimal_active_ci),
            self.proven,
            self.dominance_violations,
            sig6(self.mean_seconds),
            sig6(self.mean_nodes)
        )
    }
}

/// Mean and 95% normal-approximation half-width.
fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Groups rows by sweep point (first-appearance order) and aggregates each.
///
/// The optimized scheme is `milp` when present, otherwise `brute`.
pub fn aggregate_rows(rows: &[SnapshotRow]) -> Vec<AggregateRow> {
    let mut keys = Vec::new();
    for r in rows {
        if !keys.contains(&r.key()) {
            keys.push(r.key());
        }
    }
    keys.into_iter()
        .map(|key| {
            let at: Vec<&SnapshotRow> = rows.iter().filter(|r| r.key() == key).collect();
            let scheme_rows =
                |name: &str| -> Vec<&SnapshotRow> { at.iter().copied().filter(|r| r.scheme == name).collect() };
            let base = scheme_rows("baseline");
            let mut opt = scheme_rows("milp");
            if opt.is_empty() {
                opt = scheme_rows("brute");
            }
            let rates = |rs: &[&SnapshotRow]| rs.iter().map(|r| r.min_rate).collect::<Vec<_>>();
            let active = |rs: &[&SnapshotRow]| rs.iter().map(|r| r.active_ans as f64).collect::<Vec<_>>();
            let (baseline_rate, baseline_rate_ci) = mean_ci(&rates(&base));
            let (optimal_rate, optimal_rate_ci) = mean_ci(&rates(&opt));
            let (baseline_active, baseline_active_ci) = mean_ci(&active(&base));
            let (optimal_active, optimal_active_ci) = mean_ci(&active(&opt));
            let dominance_violations = opt
                .iter()
                .filter(|o| {
                    base.iter()
                        .find(|b| b.seed == o.seed)
                        .is_some_and(|b| o.min_rate < b.min_rate - 1e-6 * (1.0 + b.min_rate.abs()))
                })
                .count();
            let first = at[0];
            AggregateRow {
                num_ans: first.num_ans,
                num_ues: first.num_ues,
                antennas: first.antennas,
                snr_db: first.snr_db,
                snapshots: base.len(),
                baseline_rate,
                optimal_rate,
                gain: (optimal_rate - baseline_rate) / baseline_rate,
                baseline_rate_ci,
                optimal_rate_ci,
                baseline_active,
                optimal_active,
                baseline_active_ci,
                optimal_active_ci,
                proven: opt.iter().filter(|r| r.status == "optimal").count(),
                dominance_violations,
                mean_seconds: mean_ci(&opt.iter().map(|r| r.seconds).collect::<Vec<_>>()).0,
                mean_nodes: mean_ci(&opt.iter().map(|r| r.nodes as f64).collect::<Vec<_>>()).0,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub power: PowerConfig,
    pub snapshots: Vec<SnapshotResult>,
}

#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub spec: ExperimentSpec,
    pub points: Vec<PointResult>,
    pub aggregates: Vec<AggregateRow>,
}

impl CampaignReport {
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::from(SnapshotResult::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            for s in &p.snapshots {
                for row in s.csv_rows() {
                    out.push_str(&row);
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from(AggregateRow::CSV_HEADER);
        out.push('\n');
        for a in &self.aggregates {
            out.push_str(&a.to_csv_row());
            out.push('\n');
        }
        out
    }

    /// Mean of the per-point relative gains.
    pub fn mean_gain(&self) -> f64 {
        self.aggregates.iter().map(|a| a.gain).sum::<f64>() / self.aggregates.len() as f64
    }

    /// Mean optimal active ANs over mean baseline active ANs, pooled over points.
    pub fn active_ratio(&self) -> f64 {
        let opt: f64 = self.aggregates.iter().map(|a| a.optimal_active).sum();
        let base: f64 = self.aggregates.iter().map(|a| a.baseline_active).sum();
        opt / base
    }

    pub fn aggregate_at(&self, num_ans: usize, antennas: usize, snr_db: f64) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.num_ans == num_ans && a.antennas == antennas && a.snr_db == snr_db)
    }

    /// Line charts for the campaign, as `(file name, svg)` pairs.
    pub fn charts(&self) -> Vec<(String, String)> {
        let series = |group: &dyn Fn(&AggregateRow) -> (String, f64), value: &dyn Fn(&AggregateRow) -> f64, dashed| {
            let mut out: Vec<Series> = Vec::new();
            for a in &self.aggregates {
                let (label, x) = group(a);
                match out.iter_mut().find(|s| s.label == label) {
                    Some(s) => s.points.push((x, value(a))),
                    None => out.push(Series {
                        label,
                        points: vec![(x, value(a))],
                        dashed,
                    }),
                }
            }
            out
        };
        let both = |group: &dyn Fn(&AggregateRow) -> (String, f64),
                    opt: &dyn Fn(&AggregateRow) -> f64,
                    base: &dyn Fn(&AggregateRow) -> f64| {
            let mut s = series(group, opt, false);
            for b in series(group, base, true) {
                s.push(Series {
                    label: format!("{} baseline", b.label),
                    ..b
                });
            }
            s
        };
        match self.spec.campaign {
            Campaign::Densification => {
                let by_l = |a: &AggregateRow| (format!("L={} {}dB", a.antennas, a.snr_db), a.num_ans as f64);
                vec![
                    (
                        "rate_vs_m.svg".into(),
                        line_chart(
                            "Worst UE rate vs number of ANs",
                            "M",
                            "bit/s/Hz",
                            &both(&by_l, &|a| a.optimal_rate, &|a| a.baseline_rate),
                        ),
                    ),
                    (
                        "active_vs_m.svg".into(),
                        line_chart(
                            "Active ANs vs number of ANs",
                            "M",
                            "active ANs",
                            &both(&by_l, &|a| a.optimal_active, &|a| a.baseline_active),
                        ),
                    ),
                ]
            }
            Campaign::ElementBudget => {
                let by_pair = |a: &AggregateRow| (format!("({}, {})", a.num_ans, a.antennas), a.snr_db);
                vec![
                    (
                        "rate_vs_snr.svg".into(),
                        line_chart(
                            "Worst UE rate vs target SNR",
                            "SNR (dB)",
                            "bit/s/Hz",
                            &series(&by_pair, &|a| a.optimal_rate, false),
                        ),
                    ),
                    (
                        "active_vs_snr.svg".into(),
                        line_chart(
                            "Active ANs vs target SNR",
                            "SNR (dB)",
                            "active ANs",
                            &series(&by_pair, &|a| a.optimal_active, false),
                        ),
                    ),
                ]
            }
            Campaign::Single => Vec::new(),
        }
    }

    /// Writes `snapshots.csv`, `aggregate.csv` and the charts into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("snapshots.csv"), self.snapshot_csv())?;
        fs::write(dir.join("aggregate.csv"), self.aggregate_csv())?;
        if self.spec.svg {
            for (name, svg) in self.charts() {
                fs::write(dir.join(name), svg)?;
            }
        }
        Ok(())
    }
}

/// Runs every point of the campaign. Snapshots run in parallel; results keep
/// their snapshot order, so the output does not depend on scheduling.
pub fn run_campaign(spec: &ExperimentSpec) -> Result<CampaignReport> {
    spec.validate()?;
    let bnb = spec.bnb_config();
    let points = spec.points();
    // The calibration draw depends on the drop geometry only, so one draw
    // serves every point of the campaign.
    let probe = spec.scenario_for(&points[0]);
    let mean_gain = mean_pair_gain(&probe, probe.calibration_draws, CALIBRATION_STREAM)?;

    let mut results = Vec::with_capacity(points.len());
    for point in points {
        let config = spec.scenario_for(&point);
        config.validate()?;
        let power = PowerConfig::from_mean_gain(point.snr_db, point.num_ans, mean_gain);
        let snapshots = (0..spec.snapshots as u64)
            .into_par_iter()
            .map(|s| run_snapshot(&config, &power, s, spec.solver, &bnb))
            .collect::<Result<Vec<_>>>()?;
        log::info!(
            "M={} K={} L={} snr={} dB: {} snapshots",
            point.num_ans,
            point.num_ues,
            point.antennas,
            point.snr_db,
            snapshots.len()
        );
        results.push(PointResult {
            point,
            power,
            snapshots,
        });
    }
    let mut report = CampaignReport {
        spec: spec.clone(),
        points: results,
        aggregates: Vec::new(),
    };
    // Aggregate the written values so the table is recomputable from the CSV.
    report.aggregates = aggregate_rows(&parse_snapshot_csv(&report.snapshot_csv())?);
    Ok(report)
}

fn require(spec: &ExperimentSpec, campaign: Campaign) -> Result<()> {
    if spec.campaign == campaign {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "expected a {campaign:?} spec, got {:?}",
            spec.campaign
        )))
    }
}

pub fn run_densification_sweep(spec: &ExperimentSpec) -> Result<CampaignReport> {
    require(spec, Campaign::Densification)?;
    run_campaign(spec)
}

pub fn run_element_budget_sweep(spec: &ExperimentSpec) -> Result<CampaignReport> {
    require(spec, Campaign::ElementBudget)?;
    run_campaign(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::SolverChoice;

    fn tiny() -> ExperimentSpec {
        let mut spec = ExperimentSpec {
            num_ues: 4,
            m_values: vec![2, 3],
            l_values: vec![16],
            snapshots: 6,
            solver: SolverChoice::Both,
            base_seed: 3,
            ..ExperimentSpec::densification()
        };
        spec.scenario.calibration_draws = 1_000;
        spec
    }

    #[test]
    fn aggregates_are_recomputable_from_the_csv() {
        let report = run_campaign(&tiny()).unwrap();
        assert_eq!(report.aggregates.len(), 2);
        let again = aggregate_rows(&parse_snapshot_csv(&report.snapshot_csv()).unwrap());
        assert_eq!(again, report.aggregates);
        for a in &report.aggregates {
            assert_eq!(a.snapshots, 6);
            assert_eq!(a.proven, 6);
            assert_eq!(a.dominance_violations, 0);
            assert!(a.optimal_rate >= a.baseline_rate);
        }
        // Header + 3 schemes x 6 snapshots x 2 points.
        assert_eq!(report.snapshot_csv().lines().count(), 1 + 36);
    }

    #[test]
    fn campaign_is_deterministic() {
        let a = run_campaign(&tiny()).unwrap();
        let b = run_campaign(&tiny()).unwrap();
        let strip = |r: &CampaignReport| {
            r.points
                .iter()
                .flat_map(|p| p.snapshots.iter())
                .flat_map(|s| {
                    s.schemes()
                        .map(|x| (x.association.clone(), x.min_sinr.to_bits(), x.nodes))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn wrong_campaign_is_refused() {
        assert!(run_element_budget_sweep(&tiny()).is_err());
    }

    #[test]
    fn mean_ci_matches_hand_values() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample sd = sqrt(5/3)
        assert!((h - 1.96 * (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_ci(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(parse_snapshot_csv("nope\n").is_err());
        let text = format!("{}\n1,2,3\n", SnapshotResult::CSV_HEADER);
        assert!(parse_snapshot_csv(&text).is_err());
    }

    #[test]
    fn writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_campaign(&tiny()).unwrap();
        report.write(dir.path()).unwrap();
        for f in ["snapshots.csv", "aggregate.csv", "rate_vs_m.svg", "active_vs_m.svg"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
        assert_eq!(agg.lines().count(), 3);
    }
}
