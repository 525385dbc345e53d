//! Effective SINR of Massive-MIMO access nodes under a given user association.
//!
//! For UE `k` served by AN `m` with load `S_m` the effective SINR is
//!
//! ```text
//! gamma_k = ((L - S_m + 1) / S_m) * p g_km / (1 + sum_{j active, j != m} p g_kj)
//! ```
//!
//! Only active ANs (serving at least one UE) radiate, so idle ANs contribute no
//! interference. Rates are `log2(1 + gamma_k)` in bit/s/Hz.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::scalar::Scalar;

/// Noise-normalized large-scale gains, row `k` = UE, column `m` = AN.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGainMatrix<T> {
    num_ues: usize,
    num_ans: usize,
    gains: Vec<T>,
}

impl<T: Scalar> PathGainMatrix<T> {
    pub fn from_row_major(num_ues: usize, num_ans: usize, gains: Vec<T>) -> Result<Self> {
        if num_ues == 0 || num_ans == 0 {
            return Err(Error::Dimension("gain matrix needs at least one UE and one AN".into()));
        }
        if gains.len() != num_ues * num_ans {
            return Err(Error::Dimension(format!(
                "{} gains for a {}x{} matrix",
                gains.len(),
                num_ues,
                num_ans
            )));
        }
        if let Some(bad) = gains.iter().find(|g| !(g.is_finite() && **g > T::zero())) {
            return Err(Error::InvalidConfig(format!(
                "path gains must be finite and positive, got {bad}"
            )));
        }
        Ok(Self {
            num_ues,
            num_ans,
            gains,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let num_ans = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_ans) {
            return Err(Error::Dimension("ragged gain rows".into()));
        }
        Self::from_row_major(rows.len(), num_ans, rows.concat())
    }

    #[inline]
    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    #[inline]
    pub fn num_ans(&self) -> usize {
        self.num_ans
    }

    #[inline]
    pub fn get(&self, ue: usize, an: usize) -> T {
        self.gains[ue * self.num_ans + an]
    }

    pub fn row(&self, ue: usize) -> &[T] {
        &self.gains[ue * self.num_ans..(ue + 1) * self.num_ans]
    }

    pub fn max(&self) -> T {
        self.gains.iter().copied().fold(T::zero(), T::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> PathGainMatrix<U> {
        PathGainMatrix {
            num_ues: self.num_ues,
            num_ans: self.num_ans,
            gains: self.gains.iter().map(|&g| f(g)).collect(),
        }
    }
}

/// Serving AN of every UE.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Association {
    serving_an: Vec<usize>,
    num_ans: usize,
}

impl Association {
    pub fn new(serving_an: Vec<usize>, num_ans: usize) -> Result<Self> {
        if serving_an.is_empty() {
            return Err(Error::Dimension("association needs at least one UE".into()));
        }
        if let Some((k, &m)) = serving_an.iter().enumerate().find(|(_, &m)| m >= num_ans) {
            return Err(Error::Dimension(format!(
                "UE {k} assigned to AN {m}, but only {num_ans} ANs exist"
            )));
        }
        Ok(Self { serving_an, num_ans })
    }

    pub fn serving_an(&self) -> &[usize] {
        &self.serving_an
    }

    pub fn serving(&self, ue: usize) -> usize {
        self.serving_an[ue]
    }

    pub fn num_ues(&self) -> usize {
        self.serving_an.len()
    }

    pub fn num_ans(&self) -> usize {
        self.num_ans
    }

    /// `S_m` for every AN.
    pub fn loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.num_ans];
        for &m in &self.serving_an {
            loads[m] += 1;
        }
        loads
    }

    /// `rho_m`: true when AN `m` serves at least one UE.
    pub fn active(&self) -> Vec<bool> {
        self.loads().into_iter().map(|s| s > 0).collect()
    }

    pub fn active_count(&self) -> usize {
        self.active().into_iter().filter(|&a| a).count()
    }

    /// First AN whose load exceeds `L + 1`, if any.
    pub fn overloaded(&self, antennas: usize) -> Option<(usize, usize)> {
        self.loads().into_iter().enumerate().find(|&(_, s)| s > antennas + 1)
    }

    /// CSV with columns `ue_index,an_index`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ue_index,an_index\n");
        for (k, m) in self.serving_an.iter().enumerate() {
            let _ = writeln!(out, "{k},{m}");
        }
        out
    }
}

/// `(L - S + 1) / S`; negative once the load exceeds `L + 1`.
pub fn massive_mimo_gain<T: Scalar>(antennas: usize, load: usize) -> Result<T> {
    if load == 0 {
        return Err(Error::ZeroLoad);
    }
    let l = T::lit(antennas as f64);
    let s = T::lit(load as f64);
    Ok((l - s + T::one()) / s)
}

fn check_dims<T: Scalar>(association: &Association, gains: &PathGainMatrix<T>) -> Result<()> {
    if association.num_ues() != gains.num_ues() || association.num_ans() != gains.num_ans() {
        return Err(Error::Dimension(format!(
            "association is {}x{}, gains are {}x{}",
            association.num_ues(),
            association.num_ans(),
            gains.num_ues(),
            gains.num_ans()
        )));
    }
    Ok(())
}

fn sinr_with_loads<T: Scalar>(
    ue: usize,
    serving: usize,
    loads: &[usize],
    gains: &PathGainMatrix<T>,
    antennas: usize,
    power: T,
) -> T {
    let interference = gains
        .row(ue)
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != serving && loads[j] > 0)
        .fold(T::zero(), |acc, (_, &g)| acc + power * g);
    let factor = massive_mimo_gain::<T>(antennas, loads[serving]).expect("serving AN has load >= 1");
    factor * power * gains.get(ue, serving) / (T::one() + interference)
}

/// Effective SINR of one UE; interference is summed over active ANs only.
pub fn effective_sinr<T: Scalar>(
    ue: usize,
    association: &Association,
    gains: &PathGainMatrix<T>,
    antennas: usize,
    power: T,
) -> Result<T> {
    check_dims(association, gains)?;
    if ue >= association.num_ues() {
        return Err(Error::Dimension(format!("UE {ue} out of range")));
    }
    let loads = association.loads();
    Ok(sinr_with_loads(
        ue,
        association.serving(ue),
        &loads,
        gains,
        antennas,
        power,
    ))
}

/// Max received power association; ties go to the lowest AN index.
pub fn baseline_association<T: Scalar>(gains: &PathGainMatrix<T>) -> Association {
    let serving = (0..gains.num_ues())
        .map(|k| {
            gains
                .row(k)
                .iter()
                .enumerate()
                .fold(
                    (0, gains.get(k, 0)),
                    |best, (m, &g)| if g > best.1 { (m, g) } else { best },
                )
                .0
        })
        .collect();
    Association::new(serving, gains.num_ans()).expect("argmax is a valid AN")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T> {
    pub sinr: Vec<T>,
    pub rates: Vec<T>,
    pub min_rate: T,
    pub min_sinr: T,
    pub active_an_count: usize,
    /// False when some AN carries more than `L + 1` UEs.
    pub feasible: bool,
}

impl<T: Scalar> RateReport<T> {
    pub fn min_sinr_db(&self) -> T {
        T::lit(10.0) * self.min_sinr.log10()
    }

    pub fn csv_header(num_ues: usize) -> String {
        let mut h = String::from("min_rate,min_sinr_db,active_ans");
        for k in 0..num_ues {
            let _ = write!(h, ",rate_{k}");
        }
        h
    }

    pub fn to_csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{}",
            sig6(self.min_rate.to_f64_lossy()),
            sig6(self.min_sinr_db().to_f64_lossy()),
            self.active_an_count
        );
        for r in &self.rates {
            let _ = write!(row, ",{}", sig6(r.to_f64_lossy()));
        }
        row
    }
}

/// Per-UE SINR and rate of an association.
pub fn evaluate<T: Scalar>(
    association: &Association,
    gains: &PathGainMatrix<T>,
    antennas: usize,
    power: T,
) -> Result<RateReport<T>> {
    check_dims(association, gains)?;
    let loads = association.loads();
    let feasible = loads.iter().all(|&s| s <= antennas + 1);
    let sinr: Vec<T> = (0..association.num_ues())
        .map(|k| sinr_with_loads(k, association.serving(k), &loads, gains, antennas, power))
        .collect();
    let rates: Vec<T> = sinr
        .iter()
        .map(|&g| {
            if g >= T::zero() {
                (T::one() + g).log2()
            } else {
                T::neg_infinity()
            }
        })
        .collect();
    let (min_sinr, min_rate) = if feasible {
        (
            sinr.iter().copied().fold(T::infinity(), T::min),
            rates.iter().copied().fold(T::infinity(), T::min),
        )
    } else {
        (T::neg_infinity(), T::neg_infinity())
    };
    Ok(RateReport {
        sinr,
        rates,
        min_rate,
        min_sinr,
        active_an_count: loads.iter().filter(|&&s| s > 0).count(),
        feasible,
    })
}

/// Allocation-free min-SINR evaluation for search loops.
#[derive(Debug, Clone)]
pub struct SinrEvaluator<T> {
    num_ues: usize,
    num_ans: usize,
    antennas: usize,
    /// `p * g_km`, row-major.
    received: Vec<T>,
    /// `(L - S + 1) / S` for `S = 1..=L+1`; index 0 unused.
    factor: Vec<T>,
}

impl<T: Scalar> SinrEvaluator<T> {
    pub fn new(gains: &PathGainMatrix<T>, antennas: usize, power: T) -> Self {
        let max_load = gains.num_ues().min(antennas + 1);
        let mut factor = vec![T::zero(); max_load + 1];
        for (s, f) in factor.iter_mut().enumerate().skip(1) {
            *f = massive_mimo_gain(antennas, s).expect("s >= 1");
        }
        Self {
            num_ues: gains.num_ues(),
            num_ans: gains.num_ans(),
            antennas,
            received: gains.gains.iter().map(|&g| power * g).collect(),
            factor,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_ans(&self) -> usize {
        self.num_ans
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// `p g_km`.
    #[inline]
    pub fn received(&self, ue: usize, an: usize) -> T {
        self.received[ue * self.num_ans + an]
    }

    /// Gain factor for load `s`, or `None` when `s` exceeds `L + 1`.
    #[inline]
    pub fn factor(&self, load: usize) -> Option<T> {
        if load == 0 || load > self.antennas + 1 {
            None
        } else {
            Some(
                self.factor
                    .get(load)
                    .copied()
                    .unwrap_or_else(|| massive_mimo_gain(self.antennas, load).expect("load >= 1")),
            )
        }
    }

    /// SINR of `ue` on `an` given AN loads and the active-set interference.
    #[inline]
    pub fn sinr(&self, ue: usize, an: usize, load: usize, active: &[bool]) -> Option<T> {
        let factor = self.factor(load)?;
        let row = &self.received[ue * self.num_ans..(ue + 1) * self.num_ans];
        let mut interference = T::zero();
        for (j, &pg) in row.iter().enumerate() {
            if j != an && active[j] {
                interference += pg;
            }
        }
        Some(factor * row[an] / (T::one() + interference))
    }

    /// Minimum SINR over UEs, `None` when the association overloads an AN.
    pub fn min_sinr(&self, serving: &[usize], loads: &mut [usize], active: &mut [bool]) -> Option<T> {
        loads.iter_mut().for_each(|s| *s = 0);
        for &m in serving {
            loads[m] += 1;
        }
        for (a, &s) in active.iter_mut().zip(loads.iter()) {
            *a = s > 0;
        }
        let mut worst = T::infinity();
        for (k, &m) in serving.iter().enumerate() {
            let g = self.sinr(k, m, loads[m], active)?;
            if g < worst {
                worst = g;
            }
        }
        Some(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn worked() -> PathGainMatrix<f64> {
        PathGainMatrix::from_rows(&[vec![10.0, 1.0], vec![2.0, 8.0]]).unwrap()
    }

    #[test]
    fn gain_factor_values() {
        assert_eq!(massive_mimo_gain::<f64>(100, 1).unwrap(), 100.0);
        assert_eq!(massive_mimo_gain::<f64>(1, 1).unwrap(), 1.0);
        assert_eq!(massive_mimo_gain::<f64>(100, 4).unwrap(), 24.25);
        assert!(massive_mimo_gain::<f64>(2, 4).unwrap() < 0.0);
        assert!(matches!(massive_mimo_gain::<f64>(4, 0), Err(Error::ZeroLoad)));
    }

    #[test]
    fn single_link_has_full_array_gain() {
        let g = PathGainMatrix::from_rows(&[vec![3.5]]).unwrap();
        let a = Association::new(vec![0], 1).unwrap();
        for l in [1, 8, 64] {
            assert_relative_eq!(effective_sinr(0, &a, &g, l, 2.0).unwrap(), l as f64 * 7.0);
        }
    }

    #[test]
    fn idle_an_does_not_interfere() {
        let g = worked();
        let a = Association::new(vec![0, 0], 2).unwrap();
        assert_relative_eq!(effective_sinr(0, &a, &g, 100, 1.0).unwrap(), 49.5 * 10.0);
        assert_relative_eq!(effective_sinr(1, &a, &g, 100, 1.0).unwrap(), 49.5 * 2.0);
    }

    #[test]
    fn split_association_worked_example() {
        let g = worked();
        let a = Association::new(vec![0, 1], 2).unwrap();
        assert_relative_eq!(effective_sinr(0, &a, &g, 100, 1.0).unwrap(), 500.0);
        assert_relative_eq!(
            effective_sinr(1, &a, &g, 100, 1.0).unwrap(),
            800.0 / 3.0,
            max_relative = 1e-12
        );
        let report = evaluate(&a, &g, 100, 1.0).unwrap();
        assert_relative_eq!(report.min_sinr, 800.0 / 3.0, max_relative = 1e-12);
        assert_eq!(report.active_an_count, 2);
        assert!(report.feasible);
    }

    #[test]
    fn single_ue_rate() {
        let g = PathGainMatrix::from_rows(&[vec![999.0]]).unwrap();
        let a = Association::new(vec![0], 1).unwrap();
        let r = evaluate(&a, &g, 1, 1.0).unwrap();
        assert_relative_eq!(r.min_rate, 1000f64.log2(), max_relative = 1e-12);
        assert_relative_eq!(r.min_rate, 9.965_784, epsilon = 1e-6);
        assert_eq!(r.rates, vec![r.min_rate]);
        assert_eq!(r.active_an_count, 1);
    }

    #[test]
    fn equal_sinrs_share_min_rate() {
        let g = PathGainMatrix::from_rows(&[vec![4.0, 4.0], vec![4.0, 4.0]]).unwrap();
        let a = Association::new(vec![0, 1], 2).unwrap();
        let r = evaluate(&a, &g, 16, 1.0).unwrap();
        assert!(r.rates.iter().all(|&x| x == r.min_rate));
    }

    #[test]
    fn overload_is_flagged() {
        let g = PathGainMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let a = Association::new(vec![0; 4], 1).unwrap();
        let r = evaluate(&a, &g, 2, 1.0).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.min_sinr, f64::NEG_INFINITY);
        assert_eq!(a.overloaded(2), Some((0, 4)));
        // S = L + 1 is the boundary: zero SINR, still feasible.
        let edge = evaluate(&a, &g, 3, 1.0).unwrap();
        assert!(edge.feasible);
        assert_eq!(edge.min_sinr, 0.0);
    }

    #[test]
    fn baseline_argmax_and_ties() {
        let g = PathGainMatrix::from_rows(&[vec![1.0, 5.0, 2.0], vec![3.0, 3.0, 1.0]]).unwrap();
        assert_eq!(baseline_association(&g).serving_an(), &[1, 0]);
    }

    #[test]
    fn evaluator_matches_report() {
        let g = PathGainMatrix::from_rows(&[vec![10.0, 1.0, 0.5], vec![2.0, 8.0, 0.1], vec![0.3, 0.2, 7.0]]).unwrap();
        let eval = SinrEvaluator::new(&g, 16, 1.5);
        let mut loads = vec![0; 3];
        let mut active = vec![false; 3];
        for serving in [vec![0, 1, 2], vec![0, 0, 2], vec![1, 1, 1]] {
            let a = Association::new(serving.clone(), 3).unwrap();
            let r = evaluate(&a, &g, 16, 1.5).unwrap();
            let fast = eval.min_sinr(&serving, &mut loads, &mut active).unwrap();
            assert_relative_eq!(fast, r.min_sinr, max_relative = 1e-12);
        }
    }

    #[test]
    fn f32_agrees_with_f64() {
        let g64 = worked();
        let g32 = g64.map(|x| x as f32);
        let a = Association::new(vec![0, 1], 2).unwrap();
        let r32 = evaluate(&a, &g32, 100, 1.0f32).unwrap();
        assert!((r32.min_sinr as f64 - 800.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn csv_outputs() {
        let a = Association::new(vec![1, 0], 2).unwrap();
        assert_eq!(a.to_csv(), "ue_index,an_index\n0,1\n1,0\n");
        let r = evaluate(&a, &worked(), 100, 1.0).unwrap();
        assert_eq!(
            RateReport::<f64>::csv_header(2),
            "min_rate,min_sinr_db,active_ans,rate_0,rate_1"
        );
        assert_eq!(r.to_csv_row().split(',').count(), 5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PathGainMatrix::from_rows(&[vec![1.0, -1.0]]).is_err());
        assert!(PathGainMatrix::from_rows(&[vec![1.0, f64::NAN]]).is_err());
        assert!(PathGainMatrix::<f64>::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(Association::new(vec![0, 2], 2).is_err());
        let a = Association::new(vec![0], 1).unwrap();
        assert!(evaluate(&a, &worked(), 4, 1.0).is_err());
    }
}
