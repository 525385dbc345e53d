//! Exhaustive enumeration of serving vectors: the reference optimum.

use crate::error::{Error, Result};
use crate::sinr::Association;
use crate::{PathGainMatrix, SinrEvaluator};

pub const DEFAULT_ENUMERATION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub theta_star: f64,
    pub association: Association,
    /// Serving vectors evaluated (feasible ones only).
    pub evaluated: u64,
    /// Serving vectors skipped because some AN exceeded `L + 1` UEs.
    pub skipped: u64,
}

/// Max-min SINR association by enumerating all `M^K` serving vectors.
///
/// Vectors are visited in lexicographic order and only a strictly better value
/// replaces the incumbent, so ties resolve to the smallest vector.
pub fn brute_force_maxmin(gains: &PathGainMatrix, antennas: usize, power: f64) -> Result<BruteForceResult> {
    brute_force_maxmin_with_limit(gains, antennas, power, DEFAULT_ENUMERATION_LIMIT)
}

pub fn brute_force_maxmin_with_limit(
    gains: &PathGainMatrix,
    antennas: usize,
    power: f64,
    limit: f64,
) -> Result<BruteForceResult> {
    let (k_count, m_count) = (gains.num_ues(), gains.num_ans());
    if antennas == 0 {
        return Err(Error::InvalidConfig("antennas_per_an must be >= 1".into()));
    }
    let combinations = (m_count as f64).powi(k_count as i32);
    if combinations > limit {
        return Err(Error::TooLarge { combinations, limit });
    }
    let eval = SinrEvaluator::new(gains, antennas, power);
    let mut serving = vec![0usize; k_count];
    let mut loads = vec![0usize; m_count];
    let mut active = vec![false; m_count];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let (mut evaluated, mut skipped) = (0u64, 0u64);

    loop {
        match eval.min_sinr(&serving, &mut loads, &mut active) {
            Some(theta) => {
                evaluated += 1;
                if best.as_ref().map_or(true, |(b, _)| theta > *b) {
                    best = Some((theta, serving.clone()));
                }
            }
            None => skipped += 1,
        }
        // Odometer with the last UE as the fastest digit.
        let mut pos = k_count;
        loop {
            if pos == 0 {
                let (theta_star, serving) = best.ok_or(Error::Infeasible)?;
                return Ok(BruteForceResult {
                    theta_star,
                    association: Association::new(serving, m_count)?,
                    evaluated,
                    skipped,
                });
            }
            pos -= 1;
            serving[pos] += 1;
            if serving[pos] < m_count {
                break;
            }
            serving[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_ue_takes_the_stronger_an() {
        let g = PathGainMatrix::from_rows(&[vec![2.0, 5.0]]).unwrap();
        let r = brute_force_maxmin(&g, 8, 1.0).unwrap();
        assert_eq!(r.association.serving_an(), &[1]);
        assert_relative_eq!(r.theta_star, 40.0);
        assert_eq!(r.evaluated, 2);
    }

    #[test]
    fn worked_example_prefers_the_split() {
        let g = PathGainMatrix::from_rows(&[vec![10.0, 1.0], vec![2.0, 8.0]]).unwrap();
        let r = brute_force_maxmin(&g, 100, 1.0).unwrap();
        assert_eq!(r.association.serving_an(), &[0, 1]);
        // 100 * 8 / (1 + 2) from UE 1 is the binding one.
        assert_relative_eq!(r.theta_star, 800.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn ties_resolve_to_the_smallest_vector() {
        let g = PathGainMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let r = brute_force_maxmin(&g, 4, 1.0).unwrap();
        // Sharing one AN: 1.5; splitting: 4 / 2 = 2.
        assert_eq!(r.association.serving_an(), &[0, 1]);
        assert_relative_eq!(r.theta_star, 2.0);
    }

    #[test]
    fn overloaded_vectors_are_skipped() {
        // L = 1 allows at most two UEs per AN.
        let g = PathGainMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(brute_force_maxmin(&g, 1, 1.0), Err(Error::Infeasible)));
        let g = PathGainMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let r = brute_force_maxmin(&g, 1, 1.0).unwrap();
        assert_eq!(r.evaluated + r.skipped, 8);
        assert_eq!(r.skipped, 2);
    }

    #[test]
    fn refuses_oversized_instances() {
        let g = PathGainMatrix::from_row_major(20, 4, vec![1.0; 80]).unwrap();
        assert!(matches!(brute_force_maxmin(&g, 4, 1.0), Err(Error::TooLarge { .. })));
    }
}
