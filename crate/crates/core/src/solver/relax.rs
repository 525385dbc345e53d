//! LP relaxation of a [`MilpModel`] under variable bounds.
//!
//! Rows are generated lazily: the LP starts from the assignment and SINR rows,
//! and every round adds the rows violated by the current point (variables that
//! appear in no active row sit at their lower bound). Each intermediate optimum
//! is a valid upper bound, so a cutoff can stop the loop early; when no row is
//! violated the point is optimal for the full relaxation.

use crate::error::Result;
use crate::milp::{MilpModel, RowFamily};
use crate::solver::lp::{solve_lp_with, LpProblem, LpStatus, Sense, SimplexOptions};

#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    pub simplex: SimplexOptions<f64>,
    /// Stop as soon as the bound drops to or below this value.
    pub cutoff: Option<f64>,
    pub max_rounds: usize,
    /// Row violation (relative) that triggers inclusion.
    pub violation_tol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            cutoff: None,
            max_rounds: 200,
            violation_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxStatus {
    Optimal,
    Infeasible,
    /// Bound fell to the cutoff before all rows were enforced.
    CutOff,
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub status: RelaxStatus,
    /// Upper bound on the objective (meaningful unless infeasible).
    pub bound: f64,
    /// Full-length primal point.
    pub x: Vec<f64>,
    pub lp_iterations: usize,
    pub rounds: usize,
    pub active_rows: usize,
}

fn activity_range(terms: &[(usize, f64)], lower: &[f64], upper: &[f64]) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0, 0.0);
    for &(j, a) in terms {
        if a > 0.0 {
            lo += a * lower[j];
            hi += a * upper[j];
        } else {
            lo += a * upper[j];
            hi += a * lower[j];
        }
    }
    (lo, hi)
}

/// Solves the relaxation of `model` with bounds `lower`/`upper` on every column.
pub fn solve_relaxation(model: &MilpModel, lower: &[f64], upper: &[f64], opts: &RelaxOptions) -> Result<Relaxation> {
    let n = model.num_vars();
    let theta = model.objective_index();
    let scale_tol = |rhs: f64| 1e-9 * (1.0 + rhs.abs());
    let infeasible = |iters, rounds| Relaxation {
        status: RelaxStatus::Infeasible,
        bound: f64::NEG_INFINITY,
        x: vec![0.0; n],
        lp_iterations: iters,
        rounds,
        active_rows: 0,
    };

    if (0..n).any(|j| lower[j] > upper[j]) {
        return Ok(infeasible(0, 0));
    }

    // Drop rows implied by the bounds; catch rows the bounds already violate.
    let mut candidates = Vec::new();
    for (r, row) in model.rows.iter().enumerate() {
        let (lo, hi) = activity_range(&row.terms, lower, upper);
        let tol = scale_tol(row.rhs);
        let (redundant, violated) = match row.sense {
            Sense::Le => (hi <= row.rhs + tol, lo > row.rhs + tol),
            Sense::Ge => (lo >= row.rhs - tol, hi < row.rhs - tol),
            Sense::Eq => (
                lo >= row.rhs - tol && hi <= row.rhs + tol,
                lo > row.rhs + tol || hi < row.rhs - tol,
            ),
        };
        if violated {
            return Ok(infeasible(0, 0));
        }
        if !redundant {
            candidates.push(r);
        }
    }

    let mut in_lp = vec![false; model.rows.len()];
    let mut active: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&r| matches!(model.rows[r].family, RowFamily::Assign | RowFamily::MinSinr))
        .collect();
    for &r in &active {
        in_lp[r] = true;
    }

    let fixed = |j: usize| upper[j] <= lower[j];
    let mut lp_iterations = 0;
    let mut rounds = 0;
    loop {
        rounds += 1;
        // Local columns: theta plus every free variable touched by an active row.
        let mut col_of = vec![usize::MAX; n];
        let mut cols = vec![theta];
        col_of[theta] = 0;
        for &r in &active {
            for &(j, _) in &model.rows[r].terms {
                if !fixed(j) && col_of[j] == usize::MAX {
                    col_of[j] = cols.len();
                    cols.push(j);
                }
            }
        }
        let mut lp = LpProblem::new(cols.len());
        lp.objective[0] = 1.0;
        for (c, &j) in cols.iter().enumerate() {
            lp.lower[c] = lower[j];
            lp.upper[c] = upper[j];
        }
        for &r in &active {
            let row = &model.rows[r];
            let mut dense = vec![0.0; cols.len()];
            let mut rhs = row.rhs;
            for &(j, a) in &row.terms {
                if col_of[j] != usize::MAX {
                    dense[col_of[j]] += a;
                } else {
                    rhs -= a * lower[j];
                }
            }
            lp.add_row(dense, row.sense, rhs);
        }
        let sol = solve_lp_with(&lp, &opts.simplex)?;
        lp_iterations += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(infeasible(lp_iterations, rounds)),
            LpStatus::Unbounded => unreachable!("theta is bounded above"),
        }

        let mut x = lower.to_vec();
        for (c, &j) in cols.iter().enumerate() {
            x[j] = sol.x[c];
        }
        let bound = sol.objective;
        if let Some(cut) = opts.cutoff {
            if bound <= cut {
                return Ok(Relaxation {
                    status: RelaxStatus::CutOff,
                    bound,
                    x,
                    lp_iterations,
                    rounds,
                    active_rows: active.len(),
                });
            }
        }

        let violated: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&r| !in_lp[r] && model.rows[r].relative_violation(&x) > opts.violation_tol)
            .collect();
        if violated.is_empty() || rounds >= opts.max_rounds {
            let status = if violated.is_empty() {
                RelaxStatus::Optimal
            } else {
                log::warn!(
                    "relaxation stopped after {rounds} rounds with {} violated rows",
                    violated.len()
                );
                RelaxStatus::CutOff
            };
            return Ok(Relaxation {
                status,
                bound,
                x,
                lp_iterations,
                rounds,
                active_rows: active.len(),
            });
        }
        for r in violated {
            in_lp[r] = true;
            active.push(r);
        }
    }
}

/// Relaxation of the unrestricted model.
pub fn solve_root_relaxation(model: &MilpModel) -> Result<Relaxation> {
    solve_relaxation(model, &model.lower, &model.upper, &RelaxOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{build_milp, choose_big_m};
    use crate::solver::brute::brute_force_maxmin;
    use crate::solver::lp::solve_lp;
    use crate::PathGainMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gains(rng: &mut ChaCha8Rng, k: usize, m: usize) -> PathGainMatrix {
        let g = (0..k * m).map(|_| 10f64.powf(rng.gen_range(-1.0..2.0))).collect();
        PathGainMatrix::from_row_major(k, m, g).unwrap()
    }

    fn model(g: &PathGainMatrix, l: usize, p: f64) -> MilpModel {
        build_milp(g, l, p, choose_big_m(g, l, p)).unwrap()
    }

    /// The same relaxation with every row present from the start.
    fn full_lp(model: &MilpModel) -> f64 {
        let n = model.num_vars();
        let mut lp = LpProblem::new(n);
        lp.objective[model.objective_index()] = 1.0;
        lp.lower = model.lower.clone();
        lp.upper = model.upper.clone();
        for row in &model.rows {
            lp.add_sparse_row(&row.terms, row.sense, row.rhs);
        }
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        sol.objective
    }

    #[test]
    fn single_link_relaxation_is_exact() {
        let g = PathGainMatrix::from_rows(&[vec![3.0]]).unwrap();
        let r = solve_root_relaxation(&model(&g, 8, 2.0)).unwrap();
        assert_eq!(r.status, RelaxStatus::Optimal);
        assert!((r.bound - 48.0).abs() < 1e-9);
    }

    #[test]
    fn row_generation_matches_the_full_lp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (k, m) in [(2, 2), (3, 2), (2, 3)] {
            let mdl = model(&random_gains(&mut rng, k, m), 4, 1.0);
            let lazy = solve_root_relaxation(&mdl).unwrap();
            assert_eq!(lazy.status, RelaxStatus::Optimal);
            let full = full_lp(&mdl);
            assert!(
                (lazy.bound - full).abs() <= 1e-6 * (1.0 + full.abs()),
                "{} vs {full}",
                lazy.bound
            );
            assert!(mdl.max_violation(&lazy.x).0 <= 1e-6);
        }
    }

    #[test]
    fn relaxation_bounds_the_integer_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = random_gains(&mut rng, 2, 2);
            let best = brute_force_maxmin(&g, 4, 1.0).unwrap().theta_star;
            let r = solve_root_relaxation(&model(&g, 4, 1.0)).unwrap();
            assert!(r.bound >= best - 1e-9 * (1.0 + best));
        }
    }

    #[test]
    fn fixing_every_ue_gives_the_association_value() {
        let g = PathGainMatrix::from_rows(&[vec![10.0, 1.0], vec![2.0, 8.0]]).unwrap();
        let mdl = model(&g, 100, 1.0);
        let (mut lower, mut upper) = (mdl.lower.clone(), mdl.upper.clone());
        let c = &mdl.catalog;
        for (k, m) in [(0, 0), (1, 1)] {
            for j in 0..2 {
                let v = if j == m { 1.0 } else { 0.0 };
                lower[c.alpha(k, j)] = v;
                upper[c.alpha(k, j)] = v;
            }
        }
        let r = solve_relaxation(&mdl, &lower, &upper, &RelaxOptions::default()).unwrap();
        assert_eq!(r.status, RelaxStatus::Optimal);
        assert!((r.bound - 800.0 / 3.0).abs() < 1e-6, "{}", r.bound);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let g = PathGainMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let mdl = model(&g, 2, 1.0);
        let mut upper = mdl.upper.clone();
        upper[mdl.catalog.alpha(0, 0)] = 0.0;
        upper[mdl.catalog.alpha(0, 1)] = 0.0;
        let r = solve_relaxation(&mdl, &mdl.lower, &upper, &RelaxOptions::default()).unwrap();
        assert_eq!(r.status, RelaxStatus::Infeasible);
    }

    #[test]
    fn cutoff_stops_early_with_a_valid_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mdl = model(&random_gains(&mut rng, 3, 2), 4, 1.0);
        let full = solve_root_relaxation(&mdl).unwrap().bound;
        let opts = RelaxOptions {
            cutoff: Some(f64::MAX),
            ..RelaxOptions::default()
        };
        let r = solve_relaxation(&mdl, &mdl.lower, &mdl.upper, &opts).unwrap();
        assert_eq!(r.status, RelaxStatus::CutOff);
        assert_eq!(r.rounds, 1);
        assert!(r.bound >= full - 1e-6 * (1.0 + full));
    }
}
