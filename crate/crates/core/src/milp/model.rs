//! Exact linear reformulation of the max-min effective SINR association problem.
//!
//! Starting from `gamma_km >= a_km * theta` with the SINR written in terms of
//! the association binaries, every nonlinear term is replaced by an auxiliary
//! variable tied to its factors by linear rows:
//!
//! * binary x binary (`z = a rho`, `v = a a`, `u = z a`):
//!   `z <= x`, `z <= y`, `z >= x + y - 1`;
//! * binary x bounded continuous (`w = v theta`, `n = u theta`):
//!   `w <= Q x`, `w <= y`, `w >= y - (1 - x) Q`, `w >= 0`.
//!
//! The SINR row for every `(k, m)` then reads
//!
//! ```text
//! g_km (L + 1 - sum_i a_im) >= (1/p) sum_i w_imk + sum_i sum_{j != m} g_kj n_imjk
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::solver::lp::Sense;
use crate::PathGainMatrix;

use super::catalog::{VarCatalog, VarKind};

/// Constraint family a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFamily {
    /// Every UE picks one AN.
    Assign,
    /// `a_km <= rho_m`.
    ActiveLink,
    /// `z_imj = a_im rho_j`.
    InterfererProduct,
    /// `v_imk = a_im a_km`.
    CoServedProduct,
    /// `u_imjk = z_imj a_km`.
    InterfererCoServedProduct,
    /// `w_imk = v_imk theta`.
    LoadThetaProduct,
    /// `n_imjk = u_imjk theta`.
    InterferenceThetaProduct,
    /// The linearized SINR guarantee for `(k, m)`.
    MinSinr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub family: RowFamily,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    fn new(name: String, family: RowFamily, mut terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        // Merge repeated columns (e.g. v_kmk couples a_km with itself).
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (j, a) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Self {
            name,
            family,
            terms: merged,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Violation scaled by `1 + max(|rhs|, sum |a x|)`.
    pub fn relative_violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        let mag: f64 = self.terms.iter().map(|&(j, a)| (a * x[j]).abs()).sum();
        let viol = match self.sense {
            Sense::Le => act - self.rhs,
            Sense::Ge => self.rhs - act,
            Sense::Eq => (act - self.rhs).abs(),
        };
        viol.max(0.0) / (1.0 + self.rhs.abs().max(mag))
    }
}

/// Rows forcing binary `z = x * y` when `x`, `y` are binary.
pub fn binary_product_rows(z: usize, x: usize, y: usize, family: RowFamily, tag: &str) -> [Row; 3] {
    [
        Row::new(format!("{tag}_le_x"), family, vec![(z, 1.0), (x, -1.0)], Sense::Le, 0.0),
        Row::new(format!("{tag}_le_y"), family, vec![(z, 1.0), (y, -1.0)], Sense::Le, 0.0),
        Row::new(
            format!("{tag}_ge"),
            family,
            vec![(z, 1.0), (x, -1.0), (y, -1.0)],
            Sense::Ge,
            -1.0,
        ),
    ]
}

/// Rows forcing `w = x * y` for binary `x` and `0 <= y <= big_m`; `w >= 0` is a bound.
pub fn bounded_product_rows(w: usize, x: usize, y: usize, big_m: f64, family: RowFamily, tag: &str) -> [Row; 3] {
    [
        Row::new(
            format!("{tag}_le_mx"),
            family,
            vec![(w, 1.0), (x, -big_m)],
            Sense::Le,
            0.0,
        ),
        Row::new(format!("{tag}_le_y"), family, vec![(w, 1.0), (y, -1.0)], Sense::Le, 0.0),
        // w >= y - (1 - x) M
        Row::new(
            format!("{tag}_ge"),
            family,
            vec![(w, 1.0), (y, -1.0), (x, -big_m)],
            Sense::Ge,
            -big_m,
        ),
    ]
}

/// `Q = L p max g`: no association can beat the single-user, interference-free SINR.
pub fn choose_big_m(gains: &PathGainMatrix, antennas: usize, power: f64) -> f64 {
    antennas as f64 * power * gains.max()
}

/// Mixed-integer linear model: maximize `theta` over the rows and bounds.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub catalog: VarCatalog,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub gains: PathGainMatrix,
    pub antennas: usize,
    pub power: f64,
    pub big_m: f64,
}

/// Model size summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelStats {
    pub num_ues: usize,
    pub num_ans: usize,
    pub binaries: usize,
    pub continuous: usize,
    pub rows: usize,
}

impl ModelStats {
    pub const CSV_HEADER: &'static str = "K,M,n_bin,n_cont,n_rows";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.num_ues, self.num_ans, self.binaries, self.continuous, self.rows
        )
    }
}

impl MilpModel {
    pub fn num_vars(&self) -> usize {
        self.catalog.len()
    }

    pub fn objective_index(&self) -> usize {
        self.catalog.theta()
    }

    pub fn is_binary(&self, index: usize) -> bool {
        self.catalog.kind(index) == VarKind::Binary
    }

    pub fn stats(&self) -> ModelStats {
        ModelStats {
            num_ues: self.catalog.num_ues(),
            num_ans: self.catalog.num_ans(),
            binaries: self.catalog.num_binaries(),
            continuous: self.catalog.num_continuous(),
            rows: self.rows.len(),
        }
    }

    pub fn rows_of(&self, family: RowFamily) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.family == family)
    }

    /// Worst relative violation over rows and bounds, with the offending row name.
    pub fn max_violation(&self, x: &[f64]) -> (f64, Option<String>) {
        let mut worst = (0.0, None);
        for row in &self.rows {
            let v = row.relative_violation(x);
            if v > worst.0 {
                worst = (v, Some(row.name.clone()));
            }
        }
        for (j, &value) in x.iter().enumerate() {
            let below = (self.lower[j] - value).max(0.0) / (1.0 + self.lower[j].abs());
            let above = if self.upper[j].is_finite() {
                (value - self.upper[j]).max(0.0) / (1.0 + self.upper[j].abs())
            } else {
                0.0
            };
            let v = below.max(above);
            if v > worst.0 {
                worst = (v, Some(format!("bound {}", self.catalog.name(j))));
            }
        }
        worst
    }

    /// True when every row and bound holds within `tol` (relative) and binaries are integral.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let integral = (0..self.catalog.num_binaries()).all(|j| (x[j] - x[j].round()).abs() <= tol);
        integral && self.max_violation(x).0 <= tol
    }

    pub fn summary(&self) -> String {
        let s = self.stats();
        let mut out = String::new();
        let _ = write!(
            out,
            "K={} M={} L={} p={} Q={} binaries={} continuous={} rows={}",
            s.num_ues,
            s.num_ans,
            self.antennas,
            sig6(self.power),
            sig6(self.big_m),
            s.binaries,
            s.continuous,
            s.rows
        );
        out
    }
}

/// Emits every constraint family of the reformulated model.
pub fn build_milp(gains: &PathGainMatrix, antennas: usize, power: f64, big_m: f64) -> Result<MilpModel> {
    let (k_count, m_count) = (gains.num_ues(), gains.num_ans());
    if antennas == 0 {
        return Err(Error::InvalidConfig("antennas_per_an must be >= 1".into()));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidConfig(format!("power must be positive, got {power}")));
    }
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(Error::InvalidConfig(format!("big-M must be positive, got {big_m}")));
    }
    let c = VarCatalog::new(k_count, m_count);
    let others = |m: usize| (0..m_count).filter(move |&j| j != m);
    let theta = c.theta();
    let mut rows = Vec::new();

    for k in 0..k_count {
        rows.push(Row::new(
            format!("assign_{k}"),
            RowFamily::Assign,
            (0..m_count).map(|m| (c.alpha(k, m), 1.0)).collect(),
            Sense::Eq,
            1.0,
        ));
    }
    for k in 0..k_count {
        for m in 0..m_count {
            rows.push(Row::new(
                format!("link_{k}_{m}"),
                RowFamily::ActiveLink,
                vec![(c.alpha(k, m), 1.0), (c.rho(m), -1.0)],
                Sense::Le,
                0.0,
            ));
        }
    }
    for i in 0..k_count {
        for m in 0..m_count {
            for j in others(m) {
                rows.extend(binary_product_rows(
                    c.z(i, m, j),
                    c.alpha(i, m),
                    c.rho(j),
                    RowFamily::InterfererProduct,
                    &format!("z_{i}_{m}_{j}"),
                ));
            }
        }
    }
    for i in 0..k_count {
        for m in 0..m_count {
            for k in 0..k_count {
                rows.extend(binary_product_rows(
                    c.v(i, m, k),
                    c.alpha(i, m),
                    c.alpha(k, m),
                    RowFamily::CoServedProduct,
                    &format!("v_{i}_{m}_{k}"),
                ));
            }
        }
    }
    for i in 0..k_count {
        for m in 0..m_count {
            for j in others(m) {
                for k in 0..k_count {
                    rows.extend(binary_product_rows(
                        c.u(i, m, j, k),
                        c.z(i, m, j),
                        c.alpha(k, m),
                        RowFamily::InterfererCoServedProduct,
                        &format!("u_{i}_{m}_{j}_{k}"),
                    ));
                }
            }
        }
    }
    for i in 0..k_count {
        for m in 0..m_count {
            for k in 0..k_count {
                rows.extend(bounded_product_rows(
                    c.w(i, m, k),
                    c.v(i, m, k),
                    theta,
                    big_m,
                    RowFamily::LoadThetaProduct,
                    &format!("w_{i}_{m}_{k}"),
                ));
            }
        }
    }
    for i in 0..k_count {
        for m in 0..m_count {
            for j in others(m) {
                for k in 0..k_count {
                    rows.extend(bounded_product_rows(
                        c.n(i, m, j, k),
                        c.u(i, m, j, k),
                        theta,
                        big_m,
                        RowFamily::InterferenceThetaProduct,
                        &format!("n_{i}_{m}_{j}_{k}"),
                    ));
                }
            }
        }
    }
    let inv_p = 1.0 / power;
    for k in 0..k_count {
        for m in 0..m_count {
            let g = gains.get(k, m);
            let mut terms = Vec::with_capacity(k_count * (m_count + 1));
            for i in 0..k_count {
                terms.push((c.alpha(i, m), g));
                terms.push((c.w(i, m, k), inv_p));
                for j in others(m) {
                    terms.push((c.n(i, m, j, k), gains.get(k, j)));
                }
            }
            rows.push(Row::new(
                format!("sinr_{k}_{m}"),
                RowFamily::MinSinr,
                terms,
                Sense::Le,
                g * (antennas as f64 + 1.0),
            ));
        }
    }

    let mut lower = vec![0.0; c.len()];
    let mut upper = vec![f64::INFINITY; c.len()];
    for j in 0..c.num_binaries() {
        upper[j] = 1.0;
    }
    lower[theta] = 0.0;
    upper[theta] = big_m;

    Ok(MilpModel {
        catalog: c,
        rows,
        lower,
        upper,
        gains: gains.clone(),
        antennas,
        power,
        big_m,
    })
}
