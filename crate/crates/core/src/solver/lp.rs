//! Dense two-phase primal simplex with bounded variables.
//!
//! Problems are stated as `maximize c'x` subject to dense rows `a_i x (<=|>=|=) b_i`
//! and per-variable bounds `l_j <= x_j <= u_j` (either side may be infinite).
//! Internally every variable is shifted or mirrored to `[0, u]`, rows get slacks
//! and, where no slack can start basic, an artificial. Nonbasic variables rest
//! at either bound, so binary relaxations never need explicit `x <= 1` rows.
//!
//! Pricing is Dantzig's rule; after `stall_limit` consecutive degenerate pivots
//! the solver falls back to Bland's rule until progress resumes.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// Maximization LP with a dense constraint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T> {
    pub objective: Vec<T>,
    pub matrix: Vec<Vec<T>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> LpProblem<T> {
    /// `num_vars` variables in `[0, +inf)` with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![T::zero(); num_vars],
            matrix: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![T::zero(); num_vars],
            upper: vec![T::infinity(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn maximize(mut self, objective: Vec<T>) -> Self {
        assert_eq!(objective.len(), self.num_vars());
        self.objective = objective;
        self
    }

    pub fn with_bounds(mut self, var: usize, lower: T, upper: T) -> Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn with_row(mut self, coefficients: Vec<T>, sense: Sense, rhs: T) -> Self {
        self.add_row(coefficients, sense, rhs);
        self
    }

    pub fn add_row(&mut self, coefficients: Vec<T>, sense: Sense, rhs: T) {
        assert_eq!(coefficients.len(), self.num_vars());
        self.matrix.push(coefficients);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    /// Adds a row given as sparse `(var, coef)` terms.
    pub fn add_sparse_row(&mut self, terms: &[(usize, T)], sense: Sense, rhs: T) {
        let mut row = vec![T::zero(); self.num_vars()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.add_row(row, sense, rhs);
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidInput(
                "bound vectors do not match the variable count".into(),
            ));
        }
        if self.senses.len() != self.matrix.len() || self.rhs.len() != self.matrix.len() {
            return Err(LpError::InvalidInput(
                "row metadata does not match the row count".into(),
            ));
        }
        if self.matrix.iter().any(|r| r.len() != n) {
            return Err(LpError::InvalidInput("ragged constraint matrix".into()));
        }
        let finite = |v: &T| v.is_finite();
        if !self.objective.iter().all(finite)
            || !self.rhs.iter().all(finite)
            || !self.matrix.iter().flatten().all(finite)
        {
            return Err(LpError::InvalidInput("non-finite coefficient".into()));
        }
        if self.lower.iter().any(|l| l.is_nan() || *l == T::infinity())
            || self.upper.iter().any(|u| u.is_nan() || *u == T::neg_infinity())
        {
            return Err(LpError::InvalidInput("invalid variable bound".into()));
        }
        Ok(())
    }

    /// Largest relative row violation of `x` (0 when feasible).
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (i, row) in self.matrix.iter().enumerate() {
            let (mut act, mut mag) = (T::zero(), T::zero());
            for (a, v) in row.iter().zip(x) {
                act += *a * *v;
                mag += (*a * *v).abs();
            }
            let b = self.rhs[i];
            let viol = match self.senses[i] {
                Sense::Le => act - b,
                Sense::Ge => b - act,
                Sense::Eq => (act - b).abs(),
            };
            let rel = viol / (T::one() + b.abs().max(mag));
            worst = worst.max(rel);
        }
        for (j, v) in x.iter().enumerate() {
            let below = (self.lower[j] - *v) / (T::one() + self.lower[j].abs());
            let above = (*v - self.upper[j]) / (T::one() + self.upper[j].abs());
            if self.lower[j].is_finite() {
                worst = worst.max(below);
            }
            if self.upper[j].is_finite() {
                worst = worst.max(above);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Primal values (meaningful when optimal).
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("invalid LP input: {0}")]
    InvalidInput(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<T> {
    pub feasibility_tol: T,
    pub optimality_tol: T,
    pub pivot_tol: T,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_limit: usize,
    pub max_iterations: usize,
    /// Accepted relative row violation of the returned point.
    pub check_tol: T,
}

impl<T: Scalar> Default for SimplexOptions<T> {
    fn default() -> Self {
        let tol = T::default_tolerance();
        Self {
            feasibility_tol: tol,
            optimality_tol: tol,
            pivot_tol: tol * T::lit(1e-2),
            stall_limit: 50,
            max_iterations: 200_000,
            check_tol: tol * T::lit(10.0),
        }
    }
}

/// Solves with default options.
pub fn solve_lp<T: Scalar>(problem: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    solve_lp_with(problem, &SimplexOptions::default())
}

pub fn solve_lp_with<T: Scalar>(problem: &LpProblem<T>, options: &SimplexOptions<T>) -> Result<LpSolution<T>, LpError> {
    problem.validate()?;
    let n = problem.num_vars();
    for j in 0..n {
        if problem.lower[j] > problem.upper[j] + options.feasibility_tol * (T::one() + problem.upper[j].abs()) {
            return Ok(infeasible(n, 0));
        }
    }

    let std = StandardForm::build(problem);
    let mut tab = Tableau::new(&std, options);
    tab.phase_one()?;
    let infeasibility = tab.artificial_sum();
    if infeasibility > options.feasibility_tol * (T::one() + std.rhs_scale) {
        return Ok(infeasible(n, tab.iterations));
    }
    tab.expel_artificials();
    let status = tab.phase_two(&std.cost)?;
    if status == LpStatus::Unbounded {
        return Ok(LpSolution {
            status,
            x: vec![T::zero(); n],
            objective: T::infinity(),
            iterations: tab.iterations,
        });
    }

    let x = std.recover(&tab.values());
    let violation = problem.max_violation(&x);
    if !(violation <= options.check_tol) {
        return Err(LpError::NumericalBreakdown(format!(
            "returned point violates a row by {violation} (relative)"
        )));
    }
    let objective = problem
        .objective
        .iter()
        .zip(&x)
        .fold(T::zero(), |acc, (c, v)| acc + *c * *v);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: tab.iterations,
    })
}

fn infeasible<T: Scalar>(n: usize, iterations: usize) -> LpSolution<T> {
    LpSolution {
        status: LpStatus::Infeasible,
        x: vec![T::zero(); n],
        objective: T::neg_infinity(),
        iterations,
    }
}

/// How an original variable maps onto standard columns.
#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// `x = offset + y`
    Shifted { col: usize, offset: f64 },
    /// `x = offset - y`
    Mirrored { col: usize, offset: f64 },
    /// `x = y+ - y-`
    Split { pos: usize, neg: usize },
}

struct StandardForm<T> {
    /// Row-major `rows x cols` (after row scaling and sign normalization).
    a: Vec<T>,
    rhs: Vec<T>,
    upper: Vec<T>,
    cost: Vec<T>,
    /// Initial basic column of each row.
    basis: Vec<usize>,
    artificial_start: usize,
    cols: usize,
    rows: usize,
    maps: Vec<ColumnMap>,
    rhs_scale: T,
}

impl<T: Scalar> StandardForm<T> {
    fn build(p: &LpProblem<T>) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();

        let mut maps = Vec::with_capacity(n);
        let mut upper = Vec::new();
        let mut cost = Vec::new();
        for j in 0..n {
            let (l, u, c) = (p.lower[j], p.upper[j], p.objective[j]);
            if l.is_finite() {
                maps.push(ColumnMap::Shifted {
                    col: upper.len(),
                    offset: l.to_f64_lossy(),
                });
                upper.push(u - l);
                cost.push(c);
            } else if u.is_finite() {
                maps.push(ColumnMap::Mirrored {
                    col: upper.len(),
                    offset: u.to_f64_lossy(),
                });
                upper.push(T::infinity());
                cost.push(-c);
            } else {
                let pos = upper.len();
                maps.push(ColumnMap::Split { pos, neg: pos + 1 });
                upper.extend([T::infinity(), T::infinity()]);
                cost.extend([c, -c]);
            }
        }
        let structural = upper.len();
        let slack_count = p.senses.iter().filter(|s| **s != Sense::Eq).count();
        let slack_start = structural;
        let artificial_start = structural + slack_count;

        // Substitute bounds, scale each row by its largest coefficient.
        let mut dense_rows: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut slack_col = Vec::with_capacity(m);
        let mut next_slack = slack_start;
        for i in 0..m {
            let mut row = vec![T::zero(); artificial_start];
            let mut b = p.rhs[i];
            for (j, &a) in p.matrix[i].iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                match maps[j] {
                    ColumnMap::Shifted { col, offset } => {
                        row[col] += a;
                        b -= a * T::lit(offset);
                    }
                    ColumnMap::Mirrored { col, offset } => {
                        row[col] -= a;
                        b -= a * T::lit(offset);
                    }
                    ColumnMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            let scale = row[..structural].iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
            let scale = if scale > T::zero() { scale } else { T::one() };
            for v in row[..structural].iter_mut() {
                *v /= scale;
            }
            b /= scale;
            match p.senses[i] {
                Sense::Le => {
                    row[next_slack] = T::one();
                    slack_col.push(Some(next_slack));
                    next_slack += 1;
                }
                Sense::Ge => {
                    row[next_slack] = -T::one();
                    slack_col.push(Some(next_slack));
                    next_slack += 1;
                }
                Sense::Eq => slack_col.push(None),
            }
            if b < T::zero() {
                row.iter_mut().for_each(|v| *v = -*v);
                b = -b;
            }
            dense_rows.push(row);
            rhs.push(b);
        }
        upper.extend(std::iter::repeat(T::infinity()).take(slack_count));
        cost.extend(std::iter::repeat(T::zero()).take(slack_count));

        // Rows whose slack enters with +1 start from the slack; others need an artificial.
        let mut basis = Vec::with_capacity(m);
        let mut artificial_rows = Vec::new();
        for i in 0..m {
            match slack_col[i] {
                Some(s) if dense_rows[i][s] == T::one() => basis.push(s),
                _ => {
                    basis.push(artificial_start + artificial_rows.len());
                    artificial_rows.push(i);
                }
            }
        }
        let cols = artificial_start + artificial_rows.len();
        upper.extend(std::iter::repeat(T::infinity()).take(artificial_rows.len()));
        cost.extend(std::iter::repeat(T::zero()).take(artificial_rows.len()));

        let mut a = vec![T::zero(); m * cols];
        for (i, row) in dense_rows.iter().enumerate() {
            a[i * cols..i * cols + artificial_start].copy_from_slice(row);
        }
        for (t, &i) in artificial_rows.iter().enumerate() {
            a[i * cols + artificial_start + t] = T::one();
        }
        let rhs_scale = rhs.iter().fold(T::zero(), |acc: T, v: &T| acc.max(v.abs()));

        Self {
            a,
            rhs,
            upper,
            cost,
            basis,
            artificial_start,
            cols,
            rows: m,
            maps,
            rhs_scale,
        }
    }

    fn recover(&self, y: &[T]) -> Vec<T> {
        self.maps
            .iter()
            .map(|map| match *map {
                ColumnMap::Shifted { col, offset } => T::lit(offset) + y[col],
                ColumnMap::Mirrored { col, offset } => T::lit(offset) - y[col],
                ColumnMap::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }
}

struct Tableau<'o, T> {
    rows: usize,
    cols: usize,
    /// `B^-1 A`, row-major.
    t: Vec<T>,
    /// Reduced costs of the current phase objective (maximization).
    reduced: Vec<T>,
    upper: Vec<T>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    at_upper: Vec<bool>,
    values: Vec<T>,
    artificial_start: usize,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    opts: &'o SimplexOptions<T>,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl<'o, T: Scalar> Tableau<'o, T> {
    fn new(std: &StandardForm<T>, opts: &'o SimplexOptions<T>) -> Self {
        let mut row_of = vec![usize::MAX; std.cols];
        for (i, &b) in std.basis.iter().enumerate() {
            row_of[b] = i;
        }
        Self {
            rows: std.rows,
            cols: std.cols,
            t: std.a.clone(),
            reduced: vec![T::zero(); std.cols],
            upper: std.upper.clone(),
            basis: std.basis.clone(),
            row_of,
            at_upper: vec![false; std.cols],
            values: std.rhs.clone(),
            artificial_start: std.artificial_start,
            enterable: vec![true; std.cols],
            opts,
            iterations: 0,
        }
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.artificial_start
    }

    fn price(&mut self, cost: &[T]) {
        self.reduced.copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.t[i * self.cols..(i + 1) * self.cols];
            for (d, &a) in self.reduced.iter_mut().zip(row) {
                *d -= cb * a;
            }
        }
        for &b in &self.basis {
            self.reduced[b] = T::zero();
        }
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        let cost: Vec<T> = (0..self.cols)
            .map(|j| if self.is_artificial(j) { -T::one() } else { T::zero() })
            .collect();
        self.price(&cost);
        self.run().map(|_| ())
    }

    fn artificial_sum(&self) -> T {
        self.basis
            .iter()
            .zip(&self.values)
            .filter(|(&b, _)| self.is_artificial(b))
            .fold(T::zero(), |acc, (_, &v)| acc + v.max(T::zero()))
    }

    /// Pivots zero-level artificials out of the basis and pins all artificials to 0.
    fn expel_artificials(&mut self) {
        for r in 0..self.rows {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row = &self.t[r * self.cols..(r + 1) * self.cols];
            let candidate = (0..self.artificial_start)
                .filter(|&j| self.row_of[j] == usize::MAX)
                .map(|j| (j, row[j].abs()))
                .filter(|&(_, a)| a > self.opts.pivot_tol.sqrt())
                .fold(None, |best: Option<(usize, T)>, c| match best {
                    Some(b) if b.1 >= c.1 => Some(b),
                    _ => Some(c),
                });
            if let Some((j, _)) = candidate {
                let entering_value = if self.at_upper[j] { self.upper[j] } else { T::zero() };
                self.pivot(r, j);
                self.values[r] = entering_value;
            }
        }
        for j in self.artificial_start..self.cols {
            self.upper[j] = T::zero();
            self.enterable[j] = false;
            self.at_upper[j] = false;
        }
    }

    fn phase_two(&mut self, cost: &[T]) -> Result<LpStatus, LpError> {
        self.price(cost);
        self.run()
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        let mut stalled = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::IterationLimit(self.opts.max_iterations));
            }
            let bland = stalled >= self.opts.stall_limit;
            match self.step(bland, &mut stalled)? {
                Step::Optimal => return Ok(LpStatus::Optimal),
                Step::Unbounded => return Ok(LpStatus::Unbounded),
                Step::Moved => self.iterations += 1,
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.cols {
            if !self.enterable[j] || self.row_of[j] != usize::MAX {
                continue;
            }
            let d = self.reduced[j];
            let gain = if self.at_upper[j] { -d } else { d };
            if gain <= tol {
                continue;
            }
            if self.upper[j] == T::zero() {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        best.map(|(j, _)| j)
    }

    fn step(&mut self, bland: bool, stalled: &mut usize) -> Result<Step, LpError> {
        let Some(q) = self.choose_entering(bland) else {
            return Ok(Step::Optimal);
        };
        // dir = +1 when increasing from the lower bound, -1 when leaving the upper bound.
        let dir = if self.at_upper[q] { -T::one() } else { T::one() };
        let ftol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;

        // (row, basic leaves at its upper bound, |pivot|, step length)
        let mut leave: Option<(usize, bool, T, T)> = None;
        for i in 0..self.rows {
            let a = self.t[i * self.cols + q];
            if a.abs() <= ptol {
                continue;
            }
            let rate = -dir * a;
            let b = self.basis[i];
            let value = self.values[i];
            let (ratio, hits_upper) = if rate < T::zero() {
                (value.max(T::zero()) / -rate, false)
            } else if self.upper[b].is_finite() {
                ((self.upper[b] - value).max(T::zero()) / rate, true)
            } else {
                continue;
            };
            let take = match leave {
                None => true,
                Some((r, _, piv, best)) => {
                    if ratio < best - ftol {
                        true
                    } else if ratio <= best + ftol {
                        if bland {
                            b < self.basis[r]
                        } else {
                            a.abs() > piv
                        }
                    } else {
                        false
                    }
                }
            };
            if take {
                leave = Some((i, hits_upper, a.abs(), ratio));
            }
        }

        let flip = self.upper[q];
        let (length, pivot_row) = match leave {
            Some((r, hits_upper, _, ratio)) if ratio < flip => (ratio, Some((r, hits_upper))),
            _ if flip.is_finite() => (flip, None),
            _ => return Ok(Step::Unbounded),
        };
        if length <= ftol {
            *stalled += 1;
        } else {
            *stalled = 0;
        }

        for i in 0..self.rows {
            let a = self.t[i * self.cols + q];
            if a != T::zero() {
                self.values[i] -= dir * a * length;
            }
        }

        match pivot_row {
            Some((r, hits_upper)) => {
                let entering_value = if self.at_upper[q] {
                    self.upper[q] - length
                } else {
                    length
                };
                let out = self.basis[r];
                self.pivot(r, q);
                self.values[r] = entering_value;
                self.at_upper[out] = hits_upper;
            }
            None => self.at_upper[q] = !self.at_upper[q],
        }
        Ok(Step::Moved)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + q];
        let inv = T::one() / piv;
        for v in self.t[r * cols..(r + 1) * cols].iter_mut() {
            *v *= inv;
        }
        let pivot_row: Vec<T> = self.t[r * cols..(r + 1) * cols].to_vec();
        let nz: Vec<usize> = (0..cols).filter(|&j| pivot_row[j] != T::zero()).collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + q];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[q] = T::zero();
        }
        let f = self.reduced[q];
        if f != T::zero() {
            for &j in &nz {
                self.reduced[j] -= f * pivot_row[j];
            }
            self.reduced[q] = T::zero();
        }
        let out = self.basis[r];
        self.row_of[out] = usize::MAX;
        self.row_of[q] = r;
        self.basis[r] = q;
        self.at_upper[q] = false;
    }

    fn values(&self) -> Vec<T> {
        let mut y: Vec<T> = (0..self.cols)
            .map(|j| if self.at_upper[j] { self.upper[j] } else { T::zero() })
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.values[i];
        }
        y
    }
}
