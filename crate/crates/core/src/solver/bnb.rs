//! Branch-and-bound over the serving AN of each UE.
//!
//! A node fixes the serving AN of some UEs, which fixes the corresponding `a`
//! block of the model (one GUB branch per assignment row). Every node carries a
//! bound from the fixed part of the association: fixed UEs see the interference
//! of every AN that is already active, and a free UE is granted its best link
//! with one more UE on that AN and no further interference. At the root (or at
//! every node, see [`LpUsage`]) the LP relaxation of the model under the same
//! fixings tightens that bound and feeds the rounding heuristic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::milp::MilpModel;
use crate::sinr::{baseline_association, Association};
use crate::SinrEvaluator;

use super::relax::{solve_relaxation, RelaxOptions, RelaxStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSelection {
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branching {
    /// UE whose `a` row is furthest from integral in the node LP; without an LP
    /// at the node, the free UE with the smallest bound.
    MostFractional,
    LowestIndex,
}

/// Where the LP relaxation is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpUsage {
    Never,
    Root,
    EveryNode,
}

#[derive(Debug, Clone)]
pub struct BnBConfig {
    pub integrality_tol: f64,
    /// Relative optimality gap used for pruning.
    pub gap: f64,
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
    pub node_selection: NodeSelection,
    pub branching: Branching,
    pub lp: LpUsage,
    /// Hill-climb every new incumbent with single-UE and whole-AN moves.
    pub local_search: bool,
    /// Progress line every this many nodes; 0 disables.
    pub log_every: u64,
    /// Allowed violation of the lifted incumbent against the model rows.
    pub lift_tol: f64,
}

impl Default for BnBConfig {
    fn default() -> Self {
        Self {
            integrality_tol: 1e-6,
            gap: 1e-9,
            node_limit: 10_000_000,
            time_limit: None,
            node_selection: NodeSelection::BestBound,
            branching: Branching::MostFractional,
            lp: LpUsage::Root,
            local_search: true,
            log_every: 100_000,
            lift_tol: 1e-6,
        }
    }
}

impl BnBConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("integrality tolerance", self.integrality_tol)?;
        positive("optimality gap", self.gap)?;
        positive("lift tolerance", self.lift_tol)?;
        if self.node_limit == 0 {
            return Err(Error::InvalidConfig("node limit must be positive".into()));
        }
        if self.time_limit.is_some_and(|t| t.is_zero()) {
            return Err(Error::InvalidConfig("time limit must be positive".into()));
        }
        Ok(())
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    /// `bound` cannot beat `incumbent` by more than the gap.
    fn dominated(&self, bound: f64, incumbent: f64) -> bool {
        bound <= incumbent + self.gap * (1.0 + incumbent.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Node or time limit reached; the incumbent and bound are still valid.
    FeasibleLimitHit,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleLimitHit => "feasible_limit_hit",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressPoint {
    pub nodes: u64,
    pub best_bound: f64,
    pub incumbent: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Exact minimum SINR of the incumbent; `-inf` when none exists.
    pub theta_star: f64,
    pub incumbent: Option<Association>,
    pub best_bound: f64,
    /// Root LP relaxation value, when it was solved to optimality.
    pub root_lp_bound: Option<f64>,
    pub nodes_explored: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
    /// Snapshot at the root, on every incumbent change, every `log_every`
    /// nodes and at the end.
    pub trace: Vec<ProgressPoint>,
}

impl SolveResult {
    /// `(best_bound - theta_star) / (1 + |theta_star|)`, never negative.
    pub fn relative_gap(&self) -> f64 {
        if self.incumbent.is_none() {
            return f64::INFINITY;
        }
        ((self.best_bound - self.theta_star) / (1.0 + self.theta_star.abs())).max(0.0)
    }

    pub const CSV_HEADER: &'static str =
        "status,theta_star,best_bound,gap,nodes_explored,lp_iterations,wall_seconds,serving";

    pub fn to_csv_row(&self) -> String {
        let serving = self
            .incumbent
            .as_ref()
            .map(|a| {
                a.serving_an()
                    .iter()
                    .map(|m| m.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.status.as_str(),
            sig6(self.theta_star),
            sig6(self.best_bound),
            sig6(self.relative_gap()),
            self.nodes_explored,
            self.lp_iterations,
            sig6(self.wall_time.as_secs_f64()),
            serving
        )
    }
}

const FREE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Node {
    serving: Vec<usize>,
    depth: usize,
    bound: f64,
    seq: u64,
}

/// Heap order: larger bound, then deeper, then older.
struct Ranked(Node);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .bound
            .total_cmp(&other.0.bound)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.seq.cmp(&self.0.seq))
    }
}

enum Frontier {
    Best(BinaryHeap<Ranked>),
    Depth(Vec<Node>),
}

impl Frontier {
    fn push(&mut self, node: Node) {
        match self {
            Frontier::Best(h) => h.push(Ranked(node)),
            Frontier::Depth(s) => s.push(node),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Best(h) => h.pop().map(|r| r.0),
            Frontier::Depth(s) => s.pop(),
        }
    }

    fn max_bound(&self) -> f64 {
        match self {
            Frontier::Best(h) => h.peek().map_or(f64::NEG_INFINITY, |r| r.0.bound),
            Frontier::Depth(s) => s.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Bounds and completions of partial serving vectors.
struct Partial<'a> {
    eval: &'a SinrEvaluator,
    loads: Vec<usize>,
    active: Vec<bool>,
    /// Received power from every active AN, per UE.
    heard: Vec<f64>,
}

impl<'a> Partial<'a> {
    fn new(eval: &'a SinrEvaluator) -> Self {
        Self {
            eval,
            loads: vec![0; eval.num_ans()],
            active: vec![false; eval.num_ans()],
            heard: vec![0.0; eval.num_ues()],
        }
    }

    fn load(&mut self, serving: &[usize]) {
        self.loads.iter_mut().for_each(|s| *s = 0);
        for &m in serving.iter().filter(|&&m| m != FREE) {
            self.loads[m] += 1;
        }
        for (a, &s) in self.active.iter_mut().zip(&self.loads) {
            *a = s > 0;
        }
        for k in 0..self.eval.num_ues() {
            self.heard[k] = (0..self.eval.num_ans())
                .filter(|&j| self.active[j])
                .map(|j| self.eval.received(k, j))
                .sum();
        }
    }

    /// Bound on UE `k` served by `m` once `m` has `load` UEs.
    fn option(&self, k: usize, m: usize, load: usize) -> Option<f64> {
        let factor = self.eval.factor(load)?;
        let pg = self.eval.received(k, m);
        let own = if self.active[m] { pg } else { 0.0 };
        Some(factor * pg / (1.0 + (self.heard[k] - own).max(0.0)))
    }

    /// Best option of a free UE: `(value, an)`, lowest AN on ties.
    fn best_option(&self, k: usize) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for m in 0..self.eval.num_ans() {
            if let Some(v) = self.option(k, m, self.loads[m] + 1) {
                if best.map_or(true, |(b, _)| v > b) {
                    best = Some((v, m));
                }
            }
        }
        best
    }

    /// Node bound plus the free UE with the smallest best option.
    fn bound(&mut self, serving: &[usize]) -> (f64, Option<usize>) {
        self.load(serving);
        let mut bound = f64::INFINITY;
        let mut tightest: Option<(f64, usize)> = None;
        for (k, &m) in serving.iter().enumerate() {
            let v = if m == FREE {
                let v = self.best_option(k).map_or(f64::NEG_INFINITY, |(v, _)| v);
                if tightest.map_or(true, |(t, _)| v < t) {
                    tightest = Some((v, k));
                }
                v
            } else {
                self.option(k, m, self.loads[m]).unwrap_or(f64::NEG_INFINITY)
            };
            bound = bound.min(v);
        }
        (bound, tightest.map(|(_, k)| k))
    }

    /// Greedy completion: free UEs in index order join their best option.
    fn complete(&mut self, serving: &[usize]) -> Option<Vec<usize>> {
        let mut out = serving.to_vec();
        self.load(&out);
        for k in 0..out.len() {
            if out[k] != FREE {
                continue;
            }
            let (_, m) = self.best_option(k)?;
            out[k] = m;
            self.loads[m] += 1;
            if !self.active[m] {
                self.active[m] = true;
                for (u, h) in self.heard.iter_mut().enumerate() {
                    *h += self.eval.received(u, m);
                }
            }
        }
        Some(out)
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    config: &'a BnBConfig,
    eval: SinrEvaluator,
    start: Instant,
    incumbent: Option<(f64, Vec<usize>)>,
    best_bound: f64,
    nodes: u64,
    lp_iterations: u64,
    trace: Vec<ProgressPoint>,
    scratch_loads: Vec<usize>,
    scratch_active: Vec<bool>,
}

impl<'a> Search<'a> {
    fn incumbent_value(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| *v)
    }

    fn evaluate(&mut self, serving: &[usize]) -> Option<f64> {
        self.eval
            .min_sinr(serving, &mut self.scratch_loads, &mut self.scratch_active)
    }

    fn record(&mut self) {
        let point = ProgressPoint {
            nodes: self.nodes,
            best_bound: self.best_bound,
            incumbent: self.incumbent_value(),
            seconds: self.start.elapsed().as_secs_f64(),
        };
        self.trace.push(point);
    }

    /// Offers a complete serving vector; keeps it if strictly better.
    fn offer(&mut self, serving: Vec<usize>) -> Result<()> {
        let Some(mut value) = self.evaluate(&serving) else {
            return Ok(());
        };
        if value <= self.incumbent_value() {
            return Ok(());
        }
        let mut serving = serving;
        if self.config.local_search {
            (value, serving) = self.polish(value, serving);
        }
        let association = Association::new(serving.clone(), self.eval.num_ans())?;
        let x = self.model.lift(&association)?;
        let (violation, row) = self.model.max_violation(&x);
        if violation > self.config.lift_tol {
            return Err(Error::InconsistentIncumbent(format!(
                "row {} violated by {violation:e}",
                row.unwrap_or_default()
            )));
        }
        log::debug!("incumbent {} at node {}", sig6(value), self.nodes);
        self.incumbent = Some((value, serving));
        self.record();
        Ok(())
    }

    /// First-improvement hill climbing over single-UE moves and whole-AN merges.
    fn polish(&mut self, mut value: f64, mut serving: Vec<usize>) -> (f64, Vec<usize>) {
        let (k_count, m_count) = (self.eval.num_ues(), self.eval.num_ans());
        loop {
            let mut improved = false;
            for k in 0..k_count {
                let from = serving[k];
                for m in (0..m_count).filter(|&m| m != from) {
                    serving[k] = m;
                    match self.evaluate(&serving) {
                        Some(v) if v > value => {
                            value = v;
                            improved = true;
                            break;
                        }
                        _ => serving[k] = from,
                    }
                }
            }
            for from in 0..m_count {
                for to in (0..m_count).filter(|&to| to != from) {
                    if !serving.contains(&from) {
                        break;
                    }
                    let moved: Vec<usize> = serving.iter().map(|&m| if m == from { to } else { m }).collect();
                    if let Some(v) = self.evaluate(&moved) {
                        if v > value {
                            value = v;
                            serving = moved;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                return (value, serving);
            }
        }
    }

    fn limit_hit(&self) -> bool {
        self.nodes >= self.config.node_limit || self.config.time_limit.is_some_and(|t| self.start.elapsed() >= t)
    }

    /// Fixes the `a` block of the model to the node's partial serving vector.
    fn node_bounds(&self, serving: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let c = &self.model.catalog;
        let mut lower = self.model.lower.clone();
        let mut upper = self.model.upper.clone();
        for (k, &m) in serving.iter().enumerate() {
            if m == FREE {
                continue;
            }
            for j in 0..c.num_ans() {
                let v = if j == m { 1.0 } else { 0.0 };
                lower[c.alpha(k, j)] = v;
                upper[c.alpha(k, j)] = v;
            }
        }
        (lower, upper)
    }

    /// LP bound at a node; `None` when the node is infeasible or cut off.
    /// Returns the bound and the `a` block of the LP point.
    fn node_lp(&mut self, serving: &[usize]) -> Result<Option<(f64, Vec<f64>, bool)>> {
        let (lower, upper) = self.node_bounds(serving);
        let cutoff = self
            .incumbent
            .as_ref()
            .map(|(v, _)| v + self.config.gap * (1.0 + v.abs()));
        let opts = RelaxOptions {
            cutoff,
            ..RelaxOptions::default()
        };
        let relax = solve_relaxation(self.model, &lower, &upper, &opts)?;
        self.lp_iterations += relax.lp_iterations as u64;
        match relax.status {
            RelaxStatus::Infeasible => Ok(None),
            RelaxStatus::CutOff if cutoff.is_some_and(|c| relax.bound <= c) => Ok(None),
            status => {
                let c = &self.model.catalog;
                let alpha: Vec<f64> = (0..c.num_ues() * c.num_ans())
                    .map(|i| relax.x[c.alpha(i / c.num_ans(), i % c.num_ans())])
                    .collect();
                Ok(Some((relax.bound, alpha, status == RelaxStatus::Optimal)))
            }
        }
    }

    /// Row-argmax of the LP `a` block, lowest AN on ties.
    fn round(&self, alpha: &[f64], serving: &[usize]) -> Vec<usize> {
        let m_count = self.eval.num_ans();
        serving
            .iter()
            .enumerate()
            .map(|(k, &fixed)| {
                if fixed != FREE {
                    return fixed;
                }
                let row = &alpha[k * m_count..(k + 1) * m_count];
                let mut best = 0;
                for m in 1..m_count {
                    if row[m] > row[best] {
                        best = m;
                    }
                }
                best
            })
            .collect()
    }

    fn most_fractional(&self, alpha: &[f64], serving: &[usize]) -> Option<usize> {
        let m_count = self.eval.num_ans();
        let mut best: Option<(f64, usize)> = None;
        for k in (0..serving.len()).filter(|&k| serving[k] == FREE) {
            let row = &alpha[k * m_count..(k + 1) * m_count];
            let frac = 1.0 - row.iter().copied().fold(0.0, f64::max);
            if frac > self.config.integrality_tol && best.map_or(true, |(b, _)| frac > b) {
                best = Some((frac, k));
            }
        }
        best.map(|(_, k)| k)
    }
}

/// Solves the model to global optimality, or to the configured limits.
pub fn solve_milp(model: &MilpModel, config: &BnBConfig) -> Result<SolveResult> {
    config.validate()?;
    if model.catalog.num_ues() == 0 || model.catalog.num_ans() == 0 {
        return Err(Error::InvalidConfig("model needs at least one UE and one AN".into()));
    }
    let eval = SinrEvaluator::new(&model.gains, model.antennas, model.power);
    let (k_count, m_count) = (eval.num_ues(), eval.num_ans());
    let mut search = Search {
        model,
        config,
        eval,
        start: Instant::now(),
        incumbent: None,
        best_bound: f64::INFINITY,
        nodes: 0,
        lp_iterations: 0,
        trace: Vec::new(),
        scratch_loads: vec![0; m_count],
        scratch_active: vec![false; m_count],
    };
    let eval = search.eval.clone();
    let mut partial = Partial::new(&eval);

    // Warm start from the strongest-link association.
    let baseline = baseline_association(&model.gains);
    search.offer(baseline.serving_an().to_vec())?;

    let root_serving = vec![FREE; k_count];
    let (root_bound, _) = partial.bound(&root_serving);
    if let Some(done) = partial.complete(&root_serving) {
        search.offer(done)?;
    }
    search.best_bound = root_bound.max(search.incumbent_value());
    search.record();

    let mut root_lp_bound = None;
    let mut frontier = match config.node_selection {
        NodeSelection::BestBound => Frontier::Best(BinaryHeap::new()),
        NodeSelection::DepthFirst => Frontier::Depth(Vec::new()),
    };
    let mut seq = 0u64;
    if root_bound > f64::NEG_INFINITY {
        frontier.push(Node {
            serving: root_serving,
            depth: 0,
            bound: root_bound,
            seq,
        });
    }

    let mut limit_hit = false;
    while let Some(node) = frontier.pop() {
        if search.limit_hit() {
            frontier.push(node);
            limit_hit = true;
            break;
        }
        search.nodes += 1;
        let incumbent = search.incumbent_value();
        if config.dominated(node.bound, incumbent) {
            if config.node_selection == NodeSelection::BestBound {
                // Every open node is dominated as well.
                frontier = Frontier::Depth(Vec::new());
                break;
            }
            continue;
        }

        let (mut bound, tightest) = partial.bound(&node.serving);
        bound = bound.min(node.bound);
        let mut lp_alpha = None;
        let use_lp = match config.lp {
            LpUsage::Never => false,
            LpUsage::Root => node.depth == 0,
            LpUsage::EveryNode => true,
        };
        if use_lp {
            match search.node_lp(&node.serving)? {
                None => continue,
                Some((lp_bound, alpha, exact)) => {
                    if node.depth == 0 && exact {
                        root_lp_bound = Some(lp_bound);
                    }
                    bound = bound.min(lp_bound);
                    let rounded = search.round(&alpha, &node.serving);
                    search.offer(rounded)?;
                    lp_alpha = Some(alpha);
                }
            }
        }
        if config.dominated(bound, search.incumbent_value()) {
            continue;
        }

        if node.depth == k_count {
            // Complete vector: the bound is its exact value.
            search.offer(node.serving.clone())?;
            continue;
        }
        if node.depth > 0 {
            if let Some(done) = partial.complete(&node.serving) {
                search.offer(done)?;
            }
        }

        let branch_ue = match config.branching {
            Branching::LowestIndex => node.serving.iter().position(|&m| m == FREE),
            Branching::MostFractional => lp_alpha
                .as_ref()
                .and_then(|a| search.most_fractional(a, &node.serving))
                .or(tightest),
        }
        .expect("incomplete node has a free UE");

        let mut children = Vec::with_capacity(m_count);
        for m in 0..m_count {
            let mut serving = node.serving.clone();
            serving[branch_ue] = m;
            let (child_bound, _) = partial.bound(&serving);
            let child_bound = child_bound.min(bound);
            if child_bound == f64::NEG_INFINITY || config.dominated(child_bound, search.incumbent_value()) {
                continue;
            }
            children.push((child_bound, m, serving));
        }
        // Depth-first pops the last pushed: push the most promising last.
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        for (child_bound, _, serving) in children {
            seq += 1;
            frontier.push(Node {
                serving,
                depth: node.depth + 1,
                bound: child_bound,
                seq,
            });
        }

        if config.node_selection == NodeSelection::BestBound {
            let open = frontier.max_bound().max(search.incumbent_value());
            search.best_bound = search.best_bound.min(open);
        }
        if config.log_every > 0 && search.nodes % config.log_every == 0 {
            search.best_bound = search
                .best_bound
                .min(frontier.max_bound().max(search.incumbent_value()));
            search.record();
            log::info!(
                "nodes {} bound {} incumbent {} open {}",
                search.nodes,
                sig6(search.best_bound),
                sig6(search.incumbent_value()),
                match &frontier {
                    Frontier::Best(h) => h.len(),
                    Frontier::Depth(s) => s.len(),
                }
            );
        }
    }

    let theta_star = search.incumbent_value();
    let status = match (&search.incumbent, limit_hit) {
        (None, false) => SolveStatus::Infeasible,
        (_, true) => SolveStatus::FeasibleLimitHit,
        (Some(_), false) => SolveStatus::Optimal,
    };
    search.best_bound = match status {
        SolveStatus::Optimal => theta_star,
        SolveStatus::Infeasible => f64::NEG_INFINITY,
        SolveStatus::FeasibleLimitHit => search.best_bound.min(frontier.max_bound().max(theta_star)),
    };
    search.record();

    let incumbent = match search.incumbent.take() {
        Some((_, serving)) => Some(Association::new(serving, m_count)?),
        None => None,
    };
    if status == SolveStatus::Infeasible {
        log::info!("no feasible association: {k_count} UEs exceed the capacity of {m_count} ANs");
    }
    Ok(SolveResult {
        status,
        theta_star,
        incumbent,
        best_bound: search.best_bound,
        root_lp_bound,
        nodes_explored: search.nodes,
        lp_iterations: search.lp_iterations,
        wall_time: search.start.elapsed(),
        trace: search.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{build_milp, choose_big_m};
    use crate::sinr::evaluate;
    use crate::solver::brute::brute_force_maxmin;
    use crate::PathGainMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gains(rng: &mut ChaCha8Rng, k: usize, m: usize) -> PathGainMatrix {
        let g = (0..k * m).map(|_| 10f64.powf(rng.gen_range(-2.0..1.0))).collect();
        PathGainMatrix::from_row_major(k, m, g).unwrap()
    }

    fn model(g: &PathGainMatrix, l: usize, p: f64) -> MilpModel {
        build_milp(g, l, p, choose_big_m(g, l, p)).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * (1.0 + b.abs())
    }

    #[test]
    fn single_link_is_solved_at_the_root() {
        let g = PathGainMatrix::from_rows(&[vec![2.5]]).unwrap();
        let r = solve_milp(&model(&g, 16, 3.0), &BnBConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(close(r.theta_star, 16.0 * 3.0 * 2.5));
        assert_eq!(r.nodes_explored, 1);
        assert_eq!(r.incumbent.unwrap().serving_an(), &[0]);
    }

    #[test]
    fn worked_example_optimum() {
        let g = PathGainMatrix::from_rows(&[vec![10.0, 1.0], vec![2.0, 8.0]]).unwrap();
        let r = solve_milp(&model(&g, 100, 1.0), &BnBConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(close(r.theta_star, 800.0 / 3.0));
        assert_eq!(r.incumbent.unwrap().serving_an(), &[0, 1]);
    }

    #[test]
    fn matches_enumeration_under_every_strategy() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let strategies = [
            (NodeSelection::BestBound, Branching::MostFractional, LpUsage::Root),
            (NodeSelection::BestBound, Branching::MostFractional, LpUsage::EveryNode),
            (NodeSelection::DepthFirst, Branching::LowestIndex, LpUsage::Never),
            (NodeSelection::BestBound, Branching::LowestIndex, LpUsage::Never),
        ];
        for _ in 0..8 {
            let g = random_gains(&mut rng, 4, 3);
            let brute = brute_force_maxmin(&g, 64, 1.0).unwrap();
            let mdl = model(&g, 64, 1.0);
            for (node_selection, branching, lp) in strategies {
                for local_search in [true, false] {
                    let cfg = BnBConfig {
                        node_selection,
                        branching,
                        lp,
                        local_search,
                        ..BnBConfig::default()
                    };
                    let r = solve_milp(&mdl, &cfg).unwrap();
                    assert_eq!(r.status, SolveStatus::Optimal);
                    assert!(
                        (r.theta_star - brute.theta_star).abs() <= 1e-6 * (1.0 + brute.theta_star),
                        "{:?}: {} vs {}",
                        (node_selection, branching, lp),
                        r.theta_star,
                        brute.theta_star
                    );
                }
            }
        }
    }

    #[test]
    fn incumbent_achieves_the_reported_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let g = random_gains(&mut rng, 5, 3);
            let r = solve_milp(&model(&g, 8, 0.5), &BnBConfig::default()).unwrap();
            let report = evaluate(r.incumbent.as_ref().unwrap(), &g, 8, 0.5).unwrap();
            assert!(report.min_sinr >= r.theta_star - 1e-6 * (1.0 + r.theta_star));
            assert!(r.theta_star <= r.best_bound + 1e-9 * (1.0 + r.best_bound));
            if let Some(lp) = r.root_lp_bound {
                assert!(lp >= r.theta_star - 1e-6 * (1.0 + r.theta_star));
            }
        }
    }

    #[test]
    fn trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = random_gains(&mut rng, 7, 4);
        let cfg = BnBConfig {
            log_every: 1,
            local_search: false,
            ..BnBConfig::default()
        };
        let r = solve_milp(&model(&g, 4, 1.0), &cfg).unwrap();
        for pair in r.trace.windows(2) {
            assert!(pair[1].best_bound <= pair[0].best_bound);
            assert!(pair[1].incumbent >= pair[0].incumbent);
        }
    }

    #[test]
    fn repeated_solves_are_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = random_gains(&mut rng, 6, 4);
        let mdl = model(&g, 16, 1.0);
        let a = solve_milp(&mdl, &BnBConfig::default()).unwrap();
        let b = solve_milp(&mdl, &BnBConfig::default()).unwrap();
        assert_eq!(a.theta_star.to_bits(), b.theta_star.to_bits());
        assert_eq!(a.nodes_explored, b.nodes_explored);
        assert_eq!(a.incumbent, b.incumbent);
    }

    #[test]
    fn node_limit_reports_a_valid_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = random_gains(&mut rng, 8, 4);
        let mdl = model(&g, 4, 1.0);
        let cfg = BnBConfig {
            node_limit: 2,
            local_search: false,
            lp: LpUsage::Never,
            ..BnBConfig::default()
        };
        let r = solve_milp(&mdl, &cfg).unwrap();
        let exact = brute_force_maxmin(&g, 4, 1.0).unwrap().theta_star;
        if r.status == SolveStatus::FeasibleLimitHit {
            assert!(r.best_bound >= exact - 1e-9 * (1.0 + exact));
            assert!(r.relative_gap() >= 0.0);
        } else {
            assert!(close(r.theta_star, exact));
        }
        assert!(r.nodes_explored <= 2);
        assert!(r.theta_star <= exact + 1e-9 * (1.0 + exact));
    }

    #[test]
    fn capacity_shortfall_is_infeasible() {
        let g = PathGainMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let r = solve_milp(&model(&g, 1, 1.0), &BnBConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.incumbent.is_none());
        assert!(r.to_csv_row().starts_with("infeasible,"));
    }

    #[test]
    fn rejects_bad_configuration() {
        let g = PathGainMatrix::from_rows(&[vec![1.0]]).unwrap();
        let cfg = BnBConfig {
            gap: 0.0,
            ..BnBConfig::default()
        };
        assert!(matches!(
            solve_milp(&model(&g, 1, 1.0), &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn csv_row_has_one_field_per_header_column() {
        let g = PathGainMatrix::from_rows(&[vec![10.0, 1.0], vec![2.0, 8.0]]).unwrap();
        let r = solve_milp(&model(&g, 100, 1.0), &BnBConfig::default()).unwrap();
        let row = r.to_csv_row();
        assert_eq!(row.split(',').count(), SolveResult::CSV_HEADER.split(',').count());
        assert!(row.starts_with("optimal,266.667,266.667,0,"), "{row}");
        assert!(row.ends_with(",0 1"));
    }
}
