//! Moving between associations and full model assignments.

use crate::error::{Error, Result};
use crate::sinr::{evaluate, Association};
use crate::PathGainMatrix;

use super::catalog::VarCatalog;
use super::model::MilpModel;

/// Full assignment of every model variable induced by an association.
///
/// `theta` is the association's minimum effective SINR, capped at `big_m`;
/// every auxiliary variable is the product it stands for.
pub fn lift_association(
    association: &Association,
    gains: &PathGainMatrix,
    antennas: usize,
    power: f64,
    big_m: f64,
) -> Result<Vec<f64>> {
    if let Some((an, load)) = association.overloaded(antennas) {
        return Err(Error::Overloaded {
            an,
            load,
            limit: antennas + 1,
        });
    }
    let report = evaluate(association, gains, antennas, power)?;
    let theta = report.min_sinr.max(0.0).min(big_m);

    let (k_count, m_count) = (gains.num_ues(), gains.num_ans());
    let c = VarCatalog::new(k_count, m_count);
    let mut x = vec![0.0; c.len()];
    let active = association.active();
    let alpha = |k: usize, m: usize| association.serving(k) == m;

    for k in 0..k_count {
        x[c.alpha(k, association.serving(k))] = 1.0;
    }
    for (m, &on) in active.iter().enumerate() {
        if on {
            x[c.rho(m)] = 1.0;
        }
    }
    for i in 0..k_count {
        let m = association.serving(i);
        for j in (0..m_count).filter(|&j| j != m && active[j]) {
            x[c.z(i, m, j)] = 1.0;
            for k in (0..k_count).filter(|&k| alpha(k, m)) {
                x[c.u(i, m, j, k)] = 1.0;
                x[c.n(i, m, j, k)] = theta;
            }
        }
        for k in (0..k_count).filter(|&k| alpha(k, m)) {
            x[c.v(i, m, k)] = 1.0;
            x[c.w(i, m, k)] = theta;
        }
    }
    x[c.theta()] = theta;
    Ok(x)
}

impl MilpModel {
    pub fn lift(&self, association: &Association) -> Result<Vec<f64>> {
        lift_association(association, &self.gains, self.antennas, self.power, self.big_m)
    }
}

/// Reads the serving AN of every UE from the `a` block of an integral solution.
pub fn extract_association(catalog: &VarCatalog, x: &[f64], tol: f64) -> Result<Association> {
    if x.len() != catalog.len() {
        return Err(Error::Dimension(format!(
            "solution has {} entries, model has {}",
            x.len(),
            catalog.len()
        )));
    }
    let mut serving = Vec::with_capacity(catalog.num_ues());
    for k in 0..catalog.num_ues() {
        let mut chosen = None;
        for m in 0..catalog.num_ans() {
            let a = x[catalog.alpha(k, m)];
            if a >= 1.0 - tol {
                if chosen.is_some() {
                    return Err(Error::NotIntegral(format!("UE {k} is served by several ANs")));
                }
                chosen = Some(m);
            } else if a > tol {
                return Err(Error::NotIntegral(format!("a_{k}_{m} = {a}")));
            }
        }
        match chosen {
            Some(m) => serving.push(m),
            None => return Err(Error::NotIntegral(format!("UE {k} has no serving AN"))),
        }
    }
    Association::new(serving, catalog.num_ans())
}
