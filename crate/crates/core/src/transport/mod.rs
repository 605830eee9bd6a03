//! Exact `p`-Wasserstein distances.

mod discretize;
mod dual;
mod flow;
mod one_dim;

pub use discretize::{default_discretization_level, discretization_bias, discretize_uniform, MAX_DISCRETIZATION_CELLS};
pub use dual::{w1_dual_gap_check, w1_lower_bound_semidiscrete, w1_lower_bound_vs_uniform};
pub use one_dim::{wasserstein_1d, wasserstein_1d_cost};

use std::io::Write;

use crate::error::{domain, Error, Result};
use crate::measures::{DiscreteMeasure, Norm};

/// Default cap on `n_μ + n_ν` for the exact solver.
pub const DEFAULT_SUPPORT_CAP: usize = 1024;

/// Tolerance on the marginals of a plan.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Tolerance on reduced costs in the optimality certificate.
pub const REDUCED_COST_TOL: f64 = 1e-9;

/// One edge of a transport plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flow {
    /// Atom index in `μ`.
    pub i: usize,
    /// Atom index in `ν`.
    pub j: usize,
    pub mass: f64,
    /// `|x_i − y_j|^p`.
    pub unit_cost: f64,
}

/// A coupling between two discrete measures.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub p: f64,
    pub norm: Norm,
    /// Atoms of `μ` with positive weight, in the order used by the solver.
    pub row_map: Vec<usize>,
    /// Atoms of `ν` with positive weight, in the order used by the solver.
    pub col_map: Vec<usize>,
    pub flows: Vec<Flow>,
    /// `Σ mass · |x_i − y_j|^p`.
    pub cost_p: f64,
}

impl TransportPlan {
    pub fn recompute_cost(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        self.flows
            .iter()
            .map(|f| f.mass * self.norm.distance(mu.point(f.i), nu.point(f.j)).powf(self.p))
            .sum()
    }

    /// Checks positivity, both marginals and the stored cost.
    pub fn validate(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
        if let Some(f) = self.flows.iter().find(|f| !(f.mass > 0.0)) {
            return Err(Error::InvalidMeasure(format!("non-positive flow on ({}, {})", f.i, f.j)));
        }
        let mut rows = vec![0.0; mu.len()];
        let mut cols = vec![0.0; nu.len()];
        for f in &self.flows {
            rows[f.i] += f.mass;
            cols[f.j] += f.mass;
        }
        for (k, (got, want)) in rows.iter().zip(mu.weights()).enumerate() {
            if (got - want).abs() > MARGINAL_TOL {
                return Err(Error::InvalidMeasure(format!("row {k} carries {got}, expected {want}")));
            }
        }
        for (k, (got, want)) in cols.iter().zip(nu.weights()).enumerate() {
            if (got - want).abs() > MARGINAL_TOL {
                return Err(Error::InvalidMeasure(format!("column {k} carries {got}, expected {want}")));
            }
        }
        let again = self.recompute_cost(mu, nu);
        if (again - self.cost_p).abs() > MARGINAL_TOL * again.abs().max(1.0) {
            return Err(Error::InvalidMeasure(format!("stored cost {} vs recomputed {again}", self.cost_p)));
        }
        Ok(())
    }

    /// CSV dump with header `i,j,mass,cost_contrib`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "mass", "cost_contrib"])?;
        for f in &self.flows {
            out.write_record([
                f.i.to_string(),
                f.j.to_string(),
                format!("{:?}", f.mass),
                format!("{:?}", f.mass * f.unit_cost),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Kantorovich potentials: `f_i + g_j ≤ |x_i − y_j|^p`, with equality on the plan's support.
#[derive(Clone, Debug, PartialEq)]
pub struct Potentials {
    /// One value per atom of `μ`.
    pub f: Vec<f64>,
    /// One value per atom of `ν`.
    pub g: Vec<f64>,
}

/// Output of [`solve_exact`].
#[derive(Clone, Debug)]
pub struct ExactSolution {
    /// `W_p = cost_p^{1/p}`.
    pub value: f64,
    pub plan: TransportPlan,
    pub potentials: Potentials,
    /// Largest violation of the optimality conditions: a negative reduced cost
    /// on any edge, or a positive one on an edge carrying flow.
    pub certificate_violation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransportOptions {
    pub support_cap: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { support_cap: DEFAULT_SUPPORT_CAP }
    }
}

/// Exact `W_p` between discrete measures and an optimal plan.
pub fn wasserstein_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    norm: Norm,
) -> Result<(f64, TransportPlan)> {
    let sol = solve_exact(mu, nu, p, norm, &TransportOptions::default())?;
    Ok((sol.value, sol.plan))
}

pub fn solve_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    norm: Norm,
    opts: &TransportOptions,
) -> Result<ExactSolution> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { left: mu.dim(), right: nu.dim() });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return domain(format!("p must be >= 1, got {p}"));
    }
    let size = mu.len() + nu.len();
    if size > opts.support_cap {
        return Err(Error::SupportTooLarge { size, cap: opts.support_cap });
    }
    let row_map: Vec<usize> = (0..mu.len()).filter(|&i| mu.weight(i) > 0.0).collect();
    let col_map: Vec<usize> = (0..nu.len()).filter(|&j| nu.weight(j) > 0.0).collect();
    let unit = |i: usize, j: usize| norm.distance(mu.point(i), nu.point(j)).powf(p);
    let (n, m) = (row_map.len(), col_map.len());
    let cost: Vec<f64> = row_map
        .iter()
        .flat_map(|&i| col_map.iter().map(move |&j| unit(i, j)))
        .collect();
    let a: Vec<f64> = row_map.iter().map(|&i| mu.weight(i)).collect();
    let b: Vec<f64> = col_map.iter().map(|&j| nu.weight(j)).collect();
    let sol = flow::transport_ssp(&a, &b, &cost);

    let mut flows = Vec::new();
    for (r, &i) in row_map.iter().enumerate() {
        for (c, &j) in col_map.iter().enumerate() {
            let mass = sol.flow[r * m + c];
            if mass > 0.0 {
                flows.push(Flow { i, j, mass, unit_cost: cost[r * m + c] });
            }
        }
    }
    let cost_p: f64 = flows.iter().map(|f| f.mass * f.unit_cost).sum();

    let mut violation = 0.0_f64;
    for r in 0..n {
        for c in 0..m {
            let rc = cost[r * m + c] + sol.pi_rows[r] - sol.pi_cols[c];
            violation = violation.max(-rc);
            if sol.flow[r * m + c] > 0.0 {
                violation = violation.max(rc);
            }
        }
    }

    // f_i = −π_i, g_j = π_j; zero-weight atoms get their c-transform values
    let mut g = vec![f64::NAN; nu.len()];
    for (c, &j) in col_map.iter().enumerate() {
        g[j] = sol.pi_cols[c];
    }
    let mut f = vec![f64::NAN; mu.len()];
    for (r, &i) in row_map.iter().enumerate() {
        f[i] = -sol.pi_rows[r];
    }
    for i in 0..mu.len() {
        if f[i].is_nan() {
            f[i] = col_map.iter().map(|&j| unit(i, j) - g[j]).fold(f64::INFINITY, f64::min);
        }
    }
    for j in 0..nu.len() {
        if g[j].is_nan() {
            g[j] = (0..mu.len()).map(|i| unit(i, j) - f[i]).fold(f64::INFINITY, f64::min);
        }
    }

    let plan = TransportPlan { p, norm, row_map, col_map, flows, cost_p };
    Ok(ExactSolution {
        value: cost_p.max(0.0).powf(1.0 / p),
        plan,
        potentials: Potentials { f, g },
        certificate_violation: violation,
    })
}
