use super::discretize::MAX_DISCRETIZATION_CELLS;
use super::{discretization_bias, Potentials, TransportPlan};
use crate::error::{domain, Error, Result};
use crate::measures::{DiscreteMeasure, Norm};

/// Tolerance on the primal–dual gap.
pub const DUAL_GAP_TOL: f64 = 1e-8;

/// Certifies a `W_1` plan with a 1-Lipschitz dual function.
///
/// From the column potentials `g` the c-transform `φ(z) = min_j (|z − y_j| − g_j)`
/// is formed. It is 1-Lipschitz for the plan's norm, so
/// `∫φ dμ − ∫φ dν ≤ W_1 ≤ cost(plan)`; the check passes when the plan is
/// feasible, `φ` is verified 1-Lipschitz on both supports, and the two ends
/// agree within `1e-8`.
pub fn w1_dual_gap_check(
    plan: &TransportPlan,
    potentials: &Potentials,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> bool {
    if plan.p != 1.0 || mu.dim() != nu.dim() || potentials.g.len() != nu.len() {
        return false;
    }
    if plan.validate(mu, nu).is_err() {
        return false;
    }
    let norm = plan.norm;
    let active: Vec<usize> = (0..nu.len()).filter(|&j| nu.weight(j) > 0.0).collect();
    if active.iter().any(|&j| !potentials.g[j].is_finite()) {
        return false;
    }
    let phi = |z: &[f64]| {
        active
            .iter()
            .map(|&j| norm.distance(z, nu.point(j)) - potentials.g[j])
            .fold(f64::INFINITY, f64::min)
    };
    let support: Vec<&[f64]> = mu.points().chain(nu.points()).collect();
    let values: Vec<f64> = support.iter().map(|z| phi(z)).collect();
    for a in 0..support.len() {
        for b in 0..a {
            let gap = (values[a] - values[b]).abs() - norm.distance(support[a], support[b]);
            if gap > 1e-12 * (1.0 + values[a].abs().max(values[b].abs())) {
                return false;
            }
        }
    }
    let (head, tail) = values.split_at(mu.len());
    let dual: f64 = head.iter().zip(mu.weights()).map(|(v, w)| v * w).sum::<f64>()
        - tail.iter().zip(nu.weights()).map(|(v, w)| v * w).sum::<f64>();
    let primal = plan.recompute_cost(mu, nu);
    (primal - dual).abs() <= DUAL_GAP_TOL * primal.max(1.0)
}

/// Rigorous lower bound on `W_1(μ, U)` with `U` uniform on `[0,1]^d`.
///
/// `anchors` and `g` are the second measure and its potentials from a `W_1`
/// solve against any discrete measure. The c-transform
/// `φ(z) = min_j (|z − y_j| − g_j)` is 1-Lipschitz whatever `g` is, so
/// `W_1(μ,U) ≥ ∫φ dμ − ∫φ dU`. The last integral is bounded above by its value
/// on the level-`fine_level` midpoint grid plus that grid's discretization bias.
pub fn w1_lower_bound_vs_uniform(
    mu: &DiscreteMeasure,
    anchors: &DiscreteMeasure,
    g: &[f64],
    norm: Norm,
    fine_level: u32,
) -> Result<f64> {
    let d = mu.dim();
    if anchors.dim() != d || g.len() != anchors.len() {
        return Err(Error::DimensionMismatch { left: d, right: anchors.dim() });
    }
    let cells = 1u128.checked_shl(d as u32 * fine_level).unwrap_or(u128::MAX);
    if cells > MAX_DISCRETIZATION_CELLS {
        return domain(format!("fine level {fine_level} too large in dimension {d}"));
    }
    let active: Vec<usize> = (0..anchors.len()).filter(|&j| anchors.weight(j) > 0.0 && g[j].is_finite()).collect();
    if active.is_empty() {
        return domain("no usable potential");
    }
    let phi = |z: &[f64]| {
        active
            .iter()
            .map(|&j| norm.distance(z, anchors.point(j)) - g[j])
            .fold(f64::INFINITY, f64::min)
    };
    let on_mu: f64 = mu.points().zip(mu.weights()).map(|(x, w)| w * phi(x)).sum();

    let mut on_grid = 0.0;
    for_each_midpoint(d, fine_level, |z| on_grid += phi(z));
    on_grid /= cells as f64;
    let bias = discretization_bias(d, fine_level, 1.0, norm)?;
    Ok(on_mu - on_grid - bias)
}

/// Midpoints of the level-`level` dyadic cells of `[0,1]^d`, visited in row-major order.
fn for_each_midpoint(d: usize, level: u32, mut f: impl FnMut(&[f64])) {
    let side = 1usize << level;
    let h = 1.0 / side as f64;
    let cells = side.pow(d as u32);
    let mut z = vec![0.0; d];
    for k in 0..cells {
        let mut rest = k;
        for axis in (0..d).rev() {
            z[axis] = (rest % side) as f64 * h + 0.5 * h;
            rest /= side;
        }
        f(&z);
    }
}

/// Rigorous lower bound on `W_1(μ, U)` by semi-discrete dual ascent.
///
/// For atom values `v`, `φ(z) = max_i (v_i − |z − x_i|)` is 1-Lipschitz with
/// `φ(x_i) ≥ v_i`, hence `W_1(μ,U) ≥ Σ w_i v_i − ∫φ dU`. The values are tuned by
/// `iters` supergradient steps on the level-`work_level` grid; the returned
/// value bounds `∫φ dU` on the level-`fine_level` grid plus its bias.
pub fn w1_lower_bound_semidiscrete(
    mu: &DiscreteMeasure,
    norm: Norm,
    work_level: u32,
    iters: usize,
    fine_level: u32,
) -> Result<f64> {
    let d = mu.dim();
    for level in [work_level, fine_level] {
        let cells = 1u128.checked_shl(d as u32 * level).unwrap_or(u128::MAX);
        if cells > MAX_DISCRETIZATION_CELLS {
            return domain(format!("level {level} too large in dimension {d}"));
        }
    }
    let n = mu.len();
    let w = mu.weights();
    let winner = |v: &[f64], z: &[f64]| {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, x) in mu.points().enumerate() {
            let val = v[i] - norm.distance(z, x);
            if val > best.0 {
                best = (val, i);
            }
        }
        best
    };
    let objective = |v: &[f64], level: u32| {
        let mut total = 0.0;
        for_each_midpoint(d, level, |z| total += winner(v, z).0);
        let cells = 1u64 << (d as u32 * level);
        w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - total / cells as f64
    };

    let step0 = 0.5 * (n as f64).powf(-1.0 / d as f64);
    let cells = (1u64 << (d as u32 * work_level)) as f64;
    let mut v = vec![0.0; n];
    let mut best_v = v.clone();
    let mut best = f64::NEG_INFINITY;
    let mut mass = vec![0.0; n];
    for t in 0..iters {
        mass.iter_mut().for_each(|m| *m = 0.0);
        let mut total = 0.0;
        for_each_midpoint(d, work_level, |z| {
            let (val, i) = winner(&v, z);
            total += val;
            mass[i] += 1.0 / cells;
        });
        let value = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() - total / cells;
        if value > best {
            best = value;
            best_v.clone_from(&v);
        }
        let step = step0 / ((t + 1) as f64).sqrt();
        for i in 0..n {
            v[i] += step * (w[i] - mass[i]);
        }
    }
    let bias = discretization_bias(d, fine_level, 1.0, norm)?;
    Ok(objective(&best_v, fine_level) - bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{halton, midpoint_grid, Domain, Measure};
    use crate::transport::{discretize_uniform, solve_exact, wasserstein_1d, Flow, TransportOptions};

    fn line(points: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::empirical(1, points.iter().map(|&x| vec![x]).collect(), Domain::RealSpace).unwrap()
    }

    #[test]
    fn optimal_plan_passes_and_swapped_plan_fails() {
        let a = line(&[0.0, 1.0]);
        let b = line(&[0.1, 1.1]);
        let sol = solve_exact(&a, &b, 1.0, Norm::L2, &TransportOptions::default()).unwrap();
        assert!(w1_dual_gap_check(&sol.plan, &sol.potentials, &a, &b));

        let mut bad = sol.plan.clone();
        bad.flows = vec![
            Flow { i: 0, j: 1, mass: 0.5, unit_cost: 1.1 },
            Flow { i: 1, j: 0, mass: 0.5, unit_cost: 0.9 },
        ];
        bad.cost_p = 1.0;
        bad.validate(&a, &b).unwrap();
        assert!(!w1_dual_gap_check(&bad, &sol.potentials, &a, &b));
    }

    #[test]
    fn single_atom_uses_constant_potential() {
        let a = DiscreteMeasure::dirac(vec![0.2, 0.3], Domain::UnitCube).unwrap();
        let b = DiscreteMeasure::dirac(vec![0.7, 0.9], Domain::UnitCube).unwrap();
        for norm in [Norm::LInf, Norm::L1, Norm::L2] {
            let sol = solve_exact(&a, &b, 1.0, norm, &TransportOptions::default()).unwrap();
            assert!(w1_dual_gap_check(&sol.plan, &sol.potentials, &a, &b));
        }
    }

    #[test]
    fn rejects_non_unit_exponent() {
        let a = line(&[0.0]);
        let b = line(&[1.0]);
        let sol = solve_exact(&a, &b, 2.0, Norm::L2, &TransportOptions::default()).unwrap();
        assert!(!w1_dual_gap_check(&sol.plan, &sol.potentials, &a, &b));
    }

    #[test]
    fn uniform_lower_bound_brackets_the_exact_value() {
        // in 1D the exact distance to the uniform law is known
        for n in [1usize, 3, 10] {
            let mu = midpoint_grid(n).unwrap();
            let exact = wasserstein_1d(&mu, &Measure::UniformCube(1), 1.0).unwrap();
            let ul = discretize_uniform(1, 4).unwrap();
            let sol = solve_exact(&mu, &ul, 1.0, Norm::LInf, &TransportOptions::default()).unwrap();
            let lower = w1_lower_bound_vs_uniform(&mu, &ul, &sol.potentials.g, Norm::LInf, 16).unwrap();
            assert!(lower <= exact + 1e-12, "{lower} > {exact}");
            assert!(lower >= exact - 0.1 / n as f64, "{lower} too loose for {exact}");
        }
    }

    #[test]
    fn uniform_lower_bound_is_tighter_than_the_triangle_inequality() {
        let mu = halton(4, 2).unwrap();
        let ul = discretize_uniform(2, 2).unwrap();
        let sol = solve_exact(&mu, &ul, 1.0, Norm::LInf, &TransportOptions::default()).unwrap();
        let triangle = sol.value - discretization_bias(2, 2, 1.0, Norm::LInf).unwrap();
        let lower = w1_lower_bound_vs_uniform(&mu, &ul, &sol.potentials.g, Norm::LInf, 9).unwrap();
        assert!(lower > triangle);
        // and below an upper estimate from a much finer primal solve
        let fine = discretize_uniform(2, 5).unwrap();
        let up = solve_exact(&mu, &fine, 1.0, Norm::LInf, &TransportOptions { support_cap: 2048 }).unwrap().value
            + discretization_bias(2, 5, 1.0, Norm::LInf).unwrap();
        assert!(lower <= up);
    }
}
