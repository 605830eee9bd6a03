use crate::error::{domain, Result};
use crate::measures::{moment, DiscreteMeasure, Domain, Measure, Norm};

/// Largest level accepted by [`discretize_uniform`].
pub const MAX_DISCRETIZATION_CELLS: u128 = 1 << 24;

/// Equal-weight atoms at the midpoints of the `2^{dℓ}` dyadic cells of `[0,1]^d`.
pub fn discretize_uniform(d: usize, level: u32) -> Result<DiscreteMeasure> {
    let cells = 1u128.checked_shl(d as u32 * level).unwrap_or(u128::MAX);
    if d == 0 || cells > MAX_DISCRETIZATION_CELLS {
        return domain(format!("cannot discretize the uniform law with d={d}, level={level}"));
    }
    let side = 1usize << level;
    let h = 1.0 / side as f64;
    let cells = cells as usize;
    let mut coords = Vec::with_capacity(cells * d);
    for k in 0..cells {
        let mut rest = k;
        let start = coords.len();
        coords.resize(start + d, 0.0);
        for axis in (0..d).rev() {
            coords[start + axis] = (rest % side) as f64 * h + 0.5 * h;
            rest /= side;
        }
    }
    DiscreteMeasure::empirical_flat(d, coords, Domain::UnitCube)
}

/// Smallest level whose cell count is at least four times `n`.
pub fn default_discretization_level(n: usize, d: usize) -> u32 {
    let target = 4 * n as u128;
    let mut level = 0u32;
    while (1u128 << (d as u32 * level)) < target {
        level += 1;
    }
    level
}

/// Upper bound on `W_p(U, U_ℓ)`: sending each point to its cell midpoint costs
/// `2^{−ℓ−1} · M_p(U)^{1/p}` with `M_p(U)` the `p`-th moment of the uniform law.
pub fn discretization_bias(d: usize, level: u32, p: f64, norm: Norm) -> Result<f64> {
    let m = moment(&Measure::UniformCube(d), p, norm)?;
    Ok(0.5f64.powi(level as i32 + 1) * m.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::wasserstein_1d;

    #[test]
    fn midpoints_and_levels() {
        let m = discretize_uniform(2, 1).unwrap();
        assert_eq!(m.coords(), &[0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75]);
        assert_eq!(m.weights(), &[0.25; 4]);
        assert_eq!(default_discretization_level(64, 2), 4);
        assert_eq!(default_discretization_level(32, 3), 3);
        assert_eq!(default_discretization_level(1, 1), 2);
        assert!(discretize_uniform(3, 9).is_err());
    }

    #[test]
    fn bias_bounds_the_one_dimensional_error() {
        for level in 0..6 {
            for p in [1.0, 2.0, 3.0] {
                let exact = wasserstein_1d(&discretize_uniform(1, level).unwrap(), &Measure::UniformCube(1), p).unwrap();
                let bias = discretization_bias(1, level, p, Norm::L2).unwrap();
                // in 1D the midpoint coupling is the monotone one, so the bound is attained
                assert!((exact - bias).abs() < 1e-14 * (1.0 + bias), "level {level} p {p}");
            }
        }
    }
}
