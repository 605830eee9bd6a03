//! Dyadic partitions and the multiscale upper bounds on `W_p^p`.
//!
//! On the cube, level `ℓ` splits `[0,1]^d` into `2^{dℓ}` cells
//! `]k 2^{-ℓ}, (k+1) 2^{-ℓ}]` per axis, the cells touching a face `{x_i = 0}`
//! being closed on that face. On `R^d`, points are first sorted into the shells
//! `B_n = (−2^n, 2^n]^d \ (−2^{n−1}, 2^{n−1}]^d` (with `B_0 = (−1, 1]^d`),
//! rescaled by `2^{−n}` into `(−1, 1]^d`, and partitioned by the centred cells
//! `]k 2^{1−ℓ}, (k+1) 2^{1−ℓ}]`.

use std::collections::BTreeMap;

use crate::error::{domain, Error, Result};
use crate::measures::{DiscreteMeasure, Measure, Norm};

/// Deepest supported dyadic level.
pub const MAX_LEVEL: u32 = 62;

/// Relative (to `𝔡^p`) size of the neglected tail in the unbounded sum.
pub const UNBOUNDED_TAIL_TOL: f64 = 1e-9;

/// Truncation of the level sum in [`multiscale_upper_cube`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelCutoff {
    Finite(u32),
    Unbounded,
}

/// Masses of both measures on the occupied cells of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicLevelProfile {
    pub level: u32,
    /// Cell multi-index → `(μ(F), ν(F))`.
    pub cells: BTreeMap<Vec<u64>, (f64, f64)>,
    /// `δ_ℓ = Σ_F |μ(F) − ν(F)|` over all cells, empty ones included.
    pub delta: f64,
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return domain(format!("dyadic level {level} exceeds {MAX_LEVEL}"));
    }
    Ok(())
}

/// Index of the boundary-closed level-`ℓ` cell containing `x ∈ [0,1]^d`.
pub fn cell_index(x: &[f64], level: u32) -> Result<Vec<u64>> {
    check_level(level)?;
    let scale = 2f64.powi(level as i32);
    x.iter()
        .map(|&c| {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::OutOfDomain(format!("coordinate {c} is not in [0,1]")));
            }
            Ok(if c == 0.0 { 0 } else { (c * scale).ceil() as u64 - 1 })
        })
        .collect()
}

fn cube_support(m: &Measure) -> Result<Option<&DiscreteMeasure>> {
    match m {
        Measure::UniformCube(_) => Ok(None),
        Measure::Discrete(dm) => {
            if !m.on_unit_cube() {
                return Err(Error::OutOfDomain("dyadic cube partitions need measures on [0,1]^d".into()));
            }
            Ok(Some(dm))
        }
    }
}

/// Cell masses and `δ_ℓ` at one level.
pub fn delta_level(mu: &Measure, nu: &Measure, level: u32) -> Result<DyadicLevelProfile> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { left: mu.dim(), right: nu.dim() });
    }
    check_level(level)?;
    let d = mu.dim();
    let (a, b) = (cube_support(mu)?, cube_support(nu)?);
    let mut cells: BTreeMap<Vec<u64>, (f64, f64)> = BTreeMap::new();
    if let Some(a) = a {
        for (x, &w) in a.points().zip(a.weights()) {
            cells.entry(cell_index(x, level)?).or_default().0 += w;
        }
    }
    if let Some(b) = b {
        for (x, &w) in b.points().zip(b.weights()) {
            cells.entry(cell_index(x, level)?).or_default().1 += w;
        }
    }
    let cell_mass = 2f64.powi(-((d as u32 * level) as i32));
    let delta = match (a, b) {
        (None, None) => {
            cells.clear();
            0.0
        }
        (Some(_), Some(_)) => cells.values().map(|(x, y)| (x - y).abs()).sum(),
        (Some(_), None) | (None, Some(_)) => {
            let uniform_is_mu = a.is_none();
            for v in cells.values_mut() {
                if uniform_is_mu {
                    v.0 = cell_mass;
                } else {
                    v.1 = cell_mass;
                }
            }
            let occupied: f64 = cells.values().map(|(x, y)| (x - y).abs()).sum();
            let empty = (1.0 - cells.len() as f64 * cell_mass).max(0.0);
            occupied + empty
        }
    };
    Ok(DyadicLevelProfile { level, cells, delta })
}

/// `δ_1, …, δ_L` (index 0 holds `δ_1`).
pub fn delta_profile(mu: &Measure, nu: &Measure, max_level: u32) -> Result<Vec<f64>> {
    (1..=max_level).map(|l| delta_level(mu, nu, l).map(|p| p.delta)).collect()
}

/// Smallest `L` whose tail majorant `(2^p+1) 2^{−p(L+1)} / (1 − 2^{−p})` is below
/// [`UNBOUNDED_TAIL_TOL`].
pub fn unbounded_stop_level(p: f64) -> u32 {
    let mut level = 0;
    while tail_majorant(p, level) > UNBOUNDED_TAIL_TOL && level < MAX_LEVEL {
        level += 1;
    }
    level
}

/// `(2^p+1) Σ_{ℓ>L} 2^{−pℓ}`, the unbounded tail with `δ_ℓ ≤ 2`, in units of `𝔡^p`.
fn tail_majorant(p: f64, level: u32) -> f64 {
    (2f64.powf(p) + 1.0) * 2f64.powf(-p * (level as f64 + 1.0)) / (1.0 - 2f64.powf(-p))
}

/// Evaluates the multiscale bound from precomputed `δ_1, …` (index 0 holds `δ_1`).
///
/// Needs at least `ℓ0` entries for a finite cutoff, and
/// [`unbounded_stop_level`]`(p)` entries for the unbounded one.
pub fn multiscale_from_deltas(deltas: &[f64], p: f64, cutoff: LevelCutoff, diameter: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return domain(format!("p must be >= 1, got {p}"));
    }
    let head = (2f64.powf(p) + 1.0) / 2.0;
    let partial = |upto: u32| -> f64 {
        (1..=upto)
            .map(|l| 2f64.powf(-p * l as f64) * deltas[l as usize - 1])
            .sum::<f64>()
    };
    let dp = diameter.powf(p);
    match cutoff {
        LevelCutoff::Finite(l0) => {
            if deltas.len() < l0 as usize {
                return domain(format!("need {l0} levels, have {}", deltas.len()));
            }
            Ok(dp * (head * partial(l0) + 2f64.powf(-p * l0 as f64)))
        }
        LevelCutoff::Unbounded => {
            let stop = unbounded_stop_level(p);
            if deltas.len() < stop as usize {
                return domain(format!("need {stop} levels, have {}", deltas.len()));
            }
            Ok(dp * (head * partial(stop) + tail_majorant(p, stop)))
        }
    }
}

/// Multiscale upper bound on `W_p^p` for measures on `[0,1]^d`.
pub fn multiscale_upper_cube(mu: &Measure, nu: &Measure, p: f64, cutoff: LevelCutoff, norm: Norm) -> Result<f64> {
    let levels = match cutoff {
        LevelCutoff::Finite(l0) => {
            check_level(l0)?;
            l0
        }
        LevelCutoff::Unbounded => unbounded_stop_level(p),
    };
    let deltas = delta_profile(mu, nu, levels)?;
    multiscale_from_deltas(&deltas, p, cutoff, norm.diameter(mu.dim()))
}

/// Shell index `n` of a point of `R^d`: the least `n ≥ 0` with `x ∈ (−2^n, 2^n]^d`.
pub fn shell_index(x: &[f64]) -> u32 {
    x.iter()
        .map(|&c| {
            let mut n = 0u32;
            // exact powers of two; the loop runs at most ~1100 times for finite c
            while !(c > -(2f64.powi(n as i32)) && c <= 2f64.powi(n as i32)) {
                n += 1;
            }
            n
        })
        .max()
        .unwrap_or(0)
}

/// Cell of `y ∈ (−1,1]^d` in the centred level-`ℓ` partition.
fn centred_cell(y: &[f64], level: u32) -> Vec<i64> {
    if level == 0 {
        return vec![0; y.len()];
    }
    let scale = 2f64.powi(level as i32 - 1);
    y.iter().map(|&c| (c * scale).ceil() as i64 - 1).collect()
}

/// Result of [`multiscale_upper_rd`]: the truncated sum and a majorant of what
/// the levels beyond the cap would add.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdShapeValue {
    pub value: f64,
    pub level_tail: f64,
}

/// `K Σ_{n ≤ N} 2^{pn} Σ_{ℓ ≤ L} 2^{−pℓ} Σ_F |μ(2^n F ∩ B_n) − ν(2^n F ∩ B_n)|`.
///
/// Fails if an atom lies beyond shell `shell_cap`.
pub fn multiscale_upper_rd(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    k: f64,
    level_cap: u32,
    shell_cap: u32,
) -> Result<RdShapeValue> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { left: mu.dim(), right: nu.dim() });
    }
    if !(p > 0.0 && k > 0.0) {
        return domain("p and K must be positive");
    }
    check_level(level_cap)?;
    // (shell, rescaled point, signed weight)
    let mut atoms: Vec<(u32, Vec<f64>, f64)> = Vec::with_capacity(mu.len() + nu.len());
    for (m, sign) in [(mu, 1.0), (nu, -1.0)] {
        for (x, &w) in m.points().zip(m.weights()) {
            let n = shell_index(x);
            if n > shell_cap {
                return domain(format!("atom in shell {n} beyond the shell cap {shell_cap}"));
            }
            let scale = 2f64.powi(-(n as i32));
            atoms.push((n, x.iter().map(|c| c * scale).collect(), sign * w));
        }
    }
    let mut value = 0.0;
    for level in 0..=level_cap {
        let mut cells: BTreeMap<(u32, Vec<i64>), f64> = BTreeMap::new();
        for (n, y, w) in &atoms {
            *cells.entry((*n, centred_cell(y, level))).or_default() += w;
        }
        let mut by_shell: BTreeMap<u32, f64> = BTreeMap::new();
        for ((n, _), s) in cells {
            *by_shell.entry(n).or_default() += s.abs();
        }
        let level_weight = 2f64.powf(-p * level as f64);
        for (n, s) in by_shell {
            value += 2f64.powf(p * n as f64) * level_weight * s;
        }
    }
    let mut shell_mass: BTreeMap<u32, f64> = BTreeMap::new();
    for (n, _, w) in &atoms {
        *shell_mass.entry(*n).or_default() += w.abs();
    }
    let geometric = 2f64.powf(-p * (level_cap as f64 + 1.0)) / (1.0 - 2f64.powf(-p));
    let level_tail: f64 = shell_mass.iter().map(|(n, m)| 2f64.powf(p * *n as f64) * m).sum::<f64>() * geometric;
    Ok(RdShapeValue { value: k * value, level_tail: k * level_tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::uniform_discrepancy;
    use crate::measures::{halton, iid_uniform, Domain};
    use crate::transport::wasserstein_exact;
    use proptest::prelude::*;

    fn line(points: &[f64], weights: &[f64], domain: Domain) -> DiscreteMeasure {
        DiscreteMeasure::new(1, points.iter().map(|&x| vec![x]).collect(), weights.to_vec(), domain).unwrap()
    }

    #[test]
    fn cell_indices() {
        assert_eq!(cell_index(&[0.0], 3).unwrap(), vec![0]);
        for l in 0..10 {
            assert_eq!(cell_index(&[1.0], l).unwrap(), vec![(1u64 << l) - 1]);
        }
        assert_eq!(cell_index(&[0.3], 1).unwrap(), vec![0]);
        assert_eq!(cell_index(&[0.5], 1).unwrap(), vec![0]);
        assert_eq!(cell_index(&[0.5001], 1).unwrap(), vec![1]);
        assert_eq!(cell_index(&[0.25, 0.26], 2).unwrap(), vec![0, 1]);
        assert!(matches!(cell_index(&[1.5], 1), Err(Error::OutOfDomain(_))));
        assert!(cell_index(&[0.5], MAX_LEVEL + 1).is_err());
    }

    #[test]
    fn delta_examples() {
        let point: Measure = line(&[0.3], &[1.0], Domain::UnitCube).into();
        let p = delta_level(&point, &Measure::UniformCube(1), 1).unwrap();
        assert_eq!(p.delta, 1.0);
        assert_eq!(p.cells.len(), 1);
        let h: Measure = halton(16, 2).unwrap().into();
        for l in 0..8 {
            assert_eq!(delta_level(&h, &h, l).unwrap().delta, 0.0);
        }
        // 4 atoms in 4 distinct quarter cells of [0,1]: exact at level 2
        let q: Measure = line(&[0.1, 0.3, 0.6, 0.9], &[0.25; 4], Domain::UnitCube).into();
        assert!(delta_level(&q, &Measure::UniformCube(1), 2).unwrap().delta.abs() < 1e-15);
        // at level 3 each atom leaves one of its two eighths empty
        assert!((delta_level(&q, &Measure::UniformCube(1), 3).unwrap().delta - 1.0).abs() < 1e-15);
    }

    /// Brute force over every cell of the level, including empty ones.
    fn delta_oracle(a: &DiscreteMeasure, level: u32) -> f64 {
        let d = a.dim();
        let side = 1u64 << level;
        let cells = side.pow(d as u32);
        let cell_mass = 1.0 / cells as f64;
        (0..cells)
            .map(|c| {
                let mut rest = c;
                let mut lo = vec![0.0; d];
                for axis in (0..d).rev() {
                    lo[axis] = (rest % side) as f64 / side as f64;
                    rest /= side;
                }
                let h = 1.0 / side as f64;
                let m: f64 = a
                    .points()
                    .zip(a.weights())
                    .filter(|(x, _)| {
                        x.iter().zip(&lo).all(|(&xi, &li)| (xi > li || (li == 0.0 && xi == 0.0)) && xi <= li + h)
                    })
                    .map(|(_, w)| w)
                    .sum();
                (m - cell_mass).abs()
            })
            .sum()
    }

    #[test]
    fn delta_against_cell_enumeration() {
        for seed in 0..5 {
            let mut a = iid_uniform(20, 2, seed).unwrap();
            // push a few atoms onto the faces
            let mut coords = a.coords().to_vec();
            coords[0] = 0.0;
            coords[3] = 1.0;
            coords[5] = 0.5;
            a = DiscreteMeasure::from_flat(2, coords, a.weights().to_vec(), Domain::UnitCube).unwrap();
            let am: Measure = a.clone().into();
            for level in 0..5 {
                let got = delta_level(&am, &Measure::UniformCube(2), level).unwrap().delta;
                assert!((got - delta_oracle(&a, level)).abs() < 1e-12, "seed {seed} level {level}");
            }
        }
    }

    #[test]
    fn multiscale_cube_trivial_cases() {
        let h: Measure = halton(10, 2).unwrap().into();
        for norm in [Norm::LInf, Norm::L2, Norm::L1] {
            for p in [1.0, 2.0, 3.0] {
                let dp = norm.diameter(2).powf(p);
                assert_eq!(multiscale_upper_cube(&h, &Measure::UniformCube(2), p, LevelCutoff::Finite(0), norm).unwrap(), dp);
                for l0 in 0..8 {
                    let v = multiscale_upper_cube(&h, &h, p, LevelCutoff::Finite(l0), norm).unwrap();
                    assert_eq!(v, dp * 2f64.powf(-p * l0 as f64));
                }
                let v = multiscale_upper_cube(&h, &h, p, LevelCutoff::Unbounded, norm).unwrap();
                assert!(v <= UNBOUNDED_TAIL_TOL * dp);
            }
        }
    }

    #[test]
    fn stop_levels() {
        assert_eq!(unbounded_stop_level(1.0), 32);
        for p in [1.0, 2.0, 3.0, 5.0] {
            let l = unbounded_stop_level(p);
            assert!(tail_majorant(p, l) <= UNBOUNDED_TAIL_TOL);
            assert!(tail_majorant(p, l - 1) > UNBOUNDED_TAIL_TOL);
        }
    }

    #[test]
    fn shells() {
        assert_eq!(shell_index(&[0.0]), 0);
        assert_eq!(shell_index(&[1.0, -0.999]), 0);
        assert_eq!(shell_index(&[1.5, 0.0]), 1);
        assert_eq!(shell_index(&[-5.0, 3.0]), 3);
        assert_eq!(shell_index(&[-1.0]), 1);
        assert_eq!(shell_index(&[2.0]), 1);
        assert_eq!(shell_index(&[-2.0]), 2);
        assert_eq!(shell_index(&[1e300]), 997);
    }

    #[test]
    fn rd_examples() {
        let a = line(&[0.25, -3.0], &[0.5, 0.5], Domain::RealSpace);
        let zero = multiscale_upper_rd(&a, &a, 2.0, 1.0, 10, 10).unwrap();
        assert_eq!(zero.value, 0.0);

        // inside (−1,1]: only shell 0 contributes
        let b = line(&[0.5], &[1.0], Domain::RealSpace);
        let c = line(&[-0.5], &[1.0], Domain::RealSpace);
        let v = multiscale_upper_rd(&b, &c, 1.0, 1.0, 3, 0).unwrap();
        // level 0: same cell (0); levels ≥ 1: separated, 2 per level
        let want = 2.0 * (0.5 + 0.25 + 0.125);
        assert!((v.value - want).abs() < 1e-15);

        // two-point instance against a direct loop over shells and cells
        let x = line(&[0.3, 2.5], &[0.5, 0.5], Domain::RealSpace);
        let y = line(&[-1.7, 0.9], &[0.25, 0.75], Domain::RealSpace);
        let got = multiscale_upper_rd(&x, &y, 1.5, 1.0, 10, 10).unwrap().value;
        let mut oracle = 0.0;
        for n in 0..=10 {
            let lo_in = -(2f64.powi(n - 1));
            let hi = 2f64.powi(n);
            let in_shell = |t: f64| {
                if n == 0 {
                    t > -1.0 && t <= 1.0
                } else {
                    t > -hi && t <= hi && !(t > lo_in && t <= -lo_in)
                }
            };
            for l in 0..=10 {
                let cells: Vec<(f64, f64)> = if l == 0 {
                    vec![(-1.0, 1.0)]
                } else {
                    let w = 2f64.powi(1 - l);
                    (-(1i64 << (l - 1))..(1i64 << (l - 1))).map(|k| (k as f64 * w, (k + 1) as f64 * w)).collect()
                };
                for (lo, up) in cells {
                    let (lo, up) = (lo * hi, up * hi);
                    let mass = |m: &DiscreteMeasure| -> f64 {
                        m.coords()
                            .iter()
                            .zip(m.weights())
                            .filter(|(&t, _)| t > lo && t <= up && in_shell(t))
                            .map(|(_, w)| w)
                            .sum()
                    };
                    oracle += 2f64.powf(1.5 * n as f64) * 2f64.powf(-1.5 * l as f64) * (mass(&x) - mass(&y)).abs();
                }
            }
        }
        assert!((got - oracle).abs() < 1e-12 * oracle, "{got} vs {oracle}");

        assert!(multiscale_upper_rd(&x, &y, 1.0, 1.0, 10, 1).is_err());
    }

    #[test]
    fn rd_level_tail_covers_deeper_levels() {
        let x = line(&[0.3, 2.5, -0.01], &[0.5, 0.25, 0.25], Domain::RealSpace);
        let y = line(&[-1.7, 0.9], &[0.25, 0.75], Domain::RealSpace);
        let shallow = multiscale_upper_rd(&x, &y, 2.0, 1.0, 4, 8).unwrap();
        let deep = multiscale_upper_rd(&x, &y, 2.0, 1.0, 30, 8).unwrap();
        assert!(deep.value >= shallow.value);
        assert!(deep.value <= shallow.value + shallow.level_tail + 1e-12);
    }

    fn arb_cube_pair() -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
        (any::<u64>(), 1usize..3, 1usize..10, 1usize..10).prop_map(|(seed, d, n, m)| {
            (iid_uniform(n, d, seed).unwrap(), iid_uniform(m, d, seed.wrapping_add(7)).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn upper_bound_holds((a, b) in arb_cube_pair(), p in 1.0f64..3.5) {
            let (am, bm): (Measure, Measure) = (a.clone().into(), b.clone().into());
            for norm in [Norm::LInf, Norm::L2, Norm::L1] {
                let w = wasserstein_exact(&a, &b, p, norm).unwrap().0.powf(p);
                let deltas = delta_profile(&am, &bm, unbounded_stop_level(p).max(12)).unwrap();
                for l0 in 0..=12 {
                    let ub = multiscale_from_deltas(&deltas, p, LevelCutoff::Finite(l0), norm.diameter(a.dim())).unwrap();
                    prop_assert!(w <= ub * (1.0 + 1e-9));
                }
                let ub = multiscale_upper_cube(&am, &bm, p, LevelCutoff::Unbounded, norm).unwrap();
                prop_assert!(w <= ub * (1.0 + 1e-9));
            }
        }

        #[test]
        fn deltas_bounded_by_uniform_discrepancy((a, b) in arb_cube_pair(), level in 0u32..6) {
            let (am, bm): (Measure, Measure) = (a.into(), b.into());
            let dinf = uniform_discrepancy(&am, &bm).unwrap();
            let delta = delta_level(&am, &bm, level).unwrap().delta;
            let d = am.dim() as i32;
            prop_assert!(delta <= 2.0 + 1e-12);
            prop_assert!(delta <= 2f64.powi(d * level as i32) * dinf + 1e-12);
        }

        #[test]
        fn children_add_up_to_parents((a, _) in arb_cube_pair(), level in 0u32..8) {
            let am: Measure = a.clone().into();
            let parent = delta_level(&am, &Measure::UniformCube(a.dim()), level).unwrap();
            let child = delta_level(&am, &Measure::UniformCube(a.dim()), level + 1).unwrap();
            let mut merged: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            for (k, (m, _)) in &child.cells {
                *merged.entry(k.iter().map(|c| c / 2).collect()).or_default() += m;
            }
            for (k, (m, _)) in &parent.cells {
                prop_assert!((merged[k] - m).abs() <= 1e-15);
            }
            prop_assert_eq!(merged.len(), parent.cells.len());
        }
    }
}
