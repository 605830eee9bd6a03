//! Probability measures on the unit cube and on the real space, the norms used
//! to measure transport cost, and the deterministic point-set generators that
//! feed the harness.

mod generators;
pub mod pointset;
mod quadrature;
pub mod rng;

pub use generators::{halton, iid_uniform, midpoint_grid, van_der_corput, MAX_HALTON_DIM};
pub use quadrature::gauss_legendre;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a discrete measure.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A norm on `R^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    LInf,
    L2,
    L1,
}

impl Norm {
    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            Norm::LInf => x.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
        }
    }

    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let diffs = x.iter().zip(y).map(|(a, b)| (a - b).abs());
        match self {
            Norm::LInf => diffs.fold(0.0_f64, f64::max),
            Norm::L2 => diffs.map(|v| v * v).sum::<f64>().sqrt(),
            Norm::L1 => diffs.sum(),
        }
    }

    /// Diameter of `(0,1]^d` in this norm.
    pub fn diameter(self, d: usize) -> f64 {
        match self {
            Norm::LInf => 1.0,
            Norm::L2 => (d as f64).sqrt(),
            Norm::L1 => d as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::LInf => "linf",
            Norm::L2 => "l2",
            Norm::L1 => "l1",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linf" | "l-inf" | "inf" | "max" => Ok(Norm::LInf),
            "l2" | "euclidean" => Ok(Norm::L2),
            "l1" | "manhattan" => Ok(Norm::L1),
            other => Err(Error::Parse(format!("unknown norm `{other}`"))),
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Free function form of [`Norm::diameter`].
pub fn diameter(norm: Norm, d: usize) -> f64 {
    norm.diameter(d)
}

/// Where a discrete measure lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    UnitCube,
    RealSpace,
}

/// A finitely supported probability measure.
///
/// Points are stored row-major in a flat buffer. Duplicate points are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    domain: Domain,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>, domain: Domain) -> Result<Self> {
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(Error::InvalidMeasure(format!(
                "point {i} has {} coordinates, expected {dim}",
                p.len()
            )));
        }
        let coords = points.into_iter().flatten().collect();
        Self::from_flat(dim, coords, weights, domain)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>, domain: Domain) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("a measure needs at least one atom".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite coordinate {c}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        if domain == Domain::UnitCube {
            if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
                return Err(Error::OutOfDomain(format!("coordinate {c} is not in [0,1]")));
            }
        }
        Ok(Self { dim, coords, weights, domain })
    }

    /// Equal-weight measure on the given points.
    pub fn empirical(dim: usize, points: Vec<Vec<f64>>, domain: Domain) -> Result<Self> {
        let n = points.len();
        Self::new(dim, points, uniform_weights(n), domain)
    }

    pub fn empirical_flat(dim: usize, coords: Vec<f64>, domain: Domain) -> Result<Self> {
        let n = coords.len().checked_div(dim).unwrap_or(0);
        Self::from_flat(dim, coords, uniform_weights(n), domain)
    }

    /// Single atom of mass one.
    pub fn dirac(point: Vec<f64>, domain: Domain) -> Result<Self> {
        let dim = point.len();
        Self::from_flat(dim, point, vec![1.0], domain)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Same atoms, relabelled as living in `domain`.
    pub fn with_domain(self, domain: Domain) -> Result<Self> {
        Self::from_flat(self.dim, self.coords, self.weights, domain)
    }

    /// The q-th moment `sum_k w_k |x_k|^q`.
    pub fn moment(&self, q: f64, norm: Norm) -> f64 {
        self.points()
            .zip(&self.weights)
            .map(|(x, w)| w * norm.norm(x).powf(q))
            .sum()
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// A probability measure: finitely supported, or the uniform law on `[0,1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    Discrete(DiscreteMeasure),
    UniformCube(usize),
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Discrete(m) => m.dim(),
            Measure::UniformCube(d) => *d,
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteMeasure> {
        match self {
            Measure::Discrete(m) => Some(m),
            Measure::UniformCube(_) => None,
        }
    }

    /// True when the measure is carried by `[0,1]^d`.
    pub fn on_unit_cube(&self) -> bool {
        match self {
            Measure::Discrete(m) => {
                m.domain() == Domain::UnitCube || m.coords().iter().all(|c| (0.0..=1.0).contains(c))
            }
            Measure::UniformCube(_) => true,
        }
    }
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

/// Gauss–Legendre nodes per axis used for the uniform-law moment.
fn moment_nodes(axes: usize) -> usize {
    match axes {
        0..=3 => 24,
        4 => 12,
        _ => 6,
    }
}

/// The q-th moment `∫ |x|^q m(dx)` under `norm`.
///
/// For the uniform law the cube is split into the `d` pyramids
/// `{x : x_i = max_j x_j}`; on each, `x = t·(1, y)` with `t ∈ [0,1]` and
/// `y ∈ [0,1]^{d-1}`, so the moment equals `d/(q+d) · ∫ |(1,y)|^q dy`. The
/// remaining integrand is analytic and is integrated with a tensor-product
/// Gauss–Legendre rule.
pub fn moment(m: &Measure, q: f64, norm: Norm) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return crate::error::domain(format!("moment order must be >= 1, got {q}"));
    }
    Ok(match m {
        Measure::Discrete(dm) => dm.moment(q, norm),
        Measure::UniformCube(d) => uniform_cube_moment(*d, q, norm),
    })
}

fn uniform_cube_moment(d: usize, q: f64, norm: Norm) -> f64 {
    let axes = d - 1;
    let radial = d as f64 / (q + d as f64);
    if axes == 0 || norm == Norm::LInf {
        return radial;
    }
    let (nodes, weights) = gauss_legendre(moment_nodes(axes), 0.0, 1.0);
    let mut idx = vec![0usize; axes];
    let mut point = vec![1.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (a, &k) in idx.iter().enumerate() {
            point[a + 1] = nodes[k];
            w *= weights[k];
        }
        total += w * norm.norm(&point).powf(q);
        // odometer increment
        let mut a = 0;
        loop {
            if a == axes {
                return radial * total;
            }
            idx[a] += 1;
            if idx[a] < nodes.len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn diameters() {
        assert_eq!(Norm::LInf.diameter(7), 1.0);
        assert_eq!(Norm::L2.diameter(4), 2.0);
        assert_eq!(Norm::L1.diameter(3), 3.0);
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(DiscreteMeasure::new(1, vec![vec![0.5]], vec![0.9], Domain::UnitCube).is_err());
        assert!(DiscreteMeasure::new(2, vec![vec![0.5]], vec![1.0], Domain::UnitCube).is_err());
        assert!(DiscreteMeasure::new(1, vec![], vec![], Domain::UnitCube).is_err());
        assert!(matches!(
            DiscreteMeasure::new(1, vec![vec![1.5]], vec![1.0], Domain::UnitCube),
            Err(Error::OutOfDomain(_))
        ));
        assert!(DiscreteMeasure::new(1, vec![vec![1.5]], vec![1.0], Domain::RealSpace).is_ok());
        assert!(DiscreteMeasure::new(1, vec![vec![0.1], vec![0.2]], vec![1.5, -0.5], Domain::RealSpace).is_err());
    }

    #[test]
    fn discrete_moments() {
        let origin = DiscreteMeasure::dirac(vec![0.0, 0.0], Domain::RealSpace).unwrap();
        for q in [1.0, 2.5, 7.0] {
            assert_eq!(moment(&origin.clone().into(), q, Norm::L2).unwrap(), 0.0);
        }
        let corner = DiscreteMeasure::dirac(vec![1.0, 1.0], Domain::UnitCube).unwrap();
        assert_eq!(moment(&corner.into(), 2.0, Norm::LInf).unwrap(), 1.0);
        assert!(moment(&Measure::UniformCube(1), 0.5, Norm::L1).is_err());
    }

    #[test]
    fn uniform_moments_match_closed_forms() {
        // ∫_0^1 x^2 dx
        assert_relative_eq!(moment(&Measure::UniformCube(1), 2.0, Norm::L2).unwrap(), 1.0 / 3.0, max_relative = 1e-14);
        // max of d uniforms has density d t^{d-1}
        for d in 1..6 {
            for q in [1.0, 1.7, 3.0] {
                let got = moment(&Measure::UniformCube(d), q, Norm::LInf).unwrap();
                assert_relative_eq!(got, d as f64 / (d as f64 + q), max_relative = 1e-14);
            }
        }
        // E(x+y)^2 = 1/3 + 1/3 + 2/4, E(x^2+y^2) = 2/3
        assert_relative_eq!(moment(&Measure::UniformCube(2), 2.0, Norm::L1).unwrap(), 7.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(moment(&Measure::UniformCube(2), 2.0, Norm::L2).unwrap(), 2.0 / 3.0, max_relative = 1e-12);
        // multinomial expansion of (x+y+z)^3
        let m1 = 0.5;
        let m2 = 1.0 / 3.0;
        let m3 = 0.25;
        let es3 = 3.0 * m3 + 3.0 * 6.0 * m2 * m1 + 6.0 * m1 * m1 * m1;
        assert_relative_eq!(moment(&Measure::UniformCube(3), 3.0, Norm::L1).unwrap(), es3, max_relative = 1e-12);
        // E|x|_2^4 in 3D: 3·E x^4 + 6·E x^2 E y^2
        let e = 3.0 / 5.0 + 6.0 / 9.0;
        assert_relative_eq!(moment(&Measure::UniformCube(3), 4.0, Norm::L2).unwrap(), e, max_relative = 1e-12);
    }

    #[test]
    fn uniform_moment_fractional_order_is_stable() {
        // compare against a brute midpoint rule on a fine grid (independent route)
        let q = 1.5;
        let n = 2000;
        let h = 1.0 / n as f64;
        let mut brute = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = (i as f64 + 0.5) * h;
                let y = (j as f64 + 0.5) * h;
                brute += (x * x + y * y).powf(q / 2.0);
            }
        }
        brute *= h * h;
        let got = moment(&Measure::UniformCube(2), q, Norm::L2).unwrap();
        assert_relative_eq!(got, brute, max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn norm_axioms(x in prop::collection::vec(-5.0..5.0f64, 3),
                       y in prop::collection::vec(-5.0..5.0f64, 3),
                       z in prop::collection::vec(-5.0..5.0f64, 3)) {
            for norm in [Norm::LInf, Norm::L2, Norm::L1] {
                let dxy = norm.distance(&x, &y);
                prop_assert!(dxy >= 0.0);
                prop_assert_eq!(dxy, norm.distance(&y, &x));
                prop_assert!(norm.distance(&x, &z) <= dxy + norm.distance(&y, &z) + 1e-12);
            }
        }

        #[test]
        fn moment_is_homogeneous(pts in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 1..8),
                                 c in 0.0..4.0f64, q in 1.0..4.0f64) {
            let m = DiscreteMeasure::empirical(2, pts.clone(), Domain::RealSpace).unwrap();
            let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * c).collect()).collect();
            let ms = DiscreteMeasure::empirical(2, scaled, Domain::RealSpace).unwrap();
            for norm in [Norm::LInf, Norm::L2, Norm::L1] {
                let a = ms.moment(q, norm);
                let b = c.powf(q) * m.moment(q, norm);
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }
    }
}
