use super::{rng, DiscreteMeasure, Domain};
use crate::error::{domain, Error, Result};

/// Largest dimension supported by [`halton`].
pub const MAX_HALTON_DIM: usize = 16;

const PRIMES: [u64; MAX_HALTON_DIM] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// The 1D grid `(2k-1)/(2n)`, `k = 1..n`, with equal weights.
pub fn midpoint_grid(n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return domain("midpoint_grid needs n >= 1");
    }
    let two_n = 2.0 * n as f64;
    let coords = (1..=n).map(|k| (2 * k - 1) as f64 / two_n).collect();
    DiscreteMeasure::empirical_flat(1, coords, Domain::UnitCube)
}

/// Radical inverse of `i` in `base`, rounded once.
pub(crate) fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut num: u64 = 0;
    let mut den: u64 = 1;
    while i > 0 {
        num = num * base + i % base;
        den *= base;
        i /= base;
    }
    num as f64 / den as f64
}

/// First `n` terms (indices `1..=n`) of the van der Corput sequence.
pub fn van_der_corput(n: usize, base: u64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return domain("van_der_corput needs n >= 1");
    }
    if base < 2 {
        return domain(format!("base must be >= 2, got {base}"));
    }
    let coords = (1..=n as u64).map(|i| radical_inverse(i, base)).collect();
    DiscreteMeasure::empirical_flat(1, coords, Domain::UnitCube)
}

/// First `n` Halton points (indices `1..=n`); axis `i` uses the `i`-th prime.
pub fn halton(n: usize, d: usize) -> Result<DiscreteMeasure> {
    if d > MAX_HALTON_DIM {
        return Err(Error::DimTooLarge { dim: d, max: MAX_HALTON_DIM });
    }
    if n == 0 || d == 0 {
        return domain("halton needs n >= 1 and d >= 1");
    }
    let mut coords = Vec::with_capacity(n * d);
    for i in 1..=n as u64 {
        coords.extend(PRIMES[..d].iter().map(|&b| radical_inverse(i, b)));
    }
    DiscreteMeasure::empirical_flat(d, coords, Domain::UnitCube)
}

/// `n` i.i.d. uniform points on `[0,1)^d` from the counter-based stream `seed`.
///
/// Coordinate `i` of point `k` is draw number `k·d + i`.
pub fn iid_uniform(n: usize, d: usize, seed: u64) -> Result<DiscreteMeasure> {
    if n == 0 || d == 0 {
        return domain("iid_uniform needs n >= 1 and d >= 1");
    }
    let coords = (0..(n * d) as u64).map(|i| rng::draw_unit(seed, i)).collect();
    DiscreteMeasure::empirical_flat(d, coords, Domain::UnitCube)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(m: &DiscreteMeasure) -> Vec<f64> {
        m.coords().to_vec()
    }

    #[test]
    fn midpoints() {
        let m = midpoint_grid(1).unwrap();
        assert_eq!(coords(&m), vec![0.5]);
        assert_eq!(m.weights(), &[1.0]);
        assert_eq!(coords(&midpoint_grid(2).unwrap()), vec![0.25, 0.75]);
        assert_eq!(coords(&midpoint_grid(4).unwrap()), vec![0.125, 0.375, 0.625, 0.875]);
        assert!(midpoint_grid(0).is_err());
    }

    #[test]
    fn van_der_corput_terms() {
        assert_eq!(coords(&van_der_corput(3, 2).unwrap()), vec![0.5, 0.25, 0.75]);
        assert_eq!(coords(&van_der_corput(1, 7).unwrap()), vec![1.0 / 7.0]);
        assert_eq!(coords(&van_der_corput(2, 3).unwrap()), vec![1.0 / 3.0, 2.0 / 3.0]);
        assert!(van_der_corput(3, 1).is_err());
    }

    #[test]
    fn halton_points() {
        assert_eq!(coords(&halton(1, 2).unwrap()), vec![0.5, 1.0 / 3.0]);
        assert_eq!(coords(&halton(2, 1).unwrap()), vec![0.5, 0.25]);
        let h = halton(3, 2).unwrap();
        assert_eq!(h.point(2), &[0.75, 1.0 / 9.0]);
        assert!(matches!(halton(4, 17), Err(Error::DimTooLarge { .. })));
        assert_eq!(halton(5, 16).unwrap().dim(), 16);
    }

    #[test]
    fn iid_is_deterministic_and_centered() {
        let a = iid_uniform(100, 3, 9).unwrap();
        let b = iid_uniform(100, 3, 9).unwrap();
        assert_eq!(a.coords(), b.coords());
        assert_ne!(a.coords(), iid_uniform(100, 3, 10).unwrap().coords());
        let m = iid_uniform(10_000, 1, 1).unwrap();
        let mean = m.coords().iter().sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        assert!(iid_uniform(0, 1, 1).is_err());
    }

    #[test]
    fn generators_are_valid_measures() {
        for m in [
            midpoint_grid(17).unwrap(),
            van_der_corput(33, 5).unwrap(),
            halton(50, 4).unwrap(),
            iid_uniform(40, 2, 3).unwrap(),
        ] {
            let total: f64 = m.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(m.coords().iter().all(|c| (0.0..=1.0).contains(c)));
        }
    }
}
