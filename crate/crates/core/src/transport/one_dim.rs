use crate::error::{domain, Error, Result};
use crate::measures::{DiscreteMeasure, Measure};

/// Atoms sorted by coordinate with equal coordinates merged, and the
/// cumulative mass reaching exactly 1 at the last atom.
fn quantile_steps(m: &DiscreteMeasure) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = m
        .coords()
        .iter()
        .zip(m.weights())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&c, &w)| (c + 0.0, w))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut steps: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    let mut cum = 0.0;
    for (c, w) in atoms {
        cum += w;
        match steps.last_mut() {
            Some(last) if last.0 == c => last.1 = cum,
            _ => steps.push((c, cum)),
        }
    }
    if let Some(last) = steps.last_mut() {
        last.1 = 1.0;
    }
    steps
}

/// `∫_s^t |c − u|^p du`.
fn power_gap_integral(c: f64, s: f64, t: f64, p: f64) -> f64 {
    let q = p + 1.0;
    if c <= s {
        ((t - c).powf(q) - (s - c).powf(q)) / q
    } else if c >= t {
        ((c - s).powf(q) - (c - t).powf(q)) / q
    } else {
        ((c - s).powf(q) + (t - c).powf(q)) / q
    }
}

/// `W_p^p` between a 1D discrete measure and a 1D measure, by the monotone coupling.
pub fn wasserstein_1d_cost(mu: &DiscreteMeasure, nu: &Measure, p: f64) -> Result<f64> {
    if mu.dim() != 1 || nu.dim() != 1 {
        let other = if mu.dim() != 1 { mu.dim() } else { nu.dim() };
        return Err(Error::DimensionMismatch { left: 1, right: other });
    }
    if !(p >= 1.0 && p.is_finite()) {
        return domain(format!("p must be >= 1, got {p}"));
    }
    let a = quantile_steps(mu);
    let mut cost = 0.0;
    let mut prev = 0.0;
    match nu {
        Measure::UniformCube(_) => {
            for &(c, level) in &a {
                cost += power_gap_integral(c, prev, level, p);
                prev = level;
            }
        }
        Measure::Discrete(nu) => {
            let b = quantile_steps(nu);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                let next = a[i].1.min(b[j].1);
                cost += (next - prev) * (a[i].0 - b[j].0).abs().powf(p);
                prev = next;
                if a[i].1 == next {
                    i += 1;
                }
                if b[j].1 == next {
                    j += 1;
                }
            }
        }
    }
    Ok(cost)
}

/// Exact `W_p` in 1D against a discrete measure or the uniform law on `[0,1]`.
pub fn wasserstein_1d(mu: &DiscreteMeasure, nu: &Measure, p: f64) -> Result<f64> {
    Ok(wasserstein_1d_cost(mu, nu, p)?.powf(1.0 / p))
}
