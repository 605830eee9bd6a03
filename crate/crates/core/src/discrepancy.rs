//! Exact star discrepancy `D*` and uniform discrepancy `D∞`.
//!
//! Both measures are projected on a [`CriticalGrid`]: per axis, the sorted
//! distinct atom coordinates (plus `0` and/or `1` when the uniform law is
//! involved). Signed masses are accumulated on the grid and turned into
//! inclusive prefix sums, padded with a leading zero slice on every axis so
//! that "rank −1" reads as zero mass.
//!
//! `D*` is then a single pass over grid corners. `D∞` enumerates index ranges
//! on the first `d − 1` axes and resolves the last axis with a running
//! minimum, so the cost is `Π_{i<d} m_i² · m_d / 2^{d-1}` rather than `|Γ|²`.

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Domain, Measure};

pub const DEFAULT_GRID_CAP: u128 = 20_000_000;
pub const DEFAULT_PAIR_CAP: u128 = 100_000_000;

/// Work limits for the exact enumerators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscrepancyOptions {
    /// Maximum number of grid corners `Π m_i`.
    pub grid_cap: u128,
    /// Maximum number of box evaluations in the `D∞` sweep.
    pub pair_cap: u128,
}

impl Default for DiscrepancyOptions {
    fn default() -> Self {
        Self { grid_cap: DEFAULT_GRID_CAP, pair_cap: DEFAULT_PAIR_CAP }
    }
}

/// Which boxes the `D∞` supremum ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxConvention {
    /// `[[x, y]] = {z : x ⪯ z ⪯ y}`.
    Closed,
    /// `]]x, y]] = {z : x ≺ z ⪯ y}` with corners in `[0,1]^d` when the pair lives
    /// on the cube, non-comparable corners giving the empty box. Suprema include
    /// limits, so this differs from `Closed` only through atoms on the faces
    /// `{x_i = 0}`, which no such box can reach.
    SemiOpen,
}

/// Per-axis sorted, deduplicated coordinate lists.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalGrid {
    axes: Vec<Vec<f64>>,
}

impl CriticalGrid {
    /// Union of the supports' coordinates on each axis, plus `extra`.
    pub fn build(measures: &[&DiscreteMeasure], extra: &[f64], grid_cap: u128) -> Result<Self> {
        let dim = measures.first().map(|m| m.dim()).expect("at least one measure");
        let mut axes = vec![Vec::new(); dim];
        for m in measures {
            for x in m.points() {
                for (axis, &c) in axes.iter_mut().zip(x) {
                    axis.push(c + 0.0);
                }
            }
        }
        for axis in &mut axes {
            axis.extend_from_slice(extra);
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let grid = Self { axes };
        let size = grid.size();
        if size > grid_cap {
            return Err(Error::GridTooLarge { size, cap: grid_cap });
        }
        Ok(grid)
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Number of grid corners.
    pub fn size(&self) -> u128 {
        self.axes.iter().map(|a| a.len() as u128).product()
    }

    fn rank(&self, axis: usize, value: f64) -> usize {
        self.axes[axis]
            .binary_search_by(|v| v.total_cmp(&(value + 0.0)))
            .expect("coordinate present in grid")
    }
}

/// Padded inclusive prefix sums of a signed atomic mass on a critical grid.
struct PrefixGrid {
    /// `m_i + 1` per axis.
    shape: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<f64>,
}

impl PrefixGrid {
    fn new(grid: &CriticalGrid, plus: &DiscreteMeasure, minus: Option<&DiscreteMeasure>) -> Self {
        let shape: Vec<usize> = grid.axes.iter().map(|a| a.len() + 1).collect();
        let mut strides = vec![1usize; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let total: usize = shape.iter().product();
        let deposit = |m: &DiscreteMeasure| {
            let mut acc = vec![0.0; total];
            for (x, &w) in m.points().zip(m.weights()) {
                let idx: usize = x
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (grid.rank(i, c) + 1) * strides[i])
                    .sum();
                acc[idx] += w;
            }
            acc
        };
        let mut data = deposit(plus);
        if let Some(minus) = minus {
            let neg = deposit(minus);
            for (a, b) in data.iter_mut().zip(neg) {
                *a -= b;
            }
        }
        for (axis, &stride) in strides.iter().enumerate() {
            let len = shape[axis];
            for idx in 0..total {
                if (idx / stride) % len != 0 {
                    data[idx] += data[idx - stride];
                }
            }
        }
        Self { shape, strides, data }
    }
}

enum Pair<'a> {
    VsUniform(&'a DiscreteMeasure),
    Discrete(&'a DiscreteMeasure, &'a DiscreteMeasure),
    BothUniform,
}

fn classify<'a>(mu: &'a Measure, nu: &'a Measure) -> Result<Pair<'a>> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { left: mu.dim(), right: nu.dim() });
    }
    match (mu, nu) {
        (Measure::UniformCube(_), Measure::UniformCube(_)) => Ok(Pair::BothUniform),
        (Measure::Discrete(m), Measure::UniformCube(_)) | (Measure::UniformCube(_), Measure::Discrete(m)) => {
            if !mu.on_unit_cube() || !nu.on_unit_cube() {
                return Err(Error::OutOfDomain(
                    "comparison with the uniform law needs a measure on [0,1]^d".into(),
                ));
            }
            Ok(Pair::VsUniform(m))
        }
        (Measure::Discrete(a), Measure::Discrete(b)) => Ok(Pair::Discrete(a, b)),
    }
}

pub fn star_discrepancy(mu: &Measure, nu: &Measure) -> Result<f64> {
    star_discrepancy_with(mu, nu, &DiscrepancyOptions::default())
}

/// `sup_x |μ(]]−∞,x]]) − ν(]]−∞,x]])|`, computed exactly.
pub fn star_discrepancy_with(mu: &Measure, nu: &Measure, opts: &DiscrepancyOptions) -> Result<f64> {
    let value = match classify(mu, nu)? {
        Pair::BothUniform => 0.0,
        Pair::VsUniform(m) => {
            let grid = CriticalGrid::build(&[m], &[1.0], opts.grid_cap)?;
            let pg = PrefixGrid::new(&grid, m, None);
            let offset: usize = pg.strides.iter().sum();
            let mut best = 0.0_f64;
            for_each_interior(&pg.shape, |idx, ranks| {
                let vol: f64 = ranks.iter().enumerate().map(|(i, &r)| grid.axes[i][r]).product();
                let closed = pg.data[idx];
                let strict = pg.data[idx - offset];
                best = best.max(closed - vol).max(vol - strict);
            });
            best
        }
        Pair::Discrete(a, b) => {
            let grid = CriticalGrid::build(&[a, b], &[], opts.grid_cap)?;
            let pg = PrefixGrid::new(&grid, a, Some(b));
            pg.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Calls `f(flat_index, ranks)` for every padded index whose coordinates are all ≥ 1,
/// passing the unpadded ranks.
fn for_each_interior(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let d = shape.len();
    let mut ranks = vec![0usize; d];
    let strides: Vec<usize> = (0..d).map(|i| shape[i + 1..].iter().product()).collect();
    loop {
        let idx: usize = ranks.iter().zip(&strides).map(|(r, s)| (r + 1) * s).sum();
        f(idx, &ranks);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            ranks[axis] += 1;
            if ranks[axis] + 1 < shape[axis] {
                break;
            }
            ranks[axis] = 0;
        }
    }
}

pub fn uniform_discrepancy(mu: &Measure, nu: &Measure) -> Result<f64> {
    uniform_discrepancy_with(mu, nu, BoxConvention::Closed, &DiscrepancyOptions::default())
}

/// `sup_{x,y} |μ(B) − ν(B)|` over boxes `B` of the given convention, computed exactly.
pub fn uniform_discrepancy_with(
    mu: &Measure,
    nu: &Measure,
    convention: BoxConvention,
    opts: &DiscrepancyOptions,
) -> Result<f64> {
    let value = match classify(mu, nu)? {
        Pair::BothUniform => 0.0,
        Pair::VsUniform(m) => {
            let grid = CriticalGrid::build(&[m], &[0.0, 1.0], opts.grid_cap)?;
            let pg = PrefixGrid::new(&grid, m, None);
            let exclude_zero = convention == BoxConvention::SemiOpen;
            let excess = sweep(&grid, &pg, Sweep::ClosedExcess, exclude_zero, opts)?;
            let deficit = sweep(&grid, &pg, Sweep::OpenDeficit, false, opts)?;
            excess.max(deficit)
        }
        Pair::Discrete(a, b) => {
            let grid = CriticalGrid::build(&[a, b], &[], opts.grid_cap)?;
            let pg = PrefixGrid::new(&grid, a, Some(b));
            let on_cube = a.domain() == Domain::UnitCube && b.domain() == Domain::UnitCube;
            let exclude_zero = convention == BoxConvention::SemiOpen && on_cube;
            sweep(&grid, &pg, Sweep::AbsClosed, exclude_zero, opts)?
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sweep {
    /// `max μ([[x,y]]) − vol` over grid-cornered closed boxes.
    ClosedExcess,
    /// `max vol − μ(]]x,y[[)` over grid-cornered open boxes.
    OpenDeficit,
    /// `max |σ([[x,y]])|` for a signed atomic `σ`.
    AbsClosed,
}

/// A one-axis index range: padded prefix bounds `lo`, `hi` (mass = `P[hi] − P[lo]`)
/// and the Lebesgue length of the box side.
#[derive(Clone, Copy)]
struct Segment {
    lo: usize,
    hi: usize,
    len: f64,
}

/// With `exclude_zero`, ranges whose lower end is the coordinate `0` drop the
/// atoms sitting on it.
fn segments(axis: &[f64], kind: Sweep, exclude_zero: bool) -> Vec<Segment> {
    let m = axis.len();
    let zero_first = exclude_zero && axis[0] == 0.0;
    let mut out = Vec::new();
    for hi in 0..m {
        for lo in 0..=hi {
            let len = axis[hi] - axis[lo];
            match kind {
                Sweep::ClosedExcess | Sweep::AbsClosed => {
                    let lo = if zero_first && lo == 0 { 1 } else { lo };
                    out.push(Segment { lo, hi: hi + 1, len })
                }
                Sweep::OpenDeficit if lo < hi => out.push(Segment { lo: lo + 1, hi, len }),
                Sweep::OpenDeficit => {}
            }
        }
    }
    out
}

fn sweep(
    grid: &CriticalGrid,
    pg: &PrefixGrid,
    kind: Sweep,
    exclude_zero: bool,
    opts: &DiscrepancyOptions,
) -> Result<f64> {
    let d = grid.dim();
    let head: Vec<Vec<Segment>> = grid.axes[..d - 1]
        .iter()
        .map(|a| segments(a, kind, exclude_zero))
        .collect();
    let last = &grid.axes[d - 1];
    let m = last.len();
    let work = head.iter().map(|s| s.len() as u128).product::<u128>() * (m as u128 + 1);
    if work > opts.pair_cap {
        return Err(Error::GridTooLarge { size: work, cap: opts.pair_cap });
    }
    if head.iter().any(|s| s.is_empty()) {
        return Ok(0.0);
    }

    let corners = 1usize << (d - 1);
    let mut choice = vec![0usize; d - 1];
    let mut s = vec![0.0; m + 1];
    let mut best = 0.0_f64;
    loop {
        let mut vol = 1.0;
        for (axis, &c) in choice.iter().enumerate() {
            vol *= head[axis][c].len;
        }
        s.iter_mut().for_each(|v| *v = 0.0);
        for mask in 0..corners {
            let mut base = 0usize;
            let mut negative = false;
            for (axis, &c) in choice.iter().enumerate() {
                let seg = head[axis][c];
                if mask >> axis & 1 == 1 {
                    base += seg.lo * pg.strides[axis];
                    negative = !negative;
                } else {
                    base += seg.hi * pg.strides[axis];
                }
            }
            let row = &pg.data[base..base + m + 1];
            if negative {
                s.iter_mut().zip(row).for_each(|(a, b)| *a -= b);
            } else {
                s.iter_mut().zip(row).for_each(|(a, b)| *a += b);
            }
        }
        if exclude_zero && last[0] == 0.0 {
            s[0] = s[1];
        }
        best = best.max(scan_last(&s, last, vol, kind));

        let mut axis = d - 1;
        loop {
            if axis == 0 {
                return Ok(best);
            }
            axis -= 1;
            choice[axis] += 1;
            if choice[axis] < head[axis].len() {
                break;
            }
            choice[axis] = 0;
        }
    }
}

/// Best value over ranges of the last axis, given `s[t]` = mass of the head box
/// times ranks `< t` on the last axis, and the head box volume `vol`.
fn scan_last(s: &[f64], g: &[f64], vol: f64, kind: Sweep) -> f64 {
    let m = g.len();
    let mut best = f64::NEG_INFINITY;
    match kind {
        Sweep::ClosedExcess => {
            // ranks [a, b], a ≤ b: (s[b+1] − vol·g_b) − (s[a] − vol·g_a)
            let mut low = f64::INFINITY;
            for b in 0..m {
                low = low.min(s[b] - vol * g[b]);
                best = best.max(s[b + 1] - vol * g[b] - low);
            }
        }
        Sweep::OpenDeficit => {
            // corners lo < hi, ranks [lo+1, hi−1]: (vol·g_hi − s[hi]) − (vol·g_lo − s[lo+1])
            let mut low = f64::INFINITY;
            for hi in 1..m {
                low = low.min(vol * g[hi - 1] - s[hi]);
                best = best.max(vol * g[hi] - s[hi] - low);
            }
        }
        Sweep::AbsClosed => {
            let mut low = f64::INFINITY;
            let mut high = f64::NEG_INFINITY;
            for b in 0..m {
                low = low.min(s[b]);
                high = high.max(s[b]);
                best = best.max(s[b + 1] - low).max(high - s[b + 1]);
            }
        }
    }
    best.max(0.0)
}

/// Kolmogorov–Smirnov distance in 1D by sorting and a single merge scan.
pub fn ks_distance_1d(mu: &DiscreteMeasure, nu: &Measure) -> Result<f64> {
    if mu.dim() != 1 || nu.dim() != 1 {
        let other = if mu.dim() != 1 { mu.dim() } else { nu.dim() };
        return Err(Error::DimensionMismatch { left: 1, right: other });
    }
    let sorted_atoms = |m: &DiscreteMeasure| {
        let mut atoms: Vec<(f64, f64)> = m.coords().iter().map(|c| c + 0.0).zip(m.weights().iter().copied()).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // aggregate equal coordinates
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (c, w) in atoms {
            match out.last_mut() {
                Some(last) if last.0 == c => last.1 += w,
                _ => out.push((c, w)),
            }
        }
        out
    };
    let a = sorted_atoms(mu);
    let value = match nu {
        Measure::UniformCube(_) => {
            if !Measure::Discrete(mu.clone()).on_unit_cube() {
                return Err(Error::OutOfDomain("KS distance to the uniform law needs support in [0,1]".into()));
            }
            let mut best = 0.0_f64;
            let mut cum = 0.0;
            for &(c, w) in &a {
                let before = cum;
                cum += w;
                best = best.max(c - before).max(cum - c);
            }
            best.max(1.0 - cum)
        }
        Measure::Discrete(nu) => {
            let b = sorted_atoms(nu);
            let (mut i, mut j) = (0, 0);
            let mut cum = 0.0;
            let mut best = 0.0_f64;
            while i < a.len() || j < b.len() {
                let c = match (a.get(i), b.get(j)) {
                    (Some(x), Some(y)) => x.0.min(y.0),
                    (Some(x), None) => x.0,
                    (None, Some(y)) => y.0,
                    (None, None) => unreachable!(),
                };
                let mut pa = 0.0;
                let mut pb = 0.0;
                if i < a.len() && a[i].0 == c {
                    pa = a[i].1;
                    i += 1;
                }
                if j < b.len() && b[j].0 == c {
                    pb = b[j].1;
                    j += 1;
                }
                cum += pa - pb;
                best = best.max(cum.abs());
            }
            best
        }
    };
    Ok(value.clamp(0.0, 1.0))
}
