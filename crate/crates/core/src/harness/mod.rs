//! Experiment driver: generates instances, evaluates both sides of every
//! inequality and collects the outcomes into reports.

mod config;
mod report;

use std::collections::BTreeMap;
use std::io::Write;

pub use config::{instances, ExperimentConfig, Family, Instance, MAX_GRID_CAP, MAX_PAIR_CAP, MAX_SUPPORT_CAP};
pub use report::{
    emit_report, parse_records_csv, parse_report_json, passes, write_report, CheckRecord, Report, ReportFormat,
    Summary, PASS_ABS_SLACK, PASS_REL_SLACK,
};

use crate::bounds::{
    bound_cube, bound_cube_refined, bound_w1_refined, bound_w1_refined_star, refined_window, reverse_bound,
};
use crate::discrepancy::{
    ks_distance_1d, star_discrepancy_with, uniform_discrepancy_with, BoxConvention, DiscrepancyOptions,
};
use crate::error::{Error, Result};
use crate::measures::{iid_uniform, DiscreteMeasure, Domain, Measure, Norm};
use crate::multiscale::{delta_profile, multiscale_from_deltas, unbounded_stop_level, LevelCutoff};
use crate::transport::{
    default_discretization_level, discretization_bias, discretize_uniform, solve_exact, w1_lower_bound_semidiscrete,
    wasserstein_1d_cost, ExactSolution, TransportOptions, MAX_DISCRETIZATION_CELLS,
};

/// Which family of checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Sandwich,
    WpVsDinf,
    Reverse,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sandwich" => Ok(Suite::Sandwich),
            "wpvsdinf" | "wasserstein" => Ok(Suite::WpVsDinf),
            "reverse" => Ok(Suite::Reverse),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!("unknown suite `{other}`"))),
        }
    }
}

pub fn run_suite(cfg: &ExperimentConfig, suite: Suite) -> Result<Report> {
    cfg.validate()?;
    let mut records = Vec::new();
    if matches!(suite, Suite::Sandwich | Suite::All) {
        records.extend(check_sandwich(cfg)?);
    }
    if matches!(suite, Suite::WpVsDinf | Suite::All) {
        records.extend(check_wp_vs_dinf(cfg)?);
    }
    if matches!(suite, Suite::Reverse | Suite::All) {
        records.extend(check_reverse(cfg)?);
    }
    Ok(Report::new(cfg.clone(), records))
}

fn disc_opts(cfg: &ExperimentConfig) -> DiscrepancyOptions {
    DiscrepancyOptions { grid_cap: cfg.grid_cap as u128, pair_cap: cfg.pair_cap as u128 }
}

fn is_cap(e: &Error) -> bool {
    matches!(e, Error::GridTooLarge { .. } | Error::SupportTooLarge { .. })
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn instance_params(cfg: &ExperimentConfig, inst: &Instance) -> BTreeMap<String, String> {
    let mut p = BTreeMap::new();
    p.insert("family".into(), cfg.family.to_string());
    p.insert("n".into(), inst.n.to_string());
    p.insert("d".into(), cfg.d.to_string());
    p.insert("trial".into(), inst.trial.to_string());
    p
}

fn with(params: &BTreeMap<String, String>, extra: &[(&str, String)]) -> BTreeMap<String, String> {
    let mut p = params.clone();
    for (k, v) in extra {
        p.insert(k.to_string(), v.clone());
    }
    p
}

/// `D* ≤ D∞` and `D∞ ≤ 2^d D*` for one pair.
pub fn sandwich_pair(
    mu: &Measure,
    nu: &Measure,
    params: &BTreeMap<String, String>,
    opts: &DiscrepancyOptions,
) -> Result<Vec<CheckRecord>> {
    let both = |e: Error| {
        Ok(vec![
            CheckRecord::skip("sandwich_lower", params.clone(), e.to_string()),
            CheckRecord::skip("sandwich_upper", params.clone(), e.to_string()),
        ])
    };
    let ds = match star_discrepancy_with(mu, nu, opts) {
        Ok(v) => v,
        Err(e) if is_cap(&e) => return both(e),
        Err(e) => return Err(e),
    };
    let dinf = match uniform_discrepancy_with(mu, nu, BoxConvention::Closed, opts) {
        Ok(v) => v,
        Err(e) if is_cap(&e) => return both(e),
        Err(e) => return Err(e),
    };
    let scale = 2f64.powi(mu.dim() as i32);
    Ok(vec![
        CheckRecord::new("sandwich_lower", params.clone(), ds, dinf),
        CheckRecord::new("sandwich_upper", params.clone(), dinf, scale * ds),
    ])
}

pub fn check_sandwich(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let opts = disc_opts(cfg);
    let u = Measure::UniformCube(cfg.d);
    let mut out = Vec::new();
    for inst in instances(cfg)? {
        let params = instance_params(cfg, &inst);
        out.extend(sandwich_pair(&Measure::Discrete(inst.measure), &u, &params, &opts)?);
    }
    Ok(out)
}

/// Both discrepancies against the uniform law, or the cap error as a skip reason.
fn discrepancies_vs_uniform(mu: &DiscreteMeasure, opts: &DiscrepancyOptions) -> Result<std::result::Result<(f64, f64), String>> {
    let m = Measure::Discrete(mu.clone());
    let u = Measure::UniformCube(mu.dim());
    let ds = match star_discrepancy_with(&m, &u, opts) {
        Ok(v) => v,
        Err(e) if is_cap(&e) => return Ok(Err(e.to_string())),
        Err(e) => return Err(e),
    };
    match uniform_discrepancy_with(&m, &u, BoxConvention::Closed, opts) {
        Ok(v) => Ok(Ok((ds, v))),
        Err(e) if is_cap(&e) => Ok(Err(e.to_string())),
        Err(e) => Err(e),
    }
}

/// Exact solve against the dyadic midpoint discretization `U_ℓ` of the uniform law.
struct Discretized {
    level: u32,
    /// Upper bound on `W_p(U, U_ℓ)`.
    bias: f64,
    uniform: DiscreteMeasure,
    sol: ExactSolution,
}

/// Solves against `U_ℓ` at the default level, or returns a skip reason on caps.
fn solve_vs_discretized(
    mu: &DiscreteMeasure,
    p: f64,
    norm: Norm,
    support_cap: usize,
) -> Result<std::result::Result<Discretized, String>> {
    let d = mu.dim();
    let level = default_discretization_level(mu.len(), d);
    let cells = 1u128 << (d as u32 * level);
    if cells + mu.len() as u128 > support_cap as u128 {
        let e = Error::SupportTooLarge { size: cells as usize + mu.len(), cap: support_cap };
        return Ok(Err(e.to_string()));
    }
    let uniform = discretize_uniform(d, level)?;
    let sol = match solve_exact(mu, &uniform, p, norm, &TransportOptions { support_cap }) {
        Ok(s) => s,
        Err(e) if is_cap(&e) => return Ok(Err(e.to_string())),
        Err(e) => return Err(e),
    };
    let bias = discretization_bias(d, level, p, norm)?;
    Ok(Ok(Discretized { level, bias, uniform, sol }))
}

/// Finest grid level whose potential evaluation stays within a fixed budget.
fn fine_level(d: usize, anchors: usize) -> u32 {
    const BUDGET: u128 = 1 << 26;
    let mut level = 1;
    while (1u128 << (d as u32 * (level + 1))) * anchors as u128 <= BUDGET
        && (1u128 << (d as u32 * (level + 1))) <= MAX_DISCRETIZATION_CELLS
    {
        level += 1;
    }
    level
}

/// Multiscale records `lhs ≤ bound(ℓ0)` for `ℓ0 = 0..=max_level` and the unbounded cutoff.
fn multiscale_records(
    mu: &Measure,
    nu: &Measure,
    lhs: f64,
    p: f64,
    norm: Norm,
    max_level: u32,
    params: &BTreeMap<String, String>,
) -> Result<Vec<CheckRecord>> {
    let levels = max_level.max(unbounded_stop_level(p));
    let deltas = delta_profile(mu, nu, levels)?;
    let diam = norm.diameter(mu.dim());
    let mut out = Vec::new();
    for l0 in 0..=max_level {
        let rhs = multiscale_from_deltas(&deltas, p, LevelCutoff::Finite(l0), diam)?;
        out.push(CheckRecord::new("multiscale_upper", with(params, &[("l0", l0.to_string())]), lhs, rhs));
    }
    let rhs = multiscale_from_deltas(&deltas, p, LevelCutoff::Unbounded, diam)?;
    out.push(CheckRecord::new("multiscale_upper", with(params, &[("l0", "unbounded".into())]), lhs, rhs));
    Ok(out)
}

/// Bound records given an upper estimate of `W_p^p` (and of `W_1` when `p = 1`).
fn bound_records(
    d: usize,
    p: f64,
    norm: Norm,
    wpp: f64,
    ds: f64,
    dinf: f64,
    params: &BTreeMap<String, String>,
) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let b = bound_cube(p, d, dinf, norm)?;
    out.push(CheckRecord::new("wp_vs_dinf", with(params, &[("regime", b.regime.name().into())]), wpp, b.value));
    if p > d as f64 && refined_window(p, d) > 0.0 {
        let b = bound_cube_refined(p, d, dinf, norm)?;
        out.push(CheckRecord::new("wp_vs_dinf", with(params, &[("regime", b.regime.name().into())]), wpp, b.value));
    }
    if p == 1.0 {
        if d == 1 {
            out.push(CheckRecord::new("w1_vs_dstar_1d", params.clone(), wpp, ds));
        } else {
            let b = bound_w1_refined(d, dinf, norm)?;
            out.push(CheckRecord::new("w1_refined", with(params, &[("form", "dinf".into())]), wpp, b.value));
            let b = bound_w1_refined_star(d, ds, norm)?;
            out.push(CheckRecord::new("w1_refined", with(params, &[("form", "dstar".into())]), wpp, b.value));
        }
    }
    Ok(out)
}

/// `W_p^p` against the uniform law versus the discrepancy bounds, and the
/// multiscale bound at every cutoff.
///
/// In dimension 1 the transport cost is exact. For `d ≥ 2` the uniform law is
/// replaced by its level-`ℓ` midpoint discretization `U_ℓ`: the bound checks use
/// `(W_p(μ,U_ℓ) + bias)^p ≥ W_p^p(μ,U)`, and the multiscale checks compare
/// `W_p^p(μ,U_ℓ)` with the multiscale bound of the pair `(μ, U_ℓ)`.
pub fn check_wp_vs_dinf(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let opts = disc_opts(cfg);
    let d = cfg.d;
    let u = Measure::UniformCube(d);
    let mut out = Vec::new();
    for inst in instances(cfg)? {
        let base = with(&instance_params(cfg, &inst), &[("norm", cfg.norm.to_string())]);
        let (ds, dinf) = match discrepancies_vs_uniform(&inst.measure, &opts)? {
            Ok(v) => v,
            Err(reason) => {
                out.push(CheckRecord::skip("wp_vs_dinf", base, reason));
                continue;
            }
        };
        let mu = Measure::Discrete(inst.measure.clone());
        for &p in &cfg.p {
            let params = with(&base, &[("p", num(p))]);
            if d == 1 {
                let wpp = wasserstein_1d_cost(&inst.measure, &u, p)?;
                out.extend(bound_records(d, p, cfg.norm, wpp, ds, dinf, &params)?);
                out.extend(multiscale_records(&mu, &u, wpp, p, cfg.norm, cfg.max_level, &params)?);
                continue;
            }
            match solve_vs_discretized(&inst.measure, p, cfg.norm, cfg.support_cap)? {
                Err(reason) => out.push(CheckRecord::skip("wp_vs_dinf", params, reason)),
                Ok(disc) => {
                    let params = with(&params, &[("level", disc.level.to_string()), ("bias", num(disc.bias))]);
                    let w = disc.sol.value + disc.bias;
                    let upper = if p == 1.0 { w } else { w.powf(p) };
                    out.extend(bound_records(d, p, cfg.norm, upper, ds, dinf, &params)?);
                    let nu = Measure::Discrete(disc.uniform);
                    let params = with(&params, &[("nu", "discretized".into())]);
                    let cost_p = disc.sol.plan.cost_p;
                    out.extend(multiscale_records(&mu, &nu, cost_p, p, cfg.norm, cfg.max_level, &params)?);
                }
            }
        }
    }
    Ok(out)
}

/// Reverse-bound records `D*(μ,ν) ≤ C_{r,d} W_1^{d/(r+d)}` for each `r`.
///
/// Only `ν = UniformCube` has a density; a discrete `ν` yields skip records.
/// For `d ≥ 2`, `W_1` (ℓ∞ norm) is replaced by the certified lower bound of
/// [`w1_lower_bound_semidiscrete`].
const REVERSE_WORK_LEVEL: u32 = 6;
const REVERSE_ITERS: usize = 100;

pub fn reverse_pair(
    mu: &DiscreteMeasure,
    nu: &Measure,
    rs: &[f64],
    params: &BTreeMap<String, String>,
    opts: &DiscrepancyOptions,
) -> Result<Vec<CheckRecord>> {
    let per_r = |reason: &str| -> Vec<CheckRecord> {
        rs.iter()
            .map(|&r| CheckRecord::skip("reverse", with(params, &[("r", num(r))]), reason))
            .collect()
    };
    if !matches!(nu, Measure::UniformCube(_)) {
        return Ok(per_r("no density"));
    }
    let d = mu.dim();
    let ds = match star_discrepancy_with(&Measure::Discrete(mu.clone()), nu, opts) {
        Ok(v) => v,
        Err(e) if is_cap(&e) => return Ok(per_r(&e.to_string())),
        Err(e) => return Err(e),
    };
    let (w1, extra) = if d == 1 {
        (wasserstein_1d_cost(mu, nu, 1.0)?, vec![])
    } else {
        let fine = fine_level(d, mu.len());
        let lower = w1_lower_bound_semidiscrete(mu, Norm::LInf, REVERSE_WORK_LEVEL.min(fine), REVERSE_ITERS, fine)?;
        (lower.max(0.0), vec![("fine_level", fine.to_string())])
    };
    let params = with(params, &extra);
    rs.iter()
        .map(|&r| {
            let b = reverse_bound(r, d, w1, 1.0)?;
            Ok(CheckRecord::new("reverse", with(&params, &[("r", num(r))]), ds, b.value))
        })
        .collect()
}

pub fn check_reverse(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let opts = disc_opts(cfg);
    let u = Measure::UniformCube(cfg.d);
    let mut out = Vec::new();
    for inst in instances(cfg)? {
        let params = instance_params(cfg, &inst);
        out.extend(reverse_pair(&inst.measure, &u, &cfg.r, &params, &opts)?);
    }
    Ok(out)
}

/// One row of the iterated-logarithm table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LilRow {
    pub n: usize,
    pub dstar: f64,
    /// `sqrt(2n / log log n) · D*`.
    pub scaled: f64,
}

/// `sqrt(2n / log log n) · D*(U_1..U_n)` for `n = 8, 16, 32, …, ≤ n_max`, where
/// `U_k` are the prefixes of one i.i.d. uniform stream.
pub fn lil_demo(seed: u64, n_max: usize) -> Result<Vec<LilRow>> {
    let mut rows = Vec::new();
    if n_max < 8 {
        return Ok(rows);
    }
    let stream = iid_uniform(n_max, 1, seed)?;
    let u = Measure::UniformCube(1);
    let mut n = 8;
    while n <= n_max {
        let prefix = DiscreteMeasure::empirical_flat(1, stream.coords()[..n].to_vec(), Domain::UnitCube)?;
        let dstar = ks_distance_1d(&prefix, &u)?;
        let nf = n as f64;
        rows.push(LilRow { n, dstar, scaled: (2.0 * nf / nf.ln().ln()).sqrt() * dstar });
        n *= 2;
    }
    Ok(rows)
}

pub fn write_lil_csv<W: Write>(w: W, rows: &[LilRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["n", "dstar", "scaled"])?;
    for r in rows {
        csv.write_record([r.n.to_string(), format!("{:.16e}", r.dstar), format!("{:.16e}", r.scaled)])?;
    }
    csv.flush()?;
    Ok(())
}
