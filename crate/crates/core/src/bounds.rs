//! Closed-form upper bounds relating Wasserstein distances and discrepancies,
//! together with the explicit constants that enter them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, regime, Result};
use crate::measures::Norm;

/// Which formula produced a [`BoundResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    PgtD,
    PeqD,
    PltD,
    Refined,
    #[serde(rename = "RD_shape")]
    RdShape,
    Reverse,
    Moment1D,
    Exp1D,
    W1Refined,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::PgtD => "PgtD",
            Regime::PeqD => "PeqD",
            Regime::PltD => "PltD",
            Regime::Refined => "Refined",
            Regime::RdShape => "RD_shape",
            Regime::Reverse => "Reverse",
            Regime::Moment1D => "Moment1D",
            Regime::Exp1D => "Exp1D",
            Regime::W1Refined => "W1Refined",
        }
    }
}

/// Extra term added to `constant · base^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SecondaryTerm {
    /// `coefficient · base^exponent`
    Power { coefficient: f64, exponent: f64 },
    /// `coefficient · base · log(1/base)`, zero at `base = 0`
    XLogInvX { coefficient: f64 },
}

impl SecondaryTerm {
    fn eval(self, base: f64) -> f64 {
        match self {
            SecondaryTerm::Power { coefficient, exponent } => coefficient * pow0(base, exponent),
            SecondaryTerm::XLogInvX { coefficient } => coefficient * xlog_inv(base),
        }
    }
}

/// One evaluated bound: `value = constant · base^exponent + secondary(base)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub regime: Regime,
    pub constant: f64,
    pub exponent: f64,
    /// The discrepancy (or distance) the bound is a function of.
    pub base: f64,
    pub secondary: Option<SecondaryTerm>,
    /// True when the leading constant is a caller-supplied placeholder.
    pub shape_only: bool,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundResult {
    fn build(
        regime: Regime,
        constant: f64,
        exponent: f64,
        base: f64,
        secondary: Option<SecondaryTerm>,
        inputs: &[(&str, f64)],
    ) -> Self {
        let mut r = BoundResult {
            value: 0.0,
            regime,
            constant,
            exponent,
            base,
            secondary,
            shape_only: false,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        r.value = r.recompute();
        r
    }

    /// Single-term bound `constant · base^exponent`.
    pub fn power(regime: Regime, constant: f64, exponent: f64, base: f64, inputs: &[(&str, f64)]) -> Self {
        Self::build(regime, constant, exponent, base, None, inputs)
    }

    /// Re-evaluates the formula from the stored pieces.
    pub fn recompute(&self) -> f64 {
        let lead = self.constant * pow0(self.base, self.exponent);
        lead + self.secondary.map_or(0.0, |s| s.eval(self.base))
    }

    pub fn input(&self, key: &str) -> Option<f64> {
        self.inputs.get(key).copied()
    }
}

/// `x^e` with `0^e = 0` for every `e > 0`.
fn pow0(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        if e == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        x.powf(e)
    }
}

/// `x · log(1/x)` continued by 0 at the origin.
fn xlog_inv(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("{name} must lie in [0, 1], got {x}"));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return domain(format!("p must be a finite real >= 1, got {p}"));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    Ok(())
}

/// `(2^p + 1) / (2 (2^{p-d} − 1))`, defined for `p > d`.
pub fn b_pd(p: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(p > d as f64) {
        return regime(format!("b_pd needs p > d, got p = {p}, d = {d}"));
    }
    Ok((p.exp2() + 1.0) / (2.0 * ((p - d as f64).exp2() - 1.0)))
}

/// Upper bound on `W_p^p` on the unit cube as a function of the uniform
/// discrepancy, with the formula picked by comparing `p` and `d`.
pub fn bound_cube(p: f64, d: usize, dinf: f64, norm: Norm) -> Result<BoundResult> {
    check_p(p)?;
    check_dim(d)?;
    check_unit("Dinf", dinf)?;
    let df = d as f64;
    let diam_p = norm.diameter(d).powf(p);
    let inputs = [("p", p), ("d", df), ("Dinf", dinf)];
    Ok(if p > df {
        BoundResult::power(Regime::PgtD, diam_p * b_pd(p, d)?, 1.0, dinf, &inputs)
    } else if p == df {
        let two_d = df.exp2();
        let lead = diam_p * ((df + 1.0) * (df - 1.0).exp2() / df + 1.0 / (2.0 * df));
        let log_coef = diam_p * (two_d + 1.0) / (2.0 * df * std::f64::consts::LN_2);
        BoundResult::build(Regime::PeqD, lead, 1.0, dinf, Some(SecondaryTerm::XLogInvX { coefficient: log_coef }), &inputs)
    } else {
        let c = (-p / df).exp2() * ((p.exp2() + 1.0) / (1.0 - (p - df).exp2()) + p.exp2());
        BoundResult::power(Regime::PltD, diam_p * c, p / df, dinf, &inputs)
    })
}

/// `1 + 2^{-p} − 2^{p-d}`; the refined bound applies when this is positive.
pub fn refined_window(p: f64, d: usize) -> f64 {
    1.0 + (-p).exp2() - (p - d as f64).exp2()
}

/// Two-term refinement of the `p > d` bound, valid only inside its window.
pub fn bound_cube_refined(p: f64, d: usize, dinf: f64, norm: Norm) -> Result<BoundResult> {
    check_p(p)?;
    check_dim(d)?;
    check_unit("Dinf", dinf)?;
    let df = d as f64;
    let w = refined_window(p, d);
    if !(p > df && w > 0.0) {
        return regime(format!("refined bound needs p > d and 1 + 2^-p - 2^(p-d) > 0 (p = {p}, d = {d})"));
    }
    let scale = norm.diameter(d).powf(p) / ((p - df).exp2() - 1.0);
    let lead = scale * (p.exp2() + 1.0) / 2.0;
    let second = -scale * (p * (1.0 - 1.0 / df)).exp2() * w;
    Ok(BoundResult::build(
        Regime::Refined,
        lead,
        1.0,
        dinf,
        Some(SecondaryTerm::Power { coefficient: second, exponent: p / df }),
        &[("p", p), ("d", df), ("Dinf", dinf)],
    ))
}

/// `(3(d−1) / (2(1 − 2^{1-d})))^{1/d} · 2d/(d−1)`, shared by both W_1 refinements.
fn refined_core(d: usize) -> f64 {
    let df = d as f64;
    (3.0 * (df - 1.0) / (2.0 * (1.0 - (1.0 - df).exp2()))).powf(1.0 / df) * 2.0 * df / (df - 1.0)
}

/// Universal constant of the W_1 versus star discrepancy bound.
pub fn kappa(d: usize) -> Result<f64> {
    if d < 2 {
        return regime(format!("kappa needs d >= 2, got {d}"));
    }
    Ok((1.0 - 1.0 / d as f64).exp2() * refined_core(d))
}

/// W_1 bound in terms of the uniform discrepancy, `d ≥ 2`.
pub fn bound_w1_refined(d: usize, dinf: f64, norm: Norm) -> Result<BoundResult> {
    if d < 2 {
        return regime(format!("refined W_1 bound needs d >= 2, got {d}"));
    }
    check_unit("Dinf", dinf)?;
    let df = d as f64;
    let c = norm.diameter(d) * (-1.0 / df).exp2() * refined_core(d);
    Ok(BoundResult::power(Regime::W1Refined, c, 1.0 / df, dinf, &[("d", df), ("Dinf", dinf)]))
}

/// W_1 bound in terms of the star discrepancy: `𝔡 · κ_d · D*^{1/d}`.
pub fn bound_w1_refined_star(d: usize, dstar: f64, norm: Norm) -> Result<BoundResult> {
    let k = kappa(d)?;
    check_unit("Dstar", dstar)?;
    let df = d as f64;
    Ok(BoundResult::power(Regime::W1Refined, norm.diameter(d) * k, 1.0 / df, dstar, &[("d", df), ("Dstar", dstar)]))
}

fn check_tech(u: f64, dinf: f64, p: f64) -> Result<()> {
    if !(u > 0.0 && u.is_finite()) {
        return domain(format!("u must be positive and finite, got {u}"));
    }
    if !(dinf > 0.0 && dinf <= 1.0) {
        return domain(format!("Dinf must lie in (0, 1], got {dinf}"));
    }
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("p must be positive, got {p}"));
    }
    Ok(())
}

/// `L(u) = Σ_{ℓ≥0} 2^{-pℓ} min(u, 2^{dℓ} D)`.
///
/// Terms are added one by one until `2^{dℓ} D ≥ u`; from there every term
/// is `u 2^{-pℓ}` and the geometric remainder is added in closed form.
pub fn tech_l(u: f64, dinf: f64, p: f64, d: usize) -> Result<f64> {
    check_tech(u, dinf, p)?;
    check_dim(d)?;
    let df = d as f64;
    let mut sum = 0.0;
    let mut level = 0.0_f64;
    loop {
        let cell = (df * level).exp2() * dinf;
        if cell >= u {
            return Ok(sum + u * (-p * level).exp2() / (1.0 - (-p).exp2()));
        }
        sum += (-p * level).exp2() * cell;
        level += 1.0;
    }
}

/// Explicit case-by-case majorant of [`tech_l`].
pub fn tech_l_case_bound(u: f64, dinf: f64, p: f64, d: usize) -> Result<f64> {
    check_tech(u, dinf, p)?;
    check_dim(d)?;
    let df = d as f64;
    let geo = u / (1.0 - (-p).exp2());
    if p > df {
        return Ok(geo.min(dinf / (1.0 - (df - p).exp2())));
    }
    if u < (-df).exp2() * dinf {
        return Ok(geo);
    }
    Ok(if p == df {
        (1.0 + 1.0 / (1.0 - (-p).exp2()) + (u / dinf).ln() / (df * std::f64::consts::LN_2)) * dinf
    } else {
        (1.0 / (1.0 - (p - df).exp2()) + 1.0 / (p.exp2() - 1.0)) * dinf.powf(p / df) * u.powf(1.0 - p / df)
    })
}

/// Shape of the `ℝ^d` bound with a caller-supplied leading constant.
pub fn bound_rd_shape(p: f64, q: f64, d: usize, dinf: f64, mq: f64, kappa_user: f64) -> Result<BoundResult> {
    check_p(p)?;
    check_dim(d)?;
    check_unit("Dinf", dinf)?;
    let df = d as f64;
    if !(q > p) {
        return regime(format!("need q > p, got p = {p}, q = {q}"));
    }
    let split = df * q / (q + df);
    if p == df || p == split {
        return regime(format!("p = {p} is excluded (p = d or p = dq/(q+d))"));
    }
    if !(mq >= 0.0 && mq.is_finite()) {
        return domain(format!("moment must be nonnegative, got {mq}"));
    }
    if !(kappa_user > 0.0 && kappa_user.is_finite()) {
        return domain(format!("constant must be positive, got {kappa_user}"));
    }
    let e = if p < split { p / df } else { 1.0 - p / q };
    let mut r = BoundResult::power(
        Regime::RdShape,
        kappa_user * mq.max(1.0),
        e,
        dinf,
        &[("p", p), ("q", q), ("d", df), ("Dinf", dinf), ("Mq", mq), ("kappa", kappa_user)],
    );
    r.shape_only = true;
    Ok(r)
}

fn check_moment_inputs(q: f64, mq: f64, dstar: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return domain(format!("q must exceed 1, got {q}"));
    }
    if !(mq >= 0.0 && mq.is_finite()) {
        return domain(format!("moment must be nonnegative, got {mq}"));
    }
    check_unit("Dstar", dstar)
}

/// `2 · M_q · D*^{1−1/q}` with `M_q = ½∫|ξ|^q d(μ+ν)`.
pub fn bound_w1_1d_moment(q: f64, mq: f64, dstar: f64) -> Result<f64> {
    check_moment_inputs(q, mq, dstar)?;
    Ok(2.0 * mq * pow0(dstar, 1.0 - 1.0 / q))
}

/// `2q/(q−1) · M_q^{1/q} · D*^{1−1/q}`, the scale-consistent variant.
pub fn bound_w1_1d_moment_homogeneous(q: f64, mq: f64, dstar: f64) -> Result<f64> {
    check_moment_inputs(q, mq, dstar)?;
    Ok(2.0 * q / (q - 1.0) * mq.powf(1.0 / q) * pow0(dstar, 1.0 - 1.0 / q))
}

/// `(1/λ)(E_exp · D* + 2 D* log(1/D∞))` where `E_exp = ∫e^{λ|ξ|} d(μ+ν)`.
pub fn bound_w1_1d_exp(lambda: f64, eexp: f64, dstar: f64, dinf: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(eexp >= 2.0 && eexp.is_finite()) {
        return domain(format!("exponential moment must be at least 2, got {eexp}"));
    }
    check_unit("Dstar", dstar)?;
    if dstar == 0.0 {
        return Ok(0.0);
    }
    if !(dinf > 0.0 && dinf <= 1.0) {
        return domain(format!("Dinf must lie in (0, 1], got {dinf}"));
    }
    Ok((eexp * dstar - 2.0 * dstar * dinf.ln()) / lambda)
}

/// `binom(r+d, r)^{-1/(r+d)} ((d/r)^{r/(r+d)} + (r/d)^{d/(r+d)})`, Gamma extension for real `r`.
pub fn c_rd(r: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(r >= 1.0 && r.is_finite()) {
        return domain(format!("r must be a finite real >= 1, got {r}"));
    }
    let df = d as f64;
    let s = r + df;
    let ln_binom = ln_gamma(s + 1.0) - ln_gamma(r + 1.0) - ln_gamma(df + 1.0);
    Ok((-ln_binom / s).exp() * ((df / r).powf(r / s) + (r / df).powf(df / s)))
}

/// Star discrepancy bound `C_{r,d} · W_1^{d/(r+d)} · ‖g‖^{r/(r+d)}` against a measure with density `g`.
pub fn reverse_bound(r: f64, d: usize, w1: f64, g_norm: f64) -> Result<BoundResult> {
    let c = c_rd(r, d)?;
    if !(w1 >= 0.0 && w1.is_finite()) {
        return domain(format!("W_1 must be nonnegative, got {w1}"));
    }
    if !(g_norm > 0.0 && g_norm.is_finite()) {
        return domain(format!("density norm must be positive, got {g_norm}"));
    }
    let df = d as f64;
    let s = r + df;
    Ok(BoundResult::power(
        Regime::Reverse,
        c * g_norm.powf(r / s),
        df / s,
        w1,
        &[("r", r), ("d", df), ("W1", w1), ("g_norm", g_norm)],
    ))
}
