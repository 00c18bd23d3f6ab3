//! Continued fractions and the Dujella–Pethő reduction.
//!
//! Partial quotients of a [`PrecReal`] are certified by expanding both ends
//! of an interval that contains the value (the twin difference plus a
//! relative 2^(−2p) margin) and keeping the common prefix, minus its last
//! element. [`reduce_chain`] replays the full reduction that brings the
//! absolute bound on n below 250.

use std::fmt::Display;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::baker::{bound_n_in_k, deweger_factor};
use crate::numerics::{parse_decimal, NumericsError, PrecReal, Sign, MAX_PRECISION_BITS};
use crate::sequences::{dominant_coefficient_is_one, PellLucasContext, SequenceError};

/// Convergents scanned past the first q > 6M before giving up.
pub const MAX_EXTRA_CONVERGENTS: usize = 200;

/// Consecutive non-positive ε with the same integer ratio ‖μ̂q‖/‖τ̂q‖ that
/// mark μ̂ as an integer combination of τ̂ and 1.
const DEGENERACY_RUN: usize = 6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ReductionError {
    #[error("continued fraction too short: need a denominator above {needed}, certified up to index {available}")]
    CfTooShort { needed: String, available: usize },
    #[error("sign of epsilon undecided at convergent {index}")]
    Undecided { index: usize },
    #[error("reduction failed: no positive epsilon among {scanned} convergents past 6M, extend expansion")]
    NoPositiveEpsilon { scanned: usize },
    #[error("degenerate mu: ||mu q|| = {multiple}·||tau q|| on consecutive convergents")]
    DegenerateMu { multiple: u64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

impl ReductionError {
    /// Errors that more precision can fix.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ReductionError::CfTooShort { .. } | ReductionError::Undecided { .. }
        )
    }
}

/// Partial quotients a₀, a₁, … and convergents p_k/q_k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub partial_quotients: Vec<Integer>,
    pub convergents: Vec<(Integer, Integer)>,
    /// The source was an exact rational and the expansion is complete.
    pub terminated: bool,
}

impl ContinuedFraction {
    pub fn from_quotients(partial_quotients: Vec<Integer>, terminated: bool) -> Self {
        let mut convergents = Vec::with_capacity(partial_quotients.len());
        let (mut p2, mut q2) = (Integer::from(0), Integer::from(1));
        let (mut p1, mut q1) = (Integer::from(1), Integer::from(0));
        for a in &partial_quotients {
            let p = Integer::from(a * &p1) + &p2;
            let q = Integer::from(a * &q1) + &q2;
            p2 = std::mem::replace(&mut p1, p.clone());
            q2 = std::mem::replace(&mut q1, q.clone());
            convergents.push((p, q));
        }
        ContinuedFraction {
            partial_quotients,
            convergents,
            terminated,
        }
    }

    pub fn len(&self) -> usize {
        self.partial_quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partial_quotients.is_empty()
    }

    pub fn denominator(&self, index: usize) -> &Integer {
        &self.convergents[index].1
    }

    /// First index whose denominator exceeds `bound`.
    pub fn first_index_above(&self, bound: &Integer) -> Option<usize> {
        self.convergents.iter().position(|(_, q)| q > bound)
    }
}

/// Expansion of n/d (d > 0) while both ends of [lo, hi] agree.
fn common_prefix(lo: &Rational, hi: &Rational, limit: usize) -> (Vec<Integer>, bool) {
    let (mut ln, mut ld) = (lo.numer().clone(), lo.denom().clone());
    let (mut hn, mut hd) = (hi.numer().clone(), hi.denom().clone());
    let exact = lo == hi;
    let mut out = Vec::new();
    while out.len() < limit {
        let (al, rl) = ln.clone().div_rem_floor(ld.clone());
        let (ah, rh) = hn.clone().div_rem_floor(hd.clone());
        if al != ah {
            break;
        }
        out.push(al);
        if rl.is_zero() || rh.is_zero() {
            return (out, exact && rl.is_zero());
        }
        ln = std::mem::replace(&mut ld, rl);
        hn = std::mem::replace(&mut hd, rh);
    }
    (out, false)
}

/// All partial quotients certified at the precision of `x`.
pub fn certified_quotients(x: &PrecReal) -> Result<(Vec<Integer>, bool), ReductionError> {
    if let Some(r) = x.exact().and_then(|q| q.as_rational()) {
        return Ok(common_prefix(r, r, usize::MAX));
    }
    if !x.is_certified() {
        return Err(NumericsError::PrecisionExhausted { max_bits: x.prec() }.into());
    }
    let r1 = x.value().to_rational().ok_or(NumericsError::Pole)?;
    let r2 = x.check().to_rational().ok_or(NumericsError::Pole)?;
    let margin = Rational::from(r2.abs_ref()) / Rational::from(Integer::from(1) << (2 * x.prec()));
    let d = Rational::from(&r1 - &r2).abs() + margin;
    let lo = Rational::from(&r2 - &d);
    let hi = Rational::from(&r2 + &d);
    let (mut qs, _) = common_prefix(&lo, &hi, usize::MAX);
    qs.pop();
    Ok((qs, false))
}

/// First `count` partial quotients and convergents of `x`, certified at its
/// precision. Exact rationals expand to completion.
pub fn expand_cf(x: &PrecReal, count: usize) -> Result<ContinuedFraction, ReductionError> {
    let (mut qs, terminated) = certified_quotients(x)?;
    if qs.len() < count && !terminated {
        return Err(ReductionError::CfTooShort {
            needed: format!("{count} quotients"),
            available: qs.len(),
        });
    }
    let complete = terminated && qs.len() <= count;
    qs.truncate(count);
    Ok(ContinuedFraction::from_quotients(qs, complete))
}

/// Every certified quotient of `x`.
pub fn expand_cf_certified(x: &PrecReal) -> Result<ContinuedFraction, ReductionError> {
    let (qs, terminated) = certified_quotients(x)?;
    Ok(ContinuedFraction::from_quotients(qs, terminated))
}

/// ‖x‖, certified.
pub fn nearest_int_distance(x: &PrecReal) -> Result<PrecReal, ReductionError> {
    let d = x.nearest_int_distance();
    if d.exact().is_some() || d.is_certified() {
        Ok(d)
    } else {
        Err(ReductionError::Undecided { index: 0 })
    }
}

/// Data for 0 < |rτ̂ − s + μ̂| < A·C^(−t), r ≤ M.
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub label: String,
    pub tau_hat: PrecReal,
    pub mu_hat: PrecReal,
    pub a: PrecReal,
    pub c: PrecReal,
    pub m: Integer,
    /// `Some(j)` when μ̂ = jτ̂ holds exactly by construction; the form is
    /// then homogeneous and is reduced with Legendre's criterion.
    pub tau_multiple: Option<u64>,
}

impl ReductionInstance {
    pub fn with_tau_multiple(mut self, j: Option<u64>) -> Self {
        self.tau_multiple = j;
        self
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        let p = self.a.prec();
        if self.a.sign() != Sign::Positive {
            return Err(ReductionError::InvalidInstance("A must be positive".into()));
        }
        if PrecReal::from_i64(1, p).certified_lt(&self.c) != Some(true) {
            return Err(ReductionError::InvalidInstance("C must exceed 1".into()));
        }
        if self.m < 1 {
            return Err(ReductionError::InvalidInstance("M must be at least 1".into()));
        }
        if self.tau_hat.exact().is_some_and(|q| q.as_rational().is_some()) {
            return Err(ReductionError::InvalidInstance("tau must be irrational".into()));
        }
        Ok(())
    }

    pub fn precision(&self) -> u32 {
        self.tau_hat.prec().min(self.mu_hat.prec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReductionMethod {
    DujellaPetho,
    /// |r'τ̂ − s| > 1/((a_max + 2)r') for 0 < r' ≤ M + j.
    Legendre,
}

/// Result of one reduction: no solution with t ≥ `t_bound`.
#[derive(Debug, Clone)]
pub struct ReductionOutcome {
    pub method: ReductionMethod,
    /// Convergent denominator used (Legendre: the one with the largest
    /// next partial quotient).
    pub q: Integer,
    pub convergent_index: usize,
    pub epsilon: PrecReal,
    pub t_bound: PrecReal,
    pub precision: u32,
    /// Convergents examined past the first q > 6M.
    pub scanned: usize,
}

/// Homogeneous case μ̂ = jτ̂: with r' = r + j the form is |r'τ̂ − s|, and
/// either A·C^(−t) ≥ 1/(2r') or s/r' is a convergent, where
/// |q_iτ̂ − p_i| > 1/((a_{i+1} + 2)q_i).
fn legendre_bound(inst: &ReductionInstance, cf: &ContinuedFraction, j: u64) -> Result<ReductionOutcome, ReductionError> {
    let p = inst.precision();
    let m2 = Integer::from(&inst.m + j);
    let last = cf
        .first_index_above(&m2)
        .ok_or_else(|| ReductionError::CfTooShort {
            needed: m2.to_string(),
            available: cf.len(),
        })?;
    let (idx, a_max) = (0..last)
        .map(|i| (i, &cf.partial_quotients[i + 1]))
        .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
        .expect("nonempty");
    let denom = Integer::from(a_max + 2u32);
    let eps = PrecReal::from_integer(denom.clone(), p).recip();
    let m2r = PrecReal::from_integer(m2, p);
    let t = (&(&(&inst.a * &m2r) * &PrecReal::from_integer(denom, p))).ln() / inst.c.ln();
    let t_half = (&(&PrecReal::from_i64(2, p) * &inst.a) * &m2r).ln() / inst.c.ln();
    let t = t.max(&t_half);
    if !t.is_certified() {
        return Err(ReductionError::Undecided { index: idx });
    }
    Ok(ReductionOutcome {
        method: ReductionMethod::Legendre,
        q: cf.denominator(idx).clone(),
        convergent_index: idx,
        epsilon: eps,
        t_bound: t,
        precision: p,
        scanned: last,
    })
}

/// Working precision for an instance with bound M: 4·⌈log₂ 6M⌉ + 256 bits.
pub fn precision_for(m: &Integer) -> u32 {
    let six_m = Integer::from(m * 6u32);
    4 * six_m.significant_bits() + 256
}

pub fn dujella_petho(inst: &ReductionInstance) -> Result<ReductionOutcome, ReductionError> {
    let cf = expand_cf_certified(&inst.tau_hat)?;
    dujella_petho_with_cf(inst, &cf)
}

/// Dujella–Pethő on a precomputed expansion of τ̂.
pub fn dujella_petho_with_cf(
    inst: &ReductionInstance,
    cf: &ContinuedFraction,
) -> Result<ReductionOutcome, ReductionError> {
    inst.validate()?;
    if let Some(j) = inst.tau_multiple {
        return legendre_bound(inst, cf, j);
    }
    let p = inst.precision();
    let six_m = Integer::from(&inst.m * 6u32);
    let start = cf
        .first_index_above(&six_m)
        .ok_or_else(|| ReductionError::CfTooShort {
            needed: six_m.to_string(),
            available: cf.len(),
        })?;
    let m = PrecReal::from_integer(inst.m.clone(), p);
    let mut run: Option<(u64, usize)> = None;
    let end = (start + MAX_EXTRA_CONVERGENTS + 1).min(cf.len());
    for idx in start..end {
        let q = cf.denominator(idx);
        let qr = PrecReal::from_integer(q.clone(), p);
        let tau_d = (&qr * &inst.tau_hat).nearest_int_distance();
        let mu_d = (&qr * &inst.mu_hat).nearest_int_distance();
        let eps = &mu_d - &(&m * &tau_d);
        match eps.sign() {
            Sign::Positive => {
                let t = (&(&inst.a * &qr) / &eps).ln() / inst.c.ln();
                if !t.is_certified() {
                    return Err(ReductionError::Undecided { index: idx });
                }
                return Ok(ReductionOutcome {
                    method: ReductionMethod::DujellaPetho,
                    q: q.clone(),
                    convergent_index: idx,
                    epsilon: eps,
                    t_bound: t,
                    precision: p,
                    scanned: idx - start,
                });
            }
            Sign::Undecided => return Err(ReductionError::Undecided { index: idx }),
            Sign::Negative | Sign::Zero => {
                let ratio = (&mu_d / &tau_d).to_f64();
                let near = ratio.round();
                if (ratio - near).abs() < 1e-6 && near >= 0.0 && near <= inst.m.to_f64() {
                    let j = near as u64;
                    run = match run {
                        Some((prev, n)) if prev == j => Some((j, n + 1)),
                        _ => Some((j, 1)),
                    };
                    if let Some((j, n)) = run {
                        if n >= DEGENERACY_RUN {
                            return Err(ReductionError::DegenerateMu { multiple: j });
                        }
                    }
                } else {
                    run = None;
                }
            }
        }
    }
    if end < start + MAX_EXTRA_CONVERGENTS + 1 && !cf.terminated {
        return Err(ReductionError::CfTooShort {
            needed: format!("{} convergents past 6M", MAX_EXTRA_CONVERGENTS + 1),
            available: cf.len(),
        });
    }
    Err(ReductionError::NoPositiveEpsilon {
        scanned: end - start,
    })
}

/// Runs `build(prec)` and the reduction, doubling the precision while the
/// failure is one that precision can fix.
pub fn reduce_escalating(
    start: u32,
    mut build: impl FnMut(u32) -> Result<ReductionInstance, ReductionError>,
) -> Result<ReductionOutcome, ReductionError> {
    let mut prec = start;
    loop {
        match build(prec).and_then(|inst| dujella_petho(&inst)) {
            Err(e) if e.is_retryable() && prec < MAX_PRECISION_BITS => {
                prec = (2 * prec).min(MAX_PRECISION_BITS);
            }
            other => return other,
        }
    }
}

// ---------------------------------------------------------------------------
// Instances

fn dec(s: &str, p: u32) -> PrecReal {
    PrecReal::from_decimal(s, p).expect("literal")
}

fn decimal_integer(s: &str) -> Integer {
    let r = parse_decimal(s).expect("literal");
    r.fract_ceil(Integer::new()).1
}

/// Rounds x up to two decimals.
fn ceil_hundredths(x: &PrecReal) -> Rational {
    let scaled = Float::with_val(x.check().prec(), x.check() * 100u32).ceil();
    Rational::from((scaled.to_integer().expect("finite"), 100))
}

/// The four A constants: (printed inequality constant)/log(base), rounded up
/// to two decimals.
#[derive(Debug, Clone, Serialize)]
pub struct AConstants {
    #[serde(serialize_with = "display_string")]
    pub gamma1: Rational,
    #[serde(serialize_with = "display_string")]
    pub gamma2: Rational,
    #[serde(serialize_with = "display_string")]
    pub gamma3: Rational,
    #[serde(serialize_with = "display_string")]
    pub gamma4: Rational,
}

pub fn a_constants() -> AConstants {
    let p = 256;
    let lphi = PrecReal::phi(p).ln();
    let l2 = PrecReal::from_i64(2, p).ln();
    AConstants {
        gamma1: ceil_hundredths(&(&dec("12.58", p) / &l2)),
        gamma2: ceil_hundredths(&(&dec("5.8", p) / &l2)),
        gamma3: ceil_hundredths(&(&dec("86.1", p) / &lphi)),
        gamma4: ceil_hundredths(&(&dec("44.38", p) / &lphi)),
    }
}

/// Upper bounds on M used by the chain.
pub fn m_absolute() -> Integer {
    decimal_integer("8.82e312")
}

pub fn m_k_below_3200() -> Integer {
    decimal_integer("5.1e62")
}

pub fn m_k_below_550() -> Integer {
    decimal_integer("1.13e56")
}

/// Values shared by all φ-based instances at one precision.
#[derive(Debug, Clone)]
pub struct PhiFamily {
    pub prec: u32,
    pub tau_hat: PrecReal,
    pub ln_phi: PrecReal,
    ln_phi2_over_18: PrecReal,
    pub cf: ContinuedFraction,
}

impl PhiFamily {
    pub fn new(prec: u32) -> Result<Self, ReductionError> {
        let phi = PrecReal::phi(prec);
        let ln_phi = phi.ln();
        let tau_hat = &PrecReal::from_i64(10, prec).ln() / &ln_phi;
        let ln_phi2_over_18 = (&(&phi + &PrecReal::from_i64(2, prec)) / &PrecReal::from_i64(18, prec)).ln();
        let cf = expand_cf_certified(&tau_hat)?;
        Ok(PhiFamily {
            prec,
            tau_hat,
            ln_phi,
            ln_phi2_over_18,
            cf,
        })
    }

    /// log(a(φ + 2)/18)/log φ.
    pub fn mu_gamma3(&self, a: u8) -> PrecReal {
        let la = PrecReal::from_i64(a as i64, self.prec).ln();
        &(&la + &self.ln_phi2_over_18) / &self.ln_phi
    }

    /// log(X(φ + 2)/18)/log φ from a precomputed log X.
    pub fn mu_gamma4(&self, ln_x: &PrecReal) -> PrecReal {
        &(ln_x + &self.ln_phi2_over_18) / &self.ln_phi
    }

    pub fn instance(&self, label: String, mu_hat: PrecReal, a: &Rational, c: PrecReal, m: &Integer) -> ReductionInstance {
        ReductionInstance {
            label,
            tau_hat: self.tau_hat.clone(),
            mu_hat,
            a: PrecReal::from_rational(a.clone(), self.prec),
            c,
            m: m.clone(),
            tau_multiple: None,
        }
    }
}

/// Values shared by all γ(k)-based instances at one precision.
#[derive(Debug, Clone)]
pub struct GammaFamily {
    pub k: usize,
    pub prec: u32,
    pub gamma: PrecReal,
    pub tau_hat: PrecReal,
    pub ln_gamma: PrecReal,
    /// log(9(2γ − 2)g_k(γ)).
    ln_nine_coeff: PrecReal,
    pub cf: ContinuedFraction,
    coefficient_is_one: bool,
}

impl GammaFamily {
    pub fn new(k: usize, prec: u32) -> Result<Self, ReductionError> {
        let ctx = PellLucasContext::with_precision(k, prec)?;
        let ln_gamma = ctx.gamma().ln();
        let tau_hat = &PrecReal::from_i64(10, prec).ln() / &ln_gamma;
        let ln_nine_coeff = (&PrecReal::from_i64(9, prec) * &ctx.dominant_coefficient()).ln();
        let cf = expand_cf_certified(&tau_hat)?;
        Ok(GammaFamily {
            k,
            prec,
            gamma: ctx.gamma().clone(),
            tau_hat,
            ln_gamma,
            ln_nine_coeff,
            cf,
            coefficient_is_one: dominant_coefficient_is_one(k),
        })
    }

    /// log(9(2γ − 2)g_k(γ)/a)/log γ.
    pub fn mu_gamma1(&self, a: u8) -> PrecReal {
        let la = PrecReal::from_i64(a as i64, self.prec).ln();
        &(&self.ln_nine_coeff - &la) / &self.ln_gamma
    }

    /// j with μ̂ = jτ̂ exactly for Γ₁ at digit `a`.
    pub fn gamma1_multiple(&self, a: u8) -> Option<u64> {
        (self.coefficient_is_one && a == 9).then_some(0)
    }

    /// j with μ̂ = jτ̂ exactly for Γ₂ at X = 9·10^j.
    pub fn gamma2_multiple(&self, x: &Integer) -> Option<u64> {
        if !self.coefficient_is_one || !x.is_divisible_u(9) {
            return None;
        }
        let mut y = Integer::from(x / 9u32);
        let mut j = 0;
        while y.is_divisible_u(10) {
            y /= 10u32;
            j += 1;
        }
        (y == 1).then_some(j)
    }

    /// log(X/(9(2γ − 2)g_k(γ)))/log γ from a precomputed log X.
    pub fn mu_gamma2(&self, ln_x: &PrecReal) -> PrecReal {
        &(ln_x - &self.ln_nine_coeff) / &self.ln_gamma
    }

    pub fn instance(&self, label: String, mu_hat: PrecReal, a: &Rational, c: PrecReal, m: &Integer) -> ReductionInstance {
        ReductionInstance {
            label,
            tau_hat: self.tau_hat.clone(),
            mu_hat,
            a: PrecReal::from_rational(a.clone(), self.prec),
            c,
            m: m.clone(),
            tau_multiple: None,
        }
    }
}

/// a(10^l − 1) + b.
pub fn concat_numerator(a: u8, b: u8, l: u32) -> Integer {
    Integer::from(a) * (Integer::from(10).pow(l) - 1u32) + b
}

fn ln_integer(x: &Integer, prec: u32) -> PrecReal {
    PrecReal::from_fn(prec, |bits| Float::with_val(bits, x).ln())
}

/// Distinct numerators a(10^l − 1) + b for l ≤ `l_max`, each with one
/// representative (a, b, l), in increasing (l, a, b) order.
pub fn distinct_numerators(l_max: u32) -> Vec<(Integer, (u8, u8, u32))> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for l in 1..=l_max {
        for a in 1..=9u8 {
            for b in 0..=9u8 {
                let x = concat_numerator(a, b, l);
                if seen.insert(x.clone()) {
                    out.push((x, (a, b, l)));
                }
            }
        }
    }
    out
}

/// Single instances for the CLI, at the chain's M values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
}

pub fn build_instance(
    kind: InstanceKind,
    k: usize,
    a: u8,
    b: u8,
    l: u32,
    prec: u32,
) -> Result<ReductionInstance, ReductionError> {
    if !(1..=9).contains(&a) || b > 9 {
        return Err(ReductionError::InvalidInstance("need 1 <= a <= 9 and 0 <= b <= 9".into()));
    }
    let ac = a_constants();
    match kind {
        InstanceKind::Gamma3 | InstanceKind::Gamma4 => {
            let fam = PhiFamily::new(prec)?;
            let m = m_absolute();
            Ok(match kind {
                InstanceKind::Gamma3 => fam.instance(
                    format!("gamma3 a={a}"),
                    fam.mu_gamma3(a),
                    &ac.gamma3,
                    PrecReal::e(prec),
                    &m,
                ),
                _ => {
                    let lx = ln_integer(&concat_numerator(a, b, l), prec);
                    fam.instance(
                        format!("gamma4 a={a} b={b} l={l}"),
                        fam.mu_gamma4(&lx),
                        &ac.gamma4,
                        PrecReal::phi(prec),
                        &m,
                    )
                }
            })
        }
        InstanceKind::Gamma1 | InstanceKind::Gamma2 => {
            let fam = GammaFamily::new(k, prec)?;
            let m = m_k_below_550();
            Ok(match kind {
                InstanceKind::Gamma1 => fam.instance(
                    format!("gamma1 k={k} a={a}"),
                    fam.mu_gamma1(a),
                    &ac.gamma1,
                    PrecReal::from_i64(10, prec),
                    &m,
                )
                .with_tau_multiple(fam.gamma1_multiple(a)),
                _ => {
                    let x = concat_numerator(a, b, l);
                    let lx = ln_integer(&x, prec);
                    fam.instance(
                        format!("gamma2 k={k} a={a} b={b} l={l}"),
                        fam.mu_gamma2(&lx),
                        &ac.gamma2,
                        fam.gamma.clone(),
                        &m,
                    )
                    .with_tau_multiple(fam.gamma2_multiple(&x))
                }
            })
        }
    }
}

/// Reduces one instance of the given kind, starting at the larger of
/// `start_prec` and [`precision_for`] M, with automatic escalation.
pub fn reduce_single(
    kind: InstanceKind,
    k: usize,
    a: u8,
    b: u8,
    l: u32,
    start_prec: u32,
) -> Result<(ReductionInstance, ReductionOutcome), ReductionError> {
    let m = match kind {
        InstanceKind::Gamma3 | InstanceKind::Gamma4 => m_absolute(),
        _ => m_k_below_550(),
    };
    let mut last = None;
    let out = reduce_escalating(start_prec.max(precision_for(&m)), |p| {
        let inst = build_instance(kind, k, a, b, l, p)?;
        last = Some(inst.clone());
        Ok(inst)
    })?;
    Ok((last.expect("built"), out))
}

// ---------------------------------------------------------------------------
// Chain

fn display_string<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn f64_string<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.6}"))
}

/// One reduced instance as recorded in a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceRecord {
    pub label: String,
    pub tau_hat: String,
    pub mu_hat: String,
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(rename = "M")]
    pub m: String,
    pub q: String,
    pub convergent_index: usize,
    pub epsilon: String,
    pub t_bound: String,
    pub precision: u32,
    pub method: ReductionMethod,
    #[serde(skip)]
    pub t: f64,
}

impl InstanceRecord {
    pub fn new(inst: &ReductionInstance, tau_expr: &str, mu_expr: String, out: &ReductionOutcome) -> Self {
        InstanceRecord {
            label: inst.label.clone(),
            tau_hat: tau_expr.to_string(),
            mu_hat: mu_expr,
            a: inst.a.to_decimal(8),
            c: inst.c.to_decimal(20),
            m: inst.m.to_string(),
            q: out.q.to_string(),
            convergent_index: out.convergent_index,
            epsilon: out.epsilon.to_decimal(12),
            t_bound: out.t_bound.to_decimal(12),
            precision: out.precision,
            method: out.method,
            t: out.t_bound.to_f64(),
        }
    }
}

/// Per-k summary for the γ-based stages.
#[derive(Debug, Clone, Serialize)]
pub struct PerKRecord {
    #[serde(serialize_with = "display_string")]
    pub k: usize,
    pub instances: usize,
    #[serde(serialize_with = "f64_string")]
    pub max_t: f64,
    /// l bound (Γ₁) or n bound (Γ₂) for this k.
    #[serde(serialize_with = "display_string")]
    pub derived_bound: u64,
    pub worst: InstanceRecord,
    pub min_convergent_index: usize,
    pub max_convergent_index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub description: String,
    pub instance_count: usize,
    pub failures: Vec<String>,
    pub inconclusive: bool,
    #[serde(serialize_with = "f64_string")]
    pub max_t: f64,
    pub worst: Option<InstanceRecord>,
    pub instances: Vec<InstanceRecord>,
    pub per_k: Vec<PerKRecord>,
    pub conclusions: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl StageReport {
    fn new(stage: &str, description: &str) -> Self {
        StageReport {
            stage: stage.into(),
            description: description.into(),
            instance_count: 0,
            failures: Vec::new(),
            inconclusive: false,
            max_t: 0.0,
            worst: None,
            instances: Vec::new(),
            per_k: Vec::new(),
            conclusions: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn absorb(&mut self, rec: InstanceRecord, keep: bool) {
        self.instance_count += 1;
        if self.worst.as_ref().is_none_or(|w| rec.t > w.t) {
            self.max_t = rec.t;
            self.worst = Some(rec.clone());
        }
        if keep {
            self.instances.push(rec);
        }
    }

    fn fail(&mut self, label: String, err: &ReductionError) {
        self.failures.push(format!("{label}: {err}"));
        self.inconclusive = true;
    }

    fn conclude(&mut self, key: &str, value: impl Display) {
        self.conclusions.push((key.into(), value.to_string()));
    }
}

/// Which k the γ-based stages visit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KSelection {
    All,
    /// Every k up to `exhaustive_up_to`, plus `random_count` further k drawn
    /// with `seed` from the rest of the range.
    Sampled {
        exhaustive_up_to: usize,
        random_count: usize,
        seed: u64,
    },
}

impl KSelection {
    pub fn select(&self, lo: usize, hi: usize) -> Vec<usize> {
        match self {
            KSelection::All => (lo..=hi).collect(),
            KSelection::Sampled {
                exhaustive_up_to,
                random_count,
                seed,
            } => {
                let cut = (*exhaustive_up_to).min(hi);
                let mut ks: Vec<usize> = (lo..=cut).collect();
                let rest: Vec<usize> = ((cut + 1).max(lo)..=hi).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(*seed ^ (lo as u64) << 32 ^ hi as u64);
                let mut picked: Vec<usize> = rest
                    .choose_multiple(&mut rng, (*random_count).min(rest.len()))
                    .copied()
                    .collect();
                picked.sort_unstable();
                ks.extend(picked);
                ks
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainConfig {
    pub k_selection: KSelection,
    /// Sampling for k above 550 when the rerun cannot reach k ≤ 550.
    pub extension_selection: KSelection,
    /// Keep every instance in the report (large).
    pub record_all: bool,
}

impl Default for ChainConfig {
    /// CI scale: k ≤ 100 exhaustively plus 50 random k up to 550.
    fn default() -> Self {
        ChainConfig {
            k_selection: KSelection::Sampled {
                exhaustive_up_to: 100,
                random_count: 50,
                seed: 20240601,
            },
            extension_selection: KSelection::Sampled {
                exhaustive_up_to: 0,
                random_count: 10,
                seed: 20240602,
            },
            record_all: false,
        }
    }
}

impl ChainConfig {
    pub fn full() -> Self {
        ChainConfig {
            k_selection: KSelection::All,
            extension_selection: KSelection::All,
            record_all: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainSummary {
    /// Stage (i): w < this.
    #[serde(serialize_with = "f64_string")]
    pub w_bound_i: f64,
    #[serde(serialize_with = "display_string")]
    pub l_max_i: u64,
    /// Stage (ii): k below this.
    #[serde(serialize_with = "display_string")]
    pub k_bound_ii: u64,
    #[serde(serialize_with = "f64_string")]
    pub w_bound_iii: f64,
    #[serde(serialize_with = "display_string")]
    pub l_max_iii: u64,
    /// k allowed by the branch (k/2)·log φ ≤ w of stage (iii).
    #[serde(serialize_with = "display_string")]
    pub k_bound_iii_gamma3: u64,
    #[serde(serialize_with = "display_string")]
    pub k_bound_iii_gamma4: u64,
    /// max(550, both branches).
    #[serde(serialize_with = "display_string")]
    pub k_bound_iii: u64,
    #[serde(serialize_with = "display_string")]
    pub l_max_iv: u64,
    #[serde(serialize_with = "display_string")]
    pub n_bound_v: u64,
    /// Stages (iv)–(v) re-run for 550 < k ≤ k_bound_iii, if needed.
    pub extension_l_max: Option<String>,
    pub extension_n_bound: Option<String>,
    pub sampled_k: Vec<usize>,
    pub extension_k: Vec<usize>,
    pub all_stages_conclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub a_constants: AConstants,
    pub config: ChainConfig,
    pub stages: Vec<StageReport>,
    pub summary: ChainSummary,
}

impl ChainReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

/// Largest integer strictly below x.
fn int_below(x: f64) -> u64 {
    let c = x.ceil();
    (c as u64).saturating_sub(1)
}

fn reduce_in_family<F>(
    base_prec: u32,
    mut make: F,
    inst: &ReductionInstance,
    cf: &ContinuedFraction,
) -> Result<ReductionOutcome, ReductionError>
where
    F: FnMut(u32) -> Result<ReductionInstance, ReductionError>,
{
    match dujella_petho_with_cf(inst, cf) {
        Err(e) if e.is_retryable() => reduce_escalating(2 * base_prec, &mut make),
        other => other,
    }
}

const TAU_PHI: &str = "log 10 / log phi";
const TAU_GAMMA: &str = "log 10 / log gamma(k)";

/// Printable τ̂ and μ̂ for an instance kind.
pub fn expressions(kind: InstanceKind, a: u8, b: u8, l: u32) -> (&'static str, String) {
    match kind {
        InstanceKind::Gamma1 => (TAU_GAMMA, format!("log(9(2gamma-2)g_k(gamma)/{a}) / log gamma(k)")),
        InstanceKind::Gamma2 => (
            TAU_GAMMA,
            format!("log(({a}*10^{l} - {a} + {b})/(9(2gamma-2)g_k(gamma))) / log gamma(k)"),
        ),
        InstanceKind::Gamma3 => (TAU_PHI, format!("log({a}(phi+2)/18) / log phi")),
        InstanceKind::Gamma4 => (TAU_PHI, format!("log(({a}*10^{l} - {a} + {b})(phi+2)/18) / log phi")),
    }
}

/// Γ₃ for a = 1..9 at the given M.
fn run_gamma3(stage: &mut StageReport, m: &Integer, a_const: &Rational, keep: bool) -> Result<(), ReductionError> {
    let prec = precision_for(m);
    let fam = PhiFamily::new(prec)?;
    for a in 1..=9u8 {
        let label = format!("gamma3 a={a}");
        let inst = fam.instance(label.clone(), fam.mu_gamma3(a), a_const, PrecReal::e(prec), m);
        let res = reduce_in_family(
            prec,
            |p| {
                let f = PhiFamily::new(p)?;
                Ok(f.instance(label.clone(), f.mu_gamma3(a), a_const, PrecReal::e(p), m))
            },
            &inst,
            &fam.cf,
        );
        match res {
            Ok(out) => {
                let mu = expressions(InstanceKind::Gamma3, a, 0, 0).1;
                stage.absorb(InstanceRecord::new(&inst, TAU_PHI, mu, &out), keep);
            }
            Err(e) => stage.fail(label, &e),
        }
    }
    Ok(())
}

/// Γ₄ for every distinct a(10^l − 1) + b with l ≤ `l_max`.
fn run_gamma4(
    stage: &mut StageReport,
    m: &Integer,
    a_const: &Rational,
    l_max: u32,
    keep: bool,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<(), ReductionError> {
    let prec = precision_for(m);
    let fam = PhiFamily::new(prec)?;
    let nums = distinct_numerators(l_max);
    let total = nums.len();
    let step = (total / 10).max(1);
    let results: Vec<(String, (u8, u8, u32), Result<(ReductionInstance, ReductionOutcome), ReductionError>)> = nums
        .par_iter()
        .enumerate()
        .map(|(i, (x, (a, b, l)))| {
            if i % step == 0 {
                progress(&format!("  gamma4: {i}/{total} instances"));
            }
            let label = format!("gamma4 a={a} b={b} l={l}");
            let lx = ln_integer(x, prec);
            let inst = fam.instance(label.clone(), fam.mu_gamma4(&lx), a_const, PrecReal::phi(prec), m);
            let res = reduce_in_family(
                prec,
                |p| {
                    let f = PhiFamily::new(p)?;
                    let lx = ln_integer(x, p);
                    Ok(f.instance(label.clone(), f.mu_gamma4(&lx), a_const, PrecReal::phi(p), m))
                },
                &inst,
                &fam.cf,
            );
            (label, (*a, *b, *l), res.map(|o| (inst, o)))
        })
        .collect();
    for (label, (a, b, l), res) in results {
        match res {
            Ok((inst, out)) => {
                let mu = expressions(InstanceKind::Gamma4, a, b, l).1;
                stage.absorb(InstanceRecord::new(&inst, TAU_PHI, mu, &out), keep);
            }
            Err(e) => stage.fail(label, &e),
        }
    }
    Ok(())
}

/// Γ₁ then Γ₂ for one k. Returns (Γ₁ record, Γ₂ record) or pushes failures.
#[allow(clippy::too_many_arguments)]
fn run_gamma12_for_k(
    k: usize,
    m: &Integer,
    ac: &AConstants,
    ln_x: &[(Integer, (u8, u8, u32), PrecReal)],
    keep: bool,
    s4: &mut StageReport,
    s5: &mut StageReport,
) -> Result<(), ReductionError> {
    let prec = precision_for(m);
    let fam = GammaFamily::new(k, prec)?;
    let ten = PrecReal::from_i64(10, prec);

    // Γ₁: l < t.
    let mut g1 = StageReport::new("", "");
    for a in 1..=9u8 {
        let label = format!("gamma1 k={k} a={a}");
        let inst = fam
            .instance(label.clone(), fam.mu_gamma1(a), &ac.gamma1, ten.clone(), m)
            .with_tau_multiple(fam.gamma1_multiple(a));
        let res = reduce_in_family(
            prec,
            |p| {
                let f = GammaFamily::new(k, p)?;
                Ok(f
                    .instance(label.clone(), f.mu_gamma1(a), &ac.gamma1, PrecReal::from_i64(10, p), m)
                    .with_tau_multiple(f.gamma1_multiple(a)))
            },
            &inst,
            &fam.cf,
        );
        match res {
            Ok(out) => {
                let mu = expressions(InstanceKind::Gamma1, a, 0, 0).1;
                g1.absorb(InstanceRecord::new(&inst, TAU_GAMMA, mu, &out), true);
            }
            Err(e) => g1.fail(label, &e),
        }
    }
    if g1.inconclusive {
        s4.failures.extend(g1.failures);
        s4.inconclusive = true;
        return Ok(());
    }
    let l_max = int_below(g1.max_t);
    let worst1 = g1.worst.clone().expect("nine instances");
    push_per_k(s4, k, &g1, l_max, keep);

    // Γ₂ over l ≤ l_max(k): n < t.
    let mut g2 = StageReport::new("", "");
    for (x, (a, b, l), lx) in ln_x.iter().filter(|(_, (_, _, l), _)| (*l as u64) <= l_max) {
        let label = format!("gamma2 k={k} a={a} b={b} l={l}");
        let inst = fam
            .instance(label.clone(), fam.mu_gamma2(lx), &ac.gamma2, fam.gamma.clone(), m)
            .with_tau_multiple(fam.gamma2_multiple(x));
        let res = reduce_in_family(
            prec,
            |p| {
                let f = GammaFamily::new(k, p)?;
                let lx = ln_integer(x, p);
                Ok(f
                    .instance(label.clone(), f.mu_gamma2(&lx), &ac.gamma2, f.gamma.clone(), m)
                    .with_tau_multiple(f.gamma2_multiple(x)))
            },
            &inst,
            &fam.cf,
        );
        match res {
            Ok(out) => {
                let mu = expressions(InstanceKind::Gamma2, *a, *b, *l).1;
                g2.absorb(InstanceRecord::new(&inst, TAU_GAMMA, mu, &out), keep);
            }
            Err(e) => g2.fail(label, &e),
        }
    }
    let _ = worst1;
    if g2.inconclusive {
        s5.failures.extend(g2.failures);
        s5.inconclusive = true;
        return Ok(());
    }
    let n_bound = int_below(g2.max_t);
    push_per_k(s5, k, &g2, n_bound, keep);
    Ok(())
}

fn push_per_k(stage: &mut StageReport, k: usize, sub: &StageReport, bound: u64, keep: bool) {
    let worst = sub.worst.clone().expect("nonempty");
    let all = if sub.instances.is_empty() { vec![worst.clone()] } else { sub.instances.clone() };
    let min_idx = all.iter().map(|r| r.convergent_index).min().unwrap_or(0);
    let max_idx = all.iter().map(|r| r.convergent_index).max().unwrap_or(0);
    stage.per_k.push(PerKRecord {
        k,
        instances: sub.instance_count,
        max_t: sub.max_t,
        derived_bound: bound,
        worst: worst.clone(),
        min_convergent_index: min_idx,
        max_convergent_index: max_idx,
    });
    stage.instance_count += sub.instance_count;
    if stage.worst.as_ref().is_none_or(|w| worst.t > w.t) {
        stage.max_t = worst.t;
        stage.worst = Some(worst);
    }
    if keep {
        stage.instances.extend(sub.instances.iter().cloned());
    }
}

/// Γ₁/Γ₂ stages over a list of k at bound M.
fn run_small_k(
    ks: &[usize],
    m: &Integer,
    ac: &AConstants,
    keep: bool,
    names: (&str, &str),
    progress: &(dyn Fn(&str) + Sync),
) -> Result<(StageReport, StageReport), ReductionError> {
    let prec = precision_for(m);
    let mut s4 = StageReport::new(names.0, "Gamma1 per k, a = 1..9: l < t");
    let mut s5 = StageReport::new(names.1, "Gamma2 per k over admissible (a, b, l): n < t");
    // log X is independent of k; l never exceeds 120 here (t < 120 for C = 10)
    let l_cap = 120;
    let ln_x: Vec<(Integer, (u8, u8, u32), PrecReal)> = distinct_numerators(l_cap)
        .into_iter()
        .map(|(x, abl)| {
            let lx = ln_integer(&x, prec);
            (x, abl, lx)
        })
        .collect();
    let total = ks.len();
    let parts: Vec<Result<(StageReport, StageReport), ReductionError>> = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            if i % 10 == 0 {
                progress(&format!("  {}/{}: k = {k} ({i}/{total})", names.0, names.1));
            }
            let mut a = StageReport::new("", "");
            let mut b = StageReport::new("", "");
            run_gamma12_for_k(k, m, ac, &ln_x, keep, &mut a, &mut b)?;
            if a.per_k.first().is_some_and(|r| r.derived_bound >= l_cap as u64) {
                a.failures.push(format!("k={k}: l bound reaches the precomputed cap {l_cap}"));
                a.inconclusive = true;
            }
            Ok((a, b))
        })
        .collect();
    for part in parts {
        let (a, b) = part?;
        merge_into(&mut s4, a);
        merge_into(&mut s5, b);
    }
    Ok((s4, s5))
}

fn merge_into(dst: &mut StageReport, src: StageReport) {
    dst.instance_count += src.instance_count;
    dst.failures.extend(src.failures);
    dst.inconclusive |= src.inconclusive;
    if let Some(w) = src.worst {
        if dst.worst.as_ref().is_none_or(|d| w.t > d.t) {
            dst.max_t = w.t;
            dst.worst = Some(w);
        }
    }
    dst.instances.extend(src.instances);
    dst.per_k.extend(src.per_k);
}

/// The reduction chain at CI scale (see [`ChainConfig::default`]).
pub fn reduce_chain() -> Result<ChainReport, ReductionError> {
    reduce_chain_with(&ChainConfig::default(), &|_| {})
}

/// The full chain: (i) Γ₃ at M = 8.82·10³¹², (ii) Γ₄ for l up to the stage
/// (i) bound, (iii) both again at M = 5.1·10⁶², (iv) Γ₁ and (v) Γ₂ for the
/// selected k ≤ 550 at M = 1.13·10⁵⁶. Progress lines go to `progress`.
pub fn reduce_chain_with(
    config: &ChainConfig,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<ChainReport, ReductionError> {
    let ac = a_constants();
    let keep = config.record_all;
    let p = 256;
    let lphi = PrecReal::phi(p).ln().to_f64();
    let ln10 = std::f64::consts::LN_10;
    let mut stages = Vec::new();

    // (i)
    progress("stage (i): gamma3, M = 8.82e312");
    let m1 = m_absolute();
    let mut s1 = StageReport::new("i", "Gamma3 for a = 1..9 with M = 8.82e312: w < t");
    s1.notes.push(format!(
        "A = 86.1/log phi rounded up = {}; 57.5*(-log(0.42)/0.58) = {}",
        ac.gamma3,
        (&dec("57.5", p) * &deweger_factor(&dec("0.58", p))).to_decimal(8)
    ));
    run_gamma3(&mut s1, &m1, &ac.gamma3, true)?;
    let w_i = s1.max_t;
    let l_max_i = int_below(w_i / ln10);
    s1.conclude("w_bound", format!("{w_i:.6}"));
    s1.conclude("l_max (k >= 3200)", l_max_i);
    s1.conclude("1600 log phi > w_bound", 1600.0 * lphi > w_i);
    stages.push(s1);

    // (ii)
    progress(&format!("stage (ii): gamma4 over l <= {l_max_i}"));
    let mut s2 = StageReport::new("ii", "Gamma4 over a = 1..9, b = 0..9, l <= l_max(i) with M = 8.82e312: k/2 < t");
    s2.notes.push(format!(
        "A = 44.38/log phi rounded up = {}; 42.12*(-log(0.9)/0.1) = {}",
        ac.gamma4,
        (&dec("42.12", p) * &deweger_factor(&dec("0.1", p))).to_decimal(8)
    ));
    s2.notes.push("instances deduplicated by a(10^l - 1) + b".into());
    run_gamma4(&mut s2, &m1, &ac.gamma4, l_max_i as u32, keep, progress)?;
    let k_ii = int_below(2.0 * s2.max_t);
    s2.conclude("k_bound", k_ii);
    s2.conclude("contradicts k >= 3200", k_ii < 3200);
    stages.push(s2);

    // (iii)
    progress("stage (iii): gamma3 and gamma4 again, M = 5.1e62");
    let m3 = m_k_below_3200();
    let mut s3a = StageReport::new("iii-gamma3", "Gamma3 for a = 1..9 with M = 5.1e62: w < t");
    s3a.notes.push(format!(
        "1.34e30 * 3200^8 * log^5 3200 = {} < 5.1e62",
        bound_n_in_k(3200).to_decimal(8)
    ));
    run_gamma3(&mut s3a, &m3, &ac.gamma3, true)?;
    let w_iii = s3a.max_t;
    let l_max_iii = int_below(w_iii / ln10);
    let k_iii_g3 = int_below(2.0 * w_iii / lphi);
    s3a.conclude("w_bound", format!("{w_iii:.6}"));
    s3a.conclude("l_max", l_max_iii);
    s3a.conclude("k bound when (k/2) log phi <= w", k_iii_g3);
    s3a.notes.push(format!(
        "w = l log 10 needs (k/2) log phi >= w, i.e. k >= {}; for 550 < k below that the k-branch of the minimum applies",
        k_iii_g3 + 1
    ));
    stages.push(s3a);

    let mut s3b = StageReport::new("iii-gamma4", "Gamma4 over l <= l_max(iii) with M = 5.1e62: k/2 < t");
    run_gamma4(&mut s3b, &m3, &ac.gamma4, l_max_iii as u32, keep, progress)?;
    let k_iii_g4 = int_below(2.0 * s3b.max_t);
    let k_iii = k_iii_g3.max(k_iii_g4).max(550);
    s3b.conclude("k_bound", k_iii_g4);
    s3b.conclude("k_bound after both branches", k_iii);
    s3b.conclude("reaches k <= 550", k_iii <= 550);
    stages.push(s3b);

    // (iv), (v)
    let m4 = m_k_below_550();
    let ks = config.k_selection.select(2, 550);
    progress(&format!("stages (iv)/(v): {} values of k in [2, 550], M = 1.13e56", ks.len()));
    let (mut s4, mut s5) = run_small_k(&ks, &m4, &ac, keep, ("iv", "v"), progress)?;
    s4.notes.push(format!(
        "A = 12.58/log 2 rounded up = {}; 11.8*(-log(0.88)/0.12) = {}",
        ac.gamma1,
        (&dec("11.8", p) * &deweger_factor(&dec("0.12", p))).to_decimal(8)
    ));
    s5.notes.push(format!(
        "A = 5.8/log 2 rounded up = {}; 5.5*(-log(0.9)/0.1) = {}",
        ac.gamma2,
        (&dec("5.5", p) * &deweger_factor(&dec("0.1", p))).to_decimal(8)
    ));
    s5.notes.push("mu uses the Gamma2 definition log((a*10^l - a + b)/(9(2gamma-2)g_k(gamma)))/log gamma".into());
    let l_max_iv = s4.per_k.iter().map(|r| r.derived_bound).max().unwrap_or(0);
    let n_v = s5.per_k.iter().map(|r| r.derived_bound).max().unwrap_or(0);
    s4.conclude("l_max", l_max_iv);
    s4.conclude("k values", ks.len());
    s5.conclude("n_bound", n_v);
    s5.conclude("contradicts n > 250", n_v <= 250);
    stages.push(s4);
    stages.push(s5);

    // extension for 550 < k ≤ k_iii
    let mut ext_ks = Vec::new();
    let (mut ext_l, mut ext_n) = (None, None);
    if k_iii > 550 {
        ext_ks = config.extension_selection.select(551, k_iii as usize);
        let m_ext_real = bound_n_in_k(k_iii as usize);
        let m_ext = crate::baker::round_up_rational(&m_ext_real, 3);
        let m_ext = m_ext.fract_ceil(Integer::new()).1;
        progress(&format!(
            "extension: {} values of k in (550, {k_iii}], M = {}",
            ext_ks.len(),
            crate::baker::round_up_sig(&PrecReal::from_integer(m_ext.clone(), 64), 3)
        ));
        let (mut e4, mut e5) = run_small_k(&ext_ks, &m_ext, &ac, keep, ("iv-ext", "v-ext"), progress)?;
        let l = e4.per_k.iter().map(|r| r.derived_bound).max().unwrap_or(0);
        let n = e5.per_k.iter().map(|r| r.derived_bound).max().unwrap_or(0);
        e4.notes.push(format!("k in (550, {k_iii}], M = 1.34e30 * {k_iii}^8 * log^5 {k_iii} rounded up = {m_ext}"));
        e4.conclude("l_max", l);
        e5.conclude("n_bound", n);
        e5.conclude("contradicts n > 250", n <= 250);
        ext_l = Some(l.to_string());
        ext_n = Some(n.to_string());
        stages.push(e4);
        stages.push(e5);
    }

    let all_ok = stages.iter().all(|s| !s.inconclusive);
    let summary = ChainSummary {
        w_bound_i: w_i,
        l_max_i,
        k_bound_ii: k_ii,
        w_bound_iii: w_iii,
        l_max_iii,
        k_bound_iii_gamma3: k_iii_g3,
        k_bound_iii_gamma4: k_iii_g4,
        k_bound_iii: k_iii,
        l_max_iv,
        n_bound_v: n_v,
        extension_l_max: ext_l,
        extension_n_bound: ext_n,
        sampled_k: ks,
        extension_k: ext_ks,
        all_stages_conclusive: all_ok,
    };
    Ok(ChainReport {
        a_constants: ac,
        config: config.clone(),
        stages,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::QuadSqrt5;

    fn ints(v: &[i64]) -> Vec<Integer> {
        v.iter().map(|&x| Integer::from(x)).collect()
    }

    #[test]
    fn golden_ratio_expansion() {
        let cf = expand_cf(&PrecReal::phi(256), 10).unwrap();
        assert_eq!(cf.partial_quotients, ints(&[1; 10]));
        let fib: Vec<(Integer, Integer)> = (1..=10)
            .map(|i| (Integer::from(Integer::fibonacci(i + 1)), Integer::from(Integer::fibonacci(i))))
            .collect();
        assert_eq!(cf.convergents, fib);
    }

    #[test]
    fn log_ratio_expansion() {
        let p = 256;
        let tau = &PrecReal::from_i64(10, p).ln() / &PrecReal::phi(p).ln();
        let cf = expand_cf(&tau, 5).unwrap();
        // mpmath at 100 digits: [4; 1, 3, 1, 1, 1, 6, 4, 2, 1]
        assert_eq!(cf.partial_quotients, ints(&[4, 1, 3, 1, 1]));
        assert_eq!(cf.convergents[3], (Integer::from(24), Integer::from(5)));
        let longer = expand_cf(&tau, 10).unwrap();
        assert_eq!(longer.partial_quotients, ints(&[4, 1, 3, 1, 1, 1, 6, 4, 2, 1]));
        // stable under doubling
        let tau2 = &PrecReal::from_i64(10, 2 * p).ln() / &PrecReal::phi(2 * p).ln();
        let a = expand_cf_certified(&tau).unwrap();
        let b = expand_cf_certified(&tau2).unwrap();
        assert!(b.len() > a.len());
        assert_eq!(&b.partial_quotients[..a.len()], &a.partial_quotients[..]);
    }

    #[test]
    fn rational_expansion_terminates() {
        let x = PrecReal::from_rational(Rational::from((5, 2)), 128);
        let cf = expand_cf(&x, 10).unwrap();
        assert_eq!(cf.partial_quotients, ints(&[2, 2]));
        assert!(cf.terminated);
    }

    #[test]
    fn convergent_law() {
        let p = 512;
        let tau = &PrecReal::from_i64(10, p).ln() / &PrecReal::phi(p).ln();
        let cf = expand_cf_certified(&tau).unwrap();
        assert!(cf.len() > 100);
        let hp = 4 * p;
        let tau_hp = &PrecReal::from_i64(10, hp).ln() / &PrecReal::phi(hp).ln();
        for i in 0..cf.len() - 1 {
            let (pk, qk) = &cf.convergents[i];
            let q_next = cf.denominator(i + 1);
            let err = (&(&PrecReal::from_integer(qk.clone(), hp) * &tau_hp) - &PrecReal::from_integer(pk.clone(), hp)).abs();
            let bound = PrecReal::from_integer(q_next.clone(), hp).recip();
            assert_eq!(err.certified_lt(&bound), Some(true), "index {i}");
            if i > 1 {
                assert!(qk > cf.denominator(i - 1));
            }
        }
    }

    #[test]
    fn nearest_int_examples() {
        let d = nearest_int_distance(&PrecReal::from_decimal("3.25", 128).unwrap()).unwrap();
        assert_eq!(d.exact().unwrap(), &QuadSqrt5::from_rational(Rational::from((1, 4))));
        let d = nearest_int_distance(&PrecReal::from_decimal("-1.9", 128).unwrap()).unwrap();
        assert_eq!(d.exact().unwrap(), &QuadSqrt5::from_rational(Rational::from((1, 10))));
        let d = nearest_int_distance(&PrecReal::from_decimal("0.5", 128).unwrap()).unwrap();
        assert_eq!(d.exact().unwrap(), &QuadSqrt5::from_rational(Rational::from((1, 2))));
        let p = 256;
        let tau = &PrecReal::from_i64(10, p).ln() / &PrecReal::phi(p).ln();
        let d = nearest_int_distance(&(&PrecReal::from_i64(5, p) * &tau)).unwrap();
        assert!((d.to_f64() - 0.0751401).abs() < 1e-6);
    }

    #[test]
    fn a_constants_round_up() {
        let ac = a_constants();
        assert_eq!(ac.gamma1, Rational::from((1815, 100)));
        assert_eq!(ac.gamma2, Rational::from((837, 100)));
        assert_eq!(ac.gamma3, Rational::from((17893, 100)));
        assert_eq!(ac.gamma4, Rational::from((9223, 100)));
        assert_eq!(m_k_below_550(), Integer::from(113) * Integer::from(10).pow(54u32));
    }

    #[test]
    fn numerators_deduplicate() {
        let v = distinct_numerators(1);
        assert!(v.len() < 90);
        assert!(v.iter().any(|(x, _)| *x == 18));
        let v = distinct_numerators(3);
        let set: std::collections::BTreeSet<_> = v.iter().map(|(x, _)| x.clone()).collect();
        assert_eq!(set.len(), v.len());
        assert_eq!(concat_numerator(6, 2, 2), 596);
    }

    #[test]
    fn k_selection_is_deterministic() {
        let s = ChainConfig::default().k_selection;
        let a = s.select(2, 550);
        let b = s.select(2, 550);
        assert_eq!(a, b);
        assert_eq!(a.len(), 99 + 50);
        assert!(a[99..].iter().all(|&k| k > 100 && k <= 550));
        assert_eq!(KSelection::All.select(2, 10).len(), 9);
    }

    #[test]
    fn degenerate_mu_detected() {
        let p = 512;
        let tau = &PrecReal::from_i64(10, p).ln() / &PrecReal::phi(p).ln();
        let mu = &(&PrecReal::from_i64(3, p) * &tau) + &PrecReal::from_i64(1, p);
        let inst = ReductionInstance {
            label: "degenerate".into(),
            tau_hat: tau,
            mu_hat: mu,
            a: PrecReal::from_i64(10, p),
            c: PrecReal::from_i64(2, p),
            m: Integer::from(100),
            tau_multiple: None,
        };
        assert_eq!(dujella_petho(&inst).unwrap_err(), ReductionError::DegenerateMu { multiple: 3 });
    }

    #[test]
    fn short_expansion_escalates() {
        let m = Integer::from(10).pow(60u32);
        let out = reduce_escalating(128, |p| {
            let fam = PhiFamily::new(p)?;
            Ok(fam.instance("g3".into(), fam.mu_gamma3(2), &a_constants().gamma3, PrecReal::e(p), &m))
        })
        .unwrap();
        assert!(out.q > Integer::from(&m * 6u32));
        assert!(out.precision > 128);
        assert_eq!(out.epsilon.sign(), Sign::Positive);
    }

    #[test]
    fn homogeneous_forms_at_k2() {
        let fam = GammaFamily::new(2, 512).unwrap();
        assert_eq!(fam.gamma1_multiple(9), Some(0));
        assert_eq!(fam.gamma1_multiple(3), None);
        assert_eq!(fam.gamma2_multiple(&Integer::from(9)), Some(0));
        assert_eq!(fam.gamma2_multiple(&concat_numerator(9, 9, 2)), Some(2));
        assert_eq!(fam.gamma2_multiple(&Integer::from(18)), None);
        assert_eq!(GammaFamily::new(3, 512).unwrap().gamma1_multiple(9), None);
        let (_, out) = reduce_single(InstanceKind::Gamma1, 2, 9, 0, 1, 256).unwrap();
        assert_eq!(out.method, ReductionMethod::Legendre);
        let t = out.t_bound.to_f64();
        assert!(t > 50.0 && t < 100.0, "{t}");
    }

    #[test]
    fn gamma1_at_k2() {
        let (_, out) = reduce_single(InstanceKind::Gamma1, 2, 1, 0, 1, 256).unwrap();
        let t = out.t_bound.to_f64();
        assert!(t > 50.0 && t < 89.2, "{t}");
        assert_eq!(out.epsilon.sign(), Sign::Positive);
    }
}
