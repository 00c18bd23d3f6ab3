//! The k-generalized Pell-Lucas sequence.
//!
//! Q_n = 2·Q_{n−1} + Q_{n−2} + … + Q_{n−k} for n ≥ 2, with
//! Q_{−(k−2)} = … = Q_{−1} = 0 and Q_0 = Q_1 = 2. Terms are exact
//! ([`Integer`]); the dominant root γ(k) of the characteristic polynomial
//! x^k − 2x^{k−1} − x^{k−2} − … − 1 and the weight g_k(γ) are [`PrecReal`]s.

use std::collections::VecDeque;

use log::warn;
use rug::{Float, Integer};
use thiserror::Error;

use crate::numerics::{
    eval_at_precision, expr_sign, with_escalation, Expr, NumericsError, PrecReal, Sign, GUARD_BITS,
    MAX_PRECISION_BITS,
};

/// Exact terms beyond this index are refused by [`phi_approx_term`].
pub const MAX_EXACT_INDEX: i64 = 100_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("order k = {0} is below 2")]
    BadOrder(usize),
    #[error("index n = {n} is below the first index -(k-2) = {min} for k = {k}")]
    IndexBelowStart { k: usize, n: i64, min: i64 },
    #[error("precondition failed: {0}")]
    Domain(String),
    #[error("root bracket for k = {0} does not straddle zero")]
    BracketFailure(usize),
    #[error("g_k has a pole at the given point")]
    Pole,
    #[error("certified bound violated: {0}")]
    BoundViolated(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn check_order(k: usize) -> Result<(), SequenceError> {
    if k < 2 {
        Err(SequenceError::BadOrder(k))
    } else {
        Ok(())
    }
}

/// Streams (n, Q_n) starting at n = −(k−2), keeping only the last k terms and
/// their running sum.
#[derive(Debug, Clone)]
pub struct PellLucasTerms {
    k: usize,
    next_n: i64,
    window: VecDeque<Integer>,
    sum: Integer,
}

impl PellLucasTerms {
    pub fn new(k: usize) -> Result<Self, SequenceError> {
        check_order(k)?;
        Ok(PellLucasTerms {
            k,
            next_n: -(k as i64 - 2),
            window: VecDeque::with_capacity(k + 1),
            sum: Integer::new(),
        })
    }

    /// Iterator positioned so that the first item is (1, Q_1).
    pub fn from_one(k: usize) -> Result<Self, SequenceError> {
        let mut it = PellLucasTerms::new(k)?;
        for _ in 0..k - 1 {
            it.next();
        }
        Ok(it)
    }

    pub fn order(&self) -> usize {
        self.k
    }
}

impl Iterator for PellLucasTerms {
    type Item = (i64, Integer);

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.next_n;
        let value = match n {
            n if n < 0 => Integer::new(),
            0 | 1 => Integer::from(2),
            // Q_n = Q_{n-1} + (Q_{n-1} + … + Q_{n-k})
            _ => Integer::from(self.window.back().expect("window holds k terms") + &self.sum),
        };
        self.sum += &value;
        self.window.push_back(value.clone());
        if self.window.len() > self.k {
            let old = self.window.pop_front().expect("non-empty");
            self.sum -= old;
        }
        self.next_n += 1;
        Some((n, value))
    }
}

/// Exact Q_n^(k).
pub fn term(k: usize, n: i64) -> Result<Integer, SequenceError> {
    check_order(k)?;
    let min = -(k as i64 - 2);
    if n < min {
        return Err(SequenceError::IndexBelowStart { k, n, min });
    }
    let mut it = PellLucasTerms::new(k)?;
    let steps = (n - min) as usize;
    Ok(it.nth(steps).expect("infinite iterator").1)
}

/// Q_0, Q_1, …, Q_{n_max} (index = n).
pub fn terms_up_to(k: usize, n_max: usize) -> Result<Vec<Integer>, SequenceError> {
    let it = PellLucasTerms::new(k)?;
    Ok(it
        .skip_while(|(n, _)| *n < 0)
        .take(n_max + 1)
        .map(|(_, v)| v)
        .collect())
}

/// Fibonacci number F_m with F_1 = F_2 = 1.
pub fn fibonacci(m: u32) -> Integer {
    Integer::from(Integer::fibonacci(m))
}

/// Φ_k(x) by Horner's rule.
pub fn characteristic_poly(k: usize, x: &Float) -> Float {
    let prec = x.prec();
    let mut acc = Float::with_val(prec, 1u32);
    acc = Float::with_val(prec, &acc * x) - 2u32;
    for _ in 0..k - 1 {
        acc = Float::with_val(prec, &acc * x) - 1u32;
    }
    acc
}

/// Sign of Φ_k(x) for x > 1, from (x − 1)·Φ_k(x) = x^{k−1}(x² − 3x + 1) + 1.
/// `x` must carry about 2k bits beyond the precision of interest.
fn characteristic_sign(k: usize, x: &Float) -> std::cmp::Ordering {
    let prec = x.prec();
    let quad = Float::with_val(prec, x * x) - Float::with_val(prec, x * 3u32) + 1u32;
    let pow = Float::with_val(prec, rug::ops::Pow::pow(x, (k - 1) as u32));
    let v = Float::with_val(prec, &pow * &quad) + 1u32;
    v.cmp0().unwrap_or(std::cmp::Ordering::Equal)
}

fn phi_float(prec: u32) -> Float {
    (Float::with_val(prec, 5u32).sqrt() + 1u32) / 2u32
}

/// Lower and upper ends of the bracket φ²(1 − φ^{−k}) < γ < φ².
pub fn root_bracket(k: usize, prec: u32) -> (Float, Float) {
    let phi = phi_float(prec);
    let hi = Float::with_val(prec, phi.square_ref());
    let tail = Float::with_val(prec, rug::ops::Pow::pow(&phi, -(k as i32)));
    let lo = Float::with_val(prec, &hi * (1u32 - tail));
    (lo, hi)
}

fn bisect_root(k: usize, bits: u32) -> Float {
    bisect_to(k, bits, bits)
}

/// Bisection on the bracket until its width is below 2^-`stop`, carried at
/// the working precision for `bits`.
fn bisect_to(k: usize, bits: u32, stop: u32) -> Float {
    let work = bits + 2 * k as u32 + GUARD_BITS;
    let (mut lo, mut hi) = root_bracket(k, work);
    let target = Float::with_val(work, Float::i_exp(1, -(stop as i32)));
    loop {
        let width = Float::with_val(work, &hi - &lo);
        if width <= target {
            break;
        }
        let mid = Float::with_val(work, &lo + &hi) / 2u32;
        match characteristic_sign(k, &mid) {
            std::cmp::Ordering::Less => lo = mid,
            std::cmp::Ordering::Greater => hi = mid,
            std::cmp::Ordering::Equal => return Float::with_val(bits, mid),
        }
    }
    Float::with_val(bits, (lo + hi) / 2u32)
}

/// Bisection to 64 bits, then Newton on x^{k−1}(x² − 3x + 1) + 1 with
/// doubling precision. The result is accepted only if the sign still
/// changes across ±2^-bits; otherwise plain bisection is used.
fn hybrid_root(k: usize, bits: u32) -> Float {
    const COARSE: u32 = 64;
    if bits <= 2 * COARSE {
        return bisect_root(k, bits);
    }
    let coarse_stop = COARSE + (0.7 * k as f64) as u32;
    let mut x = bisect_to(k, coarse_stop + GUARD_BITS, coarse_stop);
    let mut good = COARSE;
    loop {
        good = (2 * good).min(bits + GUARD_BITS);
        let work = good + 2 * k as u32 + 2 * GUARD_BITS;
        let xw = Float::with_val(work, &x);
        let km1 = (k - 1) as u32;
        let pow_km2 = Float::with_val(work, rug::ops::Pow::pow(&xw, km1 - 1));
        let pow_km1 = Float::with_val(work, &pow_km2 * &xw);
        let quad = Float::with_val(work, xw.square_ref()) - Float::with_val(work, &xw * 3u32) + 1u32;
        let f = Float::with_val(work, &pow_km1 * &quad) + 1u32;
        let dquad = Float::with_val(work, &xw * 2u32) - 3u32;
        let df = Float::with_val(work, &pow_km2 * &quad) * km1
            + Float::with_val(work, &pow_km1 * &dquad);
        x = Float::with_val(work, &xw - Float::with_val(work, &f / &df));
        if good >= bits + GUARD_BITS {
            break;
        }
    }
    let work = bits + 2 * k as u32 + GUARD_BITS;
    let eps = Float::with_val(work, Float::i_exp(1, -(bits as i32)));
    let xw = Float::with_val(work, &x);
    let below = characteristic_sign(k, &Float::with_val(work, &xw - &eps));
    let above = characteristic_sign(k, &Float::with_val(work, &xw + &eps));
    if below.is_lt() && above.is_gt() {
        Float::with_val(bits, &x)
    } else {
        bisect_root(k, bits)
    }
}

/// γ(k) by bisection on the bracket (φ²(1 − φ^{−k}), φ²).
pub fn dominant_root(k: usize, prec: u32) -> Result<PrecReal, SequenceError> {
    check_order(k)?;
    let work = prec + 2 * k as u32 + GUARD_BITS;
    let (lo, hi) = root_bracket(k, work);
    if characteristic_sign(k, &lo).is_ge() || characteristic_sign(k, &hi).is_le() {
        return Err(SequenceError::BracketFailure(k));
    }
    let gamma = PrecReal::from_fn(prec, |bits| hybrid_root(k, bits));
    if !gamma.is_certified() {
        return Err(NumericsError::PrecisionExhausted { max_bits: 2 * prec }.into());
    }
    // independent check with Horner's rule: Φ_k(γ ∓ ε) straddles zero
    let eps_exp = -(prec as i32) + GUARD_BITS as i32;
    let horner_prec = 2 * prec + 2 * k as u32 + GUARD_BITS;
    let g = Float::with_val(horner_prec, gamma.check());
    let eps = Float::with_val(horner_prec, Float::i_exp(1, eps_exp));
    let below = characteristic_poly(k, &Float::with_val(horner_prec, &g - &eps));
    let above = characteristic_poly(k, &Float::with_val(horner_prec, &g + &eps));
    if !(below.is_sign_negative() && above.is_sign_positive()) || below.is_zero() {
        return Err(SequenceError::BracketFailure(k));
    }
    Ok(gamma)
}

/// γ(k) as an expression leaf, evaluated by bisection at whatever precision
/// is requested.
pub fn gamma_expr(k: usize) -> Expr {
    Expr::custom(format!("gamma({k})"), move |bits| hybrid_root(k, bits))
}

/// g_k(z) = (z − 1)/((k + 1)z² − 3kz + k − 1), evaluated on twins.
/// Whether (2γ − 2)g_k(γ) = 1 is known exactly. At k = 2 numerator minus
/// denominator is −(γ² − 2γ − 1) = 0.
pub fn dominant_coefficient_is_one(k: usize) -> bool {
    k == 2
}

pub fn g_k_value(k: usize, z: &PrecReal) -> PrecReal {
    let p = z.prec();
    let one = PrecReal::from_i64(1, p);
    let den = &(&PrecReal::from_i64(k as i64 + 1, p) * &z.powi(2))
        - &(&PrecReal::from_i64(3 * k as i64, p) * z)
        + PrecReal::from_i64(k as i64 - 1, p);
    &(z - &one) / &den
}

fn g_k_expr(k: usize, z: &Expr) -> (Expr, Expr) {
    let k = k as i64;
    let num = z.clone() - Expr::int(1);
    let den = Expr::int(k + 1) * z.powi(2) - Expr::int(3 * k) * z.clone() + Expr::int(k - 1);
    (num, den)
}

/// g_k at an arbitrary point. The denominator sign is certified first (with
/// escalation); an exact zero is a pole.
pub fn g_k_at(k: usize, z: &Expr, prec: u32) -> Result<PrecReal, SequenceError> {
    check_order(k)?;
    let (num, den) = g_k_expr(k, z);
    match expr_sign(&den, prec) {
        Sign::Zero => return Err(SequenceError::Pole),
        Sign::Undecided => {
            return Err(NumericsError::PrecisionExhausted {
                max_bits: MAX_PRECISION_BITS,
            }
            .into())
        }
        _ => {}
    }
    Ok(eval_at_precision(&(num / den), prec)?)
}

/// Default working precision for γ(k): max(256, 4k) bits.
pub fn default_precision(k: usize) -> u32 {
    (4 * k as u32).max(256)
}

/// γ(k) and g_k(γ) at a fixed working precision.
#[derive(Debug, Clone)]
pub struct PellLucasContext {
    k: usize,
    prec: u32,
    gamma: PrecReal,
    g_gamma: PrecReal,
}

impl PellLucasContext {
    pub fn new(k: usize) -> Result<Self, SequenceError> {
        PellLucasContext::with_precision(k, default_precision(k))
    }

    pub fn with_precision(k: usize, prec: u32) -> Result<Self, SequenceError> {
        let gamma = dominant_root(k, prec)?;
        let g_gamma = g_k_value(k, &gamma);
        let ctx = PellLucasContext {
            k,
            prec,
            gamma,
            g_gamma,
        };
        ctx.check_invariants()?;
        Ok(ctx)
    }

    fn check_invariants(&self) -> Result<(), SequenceError> {
        let p = self.prec;
        let (lo, hi) = root_bracket(self.k, p + 2 * self.k as u32 + GUARD_BITS);
        let g = self.gamma.check();
        if !(lo < *g && *g < hi) {
            return Err(SequenceError::BoundViolated(format!(
                "gamma({}) outside (phi^2(1 - phi^-k), phi^2)",
                self.k
            )));
        }
        let lower = PrecReal::from_decimal("0.276", p)?;
        let upper = PrecReal::from_decimal("0.5", p)?;
        let ok = lower.certified_lt(&self.g_gamma) == Some(true)
            && self.g_gamma.certified_lt(&upper) == Some(true);
        if !ok {
            return Err(SequenceError::BoundViolated(format!(
                "0.276 < g_k(gamma) < 0.5 for k = {}",
                self.k
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn gamma(&self) -> &PrecReal {
        &self.gamma
    }

    pub fn g_gamma(&self) -> &PrecReal {
        &self.g_gamma
    }

    /// (2γ − 2)·g_k(γ), the coefficient of γⁿ in the dominant term.
    pub fn dominant_coefficient(&self) -> PrecReal {
        let two = PrecReal::from_i64(2, self.prec);
        &(&(&two * &self.gamma) - &two) * &self.g_gamma
    }

    /// Runs `f` on this context, then on contexts at doubled precision while
    /// it answers `None`.
    fn certified<T>(&self, f: impl Fn(&PellLucasContext) -> Option<T>) -> Result<T, SequenceError> {
        if let Some(v) = f(self) {
            return Ok(v);
        }
        let mut prec = self.prec * 2;
        while prec <= MAX_PRECISION_BITS {
            let ctx = PellLucasContext::with_precision(self.k, prec)?;
            if let Some(v) = f(&ctx) {
                return Ok(v);
            }
            prec *= 2;
        }
        Err(NumericsError::PrecisionExhausted {
            max_bits: MAX_PRECISION_BITS,
        }
        .into())
    }
}

/// (2γ − 2)·g_k(γ)·γⁿ, within 2 of Q_n for every n ≥ 2 − k.
pub fn dominant_approx(ctx: &PellLucasContext, n: i64) -> Result<PrecReal, SequenceError> {
    let min = 2 - ctx.k as i64;
    if n < min {
        return Err(SequenceError::Domain(format!("n = {n} below 2 - k = {min}")));
    }
    Ok(&ctx.dominant_coefficient() * &ctx.gamma.powi(n))
}

/// Certifies |Q_n − (2γ − 2)g_k(γ)γⁿ| < 2.
pub fn dominant_error_below_two(ctx: &PellLucasContext, n: i64) -> Result<bool, SequenceError> {
    let q = term(ctx.k, n)?;
    dominant_approx(ctx, n)?;
    ctx.certified(|c| {
        let approx = dominant_approx(c, n).ok()?;
        let exact = PrecReal::from_integer(q.clone(), c.prec);
        let err = (&exact - &approx).abs();
        err.certified_lt(&PrecReal::from_i64(2, c.prec))
    })
}

/// Certifies γ^{n−1} ≤ Q_n ≤ 2γⁿ.
pub fn growth_bounds_check(ctx: &PellLucasContext, n: i64) -> Result<bool, SequenceError> {
    if n < 1 {
        return Err(SequenceError::Domain(format!("n = {n} must be at least 1")));
    }
    let q = term(ctx.k, n)?;
    ctx.certified(|c| {
        let exact = PrecReal::from_integer(q.clone(), c.prec);
        let lower = c.gamma.powi(n - 1);
        let upper = &PrecReal::from_i64(2, c.prec) * &c.gamma.powi(n);
        let a = lower.certified_le(&exact)?;
        let b = exact.certified_le(&upper)?;
        Some(a && b)
    })
}

/// Certified `ln n < (k/2)·ln φ`, i.e. n < φ^{k/2}.
fn below_phi_half_k(k: usize, n: i64, prec: u32) -> Result<bool, SequenceError> {
    if n < 1 {
        return Ok(true);
    }
    let lhs = Expr::int(n).ln();
    let rhs = Expr::rational(k as i64, 2) * Expr::phi().ln();
    Ok(matches!(expr_sign(&(rhs - lhs), prec), Sign::Positive))
}

/// 2φ^{2n+1}/(φ + 2).
pub fn phi_main_term(n: i64, prec: u32) -> PrecReal {
    let phi = PrecReal::phi(prec);
    let two = PrecReal::from_i64(2, prec);
    &(&two * &phi.powi(2 * n + 1)) / &(&phi + &two)
}

/// ξ with (2γ − 2)g_k(γ)γⁿ = (2φ^{2n+1}/(φ + 2))(1 + ξ), certified
/// |ξ| < 1.25/φ^{k/2}. Valid for k ≥ 50 and 1 < n < φ^{k/2}.
///
/// The two ingredient estimates are asserted along the way:
/// |(2γ − 2)γⁿ − 2φ^{2n+1}| < 4φ^{2n}/φ^{k/2} and |g_k(γ) − g_k(φ²)| < 4k/φ^k.
pub fn phi_error_xi(k: usize, n: i64) -> Result<PrecReal, SequenceError> {
    if k < 50 {
        return Err(SequenceError::Domain(format!("k = {k} must be at least 50")));
    }
    let prec = default_precision(k) + 64;
    if n <= 1 || !below_phi_half_k(k, n, prec)? {
        return Err(SequenceError::Domain(format!(
            "need 1 < n < phi^(k/2), got n = {n}, k = {k}"
        )));
    }
    let ctx = PellLucasContext::with_precision(k, prec)?;
    let (xi, ok_i, ok_ii, ok_xi) = ctx.certified(|c| {
        let p = c.prec;
        let phi = PrecReal::phi(p);
        let two = PrecReal::from_i64(2, p);
        let phi_half_k = phi.powi(k as i64).sqrt();
        // (i), divided through by φ^{2n}
        let lead = &(&(&two * &c.gamma) - &two) * &c.gamma.powi(n);
        let scaled = &lead / &phi.powi(2 * n);
        let lhs_i = (&scaled - &(&two * &phi)).abs();
        let rhs_i = &PrecReal::from_i64(4, p) / &phi_half_k;
        let ok_i = lhs_i.certified_lt(&rhs_i)?;
        // (ii)
        let g_phi2 = PrecReal::from_i64(1, p) / (&phi + &two);
        let lhs_ii = (&c.g_gamma - &g_phi2).abs();
        let rhs_ii = &PrecReal::from_i64(4 * k as i64, p) / &phi.powi(k as i64);
        let ok_ii = lhs_ii.certified_lt(&rhs_ii)?;
        let approx = dominant_approx(c, n).ok()?;
        let xi = &(&approx / &phi_main_term(n, p)) - &PrecReal::from_i64(1, p);
        let bound = &PrecReal::from_decimal("1.25", p).ok()? / &phi_half_k;
        let ok_xi = xi.abs().certified_lt(&bound)?;
        Some((xi, ok_i, ok_ii, ok_xi))
    })?;
    if !ok_i {
        return Err(SequenceError::BoundViolated(format!(
            "|(2g-2)g^n - 2phi^(2n+1)| < 4phi^(2n)/phi^(k/2) at k={k}, n={n}"
        )));
    }
    if !ok_ii {
        return Err(SequenceError::BoundViolated(format!(
            "|g_k(gamma) - g_k(phi^2)| < 4k/phi^k at k={k}"
        )));
    }
    if !ok_xi {
        return Err(SequenceError::BoundViolated(format!(
            "|xi| < 1.25/phi^(k/2) at k={k}, n={n}"
        )));
    }
    Ok(xi)
}

/// (2φ^{2n+1}/(φ + 2), ζ) with Q_n = (2φ^{2n+1}/(φ + 2))(1 + ζ), certified
/// |ζ| < 41/φ^{k/2}. Requires k ≥ 2, 2n ≥ k/2 and n < φ^{k/2}; warns for
/// k < 50, where the estimate is not backed by the ξ bound.
pub fn phi_approx_term(k: usize, n: i64) -> Result<(PrecReal, PrecReal), SequenceError> {
    check_order(k)?;
    if 4 * n < k as i64 {
        return Err(SequenceError::Domain(format!("need 2n >= k/2, got n = {n}, k = {k}")));
    }
    let prec = default_precision(k) + 64;
    if !below_phi_half_k(k, n, prec)? {
        return Err(SequenceError::Domain(format!(
            "need n < phi^(k/2), got n = {n}, k = {k}"
        )));
    }
    if n > MAX_EXACT_INDEX {
        return Err(SequenceError::Domain(format!(
            "n = {n} exceeds the exact-term limit {MAX_EXACT_INDEX}"
        )));
    }
    if k < 50 {
        warn!("phi_approx_term: k = {k} < 50, estimate outside the range backed by the xi bound");
    }
    let q = term(k, n)?;
    let (base, zeta, ok) = with_escalation(prec, |p| {
        let base = phi_main_term(n, p);
        let exact = PrecReal::from_integer(q.clone(), p);
        let zeta = &(&exact / &base) - &PrecReal::from_i64(1, p);
        let phi = PrecReal::phi(p);
        let bound = &PrecReal::from_i64(41, p) / &phi.powi(k as i64).sqrt();
        let ok = zeta.abs().certified_lt(&bound)?;
        Some((base, zeta, ok))
    })?;
    if !ok {
        return Err(SequenceError::BoundViolated(format!(
            "|zeta| < 41/phi^(k/2) at k={k}, n={n}"
        )));
    }
    Ok((base, zeta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_refinement_matches_bisection() {
        for (k, bits) in [(2usize, 300u32), (3, 500), (17, 400), (120, 700), (600, 1200)] {
            let a = bisect_root(k, bits);
            let b = hybrid_root(k, bits);
            let diff = Float::with_val(bits, &a - &b).abs();
            assert!(diff < Float::with_val(bits, Float::i_exp(1, 2 - bits as i32)), "k = {k}");
        }
    }

    /// Direct recurrence over an explicit vector, independent of the
    /// sliding-window iterator.
    fn naive_terms(k: usize, n_max: usize) -> Vec<Integer> {
        let offset = k - 2;
        let mut v = vec![Integer::new(); offset];
        v.push(Integer::from(2));
        v.push(Integer::from(2));
        while v.len() < offset + n_max + 1 {
            let len = v.len();
            let mut next = Integer::from(&v[len - 1] * 2u32);
            for j in 2..=k {
                next += &v[len - j];
            }
            v.push(next);
        }
        v.split_off(offset)
    }

    #[test]
    fn known_small_terms() {
        assert_eq!(term(2, 5).unwrap(), 82);
        assert_eq!(term(3, 7).unwrap(), 662);
        assert_eq!(term(4, 0).unwrap(), 2);
        assert_eq!(term(6, 6).unwrap(), 288);
        assert_eq!(term(2, 10).unwrap(), 6726);
        assert_eq!(term(5, -3).unwrap(), 0);
    }

    #[test]
    fn index_below_start_is_rejected() {
        assert_eq!(
            term(4, -3),
            Err(SequenceError::IndexBelowStart { k: 4, n: -3, min: -2 })
        );
        assert_eq!(term(1, 3), Err(SequenceError::BadOrder(1)));
    }

    #[test]
    fn iterator_matches_naive_recurrence() {
        for k in 2..=12 {
            let fast = terms_up_to(k, 150).unwrap();
            assert_eq!(fast, naive_terms(k, 150), "k={k}");
        }
    }

    #[test]
    fn fibonacci_values() {
        assert_eq!(fibonacci(12), 144);
        assert_eq!(fibonacci(2), 1);
        assert_eq!(fibonacci(1), 1);
        assert_eq!(fibonacci(0), 0);
        assert_eq!(Integer::from(fibonacci(10) * 2u32), term(5, 5).unwrap());
    }

    #[test]
    fn shift_identity_with_fibonacci() {
        // holds for 1 ≤ n ≤ k and fails from n = k + 1 on
        for k in 2..=100 {
            let ts = terms_up_to(k, k + 1).unwrap();
            for n in 1..=k {
                assert_eq!(ts[n], Integer::from(fibonacci(2 * n as u32) * 2u32), "k={k} n={n}");
            }
            let next = &ts[k + 1];
            assert_eq!(
                Integer::from(fibonacci(2 * (k as u32 + 1)) * 2u32) - next,
                2,
                "k={k}"
            );
        }
    }

    #[test]
    fn dominant_root_small_orders() {
        let g2 = dominant_root(2, 256).unwrap();
        let s2 = Float::with_val(300, 2u32).sqrt() + 1u32;
        let diff = Float::with_val(300, g2.check() - &s2).abs();
        assert!(diff < Float::with_val(300, Float::i_exp(1, -200)));
        let g3 = dominant_root(3, 256).unwrap();
        // bisection oracle on x^3 - 2x^2 - x - 1 over (2, 3)
        assert!(g3.to_decimal(40).starts_with("2.54681827688408207913599750880"));
    }

    #[test]
    fn dominant_root_large_order_is_near_phi_squared() {
        let g = dominant_root(500, default_precision(500)).unwrap();
        let phi2 = PrecReal::phi(default_precision(500)).powi(2);
        let gap = (&phi2 - &g).abs();
        assert_eq!(
            gap.certified_lt(&PrecReal::from_decimal("1e-100", 2000).unwrap()),
            Some(true)
        );
    }

    #[test]
    fn g_k_examples() {
        let g = g_k_at(9, &Expr::phi().powi(2), 128).unwrap();
        let target = &PrecReal::from_i64(1, 128) / &(PrecReal::phi(128) + PrecReal::from_i64(2, 128));
        assert_eq!((&g - &target).sign(), Sign::Zero);
        let g1 = g_k_at(2, &Expr::int(1), 128).unwrap();
        assert_eq!(g1.sign(), Sign::Zero);
        let gg = g_k_at(2, &gamma_expr(2), 256).unwrap();
        // g_2(1 + √2) = 1/(2√2)
        assert!((gg.to_f64() - 0.353_553_390_593_273_8).abs() < 1e-15);
    }

    #[test]
    fn g_k_pole_is_reported() {
        // k = 2: 3z^2 - 6z + 1 vanishes at z = 1 ± √(2/3), irrational; use
        // k = 3: 4z^2 - 9z + 2 = (4z - 1)(z - 2)
        assert!(matches!(g_k_at(3, &Expr::int(2), 128), Err(SequenceError::Pole)));
    }

    #[test]
    fn dominant_approx_examples() {
        let c2 = PellLucasContext::new(2).unwrap();
        assert!(dominant_error_below_two(&c2, 10).unwrap());
        assert!(dominant_error_below_two(&c2, 0).unwrap());
        let c3 = PellLucasContext::new(3).unwrap();
        assert!(dominant_error_below_two(&c3, 2).unwrap());
        assert!(dominant_approx(&c3, -2).is_err());
        let a = dominant_approx(&c2, 10).unwrap().to_f64();
        assert!((a - 6726.0).abs() < 2.0);
    }

    #[test]
    fn growth_bounds_examples() {
        let c2 = PellLucasContext::new(2).unwrap();
        assert!(growth_bounds_check(&c2, 1).unwrap());
        assert!(growth_bounds_check(&c2, 7).unwrap());
        let c5 = PellLucasContext::new(5).unwrap();
        assert!(growth_bounds_check(&c5, 100).unwrap());
        assert!(growth_bounds_check(&c5, 0).is_err());
        let g6 = c2.gamma().powi(6).to_f64();
        assert!((g6 - 197.99).abs() < 0.01);
    }

    #[test]
    fn xi_examples() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let xi = phi_error_xi(50, 40).unwrap();
        assert!(xi.to_f64().abs() < 1.25 / phi.powf(25.0));
        assert!(1.25 / phi.powf(25.0) < 7.5e-6);
        let xi = phi_error_xi(100, 2).unwrap();
        assert!(xi.to_f64().abs() < 1.25 / phi.powf(50.0));
        assert!(phi_error_xi(49, 10).is_err());
        assert!(phi_error_xi(50, 1).is_err());
        // φ^25 ≈ 167761
        assert!(phi_error_xi(50, 167_762).is_err());
    }

    #[test]
    fn zeta_examples() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let (_, z) = phi_approx_term(50, 30).unwrap();
        assert!(z.to_f64().abs() < 41.0 / phi.powf(25.0));
        let (_, z) = phi_approx_term(60, 15).unwrap();
        assert!(z.to_f64().abs() < 41.0 / phi.powf(30.0));
        let (base, z) = phi_approx_term(4, 1).unwrap();
        assert!(base.to_decimal(20).starts_with("2.34164078649987381"));
        assert!((z.to_f64() - (-0.145_898_033_750_315_4)).abs() < 1e-15);
        assert!(phi_approx_term(10, 2).is_err());
    }

    #[test]
    fn zeta_is_exact_power_below_shift() {
        // for n ≤ k + 1, Q_n = 2F_{2n} = 2φ^{2n}/√5 · (1 − φ^{-4n})
        let (_, z) = phi_approx_term(40, 12).unwrap();
        let phi = PrecReal::phi(z.prec());
        let expect = -phi.powi(-48);
        let diff = (&z - &expect).abs();
        assert_eq!(diff.certified_lt(&PrecReal::from_decimal("1e-100", 512).unwrap()), Some(true));
    }

    #[test]
    fn dominant_coefficient_one_only_at_two() {
        let c = PellLucasContext::new(2).unwrap().dominant_coefficient();
        assert!((c.to_f64() - 1.0).abs() < 1e-60);
        for k in 3..40 {
            let c = PellLucasContext::new(k).unwrap().dominant_coefficient();
            let d = (&c - &PrecReal::from_i64(1, c.prec())).abs();
            assert_eq!(d.certified_lt(&PrecReal::from_decimal("1e-6", c.prec()).unwrap()), Some(false), "k = {k}");
            assert!(!dominant_coefficient_is_one(k));
        }
    }
}
