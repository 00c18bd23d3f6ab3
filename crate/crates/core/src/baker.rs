//! Matveev's lower bound and the explicit bound pipeline on n.
//!
//! Every constant the argument prints is replayed: the step recomputes the
//! quantity from the previous printed constant and records a [`ChainCheck`]
//! asserting that the computed value does not exceed the printed one.
//! Inequalities that hold on a half-line (n ≥ 4, k ≥ 2) are checked at the
//! left endpoint, where each of them is tightest.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{NumericsError, PrecReal, Sign};
use crate::sequences::{PellLucasContext, SequenceError};

const PREC: u32 = 256;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BakerError {
    #[error("invalid linear form: {0}")]
    InvalidForm(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// Input data for Matveev's theorem.
#[derive(Debug, Clone)]
pub struct LinearFormInstance {
    pub label: String,
    pub s: usize,
    pub d_l: u32,
    /// D ≥ max |a_j|.
    pub d: PrecReal,
    /// B_j ≥ max{d_L h(η_j), |log η_j|, 0.16}.
    pub b: Vec<PrecReal>,
    pub eta_descriptions: Vec<String>,
    /// Concrete exponents a_j when known.
    pub exponents: Vec<Integer>,
}

impl LinearFormInstance {
    pub fn validate(&self) -> Result<(), BakerError> {
        if self.s < 2 {
            return Err(BakerError::InvalidForm(format!("s = {} < 2", self.s)));
        }
        if self.b.len() != self.s {
            return Err(BakerError::InvalidForm(format!(
                "{} height bounds for s = {}",
                self.b.len(),
                self.s
            )));
        }
        if self.d_l == 0 {
            return Err(BakerError::InvalidForm("d_L = 0".into()));
        }
        let floor = dec("0.16");
        for (j, bj) in self.b.iter().enumerate() {
            if bj.certified_lt(&floor) == Some(true) {
                return Err(BakerError::InvalidForm(format!("B_{} below 0.16", j + 1)));
            }
        }
        if let Some(max) = self.exponents.iter().map(|a| a.clone().abs()).max() {
            let max = PrecReal::from_integer(max, PREC);
            if self.d.certified_lt(&max) == Some(true) {
                return Err(BakerError::InvalidForm("D below max |a_j|".into()));
            }
        }
        Ok(())
    }
}

/// One replayed inequality lhs < rhs.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ChainCheck {
    pub label: String,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

/// A bound with the formula it evaluates and the replay checks behind it.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub stage: String,
    pub formula: String,
    /// Decimal value, 30 significant digits.
    pub value: String,
    /// Four significant digits, rounded up.
    pub value_rounded_up: String,
    pub inputs: Vec<(String, String)>,
    pub checks: Vec<ChainCheck>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub numeric: PrecReal,
}

impl BoundReport {
    fn new(stage: &str, formula: &str, numeric: PrecReal) -> Self {
        BoundReport {
            stage: stage.into(),
            formula: formula.into(),
            value: numeric.to_decimal(30),
            value_rounded_up: round_up_sig(&numeric, 4),
            inputs: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            numeric,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failed_checks(&self) -> Vec<&ChainCheck> {
        self.checks.iter().filter(|c| !c.holds).collect()
    }
}

fn dec(s: &str) -> PrecReal {
    PrecReal::from_decimal(s, PREC).expect("literal")
}

fn int(i: i64) -> PrecReal {
    PrecReal::from_i64(i, PREC)
}

fn ln_int(i: i64) -> PrecReal {
    int(i).ln()
}

fn ln_phi() -> PrecReal {
    PrecReal::phi(PREC).ln()
}

/// Records `lhs < rhs` (certified; undecided counts as a failure).
fn check(checks: &mut Vec<ChainCheck>, label: &str, lhs: &PrecReal, rhs: &PrecReal) -> bool {
    let holds = lhs.certified_lt(rhs) == Some(true);
    checks.push(ChainCheck {
        label: label.into(),
        lhs: lhs.to_decimal(12),
        rhs: rhs.to_decimal(12),
        holds,
    });
    holds
}

/// Rounds up to `digits` significant digits, rendered as `d.ddde±x`.
pub fn round_up_sig(x: &PrecReal, digits: u32) -> String {
    let v = x.check();
    if v.is_zero() || !v.is_finite() {
        return v.to_string();
    }
    let (neg, mantissa, exp) = round_sig_parts(v, digits, !v.is_sign_negative());
    let s = mantissa.to_string();
    let body = if s.len() > 1 {
        format!("{}.{}", &s[..1], &s[1..])
    } else {
        s
    };
    format!("{}{}e{}", if neg { "-" } else { "" }, body, exp)
}

/// Exact rational upper bound with `digits` significant digits.
pub fn round_up_rational(x: &PrecReal, digits: u32) -> Rational {
    let v = x.check();
    if v.is_zero() {
        return Rational::new();
    }
    let (neg, mantissa, exp) = round_sig_parts(v, digits, !v.is_sign_negative());
    let shift = exp - (digits as i64 - 1);
    let ten = Rational::from(10);
    let scale = if shift >= 0 {
        Rational::from(Integer::from(10).pow(shift as u32))
    } else {
        ten.pow(shift as i32)
    };
    let r = Rational::from(mantissa) * scale;
    if neg {
        -r
    } else {
        r
    }
}

/// (sign, mantissa with `digits` digits, decimal exponent), rounding the
/// magnitude up when `up` and down otherwise.
fn round_sig_parts(v: &Float, digits: u32, up: bool) -> (bool, Integer, i64) {
    let work = v.prec() + 64;
    let mag = Float::with_val(work, v.abs_ref());
    let mut exp = Float::with_val(work, mag.log10_ref()).floor().to_f64() as i64;
    loop {
        let shift = exp - (digits as i64 - 1);
        let ten = Float::with_val(work, 10);
        let scaled = Float::with_val(work, &mag / ten.pow(shift));
        let rounded = if up { scaled.ceil() } else { scaled.floor() };
        let m = rounded.to_integer().expect("finite");
        let len = m.to_string().len() as u32;
        if len > digits {
            exp += 1;
            continue;
        }
        if len < digits {
            exp -= 1;
            continue;
        }
        return (v.is_sign_negative(), m, exp);
    }
}

/// 1.4·30^(s+3)·s^4.5.
pub fn matveev_constant(s: usize) -> PrecReal {
    let s_r = int(s as i64);
    let c = &dec("1.4") * &int(30).powi(s as i64 + 3);
    &c * &s_r.pow(&dec("4.5"))
}

/// 1.4·30^(s+3)·s^4.5·d_L²·(1 + log d_L)·(1 + log D)·B₁⋯B_s, an upper bound
/// for −log|Λ|.
pub fn matveev_bound(inst: &LinearFormInstance) -> Result<PrecReal, BakerError> {
    inst.validate()?;
    let one = int(1);
    let dl = int(inst.d_l as i64);
    let mut v = &matveev_constant(inst.s) * &dl.powi(2);
    v = &v * &(&one + &dl.ln());
    v = &v * &(&one + &inst.d.ln());
    for bj in &inst.b {
        v = &v * bj;
    }
    Ok(v)
}

/// Exact ingredients of h(9(2γ − 2)g_k(γ)/a) against the cap 10.2·log k.
#[derive(Debug, Clone)]
pub struct HeightBound {
    /// log 9 + log 4 + 5·log k.
    pub exact: PrecReal,
    /// 10.2·log k.
    pub cap: PrecReal,
}

impl HeightBound {
    pub fn within_cap(&self) -> bool {
        self.exact.certified_lt(&self.cap) == Some(true)
    }
}

pub fn height_eta3_lambda1(k: usize) -> HeightBound {
    let lk = ln_int(k as i64);
    let exact = &(&ln_int(9) + &ln_int(4)) + &(&int(5) * &lk);
    let cap = &dec("10.2") * &lk;
    HeightBound { exact, cap }
}

/// −log(1 − a)/a.
pub fn deweger_factor(a: &PrecReal) -> PrecReal {
    let one = PrecReal::from_i64(1, a.prec());
    &(-(&one - a).ln()) / a
}

/// Bound on |log(1 + x)| given |x| < `lambda_abs_bound` < a.
pub fn deweger_transfer(lambda_abs_bound: &PrecReal, a: &PrecReal) -> Result<PrecReal, BakerError> {
    let zero = PrecReal::from_i64(0, a.prec());
    let one = PrecReal::from_i64(1, a.prec());
    if zero.certified_lt(a) != Some(true) || a.certified_lt(&one) != Some(true) {
        return Err(BakerError::Precondition("need 0 < a < 1".into()));
    }
    if lambda_abs_bound.certified_lt(a) != Some(true) {
        return Err(BakerError::Precondition(format!(
            "|Lambda| bound {} not below a = {}",
            lambda_abs_bound.to_decimal(8),
            a.to_decimal(8)
        )));
    }
    Ok(&deweger_factor(a) * lambda_abs_bound)
}

/// 2^m·S·(log S)^m, an upper bound for any x with x/(log x)^m < S.
pub fn sanchez_bound(m: u32, s: &PrecReal) -> Result<PrecReal, BakerError> {
    if m == 0 {
        return Err(BakerError::Precondition("m must be at least 1".into()));
    }
    let threshold = PrecReal::from_integer(Integer::from(4 * m * m).pow(m), s.prec());
    if s.certified_lt(&threshold) != Some(false) {
        return Err(BakerError::Precondition(format!(
            "S = {} below (4m^2)^m for m = {m}",
            s.to_decimal(8)
        )));
    }
    let two_m = PrecReal::from_integer(Integer::from(1) << m, s.prec());
    Ok(&(&two_m * s) * &s.ln().powi(m as i64))
}

/// 1.34·10³⁰·k⁸·(log k)⁵.
pub fn bound_n_in_k(k: usize) -> PrecReal {
    let kr = int(k as i64);
    &(&dec("1.34e30") * &kr.powi(8)) * &kr.ln().powi(5)
}

/// Exact window (n − 1)/3.4 < l + m < (n + 2.6)/2.
pub fn lm_window(n: u64) -> (Rational, Rational) {
    let n = Rational::from(n);
    let lower = (n.clone() - 1u32) * Rational::from((5, 17));
    let upper = (n + Rational::from((13, 5))) / 2u32;
    (lower, upper)
}

/// The sharper window before the 2 < γ < 3 simplification:
/// (n − 1)·log γ/log 10 < l + m < (n log γ + log 2)/log 10 + 1.
pub fn lm_window_sharp(n: u64, gamma: &PrecReal) -> (f64, f64) {
    let p = gamma.prec();
    let lg = gamma.ln();
    let l10 = PrecReal::from_i64(10, p).ln();
    let nn = PrecReal::from_integer(n, p);
    let one = PrecReal::from_i64(1, p);
    let lower = &(&(&nn - &one) * &lg) / &l10;
    let upper = &(&(&(&nn * &lg) + &PrecReal::from_i64(2, p).ln()) / &l10) + &one;
    (lower.to_f64(), upper.to_f64())
}

pub fn lm_window_contains(n: u64, lm: u64) -> bool {
    let (lo, hi) = lm_window(n);
    let lm = Rational::from(lm);
    lo < lm && lm < hi
}

fn two_point_five_and_one_point_eight(checks: &mut Vec<ChainCheck>) {
    let one = int(1);
    let l2 = ln_int(2);
    let l4 = ln_int(4);
    check(checks, "1 + log k < 2.5 log k at k = 2", &(&one + &l2), &(&dec("2.5") * &l2));
    check(checks, "1 + log n < 1.8 log n at n = 4", &(&one + &l4), &(&dec("1.8") * &l4));
}

/// Coefficient c₁ in l·log 10 < c₁·k⁴·log²k·log n (printed 1.68·10¹³), from
/// the first linear form 10^{−(l+m)}γⁿ·9(2γ − 2)g_k(γ)/a − 1.
pub fn lambda1_report(k: usize, n: Option<u64>) -> Result<BoundReport, BakerError> {
    if k < 2 {
        return Err(BakerError::Precondition(format!("k = {k} < 2")));
    }
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let ctx = PellLucasContext::new(k)?;
    let kr = int(k as i64);
    let lk = kr.ln();

    let h = height_eta3_lambda1(k);
    check(&mut checks, "h(eta3) ingredients below 10.2 log k", &h.exact, &h.cap);
    let h2 = height_eta3_lambda1(2);
    check(&mut checks, "log 9 + log 4 + 5 log 2 < 10.2 log 2", &h2.exact, &h2.cap);
    let log3 = ln_int(3);
    check(&mut checks, "log gamma < log 3", &ctx.gamma().ln(), &log3);

    // Matveev with d_L = k, B = (k log 10, log 3, 10.2 k log k), D = n.
    let matveev_coeff = &(&(&matveev_constant(3) * &ln_int(10)) * &log3) * &dec("10.2");
    check(&mut checks, "Matveev coefficient <= 3.7e12", &matveev_coeff, &dec("3.7e12"));
    check(&mut checks, "1.4*30^6*3^4.5 < 1.432e11", &matveev_constant(3), &dec("1.432e11"));
    two_point_five_and_one_point_eight(&mut checks);

    let base = &(&dec("3.7e12") * &dec("2.5")) * &dec("1.8");
    let k2 = int(2);
    let scale2 = &(&k2.powi(4) * &k2.ln().powi(2)) * &ln_int(4);
    let lhs = &(&base * &scale2) + &dec("11.8").ln();
    let rhs = &dec("1.68e13") * &scale2;
    check(&mut checks, "log 11.8 + 1.665e13 k^4 log^2 k log n < 1.68e13 k^4 log^2 k log n at (2, 4)", &lhs, &rhs);

    let coeff = &(&dec("1.68e13") * &kr.powi(4)) * &lk.powi(2);
    let (value, formula) = match n {
        Some(n) => {
            if n < 4 {
                return Err(BakerError::Precondition(format!("n = {n} < 4")));
            }
            (&coeff * &PrecReal::from_integer(n, PREC).ln(), "1.68e13 * k^4 * log^2 k * log n")
        }
        None => {
            notes.push("n not given: value is the coefficient of log n".into());
            (coeff, "1.68e13 * k^4 * log^2 k")
        }
    };
    let mut r = BoundReport::new("lambda1", formula, value);
    r.inputs.push(("k".into(), k.to_string()));
    if let Some(n) = n {
        r.inputs.push(("n".into(), n.to_string()));
    }
    r.inputs.push(("matveev_coefficient".into(), matveev_coeff.to_decimal(12)));
    r.notes = notes;
    r.checks = checks;
    Ok(r)
}

/// The second linear form 10^m γ^{−n}(a·10^l − a + b)/(9(2γ − 2)g_k(γ)) − 1:
/// n/(log n)² < 4·10²⁵·k⁸·log³k.
pub fn lambda2_report(k: usize, n: Option<u64>) -> Result<BoundReport, BakerError> {
    if k < 2 {
        return Err(BakerError::Precondition(format!("k = {k} < 2")));
    }
    let mut checks = Vec::new();
    let mut notes = vec![
        "the third algebraic number is (a*10^l - a + b)/(9(2g-2)g_k(g)); its height bound is labelled h(eta_1) in the source derivation".to_string(),
    ];
    let kr = int(k as i64);
    let lk = kr.ln();
    two_point_five_and_one_point_eight(&mut checks);

    // h(η₃) < 4 log 9 + 3 log 2 + l log 10 + 5 log k, with l log 10 from λ₁.
    let k2 = int(2);
    let scale2 = &(&k2.powi(4) * &k2.ln().powi(2)) * &ln_int(4);
    let small = &(&(&int(4) * &ln_int(9)) + &(&int(3) * &ln_int(2))) + &(&int(5) * &k2.ln());
    let lhs = &small + &(&dec("1.68e13") * &scale2);
    let rhs = &dec("1.69e13") * &scale2;
    check(&mut checks, "4 log 9 + 3 log 2 + 5 log k + 1.68e13 k^4 log^2 k log n < 1.69e13 k^4 log^2 k log n at (2, 4)", &lhs, &rhs);
    notes.push("B3 = 1.69e13 k^5 log^2 k log n = k * (height bound), as required by d_L = k".into());

    let matveev_coeff = &(&(&(&(&matveev_constant(3) * &dec("2.5")) * &dec("1.8")) * &ln_int(10))
        * &ln_int(3))
        * &dec("1.69e13");
    check(&mut checks, "Matveev coefficient <= 2.76e25", &matveev_coeff, &dec("2.76e25"));

    // n log γ − log 5.5 < 2.76e25 k⁸ log³k log²n with γ > 2.
    let l4sq = ln_int(4).powi(2);
    let scale = &(&k2.powi(8) * &k2.ln().powi(3)) * &l4sq;
    let lhs = &(&(&dec("2.76e25") * &scale) + &dec("5.5").ln()) / &ln_int(2);
    let rhs = &dec("4e25") * &scale;
    check(&mut checks, "(2.76e25 k^8 log^3 k log^2 n + log 5.5)/log 2 < 4e25 k^8 log^3 k log^2 n at (2, 4)", &lhs, &rhs);

    let s = &(&dec("4e25") * &kr.powi(8)) * &lk.powi(3);
    let value = match n {
        Some(n) => {
            if n < 4 {
                return Err(BakerError::Precondition(format!("n = {n} < 4")));
            }
            let ln_n = PrecReal::from_integer(n, PREC).ln();
            &s * &ln_n.powi(2)
        }
        None => {
            notes.push("n not given: value is S = 4e25 k^8 log^3 k, the bound on n/(log n)^2".into());
            s
        }
    };
    let formula = if n.is_some() {
        "4e25 * k^8 * log^3 k * log^2 n"
    } else {
        "4e25 * k^8 * log^3 k"
    };
    let mut r = BoundReport::new("lambda2", formula, value);
    r.inputs.push(("k".into(), k.to_string()));
    if let Some(n) = n {
        r.inputs.push(("n".into(), n.to_string()));
    }
    r.inputs.push(("matveev_coefficient".into(), matveev_coeff.to_decimal(12)));
    r.notes = notes;
    r.checks = checks;
    Ok(r)
}

/// n < 1.34·10³⁰·k⁸·log⁵k, replayed through the Λ₂ chain and Lemma 2.8 with
/// m = 2.
pub fn lemma31_report(k: usize) -> Result<BoundReport, BakerError> {
    let l2 = lambda2_report(k, None)?;
    let mut checks = l2.checks.clone();
    let kr = int(k as i64);
    let lk = kr.ln();
    let s = &(&dec("4e25") * &kr.powi(8)) * &lk.powi(3);
    let direct = sanchez_bound(2, &s)?;

    let k2 = int(2);
    let lk2 = k2.ln();
    check(&mut checks, "log(4e25) <= 58.95 + 1e-3", &dec("4e25").ln(), &dec("58.951"));
    let lhs = &(&(&dec("4e25").ln() + &(&int(8) * &lk2)) + &(&int(3) * &lk2.ln()));
    check(&mut checks, "log(4e25) + 8 log k + 3 log log k < 91.5 log k at k = 2", lhs, &(&dec("91.5") * &lk2));
    check(&mut checks, "1.6e26 * 91.5^2 < 1.34e30", &(&dec("1.6e26") * &dec("91.5").powi(2)), &dec("1.34e30"));

    let value = bound_n_in_k(k);
    check(&mut checks, "4S(log S)^2 < 1.34e30 k^8 log^5 k", &direct, &value);
    let mut r = BoundReport::new("lemma31", "1.34e30 * k^8 * log^5 k", value);
    r.inputs.push(("k".into(), k.to_string()));
    r.inputs.push(("sanchez_direct".into(), direct.to_decimal(12)));
    r.notes = l2.notes;
    r.checks = checks;
    Ok(r)
}

/// Both cases of the absolute bound, each replayed from the printed
/// intermediate constants.
#[derive(Debug, Clone)]
pub struct AbsoluteBound {
    pub case1: PrecReal,
    pub case2: PrecReal,
    pub checks: Vec<ChainCheck>,
}

impl AbsoluteBound {
    pub fn max(&self) -> PrecReal {
        self.case1.max(&self.case2)
    }
}

pub fn absolute_bound_cases() -> Result<AbsoluteBound, BakerError> {
    let mut checks = Vec::new();
    let one = int(1);
    let two = int(2);
    let lphi = ln_phi();
    let l10 = ln_int(10);
    let l4 = ln_int(4);

    // Large k: Lemma 3.1 puts n inside the φ-approximation range.
    let n550 = bound_n_in_k(550);
    check(&mut checks, "1.34e30 550^8 log^5 550 < phi^275", &n550, &PrecReal::phi(PREC).powi(275));
    let zeta = &int(41) / &PrecReal::phi(PREC).powi(275);
    check(&mut checks, "41/phi^275 < 1/2", &zeta, &dec("0.5"));

    // Third form: d_L = 2, B = (log(72²φ), log φ, 2 log 10), D = 2n + 1.
    let b1 = (&int(72 * 72) * &PrecReal::phi(PREC)).ln();
    let hb = &(&ln_int(9) + &(&int(3) * &ln_int(2))) + &(&lphi / &two);
    check(&mut checks, "2 h(eta1) <= log(72^2 phi) (equality, checked with slack 1e-20)", &(&two * &hb), &(&b1 + &dec("1e-20")));
    check(&mut checks, "1 + log(2n+1) < 2.4 log n at n = 4", &(&one + &ln_int(9)), &(&dec("2.4") * &l4));
    let base = &(&(&(&matveev_constant(3) * &int(4)) * &(&one + &ln_int(2))) * &dec("2.4")) * &lphi;
    let lambda3 = &(&(&base * &b1) * &two) * &l10;
    check(&mut checks, "third form: Matveev coefficient < 4.67e13", &lambda3, &dec("4.67e13"));
    check(&mut checks, "Matveev coefficient log n + log 57.5 < 4.67e13 log n at n = 4", &(&(&lambda3 * &l4) + &dec("57.5").ln()), &(&dec("4.67e13") * &l4));

    // Case 1: (k/2) log φ < 4.67e13 log n.
    let k_coeff = &(&two * &dec("4.67e13")) / &lphi;
    check(&mut checks, "case 1: 2 * 4.67e13 / log phi < 1.95e14", &k_coeff, &dec("1.95e14"));
    let s1 = &dec("1.34e30") * &dec("1.95e14").powi(8);
    check(&mut checks, "case 1: 1.34e30 (1.95e14)^8 < 2.81e144", &s1, &dec("2.81e144"));
    let case1 = sanchez_bound(13, &dec("2.81e144"))?;
    check(&mut checks, "case 1: 2^13 S (log S)^13 < 1.41e181", &case1, &dec("1.41e181"));

    // Case 2: l log 10 < 4.67e13 log n.
    let h_small = &(&(&int(3) * &ln_int(9)) + &(&int(4) * &ln_int(2))) + &(&lphi / &two);
    check(&mut checks, "case 2: 3 log 9 + 4 log 2 + log(phi)/2 + 4.67e13 log n < 4.68e13 log n at n = 4", &(&h_small + &(&dec("4.67e13") * &l4)), &(&dec("4.68e13") * &l4));
    let lambda4 = &(&(&base * &two) * &l10) * &dec("9.36e13");
    check(&mut checks, "case 2: Matveev coefficient < 4.83e26", &lambda4, &dec("4.83e26"));
    let l4sq = l4.powi(2);
    let k2_coeff = &(&two * &(&(&dec("4.83e26") * &l4sq) + &dec("42.12").ln())) / &(&lphi * &l4sq);
    check(&mut checks, "case 2: 2 (4.83e26 log^2 n + log 42.12)/log phi < 2.1e27 log^2 n at n = 4", &k2_coeff, &dec("2.1e27"));
    let s2 = &dec("1.34e30") * &dec("2.1e27").powi(8);
    check(&mut checks, "case 2: 1.34e30 (2.1e27)^8 < 5.1e248", &s2, &dec("5.1e248"));
    let case2 = sanchez_bound(21, &dec("5.1e248"))?;
    check(&mut checks, "case 2: 2^21 S (log S)^21 < 8.82e312", &case2, &dec("8.82e312"));

    // Small k.
    check(&mut checks, "k <= 550: 1.34e30 550^8 log^5 550 < 1.13e56", &n550, &dec("1.13e56"));
    check(&mut checks, "1.13e56 < 8.82e312", &dec("1.13e56"), &dec("8.82e312"));

    Ok(AbsoluteBound {
        case1,
        case2,
        checks,
    })
}

/// The absolute bound on n: the larger of the two replayed cases.
pub fn absolute_bound_n() -> Result<PrecReal, BakerError> {
    Ok(absolute_bound_cases()?.max())
}

pub fn lemma32_report() -> Result<BoundReport, BakerError> {
    let ab = absolute_bound_cases()?;
    let mut r = BoundReport::new(
        "lemma32",
        "max(2^13 S1 (log S1)^13, 2^21 S2 (log S2)^21), S1 = 2.81e144, S2 = 5.1e248",
        ab.max(),
    );
    r.inputs.push(("case1".into(), ab.case1.to_decimal(12)));
    r.inputs.push(("case2".into(), ab.case2.to_decimal(12)));
    r.notes.push("valid for n > 250".into());
    r.checks = ab.checks;
    Ok(r)
}

/// log|Λ₁| and log|Λ₂| lower bound check: |Λ| > 10^(−prec/2) at the
/// context's precision, for a concrete (a, l, b, m, n).
pub fn lambda_values(
    ctx: &PellLucasContext,
    a: u8,
    l: u32,
    b: u8,
    m: u32,
    n: i64,
) -> (PrecReal, PrecReal) {
    let p = ctx.prec();
    let ten = PrecReal::from_i64(10, p);
    let coeff = ctx.dominant_coefficient();
    let gn = ctx.gamma().powi(n);
    let one = PrecReal::from_i64(1, p);
    let nine = PrecReal::from_i64(9, p);
    let ar = PrecReal::from_i64(a as i64, p);
    let lambda1 = &(&(&(&gn * &(&nine * &coeff)) / &ar) / &ten.powi((l + m) as i64)) - &one;
    let x = PrecReal::from_integer(
        Integer::from(a) * Integer::from(10).pow(l) - a + b,
        p,
    );
    let lambda2 = &(&(&ten.powi(m as i64) * &x) / &(&(&nine * &coeff) * &gn)) - &one;
    (lambda1, lambda2)
}

/// Both linear forms are certified nonzero with |Λ| > 2^(−prec/2).
pub fn lambdas_nonvanishing(ctx: &PellLucasContext, a: u8, l: u32, b: u8, m: u32, n: i64) -> bool {
    let (l1, l2) = lambda_values(ctx, a, l, b, m, n);
    let floor = PrecReal::from_rational(
        Rational::from((1, Integer::from(1) << (ctx.prec() / 2))),
        ctx.prec(),
    );
    [l1, l2].iter().all(|v| {
        let a = v.abs();
        a.sign() == Sign::Positive && floor.certified_lt(&a) == Some(true)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: &PrecReal) -> f64 {
        x.to_f64()
    }

    #[test]
    fn matveev_leading_constant() {
        let c = f(&matveev_constant(3));
        assert!((1.431e11..1.433e11).contains(&c), "{c}");
        assert_eq!(round_up_sig(&matveev_constant(3), 4), "1.432e11");
    }

    #[test]
    fn matveev_bound_example_and_monotone() {
        let inst = LinearFormInstance {
            label: "test".into(),
            s: 3,
            d_l: 2,
            d: int(9),
            b: vec![int(1), int(1), int(1)],
            eta_descriptions: vec![],
            exponents: vec![],
        };
        let v = f(&matveev_bound(&inst).unwrap());
        let expect = f(&matveev_constant(3)) * 4.0 * (1.0 + 2f64.ln()) * (1.0 + 9f64.ln());
        assert!((v / expect - 1.0).abs() < 1e-12);
        let mut doubled = inst.clone();
        doubled.b[1] = int(2);
        let w = f(&matveev_bound(&doubled).unwrap());
        assert!((w / v - 2.0).abs() < 1e-12);
        let mut bigger_d = inst.clone();
        bigger_d.d = int(10);
        assert!(f(&matveev_bound(&bigger_d).unwrap()) > v);
        let mut bigger_dl = inst.clone();
        bigger_dl.d_l = 3;
        assert!(f(&matveev_bound(&bigger_dl).unwrap()) > v);
    }

    #[test]
    fn matveev_rejects_bad_instances() {
        let mut inst = LinearFormInstance {
            label: "bad".into(),
            s: 2,
            d_l: 2,
            d: int(9),
            b: vec![int(1), dec("0.1")],
            eta_descriptions: vec![],
            exponents: vec![],
        };
        assert!(matveev_bound(&inst).is_err());
        inst.b[1] = int(1);
        inst.exponents = vec![Integer::from(3), Integer::from(-12)];
        assert!(matveev_bound(&inst).is_err());
        inst.exponents = vec![Integer::from(3), Integer::from(-9)];
        assert!(matveev_bound(&inst).is_ok());
    }

    #[test]
    fn height_cap() {
        let h = height_eta3_lambda1(2);
        assert!((f(&h.exact) - 7.0493).abs() < 1e-4);
        assert!((f(&h.cap) - 7.0701).abs() < 1e-4);
        assert!(h.within_cap());
        assert!((f(&height_eta3_lambda1(10).cap) - 23.4858).abs() < 1e-3);
        for k in 2..2000 {
            assert!(height_eta3_lambda1(k).within_cap(), "k = {k}");
        }
        let big = height_eta3_lambda1(1_000_000_000);
        assert!((f(&big.exact) / f(&big.cap) - 5.0 / 10.2).abs() < 0.02);
    }

    #[test]
    fn deweger_examples() {
        let a = dec("0.58");
        assert!((f(&deweger_factor(&a)) - 1.495689).abs() < 1e-5);
        assert!(f(&(&deweger_factor(&a) * &dec("57.5"))) < 86.1);
        let a = dec("0.1");
        assert!(f(&(&deweger_factor(&a) * &dec("42.12"))) < 44.38);
        let a = dec("0.12");
        assert!(f(&(&deweger_factor(&a) * &dec("11.8"))) < 12.58);
        assert!(deweger_transfer(&dec("0.05"), &dec("0.1")).is_ok());
        assert!(deweger_transfer(&dec("0.1"), &dec("0.1")).is_err());
        assert!(deweger_transfer(&dec("0.01"), &dec("1.5")).is_err());
        // |log(1 + x)| really is below the transferred bound
        for x in [-0.099f64, -0.05, 0.02, 0.0999] {
            let t = f(&deweger_transfer(&dec(&format!("{}", x.abs())), &dec("0.1")).unwrap());
            assert!((1.0f64 + x).ln().abs() <= t + 1e-15);
        }
    }

    #[test]
    fn sanchez_examples() {
        let v = f(&sanchez_bound(1, &int(100)).unwrap());
        assert!((v - 921.034).abs() < 1e-3);
        assert!(sanchez_bound(2, &int(100)).is_err());
        assert!(sanchez_bound(0, &int(100)).is_err());
        // x at the bound has x/(log x)^m ≥ S false
        for (m, s) in [(1u32, 100i64), (2, 1000), (3, 100_000), (2, 256)] {
            let sr = int(s);
            let x = sanchez_bound(m, &sr).unwrap();
            let ratio = &x / &x.ln().powi(m as i64);
            assert!(ratio.certified_lt(&sr) == Some(false), "m={m} S={s}");
        }
    }

    #[test]
    fn bound_n_in_k_values() {
        assert!((f(&bound_n_in_k(2)) / 5.4887e31 - 1.0).abs() < 1e-3);
        assert!(bound_n_in_k(550).certified_lt(&dec("1.13e56")) == Some(true));
        assert!(bound_n_in_k(3200).certified_lt(&dec("5.1e62")) == Some(true));
    }

    #[test]
    fn rounding_up() {
        assert_eq!(round_up_sig(&dec("1.43186e11"), 4), "1.432e11");
        assert_eq!(round_up_sig(&dec("1.432e11"), 4), "1.432e11");
        assert_eq!(round_up_sig(&dec("9.9999e5"), 4), "1.000e6");
        assert_eq!(round_up_sig(&dec("0.0012341"), 3), "1.24e-3");
        assert_eq!(round_up_rational(&dec("178.924"), 5), Rational::from((17893, 100)));
    }

    #[test]
    fn windows() {
        assert!(lm_window_contains(7, 3));
        assert!(lm_window_contains(5, 2));
        let (lo, hi) = lm_window(1);
        assert_eq!(lo, 0);
        assert_eq!(hi, Rational::from((9, 5)));
        assert!(!lm_window_contains(1, 2));
        assert!(!lm_window_contains(1, 3));
        let ctx = PellLucasContext::new(3).unwrap();
        let (lo, hi) = lm_window_sharp(7, ctx.gamma());
        assert!(lo < 3.0 && 3.0 < hi);
    }

    #[test]
    fn stage_reports_replay() {
        for k in [2, 3, 10, 550, 3200] {
            let r = lambda1_report(k, Some(1000)).unwrap();
            assert!(r.all_hold(), "lambda1 k={k}: {:?}", r.failed_checks());
            let r = lambda2_report(k, Some(1000)).unwrap();
            assert!(r.all_hold(), "lambda2 k={k}: {:?}", r.failed_checks());
            let r = lemma31_report(k).unwrap();
            assert!(r.all_hold(), "lemma31 k={k}: {:?}", r.failed_checks());
        }
        let r = lemma31_report(550).unwrap();
        assert!(r.numeric.certified_lt(&dec("1.13e56")) == Some(true));
        assert!(lambda1_report(2, Some(3)).is_err());
    }

    #[test]
    fn absolute_bound_replay() {
        let ab = absolute_bound_cases().unwrap();
        let failed: Vec<_> = ab.checks.iter().filter(|c| !c.holds).collect();
        assert!(failed.is_empty(), "{failed:?}");
        let r1 = f(&(&ab.case1 / &dec("1.41e181")));
        let r2 = f(&(&ab.case2 / &dec("8.82e312")));
        assert!(r1 < 1.0 && r1 > 0.99, "{r1}");
        assert!(r2 < 1.0 && r2 > 0.99, "{r2}");
        let max = absolute_bound_n().unwrap();
        assert_eq!(max.check(), ab.case2.check());
    }

    #[test]
    fn linear_forms_nonzero_on_known_solutions() {
        for (k, n, a, l, b, m) in [(3usize, 7i64, 6u8, 2u32, 2u8, 1u32), (2, 5, 8, 1, 2, 1), (2, 4, 3, 1, 4, 1)] {
            let ctx = PellLucasContext::new(k).unwrap();
            assert!(lambdas_nonvanishing(&ctx, a, l, b, m, n));
        }
    }
}
