//! Adaptive-precision reals with certified comparisons.
//!
//! Every [`PrecReal`] carries two evaluations of the same quantity: one at the
//! working precision `p` and a twin at `2p`. Arithmetic is applied to both, so
//! any derived value can be checked by comparing the twins. A value is
//! *certified* when the twins agree to a relative `2^(-p/2)`; signs and
//! comparisons are only reported for certified values. Callers that get
//! [`Sign::Undecided`] escalate the precision (see [`with_escalation`]).
//!
//! Quantities that live in Q(√5) (integers, rationals, φ and field operations
//! on them) additionally carry an exact [`QuadSqrt5`] form, which resolves
//! identities such as φ² − φ − 1 = 0 to an exact zero.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use thiserror::Error;

/// Extra bits carried by every evaluation on top of the requested precision.
pub const GUARD_BITS: u32 = 32;
pub const DEFAULT_PRECISION_BITS: u32 = 512;
pub const MIN_PRECISION_BITS: u32 = 128;
pub const MAX_PRECISION_BITS: u32 = 1 << 17;

/// Exact powers above this exponent drop the Q(√5) form (coefficients grow
/// linearly in the exponent).
const EXACT_POW_LIMIT: u64 = 4096;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NumericsError {
    #[error("precision exhausted: no certified result up to {max_bits} bits")]
    PrecisionExhausted { max_bits: u32 },
    #[error("division by an exact zero")]
    Pole,
    #[error("malformed decimal literal {0:?}")]
    BadDecimal(String),
}

/// Outcome of a certified sign test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    /// Only produced by the exact Q(√5) path.
    Zero,
    Positive,
    Undecided,
}

impl Sign {
    /// -1, 0 or +1; `None` when undecided.
    pub fn as_i8(self) -> Option<i8> {
        match self {
            Sign::Negative => Some(-1),
            Sign::Zero => Some(0),
            Sign::Positive => Some(1),
            Sign::Undecided => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Sign::Positive
    }

    pub fn is_negative(self) -> bool {
        self == Sign::Negative
    }

    fn of_ordering(o: std::cmp::Ordering) -> Sign {
        match o {
            std::cmp::Ordering::Less => Sign::Negative,
            std::cmp::Ordering::Equal => Sign::Zero,
            std::cmp::Ordering::Greater => Sign::Positive,
        }
    }
}

/// Starting precision: `PRECISION_BITS` from the environment, else 512 bits.
pub fn precision_bits_from_env() -> u32 {
    std::env::var("PRECISION_BITS")
        .ok()
        .and_then(|s| s.trim().parse::<u32>().ok())
        .map(|p| p.clamp(MIN_PRECISION_BITS, MAX_PRECISION_BITS))
        .unwrap_or(DEFAULT_PRECISION_BITS)
}

/// Runs `attempt` at `start`, `2·start`, … until it returns `Some`, giving up
/// past [`MAX_PRECISION_BITS`].
pub fn with_escalation<T>(
    start: u32,
    mut attempt: impl FnMut(u32) -> Option<T>,
) -> Result<T, NumericsError> {
    let mut prec = start.max(MIN_PRECISION_BITS);
    loop {
        if let Some(v) = attempt(prec) {
            return Ok(v);
        }
        if prec >= MAX_PRECISION_BITS {
            return Err(NumericsError::PrecisionExhausted {
                max_bits: MAX_PRECISION_BITS,
            });
        }
        prec = (prec * 2).min(MAX_PRECISION_BITS);
    }
}

/// Exact element `rational + sqrt5·√5` of Q(√5).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadSqrt5 {
    pub rational: Rational,
    pub sqrt5: Rational,
}

impl QuadSqrt5 {
    pub fn new(rational: Rational, sqrt5: Rational) -> Self {
        QuadSqrt5 { rational, sqrt5 }
    }

    pub fn from_rational(r: Rational) -> Self {
        QuadSqrt5::new(r, Rational::new())
    }

    /// φ = 1/2 + √5/2.
    pub fn phi() -> Self {
        QuadSqrt5::new(Rational::from((1, 2)), Rational::from((1, 2)))
    }

    pub fn is_zero(&self) -> bool {
        self.rational.cmp0().is_eq() && self.sqrt5.cmp0().is_eq()
    }

    /// `Some(r)` when the element is rational.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.sqrt5.cmp0().is_eq().then_some(&self.rational)
    }

    pub fn sign(&self) -> Sign {
        let a = self.rational.cmp0();
        let b = self.sqrt5.cmp0();
        use std::cmp::Ordering::*;
        match (a, b) {
            (Equal, s) | (s, Equal) => Sign::of_ordering(s),
            (x, y) if x == y => Sign::of_ordering(x),
            (x, y) => {
                // opposite signs: compare a² with 5b²
                let a2 = Rational::from(self.rational.square_ref());
                let b2 = Rational::from(self.sqrt5.square_ref()) * 5u32;
                if a2 > b2 {
                    Sign::of_ordering(x)
                } else {
                    Sign::of_ordering(y)
                }
            }
        }
    }

    /// Norm a² − 5b².
    pub fn norm(&self) -> Rational {
        Rational::from(self.rational.square_ref()) - Rational::from(self.sqrt5.square_ref()) * 5u32
    }

    pub fn conjugate(&self) -> Self {
        QuadSqrt5::new(self.rational.clone(), -self.sqrt5.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        QuadSqrt5::new(
            Rational::from(&self.rational + &o.rational),
            Rational::from(&self.sqrt5 + &o.sqrt5),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        QuadSqrt5::new(
            Rational::from(&self.rational - &o.rational),
            Rational::from(&self.sqrt5 - &o.sqrt5),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let rr = Rational::from(&self.rational * &o.rational);
        let ss = Rational::from(&self.sqrt5 * &o.sqrt5) * 5u32;
        let rs = Rational::from(&self.rational * &o.sqrt5);
        let sr = Rational::from(&self.sqrt5 * &o.rational);
        QuadSqrt5::new(rr + ss, rs + sr)
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        let c = self.conjugate();
        Some(QuadSqrt5::new(
            Rational::from(&c.rational / &n),
            Rational::from(&c.sqrt5 / &n),
        ))
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        o.recip().map(|r| self.mul(&r))
    }

    pub fn neg(&self) -> Self {
        QuadSqrt5::new(-self.rational.clone(), -self.sqrt5.clone())
    }

    pub fn powi(&self, n: i64) -> Option<Self> {
        if n.unsigned_abs() > EXACT_POW_LIMIT {
            return None;
        }
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = QuadSqrt5::from_rational(Rational::from(1));
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Some(acc)
    }

    pub fn to_float(&self, prec: u32) -> Float {
        let work = prec + GUARD_BITS;
        let s5 = Float::with_val(work, 5u32).sqrt();
        let v = Float::with_val(work, &self.rational) + Float::with_val(work, &self.sqrt5) * s5;
        Float::with_val(prec, v)
    }
}

impl fmt::Display for QuadSqrt5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sqrt5.cmp0().is_eq() {
            write!(f, "{}", self.rational)
        } else {
            write!(f, "{} + {}*sqrt(5)", self.rational, self.sqrt5)
        }
    }
}

/// A real evaluated at working precision `p` together with a twin at `2p`.
#[derive(Debug, Clone)]
pub struct PrecReal {
    prec: u32,
    value: Float,
    check: Float,
    exact: Option<QuadSqrt5>,
}

impl PrecReal {
    /// Evaluates `f(bits)` at the working and the doubled precision (each
    /// with guard bits). `f` must return its value to about `bits` bits.
    pub fn from_fn(prec: u32, f: impl Fn(u32) -> Float) -> Self {
        let value = f(prec + GUARD_BITS);
        let check = f(2 * prec + GUARD_BITS);
        PrecReal {
            prec,
            value,
            check,
            exact: None,
        }
    }

    pub fn from_exact(q: QuadSqrt5, prec: u32) -> Self {
        PrecReal {
            prec,
            value: q.to_float(prec + GUARD_BITS),
            check: q.to_float(2 * prec + GUARD_BITS),
            exact: Some(q),
        }
    }

    pub fn from_integer(i: impl Into<Integer>, prec: u32) -> Self {
        PrecReal::from_exact(QuadSqrt5::from_rational(Rational::from(i.into())), prec)
    }

    pub fn from_i64(i: i64, prec: u32) -> Self {
        PrecReal::from_integer(Integer::from(i), prec)
    }

    pub fn from_rational(r: Rational, prec: u32) -> Self {
        PrecReal::from_exact(QuadSqrt5::from_rational(r), prec)
    }

    /// Exact value of a decimal literal such as `"1.34e30"` or `"57.5"`.
    pub fn from_decimal(s: &str, prec: u32) -> Result<Self, NumericsError> {
        Ok(PrecReal::from_rational(parse_decimal(s)?, prec))
    }

    pub fn phi(prec: u32) -> Self {
        PrecReal::from_exact(QuadSqrt5::phi(), prec)
    }

    /// Euler's number (no exact form).
    pub fn e(prec: u32) -> Self {
        PrecReal::from_fn(prec, |b| Float::with_val(b, 1u32).exp())
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Value at the working precision.
    pub fn value(&self) -> &Float {
        &self.value
    }

    /// The doubled-precision twin.
    pub fn check(&self) -> &Float {
        &self.check
    }

    pub fn exact(&self) -> Option<&QuadSqrt5> {
        self.exact.as_ref()
    }

    pub fn to_f64(&self) -> f64 {
        self.check.to_f64()
    }

    /// True when both evaluations agree to a relative `2^(-p/2)`.
    pub fn is_certified(&self) -> bool {
        if self.exact.is_some() {
            return true;
        }
        if !self.value.is_finite() || !self.check.is_finite() {
            return false;
        }
        if self.check.is_zero() {
            return self.value.is_zero();
        }
        let work = self.check.prec();
        let diff = Float::with_val(work, &self.value - &self.check).abs();
        let tol = Float::with_val(work, self.check.abs_ref()) >> (self.prec / 2);
        diff <= tol
    }

    pub fn sign(&self) -> Sign {
        if let Some(q) = &self.exact {
            return q.sign();
        }
        if !self.is_certified() || self.value.is_zero() || self.check.is_zero() {
            return Sign::Undecided;
        }
        match (self.value.is_sign_positive(), self.check.is_sign_positive()) {
            (true, true) => Sign::Positive,
            (false, false) => Sign::Negative,
            _ => Sign::Undecided,
        }
    }

    /// `Some(self < other)` when the comparison is certified.
    pub fn certified_lt(&self, other: &PrecReal) -> Option<bool> {
        match (other - self).sign() {
            Sign::Positive => Some(true),
            Sign::Negative | Sign::Zero => Some(false),
            Sign::Undecided => None,
        }
    }

    /// `Some(self <= other)` when the comparison is certified.
    pub fn certified_le(&self, other: &PrecReal) -> Option<bool> {
        match (other - self).sign() {
            Sign::Positive | Sign::Zero => Some(true),
            Sign::Negative => Some(false),
            Sign::Undecided => None,
        }
    }

    fn map_floats(&self, f: impl Fn(&Float) -> Float) -> (Float, Float) {
        (f(&self.value), f(&self.check))
    }

    fn unary(&self, exact: Option<QuadSqrt5>, f: impl Fn(&Float) -> Float) -> PrecReal {
        let (value, check) = self.map_floats(f);
        PrecReal {
            prec: self.prec,
            value,
            check,
            exact,
        }
    }

    fn binary(
        &self,
        o: &PrecReal,
        exact: Option<QuadSqrt5>,
        f: impl Fn(&Float, &Float, u32) -> Float,
    ) -> PrecReal {
        let vp = self.value.prec().max(o.value.prec());
        let cp = self.check.prec().max(o.check.prec());
        PrecReal {
            prec: self.prec.min(o.prec),
            value: f(&self.value, &o.value, vp),
            check: f(&self.check, &o.check, cp),
            exact,
        }
    }

    pub fn abs(&self) -> PrecReal {
        let exact = self.exact.as_ref().map(|q| match q.sign() {
            Sign::Negative => q.neg(),
            _ => q.clone(),
        });
        self.unary(exact, |x| x.clone().abs())
    }

    pub fn recip(&self) -> PrecReal {
        let exact = self.exact.as_ref().and_then(|q| q.recip());
        self.unary(exact, |x| x.clone().recip())
    }

    pub fn ln(&self) -> PrecReal {
        let exact = self
            .exact
            .as_ref()
            .filter(|q| q.as_rational().is_some_and(|r| *r == 1))
            .map(|_| QuadSqrt5::from_rational(Rational::new()));
        self.unary(exact, |x| x.clone().ln())
    }

    pub fn exp(&self) -> PrecReal {
        let exact = self
            .exact
            .as_ref()
            .filter(|q| q.is_zero())
            .map(|_| QuadSqrt5::from_rational(Rational::from(1)));
        self.unary(exact, |x| x.clone().exp())
    }

    pub fn sqrt(&self) -> PrecReal {
        let exact = self.exact.as_ref().and_then(|q| {
            let r = q.as_rational()?;
            if r.cmp0().is_lt() {
                return None;
            }
            let (n, d) = (r.numer(), r.denom());
            if n.is_perfect_square() && d.is_perfect_square() {
                let root = Rational::from((n.clone().sqrt(), d.clone().sqrt()));
                return Some(QuadSqrt5::from_rational(root));
            }
            // r = 5·s² gives s·√5
            let r5 = Rational::from(r / 5u32);
            let (n5, d5) = (r5.numer(), r5.denom());
            if n5.is_perfect_square() && d5.is_perfect_square() {
                let s = Rational::from((n5.clone().sqrt(), d5.clone().sqrt()));
                return Some(QuadSqrt5::new(Rational::new(), s));
            }
            None
        });
        self.unary(exact, |x| x.clone().sqrt())
    }

    pub fn powi(&self, n: i64) -> PrecReal {
        let exact = self.exact.as_ref().and_then(|q| q.powi(n));
        if n == 0 {
            let one = QuadSqrt5::from_rational(Rational::from(1));
            return PrecReal::from_exact(one, self.prec);
        }
        let big = Integer::from(n);
        self.unary(exact, |x| Float::with_val(x.prec(), x.pow(&big)))
    }

    /// `self^e` for a real exponent (no exact form).
    pub fn pow(&self, e: &PrecReal) -> PrecReal {
        self.binary(e, None, |x, y, p| Float::with_val(p, x.pow(y)))
    }

    /// Largest of two values at the working precision (the twins follow the
    /// same choice).
    pub fn max(&self, o: &PrecReal) -> PrecReal {
        if self.check >= o.check {
            self.clone()
        } else {
            o.clone()
        }
    }

    /// Distance to the nearest integer, applied to both twins.
    pub fn nearest_int_distance(&self) -> PrecReal {
        let exact = self.exact.as_ref().and_then(|q| {
            let r = q.as_rational()?;
            let floor = Rational::from(r.floor_ref());
            let frac = Rational::from(r - &floor);
            let other = Rational::from(1) - frac.clone();
            Some(QuadSqrt5::from_rational(frac.min(other)))
        });
        self.unary(exact, nearest_int_distance_float)
    }

    /// Decimal rendering of the doubled-precision value with `digits`
    /// significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        self.check.to_string_radix(10, Some(digits))
    }
}

/// ||x|| for a single float.
pub fn nearest_int_distance_float(x: &Float) -> Float {
    let frac = Float::with_val(x.prec(), x - Float::with_val(x.prec(), x.floor_ref()));
    let other = Float::with_val(x.prec(), 1u32 - &frac);
    if frac <= other {
        frac
    } else {
        other
    }
}

impl fmt::Display for PrecReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{}", self.to_decimal(digits))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $exact:expr, $float:expr) => {
        impl $tr<&PrecReal> for &PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: &PrecReal) -> PrecReal {
                let exact = match (&self.exact, &rhs.exact) {
                    (Some(a), Some(b)) => $exact(a, b),
                    _ => None,
                };
                self.binary(rhs, exact, $float)
            }
        }
        impl $tr<PrecReal> for PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: PrecReal) -> PrecReal {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&PrecReal> for PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: &PrecReal) -> PrecReal {
                (&self).$method(rhs)
            }
        }
        impl $tr<PrecReal> for &PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: PrecReal) -> PrecReal {
                self.$method(&rhs)
            }
        }
    };
}

binop!(
    Add,
    add,
    |a: &QuadSqrt5, b: &QuadSqrt5| Some(a.add(b)),
    |x: &Float, y: &Float, p| Float::with_val(p, x + y)
);
binop!(
    Sub,
    sub,
    |a: &QuadSqrt5, b: &QuadSqrt5| Some(a.sub(b)),
    |x: &Float, y: &Float, p| Float::with_val(p, x - y)
);
binop!(
    Mul,
    mul,
    |a: &QuadSqrt5, b: &QuadSqrt5| Some(a.mul(b)),
    |x: &Float, y: &Float, p| Float::with_val(p, x * y)
);
binop!(
    Div,
    div,
    |a: &QuadSqrt5, b: &QuadSqrt5| a.div(b),
    |x: &Float, y: &Float, p| Float::with_val(p, x / y)
);

impl Neg for &PrecReal {
    type Output = PrecReal;
    fn neg(self) -> PrecReal {
        let exact = self.exact.as_ref().map(|q| q.neg());
        self.unary(exact, |x| Float::with_val(x.prec(), -x))
    }
}

impl Neg for PrecReal {
    type Output = PrecReal;
    fn neg(self) -> PrecReal {
        -&self
    }
}

/// Parses `[-]digits[.digits][e[-]digits]` into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Rational, NumericsError> {
    let bad = || NumericsError::BadDecimal(s.to_string());
    let t = s.trim();
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant),
    };
    let (int_part, frac_part) = match mant.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut r = Rational::from(Integer::from_str_radix(&digits, 10).map_err(|_| bad())?);
    let shift = exp - frac_part.len() as i32;
    let ten = Rational::from(10);
    if shift >= 0 {
        r *= Rational::from(ten.pow(shift as u32));
    } else {
        r /= Rational::from(ten.pow((-shift) as u32));
    }
    Ok(if neg { -r } else { r })
}

type CustomFn = Arc<dyn Fn(u32) -> Float + Send + Sync>;

enum Node {
    Int(Integer),
    Rat(Rational),
    Phi,
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Powi(Expr, i64),
    Pow(Expr, Expr),
    Sqrt(Expr),
    Ln(Expr),
    Exp(Expr),
    Custom(String, CustomFn),
}

/// Arithmetic expression over integers, φ, ln, exp and powers; evaluated on
/// demand at any precision.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    pub fn int(i: impl Into<Integer>) -> Self {
        Expr::node(Node::Int(i.into()))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Expr::node(Node::Rat(Rational::from((num, den))))
    }

    pub fn decimal(s: &str) -> Result<Self, NumericsError> {
        Ok(Expr::node(Node::Rat(parse_decimal(s)?)))
    }

    pub fn phi() -> Self {
        Expr::node(Node::Phi)
    }

    /// A leaf computed by `f(bits)`; `label` is used for display.
    pub fn custom(label: impl Into<String>, f: impl Fn(u32) -> Float + Send + Sync + 'static) -> Self {
        Expr::node(Node::Custom(label.into(), Arc::new(f)))
    }

    pub fn powi(&self, n: i64) -> Self {
        Expr::node(Node::Powi(self.clone(), n))
    }

    pub fn pow(&self, e: &Expr) -> Self {
        Expr::node(Node::Pow(self.clone(), e.clone()))
    }

    pub fn sqrt(&self) -> Self {
        Expr::node(Node::Sqrt(self.clone()))
    }

    pub fn ln(&self) -> Self {
        Expr::node(Node::Ln(self.clone()))
    }

    pub fn exp(&self) -> Self {
        Expr::node(Node::Exp(self.clone()))
    }

    /// Single evaluation at working precision `prec` (no escalation).
    pub fn eval(&self, prec: u32) -> PrecReal {
        match &*self.0 {
            Node::Int(i) => PrecReal::from_integer(i.clone(), prec),
            Node::Rat(r) => PrecReal::from_rational(r.clone(), prec),
            Node::Phi => PrecReal::phi(prec),
            Node::Neg(a) => -a.eval(prec),
            Node::Add(a, b) => a.eval(prec) + b.eval(prec),
            Node::Sub(a, b) => a.eval(prec) - b.eval(prec),
            Node::Mul(a, b) => a.eval(prec) * b.eval(prec),
            Node::Div(a, b) => a.eval(prec) / b.eval(prec),
            Node::Powi(a, n) => a.eval(prec).powi(*n),
            Node::Pow(a, b) => a.eval(prec).pow(&b.eval(prec)),
            Node::Sqrt(a) => a.eval(prec).sqrt(),
            Node::Ln(a) => a.eval(prec).ln(),
            Node::Exp(a) => a.eval(prec).exp(),
            Node::Custom(_, f) => PrecReal::from_fn(prec, |b| f(b)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Int(i) => write!(f, "{i}"),
            Node::Rat(r) => write!(f, "{r}"),
            Node::Phi => write!(f, "phi"),
            Node::Neg(a) => write!(f, "-({a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/{b}"),
            Node::Powi(a, n) => write!(f, "{a}^{n}"),
            Node::Pow(a, b) => write!(f, "{a}^({b})"),
            Node::Sqrt(a) => write!(f, "sqrt({a})"),
            Node::Ln(a) => write!(f, "log({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Custom(label, _) => write!(f, "{label}"),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

macro_rules! expr_binop {
    ($tr:ident, $method:ident, $node:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::node(Node::$node(self.clone(), rhs.clone()))
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::node(Node::$node(self, rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::node(Node::Neg(self))
    }
}

/// Evaluates `expr` starting at `prec` bits and doubling until the result is
/// certified.
pub fn eval_at_precision(expr: &Expr, prec: u32) -> Result<PrecReal, NumericsError> {
    with_escalation(prec, |p| {
        let v = expr.eval(p);
        v.is_certified().then_some(v)
    })
}

/// Certified sign of `x`. `Undecided` is a value, not an error; exact zeros
/// come only from the Q(√5) path.
pub fn certified_sign(x: &PrecReal) -> Sign {
    x.sign()
}

/// Certified sign of an expression with automatic escalation. Expressions
/// that stay undecided up to the maximum precision report `Undecided`.
pub fn expr_sign(expr: &Expr, prec: u32) -> Sign {
    with_escalation(prec, |p| match expr.eval(p).sign() {
        Sign::Undecided => None,
        s => Some(s),
    })
    .unwrap_or(Sign::Undecided)
}
