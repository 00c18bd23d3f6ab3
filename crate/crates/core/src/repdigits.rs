//! Concatenations of two base-10 repdigits.
//!
//! A [`RepdigitConcat`] `(a, l, b, m)` stands for the number whose decimal
//! string is `a` repeated `l` times followed by `b` repeated `m` times:
//! a·(10^l − 1)/9·10^m + b·(10^m − 1)/9.

use std::fmt;

use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RepdigitError {
    #[error("leading digit a = {0} must be in 1..=9")]
    LeadingDigit(u8),
    #[error("trailing digit b = {0} must be in 0..=9")]
    TrailingDigit(u8),
    #[error("block lengths must be at least 1 (l = {l}, m = {m})")]
    EmptyBlock { l: u32, m: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RepdigitConcat {
    pub a: u8,
    pub l: u32,
    pub b: u8,
    pub m: u32,
}

impl RepdigitConcat {
    pub fn new(a: u8, l: u32, b: u8, m: u32) -> Result<Self, RepdigitError> {
        if !(1..=9).contains(&a) {
            return Err(RepdigitError::LeadingDigit(a));
        }
        if b > 9 {
            return Err(RepdigitError::TrailingDigit(b));
        }
        if l == 0 || m == 0 {
            return Err(RepdigitError::EmptyBlock { l, m });
        }
        Ok(RepdigitConcat { a, l, b, m })
    }

    /// Both blocks use the same digit, so the value is a plain repdigit.
    pub fn is_pure_repdigit(&self) -> bool {
        self.a == self.b
    }

    pub fn digit_count(&self) -> u32 {
        self.l + self.m
    }
}

impl fmt::Display for RepdigitConcat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}^{}, {}^{})", self.a, self.l, self.b, self.m)
    }
}

/// (10^len − 1)/9.
pub fn repunit(len: u32) -> Integer {
    (Integer::from(Integer::u_pow_u(10, len)) - 1u32) / 9u32
}

/// Exact value a·(10^l − 1)/9·10^m + b·(10^m − 1)/9.
pub fn compose(c: &RepdigitConcat) -> Integer {
    let high = repunit(c.l) * c.a * Integer::from(10).pow(c.m);
    high + repunit(c.m) * c.b
}

/// Maximal runs of equal digits in the decimal string of `n`, as
/// (digit, run length).
pub fn digit_runs(n: &Integer) -> Vec<(u8, usize)> {
    let s = n.to_string();
    let mut runs: Vec<(u8, usize)> = Vec::new();
    for ch in s.bytes().filter(u8::is_ascii_digit) {
        let d = ch - b'0';
        match runs.last_mut() {
            Some((last, len)) if *last == d => *len += 1,
            _ => runs.push((d, 1)),
        }
    }
    runs
}

/// At most two maximal runs of equal digits. Single digits qualify.
pub fn is_two_run(n: &Integer) -> bool {
    n.cmp0().is_gt() && digit_runs(n).len() <= 2
}

/// Every (a, l, b, m) with l, m ≥ 1 whose value is `n`, ordered by m.
pub fn decompose(n: &Integer) -> Vec<RepdigitConcat> {
    if n.cmp0().is_le() {
        return Vec::new();
    }
    let digits: Vec<u8> = n.to_string().bytes().map(|c| c - b'0').collect();
    let len = digits.len();
    let mut out = Vec::new();
    for m in 1..len {
        let split = len - m;
        let (head, tail) = digits.split_at(split);
        let a = head[0];
        let b = tail[0];
        if head.iter().all(|&d| d == a) && tail.iter().all(|&d| d == b) {
            out.push(RepdigitConcat {
                a,
                l: split as u32,
                b,
                m: m as u32,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rc(a: u8, l: u32, b: u8, m: u32) -> RepdigitConcat {
        RepdigitConcat::new(a, l, b, m).unwrap()
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose(&rc(1, 2, 0, 1)), 110);
        assert_eq!(compose(&rc(6, 2, 2, 1)), 662);
        assert_eq!(compose(&rc(4, 1, 2, 1)), 42);
        assert_eq!(compose(&rc(2, 2, 8, 2)), 2288);
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose(&Integer::from(110)), vec![rc(1, 2, 0, 1)]);
        assert_eq!(decompose(&Integer::from(42)), vec![rc(4, 1, 2, 1)]);
        assert!(decompose(&Integer::from(7)).is_empty());
        assert!(decompose(&Integer::from(286)).is_empty());
        assert_eq!(
            decompose(&Integer::from(222)),
            vec![rc(2, 2, 2, 1), rc(2, 1, 2, 2)]
        );
        assert_eq!(decompose(&Integer::from(100)), vec![rc(1, 1, 0, 2)]);
    }

    #[test]
    fn two_run_examples() {
        assert!(is_two_run(&Integer::from(2)));
        assert!(!is_two_run(&Integer::from(286)));
        assert!(is_two_run(&Integer::from(2288)));
        assert!(is_two_run(&Integer::from(288)));
        assert!(!is_two_run(&Integer::from(754)));
        assert!(!is_two_run(&Integer::new()));
        assert_eq!(digit_runs(&Integer::from(2288)), vec![(2, 2), (8, 2)]);
    }

    #[test]
    fn constructor_rejects_bad_fields() {
        assert_eq!(RepdigitConcat::new(0, 1, 1, 1), Err(RepdigitError::LeadingDigit(0)));
        assert_eq!(RepdigitConcat::new(1, 1, 10, 1), Err(RepdigitError::TrailingDigit(10)));
        assert_eq!(
            RepdigitConcat::new(1, 0, 1, 1),
            Err(RepdigitError::EmptyBlock { l: 0, m: 1 })
        );
    }

    fn arb_concat() -> impl Strategy<Value = RepdigitConcat> {
        (1u8..=9, 1u32..=50, 0u8..=9, 1u32..=50).prop_map(|(a, l, b, m)| rc(a, l, b, m))
    }

    proptest! {
        #[test]
        fn roundtrip_and_digit_count(c in arb_concat()) {
            let v = compose(&c);
            prop_assert!(decompose(&v).contains(&c));
            prop_assert_eq!(v.to_string().len() as u32, c.l + c.m);
        }

        #[test]
        fn two_run_agrees_with_decompose(n in 10u64..10_000_000) {
            let n = Integer::from(n);
            prop_assert_eq!(is_two_run(&n), !decompose(&n).is_empty());
        }

        #[test]
        fn decompositions_compose_back(n in 1u64..100_000_000) {
            let n = Integer::from(n);
            for c in decompose(&n) {
                prop_assert_eq!(compose(&c), n.clone());
            }
        }
    }
}
