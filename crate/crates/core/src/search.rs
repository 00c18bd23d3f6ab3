//! Exhaustive enumeration of two-run terms Q_n^(k), reconciled against the
//! expected table in `resources/expected_solutions.json`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use rug::Integer;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::baker::lm_window_contains;
use crate::repdigits::{decompose, digit_runs, RepdigitConcat};
use crate::sequences::{fibonacci, term, PellLucasTerms, SequenceError};

/// Largest n with no solution above it, from the reduction chain.
pub const REDUCTION_N_BOUND: u64 = 250;

const EXPECTED_JSON: &str = include_str!("../resources/expected_solutions.json");

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid range: {0}")]
    Range(String),
    #[error("2F_{{2n}} = {fib} but Q_{n}^({k}) = {rec}")]
    Inconsistent { k: usize, n: u64, fib: String, rec: String },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

fn as_decimal<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Solution {
    #[serde(serialize_with = "as_decimal")]
    pub k: usize,
    #[serde(serialize_with = "as_decimal")]
    pub n: u64,
    #[serde(serialize_with = "as_decimal")]
    pub value: Integer,
    pub decompositions: Vec<RepdigitConcat>,
    pub single_digit: bool,
    pub pure_repdigit: bool,
    pub degenerate: bool,
}

impl Solution {
    /// `None` unless `value` has at most two digit runs.
    pub fn classify(k: usize, n: u64, value: Integer) -> Option<Self> {
        if value.cmp0().is_le() {
            return None;
        }
        let runs = digit_runs(&value);
        if runs.len() > 2 {
            return None;
        }
        let single_digit = value < 10;
        let pure_repdigit = !single_digit && runs.len() == 1;
        Some(Solution {
            k,
            n,
            decompositions: decompose(&value),
            value,
            single_digit,
            pure_repdigit,
            degenerate: single_digit || pure_repdigit,
        })
    }

    /// Solves the equation with l, m ≥ 1 (everything except single digits).
    pub fn is_strict(&self) -> bool {
        !self.decompositions.is_empty()
    }

    /// Total digit count l + m.
    pub fn digit_count(&self) -> u64 {
        self.value.to_string().len() as u64
    }
}

/// Every (k, n) with k_min ≤ k ≤ k_max, 1 ≤ n ≤ n_max and a two-run value,
/// ordered by k then n.
pub fn solve_range(k_min: usize, k_max: usize, n_max: u64) -> Result<Vec<Solution>, SearchError> {
    if k_min < 2 || k_min > k_max || n_max < 1 {
        return Err(SearchError::Range(format!(
            "need 2 <= k_min <= k_max and n_max >= 1, got k in [{k_min}, {k_max}], n_max = {n_max}"
        )));
    }
    let per_k: Result<Vec<Vec<Solution>>, SearchError> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let terms = PellLucasTerms::from_one(k)?;
            Ok(terms
                .take(n_max as usize)
                .filter_map(|(n, v)| Solution::classify(k, n as u64, v))
                .collect())
        })
        .collect();
    Ok(per_k?.into_iter().flatten().collect())
}

/// Solutions with n ≤ k from Q_n = 2F_{2n}, each cross-checked against the
/// recurrence.
pub fn solve_small_n_via_fibonacci(k: usize) -> Result<Vec<Solution>, SearchError> {
    if k < 2 {
        return Err(SearchError::Range(format!("k = {k} is below 2")));
    }
    let mut out = Vec::new();
    for (n, rec) in PellLucasTerms::from_one(k)?.take(k) {
        let fib = Integer::from(fibonacci(2 * n as u32) * 2u32);
        if fib != rec {
            return Err(SearchError::Inconsistent {
                k,
                n: n as u64,
                fib: fib.to_string(),
                rec: rec.to_string(),
            });
        }
        out.extend(Solution::classify(k, n as u64, fib));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ExpectedRow {
    pub n: u64,
    pub value: String,
    pub k_min: usize,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub single_digit: bool,
    #[serde(default)]
    pub printed_value: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExpectedTable {
    pub version: u32,
    pub note: String,
    pub rows: Vec<ExpectedRow>,
}

pub fn expected_table() -> ExpectedTable {
    serde_json::from_str(EXPECTED_JSON).expect("bundled table parses")
}

/// One expected (k, n, value), expanded from a table row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ExpectedEntry {
    #[serde(serialize_with = "as_decimal")]
    pub k: usize,
    #[serde(serialize_with = "as_decimal")]
    pub n: u64,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowCheck {
    #[serde(serialize_with = "as_decimal")]
    pub k: usize,
    #[serde(serialize_with = "as_decimal")]
    pub n: u64,
    #[serde(serialize_with = "as_decimal")]
    pub digits: u64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityCheck {
    #[serde(serialize_with = "as_decimal")]
    pub n: u64,
    pub value: String,
    #[serde(serialize_with = "as_decimal")]
    pub k_min: usize,
    #[serde(serialize_with = "as_decimal")]
    pub k_max: usize,
    /// Q_n^(k) takes the row value for every k in [k_min, k_max].
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    #[serde(serialize_with = "as_decimal")]
    pub k_min: usize,
    #[serde(serialize_with = "as_decimal")]
    pub k_max: usize,
    #[serde(serialize_with = "as_decimal")]
    pub n_min: u64,
    #[serde(serialize_with = "as_decimal")]
    pub n_max: u64,
    pub strict: bool,
    pub solutions: Vec<Solution>,
    pub expected: Vec<ExpectedEntry>,
    pub matches: usize,
    pub missing: Vec<ExpectedEntry>,
    pub extras: Vec<Solution>,
    pub discrepancies: Vec<String>,
    /// 2(l + m) − 2.6 < n < 3.4(l + m) + 1 for non-degenerate solutions
    /// with n ≥ k + 2.
    pub window_checks: Vec<WindowCheck>,
    pub stability: Vec<StabilityCheck>,
    /// Solutions with n above [`REDUCTION_N_BOUND`].
    pub above_reduction_bound: usize,
}

impl VerificationReport {
    pub fn agrees(&self) -> bool {
        self.missing.is_empty() && self.extras.is_empty()
    }

    pub fn all_checks_hold(&self) -> bool {
        self.agrees()
            && self.window_checks.iter().all(|w| w.holds)
            && self.stability.iter().all(|s| s.stable)
            && self.above_reduction_bound == 0
    }
}

/// Expected entries for k in [2, k_max], n ≤ n_max.
pub fn expected_entries(table: &ExpectedTable, k_max: usize, n_max: u64, strict: bool) -> Vec<ExpectedEntry> {
    let mut out: Vec<ExpectedEntry> = table
        .rows
        .iter()
        .filter(|r| r.n <= n_max && !(strict && r.single_digit))
        .flat_map(|r| {
            let hi = r.k_max.unwrap_or(k_max).min(k_max);
            (r.k_min..=hi).map(move |k| ExpectedEntry {
                k,
                n: r.n,
                value: r.value.clone(),
            })
        })
        .collect();
    out.sort();
    out
}

/// Enumerates k ∈ [2, k_max], n ∈ [1, n_max] and reconciles against the
/// expected table.
pub fn verify_theorem(k_max: usize, n_max: u64) -> Result<VerificationReport, SearchError> {
    verify_theorem_with(k_max, n_max, false)
}

/// `strict` drops single-digit values on both sides.
pub fn verify_theorem_with(k_max: usize, n_max: u64, strict: bool) -> Result<VerificationReport, SearchError> {
    let table = expected_table();
    let mut solutions = solve_range(2, k_max, n_max)?;
    if strict {
        solutions.retain(Solution::is_strict);
    }
    let expected = expected_entries(&table, k_max, n_max, strict);
    let found: BTreeSet<ExpectedEntry> = solutions
        .iter()
        .map(|s| ExpectedEntry {
            k: s.k,
            n: s.n,
            value: s.value.to_string(),
        })
        .collect();
    let want: BTreeSet<ExpectedEntry> = expected.iter().cloned().collect();
    let missing: Vec<ExpectedEntry> = want.difference(&found).cloned().collect();
    let extras: Vec<Solution> = solutions
        .iter()
        .filter(|s| {
            !want.contains(&ExpectedEntry {
                k: s.k,
                n: s.n,
                value: s.value.to_string(),
            })
        })
        .cloned()
        .collect();
    let matches = found.intersection(&want).count();

    let mut discrepancies = Vec::new();
    for r in &table.rows {
        if let Some(printed) = &r.printed_value {
            if r.n <= n_max && r.k_min <= k_max {
                let q = term(r.k_min, r.n as i64)?;
                discrepancies.push(format!(
                    "n = {}: Q_{}^(k) = {} for k >= {} (= 2F_{}), not the printed {}; {} is{} a two-run number",
                    r.n,
                    r.n,
                    q,
                    r.k_min,
                    2 * r.n,
                    printed,
                    q,
                    if Solution::classify(r.k_min, r.n, q.clone()).is_some() { "" } else { " not" }
                ));
            }
        }
    }

    let window_checks = solutions
        .iter()
        .filter(|s| !s.degenerate && s.n >= s.k as u64 + 2)
        .map(|s| WindowCheck {
            k: s.k,
            n: s.n,
            digits: s.digit_count(),
            holds: lm_window_contains(s.n, s.digit_count()),
        })
        .collect();

    let mut stability = Vec::new();
    for r in table.rows.iter().filter(|r| r.n <= n_max && r.k_min <= k_max) {
        let hi = r.k_max.unwrap_or(k_max).min(k_max);
        let mut stable = true;
        for k in r.k_min..=hi {
            stable &= term(k, r.n as i64)?.to_string() == r.value;
        }
        stability.push(StabilityCheck {
            n: r.n,
            value: r.value.clone(),
            k_min: r.k_min,
            k_max: hi,
            stable,
        });
    }

    let above = solutions.iter().filter(|s| s.n > REDUCTION_N_BOUND).count();
    Ok(VerificationReport {
        k_min: 2,
        k_max,
        n_min: 1,
        n_max,
        strict,
        solutions,
        expected,
        matches,
        missing,
        extras,
        discrepancies,
        window_checks,
        stability,
        above_reduction_bound: above,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ns(sols: &[Solution]) -> Vec<(u64, String)> {
        sols.iter().map(|s| (s.n, s.value.to_string())).collect()
    }

    fn pairs(v: &[(u64, &str)]) -> Vec<(u64, String)> {
        v.iter().map(|(n, s)| (*n, s.to_string())).collect()
    }

    #[test]
    fn small_ranges() {
        let s = solve_range(2, 2, 10).unwrap();
        assert_eq!(ns(&s), pairs(&[(1, "2"), (2, "6"), (3, "14"), (4, "34"), (5, "82")]));
        let s = solve_range(3, 3, 10).unwrap();
        assert_eq!(ns(&s), pairs(&[(1, "2"), (2, "6"), (3, "16"), (4, "40"), (7, "662")]));
        let s = solve_range(6, 6, 10).unwrap();
        assert!(s.iter().any(|x| x.n == 6 && x.value == 288));
        assert!(s[0].single_digit && s[0].degenerate && s[0].decompositions.is_empty());
        assert!(solve_range(1, 3, 10).is_err());
        assert!(solve_range(4, 3, 10).is_err());
    }

    #[test]
    fn fibonacci_path() {
        let s = solve_small_n_via_fibonacci(5).unwrap();
        assert!(s.iter().any(|x| x.n == 5 && x.value == 110));
        let s = solve_small_n_via_fibonacci(10).unwrap();
        assert!(!s.iter().any(|x| x.n == 7));
        assert_eq!(Integer::from(fibonacci(14) * 2u32), 754);
        let s = solve_small_n_via_fibonacci(2).unwrap();
        assert!(s.iter().all(|x| x.n <= 2));
        for k in 2..40 {
            let s = solve_small_n_via_fibonacci(k).unwrap();
            assert!(s.iter().all(|x| x.n <= 6), "k = {k}");
        }
    }

    #[test]
    fn ordering_is_by_k_then_n() {
        let s = solve_range(2, 12, 60).unwrap();
        let keys: Vec<(usize, u64)> = s.iter().map(|x| (x.k, x.n)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn verify_small() {
        let r = verify_theorem(10, 100).unwrap();
        assert!(r.agrees(), "{:?} {:?}", r.missing, r.extras);
        assert!(r.all_checks_hold());
        assert_eq!(r.discrepancies.len(), 1);
        assert!(r.discrepancies[0].contains("2288"));
        let r = verify_theorem(2, 300).unwrap();
        assert_eq!(r.solutions.iter().map(|s| s.n).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert!(r.agrees());
        let r = verify_theorem_with(3, 300, true).unwrap();
        assert!(r.agrees());
        assert!(r.solutions.iter().all(|s| s.n > 2));
    }

    #[test]
    fn monotone_in_range() {
        let small = solve_range(2, 8, 50).unwrap();
        let big = solve_range(2, 10, 80).unwrap();
        for s in &small {
            assert!(big.contains(s));
        }
    }
}
