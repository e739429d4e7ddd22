//! Closed-form reference values for uniform random one-to-one markets.
//!
//! Everything here is generic over the float type so the same formulas can be
//! evaluated in `f32` for quick plots or `f64` for the acceptance checks.

use std::collections::BTreeMap;

use num_traits::{Float, FloatConst};
use thiserror::Error;

use crate::mechanisms::MechanismKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error("index out of range: need 1 <= k <= n and 1 <= j <= n, got k={k}, j={j}, n={n}")]
    OutOfRange { k: usize, j: usize, n: usize },
    #[error("market size must be at least {min}, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("rank index must be at least 1")]
    ZeroRank,
}

/// A closed-form quantity together with where it comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryValue<F> {
    pub value: F,
    pub provenance: &'static str,
}

impl<F: Float> TheoryValue<F> {
    fn new(value: F, provenance: &'static str) -> Self {
        debug_assert!(value.is_finite() && !provenance.is_empty());
        TheoryValue { value, provenance }
    }
}

#[inline]
fn count<F: Float>(x: usize) -> F {
    F::from(x).expect("count fits the float type")
}

#[inline]
fn lit<F: Float>(x: f64) -> F {
    F::from(x).expect("literal fits the float type")
}

/// Probability that the `k`-th dictator in a uniform random order receives
/// their `j`-th choice when all `n` preference lists are independent uniform
/// permutations:
///
/// `p(k, j) = (n + 1 - k) / k * C(k, j) / C(n, j)`, zero for `j > k`.
///
/// Evaluated in log space as `ln((n+1-k)/k) + sum_{i<j} ln((k-i)/(n-i))`.
pub fn rsd_rank_probability<F: Float>(k: usize, j: usize, n: usize) -> Result<F, TheoryError> {
    if k == 0 || j == 0 || k > n || j > n {
        return Err(TheoryError::OutOfRange { k, j, n });
    }
    if j > k {
        return Ok(F::zero());
    }
    let mut log_p = (count::<F>(n + 1 - k) / count::<F>(k)).ln();
    for i in 0..j {
        log_p = log_p + (count::<F>(k - i) / count::<F>(n - i)).ln();
    }
    Ok(log_p.exp())
}

/// Full table `p[k-1][j-1]` for a market of size `n`, by the recurrence
/// `p(k, 1) = (n + 1 - k) / n`, `p(k, j + 1) = p(k, j) * (k - j) / (n - j)`.
pub fn rsd_rank_table<F: Float>(n: usize) -> Vec<Vec<F>> {
    (1..=n)
        .map(|k| {
            let mut row = Vec::with_capacity(n);
            let mut p = count::<F>(n + 1 - k) / count::<F>(n);
            for j in 1..=n {
                row.push(p);
                if j < n {
                    p = p * count::<F>(k.saturating_sub(j)) / count::<F>(n - j);
                }
            }
            row
        })
        .collect()
}

/// Expected fraction of students without justified envy under RSD (and,
/// asymptotically, TTC): a student placed at their `j`-th choice is envy-free
/// with probability `2^-(j-1)`, so the fraction is
/// `(1/n) * sum_k sum_{j<=k} p(k, j) / 2^(j-1)`.
pub fn rsd_no_envy_fraction<F: Float>(n: usize) -> Result<TheoryValue<F>, TheoryError> {
    if n == 0 {
        return Err(TheoryError::TooSmall { n, min: 1 });
    }
    let half = lit::<F>(0.5);
    let mut total = F::zero();
    for k in 1..=n {
        let mut p = count::<F>(n + 1 - k) / count::<F>(n);
        let mut weight = F::one();
        for j in 1..=k {
            let term = p * weight;
            if term == F::zero() {
                // both factors are non-increasing in j
                break;
            }
            total = total + term;
            if j < n {
                p = p * count::<F>(k - j) / count::<F>(n - j);
            }
            weight = weight * half;
        }
    }
    Ok(TheoryValue::new(
        total / count::<F>(n),
        "RSD rank law p(k,j) weighted by the chance 2^-(j-1) of no justified envy",
    ))
}

/// The same quantity by the telescoped form
/// `(n+1)/n * (2 - 2^-(n-1)/(n+1) - 2 * sum_{j<=n} 2^-j / j)`.
pub fn rsd_no_envy_fraction_closed_form<F: Float>(n: usize) -> Result<TheoryValue<F>, TheoryError> {
    if n == 0 {
        return Err(TheoryError::TooSmall { n, min: 1 });
    }
    let two = lit::<F>(2.0);
    let half = lit::<F>(0.5);
    let mut series = F::zero();
    let mut pow = F::one();
    for j in 1..=n {
        pow = pow * half;
        if pow == F::zero() {
            break;
        }
        series = series + pow / count::<F>(j);
    }
    let np1 = count::<F>(n + 1);
    let tail = half.powi(i32::try_from(n - 1).unwrap_or(i32::MAX)) / np1;
    let per_np1 = two - tail - two * series;
    Ok(TheoryValue::new(
        per_np1 * np1 / count::<F>(n),
        "telescoped RSD no-envy sum",
    ))
}

/// Limit of [`rsd_no_envy_fraction`]: `2 + 2 ln(1/2) = 2 - 2 ln 2`.
pub fn rsd_no_envy_limit<F: Float + FloatConst>() -> TheoryValue<F> {
    let two = lit::<F>(2.0);
    TheoryValue::new(
        two - two * F::LN_2(),
        "2 + 2 ln(1/2), limit of the RSD no-envy fraction",
    )
}

/// Limit share of students with justified envy under RSD and TTC, `2 ln 2 - 1`.
pub fn ttc_envy_limit<F: Float + FloatConst>() -> TheoryValue<F> {
    TheoryValue::new(
        F::one() - rsd_no_envy_limit::<F>().value,
        "1 - (2 - 2 ln 2), TTC and RSD share the limit",
    )
}

/// Limiting probability that RM assigns a student their `i`-th choice, `2^-i`.
pub fn rm_rank_pmf<F: Float>(i: u32) -> Result<F, TheoryError> {
    if i == 0 {
        return Err(TheoryError::ZeroRank);
    }
    Ok(lit::<F>(0.5).powi(i as i32))
}

/// `1 - sum_{i<=terms} 2^-(2i-1)`: RM envy share when ranks follow [`rm_rank_pmf`]
/// truncated after `terms` ranks.
pub fn rm_envy_partial<F: Float>(terms: u32) -> F {
    let quarter = lit::<F>(0.25);
    let mut term = lit::<F>(0.5);
    let mut sum = F::zero();
    for _ in 0..terms {
        sum = sum + term;
        term = term * quarter;
    }
    F::one() - sum
}

/// Limit RM envy share, `1 - (1/2) / (1 - 1/4) = 1/3`.
pub fn rm_envy_limit<F: Float>() -> TheoryValue<F> {
    TheoryValue::new(
        F::one() / lit::<F>(3.0),
        "1 - sum 2^-(2i-1), geometric series",
    )
}

/// `H_n = sum_{i<=n} 1/i`.
pub fn harmonic<F: Float>(n: usize) -> F {
    // summed smallest-first
    (1..=n)
        .rev()
        .fold(F::zero(), |acc, i| acc + F::one() / count::<F>(i))
}

/// Expected average TTC (equivalently RSD) rank: `((n + 1) H_n - n) / n`.
pub fn ttc_expected_avg_rank<F: Float>(n: usize) -> Result<TheoryValue<F>, TheoryError> {
    if n == 0 {
        return Err(TheoryError::TooSmall { n, min: 1 });
    }
    let nf = count::<F>(n);
    Ok(TheoryValue::new(
        ((nf + F::one()) * harmonic::<F>(n) - nf) / nf,
        "expected total rank (n+1)H_n - n under random serial dictatorship",
    ))
}

/// Asymptotic reference curves for one mechanism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asymptotes<F> {
    pub avg: TheoryValue<F>,
    pub max: TheoryValue<F>,
    /// Lower companion of `avg` where one is known.
    pub avg_lower: Option<TheoryValue<F>>,
    /// Empirical companion of `max` where only a bound is proven.
    pub max_observed: Option<TheoryValue<F>>,
}

/// Reference (not predicted) average and maximum ranks for RM, TTC and DA at
/// size `n`. These are limits; finite-`n` deviation is expected.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceCurves<F> {
    pub n: usize,
    pub curves: BTreeMap<MechanismKind, Asymptotes<F>>,
}

pub fn reference_curves<F: Float + FloatConst>(
    n: usize,
) -> Result<ReferenceCurves<F>, TheoryError> {
    if n < 2 {
        return Err(TheoryError::TooSmall { n, min: 2 });
    }
    let nf = count::<F>(n);
    let ln = nf.ln();
    let mut curves = BTreeMap::new();
    curves.insert(
        MechanismKind::Rm,
        Asymptotes {
            avg: TheoryValue::new(lit(2.0), "upper bound 2 on the limiting RM mean rank"),
            avg_lower: Some(TheoryValue::new(
                F::PI() * F::PI() / lit(6.0),
                "lower bound pi^2/6 on the limiting RM mean rank",
            )),
            max: TheoryValue::new(nf.log2(), "RM maximum rank ~ log2 n"),
            max_observed: None,
        },
    );
    curves.insert(
        MechanismKind::Ttc,
        Asymptotes {
            avg: TheoryValue::new(ln, "TTC mean rank ~ ln n"),
            avg_lower: None,
            max: TheoryValue::new(
                lit::<F>(0.5) * nf,
                "proven lower bound 0.5 n on the TTC maximum rank",
            ),
            max_observed: Some(TheoryValue::new(
                lit::<F>(0.63) * nf,
                "simulated TTC maximum rank ~ 0.63 n",
            )),
        },
    );
    curves.insert(
        MechanismKind::Da,
        Asymptotes {
            avg: TheoryValue::new(ln, "DA mean rank ~ ln n"),
            avg_lower: None,
            max: TheoryValue::new(ln * ln, "DA maximum rank ~ ln^2 n"),
            max_observed: None,
        },
    );
    Ok(ReferenceCurves { n, curves })
}
