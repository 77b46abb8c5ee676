use num::bigint::BigUint;
use num::integer::binomial;
use num::{BigRational, BigInt, One, Zero};

use crate::error::{Error, Result};

fn check_pass_args(n: usize, c: usize, k: usize) -> Result<()> {
    if c > n {
        return Err(Error::input(format!("correct count {c} exceeds sample count {n}")));
    }
    if k < 1 || k > n {
        return Err(Error::input(format!("pass@k requires 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}

/// Unbiased pass@k estimate `1 - C(n-c, k) / C(n, k)`, evaluated as a
/// running product so large `n` does not overflow.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64> {
    check_pass_args(n, c, k)?;
    if c == 0 {
        return Ok(0.0);
    }
    if n - c < k {
        return Ok(1.0);
    }
    // C(n-c, k) / C(n, k) = prod_{i=n-c+1}^{n} (1 - k / i)
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

/// The same estimate in exact rational arithmetic.
pub fn pass_at_k_exact(n: usize, c: usize, k: usize) -> Result<BigRational> {
    check_pass_args(n, c, k)?;
    let total = binomial(BigUint::from(n), BigUint::from(k));
    let miss = if n - c >= k {
        binomial(BigUint::from(n - c), BigUint::from(k))
    } else {
        BigUint::zero()
    };
    let ratio = BigRational::new(BigInt::from(miss), BigInt::from(total));
    Ok(BigRational::one() - ratio)
}

/// Probability that a random (incorrect, correct) pair ranks the incorrect
/// item as more uncertain; ties count one half.
///
/// `scores` holds `(uncertainty, incorrect)` pairs.
pub fn auroc(scores: &[(f64, bool)]) -> Result<f64> {
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::input("uncertainty scores must not be NaN"));
    }
    let positives = scores.iter().filter(|(_, bad)| *bad).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuroc);
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Twice the Mann-Whitney U statistic, kept integral.
    let mut twice_u: u128 = 0;
    let mut correct_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let group = &sorted[i..j];
        let bad = group.iter().filter(|(_, b)| *b).count() as u128;
        let good = group.len() as u128 - bad;
        twice_u += bad * (2 * correct_below + good);
        correct_below += good;
        i = j;
    }
    Ok(twice_u as f64 / (2 * positives as u128 * negatives as u128) as f64)
}

/// Nearest-rank percentile: the `ceil(q / 100 * n)`-th smallest value.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::input("percentile of an empty list"));
    }
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::input(format!("percentile must lie in (0, 100], got {q}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::input("percentile input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64 / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}
