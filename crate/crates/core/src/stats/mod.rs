//! Goodness-of-fit machinery and the estimators built on the chain.

mod duality;
mod martingale;
mod scaling;

pub use duality::{duality_ratio, duality_ratio_at, duality_suite, DualityReport};
pub use martingale::{
    martingale_residuals, martingale_trend, ExactResidual, MartingaleReport, MartingaleTrend,
};
pub use scaling::{
    fractal_dimension, fractal_dimension_with, RatioRange, ScalingConfig, ScalingReport,
};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, UictError};

/// What a sample is compared against.
pub enum KsReference<'a> {
    Sample(&'a [f64]),
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// Kolmogorov-Smirnov sup distance between the empirical CDF of `a` and
/// the reference.
pub fn ks_distance(a: &[f64], reference: KsReference<'_>) -> Result<f64> {
    match reference {
        KsReference::Sample(b) => ks_two_sample(a, b),
        KsReference::Cdf(f) => ks_one_sample(a, f),
    }
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(UictError::EmptySample);
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(UictError::InvalidArgument("NaN in sample".into()));
    }
    let mut s = v.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(s)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step past every copy of the smaller value on both sides
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let a = sorted(a)?;
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of bins left after pooling.
    pub bins: usize,
}

/// Pearson test of `counts` against cell probabilities `probs`.
///
/// Adjacent cells are pooled left to right until each pooled cell expects
/// at least `min_expected` observations; a short remainder joins the last
/// pooled cell. `probs` must sum to 1 within `1e-6`, so callers fold any
/// tail mass into a final cell.
pub fn chi_square(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquare> {
    if counts.len() != probs.len() {
        return Err(UictError::InvalidArgument(
            "counts and probabilities differ in length".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(UictError::EmptySample);
    }
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(UictError::InvalidArgument(format!(
            "cell probabilities sum to {mass}"
        )));
    }
    let n = total as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += p * n;
        if exp >= min_expected {
            pooled.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if obs > 0.0 || exp > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => pooled.push((obs, exp)),
        }
    }
    let mut statistic = 0.0;
    for &(o, e) in &pooled {
        if e == 0.0 {
            if o > 0.0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        statistic += (o - e) * (o - e) / e;
    }
    let dof = pooled.len().saturating_sub(1);
    let p_value = if statistic.is_infinite() {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).unwrap().sf(statistic)
    };
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
        bins: pooled.len(),
    })
}

/// Bins integer observations on cells `first, first + 1, ...` against
/// `probs`, with the last cell open to the right and carrying the missing
/// tail mass. Observations below `first` form their own zero-probability
/// cell.
pub fn chi_square_lattice(
    values: &[i64],
    first: i64,
    probs: &[f64],
    min_expected: f64,
) -> Result<ChiSquare> {
    if probs.is_empty() {
        return Err(UictError::InvalidArgument("no cells".into()));
    }
    let last = probs.len() - 1;
    let mut counts = vec![0u64; probs.len() + 1];
    for &v in values {
        if v < first {
            counts[0] += 1;
        } else {
            counts[1 + ((v - first) as usize).min(last)] += 1;
        }
    }
    let mut cells = Vec::with_capacity(probs.len() + 1);
    cells.push(0.0);
    cells.extend_from_slice(probs);
    let tail = 1.0 - probs.iter().sum::<f64>();
    *cells.last_mut().unwrap() += tail.max(0.0);
    if counts[0] > 0 {
        return Ok(ChiSquare {
            statistic: f64::INFINITY,
            dof: probs.len() - 1,
            p_value: 0.0,
            bins: probs.len(),
        });
    }
    chi_square(&counts[1..], &cells[1..], min_expected)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
