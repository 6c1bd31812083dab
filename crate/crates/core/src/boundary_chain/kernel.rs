//! Strip-level kernel and the finite-n generator coefficients.
//!
//! From boundary `m` at a strip start, the strip ends with boundary `m + k`
//! after exactly `2m + k` moves with probability
//! `((m + k) / m) * C(2m + k - 1, m - 1) / 2^(2m + k)`, `k >= 1 - m`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use super::{step_prob, step_prob_exact, Move};
use crate::error::{Result, UictError};
use crate::exact::{binomial, from_uint, pow2, ratio, Rational};

fn check_strip_args(m: u64, k: i64) -> Result<()> {
    if m == 0 {
        return Err(UictError::ZeroBoundary(0));
    }
    if k < 1 - m as i64 {
        return Err(UictError::Domain(format!("k = {k} < 1 - m for m = {m}")));
    }
    Ok(())
}

/// Closed-form strip kernel in floating point (log-domain binomial).
pub fn strip_kernel_exact(m: u64, k: i64) -> Result<f64> {
    check_strip_args(m, k)?;
    let len = (2 * m as i64 + k) as u64;
    let ln_p = ((m as i64 + k) as f64 / m as f64).ln() + ln_binomial(len - 1, m - 1)
        - len as f64 * std::f64::consts::LN_2;
    Ok(ln_p.exp())
}

pub fn strip_kernel_rational(m: u64, k: i64) -> Result<Rational> {
    check_strip_args(m, k)?;
    let len = (2 * m as i64 + k) as u64;
    let c = from_uint(binomial(len - 1, m - 1)) / from_uint(pow2(len));
    Ok(ratio(m as i64 + k, m as i64) * c)
}

/// A truncated row of a kernel over consecutive integer targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRow {
    /// First target index (for the strip kernel, `k = 1 - m`).
    pub first: i64,
    pub probs: Vec<f64>,
    /// Probability mass beyond the last tabulated entry.
    pub residual: f64,
}

impl KernelRow {
    pub fn get(&self, index: i64) -> f64 {
        if index < self.first {
            return 0.0;
        }
        self.probs
            .get((index - self.first) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn last(&self) -> i64 {
        self.first + self.probs.len() as i64 - 1
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.probs.len() as i64).map(move |i| self.first + i)
    }
}

/// Tabulates a unimodal row whose first entry is `exp(ln_first)` and whose
/// consecutive entries satisfy `p[i + 1] = p[i] * ratio(i)`. Stops once the
/// geometric bound on the remaining tail falls below `tail_tol`.
pub(crate) fn row_by_ratio(
    first: i64,
    ln_first: f64,
    ratio: impl Fn(i64) -> f64,
    tail_tol: f64,
) -> KernelRow {
    // Underflow guard: walk in log space until the terms are representable.
    const LN_TINY: f64 = -700.0;
    let mut probs = Vec::new();
    let mut idx = first;
    let mut ln_p = ln_first;
    while ln_p < LN_TINY {
        probs.push(ln_p.exp());
        let r = ratio(idx);
        ln_p += r.ln();
        idx += 1;
        if r < 1.0 {
            // decreasing from a negligible start: nothing left to tabulate
            break;
        }
    }
    let mut p = ln_p.exp();
    let mut sum: f64 = probs.iter().sum();
    loop {
        probs.push(p);
        sum += p;
        let r = ratio(idx);
        idx += 1;
        if r < 1.0 {
            let tail_bound = p * r / (1.0 - r);
            if tail_bound < tail_tol || p == 0.0 {
                break;
            }
        }
        p *= r;
    }
    KernelRow {
        first,
        probs,
        residual: (1.0 - sum).max(0.0),
    }
}

/// Strip kernel row from boundary `m`, truncated where the tail is below `tail_tol`.
pub fn strip_kernel_row(m: u64, tail_tol: f64) -> Result<KernelRow> {
    if m == 0 {
        return Err(UictError::ZeroBoundary(0));
    }
    let mf = m as f64;
    // p(m, 1 - m) = 2^-(m + 1); p(m, k + 1) / p(m, k) = (2m + k) / (2(m + k))
    Ok(row_by_ratio(
        1 - m as i64,
        -(mf + 1.0) * std::f64::consts::LN_2,
        |k| (2.0 * mf + k as f64) / (2.0 * (mf + k as f64)),
        tail_tol,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteforceKernel {
    pub m: u64,
    pub len_cap: usize,
    pub mass: BTreeMap<i64, Rational>,
    /// Probability of move sequences still unfinished after `len_cap` moves.
    pub residual: Rational,
}

/// Enumerates every move sequence from boundary `m` that finishes one strip
/// within `len_cap` moves, summing exact path probabilities by final `k`.
pub fn strip_kernel_bruteforce(m: u64, len_cap: usize) -> Result<BruteforceKernel> {
    if m == 0 {
        return Err(UictError::ZeroBoundary(0));
    }
    let mut mass: BTreeMap<i64, Rational> = BTreeMap::new();
    // explicit stack of (boundary, (−)-moves so far, moves so far, path probability)
    let mut stack = vec![(m, 0u64, 0usize, Rational::one())];
    while let Some((b, minus, len, p)) = stack.pop() {
        if minus == m {
            *mass
                .entry(b as i64 - m as i64)
                .or_insert_with(Rational::zero) += p;
            continue;
        }
        if len == len_cap {
            continue;
        }
        for mv in [Move::Plus, Move::Minus] {
            let Some(next) = mv.apply(b) else { continue };
            let q = &p * step_prob_exact(b, mv)?;
            let next_minus = minus + u64::from(mv == Move::Minus);
            stack.push((next, next_minus, len + 1, q));
        }
    }
    let total: Rational = mass.values().fold(Rational::zero(), |acc, v| acc + v);
    Ok(BruteforceKernel {
        m,
        len_cap,
        mass,
        residual: Rational::one() - total,
    })
}

/// Drift, variance and large-jump coefficients of the chain rescaled by `1/sqrt(n)`
/// in space and `1/n` in time, evaluated at `x = m / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorCoeffs {
    pub x: f64,
    pub b: f64,
    pub sigma2: f64,
    pub delta_eps: f64,
}

pub fn discrete_generator_coeffs(m: u64, n: u64, eps: f64) -> Result<GeneratorCoeffs> {
    if n == 0 {
        return Err(UictError::InvalidArgument(
            "scale n must be positive".into(),
        ));
    }
    let root = (n as f64).sqrt();
    let jump = 1.0 / root;
    let h_inv = n as f64;
    let mut b = 0.0;
    let mut sigma2 = 0.0;
    let mut far = 0.0;
    for mv in [Move::Plus, Move::Minus] {
        let p = step_prob(m, mv)?;
        let dy = mv.sign() as f64 * jump;
        if dy.abs() <= 1.0 {
            b += dy * p;
            sigma2 += dy * dy * p;
        }
        if dy.abs() >= eps {
            far += p;
        }
    }
    Ok(GeneratorCoeffs {
        x: m as f64 / root,
        b: h_inv * b,
        sigma2: h_inv * sigma2,
        delta_eps: h_inv * far,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCoeffsExact {
    pub x: Rational,
    pub b: Rational,
    pub sigma2: Rational,
    pub delta_eps: Rational,
}

/// Exact coefficients for a perfect-square scale `n = q^2`, so that
/// `x = m / q` and the jump `1 / q` are rational.
pub fn generator_coeffs_exact(m: u64, q: u64, eps: &Rational) -> Result<GeneratorCoeffsExact> {
    if q == 0 {
        return Err(UictError::InvalidArgument("scale must be positive".into()));
    }
    let n = ratio((q * q) as i64, 1);
    let jump = ratio(1, q as i64);
    let mut b = Rational::zero();
    let mut sigma2 = Rational::zero();
    let mut far = Rational::zero();
    for mv in [Move::Plus, Move::Minus] {
        let p = step_prob_exact(m, mv)?;
        let dy = &jump * ratio(mv.sign(), 1);
        b += &dy * &p;
        sigma2 += &dy * &dy * &p;
        if &jump >= eps {
            far += &p;
        }
    }
    Ok(GeneratorCoeffsExact {
        x: ratio(m as i64, q as i64),
        b: &n * b,
        sigma2: &n * sigma2,
        delta_eps: &n * far,
    })
}
