//! Critical Galton-Watson side of the slice process.
//!
//! Every vertex of slice `j` has a geometric number of children on slice
//! `j + 1` (`p_k = 2^-(k+1)`), so the population chain moves from `l` to `k`
//! with probability `C(k + l - 1, k) / 2^(k + l)`. Slice sizes of the
//! infinite triangulation follow the same chain size-biased by the
//! population, i.e. conditioned never to die out.

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::boundary_chain::KernelRow;
use crate::error::{Result, UictError};
use crate::exact::{binomial, from_uint, pow2, ratio, Rational};
use crate::rng::{unit, StreamRng, StreamSeed};

const LN2: f64 = std::f64::consts::LN_2;

pub fn offspring_prob(k: u64) -> f64 {
    (-((k + 1) as f64) * LN2).exp()
}

pub fn offspring_prob_rational(k: u64) -> Rational {
    Rational::new(1.into(), pow2(k + 1).into())
}

fn check_parents(l: u64) -> Result<()> {
    if l == 0 {
        return Err(UictError::Domain(
            "parent population must be positive".into(),
        ));
    }
    Ok(())
}

/// One generation of the unconditioned chain, `l` parents to `k` children.
pub fn gw_kernel(l: u64, k: u64) -> Result<f64> {
    check_parents(l)?;
    Ok((ln_binomial(k + l - 1, k) - (k + l) as f64 * LN2).exp())
}

pub fn gw_kernel_rational(l: u64, k: u64) -> Result<Rational> {
    check_parents(l)?;
    Ok(from_uint(binomial(k + l - 1, k)) / from_uint(pow2(k + l)))
}

/// One generation of the size-biased chain, `l` to `m` individuals.
pub fn conditioned_kernel(l: u64, m: u64) -> Result<f64> {
    check_parents(l)?;
    if m == 0 {
        return Err(UictError::Domain(
            "conditioned chain never reaches 0".into(),
        ));
    }
    Ok((m as f64 / l as f64) * gw_kernel(l, m)?)
}

pub fn conditioned_kernel_rational(l: u64, m: u64) -> Result<Rational> {
    check_parents(l)?;
    if m == 0 {
        return Err(UictError::Domain(
            "conditioned chain never reaches 0".into(),
        ));
    }
    Ok(ratio(m, l) * gw_kernel_rational(l, m)?)
}

/// Conditioned row from `l`, starting at `m = 1`.
pub fn conditioned_kernel_row(l: u64, tail_tol: f64) -> Result<KernelRow> {
    check_parents(l)?;
    let lf = l as f64;
    // q(l, 1) = 2^-(l + 1); q(l, m + 1) / q(l, m) = (m + l) / 2m
    Ok(crate::boundary_chain::row_by_ratio(
        1,
        -(lf + 1.0) * LN2,
        |m| (m as f64 + lf) / (2.0 * m as f64),
        tail_tol,
    ))
}

/// Law of the size-biased population after `j` generations from `m0`,
/// tabulated on `0..=trunc`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceMarginal {
    pub m0: u64,
    pub j: usize,
    /// `probs[m]`; entry 0 is always 0.
    pub probs: Vec<f64>,
    pub residual: f64,
}

impl SliceMarginal {
    pub fn get(&self, m: u64) -> f64 {
        self.probs.get(m as usize).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(m, p)| m as f64 * p)
            .sum()
    }
}

/// Iterates the unconditioned chain `j` times by exact convolution on
/// `0..=trunc`, then reweights by `m / m0`.
pub fn slice_marginal_dp(m0: u64, j: usize, trunc: u64) -> Result<SliceMarginal> {
    check_parents(m0)?;
    if trunc < m0 {
        return Err(UictError::InvalidArgument(format!(
            "trunc {trunc} below m0 {m0}"
        )));
    }
    let n = trunc as usize + 1;
    let mut dist = vec![0.0; n];
    dist[m0 as usize] = 1.0;
    let rows: Vec<Vec<f64>> = (1..n as u64).map(|l| gw_row(l, n)).collect();
    for _ in 0..j {
        let mut next = vec![0.0; n];
        next[0] = dist[0];
        for (l, &w) in dist.iter().enumerate().skip(1) {
            if w == 0.0 {
                continue;
            }
            for (slot, &p) in next.iter_mut().zip(&rows[l - 1]) {
                *slot += w * p;
            }
        }
        dist = next;
    }
    let probs: Vec<f64> = dist
        .iter()
        .enumerate()
        .map(|(m, p)| m as f64 / m0 as f64 * p)
        .collect();
    let residual = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(SliceMarginal {
        m0,
        j,
        probs,
        residual,
    })
}

fn gw_row(l: u64, n: usize) -> Vec<f64> {
    (0..n as u64)
        .map(|k| (ln_binomial(k + l - 1, k) - (k + l) as f64 * LN2).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GwState {
    pub generation: usize,
    pub population: u64,
}

/// Size-biased chain, one generation per `next`.
#[derive(Debug, Clone)]
pub struct ConditionedChain {
    state: GwState,
    rng: StreamRng,
}

impl ConditionedChain {
    pub fn new(m0: u64, rng: StreamRng) -> Result<Self> {
        check_parents(m0)?;
        Ok(Self {
            state: GwState {
                generation: 0,
                population: m0,
            },
            rng,
        })
    }

    pub fn state(&self) -> GwState {
        self.state
    }
}

impl Iterator for ConditionedChain {
    type Item = GwState;

    fn next(&mut self) -> Option<GwState> {
        let m = sample_conditioned_step(self.state.population, unit(&mut self.rng));
        self.state = GwState {
            generation: self.state.generation + 1,
            population: m,
        };
        Some(self.state)
    }
}

/// Inverse CDF of `conditioned_kernel(l, .)` at `u`.
pub fn sample_conditioned_step(l: u64, u: f64) -> u64 {
    const LN_TINY: f64 = -700.0;
    let lf = l as f64;
    let ratio = |m: u64| (m as f64 + lf) / (2.0 * m as f64);
    let mut m = 1u64;
    let mut ln_p = -(lf + 1.0) * LN2;
    // terms below e^-700 carry no mass at f64 resolution
    while ln_p < LN_TINY {
        ln_p += ratio(m).ln();
        m += 1;
    }
    let mut p = ln_p.exp();
    let mut cdf = 0.0;
    loop {
        cdf += p;
        if u < cdf {
            return m;
        }
        let r = ratio(m);
        p *= r;
        m += 1;
        if r < 1.0 && p < f64::MIN_POSITIVE {
            // tail cap: u fell in the rounding gap above the accumulated mass
            return m;
        }
    }
}

/// Populations `eta_0 = m0, eta_1, ..., eta_t` of one size-biased chain.
///
/// `eta_j` has the law of slice `j + 1` of the grown triangulation.
pub fn sample_conditioned_chain(
    m0: u64,
    t: usize,
    seed: StreamSeed,
    index: u64,
) -> Result<Vec<u64>> {
    let chain = ConditionedChain::new(m0, seed.stream(index))?;
    let mut out = Vec::with_capacity(t + 1);
    out.push(m0);
    out.extend(chain.take(t).map(|s| s.population));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_chain::{strip_kernel_exact, strip_kernel_rational};
    use crate::exact::to_f64;
    use proptest::prelude::*;

    #[test]
    fn offspring_law() {
        assert_eq!(offspring_prob(0), 0.5);
        assert_eq!(offspring_prob(1), 0.25);
        let s: Rational = (0..=40).map(offspring_prob_rational).sum();
        assert_eq!(s, ratio(1, 1) - Rational::new(1.into(), pow2(41).into()));
        // critical: mean offspring exactly 1 (sum k 2^-(k+1) telescopes)
        let mean: Rational = (0..=200u64)
            .map(|k| ratio(k, 1) * offspring_prob_rational(k))
            .sum();
        let tail = ratio(202, 1) * Rational::new(1.into(), pow2(201).into());
        assert_eq!(mean + tail, ratio(1, 1));
    }

    #[test]
    fn gw_examples() {
        assert_eq!(gw_kernel_rational(1, 1).unwrap(), ratio(1, 4));
        assert_eq!(gw_kernel_rational(2, 1).unwrap(), ratio(1, 4));
        for l in 1..8 {
            assert_eq!(
                gw_kernel_rational(l, 0).unwrap(),
                Rational::new(1.into(), pow2(l).into())
            );
        }
        assert!(gw_kernel(0, 3).is_err());
    }

    #[test]
    fn gw_two_parents_is_a_convolution() {
        for k in 0..20u64 {
            let conv: Rational = (0..=k)
                .map(|i| offspring_prob_rational(i) * offspring_prob_rational(k - i))
                .sum();
            assert_eq!(gw_kernel_rational(2, k).unwrap(), conv);
        }
    }

    #[test]
    fn conditioned_examples() {
        assert_eq!(conditioned_kernel_rational(1, 2).unwrap(), ratio(1, 4));
        assert!((conditioned_kernel(1, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!(conditioned_kernel(3, 0).is_err());
        let s: f64 = (1..=200).map(|m| conditioned_kernel(3, m).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    /// Independent form of the size-biased step: one plus a negative
    /// binomial count of failures before `l + 1` successes at rate 1/2.
    fn negbin_oracle(l: u64, m: u64) -> Rational {
        let failures = m - 1;
        from_uint(binomial(failures + l, failures)) / from_uint(pow2(failures + l + 1))
    }

    #[test]
    fn conditioned_matches_negbin_and_strip_kernel() {
        for l in 1..=10u64 {
            for m in 1..=40u64 {
                let q = conditioned_kernel_rational(l, m).unwrap();
                assert_eq!(q, negbin_oracle(l, m));
                let k = m as i64 - l as i64;
                assert_eq!(q, strip_kernel_rational(l, k).unwrap());
                let qf = conditioned_kernel(l, m).unwrap();
                assert!((qf - strip_kernel_exact(l, k).unwrap()).abs() <= 1e-14 * qf.max(1e-300));
            }
        }
    }

    #[test]
    fn conditioned_rows_normalise() {
        for l in [1, 2, 3, 17, 400, 3000] {
            let row = conditioned_kernel_row(l, 1e-14).unwrap();
            let s: f64 = row.probs.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "l = {l}: {s}");
            assert!(row.residual < 1e-12);
        }
    }

    #[test]
    fn dp_first_generation() {
        let d = slice_marginal_dp(1, 1, 200).unwrap();
        for m in 1..60u64 {
            let want = m as f64 * 2f64.powi(-(m as i32 + 1));
            assert!((d.get(m) - want).abs() < 1e-15);
        }
        assert!(d.residual < 1e-12);
        for m0 in [2, 5] {
            let d = slice_marginal_dp(m0, 1, 300).unwrap();
            for m in 1..40 {
                assert!((d.get(m) - conditioned_kernel(m0, m).unwrap()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dp_two_generations_compose_size_biased_steps() {
        let d = slice_marginal_dp(1, 2, 300).unwrap();
        for m in 1..30u64 {
            let direct: f64 = (1..300u64)
                .map(|l| conditioned_kernel(1, l).unwrap() * conditioned_kernel(l, m).unwrap())
                .sum();
            assert!((d.get(m) - direct).abs() < 1e-14, "m = {m}");
        }
        // at m = 1 the series is sum_l l 4^-(l+1) = 1/9
        let partial: Rational = (1..=60u64)
            .map(|l| {
                conditioned_kernel_rational(1, l).unwrap()
                    * conditioned_kernel_rational(l, 1).unwrap()
            })
            .sum();
        assert!((to_f64(&partial) - 1.0 / 9.0).abs() < 1e-15);
        assert!((d.get(1) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn dp_mean_grows_by_two_per_generation() {
        for j in 1..=4 {
            let d = slice_marginal_dp(1, j, 500).unwrap();
            assert!((d.mean() - (1 + 2 * j) as f64).abs() < 1e-9, "j = {j}");
            assert!(d.residual < 1e-12);
        }
    }

    #[test]
    fn chain_starts_at_m0() {
        let seed = StreamSeed::new(3).domain("chain");
        assert_eq!(sample_conditioned_chain(4, 0, seed, 0).unwrap(), vec![4]);
        let a = sample_conditioned_chain(1, 50, seed, 9).unwrap();
        assert_eq!(a, sample_conditioned_chain(1, 50, seed, 9).unwrap());
        assert!(a.iter().all(|&m| m >= 1));
    }

    #[test]
    fn sampler_first_step_mean() {
        // E[eta_1 | eta_0 = l] = 1 + (l + 1) = l + 2 from the negative binomial form
        let seed = StreamSeed::new(11);
        for l in [1u64, 5, 2000] {
            let mut rng = seed.stream(l);
            let n = 40_000;
            let s: f64 = (0..n)
                .map(|_| sample_conditioned_step(l, unit(&mut rng)) as f64)
                .sum();
            let mean = s / n as f64;
            let sd = (2.0 * (l + 1) as f64 / n as f64).sqrt();
            assert!((mean - (l + 2) as f64).abs() < 4.0 * sd, "l = {l}: {mean}");
        }
    }

    proptest! {
        #[test]
        fn inverse_cdf_is_monotone(l in 1u64..3000, u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
            let (a, b) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            prop_assert!(sample_conditioned_step(l, a) <= sample_conditioned_step(l, b));
        }
    }
}
