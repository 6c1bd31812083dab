//! The acceptance suite: twelve checks tying the simulators to the exact
//! kernels and limit laws.
//!
//! `Level::Quick` divides every Monte Carlo sample count by ten and widens
//! sampling-noise tolerances by `sqrt(10)` to match; exact checks are
//! identical at both levels.

use std::collections::HashSet;
use std::time::Instant;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_chain::{
    generator_coeffs_exact, run_strips, strip_kernel_bruteforce, strip_kernel_exact,
    strip_kernel_rational, strip_kernel_row, RandomMoves,
};
use crate::branching::{gw_kernel_rational, slice_marginal_dp};
use crate::diffusion::{
    bessel3_cdf, euler_marginal, euler_marginals_at, gamma2_cdf, rescaled_growth_marginal,
    rescaled_slice_marginal, time_changed_marginals, EulerConfig, SdeSpec, DEFAULT_DT,
    DEFAULT_FLOOR,
};
use crate::error::Result;
use crate::exact::{ratio, Rational};
use crate::rng::StreamSeed;
use crate::stats::{
    chi_square_lattice, duality_suite, fractal_dimension, ks_one_sample, ks_two_sample,
    martingale_residuals, mean, ScalingConfig,
};
use crate::triangulation::{
    build_from_moves, defect_free_moves, enumerate_stopped, grow_strips, moves_from_causal,
    remove_defects, validate_causal,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    fn scale(self, n: usize) -> usize {
        match self {
            Level::Quick => (n / 10).max(1),
            Level::Full => n,
        }
    }

    fn widen(self, tol: f64) -> f64 {
        match self {
            Level::Quick => tol * 10f64.sqrt(),
            Level::Full => tol,
        }
    }
}

/// Strip kernel used as the model in the Monte Carlo strip check.
pub type KernelFn = fn(u64, i64) -> Result<f64>;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    pub strip_kernel: KernelFn,
}

impl VerifyOptions {
    pub fn new(level: Level, seed: u64) -> Self {
        Self {
            level,
            seed,
            strip_kernel: strip_kernel_exact,
        }
    }

    fn stream(&self, id: usize, tag: &str) -> StreamSeed {
        StreamSeed::new(self.seed)
            .domain(&format!("criterion-{id}"))
            .domain(tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// The quantity compared against the threshold.
    pub statistic: f64,
    pub threshold: String,
    pub detail: String,
    /// Wall time, left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} stat={:<12.6} need {:<22} ({:.1}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.statistic,
            self.threshold,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub results: Vec<CriterionResult>,
}

pub const CRITERIA: [&str; 12] = [
    "strip kernel vs enumeration",
    "strip kernel vs size-biased GW",
    "strip Monte Carlo",
    "slice marginals",
    "martingale residuals",
    "fractal dimension",
    "growth-clock diffusion",
    "slice-clock diffusion",
    "time-change duality",
    "duality ratio",
    "defect-removal bijection",
    "generator coefficients",
];

struct Outcome {
    passed: bool,
    statistic: f64,
    threshold: String,
    detail: String,
}

pub fn run_criterion(id: usize, opts: &VerifyOptions) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
        1 => kernel_vs_enumeration(),
        2 => kernel_vs_branching(),
        3 => strip_monte_carlo(opts),
        4 => slice_marginals(opts),
        5 => martingales(),
        6 => fractal(opts),
        7 => growth_diffusion(opts),
        8 => slice_diffusion(opts),
        9 => time_change_duality(opts),
        10 => duality_ratio(opts),
        11 => bijection(),
        12 => generator(),
        _ => Ok(Outcome {
            passed: false,
            statistic: f64::NAN,
            threshold: String::new(),
            detail: format!("no criterion {id}"),
        }),
    };
    let outcome = outcome.unwrap_or_else(|e| Outcome {
        passed: false,
        statistic: f64::NAN,
        threshold: String::new(),
        detail: format!("error: {e}"),
    });
    CriterionResult {
        id,
        name: CRITERIA
            .get(id.wrapping_sub(1))
            .copied()
            .unwrap_or("unknown"),
        passed: outcome.passed,
        statistic: outcome.statistic,
        threshold: outcome.threshold,
        detail: outcome.detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_suite(opts: &VerifyOptions, ids: &[usize]) -> SuiteReport {
    let results: Vec<CriterionResult> = ids.iter().map(|&id| run_criterion(id, opts)).collect();
    SuiteReport {
        level: opts.level,
        seed: opts.seed,
        passed: results.iter().all(|r| r.passed),
        results,
    }
}

fn kernel_vs_enumeration() -> Result<Outcome> {
    let mut checked = 0;
    let mut mismatches = 0;
    for m in 1..=4u64 {
        let bf = strip_kernel_bruteforce(m, 14)?;
        for k in (1 - m as i64)..=(14 - 2 * m as i64) {
            let got = bf.mass.get(&k).cloned().unwrap_or_else(Rational::zero);
            if got != strip_kernel_rational(m, k)? {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    Ok(Outcome {
        passed: mismatches == 0,
        statistic: mismatches as f64,
        threshold: "0 mismatches".into(),
        detail: format!("{checked} exact (m, k) pairs"),
    })
}

fn kernel_vs_branching() -> Result<Outcome> {
    let mut checked = 0;
    let mut mismatches = 0;
    for m in 1..=10u64 {
        for k in (1 - m as i64)..=30 {
            let lhs = strip_kernel_rational(m, k)?;
            let rhs = ratio(m as i64 + k, m as i64) * gw_kernel_rational(m, (m as i64 + k) as u64)?;
            if lhs != rhs {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    Ok(Outcome {
        passed: mismatches == 0,
        statistic: mismatches as f64,
        threshold: "0 mismatches".into(),
        detail: format!("{checked} exact (m, k) pairs"),
    })
}

const P_MIN: f64 = 1e-3;

fn strip_monte_carlo(opts: &VerifyOptions) -> Result<Outcome> {
    let m = 3u64;
    let n = opts.level.scale(100_000);
    let seed = opts.stream(3, "strips");
    let ks: Vec<i64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let w = run_strips(m, 2, RandomMoves::new(seed.stream(i)), |_| {})?;
            Ok(w.boundary() as i64 - m as i64)
        })
        .collect::<Result<_>>()?;
    let row = strip_kernel_row(m, 1e-14)?;
    let probs: Vec<f64> = row
        .indices()
        .map(|k| (opts.strip_kernel)(m, k))
        .collect::<Result<_>>()?;
    let chi = chi_square_lattice(&ks, row.first, &probs, 5.0)?;
    Ok(Outcome {
        passed: chi.p_value > P_MIN,
        statistic: chi.p_value,
        threshold: format!("p > {P_MIN}"),
        detail: format!("{n} strips, chi2 = {:.2} on {} dof", chi.statistic, chi.dof),
    })
}

fn slice_marginals(opts: &VerifyOptions) -> Result<Outcome> {
    let n = opts.level.scale(100_000);
    let seed = opts.stream(4, "grow");
    let sizes: Vec<Vec<u64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| Ok(grow_strips(1, 4, RandomMoves::new(seed.stream(i)))?.slice_sizes))
        .collect::<Result<_>>()?;
    let mut min_p: f64 = 1.0;
    let mut parts = Vec::new();
    for j in 1..=4usize {
        // generation j of the size-biased chain is slice j + 1
        let values: Vec<i64> = sizes.iter().map(|s| s[j] as i64).collect();
        let dp = slice_marginal_dp(1, j, 400)?;
        let chi = chi_square_lattice(&values, 1, &dp.probs[1..], 5.0)?;
        min_p = min_p.min(chi.p_value);
        parts.push(format!("j={j}: p={:.3}", chi.p_value));
    }
    Ok(Outcome {
        passed: min_p > P_MIN,
        statistic: min_p,
        threshold: format!("min p > {P_MIN}"),
        detail: format!("{n} triangulations; {}", parts.join(", ")),
    })
}

fn martingales() -> Result<Outcome> {
    let mut grid: Vec<u64> = (1..=10_000).collect();
    grid.extend((1..=200).map(|k| (10_000.0 * 100f64.powf(k as f64 / 200.0)).round() as u64));
    let rep = martingale_residuals(&grid)?;
    Ok(Outcome {
        passed: rep.all_zero,
        statistic: rep.failures.len() as f64,
        threshold: "0 nonzero residuals".into(),
        detail: format!(
            "{} boundary values up to 1e6; max relative f64 residuals {:.1e} / {:.1e}",
            grid.len(),
            rep.max_relative_square,
            rep.max_relative_drift
        ),
    })
}

fn fractal(opts: &VerifyOptions) -> Result<Outcome> {
    let trajectories = opts.level.scale(50);
    let cfg = ScalingConfig {
        seed: opts.seed.wrapping_add(6),
        ..ScalingConfig::new(4096, trajectories, 0)
    };
    let rep = fractal_dimension(&cfg)?;
    let (lo, hi) = (1.85, 2.15);
    Ok(Outcome {
        passed: (lo..=hi).contains(&rep.median_slope),
        statistic: rep.median_slope,
        threshold: format!("in [{lo}, {hi}]"),
        detail: format!(
            "{trajectories} trajectories, median CI [{:.3}, {:.3}], strip checks clean",
            rep.median_ci95.0, rep.median_ci95.1
        ),
    })
}

fn growth_diffusion(opts: &VerifyOptions) -> Result<Outcome> {
    let samples = opts.level.scale(10_000);
    let chain = rescaled_growth_marginal(10_000, 1.0, 1, samples, opts.stream(7, "chain"))?;
    let cfg = EulerConfig::new(DEFAULT_DT, 1.0);
    let sde = euler_marginal(
        SdeSpec::Growth,
        DEFAULT_FLOOR,
        &cfg,
        samples,
        opts.stream(7, "sde"),
    )?;
    let d = ks_two_sample(&chain, &sde)?;
    let tol = opts.level.widen(0.03);
    Ok(Outcome {
        passed: d < tol,
        statistic: d,
        threshold: format!("KS < {tol:.3}"),
        detail: format!(
            "{samples} samples each; vs |N3| law: chain {:.4}, sde {:.4}",
            ks_one_sample(&chain, bessel3_cdf)?,
            ks_one_sample(&sde, bessel3_cdf)?
        ),
    })
}

fn slice_diffusion(opts: &VerifyOptions) -> Result<Outcome> {
    let samples = opts.level.scale(20_000);
    let chain = rescaled_slice_marginal(128, 1.0, 1, samples, opts.stream(8, "chain"))?;
    let cfg = EulerConfig::new(DEFAULT_DT, 1.0);
    let sde = euler_marginal(
        SdeSpec::Slice,
        DEFAULT_FLOOR,
        &cfg,
        samples,
        opts.stream(8, "sde"),
    )?;
    let d = ks_two_sample(&chain, &sde)?;
    let m = mean(&chain);
    let tol = opts.level.widen(0.03);
    let mean_tol = opts.level.widen(0.05);
    Ok(Outcome {
        passed: d < tol && (m - 2.0).abs() <= mean_tol,
        statistic: d,
        threshold: format!("KS < {tol:.3}, |mean-2| <= {mean_tol:.3}"),
        detail: format!(
            "{samples} samples each; mean {m:.4}; vs Gamma(2,1): chain {:.4}, sde {:.4}",
            ks_one_sample(&chain, gamma2_cdf)?,
            ks_one_sample(&sde, gamma2_cdf)?
        ),
    })
}

fn time_change_duality(opts: &VerifyOptions) -> Result<Outcome> {
    let samples = opts.level.scale(10_000);
    let s_points = [0.5, 1.0];
    let x0 = 1.0;
    let growth_cfg = EulerConfig::new(DEFAULT_DT, 64.0);
    let changed = time_changed_marginals(
        SdeSpec::Growth,
        x0,
        &growth_cfg,
        |x| 1.0 / (2.0 * x),
        &s_points,
        samples,
        opts.stream(9, "growth"),
    )?;
    let slice_cfg = EulerConfig::new(DEFAULT_DT, 1.0);
    let direct = euler_marginals_at(
        SdeSpec::Slice,
        x0,
        &slice_cfg,
        &s_points,
        samples,
        opts.stream(9, "slice"),
    )?;
    let tol = opts.level.widen(0.03);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (p, s) in s_points.iter().enumerate() {
        let d = ks_two_sample(&changed.values[p], &direct[p])?;
        worst = worst.max(d);
        parts.push(format!("s={s}: {d:.4}"));
    }
    let truncated_ok = changed.truncated * 100 <= samples;
    Ok(Outcome {
        passed: worst < tol && truncated_ok,
        statistic: worst,
        threshold: format!("KS < {tol:.3} at each s"),
        detail: format!(
            "{samples} paths from x0 = {x0}; {}; {} clock-truncated",
            parts.join(", "),
            changed.truncated
        ),
    })
}

fn duality_ratio(opts: &VerifyOptions) -> Result<Outcome> {
    let runs = opts.level.scale(100);
    let rep = duality_suite(1, 1_000_000, runs, opts.seed.wrapping_add(10), (0.9, 1.1))?;
    let finals: Vec<f64> = rep.ratios.iter().map(|r| *r.last().unwrap()).collect();
    let (lo, hi) = finals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    Ok(Outcome {
        passed: rep.fraction_in_band >= 0.95,
        statistic: rep.fraction_in_band,
        threshold: "share in [0.9, 1.1] >= 0.95".into(),
        detail: format!("{runs} runs of 1e6 steps; final ratios in [{lo:.3}, {hi:.3}]"),
    })
}

fn bijection() -> Result<Outcome> {
    let m0 = 2u64;
    let max_moves = 12;
    let seqs = enumerate_stopped(m0, 1, max_moves);
    let mut images = HashSet::new();
    let mut problems = Vec::new();
    let mut law: Vec<Rational> = vec![Rational::zero(); max_moves + 1];
    for s in &seqs {
        let act = build_from_moves(m0, s)?;
        let ct = remove_defects(&act)?;
        if validate_causal(&ct.slice_sizes, &ct.triangles()).is_err() {
            problems.push(format!("{s}: invalid image"));
        }
        if moves_from_causal(&ct)? != *s {
            problems.push(format!("{s}: inverse mismatch"));
        }
        let p = s.probability_exact(m0)?;
        let clean = defect_free_moves(&act)?;
        if clean.probability_exact(m0)? != p {
            problems.push(format!("{s}: probability changed"));
        }
        let rebuilt = build_from_moves(m0, &clean)?;
        if validate_causal(&rebuilt.slice_sizes, &rebuilt.triangles).is_err() {
            problems.push(format!("{s}: rewrite still has a defect"));
        }
        images.insert(ct);
        let k = act.slice_sizes[1] as usize;
        law[k] += p;
    }
    let injective = images.len() == seqs.len();
    // a strip from 2 ending at 2 + k has 4 + k moves, all enumerated for k <= 8
    for k in -1..=8i64 {
        if law[(2 + k) as usize] != strip_kernel_rational(m0, k)? {
            problems.push(format!("boundary law differs at k = {k}"));
        }
    }
    let defects = seqs
        .iter()
        .filter(|s| s.0[0] == crate::boundary_chain::Move::Minus)
        .count();
    Ok(Outcome {
        passed: injective && problems.is_empty(),
        statistic: problems.len() as f64 + f64::from(u8::from(!injective)),
        threshold: "0 problems, injective".into(),
        detail: format!(
            "{} stopped outputs ({defects} with a defect), {} distinct images{}",
            seqs.len(),
            images.len(),
            problems
                .first()
                .map(|p| format!("; first problem: {p}"))
                .unwrap_or_default()
        ),
    })
}

fn generator() -> Result<Outcome> {
    let mut checked = 0;
    let mut mismatches = 0;
    for q in 1..=16u64 {
        // any eps above the jump size 1/q sees no jumps
        let eps = ratio(11, 10 * q as i64);
        for m in 1..=64u64 {
            let c = generator_coeffs_exact(m, q, &eps)?;
            let one = ratio(1, 1);
            if c.b != &one / &c.x || c.sigma2 != one || !c.delta_eps.is_zero() {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    Ok(Outcome {
        passed: mismatches == 0,
        statistic: mismatches as f64,
        threshold: "0 mismatches".into(),
        detail: format!("{checked} exact (m, n = q^2) points"),
    })
}
