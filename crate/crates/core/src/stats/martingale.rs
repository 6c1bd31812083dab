//! The two martingales of the boundary chain.
//!
//! With `xi` the next increment from boundary `m`, both
//! `E[(m + xi)^2 - m^2 - 3] = 0` and `E[xi] - 1/m = 0`, so
//! `M_n^2 - 3n` and `M_n - sum_{i < n} 1/M_i` are martingales.

use rayon::prelude::*;
use serde::Serialize;

use super::median;
use crate::boundary_chain::{BoundaryWalker, RandomMoves};
use crate::error::{Result, UictError};
use crate::rng::StreamSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactResidual {
    pub m: u64,
    /// `2m E[Delta X]` for `X_n = M_n^2 - 3n`, in integers.
    pub square_numerator: i128,
    /// `2m E[Delta X]` for `X_n = M_n - sum 1/M_i`, in integers.
    pub drift_numerator: i128,
    /// The same expectations evaluated in `f64`.
    pub square_f64: f64,
    pub drift_f64: f64,
    /// Sums of absolute term sizes, the scale for rounding error.
    pub square_scale: f64,
    pub drift_scale: f64,
}

impl ExactResidual {
    pub fn at(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(UictError::ZeroBoundary(0));
        }
        let mi = m as i128;
        let (up, down) = (mi + 1, mi - 1);
        let sq = |next: i128| next * next - mi * mi - 3;
        let square_numerator = up * sq(mi + 1) + down * sq(mi - 1);
        let drift_numerator = up - down - 2;

        let mf = m as f64;
        let (pu, pd) = ((mf + 1.0) / (2.0 * mf), (mf - 1.0) / (2.0 * mf));
        let (su, sd) = (sq(mi + 1) as f64, sq(mi - 1) as f64);
        Ok(Self {
            m,
            square_numerator,
            drift_numerator,
            square_f64: pu * su + pd * sd,
            drift_f64: pu - pd - 1.0 / mf,
            square_scale: pu * su.abs() + pd * sd.abs(),
            drift_scale: pu + pd + 1.0 / mf,
        })
    }

    /// Integer residuals vanish and float residuals sit within a few
    /// rounding units of their scale.
    pub fn is_zero(&self) -> bool {
        let tol = |scale: f64| 8.0 * f64::EPSILON * scale;
        self.square_numerator == 0
            && self.drift_numerator == 0
            && self.square_f64.abs() <= tol(self.square_scale)
            && self.drift_f64.abs() <= tol(self.drift_scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleTrend {
    pub m0: u64,
    pub runs: usize,
    pub seed: u64,
    /// Window `(c / 10, c]` ends.
    pub checkpoints: Vec<u64>,
    /// Median over runs of `sup M_n / sqrt(n log n)` per window.
    pub square_sup: Vec<f64>,
    /// Median over runs of `sup |M_n - sum 1/M_i| / (sqrt(n) log n)` per window.
    pub drift_sup: Vec<f64>,
}

impl MartingaleTrend {
    pub fn decreasing(&self) -> bool {
        let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        dec(&self.square_sup) && dec(&self.drift_sup)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub grid: Vec<u64>,
    pub all_zero: bool,
    /// Largest `|residual| / scale` seen in `f64`, for both martingales.
    pub max_relative_square: f64,
    pub max_relative_drift: f64,
    /// Grid points whose residual was not zero.
    pub failures: Vec<ExactResidual>,
    pub trend: Option<MartingaleTrend>,
}

pub fn martingale_residuals(m_grid: &[u64]) -> Result<MartingaleReport> {
    let mut max_sq: f64 = 0.0;
    let mut max_dr: f64 = 0.0;
    let mut failures = Vec::new();
    for &m in m_grid {
        let r = ExactResidual::at(m)?;
        max_sq = max_sq.max(r.square_f64.abs() / r.square_scale);
        max_dr = max_dr.max(r.drift_f64.abs() / r.drift_scale);
        if !r.is_zero() {
            failures.push(r);
        }
    }
    Ok(MartingaleReport {
        grid: m_grid.to_vec(),
        all_zero: failures.is_empty(),
        max_relative_square: max_sq,
        max_relative_drift: max_dr,
        failures,
        trend: None,
    })
}

/// Per-window sups of one run for the two martingales.
type RunSups = (Vec<f64>, Vec<f64>);

/// Monte Carlo sup statistics over the windows `(c / 10, c]`.
pub fn martingale_trend(
    m0: u64,
    checkpoints: &[u64],
    runs: usize,
    seed: u64,
) -> Result<MartingaleTrend> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(UictError::InvalidArgument(
            "checkpoints must be increasing".into(),
        ));
    }
    let streams = StreamSeed::new(seed).domain("martingale");
    let per_run: Vec<RunSups> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut w = BoundaryWalker::new(m0, RandomMoves::new(streams.stream(i)))?;
            let mut inv_sum = 0.0;
            let mut sq = Vec::with_capacity(checkpoints.len());
            let mut dr = Vec::with_capacity(checkpoints.len());
            for &c in checkpoints {
                let start = (c / 10).max(2);
                let (mut s1, mut s2): (f64, f64) = (0.0, 0.0);
                while w.step_count() < c {
                    inv_sum += 1.0 / w.boundary() as f64;
                    w.advance()?;
                    let n = w.step_count();
                    if n > start {
                        let nf = n as f64;
                        let (root, log) = (nf.sqrt(), nf.ln());
                        let m = w.boundary() as f64;
                        s1 = s1.max(m / (root * log.sqrt()));
                        s2 = s2.max((m - inv_sum).abs() / (root * log));
                    }
                }
                sq.push(s1);
                dr.push(s2);
            }
            Ok((sq, dr))
        })
        .collect::<Result<_>>()?;
    let column = |pick: fn(&RunSups) -> &Vec<f64>, c: usize| -> f64 {
        median(&per_run.iter().map(|r| pick(r)[c]).collect::<Vec<_>>())
    };
    Ok(MartingaleTrend {
        m0,
        runs,
        seed,
        checkpoints: checkpoints.to_vec(),
        square_sup: (0..checkpoints.len())
            .map(|c| column(|r| &r.0, c))
            .collect(),
        drift_sup: (0..checkpoints.len())
            .map(|c| column(|r| &r.1, c))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        // m = 5: (1/2)(6/5)(36 - 25 - 3) + (1/2)(4/5)(16 - 25 - 3) = 0
        let r = ExactResidual::at(5).unwrap();
        assert_eq!(r.square_numerator, 6 * 8 + 4 * (-12));
        assert!(r.is_zero());
        // m = 1: the (+)-move is forced and 4 - 1 - 3 = 0
        let r = ExactResidual::at(1).unwrap();
        assert_eq!(r.square_f64, 0.0);
        assert!(r.is_zero());
        assert!(ExactResidual::at(0).is_err());
    }

    #[test]
    fn grid_up_to_a_million() {
        let mut grid: Vec<u64> = (1..=2000).collect();
        grid.extend((0..=60).map(|k| (2000.0 * 500f64.powf(k as f64 / 60.0)) as u64));
        grid.push(1_000_000);
        let rep = martingale_residuals(&grid).unwrap();
        assert!(rep.all_zero, "{:?}", rep.failures.first());
    }

    #[test]
    fn trend_report_shape() {
        let t = martingale_trend(1, &[1000, 10_000], 8, 4).unwrap();
        assert_eq!(t.square_sup.len(), 2);
        assert!(t.square_sup.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(martingale_trend(1, &[10, 5], 1, 0).is_err());
    }
}
