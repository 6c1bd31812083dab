//! Growth exponent of `n_t`, the number of triangles below height `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::median;
use crate::boundary_chain::{run_strips, MoveSource, RandomMoves};
use crate::error::{Result, UictError};
use crate::rng::{StreamRng, StreamSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub m0: u64,
    pub t_max: u64,
    pub trajectories: usize,
    /// Smallest height entering the fit.
    pub t_min: u64,
    pub seed: u64,
}

impl ScalingConfig {
    pub fn new(t_max: u64, trajectories: usize, seed: u64) -> Self {
        Self {
            m0: 1,
            t_max,
            trajectories,
            t_min: 64,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRange {
    pub min: f64,
    pub max: f64,
}

impl RatioRange {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(
            Self {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, v| Self {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    /// Heights on a quarter-octave grid up to `t_max`.
    pub t_grid: Vec<u64>,
    /// `n_t[i][g]`: trajectory `i` at height `t_grid[g]`.
    pub n_t: Vec<Vec<u64>>,
    /// Least-squares slope of `log n_t` on `log t` over `t >= t_min`.
    pub slopes: Vec<f64>,
    pub median_slope: f64,
    /// Distribution-free 95% interval for the median slope.
    pub median_ci95: (f64, f64),
    /// Per trajectory range of `n_t log^2 t / t^2` over the fit window.
    pub lower_ratio: Vec<RatioRange>,
    /// Per trajectory range of `n_t / (t^2 log^2 t)` over the fit window.
    pub upper_ratio: Vec<RatioRange>,
}

pub fn height_grid(t_max: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = (0..)
        .map(|k| 2f64.powf(k as f64 / 4.0).round() as u64)
        .take_while(|&t| t <= t_max)
        .collect();
    grid.dedup();
    if grid.last() != Some(&t_max) {
        grid.push(t_max);
    }
    grid
}

pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn fractal_dimension(cfg: &ScalingConfig) -> Result<ScalingReport> {
    let seed = StreamSeed::new(cfg.seed).domain("fractal");
    fractal_dimension_with(cfg, |i| RandomMoves::<StreamRng>::new(seed.stream(i)))
}

/// Same estimate with trajectory `i` driven by `source(i)`.
pub fn fractal_dimension_with<S, F>(cfg: &ScalingConfig, source: F) -> Result<ScalingReport>
where
    S: MoveSource,
    F: Fn(u64) -> S + Sync,
{
    if cfg.t_max < cfg.t_min || cfg.t_min < 2 || cfg.trajectories == 0 {
        return Err(UictError::InvalidArgument(format!(
            "need 2 <= t_min <= t_max and at least one trajectory (t_min = {}, t_max = {})",
            cfg.t_min, cfg.t_max
        )));
    }
    let grid = height_grid(cfg.t_max);
    let n_t: Vec<Vec<u64>> = (0..cfg.trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(grid.len());
            let mut next = 0;
            run_strips(cfg.m0, cfg.t_max as usize, source(i), |stop| {
                if next < grid.len() && stop.t as u64 == grid[next] {
                    row.push(stop.time);
                    next += 1;
                }
            })?;
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let window: Vec<usize> = (0..grid.len()).filter(|&g| grid[g] >= cfg.t_min).collect();
    let xs: Vec<f64> = window.iter().map(|&g| (grid[g] as f64).ln()).collect();
    let slopes: Vec<f64> = n_t
        .iter()
        .map(|row| {
            let ys: Vec<f64> = window.iter().map(|&g| (row[g] as f64).ln()).collect();
            ls_slope(&xs, &ys)
        })
        .collect();
    let ratios = |f: fn(f64, f64) -> f64| -> Vec<RatioRange> {
        n_t.iter()
            .map(|row| {
                RatioRange::of(window.iter().map(|&g| {
                    let t = grid[g] as f64;
                    f(row[g] as f64, t)
                }))
            })
            .collect()
    };
    let lower_ratio = ratios(|n, t| n * t.ln().powi(2) / (t * t));
    let upper_ratio = ratios(|n, t| n / (t * t * t.ln().powi(2)));

    Ok(ScalingReport {
        config: *cfg,
        t_grid: grid,
        median_slope: median(&slopes),
        median_ci95: median_interval(&slopes),
        slopes,
        n_t,
        lower_ratio,
        upper_ratio,
    })
}

/// Order-statistic interval for the median from the normal approximation
/// to Binomial(n, 1/2).
fn median_interval(v: &[f64]) -> (f64, f64) {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let half = 1.96 * n.sqrt() / 2.0;
    let lo = ((n / 2.0 - half).floor().max(0.0)) as usize;
    let hi = ((n / 2.0 + half).ceil() as usize).min(s.len() - 1);
    (s[lo], s[hi])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_chain::AlternatingMoves;

    #[test]
    fn grid_is_geometric() {
        let g = height_grid(4096);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 4096);
        assert!(g.contains(&64) && g.contains(&1024));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn alternating_control_has_slope_one() {
        let cfg = ScalingConfig::new(1024, 3, 0);
        let r = fractal_dimension_with(&cfg, |_| AlternatingMoves::new()).unwrap();
        // one (+) then one (−) per strip: n_t = 2 (t - 1)
        for row in &r.n_t {
            for (g, &n) in row.iter().enumerate() {
                assert_eq!(n, 2 * (r.t_grid[g] - 1));
            }
        }
        assert!((r.median_slope - 1.0).abs() < 0.01, "{}", r.median_slope);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = (1..10).map(|i| (i as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 0.3).collect();
        assert!((ls_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_chain_is_reproducible() {
        let cfg = ScalingConfig::new(128, 4, 9);
        let a = fractal_dimension(&cfg).unwrap();
        let b = fractal_dimension(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_t.len(), 4);
        assert!(a
            .lower_ratio
            .iter()
            .all(|r| r.min > 0.0 && r.max.is_finite()));
    }

    #[test]
    fn rejects_bad_window() {
        assert!(fractal_dimension(&ScalingConfig::new(32, 2, 0)).is_err());
    }
}
