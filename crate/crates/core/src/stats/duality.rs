//! Height against the half-harmonic clock `H_n = sum_{i < n} 1 / (2 M_i)`.
//!
//! A strip from boundary `m` takes `m + m'` moves at boundaries close to
//! `m`, so it adds about 1 to `H`. The ratio `t_n / H_n` with
//! `t_n = max{t : n_t <= n}` should therefore settle near 1.

use rayon::prelude::*;
use serde::Serialize;

use super::median;
use crate::boundary_chain::{
    BoundaryTrajectory, BoundaryWalker, MoveSource, RandomMoves, StripTracker,
};
use crate::error::{Result, UictError};
use crate::rng::StreamSeed;

pub const MIN_STEPS: usize = 1000;

/// `ratio[n - 1] = t_n / H_n` for `n = 1 ..= traj.len() - 1`.
pub fn duality_ratio(traj: &BoundaryTrajectory) -> Result<Vec<f64>> {
    let steps = traj.moves.len();
    if steps < MIN_STEPS {
        return Err(UictError::InvalidArgument(format!(
            "duality ratio needs at least {MIN_STEPS} steps, got {steps}"
        )));
    }
    let mut tracker = StripTracker::new(traj.m0);
    let mut h = 0.0;
    let mut out = Vec::with_capacity(steps);
    for (i, mv) in traj.moves.iter().enumerate() {
        h += 0.5 / traj.values[i] as f64;
        tracker.observe(i as u64 + 1, traj.values[i + 1], mv)?;
        out.push(tracker.last_stop().t as f64 / h);
    }
    Ok(out)
}

/// Streams the chain and records the ratio at each of the increasing
/// `checkpoints`.
pub fn duality_ratio_at<S: MoveSource>(
    m0: u64,
    source: S,
    checkpoints: &[u64],
) -> Result<Vec<f64>> {
    let mut walker = BoundaryWalker::new(m0, source)?;
    let mut tracker = StripTracker::new(m0);
    let mut h = 0.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        while walker.step_count() < c {
            h += 0.5 / walker.boundary() as f64;
            let mv = walker.advance()?;
            tracker.observe(walker.step_count(), walker.boundary(), mv)?;
        }
        out.push(tracker.last_stop().t as f64 / h);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub m0: u64,
    pub n: u64,
    pub runs: usize,
    pub seed: u64,
    /// Dyadic checkpoints `2^10, 2^11, ...` followed by `n`.
    pub checkpoints: Vec<u64>,
    /// `ratios[r][c]`: run `r` at checkpoint `c`.
    pub ratios: Vec<Vec<f64>>,
    pub band: (f64, f64),
    /// Share of runs whose ratio at `n` lies inside `band`.
    pub fraction_in_band: f64,
    /// Median over runs of `|ratio(2^k) - ratio(2^(k+1))|` for consecutive
    /// dyadic checkpoints.
    pub dyadic_gaps: Vec<f64>,
}

pub fn duality_suite(
    m0: u64,
    n: u64,
    runs: usize,
    seed: u64,
    band: (f64, f64),
) -> Result<DualityReport> {
    let mut checkpoints: Vec<u64> = (10..64).map(|k| 1u64 << k).take_while(|&c| c < n).collect();
    checkpoints.push(n);
    let streams = StreamSeed::new(seed).domain("duality");
    let ratios: Vec<Vec<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|i| duality_ratio_at(m0, RandomMoves::new(streams.stream(i)), &checkpoints))
        .collect::<Result<_>>()?;
    let inside = ratios
        .iter()
        .filter(|r| {
            let v = *r.last().unwrap();
            band.0 <= v && v <= band.1
        })
        .count();
    let dyadic = checkpoints.len() - usize::from(!n.is_power_of_two());
    let dyadic_gaps = (0..dyadic.saturating_sub(1))
        .map(|c| {
            let gaps: Vec<f64> = ratios.iter().map(|r| (r[c] - r[c + 1]).abs()).collect();
            median(&gaps)
        })
        .collect();
    Ok(DualityReport {
        m0,
        n,
        runs,
        seed,
        checkpoints,
        fraction_in_band: inside as f64 / runs.max(1) as f64,
        ratios,
        band,
        dyadic_gaps,
    })
}
