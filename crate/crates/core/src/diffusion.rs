//! Reference simulations of the two scaling limits of the boundary chain.
//!
//! In growth time the rescaled boundary `M_[un] / sqrt(n)` solves
//! `dM = du / M + dB`; sampled at strip completions it becomes
//! `M_{n_[st]} / t` and solves `dL = 2 ds + sqrt(2L) dB`. The two are
//! related by the random clock `T_u = int_0^u ds / (2 M_s)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_chain::{run_strips, BoundaryWalker, RandomMoves};
use crate::error::{Result, UictError};
use crate::rng::{StreamRng, StreamSeed};

/// The two limiting diffusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeSpec {
    /// `b(x) = 1/x`, `sigma(x) = 1`.
    Growth,
    /// `b(x) = 2`, `sigma(x) = sqrt(2x)`.
    Slice,
}

impl SdeSpec {
    pub fn name(self) -> &'static str {
        match self {
            SdeSpec::Growth => "growth",
            SdeSpec::Slice => "slice",
        }
    }

    #[inline]
    pub fn drift(self, x: f64) -> f64 {
        match self {
            SdeSpec::Growth => 1.0 / x,
            SdeSpec::Slice => 2.0,
        }
    }

    #[inline]
    pub fn noise(self, x: f64) -> f64 {
        match self {
            SdeSpec::Growth => 1.0,
            SdeSpec::Slice => (2.0 * x).sqrt(),
        }
    }
}

pub const DEFAULT_FLOOR: f64 = 1e-6;
pub const DEFAULT_DT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerConfig {
    pub dt: f64,
    pub horizon: f64,
    pub floor: f64,
    /// Multiplies the noise term; 0 integrates the drift ODE.
    pub noise_scale: f64,
    /// Caps the drift increment at `sqrt(dt)` in magnitude.
    pub tamed: bool,
}

impl EulerConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            floor: DEFAULT_FLOOR,
            noise_scale: 1.0,
            tamed: true,
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn check(&self, x0: f64) -> Result<()> {
        if !(x0 >= 0.0) {
            return Err(UictError::InvalidArgument(format!("x0 = {x0} is negative")));
        }
        if !(self.dt > 0.0) || self.horizon < self.dt {
            return Err(UictError::InvalidArgument(format!(
                "need dt > 0 and horizon >= dt (dt = {}, horizon = {})",
                self.dt, self.horizon
            )));
        }
        Ok(())
    }
}

/// Values on the grid `0, dt, 2 dt, ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdePath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SdePath {
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Linear interpolation at time `u` inside the grid.
    pub fn at(&self, u: f64) -> f64 {
        let pos = u / self.dt;
        let i = (pos.floor() as usize).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return self.values[i];
        }
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// One Euler-Maruyama stepper; kept separate so marginal samplers can run
/// without storing the path.
#[derive(Debug, Clone, Copy)]
struct Stepper {
    spec: SdeSpec,
    dt: f64,
    sqrt_dt: f64,
    floor: f64,
    noise_scale: f64,
    tamed: bool,
}

impl Stepper {
    fn new(spec: SdeSpec, cfg: &EulerConfig) -> Self {
        Self {
            spec,
            dt: cfg.dt,
            sqrt_dt: cfg.dt.sqrt(),
            floor: cfg.floor,
            noise_scale: cfg.noise_scale,
            tamed: cfg.tamed,
        }
    }

    #[inline]
    fn step<R: Rng>(&self, x: f64, rng: &mut R) -> f64 {
        let mut drift = self.spec.drift(x) * self.dt;
        if self.tamed {
            drift = drift.clamp(-self.sqrt_dt, self.sqrt_dt);
        }
        let mut next = x + drift;
        if self.noise_scale != 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            next += self.noise_scale * self.spec.noise(x) * self.sqrt_dt * z;
        }
        next.max(self.floor)
    }
}

pub fn euler_path(
    spec: SdeSpec,
    x0: f64,
    cfg: &EulerConfig,
    rng: &mut StreamRng,
) -> Result<SdePath> {
    cfg.check(x0)?;
    let stepper = Stepper::new(spec, cfg);
    let n = cfg.steps();
    let mut values = Vec::with_capacity(n + 1);
    let mut x = x0.max(cfg.floor);
    values.push(x);
    for _ in 0..n {
        x = stepper.step(x, rng);
        values.push(x);
    }
    Ok(SdePath { dt: cfg.dt, values })
}

/// Terminal values `X_horizon` of `samples` independent paths; path `i`
/// uses stream `i` of `seed`.
pub fn euler_marginal(
    spec: SdeSpec,
    x0: f64,
    cfg: &EulerConfig,
    samples: usize,
    seed: StreamSeed,
) -> Result<Vec<f64>> {
    Ok(euler_marginals_at(spec, x0, cfg, &[cfg.horizon], samples, seed)?.remove(0))
}

/// Values at each of `times` (grid points at or before the horizon) of
/// `samples` independent paths; `out[p][i]` is path `i` at `times[p]`.
pub fn euler_marginals_at(
    spec: SdeSpec,
    x0: f64,
    cfg: &EulerConfig,
    times: &[f64],
    samples: usize,
    seed: StreamSeed,
) -> Result<Vec<Vec<f64>>> {
    cfg.check(x0)?;
    let stepper = Stepper::new(spec, cfg);
    let marks: Vec<usize> = times
        .iter()
        .map(|&u| (u / cfg.dt).round() as usize)
        .collect();
    if marks.iter().any(|&k| k > cfg.steps()) {
        return Err(UictError::InvalidArgument(
            "sampling time beyond the horizon".into(),
        ));
    }
    let last = marks.iter().copied().max().unwrap_or(0);
    let start = x0.max(cfg.floor);
    let per_path: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i);
            let mut out = vec![0.0; marks.len()];
            let mut x = start;
            for k in 0..=last {
                if k > 0 {
                    x = stepper.step(x, &mut rng);
                }
                for (slot, &mk) in out.iter_mut().zip(&marks) {
                    if mk == k {
                        *slot = x;
                    }
                }
            }
            out
        })
        .collect();
    Ok((0..marks.len())
        .map(|p| per_path.iter().map(|v| v[p]).collect())
        .collect())
}

/// Running clock `tau_i = sum_{k < i} g(x_k) dt` (left endpoints).
pub fn clock(path: &SdePath, g: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let mut tau = Vec::with_capacity(path.values.len());
    let mut acc = 0.0;
    tau.push(acc);
    for &x in &path.values[..path.values.len() - 1] {
        let r = g(x);
        if !(r > 0.0 && r.is_finite()) {
            return Err(UictError::InvalidArgument(format!(
                "clock rate {r} at x = {x}"
            )));
        }
        acc += r * path.dt;
        tau.push(acc);
    }
    Ok(tau)
}

/// `Y_s = X_{tau^-1(s)}` on the grid `0, ds, ..., s_horizon`, inverting the
/// clock by linear interpolation.
pub fn time_change(
    path: &SdePath,
    g: impl Fn(f64) -> f64,
    ds: f64,
    s_horizon: f64,
) -> Result<SdePath> {
    if !(ds > 0.0) || s_horizon < 0.0 {
        return Err(UictError::InvalidArgument(
            "need ds > 0 and s_horizon >= 0".into(),
        ));
    }
    let tau = clock(path, g)?;
    let reached = *tau.last().unwrap();
    let n_out = (s_horizon / ds).round() as usize;
    // a tiny slack absorbs rounding in the accumulated clock
    if reached + 1e-12 * s_horizon.max(1.0) < n_out as f64 * ds {
        return Err(UictError::ClockTruncated {
            reached,
            requested: s_horizon,
        });
    }
    let mut values = Vec::with_capacity(n_out + 1);
    let mut i = 0;
    for j in 0..=n_out {
        let s = (j as f64 * ds).min(reached);
        while i + 1 < tau.len() - 1 && tau[i + 1] <= s {
            i += 1;
        }
        values.push(invert_at(&tau, &path.values, i, s));
    }
    Ok(SdePath { dt: ds, values })
}

#[inline]
fn invert_at(tau: &[f64], x: &[f64], i: usize, s: f64) -> f64 {
    if i + 1 >= tau.len() {
        return x[i];
    }
    let frac = ((s - tau[i]) / (tau[i + 1] - tau[i])).clamp(0.0, 1.0);
    x[i] + frac * (x[i + 1] - x[i])
}

/// Outcome of time-changing many paths at a few clock values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeChangedMarginals {
    pub s_points: Vec<f64>,
    /// `values[p]` holds `Y_{s_points[p]}` over all non-truncated paths.
    pub values: Vec<Vec<f64>>,
    /// Paths whose clock did not reach the last point within `max_horizon`.
    pub truncated: usize,
}

/// Runs `spec` from `x0` until the clock `int g(X) du` passes the largest
/// of `s_points` (or `max_horizon` is hit), then reads `Y_s` at each point.
pub fn time_changed_marginals(
    spec: SdeSpec,
    x0: f64,
    cfg: &EulerConfig,
    g: impl Fn(f64) -> f64 + Sync,
    s_points: &[f64],
    samples: usize,
    seed: StreamSeed,
) -> Result<TimeChangedMarginals> {
    cfg.check(x0)?;
    let s_max = s_points.iter().copied().fold(0.0, f64::max);
    let stepper = Stepper::new(spec, cfg);
    let max_steps = cfg.steps();
    let per_path: Vec<Option<Vec<f64>>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i);
            let mut xs = vec![x0.max(cfg.floor)];
            let mut tau = vec![0.0];
            while *tau.last().unwrap() < s_max {
                if xs.len() > max_steps {
                    return None;
                }
                let x = *xs.last().unwrap();
                tau.push(tau.last().unwrap() + g(x) * cfg.dt);
                xs.push(stepper.step(x, &mut rng));
            }
            let out = s_points
                .iter()
                .map(|&s| {
                    let i = tau.partition_point(|&t| t <= s).saturating_sub(1);
                    invert_at(&tau, &xs, i, s)
                })
                .collect();
            Some(out)
        })
        .collect();
    let mut values = vec![Vec::with_capacity(samples); s_points.len()];
    let mut truncated = 0;
    for p in per_path {
        match p {
            Some(v) => {
                for (col, y) in values.iter_mut().zip(v) {
                    col.push(y);
                }
            }
            None => truncated += 1,
        }
    }
    Ok(TimeChangedMarginals {
        s_points: s_points.to_vec(),
        values,
        truncated,
    })
}

fn chain_rng(seed: StreamSeed, i: u64) -> RandomMoves<StreamRng> {
    RandomMoves::new(seed.stream(i))
}

/// Samples of `M_[un] / sqrt(n)` started from `m0`.
pub fn rescaled_growth_marginal(
    n: u64,
    u: f64,
    m0: u64,
    samples: usize,
    seed: StreamSeed,
) -> Result<Vec<f64>> {
    if n == 0 || !(u >= 0.0) {
        return Err(UictError::InvalidArgument("need n >= 1 and u >= 0".into()));
    }
    let steps = (u * n as f64).floor() as u64;
    let scale = (n as f64).sqrt();
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut w = BoundaryWalker::new(m0, chain_rng(seed, i))?;
            for _ in 0..steps {
                w.advance()?;
            }
            Ok(w.boundary() as f64 / scale)
        })
        .collect()
}

/// Samples of `M_{n_[st]} / t` started from `m0`.
pub fn rescaled_slice_marginal(
    t: u64,
    s: f64,
    m0: u64,
    samples: usize,
    seed: StreamSeed,
) -> Result<Vec<f64>> {
    if t == 0 || !(s >= 0.0) {
        return Err(UictError::InvalidArgument("need t >= 1 and s >= 0".into()));
    }
    let target = ((s * t as f64).floor() as usize).max(1);
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let w = run_strips(m0, target, chain_rng(seed, i), |_| {})?;
            Ok(w.boundary() as f64 / t as f64)
        })
        .collect()
}

/// CDF of `|N(0, I_3)|`, the growth diffusion at time 1 from 0.
pub fn bessel3_cdf(r: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    if r <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(3.0).unwrap().cdf(r * r)
}

/// CDF of Gamma(2, 1), the slice diffusion at time 1 from 0.
pub fn gamma2_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    1.0 - (-x).exp() * (1.0 + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(i: u64) -> StreamRng {
        StreamSeed::new(5).domain("test").stream(i)
    }

    #[test]
    fn drift_only_growth_solves_ode() {
        let mut cfg = EulerConfig::new(1e-4, 4.0);
        cfg.noise_scale = 0.0;
        let p = euler_path(SdeSpec::Growth, 1.0, &cfg, &mut rng(0)).unwrap();
        assert!((p.last() - 3.0).abs() < 1e-3);
        for (i, &x) in p.values.iter().enumerate().step_by(5000) {
            let u = i as f64 * cfg.dt;
            assert!((x - (1.0 + 2.0 * u).sqrt()).abs() < 1e-3);
        }
    }

    #[test]
    fn drift_only_slice_is_linear() {
        let mut cfg = EulerConfig::new(1e-3, 2.0);
        cfg.noise_scale = 0.0;
        cfg.floor = 0.0;
        let p = euler_path(SdeSpec::Slice, 0.0, &cfg, &mut rng(0)).unwrap();
        for (i, &x) in p.values.iter().enumerate() {
            assert!((x - 2.0 * i as f64 * 1e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = EulerConfig::new(1e-3, 1.0);
        assert!(euler_path(SdeSpec::Growth, -1.0, &cfg, &mut rng(0)).is_err());
        assert!(euler_path(
            SdeSpec::Growth,
            1.0,
            &EulerConfig::new(0.0, 1.0),
            &mut rng(0)
        )
        .is_err());
    }

    #[test]
    fn paths_reproducible_and_above_floor() {
        let cfg = EulerConfig::new(1e-3, 1.0);
        let a = euler_path(SdeSpec::Slice, DEFAULT_FLOOR, &cfg, &mut rng(3)).unwrap();
        let b = euler_path(SdeSpec::Slice, DEFAULT_FLOOR, &cfg, &mut rng(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|&x| x >= DEFAULT_FLOOR));
    }

    fn sample_path() -> SdePath {
        euler_path(
            SdeSpec::Growth,
            1.0,
            &EulerConfig::new(1e-2, 4.0),
            &mut rng(1),
        )
        .unwrap()
    }

    #[test]
    fn unit_clock_is_identity() {
        let p = sample_path();
        let y = time_change(&p, |_| 1.0, p.dt, p.horizon()).unwrap();
        assert_eq!(y.values.len(), p.values.len());
        for (a, b) in y.values.iter().zip(&p.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_clock_rescales_time() {
        let p = sample_path();
        let y = time_change(&p, |_| 2.0, 0.01, 8.0).unwrap();
        for j in 0..=800 {
            let s = j as f64 * 0.01;
            assert!((y.values[j] - p.at(s / 2.0)).abs() < 1e-9, "s = {s}");
        }
        let err = time_change(&p, |_| 2.0, 0.01, 9.0).unwrap_err();
        assert!(matches!(err, UictError::ClockTruncated { .. }));
    }

    #[test]
    fn clock_is_nondecreasing() {
        let p = sample_path();
        let tau = clock(&p, |x| 1.0 / (2.0 * x)).unwrap();
        assert_eq!(tau[0], 0.0);
        assert!(tau.windows(2).all(|w| w[0] <= w[1]));
        assert!(clock(&p, |_| 0.0).is_err());
    }

    #[test]
    fn trivial_rescaled_marginals() {
        let seed = StreamSeed::new(1);
        let v = rescaled_growth_marginal(100, 0.0, 4, 10, seed).unwrap();
        assert!(v.iter().all(|&x| x == 0.4));
        let v = rescaled_slice_marginal(10, 0.1, 1, 10, seed).unwrap();
        assert!(v.iter().all(|&x| x == 0.1));
    }

    #[test]
    fn oracle_cdfs() {
        assert!((bessel3_cdf(1.0) - 0.198_748_043).abs() < 1e-8);
        assert!((gamma2_cdf(2.0) - (1.0 - 3.0 * (-2.0f64).exp())).abs() < 1e-15);
    }
}
