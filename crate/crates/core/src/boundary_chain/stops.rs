//! Strip completion times `n_t`.
//!
//! A strip started at `n_{t-1}` with boundary `m` is finished by the `m`-th
//! (−)-move after `n_{t-1}`. Equivalently `n_t` is the first `s` with
//! `s - n_{t-1} = M_s + M_{n_{t-1}}`. The tracker evaluates both conditions
//! on every move and fails loudly if they ever disagree, and it checks that
//! no boundary inside a strip exceeds the strip's length.

use serde::Serialize;

use super::{BoundaryTrajectory, BoundaryWalker, Move, MoveSource};
use crate::error::{Result, UictError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StripStop {
    /// Height index `t` (the first stop is `t = 1` at time 0).
    pub t: usize,
    /// Growth time `n_t`.
    pub time: u64,
    /// Boundary length `M_{n_t}`.
    pub boundary: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StripStops {
    pub times: Vec<u64>,
    pub boundary_at_stop: Vec<u64>,
}

impl StripStops {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, stop: StripStop) {
        self.times.push(stop.time);
        self.boundary_at_stop.push(stop.boundary);
    }

    /// `n_t` for 1-based `t`.
    pub fn time(&self, t: usize) -> Option<u64> {
        t.checked_sub(1).and_then(|i| self.times.get(i).copied())
    }
}

#[derive(Debug, Clone)]
pub struct StripTracker {
    current: StripStop,
    minus_count: u64,
    max_boundary: u64,
}

impl StripTracker {
    pub fn new(m0: u64) -> Self {
        Self {
            current: StripStop {
                t: 1,
                time: 0,
                boundary: m0,
            },
            minus_count: 0,
            max_boundary: 0,
        }
    }

    pub fn last_stop(&self) -> StripStop {
        self.current
    }

    /// Number of (−)-moves seen in the strip under construction.
    pub fn minus_count(&self) -> u64 {
        self.minus_count
    }

    /// Feeds move `mv`, which took the chain to `boundary` at time `step`.
    #[inline]
    pub fn observe(&mut self, step: u64, boundary: u64, mv: Move) -> Result<Option<StripStop>> {
        let start = self.current;
        if mv == Move::Minus {
            self.minus_count += 1;
        }
        self.max_boundary = self.max_boundary.max(boundary);

        let by_count = self.minus_count == start.boundary;
        let by_line = step - start.time == boundary + start.boundary;
        if by_count != by_line {
            return Err(UictError::StopMismatch { step });
        }
        if !by_count {
            return Ok(None);
        }

        let length = step - start.time;
        if self.max_boundary > length {
            return Err(UictError::StripBound {
                strip: start.t,
                max: self.max_boundary,
                length,
            });
        }
        self.current = StripStop {
            t: start.t + 1,
            time: step,
            boundary,
        };
        self.minus_count = 0;
        self.max_boundary = 0;
        Ok(Some(self.current))
    }
}

/// Stops `n_1 .. n_{t_max}` of a stored trajectory.
pub fn strip_stops(traj: &BoundaryTrajectory, t_max: usize) -> Result<StripStops> {
    let mut stops = StripStops::default();
    if t_max == 0 {
        return Ok(stops);
    }
    let mut tracker = StripTracker::new(traj.m0);
    stops.push(tracker.last_stop());
    for (i, mv) in traj.moves.iter().enumerate() {
        if stops.len() == t_max {
            break;
        }
        let step = i as u64 + 1;
        if let Some(stop) = tracker.observe(step, traj.values[i + 1], mv)? {
            stops.push(stop);
        }
    }
    if stops.len() < t_max {
        return Err(UictError::InsufficientLength {
            found: stops.len(),
            wanted: t_max,
        });
    }
    Ok(stops)
}

/// Runs the chain from `m0` until stop `t_max` without storing the path.
///
/// `on_stop` sees every stop including `n_1 = 0`. Returns the walker so the
/// caller can read the final time and boundary.
pub fn run_strips<S: MoveSource>(
    m0: u64,
    t_max: usize,
    source: S,
    mut on_stop: impl FnMut(&StripStop),
) -> Result<BoundaryWalker<S>> {
    let mut walker = BoundaryWalker::new(m0, source)?;
    let mut tracker = StripTracker::new(m0);
    on_stop(&tracker.last_stop());
    let mut t = 1;
    while t < t_max {
        let mv = walker.advance()?;
        if let Some(stop) = tracker.observe(walker.step_count(), walker.boundary(), mv)? {
            on_stop(&stop);
            t = stop.t;
        }
    }
    Ok(walker)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_chain::{sample_trajectory, AlternatingMoves, MoveSequence, RandomMoves};
    use crate::rng::StreamSeed;

    fn traj(m0: u64, moves: &str) -> BoundaryTrajectory {
        BoundaryTrajectory::from_moves(m0, moves.parse::<MoveSequence>().unwrap()).unwrap()
    }

    #[test]
    fn staircase_strip() {
        let s = strip_stops(&traj(3, "+++-+--"), 2).unwrap();
        assert_eq!(s.times, vec![0, 7]);
        assert_eq!(s.boundary_at_stop, vec![3, 4]);
    }

    #[test]
    fn minimal_strip() {
        let s = strip_stops(&traj(1, "+-"), 2).unwrap();
        assert_eq!(s.times, vec![0, 2]);
        assert_eq!(s.boundary_at_stop, vec![1, 1]);
        assert_eq!(2, s.boundary_at_stop[0] + s.boundary_at_stop[1]);
    }

    #[test]
    fn insufficient_length() {
        let e = strip_stops(&traj(3, "+++-+-"), 2).unwrap_err();
        assert_eq!(
            e,
            UictError::InsufficientLength {
                found: 1,
                wanted: 2
            }
        );
    }

    #[test]
    fn telescoping_identity_on_random_paths() {
        for seed in 0..50 {
            let t = sample_trajectory(1 + seed % 5, 5_000, seed).unwrap();
            let Ok(s) = strip_stops(&t, 20) else { continue };
            for w in 0..s.len() - 1 {
                let len = s.times[w + 1] - s.times[w];
                assert_eq!(len, s.boundary_at_stop[w] + s.boundary_at_stop[w + 1]);
                // the boundary never exceeds the strip length inside a strip
                let lo = s.times[w] as usize + 1;
                let hi = s.times[w + 1] as usize;
                assert!(t.values[lo..=hi].iter().all(|&m| m <= len));
                // the strip contains exactly M_{n_t} (−)-moves
                let minus = t.moves.0[s.times[w] as usize..hi]
                    .iter()
                    .filter(|m| **m == Move::Minus)
                    .count() as u64;
                assert_eq!(minus, s.boundary_at_stop[w]);
            }
        }
    }

    #[test]
    fn streaming_matches_stored() {
        let seed = StreamSeed::new(11).domain("trajectory");
        let t = sample_trajectory(2, 20_000, 11).unwrap();
        let stored = strip_stops(&t, 30).unwrap();
        let mut streamed = StripStops::default();
        run_strips(2, 30, RandomMoves::new(seed.stream(0)), |s| {
            streamed.push(*s)
        })
        .unwrap();
        assert_eq!(stored, streamed);
    }

    #[test]
    fn alternating_control_chain() {
        let mut times = Vec::new();
        run_strips(1, 10, AlternatingMoves::new(), |s| times.push(s.time)).unwrap();
        assert_eq!(times, (0..10).map(|t| 2 * t).collect::<Vec<u64>>());
    }
}
