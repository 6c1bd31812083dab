//! The boundary-length chain of the growth process.
//!
//! At every step one triangle is glued to the marked boundary edge. A
//! (+)-move introduces a new vertex and lengthens the boundary by one, a
//! (−)-move joins two existing boundary vertices and shortens it by one.
//! From a boundary of length `m` the (±)-move is chosen with probability
//! `(m ± 1) / (2m)`, so a boundary of length 1 always grows.

mod kernel;
mod stops;

pub(crate) use kernel::row_by_ratio;
pub use kernel::{
    discrete_generator_coeffs, generator_coeffs_exact, strip_kernel_bruteforce, strip_kernel_exact,
    strip_kernel_rational, strip_kernel_row, BruteforceKernel, GeneratorCoeffs,
    GeneratorCoeffsExact, KernelRow,
};
pub use stops::{run_strips, strip_stops, StripStop, StripStops, StripTracker};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UictError};
use crate::exact::{ratio, Rational};
use crate::rng::{unit, StreamSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Plus,
    Minus,
}

impl Move {
    pub fn sign(self) -> i64 {
        match self {
            Move::Plus => 1,
            Move::Minus => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Move::Plus => '+',
            Move::Minus => '-',
        }
    }

    /// Boundary length after applying this move to a boundary of length `m`.
    pub fn apply(self, m: u64) -> Option<u64> {
        match self {
            Move::Plus => Some(m + 1),
            Move::Minus if m > 1 => Some(m - 1),
            Move::Minus => None,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Ordered record of moves, written compactly as e.g. `"+++-+--"`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MoveSequence(pub Vec<Move>);

impl MoveSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Move> + '_ {
        self.0.iter().copied()
    }

    /// Boundary lengths visited from `m0`; fails on the first (−)-move at length 1.
    pub fn boundary_lengths(&self, m0: u64) -> Result<Vec<u64>> {
        if m0 == 0 {
            return Err(UictError::ZeroBoundary(0));
        }
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut m = m0;
        out.push(m);
        for (index, mv) in self.iter().enumerate() {
            m = mv.apply(m).ok_or(UictError::IllegalMove { index })?;
            out.push(m);
        }
        Ok(out)
    }

    /// Exact probability of this move sequence under the growth chain from `m0`.
    pub fn probability_exact(&self, m0: u64) -> Result<Rational> {
        let lengths = self.boundary_lengths(m0)?;
        let mut p = ratio(1, 1);
        for (mv, &m) in self.iter().zip(&lengths) {
            p *= step_prob_exact(m, mv)?;
        }
        Ok(p)
    }
}

impl fmt::Display for MoveSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for mv in self.iter() {
            write!(f, "{mv}")?;
        }
        Ok(())
    }
}

impl FromStr for MoveSequence {
    type Err = UictError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '+' => Ok(Move::Plus),
                '-' | '−' => Ok(Move::Minus),
                other => Err(UictError::InvalidArgument(format!(
                    "unknown move symbol {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(MoveSequence)
    }
}

impl From<Vec<Move>> for MoveSequence {
    fn from(v: Vec<Move>) -> Self {
        MoveSequence(v)
    }
}

/// One-step transition probability `(m + sign) / (2m)`.
pub fn step_prob(m: u64, mv: Move) -> Result<f64> {
    if m == 0 {
        return Err(UictError::ZeroBoundary(m));
    }
    let m = m as f64;
    Ok((m + mv.sign() as f64) / (2.0 * m))
}

pub fn step_prob_exact(m: u64, mv: Move) -> Result<Rational> {
    if m == 0 {
        return Err(UictError::ZeroBoundary(m));
    }
    Ok(ratio(m as i64 + mv.sign(), 2 * m as i64))
}

/// Anything that can decide the next move given the current boundary length.
///
/// The random chain is the only production implementation; deterministic
/// sources exist for control experiments.
pub trait MoveSource {
    fn next_move(&mut self, boundary: u64) -> Move;
}

/// The growth chain driven by a random generator.
#[derive(Debug, Clone)]
pub struct RandomMoves<R> {
    rng: R,
}

impl<R: Rng> RandomMoves<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> MoveSource for RandomMoves<R> {
    #[inline]
    fn next_move(&mut self, m: u64) -> Move {
        // P(+) = (m + 1) / 2m
        if unit(&mut self.rng) * ((2 * m) as f64) < (m + 1) as f64 {
            Move::Plus
        } else {
            Move::Minus
        }
    }
}

/// Deterministic source alternating (+), (−), (+), ... regardless of boundary.
#[derive(Debug, Clone, Default)]
pub struct AlternatingMoves {
    next_plus: bool,
}

impl AlternatingMoves {
    pub fn new() -> Self {
        Self { next_plus: true }
    }
}

impl MoveSource for AlternatingMoves {
    fn next_move(&mut self, _m: u64) -> Move {
        let mv = if self.next_plus {
            Move::Plus
        } else {
            Move::Minus
        };
        self.next_plus = !self.next_plus;
        mv
    }
}

/// Streaming walker over the boundary chain.
#[derive(Debug, Clone)]
pub struct BoundaryWalker<S> {
    boundary: u64,
    step: u64,
    source: S,
}

impl<S: MoveSource> BoundaryWalker<S> {
    pub fn new(m0: u64, source: S) -> Result<Self> {
        if m0 == 0 {
            return Err(UictError::ZeroBoundary(m0));
        }
        Ok(Self {
            boundary: m0,
            step: 0,
            source,
        })
    }

    pub fn boundary(&self) -> u64 {
        self.boundary
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn into_source(self) -> S {
        self.source
    }

    /// Advances one move; errors if the source asks for a (−)-move at length 1.
    #[inline]
    pub fn advance(&mut self) -> Result<Move> {
        let mv = self.source.next_move(self.boundary);
        self.boundary = mv.apply(self.boundary).ok_or(UictError::IllegalMove {
            index: self.step as usize,
        })?;
        self.step += 1;
        Ok(mv)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryTrajectory {
    pub m0: u64,
    pub values: Vec<u64>,
    pub moves: MoveSequence,
    pub seed: u64,
}

impl BoundaryTrajectory {
    pub fn from_moves(m0: u64, moves: MoveSequence) -> Result<Self> {
        let values = moves.boundary_lengths(m0)?;
        Ok(Self {
            m0,
            values,
            moves,
            seed: 0,
        })
    }

    pub fn generate<S: MoveSource>(m0: u64, n_steps: usize, source: S, seed: u64) -> Result<Self> {
        let mut walker = BoundaryWalker::new(m0, source)?;
        let mut values = Vec::with_capacity(n_steps + 1);
        let mut moves = Vec::with_capacity(n_steps);
        values.push(m0);
        for _ in 0..n_steps {
            let mv = walker.advance()?;
            moves.push(mv);
            values.push(walker.boundary());
        }
        Ok(Self {
            m0,
            values,
            moves: MoveSequence(moves),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Samples `n_steps` moves of the growth chain from `m0` on stream 0 of `seed`.
pub fn sample_trajectory(m0: u64, n_steps: usize, seed: u64) -> Result<BoundaryTrajectory> {
    let rng = StreamSeed::new(seed).domain("trajectory").stream(0);
    BoundaryTrajectory::generate(m0, n_steps, RandomMoves::new(rng), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_probabilities() {
        assert!((step_prob(3, Move::Plus).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(step_prob(1, Move::Minus).unwrap(), 0.0);
        assert_eq!(step_prob(5, Move::Minus).unwrap(), 0.4);
        assert_eq!(step_prob_exact(3, Move::Plus).unwrap(), ratio(2, 3));
        assert!(matches!(
            step_prob(0, Move::Plus),
            Err(UictError::ZeroBoundary(0))
        ));
    }

    #[test]
    fn step_probabilities_sum_to_one() {
        for m in 1..2000u64 {
            let s =
                step_prob_exact(m, Move::Plus).unwrap() + step_prob_exact(m, Move::Minus).unwrap();
            assert_eq!(s, ratio(1, 1));
            let f = step_prob(m, Move::Plus).unwrap() + step_prob(m, Move::Minus).unwrap();
            assert!((f - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn trivial_trajectories() {
        let t = sample_trajectory(1, 0, 99).unwrap();
        assert_eq!(t.values, vec![1]);
        for seed in 0..20 {
            let t = sample_trajectory(1, 1, seed).unwrap();
            assert_eq!(t.values, vec![1, 2]);
        }
        assert!(sample_trajectory(0, 5, 1).is_err());
    }

    #[test]
    fn parse_and_display() {
        let s: MoveSequence = "+++-+--".parse().unwrap();
        assert_eq!(s.len(), 7);
        assert_eq!(s.to_string(), "+++-+--");
        assert!("+x".parse::<MoveSequence>().is_err());
    }

    #[test]
    fn illegal_minus_rejected() {
        let s: MoveSequence = "+--".parse().unwrap();
        assert_eq!(
            s.boundary_lengths(1),
            Err(UictError::IllegalMove { index: 2 })
        );
    }

    #[test]
    fn one_step_mean_matches_inverse_boundary() {
        // E[xi | M = 4] = 1/4; binomial standard error over 10^6 draws
        let n = 1_000_000u64;
        let mut src = RandomMoves::new(StreamSeed::new(2024).stream(0));
        let plus = (0..n).filter(|_| src.next_move(4) == Move::Plus).count() as f64;
        let mean = (2.0 * plus - n as f64) / n as f64;
        let p = 5.0 / 8.0;
        let sigma = 2.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((mean - 0.25).abs() < 3.0 * sigma, "mean {mean}");
    }

    proptest! {
        #[test]
        fn sampled_trajectories_are_valid(m0 in 1u64..50, n in 0usize..400, seed in any::<u64>()) {
            let t = sample_trajectory(m0, n, seed).unwrap();
            prop_assert_eq!(t.values.len(), n + 1);
            prop_assert_eq!(t.values[0], m0);
            for (i, mv) in t.moves.iter().enumerate() {
                prop_assert!(t.values[i + 1] >= 1);
                prop_assert_eq!(t.values[i + 1] as i64 - t.values[i] as i64, mv.sign());
            }
            prop_assert_eq!(&t, &sample_trajectory(m0, n, seed).unwrap());
        }
    }
}
