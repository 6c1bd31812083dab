//! Causal triangulations and the defect-removal bijection.
//!
//! A causal strip between slices of sizes `m` and `m'` is fixed by the
//! number of down triangles hanging from each lower vertex (a composition
//! of `m'` into `m` parts, read in slice order), with the upper slice
//! ordered by concatenating those fans.
//!
//! A grown strip opening with `l` (−)-moves followed by a (+)-move is
//! rewritten to open with the (+)-move followed by `l` (−)-moves, which
//! leaves the path probability unchanged, and its lower slice is then
//! relabelled cyclically by `l`. The shift lines up the first triangle of
//! every strip along one chain; after it, `l` can be read back as the run
//! of trailing zeros of the down-degree sequence.

use serde::{Deserialize, Serialize};

use super::{validate_causal, AlmostCausalTriangulation, Triangle, Vertex, Violation};
use crate::boundary_chain::{Move, MoveSequence};
use crate::error::{Result, UictError};

use super::act::moves_from_triangulation;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CausalStrip {
    pub down_degrees: Vec<u64>,
    /// Cyclic relabelling applied to the lower slice by defect removal.
    pub shift: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Root {
    pub vertex: Vertex,
    /// Directed root edge, from the root vertex to its successor on slice 1.
    pub edge: (Vertex, Vertex),
}

impl Root {
    pub fn canonical(k1: u64) -> Self {
        let x = Vertex::new(1, 0);
        let y = Vertex::new(1, (1 % k1) as u32);
        Self {
            vertex: x,
            edge: (x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CausalTriangulation {
    pub m0: u64,
    pub height: usize,
    pub slice_sizes: Vec<u64>,
    pub strips: Vec<CausalStrip>,
    pub root: Root,
}

impl CausalTriangulation {
    /// Lists every triangle, strip by strip, walking each lower vertex's
    /// up triangle followed by its fan of down triangles.
    pub fn triangles(&self) -> Vec<Triangle> {
        let mut out = Vec::new();
        for (i, strip) in self.strips.iter().enumerate() {
            let lower = (i + 1) as u32;
            let m = self.slice_sizes[i] as u32;
            let m_up = self.slice_sizes[i + 1] as u32;
            let v = |j: u32| Vertex::new(lower, j % m);
            let u = |c: u32| Vertex::new(lower + 1, c % m_up);
            let mut c = 0u32;
            for j in 0..m {
                out.push(Triangle {
                    strip: lower,
                    vertices: [v(j + m - 1), v(j), u(c)],
                    horizontal: [true, false, false],
                });
                for _ in 0..strip.down_degrees[j as usize] {
                    out.push(Triangle {
                        strip: lower,
                        vertices: [v(j), u(c), u(c + 1)],
                        horizontal: [false, true, false],
                    });
                    c += 1;
                }
            }
        }
        out
    }

    /// Full consistency check; used on construction and on import.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let fail = |reason: String| Violation {
            triangle: None,
            reason,
        };
        if self.height != self.slice_sizes.len() || self.height == 0 {
            return Err(fail(format!(
                "height {} does not match {} slices",
                self.height,
                self.slice_sizes.len()
            )));
        }
        if self.slice_sizes[0] != self.m0 {
            return Err(fail("first slice size differs from m0".into()));
        }
        if self.strips.len() + 1 != self.height {
            return Err(fail(format!(
                "{} strips for height {}",
                self.strips.len(),
                self.height
            )));
        }
        if self.slice_sizes.contains(&0) {
            return Err(fail("empty slice".into()));
        }
        for (i, s) in self.strips.iter().enumerate() {
            if s.down_degrees.len() as u64 != self.slice_sizes[i] {
                return Err(fail(format!(
                    "strip {}: wrong number of down degrees",
                    i + 1
                )));
            }
            if s.down_degrees.iter().sum::<u64>() != self.slice_sizes[i + 1] {
                return Err(fail(format!(
                    "strip {}: down degrees do not sum to slice {}",
                    i + 1,
                    i + 2
                )));
            }
            if trailing_zeros(&s.down_degrees) != s.shift {
                return Err(fail(format!("strip {}: shift is not canonical", i + 1)));
            }
        }
        if self.root != Root::canonical(self.m0) {
            return Err(fail("root is not the canonical slice-1 root".into()));
        }
        validate_causal(&self.slice_sizes, &self.triangles())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ct: Self = serde_json::from_str(s).map_err(|e| UictError::Invalid(e.to_string()))?;
        ct.validate()
            .map_err(|v| UictError::Invalid(v.to_string()))?;
        Ok(ct)
    }
}

fn trailing_zeros(d: &[u64]) -> u64 {
    d.iter().rev().take_while(|&&x| x == 0).count() as u64
}

/// Down degrees of a strip grown without a defect from a boundary of `m`
/// lower vertices (first move is (+), exactly `m` (−)-moves, last move (−)).
fn down_degrees_of_clean_strip(m: usize, moves: &[Move]) -> Vec<u64> {
    let mut deg = vec![0u64; m];
    let mut j = 0;
    for (i, mv) in moves.iter().enumerate() {
        match mv {
            Move::Plus if i == 0 => {}
            Move::Plus => deg[j] += 1,
            Move::Minus => j += 1,
        }
    }
    // the closing (−)-move glues a down triangle onto the last lower vertex
    deg[m - 1] += 1;
    deg
}

/// `(start, end, defects)` of one strip in the move sequence.
type StripSpan = (usize, usize, usize);

/// Strip boundaries and defect counts of a stopped growth output.
fn strips_of(tri: &AlmostCausalTriangulation) -> Result<(MoveSequence, Vec<StripSpan>)> {
    if !tri.is_stopped() {
        return Err(UictError::NotStopped);
    }
    let moves = moves_from_triangulation(tri)?;
    let spans = (0..tri.completed_strips())
        .map(|t| {
            let lo = tri.strip_ends[t] as usize;
            let hi = tri.strip_ends[t + 1] as usize;
            let l = moves.0[lo..hi]
                .iter()
                .take_while(|&&mv| mv == Move::Minus)
                .count();
            (lo, hi, l)
        })
        .collect();
    Ok((moves, spans))
}

/// The growth sequence with every leading `(−)^l (+)` of a strip replaced
/// by `(+) (−)^l`; it has the same probability and builds no defect.
pub fn defect_free_moves(tri: &AlmostCausalTriangulation) -> Result<MoveSequence> {
    let (mut moves, spans) = strips_of(tri)?;
    for (lo, _, l) in spans {
        moves.0[lo..=lo + l].rotate_right(1);
    }
    Ok(moves)
}

/// Maps a stopped growth output to its causal triangulation.
pub fn remove_defects(tri: &AlmostCausalTriangulation) -> Result<CausalTriangulation> {
    let (_, spans) = strips_of(tri)?;
    let clean = defect_free_moves(tri)?;
    let mut strips = Vec::with_capacity(spans.len());
    for (t, &(lo, hi, l)) in spans.iter().enumerate() {
        let mut deg = down_degrees_of_clean_strip(tri.slice_sizes[t] as usize, &clean.0[lo..hi]);
        deg.rotate_left(l);
        strips.push(CausalStrip {
            down_degrees: deg,
            shift: l as u64,
        });
    }
    let height = spans.len() + 1;
    let ct = CausalTriangulation {
        m0: tri.m0,
        height,
        slice_sizes: tri.slice_sizes[..height].to_vec(),
        strips,
        root: Root::canonical(tri.m0),
    };
    ct.validate()
        .map_err(|v| UictError::Invalid(v.to_string()))?;
    Ok(ct)
}

/// Inverse of [`remove_defects`] composed with growth: the move sequence
/// whose stopped output maps to `ct`.
pub fn moves_from_causal(ct: &CausalTriangulation) -> Result<MoveSequence> {
    ct.validate()
        .map_err(|v| UictError::Invalid(v.to_string()))?;
    let mut out = Vec::new();
    for strip in &ct.strips {
        let l = strip.shift as usize;
        let mut deg = strip.down_degrees.clone();
        deg.rotate_right(l);
        let m = deg.len();
        let mut moves = vec![Move::Plus];
        for (j, &d) in deg.iter().enumerate() {
            let pluses = if j + 1 == m { d - 1 } else { d };
            moves.extend(std::iter::repeat_n(Move::Plus, pluses as usize));
            moves.push(Move::Minus);
        }
        // (+) (−)^l -> (−)^l (+)
        moves[..=l].rotate_left(1);
        out.extend(moves);
    }
    Ok(MoveSequence(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangulation::build_from_moves;

    fn seq(s: &str) -> MoveSequence {
        s.parse().unwrap()
    }

    #[test]
    fn clean_strip_is_unchanged() {
        let act = build_from_moves(3, &seq("+++-+--")).unwrap();
        let ct = remove_defects(&act).unwrap();
        assert_eq!(ct.slice_sizes, vec![3, 4]);
        assert_eq!(ct.strips[0].down_degrees, vec![2, 1, 1]);
        assert_eq!(ct.strips[0].shift, 0);
        // same triangles up to ordering within the strip
        let mut a: Vec<_> = act.triangles.iter().map(|t| sorted(t.vertices)).collect();
        let mut b: Vec<_> = ct.triangles().iter().map(|t| sorted(t.vertices)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(moves_from_causal(&ct).unwrap(), seq("+++-+--"));
    }

    fn sorted(mut v: [Vertex; 3]) -> [Vertex; 3] {
        v.sort();
        v
    }

    #[test]
    fn one_step_shift() {
        // (−)(+) opens the strip; rewritten to (+)(−) then shifted by one
        let act = build_from_moves(2, &seq("-++-")).unwrap();
        let ct = remove_defects(&act).unwrap();
        // clean rewrite "+-+-" has degrees [0, 2]; shifting by one gives [2, 0]
        assert_eq!(ct.strips[0].down_degrees, vec![2, 0]);
        assert_eq!(ct.strips[0].shift, 1);
        ct.validate().unwrap();
        assert_eq!(moves_from_causal(&ct).unwrap(), seq("-++-"));
        let p_act = seq("-++-").probability_exact(2).unwrap();
        let p_clean = seq("+-+-").probability_exact(2).unwrap();
        assert_eq!(p_act, p_clean);
        assert_eq!(defect_free_moves(&act).unwrap(), seq("+-+-"));
    }

    #[test]
    fn unstopped_input_rejected() {
        let act = build_from_moves(2, &seq("-++--")).unwrap();
        assert_eq!(remove_defects(&act).unwrap_err(), UictError::NotStopped);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let act = build_from_moves(1, &seq("+-++-+-+--++-+++--")).unwrap();
        let ct = remove_defects(&act).unwrap();
        let back = CausalTriangulation::from_json(&ct.to_json()).unwrap();
        assert_eq!(back, ct);

        let mut bad = ct.clone();
        bad.strips[0].down_degrees[0] += 1;
        assert!(CausalTriangulation::from_json(&bad.to_json()).is_err());
        let mut bad = ct.clone();
        bad.strips[0].shift += 1;
        assert!(CausalTriangulation::from_json(&bad.to_json()).is_err());
        assert!(CausalTriangulation::from_json("{\"m0\": 1}").is_err());
    }
}
