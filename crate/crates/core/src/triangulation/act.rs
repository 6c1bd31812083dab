use std::collections::VecDeque;

use serde::Serialize;

use super::{validate_almost_causal, Triangle, Vertex, Violation};
use crate::boundary_chain::{run_strips, Move, MoveSequence, MoveSource, StripTracker};
use crate::error::{Result, UictError};

/// Triangulation of the disc grown from the `m0`-gon, with the central
/// vertex and its fan removed.
///
/// Triangles are kept in creation order, so triangle `n` is the one glued by
/// move `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlmostCausalTriangulation {
    pub m0: u64,
    /// `k_1, k_2, ...`: vertices per slice, slice 1 first.
    pub slice_sizes: Vec<u64>,
    pub triangles: Vec<Triangle>,
    /// Current boundary, starting at the vertex after the marked edge.
    pub boundary: Vec<Vertex>,
    /// The marked edge `(last boundary vertex, first boundary vertex)`.
    pub marked_edge: (Vertex, Vertex),
    /// Growth times `n_1 = 0, n_2, ...` at which strips were completed.
    pub strip_ends: Vec<u64>,
}

impl AlmostCausalTriangulation {
    pub fn height(&self) -> usize {
        self.slice_sizes.len()
    }

    /// True when the last move completed a strip (or no move was made), so
    /// that the whole boundary lies on the top slice.
    pub fn is_stopped(&self) -> bool {
        self.strip_ends.last().copied() == Some(self.triangles.len() as u64)
    }

    /// Number of completed strips.
    pub fn completed_strips(&self) -> usize {
        self.strip_ends.len() - 1
    }

    /// Triangles created between `n_t` and `n_{t+1}` (`t` is 1-based).
    pub fn strip_triangles(&self, t: usize) -> &[Triangle] {
        let lo = self.strip_ends[t - 1] as usize;
        let hi = self
            .strip_ends
            .get(t)
            .map_or(self.triangles.len(), |&n| n as usize);
        &self.triangles[lo..hi]
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        validate_almost_causal(&self.slice_sizes, &self.triangles)
    }
}

/// Boundary cycle of the growing disc: `verts[j]` to `verts[j + 1]` is edge
/// `horiz[j]`, and the last entry of `horiz` is the marked edge from the
/// last vertex back to the first.
struct Boundary {
    verts: VecDeque<Vertex>,
    horiz: VecDeque<bool>,
}

/// Replays `moves` from the `m0`-gon.
pub fn build_from_moves(m0: u64, moves: &MoveSequence) -> Result<AlmostCausalTriangulation> {
    if m0 == 0 {
        return Err(UictError::ZeroBoundary(0));
    }
    let mut slice_sizes = vec![m0];
    let mut bnd = Boundary {
        verts: (0..m0 as u32).map(|p| Vertex::new(1, p)).collect(),
        horiz: std::iter::repeat_n(true, m0 as usize).collect(),
    };
    let mut triangles = Vec::with_capacity(moves.len());
    let mut tracker = StripTracker::new(m0);
    let mut strip_ends = vec![0];

    for (index, mv) in moves.iter().enumerate() {
        let front = bnd.verts[0];
        let back = *bnd.verts.back().expect("boundary is never empty");
        let marked = *bnd.horiz.back().expect("boundary is never empty");
        let tri = match mv {
            Move::Plus => {
                let level = front.slice + 1;
                if slice_sizes.len() < level as usize {
                    slice_sizes.push(0);
                }
                let y = Vertex::new(level, slice_sizes[level as usize - 1] as u32);
                slice_sizes[level as usize - 1] += 1;
                let back_y = back.slice == y.slice;
                *bnd.horiz.back_mut().unwrap() = back_y;
                bnd.horiz.push_back(false);
                bnd.verts.push_back(y);
                Triangle {
                    strip: front.slice,
                    vertices: [back, y, front],
                    horizontal: [back_y, false, marked],
                }
            }
            Move::Minus => {
                if bnd.verts.len() < 2 {
                    return Err(UictError::IllegalMove { index });
                }
                let next = bnd.verts[1];
                // the new edge closes the upper slice circle exactly when the
                // popped vertex is the last lower-slice vertex on the boundary
                let closes = back.slice == next.slice && front.slice < back.slice;
                let front_edge = bnd.horiz.pop_front().unwrap();
                bnd.verts.pop_front();
                *bnd.horiz.back_mut().unwrap() = closes;
                Triangle {
                    strip: front.slice,
                    vertices: [back, next, front],
                    horizontal: [closes, front_edge, marked],
                }
            }
        };
        triangles.push(tri);
        let step = index as u64 + 1;
        if let Some(stop) = tracker.observe(step, bnd.verts.len() as u64, mv)? {
            strip_ends.push(stop.time);
        }
    }

    let boundary: Vec<Vertex> = bnd.verts.into_iter().collect();
    let marked_edge = (*boundary.last().unwrap(), boundary[0]);
    Ok(AlmostCausalTriangulation {
        m0,
        slice_sizes,
        triangles,
        boundary,
        marked_edge,
        strip_ends,
    })
}

/// Recovers the move sequence by replaying the growth on the boundary and
/// matching each recorded triangle against the two possible moves.
pub fn moves_from_triangulation(tri: &AlmostCausalTriangulation) -> Result<MoveSequence> {
    let m0 = *tri
        .slice_sizes
        .first()
        .ok_or(UictError::Invalid("no slices".into()))?;
    let mut verts: VecDeque<Vertex> = (0..m0 as u32).map(|p| Vertex::new(1, p)).collect();
    let mut seen = vec![m0];
    let mut moves = Vec::with_capacity(tri.triangles.len());
    for (index, t) in tri.triangles.iter().enumerate() {
        let front = verts[0];
        let back = *verts.back().unwrap();
        let [a, mid, c] = t.vertices;
        if a != back || c != front {
            return Err(UictError::NotGrowthRepresentable { index });
        }
        let level = front.slice as usize + 1;
        let fresh = Vertex::new(
            level as u32,
            seen.get(level - 1).copied().unwrap_or(0) as u32,
        );
        if mid == fresh {
            if seen.len() < level {
                seen.push(0);
            }
            seen[level - 1] += 1;
            verts.push_back(mid);
            moves.push(Move::Plus);
        } else if verts.len() >= 2 && mid == verts[1] {
            verts.pop_front();
            moves.push(Move::Minus);
        } else {
            return Err(UictError::NotGrowthRepresentable { index });
        }
    }
    let moves = MoveSequence(moves);
    // the corner sequence alone fixes the moves; the full rebuild must also
    // reproduce edge types, slice sizes and the marked edge
    match build_from_moves(m0, &moves) {
        Ok(rebuilt) if rebuilt == *tri => Ok(moves),
        _ => Err(UictError::NotGrowthRepresentable {
            index: tri.triangles.len(),
        }),
    }
}

/// Move source that keeps a copy of every move it hands out.
struct Recording<S> {
    inner: S,
    moves: Vec<Move>,
}

impl<S: MoveSource> MoveSource for Recording<S> {
    fn next_move(&mut self, boundary: u64) -> Move {
        let mv = self.inner.next_move(boundary);
        self.moves.push(mv);
        mv
    }
}

/// Grows from the `m0`-gon until `strips` strips are complete.
pub fn grow_strips<S: MoveSource>(
    m0: u64,
    strips: usize,
    source: S,
) -> Result<AlmostCausalTriangulation> {
    let rec = Recording {
        inner: source,
        moves: Vec::new(),
    };
    let walker = run_strips(m0, strips + 1, rec, |_| {})?;
    build_from_moves(m0, &MoveSequence(walker.into_source().moves))
}

/// Every permitted move sequence from `m0` of at most `max_moves` moves
/// whose last move completes strip number `strips`.
pub fn enumerate_stopped(m0: u64, strips: usize, max_moves: usize) -> Vec<MoveSequence> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    enumerate_rec(
        m0,
        strips,
        max_moves,
        StripTracker::new(m0),
        &mut prefix,
        &mut out,
    );
    out
}

fn enumerate_rec(
    boundary: u64,
    strips: usize,
    max_moves: usize,
    tracker: StripTracker,
    prefix: &mut Vec<Move>,
    out: &mut Vec<MoveSequence>,
) {
    if tracker.last_stop().t == strips + 1 {
        out.push(MoveSequence(prefix.clone()));
        return;
    }
    if prefix.len() == max_moves {
        return;
    }
    for mv in [Move::Plus, Move::Minus] {
        let Some(next) = mv.apply(boundary) else {
            continue;
        };
        let mut tr = tracker.clone();
        prefix.push(mv);
        if tr.observe(prefix.len() as u64, next, mv).is_ok() {
            enumerate_rec(next, strips, max_moves, tr, prefix, out);
        }
        prefix.pop();
    }
}
