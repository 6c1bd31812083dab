//! Geometric side of the growth process.
//!
//! [`build_from_moves`] replays a move sequence on the boundary of the disc
//! and records every triangle with the slice (graph distance to the central
//! vertex) of each of its corners. Stopped at a strip completion, the result
//! is an almost causal triangulation of a cylinder; [`remove_defects`] maps
//! it to the causal triangulation it stands for, and [`to_forest`] reads off
//! the planar forest of the slice-to-slice parent relation.

mod act;
mod causal;
mod forest;

pub use act::{
    build_from_moves, enumerate_stopped, grow_strips, moves_from_triangulation,
    AlmostCausalTriangulation,
};
pub use causal::{
    defect_free_moves, moves_from_causal, remove_defects, CausalStrip, CausalTriangulation, Root,
};
pub use forest::{to_forest, RootedForest};

use serde::{Deserialize, Serialize};

/// A vertex identified by its slice and its appearance order within the slice.
///
/// Slice 0 holds only the central vertex of the starting disc; the rooted
/// boundary is slice 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub slice: u32,
    pub position: u32,
}

impl Vertex {
    pub const fn new(slice: u32, position: u32) -> Self {
        Self { slice, position }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Two corners on the lower slice of the strip.
    Up,
    /// Two corners on the upper slice of the strip.
    Down,
    /// All corners on the lower slice: a defect created by a (−)-move that
    /// opens a strip.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    /// Lives in the strip between slices `strip` and `strip + 1`.
    pub strip: u32,
    pub vertices: [Vertex; 3],
    /// `horizontal[r]` is set when the edge `vertices[r] -> vertices[(r + 1) % 3]`
    /// is an edge of a slice circle.
    pub horizontal: [bool; 3],
}

impl Triangle {
    pub fn orientation(&self) -> Orientation {
        let lower = self
            .vertices
            .iter()
            .filter(|v| v.slice == self.strip)
            .count();
        match lower {
            3 => Orientation::Flat,
            2 => Orientation::Up,
            _ => Orientation::Down,
        }
    }

    pub fn horizontal_edges(&self) -> usize {
        self.horizontal.iter().filter(|h| **h).count()
    }
}

/// First failure found by a validator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub triangle: Option<usize>,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.triangle {
            Some(i) => write!(f, "triangle {i}: {}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

fn violation(triangle: Option<usize>, reason: impl Into<String>) -> Violation {
    Violation {
        triangle,
        reason: reason.into(),
    }
}

/// Checks that every slice is a non-empty circle and that every triangle
/// has its corners on the two boundary slices of its own strip.
pub fn validate_almost_causal(
    slice_sizes: &[u64],
    triangles: &[Triangle],
) -> Result<(), Violation> {
    if let Some(j) = slice_sizes.iter().position(|&k| k == 0) {
        return Err(violation(None, format!("slice {} is empty", j + 1)));
    }
    let height = slice_sizes.len() as u32;
    for (i, tri) in triangles.iter().enumerate() {
        if tri.strip == 0 || tri.strip > height {
            return Err(violation(
                Some(i),
                format!("strip index {} out of range", tri.strip),
            ));
        }
        for v in &tri.vertices {
            if v.slice != tri.strip && v.slice != tri.strip + 1 {
                return Err(violation(
                    Some(i),
                    format!(
                        "corner on slice {} outside strip [{}, {}]",
                        v.slice,
                        tri.strip,
                        tri.strip + 1
                    ),
                ));
            }
            let size = slice_sizes.get(v.slice as usize - 1).copied().unwrap_or(0);
            if u64::from(v.position) >= size {
                return Err(violation(
                    Some(i),
                    format!("corner {v:?} beyond slice size {size}"),
                ));
            }
        }
    }
    Ok(())
}

/// Almost-causal checks plus: every triangle spans both slices of its strip
/// and has exactly one edge on a slice circle.
pub fn validate_causal(slice_sizes: &[u64], triangles: &[Triangle]) -> Result<(), Violation> {
    validate_almost_causal(slice_sizes, triangles)?;
    for (i, tri) in triangles.iter().enumerate() {
        if tri.orientation() == Orientation::Flat {
            return Err(violation(Some(i), "all corners on one slice"));
        }
        let h = tri.horizontal_edges();
        if h != 1 {
            return Err(violation(Some(i), format!("{h} edges on slice circles")));
        }
    }
    Ok(())
}
