use serde::Serialize;

use super::{CausalTriangulation, Orientation, Vertex};

/// Planar forest on the slices of a causal triangulation: every vertex
/// above slice 1 points to the lower vertex at the apex of the down
/// triangle on its right-hand slice edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootedForest {
    /// Roots, in slice-1 order.
    pub roots: Vec<Vertex>,
    /// `parents[i][c]` is the parent position on slice `i + 1` of vertex `c`
    /// on slice `i + 2`.
    pub parents: Vec<Vec<u32>>,
}

impl RootedForest {
    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        if v.slice < 2 {
            return None;
        }
        let p = self
            .parents
            .get(v.slice as usize - 2)?
            .get(v.position as usize)?;
        Some(Vertex::new(v.slice - 1, *p))
    }

    /// Children of `v`, in planar order.
    pub fn children(&self, v: Vertex) -> Vec<Vertex> {
        let Some(row) = self.parents.get(v.slice as usize - 1) else {
            return Vec::new();
        };
        row.iter()
            .enumerate()
            .filter(|(_, &p)| p == v.position)
            .map(|(c, _)| Vertex::new(v.slice + 1, c as u32))
            .collect()
    }

    /// Number of vertices on each generation, root generation first.
    pub fn generation_sizes(&self) -> Vec<u64> {
        let mut out = vec![self.roots.len() as u64];
        out.extend(self.parents.iter().map(|r| r.len() as u64));
        out
    }
}

pub fn to_forest(ct: &CausalTriangulation) -> RootedForest {
    let mut parents: Vec<Vec<u32>> = ct.slice_sizes[1..]
        .iter()
        .map(|&k| vec![0; k as usize])
        .collect();
    for tri in ct.triangles() {
        if tri.orientation() == Orientation::Down {
            let [apex, left, _] = tri.vertices;
            parents[tri.strip as usize - 1][left.position as usize] = apex.position;
        }
    }
    RootedForest {
        roots: (0..ct.m0 as u32).map(|p| Vertex::new(1, p)).collect(),
        parents,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_chain::MoveSequence;
    use crate::triangulation::{build_from_moves, remove_defects};

    #[test]
    fn offspring_counts_are_down_degrees() {
        let moves: MoveSequence = "+-++-+-+--++-+++--".parse().unwrap();
        let ct = remove_defects(&build_from_moves(1, &moves).unwrap()).unwrap();
        let forest = to_forest(&ct);
        assert_eq!(forest.generation_sizes(), ct.slice_sizes);
        for (i, strip) in ct.strips.iter().enumerate() {
            for (j, &d) in strip.down_degrees.iter().enumerate() {
                let v = Vertex::new(i as u32 + 1, j as u32);
                let kids = forest.children(v);
                assert_eq!(kids.len() as u64, d);
                assert!(kids.iter().all(|&c| forest.parent(c) == Some(v)));
            }
        }
    }

    #[test]
    fn parents_are_monotone() {
        // planarity: walking the upper slice never moves a parent backwards
        let moves: MoveSequence = "++-+--+++-+-".parse().unwrap();
        let ct = remove_defects(&build_from_moves(2, &moves).unwrap()).unwrap();
        for row in &to_forest(&ct).parents {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
