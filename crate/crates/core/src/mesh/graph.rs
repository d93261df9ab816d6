use std::collections::BTreeSet;

use super::{CoarseMesh, PrimitiveId, PrimitiveKind};

/// Undirected graph over all macro-primitives of a mesh.
///
/// Stores the full neighbor closure: cell-face, cell-edge, cell-vertex,
/// face-edge, face-vertex, edge-vertex and cell-cell across shared faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimitiveGraph {
    counts: [usize; 4],
    adjacency: [Vec<Vec<PrimitiveId>>; 4],
}

fn slot(kind: PrimitiveKind) -> usize {
    kind as usize
}

impl PrimitiveGraph {
    pub fn build(mesh: &CoarseMesh) -> Self {
        let counts = [
            mesh.vertices().len(),
            mesh.edges().len(),
            mesh.faces().len(),
            mesh.num_cells(),
        ];
        let mut sets: [Vec<BTreeSet<PrimitiveId>>; 4] =
            counts.map(|n| vec![BTreeSet::new(); n]);
        let mut link = |a: PrimitiveId, b: PrimitiveId| {
            sets[slot(a.kind)][a.index].insert(b);
            sets[slot(b.kind)][b.index].insert(a);
        };

        for (c, cell) in mesh.cells().iter().enumerate() {
            let id = PrimitiveId::cell(c);
            for &f in &mesh.cell_faces()[c] {
                link(id, PrimitiveId::face(f));
            }
            for &e in &mesh.cell_edges()[c] {
                link(id, PrimitiveId::edge(e));
            }
            for &v in cell {
                link(id, PrimitiveId::vertex(v));
            }
        }
        for (f, face) in mesh.faces().iter().enumerate() {
            let id = PrimitiveId::face(f);
            for &e in &mesh.face_edges()[f] {
                link(id, PrimitiveId::edge(e));
            }
            for &v in face {
                link(id, PrimitiveId::vertex(v));
            }
            if let [a, b] = mesh.face_cells()[f][..] {
                link(PrimitiveId::cell(a), PrimitiveId::cell(b));
            }
        }
        for (e, edge) in mesh.edges().iter().enumerate() {
            for &v in edge {
                link(PrimitiveId::edge(e), PrimitiveId::vertex(v));
            }
        }

        let adjacency = sets.map(|per_kind| {
            per_kind
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect()
        });
        Self { counts, adjacency }
    }

    pub fn count(&self, kind: PrimitiveKind) -> usize {
        self.counts[slot(kind)]
    }

    pub fn nodes(&self) -> impl Iterator<Item = PrimitiveId> + '_ {
        [
            PrimitiveKind::Vertex,
            PrimitiveKind::Edge,
            PrimitiveKind::Face,
            PrimitiveKind::Cell,
        ]
        .into_iter()
        .flat_map(move |k| (0..self.count(k)).map(move |i| PrimitiveId { kind: k, index: i }))
    }

    /// Neighbors of `id`, sorted by kind then index.
    pub fn neighbors(&self, id: PrimitiveId) -> &[PrimitiveId] {
        &self.adjacency[slot(id.kind)][id.index]
    }

    pub fn neighbors_of_kind(
        &self,
        id: PrimitiveId,
        kind: PrimitiveKind,
    ) -> impl Iterator<Item = PrimitiveId> + '_ {
        self.neighbors(id).iter().copied().filter(move |n| n.kind == kind)
    }

    /// Number of undirected links.
    pub fn link_count(&self) -> usize {
        self.nodes().map(|n| self.neighbors(n).len()).sum::<usize>() / 2
    }

    /// Number of undirected cell-cell links.
    pub fn cell_links(&self) -> usize {
        (0..self.count(PrimitiveKind::Cell))
            .map(|c| {
                self.neighbors_of_kind(PrimitiveId::cell(c), PrimitiveKind::Cell)
                    .count()
            })
            .sum::<usize>()
            / 2
    }
}

/// Convenience wrapper around [`PrimitiveGraph::build`].
pub fn build_primitive_graph(mesh: &CoarseMesh) -> PrimitiveGraph {
    PrimitiveGraph::build(mesh)
}
