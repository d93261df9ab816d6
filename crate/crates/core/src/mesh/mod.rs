//! Unstructured coarse mesh of macro-tetrahedra.

mod graph;
mod parse;

pub use graph::{build_primitive_graph, PrimitiveGraph};
pub use parse::{parse_mesh, serialize_mesh};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
pub use crate::index::PrimitiveKind;

pub type Point = [f64; 3];

/// Local vertex pairs of the six edges of a tetrahedron.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Boundary marker for Dirichlet faces (the default for every boundary face).
pub const DIRICHLET: i32 = 1;

/// Address of a macro-primitive in the primitive graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimitiveId {
    pub kind: PrimitiveKind,
    pub index: usize,
}

impl PrimitiveId {
    pub fn vertex(index: usize) -> Self {
        Self { kind: PrimitiveKind::Vertex, index }
    }
    pub fn edge(index: usize) -> Self {
        Self { kind: PrimitiveKind::Edge, index }
    }
    pub fn face(index: usize) -> Self {
        Self { kind: PrimitiveKind::Face, index }
    }
    pub fn cell(index: usize) -> Self {
        Self { kind: PrimitiveKind::Cell, index }
    }
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

fn midpoint(a: Point, b: Point) -> Point {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0]
}

/// Six times the signed volume of `[a, b, c, d]`.
pub fn volume6(a: Point, b: Point, c: Point, d: Point) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a)))
}

/// Validated coarse mesh with derived edges and faces.
///
/// Edges and faces are stored as sorted vertex tuples in ascending order;
/// the vertex order of every cell is kept as given (it defines the
/// reference map) except for orientation repair.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseMesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    face_cells: Vec<Vec<usize>>,
    face_markers: Vec<i32>,
    cell_edges: Vec<[usize; 6]>,
    cell_faces: Vec<[usize; 4]>,
    face_edges: Vec<[usize; 3]>,
}

impl CoarseMesh {
    /// Builds and validates a mesh. `boundary` overrides the marker of
    /// individual boundary faces, given by their vertex triple.
    pub fn new(
        vertices: Vec<Point>,
        cells: Vec<[usize; 4]>,
        boundary: &[([usize; 3], i32)],
    ) -> Result<Self> {
        let mut cells = cells;
        let scale = bounding_diameter(&vertices).max(f64::MIN_POSITIVE);
        for (c, cell) in cells.iter_mut().enumerate() {
            for &v in cell.iter() {
                if v >= vertices.len() {
                    return Err(Error::OutOfBounds(format!(
                        "cell {c} references vertex {v}, mesh has {}",
                        vertices.len()
                    )));
                }
            }
            let [a, b, cc, d] = cell.map(|v| vertices[v]);
            let vol = volume6(a, b, cc, d);
            if vol.abs() <= 1e-12 * scale.powi(3) {
                return Err(Error::DegenerateCell { cell: c, volume6: vol });
            }
            if vol < 0.0 {
                log::warn!("cell {c} is negatively oriented, swapping local vertices 2 and 3");
                cell.swap(2, 3);
            }
        }

        let mut cell_sets = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            let mut key = *cell;
            key.sort();
            if let Some(other) = cell_sets.insert(key, c) {
                return Err(Error::NonConforming(format!(
                    "cells {other} and {c} have the same vertices"
                )));
            }
        }

        let mut edge_map: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut face_map: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for [a, b] in LOCAL_EDGES {
                edge_map.entry(sorted2(cell[a], cell[b])).or_insert(0);
            }
            for skip in 0..4 {
                face_map.entry(local_face(cell, skip)).or_default().push(c);
            }
        }
        for (e, id) in edge_map.values_mut().enumerate() {
            *id = e;
        }
        let edges: Vec<[usize; 2]> = edge_map.keys().copied().collect();
        let faces: Vec<[usize; 3]> = face_map.keys().copied().collect();
        let face_cells: Vec<Vec<usize>> = face_map.values().cloned().collect();
        for (f, inc) in faces.iter().zip(&face_cells) {
            if inc.len() > 2 {
                return Err(Error::NonConforming(format!(
                    "face {f:?} is shared by {} cells",
                    inc.len()
                )));
            }
        }
        let face_index: BTreeMap<[usize; 3], usize> =
            faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();

        let cell_edges = cells
            .iter()
            .map(|cell| LOCAL_EDGES.map(|[a, b]| edge_map[&sorted2(cell[a], cell[b])]))
            .collect();
        let cell_faces = cells
            .iter()
            .map(|cell| [0, 1, 2, 3].map(|skip| face_index[&local_face(cell, skip)]))
            .collect();
        let face_edges = faces
            .iter()
            .map(|f| {
                [
                    edge_map[&sorted2(f[0], f[1])],
                    edge_map[&sorted2(f[0], f[2])],
                    edge_map[&sorted2(f[1], f[2])],
                ]
            })
            .collect();

        let mut face_markers: Vec<i32> = face_cells
            .iter()
            .map(|inc| if inc.len() == 1 { DIRICHLET } else { 0 })
            .collect();
        for &(tri, marker) in boundary {
            let mut key = tri;
            key.sort();
            match face_index.get(&key) {
                Some(&f) if face_cells[f].len() == 1 => face_markers[f] = marker,
                _ => {
                    return Err(Error::NonConforming(format!(
                        "boundary entry {tri:?} is not a boundary face"
                    )))
                }
            }
        }

        let mesh = CoarseMesh {
            vertices,
            cells,
            edges,
            faces,
            face_cells,
            face_markers,
            cell_edges,
            cell_faces,
            face_edges,
        };
        mesh.check_hanging_nodes(scale)?;
        Ok(mesh)
    }

    /// Rejects vertices lying strictly inside an edge or face they do not
    /// belong to.
    fn check_hanging_nodes(&self, scale: f64) -> Result<()> {
        let tol = 1e-10 * scale;
        let mut used = vec![false; self.vertices.len()];
        for cell in &self.cells {
            for &v in cell {
                used[v] = true;
            }
        }
        for (v, &p) in self.vertices.iter().enumerate() {
            if !used[v] {
                continue;
            }
            for e in &self.edges {
                if e.contains(&v) {
                    continue;
                }
                let (a, b) = (self.vertices[e[0]], self.vertices[e[1]]);
                let ab = sub(b, a);
                let t = dot(sub(p, a), ab) / dot(ab, ab);
                if t > 1e-12 && t < 1.0 - 1e-12 {
                    let proj = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
                    if norm(sub(p, proj)) < tol {
                        return Err(Error::NonConforming(format!(
                            "vertex {v} lies inside edge {e:?} (hanging node)"
                        )));
                    }
                }
            }
            for f in &self.faces {
                if f.contains(&v) {
                    continue;
                }
                let [a, b, c] = f.map(|i| self.vertices[i]);
                let n = cross(sub(b, a), sub(c, a));
                let area2 = norm(n);
                if (dot(sub(p, a), n) / area2).abs() >= tol {
                    continue;
                }
                let l1 = dot(cross(sub(c, b), sub(p, b)), n) / (area2 * area2);
                let l2 = dot(cross(sub(a, c), sub(p, c)), n) / (area2 * area2);
                let l3 = 1.0 - l1 - l2;
                if l1 > 1e-12 && l2 > 1e-12 && l3 > 1e-12 {
                    return Err(Error::NonConforming(format!(
                        "vertex {v} lies inside face {f:?} (hanging node)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The reference tetrahedron as a one-cell mesh.
    pub fn reference_tet() -> Self {
        CoarseMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 2, 3]],
            &[],
        )
        .expect("reference tetrahedron is valid")
    }

    /// Unit cube split into six tetrahedra around the main diagonal.
    pub fn cube_kuhn() -> Self {
        let corner = |x: usize, y: usize, z: usize| x + 2 * y + 4 * z;
        let vertices: Vec<Point> = (0..8)
            .map(|c| [(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64])
            .collect();
        let unit = |axis: usize| -> [usize; 3] {
            let mut u = [0; 3];
            u[axis] = 1;
            u
        };
        let mut cells = Vec::new();
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let a = unit(perm[0]);
            let ab = [a[0] + unit(perm[1])[0], a[1] + unit(perm[1])[1], a[2] + unit(perm[1])[2]];
            let mut cell = [
                corner(0, 0, 0),
                corner(a[0], a[1], a[2]),
                corner(ab[0], ab[1], ab[2]),
                corner(1, 1, 1),
            ];
            let [p, q, r, s] = cell.map(|v| vertices[v]);
            if volume6(p, q, r, s) < 0.0 {
                cell.swap(2, 3);
            }
            cells.push(cell);
        }
        CoarseMesh::new(vertices, cells, &[]).expect("Kuhn cube is valid")
    }

    /// Two tetrahedra glued along one face.
    pub fn two_tets() -> Self {
        CoarseMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 1.0, 1.0],
            ],
            vec![[0, 1, 2, 3], [1, 2, 3, 4]],
            &[],
        )
        .expect("two-tet mesh is valid")
    }

    /// Built-in meshes by name: `ref-tet`, `cube-kuhn`, `two-tets`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ref-tet" => Some(Self::reference_tet()),
            "cube-kuhn" => Some(Self::cube_kuhn()),
            "two-tets" => Some(Self::two_tets()),
            _ => None,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
    /// Cells incident to each face (one for boundary faces, two otherwise).
    pub fn face_cells(&self) -> &[Vec<usize>] {
        &self.face_cells
    }
    pub fn cell_edges(&self) -> &[[usize; 6]] {
        &self.cell_edges
    }
    /// Face `f` of a cell is the one opposite local vertex `f`.
    pub fn cell_faces(&self) -> &[[usize; 4]] {
        &self.cell_faces
    }
    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    /// One flag per face: true iff the face has exactly one incident cell.
    pub fn boundary_flags(&self) -> Vec<bool> {
        self.face_cells.iter().map(|c| c.len() == 1).collect()
    }

    pub fn face_marker(&self, face: usize) -> i32 {
        self.face_markers[face]
    }

    /// Boundary faces whose marker requests Dirichlet conditions.
    pub fn is_dirichlet_face(&self, face: usize) -> bool {
        self.face_cells[face].len() == 1 && self.face_markers[face] != 0
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.face_cells.iter().filter(|c| c.len() == 1).count()
    }

    pub fn cell_points(&self, cell: usize) -> [Point; 4] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    /// Affine map from the reference tetrahedron onto `cell`.
    pub fn macro_cell_map(&self, cell: usize) -> Result<MacroCellMap> {
        if cell >= self.cells.len() {
            return Err(Error::OutOfBounds(format!("cell {cell}")));
        }
        MacroCellMap::from_points(self.cell_points(cell))
            .ok_or(Error::DegenerateCell { cell, volume6: 0.0 })
    }

    /// Total volume of all cells.
    pub fn volume(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| {
                let [a, b, cc, d] = self.cell_points(c);
                volume6(a, b, cc, d).abs() / 6.0
            })
            .sum()
    }

    /// Permutation of local vertices that makes the Bey inner edge
    /// (midpoint of `v0 v2` to midpoint of `v1 v3`) as short as possible.
    ///
    /// Only orientation-preserving permutations are considered; ties go to
    /// the lexicographically smallest one. Returns the identity when
    /// `enabled` is false.
    pub fn select_inner_edge_permutation(&self, cell: usize, enabled: bool) -> [usize; 4] {
        const IDENTITY: [usize; 4] = [0, 1, 2, 3];
        if !enabled {
            return IDENTITY;
        }
        let pts = self.cell_points(cell);
        let mut best = (f64::INFINITY, IDENTITY);
        for perm in even_permutations() {
            let d = norm(sub(
                midpoint(pts[perm[0]], pts[perm[2]]),
                midpoint(pts[perm[1]], pts[perm[3]]),
            ));
            // strict comparison keeps the lexicographically first minimizer
            if d < best.0 * (1.0 - 1e-12) {
                best = (d, perm);
            }
        }
        best.1
    }

    /// Copy of the mesh with every cell reordered by
    /// [`select_inner_edge_permutation`](Self::select_inner_edge_permutation).
    pub fn with_inner_edge_optimization(&self) -> Result<Self> {
        let cells = (0..self.cells.len())
            .map(|c| {
                let perm = self.select_inner_edge_permutation(c, true);
                perm.map(|p| self.cells[c][p])
            })
            .collect();
        let overrides: Vec<_> = self
            .faces
            .iter()
            .enumerate()
            .filter(|&(f, _)| self.face_cells[f].len() == 1 && self.face_markers[f] != DIRICHLET)
            .map(|(f, &tri)| (tri, self.face_markers[f]))
            .collect();
        CoarseMesh::new(self.vertices.clone(), cells, &overrides)
    }

    /// Faces with a non-default boundary marker, for serialization.
    pub(crate) fn boundary_overrides(&self) -> Vec<([usize; 3], i32)> {
        self.faces
            .iter()
            .enumerate()
            .filter(|&(f, _)| self.face_cells[f].len() == 1 && self.face_markers[f] != DIRICHLET)
            .map(|(f, &tri)| (tri, self.face_markers[f]))
            .collect()
    }
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn local_face(cell: &[usize; 4], skip: usize) -> [usize; 3] {
    let mut f = [0; 3];
    let mut n = 0;
    for (i, &v) in cell.iter().enumerate() {
        if i != skip {
            f[n] = v;
            n += 1;
        }
    }
    f.sort();
    f
}

fn bounding_diameter(points: &[Point]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    norm(sub(hi, lo))
}

/// The 12 even permutations of `0..4`, in lexicographic order.
fn even_permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| p[i] != p[j]));
                    if distinct {
                        let inversions = (0..4)
                            .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                            .filter(|&(i, j)| p[i] > p[j])
                            .count();
                        if inversions % 2 == 0 {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Affine map `x = offset + matrix * xi` from reference coordinates.
///
/// `matrix` is stored row-major; its columns are `v1 - v0`, `v2 - v0` and
/// `v3 - v0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroCellMap {
    pub matrix: [[f64; 3]; 3],
    pub offset: Point,
    pub det: f64,
    inverse: [[f64; 3]; 3],
}

impl MacroCellMap {
    pub fn from_points(p: [Point; 4]) -> Option<Self> {
        let cols = [sub(p[1], p[0]), sub(p[2], p[0]), sub(p[3], p[0])];
        let matrix = [
            [cols[0][0], cols[1][0], cols[2][0]],
            [cols[0][1], cols[1][1], cols[2][1]],
            [cols[0][2], cols[1][2], cols[2][2]],
        ];
        let det = dot(cols[0], cross(cols[1], cols[2]));
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        // rows of the inverse are the cross products of column pairs
        let r0 = cross(cols[1], cols[2]);
        let r1 = cross(cols[2], cols[0]);
        let r2 = cross(cols[0], cols[1]);
        let inverse = [r0, r1, r2].map(|r| r.map(|x| x / det));
        Some(Self {
            matrix,
            offset: p[0],
            det,
            inverse,
        })
    }

    /// Physical image of the reference point `xi`.
    #[inline]
    pub fn apply(&self, xi: Point) -> Point {
        let m = &self.matrix;
        [
            self.offset[0] + m[0][0] * xi[0] + m[0][1] * xi[1] + m[0][2] * xi[2],
            self.offset[1] + m[1][0] * xi[0] + m[1][1] * xi[1] + m[1][2] * xi[2],
            self.offset[2] + m[2][0] * xi[0] + m[2][1] * xi[1] + m[2][2] * xi[2],
        ]
    }

    /// Image of a reference-frame displacement (no offset).
    #[inline]
    pub fn apply_linear(&self, v: Point) -> Point {
        let m = &self.matrix;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Reference coordinates of the physical point `x`.
    pub fn inverse_apply(&self, x: Point) -> Point {
        let d = sub(x, self.offset);
        self.inverse.map(|r| dot(r, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_tet_counts() {
        let m = CoarseMesh::reference_tet();
        assert_eq!(
            (m.num_cells(), m.faces().len(), m.edges().len(), m.vertices().len()),
            (1, 4, 6, 4)
        );
        assert_eq!(m.num_boundary_faces(), 4);
    }

    #[test]
    fn kuhn_cube_counts() {
        let m = CoarseMesh::cube_kuhn();
        assert_eq!(
            (m.num_cells(), m.faces().len(), m.edges().len(), m.vertices().len()),
            (6, 18, 19, 8)
        );
        assert_eq!(m.num_boundary_faces(), 12);
        assert_relative_eq!(m.volume(), 1.0, epsilon = 1e-15);
        // the main diagonal is an edge of all six cells
        let diag = m.edges().iter().position(|&e| e == [0, 7]).unwrap();
        assert!(m.cell_edges().iter().all(|ce| ce.contains(&diag)));
    }

    #[test]
    fn face_incidence_sums() {
        for m in [CoarseMesh::reference_tet(), CoarseMesh::cube_kuhn(), CoarseMesh::two_tets()] {
            let total: usize = m.face_cells().iter().map(Vec::len).sum();
            assert_eq!(total, 4 * m.num_cells());
        }
    }

    #[test]
    fn degenerate_cell_rejected() {
        let err = CoarseMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
            vec![[0, 1, 2, 3]],
            &[],
        );
        assert!(matches!(err, Err(Error::DegenerateCell { cell: 0, .. })));
    }

    #[test]
    fn orientation_repaired() {
        let m = CoarseMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 3, 2]],
            &[],
        )
        .unwrap();
        assert_eq!(m.cells()[0], [0, 1, 2, 3]);
    }

    #[test]
    fn face_in_three_cells_rejected() {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [0.3, 0.3, 0.8],
        ];
        let cells = vec![[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]];
        assert!(matches!(
            CoarseMesh::new(vertices, cells, &[]),
            Err(Error::NonConforming(_))
        ));
    }

    #[test]
    fn hanging_node_rejected() {
        // second cell has a vertex at the midpoint of edge 0-1 of the first
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.0, 0.0],
            [0.5, 0.0, -1.0],
            [0.5, -1.0, 0.0],
        ];
        let cells = vec![[0, 1, 2, 3], [4, 6, 5, 1]];
        assert!(matches!(
            CoarseMesh::new(vertices, cells, &[]),
            Err(Error::NonConforming(_))
        ));
    }

    #[test]
    fn shared_vertex_pairs_are_shared_edges() {
        let m = CoarseMesh::cube_kuhn();
        for a in 0..m.num_cells() {
            for b in a + 1..m.num_cells() {
                let shared: Vec<usize> = m.cells()[a]
                    .iter()
                    .copied()
                    .filter(|v| m.cells()[b].contains(v))
                    .collect();
                if shared.len() == 2 {
                    let e = sorted2(shared[0], shared[1]);
                    let id = m.edges().iter().position(|&x| x == e).unwrap();
                    assert!(m.cell_edges()[a].contains(&id) && m.cell_edges()[b].contains(&id));
                }
            }
        }
    }

    #[test]
    fn macro_maps() {
        let m = CoarseMesh::reference_tet();
        let map = m.macro_cell_map(0).unwrap();
        assert_eq!(map.matrix, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(map.offset, [0.0; 3]);

        let scaled = CoarseMesh::new(
            vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]],
            vec![[0, 1, 2, 3]],
            &[],
        )
        .unwrap();
        let map = scaled.macro_cell_map(0).unwrap();
        assert_eq!(map.matrix, [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
        assert_eq!(map.det, 8.0);

        let map = MacroCellMap::from_points([
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [1.0, 1.0, 1.0],
        ])
        .unwrap();
        // columns (1,0,0), (1,1,0), (1,1,1)
        assert_eq!(map.matrix, [[1.0, 1.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]);
        assert_eq!(map.det, 1.0);
        let x = map.apply([0.2, 0.3, 0.1]);
        let xi = map.inverse_apply(x);
        assert_relative_eq!(xi[0], 0.2, epsilon = 1e-15);
        assert_relative_eq!(xi[1], 0.3, epsilon = 1e-15);
        assert_relative_eq!(xi[2], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn macro_map_sends_reference_vertices_to_cell() {
        let m = CoarseMesh::cube_kuhn();
        let refs = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for c in 0..m.num_cells() {
            let map = m.macro_cell_map(c).unwrap();
            assert_relative_eq!(map.det, 6.0 * m.volume() / 6.0, epsilon = 1e-14);
            for (r, p) in refs.iter().zip(m.cell_points(c)) {
                assert_eq!(map.apply(*r), p);
            }
        }
        assert!(m.macro_cell_map(6).is_err());
    }

    #[test]
    fn inner_edge_selection() {
        let m = CoarseMesh::reference_tet();
        assert_eq!(m.select_inner_edge_permutation(0, false), [0, 1, 2, 3]);
        // all three candidate diagonals have length sqrt(3)/2 on the reference tet
        assert_eq!(m.select_inner_edge_permutation(0, true), [0, 1, 2, 3]);

        // stretched along x: mid(v0,v2) - mid(v1,v3) spans the long direction
        let needle = CoarseMesh::new(
            vec![[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 1.0, 0.0], [10.0, 0.0, 1.0]],
            vec![[0, 1, 2, 3]],
            &[],
        )
        .unwrap();
        let pts = needle.cell_points(0);
        let length = |p: [usize; 4]| {
            norm(sub(midpoint(pts[p[0]], pts[p[2]]), midpoint(pts[p[1]], pts[p[3]])))
        };
        let perm = needle.select_inner_edge_permutation(0, true);
        assert_ne!(perm, [0, 1, 2, 3]);
        let candidates = [
            length([0, 1, 2, 3]),
            length([0, 2, 1, 3]),
            length([0, 1, 3, 2]),
        ];
        let min = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(length(perm), min, epsilon = 1e-12);
        assert!(length([0, 1, 2, 3]) > min);
        let optimized = needle.with_inner_edge_optimization().unwrap();
        assert_eq!(optimized.cells()[0], perm.map(|p| needle.cells()[0][p]));
    }

    #[test]
    fn even_permutation_table() {
        let perms = even_permutations();
        assert_eq!(perms.len(), 12);
        assert_eq!(perms[0], [0, 1, 2, 3]);
    }
}
