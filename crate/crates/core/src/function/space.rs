use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::index::{index_set, intervals, n_tet, width, Layout, PolytopeIndex, SubgroupId};
use crate::mesh::CoarseMesh;

/// Finest level any function may be allocated on.
pub const MAX_LEVEL: u32 = 6;
/// Coarsest level with a complete subgroup taxonomy.
pub const MIN_LEVEL: u32 = 2;

/// A set of subgroups sharing `m` DoFs per micro-primitive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceEntry {
    pub subgroups: Vec<SubgroupId>,
    pub m: usize,
}

/// Which micro-primitives carry DoFs, how many, and in which layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceDescriptor {
    pub name: String,
    pub entries: Vec<SpaceEntry>,
    pub layout: Layout,
}

impl SpaceDescriptor {
    pub fn new(name: &str, entries: Vec<SpaceEntry>, layout: Layout) -> Result<Self> {
        let mut seen = Vec::new();
        for e in &entries {
            if e.m == 0 {
                return Err(Error::Unsupported("m must be at least 1".into()));
            }
            for &s in &e.subgroups {
                if seen.contains(&s) {
                    return Err(Error::Unsupported(format!("{s} listed twice")));
                }
                seen.push(s);
            }
        }
        if seen.is_empty() {
            return Err(Error::Unsupported("space without subgroups".into()));
        }
        Ok(Self {
            name: name.to_string(),
            entries,
            layout,
        })
    }

    pub fn p1(layout: Layout) -> Self {
        Self::new(
            "P1",
            vec![SpaceEntry {
                subgroups: vec![SubgroupId::Vertex],
                m: 1,
            }],
            layout,
        )
        .expect("valid")
    }

    pub fn p2(layout: Layout) -> Self {
        let edges = SubgroupId::of_kind(crate::index::PrimitiveKind::Edge).collect();
        Self::new(
            "P2",
            vec![
                SpaceEntry {
                    subgroups: vec![SubgroupId::Vertex],
                    m: 1,
                },
                SpaceEntry {
                    subgroups: edges,
                    m: 1,
                },
            ],
            layout,
        )
        .expect("valid")
    }

    /// `(subgroup, m)` per storage block, in entry order.
    pub fn blocks(&self) -> Vec<(SubgroupId, usize)> {
        self.entries
            .iter()
            .flat_map(|e| e.subgroups.iter().map(move |&s| (s, e.m)))
            .collect()
    }

    /// DoFs stored per macro-cell on `level`.
    pub fn dof_count(&self, level: u32) -> Result<usize> {
        crate::index::dof_count(self.blocks(), level)
    }

    pub fn is_p1(&self) -> bool {
        self.blocks() == [(SubgroupId::Vertex, 1)]
    }
}

/// One subgroup array inside a macro-cell's storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub subgroup: SubgroupId,
    pub m: usize,
    pub width: usize,
    /// Start of the block within the cell array.
    pub base: usize,
    pub len: usize,
}

/// Physical DoFs stored on more than one macro-cell. Entries are
/// `(cell, offset)` sorted by cell, so the first entry is the owner.
#[derive(Clone, Debug, Default)]
pub struct ReplicaGroups {
    starts: Vec<usize>,
    entries: Vec<(u32, u32)>,
}

impl ReplicaGroups {
    pub fn len(&self) -> usize {
        self.starts.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self, g: usize) -> &[(u32, u32)] {
        &self.entries[self.starts[g]..self.starts[g + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[(u32, u32)]> {
        (0..self.len()).map(|g| self.group(g))
    }
}

pub(crate) const NO_GROUP: u32 = u32::MAX;

/// Per-level storage plan and interface data.
#[derive(Clone, Debug)]
pub struct LevelLayout {
    pub level: u32,
    pub blocks: Vec<BlockLayout>,
    pub cell_len: usize,
    pub(crate) replicas: ReplicaGroups,
    /// Replica group of every stored DoF, or `NO_GROUP`.
    pub(crate) group_of: Vec<Vec<u32>>,
    pub(crate) owned: Vec<Vec<bool>>,
    pub(crate) dirichlet: Vec<Vec<bool>>,
}

impl LevelLayout {
    pub fn replicas(&self) -> &ReplicaGroups {
        &self.replicas
    }

    #[inline]
    pub fn is_owned(&self, cell: usize, offset: usize) -> bool {
        self.owned[cell][offset]
    }

    #[inline]
    pub fn is_dirichlet(&self, cell: usize, offset: usize) -> bool {
        self.dirichlet[cell][offset]
    }

    #[inline]
    pub fn is_replicated(&self, cell: usize, offset: usize) -> bool {
        self.group_of[cell][offset] != NO_GROUP
    }

    pub fn owned_mask(&self, cell: usize) -> &[bool] {
        &self.owned[cell]
    }

    pub fn dirichlet_mask(&self, cell: usize) -> &[bool] {
        &self.dirichlet[cell]
    }

    pub fn replica_mask(&self, cell: usize) -> Vec<bool> {
        self.group_of[cell].iter().map(|&g| g != NO_GROUP).collect()
    }

    pub fn owned_count(&self) -> usize {
        self.owned.iter().map(|o| o.iter().filter(|&&b| b).count()).sum()
    }

    /// Storage block holding `subgroup`.
    pub fn block_of(&self, subgroup: SubgroupId) -> Option<usize> {
        self.blocks.iter().position(|b| b.subgroup == subgroup)
    }

    /// Offset of DoF `d` of the primitive at `p` in block `block`.
    #[inline]
    pub fn offset(&self, layout: Layout, block: usize, p: PolytopeIndex, d: usize) -> usize {
        let b = &self.blocks[block];
        b.base + layout.offset(b.width, b.m, crate::index::tet_offset(b.width, p.i, p.j, p.k), d)
    }

    /// Dense ids for all physical DoFs: owned DoFs are numbered in cell and
    /// storage order, replicas get the id of their owner.
    pub fn global_numbering(&self) -> (Vec<Vec<usize>>, usize) {
        let mut ids: Vec<Vec<usize>> = self.owned.iter().map(|o| vec![usize::MAX; o.len()]).collect();
        let mut next = 0;
        for c in 0..ids.len() {
            for off in 0..self.cell_len {
                if self.owned[c][off] {
                    ids[c][off] = next;
                    next += 1;
                } else {
                    let g = self.group_of[c][off] as usize;
                    let (oc, ooff) = self.replicas.group(g)[0];
                    ids[c][off] = ids[oc as usize][ooff as usize];
                }
            }
        }
        (ids, next)
    }
}

/// Descriptor, mesh and level range shared by a family of functions.
#[derive(Debug)]
pub struct FunctionSpace {
    mesh: Arc<CoarseMesh>,
    descriptor: SpaceDescriptor,
    min_level: u32,
    max_level: u32,
    levels: Vec<LevelLayout>,
}

impl FunctionSpace {
    pub fn new(
        mesh: Arc<CoarseMesh>,
        descriptor: SpaceDescriptor,
        min_level: u32,
        max_level: u32,
    ) -> Result<Arc<Self>> {
        if min_level < MIN_LEVEL || max_level > MAX_LEVEL || min_level > max_level {
            return Err(Error::LevelRange {
                level: if min_level < MIN_LEVEL { min_level } else { max_level },
                min: MIN_LEVEL,
                max: MAX_LEVEL,
            });
        }
        let blocks = descriptor.blocks();
        let levels = (min_level..=max_level)
            .map(|l| build_level(&mesh, &blocks, descriptor.layout, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Self {
            mesh,
            descriptor,
            min_level,
            max_level,
            levels,
        }))
    }

    pub fn mesh(&self) -> &Arc<CoarseMesh> {
        &self.mesh
    }

    pub fn descriptor(&self) -> &SpaceDescriptor {
        &self.descriptor
    }

    pub fn layout(&self) -> Layout {
        self.descriptor.layout
    }

    pub fn min_level(&self) -> u32 {
        self.min_level
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn num_cells(&self) -> usize {
        self.mesh.num_cells()
    }

    pub fn level(&self, level: u32) -> Result<&LevelLayout> {
        if level < self.min_level || level > self.max_level {
            return Err(Error::LevelRange {
                level,
                min: self.min_level,
                max: self.max_level,
            });
        }
        Ok(&self.levels[(level - self.min_level) as usize])
    }

    /// True when functions of both spaces can be combined.
    pub fn compatible(&self, other: &FunctionSpace) -> bool {
        std::ptr::eq(self, other)
            || (self.descriptor == other.descriptor
                && Arc::ptr_eq(&self.mesh, &other.mesh)
                && self.min_level == other.min_level
                && self.max_level == other.max_level)
    }
}

/// Symbolic position of a DoF: number of primitive vertices, DoF index and
/// the sorted (macro-vertex, summed lattice weight) pairs.
type DofKey = (u8, u32, [(u32, u32); 4]);

fn build_level(
    mesh: &CoarseMesh,
    blocks: &[(SubgroupId, usize)],
    layout: Layout,
    level: u32,
) -> Result<LevelLayout> {
    let n = intervals(level);
    let mut plan = Vec::with_capacity(blocks.len());
    let mut base = 0;
    for &(subgroup, m) in blocks {
        let w = width(subgroup, level)?;
        let len = m * n_tet(w);
        plan.push(BlockLayout {
            subgroup,
            m,
            width: w,
            base,
            len,
        });
        base += len;
    }
    let cell_len = base;
    let num_cells = mesh.num_cells();

    let mut shared: HashMap<DofKey, Vec<(u32, u32)>> = HashMap::new();
    let mut dirichlet = vec![vec![false; cell_len]; num_cells];
    for (c, cell) in mesh.cells().iter().enumerate() {
        let dirichlet_faces: [bool; 4] =
            std::array::from_fn(|f| mesh.is_dirichlet_face(mesh.cell_faces()[c][f]));
        for b in &plan {
            let offsets = b.subgroup.vertex_offsets();
            for (t, p) in index_set(b.width).enumerate() {
                let mut weights = [0usize; 4];
                for o in offsets {
                    let q = p.offset(*o).expect("non-negative offsets");
                    weights[0] += n - q.sum();
                    weights[1] += q.i;
                    weights[2] += q.j;
                    weights[3] += q.k;
                }
                if weights.iter().all(|&x| x > 0) {
                    continue;
                }
                let on_dirichlet = (0..4).any(|f| weights[f] == 0 && dirichlet_faces[f]);
                let mut pairs = [(u32::MAX, 0u32); 4];
                let mut np = 0;
                for v in 0..4 {
                    if weights[v] > 0 {
                        pairs[np] = (cell[v] as u32, weights[v] as u32);
                        np += 1;
                    }
                }
                pairs[..np].sort_unstable();
                for d in 0..b.m {
                    let off = b.base + layout.offset(b.width, b.m, t, d);
                    dirichlet[c][off] = on_dirichlet;
                    shared
                        .entry((offsets.len() as u8, d as u32, pairs))
                        .or_default()
                        .push((c as u32, off as u32));
                }
            }
        }
    }

    let mut groups: Vec<Vec<(u32, u32)>> = shared
        .into_values()
        .filter(|g| g.len() > 1)
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    groups.sort_unstable_by_key(|g| g[0]);

    let mut replicas = ReplicaGroups {
        starts: vec![0],
        entries: Vec::new(),
    };
    let mut group_of = vec![vec![NO_GROUP; cell_len]; num_cells];
    let mut owned = vec![vec![true; cell_len]; num_cells];
    for (g, members) in groups.iter().enumerate() {
        let any_dirichlet = members
            .iter()
            .any(|&(c, o)| dirichlet[c as usize][o as usize]);
        for (r, &(c, o)) in members.iter().enumerate() {
            group_of[c as usize][o as usize] = g as u32;
            owned[c as usize][o as usize] = r == 0;
            dirichlet[c as usize][o as usize] = any_dirichlet;
        }
        replicas.entries.extend_from_slice(members);
        replicas.starts.push(replicas.entries.len());
    }

    Ok(LevelLayout {
        level,
        blocks: plan,
        cell_len,
        replicas,
        group_of,
        owned,
        dirichlet,
    })
}
