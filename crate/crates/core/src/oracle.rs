//! Constructive ground truth for the micro-primitive taxonomy.
//!
//! The reference tetrahedron is refined recursively with Bey's rule on exact
//! integer lattices. The resulting element soup is decomposed into vertices,
//! edges, faces and cells, which are grouped into translation-congruence
//! classes and named with the convention documented in [`crate::index`].
//! Nothing here runs on the hot path: the frozen tables in `index` are
//! generated from this module and checked against it in the test suite.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::index::{
    index_set, intervals, CellType, EdgeDir, FaceType, PolytopeIndex, PrimitiveKind, SubgroupId,
};

/// Largest level the oracle will refine to (8^6 = 262144 tetrahedra).
pub const MAX_ORACLE_LEVEL: u32 = 6;

pub type LatticePoint = [i64; 3];

/// A tetrahedron with integer lattice vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeTet(pub [LatticePoint; 4]);

impl LatticeTet {
    /// The reference tetrahedron on the level-0 lattice.
    pub fn reference() -> Self {
        LatticeTet([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    }

    /// Six times the signed volume.
    pub fn signed_volume6(&self) -> i64 {
        let [a, b, c, d] = self.0;
        let u = sub(b, a);
        let v = sub(c, a);
        let w = sub(d, a);
        dot(u, cross(v, w))
    }
}

fn sub(a: LatticePoint, b: LatticePoint) -> LatticePoint {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: LatticePoint, b: LatticePoint) -> LatticePoint {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn cross(a: LatticePoint, b: LatticePoint) -> LatticePoint {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: LatticePoint, b: LatticePoint) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn neg(a: LatticePoint) -> LatticePoint {
    [-a[0], -a[1], -a[2]]
}

/// Flips the sign so that the first nonzero component is positive.
fn canonical_direction(a: LatticePoint) -> LatticePoint {
    match a.iter().find(|&&c| c != 0) {
        Some(&c) if c < 0 => neg(a),
        _ => a,
    }
}

/// Splits `t` into its eight Bey children on the doubled lattice.
///
/// Children are returned as `T1..T8` with `T1 = [v0, v01, v02, v03]` and
/// `T8 = [v02, v12, v13, v23]`.
pub fn bey_refine(t: &LatticeTet) -> [LatticeTet; 8] {
    let v = t.0.map(|p| p.map(|c| 2 * c));
    let mid = |a: usize, b: usize| -> LatticePoint {
        [
            (v[a][0] + v[b][0]) / 2,
            (v[a][1] + v[b][1]) / 2,
            (v[a][2] + v[b][2]) / 2,
        ]
    };
    let (v01, v02, v03) = (mid(0, 1), mid(0, 2), mid(0, 3));
    let (v12, v13, v23) = (mid(1, 2), mid(1, 3), mid(2, 3));
    [
        LatticeTet([v[0], v01, v02, v03]),
        LatticeTet([v01, v[1], v12, v13]),
        LatticeTet([v02, v12, v[2], v23]),
        LatticeTet([v03, v13, v23, v[3]]),
        LatticeTet([v01, v02, v03, v13]),
        LatticeTet([v01, v02, v12, v13]),
        LatticeTet([v02, v03, v13, v23]),
        LatticeTet([v02, v12, v13, v23]),
    ]
}

/// All `8^level` micro-cells of the reference tetrahedron, lattice side `2^level`.
pub fn refine_to_level(level: u32) -> Result<Vec<LatticeTet>> {
    if level > MAX_ORACLE_LEVEL {
        return Err(Error::LevelRange {
            level,
            min: 0,
            max: MAX_ORACLE_LEVEL,
        });
    }
    let mut tets = vec![LatticeTet::reference()];
    for _ in 0..level {
        tets = tets.iter().flat_map(bey_refine).collect();
    }
    Ok(tets)
}

/// Sorted vertex differences relative to the lexicographically smallest vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CongruenceClassKey(pub Vec<LatticePoint>);

impl CongruenceClassKey {
    pub fn of(vertices: &[LatticePoint]) -> Self {
        let mut v = vertices.to_vec();
        v.sort();
        let base = v[0];
        CongruenceClassKey(v.into_iter().map(|p| sub(p, base)).collect())
    }

    /// Key of the point-reflected primitive.
    pub fn reflected(&self) -> Self {
        let v: Vec<_> = self.0.iter().map(|&p| neg(p)).collect();
        Self::of(&v)
    }
}

/// One congruence class found in the soup.
#[derive(Clone, Debug)]
pub struct SubgroupClass {
    pub subgroup: SubgroupId,
    pub key: CongruenceClassKey,
    /// Member vertex lists, each sorted, ordered by anchor vertex.
    pub members: Vec<Vec<LatticePoint>>,
}

impl SubgroupClass {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    /// Componentwise minimum of all member anchors (smallest vertices).
    fn anchor_shift(&self) -> LatticePoint {
        let mut o = [i64::MAX; 3];
        for m in &self.members {
            for (oc, &c) in o.iter_mut().zip(&m[0]) {
                *oc = (*oc).min(c);
            }
        }
        o
    }

    /// Vertex offsets of the instance at polytope index `(0,0,0)`, in k, j, i loop order.
    pub fn vertex_offsets(&self) -> Vec<LatticePoint> {
        let o = self.anchor_shift();
        let mut v: Vec<_> = self.key.0.iter().map(|&p| add(p, o)).collect();
        v.sort_by_key(|p| (p[2], p[1], p[0]));
        v
    }

    /// Side length `w` such that member anchors are exactly a translate of
    /// `I_tet(w)`, or `None` if they are not.
    pub fn polytope_width(&self) -> Option<usize> {
        let o = self.anchor_shift();
        let anchors: HashSet<LatticePoint> =
            self.members.iter().map(|m| sub(m[0], o)).collect();
        let w = anchors.iter().map(|a| a.iter().sum::<i64>()).max()? as usize + 1;
        let expected: HashSet<LatticePoint> = index_set(w)
            .map(|p: PolytopeIndex| [p.i as i64, p.j as i64, p.k as i64])
            .collect();
        (anchors == expected).then_some(w)
    }
}

/// Distinct micro-primitives of one kind extracted from the soup.
pub fn primitives(tets: &[LatticeTet], kind: PrimitiveKind) -> Vec<Vec<LatticePoint>> {
    let n = kind.vertex_count();
    let mut set: HashSet<Vec<LatticePoint>> = HashSet::new();
    for t in tets {
        for combo in combinations(4, n) {
            let mut v: Vec<_> = combo.iter().map(|&c| t.0[c]).collect();
            v.sort();
            set.insert(v);
        }
    }
    let mut out: Vec<_> = set.into_iter().collect();
    out.sort();
    out
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Result of classifying all micro-primitives on one level.
#[derive(Clone, Debug)]
pub struct Classification {
    pub level: u32,
    pub classes: Vec<SubgroupClass>,
}

impl Classification {
    pub fn get(&self, subgroup: SubgroupId) -> Option<&SubgroupClass> {
        self.classes.iter().find(|c| c.subgroup == subgroup)
    }

    /// Member count of `subgroup`, zero when absent on this level.
    pub fn count(&self, subgroup: SubgroupId) -> usize {
        self.get(subgroup).map_or(0, SubgroupClass::count)
    }

    pub fn of_kind(&self, kind: PrimitiveKind) -> impl Iterator<Item = &SubgroupClass> {
        self.classes.iter().filter(move |c| c.subgroup.kind() == kind)
    }
}

fn edge_name(dir: LatticePoint) -> Option<EdgeDir> {
    Some(match canonical_direction(dir) {
        [1, 0, 0] => EdgeDir::X,
        [0, 1, 0] => EdgeDir::Y,
        [0, 0, 1] => EdgeDir::Z,
        [1, -1, 0] => EdgeDir::XY,
        [1, 0, -1] => EdgeDir::XZ,
        [0, 1, -1] => EdgeDir::YZ,
        [1, -1, 1] => EdgeDir::XYZ,
        _ => return None,
    })
}

fn face_name(key: &CongruenceClassKey) -> Option<FaceType> {
    let normal = canonical_direction(cross(key.0[1], key.0[2]));
    let up = *key < key.reflected();
    let pair = match normal {
        [0, 0, 1] => (FaceType::ZUp, FaceType::ZDown),
        [0, 1, 0] => (FaceType::YUp, FaceType::YDown),
        [1, 0, 0] => (FaceType::XUp, FaceType::XDown),
        [1, 1, 1] => (FaceType::XyzUp, FaceType::XyzDown),
        [1, 1, 0] => (FaceType::XyUp, FaceType::XyDown),
        [0, 1, 1] => (FaceType::YzUp, FaceType::YzDown),
        _ => return None,
    };
    Some(if up { pair.0 } else { pair.1 })
}

/// Classifies every micro-primitive of the refined reference tetrahedron.
pub fn classify(level: u32) -> Result<Classification> {
    let tets = refine_to_level(level)?;
    let mut classes = Vec::new();
    for kind in [
        PrimitiveKind::Vertex,
        PrimitiveKind::Edge,
        PrimitiveKind::Face,
        PrimitiveKind::Cell,
    ] {
        let mut groups: BTreeMap<CongruenceClassKey, Vec<Vec<LatticePoint>>> = BTreeMap::new();
        for p in primitives(&tets, kind) {
            groups.entry(CongruenceClassKey::of(&p)).or_default().push(p);
        }
        let expected = SubgroupId::of_kind(kind).count();
        if groups.len() > expected || (level >= 2 && groups.len() != expected) {
            return Err(Error::ClassCount {
                kind: kind.as_str(),
                found: groups.len(),
                expected,
            });
        }
        // Cell pairs are numbered by the smaller key of each reflection pair.
        let pair_keys: Vec<CongruenceClassKey> = {
            let mut keys: Vec<_> = groups
                .keys()
                .map(|k| k.clone().min(k.reflected()))
                .collect();
            keys.sort();
            keys.dedup();
            keys
        };
        for (key, mut members) in groups {
            let subgroup = match kind {
                PrimitiveKind::Vertex => Some(SubgroupId::Vertex),
                PrimitiveKind::Edge => edge_name(key.0[1]).map(SubgroupId::Edge),
                PrimitiveKind::Face => face_name(&key).map(SubgroupId::Face),
                PrimitiveKind::Cell => {
                    let reflected = key.reflected();
                    let up = key < reflected;
                    let pair_key = key.clone().min(reflected);
                    let pair = pair_keys.iter().position(|k| *k == pair_key).unwrap();
                    let ty = match (pair, up) {
                        (0, true) => CellType::IUp,
                        (0, false) => CellType::IDown,
                        (1, true) => CellType::IIUp,
                        (1, false) => CellType::IIDown,
                        (2, true) => CellType::IIIUp,
                        _ => CellType::IIIDown,
                    };
                    Some(SubgroupId::Cell(ty))
                }
            };
            let subgroup = subgroup.ok_or_else(|| Error::ClassCount {
                kind: kind.as_str(),
                found: 0,
                expected,
            })?;
            members.sort_by(|a, b| a[0].cmp(&b[0]));
            classes.push(SubgroupClass {
                subgroup,
                key,
                members,
            });
        }
    }
    classes.sort_by_key(|c| c.subgroup.index());
    Ok(Classification { level, classes })
}

/// Primitive counts `(V, E, F, C)` of the refined reference tetrahedron.
pub fn primitive_counts(level: u32) -> Result<[usize; 4]> {
    let tets = refine_to_level(level)?;
    Ok([
        primitives(&tets, PrimitiveKind::Vertex).len(),
        primitives(&tets, PrimitiveKind::Edge).len(),
        primitives(&tets, PrimitiveKind::Face).len(),
        tets.len(),
    ])
}

/// Euler characteristic `V - E + F - C` of the soup.
pub fn euler_check(level: u32) -> Result<i64> {
    let [v, e, f, c] = primitive_counts(level)?;
    Ok(v as i64 - e as i64 + f as i64 - c as i64)
}

/// Faces of the soup together with the number of incident cells.
pub fn face_incidence(tets: &[LatticeTet]) -> HashMap<[LatticePoint; 3], usize> {
    let mut map = HashMap::new();
    for t in tets {
        for skip in 0..4 {
            let mut f: Vec<_> = (0..4).filter(|&c| c != skip).map(|c| t.0[c]).collect();
            f.sort();
            *map.entry([f[0], f[1], f[2]]).or_insert(0) += 1;
        }
    }
    map
}

/// Text rendering of the frozen subgroup tables, derived on level 2, followed
/// by a `sha256` line covering all preceding bytes.
pub fn table_artifact() -> Result<String> {
    let level = 2;
    let classification = classify(level)?;
    let n = intervals(level) as i64;
    let mut out = String::new();
    writeln!(out, "# blocktet frozen subgroup tables").unwrap();
    writeln!(
        out,
        "# generated by the refinement oracle on level {level}; width = 2^l + delta"
    )
    .unwrap();
    writeln!(out, "# subgroup | delta | vertex offsets of the instance at (0,0,0)").unwrap();
    for class in &classification.classes {
        let w = class.polytope_width().ok_or_else(|| {
            Error::Unsupported(format!("{} anchors do not form I_tet", class.subgroup))
        })?;
        let offsets: Vec<String> = class
            .vertex_offsets()
            .iter()
            .map(|p| format!("({},{},{})", p[0], p[1], p[2]))
            .collect();
        writeln!(
            out,
            "{} | {:+} | {}",
            class.subgroup,
            w as i64 - n,
            offsets.join(" ")
        )
        .unwrap();
    }
    for d in crate::index::WIDTH_DEVIATIONS {
        writeln!(
            out,
            "deviation {} | nominal {:+} | shipped {:+}",
            d.subgroup, d.nominal_delta, d.shipped_delta
        )
        .unwrap();
    }
    let hash = Sha256::digest(out.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    writeln!(out, "sha256 {hex}").unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{n_tet, width};

    #[test]
    fn first_level_children() {
        let scaled = LatticeTet::reference();
        let kids = bey_refine(&scaled);
        assert_eq!(kids[0].0, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(kids[3].0, [[0, 0, 1], [1, 0, 1], [0, 1, 1], [0, 0, 2]]);
        let parent6 = scaled.signed_volume6() * 8;
        let total: i64 = kids.iter().map(|t| t.signed_volume6().abs()).sum();
        assert_eq!(total, parent6);
    }

    #[test]
    fn soup_sizes() {
        assert_eq!(refine_to_level(0).unwrap().len(), 1);
        assert_eq!(refine_to_level(1).unwrap().len(), 8);
        assert_eq!(refine_to_level(2).unwrap().len(), 64);
        assert!(refine_to_level(7).is_err());
    }

    #[test]
    fn euler_characteristic() {
        assert_eq!(primitive_counts(0).unwrap(), [4, 6, 4, 1]);
        assert_eq!(primitive_counts(1).unwrap(), [10, 25, 24, 8]);
        for level in 0..=3 {
            assert_eq!(euler_check(level).unwrap(), 1);
        }
        let [v, _, _, c] = primitive_counts(2).unwrap();
        assert_eq!((v, c), (35, 64));
    }

    #[test]
    fn tiling_volume() {
        for level in 0..=4u32 {
            let tets = refine_to_level(level).unwrap();
            let total: i64 = tets.iter().map(|t| t.signed_volume6().abs()).sum();
            // reference volume 1/6 on a lattice of side 2^level
            assert_eq!(total, 8i64.pow(level));
        }
    }

    #[test]
    fn conformity_and_boundary() {
        for level in 1..=3u32 {
            let n = intervals(level) as i64;
            let tets = refine_to_level(level).unwrap();
            let inc = face_incidence(&tets);
            assert!(inc.values().all(|&c| c <= 2));
            let boundary: Vec<_> = inc.iter().filter(|(_, &c)| c == 1).map(|(f, _)| f).collect();
            assert_eq!(boundary.len(), 4 * 4usize.pow(level));
            for f in boundary {
                let on_plane = (0..3).any(|d| f.iter().all(|p| p[d] == 0))
                    || f.iter().all(|p| p.iter().sum::<i64>() == n);
                assert!(on_plane, "{f:?}");
            }
        }
    }

    #[test]
    fn inner_edge_connects_v02_and_v13() {
        let c = classify(1).unwrap();
        let xyz = c.get(SubgroupId::Edge(EdgeDir::XYZ)).unwrap();
        assert_eq!(xyz.members, vec![vec![[0, 1, 0], [1, 0, 1]]]);
    }

    #[test]
    fn level_two_cell_and_edge_counts() {
        let c = classify(2).unwrap();
        let mut cells: Vec<_> = c.of_kind(PrimitiveKind::Cell).map(|x| x.count()).collect();
        cells.sort();
        assert_eq!(cells, vec![4, 10, 10, 10, 10, 20]);
        let mut edges: Vec<_> = c.of_kind(PrimitiveKind::Edge).map(|x| x.count()).collect();
        edges.sort();
        assert_eq!(edges, vec![10, 20, 20, 20, 20, 20, 20]);
    }

    #[test]
    fn level_one_lacks_i_down() {
        let c = classify(1).unwrap();
        assert_eq!(c.count(SubgroupId::Cell(CellType::IUp)), 4);
        assert_eq!(c.count(SubgroupId::Cell(CellType::IDown)), 0);
        for ty in [CellType::IIUp, CellType::IIDown, CellType::IIIUp, CellType::IIIDown] {
            assert_eq!(c.count(SubgroupId::Cell(ty)), 1);
        }
    }

    #[test]
    fn class_counts_match_width_table() {
        for level in 2..=4 {
            let c = classify(level).unwrap();
            assert_eq!(c.classes.len(), 26);
            for s in SubgroupId::all() {
                assert_eq!(c.count(s), n_tet(width(s, level).unwrap()), "{s} on level {level}");
            }
        }
    }

    #[test]
    fn xyz_down_face_width_is_one_less_than_intervals() {
        for level in 2..=4 {
            let c = classify(level).unwrap();
            let class = c.get(SubgroupId::Face(FaceType::XyzDown)).unwrap();
            assert_eq!(class.polytope_width(), Some(intervals(level) - 1));
            assert_ne!(class.count(), n_tet(intervals(level) - 2));
        }
    }

    #[test]
    fn frozen_offsets_match_oracle() {
        let c = classify(2).unwrap();
        for class in &c.classes {
            let frozen: Vec<LatticePoint> = class
                .subgroup
                .vertex_offsets()
                .iter()
                .map(|o| o.map(i64::from))
                .collect();
            assert_eq!(class.vertex_offsets(), frozen, "{}", class.subgroup);
        }
    }

    #[test]
    fn artifact_is_hashed() {
        let text = table_artifact().unwrap();
        let (body, last) = text.trim_end().rsplit_once('\n').unwrap();
        let hex = last.strip_prefix("sha256 ").unwrap();
        let digest = Sha256::digest(format!("{body}\n").as_bytes());
        let expected: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(hex, expected);
        assert!(text.contains("face xyz-down | -1 |"));
    }
}
