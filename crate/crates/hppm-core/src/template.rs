//! Part template construction: blend-weight argmax segmentation, segment
//! merging, n-ring dilation and the part neighbor graph.
//!
//! Core vertex sets partition the body; dilation grows each part across the
//! mesh graph so adjacent parts share overlap regions, which later drive
//! fusion and the overlap loss.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{build_adjacency, AdjacencyGraph, Mesh};
use crate::numeric::map_indexed;

/// Skinning weight matrix, one row per vertex, one column per bone.
/// Entries are nonnegative and every row sums to 1 within 1e-6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlendWeightsRaw", into = "BlendWeightsRaw")]
pub struct BlendWeights {
    n_vertices: usize,
    n_bones: usize,
    data: Vec<f64>, // row-major
}

#[derive(Serialize, Deserialize)]
struct BlendWeightsRaw {
    n_vertices: usize,
    n_bones: usize,
    data: Vec<f64>,
}

impl TryFrom<BlendWeightsRaw> for BlendWeights {
    type Error = Error;
    fn try_from(raw: BlendWeightsRaw) -> Result<Self> {
        BlendWeights::new(raw.n_vertices, raw.n_bones, raw.data)
    }
}

impl From<BlendWeights> for BlendWeightsRaw {
    fn from(w: BlendWeights) -> Self {
        BlendWeightsRaw { n_vertices: w.n_vertices, n_bones: w.n_bones, data: w.data }
    }
}

impl BlendWeights {
    pub fn new(n_vertices: usize, n_bones: usize, data: Vec<f64>) -> Result<Self> {
        if n_bones == 0 {
            return Err(Error::Config("blend weights need at least one bone".into()));
        }
        if data.len() != n_vertices * n_bones {
            return Err(Error::SizeMismatch {
                what: "blend weight matrix".into(),
                expected: n_vertices * n_bones,
                got: data.len(),
            });
        }
        for (i, row) in data.chunks(n_bones).enumerate() {
            let mut sum = 0.0;
            for &w in row {
                if w < 0.0 || !w.is_finite() {
                    return Err(Error::Data(format!(
                        "blend weight row {i} has a negative or non-finite entry"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Data(format!(
                    "blend weight row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(BlendWeights { n_vertices, n_bones, data })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_bones(&self) -> usize {
        self.n_bones
    }

    pub fn row(&self, vertex: usize) -> &[f64] {
        &self.data[vertex * self.n_bones..(vertex + 1) * self.n_bones]
    }
}

/// Total map from raw segment index (one per bone) to final part index,
/// plus the part display names. Every part must be the image of at least one
/// segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MergeMapRaw", into = "MergeMapRaw")]
pub struct MergeMap {
    segment_to_part: Vec<usize>,
    part_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct MergeMapRaw {
    segment_to_part: Vec<usize>,
    part_names: Vec<String>,
}

impl TryFrom<MergeMapRaw> for MergeMap {
    type Error = Error;
    fn try_from(raw: MergeMapRaw) -> Result<Self> {
        MergeMap::new(raw.segment_to_part, raw.part_names)
    }
}

impl From<MergeMap> for MergeMapRaw {
    fn from(m: MergeMap) -> Self {
        MergeMapRaw { segment_to_part: m.segment_to_part, part_names: m.part_names }
    }
}

impl MergeMap {
    pub fn new(segment_to_part: Vec<usize>, part_names: Vec<String>) -> Result<Self> {
        let n_parts = part_names.len();
        if n_parts == 0 || segment_to_part.is_empty() {
            return Err(Error::Config("merge map needs at least one segment and one part".into()));
        }
        let mut covered = vec![false; n_parts];
        for (seg, &p) in segment_to_part.iter().enumerate() {
            if p >= n_parts {
                return Err(Error::Config(format!(
                    "segment {seg} maps to part {p}, but only {n_parts} parts are named"
                )));
            }
            covered[p] = true;
        }
        if let Some(p) = covered.iter().position(|&c| !c) {
            return Err(Error::Config(format!(
                "part {p} ({}) is not the image of any segment",
                part_names[p]
            )));
        }
        Ok(MergeMap { segment_to_part, part_names })
    }

    pub fn n_segments(&self) -> usize {
        self.segment_to_part.len()
    }

    pub fn n_parts(&self) -> usize {
        self.part_names.len()
    }

    pub fn part_of(&self, segment: usize) -> Option<usize> {
        self.segment_to_part.get(segment).copied()
    }

    pub fn part_name(&self, part: usize) -> &str {
        &self.part_names[part]
    }

    pub fn part_names(&self) -> &[String] {
        &self.part_names
    }

    /// sha256 of the canonical JSON encoding; stored as template provenance.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("merge map serializes");
        let digest = Sha256::digest(&json);
        let mut hex = String::with_capacity(64);
        for b in digest {
            use std::fmt::Write as _;
            write!(hex, "{b:02x}").expect("string write");
        }
        hex
    }
}

/// Per-vertex argmax over blend weights; ties go to the lowest bone index,
/// so the result is deterministic and independent of evaluation order.
pub fn raw_segment(w: &BlendWeights) -> Vec<usize> {
    (0..w.n_vertices())
        .map(|i| {
            let row = w.row(i);
            let mut best = 0usize;
            for (j, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Composes raw labels with the merge map. Any label outside the map domain
/// is an error.
pub fn merge_segments(labels: &[usize], map: &MergeMap) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|&l| {
            map.part_of(l).ok_or(Error::UnmappedSegment { segment: l, len: map.n_segments() })
        })
        .collect()
}

/// Grows `mask` by `n` rounds of neighbor union: the output contains exactly
/// the vertices within graph distance <= n of the input set.
pub fn dilate_mask(adj: &AdjacencyGraph, mask: &[bool], n: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    let mut frontier: Vec<usize> =
        (0..mask.len()).filter(|&v| mask[v]).collect();
    for _ in 0..n {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in adj.neighbors(v) {
                if !out[u] {
                    out[u] = true;
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

/// One part of the segmented template.
///
/// `core_vertex_ids` is the pre-dilation set (cores partition the body);
/// `global_vertex_ids` adds the dilated fringe. `local_faces` re-index the
/// body faces that lie entirely inside the global set; faces straddling the
/// part boundary are dropped here and restored from body topology at fusion
/// time. `overlap` maps each neighbor part to the sorted global vertex ids
/// shared with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartTemplate {
    pub part_id: usize,
    pub name: String,
    pub global_vertex_ids: Vec<usize>,
    pub core_vertex_ids: Vec<usize>,
    pub local_faces: Vec<[usize; 3]>,
    pub template_vertices: Vec<[f64; 3]>,
    pub overlap: BTreeMap<usize, Vec<usize>>,
}

impl PartTemplate {
    pub fn n_vertices(&self) -> usize {
        self.global_vertex_ids.len()
    }

    /// Local index of a global vertex id, if the part contains it.
    pub fn local_index(&self, global_id: usize) -> Option<usize> {
        self.global_vertex_ids.binary_search(&global_id).ok()
    }

    /// Extracts this part's vertices from a whole-body vertex list.
    pub fn slice_vertices(&self, body_vertices: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
        if let Some(&max_id) = self.global_vertex_ids.last() {
            if max_id >= body_vertices.len() {
                return Err(Error::SizeMismatch {
                    what: format!("body vertices for part {}", self.part_id),
                    expected: max_id + 1,
                    got: body_vertices.len(),
                });
            }
        }
        Ok(self.global_vertex_ids.iter().map(|&g| body_vertices[g]).collect())
    }

    /// Global ids that are in no overlap region of this part.
    pub fn non_overlap_ids(&self) -> Vec<usize> {
        let mut shared: Vec<usize> =
            self.overlap.values().flat_map(|v| v.iter().copied()).collect();
        shared.sort_unstable();
        shared.dedup();
        self.global_vertex_ids
            .iter()
            .copied()
            .filter(|g| shared.binary_search(g).is_err())
            .collect()
    }
}

/// All parts plus the neighbor graph and build provenance. The whole-body
/// topology is kept so fusion can restore faces that straddle part
/// boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HppmTemplateSet {
    pub parts: Vec<PartTemplate>,
    /// Pairs (p, q) with p < q and a nonempty overlap.
    pub neighbors: Vec<(usize, usize)>,
    pub dilation_steps: usize,
    pub merge_map_hash: String,
    pub n_body_vertices: usize,
    pub body_faces: Vec<[usize; 3]>,
}

impl HppmTemplateSet {
    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    /// Sorted global vertex ids shared by parts p and q; empty when the
    /// parts are not neighbors.
    pub fn overlap_region(&self, p: usize, q: usize) -> Result<&[usize]> {
        let n = self.parts.len();
        if p >= n {
            return Err(Error::InvalidPartId { id: p, count: n });
        }
        if q >= n {
            return Err(Error::InvalidPartId { id: q, count: n });
        }
        if p == q {
            return Err(Error::Config("overlap_region needs two distinct parts".into()));
        }
        Ok(self.parts[p].overlap.get(&q).map(|v| v.as_slice()).unwrap_or(&[]))
    }
}

/// Builds the full template set from a body mesh, its blend weights and a
/// merge map, dilating each part `n` steps.
pub fn build_templates(
    body: &Mesh,
    w: &BlendWeights,
    map: &MergeMap,
    n: usize,
) -> Result<HppmTemplateSet> {
    if w.n_vertices() != body.n_vertices() {
        return Err(Error::SizeMismatch {
            what: "blend weight rows vs body vertices".into(),
            expected: body.n_vertices(),
            got: w.n_vertices(),
        });
    }
    let labels = merge_segments(&raw_segment(w), map)?;
    let n_parts = map.n_parts();

    let mut cores: Vec<Vec<usize>> = vec![Vec::new(); n_parts];
    for (v, &p) in labels.iter().enumerate() {
        cores[p].push(v);
    }
    for (p, core) in cores.iter().enumerate() {
        if core.is_empty() {
            return Err(Error::EmptyPart { part: p, name: map.part_name(p).to_string() });
        }
    }

    let adj = build_adjacency(body);
    let globals: Vec<Vec<usize>> = map_indexed(n_parts, |p| {
        let mut mask = vec![false; body.n_vertices()];
        for &v in &cores[p] {
            mask[v] = true;
        }
        let dilated = dilate_mask(&adj, &mask, n);
        (0..body.n_vertices()).filter(|&v| dilated[v]).collect()
    });

    let mut overlaps: Vec<BTreeMap<usize, Vec<usize>>> = vec![BTreeMap::new(); n_parts];
    let mut neighbors = Vec::new();
    for p in 0..n_parts {
        for q in (p + 1)..n_parts {
            let shared = intersect_sorted(&globals[p], &globals[q]);
            if !shared.is_empty() {
                overlaps[p].insert(q, shared.clone());
                overlaps[q].insert(p, shared);
                neighbors.push((p, q));
            }
        }
    }

    let parts: Vec<PartTemplate> = map_indexed(n_parts, |p| {
        let global = &globals[p];
        let mut local_of = vec![usize::MAX; body.n_vertices()];
        for (li, &g) in global.iter().enumerate() {
            local_of[g] = li;
        }
        let local_faces: Vec<[usize; 3]> = body
            .faces
            .iter()
            .filter(|f| f.iter().all(|&v| local_of[v] != usize::MAX))
            .map(|f| [local_of[f[0]], local_of[f[1]], local_of[f[2]]])
            .collect();
        PartTemplate {
            part_id: p,
            name: map.part_name(p).to_string(),
            global_vertex_ids: global.clone(),
            core_vertex_ids: cores[p].clone(),
            local_faces,
            template_vertices: global.iter().map(|&g| body.vertices[g]).collect(),
            overlap: overlaps[p].clone(),
        }
    });

    Ok(HppmTemplateSet {
        parts,
        neighbors,
        dilation_steps: n,
        merge_map_hash: map.hash(),
        n_body_vertices: body.n_vertices(),
        body_faces: body.faces.clone(),
    })
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}
