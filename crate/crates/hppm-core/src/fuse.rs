//! Fusing decoded parts into one mesh with the gradual connecting rule.
//!
//! Each vertex shared by two visible adjacent parts has two decoded copies;
//! the fused vertex is their weighted average with weights proportional to
//! the opposite part's topology distance d (edge count to the nearest
//! non-overlap vertex of that part): v = (v1*d2 + v2*d1)/(d1 + d2). Deep
//! inside part 1's overlap region d1 is large, so part 2's copy dominates
//! and the blend hands over smoothly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::adjacency_from_faces;
use crate::template::{HppmTemplateSet, PartTemplate};

/// Distance value for overlap vertices with no reachable non-overlap vertex.
pub const UNREACHABLE: u32 = u32::MAX;

/// Per-part shortest edge-count distances from each overlap vertex (keyed by
/// whole-body template id) to the part's nearest non-overlap vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDistances {
    pub part_id: usize,
    pub distances: BTreeMap<usize, u32>,
}

/// Multi-source BFS over the part's local mesh edges, sourced at every
/// non-overlap vertex. Overlap vertices unreachable from any source get the
/// sentinel; every reachable overlap vertex has d >= 1.
pub fn topology_distances(template: &PartTemplate) -> TopologyDistances {
    let n = template.n_vertices();
    let non_overlap = template.non_overlap_ids();
    let adjacency = adjacency_from_faces(&template.local_faces, n);

    let mut dist = vec![UNREACHABLE; n];
    let mut frontier = Vec::new();
    for &gid in &non_overlap {
        let li = template.local_index(gid).expect("non-overlap id is in the template");
        dist[li] = 0;
        frontier.push(li);
    }
    let mut depth = 0u32;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for &v in &frontier {
            for &nb in adjacency.neighbors(v) {
                if dist[nb] == UNREACHABLE {
                    dist[nb] = depth;
                    next.push(nb);
                }
            }
        }
        frontier = next;
    }

    let mut distances = BTreeMap::new();
    for ids in template.overlap.values() {
        for &gid in ids {
            let li = template.local_index(gid).expect("overlap id is in the template");
            distances.insert(gid, dist[li]);
        }
    }
    TopologyDistances { part_id: template.part_id, distances }
}

/// Where a fused vertex came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VertexProvenance {
    Single { part_id: usize },
    Blended { parts: [usize; 2], weights: [f64; 2] },
}

/// Fusion result, indexed by whole-body template vertex id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedMesh {
    /// Emitted whole-body template ids, strictly ascending; `vertices[i]`
    /// and `provenance[i]` belong to `vertex_ids[i]`.
    pub vertex_ids: Vec<usize>,
    pub vertices: Vec<[f64; 3]>,
    /// Whole-body template faces fully covered by emitted vertices,
    /// re-indexed into `vertices`.
    pub faces: Vec<[usize; 3]>,
    pub provenance: Vec<VertexProvenance>,
}

impl FusedMesh {
    pub fn position_of(&self, template_vertex_id: usize) -> Option<[f64; 3]> {
        self.vertex_ids
            .binary_search(&template_vertex_id)
            .ok()
            .map(|i| self.vertices[i])
    }
}

/// Connects decoded parts into one mesh.
///
/// `templates`, `decoded`, and `visibility` are indexed by part; decoded
/// vertex counts are only checked for visible parts. Faces are restored from
/// the whole-body topology wherever all three corners are present, so the
/// output is one mesh rather than disjoint patches.
pub fn gradual_connect(
    templates: &[PartTemplate],
    decoded: &[Vec<[f64; 3]>],
    visibility: &[bool],
    body_faces: &[[usize; 3]],
    distances: &[TopologyDistances],
) -> Result<FusedMesh> {
    if decoded.len() != templates.len() || visibility.len() != templates.len() {
        return Err(Error::SizeMismatch {
            what: "fusion part arrays".into(),
            expected: templates.len(),
            got: decoded.len().min(visibility.len()),
        });
    }
    if distances.len() != templates.len() {
        return Err(Error::SizeMismatch {
            what: "topology distance sets".into(),
            expected: templates.len(),
            got: distances.len(),
        });
    }
    if !visibility.iter().any(|&v| v) {
        return Err(Error::NoVisiblePart);
    }

    // Owners of each template vertex id among visible parts.
    let mut owners: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new(); // gid -> (part, local)
    for (p, template) in templates.iter().enumerate() {
        if !visibility[p] {
            continue;
        }
        if decoded[p].len() != template.n_vertices() {
            return Err(Error::SizeMismatch {
                what: format!("decoded vertex count for part {p}"),
                expected: template.n_vertices(),
                got: decoded[p].len(),
            });
        }
        for (li, &gid) in template.global_vertex_ids.iter().enumerate() {
            owners.entry(gid).or_default().push((p, li));
        }
    }

    let mut vertex_ids = Vec::with_capacity(owners.len());
    let mut vertices = Vec::with_capacity(owners.len());
    let mut provenance = Vec::with_capacity(owners.len());
    for (&gid, own) in &owners {
        match own.as_slice() {
            [(p, li)] => {
                vertex_ids.push(gid);
                vertices.push(decoded[*p][*li]);
                provenance.push(VertexProvenance::Single { part_id: *p });
            }
            [(p1, l1), (p2, l2)] => {
                let a = decoded[*p1][*l1];
                let b = decoded[*p2][*l2];
                let d1 = *distances[*p1].distances.get(&gid).unwrap_or(&UNREACHABLE);
                let d2 = *distances[*p2].distances.get(&gid).unwrap_or(&UNREACHABLE);
                let (w1, w2) = blend_weights(gid, d1, d2);
                // Agreeing copies pass through untouched so exact inputs
                // fuse exactly.
                let v = if a == b {
                    a
                } else {
                    [
                        w1 * a[0] + w2 * b[0],
                        w1 * a[1] + w2 * b[1],
                        w1 * a[2] + w2 * b[2],
                    ]
                };
                vertex_ids.push(gid);
                vertices.push(v);
                provenance.push(VertexProvenance::Blended {
                    parts: [*p1, *p2],
                    weights: [w1, w2],
                });
            }
            more => {
                let parts: Vec<usize> = more.iter().map(|(p, _)| *p).collect();
                return Err(Error::Data(format!(
                    "template vertex {gid} covered by {} visible parts {parts:?}; \
                     pairwise overlaps support at most 2",
                    more.len()
                )));
            }
        }
    }

    let mut faces = Vec::new();
    for face in body_faces {
        let mapped: Option<Vec<usize>> = face
            .iter()
            .map(|gid| vertex_ids.binary_search(gid).ok())
            .collect();
        if let Some(m) = mapped {
            faces.push([m[0], m[1], m[2]]);
        }
    }

    Ok(FusedMesh { vertex_ids, vertices, faces, provenance })
}

/// Weight of part-1's copy is d2/(d1+d2): the copy belonging to the part
/// whose own boundary is nearer gets the smaller weight, handing the vertex
/// over to the part it sits deeper in.
fn blend_weights(gid: usize, d1: u32, d2: u32) -> (f64, f64) {
    match (d1 == UNREACHABLE, d2 == UNREACHABLE) {
        (true, true) => {
            log::warn!("overlap vertex {gid}: both topology distances unreachable, averaging");
            (0.5, 0.5)
        }
        // d1 unreachable: part 1's copy is unboundedly deep, part 2 wins.
        (true, false) => (0.0, 1.0),
        (false, true) => (1.0, 0.0),
        (false, false) => {
            let s = d1 as f64 + d2 as f64;
            (d2 as f64 / s, d1 as f64 / s)
        }
    }
}

/// Gap in one overlap pair: distance between the two decoded copies of a
/// shared template vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapGap {
    pub vertex_id: usize,
    pub parts: [usize; 2],
    pub gap_m: f64,
}

/// Distances between the two copies of every vertex shared by a visible
/// adjacent pair; diagnostic for how much fusion will move vertices.
pub fn overlap_residual(
    templates: &HppmTemplateSet,
    decoded: &[Vec<[f64; 3]>],
    visibility: &[bool],
) -> Result<Vec<OverlapGap>> {
    if decoded.len() != templates.n_parts() || visibility.len() != templates.n_parts() {
        return Err(Error::SizeMismatch {
            what: "overlap residual part arrays".into(),
            expected: templates.n_parts(),
            got: decoded.len().min(visibility.len()),
        });
    }
    let mut gaps = Vec::new();
    for &(p, q) in &templates.neighbors {
        if !(visibility[p] && visibility[q]) {
            continue;
        }
        for &gid in templates.overlap_region(p, q)? {
            let lp = templates.parts[p].local_index(gid).expect("overlap id in part");
            let lq = templates.parts[q].local_index(gid).expect("overlap id in part");
            let a = decoded[p][lp];
            let b = decoded[q][lq];
            gaps.push(OverlapGap {
                vertex_id: gid,
                parts: [p, q],
                gap_m: crate::numeric::dist3(a, b),
            });
        }
    }
    Ok(gaps)
}

/// Caches per-part topology distances so repeated fusions skip the BFS.
pub struct Fuser<'a> {
    templates: &'a HppmTemplateSet,
    distances: Vec<TopologyDistances>,
}

impl<'a> Fuser<'a> {
    pub fn new(templates: &'a HppmTemplateSet) -> Self {
        let distances = templates.parts.iter().map(topology_distances).collect();
        Fuser { templates, distances }
    }

    pub fn distances(&self) -> &[TopologyDistances] {
        &self.distances
    }

    pub fn fuse(&self, decoded: &[Vec<[f64; 3]>], visibility: &[bool]) -> Result<FusedMesh> {
        gradual_connect(
            &self.templates.parts,
            decoded,
            visibility,
            &self.templates.body_faces,
            &self.distances,
        )
    }
}
