//! Triangle mesh representation, Wavefront OBJ I/O and mesh-graph adjacency.
//!
//! OBJ is the only interchange format: `v x y z` and triangular `f` lines,
//! 1-based indices. Coordinates are written with 17 significant digits so a
//! save/load round trip reproduces every f64 bit for bit. Normals, texture
//! coordinates and grouping statements are ignored on read and never written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Triangle mesh, coordinates in meters. Face indices are 0-based
/// internally; OBJ I/O converts to and from 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Validates all invariants: finite coordinates, in-range indices and
    /// three distinct corners per face. An empty face list is allowed (point
    /// cloud).
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite: {v:?}")));
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            for &ix in f {
                if ix >= vertices.len() {
                    return Err(Error::FaceIndex { index: ix, count: vertices.len() });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} repeats a vertex index: {f:?}"
                )));
            }
        }
        Ok(Mesh { vertices, faces })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
}

/// Loads an OBJ file (v/f subset, triangles only, 1-based indices).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let coords: Vec<&str> = tok.collect();
                if coords.len() != 3 {
                    return Err(parse(
                        line_no,
                        format!("vertex line needs exactly 3 coordinates, got {}", coords.len()),
                    ));
                }
                let mut v = [0.0; 3];
                for (k, c) in coords.iter().enumerate() {
                    v[k] = c
                        .parse::<f64>()
                        .map_err(|e| parse(line_no, format!("bad coordinate {c:?}: {e}")))?;
                }
                vertices.push(v);
            }
            Some("f") => {
                let idx: Vec<&str> = tok.collect();
                if idx.len() != 3 {
                    return Err(parse(
                        line_no,
                        format!("only triangular faces are supported, got {} corners", idx.len()),
                    ));
                }
                let mut f = [0usize; 3];
                for (k, part) in idx.iter().enumerate() {
                    // `f 1/2/3` style references: only the vertex index is used.
                    let first = part.split('/').next().unwrap_or("");
                    let one_based: i64 = first
                        .parse()
                        .map_err(|e| parse(line_no, format!("bad face index {part:?}: {e}")))?;
                    if one_based < 1 {
                        return Err(parse(
                            line_no,
                            format!("face index must be positive (1-based), got {one_based}"),
                        ));
                    }
                    f[k] = (one_based - 1) as usize;
                }
                faces.push(f);
            }
            // vn/vt/o/g/s/usemtl/mtllib and anything else are skipped.
            _ => {}
        }
    }

    Mesh::new(vertices, faces)
}

/// Saves a mesh as OBJ. Coordinates are printed with `{:.16e}` (17
/// significant digits), which round-trips f64 exactly.
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(mesh.vertices.len() * 80 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]).expect("string write");
    }
    for f in &mesh.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).expect("string write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Vertex adjacency of the mesh graph: `neighbors(i)` is sorted and never
/// contains `i`. Edge (i, j) exists iff some face contains both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn n_vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }
}

pub fn build_adjacency(mesh: &Mesh) -> AdjacencyGraph {
    adjacency_from_faces(&mesh.faces, mesh.vertices.len())
}

/// Adjacency over a bare face list (used for part-local graphs where no full
/// `Mesh` exists).
pub fn adjacency_from_faces(faces: &[[usize; 3]], n_vertices: usize) -> AdjacencyGraph {
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for f in faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    AdjacencyGraph { neighbors }
}
