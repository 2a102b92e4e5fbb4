//! Marching-cubes isosurface extraction over a scalar field on voxel centers.
//!
//! The per-configuration polygon table is derived by tracing the isoline on
//! each cube face. On faces with two diagonal inside corners the inside corners
//! are kept apart, a rule that depends only on the face so neighboring cubes
//! always agree and the surface is closed. Polygons with more than three
//! vertices are fanned from their vertex centroid, which makes the surface area
//! independent of how the cube corners are numbered.

use std::collections::HashMap;
use std::sync::OnceLock;

/// Cube corner `k` sits at offset `(k & 1, (k >> 1) & 1, (k >> 2) & 1)`.
const fn corner_offset(k: usize) -> [usize; 3] {
    [k & 1, (k >> 1) & 1, (k >> 2) & 1]
}

/// The 12 cube edges as corner pairs.
fn edges() -> &'static [(usize, usize); 12] {
    static EDGES: OnceLock<[(usize, usize); 12]> = OnceLock::new();
    EDGES.get_or_init(|| {
        let mut out = [(0, 0); 12];
        let mut n = 0;
        for a in 0..8 {
            for bit in [1, 2, 4] {
                if a & bit == 0 {
                    out[n] = (a, a | bit);
                    n += 1;
                }
            }
        }
        out
    })
}

fn edge_id(a: usize, b: usize) -> usize {
    let key = (a.min(b), a.max(b));
    edges().iter().position(|&e| e == key).expect("not a cube edge")
}

/// Corners of the 6 faces in cyclic order.
fn faces() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let corner = |cu: usize, cv: usize| (side << axis) | (cu << u) | (cv << v);
            out.push([corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]);
        }
    }
    out
}

/// Closed polygons (as cube edge ids) for each of the 256 inside/outside configurations.
pub fn polygon_table() -> &'static Vec<Vec<Vec<usize>>> {
    static TABLE: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(polygons_for).collect())
}

fn polygons_for(config: usize) -> Vec<Vec<usize>> {
    let inside = |c: usize| config >> c & 1 == 1;
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut link = |a: usize, b: usize| {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    };
    for face in faces() {
        let face_edge = |k: usize| edge_id(face[k], face[(k + 1) % 4]);
        let crossing: Vec<usize> = (0..4).filter(|&k| inside(face[k]) != inside(face[(k + 1) % 4])).collect();
        match crossing.len() {
            0 => {}
            2 => link(face_edge(crossing[0]), face_edge(crossing[1])),
            4 => {
                for k in (0..4).filter(|&k| inside(face[k])) {
                    link(face_edge((k + 3) % 4), face_edge(k));
                }
            }
            _ => unreachable!("a face has an even number of crossings"),
        }
    }
    let mut starts: Vec<usize> = adjacency.keys().copied().collect();
    starts.sort_unstable();
    let mut seen = std::collections::HashSet::new();
    let mut loops = Vec::new();
    for start in starts {
        if seen.contains(&start) {
            continue;
        }
        let mut poly = vec![start];
        seen.insert(start);
        let mut prev = start;
        let mut cur = adjacency[&start][0];
        while cur != start {
            poly.push(cur);
            seen.insert(cur);
            let next = adjacency[&cur].iter().copied().find(|&n| n != prev).unwrap_or(start);
            prev = cur;
            cur = next;
        }
        loops.push(poly);
    }
    loops
}

#[derive(Debug, Clone, Default)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

fn cross_norm(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let x = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

impl Mesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * cross_norm(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }
}

/// Isosurface of `field` (x-fastest, `dims`) at `iso`, with a voxel spacing in mm.
/// Points with `value > iso` are inside. Cubes span neighboring voxel centers;
/// pad the field with outside values to obtain a closed surface.
pub fn triangulate(field: &[f64], dims: [usize; 3], spacing: [f64; 3], iso: f64) -> Mesh {
    let table = polygon_table();
    let idx = |x: usize, y: usize, z: usize| x + dims[0] * (y + dims[1] * z);
    let mut mesh = Mesh::default();
    // Vertices on cube edges are shared between cubes: keyed by (lower voxel, axis).
    let mut shared: HashMap<(usize, usize), usize> = HashMap::new();
    if dims.iter().any(|&d| d < 2) {
        return mesh;
    }
    for z in 0..dims[2] - 1 {
        for y in 0..dims[1] - 1 {
            for x in 0..dims[0] - 1 {
                let mut config = 0;
                let mut vals = [0.0; 8];
                for (k, val) in vals.iter_mut().enumerate() {
                    let o = corner_offset(k);
                    *val = field[idx(x + o[0], y + o[1], z + o[2])];
                    if *val > iso {
                        config |= 1 << k;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                for poly in &table[config] {
                    let mut ids = Vec::with_capacity(poly.len());
                    for &e in poly {
                        let (a, b) = edges()[e];
                        let (oa, ob) = (corner_offset(a), corner_offset(b));
                        let axis = (0..3).find(|&k| oa[k] != ob[k]).unwrap();
                        let key = (idx(x + oa[0], y + oa[1], z + oa[2]), axis);
                        let id = *shared.entry(key).or_insert_with(|| {
                            let t = (iso - vals[a]) / (vals[b] - vals[a]);
                            let p = [0, 1, 2].map(|k| {
                                let base = [x, y, z][k] as f64 + oa[k] as f64;
                                (base + t * (ob[k] as f64 - oa[k] as f64)) * spacing[k]
                            });
                            mesh.vertices.push(p);
                            mesh.vertices.len() - 1
                        });
                        ids.push(id);
                    }
                    if ids.len() == 3 {
                        mesh.triangles.push([ids[0], ids[1], ids[2]]);
                    } else {
                        let m = ids.len() as f64;
                        let mut c = [0.0; 3];
                        for &i in &ids {
                            for k in 0..3 {
                                c[k] += mesh.vertices[i][k] / m;
                            }
                        }
                        mesh.vertices.push(c);
                        let ci = mesh.vertices.len() - 1;
                        for k in 0..ids.len() {
                            mesh.triangles.push([ci, ids[k], ids[(k + 1) % ids.len()]]);
                        }
                    }
                }
            }
        }
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_complement_symmetric_in_size() {
        let t = polygon_table();
        assert!(t[0].is_empty() && t[255].is_empty());
        for c in 1..255 {
            assert!(!t[c].is_empty(), "config {c}");
            let verts: usize = t[c].iter().map(Vec::len).sum();
            let crossing = edges().iter().filter(|&&(a, b)| (c >> a & 1) != (c >> b & 1)).count();
            assert_eq!(verts, crossing, "config {c}");
        }
    }

    #[test]
    fn single_corner_is_one_triangle() {
        let mut p = polygon_table()[1].clone();
        assert_eq!(p.len(), 1);
        p[0].sort_unstable();
        // the three edges leaving corner 0
        assert_eq!(p[0], vec![0, 1, 2]);
    }

    #[test]
    fn ambiguous_face_splits_corners() {
        // corners 0 and 3 share the z = 0 face diagonally
        let polys = &polygon_table()[0b1001];
        assert_eq!(polys.len(), 2);
        assert!(polys.iter().all(|p| p.len() == 3));
    }
}
