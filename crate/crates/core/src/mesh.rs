//! JSON mesh documents and a few reference shapes.
//!
//! ```json
//! { "vertices": [[0,0,0], ...], "edges": [[0,1], ...], "faces": [[0,1,2], ...], "cells": [[0,1,2,3]] }
//! ```
//! Ids are 0-based. `edges` is optional and derived when absent. A cell listing a single face is
//! a polygon. The optional `interior_points` array gives, per cell, the apex used to split the
//! cell into tetrahedra for quadrature (`null` selects the centroid).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{load_cell, Cell};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    pub faces: Vec<Vec<usize>>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_points: Option<Vec<Option<[f64; 3]>>>,
}

impl Mesh {
    pub fn from_json(text: &str) -> Result<Mesh> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serializes")
    }

    pub fn load(path: &Path) -> Result<Mesh> {
        Mesh::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn cell(&self, id: usize) -> Result<Cell> {
        load_cell(self, id)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

/// Reference shapes, each a mesh with a single cell.
pub mod shapes {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::Mesh;

    fn polygon(points: &[[f64; 2]]) -> Mesh {
        Mesh {
            vertices: points.iter().map(|p| [p[0], p[1], 0.0]).collect(),
            edges: None,
            faces: vec![(0..points.len()).collect()],
            cells: vec![vec![0]],
            interior_points: None,
        }
    }

    fn solid(vertices: Vec<[f64; 3]>, faces: Vec<Vec<usize>>) -> Mesh {
        let cells = vec![(0..faces.len()).collect()];
        Mesh { vertices, edges: None, faces, cells, interior_points: None }
    }

    pub fn triangle() -> Mesh {
        polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    }

    pub fn square() -> Mesh {
        polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    pub fn rectangle() -> Mesh {
        polygon(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]])
    }

    /// Regular pentagon with circumradius 1.
    pub fn pentagon() -> Mesh {
        let pts: Vec<[f64; 2]> = (0..5)
            .map(|i| {
                let a = PI / 2.0 + 2.0 * PI * i as f64 / 5.0;
                [a.cos(), a.sin()]
            })
            .collect();
        polygon(&pts)
    }

    /// Non-convex L-shaped hexagon.
    pub fn l_hexagon() -> Mesh {
        polygon(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])
    }

    /// Pentagon with radially jittered vertices, still convex.
    pub fn random_pentagon(seed: u64) -> Mesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..5)
            .map(|i| {
                let a = PI / 2.0 + 2.0 * PI * i as f64 / 5.0 + rng.gen_range(-0.2..0.2);
                let r = rng.gen_range(0.8..1.2);
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        polygon(&pts)
    }

    pub fn tetrahedron() -> Mesh {
        solid(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]],
        )
    }

    pub fn cube() -> Mesh {
        let mut v = Vec::new();
        for z in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    v.push([x as f64, y as f64, z as f64]);
                }
            }
        }
        // Loops deliberately mix orientations; orientation is derived.
        solid(
            v,
            vec![
                vec![0, 1, 3, 2],
                vec![4, 5, 7, 6],
                vec![0, 1, 5, 4],
                vec![2, 3, 7, 6],
                vec![0, 2, 6, 4],
                vec![1, 3, 7, 5],
            ],
        )
    }

    pub fn prism() -> Mesh {
        solid(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 1.0],
                [0.0, 1.0, 1.0],
            ],
            vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 1, 4, 3], vec![1, 2, 5, 4], vec![2, 0, 3, 5]],
        )
    }

    /// Non-convex prism over the L-shaped hexagon.
    pub fn l_prism() -> Mesh {
        let base = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        let mut v: Vec<[f64; 3]> = base.iter().map(|p| [p[0], p[1], 0.0]).collect();
        v.extend(base.iter().map(|p| [p[0], p[1], 1.0]));
        let mut faces = vec![(0..6).collect::<Vec<_>>(), (6..12).rev().collect()];
        for i in 0..6 {
            let j = (i + 1) % 6;
            faces.push(vec![i, j, j + 6, i + 6]);
        }
        solid(v, faces)
    }

    /// Truncated pyramid under a random affine map: a hexahedron with planar, non-parallel faces.
    pub fn random_hexahedron(seed: u64) -> Mesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taper: f64 = rng.gen_range(0.1..0.3);
        let mut a = [[0.0; 3]; 3];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.25..0.25);
            }
        }
        let cube = cube();
        let vertices = cube
            .vertices
            .iter()
            .map(|p| {
                let s = 1.0 - taper * p[2];
                let q = [0.5 + (p[0] - 0.5) * s, 0.5 + (p[1] - 0.5) * s, p[2]];
                [0, 1, 2].map(|i| a[i][0] * q[0] + a[i][1] * q[1] + a[i][2] * q[2])
            })
            .collect();
        Mesh { vertices, ..cube }
    }

    /// Shape by name: triangle, square, rectangle, pentagon, hexagon, tetra, cube, hexa, prism, lprism.
    pub fn by_name(name: &str) -> Option<Mesh> {
        Some(match name {
            "triangle" => triangle(),
            "square" => square(),
            "rectangle" => rectangle(),
            "pentagon" => pentagon(),
            "hexagon" | "l-hexagon" => l_hexagon(),
            "tetra" | "tetrahedron" => tetrahedron(),
            "cube" | "hexa" | "hexahedron" => cube(),
            "prism" => prism(),
            "lprism" | "l-prism" => l_prism(),
            _ => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = shapes::prism();
        let back = Mesh::from_json(&m.to_json()).unwrap();
        assert_eq!(back.faces, m.faces);
        assert_eq!(back.cell(0).unwrap().faces.len(), 5);
    }

    #[test]
    fn explicit_edges_are_used() {
        let mut m = shapes::triangle();
        m.edges = Some(vec![[2, 0], [0, 1], [1, 2]]);
        let c = m.cell(0).unwrap();
        let ids: Vec<usize> = c.edges.iter().map(|e| e.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(c.vertices[c.edges[0].v[0]].id, 0);
    }
}
