//! Polygonal and polyhedral cells with their orientation data.
//!
//! Edges are oriented from the lower to the higher vertex id. Face normals come from the loop
//! order (Newell), and face orientations relative to a cell are derived, never read.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{DdrError, Result};
use crate::mesh::Mesh;

pub type Point = Vector3<f64>;

/// Maximal vertex distance to the face plane, relative to the face diameter.
pub const PLANARITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Vertex {
    pub id: usize,
    pub x: Point,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub id: usize,
    /// Cell-local vertex indices, lower global id first.
    pub v: [usize; 2],
    pub x1: Point,
    pub x2: Point,
    pub t: Vector3<f64>,
    pub length: f64,
    pub midpoint: Point,
}

/// An edge as seen from a face.
#[derive(Clone, Debug)]
pub struct FaceEdge {
    /// Cell-local edge index.
    pub edge: usize,
    /// +1 when `t_E` runs against the counter-clockwise boundary of the face.
    pub omega: i8,
    /// In-plane normal `n_FE = n_F × t_E`, so that `(t_E, n_FE, n_F)` is right-handed.
    pub normal: Vector3<f64>,
}

#[derive(Clone, Debug)]
pub struct Face {
    pub id: usize,
    /// Cell-local vertex indices in loop order, counter-clockwise about `normal`.
    pub loop_vertices: Vec<usize>,
    pub loop_points: Vec<Point>,
    /// Cell-local vertex indices sorted by id.
    pub vertices: Vec<usize>,
    /// Sorted by edge id.
    pub edges: Vec<FaceEdge>,
    pub normal: Vector3<f64>,
    /// In-plane frame with `tau[0] × tau[1] = normal`.
    pub tau: [Vector3<f64>; 2],
    pub centroid: Point,
    pub area: f64,
    pub diameter: f64,
}

impl Face {
    /// Frame components of a vector.
    pub fn to_frame(&self, v: &Vector3<f64>) -> [f64; 2] {
        [v.dot(&self.tau[0]), v.dot(&self.tau[1])]
    }

    /// Ambient vector of frame components.
    pub fn from_frame(&self, a: [f64; 2]) -> Vector3<f64> {
        self.tau[0] * a[0] + self.tau[1] * a[1]
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub id: usize,
    /// 2 for a polygon, 3 for a polyhedron.
    pub dim: usize,
    /// Sorted by id.
    pub vertices: Vec<Vertex>,
    /// Sorted by id.
    pub edges: Vec<Edge>,
    /// Sorted by id.
    pub faces: Vec<Face>,
    /// `omega_TF`; +1 when the face normal points out of the cell. Always +1 in 2D.
    pub face_orientation: Vec<i8>,
    pub centroid: Point,
    /// Area (2D) or volume (3D).
    pub measure: f64,
    pub diameter: f64,
    /// Apex of the tetrahedral split used for quadrature.
    pub apex: Point,
}

fn diameter_of(points: &[Point]) -> f64 {
    let mut h: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            h = h.max((p - q).norm());
        }
    }
    h
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2], eps: f64) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let on_segment = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        r[0] >= p[0].min(q[0]) - eps && r[0] <= p[0].max(q[0]) + eps && r[1] >= p[1].min(q[1]) - eps && r[1] <= p[1].max(q[1]) + eps
    };
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)) {
        return true;
    }
    (d1.abs() <= eps && on_segment(c, d, a))
        || (d2.abs() <= eps && on_segment(c, d, b))
        || (d3.abs() <= eps && on_segment(a, b, c))
        || (d4.abs() <= eps && on_segment(a, b, d))
}

/// Global edge ids keyed by sorted vertex pairs.
pub(crate) fn edge_table(mesh: &Mesh) -> Result<HashMap<(usize, usize), usize>> {
    let mut table = HashMap::new();
    match &mesh.edges {
        Some(edges) => {
            for (id, e) in edges.iter().enumerate() {
                let key = (e[0].min(e[1]), e[0].max(e[1]));
                if key.0 == key.1 {
                    return Err(DdrError::DegenerateEdge { edge: id });
                }
                if table.insert(key, id).is_some() {
                    return Err(DdrError::Mesh(format!("edge {id} repeats vertices {key:?}")));
                }
            }
            for (f, face) in mesh.faces.iter().enumerate() {
                for i in 0..face.len() {
                    let (a, b) = (face[i], face[(i + 1) % face.len()]);
                    if !table.contains_key(&(a.min(b), a.max(b))) {
                        return Err(DdrError::Mesh(format!("face {f}: no edge listed between vertices {a} and {b}")));
                    }
                }
            }
        }
        None => {
            let mut pairs = BTreeSet::new();
            for face in &mesh.faces {
                for i in 0..face.len() {
                    let (a, b) = (face[i], face[(i + 1) % face.len()]);
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
            for (id, key) in pairs.into_iter().enumerate() {
                table.insert(key, id);
            }
        }
    }
    Ok(table)
}

/// Builds cell `cell_id` of `mesh` with all derived orientation and metric data.
pub fn load_cell(mesh: &Mesh, cell_id: usize) -> Result<Cell> {
    let face_ids = mesh
        .cells
        .get(cell_id)
        .ok_or(DdrError::NoSuchCell { cell: cell_id, count: mesh.cells.len() })?;
    let mut face_ids: Vec<usize> = face_ids.clone();
    face_ids.sort_unstable();
    if face_ids.windows(2).any(|w| w[0] == w[1]) || face_ids.is_empty() {
        return Err(DdrError::Mesh(format!("cell {cell_id}: empty or repeated face list")));
    }
    for &f in &face_ids {
        if f >= mesh.faces.len() {
            return Err(DdrError::Mesh(format!("cell {cell_id}: face {f} does not exist")));
        }
    }
    let table = edge_table(mesh)?;

    let mut vids = BTreeSet::new();
    let mut eids = BTreeSet::new();
    for &f in &face_ids {
        let lp = &mesh.faces[f];
        if lp.len() < 3 {
            return Err(DdrError::Mesh(format!("face {f} has fewer than 3 vertices")));
        }
        for i in 0..lp.len() {
            let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
            for v in [a, b] {
                if v >= mesh.vertices.len() {
                    return Err(DdrError::Mesh(format!("face {f}: vertex {v} does not exist")));
                }
            }
            vids.insert(a);
            eids.insert(table[&(a.min(b), a.max(b))]);
        }
    }
    let vertices: Vec<Vertex> = vids
        .iter()
        .map(|&id| {
            let x = mesh.vertices[id];
            Vertex { id, x: Point::new(x[0], x[1], x[2]) }
        })
        .collect();
    for v in &vertices {
        if !v.x.iter().all(|c| c.is_finite()) {
            return Err(DdrError::Mesh(format!("vertex {} has non-finite coordinates", v.id)));
        }
    }
    let vloc: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
    let pair_of: HashMap<usize, (usize, usize)> = table.iter().map(|(&k, &id)| (id, k)).collect();
    let all_points: Vec<Point> = vertices.iter().map(|v| v.x).collect();
    let scale = diameter_of(&all_points);

    let mut edges = Vec::new();
    for &id in &eids {
        let (a, b) = pair_of[&id];
        let (x1, x2) = (vertices[vloc[&a]].x, vertices[vloc[&b]].x);
        let length = (x2 - x1).norm();
        if !(length > 1e-13 * scale) {
            return Err(DdrError::DegenerateEdge { edge: id });
        }
        edges.push(Edge { id, v: [vloc[&a], vloc[&b]], x1, x2, t: (x2 - x1) / length, length, midpoint: (x1 + x2) * 0.5 });
    }
    let eloc: HashMap<usize, usize> = edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();

    let mut faces = Vec::new();
    for &f in &face_ids {
        let lp = &mesh.faces[f];
        let loop_vertices: Vec<usize> = lp.iter().map(|v| vloc[v]).collect();
        let mut seen = BTreeSet::new();
        if !loop_vertices.iter().all(|v| seen.insert(*v)) {
            return Err(DdrError::SelfIntersectingFace { face: f });
        }
        let loop_points: Vec<Point> = loop_vertices.iter().map(|&v| vertices[v].x).collect();
        let n = loop_points.len();
        let avg = loop_points.iter().sum::<Point>() / n as f64;
        let mut newell = Vector3::zeros();
        for i in 0..n {
            newell += (loop_points[i] - avg).cross(&(loop_points[(i + 1) % n] - avg));
        }
        let diameter = diameter_of(&loop_points);
        if !(newell.norm() > 1e-14 * diameter * diameter) {
            return Err(DdrError::DegenerateNormal { face: f });
        }
        let normal = newell.normalize();
        let deviation = loop_points.iter().map(|p| (p - avg).dot(&normal).abs()).fold(0.0, f64::max);
        let tolerance = PLANARITY_TOL * diameter;
        if deviation > tolerance {
            return Err(DdrError::NonPlanarFace { face: f, deviation, tolerance });
        }
        let t0 = loop_points[1] - loop_points[0];
        let tau0 = (t0 - normal * t0.dot(&normal)).normalize();
        let tau1 = normal.cross(&tau0);

        let flat: Vec<[f64; 2]> = loop_points.iter().map(|p| [(p - avg).dot(&tau0), (p - avg).dot(&tau1)]).collect();
        let eps = 1e-12 * diameter * diameter;
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(flat[i], flat[(i + 1) % n], flat[j], flat[(j + 1) % n], eps) {
                    return Err(DdrError::SelfIntersectingFace { face: f });
                }
            }
        }

        let mut area = 0.0;
        let mut centroid = Point::zeros();
        for i in 1..n - 1 {
            let (p0, p1, p2) = (loop_points[0], loop_points[i], loop_points[i + 1]);
            let a = 0.5 * (p1 - p0).cross(&(p2 - p0)).dot(&normal);
            area += a;
            centroid += (p0 + p1 + p2) * (a / 3.0);
        }
        centroid /= area;

        let mut fedges = Vec::new();
        for i in 0..n {
            let (a, b) = (lp[i], lp[(i + 1) % n]);
            let id = table[&(a.min(b), a.max(b))];
            let e = eloc[&id];
            let omega = if a < b { -1 } else { 1 };
            fedges.push(FaceEdge { edge: e, omega, normal: normal.cross(&edges[e].t) });
        }
        fedges.sort_by_key(|fe| fe.edge);
        let mut fverts = loop_vertices.clone();
        fverts.sort_unstable();
        faces.push(Face {
            id: f,
            loop_vertices,
            loop_points,
            vertices: fverts,
            edges: fedges,
            normal,
            tau: [tau0, tau1],
            centroid,
            area,
            diameter,
        });
    }

    let interior = mesh.interior_points.as_ref().and_then(|p| p.get(cell_id).copied().flatten());

    if faces.len() == 1 {
        let face = &faces[0];
        return Ok(Cell {
            id: cell_id,
            dim: 2,
            centroid: face.centroid,
            measure: face.area,
            diameter: face.diameter,
            apex: face.centroid,
            vertices,
            edges,
            face_orientation: vec![1],
            faces,
        });
    }

    // Each edge must be shared by exactly two faces.
    let mut edge_faces: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (fi, face) in faces.iter().enumerate() {
        for fe in &face.edges {
            edge_faces.entry(fe.edge).or_default().push(fi);
        }
    }
    for (&e, fs) in &edge_faces {
        if fs.len() != 2 {
            return Err(DdrError::OpenBoundary { cell: cell_id, edge: edges[e].id, count: fs.len() });
        }
    }
    let chi = vertices.len() as i64 - edges.len() as i64 + faces.len() as i64;
    if chi != 2 {
        return Err(DdrError::EulerCharacteristic { cell: cell_id, chi });
    }

    // Consistent orientation: a shared edge must be traversed in opposite directions.
    let omega_fe = |fi: usize, e: usize| -> i8 { faces[fi].edges.iter().find(|fe| fe.edge == e).expect("edge of face").omega };
    let mut flip: Vec<Option<i8>> = vec![None; faces.len()];
    flip[0] = Some(1);
    let mut queue = VecDeque::from([0usize]);
    while let Some(fi) = queue.pop_front() {
        let s = flip[fi].expect("visited");
        for fe in &faces[fi].edges {
            let other = edge_faces[&fe.edge].iter().copied().find(|&g| g != fi).expect("two faces");
            let needed = -s * fe.omega * omega_fe(other, fe.edge);
            match flip[other] {
                None => {
                    flip[other] = Some(needed);
                    queue.push_back(other);
                }
                Some(s2) if s2 != needed => return Err(DdrError::NonOrientable { cell: cell_id }),
                _ => {}
            }
        }
    }
    if flip.iter().any(|s| s.is_none()) {
        return Err(DdrError::Disconnected { cell: cell_id });
    }
    let flip: Vec<i8> = flip.into_iter().map(|s| s.expect("checked")).collect();
    let p0 = all_points.iter().sum::<Point>() / all_points.len() as f64;
    let signed: f64 = faces
        .iter()
        .zip(&flip)
        .map(|(f, &s)| f64::from(s) * f.area * (f.centroid - p0).dot(&f.normal) / 3.0)
        .sum();
    let global: i8 = if signed >= 0.0 { 1 } else { -1 };
    let face_orientation: Vec<i8> = flip.iter().map(|&s| s * global).collect();

    let mut measure = 0.0;
    let mut centroid = Point::zeros();
    for (face, &omega) in faces.iter().zip(&face_orientation) {
        let c = face.centroid;
        let n = face.loop_points.len();
        for i in 0..n {
            let (p, q) = (face.loop_points[i], face.loop_points[(i + 1) % n]);
            let v = f64::from(omega) * (c - p0).dot(&(p - p0).cross(&(q - p0))) / 6.0;
            measure += v;
            centroid += (p0 + c + p + q) * (v / 4.0);
        }
    }
    centroid /= measure;
    let apex = interior.map(|x| Point::new(x[0], x[1], x[2])).unwrap_or(centroid);

    Ok(Cell { id: cell_id, dim: 3, vertices, edges, faces, face_orientation, centroid, measure, diameter: scale, apex })
}

/// In-plane frame of a face: `(tau_1, tau_2, n_F)`.
pub fn face_frame(face: &Face) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    (face.tau[0], face.tau[1], face.normal)
}

/// Outcome of the orientation identities on a cell.
#[derive(Clone, Debug, Serialize)]
pub struct OrientationReport {
    /// `sum_{F ∋ E} omega_TF omega_FE` for each edge (exact integers).
    pub edge_sums: Vec<i64>,
    /// `sum_F sum_E omega_TF omega_FE a_E` for random integer `a_E`.
    pub weighted_sum: i64,
    /// Largest `|(z × n_F)·n_FE + z·t_E|` over faces, edges and random `z`.
    pub frame_defect: f64,
    /// Largest failure of `omega_FE n_FE` to point out of the face, measured at edge midpoints.
    pub outward_defect: f64,
    pub ok: bool,
}

/// Checks the edge cancellation relations and the edge frame identities of a cell.
pub fn check_orientation_identities(cell: &Cell, seed: u64) -> OrientationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<i64> = (0..cell.edges.len()).map(|_| rng.gen_range(-1000..=1000)).collect();
    let mut edge_sums = vec![0i64; cell.edges.len()];
    for (face, &otf) in cell.faces.iter().zip(&cell.face_orientation) {
        for fe in &face.edges {
            edge_sums[fe.edge] += i64::from(otf) * i64::from(fe.omega);
        }
    }
    let weighted_sum: i64 = if cell.dim == 3 { edge_sums.iter().zip(&a).map(|(s, a)| s * a).sum() } else { 0 };
    let mut frame_defect: f64 = 0.0;
    let mut outward_defect: f64 = 0.0;
    for face in &cell.faces {
        for fe in &face.edges {
            let e = &cell.edges[fe.edge];
            for _ in 0..4 {
                let z = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                frame_defect = frame_defect.max((z.cross(&face.normal).dot(&fe.normal) + z.dot(&e.t)).abs());
            }
            // The outward in-plane normal of a counter-clockwise loop is (direction × n_F).
            let pos = face.loop_vertices.iter().position(|&v| v == e.v[0] || v == e.v[1]).expect("vertex");
            let n = face.loop_vertices.len();
            let next = face.loop_vertices[(pos + 1) % n];
            let (from, to) = if next == e.v[0] || next == e.v[1] {
                (face.loop_vertices[pos], next)
            } else {
                (face.loop_vertices[(pos + n - 1) % n], face.loop_vertices[pos])
            };
            let d = (cell.vertices[to].x - cell.vertices[from].x).normalize();
            let outward = d.cross(&face.normal);
            outward_defect = outward_defect.max((outward - fe.normal * f64::from(fe.omega)).norm());
        }
    }
    let sums_ok = cell.dim == 2 || edge_sums.iter().all(|&s| s == 0);
    let ok = sums_ok && weighted_sum == 0 && frame_defect <= 1e-13 && outward_defect <= 1e-13;
    OrientationReport { edge_sums: if cell.dim == 3 { edge_sums } else { vec![] }, weighted_sum, frame_defect, outward_defect, ok }
}

impl Cell {
    /// Copy with `omega_TF` of one face negated (fault injection for negative controls).
    pub fn with_flipped_face_orientation(&self, face: usize) -> Cell {
        let mut c = self.clone();
        c.face_orientation[face] = -c.face_orientation[face];
        c
    }

    /// Copy with `omega_FE` of one face edge negated (fault injection for negative controls).
    pub fn with_flipped_edge_orientation(&self, face: usize, edge: usize) -> Cell {
        let mut c = self.clone();
        c.faces[face].edges[edge].omega = -c.faces[face].edges[edge].omega;
        c
    }

    /// Positions of the vertices, in cell-local order.
    pub fn points(&self) -> Vec<Point> {
        self.vertices.iter().map(|v| v.x).collect()
    }
}
