//! Quadrature rules exact for polynomials on segments, polygons and polyhedra.
//!
//! Simplices use collapsed (Duffy) tensor Gauss-Legendre rules; polygons are fanned from
//! their centroid and polyhedra split into centroid-apex tetrahedra over those fans.

use crate::error::{DdrError, Result};
use crate::geometry::{Cell, Edge, Face, Point};

/// Points and weights exact up to `exact_degree`.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
    pub measure: f64,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    fn empty(exact_degree: usize) -> Self {
        QuadRule { points: vec![], weights: vec![], exact_degree, measure: 0.0 }
    }

    fn append(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
        self.measure += other.measure;
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn points_for(degree: usize) -> usize {
    degree / 2 + 1
}

/// Gauss-Legendre rule on the segment `[a, b]`.
pub fn segment_points(a: &Point, b: &Point, degree: usize) -> QuadRule {
    let (s, w) = gauss_legendre(points_for(degree));
    let len = (b - a).norm();
    QuadRule {
        points: s.iter().map(|&t| a + (b - a) * t).collect(),
        weights: w.iter().map(|&wi| wi * len).collect(),
        exact_degree: degree,
        measure: len,
    }
}

pub fn segment_rule(edge: &Edge, degree: usize) -> QuadRule {
    segment_points(&edge.x1, &edge.x2, degree)
}

/// Collapsed rule on the triangle `(a, b, c)` with weights scaled by `signed_area`.
pub fn triangle_points(a: &Point, b: &Point, c: &Point, signed_area: f64, degree: usize) -> QuadRule {
    let (u, wu) = gauss_legendre(points_for(degree + 1));
    let (v, wv) = gauss_legendre(points_for(degree));
    let mut rule = QuadRule::empty(degree);
    for (ui, wui) in u.iter().zip(&wu) {
        for (vi, wvi) in v.iter().zip(&wv) {
            let xi = *ui;
            let eta = vi * (1.0 - ui);
            rule.points.push(a + (b - a) * xi + (c - a) * eta);
            rule.weights.push(2.0 * signed_area * wui * wvi * (1.0 - ui));
        }
    }
    rule.measure = signed_area;
    rule
}

/// Collapsed rule on the tetrahedron `(a, b, c, d)` with weights scaled by `volume`.
pub fn tetra_points(a: &Point, b: &Point, c: &Point, d: &Point, volume: f64, degree: usize) -> QuadRule {
    let (u, wu) = gauss_legendre(points_for(degree + 2));
    let (v, wv) = gauss_legendre(points_for(degree + 1));
    let (w, ww) = gauss_legendre(points_for(degree));
    let mut rule = QuadRule::empty(degree);
    for (ui, wui) in u.iter().zip(&wu) {
        for (vi, wvi) in v.iter().zip(&wv) {
            for (wi, wwi) in w.iter().zip(&ww) {
                let xi = *ui;
                let eta = vi * (1.0 - ui);
                let zeta = wi * (1.0 - ui) * (1.0 - vi);
                rule.points.push(a + (b - a) * xi + (c - a) * eta + (d - a) * zeta);
                let jac = (1.0 - ui) * (1.0 - ui) * (1.0 - vi);
                rule.weights.push(6.0 * volume * wui * wvi * wwi * jac);
            }
        }
    }
    rule.measure = volume;
    rule
}

/// Fan triangles `(centroid, p_i, p_{i+1})` of a face with their signed areas.
pub fn face_fan(face: &Face) -> Vec<(Point, Point, Point, f64)> {
    let c = face.centroid;
    let n = face.loop_points.len();
    (0..n)
        .map(|i| {
            let p = face.loop_points[i];
            let q = face.loop_points[(i + 1) % n];
            let area = 0.5 * (p - c).cross(&(q - c)).dot(&face.normal);
            (c, p, q, area)
        })
        .collect()
}

/// Rule on a planar face. Fan triangles keep their signed areas, so the rule stays exact
/// when the centroid does not see the whole loop.
pub fn face_rule(face: &Face, degree: usize) -> QuadRule {
    let mut rule = QuadRule::empty(degree);
    for (c, p, q, area) in face_fan(face) {
        if area.abs() <= 1e-15 * face.diameter * face.diameter {
            continue;
        }
        rule.append(triangle_points(&c, &p, &q, area, degree));
    }
    rule
}

/// Rule on a polyhedral cell from tetrahedra joining the apex to the face fans.
/// A 2D cell returns the rule of its single face.
pub fn cell_rule(cell: &Cell, degree: usize) -> Result<QuadRule> {
    if cell.dim == 2 {
        return Ok(face_rule(&cell.faces[0], degree));
    }
    let apex = cell.apex;
    let h3 = cell.diameter.powi(3);
    let mut rule = QuadRule::empty(degree);
    for (face, &omega) in cell.faces.iter().zip(&cell.face_orientation) {
        for (c, p, q, _) in face_fan(face) {
            let det = (c - apex).dot(&(p - apex).cross(&(q - apex)));
            let volume = f64::from(omega) * det / 6.0;
            if volume < -1e-12 * h3 {
                return Err(DdrError::InvertedSubTetrahedron { cell: cell.id, volume });
            }
            if volume.abs() <= 1e-14 * h3 {
                continue;
            }
            rule.append(tetra_points(&apex, &c, &p, &q, volume, degree));
        }
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_moments() {
        let o = Point::zeros();
        let r = triangle_points(&o, &Point::x(), &Point::y(), 0.5, 6);
        // a! b! / (a + b + 2)!
        let s = r.integrate(|x| x[0].powi(2) * x[1].powi(3));
        assert!((s - 2.0 * 6.0 / 5040.0).abs() < 1e-15);
    }

    #[test]
    fn tetra_moments() {
        let o = Point::zeros();
        let r = tetra_points(&o, &Point::x(), &Point::y(), &Point::z(), 1.0 / 6.0, 6);
        let s = r.integrate(|x| x[0] * x[1].powi(2) * x[2].powi(3));
        let expected = 1.0 * 2.0 * 6.0 / (1..=9).map(f64::from).product::<f64>();
        assert!((s - expected).abs() < 1e-16);
    }
}
