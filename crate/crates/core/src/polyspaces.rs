//! Orthonormal polynomial bases, differential operators between them, the subspaces
//! G, G⊥, R, R⊥, and continuous piecewise-polynomial trace spaces.
//!
//! Bases are built from shifted and scaled monomials ordered by total degree and orthonormalized
//! by Cholesky, so the first `dim P^m` functions of a basis span `P^m`. Projection onto a lower
//! degree is therefore truncation of coefficients. Vector-valued coefficients are stored
//! component-major: index `c * n + j` is component `c` of scalar basis function `j`.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::Serialize;

use crate::error::{DdrError, Result};
use crate::geometry::{Cell, Face, Point};
use crate::linalg;
use crate::quadrature::{self, QuadRule};

/// `dim P^degree` in `nvars` variables; zero for negative degrees.
pub fn poly_dim(nvars: usize, degree: i32) -> usize {
    if degree < 0 {
        return 0;
    }
    let d = degree as usize;
    match nvars {
        0 => 1,
        1 => d + 1,
        2 => (d + 1) * (d + 2) / 2,
        3 => (d + 1) * (d + 2) * (d + 3) / 6,
        _ => panic!("at most three variables"),
    }
}

/// Exponents of all monomials of total degree at most `degree`, ordered by total degree.
pub fn exponents(nvars: usize, degree: i32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for d in 0..=degree.max(-1) {
        let d = d as u32;
        match nvars {
            1 => out.push([d, 0, 0]),
            2 => (0..=d).rev().for_each(|a| out.push([a, d - a, 0])),
            3 => {
                for a in (0..=d).rev() {
                    for b in (0..=d - a).rev() {
                        out.push([a, b, d - a - b]);
                    }
                }
            }
            _ => panic!("one to three variables"),
        }
    }
    out
}

/// Affine local coordinates `xi_i = (x - origin)·axes_i / scale`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub origin: Point,
    pub axes: Vec<Vector3<f64>>,
    pub scale: f64,
}

impl Frame {
    pub fn local(&self, x: &Point) -> [f64; 3] {
        let mut xi = [0.0; 3];
        for (i, a) in self.axes.iter().enumerate() {
            xi[i] = (x - self.origin).dot(a) / self.scale;
        }
        xi
    }
}

/// Orthonormal basis of `P^degree` on an edge, a face or a cell.
#[derive(Clone, Debug)]
pub struct PolyBasis {
    frame: Frame,
    degree: i32,
    exps: Vec<[u32; 3]>,
    /// Monomial-to-basis coefficients (`exps.len() × dim`), upper triangular.
    coeffs: DMatrix<f64>,
}

impl PolyBasis {
    /// Orthonormalizes the scaled monomials of `frame` against `rule`.
    pub fn build(frame: Frame, degree: i32, rule: &QuadRule, what: &str) -> Result<PolyBasis> {
        let nvars = frame.axes.len();
        let exps = exponents(nvars, degree);
        let n = exps.len();
        let mut basis = PolyBasis { frame, degree, exps, coeffs: DMatrix::identity(n, n) };
        if n == 0 {
            return Ok(basis);
        }
        for _pass in 0..2 {
            let b = basis.tabulate(&rule.points);
            let mut wb = b.clone();
            for (mut row, w) in wb.row_iter_mut().zip(&rule.weights) {
                row *= *w;
            }
            let gram = b.transpose() * wb;
            let gram = (&gram + gram.transpose()) * 0.5;
            let chol = gram.clone().cholesky().ok_or_else(|| DdrError::SingularGram {
                what: what.to_string(),
                condition: linalg::condition(&gram),
            })?;
            let l = chol.l();
            let dmax = l.diagonal().iter().copied().fold(0.0, f64::max);
            let dmin = l.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
            let condition = (dmax / dmin).powi(2);
            if !(condition < 1e14) {
                return Err(DdrError::SingularGram { what: what.to_string(), condition });
            }
            let inv = l
                .transpose()
                .solve_upper_triangular(&DMatrix::identity(n, n))
                .ok_or_else(|| DdrError::SingularGram { what: what.to_string(), condition })?;
            basis.coeffs = &basis.coeffs * inv;
        }
        Ok(basis)
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.frame.axes.len()
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    /// Size of the prefix spanning `P^degree`.
    pub fn dim_of(&self, degree: i32) -> usize {
        assert!(degree <= self.degree, "degree {degree} exceeds basis degree {}", self.degree);
        poly_dim(self.nvars(), degree)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn monomial_exponents(&self) -> &[[u32; 3]] {
        &self.exps
    }

    /// Column `j` holds the scaled-monomial coefficients of basis function `j`.
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    fn monomials(&self, x: &Point, with_derivatives: bool) -> (Vec<f64>, [Vec<f64>; 3]) {
        let nv = self.nvars();
        let xi = self.frame.local(x);
        let d = self.degree.max(0) as usize;
        let mut pow = [[1.0; 32]; 3];
        for v in 0..nv {
            for p in 1..=d {
                pow[v][p] = pow[v][p - 1] * xi[v];
            }
        }
        let vals: Vec<f64> = self.exps.iter().map(|e| (0..nv).map(|v| pow[v][e[v] as usize]).product()).collect();
        let mut ders: [Vec<f64>; 3] = Default::default();
        if with_derivatives {
            for (v, der) in ders.iter_mut().enumerate().take(nv) {
                *der = self
                    .exps
                    .iter()
                    .map(|e| {
                        if e[v] == 0 {
                            return 0.0;
                        }
                        let mut p = f64::from(e[v]) * pow[v][e[v] as usize - 1];
                        for w in (0..nv).filter(|&w| w != v) {
                            p *= pow[w][e[w] as usize];
                        }
                        p / self.frame.scale
                    })
                    .collect();
            }
        }
        (vals, ders)
    }

    pub fn eval(&self, x: &Point) -> DVector<f64> {
        let (m, _) = self.monomials(x, false);
        self.coeffs.tr_mul(&DVector::from_vec(m))
    }

    /// Values at `points` (`points × dim`).
    pub fn tabulate(&self, points: &[Point]) -> DMatrix<f64> {
        let n = self.exps.len();
        let mut m = DMatrix::zeros(points.len(), n);
        for (i, x) in points.iter().enumerate() {
            let (vals, _) = self.monomials(x, false);
            for (j, v) in vals.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m * &self.coeffs
    }

    /// Derivatives along each frame axis at `points`, one `points × dim` matrix per axis.
    pub fn tabulate_grad(&self, points: &[Point]) -> Vec<DMatrix<f64>> {
        let n = self.exps.len();
        let nv = self.nvars();
        let mut m = vec![DMatrix::zeros(points.len(), n); nv];
        for (i, x) in points.iter().enumerate() {
            let (_, ders) = self.monomials(x, true);
            for v in 0..nv {
                for (j, d) in ders[v].iter().enumerate() {
                    m[v][(i, j)] = *d;
                }
            }
        }
        m.into_iter().map(|mv| mv * &self.coeffs).collect()
    }
}

/// A basis together with a quadrature rule and its tabulation on that rule.
#[derive(Clone, Debug)]
pub struct DomainSpace {
    pub basis: PolyBasis,
    pub rule: QuadRule,
    pub vals: DMatrix<f64>,
    /// Values scaled by the quadrature weights.
    pub wvals: DMatrix<f64>,
    pub grads: Vec<DMatrix<f64>>,
}

impl DomainSpace {
    pub fn new(frame: Frame, degree: i32, rule: QuadRule, what: &str) -> Result<DomainSpace> {
        let basis = PolyBasis::build(frame, degree, &rule, what)?;
        let vals = basis.tabulate(&rule.points);
        let mut wvals = vals.clone();
        for (mut row, w) in wvals.row_iter_mut().zip(&rule.weights) {
            row *= *w;
        }
        let grads = basis.tabulate_grad(&rule.points);
        Ok(DomainSpace { basis, rule, vals, wvals, grads })
    }

    /// Space on an edge: frame at the midpoint along `t_E`.
    pub fn edge(cell: &Cell, edge: usize, degree: i32, rule_degree: usize) -> Result<DomainSpace> {
        let e = &cell.edges[edge];
        let frame = Frame { origin: e.midpoint, axes: vec![e.t], scale: e.length };
        DomainSpace::new(frame, degree, quadrature::segment_rule(e, rule_degree), &format!("edge {}", e.id))
    }

    /// Space on a face: frame at the centroid along `(tau_1, tau_2)`.
    pub fn face(face: &Face, degree: i32, rule_degree: usize) -> Result<DomainSpace> {
        let frame = Frame { origin: face.centroid, axes: face.tau.to_vec(), scale: face.diameter };
        DomainSpace::new(frame, degree, quadrature::face_rule(face, rule_degree), &format!("face {}", face.id))
    }

    /// Space on a polyhedral cell: frame at the centroid along the coordinate axes.
    pub fn cell(cell: &Cell, degree: i32, rule_degree: usize) -> Result<DomainSpace> {
        let frame = Frame { origin: cell.centroid, axes: vec![Vector3::x(), Vector3::y(), Vector3::z()], scale: cell.diameter };
        DomainSpace::new(frame, degree, quadrature::cell_rule(cell, rule_degree)?, &format!("cell {}", cell.id))
    }

    pub fn nvars(&self) -> usize {
        self.basis.nvars()
    }

    /// `dim P^degree` on this domain.
    pub fn n(&self, degree: i32) -> usize {
        self.basis.dim_of(degree)
    }

    /// Coefficients of the L2 projection of `f` onto `P^degree`.
    pub fn project(&self, degree: i32, f: impl Fn(&Point) -> f64) -> DVector<f64> {
        let fv = DVector::from_iterator(self.rule.len(), self.rule.points.iter().map(f));
        self.wvals.columns(0, self.n(degree)).tr_mul(&fv)
    }

    /// Coefficients (component-major) of the projection of a vector field given in frame components.
    pub fn project_vector(&self, degree: i32, ncomp: usize, f: impl Fn(&Point) -> Vec<f64>) -> DVector<f64> {
        let n = self.n(degree);
        let vals: Vec<Vec<f64>> = self.rule.points.iter().map(f).collect();
        let mut out = DVector::zeros(ncomp * n);
        for c in 0..ncomp {
            let fv = DVector::from_iterator(vals.len(), vals.iter().map(|v| v[c]));
            out.rows_mut(c * n, n).copy_from(&self.wvals.columns(0, n).tr_mul(&fv));
        }
        out
    }

    /// `∫ φ_j ∂_a φ_i` for `j < dim P^to`, `i < dim P^from`.
    pub fn derivative_block(&self, axis: usize, from: i32, to: i32) -> DMatrix<f64> {
        let (nf, nt) = (self.n(from), self.n(to));
        self.wvals.columns(0, nt).tr_mul(&self.grads[axis].columns(0, nf))
    }

    /// Gradient `P^from -> (P^to)^nvars`.
    pub fn grad_matrix(&self, from: i32, to: i32) -> DMatrix<f64> {
        let (nf, nt, nv) = (self.n(from), self.n(to), self.nvars());
        let mut m = DMatrix::zeros(nv * nt, nf);
        for c in 0..nv {
            m.view_mut((c * nt, 0), (nt, nf)).copy_from(&self.derivative_block(c, from, to));
        }
        m
    }

    /// Divergence `(P^from)^nvars -> P^to`.
    pub fn div_matrix(&self, from: i32, to: i32) -> DMatrix<f64> {
        let (nf, nt, nv) = (self.n(from), self.n(to), self.nvars());
        let mut m = DMatrix::zeros(nt, nv * nf);
        for c in 0..nv {
            m.view_mut((0, c * nf), (nt, nf)).copy_from(&self.derivative_block(c, from, to));
        }
        m
    }

    /// Face vector curl `vrot r = (∂_2 r, -∂_1 r)`, `P^from -> (P^to)^2`.
    pub fn vrot_matrix(&self, from: i32, to: i32) -> DMatrix<f64> {
        assert_eq!(self.nvars(), 2);
        let (nf, nt) = (self.n(from), self.n(to));
        let mut m = DMatrix::zeros(2 * nt, nf);
        m.view_mut((0, 0), (nt, nf)).copy_from(&self.derivative_block(1, from, to));
        m.view_mut((nt, 0), (nt, nf)).copy_from(&(-self.derivative_block(0, from, to)));
        m
    }

    /// Face scalar curl `rot v = ∂_1 v_2 - ∂_2 v_1`, `(P^from)^2 -> P^to`.
    pub fn rot_matrix(&self, from: i32, to: i32) -> DMatrix<f64> {
        assert_eq!(self.nvars(), 2);
        let (nf, nt) = (self.n(from), self.n(to));
        let mut m = DMatrix::zeros(nt, 2 * nf);
        m.view_mut((0, 0), (nt, nf)).copy_from(&(-self.derivative_block(1, from, to)));
        m.view_mut((0, nf), (nt, nf)).copy_from(&self.derivative_block(0, from, to));
        m
    }

    /// Curl `(P^from)^3 -> (P^to)^3`.
    pub fn curl_matrix(&self, from: i32, to: i32) -> DMatrix<f64> {
        assert_eq!(self.nvars(), 3);
        let (nf, nt) = (self.n(from), self.n(to));
        let d: Vec<DMatrix<f64>> = (0..3).map(|a| self.derivative_block(a, from, to)).collect();
        let mut m = DMatrix::zeros(3 * nt, 3 * nf);
        // (curl v)_x = ∂_y v_z - ∂_z v_y, and cyclically.
        for (row, c_plus, a_plus, c_minus, a_minus) in [(0, 2, 1, 1, 2), (1, 0, 2, 2, 0), (2, 1, 0, 0, 1)] {
            m.view_mut((row * nt, c_plus * nf), (nt, nf)).copy_from(&d[a_plus]);
            m.view_mut((row * nt, c_minus * nf), (nt, nf)).copy_from(&(-&d[a_minus]));
        }
        m
    }

    /// Gram matrix of the basis on its own rule.
    pub fn gram(&self) -> DMatrix<f64> {
        self.vals.tr_mul(&self.wvals)
    }
}

/// Maps vector coefficients between degrees: truncation (the L2 projection) or zero padding.
pub fn resize_coords(ncomp: usize, n_from: usize, n_to: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(ncomp * n_to, ncomp * n_from);
    for c in 0..ncomp {
        for j in 0..n_from.min(n_to) {
            m[(c * n_to + j, c * n_from + j)] = 1.0;
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SubspaceTag {
    G,
    GPerp,
    R,
    RPerp,
    P0,
}

/// Orthonormal coefficient columns spanning a subspace of `(P^degree)^ncomp`.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub tag: SubspaceTag,
    pub degree: i32,
    pub ncomp: usize,
    pub basis: DMatrix<f64>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Coordinates in this subspace of the projection of ambient coefficients.
    pub fn project(&self, coords: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(coords)
    }
}

/// G^ℓ, G^ℓ⊥, R^ℓ, R^ℓ⊥ inside `(P^ℓ)^n` of a face (n = 2) or a cell (n = 3).
#[derive(Clone, Debug)]
pub struct Subspaces {
    pub g: Subspace,
    pub g_perp: Subspace,
    pub r: Subspace,
    pub r_perp: Subspace,
}

fn checked(tag: SubspaceTag, degree: i32, ncomp: usize, basis: DMatrix<f64>, expected: usize, space: String) -> Result<Subspace> {
    if basis.ncols() != expected {
        return Err(DdrError::RankMismatch { space, rank: basis.ncols(), expected });
    }
    Ok(Subspace { tag, degree, ncomp, basis })
}

fn drop_first_column(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        m
    } else {
        m.remove_column(0)
    }
}

/// Builds the four subspaces of degree `ell` on a face or a cell space.
pub fn build_subspaces(space: &DomainSpace, ell: i32, tol: f64) -> Result<Subspaces> {
    let nv = space.nvars();
    let n = |d: i32| poly_dim(nv, d);
    let ambient = nv * n(ell);
    let (g_gen, r_gen, r_dim) = match nv {
        2 => (drop_first_column(space.grad_matrix(ell + 1, ell)), drop_first_column(space.vrot_matrix(ell + 1, ell)), n(ell + 1).saturating_sub(1)),
        3 => (drop_first_column(space.grad_matrix(ell + 1, ell)), space.curl_matrix(ell + 1, ell), (3 * n(ell)).saturating_sub(n(ell - 1))),
        _ => panic!("subspaces live on faces and cells"),
    };
    let g_dim = n(ell + 1).saturating_sub(1);
    let g = checked(SubspaceTag::G, ell, nv, linalg::range(&g_gen, tol), g_dim, format!("G^{ell}"))?;
    let r = checked(SubspaceTag::R, ell, nv, linalg::range(&r_gen, tol), r_dim, format!("R^{ell}"))?;
    let g_perp = checked(SubspaceTag::GPerp, ell, nv, linalg::complement(&g.basis), ambient - g_dim, format!("G^{ell}⊥"))?;
    let r_perp = checked(SubspaceTag::RPerp, ell, nv, linalg::complement(&r.basis), ambient - r_dim, format!("R^{ell}⊥"))?;
    Ok(Subspaces { g, g_perp, r, r_perp })
}

/// R^ℓ (or G^ℓ when `gradient`) of a face or cell expressed inside `(P^m)^n` with `m ≥ ℓ`.
pub fn image_in(space: &DomainSpace, ell: i32, m: i32, gradient: bool, tol: f64) -> Result<Subspace> {
    let nv = space.nvars();
    let n = |d: i32| poly_dim(nv, d);
    let (gen, dim, tag) = if gradient {
        (drop_first_column(space.grad_matrix(ell + 1, m)), n(ell + 1).saturating_sub(1), SubspaceTag::G)
    } else if nv == 2 {
        (drop_first_column(space.vrot_matrix(ell + 1, m)), n(ell + 1).saturating_sub(1), SubspaceTag::R)
    } else {
        (space.curl_matrix(ell + 1, m), (3 * n(ell)).saturating_sub(n(ell - 1)), SubspaceTag::R)
    };
    checked(tag, ell, nv, linalg::range(&gen, tol), dim, format!("{tag:?}^{ell} in degree {m}"))
}

/// Continuous piecewise `P^{k+1}` functions on a set of edges (a face boundary or a cell skeleton),
/// parametrized by `k` moments per edge against `P^{k-1}(E)` followed by one value per vertex.
#[derive(Clone, Debug)]
pub struct TraceBasis {
    pub k: usize,
    pub edges: Vec<TraceEdge>,
    pub nverts: usize,
}

#[derive(Clone, Debug)]
pub struct TraceEdge {
    /// Positions of the endpoints `x_{E,1}`, `x_{E,2}` in the trace vertex list.
    pub v: [usize; 2],
    /// Degrees of freedom to `P^{k+1}(E)` coefficients, `(k + 2) × ndofs`.
    pub to_edge: DMatrix<f64>,
}

impl TraceBasis {
    /// `edges[i]` is the edge space (degree ≥ k+1) of trace edge `i` and `ends[i]` its endpoints.
    pub fn build(k: usize, edges: &[&DomainSpace], ends: &[[usize; 2]], points: &[Point]) -> Result<TraceBasis> {
        let ne = edges.len();
        let nverts = points.len();
        let ndofs = k * ne + nverts;
        // Connectivity of the boundary graph.
        let mut comp: Vec<usize> = (0..nverts).collect();
        fn root(c: &mut Vec<usize>, mut i: usize) -> usize {
            while c[i] != i {
                c[i] = c[c[i]];
                i = c[i];
            }
            i
        }
        for e in ends {
            let (a, b) = (root(&mut comp, e[0]), root(&mut comp, e[1]));
            comp[a] = b;
        }
        let r0 = root(&mut comp, 0);
        if (0..nverts).any(|i| root(&mut comp, i) != r0) {
            return Err(DdrError::Mesh("trace boundary graph is disconnected".into()));
        }
        let mut out = Vec::with_capacity(ne);
        for (i, (space, end)) in edges.iter().zip(ends).enumerate() {
            let nb = k + 2;
            let phi1 = space.basis.eval(&points[end[0]]);
            let phi2 = space.basis.eval(&points[end[1]]);
            let mut to_edge = DMatrix::zeros(nb, ndofs);
            for j in 0..k {
                to_edge[(j, i * k + j)] = 1.0;
            }
            let m = DMatrix::from_row_slice(2, 2, &[phi1[k], phi1[k + 1], phi2[k], phi2[k + 1]]);
            let minv = m.try_inverse().ok_or_else(|| DdrError::SingularSystem { what: "trace end values".into(), condition: f64::INFINITY })?;
            let mut rhs = DMatrix::zeros(2, ndofs);
            rhs[(0, k * ne + end[0])] = 1.0;
            rhs[(1, k * ne + end[1])] = 1.0;
            for j in 0..k {
                rhs[(0, i * k + j)] -= phi1[j];
                rhs[(1, i * k + j)] -= phi2[j];
            }
            to_edge.view_mut((k, 0), (2, ndofs)).copy_from(&(minv * rhs));
            out.push(TraceEdge { v: *end, to_edge });
        }
        Ok(TraceBasis { k, edges: out, nverts })
    }

    pub fn ndofs(&self) -> usize {
        self.k * self.edges.len() + self.nverts
    }

    pub fn edge_offset(&self, e: usize) -> usize {
        e * self.k
    }

    pub fn vertex_offset(&self, v: usize) -> usize {
        self.k * self.edges.len() + v
    }

    /// Degrees of freedom recovered from per-edge coefficients, one column per trace DOF.
    /// For a valid trace basis this is the identity.
    pub fn dof_map(&self, edges: &[&DomainSpace], points: &[Point]) -> DMatrix<f64> {
        let nd = self.ndofs();
        let mut m = DMatrix::zeros(nd, nd);
        for (i, te) in self.edges.iter().enumerate() {
            for j in 0..self.k {
                m.row_mut(i * self.k + j).copy_from(&te.to_edge.row(j));
            }
            for (s, &v) in te.v.iter().enumerate() {
                let phi = edges[i].basis.eval(&points[v]);
                let val = phi.rows(0, self.k + 2).tr_mul(&te.to_edge);
                m.row_mut(self.vertex_offset(v)).copy_from(&val);
                let _ = s;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn dimensions() {
        assert_eq!(poly_dim(2, 2), 6);
        assert_eq!(poly_dim(3, 3), 20);
        assert_eq!(poly_dim(3, -1), 0);
        assert_eq!(exponents(3, 2).len(), 10);
    }

    #[test]
    fn basis_is_orthonormal_and_hierarchical() {
        let cell = shapes::tetrahedron().cell(0).unwrap();
        let s = DomainSpace::cell(&cell, 4, 8).unwrap();
        let g = s.gram();
        assert!((g - DMatrix::identity(35, 35)).amax() < 1e-11);
        let c = s.basis.coefficients();
        for j in 0..c.ncols() {
            for i in (j + 1)..c.nrows() {
                assert_eq!(c[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn zero_space() {
        let cell = shapes::square().cell(0).unwrap();
        let s = DomainSpace::face(&cell.faces[0], -1, 2).unwrap();
        assert_eq!(s.basis.dim(), 0);
    }

    #[test]
    fn face_subspace_dimensions() {
        let cell = shapes::pentagon().cell(0).unwrap();
        let s = DomainSpace::face(&cell.faces[0], 4, 10).unwrap();
        let sub = build_subspaces(&s, 2, linalg::RANK_TOL).unwrap();
        assert_eq!(sub.r.dim(), 9);
        assert_eq!(sub.r_perp.dim(), 3);
        let r1 = image_in(&s, 1, 2, false, linalg::RANK_TOL).unwrap();
        assert_eq!(r1.dim() + sub.r_perp.dim(), 8);
    }
}
