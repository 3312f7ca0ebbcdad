//! Discrete sequence on a polygon: `X_grad,F -> X_rot,F -> P^k(F)`.
//!
//! A [`FaceDdr`] is built for one face of a cell (the only face of a polygonal cell, or a face
//! of a polyhedron). Vector quantities use the in-plane frame `(tau_1, tau_2)` of the face.
//!
//! Layout of `X_grad,F`: `q_F` (dim `P^{k-1}(F)`), then `k` moments per edge (edges sorted by id),
//! then one value per vertex (vertices sorted by id). Layout of `X_rot,F`: coordinates in
//! `R^{k-1}(F)`, coordinates in `R^k(F)⊥`, then `P^k(E)` coefficients per edge.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{DdrError, Result};
use crate::geometry::{Cell, Face, Point};
use crate::layout::{Entity, Layout};
use crate::linalg::{self, RANK_TOL};
use crate::polyspaces::{build_subspaces, image_in, poly_dim, resize_coords, DomainSpace, TraceBasis};

/// Choice of the potential reconstructions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PotentialVariant {
    /// Potentials as obtained from their defining problems.
    #[default]
    Standard,
    /// Lowest-order internal component replaced by the corresponding internal unknown.
    Alternative,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub variant: PotentialVariant,
}

/// Quadrature degree used for all assembly at polynomial degree `k`.
pub fn rule_degree(k: usize) -> usize {
    2 * k + 6
}

pub(crate) fn drop_first_row(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        m
    } else {
        m.remove_row(0)
    }
}

#[derive(Clone, Debug)]
pub struct FaceDdr {
    pub k: usize,
    pub face: Face,
    /// Index of the face in its cell.
    pub face_index: usize,
    /// Face space of degree `k + 3`.
    pub space: DomainSpace,
    /// Edge spaces of degree `k + 1`, in the order of `face.edges`.
    pub edges: Vec<DomainSpace>,
    pub omega: Vec<f64>,
    /// `n_FE` in frame components.
    pub normals: Vec<[f64; 2]>,
    /// `t_E` in frame components.
    pub tangents: Vec<[f64; 2]>,
    pub lengths: Vec<f64>,
    pub trace: TraceBasis,
    /// Points of the trace vertices (`face.vertices` order).
    pub vertex_points: Vec<Point>,
    /// `R^{k-1}(F)` inside `P^k(F)^2`.
    pub q_r: DMatrix<f64>,
    /// `R^k(F)⊥` inside `P^k(F)^2`.
    pub q_perp: DMatrix<f64>,
    pub grad_layout: Layout,
    pub rot_layout: Layout,
    /// `∫_E ψ_l φ_i` for edge basis `ψ` (degree `k + 1`) and face basis `φ` (degree `k + 3`).
    fe_mass: Vec<DMatrix<f64>>,
    /// Full gradient `G•_F`, into `P^k(F)^2`.
    pub full_gradient: DMatrix<f64>,
    /// Edge derivatives `G_∂F`, stacked `P^k(E)` coefficients.
    pub boundary_gradient: DMatrix<f64>,
    /// Discrete gradient `uG_F: X_grad,F -> X_rot,F`.
    pub gradient: DMatrix<f64>,
    /// Full curl `C•_F` on `P^k(F)^2 × P^k(E_F)`.
    pub full_rot: DMatrix<f64>,
    /// Discrete rot `C_F: X_rot,F -> P^k(F)`.
    pub rot: DMatrix<f64>,
    /// Embedding of `X_rot,F` into `P^k(F)^2 × P^k(E_F)`.
    pub rot_embedding: DMatrix<f64>,
    /// Scalar trace `γ_F: X_grad,F -> P^{k+1}(F)`.
    pub potential: DMatrix<f64>,
    /// Tangential trace `γ_t,F: X_rot,F -> P^k(F)^2`.
    pub tangent_potential: DMatrix<f64>,
    pub gram_grad: DMatrix<f64>,
    pub gram_rot: DMatrix<f64>,
}

impl FaceDdr {
    /// Builds the sequence on face `face_index` of `cell`.
    pub fn new(cell: &Cell, face_index: usize, k: usize, opts: &Options) -> Result<FaceDdr> {
        let face = cell.faces[face_index].clone();
        let ki = k as i32;
        let rd = rule_degree(k);
        let space = DomainSpace::face(&face, ki + 3, rd)?;
        let edges = face.edges.iter().map(|fe| DomainSpace::edge(cell, fe.edge, ki + 1, rd)).collect::<Result<Vec<_>>>()?;
        let omega: Vec<f64> = face.edges.iter().map(|fe| fe.omega as f64).collect();
        let normals = face.edges.iter().map(|fe| face.to_frame(&fe.normal)).collect();
        let tangents = face.edges.iter().map(|fe| face.to_frame(&cell.edges[fe.edge].t)).collect();
        let lengths = face.edges.iter().map(|fe| cell.edges[fe.edge].length).collect();
        let vertex_points: Vec<Point> = face.vertices.iter().map(|&v| cell.vertices[v].x).collect();
        let pos = |v: usize| face.vertices.binary_search(&v).expect("edge vertex on face");
        let ends: Vec<[usize; 2]> = face.edges.iter().map(|fe| cell.edges[fe.edge].v.map(pos)).collect();
        let edge_refs: Vec<&DomainSpace> = edges.iter().collect();
        let trace = TraceBasis::build(k, &edge_refs, &ends, &vertex_points)?;

        let q_r = image_in(&space, ki - 1, ki, false, RANK_TOL)?.basis;
        let q_perp = build_subspaces(&space, ki, RANK_TOL)?.r_perp.basis;

        let fe_mass = edges
            .iter()
            .map(|e| {
                let tab = space.basis.tabulate(&e.rule.points);
                e.wvals.columns(0, k + 2).tr_mul(&tab)
            })
            .collect();

        let nq = poly_dim(2, ki - 1);
        let mut grad_layout = Layout::new("X_grad");
        grad_layout.push(format!("F{}", face.id), Entity::Face, face.id, nq);
        for fe in &face.edges {
            let e = &cell.edges[fe.edge];
            grad_layout.push(format!("E{}", e.id), Entity::Edge, e.id, k);
        }
        for &v in &face.vertices {
            let id = cell.vertices[v].id;
            grad_layout.push(format!("V{id}"), Entity::Vertex, id, 1);
        }
        let mut rot_layout = Layout::new("X_rot");
        rot_layout.push(format!("F{}.R", face.id), Entity::Face, face.id, q_r.ncols());
        rot_layout.push(format!("F{}.Rperp", face.id), Entity::Face, face.id, q_perp.ncols());
        for fe in &face.edges {
            let e = &cell.edges[fe.edge];
            rot_layout.push(format!("E{}", e.id), Entity::Edge, e.id, k + 1);
        }

        let empty = DMatrix::zeros(0, 0);
        let mut out = FaceDdr {
            k,
            face,
            face_index,
            space,
            edges,
            omega,
            normals,
            tangents,
            lengths,
            trace,
            vertex_points,
            q_r,
            q_perp,
            grad_layout,
            rot_layout,
            fe_mass,
            full_gradient: empty.clone(),
            boundary_gradient: empty.clone(),
            gradient: empty.clone(),
            full_rot: empty.clone(),
            rot: empty.clone(),
            rot_embedding: empty.clone(),
            potential: empty.clone(),
            tangent_potential: empty.clone(),
            gram_grad: empty.clone(),
            gram_rot: empty,
        };
        out.assemble(opts)?;
        Ok(out)
    }

    fn assemble(&mut self, opts: &Options) -> Result<()> {
        let k = self.k;
        let ki = k as i32;
        let nk = self.n(ki);
        let nq = self.n(ki - 1);
        let ng = self.grad_dim();
        let ne = self.edges.len();
        let (nr, np) = (self.q_r.ncols(), self.q_perp.ncols());
        let nrot = self.rot_dim();

        // Full gradient.
        let mut gf = self.boundary_flux(ki);
        for c in 0..2 {
            let d = self.space.derivative_block(c, ki, ki - 1);
            gf.view_mut((c * nk, 0), (nk, nq)).copy_from(&(-d.transpose()));
        }
        let mut gb = DMatrix::zeros(ne * (k + 1), ng);
        for (ie, e) in self.edges.iter().enumerate() {
            let d = e.derivative_block(0, ki + 1, ki);
            gb.view_mut((ie * (k + 1), nq), (k + 1, self.trace.ndofs())).copy_from(&(d * &self.trace.edges[ie].to_edge));
        }
        let ug = linalg::vstack(&[&self.q_r.tr_mul(&gf), &self.q_perp.tr_mul(&gf), &gb], ng);

        // Curls.
        let nfull = 2 * nk + ne * (k + 1);
        let mut cfull = DMatrix::zeros(nk, nfull);
        cfull.view_mut((0, 0), (nk, 2 * nk)).copy_from(&self.space.vrot_matrix(ki, ki).transpose());
        let mut c = DMatrix::zeros(nk, nrot);
        c.view_mut((0, 0), (nk, nr)).copy_from(&(self.space.vrot_matrix(ki, ki).transpose() * &self.q_r));
        for ie in 0..ne {
            let blk = self.fe_mass(ie, k + 1, ki).transpose() * (-self.omega[ie]);
            cfull.view_mut((0, 2 * nk + ie * (k + 1)), (nk, k + 1)).copy_from(&blk);
            c.view_mut((0, nr + np + ie * (k + 1)), (nk, k + 1)).copy_from(&blk);
        }
        let mut emb = DMatrix::zeros(nfull, nrot);
        emb.view_mut((0, 0), (2 * nk, nr)).copy_from(&self.q_r);
        emb.view_mut((0, nr), (2 * nk, np)).copy_from(&self.q_perp);
        for i in 0..ne * (k + 1) {
            emb[(2 * nk + i, nr + np + i)] = 1.0;
        }

        // Scalar trace: div-moments against R^{k+2}(F)⊥, then the P^{k-1} correction.
        let z = build_subspaces(&self.space, ki + 2, RANK_TOL)?.r_perp.basis;
        let a = (self.space.div_matrix(ki + 2, ki + 1) * &z).transpose();
        let rhs = z.tr_mul(&(self.boundary_flux(ki + 2) - resize_coords(2, nk, self.n(ki + 2)) * &gf));
        let mut gamma = linalg::solve(&a, &rhs, &format!("scalar trace on face {}", self.face.id))?;
        gamma.view_mut((0, 0), (nq, ng)).fill(0.0);
        for i in 0..nq {
            gamma[(i, i)] = 1.0;
        }

        // Tangential trace.
        let n1 = self.n(ki + 1);
        let s_top = drop_first_row(self.space.vrot_matrix(ki + 1, ki).transpose());
        let mut r_top = resize_coords(1, nk, n1) * &c;
        for ie in 0..ne {
            let blk = self.fe_mass(ie, k + 1, ki + 1).transpose() * self.omega[ie];
            let mut v = r_top.view_mut((0, nr + np + ie * (k + 1)), (n1, k + 1));
            v += blk;
        }
        let r_top = drop_first_row(r_top);
        let mut r_bot = DMatrix::zeros(np, nrot);
        for i in 0..np {
            r_bot[(i, nr + i)] = 1.0;
        }
        let s = linalg::vstack(&[&s_top, &self.q_perp.transpose()], 2 * nk);
        let r = linalg::vstack(&[&r_top, &r_bot], nrot);
        let mut gt = linalg::solve(&s, &r, &format!("tangential trace on face {}", self.face.id))?;
        if opts.variant == PotentialVariant::Alternative {
            let mut sel = DMatrix::zeros(nr, nrot);
            for i in 0..nr {
                sel[(i, i)] = 1.0;
            }
            gt = &gt - &self.q_r * self.q_r.tr_mul(&gt) + &self.q_r * sel;
        }

        self.full_gradient = gf;
        self.boundary_gradient = gb;
        self.gradient = ug;
        self.full_rot = cfull;
        self.rot = c;
        self.rot_embedding = emb;
        self.potential = gamma;
        self.tangent_potential = gt;
        self.gram_grad = self.build_gram_grad();
        self.gram_rot = self.build_gram_rot();
        Ok(())
    }

    /// `dim P^degree(F)`.
    pub fn n(&self, degree: i32) -> usize {
        poly_dim(2, degree)
    }

    pub fn grad_dim(&self) -> usize {
        self.grad_layout.dim()
    }

    pub fn rot_dim(&self) -> usize {
        self.rot_layout.dim()
    }

    /// `h_F`.
    pub fn diameter(&self) -> f64 {
        self.face.diameter
    }

    /// `∫_E ψ_l φ_i` for `l < rows` and `φ_i` spanning `P^m(F)`.
    pub fn fe_mass(&self, ie: usize, rows: usize, m: i32) -> DMatrix<f64> {
        self.fe_mass[ie].view((0, 0), (rows, self.n(m))).into_owned()
    }

    /// `Σ_E ω_FE ∫_E q_∂F (w·n_FE)` tested with `w` spanning `P^m(F)^2`; columns are `X_grad,F`.
    fn boundary_flux(&self, m: i32) -> DMatrix<f64> {
        let nm = self.n(m);
        let nq = self.n(self.k as i32 - 1);
        let mut out = DMatrix::zeros(2 * nm, self.grad_dim());
        for ie in 0..self.edges.len() {
            let blk = self.fe_mass(ie, self.k + 2, m).transpose() * &self.trace.edges[ie].to_edge;
            for c in 0..2 {
                let mut v = out.view_mut((c * nm, nq), (nm, self.trace.ndofs()));
                v += &blk * (self.omega[ie] * self.normals[ie][c]);
            }
        }
        out
    }

    /// Interpolator on `P^m(F)` given by face-basis coefficients, `m ≤ k + 3`.
    pub fn interp_grad_poly(&self, m: i32) -> DMatrix<f64> {
        let k = self.k;
        let nm = self.n(m);
        let nq = self.n(k as i32 - 1);
        let mut out = DMatrix::zeros(self.grad_dim(), nm);
        for i in 0..nq.min(nm) {
            out[(i, i)] = 1.0;
        }
        for ie in 0..self.edges.len() {
            let blk = self.fe_mass(ie, k, m);
            out.view_mut((nq + self.trace.edge_offset(ie), 0), (k, nm)).copy_from(&blk);
        }
        for (v, x) in self.vertex_points.iter().enumerate() {
            let phi = self.space.basis.eval(x);
            out.view_mut((nq + self.trace.vertex_offset(v), 0), (1, nm)).copy_from(&phi.rows(0, nm).transpose());
        }
        out
    }

    /// Interpolator on `P^m(F)^2` given by frame-component coefficients, `m ≤ k + 3`.
    pub fn interp_rot_poly(&self, m: i32) -> DMatrix<f64> {
        let k = self.k;
        let nm = self.n(m);
        let nk = self.n(k as i32);
        let (nr, np) = (self.q_r.ncols(), self.q_perp.ncols());
        let p = resize_coords(2, nm, nk);
        let mut out = DMatrix::zeros(self.rot_dim(), 2 * nm);
        out.view_mut((0, 0), (nr, 2 * nm)).copy_from(&self.q_r.tr_mul(&p));
        out.view_mut((nr, 0), (np, 2 * nm)).copy_from(&self.q_perp.tr_mul(&p));
        for ie in 0..self.edges.len() {
            let blk = self.fe_mass(ie, k + 1, m);
            for c in 0..2 {
                let mut v = out.view_mut((nr + np + ie * (k + 1), c * nm), (k + 1, nm));
                v += &blk * self.tangents[ie][c];
            }
        }
        out
    }

    /// `I_grad,F q`.
    pub fn interp_grad(&self, q: impl Fn(&Point) -> f64) -> DVector<f64> {
        let k = self.k;
        let nq = self.n(k as i32 - 1);
        let mut out = DVector::zeros(self.grad_dim());
        out.rows_mut(0, nq).copy_from(&self.space.project(k as i32 - 1, &q));
        for (ie, e) in self.edges.iter().enumerate() {
            let off = nq + self.trace.edge_offset(ie);
            out.rows_mut(off, k).copy_from(&e.project(k as i32 - 1, &q));
        }
        for (v, x) in self.vertex_points.iter().enumerate() {
            out[nq + self.trace.vertex_offset(v)] = q(x);
        }
        out
    }

    /// `I_rot,F v` for a field whose tangential part is taken.
    pub fn interp_rot(&self, v: impl Fn(&Point) -> Vector3<f64>) -> DVector<f64> {
        let k = self.k;
        let (nr, np) = (self.q_r.ncols(), self.q_perp.ncols());
        let p = self.space.project_vector(k as i32, 2, |x| self.face.to_frame(&v(x)).to_vec());
        let mut out = DVector::zeros(self.rot_dim());
        out.rows_mut(0, nr).copy_from(&self.q_r.tr_mul(&p));
        out.rows_mut(nr, np).copy_from(&self.q_perp.tr_mul(&p));
        for (ie, e) in self.edges.iter().enumerate() {
            let t = self.face.from_frame(self.tangents[ie]);
            out.rows_mut(nr + np + ie * (k + 1), k + 1).copy_from(&e.project(k as i32, |x| v(x).dot(&t)));
        }
        out
    }

    /// `I_grad,F` of a continuous trace given edge by edge as `P^{k+1}(E)` coefficients.
    pub fn trace_dofs(&self, edge_coeffs: &[DVector<f64>]) -> DVector<f64> {
        let k = self.k;
        let mut out = DVector::zeros(self.trace.ndofs());
        for (ie, p) in edge_coeffs.iter().enumerate() {
            out.rows_mut(self.trace.edge_offset(ie), k).copy_from(&p.rows(0, k));
            for &v in &self.trace.edges[ie].v {
                let phi = self.edges[ie].basis.eval(&self.vertex_points[v]);
                out[self.trace.vertex_offset(v)] = phi.rows(0, k + 2).dot(&p.rows(0, k + 2));
            }
        }
        out
    }

    fn build_gram_grad(&self) -> DMatrix<f64> {
        let nq = self.n(self.k as i32 - 1);
        let ng = self.grad_dim();
        let g = &self.potential;
        let delta = self.interp_grad_poly(self.k as i32 + 1) * g - DMatrix::identity(ng, ng);
        let dv = delta.rows(0, nq).into_owned();
        let dt = delta.rows(nq, self.trace.ndofs()).into_owned();
        let mut out = g.tr_mul(g) + dv.tr_mul(&dv);
        for te in &self.trace.edges {
            let de = &te.to_edge * &dt;
            out += de.tr_mul(&de) * self.diameter();
        }
        symmetrize(out)
    }

    fn build_gram_rot(&self) -> DMatrix<f64> {
        let nrot = self.rot_dim();
        let nint = self.q_r.ncols() + self.q_perp.ncols();
        let g = &self.tangent_potential;
        let delta = self.interp_rot_poly(self.k as i32) * g - DMatrix::identity(nrot, nrot);
        let di = delta.rows(0, nint).into_owned();
        let de = delta.rows(nint, nrot - nint).into_owned();
        symmetrize(g.tr_mul(g) + di.tr_mul(&di) + de.tr_mul(&de) * self.diameter())
    }

    /// Continuous trace `q_∂F` (trace DOFs) with `G_∂F q_∂F = r`, built by integrating along the
    /// boundary loop. Fails when `Σ_E ω_FE ∫_E r_E` does not vanish.
    pub fn lift_boundary_gradient(&self, r: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        let k = self.k;
        let ki = k as i32;
        let nv = self.vertex_points.len();
        let pos = |v: usize| self.face.vertices.binary_search(&v).expect("loop vertex on face");
        let mut value: Vec<Option<f64>> = vec![None; nv];
        let mut coeffs = vec![DVector::zeros(k + 2); self.edges.len()];
        let lv = &self.face.loop_vertices;
        let start = pos(lv[0]);
        value[start] = Some(0.0);
        let mut closing = 0.0;
        for i in 0..lv.len() {
            let (a, b) = (pos(lv[i]), pos(lv[(i + 1) % lv.len()]));
            let ie = self.trace.edges.iter().position(|te| te.v == [a, b] || te.v == [b, a]).expect("loop edge");
            let e = &self.edges[ie];
            let mut m = DMatrix::zeros(k + 2, k + 2);
            m.view_mut((0, 0), (k + 1, k + 2)).copy_from(&e.derivative_block(0, ki + 1, ki));
            let phi_a = e.basis.eval(&self.vertex_points[a]);
            m.view_mut((k + 1, 0), (1, k + 2)).copy_from(&phi_a.rows(0, k + 2).transpose());
            let mut rhs = DVector::zeros(k + 2);
            rhs.rows_mut(0, k + 1).copy_from(&r.rows(ie * (k + 1), k + 1));
            rhs[k + 1] = value[a].expect("walk is sequential");
            let p = linalg::solve(&m, &DMatrix::from_column_slice(k + 2, 1, rhs.as_slice()), "edge antiderivative")?.column(0).into_owned();
            let vb = e.basis.eval(&self.vertex_points[b]).rows(0, k + 2).dot(&p);
            if b == start {
                closing = vb;
            } else {
                value[b] = Some(vb);
            }
            coeffs[ie] = p;
        }
        let scale: f64 = self.lengths.iter().sum::<f64>() * r.amax().max(f64::MIN_POSITIVE);
        if closing.abs() > tol * scale.max(1.0) {
            return Err(DdrError::Incompatible { what: format!("boundary gradient on face {}", self.face.id), defect: closing.abs() });
        }
        Ok(self.trace_dofs(&coeffs))
    }

    /// Some `v ∈ X_rot,F` with `C_F v = f` (minimum-norm solution).
    pub fn lift_rot(&self, f: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        let v = linalg::lstsq_min_norm(&self.rot, f, RANK_TOL);
        let res = (&self.rot * &v - f).norm();
        let scale = self.rot.norm() * v.norm() + f.norm();
        if linalg::relative(res, scale) > tol {
            return Err(DdrError::Incompatible { what: format!("rot lift on face {}", self.face.id), defect: res });
        }
        Ok(v)
    }

    /// Full gradient on `P^k(F) × P^{k+1}(∂F)` followed by the edge derivatives; used for the
    /// almost-exactness diagnostic of the full sequence.
    pub fn full_gradient_with_edges(&self) -> DMatrix<f64> {
        linalg::vstack(&[&self.full_gradient, &self.boundary_gradient], self.grad_dim())
    }
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn build(shape: &str, k: usize) -> FaceDdr {
        let cell = shapes::by_name(shape).unwrap().cell(0).unwrap();
        FaceDdr::new(&cell, 0, k, &Options::default()).unwrap()
    }

    #[test]
    fn complex_property_and_ranks() {
        for shape in ["triangle", "square", "pentagon", "hexagon"] {
            for k in 0..4 {
                let d = build(shape, k);
                let cg = &d.rot * &d.gradient;
                assert!(cg.amax() < 1e-10, "{shape} k={k}: {}", cg.amax());
                assert_eq!(linalg::rank(&d.gradient, RANK_TOL), d.grad_dim() - 1);
                assert_eq!(linalg::rank(&d.rot, RANK_TOL), poly_dim(2, k as i32));
            }
        }
    }

    #[test]
    fn gradient_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..4 {
            let d = build("pentagon", k);
            let m = k as i32 + 1;
            let q = random(d.n(m), &mut rng);
            let g = d.space.grad_matrix(m, k as i32) * &q;
            let diff = &d.full_gradient * d.interp_grad_poly(m) * &q - &g;
            assert!(diff.amax() < 1e-10);
            let gam = &d.potential * d.interp_grad_poly(m) * &q;
            let diff = gam - resize_coords(1, d.n(m), d.n(k as i32 + 1)) * &q;
            assert!(diff.amax() < 1e-10, "k={k}: {}", diff.amax());
        }
    }

    #[test]
    fn tangent_potential_on_gradients() {
        for k in 0..4 {
            let d = build("hexagon", k);
            let lhs = &d.tangent_potential * &d.gradient;
            assert!((lhs - &d.full_gradient).amax() < 1e-10);
        }
    }

    #[test]
    fn boundary_gradient_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = build("hexagon", 2);
        let q = random(d.grad_dim(), &mut rng);
        let r = &d.boundary_gradient * &q;
        let lifted = d.lift_boundary_gradient(&r, 1e-10).unwrap();
        let mut full = DVector::zeros(d.grad_dim());
        full.rows_mut(d.n(1), d.trace.ndofs()).copy_from(&lifted);
        assert!((&d.boundary_gradient * full - &r).amax() < 1e-10);
        let bad = random(r.len(), &mut rng);
        assert!(matches!(d.lift_boundary_gradient(&bad, 1e-10), Err(DdrError::Incompatible { .. })));
    }
}
