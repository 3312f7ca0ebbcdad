//! Discrete sequence on a polyhedron: `X_grad,T -> X_curl,T -> X_div,T -> P^k(T)`.
//!
//! Layouts, all with faces, edges and vertices sorted by id:
//! - `X_grad,T`: `q_T` in `P^{k-1}(T)`, `q_F` in `P^{k-1}(F)` per face, `k` moments per edge,
//!   one value per vertex.
//! - `X_curl,T`: coordinates in `R^{k-1}(T)` and `R^k(T)⊥`, the same pair per face (in the face
//!   frame), `P^k(E)` coefficients per edge.
//! - `X_div,T`: coordinates in `G^{k-1}(T)` and `G^k(T)⊥`, `P^k(F)` coefficients per face.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::ddr2d::{drop_first_row, rule_degree, symmetrize, FaceDdr, Options, PotentialVariant};
use crate::error::{DdrError, Result};
use crate::geometry::{Cell, Point};
use crate::layout::{Entity, Layout};
use crate::linalg::{self, RANK_TOL};
use crate::par;
use crate::polyspaces::{build_subspaces, image_in, poly_dim, resize_coords, DomainSpace, TraceBasis};

fn n3(d: i32) -> usize {
    poly_dim(3, d)
}

fn n2(d: i32) -> usize {
    poly_dim(2, d)
}

/// Row-selection matrix: row `i` picks column `idx[i]`.
fn selection(idx: &[usize], ncols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(idx.len(), ncols);
    for (i, &j) in idx.iter().enumerate() {
        m[(i, j)] = 1.0;
    }
    m
}

fn identity_block(rows: usize, ncols: usize, offset: usize) -> DMatrix<f64> {
    let idx: Vec<usize> = (offset..offset + rows).collect();
    selection(&idx, ncols)
}

#[derive(Clone, Debug)]
pub struct CellDdr {
    pub k: usize,
    pub cell: Cell,
    pub options: Options,
    /// Cell space of degree `k + 3`.
    pub space: DomainSpace,
    pub faces: Vec<FaceDdr>,
    /// Edge spaces of degree `k + 1`, in the order of `cell.edges`.
    pub edges: Vec<DomainSpace>,
    pub skeleton: TraceBasis,
    /// `R^{k-1}(T)`, `R^k(T)⊥`, `G^{k-1}(T)`, `G^k(T)⊥` inside `P^k(T)^3`.
    pub q_r: DMatrix<f64>,
    pub q_rperp: DMatrix<f64>,
    pub q_g: DMatrix<f64>,
    pub q_gperp: DMatrix<f64>,
    pub grad_layout: Layout,
    pub curl_layout: Layout,
    pub div_layout: Layout,
    /// Restrictions `X_grad,T -> X_grad,F` and `X_curl,T -> X_rot,F`.
    pub face_grad_restriction: Vec<DMatrix<f64>>,
    pub face_curl_restriction: Vec<DMatrix<f64>>,
    /// `∫_F ψ_j φ_i`: face basis (degree `k + 3`) against cell basis (degree `k + 3`).
    cf_mass: Vec<DMatrix<f64>>,
    /// `∫_E ψ_l φ_i`: edge basis (degree `k + 1`) against cell basis.
    ce_mass: Vec<DMatrix<f64>>,
    /// `G•_T` into `P^k(T)^3`.
    pub full_gradient: DMatrix<f64>,
    pub gradient: DMatrix<f64>,
    /// `C•_T` into `P^k(T)^3`.
    pub full_curl: DMatrix<f64>,
    pub curl: DMatrix<f64>,
    pub div: DMatrix<f64>,
    /// `P_grad,T` into `P^{k+1}(T)`.
    pub potential_grad: DMatrix<f64>,
    /// `P_curl,T` into `P^k(T)^3`.
    pub potential_curl: DMatrix<f64>,
    /// `P_div,T` into `P^k(T)^3`.
    pub potential_div: DMatrix<f64>,
    pub gram_grad: DMatrix<f64>,
    pub gram_curl: DMatrix<f64>,
    pub gram_div: DMatrix<f64>,
}

impl CellDdr {
    pub fn new(cell: &Cell, k: usize, options: &Options) -> Result<CellDdr> {
        if cell.dim != 3 {
            return Err(DdrError::Mesh(format!("cell {} is not a polyhedron", cell.id)));
        }
        let ki = k as i32;
        let rd = rule_degree(k);
        let space = DomainSpace::cell(cell, ki + 3, rd)?;
        let faces = par::map_range(cell.faces.len(), |f| FaceDdr::new(cell, f, k, options)).into_iter().collect::<Result<Vec<_>>>()?;
        let edges = (0..cell.edges.len()).map(|e| DomainSpace::edge(cell, e, ki + 1, rd)).collect::<Result<Vec<_>>>()?;
        let points = cell.points();
        let ends: Vec<[usize; 2]> = cell.edges.iter().map(|e| e.v).collect();
        let edge_refs: Vec<&DomainSpace> = edges.iter().collect();
        let skeleton = TraceBasis::build(k, &edge_refs, &ends, &points)?;

        let q_r = image_in(&space, ki - 1, ki, false, RANK_TOL)?.basis;
        let q_g = image_in(&space, ki - 1, ki, true, RANK_TOL)?.basis;
        let sub = build_subspaces(&space, ki, RANK_TOL)?;
        let (q_rperp, q_gperp) = (sub.r_perp.basis, sub.g_perp.basis);

        let cf_mass = faces.iter().map(|fd| fd.space.wvals.tr_mul(&space.basis.tabulate(&fd.space.rule.points))).collect();
        let ce_mass = edges.iter().map(|e| e.wvals.columns(0, k + 2).tr_mul(&space.basis.tabulate(&e.rule.points))).collect();

        let nf = cell.faces.len();
        let (nqt, nqf) = (n3(ki - 1), n2(ki - 1));
        let mut grad_layout = Layout::new("X_grad");
        grad_layout.push(format!("T{}", cell.id), Entity::Cell, cell.id, nqt);
        for f in &cell.faces {
            grad_layout.push(format!("F{}", f.id), Entity::Face, f.id, nqf);
        }
        for e in &cell.edges {
            grad_layout.push(format!("E{}", e.id), Entity::Edge, e.id, k);
        }
        for v in &cell.vertices {
            grad_layout.push(format!("V{}", v.id), Entity::Vertex, v.id, 1);
        }
        let mut curl_layout = Layout::new("X_curl");
        curl_layout.push(format!("T{}.R", cell.id), Entity::Cell, cell.id, q_r.ncols());
        curl_layout.push(format!("T{}.Rperp", cell.id), Entity::Cell, cell.id, q_rperp.ncols());
        for (f, fd) in cell.faces.iter().zip(&faces) {
            curl_layout.push(format!("F{}.R", f.id), Entity::Face, f.id, fd.q_r.ncols());
            curl_layout.push(format!("F{}.Rperp", f.id), Entity::Face, f.id, fd.q_perp.ncols());
        }
        for e in &cell.edges {
            curl_layout.push(format!("E{}", e.id), Entity::Edge, e.id, k + 1);
        }
        let mut div_layout = Layout::new("X_div");
        div_layout.push(format!("T{}.G", cell.id), Entity::Cell, cell.id, q_g.ncols());
        div_layout.push(format!("T{}.Gperp", cell.id), Entity::Cell, cell.id, q_gperp.ncols());
        for f in &cell.faces {
            div_layout.push(format!("F{}", f.id), Entity::Face, f.id, n2(ki));
        }

        // Face restrictions.
        let skel0 = nqt + nf * nqf;
        let curl_edge0 = curl_layout.block(&format!("E{}", cell.edges.first().map_or(0, |e| e.id))).map_or(curl_layout.dim(), |b| b.offset);
        let mut face_grad_restriction = Vec::with_capacity(nf);
        let mut face_curl_restriction = Vec::with_capacity(nf);
        for (f, fd) in faces.iter().enumerate() {
            let face = &cell.faces[f];
            let mut idx: Vec<usize> = (0..nqf).map(|j| nqt + f * nqf + j).collect();
            for fe in &face.edges {
                idx.extend((0..k).map(|j| skel0 + skeleton.edge_offset(fe.edge) + j));
            }
            for &v in &face.vertices {
                idx.push(skel0 + skeleton.vertex_offset(v));
            }
            face_grad_restriction.push(selection(&idx, grad_layout.dim()));
            let nint = fd.q_r.ncols() + fd.q_perp.ncols();
            let off = curl_layout.block(&format!("F{}.R", face.id)).expect("face block").offset;
            let mut idx: Vec<usize> = (off..off + nint).collect();
            for fe in &face.edges {
                idx.extend((0..=k).map(|j| curl_edge0 + fe.edge * (k + 1) + j));
            }
            face_curl_restriction.push(selection(&idx, curl_layout.dim()));
        }

        let empty = DMatrix::zeros(0, 0);
        let mut out = CellDdr {
            k,
            cell: cell.clone(),
            options: *options,
            space,
            faces,
            edges,
            skeleton,
            q_r,
            q_rperp,
            q_g,
            q_gperp,
            grad_layout,
            curl_layout,
            div_layout,
            face_grad_restriction,
            face_curl_restriction,
            cf_mass,
            ce_mass,
            full_gradient: empty.clone(),
            gradient: empty.clone(),
            full_curl: empty.clone(),
            curl: empty.clone(),
            div: empty.clone(),
            potential_grad: empty.clone(),
            potential_curl: empty.clone(),
            potential_div: empty.clone(),
            gram_grad: empty.clone(),
            gram_curl: empty.clone(),
            gram_div: empty,
        };
        out.assemble()?;
        Ok(out)
    }

    pub fn grad_dim(&self) -> usize {
        self.grad_layout.dim()
    }

    pub fn curl_dim(&self) -> usize {
        self.curl_layout.dim()
    }

    pub fn div_dim(&self) -> usize {
        self.div_layout.dim()
    }

    /// `dim P^k(T)`.
    pub fn scalar_dim(&self) -> usize {
        n3(self.k as i32)
    }

    /// `h_T`.
    pub fn diameter(&self) -> f64 {
        self.cell.diameter
    }

    fn omega(&self, f: usize) -> f64 {
        self.cell.face_orientation[f] as f64
    }

    /// `∫_F ψ_j φ_i` for `ψ_j` spanning `P^a(F)` and `φ_i` spanning `P^m(T)`.
    pub fn cf_mass(&self, f: usize, a: i32, m: i32) -> DMatrix<f64> {
        self.cf_mass[f].view((0, 0), (n2(a), n3(m))).into_owned()
    }

    /// `∫_E ψ_l φ_i` for `l < rows` and `φ_i` spanning `P^m(T)`.
    pub fn ce_mass(&self, e: usize, rows: usize, m: i32) -> DMatrix<f64> {
        self.ce_mass[e].view((0, 0), (rows, n3(m))).into_owned()
    }

    fn curl_face_offset(&self, f: usize) -> usize {
        self.curl_layout.block(&format!("F{}.R", self.cell.faces[f].id)).expect("face block").offset
    }

    fn curl_edge_offset(&self, e: usize) -> usize {
        self.curl_layout.block(&format!("E{}", self.cell.edges[e].id)).expect("edge block").offset
    }

    fn div_face_offset(&self, f: usize) -> usize {
        self.div_layout.block(&format!("F{}", self.cell.faces[f].id)).expect("face block").offset
    }

    fn skeleton_offset(&self) -> usize {
        n3(self.k as i32 - 1) + self.cell.faces.len() * n2(self.k as i32 - 1)
    }

    /// `Σ_F ω_TF ∫_F γ_F(q) (v·n_F)` tested with `v` spanning `P^m(T)^3`.
    fn face_flux(&self, m: i32) -> DMatrix<f64> {
        let nm = n3(m);
        let ki = self.k as i32;
        let mut out = DMatrix::zeros(3 * nm, self.grad_dim());
        for (f, fd) in self.faces.iter().enumerate() {
            let blk = self.cf_mass(f, ki + 1, m).transpose() * &fd.potential * &self.face_grad_restriction[f];
            let n = self.cell.faces[f].normal;
            for c in 0..3 {
                let mut v = out.rows_mut(c * nm, nm);
                v += &blk * (self.omega(f) * n[c]);
            }
        }
        out
    }

    /// `Σ_F ω_TF ∫_F γ_t,F(v)·(w × n_F)` tested with `w` spanning `P^m(T)^3`.
    fn tangent_flux(&self, m: i32) -> DMatrix<f64> {
        let nm = n3(m);
        let ki = self.k as i32;
        let nk2 = n2(ki);
        let mut out = DMatrix::zeros(3 * nm, self.curl_dim());
        for (f, fd) in self.faces.iter().enumerate() {
            let face = &self.cell.faces[f];
            let mass = self.cf_mass(f, ki, m).transpose();
            let gt = &fd.tangent_potential * &self.face_curl_restriction[f];
            for c in 0..3 {
                let wxn = Vector3::ith(c, 1.0).cross(&face.normal);
                for a in 0..2 {
                    let coef = self.omega(f) * wxn.dot(&face.tau[a]);
                    if coef == 0.0 {
                        continue;
                    }
                    let mut v = out.rows_mut(c * nm, nm);
                    v += &mass * gt.rows(a * nk2, nk2) * coef;
                }
            }
        }
        out
    }

    /// `Σ_F ω_TF ∫_F v_F q` tested with `q` spanning `P^m(T)`.
    fn normal_flux(&self, m: i32) -> DMatrix<f64> {
        let ki = self.k as i32;
        let mut out = DMatrix::zeros(n3(m), self.div_dim());
        for f in 0..self.faces.len() {
            let off = self.div_face_offset(f);
            let mut v = out.columns_mut(off, n2(ki));
            v += self.cf_mass(f, ki, m).transpose() * self.omega(f);
        }
        out
    }

    fn assemble(&mut self) -> Result<()> {
        let k = self.k;
        let ki = k as i32;
        let nk = n3(ki);
        let nqt = n3(ki - 1);
        let (ng, nc, nd) = (self.grad_dim(), self.curl_dim(), self.div_dim());
        let (nr, nrp) = (self.q_r.ncols(), self.q_rperp.ncols());
        let (ngg, ngp) = (self.q_g.ncols(), self.q_gperp.ncols());
        let variant = self.options.variant;

        // Gradient.
        let mut gf = self.face_flux(ki);
        for c in 0..3 {
            let d = self.space.derivative_block(c, ki, ki - 1);
            let mut v = gf.view_mut((c * nk, 0), (nk, nqt));
            v -= d.transpose();
        }
        let mut blocks = vec![self.q_r.tr_mul(&gf), self.q_rperp.tr_mul(&gf)];
        for (f, fd) in self.faces.iter().enumerate() {
            let nint = fd.q_r.ncols() + fd.q_perp.ncols();
            blocks.push(fd.gradient.rows(0, nint) * &self.face_grad_restriction[f]);
        }
        let skel0 = self.skeleton_offset();
        let mut ge = DMatrix::zeros(self.edges.len() * (k + 1), ng);
        for (ie, e) in self.edges.iter().enumerate() {
            let d = e.derivative_block(0, ki + 1, ki);
            ge.view_mut((ie * (k + 1), skel0), (k + 1, self.skeleton.ndofs())).copy_from(&(d * &self.skeleton.edges[ie].to_edge));
        }
        blocks.push(ge);
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        let ug = linalg::vstack(&refs, ng);

        // Curl.
        let vt = linalg::hstack(&[&self.q_r, &self.q_rperp], 3 * nk);
        let mut cf = self.tangent_flux(ki);
        {
            let mut v = cf.columns_mut(0, nr + nrp);
            v += self.space.curl_matrix(ki, ki).transpose() * &vt;
        }
        let mut blocks = vec![self.q_g.tr_mul(&cf), self.q_gperp.tr_mul(&cf)];
        for (f, fd) in self.faces.iter().enumerate() {
            blocks.push(&fd.rot * &self.face_curl_restriction[f]);
        }
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        let uc = linalg::vstack(&refs, nc);

        // Divergence.
        let wt = linalg::hstack(&[&self.q_g, &self.q_gperp], 3 * nk);
        let mut dv = self.normal_flux(ki);
        {
            let mut v = dv.columns_mut(0, ngg + ngp);
            v -= self.space.grad_matrix(ki, ki).transpose() * &wt;
        }

        // Scalar potential.
        let z = build_subspaces(&self.space, ki + 2, RANK_TOL)?.r_perp.basis;
        let a = (self.space.div_matrix(ki + 2, ki + 1) * &z).transpose();
        let rhs = z.tr_mul(&(self.face_flux(ki + 2) - resize_coords(3, nk, n3(ki + 2)) * &gf));
        let mut pg = linalg::solve(&a, &rhs, &format!("scalar potential on cell {}", self.cell.id))?;
        if variant == PotentialVariant::Alternative {
            pg.rows_mut(0, nqt).fill(0.0);
            for i in 0..nqt {
                pg[(i, i)] = 1.0;
            }
        }

        // Vector potential for the curl.
        let y = build_subspaces(&self.space, ki + 1, RANK_TOL)?.g_perp.basis;
        let top = (self.space.curl_matrix(ki + 1, ki) * &y).transpose();
        let rtop = y.tr_mul(&(resize_coords(3, nk, n3(ki + 1)) * &cf - self.tangent_flux(ki + 1)));
        let s = linalg::vstack(&[&top, &self.q_rperp.transpose()], 3 * nk);
        let r = linalg::vstack(&[&rtop, &identity_block(nrp, nc, nr)], nc);
        let mut pc = linalg::solve(&s, &r, &format!("curl potential on cell {}", self.cell.id))?;
        if variant == PotentialVariant::Alternative {
            pc = &pc - &self.q_r * self.q_r.tr_mul(&pc) + &self.q_r * identity_block(nr, nc, 0);
        }

        // Vector potential for the divergence.
        let top = drop_first_row(self.space.grad_matrix(ki + 1, ki).transpose());
        let rtop = drop_first_row(self.normal_flux(ki + 1) - resize_coords(1, nk, n3(ki + 1)) * &dv);
        let s = linalg::vstack(&[&top, &self.q_gperp.transpose()], 3 * nk);
        let r = linalg::vstack(&[&rtop, &identity_block(ngp, nd, ngg)], nd);
        let mut pd = linalg::solve(&s, &r, &format!("div potential on cell {}", self.cell.id))?;
        if variant == PotentialVariant::Alternative {
            pd = &pd - &self.q_g * self.q_g.tr_mul(&pd) + &self.q_g * identity_block(ngg, nd, 0);
        }

        self.full_gradient = gf;
        self.gradient = ug;
        self.full_curl = cf;
        self.curl = uc;
        self.div = dv;
        self.potential_grad = pg;
        self.potential_curl = pc;
        self.potential_div = pd;
        self.gram_grad = self.build_gram_grad();
        self.gram_curl = self.build_gram_curl();
        self.gram_div = self.build_gram_div();
        Ok(())
    }

    /// Interpolator on `P^m(T)` given by cell-basis coefficients, `m ≤ k + 3`.
    pub fn interp_grad_poly(&self, m: i32) -> DMatrix<f64> {
        let k = self.k;
        let ki = k as i32;
        let nm = n3(m);
        let (nqt, nqf) = (n3(ki - 1), n2(ki - 1));
        let mut out = DMatrix::zeros(self.grad_dim(), nm);
        for i in 0..nqt.min(nm) {
            out[(i, i)] = 1.0;
        }
        for f in 0..self.faces.len() {
            out.view_mut((nqt + f * nqf, 0), (nqf, nm)).copy_from(&self.cf_mass(f, ki - 1, m));
        }
        let skel0 = self.skeleton_offset();
        for e in 0..self.edges.len() {
            out.view_mut((skel0 + self.skeleton.edge_offset(e), 0), (k, nm)).copy_from(&self.ce_mass(e, k, m));
        }
        for (v, vx) in self.cell.vertices.iter().enumerate() {
            let phi = self.space.basis.eval(&vx.x);
            out.view_mut((skel0 + self.skeleton.vertex_offset(v), 0), (1, nm)).copy_from(&phi.rows(0, nm).transpose());
        }
        out
    }

    /// Interpolator on `P^m(T)^3` given by component-major coefficients, `m ≤ k + 3`.
    pub fn interp_curl_poly(&self, m: i32) -> DMatrix<f64> {
        let k = self.k;
        let ki = k as i32;
        let nm = n3(m);
        let (nr, nrp) = (self.q_r.ncols(), self.q_rperp.ncols());
        let p = resize_coords(3, nm, n3(ki));
        let mut out = DMatrix::zeros(self.curl_dim(), 3 * nm);
        out.view_mut((0, 0), (nr, 3 * nm)).copy_from(&self.q_r.tr_mul(&p));
        out.view_mut((nr, 0), (nrp, 3 * nm)).copy_from(&self.q_rperp.tr_mul(&p));
        let nk2 = n2(ki);
        for (f, fd) in self.faces.iter().enumerate() {
            let face = &self.cell.faces[f];
            let mass = self.cf_mass(f, ki, m);
            let mut pf = DMatrix::zeros(2 * nk2, 3 * nm);
            for a in 0..2 {
                for c in 0..3 {
                    pf.view_mut((a * nk2, c * nm), (nk2, nm)).copy_from(&(&mass * face.tau[a][c]));
                }
            }
            let off = self.curl_face_offset(f);
            let (fr, fp) = (fd.q_r.ncols(), fd.q_perp.ncols());
            out.view_mut((off, 0), (fr, 3 * nm)).copy_from(&fd.q_r.tr_mul(&pf));
            out.view_mut((off + fr, 0), (fp, 3 * nm)).copy_from(&fd.q_perp.tr_mul(&pf));
        }
        for (e, edge) in self.cell.edges.iter().enumerate() {
            let mass = self.ce_mass(e, k + 1, m);
            let off = self.curl_edge_offset(e);
            for c in 0..3 {
                out.view_mut((off, c * nm), (k + 1, nm)).copy_from(&(&mass * edge.t[c]));
            }
        }
        out
    }

    /// Interpolator on `P^m(T)^3` given by component-major coefficients, `m ≤ k + 3`.
    pub fn interp_div_poly(&self, m: i32) -> DMatrix<f64> {
        let ki = self.k as i32;
        let nm = n3(m);
        let (ngg, ngp) = (self.q_g.ncols(), self.q_gperp.ncols());
        let p = resize_coords(3, nm, n3(ki));
        let mut out = DMatrix::zeros(self.div_dim(), 3 * nm);
        out.view_mut((0, 0), (ngg, 3 * nm)).copy_from(&self.q_g.tr_mul(&p));
        out.view_mut((ngg, 0), (ngp, 3 * nm)).copy_from(&self.q_gperp.tr_mul(&p));
        for f in 0..self.faces.len() {
            let n = self.cell.faces[f].normal;
            let mass = self.cf_mass(f, ki, m);
            let off = self.div_face_offset(f);
            for c in 0..3 {
                out.view_mut((off, c * nm), (n2(ki), nm)).copy_from(&(&mass * n[c]));
            }
        }
        out
    }

    /// `I_grad,T q`.
    pub fn interp_grad(&self, q: impl Fn(&Point) -> f64 + Sync) -> DVector<f64> {
        let k = self.k;
        let ki = k as i32;
        let (nqt, nqf) = (n3(ki - 1), n2(ki - 1));
        let mut out = DVector::zeros(self.grad_dim());
        out.rows_mut(0, nqt).copy_from(&self.space.project(ki - 1, &q));
        for (f, fd) in self.faces.iter().enumerate() {
            out.rows_mut(nqt + f * nqf, nqf).copy_from(&fd.space.project(ki - 1, &q));
        }
        let skel0 = self.skeleton_offset();
        for (e, es) in self.edges.iter().enumerate() {
            out.rows_mut(skel0 + self.skeleton.edge_offset(e), k).copy_from(&es.project(ki - 1, &q));
        }
        for (v, vx) in self.cell.vertices.iter().enumerate() {
            out[skel0 + self.skeleton.vertex_offset(v)] = q(&vx.x);
        }
        out
    }

    /// `I_curl,T v`.
    pub fn interp_curl(&self, v: impl Fn(&Point) -> Vector3<f64> + Sync) -> DVector<f64> {
        let k = self.k;
        let ki = k as i32;
        let (nr, nrp) = (self.q_r.ncols(), self.q_rperp.ncols());
        let p = self.space.project_vector(ki, 3, |x| v(x).iter().copied().collect());
        let mut out = DVector::zeros(self.curl_dim());
        out.rows_mut(0, nr).copy_from(&self.q_r.tr_mul(&p));
        out.rows_mut(nr, nrp).copy_from(&self.q_rperp.tr_mul(&p));
        for (f, fd) in self.faces.iter().enumerate() {
            let nint = fd.q_r.ncols() + fd.q_perp.ncols();
            let local = fd.interp_rot(&v);
            out.rows_mut(self.curl_face_offset(f), nint).copy_from(&local.rows(0, nint));
        }
        for (e, es) in self.edges.iter().enumerate() {
            let t = self.cell.edges[e].t;
            out.rows_mut(self.curl_edge_offset(e), k + 1).copy_from(&es.project(ki, |x| v(x).dot(&t)));
        }
        out
    }

    /// `I_div,T v`.
    pub fn interp_div(&self, v: impl Fn(&Point) -> Vector3<f64> + Sync) -> DVector<f64> {
        let ki = self.k as i32;
        let (ngg, ngp) = (self.q_g.ncols(), self.q_gperp.ncols());
        let p = self.space.project_vector(ki, 3, |x| v(x).iter().copied().collect());
        let mut out = DVector::zeros(self.div_dim());
        out.rows_mut(0, ngg).copy_from(&self.q_g.tr_mul(&p));
        out.rows_mut(ngg, ngp).copy_from(&self.q_gperp.tr_mul(&p));
        for (f, fd) in self.faces.iter().enumerate() {
            let n = self.cell.faces[f].normal;
            out.rows_mut(self.div_face_offset(f), n2(ki)).copy_from(&fd.space.project(ki, |x| v(x).dot(&n)));
        }
        out
    }

    fn build_gram_grad(&self) -> DMatrix<f64> {
        let ki = self.k as i32;
        let ng = self.grad_dim();
        let h = self.diameter();
        let p = &self.potential_grad;
        let delta = self.interp_grad_poly(ki + 1) * p - DMatrix::identity(ng, ng);
        let nqt = n3(ki - 1);
        let skel0 = self.skeleton_offset();
        let dt = delta.rows(0, nqt).into_owned();
        let df = delta.rows(nqt, skel0 - nqt).into_owned();
        let ds = delta.rows(skel0, self.skeleton.ndofs()).into_owned();
        let mut out = p.tr_mul(p) + dt.tr_mul(&dt) + df.tr_mul(&df) * h;
        for te in &self.skeleton.edges {
            let de = &te.to_edge * &ds;
            out += de.tr_mul(&de) * (h * h);
        }
        symmetrize(out)
    }

    fn build_gram_curl(&self) -> DMatrix<f64> {
        let ki = self.k as i32;
        let nc = self.curl_dim();
        let h = self.diameter();
        let p = &self.potential_curl;
        let delta = self.interp_curl_poly(ki) * p - DMatrix::identity(nc, nc);
        let nr = self.q_r.ncols();
        let f0 = nr + self.q_rperp.ncols();
        let e0 = self.curl_edge_offset(0);
        let dr = delta.rows(0, nr).into_owned();
        let df = delta.rows(f0, e0 - f0).into_owned();
        let de = delta.rows(e0, nc - e0).into_owned();
        symmetrize(p.tr_mul(p) + dr.tr_mul(&dr) + df.tr_mul(&df) * h + de.tr_mul(&de) * (h * h))
    }

    fn build_gram_div(&self) -> DMatrix<f64> {
        let ki = self.k as i32;
        let nk = n3(ki);
        let nd = self.div_dim();
        let h = self.diameter();
        let p = &self.potential_div;
        let mut out = p.tr_mul(p);
        for f in 0..self.faces.len() {
            let n = self.cell.faces[f].normal;
            let mass = self.cf_mass(f, ki, ki);
            let mut trace = DMatrix::zeros(n2(ki), 3 * nk);
            for c in 0..3 {
                trace.view_mut((0, c * nk), (n2(ki), nk)).copy_from(&(&mass * n[c]));
            }
            let d = trace * p - identity_block(n2(ki), nd, self.div_face_offset(f));
            out += d.tr_mul(&d) * h;
        }
        symmetrize(out)
    }

    /// Orthonormal coefficients (in `P^{k+1}(T)^3`) of `P^k(T)^3 + (x - x_T) × P^k(T)^3`.
    pub fn nedelec_basis(&self) -> DMatrix<f64> {
        self.trimmed_basis(true)
    }

    /// Orthonormal coefficients (in `P^{k+1}(T)^3`) of `P^k(T)^3 + (x - x_T) P^k(T)`.
    pub fn raviart_thomas_basis(&self) -> DMatrix<f64> {
        self.trimmed_basis(false)
    }

    fn trimmed_basis(&self, cross: bool) -> DMatrix<f64> {
        let ki = self.k as i32;
        let (nk, n1) = (n3(ki), n3(ki + 1));
        let pts = &self.space.rule.points;
        let w = self.space.wvals.columns(0, n1);
        let mut gens = vec![resize_coords(3, nk, n1)];
        let ncomp_in = if cross { 3 } else { 1 };
        let mut extra = DMatrix::zeros(3 * n1, ncomp_in * nk);
        for c in 0..ncomp_in {
            for i in 0..nk {
                let mut vals = DMatrix::zeros(pts.len(), 3);
                for (q, x) in pts.iter().enumerate() {
                    let phi = self.space.vals[(q, i)];
                    let r = x - self.cell.centroid;
                    let g = if cross { r.cross(&Vector3::ith(c, phi)) } else { r * phi };
                    for d in 0..3 {
                        vals[(q, d)] = g[d];
                    }
                }
                for d in 0..3 {
                    extra.view_mut((d * n1, c * nk + i), (n1, 1)).copy_from(&w.tr_mul(&vals.column(d)));
                }
            }
        }
        gens.push(extra);
        let refs: Vec<&DMatrix<f64>> = gens.iter().collect();
        linalg::range(&linalg::hstack(&refs, 3 * n1), RANK_TOL)
    }

    /// `∫_F v_F` for face data in `P^k(F)` per face.
    fn face_integral(&self, f: usize, vf: &DVector<f64>) -> f64 {
        let fd = &self.faces[f];
        let nk2 = n2(self.k as i32);
        let ones = fd.space.wvals.columns(0, nk2).row_sum();
        ones.transpose().dot(vf)
    }

    fn face_data(&self, v: &DVector<f64>) -> Vec<DVector<f64>> {
        let nk2 = n2(self.k as i32);
        (0..self.faces.len()).map(|f| v.rows(self.div_face_offset(f), nk2).into_owned()).collect()
    }

    /// `Σ_F ω_TF ∫_F v_F` and a scale for it.
    pub fn boundary_flux_defect(&self, v: &DVector<f64>) -> (f64, f64) {
        let data = self.face_data(v);
        let nf = self.faces.len();
        let total: f64 = (0..nf).map(|f| self.omega(f) * self.face_integral(f, &data[f])).sum();
        let scale: f64 = (0..nf).map(|f| self.face_integral(f, &data[f].map(f64::abs)).abs() + data[f].norm() * self.cell.faces[f].area.sqrt()).sum();
        (total, scale)
    }

    /// `Σ_F ω_TF Σ_E ω_FE ∫_E (w_F)_E`, where `w_F` are the minimum-norm face lifts of the face
    /// blocks of `v`. Vanishes exactly when the edge-constant system is solvable.
    pub fn solvability_defect(&self, v: &DVector<f64>, tol: f64) -> Result<f64> {
        let data = self.face_data(v);
        let k = self.k;
        let mut total = 0.0;
        for (f, fd) in self.faces.iter().enumerate() {
            let w = fd.lift_rot(&data[f], tol)?;
            let nint = fd.q_r.ncols() + fd.q_perp.ncols();
            for (ie, fe) in self.cell.faces[f].edges.iter().enumerate() {
                let ints = self.edges[fe.edge].wvals.columns(0, k + 1).row_sum();
                total += self.omega(f) * fe.omega as f64 * ints.transpose().dot(&w.rows(nint + ie * (k + 1), k + 1));
            }
        }
        Ok(total)
    }

    /// Boundary values `z ∈ X_curl,T` (cell blocks zero) whose face curls `C_F z_F` equal the face
    /// blocks of `v ∈ X_div,T`. Requires `Σ_F ω_TF ∫_F v_F = 0`.
    pub fn lift_boundary_curl(&self, v: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        let (total, scale) = self.boundary_flux_defect(v);
        if linalg::relative(total.abs(), scale) > tol {
            return Err(DdrError::Incompatible { what: format!("boundary curl on cell {} (zero flux)", self.cell.id), defect: total.abs() });
        }
        self.lift_boundary_curl_unchecked(v, tol)
    }

    /// [`CellDdr::lift_boundary_curl`] without the zero-flux pre-check; incompatible data is then
    /// caught by the solvability test of the edge-constant system.
    pub fn lift_boundary_curl_unchecked(&self, v: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        let k = self.k;
        let ki = k as i32;
        let nf = self.faces.len();
        let data = self.face_data(v);

        // Independent face lifts.
        let w: Vec<DVector<f64>> = (0..nf).map(|f| self.faces[f].lift_rot(&data[f], tol)).collect::<Result<_>>()?;
        let edge_part = |f: usize, ie: usize| -> DVector<f64> {
            let fd = &self.faces[f];
            let off = fd.q_r.ncols() + fd.q_perp.ncols() + ie * (k + 1);
            w[f].rows(off, k + 1).into_owned()
        };
        // Per face and face edge, the other face sharing the edge.
        let mut owners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.edges.len()];
        for (f, face) in self.cell.faces.iter().enumerate() {
            for (ie, fe) in face.edges.iter().enumerate() {
                owners[fe.edge].push((f, ie));
            }
        }
        let edge_ints: Vec<DVector<f64>> = self.edges.iter().map(|e| e.wvals.columns(0, k + 1).row_sum().transpose()).collect();
        // Half-jumps W_FE and the constant corrections r_E.
        let mut half = vec![Vec::new(); nf];
        for (f, face) in self.cell.faces.iter().enumerate() {
            for (ie, fe) in face.edges.iter().enumerate() {
                let &(g, je) = owners[fe.edge].iter().find(|&&(g, _)| g != f).expect("edge shared by two faces");
                half[f].push((edge_part(g, je) - edge_part(f, ie)) * 0.5);
            }
        }
        let ne = self.edges.len();
        let mut a = DMatrix::zeros(nf, ne);
        let mut b = DVector::zeros(nf);
        for (f, face) in self.cell.faces.iter().enumerate() {
            for (ie, fe) in face.edges.iter().enumerate() {
                let om = fe.omega as f64;
                a[(f, fe.edge)] += om;
                b[f] -= om * edge_ints[fe.edge].dot(&half[f][ie]);
            }
        }
        let r = linalg::lstsq_min_norm(&a, &b, RANK_TOL);
        let res = (&a * &r - &b).norm();
        if linalg::relative(res, a.norm() * r.norm() + b.norm()) > tol {
            return Err(DdrError::Incompatible { what: format!("edge-constant system on cell {}", self.cell.id), defect: res });
        }

        let mut out = DVector::zeros(self.curl_dim());
        let mut edge_count = vec![0.0; ne];
        for (f, fd) in self.faces.iter().enumerate() {
            let face = &self.cell.faces[f];
            let mut y = DVector::zeros(face.edges.len() * (k + 1));
            for (ie, fe) in face.edges.iter().enumerate() {
                let len = self.cell.edges[fe.edge].length;
                let yc = &half[f][ie] + &edge_ints[fe.edge] * (r[fe.edge] / len);
                y.rows_mut(ie * (k + 1), k + 1).copy_from(&yc);
            }
            let q = fd.lift_boundary_gradient(&y, tol.max(1e-8))?;
            let mut qf = DVector::zeros(fd.grad_dim());
            qf.rows_mut(n2(ki - 1), fd.trace.ndofs()).copy_from(&q);
            let z = &w[f] + &fd.gradient * qf;
            let nint = fd.q_r.ncols() + fd.q_perp.ncols();
            out.rows_mut(self.curl_face_offset(f), nint).copy_from(&z.rows(0, nint));
            for (ie, fe) in face.edges.iter().enumerate() {
                let off = self.curl_edge_offset(fe.edge);
                let mut dst = out.rows_mut(off, k + 1);
                dst += z.rows(nint + ie * (k + 1), k + 1);
                edge_count[fe.edge] += 1.0;
            }
        }
        for (e, &c) in edge_count.iter().enumerate() {
            let off = self.curl_edge_offset(e);
            let mut dst = out.rows_mut(off, k + 1);
            dst /= c;
        }
        Ok(out)
    }
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

    fn build(shape: &str, k: usize) -> CellDdr {
        let cell = shapes::by_name(shape).unwrap().cell(0).unwrap();
        CellDdr::new(&cell, k, &Options::default()).unwrap()
    }

    #[test]
    fn complex_and_euler() {
        for shape in ["tetra", "cube"] {
            for k in 0..3 {
                let d = build(shape, k);
                assert!((&d.curl * &d.gradient).amax() < 1e-10, "{shape} {k}");
                assert!((&d.div * &d.curl).amax() < 1e-10, "{shape} {k}");
                let chi = 1 + d.curl_dim() + d.scalar_dim();
                assert_eq!(chi, d.grad_dim() + d.div_dim());
                assert_eq!(linalg::rank(&d.div, RANK_TOL), d.scalar_dim());
            }
        }
    }

    #[test]
    fn potentials_reproduce_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = build("prism", 1);
        let ki = 1;
        let q = random(n3(ki + 1), &mut rng);
        let pg = &d.potential_grad * d.interp_grad_poly(ki + 1) * &q;
        assert!((pg - &q).amax() < 1e-10);
        let v = random(3 * n3(ki), &mut rng);
        let pc = &d.potential_curl * d.interp_curl_poly(ki) * &v;
        assert!((pc - &v).amax() < 1e-10);
        let pd = &d.potential_div * d.interp_div_poly(ki) * &v;
        assert!((pd - &v).amax() < 1e-10);
    }

    #[test]
    fn trimmed_dimensions() {
        for k in 0..3 {
            let d = build("tetra", k);
            assert_eq!(d.nedelec_basis().ncols(), (k + 1) * (k + 3) * (k + 4) / 2);
            assert_eq!(d.raviart_thomas_basis().ncols(), (k + 1) * (k + 2) * (k + 4) / 2);
        }
    }

    #[test]
    fn boundary_curl_lift() {
        for shape in ["cube", "tetra", "lprism"] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let d = build(shape, 1);
            let x = random(d.curl_dim(), &mut rng);
            let v = &d.curl * x;
            let z = d.lift_boundary_curl(&v, 1e-10).unwrap();
            for (f, fd) in d.faces.iter().enumerate() {
                let got = &fd.rot * &d.face_curl_restriction[f] * &z;
                let want = v.rows(d.div_face_offset(f), n2(1));
                assert!((got - want).amax() < 1e-10);
            }
            let bad = random(d.div_dim(), &mut rng);
            assert!(d.lift_boundary_curl(&bad, 1e-10).is_err());
            assert!(matches!(d.lift_boundary_curl_unchecked(&bad, 1e-10), Err(DdrError::Incompatible { .. })));
            let (flux, _) = d.boundary_flux_defect(&bad);
            let solv = d.solvability_defect(&bad, 1e-10).unwrap();
            assert!(flux.abs() > 1e-3 && (solv + flux).abs() < 1e-10, "{flux} {solv}");
        }
    }
}
