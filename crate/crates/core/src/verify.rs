//! Machine-checkable structural properties of the discrete sequences.
//!
//! Every check yields a [`CheckResult`]: either a relative residual compared with a tolerance, or
//! an expected/actual pair of integers (ranks, dimensions, DOF counts). Random inputs are
//! polynomials with coefficients uniform in `[-1, 1]` in the orthonormal bases, drawn from a
//! generator seeded by `(seed, cell, k, check name)`, so results do not depend on scheduling.
//!
//! Residuals of identities `A x = b` are `‖A x - b‖ / (‖A‖_F ‖x‖ + ‖b‖)`, maximized over samples
//! (and over row blocks for the commutation diagrams).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ddr2d::{FaceDdr, Options};
use crate::ddr3d::CellDdr;
use crate::error::{DdrError, Result};
use crate::geometry::{check_orientation_identities, Cell};
use crate::layout::{Entity, Layout};
use crate::linalg::{self, RANK_TOL};
use crate::matrix_io::{Axis, MatrixFile};
use crate::par;
use crate::polyspaces::{poly_dim, resize_coords};

fn n2(d: usize) -> usize {
    poly_dim(2, d as i32)
}

fn n3(d: usize) -> usize {
    poly_dim(3, d as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Exactness,
    Commutation,
    Consistency,
    DofTables,
    Diagnostics,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Exactness, Suite::Commutation, Suite::Consistency, Suite::DofTables, Suite::Diagnostics];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Exactness => "exactness",
            Suite::Commutation => "commutation",
            Suite::Consistency => "consistency",
            Suite::DofTables => "dof-tables",
            Suite::Diagnostics => "diagnostics",
        }
    }

    /// Comma-separated suite names, `all` selecting every suite.
    pub fn parse_list(s: &str) -> std::result::Result<Vec<Suite>, String> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if tok == "all" {
                out.extend(Suite::ALL);
                continue;
            }
            match Suite::ALL.iter().find(|x| x.name() == tok) {
                Some(&x) => out.push(x),
                None => return Err(format!("unknown suite `{tok}` (expected exactness, commutation, consistency, dof-tables, diagnostics or all)")),
            }
        }
        if out.is_empty() {
            return Err("no suite selected".into());
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cell: usize,
    pub k: usize,
    pub status: Status,
    /// Non-negative; `f64::MAX` stands for a failed computation.
    pub residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual: Option<i64>,
    /// Wall-clock seconds (zero when timing is disabled).
    pub elapsed: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    /// Relative tolerance for identities.
    pub tol: f64,
    /// Relative tolerance for the L2-product consistency identities.
    pub l2_tol: f64,
    /// Singular values below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
    pub seed: u64,
    /// Random samples per identity.
    pub samples: usize,
    /// Right-hand sides per surjectivity construction.
    pub rhs_samples: usize,
    pub timing: bool,
    /// Include the fault-injection checks in the exactness suite.
    pub negative_controls: bool,
    pub options: Options,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            tol: 1e-10,
            l2_tol: 1e-11,
            rank_tol: RANK_TOL,
            seed: 0,
            samples: 20,
            rhs_samples: 10,
            timing: true,
            negative_controls: true,
            options: Options::default(),
        }
    }
}

/// Largest rank tolerance accepted by the `rank-tolerance` check.
pub const MAX_RANK_TOL: f64 = 1e-6;

/// Smallest admissible `λ_min / λ_max` of a Gram matrix.
pub const GRAM_RATIO: f64 = 1e-12;

/// The discrete sequence built on one cell.
#[derive(Clone, Debug)]
pub enum Sequence {
    Planar { cell: Box<Cell>, face: Box<FaceDdr> },
    Solid(Box<CellDdr>),
}

impl Sequence {
    pub fn build(cell: &Cell, k: usize, options: &Options) -> Result<Sequence> {
        if cell.dim == 2 {
            Ok(Sequence::Planar { cell: Box::new(cell.clone()), face: Box::new(FaceDdr::new(cell, 0, k, options)?) })
        } else {
            Ok(Sequence::Solid(Box::new(CellDdr::new(cell, k, options)?)))
        }
    }

    pub fn cell(&self) -> &Cell {
        match self {
            Sequence::Planar { cell, .. } => cell,
            Sequence::Solid(d) => &d.cell,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Sequence::Planar { face, .. } => face.k,
            Sequence::Solid(d) => d.k,
        }
    }

    /// Every assembled operator with its row and column layouts.
    pub fn operators(&self) -> Vec<MatrixFile> {
        let k = self.k();
        match self {
            Sequence::Planar { face: d, .. } => {
                let (g, r) = (Axis::from(&d.grad_layout), Axis::from(&d.rot_layout));
                let pk = Axis::plain(&format!("P^{k}(F)"), n2(k));
                let pk2 = Axis::plain(&format!("P^{k}(F)^2"), 2 * n2(k));
                let pk1 = Axis::plain(&format!("P^{}(F)", k + 1), n2(k + 1));
                vec![
                    MatrixFile::new("uG_F", r.clone(), g.clone(), d.gradient.clone()),
                    MatrixFile::new("C_F", pk, r.clone(), d.rot.clone()),
                    MatrixFile::new("Gfull_F", pk2.clone(), g.clone(), d.full_gradient.clone()),
                    MatrixFile::new("gamma_F", pk1, g.clone(), d.potential.clone()),
                    MatrixFile::new("gamma_tF", pk2, r.clone(), d.tangent_potential.clone()),
                    MatrixFile::new("Gram_grad_F", g.clone(), g, d.gram_grad.clone()),
                    MatrixFile::new("Gram_rot_F", r.clone(), r, d.gram_rot.clone()),
                ]
            }
            Sequence::Solid(d) => {
                let (g, c, v) = (Axis::from(&d.grad_layout), Axis::from(&d.curl_layout), Axis::from(&d.div_layout));
                let pk = Axis::plain(&format!("P^{k}(T)"), n3(k));
                let pk3 = Axis::plain(&format!("P^{k}(T)^3"), 3 * n3(k));
                let pk1 = Axis::plain(&format!("P^{}(T)", k + 1), n3(k + 1));
                vec![
                    MatrixFile::new("uG_T", c.clone(), g.clone(), d.gradient.clone()),
                    MatrixFile::new("uC_T", v.clone(), c.clone(), d.curl.clone()),
                    MatrixFile::new("D_T", pk, v.clone(), d.div.clone()),
                    MatrixFile::new("Gfull_T", pk3.clone(), g.clone(), d.full_gradient.clone()),
                    MatrixFile::new("Cfull_T", pk3.clone(), c.clone(), d.full_curl.clone()),
                    MatrixFile::new("P_grad", pk1, g.clone(), d.potential_grad.clone()),
                    MatrixFile::new("P_curl", pk3.clone(), c.clone(), d.potential_curl.clone()),
                    MatrixFile::new("P_div", pk3, v.clone(), d.potential_div.clone()),
                    MatrixFile::new("Gram_grad_T", g.clone(), g, d.gram_grad.clone()),
                    MatrixFile::new("Gram_curl_T", c.clone(), c, d.gram_curl.clone()),
                    MatrixFile::new("Gram_div_T", v.clone(), v, d.gram_div.clone()),
                ]
            }
        }
    }
}

enum Outcome {
    Residual { value: f64, tol: f64, detail: String },
    Count { expected: i64, actual: i64, detail: String },
}

fn residual(value: f64, tol: f64) -> Outcome {
    Outcome::Residual { value, tol, detail: String::new() }
}

fn count(expected: impl TryInto<i64>, actual: impl TryInto<i64>) -> Outcome {
    Outcome::Count { expected: expected.try_into().unwrap_or(i64::MAX), actual: actual.try_into().unwrap_or(i64::MAX), detail: String::new() }
}

impl Outcome {
    fn with_detail(mut self, d: String) -> Outcome {
        match &mut self {
            Outcome::Residual { detail, .. } | Outcome::Count { detail, .. } => *detail = d,
        }
        self
    }
}

/// 64-bit FNV-1a, used to derive per-check seeds.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

struct Checks<'a> {
    cell: usize,
    k: usize,
    cfg: &'a Config,
    out: Vec<CheckResult>,
}

impl<'a> Checks<'a> {
    fn new(cell: usize, k: usize, cfg: &'a Config) -> Checks<'a> {
        Checks { cell, k, cfg, out: Vec::new() }
    }

    fn rng(&self, name: &str) -> ChaCha8Rng {
        let mix = self.cfg.seed ^ fnv1a(name) ^ (self.cell as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (self.k as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
        ChaCha8Rng::seed_from_u64(mix)
    }

    fn push(&mut self, name: &str, outcome: Outcome, elapsed: f64) {
        let elapsed = if self.cfg.timing { elapsed } else { 0.0 };
        let r = match outcome {
            Outcome::Residual { value, tol, detail } => {
                let value = if value.is_finite() { value.abs() } else { f64::MAX };
                let status = if value <= tol { Status::Pass } else { Status::Fail };
                CheckResult { name: name.to_string(), cell: self.cell, k: self.k, status, residual: value, tolerance: tol, expected: None, actual: None, elapsed, detail }
            }
            Outcome::Count { expected, actual, detail } => {
                let status = if expected == actual { Status::Pass } else { Status::Fail };
                let value = expected.abs_diff(actual) as f64;
                CheckResult { name: name.to_string(), cell: self.cell, k: self.k, status, residual: value, tolerance: 0.0, expected: Some(expected), actual: Some(actual), elapsed, detail }
            }
        };
        log::debug!("cell {} k {} {}: {:?} residual {:e}", r.cell, r.k, r.name, r.status, r.residual);
        self.out.push(r);
    }

    fn run(&mut self, name: &str, f: impl FnOnce(&mut ChaCha8Rng) -> Outcome) {
        let mut rng = self.rng(name);
        let t = Instant::now();
        let o = f(&mut rng);
        self.push(name, o, t.elapsed().as_secs_f64());
    }
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn column_residuals(ax: &DMatrix<f64>, x: &DMatrix<f64>, b: &DMatrix<f64>, anorm: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..x.ncols() {
        let diff = (ax.column(j) - b.column(j)).norm();
        worst = worst.max(linalg::relative(diff, anorm * x.column(j).norm() + b.column(j).norm()));
    }
    worst
}

/// Largest `‖A x_j - b_j‖ / (‖A‖_F ‖x_j‖ + ‖b_j‖)` over the columns of `x`.
fn identity_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    column_residuals(&(a * x), x, b, a.norm())
}

/// [`identity_residual`] evaluated separately on each row block of `rows`.
fn blockwise_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, b: &DMatrix<f64>, rows: &Layout) -> f64 {
    let ax = a * x;
    let mut worst: f64 = 0.0;
    for blk in rows.blocks.iter().filter(|b| b.len > 0) {
        let ab = a.rows(blk.offset, blk.len).norm();
        let r = column_residuals(&ax.rows(blk.offset, blk.len).into_owned(), x, &b.rows(blk.offset, blk.len).into_owned(), ab);
        worst = worst.max(r);
    }
    worst
}

/// `‖B A‖_F / (‖B‖_F ‖A‖_F)`.
fn complex_residual(next: &DMatrix<f64>, prev: &DMatrix<f64>) -> f64 {
    linalg::relative((next * prev).norm(), next.norm() * prev.norm())
}

struct Junction {
    rank_prev: usize,
    nullity_next: usize,
    /// Largest of `‖B Q‖ / ‖B‖` and `‖N - Q Qᵀ N‖`, with `Q` spanning `Im A` and `N` spanning `Ker B`.
    residual: f64,
}

fn junction(prev: &DMatrix<f64>, next: &DMatrix<f64>, tol: f64) -> Junction {
    let q = linalg::range(prev, tol);
    let n = linalg::null_space(next, tol);
    let inside = linalg::relative((next * &q).norm(), next.norm());
    let covered = (&n - &q * q.tr_mul(&n)).column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    Junction { rank_prev: q.ncols(), nullity_next: n.ncols(), residual: inside.max(covered) }
}

/// Residual of "`Ker A` is spanned by `u`".
fn kernel_is(a: &DMatrix<f64>, u: &DVector<f64>, tol: f64) -> (usize, f64) {
    let u = u.normalize();
    let n = linalg::null_space(a, tol);
    let inside = linalg::relative((a * &u).norm(), a.norm());
    let spanned = if n.ncols() == 1 { (&n - &u * u.tr_mul(&n)).norm() } else { 1.0 };
    (n.ncols(), inside.max(spanned))
}

fn definite(gram: &DMatrix<f64>) -> Outcome {
    let (lo, hi) = linalg::eig_extremes(gram);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    residual(cond, 1.0 / GRAM_RATIO).with_detail(format!("lambda_min {lo:.3e}, lambda_max {hi:.3e}"))
}

/// Largest `|(I q_j)ᵀ M (I r_j) - q_j·r_j| / (‖q_j‖ ‖r_j‖)`.
fn l2_residual(gram: &DMatrix<f64>, interp: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    let iq = interp * q;
    let ir = interp * r;
    let mut worst: f64 = 0.0;
    for j in 0..q.ncols() {
        let disc = iq.column(j).dot(&(gram * ir.column(j)));
        let exact = q.column(j).dot(&r.column(j));
        worst = worst.max(linalg::relative((disc - exact).abs(), q.column(j).norm() * r.column(j).norm()));
    }
    worst
}

fn rank_tolerance(c: &mut Checks, a: &DMatrix<f64>) {
    let tol = c.cfg.rank_tol;
    c.run("rank-tolerance", |_| {
        let s = linalg::singular_values(a);
        let smax = s.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let kept = s.iter().copied().filter(|&x| x > tol * smax).fold(f64::INFINITY, f64::min) / smax;
        let dropped = s.iter().copied().filter(|&x| x <= tol * smax).fold(0.0, f64::max) / smax;
        count(1, i64::from(tol <= MAX_RANK_TOL)).with_detail(format!(
            "rank tolerance {tol:e} (accepted up to {MAX_RANK_TOL:e}); smallest kept / largest dropped singular value ratio {kept:.3e} / {dropped:.3e}"
        ))
    });
}

// Two-dimensional checks.

fn exactness_2d(c: &mut Checks, cell: &Cell, d: &FaceDdr) {
    let (tol, rt) = (c.cfg.tol, c.cfg.rank_tol);
    let k = d.k;
    c.run("exact.complex.rot-grad", |_| residual(complex_residual(&d.rot, &d.gradient), tol));
    let t = Instant::now();
    let (nullity, res) = kernel_is(&d.gradient, &d.interp_grad_poly(0).column(0).into_owned(), rt);
    let el = t.elapsed().as_secs_f64();
    c.push("exact.kernel-grad.dim", count(1, nullity), el);
    c.push("exact.kernel-grad.constants", residual(res, tol), 0.0);
    let t = Instant::now();
    let j = junction(&d.gradient, &d.rot, rt);
    let el = t.elapsed().as_secs_f64();
    c.push("exact.image-grad.kernel-rot.dims", count(j.rank_prev, j.nullity_next), el);
    c.push("exact.image-grad.kernel-rot.spaces", residual(j.residual, tol), 0.0);
    c.run("exact.image-rot", |_| count(n2(k), linalg::rank(&d.rot, rt)));
    c.run("exact.euler", |_| count(0, 1 - d.grad_dim() as i64 + d.rot_dim() as i64 - n2(k) as i64));
    let seed = c.cfg.seed;
    c.run("exact.orientation", |_| {
        let r = check_orientation_identities(cell, seed);
        count(1, i64::from(r.ok)).with_detail(format!("frame defect {:.1e}, outward defect {:.1e}", r.frame_defect, r.outward_defect))
    });
    surjectivity_2d(c, d);
    if c.cfg.negative_controls {
        let opts = c.cfg.options;
        c.run("negative.flipped-edge-orientation", |rng| {
            let bad = cell.with_flipped_edge_orientation(0, 0);
            match FaceDdr::new(&bad, 0, k, &opts) {
                Err(e) => count(1, 1).with_detail(format!("construction failed: {e}")),
                Ok(b) => {
                    let q = random(n2(k + 1), 4, rng);
                    let comm = identity_residual(&(&b.gradient * b.interp_grad_poly(k as i32 + 1)), &q, &(b.interp_rot_poly(k as i32) * b.space.grad_matrix(k as i32 + 1, k as i32) * &q));
                    let cx = complex_residual(&b.rot, &b.gradient);
                    let worst = comm.max(cx);
                    count(1, i64::from(worst > tol)).with_detail(format!("complex {cx:.3e}, commutation {comm:.3e}"))
                }
            }
        });
    }
    rank_tolerance(c, &d.gradient);
}

fn boundary_constraint_2d(d: &FaceDdr) -> DVector<f64> {
    let k = d.k;
    let mut out = DVector::zeros(d.edges.len() * (k + 1));
    for (ie, e) in d.edges.iter().enumerate() {
        let ints = e.wvals.columns(0, k + 1).row_sum().transpose() * d.omega[ie];
        out.rows_mut(ie * (k + 1), k + 1).copy_from(&ints);
    }
    out
}

fn surjectivity_2d(c: &mut Checks, d: &FaceDdr) {
    let tol = c.cfg.tol;
    let nrhs = c.cfg.rhs_samples;
    let cons = boundary_constraint_2d(d);
    let nq = n2(d.k.wrapping_sub(1)).min(if d.k == 0 { 0 } else { usize::MAX });
    c.run("surjectivity.boundary-gradient", |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..nrhs {
            let mut r = random(cons.len(), 1, rng).column(0).into_owned();
            r -= &cons * (cons.dot(&r) / cons.norm_squared());
            match d.lift_boundary_gradient(&r, tol) {
                Ok(q) => {
                    let mut full = DVector::zeros(d.grad_dim());
                    full.rows_mut(nq, q.len()).copy_from(&q);
                    let res = (&d.boundary_gradient * &full - &r).norm();
                    worst = worst.max(linalg::relative(res, d.boundary_gradient.norm() * full.norm() + r.norm()));
                }
                Err(e) => return residual(f64::INFINITY, tol).with_detail(e.to_string()),
            }
        }
        residual(worst, tol)
    });
    c.run("surjectivity.boundary-gradient.zero-sum-necessary", |rng| {
        let r = random(cons.len(), 1, rng).column(0).into_owned();
        let defect = cons.dot(&r);
        let rejected = matches!(d.lift_boundary_gradient(&r, tol), Err(DdrError::Incompatible { .. }));
        count(1, i64::from(rejected)).with_detail(format!("zero-sum defect of the data {defect:.3e}"))
    });
}

/// Identities of one face sequence, as `(name, residual)` pairs.
fn face_identities(d: &FaceDdr, rng: &mut ChaCha8Rng, samples: usize) -> Vec<(&'static str, f64)> {
    let k = d.k;
    let ki = k as i32;
    let (nk, nk1, nq) = (n2(k), n2(k + 1), if k == 0 { 0 } else { n2(k - 1) });
    let i1 = d.interp_grad_poly(ki + 1);
    let mut out = Vec::new();

    let q = random(nk1, samples, rng);
    out.push(("gammaF.consistency", identity_residual(&(&d.potential * &i1), &q, &q)));
    let x = random(d.grad_dim(), samples, rng);
    out.push(("gammaF.projection", identity_residual(&d.potential.rows(0, nq).into_owned(), &x, &x.rows(0, nq).into_owned())));
    let v = random(2 * nk, samples, rng);
    out.push(("gammaT.consistency", identity_residual(&(&d.tangent_potential * d.interp_rot_poly(ki)), &v, &v)));
    out.push(("gammaT.gradient-link", identity_residual(&(&d.tangent_potential * &d.gradient), &x, &(&d.full_gradient * &x))));
    out.push(("fullgrad.consistency", identity_residual(&(&d.full_gradient * &i1), &q, &(d.space.grad_matrix(ki + 1, ki) * &q))));

    // C•_F on (π^k v, π^k (v·t_E)) for v ∈ P^{k+1}(F)^2.
    let ir = d.interp_rot_poly(ki + 1);
    let nint = d.q_r.ncols() + d.q_perp.ncols();
    let j = linalg::vstack(&[&resize_coords(2, nk1, nk), &ir.rows(nint, d.rot_dim() - nint).into_owned()], 2 * nk1);
    let v1 = random(2 * nk1, samples, rng);
    out.push(("fullrot.consistency", identity_residual(&(&d.full_rot * j), &v1, &(d.space.rot_matrix(ki + 1, ki) * &v1))));
    out
}

fn consistency_2d(c: &mut Checks, d: &FaceDdr) {
    let tol = c.cfg.tol;
    let l2 = c.cfg.l2_tol;
    let samples = c.cfg.samples;
    let k = d.k as i32;
    let mut rng = c.rng("face-identities");
    let t = Instant::now();
    let ids = face_identities(d, &mut rng, samples);
    let el = t.elapsed().as_secs_f64() / ids.len() as f64;
    for (name, r) in ids {
        c.push(name, residual(r, tol), el);
    }
    c.run("l2.grad.consistency", |rng| {
        let (q, r) = (random(n2(d.k + 1), samples, rng), random(n2(d.k + 1), samples, rng));
        residual(l2_residual(&d.gram_grad, &d.interp_grad_poly(k + 1), &q, &r), l2)
    });
    c.run("l2.rot.consistency", |rng| {
        let (q, r) = (random(2 * n2(d.k), samples, rng), random(2 * n2(d.k), samples, rng));
        residual(l2_residual(&d.gram_rot, &d.interp_rot_poly(k), &q, &r), l2)
    });
    c.run("l2.grad.definite", |_| definite(&d.gram_grad));
    c.run("l2.rot.definite", |_| definite(&d.gram_rot));
}

fn commutation_2d(c: &mut Checks, d: &FaceDdr) {
    let tol = c.cfg.tol;
    let samples = c.cfg.samples;
    let k = d.k as i32;
    c.run("commute.grad", |rng| {
        let q = random(n2(d.k + 1), samples, rng);
        let rhs = d.interp_rot_poly(k) * d.space.grad_matrix(k + 1, k) * &q;
        residual(blockwise_residual(&(&d.gradient * d.interp_grad_poly(k + 1)), &q, &rhs, &d.rot_layout), tol)
    });
    c.run("commute.rot", |rng| {
        let v = random(2 * n2(d.k + 1), samples, rng);
        residual(identity_residual(&(&d.rot * d.interp_rot_poly(k + 1)), &v, &(d.space.rot_matrix(k + 1, k) * &v)), tol)
    });
    c.run("commute.constants", |_| {
        let one = d.interp_grad_poly(0);
        let c1 = d.interp_rot_poly(0);
        let r = linalg::relative((&d.gradient * &one).norm(), d.gradient.norm() * one.norm())
            .max(linalg::relative((&d.rot * &c1).norm(), d.rot.norm() * c1.norm()));
        residual(r, tol)
    });
}

/// Almost-exactness of the full face sequence `(G•_F, G_∂F)`, `C•_F`.
fn diagnostics_face(c: &mut Checks, d: &FaceDdr, prefix: &str) {
    let (tol, rt) = (c.cfg.tol, c.cfg.rank_tol);
    let k = d.k;
    let ug = d.full_gradient_with_edges();
    let cf = &d.full_rot;
    c.run(&format!("diag.{prefix}kernel-full-grad"), |_| count(1, ug.ncols() - linalg::rank(&ug, rt)));
    c.run(&format!("diag.{prefix}complex-full"), |_| residual(complex_residual(cf, &ug), tol));
    c.run(&format!("diag.{prefix}image-full-rot"), |_| count(n2(k), linalg::rank(cf, rt)));
    c.run(&format!("diag.{prefix}defect"), |_| {
        // dim P^k(F)^2 - (dim R^{k-1}(F) + dim R^k(F)⊥).
        let dim_r = n2(k) - 1;
        let dim_rperp = 2 * n2(k) - (n2(k + 1) - 1);
        let expected = 2 * n2(k) - (dim_r + dim_rperp);
        let ker = cf.ncols() - linalg::rank(cf, rt);
        let im = linalg::rank(&ug, rt);
        count(expected, ker as i64 - im as i64).with_detail(format!("dim Ker C•_F = {ker}, dim Im uG•_F = {im}"))
    });
}

// Three-dimensional checks.

fn exactness_3d(c: &mut Checks, d: &CellDdr) {
    let (tol, rt) = (c.cfg.tol, c.cfg.rank_tol);
    let k = d.k;
    c.run("exact.complex.curl-grad", |_| residual(complex_residual(&d.curl, &d.gradient), tol));
    c.run("exact.complex.div-curl", |_| residual(complex_residual(&d.div, &d.curl), tol));
    let t = Instant::now();
    let (nullity, res) = kernel_is(&d.gradient, &d.interp_grad_poly(0).column(0).into_owned(), rt);
    let el = t.elapsed().as_secs_f64();
    c.push("exact.kernel-grad.dim", count(1, nullity), el);
    c.push("exact.kernel-grad.constants", residual(res, tol), 0.0);
    for (name, prev, next) in [("image-grad.kernel-curl", &d.gradient, &d.curl), ("image-curl.kernel-div", &d.curl, &d.div)] {
        let t = Instant::now();
        let j = junction(prev, next, rt);
        let el = t.elapsed().as_secs_f64();
        c.push(&format!("exact.{name}.dims"), count(j.rank_prev, j.nullity_next), el);
        c.push(&format!("exact.{name}.spaces"), residual(j.residual, tol), 0.0);
    }
    c.run("exact.image-div", |_| count(n3(k), linalg::rank(&d.div, rt)));
    c.run("exact.euler", |_| count(0, 1 - d.grad_dim() as i64 + d.curl_dim() as i64 - d.div_dim() as i64 + d.scalar_dim() as i64));
    let seed = c.cfg.seed;
    c.run("exact.orientation", |_| {
        let r = check_orientation_identities(&d.cell, seed);
        count(1, i64::from(r.ok)).with_detail(format!("weighted edge sum {}, frame defect {:.1e}", r.weighted_sum, r.frame_defect))
    });
    surjectivity_3d(c, d);
    if c.cfg.negative_controls {
        let opts = c.cfg.options;
        c.run("negative.flipped-face-orientation", |rng| {
            let bad = d.cell.with_flipped_face_orientation(0);
            match CellDdr::new(&bad, k, &opts) {
                Err(e) => count(1, 1).with_detail(format!("construction failed: {e}")),
                Ok(b) => {
                    let ki = k as i32;
                    let q = random(n3(k + 1), 4, rng);
                    let rhs = b.interp_curl_poly(ki) * b.space.grad_matrix(ki + 1, ki) * &q;
                    let comm = blockwise_residual(&(&b.gradient * b.interp_grad_poly(ki + 1)), &q, &rhs, &b.curl_layout);
                    let cx = complex_residual(&b.curl, &b.gradient).max(complex_residual(&b.div, &b.curl));
                    count(1, i64::from(comm.max(cx) > tol)).with_detail(format!("complex {cx:.3e}, commutation {comm:.3e}"))
                }
            }
        });
    }
    rank_tolerance(c, &d.gradient);
}

fn div_face_offset(d: &CellDdr, f: usize) -> usize {
    d.div_layout.block(&format!("F{}", d.cell.faces[f].id)).expect("face block").offset
}

fn surjectivity_3d(c: &mut Checks, d: &CellDdr) {
    let tol = c.cfg.tol;
    let nrhs = c.cfg.rhs_samples;
    let nk2 = n2(d.k);
    let mut cons = DVector::zeros(d.div_dim());
    for (f, fd) in d.faces.iter().enumerate() {
        let ints = fd.space.wvals.columns(0, nk2).row_sum().transpose() * f64::from(d.cell.face_orientation[f]);
        cons.rows_mut(div_face_offset(d, f), nk2).copy_from(&ints);
    }
    let compatible = |rng: &mut ChaCha8Rng| {
        let mut v = random(d.div_dim(), 1, rng).column(0).into_owned();
        v -= &cons * (cons.dot(&v) / cons.norm_squared());
        v
    };
    c.run("surjectivity.boundary-curl", |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..nrhs {
            let v = compatible(rng);
            let z = match d.lift_boundary_curl(&v, tol) {
                Ok(z) => z,
                Err(e) => return residual(f64::INFINITY, tol).with_detail(e.to_string()),
            };
            for (f, fd) in d.faces.iter().enumerate() {
                let op = &fd.rot * &d.face_curl_restriction[f];
                let vf = v.rows(div_face_offset(d, f), nk2);
                let res = (&op * &z - vf).norm();
                worst = worst.max(linalg::relative(res, op.norm() * z.norm() + vf.norm()));
            }
        }
        residual(worst, tol)
    });
    c.run("surjectivity.boundary-curl.zero-flux-necessary", |rng| {
        let v = random(d.div_dim(), 1, rng).column(0).into_owned();
        let (flux, _) = d.boundary_flux_defect(&v);
        let rejected = matches!(d.lift_boundary_curl(&v, tol), Err(DdrError::Incompatible { .. }));
        count(1, i64::from(rejected)).with_detail(format!("boundary flux of the data {flux:.3e}"))
    });
    c.run("surjectivity.boundary-curl.solvability-necessary", |rng| {
        let v = random(d.div_dim(), 1, rng).column(0).into_owned();
        let rejected = matches!(d.lift_boundary_curl_unchecked(&v, tol), Err(DdrError::Incompatible { .. }));
        count(1, i64::from(rejected)).with_detail("edge-constant system solved without the zero-flux pre-check".into())
    });
    c.run("surjectivity.boundary-curl.solvability-equivalence", |rng| {
        // Σ_F ω_TF Σ_E ω_FE ∫_E (w_F)_E = -Σ_F ω_TF ∫_F v_F, on compatible and incompatible data.
        let mut worst: f64 = 0.0;
        for i in 0..nrhs {
            let v = if i % 2 == 0 { compatible(rng) } else { random(d.div_dim(), 1, rng).column(0).into_owned() };
            let (flux, scale) = d.boundary_flux_defect(&v);
            match d.solvability_defect(&v, tol) {
                Ok(s) => worst = worst.max(linalg::relative((s + flux).abs(), scale)),
                Err(e) => return residual(f64::INFINITY, tol).with_detail(e.to_string()),
            }
        }
        residual(worst, tol)
    });
}

fn commutation_3d(c: &mut Checks, d: &CellDdr) {
    let tol = c.cfg.tol;
    let samples = c.cfg.samples;
    let k = d.k;
    let ki = k as i32;
    c.run("commute.grad", |rng| {
        let q = random(n3(k + 1), samples, rng);
        let rhs = d.interp_curl_poly(ki) * d.space.grad_matrix(ki + 1, ki) * &q;
        residual(blockwise_residual(&(&d.gradient * d.interp_grad_poly(ki + 1)), &q, &rhs, &d.curl_layout), tol)
    });
    c.run("commute.curl", |rng| {
        let nb = d.nedelec_basis();
        let x = random(nb.ncols(), samples, rng);
        let rhs = d.interp_div_poly(ki) * d.space.curl_matrix(ki + 1, ki) * &nb * &x;
        residual(blockwise_residual(&(&d.curl * d.interp_curl_poly(ki + 1) * &nb), &x, &rhs, &d.div_layout), tol)
    });
    c.run("commute.div", |rng| {
        let rt = d.raviart_thomas_basis();
        let x = random(rt.ncols(), samples, rng);
        let rhs = d.space.div_matrix(ki + 1, ki) * &rt * &x;
        residual(identity_residual(&(&d.div * d.interp_div_poly(ki + 1) * &rt), &x, &rhs), tol)
    });
    c.run("commute.constants", |_| {
        let one = d.interp_grad_poly(0);
        let cc = d.interp_curl_poly(0);
        let cd = d.interp_div_poly(0);
        let r = linalg::relative((&d.gradient * &one).norm(), d.gradient.norm() * one.norm())
            .max(linalg::relative((&d.curl * &cc).norm(), d.curl.norm() * cc.norm()))
            .max(linalg::relative((&d.div * &cd).norm(), d.div.norm() * cd.norm()));
        residual(r, tol)
    });
}

/// Face-frame coefficient matrix of `w ↦ w × n_F`: entry `(a, c)` is `(e_c × n_F)·τ_a`.
fn cross_normal(d: &CellDdr, f: usize) -> [[f64; 3]; 2] {
    let face = &d.cell.faces[f];
    let mut m = [[0.0; 3]; 2];
    for (a, row) in m.iter_mut().enumerate() {
        for (ci, x) in row.iter_mut().enumerate() {
            *x = Vector3::ith(ci, 1.0).cross(&face.normal).dot(&face.tau[a]);
        }
    }
    m
}

fn consistency_3d(c: &mut Checks, d: &CellDdr) {
    let tol = c.cfg.tol;
    let l2 = c.cfg.l2_tol;
    let samples = c.cfg.samples;
    let k = d.k;
    let ki = k as i32;
    let (nk, nk1) = (n3(k), n3(k + 1));

    c.run("faces.identities", |rng| {
        let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
        for fd in &d.faces {
            for (name, r) in face_identities(fd, rng, samples) {
                let w = worst.entry(name).or_insert(0.0);
                *w = w.max(r);
            }
        }
        let m = worst.values().copied().fold(0.0, f64::max);
        let detail = worst.iter().map(|(n, r)| format!("{n} {r:.1e}")).collect::<Vec<_>>().join(", ");
        residual(m, tol).with_detail(detail)
    });
    c.run("fullgrad.consistency", |rng| {
        let q = random(nk1, samples, rng);
        residual(identity_residual(&(&d.full_gradient * d.interp_grad_poly(ki + 1)), &q, &(d.space.grad_matrix(ki + 1, ki) * &q)), tol)
    });
    c.run("pgrad.consistency", |rng| {
        let q = random(nk1, samples, rng);
        residual(identity_residual(&(&d.potential_grad * d.interp_grad_poly(ki + 1)), &q, &q), tol)
    });
    c.run("pcurl.consistency", |rng| {
        let v = random(3 * nk, samples, rng);
        residual(identity_residual(&(&d.potential_curl * d.interp_curl_poly(ki)), &v, &v), tol)
    });
    c.run("pdiv.consistency", |rng| {
        let rt = d.raviart_thomas_basis();
        let x = random(rt.ncols(), samples, rng);
        let rhs = resize_coords(3, nk1, nk) * &rt * &x;
        residual(identity_residual(&(&d.potential_div * d.interp_div_poly(ki + 1) * &rt), &x, &rhs), tol)
    });
    c.run("fullcurl.consistency", |rng| {
        let nb = d.nedelec_basis();
        let x = random(nb.ncols(), samples, rng);
        let rhs = d.space.curl_matrix(ki + 1, ki) * &nb * &x;
        residual(identity_residual(&(&d.full_curl * d.interp_curl_poly(ki + 1) * &nb), &x, &rhs), tol)
    });
    c.run("div.consistency", |rng| {
        let v = random(3 * nk1, samples, rng);
        residual(identity_residual(&(&d.div * d.interp_div_poly(ki + 1)), &v, &(d.space.div_matrix(ki + 1, ki) * &v)), tol)
    });
    c.run("link.grad", |rng| {
        // ∫_T G•_T q · curl w = -Σ_F ω_TF ∫_F G•_F q_F · (w × n_F), w ∈ P^k(T)^3.
        let nk2 = n2(k);
        let curl = d.space.curl_matrix(ki, ki);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = random(d.grad_dim(), 1, rng).column(0).into_owned();
            let w = random(3 * nk, 1, rng).column(0).into_owned();
            let gx = &d.full_gradient * &x;
            let cw = &curl * &w;
            let lhs = gx.dot(&cw);
            let (mut rhs, mut scale) = (0.0, gx.norm() * cw.norm());
            for (f, fd) in d.faces.iter().enumerate() {
                let gf = &fd.full_gradient * &d.face_grad_restriction[f] * &x;
                let mass = d.cf_mass(f, ki, ki);
                let cn = cross_normal(d, f);
                let mut term = 0.0;
                for (a, row) in cn.iter().enumerate() {
                    for (ci, &coef) in row.iter().enumerate() {
                        term += coef * gf.rows(a * nk2, nk2).dot(&(&mass * w.rows(ci * nk, nk)));
                    }
                }
                let term = -f64::from(d.cell.face_orientation[f]) * term;
                rhs += term;
                scale += term.abs();
            }
            worst = worst.max(linalg::relative((lhs - rhs).abs(), scale));
        }
        residual(worst, tol)
    });
    for (name, projected) in [("link.curl", false), ("link.curl-projected", true)] {
        c.run(name, |rng| {
            // ∫_T C v · grad r = Σ_F ω_TF ∫_F C_F v_F r, with r ∈ P^{k+1}(T) for C•_T and r ∈ P^k(T)
            // for its projection on G^{k-1}(T).
            let m = if projected { ki } else { ki + 1 };
            let op = if projected { &d.q_g * d.q_g.tr_mul(&d.full_curl) } else { d.full_curl.clone() };
            let grad = d.space.grad_matrix(m, ki);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let x = random(d.curl_dim(), 1, rng).column(0).into_owned();
                let r = random(n3(m as usize), 1, rng).column(0).into_owned();
                let cx = &op * &x;
                let gr = &grad * &r;
                let lhs = cx.dot(&gr);
                let (mut rhs, mut scale) = (0.0, cx.norm() * gr.norm());
                for (f, fd) in d.faces.iter().enumerate() {
                    let cf = &fd.rot * &d.face_curl_restriction[f] * &x;
                    let term = f64::from(d.cell.face_orientation[f]) * cf.dot(&(d.cf_mass(f, ki, m) * &r));
                    rhs += term;
                    scale += term.abs();
                }
                worst = worst.max(linalg::relative((lhs - rhs).abs(), scale));
            }
            residual(worst, tol)
        });
    }
    c.run("restriction.faces", |_| {
        let mut worst: f64 = 0.0;
        for (f, fd) in d.faces.iter().enumerate() {
            let lhs = &d.face_curl_restriction[f] * &d.gradient;
            let rhs = &fd.gradient * &d.face_grad_restriction[f];
            worst = worst.max(linalg::relative((&lhs - &rhs).norm(), lhs.norm() + rhs.norm()));
        }
        residual(worst, tol)
    });
    c.run("l2.grad.consistency", |rng| {
        let (q, r) = (random(nk1, samples, rng), random(nk1, samples, rng));
        residual(l2_residual(&d.gram_grad, &d.interp_grad_poly(ki + 1), &q, &r), l2)
    });
    c.run("l2.curl.consistency", |rng| {
        let (q, r) = (random(3 * nk, samples, rng), random(3 * nk, samples, rng));
        residual(l2_residual(&d.gram_curl, &d.interp_curl_poly(ki), &q, &r), l2)
    });
    c.run("l2.div.consistency", |rng| {
        let (q, r) = (random(3 * nk, samples, rng), random(3 * nk, samples, rng));
        residual(l2_residual(&d.gram_div, &d.interp_div_poly(ki), &q, &r), l2)
    });
    c.run("l2.grad.definite", |_| definite(&d.gram_grad));
    c.run("l2.curl.definite", |_| definite(&d.gram_curl));
    c.run("l2.div.definite", |_| definite(&d.gram_div));
}

// DOF tables.

/// Entity classes in table order.
pub const ENTITY_CLASSES: [(Entity, &str); 4] = [(Entity::Vertex, "V"), (Entity::Edge, "E"), (Entity::Face, "F"), (Entity::Cell, "T")];

#[derive(Clone, Debug, Serialize)]
pub struct DofRow {
    pub space: String,
    /// Coefficients attached to one entity of each class (`None` when the class carries none).
    pub per_entity: [Option<usize>; 4],
    /// Number of entities of each class.
    pub entities: [usize; 4],
    pub total: usize,
    /// Whether all entities of a class carry the same number of coefficients.
    pub uniform: bool,
    /// Reference finite element counts, when tabulated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fe: Option<FeCounts>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FeCounts {
    pub per_entity: [Option<usize>; 4],
    pub total: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DofTable {
    pub cell: usize,
    /// Reference shape class (`triangle`, `rectangle`, `tetra`, `hexa`) when recognized.
    pub shape: Option<String>,
    pub dim: usize,
    pub k: usize,
    pub rows: Vec<DofRow>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct GoldenEntry {
    pub shape: String,
    pub space: String,
    pub k: usize,
    pub counts: BTreeMap<String, usize>,
    pub fe: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct GoldenFile {
    tables: Vec<GoldenEntry>,
}

/// Transcribed reference counts for triangles, quadrilaterals, tetrahedra and hexahedra, k ≤ 3.
pub fn golden_tables() -> &'static [GoldenEntry] {
    static TABLES: OnceLock<Vec<GoldenEntry>> = OnceLock::new();
    TABLES.get_or_init(|| {
        let f: GoldenFile = serde_json::from_str(include_str!("../data/dof_tables.json")).expect("embedded golden tables parse");
        f.tables
    })
}

pub fn golden(shape: &str, space: &str, k: usize) -> Option<&'static GoldenEntry> {
    golden_tables().iter().find(|g| g.shape == shape && g.space == space && g.k == k)
}

/// Reference shape class of a cell. Quadrilaterals count as `rectangle` and hexahedra with
/// quadrilateral faces as `hexa`: the counts depend only on the combinatorics.
pub fn reference_shape(cell: &Cell) -> Option<&'static str> {
    let nv = cell.vertices.len();
    let sides = |n: usize| cell.faces.iter().all(|f| f.loop_vertices.len() == n);
    match (cell.dim, nv, cell.faces.len()) {
        (2, 3, _) => Some("triangle"),
        (2, 4, _) => Some("rectangle"),
        (3, 4, 4) if sides(3) => Some("tetra"),
        (3, 8, 6) if sides(4) => Some("hexa"),
        _ => None,
    }
}

fn dof_row(space: &str, layout: Option<&Layout>, cell: &Cell, poly: Option<(Entity, usize)>) -> DofRow {
    let mut per_entity = [None; 4];
    let mut entities = [0; 4];
    let mut uniform = true;
    for (i, (ent, _)) in ENTITY_CLASSES.iter().enumerate() {
        entities[i] = match ent {
            Entity::Vertex => cell.vertices.len(),
            Entity::Edge => cell.edges.len(),
            Entity::Face => cell.faces.len(),
            Entity::Cell => usize::from(cell.dim == 3),
        };
        if let Some(l) = layout {
            let counts = l.per_entity(*ent);
            if let Some(&(_, first)) = counts.first() {
                uniform &= counts.iter().all(|&(_, n)| n == first);
                per_entity[i] = Some(first);
            }
        }
    }
    let mut total = layout.map_or(0, Layout::dim);
    if let Some((ent, n)) = poly {
        let i = ENTITY_CLASSES.iter().position(|(e, _)| *e == ent).expect("entity class");
        per_entity[i] = Some(n);
        total = n;
    }
    DofRow { space: space.to_string(), per_entity, entities, total, uniform, fe: None }
}

/// Entity-wise coefficient counts of every space of the sequence.
pub fn dof_table(seq: &Sequence) -> DofTable {
    let cell = seq.cell();
    let k = seq.k();
    let shape = reference_shape(cell).map(str::to_string);
    let mut rows = match seq {
        Sequence::Planar { face, .. } => vec![
            dof_row("X_grad", Some(&face.grad_layout), cell, None),
            dof_row("X_rot", Some(&face.rot_layout), cell, None),
            dof_row("P_k", None, cell, Some((Entity::Face, n2(k)))),
        ],
        Sequence::Solid(d) => vec![
            dof_row("X_grad", Some(&d.grad_layout), cell, None),
            dof_row("X_curl", Some(&d.curl_layout), cell, None),
            dof_row("X_div", Some(&d.div_layout), cell, None),
            dof_row("P_k", None, cell, Some((Entity::Cell, n3(k)))),
        ],
    };
    if let Some(s) = &shape {
        for row in &mut rows {
            if let Some(g) = golden(s, &row.space, k) {
                let per_entity = ENTITY_CLASSES.map(|(_, key)| g.fe.get(key).copied());
                row.fe = Some(FeCounts { per_entity, total: g.fe.get("total").copied() });
            }
        }
    }
    DofTable { cell: cell.id, shape, dim: cell.dim, k, rows }
}

fn dof_checks(c: &mut Checks, table: &DofTable) {
    for row in &table.rows {
        c.run(&format!("dof.{}.sum", row.space), |_| {
            let sum: usize = row.per_entity.iter().zip(&row.entities).map(|(n, m)| n.unwrap_or(0) * m).sum();
            let detail = if row.uniform { String::new() } else { "entity counts are not uniform".into() };
            count(row.total, if row.uniform { sum } else { usize::MAX }).with_detail(detail)
        });
        let Some(g) = table.shape.as_deref().and_then(|s| golden(s, &row.space, table.k)) else { continue };
        for (i, (_, key)) in ENTITY_CLASSES.iter().enumerate() {
            if let Some(&want) = g.counts.get(*key) {
                c.run(&format!("dof.{}.{key}", row.space), |_| count(want, row.per_entity[i].unwrap_or(0)));
            }
        }
        if let Some(&want) = g.counts.get("total") {
            c.run(&format!("dof.{}.total", row.space), |_| count(want, row.total));
        }
    }
}

// Orchestration.

pub fn run_exactness(seq: &Sequence, cfg: &Config) -> Vec<CheckResult> {
    let mut c = Checks::new(seq.cell().id, seq.k(), cfg);
    match seq {
        Sequence::Planar { cell, face } => exactness_2d(&mut c, cell, face),
        Sequence::Solid(d) => exactness_3d(&mut c, d),
    }
    c.out
}

pub fn run_commutation(seq: &Sequence, cfg: &Config) -> Vec<CheckResult> {
    let mut c = Checks::new(seq.cell().id, seq.k(), cfg);
    match seq {
        Sequence::Planar { face, .. } => commutation_2d(&mut c, face),
        Sequence::Solid(d) => commutation_3d(&mut c, d),
    }
    c.out
}

pub fn run_consistency(seq: &Sequence, cfg: &Config) -> Vec<CheckResult> {
    let mut c = Checks::new(seq.cell().id, seq.k(), cfg);
    match seq {
        Sequence::Planar { face, .. } => consistency_2d(&mut c, face),
        Sequence::Solid(d) => consistency_3d(&mut c, d),
    }
    c.out
}

/// Diagnostics of the full (unprojected) face sequences: the polygon itself, or every face.
pub fn run_almost_exact_diagnostics(seq: &Sequence, cfg: &Config) -> Vec<CheckResult> {
    let mut c = Checks::new(seq.cell().id, seq.k(), cfg);
    match seq {
        Sequence::Planar { face, .. } => diagnostics_face(&mut c, face, ""),
        Sequence::Solid(d) => {
            for fd in &d.faces {
                diagnostics_face(&mut c, fd, &format!("F{}.", fd.face.id));
            }
        }
    }
    c.out
}

pub fn run_dof_tables(seq: &Sequence, cfg: &Config) -> (DofTable, Vec<CheckResult>) {
    let mut c = Checks::new(seq.cell().id, seq.k(), cfg);
    let table = dof_table(seq);
    dof_checks(&mut c, &table);
    (table, c.out)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
    pub tables: Vec<DofTable>,
}

impl Report {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed()).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    /// JSON array of check results.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.checks).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Check report\n");
        let _ = writeln!(s, "{} passed, {} failed\n", self.passed(), self.failed());
        if !self.checks.is_empty() {
            let _ = writeln!(s, "| cell | k | check | status | residual | tolerance | expected | actual | elapsed (s) |");
            let _ = writeln!(s, "|---:|---:|---|---|---:|---:|---:|---:|---:|");
            for r in &self.checks {
                let opt = |x: Option<i64>| x.map_or(String::new(), |v| v.to_string());
                let status = if r.passed() { "pass" } else { "**FAIL**" };
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {:.3e} | {:.1e} | {} | {} | {:.4} |",
                    r.cell,
                    r.k,
                    r.name,
                    status,
                    r.residual,
                    r.tolerance,
                    opt(r.expected),
                    opt(r.actual),
                    r.elapsed
                );
            }
        }
        let failed: Vec<&CheckResult> = self.checks.iter().filter(|c| !c.passed() && !c.detail.is_empty()).collect();
        if !failed.is_empty() {
            let _ = writeln!(s, "\n## Failures\n");
            for r in failed {
                let _ = writeln!(s, "- cell {} k {} `{}`: {}", r.cell, r.k, r.name, r.detail);
            }
        }
        for t in &self.tables {
            s.push('\n');
            s.push_str(&t.to_markdown());
        }
        s
    }
}

impl DofTable {
    /// Table in the layout of the published comparison tables; reference counts in parentheses.
    pub fn to_markdown(&self) -> String {
        let classes: Vec<usize> = if self.dim == 2 { vec![0, 1, 2] } else { vec![0, 1, 2, 3] };
        let mut s = String::new();
        let shape = self.shape.as_deref().unwrap_or("cell");
        let _ = writeln!(s, "## DOF table: cell {} ({shape}), k = {}\n", self.cell, self.k);
        let mut head = "| space | k |".to_string();
        let mut rule = "|---|---:|".to_string();
        for &i in &classes {
            head.push_str(&format!(" {} |", ENTITY_CLASSES[i].1));
            rule.push_str("---:|");
        }
        let _ = writeln!(s, "{head} total |\n{rule}---:|");
        for row in &self.rows {
            let fe = row.fe.as_ref();
            let cell = |n: Option<usize>, r: Option<usize>| match (n, r) {
                (None, _) => String::new(),
                (Some(n), Some(r)) => format!("{n} ({r})"),
                (Some(n), None) => n.to_string(),
            };
            let mut line = format!("| {} | {} |", row.space, self.k);
            for &i in &classes {
                line.push_str(&format!(" {} |", cell(row.per_entity[i], fe.and_then(|f| f.per_entity[i]))));
            }
            line.push_str(&format!(" {} |", cell(Some(row.total), fe.and_then(|f| f.total))));
            let _ = writeln!(s, "{line}");
        }
        s
    }
}

/// All selected suites on one cell at degree `k`.
pub fn run_cell(cell: &Cell, k: usize, suites: &[Suite], cfg: &Config) -> Result<(Vec<CheckResult>, Option<DofTable>)> {
    let seq = Sequence::build(cell, k, &cfg.options)?;
    let mut out = Vec::new();
    let mut table = None;
    for s in suites {
        match s {
            Suite::Exactness => out.extend(run_exactness(&seq, cfg)),
            Suite::Commutation => out.extend(run_commutation(&seq, cfg)),
            Suite::Consistency => out.extend(run_consistency(&seq, cfg)),
            Suite::Diagnostics => out.extend(run_almost_exact_diagnostics(&seq, cfg)),
            Suite::DofTables => {
                let (t, checks) = run_dof_tables(&seq, cfg);
                out.extend(checks);
                table = Some(t);
            }
        }
    }
    Ok((out, table))
}

/// Every selected suite over all `(cell, k)` pairs, in parallel; results sorted by
/// `(cell, k, name)`.
pub fn run(cells: &[Cell], degrees: &[usize], suites: &[Suite], cfg: &Config) -> Result<Report> {
    let tasks: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| degrees.iter().map(move |&k| (c, k))).collect();
    let results = par::map(&tasks, |&(c, k)| run_cell(&cells[c], k, suites, cfg));
    let mut report = Report::default();
    for r in results {
        let (checks, table) = r?;
        report.checks.extend(checks);
        report.tables.extend(table);
    }
    report.checks.sort_by(|a, b| (a.cell, a.k, &a.name).cmp(&(b.cell, b.k, &b.name)));
    report.tables.sort_by_key(|t| (t.cell, t.k));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    fn cell(name: &str) -> Cell {
        shapes::by_name(name).unwrap().cell(0).unwrap()
    }

    fn failures(r: &[CheckResult]) -> Vec<String> {
        r.iter().filter(|c| !c.passed()).map(|c| format!("{} k={} {:e} {:?}/{:?} {}", c.name, c.k, c.residual, c.expected, c.actual, c.detail)).collect()
    }

    #[test]
    fn suite_lists_parse() {
        assert_eq!(Suite::parse_list("all").unwrap().len(), 5);
        assert_eq!(Suite::parse_list("dof-tables,exactness").unwrap(), vec![Suite::Exactness, Suite::DofTables]);
        assert!(Suite::parse_list("bogus").is_err());
    }

    #[test]
    fn planar_suites_pass() {
        let cfg = Config { samples: 5, ..Config::default() };
        for k in 0..3 {
            let (r, _) = run_cell(&cell("pentagon"), k, &Suite::ALL, &cfg).unwrap();
            assert!(failures(&r).is_empty(), "{:?}", failures(&r));
        }
    }

    #[test]
    fn solid_suites_pass() {
        let cfg = Config { samples: 3, rhs_samples: 2, ..Config::default() };
        for k in 0..2 {
            let (r, t) = run_cell(&cell("tetra"), k, &Suite::ALL, &cfg).unwrap();
            assert!(failures(&r).is_empty(), "{:?}", failures(&r));
            assert_eq!(t.unwrap().shape.as_deref(), Some("tetra"));
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = Config { samples: 2, timing: false, ..Config::default() };
        let cells = vec![cell("square")];
        let a = run(&cells, &[0, 1], &Suite::ALL, &cfg).unwrap();
        let b = run(&cells, &[0, 1], &Suite::ALL, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_markdown().contains("| X_rot | 1 |"));
    }

    #[test]
    fn loose_rank_tolerance_is_reported() {
        let cfg = Config { rank_tol: 1e-2, ..Config::default() };
        let seq = Sequence::build(&cell("triangle"), 1, &cfg.options).unwrap();
        let r = run_exactness(&seq, &cfg);
        assert!(r.iter().any(|c| c.name == "rank-tolerance" && !c.passed()));
    }
}
