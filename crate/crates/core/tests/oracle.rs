//! Checks against closed-form integrals and hand-differentiated polynomials.

use ddr_core::ddr2d::{FaceDdr, Options};
use ddr_core::ddr3d::CellDdr;
use ddr_core::geometry::{Cell, Point};
use ddr_core::mesh::shapes;
use ddr_core::polyspaces::poly_dim;
use ddr_core::quadrature::{cell_rule, face_rule};
use ddr_core::verify::{self, Config, Sequence};
use nalgebra::{DVector, Vector3};

fn cell(name: &str) -> Cell {
    shapes::by_name(name).unwrap().cell(0).unwrap()
}

fn close(a: &DVector<f64>, b: &DVector<f64>, what: &str) {
    let err = (a - b).norm();
    assert!(err <= 1e-10 * (1.0 + b.norm()), "{what}: error {err:e}");
}

fn fact(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[test]
fn monomial_integrals_on_reference_cells() {
    let cube = cell("cube");
    let tet = cell("tetra");
    let tri = cell("triangle");
    let hex = cell("hexagon");
    for deg in [4usize, 9] {
        let rc = cell_rule(&cube, deg).unwrap();
        let rt = cell_rule(&tet, deg).unwrap();
        let rf = face_rule(&tri.faces[0], deg);
        let rh = face_rule(&hex.faces[0], deg);
        for a in 0..=3u32 {
            for b in 0..=3u32 {
                for c in 0..=3u32 {
                    if (a + b + c) as usize > deg {
                        continue;
                    }
                    let m = |p: &Point| p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32);
                    let unit = 1.0 / f64::from((a + 1) * (b + 1) * (c + 1));
                    assert!((rc.integrate(m) - unit).abs() < 1e-13, "cube {a}{b}{c}");
                    let simplex = fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
                    assert!((rt.integrate(m) - simplex).abs() < 1e-13, "tetra {a}{b}{c}");
                }
                if (a + b) as usize > deg {
                    continue;
                }
                let m = |p: &Point| p.x.powi(a as i32) * p.y.powi(b as i32);
                let tri_exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((rf.integrate(m) - tri_exact).abs() < 1e-13);
                // L-hexagon = [0,2]x[0,1] ∪ [0,1]x[1,2].
                let box_int = |x0: f64, x1: f64, y0: f64, y1: f64| {
                    let (pa, pb) = (f64::from(a + 1), f64::from(b + 1));
                    (x1.powf(pa) - x0.powf(pa)) / pa * (y1.powf(pb) - y0.powf(pb)) / pb
                };
                let l_exact = box_int(0.0, 2.0, 0.0, 1.0) + box_int(0.0, 1.0, 1.0, 2.0);
                assert!((rh.integrate(m) - l_exact).abs() < 1e-12, "hexagon {a}{b}");
            }
        }
    }
}

#[test]
fn polynomial_dimensions_match_monomial_enumeration() {
    for d in -1..=6i32 {
        let mut c2 = 0;
        let mut c3 = 0;
        for a in 0..=6 {
            for b in 0..=6 {
                if a + b <= d {
                    c2 += 1;
                }
                for c in 0..=6 {
                    if a + b + c <= d {
                        c3 += 1;
                    }
                }
            }
        }
        assert_eq!(poly_dim(2, d), c2);
        assert_eq!(poly_dim(3, d), c3);
    }
}

// q = 3x + xy - 2z^2 + xyz (degree 3), with its gradient.
fn q(p: &Point) -> f64 {
    3.0 * p.x + p.x * p.y - 2.0 * p.z * p.z + p.x * p.y * p.z
}

fn grad_q(p: &Point) -> Vector3<f64> {
    Vector3::new(3.0 + p.y + p.y * p.z, p.x + p.x * p.z, -4.0 * p.z + p.x * p.y)
}

// v = (y + 2z + xy, x - z, 3y + z^2) (degree 2), with its curl and divergence.
fn v(p: &Point) -> Vector3<f64> {
    Vector3::new(p.y + 2.0 * p.z + p.x * p.y, p.x - p.z, 3.0 * p.y + p.z * p.z)
}

fn curl_v(p: &Point) -> Vector3<f64> {
    Vector3::new(3.0 + 1.0, 2.0, 1.0 - 1.0 - p.x)
}

fn div_v(p: &Point) -> f64 {
    p.y + 2.0 * p.z
}

fn to_vec(w: Vector3<f64>) -> Vec<f64> {
    vec![w.x, w.y, w.z]
}

#[test]
fn solid_operators_on_hand_differentiated_polynomials() {
    for name in ["cube", "tetra", "lprism"] {
        let d = CellDdr::new(&cell(name), 2, &Options::default()).unwrap();
        let s = &d.space;
        let iq = d.interp_grad(q);
        close(&(&d.gradient * &iq), &d.interp_curl(grad_q), "uG I q = I grad q");
        close(&(&d.full_gradient * &iq), &s.project_vector(2, 3, |p| to_vec(grad_q(p))), "G• I q");
        close(&(&d.potential_grad * &iq), &s.project(3, q), "P_grad I q");
        let iv = d.interp_curl(v);
        close(&(&d.curl * &iv), &d.interp_div(curl_v), "uC I v = I curl v");
        close(&(&d.full_curl * &iv), &s.project_vector(2, 3, |p| to_vec(curl_v(p))), "C• I v");
        close(&(&d.potential_curl * &iv), &s.project_vector(2, 3, |p| to_vec(v(p))), "P_curl I v");
        let jv = d.interp_div(v);
        close(&(&d.div * &jv), &s.project(2, div_v), "D I v = π div v");
        close(&(&d.potential_div * &jv), &s.project_vector(2, 3, |p| to_vec(v(p))), "P_div I v");
    }
}

#[test]
fn solid_l2_products_reproduce_exact_integrals() {
    // Unit cube: ∫ x y = 1/4, ∫ x^2 = 1/3. Unit tetrahedron: ∫ x y = 1/120, ∫ x^2 = 1/60.
    for (name, xy, xx) in [("cube", 0.25, 1.0 / 3.0), ("tetra", 1.0 / 120.0, 1.0 / 60.0)] {
        let d = CellDdr::new(&cell(name), 1, &Options::default()).unwrap();
        let ix = d.interp_grad(|p| p.x);
        let iy = d.interp_grad(|p| p.y);
        assert!((ix.dot(&(&d.gram_grad * &iy)) - xy).abs() < 1e-12, "{name} grad");
        let cx = d.interp_curl(|p| Vector3::new(p.x, 0.0, 0.0));
        assert!((cx.dot(&(&d.gram_curl * &cx)) - xx).abs() < 1e-12, "{name} curl");
        let dx = d.interp_div(|p| Vector3::new(0.0, p.x, 0.0));
        let dy = d.interp_div(|p| Vector3::new(0.0, p.y, 0.0));
        assert!((dx.dot(&(&d.gram_div * &dy)) - xy).abs() < 1e-12, "{name} div");
    }
}

#[test]
fn planar_operators_on_hand_differentiated_polynomials() {
    // q = x^2 y - 3 y + x y^2, v = (y^2 + x, x y - 2 y); polygons lie in z = 0 with normal +z.
    let q = |p: &Point| p.x * p.x * p.y - 3.0 * p.y + p.x * p.y * p.y;
    let grad = |p: &Point| Vector3::new(2.0 * p.x * p.y + p.y * p.y, p.x * p.x - 3.0 + 2.0 * p.x * p.y, 0.0);
    let v = |p: &Point| Vector3::new(p.y * p.y + p.x, p.x * p.y - 2.0 * p.y, 0.0);
    let rot_v = |p: &Point| p.y - 2.0 * p.y;
    for name in ["triangle", "square", "pentagon", "hexagon"] {
        let c = cell(name);
        let d = FaceDdr::new(&c, 0, 2, &Options::default()).unwrap();
        let iq = d.interp_grad(q);
        close(&(&d.gradient * &iq), &d.interp_rot(grad), "uG_F I q = I grad q");
        close(&(&d.potential * &iq), &d.space.project(3, q), "gamma_F I q");
        let ir = d.interp_rot(v);
        close(&(&d.rot * &ir), &d.space.project(2, rot_v), "C_F I v = π rot v");
        let frame = |p: &Point| {
            let w = v(p);
            vec![w.dot(&c.faces[0].tau[0]), w.dot(&c.faces[0].tau[1])]
        };
        close(&(&d.tangent_potential * &ir), &d.space.project_vector(2, 2, frame), "gamma_t I v");
    }
}

#[test]
fn diagnostic_defect_follows_dimension_count() {
    // dim P^2(F)^2 - (dim R^1(F) + dim R^2(F)⊥) = 12 - (5 + 3) = 4 on a triangle at k = 2.
    let cfg = Config::default();
    let seq = Sequence::build(&cell("triangle"), 2, &cfg.options).unwrap();
    let r = verify::run_almost_exact_diagnostics(&seq, &cfg);
    let defect = r.iter().find(|c| c.name == "diag.defect").unwrap();
    assert_eq!(defect.actual, Some(4));
    assert!(r.iter().all(|c| c.passed()));
    let image = r.iter().find(|c| c.name == "diag.image-full-rot").unwrap();
    assert_eq!(image.actual, Some(6));
}
