//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use egw::graph::Graph;
use egw::Matrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Wishart-like SPD matrix `AᵀA/k + 0.1 I` with `k = p + 5` Gaussian rows.
pub fn random_spd<R: Rng>(p: usize, rng: &mut R) -> Matrix {
    let k = p + 5;
    let a = DMatrix::from_fn(k, p, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let s = a.transpose() * &a / k as f64 + DMatrix::identity(p, p) * 0.1;
    from_na(&s)
}

pub fn random_graph<R: Rng>(p: usize, prob: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(p, edges).unwrap()
}

/// Random element of P_G: symmetric noise on the support, diagonal shifted
/// past the smallest eigenvalue.
pub fn random_in_pg<R: Rng>(g: &Graph, rng: &mut R) -> Matrix {
    let p = g.p();
    let mut m = DMatrix::zeros(p, p);
    for &(i, j) in g.edges() {
        let v: f64 = rng.random_range(-1.0..1.0);
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    for i in 0..p {
        m[(i, i)] = rng.random_range(0.0..1.0);
    }
    let lmin = m.clone().symmetric_eigen().eigenvalues.min();
    let shift = (0.5 - lmin).max(0.0) + rng.random_range(0.0..1.0);
    for i in 0..p {
        m[(i, i)] += shift;
    }
    from_na(&m)
}

/// Damped Newton maximisation of `log|Ω| − tr(SΩ)` over the free entries of `g`.
pub fn newton_mle(s: &Matrix, g: &Graph) -> Matrix {
    let p = g.p();
    let s = to_na(s);
    let mut pos: Vec<(usize, usize)> = (0..p).map(|i| (i, i)).collect();
    pos.extend(g.edges().iter().copied());
    let d = pos.len();
    let objective = |om: &DMatrix<f64>| -> Option<f64> {
        let c = om.clone().cholesky()?;
        let ld = 2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        Some(ld - (&s * om).trace())
    };
    let mut om = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 / s[(i, i)] } else { 0.0 });
    for _ in 0..200 {
        let w = om.clone().try_inverse().unwrap();
        let r = &w - &s;
        let grad = DVector::from_fn(d, |a, _| {
            let (i, j) = pos[a];
            if i == j {
                r[(i, i)]
            } else {
                2.0 * r[(i, j)]
            }
        });
        if grad.amax() < 1e-13 {
            break;
        }
        // negative Hessian: tr(W E_a W E_b)
        let mut h = DMatrix::zeros(d, d);
        for a in 0..d {
            let ea = unit(p, pos[a]);
            let wa = &w * ea;
            for b in 0..d {
                let eb = unit(p, pos[b]);
                h[(a, b)] = (&wa * &w * eb).trace();
            }
        }
        let step = h.cholesky().unwrap().solve(&grad);
        let f0 = objective(&om).unwrap();
        let mut t = 1.0;
        loop {
            let mut cand = om.clone();
            for a in 0..d {
                let (i, j) = pos[a];
                cand[(i, j)] += t * step[a];
                if i != j {
                    cand[(j, i)] += t * step[a];
                }
            }
            if let Some(f) = objective(&cand) {
                if f >= f0 - 1e-14 {
                    om = cand;
                    break;
                }
            }
            t *= 0.5;
            assert!(t > 1e-12, "line search failed");
        }
    }
    from_na(&om)
}

fn unit(p: usize, (i, j): (usize, usize)) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(p, p);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

/// Closed-form MLE for a decomposable graph given its cliques and separators.
pub fn decomposable_mle(s: &Matrix, cliques: &[Vec<usize>], seps: &[Vec<usize>]) -> Matrix {
    let p = s.nrows();
    let s = to_na(s);
    let mut out = DMatrix::zeros(p, p);
    let mut add = |set: &[usize], sign: f64| {
        let k = set.len();
        let sub = DMatrix::from_fn(k, k, |a, b| s[(set[a], set[b])]);
        let inv = sub.try_inverse().unwrap();
        for a in 0..k {
            for b in 0..k {
                out[(set[a], set[b])] += sign * inv[(a, b)];
            }
        }
    };
    for c in cliques {
        add(c, 1.0);
    }
    for sp in seps.iter().filter(|x| !x.is_empty()) {
        add(sp, -1.0);
    }
    from_na(&out)
}

/// `log|M|` via nalgebra.
pub fn log_det(m: &Matrix) -> f64 {
    let c = to_na(m).cholesky().expect("positive definite");
    2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>()
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let (f1, f2) = (f(c - x), f(c + x));
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol.max(1e-300) || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// `log ∫_0^∞ m^{k} e^{−dm/2} dm` by quadrature in `u = log m`.
pub fn log_gamma_integral(k: f64, d: f64) -> f64 {
    let mode = (2.0 * (k + 1.0) / d).ln();
    let logf = |u: f64| (k + 1.0) * u - 0.5 * d * u.exp();
    let shift = logf(mode);
    let width = 40.0 / (k + 1.0).sqrt() + 5.0;
    let mut f = |u: f64| (logf(u) - shift).exp();
    shift + integrate(&mut f, mode - width, mode + width.min(6.0), 1e-13).ln()
}

/// `log ∫_{P_2} |M|^{(δ−2)/2} exp(−½tr(DM)) dM` for the complete graph on two
/// vertices, by nested adaptive quadrature over `(log a, log b, t)` with
/// `M = [[a, t√(ab)], [t√(ab), b]]`.
pub fn log_complete2_integral(delta: f64, d: &Matrix) -> f64 {
    let k = 0.5 * (delta - 2.0);
    let (d11, d12, d22) = (d[(0, 0)], d[(0, 1)], d[(1, 1)]);
    // |M|^k dM = (ab)^k (1−t²)^k √(ab) da db dt, and da = a du
    let logf = move |u: f64, v: f64, t: f64| {
        let (a, b) = (u.exp(), v.exp());
        let r = (a * b).sqrt();
        k * (u + v) + k * (1.0 - t * t).ln() + 0.5 * (u + v) + u + v
            - 0.5 * (d11 * a + d22 * b + 2.0 * d12 * r * t)
    };
    // centre on the mode of the full Wishart kernel, (δ−2)D⁻¹ up to Jacobian shifts
    let det = d11 * d22 - d12 * d12;
    let scale = delta + 1.0;
    let (u0, v0) = ((scale * d22 / det).ln(), (scale * d11 / det).ln());
    let t0 = -d12 / (d11 * d22).sqrt();
    let shift = logf(u0, v0, t0);
    let width = 12.0 / (delta.sqrt()) + 1.0;
    let tol = 1e-9;
    let mut outer = |u: f64| {
        let mut mid = |v: f64| {
            let mut inner = |t: f64| (logf(u, v, t) - shift).exp();
            integrate(&mut inner, -1.0, 1.0, tol)
        };
        integrate(&mut mid, v0 - width, v0 + width, tol)
    };
    shift + integrate(&mut outer, u0 - width, u0 + width, tol).ln()
}
