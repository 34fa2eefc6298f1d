mod common;

use common::*;
use egw::estimation::{fit_mle, h_value, MleConfig, SampleCov};
use egw::graph::Graph;
use egw::gwishart::{
    analytic_log_norm, hessian_q, laplace_log_norm, log_density, mc_log_norm, mc_log_norm_with,
    GWishartParams, McConfig,
};
use egw::metrics::rel_error_lognorm;
use egw::simulate::model_ar2;
use egw::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[test]
fn hessian_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 3)]).unwrap();
    let s = SampleCov::new(random_spd(4, &mut rng), 20).unwrap();
    let om = fit_mle(&s, &g, &MleConfig::default()).unwrap().omega_hat;
    let q = hessian_q(&om, &g).unwrap();
    let idx = g.param_index();
    let bump = |m: &Matrix, a: usize, e: f64| {
        let mut m = m.clone();
        let (i, j) = idx.position(a);
        m[(i, j)] += e;
        if i != j {
            m[(j, i)] += e;
        }
        m
    };
    let h = |m: &Matrix| h_value(m, &om).unwrap();
    let e = 1e-4;
    for a in 0..idx.len() {
        for b in 0..idx.len() {
            let fd = (h(&bump(&bump(&om, a, e), b, e))
                - h(&bump(&bump(&om, a, e), b, -e))
                - h(&bump(&bump(&om, a, -e), b, e))
                + h(&bump(&bump(&om, a, -e), b, -e)))
                / (4.0 * e * e);
            assert!(
                (q[(a, b)] + fd).abs() < 1e-5,
                "Q[{a},{b}] = {} vs {}",
                q[(a, b)],
                -fd
            );
        }
    }
}

#[test]
fn scalar_constant_against_quadrature() {
    for &(delta, d) in &[(3.0, 0.5), (4.0, 2.0), (10.0, 7.5), (30.0, 1.0)] {
        let params = GWishartParams::new(delta, Matrix::from_diag(&[d]), Graph::empty(1)).unwrap();
        let exact = analytic_log_norm(&params).unwrap().log_value;
        let quad = log_gamma_integral((delta - 2.0) / 2.0, d);
        assert!((exact - quad).abs() < 1e-9, "δ={delta}: {exact} vs {quad}");
        // density integrates to one
        let mut f = |m: f64| {
            log_density(&Matrix::from_diag(&[m]), &params, exact)
                .unwrap()
                .exp()
        };
        let mass = integrate(&mut f, 1e-12, 40.0 * delta / d, 1e-12);
        assert!((mass - 1.0).abs() < 1e-8);
    }
}

#[test]
fn complete_pair_against_quadrature() {
    let d = Matrix::from_rows(&[vec![2.0, 0.6], vec![0.6, 1.5]]).unwrap();
    for delta in [4.0, 10.0] {
        let params = GWishartParams::new(delta, d.clone(), Graph::complete(2)).unwrap();
        let exact = analytic_log_norm(&params).unwrap().log_value;
        let quad = log_complete2_integral(delta, &d);
        assert!((exact - quad).abs() < 1e-6, "δ={delta}: {exact} vs {quad}");
    }
}

#[test]
fn monte_carlo_agrees_with_analytic_on_chordal_graphs() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for (k, g) in [Graph::path(5), Graph::band(6, 2), Graph::star(5)]
        .into_iter()
        .enumerate()
    {
        let d = random_spd(g.p(), &mut rng);
        let params = GWishartParams::new(5.0, d, g).unwrap();
        let exact = analytic_log_norm(&params).unwrap().log_value;
        let mc = mc_log_norm(&params, 20_000, 100 + k as u64).unwrap();
        assert!(mc.std_error > 0.0);
        assert!(
            (mc.log_value - exact).abs() < 4.0 * mc.std_error + 1e-3,
            "{} vs {exact}",
            mc.log_value
        );
    }
}

#[test]
fn monte_carlo_is_seeded_and_shardable() {
    let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    let params = GWishartParams::new(4.0, Matrix::identity(4), g).unwrap();
    let a = mc_log_norm(&params, 5000, 7).unwrap();
    let b = mc_log_norm(&params, 5000, 7).unwrap();
    assert_eq!(a, b);
    let cfg = McConfig {
        n_samples: 8000,
        seed: Some(7),
        shards: 4,
        ..McConfig::default()
    };
    let s1 = mc_log_norm_with(&params, &cfg).unwrap();
    let s2 = mc_log_norm_with(&params, &cfg).unwrap();
    assert_eq!(s1, s2);
    assert!((s1.log_value - a.log_value).abs() < 4.0 * (a.std_error + s1.std_error));
}

#[test]
fn laplace_error_shrinks_with_delta() {
    let truth = model_ar2::<f64>(10).unwrap();
    let g = truth.graph_star.clone();
    let inv = truth.omega_star.spd_inverse().unwrap();
    let mut last = f64::INFINITY;
    for delta in (4..=30).step_by(2).map(f64::from) {
        let params = GWishartParams::new(delta, inv.scale(delta - 2.0), g.clone()).unwrap();
        let exact = analytic_log_norm(&params).unwrap().log_value;
        let lap = laplace_log_norm(delta - 2.0, &truth.omega_star, &g)
            .unwrap()
            .log_value;
        let re = rel_error_lognorm(exact, lap).re;
        assert!(re <= last + 1e-12, "δ={delta}: {re} > {last}");
        last = re;
    }
}

#[test]
fn monte_carlo_stays_finite_on_large_sparse_graphs() {
    for seed in 0..3u64 {
        let t = egw::simulate::model_random::<f64>(50, seed).unwrap();
        let params = GWishartParams::new(
            10.0,
            t.omega_star.spd_inverse().unwrap().scale(8.0),
            t.graph_star.clone(),
        )
        .unwrap();
        let r = mc_log_norm(&params, 2000, seed).unwrap();
        assert!(r.log_value.is_finite() && r.std_error.is_finite(), "{r:?}");
    }
}
