mod common;

use common::*;
use egw::estimation::log_likelihood;
use egw::graph::Graph;
use egw::gwishart::{laplace_log_norm, log_density};
use egw::posterior::{
    conditional_posterior_params, log_graph_prior, prior_params, score_graph, ScoreMethod,
};
use egw::scalar::log_sum_exp;
use egw::simulate::{model_ar1, sample_mvn};
use egw::{GraphPrior, Matrix, PosteriorConfig, SampleCov};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn data(p: usize, n: usize, seed: u64) -> SampleCov {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    SampleCov::new(random_spd(p, &mut rng), n).unwrap()
}

#[test]
fn conjugacy_identity() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for case in 0..5 {
        let s = data(5, 40, case);
        let g = random_graph(5, 0.5, &mut rng);
        let cfg = PosteriorConfig::new(6.0);
        let sc = score_graph(&g, &s, &cfg, None).unwrap();
        let prior = prior_params(&sc.omega_hat, &g, &cfg).unwrap();
        let post = conditional_posterior_params(&sc.omega_hat, &s, &cfg).unwrap();
        let post = egw::gwishart::GWishartParams::new(post.delta, post.scale_d, g.clone()).unwrap();
        let vals: Vec<f64> = (0..50)
            .map(|_| {
                let om = random_in_pg(&g, &mut rng);
                cfg.alpha * log_likelihood(&om, &s).unwrap()
                    + log_density(&om, &prior, 0.0).unwrap()
                    - log_density(&om, &post, 0.0).unwrap()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / 50.0;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0;
        assert!(var < 1e-16, "variance {var}");
    }
}

#[test]
fn cancelled_score_equals_laplace_ratio() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for case in 0..10 {
        let s = data(6, 80, 10 + case);
        let g = random_graph(6, 0.4, &mut rng);
        // the cancellation uses tr(Σ̂Ω̂) = p, so solve the moment equations tightly
        let mut cfg = PosteriorConfig::new(5.0);
        cfg.mle.tol = 1e-13;
        let a = score_graph(&g, &s, &cfg, None).unwrap();
        let b0 = cfg.delta - 2.0;
        let b1 = cfg.posterior_b(s.n());
        let gauss = cfg.alpha * (s.n() * s.p()) as f64 / 2.0 * std::f64::consts::TAU.ln();
        let direct = a.log_prior - gauss
            + laplace_log_norm(b1, &a.omega_hat.omega_hat, &g)
                .unwrap()
                .log_value
            - laplace_log_norm(b0, &a.omega_hat.omega_hat, &g)
                .unwrap()
                .log_value;
        assert!((a.log_score - direct).abs() < 1e-10 * a.log_score.abs().max(1.0));
        cfg.score_method = ScoreMethod::LaplaceRatio;
        let b = score_graph(&g, &s, &cfg, None).unwrap();
        assert!((a.log_score - b.log_score).abs() < 1e-10 * a.log_score.abs().max(1.0));
        assert_eq!(a.log_score, a.log_prior + a.log_lik_alpha + a.dim_penalty);
    }
}

#[test]
fn prior_kinds_agree_on_differences() {
    let q = 0.3f64;
    let p = 7;
    let a = ((1.0 - q) / q).ln() / (p as f64).ln();
    let bern = GraphPrior::Bernoulli { q, max_edges: None };
    let expo = GraphPrior::Exponential { a };
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..50 {
        let g1 = random_graph(p, 0.4, &mut rng);
        let g2 = random_graph(p, 0.4, &mut rng);
        let d1 = log_graph_prior(&g1, &bern) - log_graph_prior(&g2, &bern);
        let d2 = log_graph_prior(&g1, &expo) - log_graph_prior(&g2, &expo);
        assert!((d1 - d2).abs() < 1e-12);
    }
}

#[test]
fn two_graph_scores_normalise() {
    let s = data(2, 100, 4);
    let cfg = PosteriorConfig::new(4.0);
    let a = score_graph(&Graph::empty(2), &s, &cfg, None)
        .unwrap()
        .log_score;
    let b = score_graph(&Graph::complete(2), &s, &cfg, None)
        .unwrap()
        .log_score;
    let z = log_sum_exp(&[a, b]);
    assert!(((a - z).exp() + (b - z).exp() - 1.0).abs() < 1e-12);
    assert_eq!(
        a,
        score_graph(&Graph::empty(2), &s, &cfg, None)
            .unwrap()
            .log_score
    );
}

#[test]
fn posterior_mode_is_mle() {
    let truth = model_ar1::<f64>(3).unwrap();
    let s = sample_mvn(&truth, 60, 5).unwrap().scov;
    let g = Graph::path(3);
    let cfg = PosteriorConfig::new(4.0);
    let sc = score_graph(&g, &s, &cfg, None).unwrap();
    let post = conditional_posterior_params(&sc.omega_hat, &s, &cfg).unwrap();
    // the mode maximises b/2 log|Ω| − ½tr(Σ̃Ω): an MLE with Σ̂ replaced by Σ̃/b
    let b = post.delta - 2.0;
    let mode = newton_mle(&post.scale_d.scale(1.0 / b), &g);
    assert!(mode.max_abs_diff(&sc.omega_hat.omega_hat) < 1e-6);
}

#[test]
fn two_graph_laplace_odds_near_exact() {
    let truth = model_ar1::<f64>(2).unwrap();
    for (seed, delta, tol) in [(1u64, 10.0, 0.1), (2, 20.0, 0.05), (3, 30.0, 0.05)] {
        let s = sample_mvn(&truth, 100, seed).unwrap().scov;
        let cfg = PosteriorConfig::new(delta);
        let mut exact = [0.0; 2];
        let mut lap = [0.0; 2];
        for (k, g) in [Graph::empty(2), Graph::complete(2)].iter().enumerate() {
            let sc = score_graph(g, &s, &cfg, None).unwrap();
            lap[k] = sc.log_score;
            let prior = prior_params(&sc.omega_hat, g, &cfg).unwrap();
            let post = conditional_posterior_params(&sc.omega_hat, &s, &cfg).unwrap();
            let analytic = egw::gwishart::analytic_log_norm(&prior).unwrap().log_value;
            assert!((analytic - exact_log_const(prior.delta, &prior.scale_d, g)).abs() < 1e-6);
            exact[k] = sc.log_prior + exact_log_const(post.delta, &post.scale_d, g)
                - exact_log_const(prior.delta, &prior.scale_d, g);
        }
        let lo = lap[1] - lap[0];
        let eo = exact[1] - exact[0];
        assert!((lo - eo).abs() < tol, "δ={delta}: {lo} vs {eo}");
    }
}

fn exact_log_const(delta: f64, d: &Matrix, g: &Graph) -> f64 {
    if g.n_edges() == 0 {
        (0..2)
            .map(|i| log_gamma_integral((delta - 2.0) / 2.0, d[(i, i)]))
            .sum()
    } else {
        log_complete2_integral(delta, d)
    }
}
