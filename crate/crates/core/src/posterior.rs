//! Graph priors, the fractional-likelihood conditional posterior, and the
//! unnormalised marginal posterior score of a graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_mle_warm, log_likelihood, MleConfig, PrecisionEstimate, SampleCov};
use crate::graph::Graph;
use crate::gwishart::{laplace_log_norm, mc_log_norm, GWishartParams};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphPrior<T> {
    /// `q^{|G|} (1−q)^{R̄−|G|}`, zero above `max_edges` when set.
    Bernoulli { q: T, max_edges: Option<usize> },
    /// `exp(−a·log(p)·|G|)`.
    Exponential { a: T },
}

impl<T: Real> Default for GraphPrior<T> {
    fn default() -> Self {
        GraphPrior::Bernoulli {
            q: T::lit(0.45),
            max_edges: None,
        }
    }
}

impl<T: Real> GraphPrior<T> {
    pub fn validate(&self, p: Option<usize>) -> Result<()> {
        match *self {
            GraphPrior::Bernoulli { q, max_edges } => {
                if !(q > T::zero() && q < T::one()) {
                    return Err(Error::InvalidConfig(format!(
                        "edge probability q must lie in (0,1), got {q}"
                    )));
                }
                if let (Some(r), Some(p)) = (max_edges, p) {
                    if r > crate::graph::max_edges(p) {
                        return Err(Error::InvalidConfig(format!(
                            "max_edges {r} exceeds p(p-1)/2"
                        )));
                    }
                }
            }
            GraphPrior::Exponential { a } => {
                if !(a > T::zero()) {
                    return Err(Error::InvalidConfig(format!(
                        "exponential prior needs a > 0, got {a}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How the ratio of normalising constants is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreMethod {
    /// Shared-mode Laplace approximations with the Hessian determinants cancelled.
    Cancelled,
    /// Separate Laplace approximations of both constants.
    LaplaceRatio,
    /// Monte Carlo estimates of both constants.
    MonteCarlo { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorConfig<T> {
    pub delta: T,
    pub alpha: T,
    pub prior: GraphPrior<T>,
    pub mle: MleConfig<T>,
    #[serde(default = "cancelled")]
    pub score_method: ScoreMethod,
}

fn cancelled() -> ScoreMethod {
    ScoreMethod::Cancelled
}

impl<T: Real> PosteriorConfig<T> {
    pub fn new(delta: T) -> Self {
        PosteriorConfig {
            delta,
            alpha: T::lit(0.99),
            prior: GraphPrior::default(),
            mle: MleConfig::default(),
            score_method: ScoreMethod::Cancelled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > T::lit(2.0)) {
            return Err(Error::InvalidConfig(format!(
                "delta must exceed 2, got {}",
                self.delta
            )));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        self.prior.validate(None)?;
        self.mle.validate()
    }

    /// `δ + αn − 2`, the exponent of the posterior kernel.
    pub fn posterior_b(&self, n: usize) -> T {
        self.delta + self.alpha * T::from_usize_lossy(n) - T::lit(2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphScore<T> {
    pub log_score: T,
    pub omega_hat: PrecisionEstimate<T>,
    pub log_prior: T,
    pub log_lik_alpha: T,
    pub dim_penalty: T,
}

/// Unnormalised log prior mass of a graph; `−∞` above a truncation.
pub fn log_graph_prior<T: Real>(g: &Graph, prior: &GraphPrior<T>) -> T {
    let size = T::from_usize_lossy(g.n_edges());
    match *prior {
        GraphPrior::Bernoulli { q, max_edges } => {
            if max_edges.is_some_and(|r| g.n_edges() > r) {
                return T::neg_infinity();
            }
            let rest = T::from_usize_lossy(g.max_edges() - g.n_edges());
            size * q.ln() + rest * (T::one() - q).ln()
        }
        GraphPrior::Exponential { a } => -a * T::from_usize_lossy(g.p()).ln() * size,
    }
}

/// Fits `Ω̂_G` and returns the unnormalised log marginal posterior of `g`.
pub fn score_graph<T: Real>(
    g: &Graph,
    scov: &SampleCov<T>,
    cfg: &PosteriorConfig<T>,
    warm: Option<&PrecisionEstimate<T>>,
) -> Result<GraphScore<T>> {
    cfg.validate()?;
    if g.p() != scov.p() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} vertices, data have {}",
            g.p(),
            scov.p()
        )));
    }
    let log_prior = log_graph_prior(g, &cfg.prior);
    if log_prior == T::neg_infinity() {
        let p = g.p();
        return Ok(GraphScore {
            log_score: T::neg_infinity(),
            omega_hat: PrecisionEstimate {
                omega_hat: Matrix::zeros(p, p),
                converged: false,
                iterations: 0,
                max_violation: T::infinity(),
            },
            log_prior,
            log_lik_alpha: T::zero(),
            dim_penalty: T::zero(),
        });
    }
    let est = fit_mle_warm(scov, g, &cfg.mle, warm.map(|w| &w.omega_hat))?;
    let log_lik_alpha = cfg.alpha * log_likelihood(&est.omega_hat, scov)?;
    let dim_penalty = match cfg.score_method {
        ScoreMethod::Cancelled => cancelled_penalty(g, scov.n(), cfg),
        ScoreMethod::LaplaceRatio => {
            let b0 = cfg.delta - T::lit(2.0);
            let b1 = cfg.posterior_b(scov.n());
            let ratio = laplace_log_norm(b1, &est.omega_hat, g)?.log_value
                - laplace_log_norm(b0, &est.omega_hat, g)?.log_value;
            ratio - log_lik_alpha - gaussian_const(scov, cfg.alpha)
        }
        ScoreMethod::MonteCarlo { n_samples, seed } => {
            let post = conditional_posterior_params_on(&est, g, scov, cfg)?;
            let prior = prior_params(&est, g, cfg)?;
            let ratio = mc_log_norm(&post, n_samples, seed)?.log_value
                - mc_log_norm(&prior, n_samples, seed)?.log_value;
            ratio - log_lik_alpha - gaussian_const(scov, cfg.alpha)
        }
    };
    Ok(GraphScore {
        log_score: log_prior + log_lik_alpha + dim_penalty,
        omega_hat: est,
        log_prior,
        log_lik_alpha,
        dim_penalty,
    })
}

/// `((p+|G|)/2) log((δ−2)/(δ+αn−2))`.
pub fn cancelled_penalty<T: Real>(g: &Graph, n: usize, cfg: &PosteriorConfig<T>) -> T {
    let d = T::from_usize_lossy(g.n_free_params());
    d * T::lit(0.5) * ((cfg.delta - T::lit(2.0)) / cfg.posterior_b(n)).ln()
}

/// `(αnp/2) log 2π`: the Gaussian normalising term absent from the ratio of
/// G-Wishart constants.
fn gaussian_const<T: Real>(scov: &SampleCov<T>, alpha: T) -> T {
    alpha * T::from_usize_lossy(scov.n() * scov.p()) * T::lit(0.5) * T::TAU().ln()
}

/// Empirical prior `W_G(δ, (δ−2)Ω̂⁻¹)`.
pub fn prior_params<T: Real>(
    est: &PrecisionEstimate<T>,
    g: &Graph,
    cfg: &PosteriorConfig<T>,
) -> Result<GWishartParams<T>> {
    let inv = est.omega_hat.spd_inverse()?;
    GWishartParams::new(cfg.delta, inv.scale(cfg.delta - T::lit(2.0)), g.clone())
}

/// Fractional posterior `W_G(δ+αn, αnΣ̂ + (δ−2)Ω̂⁻¹)`.
pub fn conditional_posterior_params<T: Real>(
    est: &PrecisionEstimate<T>,
    scov: &SampleCov<T>,
    cfg: &PosteriorConfig<T>,
) -> Result<GWishartParams<T>> {
    let g = Graph::from_support(&est.omega_hat, T::zero());
    let an = cfg.alpha * T::from_usize_lossy(scov.n());
    let inv = est.omega_hat.spd_inverse()?;
    let mut scale = &scov.sigma_hat().scale(an) + &inv.scale(cfg.delta - T::lit(2.0));
    scale.symmetrize();
    GWishartParams::new(cfg.delta + an, scale, g)
}

/// Like [`conditional_posterior_params`] for an explicit graph, which may be
/// denser than the support of `Ω̂`.
pub fn conditional_posterior_params_on<T: Real>(
    est: &PrecisionEstimate<T>,
    g: &Graph,
    scov: &SampleCov<T>,
    cfg: &PosteriorConfig<T>,
) -> Result<GWishartParams<T>> {
    let mut params = conditional_posterior_params(est, scov, cfg)?;
    params.graph = g.clone();
    Ok(params)
}
