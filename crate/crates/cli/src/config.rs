//! Flat `key = value` run configuration. Values come from an optional file,
//! then command-line flags; anything still unset takes its default.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use egw::posterior::ScoreMethod;
use egw::{ChainInit, Graph, GraphPrior, McmcConfig, MleConfig, PosteriorConfig, Proposal};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_DELTA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PriorKind {
    Bernoulli,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScoreKind {
    Cancelled,
    LaplaceRatio,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum InitKind {
    Empty,
    Random,
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ProposalKind {
    Uniform,
    AddRemove,
    AddRemoveUncorrected,
}

/// Every tunable of a fit. All fields optional so that file and flags can
/// be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// G-Wishart shape δ (> 2)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Fractional likelihood power α in (0,1)
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub prior: Option<PriorKind>,
    /// Edge probability of the Bernoulli prior
    #[arg(long)]
    pub q: Option<f64>,
    /// Truncation of the Bernoulli prior
    #[arg(long)]
    pub max_edges: Option<usize>,
    /// Coefficient a of the exponential prior
    #[arg(long)]
    pub prior_a: Option<f64>,
    #[arg(long)]
    pub mle_tol: Option<f64>,
    #[arg(long)]
    pub mle_max_iter: Option<usize>,
    /// Eigenvalue bound of the sieve MLE
    #[arg(long)]
    pub sieve_xi: Option<f64>,
    #[arg(long, value_enum)]
    pub score_method: Option<ScoreKind>,
    /// Samples per constant when score_method = monte_carlo
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub mc_seed: Option<u64>,
    /// Total MCMC iterations including burn-in
    #[arg(long)]
    pub n_iter: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Chain seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    #[arg(long)]
    pub init_q0: Option<f64>,
    /// Graph JSON for init = given
    #[arg(long)]
    pub init_graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub proposal: Option<ProposalKind>,
    /// LRU cap of the score cache (0 disables it)
    #[arg(long)]
    pub cache_cap: Option<usize>,
    /// Inclusion threshold of the median probability model
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub center: Option<bool>,
    #[arg(long)]
    pub standardize: Option<bool>,
}

/// Fully resolved fit settings, as stored in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub posterior: PosteriorConfig,
    pub mcmc: McmcConfig,
    pub threshold: f64,
    pub center: bool,
    pub standardize: bool,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            posterior: PosteriorConfig::new(DEFAULT_DELTA),
            mcmc: McmcConfig::default(),
            threshold: 0.5,
            center: true,
            standardize: false,
        }
    }
}

macro_rules! overlay {
    ($base:expr, $over:expr, $($f:ident),*) => {
        Settings { $($f: $over.$f.or($base.$f),)* }
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> CliResult<Settings> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Settings::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Settings> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// `self` with every field set in `over` replaced.
    pub fn overlay(self, over: Settings) -> Settings {
        overlay!(
            self,
            over,
            delta,
            alpha,
            prior,
            q,
            max_edges,
            prior_a,
            mle_tol,
            mle_max_iter,
            sieve_xi,
            score_method,
            mc_samples,
            mc_seed,
            n_iter,
            burn_in,
            thin,
            seed,
            init,
            init_q0,
            init_graph,
            proposal,
            cache_cap,
            threshold,
            center,
            standardize
        )
    }

    pub fn resolve(&self) -> CliResult<FitSettings> {
        let d = FitSettings::default();
        let delta = self.delta.unwrap_or(DEFAULT_DELTA);
        let prior = match self.prior.unwrap_or(PriorKind::Bernoulli) {
            PriorKind::Bernoulli => GraphPrior::Bernoulli {
                q: self.q.unwrap_or(0.45),
                max_edges: self.max_edges,
            },
            PriorKind::Exponential => GraphPrior::Exponential {
                a: self
                    .prior_a
                    .ok_or_else(|| CliError::Usage("exponential prior needs prior_a".into()))?,
            },
        };
        let mle = MleConfig {
            tol: self.mle_tol.unwrap_or(d.posterior.mle.tol),
            max_iter: self.mle_max_iter.unwrap_or(d.posterior.mle.max_iter),
            sieve_xi: self.sieve_xi,
        };
        let score_method = match self.score_method.unwrap_or(ScoreKind::Cancelled) {
            ScoreKind::Cancelled => ScoreMethod::Cancelled,
            ScoreKind::LaplaceRatio => ScoreMethod::LaplaceRatio,
            ScoreKind::MonteCarlo => ScoreMethod::MonteCarlo {
                n_samples: self.mc_samples.unwrap_or(10_000),
                seed: self.mc_seed.unwrap_or(0),
            },
        };
        let posterior = PosteriorConfig {
            delta,
            alpha: self.alpha.unwrap_or(d.posterior.alpha),
            prior,
            mle,
            score_method,
        };
        posterior.validate()?;
        let init = match self.init.unwrap_or(InitKind::Empty) {
            InitKind::Empty => ChainInit::Empty,
            InitKind::Random => ChainInit::Random {
                q0: self.init_q0.unwrap_or(0.5),
            },
            InitKind::Given => {
                let path = self
                    .init_graph
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("init = given needs init_graph".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                ChainInit::Given {
                    graph: Graph::from_json(&text)?,
                }
            }
        };
        let mcmc = McmcConfig {
            n_iter: self.n_iter.unwrap_or(d.mcmc.n_iter),
            burn_in: self.burn_in.unwrap_or(d.mcmc.burn_in),
            seed: self.seed.unwrap_or(d.mcmc.seed),
            thin: self.thin.unwrap_or(d.mcmc.thin),
            init,
            proposal: match self.proposal.unwrap_or(ProposalKind::Uniform) {
                ProposalKind::Uniform => Proposal::Uniform,
                ProposalKind::AddRemove => Proposal::AddRemove,
                ProposalKind::AddRemoveUncorrected => Proposal::AddRemoveUncorrected,
            },
            cache_cap: self.cache_cap,
            verify_warm_every: None,
        };
        mcmc.validate()?;
        let threshold = self.threshold.unwrap_or(d.threshold);
        if !(0.0..1.0).contains(&threshold) {
            return Err(CliError::Usage(format!(
                "threshold must lie in [0,1), got {threshold}"
            )));
        }
        Ok(FitSettings {
            posterior,
            mcmc,
            threshold,
            center: self.center.unwrap_or(d.center),
            standardize: self.standardize.unwrap_or(d.standardize),
        })
    }
}

impl FitSettings {
    /// Flat form of the resolved settings. A given initial graph is kept
    /// in the manifest only.
    pub fn to_settings(&self) -> Settings {
        let p = &self.posterior;
        let m = &self.mcmc;
        let (prior, q, max_edges, prior_a) = match p.prior {
            GraphPrior::Bernoulli { q, max_edges } => {
                (PriorKind::Bernoulli, Some(q), max_edges, None)
            }
            GraphPrior::Exponential { a } => (PriorKind::Exponential, None, None, Some(a)),
        };
        let (score_method, mc_samples, mc_seed) = match p.score_method {
            ScoreMethod::Cancelled => (ScoreKind::Cancelled, None, None),
            ScoreMethod::LaplaceRatio => (ScoreKind::LaplaceRatio, None, None),
            ScoreMethod::MonteCarlo { n_samples, seed } => {
                (ScoreKind::MonteCarlo, Some(n_samples), Some(seed))
            }
        };
        let (init, init_q0) = match &m.init {
            ChainInit::Empty => (InitKind::Empty, None),
            ChainInit::Random { q0 } => (InitKind::Random, Some(*q0)),
            ChainInit::Given { .. } => (InitKind::Given, None),
        };
        Settings {
            delta: Some(p.delta),
            alpha: Some(p.alpha),
            prior: Some(prior),
            q,
            max_edges,
            prior_a,
            mle_tol: Some(p.mle.tol),
            mle_max_iter: Some(p.mle.max_iter),
            sieve_xi: p.mle.sieve_xi,
            score_method: Some(score_method),
            mc_samples,
            mc_seed,
            n_iter: Some(m.n_iter),
            burn_in: Some(m.burn_in),
            thin: Some(m.thin),
            seed: Some(m.seed),
            init: Some(init),
            init_q0,
            init_graph: None,
            proposal: Some(match m.proposal {
                Proposal::Uniform => ProposalKind::Uniform,
                Proposal::AddRemove => ProposalKind::AddRemove,
                Proposal::AddRemoveUncorrected => ProposalKind::AddRemoveUncorrected,
            }),
            cache_cap: m.cache_cap,
            threshold: Some(self.threshold),
            center: Some(self.center),
            standardize: Some(self.standardize),
        }
    }

    pub fn to_config_text(&self) -> String {
        toml::to_string(&self.to_settings()).expect("flat settings serialise")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = Settings::parse(
            "delta = 6.0\nq = 0.3\nn_iter = 500\nburn_in = 100\nproposal = \"add_remove\"\n",
        )
        .unwrap();
        let flags = Settings {
            delta: Some(10.0),
            ..Settings::default()
        };
        let r = file.overlay(flags).resolve().unwrap();
        assert_eq!(r.posterior.delta, 10.0);
        assert_eq!(
            r.posterior.prior,
            GraphPrior::Bernoulli {
                q: 0.3,
                max_edges: None
            }
        );
        assert_eq!(r.mcmc.n_iter, 500);
        assert_eq!(r.mcmc.proposal, Proposal::AddRemove);
        assert!(r.center && !r.standardize);
    }

    #[test]
    fn config_text_round_trips() {
        let mut r = FitSettings::default();
        r.posterior.score_method = ScoreMethod::MonteCarlo {
            n_samples: 2000,
            seed: 7,
        };
        r.mcmc.init = ChainInit::Random { q0: 0.2 };
        let back = Settings::parse(&r.to_config_text())
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Settings::parse("bogus = 1").is_err());
        assert!(Settings::parse("delta = 2.0").unwrap().resolve().is_err());
        assert!(Settings::parse("n_iter = 10\nburn_in = 20")
            .unwrap()
            .resolve()
            .is_err());
        assert!(Settings::parse("prior = \"exponential\"")
            .unwrap()
            .resolve()
            .is_err());
    }
}
